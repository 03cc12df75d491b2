//! Amalgamation of two extensions of a 1-system.
//!
//! [`amalgamate_over_normal`] carries out the chain-by-chain tensor
//! construction over a normal base. [`amalgamate_greatest`] decides
//! amalgamability over any base by computing the largest consistent set of
//! tensor atoms; it serves as an independent check and as a search engine.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::algebra::{AmbientAlgebra, AtomId, Block};
use crate::chains::{decompose_iso, Normality, Orientation};
use crate::derivation::{derivation_fixed_point, ChainGrid, Grid};
use crate::error::{Error, Result};
use crate::system::{AlgebraEmbedding, PartialIso, PartialIsoSystem, SystemEmbedding};

/// An amalgam of two extensions together with the embeddings into it.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Amalgam {
    pub system: PartialIsoSystem,
    pub left: SystemEmbedding,
    pub right: SystemEmbedding,
}

/// An extension of a base system: the larger system and the embedding.
#[derive(Clone, Copy, Debug)]
pub struct Extension<'a> {
    pub system: &'a PartialIsoSystem,
    pub embedding: &'a SystemEmbedding,
}

impl<'a> Extension<'a> {
    pub fn new(system: &'a PartialIsoSystem, embedding: &'a SystemEmbedding) -> Self {
        Extension { system, embedding }
    }
}

fn check_extension(s: &PartialIsoSystem, ext: Extension<'_>) -> Result<()> {
    ext.embedding.check(s, ext.system)
}

/// Builds the amalgam whose atoms are `cells`, each a pair of a left atom
/// and a right atom, and checks everything it produces.
fn assemble(
    s: &PartialIsoSystem,
    left: Extension<'_>,
    right: Extension<'_>,
    cells: &[(AtomId, AtomId, AtomId)],
) -> Result<Amalgam> {
    let ambient = AmbientAlgebra::new(cells.iter().map(|c| c.0.clone()))?;
    let mut isos = Vec::new();
    for (pl, pr) in left.system.isos().iter().zip(right.system.isos()) {
        let mut pairs = Vec::new();
        for (b, c) in pl.pairs() {
            for (d, e) in pr.pairs() {
                let dom: Block = cells.iter().filter(|x| b.contains(&x.1) && d.contains(&x.2)).map(|x| x.0.clone()).collect();
                if dom.is_empty() {
                    continue;
                }
                let ran: Block = cells.iter().filter(|x| c.contains(&x.1) && e.contains(&x.2)).map(|x| x.0.clone()).collect();
                if ran.is_empty() {
                    return Err(Error::defect(format!("tensor block over {b:?}, {d:?} has an empty image")));
                }
                pairs.push((dom, ran));
            }
        }
        isos.push(PartialIso::new(&ambient, pairs).map_err(|e| Error::defect(format!("amalgam map: {e}")))?);
    }
    let system = PartialIsoSystem::new(ambient, isos)?;
    let side = |ext: &Extension<'_>, pick: fn(&(AtomId, AtomId, AtomId)) -> &AtomId| -> Result<SystemEmbedding> {
        let image = ext
            .system
            .ambient()
            .atoms()
            .iter()
            .map(|a| (a.clone(), cells.iter().filter(|c| pick(c) == a).map(|c| c.0.clone()).collect()))
            .collect();
        let e = SystemEmbedding { base: AlgebraEmbedding { image } };
        e.check(ext.system, &system).map_err(|e| Error::defect(format!("amalgam embedding: {e}")))?;
        Ok(e)
    };
    let l = side(&left, |c| &c.1)?;
    let r = side(&right, |c| &c.2)?;
    let via_left = left.embedding.then(&l);
    let via_right = right.embedding.then(&r);
    if via_left != via_right {
        return Err(Error::defect("amalgam square does not commute"));
    }
    via_left.check(s, &system).map_err(|e| Error::defect(format!("composite embedding: {e}")))?;
    Ok(Amalgam { system, left: l, right: r })
}

/// The largest set of same-base-atom pairs satisfying the transfer condition
/// for every map, or `None` when some atom of either side would be left
/// without a partner (and hence no amalgam exists).
pub fn greatest_selection(
    s: &PartialIsoSystem,
    left: Extension<'_>,
    right: Extension<'_>,
) -> Result<Option<BTreeSet<(AtomId, AtomId)>>> {
    check_extension(s, left)?;
    check_extension(s, right)?;
    let over_l = left.embedding.base.inverse_map();
    let over_r = right.embedding.base.inverse_map();
    let mut e: BTreeSet<(AtomId, AtomId)> = BTreeSet::new();
    for (x, t) in &over_l {
        for (y, u) in &over_r {
            if t == u {
                e.insert((x.clone(), y.clone()));
            }
        }
    }
    let hits = |e: &BTreeSet<(AtomId, AtomId)>, b: &Block, d: &Block| e.iter().any(|(x, y)| b.contains(x) && d.contains(y));
    loop {
        let mut doomed: Vec<(Block, Block)> = Vec::new();
        for (pl, pr) in left.system.isos().iter().zip(right.system.isos()) {
            for (b, c) in pl.pairs() {
                for (d, f) in pr.pairs() {
                    let before = hits(&e, b, d);
                    let after = hits(&e, c, f);
                    if before && !after {
                        doomed.push((b.clone(), d.clone()));
                    } else if after && !before {
                        doomed.push((c.clone(), f.clone()));
                    }
                }
            }
        }
        if doomed.is_empty() {
            break;
        }
        e.retain(|(x, y)| !doomed.iter().any(|(b, d)| b.contains(x) && d.contains(y)));
    }
    let rows: BTreeSet<&AtomId> = e.iter().map(|p| &p.0).collect();
    let cols: BTreeSet<&AtomId> = e.iter().map(|p| &p.1).collect();
    if rows.len() != over_l.len() || cols.len() != over_r.len() {
        return Ok(None);
    }
    Ok(Some(e))
}

/// Amalgamates two extensions of any base, or reports that none exists.
/// Atoms of the amalgam are labelled `i.j` by the positions of their left
/// and right atoms.
pub fn amalgamate_greatest(s: &PartialIsoSystem, left: Extension<'_>, right: Extension<'_>) -> Result<Option<Amalgam>> {
    if left.system.arity() != s.arity() || right.system.arity() != s.arity() {
        return Err(Error::ArityMismatch { left: left.system.arity(), right: right.system.arity() });
    }
    let Some(e) = greatest_selection(s, left, right)? else { return Ok(None) };
    let li = |a: &AtomId| left.system.ambient().index_of(a).expect("left atom");
    let ri = |a: &AtomId| right.system.ambient().index_of(a).expect("right atom");
    let cells: Vec<(AtomId, AtomId, AtomId)> =
        e.into_iter().map(|(x, y)| (AtomId::new(format!("{}.{}", li(&x), ri(&y))), x, y)).collect();
    assemble(s, left, right, &cells).map(Some)
}

/// Amalgamates two extensions of any base with few atoms, or reports that
/// none exists. Starting from tensor atoms covering both sides, atoms of the
/// greatest selection are added until every map's transfer condition
/// holds, preferring atoms that open no new obligation. An atom keeps its
/// left atom's label, extended by the position of its right atom when the
/// left atom is split, so the left embedding is by lineage.
pub fn amalgamate_least(s: &PartialIsoSystem, left: Extension<'_>, right: Extension<'_>) -> Result<Option<Amalgam>> {
    if left.system.arity() != s.arity() || right.system.arity() != s.arity() {
        return Err(Error::ArityMismatch { left: left.system.arity(), right: right.system.arity() });
    }
    let Some(g) = greatest_selection(s, left, right)? else { return Ok(None) };
    let cells: Vec<(AtomId, AtomId)> = g.into_iter().collect();
    let n = cells.len();
    // For each map, the domain and range tensor blocks of every cell, both
    // keyed by the pair of pair positions, so that key k maps to key k.
    let pos_of = |pairs: &[(Block, Block)], a: &AtomId, range: bool| -> usize {
        pairs.iter().position(|(b, c)| if range { c.contains(a) } else { b.contains(a) }).expect("maps cover the ambient")
    };
    let arity = s.arity();
    let mut dom_key = vec![vec![(0, 0); n]; arity];
    let mut ran_key = vec![vec![(0, 0); n]; arity];
    for (k, (pl, pr)) in left.system.isos().iter().zip(right.system.isos()).enumerate() {
        for (c, (x, y)) in cells.iter().enumerate() {
            dom_key[k][c] = (pos_of(pl.pairs(), x, false), pos_of(pr.pairs(), y, false));
            ran_key[k][c] = (pos_of(pl.pairs(), x, true), pos_of(pr.pairs(), y, true));
        }
    }
    let mut by_dom: Vec<BTreeMap<(usize, usize), Vec<usize>>> = vec![BTreeMap::new(); arity];
    let mut by_ran: Vec<BTreeMap<(usize, usize), Vec<usize>>> = vec![BTreeMap::new(); arity];
    for k in 0..arity {
        for c in 0..n {
            by_dom[k].entry(dom_key[k][c]).or_default().push(c);
            by_ran[k].entry(ran_key[k][c]).or_default().push(c);
        }
    }

    struct State {
        chosen: Vec<bool>,
        dom_occ: Vec<BTreeMap<(usize, usize), usize>>,
        ran_occ: Vec<BTreeMap<(usize, usize), usize>>,
        // (map, needs a range atom, key)
        open: BTreeSet<(usize, bool, (usize, usize))>,
    }
    let mut st = State { chosen: vec![false; n], dom_occ: vec![BTreeMap::new(); arity], ran_occ: vec![BTreeMap::new(); arity], open: BTreeSet::new() };
    let add = |st: &mut State, c: usize| {
        st.chosen[c] = true;
        for k in 0..arity {
            let (dk, rk) = (dom_key[k][c], ran_key[k][c]);
            let d = st.dom_occ[k].entry(dk).or_insert(0);
            *d += 1;
            if *d == 1 {
                if st.ran_occ[k].get(&dk).copied().unwrap_or(0) == 0 {
                    st.open.insert((k, true, dk));
                } else {
                    st.open.remove(&(k, false, dk));
                }
            }
            let r = st.ran_occ[k].entry(rk).or_insert(0);
            *r += 1;
            if *r == 1 {
                if st.dom_occ[k].get(&rk).copied().unwrap_or(0) == 0 {
                    st.open.insert((k, false, rk));
                } else {
                    st.open.remove(&(k, true, rk));
                }
            }
        }
    };
    // Obligations a new atom would open.
    let cost = |st: &State, c: usize| -> usize {
        (0..arity)
            .map(|k| {
                let (dk, rk) = (dom_key[k][c], ran_key[k][c]);
                let d_new = !st.dom_occ[k].contains_key(&dk) && !st.ran_occ[k].contains_key(&dk);
                let r_new = !st.ran_occ[k].contains_key(&rk) && !st.dom_occ[k].contains_key(&rk);
                usize::from(d_new) + usize::from(r_new)
            })
            .sum()
    };

    // Seed: one atom per left atom, spreading over right atoms, then one per
    // right atom still uncovered.
    let mut col_used: BTreeSet<&AtomId> = BTreeSet::new();
    let mut row_used: BTreeSet<&AtomId> = BTreeSet::new();
    for (c, (x, _)) in cells.iter().enumerate() {
        if row_used.contains(x) {
            continue;
        }
        let pick = (c..n)
            .take_while(|&i| cells[i].0 == *x)
            .find(|&i| !col_used.contains(&cells[i].1))
            .unwrap_or(c);
        add(&mut st, pick);
        row_used.insert(&cells[pick].0);
        col_used.insert(&cells[pick].1);
    }
    for c in 0..n {
        if !col_used.contains(&cells[c].1) {
            col_used.insert(&cells[c].1);
            add(&mut st, c);
        }
    }
    while let Some(&(k, need_range, key)) = st.open.iter().next() {
        let pool = if need_range { &by_ran[k] } else { &by_dom[k] };
        let best = pool
            .get(&key)
            .into_iter()
            .flatten()
            .copied()
            .filter(|&c| !st.chosen[c])
            .min_by_key(|&c| (cost(&st, c), c))
            .ok_or_else(|| Error::defect("greatest selection leaves a transfer obligation unmet"))?;
        add(&mut st, best);
    }

    let ri = |a: &AtomId| right.system.ambient().index_of(a).expect("right atom");
    let mut per_row: BTreeMap<&AtomId, usize> = BTreeMap::new();
    for (c, (x, _)) in cells.iter().enumerate() {
        if st.chosen[c] {
            *per_row.entry(x).or_insert(0) += 1;
        }
    }
    let labelled: Vec<(AtomId, AtomId, AtomId)> = cells
        .iter()
        .enumerate()
        .filter(|(c, _)| st.chosen[*c])
        .map(|(_, (x, y))| {
            let label = if per_row[x] == 1 { x.clone() } else { x.extend(ri(y)) };
            (label, x.clone(), y.clone())
        })
        .collect();
    assemble(s, left, right, &labelled).map(Some)
}

/// Joint embedding by products of atoms: the maps act coordinatewise. Atoms
/// of the result are labelled `i.j` by the positions of their factors.
pub fn jep_boolean(s: &PartialIsoSystem, t: &PartialIsoSystem) -> Result<Amalgam> {
    if s.arity() != t.arity() {
        return Err(Error::ArityMismatch { left: s.arity(), right: t.arity() });
    }
    let base = PartialIsoSystem::trivial(s.arity());
    let onto = |x: &PartialIsoSystem| SystemEmbedding {
        base: AlgebraEmbedding { image: BTreeMap::from([(base.ambient().atoms()[0].clone(), x.ambient().top())]) },
    };
    let (es, et) = (onto(s), onto(t));
    let mut cells = Vec::new();
    for (i, x) in s.ambient().atoms().iter().enumerate() {
        for (j, y) in t.ambient().atoms().iter().enumerate() {
            cells.push((AtomId::new(format!("{i}.{j}")), x.clone(), y.clone()));
        }
    }
    assemble(&base, Extension::new(s, &es), Extension::new(t, &et), &cells)
}

/// A working copy of one extension in which every atom remembers the base
/// atom it lies over. Atoms are split by lineage and blocks are cut, always
/// keeping the map a partial isomorphism that extends the original.
#[derive(Clone, Debug)]
struct Side {
    over: BTreeMap<AtomId, AtomId>,
    pairs: BTreeMap<Block, Block>,
}

impl Side {
    fn new(ext: Extension<'_>) -> Self {
        Side {
            over: ext.embedding.base.inverse_map(),
            pairs: ext.system.iso().expect("1-system").pairs().iter().cloned().collect(),
        }
    }

    fn flip(&mut self) {
        self.pairs = self.pairs.iter().map(|(b, c)| (c.clone(), b.clone())).collect();
    }

    fn atoms_over(&self, t: &AtomId) -> Vec<AtomId> {
        self.over.iter().filter(|(_, u)| *u == t).map(|(a, _)| a.clone()).collect()
    }

    fn region(&self, b: &Block) -> BTreeSet<&AtomId> {
        b.iter().map(|a| &self.over[a]).collect()
    }

    fn domain_over(&self, t: &AtomId) -> Vec<Block> {
        self.pairs.keys().filter(|b| self.over[b.first().expect("nonempty")] == *t).cloned().collect()
    }

    fn range_over(&self, t: &AtomId) -> Vec<Block> {
        self.pairs.values().filter(|c| self.over[c.first().expect("nonempty")] == *t).cloned().collect()
    }

    /// Splits atom `u` into `k` lineage children and returns them.
    fn split(&mut self, u: &AtomId, k: usize) -> Block {
        let kids: Block = (0..k).map(|i| u.child(i)).collect();
        let t = self.over.remove(u).expect("known atom");
        for c in &kids {
            self.over.insert(c.clone(), t.clone());
        }
        let sub = |b: &Block| -> Block {
            if b.contains(u) {
                let mut b = b.clone();
                b.remove(u);
                b.extend(kids.iter().cloned());
                b
            } else {
                b.clone()
            }
        };
        self.pairs = self.pairs.iter().map(|(b, c)| (sub(b), sub(c))).collect();
        kids
    }

    /// Replaces domain block `beta` by `parts` and cuts its image into
    /// matching pieces, splitting an image atom first if it is too small.
    fn refine_domain(&mut self, beta: &Block, mut parts: Vec<Block>) {
        let r = parts.len();
        if r < 2 {
            return;
        }
        let mut beta = beta.clone();
        let image = self.pairs[&beta].clone();
        if image.len() < r {
            let u = image.last().expect("nonempty").clone();
            let kids = self.split(&u, r - image.len() + 1);
            for p in parts.iter_mut().chain(std::iter::once(&mut beta)) {
                if p.remove(&u) {
                    p.extend(kids.iter().cloned());
                }
            }
        }
        let image = self.pairs.remove(&beta).expect("domain block");
        let v: Vec<&AtomId> = image.iter().collect();
        for (l, p) in parts.into_iter().enumerate() {
            let piece: Block =
                if l + 1 < r { Block::from([v[l].clone()]) } else { v[r - 1..].iter().map(|a| (*a).clone()).collect() };
            self.pairs.insert(p, piece);
        }
    }

    fn refine_range(&mut self, gamma: &Block, parts: Vec<Block>) {
        self.flip();
        self.refine_domain(gamma, parts);
        self.flip();
    }

    /// Cuts every domain block lying over several base atoms into its parts
    /// over each base atom; the same for range blocks.
    fn align(&mut self) {
        for _ in 0..2 {
            loop {
                let wide = self.pairs.keys().find(|b| self.region(b).len() > 1).cloned();
                let Some(beta) = wide else { break };
                let mut parts: BTreeMap<AtomId, Block> = BTreeMap::new();
                for a in &beta {
                    parts.entry(self.over[a].clone()).or_default().insert(a.clone());
                }
                self.refine_domain(&beta, parts.into_values().collect());
            }
            self.flip();
        }
    }

    /// Makes the domain partition over `t` at least as fine as the range
    /// partition there.
    fn domain_below_range(&mut self, t: &AtomId) {
        loop {
            let ranges = self.range_over(t);
            let target = self.domain_over(t).into_iter().find_map(|b| {
                let parts: Vec<Block> =
                    ranges.iter().map(|c| b.intersection(c).cloned().collect::<Block>()).filter(|p| !p.is_empty()).collect();
                (parts.len() > 1).then_some((b, parts))
            });
            let Some((b, parts)) = target else { break };
            self.refine_domain(&b, parts);
        }
    }

    /// Makes the range partition over `t` equal to the (finer) domain
    /// partition there.
    fn range_to_domain(&mut self, t: &AtomId) {
        loop {
            let doms = self.domain_over(t);
            let target = self.range_over(t).into_iter().find_map(|c| {
                let parts: Vec<Block> = doms.iter().filter(|b| b.is_subset(&c)).cloned().collect();
                (parts.len() > 1).then_some((c, parts))
            });
            let Some((c, parts)) = target else { break };
            self.refine_range(&c, parts);
        }
    }

    fn pad(&mut self, t: &AtomId, k: usize) {
        let atoms = self.atoms_over(t);
        if atoms.len() < k {
            let u = atoms.last().expect("every base atom has a preimage").clone();
            self.split(&u, k - atoms.len() + 1);
        }
    }

    fn index(&self, t: &AtomId) -> BTreeMap<AtomId, usize> {
        self.atoms_over(t).into_iter().enumerate().map(|(i, a)| (a, i)).collect()
    }

    fn to_system(&self) -> Result<PartialIsoSystem> {
        let ambient = AmbientAlgebra::new(self.over.keys().cloned())?;
        let iso = PartialIso::new(&ambient, self.pairs.clone().into_iter().collect())?;
        PartialIsoSystem::single(ambient, iso)
    }
}

/// One thread of a stable chain on one side: its block over each term and
/// the range block it finally lands on.
struct Thread {
    blocks: Vec<Block>,
    landing: Block,
    landing_over: AtomId,
}

fn threads(side: &Side, terms: &[AtomId]) -> Vec<Thread> {
    let mut out = Vec::new();
    for start in side.domain_over(&terms[0]) {
        let mut blocks = vec![start.clone()];
        let mut cur = side.pairs[&start].clone();
        for _ in 1..terms.len() {
            blocks.push(cur.clone());
            cur = side.pairs[&cur].clone();
        }
        let landing_over = side.over[cur.first().expect("nonempty")].clone();
        out.push(Thread { blocks, landing: cur, landing_over });
    }
    out
}

fn landing_on<'a>(th: &'a [Thread], t: &AtomId) -> Vec<&'a Thread> {
    th.iter().filter(|x| &x.landing_over == t).collect()
}

fn indices(idx: &BTreeMap<AtomId, usize>, b: &Block) -> BTreeSet<usize> {
    b.iter().map(|a| idx[a]).collect()
}

/// Tensor-atom selection over one base atom: pairs of left and right
/// positions among the atoms lying over it.
pub type Selection = BTreeMap<AtomId, Grid>;

/// Runs the tensor construction over a normal base. Both extensions are
/// first refined (by lineage splitting) so that every block lies over one
/// base atom, partitions agree along each stable chain, and every base atom
/// has the same number of atoms over it on both sides.
pub fn amalgamate_over_normal(s: &PartialIsoSystem, left: Extension<'_>, right: Extension<'_>) -> Result<Amalgam> {
    let (amalgam, _) = amalgamate_over_normal_with_selection(s, left, right)?;
    Ok(amalgam)
}

pub fn amalgamate_over_normal_with_selection(
    s: &PartialIsoSystem,
    left: Extension<'_>,
    right: Extension<'_>,
) -> Result<(Amalgam, Selection)> {
    let iso = s.iso()?;
    left.system.iso()?;
    right.system.iso()?;
    check_extension(s, left)?;
    check_extension(s, right)?;
    let chains = match decompose_iso(iso) {
        Normality::Normal(d) => d,
        Normality::NotNormal(r) => {
            return Err(Error::NotNormal(format!("block {:?} violates normality; normalize the base first", r.block)))
        }
    };

    let mut sides = [Side::new(left), Side::new(right)];
    for side in &mut sides {
        side.align();
        for ch in &chains.stable {
            let flip = ch.orientation == Orientation::II;
            if flip {
                side.flip();
            }
            for t in &ch.terms[1..] {
                side.domain_below_range(t);
            }
            for t in ch.terms[1..].iter().rev() {
                side.range_to_domain(t);
            }
            if flip {
                side.flip();
            }
        }
    }
    let k = s
        .ambient()
        .atoms()
        .iter()
        .flat_map(|t| sides.iter().map(move |side| side.atoms_over(t).len()))
        .max()
        .unwrap_or(1);
    for side in &mut sides {
        for t in s.ambient().atoms() {
            side.pad(t, k);
        }
    }

    let full: Grid = (0..k).flat_map(|i| (0..k).map(move |j| (i, j))).collect();
    let mut selection: Selection = s.ambient().atoms().iter().map(|t| (t.clone(), full.clone())).collect();

    for ch in &chains.stable {
        let mut oriented = sides.clone();
        if ch.orientation == Orientation::II {
            oriented.iter_mut().for_each(Side::flip);
        }
        let t0 = &ch.terms[0];
        let [tl, tr] = [threads(&oriented[0], &ch.terms), threads(&oriented[1], &ch.terms)];
        let idx = |side: &Side, t: &AtomId| side.index(t);
        let (il, ir) = (idx(&oriented[0], t0), idx(&oriented[1], t0));
        let (rl, rr) = (landing_on(&tl, t0), landing_on(&tr, t0));
        let to_free = landing_on;
        let grid = ChainGrid {
            k_left: k,
            k_right: k,
            gamma_left: rl.iter().map(|x| indices(&il, &x.blocks[0])).collect(),
            gamma_right: rr.iter().map(|x| indices(&ir, &x.blocks[0])).collect(),
            lambda_left: rl.iter().map(|x| indices(&il, &x.landing)).collect(),
            lambda_right: rr.iter().map(|x| indices(&ir, &x.landing)).collect(),
            delta_left: ch.free.iter().map(|f| to_free(&tl, f).iter().map(|x| indices(&il, &x.blocks[0])).collect()).collect(),
            delta_right: ch.free.iter().map(|f| to_free(&tr, f).iter().map(|x| indices(&ir, &x.blocks[0])).collect()).collect(),
        };
        grid.check().map_err(|e| Error::defect(format!("chain partition data: {e}")))?;
        let fixed = derivation_fixed_point(&grid.initial(), &grid)?;
        selection.insert(t0.clone(), fixed.clone());
        for (pos, t) in ch.terms.iter().enumerate().skip(1) {
            let (jl, jr) = (idx(&oriented[0], t), idx(&oriented[1], t));
            let mut cells = Grid::new();
            for (e, x) in rl.iter().enumerate() {
                for (d, y) in rr.iter().enumerate() {
                    let window = crate::derivation::product(&grid.gamma_left[e], &grid.gamma_right[d]).any(|c| fixed.contains(&c));
                    if window {
                        cells.extend(crate::derivation::product(&indices(&jl, &x.blocks[pos]), &indices(&jr, &y.blocks[pos])));
                    }
                }
            }
            for f in &ch.free {
                for x in to_free(&tl, f) {
                    for y in to_free(&tr, f) {
                        cells.extend(crate::derivation::product(&indices(&jl, &x.blocks[pos]), &indices(&jr, &y.blocks[pos])));
                    }
                }
            }
            selection.insert(t.clone(), cells);
        }
    }

    let refined: Vec<PartialIsoSystem> = sides.iter().map(Side::to_system).collect::<Result<_>>()?;
    verify_selection(s, &refined[0], &refined[1], &sides[0].over, &sides[1].over, &selection)
        .map_err(|e| Error::defect(format!("selection fails {e}")))?;

    let lin = |src: Extension<'_>, dst: &PartialIsoSystem| -> Result<SystemEmbedding> {
        let e = SystemEmbedding { base: AlgebraEmbedding::by_lineage(src.system.ambient(), dst.ambient())? };
        e.check(src.system, dst).map_err(|e| Error::defect(format!("working refinement: {e}")))?;
        Ok(e)
    };
    let (to_l, to_r) = (lin(left, &refined[0])?, lin(right, &refined[1])?);
    let base_l = left.embedding.then(&to_l);
    let base_r = right.embedding.then(&to_r);

    let mut cells = Vec::new();
    for (t, grid) in &selection {
        let al = sides[0].atoms_over(t);
        let ar = sides[1].atoms_over(t);
        for &(i, j) in grid {
            cells.push((t.extend(i).extend(j), al[i].clone(), ar[j].clone()));
        }
    }
    let inner = assemble(s, Extension::new(&refined[0], &base_l), Extension::new(&refined[1], &base_r), &cells)?;
    let amalgam = Amalgam { system: inner.system, left: to_l.then(&inner.left), right: to_r.then(&inner.right) };
    amalgam.left.check(left.system, &amalgam.system)?;
    amalgam.right.check(right.system, &amalgam.system)?;
    if left.embedding.then(&amalgam.left) != right.embedding.then(&amalgam.right) {
        return Err(Error::defect("amalgam square does not commute"));
    }
    Ok((amalgam, selection))
}

/// Checks the four conditions on a selection over aligned refinements:
/// every left and every right atom has a partner; the map's transfer
/// condition holds on every pair of domain blocks over one base atom; pairs
/// of domain (or range) blocks whose images (or preimages) lie over distinct
/// base atoms select nothing.
pub fn verify_selection(
    s: &PartialIsoSystem,
    left: &PartialIsoSystem,
    right: &PartialIsoSystem,
    over_l: &BTreeMap<AtomId, AtomId>,
    over_r: &BTreeMap<AtomId, AtomId>,
    sel: &Selection,
) -> std::result::Result<(), String> {
    let pos = |over: &BTreeMap<AtomId, AtomId>| -> BTreeMap<AtomId, (AtomId, usize)> {
        let mut count: BTreeMap<&AtomId, usize> = BTreeMap::new();
        over.iter()
            .map(|(a, t)| {
                let c = count.entry(t).or_default();
                *c += 1;
                (a.clone(), (t.clone(), *c - 1))
            })
            .collect()
    };
    let (pl, pr) = (pos(over_l), pos(over_r));
    for t in s.ambient().atoms() {
        let grid = sel.get(t).ok_or_else(|| format!("no selection over {t}"))?;
        let kl = over_l.values().filter(|u| *u == t).count();
        let kr = over_r.values().filter(|u| *u == t).count();
        if (0..kl).any(|i| !grid.iter().any(|c| c.0 == i)) {
            return Err(format!("(a) over {t}"));
        }
        if (0..kr).any(|j| !grid.iter().any(|c| c.1 == j)) {
            return Err(format!("(b) over {t}"));
        }
    }
    fn region(p: &BTreeMap<AtomId, (AtomId, usize)>, b: &Block) -> std::result::Result<(AtomId, BTreeSet<usize>), String> {
        let t = p[b.first().expect("nonempty")].0.clone();
        if b.iter().any(|a| p[a].0 != t) {
            return Err(format!("block {b:?} is not aligned"));
        }
        Ok((t, b.iter().map(|a| p[a].1).collect()))
    }
    let hit = |t: &AtomId, a: &BTreeSet<usize>, b: &BTreeSet<usize>| sel[t].iter().any(|c| a.contains(&c.0) && b.contains(&c.1));
    let (il, ir) = (left.iso().map_err(|e| e.to_string())?, right.iso().map_err(|e| e.to_string())?);
    for (b, c) in il.pairs() {
        for (d, e) in ir.pairs() {
            let (tb, xb) = region(&pl, b)?;
            let (td, xd) = region(&pr, d)?;
            let (tc, xc) = region(&pl, c)?;
            let (te, xe) = region(&pr, e)?;
            if tb == td {
                if tc != te {
                    if hit(&tb, &xb, &xd) {
                        return Err(format!("(d) over {tb}"));
                    }
                } else if hit(&tb, &xb, &xd) != hit(&tc, &xc, &xe) {
                    return Err(format!("(c) over {tb} and {tc}"));
                }
            } else if tc == te && hit(&tc, &xc, &xe) {
                return Err(format!("(d) dual over {tc}"));
            }
        }
    }
    Ok(())
}
