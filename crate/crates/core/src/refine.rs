//! Refinement of a partial automorphism to normal form.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::algebra::{AmbientAlgebra, AtomId, Block};
use crate::chains::{decompose_iso, ChainDecomposition, Normality, Trace, View};
use crate::error::{Error, Result};
use crate::system::{AlgebraEmbedding, PartialIso, PartialIsoSystem, SystemEmbedding};

/// A refined system together with the lineage embedding from its source.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Refinement {
    pub system: PartialIsoSystem,
    pub embedding: SystemEmbedding,
    /// Number of wide blocks ending no stable chain, before each step and
    /// after the last one.
    pub violation_counts: Vec<usize>,
}

type Pairs = BTreeMap<Block, Block>;

fn swap(pairs: &Pairs) -> Pairs {
    pairs.iter().map(|(b, c)| (c.clone(), b.clone())).collect()
}

/// Wide domain and range blocks that end no stable chain.
pub fn violation_count(iso: &PartialIso) -> usize {
    let view = View::new(iso);
    let inv = view.flipped();
    let bad = |v: &View| v.wide_domain().filter(|x| !matches!(v.trace(x), Trace::Closes(_))).count();
    bad(&view) + bad(&inv)
}

fn single(a: &AtomId) -> Block {
    Block::from([a.clone()])
}

/// Cuts a sorted atom list into `r` pieces: the first `r - 1` atoms on their
/// own, the remaining atoms together.
fn pieces(atoms: &Block, r: usize) -> Vec<Block> {
    let v: Vec<&AtomId> = atoms.iter().collect();
    let mut out: Vec<Block> = v[..r - 1].iter().map(|a| single(a)).collect();
    out.push(v[r - 1..].iter().map(|a| (*a).clone()).collect());
    out
}

/// The chain from `x` stops at the wide range block `y` after the single
/// atoms `seq`: cut `x` and `y` into matching pieces and split every atom of
/// `seq` so that each piece gets its own thread.
fn split_through(pairs: &mut Pairs, x: &Block, seq: &[AtomId], y: &Block) {
    let r = x.len().min(y.len());
    pairs.remove(x);
    for a in seq {
        pairs.remove(&single(a));
    }
    let cs = pieces(x, r);
    let ds = pieces(y, r);
    for l in 0..r {
        let mut thread: Vec<Block> = vec![cs[l].clone()];
        thread.extend(seq.iter().map(|a| single(&a.child(l))));
        thread.push(ds[l].clone());
        for w in thread.windows(2) {
            pairs.insert(w[0].clone(), w[1].clone());
        }
    }
}

/// The chain from `x` leaves through the single atom `seq[n]`, which is not
/// a domain block and lies outside `x`: split every atom of `seq` into one
/// part per atom of `x`, and send each atom of `x` down its own thread.
fn split_out(pairs: &mut Pairs, x: &Block, seq: &[AtomId]) {
    let p = x.len();
    let last = seq.last().expect("nonempty sequence");
    pairs.remove(x);
    for a in &seq[..seq.len() - 1] {
        pairs.remove(&single(a));
    }
    let host = pairs.keys().find(|b| b.contains(last)).expect("atom lies in a domain block").clone();
    let image = pairs.remove(&host).expect("domain block");
    let mut widened = host;
    widened.remove(last);
    widened.extend((0..p).map(|l| last.child(l)));
    pairs.insert(widened, image);
    for (l, c) in x.iter().enumerate() {
        let mut thread = vec![single(c)];
        thread.extend(seq.iter().map(|a| single(&a.child(l))));
        for w in thread.windows(2) {
            pairs.insert(w[0].clone(), w[1].clone());
        }
    }
}

/// One induction step on the least violating block, domain side first.
/// Returns false when nothing violates.
fn step(pairs: &mut Pairs) -> bool {
    let iso = PartialIso::from_pairs_unchecked(pairs.clone().into_iter().collect());
    let view = View::new(&iso);
    for flip in [false, true] {
        let v = if flip { view.flipped() } else { View::new(&iso) };
        let found = v.wide_domain().find_map(|x| match v.trace(x) {
            Trace::Closes(_) => None,
            t => Some((x.clone(), t)),
        });
        let Some((x, t)) = found else { continue };
        let mut work = if flip { swap(pairs) } else { pairs.clone() };
        match t {
            Trace::Wide { seq, end } => split_through(&mut work, &x, &seq, &end),
            Trace::Leaves(seq) => split_out(&mut work, &x, &seq),
            Trace::Closes(_) => unreachable!(),
        }
        *pairs = if flip { swap(&work) } else { work };
        return true;
    }
    false
}

/// Refines a 1-system until every wide domain or range block ends a stable
/// chain. Split atoms get lineage labels, so the source embeds by lineage.
pub fn refine_condition_i(s: &PartialIsoSystem) -> Result<Refinement> {
    let iso = s.iso()?;
    let mut pairs: Pairs = iso.pairs().iter().cloned().collect();
    let mut counts = vec![violation_count(iso)];
    // Each step removes at least one violation.
    for _ in 0..=counts[0] {
        if !step(&mut pairs) {
            break;
        }
        let next = PartialIso::from_pairs_unchecked(pairs.clone().into_iter().collect());
        counts.push(violation_count(&next));
    }
    if *counts.last().expect("nonempty") != 0 {
        return Err(Error::defect("refinement did not remove every violation"));
    }
    let atoms: Vec<AtomId> = pairs.keys().flat_map(|b| b.iter().cloned()).collect();
    let ambient = AmbientAlgebra::new(atoms)?;
    let refined = PartialIso::new(&ambient, pairs.into_iter().collect())?;
    let system = PartialIsoSystem::single(ambient, refined)?;
    let embedding = SystemEmbedding { base: AlgebraEmbedding::by_lineage(s.ambient(), system.ambient())? };
    embedding.check(s, &system).map_err(|e| Error::defect(format!("refinement does not extend its source: {e}")))?;
    Ok(Refinement { system, embedding, violation_counts: counts })
}

/// Refines a 1-system to a normal one and certifies it.
pub fn normalize(s: &PartialIsoSystem) -> Result<(Refinement, ChainDecomposition)> {
    let r = refine_condition_i(s)?;
    match decompose_iso(r.system.iso()?) {
        Normality::Normal(d) => Ok((r, d)),
        Normality::NotNormal(rep) => {
            Err(Error::defect(format!("refinement left {:?} violating {:?}", rep.block, rep.violation)))
        }
    }
}

pub fn is_normal(s: &PartialIsoSystem) -> Result<bool> {
    Ok(decompose_iso(s.iso()?).is_normal())
}
