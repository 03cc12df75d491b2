//! Partial isomorphisms between subalgebras, systems of them, and the
//! embeddings that commute with the partial maps.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::algebra::{image_of, AmbientAlgebra, AtomId, Block, Subalgebra};
use crate::error::{Error, Result};

/// An isomorphism between two subalgebras of one ambient algebra, stored as
/// the list of (domain atom, range atom) pairs sorted by domain atom.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct PartialIso {
    pairs: Vec<(Block, Block)>,
}

impl PartialIso {
    /// Checks that the first components and the second components each
    /// partition the atoms of `ambient`.
    pub fn new(ambient: &AmbientAlgebra, pairs: Vec<(Block, Block)>) -> Result<Self> {
        let iso = PartialIso::from_pairs_unchecked(pairs);
        iso.check(ambient)?;
        Ok(iso)
    }

    pub(crate) fn from_pairs_unchecked(mut pairs: Vec<(Block, Block)>) -> Self {
        pairs.sort_by(|x, y| x.0.iter().next().cmp(&y.0.iter().next()));
        PartialIso { pairs }
    }

    pub fn check(&self, ambient: &AmbientAlgebra) -> Result<()> {
        self.domain().check(ambient)?;
        self.range().check(ambient)?;
        Ok(())
    }

    /// The identity on a subalgebra.
    pub fn identity(sub: &Subalgebra) -> Self {
        PartialIso::from_pairs_unchecked(sub.blocks().iter().map(|b| (b.clone(), b.clone())).collect())
    }

    pub fn pairs(&self) -> &[(Block, Block)] {
        &self.pairs
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn domain(&self) -> Subalgebra {
        Subalgebra::from_blocks_unchecked(self.pairs.iter().map(|p| p.0.clone()).collect())
    }

    pub fn range(&self) -> Subalgebra {
        Subalgebra::from_blocks_unchecked(self.pairs.iter().map(|p| p.1.clone()).collect())
    }

    pub fn inverse(&self) -> PartialIso {
        PartialIso::from_pairs_unchecked(self.pairs.iter().map(|(b, c)| (c.clone(), b.clone())).collect())
    }

    /// Image of a domain atom.
    pub fn apply(&self, b: &Block) -> Option<&Block> {
        self.pairs.iter().find(|p| &p.0 == b).map(|p| &p.1)
    }

    /// Image of an element that is a union of domain atoms.
    pub fn apply_union(&self, x: &Block) -> Option<Block> {
        let mut out = Block::new();
        let mut covered = 0;
        for (b, c) in &self.pairs {
            if b.is_subset(x) {
                covered += b.len();
                out.extend(c.iter().cloned());
            } else if !b.is_disjoint(x) {
                return None;
            }
        }
        (covered == x.len()).then_some(out)
    }

    /// True when every pair of `self` is implied by `other`.
    pub fn is_contained_in(&self, other: &PartialIso) -> bool {
        self.pairs.iter().all(|(b, c)| other.apply_union(b).as_ref() == Some(c))
    }
}

impl fmt::Debug for PartialIso {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut m = f.debug_map();
        for (b, c) in &self.pairs {
            m.entry(b, c);
        }
        m.finish()
    }
}

#[derive(Serialize, Deserialize)]
struct PartialIsoDoc {
    domain: Vec<Block>,
    range: Vec<Block>,
    map: Vec<(usize, usize)>,
}

impl Serialize for PartialIso {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let domain = self.domain().blocks().to_vec();
        let range = self.range().blocks().to_vec();
        let map = self
            .pairs
            .iter()
            .enumerate()
            .map(|(i, (_, c))| (i, range.iter().position(|r| r == c).expect("range block")))
            .collect();
        PartialIsoDoc { domain, range, map }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for PartialIso {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let doc = PartialIsoDoc::deserialize(d)?;
        if doc.domain.len() != doc.range.len() || doc.map.len() != doc.domain.len() {
            return Err(D::Error::custom("domain, range and map sizes differ"));
        }
        let mut used_d = BTreeSet::new();
        let mut used_r = BTreeSet::new();
        let mut pairs = Vec::new();
        for &(i, j) in &doc.map {
            if i >= doc.domain.len() || j >= doc.range.len() || !used_d.insert(i) || !used_r.insert(j) {
                return Err(D::Error::custom("map is not a bijection of blocks"));
            }
            pairs.push((doc.domain[i].clone(), doc.range[j].clone()));
        }
        Ok(PartialIso::from_pairs_unchecked(pairs))
    }
}

/// An ambient algebra with `n ≥ 1` partial isomorphisms between its subalgebras.
#[derive(Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "SystemDoc", into = "SystemDoc")]
pub struct PartialIsoSystem {
    ambient: AmbientAlgebra,
    isos: Vec<PartialIso>,
}

#[derive(Serialize, Deserialize)]
struct SystemDoc {
    ambient: AmbientAlgebra,
    isos: Vec<PartialIso>,
}

impl TryFrom<SystemDoc> for PartialIsoSystem {
    type Error = Error;
    fn try_from(d: SystemDoc) -> Result<Self> {
        PartialIsoSystem::new(d.ambient, d.isos)
    }
}

impl From<PartialIsoSystem> for SystemDoc {
    fn from(s: PartialIsoSystem) -> Self {
        SystemDoc { ambient: s.ambient, isos: s.isos }
    }
}

impl PartialIsoSystem {
    pub fn new(ambient: AmbientAlgebra, isos: Vec<PartialIso>) -> Result<Self> {
        if isos.is_empty() {
            return Err(Error::invalid("a system needs at least one partial map"));
        }
        for iso in &isos {
            iso.check(&ambient)?;
        }
        Ok(PartialIsoSystem { ambient, isos })
    }

    pub(crate) fn new_unchecked(ambient: AmbientAlgebra, isos: Vec<PartialIso>) -> Self {
        PartialIsoSystem { ambient, isos }
    }

    /// Convenience constructor for a single map given as label pairs.
    pub fn single(ambient: AmbientAlgebra, iso: PartialIso) -> Result<Self> {
        PartialIsoSystem::new(ambient, vec![iso])
    }

    /// The one-atom system with `n` identity maps.
    pub fn trivial(n: usize) -> Self {
        let a = AmbientAlgebra::numbered(1);
        let id = PartialIso::identity(&a.trivial());
        PartialIsoSystem { ambient: a, isos: vec![id; n.max(1)] }
    }

    pub fn ambient(&self) -> &AmbientAlgebra {
        &self.ambient
    }

    pub fn isos(&self) -> &[PartialIso] {
        &self.isos
    }

    pub fn arity(&self) -> usize {
        self.isos.len()
    }

    /// The single map of a 1-system.
    pub fn iso(&self) -> Result<&PartialIso> {
        match self.isos.as_slice() {
            [one] => Ok(one),
            _ => Err(Error::ArityMismatch { left: self.isos.len(), right: 1 }),
        }
    }
}

impl fmt::Debug for PartialIsoSystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PartialIsoSystem").field("ambient", &self.ambient).field("isos", &self.isos).finish()
    }
}

/// A unital embedding of finite Boolean algebras, given by the image of each
/// source atom. The target's atoms are the union of the images.
#[derive(Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct AlgebraEmbedding {
    pub image: BTreeMap<AtomId, Block>,
}

impl AlgebraEmbedding {
    pub fn identity(a: &AmbientAlgebra) -> Self {
        AlgebraEmbedding { image: a.atoms().iter().map(|x| (x.clone(), Block::from([x.clone()]))).collect() }
    }

    /// Embedding that sends each atom to its lineage descendants in `target`.
    pub fn by_lineage(source: &AmbientAlgebra, target: &AmbientAlgebra) -> Result<Self> {
        let mut image: BTreeMap<AtomId, Block> = source.atoms().iter().map(|a| (a.clone(), Block::new())).collect();
        for t in target.atoms() {
            let parent = source
                .atoms()
                .iter()
                .find(|a| t.descends_from(a))
                .ok_or_else(|| Error::NotEmbedding(format!("atom {t} descends from no source atom")))?;
            image.get_mut(parent).expect("source atom").insert(t.clone());
        }
        let e = AlgebraEmbedding { image };
        e.check(source, target)?;
        Ok(e)
    }

    pub fn check(&self, source: &AmbientAlgebra, target: &AmbientAlgebra) -> Result<()> {
        if self.image.len() != source.len() || !source.atoms().iter().all(|a| self.image.contains_key(a)) {
            return Err(Error::NotEmbedding("domain is not the source atom set".into()));
        }
        let targets: HashSet<&AtomId> = target.atoms().iter().collect();
        let mut seen = HashSet::new();
        for (a, img) in &self.image {
            if img.is_empty() {
                return Err(Error::NotEmbedding(format!("atom {a} has empty image")));
            }
            for t in img {
                if !targets.contains(t) {
                    return Err(Error::NotEmbedding(format!("image atom {t} not in target")));
                }
                if !seen.insert(t) {
                    return Err(Error::NotEmbedding(format!("images overlap at {t}")));
                }
            }
        }
        if seen.len() != target.len() {
            return Err(Error::NotEmbedding("images do not cover the target".into()));
        }
        Ok(())
    }

    pub fn apply(&self, b: &Block) -> Block {
        image_of(&self.image, b)
    }

    /// `other ∘ self`.
    pub fn then(&self, other: &AlgebraEmbedding) -> AlgebraEmbedding {
        AlgebraEmbedding { image: self.image.iter().map(|(a, img)| (a.clone(), other.apply(img))).collect() }
    }

    /// The source atom whose image contains `t`.
    pub fn preimage_atom(&self, t: &AtomId) -> Option<&AtomId> {
        self.image.iter().find(|(_, img)| img.contains(t)).map(|(a, _)| a)
    }

    /// Inverse image map: target atom → source atom.
    pub fn inverse_map(&self) -> BTreeMap<AtomId, AtomId> {
        let mut m = BTreeMap::new();
        for (a, img) in &self.image {
            for t in img {
                m.insert(t.clone(), a.clone());
            }
        }
        m
    }
}

impl fmt::Debug for AlgebraEmbedding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_map().entries(&self.image).finish()
    }
}

/// An embedding of systems: a unital algebra embedding under which every
/// source map is contained in the corresponding target map.
#[derive(Clone, PartialEq, Eq, Hash, Serialize, Deserialize, Debug)]
pub struct SystemEmbedding {
    pub base: AlgebraEmbedding,
}

impl SystemEmbedding {
    pub fn identity(s: &PartialIsoSystem) -> Self {
        SystemEmbedding { base: AlgebraEmbedding::identity(s.ambient()) }
    }

    /// Full validation against the two systems.
    pub fn check(&self, source: &PartialIsoSystem, target: &PartialIsoSystem) -> Result<()> {
        if source.arity() != target.arity() {
            return Err(Error::ArityMismatch { left: source.arity(), right: target.arity() });
        }
        self.base.check(source.ambient(), target.ambient())?;
        for (i, (psi, phi)) in source.isos().iter().zip(target.isos()).enumerate() {
            let dom_of = pair_index(phi.pairs().iter().map(|p| &p.0));
            let ran_of = pair_index(phi.pairs().iter().map(|p| &p.1));
            for (b, c) in psi.pairs() {
                let eb = self.base.apply(b);
                let ec = self.base.apply(c);
                let Some(db) = union_of(&eb, &dom_of, phi.pairs().iter().map(|p| p.0.len())) else {
                    return Err(Error::NotEmbedding(format!("map {i}: image of domain atom {b:?} is not in the target domain")));
                };
                let Some(rc) = union_of(&ec, &ran_of, phi.pairs().iter().map(|p| p.1.len())) else {
                    return Err(Error::NotEmbedding(format!("map {i}: image of range atom {c:?} is not in the target range")));
                };
                if db != rc {
                    return Err(Error::NotEmbedding(format!("map {i}: square does not commute at {b:?}")));
                }
            }
        }
        Ok(())
    }

    pub fn is_valid(&self, source: &PartialIsoSystem, target: &PartialIsoSystem) -> bool {
        self.check(source, target).is_ok()
    }

    pub fn then(&self, other: &SystemEmbedding) -> SystemEmbedding {
        SystemEmbedding { base: self.base.then(&other.base) }
    }
}

/// Position of the block containing each atom.
fn pair_index<'a>(blocks: impl Iterator<Item = &'a Block>) -> HashMap<&'a AtomId, usize> {
    blocks.enumerate().flat_map(|(k, b)| b.iter().map(move |a| (a, k))).collect()
}

/// The positions of the blocks whose union is `x`, or `None` when `x` is
/// not such a union.
fn union_of(x: &Block, index: &HashMap<&AtomId, usize>, sizes: impl Iterator<Item = usize>) -> Option<BTreeSet<usize>> {
    let sizes: Vec<usize> = sizes.collect();
    let mut hits: BTreeMap<usize, usize> = BTreeMap::new();
    for a in x {
        *hits.entry(*index.get(a)?).or_insert(0) += 1;
    }
    hits.iter().all(|(&k, &n)| sizes[k] == n).then(|| hits.into_keys().collect())
}

/// Searches every assignment of target atoms to source atoms, in
/// lexicographic order, and returns the first one that is a system embedding.
pub fn embed_system(s: &PartialIsoSystem, t: &PartialIsoSystem) -> Result<Option<SystemEmbedding>> {
    embed_system_within(s, t, None, usize::MAX)
}

/// Like [`embed_system`], with target atom `y` restricted to the source atoms
/// `allowed[y]` (by index) and at most `node_limit` search nodes; gives
/// `None` when the limit is reached. Atoms with one allowed source atom are
/// assigned first, the rest in an order that closes constraints early.
pub fn embed_system_within(
    s: &PartialIsoSystem,
    t: &PartialIsoSystem,
    allowed: Option<&[Vec<usize>]>,
    node_limit: usize,
) -> Result<Option<SystemEmbedding>> {
    if s.arity() != t.arity() {
        return Err(Error::ArityMismatch { left: s.arity(), right: t.arity() });
    }
    let sa = s.ambient().atoms();
    let ta = t.ambient().atoms();
    if ta.len() < sa.len() {
        return Ok(None);
    }
    let every: Vec<Vec<usize>>;
    let allowed = match allowed {
        Some(a) if a.len() == ta.len() => a,
        Some(_) => return Err(Error::invalid("allowed sets must match the target atoms")),
        None => {
            every = vec![(0..sa.len()).collect(); ta.len()];
            &every
        }
    };
    if allowed.iter().flatten().any(|&i| i >= sa.len()) {
        return Err(Error::invalid("allowed source atom out of range"));
    }
    let s_idx = |a: &AtomId| s.ambient().index_of(a).expect("atom of S");
    let t_idx = |a: &AtomId| t.ambient().index_of(a).expect("atom of T");

    // Source side: atom → domain block id and range block id, plus ψ on ids.
    struct SideMap {
        dom_of: Vec<usize>,
        psi: Vec<usize>,
        ran_of: Vec<usize>,
    }
    let sides: Vec<SideMap> = s
        .isos()
        .iter()
        .map(|psi| {
            let mut dom_of = vec![0; sa.len()];
            let mut ran_of = vec![0; sa.len()];
            let ran = psi.range();
            let mut map = Vec::new();
            for (k, (b, c)) in psi.pairs().iter().enumerate() {
                for a in b {
                    dom_of[s_idx(a)] = k;
                }
                map.push(ran.blocks().iter().position(|r| r == c).expect("range block"));
            }
            for (k, c) in ran.blocks().iter().enumerate() {
                for a in c {
                    ran_of[s_idx(a)] = k;
                }
            }
            SideMap { dom_of, psi: map, ran_of }
        })
        .collect();

    // Visiting order: forced atoms first, then repeatedly the atom sharing
    // the most pairs with atoms already placed, so constraints close early.
    let mut groups_of: Vec<Vec<usize>> = vec![Vec::new(); ta.len()];
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for phi in t.isos() {
        for (b, c) in phi.pairs() {
            let g: Vec<usize> = b.iter().chain(c.iter()).map(t_idx).collect();
            for &y in &g {
                groups_of[y].push(groups.len());
            }
            groups.push(g);
        }
    }
    let mut order: Vec<usize> = (0..ta.len()).filter(|&y| allowed[y].len() == 1).collect();
    let mut placed = vec![false; ta.len()];
    let mut score = vec![0usize; ta.len()];
    let place = |y: usize, placed: &mut Vec<bool>, score: &mut Vec<usize>| {
        placed[y] = true;
        for &g in &groups_of[y] {
            for &z in &groups[g] {
                score[z] += 1;
            }
        }
    };
    for &y in &order {
        place(y, &mut placed, &mut score);
    }
    while order.len() < ta.len() {
        let y = (0..ta.len()).filter(|&y| !placed[y]).max_by_key(|&y| (score[y], std::cmp::Reverse(y))).expect("unplaced atom");
        place(y, &mut placed, &mut score);
        order.push(y);
    }
    let mut pos_of = vec![0; ta.len()];
    for (p, &y) in order.iter().enumerate() {
        pos_of[y] = p;
    }

    // Target side: for each pair (β, φβ), check once all its atoms are assigned.
    struct Constraint {
        iso: usize,
        beta: Vec<usize>,
        image: Vec<usize>,
    }
    let mut due: Vec<Vec<Constraint>> = (0..ta.len()).map(|_| Vec::new()).collect();
    for (i, phi) in t.isos().iter().enumerate() {
        for (b, c) in phi.pairs() {
            let beta: Vec<usize> = b.iter().map(t_idx).collect();
            let image: Vec<usize> = c.iter().map(t_idx).collect();
            let last = beta.iter().chain(image.iter()).map(|&y| pos_of[y]).max().expect("nonempty");
            due[last].push(Constraint { iso: i, beta, image });
        }
    }

    fn ok(c: &Constraint, assign: &[usize], sides: &[SideMap]) -> bool {
        let side = &sides[c.iso];
        let b0 = side.dom_of[assign[c.beta[0]]];
        if c.beta.iter().any(|&x| side.dom_of[assign[x]] != b0) {
            return false;
        }
        let target = side.psi[b0];
        c.image.iter().all(|&x| side.ran_of[assign[x]] == target)
    }

    struct Search<'a> {
        order: &'a [usize],
        allowed: &'a [Vec<usize>],
        due: &'a [Vec<Constraint>],
        sides: &'a [SideMap],
        assign: Vec<usize>,
        count: Vec<usize>,
        nodes: usize,
        limit: usize,
    }

    impl Search<'_> {
        fn go(&mut self, pos: usize) -> bool {
            self.nodes += 1;
            if self.nodes > self.limit {
                return false;
            }
            let unused = self.count.iter().filter(|&&c| c == 0).count();
            if self.order.len() - pos < unused {
                return false;
            }
            if pos == self.order.len() {
                return true;
            }
            let y = self.order[pos];
            for &x in &self.allowed[y] {
                self.assign[y] = x;
                self.count[x] += 1;
                if self.due[pos].iter().all(|c| ok(c, &self.assign, self.sides)) && self.go(pos + 1) {
                    return true;
                }
                self.count[x] -= 1;
            }
            self.assign[y] = usize::MAX;
            false
        }
    }

    let mut search = Search {
        order: &order,
        allowed,
        due: &due,
        sides: &sides,
        assign: vec![usize::MAX; ta.len()],
        count: vec![0; sa.len()],
        nodes: 0,
        limit: node_limit,
    };
    if !search.go(0) {
        return Ok(None);
    }
    let mut image: BTreeMap<AtomId, Block> = sa.iter().map(|a| (a.clone(), Block::new())).collect();
    for (ti, &si) in search.assign.iter().enumerate() {
        image.get_mut(&sa[si]).expect("atom").insert(ta[ti].clone());
    }
    let e = SystemEmbedding { base: AlgebraEmbedding { image } };
    e.check(s, t).map_err(|err| Error::defect(format!("search produced invalid embedding: {err}")))?;
    Ok(Some(e))
}
