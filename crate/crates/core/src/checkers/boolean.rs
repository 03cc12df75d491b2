//! Class driver for finite Boolean algebras with partial automorphisms.

use std::collections::{BTreeMap, BTreeSet};

use super::{ClassDriver, Span};
use crate::algebra::{AmbientAlgebra, AtomId, Block};
use crate::cap::{amalgamate_greatest, amalgamate_least, amalgamate_over_normal, Extension};
use crate::enumerate::{all_partial_isos, permutations, set_partitions};
use crate::error::{Error, Result};
use crate::refine::{is_normal, normalize};
use crate::system::{embed_system_within, AlgebraEmbedding, PartialIso, PartialIsoSystem, SystemEmbedding};

/// Which subclass [`check_cap`](super::check_cap) treats as cofinal.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum BooleanCofinal {
    /// Normal 1-systems, refined by normalization and amalgamated by the
    /// chain construction.
    #[default]
    Normal,
    /// Every system.
    Whole,
    None,
}

#[derive(Clone, Copy, Debug, Default)]
pub struct BooleanDriver {
    pub cofinal: BooleanCofinal,
}

/// Search nodes allowed to [`ClassDriver::find_embedding`].
pub const EMBED_NODE_LIMIT: usize = 200_000;

type Key = Vec<Vec<(u32, u32)>>;

fn mask(amb: &AmbientAlgebra, b: &Block, perm: &[usize]) -> u32 {
    b.iter().map(|a| 1u32 << perm[amb.index_of(a).expect("atom")]).sum()
}

fn key(s: &PartialIsoSystem, perm: &[usize]) -> Key {
    s.isos()
        .iter()
        .map(|p| {
            let mut v: Vec<(u32, u32)> = p.pairs().iter().map(|(b, c)| (mask(s.ambient(), b, perm), mask(s.ambient(), c, perm))).collect();
            v.sort();
            v
        })
        .collect()
}

fn from_key(k: usize, key: &Key) -> PartialIsoSystem {
    let amb = AmbientAlgebra::numbered(k);
    let blk = |m: u32| -> Block { (0..k).filter(|i| m >> i & 1 == 1).map(|i| amb.atoms()[i].clone()).collect() };
    let isos = key
        .iter()
        .map(|pairs| PartialIso::new(&amb, pairs.iter().map(|&(b, c)| (blk(b), blk(c))).collect()).expect("relabelled partial iso"))
        .collect();
    PartialIsoSystem::new(amb, isos).expect("relabelled system")
}

/// All ways of cutting `b` and `c` into the same number of blocks, paired by
/// a bijection.
fn pair_refinements(b: &Block, c: &Block) -> Vec<Vec<(Block, Block)>> {
    let bv: Vec<&AtomId> = b.iter().collect();
    let cv: Vec<&AtomId> = c.iter().collect();
    let blocks = |v: &[&AtomId], rgs: &[usize]| -> Vec<Block> {
        let j = rgs.iter().max().map_or(0, |m| m + 1);
        let mut out = vec![Block::new(); j];
        for (a, &i) in v.iter().zip(rgs) {
            out[i].insert((*a).clone());
        }
        out
    };
    let mut out = Vec::new();
    for pb in set_partitions(bv.len()) {
        let bs = blocks(&bv, &pb);
        for pc in set_partitions(cv.len()) {
            let cs = blocks(&cv, &pc);
            if cs.len() != bs.len() {
                continue;
            }
            for perm in permutations(bs.len()) {
                out.push(bs.iter().cloned().zip(perm.iter().map(|&i| cs[i].clone())).collect());
            }
        }
    }
    out
}

impl ClassDriver for BooleanDriver {
    type System = PartialIsoSystem;
    type Embedding = SystemEmbedding;

    fn name(&self) -> String {
        "boolean".into()
    }

    fn size(&self, s: &PartialIsoSystem) -> usize {
        s.ambient().len()
    }

    fn validate(&self, s: &PartialIsoSystem) -> Result<()> {
        PartialIsoSystem::new(s.ambient().clone(), s.isos().to_vec()).map(|_| ())
    }

    fn systems(&self, n: usize, bound: usize) -> Result<Vec<PartialIsoSystem>> {
        let mut out = Vec::new();
        for k in 1..=bound {
            let singles: Vec<PartialIso> = all_partial_isos(k).into_iter().map(|s| s.iso().expect("one map").clone()).collect();
            let amb = AmbientAlgebra::numbered(k);
            let perms = permutations(k);
            let mut tuples: Vec<Vec<PartialIso>> = vec![Vec::new()];
            for _ in 0..n {
                tuples = tuples.into_iter().flat_map(|t| singles.iter().map(move |p| [t.clone(), vec![p.clone()]].concat())).collect();
            }
            let mut keys: BTreeSet<Key> = BTreeSet::new();
            for isos in tuples {
                let s = PartialIsoSystem::new(amb.clone(), isos)?;
                keys.insert(perms.iter().map(|p| key(&s, p)).min().expect("k >= 1"));
            }
            out.extend(keys.iter().map(|key| from_key(k, key)));
        }
        Ok(out)
    }

    fn is_embedding(&self, e: &SystemEmbedding, s: &PartialIsoSystem, t: &PartialIsoSystem) -> bool {
        e.is_valid(s, t)
    }

    fn embeddings(&self, s: &PartialIsoSystem, t: &PartialIsoSystem) -> Vec<SystemEmbedding> {
        let (sa, ta) = (s.ambient().atoms(), t.ambient().atoms());
        let mut out = Vec::new();
        let mut assign = vec![0usize; ta.len()];
        loop {
            let mut image: BTreeMap<AtomId, Block> = sa.iter().map(|a| (a.clone(), Block::new())).collect();
            for (x, &i) in ta.iter().zip(&assign) {
                image.get_mut(&sa[i]).expect("source atom").insert(x.clone());
            }
            if image.values().all(|b| !b.is_empty()) {
                let e = SystemEmbedding { base: AlgebraEmbedding { image } };
                if e.is_valid(s, t) {
                    out.push(e);
                }
            }
            let mut i = 0;
            while i < assign.len() && assign[i] + 1 == sa.len() {
                assign[i] = 0;
                i += 1;
            }
            if i == assign.len() {
                break;
            }
            assign[i] += 1;
        }
        out
    }

    fn compose(&self, first: &SystemEmbedding, then: &SystemEmbedding) -> SystemEmbedding {
        first.then(then)
    }

    fn identity(&self, s: &PartialIsoSystem) -> SystemEmbedding {
        SystemEmbedding::identity(s)
    }

    fn pinned(&self, base: &PartialIsoSystem, n: usize) -> PartialIsoSystem {
        let amb = base.ambient().clone();
        let id = PartialIso::identity(&amb.discrete());
        PartialIsoSystem::new(amb, vec![id; n]).expect("identity maps")
    }

    fn empty(&self, n: usize) -> PartialIsoSystem {
        PartialIsoSystem::trivial(n)
    }

    fn initial(&self, s: &PartialIsoSystem) -> SystemEmbedding {
        let base = PartialIsoSystem::trivial(s.arity());
        SystemEmbedding { base: AlgebraEmbedding { image: BTreeMap::from([(base.ambient().atoms()[0].clone(), s.ambient().top())]) } }
    }

    fn arity(&self, s: &PartialIsoSystem) -> usize {
        s.arity()
    }

    fn amalgamate(
        &self,
        base: &PartialIsoSystem,
        left: (&PartialIsoSystem, &SystemEmbedding),
        right: (&PartialIsoSystem, &SystemEmbedding),
    ) -> Result<Option<Span<PartialIsoSystem, SystemEmbedding>>> {
        let a = amalgamate_greatest(base, Extension::new(left.0, left.1), Extension::new(right.0, right.1))?;
        Ok(a.map(|a| Span { system: a.system, left: a.left, right: a.right }))
    }

    /// Extensions splitting at most one atom in two, with every refinement
    /// of every map.
    fn extensions(&self, s: &PartialIsoSystem) -> Result<Vec<(PartialIsoSystem, SystemEmbedding)>> {
        let mut out = Vec::new();
        let atoms = s.ambient().atoms();
        let splits: Vec<Option<&AtomId>> = std::iter::once(None).chain(atoms.iter().map(Some)).collect();
        for split in splits {
            let lift = |b: &Block| -> Block {
                b.iter().flat_map(|a| if Some(a) == split { vec![a.child(0), a.child(1)] } else { vec![a.clone()] }).collect()
            };
            let amb = AmbientAlgebra::new(atoms.iter().flat_map(|a| lift(&Block::from([a.clone()]))))?;
            let per_map: Vec<Vec<PartialIso>> = s
                .isos()
                .iter()
                .map(|p| -> Result<Vec<PartialIso>> {
                    let mut acc: Vec<Vec<(Block, Block)>> = vec![Vec::new()];
                    for (b, c) in p.pairs() {
                        let opts = pair_refinements(&lift(b), &lift(c));
                        acc = acc.into_iter().flat_map(|x| opts.iter().map(move |o| [x.clone(), o.clone()].concat())).collect();
                    }
                    acc.into_iter().map(|pairs| PartialIso::new(&amb, pairs)).collect()
                })
                .collect::<Result<_>>()?;
            let mut tuples: Vec<Vec<PartialIso>> = vec![Vec::new()];
            for opts in &per_map {
                tuples = tuples.into_iter().flat_map(|t| opts.iter().map(move |o| [t.clone(), vec![o.clone()]].concat())).collect();
            }
            let e = SystemEmbedding { base: AlgebraEmbedding::by_lineage(s.ambient(), &amb)? };
            for isos in tuples {
                out.push((PartialIsoSystem::new(amb.clone(), isos)?, e.clone()));
            }
        }
        Ok(out)
    }

    fn preferred_witness(&self, s: &PartialIsoSystem) -> Result<Option<(PartialIsoSystem, SystemEmbedding)>> {
        if s.arity() != 1 {
            return Ok(None);
        }
        let (r, _) = normalize(s)?;
        Ok(Some((r.system, r.embedding)))
    }

    fn in_cofinal(&self, s: &PartialIsoSystem) -> Option<bool> {
        match self.cofinal {
            BooleanCofinal::Normal => Some(s.arity() == 1 && is_normal(s).unwrap_or(false)),
            BooleanCofinal::Whole => Some(true),
            BooleanCofinal::None => None,
        }
    }

    fn cofinal_witness(&self, s: &PartialIsoSystem) -> Result<Option<(PartialIsoSystem, SystemEmbedding)>> {
        match self.cofinal {
            BooleanCofinal::Normal if s.arity() == 1 => {
                let (r, _) = normalize(s)?;
                Ok(Some((r.system, r.embedding)))
            }
            BooleanCofinal::Normal => Err(Error::Unsupported("normal form is defined for 1-systems".into())),
            BooleanCofinal::Whole => Ok(Some((s.clone(), SystemEmbedding::identity(s)))),
            BooleanCofinal::None => Err(Error::Unsupported("no cofinal subclass selected".into())),
        }
    }

    fn amalgamate_cofinal(
        &self,
        base: &PartialIsoSystem,
        left: (&PartialIsoSystem, &SystemEmbedding),
        right: (&PartialIsoSystem, &SystemEmbedding),
    ) -> Result<Option<Span<PartialIsoSystem, SystemEmbedding>>> {
        if self.cofinal != BooleanCofinal::Normal {
            return self.amalgamate(base, left, right);
        }
        let a = amalgamate_over_normal(base, Extension::new(left.0, left.1), Extension::new(right.0, right.1))?;
        Ok(Some(Span { system: a.system, left: a.left, right: a.right }))
    }

    fn amalgamate_compact(
        &self,
        base: &PartialIsoSystem,
        left: (&PartialIsoSystem, &SystemEmbedding),
        right: (&PartialIsoSystem, &SystemEmbedding),
    ) -> Result<Option<Span<PartialIsoSystem, SystemEmbedding>>> {
        let a = amalgamate_least(base, Extension::new(left.0, left.1), Extension::new(right.0, right.1))?;
        Ok(a.map(|a| Span { system: a.system, left: a.left, right: a.right }))
    }

    fn find_embedding(
        &self,
        s: &PartialIsoSystem,
        t: &PartialIsoSystem,
        over: Option<(&SystemEmbedding, &SystemEmbedding)>,
    ) -> Option<SystemEmbedding> {
        let allowed: Option<Vec<Vec<usize>>> = over.map(|(along, fixed)| {
            let base_of = fixed.base.inverse_map();
            t.ambient()
                .atoms()
                .iter()
                .map(|y| match base_of.get(y).and_then(|x| along.base.image.get(x)) {
                    Some(img) => img.iter().filter_map(|a| s.ambient().index_of(a)).collect(),
                    None => Vec::new(),
                })
                .collect()
        });
        let e = embed_system_within(s, t, allowed.as_deref(), EMBED_NODE_LIMIT).ok().flatten()?;
        over.map_or(true, |(along, fixed)| along.then(&e) == *fixed).then_some(e)
    }

    fn search_bounds(&self) -> String {
        "amalgams searched among algebras generated by the two images; one-step extensions split at most one atom and refine the maps".into()
    }
}
