//! Seeded generators for partial automorphisms and their extensions.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::algebra::{AmbientAlgebra, AtomId, Block};
use crate::system::{AlgebraEmbedding, PartialIso, PartialIsoSystem, SystemEmbedding};

/// Random partition of `atoms` into exactly `k` nonempty blocks.
pub fn partition<R: Rng>(rng: &mut R, atoms: &[AtomId], k: usize) -> Vec<Block> {
    let mut shuffled = atoms.to_vec();
    shuffled.shuffle(rng);
    let mut blocks = vec![Block::new(); k];
    for (i, a) in shuffled.into_iter().enumerate() {
        let b = if i < k { i } else { rng.gen_range(0..k) };
        blocks[b].insert(a);
    }
    blocks
}

/// A uniformly shaped random partial automorphism of the algebra with atoms
/// `0..n`: block count, both partitions and the bijection are random.
pub fn partial_iso<R: Rng>(rng: &mut R, n: usize) -> PartialIsoSystem {
    let ambient = AmbientAlgebra::numbered(n);
    let k = rng.gen_range(1..=n);
    let bs = partition(rng, ambient.atoms(), k);
    let mut cs = partition(rng, ambient.atoms(), k);
    cs.shuffle(rng);
    let iso = PartialIso::new(&ambient, bs.into_iter().zip(cs).collect()).expect("partitions of the ambient");
    PartialIsoSystem::single(ambient, iso).expect("one map")
}

/// An `n`-system of random partial automorphisms over `atoms` atoms.
pub fn system<R: Rng>(rng: &mut R, atoms: usize, n: usize) -> PartialIsoSystem {
    let ambient = AmbientAlgebra::numbered(atoms);
    let isos = (0..n).map(|_| partial_iso(rng, atoms).iso().expect("one map").clone()).collect();
    PartialIsoSystem::new(ambient, isos).expect("valid maps")
}

/// A random extension of a 1-system obtained by `steps` operations, each
/// either splitting an atom in two or cutting a pair of blocks into two
/// pairs. Labels follow lineage, so the base embeds by lineage.
pub fn extension<R: Rng>(rng: &mut R, s: &PartialIsoSystem, steps: usize) -> (PartialIsoSystem, SystemEmbedding) {
    let mut atoms: Vec<AtomId> = s.ambient().atoms().to_vec();
    let mut pairs: BTreeMap<Block, Block> = s.iso().expect("1-system").pairs().iter().cloned().collect();
    for _ in 0..steps {
        let cuttable: Vec<(Block, Block)> =
            pairs.iter().filter(|(b, c)| b.len() > 1 && c.len() > 1).map(|(b, c)| (b.clone(), c.clone())).collect();
        if cuttable.is_empty() || rng.gen_bool(0.5) {
            let u = atoms.choose(rng).expect("nonempty").clone();
            let kids = [u.child(0), u.child(1)];
            atoms.retain(|a| a != &u);
            atoms.extend(kids.iter().cloned());
            let sub = |b: &Block| -> Block {
                let mut b = b.clone();
                if b.remove(&u) {
                    b.extend(kids.iter().cloned());
                }
                b
            };
            pairs = pairs.iter().map(|(b, c)| (sub(b), sub(c))).collect();
        } else {
            let (b, c) = cuttable.choose(rng).expect("nonempty").clone();
            let bv: Vec<AtomId> = b.iter().cloned().collect();
            let cv: Vec<AtomId> = c.iter().cloned().collect();
            let b2 = partition(rng, &bv, 2);
            let c2 = partition(rng, &cv, 2);
            pairs.remove(&b);
            pairs.insert(b2[0].clone(), c2[0].clone());
            pairs.insert(b2[1].clone(), c2[1].clone());
        }
    }
    let ambient = AmbientAlgebra::new(atoms).expect("lineage labels");
    let iso = PartialIso::new(&ambient, pairs.into_iter().collect()).expect("cut pairs partition the ambient");
    let ext = PartialIsoSystem::single(ambient, iso).expect("one map");
    let e = SystemEmbedding { base: AlgebraEmbedding::by_lineage(s.ambient(), ext.ambient()).expect("lineage") };
    debug_assert!(e.is_valid(s, &ext));
    (ext, e)
}
