//! Exhaustive enumeration of small partitions and partial automorphisms.

use crate::algebra::{AmbientAlgebra, Block};
use crate::system::{PartialIso, PartialIsoSystem};

/// All set partitions of `{0, ..., n-1}` as restricted growth strings.
pub fn set_partitions(n: usize) -> Vec<Vec<usize>> {
    fn go(i: usize, n: usize, max: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if i == n {
            out.push(cur.clone());
            return;
        }
        for b in 0..=max {
            cur.push(b);
            go(i + 1, n, max.max(b + 1), cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    if n == 0 {
        out.push(Vec::new());
    } else {
        go(0, n, 0, &mut Vec::new(), &mut out);
    }
    out
}

/// All permutations of `{0, ..., k-1}` in lexicographic order.
pub fn permutations(k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut p: Vec<usize> = (0..k).collect();
    loop {
        out.push(p.clone());
        let Some(i) = (1..k).rev().find(|&i| p[i - 1] < p[i]) else { break };
        let j = (i..k).rev().find(|&j| p[i - 1] < p[j]).expect("successor exists");
        p.swap(i - 1, j);
        p[i..].reverse();
    }
    out
}

fn blocks_of(ambient: &AmbientAlgebra, rgs: &[usize]) -> Vec<Block> {
    let k = rgs.iter().max().map_or(0, |m| m + 1);
    let mut blocks = vec![Block::new(); k];
    for (i, &b) in rgs.iter().enumerate() {
        blocks[b].insert(ambient.atoms()[i].clone());
    }
    blocks
}

/// Every partial automorphism of the algebra with atoms `0..n`: each pair of
/// partitions with equally many blocks and each bijection between them.
pub fn all_partial_isos(n: usize) -> Vec<PartialIsoSystem> {
    let ambient = AmbientAlgebra::numbered(n);
    let parts = set_partitions(n);
    let mut out = Vec::new();
    for b in &parts {
        let bb = blocks_of(&ambient, b);
        for c in &parts {
            let cb = blocks_of(&ambient, c);
            if bb.len() != cb.len() {
                continue;
            }
            for perm in permutations(bb.len()) {
                let pairs = bb.iter().cloned().zip(perm.iter().map(|&j| cb[j].clone())).collect();
                let iso = PartialIso::from_pairs_unchecked(pairs);
                out.push(PartialIsoSystem::new_unchecked(ambient.clone(), vec![iso]));
            }
        }
    }
    out
}
