//! Chain structure of a partial automorphism of a finite Boolean algebra:
//! cyclic, stable and linking chains, and the normality test.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::algebra::{AtomId, Block};
use crate::error::Result;
use crate::system::{PartialIso, PartialIsoSystem};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Orientation {
    /// Terms run forward under the map; the end is a range atom.
    I,
    /// Terms run forward under the inverse; the end is a domain atom.
    II,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StableChain {
    pub orientation: Orientation,
    pub beginning: AtomId,
    /// `a_0, ..., a_n`; `a_0` is the beginning.
    pub terms: Vec<AtomId>,
    pub end: Block,
    pub free: Vec<AtomId>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(tag = "role", rename_all = "snake_case")]
pub enum Role {
    Cyclic { chain: usize, position: usize },
    Stable { chain: usize, position: usize },
    Free { chain: usize },
    Linking { chain: usize, position: usize },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChainDecomposition {
    pub cyclic: Vec<Vec<AtomId>>,
    pub stable: Vec<StableChain>,
    pub linking: Vec<Vec<AtomId>>,
    /// Every atom with the chains it takes part in.
    pub assignment: Vec<(AtomId, Vec<Role>)>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Violation {
    /// A domain block of two or more atoms that ends no stable chain.
    DomainAtomNotEnd,
    /// A range block of two or more atoms that ends no stable chain.
    RangeAtomNotEnd,
    /// An atom with no chain role.
    AtomWithoutRole,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NotNormalReport {
    pub block: Block,
    pub violation: Violation,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum Normality {
    Normal(ChainDecomposition),
    NotNormal(NotNormalReport),
}

impl Normality {
    pub fn is_normal(&self) -> bool {
        matches!(self, Normality::Normal(_))
    }
}

pub(crate) fn only(b: &Block) -> Option<&AtomId> {
    if b.len() == 1 {
        b.iter().next()
    } else {
        None
    }
}

/// Atom-level view of one partial map: the atoms that are domain or range
/// blocks on their own, and the block map in both directions.
pub(crate) struct View {
    pub atoms: Vec<AtomId>,
    pub dom: BTreeSet<AtomId>,
    pub ran: BTreeSet<AtomId>,
    pub fwd: BTreeMap<Block, Block>,
    pub bwd: BTreeMap<Block, Block>,
}

impl View {
    pub fn new(iso: &PartialIso) -> View {
        let mut fwd = BTreeMap::new();
        let mut bwd = BTreeMap::new();
        let mut atoms = Vec::new();
        for (b, c) in iso.pairs() {
            atoms.extend(b.iter().cloned());
            fwd.insert(b.clone(), c.clone());
            bwd.insert(c.clone(), b.clone());
        }
        atoms.sort();
        View {
            atoms,
            dom: fwd.keys().filter_map(only).cloned().collect(),
            ran: bwd.keys().filter_map(only).cloned().collect(),
            fwd,
            bwd,
        }
    }

    /// The same view for the inverse map.
    pub fn flipped(&self) -> View {
        View {
            atoms: self.atoms.clone(),
            dom: self.ran.clone(),
            ran: self.dom.clone(),
            fwd: self.bwd.clone(),
            bwd: self.fwd.clone(),
        }
    }

    pub fn step(&self, a: &AtomId) -> Option<&Block> {
        self.fwd.get(&Block::from([a.clone()]))
    }

    pub fn wide_domain(&self) -> impl Iterator<Item = &Block> {
        self.fwd.keys().filter(|b| b.len() > 1)
    }

    /// Follows `ψ(x), ψ²(x), ...` from a wide domain block `x` while the
    /// current block is a single atom that is itself a domain block.
    pub fn trace(&self, x: &Block) -> Trace {
        let mut seq = Vec::new();
        let mut cur = self.fwd[x].clone();
        loop {
            let Some(a) = only(&cur) else { return Trace::Wide { seq, end: cur } };
            if x.contains(a) {
                seq.push(a.clone());
                return Trace::Closes(seq);
            }
            if !self.dom.contains(a) {
                seq.push(a.clone());
                return Trace::Leaves(seq);
            }
            seq.push(a.clone());
            cur = self.step(a).expect("domain atom").clone();
        }
    }
}

/// Outcome of [`View::trace`].
pub(crate) enum Trace {
    /// Returned inside `x`: `x` ends a stable chain of the inverse map.
    Closes(Vec<AtomId>),
    /// Reached a wide range block `end` after the single atoms `seq`.
    Wide { seq: Vec<AtomId>, end: Block },
    /// Reached a single atom outside `x` that is not a domain block; it is
    /// the last entry of the sequence.
    Leaves(Vec<AtomId>),
}

fn stable_chain(view: &View, end: &Block, orientation: Orientation) -> Option<StableChain> {
    let Trace::Closes(mut trace) = view.trace(end) else { return None };
    trace.reverse();
    let beginning = trace[0].clone();
    let free = end.iter().filter(|a| **a != beginning).cloned().collect();
    Some(StableChain { orientation, beginning, terms: trace, end: end.clone(), free })
}

/// Classifies the atoms of a 1-system into chains, or names the least block
/// that breaks normality (domain side first, then range side, then atoms
/// without a role).
pub fn decompose(s: &PartialIsoSystem) -> Result<Normality> {
    Ok(decompose_iso(s.iso()?))
}

pub fn decompose_iso(iso: &PartialIso) -> Normality {
    let view = View::new(iso);
    let inv = view.flipped();

    let mut stable = Vec::new();
    for x in view.wide_domain() {
        match stable_chain(&view, x, Orientation::II) {
            Some(ch) => stable.push(ch),
            None => return Normality::NotNormal(NotNormalReport { block: x.clone(), violation: Violation::DomainAtomNotEnd }),
        }
    }
    for y in inv.wide_domain() {
        match stable_chain(&inv, y, Orientation::I) {
            Some(ch) => stable.push(ch),
            None => return Normality::NotNormal(NotNormalReport { block: y.clone(), violation: Violation::RangeAtomNotEnd }),
        }
    }
    stable.sort_by(|a, b| (a.orientation, &a.end).cmp(&(b.orientation, &b.end)));

    let mut free_in: BTreeMap<&AtomId, Vec<usize>> = BTreeMap::new();
    for (i, ch) in stable.iter().enumerate() {
        for f in &ch.free {
            free_in.entry(f).or_default().push(i);
        }
    }

    // Cyclic chains: orbits of atoms that are domain and range blocks.
    let mut cyclic = Vec::new();
    let mut on_cycle = BTreeSet::new();
    for a in &view.atoms {
        if on_cycle.contains(a) || !view.dom.contains(a) || !view.ran.contains(a) {
            continue;
        }
        let mut orbit = vec![a.clone()];
        let mut cur = a.clone();
        let closed = loop {
            let Some(next) = view.step(&cur).and_then(only) else { break false };
            if next == a {
                break true;
            }
            if !view.dom.contains(next) || orbit.contains(next) {
                break false;
            }
            orbit.push(next.clone());
            cur = next.clone();
        };
        if closed {
            on_cycle.extend(orbit.iter().cloned());
            cyclic.push(orbit);
        }
    }

    // Linking chains: start at a free atom outside the range, follow the map
    // through single atoms, stop at the first atom outside the domain.
    let mut linking = Vec::new();
    for a in &view.atoms {
        if view.ran.contains(a) || !free_in.contains_key(a) {
            continue;
        }
        let mut seq = vec![a.clone()];
        let mut cur = a.clone();
        let ok = loop {
            if !view.dom.contains(&cur) {
                break free_in.contains_key(&cur);
            }
            let Some(next) = view.step(&cur).and_then(only) else { break false };
            if seq.contains(next) {
                break false;
            }
            seq.push(next.clone());
            cur = next.clone();
        };
        if ok {
            linking.push(seq);
        }
    }

    let mut roles: BTreeMap<AtomId, Vec<Role>> = view.atoms.iter().map(|a| (a.clone(), Vec::new())).collect();
    let mut add = |a: &AtomId, r: Role| roles.get_mut(a).expect("atom of the ambient").push(r);
    for (c, orbit) in cyclic.iter().enumerate() {
        for (p, a) in orbit.iter().enumerate() {
            add(a, Role::Cyclic { chain: c, position: p });
        }
    }
    for (c, ch) in stable.iter().enumerate() {
        for (p, a) in ch.terms.iter().enumerate() {
            add(a, Role::Stable { chain: c, position: p });
        }
        for f in &ch.free {
            add(f, Role::Free { chain: c });
        }
    }
    for (c, seq) in linking.iter().enumerate() {
        for (p, a) in seq.iter().enumerate() {
            add(a, Role::Linking { chain: c, position: p });
        }
    }
    for r in roles.values_mut() {
        r.sort();
    }
    if let Some((a, _)) = roles.iter().find(|(_, r)| r.is_empty()) {
        return Normality::NotNormal(NotNormalReport { block: Block::from([a.clone()]), violation: Violation::AtomWithoutRole });
    }
    Normality::Normal(ChainDecomposition { cyclic, stable, linking, assignment: roles.into_iter().collect() })
}

/// Checks the defining clauses of every chain in a decomposition against the
/// map, independently of how the decomposition was produced.
pub fn verify_decomposition(iso: &PartialIso, d: &ChainDecomposition) -> std::result::Result<(), String> {
    let view = View::new(iso);
    let single = |a: &AtomId| Block::from([a.clone()]);
    for (i, orbit) in d.cyclic.iter().enumerate() {
        for (p, a) in orbit.iter().enumerate() {
            let next = single(&orbit[(p + 1) % orbit.len()]);
            if !view.dom.contains(a) || !view.ran.contains(a) || view.step(a) != Some(&next) {
                return Err(format!("cyclic chain {i} fails at position {p}"));
            }
        }
    }
    for (i, ch) in d.stable.iter().enumerate() {
        let v = match ch.orientation {
            Orientation::I => &view,
            Orientation::II => &view.flipped(),
        };
        let n = ch.terms.len();
        if ch.terms.iter().collect::<BTreeSet<_>>().len() != n {
            return Err(format!("stable chain {i}: terms are not distinct"));
        }
        if ch.terms[0] != ch.beginning || ch.terms.iter().any(|a| !v.dom.contains(a)) {
            return Err(format!("stable chain {i}: clause (1) fails"));
        }
        if ch.terms[1..].iter().any(|a| !v.ran.contains(a)) || !v.bwd.contains_key(&ch.end) {
            return Err(format!("stable chain {i}: clause (2) fails"));
        }
        for p in 0..n - 1 {
            if v.step(&ch.terms[p]) != Some(&single(&ch.terms[p + 1])) {
                return Err(format!("stable chain {i}: clause (3) fails at {p}"));
            }
        }
        if v.step(&ch.terms[n - 1]) != Some(&ch.end) || !ch.end.contains(&ch.beginning) || ch.end.len() < 2 {
            return Err(format!("stable chain {i}: clause (4) fails"));
        }
        let mut union = single(&ch.beginning);
        union.extend(ch.free.iter().cloned());
        if union != ch.end || ch.free.contains(&ch.beginning) {
            return Err(format!("stable chain {i}: beginning and free atoms do not make up the end"));
        }
    }
    let free: BTreeSet<&AtomId> = d.stable.iter().flat_map(|c| c.free.iter()).collect();
    for (i, seq) in d.linking.iter().enumerate() {
        let n = seq.len();
        for p in 0..n.saturating_sub(1) {
            if !view.dom.contains(&seq[p]) || view.step(&seq[p]) != Some(&single(&seq[p + 1])) {
                return Err(format!("linking chain {i}: map fails at {p}"));
            }
        }
        if n == 0 || !free.contains(&seq[0]) || !free.contains(&seq[n - 1]) {
            return Err(format!("linking chain {i}: endpoints are not free"));
        }
    }
    // Clause (i): every wide domain or range block ends a chain.
    let ends: BTreeSet<(Orientation, &Block)> = d.stable.iter().map(|c| (c.orientation, &c.end)).collect();
    for b in view.fwd.keys().filter(|b| b.len() > 1) {
        if !ends.contains(&(Orientation::II, b)) {
            return Err(format!("domain block {b:?} ends no stable chain"));
        }
    }
    for c in view.bwd.keys().filter(|c| c.len() > 1) {
        if !ends.contains(&(Orientation::I, c)) {
            return Err(format!("range block {c:?} ends no stable chain"));
        }
    }
    // Clause (ii): every atom has a role.
    let mut covered: BTreeSet<&AtomId> = BTreeSet::new();
    covered.extend(d.cyclic.iter().flatten());
    covered.extend(d.linking.iter().flatten());
    for ch in &d.stable {
        covered.extend(ch.terms.iter());
        covered.extend(ch.free.iter());
    }
    if let Some(a) = view.atoms.iter().find(|a| !covered.contains(a)) {
        return Err(format!("atom {a} has no role"));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{block, AmbientAlgebra};

    fn sys(n: usize, pairs: &[(&[usize], &[usize])]) -> PartialIsoSystem {
        let iso = PartialIso::new(
            &AmbientAlgebra::numbered(n),
            pairs.iter().map(|(b, c)| (block(b.iter().copied()), block(c.iter().copied()))).collect(),
        )
        .unwrap();
        PartialIsoSystem::single(AmbientAlgebra::numbered(n), iso).unwrap()
    }

    fn ids(xs: &[&str]) -> Vec<AtomId> {
        xs.iter().map(|x| AtomId::new(*x)).collect()
    }

    #[test]
    fn swap_is_one_cycle() {
        let s = sys(2, &[(&[0], &[1]), (&[1], &[0])]);
        let Normality::Normal(d) = decompose(&s).unwrap() else { panic!() };
        assert_eq!(d.cyclic, vec![ids(&["0", "1"])]);
        assert!(d.stable.is_empty() && d.linking.is_empty());
        verify_decomposition(s.iso().unwrap(), &d).unwrap();
    }

    #[test]
    fn two_stable_chains_sharing_a_free_atom() {
        let s = sys(3, &[(&[0], &[0, 1]), (&[1, 2], &[2])]);
        let Normality::Normal(d) = decompose(&s).unwrap() else { panic!() };
        assert_eq!(d.stable.len(), 2);
        let one = &d.stable[0];
        assert_eq!(one.orientation, Orientation::I);
        assert_eq!(one.terms, ids(&["0"]));
        assert_eq!(one.end, block([0usize, 1]));
        assert_eq!(one.free, ids(&["1"]));
        let two = &d.stable[1];
        assert_eq!(two.orientation, Orientation::II);
        assert_eq!(two.terms, ids(&["2"]));
        assert_eq!(two.end, block([1usize, 2]));
        assert_eq!(two.free, ids(&["1"]));
        assert_eq!(d.linking, vec![ids(&["1"])]);
        verify_decomposition(s.iso().unwrap(), &d).unwrap();
    }

    #[test]
    fn three_cycle_through_a_pair_is_not_normal() {
        let s = sys(4, &[(&[0, 1], &[2]), (&[2], &[3]), (&[3], &[0, 1])]);
        let Normality::NotNormal(r) = decompose(&s).unwrap() else { panic!() };
        assert_eq!(r.block, block([0usize, 1]));
        assert_eq!(r.violation, Violation::DomainAtomNotEnd);
    }
}
