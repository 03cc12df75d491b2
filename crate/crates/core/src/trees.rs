//! Finite rooted subtrees of the tree of finite sequences of naturals, their
//! isomorphisms, and automorphisms of the bounded trees `m^{<=m}` (sequences
//! of length at most `m` with entries below `m`).

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A node: a finite sequence of naturals. The root is the empty sequence.
pub type Node = Vec<usize>;

/// Breadth-first order: shorter first, then lexicographic.
pub fn level_order(a: &Node, b: &Node) -> Ordering {
    a.len().cmp(&b.len()).then_with(|| a.cmp(b))
}

fn parent(u: &[usize]) -> &[usize] {
    &u[..u.len() - 1]
}

fn in_bounded(m: usize, u: &[usize]) -> bool {
    u.len() <= m && u.iter().all(|&x| x < m)
}

/// All nodes of `m^{<=m}` in breadth-first order.
pub fn bounded_nodes(m: usize) -> Vec<Node> {
    let mut out = vec![Vec::new()];
    let mut frontier = vec![Vec::new()];
    for _ in 0..m {
        let mut next = Vec::new();
        for u in &frontier {
            for i in 0..m {
                let mut v: Node = u.clone();
                v.push(i);
                next.push(v);
            }
        }
        out.extend(next.iter().cloned());
        frontier = next;
    }
    out
}

/// A finite prefix-closed set of sequences containing the root.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<Node>", into = "Vec<Node>")]
pub struct FiniteTree {
    nodes: BTreeSet<Node>,
}

impl TryFrom<Vec<Node>> for FiniteTree {
    type Error = Error;
    fn try_from(v: Vec<Node>) -> Result<Self> {
        FiniteTree::new(v)
    }
}

impl From<FiniteTree> for Vec<Node> {
    fn from(t: FiniteTree) -> Self {
        t.nodes_in_order()
    }
}

impl FiniteTree {
    pub fn new(nodes: impl IntoIterator<Item = Node>) -> Result<Self> {
        let nodes: BTreeSet<Node> = nodes.into_iter().collect();
        if !nodes.contains(&Vec::new()) {
            return Err(Error::invalid("tree lacks the root"));
        }
        if let Some(u) = nodes.iter().find(|u| !u.is_empty() && !nodes.contains(parent(u))) {
            return Err(Error::invalid(format!("tree is not closed under prefixes at {u:?}")));
        }
        Ok(FiniteTree { nodes })
    }

    pub fn bounded(m: usize) -> Self {
        FiniteTree { nodes: bounded_nodes(m).into_iter().collect() }
    }

    pub fn root() -> Self {
        FiniteTree { nodes: BTreeSet::from([Vec::new()]) }
    }

    pub fn nodes(&self) -> &BTreeSet<Node> {
        &self.nodes
    }

    pub fn nodes_in_order(&self) -> Vec<Node> {
        let mut v: Vec<Node> = self.nodes.iter().cloned().collect();
        v.sort_by(level_order);
        v
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains(&self, u: &[usize]) -> bool {
        self.nodes.contains(u)
    }

    pub fn is_within(&self, m: usize) -> bool {
        self.nodes.iter().all(|u| in_bounded(m, u))
    }

    pub fn intersection(&self, other: &FiniteTree) -> FiniteTree {
        FiniteTree { nodes: self.nodes.intersection(&other.nodes).cloned().collect() }
    }

    pub fn union(&self, other: &FiniteTree) -> FiniteTree {
        FiniteTree { nodes: self.nodes.union(&other.nodes).cloned().collect() }
    }
}

/// Every subtree of `m^{<=m}` with at most `max_nodes` nodes, in a fixed
/// order. Enumerates subsets, so `m^{<=m}` must have at most 20 nodes.
pub fn subtrees(m: usize, max_nodes: usize) -> Result<Vec<FiniteTree>> {
    let all = bounded_nodes(m);
    if all.len() > 20 {
        return Err(Error::precondition(format!("m^(<=m) has {} nodes; subset enumeration is capped at 20", all.len())));
    }
    let mut out = Vec::new();
    for mask in 0u32..(1 << all.len()) {
        if mask & 1 == 0 || mask.count_ones() as usize > max_nodes {
            continue;
        }
        let nodes = all.iter().enumerate().filter(|(i, _)| mask >> i & 1 == 1).map(|(_, u)| u.clone());
        if let Ok(t) = FiniteTree::new(nodes) {
            out.push(t);
        }
    }
    Ok(out)
}

/// An isomorphism between finite subtrees: a bijection preserving the prefix
/// relation in both directions.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<(Node, Node)>", into = "Vec<(Node, Node)>")]
pub struct TreeIso {
    source: FiniteTree,
    target: FiniteTree,
    map: BTreeMap<Node, Node>,
}

impl TryFrom<Vec<(Node, Node)>> for TreeIso {
    type Error = Error;
    fn try_from(v: Vec<(Node, Node)>) -> Result<Self> {
        TreeIso::new(v)
    }
}

impl From<TreeIso> for Vec<(Node, Node)> {
    fn from(t: TreeIso) -> Self {
        let mut v: Vec<(Node, Node)> = t.map.into_iter().collect();
        v.sort_by(|a, b| level_order(&a.0, &b.0));
        v
    }
}

impl TreeIso {
    pub fn new(pairs: impl IntoIterator<Item = (Node, Node)>) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (u, v) in pairs {
            if let Some(w) = map.insert(u.clone(), v.clone()) {
                if w != v {
                    return Err(Error::invalid(format!("node {u:?} has two images")));
                }
            }
        }
        let source = FiniteTree::new(map.keys().cloned())?;
        let target = FiniteTree::new(map.values().cloned())?;
        if target.len() != map.len() {
            return Err(Error::invalid("map is not injective"));
        }
        for (u, v) in &map {
            if u.len() != v.len() {
                return Err(Error::invalid(format!("{u:?} and its image {v:?} lie on different levels")));
            }
            if !u.is_empty() && map[parent(u)] != parent(v) {
                return Err(Error::invalid(format!("parent of {u:?} is not sent to the parent of {v:?}")));
            }
        }
        Ok(TreeIso { source, target, map })
    }

    pub fn source(&self) -> &FiniteTree {
        &self.source
    }

    pub fn target(&self) -> &FiniteTree {
        &self.target
    }

    pub fn map(&self) -> &BTreeMap<Node, Node> {
        &self.map
    }

    pub fn apply(&self, u: &[usize]) -> Option<&Node> {
        self.map.get(u)
    }
}

/// An automorphism of the full bounded tree `m^{<=m}`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "AutomorphismDoc", into = "AutomorphismDoc")]
pub struct BoundedTreeAutomorphism {
    m: usize,
    map: BTreeMap<Node, Node>,
}

#[derive(Serialize, Deserialize)]
struct AutomorphismDoc {
    m: usize,
    map: Vec<(Node, Node)>,
}

impl TryFrom<AutomorphismDoc> for BoundedTreeAutomorphism {
    type Error = Error;
    fn try_from(d: AutomorphismDoc) -> Result<Self> {
        BoundedTreeAutomorphism::new(d.m, d.map.into_iter().collect())
    }
}

impl From<BoundedTreeAutomorphism> for AutomorphismDoc {
    fn from(a: BoundedTreeAutomorphism) -> Self {
        let mut map: Vec<(Node, Node)> = a.map.into_iter().collect();
        map.sort_by(|x, y| level_order(&x.0, &y.0));
        AutomorphismDoc { m: a.m, map }
    }
}

impl BoundedTreeAutomorphism {
    pub fn new(m: usize, map: BTreeMap<Node, Node>) -> Result<Self> {
        let all = bounded_nodes(m);
        if map.len() != all.len() || !all.iter().all(|u| map.contains_key(u)) {
            return Err(Error::invalid(format!("map must be defined on exactly the nodes of {m}^(<={m})")));
        }
        let iso = TreeIso::new(map.clone())?;
        if !iso.target.is_within(m) {
            return Err(Error::invalid("image leaves the bounded tree"));
        }
        Ok(BoundedTreeAutomorphism { m, map })
    }

    pub fn identity(m: usize) -> Self {
        BoundedTreeAutomorphism { m, map: bounded_nodes(m).into_iter().map(|u| (u.clone(), u)).collect() }
    }

    /// The automorphism acting at each node `s` by the sibling permutation
    /// `perm(s)` on the last entry of its children.
    pub fn from_sibling_perms(m: usize, perm: impl Fn(&[usize]) -> Vec<usize>) -> Result<Self> {
        let mut map: BTreeMap<Node, Node> = BTreeMap::from([(Vec::new(), Vec::new())]);
        for s in bounded_nodes(m) {
            if s.len() == m {
                continue;
            }
            let p = perm(&s);
            let t = map[&s].clone();
            for (i, &j) in p.iter().enumerate() {
                let mut u = s.clone();
                u.push(i);
                let mut v = t.clone();
                v.push(j);
                map.insert(u, v);
            }
        }
        Self::new(m, map)
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn map(&self) -> &BTreeMap<Node, Node> {
        &self.map
    }

    pub fn apply(&self, u: &[usize]) -> &Node {
        &self.map[u]
    }

    pub fn inverse(&self) -> Self {
        BoundedTreeAutomorphism { m: self.m, map: self.map.iter().map(|(u, v)| (v.clone(), u.clone())).collect() }
    }

    /// `self ∘ other`: apply `other` first.
    pub fn after(&self, other: &Self) -> Result<Self> {
        if self.m != other.m {
            return Err(Error::precondition("automorphisms of different bounded trees"));
        }
        Ok(BoundedTreeAutomorphism { m: self.m, map: other.map.iter().map(|(u, v)| (u.clone(), self.map[v].clone())).collect() })
    }

    pub fn extends(&self, phi: &TreeIso) -> bool {
        phi.map.iter().all(|(u, v)| self.map.get(u) == Some(v))
    }

    pub fn fixes(&self, t: &FiniteTree) -> bool {
        t.nodes.iter().all(|u| self.map.get(u) == Some(u))
    }

    /// The restriction to `m'^{<=m'}` for `m' <= m`, when it maps that
    /// subtree onto itself.
    pub fn restrict(&self, m: usize) -> Option<Self> {
        if m > self.m {
            return None;
        }
        let map: BTreeMap<Node, Node> = bounded_nodes(m).into_iter().map(|u| (u.clone(), self.map[&u].clone())).collect();
        Self::new(m, map).ok()
    }

    fn as_iso(&self) -> TreeIso {
        TreeIso { source: FiniteTree::bounded(self.m), target: FiniteTree::bounded(self.m), map: self.map.clone() }
    }
}

/// Extends `phi` to an automorphism of `m^{<=m}` level by level: at each
/// node the sibling bijection given by `phi` is completed to a permutation
/// by sending the unassigned children, in order, to the unused targets, in
/// order. The result is the lexicographically least extension when nodes
/// are listed breadth-first.
pub fn extend_to_tree_automorphism(phi: &TreeIso, m: usize) -> Result<BoundedTreeAutomorphism> {
    if !phi.source.is_within(m) || !phi.target.is_within(m) {
        return Err(Error::precondition(format!("source and target must lie in {m}^(<={m})")));
    }
    BoundedTreeAutomorphism::from_sibling_perms_checked(m, |s, t| {
        let mut perm = vec![usize::MAX; m];
        let mut used = vec![false; m];
        for (i, slot) in perm.iter_mut().enumerate() {
            let mut u = s.to_vec();
            u.push(i);
            if let Some(v) = phi.map.get(&u) {
                if parent(v) != t {
                    return Err(Error::defect(format!("image of {u:?} is not below the image of its parent")));
                }
                *slot = v[v.len() - 1];
                used[*slot] = true;
            }
        }
        let mut free = (0..m).filter(|&j| !used[j]);
        for slot in perm.iter_mut().filter(|x| **x == usize::MAX) {
            *slot = free.next().expect("counts match");
        }
        Ok(perm)
    })
    .and_then(|psi| {
        if psi.extends(phi) {
            Ok(psi)
        } else {
            Err(Error::defect("completion does not extend the given isomorphism"))
        }
    })
}

impl BoundedTreeAutomorphism {
    fn from_sibling_perms_checked(m: usize, perm: impl Fn(&[usize], &[usize]) -> Result<Vec<usize>>) -> Result<Self> {
        let mut map: BTreeMap<Node, Node> = BTreeMap::from([(Vec::new(), Vec::new())]);
        for s in bounded_nodes(m) {
            if s.len() == m {
                continue;
            }
            let t = map[&s].clone();
            let p = perm(&s, &t)?;
            for (i, &j) in p.iter().enumerate() {
                let mut u = s.clone();
                u.push(i);
                let mut v = t.clone();
                v.push(j);
                map.insert(u, v);
            }
        }
        Self::new(m, map)
    }
}

/// A common extension of two tuples of automorphisms after conjugating the
/// second by `xi`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CommonExtension {
    pub xi: BoundedTreeAutomorphism,
    pub thetas: Vec<BoundedTreeAutomorphism>,
}

/// The conjugator on `(2n)^{<=2n}` that fixes `m^{<=m}` and moves the rest
/// of `n^{<=n}` off itself: below the longest prefix `s` of a node lying in
/// `m^{<=m}`, the next entry `k` is swapped with `k + n` for `k` in `[m, n)`
/// when `|s| < m`, and for `k` in `[0, n)` when `|s| = m`.
pub fn separating_conjugator(m: usize, n: usize) -> Result<BoundedTreeAutomorphism> {
    if m > n {
        return Err(Error::precondition(format!("need m <= n, got m = {m}, n = {n}")));
    }
    let l = 2 * n;
    BoundedTreeAutomorphism::from_sibling_perms(l, |s| {
        let lo = if in_bounded(m, s) && s.len() < m {
            m
        } else if in_bounded(m, s) {
            0
        } else {
            return (0..l).collect();
        };
        (0..l)
            .map(|k| match k {
                k if (lo..n).contains(&k) => k + n,
                k if (lo + n..2 * n).contains(&k) => k - n,
                k => k,
            })
            .collect()
    })
}

/// Given tuples `psi` and `phi` of automorphisms of `n^{<=n}` agreeing on
/// `m^{<=m}`, returns a conjugator `xi` of `(2n)^{<=2n}` and automorphisms
/// extending both `psi[i]` and `xi ∘ phi[i] ∘ xi^{-1}`.
pub fn common_extension(psi: &[BoundedTreeAutomorphism], phi: &[BoundedTreeAutomorphism], m: usize) -> Result<CommonExtension> {
    if psi.len() != phi.len() {
        return Err(Error::ArityMismatch { left: psi.len(), right: phi.len() });
    }
    let n = match psi.iter().chain(phi).map(|a| a.m).collect::<BTreeSet<_>>().into_iter().collect::<Vec<_>>()[..] {
        [] => m,
        [n] => n,
        _ => return Err(Error::precondition("all automorphisms must act on the same bounded tree")),
    };
    if m > n {
        return Err(Error::precondition(format!("need m <= n, got m = {m}, n = {n}")));
    }
    for (i, (a, b)) in psi.iter().zip(phi).enumerate() {
        if a.restrict(m).is_none() {
            return Err(Error::precondition(format!("map {i} does not restrict to an automorphism of {m}^(<={m})")));
        }
        if let Some(u) = bounded_nodes(m).into_iter().find(|u| a.map[u] != b.map[u]) {
            return Err(Error::Disagreement(format!("map {i} differs at {u:?} on {m}^(<={m})")));
        }
    }
    let xi = separating_conjugator(m, n)?;
    let xi_inv = xi.inverse();
    let l = 2 * n;
    let mut thetas = Vec::with_capacity(psi.len());
    for (a, b) in psi.iter().zip(phi) {
        let mut pairs: BTreeMap<Node, Node> = a.map.clone();
        for u in bounded_nodes(n) {
            let x = xi.map[&u].clone();
            let y = xi.map[&b.map[&xi_inv.map[&x]]].clone();
            if let Some(z) = pairs.insert(x.clone(), y.clone()) {
                if z != y {
                    return Err(Error::defect(format!("conjugated map disagrees at {x:?}")));
                }
            }
        }
        let union = TreeIso::new(pairs).map_err(|e| Error::defect(format!("union is not a tree isomorphism: {e}")))?;
        thetas.push(extend_to_tree_automorphism(&union, l)?);
    }
    let out = CommonExtension { xi, thetas };
    verify_common_extension(psi, phi, m, &out).map_err(Error::defect)?;
    Ok(out)
}

/// Checks every clause of a common extension from raw data.
pub fn verify_common_extension(
    psi: &[BoundedTreeAutomorphism],
    phi: &[BoundedTreeAutomorphism],
    m: usize,
    out: &CommonExtension,
) -> std::result::Result<(), String> {
    let n = psi.first().map_or(m, |a| a.m);
    let xi = &out.xi;
    if let Some(u) = bounded_nodes(m).into_iter().find(|u| &xi.map[u] != u) {
        return Err(format!("conjugator moves {u:?}"));
    }
    let inner: BTreeSet<Node> = bounded_nodes(n).into_iter().collect();
    let moved: BTreeSet<Node> = inner.iter().map(|u| xi.map[u].clone()).collect();
    let meet: BTreeSet<Node> = inner.intersection(&moved).cloned().collect();
    if meet != bounded_nodes(m).into_iter().collect() {
        return Err("conjugated copy meets the original outside the common part".into());
    }
    let xi_inv = xi.inverse();
    for (i, ((a, b), t)) in psi.iter().zip(phi).zip(&out.thetas).enumerate() {
        if !t.extends(&a.as_iso()) {
            return Err(format!("extension {i} does not extend the first map"));
        }
        for x in &moved {
            if t.map[x] != xi.map[&b.map[&xi_inv.map[x]]] {
                return Err(format!("extension {i} does not extend the conjugated second map at {x:?}"));
            }
        }
    }
    Ok(())
}

/// The factorization of an automorphism fixing `S ∩ T` through pointwise
/// stabilizers: `g` extends `phi`, `f` fixes `T`, and `f^{-1} g f` fixes `S`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StabilizerFactorization {
    pub f: BoundedTreeAutomorphism,
    pub g: BoundedTreeAutomorphism,
}

/// Builds the factorization at width and depth `2m`. For `s` in `S ∩ T`, the
/// children of `s` in `S` but not in `T` are moved by `a ↔ a + m`; `g` acts
/// by `phi` on the longest prefix lying in `m^{<=m}` and leaves the rest of
/// the sequence unchanged.
pub fn factor_through_stabilizers(
    phi: &BoundedTreeAutomorphism,
    s: &FiniteTree,
    t: &FiniteTree,
) -> Result<StabilizerFactorization> {
    let m = phi.m;
    if !s.is_within(m) || !t.is_within(m) {
        return Err(Error::precondition(format!("subtrees must lie in {m}^(<={m})")));
    }
    let common = s.intersection(t);
    if !phi.fixes(&common) {
        return Err(Error::precondition("the automorphism moves a node of the common subtree"));
    }
    let big = (2 * m).max(1);
    let f = BoundedTreeAutomorphism::from_sibling_perms(big, |u| {
        let mut p: Vec<usize> = (0..big).collect();
        if common.contains(u) {
            for a in 0..m {
                let mut v = u.to_vec();
                v.push(a);
                if s.contains(&v) && !common.contains(&v) {
                    p.swap(a, a + m);
                }
            }
        }
        p
    })?;
    let g = BoundedTreeAutomorphism::from_sibling_perms(big, |u| {
        let mut v = u.to_vec();
        if in_bounded(m, u) && u.len() < m {
            (0..big)
                .map(|i| {
                    if i < m {
                        v.push(i);
                        let j = *phi.map[&v].last().expect("nonroot");
                        v.pop();
                        j
                    } else {
                        i
                    }
                })
                .collect()
        } else {
            (0..big).collect()
        }
    })?;
    let out = StabilizerFactorization { f, g };
    verify_factorization(phi, s, t, &out).map_err(Error::defect)?;
    Ok(out)
}

/// Checks the three clauses of a stabilizer factorization from raw data.
pub fn verify_factorization(
    phi: &BoundedTreeAutomorphism,
    s: &FiniteTree,
    t: &FiniteTree,
    out: &StabilizerFactorization,
) -> std::result::Result<(), String> {
    let (f, g) = (&out.f, &out.g);
    if let Some((u, _)) = phi.map.iter().find(|(u, v)| g.map.get(*u) != Some(v)) {
        return Err(format!("g does not extend the automorphism at {u:?}"));
    }
    if let Some(u) = t.nodes.iter().find(|u| f.map.get(*u) != Some(u)) {
        return Err(format!("f moves {u:?} of T"));
    }
    let f_inv = f.inverse();
    if let Some(u) = s.nodes.iter().find(|u| f_inv.map[&g.map[&f.map[*u]]] != **u) {
        return Err(format!("f^-1 g f moves {u:?} of S"));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn iso(pairs: &[(&[usize], &[usize])]) -> TreeIso {
        TreeIso::new(pairs.iter().map(|(a, b)| (a.to_vec(), b.to_vec()))).unwrap()
    }

    #[test]
    fn bounded_tree_sizes() {
        assert_eq!(bounded_nodes(1).len(), 2);
        assert_eq!(bounded_nodes(2).len(), 7);
        assert_eq!(bounded_nodes(3).len(), 40);
        assert_eq!(subtrees(2, 7).unwrap().len(), 25);
    }

    #[test]
    fn swap_at_root_completes_with_identity_below() {
        let phi = iso(&[(&[], &[]), (&[0], &[1])]);
        let psi = extend_to_tree_automorphism(&phi, 2).unwrap();
        assert_eq!(psi.apply(&[1]), &vec![0]);
        assert_eq!(psi.apply(&[0, 0]), &vec![1, 0]);
        assert_eq!(psi.apply(&[0, 1]), &vec![1, 1]);
        assert_eq!(psi.apply(&[1, 1]), &vec![0, 1]);
    }

    #[test]
    fn identity_extends_to_identity() {
        let full = BoundedTreeAutomorphism::identity(2);
        let psi = extend_to_tree_automorphism(&full.as_iso(), 2).unwrap();
        assert_eq!(psi, full);
    }

    #[test]
    fn rejects_level_change() {
        assert!(TreeIso::new(vec![(vec![], vec![]), (vec![0], vec![0]), (vec![1], vec![0, 0])]).is_err());
    }

    #[test]
    fn common_extension_of_equal_tuples() {
        let a = extend_to_tree_automorphism(&iso(&[(&[], &[]), (&[0], &[1])]), 2).unwrap();
        let out = common_extension(&[a.clone()], &[a], 2).unwrap();
        assert_eq!(out.thetas[0].m(), 4);
    }

    #[test]
    fn common_extension_over_one_point() {
        let id = BoundedTreeAutomorphism::identity(2);
        let below_one = extend_to_tree_automorphism(&iso(&[(&[], &[]), (&[1], &[1]), (&[1, 0], &[1, 1])]), 2).unwrap();
        let out = common_extension(&[id.clone()], &[below_one], 1).unwrap();
        assert!(out.thetas[0].restrict(2).unwrap() == id);
        let root_swap = extend_to_tree_automorphism(&iso(&[(&[], &[]), (&[0], &[1])]), 2).unwrap();
        assert!(matches!(common_extension(&[id], &[root_swap], 1), Err(Error::Disagreement(_))));
    }

    #[test]
    fn factorization_of_root_swap() {
        let phi = extend_to_tree_automorphism(&iso(&[(&[], &[]), (&[0], &[1])]), 2).unwrap();
        let s = FiniteTree::new(vec![vec![], vec![0]]).unwrap();
        let t = FiniteTree::new(vec![vec![], vec![1]]).unwrap();
        let out = factor_through_stabilizers(&phi, &s, &t).unwrap();
        assert_eq!(out.f.m(), 4);
        assert_eq!(out.f.apply(&[0]), &vec![2]);
    }

    #[test]
    fn equal_subtrees_need_no_conjugation() {
        let s = FiniteTree::new(vec![vec![], vec![0]]).unwrap();
        let phi = extend_to_tree_automorphism(&iso(&[(&[], &[]), (&[0], &[0]), (&[0, 0], &[0, 1])]), 2).unwrap();
        let out = factor_through_stabilizers(&phi, &s, &s).unwrap();
        assert_eq!(out.f, BoundedTreeAutomorphism::identity(4));
    }

    #[test]
    fn rejects_moving_the_common_part() {
        let phi = extend_to_tree_automorphism(&iso(&[(&[], &[]), (&[0], &[1])]), 2).unwrap();
        let s = FiniteTree::new(vec![vec![], vec![0]]).unwrap();
        assert!(factor_through_stabilizers(&phi, &s, &s).is_err());
    }
}
