//! Independent brute-force oracles shared by the integration tests.
#![allow(dead_code)]

pub mod trees {
    use std::collections::BTreeMap;

    use fraisse::enumerate::permutations;
    use fraisse::trees::{bounded_nodes, FiniteTree, Node};

    fn is_prefix(a: &[usize], b: &[usize]) -> bool {
        a.len() <= b.len() && &b[..a.len()] == a
    }

    /// True when `map` preserves the prefix relation in both directions on
    /// every pair of its nodes.
    pub fn preserves_prefix(map: &BTreeMap<Node, Node>) -> bool {
        map.iter().all(|(u, fu)| map.iter().all(|(v, fv)| is_prefix(u, v) == is_prefix(fu, fv)))
    }

    /// Every automorphism of `m^{<=m}`, found by testing all permutations of
    /// its nodes, listed by their breadth-first image vectors in increasing
    /// order.
    pub fn all_automorphisms(m: usize) -> Vec<Vec<Node>> {
        let nodes = bounded_nodes(m);
        let mut out: Vec<Vec<Node>> = permutations(nodes.len())
            .into_iter()
            .map(|p| p.iter().map(|&i| nodes[i].clone()).collect::<Vec<Node>>())
            .filter(|img| {
                let map: BTreeMap<Node, Node> = nodes.iter().cloned().zip(img.iter().cloned()).collect();
                preserves_prefix(&map)
            })
            .collect();
        out.sort();
        out
    }

    /// Every isomorphism between two subtrees of `m^{<=m}` with at most
    /// `max_nodes` nodes, by testing all bijections.
    pub fn all_partial_isos(m: usize, max_nodes: usize) -> Vec<BTreeMap<Node, Node>> {
        let trees = fraisse::trees::subtrees(m, max_nodes).unwrap();
        let mut out = Vec::new();
        for s in &trees {
            for t in trees.iter().filter(|t| t.len() == s.len()) {
                let sv: Vec<Node> = s.nodes().iter().cloned().collect();
                let tv: Vec<Node> = t.nodes().iter().cloned().collect();
                for p in permutations(sv.len()) {
                    let map: BTreeMap<Node, Node> = sv.iter().cloned().zip(p.iter().map(|&i| tv[i].clone())).collect();
                    if preserves_prefix(&map) {
                        out.push(map);
                    }
                }
            }
        }
        out
    }

    pub fn tree(nodes: &[&[usize]]) -> FiniteTree {
        FiniteTree::new(nodes.iter().map(|n| n.to_vec())).unwrap()
    }
}
