//! Classes of finite structures given by one colour per ordered pair of
//! distinct points, axiomatized by conditions on pairs and triples: graphs,
//! linear orders, equivalence relations with at most two classes, and metric
//! spaces with distances in `1..=d`.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::{ClassDriver, Span};
use crate::enumerate::permutations;
use crate::error::{Error, Result};

/// The axioms of a class: which colours an ordered pair may take and which
/// coloured triangles are allowed.
pub trait PairTheory: Send + Sync {
    fn name(&self) -> String;
    fn colours(&self) -> Vec<u8>;
    /// Whether the pair `(x, y)` may have colour `xy` while `(y, x)` has `yx`.
    fn pair_ok(&self, xy: u8, yx: u8) -> bool;
    /// Whether colours `xy`, `yz`, `xz` are allowed on distinct `x, y, z`.
    /// Checked for every ordering of every triple.
    fn triple_ok(&self, xy: u8, yz: u8, xz: u8) -> bool;
}

/// Equivalence relations with at most two classes; colour 1 means
/// equivalent.
#[derive(Clone, Copy, Debug, Default)]
pub struct EquivalenceTwo;

impl PairTheory for EquivalenceTwo {
    fn name(&self) -> String {
        "equiv2".into()
    }
    fn colours(&self) -> Vec<u8> {
        vec![0, 1]
    }
    fn pair_ok(&self, xy: u8, yx: u8) -> bool {
        xy == yx
    }
    fn triple_ok(&self, xy: u8, yz: u8, xz: u8) -> bool {
        !(xy == 1 && yz == 1 && xz == 0) && !(xy == 0 && yz == 0 && xz == 0)
    }
}

/// Linear orders; colour 1 on `(x, y)` means `x < y`.
#[derive(Clone, Copy, Debug, Default)]
pub struct LinearOrder;

impl PairTheory for LinearOrder {
    fn name(&self) -> String {
        "linear-order".into()
    }
    fn colours(&self) -> Vec<u8> {
        vec![0, 1]
    }
    fn pair_ok(&self, xy: u8, yx: u8) -> bool {
        xy != yx
    }
    fn triple_ok(&self, xy: u8, yz: u8, xz: u8) -> bool {
        !(xy == 1 && yz == 1 && xz == 0)
    }
}

/// Simple graphs; colour 1 is an edge.
#[derive(Clone, Copy, Debug, Default)]
pub struct Graph;

impl PairTheory for Graph {
    fn name(&self) -> String {
        "graph".into()
    }
    fn colours(&self) -> Vec<u8> {
        vec![0, 1]
    }
    fn pair_ok(&self, xy: u8, yx: u8) -> bool {
        xy == yx
    }
    fn triple_ok(&self, _: u8, _: u8, _: u8) -> bool {
        true
    }
}

/// Metric spaces with integer distances in `1..=max`.
#[derive(Clone, Copy, Debug)]
pub struct BoundedMetric {
    pub max: u8,
}

impl PairTheory for BoundedMetric {
    fn name(&self) -> String {
        format!("metric{}", self.max)
    }
    fn colours(&self) -> Vec<u8> {
        (1..=self.max).collect()
    }
    fn pair_ok(&self, xy: u8, yx: u8) -> bool {
        xy == yx
    }
    fn triple_ok(&self, xy: u8, yz: u8, xz: u8) -> bool {
        xz <= xy + yz
    }
}

/// A structure on points `0..k` with `n` partial isomorphisms.
/// `colour[x * k + y]` is the colour of `(x, y)`; the diagonal is 0.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct RelSystem {
    pub k: usize,
    pub colour: Vec<u8>,
    pub maps: Vec<Vec<Option<usize>>>,
}

/// An injective point map.
pub type PointMap = Vec<usize>;

impl RelSystem {
    pub fn c(&self, x: usize, y: usize) -> u8 {
        self.colour[x * self.k + y]
    }

    fn relabel(&self, p: &[usize]) -> RelSystem {
        let k = self.k;
        let mut colour = vec![0; k * k];
        for x in 0..k {
            for y in 0..k {
                colour[p[x] * k + p[y]] = self.colour[x * k + y];
            }
        }
        let maps = self
            .maps
            .iter()
            .map(|f| {
                let mut g = vec![None; k];
                for x in 0..k {
                    g[p[x]] = f[x].map(|y| p[y]);
                }
                g
            })
            .collect();
        RelSystem { k, colour, maps }
    }

    /// The least relabelling in the derived order.
    pub fn canonical(&self) -> RelSystem {
        permutations(self.k).iter().map(|p| self.relabel(p)).min().expect("at least one relabelling")
    }

    /// The structure alone with `n` identity maps.
    pub fn pinned(&self, n: usize) -> RelSystem {
        RelSystem { k: self.k, colour: self.colour.clone(), maps: vec![(0..self.k).map(Some).collect(); n] }
    }

    fn valid<T: PairTheory + ?Sized>(&self, th: &T) -> bool {
        let k = self.k;
        for x in 0..k {
            for y in 0..k {
                if x != y && !th.pair_ok(self.c(x, y), self.c(y, x)) {
                    return false;
                }
                for z in 0..k {
                    if x != y && y != z && x != z && !th.triple_ok(self.c(x, y), self.c(y, z), self.c(x, z)) {
                        return false;
                    }
                }
            }
        }
        self.maps.iter().all(|f| is_partial_iso(self, f))
    }
}

fn is_partial_iso(s: &RelSystem, f: &[Option<usize>]) -> bool {
    let mut hit = vec![false; s.k];
    for y in f.iter().flatten() {
        if *y >= s.k || std::mem::replace(&mut hit[*y], true) {
            return false;
        }
    }
    (0..s.k).all(|x| (0..s.k).all(|y| x == y || !matches!((f[x], f[y]), (Some(a), Some(b)) if s.c(x, y) != s.c(a, b))))
}

/// Whether `e` embeds `s` into `t`: injective, colour-preserving, and
/// `e ∘ ψ_i ⊆ φ_i ∘ e` for every map.
pub fn is_rel_embedding(e: &[usize], s: &RelSystem, t: &RelSystem) -> bool {
    if e.len() != s.k || s.maps.len() != t.maps.len() || e.iter().any(|&x| x >= t.k) {
        return false;
    }
    let distinct: BTreeSet<usize> = e.iter().copied().collect();
    if distinct.len() != e.len() {
        return false;
    }
    for x in 0..s.k {
        for y in 0..s.k {
            if x != y && s.c(x, y) != t.c(e[x], e[y]) {
                return false;
            }
        }
    }
    s.maps.iter().zip(&t.maps).all(|(f, g)| (0..s.k).all(|x| f[x].map_or(true, |y| g[e[x]] == Some(e[y]))))
}

fn compose(first: &[usize], then: &[usize]) -> PointMap {
    first.iter().map(|&x| then[x]).collect()
}

/// All colourings of `k` points satisfying the theory, by backtracking over
/// unordered pairs.
fn colourings<T: PairTheory + ?Sized>(th: &T, k: usize) -> Vec<Vec<u8>> {
    let pairs: Vec<(usize, usize)> = (0..k).flat_map(|x| (x + 1..k).map(move |y| (x, y))).collect();
    let options: Vec<(u8, u8)> =
        th.colours().iter().flat_map(|&a| th.colours().into_iter().map(move |b| (a, b))).filter(|&(a, b)| th.pair_ok(a, b)).collect();
    let mut out = Vec::new();
    let mut colour = vec![0u8; k * k];
    let mut known = vec![false; k * k];
    fn go<T: PairTheory + ?Sized>(
        th: &T,
        k: usize,
        i: usize,
        pairs: &[(usize, usize)],
        options: &[(u8, u8)],
        colour: &mut Vec<u8>,
        known: &mut Vec<bool>,
        out: &mut Vec<Vec<u8>>,
    ) {
        if i == pairs.len() {
            out.push(colour.clone());
            return;
        }
        let (x, y) = pairs[i];
        for &(a, b) in options {
            colour[x * k + y] = a;
            colour[y * k + x] = b;
            known[x * k + y] = true;
            known[y * k + x] = true;
            if triangles_ok(th, k, colour, known, x, y) {
                go(th, k, i + 1, pairs, options, colour, known, out);
            }
            known[x * k + y] = false;
            known[y * k + x] = false;
        }
    }
    go(th, k, 0, &pairs, &options, &mut colour, &mut known, &mut out);
    out
}

/// Checks every fully known triangle through the pair `{x, y}`.
fn triangles_ok<T: PairTheory + ?Sized>(th: &T, k: usize, colour: &[u8], known: &[bool], x: usize, y: usize) -> bool {
    let c = |a: usize, b: usize| colour[a * k + b];
    for z in 0..k {
        if z == x || z == y || !known[x * k + z] || !known[y * k + z] {
            continue;
        }
        for [a, b, d] in [[x, y, z], [x, z, y], [y, x, z], [y, z, x], [z, x, y], [z, y, x]] {
            if !th.triple_ok(c(a, b), c(b, d), c(a, d)) {
                return false;
            }
        }
    }
    true
}

/// All partial isomorphisms of a structure, as partial injections.
fn partial_isos(s: &RelSystem) -> Vec<Vec<Option<usize>>> {
    let k = s.k;
    let mut out = Vec::new();
    let mut f = vec![None; k];
    let mut used = vec![false; k];
    fn go(s: &RelSystem, x: usize, f: &mut Vec<Option<usize>>, used: &mut Vec<bool>, out: &mut Vec<Vec<Option<usize>>>) {
        if x == s.k {
            out.push(f.clone());
            return;
        }
        f[x] = None;
        go(s, x + 1, f, used, out);
        for y in 0..s.k {
            if used[y] || (0..x).any(|w| f[w].is_some_and(|fw| s.c(w, x) != s.c(fw, y) || s.c(x, w) != s.c(y, fw))) {
                continue;
            }
            used[y] = true;
            f[x] = Some(y);
            go(s, x + 1, f, used, out);
            used[y] = false;
            f[x] = None;
        }
    }
    go(s, 0, &mut f, &mut used, &mut out);
    out
}

/// Searches for a structure on the union of the images of `a` and `b`
/// in which the points of `forced` are identified. Tries extra
/// identifications in increasing number, then colours the cross pairs by
/// backtracking; the first success in this order is returned. Any joint
/// embedding restricts to the union of the images, so a `None` is a proof
/// that none exists.
pub fn glue_search<T: PairTheory + ?Sized>(
    th: &T,
    a: &RelSystem,
    b: &RelSystem,
    forced: &[(usize, usize)],
) -> Option<Span<RelSystem, PointMap>> {
    let free_a: Vec<usize> = (0..a.k).filter(|x| !forced.iter().any(|p| p.0 == *x)).collect();
    let free_b: Vec<usize> = (0..b.k).filter(|y| !forced.iter().any(|p| p.1 == *y)).collect();
    let max_extra = free_a.len().min(free_b.len());
    for extra in 0..=max_extra {
        let mut found = None;
        for_each_injection(&free_a, &free_b, extra, &mut |glue| {
            let mut all: Vec<(usize, usize)> = forced.to_vec();
            all.extend_from_slice(glue);
            found = try_gluing(th, a, b, &all);
            found.is_some()
        });
        if found.is_some() {
            return found;
        }
    }
    None
}

/// Calls `f` on each injective pairing of `size` points of `xs` with points
/// of `ys`, in lexicographic order, until it returns true.
fn for_each_injection(xs: &[usize], ys: &[usize], size: usize, f: &mut dyn FnMut(&[(usize, usize)]) -> bool) -> bool {
    fn go(xs: &[usize], ys: &[usize], start: usize, size: usize, used: &mut Vec<bool>, acc: &mut Vec<(usize, usize)>, f: &mut dyn FnMut(&[(usize, usize)]) -> bool) -> bool {
        if acc.len() == size {
            return f(acc);
        }
        for i in start..xs.len() {
            for j in 0..ys.len() {
                if used[j] {
                    continue;
                }
                used[j] = true;
                acc.push((xs[i], ys[j]));
                let stop = go(xs, ys, i + 1, size, used, acc, f);
                acc.pop();
                used[j] = false;
                if stop {
                    return true;
                }
            }
        }
        false
    }
    go(xs, ys, 0, size, &mut vec![false; ys.len()], &mut Vec::new(), f)
}

fn try_gluing<T: PairTheory + ?Sized>(th: &T, a: &RelSystem, b: &RelSystem, glue: &[(usize, usize)]) -> Option<Span<RelSystem, PointMap>> {
    let ea: PointMap = (0..a.k).collect();
    let mut eb: PointMap = vec![usize::MAX; b.k];
    for &(x, y) in glue {
        eb[y] = x;
    }
    let mut next = a.k;
    for slot in eb.iter_mut().filter(|s| **s == usize::MAX) {
        *slot = next;
        next += 1;
    }
    let k = next;
    let mut colour = vec![0u8; k * k];
    let mut known = vec![false; k * k];
    for x in 0..a.k {
        for y in 0..a.k {
            if x != y {
                colour[x * k + y] = a.c(x, y);
                known[x * k + y] = true;
            }
        }
    }
    for x in 0..b.k {
        for y in 0..b.k {
            if x == y {
                continue;
            }
            let (u, v) = (eb[x], eb[y]);
            if known[u * k + v] && colour[u * k + v] != b.c(x, y) {
                return None;
            }
            colour[u * k + v] = b.c(x, y);
            known[u * k + v] = true;
        }
    }
    let mut maps = Vec::with_capacity(a.maps.len());
    for (f, g) in a.maps.iter().zip(&b.maps) {
        let mut h: Vec<Option<usize>> = vec![None; k];
        let mut add = |u: usize, v: usize| -> bool {
            match h[u] {
                Some(w) => w == v,
                None => {
                    h[u] = Some(v);
                    true
                }
            }
        };
        for x in 0..a.k {
            if let Some(y) = f[x] {
                if !add(ea[x], ea[y]) {
                    return None;
                }
            }
        }
        for x in 0..b.k {
            if let Some(y) = g[x] {
                if !add(eb[x], eb[y]) {
                    return None;
                }
            }
        }
        let image: BTreeSet<usize> = h.iter().flatten().copied().collect();
        if image.len() != h.iter().flatten().count() {
            return None;
        }
        maps.push(h);
    }
    let mut r = Search { th, k, colour, known, maps };
    if !r.all_known_ok() {
        return None;
    }
    let unknown: Vec<(usize, usize)> = (0..k).flat_map(|x| (x + 1..k).map(move |y| (x, y))).filter(|&(x, y)| !r.known[x * k + y]).collect();
    let options: Vec<(u8, u8)> =
        th.colours().iter().flat_map(|&p| th.colours().into_iter().map(move |q| (p, q))).filter(|&(p, q)| th.pair_ok(p, q)).collect();
    if !r.fill(&unknown, 0, &options) {
        return None;
    }
    let system = RelSystem { k, colour: r.colour, maps: r.maps };
    Some(Span { system, left: ea, right: eb })
}

struct Search<'a, T: PairTheory + ?Sized> {
    th: &'a T,
    k: usize,
    colour: Vec<u8>,
    known: Vec<bool>,
    maps: Vec<Vec<Option<usize>>>,
}

impl<T: PairTheory + ?Sized> Search<'_, T> {
    fn get(&self, x: usize, y: usize) -> Option<u8> {
        self.known[x * self.k + y].then(|| self.colour[x * self.k + y])
    }

    /// Every constraint whose colours are all known holds.
    fn all_known_ok(&self) -> bool {
        (0..self.k).all(|x| (x + 1..self.k).all(|y| self.get(x, y).is_none() || self.ok_at(x, y)))
    }

    /// Constraints through the pair `{x, y}`.
    fn ok_at(&self, x: usize, y: usize) -> bool {
        let (Some(xy), Some(yx)) = (self.get(x, y), self.get(y, x)) else { return true };
        if !self.th.pair_ok(xy, yx) || !triangles_ok(self.th, self.k, &self.colour, &self.known, x, y) {
            return false;
        }
        for h in &self.maps {
            if let (Some(u), Some(v)) = (h[x], h[y]) {
                if matches!(self.get(u, v), Some(c) if c != xy) || matches!(self.get(v, u), Some(c) if c != yx) {
                    return false;
                }
            }
            let pre = |t: usize| h.iter().position(|z| *z == Some(t));
            if let (Some(u), Some(v)) = (pre(x), pre(y)) {
                if matches!(self.get(u, v), Some(c) if c != xy) || matches!(self.get(v, u), Some(c) if c != yx) {
                    return false;
                }
            }
        }
        true
    }

    fn fill(&mut self, unknown: &[(usize, usize)], i: usize, options: &[(u8, u8)]) -> bool {
        if i == unknown.len() {
            return true;
        }
        let (x, y) = unknown[i];
        let k = self.k;
        for &(p, q) in options {
            self.colour[x * k + y] = p;
            self.colour[y * k + x] = q;
            self.known[x * k + y] = true;
            self.known[y * k + x] = true;
            if self.ok_at(x, y) && self.fill(unknown, i + 1, options) {
                return true;
            }
            self.known[x * k + y] = false;
            self.known[y * k + x] = false;
        }
        false
    }
}

/// A class driver over a pair theory. With `full_cofinal`, the cofinal
/// subclass is the systems whose maps are all automorphisms.
#[derive(Clone, Debug, Default)]
pub struct RelationalDriver<T> {
    pub theory: T,
    pub full_cofinal: bool,
}

/// Largest number of candidates visited when searching for a full
/// extension.
pub const FULL_SEARCH_CAP: usize = 5000;

fn is_full(s: &RelSystem) -> bool {
    s.maps.iter().all(|f| f.iter().all(Option::is_some))
}

impl<T: PairTheory> RelationalDriver<T> {
    pub fn new(theory: T) -> Self {
        RelationalDriver { theory, full_cofinal: false }
    }

    pub fn with_full_cofinal(theory: T) -> Self {
        RelationalDriver { theory, full_cofinal: true }
    }

    /// Structures of exactly `k` points up to isomorphism, with `n` empty maps.
    pub fn structures(&self, k: usize, n: usize) -> Vec<RelSystem> {
        let set: BTreeSet<RelSystem> = colourings(&self.theory, k)
            .into_iter()
            .map(|colour| RelSystem { k, colour, maps: vec![vec![None; k]; n] }.canonical())
            .collect();
        set.into_iter().collect()
    }
}

impl<T: PairTheory> ClassDriver for RelationalDriver<T> {
    type System = RelSystem;
    type Embedding = PointMap;

    fn name(&self) -> String {
        self.theory.name()
    }

    fn size(&self, s: &RelSystem) -> usize {
        s.k
    }

    fn validate(&self, s: &RelSystem) -> Result<()> {
        if s.colour.len() != s.k * s.k || s.maps.iter().any(|f| f.len() != s.k) {
            return Err(Error::invalid("colour table or map has the wrong length"));
        }
        if !s.valid(&self.theory) {
            return Err(Error::invalid(format!("structure is not a {} system", self.theory.name())));
        }
        Ok(())
    }

    fn systems(&self, n: usize, bound: usize) -> Result<Vec<RelSystem>> {
        let mut out = Vec::new();
        for k in 1..=bound {
            let mut level = BTreeSet::new();
            for s in self.structures(k, 0) {
                let isos = partial_isos(&s);
                let mut tuples: Vec<Vec<Vec<Option<usize>>>> = vec![Vec::new()];
                for _ in 0..n {
                    tuples = tuples.into_iter().flat_map(|t| isos.iter().map(move |f| [t.clone(), vec![f.clone()]].concat())).collect();
                }
                for maps in tuples {
                    level.insert(RelSystem { k, colour: s.colour.clone(), maps }.canonical());
                }
            }
            out.extend(level);
        }
        Ok(out)
    }

    fn is_embedding(&self, e: &PointMap, s: &RelSystem, t: &RelSystem) -> bool {
        is_rel_embedding(e, s, t)
    }

    fn embeddings(&self, s: &RelSystem, t: &RelSystem) -> Vec<PointMap> {
        let mut out = Vec::new();
        for_each_injection(&(0..s.k).collect::<Vec<_>>(), &(0..t.k).collect::<Vec<_>>(), s.k, &mut |pairs| {
            let e: PointMap = pairs.iter().map(|p| p.1).collect();
            if is_rel_embedding(&e, s, t) {
                out.push(e);
            }
            false
        });
        out
    }

    fn compose(&self, first: &PointMap, then: &PointMap) -> PointMap {
        compose(first, then)
    }

    fn identity(&self, s: &RelSystem) -> PointMap {
        (0..s.k).collect()
    }

    fn pinned(&self, base: &RelSystem, n: usize) -> RelSystem {
        base.pinned(n)
    }

    fn empty(&self, n: usize) -> RelSystem {
        RelSystem { k: 0, colour: Vec::new(), maps: vec![Vec::new(); n] }
    }

    fn amalgamate(
        &self,
        base: &RelSystem,
        left: (&RelSystem, &PointMap),
        right: (&RelSystem, &PointMap),
    ) -> Result<Option<Span<RelSystem, PointMap>>> {
        let forced: Vec<(usize, usize)> = (0..base.k).map(|x| (left.1[x], right.1[x])).collect();
        Ok(glue_search(&self.theory, left.0, right.0, &forced))
    }

    fn extensions(&self, s: &RelSystem) -> Result<Vec<(RelSystem, PointMap)>> {
        let k = s.k;
        let mut out = Vec::new();
        let options: Vec<(u8, u8)> = self
            .theory
            .colours()
            .iter()
            .flat_map(|&p| self.theory.colours().into_iter().map(move |q| (p, q)))
            .filter(|&(p, q)| self.theory.pair_ok(p, q))
            .collect();
        let mut ways: Vec<Vec<(u8, u8)>> = vec![Vec::new()];
        for _ in 0..k {
            ways = ways.into_iter().flat_map(|w| options.iter().map(move |o| [w.clone(), vec![*o]].concat())).collect();
        }
        for w in ways {
            let k1 = k + 1;
            let mut colour = vec![0u8; k1 * k1];
            for x in 0..k {
                for y in 0..k {
                    colour[x * k1 + y] = s.c(x, y);
                }
                colour[x * k1 + k] = w[x].0;
                colour[k * k1 + x] = w[x].1;
            }
            let base = RelSystem { k: k1, colour, maps: vec![vec![None; k1]; s.maps.len()] };
            if !base.valid(&self.theory) {
                continue;
            }
            let per_map: Vec<Vec<Vec<Option<usize>>>> = s
                .maps
                .iter()
                .map(|f| {
                    let mut g: Vec<Option<usize>> = f.clone();
                    g.push(None);
                    let dom_free: Vec<usize> = (0..k).filter(|&x| f[x].is_none()).collect();
                    let ran_free: Vec<usize> = (0..k).filter(|y| !f.contains(&Some(*y))).collect();
                    let mut cands = vec![g.clone()];
                    let mut both = g.clone();
                    both[k] = Some(k);
                    cands.push(both);
                    for &y in &ran_free {
                        let mut h = g.clone();
                        h[k] = Some(y);
                        cands.push(h.clone());
                        for &x in &dom_free {
                            let mut h2 = h.clone();
                            h2[x] = Some(k);
                            cands.push(h2);
                        }
                    }
                    for &x in &dom_free {
                        let mut h = g.clone();
                        h[x] = Some(k);
                        cands.push(h);
                    }
                    let t = RelSystem { maps: vec![], ..base.clone() };
                    cands.into_iter().filter(|h| is_partial_iso(&t, h)).collect()
                })
                .collect();
            let mut tuples: Vec<Vec<Vec<Option<usize>>>> = vec![Vec::new()];
            for opts in &per_map {
                tuples = tuples.into_iter().flat_map(|t| opts.iter().map(move |h| [t.clone(), vec![h.clone()]].concat())).collect();
            }
            for maps in tuples {
                out.push((RelSystem { maps, ..base.clone() }, (0..k).collect()));
            }
        }
        Ok(out)
    }

    fn arity(&self, s: &RelSystem) -> usize {
        s.maps.len()
    }

    fn search_bounds(&self) -> String {
        "amalgams searched on the union of the images (at most |S|+|T| points); one-step extensions add one point".into()
    }

    fn in_cofinal(&self, s: &RelSystem) -> Option<bool> {
        self.full_cofinal.then(|| is_full(s))
    }

    fn cofinal_witness(&self, s: &RelSystem) -> Result<Option<(RelSystem, PointMap)>> {
        if !self.full_cofinal {
            return Err(Error::Unsupported(format!("{} has no cofinal subclass", self.name())));
        }
        let limit = 2 * s.k + 2;
        let mut level = vec![(s.clone(), self.identity(s))];
        let mut seen = 0;
        while !level.is_empty() && seen < FULL_SEARCH_CAP {
            if let Some(hit) = level.iter().find(|(t, _)| is_full(t)) {
                return Ok(Some(hit.clone()));
            }
            seen += level.len();
            let mut next = Vec::new();
            for (t, e) in &level {
                if t.k < limit {
                    for (u, f) in self.extensions(t)? {
                        next.push((u, compose(e, &f)));
                    }
                }
            }
            level = next;
        }
        Ok(None)
    }

    fn refutes_jep(&self, s: &RelSystem, t: &RelSystem) -> bool {
        self.theory.name() == "equiv2" && (switch_refutes(s, t) || switch_refutes(t, s))
    }
}

/// For equivalence relations with at most two classes: `t` has points in
/// two classes and a map sending a point of one class into the other, while
/// `s` has a map sending a point into its own class. Any joint extension
/// would need one map of a two-class structure to both preserve and switch
/// the classes.
fn switch_refutes(s: &RelSystem, t: &RelSystem) -> bool {
    s.maps.iter().zip(&t.maps).any(|(f, g)| {
        let keeps = (0..s.k).any(|x| f[x].is_some_and(|y| x == y || s.c(x, y) == 1));
        let switches = (0..t.k).any(|x| g[x].is_some_and(|y| x != y && t.c(x, y) == 0));
        keeps && switches
    })
}
