//! Finite metric spaces with rational distances and their partial isometries.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rational::Rational;

pub type PartialMap = BTreeMap<String, String>;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "SpaceDoc", into = "SpaceDoc")]
pub struct FiniteMetricSpace {
    points: Vec<String>,
    dist: Vec<Vec<Rational>>,
}

#[derive(Serialize, Deserialize)]
struct SpaceDoc {
    points: Vec<String>,
    dist: Vec<Vec<Rational>>,
}

impl TryFrom<SpaceDoc> for FiniteMetricSpace {
    type Error = Error;
    fn try_from(d: SpaceDoc) -> Result<Self> {
        FiniteMetricSpace::new(d.points, d.dist)
    }
}

impl From<FiniteMetricSpace> for SpaceDoc {
    fn from(s: FiniteMetricSpace) -> Self {
        SpaceDoc { points: s.points, dist: s.dist }
    }
}

impl FiniteMetricSpace {
    pub fn new(points: Vec<String>, dist: Vec<Vec<Rational>>) -> Result<Self> {
        let n = points.len();
        if n == 0 {
            return Err(Error::invalid("empty metric space"));
        }
        if points.iter().collect::<BTreeSet<_>>().len() != n {
            return Err(Error::invalid("duplicate point labels"));
        }
        if dist.len() != n || dist.iter().any(|r| r.len() != n) {
            return Err(Error::invalid("distance matrix has the wrong shape"));
        }
        for i in 0..n {
            if !dist[i][i].is_zero() {
                return Err(Error::invalid(format!("d({0}, {0}) is not 0", points[i])));
            }
            for j in 0..n {
                if i != j && (!dist[i][j].is_positive() || dist[i][j] != dist[j][i]) {
                    return Err(Error::invalid(format!("d({}, {}) is not positive and symmetric", points[i], points[j])));
                }
            }
        }
        let s = FiniteMetricSpace { points, dist };
        if let Some((i, j, k)) = s.triangle_violation() {
            return Err(Error::invalid(format!(
                "triangle inequality fails at {}, {}, {}",
                s.points[i], s.points[j], s.points[k]
            )));
        }
        Ok(s)
    }

    /// Builds a space from integer distances.
    pub fn from_integers(points: &[&str], dist: &[&[i64]]) -> Result<Self> {
        FiniteMetricSpace::new(
            points.iter().map(|p| p.to_string()).collect(),
            dist.iter().map(|r| r.iter().map(|&x| Rational::integer(x)).collect()).collect(),
        )
    }

    fn triangle_violation(&self) -> Option<(usize, usize, usize)> {
        let n = self.points.len();
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    if self.dist[i][k] > &self.dist[i][j] + &self.dist[j][k] {
                        return Some((i, j, k));
                    }
                }
            }
        }
        None
    }

    pub fn points(&self) -> &[String] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn index(&self, p: &str) -> Option<usize> {
        self.points.iter().position(|x| x == p)
    }

    pub fn d(&self, p: &str, q: &str) -> Option<&Rational> {
        Some(&self.dist[self.index(p)?][self.index(q)?])
    }

    pub fn dist_matrix(&self) -> &[Vec<Rational>] {
        &self.dist
    }

    pub fn diam(&self) -> Rational {
        self.dist.iter().flatten().cloned().fold(Rational::zero(), Rational::max)
    }

    /// True when `phi` maps points of this space injectively into it and
    /// preserves every distance.
    pub fn is_partial_isometry(&self, phi: &PartialMap) -> bool {
        self.isometry_violation(phi).is_none()
    }

    fn isometry_violation(&self, phi: &PartialMap) -> Option<String> {
        let image: BTreeSet<&String> = phi.values().collect();
        if image.len() != phi.len() {
            return Some("map is not injective".into());
        }
        for (x, y) in phi {
            if self.index(x).is_none() || self.index(y).is_none() {
                return Some(format!("{x} ↦ {y} leaves the space"));
            }
        }
        for (x, y) in phi {
            for (u, v) in phi {
                if self.d(x, u) != self.d(y, v) {
                    return Some(format!("d({x}, {u}) is not preserved"));
                }
            }
        }
        None
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "MetricDoc", into = "MetricDoc")]
pub struct MetricSystem {
    space: FiniteMetricSpace,
    isos: Vec<PartialMap>,
}

#[derive(Serialize, Deserialize)]
struct MetricDoc {
    space: FiniteMetricSpace,
    isos: Vec<PartialMap>,
}

impl TryFrom<MetricDoc> for MetricSystem {
    type Error = Error;
    fn try_from(d: MetricDoc) -> Result<Self> {
        MetricSystem::new(d.space, d.isos)
    }
}

impl From<MetricSystem> for MetricDoc {
    fn from(s: MetricSystem) -> Self {
        MetricDoc { space: s.space, isos: s.isos }
    }
}

impl MetricSystem {
    pub fn new(space: FiniteMetricSpace, isos: Vec<PartialMap>) -> Result<Self> {
        for (i, phi) in isos.iter().enumerate() {
            if let Some(why) = space.isometry_violation(phi) {
                return Err(Error::invalid(format!("map {i}: {why}")));
            }
        }
        Ok(MetricSystem { space, isos })
    }

    pub fn space(&self) -> &FiniteMetricSpace {
        &self.space
    }

    pub fn isos(&self) -> &[PartialMap] {
        &self.isos
    }

    pub fn arity(&self) -> usize {
        self.isos.len()
    }
}

/// A metric system with embeddings (label maps) of two systems into it.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MetricJoin {
    pub system: MetricSystem,
    pub left: PartialMap,
    pub right: PartialMap,
}

/// Checks that `e` is an isometric embedding of `s` into `u` carrying each
/// map of `s` into the corresponding map of `u`.
pub fn check_metric_embedding(s: &MetricSystem, u: &MetricSystem, e: &PartialMap) -> Result<()> {
    if s.arity() != u.arity() {
        return Err(Error::ArityMismatch { left: s.arity(), right: u.arity() });
    }
    if e.len() != s.space.len() || s.space.points.iter().any(|p| !e.contains_key(p)) {
        return Err(Error::NotEmbedding("not defined on every point".into()));
    }
    for (x, ex) in e {
        for (y, ey) in e {
            if u.space.d(ex, ey).is_none() || s.space.d(x, y) != u.space.d(ex, ey) {
                return Err(Error::NotEmbedding(format!("d({x}, {y}) is not preserved")));
            }
        }
    }
    for (i, (phi, chi)) in s.isos.iter().zip(&u.isos).enumerate() {
        for (x, y) in phi {
            if chi.get(&e[x]) != Some(&e[y]) {
                return Err(Error::NotEmbedding(format!("map {i} is not carried at {x}")));
            }
        }
    }
    Ok(())
}

/// Disjoint union with every cross distance `diam(S) + diam(T) + 1`.
/// Points are relabelled `s.x` and `t.y`.
pub fn jep_metric_systems(s: &MetricSystem, t: &MetricSystem) -> Result<MetricJoin> {
    if s.arity() != t.arity() {
        return Err(Error::ArityMismatch { left: s.arity(), right: t.arity() });
    }
    let k = s.space.diam() + t.space.diam() + Rational::one();
    let left: PartialMap = s.space.points.iter().map(|p| (p.clone(), format!("s.{p}"))).collect();
    let right: PartialMap = t.space.points.iter().map(|p| (p.clone(), format!("t.{p}"))).collect();
    let (m, n) = (s.space.len(), t.space.len());
    let mut points: Vec<String> = s.space.points.iter().map(|p| left[p].clone()).collect();
    points.extend(t.space.points.iter().map(|p| right[p].clone()));
    let mut dist = vec![vec![k.clone(); m + n]; m + n];
    for i in 0..m {
        for j in 0..m {
            dist[i][j] = s.space.dist[i][j].clone();
        }
    }
    for i in 0..n {
        for j in 0..n {
            dist[m + i][m + j] = t.space.dist[i][j].clone();
        }
    }
    let space = FiniteMetricSpace::new(points, dist).map_err(|e| Error::defect(format!("union: {e}")))?;
    let isos = s
        .isos
        .iter()
        .zip(&t.isos)
        .map(|(p, q)| {
            let mut chi: PartialMap = p.iter().map(|(x, y)| (left[x].clone(), left[y].clone())).collect();
            chi.extend(q.iter().map(|(x, y)| (right[x].clone(), right[y].clone())));
            chi
        })
        .collect();
    let system = MetricSystem::new(space, isos).map_err(|e| Error::defect(format!("union maps: {e}")))?;
    check_metric_embedding(s, &system, &left)?;
    check_metric_embedding(t, &system, &right)?;
    Ok(MetricJoin { system, left, right })
}

/// Glues `b` and `c` along their common points, putting each cross distance
/// at the shortest path through the common part.
pub fn amalgamate_metric(b: &FiniteMetricSpace, c: &FiniteMetricSpace) -> Result<FiniteMetricSpace> {
    let shared: Vec<&String> = b.points.iter().filter(|p| c.index(p).is_some()).collect();
    if shared.is_empty() {
        return Err(Error::precondition("the spaces share no points"));
    }
    for x in &shared {
        for y in &shared {
            if b.d(x, y) != c.d(x, y) {
                return Err(Error::Disagreement(format!("d({x}, {y})")));
            }
        }
    }
    let mut points = b.points.clone();
    points.extend(c.points.iter().filter(|p| b.index(p).is_none()).cloned());
    let n = points.len();
    let mut dist = vec![vec![Rational::zero(); n]; n];
    for i in 0..n {
        for j in 0..n {
            let (p, q) = (&points[i], &points[j]);
            dist[i][j] = if let (Some(x), Some(y)) = (b.d(p, q), c.d(p, q)) {
                debug_assert_eq!(x, y);
                x.clone()
            } else if let Some(x) = b.d(p, q) {
                x.clone()
            } else if let Some(x) = c.d(p, q) {
                x.clone()
            } else {
                let (pb, qc) = if b.index(p).is_some() { (p, q) } else { (q, p) };
                shared
                    .iter()
                    .map(|z| b.d(pb, z).expect("b point") + c.d(z, qc).expect("c point"))
                    .min()
                    .expect("nonempty common part")
            };
        }
    }
    let out = FiniteMetricSpace::new(points, dist).map_err(|e| Error::defect(format!("glued space: {e}")))?;
    Ok(out)
}

/// The union of partial isometries `phi` of `b` and `chi` of `c`, checked to
/// be a partial isometry of the glued space `glued`.
pub fn union_isometry(
    glued: &FiniteMetricSpace,
    b: &FiniteMetricSpace,
    c: &FiniteMetricSpace,
    phi: &PartialMap,
    chi: &PartialMap,
) -> Result<PartialMap> {
    for p in b.points.iter().filter(|p| c.index(p).is_some()) {
        if phi.get(p) != chi.get(p) {
            return Err(Error::Disagreement(format!("the maps differ at {p}")));
        }
    }
    let mut theta = phi.clone();
    theta.extend(chi.iter().map(|(x, y)| (x.clone(), y.clone())));
    if let Some(why) = glued.isometry_violation(&theta) {
        return Err(Error::invalid(format!("union is not a partial isometry: {why}")));
    }
    Ok(theta)
}
