//! Finite Boolean algebras carrying exact rational probability measures.

use std::collections::BTreeMap;

use num_traits::ToPrimitive;
use serde::{Deserialize, Serialize};

use crate::algebra::{AmbientAlgebra, AtomId, Block};
use crate::error::{Error, Result};
use crate::rational::Rational;
use crate::system::{AlgebraEmbedding, PartialIso, PartialIsoSystem, SystemEmbedding};

/// Positive rational masses on the atoms of an ambient algebra, summing to 1.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "MeasureDoc", into = "MeasureDoc")]
pub struct RationalMeasure {
    ambient: AmbientAlgebra,
    mass: BTreeMap<AtomId, Rational>,
    dyadic: bool,
}

#[derive(Serialize, Deserialize)]
struct MeasureDoc {
    mass: BTreeMap<AtomId, Rational>,
    #[serde(default)]
    dyadic: bool,
}

impl TryFrom<MeasureDoc> for RationalMeasure {
    type Error = Error;
    fn try_from(d: MeasureDoc) -> Result<Self> {
        let ambient = AmbientAlgebra::new(d.mass.keys().cloned())?;
        RationalMeasure::new(ambient, d.mass, d.dyadic)
    }
}

impl From<RationalMeasure> for MeasureDoc {
    fn from(m: RationalMeasure) -> Self {
        MeasureDoc { mass: m.mass, dyadic: m.dyadic }
    }
}

impl RationalMeasure {
    pub fn new(ambient: AmbientAlgebra, mass: BTreeMap<AtomId, Rational>, dyadic: bool) -> Result<Self> {
        if mass.len() != ambient.len() || !ambient.atoms().iter().all(|a| mass.contains_key(a)) {
            return Err(Error::invalid("masses must be given for exactly the atoms"));
        }
        if let Some((a, _)) = mass.iter().find(|(_, m)| !m.is_positive()) {
            return Err(Error::invalid(format!("atom {a} has non-positive mass")));
        }
        let total: Rational = mass.values().sum();
        if total != Rational::one() {
            return Err(Error::invalid(format!("masses sum to {total}, not 1")));
        }
        if dyadic {
            if let Some((a, m)) = mass.iter().find(|(_, m)| !m.is_dyadic()) {
                return Err(Error::NonDyadic(format!("{a}: {m}")));
            }
        }
        Ok(RationalMeasure { ambient, mass, dyadic })
    }

    /// Equal masses on the atoms `0..n`.
    pub fn uniform(n: usize) -> Self {
        let ambient = AmbientAlgebra::numbered(n);
        let m = Rational::new(1, n as i64);
        let dyadic = m.is_dyadic();
        let mass = ambient.atoms().iter().map(|a| (a.clone(), m.clone())).collect();
        RationalMeasure { ambient, mass, dyadic }
    }

    pub fn ambient(&self) -> &AmbientAlgebra {
        &self.ambient
    }

    pub fn masses(&self) -> &BTreeMap<AtomId, Rational> {
        &self.mass
    }

    pub fn is_dyadic(&self) -> bool {
        self.dyadic
    }

    pub fn of_atom(&self, a: &AtomId) -> &Rational {
        &self.mass[a]
    }

    pub fn of(&self, b: &Block) -> Rational {
        b.iter().map(|a| &self.mass[a]).sum()
    }

    /// The same measure viewed through `e`: checks that `e` carries it onto
    /// `target` atom by atom.
    pub fn preserved_by(&self, e: &AlgebraEmbedding, target: &RationalMeasure) -> Result<()> {
        for (a, img) in &e.image {
            let m = target.of(img);
            if &m != self.of_atom(a) {
                return Err(Error::NotMeasurePreserving(format!("atom {a}: {} maps to mass {m}", self.of_atom(a))));
            }
        }
        Ok(())
    }
}

/// A system whose maps preserve the measure of every domain block.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "MeasuredDoc", into = "MeasuredDoc")]
pub struct MeasuredSystem {
    system: PartialIsoSystem,
    measure: RationalMeasure,
}

#[derive(Serialize, Deserialize)]
struct MeasuredDoc {
    system: PartialIsoSystem,
    measure: RationalMeasure,
}

impl TryFrom<MeasuredDoc> for MeasuredSystem {
    type Error = Error;
    fn try_from(d: MeasuredDoc) -> Result<Self> {
        MeasuredSystem::new(d.system, d.measure)
    }
}

impl From<MeasuredSystem> for MeasuredDoc {
    fn from(m: MeasuredSystem) -> Self {
        MeasuredDoc { system: m.system, measure: m.measure }
    }
}

impl MeasuredSystem {
    pub fn new(system: PartialIsoSystem, measure: RationalMeasure) -> Result<Self> {
        if system.ambient() != measure.ambient() {
            return Err(Error::MismatchedAmbient);
        }
        for (i, psi) in system.isos().iter().enumerate() {
            for (b, c) in psi.pairs() {
                if measure.of(b) != measure.of(c) {
                    return Err(Error::NotMeasurePreserving(format!("map {i} sends {b:?} to {c:?}")));
                }
            }
        }
        Ok(MeasuredSystem { system, measure })
    }

    pub fn system(&self) -> &PartialIsoSystem {
        &self.system
    }

    pub fn measure(&self) -> &RationalMeasure {
        &self.measure
    }

    /// True when every map is a permutation of atoms and all atoms have
    /// equal mass.
    pub fn is_full(&self) -> bool {
        let first = self.measure.mass.values().next().expect("nonempty");
        self.measure.mass.values().all(|m| m == first)
            && self.system.isos().iter().all(|p| p.pairs().iter().all(|(b, c)| b.len() == 1 && c.len() == 1))
    }
}

/// A measured amalgam together with the two embeddings into it.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MeasuredAmalgam {
    pub measure: RationalMeasure,
    pub left: AlgebraEmbedding,
    pub right: AlgebraEmbedding,
}

/// Cells of the product over a common base: pairs of left and right atoms
/// lying over the same base atom, labelled `i.j` by position.
fn cells_over(f: &AlgebraEmbedding, g: &AlgebraEmbedding, left: &AmbientAlgebra, right: &AmbientAlgebra) -> Vec<(AtomId, AtomId, AtomId, AtomId)> {
    let mut out = Vec::new();
    for (a, bs) in &f.image {
        let cs = &g.image[a];
        for b in bs {
            for c in cs {
                let label = AtomId::new(format!("{}.{}", left.index_of(b).expect("left atom"), right.index_of(c).expect("right atom")));
                out.push((label, a.clone(), b.clone(), c.clone()));
            }
        }
    }
    out.sort();
    out
}

/// A positive dyadic matrix with the given dyadic row and column sums, close
/// to the positive matrix `target` with the same sums: the northwest-corner
/// solution moved towards `target` along the cycle directions, with each
/// coefficient rounded down to the grid `2^-k` for the least `k` that keeps
/// every entry positive.
fn dyadic_with_margins(rows: &[Rational], cols: &[Rational], target: &[Vec<Rational>]) -> Result<Vec<Vec<Rational>>> {
    let (r, c) = (rows.len(), cols.len());
    let mut corner = vec![vec![Rational::zero(); c]; r];
    let (mut rr, mut cc) = (rows.to_vec(), cols.to_vec());
    let (mut i, mut j) = (0, 0);
    while i < r && j < c {
        let x = rr[i].clone().min(cc[j].clone());
        corner[i][j] = x.clone();
        rr[i] = &rr[i] - &x;
        cc[j] = &cc[j] - &x;
        if rr[i].is_zero() {
            i += 1;
        } else {
            j += 1;
        }
    }
    for k in 1..=256u32 {
        let mut m = corner.clone();
        for i in 0..r - 1 {
            for j in 0..c - 1 {
                let d = (&target[i][j] - &corner[i][j]).floor_dyadic(k);
                m[i][j] = &m[i][j] + &d;
                m[i][c - 1] = &m[i][c - 1] - &d;
                m[r - 1][j] = &m[r - 1][j] - &d;
                m[r - 1][c - 1] = &m[r - 1][c - 1] + &d;
            }
        }
        if m.iter().flatten().all(Rational::is_positive) {
            return Ok(m);
        }
    }
    Err(Error::defect("no positive dyadic matrix found with the given margins"))
}

/// Amalgamates two measure-preserving extensions of `(A, μ)`: atoms are the
/// pairs of atoms over a common `A`-atom, weighted `ν(b)ρ(c)/μ(a)`. When all
/// three measures are dyadic and that weight is not, the atoms over `a` get
/// instead a positive dyadic weighting with the same sums over each `b` and
/// each `c`.
pub fn amalgamate_measured(
    mu: &RationalMeasure,
    f: &AlgebraEmbedding,
    nu: &RationalMeasure,
    g: &AlgebraEmbedding,
    rho: &RationalMeasure,
) -> Result<MeasuredAmalgam> {
    f.check(mu.ambient(), nu.ambient())?;
    g.check(mu.ambient(), rho.ambient())?;
    mu.preserved_by(f, nu)?;
    mu.preserved_by(g, rho)?;
    let cells = cells_over(f, g, nu.ambient(), rho.ambient());
    let ambient = AmbientAlgebra::new(cells.iter().map(|c| c.0.clone()))?;
    let mut mass: BTreeMap<AtomId, Rational> =
        cells.iter().map(|(x, a, b, c)| (x.clone(), nu.of_atom(b) * rho.of_atom(c) / mu.of_atom(a))).collect();
    let dyadic = mu.is_dyadic() && nu.is_dyadic() && rho.is_dyadic();
    if dyadic {
        for (a, bs) in &f.image {
            let cs = &g.image[a];
            let label = |b: &AtomId, c: &AtomId| &cells.iter().find(|x| &x.2 == b && &x.3 == c).expect("cell").0;
            if bs.iter().all(|b| cs.iter().all(|c| mass[label(b, c)].is_dyadic())) {
                continue;
            }
            let rows: Vec<Rational> = bs.iter().map(|b| nu.of_atom(b).clone()).collect();
            let cols: Vec<Rational> = cs.iter().map(|c| rho.of_atom(c).clone()).collect();
            let target: Vec<Vec<Rational>> = bs.iter().map(|b| cs.iter().map(|c| mass[label(b, c)].clone()).collect()).collect();
            let m = dyadic_with_margins(&rows, &cols, &target)?;
            for (i, b) in bs.iter().enumerate() {
                for (j, c) in cs.iter().enumerate() {
                    mass.insert(label(b, c).clone(), m[i][j].clone());
                }
            }
        }
    }
    let measure = RationalMeasure::new(ambient, mass, dyadic)?;
    let side = |pick: fn(&(AtomId, AtomId, AtomId, AtomId)) -> &AtomId, src: &AmbientAlgebra| AlgebraEmbedding {
        image: src.atoms().iter().map(|b| (b.clone(), cells.iter().filter(|c| pick(c) == b).map(|c| c.0.clone()).collect())).collect(),
    };
    let left = side(|c| &c.2, nu.ambient());
    let right = side(|c| &c.3, rho.ambient());
    left.check(nu.ambient(), measure.ambient())?;
    right.check(rho.ambient(), measure.ambient())?;
    nu.preserved_by(&left, &measure).map_err(|e| Error::defect(e.to_string()))?;
    rho.preserved_by(&right, &measure).map_err(|e| Error::defect(e.to_string()))?;
    if f.then(&left) != g.then(&right) {
        return Err(Error::defect("measured amalgam square does not commute"));
    }
    Ok(MeasuredAmalgam { measure, left, right })
}

/// A measured system with embeddings of two measured systems into it.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MeasuredJoin {
    pub system: MeasuredSystem,
    pub left: SystemEmbedding,
    pub right: SystemEmbedding,
}

/// Joint embedding by products: mass `μ(a)ν(b)` on `a ⊗ b`, maps acting
/// coordinatewise on product blocks.
pub fn jep_measured_systems(s: &MeasuredSystem, t: &MeasuredSystem) -> Result<MeasuredJoin> {
    if s.system.arity() != t.system.arity() {
        return Err(Error::ArityMismatch { left: s.system.arity(), right: t.system.arity() });
    }
    let one = RationalMeasure::uniform(1);
    let onto = |x: &RationalMeasure| AlgebraEmbedding { image: BTreeMap::from([(AtomId::from(0usize), x.ambient().top())]) };
    let (f, g) = (onto(&s.measure), onto(&t.measure));
    let am = amalgamate_measured(&one, &f, &s.measure, &g, &t.measure)?;
    let ambient = am.measure.ambient().clone();
    let mut isos = Vec::new();
    for (p, q) in s.system.isos().iter().zip(t.system.isos()) {
        let mut pairs = Vec::new();
        for (b, c) in p.pairs() {
            for (d, e) in q.pairs() {
                let dom: Block = am.left.apply(b).intersection(&am.right.apply(d)).cloned().collect();
                let ran: Block = am.left.apply(c).intersection(&am.right.apply(e)).cloned().collect();
                pairs.push((dom, ran));
            }
        }
        isos.push(PartialIso::new(&ambient, pairs)?);
    }
    let system = MeasuredSystem::new(PartialIsoSystem::new(ambient, isos)?, am.measure)
        .map_err(|e| Error::defect(format!("product map: {e}")))?;
    let left = SystemEmbedding { base: am.left };
    let right = SystemEmbedding { base: am.right };
    left.check(&s.system, &system.system)?;
    right.check(&t.system, &system.system)?;
    Ok(MeasuredJoin { system, left, right })
}

/// A full system of equal-mass atoms and the lineage embedding into it.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FullExtension {
    pub system: MeasuredSystem,
    pub embedding: SystemEmbedding,
}

/// Refines every atom into pieces of mass `1/N`, `N` the least common
/// denominator, and extends each map to a permutation of the pieces by
/// sending the pieces of each domain block in order onto the pieces of its
/// image. This is the least completion in lexicographic order.
pub fn extend_to_automorphisms(s: &MeasuredSystem) -> Result<FullExtension> {
    let n = Rational::lcm_of_denominators(s.measure.mass.values());
    let grain = Rational::one() / Rational::from(n.clone());
    let mut kids: BTreeMap<AtomId, Vec<AtomId>> = BTreeMap::new();
    for (a, m) in &s.measure.mass {
        let count = (m * &Rational::from(n.clone())).to_u64().expect("integer multiple of the grain") as usize;
        let v = if count == 1 { vec![a.clone()] } else { (0..count).map(|i| a.child(i)).collect() };
        kids.insert(a.clone(), v);
    }
    let ambient = AmbientAlgebra::new(kids.values().flatten().cloned())?;
    let pieces = |b: &Block| -> Vec<AtomId> {
        let mut v: Vec<AtomId> = b.iter().flat_map(|a| kids[a].iter().cloned()).collect();
        v.sort();
        v
    };
    let mut isos = Vec::new();
    for psi in s.system.isos() {
        let mut pairs = Vec::new();
        for (b, c) in psi.pairs() {
            let (pb, pc) = (pieces(b), pieces(c));
            debug_assert_eq!(pb.len(), pc.len());
            pairs.extend(pb.into_iter().zip(pc).map(|(x, y)| (Block::from([x]), Block::from([y]))));
        }
        isos.push(PartialIso::new(&ambient, pairs)?);
    }
    let dyadic = s.measure.dyadic && grain.is_dyadic();
    let mass = ambient.atoms().iter().map(|a| (a.clone(), grain.clone())).collect();
    let measure = RationalMeasure::new(ambient.clone(), mass, dyadic)?;
    let system = MeasuredSystem::new(PartialIsoSystem::new(ambient, isos)?, measure)?;
    let embedding = SystemEmbedding { base: AlgebraEmbedding::by_lineage(s.system.ambient(), system.system.ambient())? };
    embedding.check(&s.system, &system.system).map_err(|e| Error::defect(format!("completion: {e}")))?;
    s.measure.preserved_by(&embedding.base, &system.measure).map_err(|e| Error::defect(e.to_string()))?;
    Ok(FullExtension { system, embedding })
}

/// Amalgamates two full extensions of a full system: pairs of atoms over a
/// common base atom, with each map acting coordinatewise.
pub fn amalgamate_full_systems(
    s: &MeasuredSystem,
    t: &MeasuredSystem,
    r: &MeasuredSystem,
    f: &SystemEmbedding,
    g: &SystemEmbedding,
) -> Result<MeasuredJoin> {
    for (name, x) in [("base", s), ("left", t), ("right", r)] {
        if !x.is_full() {
            return Err(Error::NotFull(name.into()));
        }
    }
    f.check(&s.system, &t.system)?;
    g.check(&s.system, &r.system)?;
    let am = amalgamate_measured(&s.measure, &f.base, &t.measure, &g.base, &r.measure)?;
    let ambient = am.measure.ambient().clone();
    let inv_l = am.left.inverse_map();
    let inv_r = am.right.inverse_map();
    let cell = |b: &AtomId, c: &AtomId| -> AtomId {
        let both: Vec<&AtomId> = am.left.image[b].intersection(&am.right.image[c]).collect();
        both[0].clone()
    };
    let mut isos = Vec::new();
    for (phi, chi) in t.system.isos().iter().zip(r.system.isos()) {
        let step = |p: &PartialIso, a: &AtomId| p.apply(&Block::from([a.clone()])).and_then(|x| x.first().cloned()).expect("permutation");
        let pairs = ambient
            .atoms()
            .iter()
            .map(|x| {
                let (b, c) = (&inv_l[x], &inv_r[x]);
                (Block::from([x.clone()]), Block::from([cell(&step(phi, b), &step(chi, c))]))
            })
            .collect();
        isos.push(PartialIso::new(&ambient, pairs)?);
    }
    let system = MeasuredSystem::new(PartialIsoSystem::new(ambient, isos)?, am.measure)?;
    let left = SystemEmbedding { base: am.left };
    let right = SystemEmbedding { base: am.right };
    left.check(&t.system, &system.system)?;
    right.check(&r.system, &system.system)?;
    Ok(MeasuredJoin { system, left, right })
}

/// A finite union of disjoint half-open rational intervals in `[0, 1)`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<(Rational, Rational)>", into = "Vec<(Rational, Rational)>")]
pub struct IntervalElement(Vec<(Rational, Rational)>);

impl TryFrom<Vec<(Rational, Rational)>> for IntervalElement {
    type Error = Error;
    fn try_from(v: Vec<(Rational, Rational)>) -> Result<Self> {
        IntervalElement::new(v)
    }
}

impl From<IntervalElement> for Vec<(Rational, Rational)> {
    fn from(e: IntervalElement) -> Self {
        e.0
    }
}

impl IntervalElement {
    pub fn new(mut v: Vec<(Rational, Rational)>) -> Result<Self> {
        v.sort();
        for (p, q) in &v {
            if p >= q || p < &Rational::zero() || q > &Rational::one() {
                return Err(Error::invalid(format!("bad interval [{p}, {q})")));
            }
        }
        if v.windows(2).any(|w| w[0].1 > w[1].0) {
            return Err(Error::invalid("intervals overlap"));
        }
        Ok(IntervalElement(v))
    }

    pub fn intervals(&self) -> &[(Rational, Rational)] {
        &self.0
    }

    pub fn length(&self) -> Rational {
        self.0.iter().map(|(p, q)| q - p).sum()
    }
}

/// Extends a measure-preserving assignment of interval elements from the
/// atoms of `A` to the atoms of an extension `B`, cutting each image from
/// the left in the order of the atoms of `B` below it.
pub fn extend_interval_embedding(
    f: &BTreeMap<AtomId, IntervalElement>,
    mu: &RationalMeasure,
    e: &AlgebraEmbedding,
    nu: &RationalMeasure,
) -> Result<BTreeMap<AtomId, IntervalElement>> {
    e.check(mu.ambient(), nu.ambient())?;
    mu.preserved_by(e, nu)?;
    let mut total = Rational::zero();
    for a in mu.ambient().atoms() {
        let img = f.get(a).ok_or_else(|| Error::UnknownAtom(a.clone()))?;
        if &img.length() != mu.of_atom(a) {
            return Err(Error::NotMeasurePreserving(format!("atom {a} has mass {} but its intervals have length {}", mu.of_atom(a), img.length())));
        }
        total = total + img.length();
    }
    let mut all: Vec<&(Rational, Rational)> = f.values().flat_map(|x| x.0.iter()).collect();
    all.sort();
    if all.windows(2).any(|w| w[0].1 > w[1].0) || total != Rational::one() {
        return Err(Error::invalid("interval images must be disjoint and fill [0, 1)"));
    }
    let mut out = BTreeMap::new();
    for (a, below) in &e.image {
        let mut queue: Vec<(Rational, Rational)> = f[a].0.clone();
        queue.reverse();
        for b in below {
            let mut need = nu.of_atom(b).clone();
            let mut got = Vec::new();
            while need.is_positive() {
                let (p, q) = queue.pop().expect("images have the right total length");
                let len = &q - &p;
                if len <= need {
                    need = need - len;
                    got.push((p, q));
                } else {
                    let cut = &p + &need;
                    got.push((p, cut.clone()));
                    queue.push((cut, q));
                    need = Rational::zero();
                }
            }
            out.insert(b.clone(), IntervalElement::new(got)?);
        }
    }
    Ok(out)
}

/// Float view of a rational, for reporting only.
pub fn approx(r: &Rational) -> f64 {
    r.numer().to_f64().unwrap_or(f64::NAN) / r.denom().to_f64().unwrap_or(f64::NAN)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::block;

    fn q(p: i64, d: i64) -> Rational {
        Rational::new(p, d)
    }

    fn measure(ms: &[Rational]) -> RationalMeasure {
        let amb = AmbientAlgebra::numbered(ms.len());
        let dy = ms.iter().all(Rational::is_dyadic);
        RationalMeasure::new(amb.clone(), amb.atoms().iter().cloned().zip(ms.iter().cloned()).collect(), dy).unwrap()
    }

    fn onto(m: &RationalMeasure) -> AlgebraEmbedding {
        AlgebraEmbedding { image: BTreeMap::from([(AtomId::from(0usize), m.ambient().top())]) }
    }

    #[test]
    fn product_over_the_trivial_algebra() {
        let one = RationalMeasure::uniform(1);
        let b = measure(&[q(1, 4), q(3, 4)]);
        let c = measure(&[q(1, 3), q(2, 3)]);
        let am = amalgamate_measured(&one, &onto(&b), &b, &onto(&c), &c).unwrap();
        let mut masses: Vec<Rational> = am.measure.masses().values().cloned().collect();
        masses.sort();
        assert_eq!(masses, vec![q(1, 12), q(1, 6), q(1, 4), q(1, 2)]);
    }

    #[test]
    fn same_algebra_amalgamates_to_itself() {
        let a = measure(&[q(1, 4), q(3, 4)]);
        let id = AlgebraEmbedding::identity(a.ambient());
        let am = amalgamate_measured(&a, &id, &a, &id, &a).unwrap();
        assert_eq!(am.measure.ambient().len(), 2);
    }

    #[test]
    fn dyadic_inputs_stay_dyadic() {
        let a = measure(&[q(1, 4), q(3, 4)]);
        let b = measure(&[q(1, 4), q(1, 4), q(1, 2)]);
        let f = AlgebraEmbedding {
            image: BTreeMap::from([(AtomId::from(0usize), block([0usize])), (AtomId::from(1usize), block([1usize, 2]))]),
        };
        let am = amalgamate_measured(&a, &f, &b, &f, &b).unwrap();
        assert!(am.measure.is_dyadic());
        assert!(am.measure.masses().values().all(Rational::is_dyadic));
        // Over the first atom the product weight is already dyadic.
        assert_eq!(am.measure.of_atom(&AtomId::new("0.0")), &q(1, 4));
        b.preserved_by(&am.left, &am.measure).unwrap();
        b.preserved_by(&am.right, &am.measure).unwrap();
    }

    #[test]
    fn dyadic_margins_are_met_exactly() {
        let rows = [q(1, 4), q(1, 2)];
        let cols = [q(1, 8), q(5, 8)];
        let target: Vec<Vec<Rational>> = rows.iter().map(|x| cols.iter().map(|y| x * y / q(3, 4)).collect()).collect();
        let m = dyadic_with_margins(&rows, &cols, &target).unwrap();
        for i in 0..2 {
            assert_eq!(m[i].iter().sum::<Rational>(), rows[i]);
            assert_eq!(m.iter().map(|row| &row[i]).sum::<Rational>(), cols[i]);
        }
        assert!(m.iter().flatten().all(|x| x.is_positive() && x.is_dyadic()));
    }

    #[test]
    fn zero_mass_is_rejected() {
        let amb = AmbientAlgebra::numbered(2);
        let m = amb.atoms().iter().cloned().zip([q(0, 1), q(1, 1)]).collect();
        assert!(RationalMeasure::new(amb, m, false).is_err());
    }

    #[test]
    fn least_completion() {
        let m = measure(&[q(1, 3), q(1, 3), q(1, 3)]);
        let amb = m.ambient().clone();
        let iso = PartialIso::new(&amb, vec![(block([0usize]), block([2usize])), (block([1usize, 2]), block([0usize, 1]))]).unwrap();
        let s = MeasuredSystem::new(PartialIsoSystem::single(amb, iso).unwrap(), m).unwrap();
        let full = extend_to_automorphisms(&s).unwrap();
        let p = full.system.system().iso().unwrap();
        assert_eq!(p.apply(&block([0usize])), Some(&block([2usize])));
        assert_eq!(p.apply(&block([1usize])), Some(&block([0usize])));
        assert_eq!(p.apply(&block([2usize])), Some(&block([1usize])));
    }

    #[test]
    fn half_splits_into_quarters() {
        let m = measure(&[q(1, 2), q(1, 4), q(1, 4)]);
        let amb = m.ambient().clone();
        let iso = PartialIso::identity(&amb.trivial());
        let s = MeasuredSystem::new(PartialIsoSystem::single(amb, iso).unwrap(), m).unwrap();
        let full = extend_to_automorphisms(&s).unwrap();
        assert_eq!(full.system.system().ambient().len(), 4);
        assert_eq!(full.embedding.base.image[&AtomId::from(0usize)].len(), 2);
    }

    #[test]
    fn interval_cutting() {
        let a = RationalMeasure::uniform(2);
        let f = BTreeMap::from([
            (AtomId::from(0usize), IntervalElement::new(vec![(q(0, 1), q(1, 4)), (q(1, 2), q(3, 4))]).unwrap()),
            (AtomId::from(1usize), IntervalElement::new(vec![(q(1, 4), q(1, 2)), (q(3, 4), q(1, 1))]).unwrap()),
        ]);
        let b = RationalMeasure::new(
            AmbientAlgebra::new(["0.a", "0.b", "1"].map(AtomId::from)).unwrap(),
            BTreeMap::from([(AtomId::from("0.a"), q(1, 4)), (AtomId::from("0.b"), q(1, 4)), (AtomId::from("1"), q(1, 2))]),
            true,
        )
        .unwrap();
        let e = AlgebraEmbedding::by_lineage(a.ambient(), b.ambient()).unwrap();
        let out = extend_interval_embedding(&f, &a, &e, &b).unwrap();
        assert_eq!(out[&AtomId::from("0.a")].intervals(), &[(q(0, 1), q(1, 4))]);
        assert_eq!(out[&AtomId::from("0.b")].intervals(), &[(q(1, 2), q(3, 4))]);
    }
}
