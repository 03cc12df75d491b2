//! Property tests for the structural invariants. Cases are drawn from seeded
//! generators so that proptest shrinks over the seed and sizes.

use std::collections::BTreeSet;

use fraisse::algebra::join_subalgebras;
use fraisse::cap::{amalgamate_least, greatest_selection, Extension};
use fraisse::chains::{decompose_iso, Normality};
use fraisse::grid::{factor_grid_permutation, GridPermutation};
use fraisse::measured::{amalgamate_measured, RationalMeasure};
use fraisse::metric::{amalgamate_metric, jep_metric_systems, FiniteMetricSpace, MetricSystem};
use fraisse::refine::{normalize, refine_condition_i};
use fraisse::system::embed_system;
use fraisse::{random, AlgebraEmbedding, AmbientAlgebra, Rational, Subalgebra};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn subalgebra(r: &mut ChaCha8Rng, amb: &AmbientAlgebra) -> Subalgebra {
    let k = r.gen_range(1..=amb.len());
    Subalgebra::new(amb, random::partition(r, amb.atoms(), k)).unwrap()
}

/// A space on `names` with distances in {2, 3}, so every triangle closes.
fn space(r: &mut ChaCha8Rng, names: &[String]) -> FiniteMetricSpace {
    let n = names.len();
    let mut d = vec![vec![Rational::zero(); n]; n];
    for i in 0..n {
        for j in i + 1..n {
            let x = Rational::integer(r.gen_range(2..=3));
            d[i][j] = x.clone();
            d[j][i] = x;
        }
    }
    FiniteMetricSpace::new(names.to_vec(), d).unwrap()
}

fn measure(r: &mut ChaCha8Rng, amb: &AmbientAlgebra, dyadic: bool) -> RationalMeasure {
    let n = amb.len();
    let w: Vec<Rational> = if dyadic {
        let total = 1i64 << 4;
        let mut cuts: Vec<i64> = (1..total).collect();
        cuts.shuffle(r);
        let mut cuts: Vec<i64> = cuts.into_iter().take(n - 1).collect();
        cuts.extend([0, total]);
        cuts.sort();
        cuts.windows(2).map(|c| Rational::new(c[1] - c[0], total)).collect()
    } else {
        let raw: Vec<i64> = (0..n).map(|_| r.gen_range(1..=5)).collect();
        let s: i64 = raw.iter().sum();
        raw.iter().map(|&x| Rational::new(x, s)).collect()
    };
    RationalMeasure::new(amb.clone(), amb.atoms().iter().cloned().zip(w).collect(), dyadic).unwrap()
}

/// Splits `m` into `k` positive parts; dyadic parts sit on a grid up to
/// eight times finer than `m`'s own, so their ratios to `m` need not be.
fn split(r: &mut ChaCha8Rng, m: &Rational, k: usize, dyadic: bool) -> Vec<Rational> {
    if !dyadic {
        let raw: Vec<i64> = (0..k).map(|_| r.gen_range(1..=5)).collect();
        let s: i64 = raw.iter().sum();
        return raw.iter().map(|&x| m * &Rational::new(x, s)).collect();
    }
    let p = (0..).find(|&p| (m * &Rational::integer(1 << p)).to_u64().is_some()).unwrap();
    let q = p + r.gen_range(2..=3);
    let units = (m * &Rational::integer(1 << q)).to_u64().unwrap() as i64;
    let mut cuts: Vec<i64> = (1..units).collect();
    cuts.shuffle(r);
    let mut cuts: Vec<i64> = cuts.into_iter().take(k - 1).collect();
    cuts.extend([0, units]);
    cuts.sort();
    cuts.windows(2).map(|c| Rational::new(c[1] - c[0], 1 << q)).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn join_is_symmetric_and_refines_both(seed: u64, n in 1usize..8) {
        let mut r = rng(seed);
        let amb = AmbientAlgebra::numbered(n);
        let (b, c) = (subalgebra(&mut r, &amb), subalgebra(&mut r, &amb));
        let bc = join_subalgebras(&b, &c).unwrap();
        prop_assert_eq!(&bc, &join_subalgebras(&c, &b).unwrap());
        prop_assert!(b.is_coarsening_of(&bc) && c.is_coarsening_of(&bc));
    }

    #[test]
    fn rational_addition_round_trips(p in -1000i64..1000, q in 1i64..1000, s in -1000i64..1000, t in 1i64..1000) {
        let (x, y) = (Rational::new(p, q), Rational::new(s, t));
        prop_assert_eq!(&(&x + &y) - &y, x);
    }

    #[test]
    fn found_embeddings_compose(seed: u64, n in 1usize..4, steps in 0usize..3) {
        let mut r = rng(seed);
        let s = random::partial_iso(&mut r, n);
        let (t, _) = random::extension(&mut r, &s, steps);
        let (u, _) = random::extension(&mut r, &t, steps);
        let st = embed_system(&s, &t).unwrap().expect("an extension embeds");
        let tu = embed_system(&t, &u).unwrap().expect("an extension embeds");
        st.check(&s, &t).unwrap();
        st.then(&tu).check(&s, &u).unwrap();
    }

    #[test]
    fn condition_i_refinement_strictly_decreases_violations(seed: u64, n in 1usize..8) {
        let s = random::partial_iso(&mut rng(seed), n);
        let r = refine_condition_i(&s).unwrap();
        prop_assert!(r.violation_counts.windows(2).all(|w| w[1] < w[0]));
        prop_assert_eq!(r.violation_counts.last(), Some(&0));
        r.embedding.check(&s, &r.system).unwrap();
    }

    #[test]
    fn normal_form_extends_and_certifies(seed: u64, n in 1usize..7) {
        let s = random::partial_iso(&mut rng(seed), n);
        let (r, d) = normalize(&s).unwrap();
        r.embedding.check(&s, &r.system).unwrap();
        prop_assert_eq!(decompose_iso(r.system.iso().unwrap()), Normality::Normal(d));
    }

    /// Over any base, the compact amalgam exists exactly when the greatest
    /// selection covers both sides, and is then a commuting square.
    #[test]
    fn compact_amalgam_exists_with_the_greatest_selection(seed: u64, n in 1usize..4, sl in 0usize..4, sr in 0usize..4) {
        let mut r = rng(seed);
        let s = random::partial_iso(&mut r, n);
        let (l, fl) = random::extension(&mut r, &s, sl);
        let (rt, fr) = random::extension(&mut r, &s, sr);
        let (el, er) = (Extension::new(&l, &fl), Extension::new(&rt, &fr));
        let exists = greatest_selection(&s, el, er).unwrap().is_some();
        let am = amalgamate_least(&s, el, er).unwrap();
        prop_assert_eq!(am.is_some(), exists);
        if let Some(am) = am {
            am.left.check(&l, &am.system).unwrap();
            am.right.check(&rt, &am.system).unwrap();
            prop_assert_eq!(fl.then(&am.left), fr.then(&am.right));
        }
    }

    #[test]
    fn grid_factors_recompose(seed: u64, n in 1usize..5, m in 1usize..5) {
        let mut images: Vec<usize> = (0..n * m).collect();
        images.shuffle(&mut rng(seed));
        let rho = GridPermutation::new(n, m, images).unwrap();
        let f = factor_grid_permutation(&rho).unwrap();
        prop_assert!(f.f1.preserves_rows() && f.f2.preserves_rows() && f.h.preserves_cols());
        for i in 0..n {
            for j in 0..m {
                prop_assert_eq!(f.f1.apply(f.h.apply(f.f2.apply((i, j)))), rho.apply((i, j)));
            }
        }
    }

    /// Dyadic amalgams stay dyadic and keep both margins exactly.
    #[test]
    fn measured_amalgam_keeps_margins(seed: u64, n in 1usize..4, dyadic: bool) {
        let mut r = rng(seed);
        let mu = measure(&mut r, &AmbientAlgebra::numbered(n), dyadic);
        let side = |r: &mut ChaCha8Rng| {
            let amb = AmbientAlgebra::new(mu.ambient().atoms().iter().flat_map(|a| {
                let k = r.gen_range(1..=3);
                (0..k).map(|i| if k == 1 { a.clone() } else { a.child(i) }).collect::<Vec<_>>()
            })).unwrap();
            let f = AlgebraEmbedding::by_lineage(mu.ambient(), &amb).unwrap();
            let mut mass = std::collections::BTreeMap::new();
            for a in mu.ambient().atoms() {
                let kids: Vec<_> = f.image[a].iter().cloned().collect();
                let shares = split(r, mu.of_atom(a), kids.len(), dyadic);
                mass.extend(kids.into_iter().zip(shares));
            }
            (RationalMeasure::new(amb, mass, dyadic).unwrap(), f)
        };
        let (nu, f) = side(&mut r);
        let (rho, g) = side(&mut r);
        let am = amalgamate_measured(&mu, &f, &nu, &g, &rho).unwrap();
        prop_assert_eq!(am.measure.is_dyadic(), dyadic);
        prop_assert!(!dyadic || am.measure.masses().values().all(Rational::is_dyadic));
        nu.preserved_by(&am.left, &am.measure).unwrap();
        rho.preserved_by(&am.right, &am.measure).unwrap();
    }

    #[test]
    fn metric_gluing_is_a_metric_extending_both(seed: u64, shared in 1usize..3, nb in 0usize..3, nc in 0usize..3) {
        let mut r = rng(seed);
        let common: Vec<String> = (0..shared).map(|i| format!("z{i}")).collect();
        let base = space(&mut r, &common);
        let grow = |r: &mut ChaCha8Rng, tag: &str, k: usize| {
            let mut names = common.clone();
            names.extend((0..k).map(|i| format!("{tag}{i}")));
            let mut s = space(r, &names);
            let d: Vec<Vec<Rational>> = (0..names.len())
                .map(|i| (0..names.len()).map(|j| if i < shared && j < shared { base.dist_matrix()[i][j].clone() } else { s.dist_matrix()[i][j].clone() }).collect())
                .collect();
            s = FiniteMetricSpace::new(names, d).unwrap();
            s
        };
        let (b, c) = (grow(&mut r, "b", nb), grow(&mut r, "c", nc));
        let g = amalgamate_metric(&b, &c).unwrap();
        for p in g.points() {
            for q in g.points() {
                for w in g.points() {
                    prop_assert!(g.d(p, w).unwrap() <= &(g.d(p, q).unwrap() + g.d(q, w).unwrap()));
                }
            }
        }
        for s in [&b, &c] {
            for p in s.points() {
                for q in s.points() {
                    prop_assert_eq!(g.d(p, q), s.d(p, q));
                }
            }
        }
        let sb = MetricSystem::new(b.clone(), vec![Default::default()]).unwrap();
        let sc = MetricSystem::new(c.clone(), vec![Default::default()]).unwrap();
        let j = jep_metric_systems(&sb, &sc).unwrap();
        let glued = j.system.space();
        let cross: BTreeSet<&Rational> = j.left.values().flat_map(|x| j.right.values().map(move |y| glued.d(x, y).unwrap())).collect();
        prop_assert_eq!(cross.len(), 1);
        prop_assert!(cross.into_iter().all(|k| k > &(b.diam() + c.diam())));
    }
}
