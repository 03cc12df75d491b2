use fraisse::chains::{decompose_iso, verify_decomposition, Normality};
use fraisse::enumerate::all_partial_isos;
use fraisse::refine::normalize;

#[test]
fn normalize_certifies_every_partial_iso_up_to_five_atoms() {
    for n in 1..=5 {
        for s in all_partial_isos(n) {
            let (r, d) = normalize(&s).unwrap_or_else(|e| panic!("{s:?}: {e}"));
            r.embedding.check(&s, &r.system).unwrap();
            verify_decomposition(r.system.iso().unwrap(), &d).unwrap();
            assert!(r.violation_counts.windows(2).all(|w| w[1] < w[0]), "{s:?}: {:?}", r.violation_counts);
            assert!(matches!(decompose_iso(r.system.iso().unwrap()), Normality::Normal(_)));
        }
    }
}
