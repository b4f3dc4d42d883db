use proptest::prelude::*;
use tempus_core::rng::rng_from;
use tempus_core::urn::*;

const STEPS: usize = 20_000;

#[test]
fn asymmetric_sizes_drive_the_small_subsystem() {
    let pair = UrnPair::new(200, 20, 0.01).unwrap();
    let (cal, runs) =
        schulman_ensemble(&pair, STEPS, 100, 2024, Scenario::AsymmetricSizes).unwrap();
    let s = summarize(&runs);
    assert!(s.monotone_fraction >= 0.95, "{s:?} {cal:?}");
    assert!(s.displaced_fraction >= 0.9, "{s:?} {cal:?}");
    assert_eq!(s.symmetric_fraction, None);
    let r = &runs[0];
    assert_eq!(r.s_a.len(), STEPS + 1);
    assert_eq!(r.coarse.len(), STEPS / pair.window());
    // A starts in its lowest-entropy state
    assert_eq!(r.s_a[0], 0.0);
}

#[test]
fn uncoupled_small_subsystem_stays_at_equilibrium() {
    let pair = UrnPair::new(200, 20, 0.0).unwrap();
    let (cal, runs) =
        schulman_ensemble(&pair, STEPS, 100, 2024, Scenario::AsymmetricSizes).unwrap();
    let s = summarize(&runs);
    assert!(s.displaced_fraction <= 0.03, "{s:?} {cal:?}");
    let mean = runs.iter().map(|r| r.displacement).sum::<f64>() / runs.len() as f64;
    assert!(
        (mean / cal.displacement_scale - 1.0).abs() < 0.3,
        "{mean} vs {}",
        cal.displacement_scale
    );
}

#[test]
fn mirror_symmetry_and_injected_asymmetry() {
    let same = UrnPair::new(100, 100, 0.01).unwrap();
    let (_, runs) = schulman_ensemble(&same, STEPS, 40, 9, Scenario::Mirror).unwrap();
    let f = summarize(&runs).symmetric_fraction.unwrap();
    assert!(f >= 0.9, "{f}");

    let lopsided = UrnPair::new(100, 60, 0.01).unwrap();
    let (_, runs) = schulman_ensemble(&lopsided, STEPS, 40, 9, Scenario::Mirror).unwrap();
    let f = summarize(&runs).symmetric_fraction.unwrap();
    assert!(f <= 0.1, "{f}");

    // B is stored reversed, so its low-entropy end is at the close of the run
    let r = &runs[0];
    assert_eq!(*r.s_b.last().unwrap(), 0.0);
    assert_eq!(r.s_a[0], 0.0);
}

#[test]
fn runs_are_reproducible() {
    let pair = UrnPair::new(60, 20, 0.02).unwrap();
    let a = schulman_sim(&pair, 2_000, 77, Scenario::AsymmetricSizes).unwrap();
    let b = schulman_sim(&pair, 2_000, 77, Scenario::AsymmetricSizes).unwrap();
    assert_eq!(a, b);
    let c = schulman_sim(&pair, 2_000, 78, Scenario::AsymmetricSizes).unwrap();
    assert_ne!(a.s_a, c.s_a);
    assert!(schulman_sim(&pair, 50, 77, Scenario::AsymmetricSizes).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn balls_are_conserved(seed in any::<u64>(), na in 8u32..80, nb in 8u32..80, lam in 0.0f64..0.05,
                           la in 0u32..80, lb in 0u32..80) {
        let pair = UrnPair::unchecked(na, nb, lam).unwrap();
        let a = Urn { size: na, left: la.min(na) };
        let b = Urn { size: nb, left: lb.min(nb) };
        let path = simulate(&pair, a, b, 2_000, &mut rng_from(seed));
        prop_assert!(path.left_a.iter().all(|n| *n <= na));
        prop_assert!(path.left_b.iter().all(|n| *n <= nb));
        // each step moves at most one ball per subsystem per rule
        for w in path.left_a.windows(2) {
            prop_assert!(w[0].abs_diff(w[1]) <= 2);
        }
    }
}
