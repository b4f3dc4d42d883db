use proptest::prelude::*;
use rand::Rng;
use tempus_core::cosmology::*;
use tempus_core::rng;

fn cycloid_a(c: f64, t: f64) -> f64 {
    // t = (c/2)(η − sin η), a = (c/2)(1 − cos η)
    let mut eta = (12.0 * t / c).cbrt().max(1e-3);
    for _ in 0..100 {
        let f = 0.5 * c * (eta - eta.sin()) - t;
        let d = 0.5 * c * (1.0 - eta.cos());
        eta -= f / d;
    }
    0.5 * c * (1.0 - eta.cos())
}

#[test]
fn closed_dust_turns_symmetrically_like_a_cycloid() {
    let c = 2.0;
    let a0 = 0.1;
    let rep =
        pure_frw_turning_symmetry(|a| c / a - 1.0, |a| -c / (a * a), a0, true, 10.0, 1e-3).unwrap();
    assert_eq!(rep.kind, TurningKind::Generic);
    assert!((rep.a_s.unwrap() - c).abs() < 1e-10);
    let eta0 = (1.0 - 2.0 * a0 / c).acos();
    let t0 = 0.5 * c * (eta0 - eta0.sin());
    let t_s = rep.t_s.unwrap();
    assert!(
        (t_s + t0 - 0.5 * c * std::f64::consts::PI).abs() < 1e-6,
        "t_S={t_s}"
    );
    assert!(rep.symmetric, "{rep:?}");
    assert!(rep.symmetry_error.unwrap() < 1e-8);
    // the same run agrees with the parametric solution
    assert!((cycloid_a(c, t0 + t_s) - c).abs() < 1e-9);
}

#[test]
fn fine_tuned_and_open_reductions() {
    let rep = pure_frw_turning_symmetry(
        |a| (2.0 - a) * (2.0 - a),
        |a| -2.0 * (2.0 - a),
        1.0,
        true,
        5.0,
        1e-3,
    )
    .unwrap();
    assert_eq!(rep.kind, TurningKind::Degenerate);
    assert!((rep.a_s.unwrap() - 2.0).abs() < 1e-6);
    let rep = pure_frw_turning_symmetry(
        |a| 1.0 / a + 1.0,
        |a| -1.0 / (a * a),
        0.5,
        true,
        100.0,
        1e-3,
    )
    .unwrap();
    assert_eq!(rep.kind, TurningKind::NoTurningPoint);
}

#[test]
fn frozen_field_bounce_is_symmetric() {
    let model = FRWModel::new(1.0, 1.0, 0.0, Potential::Constant(0.25)).unwrap();
    let (g, dg) = frozen_field_reduction(&model, 0.0);
    let rep = pure_frw_turning_symmetry(g, dg, 3.0, false, 0.0, 1e-3).unwrap();
    assert_eq!(rep.kind, TurningKind::Generic);
    assert!((rep.a_s.unwrap() - 2.0).abs() < 1e-10);
    // a = 2 cosh(t/2) about the bounce
    assert!((rep.t_s.unwrap() - 2.0 * 1.5f64.acosh()).abs() < 1e-6);
    assert!(rep.symmetric);
}

#[test]
fn big_bang_surface_is_not_an_attractor() {
    let model = FRWModel::with_mass(1.0, 1.0);
    let rep = big_bang_surface_instability(&model, 100, 11, 0.01).unwrap();
    assert!(rep.fraction_positive >= 0.95, "{}", rep.fraction_positive);
    let half = big_bang_surface_instability(&model, 100, 11, 0.005).unwrap();
    let rel = (half.mean_exponent - rep.mean_exponent).abs() / rep.mean_exponent.abs();
    assert!(rel < 0.2, "{} vs {}", rep.mean_exponent, half.mean_exponent);
    let x = rep.samples[0].state;
    assert_eq!(divergence_exponent(&model, x, x, 4.0, 1e-11).unwrap(), 0.0);
}

#[test]
fn axis_runs_close_under_reflection() {
    let model = FRWModel::with_mass(1.0, 0.5);
    for ic in [(0.0, 0.6, 0.0), (0.0, 0.0, 0.4)] {
        let s = CosmoState::on_constraint(ic.0, ic.1, ic.2, &model).unwrap();
        let t = 2.5;
        let run = evolve_cosmo_two_sided(&s, &model, t, t, 0.01).unwrap();
        let sym = detect_cosmo_symmetry(&run.trajectory, 1e-4).unwrap();
        let map: Vec<f64> = match sym.parity {
            AxisParity::Even => vec![1.0, 1.0, -1.0, -1.0],
            AxisParity::Odd => vec![1.0, -1.0, -1.0, 1.0],
        };
        // an independent forward run from the past end point
        let start = run.state(0);
        let fwd = evolve_cosmo(&start, &model, t, 0.01).unwrap();
        let n = fwd.trajectory.len();
        let scale: f64 = (0..4)
            .map(|c| {
                fwd.trajectory
                    .component(c)
                    .fold(0.0f64, |m, v| m.max(v.abs()))
            })
            .fold(0.0, f64::max);
        for i in 0..n {
            let (x, y) = (fwd.trajectory.state(i), fwd.trajectory.state(n - 1 - i));
            for c in 0..4 {
                assert!((x[c] - map[c] * y[c]).abs() <= 1e-6 * scale, "i={i} c={c}");
            }
        }
        assert!(run.max_residual <= 1e-6 && fwd.max_residual <= 1e-6);
    }
}

#[test]
fn symmetry_is_found_exactly_for_axis_data() {
    let model = FRWModel::with_mass(1.0, 0.5);
    let mut r = rng::rng_from(rng::derive(2024, "axis-census"));
    let mut checked = 0;
    for i in 0..200 {
        let mag =
            |r: &mut rng::Rng| r.gen_range(0.1..1.0) * if r.gen_bool(0.5) { 1.0 } else { -1.0 };
        let (ic, axis) = match i % 4 {
            0 => ((0.0, mag(&mut r), 0.0), true),
            1 => ((0.0, 0.0, mag(&mut r)), true),
            2 => ((0.0, mag(&mut r), mag(&mut r)), false),
            _ => ((r.gen_range(-0.5..0.5), mag(&mut r), mag(&mut r)), false),
        };
        let s = CosmoState::on_constraint(ic.0, ic.1, ic.2, &model).unwrap();
        let run = evolve_cosmo_two_sided(&s, &model, 2.0, 2.0, 0.01).unwrap();
        assert!(run.max_residual <= 1e-6, "run {i}: {}", run.max_residual);
        let found = detect_cosmo_symmetry(&run.trajectory, 1e-4);
        assert_eq!(found.is_some(), axis, "run {i} ic={ic:?} {found:?}");
        for k in 0..run.trajectory.len() {
            assert!(dominant_energy_check(&run.state(k), &model).holds);
        }
        checked += 1;
    }
    assert_eq!(checked, 200);
}

proptest! {
    #[test]
    fn type_i_route_agrees_with_direct_check(phi in -3.0f64..3.0, phi_dot in -3.0f64..3.0,
                                              v0 in -2.0f64..2.0, eta in -2.0f64..2.0) {
        let model = FRWModel::new(1.0, 1.0, 0.0, Potential::QuadraticPlusConstant { mass: 0.7, constant: v0 }).unwrap();
        let s = CosmoState { a: 1.0, a_dot: 0.0, phi, phi_dot, t: 0.0 };
        let direct = dominant_energy_check(&s, &model);
        let (s0, si) = type_i_eigenvalues(&s, &model, eta);
        let scale = 1.0 + direct.rho.abs() + direct.pressure.abs();
        prop_assert!((s0 - direct.rho).abs() < 1e-9 * scale * eta.cosh().powi(2));
        if direct.margin.abs() > 1e-9 * scale * eta.cosh().powi(2) {
            prop_assert_eq!(dec_from_type_i(s0, &si, 0.0), direct.holds);
        }
    }
}
