use proptest::prelude::*;
use tempus_core::cosmology::{detect_cosmo_symmetry, evolve_cosmo_two_sided, FRWModel};
use tempus_core::measure::*;

fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| lo * (hi / lo).powf(i as f64 / (n - 1) as f64))
        .collect()
}

// two max-norm slabs of cross-section r² along orthogonal axes overlap in an r³ cube
fn axis_oracle(r: f64) -> f64 {
    2.0 * r * r - r * r * r
}

#[test]
fn axis_set_fraction_scales_quadratically() {
    let l = 2.0;
    let eps: Vec<f64> = log_grid(0.005, 0.08, 5).iter().map(|r| r * l).collect();
    let cfg = MeasureScanConfig::new(
        l,
        eps,
        1_000_000,
        42,
        FRWModel::with_mass(1.0, 0.5),
        MeasureMode::AxisSet,
    )
    .unwrap();
    let res = scan_axis_measure(&cfg).unwrap();
    assert!((res.slope() - 2.0).abs() <= 0.15, "slope {}", res.slope());
    for e in &res.estimates {
        let r = e.epsilon / l;
        assert!(e.fraction < 2.0 * e.predicted && e.fraction > 0.5 * e.predicted);
        assert!(
            (e.fraction - axis_oracle(r)).abs() < 4.0 * e.stderr + 1e-12,
            "{e:?}"
        );
    }
    for w in res.estimates.windows(2) {
        assert!(w[0].hits <= w[1].hits);
    }
    // inclusion-exclusion: the union is smaller than the sum at large grains
    let big = res.estimates.last().unwrap();
    assert!(big.fraction < 2.0 * (big.epsilon / l).powi(2));
}

#[test]
fn axis_scan_is_deterministic_and_converges() {
    let model = FRWModel::with_mass(0.0, 1.0);
    let eps = vec![0.05, 0.1, 0.2];
    let a = scan_axis_measure(
        &MeasureScanConfig::new(2.0, eps.clone(), 100_000, 3, model, MeasureMode::AxisSet).unwrap(),
    )
    .unwrap();
    let b = scan_axis_measure(
        &MeasureScanConfig::new(2.0, eps.clone(), 100_000, 3, model, MeasureMode::AxisSet).unwrap(),
    )
    .unwrap();
    assert_eq!(a, b);
    let d = scan_axis_measure(
        &MeasureScanConfig::new(2.0, eps.clone(), 200_000, 3, model, MeasureMode::AxisSet).unwrap(),
    )
    .unwrap();
    for (x, y) in a.estimates.iter().zip(&d.estimates) {
        let ratio = x.stderr / y.stderr;
        assert!((ratio / 2f64.sqrt() - 1.0).abs() < 0.2, "{ratio}");
    }
    let tiny = scan_axis_measure(
        &MeasureScanConfig::new(2.0, vec![0.005], 100_000, 3, model, MeasureMode::AxisSet).unwrap(),
    );
    assert!(matches!(
        tiny,
        Err(tempus_core::Error::InsufficientHits { .. })
    ));
    // a shrinking grain empties the set
    let pts = cube_chunk(3, 2.0, 100_000, 0);
    let hits = count_hits(pts.iter().map(axis_distance), &[1e-2, 1e-3, 1e-4, 1e-6]);
    assert!(hits.windows(2).all(|w| w[1] <= w[0]));
    assert_eq!(hits[3], 0);
}

#[test]
fn symmetric_surfaces_and_tube_scaling() {
    let l = 2.0;
    let model = FRWModel::with_mass(1.0, 0.5);

    // coarse bookkeeping grid
    let mut coarse = SurfaceOptions::new(l, 10.0);
    coarse.seeds = 50;
    let s = build_symmetric_surfaces(&model, &coarse).unwrap();
    for f in &s.families {
        assert!(f.rows.len() <= 2000 && f.rows.len() >= 40);
    }
    // every propagated axis point is time-symmetric
    for f in &s.families {
        for row in f.rows.iter().step_by(7) {
            let st = axis_state(f.axis, row.u, &model).unwrap();
            let run = evolve_cosmo_two_sided(&st, &model, 1.0, 1.0, 0.01).unwrap();
            let sym = detect_cosmo_symmetry(&run.trajectory, 1e-4).unwrap();
            assert!(sym.t_s.abs() < 1e-6);
        }
    }

    let eps: Vec<f64> = log_grid(0.01, 0.1, 5).iter().map(|r| r * l).collect();
    let cfg = MeasureScanConfig::new(l, eps, 200_000, 8, model, MeasureMode::SolutionTube).unwrap();
    assert!(matches!(
        scan_tube_measure(&cfg, &s),
        Err(tempus_core::Error::MeshTooCoarse { .. })
    ));

    let (res, surfaces) =
        scan_tube_measure_converged(&cfg, &SurfaceOptions::new(l, 0.005), 2).unwrap();
    assert!((res.slope() - 1.0).abs() <= 0.15, "slope {}", res.slope());
    assert!(surfaces.spacing() <= 0.25 * 0.02 + 1e-12);
    for w in res.estimates.windows(2) {
        assert!(w[0].hits <= w[1].hits);
    }

    // fraction at ε/L = 0.02 against 2ε/L within a factor of two
    let mesh = SurfaceMesh::new(&surfaces, 0.1).unwrap();
    let pts = cube_chunk(8, l, 100_000, 0);
    let (f, sat) = tube_fraction(&mesh, &pts, 0.04);
    assert!(!sat);
    assert!(f > 0.5 * 0.04 && f < 2.0 * 0.04, "{f}");
    assert_eq!(tube_fraction(&mesh, &pts, 2.5 * l), (1.0, true));

    // a generic off-axis solution stays clear of both surfaces
    let st = tempus_core::cosmology::CosmoState::on_constraint(0.45, 0.5, -0.6, &model).unwrap();
    let run = evolve_cosmo_two_sided(&st, &model, 0.3, 0.3, 0.01).unwrap();
    let far = (0..run.trajectory.len())
        .map(|i| {
            let x = run.trajectory.state(i);
            mesh.distance(&[x[2], x[1], x[3]])
        })
        .fold(f64::INFINITY, f64::min);
    assert!(far > 0.02, "{far}");
}

#[test]
fn census_routes_agree() {
    let model = FRWModel::with_mass(1.0, 0.5);
    let eps = 0.1;
    let opts = CensusOptions {
        window: 0.5,
        ..CensusOptions::new(eps)
    };
    let cfg =
        MeasureScanConfig::new(2.0, vec![eps], 10_000, 17, model, MeasureMode::Dynamic).unwrap();
    let rep = dynamic_symmetry_census(&cfg, &opts).unwrap();
    assert!(rep.agree, "{rep:?}");
    assert!(rep.member_fraction > 0.0);
    assert!(rep.max_residual <= 1e-6);

    let on_axis: Vec<CensusSample> = (1..=20)
        .map(|i| {
            let u = 0.04 * i as f64;
            let p = if i % 2 == 0 {
                [0.0, u, 0.0]
            } else {
                [0.0, 0.0, -u]
            };
            census_sample(&model, p, &opts).unwrap()
        })
        .collect();
    let r = summarize_census(eps, 2.0, &on_axis, 0);
    assert_eq!(
        (r.member_fraction, r.dynamic_fraction, r.detected_fraction),
        (1.0, 1.0, 1.0)
    );

    let far: Vec<CensusSample> = (1..=20)
        .map(|i| {
            census_sample(
                &model,
                [10.0 * eps * 0.6, 0.03 * i as f64, 10.0 * eps * 0.7],
                &opts,
            )
            .unwrap()
        })
        .collect();
    let r = summarize_census(eps, 2.0, &far, 0);
    assert_eq!(
        (r.member_fraction, r.dynamic_fraction, r.detected_fraction),
        (0.0, 0.0, 0.0)
    );
}

proptest! {
    #[test]
    fn membership_is_sign_symmetric_and_monotone(x in -1.0f64..1.0, y in -1.0f64..1.0, z in -1.0f64..1.0,
                                                  e in 0.001f64..0.5, k in 1.0f64..4.0) {
        let p = [x, y, z];
        for q in [[-x, y, z], [x, -y, z], [x, y, -z]] {
            prop_assert_eq!(axis_membership(&p, e), axis_membership(&q, e));
        }
        if axis_membership(&p, e) {
            prop_assert!(axis_membership(&p, k * e));
        }
    }
}
