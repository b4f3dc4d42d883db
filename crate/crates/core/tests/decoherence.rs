use num_complex::Complex64;
use proptest::prelude::*;
use tempus_core::decoherence::*;
use tempus_core::quadrature::Grid;

fn t_grid(t_max: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| -t_max + 2.0 * t_max * i as f64 / (n - 1) as f64)
        .collect()
}

fn ratio(env: &Envelope) -> Vec<f64> {
    let i0 = env.t.iter().position(|t| t.abs() < 1e-12).unwrap();
    env.d.iter().map(|d| d / env.d[i0]).collect()
}

#[test]
fn lorentzian_kernel_decays_exponentially_in_both_directions() {
    let gamma = 0.3;
    let (s, o) = difference_kernel_pair(DifferenceKernel::Lorentzian { gamma }, 20.0).unwrap();
    let env = offdiag_envelope(&s, &o, &t_grid(20.0, 401)).unwrap();
    for (t, r) in env.t.iter().zip(ratio(&env)) {
        if gamma * t.abs() <= 5.0 {
            let exact = (-gamma * t.abs()).exp();
            assert!((r - exact).abs() < 1e-3, "t={t} r={r} exact={exact}");
        }
    }
    assert!(env.twin_asymmetry < 1e-10);
    assert!(env.max_imag < 1e-10);
    let fit = fit_decoherence_time(&env.t, &env.d, DecayForm::Exponential).unwrap();
    assert!((fit.rate - gamma).abs() < 0.01 * gamma, "{fit:?}");
    let model = PoleModel::symmetric(&[Complex64::new(0.0, -gamma)], None).unwrap();
    let pole = decoherence_time_from_poles(&model).unwrap();
    assert!((fit.rate - 1.0 / pole.time).abs() < 0.01 * gamma);
}

#[test]
fn gaussian_kernel_decays_as_gaussian() {
    let sigma = 1.0;
    let (s, o) = difference_kernel_pair(DifferenceKernel::Gaussian { sigma }, 10.0).unwrap();
    assert!(s.edge_ratio() < 1e-8);
    let env = offdiag_envelope(&s, &o, &t_grid(10.0, 201)).unwrap();
    for (t, r) in env.t.iter().zip(ratio(&env)) {
        let exact = (-sigma * sigma * t * t / 2.0).exp();
        assert!((r - exact).abs() < 1e-3, "t={t}");
    }
    assert!(env.twin_asymmetry < 1e-10);
    let fit = fit_decoherence_time(&env.t, &env.d, DecayForm::Gaussian).unwrap();
    assert!((fit.rate - 0.5).abs() < 0.005, "{fit:?}");
}

#[test]
fn gaussian_kernel_reaches_equilibrium_at_long_times() {
    let sigma = 1.0;
    let (s, o) = difference_kernel_pair(DifferenceKernel::Gaussian { sigma }, 200.0).unwrap();
    let eq = equilibrium_mean(&s, &o).unwrap();
    for t in [200.0 / sigma, -200.0 / sigma] {
        assert!((mean_value(&s, &o, t).unwrap() - eq).abs() < 1e-8);
    }
    assert!((mean_value(&s.diagonal_part(), &o, 3.0).unwrap() - eq).abs() < 1e-14);
}

#[test]
fn pole_models_agree_with_fitted_rates() {
    let models = [
        PoleModel::symmetric(&[Complex64::new(0.0, -0.3)], None).unwrap(),
        PoleModel::symmetric(
            &[Complex64::new(0.5, -0.2), Complex64::new(-0.5, -0.2)],
            None,
        )
        .unwrap(),
        PoleModel::symmetric(
            &[Complex64::new(0.0, -0.25), Complex64::new(0.0, -2.0)],
            Some(&[0.9, 0.1]),
        )
        .unwrap(),
    ];
    for m in &models {
        let pole = decoherence_time_from_poles(m).unwrap();
        let rate = 1.0 / pole.time;
        let t_max = 6.0 / rate;
        let (s, o) = pole_model_pair(m, t_max).unwrap();
        let env = offdiag_envelope(&s, &o, &t_grid(t_max, 301)).unwrap();
        let fit = fit_decoherence_time(&env.t, &env.d, DecayForm::Exponential).unwrap();
        assert!((fit.rate - rate).abs() < 0.01 * rate, "{m:?}: {fit:?}");
        assert!(env.twin_asymmetry < 1e-10);
    }
}

#[test]
fn weak_limit_holds_towards_past_and_future() {
    let (s, o) = difference_kernel_pair(DifferenceKernel::Lorentzian { gamma: 0.5 }, 40.0).unwrap();
    let n = s.grid().len();
    let energy_sq = SpectralObservable::new(
        s.grid().clone(),
        s.grid()
            .nodes()
            .iter()
            .map(|w| (w / 2000.0) * (w / 2000.0))
            .collect(),
        o.kernel().clone(),
    )
    .unwrap();
    let bump = SpectralObservable::new(
        s.grid().clone(),
        vec![0.0; n],
        Kernel::LowRank(vec![s
            .grid()
            .nodes()
            .iter()
            .map(|w| Complex64::new((-(w - 2000.0) * (w - 2000.0) / 50.0).exp(), 0.0))
            .collect()]),
    )
    .unwrap();
    let limits = weak_limit(&s, &[o, energy_sq, bump], 40.0, 0.5, 1e-3).unwrap();
    for l in limits {
        assert!(l.future.is_some() && l.past.is_some(), "{l:?}");
        assert_eq!(l.future, l.past);
    }
}

#[test]
fn dense_quadrature_matches_fine_riemann_sum_at_t0() {
    let (lo, hi, n) = (0.0, 10.0, 256);
    let grid = Grid::gauss_legendre(lo, hi, n).unwrap();
    let c = 5.0;
    let g = |w: f64| (-(w - c) * (w - c) / (2.0 * 0.49)).exp();
    let ok = |w: f64, v: f64| (-(w - v) * (w - v) / 8.0).exp() * (1.0 + 0.1 * w * v);
    let nodes = grid.nodes();
    let rho: Vec<Complex64> = (0..n * n)
        .map(|k| Complex64::new(g(nodes[k / n]) * g(nodes[k % n]), 0.0))
        .collect();
    let obs: Vec<Complex64> = (0..n * n)
        .map(|k| Complex64::new(ok(nodes[k / n], nodes[k % n]), 0.0))
        .collect();
    let diag = normalize(&grid, gaussian_profile(&grid, c, 1.0)).unwrap();
    let s = SpectralState::new(grid.clone(), diag.clone(), Kernel::Dense(rho)).unwrap();
    let o = SpectralObservable::new(grid.clone(), vec![0.0; n], Kernel::Dense(obs)).unwrap();
    let got = mean_value(&s, &o, 0.0).unwrap();
    let m = 10 * n;
    let h = (hi - lo) / m as f64;
    let mut oracle = 0.0;
    for i in 0..m {
        let wi = lo + (i as f64 + 0.5) * h;
        for j in 0..m {
            let wj = lo + (j as f64 + 0.5) * h;
            oracle += g(wi) * g(wj) * ok(wi, wj);
        }
    }
    oracle *= h * h;
    assert!((got - oracle).abs() < 1e-6, "{got} vs {oracle}");
}

#[test]
fn doubling_the_spectral_window_changes_little() {
    let s0 = 0.5;
    let build = |w_max: f64| {
        let grid = Grid::composite(0.0, w_max, (w_max / 0.05) as usize, 16).unwrap();
        let u = gaussian_profile(&grid, 20.0, s0);
        separable_pair(&grid, vec![u.clone()], u).unwrap()
    };
    let (a, oa) = build(40.0);
    let (b, ob) = build(80.0);
    for t in [0.0, 1.0, 4.0] {
        let va = mean_value(&a, &oa, t).unwrap() - equilibrium_mean(&a, &oa).unwrap();
        let vb = mean_value(&b, &ob, t).unwrap() - equilibrium_mean(&b, &ob).unwrap();
        assert!((va - vb).abs() < 1e-8, "t={t}");
    }
}

fn random_obs(grid: &Grid, a: f64, b: f64) -> SpectralObservable {
    let f: Vec<Complex64> = grid
        .nodes()
        .iter()
        .map(|w| Complex64::new((a * w).cos(), (b * w).sin()))
        .collect();
    let n = grid.len();
    let dense: Vec<Complex64> = (0..n * n).map(|k| f[k / n] * f[k % n].conj()).collect();
    SpectralObservable::new(
        grid.clone(),
        grid.sample(|w| a * w + b),
        Kernel::Dense(dense),
    )
    .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn mean_value_is_linear_and_real(a1 in -2.0f64..2.0, b1 in -2.0f64..2.0, a2 in -2.0f64..2.0,
                                     b2 in -2.0f64..2.0, x in -3.0f64..3.0, y in -3.0f64..3.0,
                                     t in -10.0f64..10.0) {
        let grid = Grid::composite(0.0, 6.0, 4, 12).unwrap();
        let u = gaussian_profile(&grid, 3.0, 0.6);
        let (s, _) = separable_pair(&grid, vec![u.clone()], u).unwrap();
        let o1 = random_obs(&grid, a1, b1);
        let o2 = random_obs(&grid, a2, b2);
        let n = grid.len();
        let k1 = match o1.kernel() { Kernel::Dense(m) => m.clone(), _ => unreachable!() };
        let k2 = match o2.kernel() { Kernel::Dense(m) => m.clone(), _ => unreachable!() };
        let combo = SpectralObservable::new(
            grid.clone(),
            (0..n).map(|i| x * o1.diag()[i] + y * o2.diag()[i]).collect(),
            Kernel::Dense(k1.iter().zip(&k2).map(|(p, q)| p * x + q * y).collect()),
        ).unwrap();
        let lhs = mean_value_detailed(&s, &combo, t).unwrap();
        let rhs = x * mean_value(&s, &o1, t).unwrap() + y * mean_value(&s, &o2, t).unwrap();
        prop_assert!((lhs.value - rhs).abs() < 1e-10 * (1.0 + rhs.abs()));
        prop_assert!(lhs.imag.abs() < 1e-10);
    }
}
