//! Spectral mean values `⟨O⟩(t) = ∫ρO dω + ∫∫ρ(ω,ω′)O(ω,ω′)e^{−i(ω−ω′)t}dω dω′`,
//! their weak limit, and decoherence times from pole positions or fits.
//!
//! Kernels are either separable sums `Σ_k g_k(ω) conj(g_k(ω′))` (evaluated in
//! O(N) per time) or dense Hermitian matrices (O(N²)).

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;
use num_complex::Complex64;
use num_traits::Float;

use crate::error::{Error, Result};
use crate::quadrature::Grid;
use crate::stats::{fit_line, pairwise_sum};

/// Off-diagonal part of a state or observable, sampled on the grid nodes.
#[derive(Debug, Clone, PartialEq)]
pub enum Kernel {
    Zero,
    /// `K(ω_i, ω_j) = Σ_k f_k(ω_i) conj(f_k(ω_j))`.
    LowRank(Vec<Vec<Complex64>>),
    /// Row-major `n × n` matrix.
    Dense(Vec<Complex64>),
}

impl Kernel {
    fn value(&self, n: usize, i: usize, j: usize) -> Complex64 {
        match self {
            Kernel::Zero => Complex64::new(0.0, 0.0),
            Kernel::LowRank(f) => f.iter().map(|v| v[i] * v[j].conj()).sum(),
            Kernel::Dense(m) => m[i * n + j],
        }
    }

    fn check(&self, n: usize) -> Result<()> {
        match self {
            Kernel::Zero => Ok(()),
            Kernel::LowRank(f) => {
                if f.iter().any(|v| v.len() != n) {
                    return Err(Error::GridMismatch);
                }
                if f.iter()
                    .flatten()
                    .any(|z| !z.re.is_finite() || !z.im.is_finite())
                {
                    return Err(Error::InvalidArgument("non-finite kernel factor".into()));
                }
                Ok(())
            }
            Kernel::Dense(m) => {
                if m.len() != n * n {
                    return Err(Error::GridMismatch);
                }
                let peak = m.iter().fold(0.0f64, |a, z| a.max(z.norm()));
                for i in 0..n {
                    for j in i..n {
                        let d = (m[i * n + j] - m[j * n + i].conj()).norm();
                        if !(d <= 1e-12 * peak.max(1.0)) {
                            return Err(Error::InvalidArgument("kernel is not Hermitian".into()));
                        }
                    }
                }
                Ok(())
            }
        }
    }
}

fn check_diag(grid: &Grid, diag: &[f64]) -> Result<()> {
    if diag.len() != grid.len() {
        return Err(Error::GridMismatch);
    }
    if diag.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("non-finite diagonal".into()));
    }
    Ok(())
}

/// A generalized state: diagonal density `ρ(ω)` and kernel `ρ(ω, ω′)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralState {
    grid: Grid,
    diag: Vec<f64>,
    kernel: Kernel,
}

impl SpectralState {
    /// Requires `ρ(ω) >= 0`, `∫ρ dω = 1` within 1e-10 and a Hermitian kernel.
    pub fn new(grid: Grid, diag: Vec<f64>, kernel: Kernel) -> Result<Self> {
        check_diag(&grid, &diag)?;
        if diag.iter().any(|&v| v < 0.0) {
            return Err(Error::InvalidArgument("negative diagonal density".into()));
        }
        let total = grid.integrate(&diag);
        if (total - 1.0).abs() > 1e-10 {
            return Err(Error::InvalidArgument(alloc::format!(
                "density integrates to {total}"
            )));
        }
        kernel.check(grid.len())?;
        Ok(SpectralState { grid, diag, kernel })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn diag(&self) -> &[f64] {
        &self.diag
    }

    pub fn kernel(&self) -> &Kernel {
        &self.kernel
    }

    /// The same state with its kernel removed.
    pub fn diagonal_part(&self) -> SpectralState {
        SpectralState {
            grid: self.grid.clone(),
            diag: self.diag.clone(),
            kernel: Kernel::Zero,
        }
    }

    /// `max_j |ρ(ω_edge, ω_j)| / max_ij |ρ(ω_i, ω_j)|` over both edge nodes.
    /// Values well above 1e-8 mean the spectrum is truncated too early.
    pub fn edge_ratio(&self) -> f64 {
        edge_ratio(&self.kernel, self.grid.len())
    }
}

fn edge_ratio(kernel: &Kernel, n: usize) -> f64 {
    if n == 0 || matches!(kernel, Kernel::Zero) {
        return 0.0;
    }
    let peak = (0..n).fold(0.0f64, |m, i| m.max(kernel.value(n, i, i).norm()));
    if peak == 0.0 {
        return 0.0;
    }
    let edge = [0, n - 1]
        .iter()
        .flat_map(|&e| (0..n).map(move |j| (e, j)))
        .fold(0.0f64, |m, (e, j)| m.max(kernel.value(n, e, j).norm()));
    edge / peak
}

/// An observable `O(ω)`, `O(ω, ω′)` on the same grid contract as states.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralObservable {
    grid: Grid,
    diag: Vec<f64>,
    kernel: Kernel,
}

impl SpectralObservable {
    pub fn new(grid: Grid, diag: Vec<f64>, kernel: Kernel) -> Result<Self> {
        check_diag(&grid, &diag)?;
        kernel.check(grid.len())?;
        Ok(SpectralObservable { grid, diag, kernel })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn diag(&self) -> &[f64] {
        &self.diag
    }

    pub fn kernel(&self) -> &Kernel {
        &self.kernel
    }
}

/// Value of `⟨O⟩(t)` and the imaginary residual left by the quadrature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanValue {
    pub value: f64,
    pub imag: f64,
}

fn csum(zs: &[Complex64]) -> Complex64 {
    let re: Vec<f64> = zs.iter().map(|z| z.re).collect();
    let im: Vec<f64> = zs.iter().map(|z| z.im).collect();
    Complex64::new(pairwise_sum(&re), pairwise_sum(&im))
}

/// `e^{−iω t}` at every node. Trigonometry is evaluated at `|t|` and the sine
/// flipped for negative times, so `t` and `−t` see conjugate phases exactly.
fn phases(grid: &Grid, t: f64) -> Vec<Complex64> {
    let sign = if t < 0.0 { -1.0 } else { 1.0 };
    let at = t.abs();
    grid.nodes()
        .iter()
        .map(|&w| {
            let (s, c) = (w * at).sin_cos();
            Complex64::new(c, -sign * s)
        })
        .collect()
}

fn check_pair(state: &SpectralState, obs: &SpectralObservable) -> Result<()> {
    if state.grid.same_as(&obs.grid) {
        Ok(())
    } else {
        Err(Error::GridMismatch)
    }
}

/// `⟨O⟩(t)` with the imaginary health-check residual.
pub fn mean_value_detailed(
    state: &SpectralState,
    obs: &SpectralObservable,
    t: f64,
) -> Result<MeanValue> {
    check_pair(state, obs)?;
    let grid = &state.grid;
    let w = grid.weights();
    let n = grid.len();
    let diag_terms: Vec<f64> = (0..n).map(|i| state.diag[i] * obs.diag[i]).collect();
    let diag = grid.integrate(&diag_terms);
    let off = match (&state.kernel, &obs.kernel) {
        (Kernel::Zero, _) | (_, Kernel::Zero) => Complex64::new(0.0, 0.0),
        (Kernel::LowRank(g), Kernel::LowRank(h)) => {
            let ph = phases(grid, t);
            let mut total = 0.0;
            for gk in g {
                for hl in h {
                    let terms: Vec<Complex64> =
                        (0..n).map(|i| gk[i] * hl[i] * w[i] * ph[i]).collect();
                    total += csum(&terms).norm_sqr();
                }
            }
            Complex64::new(total, 0.0)
        }
        (a, b) => {
            let ph = phases(grid, t);
            let mut outer = Vec::with_capacity(n);
            let mut row = Vec::with_capacity(n);
            for i in 0..n {
                row.clear();
                for j in 0..n {
                    row.push(a.value(n, i, j) * b.value(n, i, j) * w[j] * ph[j].conj());
                }
                outer.push(csum(&row) * w[i] * ph[i]);
            }
            csum(&outer)
        }
    };
    Ok(MeanValue {
        value: diag + off.re,
        imag: off.im,
    })
}

pub fn mean_value(state: &SpectralState, obs: &SpectralObservable, t: f64) -> Result<f64> {
    mean_value_detailed(state, obs, t).map(|m| m.value)
}

/// The `t → ±∞` limit: the diagonal contraction `∫ρ(ω)O(ω)dω`.
pub fn equilibrium_mean(state: &SpectralState, obs: &SpectralObservable) -> Result<f64> {
    check_pair(state, obs)?;
    let terms: Vec<f64> = state
        .diag
        .iter()
        .zip(&obs.diag)
        .map(|(a, b)| a * b)
        .collect();
    Ok(state.grid.integrate(&terms))
}

/// Decay curve `D(t) = |⟨O⟩(t) − ⟨O⟩✻|` together with its mirror `D(−t)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Envelope {
    pub t: Vec<f64>,
    pub mean: Vec<f64>,
    pub d: Vec<f64>,
    pub d_mirror: Vec<f64>,
    pub equilibrium: f64,
    /// `max_t |D(t) − D(−t)|`.
    pub twin_asymmetry: f64,
    /// Largest imaginary residual seen.
    pub max_imag: f64,
}

pub fn offdiag_envelope(
    state: &SpectralState,
    obs: &SpectralObservable,
    t_grid: &[f64],
) -> Result<Envelope> {
    let eq = equilibrium_mean(state, obs)?;
    let mut env = Envelope {
        t: t_grid.to_vec(),
        mean: Vec::with_capacity(t_grid.len()),
        d: Vec::with_capacity(t_grid.len()),
        d_mirror: Vec::with_capacity(t_grid.len()),
        equilibrium: eq,
        twin_asymmetry: 0.0,
        max_imag: 0.0,
    };
    for &t in t_grid {
        let m = mean_value_detailed(state, obs, t)?;
        let mm = mean_value_detailed(state, obs, -t)?;
        let (d, dm) = ((m.value - eq).abs(), (mm.value - eq).abs());
        env.twin_asymmetry = env.twin_asymmetry.max((d - dm).abs());
        env.max_imag = env.max_imag.max(m.imag.abs()).max(mm.imag.abs());
        env.mean.push(m.value);
        env.d.push(d);
        env.d_mirror.push(dm);
    }
    Ok(env)
}

/// Earliest sampled times after which `|⟨O⟩ − ⟨O⟩✻|` stays below `tol`
/// up to `t_max`, in each time direction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeakLimit {
    pub future: Option<f64>,
    pub past: Option<f64>,
}

pub fn settle_times(
    state: &SpectralState,
    obs: &SpectralObservable,
    t_max: f64,
    dt: f64,
    tol: f64,
) -> Result<WeakLimit> {
    if !(dt > 0.0) || !(t_max > 0.0) {
        return Err(Error::InvalidArgument(
            "t_max and dt must be positive".into(),
        ));
    }
    let eq = equilibrium_mean(state, obs)?;
    let steps = (t_max / dt).ceil() as usize;
    let settle = |sign: f64| -> Result<Option<f64>> {
        let mut since: Option<f64> = None;
        for k in 0..=steps {
            let t = (k as f64 * dt).min(t_max);
            let dev = (mean_value(state, obs, sign * t)? - eq).abs();
            if dev < tol {
                since.get_or_insert(t);
            } else {
                since = None;
            }
        }
        Ok(since)
    };
    Ok(WeakLimit {
        future: settle(1.0)?,
        past: settle(-1.0)?,
    })
}

/// Settling times for every member of an observable family.
pub fn weak_limit(
    state: &SpectralState,
    family: &[SpectralObservable],
    t_max: f64,
    dt: f64,
    tol: f64,
) -> Result<Vec<WeakLimit>> {
    family
        .iter()
        .map(|o| settle_times(state, o, t_max, dt, tol))
        .collect()
}

/// Complex energy-plane poles with optional weights.
#[derive(Debug, Clone, PartialEq)]
pub struct PoleModel {
    pub poles: Vec<Complex64>,
    pub residues: Option<Vec<f64>>,
}

impl PoleModel {
    pub fn new(poles: Vec<Complex64>, residues: Option<Vec<f64>>) -> Result<Self> {
        if let Some(r) = &residues {
            if r.len() != poles.len() {
                return Err(Error::InvalidArgument(
                    "one residue per pole required".into(),
                ));
            }
        }
        Ok(PoleModel { poles, residues })
    }

    /// Adds the complex conjugate of every pole.
    pub fn symmetric(lower: &[Complex64], residues: Option<&[f64]>) -> Result<Self> {
        let mut poles = lower.to_vec();
        poles.extend(lower.iter().map(|z| z.conj()));
        let residues = residues.map(|r| r.iter().chain(r.iter()).copied().collect());
        Self::new(poles, residues)
    }

    /// Every pole has its conjugate in the model.
    pub fn is_tri(&self) -> bool {
        self.poles.iter().all(|z| {
            self.poles
                .iter()
                .any(|w| (w - z.conj()).norm() <= 1e-12 * (1.0 + z.norm()))
        })
    }

    /// Lower half-plane poles with their weights.
    pub fn lower(&self) -> Vec<(Complex64, f64)> {
        self.poles
            .iter()
            .enumerate()
            .filter(|(_, z)| z.im < 0.0)
            .map(|(i, z)| (*z, self.residues.as_ref().map_or(1.0, |r| r[i].abs())))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PoleTime {
    pub time: f64,
    pub pole: Complex64,
    /// All lower poles at the same distance from the real axis.
    pub ties: Vec<Complex64>,
}

/// `1/|Im z✻|` for the lower pole closest to the real axis; ties go to the
/// smallest `|Re z|` and are all reported.
pub fn decoherence_time_from_poles(model: &PoleModel) -> Result<PoleTime> {
    let lower = model.lower();
    let min_im = lower
        .iter()
        .map(|(z, _)| z.im.abs())
        .fold(f64::INFINITY, f64::min);
    if !min_im.is_finite() {
        return Err(Error::NoLowerPole);
    }
    let mut ties: Vec<Complex64> = lower
        .iter()
        .map(|(z, _)| *z)
        .filter(|z| (z.im.abs() - min_im).abs() <= 1e-12 * min_im)
        .collect();
    ties.sort_by(|a, b| {
        a.re.abs()
            .total_cmp(&b.re.abs())
            .then(a.re.total_cmp(&b.re))
    });
    Ok(PoleTime {
        time: 1.0 / min_im,
        pole: ties[0],
        ties,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DecayForm {
    /// `log D = c − rate·|t|`.
    Exponential,
    /// `log D = c − rate·t²`.
    Gaussian,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayFit {
    pub rate: f64,
    pub r_squared: f64,
    pub points: usize,
}

/// Least-squares fit of `log D` on the samples where `D/D(0)` lies in
/// `[1e-3, 0.5]`; `D(0)` is the sample closest to `t = 0`.
pub fn fit_decoherence_time(t: &[f64], d: &[f64], form: DecayForm) -> Result<DecayFit> {
    if t.len() != d.len() || t.is_empty() {
        return Err(Error::WindowEmpty);
    }
    let i0 = (0..t.len())
        .min_by(|&a, &b| t[a].abs().total_cmp(&t[b].abs()))
        .unwrap_or(0);
    let d0 = d[i0];
    if !(d0 > 0.0) {
        return Err(Error::WindowEmpty);
    }
    let (mut xs, mut ys) = (Vec::new(), Vec::new());
    for (&ti, &di) in t.iter().zip(d) {
        let r = di / d0;
        if di > 0.0 && (1e-3..=0.5).contains(&r) {
            xs.push(match form {
                DecayForm::Exponential => ti.abs(),
                DecayForm::Gaussian => ti * ti,
            });
            ys.push(di.ln());
        }
    }
    if xs.len() < 3 {
        return Err(Error::WindowEmpty);
    }
    let fit = fit_line(&xs, &ys).ok_or(Error::WindowEmpty)?;
    Ok(DecayFit {
        rate: -fit.slope,
        r_squared: fit.r_squared,
        points: xs.len(),
    })
}

/// `(hwhm/π) / ((ω − center)² + hwhm²)` at the nodes.
pub fn lorentzian_profile(grid: &Grid, center: f64, hwhm: f64) -> Vec<f64> {
    grid.sample(|w| hwhm / PI / ((w - center) * (w - center) + hwhm * hwhm))
}

/// Unit-mass Gaussian of standard deviation `std` at the nodes.
pub fn gaussian_profile(grid: &Grid, center: f64, std: f64) -> Vec<f64> {
    let c = 1.0 / (std * (2.0 * PI).sqrt());
    grid.sample(|w| c * (-(w - center) * (w - center) / (2.0 * std * std)).exp())
}

/// Rescales `v` to unit integral on the grid.
pub fn normalize(grid: &Grid, mut v: Vec<f64>) -> Result<Vec<f64>> {
    let total = grid.integrate(&v);
    if !(total > 0.0) {
        return Err(Error::InvalidArgument(
            "profile has no mass on the grid".into(),
        ));
    }
    for x in v.iter_mut() {
        *x /= total;
    }
    Ok(v)
}

fn real_factor(v: &[f64]) -> Vec<Complex64> {
    v.iter().map(|&x| Complex64::new(x, 0.0)).collect()
}

/// State/observable pair whose kernels multiply to a sum of separable terms
/// `Σ_k u_k(ω)u_k(ω′)`; the observable kernel is identically one and its
/// diagonal is the energy `ω`. Then `D(t) = Σ_k |û_k(t)|²`.
pub fn separable_pair(
    grid: &Grid,
    profiles: Vec<Vec<f64>>,
    diag: Vec<f64>,
) -> Result<(SpectralState, SpectralObservable)> {
    let factors = profiles.iter().map(|u| real_factor(u)).collect();
    let state = SpectralState::new(
        grid.clone(),
        normalize(grid, diag)?,
        Kernel::LowRank(factors),
    )?;
    let ones = vec![Complex64::new(1.0, 0.0); grid.len()];
    let obs = SpectralObservable::new(
        grid.clone(),
        grid.nodes().to_vec(),
        Kernel::LowRank(vec![ones]),
    )?;
    Ok((state, obs))
}

/// Analytic difference kernels with known Fourier transforms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DifferenceKernel {
    /// `F(ν) = (γ/π)/(ν² + γ²)`, so `D(t)/D(0) = e^{−γ|t|}`.
    Lorentzian { gamma: f64 },
    /// Gaussian `F(ν)` of width σ, so `D(t)/D(0) = e^{−σ²t²/2}`.
    Gaussian { sigma: f64 },
}

/// Span and center of the spectral window used for Lorentzian kernels.
pub const LORENTZIAN_OMEGA_MAX: f64 = 4000.0;

fn lorentzian_grid(min_hwhm: f64, t_max: f64) -> Result<Grid> {
    let c = 0.5 * LORENTZIAN_OMEGA_MAX;
    let h0 = (min_hwhm / 8.0).min(0.02);
    let h_max = (10.0 / t_max.max(1e-9)).min(1.0).max(h0);
    Grid::graded_capped(0.0, LORENTZIAN_OMEGA_MAX, c, h0, 1.05, h_max, 16)
}

/// Builds the state/observable pair realising `kind`, resolved for `|t| <= t_max`.
pub fn difference_kernel_pair(
    kind: DifferenceKernel,
    t_max: f64,
) -> Result<(SpectralState, SpectralObservable)> {
    match kind {
        DifferenceKernel::Lorentzian { gamma } => {
            if !(gamma > 0.0) {
                return Err(Error::InvalidArgument("gamma must be positive".into()));
            }
            let hw = 0.5 * gamma;
            let grid = lorentzian_grid(hw, t_max)?;
            let c = 0.5 * LORENTZIAN_OMEGA_MAX;
            let u = lorentzian_profile(&grid, c, hw);
            let diag = lorentzian_profile(&grid, c, gamma);
            separable_pair(&grid, vec![u], diag)
        }
        DifferenceKernel::Gaussian { sigma } => {
            if !(sigma > 0.0) {
                return Err(Error::InvalidArgument("sigma must be positive".into()));
            }
            let s = sigma / 2.0f64.sqrt();
            let c = 40.0 * s;
            let h = (s / 4.0).min(5.0 / t_max.max(1e-9)).min(0.5);
            let panels = ((2.0 * c) / h).ceil() as usize;
            let grid = Grid::composite(0.0, 2.0 * c, panels, 16)?;
            let u = gaussian_profile(&grid, c, s);
            let diag = gaussian_profile(&grid, c, s);
            separable_pair(&grid, vec![u], diag)
        }
    }
}

/// One Lorentzian component per lower pole `E − iΓ`, centered at offset `E`
/// with half width `Γ/2` and weight proportional to the residue, so that
/// `D(t) = Σ_k r_k e^{−Γ_k|t|}`.
pub fn pole_model_pair(
    model: &PoleModel,
    t_max: f64,
) -> Result<(SpectralState, SpectralObservable)> {
    let lower = model.lower();
    if lower.is_empty() {
        return Err(Error::NoLowerPole);
    }
    let total: f64 = lower.iter().map(|(_, r)| r).sum();
    if !(total > 0.0) {
        return Err(Error::InvalidArgument("residues sum to zero".into()));
    }
    let min_hw = lower
        .iter()
        .map(|(z, _)| 0.5 * z.im.abs())
        .fold(f64::INFINITY, f64::min);
    let grid = lorentzian_grid(min_hw, t_max)?;
    let c = 0.5 * LORENTZIAN_OMEGA_MAX;
    let profiles: Vec<Vec<f64>> = lower
        .iter()
        .map(|(z, r)| {
            let scale = (r / total).sqrt();
            lorentzian_profile(&grid, c + z.re, 0.5 * z.im.abs())
                .into_iter()
                .map(|v| v * scale)
                .collect()
        })
        .collect();
    let diag = lorentzian_profile(&grid, c, 2.0 * min_hw);
    separable_pair(&grid, profiles, diag)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn uniform_grid() -> Grid {
        Grid::gauss_legendre(0.0, 1.0, 32).unwrap()
    }

    #[test]
    fn diagonal_state_is_time_independent() {
        let g = uniform_grid();
        let s = SpectralState::new(g.clone(), vec![1.0; g.len()], Kernel::Zero).unwrap();
        let o = SpectralObservable::new(g.clone(), g.nodes().to_vec(), Kernel::Zero).unwrap();
        for t in [-5.0, 0.0, 3.0] {
            assert!((mean_value(&s, &o, t).unwrap() - 0.5).abs() < 1e-14);
        }
        assert!((equilibrium_mean(&s, &o).unwrap() - 0.5).abs() < 1e-14);
    }

    #[test]
    fn validation_errors() {
        let g = uniform_grid();
        assert!(SpectralState::new(g.clone(), vec![2.0; g.len()], Kernel::Zero).is_err());
        assert!(matches!(
            SpectralState::new(g.clone(), vec![1.0; 3], Kernel::Zero),
            Err(Error::GridMismatch)
        ));
        let n = g.len();
        let mut m = vec![Complex64::new(0.0, 0.0); n * n];
        m[1] = Complex64::new(0.0, 1.0);
        assert!(SpectralObservable::new(g.clone(), vec![0.0; n], Kernel::Dense(m)).is_err());
        let s = SpectralState::new(g.clone(), vec![1.0; n], Kernel::Zero).unwrap();
        let g2 = Grid::gauss_legendre(0.0, 1.0, 33).unwrap();
        let o = SpectralObservable::new(g2.clone(), vec![0.0; g2.len()], Kernel::Zero).unwrap();
        assert!(matches!(mean_value(&s, &o, 0.0), Err(Error::GridMismatch)));
    }

    #[test]
    fn pole_rule() {
        let m = PoleModel::symmetric(
            &[Complex64::new(0.5, -0.2), Complex64::new(-0.5, -0.2)],
            None,
        )
        .unwrap();
        assert!(m.is_tri());
        let p = decoherence_time_from_poles(&m).unwrap();
        assert!((p.time - 5.0).abs() < 1e-12);
        assert_eq!(p.ties.len(), 2);
        let m = PoleModel::symmetric(&[Complex64::new(0.0, -0.25)], None).unwrap();
        assert!((decoherence_time_from_poles(&m).unwrap().time - 4.0).abs() < 1e-12);
        let m = PoleModel::new(vec![Complex64::new(1.0, 0.3)], None).unwrap();
        assert!(matches!(
            decoherence_time_from_poles(&m),
            Err(Error::NoLowerPole)
        ));
        let m = PoleModel::new(
            vec![Complex64::new(3.0, -0.1), Complex64::new(-1.0, -0.1)],
            None,
        )
        .unwrap();
        assert_eq!(
            decoherence_time_from_poles(&m).unwrap().pole,
            Complex64::new(-1.0, -0.1)
        );
    }

    #[test]
    fn constant_curve_has_no_fit_window() {
        let t: Vec<f64> = (0..50).map(|i| i as f64).collect();
        assert!(matches!(
            fit_decoherence_time(&t, &vec![1.0; 50], DecayForm::Exponential),
            Err(Error::WindowEmpty)
        ));
    }

    #[test]
    fn dense_and_low_rank_paths_agree() {
        let g = Grid::composite(0.0, 10.0, 8, 16).unwrap();
        let u = gaussian_profile(&g, 5.0, 0.7);
        let (s, o) = separable_pair(&g, vec![u.clone()], u.clone()).unwrap();
        let n = g.len();
        let dense: Vec<Complex64> = (0..n * n)
            .map(|k| Complex64::new(u[k / n] * u[k % n], 0.0))
            .collect();
        let sd = SpectralState::new(g.clone(), s.diag().to_vec(), Kernel::Dense(dense)).unwrap();
        for t in [0.0, 0.7, -2.5] {
            let a = mean_value_detailed(&s, &o, t).unwrap();
            let b = mean_value_detailed(&sd, &o, t).unwrap();
            assert!((a.value - b.value).abs() < 1e-12, "t={t}");
            assert!(b.imag.abs() < 1e-10);
        }
    }
}
