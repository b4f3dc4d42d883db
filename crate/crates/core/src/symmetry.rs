//! Executable versions of three properties of evolution equations and their
//! solutions: time-reversal invariance (of the equation), reversibility (a
//! closed phase-space curve) and time-symmetry (a reflection center `t_S`).

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;
use num_traits::Float;
use rand::Rng;

use crate::error::{Error, Result};
use crate::rng;
use crate::systems::{DampedOscillator, HarmonicOscillator, ModifiedOscillator, Pendulum};
use crate::trajectory::{integrate, integrate_two_sided, DynamicalSystem, PhaseState, Trajectory};

/// Minimum number of samples required on each side of a symmetry center.
pub const MIN_WINDOW_SAMPLES: usize = 16;

/// Behaviour of one component under reflection about a symmetry center.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Parity {
    Even,
    Odd,
}

/// Default parity map: coordinates even, momenta odd.
pub fn default_parity(dim: usize) -> Vec<Parity> {
    (0..dim)
        .map(|i| {
            if i < dim / 2 {
                Parity::Even
            } else {
                Parity::Odd
            }
        })
        .collect()
}

/// Tests `R F(-t, R x) = -F(t, x)` at `samples` random points of the box
/// `[-scale, scale]^dim`, with a relative tolerance.
pub fn check_time_reversal_invariance_in_box<S: DynamicalSystem + ?Sized>(
    system: &S,
    samples: usize,
    seed: u64,
    tol: f64,
    scale: f64,
) -> bool {
    let n = system.dim();
    let mut rng = rng::rng_from(rng::derive(seed, "tri"));
    let (mut x, mut rx, mut f, mut frx, mut rfrx) = (
        vec![0.0; n],
        vec![0.0; n],
        vec![0.0; n],
        vec![0.0; n],
        vec![0.0; n],
    );
    for _ in 0..samples.max(1) {
        for v in x.iter_mut() {
            *v = rng.gen_range(-scale..scale);
        }
        let t = rng.gen_range(-scale..scale);
        system.vector_field(t, &x, &mut f);
        system.reversal(&x, &mut rx);
        system.vector_field(-t, &rx, &mut frx);
        system.reversal(&frx, &mut rfrx);
        let norm = f.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let err = rfrx
            .iter()
            .zip(&f)
            .fold(0.0f64, |m, (a, b)| m.max((a + b).abs()));
        if err > tol * (1.0 + norm) {
            return false;
        }
    }
    true
}

/// Infinitesimal time-reversal invariance test on the default box `[-2, 2]^dim`.
pub fn check_time_reversal_invariance<S: DynamicalSystem + ?Sized>(
    system: &S,
    samples: usize,
    seed: u64,
    tol: f64,
) -> bool {
    check_time_reversal_invariance_in_box(system, samples, seed, tol, 2.0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum IrreversibleCause {
    /// The state norm or an angle coordinate ran away.
    Escape,
    /// The path settles onto an attractor or an equilibrium.
    Attractor,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Reversibility {
    Reversible { period: f64 },
    Irreversible(IrreversibleCause),
    Undetermined,
}

impl Reversibility {
    pub fn is_reversible(&self) -> bool {
        matches!(self, Reversibility::Reversible { .. })
    }

    pub fn is_irreversible(&self) -> bool {
        matches!(self, Reversibility::Irreversible(_))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReversibilityOptions {
    /// Euclidean distance to the starting point that counts as a return.
    pub tol_close: f64,
    /// Only the first `t_horizon` of the path is examined.
    pub t_horizon: f64,
    /// Escape when the state norm exceeds this multiple of the initial norm.
    pub escape_factor: f64,
    /// Component holding an angle; escape once it advances more than 4π.
    pub angle_index: Option<usize>,
    /// Attractor when the spread of the final tenth of the path is below this
    /// fraction of the spread of the whole path.
    pub attractor_ratio: f64,
}

impl ReversibilityOptions {
    pub fn new(tol_close: f64, t_horizon: f64) -> Self {
        ReversibilityOptions {
            tol_close,
            t_horizon,
            escape_factor: 1e3,
            angle_index: None,
            attractor_ratio: 1e-2,
        }
    }

    pub fn with_angle(mut self, index: usize) -> Self {
        self.angle_index = Some(index);
        self
    }
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

fn norm(a: &[f64]) -> f64 {
    a.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Decides whether a single solution traces a closed phase-space curve.
///
/// A return is a local minimum of the distance to the start, closer than
/// `tol_close`, whose velocity is aligned with the initial velocity (cosine
/// above 0.99). Two or more returns give `Reversible` with the mean spacing as
/// the period.
pub fn check_reversibility(trajectory: &Trajectory, opts: &ReversibilityOptions) -> Reversibility {
    let n = trajectory.len();
    if n < 3 {
        return Reversibility::Undetermined;
    }
    let t0 = trajectory.time(0);
    if trajectory.time(n - 1) - t0 < opts.t_horizon * (1.0 - 1e-12) {
        return Reversibility::Undetermined;
    }
    let end = trajectory
        .times()
        .iter()
        .position(|&t| t - t0 > opts.t_horizon)
        .unwrap_or(n);
    let x0 = trajectory.state(0);
    let n0 = norm(x0);

    for i in 0..end {
        let x = trajectory.state(i);
        if n0 > 0.0 && norm(x) > opts.escape_factor * n0 {
            return Reversibility::Irreversible(IrreversibleCause::Escape);
        }
        if let Some(c) = opts.angle_index {
            if (x[c] - x0[c]).abs() > 4.0 * PI {
                return Reversibility::Irreversible(IrreversibleCause::Escape);
            }
        }
    }

    let v0: Vec<f64> = trajectory
        .state(1)
        .iter()
        .zip(x0)
        .map(|(a, b)| a - b)
        .collect();
    let d: Vec<f64> = (0..end).map(|i| dist(trajectory.state(i), x0)).collect();
    let mut returns: Vec<f64> = Vec::new();
    let mut departed = false;
    for i in 1..end.saturating_sub(1) {
        if d[i] > 10.0 * opts.tol_close {
            departed = true;
        }
        if !departed || d[i] >= opts.tol_close || d[i] > d[i - 1] || d[i] > d[i + 1] {
            continue;
        }
        let v: Vec<f64> = trajectory
            .state(i + 1)
            .iter()
            .zip(trajectory.state(i - 1))
            .map(|(a, b)| a - b)
            .collect();
        let cos = v.iter().zip(&v0).map(|(a, b)| a * b).sum::<f64>()
            / (norm(&v) * norm(&v0)).max(f64::MIN_POSITIVE);
        if cos <= 0.99 {
            continue;
        }
        // parabolic refinement of the minimum of d²
        let (ym, y, yp) = (d[i - 1] * d[i - 1], d[i] * d[i], d[i + 1] * d[i + 1]);
        let denom = ym - 2.0 * y + yp;
        let h = trajectory.time(i + 1) - trajectory.time(i);
        let shift = if denom > 0.0 {
            0.5 * (ym - yp) / denom
        } else {
            0.0
        };
        returns.push(trajectory.time(i) + shift.clamp(-1.0, 1.0) * h);
        departed = false;
    }
    if returns.len() >= 2 {
        let mut prev = t0;
        let mut total = 0.0;
        for &r in &returns {
            total += r - prev;
            prev = r;
        }
        return Reversibility::Reversible {
            period: total / returns.len() as f64,
        };
    }

    let xe = trajectory.state(end - 1);
    let overall = (0..end).fold(0.0f64, |m, i| m.max(dist(trajectory.state(i), xe)));
    let tail_start = end - (end / 10).max(2);
    let tail = (tail_start..end).fold(0.0f64, |m, i| m.max(dist(trajectory.state(i), xe)));
    if overall > 0.0 && tail < opts.attractor_ratio * overall {
        return Reversibility::Irreversible(IrreversibleCause::Attractor);
    }
    Reversibility::Undetermined
}

/// Cubic Lagrange interpolation of component `c` at time `t`.
pub fn interpolate(trajectory: &Trajectory, t: f64, c: usize) -> f64 {
    let times = trajectory.times();
    let n = times.len();
    let idx = match times.binary_search_by(|v| v.total_cmp(&t)) {
        Ok(i) => return trajectory.state(i)[c],
        Err(i) => i,
    };
    let lo = idx.saturating_sub(2).min(n.saturating_sub(4));
    let mut acc = 0.0;
    for j in lo..(lo + 4).min(n) {
        let mut w = 1.0;
        for m in lo..(lo + 4).min(n) {
            if m != j {
                w *= (t - times[m]) / (times[j] - times[m]);
            }
        }
        acc += w * trajectory.state(j)[c];
    }
    acc
}

/// Reflection residual about `center`:
/// `max_c max_τ |f_c(center+τ) - s_c f_c(center-τ)| / max_window |f_c|`
/// over the largest window that fits inside the path, with `s_c = ±1` from
/// the parity map. Components that vanish on the whole window are skipped.
///
/// Returns `None` when fewer than [`MIN_WINDOW_SAMPLES`] samples fit on
/// either side.
pub fn reflection_residual(trajectory: &Trajectory, center: f64, parity: &[Parity]) -> Option<f64> {
    let n = trajectory.len();
    if n < 2 {
        return None;
    }
    let (ta, tb) = (trajectory.time(0), trajectory.time(n - 1));
    let h = (tb - ta) / (n - 1) as f64;
    let window = (center - ta).min(tb - center);
    if window < MIN_WINDOW_SAMPLES as f64 * h * (1.0 - 1e-9) {
        return None;
    }
    let m = ((window / h).floor() as usize).clamp(1, 256);
    let mut worst: f64 = 0.0;
    for (c, par) in parity.iter().enumerate().take(trajectory.dim()) {
        let sign = match par {
            Parity::Even => 1.0,
            Parity::Odd => -1.0,
        };
        let mut scale: f64 = 0.0;
        let mut diff: f64 = 0.0;
        for j in 0..=m {
            let tau = window * j as f64 / m as f64;
            let plus = interpolate(trajectory, (center + tau).min(tb), c);
            let minus = interpolate(trajectory, (center - tau).max(ta), c);
            scale = scale.max(plus.abs()).max(minus.abs());
            diff = diff.max((plus - sign * minus).abs());
        }
        if scale > 0.0 {
            worst = worst.max(diff / scale);
        }
    }
    Some(worst)
}

/// A located symmetry center.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SymmetryCenter {
    pub t_s: f64,
    pub residual: f64,
    /// Half-width of the reflection window used for the residual.
    pub window: f64,
}

/// Golden-section minimisation of the reflection residual on `[a, b]`.
pub fn refine_center(
    trajectory: &Trajectory,
    parity: &[Parity],
    mut a: f64,
    mut b: f64,
) -> Option<(f64, f64)> {
    let g = 0.5 * (5.0f64.sqrt() - 1.0);
    let f = |t: f64| reflection_residual(trajectory, t, parity).unwrap_or(f64::INFINITY);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..200 {
        if (b - a).abs() <= 1e-13 * (1.0 + a.abs()) {
            break;
        }
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    let t = 0.5 * (a + b);
    let r = f(t);
    if r.is_finite() {
        Some((t, r))
    } else {
        None
    }
}

/// Finds a time `t_S` with `f(t_S + τ) = M f(t_S - τ)` for the parity map `M`.
///
/// Grid points are scanned, local minima of the residual are refined by
/// golden-section search, and the accepted center is the one with the widest
/// window among those whose residual is within `tol` (smallest residual
/// breaks ties). Periodic paths have several centers; preferring the widest
/// window makes the answer commute with time reversal.
pub fn find_time_symmetry(
    trajectory: &Trajectory,
    tol: f64,
    parity: &[Parity],
) -> Result<Option<SymmetryCenter>> {
    let n = trajectory.len();
    if n < 2 * MIN_WINDOW_SAMPLES + 1 {
        return Err(Error::WindowTooShort {
            needed: MIN_WINDOW_SAMPLES,
            available: n.saturating_sub(1) / 2,
        });
    }
    let lo = MIN_WINDOW_SAMPLES;
    let hi = n - 1 - MIN_WINDOW_SAMPLES;
    let stride = ((hi - lo) / 4000).max(1);
    let idx: Vec<usize> = (lo..=hi).step_by(stride).collect();
    let res: Vec<f64> = idx
        .iter()
        .map(|&i| {
            reflection_residual(trajectory, trajectory.time(i), parity).unwrap_or(f64::INFINITY)
        })
        .collect();
    let mut best: Option<SymmetryCenter> = None;
    for k in 0..idx.len() {
        let left = if k > 0 { res[k - 1] } else { f64::INFINITY };
        let right = if k + 1 < res.len() {
            res[k + 1]
        } else {
            f64::INFINITY
        };
        if !(res[k] <= left && res[k] <= right) || !res[k].is_finite() {
            continue;
        }
        let a = trajectory.time(idx[k].saturating_sub(stride).max(lo));
        let b = trajectory.time((idx[k] + stride).min(hi));
        let (t, r) = match refine_center(trajectory, parity, a, b) {
            Some((t, r)) if r <= res[k] => (t, r),
            _ => (trajectory.time(idx[k]), res[k]),
        };
        if r > tol {
            continue;
        }
        let window = (t - trajectory.time(0)).min(trajectory.time(n - 1) - t);
        let better = match best {
            None => true,
            Some(b) => {
                window > b.window * (1.0 + 1e-9)
                    || (window >= b.window * (1.0 - 1e-9) && r < b.residual)
            }
        };
        if better {
            best = Some(SymmetryCenter {
                t_s: t,
                residual: r,
                window,
            });
        }
    }
    Ok(best)
}

/// The four reference systems of the taxonomy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum CatalogSystem {
    /// Harmonic oscillator: invariant and reversible.
    A,
    /// Pendulum: invariant, reversibility depends on the trajectory.
    B,
    /// Modified oscillator with K⁺ ≠ K⁻: not invariant yet reversible.
    C,
    /// Damped oscillator: neither.
    D,
}

impl CatalogSystem {
    pub const ALL: [CatalogSystem; 4] = [Self::A, Self::B, Self::C, Self::D];

    pub fn label(&self) -> &'static str {
        match self {
            Self::A => "a",
            Self::B => "b",
            Self::C => "c",
            Self::D => "d",
        }
    }

    pub fn description(&self) -> &'static str {
        match self {
            Self::A => "harmonic oscillator",
            Self::B => "pendulum",
            Self::C => "modified oscillator",
            Self::D => "damped oscillator",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CatalogVerdict {
    Reversible,
    Irreversible,
    /// Different trajectories of the same system disagree.
    Mixed,
    Undetermined,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryVerdict {
    pub label: &'static str,
    pub reversibility: Reversibility,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    pub tri: f64,
    pub tri_samples: usize,
    pub close: f64,
    pub horizon: f64,
    pub symmetry: f64,
    pub step: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            tri: 1e-12,
            tri_samples: 64,
            close: 1e-3,
            horizon: 40.0,
            symmetry: 1e-6,
            step: 1e-3,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassificationReport {
    pub system: CatalogSystem,
    pub tri: bool,
    pub verdict: CatalogVerdict,
    pub trajectories: Vec<TrajectoryVerdict>,
    /// Symmetry center of the representative trajectory started at a turning
    /// point, when one exists.
    pub time_symmetric: Option<f64>,
    pub tolerances: Tolerances,
}

fn summarize(verdicts: &[TrajectoryVerdict]) -> CatalogVerdict {
    let rev = verdicts
        .iter()
        .filter(|v| v.reversibility.is_reversible())
        .count();
    let irr = verdicts
        .iter()
        .filter(|v| v.reversibility.is_irreversible())
        .count();
    match (rev, irr) {
        (r, 0) if r == verdicts.len() && r > 0 => CatalogVerdict::Reversible,
        (0, i) if i == verdicts.len() && i > 0 => CatalogVerdict::Irreversible,
        (r, i) if r > 0 && i > 0 => CatalogVerdict::Mixed,
        _ => CatalogVerdict::Undetermined,
    }
}

fn start(q: f64, p: f64) -> PhaseState {
    PhaseState {
        q: vec![q],
        p: vec![p],
        t: 0.0,
    }
}

fn verdict_for<S: DynamicalSystem>(
    system: &S,
    label: &'static str,
    s0: PhaseState,
    opts: ReversibilityOptions,
    tol: &Tolerances,
) -> Result<TrajectoryVerdict> {
    let tr = integrate(system, &s0, opts.t_horizon, tol.step)?;
    Ok(TrajectoryVerdict {
        label,
        reversibility: check_reversibility(&tr, &opts),
    })
}

fn symmetry_of<S: DynamicalSystem>(
    system: &S,
    s0: PhaseState,
    tol: &Tolerances,
) -> Result<Option<f64>> {
    let tr = integrate_two_sided(system, &s0, 3.0, 3.0, tol.step)?;
    Ok(find_time_symmetry(&tr, tol.symmetry, &default_parity(2))?.map(|c| c.t_s))
}

/// Classifies one catalog system with the given tolerances.
pub fn classify_system(system: CatalogSystem, tol: &Tolerances) -> Result<ClassificationReport> {
    let opts = ReversibilityOptions::new(tol.close, tol.horizon);
    let (tri, trajectories, time_symmetric) = match system {
        CatalogSystem::A => {
            let sys = HarmonicOscillator { k: 1.0 };
            (
                check_time_reversal_invariance(&sys, tol.tri_samples, 1, tol.tri),
                vec![verdict_for(&sys, "q=1,p=0", start(1.0, 0.0), opts, tol)?],
                symmetry_of(&sys, start(1.0, 0.0), tol)?,
            )
        }
        CatalogSystem::B => {
            let sys = Pendulum { k: 1.0 };
            let es = sys.separatrix_energy();
            let opts = opts.with_angle(0);
            let inside = start(PI, sys.momentum_at_bottom(0.9 * es));
            let above = start(PI, sys.momentum_at_bottom(1.1 * es));
            let on = start(PI, sys.momentum_at_bottom(es));
            let turning = (0.9f64).acos();
            (
                check_time_reversal_invariance(&sys, tol.tri_samples, 1, tol.tri),
                vec![
                    verdict_for(&sys, "inside separatrix", inside, opts, tol)?,
                    verdict_for(&sys, "above separatrix", above, opts, tol)?,
                    verdict_for(&sys, "on separatrix", on, opts, tol)?,
                ],
                symmetry_of(&sys, start(2.0 * PI - turning, 0.0), tol)?,
            )
        }
        CatalogSystem::C => {
            let sys = ModifiedOscillator {
                k_plus: 1.0,
                k_minus: 2.0,
            };
            (
                check_time_reversal_invariance(&sys, tol.tri_samples, 1, tol.tri),
                vec![verdict_for(&sys, "q=1,p=0", start(1.0, 0.0), opts, tol)?],
                symmetry_of(&sys, start(1.0, 0.0), tol)?,
            )
        }
        CatalogSystem::D => {
            let sys = DampedOscillator { k: 1.0, a: 1.0 };
            (
                check_time_reversal_invariance(&sys, tol.tri_samples, 1, tol.tri),
                vec![verdict_for(&sys, "q=1,p=0", start(1.0, 0.0), opts, tol)?],
                symmetry_of(&sys, start(1.0, 0.0), tol)?,
            )
        }
    };
    Ok(ClassificationReport {
        system,
        tri,
        verdict: summarize(&trajectories),
        trajectories,
        time_symmetric,
        tolerances: *tol,
    })
}

/// Classifies all four systems in catalog order.
pub fn classify_catalog() -> Result<Vec<ClassificationReport>> {
    let tol = Tolerances::default();
    CatalogSystem::ALL
        .iter()
        .map(|&s| classify_system(s, &tol))
        .collect()
}
