//! Friedmann–Robertson–Walker universes with a minimally coupled scalar field.
//!
//! Constraint: `ȧ² = κ(½φ̇² + V(φ))a² + (Λ/3)a² − k`.
//! Evolution: `ä = a[−κ(φ̇² − V) + Λ/3]`, `φ̈ = −3(ȧ/a)φ̇ − V′(φ)`.
//!
//! As a [`DynamicalSystem`] the state is `[a, φ, ȧ, φ̇]`, so the default
//! reversal (negate the second half) is `(a, φ, ȧ, φ̇) → (a, φ, −ȧ, −φ̇)`.

use alloc::vec;
use alloc::vec::Vec;
use num_traits::Float;

use crate::error::{Error, Result};
use crate::quadrature::Grid;
use crate::rng;
use crate::symmetry::{refine_center, reflection_residual, Parity, MIN_WINDOW_SAMPLES};
use crate::trajectory::{DynamicalSystem, IntegratorId, Trajectory};

/// Scalar-field potential with its first two derivatives.
#[derive(Debug, Clone, Copy)]
pub enum Potential {
    /// `½m²φ²`.
    Quadratic { mass: f64 },
    /// `V ≡ v`; negative values model a negative cosmological constant.
    Constant(f64),
    /// `½m²φ² + v`.
    QuadraticPlusConstant { mass: f64, constant: f64 },
    Custom {
        v: fn(f64) -> f64,
        dv: fn(f64) -> f64,
        d2v: fn(f64) -> f64,
    },
}

impl Potential {
    pub fn value(&self, phi: f64) -> f64 {
        match *self {
            Potential::Quadratic { mass } => 0.5 * mass * mass * phi * phi,
            Potential::Constant(v) => v,
            Potential::QuadraticPlusConstant { mass, constant } => {
                0.5 * mass * mass * phi * phi + constant
            }
            Potential::Custom { v, .. } => v(phi),
        }
    }

    pub fn derivative(&self, phi: f64) -> f64 {
        match *self {
            Potential::Quadratic { mass } | Potential::QuadraticPlusConstant { mass, .. } => {
                mass * mass * phi
            }
            Potential::Constant(_) => 0.0,
            Potential::Custom { dv, .. } => dv(phi),
        }
    }

    pub fn second_derivative(&self, phi: f64) -> f64 {
        match *self {
            Potential::Quadratic { mass } | Potential::QuadraticPlusConstant { mass, .. } => {
                mass * mass
            }
            Potential::Constant(_) => 0.0,
            Potential::Custom { d2v, .. } => d2v(phi),
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct FRWModel {
    /// Spatial curvature, normally −1, 0 or +1.
    pub k: f64,
    /// `8πG/3`.
    pub kappa: f64,
    pub lambda: f64,
    pub potential: Potential,
}

impl FRWModel {
    pub fn new(k: f64, kappa: f64, lambda: f64, potential: Potential) -> Result<Self> {
        if !(kappa > 0.0) || !k.is_finite() || !lambda.is_finite() {
            return Err(Error::InvalidArgument(
                "kappa must be positive, k and lambda finite".into(),
            ));
        }
        if !potential.value(0.0).is_finite() {
            return Err(Error::InvalidArgument(
                "potential must be finite at zero".into(),
            ));
        }
        Ok(FRWModel {
            k,
            kappa,
            lambda,
            potential,
        })
    }

    /// `κ = 1`, `Λ = 0`, `V = ½m²φ²`.
    pub fn with_mass(k: f64, mass: f64) -> Self {
        FRWModel {
            k,
            kappa: 1.0,
            lambda: 0.0,
            potential: Potential::Quadratic { mass },
        }
    }

    pub fn energy_density(&self, phi: f64, phi_dot: f64) -> f64 {
        0.5 * phi_dot * phi_dot + self.potential.value(phi)
    }

    pub fn pressure(&self, phi: f64, phi_dot: f64) -> f64 {
        0.5 * phi_dot * phi_dot - self.potential.value(phi)
    }

    /// `ä` at the given state.
    pub fn acceleration(&self, a: f64, phi: f64, phi_dot: f64) -> f64 {
        a * (-self.kappa * (phi_dot * phi_dot - self.potential.value(phi)) + self.lambda / 3.0)
    }
}

impl DynamicalSystem for FRWModel {
    fn dim(&self) -> usize {
        4
    }

    fn vector_field(&self, _t: f64, x: &[f64], dx: &mut [f64]) {
        let (a, phi, a_dot, phi_dot) = (x[0], x[1], x[2], x[3]);
        dx[0] = a_dot;
        dx[1] = phi_dot;
        dx[2] = self.acceleration(a, phi, phi_dot);
        dx[3] = -3.0 * (a_dot / a) * phi_dot - self.potential.derivative(phi);
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CosmoState {
    pub a: f64,
    pub a_dot: f64,
    pub phi: f64,
    pub phi_dot: f64,
    pub t: f64,
}

impl CosmoState {
    /// `[a, φ, ȧ, φ̇]`.
    pub fn to_flat(&self) -> [f64; 4] {
        [self.a, self.phi, self.a_dot, self.phi_dot]
    }

    pub fn from_flat(x: &[f64], t: f64) -> Self {
        CosmoState {
            a: x[0],
            phi: x[1],
            a_dot: x[2],
            phi_dot: x[3],
            t,
        }
    }

    /// State on the constraint surface with `a` solved from `(ȧ, φ, φ̇)`.
    pub fn on_constraint(a_dot: f64, phi: f64, phi_dot: f64, model: &FRWModel) -> Result<Self> {
        let root = solve_constraint_for_a(a_dot, phi, phi_dot, model)?;
        Ok(CosmoState {
            a: root.a,
            a_dot,
            phi,
            phi_dot,
            t: 0.0,
        })
    }

    /// `(a, φ, ȧ, φ̇) → (a, φ, −ȧ, −φ̇)`.
    pub fn reversed(&self) -> Self {
        CosmoState {
            a_dot: -self.a_dot,
            phi_dot: -self.phi_dot,
            ..*self
        }
    }
}

/// `ȧ² − κρa² − (Λ/3)a² + k`, which vanishes on solutions.
pub fn constraint_value(state: &CosmoState, model: &FRWModel) -> f64 {
    let rho = model.energy_density(state.phi, state.phi_dot);
    let a2 = state.a * state.a;
    state.a_dot * state.a_dot - model.kappa * rho * a2 - model.lambda / 3.0 * a2 + model.k
}

/// [`constraint_value`] scaled by `max(ȧ², |k|, κ|ρ|a², |Λ|a²/3)`.
pub fn constraint_residual(state: &CosmoState, model: &FRWModel) -> Result<f64> {
    if !(state.a > 0.0) {
        return Err(Error::SingularState);
    }
    let rho = model.energy_density(state.phi, state.phi_dot);
    let a2 = state.a * state.a;
    let scale = (state.a_dot * state.a_dot)
        .max(model.k.abs())
        .max(model.kappa * rho.abs() * a2)
        .max(model.lambda.abs() * a2 / 3.0);
    let v = constraint_value(state, model);
    Ok(if scale > 0.0 {
        v.abs() / scale
    } else {
        v.abs()
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstraintRoot {
    pub a: f64,
    /// Multiplicity as a root in `a²`.
    pub multiplicity: u32,
}

/// Solves the constraint for `a > 0`. With the concrete constraint above it
/// is linear in `a²`: `a² = (ȧ² + k)/(κρ + Λ/3)`, so the positive root is
/// unique and simple.
pub fn solve_constraint_for_a(
    a_dot: f64,
    phi: f64,
    phi_dot: f64,
    model: &FRWModel,
) -> Result<ConstraintRoot> {
    let denom = model.kappa * model.energy_density(phi, phi_dot) + model.lambda / 3.0;
    let num = a_dot * a_dot + model.k;
    if denom == 0.0 {
        return Err(Error::NoPhysicalRoot);
    }
    let a2 = num / denom;
    if !(a2 > 0.0) || !a2.is_finite() {
        return Err(Error::NoPhysicalRoot);
    }
    Ok(ConstraintRoot {
        a: a2.sqrt(),
        multiplicity: 1,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CosmoEnd {
    Completed,
    /// Integration stopped at a collapse of the scale factor.
    Singular {
        t: f64,
        a: f64,
    },
    /// A caller-supplied stop condition fired at `t`.
    Stopped {
        t: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CosmoOptions {
    /// Substeps per step are `ceil(rate · h / substep_scale)`.
    pub substep_scale: f64,
    /// More substeps than this counts as reaching the singularity.
    pub max_substeps: usize,
    /// Stop once `a < collapse_ratio · max a`.
    pub collapse_ratio: f64,
    /// Relative constraint residual that aborts the run.
    pub drift_limit: f64,
    /// Required residual of the initial state.
    pub initial_limit: f64,
}

impl Default for CosmoOptions {
    fn default() -> Self {
        CosmoOptions {
            substep_scale: 0.005,
            max_substeps: 4096,
            collapse_ratio: 1e-6,
            drift_limit: 1e-5,
            initial_limit: 1e-8,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CosmoRun {
    /// Samples of `[a, φ, ȧ, φ̇]`.
    pub trajectory: Trajectory,
    pub residuals: Vec<f64>,
    pub max_residual: f64,
    pub past: CosmoEnd,
    pub future: CosmoEnd,
}

impl CosmoRun {
    pub fn state(&self, i: usize) -> CosmoState {
        CosmoState::from_flat(self.trajectory.state(i), self.trajectory.time(i))
    }
}

fn local_rate(model: &FRWModel, x: &[f64]) -> f64 {
    let (a, phi, a_dot, phi_dot) = (x[0], x[1], x[2], x[3]);
    let h = (a_dot / a).abs();
    let acc = (model.acceleration(a, phi, phi_dot) / a).abs().sqrt();
    let field = model.potential.second_derivative(phi).abs().sqrt();
    h + acc + field + model.kappa.sqrt() * phi_dot.abs()
}

fn rk4(model: &FRWModel, x: &mut [f64; 4], h: f64) {
    let f = |y: &[f64; 4]| {
        let mut d = [0.0; 4];
        model.vector_field(0.0, y, &mut d);
        d
    };
    let add = |y: &[f64; 4], k: &[f64; 4], s: f64| {
        let mut r = *y;
        for i in 0..4 {
            r[i] += s * k[i];
        }
        r
    };
    let k1 = f(x);
    let k2 = f(&add(x, &k1, 0.5 * h));
    let k3 = f(&add(x, &k2, 0.5 * h));
    let k4 = f(&add(x, &k3, h));
    for i in 0..4 {
        x[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
}

struct ForwardRun {
    times: Vec<f64>,
    data: Vec<f64>,
    residuals: Vec<f64>,
    end: CosmoEnd,
}

/// Integrates forward in time by `span`, recording at the uniform step.
fn run_forward(
    state: &CosmoState,
    model: &FRWModel,
    span: f64,
    step: f64,
    opts: &CosmoOptions,
    stop: &mut dyn FnMut(&[f64; 4]) -> bool,
) -> Result<ForwardRun> {
    let n = ((span / step) - 1e-9).ceil().max(1.0) as usize;
    let h = span / n as f64;
    let mut x = state.to_flat();
    let mut out = ForwardRun {
        times: vec![0.0],
        data: x.to_vec(),
        residuals: vec![constraint_residual(state, model)?],
        end: CosmoEnd::Completed,
    };
    let mut a_max = x[0];
    for i in 1..=n {
        let t_prev = (i - 1) as f64 * h;
        // the substep count must cover the fastest rate seen across the step
        let mut rate = local_rate(model, &x);
        let mut y;
        loop {
            let subs = (rate * h / opts.substep_scale).ceil().max(1.0);
            if !(subs <= opts.max_substeps as f64) {
                y = [f64::NAN; 4];
                break;
            }
            let subs = subs as usize;
            let hs = h / subs as f64;
            y = x;
            let mut peak = rate;
            for _ in 0..subs {
                rk4(model, &mut y, hs);
                if !(y[0] > 0.0) || y.iter().any(|v| !v.is_finite()) {
                    break;
                }
                peak = peak.max(local_rate(model, &y));
            }
            if !(peak.is_finite() && y[0] > 0.0) || peak <= 2.0 * rate {
                break;
            }
            rate = peak;
        }
        if !(y[0] > opts.collapse_ratio * a_max) || y.iter().any(|v| !v.is_finite()) {
            out.end = CosmoEnd::Singular { t: t_prev, a: x[0] };
            break;
        }
        x = y;
        a_max = a_max.max(x[0]);
        let t = i as f64 * h;
        let r = constraint_residual(&CosmoState::from_flat(&x, t), model)?;
        if r > opts.drift_limit {
            return Err(Error::ConstraintDrift {
                t: state.t + t,
                residual: r,
            });
        }
        out.times.push(t);
        out.data.extend_from_slice(&x);
        out.residuals.push(r);
        if stop(&x) {
            out.end = CosmoEnd::Stopped { t };
            break;
        }
    }
    Ok(out)
}

/// Evolves from `state` to `t_end` (which may precede `state.t`).
pub fn evolve_cosmo(
    state: &CosmoState,
    model: &FRWModel,
    t_end: f64,
    step: f64,
) -> Result<CosmoRun> {
    evolve_cosmo_with(state, model, t_end, step, &CosmoOptions::default())
}

pub fn evolve_cosmo_with(
    state: &CosmoState,
    model: &FRWModel,
    t_end: f64,
    step: f64,
    opts: &CosmoOptions,
) -> Result<CosmoRun> {
    if t_end >= state.t {
        evolve_cosmo_two_sided_with(state, model, 0.0, t_end - state.t, step, opts)
    } else {
        evolve_cosmo_two_sided_with(state, model, state.t - t_end, 0.0, step, opts)
    }
}

/// Evolves backward by `t_back` and forward by `t_fwd`. The backward half is
/// the reversal of a forward run from the reversed state, so runs from
/// reversal-invariant data are mirror images bit for bit.
pub fn evolve_cosmo_two_sided(
    state: &CosmoState,
    model: &FRWModel,
    t_back: f64,
    t_fwd: f64,
    step: f64,
) -> Result<CosmoRun> {
    evolve_cosmo_two_sided_with(state, model, t_back, t_fwd, step, &CosmoOptions::default())
}

pub fn evolve_cosmo_two_sided_with(
    state: &CosmoState,
    model: &FRWModel,
    t_back: f64,
    t_fwd: f64,
    step: f64,
    opts: &CosmoOptions,
) -> Result<CosmoRun> {
    if !(step > 0.0) || !(t_back >= 0.0) || !(t_fwd >= 0.0) || !(t_back + t_fwd > 0.0) {
        return Err(Error::InvalidArgument(
            "step and spans must be positive".into(),
        ));
    }
    let r0 = constraint_residual(state, model)?;
    if r0 > opts.initial_limit {
        return Err(Error::ConstraintDrift {
            t: state.t,
            residual: r0,
        });
    }
    let mut times = Vec::new();
    let mut data = Vec::new();
    let mut residuals = Vec::new();
    let mut past = CosmoEnd::Completed;
    let mut future = CosmoEnd::Completed;
    if t_back > 0.0 {
        let b = run_forward(&state.reversed(), model, t_back, step, opts, &mut |_| false)?;
        for i in (0..b.times.len()).rev() {
            times.push(state.t - b.times[i]);
            let x = &b.data[4 * i..4 * i + 4];
            data.extend_from_slice(&[x[0], x[1], -x[2], -x[3]]);
            residuals.push(b.residuals[i]);
        }
        if let CosmoEnd::Singular { t, a } = b.end {
            past = CosmoEnd::Singular { t: state.t - t, a };
        }
    }
    if t_fwd > 0.0 {
        let f = run_forward(state, model, t_fwd, step, opts, &mut |_| false)?;
        let skip = usize::from(!times.is_empty());
        for i in skip..f.times.len() {
            times.push(state.t + f.times[i]);
            data.extend_from_slice(&f.data[4 * i..4 * i + 4]);
            residuals.push(f.residuals[i]);
        }
        if let CosmoEnd::Singular { t, a } = f.end {
            future = CosmoEnd::Singular { t: state.t + t, a };
        }
    }
    if times.len() < 2 {
        return Err(Error::SingularState);
    }
    let max_residual = residuals.iter().fold(0.0f64, |m, &r| m.max(r));
    Ok(CosmoRun {
        trajectory: Trajectory::from_parts(times, data, 4, step, IntegratorId::Rk4Substepped)?,
        residuals,
        max_residual,
        past,
        future,
    })
}

/// Forward run of at most `span` that ends early once `stop` returns true
/// for a recorded sample `[a, φ, ȧ, φ̇]`.
pub fn evolve_cosmo_until(
    state: &CosmoState,
    model: &FRWModel,
    span: f64,
    step: f64,
    opts: &CosmoOptions,
    mut stop: impl FnMut(&[f64; 4]) -> bool,
) -> Result<CosmoRun> {
    if !(step > 0.0) || !(span > 0.0) {
        return Err(Error::InvalidArgument(
            "step and span must be positive".into(),
        ));
    }
    let r0 = constraint_residual(state, model)?;
    if r0 > opts.initial_limit {
        return Err(Error::ConstraintDrift {
            t: state.t,
            residual: r0,
        });
    }
    let f = run_forward(state, model, span, step, opts, &mut stop)?;
    if f.times.len() < 2 {
        return Err(Error::SingularState);
    }
    let future = match f.end {
        CosmoEnd::Singular { t, a } => CosmoEnd::Singular { t: state.t + t, a },
        CosmoEnd::Stopped { t } => CosmoEnd::Stopped { t: state.t + t },
        CosmoEnd::Completed => CosmoEnd::Completed,
    };
    let max_residual = f.residuals.iter().fold(0.0f64, |m, &r| m.max(r));
    let times = f.times.iter().map(|t| state.t + t).collect();
    Ok(CosmoRun {
        trajectory: Trajectory::from_parts(times, f.data, 4, step, IntegratorId::Rk4Substepped)?,
        residuals: f.residuals,
        max_residual,
        past: CosmoEnd::Completed,
        future,
    })
}

/// Reflection parity of a cosmological symmetry center.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AxisParity {
    /// Through `(ȧ, φ, φ̇) = (0, φ, 0)`: `φ(t_S + t) = φ(t_S − t)`.
    Even,
    /// Through `(0, 0, φ̇)`: `φ(t_S + t) = −φ(t_S − t)`.
    Odd,
}

impl AxisParity {
    /// Parity map on `[a, φ, ȧ, φ̇]`.
    pub fn map(&self) -> [Parity; 4] {
        match self {
            AxisParity::Even => [Parity::Even, Parity::Even, Parity::Odd, Parity::Odd],
            AxisParity::Odd => [Parity::Even, Parity::Odd, Parity::Odd, Parity::Even],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CosmoSymmetry {
    pub t_s: f64,
    pub parity: AxisParity,
    pub residual: f64,
}

/// Locates zeros of `ȧ`, tries both parity maps at each and accepts the
/// best reflection residual within `tol`.
pub fn detect_cosmo_symmetry(trajectory: &Trajectory, tol: f64) -> Option<CosmoSymmetry> {
    let n = trajectory.len();
    if n < 2 * MIN_WINDOW_SAMPLES + 1 {
        return None;
    }
    let h = (trajectory.time(n - 1) - trajectory.time(0)) / (n - 1) as f64;
    let mut roots = Vec::new();
    for i in 0..n - 1 {
        let (u, v) = (trajectory.state(i)[2], trajectory.state(i + 1)[2]);
        if u == 0.0 {
            roots.push(trajectory.time(i));
        } else if u * v < 0.0 {
            let (t0, t1) = (trajectory.time(i), trajectory.time(i + 1));
            roots.push(t0 + (t1 - t0) * u / (u - v));
        }
    }
    let mut best: Option<CosmoSymmetry> = None;
    for t in roots {
        for parity in [AxisParity::Even, AxisParity::Odd] {
            let map = parity.map();
            let Some(r0) = reflection_residual(trajectory, t, &map) else {
                continue;
            };
            let (ts, r) = match refine_center(trajectory, &map, t - 2.0 * h, t + 2.0 * h) {
                Some((ts, r)) if r < r0 => (ts, r),
                _ => (t, r0),
            };
            if r <= tol && best.is_none_or(|b| r < b.residual) {
                best = Some(CosmoSymmetry {
                    t_s: ts,
                    parity,
                    residual: r,
                });
            }
        }
    }
    best
}

#[derive(Debug, Clone, PartialEq)]
pub struct LyapunovReport {
    /// `L(t) = −ȧ(t)`.
    pub values: Vec<f64>,
    /// `L` never decreases between consecutive samples where `ä <= 0`.
    pub monotone: bool,
    /// Whether `ä <= 0` at every sample.
    pub premise_holds: bool,
    /// Maximal time intervals with `ä > 0`.
    pub accelerating_epochs: Vec<(f64, f64)>,
    /// Times where `L` changes sign.
    pub zero_crossings: Vec<f64>,
}

pub fn lyapunov_variable(trajectory: &Trajectory, model: &FRWModel) -> LyapunovReport {
    let n = trajectory.len();
    let values: Vec<f64> = (0..n).map(|i| -trajectory.state(i)[2]).collect();
    let acc: Vec<f64> = (0..n)
        .map(|i| {
            let x = trajectory.state(i);
            model.acceleration(x[0], x[1], x[3])
        })
        .collect();
    let scale = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut monotone = true;
    for i in 0..n.saturating_sub(1) {
        if acc[i] <= 0.0 && acc[i + 1] <= 0.0 && values[i + 1] < values[i] - 1e-12 * scale {
            monotone = false;
        }
    }
    let mut accelerating_epochs = Vec::new();
    let mut start: Option<f64> = None;
    for (i, &ai) in acc.iter().enumerate().take(n) {
        match (ai > 0.0, start) {
            (true, None) => start = Some(trajectory.time(i)),
            (false, Some(s)) => {
                accelerating_epochs.push((s, trajectory.time(i - 1)));
                start = None;
            }
            _ => {}
        }
    }
    if let Some(s) = start {
        accelerating_epochs.push((s, trajectory.time(n - 1)));
    }
    let mut zero_crossings = Vec::new();
    for i in 0..n.saturating_sub(1) {
        let (u, v) = (values[i], values[i + 1]);
        if u == 0.0 {
            zero_crossings.push(trajectory.time(i));
        } else if u * v < 0.0 {
            let (t0, t1) = (trajectory.time(i), trajectory.time(i + 1));
            zero_crossings.push(t0 + (t1 - t0) * u / (u - v));
        }
    }
    LyapunovReport {
        values,
        monotone,
        premise_holds: accelerating_epochs.is_empty(),
        accelerating_epochs,
        zero_crossings,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyConditionReport {
    pub holds: bool,
    pub rho: f64,
    pub pressure: f64,
    pub s0: f64,
    pub s: [f64; 3],
    /// `ρ − |P|`.
    pub margin: f64,
}

/// Dominant energy condition for the homogeneous field: `ρ >= |P|`.
pub fn dominant_energy_check(state: &CosmoState, model: &FRWModel) -> EnergyConditionReport {
    let rho = model.energy_density(state.phi, state.phi_dot);
    let p = model.pressure(state.phi, state.phi_dot);
    let margin = rho - p.abs();
    EnergyConditionReport {
        holds: margin >= 0.0,
        rho,
        pressure: p,
        s0: rho,
        s: [p; 3],
        margin,
    }
}

/// Type-I decomposition obtained by diagonalising `T^μ_ν` as seen by an
/// observer boosted along x with the given rapidity. `s0` belongs to the
/// timelike eigenvector.
pub fn type_i_eigenvalues(state: &CosmoState, model: &FRWModel, rapidity: f64) -> (f64, [f64; 3]) {
    let rho = model.energy_density(state.phi, state.phi_dot);
    let p = model.pressure(state.phi, state.phi_dot);
    let (ch, sh) = (rapidity.cosh(), rapidity.sinh());
    // L diag(−ρ, P) L⁻¹ with L = [[ch, sh], [sh, ch]]
    let m00 = -rho * ch * ch - p * sh * sh;
    let m01 = (rho + p) * ch * sh;
    let m10 = -(rho + p) * ch * sh;
    let m11 = rho * sh * sh + p * ch * ch;
    let tr = m00 + m11;
    let det = m00 * m11 - m01 * m10;
    let disc = (0.25 * tr * tr - det).max(0.0).sqrt();
    let (l1, l2) = (0.5 * tr - disc, 0.5 * tr + disc);
    let timelike = |l: f64| {
        let (v0, v1) = if m01.abs() + (l - m00).abs() > 0.0 {
            (m01, l - m00)
        } else {
            (l - m11, m10)
        };
        v0 * v0 > v1 * v1
    };
    let scale = rho.abs().max(p.abs()).max(f64::MIN_POSITIVE);
    let (lt, ls) = if disc <= 1e-12 * scale * ch * ch {
        (0.5 * tr, 0.5 * tr)
    } else if timelike(l1) {
        (l1, l2)
    } else {
        (l2, l1)
    };
    (-lt, [ls, p, p])
}

/// The same condition evaluated on a Type-I decomposition.
pub fn dec_from_type_i(s0: f64, s: &[f64; 3], tol: f64) -> bool {
    s0 >= -tol && s.iter().all(|si| si.abs() <= s0 + tol)
}

/// Adaptive Dormand–Prince 5(4) integration of the FRW field from `x` at
/// time 0, returning the state at each of the increasing `times`. Used close
/// to the singularity, where fixed steps are impractical.
pub fn evolve_adaptive(
    model: &FRWModel,
    x: [f64; 4],
    times: &[f64],
    rtol: f64,
) -> Result<Vec<[f64; 4]>> {
    const A: [[f64; 6]; 7] = [
        [0.0; 6],
        [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
        [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
        [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
        [
            19372.0 / 6561.0,
            -25360.0 / 2187.0,
            64448.0 / 6561.0,
            -212.0 / 729.0,
            0.0,
            0.0,
        ],
        [
            9017.0 / 3168.0,
            -355.0 / 33.0,
            46732.0 / 5247.0,
            49.0 / 176.0,
            -5103.0 / 18656.0,
            0.0,
        ],
        [
            35.0 / 384.0,
            0.0,
            500.0 / 1113.0,
            125.0 / 192.0,
            -2187.0 / 6784.0,
            11.0 / 84.0,
        ],
    ];
    const E: [f64; 7] = [
        71.0 / 57600.0,
        0.0,
        -71.0 / 16695.0,
        71.0 / 1920.0,
        -17253.0 / 339200.0,
        22.0 / 525.0,
        -1.0 / 40.0,
    ];
    let f = |y: &[f64; 4]| {
        let mut d = [0.0; 4];
        model.vector_field(0.0, y, &mut d);
        d
    };
    let mut out = Vec::with_capacity(times.len());
    let mut y = x;
    let mut t = 0.0;
    let mut h = 1e-3 / local_rate(model, &y).max(1e-300);
    for &target in times {
        if target < t {
            return Err(Error::InvalidArgument("output times must increase".into()));
        }
        let mut guard = 0usize;
        while t < target {
            guard += 1;
            if guard > 10_000_000 || !(h > 0.0) {
                return Err(Error::SingularState);
            }
            let hh = h.min(target - t);
            let mut k = [[0.0; 4]; 7];
            k[0] = f(&y);
            for s in 1..7 {
                let mut ys = y;
                for (j, kj) in k.iter().enumerate().take(s) {
                    for i in 0..4 {
                        ys[i] += hh * A[s][j] * kj[i];
                    }
                }
                k[s] = f(&ys);
            }
            let mut yn = y;
            let mut err: f64 = 0.0;
            for i in 0..4 {
                let mut inc = 0.0;
                let mut e = 0.0;
                for s in 0..7 {
                    if s < 6 {
                        inc += A[6][s] * k[s][i];
                    }
                    e += E[s] * k[s][i];
                }
                yn[i] += hh * inc;
                let sc = rtol * (y[i].abs().max(yn[i].abs()) + 1e-300);
                err = err.max((hh * e).abs() / sc);
            }
            if !err.is_finite() || yn.iter().any(|v| !v.is_finite()) || !(yn[0] > 0.0) {
                h = 0.25 * hh;
                continue;
            }
            if err <= 1.0 {
                t += hh;
                y = yn;
            }
            let fac = if err > 0.0 { 0.9 * err.powf(-0.2) } else { 5.0 };
            h = hh * fac.clamp(0.2, 5.0);
        }
        out.push(y);
    }
    Ok(out)
}

/// Scale-free coordinates `(ln a, φ, asinh ȧ, asinh φ̇)` in which
/// separations near the singularity are measured.
pub fn log_embedding(x: &[f64; 4]) -> [f64; 4] {
    [x[0].ln(), x[1], x[2].asinh(), x[3].asinh()]
}

fn embedded_distance(x: &[f64; 4], y: &[f64; 4]) -> f64 {
    let (u, v) = (log_embedding(x), log_embedding(y));
    (0..4)
        .map(|i| (u[i] - v[i]) * (u[i] - v[i]))
        .sum::<f64>()
        .sqrt()
}

/// Finite-time divergence exponent `ln(d(T)/d(0))/T` of two solutions in
/// the [`log_embedding`] metric. Coincident starts give 0.
pub fn divergence_exponent(
    model: &FRWModel,
    x: [f64; 4],
    y: [f64; 4],
    window: f64,
    rtol: f64,
) -> Result<f64> {
    let d0 = embedded_distance(&x, &y);
    if d0 == 0.0 {
        return Ok(0.0);
    }
    let xe = evolve_adaptive(model, x, &[window], rtol)?;
    let ye = evolve_adaptive(model, y, &[window], rtol)?;
    Ok((embedded_distance(&xe[0], &ye[0]) / d0).ln() / window)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InstabilityConfig {
    pub n_samples: usize,
    pub seed: u64,
    /// Starting scale factor and relative perturbation size.
    pub delta: f64,
    /// Window `T` of the finite-time exponent.
    pub window: f64,
    /// `φ` is drawn from `[-phi_range, phi_range]`.
    pub phi_range: f64,
    /// `φ̇ a³` is drawn from `±[lo, hi]`.
    pub kinetic_range: (f64, f64),
    pub rtol: f64,
}

impl InstabilityConfig {
    pub fn new(n_samples: usize, seed: u64, delta: f64) -> Self {
        InstabilityConfig {
            n_samples,
            seed,
            delta,
            window: 4.0,
            phi_range: 1.0,
            kinetic_range: (0.5, 2.0),
            rtol: 1e-11,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InstabilitySample {
    pub state: [f64; 4],
    /// Exponent for perturbations of `ȧ`, `φ` and `φ̇` (with `a` re-solved).
    pub directions: [f64; 3],
    /// The largest of `directions`.
    pub exponent: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InstabilityReport {
    pub samples: Vec<InstabilitySample>,
    pub fraction_positive: f64,
    pub mean_exponent: f64,
    pub std_exponent: f64,
}

/// Draws sample `index` near the singular surface (`a = δ`, on the
/// constraint, expanding) and measures its leading divergence exponent.
/// The sample depends only on `(seed, index)`.
pub fn instability_sample(
    model: &FRWModel,
    cfg: &InstabilityConfig,
    index: u64,
) -> Result<InstabilitySample> {
    use rand::Rng;
    let mut rng = rng::rng_from(rng::derive_indexed(
        rng::derive(cfg.seed, "big-bang"),
        index,
    ));
    let d = cfg.delta;
    let phi: f64 = rng.gen_range(-cfg.phi_range..=cfg.phi_range);
    let c: f64 = rng.gen_range(cfg.kinetic_range.0..=cfg.kinetic_range.1);
    let sign = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
    let phi_dot = sign * c / (d * d * d);
    let ad2 =
        (model.kappa * model.energy_density(phi, phi_dot) + model.lambda / 3.0) * d * d - model.k;
    if !(ad2 > 0.0) {
        return Err(Error::NoPhysicalRoot);
    }
    let x = [d, phi, ad2.sqrt(), phi_dot];
    let mut directions = [0.0; 3];
    for (dir, out) in directions.iter_mut().enumerate() {
        let (mut a_dot, mut p, mut p_dot) = (x[2], x[1], x[3]);
        match dir {
            0 => a_dot *= 1.0 + d,
            1 => p += d,
            _ => p_dot *= 1.0 + d,
        }
        let a = solve_constraint_for_a(a_dot, p, p_dot, model)?.a;
        *out = divergence_exponent(model, x, [a, p, a_dot, p_dot], cfg.window, cfg.rtol)?;
    }
    Ok(InstabilitySample {
        state: x,
        directions,
        exponent: directions.iter().copied().fold(f64::NEG_INFINITY, f64::max),
    })
}

/// Aggregates per-sample exponents into the reported statistics.
pub fn summarize_instability(samples: Vec<InstabilitySample>) -> InstabilityReport {
    let ex: Vec<f64> = samples.iter().map(|s| s.exponent).collect();
    let n = ex.len().max(1) as f64;
    InstabilityReport {
        fraction_positive: ex.iter().filter(|&&e| e > 0.0).count() as f64 / n,
        mean_exponent: crate::stats::mean(&ex),
        std_exponent: crate::stats::std_dev(&ex),
        samples,
    }
}

pub fn big_bang_surface_instability(
    model: &FRWModel,
    n_samples: usize,
    seed: u64,
    delta: f64,
) -> Result<InstabilityReport> {
    big_bang_surface_instability_with(model, &InstabilityConfig::new(n_samples, seed, delta))
}

pub fn big_bang_surface_instability_with(
    model: &FRWModel,
    cfg: &InstabilityConfig,
) -> Result<InstabilityReport> {
    if !(cfg.delta > 0.0) || !(cfg.window > 0.0) {
        return Err(Error::InvalidArgument(
            "delta and window must be positive".into(),
        ));
    }
    let samples = (0..cfg.n_samples as u64)
        .map(|i| instability_sample(model, cfg, i))
        .collect::<Result<Vec<_>>>()?;
    Ok(summarize_instability(samples))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TurningKind {
    /// Simple root of `g = f²`: the path turns and is mirror symmetric.
    Generic,
    /// `g(a_S) = g′(a_S) = 0`: approached asymptotically, a fine-tuned case.
    Degenerate,
    /// `g > 0` all the way to the search limit: `a` is monotone.
    NoTurningPoint,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TurningReport {
    pub kind: TurningKind,
    pub a_s: Option<f64>,
    pub g_prime: Option<f64>,
    pub t_s: Option<f64>,
    /// `max_τ |a(t_S + τ) − a(t_S − τ)| / max a` over the run.
    pub symmetry_error: Option<f64>,
    pub symmetric: bool,
}

struct Reduced<D> {
    dg: D,
}

impl<D: Fn(f64) -> f64> DynamicalSystem for Reduced<D> {
    fn dim(&self) -> usize {
        2
    }

    fn vector_field(&self, _t: f64, x: &[f64], dx: &mut [f64]) {
        dx[0] = x[1];
        dx[1] = 0.5 * (self.dg)(x[0]);
    }
}

/// One-dimensional reduction `ȧ² = g(a)` (so `ä = g′(a)/2`) started at
/// `a0` moving in the given direction. Looks for the first root of `g`
/// before `a_limit`, classifies it, and for a simple root integrates through
/// the turning point and back to `a0` to measure the reflection error.
pub fn pure_frw_turning_symmetry(
    g: impl Fn(f64) -> f64,
    dg: impl Fn(f64) -> f64,
    a0: f64,
    expanding: bool,
    a_limit: f64,
    step: f64,
) -> Result<TurningReport> {
    let g0 = g(a0);
    if !(a0 > 0.0) || !(g0 > 0.0) || !(step > 0.0) {
        return Err(Error::InvalidArgument(
            "need a0 > 0, g(a0) > 0 and a positive step".into(),
        ));
    }
    if (expanding && a_limit <= a0) || (!expanding && (a_limit >= a0 || a_limit < 0.0)) {
        return Err(Error::InvalidArgument(
            "a_limit lies behind the direction of motion".into(),
        ));
    }
    const SCAN: usize = 20_000;
    let at = |i: usize| a0 + (a_limit - a0) * i as f64 / SCAN as f64;
    let mut root = None;
    let mut min_g = (g0, a0);
    for i in 1..=SCAN {
        let gi = g(at(i));
        if gi <= 0.0 {
            let (mut lo, mut hi) = (at(i - 1), at(i));
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if g(mid) > 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            root = Some(if gi == 0.0 { at(i) } else { 0.5 * (lo + hi) });
            break;
        }
        if gi < min_g.0 {
            min_g = (gi, at(i));
        }
    }
    let scale = (dg(a0).abs()).max(g0 / (a0 - a_limit).abs());
    let Some(a_s) = root.or(if min_g.0 <= 1e-12 * g0 && min_g.1 != at(SCAN) {
        Some(min_g.1)
    } else {
        None
    }) else {
        return Ok(TurningReport {
            kind: TurningKind::NoTurningPoint,
            a_s: None,
            g_prime: None,
            t_s: None,
            symmetry_error: None,
            symmetric: false,
        });
    };
    let gp = dg(a_s);
    if gp.abs() <= 1e-8 * scale {
        return Ok(TurningReport {
            kind: TurningKind::Degenerate,
            a_s: Some(a_s),
            g_prime: Some(gp),
            t_s: None,
            symmetry_error: None,
            symmetric: false,
        });
    }
    // t_S = ∫ da/√g with a = a_S ∓ s², which removes the endpoint singularity
    let dir = if expanding { 1.0 } else { -1.0 };
    let s_max = (a_s - a0).abs().sqrt();
    let t_s = Grid::composite(0.0, s_max, 64, 16)?.integrate_fn(|s| {
        let gv = g(a_s - dir * s * s);
        if gv > 0.0 {
            2.0 * s / gv.sqrt()
        } else {
            2.0 / gp.abs().sqrt()
        }
    });
    if !t_s.is_finite() || t_s <= 0.0 {
        return Err(Error::InvalidArgument("turning time is not finite".into()));
    }

    // integrate on a grid with t_S as a node, eight substeps per stored sample
    const SUB: usize = 8;
    let n_half = ((t_s / step).round() as usize).max(MIN_WINDOW_SAMPLES);
    let h = t_s / n_half as f64;
    let hs = h / SUB as f64;
    let sys = Reduced { dg: &dg };
    let f = |y: &[f64; 2], out: &mut [f64; 2]| sys.vector_field(0.0, y, out);
    let mut x = [a0, dir * g0.sqrt()];
    let mut a = Vec::with_capacity(2 * n_half + 1);
    a.push(x[0]);
    let mut k = [[0.0; 2]; 4];
    'outer: for _ in 0..2 * n_half {
        for _ in 0..SUB {
            f(&x, &mut k[0]);
            let y1 = [x[0] + 0.5 * hs * k[0][0], x[1] + 0.5 * hs * k[0][1]];
            f(&y1, &mut k[1]);
            let y2 = [x[0] + 0.5 * hs * k[1][0], x[1] + 0.5 * hs * k[1][1]];
            f(&y2, &mut k[2]);
            let y3 = [x[0] + hs * k[2][0], x[1] + hs * k[2][1]];
            f(&y3, &mut k[3]);
            for c in 0..2 {
                x[c] += hs / 6.0 * (k[0][c] + 2.0 * k[1][c] + 2.0 * k[2][c] + k[3][c]);
            }
            if x.iter().any(|v| !v.is_finite()) || !(x[0] > 0.0) {
                break 'outer;
            }
        }
        a.push(x[0]);
    }
    let pairs = (a.len() - 1).saturating_sub(n_half).min(n_half);
    let err = if pairs >= MIN_WINDOW_SAMPLES {
        let amax = a.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let e = (1..=pairs).fold(0.0f64, |m, j| m.max((a[n_half + j] - a[n_half - j]).abs()));
        Some(e / amax)
    } else {
        None
    };
    Ok(TurningReport {
        kind: TurningKind::Generic,
        a_s: Some(a_s),
        g_prime: Some(gp),
        t_s: Some(t_s),
        symmetry_error: err,
        symmetric: err.is_some_and(|e| e <= 1e-8),
    })
}

/// `g(a) = (κV(φ) + Λ/3)a² − k` for the field frozen at `phi`.
pub fn frozen_field_reduction(
    model: &FRWModel,
    phi: f64,
) -> (impl Fn(f64) -> f64, impl Fn(f64) -> f64) {
    let c = model.kappa * model.potential.value(phi) + model.lambda / 3.0;
    let k = model.k;
    (move |a: f64| c * a * a - k, move |a: f64| 2.0 * c * a)
}
