//! Fixed-step integration of finite-dimensional dynamical systems and the
//! elementary trajectory transforms used by every other module.
//!
//! State vectors are laid out as `[q0..qn, p0..pn]`. Backward integration
//! (`t_end < t0`) integrates the negated vector field forward in the reversed
//! time variable; it never uses the system's reversal involution, so numerical
//! and physical reversal stay independently testable.

use alloc::vec;
use alloc::vec::Vec;
use num_traits::Float;

use crate::error::{Error, Result};

/// Side of a switching surface `s(x) = 0`; `Upper` means `s >= 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Upper,
    Lower,
}

impl Side {
    fn of(s: f64) -> Side {
        if s >= 0.0 {
            Side::Upper
        } else {
            Side::Lower
        }
    }

    fn flip(self) -> Side {
        match self {
            Side::Upper => Side::Lower,
            Side::Lower => Side::Upper,
        }
    }
}

/// A finite-dimensional ODE `x' = F(t, x)` with a time-reversal involution.
pub trait DynamicalSystem {
    /// Length of the state vector (twice the number of degrees of freedom).
    fn dim(&self) -> usize;

    fn vector_field(&self, t: f64, x: &[f64], dx: &mut [f64]);

    /// Involution applied by `t -> -t`; negates the momentum block by default.
    fn reversal(&self, x: &[f64], out: &mut [f64]) {
        let half = x.len() / 2;
        out[..half].copy_from_slice(&x[..half]);
        for (o, v) in out[half..].iter_mut().zip(&x[half..]) {
            *o = -*v;
        }
    }

    fn hamiltonian(&self, _x: &[f64]) -> Option<f64> {
        None
    }

    /// Switching function for piecewise-defined fields. When present the
    /// integrator locates sign changes by bisection and evaluates each piece
    /// with [`DynamicalSystem::vector_field_on`].
    fn switching(&self, _x: &[f64]) -> Option<f64> {
        None
    }

    /// Vector field of the branch valid on `side` of the switching surface.
    fn vector_field_on(&self, t: f64, x: &[f64], _side: Side, dx: &mut [f64]) {
        self.vector_field(t, x, dx)
    }
}

impl<S: DynamicalSystem + ?Sized> DynamicalSystem for &S {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn vector_field(&self, t: f64, x: &[f64], dx: &mut [f64]) {
        (**self).vector_field(t, x, dx)
    }
    fn reversal(&self, x: &[f64], out: &mut [f64]) {
        (**self).reversal(x, out)
    }
    fn hamiltonian(&self, x: &[f64]) -> Option<f64> {
        (**self).hamiltonian(x)
    }
    fn switching(&self, x: &[f64]) -> Option<f64> {
        (**self).switching(x)
    }
    fn vector_field_on(&self, t: f64, x: &[f64], side: Side, dx: &mut [f64]) {
        (**self).vector_field_on(t, x, side, dx)
    }
}

/// Point of phase space at time `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseState {
    pub q: Vec<f64>,
    pub p: Vec<f64>,
    pub t: f64,
}

impl PhaseState {
    pub fn new(q: Vec<f64>, p: Vec<f64>, t: f64) -> Result<Self> {
        if q.len() != p.len() {
            return Err(Error::DimensionMismatch {
                expected: q.len(),
                found: p.len(),
            });
        }
        if !t.is_finite() || q.iter().chain(&p).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite { t });
        }
        Ok(PhaseState { q, p, t })
    }

    /// Builds a state from a flat `[q.., p..]` vector.
    pub fn from_flat(x: &[f64], t: f64) -> Result<Self> {
        if !x.len().is_multiple_of(2) {
            return Err(Error::InvalidArgument(
                "flat state must have even length".into(),
            ));
        }
        let half = x.len() / 2;
        PhaseState::new(x[..half].to_vec(), x[half..].to_vec(), t)
    }

    pub fn to_flat(&self) -> Vec<f64> {
        let mut v = self.q.clone();
        v.extend_from_slice(&self.p);
        v
    }

    pub fn dim(&self) -> usize {
        self.q.len() + self.p.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IntegratorId {
    Rk4,
    /// RK4 with per-step substeps chosen from the local rate of the field.
    Rk4Substepped,
}

/// Time-ordered samples of a path through phase space.
///
/// Times are strictly increasing regardless of the direction the path was
/// integrated in.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    times: Vec<f64>,
    data: Vec<f64>,
    dim: usize,
    step: f64,
    integrator: IntegratorId,
    max_energy_drift: Option<f64>,
}

impl Trajectory {
    pub fn from_parts(
        times: Vec<f64>,
        data: Vec<f64>,
        dim: usize,
        step: f64,
        integrator: IntegratorId,
    ) -> Result<Self> {
        if dim == 0 || data.len() != times.len() * dim {
            return Err(Error::DimensionMismatch {
                expected: times.len() * dim,
                found: data.len(),
            });
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidArgument(
                "times must be strictly increasing".into(),
            ));
        }
        Ok(Trajectory {
            times,
            data,
            dim,
            step,
            integrator,
            max_energy_drift: None,
        })
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn integrator(&self) -> IntegratorId {
        self.integrator
    }

    /// Largest relative Hamiltonian drift seen while integrating, if the
    /// system exposes a Hamiltonian.
    pub fn max_energy_drift(&self) -> Option<f64> {
        self.max_energy_drift
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn time(&self, i: usize) -> f64 {
        self.times[i]
    }

    pub fn state(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn phase_state(&self, i: usize) -> PhaseState {
        let x = self.state(i);
        let half = self.dim / 2;
        PhaseState {
            q: x[..half].to_vec(),
            p: x[half..].to_vec(),
            t: self.times[i],
        }
    }

    pub fn first(&self) -> &[f64] {
        self.state(0)
    }

    pub fn last(&self) -> &[f64] {
        self.state(self.len() - 1)
    }

    /// Values of one component over the whole path.
    pub fn component(&self, c: usize) -> impl Iterator<Item = f64> + '_ {
        self.data.iter().skip(c).step_by(self.dim).copied()
    }

    pub fn states(&self) -> impl Iterator<Item = (f64, &[f64])> {
        self.times
            .iter()
            .copied()
            .zip(self.data.chunks_exact(self.dim))
    }

    /// Joins a backward run ending at `t0` with a forward run starting at `t0`.
    pub fn join(backward: &Trajectory, forward: &Trajectory) -> Result<Trajectory> {
        if backward.dim != forward.dim {
            return Err(Error::DimensionMismatch {
                expected: backward.dim,
                found: forward.dim,
            });
        }
        let tb = *backward.times.last().unwrap();
        let tf = forward.times[0];
        if (tb - tf).abs() > 1e-12 * (1.0 + tf.abs()) {
            return Err(Error::InvalidArgument(
                "runs do not meet at a common time".into(),
            ));
        }
        let mut times = backward.times.clone();
        times.extend_from_slice(&forward.times[1..]);
        let mut data = backward.data.clone();
        data.extend_from_slice(&forward.data[forward.dim..]);
        let max_energy_drift = match (backward.max_energy_drift, forward.max_energy_drift) {
            (Some(a), Some(b)) => Some(a.max(b)),
            (a, b) => a.or(b),
        };
        Ok(Trajectory {
            times,
            data,
            dim: forward.dim,
            step: forward.step.max(backward.step),
            integrator: forward.integrator,
            max_energy_drift,
        })
    }
}

fn check_dim<S: DynamicalSystem + ?Sized>(system: &S, n: usize) -> Result<()> {
    if system.dim() != n {
        return Err(Error::DimensionMismatch {
            expected: system.dim(),
            found: n,
        });
    }
    Ok(())
}

/// Direction-aware wrapper: in the reversed time variable `s` the backward
/// field is `-F(t0 - s, y)`.
struct Stepper<'a, S: ?Sized> {
    system: &'a S,
    sign: f64,
    k: [Vec<f64>; 4],
    tmp: Vec<f64>,
}

impl<'a, S: DynamicalSystem + ?Sized> Stepper<'a, S> {
    fn new(system: &'a S, sign: f64) -> Self {
        let n = system.dim();
        Stepper {
            system,
            sign,
            k: [vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]],
            tmp: vec![0.0; n],
        }
    }

    fn field(system: &S, sign: f64, t: f64, x: &[f64], side: Option<Side>, out: &mut [f64]) {
        match side {
            Some(s) => system.vector_field_on(t, x, s, out),
            None => system.vector_field(t, x, out),
        }
        if sign < 0.0 {
            for v in out.iter_mut() {
                *v = -*v;
            }
        }
    }

    /// One classic RK4 step of length `h >= 0` in the direction of travel.
    fn rk4(&mut self, t: f64, x: &[f64], h: f64, side: Option<Side>, out: &mut [f64]) {
        let n = x.len();
        let dt = self.sign * h;
        let [k1, k2, k3, k4] = &mut self.k;
        Self::field(self.system, self.sign, t, x, side, k1);
        for i in 0..n {
            self.tmp[i] = x[i] + 0.5 * h * k1[i];
        }
        Self::field(self.system, self.sign, t + 0.5 * dt, &self.tmp, side, k2);
        for i in 0..n {
            self.tmp[i] = x[i] + 0.5 * h * k2[i];
        }
        Self::field(self.system, self.sign, t + 0.5 * dt, &self.tmp, side, k3);
        for i in 0..n {
            self.tmp[i] = x[i] + h * k3[i];
        }
        Self::field(self.system, self.sign, t + dt, &self.tmp, side, k4);
        for i in 0..n {
            out[i] = x[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
    }

    /// Side to integrate on when the step starts exactly on the surface:
    /// follow the upper branch for a tiny Euler probe and see where it lands.
    fn starting_side(&mut self, t: f64, x: &[f64]) -> Side {
        let s = self.system.switching(x).unwrap_or(0.0);
        if s != 0.0 {
            return Side::of(s);
        }
        let n = x.len();
        let mut f = vec![0.0; n];
        Self::field(self.system, self.sign, t, x, Some(Side::Upper), &mut f);
        let probe: Vec<f64> = x.iter().zip(&f).map(|(a, b)| a + 1e-9 * b).collect();
        Side::of(self.system.switching(&probe).unwrap_or(0.0))
    }

    /// Advances by `h`, splitting the step at switching-surface crossings
    /// located by bisection to 1e-10 in time.
    fn step(&mut self, t: f64, x: &[f64], h: f64, out: &mut [f64]) {
        if self.system.switching(x).is_none() {
            self.rk4(t, x, h, None, out);
            return;
        }
        let n = x.len();
        let mut y = x.to_vec();
        let mut trial = vec![0.0; n];
        let mut tau = 0.0;
        let mut side = self.starting_side(t, x);
        for _ in 0..8 {
            let rem = h - tau;
            let t_here = t + self.sign * tau;
            self.rk4(t_here, &y, rem, Some(side), &mut trial);
            let s_end = self.system.switching(&trial).unwrap();
            if Side::of(s_end) == side {
                out.copy_from_slice(&trial);
                return;
            }
            let (mut lo, mut hi) = (0.0, rem);
            while hi - lo > 1e-10 {
                let mid = 0.5 * (lo + hi);
                self.rk4(t_here, &y, mid, Some(side), &mut trial);
                if Side::of(self.system.switching(&trial).unwrap()) == side {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            self.rk4(t_here, &y, hi, Some(side), &mut trial);
            y.copy_from_slice(&trial);
            tau += hi;
            side = side.flip();
        }
        let rem = h - tau;
        self.rk4(t + self.sign * tau, &y.clone(), rem, Some(side), &mut y);
        out.copy_from_slice(&y);
    }
}

fn step_plan(t0: f64, t_end: f64, step: f64) -> Result<(usize, f64, f64)> {
    if !(step > 0.0) || !step.is_finite() {
        return Err(Error::InvalidArgument("step must be positive".into()));
    }
    if !(t_end != t0) || !t_end.is_finite() {
        return Err(Error::InvalidArgument(
            "t_end must differ from the initial time".into(),
        ));
    }
    let span = (t_end - t0).abs();
    let n = ((span / step) - 1e-9).ceil().max(1.0) as usize;
    let sign = if t_end > t0 { 1.0 } else { -1.0 };
    Ok((n, span / n as f64, sign))
}

/// Streams a fixed-step run to `sink(t, x)` without storing it; returns the
/// largest relative energy drift when the system has a Hamiltonian.
pub fn integrate_with<S, F>(
    system: &S,
    initial: &PhaseState,
    t_end: f64,
    step: f64,
    mut sink: F,
) -> Result<Option<f64>>
where
    S: DynamicalSystem + ?Sized,
    F: FnMut(f64, &[f64]),
{
    let x0 = initial.to_flat();
    check_dim(system, x0.len())?;
    let (n, h, sign) = step_plan(initial.t, t_end, step)?;
    let h0 = system.hamiltonian(&x0);
    let mut drift: Option<f64> = h0.map(|_| 0.0);
    let mut stepper = Stepper::new(system, sign);
    let mut x = x0;
    let mut next = vec![0.0; x.len()];
    sink(initial.t, &x);
    let mut t = initial.t;
    for i in 1..=n {
        stepper.step(t, &x, h, &mut next);
        let t_next = initial.t + sign * (i as f64) * h;
        if next.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite { t });
        }
        if let (Some(e0), Some(d)) = (h0, drift.as_mut()) {
            if let Some(e) = system.hamiltonian(&next) {
                let rel = (e - e0).abs() / e0.abs().max(f64::MIN_POSITIVE);
                *d = d.max(rel);
            }
        }
        core::mem::swap(&mut x, &mut next);
        t = t_next;
        sink(t, &x);
    }
    Ok(drift)
}

/// Integrates from `initial.t` to `t_end` with classic RK4 at a uniform step
/// no larger than `step`. Backward runs are supported and stored in
/// increasing time order (the initial state is then the last sample).
pub fn integrate<S: DynamicalSystem + ?Sized>(
    system: &S,
    initial: &PhaseState,
    t_end: f64,
    step: f64,
) -> Result<Trajectory> {
    let dim = initial.dim();
    let (n, h, sign) = {
        check_dim(system, dim)?;
        step_plan(initial.t, t_end, step)?
    };
    let mut times = Vec::with_capacity(n + 1);
    let mut data = Vec::with_capacity((n + 1) * dim);
    let drift = integrate_with(system, initial, t_end, step, |t, x| {
        times.push(t);
        data.extend_from_slice(x);
    })?;
    if sign < 0.0 {
        times.reverse();
        let mut rev = Vec::with_capacity(data.len());
        for chunk in data.chunks_exact(dim).rev() {
            rev.extend_from_slice(chunk);
        }
        data = rev;
    }
    Ok(Trajectory {
        times,
        data,
        dim,
        step: h,
        integrator: IntegratorId::Rk4,
        max_energy_drift: drift,
    })
}

/// Integrates backward to `initial.t - t_back` and forward to
/// `initial.t + t_fwd`, returning one path through `initial`.
pub fn integrate_two_sided<S: DynamicalSystem + ?Sized>(
    system: &S,
    initial: &PhaseState,
    t_back: f64,
    t_fwd: f64,
    step: f64,
) -> Result<Trajectory> {
    let back = integrate(system, initial, initial.t - t_back, step)?;
    let fwd = integrate(system, initial, initial.t + t_fwd, step)?;
    Trajectory::join(&back, &fwd)
}

/// Applies `t -> t_first + t_last - t` together with the reversal involution.
pub fn time_reverse<S: DynamicalSystem + ?Sized>(
    trajectory: &Trajectory,
    system: &S,
) -> Result<Trajectory> {
    if trajectory.is_empty() {
        return Err(Error::InvalidArgument(
            "cannot reverse an empty trajectory".into(),
        ));
    }
    check_dim(system, trajectory.dim)?;
    let n = trajectory.len();
    let (t0, t1) = (trajectory.times[0], trajectory.times[n - 1]);
    let dim = trajectory.dim;
    let mut times = Vec::with_capacity(n);
    let mut data = vec![0.0; n * dim];
    for j in 0..n {
        let src = n - 1 - j;
        times.push(t0 + t1 - trajectory.times[src]);
        system.reversal(trajectory.state(src), &mut data[j * dim..(j + 1) * dim]);
    }
    Ok(Trajectory {
        times,
        data,
        dim,
        step: trajectory.step,
        integrator: trajectory.integrator,
        max_energy_drift: trajectory.max_energy_drift,
    })
}

/// How well a sampled path satisfies `x' = F(t, x)`: sup-norm of the
/// difference between a fourth-order central-difference derivative and the
/// field, at every sample with two neighbours on each side.
pub fn equation_residual<S: DynamicalSystem + ?Sized>(
    trajectory: &Trajectory,
    system: &S,
) -> Result<Vec<f64>> {
    check_dim(system, trajectory.dim)?;
    let n = trajectory.len();
    if n < 5 {
        return Err(Error::InvalidArgument("need at least five samples".into()));
    }
    let dim = trajectory.dim;
    let mut f = vec![0.0; dim];
    let mut out = Vec::with_capacity(n - 4);
    for i in 2..n - 2 {
        let h = (trajectory.times[i + 2] - trajectory.times[i - 2]) / 4.0;
        let (xm2, xm1, x, xp1, xp2) = (
            trajectory.state(i - 2),
            trajectory.state(i - 1),
            trajectory.state(i),
            trajectory.state(i + 1),
            trajectory.state(i + 2),
        );
        system.vector_field(trajectory.times[i], x, &mut f);
        let mut worst: f64 = 0.0;
        for c in 0..dim {
            let d = (-xp2[c] + 8.0 * xp1[c] - 8.0 * xm1[c] + xm2[c]) / (12.0 * h);
            worst = worst.max((d - f[c]).abs());
        }
        out.push(worst);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::systems::{DampedOscillator, HarmonicOscillator, ModifiedOscillator};
    use core::f64::consts::PI;

    fn start(q: f64, p: f64) -> PhaseState {
        PhaseState::new(vec![q], vec![p], 0.0).unwrap()
    }

    #[test]
    fn harmonic_returns_after_one_period() {
        let sys = HarmonicOscillator { k: 1.0 };
        let tr = integrate(&sys, &start(1.0, 0.0), 2.0 * PI, 1e-3).unwrap();
        let end = tr.last();
        assert!(
            (end[0] - 1.0).abs() < 1e-6 && end[1].abs() < 1e-6,
            "{end:?}"
        );
        // closed form q = cos t along the way
        for (t, x) in tr.states().step_by(500) {
            assert!((x[0] - t.cos()).abs() < 1e-9);
        }
    }

    #[test]
    fn single_step_gives_two_states() {
        let sys = HarmonicOscillator { k: 1.0 };
        let tr = integrate(&sys, &start(1.0, 0.0), 0.01, 0.01).unwrap();
        assert_eq!(tr.len(), 2);
    }

    #[test]
    fn damped_oscillator_decays() {
        let sys = DampedOscillator { k: 1.0, a: 1.0 };
        let tr = integrate(&sys, &start(1.0, 0.0), 50.0, 1e-3).unwrap();
        let end = tr.last();
        assert!(end[0].abs() + end[1].abs() < 1e-3);
        // underdamped envelope e^{-t/2}
        let w = (0.75f64).sqrt();
        for (t, x) in tr.states().step_by(997) {
            let q = (-t / 2.0).exp() * ((w * t).cos() + (w * t).sin() / (2.0 * w));
            assert!((x[0] - q).abs() < 1e-9, "t={t}");
        }
    }

    #[test]
    fn uniform_grid_and_increasing_times() {
        let sys = HarmonicOscillator { k: 2.0 };
        let tr = integrate(&sys, &start(0.3, 0.1), 1.2345, 0.01).unwrap();
        let h = tr.step();
        for w in tr.times().windows(2) {
            assert!(((w[1] - w[0]) - h).abs() <= 1e-12 * h.max(1.0) * 10.0);
        }
        let back = integrate(&sys, &start(0.3, 0.1), -1.0, 0.01).unwrap();
        assert!(back.times().windows(2).all(|w| w[1] > w[0]));
        assert_eq!(back.last(), &[0.3, 0.1]);
    }

    #[test]
    fn forward_then_backward_recovers_initial_state() {
        let sys = HarmonicOscillator { k: 1.3 };
        let s0 = start(0.7, -0.4);
        let fwd = integrate(&sys, &s0, 10.0, 1e-3).unwrap();
        let end = PhaseState::from_flat(fwd.last(), 10.0).unwrap();
        let back = integrate(&sys, &end, 0.0, 1e-3).unwrap();
        let x = back.first();
        assert!((x[0] - 0.7).abs() < 1e-8 && (x[1] + 0.4).abs() < 1e-8);
    }

    #[test]
    fn runs_are_bit_identical() {
        let sys = ModifiedOscillator {
            k_plus: 1.0,
            k_minus: 2.0,
        };
        let a = integrate(&sys, &start(1.0, 0.0), 7.0, 1e-3).unwrap();
        let b = integrate(&sys, &start(1.0, 0.0), 7.0, 1e-3).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn energy_is_conserved_over_many_periods() {
        let sys = HarmonicOscillator { k: 1.0 };
        let drift = integrate_with(&sys, &start(1.0, 0.0), 2.0 * PI * 1e4, 1e-3, |_, _| {})
            .unwrap()
            .unwrap();
        assert!(drift <= 1e-6, "drift {drift}");
    }

    #[test]
    fn reversal_is_an_involution() {
        let sys = HarmonicOscillator { k: 1.0 };
        let tr = integrate(&sys, &start(0.2, 0.9), 3.0, 1e-2).unwrap();
        let rr = time_reverse(&time_reverse(&tr, &sys).unwrap(), &sys).unwrap();
        for i in 0..tr.len() {
            assert_eq!(tr.state(i), rr.state(i));
            assert!((tr.time(i) - rr.time(i)).abs() < 1e-12);
        }
    }

    #[test]
    fn reversed_harmonic_path_solves_the_equation() {
        let sys = HarmonicOscillator { k: 1.0 };
        let tr = integrate(&sys, &start(1.0, 0.0), 6.0, 1e-3).unwrap();
        let fwd_res = equation_residual(&tr, &sys).unwrap();
        let rev = time_reverse(&tr, &sys).unwrap();
        let res = equation_residual(&rev, &sys).unwrap();
        let max = res.iter().cloned().fold(0.0, f64::max);
        let tol = 1e-7;
        assert!(fwd_res.iter().cloned().fold(0.0, f64::max) < tol);
        assert!(max < 10.0 * tol, "{max}");
    }

    #[test]
    fn reversed_damped_path_violates_the_equation() {
        let sys = DampedOscillator { k: 1.0, a: 1.0 };
        let tr = integrate(&sys, &start(1.0, 0.0), 6.0, 1e-3).unwrap();
        let rev = time_reverse(&tr, &sys).unwrap();
        let res = equation_residual(&rev, &sys).unwrap();
        assert!(res.iter().any(|&r| r > 0.1));
    }

    #[test]
    fn errors_are_reported() {
        let sys = HarmonicOscillator { k: 1.0 };
        let bad = PhaseState::new(vec![1.0, 2.0], vec![0.0, 0.0], 0.0).unwrap();
        assert!(matches!(
            integrate(&sys, &bad, 1.0, 0.1),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(integrate(&sys, &start(1.0, 0.0), 0.0, 0.1).is_err());
        assert!(integrate(&sys, &start(1.0, 0.0), 1.0, -0.1).is_err());
        assert!(PhaseState::new(vec![1.0], vec![], 0.0).is_err());
    }

    #[test]
    fn blow_up_reports_last_valid_time() {
        struct Explode;
        impl DynamicalSystem for Explode {
            fn dim(&self) -> usize {
                2
            }
            fn vector_field(&self, _t: f64, x: &[f64], dx: &mut [f64]) {
                dx[0] = x[0] * x[0] * 1e3;
                dx[1] = 0.0;
            }
        }
        match integrate(&Explode, &start(1.0, 0.0), 10.0, 0.01) {
            Err(Error::NonFinite { t }) => assert!(t > 0.0 && t < 10.0),
            other => panic!("{other:?}"),
        }
    }
}
