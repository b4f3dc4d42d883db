//! Reference one-degree-of-freedom systems. States are `[q, p]`.

use num_traits::Float;

use crate::trajectory::{DynamicalSystem, Side};

/// `H = p²/2 + K² q²/2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HarmonicOscillator {
    pub k: f64,
}

impl DynamicalSystem for HarmonicOscillator {
    fn dim(&self) -> usize {
        2
    }

    fn vector_field(&self, _t: f64, x: &[f64], dx: &mut [f64]) {
        dx[0] = x[1];
        dx[1] = -self.k * self.k * x[0];
    }

    fn hamiltonian(&self, x: &[f64]) -> Option<f64> {
        Some(0.5 * x[1] * x[1] + 0.5 * self.k * self.k * x[0] * x[0])
    }
}

/// `H = p²/2 + (K²/2) cos θ`; stable equilibrium at θ = π, separatrix at
/// energy K²/2.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pendulum {
    pub k: f64,
}

impl Pendulum {
    pub fn separatrix_energy(&self) -> f64 {
        0.5 * self.k * self.k
    }

    /// Momentum at θ = π giving total energy `energy`.
    pub fn momentum_at_bottom(&self, energy: f64) -> f64 {
        (2.0 * (energy + 0.5 * self.k * self.k)).max(0.0).sqrt()
    }
}

impl DynamicalSystem for Pendulum {
    fn dim(&self) -> usize {
        2
    }

    fn vector_field(&self, _t: f64, x: &[f64], dx: &mut [f64]) {
        dx[0] = x[1];
        dx[1] = 0.5 * self.k * self.k * x[0].sin();
    }

    fn hamiltonian(&self, x: &[f64]) -> Option<f64> {
        Some(0.5 * x[1] * x[1] + 0.5 * self.k * self.k * x[0].cos())
    }
}

/// `H = p²/2 + K(p)² q²/2` with `K = K⁺` for `p >= 0` and `K⁻` otherwise.
///
/// The field is discontinuous across `p = 0`; the integrator handles the
/// switch through [`DynamicalSystem::switching`]. No global Hamiltonian is
/// reported because `H` jumps on the switching line.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModifiedOscillator {
    pub k_plus: f64,
    pub k_minus: f64,
}

impl ModifiedOscillator {
    fn k(&self, side: Side) -> f64 {
        match side {
            Side::Upper => self.k_plus,
            Side::Lower => self.k_minus,
        }
    }

    /// Period of every closed orbit: half an ellipse on each side.
    pub fn period(&self) -> f64 {
        core::f64::consts::PI * (1.0 / self.k_plus + 1.0 / self.k_minus)
    }
}

impl DynamicalSystem for ModifiedOscillator {
    fn dim(&self) -> usize {
        2
    }

    fn vector_field(&self, t: f64, x: &[f64], dx: &mut [f64]) {
        let side = if x[1] >= 0.0 {
            Side::Upper
        } else {
            Side::Lower
        };
        self.vector_field_on(t, x, side, dx)
    }

    fn switching(&self, x: &[f64]) -> Option<f64> {
        Some(x[1])
    }

    fn vector_field_on(&self, _t: f64, x: &[f64], side: Side, dx: &mut [f64]) {
        let k = self.k(side);
        dx[0] = x[1];
        dx[1] = -k * k * x[0];
    }
}

/// `q'' = -K² q - A² q'`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DampedOscillator {
    pub k: f64,
    pub a: f64,
}

impl DynamicalSystem for DampedOscillator {
    fn dim(&self) -> usize {
        2
    }

    fn vector_field(&self, _t: f64, x: &[f64], dx: &mut [f64]) {
        dx[0] = x[1];
        dx[1] = -self.k * self.k * x[0] - self.a * self.a * x[1];
    }

    fn hamiltonian(&self, x: &[f64]) -> Option<f64> {
        Some(0.5 * x[1] * x[1] + 0.5 * self.k * self.k * x[0] * x[0])
    }
}
