//! Classical limit of spectral eigenstates: smoothed energy shells on a
//! phase-space lattice, their probabilistic mixtures, and a check that a shell
//! is carried into itself by the classical flow.
//!
//! The lattice is cell-centered. One cell has area `Δq·Δp`, which plays the
//! role of the model's ħ: no density built here is narrower than one cell, so
//! a "point-like" classical state is a single occupied cell.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::ops::Range;
use num_traits::Float;

use crate::error::{Error, Result};
use crate::trajectory::{integrate_with, DynamicalSystem, PhaseState};

/// Rectangular, cell-centered `(q, p)` lattice. Values are stored row-major
/// with `p` as the row index.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseGrid {
    pub q_min: f64,
    pub q_max: f64,
    pub nq: usize,
    pub p_min: f64,
    pub p_max: f64,
    pub np: usize,
}

impl PhaseGrid {
    pub fn new(q: (f64, f64), nq: usize, p: (f64, f64), np: usize) -> Result<Self> {
        let ok = |lo: f64, hi: f64, n: usize| lo.is_finite() && hi.is_finite() && hi > lo && n >= 2;
        if !ok(q.0, q.1, nq) || !ok(p.0, p.1, np) {
            return Err(Error::InvalidArgument(
                "grid needs finite bounds lo < hi and at least 2 cells per axis".into(),
            ));
        }
        Ok(PhaseGrid {
            q_min: q.0,
            q_max: q.1,
            nq,
            p_min: p.0,
            p_max: p.1,
            np,
        })
    }

    /// Square grid `[-half, half]²` with `n × n` cells.
    pub fn square(half: f64, n: usize) -> Result<Self> {
        Self::new((-half, half), n, (-half, half), n)
    }

    pub fn dq(&self) -> f64 {
        (self.q_max - self.q_min) / self.nq as f64
    }

    pub fn dp(&self) -> f64 {
        (self.p_max - self.p_min) / self.np as f64
    }

    /// Cell area; the model's ħ.
    pub fn cell_area(&self) -> f64 {
        self.dq() * self.dp()
    }

    pub fn len(&self) -> usize {
        self.nq * self.np
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn q(&self, i: usize) -> f64 {
        self.q_min + (i as f64 + 0.5) * self.dq()
    }

    pub fn p(&self, j: usize) -> f64 {
        self.p_min + (j as f64 + 0.5) * self.dp()
    }

    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.nq + i
    }

    /// Cell center of flat index `k`.
    pub fn point(&self, k: usize) -> (f64, f64) {
        (self.q(k % self.nq), self.p(k / self.nq))
    }

    pub fn contains(&self, q: f64, p: f64) -> bool {
        q >= self.q_min && q <= self.q_max && p >= self.p_min && p <= self.p_max
    }

    /// Cell holding `(q, p)`, if inside.
    pub fn cell_of(&self, q: f64, p: f64) -> Option<(usize, usize)> {
        if !self.contains(q, p) {
            return None;
        }
        let i = (((q - self.q_min) / self.dq()) as usize).min(self.nq - 1);
        let j = (((p - self.p_min) / self.dp()) as usize).min(self.np - 1);
        Some((i, j))
    }
}

/// One-degree-of-freedom Hamiltonians on the lattice.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Hamiltonian {
    /// `p²/2 + k²q²/2`
    Harmonic { k: f64 },
    /// `p²/2 + (k²/2) cos q`
    Pendulum { k: f64 },
    /// `p²/2 + k²q²/2 + λq⁴/4`
    Anharmonic { k: f64, lambda: f64 },
}

impl Hamiltonian {
    pub fn energy(&self, q: f64, p: f64) -> f64 {
        let kin = 0.5 * p * p;
        match *self {
            Hamiltonian::Harmonic { k } => kin + 0.5 * k * k * q * q,
            Hamiltonian::Pendulum { k } => kin + 0.5 * k * k * q.cos(),
            Hamiltonian::Anharmonic { k, lambda } => {
                kin + 0.5 * k * k * q * q + 0.25 * lambda * q.powi(4)
            }
        }
    }

    /// `(∂H/∂q, ∂H/∂p)`
    pub fn gradient(&self, q: f64, p: f64) -> (f64, f64) {
        let dq = match *self {
            Hamiltonian::Harmonic { k } => k * k * q,
            Hamiltonian::Pendulum { k } => -0.5 * k * k * q.sin(),
            Hamiltonian::Anharmonic { k, lambda } => k * k * q + lambda * q.powi(3),
        };
        (dq, p)
    }
}

impl DynamicalSystem for Hamiltonian {
    fn dim(&self) -> usize {
        2
    }

    fn vector_field(&self, _t: f64, x: &[f64], dx: &mut [f64]) {
        let (hq, hp) = self.gradient(x[0], x[1]);
        dx[0] = hp;
        dx[1] = -hq;
    }

    fn hamiltonian(&self, x: &[f64]) -> Option<f64> {
        Some(self.energy(x[0], x[1]))
    }
}

/// Additional constant of motion `A(q, p) = value` beyond the energy.
/// Accepted by the constructors for completeness; only the energy-only case
/// is supported, so a non-empty list is rejected.
#[derive(Debug, Clone)]
pub struct ExtraConstraint {
    pub label: String,
    pub observable: fn(f64, f64) -> f64,
    pub value: f64,
}

impl PartialEq for ExtraConstraint {
    fn eq(&self, other: &Self) -> bool {
        self.label == other.label && self.value == other.value
    }
}

/// Nonnegative phase-space density with unit Riemann mass.
#[derive(Debug, Clone, PartialEq)]
pub struct WignerDensity {
    pub grid: PhaseGrid,
    pub hamiltonian: Hamiltonian,
    pub values: Vec<f64>,
    /// Energy smoothing width; zero for a single-cell state.
    pub sigma: f64,
    pub extra: Vec<ExtraConstraint>,
}

impl WignerDensity {
    /// Riemann sum of the values.
    pub fn mass(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.grid.cell_area()
    }

    /// Mass of the cells with `|H - omega| < width`.
    pub fn mass_within(&self, omega: f64, width: f64) -> f64 {
        self.energy_weighted(|e| if (e - omega).abs() < width { 1.0 } else { 0.0 })
    }

    /// Root of the second moment of `H - omega`.
    pub fn thickness(&self, omega: f64) -> f64 {
        (self.energy_weighted(|e| (e - omega) * (e - omega)) / self.mass()).sqrt()
    }

    /// Mass in each energy bin `[edges[i], edges[i+1])`.
    pub fn energy_histogram(&self, edges: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; edges.len().saturating_sub(1)];
        let da = self.grid.cell_area();
        for (k, v) in self.values.iter().enumerate() {
            let (q, p) = self.grid.point(k);
            let e = self.hamiltonian.energy(q, p);
            if let Some(b) = edges.windows(2).position(|w| e >= w[0] && e < w[1]) {
                out[b] += v * da;
            }
        }
        out
    }

    fn energy_weighted(&self, f: impl Fn(f64) -> f64) -> f64 {
        let da = self.grid.cell_area();
        self.values
            .iter()
            .enumerate()
            .filter(|(_, v)| **v != 0.0)
            .map(|(k, v)| {
                let (q, p) = self.grid.point(k);
                v * f(self.hamiltonian.energy(q, p))
            })
            .sum::<f64>()
            * da
    }

    /// Classical state localized on the single cell holding `(q, p)`: the
    /// narrowest state the lattice represents.
    pub fn point(grid: PhaseGrid, hamiltonian: Hamiltonian, q: f64, p: f64) -> Result<Self> {
        let (i, j) = grid
            .cell_of(q, p)
            .ok_or(Error::InvalidArgument("point lies outside the grid".into()))?;
        let mut values = vec![0.0; grid.len()];
        values[grid.index(i, j)] = 1.0 / grid.cell_area();
        Ok(WignerDensity {
            grid,
            hamiltonian,
            values,
            sigma: 0.0,
            extra: Vec::new(),
        })
    }

    /// Normalized density sampled from `f(q, p) ≥ 0` at the cell centers.
    pub fn from_fn(
        grid: PhaseGrid,
        hamiltonian: Hamiltonian,
        f: impl Fn(f64, f64) -> f64,
    ) -> Result<Self> {
        let mut values: Vec<f64> = (0..grid.len())
            .map(|k| {
                let (q, p) = grid.point(k);
                f(q, p)
            })
            .collect();
        if values.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::InvalidArgument(
                "density values must be finite and nonnegative".into(),
            ));
        }
        let mass = values.iter().sum::<f64>() * grid.cell_area();
        if !(mass > 0.0) {
            return Err(Error::InvalidArgument(
                "density has zero mass on the grid".into(),
            ));
        }
        values.iter_mut().for_each(|v| *v /= mass);
        Ok(WignerDensity {
            grid,
            hamiltonian,
            values,
            sigma: 0.0,
            extra: Vec::new(),
        })
    }
}

/// Energy range `(min, max)` of `H` over the cell centers.
pub fn energy_range(grid: &PhaseGrid, h: &Hamiltonian) -> (f64, f64) {
    (0..grid.len()).fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), k| {
        let (q, p) = grid.point(k);
        let e = h.energy(q, p);
        (lo.min(e), hi.max(e))
    })
}

/// Smoothed energy shell `C·exp(-(H - ω)²/2σ²)`, normalized numerically.
///
/// The smoothing must be resolved by the lattice: `σ ≥ 2·|∇H|·max(Δq, Δp)`
/// at every cell within 3σ of the shell.
pub fn wigner_energy_shell(
    omega: f64,
    h: &Hamiltonian,
    sigma: f64,
    grid: &PhaseGrid,
    extra: &[ExtraConstraint],
) -> Result<WignerDensity> {
    if !(sigma > 0.0) || !sigma.is_finite() || !omega.is_finite() {
        return Err(Error::InvalidArgument(
            "sigma must be positive and omega finite".into(),
        ));
    }
    if !extra.is_empty() {
        return Err(Error::InvalidArgument(
            "only the energy shell is supported; extra constraints must be empty".into(),
        ));
    }
    let (min, max) = energy_range(grid, h);
    if omega < min || omega > max {
        return Err(Error::EmptyShell { omega, min, max });
    }
    let cell = grid.dq().max(grid.dp());
    let mut grad = 0.0f64;
    let mut values = Vec::with_capacity(grid.len());
    for k in 0..grid.len() {
        let (q, p) = grid.point(k);
        let d = h.energy(q, p) - omega;
        if d.abs() < 3.0 * sigma {
            let (gq, gp) = h.gradient(q, p);
            grad = grad.max(gq.hypot(gp));
        }
        values.push((-0.5 * (d / sigma) * (d / sigma)).exp());
    }
    let required = 2.0 * grad * cell;
    if sigma < required {
        return Err(Error::ShellUnderResolved { sigma, required });
    }
    let mass = values.iter().sum::<f64>() * grid.cell_area();
    if !(mass > 0.0) {
        return Err(Error::EmptyShell { omega, min, max });
    }
    values.iter_mut().for_each(|v| *v /= mass);
    Ok(WignerDensity {
        grid: *grid,
        hamiltonian: *h,
        values,
        sigma,
        extra: Vec::new(),
    })
}

/// Mixture `Σ wᵢ ρᵢ` of shells with probabilities `wᵢ` (already multiplied by
/// the ω-grid spacing, so they must sum to one).
pub fn wigner_mix(weights: &[f64], shells: &[WignerDensity]) -> Result<WignerDensity> {
    if weights.len() != shells.len() || shells.is_empty() {
        return Err(Error::WeightMismatch(alloc::format!(
            "{} weights for {} shells",
            weights.len(),
            shells.len()
        )));
    }
    if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
        return Err(Error::WeightMismatch(
            "weights must be finite and nonnegative".into(),
        ));
    }
    let total: f64 = weights.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::WeightMismatch(alloc::format!(
            "weights sum to {total}, not 1"
        )));
    }
    let first = &shells[0];
    if shells
        .iter()
        .any(|s| s.grid != first.grid || s.hamiltonian != first.hamiltonian)
    {
        return Err(Error::WeightMismatch(
            "shells live on different grids or Hamiltonians".into(),
        ));
    }
    let mut values = vec![0.0; first.grid.len()];
    let mut sigma = 0.0f64;
    for (w, s) in weights.iter().zip(shells) {
        if *w == 0.0 {
            continue;
        }
        sigma = sigma.max(s.sigma);
        for (o, v) in values.iter_mut().zip(&s.values) {
            *o += w * v;
        }
    }
    Ok(WignerDensity {
        grid: first.grid,
        hamiltonian: first.hamiltonian,
        values,
        sigma,
        extra: Vec::new(),
    })
}

/// Rows advected as one unit; deposits are merged in block order so the
/// result does not depend on how blocks are scheduled.
pub const ROW_BLOCK: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransportOptions {
    pub step: f64,
    /// Each cell is split into `subsamples²` parcels before advection.
    pub subsamples: usize,
    /// Cells below `cutoff × max value` are not transported.
    pub cutoff: f64,
}

impl TransportOptions {
    pub fn new(step: f64) -> Self {
        TransportOptions {
            step,
            subsamples: 4,
            cutoff: 1e-12,
        }
    }
}

/// Mass carried to `(q, p)` by the flow.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Parcel {
    pub q: f64,
    pub p: f64,
    pub mass: f64,
}

/// Advects the parcels of rows `rows` for time `t` along Hamilton's equations.
pub fn advect_rows(
    density: &WignerDensity,
    t: f64,
    opts: &TransportOptions,
    rows: Range<usize>,
) -> Result<Vec<Parcel>> {
    let g = &density.grid;
    let m = opts.subsamples.max(1);
    let vmax = density.values.iter().cloned().fold(0.0, f64::max);
    let floor = opts.cutoff * vmax;
    let sub_mass = g.cell_area() / (m * m) as f64;
    let mut out = Vec::new();
    for j in rows.start..rows.end.min(g.np) {
        for i in 0..g.nq {
            let v = density.values[g.index(i, j)];
            if v <= floor {
                continue;
            }
            for a in 0..m {
                for b in 0..m {
                    let q0 = g.q(i) + ((a as f64 + 0.5) / m as f64 - 0.5) * g.dq();
                    let p0 = g.p(j) + ((b as f64 + 0.5) / m as f64 - 0.5) * g.dp();
                    let (q, p) = if t == 0.0 {
                        (q0, p0)
                    } else {
                        flow(&density.hamiltonian, q0, p0, t, opts.step)?
                    };
                    if !g.contains(q, p) {
                        return Err(Error::FlowEscapedGrid { q, p });
                    }
                    out.push(Parcel {
                        q,
                        p,
                        mass: v * sub_mass,
                    });
                }
            }
        }
    }
    Ok(out)
}

fn flow(h: &Hamiltonian, q: f64, p: f64, t: f64, step: f64) -> Result<(f64, f64)> {
    let start = PhaseState::new(vec![q], vec![p], 0.0)?;
    let mut end = (q, p);
    integrate_with(h, &start, t, step, |_, x| end = (x[0], x[1]))?;
    Ok(end)
}

/// Cloud-in-cell deposition onto the cell centers. Parcels in the outer
/// half-cell ring are clamped onto the edge cells, so mass is conserved.
pub fn deposit<'a>(
    grid: &PhaseGrid,
    acc: &mut [f64],
    parcels: impl IntoIterator<Item = &'a Parcel>,
) {
    let inv = 1.0 / grid.cell_area();
    let axis = |x: f64, lo: f64, d: f64, n: usize| {
        let s = ((x - lo) / d - 0.5).clamp(0.0, (n - 1) as f64);
        let i = (s.floor() as usize).min(n - 2);
        (i, s - i as f64)
    };
    for c in parcels {
        let (i, fx) = axis(c.q, grid.q_min, grid.dq(), grid.nq);
        let (j, fy) = axis(c.p, grid.p_min, grid.dp(), grid.np);
        let w = c.mass * inv;
        acc[grid.index(i, j)] += w * (1.0 - fx) * (1.0 - fy);
        acc[grid.index(i + 1, j)] += w * fx * (1.0 - fy);
        acc[grid.index(i, j + 1)] += w * (1.0 - fx) * fy;
        acc[grid.index(i + 1, j + 1)] += w * fx * fy;
    }
}

/// Density after transport for time `t`, re-binned onto the same grid.
pub fn transport(
    density: &WignerDensity,
    t: f64,
    opts: &TransportOptions,
) -> Result<WignerDensity> {
    let g = density.grid;
    let mut acc = vec![0.0; g.len()];
    let mut j = 0;
    while j < g.np {
        let parcels = advect_rows(density, t, opts, j..j + ROW_BLOCK)?;
        deposit(&g, &mut acc, &parcels);
        j += ROW_BLOCK;
    }
    Ok(WignerDensity {
        values: acc,
        ..density.clone()
    })
}

/// Sup-norm change `max|ρ_t - ρ_0| / max ρ_0`.
pub fn relative_change(before: &[f64], after: &[f64]) -> f64 {
    let peak = before.iter().cloned().fold(0.0, f64::max);
    let diff = before
        .iter()
        .zip(after)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    diff / peak
}

/// Transports `shell` for time `t` with RK4 steps of at most `step`, re-bins
/// it and returns the sup-norm relative change. Zero time gives zero.
pub fn shell_transport_invariance(shell: &WignerDensity, t: f64, step: f64) -> Result<f64> {
    if t == 0.0 {
        return Ok(0.0);
    }
    let moved = transport(shell, t, &TransportOptions::new(step))?;
    Ok(relative_change(&shell.values, &moved.values))
}

#[cfg(test)]
mod tests {
    use super::*;

    const SHO: Hamiltonian = Hamiltonian::Harmonic { k: 1.0 };

    #[test]
    fn grid_geometry() {
        let g = PhaseGrid::new((-1.0, 3.0), 4, (0.0, 1.0), 2).unwrap();
        assert_eq!((g.dq(), g.dp(), g.cell_area()), (1.0, 0.5, 0.5));
        assert_eq!((g.q(0), g.p(1)), (-0.5, 0.75));
        assert_eq!(g.point(g.index(3, 1)), (2.5, 0.75));
        assert_eq!(g.cell_of(3.0, 1.0), Some((3, 1)));
        assert_eq!(g.cell_of(3.1, 0.5), None);
        assert!(PhaseGrid::new((1.0, 1.0), 4, (0.0, 1.0), 4).is_err());
    }

    #[test]
    fn gradients_match_finite_differences() {
        for h in [
            SHO,
            Hamiltonian::Pendulum { k: 1.3 },
            Hamiltonian::Anharmonic {
                k: 0.7,
                lambda: 0.4,
            },
        ] {
            let (q, p, d) = (0.3, -0.8, 1e-6);
            let (gq, gp) = h.gradient(q, p);
            let nq = (h.energy(q + d, p) - h.energy(q - d, p)) / (2.0 * d);
            let np = (h.energy(q, p + d) - h.energy(q, p - d)) / (2.0 * d);
            assert!((gq - nq).abs() < 1e-8 && (gp - np).abs() < 1e-8);
        }
    }

    #[test]
    fn shell_errors() {
        let g = PhaseGrid::square(2.0, 64).unwrap();
        assert!(matches!(
            wigner_energy_shell(-0.1, &SHO, 0.1, &g, &[]),
            Err(Error::EmptyShell { .. })
        ));
        assert!(matches!(
            wigner_energy_shell(5.0, &SHO, 0.1, &g, &[]),
            Err(Error::EmptyShell { .. })
        ));
        assert!(matches!(
            wigner_energy_shell(1.0, &SHO, 0.05, &g, &[]),
            Err(Error::ShellUnderResolved { .. })
        ));
        assert!(wigner_energy_shell(1.0, &SHO, 0.0, &g, &[]).is_err());
        let extra = ExtraConstraint {
            label: "q".into(),
            observable: |q, _| q,
            value: 0.0,
        };
        assert!(matches!(
            wigner_energy_shell(1.0, &SHO, 0.2, &g, &[extra]),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn point_state_is_one_cell() {
        let g = PhaseGrid::square(1.0, 10).unwrap();
        let d = WignerDensity::point(g, SHO, 0.05, -0.33).unwrap();
        assert_eq!(d.values.iter().filter(|v| **v > 0.0).count(), 1);
        assert!((d.mass() - 1.0).abs() < 1e-14);
        assert!(WignerDensity::point(g, SHO, 1.5, 0.0).is_err());
    }

    #[test]
    fn mix_rejects_bad_weights() {
        let g = PhaseGrid::square(2.0, 64).unwrap();
        let s = wigner_energy_shell(1.0, &SHO, 0.3, &g, &[]).unwrap();
        let other =
            wigner_energy_shell(1.0, &SHO, 0.3, &PhaseGrid::square(2.0, 65).unwrap(), &[]).unwrap();
        assert!(matches!(
            wigner_mix(&[1.0], &[]),
            Err(Error::WeightMismatch(_))
        ));
        assert!(matches!(
            wigner_mix(&[0.5, 0.4], &[s.clone(), s.clone()]),
            Err(Error::WeightMismatch(_))
        ));
        assert!(matches!(
            wigner_mix(&[1.5, -0.5], &[s.clone(), s.clone()]),
            Err(Error::WeightMismatch(_))
        ));
        assert!(matches!(
            wigner_mix(&[0.5, 0.5], &[s.clone(), other]),
            Err(Error::WeightMismatch(_))
        ));
        assert_eq!(
            wigner_mix(&[1.0], std::slice::from_ref(&s)).unwrap().values,
            s.values
        );
    }

    #[test]
    fn deposition_conserves_mass_at_edges() {
        let g = PhaseGrid::square(1.0, 8).unwrap();
        let parcels = [
            Parcel {
                q: -1.0,
                p: -1.0,
                mass: 0.25,
            },
            Parcel {
                q: 0.99,
                p: 0.3,
                mass: 0.25,
            },
            Parcel {
                q: 0.01,
                p: 0.02,
                mass: 0.5,
            },
        ];
        let mut acc = vec![0.0; g.len()];
        deposit(&g, &mut acc, &parcels);
        let mass: f64 = acc.iter().sum::<f64>() * g.cell_area();
        assert!((mass - 1.0).abs() < 1e-14);
        // a parcel on a cell center lands entirely in that cell
        let mut one = vec![0.0; g.len()];
        deposit(
            &g,
            &mut one,
            &[Parcel {
                q: g.q(3),
                p: g.p(5),
                mass: 1.0,
            }],
        );
        assert!((one[g.index(3, 5)] * g.cell_area() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn escape_is_reported() {
        let g = PhaseGrid::square(1.0, 32).unwrap();
        let blob =
            WignerDensity::from_fn(g, SHO, |q, p| (-((q - 0.8).powi(2) + p * p) / 0.01).exp())
                .unwrap();
        let r = shell_transport_invariance(&blob, -1.0, 0.01);
        assert!(matches!(r, Err(Error::FlowEscapedGrid { .. })), "{r:?}");
        assert_eq!(shell_transport_invariance(&blob, 0.0, 0.01).unwrap(), 0.0);
    }
}
