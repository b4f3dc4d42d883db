//! Two weakly coupled Ehrenfest urn systems, used as a surrogate for the
//! two-subsystem thermodynamic experiments.
//!
//! Each subsystem holds a fixed number of balls split between a left and a
//! right urn; its entropy is `ln C(N, n_left)`. One step moves one ball
//! chosen uniformly from all balls of both subsystems to the other urn of its
//! own subsystem, so a subsystem's intrinsic rate is proportional to its
//! size. The coupling then lets each subsystem drag the other: with
//! probability `min(1, λ·|excess|)`, where `excess` is the donor's imbalance
//! `n_left - N/2`, a random ball of the receiver is placed in the donor's
//! majority urn. Ball counts are conserved exactly.

use alloc::vec;
use alloc::vec::Vec;
use num_traits::Float;
use rand::Rng as _;

use crate::error::{Error, Result};
use crate::rng::{derive, derive_indexed, rng_from, Rng};
use crate::stats::{ks_two_sample, mean, std_dev};

pub const MAX_COUPLING: f64 = 0.05;
pub const MIN_BALLS: u32 = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Urn {
    pub size: u32,
    pub left: u32,
}

impl Urn {
    pub fn right(&self) -> u32 {
        self.size - self.left
    }

    pub fn excess(&self) -> f64 {
        self.left as f64 - 0.5 * self.size as f64
    }

    fn ehrenfest(&mut self, rng: &mut Rng) {
        if rng.gen_range(0..self.size) < self.left {
            self.left -= 1;
        } else {
            self.left += 1;
        }
    }

    /// Moves a random ball into the left (`true`) or right urn.
    fn place(&mut self, rng: &mut Rng, left: bool) {
        let in_left = rng.gen_range(0..self.size) < self.left;
        match (in_left, left) {
            (false, true) => self.left += 1,
            (true, false) => self.left -= 1,
            _ => {}
        }
    }
}

/// Table of `ln C(N, n)` for `n = 0..=N`.
#[derive(Debug, Clone, PartialEq)]
pub struct EntropyTable(Vec<f64>);

impl EntropyTable {
    pub fn new(size: u32) -> Self {
        let mut t = Vec::with_capacity(size as usize + 1);
        let mut acc = 0.0;
        t.push(0.0);
        for k in 1..=size / 2 {
            acc += ((size - k + 1) as f64).ln() - (k as f64).ln();
            t.push(acc);
        }
        for k in size / 2 + 1..=size {
            t.push(t[(size - k) as usize]);
        }
        EntropyTable(t)
    }

    pub fn entropy(&self, left: u32) -> f64 {
        self.0[left as usize]
    }

    /// Largest entropy, attained at the even split.
    pub fn equilibrium(&self) -> f64 {
        self.0[self.0.len() / 2]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UrnPair {
    pub size_a: u32,
    pub size_b: u32,
    pub lambda: f64,
}

impl UrnPair {
    pub fn new(size_a: u32, size_b: u32, lambda: f64) -> Result<Self> {
        if size_b < MIN_BALLS || size_a < size_b {
            return Err(Error::InvalidArgument(
                "sizes must satisfy N_A >= N_B >= 8".into(),
            ));
        }
        Self::unchecked(size_a, size_b, lambda)
    }

    /// Like [`UrnPair::new`] but without the `N_A >= N_B` ordering, for the
    /// mirror scenario's injected asymmetries.
    pub fn unchecked(size_a: u32, size_b: u32, lambda: f64) -> Result<Self> {
        if size_a < MIN_BALLS || size_b < MIN_BALLS {
            return Err(Error::InvalidArgument(
                "each subsystem needs at least 8 balls".into(),
            ));
        }
        if !(0.0..=MAX_COUPLING).contains(&lambda) {
            return Err(Error::InvalidArgument(
                "coupling must lie in [0, 0.05]".into(),
            ));
        }
        Ok(UrnPair {
            size_a,
            size_b,
            lambda,
        })
    }

    pub fn uncoupled(&self) -> Self {
        UrnPair {
            lambda: 0.0,
            ..*self
        }
    }

    /// Coarse-graining window `max(N_A, 50)`.
    pub fn window(&self) -> usize {
        self.size_a.max(50) as usize
    }
}

/// Occupations `n_left` of both subsystems at every step, including step 0.
#[derive(Debug, Clone, PartialEq)]
pub struct UrnPath {
    pub left_a: Vec<u32>,
    pub left_b: Vec<u32>,
}

/// Runs the coupled dynamics for `steps` steps.
pub fn simulate(pair: &UrnPair, mut a: Urn, mut b: Urn, steps: usize, rng: &mut Rng) -> UrnPath {
    let mut left_a = Vec::with_capacity(steps + 1);
    let mut left_b = Vec::with_capacity(steps + 1);
    left_a.push(a.left);
    left_b.push(b.left);
    let total = a.size + b.size;
    for _ in 0..steps {
        if rng.gen_range(0..total) < a.size {
            a.ehrenfest(rng);
        } else {
            b.ehrenfest(rng);
        }
        if pair.lambda > 0.0 {
            let (ea, eb) = (a.excess(), b.excess());
            if rng.gen::<f64>() < (pair.lambda * ea.abs()).min(1.0) {
                b.place(rng, ea > 0.0);
            }
            if rng.gen::<f64>() < (pair.lambda * eb.abs()).min(1.0) {
                a.place(rng, eb > 0.0);
            }
        }
        left_a.push(a.left);
        left_b.push(b.left);
    }
    UrnPath { left_a, left_b }
}

fn equilibrium_urn(size: u32, rng: &mut Rng) -> Urn {
    let left = (0..size).filter(|_| rng.gen_bool(0.5)).count() as u32;
    Urn { size, left }
}

/// Means over consecutive full windows.
pub fn coarse_grain(series: &[f64], window: usize) -> Vec<f64> {
    series.chunks_exact(window.max(1)).map(mean).collect()
}

/// Largest drop between consecutive entries (zero for a nondecreasing series).
pub fn max_drop(series: &[f64]) -> f64 {
    series.windows(2).map(|w| w[0] - w[1]).fold(0.0, f64::max)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scenario {
    /// A starts with every ball in one urn, B at equilibrium.
    AsymmetricSizes,
    /// A and B both relax from one-urn states; B's record is then read
    /// backwards in time, so the pair's low-entropy ends are opposed.
    Mirror,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SchulmanOptions {
    /// Coarse-graining window; defaults to `max(N_A, 50)`.
    pub window: usize,
    /// Steps from the start over which B's displacement is averaged
    /// (three coarse-graining windows by default).
    pub displacement_window: usize,
    /// Reference runs used for calibration.
    pub reference_runs: usize,
    /// Quantile of the reference max drops used as the monotonicity tolerance.
    pub drop_quantile: f64,
    /// Significance level of the mirror symmetry test.
    pub alpha: f64,
    /// Thinning stride of the increments fed to the mirror test.
    pub mirror_stride: usize,
}

impl SchulmanOptions {
    pub fn new(pair: &UrnPair) -> Self {
        let w = pair.window();
        SchulmanOptions {
            window: w,
            displacement_window: 3 * w,
            reference_runs: 200,
            drop_quantile: 0.99,
            alpha: 0.05,
            mirror_stride: 5,
        }
    }
}

/// Equilibrium fluctuation scales used by the verdicts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Calibration {
    /// Allowed drop between consecutive coarse-grained composite entropies,
    /// taken from stationary runs of the coupled pair.
    pub drop_tol: f64,
    /// Mean of B's time-averaged entropy deficit without coupling.
    pub displacement_scale: f64,
    pub displacement_std: f64,
}

impl Calibration {
    /// Displacement above which B counts as driven out of equilibrium.
    pub fn threshold(&self) -> f64 {
        3.0 * self.displacement_scale
    }
}

fn entropy_series(table: &EntropyTable, left: &[u32]) -> Vec<f64> {
    left.iter().map(|n| table.entropy(*n)).collect()
}

fn displacement(table: &EntropyTable, left_b: &[u32], window: usize) -> f64 {
    let eq = table.equilibrium();
    let w = window.min(left_b.len());
    left_b[..w]
        .iter()
        .map(|n| eq - table.entropy(*n))
        .sum::<f64>()
        / w as f64
}

fn quantile(mut xs: Vec<f64>, q: f64) -> f64 {
    if xs.is_empty() {
        return 0.0;
    }
    xs.sort_by(|x, y| x.total_cmp(y));
    let k = ((q * xs.len() as f64).ceil() as usize).clamp(1, xs.len()) - 1;
    xs[k]
}

/// Calibrates the verdict thresholds. Drops are measured on the coupled pair
/// after a burn-in from equilibrium; the displacement scale on the uncoupled
/// pair started at equilibrium.
pub fn calibrate(pair: &UrnPair, steps: usize, seed: u64, opts: &SchulmanOptions) -> Calibration {
    let free = pair.uncoupled();
    let (ta, tb) = (
        EntropyTable::new(pair.size_a),
        EntropyTable::new(pair.size_b),
    );
    let burn_in = 10 * opts.window;
    let mut drops = Vec::with_capacity(opts.reference_runs);
    let mut disp = Vec::with_capacity(opts.reference_runs);
    for i in 0..opts.reference_runs {
        let mut rng = rng_from(derive_indexed(seed, i as u64));
        let a = equilibrium_urn(pair.size_a, &mut rng);
        let b = equilibrium_urn(pair.size_b, &mut rng);
        let path = simulate(&free, a, b, steps.min(opts.displacement_window), &mut rng);
        disp.push(displacement(&tb, &path.left_b, opts.displacement_window));

        let a = equilibrium_urn(pair.size_a, &mut rng);
        let b = equilibrium_urn(pair.size_b, &mut rng);
        let path = simulate(pair, a, b, burn_in + steps, &mut rng);
        let total: Vec<f64> = path.left_a[burn_in..]
            .iter()
            .zip(&path.left_b[burn_in..])
            .map(|(x, y)| ta.entropy(*x) + tb.entropy(*y))
            .collect();
        drops.push(max_drop(&coarse_grain(&total, opts.window)));
    }
    Calibration {
        drop_tol: quantile(drops, opts.drop_quantile),
        displacement_scale: mean(&disp),
        displacement_std: std_dev(&disp),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SchulmanRun {
    pub scenario: Scenario,
    pub s_a: Vec<f64>,
    pub s_b: Vec<f64>,
    /// Window means of `S_A + S_B`.
    pub coarse: Vec<f64>,
    pub max_drop: f64,
    /// Coarse-grained composite entropy never drops by more than the
    /// calibrated equilibrium tolerance.
    pub monotone: bool,
    /// Time average of `S_B^eq - S_B` over the displacement window.
    pub displacement: f64,
    /// Displacement exceeds three times the uncoupled scale.
    pub displaced: bool,
    /// Mirror scenario: KS p-value comparing A's entropy increments with the
    /// time-reversed increments of B.
    pub symmetry_p: Option<f64>,
    pub symmetric: Option<bool>,
}

/// Simulates one run and evaluates its verdicts against `cal`.
pub fn schulman_sim_with(
    pair: &UrnPair,
    steps: usize,
    seed: u64,
    scenario: Scenario,
    opts: &SchulmanOptions,
    cal: &Calibration,
) -> Result<SchulmanRun> {
    if steps < 2 * opts.window {
        return Err(Error::InvalidArgument(
            "need at least two coarse-graining windows".into(),
        ));
    }
    let mut rng = rng_from(seed);
    let (ta, tb) = (
        EntropyTable::new(pair.size_a),
        EntropyTable::new(pair.size_b),
    );
    let a = Urn {
        size: pair.size_a,
        left: pair.size_a,
    };
    let b = match scenario {
        Scenario::AsymmetricSizes => equilibrium_urn(pair.size_b, &mut rng),
        Scenario::Mirror => Urn {
            size: pair.size_b,
            left: pair.size_b,
        },
    };
    let mut path = simulate(pair, a, b, steps, &mut rng);
    if scenario == Scenario::Mirror {
        path.left_b.reverse();
    }
    let s_a = entropy_series(&ta, &path.left_a);
    let s_b = entropy_series(&tb, &path.left_b);
    let total: Vec<f64> = s_a.iter().zip(&s_b).map(|(x, y)| x + y).collect();
    let coarse = coarse_grain(&total, opts.window);
    let drop = max_drop(&coarse);
    let disp = displacement(&tb, &path.left_b, opts.displacement_window);
    let (symmetry_p, symmetric) = match scenario {
        Scenario::Mirror => {
            let p = mirror_symmetry_p(&s_a, &s_b, opts.mirror_stride);
            (Some(p), Some(p >= opts.alpha))
        }
        Scenario::AsymmetricSizes => (None, None),
    };
    Ok(SchulmanRun {
        scenario,
        s_a,
        s_b,
        coarse,
        max_drop: drop,
        monotone: drop <= cal.drop_tol,
        displacement: disp,
        displaced: disp > cal.threshold(),
        symmetry_p,
        symmetric,
    })
}

/// Two-sample KS test between A's one-step entropy increments and those of B
/// read backwards in time, both thinned to one sample per `stride` steps.
pub fn mirror_symmetry_p(s_a: &[f64], s_b: &[f64], stride: usize) -> f64 {
    let stride = stride.max(1);
    let fwd: Vec<f64> = s_a
        .windows(2)
        .step_by(stride)
        .map(|w| w[1] - w[0])
        .collect();
    let rev: Vec<f64> = s_b
        .windows(2)
        .rev()
        .step_by(stride)
        .map(|w| w[0] - w[1])
        .collect();
    ks_two_sample(&fwd, &rev).p_value
}

/// Single run with its own calibration drawn from a stream derived from `seed`.
pub fn schulman_sim(
    pair: &UrnPair,
    steps: usize,
    seed: u64,
    scenario: Scenario,
) -> Result<SchulmanRun> {
    let opts = SchulmanOptions::new(pair);
    let cal = calibrate(pair, steps, derive(seed, "urn-reference"), &opts);
    schulman_sim_with(pair, steps, seed, scenario, &opts, &cal)
}

/// Seed of run `index` of an ensemble.
pub fn run_seed(seed: u64, index: usize) -> u64 {
    derive_indexed(derive(seed, "urn-runs"), index as u64)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnsembleSummary {
    pub runs: usize,
    pub monotone_fraction: f64,
    pub displaced_fraction: f64,
    /// Mirror scenario only.
    pub symmetric_fraction: Option<f64>,
}

pub fn summarize(runs: &[SchulmanRun]) -> EnsembleSummary {
    let n = runs.len().max(1) as f64;
    let frac = |f: &dyn Fn(&SchulmanRun) -> bool| runs.iter().filter(|r| f(r)).count() as f64 / n;
    let mirror = runs.iter().all(|r| r.symmetric.is_some()) && !runs.is_empty();
    EnsembleSummary {
        runs: runs.len(),
        monotone_fraction: frac(&|r| r.monotone),
        displaced_fraction: frac(&|r| r.displaced),
        symmetric_fraction: mirror.then(|| frac(&|r| r.symmetric == Some(true))),
    }
}

/// Runs `runs` seeded simulations against one shared calibration.
pub fn schulman_ensemble(
    pair: &UrnPair,
    steps: usize,
    runs: usize,
    seed: u64,
    scenario: Scenario,
) -> Result<(Calibration, Vec<SchulmanRun>)> {
    let opts = SchulmanOptions::new(pair);
    let cal = calibrate(pair, steps, derive(seed, "urn-reference"), &opts);
    let out = (0..runs)
        .map(|i| schulman_sim_with(pair, steps, run_seed(seed, i), scenario, &opts, &cal))
        .collect::<Result<Vec<_>>>()?;
    Ok((cal, out))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn entropy_table_matches_binomials() {
        let t = EntropyTable::new(10);
        assert!((t.entropy(3) - 120f64.ln()).abs() < 1e-12);
        assert_eq!(t.entropy(0), 0.0);
        assert!((t.equilibrium() - 252f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn pair_validation() {
        assert!(UrnPair::new(200, 20, 0.01).is_ok());
        assert!(UrnPair::new(20, 200, 0.01).is_err());
        assert!(UrnPair::new(200, 4, 0.01).is_err());
        assert!(UrnPair::new(200, 20, 0.06).is_err());
        assert!(UrnPair::unchecked(60, 100, 0.01).is_ok());
    }

    #[test]
    fn helpers() {
        assert_eq!(coarse_grain(&[1.0, 3.0, 5.0, 7.0, 9.0], 2), vec![2.0, 6.0]);
        assert_eq!(max_drop(&[1.0, 2.0, 1.5, 4.0, 0.0]), 4.0);
        assert_eq!(max_drop(&[1.0, 2.0]), 0.0);
    }

    #[test]
    fn balls_stay_in_range() {
        let pair = UrnPair::new(30, 10, 0.05).unwrap();
        let mut rng = rng_from(1);
        let p = simulate(
            &pair,
            Urn { size: 30, left: 30 },
            Urn { size: 10, left: 0 },
            5000,
            &mut rng,
        );
        assert!(p.left_a.iter().all(|n| *n <= 30) && p.left_b.iter().all(|n| *n <= 10));
        assert_eq!(p.left_a.len(), 5001);
    }
}
