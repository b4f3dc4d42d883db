//! Coarse-grained measures of the time-symmetric sets in the reduced FRW phase
//! space `(ȧ, φ, φ̇)`, with `a` fixed by the Hamiltonian constraint.
//!
//! Grains are max-norm boxes: a point is within grain `ε` of a set when its
//! max-norm distance to the set is below `ε/2`. All scans share one stream of
//! uniform cube samples per seed (common random numbers), split into fixed
//! chunks whose seeds depend only on the chunk index.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use num_traits::Float;
use rand::Rng;

use crate::cosmology::{
    detect_cosmo_symmetry, evolve_cosmo_two_sided, evolve_cosmo_until, CosmoOptions, CosmoState,
    FRWModel,
};
use crate::error::{Error, Result};
use crate::rng;
use crate::stats::{binomial_stderr, fit_line, LineFit};

pub const MIN_SAMPLES: usize = 10_000;
pub const MIN_HITS: u64 = 30;
/// Samples per independently seeded chunk.
pub const CHUNK: usize = 1 << 15;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeasureMode {
    AxisSet,
    SolutionTube,
    Dynamic,
}

#[derive(Debug, Clone)]
pub struct MeasureScanConfig {
    /// Side of the centered sampling cube.
    pub l: f64,
    pub epsilons: Vec<f64>,
    pub n_samples: usize,
    pub seed: u64,
    pub model: FRWModel,
    pub mode: MeasureMode,
}

impl MeasureScanConfig {
    pub fn new(
        l: f64,
        epsilons: Vec<f64>,
        n_samples: usize,
        seed: u64,
        model: FRWModel,
        mode: MeasureMode,
    ) -> Result<Self> {
        let cfg = MeasureScanConfig {
            l,
            epsilons,
            n_samples,
            seed,
            model,
            mode,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.l > 0.0) || !self.l.is_finite() {
            return Err(Error::InvalidArgument("cube side must be positive".into()));
        }
        if self.epsilons.is_empty() {
            return Err(Error::InvalidArgument("no grain sizes given".into()));
        }
        if let Some(e) = self
            .epsilons
            .iter()
            .find(|&&e| !(e > 0.0 && e < self.l / 4.0))
        {
            return Err(Error::InvalidArgument(alloc::format!(
                "grain {e} outside (0, L/4)"
            )));
        }
        if self.n_samples < MIN_SAMPLES {
            return Err(Error::InvalidArgument(alloc::format!(
                "need at least {MIN_SAMPLES} samples"
            )));
        }
        Ok(())
    }

    pub fn chunks(&self) -> usize {
        self.n_samples.div_ceil(CHUNK)
    }
}

/// Max-norm distance of `(ȧ, φ, φ̇)` to the nearer of the axes `(0, φ, 0)`
/// and `(0, 0, φ̇)`.
pub fn axis_distance(p: &[f64; 3]) -> f64 {
    let field_axis = p[0].abs().max(p[2].abs());
    let velocity_axis = p[0].abs().max(p[1].abs());
    field_axis.min(velocity_axis)
}

pub fn axis_membership(p: &[f64; 3], eps: f64) -> bool {
    axis_distance(p) < 0.5 * eps
}

/// Uniform samples of chunk `chunk` of the cube `[-l/2, l/2]³`.
pub fn cube_chunk(seed: u64, l: f64, n_samples: usize, chunk: usize) -> Vec<[f64; 3]> {
    let start = chunk * CHUNK;
    let len = n_samples.saturating_sub(start).min(CHUNK);
    let mut r = rng::rng_from(rng::derive_indexed(rng::derive(seed, "cube"), chunk as u64));
    let h = 0.5 * l;
    (0..len)
        .map(|_| [r.gen_range(-h..h), r.gen_range(-h..h), r.gen_range(-h..h)])
        .collect()
}

/// Per-grain hit counts of a set of distances (hit when `d < ε/2`).
pub fn count_hits(distances: impl IntoIterator<Item = f64>, epsilons: &[f64]) -> Vec<u64> {
    let mut hits = vec![0u64; epsilons.len()];
    for d in distances {
        for (h, e) in hits.iter_mut().zip(epsilons) {
            if d < 0.5 * e {
                *h += 1;
            }
        }
    }
    hits
}

pub fn predicted_fraction(mode: MeasureMode, eps: f64, l: f64) -> f64 {
    match mode {
        MeasureMode::AxisSet | MeasureMode::Dynamic => 2.0 * (eps / l) * (eps / l),
        MeasureMode::SolutionTube => 2.0 * eps / l,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpsilonEstimate {
    pub epsilon: f64,
    pub hits: u64,
    pub n: u64,
    pub fraction: f64,
    pub stderr: f64,
    pub predicted: f64,
    /// The grain exceeds the cube and the fraction was clamped to 1.
    pub saturated: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MeasureScanResult {
    pub mode: MeasureMode,
    pub estimates: Vec<EpsilonEstimate>,
    /// Least-squares fit of `ln fraction` against `ln ε`.
    pub fit: LineFit,
    /// 95% interval on the slope.
    pub slope_ci: (f64, f64),
}

impl MeasureScanResult {
    pub fn slope(&self) -> f64 {
        self.fit.slope
    }
}

/// Turns per-grain hit counts into estimates and the log-log slope.
pub fn assemble_result(
    mode: MeasureMode,
    l: f64,
    epsilons: &[f64],
    hits: &[u64],
    n: u64,
) -> Result<MeasureScanResult> {
    let mut estimates = Vec::with_capacity(epsilons.len());
    for (&epsilon, &h) in epsilons.iter().zip(hits) {
        let saturated = epsilon >= l;
        if h < MIN_HITS && !saturated {
            return Err(Error::InsufficientHits {
                epsilon,
                hits: h,
                needed: MIN_HITS,
            });
        }
        let (fraction, stderr) = if saturated {
            (1.0, 0.0)
        } else {
            (h as f64 / n as f64, binomial_stderr(h, n))
        };
        estimates.push(EpsilonEstimate {
            epsilon,
            hits: h,
            n,
            fraction,
            stderr,
            predicted: predicted_fraction(mode, epsilon, l).min(1.0),
            saturated,
        });
    }
    let xs: Vec<f64> = estimates.iter().map(|e| e.epsilon.ln()).collect();
    let ys: Vec<f64> = estimates.iter().map(|e| e.fraction.ln()).collect();
    let fit = fit_line(&xs, &ys)
        .ok_or_else(|| Error::InvalidArgument("need at least two distinct grain sizes".into()))?;
    let w = fit.slope_ci95();
    Ok(MeasureScanResult {
        mode,
        estimates,
        fit,
        slope_ci: (fit.slope - w, fit.slope + w),
    })
}

/// Axis-set hit counts of one chunk.
pub fn axis_hits_chunk(cfg: &MeasureScanConfig, chunk: usize) -> Vec<u64> {
    let pts = cube_chunk(cfg.seed, cfg.l, cfg.n_samples, chunk);
    count_hits(pts.iter().map(axis_distance), &cfg.epsilons)
}

pub fn sum_hits(parts: impl IntoIterator<Item = Vec<u64>>, len: usize) -> Vec<u64> {
    let mut total = vec![0u64; len];
    for p in parts {
        for (t, h) in total.iter_mut().zip(p) {
            *t += h;
        }
    }
    total
}

/// Fraction of uniform cube samples within grain of the symmetry axes.
pub fn scan_axis_measure(cfg: &MeasureScanConfig) -> Result<MeasureScanResult> {
    cfg.validate()?;
    if cfg.mode != MeasureMode::AxisSet {
        return Err(Error::InvalidArgument(
            "axis scan needs mode AxisSet".into(),
        ));
    }
    let hits = sum_hits(
        (0..cfg.chunks()).map(|c| axis_hits_chunk(cfg, c)),
        cfg.epsilons.len(),
    );
    assemble_result(cfg.mode, cfg.l, &cfg.epsilons, &hits, cfg.n_samples as u64)
}

/// The two lines of turning-point data from which all time-symmetric
/// solutions are propagated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SymmetryAxis {
    /// `(0, φ, 0)`: even field reflection.
    Field,
    /// `(0, 0, φ̇)`: odd field reflection.
    Velocity,
}

impl SymmetryAxis {
    /// Image of `(ȧ, φ, φ̇)` at time `-t` given its value at `t`.
    fn mirror(&self, p: [f64; 3]) -> [f64; 3] {
        match self {
            SymmetryAxis::Field => [-p[0], p[1], -p[2]],
            SymmetryAxis::Velocity => [-p[0], -p[1], p[2]],
        }
    }
}

/// Constraint-satisfying state at axis coordinate `u`.
pub fn axis_state(axis: SymmetryAxis, u: f64, model: &FRWModel) -> Result<CosmoState> {
    match axis {
        SymmetryAxis::Field => CosmoState::on_constraint(0.0, u, 0.0, model),
        SymmetryAxis::Velocity => CosmoState::on_constraint(0.0, 0.0, u, model),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurfaceOptions {
    /// Side of the centered cube the surfaces are needed in.
    pub l: f64,
    /// Target max-norm spacing between neighbouring mesh points.
    pub spacing: f64,
    /// Initial number of axis points per family.
    pub seeds: usize,
    /// Output step of each propagated trajectory.
    pub step: f64,
    /// Phase-space arclength followed on each side of the turning point.
    pub arc_length: f64,
    /// Longest propagation in each time direction.
    pub t_max: f64,
    /// Maximum number of bisections between two initial axis points.
    pub max_depth: u32,
    /// Axis points with `|u|` below this are left out.
    pub core: f64,
}

impl SurfaceOptions {
    pub fn new(l: f64, spacing: f64) -> Self {
        SurfaceOptions {
            l,
            spacing,
            seeds: 50,
            step: 0.01,
            arc_length: 0.5 * l,
            t_max: 10.0,
            max_depth: 16,
            core: 0.0,
        }
    }
}

/// One propagated axis point, sampled at uniform times symmetric about the
/// turning point.
#[derive(Debug, Clone, PartialEq)]
pub struct SurfaceRow {
    pub u: f64,
    /// `(ȧ, φ, φ̇)` samples; the turning point is at index `center`.
    pub points: Vec<[f64; 3]>,
    pub center: usize,
}

impl SurfaceRow {}

#[derive(Debug, Clone, PartialEq)]
pub struct SurfaceFamily {
    pub axis: SymmetryAxis,
    /// Rows ordered by axis coordinate.
    pub rows: Vec<SurfaceRow>,
    /// Largest max-norm gap between neighbouring rows inside the cube.
    pub spacing: f64,
    /// Axis points whose propagation failed, with the reason.
    pub failures: Vec<(f64, String)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricSurfaces {
    pub l: f64,
    pub families: [SurfaceFamily; 2],
}

impl SymmetricSurfaces {
    pub fn spacing(&self) -> f64 {
        self.families[0].spacing.max(self.families[1].spacing)
    }

    pub fn trajectory_count(&self) -> usize {
        self.families.iter().map(|f| f.rows.len()).sum()
    }
}

fn max_norm(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    (a[0] - b[0])
        .abs()
        .max((a[1] - b[1]).abs())
        .max((a[2] - b[2]).abs())
}

fn in_box(p: &[f64; 3], half: f64) -> bool {
    p.iter().all(|v| v.abs() <= half)
}

/// Propagates one axis point forward until its `(ȧ, φ, φ̇)` arclength reaches
/// `arc_length`, it collapses out of the cube (`ȧ < -l`) or `t_max` passes,
/// and mirrors the result into the past.
pub fn surface_row(
    axis: SymmetryAxis,
    u: f64,
    model: &FRWModel,
    opts: &SurfaceOptions,
) -> Result<SurfaceRow> {
    let s = axis_state(axis, u, model)?;
    let limit = opts.l;
    let mut prev = [s.a_dot, s.phi, s.phi_dot];
    let mut arc = 0.0;
    let run = evolve_cosmo_until(
        &s,
        model,
        opts.t_max,
        opts.step,
        &CosmoOptions::default(),
        |x| {
            let p = [x[2], x[1], x[3]];
            arc += ((p[0] - prev[0]).powi(2) + (p[1] - prev[1]).powi(2) + (p[2] - prev[2]).powi(2))
                .sqrt();
            prev = p;
            arc >= opts.arc_length || x[2] < -limit
        },
    )?;
    let mut fwd: Vec<[f64; 3]> = Vec::with_capacity(run.trajectory.len());
    let mut arc = 0.0;
    for i in 0..run.trajectory.len() {
        let x = run.trajectory.state(i);
        let p = [x[2], x[1], x[3]];
        if let Some(q) = fwd.last().copied() {
            let d = ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2) + (p[2] - q[2]).powi(2)).sqrt();
            if arc + d >= opts.arc_length {
                // end exactly at the requested arclength
                let t = if d > 0.0 {
                    (opts.arc_length - arc) / d
                } else {
                    0.0
                };
                fwd.push([
                    q[0] + t * (p[0] - q[0]),
                    q[1] + t * (p[1] - q[1]),
                    q[2] + t * (p[2] - q[2]),
                ]);
                break;
            }
            arc += d;
        }
        fwd.push(p);
    }
    let mut points: Vec<[f64; 3]> = fwd[1..].iter().rev().map(|p| axis.mirror(*p)).collect();
    let center = points.len();
    points.extend_from_slice(&fwd);
    Ok(SurfaceRow { u, points, center })
}

fn segment_distance(p: &[f64; 3], a: &[f64; 3], b: &[f64; 3]) -> f64 {
    let d = [b[0] - a[0], b[1] - a[1], b[2] - a[2]];
    let w = [p[0] - a[0], p[1] - a[1], p[2] - a[2]];
    let dd = d[0] * d[0] + d[1] * d[1] + d[2] * d[2];
    let t = if dd > 0.0 {
        ((w[0] * d[0] + w[1] * d[1] + w[2] * d[2]) / dd).clamp(0.0, 1.0)
    } else {
        0.0
    };
    let q = [a[0] + t * d[0], a[1] + t * d[1], a[2] + t * d[2]];
    max_norm(p, &q)
}

const KEY_BIAS: i64 = 1 << 20;

fn cell_of(p: &[f64; 3], cell: f64) -> [i64; 3] {
    [
        (p[0] / cell).floor() as i64,
        (p[1] / cell).floor() as i64,
        (p[2] / cell).floor() as i64,
    ]
}

fn cell_key(c: [i64; 3]) -> u64 {
    let f = |v: i64| ((v + KEY_BIAS).clamp(0, (1 << 21) - 1)) as u64;
    (f(c[0]) << 42) | (f(c[1]) << 21) | f(c[2])
}

/// Points bucketed by cubic cell; buckets are found by binary search over the
/// sorted cell keys.
#[derive(Debug, Clone)]
pub struct CellIndex {
    cell: f64,
    keys: Vec<u64>,
    points: Vec<[f64; 3]>,
    /// Position of each bucketed point in the caller's original sequence.
    ids: Vec<usize>,
}

impl CellIndex {
    pub fn new(points: impl IntoIterator<Item = (usize, [f64; 3])>, cell: f64) -> Self {
        let mut entries: Vec<(u64, usize, [f64; 3])> = points
            .into_iter()
            .map(|(id, p)| (cell_key(cell_of(&p, cell)), id, p))
            .collect();
        entries.sort_by_key(|e| (e.0, e.1));
        CellIndex {
            cell,
            keys: entries.iter().map(|e| e.0).collect(),
            ids: entries.iter().map(|e| e.1).collect(),
            points: entries.iter().map(|e| e.2).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Nearest point in max-norm no farther than `rmax`, as `(distance, id)`.
    pub fn nearest(&self, p: &[f64; 3], rmax: f64) -> Option<(f64, usize)> {
        let c = cell_of(p, self.cell);
        let reach = (rmax / self.cell).ceil() as i64;
        let mut best: Option<(f64, usize)> = None;
        for ring in 0..=reach {
            for dx in -ring..=ring {
                for dy in -ring..=ring {
                    for dz in -ring..=ring {
                        if dx.abs().max(dy.abs()).max(dz.abs()) != ring {
                            continue;
                        }
                        let key = cell_key([c[0] + dx, c[1] + dy, c[2] + dz]);
                        let start = self.keys.partition_point(|&k| k < key);
                        for i in start..self.keys.len() {
                            if self.keys[i] != key {
                                break;
                            }
                            let d = max_norm(p, &self.points[i]);
                            if d <= rmax && best.is_none_or(|b| d < b.0) {
                                best = Some((d, self.ids[i]));
                            }
                        }
                    }
                }
            }
            // every cell beyond this ring is at least `ring * cell` away
            if best.is_some_and(|b| b.0 <= ring as f64 * self.cell) {
                break;
            }
        }
        best
    }
}

/// Largest distance (capped at `rmax`) from an in-box sample of `a` to the
/// polyline through the samples of `b`.
fn directed_gap(a: &SurfaceRow, b: &SurfaceRow, half: f64, rmax: f64) -> f64 {
    let near = half + rmax;
    let index = CellIndex::new(
        b.points
            .iter()
            .copied()
            .enumerate()
            .filter(|(_, p)| in_box(p, near)),
        0.5 * rmax,
    );
    let mut gap: f64 = 0.0;
    for p in a.points.iter().filter(|p| in_box(p, half)) {
        let Some((mut d, k)) = index.nearest(p, rmax) else {
            return rmax;
        };
        if k > 0 {
            d = d.min(segment_distance(p, &b.points[k - 1], &b.points[k]));
        }
        if k + 1 < b.points.len() {
            d = d.min(segment_distance(p, &b.points[k], &b.points[k + 1]));
        }
        gap = gap.max(d);
    }
    gap
}

/// Symmetric curve gap between two rows inside the box of half-width `half`,
/// capped at `rmax`.
pub fn row_gap(a: &SurfaceRow, b: &SurfaceRow, half: f64, rmax: f64) -> f64 {
    directed_gap(a, b, half, rmax).max(directed_gap(b, a, half, rmax))
}

/// Builds one family, bisecting between neighbouring axis points until the
/// in-cube gap falls below the target spacing or the depth limit is reached.
pub fn build_family(
    axis: SymmetryAxis,
    model: &FRWModel,
    opts: &SurfaceOptions,
) -> Result<SurfaceFamily> {
    if !(opts.l > 0.0) || !(opts.spacing > 0.0) || opts.seeds < 2 {
        return Err(Error::InvalidArgument(
            "surface options need l, spacing > 0 and two seeds".into(),
        ));
    }
    let half = 0.5 * opts.l;
    let margin = half + opts.spacing;
    let n = opts.seeds;
    let mut failures = Vec::new();
    let row = |u: f64, failures: &mut Vec<(f64, String)>| match surface_row(axis, u, model, opts) {
        Ok(r) => Some(r),
        Err(e) => {
            failures.push((u, alloc::format!("{e}")));
            None
        }
    };
    let seeds: Vec<f64> = (0..n)
        .map(|i| -half + opts.l * (i as f64 + 0.5) / n as f64)
        .filter(|u| u.abs() >= opts.core)
        .collect();
    let mut rows: Vec<SurfaceRow> = Vec::new();
    let mut spacing: f64 = 0.0;
    let mut prev: Option<SurfaceRow> = None;
    for &u in &seeds {
        let Some(r) = row(u, &mut failures) else {
            prev = None;
            continue;
        };
        if let Some(p) = prev.take() {
            // no turning point sits at u = 0 for a potential vanishing there,
            // so the two signs are refined separately
            if p.u.signum() == r.u.signum() {
                let mut stack = vec![(p.clone(), r.clone(), 0u32)];
                let mut inserted = Vec::new();
                while let Some((a, b, depth)) = stack.pop() {
                    let gap = row_gap(&a, &b, margin, 8.0 * opts.spacing);
                    if gap <= opts.spacing || depth >= opts.max_depth {
                        spacing = spacing.max(gap);
                        continue;
                    }
                    match row(0.5 * (a.u + b.u), &mut failures) {
                        Some(mid) => {
                            stack.push((a, mid.clone(), depth + 1));
                            stack.push((mid.clone(), b, depth + 1));
                            inserted.push(mid);
                        }
                        None => spacing = spacing.max(gap),
                    }
                }
                rows.extend(inserted);
            }
            rows.push(p);
        }
        prev = Some(r);
    }
    if let Some(p) = prev {
        rows.push(p);
    }
    rows.sort_by(|a, b| a.u.total_cmp(&b.u));
    rows.dedup_by(|a, b| a.u == b.u);
    Ok(SurfaceFamily {
        axis,
        rows,
        spacing,
        failures,
    })
}

pub fn build_symmetric_surfaces(
    model: &FRWModel,
    opts: &SurfaceOptions,
) -> Result<SymmetricSurfaces> {
    Ok(SymmetricSurfaces {
        l: opts.l,
        families: [
            build_family(SymmetryAxis::Field, model, opts)?,
            build_family(SymmetryAxis::Velocity, model, opts)?,
        ],
    })
}

/// Points bucketed on a dense grid of cubic cells over a box.
#[derive(Debug, Clone)]
struct GridIndex {
    lo: f64,
    cell: f64,
    n: usize,
    starts: Vec<u32>,
    points: Vec<[f64; 3]>,
}

impl GridIndex {
    fn new(points: &[[f64; 3]], lo: f64, hi: f64, cell: f64) -> Self {
        let n = (((hi - lo) / cell).ceil() as usize).max(1);
        let slot = |p: &[f64; 3]| -> usize {
            let c = |v: f64| (((v - lo) / cell).floor().max(0.0) as usize).min(n - 1);
            (c(p[0]) * n + c(p[1])) * n + c(p[2])
        };
        let mut starts = vec![0u32; n * n * n + 1];
        for p in points {
            starts[slot(p) + 1] += 1;
        }
        for i in 0..n * n * n {
            starts[i + 1] += starts[i];
        }
        let mut fill = starts.clone();
        let mut sorted = vec![[0.0; 3]; points.len()];
        for p in points {
            let s = slot(p);
            sorted[fill[s] as usize] = *p;
            fill[s] += 1;
        }
        GridIndex {
            lo,
            cell,
            n,
            starts,
            points: sorted,
        }
    }

    /// Max-norm distance to the nearest point, or infinity beyond `rmax`.
    fn distance(&self, p: &[f64; 3], rmax: f64) -> f64 {
        let c: [i64; 3] = core::array::from_fn(|k| ((p[k] - self.lo) / self.cell).floor() as i64);
        let reach = (rmax / self.cell).ceil() as i64;
        let n = self.n as i64;
        let mut best = f64::INFINITY;
        for ring in 0..=reach {
            for dx in -ring..=ring {
                let x = c[0] + dx;
                if x < 0 || x >= n {
                    continue;
                }
                for dy in -ring..=ring {
                    let y = c[1] + dy;
                    if y < 0 || y >= n {
                        continue;
                    }
                    let edge = dx.abs() == ring || dy.abs() == ring;
                    let mut dz = -ring;
                    while dz <= ring {
                        let z = c[2] + dz;
                        if z >= 0 && z < n {
                            let s = ((x * n + y) * n + z) as usize;
                            for q in
                                &self.points[self.starts[s] as usize..self.starts[s + 1] as usize]
                            {
                                best = best.min(max_norm(p, q));
                            }
                        }
                        // interior columns only need the two end cells of the ring
                        dz += if edge || dz == ring { 1 } else { 2 * ring };
                    }
                }
            }
            if best <= ring as f64 * self.cell {
                break;
            }
        }
        if best <= rmax {
            best
        } else {
            f64::INFINITY
        }
    }
}

/// Point cloud of both surface families with along-row spacing at most the
/// family spacing, restricted to the cube grown by the query radius.
#[derive(Debug, Clone)]
pub struct SurfaceMesh {
    pub l: f64,
    pub spacing: f64,
    /// Largest query radius the mesh supports.
    pub rmax: f64,
    index: GridIndex,
}

impl SurfaceMesh {
    pub fn new(surfaces: &SymmetricSurfaces, rmax: f64) -> Result<Self> {
        let spacing = surfaces.spacing().max(f64::MIN_POSITIVE);
        let step = surfaces
            .families
            .iter()
            .map(|f| if f.spacing > 0.0 { f.spacing } else { spacing })
            .fold(f64::INFINITY, f64::min);
        let half = 0.5 * surfaces.l + rmax;
        let mut points = Vec::new();
        for fam in &surfaces.families {
            for row in &fam.rows {
                densify_row(&row.points, step, half, &mut points);
            }
        }
        if points.is_empty() {
            return Err(Error::InvalidArgument(
                "surfaces have no points inside the cube".into(),
            ));
        }
        let cell = (0.5 * rmax).max(2.0 * half / 160.0);
        Ok(SurfaceMesh {
            l: surfaces.l,
            spacing,
            rmax,
            index: GridIndex::new(&points, -half, half, cell),
        })
    }

    pub fn len(&self) -> usize {
        self.index.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.index.points.is_empty()
    }

    /// Max-norm distance to the mesh; infinity beyond `rmax`.
    pub fn distance(&self, p: &[f64; 3]) -> f64 {
        self.index.distance(p, self.rmax)
    }
}

/// Appends the in-box part of a polyline with consecutive points no more than
/// `step` apart, dropping samples closer than `step / 2` to the last kept one.
fn densify_row(row: &[[f64; 3]], step: f64, half: f64, out: &mut Vec<[f64; 3]>) {
    let mut last: Option<[f64; 3]> = None;
    for w in row.windows(2) {
        let (a, b) = (w[0], w[1]);
        if !in_box(&a, half) && !in_box(&b, half) {
            last = None;
            continue;
        }
        let pieces = (max_norm(&a, &b) / step).ceil().max(1.0) as usize;
        for k in 0..=pieces {
            let t = k as f64 / pieces as f64;
            let p = [
                a[0] + t * (b[0] - a[0]),
                a[1] + t * (b[1] - a[1]),
                a[2] + t * (b[2] - a[2]),
            ];
            if !in_box(&p, half) {
                continue;
            }
            if last.is_some_and(|q| max_norm(&p, &q) < 0.5 * step) {
                continue;
            }
            out.push(p);
            last = Some(p);
        }
    }
}

/// Tube hit counts of one chunk of cube samples.
pub fn tube_hits_chunk(cfg: &MeasureScanConfig, mesh: &SurfaceMesh, chunk: usize) -> Vec<u64> {
    let pts = cube_chunk(cfg.seed, cfg.l, cfg.n_samples, chunk);
    count_hits(pts.iter().map(|p| mesh.distance(p)), &cfg.epsilons)
}

/// Fraction of `samples` within grain `eps` of the mesh; grains at least as
/// large as the cube saturate at 1 (second value true).
pub fn tube_fraction(mesh: &SurfaceMesh, samples: &[[f64; 3]], eps: f64) -> (f64, bool) {
    if eps >= mesh.l {
        return (1.0, true);
    }
    let hits = samples
        .iter()
        .filter(|p| mesh.distance(p) < 0.5 * eps)
        .count();
    (hits as f64 / samples.len().max(1) as f64, false)
}

/// Checks that the surfaces resolve the smallest grain and builds their mesh.
pub fn tube_mesh(cfg: &MeasureScanConfig, surfaces: &SymmetricSurfaces) -> Result<SurfaceMesh> {
    let e_min = cfg.epsilons.iter().copied().fold(f64::INFINITY, f64::min);
    let e_max = cfg.epsilons.iter().copied().fold(0.0, f64::max);
    let limit = 0.25 * e_min;
    if surfaces.spacing() > limit * (1.0 + 1e-9) {
        return Err(Error::MeshTooCoarse {
            spacing: surfaces.spacing(),
            limit,
        });
    }
    SurfaceMesh::new(surfaces, 0.5 * e_max)
}

/// Fraction of uniform cube samples within grain of either symmetric surface.
pub fn scan_tube_measure(
    cfg: &MeasureScanConfig,
    surfaces: &SymmetricSurfaces,
) -> Result<MeasureScanResult> {
    cfg.validate()?;
    if cfg.mode != MeasureMode::SolutionTube {
        return Err(Error::InvalidArgument(
            "tube scan needs mode SolutionTube".into(),
        ));
    }
    let mesh = tube_mesh(cfg, surfaces)?;
    let hits = sum_hits(
        (0..cfg.chunks()).map(|c| tube_hits_chunk(cfg, &mesh, c)),
        cfg.epsilons.len(),
    );
    assemble_result(cfg.mode, cfg.l, &cfg.epsilons, &hits, cfg.n_samples as u64)
}

/// Largest relative change of the per-grain fractions between two scans.
pub fn fraction_change(a: &MeasureScanResult, b: &MeasureScanResult) -> f64 {
    a.estimates
        .iter()
        .zip(&b.estimates)
        .map(|(x, y)| {
            (x.fraction - y.fraction).abs() / x.fraction.max(y.fraction).max(f64::MIN_POSITIVE)
        })
        .fold(0.0, f64::max)
}

/// Tube scan with the mesh spacing halved until every fraction moves by
/// less than 5% (at most `max_refinements` halvings).
pub fn scan_tube_measure_converged(
    cfg: &MeasureScanConfig,
    base: &SurfaceOptions,
    max_refinements: u32,
) -> Result<(MeasureScanResult, SymmetricSurfaces)> {
    let e_min = cfg.epsilons.iter().copied().fold(f64::INFINITY, f64::min);
    let mut opts = *base;
    opts.l = cfg.l;
    opts.spacing = 0.25 * e_min;
    let mut surfaces = build_symmetric_surfaces(&cfg.model, &opts)?;
    let mut result = scan_tube_measure(cfg, &surfaces)?;
    for _ in 0..max_refinements {
        opts.spacing *= 0.5;
        let finer = build_symmetric_surfaces(&cfg.model, &opts)?;
        let next = scan_tube_measure(cfg, &finer)?;
        let change = fraction_change(&result, &next);
        surfaces = finer;
        result = next;
        if change < 0.05 {
            break;
        }
    }
    Ok((result, surfaces))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CensusOptions {
    /// Grain of the axis neighbourhoods.
    pub eps: f64,
    /// Half-width of the integration window around each sample.
    pub window: f64,
    pub step: f64,
    /// Relative tolerance handed to the symmetry detector.
    pub tol: f64,
}

impl CensusOptions {
    pub fn new(eps: f64) -> Self {
        CensusOptions {
            eps,
            window: 2.0,
            step: 0.01,
            tol: 1e-4,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CensusSample {
    pub point: [f64; 3],
    /// Static route: the point lies in a grain neighbourhood of an axis.
    pub axis_member: bool,
    /// Dynamic route: the integrated path reflects about the sample time to
    /// within half a grain (max-norm, both parities tried).
    pub grain_symmetric: bool,
    /// The detector found a symmetry center anywhere in the window.
    pub detected: bool,
    pub max_residual: f64,
}

/// Integrates `point` over `±window` and classifies it by both routes.
pub fn census_sample(
    model: &FRWModel,
    point: [f64; 3],
    opts: &CensusOptions,
) -> Result<CensusSample> {
    let s = CosmoState::on_constraint(point[0], point[1], point[2], model)?;
    let run = evolve_cosmo_two_sided(&s, model, opts.window, opts.window, opts.step)?;
    let tr = &run.trajectory;
    let i0 = tr
        .times()
        .iter()
        .position(|&t| t == s.t)
        .ok_or(Error::SingularState)?;
    let grain_symmetric = if i0 >= 1 && i0 + 1 < tr.len() {
        let (p, m) = (tr.state(i0 + 1), tr.state(i0 - 1));
        let a_dot = 0.5 * (p[2] + m[2]).abs();
        let even = a_dot.max(0.5 * (p[3] + m[3]).abs());
        let odd = a_dot.max(0.5 * (p[1] + m[1]).abs());
        even.min(odd) < 0.5 * opts.eps
    } else {
        false
    };
    Ok(CensusSample {
        point,
        axis_member: axis_membership(&point, opts.eps),
        grain_symmetric,
        detected: detect_cosmo_symmetry(tr, opts.tol).is_some(),
        max_residual: run.max_residual,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct CensusReport {
    pub eps: f64,
    /// Samples that could be placed on the constraint and integrated.
    pub n: u64,
    pub failures: u64,
    pub predicted: f64,
    pub member_fraction: f64,
    pub member_stderr: f64,
    pub dynamic_fraction: f64,
    pub dynamic_stderr: f64,
    pub detected_fraction: f64,
    /// The two routes agree within three combined standard errors.
    pub agree: bool,
    pub max_residual: f64,
}

pub fn summarize_census(eps: f64, l: f64, samples: &[CensusSample], failures: u64) -> CensusReport {
    let n = samples.len() as u64;
    let count = |f: fn(&CensusSample) -> bool| samples.iter().filter(|s| f(s)).count() as u64;
    let (m, d, det) = (
        count(|s| s.axis_member),
        count(|s| s.grain_symmetric),
        count(|s| s.detected),
    );
    let frac = |h: u64| if n > 0 { h as f64 / n as f64 } else { 0.0 };
    let (se_m, se_d) = (binomial_stderr(m, n), binomial_stderr(d, n));
    let combined = (se_m * se_m + se_d * se_d).sqrt();
    CensusReport {
        eps,
        n,
        failures,
        predicted: predicted_fraction(MeasureMode::Dynamic, eps, l),
        member_fraction: frac(m),
        member_stderr: se_m,
        dynamic_fraction: frac(d),
        dynamic_stderr: se_d,
        detected_fraction: frac(det),
        agree: (frac(m) - frac(d)).abs() <= 3.0 * combined,
        max_residual: samples.iter().fold(0.0, |r, s| r.max(s.max_residual)),
    }
}

/// Census of one chunk of cube samples; failed samples are counted apart.
pub fn census_chunk(
    cfg: &MeasureScanConfig,
    opts: &CensusOptions,
    chunk: usize,
) -> (Vec<CensusSample>, u64) {
    let mut failures = 0;
    let samples = cube_chunk(cfg.seed, cfg.l, cfg.n_samples, chunk)
        .into_iter()
        .filter_map(|p| match census_sample(&cfg.model, p, opts) {
            Ok(s) => Some(s),
            Err(_) => {
                failures += 1;
                None
            }
        })
        .collect();
    (samples, failures)
}

/// Integrates uniform cube samples and compares the dynamically symmetric
/// fraction with the axis-membership fraction.
pub fn dynamic_symmetry_census(
    cfg: &MeasureScanConfig,
    opts: &CensusOptions,
) -> Result<CensusReport> {
    cfg.validate()?;
    if cfg.mode != MeasureMode::Dynamic {
        return Err(Error::InvalidArgument("census needs mode Dynamic".into()));
    }
    let mut samples = Vec::with_capacity(cfg.n_samples);
    let mut failures = 0;
    for c in 0..cfg.chunks() {
        let (s, f) = census_chunk(cfg, opts, c);
        samples.extend(s);
        failures += f;
    }
    Ok(summarize_census(opts.eps, cfg.l, &samples, failures))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn axis_membership_boundaries() {
        assert!(axis_membership(&[0.0, 0.35, 0.0], 1e-6));
        assert!(axis_membership(&[0.0, 0.0, -0.9], 1e-6));
        let e = 0.01;
        assert!(!axis_membership(&[e, 0.3, e], e));
        assert!(axis_membership(&[0.49 * e, 0.3, -0.49 * e], e));
        assert!(!axis_membership(&[0.49 * e, 0.3, 0.51 * e], e));
        assert_eq!(axis_distance(&[0.1, 0.2, 0.3]), 0.2);
    }

    #[test]
    fn config_rejects_bad_grains_and_small_samples() {
        let m = FRWModel::with_mass(1.0, 0.5);
        assert!(
            MeasureScanConfig::new(2.0, vec![0.6], 20_000, 1, m, MeasureMode::AxisSet).is_err()
        );
        assert!(MeasureScanConfig::new(2.0, vec![0.1], 9_999, 1, m, MeasureMode::AxisSet).is_err());
        assert!(MeasureScanConfig::new(2.0, vec![], 20_000, 1, m, MeasureMode::AxisSet).is_err());
        assert!(
            MeasureScanConfig::new(2.0, vec![0.1, 0.2], 20_000, 1, m, MeasureMode::AxisSet).is_ok()
        );
    }

    #[test]
    fn chunks_are_reproducible_and_cover_the_cube() {
        let a = cube_chunk(9, 2.0, 50_000, 1);
        let b = cube_chunk(9, 2.0, 50_000, 1);
        assert_eq!(a, b);
        assert_eq!(a.len(), 50_000 - CHUNK);
        assert_ne!(cube_chunk(9, 2.0, 50_000, 0)[0], a[0]);
        assert!(a.iter().all(|p| p.iter().all(|v| v.abs() <= 1.0)));
    }

    #[test]
    fn too_few_hits_is_an_error() {
        let r = assemble_result(MeasureMode::AxisSet, 1.0, &[0.01, 0.1], &[5, 400], 10_000);
        assert!(matches!(r, Err(Error::InsufficientHits { hits: 5, .. })));
        let ok = assemble_result(
            MeasureMode::AxisSet,
            1.0,
            &[0.01, 0.1],
            &[40, 4000],
            1_000_000,
        )
        .unwrap();
        assert!((ok.slope() - 2.0).abs() < 1e-12);
        assert!(ok.slope_ci.0 <= ok.slope() && ok.slope() <= ok.slope_ci.1);
    }

    #[test]
    fn grid_index_matches_brute_force() {
        let mut r = rng::rng_from(3);
        let pts: Vec<[f64; 3]> = (0..2000)
            .map(|_| {
                [
                    r.gen_range(-1.0..1.0),
                    r.gen_range(-1.0..1.0),
                    r.gen_range(-1.0..1.0),
                ]
            })
            .collect();
        let g = GridIndex::new(&pts, -1.0, 1.0, 0.05);
        let c = CellIndex::new(pts.iter().copied().enumerate(), 0.05);
        for _ in 0..500 {
            let q = [
                r.gen_range(-1.0..1.0),
                r.gen_range(-1.0..1.0),
                r.gen_range(-1.0..1.0),
            ];
            let brute = pts
                .iter()
                .map(|p| max_norm(p, &q))
                .fold(f64::INFINITY, f64::min);
            let want = if brute <= 0.15 { brute } else { f64::INFINITY };
            assert_eq!(g.distance(&q, 0.15), want);
            match c.nearest(&q, 0.15) {
                Some((d, id)) => {
                    assert_eq!(d, brute);
                    assert_eq!(max_norm(&pts[id], &q), brute);
                }
                None => assert!(brute > 0.15),
            }
        }
    }

    #[test]
    fn densified_rows_have_bounded_spacing() {
        let row = [
            [0.0, 0.0, 0.0],
            [0.3, 0.0, 0.0],
            [0.3, 0.25, 0.1],
            [0.31, 0.25, 0.1],
            [5.0, 0.0, 0.0],
        ];
        let mut out = Vec::new();
        densify_row(&row, 0.02, 1.0, &mut out);
        assert!(out.iter().all(|p| in_box(p, 1.0)));
        for w in out.windows(2) {
            assert!(max_norm(&w[0], &w[1]) <= 0.02 + 1e-12);
        }
        assert!(out.len() > 30);
    }

    #[test]
    fn segment_distance_is_exact_on_axis_segments() {
        assert_eq!(
            segment_distance(&[0.5, 0.2, 0.0], &[0.0; 3], &[1.0, 0.0, 0.0]),
            0.2
        );
        assert_eq!(
            segment_distance(&[2.0, 0.0, 0.0], &[0.0; 3], &[1.0, 0.0, 0.0]),
            1.0
        );
    }

    #[test]
    fn axis_surfaces_start_on_their_axes() {
        let model = FRWModel::with_mass(1.0, 0.5);
        let opts = SurfaceOptions::new(2.0, 0.5);
        let row = surface_row(SymmetryAxis::Velocity, 0.4, &model, &opts).unwrap();
        assert_eq!(row.points[row.center], [0.0, 0.0, 0.4]);
        let n = row.points.len();
        assert_eq!(n, 2 * row.center + 1);
        let (p, q) = (row.points[0], row.points[n - 1]);
        assert_eq!([-p[0], -p[1], p[2]], q);
        assert!(matches!(
            axis_state(SymmetryAxis::Field, 0.0, &model),
            Err(Error::NoPhysicalRoot)
        ));
    }
}
