//! Rayon drivers for the core's chunked computations. Every driver combines
//! its parts in a fixed order, so results do not depend on the worker count.

use rayon::prelude::*;
use tempus_core::measure::{
    assemble_result, axis_hits_chunk, build_symmetric_surfaces, census_chunk, fraction_change,
    sum_hits, summarize_census, tube_hits_chunk, tube_mesh, CensusOptions, CensusReport,
    MeasureMode, MeasureScanConfig, MeasureScanResult, SurfaceOptions, SymmetricSurfaces,
};
use tempus_core::urn::{
    calibrate, run_seed, schulman_sim_with, Calibration, Scenario, SchulmanOptions, SchulmanRun,
    UrnPair,
};
use tempus_core::wigner::{
    advect_rows, deposit, relative_change, TransportOptions, WignerDensity, ROW_BLOCK,
};
use tempus_core::{rng, Error, Result};

use crate::error::{CliError, CliResult};

pub const THREADS_ENV: &str = "TEMPUS_THREADS";

/// Worker cap from the flag, falling back to `TEMPUS_THREADS`.
pub fn thread_count(flag: Option<usize>) -> CliResult<Option<usize>> {
    if flag.is_some() {
        return Ok(flag);
    }
    match std::env::var(THREADS_ENV) {
        Ok(s) if !s.trim().is_empty() => s
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| CliError::config(THREADS_ENV, format!("`{s}` is not a thread count"))),
        _ => Ok(None),
    }
}

/// Runs `f` on a pool with at most `threads` workers (rayon's default when `None`).
pub fn with_threads<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> CliResult<T> {
    if threads == Some(0) {
        return Err(CliError::config("threads", "must be at least 1"));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.unwrap_or(0))
        .build()
        .map_err(|e| CliError::config("threads", e.to_string()))?;
    Ok(pool.install(f))
}

fn expect_mode(cfg: &MeasureScanConfig, mode: MeasureMode) -> Result<()> {
    cfg.validate()?;
    if cfg.mode != mode {
        return Err(Error::InvalidArgument(format!("scan needs mode {mode:?}")));
    }
    Ok(())
}

pub fn axis_scan(cfg: &MeasureScanConfig) -> Result<MeasureScanResult> {
    expect_mode(cfg, MeasureMode::AxisSet)?;
    let parts: Vec<Vec<u64>> = (0..cfg.chunks())
        .into_par_iter()
        .map(|c| axis_hits_chunk(cfg, c))
        .collect();
    let hits = sum_hits(parts, cfg.epsilons.len());
    assemble_result(cfg.mode, cfg.l, &cfg.epsilons, &hits, cfg.n_samples as u64)
}

pub fn tube_scan(
    cfg: &MeasureScanConfig,
    surfaces: &SymmetricSurfaces,
) -> Result<MeasureScanResult> {
    expect_mode(cfg, MeasureMode::SolutionTube)?;
    let mesh = tube_mesh(cfg, surfaces)?;
    let parts: Vec<Vec<u64>> = (0..cfg.chunks())
        .into_par_iter()
        .map(|c| tube_hits_chunk(cfg, &mesh, c))
        .collect();
    let hits = sum_hits(parts, cfg.epsilons.len());
    assemble_result(cfg.mode, cfg.l, &cfg.epsilons, &hits, cfg.n_samples as u64)
}

/// Tube scan with the surface spacing halved until the fractions move by
/// less than 5%, as `scan_tube_measure_converged` does serially.
pub fn tube_scan_converged(
    cfg: &MeasureScanConfig,
    base: &SurfaceOptions,
    max_refinements: u32,
) -> Result<(MeasureScanResult, SymmetricSurfaces)> {
    let e_min = cfg.epsilons.iter().copied().fold(f64::INFINITY, f64::min);
    let mut opts = *base;
    opts.l = cfg.l;
    opts.spacing = 0.25 * e_min;
    let mut surfaces = build_symmetric_surfaces(&cfg.model, &opts)?;
    let mut result = tube_scan(cfg, &surfaces)?;
    for _ in 0..max_refinements {
        opts.spacing *= 0.5;
        let finer = build_symmetric_surfaces(&cfg.model, &opts)?;
        let next = tube_scan(cfg, &finer)?;
        let change = fraction_change(&result, &next);
        surfaces = finer;
        result = next;
        if change < 0.05 {
            break;
        }
    }
    Ok((result, surfaces))
}

pub fn census(cfg: &MeasureScanConfig, opts: &CensusOptions) -> Result<CensusReport> {
    expect_mode(cfg, MeasureMode::Dynamic)?;
    let parts: Vec<_> = (0..cfg.chunks())
        .into_par_iter()
        .map(|c| census_chunk(cfg, opts, c))
        .collect();
    let mut samples = Vec::with_capacity(cfg.n_samples);
    let mut failures = 0;
    for (s, f) in parts {
        samples.extend(s);
        failures += f;
    }
    Ok(summarize_census(opts.eps, cfg.l, &samples, failures))
}

/// Advects row blocks in parallel and deposits them in block order.
pub fn transport(
    density: &WignerDensity,
    t: f64,
    opts: &TransportOptions,
) -> Result<WignerDensity> {
    let g = density.grid;
    let starts: Vec<usize> = (0..g.np).step_by(ROW_BLOCK).collect();
    let blocks = starts
        .into_par_iter()
        .map(|j| advect_rows(density, t, opts, j..j + ROW_BLOCK))
        .collect::<Result<Vec<_>>>()?;
    let mut acc = vec![0.0; g.len()];
    for b in &blocks {
        deposit(&g, &mut acc, b);
    }
    Ok(WignerDensity {
        values: acc,
        ..density.clone()
    })
}

/// Parallel counterpart of `shell_transport_invariance`.
pub fn transport_change(density: &WignerDensity, t: f64, step: f64) -> Result<f64> {
    if t == 0.0 {
        return Ok(0.0);
    }
    let moved = transport(density, t, &TransportOptions::new(step))?;
    Ok(relative_change(&density.values, &moved.values))
}

/// Seeded ensemble of Schulman runs sharing one calibration; runs are
/// simulated in parallel and returned in index order.
pub fn schulman_ensemble(
    pair: &UrnPair,
    steps: usize,
    runs: usize,
    seed: u64,
    scenario: Scenario,
) -> Result<(Calibration, Vec<SchulmanRun>)> {
    let opts = SchulmanOptions::new(pair);
    let cal = calibrate(pair, steps, rng::derive(seed, "urn-reference"), &opts);
    let out = (0..runs)
        .into_par_iter()
        .map(|i| schulman_sim_with(pair, steps, run_seed(seed, i), scenario, &opts, &cal))
        .collect::<Result<Vec<_>>>()?;
    Ok((cal, out))
}
