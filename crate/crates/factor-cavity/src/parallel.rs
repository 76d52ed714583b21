//! Worker pool and parallel drivers over the core estimators.
//!
//! Work is split by substream index and merged in index order, so every
//! result is identical for any worker count.

use factor_cavity_core::bethe::{
    bethe_chunk, candidates, chunk_count, finish_scan, pd_candidate, scan_row, select_sup,
    validate_grid, BetheContext, BetheEstimate, Comparator, PdBudget, SimplexPopulation, SupBethe,
    ThresholdScan,
};
use factor_cavity_core::exact::{mi_from_log_z, planted_log_z_density, McEstimate};
use factor_cavity_core::rng::derive_seed;
use factor_cavity_core::sampling::SamplerConfig;
use factor_cavity_core::stats::MeanAcc;
use factor_cavity_core::{ModelSpec, Result};
use rayon::prelude::*;

/// Environment variable that caps the worker count when `--workers` is absent.
pub const WORKERS_ENV: &str = "FACTOR_CAVITY_WORKERS";

pub struct Workers {
    pool: rayon::ThreadPool,
}

impl Workers {
    /// `None` uses all available cores.
    pub fn new(count: Option<usize>) -> anyhow::Result<Self> {
        let n = match count {
            Some(0) => anyhow::bail!("worker count must be positive"),
            Some(n) => n,
            None => std::thread::available_parallelism()
                .map(|n| n.get())
                .unwrap_or(1),
        };
        let pool = rayon::ThreadPoolBuilder::new().num_threads(n).build()?;
        Ok(Self { pool })
    }

    pub fn count(&self) -> usize {
        self.pool.current_num_threads()
    }

    /// Maps `f` over `0..len` and returns results in index order.
    pub fn map<R, F>(&self, len: usize, f: F) -> Vec<R>
    where
        R: Send,
        F: Fn(usize) -> R + Sync + Send,
    {
        self.pool
            .install(|| (0..len).into_par_iter().map(&f).collect())
    }

    pub fn try_map<R, F>(&self, len: usize, f: F) -> Result<Vec<R>>
    where
        R: Send,
        F: Fn(usize) -> Result<R> + Sync + Send,
    {
        self.map(len, f).into_iter().collect()
    }
}

fn merge_in_order(parts: &[MeanAcc]) -> MeanAcc {
    let mut acc = MeanAcc::default();
    for p in parts {
        acc.merge(p);
    }
    acc
}

/// Same value as the core's sequential estimator.
pub fn bethe_estimate(
    workers: &Workers,
    ctx: &BetheContext,
    pop: &SimplexPopulation,
    samples: usize,
    seed: u64,
) -> BetheEstimate {
    let parts = workers.map(chunk_count(samples), |c| {
        bethe_chunk(ctx, pop, samples, c, seed)
    });
    merge_in_order(&parts).into()
}

/// Candidates run concurrently; same selection as the core's `sup_bethe`.
pub fn sup_bethe(
    workers: &Workers,
    model: &ModelSpec,
    budget: &PdBudget,
    seed: u64,
) -> Result<SupBethe> {
    let ctx = BetheContext::new(model)?;
    let cands = candidates(budget.restarts);
    let evaluated = workers.try_map(cands.len(), |i| {
        pd_candidate(&ctx, budget, cands[i], seed).map(|e| (cands[i], e))
    })?;
    Ok(select_sup(evaluated))
}

pub fn planted_log_z(
    workers: &Workers,
    model: &ModelSpec,
    n: usize,
    graphs: usize,
    seed: u64,
    cfg: &SamplerConfig,
) -> Result<MeanAcc> {
    let values = workers.try_map(graphs, |i| {
        planted_log_z_density(model, n, seed, i as u64, cfg)
    })?;
    Ok(values.into_iter().collect())
}

pub fn mi_monte_carlo(
    workers: &Workers,
    model: &ModelSpec,
    n: usize,
    graphs: usize,
    seed: u64,
    cfg: &SamplerConfig,
) -> Result<McEstimate> {
    mi_from_log_z(model, &planted_log_z(workers, model, n, graphs, seed, cfg)?)
}

/// Grid points evaluated concurrently, rows kept in grid order.
pub fn threshold_scan<F>(
    workers: &Workers,
    build: F,
    grid: &[f64],
    comparator: Comparator,
    budget: &PdBudget,
    seed: u64,
) -> Result<ThresholdScan>
where
    F: Fn(f64) -> Result<ModelSpec> + Sync + Send,
{
    validate_grid(grid)?;
    let rows = workers.try_map(grid.len(), |i| {
        scan_row(
            &build(grid[i])?,
            grid[i],
            comparator,
            budget,
            derive_seed(seed, i as u64),
        )
    })?;
    Ok(finish_scan(rows))
}
