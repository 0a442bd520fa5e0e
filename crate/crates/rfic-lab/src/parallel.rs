//! Deterministic replica farm.
//!
//! Replica `r` always draws from stream `r` of the run seed, and reductions
//! fold the collected per-replica results in replica order, so estimates do
//! not depend on the number of worker threads.

use rayon::prelude::*;

use rfic_core::chain::{
    run_replica, ChainParams, FlipDensityEstimate, FreeEnergyEstimate, ReplicaStats,
};
use rfic_core::disorder::FieldSampler;
use rfic_core::math::mean_and_se;

/// Thread cap from the `RFIC_THREADS` environment variable, if set.
pub fn env_thread_cap() -> Option<usize> {
    std::env::var("RFIC_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .filter(|&n| n >= 1)
}

/// Builds the worker pool: explicit request, else `RFIC_THREADS`, else the
/// logical core count.
pub fn thread_pool(threads: Option<usize>) -> rayon::ThreadPool {
    let n = threads.or_else(env_thread_cap).unwrap_or_else(num_threads);
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build()
        .expect("thread pool")
}

fn num_threads() -> usize {
    std::thread::available_parallelism()
        .map(|n| n.get())
        .unwrap_or(1)
}

/// Runs `replicas` independent chains in parallel and returns their stats
/// in replica order.
pub fn replica_batch<S: FieldSampler + Sync>(
    source: &S,
    params: &ChainParams,
    chain_length: usize,
    replicas: usize,
    seed: u64,
    with_derivatives: bool,
    pool: &rayon::ThreadPool,
) -> Vec<ReplicaStats> {
    pool.install(|| {
        (0..replicas)
            .into_par_iter()
            .map(|r| {
                run_replica(
                    source,
                    params,
                    chain_length,
                    seed,
                    r as u64,
                    with_derivatives,
                )
            })
            .collect()
    })
}

/// Free-energy reduction over a replica batch; matches the serial estimator
/// bit for bit.
pub fn reduce_free_energy(
    batch: &[ReplicaStats],
    chain_length: usize,
    seed: u64,
) -> FreeEnergyEstimate {
    let values: Vec<f64> = batch.iter().map(|r| r.log_density).collect();
    let stats = mean_and_se(&values);
    FreeEnergyEstimate {
        value: stats.mean,
        stderr: stats.se,
        chain_length,
        replicas: batch.len(),
        seed,
    }
}

/// Flip-density reduction over a batch run with derivatives enabled.
pub fn reduce_flip_density(
    batch: &[ReplicaStats],
    chain_length: usize,
    seed: u64,
) -> FlipDensityEstimate {
    let means: Vec<f64> = batch
        .iter()
        .map(|r| r.flips.expect("derivatives enabled").mean_density)
        .collect();
    let stats = mean_and_se(&means);
    let mean_gibbs_variance = batch
        .iter()
        .map(|r| r.flips.expect("derivatives enabled").variance_density)
        .sum::<f64>()
        / batch.len() as f64;
    FlipDensityEstimate {
        mean_density: stats.mean,
        stderr: stats.se,
        mean_gibbs_variance,
        chain_length,
        replicas: batch.len(),
        seed,
    }
}

/// Parallel drop-in for [`rfic_core::chain::free_energy`].
pub fn parallel_free_energy<S: FieldSampler + Sync>(
    source: &S,
    params: &ChainParams,
    chain_length: usize,
    replicas: usize,
    seed: u64,
    pool: &rayon::ThreadPool,
) -> FreeEnergyEstimate {
    let batch = replica_batch(source, params, chain_length, replicas, seed, false, pool);
    reduce_free_energy(&batch, chain_length, seed)
}
