//! Command execution: runs the requested experiment and emits artifacts.
//!
//! Exit codes: 0 success, 2 validation failure (raised before this module),
//! 3 a verification command found a violated inequality.

use anyhow::Result;
use serde::Serialize;

use rfic_core::chain::{ChainParams, Spin};
use rfic_core::coarsegrain::verify_block_bounds;
use rfic_core::continuum::continuum_free_energy;
use rfic_core::disorder::FieldSampler;
use rfic_core::rng::StreamRng;

use crate::config::{Command, Outputs, ResolvedConfig};
use crate::experiments::{
    leading_coefficient_sweep, sandwich_test_gaussian, w1_curve_with_errors, SandwichOptions,
    SandwichOutcome, SweepResult, W1CurvePoint,
};
use crate::parallel::{reduce_flip_density, reduce_free_energy, replica_batch};
use crate::report::{config_hash, g17, write_json, CsvDoc};
use crate::svg::line_chart;

/// Runs the resolved command; returns the process exit code.
pub fn execute(cfg: &ResolvedConfig, outputs: &Outputs, pool: &rayon::ThreadPool) -> Result<i32> {
    let hash = config_hash(cfg);
    match cfg.command {
        Command::Fe => run_fe(cfg, outputs, &hash, pool),
        Command::Flips => run_flips(cfg, outputs, &hash, pool),
        Command::Continuum => run_continuum(cfg, outputs, &hash),
        Command::W1 => run_w1(cfg, outputs, &hash),
        Command::VerifyBounds => run_verify_bounds(cfg, outputs, &hash),
        Command::Sweep => run_sweep(cfg, outputs, &hash, pool),
        Command::Sandwich => run_sandwich(cfg, outputs, &hash, pool),
    }
}

fn emit_json<T: Serialize>(
    outputs: &Outputs,
    cfg: &ResolvedConfig,
    hash: &str,
    result: &T,
) -> Result<()> {
    if let Some(path) = &outputs.json {
        write_json(path, cfg, hash, result)?;
    }
    Ok(())
}

fn emit_svg(path: &std::path::Path, cfg: &ResolvedConfig, hash: &str, chart: String) -> Result<()> {
    let header = format!(
        "<!-- rfic {} config_hash={hash} seed={} -->\n",
        cfg.command.name(),
        cfg.seed
    );
    std::fs::write(path, header + &chart)?;
    Ok(())
}

fn run_fe(
    cfg: &ResolvedConfig,
    outputs: &Outputs,
    hash: &str,
    pool: &rayon::ThreadPool,
) -> Result<i32> {
    let law = cfg.law.expect("validated");
    let j = cfg.j.expect("validated");
    let params = ChainParams::new(j, cfg.boundary_spins())?;
    let batch = replica_batch(
        &law,
        &params,
        cfg.chain_length,
        cfg.replicas,
        cfg.seed,
        false,
        pool,
    );
    let est = reduce_free_energy(&batch, cfg.chain_length, cfg.seed);
    let mut csv = CsvDoc::new(cfg, hash, "J,F_hat,stderr,N,replicas");
    csv.row(&[
        g17(j),
        g17(est.value),
        g17(est.stderr),
        cfg.chain_length.to_string(),
        cfg.replicas.to_string(),
    ]);
    csv.emit(outputs.csv.as_deref())?;
    emit_json(outputs, cfg, hash, &est)?;
    Ok(0)
}

fn run_flips(
    cfg: &ResolvedConfig,
    outputs: &Outputs,
    hash: &str,
    pool: &rayon::ThreadPool,
) -> Result<i32> {
    let law = cfg.law.expect("validated");
    let j = cfg.j.expect("validated");
    let params = ChainParams::new(j, cfg.boundary_spins())?;
    let batch = replica_batch(
        &law,
        &params,
        cfg.chain_length,
        cfg.replicas,
        cfg.seed,
        true,
        pool,
    );
    let est = reduce_flip_density(&batch, cfg.chain_length, cfg.seed);
    let mut csv = CsvDoc::new(
        cfg,
        hash,
        "J,mean_density,stderr,gibbs_variance,flip_coeff,N,replicas",
    );
    csv.row(&[
        g17(j),
        g17(est.mean_density),
        g17(est.stderr),
        g17(est.mean_gibbs_variance),
        g17(4.0 * j * j * est.mean_density),
        cfg.chain_length.to_string(),
        cfg.replicas.to_string(),
    ]);
    csv.emit(outputs.csv.as_deref())?;
    emit_json(outputs, cfg, hash, &est)?;
    Ok(0)
}

fn run_continuum(cfg: &ResolvedConfig, outputs: &Outputs, hash: &str) -> Result<i32> {
    let grid = cfg.j_grid.clone().expect("validated");
    let evals: Vec<_> = grid.iter().map(|&j| continuum_free_energy(j)).collect();
    let mut csv = CsvDoc::new(cfg, hash, "J,x,F_exact,F_asym,gap");
    for e in &evals {
        csv.row(&[g17(e.j), g17(e.x), g17(e.f_exact), g17(e.f_asym), g17(e.gap)]);
    }
    csv.emit(outputs.csv.as_deref())?;
    emit_json(outputs, cfg, hash, &evals)?;
    if let Some(path) = &outputs.svg {
        let exact: Vec<(f64, f64)> = evals.iter().map(|e| (e.j, e.f_exact)).collect();
        let asym: Vec<(f64, f64)> = evals.iter().map(|e| (e.j, e.f_asym)).collect();
        emit_svg(
            path,
            cfg,
            hash,
            line_chart("continuum free energy", &[("exact", exact), ("asymptote", asym)]),
        )?;
    }
    Ok(0)
}

fn run_w1(cfg: &ResolvedConfig, outputs: &Outputs, hash: &str) -> Result<i32> {
    let law = cfg.law.expect("validated");
    let curve = w1_curve_with_errors(
        law,
        &cfg.l_grid,
        cfg.chain_length,
        cfg.w1_replicates,
        cfg.seed,
    )?;
    let mut csv = CsvDoc::new(cfg, hash, "L,w1,se,samples,replicates");
    for point in &curve {
        csv.row(&[
            point.block_len.to_string(),
            g17(point.w1.mean),
            g17(point.w1.se),
            cfg.chain_length.to_string(),
            cfg.w1_replicates.to_string(),
        ]);
    }
    csv.emit(outputs.csv.as_deref())?;
    emit_json(outputs, cfg, hash, &curve)?;
    if let Some(path) = &outputs.svg {
        let pts: Vec<(f64, f64)> = curve
            .iter()
            .map(|p: &W1CurvePoint| (p.block_len as f64, p.w1.mean))
            .collect();
        emit_svg(
            path,
            cfg,
            hash,
            line_chart("W1 to Gaussian vs block length", &[("w1", pts)]),
        )?;
    }
    Ok(0)
}

#[derive(Serialize)]
struct BoundTally {
    inequality: &'static str,
    boundary: String,
    trials: usize,
    passes: usize,
    min_slack: f64,
}

fn run_verify_bounds(cfg: &ResolvedConfig, outputs: &Outputs, hash: &str) -> Result<i32> {
    let law = cfg.law.expect("validated");
    let l = cfg.block_len.expect("validated");
    let j = cfg.j.expect("validated");
    let m = cfg.m.expect("validated");

    let names = ["lower_single_config", "upper_window_sup", "upper_indicator_abs_sum"];
    let pairs = Spin::boundary_pairs();
    let mut tallies: Vec<BoundTally> = Vec::new();
    for (a, b) in pairs {
        for name in names {
            tallies.push(BoundTally {
                inequality: name,
                boundary: format!(
                    "{}{}",
                    if a == Spin::Up { '+' } else { '-' },
                    if b == Spin::Up { '+' } else { '-' }
                ),
                trials: 0,
                passes: 0,
                min_slack: f64::INFINITY,
            });
        }
    }

    let mut block = vec![0.0f64; l];
    let mut trials_passed = 0usize;
    for trial in 0..cfg.trials {
        let mut rng = StreamRng::new(cfg.seed, trial as u64);
        for slot in block.iter_mut() {
            *slot = law.sample_field(&mut rng);
        }
        let mut trial_ok = true;
        for (pi, &(a, b)) in pairs.iter().enumerate() {
            let reports = verify_block_bounds(&block, j, m, a, b)?;
            for (ri, r) in reports.iter().enumerate() {
                let tally = &mut tallies[pi * names.len() + ri];
                tally.trials += 1;
                if r.pass {
                    tally.passes += 1;
                } else {
                    trial_ok = false;
                }
                tally.min_slack = tally.min_slack.min(r.slack);
            }
        }
        if trial_ok {
            trials_passed += 1;
        }
    }
    let mut csv = CsvDoc::new(cfg, hash, "inequality,boundary,trials,passes,min_slack");
    for t in &tallies {
        csv.row(&[
            t.inequality.to_string(),
            t.boundary.clone(),
            t.trials.to_string(),
            t.passes.to_string(),
            g17(t.min_slack),
        ]);
    }
    csv.emit(outputs.csv.as_deref())?;
    emit_json(outputs, cfg, hash, &tallies)?;
    println!("{trials_passed}/{} pass", cfg.trials);
    Ok(if trials_passed == cfg.trials { 0 } else { 3 })
}

fn run_sweep(
    cfg: &ResolvedConfig,
    outputs: &Outputs,
    hash: &str,
    pool: &rayon::ThreadPool,
) -> Result<i32> {
    let law = cfg.law.expect("validated");
    let grid = cfg.j_grid.clone().expect("validated");
    let sweep: SweepResult = leading_coefficient_sweep(
        law,
        &grid,
        cfg.chain_length,
        cfg.replicas,
        cfg.seed,
        pool,
    )?;
    let mut csv = CsvDoc::new(cfg, hash, "J,F_hat,stderr,coeff,flip_coeff");
    for p in &sweep.points {
        csv.row(&[
            g17(p.j),
            g17(p.free_energy.value),
            g17(p.free_energy.stderr),
            g17(p.coeff),
            g17(p.flip_coeff),
        ]);
    }
    csv.emit(outputs.csv.as_deref())?;
    emit_json(outputs, cfg, hash, &sweep)?;
    if let Some(path) = &outputs.svg {
        let coeff: Vec<(f64, f64)> = sweep.points.iter().map(|p| (p.j, p.coeff)).collect();
        let flip: Vec<(f64, f64)> = sweep.points.iter().map(|p| (p.j, p.flip_coeff)).collect();
        emit_svg(
            path,
            cfg,
            hash,
            line_chart(
                "rescaled coefficients vs J",
                &[("2J F(J)", coeff), ("4J^2 rho(J)", flip)],
            ),
        )?;
    }
    Ok(0)
}

fn run_sandwich(
    cfg: &ResolvedConfig,
    outputs: &Outputs,
    hash: &str,
    pool: &rayon::ThreadPool,
) -> Result<i32> {
    let grid = cfg.j_grid.clone().expect("validated");
    let opts = SandwichOptions {
        blocks: cfg.blocks,
        grid_cells: cfg.grid_cells,
        m_override: None,
    };
    let outcomes: Vec<SandwichOutcome> = sandwich_test_gaussian(
        &grid,
        cfg.chain_length,
        cfg.replicas,
        cfg.seed,
        opts,
        pool,
    )?;
    let mut csv = CsvDoc::new(cfg, hash, "J,M,lower,F_hat,stderr,upper,pass");
    for o in &outcomes {
        csv.row(&[
            g17(o.j),
            g17(o.m),
            g17(o.lower),
            g17(o.f_hat.value),
            g17(o.f_hat.stderr),
            g17(o.upper),
            o.pass.to_string(),
        ]);
        println!(
            "J={}: {} <= {} <= {} [{}]",
            o.j,
            o.lower,
            o.f_hat.value,
            o.upper,
            if o.pass { "pass" } else { "FAIL" }
        );
    }
    csv.emit(outputs.csv.as_deref())?;
    emit_json(outputs, cfg, hash, &outcomes)?;
    Ok(if outcomes.iter().all(|o| o.pass) { 0 } else { 3 })
}
