use std::path::PathBuf;

use clap::Args;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use spinthermo::meanfield::MeanFieldModel;
use spinthermo::montecarlo::{
    autocorrelation, dead_band, escape_time, plateau_level, run_chain, write_dump, AutocorrResult,
    ChainConfig, Observable, Trajectory, MIN_SAMPLES,
};
use spinthermo::replica::ReplicaModel;
use spinthermo::thermo::SourceField;

use crate::error::{CliError, CliResult};
use crate::output::{num, opt, RunOutput, Table};

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct McArgs {
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 1.5, allow_negative_numbers = true)]
    pub coupling: f64,
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    pub temp: f64,
    /// Replicas per group (2 N_r spins in total).
    #[arg(long, default_value_t = 64)]
    pub replicas: usize,
    /// Generator seed; drawn from the OS and recorded when absent.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, default_value_t = 100_000)]
    pub sweeps: usize,
    #[arg(long, default_value_t = 1000)]
    pub burn_in: usize,
    #[arg(long, default_value_t = 1)]
    pub thinning: usize,
    /// Independent chains; chain c uses stream c of the seeded generator.
    #[arg(long, default_value_t = 1)]
    pub chains: usize,
    /// Skip recording spins (no single-spin autocorrelation).
    #[arg(long)]
    pub no_spins: bool,
    /// Refuse runs whose trajectories would need more memory than this.
    #[arg(long, default_value_t = 4096)]
    pub max_memory_mb: usize,
}

struct ChainResult {
    config: ChainConfig,
    traj: Trajectory,
    spin: Option<AutocorrResult>,
    mag: Option<AutocorrResult>,
}

fn estimated_bytes(args: &McArgs) -> usize {
    let samples = args.sweeps.saturating_sub(args.burn_in) / args.thinning.max(1);
    let words = if args.no_spins {
        0
    } else {
        args.replicas.div_ceil(64)
    };
    samples
        .saturating_mul(24 + 8 * words)
        .saturating_mul(args.chains)
}

pub fn run(args: &McArgs) -> CliResult<RunOutput> {
    if args.chains == 0 {
        return Err(CliError::usage("at least one chain is required"));
    }
    let model = ReplicaModel::new(args.coupling, args.temp, args.replicas)?;
    let need = estimated_bytes(args);
    if need / (1 << 20) > args.max_memory_mb {
        return Err(CliError::resource(format!(
            "trajectories need about {} MiB, above --max-memory-mb {}",
            need >> 20,
            args.max_memory_mb
        )));
    }
    let seed = args.seed.unwrap_or_else(rand_seed);
    let configs: Vec<ChainConfig> = (0..args.chains)
        .map(|c| ChainConfig {
            stream: c as u64,
            burn_in: args.burn_in,
            thinning: args.thinning,
            record_spins: !args.no_spins,
            ..ChainConfig::new(model.clone(), seed, args.sweeps)
        })
        .collect();
    configs[0].validate()?;

    let results: Vec<CliResult<ChainResult>> = configs
        .into_par_iter()
        .map(|config| {
            log::info!("chain {} started", config.stream);
            let traj = run_chain(&config)?;
            let enough = traj.len() >= MIN_SAMPLES;
            let spin = (enough && !args.no_spins)
                .then(|| autocorrelation(&traj, Observable::SingleSpin))
                .transpose()?;
            let mag = enough
                .then(|| autocorrelation(&traj, Observable::Magnetization))
                .transpose()?;
            log::info!(
                "chain {} finished, acceptance {:.4}",
                config.stream,
                traj.acceptance
            );
            Ok(ChainResult {
                config,
                traj,
                spin,
                mag,
            })
        })
        .collect();

    // dead band from the positive mean-field minimum of the same inverter
    let m_star = MeanFieldModel::inverter(args.coupling, args.temp)?
        .minima(&SourceField::zeros(2))?
        .iter()
        .map(|p| p.m[0].abs())
        .fold(0.0, f64::max);

    let mut out = RunOutput {
        seeds: vec![seed],
        ..Default::default()
    };
    let mut summary = Table::new(
        "mc-summary",
        &[
            "chain",
            "stream",
            "samples",
            "acceptance",
            "spin_plateau",
            "spin_decay_time",
            "magnetization_plateau",
            "escape_time",
            "transitions",
            "censored",
        ],
    )?;
    summary.comment(format!(
        "replica model J={:?} T={:?} replicas={} seed={seed} sweeps={} burn_in={} thinning={}",
        args.coupling, args.temp, args.replicas, args.sweeps, args.burn_in, args.thinning
    ));
    summary.comment(format!(
        "escape dead band |a| >= {:?} (m*={m_star:?})",
        dead_band(args.replicas, m_star)
    ));
    if results.iter().flatten().any(|r| r.mag.is_none()) {
        summary.comment(format!(
            "autocorrelations need at least {MIN_SAMPLES} samples"
        ));
    }
    for (c, r) in results.into_iter().enumerate() {
        let r = r?;
        let mut dump = Vec::new();
        write_dump(&mut dump, &r.config, &r.traj)?;
        out.push(args.out.join(format!("chain_{c}.csv")), dump);

        if let Some(mag) = &r.mag {
            let mut t = Table::new(
                "autocorrelation",
                &[
                    "lag",
                    "spin",
                    "spin_variance",
                    "magnetization",
                    "magnetization_variance",
                ],
            )?;
            for (i, lag) in mag.lags.iter().enumerate() {
                t.row([
                    lag.to_string(),
                    opt(r.spin.as_ref().map(|s| s.values[i])),
                    opt(r.spin.as_ref().map(|s| s.estimator_variance[i])),
                    num(mag.values[i]),
                    num(mag.estimator_variance[i]),
                ])?;
            }
            out.push(args.out.join(format!("autocorr_{c}.csv")), t.finish()?);
        }

        let spin_plateau = r.spin.as_ref().and_then(plateau_level);
        let mag_plateau = r.mag.as_ref().and_then(plateau_level);
        let escape = (m_star > 0.0).then(|| {
            escape_time(
                &r.traj.a,
                r.traj.spacing(),
                dead_band(args.replicas, m_star),
            )
        });
        summary.row([
            c.to_string(),
            r.config.stream.to_string(),
            r.traj.len().to_string(),
            num(r.traj.acceptance),
            opt(spin_plateau.map(|p| p.level)),
            opt(spin_plateau.map(|p| p.decay_time)),
            opt(mag_plateau.map(|p| p.level)),
            opt(escape.map(|e| e.mean_time)),
            escape
                .map(|e| e.transitions.to_string())
                .unwrap_or_default(),
            escape.map(|e| e.censored.to_string()).unwrap_or_default(),
        ])?;
    }
    out.push(args.out.join("summary.csv"), summary.finish()?);
    Ok(out)
}

fn rand_seed() -> u64 {
    use std::collections::hash_map::RandomState;
    use std::hash::BuildHasher;
    RandomState::new().hash_one(std::time::SystemTime::now())
}
