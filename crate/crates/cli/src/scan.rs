use std::path::PathBuf;

use clap::{Args, ValueEnum};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use spinthermo::coexistence::{borderline_pair, PhaseLabel, PhasePair, Spectrum, Stability};
use spinthermo::dataset::StandardModel;
use spinthermo::meanfield::MeanFieldModel;
use spinthermo::replica::ReplicaModel;
use spinthermo::spinspace::{energies_from_couplings, CouplingVector};
use spinthermo::thermo::{a_tilde, free_energy_a, magnetizations, Ensemble, SourceField};

use crate::error::{CliError, CliResult};
use crate::output::{linspace, num, open_input, opt, RunOutput, Table};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScanKind {
    /// Ã of two spins over (J₁, J₂) at fixed J₁₂.
    ASurface,
    /// Mean-field and exact Ã along m₂ = -m₁.
    Meanfield,
    /// Restricted mean-field Gibbs branches against the replica equilibrium.
    Branches,
    /// Replica-model equilibrium along h or m.
    Replica,
    /// Canonical curves and stability of a true/false phase pair.
    Coexistence,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    H,
    M,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct ScanArgs {
    #[arg(long, value_enum)]
    pub kind: ScanKind,
    #[arg(long)]
    pub out: PathBuf,
    /// Temperature (meanfield, branches, replica, a-surface).
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    pub temp: f64,
    /// Pair couplings J (J₁₂ for a-surface); several values give several
    /// curves. Defaults: 0.5,1,1.5 for meanfield, -1.5,0,1.5 for a-surface,
    /// 1.5 otherwise.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub coupling: Vec<f64>,
    /// Replica counts for the branches and replica scans.
    #[arg(long, value_delimiter = ',', default_values_t = [4usize, 16, 64])]
    pub replicas: Vec<usize>,
    #[arg(long, value_enum, default_value_t = Axis::H)]
    pub axis: Axis,
    /// Grid start; defaults depend on the kind.
    #[arg(long, allow_negative_numbers = true)]
    pub min: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub max: Option<f64>,
    #[arg(long, default_value_t = 101)]
    pub points: usize,
    /// Calibration temperature of the standard state (a-surface, coexistence).
    #[arg(long, default_value_t = 1.0)]
    pub gauge_temp: f64,
    /// Spin count of the reference coexistence construction.
    #[arg(long, default_value_t = 64)]
    pub spins: usize,
    /// Spectra CSV (`energy,log_degeneracy,label`) replacing the reference construction.
    #[arg(long)]
    pub spectra: Option<PathBuf>,
}

impl ScanArgs {
    fn couplings(&self, default: &[f64]) -> Vec<f64> {
        if self.coupling.is_empty() {
            default.to_vec()
        } else {
            self.coupling.clone()
        }
    }

    fn grid(&self, lo: f64, hi: f64) -> CliResult<Vec<f64>> {
        linspace(self.min.unwrap_or(lo), self.max.unwrap_or(hi), self.points)
    }
}

pub fn run(args: &ScanArgs) -> CliResult<RunOutput> {
    if args.replicas.is_empty() {
        return Err(CliError::usage("empty replica list"));
    }
    let bytes = match args.kind {
        ScanKind::ASurface => a_surface(args)?,
        ScanKind::Meanfield => meanfield(args)?,
        ScanKind::Branches => branches(args)?,
        ScanKind::Replica => replica(args)?,
        ScanKind::Coexistence => coexistence(args)?,
    };
    let mut out = RunOutput::default();
    out.push(&args.out, bytes);
    Ok(out)
}

fn a_surface(args: &ScanArgs) -> CliResult<Vec<u8>> {
    let grid = args.grid(-3.0, 3.0)?;
    let standard = StandardModel::from_couplings(&CouplingVector::zeros(2)?, args.gauge_temp)?;
    let all = [0, 1, 2, 3];
    let mut t = Table::new(
        "a-surface",
        &["j12", "j1", "j2", "a_tilde", "a", "m1", "m2"],
    )?;
    t.comment(format!(
        "two spins, uniform standard state at T°={}, T={}; a_tilde over all four configurations",
        args.gauge_temp, args.temp
    ));
    for j12 in args.couplings(&[-1.5, 0.0, 1.5]) {
        let rows: Vec<CliResult<[String; 7]>> = grid
            .par_iter()
            .flat_map_iter(|&j1| grid.iter().map(move |&j2| (j1, j2)))
            .map(|(j1, j2)| {
                let live = CouplingVector::zeros(2)?
                    .with(1, j1)?
                    .with(2, j2)?
                    .with(3, j12)?;
                let ens = Ensemble::new(&standard, energies_from_couplings(&live), args.temp)?;
                let m = magnetizations(&ens, &SourceField::zeros(2))?;
                Ok([
                    num(j12),
                    num(j1),
                    num(j2),
                    num(a_tilde(&ens, &standard, &all)?),
                    num(free_energy_a(&ens)),
                    num(m[0]),
                    num(m[1]),
                ])
            })
            .collect();
        for r in rows {
            t.row(r?)?;
        }
    }
    t.finish()
}

fn meanfield(args: &ScanArgs) -> CliResult<Vec<u8>> {
    let grid = args.grid(-0.999, 0.999)?;
    let mut t = Table::new(
        "meanfield",
        &["j", "m", "a_meanfield", "a_exact", "slope", "curvature"],
    )?;
    t.comment(format!(
        "inverter J σ₁σ₂ along m₂ = -m₁ at T={}; free energies are totals for both spins",
        args.temp
    ));
    for j in args.couplings(&[0.5, 1.0, 1.5]) {
        let mf = MeanFieldModel::inverter(j, args.temp)?;
        // the single-replica model is the exact two-spin inverter
        let exact = ReplicaModel::new(j, args.temp, 1)?;
        let spin = mf.spinodals()?;
        let boundary = mf.phase_boundary()?;
        t.comment(format!(
            "J={j:?} minima={} spinodals={} h_c={} m0={}",
            mf.slice_minima_count()?,
            spin.map(|s| format!("{:?},{:?}", s.0, s.1))
                .unwrap_or_else(|| "none".into()),
            opt(boundary.map(|b| b.0)),
            opt(boundary.map(|b| b.1)),
        ));
        let rows: Vec<CliResult<[String; 6]>> = grid
            .par_iter()
            .map(|&m| {
                Ok([
                    num(j),
                    num(m),
                    num(mf.slice_free_energy(m)?),
                    num(2.0 * exact.equilibrium_helmholtz_per_spin(m)?),
                    num(mf.slice_derivative(m)?),
                    num(mf.slice_curvature(m)?),
                ])
            })
            .collect();
        for r in rows {
            t.row(r?)?;
        }
    }
    t.finish()
}

fn branches(args: &ScanArgs) -> CliResult<Vec<u8>> {
    let grid = args.grid(-2.0, 2.0)?;
    let j = single_coupling(args)?;
    let mf = MeanFieldModel::inverter(j, args.temp)?;
    let models = args
        .replicas
        .iter()
        .map(|&n| ReplicaModel::new(j, args.temp, n))
        .collect::<Result<Vec<_>, _>>()?;
    let mut header = vec![
        "h".to_string(),
        "g_plus".into(),
        "g_minus".into(),
        "m_plus".into(),
        "m_minus".into(),
    ];
    header.extend(args.replicas.iter().map(|n| format!("g_eq_{n}")));
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    let mut t = Table::new("branches", &header)?;
    t.comment(format!(
        "inverter J={j:?} T={} at field (h, -h); Gibbs energies per spin",
        args.temp
    ));
    let points = mf.restricted_gibbs_branches(&grid)?;
    let eq: Vec<Vec<f64>> = grid
        .par_iter()
        .map(|&h| {
            models
                .iter()
                .map(|r| r.equilibrium_gibbs_per_spin(h, -h))
                .collect()
        })
        .collect();
    for (p, eq) in points.iter().zip(eq) {
        let mut row = vec![
            num(p.h),
            opt(p.plus.as_ref().map(|s| s.gibbs / 2.0)),
            opt(p.minus.as_ref().map(|s| s.gibbs / 2.0)),
            opt(p.plus.as_ref().map(|s| s.m[0])),
            opt(p.minus.as_ref().map(|s| s.m[0])),
        ];
        row.extend(eq.into_iter().map(num));
        t.row(row)?;
    }
    t.finish()
}

fn replica(args: &ScanArgs) -> CliResult<Vec<u8>> {
    let j = single_coupling(args)?;
    let mf = MeanFieldModel::inverter(j, args.temp)?;
    match args.axis {
        Axis::H => {
            let grid = args.grid(-2.0, 2.0)?;
            let mut t = Table::new("replica-h", &["replicas", "h", "m_eq", "g_eq"])?;
            t.comment(format!(
                "replica model J={j:?} T={} at field (h, -h); per-spin values",
                args.temp
            ));
            for &n in &args.replicas {
                let r = ReplicaModel::new(j, args.temp, n)?;
                let rows: Vec<[String; 4]> = grid
                    .par_iter()
                    .map(|&h| {
                        [
                            n.to_string(),
                            num(h),
                            num(r.equilibrium_magnetization(h)),
                            num(r.equilibrium_gibbs_per_spin(h, -h)),
                        ]
                    })
                    .collect();
                for row in rows {
                    t.row(row)?;
                }
            }
            t.finish()
        }
        Axis::M => {
            let mut t = Table::new(
                "replica-m",
                &["replicas", "m", "a_eq", "dos_potential", "a_meanfield"],
            )?;
            t.comment(format!(
                "replica model J={j:?} T={}; sector magnetizations m = a/N_r, per-spin values, dos_potential = -T ln N(m)/(2 N_r)",
                args.temp
            ));
            for &n in &args.replicas {
                let r = ReplicaModel::new(j, args.temp, n)?;
                let ms: Vec<f64> = (1..n).map(|p| (2 * p) as f64 / n as f64 - 1.0).collect();
                let rows: Vec<CliResult<[String; 5]>> = ms
                    .par_iter()
                    .map(|&m| {
                        Ok([
                            n.to_string(),
                            num(m),
                            num(r.equilibrium_helmholtz_per_spin(m)?),
                            num(-args.temp * r.ln_density_of_states(m)? / (2 * n) as f64),
                            num(mf.slice_free_energy(m)? / 2.0),
                        ])
                    })
                    .collect();
                for row in rows {
                    t.row(row?)?;
                }
            }
            t.finish()
        }
    }
}

fn single_coupling(args: &ScanArgs) -> CliResult<f64> {
    match args.couplings(&[1.5]).as_slice() {
        [j] => Ok(*j),
        _ => Err(CliError::usage(format!(
            "--kind {} takes a single --coupling value",
            args.kind
                .to_possible_value()
                .map(|v| v.get_name().to_string())
                .unwrap_or_default()
        ))),
    }
}

fn phase_pair(args: &ScanArgs) -> CliResult<(PhasePair, String)> {
    match &args.spectra {
        None => {
            let (pair, p) = borderline_pair(args.spins, args.gauge_temp)?;
            Ok((
                pair,
                format!(
                    "reference construction N={} T°={} offset={:?}",
                    p.n_spins, p.gauge_temperature, p.offset
                ),
            ))
        }
        Some(path) => {
            let spectra = Spectrum::read_csv(open_input(path)?)?;
            let find = |label| {
                spectra
                    .iter()
                    .find(|s| s.label() == label)
                    .cloned()
                    .ok_or_else(|| {
                        CliError::usage(format!("{}: no `{label}` spectrum", path.display()))
                    })
            };
            let pair = PhasePair::new(
                find(PhaseLabel::TrueStates)?,
                find(PhaseLabel::FalseStates)?,
                args.spins,
            )?;
            Ok((
                pair,
                format!("spectra from {} with N={}", path.display(), args.spins),
            ))
        }
    }
}

fn coexistence(args: &ScanArgs) -> CliResult<Vec<u8>> {
    let grid = args.grid(0.5, 2.0)?;
    if grid[0] <= 0.0 {
        return Err(CliError::usage("temperatures must be positive"));
    }
    let (pair, source) = phase_pair(args)?;
    let (lo, hi) = (grid[0], grid[grid.len() - 1]);
    let mut t = Table::new(
        "coexistence",
        &[
            "t",
            "a_true",
            "a_false",
            "a_eq",
            "e_true",
            "e_false",
            "e_eq",
            "s_eq",
            "c_eq",
            "ln_weight_ratio",
            "stable",
        ],
    )?;
    t.comment(source);
    match pair.solve_t0(lo, hi)? {
        Some(t0) => {
            let (de, tds) = pair.latent_heat(t0);
            t.comment(format!(
                "coexistence T0={t0:?} latent_heat={de:?} t_delta_s={tds:?}"
            ));
        }
        None => t.comment("no coexistence temperature inside the grid"),
    }
    t.comment(format!(
        "heat capacity peak at T={:?}",
        pair.heat_capacity_peak(lo, hi, args.points)
    ));
    let eq = pair.equilibrium();
    for &temp in &grid {
        let s = pair.stability(temp);
        let (ct, cf, ce) = (
            pair.true_states().canonical(temp),
            pair.false_states().canonical(temp),
            eq.canonical(temp),
        );
        let stable = match s.verdict {
            Stability::StableTrue => "true",
            Stability::StableFalse => "false",
            Stability::Coexistence => "both",
        };
        t.row([
            num(temp),
            num(s.a_true),
            num(s.a_false),
            num(ce.free_energy),
            num(ct.energy),
            num(cf.energy),
            num(ce.energy),
            num(ce.entropy),
            num(ce.heat_capacity),
            num(s.ln_weight_ratio),
            stable.to_string(),
        ])?;
    }
    t.finish()
}
