use std::path::PathBuf;

use clap::Args;
use serde::{Deserialize, Serialize};
use spinthermo::dataset::{read_energies_csv, standardize, Dataset, UnrepresentedPolicy};
use spinthermo::spinspace::{subset_label, SpinConfig};

use crate::error::CliResult;
use crate::output::{num, open_input, RunOutput, Table};

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct FitArgs {
    /// Dataset CSV with header `config,count`.
    #[arg(long)]
    pub data: PathBuf,
    /// Output CSV of couplings and standard weights.
    #[arg(long)]
    pub out: PathBuf,
    /// Calibration temperature T°.
    #[arg(long, default_value_t = 1.0)]
    pub gauge_temp: f64,
    /// Spin count; required when configurations are given as decimal indices.
    #[arg(long)]
    pub spins: Option<usize>,
    /// Count given to unrepresented configurations (default 1e-9 × largest count).
    #[arg(long, conflicts_with = "unrep_energies")]
    pub floor: Option<f64>,
    /// CSV `config,energy` with standard energies of unrepresented configurations.
    #[arg(long)]
    pub unrep_energies: Option<PathBuf>,
}

pub fn run(args: &FitArgs) -> CliResult<RunOutput> {
    let data = Dataset::read_csv(open_input(&args.data)?, args.spins, args.gauge_temp)?;
    let policy = match (&args.floor, &args.unrep_energies) {
        (Some(eps), _) => UnrepresentedPolicy::Floor(*eps),
        (None, Some(path)) => UnrepresentedPolicy::ExplicitEnergies(read_energies_csv(
            open_input(path)?,
            data.n_spins(),
        )?),
        (None, None) => UnrepresentedPolicy::default_for(&data),
    };
    let model = standardize(&data, &policy)?;
    let n = model.n_spins();

    let mut t = Table::new(
        "fit",
        &[
            "k",
            "subset",
            "coupling",
            "config",
            "standard_weight",
            "standard_energy",
        ],
    )?;
    t.comment(format!(
        "fit spins={n} gauge_temperature={}",
        args.gauge_temp
    ));
    t.comment(match &policy {
        UnrepresentedPolicy::Floor(eps) => format!("unrepresented floor={eps:?}"),
        UnrepresentedPolicy::ExplicitEnergies(m) => {
            format!("unrepresented explicit energies={}", m.len())
        }
    });
    let couplings = model.standard_couplings().values();
    let weights = model.standard_weights();
    let energies = model.standard_energies().values();
    for k in 0..couplings.len() {
        let config = SpinConfig::new(k, n)?;
        t.row([
            k.to_string(),
            subset_label(k),
            num(couplings[k]),
            config.to_bit_string(),
            num(weights[k]),
            num(energies[k]),
        ])?;
    }
    let mut out = RunOutput::default();
    out.push(&args.out, t.finish()?);
    Ok(out)
}
