//! Configuration-count datasets, calibration into a standard model and the
//! log-ratio learning rule.

use std::collections::BTreeMap;
use std::io::Read;

use crate::numerics::log_sum_exp;
use crate::spinspace::{
    couplings_from_energies, n_configs, CouplingVector, EnergyTable, MAX_SPINS,
};
use crate::{Error, Result};

/// Relative floor used when no policy is given: `ε = 1e-9 · max count`.
pub const DEFAULT_RELATIVE_FLOOR: f64 = 1e-9;

/// Counts `Z_i` per configuration. Absent entries are unrepresented states.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    n_spins: usize,
    counts: BTreeMap<usize, f64>,
    gauge_temperature: f64,
}

impl Dataset {
    pub fn new(
        n_spins: usize,
        counts: BTreeMap<usize, f64>,
        gauge_temperature: f64,
    ) -> Result<Self> {
        if n_spins == 0 {
            return Err(Error::invalid("at least one spin is required"));
        }
        if n_spins > MAX_SPINS {
            return Err(Error::TooManySpins(n_spins));
        }
        if !(gauge_temperature > 0.0 && gauge_temperature.is_finite()) {
            return Err(Error::invalid("gauge temperature must be positive"));
        }
        let size = n_configs(n_spins);
        for (&i, &c) in &counts {
            if i >= size {
                return Err(Error::invalid(format!(
                    "configuration {i} out of range for {n_spins} spins"
                )));
            }
            if !(c.is_finite() && c >= 0.0) {
                return Err(Error::invalid(format!(
                    "count for configuration {i} must be finite and non-negative"
                )));
            }
        }
        if !counts.values().any(|&c| c > 0.0) {
            return Err(Error::invalid("dataset needs at least one positive count"));
        }
        Ok(Self {
            n_spins,
            counts,
            gauge_temperature,
        })
    }

    /// Dataset from `(index, count)` pairs with `T° = 1`.
    pub fn from_pairs(n_spins: usize, pairs: &[(usize, f64)]) -> Result<Self> {
        let mut counts = BTreeMap::new();
        for &(i, c) in pairs {
            if counts.insert(i, c).is_some() {
                return Err(Error::invalid(format!("configuration {i} listed twice")));
            }
        }
        Self::new(n_spins, counts, 1.0)
    }

    pub fn with_gauge_temperature(mut self, t: f64) -> Result<Self> {
        if !(t > 0.0 && t.is_finite()) {
            return Err(Error::invalid("gauge temperature must be positive"));
        }
        self.gauge_temperature = t;
        Ok(self)
    }

    pub fn n_spins(&self) -> usize {
        self.n_spins
    }

    pub fn gauge_temperature(&self) -> f64 {
        self.gauge_temperature
    }

    pub fn counts(&self) -> &BTreeMap<usize, f64> {
        &self.counts
    }

    /// Whether configuration `i` carries a strictly positive count.
    pub fn is_represented(&self, i: usize) -> bool {
        self.counts.get(&i).is_some_and(|&c| c > 0.0)
    }

    pub fn max_count(&self) -> f64 {
        self.counts.values().copied().fold(0.0, f64::max)
    }

    /// Reads the `config,count` CSV format. A config is either a bit string of
    /// length `N` (leftmost character is spin `N`) or a decimal index. When
    /// `n_spins` is `None`, every config must be a bit string of one common
    /// length, which then fixes `N`.
    pub fn read_csv<R: Read>(
        reader: R,
        n_spins: Option<usize>,
        gauge_temperature: f64,
    ) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .comment(Some(b'#'))
            .from_reader(reader);
        let headers = rdr.headers()?.clone();
        if headers.len() != 2 || &headers[0] != "config" || &headers[1] != "count" {
            return Err(Error::Parse {
                line: 1,
                msg: "expected header `config,count`".into(),
            });
        }
        let mut rows = Vec::new();
        for (n, rec) in rdr.records().enumerate() {
            let rec = rec?;
            let line = rec.position().map_or(n + 2, |p| p.line() as usize);
            if rec.len() != 2 {
                return Err(Error::Parse {
                    line,
                    msg: "expected two fields".into(),
                });
            }
            let count: f64 = rec[1].parse().map_err(|_| Error::Parse {
                line,
                msg: format!("bad count `{}`", &rec[1]),
            })?;
            rows.push((line, rec[0].to_string(), count));
        }
        let is_bits = |s: &str| !s.is_empty() && s.bytes().all(|b| b == b'0' || b == b'1');
        let n = match n_spins {
            Some(n) => n,
            None => {
                let first = rows.first().ok_or(Error::Parse {
                    line: 2,
                    msg: "dataset has no rows".into(),
                })?;
                let len = first.1.len();
                for (line, tok, _) in &rows {
                    if !is_bits(tok) || tok.len() != len {
                        return Err(Error::Parse {
                            line: *line,
                            msg: format!("`{tok}` is not a bit string of length {len}; pass the spin count explicitly to use decimal indices"),
                        });
                    }
                }
                len
            }
        };
        if n == 0 {
            return Err(Error::invalid("at least one spin is required"));
        }
        if n > MAX_SPINS {
            return Err(Error::TooManySpins(n));
        }
        let mut counts = BTreeMap::new();
        for (line, tok, count) in rows {
            let index = parse_config(&tok, n, line)?;
            if counts.insert(index, count).is_some() {
                return Err(Error::Parse {
                    line,
                    msg: format!("duplicate configuration `{tok}`"),
                });
            }
        }
        Self::new(n, counts, gauge_temperature)
    }
}

/// A configuration token: a bit string of length `n` (spin `N` leftmost) or a
/// decimal index.
fn parse_config(tok: &str, n: usize, line: usize) -> Result<usize> {
    let is_bits = !tok.is_empty() && tok.len() == n && tok.bytes().all(|b| b == b'0' || b == b'1');
    let index = if is_bits {
        usize::from_str_radix(tok, 2).expect("validated bit string")
    } else {
        tok.parse::<usize>().map_err(|_| Error::Parse {
            line,
            msg: format!("bad configuration `{tok}`"),
        })?
    };
    if index >= n_configs(n) {
        return Err(Error::Parse {
            line,
            msg: format!("configuration `{tok}` out of range for {n} spins"),
        });
    }
    Ok(index)
}

/// Reads standard energies for unrepresented configurations from a
/// `config,energy` CSV.
pub fn read_energies_csv<R: Read>(reader: R, n_spins: usize) -> Result<BTreeMap<usize, f64>> {
    if n_spins > MAX_SPINS {
        return Err(Error::TooManySpins(n_spins));
    }
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(reader);
    let headers = rdr.headers()?.clone();
    if headers.len() != 2 || &headers[0] != "config" || &headers[1] != "energy" {
        return Err(Error::Parse {
            line: 1,
            msg: "expected header `config,energy`".into(),
        });
    }
    let mut out = BTreeMap::new();
    for (n, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let line = rec.position().map_or(n + 2, |p| p.line() as usize);
        if rec.len() != 2 {
            return Err(Error::Parse {
                line,
                msg: "expected two fields".into(),
            });
        }
        let index = parse_config(&rec[0], n_spins, line)?;
        let energy: f64 = rec[1].parse().map_err(|_| Error::Parse {
            line,
            msg: format!("bad energy `{}`", &rec[1]),
        })?;
        if out.insert(index, energy).is_some() {
            return Err(Error::Parse {
                line,
                msg: format!("duplicate configuration `{}`", &rec[0]),
            });
        }
    }
    Ok(out)
}

/// How unrepresented configurations enter the standard model.
#[derive(Debug, Clone, PartialEq)]
pub enum UnrepresentedPolicy {
    /// Give every unrepresented state the count `ε > 0`.
    Floor(f64),
    /// Explicit standard energies for the unrepresented states.
    ExplicitEnergies(BTreeMap<usize, f64>),
}

impl UnrepresentedPolicy {
    pub fn default_for(dataset: &Dataset) -> Self {
        UnrepresentedPolicy::Floor(DEFAULT_RELATIVE_FLOOR * dataset.max_count())
    }
}

/// Calibrated reference state: `E_i° = -T° ln Z_i°`, weights `x_i°` and the
/// couplings `J°` reproducing `E°` exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct StandardModel {
    gauge_temperature: f64,
    log_weights: Vec<f64>,
    standard_energies: EnergyTable,
    standard_weights: Vec<f64>,
    standard_couplings: CouplingVector,
}

impl StandardModel {
    /// Builds the standard model directly from `ln Z_i°`.
    pub fn from_log_weights(
        log_weights: Vec<f64>,
        n_spins: usize,
        gauge_temperature: f64,
    ) -> Result<Self> {
        if !(gauge_temperature > 0.0 && gauge_temperature.is_finite()) {
            return Err(Error::invalid("gauge temperature must be positive"));
        }
        let energies = EnergyTable::new(
            log_weights
                .iter()
                .map(|&l| -gauge_temperature * l)
                .collect(),
            n_spins,
        )?;
        let lse = log_sum_exp(&log_weights);
        let standard_weights: Vec<f64> = log_weights.iter().map(|&l| (l - lse).exp()).collect();
        if let Some(i) = standard_weights.iter().position(|&x| x <= 0.0) {
            return Err(Error::domain(format!(
                "standard weight of configuration {i} underflows to zero"
            )));
        }
        let standard_couplings = couplings_from_energies(&energies);
        Ok(Self {
            gauge_temperature,
            log_weights,
            standard_energies: energies,
            standard_weights,
            standard_couplings,
        })
    }

    /// Builds the standard model from `E_i°` in the `Z° = exp(-E°/T°)` gauge.
    pub fn from_energies(energies: &EnergyTable, gauge_temperature: f64) -> Result<Self> {
        let logs = energies
            .values()
            .iter()
            .map(|&e| -e / gauge_temperature)
            .collect();
        Self::from_log_weights(logs, energies.n_spins(), gauge_temperature)
    }

    /// Builds the standard model from couplings `J°` (gauge `T°`).
    pub fn from_couplings(couplings: &CouplingVector, gauge_temperature: f64) -> Result<Self> {
        Self::from_energies(
            &crate::spinspace::energies_from_couplings(couplings),
            gauge_temperature,
        )
    }

    pub fn n_spins(&self) -> usize {
        self.standard_energies.n_spins()
    }

    pub fn gauge_temperature(&self) -> f64 {
        self.gauge_temperature
    }

    /// `ln Z_i°`.
    pub fn log_weights(&self) -> &[f64] {
        &self.log_weights
    }

    /// `ln Z°`.
    pub fn ln_partition(&self) -> f64 {
        log_sum_exp(&self.log_weights)
    }

    pub fn standard_energies(&self) -> &EnergyTable {
        &self.standard_energies
    }

    pub fn standard_weights(&self) -> &[f64] {
        &self.standard_weights
    }

    pub fn standard_couplings(&self) -> &CouplingVector {
        &self.standard_couplings
    }
}

/// Calibrates a dataset. Represented states get `E° = -T° ln Z°`; the others
/// follow `policy`.
pub fn standardize(dataset: &Dataset, policy: &UnrepresentedPolicy) -> Result<StandardModel> {
    let n = dataset.n_spins;
    let t0 = dataset.gauge_temperature;
    let mut logs = vec![f64::NAN; n_configs(n)];
    for (&i, &c) in &dataset.counts {
        if c > 0.0 {
            logs[i] = c.ln();
        }
    }
    match policy {
        UnrepresentedPolicy::Floor(eps) => {
            if !(*eps > 0.0 && eps.is_finite()) {
                return Err(Error::invalid(format!(
                    "floor count must be positive, got {eps}"
                )));
            }
            logs.iter_mut()
                .filter(|l| l.is_nan())
                .for_each(|l| *l = eps.ln());
        }
        UnrepresentedPolicy::ExplicitEnergies(map) => {
            for (&i, &e) in map {
                if i >= logs.len() {
                    return Err(Error::invalid(format!("configuration {i} out of range")));
                }
                if dataset.is_represented(i) {
                    return Err(Error::invalid(format!(
                        "configuration {i} is represented; its energy follows from its count"
                    )));
                }
                if !e.is_finite() {
                    return Err(Error::invalid(format!(
                        "energy for configuration {i} is not finite"
                    )));
                }
                logs[i] = -e / t0;
            }
            if let Some(i) = logs.iter().position(|l| l.is_nan()) {
                return Err(Error::invalid(format!(
                    "configuration {i} is unrepresented and has no explicit energy"
                )));
            }
        }
    }
    StandardModel::from_log_weights(logs, n, t0)
}

/// `J'_k = J_k + (T/2^N) Σ_i χ(i,k) ln(Z_i/Z_i°)`.
pub fn learning_update(
    couplings: &CouplingVector,
    old_counts: &[f64],
    new_counts: &[f64],
    temperature: f64,
) -> Result<CouplingVector> {
    let size = n_configs(couplings.n_spins());
    if old_counts.len() != size || new_counts.len() != size {
        return Err(Error::invalid(format!(
            "count tables must have {size} entries"
        )));
    }
    if !(temperature > 0.0 && temperature.is_finite()) {
        return Err(Error::invalid("temperature must be positive"));
    }
    let mut ratios = Vec::with_capacity(size);
    for (i, (&old, &new)) in old_counts.iter().zip(new_counts).enumerate() {
        if !(old > 0.0 && new > 0.0 && old.is_finite() && new.is_finite()) {
            return Err(Error::invalid(format!(
                "counts for configuration {i} must be strictly positive; apply a floor first"
            )));
        }
        ratios.push((new / old).ln());
    }
    crate::spinspace::characters_transpose(&mut ratios);
    let scale = temperature / size as f64;
    let values = couplings
        .values()
        .iter()
        .zip(&ratios)
        .map(|(&j, &r)| j + scale * r)
        .collect();
    CouplingVector::new(values, couplings.n_spins())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spinspace::energies_from_couplings;

    fn inverter() -> Dataset {
        // ↑↓ = 1, ↓↑ = 2, ↑↑ = 3, ↓↓ = 0 (absent)
        Dataset::from_pairs(2, &[(1, 32.0), (2, 37.0), (3, 2.0)]).unwrap()
    }

    #[test]
    fn inverter_weights_with_floor() {
        let sm = standardize(&inverter(), &UnrepresentedPolicy::Floor(1e-6)).unwrap();
        let x = sm.standard_weights();
        assert!((x[1] - 0.4507).abs() < 1e-4);
        assert!((x[2] - 0.5211).abs() < 1e-4);
        assert!((x[3] - 0.0282).abs() < 1e-4);
        assert!((x[0] - 1.41e-8).abs() < 1e-10);
        assert!((x.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn single_configuration_is_lowest() {
        let ds = Dataset::from_pairs(3, &[(5, 1.0)]).unwrap();
        let sm = standardize(&ds, &UnrepresentedPolicy::default_for(&ds)).unwrap();
        let e = sm.standard_energies().values();
        assert!((0..8).filter(|&i| i != 5).all(|i| e[i] > e[5]));
    }

    #[test]
    fn uniform_counts() {
        let pairs: Vec<_> = (0..8).map(|i| (i, 3.0)).collect();
        let sm = standardize(
            &Dataset::from_pairs(3, &pairs).unwrap(),
            &UnrepresentedPolicy::Floor(1.0),
        )
        .unwrap();
        assert!(sm
            .standard_weights()
            .iter()
            .all(|&x| (x - 0.125).abs() < 1e-15));
        let j = sm.standard_couplings().values();
        assert!((j[0] - 3f64.ln()).abs() < 1e-15);
        assert!(j[1..].iter().all(|&v| v.abs() < 1e-15));
    }

    #[test]
    fn round_trip_standard_energies() {
        let ds = Dataset::from_pairs(3, &[(0, 4.0), (3, 9.5), (6, 0.2), (7, 1.0)]).unwrap();
        let sm = standardize(&ds, &UnrepresentedPolicy::default_for(&ds)).unwrap();
        let back = energies_from_couplings(sm.standard_couplings());
        for (a, b) in back.values().iter().zip(sm.standard_energies().values()) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn policy_errors() {
        let ds = inverter();
        assert!(standardize(&ds, &UnrepresentedPolicy::Floor(0.0)).is_err());
        assert!(standardize(&ds, &UnrepresentedPolicy::ExplicitEnergies(BTreeMap::new())).is_err());
        let mut m = BTreeMap::new();
        m.insert(0, 5.0);
        let sm = standardize(&ds, &UnrepresentedPolicy::ExplicitEnergies(m.clone())).unwrap();
        assert_eq!(sm.standard_energies().get(0), 5.0);
        m.insert(1, 0.0);
        assert!(standardize(&ds, &UnrepresentedPolicy::ExplicitEnergies(m)).is_err());
    }

    #[test]
    fn dataset_validation() {
        assert!(Dataset::from_pairs(2, &[(0, 0.0)]).is_err());
        assert!(Dataset::from_pairs(2, &[(4, 1.0)]).is_err());
        assert!(Dataset::from_pairs(2, &[(0, -1.0)]).is_err());
        assert!(Dataset::from_pairs(2, &[(0, 1.0), (0, 2.0)]).is_err());
        assert!(matches!(
            Dataset::from_pairs(30, &[(0, 1.0)]),
            Err(Error::TooManySpins(30))
        ));
    }

    #[test]
    fn csv_formats() {
        let text = "config,count\n01,32\n10,37\n11,2\n";
        let ds = Dataset::read_csv(text.as_bytes(), None, 1.0).unwrap();
        assert_eq!(ds.n_spins(), 2);
        assert_eq!(ds.counts()[&1], 32.0);
        assert_eq!(ds.counts()[&2], 37.0);

        let text = "config,count\n1,32\n2,37.5\n3,2\n";
        let ds = Dataset::read_csv(text.as_bytes(), Some(3), 1.0).unwrap();
        assert_eq!(ds.counts()[&2], 37.5);

        let dup = "config,count\n01,1\n01,2\n";
        assert!(matches!(
            Dataset::read_csv(dup.as_bytes(), None, 1.0),
            Err(Error::Parse { line: 3, .. })
        ));
        let dup_mixed = "config,count\n10,1\n2,2\n";
        assert!(Dataset::read_csv(dup_mixed.as_bytes(), Some(2), 1.0).is_err());
        assert!(Dataset::read_csv("cfg,count\n0,1\n".as_bytes(), Some(1), 1.0).is_err());
        assert!(Dataset::read_csv("config,count\n01,x\n".as_bytes(), None, 1.0).is_err());
        assert!(Dataset::read_csv("config,count\n01,1\n3,1\n".as_bytes(), None, 1.0).is_err());
    }

    #[test]
    fn learning_rule_examples() {
        let j = CouplingVector::new(vec![0.1, -0.2, 0.3, -1.5], 2).unwrap();
        let z = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(learning_update(&j, &z, &z, 1.0).unwrap(), j);

        let doubled: Vec<f64> = z.iter().map(|c| 2.0 * c).collect();
        let t = 0.7;
        let j2 = learning_update(&j, &z, &doubled, t).unwrap();
        assert!((j2.get(0) - j.get(0) - t * 2f64.ln()).abs() < 1e-14);
        for k in 1..4 {
            assert!((j2.get(k) - j.get(k)).abs() < 1e-14);
        }

        // Z/Z° = (1, e, e, 1): brute-force four-term sums give ΔJ = (1/2, 0, 0, -1/2)
        let e = std::f64::consts::E;
        let j0 = CouplingVector::zeros(2).unwrap();
        let d = learning_update(&j0, &[1.0; 4], &[1.0, e, e, 1.0], 1.0).unwrap();
        let expected = [0.5, 0.0, 0.0, -0.5];
        for k in 0..4 {
            assert!((d.get(k) - expected[k]).abs() < 1e-15);
        }

        assert!(learning_update(&j, &[0.0, 1.0, 1.0, 1.0], &z, 1.0).is_err());
    }

    #[test]
    fn learning_rule_is_not_cumulative() {
        let j = CouplingVector::zeros(2).unwrap();
        let base = [4.0, 1.0, 2.0, 8.0];
        let extra = [1.0, 3.0, 0.5, 2.0];
        let once: Vec<f64> = base.iter().zip(&extra).map(|(b, e)| b + e).collect();
        let twice: Vec<f64> = base.iter().zip(&extra).map(|(b, e)| b + 2.0 * e).collect();
        let step = learning_update(&j, &base, &once, 1.0).unwrap();
        let repeated = learning_update(&step, &base, &once, 1.0).unwrap();
        let direct = learning_update(&j, &base, &twice, 1.0).unwrap();
        let diff: f64 = repeated
            .values()
            .iter()
            .zip(direct.values())
            .map(|(a, b)| (a - b).abs())
            .sum();
        assert!(diff > 1e-3);
    }
}
