//! The contextual ensemble: live energies measured against a calibrated
//! standard model, and the free energies built on top of it.

use crate::dataset::StandardModel;
use crate::numerics::log_sum_exp;
use crate::spinspace::{n_configs, spin_of, EnergyTable};
use crate::{Error, Result};

/// Central finite-difference step used by the derivative diagnostics.
pub const FD_STEP: f64 = 1e-5;

/// Standard model plus a set of live energies at temperature `T`.
#[derive(Debug, Clone, PartialEq)]
pub struct Ensemble {
    standard_energies: EnergyTable,
    standard_log_weights: Vec<f64>,
    live_energies: EnergyTable,
    temperature: f64,
}

impl Ensemble {
    pub fn new(
        standard: &StandardModel,
        live_energies: EnergyTable,
        temperature: f64,
    ) -> Result<Self> {
        if live_energies.n_spins() != standard.n_spins() {
            return Err(Error::DimensionMismatch {
                expected: standard.n_spins(),
                found: live_energies.n_spins(),
            });
        }
        if !(temperature > 0.0 && temperature.is_finite()) {
            return Err(Error::invalid("temperature must be positive"));
        }
        let ens = Self {
            standard_energies: standard.standard_energies().clone(),
            standard_log_weights: standard.log_weights().to_vec(),
            live_energies,
            temperature,
        };
        if let Some(i) = ens.log_weights().iter().position(|l| !l.is_finite()) {
            return Err(Error::domain(format!(
                "weight of configuration {i} is not finite at T = {temperature}"
            )));
        }
        Ok(ens)
    }

    /// The standard state itself: `E = E°`.
    pub fn standard(standard: &StandardModel, temperature: f64) -> Result<Self> {
        Self::new(standard, standard.standard_energies().clone(), temperature)
    }

    pub fn n_spins(&self) -> usize {
        self.live_energies.n_spins()
    }

    pub fn temperature(&self) -> f64 {
        self.temperature
    }

    pub fn standard_energies(&self) -> &EnergyTable {
        &self.standard_energies
    }

    pub fn standard_log_weights(&self) -> &[f64] {
        &self.standard_log_weights
    }

    pub fn live_energies(&self) -> &EnergyTable {
        &self.live_energies
    }

    pub fn with_live_energies(&self, live: EnergyTable) -> Result<Self> {
        let mut out = self.clone();
        if live.n_spins() != self.n_spins() {
            return Err(Error::DimensionMismatch {
                expected: self.n_spins(),
                found: live.n_spins(),
            });
        }
        out.live_energies = live;
        Ok(out)
    }

    pub fn with_temperature(&self, temperature: f64) -> Result<Self> {
        if !(temperature > 0.0 && temperature.is_finite()) {
            return Err(Error::invalid("temperature must be positive"));
        }
        let mut out = self.clone();
        out.temperature = temperature;
        Ok(out)
    }

    /// `E_i - E_i°`.
    pub fn deviations(&self) -> Vec<f64> {
        self.live_energies
            .values()
            .iter()
            .zip(self.standard_energies.values())
            .map(|(e, e0)| e - e0)
            .collect()
    }

    /// `ln Z_i = ln Z_i° - (E_i - E_i°)/T`.
    pub fn log_weights(&self) -> Vec<f64> {
        self.standard_log_weights
            .iter()
            .zip(self.deviations())
            .map(|(l0, d)| l0 - d / self.temperature)
            .collect()
    }

    /// `ln Z°`.
    pub fn ln_standard_partition(&self) -> f64 {
        log_sum_exp(&self.standard_log_weights)
    }

    /// Standard weights `x_i°`.
    pub fn standard_weights(&self) -> Vec<f64> {
        let lse = self.ln_standard_partition();
        self.standard_log_weights
            .iter()
            .map(|l| (l - lse).exp())
            .collect()
    }
}

/// Hard constraint on one spin, equivalent to `h_α = ±∞`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Pin {
    Up,
    Down,
}

impl Pin {
    fn spin(self) -> i8 {
        match self {
            Pin::Up => 1,
            Pin::Down => -1,
        }
    }
}

/// Onsite source fields. A pinned site ignores its finite `h` entry.
#[derive(Debug, Clone, PartialEq)]
pub struct SourceField {
    h: Vec<f64>,
    pins: Vec<Option<Pin>>,
}

impl SourceField {
    pub fn new(h: Vec<f64>) -> Result<Self> {
        if let Some(a) = h.iter().position(|v| !v.is_finite()) {
            return Err(Error::invalid(format!(
                "field on spin {} is not finite; pin the spin instead",
                a + 1
            )));
        }
        let pins = vec![None; h.len()];
        Ok(Self { h, pins })
    }

    pub fn zeros(n_spins: usize) -> Self {
        Self {
            h: vec![0.0; n_spins],
            pins: vec![None; n_spins],
        }
    }

    /// Pins spin `alpha` (1-based).
    pub fn pinned(mut self, alpha: usize, pin: Pin) -> Result<Self> {
        if alpha == 0 || alpha > self.h.len() {
            return Err(Error::invalid(format!("spin index {alpha} out of range")));
        }
        self.pins[alpha - 1] = Some(pin);
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.h.len()
    }

    pub fn is_empty(&self) -> bool {
        self.h.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.h
    }

    pub fn pins(&self) -> &[Option<Pin>] {
        &self.pins
    }

    pub fn has_pins(&self) -> bool {
        self.pins.iter().any(Option::is_some)
    }

    fn check(&self, n_spins: usize) -> Result<()> {
        if self.h.len() != n_spins {
            return Err(Error::DimensionMismatch {
                expected: n_spins,
                found: self.h.len(),
            });
        }
        Ok(())
    }

    fn allows(&self, config: usize) -> bool {
        self.pins
            .iter()
            .enumerate()
            .all(|(b, p)| p.is_none_or(|p| spin_of(config, b) == p.spin()))
    }

    /// `⟨h|σ_i⟩` over the unpinned sites.
    fn coupling(&self, config: usize) -> f64 {
        self.h
            .iter()
            .zip(&self.pins)
            .enumerate()
            .filter(|(_, (_, p))| p.is_none())
            .map(|(b, (h, _))| h * f64::from(spin_of(config, b)))
            .sum()
    }
}

/// `ln(Z_i e^{⟨h|σ_i⟩/T})`, with `-inf` for configurations excluded by pins.
fn biased_log_weights(ens: &Ensemble, field: Option<&SourceField>) -> Result<Vec<f64>> {
    let mut logs = ens.log_weights();
    if let Some(f) = field {
        f.check(ens.n_spins())?;
        let t = ens.temperature;
        for (i, l) in logs.iter_mut().enumerate() {
            *l = if f.allows(i) {
                *l + f.coupling(i) / t
            } else {
                f64::NEG_INFINITY
            };
        }
    }
    Ok(logs)
}

/// Normalized, field-biased weights `x_i`.
pub fn weights(ens: &Ensemble, field: Option<&SourceField>) -> Result<Vec<f64>> {
    let logs = biased_log_weights(ens, field)?;
    let lse = log_sum_exp(&logs);
    assert!(
        lse.is_finite(),
        "partition sum must be finite after max shift"
    );
    Ok(logs.iter().map(|l| (l - lse).exp()).collect())
}

/// `A = -T ln Σ_i Z_i`.
pub fn free_energy_a(ens: &Ensemble) -> f64 {
    -ens.temperature * log_sum_exp(&ens.log_weights())
}

/// Entropy, energy and heat capacity measured from the standard state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Thermo {
    pub entropy: f64,
    pub energy: f64,
    pub heat_capacity: f64,
}

/// `Σ x ln(x/y)` with the `0 ln 0 = 0` convention.
pub fn kl_divergence(x: &[f64], y: &[f64]) -> f64 {
    x.iter()
        .zip(y)
        .filter(|(&a, _)| a > 0.0)
        .map(|(&a, &b)| a * (a / b).ln())
        .sum()
}

pub fn entropy_energy_heatcap(ens: &Ensemble) -> Thermo {
    let x = weights(ens, None).expect("unbiased weights");
    let x0 = ens.standard_weights();
    let d = ens.deviations();
    let energy: f64 = x.iter().zip(&d).map(|(a, b)| a * b).sum();
    let second: f64 = x
        .iter()
        .zip(&d)
        .map(|(a, b)| a * (b - energy) * (b - energy))
        .sum();
    let t = ens.temperature;
    Thermo {
        entropy: ens.ln_standard_partition() - kl_divergence(&x, &x0),
        energy,
        heat_capacity: second / (t * t),
    }
}

fn check_subset(subset: &[usize], n_spins: usize) -> Result<()> {
    let size = n_configs(n_spins);
    if subset.is_empty() || subset.len() > size {
        return Err(Error::invalid(format!(
            "subset size must be between 1 and {size}, got {}",
            subset.len()
        )));
    }
    let mut seen = vec![false; size];
    for &i in subset {
        if i >= size {
            return Err(Error::invalid(format!("configuration {i} out of range")));
        }
        if std::mem::replace(&mut seen[i], true) {
            return Err(Error::invalid(format!("configuration {i} listed twice")));
        }
    }
    Ok(())
}

/// `Ã^(M)` as a function of the `M` weights on `subset`. The remaining
/// configurations enter only through their total weight `1 - Σx`.
pub fn a_tilde_of_weights(
    standard: &StandardModel,
    temperature: f64,
    subset: &[usize],
    x: &[f64],
) -> Result<f64> {
    let n = standard.n_spins();
    check_subset(subset, n)?;
    if x.len() != subset.len() {
        return Err(Error::invalid("one weight per subset entry is required"));
    }
    if x.iter().any(|&v| !(v >= 0.0)) {
        return Err(Error::domain("weights must be non-negative"));
    }
    let x0 = standard.standard_weights();
    let ln_z0 = standard.ln_partition();
    let mut sum = 0.0;
    for (&i, &xi) in subset.iter().zip(x) {
        if xi > 0.0 {
            sum += xi * (xi / x0[i]).ln();
        }
    }
    if subset.len() < n_configs(n) {
        let rest = 1.0 - x.iter().sum::<f64>();
        let rest0 = 1.0 - subset.iter().map(|&i| x0[i]).sum::<f64>();
        if rest < 0.0 {
            return Err(Error::domain("subset weights exceed one"));
        }
        if rest > 0.0 {
            sum += rest * (rest / rest0).ln();
        }
    }
    Ok(temperature * sum - temperature * ln_z0)
}

/// `Ã^(M)` at the equilibrium weights of `ens`, restricted to `subset`.
pub fn a_tilde(ens: &Ensemble, standard: &StandardModel, subset: &[usize]) -> Result<f64> {
    check_subset(subset, ens.n_spins())?;
    let x = weights(ens, None)?;
    let xs: Vec<f64> = subset.iter().map(|&i| x[i]).collect();
    a_tilde_of_weights(standard, ens.temperature, subset, &xs)
}

/// `A - Σ_{i ∈ subset} (E_i - E_i°) x_i`. Agrees with [`a_tilde`] whenever the
/// live energies equal the standard ones outside `subset`.
pub fn a_tilde_legendre(ens: &Ensemble, subset: &[usize]) -> Result<f64> {
    check_subset(subset, ens.n_spins())?;
    let x = weights(ens, None)?;
    let d = ens.deviations();
    Ok(free_energy_a(ens) - subset.iter().map(|&i| d[i] * x[i]).sum::<f64>())
}

/// `A_trial + Σ_i x_i^trial (E_i° - E_i^trial) - A°`, non-negative by the
/// Gibbs inequality.
pub fn gibbs_inequality_residual(
    trial: &EnergyTable,
    standard: &StandardModel,
    temperature: f64,
) -> Result<f64> {
    let ens = Ensemble::new(standard, trial.clone(), temperature)?;
    let x = weights(&ens, None)?;
    let shift: f64 = x.iter().zip(ens.deviations()).map(|(a, d)| a * d).sum();
    let a0 = -temperature * standard.ln_partition();
    Ok(free_energy_a(&ens) - shift - a0)
}

/// `G = -T ln Σ_i Z_i e^{⟨h|σ_i⟩/T}`.
pub fn gibbs_g(ens: &Ensemble, field: &SourceField) -> Result<f64> {
    Ok(-ens.temperature * log_sum_exp(&biased_log_weights(ens, Some(field))?))
}

fn magnetizations_from(x: &[f64], n_spins: usize) -> Vec<f64> {
    (0..n_spins)
        .map(|b| {
            x.iter()
                .enumerate()
                .map(|(i, w)| w * f64::from(spin_of(i, b)))
                .sum()
        })
        .collect()
}

/// `m_α = Σ_i x_i σ_α^(i)` under the biased weights.
pub fn magnetizations(ens: &Ensemble, field: &SourceField) -> Result<Vec<f64>> {
    let x = weights(ens, Some(field))?;
    Ok(magnetizations_from(&x, ens.n_spins()))
}

/// Result of [`conjoint_check`]. Residuals are absolute, derivative residuals
/// are relative to `max(1, |analytic|)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConjointReport {
    pub a: f64,
    pub g: f64,
    pub g_tilde: f64,
    pub a_tilde: f64,
    pub magnetizations: Vec<f64>,
    /// `|Ã - G̃ - Σ h m|`.
    pub legendre_residual: f64,
    /// `|Ã - (T Σ x ln(x/x°) - T ln Z°)|` at the biased weights.
    pub divergence_residual: f64,
    /// Finite-difference `∂G̃/∂h` against `-m - Σ (E-E°) ∂x/∂h`.
    pub g_tilde_derivative_residual: f64,
    /// Finite-difference `∂Ã/∂h` against `Σ h ∂m/∂h - Σ (E-E°) ∂x/∂h`.
    pub a_tilde_derivative_residual: f64,
}

impl ConjointReport {
    pub fn max_residual(&self) -> f64 {
        self.legendre_residual
            .max(self.divergence_residual)
            .max(self.g_tilde_derivative_residual)
            .max(self.a_tilde_derivative_residual)
    }
}

struct Conjoint {
    g: f64,
    g_tilde: f64,
    a_tilde: f64,
    x: Vec<f64>,
    m: Vec<f64>,
}

fn conjoint_values(ens: &Ensemble, h: &[f64]) -> Result<Conjoint> {
    let field = SourceField::new(h.to_vec())?;
    let g = gibbs_g(ens, &field)?;
    let x = weights(ens, Some(&field))?;
    let m = magnetizations_from(&x, ens.n_spins());
    let shift: f64 = x.iter().zip(ens.deviations()).map(|(a, d)| a * d).sum();
    let hm: f64 = h.iter().zip(&m).map(|(a, b)| a * b).sum();
    Ok(Conjoint {
        g,
        g_tilde: g - shift,
        a_tilde: g + hm - shift,
        x,
        m,
    })
}

/// Verifies the constrained Legendre pair `(G̃, Ã)` at the given field. At
/// `E = E°` the derivative relations reduce to `m = -∂G̃/∂h` and
/// `h = ∂Ã/∂m`; away from it they carry the `(E-E°) ∂x/∂h` term.
pub fn conjoint_check(ens: &Ensemble, field: &SourceField) -> Result<ConjointReport> {
    field.check(ens.n_spins())?;
    if field.has_pins() {
        return Err(Error::invalid(
            "conjoint check needs finite fields on every spin",
        ));
    }
    let n = ens.n_spins();
    let t = ens.temperature;
    let h = field.values();
    let c = conjoint_values(ens, h)?;
    let a = c.g + h.iter().zip(&c.m).map(|(a, b)| a * b).sum::<f64>();
    let hm: f64 = h.iter().zip(&c.m).map(|(a, b)| a * b).sum();
    let legendre_residual = (c.a_tilde - c.g_tilde - hm).abs();
    let divergence =
        t * kl_divergence(&c.x, &ens.standard_weights()) - t * ens.ln_standard_partition();
    let divergence_residual = (c.a_tilde - divergence).abs();

    let d = ens.deviations();
    let mut g_res: f64 = 0.0;
    let mut a_res: f64 = 0.0;
    for beta in 0..n {
        // ∂x_i/∂h_β = x_i (σ_β - m_β)/T ; ∂m_α/∂h_β = (⟨σ_α σ_β⟩ - m_α m_β)/T
        let mut dev_term = 0.0;
        let mut hm_term = 0.0;
        for (i, &xi) in c.x.iter().enumerate() {
            let sb = f64::from(spin_of(i, beta));
            dev_term += d[i] * xi * (sb - c.m[beta]) / t;
            let hs: f64 = (0..n).map(|a| h[a] * f64::from(spin_of(i, a))).sum();
            hm_term += xi * hs * sb / t;
        }
        hm_term -= h.iter().zip(&c.m).map(|(a, b)| a * b).sum::<f64>() * c.m[beta] / t;
        let dg_analytic = -c.m[beta] - dev_term;
        let da_analytic = hm_term - dev_term;

        let mut hp = h.to_vec();
        let mut hn = h.to_vec();
        hp[beta] += FD_STEP;
        hn[beta] -= FD_STEP;
        let (p, q) = (conjoint_values(ens, &hp)?, conjoint_values(ens, &hn)?);
        let dg_fd = (p.g_tilde - q.g_tilde) / (2.0 * FD_STEP);
        let da_fd = (p.a_tilde - q.a_tilde) / (2.0 * FD_STEP);
        g_res = g_res.max((dg_fd - dg_analytic).abs() / dg_analytic.abs().max(1.0));
        a_res = a_res.max((da_fd - da_analytic).abs() / da_analytic.abs().max(1.0));
    }

    Ok(ConjointReport {
        a,
        g: c.g,
        g_tilde: c.g_tilde,
        a_tilde: c.a_tilde,
        magnetizations: c.m,
        legendre_residual,
        divergence_residual,
        g_tilde_derivative_residual: g_res,
        a_tilde_derivative_residual: a_res,
    })
}
