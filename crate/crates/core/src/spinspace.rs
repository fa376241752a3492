//! Configurations of `N` Ising spins and the exact transform between
//! per-configuration energies and interaction coefficients.
//!
//! A configuration is an `N`-bit index; bit `α-1` set means `σ_α = +1`.
//! Coupling component `k` multiplies the product of the spins whose bits are
//! set in `k`, so `k = 0` is the constant, `k = 0b011` is `σ₁σ₂`, and the
//! ordering coincides with the Kronecker product `(1,σ_N) ⊗ … ⊗ (1,σ₁)`.
//! With that alignment
//!
//! ```text
//! E_i = -Σ_k J_k χ(i, k)          J_k = -2^{-N} Σ_i χ(i, k) E_i
//! ```
//!
//! where `χ(i, k) = Π_{α∈k} σ_α^{(i)}`. Both directions are evaluated with an
//! in-place butterfly in `O(N 2^N)`.

use crate::{Error, Result};

/// Largest `N` accepted by the full-table operations (2^24 doubles ≈ 134 MB).
pub const MAX_SPINS: usize = 24;

fn check_n(n_spins: usize) -> Result<()> {
    if n_spins == 0 {
        return Err(Error::invalid("at least one spin is required"));
    }
    if n_spins > MAX_SPINS {
        return Err(Error::TooManySpins(n_spins));
    }
    Ok(())
}

/// Number of configurations `2^N`.
pub fn n_configs(n_spins: usize) -> usize {
    1usize << n_spins
}

/// One corner of the Hamming hypercube.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SpinConfig {
    index: u32,
    n_spins: usize,
}

impl SpinConfig {
    pub fn new(index: usize, n_spins: usize) -> Result<Self> {
        check_n(n_spins)?;
        if index >= n_configs(n_spins) {
            return Err(Error::invalid(format!(
                "configuration index {index} out of range for {n_spins} spins"
            )));
        }
        Ok(Self {
            index: index as u32,
            n_spins,
        })
    }

    /// Builds a configuration from spin values listed as `σ₁, σ₂, …`.
    pub fn from_spins(spins: &[i8]) -> Result<Self> {
        check_n(spins.len())?;
        let mut index = 0usize;
        for (alpha, &s) in spins.iter().enumerate() {
            match s {
                1 => index |= 1 << alpha,
                -1 => {}
                _ => return Err(Error::invalid(format!("spin value {s} is not ±1"))),
            }
        }
        Self::new(index, spins.len())
    }

    pub fn index(&self) -> usize {
        self.index as usize
    }

    pub fn n_spins(&self) -> usize {
        self.n_spins
    }

    /// `σ_α` for `α` in `1..=N`.
    pub fn spin(&self, alpha: usize) -> i8 {
        debug_assert!(alpha >= 1 && alpha <= self.n_spins);
        spin_of(self.index(), alpha - 1)
    }

    pub fn spins(&self) -> Vec<i8> {
        (0..self.n_spins)
            .map(|b| spin_of(self.index(), b))
            .collect()
    }

    /// Bit string with spin `N` leftmost.
    pub fn to_bit_string(&self) -> String {
        (0..self.n_spins)
            .rev()
            .map(|b| if self.index() >> b & 1 == 1 { '1' } else { '0' })
            .collect()
    }
}

/// `σ` of bit `bit` (zero-based) in configuration `index`.
#[inline]
pub fn spin_of(index: usize, bit: usize) -> i8 {
    if index >> bit & 1 == 1 {
        1
    } else {
        -1
    }
}

/// `χ(i, k)` on raw indices: `(-1)` to the number of down spins inside `k`.
#[inline]
pub fn character_raw(config: usize, subset: usize, n_spins: usize) -> i8 {
    let mask = n_configs(n_spins) - 1;
    if (subset & !config & mask).count_ones().is_multiple_of(2) {
        1
    } else {
        -1
    }
}

/// Product of the spins of `config` over the set bits of `subset`; `+1` for
/// the empty subset.
pub fn character(config: SpinConfig, subset: usize) -> Result<i8> {
    if subset >= n_configs(config.n_spins) {
        return Err(Error::invalid(format!(
            "subset mask {subset:#b} has bits beyond spin {}",
            config.n_spins
        )));
    }
    Ok(character_raw(config.index(), subset, config.n_spins))
}

/// Label of a coupling component, e.g. `J0`, `J2`, `J13`.
pub fn subset_label(subset: usize) -> String {
    if subset == 0 {
        return "J0".to_string();
    }
    let mut s = String::from("J");
    let mut bits = subset;
    let mut alpha = 1;
    while bits != 0 {
        if bits & 1 == 1 {
            if alpha > 9 {
                s.push('_');
            }
            s.push_str(&alpha.to_string());
        }
        bits >>= 1;
        alpha += 1;
    }
    s
}

fn check_table(values: &[f64], n_spins: usize, what: &str) -> Result<()> {
    check_n(n_spins)?;
    if values.len() != n_configs(n_spins) {
        return Err(Error::invalid(format!(
            "{what} has {} entries, expected 2^{n_spins} = {}",
            values.len(),
            n_configs(n_spins)
        )));
    }
    if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
        return Err(Error::domain(format!("{what} entry {pos} is not finite")));
    }
    Ok(())
}

/// The `2^N` interaction coefficients in Kronecker ordering.
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingVector {
    values: Vec<f64>,
    n_spins: usize,
}

impl CouplingVector {
    pub fn new(values: Vec<f64>, n_spins: usize) -> Result<Self> {
        check_table(&values, n_spins, "coupling vector")?;
        Ok(Self { values, n_spins })
    }

    pub fn zeros(n_spins: usize) -> Result<Self> {
        check_n(n_spins)?;
        Ok(Self {
            values: vec![0.0; n_configs(n_spins)],
            n_spins,
        })
    }

    /// Sets one component, identified by its subset mask.
    pub fn with(mut self, subset: usize, value: f64) -> Result<Self> {
        if subset >= self.values.len() {
            return Err(Error::invalid(format!(
                "subset mask {subset:#b} out of range"
            )));
        }
        if !value.is_finite() {
            return Err(Error::domain("coupling must be finite"));
        }
        self.values[subset] = value;
        Ok(self)
    }

    pub fn n_spins(&self) -> usize {
        self.n_spins
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, subset: usize) -> f64 {
        self.values[subset]
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }
}

/// Per-configuration energies indexed by [`SpinConfig::index`].
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyTable {
    values: Vec<f64>,
    n_spins: usize,
}

impl EnergyTable {
    pub fn new(values: Vec<f64>, n_spins: usize) -> Result<Self> {
        check_table(&values, n_spins, "energy table")?;
        Ok(Self { values, n_spins })
    }

    pub fn n_spins(&self) -> usize {
        self.n_spins
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, index: usize) -> f64 {
        self.values[index]
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }
}

/// `E = -⟨J|σ⟩` for a single configuration.
pub fn energy_of(couplings: &CouplingVector, config: SpinConfig) -> Result<f64> {
    if couplings.n_spins != config.n_spins {
        return Err(Error::DimensionMismatch {
            expected: couplings.n_spins,
            found: config.n_spins,
        });
    }
    let i = config.index();
    Ok(-couplings
        .values
        .iter()
        .enumerate()
        .map(|(k, &j)| j * f64::from(character_raw(i, k, config.n_spins)))
        .sum::<f64>())
}

/// Multiplies in place by the matrix `χ(i, k)` (coupling index → configuration
/// index). Each stage combines the `(1, σ_α)` factor of one spin: the
/// configuration with the bit clear (`σ = -1`) receives `c₀ - c₁`, the one with
/// the bit set receives `c₀ + c₁`.
pub fn characters_forward(values: &mut [f64]) {
    debug_assert!(values.len().is_power_of_two());
    let len = values.len();
    let mut stride = 1;
    while stride < len {
        for block in values.chunks_exact_mut(2 * stride) {
            let (lo, hi) = block.split_at_mut(stride);
            for (a, b) in lo.iter_mut().zip(hi.iter_mut()) {
                let c0 = *a;
                let c1 = *b;
                *a = c0 - c1;
                *b = c0 + c1;
            }
        }
        stride <<= 1;
    }
}

/// Multiplies in place by `χ(i, k)ᵀ` (configuration index → coupling index),
/// i.e. `out_k = Σ_i χ(i, k) v_i`, without normalization.
pub fn characters_transpose(values: &mut [f64]) {
    debug_assert!(values.len().is_power_of_two());
    let len = values.len();
    let mut stride = 1;
    while stride < len {
        for block in values.chunks_exact_mut(2 * stride) {
            let (lo, hi) = block.split_at_mut(stride);
            for (a, b) in lo.iter_mut().zip(hi.iter_mut()) {
                let down = *a;
                let up = *b;
                *a = down + up;
                *b = up - down;
            }
        }
        stride <<= 1;
    }
}

/// `J_k = -2^{-N} Σ_i χ(i, k) E_i`.
pub fn couplings_from_energies(energies: &EnergyTable) -> CouplingVector {
    let mut values = energies.values.clone();
    characters_transpose(&mut values);
    let scale = -1.0 / n_configs(energies.n_spins) as f64;
    values.iter_mut().for_each(|v| *v *= scale);
    CouplingVector {
        values,
        n_spins: energies.n_spins,
    }
}

/// `E_i = -Σ_k χ(i, k) J_k` for every configuration.
pub fn energies_from_couplings(couplings: &CouplingVector) -> EnergyTable {
    let mut values = couplings.values.clone();
    characters_forward(&mut values);
    values.iter_mut().for_each(|v| *v = -*v);
    EnergyTable {
        values,
        n_spins: couplings.n_spins,
    }
}
