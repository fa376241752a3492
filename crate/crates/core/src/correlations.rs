//! Quadratic structure of the learning potential around the standard state,
//! with optional couplings `γ` between weight fluctuations.
//!
//! Conventions: `Ã^(c)/T = Ã/T + ½ Σ γ_ij δx_i δx_j` over a subset of `M < 2^N`
//! configurations, so the Hessian of `Ã^(c)/T` at `x°` is
//! `α⁻¹ = diag(1/x°) + (1/x'°) 11ᵀ + γ`, where `x'° = 1 - Σ_subset x°`.
//! `α` is the covariance of `δx` and `α⁻¹` that of `δE/T`.

use std::io::Read;

use nalgebra::{DMatrix, DVector};

use crate::dataset::StandardModel;
use crate::spinspace::n_configs;
use crate::thermo::a_tilde_of_weights;
use crate::{Error, Result};

const SYMMETRY_TOL: f64 = 1e-12;
const CONDITION_WARNING: f64 = 1e12;

fn check_subset(standard: &StandardModel, subset: &[usize]) -> Result<()> {
    let size = n_configs(standard.n_spins());
    if subset.is_empty() || subset.len() >= size {
        return Err(Error::invalid(format!(
            "subset must hold between 1 and {} configurations",
            size - 1
        )));
    }
    let mut seen = vec![false; size];
    for &i in subset {
        if i >= size || std::mem::replace(&mut seen[i], true) {
            return Err(Error::invalid(format!("bad or repeated configuration {i}")));
        }
    }
    Ok(())
}

fn remainder_weight(standard: &StandardModel, subset: &[usize]) -> f64 {
    let x0 = standard.standard_weights();
    1.0 - subset.iter().map(|&i| x0[i]).sum::<f64>()
}

/// Ideal second-order expansion of `Ã^(M)/T` about `x°`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticForm {
    pub subset: Vec<usize>,
    /// `1/x_i°`.
    pub diagonal: Vec<f64>,
    /// `1/x'°`, multiplying `(Σ δx)²`.
    pub rank_one: f64,
    /// `-ln Z°`.
    pub constant: f64,
}

impl QuadraticForm {
    /// `½ Σ δx²/x° + ½ (Σ δx)²/x'° - ln Z°`.
    pub fn evaluate(&self, x: &[f64], standard_weights: &[f64]) -> f64 {
        let mut diag = 0.0;
        let mut total = 0.0;
        for ((&i, &xi), &d) in self.subset.iter().zip(x).zip(&self.diagonal) {
            let dx = xi - standard_weights[i];
            diag += d * dx * dx;
            total += dx;
        }
        0.5 * diag + 0.5 * self.rank_one * total * total + self.constant
    }

    pub fn matrix(&self) -> DMatrix<f64> {
        let m = self.subset.len();
        DMatrix::from_fn(m, m, |i, j| {
            self.rank_one + if i == j { self.diagonal[i] } else { 0.0 }
        })
    }
}

pub fn quadratic_expansion(standard: &StandardModel, subset: &[usize]) -> Result<QuadraticForm> {
    check_subset(standard, subset)?;
    let x0 = standard.standard_weights();
    Ok(QuadraticForm {
        subset: subset.to_vec(),
        diagonal: subset.iter().map(|&i| 1.0 / x0[i]).collect(),
        rank_one: 1.0 / remainder_weight(standard, subset),
        constant: -standard.ln_partition(),
    })
}

/// Symmetric `γ` over a subset, accepted only if the resulting `α⁻¹` is
/// positive definite for the given standard model.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationSpec {
    subset: Vec<usize>,
    gamma: DMatrix<f64>,
}

impl CorrelationSpec {
    pub fn new(standard: &StandardModel, subset: Vec<usize>, gamma: DMatrix<f64>) -> Result<Self> {
        check_subset(standard, &subset)?;
        let m = subset.len();
        if gamma.nrows() != m || gamma.ncols() != m {
            return Err(Error::invalid(format!("γ must be {m}×{m}")));
        }
        if gamma.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("γ entries must be finite"));
        }
        for i in 0..m {
            for j in 0..i {
                if (gamma[(i, j)] - gamma[(j, i)]).abs() > SYMMETRY_TOL {
                    return Err(Error::invalid(format!("γ is not symmetric at ({i}, {j})")));
                }
            }
        }
        let spec = Self { subset, gamma };
        if spec.inverse_covariance(standard).cholesky().is_none() {
            return Err(Error::domain("α⁻¹ is not positive definite"));
        }
        Ok(spec)
    }

    /// `γ = 0`.
    pub fn ideal(standard: &StandardModel, subset: Vec<usize>) -> Result<Self> {
        let m = subset.len();
        Self::new(standard, subset, DMatrix::zeros(m, m))
    }

    pub fn subset(&self) -> &[usize] {
        &self.subset
    }

    pub fn gamma(&self) -> &DMatrix<f64> {
        &self.gamma
    }

    fn inverse_covariance(&self, standard: &StandardModel) -> DMatrix<f64> {
        let x0 = standard.standard_weights();
        let rest = 1.0 / remainder_weight(standard, &self.subset);
        let m = self.subset.len();
        DMatrix::from_fn(m, m, |i, j| {
            let diag = if i == j {
                1.0 / x0[self.subset[i]]
            } else {
                0.0
            };
            diag + rest + self.gamma[(i, j)]
        })
    }

    /// Reads the `γ` CSV: a header row of configuration indices followed by
    /// the matrix rows.
    pub fn read_csv<R: Read>(reader: R) -> Result<(Vec<usize>, DMatrix<f64>)> {
        let mut rdr = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .comment(Some(b'#'))
            .from_reader(reader);
        let subset: Vec<usize> = rdr
            .headers()?
            .iter()
            .map(|h| {
                h.parse().map_err(|_| Error::Parse {
                    line: 1,
                    msg: format!("bad index `{h}`"),
                })
            })
            .collect::<Result<_>>()?;
        let m = subset.len();
        let mut values = Vec::with_capacity(m * m);
        let mut rows = 0;
        for (r, rec) in rdr.records().enumerate() {
            let rec = rec?;
            for v in rec.iter() {
                values.push(v.parse::<f64>().map_err(|_| Error::Parse {
                    line: r + 2,
                    msg: format!("bad value `{v}`"),
                })?);
            }
            rows += 1;
        }
        if rows != m {
            return Err(Error::Parse {
                line: rows + 1,
                msg: format!("expected {m} rows, found {rows}"),
            });
        }
        Ok((subset, DMatrix::from_row_slice(m, m, &values)))
    }

    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(self.subset.iter().map(|i| i.to_string()))?;
        for row in self.gamma.row_iter() {
            w.write_record(row.iter().map(|v| v.to_string()))?;
        }
        w.flush()?;
        Ok(())
    }
}

fn subset_weights(
    standard: &StandardModel,
    corr: &CorrelationSpec,
    x: &[f64],
) -> Result<DVector<f64>> {
    if x.len() != corr.subset.len() {
        return Err(Error::invalid("one weight per subset entry is required"));
    }
    let x0 = standard.standard_weights();
    Ok(DVector::from_iterator(
        x.len(),
        corr.subset.iter().zip(x).map(|(&i, &v)| v - x0[i]),
    ))
}

/// `Ã^(c) = Ã + (T/2) δxᵀ γ δx`.
pub fn corrected_potential(
    standard: &StandardModel,
    corr: &CorrelationSpec,
    temperature: f64,
    x: &[f64],
) -> Result<f64> {
    let base = a_tilde_of_weights(standard, temperature, &corr.subset, x)?;
    let dx = subset_weights(standard, corr, x)?;
    Ok(base + 0.5 * temperature * (dx.transpose() * &corr.gamma * &dx)[(0, 0)])
}

/// `E_i = E_i° - T ln[(x_i/x_i°) e^{Σ_j γ_ij δx_j} / ((1 - Σx)/x'°)]` over
/// the subset, which is `E° - ∂Ã^(c)/∂x`.
pub fn constitutive_relation(
    standard: &StandardModel,
    corr: &CorrelationSpec,
    temperature: f64,
    x: &[f64],
) -> Result<Vec<f64>> {
    let dx = subset_weights(standard, corr, x)?;
    let rest = 1.0 - x.iter().sum::<f64>();
    if x.iter().any(|&v| !(v > 0.0)) || !(rest > 0.0) {
        return Err(Error::domain(
            "weights must lie strictly inside the simplex",
        ));
    }
    let x0 = standard.standard_weights();
    let rest0 = remainder_weight(standard, &corr.subset);
    let e0 = standard.standard_energies().values();
    let gdx = &corr.gamma * &dx;
    Ok(corr
        .subset
        .iter()
        .zip(x)
        .enumerate()
        .map(|(k, (&i, &xi))| {
            let log_term = (xi / x0[i]).ln() + gdx[k] - (rest / rest0).ln();
            e0[i] - temperature * log_term
        })
        .collect())
}

/// Weight covariance `α` and its inverse.
#[derive(Debug, Clone, PartialEq)]
pub struct FluctuationMatrices {
    pub covariance: DMatrix<f64>,
    pub inverse_covariance: DMatrix<f64>,
}

pub fn fluctuation_matrices(
    standard: &StandardModel,
    corr: &CorrelationSpec,
) -> Result<FluctuationMatrices> {
    let inv = corr.inverse_covariance(standard);
    let svd = inv.clone().svd(false, false);
    let (max, min) = (svd.singular_values.max(), svd.singular_values.min());
    if min == 0.0 || max / min > CONDITION_WARNING {
        log::warn!(
            "α⁻¹ condition number {:.3e} exceeds {CONDITION_WARNING:e}",
            max / min
        );
    }
    let chol = inv
        .clone()
        .cholesky()
        .ok_or_else(|| Error::domain("α⁻¹ is not positive definite"))?;
    Ok(FluctuationMatrices {
        covariance: chol.inverse(),
        inverse_covariance: inv,
    })
}

/// Second-order estimate `A^(c) ≈ A° - (1/2T) δEᵀ α δE` for energy shifts
/// `δE` over the subset.
pub fn corrected_free_energy(
    standard: &StandardModel,
    corr: &CorrelationSpec,
    temperature: f64,
    energy_shifts: &[f64],
) -> Result<f64> {
    if energy_shifts.len() != corr.subset.len() {
        return Err(Error::invalid(
            "one energy shift per subset entry is required",
        ));
    }
    let alpha = fluctuation_matrices(standard, corr)?.covariance;
    let de = DVector::from_column_slice(energy_shifts);
    let a0 = -temperature * standard.ln_partition();
    Ok(a0 - 0.5 / temperature * (de.transpose() * alpha * &de)[(0, 0)])
}
