//! Small numerical kernels shared by the thermodynamic modules.

use crate::{Error, Result};

/// `ln Σ exp(v)` with a max shift. Returns `-inf` for an empty slice or when
/// every entry is `-inf`.
pub fn log_sum_exp(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    if max == f64::INFINITY {
        return f64::INFINITY;
    }
    let sum: f64 = values.iter().map(|&v| (v - max).exp()).sum();
    max + sum.ln()
}

/// Normalized weights `exp(v_i - lse(v))`.
pub fn softmax(values: &[f64]) -> Vec<f64> {
    let lse = log_sum_exp(values);
    values.iter().map(|&v| (v - lse).exp()).collect()
}

/// `ln(2 cosh x)` without overflow.
pub fn ln_2cosh(x: f64) -> f64 {
    let a = x.abs();
    a + (-2.0 * a).exp().ln_1p()
}

/// Negative mixing entropy of a binary variable with mean `m`:
/// `(1+m)/2 ln((1+m)/2) + (1-m)/2 ln((1-m)/2)`, continuous at `|m| = 1`.
pub fn neg_mixing_entropy(m: f64) -> f64 {
    let p = 0.5 * (1.0 + m);
    let q = 0.5 * (1.0 - m);
    xlnx(p) + xlnx(q)
}

/// `x ln x` with the `0 ln 0 = 0` convention.
pub fn xlnx(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        x * x.ln()
    }
}

/// Cumulative table of `ln k!`.
#[derive(Debug, Clone)]
pub struct LnFactorials {
    table: Vec<f64>,
}

impl LnFactorials {
    pub fn new(max: usize) -> Self {
        let mut table = Vec::with_capacity(max + 1);
        let mut acc = 0.0;
        table.push(0.0);
        for k in 1..=max {
            acc += (k as f64).ln();
            table.push(acc);
        }
        Self { table }
    }

    pub fn ln_factorial(&self, k: usize) -> f64 {
        self.table[k]
    }

    /// `ln C(n, k)`; `-inf` when `k > n`.
    pub fn ln_binomial(&self, n: usize, k: usize) -> f64 {
        if k > n {
            return f64::NEG_INFINITY;
        }
        let k = k.min(n - k);
        self.table[n] - self.table[k] - self.table[n - k]
    }
}

/// Bisection on a bracketing interval. Stops when the interval is below
/// `tol` (absolute) or cannot be split further.
pub fn bisect<F>(mut lo: f64, mut hi: f64, tol: f64, mut f: F) -> Result<f64>
where
    F: FnMut(f64) -> f64,
{
    let mut f_lo = f(lo);
    let f_hi = f(hi);
    if f_lo == 0.0 {
        return Ok(lo);
    }
    if f_hi == 0.0 {
        return Ok(hi);
    }
    if f_lo.is_nan() || f_hi.is_nan() || f_lo.signum() == f_hi.signum() {
        return Err(Error::NoSolution(format!("no sign change on [{lo}, {hi}]")));
    }
    for _ in 0..2000 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi || hi - lo <= tol {
            break;
        }
        let f_mid = f(mid);
        if f_mid == 0.0 {
            return Ok(mid);
        }
        if f_mid.signum() == f_lo.signum() {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Golden-section search for the minimum of a unimodal function on `[lo, hi]`.
/// Returns `(argmin, min)`.
pub fn golden_min<F>(mut lo: f64, mut hi: f64, tol: f64, mut f: F) -> (f64, f64)
where
    F: FnMut(f64) -> f64,
{
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = hi - inv_phi * (hi - lo);
    let mut d = lo + inv_phi * (hi - lo);
    let mut fc = f(c);
    let mut fd = f(d);
    while (hi - lo).abs() > tol {
        if fc < fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - inv_phi * (hi - lo);
            fc = f(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + inv_phi * (hi - lo);
            fd = f(d);
        }
        if hi - lo <= f64::EPSILON * hi.abs().max(lo.abs()) {
            break;
        }
    }
    let x = 0.5 * (lo + hi);
    (x, f(x))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log_sum_exp_handles_large_arguments() {
        let v = [1000.0, 1000.0];
        assert!((log_sum_exp(&v) - (1000.0 + 2f64.ln())).abs() < 1e-12);
        assert_eq!(log_sum_exp(&[]), f64::NEG_INFINITY);
        assert_eq!(log_sum_exp(&[f64::NEG_INFINITY, 0.0]), 0.0);
    }

    #[test]
    fn ln_2cosh_matches_direct_form() {
        for &x in &[-3.0, -0.2, 0.0, 0.7, 5.0] {
            let direct = (2.0 * f64::cosh(x)).ln();
            assert!((ln_2cosh(x) - direct).abs() < 1e-14);
        }
        assert!((ln_2cosh(800.0) - 800.0).abs() < 1e-12);
    }

    #[test]
    fn ln_2cosh_entropy_identity() {
        // ln 2cosh(x) = -[(1+y) ln((1+y)/2) + (1-y) ln((1-y)/2)]/2 + x y, y = tanh x
        let mut x: f64 = -4.0;
        while x <= 4.0 {
            let y = x.tanh();
            let rhs = -neg_mixing_entropy(y) + x * y;
            assert!((ln_2cosh(x) - rhs).abs() < 1e-12, "x = {x}");
            x += 0.137;
        }
    }

    #[test]
    fn binomials() {
        let t = LnFactorials::new(60);
        assert!((t.ln_binomial(4, 2) - 6f64.ln()).abs() < 1e-12);
        assert_eq!(t.ln_binomial(5, 0), 0.0);
        assert_eq!(t.ln_binomial(3, 4), f64::NEG_INFINITY);
    }

    #[test]
    fn bisect_and_golden() {
        let r = bisect(0.0, 2.0, 1e-14, |x| x * x - 2.0).unwrap();
        assert!((r - 2f64.sqrt()).abs() < 1e-13);
        assert!(bisect(0.0, 1.0, 1e-12, |x| x + 1.0).is_err());
        let (x, v) = golden_min(-3.0, 5.0, 1e-10, |x| (x - 1.5) * (x - 1.5) + 2.0);
        assert!((x - 1.5).abs() < 1e-6);
        assert!((v - 2.0).abs() < 1e-12);
    }
}
