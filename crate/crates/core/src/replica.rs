//! Two interacting groups of `N_r` replicas, summed exactly over the sectors
//! `a = Σξ`, `b = Σζ` with energy `J a b / N_r`.
//!
//! Per-spin quantities divide by the total spin count `2 N_r`. The
//! magnetization along `(1, -1)` is `m = (⟨a⟩ - ⟨b⟩) / (2 N_r)`, which
//! reduces to `⟨a⟩/N_r` on the antisymmetric field line `h = (h, -h)`.

use crate::numerics::{bisect, log_sum_exp, LnFactorials};
use crate::{Error, Result};

pub const MAX_REPLICAS: usize = 2000;

#[derive(Debug, Clone)]
pub struct ReplicaModel {
    coupling: f64,
    temperature: f64,
    replicas: usize,
    ln_fact: LnFactorials,
}

impl ReplicaModel {
    pub fn new(coupling: f64, temperature: f64, replicas: usize) -> Result<Self> {
        if !(temperature > 0.0 && temperature.is_finite()) {
            return Err(Error::invalid("temperature must be positive"));
        }
        if !coupling.is_finite() {
            return Err(Error::invalid("coupling must be finite"));
        }
        if replicas == 0 {
            return Err(Error::invalid("at least one replica is required"));
        }
        if replicas > MAX_REPLICAS {
            return Err(Error::invalid(format!(
                "replica count {replicas} exceeds the limit of {MAX_REPLICAS}"
            )));
        }
        Ok(Self {
            coupling,
            temperature,
            replicas,
            ln_fact: LnFactorials::new(replicas),
        })
    }

    pub fn coupling(&self) -> f64 {
        self.coupling
    }

    pub fn temperature(&self) -> f64 {
        self.temperature
    }

    pub fn replicas(&self) -> usize {
        self.replicas
    }

    pub fn n_spins(&self) -> usize {
        2 * self.replicas
    }

    fn ups(&self, a: i64) -> Result<usize> {
        let n = self.replicas as i64;
        if a.abs() > n || (a + n) % 2 != 0 {
            return Err(Error::invalid(format!(
                "sector sum {a} is not reachable with {n} replicas"
            )));
        }
        Ok(((a + n) / 2) as usize)
    }

    fn sector_values(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        let n = self.replicas as i64;
        (0..=self.replicas).map(move |p| (p, (2 * p as i64 - n) as f64))
    }

    /// `ln[C(N_r, (N_r+a)/2) C(N_r, (N_r+b)/2)] - J a b/(N_r T) + (h₁ a + h₂ b)/T`.
    pub fn sector_log_weight(&self, a: i64, b: i64, h1: f64, h2: f64) -> Result<f64> {
        let (pa, pb) = (self.ups(a)?, self.ups(b)?);
        Ok(self.raw_log_weight(pa, a as f64, pb, b as f64, h1, h2))
    }

    fn raw_log_weight(&self, pa: usize, a: f64, pb: usize, b: f64, h1: f64, h2: f64) -> f64 {
        let n = self.replicas;
        let t = self.temperature;
        self.ln_fact.ln_binomial(n, pa) + self.ln_fact.ln_binomial(n, pb)
            - self.coupling * a * b / (n as f64 * t)
            + (h1 * a + h2 * b) / t
    }

    fn all_log_weights(&self, h1: f64, h2: f64) -> Vec<(f64, f64, f64)> {
        let mut out = Vec::with_capacity((self.replicas + 1).pow(2));
        for (pa, a) in self.sector_values() {
            for (pb, b) in self.sector_values() {
                out.push((a, b, self.raw_log_weight(pa, a, pb, b, h1, h2)));
            }
        }
        out
    }

    pub fn ln_partition(&self, h1: f64, h2: f64) -> f64 {
        let w: Vec<f64> = self.all_log_weights(h1, h2).iter().map(|s| s.2).collect();
        log_sum_exp(&w)
    }

    /// Total `G̃_eq = -T ln Z(h₁, h₂)`.
    pub fn equilibrium_gibbs(&self, h1: f64, h2: f64) -> f64 {
        -self.temperature * self.ln_partition(h1, h2)
    }

    pub fn equilibrium_gibbs_per_spin(&self, h1: f64, h2: f64) -> f64 {
        self.equilibrium_gibbs(h1, h2) / self.n_spins() as f64
    }

    /// `(⟨a⟩/N_r, ⟨b⟩/N_r)`. Mirror sectors `(a, b)` and `(-a, -b)` are
    /// differenced pairwise so that zero field gives exactly zero.
    pub fn group_magnetizations(&self, h1: f64, h2: f64) -> (f64, f64) {
        let n = self.replicas;
        let w: Vec<f64> = self.all_log_weights(h1, h2).iter().map(|s| s.2).collect();
        let lse = log_sum_exp(&w);
        let p = |pa: usize, pb: usize| (w[pa * (n + 1) + pb] - lse).exp();
        let (mut ma, mut mb) = (0.0, 0.0);
        for pa in 0..=n {
            for pb in 0..=n {
                let a = (2 * pa) as f64 - n as f64;
                let b = (2 * pb) as f64 - n as f64;
                let diff = p(pa, pb) - p(n - pa, n - pb);
                if 2 * pa > n {
                    ma += a * diff;
                }
                if 2 * pb > n {
                    mb += b * diff;
                }
            }
        }
        (ma / n as f64, mb / n as f64)
    }

    /// Magnetization along `(1, -1)` at field `(h, -h)`.
    pub fn equilibrium_magnetization(&self, h: f64) -> f64 {
        let (ma, mb) = self.group_magnetizations(h, -h);
        0.5 * (ma - mb)
    }

    /// Per-spin `Ã_eq(m) = G̃_eq(h)/(2N_r) + h m`, with `h(m)` found by
    /// bisection on the exact, strictly increasing `m(h)`.
    pub fn equilibrium_helmholtz_per_spin(&self, m: f64) -> Result<f64> {
        let h = self.field_for_magnetization(m)?;
        Ok(self.equilibrium_gibbs_per_spin(h, -h) + h * m)
    }

    /// Inverts `m(h)` on `[-h_max, h_max]`, `h_max = 50 (|J| + T)`.
    pub fn field_for_magnetization(&self, m: f64) -> Result<f64> {
        if m == 0.0 {
            return Ok(0.0);
        }
        let h_max = 50.0 * (self.coupling.abs() + self.temperature);
        let reach = self.equilibrium_magnetization(h_max);
        if !(m.abs() < reach) {
            return Err(Error::domain(format!(
                "magnetization {m} lies beyond the reachable range ±{reach}"
            )));
        }
        let h = bisect(0.0, h_max, 1e-14 * h_max, |h| {
            self.equilibrium_magnetization(h) - m.abs()
        })?;
        Ok(h.copysign(m))
    }

    /// `ln 𝒩(m) = 2 ln C(N_r, N_r(1+m)/2) + J N_r m²/T`, the sector
    /// `a = N_r m`, `b = -N_r m`.
    pub fn ln_density_of_states(&self, m: f64) -> Result<f64> {
        let n = self.replicas as f64;
        let a = n * m;
        let rounded = a.round();
        if (a - rounded).abs() > 1e-9 {
            return Err(Error::invalid(format!("N_r m = {a} is not an integer")));
        }
        let a = rounded as i64;
        let p = self.ups(a)?;
        Ok(2.0 * self.ln_fact.ln_binomial(self.replicas, p)
            + self.coupling * (a * a) as f64 / (n * self.temperature))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sector_examples() {
        let r = ReplicaModel::new(1.5, 1.0, 4).unwrap();
        assert!((r.sector_log_weight(4, 4, 0.0, 0.0).unwrap() + 1.5 * 4.0).abs() < 1e-14);
        let c = 6f64.ln();
        assert!((r.sector_log_weight(0, 0, 0.0, 0.0).unwrap() - 2.0 * c).abs() < 1e-14);
        assert!(r.sector_log_weight(1, 0, 0.0, 0.0).is_err());
        assert!(r.sector_log_weight(6, 0, 0.0, 0.0).is_err());
    }

    #[test]
    fn decoupled_gibbs() {
        let r = ReplicaModel::new(0.0, 0.8, 7).unwrap();
        let h = 0.35;
        let g = r.equilibrium_gibbs_per_spin(h, -h);
        assert!((g + 0.8 * (2.0 * (h / 0.8).cosh()).ln()).abs() < 1e-12);
    }

    #[test]
    fn symmetric_magnetization_and_inverse() {
        let r = ReplicaModel::new(1.5, 1.0, 16).unwrap();
        assert_eq!(r.equilibrium_magnetization(0.0), 0.0);
        let m = r.equilibrium_magnetization(0.2);
        assert!((r.equilibrium_magnetization(-0.2) + m).abs() < 1e-14);
        let h = r.field_for_magnetization(m).unwrap();
        assert!((h - 0.2).abs() < 1e-9);
        assert!(r.field_for_magnetization(1.0).is_err());
    }

    #[test]
    fn density_of_states() {
        let r = ReplicaModel::new(1.5, 1.0, 2).unwrap();
        assert!((r.ln_density_of_states(0.0).unwrap() - 4f64.ln()).abs() < 1e-14);
        assert!((r.ln_density_of_states(1.0).unwrap() - 3.0).abs() < 1e-14);
        assert!(r.ln_density_of_states(0.5).is_err());
    }
}
