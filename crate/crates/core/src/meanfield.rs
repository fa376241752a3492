//! Factorized (mean-field) free energy over magnetizations, its stationary
//! points and the structures built from them for the two-spin model.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::numerics::{bisect, ln_2cosh, neg_mixing_entropy};
use crate::spinspace::CouplingVector;
use crate::thermo::SourceField;
use crate::{Error, Result};

const DAMPING: f64 = 0.5;
const MAX_ITERATIONS: usize = 100_000;
const STEP_TOL: f64 = 1e-14;
const DEDUP_DISTANCE: f64 = 1e-6;
const DEGENERATE_EIGENVALUE: f64 = 1e-8;
const SEED_CORNER: f64 = 0.99;
/// Largest representable magnetization below one.
const M_EDGE: f64 = 1.0 - f64::EPSILON / 2.0;

#[derive(Debug, Clone, PartialEq)]
pub struct MeanFieldModel {
    couplings: CouplingVector,
    temperature: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PointKind {
    Minimum,
    Saddle,
    Maximum,
    /// Some Hessian eigenvalue is too close to zero to classify.
    Degenerate,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StationaryPoint {
    pub m: Vec<f64>,
    pub kind: PointKind,
    /// `Ã(m)`.
    pub value: f64,
    /// `Ã(m) - Σ h m`.
    pub tilted_value: f64,
    pub gradient_norm: f64,
    pub converged: bool,
}

impl MeanFieldModel {
    pub fn new(couplings: CouplingVector, temperature: f64) -> Result<Self> {
        if !(temperature > 0.0 && temperature.is_finite()) {
            return Err(Error::invalid("temperature must be positive"));
        }
        if couplings.values().iter().any(|j| !j.is_finite()) {
            return Err(Error::invalid("couplings must be finite"));
        }
        Ok(Self {
            couplings,
            temperature,
        })
    }

    /// Two spins with `J₁₂ = -j`, so the energy is `j σ₁σ₂`.
    pub fn inverter(j: f64, temperature: f64) -> Result<Self> {
        Self::new(CouplingVector::zeros(2)?.with(3, -j)?, temperature)
    }

    pub fn n_spins(&self) -> usize {
        self.couplings.n_spins()
    }

    pub fn temperature(&self) -> f64 {
        self.temperature
    }

    pub fn couplings(&self) -> &CouplingVector {
        &self.couplings
    }

    fn check_m(&self, m: &[f64]) -> Result<()> {
        if m.len() != self.n_spins() {
            return Err(Error::DimensionMismatch {
                expected: self.n_spins(),
                found: m.len(),
            });
        }
        if let Some(a) = m.iter().position(|v| !(v.abs() < 1.0)) {
            return Err(Error::domain(format!(
                "magnetization of spin {} must lie in (-1, 1), got {}",
                a + 1,
                m[a]
            )));
        }
        Ok(())
    }

    /// `E°(σ)` with every spin replaced by its magnetization.
    pub fn energy(&self, m: &[f64]) -> f64 {
        -self
            .couplings
            .values()
            .iter()
            .enumerate()
            .map(|(k, &j)| j * subset_product(m, k, usize::MAX))
            .sum::<f64>()
    }

    /// `-Σ_α` mixing entropy of each spin.
    pub fn entropy(&self, m: &[f64]) -> f64 {
        -m.iter().map(|&v| neg_mixing_entropy(v)).sum::<f64>()
    }

    /// `Ã(m) = E°(m) - T S(m)`.
    pub fn free_energy(&self, m: &[f64]) -> Result<f64> {
        self.check_m(m)?;
        Ok(self.energy(m) - self.temperature * self.entropy(m))
    }

    /// `∂E°/∂m_α`, from the exact multilinear form.
    pub fn energy_gradient(&self, m: &[f64]) -> Vec<f64> {
        let n = self.n_spins();
        let mut g = vec![0.0; n];
        for (k, &j) in self.couplings.values().iter().enumerate() {
            if j == 0.0 {
                continue;
            }
            for (a, ga) in g.iter_mut().enumerate() {
                if k >> a & 1 == 1 {
                    *ga -= j * subset_product(m, k, a);
                }
            }
        }
        g
    }

    /// Gradient of `Ã(m) - Σ h m`.
    pub fn tilted_gradient(&self, m: &[f64], h: &[f64]) -> Vec<f64> {
        self.energy_gradient(m)
            .iter()
            .zip(m)
            .zip(h)
            .map(|((g, &v), hv)| g + self.temperature * v.atanh() - hv)
            .collect()
    }

    pub fn hessian(&self, m: &[f64]) -> DMatrix<f64> {
        let n = self.n_spins();
        let mut h = DMatrix::zeros(n, n);
        for a in 0..n {
            h[(a, a)] = self.temperature / (1.0 - m[a] * m[a]);
        }
        for (k, &j) in self.couplings.values().iter().enumerate() {
            if j == 0.0 || k.count_ones() < 2 {
                continue;
            }
            for a in 0..n {
                for b in (a + 1)..n {
                    if k >> a & 1 == 1 && k >> b & 1 == 1 {
                        let v = -j * subset_product(m, k & !(1 << b), a);
                        h[(a, b)] += v;
                        h[(b, a)] += v;
                    }
                }
            }
        }
        h
    }

    pub fn classify(&self, m: &[f64]) -> PointKind {
        let eig = SymmetricEigen::new(self.hessian(m)).eigenvalues;
        if eig.iter().any(|l| l.abs() < DEGENERATE_EIGENVALUE) {
            PointKind::Degenerate
        } else if eig.iter().all(|&l| l > 0.0) {
            PointKind::Minimum
        } else if eig.iter().all(|&l| l < 0.0) {
            PointKind::Maximum
        } else {
            PointKind::Saddle
        }
    }

    fn fixed_point_map(&self, m: &[f64], h: &[f64]) -> Vec<f64> {
        self.energy_gradient(m)
            .iter()
            .zip(h)
            .map(|(g, hv)| ((hv - g) / self.temperature).tanh().clamp(-M_EDGE, M_EDGE))
            .collect()
    }

    /// Newton iterations on the tilted gradient, halving steps that would
    /// leave the open cube. Returns `None` if the Hessian is singular.
    fn newton(&self, m: &[f64], h: &[f64], iterations: usize) -> Option<Vec<f64>> {
        let mut m = m.to_vec();
        for _ in 0..iterations {
            let g = DVector::from_vec(self.tilted_gradient(&m, h));
            if g.norm() < 1e-13 {
                break;
            }
            let step = self.hessian(&m).lu().solve(&g)?;
            let mut t = 1.0;
            loop {
                let trial: Vec<f64> = m.iter().zip(step.iter()).map(|(v, s)| v - t * s).collect();
                if trial.iter().all(|v| v.abs() < 1.0) {
                    m = trial;
                    break;
                }
                t *= 0.5;
                if t < 1e-12 {
                    return Some(m);
                }
            }
        }
        Some(m)
    }

    fn point(&self, m: Vec<f64>, h: &[f64], converged: bool) -> StationaryPoint {
        let value = self.energy(&m) - self.temperature * self.entropy(&m);
        let hm: f64 = h.iter().zip(&m).map(|(a, b)| a * b).sum();
        let gradient_norm = self
            .tilted_gradient(&m, h)
            .iter()
            .map(|g| g * g)
            .sum::<f64>()
            .sqrt();
        StationaryPoint {
            kind: self.classify(&m),
            value,
            tilted_value: value - hm,
            gradient_norm,
            converged,
            m,
        }
    }

    /// Solves `m_α = tanh[(h_α - ∂E°/∂m_α)/T]` from the corners of the cube
    /// at `±0.99` plus the origin, using damped iteration followed by Newton
    /// polish. Points that never settle are kept with `converged = false`.
    pub fn solve(&self, field: &SourceField) -> Result<Vec<StationaryPoint>> {
        let n = self.n_spins();
        if field.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: field.len(),
            });
        }
        if field.has_pins() {
            return Err(Error::invalid("mean-field solver needs finite fields"));
        }
        let h = field.values();
        let mut seeds: Vec<Vec<f64>> = (0..1usize << n)
            .map(|c| {
                (0..n)
                    .map(|a| {
                        if c >> a & 1 == 1 {
                            SEED_CORNER
                        } else {
                            -SEED_CORNER
                        }
                    })
                    .collect()
            })
            .collect();
        seeds.push(vec![0.0; n]);

        let mut found: Vec<StationaryPoint> = Vec::new();
        for seed in seeds {
            let mut m = seed;
            let mut converged = false;
            for _ in 0..MAX_ITERATIONS {
                let target = self.fixed_point_map(&m, h);
                let mut delta: f64 = 0.0;
                for (v, t) in m.iter_mut().zip(&target) {
                    let next = (1.0 - DAMPING) * *v + DAMPING * t;
                    delta = delta.max((next - *v).abs());
                    *v = next;
                }
                if delta < STEP_TOL {
                    converged = true;
                    break;
                }
            }
            if converged {
                if let Some(polished) = self.newton(&m, h, 50) {
                    m = polished;
                }
            } else {
                log::warn!(
                    "mean-field iteration did not settle from a seed; keeping flagged point"
                );
            }
            let duplicate = found.iter().any(|p| {
                p.converged == converged
                    && p.m
                        .iter()
                        .zip(&m)
                        .map(|(a, b)| (a - b).powi(2))
                        .sum::<f64>()
                        .sqrt()
                        < DEDUP_DISTANCE
            });
            if !duplicate {
                found.push(self.point(m, h, converged));
            }
        }
        found.sort_by(|a, b| a.m.partial_cmp(&b.m).unwrap_or(std::cmp::Ordering::Equal));
        Ok(found)
    }

    /// Minima only, sorted by tilted value (deepest first).
    pub fn minima(&self, field: &SourceField) -> Result<Vec<StationaryPoint>> {
        let mut v: Vec<_> = self
            .solve(field)?
            .into_iter()
            .filter(|p| p.converged && p.kind == PointKind::Minimum)
            .collect();
        v.sort_by(|a, b| a.tilted_value.total_cmp(&b.tilted_value));
        Ok(v)
    }

    fn two_spin(&self) -> Result<()> {
        if self.n_spins() != 2 {
            return Err(Error::invalid("this operation is defined for two spins"));
        }
        Ok(())
    }

    /// The antiferromagnetic strength `J = -J₁₂` of a two-spin model.
    fn pair_coupling(&self) -> Result<f64> {
        self.two_spin()?;
        Ok(-self.couplings.get(3))
    }

    /// `Ã(m, -m)`.
    pub fn slice_free_energy(&self, m: f64) -> Result<f64> {
        self.two_spin()?;
        self.free_energy(&[m, -m])
    }

    /// `d/dm Ã(m, -m)`.
    pub fn slice_derivative(&self, m: f64) -> Result<f64> {
        self.two_spin()?;
        self.check_m(&[m, -m])?;
        let g = self.tilted_gradient(&[m, -m], &[0.0, 0.0]);
        Ok(g[0] - g[1])
    }

    /// `d²/dm² Ã(m, -m)`.
    pub fn slice_curvature(&self, m: f64) -> Result<f64> {
        self.two_spin()?;
        self.check_m(&[m, -m])?;
        let h = self.hessian(&[m, -m]);
        Ok(h[(0, 0)] + h[(1, 1)] - 2.0 * h[(0, 1)])
    }

    /// Inflection points `±m_sp` of `Ã(m, -m)`. `None` when `J/T < 1`; at
    /// `J/T = 1` both collapse to zero.
    pub fn spinodals(&self) -> Result<Option<(f64, f64)>> {
        let j = self.pair_coupling()?;
        let t = self.temperature;
        if (j - t).abs() <= 1e-12 * t {
            return Ok(Some((0.0, 0.0)));
        }
        if j < t {
            return Ok(None);
        }
        let upper = bisect(0.0, M_EDGE, 1e-12, |m| {
            self.slice_curvature(m).unwrap_or(f64::INFINITY)
        })?;
        let lower = bisect(-M_EDGE, 0.0, 1e-12, |m| {
            self.slice_curvature(m).unwrap_or(f64::INFINITY)
        })?;
        Ok(Some((lower, upper)))
    }

    /// Endpoint `h_c` of the `h₁ = h₂` phase boundary and `m₀ = √(1 - T/J)`
    /// for the pure inverter. `None` when `J ≤ T`.
    pub fn phase_boundary(&self) -> Result<Option<(f64, f64)>> {
        let j = self.pair_coupling()?;
        if self.couplings.get(1) != 0.0 || self.couplings.get(2) != 0.0 {
            return Err(Error::invalid(
                "phase boundary closed form needs J₁ = J₂ = 0",
            ));
        }
        let t = self.temperature;
        if j <= t {
            return Ok(None);
        }
        let m0 = (1.0 - t / j).sqrt();
        Ok(Some((j * m0 + t * m0.atanh(), m0)))
    }

    /// Number of local minima of `Ã(m, -m)`, read off from sign changes of
    /// the slice derivative on a uniform grid that skips `m = 0`.
    pub fn slice_minima_count(&self) -> Result<usize> {
        self.two_spin()?;
        const POINTS: usize = 4000;
        let step = 2.0 / (POINTS as f64 + 1.0);
        let mut count = 0;
        let mut prev = self.slice_derivative(-1.0 + 0.5 * step)?;
        for i in 1..=POINTS {
            let m = -1.0 + (i as f64 + 0.5) * step;
            let d = self.slice_derivative(m)?;
            if prev < 0.0 && d >= 0.0 {
                count += 1;
            }
            prev = d;
        }
        Ok(count)
    }

    fn branch_state(&self, m: Vec<f64>, h: &[f64]) -> BranchState {
        let energy = self.energy(&m);
        let entropy = self.entropy(&m);
        let hm: f64 = h.iter().zip(&m).map(|(a, b)| a * b).sum();
        BranchState {
            gibbs: energy - self.temperature * entropy - hm,
            energy,
            entropy,
            m,
        }
    }

    /// Follows each minimum of `Ã(m) - h·m` along `h = (h, -h)` by Newton
    /// continuation outward from `h = 0`. A branch ends where it loses
    /// positive curvature or its first magnetization changes sign.
    pub fn restricted_gibbs_branches(&self, grid: &[f64]) -> Result<Vec<BranchPoint>> {
        self.two_spin()?;
        if grid.iter().any(|h| !h.is_finite()) {
            return Err(Error::invalid("field grid must be finite"));
        }
        let start = self.minima(&SourceField::zeros(2))?;
        let pick = |positive: bool| {
            start
                .iter()
                .filter(|p| {
                    if positive {
                        p.m[0] >= 0.0
                    } else {
                        p.m[0] <= 0.0
                    }
                })
                .max_by(|a, b| a.m[0].abs().total_cmp(&b.m[0].abs()))
                .map(|p| p.m.clone())
        };
        let seeds = [pick(true), pick(false)];

        let mut order: Vec<usize> = (0..grid.len()).collect();
        order.sort_by(|&a, &b| grid[a].total_cmp(&grid[b]));
        let split = order.partition_point(|&i| grid[i] < 0.0);
        let (neg, pos) = order.split_at(split);

        let mut states: [Vec<Option<BranchState>>; 2] =
            [vec![None; grid.len()], vec![None; grid.len()]];
        for (b, seed) in seeds.iter().enumerate() {
            let Some(seed) = seed else { continue };
            let sign = seed[0].signum();
            for sweep in [pos.to_vec(), neg.iter().rev().copied().collect::<Vec<_>>()] {
                let mut m = seed.clone();
                for i in sweep {
                    let h = [grid[i], -grid[i]];
                    let Some(next) = self.newton(&m, &h, 100) else {
                        break;
                    };
                    let grad: f64 = self
                        .tilted_gradient(&next, &h)
                        .iter()
                        .map(|g| g.abs())
                        .sum();
                    let flipped = sign != 0.0 && next[0].signum() != sign;
                    if grad > 1e-9 || flipped || self.classify(&next) != PointKind::Minimum {
                        break;
                    }
                    states[b][i] = Some(self.branch_state(next.clone(), &h));
                    m = next;
                }
            }
        }
        let [plus, minus] = states;
        Ok(grid
            .iter()
            .zip(plus.into_iter().zip(minus))
            .map(|(&h, (plus, minus))| BranchPoint { h, plus, minus })
            .collect())
    }

    /// The two-spin Gibbs energy written through the auxiliary variables
    /// `η*₀ = m₁`, `η₀ = -m₂`, evaluated at every stationary point.
    pub fn saddle_point_gibbs(&self, h1: f64, h2: f64) -> Result<Vec<SaddlePointValue>> {
        let j = self.pair_coupling()?;
        let t = self.temperature;
        let j0 = self.couplings.get(0);
        let (e1, e2) = (h1 + self.couplings.get(1), h2 + self.couplings.get(2));
        let points = self.solve(&SourceField::new(vec![h1, h2])?)?;
        Ok(points
            .into_iter()
            .filter(|p| p.converged)
            .map(|p| {
                let eta_star = p.m[0];
                let eta = -p.m[1];
                let gibbs = -j0
                    + t * (j / t * eta_star * eta
                        - ln_2cosh((j * eta + e1) / t)
                        - ln_2cosh((j * eta_star - e2) / t));
                SaddlePointValue {
                    eta,
                    eta_star,
                    gibbs,
                    legendre_gibbs: p.tilted_value,
                    kind: p.kind,
                }
            })
            .collect())
    }
}

/// `Π_{β ∈ subset, β ≠ skip} m_β`.
fn subset_product(m: &[f64], subset: usize, skip: usize) -> f64 {
    m.iter()
        .enumerate()
        .filter(|&(b, _)| b != skip && subset >> b & 1 == 1)
        .map(|(_, v)| v)
        .product()
}

#[derive(Debug, Clone, PartialEq)]
pub struct BranchState {
    pub m: Vec<f64>,
    /// `G̃ = Ã(m) - h·m` at the branch minimum.
    pub gibbs: f64,
    pub energy: f64,
    pub entropy: f64,
}

/// One field value with the `m₁ > 0` (`plus`) and `m₁ < 0` (`minus`) branches.
#[derive(Debug, Clone, PartialEq)]
pub struct BranchPoint {
    pub h: f64,
    pub plus: Option<BranchState>,
    pub minus: Option<BranchState>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SaddlePointValue {
    pub eta: f64,
    pub eta_star: f64,
    pub gibbs: f64,
    /// `Ã(m) - h·m` at the same stationary point.
    pub legendre_gibbs: f64,
    pub kind: PointKind,
}
