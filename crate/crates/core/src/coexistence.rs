//! Represented ("true") and unrepresented ("false") configurations treated
//! as two phases with their own restricted partition functions.

use std::fmt;
use std::io::Read;
use std::str::FromStr;

use crate::numerics::{bisect, golden_min, log_sum_exp, LnFactorials};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PhaseLabel {
    TrueStates,
    FalseStates,
    /// Union of both phases.
    Merged,
}

impl fmt::Display for PhaseLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PhaseLabel::TrueStates => "true_states",
            PhaseLabel::FalseStates => "false_states",
            PhaseLabel::Merged => "merged",
        })
    }
}

impl FromStr for PhaseLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "true_states" => Ok(PhaseLabel::TrueStates),
            "false_states" => Ok(PhaseLabel::FalseStates),
            "merged" => Ok(PhaseLabel::Merged),
            _ => Err(Error::invalid(format!("unknown phase label `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Level {
    pub energy: f64,
    /// `ln Ω`.
    pub log_degeneracy: f64,
}

/// Energy levels with strictly increasing energies.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    levels: Vec<Level>,
    label: PhaseLabel,
}

/// Canonical averages of one spectrum at one temperature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Canonical {
    pub free_energy: f64,
    pub energy: f64,
    pub entropy: f64,
    pub heat_capacity: f64,
}

impl Spectrum {
    pub fn new(levels: Vec<Level>, label: PhaseLabel) -> Result<Self> {
        if levels.is_empty() {
            return Err(Error::invalid("a spectrum needs at least one level"));
        }
        for l in &levels {
            if !l.energy.is_finite() || !l.log_degeneracy.is_finite() {
                return Err(Error::invalid(
                    "energies and log-degeneracies must be finite",
                ));
            }
            if l.log_degeneracy < 0.0 {
                return Err(Error::invalid(format!(
                    "log-degeneracy {} at energy {} is negative",
                    l.log_degeneracy, l.energy
                )));
            }
        }
        if levels.windows(2).any(|w| w[1].energy <= w[0].energy) {
            return Err(Error::invalid("energies must be strictly increasing"));
        }
        Ok(Self { levels, label })
    }

    pub fn levels(&self) -> &[Level] {
        &self.levels
    }

    pub fn label(&self) -> PhaseLabel {
        self.label
    }

    /// `ln Σ Ω`.
    pub fn ln_count(&self) -> f64 {
        log_sum_exp(
            &self
                .levels
                .iter()
                .map(|l| l.log_degeneracy)
                .collect::<Vec<_>>(),
        )
    }

    pub fn ln_partition(&self, t: f64) -> f64 {
        let v: Vec<f64> = self
            .levels
            .iter()
            .map(|l| l.log_degeneracy - l.energy / t)
            .collect();
        log_sum_exp(&v)
    }

    pub fn canonical(&self, t: f64) -> Canonical {
        let v: Vec<f64> = self
            .levels
            .iter()
            .map(|l| l.log_degeneracy - l.energy / t)
            .collect();
        let lnz = log_sum_exp(&v);
        let e: f64 = self
            .levels
            .iter()
            .zip(&v)
            .map(|(l, w)| (w - lnz).exp() * l.energy)
            .sum();
        let var: f64 = self
            .levels
            .iter()
            .zip(&v)
            .map(|(l, w)| (w - lnz).exp() * (l.energy - e).powi(2))
            .sum();
        let a = -t * lnz;
        Canonical {
            free_energy: a,
            energy: e,
            entropy: (e - a) / t,
            heat_capacity: var / (t * t),
        }
    }

    /// Union of two spectra; equal energies have their degeneracies added.
    pub fn merge(&self, other: &Spectrum) -> Spectrum {
        let mut all: Vec<Level> = self.levels.iter().chain(&other.levels).copied().collect();
        all.sort_by(|a, b| a.energy.total_cmp(&b.energy));
        let mut out: Vec<Level> = Vec::with_capacity(all.len());
        for l in all {
            match out.last_mut() {
                Some(last) if last.energy == l.energy => {
                    last.log_degeneracy = log_sum_exp(&[last.log_degeneracy, l.log_degeneracy]);
                }
                _ => out.push(l),
            }
        }
        Spectrum {
            levels: out,
            label: PhaseLabel::Merged,
        }
    }

    /// `(T', E(T'), S(T'))` on a geometric temperature grid with
    /// `per_decade` points per decade.
    pub fn microcanonical_curve(
        &self,
        t_lo: f64,
        t_hi: f64,
        per_decade: usize,
    ) -> Result<Vec<(f64, f64, f64)>> {
        if !(t_lo > 0.0 && t_hi > t_lo) {
            return Err(Error::invalid("temperature range must satisfy 0 < lo < hi"));
        }
        let decades = (t_hi / t_lo).log10();
        let n = ((decades * per_decade as f64).ceil() as usize).max(1);
        Ok((0..=n)
            .map(|i| {
                let t = t_lo * (t_hi / t_lo).powf(i as f64 / n as f64);
                let c = self.canonical(t);
                (t, c.energy, c.entropy)
            })
            .collect())
    }

    /// Temperature `T'` whose canonical energy is `e`, searched in
    /// `[T/1000, 1000 T]` on a log scale.
    fn temperature_for_energy(&self, e: f64, t: f64) -> Result<f64> {
        let (lo, hi) = ((t / 1000.0).ln(), (t * 1000.0).ln());
        let (e_lo, e_hi) = (
            self.canonical(lo.exp()).energy,
            self.canonical(hi.exp()).energy,
        );
        if !(e >= e_lo && e <= e_hi) {
            return Err(Error::domain(format!(
                "energy {e} outside the canonical range [{e_lo}, {e_hi}]"
            )));
        }
        let x = bisect(lo, hi, 1e-15, |x| self.canonical(x.exp()).energy - e)?;
        Ok(x.exp())
    }

    /// `F̃(E) = E - T S(E)` with `S(E)` from the canonical parametrization.
    pub fn tilted_potential(&self, t: f64, energies: &[f64]) -> Result<Vec<f64>> {
        energies
            .iter()
            .map(|&e| {
                let tp = self.temperature_for_energy(e, t)?;
                Ok(e - t * self.canonical(tp).entropy)
            })
            .collect()
    }

    /// Minimum of `F̃` over the parametrizing temperature: `(E*, F̃(E*))`.
    pub fn tilted_minimum(&self, t: f64) -> (f64, f64) {
        let f = |x: f64| {
            let c = self.canonical(x.exp());
            c.energy - t * c.entropy
        };
        let (x, v) = golden_min((t / 1000.0).ln(), (t * 1000.0).ln(), 1e-9, f);
        (self.canonical(x.exp()).energy, v)
    }

    pub fn read_csv<R: Read>(reader: R) -> Result<Vec<Spectrum>> {
        let mut rdr = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .comment(Some(b'#'))
            .from_reader(reader);
        let headers = rdr.headers()?.clone();
        if headers.iter().collect::<Vec<_>>() != ["energy", "log_degeneracy", "label"] {
            return Err(Error::Parse {
                line: 1,
                msg: "expected header `energy,log_degeneracy,label`".into(),
            });
        }
        let mut groups: Vec<(PhaseLabel, Vec<Level>)> = Vec::new();
        for (i, rec) in rdr.records().enumerate() {
            let rec = rec?;
            let line = i + 2;
            let parse = |s: &str| {
                s.parse::<f64>().map_err(|_| Error::Parse {
                    line,
                    msg: format!("bad number `{s}`"),
                })
            };
            let level = Level {
                energy: parse(&rec[0])?,
                log_degeneracy: parse(&rec[1])?,
            };
            let label: PhaseLabel = rec[2].parse().map_err(|_| Error::Parse {
                line,
                msg: format!("bad label `{}`", &rec[2]),
            })?;
            match groups.iter_mut().find(|g| g.0 == label) {
                Some(g) => g.1.push(level),
                None => groups.push((label, vec![level])),
            }
        }
        groups
            .into_iter()
            .map(|(label, levels)| Spectrum::new(levels, label))
            .collect()
    }

    pub fn write_csv<W: std::io::Write>(spectra: &[&Spectrum], out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["energy", "log_degeneracy", "label"])?;
        for s in spectra {
            for l in &s.levels {
                w.write_record([
                    l.energy.to_string(),
                    l.log_degeneracy.to_string(),
                    s.label.to_string(),
                ])?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stability {
    StableTrue,
    StableFalse,
    Coexistence,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StabilityReport {
    pub verdict: Stability,
    pub a_true: f64,
    pub a_false: f64,
    /// `Z_F / Z_T`.
    pub weight_ratio: f64,
    pub ln_weight_ratio: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhasePair {
    true_states: Spectrum,
    false_states: Spectrum,
    n_spins: usize,
}

impl PhasePair {
    pub fn new(true_states: Spectrum, false_states: Spectrum, n_spins: usize) -> Result<Self> {
        let total = log_sum_exp(&[true_states.ln_count(), false_states.ln_count()]);
        let limit = n_spins as f64 * std::f64::consts::LN_2;
        if total > limit * (1.0 + 1e-12) + 1e-12 {
            return Err(Error::invalid(format!(
                "spectra hold e^{total:.6} states, more than 2^{n_spins}"
            )));
        }
        Ok(Self {
            true_states,
            false_states,
            n_spins,
        })
    }

    pub fn true_states(&self) -> &Spectrum {
        &self.true_states
    }

    pub fn false_states(&self) -> &Spectrum {
        &self.false_states
    }

    pub fn n_spins(&self) -> usize {
        self.n_spins
    }

    pub fn equilibrium(&self) -> Spectrum {
        self.true_states.merge(&self.false_states)
    }

    pub fn stability(&self, t: f64) -> StabilityReport {
        let (lt, lf) = (
            self.true_states.ln_partition(t),
            self.false_states.ln_partition(t),
        );
        let (a_true, a_false) = (-t * lt, -t * lf);
        let d = lf - lt;
        let verdict = if d == 0.0 {
            Stability::Coexistence
        } else if d < 0.0 {
            Stability::StableTrue
        } else {
            Stability::StableFalse
        };
        StabilityReport {
            verdict,
            a_true,
            a_false,
            weight_ratio: d.exp(),
            ln_weight_ratio: d,
        }
    }

    /// `[E_F - E_T]/T - [S_F - S_T]`, which equals `(A_F - A_T)/T`.
    pub fn gap_criterion_residual(&self, t: f64) -> f64 {
        let (ct, cf) = (
            self.true_states.canonical(t),
            self.false_states.canonical(t),
        );
        (cf.energy - ct.energy) / t - (cf.entropy - ct.entropy)
    }

    /// Root of `A_T(T) - A_F(T)` in `[lo, hi]`, or `None` without a sign change.
    pub fn solve_t0(&self, lo: f64, hi: f64) -> Result<Option<f64>> {
        if !(lo > 0.0 && hi > lo) {
            return Err(Error::invalid("bracket must satisfy 0 < lo < hi"));
        }
        let diff = |t: f64| self.true_states.ln_partition(t) - self.false_states.ln_partition(t);
        match bisect(lo, hi, 1e-10 * lo, diff) {
            Ok(t) => {
                // relative refinement down to the floating-point limit
                let t = bisect(t * (1.0 - 1e-9), t * (1.0 + 1e-9), 0.0, diff).unwrap_or(t);
                Ok(Some(t))
            }
            Err(Error::NoSolution(_)) => Ok(None),
            Err(e) => Err(e),
        }
    }

    /// Latent heat `E_F - E_T` and `T ΔS` at temperature `t`.
    pub fn latent_heat(&self, t: f64) -> (f64, f64) {
        let (ct, cf) = (
            self.true_states.canonical(t),
            self.false_states.canonical(t),
        );
        (cf.energy - ct.energy, t * (cf.entropy - ct.entropy))
    }

    /// Temperature at which the two restricted `F̃` minima are equally deep.
    pub fn tilted_crossing(&self, lo: f64, hi: f64) -> Result<Option<f64>> {
        let d =
            |t: f64| self.true_states.tilted_minimum(t).1 - self.false_states.tilted_minimum(t).1;
        match bisect(lo, hi, 1e-13, d) {
            Ok(t) => Ok(Some(t)),
            Err(Error::NoSolution(_)) => Ok(None),
            Err(e) => Err(e),
        }
    }

    /// Canonical quantities of the merged spectrum on a temperature grid.
    pub fn equilibrium_curves(&self, temperatures: &[f64]) -> Vec<(f64, Canonical)> {
        let eq = self.equilibrium();
        temperatures.iter().map(|&t| (t, eq.canonical(t))).collect()
    }

    /// Location of the maximum of the equilibrium heat capacity, from a scan
    /// of `points` temperatures in `[lo, hi]` refined by golden section.
    pub fn heat_capacity_peak(&self, lo: f64, hi: f64, points: usize) -> f64 {
        let eq = self.equilibrium();
        let grid: Vec<f64> = (0..points)
            .map(|i| lo + (hi - lo) * i as f64 / (points - 1) as f64)
            .collect();
        let best = (0..points)
            .max_by(|&a, &b| {
                eq.canonical(grid[a])
                    .heat_capacity
                    .total_cmp(&eq.canonical(grid[b]).heat_capacity)
            })
            .unwrap_or(0);
        let l = grid[best.saturating_sub(1)];
        let h = grid[(best + 1).min(points - 1)];
        golden_min(l, h, 1e-12, |t| -eq.canonical(t).heat_capacity).0
    }
}

/// Parameters of the reference borderline construction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BorderlineParams {
    pub n_spins: usize,
    pub gauge_temperature: f64,
    /// Energy offset of the false block.
    pub offset: f64,
}

/// Reference two-block construction on `n_spins` (even) spins.
///
/// True block: `2^{N/2}` states, `C(N/2, k)` of them at energy `k`.
/// False block: the remaining `2^N - 2^{N/2}` states, `C(N, k) - C(N/2, k)`
/// at energy `offset + k`. The offset makes `A_T = A_F` at `T°`.
pub fn borderline_pair(
    n_spins: usize,
    gauge_temperature: f64,
) -> Result<(PhasePair, BorderlineParams)> {
    if n_spins < 2 || !n_spins.is_multiple_of(2) || n_spins > 1000 {
        return Err(Error::invalid(
            "reference construction needs an even spin count in [2, 1000]",
        ));
    }
    if !(gauge_temperature > 0.0) {
        return Err(Error::invalid("gauge temperature must be positive"));
    }
    let half = n_spins / 2;
    let lf = LnFactorials::new(n_spins);
    let true_levels: Vec<Level> = (0..=half)
        .map(|k| Level {
            energy: k as f64,
            log_degeneracy: lf.ln_binomial(half, k),
        })
        .collect();
    let false_log = |k: usize| {
        let full = lf.ln_binomial(n_spins, k);
        let sub = if k <= half {
            lf.ln_binomial(half, k)
        } else {
            f64::NEG_INFINITY
        };
        full + (-(sub - full).exp()).ln_1p()
    };
    let false_unshifted: Vec<Level> = (1..=n_spins)
        .map(|k| Level {
            energy: k as f64,
            log_degeneracy: false_log(k),
        })
        .collect();
    // closed form: ln Z_T = (N/2) ln(1+e^{-1/T}), ln Z_F⁰ = ln[(1+e^{-1/T})^N - (1+e^{-1/T})^{N/2}]
    let t = gauge_temperature;
    let u = (-1.0 / t).exp().ln_1p();
    let ln_zt = half as f64 * u;
    let ln_zf0 = n_spins as f64 * u + (-(-(half as f64) * u).exp()).ln_1p();
    let offset = t * (ln_zf0 - ln_zt);
    let false_levels = false_unshifted
        .into_iter()
        .map(|l| Level {
            energy: l.energy + offset,
            ..l
        })
        .collect();
    let pair = PhasePair::new(
        Spectrum::new(true_levels, PhaseLabel::TrueStates)?,
        Spectrum::new(false_levels, PhaseLabel::FalseStates)?,
        n_spins,
    )?;
    Ok((
        pair,
        BorderlineParams {
            n_spins,
            gauge_temperature,
            offset,
        },
    ))
}
