//! Single-spin-flip Metropolis sampling of the replica model together with
//! the autocorrelation and escape-time diagnostics.
//!
//! One step is one sweep of `2 N_r` proposals at uniformly random sites.

use std::io::{BufRead, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::replica::ReplicaModel;
use crate::{Error, Result};

pub const RNG_NAME: &str = "ChaCha8Rng/rand_chacha-0.9";
pub const MIN_SAMPLES: usize = 10_000;
pub const MIN_TRANSITIONS: usize = 20;

#[derive(Debug, Clone)]
pub struct ChainConfig {
    pub model: ReplicaModel,
    pub seed: u64,
    /// Independent stream of the seeded generator, one per parallel chain.
    pub stream: u64,
    pub n_sweeps: usize,
    pub burn_in: usize,
    pub thinning: usize,
    /// Keep the first group's spins at every sample (needed for `C_σσ`).
    pub record_spins: bool,
}

impl ChainConfig {
    pub fn new(model: ReplicaModel, seed: u64, n_sweeps: usize) -> Self {
        Self {
            model,
            seed,
            stream: 0,
            n_sweeps,
            burn_in: 0,
            thinning: 1,
            record_spins: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_sweeps <= self.burn_in {
            return Err(Error::invalid("sweep count must exceed burn-in"));
        }
        if self.thinning == 0 {
            return Err(Error::invalid("thinning must be at least 1"));
        }
        Ok(())
    }
}

/// Live chain state with cached group sums `a = Σξ`, `b = Σζ`.
#[derive(Debug, Clone)]
pub struct Chain {
    coupling: f64,
    temperature: f64,
    replicas: usize,
    spins: Vec<i8>,
    a: i64,
    b: i64,
    rng: ChaCha8Rng,
}

impl Chain {
    /// Random initial state drawn from the chain's own generator.
    pub fn new(model: &ReplicaModel, seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        let spins: Vec<i8> = (0..model.n_spins())
            .map(|_| if rng.random::<bool>() { 1 } else { -1 })
            .collect();
        Self::assemble(model, spins, rng)
    }

    pub fn from_spins(model: &ReplicaModel, spins: Vec<i8>, seed: u64) -> Result<Self> {
        if spins.len() != model.n_spins() {
            return Err(Error::DimensionMismatch {
                expected: model.n_spins(),
                found: spins.len(),
            });
        }
        if spins.iter().any(|&s| s != 1 && s != -1) {
            return Err(Error::invalid("spins must be ±1"));
        }
        Ok(Self::assemble(
            model,
            spins,
            ChaCha8Rng::seed_from_u64(seed),
        ))
    }

    fn assemble(model: &ReplicaModel, spins: Vec<i8>, rng: ChaCha8Rng) -> Self {
        let n = model.replicas();
        let a = spins[..n].iter().map(|&s| i64::from(s)).sum();
        let b = spins[n..].iter().map(|&s| i64::from(s)).sum();
        Self {
            coupling: model.coupling(),
            temperature: model.temperature(),
            replicas: n,
            spins,
            a,
            b,
            rng,
        }
    }

    pub fn a(&self) -> i64 {
        self.a
    }

    pub fn b(&self) -> i64 {
        self.b
    }

    pub fn spins(&self) -> &[i8] {
        &self.spins
    }

    /// `E = J a b / N_r`.
    pub fn energy(&self) -> f64 {
        self.coupling * (self.a * self.b) as f64 / self.replicas as f64
    }

    /// Configuration index with bit `s` set when spin `s` is up.
    pub fn state_index(&self) -> usize {
        self.spins
            .iter()
            .enumerate()
            .filter(|(_, &s)| s == 1)
            .map(|(k, _)| 1usize << k)
            .sum()
    }

    /// `2 N_r` Metropolis proposals; returns the number accepted.
    pub fn sweep(&mut self) -> usize {
        let n = self.replicas;
        let scale = 2.0 * self.coupling / (n as f64 * self.temperature);
        let mut accepted = 0;
        for _ in 0..2 * n {
            let site = self.rng.random_range(0..2 * n);
            let s = i64::from(self.spins[site]);
            let other = if site < n { self.b } else { self.a };
            // ΔE/T for s → -s
            let delta = -scale * (s * other) as f64;
            if delta <= 0.0 || self.rng.random::<f64>() < (-delta).exp() {
                self.spins[site] = -self.spins[site];
                if site < n {
                    self.a -= 2 * s;
                } else {
                    self.b -= 2 * s;
                }
                accepted += 1;
            }
        }
        accepted
    }

    /// First-group spins packed into `words` 64-bit words, bit set for `+1`.
    fn pack_first_group(&self, out: &mut Vec<u64>) {
        let words = self.replicas.div_ceil(64);
        let start = out.len();
        out.resize(start + words, 0);
        for (s, &v) in self.spins[..self.replicas].iter().enumerate() {
            if v == 1 {
                out[start + s / 64] |= 1 << (s % 64);
            }
        }
    }
}

/// Samples recorded after burn-in, every `thinning` sweeps.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub replicas: usize,
    /// Sweep index of each sample.
    pub steps: Vec<usize>,
    pub a: Vec<i64>,
    pub b: Vec<i64>,
    /// Packed first-group spins, `replicas.div_ceil(64)` words per sample.
    pub spin_words: Option<Vec<u64>>,
    pub acceptance: f64,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.a.len()
    }

    pub fn is_empty(&self) -> bool {
        self.a.is_empty()
    }

    /// Sweeps between consecutive samples.
    pub fn spacing(&self) -> usize {
        match self.steps.as_slice() {
            [first, second, ..] => second - first,
            _ => 1,
        }
    }
}

pub fn run_chain(config: &ChainConfig) -> Result<Trajectory> {
    config.validate()?;
    let mut chain = Chain::new(&config.model, config.seed, config.stream);
    run_from(&mut chain, config)
}

/// Continues an existing chain under `config`'s schedule.
pub fn run_from(chain: &mut Chain, config: &ChainConfig) -> Result<Trajectory> {
    config.validate()?;
    let n_samples = (config.n_sweeps - config.burn_in) / config.thinning;
    let mut steps = Vec::with_capacity(n_samples);
    let mut a = Vec::with_capacity(n_samples);
    let mut b = Vec::with_capacity(n_samples);
    let mut words = config.record_spins.then(Vec::new);
    let mut accepted = 0usize;
    for sweep in 0..config.n_sweeps {
        accepted += chain.sweep();
        if sweep >= config.burn_in
            && (sweep - config.burn_in) % config.thinning == config.thinning - 1
        {
            steps.push(sweep + 1);
            a.push(chain.a);
            b.push(chain.b);
            if let Some(w) = words.as_mut() {
                chain.pack_first_group(w);
            }
        }
    }
    Ok(Trajectory {
        replicas: chain.replicas,
        steps,
        a,
        b,
        spin_words: words,
        acceptance: accepted as f64 / (config.n_sweeps * 2 * chain.replicas) as f64,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Observable {
    SingleSpin,
    Magnetization,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AutocorrResult {
    /// Lags in sweeps.
    pub lags: Vec<usize>,
    pub values: Vec<f64>,
    /// Naive variance of each windowed mean.
    pub estimator_variance: Vec<f64>,
}

/// `0`, then roughly `per_decade` geometric steps per decade up to `max`.
pub fn log_spaced_lags(max: usize, per_decade: usize) -> Vec<usize> {
    let mut lags = vec![0];
    if max == 0 {
        return lags;
    }
    let ratio = 10f64.powf(1.0 / per_decade.max(1) as f64);
    let mut x: f64 = 1.0;
    while x.round() as usize <= max {
        let l = x.round() as usize;
        if *lags.last().unwrap() != l {
            lags.push(l);
        }
        x *= ratio;
    }
    lags
}

fn windowed<F>(n: usize, lags: &[usize], spacing: usize, mut product: F) -> AutocorrResult
where
    F: FnMut(usize, usize) -> f64,
{
    let mut values = Vec::with_capacity(lags.len());
    let mut variances = Vec::with_capacity(lags.len());
    for &lag in lags {
        let windows = n - lag;
        let (mut sum, mut sq) = (0.0, 0.0);
        for t0 in 0..windows {
            let p = product(t0, t0 + lag);
            sum += p;
            sq += p * p;
        }
        let mean = sum / windows as f64;
        values.push(mean);
        variances.push(((sq / windows as f64 - mean * mean).max(0.0)) / windows as f64);
    }
    AutocorrResult {
        lags: lags.iter().map(|l| l * spacing).collect(),
        values,
        estimator_variance: variances,
    }
}

fn check_lags(n: usize, lags: &[usize]) -> Result<()> {
    if n < MIN_SAMPLES {
        return Err(Error::invalid(format!(
            "autocorrelation needs at least {MIN_SAMPLES} samples, got {n}"
        )));
    }
    if lags.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::invalid("lags must be strictly increasing"));
    }
    if lags.last().is_some_and(|&l| l >= n) {
        return Err(Error::invalid("lag exceeds the series length"));
    }
    Ok(())
}

/// `⟨ξ_s(t₀+t) ξ_s(t₀)⟩` over spins and windows, from packed spin words.
/// `lags` are in samples.
pub fn spin_autocorrelation(
    words: &[u64],
    replicas: usize,
    lags: &[usize],
    spacing: usize,
) -> Result<AutocorrResult> {
    let per = replicas.div_ceil(64);
    let n = words.len() / per;
    check_lags(n, lags)?;
    let inv = 1.0 / replicas as f64;
    Ok(windowed(n, lags, spacing, |i, j| {
        let diff: u32 = (0..per)
            .map(|w| (words[i * per + w] ^ words[j * per + w]).count_ones())
            .sum();
        1.0 - 2.0 * f64::from(diff) * inv
    }))
}

/// `⟨a(t₀+t) a(t₀)⟩ / N_r²`. `lags` are in samples.
pub fn magnetization_autocorrelation(
    a: &[i64],
    replicas: usize,
    lags: &[usize],
    spacing: usize,
) -> Result<AutocorrResult> {
    check_lags(a.len(), lags)?;
    let norm = 1.0 / (replicas * replicas) as f64;
    Ok(windowed(a.len(), lags, spacing, |i, j| {
        (a[i] * a[j]) as f64 * norm
    }))
}

/// Autocorrelation at log-spaced lags up to a tenth of the trajectory.
pub fn autocorrelation(traj: &Trajectory, observable: Observable) -> Result<AutocorrResult> {
    let lags = log_spaced_lags(traj.len() / 10, 10);
    match observable {
        Observable::SingleSpin => {
            let words = traj
                .spin_words
                .as_ref()
                .ok_or_else(|| Error::invalid("trajectory was recorded without spins"))?;
            spin_autocorrelation(words, traj.replicas, &lags, traj.spacing())
        }
        Observable::Magnetization => {
            magnetization_autocorrelation(&traj.a, traj.replicas, &lags, traj.spacing())
        }
    }
}

/// Slow-mode amplitude of a correlation curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Plateau {
    /// `P` in `C(t) ≈ P e^{-t/τ}` past the fast relaxation.
    pub level: f64,
    /// Lag (sweeps) where fast relaxation is over: the flattest point in
    /// `ln t` among lags with `C ≥ C(1)/2`.
    pub onset: usize,
    /// `τ` from the fit, in sweeps.
    pub decay_time: f64,
}

/// Fits `ln C` linearly in `t` from the flattest point of the curve down to
/// `C(onset)/e` and extrapolates the fit to `t = 0`.
pub fn plateau_level(result: &AutocorrResult) -> Option<Plateau> {
    let pts: Vec<(f64, f64)> = result
        .lags
        .iter()
        .zip(&result.values)
        .filter(|(&l, _)| l >= 1)
        .map(|(&l, &v)| (l as f64, v))
        .collect();
    let first = pts.first()?.1;
    let early: Vec<(f64, f64)> = pts
        .iter()
        .copied()
        .take_while(|p| p.1 >= 0.5 * first)
        .collect();
    let onset = early
        .windows(3)
        .map(|w| ((w[2].1 - w[0].1).abs() / (w[2].0 / w[0].0).ln(), w[1]))
        .min_by(|x, y| x.0.total_cmp(&y.0))?
        .1;
    let fit: Vec<(f64, f64)> = pts
        .iter()
        .copied()
        .filter(|p| p.0 >= onset.0)
        .take_while(|p| p.1 >= onset.1 / std::f64::consts::E)
        .map(|(t, c)| (t, c.ln()))
        .collect();
    if fit.len() < 2 {
        return None;
    }
    let n = fit.len() as f64;
    let mt = fit.iter().map(|p| p.0).sum::<f64>() / n;
    let my = fit.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = fit.iter().map(|p| (p.0 - mt) * (p.1 - my)).sum();
    let sxx: f64 = fit.iter().map(|p| (p.0 - mt).powi(2)).sum();
    let slope = sxy / sxx;
    Some(Plateau {
        level: (my - slope * mt).exp(),
        onset: onset.0 as usize,
        decay_time: -1.0 / slope,
    })
}

/// `a_threshold = N_r m₀ / 2`.
pub fn dead_band(replicas: usize, m0: f64) -> f64 {
    0.5 * replicas as f64 * m0
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EscapeEstimate {
    /// Mean residence time in one minimum, in sweeps.
    pub mean_time: f64,
    pub transitions: usize,
    /// Fewer than [`MIN_TRANSITIONS`] crossings were seen.
    pub censored: bool,
}

/// Counts crossings of `a` between `≥ threshold` and `≤ -threshold`; values
/// inside the band keep the previous side.
pub fn escape_time(a: &[i64], spacing: usize, threshold: f64) -> EscapeEstimate {
    let mut side = 0i8;
    let mut transitions = 0;
    for &v in a {
        let v = v as f64;
        let now = if v >= threshold {
            1
        } else if v <= -threshold {
            -1
        } else {
            side
        };
        if side != 0 && now != side {
            transitions += 1;
        }
        side = now;
    }
    let total = (a.len() * spacing) as f64;
    EscapeEstimate {
        mean_time: if transitions > 0 {
            total / transitions as f64
        } else {
            total
        },
        transitions,
        censored: transitions < MIN_TRANSITIONS,
    }
}

/// Writes a `t,a,b` dump preceded by `#` header lines.
pub fn write_dump<W: Write>(mut out: W, config: &ChainConfig, traj: &Trajectory) -> Result<()> {
    writeln!(out, "# seed={}", config.seed)?;
    writeln!(out, "# stream={}", config.stream)?;
    writeln!(
        out,
        "# model=replica J={} T={} replicas={}",
        config.model.coupling(),
        config.model.temperature(),
        config.model.replicas()
    )?;
    writeln!(out, "# rng={RNG_NAME}")?;
    writeln!(
        out,
        "# sweeps={} burn_in={} thinning={}",
        config.n_sweeps, config.burn_in, config.thinning
    )?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["t", "a", "b"])?;
    for ((t, a), b) in traj.steps.iter().zip(&traj.a).zip(&traj.b) {
        w.write_record([t.to_string(), a.to_string(), b.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// Dump contents: header key/value pairs and the `(t, a, b)` rows.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Dump {
    pub header: Vec<(String, String)>,
    pub rows: Vec<(usize, i64, i64)>,
}

pub fn read_dump<R: BufRead>(reader: R) -> Result<Dump> {
    let mut header = Vec::new();
    let mut body = String::new();
    for line in reader.lines() {
        let line = line?;
        if let Some(rest) = line.strip_prefix('#') {
            for part in rest.split_whitespace() {
                if let Some((k, v)) = part.split_once('=') {
                    header.push((k.to_string(), v.to_string()));
                }
            }
        } else {
            body.push_str(&line);
            body.push('\n');
        }
    }
    let mut rdr = csv::Reader::from_reader(body.as_bytes());
    let mut rows = Vec::new();
    for (i, rec) in rdr.deserialize::<(usize, i64, i64)>().enumerate() {
        rows.push(rec.map_err(|e| Error::Parse {
            line: i + 2,
            msg: e.to_string(),
        })?);
    }
    Ok(Dump { header, rows })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn model(j: f64, t: f64, n: usize) -> ReplicaModel {
        ReplicaModel::new(j, t, n).unwrap()
    }

    #[test]
    fn cached_sums_track_spins() {
        let mut c = Chain::new(&model(1.5, 1.0, 5), 7, 0);
        for _ in 0..50 {
            c.sweep();
            let n = 5;
            assert_eq!(
                c.a(),
                c.spins()[..n].iter().map(|&s| i64::from(s)).sum::<i64>()
            );
            assert_eq!(
                c.b(),
                c.spins()[n..].iter().map(|&s| i64::from(s)).sum::<i64>()
            );
        }
    }

    #[test]
    fn infinite_temperature_accepts_everything() {
        let mut c = Chain::new(&model(1.5, 1e300, 4), 1, 0);
        assert_eq!(c.sweep(), 8);
    }

    #[test]
    fn cold_aligned_state_is_frozen() {
        let m = model(1.5, 1e-9, 3);
        let mut c = Chain::from_spins(&m, vec![1, 1, 1, -1, -1, -1], 3).unwrap();
        let e = c.energy();
        for _ in 0..100 {
            assert_eq!(c.sweep(), 0);
        }
        assert_eq!(c.energy(), e);
    }

    #[test]
    fn same_seed_same_path() {
        let cfg = ChainConfig {
            burn_in: 10,
            thinning: 3,
            record_spins: true,
            ..ChainConfig::new(model(1.5, 1.0, 6), 99, 400)
        };
        assert_eq!(run_chain(&cfg).unwrap(), run_chain(&cfg).unwrap());
        let other = ChainConfig {
            stream: 1,
            ..cfg.clone()
        };
        assert_ne!(run_chain(&cfg).unwrap().a, run_chain(&other).unwrap().a);
    }

    #[test]
    fn lags_and_validation() {
        let l = log_spaced_lags(1000, 5);
        assert_eq!(l[0], 0);
        assert_eq!(l[1], 1);
        assert!(l.windows(2).all(|w| w[1] > w[0]));
        assert!(*l.last().unwrap() <= 1000);
        assert!(magnetization_autocorrelation(&[1; 100], 1, &[0, 1], 1).is_err());
        assert!(magnetization_autocorrelation(&[1; 20_000], 1, &[2, 1], 1).is_err());
    }

    #[test]
    fn dump_round_trip() {
        let cfg = ChainConfig::new(model(1.5, 1.0, 3), 42, 20);
        let traj = run_chain(&cfg).unwrap();
        let mut buf = Vec::new();
        write_dump(&mut buf, &cfg, &traj).unwrap();
        let dump = read_dump(buf.as_slice()).unwrap();
        assert!(dump.header.contains(&("seed".into(), "42".into())));
        assert_eq!(dump.rows.len(), 20);
        assert_eq!(dump.rows[3], (4, traj.a[3], traj.b[3]));
    }
}
