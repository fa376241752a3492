//! Python bindings: `import spinthermo`.

use std::collections::BTreeMap;

use pyo3::exceptions::{PyArithmeticError, PyMemoryError, PyValueError};
use pyo3::prelude::*;

use spinthermo::coexistence::{self, PhasePair as CorePhasePair, Stability};
use spinthermo::correlations::{fluctuation_matrices, CorrelationSpec};
use spinthermo::dataset::{self, Dataset, StandardModel as CoreStandard, UnrepresentedPolicy};
use spinthermo::meanfield::{MeanFieldModel as CoreMeanField, PointKind};
use spinthermo::montecarlo::{self, ChainConfig, Observable};
use spinthermo::replica::ReplicaModel as CoreReplica;
use spinthermo::spinspace::{self, CouplingVector, EnergyTable};
use spinthermo::thermo::{self, Ensemble as CoreEnsemble, SourceField};
use spinthermo::ErrorKind;

type Matrix = Vec<Vec<f64>>;

fn py_err(e: spinthermo::Error) -> PyErr {
    match e.kind() {
        ErrorKind::Usage => PyValueError::new_err(e.to_string()),
        ErrorKind::Domain => PyArithmeticError::new_err(e.to_string()),
        ErrorKind::Resource => PyMemoryError::new_err(e.to_string()),
    }
}

trait IntoPy<T> {
    fn py(self) -> PyResult<T>;
}

impl<T> IntoPy<T> for spinthermo::Result<T> {
    fn py(self) -> PyResult<T> {
        self.map_err(py_err)
    }
}

fn n_spins_of(len: usize) -> PyResult<usize> {
    if len.is_power_of_two() {
        Ok(len.trailing_zeros() as usize)
    } else {
        Err(PyValueError::new_err(format!(
            "table length {len} is not a power of two"
        )))
    }
}

/// `J` from a full energy table of length `2^N`.
#[pyfunction]
fn couplings_from_energies(energies: Vec<f64>) -> PyResult<Vec<f64>> {
    let n = n_spins_of(energies.len())?;
    Ok(spinspace::couplings_from_energies(&EnergyTable::new(energies, n).py()?).into_values())
}

/// Energy table from a full coupling vector of length `2^N`.
#[pyfunction]
fn energies_from_couplings(couplings: Vec<f64>) -> PyResult<Vec<f64>> {
    let n = n_spins_of(couplings.len())?;
    Ok(spinspace::energies_from_couplings(&CouplingVector::new(couplings, n).py()?).into_values())
}

/// Calibrated standard state of a dataset.
#[pyclass(module = "spinthermo")]
struct StandardModel {
    inner: CoreStandard,
}

#[pymethods]
impl StandardModel {
    /// Standardize `counts` (configuration index -> count). Unrepresented
    /// states get `floor` (default 1e-9 of the largest count) unless their
    /// standard energies are given in `energies`.
    #[staticmethod]
    #[pyo3(signature = (counts, n_spins, gauge_temperature = 1.0, floor = None, energies = None))]
    fn fit(
        counts: BTreeMap<usize, f64>,
        n_spins: usize,
        gauge_temperature: f64,
        floor: Option<f64>,
        energies: Option<BTreeMap<usize, f64>>,
    ) -> PyResult<Self> {
        let pairs: Vec<(usize, f64)> = counts.into_iter().collect();
        let data = Dataset::from_pairs(n_spins, &pairs)
            .py()?
            .with_gauge_temperature(gauge_temperature)
            .py()?;
        let policy = match (floor, energies) {
            (Some(_), Some(_)) => {
                return Err(PyValueError::new_err("give either floor or energies"))
            }
            (Some(eps), None) => UnrepresentedPolicy::Floor(eps),
            (None, Some(e)) => UnrepresentedPolicy::ExplicitEnergies(e),
            (None, None) => UnrepresentedPolicy::default_for(&data),
        };
        Ok(Self {
            inner: dataset::standardize(&data, &policy).py()?,
        })
    }

    #[staticmethod]
    #[pyo3(signature = (couplings, gauge_temperature = 1.0))]
    fn from_couplings(couplings: Vec<f64>, gauge_temperature: f64) -> PyResult<Self> {
        let n = n_spins_of(couplings.len())?;
        let j = CouplingVector::new(couplings, n).py()?;
        Ok(Self {
            inner: CoreStandard::from_couplings(&j, gauge_temperature).py()?,
        })
    }

    #[getter]
    fn n_spins(&self) -> usize {
        self.inner.n_spins()
    }

    #[getter]
    fn gauge_temperature(&self) -> f64 {
        self.inner.gauge_temperature()
    }

    #[getter]
    fn energies(&self) -> Vec<f64> {
        self.inner.standard_energies().values().to_vec()
    }

    #[getter]
    fn weights(&self) -> Vec<f64> {
        self.inner.standard_weights().to_vec()
    }

    #[getter]
    fn couplings(&self) -> Vec<f64> {
        self.inner.standard_couplings().values().to_vec()
    }

    #[getter]
    fn ln_partition(&self) -> f64 {
        self.inner.ln_partition()
    }

    /// Weight covariance `α` and its inverse over `subset`, with an optional
    /// symmetric correction `gamma` added to the inverse.
    #[pyo3(signature = (subset, gamma = None))]
    fn fluctuations(
        &self,
        subset: Vec<usize>,
        gamma: Option<Vec<Vec<f64>>>,
    ) -> PyResult<(Matrix, Matrix)> {
        let m = subset.len();
        let spec = match gamma {
            None => CorrelationSpec::ideal(&self.inner, subset).py()?,
            Some(rows) => {
                if rows.len() != m || rows.iter().any(|r| r.len() != m) {
                    return Err(PyValueError::new_err(
                        "gamma must be square with one row per subset entry",
                    ));
                }
                let g = nalgebra::DMatrix::from_fn(m, m, |i, j| rows[i][j]);
                CorrelationSpec::new(&self.inner, subset, g).py()?
            }
        };
        let f = fluctuation_matrices(&self.inner, &spec).py()?;
        let rows = |a: &nalgebra::DMatrix<f64>| {
            (0..m)
                .map(|i| (0..m).map(|j| a[(i, j)]).collect())
                .collect()
        };
        Ok((rows(&f.covariance), rows(&f.inverse_covariance)))
    }

    fn __repr__(&self) -> String {
        format!(
            "StandardModel(n_spins={}, gauge_temperature={})",
            self.inner.n_spins(),
            self.inner.gauge_temperature()
        )
    }
}

/// Contextual ensemble: live energies measured against a standard state.
#[pyclass(module = "spinthermo")]
struct Ensemble {
    inner: CoreEnsemble,
    standard: CoreStandard,
}

#[pymethods]
impl Ensemble {
    /// `live_couplings` default to the standard ones.
    #[new]
    #[pyo3(signature = (standard, temperature, live_couplings = None))]
    fn new(
        standard: &StandardModel,
        temperature: f64,
        live_couplings: Option<Vec<f64>>,
    ) -> PyResult<Self> {
        let live = match live_couplings {
            Some(j) => spinspace::energies_from_couplings(
                &CouplingVector::new(j, standard.inner.n_spins()).py()?,
            ),
            None => standard.inner.standard_energies().clone(),
        };
        let inner = CoreEnsemble::new(&standard.inner, live, temperature).py()?;
        Ok(Self {
            inner,
            standard: standard.inner.clone(),
        })
    }

    fn weights(&self) -> PyResult<Vec<f64>> {
        thermo::weights(&self.inner, None).py()
    }

    fn free_energy(&self) -> f64 {
        thermo::free_energy_a(&self.inner)
    }

    /// `(S, E, C)` measured from the standard state.
    fn entropy_energy_heat_capacity(&self) -> (f64, f64, f64) {
        let t = thermo::entropy_energy_heatcap(&self.inner);
        (t.entropy, t.energy, t.heat_capacity)
    }

    fn a_tilde(&self, subset: Vec<usize>) -> PyResult<f64> {
        thermo::a_tilde(&self.inner, &self.standard, &subset).py()
    }

    fn gibbs(&self, field: Vec<f64>) -> PyResult<f64> {
        thermo::gibbs_g(&self.inner, &SourceField::new(field).py()?).py()
    }

    fn magnetizations(&self, field: Vec<f64>) -> PyResult<Vec<f64>> {
        thermo::magnetizations(&self.inner, &SourceField::new(field).py()?).py()
    }
}

fn kind_name(k: PointKind) -> &'static str {
    match k {
        PointKind::Minimum => "minimum",
        PointKind::Saddle => "saddle",
        PointKind::Maximum => "maximum",
        PointKind::Degenerate => "degenerate",
    }
}

/// Mean-field `Ã(m) = E(m) - T S(m)`.
#[pyclass(module = "spinthermo")]
struct MeanField {
    inner: CoreMeanField,
}

#[pymethods]
impl MeanField {
    #[new]
    fn new(couplings: Vec<f64>, temperature: f64) -> PyResult<Self> {
        let n = n_spins_of(couplings.len())?;
        Ok(Self {
            inner: CoreMeanField::new(CouplingVector::new(couplings, n).py()?, temperature).py()?,
        })
    }

    /// Two spins with energy `j σ₁σ₂`.
    #[staticmethod]
    fn inverter(j: f64, temperature: f64) -> PyResult<Self> {
        Ok(Self {
            inner: CoreMeanField::inverter(j, temperature).py()?,
        })
    }

    fn free_energy(&self, m: Vec<f64>) -> PyResult<f64> {
        self.inner.free_energy(&m).py()
    }

    /// Stationary points of `Ã(m) - h·m` as `(m, kind, Ã)` tuples.
    fn solve(&self, field: Vec<f64>) -> PyResult<Vec<(Vec<f64>, &'static str, f64)>> {
        let points = self.inner.solve(&SourceField::new(field).py()?).py()?;
        Ok(points
            .into_iter()
            .map(|p| (p.m, kind_name(p.kind), p.value))
            .collect())
    }

    fn slice_free_energy(&self, m: f64) -> PyResult<f64> {
        self.inner.slice_free_energy(m).py()
    }

    fn spinodals(&self) -> PyResult<Option<(f64, f64)>> {
        self.inner.spinodals().py()
    }

    /// `(h_c, m₀)` of the inverter phase boundary.
    fn phase_boundary(&self) -> PyResult<Option<(f64, f64)>> {
        self.inner.phase_boundary().py()
    }
}

/// Two groups of `replicas` spins with energy `J a b / N_r`.
#[pyclass(module = "spinthermo")]
struct ReplicaModel {
    inner: CoreReplica,
}

#[pymethods]
impl ReplicaModel {
    #[new]
    fn new(coupling: f64, temperature: f64, replicas: usize) -> PyResult<Self> {
        Ok(Self {
            inner: CoreReplica::new(coupling, temperature, replicas).py()?,
        })
    }

    fn gibbs_per_spin(&self, h1: f64, h2: f64) -> f64 {
        self.inner.equilibrium_gibbs_per_spin(h1, h2)
    }

    fn magnetization(&self, h: f64) -> f64 {
        self.inner.equilibrium_magnetization(h)
    }

    fn helmholtz_per_spin(&self, m: f64) -> PyResult<f64> {
        self.inner.equilibrium_helmholtz_per_spin(m).py()
    }

    fn ln_density_of_states(&self, m: f64) -> PyResult<f64> {
        self.inner.ln_density_of_states(m).py()
    }

    /// Metropolis run; returns a dict with `steps`, `a`, `b`, `acceptance`
    /// and, with at least 10 000 samples, the single-spin autocorrelation
    /// `lags`/`autocorrelation` and its `plateau`.
    #[pyo3(signature = (seed, sweeps, burn_in = 0, thinning = 1, stream = 0))]
    fn sample<'py>(
        &self,
        py: Python<'py>,
        seed: u64,
        sweeps: usize,
        burn_in: usize,
        thinning: usize,
        stream: u64,
    ) -> PyResult<Bound<'py, pyo3::types::PyDict>> {
        let config = ChainConfig {
            stream,
            burn_in,
            thinning,
            record_spins: true,
            ..ChainConfig::new(self.inner.clone(), seed, sweeps)
        };
        let traj = py.detach(|| montecarlo::run_chain(&config)).py()?;
        let d = pyo3::types::PyDict::new(py);
        d.set_item("steps", &traj.steps)?;
        d.set_item("a", &traj.a)?;
        d.set_item("b", &traj.b)?;
        d.set_item("acceptance", traj.acceptance)?;
        if traj.len() >= montecarlo::MIN_SAMPLES {
            let c = montecarlo::autocorrelation(&traj, Observable::SingleSpin).py()?;
            d.set_item("plateau", montecarlo::plateau_level(&c).map(|p| p.level))?;
            d.set_item("lags", c.lags)?;
            d.set_item("autocorrelation", c.values)?;
        }
        Ok(d)
    }
}

/// Mean residence time in one minimum: `(time, transitions, censored)`.
#[pyfunction]
#[pyo3(signature = (a, replicas, m_star, spacing = 1))]
fn escape_time(a: Vec<i64>, replicas: usize, m_star: f64, spacing: usize) -> (f64, usize, bool) {
    let e = montecarlo::escape_time(&a, spacing, montecarlo::dead_band(replicas, m_star));
    (e.mean_time, e.transitions, e.censored)
}

/// True/false phase pair built from level spectra.
#[pyclass(module = "spinthermo")]
struct PhasePair {
    inner: CorePhasePair,
}

#[pymethods]
impl PhasePair {
    /// Reference construction on `n_spins` spins coexisting at `gauge_temperature`.
    #[staticmethod]
    #[pyo3(signature = (n_spins = 64, gauge_temperature = 1.0))]
    fn borderline(n_spins: usize, gauge_temperature: f64) -> PyResult<Self> {
        Ok(Self {
            inner: coexistence::borderline_pair(n_spins, gauge_temperature)
                .py()?
                .0,
        })
    }

    fn solve_t0(&self, lo: f64, hi: f64) -> PyResult<Option<f64>> {
        self.inner.solve_t0(lo, hi).py()
    }

    /// `(stable phase, A_true, A_false)` with the phase one of
    /// `"true"`, `"false"` or `"both"`.
    fn stability(&self, t: f64) -> (&'static str, f64, f64) {
        let s = self.inner.stability(t);
        let v = match s.verdict {
            Stability::StableTrue => "true",
            Stability::StableFalse => "false",
            Stability::Coexistence => "both",
        };
        (v, s.a_true, s.a_false)
    }

    fn latent_heat(&self, t: f64) -> (f64, f64) {
        self.inner.latent_heat(t)
    }

    /// `(F, E, S, C)` of the merged spectrum.
    fn equilibrium(&self, t: f64) -> (f64, f64, f64, f64) {
        let c = self.inner.equilibrium().canonical(t);
        (c.free_energy, c.energy, c.entropy, c.heat_capacity)
    }
}

#[pymodule]
#[pyo3(name = "spinthermo")]
fn spinthermo_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(couplings_from_energies, m)?)?;
    m.add_function(wrap_pyfunction!(energies_from_couplings, m)?)?;
    m.add_function(wrap_pyfunction!(escape_time, m)?)?;
    m.add_class::<StandardModel>()?;
    m.add_class::<Ensemble>()?;
    m.add_class::<MeanField>()?;
    m.add_class::<ReplicaModel>()?;
    m.add_class::<PhasePair>()?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
