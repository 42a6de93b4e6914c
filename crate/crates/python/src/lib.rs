//! Python bindings: protocols, chains, config-driven evaluation, sweeps and
//! the oracle suite. Library errors surface as `ValueError`.

use num_complex::Complex64;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use sgi_phonons::contrast::{contrast_total_1d_with, gradient_time_bound as bound};
use sgi_phonons::sphere::fundamental_dipole_wavenumber as qd;
use sgi_phonons::units::MU_B;
use sgi_phonons::{
    run_sweep, ChainSpec, Config, ContrastReport, MaterialSpec, Protocol, ProtocolKind,
    ThermalModel,
};

fn err(e: sgi_phonons::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn config(toml: Option<&str>) -> PyResult<Config> {
    match toml {
        Some(text) => Config::from_toml(text).map_err(err),
        None => Ok(Config::default()),
    }
}

/// Named or sampled acceleration profile on [-t_half, t_half].
#[pyclass(name = "Protocol", frozen)]
struct PyProtocol(Protocol);

#[pymethods]
impl PyProtocol {
    /// `kind` is "square", "quartic", "bicosine" or "0", "1", "2".
    #[new]
    fn new(kind: &str, a_max: f64, t_half: f64) -> PyResult<Self> {
        let kind: ProtocolKind = kind.parse().map_err(err)?;
        Protocol::new(kind, a_max, t_half).map(Self).map_err(err)
    }

    /// Piecewise-linear profile from (t, a) samples spanning [-t_half, t_half].
    #[staticmethod]
    fn custom(t_half: f64, samples: Vec<(f64, f64)>) -> PyResult<Self> {
        Protocol::custom(t_half, samples).map(Self).map_err(err)
    }

    #[getter]
    fn kind(&self) -> &'static str {
        self.0.kind().name()
    }

    #[getter]
    fn a_max(&self) -> f64 {
        self.0.a_max()
    }

    #[getter]
    fn t_half(&self) -> f64 {
        self.0.t_half()
    }

    fn accel(&self, t: f64) -> PyResult<f64> {
        self.0.accel_at(t).map_err(err)
    }

    /// Closed-form spectrum where one exists, quadrature otherwise.
    fn spectrum(&self, omega: f64) -> Complex64 {
        self.0.spectrum(omega).0.value
    }

    fn spectrum_numeric(&self, omega: f64) -> Complex64 {
        self.0.spectrum_numeric(omega).value
    }

    /// (net velocity change, net displacement) over the window.
    fn closure_check(&self) -> (f64, f64) {
        self.0.closure_check()
    }

    fn energy_norm(&self) -> f64 {
        self.0.energy_norm()
    }

    fn parseval_constant(&self) -> f64 {
        self.0.parseval_constant()
    }

    fn __repr__(&self) -> String {
        format!(
            "Protocol({}, a_max={:e}, t_half={:e})",
            self.0.kind().name(),
            self.0.a_max(),
            self.0.t_half()
        )
    }
}

/// Harmonic chain of `n_sites` atoms with the spin on `spin_site`.
#[pyclass(name = "Chain", frozen)]
struct PyChain(ChainSpec);

#[pymethods]
impl PyChain {
    #[new]
    fn new(
        n_sites: usize,
        step: f64,
        site_mass: f64,
        sound_speed: f64,
        spin_site: usize,
    ) -> PyResult<Self> {
        ChainSpec::new(n_sites, step, site_mass, sound_speed, spin_site)
            .map(Self)
            .map_err(err)
    }

    /// Chain cut from a material preset ("diamond", ...) of length `length`.
    #[staticmethod]
    #[pyo3(signature = (length, preset = "diamond", spin = "center"))]
    fn from_material(length: f64, preset: &str, spin: &str) -> PyResult<Self> {
        let material = MaterialSpec::preset(preset)
            .ok_or_else(|| PyValueError::new_err(format!("unknown preset '{preset}'")))?;
        let site = match spin {
            "end" => sgi_phonons::SpinSite::Named(sgi_phonons::SpinPlacement::End),
            "center" => sgi_phonons::SpinSite::Named(sgi_phonons::SpinPlacement::Center),
            other => sgi_phonons::SpinSite::Index(
                other
                    .parse()
                    .map_err(|_| PyValueError::new_err("bad spin site"))?,
            ),
        };
        ChainSpec::from_material(&material, length, site)
            .map(Self)
            .map_err(err)
    }

    #[getter]
    fn n_sites(&self) -> usize {
        self.0.n_sites
    }

    #[getter]
    fn spin_site(&self) -> usize {
        self.0.spin_site
    }

    #[getter]
    fn length(&self) -> f64 {
        self.0.length()
    }

    #[getter]
    fn total_mass(&self) -> f64 {
        self.0.total_mass()
    }

    fn omega(&self, k: usize) -> PyResult<f64> {
        self.0.dispersion(k).map_err(err)
    }

    fn mode_amplitude_at_spin(&self, k: usize) -> PyResult<f64> {
        self.0.mode_amplitude_at_spin(k).map_err(err)
    }

    /// Exact mode sum -log C_ph; `model` is "quantum" or "classical".
    #[pyo3(signature = (protocol, t_ph, model = "quantum"))]
    fn contrast(&self, protocol: &PyProtocol, t_ph: f64, model: &str) -> PyResult<Report> {
        let model = match model {
            "quantum" => ThermalModel::Quantum,
            "classical" => ThermalModel::Classical,
            other => {
                return Err(PyValueError::new_err(format!(
                    "unknown thermal model '{other}'"
                )))
            }
        };
        contrast_total_1d_with(&self.0, &self.0.mode_table(), &protocol.0, t_ph, model)
            .map(Report)
            .map_err(err)
    }
}

#[pyclass(name = "ContrastReport", frozen)]
struct Report(ContrastReport);

#[pymethods]
impl Report {
    #[getter]
    fn minus_log_c(&self) -> f64 {
        self.0.minus_log_c
    }

    #[getter]
    fn contrast(&self) -> f64 {
        self.0.contrast()
    }

    #[getter]
    fn estimate_fs(&self) -> Option<f64> {
        self.0.estimate_fs
    }

    #[getter]
    fn regime(&self) -> String {
        self.0.regime.to_string()
    }

    #[getter]
    fn notes(&self) -> Vec<String> {
        self.0.notes.clone()
    }

    /// (k, omega, term) per mode.
    #[getter]
    fn per_mode_terms(&self) -> Vec<(usize, f64, f64)> {
        self.0
            .per_mode_terms
            .iter()
            .map(|t| (t.k, t.omega, t.term))
            .collect()
    }

    fn to_text(&self) -> String {
        self.0.to_text()
    }
}

/// Evaluates a TOML config (defaults when omitted) in its configured regime.
#[pyfunction]
#[pyo3(signature = (config_toml = None))]
fn evaluate(config_toml: Option<&str>) -> PyResult<Report> {
    let cfg = config(config_toml)?;
    let regime = cfg.regime().map_err(err)?;
    cfg.scenario(None)
        .and_then(|s| s.evaluate(regime))
        .map(Report)
        .map_err(err)
}

/// Runs the [sweep] section of a config and returns the CSV text.
#[pyfunction]
#[pyo3(signature = (config_toml = None))]
fn sweep(config_toml: Option<&str>) -> PyResult<String> {
    let cfg = config(config_toml)?;
    let spec = cfg.sweep_spec().map_err(err)?;
    let scenario = cfg.scenario(None).map_err(err)?;
    run_sweep(&scenario, &spec).map(|r| r.to_csv()).map_err(err)
}

/// Runs the oracle suite; returns (all passed, table).
#[pyfunction]
#[pyo3(signature = (config_toml = None))]
fn validate(py: Python<'_>, config_toml: Option<&str>) -> PyResult<(bool, String)> {
    let suite = config(config_toml)?.oracle_suite().map_err(err)?;
    let report = py.detach(|| suite.run()).map_err(err)?;
    Ok((report.passed(), report.to_table()))
}

/// Bound on (T_half/us)(b_max/(T/m))^2 for a material preset.
#[pyfunction]
#[pyo3(signature = (mu_bohr = 1.0, t_ph = 300.0, preset = "diamond", prefactor = 1.0))]
fn gradient_time_bound(mu_bohr: f64, t_ph: f64, preset: &str, prefactor: f64) -> PyResult<f64> {
    let material = MaterialSpec::preset(preset)
        .ok_or_else(|| PyValueError::new_err(format!("unknown preset '{preset}'")))?;
    bound(&material, mu_bohr * MU_B, t_ph, prefactor).map_err(err)
}

/// Fundamental dipole wavenumber of a free sphere of diameter `d`, 1/m.
#[pyfunction]
fn fundamental_dipole_wavenumber(d: f64) -> PyResult<f64> {
    qd(d).map_err(err)
}

#[pymodule]
fn pysgi(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyProtocol>()?;
    m.add_class::<PyChain>()?;
    m.add_class::<Report>()?;
    m.add_function(wrap_pyfunction!(evaluate, m)?)?;
    m.add_function(wrap_pyfunction!(sweep, m)?)?;
    m.add_function(wrap_pyfunction!(validate, m)?)?;
    m.add_function(wrap_pyfunction!(gradient_time_bound, m)?)?;
    m.add_function(wrap_pyfunction!(fundamental_dipole_wavenumber, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
