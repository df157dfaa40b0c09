//! Python bindings for `toric_ale`.
//!
//! Exact rationals cross the boundary as `"p/q"` strings; reports and trees
//! as JSON text, so that the Python side can use `json.loads`.

use pyo3::exceptions::{PyArithmeticError, PyValueError};
use pyo3::prelude::*;

use toric_ale::ansatz::{build_ansatz, AnsatzData, XiPoint};
use toric_ale::asymptotics::{decay_fit, ricci_flat_test as ricci_flat_certificate, RayConfig};
use toric_ale::cli;
use toric_ale::config::RunConfig;
use toric_ale::surface::{polynomial_fit, surface_json, SurfaceData};
use toric_ale::typej::{classify as classify_weights, ClassifierConfig};
use toric_ale::weights::{GroupedWeights, WeightVector};
use toric_ale::{rat_string, Error};

fn to_py(e: Error) -> PyErr {
    match e {
        Error::Numeric(_) | Error::Domain(_) => PyArithmeticError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

/// Runs the command-line tool in-process; returns `(stdout, stderr, exit_code)`.
#[pyfunction]
fn run_cli(args: Vec<String>) -> (String, String, i32) {
    cli::main_with_args(std::iter::once("toric-ale".to_string()).chain(args))
}

/// Type-J verdict as JSON: `{"verdict": "yes", "tree": {...}}` or `"unknown"`.
#[pyfunction]
#[pyo3(signature = (weights, lift_bound = 3, max_depth = 64))]
fn classify(weights: Vec<i64>, lift_bound: u32, max_depth: usize) -> PyResult<String> {
    let b = WeightVector::from_slice(&weights).map_err(to_py)?;
    let cfg = ClassifierConfig { lift_bound, max_depth, ..ClassifierConfig::default() };
    let verdict = classify_weights(&b, &cfg).map_err(to_py)?;
    serde_json::to_string(&verdict).map_err(|e| PyValueError::new_err(e.to_string()))
}

/// Exact Ricci-flat criterion `a_0 = Σ_j (n_j + 1) a_j`.
#[pyfunction]
fn ricci_flat(a0: i64, weights: Vec<i64>) -> PyResult<bool> {
    let g = GroupedWeights::group(a0, &weights).map_err(to_py)?;
    Ok(ricci_flat_certificate(&g).ricci_flat)
}

/// The scalar-flat ALE metric (or its flat model) of a weight vector.
#[pyclass(name = "Ansatz", frozen)]
struct PyAnsatz {
    data: AnsatzData,
}

#[pymethods]
impl PyAnsatz {
    #[new]
    #[pyo3(signature = (a0, weights, flat = false))]
    fn new(a0: i64, weights: Vec<i64>, flat: bool) -> PyResult<Self> {
        let g = GroupedWeights::group(a0, &weights).map_err(to_py)?;
        Ok(PyAnsatz { data: build_ansatz(&g, flat).map_err(to_py)? })
    }

    #[getter]
    fn m(&self) -> usize {
        self.data.m
    }

    #[getter]
    fn ell(&self) -> usize {
        self.data.ell
    }

    #[getter]
    fn alpha(&self) -> Vec<String> {
        self.data.alpha.iter().map(rat_string).collect()
    }

    #[getter]
    fn r(&self) -> Vec<String> {
        self.data.r.iter().map(rat_string).collect()
    }

    /// Coefficients of `F_ℓ`, lowest degree first.
    #[getter]
    fn f_ell(&self) -> Vec<String> {
        self.data.f_ell.coeffs().iter().map(rat_string).collect()
    }

    #[getter]
    fn ricci_flat(&self) -> bool {
        self.data.is_ricci_flat()
    }

    /// Gram matrix of the torus action in the `(x, x̂)` momentum basis.
    #[pyo3(signature = (xi, fibres = None))]
    fn full_gram(&self, xi: Vec<f64>, fibres: Option<Vec<Vec<f64>>>) -> PyResult<Vec<Vec<f64>>> {
        let fibres = fibres.unwrap_or_else(|| default_fibres(&self.data));
        let g = self.data.full_gram(&XiPoint { xi, fibres }).map_err(to_py)?;
        Ok((0..g.nrows()).map(|i| g.row(i).iter().copied().collect()).collect())
    }

    /// Kähler potential `H(ξ)` with base point `λ`.
    #[pyo3(signature = (xi, lambda_ = 1.0))]
    fn kahler_potential(&self, xi: Vec<f64>, lambda_: f64) -> PyResult<f64> {
        self.data.kahler_potential(&xi, lambda_, Default::default()).map_err(to_py)
    }

    /// Runs `verify` checks; returns `(pass, json)`.
    #[pyo3(signature = (checks, seed = 0))]
    fn verify(&self, checks: Vec<String>, seed: u64) -> PyResult<(bool, String)> {
        let mut args = vec!["verify".to_string(), "--a0".into(), self.data.weights.a0.to_string(), "--w".into()];
        args.extend(self.data.weights.raw().iter().map(i64::to_string));
        if self.data.flat {
            args.push("--flat".into());
        }
        args.extend(["--checks".into(), checks.join(","), "--seed".into(), seed.to_string(), "--json".into()]);
        let (out, err, code) = run_cli(args);
        match code {
            cli::EXIT_PASS | cli::EXIT_FAIL => Ok((code == cli::EXIT_PASS, out)),
            cli::EXIT_NUMERIC => Err(PyArithmeticError::new_err(err)),
            _ => Err(PyValueError::new_err(err)),
        }
    }

    /// Fitted leading coefficient of the decaying part of the potential and its closed form.
    fn decay_coefficient(&self) -> PyResult<(f64, f64)> {
        let fit = decay_fit(&self.data, &RayConfig::default()).map_err(to_py)?;
        Ok((fit.fitted_coefficient, fit.closed_coefficient))
    }
}

fn default_fibres(d: &AnsatzData) -> Vec<Vec<f64>> {
    d.weights.mult.iter().map(|&n| vec![1.0 / (n as f64 + 2.0); n]).collect()
}

/// Orthotoric or Calabi-type surface data and its Bochner-flat dual.
#[pyclass(name = "Surface", frozen)]
struct PySurface {
    data: SurfaceData,
}

#[pymethods]
impl PySurface {
    #[new]
    fn new(a0: i64, a1: i64, a2: i64) -> PyResult<Self> {
        Ok(PySurface { data: SurfaceData::new(a0, a1, a2).map_err(to_py)? })
    }

    #[getter]
    fn kind(&self) -> &'static str {
        if self.data.is_orthotoric() {
            "orthotoric"
        } else {
            "calabi"
        }
    }

    #[getter]
    fn lambda_a(&self) -> String {
        rat_string(&self.data.lambda_a)
    }

    #[getter]
    fn normal_scale(&self) -> String {
        rat_string(&self.data.normal_scale)
    }

    fn gram(&self, p: f64, q: f64) -> PyResult<[[f64; 2]; 2]> {
        self.data.gram(&[p, q]).map_err(to_py)
    }

    /// `(σ̃, H̃, conformal factor)` at a point.
    fn bochner_dual(&self, p: f64, q: f64) -> PyResult<([f64; 2], [[f64; 2]; 2], f64)> {
        let d = self.data.bochner_dual(&[p, q]).map_err(to_py)?;
        Ok((d.sigma_tilde, d.h_tilde, d.conformal_factor))
    }

    /// Whether `H̃` interpolates exactly by polynomials of this degree.
    #[pyo3(signature = (degree = 3))]
    fn is_polynomial(&self, degree: usize) -> PyResult<bool> {
        Ok(polynomial_fit(&self.data, degree).map_err(to_py)?.exact())
    }

    fn to_json(&self) -> PyResult<String> {
        Ok(surface_json(&self.data).map_err(to_py)?.to_string())
    }
}

/// Raises `ValueError` unless the `key = value` text is a valid run configuration.
#[pyfunction]
fn check_config(text: &str) -> PyResult<()> {
    let mut cfg = RunConfig::default();
    cfg.apply_text(text).map_err(to_py)?;
    cfg.validate().map_err(to_py)
}

#[pymodule]
pub fn toric_ale_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(run_cli, m)?)?;
    m.add_function(wrap_pyfunction!(classify, m)?)?;
    m.add_function(wrap_pyfunction!(ricci_flat, m)?)?;
    m.add_function(wrap_pyfunction!(check_config, m)?)?;
    m.add_class::<PyAnsatz>()?;
    m.add_class::<PySurface>()?;
    Ok(())
}
