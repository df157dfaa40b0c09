use pyo3::prelude::*;
use pyo3::types::PyDict;

fn with_module<F>(f: F)
where
    F: for<'py> FnOnce(&Bound<'py, PyModule>) -> PyResult<()>,
{
    Python::initialize();
    Python::attach(|py| {
        let m = pyo3::wrap_pymodule!(toric_ale_py::toric_ale_py)(py);
        let m = m.bind(py).cast::<PyModule>().expect("module object").clone();
        f(&m).unwrap_or_else(|e| panic!("{e}"));
    });
}

#[test]
fn surface_class() {
    with_module(|m| {
        let s = m.getattr("Surface")?.call1((7, 2, 3))?;
        assert_eq!(s.getattr("lambda_a")?.extract::<String>()?, "294");
        assert_eq!(s.getattr("kind")?.extract::<String>()?, "orthotoric");
        let g: [[f64; 2]; 2] = s.call_method1("gram", (-18.0, 5.0))?.extract()?;
        assert!((g[0][0] - 564.0 / 23.0).abs() < 1e-12);
        assert!(s.call_method1("is_polynomial", (3,))?.extract::<bool>()?);
        Ok(())
    });
}

#[test]
fn ansatz_class_and_errors() {
    with_module(|m| {
        let a = m.getattr("Ansatz")?.call1((5, vec![2, 3]))?;
        assert!(a.getattr("ricci_flat")?.extract::<bool>()?);
        assert_eq!(a.getattr("alpha")?.extract::<Vec<String>>()?, ["-15", "-10"]);
        let kwargs = PyDict::new(m.py());
        kwargs.set_item("flat", true)?;
        let flat = m.getattr("Ansatz")?.call((5, vec![2, 3]), Some(&kwargs))?;
        let (ok, _): (bool, String) = flat.call_method1("verify", (vec!["abreu"],))?.extract()?;
        assert!(ok);
        let err = m.getattr("Ansatz")?.call1((0, vec![2, 3])).unwrap_err();
        assert!(err.is_instance_of::<pyo3::exceptions::PyValueError>(m.py()));
        Ok(())
    });
}

#[test]
fn cli_passthrough() {
    with_module(|m| {
        let (out, _, code): (String, String, i32) =
            m.getattr("run_cli")?.call1((vec!["classify", "7", "5", "1", "1"],))?.extract()?;
        assert_eq!(code, 0);
        assert!(out.contains("\"verdict\": \"yes\""));
        let json: String = m.getattr("classify")?.call1((vec![5, 3, 2, 1],))?.extract()?;
        assert!(json.starts_with("{\"verdict\":\"yes\""));
        Ok(())
    });
}
