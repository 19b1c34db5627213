use pyo3::prelude::*;
use pyo3::types::PyDict;

fn with_module<R>(f: impl FnOnce(Python<'_>, &Bound<'_, PyModule>) -> PyResult<R>) -> R {
    Python::with_gil(|py| {
        let m = hartree::register(py).unwrap();
        f(py, &m).unwrap()
    })
}

#[test]
fn hydrogen_solve_through_python() {
    with_module(|py, m| {
        let kw = PyDict::new_bound(py);
        kw.set_item("coupling", 0.0)?;
        kw.set_item("r_max", 40.0)?;
        kw.set_item("n", 2000)?;
        let sol = m.getattr("solve_monoatomic")?.call((3,), Some(&kw))?;
        let mu: f64 = sol.getattr("mu")?.extract()?;
        assert!((mu + 0.25).abs() < 2e-3, "{mu}");
        let summary = sol.call_method0("summary")?;
        assert_eq!(summary.get_item("d")?.extract::<usize>()?, 3);
        let u: Vec<f64> = sol.getattr("u")?.extract()?;
        let r: Vec<f64> = sol.getattr("r")?.extract()?;
        assert_eq!(u.len(), r.len());
        Ok(())
    })
}

#[test]
fn errors_map_to_python_exceptions() {
    with_module(|py, m| {
        let err = m.getattr("solve_monoatomic")?.call1((4,)).unwrap_err();
        assert!(err.is_instance_of::<pyo3::exceptions::PyValueError>(py));
        let err = m.getattr("convolution_decay_check")?.call1((0.0, 1.0, 2)).unwrap_err();
        assert!(err.is_instance_of::<pyo3::exceptions::PyValueError>(py));
        Ok(())
    })
}

#[test]
fn diatomic_system_round_trip() {
    with_module(|py, m| {
        let kw = PyDict::new_bound(py);
        kw.set_item("coupling", 0.0)?;
        kw.set_item("r_max", 30.0)?;
        kw.set_item("n", 800)?;
        let mono = m.getattr("solve_monoatomic")?.call((2,), Some(&kw))?;
        let sys = m.getattr("DiatomicSystem")?.call1((mono, 0.25, 13.0, 11.0))?;
        assert_eq!(sys.call_method1("snap", (4.1,))?.extract::<f64>()?, 4.0);
        let rec = sys.call_method1("solve", (4.0,))?;
        let gap: f64 = rec.get_item("gap")?.extract()?;
        assert!(gap > 0.0);
        assert_eq!(rec.get_item("L")?.extract::<f64>()?, 4.0);
        let it = sys.call_method1("interaction_integrals", (4.0,))?;
        assert!(it.get_item("overlap")?.extract::<f64>()? > 0.0);
        Ok(())
    })
}
