//! Python bindings: matrices, curves, T-transforms, the soliton chain and
//! the pipeline subcommands.

use pyo3::create_exception;
use pyo3::exceptions::PyException;
use pyo3::prelude::*;
use pyo3::types::PyDict;
use serde::Serialize;

use adsnull::curves::{self, BendingProfile, SGrid};
use adsnull::kdv::{self, STGrid};
use adsnull::pipeline::{self, config::ProfileSpec, RunConfig};
use adsnull::ttransform;

create_exception!(adsnull_py, AdsnullError, PyException);

fn err(e: adsnull::Error) -> PyErr {
    AdsnullError::new_err(format!("{}: {e}", e.kind()))
}

/// Serialize through JSON into plain Python objects.
fn to_py<'py, T: Serialize>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| AdsnullError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (text,))
}

#[pyclass(name = "Mat2", frozen, from_py_object)]
#[derive(Clone, Copy)]
struct PyMat2(adsnull::Mat2);

#[pymethods]
impl PyMat2 {
    #[new]
    fn new(a11: f64, a12: f64, a21: f64, a22: f64) -> Self {
        PyMat2(adsnull::Mat2::new(a11, a12, a21, a22))
    }

    #[staticmethod]
    fn identity() -> Self {
        PyMat2(adsnull::Mat2::IDENTITY)
    }

    fn det(&self) -> f64 {
        self.0.det()
    }

    fn trace(&self) -> f64 {
        self.0.trace()
    }

    fn adj(&self) -> Self {
        PyMat2(self.0.adj())
    }

    fn inv(&self) -> Self {
        PyMat2(self.0.inv())
    }

    #[allow(clippy::wrong_self_convention)]
    fn to_list(&self) -> [[f64; 2]; 2] {
        let [a, b, c, d] = self.0.to_array();
        [[a, b], [c, d]]
    }

    fn __matmul__(&self, other: PyMat2) -> Self {
        PyMat2(self.0 * other.0)
    }

    fn __add__(&self, other: PyMat2) -> Self {
        PyMat2(self.0 + other.0)
    }

    fn __sub__(&self, other: PyMat2) -> Self {
        PyMat2(self.0 - other.0)
    }

    fn __mul__(&self, k: f64) -> Self {
        PyMat2(self.0 * k)
    }

    fn __repr__(&self) -> String {
        let m = self.to_list();
        format!("Mat2([[{}, {}], [{}, {}]])", m[0][0], m[0][1], m[1][0], m[1][1])
    }
}

#[pyfunction]
fn sl2_exp(a: PyMat2) -> PyResult<PyMat2> {
    adsnull::sl2core::sl2_exp(&a.0).map(PyMat2).map_err(err)
}

/// `−det X`.
#[pyfunction]
fn qform(x: PyMat2) -> f64 {
    adsnull::sl2core::qform(&x.0)
}

#[pyfunction]
fn inner(x: PyMat2, y: PyMat2) -> f64 {
    adsnull::sl2core::inner(&x.0, &y.0)
}

#[pyfunction]
fn kappa_mn(m: i64, n: i64) -> PyResult<f64> {
    curves::kappa_mn(m, n).map_err(err)
}

#[pyfunction]
fn torus_knot_type(m: i64, n: i64) -> PyResult<(i64, i64)> {
    curves::torus_knot_type(m, n).map_err(err)
}

/// `(length, sign)` of the closing period of constant bending `κ < −1`.
#[pyfunction]
#[pyo3(signature = (kappa, max_j = 10_000))]
fn closure_period(kappa: f64, max_j: u32) -> PyResult<(f64, i8)> {
    let p = curves::closure_period(kappa, max_j).map_err(err)?;
    Ok((p.length, p.sign))
}

#[pyfunction]
fn torus_embed(g: PyMat2) -> PyResult<(f64, f64, f64)> {
    let p = pipeline::torus_embed(&g.0).map_err(err)?;
    Ok((p.x, p.y, p.z))
}

fn profile(spec: &str) -> PyResult<(ProfileSpec, BendingProfile)> {
    let spec = ProfileSpec::parse(spec).map_err(err)?;
    let profile = spec.profile().map_err(err)?;
    Ok((spec, profile))
}

fn grid(spec: &ProfileSpec, s0: f64, length: Option<f64>, h: f64) -> PyResult<SGrid> {
    let length = match length {
        Some(l) => l,
        None => spec.default_length().map_err(err)?,
    };
    SGrid::covering(s0, s0 + length, h).map_err(err)
}

#[pyclass(name = "NullCurve", frozen)]
struct PyNullCurve(curves::NullCurve);

#[pymethods]
impl PyNullCurve {
    #[getter]
    fn s(&self) -> Vec<f64> {
        self.0.grid.points()
    }

    #[getter]
    fn h(&self) -> f64 {
        self.0.grid.h
    }

    #[getter]
    fn kappa(&self) -> Vec<f64> {
        self.0.kappa.clone()
    }

    #[getter]
    fn gamma(&self) -> Vec<PyMat2> {
        self.0.gamma.iter().copied().map(PyMat2).collect()
    }

    #[getter]
    fn fplus(&self) -> Vec<PyMat2> {
        self.0.fplus.iter().copied().map(PyMat2).collect()
    }

    #[getter]
    fn fminus(&self) -> Vec<PyMat2> {
        self.0.fminus.iter().copied().map(PyMat2).collect()
    }

    fn __len__(&self) -> usize {
        self.0.len()
    }

    /// Finite-difference null-geometry report as a dict.
    fn verify<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &curves::verify_null_geometry(&self.0).map_err(err)?)
    }

    /// Torus coordinates `(x, y, z)` of every sample.
    fn torus(&self) -> PyResult<Vec<(f64, f64, f64)>> {
        self.0.gamma.iter().map(|g| torus_embed(PyMat2(*g))).collect()
    }
}

/// Integrate the spinor frames of a profile (`mn:M,N`, `constant:K` or
/// `sine`) from identity frames.
#[pyfunction]
#[pyo3(signature = (profile_spec, h, s0 = 0.0, length = None))]
fn integrate_curve(profile_spec: &str, h: f64, s0: f64, length: Option<f64>) -> PyResult<PyNullCurve> {
    let (spec, prof) = profile(profile_spec)?;
    let g = grid(&spec, s0, length, h)?;
    let c = curves::integrate_spinor_frames(&prof, g, adsnull::Mat2::IDENTITY, adsnull::Mat2::IDENTITY).map_err(err)?;
    Ok(PyNullCurve(c))
}

#[pyclass(name = "RiccatiSolution", frozen)]
struct PyRiccati(ttransform::RiccatiSolution);

#[pymethods]
impl PyRiccati {
    #[getter]
    fn xi(&self) -> f64 {
        self.0.xi
    }

    #[getter]
    fn f(&self) -> Vec<f64> {
        self.0.f.clone()
    }

    #[getter]
    fn pole(&self) -> Vec<bool> {
        self.0.pole.clone()
    }

    fn pole_locations(&self) -> Vec<f64> {
        self.0.pole_locations()
    }

    fn is_pole_free(&self) -> bool {
        self.0.is_pole_free()
    }
}

/// Solve `f′ + f² = κ + cosh 2ξ` on the grid of `curve` with `f(s0) = c`.
#[pyfunction]
#[pyo3(signature = (profile_spec, curve, xi, c, s0 = None))]
fn solve_riccati(profile_spec: &str, curve: &PyNullCurve, xi: f64, c: f64, s0: Option<f64>) -> PyResult<PyRiccati> {
    let (_, prof) = profile(profile_spec)?;
    let g = curve.0.grid;
    ttransform::solve_riccati(&prof, g, xi, s0.unwrap_or(g.s0), c).map(PyRiccati).map_err(err)
}

fn transform_result<'py>(py: Python<'py>, t: ttransform::TTransformResult) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("kind", to_py(py, &t.kind)?)?;
    d.set_item("det_plus", to_py(py, &t.det_plus)?)?;
    d.set_item("det_minus", to_py(py, &t.det_minus)?)?;
    d.set_item("chi", to_py(py, &t.chi)?)?;
    d.set_item("kappa_tilde", t.kappa_tilde.clone())?;
    d.set_item("curve", Py::new(py, PyNullCurve(t.curve))?)?;
    Ok(d)
}

/// T-transform of `curve` by a pole-free Riccati solution.
#[pyfunction]
#[pyo3(signature = (curve, solution, sign = 1))]
fn t_transform<'py>(py: Python<'py>, curve: &PyNullCurve, solution: &PyRiccati, sign: i8) -> PyResult<Bound<'py, PyDict>> {
    transform_result(py, ttransform::t_transform(&curve.0, &solution.0, sign).map_err(err)?)
}

/// The χ ≠ 0 transform of a constant-bending curve.
#[pyfunction]
#[pyo3(signature = (curve, kappa, c_plus, c_minus, sign_plus = 1, sign_minus = 1))]
fn constant_bending_transform<'py>(
    py: Python<'py>,
    curve: &PyNullCurve,
    kappa: f64,
    c_plus: f64,
    c_minus: f64,
    sign_plus: i8,
    sign_minus: i8,
) -> PyResult<Bound<'py, PyDict>> {
    let t = ttransform::constant_bending_transform(kappa, &curve.0, c_plus, c_minus, sign_plus, sign_minus).map_err(err)?;
    transform_result(py, t)
}

/// Build the two-step chain over `κ_{m,n}` and summarize it.
#[pyfunction]
#[pyo3(signature = (m, n, p, r, c = 0.0, c_tilde = 0.0, s = (-10.0, 10.0), t = (-0.5, 0.5), hs = 0.02, ht = 0.01))]
#[allow(clippy::too_many_arguments)]
fn soliton_chain<'py>(
    py: Python<'py>,
    m: i64,
    n: i64,
    p: f64,
    r: f64,
    c: f64,
    c_tilde: f64,
    s: (f64, f64),
    t: (f64, f64),
    hs: f64,
    ht: f64,
) -> PyResult<Bound<'py, PyDict>> {
    let g = STGrid::covering(s, t, hs, ht).map_err(err)?;
    let ch = kdv::soliton_chain(m, n, p, r, c, c_tilde, g).map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("kappa0", ch.kappa0)?;
    d.set_item("lambda_p", ch.lambda_p)?;
    d.set_item("omega_pr", ch.omega_pr)?;
    d.set_item("xi_lambda", ch.xi_lambda)?;
    d.set_item("xi_omega", ch.xi_omega)?;
    d.set_item("velocity", ch.soliton1().velocity())?;
    d.set_item("closed_form_gaps", ch.closed_form_gaps())?;
    d.set_item("kdv_residuals", ch.kdv_residuals().map_err(err)?)?;
    d.set_item("s", g.sgrid.points())?;
    d.set_item("t", g.tgrid().points())?;
    d.set_item("kappa1", ch.kappa1.sample(&g).0)?;
    d.set_item("kappa2", ch.kappa2.sample(&g).0)?;
    Ok(d)
}

/// Decay window of the closed-form `κ̃` (`which = 1`) or `κ̂` (`which = 2`)
/// at `t = 0`.
#[pyfunction]
#[pyo3(signature = (m, n, p, r, bound, which = 1, c = 0.0, c_tilde = 0.0, far = 40.0, scan = 0.05))]
#[allow(clippy::too_many_arguments)]
fn decay_window<'py>(
    py: Python<'py>,
    m: i64,
    n: i64,
    p: f64,
    r: f64,
    bound: f64,
    which: u8,
    c: f64,
    c_tilde: f64,
    far: f64,
    scan: f64,
) -> PyResult<Bound<'py, PyAny>> {
    let k0 = curves::kappa_mn(m, n).map_err(err)?;
    let s1 = kdv::Soliton1 { kappa0: k0, lambda: p - k0, c, s0: 0.0, t0: 0.0 };
    let s2 = kdv::Soliton2 { base: s1, omega: p - k0 + r, c_tilde };
    let w = match which {
        1 => kdv::decay_window(|s| s1.jet(s, 0.0).k, k0, bound, far, scan),
        2 => kdv::decay_window(|s| s2.jet(s, 0.0).k, k0, bound, far, scan),
        _ => return Err(AdsnullError::new_err("which must be 1 or 2")),
    }
    .map_err(err)?;
    to_py(py, &w)
}

/// Run a subcommand with a TOML configuration (same format as the CLI
/// `--config` file) and return its output as a dict.
#[pyfunction]
#[pyo3(signature = (subcommand, config = ""))]
fn run<'py>(py: Python<'py>, subcommand: &str, config: &str) -> PyResult<Bound<'py, PyAny>> {
    use pipeline::run::*;
    let cfg = RunConfig::from_toml(config).map_err(err)?;
    let out = match subcommand {
        "frenet" => run_frenet(&cfg.frenet),
        "ttransform" => run_ttransform(&cfg.ttransform),
        "permute" => run_permute(&cfg.permute),
        "soliton" => run_soliton(&cfg.soliton),
        "lien" => run_lien(&cfg.lien),
        "verify" => run_verify(&cfg.verify),
        "export-torus" | "export_torus" => run_export_torus(&cfg.export_torus),
        other => return Err(AdsnullError::new_err(format!("unknown subcommand {other:?}"))),
    }
    .map_err(err)?;
    to_py(py, &out)
}

#[pymodule]
fn adsnull_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("AdsnullError", m.py().get_type::<AdsnullError>())?;
    m.add_class::<PyMat2>()?;
    m.add_class::<PyNullCurve>()?;
    m.add_class::<PyRiccati>()?;
    m.add_function(wrap_pyfunction!(sl2_exp, m)?)?;
    m.add_function(wrap_pyfunction!(qform, m)?)?;
    m.add_function(wrap_pyfunction!(inner, m)?)?;
    m.add_function(wrap_pyfunction!(kappa_mn, m)?)?;
    m.add_function(wrap_pyfunction!(torus_knot_type, m)?)?;
    m.add_function(wrap_pyfunction!(closure_period, m)?)?;
    m.add_function(wrap_pyfunction!(torus_embed, m)?)?;
    m.add_function(wrap_pyfunction!(integrate_curve, m)?)?;
    m.add_function(wrap_pyfunction!(solve_riccati, m)?)?;
    m.add_function(wrap_pyfunction!(t_transform, m)?)?;
    m.add_function(wrap_pyfunction!(constant_bending_transform, m)?)?;
    m.add_function(wrap_pyfunction!(soliton_chain, m)?)?;
    m.add_function(wrap_pyfunction!(decay_window, m)?)?;
    m.add_function(wrap_pyfunction!(run, m)?)?;
    Ok(())
}
