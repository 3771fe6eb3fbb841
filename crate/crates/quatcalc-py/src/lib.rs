use pyo3::exceptions::{PyArithmeticError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use quatcalc::contour_calc::{cauchy_transform, contour_for, QuadratureConfig};
use quatcalc::func_model::eval_spectral;
use quatcalc::joint_op::{joint_spectrum_points, martinelli_calculus, BiTerm};
use quatcalc::quat_core::{axial_decompose, spectrum};
use quatcalc::real_op::{complex_spectrum, discrete_mult_op, op_calculus};
use quatcalc::{
    AnalyticScalar, BiScalar, CommutingPair, Complex, Error, Mat2, OperatorStem, RealOperator,
    SphereGrid, StemFunction, SymmetricDomain,
};

fn to_py(e: Error) -> PyErr {
    match e {
        Error::Accuracy { .. } | Error::Numeric(_) => PyArithmeticError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn rows(m: &Mat2) -> Vec<Vec<Complex>> {
    m.rows().iter().map(|r| r.to_vec()).collect()
}

/// `"exp"`, `"sin"`, `"cos"` or a list of real polynomial coefficients, lowest degree first.
#[derive(FromPyObject)]
enum ScalarSpec {
    Name(String),
    Coeffs(Vec<f64>),
}

impl ScalarSpec {
    fn build(&self) -> PyResult<AnalyticScalar> {
        match self {
            ScalarSpec::Name(n) => match n.as_str() {
                "exp" => Ok(AnalyticScalar::Exp),
                "sin" => Ok(AnalyticScalar::Sin),
                "cos" => Ok(AnalyticScalar::Cos),
                other => Err(PyValueError::new_err(format!("unknown function {other:?}"))),
            },
            ScalarSpec::Coeffs(c) => Ok(AnalyticScalar::real_polynomial(c)),
        }
    }
}

/// A quaternion `x0 + x1 J + x2 K + x3 L`.
#[pyclass(name = "Quaternion", frozen, from_py_object)]
#[derive(Clone, Copy)]
struct PyQuaternion {
    inner: quatcalc::Quaternion,
}

#[pymethods]
impl PyQuaternion {
    #[new]
    fn new(x0: f64, x1: f64, x2: f64, x3: f64) -> PyResult<Self> {
        let inner = quatcalc::Quaternion::new(x0, x1, x2, x3).map_err(to_py)?;
        Ok(Self { inner })
    }

    fn components(&self) -> [f64; 4] {
        self.inner.components()
    }

    fn matrix(&self) -> Vec<Vec<Complex>> {
        rows(&self.inner.matrix())
    }

    fn star(&self) -> Self {
        Self { inner: self.inner.star() }
    }

    fn norm(&self) -> f64 {
        self.inner.norm()
    }

    fn inverse(&self) -> PyResult<Self> {
        Ok(Self { inner: self.inner.inverse().map_err(to_py)? })
    }

    fn __mul__(&self, other: &Self) -> Self {
        Self { inner: self.inner * other.inner }
    }

    fn __add__(&self, other: &Self) -> Self {
        Self { inner: self.inner + other.inner }
    }

    fn __sub__(&self, other: &Self) -> Self {
        Self { inner: self.inner - other.inner }
    }

    fn __eq__(&self, other: &Self) -> bool {
        self.inner == other.inner
    }

    /// Eigenvalues, eigenvectors and axial form as a dict.
    fn spectrum<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        let sp = spectrum(&self.inner);
        let ax = axial_decompose(&self.inner);
        let d = PyDict::new(py);
        d.set_item("s_plus", sp.s_plus)?;
        d.set_item("s_minus", sp.s_minus)?;
        d.set_item("nu_plus", (sp.nu_plus.z1, sp.nu_plus.z2))?;
        d.set_item("nu_minus", (sp.nu_minus.z1, sp.nu_minus.z2))?;
        d.set_item("axial", (ax.x, ax.y, ax.s.components()))?;
        Ok(d)
    }

    fn __repr__(&self) -> String {
        let [a, b, c, d] = self.inner.components();
        format!("Quaternion({a}, {b}, {c}, {d})")
    }
}

/// `f(q)` for a symmetric scalar `f` through the spectral decomposition of `q`.
#[pyfunction]
fn eval_scalar(q: &PyQuaternion, f: ScalarSpec) -> PyResult<PyQuaternion> {
    let stem = StemFunction::scalar(f.build()?).map_err(to_py)?;
    let m = eval_spectral(&stem, &q.inner).map_err(to_py)?;
    let inner = m
        .to_quaternion(None)
        .ok_or_else(|| PyArithmeticError::new_err("value left the quaternions"))?;
    Ok(PyQuaternion { inner })
}

/// `f(q)` as a 2x2 complex matrix computed by contour integration.
#[pyfunction]
#[pyo3(signature = (q, f, margin = 0.25))]
fn cauchy_scalar(q: &PyQuaternion, f: ScalarSpec, margin: f64) -> PyResult<Vec<Vec<Complex>>> {
    let stem = StemFunction::scalar(f.build()?).map_err(to_py)?;
    let gamma = contour_for(&q.inner, &SymmetricDomain::entire(), margin).map_err(to_py)?;
    let r = cauchy_transform(&stem, &q.inner, &gamma, &QuadratureConfig::default()).map_err(to_py)?;
    Ok(rows(&r.value))
}

fn operator(m: Vec<Vec<f64>>) -> PyResult<RealOperator> {
    RealOperator::from_rows(&m).map_err(to_py)
}

/// Eigenvalues of a real square matrix.
#[pyfunction]
fn op_spectrum(matrix: Vec<Vec<f64>>) -> PyResult<Vec<Complex>> {
    Ok(complex_spectrum(&operator(matrix)?).map_err(to_py)?.eigenvalues)
}

/// `f(T)` for a real matrix `T` and a symmetric scalar `f`.
#[pyfunction]
fn op_calc(matrix: Vec<Vec<f64>>, f: ScalarSpec) -> PyResult<Vec<Vec<f64>>> {
    let t = operator(matrix)?;
    let stem = OperatorStem::scalar(f.build()?, t.dim()).map_err(to_py)?;
    let r = op_calculus(&stem, &t, &QuadratureConfig::default()).map_err(to_py)?;
    Ok(r.value.rows())
}

/// Block-diagonal left multiplication by each quaternion on `H = R^4`.
#[pyfunction]
fn mult_op(thetas: Vec<PyQuaternion>) -> PyResult<Vec<Vec<f64>>> {
    let qs: Vec<_> = thetas.iter().map(|t| t.inner).collect();
    Ok(discrete_mult_op(&qs).map_err(to_py)?.rows())
}

fn pair(t1: Vec<Vec<f64>>, t2: Vec<Vec<f64>>) -> PyResult<CommutingPair> {
    CommutingPair::new(operator(t1)?, operator(t2)?).map_err(to_py)
}

/// Joint eigenvalues `(λ1, λ2)` of a commuting pair.
#[pyfunction]
fn joint_spectrum(t1: Vec<Vec<f64>>, t2: Vec<Vec<f64>>) -> PyResult<Vec<(Complex, Complex)>> {
    let pts = joint_spectrum_points(&pair(t1, t2)?, 0).map_err(to_py)?;
    Ok(pts.iter().map(|z| (z.z1, z.z2)).collect())
}

/// `Σ c z1^p1 z2^p2` evaluated at a commuting pair through the sphere integral.
#[pyfunction]
#[pyo3(signature = (t1, t2, terms, resolution = 48))]
fn joint_calc(
    t1: Vec<Vec<f64>>,
    t2: Vec<Vec<f64>>,
    terms: Vec<(f64, u32, u32)>,
    resolution: usize,
) -> PyResult<Vec<Vec<f64>>> {
    let p = pair(t1, t2)?;
    let f = BiScalar::Polynomial(
        terms
            .into_iter()
            .map(|(c, p1, p2)| BiTerm { coeff: Complex::new(c, 0.0), p1, p2 })
            .collect(),
    );
    let grid = SphereGrid::enclosing(&p, resolution).map_err(to_py)?;
    Ok(martinelli_calculus(&f, &p, &grid).map_err(to_py)?.value.rows())
}

#[pymodule]
fn quatcalc_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add_class::<PyQuaternion>()?;
    m.add_function(wrap_pyfunction!(eval_scalar, m)?)?;
    m.add_function(wrap_pyfunction!(cauchy_scalar, m)?)?;
    m.add_function(wrap_pyfunction!(op_spectrum, m)?)?;
    m.add_function(wrap_pyfunction!(op_calc, m)?)?;
    m.add_function(wrap_pyfunction!(mult_op, m)?)?;
    m.add_function(wrap_pyfunction!(joint_spectrum, m)?)?;
    m.add_function(wrap_pyfunction!(joint_calc, m)?)?;
    Ok(())
}
