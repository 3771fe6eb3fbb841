//! Thin helpers over nalgebra's dense decompositions.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::Complex;

pub(crate) type CMatrix = DMatrix<Complex>;

pub(crate) fn to_complex(m: &DMatrix<f64>) -> CMatrix {
    m.map(|x| Complex::new(x, 0.0))
}

pub(crate) fn spectral_norm_real(m: &DMatrix<f64>) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.clone().svd(false, false).singular_values.max()
}

pub(crate) fn spectral_norm(m: &CMatrix) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.clone().svd(false, false).singular_values.max()
}

pub(crate) fn smallest_singular_value_real(m: &DMatrix<f64>) -> f64 {
    m.clone().svd(false, false).singular_values.min()
}

pub(crate) fn smallest_singular_value(m: &CMatrix) -> f64 {
    m.clone().svd(false, false).singular_values.min()
}

/// Right singular vector for the smallest singular value.
pub(crate) fn null_vector(m: &CMatrix) -> Result<DVector<Complex>> {
    let svd = m.clone().svd(false, true);
    let v_t = svd
        .v_t
        .ok_or_else(|| Error::Numeric("singular value decomposition did not converge".into()))?;
    let (k, _) = svd.singular_values.argmin();
    Ok(v_t.row(k).adjoint())
}

pub(crate) fn eigenvalues_real(m: &DMatrix<f64>) -> Vec<Complex> {
    m.complex_eigenvalues().iter().copied().collect()
}

pub(crate) fn eigenvalues_complex(m: &CMatrix) -> Result<Vec<Complex>> {
    let schur = nalgebra::linalg::Schur::try_new(m.clone(), f64::EPSILON, 0)
        .ok_or_else(|| Error::Numeric("Schur decomposition did not converge".into()))?;
    schur
        .eigenvalues()
        .map(|v| v.iter().copied().collect())
        .ok_or_else(|| Error::Numeric("Schur form is not triangular".into()))
}

pub(crate) fn is_finite_real(m: &DMatrix<f64>) -> bool {
    m.iter().all(|x| x.is_finite())
}

pub(crate) fn is_finite(m: &CMatrix) -> bool {
    m.iter().all(|x| x.is_finite())
}
