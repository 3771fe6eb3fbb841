//! Real linear operators on finite-dimensional spaces: spectra, resolvent margins and the
//! operator-valued functional calculus.

use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;

use crate::contour_calc::{build_contour, trapezoid, Contour, QuadratureConfig};
use crate::error::{Error, Result};
use crate::func_model::{AnalyticScalar, SymmetricDomain};
use crate::linalg::{self, CMatrix};
use crate::quat_core::Quaternion;
use crate::Complex;

/// Largest dimension accepted by the dense eigenvalue routines.
pub const MAX_DENSE_DIM: usize = 64;
/// Relative tolerance of the final realness check in [`op_calculus`].
pub const FLAT_TOL: f64 = 1e-8;

/// A real `n x n` matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct RealOperator {
    m: DMatrix<f64>,
}

impl RealOperator {
    /// Row-major constructor.
    pub fn new(n: usize, data: &[f64]) -> Result<Self> {
        if n == 0 || data.len() != n * n {
            return Err(Error::invalid(format!(
                "expected {} entries for a {n}x{n} operator",
                n * n
            )));
        }
        Self::from_matrix(DMatrix::from_row_slice(n, n, data))
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::invalid("operator rows must form a square matrix"));
        }
        let flat: Vec<f64> = rows.iter().flatten().copied().collect();
        Self::new(n, &flat)
    }

    pub fn from_matrix(m: DMatrix<f64>) -> Result<Self> {
        if m.nrows() != m.ncols() || m.nrows() == 0 {
            return Err(Error::invalid("operator must be a nonempty square matrix"));
        }
        if !linalg::is_finite_real(&m) {
            return Err(Error::invalid("operator entries must be finite"));
        }
        Ok(Self { m })
    }

    pub fn identity(n: usize) -> Self {
        Self {
            m: DMatrix::identity(n, n),
        }
    }

    pub fn zeros(n: usize) -> Self {
        Self {
            m: DMatrix::zeros(n, n),
        }
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.m
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.m[(i, j)]
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.m
            .row_iter()
            .map(|r| r.iter().copied().collect())
            .collect()
    }

    /// Spectral norm.
    pub fn norm(&self) -> f64 {
        linalg::spectral_norm_real(&self.m)
    }

    pub fn matmul(&self, other: &RealOperator) -> RealOperator {
        Self {
            m: &self.m * &other.m,
        }
    }

    pub fn add(&self, other: &RealOperator) -> RealOperator {
        Self {
            m: &self.m + &other.m,
        }
    }

    pub fn sub(&self, other: &RealOperator) -> RealOperator {
        Self {
            m: &self.m - &other.m,
        }
    }

    pub fn scale(&self, c: f64) -> RealOperator {
        Self { m: &self.m * c }
    }

    /// `A B - B A`.
    pub fn commutator(&self, other: &RealOperator) -> RealOperator {
        Self {
            m: &self.m * &other.m - &other.m * &self.m,
        }
    }

    pub fn pow(&self, k: usize) -> RealOperator {
        let mut out = Self::identity(self.dim());
        for _ in 0..k {
            out = out.matmul(self);
        }
        out
    }

    pub fn max_abs_diff(&self, other: &RealOperator) -> f64 {
        (&self.m - &other.m).amax()
    }
}

/// A complex `n x n` matrix, typically the complexification of a real operator.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexOperator {
    m: CMatrix,
}

impl ComplexOperator {
    pub fn from_matrix(m: CMatrix) -> Result<Self> {
        if m.nrows() != m.ncols() || m.nrows() == 0 {
            return Err(Error::invalid("operator must be a nonempty square matrix"));
        }
        if !linalg::is_finite(&m) {
            return Err(Error::invalid("operator entries must be finite"));
        }
        Ok(Self { m })
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.m
    }

    pub fn rows(&self) -> Vec<Vec<Complex>> {
        self.m
            .row_iter()
            .map(|r| r.iter().copied().collect())
            .collect()
    }

    pub fn norm(&self) -> f64 {
        linalg::spectral_norm(&self.m)
    }

    pub fn real_part(&self) -> RealOperator {
        RealOperator {
            m: self.m.map(|c| c.re),
        }
    }

    pub fn imag_part(&self) -> RealOperator {
        RealOperator {
            m: self.m.map(|c| c.im),
        }
    }

    pub fn max_abs_diff(&self, other: &ComplexOperator) -> f64 {
        (&self.m - &other.m)
            .iter()
            .map(|c| c.norm())
            .fold(0.0, f64::max)
    }
}

/// `T_C`, the complexification of `T`.
pub fn complexify(t: &RealOperator) -> ComplexOperator {
    ComplexOperator {
        m: linalg::to_complex(&t.m),
    }
}

/// Entrywise conjugate `S♭`; an operator is the complexification of a real one iff `S = S♭`.
pub fn flat(s: &ComplexOperator) -> ComplexOperator {
    ComplexOperator {
        m: s.m.map(|c| c.conj()),
    }
}

/// Smallest singular value of `T^2 - 2 Re(q) T + ‖q‖^2 I`, divided by `max(1, ‖T‖^2)`.
///
/// Zero exactly when `q` lies in the quaternionic spectrum of `T`.
pub fn q_resolvent_margin(t: &RealOperator, q: &Quaternion) -> f64 {
    let n = t.dim();
    let m = &t.m * &t.m - &t.m * (2.0 * q.real_part()) + DMatrix::identity(n, n) * q.norm_sqr();
    linalg::smallest_singular_value_real(&m) / t.norm().powi(2).max(1.0)
}

/// The block operator `[[T - z1, -z2], [conj z2, T - conj z1]]` on `C^n ⊗ C^2`.
pub fn block_q_operator(t: &RealOperator, q: &Quaternion) -> ComplexOperator {
    let n = t.dim();
    let tc = linalg::to_complex(&t.m);
    let id = CMatrix::identity(n, n);
    let z = q.coords();
    let mut m = CMatrix::zeros(2 * n, 2 * n);
    m.view_mut((0, 0), (n, n)).copy_from(&(&tc - &id * z.z1));
    m.view_mut((0, n), (n, n)).copy_from(&(&id * -z.z2));
    m.view_mut((n, 0), (n, n)).copy_from(&(&id * z.z2.conj()));
    m.view_mut((n, n), (n, n))
        .copy_from(&(&tc - &id * z.z1.conj()));
    ComplexOperator { m }
}

/// Smallest singular value of a complex operator.
pub fn smallest_singular_value(s: &ComplexOperator) -> f64 {
    linalg::smallest_singular_value(&s.m)
}

/// Eigenvalues of `T_C`, closed under conjugation.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectrumReport {
    /// All eigenvalues with multiplicity.
    pub eigenvalues: Vec<Complex>,
    /// Largest distance from the conjugate of an eigenvalue to the computed spectrum.
    pub conjugation_defect: f64,
}

impl SpectrumReport {
    pub fn spectral_radius(&self) -> f64 {
        self.eigenvalues
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }

    /// Distinct eigenvalues up to `tol`, each with its multiplicity.
    pub fn distinct(&self, tol: f64) -> Vec<(Complex, usize)> {
        let mut out: Vec<(Complex, usize)> = Vec::new();
        for &z in &self.eigenvalues {
            match out.iter_mut().find(|(w, _)| (w - z).norm() <= tol) {
                Some(entry) => entry.1 += 1,
                None => out.push((z, 1)),
            }
        }
        out
    }

    /// True when `σ(q)` meets the spectrum within `tol`, i.e. `q ∈ σ_H(T)` up to `tol`.
    pub fn q_spectrum_contains(&self, q: &Quaternion, tol: f64) -> bool {
        let sp = crate::quat_core::spectrum(q);
        self.eigenvalues
            .iter()
            .any(|z| (z - sp.s_plus).norm() <= tol)
    }
}

/// Eigenvalues of `T_C` for `n <= 64`, sorted by real then imaginary part.
pub fn complex_spectrum(t: &RealOperator) -> Result<SpectrumReport> {
    if t.dim() > MAX_DENSE_DIM {
        return Err(Error::invalid(format!(
            "dimension {} exceeds the dense limit {MAX_DENSE_DIM}",
            t.dim()
        )));
    }
    let mut eigenvalues = linalg::eigenvalues_real(&t.m);
    if eigenvalues.iter().any(|z| !z.is_finite()) {
        return Err(Error::Numeric("eigenvalue iteration failed".into()));
    }
    // Real input: exact conjugate pairs come out of the real Schur form.
    eigenvalues.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    let conjugation_defect = eigenvalues
        .iter()
        .map(|z| {
            eigenvalues
                .iter()
                .map(|w| (w - z.conj()).norm())
                .fold(f64::INFINITY, f64::min)
        })
        .fold(0.0, f64::max);
    Ok(SpectrumReport {
        eigenvalues,
        conjugation_defect,
    })
}

type OperatorCallback = Arc<dyn Fn(Complex) -> CMatrix + Send + Sync>;

/// Operator-valued stem function `F(ζ)` with `F(conj ζ) = F(ζ)♭`.
#[derive(Clone)]
pub enum OperatorStem {
    /// `Σ A_k g_k(ζ)` with real `A_k` and symmetric scalars `g_k`.
    Terms {
        terms: Vec<(RealOperator, AnalyticScalar)>,
        domain: SymmetricDomain,
    },
    /// Opaque callback spot-checked for the flat symmetry on construction.
    Callback {
        dim: usize,
        f: OperatorCallback,
        domain: SymmetricDomain,
    },
}

impl fmt::Debug for OperatorStem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OperatorStem::Terms { terms, .. } => f
                .debug_struct("OperatorStem::Terms")
                .field("len", &terms.len())
                .finish(),
            OperatorStem::Callback { dim, .. } => f
                .debug_struct("OperatorStem::Callback")
                .field("dim", dim)
                .finish(),
        }
    }
}

impl OperatorStem {
    pub fn terms(terms: Vec<(RealOperator, AnalyticScalar)>) -> Result<Self> {
        let Some((first, _)) = terms.first() else {
            return Err(Error::invalid("operator stem needs at least one term"));
        };
        let n = first.dim();
        if terms.iter().any(|(a, _)| a.dim() != n) {
            return Err(Error::invalid(
                "operator coefficients must share one dimension",
            ));
        }
        if terms.iter().any(|(_, g)| !g.is_symmetric()) {
            return Err(Error::contract("operator stem scalars must be symmetric"));
        }
        Ok(OperatorStem::Terms {
            terms,
            domain: SymmetricDomain::entire(),
        })
    }

    /// `f(ζ) I_n`.
    pub fn scalar(f: AnalyticScalar, n: usize) -> Result<Self> {
        Self::terms(vec![(RealOperator::identity(n), f)])
    }

    /// `Σ A_k ζ^k`.
    pub fn polynomial(coeffs: Vec<RealOperator>) -> Result<Self> {
        let terms = coeffs
            .into_iter()
            .enumerate()
            .map(|(k, a)| {
                let mut c = vec![0.0; k + 1];
                c[k] = 1.0;
                (a, AnalyticScalar::real_polynomial(&c))
            })
            .collect();
        Self::terms(terms)
    }

    /// Wraps a callback after checking `F(conj ζ) = F(ζ)♭` at 32 conjugate pairs of the domain.
    pub fn callback<F>(dim: usize, f: F, domain: SymmetricDomain) -> Result<Self>
    where
        F: Fn(Complex) -> CMatrix + Send + Sync + 'static,
    {
        for p in domain.conjugate_samples(32).chunks(2) {
            let a = f(p[0]);
            let b = f(p[1]);
            if a.nrows() != dim || a.ncols() != dim {
                return Err(Error::invalid(
                    "callback returned a matrix of the wrong size",
                ));
            }
            let scale = linalg::spectral_norm(&a).max(1.0);
            if linalg::spectral_norm(&(b - a.map(|c| c.conj()))) > 1e-10 * scale {
                return Err(Error::contract("callback violates F(conj ζ) = F(ζ)♭"));
            }
        }
        Ok(OperatorStem::Callback {
            dim,
            f: Arc::new(f),
            domain,
        })
    }

    pub fn on_domain(self, domain: SymmetricDomain) -> Self {
        match self {
            OperatorStem::Terms { terms, .. } => OperatorStem::Terms { terms, domain },
            OperatorStem::Callback { dim, f, .. } => OperatorStem::Callback { dim, f, domain },
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            OperatorStem::Terms { terms, .. } => terms[0].0.dim(),
            OperatorStem::Callback { dim, .. } => *dim,
        }
    }

    pub fn domain(&self) -> &SymmetricDomain {
        match self {
            OperatorStem::Terms { domain, .. } | OperatorStem::Callback { domain, .. } => domain,
        }
    }

    /// `F f` for a symmetric scalar `f`.
    pub fn times_scalar(&self, f: &AnalyticScalar) -> Result<Self> {
        if !f.is_symmetric() {
            return Err(Error::contract("module product needs a symmetric scalar"));
        }
        match self {
            OperatorStem::Terms { terms, domain } => Ok(OperatorStem::Terms {
                terms: terms
                    .iter()
                    .map(|(a, g)| (a.clone(), g.clone().times(f.clone())))
                    .collect(),
                domain: domain.clone(),
            }),
            OperatorStem::Callback { dim, f: cb, domain } => {
                let (cb, f) = (cb.clone(), f.clone());
                Ok(OperatorStem::Callback {
                    dim: *dim,
                    f: Arc::new(move |z| cb(z) * f.eval(z)),
                    domain: domain.clone(),
                })
            }
        }
    }

    pub fn value(&self, z: Complex) -> CMatrix {
        match self {
            OperatorStem::Terms { terms, .. } => {
                let n = self.dim();
                let mut out = CMatrix::zeros(n, n);
                for (a, g) in terms {
                    let c = g.eval(z);
                    out.zip_apply(&a.m, |o, x| *o += c * x);
                }
                out
            }
            OperatorStem::Callback { f, .. } => f(z),
        }
    }
}

/// Output of [`op_calculus`].
#[derive(Clone, Debug, PartialEq)]
pub struct OpCalcResult {
    pub value: RealOperator,
    /// Frobenius norm of the discarded imaginary part.
    pub imag_residue: f64,
    pub nodes_per_circle: usize,
    pub error_estimate: f64,
    pub converged: bool,
    pub contour: Contour,
}

/// Default clearance between the spectrum of `T` and the integration contour.
pub fn spectral_clearance(report: &SpectrumReport) -> f64 {
    0.1f64.max(0.05 * report.spectral_radius())
}

/// Conjugate-symmetric contour around `σ(T_C)` inside the domain of `F`.
pub fn op_contour(t: &RealOperator, domain: &SymmetricDomain) -> Result<Contour> {
    let report = complex_spectrum(t)?;
    let mut margin = spectral_clearance(&report);
    let room = report
        .eigenvalues
        .iter()
        .map(|&z| domain.clearance(z))
        .fold(f64::INFINITY, f64::min);
    if room <= 0.0 {
        return Err(Error::domain(
            "the spectrum of T is not inside the domain of F",
        ));
    }
    margin = margin.min(0.5 * room);
    build_contour(&report.eigenvalues, domain, margin).map_err(|e| match e {
        Error::Geometry(m) => Error::Domain(m),
        other => other,
    })
}

/// `F(T) = (1/2πi) ∮ F(ζ) (ζ - T_C)^{-1} dζ`, returned as a real operator.
pub fn op_calculus(
    f: &OperatorStem,
    t: &RealOperator,
    cfg: &QuadratureConfig,
) -> Result<OpCalcResult> {
    let n = t.dim();
    if f.dim() != n {
        return Err(Error::invalid("stem and operator dimensions differ"));
    }
    let contour = op_contour(t, f.domain())?;
    let tc = linalg::to_complex(&t.m);
    let r = trapezoid(&contour, cfg, n * n, |z, w, out| {
        let shifted = CMatrix::identity(n, n) * z - &tc;
        let res = shifted
            .lu()
            .try_inverse()
            .ok_or_else(|| Error::Numeric(format!("ζ - T is singular at {z}")))?;
        let term = f.value(z) * res * w;
        // nalgebra stores column-major; `out` uses the same order.
        for (o, v) in out.iter_mut().zip(term.iter()) {
            *o += *v;
        }
        Ok(())
    })?;
    let x = CMatrix::from_column_slice(n, n, &r.value);
    let imag = x.map(|c| c.im);
    let imag_residue = imag.norm();
    let scale = x.map(|c| c.norm()).norm().max(1.0);
    if imag_residue > FLAT_TOL * scale {
        return Err(Error::contract(format!(
            "result is not real: imaginary part {imag_residue:e}"
        )));
    }
    Ok(OpCalcResult {
        value: RealOperator { m: x.map(|c| c.re) },
        imag_residue,
        nodes_per_circle: r.nodes_per_circle,
        error_estimate: r.error_estimate,
        converged: r.converged,
        contour,
    })
}

/// Real 4x4 matrix of `p ↦ θ p` on `H = R^4` in the basis `I, J, K, L`.
pub fn left_mult_matrix(theta: &Quaternion) -> DMatrix<f64> {
    let basis = [Quaternion::ONE, Quaternion::J, Quaternion::K, Quaternion::L];
    let mut m = DMatrix::zeros(4, 4);
    for (j, e) in basis.iter().enumerate() {
        let col = (*theta * *e).components();
        for i in 0..4 {
            m[(i, j)] = col[i];
        }
    }
    m
}

/// Left multiplication by `θ_k` on the `k`-th copy of `H`, as a block-diagonal real operator.
pub fn discrete_mult_op(thetas: &[Quaternion]) -> Result<RealOperator> {
    if thetas.is_empty() {
        return Err(Error::invalid("need at least one quaternion"));
    }
    let n = 4 * thetas.len();
    let mut m = DMatrix::zeros(n, n);
    for (k, th) in thetas.iter().enumerate() {
        m.view_mut((4 * k, 4 * k), (4, 4))
            .copy_from(&left_mult_matrix(th));
    }
    RealOperator::from_matrix(m)
}
