//! Stem functions and their spectral evaluation on quaternions.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::quat_core::{spectrum, Mat2, Quaternion};
use crate::Complex;

/// Relative tolerance for the symmetry spot checks run on opaque callbacks.
const SYMMETRY_SPOT_TOL: f64 = 1e-10;
const SYMMETRY_SPOT_PAIRS: usize = 32;

/// A closed disk in the complex plane.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Disk {
    pub center: Complex,
    pub radius: f64,
}

impl Disk {
    pub fn new(center: Complex, radius: f64) -> Result<Self> {
        if !(center.is_finite() && radius.is_finite() && radius > 0.0) {
            return Err(Error::invalid(
                "disk needs a finite center and a positive radius",
            ));
        }
        Ok(Self { center, radius })
    }

    fn mirrored(&self) -> Disk {
        Disk {
            center: self.center.conj(),
            radius: self.radius,
        }
    }
}

/// An open conjugate-symmetric subset of the plane: either all of `C` or a union of open disks
/// closed under conjugation.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct SymmetricDomain {
    disks: Option<Vec<Disk>>,
}

impl SymmetricDomain {
    pub fn entire() -> Self {
        Self { disks: None }
    }

    /// Union of the given disks and their mirror images.
    pub fn union_of(disks: &[Disk]) -> Result<Self> {
        if disks.is_empty() {
            return Err(Error::invalid("a domain needs at least one disk"));
        }
        let mut all: Vec<Disk> = Vec::with_capacity(2 * disks.len());
        for d in disks {
            all.push(*d);
            if d.center.im != 0.0 {
                all.push(d.mirrored());
            }
        }
        Ok(Self { disks: Some(all) })
    }

    pub fn disk(center: Complex, radius: f64) -> Result<Self> {
        Self::union_of(&[Disk::new(center, radius)?])
    }

    pub fn is_entire(&self) -> bool {
        self.disks.is_none()
    }

    pub fn disks(&self) -> Option<&[Disk]> {
        self.disks.as_deref()
    }

    /// Lower bound on the distance from `z` to the complement; negative outside.
    pub fn clearance(&self, z: Complex) -> f64 {
        match &self.disks {
            None => f64::INFINITY,
            Some(ds) => ds
                .iter()
                .map(|d| d.radius - (z - d.center).norm())
                .fold(f64::NEG_INFINITY, f64::max),
        }
    }

    pub fn contains(&self, z: Complex) -> bool {
        z.is_finite() && self.clearance(z) > 0.0
    }

    /// True when the closed disk lies inside one of the constituent disks.
    pub fn contains_disk(&self, center: Complex, radius: f64) -> bool {
        match &self.disks {
            None => center.is_finite() && radius.is_finite(),
            Some(ds) => ds
                .iter()
                .any(|d| (center - d.center).norm() + radius < d.radius),
        }
    }

    /// `2 * pairs` sample points made of conjugate pairs on two circles inside the domain.
    pub fn conjugate_samples(&self, pairs: usize) -> Vec<Complex> {
        let circles: Vec<(Complex, f64)> = match &self.disks {
            None => vec![(Complex::new(0.0, 0.0), 0.5), (Complex::new(0.0, 0.0), 1.5)],
            Some(ds) => {
                let d = ds[0];
                vec![(d.center, 0.3 * d.radius), (d.center, 0.7 * d.radius)]
            }
        };
        let mut out = Vec::with_capacity(2 * pairs);
        for k in 0..pairs {
            let (c, r) = circles[k % circles.len()];
            let t = PI * (k as f64 + 0.5) / pairs as f64;
            let z = c + Complex::from_polar(r, t);
            out.push(z);
            out.push(z.conj());
        }
        out
    }
}

type ScalarCallback = Arc<dyn Fn(Complex, usize) -> Complex + Send + Sync>;

/// A user-supplied analytic scalar: `callback(ζ, n)` returns the n-th derivative at `ζ`.
#[derive(Clone)]
pub struct OpaqueScalar {
    name: String,
    callback: ScalarCallback,
    symmetric: bool,
    probe: SymmetricDomain,
}

impl OpaqueScalar {
    /// `symmetric` asserts `f(conj ζ) = conj f(ζ)`; the assertion is spot-checked on `probe`.
    pub fn new<F>(
        name: impl Into<String>,
        callback: F,
        symmetric: bool,
        probe: SymmetricDomain,
    ) -> Self
    where
        F: Fn(Complex, usize) -> Complex + Send + Sync + 'static,
    {
        Self {
            name: name.into(),
            callback: Arc::new(callback),
            symmetric,
            probe,
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    fn spot_check(&self) -> bool {
        self.probe
            .conjugate_samples(SYMMETRY_SPOT_PAIRS)
            .chunks(2)
            .all(|p| {
                let a = (self.callback)(p[0], 0);
                let b = (self.callback)(p[1], 0);
                (b - a.conj()).norm() <= SYMMETRY_SPOT_TOL * a.norm().max(1.0)
            })
    }
}

impl fmt::Debug for OpaqueScalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("OpaqueScalar")
            .field("name", &self.name)
            .field("symmetric", &self.symmetric)
            .finish()
    }
}

/// Analytic scalar functions closed under sums, products and affine substitution.
#[derive(Clone, Debug)]
pub enum AnalyticScalar {
    /// `Σ c_k ζ^k`, lowest degree first.
    Polynomial(Vec<Complex>),
    Exp,
    Sin,
    Cos,
    /// `body(scale ζ + shift)`.
    Affine {
        scale: Complex,
        shift: Complex,
        body: Box<AnalyticScalar>,
    },
    Sum(Box<AnalyticScalar>, Box<AnalyticScalar>),
    Product(Box<AnalyticScalar>, Box<AnalyticScalar>),
    Opaque(OpaqueScalar),
}

impl AnalyticScalar {
    pub fn constant(c: Complex) -> Self {
        AnalyticScalar::Polynomial(vec![c])
    }

    pub fn real_polynomial(coeffs: &[f64]) -> Self {
        AnalyticScalar::Polynomial(coeffs.iter().map(|&c| Complex::new(c, 0.0)).collect())
    }

    pub fn identity() -> Self {
        Self::real_polynomial(&[0.0, 1.0])
    }

    pub fn affine(self, scale: Complex, shift: Complex) -> Self {
        AnalyticScalar::Affine {
            scale,
            shift,
            body: Box::new(self),
        }
    }

    pub fn plus(self, other: AnalyticScalar) -> Self {
        AnalyticScalar::Sum(Box::new(self), Box::new(other))
    }

    pub fn times(self, other: AnalyticScalar) -> Self {
        AnalyticScalar::Product(Box::new(self), Box::new(other))
    }

    pub fn eval(&self, z: Complex) -> Complex {
        self.derivative(0, z)
    }

    /// The n-th derivative at `z`.
    pub fn derivative(&self, n: usize, z: Complex) -> Complex {
        match self {
            AnalyticScalar::Polynomial(c) => poly_derivative(c, n, z),
            AnalyticScalar::Exp => z.exp(),
            AnalyticScalar::Sin => match n % 4 {
                0 => z.sin(),
                1 => z.cos(),
                2 => -z.sin(),
                _ => -z.cos(),
            },
            AnalyticScalar::Cos => match n % 4 {
                0 => z.cos(),
                1 => -z.sin(),
                2 => -z.cos(),
                _ => z.sin(),
            },
            AnalyticScalar::Affine { scale, shift, body } => {
                scale.powu(n as u32) * body.derivative(n, scale * z + shift)
            }
            AnalyticScalar::Sum(a, b) => a.derivative(n, z) + b.derivative(n, z),
            AnalyticScalar::Product(a, b) => {
                let mut acc = Complex::new(0.0, 0.0);
                let mut binom = 1.0;
                for k in 0..=n {
                    acc += a.derivative(k, z) * b.derivative(n - k, z) * binom;
                    binom = binom * (n - k) as f64 / (k + 1) as f64;
                }
                acc
            }
            AnalyticScalar::Opaque(o) => (o.callback)(z, n),
        }
    }

    /// Whether `f(conj ζ) = conj f(ζ)`; structural for closed forms, asserted and spot-checked
    /// for opaque callbacks.
    pub fn is_symmetric(&self) -> bool {
        match self {
            AnalyticScalar::Polynomial(c) => c.iter().all(|c| c.im == 0.0),
            AnalyticScalar::Exp | AnalyticScalar::Sin | AnalyticScalar::Cos => true,
            AnalyticScalar::Affine { scale, shift, body } => {
                scale.im == 0.0 && shift.im == 0.0 && body.is_symmetric()
            }
            AnalyticScalar::Sum(a, b) | AnalyticScalar::Product(a, b) => {
                a.is_symmetric() && b.is_symmetric()
            }
            AnalyticScalar::Opaque(o) => o.symmetric && o.spot_check(),
        }
    }

    /// `conj f(conj ζ)`, the reflection of `f`.
    pub fn reflected(&self) -> AnalyticScalar {
        match self {
            AnalyticScalar::Polynomial(c) => {
                AnalyticScalar::Polynomial(c.iter().map(|c| c.conj()).collect())
            }
            AnalyticScalar::Exp | AnalyticScalar::Sin | AnalyticScalar::Cos => self.clone(),
            AnalyticScalar::Affine { scale, shift, body } => AnalyticScalar::Affine {
                scale: scale.conj(),
                shift: shift.conj(),
                body: Box::new(body.reflected()),
            },
            AnalyticScalar::Sum(a, b) => a.reflected().plus(b.reflected()),
            AnalyticScalar::Product(a, b) => a.reflected().times(b.reflected()),
            AnalyticScalar::Opaque(o) => {
                let cb = o.callback.clone();
                AnalyticScalar::Opaque(OpaqueScalar {
                    name: format!("reflected {}", o.name),
                    callback: Arc::new(move |z, n| cb(z.conj(), n).conj()),
                    symmetric: o.symmetric,
                    probe: o.probe.clone(),
                })
            }
        }
    }
}

fn poly_derivative(c: &[Complex], n: usize, z: Complex) -> Complex {
    if n >= c.len() {
        return Complex::new(0.0, 0.0);
    }
    let mut acc = Complex::new(0.0, 0.0);
    for k in (n..c.len()).rev() {
        let falling: f64 = ((k - n + 1)..=k).map(|j| j as f64).product();
        acc = acc * z + c[k] * falling;
    }
    acc
}

/// Anything that can be evaluated as a 2x2 matrix-valued function of one complex variable.
pub trait MatrixFunction {
    fn value(&self, z: Complex) -> Mat2;
}

/// A matrix function that also provides its complex derivatives.
pub trait AnalyticMatrixFunction: MatrixFunction {
    fn derivative(&self, n: usize, z: Complex) -> Mat2;

    /// Open set on which the function is analytic.
    fn domain(&self) -> &SymmetricDomain;
}

impl<F: Fn(Complex) -> Mat2> MatrixFunction for F {
    fn value(&self, z: Complex) -> Mat2 {
        self(z)
    }
}

/// A 2x2 matrix of analytic scalars, not necessarily a stem function.
#[derive(Clone, Debug)]
pub struct GeneralMat2 {
    pub entries: [AnalyticScalar; 4],
    pub domain: SymmetricDomain,
}

impl GeneralMat2 {
    pub fn new(entries: [AnalyticScalar; 4]) -> Self {
        Self {
            entries,
            domain: SymmetricDomain::entire(),
        }
    }

    pub fn on_domain(mut self, domain: SymmetricDomain) -> Self {
        self.domain = domain;
        self
    }

    /// `f(ζ) I`.
    pub fn scalar(f: AnalyticScalar) -> Self {
        let zero = AnalyticScalar::constant(Complex::new(0.0, 0.0));
        Self::new([f.clone(), zero.clone(), zero, f])
    }
}

impl MatrixFunction for GeneralMat2 {
    fn value(&self, z: Complex) -> Mat2 {
        self.derivative(0, z)
    }
}

impl AnalyticMatrixFunction for GeneralMat2 {
    fn derivative(&self, n: usize, z: Complex) -> Mat2 {
        let [a, b, c, d] = &self.entries;
        Mat2::new(
            a.derivative(n, z),
            b.derivative(n, z),
            c.derivative(n, z),
            d.derivative(n, z),
        )
    }

    fn domain(&self) -> &SymmetricDomain {
        &self.domain
    }
}

/// How a stem function is represented.
#[derive(Clone, Debug)]
pub enum StemKind {
    /// `f(ζ) I` with `f` symmetric.
    Scalar(AnalyticScalar),
    /// `[[f1(ζ), f2(ζ)], [-conj f2(conj ζ), conj f1(conj ζ)]]`.
    Pair(AnalyticScalar, AnalyticScalar),
    /// `Σ a_k ζ^k` with quaternion coefficients, lowest degree first.
    HPolynomial(Vec<Quaternion>),
    /// A general matrix of scalars that passed [`verify_stem`].
    General(GeneralMat2),
}

/// A matrix-valued analytic function with `F(conj ζ) = F(ζ)~` on a conjugate-symmetric domain.
#[derive(Clone, Debug)]
pub struct StemFunction {
    kind: StemKind,
    domain: SymmetricDomain,
    reflections: Option<(AnalyticScalar, AnalyticScalar)>,
}

impl StemFunction {
    fn from_kind(kind: StemKind, domain: SymmetricDomain) -> Self {
        let reflections = match &kind {
            StemKind::Pair(f1, f2) => Some((f1.reflected(), f2.reflected())),
            _ => None,
        };
        Self {
            kind,
            domain,
            reflections,
        }
    }

    /// `f(ζ) I`; fails unless `f` is symmetric.
    pub fn scalar(f: AnalyticScalar) -> Result<Self> {
        if !f.is_symmetric() {
            return Err(Error::contract("scalar stem needs f(conj ζ) = conj f(ζ)"));
        }
        Ok(Self::from_kind(
            StemKind::Scalar(f),
            SymmetricDomain::entire(),
        ))
    }

    pub fn pair(f1: AnalyticScalar, f2: AnalyticScalar) -> Self {
        Self::from_kind(StemKind::Pair(f1, f2), SymmetricDomain::entire())
    }

    pub fn h_polynomial(coeffs: Vec<Quaternion>) -> Self {
        Self::from_kind(StemKind::HPolynomial(coeffs), SymmetricDomain::entire())
    }

    /// Accepts a general matrix function after checking the stem condition on
    /// 64 conjugate sample pairs from its domain.
    pub fn general(g: GeneralMat2, tol: f64) -> Result<Self> {
        let samples = g.domain.conjugate_samples(64);
        let report = verify_stem(&g, &samples, tol)?;
        if !report.pass {
            return Err(Error::contract(format!(
                "not a stem function: defect {:e} at {}",
                report.max_defect, report.witness
            )));
        }
        let domain = g.domain.clone();
        Ok(Self::from_kind(StemKind::General(g), domain))
    }

    /// Restricts the function to a smaller domain.
    pub fn on_domain(mut self, domain: SymmetricDomain) -> Self {
        self.domain = domain;
        self
    }

    pub fn kind(&self) -> &StemKind {
        &self.kind
    }

    /// Rewrites scalar and quaternion polynomial stems in the pair form.
    pub fn to_pair(&self) -> Option<(AnalyticScalar, AnalyticScalar)> {
        match &self.kind {
            StemKind::Scalar(f) => {
                Some((f.clone(), AnalyticScalar::constant(Complex::new(0.0, 0.0))))
            }
            StemKind::Pair(f1, f2) => Some((f1.clone(), f2.clone())),
            StemKind::HPolynomial(a) => Some((
                AnalyticScalar::Polynomial(a.iter().map(|q| q.coords().z1).collect()),
                AnalyticScalar::Polynomial(a.iter().map(|q| q.coords().z2).collect()),
            )),
            StemKind::General(_) => None,
        }
    }

    /// `F f` for a symmetric scalar `f`, which is again a stem function.
    pub fn scaled_by(&self, f: &AnalyticScalar) -> Result<StemFunction> {
        if !f.is_symmetric() {
            return Err(Error::contract("module product needs a symmetric scalar"));
        }
        let out = match (&self.kind, self.to_pair()) {
            (StemKind::Scalar(g), _) => StemFunction::scalar(g.clone().times(f.clone()))?,
            (_, Some((f1, f2))) => StemFunction::pair(f1.times(f.clone()), f2.times(f.clone())),
            (StemKind::General(g), None) => {
                let entries = g.entries.clone().map(|e| e.times(f.clone()));
                StemFunction::from_kind(
                    StemKind::General(GeneralMat2 {
                        entries,
                        domain: g.domain.clone(),
                    }),
                    g.domain.clone(),
                )
            }
            _ => unreachable!("pair form exists for every non-general stem"),
        };
        Ok(out.on_domain(self.domain.clone()))
    }
}

impl MatrixFunction for StemFunction {
    fn value(&self, z: Complex) -> Mat2 {
        self.derivative(0, z)
    }
}

impl AnalyticMatrixFunction for StemFunction {
    fn derivative(&self, n: usize, z: Complex) -> Mat2 {
        match &self.kind {
            StemKind::Scalar(f) => Mat2::scalar(f.derivative(n, z)),
            StemKind::Pair(f1, f2) => {
                let (r1, r2) = self
                    .reflections
                    .as_ref()
                    .expect("pair stems cache reflections");
                Mat2::new(
                    f1.derivative(n, z),
                    f2.derivative(n, z),
                    -r2.derivative(n, z),
                    r1.derivative(n, z),
                )
            }
            StemKind::HPolynomial(a) => {
                let mut acc = Mat2::ZERO;
                for k in (n..a.len()).rev() {
                    let falling: f64 = ((k - n + 1)..=k).map(|j| j as f64).product();
                    acc = acc.scale(z) + a[k].matrix().scale_re(falling);
                }
                acc
            }
            StemKind::General(g) => g.derivative(n, z),
        }
    }

    fn domain(&self) -> &SymmetricDomain {
        &self.domain
    }
}

/// Outcome of checking `F(conj ζ) = F(ζ)~` on a sample set.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StemReport {
    pub pass: bool,
    /// Largest operator norm of `F(conj ζ) - F(ζ)~` over the samples.
    pub max_defect: f64,
    /// Sample where the largest defect occurred.
    pub witness: Complex,
}

/// Checks the stem condition at every sample with an absolute tolerance scaled by `max(1, ‖F(ζ)‖)`.
pub fn verify_stem<F: MatrixFunction + ?Sized>(
    f: &F,
    samples: &[Complex],
    tol: f64,
) -> Result<StemReport> {
    if samples.is_empty() {
        return Err(Error::invalid("stem check needs at least one sample"));
    }
    if !(tol.is_finite() && tol >= 0.0) {
        return Err(Error::invalid("tolerance must be finite and nonnegative"));
    }
    let mut report = StemReport {
        pass: true,
        max_defect: 0.0,
        witness: samples[0],
    };
    for &z in samples {
        let fz = f.value(z);
        let defect = (f.value(z.conj()) - fz.skew_conjugate()).op_norm();
        if !defect.is_finite() {
            return Err(Error::domain(format!("function is not finite at {z}")));
        }
        if defect > report.max_defect {
            report.max_defect = defect;
            report.witness = z;
        }
        if defect > tol * fz.op_norm().max(1.0) {
            report.pass = false;
        }
    }
    Ok(report)
}

/// One half of the `F = F1 + i F2` decomposition of a stem function.
#[derive(Clone, Debug)]
pub struct StemPart {
    stem: StemFunction,
    imaginary: bool,
}

impl MatrixFunction for StemPart {
    fn value(&self, z: Complex) -> Mat2 {
        let f = self.stem.value(z);
        let t = f.skew_conjugate();
        if self.imaginary {
            (f - t).scale(Complex::new(0.0, -0.5))
        } else {
            (f + t).scale_re(0.5)
        }
    }
}

/// Splits a stem into `F1 = (F + F~)/2` and `F2 = (F - F~)/(2i)`, both quaternion valued with
/// `F1(conj ζ) = F1(ζ)` and `F2(conj ζ) = -F2(ζ)`.
pub fn stem_split(f: &StemFunction) -> (StemPart, StemPart) {
    (
        StemPart {
            stem: f.clone(),
            imaginary: false,
        },
        StemPart {
            stem: f.clone(),
            imaginary: true,
        },
    )
}

fn check_spectrum_in_domain(
    domain: &SymmetricDomain,
    q: &Quaternion,
) -> Result<crate::SpectrumPair> {
    let sp = spectrum(q);
    for s in [sp.s_plus, sp.s_minus] {
        if !domain.contains(s) {
            return Err(Error::domain(format!(
                "spectral point {s} lies outside the domain"
            )));
        }
    }
    Ok(sp)
}

/// `F(q) = F(s+) E+ + F(s-) E-`, or `F(x) I` for real `q`.
pub fn eval_spectral<F: AnalyticMatrixFunction + ?Sized>(f: &F, q: &Quaternion) -> Result<Mat2> {
    eval_spectral_derivative(f, 0, q)
}

/// Spectral value of the n-th derivative, `F^(n)(s+) E+ + F^(n)(s-) E-`.
pub fn eval_spectral_derivative<F: AnalyticMatrixFunction + ?Sized>(
    f: &F,
    n: usize,
    q: &Quaternion,
) -> Result<Mat2> {
    let sp = check_spectrum_in_domain(f.domain(), q)?;
    let out = if sp.real {
        f.derivative(n, sp.s_plus)
    } else {
        sp.combine(f.derivative(n, sp.s_plus), f.derivative(n, sp.s_minus))
    };
    if !out.is_finite() {
        return Err(Error::Numeric(
            "spectral evaluation produced a non-finite value".into(),
        ));
    }
    Ok(out)
}

/// `Σ a_n q^n` with coefficients on the left.
pub fn hpoly_eval(coeffs: &[Quaternion], q: &Quaternion) -> Quaternion {
    let mut acc = Quaternion::ZERO;
    for a in coeffs.iter().rev() {
        acc = acc * *q + *a;
    }
    acc
}

/// True when `F` vanishes at both spectral points of `q` within `tol` (largest entry).
pub fn zero_set_contains<F: AnalyticMatrixFunction + ?Sized>(
    f: &F,
    q: &Quaternion,
    tol: f64,
) -> Result<bool> {
    let sp = check_spectrum_in_domain(f.domain(), q)?;
    let worst = f
        .value(sp.s_plus)
        .max_abs()
        .max(f.value(sp.s_minus).max_abs());
    Ok(worst <= tol)
}
