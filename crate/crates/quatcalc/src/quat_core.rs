//! Quaternions as 2x2 complex matrices, their spectra and the `H + iH` split of `M2(C)`.

use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use crate::error::{Error, Result};
use crate::Complex;

const ZERO: Complex = Complex::new(0.0, 0.0);
const ONE: Complex = Complex::new(1.0, 0.0);
const IM: Complex = Complex::new(0.0, 1.0);

/// Relative threshold below which `|z2|` (and `|Im z1|`) count as zero in spectral work.
pub const DEGENERACY_THRESHOLD: f64 = 1e-14;

/// Relative tolerance used by [`Mat2::to_quaternion`] when no tolerance is given.
pub const H_MEMBERSHIP_TOL: f64 = 1e-10;

/// A vector of `C^2`.
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct CVec2 {
    pub z1: Complex,
    pub z2: Complex,
}

impl CVec2 {
    pub const fn new(z1: Complex, z2: Complex) -> Self {
        Self { z1, z2 }
    }

    pub fn norm_sqr(&self) -> f64 {
        self.z1.norm_sqr() + self.z2.norm_sqr()
    }

    pub fn norm(&self) -> f64 {
        self.z1.norm().hypot(self.z2.norm())
    }

    /// `(conj z1, -z2)`.
    pub fn star(&self) -> Self {
        Self::new(self.z1.conj(), -self.z2)
    }

    /// `<self, w> = z1 conj(w1) + z2 conj(w2)`.
    pub fn inner(&self, w: &CVec2) -> Complex {
        self.z1 * w.z1.conj() + self.z2 * w.z2.conj()
    }

    pub fn scale(&self, c: Complex) -> Self {
        Self::new(self.z1 * c, self.z2 * c)
    }

    pub fn is_finite(&self) -> bool {
        self.z1.is_finite() && self.z2.is_finite()
    }
}

/// A 2x2 complex matrix stored row-major.
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct Mat2 {
    pub a11: Complex,
    pub a12: Complex,
    pub a21: Complex,
    pub a22: Complex,
}

impl Mat2 {
    pub const ZERO: Mat2 = Mat2::new(ZERO, ZERO, ZERO, ZERO);
    pub const IDENTITY: Mat2 = Mat2::new(ONE, ZERO, ZERO, ONE);

    pub const fn new(a11: Complex, a12: Complex, a21: Complex, a22: Complex) -> Self {
        Self { a11, a12, a21, a22 }
    }

    pub fn from_rows(rows: [[Complex; 2]; 2]) -> Self {
        Self::new(rows[0][0], rows[0][1], rows[1][0], rows[1][1])
    }

    pub fn rows(&self) -> [[Complex; 2]; 2] {
        [[self.a11, self.a12], [self.a21, self.a22]]
    }

    pub fn entries(&self) -> [Complex; 4] {
        [self.a11, self.a12, self.a21, self.a22]
    }

    pub fn scalar(c: Complex) -> Self {
        Self::new(c, ZERO, ZERO, c)
    }

    /// Rank-one matrix `u v^H`.
    pub fn outer(u: &CVec2, v: &CVec2) -> Self {
        Self::new(
            u.z1 * v.z1.conj(),
            u.z1 * v.z2.conj(),
            u.z2 * v.z1.conj(),
            u.z2 * v.z2.conj(),
        )
    }

    pub fn apply(&self, v: &CVec2) -> CVec2 {
        CVec2::new(
            self.a11 * v.z1 + self.a12 * v.z2,
            self.a21 * v.z1 + self.a22 * v.z2,
        )
    }

    pub fn scale(&self, c: Complex) -> Self {
        Self::new(self.a11 * c, self.a12 * c, self.a21 * c, self.a22 * c)
    }

    pub fn scale_re(&self, c: f64) -> Self {
        Self::new(self.a11 * c, self.a12 * c, self.a21 * c, self.a22 * c)
    }

    pub fn conj_transpose(&self) -> Self {
        Self::new(
            self.a11.conj(),
            self.a21.conj(),
            self.a12.conj(),
            self.a22.conj(),
        )
    }

    pub fn det(&self) -> Complex {
        self.a11 * self.a22 - self.a12 * self.a21
    }

    pub fn trace(&self) -> Complex {
        self.a11 + self.a22
    }

    pub fn inverse(&self) -> Option<Self> {
        let det = self.det();
        let scale = self.max_abs().max(f64::MIN_POSITIVE);
        if det.norm() <= 1e-300 || det.norm() / (scale * scale) < 1e-15 {
            return None;
        }
        let inv = det.inv();
        Some(Self::new(
            self.a22 * inv,
            -self.a12 * inv,
            -self.a21 * inv,
            self.a11 * inv,
        ))
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.entries()
            .iter()
            .map(|c| c.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.entries().iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// Largest singular value, from the larger eigenvalue of the Gram matrix `a a^H`.
    pub fn op_norm(&self) -> f64 {
        let p = self.a11.norm_sqr() + self.a12.norm_sqr();
        let r = self.a21.norm_sqr() + self.a22.norm_sqr();
        let s = self.a11 * self.a21.conj() + self.a12 * self.a22.conj();
        let disc = (p - r).hypot(2.0 * s.norm());
        ((p + r + disc) / 2.0).sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.entries().iter().all(|c| c.is_finite())
    }

    /// The skew conjugate `a~ = [[conj a22, -conj a21], [-conj a12, conj a11]]`.
    ///
    /// Its fixed points are exactly the quaternions.
    pub fn skew_conjugate(&self) -> Self {
        Self::new(
            self.a22.conj(),
            -self.a21.conj(),
            -self.a12.conj(),
            self.a11.conj(),
        )
    }

    /// Frobenius distance to the quaternion subspace, `‖(a - a~)/2‖_F`.
    pub fn dist_to_h(&self) -> f64 {
        (*self - self.skew_conjugate()).frobenius_norm() / 2.0
    }

    /// Splits `a = b + i c` with `b, c` quaternions.
    pub fn split_h_ih(&self) -> (Quaternion, Quaternion) {
        let t = self.skew_conjugate();
        let b = (*self + t).scale_re(0.5);
        let c = (*self - t).scale(Complex::new(0.0, -0.5));
        (
            Quaternion::from_coords(CVec2::new(b.a11, b.a12)),
            Quaternion::from_coords(CVec2::new(c.a11, c.a12)),
        )
    }

    /// Projects onto `H` when within `tol * max(1, ‖a‖_F)`; the default tolerance is used for `None`.
    pub fn to_quaternion(&self, tol: Option<f64>) -> Option<Quaternion> {
        let tol = tol.unwrap_or(H_MEMBERSHIP_TOL) * self.frobenius_norm().max(1.0);
        if self.dist_to_h() <= tol {
            Some(self.split_h_ih().0)
        } else {
            None
        }
    }

    /// Maximum entrywise distance, handy for comparisons in tests and reports.
    pub fn max_abs_diff(&self, other: &Mat2) -> f64 {
        (*self - *other).max_abs()
    }
}

impl Add for Mat2 {
    type Output = Mat2;
    fn add(self, o: Mat2) -> Mat2 {
        Mat2::new(
            self.a11 + o.a11,
            self.a12 + o.a12,
            self.a21 + o.a21,
            self.a22 + o.a22,
        )
    }
}

impl AddAssign for Mat2 {
    fn add_assign(&mut self, o: Mat2) {
        *self = *self + o;
    }
}

impl Sub for Mat2 {
    type Output = Mat2;
    fn sub(self, o: Mat2) -> Mat2 {
        Mat2::new(
            self.a11 - o.a11,
            self.a12 - o.a12,
            self.a21 - o.a21,
            self.a22 - o.a22,
        )
    }
}

impl Neg for Mat2 {
    type Output = Mat2;
    fn neg(self) -> Mat2 {
        self.scale_re(-1.0)
    }
}

impl Mul for Mat2 {
    type Output = Mat2;
    fn mul(self, o: Mat2) -> Mat2 {
        Mat2::new(
            self.a11 * o.a11 + self.a12 * o.a21,
            self.a11 * o.a12 + self.a12 * o.a22,
            self.a21 * o.a11 + self.a22 * o.a21,
            self.a21 * o.a12 + self.a22 * o.a22,
        )
    }
}

impl Mul<Complex> for Mat2 {
    type Output = Mat2;
    fn mul(self, c: Complex) -> Mat2 {
        self.scale(c)
    }
}

impl From<Quaternion> for Mat2 {
    fn from(q: Quaternion) -> Mat2 {
        q.matrix()
    }
}

/// A quaternion `Q(z) = [[z1, z2], [-conj z2, conj z1]]`, identified with its coordinates `z`.
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct Quaternion {
    coords: CVec2,
}

impl Quaternion {
    pub const ZERO: Quaternion = Quaternion::from_coords(CVec2::new(ZERO, ZERO));
    /// The unit `I = Q(1, 0)`.
    pub const ONE: Quaternion = Quaternion::from_coords(CVec2::new(ONE, ZERO));
    /// `J = Q(i, 0) = diag(i, -i)`.
    pub const J: Quaternion = Quaternion::from_coords(CVec2::new(IM, ZERO));
    /// `K = Q(0, 1)`.
    pub const K: Quaternion = Quaternion::from_coords(CVec2::new(ZERO, ONE));
    /// `L = Q(0, i)`.
    pub const L: Quaternion = Quaternion::from_coords(CVec2::new(ZERO, IM));

    pub const fn from_coords(coords: CVec2) -> Self {
        Self { coords }
    }

    /// `x0 I + x1 J + x2 K + x3 L`, i.e. coordinates `(x0 + i x1, x2 + i x3)`.
    pub fn new(x0: f64, x1: f64, x2: f64, x3: f64) -> Result<Self> {
        let q = Self::from_components([x0, x1, x2, x3]);
        if q.coords.is_finite() {
            Ok(q)
        } else {
            Err(Error::invalid("quaternion components must be finite"))
        }
    }

    pub(crate) fn from_components(x: [f64; 4]) -> Self {
        Self::from_coords(CVec2::new(
            Complex::new(x[0], x[1]),
            Complex::new(x[2], x[3]),
        ))
    }

    pub fn real(x: f64) -> Self {
        Self::from_components([x, 0.0, 0.0, 0.0])
    }

    pub fn coords(&self) -> CVec2 {
        self.coords
    }

    /// Real components `[x0, x1, x2, x3]` in the basis `I, J, K, L`.
    pub fn components(&self) -> [f64; 4] {
        [
            self.coords.z1.re,
            self.coords.z1.im,
            self.coords.z2.re,
            self.coords.z2.im,
        ]
    }

    pub fn matrix(&self) -> Mat2 {
        let CVec2 { z1, z2 } = self.coords;
        Mat2::new(z1, z2, -z2.conj(), z1.conj())
    }

    /// `q* = Q(conj z1, -z2)`.
    pub fn star(&self) -> Self {
        Self::from_coords(self.coords.star())
    }

    /// Operator norm, equal to the Euclidean norm of the coordinates.
    pub fn norm(&self) -> f64 {
        self.coords.norm()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.coords.norm_sqr()
    }

    pub fn real_part(&self) -> f64 {
        self.coords.z1.re
    }

    /// `q^{-1} = ‖q‖^{-2} q*`.
    pub fn inverse(&self) -> Result<Self> {
        let n2 = self.norm_sqr();
        if n2 == 0.0 || !n2.is_finite() {
            return Err(Error::SingularElement(
                "the zero quaternion has no inverse".into(),
            ));
        }
        Ok(self.star().scale(1.0 / n2))
    }

    pub fn scale(&self, c: f64) -> Self {
        Self::from_coords(CVec2::new(self.coords.z1 * c, self.coords.z2 * c))
    }

    /// Builds a unit imaginary quaternion `(a1 J + a2 K + a3 L)/‖a‖`.
    pub fn unit_imaginary(a1: f64, a2: f64, a3: f64) -> Result<Self> {
        let n = (a1 * a1 + a2 * a2 + a3 * a3).sqrt();
        if !(n.is_finite() && n > 0.0) {
            return Err(Error::invalid(
                "unit imaginary direction must be finite and nonzero",
            ));
        }
        Ok(Self::from_components([0.0, a1 / n, a2 / n, a3 / n]))
    }

    /// True when `|z2|` and `|Im z1|` are below the degeneracy threshold.
    pub fn is_real(&self) -> bool {
        let thr = degeneracy_threshold(&self.coords);
        self.coords.z2.norm() <= thr && self.coords.z1.im.abs() <= thr
    }

    pub fn distance(&self, other: &Quaternion) -> f64 {
        (*self - *other).norm()
    }
}

impl Add for Quaternion {
    type Output = Quaternion;
    fn add(self, o: Quaternion) -> Quaternion {
        Quaternion::from_coords(CVec2::new(
            self.coords.z1 + o.coords.z1,
            self.coords.z2 + o.coords.z2,
        ))
    }
}

impl Sub for Quaternion {
    type Output = Quaternion;
    fn sub(self, o: Quaternion) -> Quaternion {
        Quaternion::from_coords(CVec2::new(
            self.coords.z1 - o.coords.z1,
            self.coords.z2 - o.coords.z2,
        ))
    }
}

impl Neg for Quaternion {
    type Output = Quaternion;
    fn neg(self) -> Quaternion {
        self.scale(-1.0)
    }
}

impl Mul for Quaternion {
    type Output = Quaternion;
    fn mul(self, o: Quaternion) -> Quaternion {
        let (z, w) = (self.coords, o.coords);
        Quaternion::from_coords(CVec2::new(
            z.z1 * w.z1 - z.z2 * w.z2.conj(),
            z.z1 * w.z2 + z.z2 * w.z1.conj(),
        ))
    }
}

impl Mul<f64> for Quaternion {
    type Output = Quaternion;
    fn mul(self, c: f64) -> Quaternion {
        self.scale(c)
    }
}

impl fmt::Display for Quaternion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let [a, b, c, d] = self.components();
        write!(f, "{a} + {b}J + {c}K + {d}L")
    }
}

fn degeneracy_threshold(z: &CVec2) -> f64 {
    DEGENERACY_THRESHOLD * z.norm().max(1.0)
}

/// Spectrum `{s+, s-}` of a quaternion with unit eigenvectors and the derived projections.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpectrumPair {
    /// Eigenvalue with nonnegative imaginary part.
    pub s_plus: Complex,
    pub s_minus: Complex,
    pub nu_plus: CVec2,
    pub nu_minus: CVec2,
    /// True when the quaternion is real, so that both eigenvalues coincide.
    pub real: bool,
}

impl SpectrumPair {
    /// `E± = ν± ν±^H`, so that `E± w = <w, ν±> ν±`.
    pub fn projections(&self) -> (Mat2, Mat2) {
        (
            Mat2::outer(&self.nu_plus, &self.nu_plus),
            Mat2::outer(&self.nu_minus, &self.nu_minus),
        )
    }

    /// `a E+ + b E-`.
    pub fn combine(&self, a: Mat2, b: Mat2) -> Mat2 {
        let (ep, em) = self.projections();
        a * ep + b * em
    }
}

/// Eigenvalues `s± = Re z1 ± i sqrt((Im z1)^2 + |z2|^2)` with canonical unit eigenvectors.
pub fn spectrum(q: &Quaternion) -> SpectrumPair {
    let CVec2 { z1, z2 } = q.coords();
    let thr = degeneracy_threshold(&q.coords());
    let x = z1.re;
    let b = z1.im;
    let r2 = z2.norm();
    let y = b.hypot(r2);

    if r2 > thr {
        // s+ - z1 = i (y - b) and s- - z1 = -i (y + b); rewrite the cancelling one.
        let up = if b > 0.0 { r2 * r2 / (y + b) } else { y - b };
        let dn = if b < 0.0 { r2 * r2 / (y - b) } else { y + b };
        let nu = |d: Complex| {
            let n = r2.hypot(d.norm());
            CVec2::new(z2 / n, d / n)
        };
        return SpectrumPair {
            s_plus: Complex::new(x, y),
            s_minus: Complex::new(x, -y),
            nu_plus: nu(Complex::new(0.0, up)),
            nu_minus: nu(Complex::new(0.0, -dn)),
            real: false,
        };
    }

    let e1 = CVec2::new(ONE, ZERO);
    let e2 = CVec2::new(ZERO, ONE);
    if b.abs() > thr {
        let (nu_plus, nu_minus) = if b > 0.0 { (e1, e2) } else { (e2, e1) };
        SpectrumPair {
            s_plus: Complex::new(x, y),
            s_minus: Complex::new(x, -y),
            nu_plus,
            nu_minus,
            real: false,
        }
    } else {
        SpectrumPair {
            s_plus: Complex::new(x, 0.0),
            s_minus: Complex::new(x, 0.0),
            nu_plus: e1,
            nu_minus: e2,
            real: true,
        }
    }
}

/// Quaternions with spectrum `{ζ, conj ζ}` parametrized by the off-diagonal coordinate `u`.
pub fn quaternions_with_spectrum(zeta: Complex, u: Complex) -> Result<Quaternion> {
    if !(zeta.is_finite() && u.is_finite()) {
        return Err(Error::invalid("spectral parameters must be finite"));
    }
    let im = zeta.im.abs();
    if u.norm() > im * (1.0 + 1e-15) {
        return Err(Error::domain(format!(
            "|u| = {} exceeds |Im ζ| = {}",
            u.norm(),
            im
        )));
    }
    let y = (im * im - u.norm_sqr()).max(0.0).sqrt();
    Ok(Quaternion::from_coords(CVec2::new(
        Complex::new(zeta.re, y),
        u,
    )))
}

/// `q = x I + y s` with `y >= 0` and `s` a unit imaginary quaternion.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AxialForm {
    pub x: f64,
    pub y: f64,
    pub s: Quaternion,
}

impl AxialForm {
    pub fn reconstruct(&self) -> Quaternion {
        Quaternion::real(self.x) + self.s.scale(self.y)
    }

    /// The point `x + i y` of the closed upper half-plane.
    pub fn slice_point(&self) -> Complex {
        Complex::new(self.x, self.y)
    }
}

/// Axial decomposition; real quaternions get `y = 0` and `s = J`.
pub fn axial_decompose(q: &Quaternion) -> AxialForm {
    let CVec2 { z1, z2 } = q.coords();
    let thr = degeneracy_threshold(&q.coords());
    let y = z1.im.hypot(z2.norm());
    if y <= thr {
        return AxialForm {
            x: z1.re,
            y: 0.0,
            s: Quaternion::J,
        };
    }
    let s = Quaternion::from_coords(CVec2::new(Complex::new(0.0, z1.im / y), z2 / y));
    AxialForm { x: z1.re, y, s }
}
