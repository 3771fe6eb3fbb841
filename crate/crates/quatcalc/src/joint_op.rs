//! Commuting pairs of real operators: joint spectrum and the two-variable calculus
//! through an integral over a 3-sphere in `C^2`.

use std::f64::consts::{FRAC_PI_2, PI};

use gauss_quad::GaussLegendre;
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::func_model::AnalyticScalar;
use crate::linalg::{self, CMatrix};
use crate::quat_core::CVec2;
use crate::real_op::{ComplexOperator, RealOperator, MAX_DENSE_DIM};
use crate::Complex;

/// Relative commutator tolerance accepted by [`CommutingPair::new`].
pub const COMMUTATOR_TOL: f64 = 1e-12;
/// Number of random mixing coefficients tried by [`joint_spectrum_points`].
const JOINT_RETRIES: usize = 8;

/// A monomial `c z1^p1 z2^p2`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BiTerm {
    pub coeff: Complex,
    pub p1: u32,
    pub p2: u32,
}

/// Analytic functions of two complex variables.
#[derive(Clone, Debug)]
pub enum BiScalar {
    Polynomial(Vec<BiTerm>),
    /// `f(z1) g(z2)`.
    Separable(AnalyticScalar, AnalyticScalar),
    Sum(Box<BiScalar>, Box<BiScalar>),
}

impl BiScalar {
    pub fn eval(&self, z1: Complex, z2: Complex) -> Complex {
        match self {
            BiScalar::Polynomial(ts) => ts
                .iter()
                .map(|t| t.coeff * z1.powu(t.p1) * z2.powu(t.p2))
                .sum(),
            BiScalar::Separable(f, g) => f.eval(z1) * g.eval(z2),
            BiScalar::Sum(a, b) => a.eval(z1, z2) + b.eval(z1, z2),
        }
    }

    /// True when `f(conj z) = conj f(z)`, so that `f(T)` is real for real pairs.
    pub fn is_symmetric(&self) -> bool {
        match self {
            BiScalar::Polynomial(ts) => ts.iter().all(|t| t.coeff.im == 0.0),
            BiScalar::Separable(f, g) => f.is_symmetric() && g.is_symmetric(),
            BiScalar::Sum(a, b) => a.is_symmetric() && b.is_symmetric(),
        }
    }
}

/// Two commuting real operators of the same size.
#[derive(Clone, Debug, PartialEq)]
pub struct CommutingPair {
    t1: RealOperator,
    t2: RealOperator,
}

impl CommutingPair {
    pub fn new(t1: RealOperator, t2: RealOperator) -> Result<Self> {
        if t1.dim() != t2.dim() {
            return Err(Error::invalid(
                "operators of a pair must have the same size",
            ));
        }
        if t1.dim() > MAX_DENSE_DIM {
            return Err(Error::invalid(format!(
                "dimension exceeds the dense limit {MAX_DENSE_DIM}"
            )));
        }
        let comm = t1.commutator(&t2).norm();
        let scale = (t1.norm() * t2.norm()).max(1.0);
        if comm > COMMUTATOR_TOL * scale {
            return Err(Error::invalid(format!(
                "operators do not commute: ‖[T1, T2]‖ = {comm:e}"
            )));
        }
        Ok(Self { t1, t2 })
    }

    pub fn t1(&self) -> &RealOperator {
        &self.t1
    }

    pub fn t2(&self) -> &RealOperator {
        &self.t2
    }

    pub fn dim(&self) -> usize {
        self.t1.dim()
    }

    fn norm_scale(&self) -> f64 {
        (self.t1.norm().powi(2) + self.t2.norm().powi(2)).max(1.0)
    }
}

/// `[[T1, T2], [-T2, T1]]`, the quaternionic matrix of `T1 + i T2`.
pub fn pair_q_matrix(p: &CommutingPair) -> RealOperator {
    let n = p.dim();
    let (a, b) = (p.t1.matrix(), p.t2.matrix());
    let mut m = DMatrix::zeros(2 * n, 2 * n);
    m.view_mut((0, 0), (n, n)).copy_from(a);
    m.view_mut((0, n), (n, n)).copy_from(b);
    m.view_mut((n, 0), (n, n)).copy_from(&-b);
    m.view_mut((n, n), (n, n)).copy_from(a);
    RealOperator::from_matrix(m).expect("blocks of finite operators are finite")
}

/// `L(z) = T1^2 + T2^2 - 2 Re z1 T1 - 2 Re z2 T2 + (|z1|^2 + |z2|^2) I`.
pub fn joint_l_operator(p: &CommutingPair, z: &CVec2) -> RealOperator {
    let (a, b) = (p.t1.matrix(), p.t2.matrix());
    let n = p.dim();
    let m = a * a + b * b - a * (2.0 * z.z1.re) - b * (2.0 * z.z2.re)
        + DMatrix::identity(n, n) * z.norm_sqr();
    RealOperator::from_matrix(m).expect("finite inputs give a finite operator")
}

/// Smallest singular value of `L(z)` divided by `max(1, ‖T1‖^2 + ‖T2‖^2)`.
pub fn joint_resolvent_margin(p: &CommutingPair, z: &CVec2) -> f64 {
    linalg::smallest_singular_value_real(joint_l_operator(p, z).matrix()) / p.norm_scale()
}

/// `Q(T_C) - Q(z) = [[T1 - z1, T2 - z2], [-T2 + conj z2, T1 - conj z1]]`.
pub fn joint_block_operator(p: &CommutingPair, z: &CVec2) -> ComplexOperator {
    block(p, z.z1, z.z2)
}

/// `Q(T1, -T2) - Q(z*)`, the factor that multiplies [`joint_block_operator`] to `L(z) ⊗ I`.
pub fn joint_block_cofactor(p: &CommutingPair, z: &CVec2) -> ComplexOperator {
    let n = p.dim();
    let a = linalg::to_complex(p.t1.matrix());
    let b = linalg::to_complex(p.t2.matrix());
    let id = CMatrix::identity(n, n);
    let s = z.star();
    let mut m = CMatrix::zeros(2 * n, 2 * n);
    m.view_mut((0, 0), (n, n)).copy_from(&(&a - &id * s.z1));
    m.view_mut((0, n), (n, n)).copy_from(&(-&b - &id * s.z2));
    m.view_mut((n, 0), (n, n))
        .copy_from(&(&b + &id * s.z2.conj()));
    m.view_mut((n, n), (n, n))
        .copy_from(&(&a - &id * s.z1.conj()));
    ComplexOperator::from_matrix(m).expect("finite blocks")
}

fn block(p: &CommutingPair, z1: Complex, z2: Complex) -> ComplexOperator {
    let n = p.dim();
    let a = linalg::to_complex(p.t1.matrix());
    let b = linalg::to_complex(p.t2.matrix());
    let id = CMatrix::identity(n, n);
    let mut m = CMatrix::zeros(2 * n, 2 * n);
    m.view_mut((0, 0), (n, n)).copy_from(&(&a - &id * z1));
    m.view_mut((0, n), (n, n)).copy_from(&(&b - &id * z2));
    m.view_mut((n, 0), (n, n))
        .copy_from(&(-&b + &id * z2.conj()));
    m.view_mut((n, n), (n, n))
        .copy_from(&(&a - &id * z1.conj()));
    ComplexOperator::from_matrix(m).expect("finite blocks")
}

/// Joint eigenvalues `(λ1, λ2)` of the complexified pair, found from eigenvectors of
/// `T1 + μ T2` for random `μ`.
pub fn joint_spectrum_points(p: &CommutingPair, seed: u64) -> Result<Vec<CVec2>> {
    let n = p.dim();
    let a = linalg::to_complex(p.t1.matrix());
    let b = linalg::to_complex(p.t2.matrix());
    let scale = p.norm_scale().sqrt();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    'attempt: for _ in 0..JOINT_RETRIES {
        let mu = Complex::from_polar(rng.random_range(0.5..1.5), rng.random_range(0.0..2.0 * PI));
        let m = &a + &b * mu;
        let eig = linalg::eigenvalues_complex(&m)?;
        let mut points: Vec<CVec2> = Vec::with_capacity(n);
        for nu in eig {
            let v = linalg::null_vector(&(&m - CMatrix::identity(n, n) * nu))?;
            let l1 = v.dotc(&(&a * &v));
            let l2 = v.dotc(&(&b * &v));
            let resid = (&a * &v - &v * l1).norm() + (&b * &v - &v * l2).norm();
            if !(resid <= 1e-8 * scale) {
                continue 'attempt;
            }
            let z = CVec2::new(l1, l2);
            if points
                .iter()
                .all(|w| CVec2::new(w.z1 - z.z1, w.z2 - z.z2).norm() > 1e-8 * scale)
            {
                points.push(z);
            }
        }
        return Ok(points);
    }
    Err(Error::Numeric(
        "no mixing coefficient separated the joint eigenvectors".into(),
    ))
}

/// Radius of the smallest sphere about the real point `center` that strictly contains the
/// zero sets of `L` for the given joint eigenvalues.
pub fn joint_extent(points: &[CVec2], center: (f64, f64)) -> f64 {
    points
        .iter()
        .map(|z| {
            let re = (z.z1.re - center.0).hypot(z.z2.re - center.1);
            let im = z.z1.im.hypot(z.z2.im);
            re + im
        })
        .fold(0.0, f64::max)
}

/// Tensor grid on the sphere `|z - c| = R` of `C^2` with a real center `c`.
///
/// Points are `z1 = c1 + R cos η e^{iθ1}`, `z2 = c2 + R sin η e^{iθ2}` with Gauss-Legendre
/// nodes in `η ∈ [0, π/2]` and equispaced nodes in both angles, `resolution` of each.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SphereGrid {
    pub center: (f64, f64),
    pub radius: f64,
    pub resolution: usize,
}

impl SphereGrid {
    pub fn new(center: (f64, f64), radius: f64, resolution: usize) -> Result<Self> {
        if !(center.0.is_finite() && center.1.is_finite() && radius.is_finite() && radius > 0.0) {
            return Err(Error::invalid(
                "sphere needs a finite real center and a positive radius",
            ));
        }
        if resolution < 2 {
            return Err(Error::invalid("sphere resolution must be at least 2"));
        }
        Ok(Self {
            center,
            radius,
            resolution,
        })
    }

    /// Sphere about the midpoint of the real parts of the joint spectrum, one unit wider
    /// than needed.
    pub fn enclosing(p: &CommutingPair, resolution: usize) -> Result<Self> {
        let pts = joint_spectrum_points(p, 0)?;
        let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
        for z in &pts {
            for (k, v) in [z.z1.re, z.z2.re].into_iter().enumerate() {
                lo[k] = lo[k].min(v);
                hi[k] = hi[k].max(v);
            }
        }
        let center = (0.5 * (lo[0] + hi[0]), 0.5 * (lo[1] + hi[1]));
        Self::new(center, joint_extent(&pts, center) + 1.0, resolution)
    }

    pub fn with_resolution(&self, resolution: usize) -> Result<Self> {
        Self::new(self.center, self.radius, resolution)
    }

    pub fn node_count(&self) -> usize {
        self.resolution.pow(3)
    }
}

/// Output of [`martinelli_calculus`].
#[derive(Clone, Debug, PartialEq)]
pub struct MartinelliResult {
    pub value: RealOperator,
    /// Frobenius norm of the discarded imaginary part.
    pub imag_residue: f64,
    pub nodes: usize,
}

/// Relative bound on the imaginary part accepted by [`martinelli_calculus`].
pub const MARTINELLI_IMAG_TOL: f64 = 1e-6;

/// `f(T1, T2)` for a symmetric two-variable function, returned as a real operator.
pub fn martinelli_calculus(
    f: &BiScalar,
    p: &CommutingPair,
    grid: &SphereGrid,
) -> Result<MartinelliResult> {
    if !f.is_symmetric() {
        return Err(Error::contract("real pairs need f(conj z) = conj f(z)"));
    }
    let x = martinelli_complex(std::slice::from_ref(f), p, grid)?.remove(0);
    let m = x.matrix();
    let imag_residue = m.map(|c| c.im).norm();
    let scale = m.map(|c| c.norm()).norm().max(1.0);
    if imag_residue > MARTINELLI_IMAG_TOL * scale {
        return Err(Error::Accuracy {
            message: "sphere integral left an imaginary part".into(),
            defect: imag_residue,
        });
    }
    Ok(MartinelliResult {
        value: x.real_part(),
        imag_residue,
        nodes: grid.node_count(),
    })
}

/// Complex values of the sphere integral for several functions sharing one grid.
pub fn martinelli_complex(
    fs: &[BiScalar],
    p: &CommutingPair,
    grid: &SphereGrid,
) -> Result<Vec<ComplexOperator>> {
    if fs.is_empty() {
        return Err(Error::invalid("no functions given"));
    }
    let pts = joint_spectrum_points(p, 0)?;
    let extent = joint_extent(&pts, grid.center);
    if grid.radius <= extent * (1.0 + 1e-9) {
        return Err(Error::geometry(format!(
            "sphere of radius {} does not enclose the joint spectrum (extent {extent})",
            grid.radius
        )));
    }

    let n = p.dim();
    let res = grid.resolution;
    let r = grid.radius;
    let (c1, c2) = grid.center;
    let a = p.t1.matrix().clone();
    let b = p.t2.matrix().clone();
    let squares = &a * &a + &b * &b;
    let ac = linalg::to_complex(&a);
    let bc = linalg::to_complex(&b);
    let gl = GaussLegendre::new(res.try_into().expect("resolution >= 2"));
    let eta_nodes: Vec<(f64, f64)> = gl
        .as_node_weight_pairs()
        .iter()
        .map(|&(x, w)| (FRAC_PI_2 * 0.5 * (x + 1.0), FRAC_PI_2 * 0.5 * w))
        .collect();

    let jobs: Vec<(usize, usize)> = (0..res)
        .flat_map(|i| (0..res).map(move |j| (i, j)))
        .collect();
    let partials: Vec<Result<Vec<CMatrix>>> = jobs
        .par_iter()
        .map(|&(i, j)| {
            let (eta, weight) = eta_nodes[i];
            let (cs, sn) = (eta.cos(), eta.sin());
            let e1 = Complex::from_polar(1.0, 2.0 * PI * j as f64 / res as f64);
            let z1 = Complex::new(c1, 0.0) + e1 * (r * cs);
            let mut acc = vec![CMatrix::zeros(n, n); fs.len()];
            for k in 0..res {
                let e2 = Complex::from_polar(1.0, 2.0 * PI * k as f64 / res as f64);
                let z2 = Complex::new(c2, 0.0) + e2 * (r * sn);
                let l = &squares - &a * (2.0 * z1.re) - &b * (2.0 * z2.re)
                    + DMatrix::identity(n, n) * (z1.norm_sqr() + z2.norm_sqr());
                let lu = l.lu();
                let coef1 = e1 * (-2.0 * r.powi(3) * cs * cs * sn);
                let coef2 = e2 * (-2.0 * r.powi(3) * cs * sn * sn);
                let w = (CMatrix::identity(n, n) * z1.conj() - &ac) * coef1
                    + (CMatrix::identity(n, n) * z2.conj() - &bc) * coef2;
                let kernel = solve_real_lu(&lu, &solve_real_lu(&lu, &w)?)?;
                for (f, out) in fs.iter().zip(acc.iter_mut()) {
                    *out += &kernel * (f.eval(z1, z2) * weight);
                }
            }
            Ok(acc)
        })
        .collect();

    let mut total = vec![CMatrix::zeros(n, n); fs.len()];
    for part in partials {
        for (t, v) in total.iter_mut().zip(part?) {
            *t += v;
        }
    }
    // (1/(2πi))^2 times the trapezoid weights (2π/N)^2.
    let norm = -1.0 / (res as f64 * res as f64);
    total
        .into_iter()
        .map(|t| ComplexOperator::from_matrix(t * Complex::new(norm, 0.0)))
        .collect()
}

fn solve_real_lu(
    lu: &nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>,
    rhs: &CMatrix,
) -> Result<CMatrix> {
    let singular = || Error::Numeric("L(z) is singular on the sphere".into());
    let re = lu.solve(&rhs.map(|c| c.re)).ok_or_else(singular)?;
    let im = lu.solve(&rhs.map(|c| c.im)).ok_or_else(singular)?;
    Ok(re.zip_map(&im, Complex::new))
}
