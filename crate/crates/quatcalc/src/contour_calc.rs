//! Cauchy integrals over unions of circles, with trapezoid quadrature and node doubling.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::func_model::{eval_spectral_derivative, AnalyticMatrixFunction, SymmetricDomain};
use crate::quat_core::{spectrum, Mat2, Quaternion, SpectrumPair};
use crate::Complex;

/// A positively oriented circle.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Circle {
    pub center: Complex,
    pub radius: f64,
}

impl Circle {
    pub fn new(center: Complex, radius: f64) -> Result<Self> {
        if !(center.is_finite() && radius.is_finite() && radius > 0.0) {
            return Err(Error::invalid(
                "circle needs a finite center and a positive radius",
            ));
        }
        Ok(Self { center, radius })
    }

    pub fn point(&self, theta: f64) -> Complex {
        self.center + Complex::from_polar(self.radius, theta)
    }

    /// Signed distance from `z` to the circle, positive inside.
    fn inner_gap(&self, z: Complex) -> f64 {
        self.radius - (z - self.center).norm()
    }
}

/// Finite union of circles with pairwise disjoint closed disks.
#[derive(Clone, Debug, PartialEq)]
pub struct Contour {
    circles: Vec<Circle>,
}

impl Contour {
    pub fn new(circles: Vec<Circle>) -> Result<Self> {
        if circles.is_empty() {
            return Err(Error::invalid("a contour needs at least one circle"));
        }
        for (i, a) in circles.iter().enumerate() {
            for b in &circles[i + 1..] {
                if (a.center - b.center).norm() <= a.radius + b.radius {
                    return Err(Error::geometry(
                        "contour circles must have disjoint closed disks",
                    ));
                }
            }
        }
        Ok(Self { circles })
    }

    pub fn circles(&self) -> &[Circle] {
        &self.circles
    }

    /// True when the contour is its own mirror image under conjugation.
    pub fn is_conjugate_symmetric(&self) -> bool {
        self.circles.iter().all(|c| {
            self.circles.iter().any(|d| {
                (d.center - c.center.conj()).norm() <= 1e-12 * c.center.norm().max(1.0)
                    && (d.radius - c.radius).abs() <= 1e-12 * c.radius.max(1.0)
            })
        })
    }

    /// Distance from `z` to the contour if `z` lies strictly inside, otherwise `None`.
    pub fn interior_clearance(&self, z: Complex) -> Option<f64> {
        let inside = self
            .circles
            .iter()
            .map(|c| c.inner_gap(z))
            .fold(f64::NEG_INFINITY, f64::max);
        (inside > 0.0).then_some(inside)
    }

    /// Points `ζ_k` used by the trapezoid rule with `n` nodes per circle.
    pub fn nodes(&self, n: usize) -> Vec<Complex> {
        self.circles
            .iter()
            .flat_map(|c| (0..n).map(move |k| c.point(2.0 * PI * k as f64 / n as f64)))
            .collect()
    }

    fn inside_domain(&self, domain: &SymmetricDomain) -> bool {
        self.circles
            .iter()
            .all(|c| domain.contains_disk(c.center, c.radius))
    }
}

/// Trapezoid settings: start with `nodes_per_circle` and double until successive
/// results agree within `rel_tol` or `max_nodes` is reached.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuadratureConfig {
    pub nodes_per_circle: usize,
    pub max_nodes: usize,
    pub rel_tol: f64,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        Self {
            nodes_per_circle: 1024,
            max_nodes: 1 << 18,
            rel_tol: 1e-10,
        }
    }
}

impl QuadratureConfig {
    pub fn validate(&self) -> Result<()> {
        if self.nodes_per_circle < 4 || self.max_nodes < self.nodes_per_circle {
            return Err(Error::invalid("need 4 <= nodes_per_circle <= max_nodes"));
        }
        if !(self.rel_tol.is_finite() && self.rel_tol > 0.0) {
            return Err(Error::invalid("rel_tol must be positive"));
        }
        Ok(())
    }
}

/// Quadrature value with diagnostics.
#[derive(Clone, Debug, PartialEq)]
pub struct QuadratureResult<T> {
    pub value: T,
    /// Nodes per circle used for the returned value.
    pub nodes_per_circle: usize,
    /// Largest entry of the difference between the last two refinements.
    pub error_estimate: f64,
    /// False when `max_nodes` was reached before the tolerance was met.
    pub converged: bool,
}

/// Trapezoid rule for `(1/2πi) ∮ g(ζ) dζ` with flattened vector values.
///
/// `integrand(ζ, w, out)` must add `g(ζ) w` into `out`, where `w = r e^{iθ}`.
pub(crate) fn trapezoid<G>(
    contour: &Contour,
    cfg: &QuadratureConfig,
    dim: usize,
    integrand: G,
) -> Result<QuadratureResult<Vec<Complex>>>
where
    G: Fn(Complex, Complex, &mut [Complex]) -> Result<()>,
{
    cfg.validate()?;
    let circles = contour.circles();
    let mut sums: Vec<Vec<Complex>> = vec![vec![Complex::new(0.0, 0.0); dim]; circles.len()];
    let mut comps = sums.clone();
    let mut mass = 0.0;
    let mut term = vec![Complex::new(0.0, 0.0); dim];

    let mut accumulate = |n: usize, odd_only: bool, sums: &mut [Vec<Complex>], mass: &mut f64| {
        for (ci, c) in circles.iter().enumerate() {
            let step = if odd_only { 2 } else { 1 };
            let start = usize::from(odd_only);
            for k in (start..n).step_by(step) {
                let theta = 2.0 * PI * k as f64 / n as f64;
                let w = Complex::from_polar(c.radius, theta);
                term.iter_mut().for_each(|t| *t = Complex::new(0.0, 0.0));
                integrand(c.center + w, w, &mut term)?;
                for ((s, e), t) in sums[ci].iter_mut().zip(comps[ci].iter_mut()).zip(&term) {
                    if !t.is_finite() {
                        return Err(Error::Numeric("non-finite integrand on the contour".into()));
                    }
                    *mass += t.norm();
                    let y = *t - *e;
                    let next = *s + y;
                    *e = (next - *s) - y;
                    *s = next;
                }
            }
        }
        Ok::<(), Error>(())
    };

    let total = |sums: &[Vec<Complex>], n: usize| -> Vec<Complex> {
        let mut out = vec![Complex::new(0.0, 0.0); dim];
        for s in sums {
            for (o, v) in out.iter_mut().zip(s) {
                *o += *v;
            }
        }
        out.iter_mut().for_each(|o| *o /= n as f64);
        out
    };

    let mut n = cfg.nodes_per_circle;
    accumulate(n, false, &mut sums, &mut mass)?;
    let mut current = total(&sums, n);
    let mut last_diff = f64::INFINITY;
    loop {
        if 2 * n > cfg.max_nodes {
            return Ok(QuadratureResult {
                value: current,
                nodes_per_circle: n,
                error_estimate: last_diff,
                converged: false,
            });
        }
        let next_n = 2 * n;
        accumulate(next_n, true, &mut sums, &mut mass)?;
        let next = total(&sums, next_n);
        let diff = next
            .iter()
            .zip(&current)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        let size = next.iter().map(|a| a.norm()).fold(0.0, f64::max);
        let floor = 64.0 * f64::EPSILON * mass / next_n as f64;
        n = next_n;
        current = next;
        last_diff = diff;
        if diff <= cfg.rel_tol * size || diff <= floor {
            return Ok(QuadratureResult {
                value: current,
                nodes_per_circle: n,
                error_estimate: diff,
                converged: true,
            });
        }
    }
}

/// Builds a conjugate-symmetric contour around the given spectral points.
///
/// Every point gets a circle of radius `margin`. Circles whose closures meet are replaced
/// by a single real-centered circle covering their points with the same margin.
pub fn build_contour(
    spectra: &[Complex],
    domain: &SymmetricDomain,
    margin: f64,
) -> Result<Contour> {
    if !(margin.is_finite() && margin > 0.0) {
        return Err(Error::invalid("margin must be positive"));
    }
    if spectra.is_empty() {
        return Err(Error::invalid("no spectral points given"));
    }
    let scale = spectra.iter().map(|z| z.norm()).fold(1.0, f64::max);
    let mut points: Vec<Complex> = Vec::new();
    for &z in spectra {
        if !z.is_finite() {
            return Err(Error::invalid("spectral points must be finite"));
        }
        if domain.clearance(z) <= margin {
            return Err(Error::geometry(format!(
                "spectral point {z} is within margin {margin} of the domain boundary"
            )));
        }
        for w in [z, z.conj()] {
            if points.iter().all(|p| (p - w).norm() > 1e-12 * scale) {
                points.push(w);
            }
        }
    }

    let mut groups: Vec<(Vec<Complex>, Circle)> = points
        .into_iter()
        .map(|p| {
            (
                vec![p],
                Circle {
                    center: p,
                    radius: margin,
                },
            )
        })
        .collect();
    loop {
        let overlap = (0..groups.len()).find_map(|i| {
            (i + 1..groups.len()).find_map(|j| {
                let (a, b) = (&groups[i].1, &groups[j].1);
                ((a.center - b.center).norm() <= a.radius + b.radius).then_some((i, j))
            })
        });
        let Some((i, j)) = overlap else { break };
        let (pts_j, _) = groups.remove(j);
        let pts = &mut groups[i].0;
        pts.extend(pts_j);
        groups[i].1 = real_centered_cover(pts, margin);
    }

    let contour = Contour {
        circles: groups.into_iter().map(|(_, c)| c).collect(),
    };
    if !contour.inside_domain(domain) {
        return Err(Error::geometry("no admissible contour inside the domain"));
    }
    Ok(contour)
}

fn real_centered_cover(points: &[Complex], margin: f64) -> Circle {
    let lo = points.iter().map(|p| p.re).fold(f64::INFINITY, f64::min);
    let hi = points
        .iter()
        .map(|p| p.re)
        .fold(f64::NEG_INFINITY, f64::max);
    let center = Complex::new(0.5 * (lo + hi), 0.0);
    let reach = points
        .iter()
        .map(|p| (p - center).norm())
        .fold(0.0, f64::max);
    Circle {
        center,
        radius: reach + margin,
    }
}

/// Contour around `σ(q)` at distance `margin`.
pub fn contour_for(q: &Quaternion, domain: &SymmetricDomain, margin: f64) -> Result<Contour> {
    let sp = spectrum(q);
    build_contour(&[sp.s_plus, sp.s_minus], domain, margin)
}

fn check_geometry<F: AnalyticMatrixFunction + ?Sized>(
    f: &F,
    q: &Quaternion,
    gamma: &Contour,
) -> Result<SpectrumPair> {
    let sp = spectrum(q);
    let tiny = 1e-12 * q.norm().max(1.0);
    for s in [sp.s_plus, sp.s_minus] {
        match gamma.interior_clearance(s) {
            Some(gap) if gap > tiny => {}
            _ => {
                return Err(Error::geometry(format!(
                    "spectral point {s} is not strictly inside the contour"
                )))
            }
        }
    }
    if !gamma.inside_domain(f.domain()) {
        return Err(Error::geometry("contour leaves the domain of the function"));
    }
    Ok(sp)
}

fn resolvent(sp: &SpectrumPair, z: Complex) -> Mat2 {
    if sp.real {
        Mat2::scalar((z - sp.s_plus).inv())
    } else {
        let (ep, em) = sp.projections();
        ep.scale((z - sp.s_plus).inv()) + em.scale((z - sp.s_minus).inv())
    }
}

fn to_mat(v: &[Complex]) -> Mat2 {
    Mat2::new(v[0], v[1], v[2], v[3])
}

/// `(1/2πi) ∮_Γ F(ζ) (ζ I - q)^{-1} dζ`.
pub fn cauchy_transform<F: AnalyticMatrixFunction + ?Sized>(
    f: &F,
    q: &Quaternion,
    gamma: &Contour,
    cfg: &QuadratureConfig,
) -> Result<QuadratureResult<Mat2>> {
    cauchy_derivative(f, 0, q, gamma, cfg)
}

/// `(1/2πi) ∮_Γ F^(n)(ζ) (ζ I - q)^{-1} dζ`, using the analytic derivative of `F`.
pub fn cauchy_derivative<F: AnalyticMatrixFunction + ?Sized>(
    f: &F,
    n: usize,
    q: &Quaternion,
    gamma: &Contour,
    cfg: &QuadratureConfig,
) -> Result<QuadratureResult<Mat2>> {
    let sp = check_geometry(f, q, gamma)?;
    let r = trapezoid(gamma, cfg, 4, |z, w, out| {
        let v = (f.derivative(n, z) * resolvent(&sp, z)).scale(w);
        for (o, e) in out.iter_mut().zip(v.entries()) {
            *o += e;
        }
        Ok(())
    })?;
    Ok(QuadratureResult {
        value: to_mat(&r.value),
        nodes_per_circle: r.nodes_per_circle,
        error_estimate: r.error_estimate,
        converged: r.converged,
    })
}

/// Sums `Σ a_n q^n` for a series with radius of convergence `radius`.
///
/// Stops when the coefficients run out or when three consecutive terms fall below
/// `1e-16` of the partial sum.
pub fn series_eval<I>(coeffs: I, q: &Quaternion, radius: f64) -> Result<Quaternion>
where
    I: IntoIterator<Item = Quaternion>,
{
    if !(radius > 0.0) {
        return Err(Error::invalid("radius of convergence must be positive"));
    }
    if q.norm() >= radius {
        return Err(Error::domain(format!(
            "‖q‖ = {} is outside the disk of convergence of radius {radius}",
            q.norm()
        )));
    }
    let mut sum = Quaternion::ZERO;
    let mut power = Quaternion::ONE;
    let mut small_run = 0;
    for a in coeffs {
        let term = a * power;
        sum = sum + term;
        if term.norm() < 1e-16 * sum.norm() {
            small_run += 1;
            if small_run == 3 {
                break;
            }
        } else {
            small_run = 0;
        }
        power = power * *q;
    }
    Ok(sum)
}

/// Which half-plane configuration a derivative bound refers to.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BoundCase {
    /// Disk in the open upper half-plane together with its mirror image.
    BothHalfPlanes,
    /// A single disk centered on the real axis.
    RealCentered,
}

/// Radii of the concentric configuration: `d` is the gap between the outer circle and the
/// integration circle of radius `r0`, `d0` the gap between the integration circle and the
/// disk holding the spectrum.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundGeometry {
    pub r0: f64,
    pub d: f64,
    pub d0: f64,
}

/// Upper bound for `‖F^(n)(q)‖` in terms of `sup ‖F‖` on the outer circle.
pub fn derivative_bound(
    n: usize,
    geom: &BoundGeometry,
    sup_f: f64,
    case: BoundCase,
) -> Result<f64> {
    let BoundGeometry { r0, d, d0 } = *geom;
    for v in [r0, d, d0] {
        if !(v.is_finite() && v > 0.0) {
            return Err(Error::invalid("geometry radii must be positive"));
        }
    }
    if !(sup_f.is_finite() && sup_f >= 0.0) {
        return Err(Error::invalid("sup of F must be finite and nonnegative"));
    }
    let factorial: f64 = (1..=n).map(|k| k as f64).product();
    let factor = match case {
        BoundCase::BothHalfPlanes => 2.0,
        BoundCase::RealCentered => 1.0,
    };
    Ok(factor * factorial * r0 * sup_f / (d.powi(n as i32 + 1) * d0))
}

/// `Σ_{n < terms} F^(n)(q)/n! (λ I - q)^n`, the Taylor expansion of `F` about `q`.
pub fn taylor_recompose<F: AnalyticMatrixFunction + ?Sized>(
    f: &F,
    q: &Quaternion,
    lambda: Complex,
    terms: usize,
) -> Result<Mat2> {
    if terms == 0 {
        return Err(Error::invalid("need at least one term"));
    }
    let step = Mat2::scalar(lambda) - q.matrix();
    let mut power = Mat2::IDENTITY;
    let mut factorial = 1.0;
    let mut sum = Mat2::ZERO;
    let mut rising = 0;
    let mut small_run = 0;
    let mut last = f64::INFINITY;
    for n in 0..terms {
        if n > 0 {
            factorial *= n as f64;
            power = power * step;
        }
        let term = eval_spectral_derivative(f, n, q)?.scale_re(1.0 / factorial) * power;
        if !term.is_finite() {
            return Err(Error::Numeric(format!("Taylor term {n} overflowed")));
        }
        let size = term.op_norm();
        sum += term;
        let sum_size = sum.op_norm();
        if size < 1e-17 * sum_size {
            small_run += 1;
            if small_run == 3 {
                break;
            }
        } else {
            small_run = 0;
        }
        rising = if size > last && size > 1e-12 * sum_size.max(1.0) {
            rising + 1
        } else {
            0
        };
        if rising >= 6 {
            return Err(Error::domain(
                "Taylor terms keep growing: λ is outside the disk of convergence",
            ));
        }
        last = size;
    }
    Ok(sum)
}
