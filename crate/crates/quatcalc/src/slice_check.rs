//! Finite-difference checks of slice regularity and the slice decomposition `f = g + L h`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::func_model::{AnalyticScalar, StemFunction, SymmetricDomain};
use crate::quat_core::{axial_decompose, spectrum, Mat2, Quaternion};
use crate::Complex;

/// Default central-difference step.
pub const DEFAULT_FD_STEP: f64 = 1e-4;
/// Default acceptance threshold for the slice derivative.
pub const DEFAULT_SLICE_TOL: f64 = 1e-5;

fn check_unit_imaginary(s: &Quaternion) -> Result<()> {
    let sq = *s * *s + Quaternion::ONE;
    if s.real_part().abs() > 1e-12 || sq.norm() > 1e-12 {
        return Err(Error::invalid(
            "slice direction must be a unit imaginary quaternion",
        ));
    }
    Ok(())
}

/// `∂̄_s G(x + y s)` by central differences in `x` and `y`, with `s` multiplying on the right.
pub fn dbar_s<G>(g: &G, x: f64, y: f64, s: &Quaternion, h: f64) -> Result<Mat2>
where
    G: Fn(&Quaternion) -> Result<Mat2> + ?Sized,
{
    check_unit_imaginary(s)?;
    if !(h.is_finite() && h > 0.0) {
        return Err(Error::invalid("finite-difference step must be positive"));
    }
    let at = |x: f64, y: f64| -> Result<Mat2> {
        let v = g(&(Quaternion::real(x) + s.scale(y)))?;
        if !v.is_finite() {
            return Err(Error::domain(format!(
                "G is not finite at x = {x}, y = {y}"
            )));
        }
        Ok(v)
    };
    let dx = (at(x + h, y)? - at(x - h, y)?).scale_re(0.5 / h);
    let dy = (at(x, y + h)? - at(x, y - h)?).scale_re(0.5 / h);
    Ok((dx + dy * s.matrix()).scale_re(0.5))
}

/// One point `x + y s` of a slice grid.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SlicePoint {
    pub x: f64,
    pub y: f64,
    pub s: Quaternion,
}

/// Sample points for a slice regularity check together with the difference step.
#[derive(Clone, Debug, PartialEq)]
pub struct SliceSampleGrid {
    points: Vec<SlicePoint>,
    h: f64,
}

impl SliceSampleGrid {
    pub fn new(points: Vec<SlicePoint>, h: f64) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::invalid("slice grid needs at least one point"));
        }
        if !(h.is_finite() && h > 0.0) {
            return Err(Error::invalid("finite-difference step must be positive"));
        }
        for p in &points {
            check_unit_imaginary(&p.s)?;
            if !(p.x.is_finite() && p.y.is_finite()) {
                return Err(Error::invalid("slice coordinates must be finite"));
            }
        }
        Ok(Self { points, h })
    }

    /// `directions` random unit imaginaries, each with `per_direction` points `x + i y`
    /// drawn uniformly from the disk around `center` of radius `radius`.
    pub fn random(
        directions: usize,
        per_direction: usize,
        center: Complex,
        radius: f64,
        h: f64,
        seed: u64,
    ) -> Result<Self> {
        if !(radius.is_finite() && radius > 0.0 && center.is_finite()) {
            return Err(Error::invalid(
                "sampling disk must be finite with positive radius",
            ));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut points = Vec::with_capacity(directions * per_direction);
        for _ in 0..directions {
            let s = random_unit_imaginary(&mut rng);
            for _ in 0..per_direction {
                let r = radius * rng.random::<f64>().sqrt();
                let t = 2.0 * std::f64::consts::PI * rng.random::<f64>();
                let z = center + Complex::from_polar(r, t);
                points.push(SlicePoint {
                    x: z.re,
                    y: z.im,
                    s,
                });
            }
        }
        Self::new(points, h)
    }

    pub fn points(&self) -> &[SlicePoint] {
        &self.points
    }

    pub fn step(&self) -> f64 {
        self.h
    }
}

pub(crate) fn random_unit_imaginary<R: Rng>(rng: &mut R) -> Quaternion {
    loop {
        let v: [f64; 3] = [
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
        ];
        let n2 = v.iter().map(|a| a * a).sum::<f64>();
        if n2 > 1e-4 && n2 <= 1.0 {
            return Quaternion::unit_imaginary(v[0], v[1], v[2]).expect("nonzero direction");
        }
    }
}

/// Result of a slice regularity scan.
#[derive(Clone, Debug, PartialEq)]
pub struct SliceReport {
    pub pass: bool,
    /// Largest operator norm of `∂̄_s G` over the grid.
    pub max_defect: f64,
    pub worst_point: SlicePoint,
    /// Defect at every grid point, in grid order.
    pub defects: Vec<f64>,
}

/// Evaluates `∂̄_s G` on every grid point and compares the largest norm with `tol`.
pub fn slice_regularity_report<G>(g: &G, grid: &SliceSampleGrid, tol: f64) -> Result<SliceReport>
where
    G: Fn(&Quaternion) -> Result<Mat2> + ?Sized,
{
    if !(tol.is_finite() && tol >= 0.0) {
        return Err(Error::invalid("tolerance must be finite and nonnegative"));
    }
    let mut defects = Vec::with_capacity(grid.points.len());
    let mut worst = (0.0, grid.points[0]);
    for p in &grid.points {
        let d = dbar_s(g, p.x, p.y, &p.s, grid.h)?.op_norm();
        if d > worst.0 {
            worst = (d, *p);
        }
        defects.push(d);
    }
    Ok(SliceReport {
        pass: worst.0 <= tol,
        max_defect: worst.0,
        worst_point: worst.1,
        defects,
    })
}

/// Pointwise split `f = g + L h` of a value on the `J` slice, with `g = f0 I + f1 J` and
/// `h = f3 I + f2 J`.
pub fn split_slice_value(f: &Quaternion) -> (Quaternion, Quaternion) {
    let [f0, f1, f2, f3] = f.components();
    (
        Quaternion::from_components([f0, f1, 0.0, 0.0]),
        Quaternion::from_components([f3, f2, 0.0, 0.0]),
    )
}

/// Splits a function on the `J` slice into its two `C_J`-valued parts.
pub fn split_slice<'a, F>(
    f: &'a F,
) -> (
    impl Fn(f64, f64) -> Quaternion + 'a,
    impl Fn(f64, f64) -> Quaternion + 'a,
)
where
    F: Fn(f64, f64) -> Quaternion + ?Sized,
{
    (
        move |x, y| split_slice_value(&f(x, y)).0,
        move |x, y| split_slice_value(&f(x, y)).1,
    )
}

/// Whether the circularization of `U` contains `q`, tested through the spectrum of `q`.
pub fn circularization_contains(domain: &SymmetricDomain, q: &Quaternion) -> bool {
    let sp = spectrum(q);
    domain.contains(sp.s_plus) && domain.contains(sp.s_minus)
}

/// Same membership test through the axial form `q = x + y s`.
pub fn axial_contains(domain: &SymmetricDomain, q: &Quaternion) -> bool {
    domain.contains(axial_decompose(q).slice_point())
}

/// Rebuilds a stem function from a slice regular function known only on the `J` slice.
///
/// The parts `g` and `h` of the split are sampled on `2 (degree + 1)` points of the circle
/// around the real point `center` and replaced by their interpolating polynomials of the
/// given degree. The returned stem `F` satisfies `F(q) ≈ f(q)` on the circularization.
pub fn stem_from_slice<F>(f: &F, center: f64, radius: f64, degree: usize) -> Result<StemFunction>
where
    F: Fn(f64, f64) -> Quaternion + ?Sized,
{
    if !(center.is_finite() && radius.is_finite() && radius > 0.0) {
        return Err(Error::invalid(
            "sampling circle must be finite with positive radius",
        ));
    }
    let nodes = 2 * (degree + 1);
    let mut g_coef = vec![Complex::new(0.0, 0.0); degree + 1];
    let mut h_coef = g_coef.clone();
    for j in 0..nodes {
        let t = 2.0 * std::f64::consts::PI * j as f64 / nodes as f64;
        let w = Complex::from_polar(1.0, t);
        let z = Complex::new(center, 0.0) + w * radius;
        let (g, h) = split_slice_value(&f(z.re, z.im));
        let gv = g.coords().z1;
        let hv = h.coords().z1;
        if !(gv.is_finite() && hv.is_finite()) {
            return Err(Error::domain(format!(
                "slice function is not finite at {z}"
            )));
        }
        let mut wk = Complex::new(1.0, 0.0);
        for k in 0..=degree {
            g_coef[k] += gv * wk.conj();
            h_coef[k] += hv * wk.conj();
            wk *= w;
        }
    }
    for k in 0..=degree {
        let scale = 1.0 / (nodes as f64 * radius.powi(k as i32));
        g_coef[k] *= scale;
        h_coef[k] *= scale;
    }
    // F = G + L H as stems: the pair (g, i h*) with h*(ζ) = conj h(conj ζ).
    let shift = Complex::new(-center, 0.0);
    let one = Complex::new(1.0, 0.0);
    let f1 = AnalyticScalar::Polynomial(g_coef).affine(one, shift);
    let f2 = AnalyticScalar::Polynomial(
        h_coef
            .iter()
            .map(|c| Complex::new(0.0, 1.0) * c.conj())
            .collect(),
    )
    .affine(one, shift);
    let domain = SymmetricDomain::disk(Complex::new(center, 0.0), radius)?;
    Ok(StemFunction::pair(f1, f2).on_domain(domain))
}
