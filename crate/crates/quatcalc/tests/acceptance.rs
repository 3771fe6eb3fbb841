//! Acceptance suite: thirteen numbered criteria, one PASS/FAIL line each.
//!
//! Runs as a plain binary (`harness = false`) so the report is always printed.

use std::f64::consts::PI;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use quatcalc::contour_calc::{
    cauchy_derivative, cauchy_transform, contour_for, derivative_bound, taylor_recompose,
    BoundCase, BoundGeometry, Circle,
};
use quatcalc::func_model::{eval_spectral, hpoly_eval, verify_stem};
use quatcalc::joint_op::{
    joint_block_operator, joint_resolvent_margin, martinelli_complex, BiTerm,
};
use quatcalc::quat_core::{quaternions_with_spectrum, spectrum};
use quatcalc::real_op::{
    block_q_operator, complex_spectrum, complexify, discrete_mult_op, flat, op_calculus,
    q_resolvent_margin, smallest_singular_value,
};
use quatcalc::slice_check::{slice_regularity_report, SliceSampleGrid};
use quatcalc::{
    AnalyticScalar, BiScalar, CVec2, CommutingPair, Complex, ComplexOperator, Contour, GeneralMat2,
    Mat2, OperatorStem, QuadratureConfig, Quaternion, RealOperator, SphereGrid, StemFunction,
    SymmetricDomain,
};

struct Check {
    pass: bool,
    detail: String,
}

impl Check {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Self {
            pass,
            detail: detail.into(),
        }
    }
}

fn c(re: f64, im: f64) -> Complex {
    Complex::new(re, im)
}

fn rand_c(rng: &mut ChaCha8Rng, r: f64) -> Complex {
    c(rng.random_range(-r..r), rng.random_range(-r..r))
}

fn rand_q(rng: &mut ChaCha8Rng, r: f64) -> Quaternion {
    let x: [f64; 4] = std::array::from_fn(|_| rng.random_range(-r..r));
    Quaternion::new(x[0], x[1], x[2], x[3]).unwrap()
}

fn rand_mat2(rng: &mut ChaCha8Rng, r: f64) -> Mat2 {
    Mat2::new(
        rand_c(rng, r),
        rand_c(rng, r),
        rand_c(rng, r),
        rand_c(rng, r),
    )
}

fn rand_op(rng: &mut ChaCha8Rng, n: usize, r: f64) -> RealOperator {
    let data: Vec<f64> = (0..n * n).map(|_| rng.random_range(-r..r)).collect();
    RealOperator::new(n, &data).unwrap()
}

fn complex_poly(rng: &mut ChaCha8Rng, degree: usize) -> AnalyticScalar {
    AnalyticScalar::Polynomial((0..=degree).map(|_| rand_c(rng, 1.0)).collect())
}

/// Quaternion multiplication table read off the 2x2 matrices, compared with the norm law.
fn algebra() -> Check {
    let t = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst = 0.0f64;
    let mut involution_exact = true;
    for _ in 0..10_000 {
        let q = rand_q(&mut rng, 5.0);
        let n2 = q.norm_sqr();
        let m = q.matrix();
        let lhs = m * q.star().matrix();
        let rhs = q.star().matrix() * m;
        let target = Mat2::scalar(c(n2, 0.0));
        worst = worst.max(lhs.max_abs_diff(&target) / n2);
        worst = worst.max(rhs.max_abs_diff(&target) / n2);
        worst = worst.max((m.op_norm() - q.norm()).abs() / q.norm());
        worst = worst.max(m.skew_conjugate().max_abs_diff(&m) / q.norm());

        let a = rand_mat2(&mut rng, 3.0);
        let b = rand_mat2(&mut rng, 3.0);
        involution_exact &= a.skew_conjugate().skew_conjugate() == a;
        let prod = (a * b).skew_conjugate();
        let split = a.skew_conjugate() * b.skew_conjugate();
        worst = worst.max(prod.max_abs_diff(&split) / (a.op_norm() * b.op_norm()));
        worst = worst.max((a.skew_conjugate().op_norm() - a.op_norm()).abs() / a.op_norm());
    }
    let secs = t.elapsed().as_secs_f64();
    Check::new(
        worst <= 1e-12 && involution_exact && secs < 5.0,
        format!(
            "max relative defect {worst:.2e}, involution exact: {involution_exact}, {secs:.2}s"
        ),
    )
}

fn spectrum_sample(rng: &mut ChaCha8Rng, k: usize) -> Quaternion {
    let z1 = rand_c(rng, 4.0);
    match k % 4 {
        0 | 1 => rand_q(rng, 4.0),
        2 => Quaternion::from_coords(CVec2::new(z1, c(0.0, 0.0))),
        _ => Quaternion::real(z1.re),
    }
}

fn spectra() -> Check {
    let t = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let (mut poly, mut ident, mut roundtrip) = (0.0f64, 0.0f64, 0.0f64);
    for k in 0..10_000 {
        let q = spectrum_sample(&mut rng, k);
        let z = q.coords();
        let sp = spectrum(&q);
        let scale = z.norm_sqr().max(1.0);
        for s in [sp.s_plus, sp.s_minus] {
            let r = s * s - s * (2.0 * z.z1.re) + z.norm_sqr();
            poly = poly.max(r.norm() / scale);
        }
        let (p, m) = (sp.nu_plus, sp.nu_minus);
        ident = ident.max((m.z1.norm_sqr() - p.z2.norm_sqr()).abs());
        ident = ident.max((m.z2.norm_sqr() - p.z1.norm_sqr()).abs());
        ident = ident.max((m.z1 * m.z2.conj() + p.z1 * p.z2.conj()).norm());

        let zeta = c(rng.random_range(-4.0..4.0), rng.random_range(-4.0..4.0));
        let bound = zeta.im.abs();
        let u = Complex::from_polar(bound * rng.random::<f64>(), rng.random_range(0.0..2.0 * PI));
        let w = quaternions_with_spectrum(zeta, u).unwrap();
        let sw = spectrum(&w);
        let upper = if zeta.im >= 0.0 { zeta } else { zeta.conj() };
        let err = (sw.s_plus - upper)
            .norm()
            .max((sw.s_minus - upper.conj()).norm());
        roundtrip = roundtrip.max(err / zeta.norm().max(1.0));
    }
    let secs = t.elapsed().as_secs_f64();
    Check::new(
        poly <= 1e-10 && ident <= 1e-12 && roundtrip <= 1e-10 && secs < 5.0,
        format!(
            "root residual {poly:.2e}, eigenvector identities {ident:.2e}, round trip {roundtrip:.2e}, {secs:.2}s"
        ),
    )
}

fn random_stem(rng: &mut ChaCha8Rng, k: usize) -> StemFunction {
    if k % 2 == 0 {
        let deg = rng.random_range(0..=5);
        StemFunction::h_polynomial((0..=deg).map(|_| rand_q(rng, 1.0)).collect())
    } else {
        let (d1, d2) = (rng.random_range(0..=4), rng.random_range(0..=4));
        StemFunction::pair(complex_poly(rng, d1), complex_poly(rng, d2))
    }
}

/// A pair-form stem with one entry perturbed by a polynomial with complex coefficients.
fn broken_stem(rng: &mut ChaCha8Rng) -> GeneralMat2 {
    let f1 = complex_poly(rng, 3);
    let f2 = complex_poly(rng, 3);
    let mut entries = [
        f1.clone(),
        f2.clone(),
        f2.reflected().times(AnalyticScalar::constant(c(-1.0, 0.0))),
        f1.reflected(),
    ];
    let slot = rng.random_range(0..4);
    let size = rng.random_range(0.01..0.1);
    let deg = rng.random_range(0..=2);
    let bump = AnalyticScalar::Polynomial(
        (0..=deg)
            .map(|_| Complex::from_polar(size, rng.random_range(0.0..2.0 * PI)))
            .collect(),
    );
    entries[slot] = entries[slot].clone().plus(bump);
    GeneralMat2::new(entries)
}

fn stem_theorem() -> Check {
    let t = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst = 0.0f64;
    for k in 0..100 {
        let f = random_stem(&mut rng, k);
        for _ in 0..100 {
            let q = rand_q(&mut rng, 1.0);
            let v = eval_spectral(&f, &q).unwrap();
            worst = worst.max(v.dist_to_h() / v.frobenius_norm().max(1.0));
        }
    }

    let samples = SymmetricDomain::entire().conjugate_samples(64);
    let mut found = 0;
    let mut weakest = f64::INFINITY;
    for _ in 0..20 {
        let g = broken_stem(&mut rng);
        let report = verify_stem(&g, &samples, 1e-10).unwrap();
        if report.max_defect < 1e-2 {
            continue;
        }
        let wz = report.witness;
        let upper = if wz.im >= 0.0 { wz } else { wz.conj() };
        let mut best = 0.0f64;
        for j in 0..200 {
            let q = if j < 100 {
                let zeta = upper + rand_c(&mut rng, 0.05);
                let zeta = if zeta.im.abs() < 1e-3 {
                    zeta + c(0.0, 0.05)
                } else {
                    zeta
                };
                let r = zeta.im.abs() * rng.random::<f64>();
                quaternions_with_spectrum(
                    zeta,
                    Complex::from_polar(r, rng.random_range(0.0..2.0 * PI)),
                )
                .unwrap()
            } else {
                rand_q(&mut rng, 1.0)
            };
            best = best.max(eval_spectral(&g, &q).unwrap().dist_to_h());
        }
        weakest = weakest.min(best);
        if best >= 1e-4 {
            found += 1;
        }
    }
    let secs = t.elapsed().as_secs_f64();
    Check::new(
        worst <= 1e-10 && found == 20 && secs < 30.0,
        format!(
            "stems: max relative dist {worst:.2e}; non-stems with witness: {found}/20 (weakest {weakest:.2e}); {secs:.2}s"
        ),
    )
}

fn contour_vs_spectral() -> Check {
    let t = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let cfg = QuadratureConfig {
        nodes_per_circle: 256,
        max_nodes: 4096,
        rel_tol: 1e-12,
    };
    let mut stems = vec![
        StemFunction::scalar(AnalyticScalar::Exp).unwrap(),
        StemFunction::scalar(AnalyticScalar::Sin).unwrap(),
    ];
    for deg in 0..=6 {
        stems.push(StemFunction::h_polynomial(
            (0..=deg).map(|_| rand_q(&mut rng, 1.0)).collect(),
        ));
    }
    let entire = SymmetricDomain::entire();
    let (mut worst, mut max_nodes) = (0.0f64, 0);
    let mut all_converged = true;
    for _ in 0..100 {
        let q = rand_q(&mut rng, 1.0);
        let gamma = contour_for(&q, &entire, 0.25).unwrap();
        for f in &stems {
            let r = cauchy_transform(f, &q, &gamma, &cfg).unwrap();
            all_converged &= r.converged;
            max_nodes = max_nodes.max(r.nodes_per_circle);
            worst = worst.max(r.value.max_abs_diff(&eval_spectral(f, &q).unwrap()));
        }
    }
    let secs = t.elapsed().as_secs_f64();
    Check::new(
        worst <= 1e-8 && max_nodes <= 4096 && all_converged && secs < 60.0,
        format!("max difference {worst:.2e}, at most {max_nodes} nodes per circle, {secs:.2}s"),
    )
}

/// `Σ falling(k, n) a_k q^(k-n)` computed with quaternion arithmetic only.
fn hpoly_derivative(a: &[Quaternion], n: usize, q: &Quaternion) -> Quaternion {
    let mut acc = Quaternion::ZERO;
    for (k, ak) in a.iter().enumerate().skip(n) {
        let falling: f64 = ((k - n + 1)..=k).map(|j| j as f64).product();
        let mut p = Quaternion::ONE;
        for _ in 0..k - n {
            p = p * *q;
        }
        acc = acc + *ak * p * falling;
    }
    acc
}

fn polynomial_reproduction() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let cfg = QuadratureConfig {
        nodes_per_circle: 256,
        max_nodes: 1 << 14,
        rel_tol: 1e-13,
    };
    let entire = SymmetricDomain::entire();
    let (mut value, mut deriv) = (0.0f64, 0.0f64);
    for k in 0..100 {
        let a: Vec<Quaternion> = (0..=k % 7).map(|_| rand_q(&mut rng, 1.0)).collect();
        let f = StemFunction::h_polynomial(a.clone());
        let q = rand_q(&mut rng, 0.8);
        let gamma = contour_for(&q, &entire, 0.25).unwrap();
        let oracle = hpoly_eval(&a, &q).matrix();
        let got = cauchy_transform(&f, &q, &gamma, &cfg).unwrap().value;
        value = value.max(got.max_abs_diff(&oracle) / oracle.op_norm().max(1.0));
        for n in 1..=2 {
            let oracle = hpoly_derivative(&a, n, &q).matrix();
            let got = cauchy_derivative(&f, n, &q, &gamma, &cfg).unwrap().value;
            deriv = deriv.max(got.max_abs_diff(&oracle) / oracle.op_norm().max(1.0));
        }
    }
    Check::new(
        value <= 1e-10 && deriv <= 1e-10,
        format!("relative defect: values {value:.2e}, first and second derivatives {deriv:.2e}"),
    )
}

fn cauchy_bounds() -> Check {
    let f = StemFunction::scalar(AnalyticScalar::Exp).unwrap();
    let cfg = QuadratureConfig {
        nodes_per_circle: 512,
        max_nodes: 1 << 14,
        rel_tol: 1e-12,
    };
    let (mut cases, mut violations, mut tightest) = (0, 0, f64::INFINITY);
    for &case in &[BoundCase::RealCentered, BoundCase::BothHalfPlanes] {
        for &cx in &[-1.0, 0.0, 1.5] {
            for &r0 in &[0.5, 1.0, 2.0] {
                for &gap in &[0.1, 0.25] {
                    for &d in &[0.25, 1.0, 3.0] {
                        let d0 = gap * r0;
                        let rho = r0 - d0;
                        let center = match case {
                            BoundCase::RealCentered => c(cx, 0.0),
                            BoundCase::BothHalfPlanes => c(cx, r0 + d + 0.5),
                        };
                        let mut circles = vec![Circle::new(center, r0).unwrap()];
                        if case == BoundCase::BothHalfPlanes {
                            circles.push(Circle::new(center.conj(), r0).unwrap());
                        }
                        let gamma = Contour::new(circles).unwrap();
                        let sup_f = (center.re + r0 + d).exp();
                        let geom = BoundGeometry { r0, d, d0 };
                        for j in 0..4 {
                            let angle = PI * (j as f64 + 0.5) / 4.0;
                            let s = center + Complex::from_polar(rho * 0.9, angle);
                            let u = Complex::from_polar(0.5 * s.im.abs(), angle);
                            let q = quaternions_with_spectrum(s, u).unwrap();
                            for n in 0..=4 {
                                let measured = cauchy_derivative(&f, n, &q, &gamma, &cfg)
                                    .unwrap()
                                    .value
                                    .op_norm();
                                let bound = derivative_bound(n, &geom, sup_f, case).unwrap();
                                cases += 1;
                                tightest = tightest.min(bound / measured);
                                if measured > bound {
                                    violations += 1;
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    Check::new(
        violations == 0,
        format!(
            "{violations} violations in {cases} cases, smallest bound/measured ratio {tightest:.3}"
        ),
    )
}

fn taylor() -> Check {
    let f = StemFunction::scalar(AnalyticScalar::Exp).unwrap();
    let qs = [
        Quaternion::J.scale(0.1),
        Quaternion::new(0.2, 0.0, 0.5, 0.0).unwrap(),
        Quaternion::new(-0.3, 0.4, -0.2, 0.6).unwrap(),
        Quaternion::new(1.0, 0.0, 0.0, -0.8).unwrap(),
        Quaternion::real(0.7),
    ];
    let (mut worst, mut count) = (0.0f64, 0);
    for q in &qs {
        for re in [-1.0, -0.3, 0.2, 0.9, 1.5] {
            for im in [-1.0, 0.0, 0.4, 1.2] {
                let lambda = c(re, im);
                let got = taylor_recompose(&f, q, lambda, 40).unwrap();
                worst = worst.max(got.max_abs_diff(&Mat2::scalar(lambda.exp())));
                count += 1;
            }
        }
    }
    Check::new(
        worst <= 1e-8,
        format!("{count} pairs, max defect {worst:.2e}"),
    )
}

fn slice_regularity() -> Check {
    let t = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let grid = SliceSampleGrid::random(10, 100, c(0.0, 0.0), 1.5, 1e-4, 8).unwrap();
    let entire = SymmetricDomain::entire();
    let stems: Vec<StemFunction> = vec![
        StemFunction::h_polynomial((0..6).map(|_| rand_q(&mut rng, 1.0)).collect()),
        StemFunction::h_polynomial((0..4).map(|_| rand_q(&mut rng, 1.0)).collect()),
        StemFunction::scalar(AnalyticScalar::Exp).unwrap(),
        StemFunction::pair(
            AnalyticScalar::identity(),
            AnalyticScalar::real_polynomial(&[0.0, 0.0, 1.0]),
        ),
        StemFunction::pair(AnalyticScalar::Sin, complex_poly(&mut rng, 3)),
    ];
    let mut worst = 0.0f64;
    for f in &stems {
        let g = |q: &Quaternion| eval_spectral(f, q);
        worst = worst.max(slice_regularity_report(&g, &grid, 1e-5).unwrap().max_defect);
    }
    let cfg = QuadratureConfig::default();
    let sin = StemFunction::scalar(AnalyticScalar::Sin).unwrap();
    let contour_sin = |q: &Quaternion| {
        let gamma = contour_for(q, &entire, 0.25)?;
        Ok(cauchy_transform(&sin, q, &gamma, &cfg)?.value)
    };
    worst = worst.max(
        slice_regularity_report(&contour_sin, &grid, 1e-5)
            .unwrap()
            .max_defect,
    );
    let zeta0 = c(3.0, 2.0);
    let kernel = |q: &Quaternion| Ok((Mat2::scalar(zeta0) - q.matrix()).inverse().unwrap());
    worst = worst.max(
        slice_regularity_report(&kernel, &grid, 1e-5)
            .unwrap()
            .max_defect,
    );

    let star = |q: &Quaternion| Ok(q.star().matrix());
    let report = slice_regularity_report(&star, &grid, 1e-5).unwrap();
    let lo = report.defects.iter().copied().fold(f64::INFINITY, f64::min);
    let star_gap = (report.max_defect - 1.0).abs().max((lo - 1.0).abs());
    let secs = t.elapsed().as_secs_f64();
    Check::new(
        worst <= 1e-5 && star_gap <= 1e-3 && !report.pass && secs < 30.0,
        format!(
            "{} points, regular max defect {worst:.2e}, star defect within {star_gap:.2e} of 1, {secs:.2}s",
            grid.points().len()
        ),
    )
}

fn rotation_block(u: f64, v: f64) -> RealOperator {
    RealOperator::new(2, &[u, v, -v, u]).unwrap()
}

fn closed_form_two_by_two() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let cfg = QuadratureConfig::default();
    let fs = [
        AnalyticScalar::real_polynomial(&[0.0, 0.0, 1.0]),
        AnalyticScalar::Exp,
        AnalyticScalar::Sin,
    ];
    let i = c(0.0, 1.0);
    let one = c(1.0, 0.0);
    let mut worst = 0.0f64;
    for _ in 0..50 {
        let u = rng.random_range(-2.0..2.0);
        let v = rng.random_range(0.2..2.0) * if rng.random::<bool>() { 1.0 } else { -1.0 };
        let t = rotation_block(u, v);
        for f in &fs {
            let got = op_calculus(&OperatorStem::scalar(f.clone(), 2).unwrap(), &t, &cfg).unwrap();
            let (fp, fm) = (f.eval(c(u, v)), f.eval(c(u, -v)));
            let a = Mat2::new(one, -i, i, one).scale(fp * 0.5);
            let b = Mat2::new(one, i, -i, one).scale(fm * 0.5);
            let oracle = (a + b).rows();
            for r in 0..2 {
                for s in 0..2 {
                    let diff = (c(got.value.get(r, s), 0.0) - oracle[r][s]).norm();
                    worst = worst.max(diff / oracle[r][s].norm().max(1.0));
                }
            }
        }
    }
    Check::new(
        worst <= 1e-8,
        format!("150 evaluations, max defect {worst:.2e}"),
    )
}

fn sorted(mut v: Vec<Complex>) -> Vec<Complex> {
    v.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    v
}

fn multiset_gap(got: Vec<Complex>, want: Vec<Complex>) -> f64 {
    if got.len() != want.len() {
        return f64::INFINITY;
    }
    // Rounding can reorder eigenvalues with equal real parts, so match greedily.
    let mut pool = want;
    let mut worst = 0.0f64;
    for z in got {
        let (k, d) = pool
            .iter()
            .enumerate()
            .map(|(k, w)| (k, (w - z).norm()))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .unwrap();
        worst = worst.max(d);
        pool.swap_remove(k);
    }
    worst
}

fn operator_spectra() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut worst = 0.0f64;
    for _ in 0..50 {
        let (a, b) = (rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0));
        let d = RealOperator::new(2, &[a, 0.0, 0.0, b]).unwrap();
        let got = complex_spectrum(&d).unwrap().eigenvalues;
        worst = worst.max(multiset_gap(got, vec![c(a, 0.0), c(b, 0.0)]));

        let (u, v) = (rng.random_range(-3.0..3.0), rng.random_range(0.1..3.0));
        let got = complex_spectrum(&rotation_block(u, v)).unwrap().eigenvalues;
        worst = worst.max(multiset_gap(got, vec![c(u, v), c(u, -v)]));
    }
    let t = discrete_mult_op(&[Quaternion::J, Quaternion::K.scale(2.0)]).unwrap();
    let got = sorted(complex_spectrum(&t).unwrap().eigenvalues);
    let want: Vec<Complex> = [1.0, 1.0, -1.0, -1.0, 2.0, 2.0, -2.0, -2.0]
        .iter()
        .map(|&y| c(0.0, y))
        .collect();
    let mult = multiset_gap(got, want);
    worst = worst.max(mult);
    Check::new(
        worst <= 1e-8,
        format!("max eigenvalue error {worst:.2e} (multiplication operator {mult:.2e})"),
    )
}

/// A random real operator of size 2 to 6 with its eigenvalues.
fn random_spectral_case(rng: &mut ChaCha8Rng) -> (RealOperator, Vec<Complex>) {
    let n = rng.random_range(2..=6);
    let t = rand_op(rng, n, 1.0);
    let ev = complex_spectrum(&t).unwrap().eigenvalues;
    (t, ev)
}

fn commuting_pair(rng: &mut ChaCha8Rng, n_blocks: usize) -> (CommutingPair, Vec<CVec2>) {
    // Simultaneously block-diagonal pair conjugated by a random similarity.
    let n = 2 * n_blocks;
    let mut d1 = vec![0.0; n * n];
    let mut d2 = vec![0.0; n * n];
    let mut joint = Vec::new();
    for k in 0..n_blocks {
        let (i, j) = (2 * k, 2 * k + 1);
        let (a, b, cc, d) = (
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
        );
        if k % 2 == 0 {
            d1[i * n + i] = a;
            d1[i * n + j] = b;
            d1[j * n + i] = -b;
            d1[j * n + j] = a;
            d2[i * n + i] = cc;
            d2[i * n + j] = d;
            d2[j * n + i] = -d;
            d2[j * n + j] = cc;
            joint.push(CVec2::new(c(a, b), c(cc, d)));
            joint.push(CVec2::new(c(a, -b), c(cc, -d)));
        } else {
            d1[i * n + i] = a;
            d1[j * n + j] = b;
            d2[i * n + i] = cc;
            d2[j * n + j] = d;
            joint.push(CVec2::new(c(a, 0.0), c(cc, 0.0)));
            joint.push(CVec2::new(c(b, 0.0), c(d, 0.0)));
        }
    }
    let s = loop {
        let s = rand_op(rng, n, 1.0).add(&RealOperator::identity(n).scale(1.5));
        if complex_spectrum(&s)
            .unwrap()
            .eigenvalues
            .iter()
            .all(|z| z.norm() > 0.3)
        {
            break s;
        }
    };
    let s_inv = RealOperator::from_matrix(s.matrix().clone().try_inverse().unwrap()).unwrap();
    let conj = |d: &[f64]| s.matmul(&RealOperator::new(n, d).unwrap()).matmul(&s_inv);
    let (t1, t2) = (conj(&d1), conj(&d2));
    (CommutingPair::new(t1, t2).unwrap(), joint)
}

fn block_equivalences() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let tau = 1e-8;
    let (mut disagreements, mut banded, mut singular_cases) = (0, 0, 0);
    for k in 0..1000 {
        let (t, ev) = random_spectral_case(&mut rng);
        let q = if k % 2 == 0 {
            let lambda = ev[rng.random_range(0..ev.len())];
            let upper = if lambda.im >= 0.0 {
                lambda
            } else {
                lambda.conj()
            };
            let r = upper.im * rng.random::<f64>();
            quaternions_with_spectrum(
                upper,
                Complex::from_polar(r, rng.random_range(0.0..2.0 * PI)),
            )
            .unwrap()
        } else {
            rand_q(&mut rng, 1.5)
        };
        let margin = q_resolvent_margin(&t, &q);
        let scale = t.norm().max(1.0);
        let block = smallest_singular_value(&block_q_operator(&t, &q))
            .min(smallest_singular_value(&block_q_operator(&t, &q.star())))
            / scale;
        if margin > 0.5 * tau && margin < 2.0 * tau {
            banded += 1;
            continue;
        }
        singular_cases += usize::from(margin <= tau);
        if (margin <= tau) != (block <= tau) {
            disagreements += 1;
        }
    }

    let (mut joint_disagreements, mut joint_banded, mut joint_singular) = (0, 0, 0);
    let mut reflected_failures = 0;
    for k in 0..1000 {
        let (p, joint) = commuting_pair(&mut rng, 1 + k % 2);
        let pick = joint[rng.random_range(0..joint.len())];
        let z = match k % 3 {
            0 => pick,
            // The quaternion conjugate of this point is a joint eigenvalue.
            1 => CVec2::new(pick.z1.conj(), -pick.z2),
            _ => CVec2::new(rand_c(&mut rng, 1.5), rand_c(&mut rng, 1.5)),
        };
        let margin = joint_resolvent_margin(&p, &z);
        let scale = (p.t1().norm() + p.t2().norm()).max(1.0);
        let direct = smallest_singular_value(&joint_block_operator(&p, &z)) / scale;
        let reflected = smallest_singular_value(&joint_block_operator(&p, &z.star())) / scale;
        if margin > 0.5 * tau && margin < 2.0 * tau {
            joint_banded += 1;
            continue;
        }
        joint_singular += usize::from(margin <= tau);
        if (margin <= tau) != (direct <= tau) {
            joint_disagreements += 1;
        }
        if (margin <= tau) != (direct.min(reflected) <= tau) {
            reflected_failures += 1;
        }
    }
    Check::new(
        disagreements == 0 && joint_disagreements == 0,
        format!(
            "single operator: {disagreements} disagreements ({singular_cases} singular, {banded} in band); \
             pairs: {joint_disagreements} disagreements ({joint_singular} singular, {joint_banded} in band); \
             requiring the conjugate point too would misclassify {reflected_failures} pair cases"
        ),
    )
}

fn martinelli() -> Check {
    let t = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let monomials = [(0u32, 0u32), (1, 0), (0, 1), (2, 0), (1, 1)];
    let fs: Vec<BiScalar> = monomials
        .iter()
        .map(|&(p1, p2)| {
            BiScalar::Polynomial(vec![BiTerm {
                coeff: c(1.0, 0.0),
                p1,
                p2,
            }])
        })
        .collect();
    let (mut worst, mut weakest_ratio, mut slowest) = (0.0f64, f64::INFINITY, 0.0f64);
    let mut ratio_ok = true;
    for _ in 0..20 {
        let case_start = Instant::now();
        let t1 = rand_op(&mut rng, 2, 1.0);
        let (alpha, beta) = (rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        let t2 = t1.scale(alpha).add(&RealOperator::identity(2).scale(beta));
        let p = CommutingPair::new(t1.clone(), t2.clone()).unwrap();
        let grid = SphereGrid::enclosing(&p, 64).unwrap();
        let oracles: Vec<ComplexOperator> = monomials
            .iter()
            .map(|&(a, b)| complexify(&t1.pow(a as usize).matmul(&t2.pow(b as usize))))
            .collect();
        let errors = |res: usize| -> Vec<f64> {
            let vals = martinelli_complex(&fs, &p, &grid.with_resolution(res).unwrap()).unwrap();
            vals.iter()
                .zip(&oracles)
                .map(|(v, o)| v.max_abs_diff(o) / o.norm().max(1.0))
                .collect()
        };
        let (e16, e32, e64) = (errors(16), errors(32), errors(64));
        for k in 0..fs.len() {
            worst = worst.max(e64[k]);
            let floor = 1e-12;
            if e32[k] > floor {
                let ratio = e16[k] / e32[k];
                weakest_ratio = weakest_ratio.min(ratio);
                ratio_ok &= ratio >= 4.0;
            }
        }
        slowest = slowest.max(case_start.elapsed().as_secs_f64());
    }
    let secs = t.elapsed().as_secs_f64();
    Check::new(
        worst <= 1e-4 && ratio_ok && slowest <= 60.0,
        format!(
            "max error at 64 {worst:.2e}, smallest 16->32 error ratio above floor {weakest_ratio:.2e}, \
             slowest case {slowest:.2}s, total {secs:.2}s"
        ),
    )
}

fn random_oc_stem(rng: &mut ChaCha8Rng, n: usize) -> (OperatorStem, Option<Vec<RealOperator>>) {
    let scalars = [
        AnalyticScalar::Exp,
        AnalyticScalar::Sin,
        AnalyticScalar::Cos,
        AnalyticScalar::real_polynomial(&[0.5, -1.0, 0.25]),
        AnalyticScalar::Exp.affine(c(0.5, 0.0), c(0.1, 0.0)),
    ];
    if rng.random_range(0..4) == 0 {
        let coeffs: Vec<RealOperator> = (0..rng.random_range(1..=4))
            .map(|_| rand_op(rng, n, 1.0))
            .collect();
        return (
            OperatorStem::polynomial(coeffs.clone()).unwrap(),
            Some(coeffs),
        );
    }
    let terms = (0..rng.random_range(1..=3))
        .map(|_| {
            (
                rand_op(rng, n, 1.0),
                scalars[rng.random_range(0..scalars.len())].clone(),
            )
        })
        .collect();
    (OperatorStem::terms(terms).unwrap(), None)
}

fn flat_invariance() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let cfg = QuadratureConfig::default();
    let (mut worst, mut poly_worst, mut failures) = (0.0f64, 0.0f64, 0);
    for _ in 0..100 {
        let n = rng.random_range(1..=8);
        let t = rand_op(&mut rng, n, 1.0 / (n as f64).sqrt());
        let (f, coeffs) = random_oc_stem(&mut rng, n);
        match op_calculus(&f, &t, &cfg) {
            Ok(r) => {
                let scale = r.value.norm().max(1.0);
                // ‖X - X♭‖ = 2 ‖Im X‖ entrywise.
                worst = worst.max(2.0 * r.imag_residue / scale);
                if let Some(a) = coeffs {
                    let mut direct = RealOperator::zeros(n);
                    for (k, ak) in a.iter().enumerate() {
                        direct = direct.add(&ak.matmul(&t.pow(k)));
                    }
                    poly_worst = poly_worst.max(r.value.max_abs_diff(&direct) / scale);
                }
            }
            Err(_) => failures += 1,
        }
    }
    let s = ComplexOperator::from_matrix(nalgebra::DMatrix::from_fn(3, 3, |i, j| {
        c(i as f64, j as f64)
    }))
    .unwrap();
    let involutive = flat(&flat(&s)) == s;
    Check::new(
        worst <= 1e-8 && poly_worst <= 1e-8 && failures == 0 && involutive,
        format!("100 operators, max flat defect {worst:.2e}, polynomial check {poly_worst:.2e}, {failures} errors"),
    )
}

fn main() {
    let criteria: [(&str, fn() -> Check); 13] = [
        ("algebra identities", algebra),
        ("quaternion spectra", spectra),
        ("stem functions give quaternions", stem_theorem),
        (
            "contour integral matches spectral value",
            contour_vs_spectral,
        ),
        (
            "polynomial and derivative reproduction",
            polynomial_reproduction,
        ),
        ("derivative bounds", cauchy_bounds),
        ("Taylor recomposition", taylor),
        ("slice regularity", slice_regularity),
        ("rotation block closed form", closed_form_two_by_two),
        ("operator spectra", operator_spectra),
        ("block operator equivalences", block_equivalences),
        ("sphere integral calculus", martinelli),
        ("flat invariance", flat_invariance),
    ];
    let mut failed = 0;
    for (k, (name, run)) in criteria.iter().enumerate() {
        let check = run();
        let verdict = if check.pass { "PASS" } else { "FAIL" };
        println!("criterion {:>2} {verdict}: {name}: {}", k + 1, check.detail);
        failed += usize::from(!check.pass);
    }
    println!(
        "{} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
