//! Command-line front end. Each subcommand reads a TOML document and writes a TOML report
//! that echoes the input, the result and diagnostics.
//!
//! Exit codes: 0 success, 1 parse or argument error, 2 domain or geometry error,
//! 3 accuracy error.

use std::ffi::OsString;
use std::fs;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::contour_calc::{
    cauchy_derivative, cauchy_transform, contour_for, Contour, QuadratureConfig,
};
use crate::error::Error;
use crate::func_model::{
    eval_spectral, eval_spectral_derivative, verify_stem, zero_set_contains, AnalyticScalar, Disk,
    GeneralMat2, MatrixFunction, StemFunction, SymmetricDomain,
};
use crate::joint_op::{
    joint_resolvent_margin, joint_spectrum_points, martinelli_calculus, BiScalar, BiTerm,
    CommutingPair, SphereGrid,
};
use crate::quat_core::{axial_decompose, spectrum, CVec2, Mat2, Quaternion};
use crate::real_op::{complex_spectrum, discrete_mult_op, op_calculus, OperatorStem, RealOperator};
use crate::slice_check::{
    slice_regularity_report, SliceSampleGrid, DEFAULT_FD_STEP, DEFAULT_SLICE_TOL,
};
use crate::Complex;

/// Failures surfaced by the command-line driver.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("parse error: {0}")]
    Parse(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Core(#[from] Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Parse(_) | CliError::Io(_) => 1,
            CliError::Core(e) => match e {
                Error::InvalidArgument(_) => 1,
                Error::Domain(_)
                | Error::Geometry(_)
                | Error::SingularElement(_)
                | Error::ContractViolation(_) => 2,
                Error::Accuracy { .. } | Error::Numeric(_) => 3,
            },
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Parser, Debug)]
#[command(name = "quatcalc", version, about = "Quaternionic functional calculus")]
struct Cli {
    #[command(flatten)]
    opts: Options,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct Options {
    /// Acceptance tolerance for checks.
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Initial trapezoid nodes per circle.
    #[arg(long, global = true)]
    nodes: Option<usize>,
    /// Largest number of nodes per circle before giving up.
    #[arg(long = "max-nodes", global = true)]
    max_nodes: Option<usize>,
    /// Finite-difference step for slice checks.
    #[arg(long = "fd-step", global = true)]
    fd_step: Option<f64>,
    /// Resolution of the sphere grid for pair calculus.
    #[arg(long = "grid-res", global = true)]
    grid_res: Option<usize>,
    /// Distance between spectrum and contour.
    #[arg(long, global = true)]
    margin: Option<f64>,
    /// Write evaluation samples as CSV to this path.
    #[arg(long = "emit-samples", global = true)]
    emit_samples: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Spectrum, eigenvectors and axial form of a quaternion.
    Spectrum(InputArg),
    /// Evaluate a stem function at a quaternion, spectrally and by contour integral.
    Eval(InputArg),
    /// Evaluate the n-th derivative of a stem function at a quaternion.
    Deriv(InputArg),
    /// Check the stem condition F(conj z) = F(z)~ on sample points.
    StemCheck(InputArg),
    /// Finite-difference slice regularity scan of a stem function's quaternion extension.
    SliceCheck(InputArg),
    /// Test whether a quaternion lies in the zero set of a stem function.
    Zeros(InputArg),
    /// Eigenvalues of a real operator.
    OpSpectrum(InputArg),
    /// Functional calculus of a real operator.
    OpCalc(InputArg),
    /// Block left-multiplication operator of a list of quaternions.
    MultOp(InputArg),
    /// Joint spectrum of a commuting pair.
    JointSpectrum(InputArg),
    /// Two-variable calculus of a commuting pair.
    JointCalc(InputArg),
}

#[derive(Args, Debug)]
struct InputArg {
    /// Input TOML document; `-` or omitted reads standard input.
    input: Option<PathBuf>,
}

/// Runs the command line with process stdio and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let stdin = std::io::stdin();
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run_with_io(
        args,
        &mut stdin.lock(),
        &mut stdout.lock(),
        &mut stderr.lock(),
    )
}

/// Runs the command line against the given streams and returns the exit code.
pub fn run_with_io<I, T>(
    args: I,
    stdin: &mut dyn Read,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            if e.use_stderr() {
                let _ = write!(err, "{e}");
                return 1;
            }
            let _ = write!(out, "{e}");
            return 0;
        }
    };
    match execute(&cli, stdin) {
        Ok(text) => match out.write_all(text.as_bytes()) {
            Ok(()) => 0,
            Err(e) => {
                let _ = writeln!(err, "i/o error: {e}");
                1
            }
        },
        Err(e) => {
            let _ = writeln!(err, "{e}");
            e.exit_code()
        }
    }
}

fn read_input(arg: &InputArg, stdin: &mut dyn Read) -> CliResult<toml::Table> {
    let text = match &arg.input {
        Some(p) if p.as_os_str() != "-" => fs::read_to_string(p)?,
        _ => {
            let mut s = String::new();
            stdin.read_to_string(&mut s)?;
            s
        }
    };
    let table: toml::Table = text
        .parse()
        .map_err(|e: toml::de::Error| CliError::Parse(e.to_string()))?;
    Ok(table)
}

fn decode<T: for<'de> Deserialize<'de>>(table: &toml::Table) -> CliResult<T> {
    table
        .clone()
        .try_into()
        .map_err(|e: toml::de::Error| CliError::Parse(e.to_string()))
}

fn execute(cli: &Cli, stdin: &mut dyn Read) -> CliResult<String> {
    let opts = &cli.opts;
    let (name, arg) = match &cli.command {
        Command::Spectrum(a) => ("spectrum", a),
        Command::Eval(a) => ("eval", a),
        Command::Deriv(a) => ("deriv", a),
        Command::StemCheck(a) => ("stem-check", a),
        Command::SliceCheck(a) => ("slice-check", a),
        Command::Zeros(a) => ("zeros", a),
        Command::OpSpectrum(a) => ("op-spectrum", a),
        Command::OpCalc(a) => ("op-calc", a),
        Command::MultOp(a) => ("mult-op", a),
        Command::JointSpectrum(a) => ("joint-spectrum", a),
        Command::JointCalc(a) => ("joint-calc", a),
    };
    let input = read_input(arg, stdin)?;
    let (result, diagnostics) = match &cli.command {
        Command::Spectrum(_) => cmd_spectrum(decode(&input)?)?,
        Command::Eval(_) => cmd_eval(decode(&input)?, opts)?,
        Command::Deriv(_) => cmd_deriv(decode(&input)?, opts)?,
        Command::StemCheck(_) => cmd_stem_check(decode(&input)?, opts)?,
        Command::SliceCheck(_) => cmd_slice_check(decode(&input)?, opts)?,
        Command::Zeros(_) => cmd_zeros(decode(&input)?, opts)?,
        Command::OpSpectrum(_) => cmd_op_spectrum(decode(&input)?)?,
        Command::OpCalc(_) => cmd_op_calc(decode(&input)?, opts)?,
        Command::MultOp(_) => cmd_mult_op(decode(&input)?)?,
        Command::JointSpectrum(_) => cmd_joint_spectrum(decode(&input)?)?,
        Command::JointCalc(_) => cmd_joint_calc(decode(&input)?, opts)?,
    };
    let mut doc = toml::Table::new();
    doc.insert("command".into(), toml::Value::String(name.into()));
    doc.insert("input".into(), toml::Value::Table(input));
    doc.insert("result".into(), result);
    doc.insert("diagnostics".into(), diagnostics);
    toml::to_string(&doc).map_err(|e| CliError::Parse(e.to_string()))
}

fn to_value<T: Serialize>(v: &T) -> CliResult<toml::Value> {
    toml::Value::try_from(v).map_err(|e| CliError::Parse(e.to_string()))
}

// ---------------------------------------------------------------------------
// Document types
// ---------------------------------------------------------------------------

/// A complex number as `{ re, im }`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComplexDoc {
    pub re: f64,
    pub im: f64,
}

impl From<Complex> for ComplexDoc {
    fn from(c: Complex) -> Self {
        Self { re: c.re, im: c.im }
    }
}

impl From<ComplexDoc> for Complex {
    fn from(c: ComplexDoc) -> Self {
        Complex::new(c.re, c.im)
    }
}

fn mat2_doc(m: &Mat2) -> Vec<Vec<ComplexDoc>> {
    m.rows()
        .iter()
        .map(|r| r.iter().map(|&c| c.into()).collect())
        .collect()
}

fn cvec_doc(v: &CVec2) -> [ComplexDoc; 2] {
    [v.z1.into(), v.z2.into()]
}

fn quaternion(x: [f64; 4]) -> CliResult<Quaternion> {
    Ok(Quaternion::new(x[0], x[1], x[2], x[3])?)
}

#[derive(Clone, Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
enum ScalarDoc {
    Poly {
        coeffs: Vec<ComplexDoc>,
    },
    Exp,
    Sin,
    Cos,
    Affine {
        scale: ComplexDoc,
        shift: ComplexDoc,
        body: Box<ScalarDoc>,
    },
    Sum {
        terms: Vec<ScalarDoc>,
    },
    Product {
        factors: Vec<ScalarDoc>,
    },
}

impl ScalarDoc {
    fn build(&self) -> CliResult<AnalyticScalar> {
        let combine = |items: &[ScalarDoc], sum: bool| -> CliResult<AnalyticScalar> {
            let mut it = items.iter();
            let first = it
                .next()
                .ok_or_else(|| CliError::Parse("sum/product needs at least one entry".into()))?
                .build()?;
            it.try_fold(first, |acc, d| {
                let next = d.build()?;
                Ok(if sum { acc.plus(next) } else { acc.times(next) })
            })
        };
        Ok(match self {
            ScalarDoc::Poly { coeffs } => {
                AnalyticScalar::Polynomial(coeffs.iter().map(|&c| c.into()).collect())
            }
            ScalarDoc::Exp => AnalyticScalar::Exp,
            ScalarDoc::Sin => AnalyticScalar::Sin,
            ScalarDoc::Cos => AnalyticScalar::Cos,
            ScalarDoc::Affine { scale, shift, body } => {
                body.build()?.affine((*scale).into(), (*shift).into())
            }
            ScalarDoc::Sum { terms } => combine(terms, true)?,
            ScalarDoc::Product { factors } => combine(factors, false)?,
        })
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
enum StemDoc {
    Scalar { f: ScalarDoc },
    Pair { f1: ScalarDoc, f2: ScalarDoc },
    Hpoly { coeffs: Vec<[f64; 4]> },
    General { entries: [ScalarDoc; 4] },
}

#[derive(Clone, Copy, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct DiskDoc {
    center: ComplexDoc,
    radius: f64,
}

fn domain_of(disks: &Option<Vec<DiskDoc>>) -> CliResult<SymmetricDomain> {
    match disks {
        None => Ok(SymmetricDomain::entire()),
        Some(ds) => {
            let disks = ds
                .iter()
                .map(|d| Disk::new(d.center.into(), d.radius))
                .collect::<crate::Result<Vec<_>>>()?;
            Ok(SymmetricDomain::union_of(&disks)?)
        }
    }
}

fn general_of(entries: &[ScalarDoc; 4], domain: SymmetricDomain) -> CliResult<GeneralMat2> {
    let built = [
        entries[0].build()?,
        entries[1].build()?,
        entries[2].build()?,
        entries[3].build()?,
    ];
    Ok(GeneralMat2::new(built).on_domain(domain))
}

fn stem_of(doc: &StemDoc, domain: SymmetricDomain, tol: f64) -> CliResult<StemFunction> {
    let stem = match doc {
        StemDoc::Scalar { f } => StemFunction::scalar(f.build()?)?,
        StemDoc::Pair { f1, f2 } => StemFunction::pair(f1.build()?, f2.build()?),
        StemDoc::Hpoly { coeffs } => StemFunction::h_polynomial(
            coeffs
                .iter()
                .map(|&c| quaternion(c))
                .collect::<CliResult<_>>()?,
        ),
        StemDoc::General { entries } => {
            return Ok(StemFunction::general(general_of(entries, domain)?, tol)?);
        }
    };
    Ok(stem.on_domain(domain))
}

fn quad_config(opts: &Options) -> QuadratureConfig {
    let mut cfg = QuadratureConfig::default();
    if let Some(n) = opts.nodes {
        cfg.nodes_per_circle = n;
        cfg.max_nodes = cfg.max_nodes.max(n);
    }
    if let Some(m) = opts.max_nodes {
        cfg.max_nodes = m;
    }
    cfg
}

fn write_csv(path: &Path, header: &[&str], rows: Vec<Vec<f64>>) -> CliResult<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| CliError::Io(e.into()))?;
    w.write_record(header).map_err(|e| CliError::Io(e.into()))?;
    for r in rows {
        w.write_record(r.iter().map(|v| v.to_string()))
            .map_err(|e| CliError::Io(e.into()))?;
    }
    w.flush()?;
    Ok(())
}

fn contour_doc(c: &Contour) -> Vec<ContourCircleDoc> {
    c.circles()
        .iter()
        .map(|c| ContourCircleDoc {
            center: c.center.into(),
            radius: c.radius,
        })
        .collect()
}

#[derive(Serialize)]
struct ContourCircleDoc {
    center: ComplexDoc,
    radius: f64,
}

type Outcome = CliResult<(toml::Value, toml::Value)>;

// ---------------------------------------------------------------------------
// Quaternion subcommands
// ---------------------------------------------------------------------------

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SpectrumInput {
    q: [f64; 4],
}

#[derive(Serialize)]
struct SpectrumOutput {
    s_plus: ComplexDoc,
    s_minus: ComplexDoc,
    nu_plus: [ComplexDoc; 2],
    nu_minus: [ComplexDoc; 2],
    projection_plus: Vec<Vec<ComplexDoc>>,
    projection_minus: Vec<Vec<ComplexDoc>>,
    real: bool,
    axial_x: f64,
    axial_y: f64,
    axial_s: [f64; 4],
}

#[derive(Serialize)]
struct SpectrumDiagnostics {
    eigen_residual: f64,
}

fn cmd_spectrum(input: SpectrumInput) -> Outcome {
    let q = quaternion(input.q)?;
    let sp = spectrum(&q);
    let (ep, em) = sp.projections();
    let ax = axial_decompose(&q);
    let m = q.matrix();
    let residual = [(sp.s_plus, sp.nu_plus), (sp.s_minus, sp.nu_minus)]
        .iter()
        .map(|(s, v)| {
            let r = m.apply(v);
            CVec2::new(r.z1 - v.z1 * s, r.z2 - v.z2 * s).norm()
        })
        .fold(0.0, f64::max);
    let out = SpectrumOutput {
        s_plus: sp.s_plus.into(),
        s_minus: sp.s_minus.into(),
        nu_plus: cvec_doc(&sp.nu_plus),
        nu_minus: cvec_doc(&sp.nu_minus),
        projection_plus: mat2_doc(&ep),
        projection_minus: mat2_doc(&em),
        real: sp.real,
        axial_x: ax.x,
        axial_y: ax.y,
        axial_s: ax.s.components(),
    };
    Ok((
        to_value(&out)?,
        to_value(&SpectrumDiagnostics {
            eigen_residual: residual,
        })?,
    ))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct EvalInput {
    q: [f64; 4],
    stem: StemDoc,
    domain: Option<Vec<DiskDoc>>,
    n: Option<usize>,
}

#[derive(Serialize)]
struct EvalOutput {
    spectral: Vec<Vec<ComplexDoc>>,
    contour: Vec<Vec<ComplexDoc>>,
    quaternion: Option<[f64; 4]>,
    dist_to_h: f64,
}

#[derive(Serialize)]
struct EvalDiagnostics {
    difference: f64,
    nodes_per_circle: usize,
    error_estimate: f64,
    converged: bool,
    contour: Vec<ContourCircleDoc>,
}

const DEFAULT_MARGIN: f64 = 0.25;

fn eval_common(input: EvalInput, opts: &Options, derivative: bool) -> Outcome {
    let q = quaternion(input.q)?;
    let tol = opts.tol.unwrap_or(1e-10);
    let stem = stem_of(&input.stem, domain_of(&input.domain)?, tol)?;
    let n = if derivative { input.n.unwrap_or(1) } else { 0 };
    let spectral = eval_spectral_derivative(&stem, n, &q)?;
    let margin = opts.margin.unwrap_or(DEFAULT_MARGIN);
    let gamma = contour_for(
        &q,
        crate::func_model::AnalyticMatrixFunction::domain(&stem),
        margin,
    )?;
    let cfg = quad_config(opts);
    let quad = if derivative {
        cauchy_derivative(&stem, n, &q, &gamma, &cfg)?
    } else {
        cauchy_transform(&stem, &q, &gamma, &cfg)?
    };
    if let Some(path) = &opts.emit_samples {
        let rows = gamma
            .nodes(quad.nodes_per_circle)
            .into_iter()
            .map(|z| vec![z.re, z.im, stem.value(z).op_norm()])
            .collect();
        write_csv(path, &["re", "im", "norm_f"], rows)?;
    }
    if !quad.converged {
        return Err(Error::Accuracy {
            message: "contour quadrature did not converge".into(),
            defect: quad.error_estimate,
        }
        .into());
    }
    let out = EvalOutput {
        spectral: mat2_doc(&spectral),
        contour: mat2_doc(&quad.value),
        quaternion: spectral.to_quaternion(None).map(|q| q.components()),
        dist_to_h: spectral.dist_to_h(),
    };
    let diag = EvalDiagnostics {
        difference: spectral.max_abs_diff(&quad.value),
        nodes_per_circle: quad.nodes_per_circle,
        error_estimate: quad.error_estimate,
        converged: quad.converged,
        contour: contour_doc(&gamma),
    };
    Ok((to_value(&out)?, to_value(&diag)?))
}

fn cmd_eval(input: EvalInput, opts: &Options) -> Outcome {
    eval_common(input, opts, false)
}

fn cmd_deriv(input: EvalInput, opts: &Options) -> Outcome {
    eval_common(input, opts, true)
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct StemCheckInput {
    entries: [ScalarDoc; 4],
    domain: Option<Vec<DiskDoc>>,
    samples: Option<Vec<ComplexDoc>>,
}

#[derive(Serialize)]
struct StemCheckOutput {
    pass: bool,
    max_defect: f64,
    witness: ComplexDoc,
}

#[derive(Serialize)]
struct CountDiagnostics {
    samples: usize,
    tol: f64,
}

fn cmd_stem_check(input: StemCheckInput, opts: &Options) -> Outcome {
    let domain = domain_of(&input.domain)?;
    let g = general_of(&input.entries, domain.clone())?;
    let samples: Vec<Complex> = match &input.samples {
        Some(s) => s.iter().map(|&c| c.into()).collect(),
        None => domain.conjugate_samples(64),
    };
    let tol = opts.tol.unwrap_or(1e-10);
    let r = verify_stem(&g, &samples, tol)?;
    let out = StemCheckOutput {
        pass: r.pass,
        max_defect: r.max_defect,
        witness: r.witness.into(),
    };
    Ok((
        to_value(&out)?,
        to_value(&CountDiagnostics {
            samples: samples.len(),
            tol,
        })?,
    ))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SliceCheckInput {
    stem: StemDoc,
    domain: Option<Vec<DiskDoc>>,
    grid: SliceGridDoc,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SliceGridDoc {
    directions: usize,
    per_direction: usize,
    center: ComplexDoc,
    radius: f64,
    seed: Option<u64>,
}

#[derive(Serialize)]
struct SliceCheckOutput {
    pass: bool,
    max_defect: f64,
    worst_x: f64,
    worst_y: f64,
    worst_s: [f64; 4],
}

#[derive(Serialize)]
struct SliceDiagnostics {
    points: usize,
    fd_step: f64,
    tol: f64,
}

fn cmd_slice_check(input: SliceCheckInput, opts: &Options) -> Outcome {
    let tol = opts.tol.unwrap_or(DEFAULT_SLICE_TOL);
    let h = opts.fd_step.unwrap_or(DEFAULT_FD_STEP);
    let stem = stem_of(&input.stem, domain_of(&input.domain)?, 1e-10)?;
    let g = &input.grid;
    let grid = SliceSampleGrid::random(
        g.directions,
        g.per_direction,
        g.center.into(),
        g.radius,
        h,
        g.seed.unwrap_or(0),
    )?;
    let eval = |q: &Quaternion| eval_spectral(&stem, q);
    let r = slice_regularity_report(&eval, &grid, tol)?;
    if let Some(path) = &opts.emit_samples {
        let rows = grid
            .points()
            .iter()
            .zip(&r.defects)
            .map(|(p, d)| {
                let [_, a, b, c] = p.s.components();
                vec![p.x, p.y, a, b, c, *d]
            })
            .collect();
        write_csv(path, &["x", "y", "s_j", "s_k", "s_l", "defect"], rows)?;
    }
    let out = SliceCheckOutput {
        pass: r.pass,
        max_defect: r.max_defect,
        worst_x: r.worst_point.x,
        worst_y: r.worst_point.y,
        worst_s: r.worst_point.s.components(),
    };
    let diag = SliceDiagnostics {
        points: grid.points().len(),
        fd_step: h,
        tol,
    };
    Ok((to_value(&out)?, to_value(&diag)?))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ZerosInput {
    q: [f64; 4],
    stem: StemDoc,
    domain: Option<Vec<DiskDoc>>,
}

#[derive(Serialize)]
struct ZerosOutput {
    contains: bool,
    value_at_s_plus: Vec<Vec<ComplexDoc>>,
    value_at_s_minus: Vec<Vec<ComplexDoc>>,
}

#[derive(Serialize)]
struct TolDiagnostics {
    tol: f64,
}

fn cmd_zeros(input: ZerosInput, opts: &Options) -> Outcome {
    let q = quaternion(input.q)?;
    let tol = opts.tol.unwrap_or(1e-10);
    let stem = stem_of(&input.stem, domain_of(&input.domain)?, tol)?;
    let contains = zero_set_contains(&stem, &q, tol)?;
    let sp = spectrum(&q);
    let out = ZerosOutput {
        contains,
        value_at_s_plus: mat2_doc(&stem.value(sp.s_plus)),
        value_at_s_minus: mat2_doc(&stem.value(sp.s_minus)),
    };
    Ok((to_value(&out)?, to_value(&TolDiagnostics { tol })?))
}

// ---------------------------------------------------------------------------
// Operator subcommands
// ---------------------------------------------------------------------------

fn operator(rows: &[Vec<f64>]) -> CliResult<RealOperator> {
    Ok(RealOperator::from_rows(rows)?)
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct MatrixInput {
    matrix: Vec<Vec<f64>>,
}

#[derive(Serialize)]
struct OpSpectrumOutput {
    eigenvalues: Vec<ComplexDoc>,
    spectral_radius: f64,
}

#[derive(Serialize)]
struct OpSpectrumDiagnostics {
    conjugation_defect: f64,
}

fn cmd_op_spectrum(input: MatrixInput) -> Outcome {
    let t = operator(&input.matrix)?;
    let r = complex_spectrum(&t)?;
    let out = OpSpectrumOutput {
        eigenvalues: r.eigenvalues.iter().map(|&z| z.into()).collect(),
        spectral_radius: r.spectral_radius(),
    };
    Ok((
        to_value(&out)?,
        to_value(&OpSpectrumDiagnostics {
            conjugation_defect: r.conjugation_defect,
        })?,
    ))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct OpCalcInput {
    matrix: Vec<Vec<f64>>,
    f: Option<ScalarDoc>,
    terms: Option<Vec<OpTermDoc>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct OpTermDoc {
    coeff: Vec<Vec<f64>>,
    f: ScalarDoc,
}

#[derive(Serialize)]
struct OpCalcOutput {
    value: Vec<Vec<f64>>,
}

#[derive(Serialize)]
struct OpCalcDiagnostics {
    imag_residue: f64,
    nodes_per_circle: usize,
    error_estimate: f64,
    converged: bool,
    contour: Vec<ContourCircleDoc>,
}

fn cmd_op_calc(input: OpCalcInput, opts: &Options) -> Outcome {
    let t = operator(&input.matrix)?;
    let stem = match (&input.f, &input.terms) {
        (Some(f), None) => OperatorStem::scalar(f.build()?, t.dim())?,
        (None, Some(terms)) => OperatorStem::terms(
            terms
                .iter()
                .map(|d| Ok((operator(&d.coeff)?, d.f.build()?)))
                .collect::<CliResult<Vec<_>>>()?,
        )?,
        _ => return Err(CliError::Parse("give exactly one of `f` or `terms`".into())),
    };
    let r = op_calculus(&stem, &t, &quad_config(opts))?;
    if let Some(path) = &opts.emit_samples {
        let rows = r
            .contour
            .nodes(r.nodes_per_circle)
            .into_iter()
            .map(|z| vec![z.re, z.im])
            .collect();
        write_csv(path, &["re", "im"], rows)?;
    }
    if !r.converged {
        return Err(Error::Accuracy {
            message: "operator quadrature did not converge".into(),
            defect: r.error_estimate,
        }
        .into());
    }
    let diag = OpCalcDiagnostics {
        imag_residue: r.imag_residue,
        nodes_per_circle: r.nodes_per_circle,
        error_estimate: r.error_estimate,
        converged: r.converged,
        contour: contour_doc(&r.contour),
    };
    Ok((
        to_value(&OpCalcOutput {
            value: r.value.rows(),
        })?,
        to_value(&diag)?,
    ))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct MultOpInput {
    thetas: Vec<[f64; 4]>,
}

#[derive(Serialize)]
struct MultOpOutput {
    matrix: Vec<Vec<f64>>,
    eigenvalues: Vec<ComplexDoc>,
}

fn cmd_mult_op(input: MultOpInput) -> Outcome {
    let thetas = input
        .thetas
        .iter()
        .map(|&t| quaternion(t))
        .collect::<CliResult<Vec<_>>>()?;
    let t = discrete_mult_op(&thetas)?;
    let r = complex_spectrum(&t)?;
    let out = MultOpOutput {
        matrix: t.rows(),
        eigenvalues: r.eigenvalues.iter().map(|&z| z.into()).collect(),
    };
    Ok((
        to_value(&out)?,
        to_value(&OpSpectrumDiagnostics {
            conjugation_defect: r.conjugation_defect,
        })?,
    ))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct JointSpectrumInput {
    t1: Vec<Vec<f64>>,
    t2: Vec<Vec<f64>>,
    probes: Option<Vec<[ComplexDoc; 2]>>,
}

#[derive(Serialize)]
struct JointSpectrumOutput {
    points: Vec<[ComplexDoc; 2]>,
    probe_margins: Vec<f64>,
}

#[derive(Serialize)]
struct JointDiagnostics {
    point_margins: Vec<f64>,
}

fn pair_of(t1: &[Vec<f64>], t2: &[Vec<f64>]) -> CliResult<CommutingPair> {
    Ok(CommutingPair::new(operator(t1)?, operator(t2)?)?)
}

fn cmd_joint_spectrum(input: JointSpectrumInput) -> Outcome {
    let p = pair_of(&input.t1, &input.t2)?;
    let pts = joint_spectrum_points(&p, 0)?;
    let probes: Vec<CVec2> = input
        .probes
        .unwrap_or_default()
        .iter()
        .map(|[a, b]| CVec2::new((*a).into(), (*b).into()))
        .collect();
    let out = JointSpectrumOutput {
        points: pts.iter().map(cvec_doc).collect(),
        probe_margins: probes
            .iter()
            .map(|z| joint_resolvent_margin(&p, z))
            .collect(),
    };
    let diag = JointDiagnostics {
        point_margins: pts.iter().map(|z| joint_resolvent_margin(&p, z)).collect(),
    };
    Ok((to_value(&out)?, to_value(&diag)?))
}

#[derive(Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
enum BiScalarDoc {
    Poly { terms: Vec<BiTermDoc> },
    Separable { f: ScalarDoc, g: ScalarDoc },
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct BiTermDoc {
    coeff: ComplexDoc,
    p1: u32,
    p2: u32,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct JointCalcInput {
    t1: Vec<Vec<f64>>,
    t2: Vec<Vec<f64>>,
    f: BiScalarDoc,
    center: Option<[f64; 2]>,
    radius: Option<f64>,
}

#[derive(Serialize)]
struct JointCalcDiagnostics {
    imag_residue: f64,
    nodes: usize,
    center: [f64; 2],
    radius: f64,
}

const DEFAULT_GRID_RES: usize = 48;

fn cmd_joint_calc(input: JointCalcInput, opts: &Options) -> Outcome {
    let p = pair_of(&input.t1, &input.t2)?;
    let f = match &input.f {
        BiScalarDoc::Poly { terms } => BiScalar::Polynomial(
            terms
                .iter()
                .map(|t| BiTerm {
                    coeff: t.coeff.into(),
                    p1: t.p1,
                    p2: t.p2,
                })
                .collect(),
        ),
        BiScalarDoc::Separable { f, g } => BiScalar::Separable(f.build()?, g.build()?),
    };
    let res = opts.grid_res.unwrap_or(DEFAULT_GRID_RES);
    let grid = match (input.center, input.radius) {
        (Some(c), Some(r)) => SphereGrid::new((c[0], c[1]), r, res)?,
        (None, None) => SphereGrid::enclosing(&p, res)?,
        _ => {
            return Err(CliError::Parse(
                "give both `center` and `radius` or neither".into(),
            ))
        }
    };
    let r = martinelli_calculus(&f, &p, &grid)?;
    let diag = JointCalcDiagnostics {
        imag_residue: r.imag_residue,
        nodes: r.nodes,
        center: [grid.center.0, grid.center.1],
        radius: grid.radius,
    };
    Ok((
        to_value(&OpCalcOutput {
            value: r.value.rows(),
        })?,
        to_value(&diag)?,
    ))
}
