use std::io::{self, Write};

use clap::{Args, ValueEnum};
use densilab::lattice::classify::ScanRow;
use densilab::lattice::{
    classify_int2, corollary_d_check, predicted_root_of_identity, scan, DyadicClass, LatticeClassification,
    RootOfIdentity,
};
use densilab::spectral::SpectralDecomposition;
use densilab::{
    absolutize, check_lattice_condition, decide_equivalence, decompose, density_sweep, dyadic_class,
    exact_ealpha_ratio, is_expansive, is_positive, lattice::mra_equivalence_report_with, make_region, EquivalenceVerdict,
    Error, ExpansiveMap, IntMatrix, LimitClass, MraReport, MraStatus, Region, RegionDescriptor, SymMatrix,
};
use nalgebra::DMatrix;
use serde::Serialize;

use crate::config::{Config, Format};
use crate::input;
use crate::output::{self, float, float_list, opt_float};

#[derive(Debug)]
pub enum Failure {
    Core(Error),
    Io(io::Error),
}

impl Failure {
    pub fn code(&self) -> &'static str {
        match self {
            Failure::Core(e) => e.code(),
            Failure::Io(_) => "IoError",
        }
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Core(e) => e.fmt(f),
            Failure::Io(e) => e.fmt(f),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Io(e)
    }
}

/// Exit status of a command that ran to completion.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Outcome {
    Success,
    Negative,
}

type CmdResult = Result<Outcome, Failure>;

fn symmetric(arg: &str, cfg: &Config) -> Result<SymMatrix, Error> {
    SymMatrix::from_dmatrix(input::matrix(arg)?, cfg.tolerance)
}

fn columns(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.column_iter().map(|c| c.iter().copied().collect()).collect()
}

fn require_expansive(a: &SymMatrix, cfg: &Config) -> Result<(), Error> {
    if is_expansive(a) {
        return Ok(());
    }
    let min_modulus = decompose(a, cfg.tolerance)?.min_modulus();
    Err(Error::NotExpansive { min_modulus })
}

// analyze

#[derive(Serialize)]
struct AnalyzeReport {
    dim: usize,
    eigenvalues: Vec<f64>,
    distinct_eigenvalues: Vec<f64>,
    multiplicities: Vec<usize>,
    /// Orthonormal eigenvectors, one per entry.
    basis: Vec<Vec<f64>>,
    expansive: bool,
    positive: bool,
    lattice: bool,
}

impl AnalyzeReport {
    fn new(a: &SymMatrix, dec: SpectralDecomposition) -> Self {
        AnalyzeReport {
            dim: a.dim(),
            basis: columns(&dec.basis),
            eigenvalues: dec.eigenvalues,
            distinct_eigenvalues: dec.distinct_eigenvalues,
            multiplicities: dec.multiplicities,
            expansive: is_expansive(a),
            positive: is_positive(a),
            lattice: check_lattice_condition(a),
        }
    }

    fn pairs(&self) -> Vec<(&'static str, String)> {
        vec![
            ("dim", self.dim.to_string()),
            ("eigenvalues", float_list(&self.eigenvalues)),
            ("distinct_eigenvalues", float_list(&self.distinct_eigenvalues)),
            (
                "multiplicities",
                self.multiplicities.iter().map(|m| m.to_string()).collect::<Vec<_>>().join(" "),
            ),
            ("expansive", self.expansive.to_string()),
            ("positive", self.positive.to_string()),
            ("lattice", self.lattice.to_string()),
        ]
    }
}

pub fn analyze(out: &mut impl Write, cfg: &Config, matrix: &str) -> CmdResult {
    let a = symmetric(matrix, cfg)?;
    let report = AnalyzeReport::new(&a, decompose(&a, cfg.tolerance)?);
    match cfg.format {
        Format::Json => output::json(out, &report)?,
        Format::Csv => output::csv_pairs(out, &report.pairs())?,
        Format::Text => {
            output::text_pairs(out, &report.pairs())?;
            for (k, v) in report.basis.iter().enumerate() {
                writeln!(out, "basis[{k}]  {}", float_list(v))?;
            }
        }
    }
    Ok(Outcome::Success)
}

// equiv

#[derive(Serialize)]
struct EquivReport {
    #[serde(flatten)]
    verdict: EquivalenceVerdict,
    mra: MraReport,
}

fn status_name(s: &MraStatus) -> &'static str {
    match s {
        MraStatus::NotEquivalent { .. } => "NotEquivalent",
        MraStatus::EquivalentTrivially { .. } => "EquivalentTrivially",
        MraStatus::EquivalentNumericOnly { .. } => "EquivalentNumericOnly",
    }
}

impl EquivReport {
    fn pairs(&self) -> Vec<(&'static str, String)> {
        let v = &self.verdict;
        vec![
            ("equivalent", v.equivalent.to_string()),
            ("t", opt_float(v.exponent_t)),
            ("certification", format!("{:?}", v.certification)),
            ("obstruction", v.obstruction_text().unwrap_or_default()),
            ("lattice_ok", self.mra.lattice_ok.to_string()),
            ("mra_status", status_name(&self.mra.status).to_string()),
        ]
    }
}

pub fn equiv(out: &mut impl Write, cfg: &Config, first: &str, second: &str) -> CmdResult {
    let a1 = symmetric(first, cfg)?;
    let a2 = symmetric(second, cfg)?;
    if a1.dim() != a2.dim() {
        return Err(Error::DimensionMismatch {
            expected: a1.dim(),
            found: a2.dim(),
        }
        .into());
    }
    require_expansive(&a1, cfg)?;
    require_expansive(&a2, cfg)?;
    let verdict = decide_equivalence(&a1, &a2, cfg.tolerance)?;
    let report = EquivReport {
        mra: mra_equivalence_report_with(&a1, &a2, cfg.tolerance, cfg.search_bound, cfg.l_max),
        verdict,
    };
    match cfg.format {
        Format::Json => output::json(out, &report)?,
        Format::Csv => output::csv_pairs(out, &report.pairs())?,
        Format::Text => output::text_pairs(out, &report.pairs())?,
    }
    Ok(if report.verdict.equivalent {
        Outcome::Success
    } else {
        Outcome::Negative
    })
}

// density

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum SetKind {
    /// `|x_l| >= |x_i|^alpha`
    Ealpha,
    /// Cone of aperture `delta` around the least-expanding eigenspace
    Gdelta,
    Ball,
    Cube,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum WindowKind {
    /// `Q_1 = [-1, 1]^d`
    Cube,
    /// Unit ball
    Ball,
}

#[derive(Args, Debug)]
pub struct DensityArgs {
    /// Expansive map, inline ("2,0;0,4") or a JSON file
    #[arg(long)]
    pub matrix: String,
    /// Built-in witness set
    #[arg(long, value_enum, required_unless_present = "region", conflicts_with = "region")]
    pub set: Option<SetKind>,
    /// Region descriptor, inline JSON or a JSON file
    #[arg(long)]
    pub region: Option<String>,
    #[arg(long, default_value_t = 2.0)]
    pub alpha: f64,
    #[arg(long, default_value_t = 1.0)]
    pub delta: f64,
    /// Radius of the ball and cube sets
    #[arg(long, default_value_t = 0.5)]
    pub radius: f64,
    /// Base coordinate of E_alpha
    #[arg(long, default_value_t = 0)]
    pub i: usize,
    /// Dominating coordinate of E_alpha
    #[arg(long, default_value_t = 1)]
    pub l: usize,
    /// Sample the complement of the set
    #[arg(long)]
    pub complement: bool,
    #[arg(long, value_enum, default_value = "cube")]
    pub window: WindowKind,
    /// Add the closed-form quotient (E_alpha under a diagonal 2x2 map, cube window)
    #[arg(long)]
    pub exact: bool,
}

#[derive(Serialize)]
struct DensityRow {
    j: i32,
    ratio: f64,
    stderr: f64,
    samples: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    exact: Option<f64>,
}

#[derive(Serialize)]
struct DensityReport {
    set: RegionDescriptor,
    window: RegionDescriptor,
    seed: u64,
    estimates: Vec<DensityRow>,
    classification: LimitClass,
    note: String,
}

fn least_expanding_eigenspace(map: &DMatrix<f64>, cfg: &Config) -> Result<DMatrix<f64>, Error> {
    let a = SymMatrix::from_dmatrix(map.clone(), cfg.tolerance)?;
    // eigenvalues of |A| ascend, so the first eigenspace has the smallest modulus
    decompose(&absolutize(&a)?, cfg.tolerance).map(|d| d.eigenspace_basis(0))
}

fn build_set(args: &DensityArgs, map: &DMatrix<f64>, cfg: &Config) -> Result<Region, Error> {
    let dim = map.nrows();
    let set = match (&args.region, args.set) {
        (Some(r), _) => make_region(input::region(r)?)?,
        (None, Some(SetKind::Ealpha)) => Region::e_alpha_in(dim, args.alpha, args.i, args.l)?,
        (None, Some(SetKind::Gdelta)) => Region::g_delta(args.delta, &least_expanding_eigenspace(map, cfg)?)?,
        (None, Some(SetKind::Ball)) => Region::ball(dim, args.radius)?,
        (None, Some(SetKind::Cube)) => Region::cube(dim, args.radius)?,
        (None, None) => return Err(Error::BadParameter("one of --set or --region is required".into())),
    };
    Ok(if args.complement { set.complement() } else { set })
}

/// Closed-form quotients for the sampled set, one per `j`.
fn exact_column(args: &DensityArgs, map: &DMatrix<f64>, cfg: &Config) -> Result<Vec<f64>, Error> {
    let unsupported = |why: &str| Err(Error::BadParameter(format!("--exact {why}")));
    if args.set != Some(SetKind::Ealpha) || args.region.is_some() {
        return unsupported("needs --set ealpha");
    }
    if map.nrows() != 2 || map[(0, 1)] != 0.0 || map[(1, 0)] != 0.0 {
        return unsupported("needs a diagonal 2x2 map");
    }
    if args.window != WindowKind::Cube {
        return unsupported("needs the cube window");
    }
    let (li, ll) = (map[(args.i, args.i)].abs(), map[(args.l, args.l)].abs());
    (cfg.j_min..=cfg.j_max)
        .map(|j| {
            let c = exact_ealpha_ratio(li, ll, args.alpha, j)?;
            Ok(if args.complement { c } else { 1.0 - c })
        })
        .collect()
}

pub fn density(out: &mut impl Write, cfg: &Config, args: &DensityArgs) -> CmdResult {
    let m = input::matrix(&args.matrix)?;
    let map = ExpansiveMap::new(m.clone())?;
    let set = build_set(args, &m, cfg)?;
    let exact = if args.exact { Some(exact_column(args, &m, cfg)?) } else { None };
    let window = match args.window {
        WindowKind::Cube => Region::cube(map.dim(), 1.0)?,
        WindowKind::Ball => Region::ball(map.dim(), 1.0)?,
    };
    let series = density_sweep(&set, &map, &window, cfg.j_min..=cfg.j_max, cfg.samples, cfg.seed)?;
    let estimates: Vec<DensityRow> = series
        .estimates
        .iter()
        .enumerate()
        .map(|(k, e)| DensityRow {
            j: e.j,
            ratio: e.ratio,
            stderr: e.stderr,
            samples: e.samples,
            exact: exact.as_ref().map(|x| x[k]),
        })
        .collect();

    match cfg.format {
        Format::Json => output::json(
            out,
            &DensityReport {
                set: set.descriptor().clone(),
                window: window.descriptor().clone(),
                seed: cfg.seed,
                estimates,
                classification: series.classification,
                note: series.note,
            },
        )?,
        Format::Csv => {
            let mut header = vec!["j", "ratio", "stderr", "samples"];
            if exact.is_some() {
                header.push("exact");
            }
            let rows = estimates.iter().map(|r| {
                let mut row = vec![r.j.to_string(), float(r.ratio), float(r.stderr), r.samples.to_string()];
                if let Some(x) = r.exact {
                    row.push(float(x));
                }
                row
            });
            output::csv(out, &header, rows)?;
        }
        Format::Text => {
            for r in &estimates {
                write!(out, "j={:<3} ratio={} stderr={} samples={}", r.j, float(r.ratio), float(r.stderr), r.samples)?;
                if let Some(x) = r.exact {
                    write!(out, " exact={}", float(x))?;
                }
                writeln!(out)?;
            }
            writeln!(out, "classification: {:?} ({})", series.classification, series.note)?;
        }
    }
    Ok(Outcome::Success)
}

// classify

#[derive(Serialize)]
struct ClassifyReport {
    classification: Option<LatticeClassification>,
    /// Only for expanding maps with negative determinant.
    corollary_d: Option<bool>,
    predicted_root_of_identity: Option<RootOfIdentity>,
    dyadic: Option<DyadicClass>,
}

impl ClassifyReport {
    fn pairs(&self) -> Vec<(&'static str, String)> {
        let c = self.classification.as_ref();
        let show = |x: Option<String>| x.unwrap_or_default();
        vec![
            ("det", show(c.map(|c| c.det.to_string()))),
            ("trace", show(c.map(|c| c.trace.to_string()))),
            ("expanding", show(c.map(|c| c.expanding.to_string()))),
            ("class", show(c.and_then(|c| c.similarity_class).map(|s| s.label().to_string()))),
            ("conjugator", show(c.and_then(|c| c.conjugator.as_ref()).map(|m| m.to_string()))),
            ("l", show(c.and_then(|c| c.root_of_identity.as_ref()).map(|r| r.l.to_string()))),
            ("n", show(c.and_then(|c| c.root_of_identity.as_ref()).map(|r| r.n.to_string()))),
            ("corollary_d", show(self.corollary_d.map(|b| b.to_string()))),
            ("dyadic", show(self.dyadic.as_ref().map(|d| d.dyadic.to_string()))),
            ("dyadic_exponent", show(self.dyadic.as_ref().map(|d| opt_float(d.exponent)))),
        ]
    }
}

pub fn classify(out: &mut impl Write, cfg: &Config, matrix: &str) -> CmdResult {
    let m = input::matrix(matrix)?;
    let int2 = IntMatrix::from_dmatrix(&m).filter(|x| x.dim() == 2);
    let sym = SymMatrix::from_dmatrix(m, cfg.tolerance).ok().filter(is_expansive);
    if int2.is_none() && sym.is_none() {
        return Err(Error::BadParameter(
            "classify needs an integer 2x2 matrix or a symmetric expansive one".into(),
        )
        .into());
    }
    let (classification, corollary_d, predicted) = match &int2 {
        Some(x) => {
            let c = classify_int2(x, cfg.search_bound, cfg.l_max)?;
            let d = (c.expanding && c.det < 0.into()).then(|| corollary_d_check(x)).transpose()?;
            (Some(c), d, predicted_root_of_identity(x)?)
        }
        None => (None, None, None),
    };
    let report = ClassifyReport {
        classification,
        corollary_d,
        predicted_root_of_identity: predicted,
        dyadic: sym.as_ref().map(dyadic_class).transpose()?,
    };
    match cfg.format {
        Format::Json => output::json(out, &report)?,
        Format::Csv => output::csv_pairs(out, &report.pairs())?,
        Format::Text => output::text_pairs(out, &report.pairs())?,
    }
    Ok(Outcome::Success)
}

fn scan_record(r: &ScanRow) -> Vec<String> {
    let show = |x: Option<String>| x.unwrap_or_default();
    let mut row: Vec<String> = r.entries.iter().map(|e| e.to_string()).collect();
    row.extend([
        r.det.to_string(),
        r.trace.to_string(),
        show(r.class.map(|c| c.label().to_string())),
        show(r.conjugator_found.map(|b| b.to_string())),
        show(r.l.map(|l| l.to_string())),
        show(r.n.as_ref().map(|n| n.to_string())),
    ]);
    row
}

const SCAN_HEADER: [&str; 10] = ["a", "b", "c", "d", "det", "trace", "class", "conjugator_found", "l", "n"];

pub fn classify_scan(out: &mut impl Write, cfg: &Config, entry_bound: i64) -> CmdResult {
    if !(1..=20).contains(&entry_bound) {
        return Err(Error::BadParameter(format!("scan bound must lie in 1..=20, got {entry_bound}")).into());
    }
    let rows = scan(entry_bound, cfg.search_bound, cfg.l_max);
    match cfg.format {
        Format::Json => output::json(out, &rows)?,
        Format::Csv => output::csv(out, &SCAN_HEADER, rows.iter().map(scan_record))?,
        Format::Text => {
            writeln!(out, "{}", SCAN_HEADER.join(" "))?;
            for r in &rows {
                writeln!(out, "{}", scan_record(r).join(" "))?;
            }
        }
    }
    Ok(Outcome::Success)
}

// dyadic

pub fn dyadic(out: &mut impl Write, cfg: &Config, matrix: &str) -> CmdResult {
    let a = symmetric(matrix, cfg)?;
    let d = dyadic_class(&a)?;
    let pairs = [
        ("dyadic", d.dyadic.to_string()),
        ("exponent", opt_float(d.exponent)),
        ("certification", format!("{:?}", d.certification)),
    ];
    match cfg.format {
        Format::Json => output::json(out, &d)?,
        Format::Csv => output::csv_pairs(out, &pairs)?,
        Format::Text => output::text_pairs(out, &pairs)?,
    }
    Ok(Outcome::Success)
}
