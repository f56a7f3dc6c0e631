//! Command-line front end.
//!
//! Every subcommand produces a [`Table`]: a metadata block (tool version,
//! command, validated configuration, seed, RNG algorithm) followed by typed
//! rows, written as CSV with `#`-prefixed metadata lines or as a single JSON
//! object `{meta, columns, rows}`. Worker count and output path are not part
//! of the metadata, so output bytes depend only on configuration and seed.
//!
//! Exit codes: 0 success, 2 usage or validation error, 3 exhaustion or
//! resource error.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use crate::affine::{angle_gap_distribution, sqrt_mod1_gaps, AffineLattice};
use crate::bcz::{orbit, TransversalPoint};
use crate::error::{Error, Result};
use crate::farey::{farey_gaps, farey_size};
use crate::geometry::Vec2;
use crate::hall::{HallDist, Scaling};
use crate::lattice::{poisson_baseline, slope_gaps_fast, slope_gaps_oracle, UnimodularLattice};
use crate::scalar::{FieldScalar, Fraction, Scalar};
use crate::stats::{ecdf, ks_distance, ks_two_sample, SeededRng};
use crate::surface::{golden_l, l_shape, TranslationSurface};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_RESOURCE: i32 = 3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Parser)]
#[command(name = "gapkit", version, about = "Gap distributions of planar point sets")]
pub struct Cli {
    /// Output format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    /// Write to this file instead of standard output.
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true, env = "GAPKIT_THREADS")]
    pub workers: Option<usize>,
    /// Seed for every random choice.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Normalized Farey gaps N(Q)/(q q') of level Q.
    FareyGaps(FareyArgs),
    /// Orbit of the BCZ map with its return times.
    BczOrbit(BczArgs),
    /// Hall's limiting CDF and density on a grid.
    Hall(HallArgs),
    /// Slope gaps of a seeded generic lattice in the strip of width eta.
    LatticeGaps(LatticeArgs),
    /// Normalized direction gaps of Z² + shift in a ball.
    AffineAngles(AffineArgs),
    /// Empirical distribution of thinning-wedge counts.
    WedgeP(WedgeArgs),
    /// Normalized gaps of the fractional parts of √k, k ≤ n.
    Sqrtn(SqrtArgs),
    /// Saddle-connection holonomies of an L-shaped surface.
    SurfaceSc(SurfaceArgs),
    /// Exponential gaps of a Poisson process.
    BaselinePoisson(PoissonArgs),
    /// Kolmogorov–Smirnov distance between a data column and a reference.
    Compare(CompareArgs),
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct FareyArgs {
    #[arg(long)]
    pub q: u32,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct BczArgs {
    /// First coordinate (decimal or p/q).
    #[arg(long, allow_hyphen_values = true)]
    pub a: String,
    #[arg(long, allow_hyphen_values = true)]
    pub b: String,
    #[arg(long, default_value = "1")]
    pub eta: String,
    #[arg(long)]
    pub steps: usize,
    /// Use exact rational arithmetic.
    #[arg(long)]
    pub exact: bool,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct HallArgs {
    #[arg(long, default_value = "farey")]
    pub scaling: String,
    #[arg(long, default_value_t = 501)]
    pub grid: usize,
    #[arg(long, default_value_t = 5.0)]
    pub t_max: f64,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct LatticeArgs {
    #[arg(long)]
    pub count: usize,
    #[arg(long, default_value_t = 1.0)]
    pub eta: f64,
    /// Enumerate the strip directly instead of running the BCZ map.
    #[arg(long)]
    pub oracle: bool,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct AffineArgs {
    /// Shift "x,y".
    #[arg(long, allow_hyphen_values = true)]
    pub shift: String,
    #[arg(long)]
    pub radius: f64,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct WedgeArgs {
    #[arg(long)]
    pub sigma: f64,
    #[arg(long)]
    pub radius: f64,
    #[arg(long)]
    pub samples: usize,
    /// Shift "x,y" of Z²; a seeded generic affine lattice when omitted.
    #[arg(long, allow_hyphen_values = true)]
    pub shift: Option<String>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SqrtArgs {
    #[arg(long)]
    pub n: u64,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SurfaceArgs {
    /// "golden" or "l:ALPHA,BETA".
    #[arg(long, default_value = "golden")]
    pub shape: String,
    #[arg(long)]
    pub radius: f64,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct PoissonArgs {
    #[arg(long)]
    pub n: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum RefCdf {
    /// Hall's law in the Farey normalization.
    Hall,
    /// Hall's law for unit-strip slope gaps.
    HallUnnormalized,
    /// 1 − e^{−t}.
    Exp,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct CompareArgs {
    #[arg(long)]
    pub left: PathBuf,
    #[arg(long)]
    pub right: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub cdf: Option<RefCdf>,
    /// Column holding the samples.
    #[arg(long, default_value = "gap")]
    pub column: String,
}

/// One output value.
#[derive(Clone, Debug, PartialEq)]
pub enum Cell {
    Int(i64),
    Float(f64),
    Text(String),
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Int(i) => i.to_string(),
            Cell::Float(x) => x.to_string(),
            Cell::Text(s) => s.clone(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Int(i) => json!(i),
            Cell::Float(x) => json!(x),
            Cell::Text(s) => json!(s),
        }
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Float(v)
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}

/// Result of a subcommand, before serialization.
#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub meta: BTreeMap<String, Value>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    fn new(columns: &[&str]) -> Self {
        Table { meta: BTreeMap::new(), columns: columns.iter().map(|c| c.to_string()).collect(), rows: Vec::new() }
    }

    fn push(&mut self, row: Vec<Cell>) {
        self.rows.push(row);
    }

    fn note(&mut self, key: &str, value: Value) {
        self.meta.insert(key.to_string(), value);
    }

    pub fn to_csv(&self) -> Result<Vec<u8>> {
        let mut out = Vec::new();
        for (k, v) in &self.meta {
            let text = match v {
                Value::String(s) => s.clone(),
                other => other.to_string(),
            };
            writeln!(out, "# {k}: {text}").expect("write to memory");
        }
        let mut w = csv::Writer::from_writer(out);
        let fail = |e: csv::Error| Error::InvalidState(format!("csv: {e}"));
        w.write_record(&self.columns).map_err(fail)?;
        for r in &self.rows {
            w.write_record(r.iter().map(Cell::csv)).map_err(fail)?;
        }
        w.into_inner().map_err(|e| Error::InvalidState(format!("csv: {e}")))
    }

    pub fn to_json(&self) -> Vec<u8> {
        let rows: Vec<Value> = self.rows.iter().map(|r| Value::Array(r.iter().map(Cell::json).collect())).collect();
        let doc = json!({ "meta": self.meta, "columns": self.columns, "rows": rows });
        let mut s = serde_json::to_vec_pretty(&doc).expect("json values serialize");
        s.push(b'\n');
        s
    }
}

fn command_name(c: &Command) -> &'static str {
    match c {
        Command::FareyGaps(_) => "farey-gaps",
        Command::BczOrbit(_) => "bcz-orbit",
        Command::Hall(_) => "hall",
        Command::LatticeGaps(_) => "lattice-gaps",
        Command::AffineAngles(_) => "affine-angles",
        Command::WedgeP(_) => "wedge-p",
        Command::Sqrtn(_) => "sqrtn",
        Command::SurfaceSc(_) => "surface-sc",
        Command::BaselinePoisson(_) => "baseline-poisson",
        Command::Compare(_) => "compare",
    }
}

/// Parses `p/q`, an integer or a finite decimal into an exact fraction.
pub fn parse_fraction(s: &str) -> Result<Fraction> {
    let s = s.trim();
    let bad = || Error::invalid(format!("cannot read '{s}' as an exact number"));
    if let Some((p, q)) = s.split_once('/') {
        let p: i64 = p.trim().parse().map_err(|_| bad())?;
        let q: i64 = q.trim().parse().map_err(|_| bad())?;
        if q == 0 {
            return Err(Error::invalid("zero denominator"));
        }
        return Ok(Fraction::new(p, q));
    }
    let (neg, body) = match s.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, s.strip_prefix('+').unwrap_or(s)),
    };
    let (int, dec) = body.split_once('.').unwrap_or((body, ""));
    if int.is_empty() && dec.is_empty() {
        return Err(bad());
    }
    if !int.chars().chain(dec.chars()).all(|c| c.is_ascii_digit()) || dec.len() > 15 {
        return Err(bad());
    }
    let digits = format!("{int}{dec}");
    let num: i64 = if digits.is_empty() { 0 } else { digits.parse().map_err(|_| bad())? };
    let den = 10i64.checked_pow(dec.len() as u32).ok_or_else(bad)?;
    let f = Fraction::new(num, den);
    Ok(if neg { -f } else { f })
}

fn parse_f64(s: &str) -> Result<f64> {
    if s.contains('/') {
        return Ok(parse_fraction(s)?.to_f64());
    }
    let v: f64 = s.trim().parse().map_err(|_| Error::invalid(format!("cannot read '{s}' as a number")))?;
    if !v.is_finite() {
        return Err(Error::invalid(format!("'{s}' is not finite")));
    }
    Ok(v)
}

fn parse_pair(s: &str) -> Result<(f64, f64)> {
    let (x, y) = s
        .split_once(',')
        .ok_or_else(|| Error::invalid(format!("expected \"x,y\", got '{s}'")))?;
    Ok((parse_f64(x)?, parse_f64(y)?))
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(format!("{name} must be positive")))
    }
}

fn gap_table(gaps: impl IntoIterator<Item = f64>) -> Table {
    let mut t = Table::new(&["index", "gap"]);
    for (i, g) in gaps.into_iter().enumerate() {
        t.push(vec![i.into(), g.into()]);
    }
    t
}

fn bcz_table<T: FieldScalar + std::fmt::Display>(start: TransversalPoint<T>, steps: usize) -> Result<Table> {
    let o = orbit(&start, steps, true)?;
    let mut t = Table::new(&["step", "a", "b", "roof"]);
    for (i, (p, r)) in o.points.iter().zip(&o.returns).enumerate() {
        let cell = |x: &T| if T::EXACT { Cell::Text(x.to_string()) } else { Cell::Float(x.to_f64()) };
        t.push(vec![i.into(), cell(p.a()), cell(p.b()), cell(r)]);
    }
    t.note("period", o.period.map_or(Value::Null, |p| json!(p)));
    Ok(t)
}

fn surface_table<T: FieldScalar + std::fmt::Display>(s: &TranslationSurface<T>, r: f64) -> Result<Table> {
    let h = s.holonomies(r)?;
    let mut t = Table::new(&["index", "x", "y", "length", "angle", "x_exact", "y_exact"]);
    for (i, v) in h.iter().enumerate() {
        let f = v.to_f64();
        t.push(vec![
            i.into(),
            f.x.into(),
            f.y.into(),
            f.norm_sq().sqrt().into(),
            v.angle().into(),
            Cell::Text(v.x.to_string()),
            Cell::Text(v.y.to_string()),
        ]);
    }
    t.note("count", json!(h.len()));
    Ok(t)
}

fn read_column(path: &PathBuf, column: &str) -> Result<Vec<f64>> {
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_path(path)
        .map_err(|e| Error::invalid(format!("cannot read {}: {e}", path.display())))?;
    let headers = rdr.headers().map_err(|e| Error::invalid(format!("{}: {e}", path.display())))?.clone();
    let idx = headers
        .iter()
        .position(|h| h == column)
        .ok_or_else(|| Error::invalid(format!("{} has no column '{column}'", path.display())))?;
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| Error::invalid(format!("{}: {e}", path.display())))?;
        let field = rec.get(idx).ok_or_else(|| Error::invalid("short row"))?;
        out.push(parse_f64(field)?);
    }
    Ok(out)
}

/// Runs a parsed command.
pub fn execute(cli: &Cli) -> Result<Table> {
    let seed = cli.seed;
    let mut table = match &cli.command {
        Command::FareyGaps(a) => {
            let g = farey_gaps(a.q)?;
            let mut t = Table::new(&["index", "gap_exact", "gap"]);
            for (i, x) in g.iter().enumerate() {
                t.push(vec![i.into(), Cell::Text(x.to_string()), x.to_f64().into()]);
            }
            t.note("gap_count", json!(farey_size(a.q)));
            t
        }
        Command::BczOrbit(a) => {
            if a.exact {
                let p = TransversalPoint::new(parse_fraction(&a.a)?, parse_fraction(&a.b)?, parse_fraction(&a.eta)?)?;
                bcz_table(p, a.steps)?
            } else {
                let p = TransversalPoint::new(parse_f64(&a.a)?, parse_f64(&a.b)?, parse_f64(&a.eta)?)?;
                bcz_table(p, a.steps)?
            }
        }
        Command::Hall(a) => {
            let scaling: Scaling = a.scaling.parse()?;
            let d = HallDist::new(scaling);
            let mut t = Table::new(&["t", "cdf", "pdf"]);
            for (x, c, p) in d.tabulate(a.grid, a.t_max)? {
                t.push(vec![x.into(), c.into(), p.into()]);
            }
            let (k1, k2) = d.kinks();
            t.note("kinks", json!([k1, k2]));
            t
        }
        Command::LatticeGaps(a) => {
            positive("eta", a.eta)?;
            let l = UnimodularLattice::generic(seed)?;
            let g = if a.oracle {
                slope_gaps_oracle(&l, a.eta, a.count)?
            } else {
                slope_gaps_fast(&l, a.eta, a.count)?
            };
            let mut t = gap_table(g.gaps);
            t.note("lattice", json!(l.tag()));
            t
        }
        Command::AffineAngles(a) => {
            positive("radius", a.radius)?;
            let (x, y) = parse_pair(&a.shift)?;
            let l = AffineLattice::integer_shifted(Vec2::new(x, y))?;
            let d = angle_gap_distribution(&l, a.radius)?;
            gap_table(d.samples().iter().copied())
        }
        Command::WedgeP(a) => {
            positive("sigma", a.sigma)?;
            positive("radius", a.radius)?;
            let l = match &a.shift {
                Some(s) => {
                    let (x, y) = parse_pair(s)?;
                    AffineLattice::integer_shifted(Vec2::new(x, y))?
                }
                None => AffineLattice::generic(seed)?,
            };
            let stats = l.empirical_p(a.sigma, a.radius, a.samples, SeededRng::new(seed).split(7).seed())?;
            let mut t = Table::new(&["i", "count", "fraction"]);
            for (i, (&c, f)) in stats.counts.iter().zip(stats.fractions()).enumerate() {
                t.push(vec![i.into(), Cell::Int(c as i64), f.into()]);
            }
            t
        }
        Command::Sqrtn(a) => gap_table(sqrt_mod1_gaps(a.n)?.gaps),
        Command::SurfaceSc(a) => {
            positive("radius", a.radius)?;
            if a.shape == "golden" {
                surface_table(&golden_l(), a.radius)?
            } else if let Some(dims) = a.shape.strip_prefix("l:") {
                let (al, be) = parse_pair(dims)?;
                surface_table(&l_shape(al, be)?, a.radius)?
            } else {
                return Err(Error::invalid(format!("unknown shape '{}'", a.shape)));
            }
        }
        Command::BaselinePoisson(a) => gap_table(poisson_baseline(a.n, seed).gaps),
        Command::Compare(a) => {
            let left = ecdf(read_column(&a.left, &a.column)?)?;
            let (reference, ks, n_right) = match (&a.right, a.cdf) {
                (Some(r), None) => {
                    let right = ecdf(read_column(r, &a.column)?)?;
                    ("two-sample".to_string(), ks_two_sample(&left, &right), right.len())
                }
                (None, Some(c)) => {
                    let ks = match c {
                        RefCdf::Hall => ks_distance(&left, |t| HallDist::new(Scaling::FareyNormalized).cdf(t)),
                        RefCdf::HallUnnormalized => ks_distance(&left, |t| HallDist::new(Scaling::Unnormalized).cdf(t)),
                        RefCdf::Exp => ks_distance(&left, |t| if t <= 0.0 { 0.0 } else { 1.0 - (-t).exp() }),
                    };
                    let name = serde_json::to_value(c).expect("enum serializes");
                    (name.as_str().unwrap_or_default().to_string(), ks, 0)
                }
                _ => return Err(Error::invalid("give exactly one of --right and --cdf")),
            };
            let mut t = Table::new(&["reference", "n_left", "n_right", "ks"]);
            t.push(vec![Cell::Text(reference), left.len().into(), n_right.into(), ks.into()]);
            t
        }
    };
    table.note("tool", json!(format!("gapkit {}", env!("CARGO_PKG_VERSION"))));
    table.note("command", json!(command_name(&cli.command)));
    table.note("config", serde_json::to_value(&cli.command).expect("arguments serialize"));
    table.note("seed", json!(seed));
    table.note("rng", json!(SeededRng::ALGORITHM));
    Ok(table)
}

fn exit_code(e: &Error) -> i32 {
    if e.is_resource() {
        EXIT_RESOURCE
    } else {
        EXIT_USAGE
    }
}

fn emit(cli: &Cli, table: &Table) -> Result<()> {
    let bytes = match cli.format {
        Format::Csv => table.to_csv()?,
        Format::Json => table.to_json(),
    };
    match &cli.output {
        Some(p) => std::fs::write(p, bytes)
            .map_err(|e| Error::invalid(format!("cannot write {}: {e}", p.display()))),
        None => std::io::stdout()
            .write_all(&bytes)
            .map_err(|e| Error::InvalidState(format!("stdout: {e}"))),
    }
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(w) = cli.workers {
        if w == 0 {
            eprintln!("error: --workers must be at least 1");
            return EXIT_USAGE;
        }
        pool = pool.num_threads(w);
    }
    let pool = match pool.build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: cannot start worker pool: {e}");
            return EXIT_RESOURCE;
        }
    };
    match pool.install(|| execute(&cli)).and_then(|t| emit(&cli, &t)) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
