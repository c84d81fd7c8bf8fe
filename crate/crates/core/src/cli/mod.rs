//! The `fekete-ca` command line.
//!
//! Every command renders its whole output before writing it, to standard
//! output or to `--out`. Exit codes: `0` success (or PROVED_SURJECTIVE),
//! `10` NONSURJECTIVE, `20` UNKNOWN, `1` subadditivity violations in
//! `fekete`, `2` usage and input errors.

mod description;
mod format;

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use thiserror::Error;

use crate::analysis::{
    lambda_estimate, loss, surjectivity_report, loss_threshold, AnalysisError, CountMethod,
    Counter, Limits, SurjectivityVerdict, ThresholdQuery,
};
use crate::counting::{self, verify_orphan, CountError, OrphanCertificate, DEFAULT_MAX_SUBSETS};
use crate::index::{maximum, MultiIndex};
use crate::subadditive::{
    check_subadditivity, fekete_limit_estimate, from_fn, CheckOptions, FeketeError, LowerEnd,
    SubadditiveFn, TableFn, Violation,
};

pub use description::{load_description, parse_description, Description, DescriptionError};
pub use format::{csv_field, parse_budget, parse_schedule, parse_sides_list, sig12};

#[derive(Debug, Parser)]
#[command(name = "fekete-ca", version, about = "Exact image counts, information loss and surjectivity of cellular automata")]
pub struct Cli {
    /// Seed for sampled subadditivity checks.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Write the output here instead of standard output.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct CountArgs {
    /// Maximum brute-force inputs per size, e.g. 2^30.
    #[arg(long, default_value = "2^30", value_parser = parse_budget)]
    pub budget: u64,
    /// auto, brute or transfer.
    #[arg(long, default_value = "auto")]
    pub method: CountMethod,
    /// Subset limit for the one-dimensional subset construction.
    #[arg(long, default_value_t = DEFAULT_MAX_SUBSETS)]
    pub max_subsets: usize,
}

impl CountArgs {
    fn limits(&self) -> Limits {
        Limits {
            budget: self.budget,
            max_subsets: self.max_subsets,
            method: self.method,
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Out_f, full size, ratio and loss per support size, as CSV.
    OutTable {
        /// Description file, or a builtin name (shift, and1d, xor1d, and2d).
        ca: String,
        /// Sides such as `1x1,2x2,3x3`.
        #[arg(long, conflicts_with = "max_sides", required_unless_present = "max_sides")]
        sides_list: Option<String>,
        /// Every box with sides up to N on each axis.
        #[arg(long)]
        max_sides: Option<u64>,
        #[command(flatten)]
        count: CountArgs,
    },
    /// Surjectivity verdict with an orphan certificate when one is found.
    Decide {
        ca: String,
        #[arg(long, default_value = "2^30", value_parser = parse_budget)]
        budget: u64,
        #[arg(long, default_value_t = DEFAULT_MAX_SUBSETS)]
        max_subsets: usize,
    },
    /// Bracket around the limit of log_q Out_f per unit volume.
    Lambda {
        ca: String,
        /// `diag:1..N`, `geom:R..MAX` or a sides list.
        #[arg(long)]
        schedule: String,
        #[command(flatten)]
        count: CountArgs,
    },
    /// Least size beyond which the loss exceeds a boundary term.
    Threshold {
        ca: String,
        #[arg(long, default_value_t = 0.0)]
        k: f64,
        /// Boundary sides, `x`-separated, zero allowed.
        #[arg(long)]
        r: String,
        /// Between the λ upper estimate and 1; midway by default.
        #[arg(long)]
        delta: Option<f64>,
        /// Search box sides.
        #[arg(long = "box")]
        search_box: MultiIndex,
        #[arg(long)]
        assume_nonsurjective: bool,
        #[command(flatten)]
        count: CountArgs,
    },
    /// Subadditivity check and limit estimate for a standalone function.
    Fekete {
        /// 3n, n+ceil-log2, n^2 or xy+x+y.
        #[arg(long, conflicts_with = "table", required_unless_present = "table")]
        function: Option<String>,
        /// TOML file with `dimension` and a `[values]` table keyed by sides.
        #[arg(long)]
        table: Option<PathBuf>,
        #[arg(long)]
        schedule: String,
    },
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Description(#[from] DescriptionError),
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
    #[error(transparent)]
    Count(#[from] CountError),
    #[error(transparent)]
    Fekete(#[from] FeketeError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

/// Rendered output of one invocation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Execution {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

pub fn execute<I, T>(args: I) -> Execution
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            let code = e.exit_code();
            return if code == 0 {
                Execution { code, stdout: text, stderr: String::new() }
            } else {
                Execution { code: 2, stdout: String::new(), stderr: text }
            };
        }
    };
    let out = cli.out.clone();
    match run(&cli) {
        Ok((code, text)) => match out {
            None => Execution { code, stdout: text, stderr: String::new() },
            Some(path) => match std::fs::write(&path, text) {
                Ok(()) => Execution { code, stdout: String::new(), stderr: String::new() },
                Err(e) => Execution {
                    code: 2,
                    stdout: String::new(),
                    stderr: format!("error: {}: {e}\n", path.display()),
                },
            },
        },
        Err(e) => Execution {
            code: 2,
            stdout: String::new(),
            stderr: format!("error: {e}\n"),
        },
    }
}

pub fn run(cli: &Cli) -> Result<(i32, String), CliError> {
    let check = CheckOptions {
        seed: cli.seed,
        ..CheckOptions::default()
    };
    match &cli.command {
        Command::OutTable { ca, sides_list, max_sides, count } => {
            let desc = load_description(ca)?;
            let dim = desc.ca.dim();
            let sizes = match (sides_list, max_sides) {
                (Some(list), _) => parse_sides_list(list, dim).map_err(CliError::Usage)?,
                (None, Some(n)) => MultiIndex::uniform(dim, *n)
                    .map_err(|e| CliError::Usage(format!("--max-sides: {e}")))?
                    .boxes_below(),
                (None, None) => unreachable!("clap requires one"),
            };
            Ok((0, out_table(&desc, &sizes, count.limits())))
        }
        Command::Decide { ca, budget, max_subsets } => {
            let desc = load_description(ca)?;
            let limits = Limits {
                budget: *budget,
                max_subsets: *max_subsets,
                method: CountMethod::Auto,
            };
            let verdict = surjectivity_report(&desc.ca, limits);
            Ok((verdict.exit_code(), decide_text(&desc, &verdict, *budget)))
        }
        Command::Lambda { ca, schedule, count } => {
            let desc = load_description(ca)?;
            let schedule = parse_schedule(schedule, desc.ca.dim()).map_err(CliError::Usage)?;
            lambda_text(&desc, &schedule, count.limits(), &check).map(|t| (0, t))
        }
        Command::Threshold { ca, k, r, delta, search_box, assume_nonsurjective, count } => {
            let desc = load_description(ca)?;
            let query = ThresholdQuery {
                k: *k,
                r: format::parse_naturals(r).map_err(CliError::Usage)?,
                delta: *delta,
                search_box: search_box.clone(),
                limits: count.limits(),
                assume_nonsurjective: *assume_nonsurjective,
            };
            threshold_text(&desc, &query).map(|t| (0, t))
        }
        Command::Fekete { function, table, schedule } => match (function, table) {
            (Some(name), _) => {
                let f = builtin_function(name)?;
                fekete_text(f.as_ref(), schedule, &check)
            }
            (None, Some(path)) => {
                let f = load_table(path)?;
                fekete_text(&f, schedule, &check)
            }
            (None, None) => unreachable!("clap requires one"),
        },
    }
}

fn header_sides(dim: usize) -> Vec<String> {
    (1..=dim).map(|i| format!("x{i}")).collect()
}

fn sides_cells(x: &MultiIndex) -> Vec<String> {
    x.coords().iter().map(u64::to_string).collect()
}

fn out_table(desc: &Description, sizes: &[MultiIndex], limits: Limits) -> String {
    let counter = Counter::new(&desc.ca, limits);
    if desc.ca.dim() == 1 {
        if let Some(n) = sizes.iter().map(|x| x.get(0)).max() {
            // a transfer failure resurfaces per row
            let _ = counter.prefetch(n);
        }
    }
    let mut text = String::new();
    if let Some(line) = desc.label_line() {
        let _ = writeln!(text, "# {line}");
    }
    let mut header = header_sides(desc.ca.dim());
    header.extend(["out_size", "full_size", "ratio", "lambda_qits", "note"].map(String::from));
    let _ = writeln!(text, "{}", header.join(","));
    for x in sizes {
        let mut row = sides_cells(x);
        match counter.out(x) {
            Ok(record) => {
                let l = loss(&record);
                row.extend([
                    record.out_size.to_string(),
                    record.full_size.to_string(),
                    sig12(l.ratio),
                    sig12(l.lambda_loss),
                    String::new(),
                ]);
            }
            Err(e) => row.extend([
                String::new(),
                counting::full_size(desc.ca.states(), x).to_string(),
                String::new(),
                String::new(),
                csv_field(&format!("refused: {e}")),
            ]),
        }
        let _ = writeln!(text, "{}", row.join(","));
    }
    text
}

fn certificate_block(cert: &OrphanCertificate) -> String {
    let wide = cert.pattern.states() > 10;
    let mut text = String::from("```\n");
    let sides: Vec<String> = sides_cells(cert.sides());
    let _ = writeln!(text, "sides: {}", sides.join(" x "));
    for row in cert.pattern.rows() {
        let cells: Vec<String> = row.iter().map(u32::to_string).collect();
        let _ = writeln!(text, "{}", cells.join(if wide { " " } else { "" }));
    }
    let _ = writeln!(text, "code: {}", cert.code());
    text.push_str("```\n");
    text
}

fn decide_text(desc: &Description, verdict: &SurjectivityVerdict, budget: u64) -> String {
    let mut text = format!("verdict: {verdict}\n");
    if let Some(line) = desc.label_line() {
        let _ = writeln!(text, "{line}");
    }
    match verdict {
        SurjectivityVerdict::ProvedSurjective { subsets } => {
            let _ = writeln!(text, "method: subset construction, {subsets} subsets, empty set unreachable");
        }
        SurjectivityVerdict::Nonsurjective { certificate } => {
            text.push_str(&certificate_block(certificate));
            let check = match verify_orphan(&desc.ca, certificate, budget) {
                Ok(true) => "verified: no preimage on E+N by enumeration".to_string(),
                Ok(false) => "verified: FAILED, pattern has a preimage".to_string(),
                Err(e) => format!("verified: skipped ({e})"),
            };
            let _ = writeln!(text, "{check}");
        }
        SurjectivityVerdict::Unknown { cleared, budget, reason } => {
            let _ = writeln!(text, "reason: {reason}");
            let _ = writeln!(text, "budget: {budget}");
            let _ = writeln!(text, "cleared frontier (no orphan on any box below these):");
            for b in cleared {
                let _ = writeln!(text, "  {b}");
            }
        }
    }
    text
}

fn lambda_text(
    desc: &Description,
    schedule: &[MultiIndex],
    limits: Limits,
    check: &CheckOptions,
) -> Result<String, CliError> {
    let est = lambda_estimate(&desc.ca, schedule, limits, check)?;
    let b = &est.bracket;
    let mut text = format!("bracket: [{:.6}, {:.6}]\n", b.lower, b.upper);
    let lower = match b.lower_end {
        LowerEnd::Extrapolated(v) => format!("doubling extrapolation at {} ({})", b.estimate.last_box, sig12(v)),
        LowerEnd::Trivial => "0 (no extrapolation available)".to_string(),
        LowerEnd::Discarded(v) => format!(
            "0 (doubling extrapolation {} at {} exceeds the upper end; sizes too small)",
            sig12(v),
            b.estimate.last_box
        ),
    };
    let _ = writeln!(text, "lower: {lower}");
    let _ = writeln!(text, "upper: least ratio, at {}", b.estimate.argmin);
    let s = &est.subadditivity;
    let _ = writeln!(
        text,
        "subadditivity: {} ({} {} triples tested, {} skipped, seed {})",
        if s.passed() { "passed" } else { "VIOLATED" },
        if s.exhaustive { "exhaustive," } else { "sampled," },
        s.tested,
        s.skipped,
        s.seed
    );
    for v in &s.violations {
        let _ = writeln!(text, "  {}", violation_line(v));
    }
    if est.is_partial() {
        let _ = writeln!(text, "partial: {} sizes refused", est.refused.len());
        for (x, reason) in &est.refused {
            let _ = writeln!(text, "  {x}: {reason}");
        }
    }
    text.push('\n');
    let mut header = header_sides(desc.ca.dim());
    header.extend(["out_size", "ratio", "lambda_qits"].map(String::from));
    let _ = writeln!(text, "{}", header.join(","));
    for r in &est.records {
        let mut row = sides_cells(&r.sides);
        row.extend([r.out_size.to_string(), sig12(r.ratio), sig12(r.lambda_loss)]);
        let _ = writeln!(text, "{}", row.join(","));
    }
    Ok(text)
}

fn threshold_text(desc: &Description, query: &ThresholdQuery) -> Result<String, CliError> {
    let report = loss_threshold(&desc.ca, query)?;
    let show = |t: &Option<MultiIndex>| t.as_ref().map_or("none in box".to_string(), |t| t.to_string());
    let r: Vec<String> = report.r.iter().map(u64::to_string).collect();
    let mut text = String::new();
    let _ = writeln!(text, "k: {}", sig12(report.k));
    let _ = writeln!(text, "r: {}", r.join("x"));
    let _ = writeln!(text, "delta: {}", sig12(report.delta));
    let _ = writeln!(text, "lambda_upper: {}", sig12(report.lambda_upper));
    let _ = writeln!(text, "box: {}", report.search_box);
    let _ = writeln!(text, "threshold: {}", show(&report.threshold));
    let _ = writeln!(text, "proof_threshold: {}", show(&report.proof_threshold));
    text.push('\n');
    let mut header = header_sides(desc.ca.dim());
    header.extend(["lambda_qits", "required", "holds"].map(String::from));
    let _ = writeln!(text, "{}", header.join(","));
    for c in &report.checked_region {
        let mut row = sides_cells(&c.x);
        row.extend([sig12(c.loss), sig12(c.required), c.holds.to_string()]);
        let _ = writeln!(text, "{}", row.join(","));
    }
    Ok(text)
}

fn violation_line(v: &Violation) -> String {
    match v {
        Violation::Inequality { axis, x, y, lhs, rhs } => {
            let joined = x.with_coord(*axis, x.get(*axis) + y);
            let part = x.with_coord(*axis, *y);
            format!(
                "axis {}: f({joined}) = {} > f({x}) + f({part}) = {}",
                axis + 1,
                sig12(*lhs),
                sig12(*rhs)
            )
        }
        Violation::Negative { at, value } => format!("f({at}) = {} < 0", sig12(*value)),
    }
}

pub const FUNCTION_NAMES: [&str; 4] = ["3n", "n+ceil-log2", "n^2", "xy+x+y"];

fn builtin_function(name: &str) -> Result<Box<dyn SubadditiveFn>, CliError> {
    Ok(match name {
        "3n" => Box::new(from_fn(1, |x| 3.0 * x[0] as f64)),
        // ⌈log2(n+1)⌉ is the bit length of n
        "n+ceil-log2" => Box::new(from_fn(1, |x| x[0] as f64 + (64 - x[0].leading_zeros()) as f64)),
        "n^2" => Box::new(from_fn(1, |x| (x[0] * x[0]) as f64)),
        "xy+x+y" => Box::new(from_fn(2, |x| (x[0] * x[1] + x[0] + x[1]) as f64)),
        other => {
            return Err(CliError::Usage(format!(
                "unknown function `{other}` (known: {})",
                FUNCTION_NAMES.join(", ")
            )))
        }
    })
}

fn load_table(path: &PathBuf) -> Result<TableFn, CliError> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.clone(),
        source,
    })?;
    parse_table(&text).map_err(|m| CliError::Usage(format!("{}: {m}", path.display())))
}

/// `dimension = d` and `[values]` with keys like `2x3 = 5.0`.
pub fn parse_table(text: &str) -> Result<TableFn, String> {
    let doc: toml::Table = text.parse().map_err(|e: toml::de::Error| e.message().to_string())?;
    let dim = doc
        .get("dimension")
        .and_then(toml::Value::as_integer)
        .filter(|&d| d >= 1)
        .ok_or("dimension: expected a positive integer")? as usize;
    let values = doc
        .get("values")
        .and_then(toml::Value::as_table)
        .ok_or("values: expected a table")?;
    let mut table = TableFn::new(dim);
    for (key, value) in values {
        let x: MultiIndex = key.parse().map_err(|e| format!("values.{key}: {e}"))?;
        let v = value
            .as_float()
            .or_else(|| value.as_integer().map(|i| i as f64))
            .ok_or_else(|| format!("values.{key}: expected a number"))?;
        table.insert(x, v).map_err(|e| format!("values.{key}: {e}"))?;
    }
    Ok(table)
}

fn fekete_text(
    f: &dyn SubadditiveFn,
    schedule: &str,
    check: &CheckOptions,
) -> Result<(i32, String), CliError> {
    let schedule = parse_schedule(schedule, f.dim()).map_err(CliError::Usage)?;
    let check_box = schedule
        .iter()
        .skip(1)
        .try_fold(schedule[0].clone(), |acc, x| acc.join(x))
        .map_err(|e| CliError::Usage(e.to_string()))?;
    let report = check_subadditivity(f, &check_box, check)?;
    let mut text = String::new();
    let _ = writeln!(
        text,
        "violations: {} ({} {} of {} triples in box {}, {} skipped, seed {})",
        report.violations.len(),
        if report.exhaustive { "exhaustive," } else { "sampled," },
        report.tested,
        report.total_triples,
        check_box,
        report.skipped,
        report.seed
    );
    for v in &report.violations {
        let _ = writeln!(text, "  {}", violation_line(v));
    }
    if !report.passed() {
        text.push_str("estimate: suppressed, the function is not subadditive\n");
        return Ok((1, text));
    }
    let base = maximum(&schedule).unwrap_or_else(|| schedule.iter().max().expect("nonempty")).clone();
    let bracket = fekete_limit_estimate(f, &base, &schedule)?;
    let est = &bracket.estimate;
    let _ = writeln!(text, "running_inf: {} at {}", sig12(est.running_inf), est.argmin);
    let _ = writeln!(text, "last_ratio: {} at {}", sig12(est.last_ratio), est.last_box);
    let _ = writeln!(text, "bracket: [{}, {}]", sig12(bracket.lower), sig12(bracket.upper));
    text.push('\n');
    let mut header = header_sides(f.dim());
    header.extend(["ratio", "running_inf"].map(String::from));
    let _ = writeln!(text, "{}", header.join(","));
    for ((x, ratio), inf) in est.ratios.iter().zip(est.trace()) {
        let mut row = sides_cells(x);
        row.extend([sig12(*ratio), sig12(inf)]);
        let _ = writeln!(text, "{}", row.join(","));
    }
    Ok((0, text))
}
