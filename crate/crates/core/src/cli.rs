//! Command-line front end.
//!
//! Exit codes:
//! - 0: success
//! - 1: usage error or invalid input
//! - 2: the request is outside the domain of the formulas
//! - 3: a data file (embedded table or points file) could not be parsed
//! - 4: verification failed (table mismatch or evaluator disagreement)

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::factored::FactoredNumber;
use crate::fibre::{component_count, FibreError};
use crate::heegner::{classify_pair, Discriminant, Level, PairTag};
use crate::intersection::{s_set, IntersectionError};
use crate::padic_model::{solve_query, ModelQuery};
use crate::table::{
    check_entries, evaluate, Color, Dataset, EntryReport, EvalError, Outcome, TableSummary, Via,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_REJECTED: i32 = 2;
pub const EXIT_DATA: i32 = 3;
pub const EXIT_MISMATCH: i32 = 4;

#[derive(Debug, Parser)]
#[command(
    name = "cartan",
    version,
    about = "Intersection numbers of Heegner divisors on mixed Cartan modular curves"
)]
pub struct Cli {
    /// Output format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    pub format: Format,
    /// Worker threads for table checks (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Json,
    Csv,
}

#[derive(Debug, Args)]
pub struct PairArgs {
    #[arg(long, allow_negative_numbers = true)]
    pub d1: i64,
    #[arg(long, allow_negative_numbers = true)]
    pub d2: i64,
    /// Split part of the level.
    #[arg(long, default_value_t = 1)]
    pub spl: u64,
    /// Non-split part of the level.
    #[arg(long, default_value_t = 1)]
    pub ns: u64,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Intersection number of two Heegner divisors.
    Intersect {
        #[command(flatten)]
        pair: PairArgs,
        #[arg(long, value_enum, default_value_t = Via::Formula)]
        via: Via,
    },
    /// Recompute the embedded reference table.
    TableCheck {
        /// A prime, or `all`.
        #[arg(long, default_value = "all")]
        p: String,
        /// Comma-separated colours to include.
        #[arg(long, value_enum, value_delimiter = ',', default_values_t = [Color::Blue, Color::Green, Color::Red, Color::Black])]
        colors: Vec<Color>,
        #[arg(long, value_enum, default_value_t = Via::Both)]
        via: Via,
    },
    /// Classify a pair of discriminants at a level.
    Classify {
        #[command(flatten)]
        pair: PairArgs,
    },
    /// Components of the special fibre of X_ns^+(p^n).
    Components {
        #[arg(long)]
        p: u64,
        #[arg(long, default_value_t = 1)]
        n: u32,
    },
    /// The set S(a, b) of positive (a - x^2) / 4b.
    SSet {
        #[arg(long)]
        a: u64,
        #[arg(long)]
        b: u64,
    },
    /// Solve a batch of model-finding queries from a JSON file.
    P1Model {
        #[arg(long)]
        file: PathBuf,
    },
}

/// One evaluated pair, as printed by `intersect`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRecord {
    pub d1: i64,
    pub d2: i64,
    pub n_spl: u64,
    pub n_ns: u64,
    pub classification: PairTag,
    pub exponents: FactoredNumber,
    /// `sum e_q log q`.
    pub log_value: f64,
    pub evaluator: Via,
}

impl ResultRecord {
    pub const CSV_HEADER: &'static str =
        "d1,d2,n_spl,n_ns,classification,exponents,log_value,evaluator";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{}",
            self.d1,
            self.d2,
            self.n_spl,
            self.n_ns,
            self.classification,
            self.exponents,
            self.log_value,
            self.evaluator
        )
    }
}

#[derive(Debug, Serialize)]
struct TableReport<'a> {
    entries: &'a [EntryReport],
    summary: TableSummary,
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let rendered = e.render().to_string();
            let _ = if e.use_stderr() {
                write!(err, "{rendered}")
            } else {
                write!(out, "{rendered}")
            };
            return code;
        }
    };
    let pool = match rayon::ThreadPoolBuilder::new()
        .num_threads(cli.threads.unwrap_or(0))
        .build()
    {
        Ok(pool) => pool,
        Err(e) => {
            let _ = writeln!(err, "error: cannot start worker threads: {e}");
            return EXIT_USAGE;
        }
    };
    let result = dispatch(&cli, &pool, out, err);
    match result {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: writing output: {e}");
            EXIT_USAGE
        }
    }
}

fn dispatch(
    cli: &Cli,
    pool: &rayon::ThreadPool,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> std::io::Result<i32> {
    match &cli.command {
        Command::Intersect { pair, via } => cmd_intersect(pair, *via, cli.format, out, err),
        Command::TableCheck { p, colors, via } => {
            cmd_table_check(p, colors, *via, pool, cli.format, out, err)
        }
        Command::Classify { pair } => cmd_classify(pair, cli.format, out, err),
        Command::Components { p, n } => cmd_components(*p, *n, cli.format, out, err),
        Command::SSet { a, b } => cmd_s_set(*a, *b, cli.format, out, err),
        Command::P1Model { file } => cmd_p1_model(file, cli.format, out, err),
    }
}

fn parse_pair(
    pair: &PairArgs,
    err: &mut dyn Write,
) -> std::io::Result<Option<(Discriminant, Discriminant, Level)>> {
    let parsed = Discriminant::new(pair.d1).and_then(|d1| {
        let d2 = Discriminant::new(pair.d2)?;
        Ok((d1, d2, Level::new(pair.spl, pair.ns)?))
    });
    match parsed {
        Ok(v) => Ok(Some(v)),
        Err(e) => {
            writeln!(err, "error: {e}")?;
            Ok(None)
        }
    }
}

fn write_json<T: Serialize>(out: &mut dyn Write, value: &T) -> std::io::Result<()> {
    serde_json::to_writer_pretty(&mut *out, value)?;
    writeln!(out)
}

fn cmd_intersect(
    pair: &PairArgs,
    via: Via,
    format: Format,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> std::io::Result<i32> {
    let Some((d1, d2, lv)) = parse_pair(pair, err)? else {
        return Ok(EXIT_USAGE);
    };
    let class = classify_pair(&d1, &d2, &lv);
    let value = match evaluate(&d1, &d2, &lv, via) {
        Ok(v) => v,
        Err(EvalError::Intersection(IntersectionError::Inapplicable(c))) => {
            write!(
                err,
                "error: formula does not apply ({}): {}",
                c.tag, c.detail
            )?;
            if c.tag == PairTag::DegenerateReferenceOnly {
                let reference = Dataset::embedded().ok().and_then(|ds| {
                    ds.reference_value(&d1, &d2, &lv)
                        .map(|e| e.factorization.clone())
                });
                if let Some(r) = reference {
                    write!(err, "; tabulated reference value {r}")?;
                }
            }
            writeln!(err)?;
            return Ok(EXIT_REJECTED);
        }
        Err(e @ EvalError::Disagreement { .. }) => {
            writeln!(err, "error: {e}")?;
            return Ok(EXIT_MISMATCH);
        }
        Err(e) => {
            writeln!(err, "error: {e}")?;
            return Ok(EXIT_REJECTED);
        }
    };
    let record = ResultRecord {
        d1: d1.value(),
        d2: d2.value(),
        n_spl: lv.n_spl(),
        n_ns: lv.n_ns(),
        classification: class.tag,
        log_value: value.log_value(),
        exponents: value,
        evaluator: via,
    };
    match format {
        Format::Json => write_json(out, &record)?,
        Format::Csv => {
            writeln!(out, "{}", ResultRecord::CSV_HEADER)?;
            writeln!(out, "{}", record.csv_row())?;
        }
        Format::Text => {
            writeln!(out, "pair: ({}, {}) at level {}", record.d1, record.d2, lv)?;
            writeln!(out, "classification: {}", record.classification)?;
            writeln!(out, "exp<P1,P2> = {}", record.exponents)?;
            writeln!(out, "<P1,P2> = {:.6}", record.log_value)?;
            writeln!(out, "evaluator: {}", record.evaluator)?;
        }
    }
    Ok(EXIT_OK)
}

fn cmd_table_check(
    p: &str,
    colors: &[Color],
    via: Via,
    pool: &rayon::ThreadPool,
    format: Format,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> std::io::Result<i32> {
    let prime = if p == "all" {
        None
    } else {
        match p.parse::<u64>() {
            Ok(v) if crate::arith::is_prime(v) => Some(v),
            _ => {
                writeln!(err, "error: --p expects a prime or `all`, got `{p}`")?;
                return Ok(EXIT_USAGE);
            }
        }
    };
    let ds = match Dataset::embedded() {
        Ok(ds) => ds,
        Err(e) => {
            writeln!(err, "error: {e}")?;
            return Ok(EXIT_DATA);
        }
    };
    let selected = ds.select(prime, colors);
    let (reports, summary) = pool.install(|| check_entries(&selected, via));
    match format {
        Format::Json => write_json(
            out,
            &TableReport {
                entries: &reports,
                summary,
            },
        )?,
        Format::Csv => {
            let mut w = csv::Writer::from_writer(&mut *out);
            w.write_record([
                "p", "d1", "d2", "color", "expected", "computed", "status", "reason",
            ])?;
            for r in &reports {
                let (status, reason) = outcome_parts(&r.outcome);
                let computed = r
                    .computed
                    .as_ref()
                    .map(ToString::to_string)
                    .unwrap_or_default();
                let expected = r.expected.to_string();
                let color = r.color.to_string();
                w.write_record([
                    &r.p, &r.d1, &r.d2, &color, &expected, &computed, status, reason,
                ])?;
            }
            w.flush()?;
        }
        Format::Text => {
            for r in &reports {
                let (status, reason) = outcome_parts(&r.outcome);
                let tail = if reason.is_empty() {
                    String::new()
                } else {
                    format!(": {reason}")
                };
                writeln!(
                    out,
                    "p={} ({}, {}) {} {}: {status}{tail}",
                    r.p, r.d1, r.d2, r.color, r.expected
                )?;
            }
            writeln!(
                out,
                "checked {}, matched {}, mismatched {}, skipped {}",
                summary.checked, summary.matched, summary.mismatched, summary.skipped
            )?;
        }
    }
    Ok(if summary.all_match() {
        EXIT_OK
    } else {
        EXIT_MISMATCH
    })
}

fn outcome_parts(o: &Outcome) -> (&'static str, &str) {
    match o {
        Outcome::Match => ("match", ""),
        Outcome::Mismatch { reason } => ("mismatch", reason),
        Outcome::Skipped { reason } => ("skipped", reason),
    }
}

fn cmd_classify(
    pair: &PairArgs,
    format: Format,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> std::io::Result<i32> {
    let Some((d1, d2, lv)) = parse_pair(pair, err)? else {
        return Ok(EXIT_USAGE);
    };
    let c = classify_pair(&d1, &d2, &lv);
    match format {
        Format::Json => write_json(out, &c)?,
        Format::Csv => {
            let mut w = csv::Writer::from_writer(&mut *out);
            w.write_record(["d1", "d2", "n_spl", "n_ns", "tag", "detail"])?;
            w.write_record([
                d1.to_string(),
                d2.to_string(),
                lv.n_spl().to_string(),
                lv.n_ns().to_string(),
                c.tag.to_string(),
                c.detail.clone(),
            ])?;
            w.flush()?;
        }
        Format::Text => writeln!(out, "{}: {}", c.tag, c.detail)?,
    }
    Ok(EXIT_OK)
}

fn cmd_components(
    p: u64,
    n: u32,
    format: Format,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> std::io::Result<i32> {
    let count = match component_count(p, n) {
        Ok(c) => c,
        Err(e @ FibreError::ZeroExponent) => {
            writeln!(err, "error: {e}")?;
            return Ok(EXIT_USAGE);
        }
        Err(e) => {
            writeln!(err, "error: {e}")?;
            return Ok(EXIT_REJECTED);
        }
    };
    match format {
        Format::Json => write_json(
            out,
            &serde_json::json!({ "p": p, "n": n, "components": count }),
        )?,
        Format::Csv => writeln!(out, "p,n,components\n{p},{n},{count}")?,
        Format::Text => writeln!(out, "{count}")?,
    }
    Ok(EXIT_OK)
}

fn cmd_s_set(
    a: u64,
    b: u64,
    format: Format,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> std::io::Result<i32> {
    if a == 0 || b == 0 {
        writeln!(err, "error: a and b must be positive")?;
        return Ok(EXIT_USAGE);
    }
    let s = s_set(a, b);
    match format {
        Format::Json => write_json(out, &serde_json::json!({ "a": a, "b": b, "s": s }))?,
        Format::Csv => {
            writeln!(out, "m")?;
            for m in &s {
                writeln!(out, "{m}")?;
            }
        }
        Format::Text => {
            let items: Vec<String> = s.iter().map(u64::to_string).collect();
            writeln!(out, "[{}]", items.join(", "))?;
        }
    }
    Ok(EXIT_OK)
}

fn cmd_p1_model(
    file: &PathBuf,
    format: Format,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> std::io::Result<i32> {
    let text = match std::fs::read_to_string(file) {
        Ok(t) => t,
        Err(e) => {
            writeln!(err, "error: cannot read {}: {e}", file.display())?;
            return Ok(EXIT_USAGE);
        }
    };
    let queries: Vec<ModelQuery> = match serde_json::from_str(&text) {
        Ok(q) => q,
        Err(e) => {
            writeln!(err, "error: {}: {e}", file.display())?;
            return Ok(EXIT_DATA);
        }
    };
    let answers: Vec<_> = queries.iter().map(solve_query).collect();
    match format {
        Format::Json => write_json(out, &answers)?,
        Format::Csv => {
            let mut w = csv::Writer::from_writer(&mut *out);
            w.write_record(["q", "x", "y", "z", "m", "basis", "error"])?;
            for a in &answers {
                let q = &a.query;
                let basis = a
                    .basis
                    .as_ref()
                    .map(|b| format!("[[{}, {}], [{}, {}]]", b[0][0], b[0][1], b[1][0], b[1][1]))
                    .unwrap_or_default();
                w.write_record([
                    q.q.to_string(),
                    q.x.to_string(),
                    q.y.to_string(),
                    q.z.to_string(),
                    q.m.to_string(),
                    basis,
                    a.error.clone().unwrap_or_default(),
                ])?;
            }
            w.flush()?;
        }
        Format::Text => {
            for a in &answers {
                let q = &a.query;
                match (&a.basis, &a.error) {
                    (Some(b), _) => writeln!(
                        out,
                        "q={} x={} y={} z={} m={}: [[{}, {}], [{}, {}]]",
                        q.q, q.x, q.y, q.z, q.m, b[0][0], b[0][1], b[1][0], b[1][1]
                    )?,
                    (None, e) => writeln!(
                        out,
                        "q={} x={} y={} z={} m={}: error: {}",
                        q.q,
                        q.x,
                        q.y,
                        q.z,
                        q.m,
                        e.clone().unwrap_or_default()
                    )?,
                }
            }
        }
    }
    Ok(if answers.iter().all(|a| a.error.is_none()) {
        EXIT_OK
    } else {
        EXIT_REJECTED
    })
}
