//! The embedded reference table of intersection numbers on `X_ns^+(p)` and
//! the machinery to recompute it.
//!
//! Rows live in `data/reference_values.csv` with columns
//! `p,d1_label,d2_label,color,factorization`. The `p` column is either a
//! prime or a residue class such as `3/5/6mod7` (meaning every prime
//! `p >= 11` congruent to 3, 5 or 6 mod 7). The label `-3_2` denotes the second,
//! non-Heegner rational CM point of discriminant -3 on `X_ns^+(5)`.
//! Colours: blue and green rows are recomputable, red rows are degenerate
//! pairs and black rows have no closed formula.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use clap::ValueEnum;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::arith::{factorize, is_prime};
use crate::factored::{FactoredNumber, ParseFactoredError};
use crate::heegner::{classify_pair, Discriminant, Level, PairTag};
use crate::intersection::{theorem_b, theorem_c, IntersectionError};
use crate::quaternion::theorem_c_via_orders;

const EMBEDDED: &str = include_str!("../data/reference_values.csv");

/// Smallest prime covered by residue-class rows.
const CLASS_ROW_MIN_PRIME: u64 = 11;

#[derive(Debug, Error)]
pub enum TableError {
    #[error("table row {line}: {source}")]
    Csv {
        line: u64,
        #[source]
        source: csv::Error,
    },
    #[error("table row {line}: {reason}")]
    BadRow { line: u64, reason: String },
}

#[derive(
    Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize, ValueEnum,
)]
#[serde(rename_all = "lowercase")]
pub enum Color {
    Blue,
    Green,
    Red,
    Black,
}

impl Color {
    /// Whether a closed formula is expected to reproduce the row.
    pub fn is_recomputable(self) -> bool {
        matches!(self, Color::Blue | Color::Green)
    }

    fn expected_tag(self) -> Option<PairTag> {
        match self {
            Color::Blue => Some(PairTag::TheoremB),
            Color::Green => Some(PairTag::NonFundamentalExact),
            _ => None,
        }
    }
}

impl fmt::Display for Color {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Color::Blue => "blue",
            Color::Green => "green",
            Color::Red => "red",
            Color::Black => "black",
        })
    }
}

/// The `p` column: one prime, or every prime `>= 11` in some residue classes.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PSpec {
    Prime(u64),
    Class { modulus: u64, residues: Vec<u64> },
}

impl PSpec {
    pub fn matches(&self, p: u64) -> bool {
        match self {
            PSpec::Prime(q) => *q == p,
            PSpec::Class { modulus, residues } => {
                p >= CLASS_ROW_MIN_PRIME && is_prime(p) && residues.contains(&(p % modulus))
            }
        }
    }
}

impl FromStr for PSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let s = s.trim();
        if let Some((res, modulus)) = s.split_once("mod") {
            let modulus: u64 = modulus
                .parse()
                .map_err(|_| format!("bad modulus in `{s}`"))?;
            let mut residues = res
                .split('/')
                .map(|r| r.parse::<u64>().ok().filter(|&r| r < modulus))
                .collect::<Option<Vec<_>>>()
                .ok_or_else(|| format!("bad residues in `{s}`"))?;
            residues.sort_unstable();
            return Ok(PSpec::Class { modulus, residues });
        }
        let p: u64 = s.parse().map_err(|_| format!("bad prime `{s}`"))?;
        if !is_prime(p) {
            return Err(format!("{p} is not prime"));
        }
        Ok(PSpec::Prime(p))
    }
}

impl fmt::Display for PSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PSpec::Prime(p) => write!(f, "{p}"),
            PSpec::Class { modulus, residues } => {
                let rs: Vec<String> = residues.iter().map(u64::to_string).collect();
                write!(f, "{}mod{modulus}", rs.join("/"))
            }
        }
    }
}

/// A CM point label: a discriminant, or the second point of discriminant -3.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CmLabel {
    Disc(Discriminant),
    SecondMinusThree,
}

impl CmLabel {
    pub fn discriminant(&self) -> Option<Discriminant> {
        match self {
            CmLabel::Disc(d) => Some(*d),
            CmLabel::SecondMinusThree => None,
        }
    }

    fn sort_key(&self) -> (u64, bool) {
        match self {
            CmLabel::Disc(d) => (d.abs(), false),
            CmLabel::SecondMinusThree => (3, true),
        }
    }
}

impl FromStr for CmLabel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let s = s.trim();
        if s == "-3_2" {
            return Ok(CmLabel::SecondMinusThree);
        }
        let d: i64 = s.parse().map_err(|_| format!("bad label `{s}`"))?;
        Discriminant::new(d)
            .map(CmLabel::Disc)
            .map_err(|e| e.to_string())
    }
}

impl fmt::Display for CmLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CmLabel::Disc(d) => write!(f, "{}", d.value()),
            CmLabel::SecondMinusThree => f.write_str("-3_2"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TableEntry {
    pub p: PSpec,
    pub d1: CmLabel,
    pub d2: CmLabel,
    pub color: Color,
    pub factorization: FactoredNumber,
}

impl TableEntry {
    fn sort_key(&self) -> (&PSpec, (u64, bool), (u64, bool)) {
        (&self.p, self.d1.sort_key(), self.d2.sort_key())
    }

    /// Whether this row is about the unordered pair `{d1, d2}`.
    pub fn is_pair(&self, d1: &Discriminant, d2: &Discriminant) -> bool {
        let (a, b) = (CmLabel::Disc(*d1), CmLabel::Disc(*d2));
        (self.d1 == a && self.d2 == b) || (self.d1 == b && self.d2 == a)
    }
}

#[derive(Debug, Deserialize)]
struct RawRow {
    p: String,
    d1_label: String,
    d2_label: String,
    color: Color,
    factorization: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dataset {
    entries: Vec<TableEntry>,
}

impl Dataset {
    /// The table shipped with the crate.
    pub fn embedded() -> Result<Self, TableError> {
        Self::parse(EMBEDDED)
    }

    pub fn parse(text: &str) -> Result<Self, TableError> {
        let mut reader = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(text.as_bytes());
        let mut entries = Vec::new();
        for (i, row) in reader.deserialize::<RawRow>().enumerate() {
            let line = i as u64 + 2;
            let row = row.map_err(|source| TableError::Csv { line, source })?;
            let bad = |reason: String| TableError::BadRow { line, reason };
            let factorization: FactoredNumber = row
                .factorization
                .parse()
                .map_err(|e: ParseFactoredError| bad(e.to_string()))?;
            if !factorization.is_integral() {
                return Err(bad(format!(
                    "non-integral exponent in `{}`",
                    row.factorization
                )));
            }
            entries.push(TableEntry {
                p: row.p.parse().map_err(bad)?,
                d1: row.d1_label.parse().map_err(bad)?,
                d2: row.d2_label.parse().map_err(bad)?,
                color: row.color,
                factorization,
            });
        }
        Ok(Dataset { entries })
    }

    pub fn entries(&self) -> &[TableEntry] {
        &self.entries
    }

    /// Rows for the prime `p` (`None` = all rows) restricted to `colors`.
    pub fn select(&self, p: Option<u64>, colors: &[Color]) -> Vec<&TableEntry> {
        self.entries
            .iter()
            .filter(|e| p.is_none_or(|p| e.p.matches(p)))
            .filter(|e| colors.contains(&e.color))
            .collect()
    }

    /// The tabulated value for a pair on `X_ns^+(p)`, when `lv` is such a level.
    pub fn reference_value(
        &self,
        d1: &Discriminant,
        d2: &Discriminant,
        lv: &Level,
    ) -> Option<&TableEntry> {
        if lv.n_spl() != 1 || !is_prime(lv.n_ns()) {
            return None;
        }
        self.entries
            .iter()
            .find(|e| e.p.matches(lv.n_ns()) && e.is_pair(d1, d2))
    }
}

/// Which evaluator(s) to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Via {
    /// The divisor-sum formula.
    Formula,
    /// Superorder counting.
    Orders,
    /// Both, checked against each other.
    Both,
}

impl fmt::Display for Via {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Via::Formula => "formula",
            Via::Orders => "orders",
            Via::Both => "both",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error(transparent)]
    Intersection(#[from] IntersectionError),
    #[error("evaluators disagree: formula gives {formula}, orders give {orders}")]
    Disagreement {
        formula: FactoredNumber,
        orders: FactoredNumber,
    },
}

/// Prime `p` when `lv` is the level of `X_ns^+(p^n)`, with `n`.
fn non_split_prime_power(lv: &Level) -> Option<(u64, u32)> {
    if lv.n_spl() != 1 || lv.n_ns() == 1 {
        return None;
    }
    match factorize(lv.n_ns()).ok()?.factors() {
        [(p, n)] => Some((*p, *n)),
        _ => None,
    }
}

/// The divisor-sum evaluator: the direct `S`-set scan on `X_ns^+(p^n)`, the
/// crossed-trace sum on every other level.
pub fn evaluate_formula(
    d1: &Discriminant,
    d2: &Discriminant,
    lv: &Level,
) -> Result<FactoredNumber, IntersectionError> {
    match non_split_prime_power(lv) {
        Some((p, n)) => theorem_b(d1, d2, p, n),
        None => theorem_c(d1, d2, lv),
    }
}

pub fn evaluate(
    d1: &Discriminant,
    d2: &Discriminant,
    lv: &Level,
    via: Via,
) -> Result<FactoredNumber, EvalError> {
    match via {
        Via::Formula => Ok(evaluate_formula(d1, d2, lv)?),
        Via::Orders => Ok(theorem_c_via_orders(d1, d2, lv)?),
        Via::Both => {
            let formula = evaluate_formula(d1, d2, lv)?;
            let orders = theorem_c_via_orders(d1, d2, lv)?;
            if formula == orders {
                Ok(formula)
            } else {
                Err(EvalError::Disagreement { formula, orders })
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "lowercase")]
pub enum Outcome {
    Match,
    Mismatch { reason: String },
    Skipped { reason: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EntryReport {
    pub p: String,
    pub d1: String,
    pub d2: String,
    pub color: Color,
    pub expected: FactoredNumber,
    pub computed: Option<FactoredNumber>,
    #[serde(flatten)]
    pub outcome: Outcome,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TableSummary {
    pub checked: usize,
    pub matched: usize,
    pub mismatched: usize,
    pub skipped: usize,
}

impl TableSummary {
    pub fn all_match(&self) -> bool {
        self.mismatched == 0
    }
}

pub fn check_entry(entry: &TableEntry, via: Via) -> EntryReport {
    let report = |computed, outcome| EntryReport {
        p: entry.p.to_string(),
        d1: entry.d1.to_string(),
        d2: entry.d2.to_string(),
        color: entry.color,
        expected: entry.factorization.clone(),
        computed,
        outcome,
    };
    let skipped = |reason: &str| {
        report(
            None,
            Outcome::Skipped {
                reason: reason.into(),
            },
        )
    };
    let mismatch = |computed, reason: String| report(computed, Outcome::Mismatch { reason });
    match entry.color {
        Color::Red => return skipped("reference-only: degenerate pair"),
        Color::Black => return skipped("reference-only: no formula"),
        Color::Blue | Color::Green => {}
    }
    let (PSpec::Prime(p), Some(d1), Some(d2)) =
        (&entry.p, entry.d1.discriminant(), entry.d2.discriminant())
    else {
        return mismatch(
            None,
            "row is not a single-prime pair of discriminants".into(),
        );
    };
    let Ok(lv) = Level::non_split(*p) else {
        return mismatch(None, format!("invalid level {p}"));
    };
    let class = classify_pair(&d1, &d2, &lv);
    if Some(class.tag) != entry.color.expected_tag() {
        return mismatch(
            None,
            format!(
                "{} row classifies as {}: {}",
                entry.color, class.tag, class.detail
            ),
        );
    }
    match evaluate(&d1, &d2, &lv, via) {
        Ok(value) if value == entry.factorization => report(Some(value), Outcome::Match),
        Ok(value) => {
            let reason = format!("expected {}, computed {value}", entry.factorization);
            mismatch(Some(value), reason)
        }
        Err(e) => mismatch(None, e.to_string()),
    }
}

fn compare_reports(a: &(&TableEntry, EntryReport), b: &(&TableEntry, EntryReport)) -> Ordering {
    a.0.sort_key().cmp(&b.0.sort_key())
}

/// Checks `entries` in parallel; the reports come back sorted by `(p, d1, d2)`.
pub fn check_entries(entries: &[&TableEntry], via: Via) -> (Vec<EntryReport>, TableSummary) {
    let mut reports: Vec<(&TableEntry, EntryReport)> = entries
        .par_iter()
        .map(|e| (*e, check_entry(e, via)))
        .collect();
    reports.sort_by(compare_reports);
    let mut summary = TableSummary::default();
    for (_, r) in &reports {
        match r.outcome {
            Outcome::Match => {
                summary.checked += 1;
                summary.matched += 1;
            }
            Outcome::Mismatch { .. } => {
                summary.checked += 1;
                summary.mismatched += 1;
            }
            Outcome::Skipped { .. } => summary.skipped += 1,
        }
    }
    (reports.into_iter().map(|(_, r)| r).collect(), summary)
}
