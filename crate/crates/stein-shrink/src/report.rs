//! Tabulated PRIAL results: an in-memory table keyed by
//! `(structure, p, n, r, alpha)`, a strict CSV form that round-trips
//! exactly, and a human-oriented markdown rendering.

use std::collections::HashSet;
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::model::StructureKind;

/// Exact header line of the CSV form.
pub const CSV_HEADER: &str = "structure,p,n,r,alpha,prial_percent,se_percent,replications,seed";

/// One PRIAL measurement: the percentage reduction in average loss of the
/// eigenvalue-shrinkage estimate over the optimal constant multiple of `S`,
/// with its delta-method standard error.
#[derive(Debug, Clone, PartialEq)]
pub struct PrialRow {
    pub structure: StructureKind,
    pub p: usize,
    pub n: usize,
    pub r: usize,
    pub alpha: f64,
    pub prial_percent: f64,
    pub se_percent: f64,
    pub replications: usize,
    pub seed: u64,
}

impl PrialRow {
    /// Identity of a row within a report; alpha compared by bit pattern.
    fn key(&self) -> (StructureKind, usize, usize, usize, u64) {
        (self.structure, self.p, self.n, self.r, self.alpha.to_bits())
    }
}

/// Why a CSV report was rejected. `row` counts data rows from 1 (the header
/// is row 0).
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ReportParseError {
    #[error("missing header line")]
    MissingHeader,
    #[error("unexpected header {found:?}")]
    BadHeader { found: String },
    #[error("row {row}: expected {expected} fields, found {found}")]
    FieldCount {
        row: usize,
        expected: usize,
        found: usize,
    },
    #[error("row {row}, field {field}: cannot parse {token:?}")]
    BadField {
        row: usize,
        field: &'static str,
        token: String,
    },
    #[error("row {row}: duplicate (structure, p, n, r, alpha) key")]
    DuplicateKey { row: usize },
}

/// A PRIAL table with unique `(structure, p, n, r, alpha)` keys, in
/// insertion order.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PrialReport {
    rows: Vec<PrialRow>,
}

impl PrialReport {
    pub fn new(rows: Vec<PrialRow>) -> Result<Self> {
        let mut seen = HashSet::with_capacity(rows.len());
        for (i, row) in rows.iter().enumerate() {
            if !seen.insert(row.key()) {
                return Err(Error::DuplicateRow { index: i });
            }
        }
        Ok(Self { rows })
    }

    pub fn rows(&self) -> &[PrialRow] {
        &self.rows
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// CSV form: fixed header, one row per measurement, LF line endings,
    /// floats in shortest round-trip decimal form.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(CSV_HEADER);
        out.push('\n');
        for row in &self.rows {
            writeln!(
                out,
                "{},{},{},{},{},{},{},{},{}",
                row.structure,
                row.p,
                row.n,
                row.r,
                row.alpha,
                row.prial_percent,
                row.se_percent,
                row.replications,
                row.seed
            )
            .expect("writing to a String cannot fail");
        }
        out
    }

    /// Strict inverse of `to_csv`: exact header, exact field count, finite
    /// numbers, positive alpha, unique keys. `from_csv(to_csv(r)) == r`.
    pub fn from_csv(text: &str) -> std::result::Result<Self, ReportParseError> {
        let body = text.trim_end_matches('\n');
        let mut lines = body.split('\n');
        let header = lines.next().ok_or(ReportParseError::MissingHeader)?;
        let header = header.strip_suffix('\r').unwrap_or(header);
        if header.is_empty() {
            return Err(ReportParseError::MissingHeader);
        }
        if header != CSV_HEADER {
            return Err(ReportParseError::BadHeader {
                found: header.to_string(),
            });
        }
        let mut rows = Vec::new();
        let mut seen = HashSet::new();
        for (i, line) in lines.enumerate() {
            let row = i + 1;
            let line = line.strip_suffix('\r').unwrap_or(line);
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 9 {
                return Err(ReportParseError::FieldCount {
                    row,
                    expected: 9,
                    found: fields.len(),
                });
            }
            let bad = |field: &'static str, token: &str| ReportParseError::BadField {
                row,
                field,
                token: token.to_string(),
            };
            let structure: StructureKind =
                fields[0].parse().map_err(|_| bad("structure", fields[0]))?;
            let p: usize = fields[1].parse().map_err(|_| bad("p", fields[1]))?;
            let n: usize = fields[2].parse().map_err(|_| bad("n", fields[2]))?;
            let r: usize = fields[3].parse().map_err(|_| bad("r", fields[3]))?;
            let alpha: f64 = fields[4].parse().map_err(|_| bad("alpha", fields[4]))?;
            if !(alpha.is_finite() && alpha > 0.0) {
                return Err(bad("alpha", fields[4]));
            }
            let prial_percent: f64 = fields[5]
                .parse()
                .map_err(|_| bad("prial_percent", fields[5]))?;
            if !prial_percent.is_finite() {
                return Err(bad("prial_percent", fields[5]));
            }
            let se_percent: f64 = fields[6]
                .parse()
                .map_err(|_| bad("se_percent", fields[6]))?;
            if !(se_percent.is_finite() && se_percent >= 0.0) {
                return Err(bad("se_percent", fields[6]));
            }
            let replications: usize = fields[7]
                .parse()
                .map_err(|_| bad("replications", fields[7]))?;
            let seed: u64 = fields[8].parse().map_err(|_| bad("seed", fields[8]))?;
            let parsed = PrialRow {
                structure,
                p,
                n,
                r,
                alpha,
                prial_percent,
                se_percent,
                replications,
                seed,
            };
            if !seen.insert(parsed.key()) {
                return Err(ReportParseError::DuplicateKey { row });
            }
            rows.push(parsed);
        }
        Ok(Self { rows })
    }

    /// Markdown rendering: one table row per covariance setting, one column
    /// per alpha (wide layout) when every setting carries the same alpha
    /// sequence; otherwise one table row per measurement.
    pub fn to_markdown(&self) -> String {
        let mut out = String::from(
            "# PRIAL of eigenvalue shrinkage vs. the optimal scalar multiple of S\n\n",
        );
        if self.rows.is_empty() {
            out.push_str("(no rows)\n");
            return out;
        }
        out.push_str(
            "Each entry is the percentage reduction in average Stein loss, \
             `value ± standard error`, estimated from paired replications.\n\n",
        );

        // Group rows by setting, preserving first-appearance order.
        type SettingKey = (StructureKind, usize, usize, usize, usize, u64);
        let mut groups: Vec<(SettingKey, Vec<&PrialRow>)> = Vec::new();
        for row in &self.rows {
            let key = (
                row.structure,
                row.p,
                row.n,
                row.r,
                row.replications,
                row.seed,
            );
            match groups.iter_mut().find(|(k, _)| *k == key) {
                Some((_, members)) => members.push(row),
                None => groups.push((key, vec![row])),
            }
        }
        let alphas: Vec<u64> = groups[0].1.iter().map(|r| r.alpha.to_bits()).collect();
        let uniform = groups.iter().all(|(_, members)| {
            members
                .iter()
                .map(|r| r.alpha.to_bits())
                .eq(alphas.iter().copied())
        });

        if uniform {
            out.push_str("| structure | p | n | r | replications | seed |");
            for row in &groups[0].1 {
                write!(out, " alpha={} |", row.alpha).unwrap();
            }
            out.push('\n');
            out.push_str("|---|---|---|---|---|---|");
            for _ in &alphas {
                out.push_str("---|");
            }
            out.push('\n');
            for ((structure, p, n, r, reps, seed), members) in &groups {
                write!(out, "| {structure} | {p} | {n} | {r} | {reps} | {seed} |").unwrap();
                for row in members {
                    write!(out, " {:.2} ± {:.2} |", row.prial_percent, row.se_percent).unwrap();
                }
                out.push('\n');
            }
        } else {
            out.push_str(
                "| structure | p | n | r | alpha | prial (%) | se (%) | replications | seed |\n",
            );
            out.push_str("|---|---|---|---|---|---|---|---|---|\n");
            for row in &self.rows {
                writeln!(
                    out,
                    "| {} | {} | {} | {} | {} | {:.2} | {:.2} | {} | {} |",
                    row.structure,
                    row.p,
                    row.n,
                    row.r,
                    row.alpha,
                    row.prial_percent,
                    row.se_percent,
                    row.replications,
                    row.seed
                )
                .unwrap();
            }
        }
        out
    }
}
