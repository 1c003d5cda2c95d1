//! Raw CSV loading, sample screening, and analysis-variable construction.
//!
//! The expected input is one row per firm-year with the exact header
//! documented on [`CSV_COLUMNS`]. Blank cells are missing values; screening
//! removes excluded trading statuses, excluded industries, out-of-range
//! years, and rows with any missing field (listwise deletion). Every removal
//! is counted by reason in a [`FilterLog`].

use std::collections::BTreeSet;
use std::fmt;
use std::fs::File;
use std::io::Read;
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::panel::{DerivedVars, DropReason, FirmYearRecord, PanelDataset, ValidatedRecords};

/// Required input columns, in canonical order.
pub const CSV_COLUMNS: [&str; 17] = [
    "firm_id",
    "year",
    "industry",
    "status",
    "rd_invest",
    "total_assets",
    "exec_shares",
    "total_shares",
    "mgmt_expense",
    "main_revenue",
    "other_receivables",
    "establish_year",
    "tobin_q",
    "ncps",
    "net_income",
    "top3_comp_avg",
    "dual_flag",
];

/// Sample screens applied before variable construction.
#[derive(Debug, Clone)]
pub struct IngestConfig {
    /// Trading statuses removed from the sample (special-treatment firms).
    pub excluded_statuses: BTreeSet<String>,
    /// Industry-code prefixes removed from the sample. The default "J"
    /// drops financial firms under CSRC-style industry coding; the coding
    /// scheme is input-dependent, so the set is configurable.
    pub excluded_industry_prefixes: BTreeSet<String>,
    /// Inclusive year window.
    pub year_range: (i32, i32),
}

impl Default for IngestConfig {
    fn default() -> Self {
        IngestConfig {
            excluded_statuses: ["ST", "*ST"].iter().map(|s| s.to_string()).collect(),
            excluded_industry_prefixes: ["J"].iter().map(|s| s.to_string()).collect(),
            year_range: (2010, 2021),
        }
    }
}

impl IngestConfig {
    pub fn validate(&self) -> Result<()> {
        if self.year_range.0 > self.year_range.1 {
            return Err(Error::InvalidParams(format!(
                "year_range min {} exceeds max {}",
                self.year_range.0, self.year_range.1
            )));
        }
        Ok(())
    }
}

/// Per-reason removal counts across screening and variable construction.
///
/// Conservation holds per stage: input count = output count + the stage's
/// removals.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct FilterLog {
    pub status: usize,
    pub industry: usize,
    pub year_range: usize,
    pub missing: usize,
    pub denominator_zero: usize,
    pub log_nonpositive: usize,
    pub out_of_range: usize,
    pub growth_undefined: usize,
}

impl FilterLog {
    pub fn total_removed(&self) -> usize {
        self.status
            + self.industry
            + self.year_range
            + self.missing
            + self.denominator_zero
            + self.log_nonpositive
            + self.out_of_range
            + self.growth_undefined
    }

    pub fn merge(&mut self, other: &FilterLog) {
        self.status += other.status;
        self.industry += other.industry;
        self.year_range += other.year_range;
        self.missing += other.missing;
        self.denominator_zero += other.denominator_zero;
        self.log_nonpositive += other.log_nonpositive;
        self.out_of_range += other.out_of_range;
        self.growth_undefined += other.growth_undefined;
    }

    fn rows(&self) -> [(&'static str, usize); 8] {
        [
            ("status", self.status),
            ("industry", self.industry),
            ("year_range", self.year_range),
            ("missing", self.missing),
            ("denominator_zero", self.denominator_zero),
            ("log_nonpositive", self.log_nonpositive),
            ("out_of_range", self.out_of_range),
            ("growth_undefined", self.growth_undefined),
        ]
    }

    pub fn to_csv_string(&self) -> String {
        let mut out = String::from("reason,count\n");
        for (reason, count) in self.rows() {
            out.push_str(&format!("{reason},{count}\n"));
        }
        out
    }

    fn bump(&mut self, reason: DropReason) {
        match reason {
            DropReason::MissingField(_) => self.missing += 1,
            DropReason::DenominatorZero(_) => self.denominator_zero += 1,
            DropReason::LogNonPositive(_) => self.log_nonpositive += 1,
            DropReason::OutOfRange(_) => self.out_of_range += 1,
            DropReason::GrowthUndefined => self.growth_undefined += 1,
        }
    }
}

impl fmt::Display for FilterLog {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "records removed by reason:")?;
        for (reason, count) in self.rows() {
            writeln!(f, "  {reason:<18} {count}")?;
        }
        write!(f, "  total              {}", self.total_removed())
    }
}

/// Load firm-year records from a CSV file.
pub fn load_csv(path: impl AsRef<Path>) -> Result<Vec<FirmYearRecord>> {
    let file = File::open(path)?;
    load_csv_reader(file)
}

/// Load firm-year records from any reader producing the documented schema.
///
/// Column order in the file is free; the column set must match exactly.
pub fn load_csv_reader<R: Read>(reader: R) -> Result<Vec<FirmYearRecord>> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);

    let headers = rdr
        .headers()
        .map_err(|e| csv_error_to_parse(0, e))?
        .clone();
    let mut index = [usize::MAX; CSV_COLUMNS.len()];
    let mut unknown = Vec::new();
    for (pos, name) in headers.iter().enumerate() {
        match CSV_COLUMNS.iter().position(|c| *c == name.trim()) {
            Some(slot) if index[slot] == usize::MAX => index[slot] = pos,
            // A repeated header counts as unknown: there is no right slot.
            _ => unknown.push(name.trim().to_string()),
        }
    }
    let missing: Vec<String> = CSV_COLUMNS
        .iter()
        .zip(index.iter())
        .filter(|(_, i)| **i == usize::MAX)
        .map(|(c, _)| c.to_string())
        .collect();
    if !missing.is_empty() || !unknown.is_empty() {
        return Err(Error::SchemaMismatch { missing, unknown });
    }

    let mut records = Vec::new();
    for (i, row) in rdr.records().enumerate() {
        // Line number in the file: header is line 1.
        let line = i + 2;
        let row = row.map_err(|e| csv_error_to_parse(line, e))?;
        let field = |slot: usize| row.get(index[slot]).unwrap_or("").trim();

        records.push(FirmYearRecord {
            firm_id: field(0).to_string(),
            year: parse_int(line, "year", field(1))?
                .ok_or_else(|| missing_required(line, "year"))?,
            industry: field(2).to_string(),
            status: field(3).to_string(),
            rd_invest: parse_num(line, "rd_invest", field(4))?,
            total_assets: parse_num(line, "total_assets", field(5))?,
            exec_shares: parse_num(line, "exec_shares", field(6))?,
            total_shares: parse_num(line, "total_shares", field(7))?,
            mgmt_expense: parse_num(line, "mgmt_expense", field(8))?,
            main_revenue: parse_num(line, "main_revenue", field(9))?,
            other_receivables: parse_num(line, "other_receivables", field(10))?,
            establish_year: parse_int(line, "establish_year", field(11))?,
            tobin_q: parse_num(line, "tobin_q", field(12))?,
            ncps: parse_num(line, "ncps", field(13))?,
            net_income: parse_num(line, "net_income", field(14))?,
            top3_comp_avg: parse_num(line, "top3_comp_avg", field(15))?,
            dual_flag: parse_num(line, "dual_flag", field(16))?,
        });
    }
    Ok(records)
}

fn csv_error_to_parse(row: usize, e: csv::Error) -> Error {
    Error::ParseError {
        row,
        column: "<record>".to_string(),
        value: e.to_string(),
    }
}

fn missing_required(row: usize, column: &str) -> Error {
    Error::ParseError {
        row,
        column: column.to_string(),
        value: String::new(),
    }
}

fn parse_num(row: usize, column: &str, raw: &str) -> Result<Option<f64>> {
    if raw.is_empty() {
        return Ok(None);
    }
    match raw.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(Some(v)),
        _ => Err(Error::ParseError {
            row,
            column: column.to_string(),
            value: raw.to_string(),
        }),
    }
}

fn parse_int(row: usize, column: &str, raw: &str) -> Result<Option<i32>> {
    if raw.is_empty() {
        return Ok(None);
    }
    raw.parse::<i32>()
        .map(Some)
        .map_err(|_| Error::ParseError {
            row,
            column: column.to_string(),
            value: raw.to_string(),
        })
}

/// Apply the sample screens. Each removed record is counted under the first
/// matching reason, checked in the order status, industry, year, missing.
pub fn filter_sample(
    records: Vec<FirmYearRecord>,
    config: &IngestConfig,
) -> (Vec<FirmYearRecord>, FilterLog) {
    let mut log = FilterLog::default();
    let kept = records
        .into_iter()
        .filter(|rec| {
            if config.excluded_statuses.contains(&rec.status) {
                log.status += 1;
                return false;
            }
            if config
                .excluded_industry_prefixes
                .iter()
                .any(|p| rec.industry.starts_with(p.as_str()))
            {
                log.industry += 1;
                return false;
            }
            if rec.year < config.year_range.0 || rec.year > config.year_range.1 {
                log.year_range += 1;
                return false;
            }
            if has_missing(rec) {
                log.missing += 1;
                return false;
            }
            true
        })
        .collect();
    (kept, log)
}

fn has_missing(rec: &FirmYearRecord) -> bool {
    rec.rd_invest.is_none()
        || rec.total_assets.is_none()
        || rec.exec_shares.is_none()
        || rec.total_shares.is_none()
        || rec.mgmt_expense.is_none()
        || rec.main_revenue.is_none()
        || rec.other_receivables.is_none()
        || rec.establish_year.is_none()
        || rec.tobin_q.is_none()
        || rec.ncps.is_none()
        || rec.net_income.is_none()
        || rec.top3_comp_avg.is_none()
        || rec.dual_flag.is_none()
}

/// Derive the analysis variables for every surviving record.
///
/// The growth rate uses the same firm's raw revenue at exactly year − 1,
/// whether or not that earlier row itself survives derivation; a record with
/// no immediately preceding firm-year is dropped and counted. Rows that fail
/// a ratio (zero denominator, non-positive log argument, out-of-range field)
/// are likewise dropped and counted, never fatal.
pub fn construct_variables(records: ValidatedRecords) -> (PanelDataset, FilterLog) {
    let mut log = FilterLog::default();
    let records = records.into_inner();
    let mut pairs = Vec::with_capacity(records.len());

    let mut prev: Option<(&str, i32, Option<f64>)> = None;
    for rec in &records {
        let prev_revenue = match prev {
            Some((firm, year, revenue)) if firm == rec.firm_id && year == rec.year - 1 => revenue,
            _ => None,
        };
        match DerivedVars::from_record(rec, prev_revenue) {
            Ok(derived) => pairs.push((rec.clone(), derived)),
            Err(reason) => log.bump(reason),
        }
        prev = Some((&rec.firm_id, rec.year, rec.main_revenue));
    }

    (PanelDataset::new(pairs), log)
}
