//! Firm-year panel data model: raw records, derived analysis variables, and
//! conversion to numeric matrices.

use std::collections::BTreeMap;

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// One raw firm-year observation as it arrives from the input file.
///
/// Numeric fields are optional: a blank cell in the source CSV is a missing
/// value, and listwise deletion happens downstream in `ingest`.
#[derive(Debug, Clone, PartialEq)]
pub struct FirmYearRecord {
    pub firm_id: String,
    pub year: i32,
    pub industry: String,
    pub status: String,
    pub rd_invest: Option<f64>,
    pub total_assets: Option<f64>,
    pub exec_shares: Option<f64>,
    pub total_shares: Option<f64>,
    pub mgmt_expense: Option<f64>,
    pub main_revenue: Option<f64>,
    pub other_receivables: Option<f64>,
    pub establish_year: Option<i32>,
    pub tobin_q: Option<f64>,
    pub ncps: Option<f64>,
    pub net_income: Option<f64>,
    pub top3_comp_avg: Option<f64>,
    pub dual_flag: Option<f64>,
}

/// The analysis variables derived from one raw record.
///
/// `LOSS` and `DUAL` are 0/1 indicators stored as floats so every variable
/// can flow into the same numeric matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivedVars {
    /// R&D investment scaled by total assets.
    pub inv: f64,
    /// Fraction of total shares held by executives.
    pub hold: f64,
    /// Management expense over main business revenue.
    pub ac1: f64,
    /// Other receivables over total assets.
    pub ac2: f64,
    /// Years since establishment at the observation year.
    pub age: f64,
    /// Natural log of total assets.
    pub size: f64,
    pub tq: f64,
    pub ncps: f64,
    /// Annual main-revenue growth rate against the immediately prior year.
    pub growth: f64,
    /// 1 if the firm posted a year-end loss.
    pub loss: f64,
    /// Natural log of average top-3 executive compensation.
    pub p: f64,
    /// 1 if CEO and board chair are the same person.
    pub dual: f64,
}

/// Why a record failed variable derivation. These are logged removals, not
/// fatal errors: one bad row must not abort a 25k-row run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DropReason {
    MissingField(&'static str),
    DenominatorZero(&'static str),
    /// A log-transformed field was zero or negative.
    LogNonPositive(&'static str),
    /// No record for the immediately preceding firm-year, so the annual
    /// growth rate is undefined.
    GrowthUndefined,
    /// A field violates its documented range (negative R&D, executive shares
    /// exceeding total shares, establishment after the observation year, ...).
    OutOfRange(&'static str),
}

impl DerivedVars {
    /// Variable names in report order.
    pub const NAMES: [&'static str; 12] = [
        "INV", "HOLD", "AC1", "AC2", "AGE", "SIZE", "TQ", "NCPS", "GROWTH", "LOSS", "P", "DUAL",
    ];

    /// Continuous variables, i.e. everything except the 0/1 indicators.
    pub const CONTINUOUS: [&'static str; 10] = [
        "INV", "HOLD", "AC1", "AC2", "SIZE", "TQ", "NCPS", "GROWTH", "P", "AGE",
    ];

    pub fn get(&self, name: &str) -> Option<f64> {
        match name {
            "INV" => Some(self.inv),
            "HOLD" => Some(self.hold),
            "AC1" => Some(self.ac1),
            "AC2" => Some(self.ac2),
            "AGE" => Some(self.age),
            "SIZE" => Some(self.size),
            "TQ" => Some(self.tq),
            "NCPS" => Some(self.ncps),
            "GROWTH" => Some(self.growth),
            "LOSS" => Some(self.loss),
            "P" => Some(self.p),
            "DUAL" => Some(self.dual),
            _ => None,
        }
    }

    pub fn set(&mut self, name: &str, value: f64) -> bool {
        let slot = match name {
            "INV" => &mut self.inv,
            "HOLD" => &mut self.hold,
            "AC1" => &mut self.ac1,
            "AC2" => &mut self.ac2,
            "AGE" => &mut self.age,
            "SIZE" => &mut self.size,
            "TQ" => &mut self.tq,
            "NCPS" => &mut self.ncps,
            "GROWTH" => &mut self.growth,
            "LOSS" => &mut self.loss,
            "P" => &mut self.p,
            "DUAL" => &mut self.dual,
            _ => return false,
        };
        *slot = value;
        true
    }

    /// Derive the analysis variables from a raw record.
    ///
    /// `prev_main_revenue` is the same firm's main revenue at exactly
    /// `year - 1`; without it the growth rate is undefined and the record
    /// is dropped.
    pub fn from_record(
        rec: &FirmYearRecord,
        prev_main_revenue: Option<f64>,
    ) -> std::result::Result<Self, DropReason> {
        use DropReason::*;

        let rd_invest = rec.rd_invest.ok_or(MissingField("rd_invest"))?;
        let total_assets = rec.total_assets.ok_or(MissingField("total_assets"))?;
        let exec_shares = rec.exec_shares.ok_or(MissingField("exec_shares"))?;
        let total_shares = rec.total_shares.ok_or(MissingField("total_shares"))?;
        let mgmt_expense = rec.mgmt_expense.ok_or(MissingField("mgmt_expense"))?;
        let main_revenue = rec.main_revenue.ok_or(MissingField("main_revenue"))?;
        let other_recv = rec
            .other_receivables
            .ok_or(MissingField("other_receivables"))?;
        let establish_year = rec.establish_year.ok_or(MissingField("establish_year"))?;
        let tobin_q = rec.tobin_q.ok_or(MissingField("tobin_q"))?;
        let ncps = rec.ncps.ok_or(MissingField("ncps"))?;
        let net_income = rec.net_income.ok_or(MissingField("net_income"))?;
        let top3 = rec.top3_comp_avg.ok_or(MissingField("top3_comp_avg"))?;
        let dual_flag = rec.dual_flag.ok_or(MissingField("dual_flag"))?;

        if total_assets <= 0.0 {
            return Err(LogNonPositive("total_assets"));
        }
        if top3 <= 0.0 {
            return Err(LogNonPositive("top3_comp_avg"));
        }
        if total_shares == 0.0 {
            return Err(DenominatorZero("total_shares"));
        }
        if main_revenue == 0.0 {
            return Err(DenominatorZero("main_revenue"));
        }
        if rd_invest < 0.0 {
            return Err(OutOfRange("rd_invest"));
        }
        if other_recv < 0.0 {
            return Err(OutOfRange("other_receivables"));
        }
        if exec_shares < 0.0 || total_shares < 0.0 || exec_shares > total_shares {
            return Err(OutOfRange("exec_shares"));
        }
        if establish_year > rec.year {
            return Err(OutOfRange("establish_year"));
        }
        if dual_flag != 0.0 && dual_flag != 1.0 {
            return Err(OutOfRange("dual_flag"));
        }

        let prev = prev_main_revenue.ok_or(GrowthUndefined)?;
        if prev == 0.0 {
            return Err(GrowthUndefined);
        }

        Ok(DerivedVars {
            inv: rd_invest / total_assets,
            hold: exec_shares / total_shares,
            ac1: mgmt_expense / main_revenue,
            ac2: other_recv / total_assets,
            age: f64::from(rec.year - establish_year),
            size: total_assets.ln(),
            tq: tobin_q,
            ncps,
            growth: (main_revenue - prev) / prev,
            loss: if net_income < 0.0 { 1.0 } else { 0.0 },
            p: top3.ln(),
            dual: dual_flag,
        })
    }

    pub fn is_finite(&self) -> bool {
        Self::NAMES
            .iter()
            .all(|n| self.get(n).is_some_and(f64::is_finite))
    }
}

/// Raw records with unique (firm_id, year) keys, sorted by that key.
///
/// This is the precursor every downstream stage relies on: growth-rate and
/// lead computations assume each firm's records are contiguous and in year
/// order.
#[derive(Debug, Clone, Default)]
pub struct ValidatedRecords(Vec<FirmYearRecord>);

impl ValidatedRecords {
    pub fn as_slice(&self) -> &[FirmYearRecord] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<FirmYearRecord> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Sort records by (firm_id, year) and reject duplicate keys.
///
/// The error lists every colliding key, not just the first, so a bad export
/// can be fixed in one round.
pub fn validate(mut records: Vec<FirmYearRecord>) -> Result<ValidatedRecords> {
    records.sort_by(|a, b| (a.firm_id.as_str(), a.year).cmp(&(b.firm_id.as_str(), b.year)));
    let mut collisions = Vec::new();
    for pair in records.windows(2) {
        if pair[0].firm_id == pair[1].firm_id && pair[0].year == pair[1].year {
            let key = (pair[0].firm_id.clone(), pair[0].year);
            if collisions.last() != Some(&key) {
                collisions.push(key);
            }
        }
    }
    if !collisions.is_empty() {
        return Err(Error::DuplicateKey(collisions));
    }
    Ok(ValidatedRecords(records))
}

/// The post-screening analysis sample: raw records paired with their derived
/// variables, plus any extra columns added by later transforms (e.g. the
/// next-period outcome used by the robustness rerun).
///
/// Immutable after construction; every operation that changes content builds
/// a new dataset.
#[derive(Debug, Clone)]
pub struct PanelDataset {
    records: Vec<(FirmYearRecord, DerivedVars)>,
    year_levels: Vec<i32>,
    industry_levels: Vec<String>,
    extra: BTreeMap<String, Vec<f64>>,
}

impl PanelDataset {
    /// Build a dataset from (record, derived) pairs sorted by (firm_id, year).
    pub fn new(records: Vec<(FirmYearRecord, DerivedVars)>) -> Self {
        debug_assert!(records
            .windows(2)
            .all(|w| (&w[0].0.firm_id, w[0].0.year) < (&w[1].0.firm_id, w[1].0.year)));
        let mut year_levels: Vec<i32> = records.iter().map(|(r, _)| r.year).collect();
        year_levels.sort_unstable();
        year_levels.dedup();
        let mut industry_levels: Vec<String> =
            records.iter().map(|(r, _)| r.industry.clone()).collect();
        industry_levels.sort_unstable();
        industry_levels.dedup();
        PanelDataset {
            records,
            year_levels,
            industry_levels,
            extra: BTreeMap::new(),
        }
    }

    pub fn n(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn records(&self) -> &[(FirmYearRecord, DerivedVars)] {
        &self.records
    }

    pub fn year_levels(&self) -> &[i32] {
        &self.year_levels
    }

    pub fn industry_levels(&self) -> &[String] {
        &self.industry_levels
    }

    pub fn extra_names(&self) -> impl Iterator<Item = &str> {
        self.extra.keys().map(String::as_str)
    }

    /// All addressable variable names: the derived set plus extras.
    pub fn variable_names(&self) -> Vec<String> {
        DerivedVars::NAMES
            .iter()
            .map(|s| s.to_string())
            .chain(self.extra.keys().cloned())
            .collect()
    }

    pub fn has_variable(&self, name: &str) -> bool {
        DerivedVars::NAMES.contains(&name) || self.extra.contains_key(name)
    }

    /// Attach an extra numeric column. The column must be row-aligned.
    pub fn with_extra(mut self, name: &str, values: Vec<f64>) -> Self {
        assert_eq!(values.len(), self.records.len(), "extra column misaligned");
        self.extra.insert(name.to_string(), values);
        self
    }

    /// Copy one variable out as a plain vector.
    pub fn column(&self, name: &str) -> Result<Vec<f64>> {
        if DerivedVars::NAMES.contains(&name) {
            return Ok(self
                .records
                .iter()
                .map(|(_, d)| d.get(name).unwrap())
                .collect());
        }
        if let Some(vals) = self.extra.get(name) {
            return Ok(vals.clone());
        }
        Err(Error::UnknownVariable(name.to_string()))
    }

    /// Apply an in-place edit to every derived-variable tuple. Used by
    /// winsorization; the raw records are left untouched.
    pub fn map_derived(mut self, f: impl Fn(usize, &mut DerivedVars)) -> Self {
        for (i, (_, d)) in self.records.iter_mut().enumerate() {
            f(i, d);
        }
        self
    }

    /// Project the requested variables into an N×K matrix, columns in
    /// request order.
    pub fn to_matrix(&self, columns: &[&str]) -> Result<VariableMatrix> {
        let n = self.records.len();
        let mut values = DMatrix::zeros(n, columns.len());
        for (j, name) in columns.iter().enumerate() {
            let col = self.column(name)?;
            values.column_mut(j).copy_from_slice(&col);
        }
        Ok(VariableMatrix {
            column_names: columns.iter().map(|s| s.to_string()).collect(),
            n_rows: n,
            values,
        })
    }
}

/// A named numeric matrix: the bridge between the panel and the solvers.
///
/// Invariant: `column_names.len()` equals the column count and no entry is
/// non-finite (derivation and generation both guarantee finiteness).
#[derive(Debug, Clone)]
pub struct VariableMatrix {
    pub column_names: Vec<String>,
    pub values: DMatrix<f64>,
    pub n_rows: usize,
}

impl VariableMatrix {
    pub fn new(column_names: Vec<String>, values: DMatrix<f64>) -> Self {
        assert_eq!(column_names.len(), values.ncols());
        VariableMatrix {
            n_rows: values.nrows(),
            column_names,
            values,
        }
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.column_names.iter().position(|c| c == name)
    }
}
