//! Sample preparation and first-pass statistics: annual winsorization,
//! descriptive statistics, and the Pearson correlation matrix.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::lstsq::two_sided_t_p;
use crate::panel::{DerivedVars, PanelDataset};

/// What to winsorize and how hard.
#[derive(Debug, Clone)]
pub struct WinsorSpec {
    pub lower_q: f64,
    pub upper_q: f64,
    /// Variables to treat. Defaults to every continuous derived variable;
    /// the 0/1 indicators stay untouched.
    pub variables: Vec<String>,
    /// Compute quantiles within each calendar year (the default) rather than
    /// over the pooled sample.
    pub by_year: bool,
}

impl Default for WinsorSpec {
    fn default() -> Self {
        WinsorSpec {
            lower_q: 0.01,
            upper_q: 0.99,
            variables: DerivedVars::CONTINUOUS.iter().map(|s| s.to_string()).collect(),
            by_year: true,
        }
    }
}

impl WinsorSpec {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.lower_q)
            || !(0.0..=1.0).contains(&self.upper_q)
            || self.lower_q >= self.upper_q
        {
            return Err(Error::InvalidParams(format!(
                "winsor quantiles must satisfy 0 <= lower < upper <= 1, got ({}, {})",
                self.lower_q, self.upper_q
            )));
        }
        Ok(())
    }
}

/// One row of the descriptive-statistics table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DescriptiveRow {
    pub variable: String,
    pub n: usize,
    pub mean: f64,
    /// Sample standard deviation (n − 1 denominator); 0 for n < 2.
    pub std_dev: f64,
    pub min: f64,
    pub max: f64,
}

/// Pearson correlations with two-sided p-values.
#[derive(Debug, Clone)]
pub struct CorrelationMatrix {
    pub variables: Vec<String>,
    pub r: DMatrix<f64>,
    pub p: DMatrix<f64>,
    pub n_obs: usize,
}

/// Quantile by linear interpolation between order statistics at position
/// h = (n − 1)·q + 1 (1-based), the convention most software defaults to.
///
/// `sorted` must be ascending and non-empty.
pub fn interpolated_quantile(sorted: &[f64], q: f64) -> f64 {
    debug_assert!(!sorted.is_empty());
    let n = sorted.len();
    let pos = (n - 1) as f64 * q;
    let lo = pos.floor() as usize;
    let hi = (lo + 1).min(n - 1);
    let frac = pos - lo as f64;
    sorted[lo] + frac * (sorted[hi] - sorted[lo])
}

/// Cap and floor each listed variable at its group quantiles.
///
/// Bounds come from the pre-winsorization distribution of each (group,
/// variable) cell. When the quantile positions (n − 1)·q land on whole order
/// statistics the clamp bound is an element of the group, so re-applying the
/// same spec changes nothing; with a fractional position the interpolated
/// bound sits strictly between two order statistics and a second pass can
/// tighten it by at most that gap. Raw records are left untouched:
/// winsorization deliberately decouples the derived values from their source
/// ratios.
pub fn winsorize(dataset: PanelDataset, spec: &WinsorSpec) -> Result<PanelDataset> {
    spec.validate()?;
    for var in &spec.variables {
        if !DerivedVars::NAMES.contains(&var.as_str()) {
            return Err(Error::UnknownVariable(var.clone()));
        }
    }
    if dataset.is_empty() {
        return Ok(dataset);
    }

    // Group rows by year, or pool everything under the first year level.
    let mut groups: BTreeMap<i32, Vec<usize>> = BTreeMap::new();
    if spec.by_year {
        for (i, (rec, _)) in dataset.records().iter().enumerate() {
            groups.entry(rec.year).or_default().push(i);
        }
    } else {
        groups.insert(dataset.year_levels()[0], (0..dataset.n()).collect());
    }

    // New values per treated variable, computed before any mutation.
    let mut replacements: Vec<(String, Vec<f64>)> = Vec::with_capacity(spec.variables.len());
    for var in &spec.variables {
        let mut column = dataset.column(var)?;
        for (year, rows) in &groups {
            if rows.len() < 2 {
                return Err(Error::GroupTooSmall {
                    year: *year,
                    variable: var.clone(),
                    n: rows.len(),
                });
            }
            let mut sorted: Vec<f64> = rows.iter().map(|&i| column[i]).collect();
            sorted.sort_by(f64::total_cmp);
            let lo = interpolated_quantile(&sorted, spec.lower_q);
            let hi = interpolated_quantile(&sorted, spec.upper_q);
            for &i in rows {
                column[i] = column[i].clamp(lo, hi);
            }
        }
        replacements.push((var.clone(), column));
    }

    Ok(dataset.map_derived(|i, d| {
        for (var, column) in &replacements {
            d.set(var, column[i]);
        }
    }))
}

/// Per-variable N, mean, sample standard deviation, min, and max.
pub fn describe(dataset: &PanelDataset, variables: &[&str]) -> Result<Vec<DescriptiveRow>> {
    variables
        .iter()
        .map(|var| {
            let values = dataset.column(var)?;
            Ok(describe_column(var, &values))
        })
        .collect()
}

fn describe_column(variable: &str, values: &[f64]) -> DescriptiveRow {
    let n = values.len();
    if n == 0 {
        return DescriptiveRow {
            variable: variable.to_string(),
            n: 0,
            mean: f64::NAN,
            std_dev: f64::NAN,
            min: f64::NAN,
            max: f64::NAN,
        };
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    let std_dev = if n < 2 {
        0.0
    } else {
        let ss: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
        (ss / (n - 1) as f64).sqrt()
    };
    let (mut min, mut max) = (f64::INFINITY, f64::NEG_INFINITY);
    for &v in values {
        min = min.min(v);
        max = max.max(v);
    }
    DescriptiveRow {
        variable: variable.to_string(),
        n,
        mean,
        std_dev,
        min,
        max,
    }
}

/// Pairwise Pearson correlations with p-values from the exact t distribution
/// with n − 2 degrees of freedom.
pub fn correlate(dataset: &PanelDataset, variables: &[&str]) -> Result<CorrelationMatrix> {
    let n = dataset.n();
    let k = variables.len();
    if n < 3 {
        return Err(Error::InsufficientObservations { n, k });
    }

    let mut centered: Vec<Vec<f64>> = Vec::with_capacity(k);
    let mut sum_sq: Vec<f64> = Vec::with_capacity(k);
    for var in variables {
        let mut col = dataset.column(var)?;
        let mean = col.iter().sum::<f64>() / n as f64;
        for v in col.iter_mut() {
            *v -= mean;
        }
        let ss: f64 = col.iter().map(|v| v * v).sum();
        if ss == 0.0 {
            return Err(Error::ZeroVariance(var.to_string()));
        }
        sum_sq.push(ss);
        centered.push(col);
    }

    let df = (n - 2) as f64;
    let mut r = DMatrix::identity(k, k);
    let mut p = DMatrix::zeros(k, k);
    for j in 0..k {
        for l in (j + 1)..k {
            let dot: f64 = centered[j]
                .iter()
                .zip(&centered[l])
                .map(|(a, b)| a * b)
                .sum();
            // r as sign(dot)·sqrt(dot²/(ssa·ssb)) rather than dot/(‖a‖‖b‖):
            // for exactly collinear columns both products round identically,
            // so the ratio is exactly 1 instead of 1 − 1ulp.
            let rho = (dot.signum() * (dot * dot / (sum_sq[j] * sum_sq[l])).sqrt())
                .clamp(-1.0, 1.0);
            let pval = if rho.abs() == 1.0 {
                0.0
            } else {
                let t = rho * (df / (1.0 - rho * rho)).sqrt();
                two_sided_t_p(t, df)
            };
            r[(j, l)] = rho;
            r[(l, j)] = rho;
            p[(j, l)] = pval;
            p[(l, j)] = pval;
        }
    }

    Ok(CorrelationMatrix {
        variables: variables.iter().map(|s| s.to_string()).collect(),
        r,
        p,
        n_obs: n,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::panel::{DerivedVars, FirmYearRecord, PanelDataset};
    use proptest::prelude::*;

    fn dataset_with_inv(values_by_year: &[(i32, Vec<f64>)]) -> PanelDataset {
        let mut pairs = Vec::new();
        let mut firm = 0;
        for (year, values) in values_by_year {
            for v in values {
                firm += 1;
                pairs.push((raw(&format!("F{firm:04}"), *year), derived_with_inv(*v)));
            }
        }
        pairs.sort_by(|a, b| {
            (a.0.firm_id.clone(), a.0.year).cmp(&(b.0.firm_id.clone(), b.0.year))
        });
        PanelDataset::new(pairs)
    }

    fn raw(firm: &str, year: i32) -> FirmYearRecord {
        FirmYearRecord {
            firm_id: firm.to_string(),
            year,
            industry: "C27".to_string(),
            status: "normal".to_string(),
            rd_invest: Some(1.0),
            total_assets: Some(100.0),
            exec_shares: Some(1.0),
            total_shares: Some(10.0),
            mgmt_expense: Some(1.0),
            main_revenue: Some(10.0),
            other_receivables: Some(1.0),
            establish_year: Some(year - 5),
            tobin_q: Some(1.0),
            ncps: Some(0.1),
            net_income: Some(1.0),
            top3_comp_avg: Some(1000.0),
            dual_flag: Some(0.0),
        }
    }

    fn derived_with_inv(inv: f64) -> DerivedVars {
        DerivedVars {
            inv,
            hold: 0.1,
            ac1: 0.1,
            ac2: 0.01,
            age: 5.0,
            size: 100f64.ln(),
            tq: 1.0,
            ncps: 0.1,
            growth: 0.1,
            loss: 0.0,
            p: 1000f64.ln(),
            dual: 0.0,
        }
    }

    fn inv_only_spec(lower: f64, upper: f64) -> WinsorSpec {
        WinsorSpec {
            lower_q: lower,
            upper_q: upper,
            variables: vec!["INV".to_string()],
            by_year: true,
        }
    }

    #[test]
    fn quantile_interpolates_between_order_statistics() {
        let sorted: Vec<f64> = (1..=100).map(f64::from).collect();
        // h = 99·0.01 + 1 = 1.99, so 0.99 of the way from x(1) to x(2).
        assert!((interpolated_quantile(&sorted, 0.01) - 1.99).abs() < 1e-12);
        assert!((interpolated_quantile(&sorted, 0.99) - 99.01).abs() < 1e-12);
        assert_eq!(interpolated_quantile(&sorted, 0.0), 1.0);
        assert_eq!(interpolated_quantile(&sorted, 1.0), 100.0);
        assert_eq!(interpolated_quantile(&sorted, 0.5), 50.5);
    }

    #[test]
    fn winsorize_caps_at_group_quantiles() {
        let values: Vec<f64> = (1..=100).map(f64::from).collect();
        let ds = dataset_with_inv(&[(2015, values)]);
        let out = winsorize(ds, &inv_only_spec(0.01, 0.99)).unwrap();
        let col = out.column("INV").unwrap();
        let min = col.iter().cloned().fold(f64::INFINITY, f64::min);
        let max = col.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        assert!((min - 1.99).abs() < 1e-12);
        assert!((max - 99.01).abs() < 1e-12);
    }

    #[test]
    fn winsorize_groups_by_year_independently() {
        let ds = dataset_with_inv(&[
            (2014, (1..=50).map(f64::from).collect()),
            (2015, (101..=150).map(f64::from).collect()),
        ]);
        let out = winsorize(ds, &inv_only_spec(0.02, 0.98)).unwrap();
        for (rec, d) in out.records() {
            if rec.year == 2014 {
                assert!(d.inv < 100.0);
            } else {
                assert!(d.inv > 100.0);
            }
        }
    }

    #[test]
    fn constant_group_is_unchanged() {
        let ds = dataset_with_inv(&[(2015, vec![0.02; 40])]);
        let out = winsorize(ds, &inv_only_spec(0.01, 0.99)).unwrap();
        assert!(out.column("INV").unwrap().iter().all(|&v| v == 0.02));
    }

    #[test]
    fn unlisted_variables_and_raw_records_are_untouched() {
        let ds = dataset_with_inv(&[(2015, (1..=30).map(f64::from).collect())]);
        let hold_before = ds.column("HOLD").unwrap();
        let out = winsorize(ds, &inv_only_spec(0.05, 0.95)).unwrap();
        assert_eq!(out.column("HOLD").unwrap(), hold_before);
        assert!(out.records().iter().all(|(r, _)| r.rd_invest == Some(1.0)));
    }

    #[test]
    fn tiny_group_is_rejected() {
        let ds = dataset_with_inv(&[(2015, vec![1.0])]);
        match winsorize(ds, &inv_only_spec(0.01, 0.99)) {
            Err(Error::GroupTooSmall { year, n, .. }) => {
                assert_eq!(year, 2015);
                assert_eq!(n, 1);
            }
            other => panic!("expected GroupTooSmall, got {other:?}"),
        }
    }

    #[test]
    fn invalid_quantile_pair_is_rejected() {
        let ds = dataset_with_inv(&[(2015, vec![1.0, 2.0])]);
        assert!(winsorize(ds, &inv_only_spec(0.99, 0.01)).is_err());
    }

    proptest! {
        #[test]
        fn winsorize_preserves_order_and_bounds(
            values in proptest::collection::vec(-1e6..1e6f64, 2..60),
            lower in 0.0..0.3f64,
            span in 0.2..0.7f64,
        ) {
            let spec = inv_only_spec(lower, (lower + span).min(1.0));
            let ds = dataset_with_inv(&[(2015, values.clone())]);
            let col = winsorize(ds, &spec).unwrap().column("INV").unwrap();

            // x <= y before implies x <= y after.
            for i in 0..values.len() {
                for j in 0..values.len() {
                    if values[i] <= values[j] {
                        prop_assert!(col[i] <= col[j]);
                    }
                }
            }

            // Containment in the pre-winsorization group quantiles, and
            // values already inside the bounds pass through bit-for-bit.
            let mut sorted = values.clone();
            sorted.sort_by(f64::total_cmp);
            let lo = interpolated_quantile(&sorted, spec.lower_q);
            let hi = interpolated_quantile(&sorted, spec.upper_q);
            for (&v, &w) in values.iter().zip(&col) {
                prop_assert!(w >= lo && w <= hi);
                if v >= lo && v <= hi {
                    prop_assert_eq!(v, w);
                }
            }
        }

        // With (n − 1)·q integral the bounds are order statistics of the
        // group, so winsorization reaches its fixed point in one pass. The
        // sizes and quantiles here keep every position integral; see the
        // function docs for why fractional positions can drift.
        #[test]
        fn winsorize_is_idempotent_at_integral_positions(
            values in proptest::collection::vec(-1e6..1e6f64, 41),
            tens in 1usize..=4,
            lower_tenths in 0usize..=2,
            upper_tenths in 8usize..=10,
        ) {
            let n = 10 * tens + 1;
            let spec = inv_only_spec(
                lower_tenths as f64 / 10.0,
                upper_tenths as f64 / 10.0,
            );
            let values = &values[..n];
            let ds = dataset_with_inv(&[(2015, values.to_vec())]);

            let once = winsorize(ds, &spec).unwrap();
            let col_once = once.column("INV").unwrap();
            let twice = winsorize(once, &spec).unwrap();
            let col_twice = twice.column("INV").unwrap();
            prop_assert_eq!(&col_once, &col_twice);
        }
    }

    #[test]
    fn describe_matches_hand_arithmetic() {
        let ds = dataset_with_inv(&[(2015, vec![1.0, 2.0, 3.0])]);
        let rows = describe(&ds, &["INV"]).unwrap();
        let row = &rows[0];
        assert_eq!(row.n, 3);
        assert_eq!(row.mean, 2.0);
        assert_eq!(row.std_dev, 1.0);
        assert_eq!(row.min, 1.0);
        assert_eq!(row.max, 3.0);
    }

    #[test]
    fn describe_constant_column() {
        let ds = dataset_with_inv(&[(2015, vec![0.5; 10])]);
        let row = &describe(&ds, &["INV"]).unwrap()[0];
        assert_eq!((row.mean, row.std_dev), (0.5, 0.0));
        assert_eq!((row.min, row.max), (0.5, 0.5));
        assert!(row.min <= row.mean && row.mean <= row.max);
    }

    #[test]
    fn describe_rejects_unknown_variable() {
        let ds = dataset_with_inv(&[(2015, vec![1.0, 2.0])]);
        assert!(matches!(
            describe(&ds, &["NOPE"]),
            Err(Error::UnknownVariable(_))
        ));
    }

    fn two_var_dataset(xs: &[f64], ys: &[f64]) -> PanelDataset {
        let mut pairs = Vec::new();
        for (i, (&x, &y)) in xs.iter().zip(ys).enumerate() {
            let mut d = derived_with_inv(x);
            d.hold = y;
            pairs.push((raw(&format!("F{i:04}"), 2015), d));
        }
        PanelDataset::new(pairs)
    }

    #[test]
    fn correlation_of_exact_linearity_is_one() {
        let ds = two_var_dataset(&[1.0, 2.0, 3.0], &[2.0, 4.0, 6.0]);
        let m = correlate(&ds, &["INV", "HOLD"]).unwrap();
        assert_eq!(m.r[(0, 1)], 1.0);
        assert_eq!(m.p[(0, 1)], 0.0);
    }

    #[test]
    fn correlation_matches_hand_computed_fixture() {
        // x = {1,2,3,4}, y = {1,3,2,4}: r = 4/5 and the df = 2 t CDF gives
        // p = 0.2 exactly (F(t) = 1/2 + t / (2·sqrt(t² + 2)) hits 0.9).
        let ds = two_var_dataset(&[1.0, 2.0, 3.0, 4.0], &[1.0, 3.0, 2.0, 4.0]);
        let m = correlate(&ds, &["INV", "HOLD"]).unwrap();
        assert!((m.r[(0, 1)] - 0.8).abs() < 1e-15);
        assert!((m.p[(0, 1)] - 0.2).abs() < 1e-12);
    }

    #[test]
    fn correlation_matrix_shape_invariants() {
        let ds = two_var_dataset(&[1.0, 2.0, 5.0, 3.0], &[0.4, 0.1, 0.3, 0.9]);
        let m = correlate(&ds, &["INV", "HOLD", "INV"]).unwrap();
        for j in 0..3 {
            assert_eq!(m.r[(j, j)], 1.0);
            assert_eq!(m.p[(j, j)], 0.0);
            for l in 0..3 {
                assert_eq!(m.r[(j, l)], m.r[(l, j)]);
                assert!(m.r[(j, l)].abs() <= 1.0);
                assert!((0.0..=1.0).contains(&m.p[(j, l)]));
            }
        }
        // Identical variables correlate exactly.
        assert_eq!(m.r[(0, 2)], 1.0);
    }

    #[test]
    fn correlation_rejects_zero_variance_and_tiny_n() {
        let ds = two_var_dataset(&[1.0, 1.0, 1.0], &[0.4, 0.1, 0.3]);
        assert!(matches!(
            correlate(&ds, &["INV", "HOLD"]),
            Err(Error::ZeroVariance(v)) if v == "INV"
        ));
        let tiny = two_var_dataset(&[1.0, 2.0], &[0.4, 0.1]);
        assert!(matches!(
            correlate(&tiny, &["INV", "HOLD"]),
            Err(Error::InsufficientObservations { .. })
        ));
    }
}
