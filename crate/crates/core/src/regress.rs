//! Two-way fixed-effects OLS: dummy-encoded design construction, the QR fit
//! with classical inference, significance stars, and the residualized
//! (Frisch–Waugh–Lovell) cross-check path.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::lstsq::{solve_least_squares, two_sided_t_p, Householder};
use crate::panel::{PanelDataset, VariableMatrix};

/// Categorical dimensions that can be absorbed as dummy blocks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum FixedEffect {
    Year,
    Industry,
}

impl FixedEffect {
    pub fn name(self) -> &'static str {
        match self {
            FixedEffect::Year => "year",
            FixedEffect::Industry => "industry",
        }
    }

    pub fn parse(s: &str) -> Option<FixedEffect> {
        match s {
            "year" => Some(FixedEffect::Year),
            "industry" => Some(FixedEffect::Industry),
            _ => None,
        }
    }
}

/// Declarative description of one regression.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModelSpec {
    pub dependent: String,
    pub regressors: Vec<String>,
    pub fixed_effects: Vec<FixedEffect>,
    pub include_intercept: bool,
}

impl ModelSpec {
    pub fn new(
        dependent: impl Into<String>,
        regressors: Vec<String>,
        fixed_effects: Vec<FixedEffect>,
    ) -> Result<ModelSpec> {
        let spec = ModelSpec {
            dependent: dependent.into(),
            regressors,
            fixed_effects,
            include_intercept: true,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        for (i, r) in self.regressors.iter().enumerate() {
            if *r == self.dependent {
                return Err(Error::InvalidParams(format!(
                    "dependent `{r}` cannot appear among the regressors"
                )));
            }
            if self.regressors[..i].contains(r) {
                return Err(Error::InvalidParams(format!("regressor `{r}` repeated")));
            }
        }
        for (i, fe) in self.fixed_effects.iter().enumerate() {
            if self.fixed_effects[..i].contains(fe) {
                return Err(Error::InvalidParams(format!(
                    "fixed effect `{}` repeated",
                    fe.name()
                )));
            }
        }
        Ok(())
    }
}

/// Star thresholds, strict inequalities: p < three → "***", p < two → "**",
/// p < one → "*".
#[derive(Debug, Clone, Copy, Serialize)]
pub struct StarThresholds {
    pub three: f64,
    pub two: f64,
    pub one: f64,
}

impl Default for StarThresholds {
    fn default() -> Self {
        StarThresholds {
            three: 0.01,
            two: 0.05,
            one: 0.1,
        }
    }
}

impl StarThresholds {
    pub fn validate(&self) -> Result<()> {
        let ok = self.three > 0.0
            && self.three < self.two
            && self.two < self.one
            && self.one <= 1.0;
        if !ok {
            return Err(Error::InvalidParams(format!(
                "star thresholds must be strictly increasing within (0, 1], got {}, {}, {}",
                self.three, self.two, self.one
            )));
        }
        Ok(())
    }
}

pub fn format_stars(p: f64) -> &'static str {
    format_stars_with(p, &StarThresholds::default())
}

pub fn format_stars_with(p: f64, th: &StarThresholds) -> &'static str {
    if p < th.three {
        "***"
    } else if p < th.two {
        "**"
    } else if p < th.one {
        "*"
    } else {
        ""
    }
}

/// How the coefficient covariance is estimated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SeMode {
    /// Homoskedastic s²(XᵀX)⁻¹, the default throughout.
    Classical,
    /// Firm-clustered sandwich estimator, off by default; provided for
    /// sensitivity analysis only.
    ClusterFirm,
}

/// One fitted model: per-term inference plus fit summary.
#[derive(Debug, Clone, Serialize)]
pub struct FitResult {
    pub spec: ModelSpec,
    /// Retained design columns, in design order.
    pub terms: Vec<String>,
    pub coef: Vec<f64>,
    pub std_err: Vec<f64>,
    pub t_stat: Vec<f64>,
    pub p_value: Vec<f64>,
    pub stars: Vec<String>,
    pub n_obs: usize,
    pub r_squared: f64,
    /// Columns dropped as aliased (later duplicates of earlier columns).
    pub dropped_terms: Vec<String>,
    /// Residual degrees of freedom used for the t distribution.
    pub df: usize,
    pub se_type: SeMode,
}

impl FitResult {
    pub fn term_index(&self, name: &str) -> Option<usize> {
        self.terms.iter().position(|t| t == name)
    }

    /// (coefficient, p-value) for a term, if retained.
    pub fn coef_p(&self, name: &str) -> Option<(f64, f64)> {
        let i = self.term_index(name)?;
        Some((self.coef[i], self.p_value[i]))
    }

    /// Re-render the per-term stars under different thresholds.
    pub fn restar(&mut self, th: &StarThresholds) {
        for (s, p) in self.stars.iter_mut().zip(&self.p_value) {
            *s = format_stars_with(*p, th).to_string();
        }
    }
}

/// Dummy-encode a model: intercept, then regressors, then one 0/1 column per
/// non-baseline level of each fixed-effect dimension. The baseline is the
/// first level in sorted order; any fixed choice is statistically
/// equivalent, and a deterministic one keeps outputs reproducible.
pub fn build_design(
    dataset: &PanelDataset,
    spec: &ModelSpec,
) -> Result<(DVector<f64>, VariableMatrix)> {
    spec.validate()?;
    if dataset.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let n = dataset.n();
    let y = DVector::from_vec(dataset.column(&spec.dependent)?);

    let mut names: Vec<String> = Vec::new();
    let mut cols: Vec<Vec<f64>> = Vec::new();

    if spec.include_intercept {
        names.push("Constant".to_string());
        cols.push(vec![1.0; n]);
    }
    for reg in &spec.regressors {
        names.push(reg.clone());
        cols.push(dataset.column(reg)?);
    }
    for fe in &spec.fixed_effects {
        match fe {
            FixedEffect::Year => {
                for level in dataset.year_levels().iter().skip(1) {
                    names.push(format!("year::{level}"));
                    cols.push(
                        dataset
                            .records()
                            .iter()
                            .map(|(r, _)| if r.year == *level { 1.0 } else { 0.0 })
                            .collect(),
                    );
                }
            }
            FixedEffect::Industry => {
                for level in dataset.industry_levels().iter().skip(1) {
                    names.push(format!("industry::{level}"));
                    cols.push(
                        dataset
                            .records()
                            .iter()
                            .map(|(r, _)| if r.industry == *level { 1.0 } else { 0.0 })
                            .collect(),
                    );
                }
            }
        }
    }

    let mut values = DMatrix::zeros(n, cols.len());
    for (j, col) in cols.iter().enumerate() {
        values.column_mut(j).copy_from_slice(col);
    }
    Ok((y, VariableMatrix::new(names, values)))
}

/// Fit OLS on a prepared design.
///
/// Aliased columns are dropped (first occurrence wins) and named in
/// `dropped_terms`; inference is classical with n − k degrees of freedom,
/// where k counts retained columns only. R² uses a centered total sum of
/// squares when the design carries a `Constant` column.
pub fn ols_fit(y: &DVector<f64>, x: &VariableMatrix) -> Result<FitResult> {
    assert_eq!(y.len(), x.n_rows, "y and X row counts differ");
    let ls = solve_least_squares(y, &x.values)?;
    let spec = synthesized_spec(x);
    Ok(assemble_fit(spec, x, y, ls))
}

fn synthesized_spec(x: &VariableMatrix) -> ModelSpec {
    ModelSpec {
        dependent: "y".to_string(),
        regressors: x
            .column_names
            .iter()
            .filter(|n| *n != "Constant")
            .cloned()
            .collect(),
        fixed_effects: Vec::new(),
        include_intercept: x.column_names.iter().any(|n| n == "Constant"),
    }
}

fn assemble_fit(
    spec: ModelSpec,
    x: &VariableMatrix,
    y: &DVector<f64>,
    ls: crate::lstsq::LeastSquares,
) -> FitResult {
    let n = y.len();
    let terms: Vec<String> = ls
        .retained
        .iter()
        .map(|&j| x.column_names[j].clone())
        .collect();
    let dropped_terms: Vec<String> = ls
        .dropped
        .iter()
        .map(|&j| x.column_names[j].clone())
        .collect();

    let centered = terms.iter().any(|t| t == "Constant");
    let tss = if centered {
        let mean = y.iter().sum::<f64>() / n as f64;
        y.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>()
    } else {
        y.iter().map(|v| v * v).sum::<f64>()
    };
    let r_squared = if tss > 0.0 {
        1.0 - ls.rss / tss
    } else if ls.rss.abs() < 1e-300 {
        1.0
    } else {
        0.0
    };

    let df = ls.df;
    let (t_stat, p_value): (Vec<f64>, Vec<f64>) = ls
        .coef
        .iter()
        .zip(&ls.std_err)
        .map(|(&b, &se)| t_and_p(b, se, df as f64))
        .unzip();
    let stars = p_value
        .iter()
        .map(|&p| format_stars(p).to_string())
        .collect();

    FitResult {
        spec,
        terms,
        coef: ls.coef,
        std_err: ls.std_err,
        t_stat,
        p_value,
        stars,
        n_obs: n,
        r_squared,
        dropped_terms,
        df,
        se_type: SeMode::Classical,
    }
}

fn t_and_p(coef: f64, se: f64, df: f64) -> (f64, f64) {
    if se > 0.0 {
        let t = coef / se;
        (t, two_sided_t_p(t, df))
    } else if coef == 0.0 {
        (0.0, 1.0)
    } else {
        (coef.signum() * f64::INFINITY, 0.0)
    }
}

/// Fit a model on a dataset: build the dummy design and run [`ols_fit`],
/// optionally replacing the variance estimator with a firm-clustered
/// sandwich.
pub fn fit_model(dataset: &PanelDataset, spec: &ModelSpec, se_mode: SeMode) -> Result<FitResult> {
    let (y, x) = build_design(dataset, spec)?;
    let ls = solve_least_squares(&y, &x.values)?;
    let mut fit = assemble_fit(spec.clone(), &x, &y, ls);

    if se_mode == SeMode::ClusterFirm {
        let firms: Vec<&str> = dataset
            .records()
            .iter()
            .map(|(r, _)| r.firm_id.as_str())
            .collect();
        apply_cluster_se(&mut fit, &x, &y, &firms)?;
    }
    Ok(fit)
}

/// Replace classical SEs with the cluster-robust sandwich (CR1 small-sample
/// correction G/(G−1)·(n−1)/(n−k)); t tests use G − 1 degrees of freedom.
fn apply_cluster_se(
    fit: &mut FitResult,
    x: &VariableMatrix,
    y: &DVector<f64>,
    groups: &[&str],
) -> Result<()> {
    let n = y.len();
    let k = fit.terms.len();

    // Retained design and residuals, recomputed from the reported fit.
    let mut xr = DMatrix::zeros(n, k);
    for (jj, name) in fit.terms.iter().enumerate() {
        let j = x.column_index(name).expect("retained term present");
        xr.column_mut(jj).copy_from(&x.values.column(j));
    }
    let fitted = &xr * DVector::from_vec(fit.coef.clone());
    let resid = y - fitted;

    let xtx = xr.transpose() * &xr;
    let inv = xtx
        .cholesky()
        .ok_or(Error::AllColumnsAliased)?
        .inverse();

    // Σ_g (X_gᵀ e_g)(X_gᵀ e_g)ᵀ, accumulated over contiguous firm runs
    // (records are sorted by firm).
    let mut meat: DMatrix<f64> = DMatrix::zeros(k, k);
    let mut g_count = 0usize;
    let mut start = 0usize;
    while start < n {
        let mut end = start + 1;
        while end < n && groups[end] == groups[start] {
            end += 1;
        }
        g_count += 1;
        let mut s: DVector<f64> = DVector::zeros(k);
        for i in start..end {
            for j in 0..k {
                s[j] += xr[(i, j)] * resid[i];
            }
        }
        meat += &s * s.transpose();
        start = end;
    }
    if g_count < 2 {
        return Err(Error::InvalidParams(
            "cluster-robust errors need at least 2 firms".to_string(),
        ));
    }

    let c = (g_count as f64 / (g_count - 1) as f64) * ((n - 1) as f64 / (n - k) as f64);
    let v = &inv * meat * &inv * c;

    let df = (g_count - 1) as f64;
    for i in 0..k {
        fit.std_err[i] = v[(i, i)].max(0.0).sqrt();
        let (t, p) = t_and_p(fit.coef[i], fit.std_err[i], df);
        fit.t_stat[i] = t;
        fit.p_value[i] = p;
        fit.stars[i] = format_stars(p).to_string();
    }
    fit.df = g_count - 1;
    fit.se_type = SeMode::ClusterFirm;
    Ok(())
}

/// The residualized alternative to the dummy design: project the dependent
/// and every regressor off the fixed-effect block (intercept included), and
/// return slope-only inputs.
///
/// Sequential group demeaning is not exact for two-way effects, so the
/// projection uses the same QR machinery as the main fit. By the
/// Frisch–Waugh–Lovell theorem, slopes fitted on this output equal the
/// regressor coefficients of the full dummy design.
pub fn within_demean(
    dataset: &PanelDataset,
    spec: &ModelSpec,
) -> Result<(DVector<f64>, VariableMatrix)> {
    let (y, x) = build_design(dataset, spec)?;
    let n = dataset.n();
    let k_reg = spec.regressors.len();
    let offset = usize::from(spec.include_intercept);

    // The FE block: everything in the design that is not a regressor.
    let k_fe = x.values.ncols() - k_reg;
    let mut z = DMatrix::zeros(n, k_fe);
    if spec.include_intercept {
        z.column_mut(0).copy_from(&x.values.column(0));
    }
    for j in 0..(k_fe - offset) {
        z.column_mut(offset + j)
            .copy_from(&x.values.column(offset + k_reg + j));
    }
    let proj = Householder::factor(&z);

    let mut y_res = y.as_slice().to_vec();
    proj.residualize(&mut y_res);

    let x_data = x.values.as_slice();
    let mut values = DMatrix::zeros(n, k_reg);
    for j in 0..k_reg {
        let c = offset + j;
        let mut col = x_data[c * n..(c + 1) * n].to_vec();
        proj.residualize(&mut col);
        values.column_mut(j).copy_from_slice(&col);
    }

    Ok((
        DVector::from_vec(y_res),
        VariableMatrix::new(spec.regressors.clone(), values),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::panel::{DerivedVars, FirmYearRecord, PanelDataset};

    fn raw(firm: &str, year: i32, industry: &str) -> FirmYearRecord {
        FirmYearRecord {
            firm_id: firm.to_string(),
            year,
            industry: industry.to_string(),
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

    /// Panel over firms × years × alternating industries, with derived values
    /// driven by a closure so tests can plant exact linear structure.
    fn toy_panel(
        n_firms: usize,
        years: std::ops::RangeInclusive<i32>,
        f: impl Fn(usize, i32) -> DerivedVars,
    ) -> PanelDataset {
        let mut pairs = Vec::new();
        for fi in 0..n_firms {
            let industry = if fi % 2 == 0 { "C10" } else { "K70" };
            for year in years.clone() {
                pairs.push((
                    raw(&format!("F{fi:04}"), year, industry),
                    f(fi, year),
                ));
            }
        }
        PanelDataset::new(pairs)
    }

    fn base_vars() -> DerivedVars {
        DerivedVars {
            inv: 0.0,
            hold: 0.0,
            ac1: 0.1,
            ac2: 0.01,
            age: 5.0,
            size: 22.0,
            tq: 2.0,
            ncps: 0.3,
            growth: 0.1,
            loss: 0.0,
            p: 13.0,
            dual: 0.0,
        }
    }

    #[test]
    fn design_has_expected_dummy_count() {
        // 2 years, 2 industries, 3 regressors, intercept: 1 + 3 + 1 + 1 = 6.
        let ds = toy_panel(4, 2010..=2011, |fi, y| {
            let mut d = base_vars();
            d.hold = fi as f64 * 0.1;
            d.inv = y as f64;
            d
        });
        let spec = ModelSpec::new(
            "INV",
            vec!["HOLD".into(), "TQ".into(), "SIZE".into()],
            vec![FixedEffect::Year, FixedEffect::Industry],
        )
        .unwrap();
        let (_, x) = build_design(&ds, &spec).unwrap();
        assert_eq!(x.values.ncols(), 6);
        assert_eq!(
            x.column_names,
            vec!["Constant", "HOLD", "TQ", "SIZE", "year::2011", "industry::K70"]
        );
    }

    #[test]
    fn single_level_dimension_emits_no_dummies() {
        let ds = toy_panel(3, 2015..=2015, |fi, _| {
            let mut d = base_vars();
            d.hold = fi as f64;
            d
        });
        let spec = ModelSpec::new("INV", vec!["HOLD".into()], vec![FixedEffect::Year]).unwrap();
        let (_, x) = build_design(&ds, &spec).unwrap();
        assert_eq!(x.column_names, vec!["Constant", "HOLD"]);
    }

    #[test]
    fn year_dummy_block_is_one_hot() {
        let ds = toy_panel(3, 2010..=2013, |fi, y| {
            let mut d = base_vars();
            d.hold = (fi as f64) + (y as f64) * 0.01;
            d
        });
        let spec = ModelSpec::new("INV", vec![], vec![FixedEffect::Year]).unwrap();
        let (_, x) = build_design(&ds, &spec).unwrap();
        let baseline = ds.year_levels()[0];
        for (i, (rec, _)) in ds.records().iter().enumerate() {
            let row_sum: f64 = (1..x.values.ncols()).map(|j| x.values[(i, j)]).sum();
            let expected = if rec.year == baseline { 0.0 } else { 1.0 };
            assert_eq!(row_sum, expected);
        }
    }

    #[test]
    fn model_spec_rejects_duplicates_and_self_dependence() {
        assert!(ModelSpec::new("INV", vec!["INV".into()], vec![]).is_err());
        assert!(ModelSpec::new("INV", vec!["HOLD".into(), "HOLD".into()], vec![]).is_err());
    }

    #[test]
    fn exact_linear_panel_fits_exactly() {
        let ds = toy_panel(5, 2010..=2011, |fi, y| {
            let mut d = base_vars();
            d.hold = 0.05 * fi as f64 + 0.01 * f64::from(y - 2010);
            d.inv = 2.0 * d.hold + 1.0;
            d
        });
        let spec = ModelSpec::new("INV", vec!["HOLD".into()], vec![]).unwrap();
        let fit = fit_model(&ds, &spec, SeMode::Classical).unwrap();
        assert!((fit.coef[fit.term_index("Constant").unwrap()] - 1.0).abs() < 1e-12);
        assert!((fit.coef[fit.term_index("HOLD").unwrap()] - 2.0).abs() < 1e-12);
        assert!((fit.r_squared - 1.0).abs() < 1e-12);
    }

    #[test]
    fn aliased_regressor_is_reported_by_name() {
        // AGE is constant within this panel slice, duplicating Constant.
        let ds = toy_panel(6, 2015..=2015, |fi, _| {
            let mut d = base_vars();
            d.hold = fi as f64 * 0.1;
            d.inv = d.hold + 0.5;
            d.age = 7.0;
            d
        });
        let spec = ModelSpec::new("INV", vec!["AGE".into(), "HOLD".into()], vec![]).unwrap();
        let fit = fit_model(&ds, &spec, SeMode::Classical).unwrap();
        assert_eq!(fit.dropped_terms, vec!["AGE"]);
        assert!(fit.term_index("HOLD").is_some());
    }

    #[test]
    fn r_squared_never_drops_when_a_regressor_is_added() {
        let ds = toy_panel(8, 2010..=2014, |fi, y| {
            let mut d = base_vars();
            let t = f64::from(y - 2010);
            d.hold = (fi as f64 * 0.37 + t * 0.11).sin().abs() * 0.5;
            d.tq = 1.0 + ((fi * 7 + y as usize) % 5) as f64 * 0.3;
            d.inv = 0.01 + 0.004 * d.hold + 0.002 * d.tq + 0.001 * (fi as f64 * 1.7 + t).cos();
            d
        });
        let small = ModelSpec::new("INV", vec!["HOLD".into()], vec![]).unwrap();
        let large = ModelSpec::new("INV", vec!["HOLD".into(), "TQ".into()], vec![]).unwrap();
        let r_small = fit_model(&ds, &small, SeMode::Classical).unwrap().r_squared;
        let r_large = fit_model(&ds, &large, SeMode::Classical).unwrap().r_squared;
        assert!(r_large >= r_small - 1e-12);
    }

    #[test]
    fn stars_follow_strict_thresholds() {
        assert_eq!(format_stars(0.005), "***");
        assert_eq!(format_stars(0.03), "**");
        assert_eq!(format_stars(0.07), "*");
        assert_eq!(format_stars(0.5), "");
        // Boundary values fall through to the weaker star.
        assert_eq!(format_stars(0.01), "**");
        assert_eq!(format_stars(0.05), "*");
        assert_eq!(format_stars(0.1), "");

        let th = StarThresholds {
            three: 0.001,
            two: 0.01,
            one: 0.05,
        };
        assert_eq!(format_stars_with(0.03, &th), "*");
        assert!(th.validate().is_ok());
        assert!(StarThresholds {
            three: 0.05,
            two: 0.01,
            one: 0.1
        }
        .validate()
        .is_err());
    }

    #[test]
    fn fwl_path_matches_dummy_design() {
        let ds = toy_panel(10, 2010..=2013, |fi, y| {
            let mut d = base_vars();
            let t = f64::from(y - 2010);
            d.hold = ((fi as f64 * 2.3 + t * 0.7).sin() + 1.1) * 0.2;
            d.tq = 1.5 + (fi as f64 * 0.9 - t * 0.4).cos() * 0.8;
            d.inv = 0.02 + 0.004 * d.hold - 0.001 * d.tq
                + 0.003 * t
                + if fi % 2 == 0 { 0.002 } else { -0.002 }
                + ((fi * 31 + y as usize * 17) % 97) as f64 * 1e-5;
            d
        });
        let spec = ModelSpec::new(
            "INV",
            vec!["HOLD".into(), "TQ".into()],
            vec![FixedEffect::Year, FixedEffect::Industry],
        )
        .unwrap();

        let full = fit_model(&ds, &spec, SeMode::Classical).unwrap();
        let (y_res, x_res) = within_demean(&ds, &spec).unwrap();
        let slopes = ols_fit(&y_res, &x_res).unwrap();

        for name in ["HOLD", "TQ"] {
            let a = full.coef[full.term_index(name).unwrap()];
            let b = slopes.coef[slopes.term_index(name).unwrap()];
            assert!((a - b).abs() < 1e-6, "{name}: {a} vs {b}");
        }
    }

    #[test]
    fn degenerate_fe_reduces_to_plain_fit() {
        let ds = toy_panel(6, 2015..=2015, |fi, _| {
            let mut d = base_vars();
            d.hold = fi as f64 * 0.1;
            d.inv = 0.01 + 0.03 * d.hold + (fi as f64 * 0.77).sin() * 1e-3;
            d
        });
        // One year level: the FE block is just the intercept.
        let fe_spec = ModelSpec::new("INV", vec!["HOLD".into()], vec![FixedEffect::Year]).unwrap();
        let plain = ModelSpec::new("INV", vec!["HOLD".into()], vec![]).unwrap();
        let a = fit_model(&ds, &fe_spec, SeMode::Classical).unwrap();
        let b = fit_model(&ds, &plain, SeMode::Classical).unwrap();
        let ha = a.coef[a.term_index("HOLD").unwrap()];
        let hb = b.coef[b.term_index("HOLD").unwrap()];
        assert!((ha - hb).abs() < 1e-12);
    }

    #[test]
    fn row_permutation_leaves_the_fit_unchanged() {
        let n = 40;
        let mut y_vals = Vec::with_capacity(n);
        let mut x1 = Vec::with_capacity(n);
        let mut x2 = Vec::with_capacity(n);
        for i in 0..n {
            let a = (i as f64 * 0.613).sin();
            let b = (i as f64 * 1.37).cos();
            x1.push(a);
            x2.push(b);
            y_vals.push(0.4 + 1.3 * a - 0.7 * b + (i as f64 * 2.9).sin() * 0.05);
        }
        let ones = vec![1.0; n];
        let build = |order: &[usize]| {
            let mut m = DMatrix::zeros(n, 3);
            let mut yv = DVector::zeros(n);
            for (row, &i) in order.iter().enumerate() {
                m[(row, 0)] = ones[i];
                m[(row, 1)] = x1[i];
                m[(row, 2)] = x2[i];
                yv[row] = y_vals[i];
            }
            (
                yv,
                VariableMatrix::new(
                    vec!["Constant".into(), "X1".into(), "X2".into()],
                    m,
                ),
            )
        };

        let forward: Vec<usize> = (0..n).collect();
        let mut shuffled: Vec<usize> = (0..n).map(|i| (i * 17 + 5) % n).collect();
        shuffled.dedup();
        assert_eq!(shuffled.len(), n, "17 is coprime with 40");

        let (y_a, x_a) = build(&forward);
        let (y_b, x_b) = build(&shuffled);
        let fa = ols_fit(&y_a, &x_a).unwrap();
        let fb = ols_fit(&y_b, &x_b).unwrap();
        for i in 0..3 {
            assert!((fa.coef[i] - fb.coef[i]).abs() <= 1e-10 * fa.coef[i].abs().max(1.0));
            assert!((fa.std_err[i] - fb.std_err[i]).abs() <= 1e-10 * fa.std_err[i].max(1.0));
        }
        assert!((fa.r_squared - fb.r_squared).abs() <= 1e-10);
    }

    #[test]
    fn cluster_se_differs_but_coefficients_do_not() {
        let ds = toy_panel(12, 2010..=2014, |fi, y| {
            let mut d = base_vars();
            let t = f64::from(y - 2010);
            d.hold = ((fi as f64 * 1.1).sin() + 1.2) * 0.2 + 0.01 * t;
            d.inv = 0.01 + 0.005 * d.hold
                + (fi as f64 * 0.37).sin() * 0.004   // firm-level shock
                + (t * 1.9).cos() * 0.0005;
            d
        });
        let spec = ModelSpec::new("INV", vec!["HOLD".into()], vec![FixedEffect::Year]).unwrap();
        let classical = fit_model(&ds, &spec, SeMode::Classical).unwrap();
        let clustered = fit_model(&ds, &spec, SeMode::ClusterFirm).unwrap();

        let i = classical.term_index("HOLD").unwrap();
        assert_eq!(classical.coef[i], clustered.coef[i]);
        assert!(clustered.std_err[i] > 0.0);
        assert_ne!(classical.std_err[i], clustered.std_err[i]);
        assert_eq!(clustered.se_type, SeMode::ClusterFirm);
    }
}
