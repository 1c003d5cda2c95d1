//! Text, CSV, and JSON renderings of the analysis products.
//!
//! Text output targets a human eye: significant-digit rounding, aligned
//! columns, the two-line coefficient/(t) convention of journal regression
//! tables. CSV and JSON carry full-precision values for downstream scripts;
//! JSON is the lossless form (every field of the underlying structs).

use std::fmt::Write as _;
use std::str::FromStr;

use serde_json::json;

use crate::error::{Error, Result};
use crate::mediation::MediationReport;
use crate::prep::{CorrelationMatrix, DescriptiveRow};
use crate::regress::{FitResult, FixedEffect};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Text,
    Csv,
    Json,
}

impl FromStr for OutputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<OutputFormat> {
        match s.to_ascii_lowercase().as_str() {
            "text" => Ok(OutputFormat::Text),
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            other => Err(Error::InvalidParams(format!(
                "unknown format `{other}`, expected text, csv, or json"
            ))),
        }
    }
}

impl OutputFormat {
    pub fn extension(self) -> &'static str {
        match self {
            OutputFormat::Text => "txt",
            OutputFormat::Csv => "csv",
            OutputFormat::Json => "json",
        }
    }
}

/// Round to `sig` significant digits. Magnitudes below 1e-4 switch to
/// e-notation so near-zero coefficients stay readable; trailing zeros are
/// trimmed from plain decimals.
pub fn format_number(x: f64, sig: usize) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let sig = sig.max(1);
    if x.abs() < 1e-4 {
        return format!("{:.*e}", sig - 1, x);
    }
    let decimals = (sig as i32 - 1 - x.abs().log10().floor() as i32).max(0) as usize;
    let s = format!("{x:.decimals$}");
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

pub fn format_coef(x: f64) -> String {
    format_number(x, 3)
}

pub fn format_t(x: f64) -> String {
    format_number(x, 4)
}

pub fn format_r_squared(x: f64) -> String {
    format!("{x:.3}")
}

/// Effect share as a percentage; NaN (zero total effect) prints as
/// undefined rather than propagating into the table.
pub fn format_percent(ratio: f64) -> String {
    if ratio.is_nan() {
        "undefined".to_string()
    } else {
        format!("{}%", format_number(100.0 * ratio, 3))
    }
}

/// Column-aligned plain-text table: first column left-aligned, the rest
/// right-aligned, two spaces between columns.
fn align(rows: &[Vec<String>]) -> String {
    let n_cols = rows.iter().map(Vec::len).max().unwrap_or(0);
    let mut widths = vec![0usize; n_cols];
    for row in rows {
        for (j, cell) in row.iter().enumerate() {
            widths[j] = widths[j].max(cell.chars().count());
        }
    }
    let mut out = String::new();
    for row in rows {
        let mut line = String::new();
        for (j, cell) in row.iter().enumerate() {
            if j > 0 {
                line.push_str("  ");
            }
            let pad = widths[j] - cell.chars().count();
            if j == 0 {
                line.push_str(cell);
                if j + 1 < row.len() {
                    line.push_str(&" ".repeat(pad));
                }
            } else {
                line.push_str(&" ".repeat(pad));
                line.push_str(cell);
            }
        }
        out.push_str(line.trim_end());
        out.push('\n');
    }
    out
}

fn is_dummy(term: &str) -> bool {
    term.contains("::")
}

/// Row order for the table: fixed-effect dummies collapse into the Year/Ind
/// footer and the intercept pins last. Remaining terms sort by the latest
/// position any fit assigns them (ties by first appearance), so a regressor
/// a later model inserts early, a mediator say, lands right after the
/// treatment instead of after the shared controls.
fn display_terms(fits: &[&FitResult]) -> Vec<String> {
    let mut order: Vec<(String, usize, usize)> = Vec::new();
    let mut has_constant = false;
    for (f, fit) in fits.iter().enumerate() {
        let mut pos = 0;
        for term in &fit.terms {
            if is_dummy(term) {
                continue;
            }
            if term == "Constant" {
                has_constant = true;
                continue;
            }
            match order.iter_mut().find(|(t, _, _)| t == term) {
                Some((_, p, _)) => *p = (*p).max(pos),
                None => order.push((term.clone(), pos, f)),
            }
            pos += 1;
        }
    }
    order.sort_by_key(|&(_, pos, first_fit)| (pos, first_fit));
    let mut terms: Vec<String> = order.into_iter().map(|(t, _, _)| t).collect();
    if has_constant {
        terms.push("Constant".to_string());
    }
    terms
}

/// Journal-style regression table: one column per fit, two lines per term
/// (coefficient with stars, then the t-statistic in parentheses), footer
/// rows for fixed effects, observations, and fit.
pub fn regression_table(fits: &[&FitResult]) -> String {
    let mut rows: Vec<Vec<String>> = Vec::new();
    let mut header = vec![String::new()];
    for (i, fit) in fits.iter().enumerate() {
        header.push(format!("({}) {}", i + 1, fit.spec.dependent));
    }
    rows.push(header);

    for term in display_terms(fits) {
        let mut coef_row = vec![term.clone()];
        let mut t_row = vec![String::new()];
        for fit in fits {
            match fit.term_index(&term) {
                Some(i) => {
                    coef_row.push(format!("{}{}", format_coef(fit.coef[i]), fit.stars[i]));
                    t_row.push(format!("({})", format_t(fit.t_stat[i])));
                }
                None => {
                    coef_row.push(String::new());
                    t_row.push(String::new());
                }
            }
        }
        rows.push(coef_row);
        rows.push(t_row);
    }

    for (label, dim) in [("Year", FixedEffect::Year), ("Ind", FixedEffect::Industry)] {
        let mut row = vec![label.to_string()];
        for fit in fits {
            row.push(if fit.spec.fixed_effects.contains(&dim) { "yes" } else { "no" }.to_string());
        }
        rows.push(row);
    }
    let mut obs = vec!["Observations".to_string()];
    let mut r2 = vec!["R-squared".to_string()];
    for fit in fits {
        obs.push(fit.n_obs.to_string());
        r2.push(format_r_squared(fit.r_squared));
    }
    rows.push(obs);
    rows.push(r2);

    align(&rows)
}

/// Full-precision per-term export. A single fit uses the bare
/// `term,coef,se,t,p,stars` schema; multiple fits gain a leading `model`
/// column naming each column of the corresponding text table.
pub fn fits_csv(fits: &[&FitResult]) -> String {
    let mut out = String::new();
    let labeled = fits.len() > 1;
    if labeled {
        out.push_str("model,term,coef,se,t,p,stars\n");
    } else {
        out.push_str("term,coef,se,t,p,stars\n");
    }
    for (m, fit) in fits.iter().enumerate() {
        for i in 0..fit.terms.len() {
            if labeled {
                let _ = write!(out, "({}) {},", m + 1, fit.spec.dependent);
            }
            let _ = writeln!(
                out,
                "{},{},{},{},{},{}",
                fit.terms[i], fit.coef[i], fit.std_err[i], fit.t_stat[i], fit.p_value[i],
                fit.stars[i]
            );
        }
    }
    out
}

pub fn fits_json(fits: &[&FitResult]) -> String {
    let mut s = serde_json::to_string_pretty(fits).expect("FitResult serializes");
    s.push('\n');
    s
}

pub fn descriptives_text(rows: &[DescriptiveRow]) -> String {
    let mut table = vec![
        ["Variable", "Observation", "Mean", "Std Dev.", "Min", "Max"]
            .map(str::to_string)
            .to_vec(),
    ];
    for r in rows {
        table.push(vec![
            r.variable.clone(),
            r.n.to_string(),
            format_number(r.mean, 3),
            format_number(r.std_dev, 3),
            format_number(r.min, 3),
            format_number(r.max, 3),
        ]);
    }
    align(&table)
}

pub fn descriptives_csv(rows: &[DescriptiveRow]) -> String {
    let mut out = String::from("variable,n,mean,std_dev,min,max\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            r.variable, r.n, r.mean, r.std_dev, r.min, r.max
        );
    }
    out
}

pub fn descriptives_json(rows: &[DescriptiveRow]) -> String {
    let mut s = serde_json::to_string_pretty(rows).expect("DescriptiveRow serializes");
    s.push('\n');
    s
}

/// Lower-triangle correlation table with significance stars; the diagonal
/// prints as a bare 1.
pub fn correlation_text(m: &CorrelationMatrix) -> String {
    let mut rows: Vec<Vec<String>> = Vec::new();
    let mut header = vec![String::new()];
    header.extend(m.variables.iter().cloned());
    rows.push(header);
    for (i, var) in m.variables.iter().enumerate() {
        let mut row = vec![var.clone()];
        for j in 0..m.variables.len() {
            row.push(if j > i {
                String::new()
            } else if j == i {
                "1".to_string()
            } else {
                format!(
                    "{:.3}{}",
                    m.r[(i, j)],
                    crate::regress::format_stars(m.p[(i, j)])
                )
            });
        }
        rows.push(row);
    }
    format!("Pearson correlations (n = {})\n{}", m.n_obs, align(&rows))
}

pub fn correlation_csv(m: &CorrelationMatrix) -> String {
    let mut out = String::from("var_a,var_b,r,p\n");
    for i in 0..m.variables.len() {
        for j in 0..i {
            let _ = writeln!(
                out,
                "{},{},{},{}",
                m.variables[i],
                m.variables[j],
                m.r[(i, j)],
                m.p[(i, j)]
            );
        }
    }
    out
}

pub fn correlation_json(m: &CorrelationMatrix) -> String {
    let dense = |mat: &nalgebra::DMatrix<f64>| -> Vec<Vec<f64>> {
        (0..mat.nrows())
            .map(|i| (0..mat.ncols()).map(|j| mat[(i, j)]).collect())
            .collect()
    };
    let mut s = serde_json::to_string_pretty(&json!({
        "variables": m.variables,
        "n_obs": m.n_obs,
        "r": dense(&m.r),
        "p": dense(&m.p),
    }))
    .expect("correlation matrix serializes");
    s.push('\n');
    s
}

fn estimate_line(label: &str, e: crate::mediation::Estimate) -> String {
    format!(
        "  {label:<22} {} (p = {})\n",
        format_coef(e.value),
        format_number(e.p, 3)
    )
}

/// The full battery report: the five-model table, one block per channel
/// with its verdict and effect share, then one `Hx: supported` line per
/// hypothesis.
pub fn mediation_text(report: &MediationReport) -> String {
    let fits: Vec<&FitResult> = report.fits.iter().collect();
    let mut out = String::from("Mediation battery\n\n");
    out.push_str(&regression_table(&fits));

    let channels = [
        (
            &report.fits[1].spec.dependent,
            report.verdict_ac1,
            report.alpha1,
            report.beta1,
            report.lambda1,
            report.lambda2,
            report.ratio_ac1,
        ),
        (
            &report.fits[2].spec.dependent,
            report.verdict_ac2,
            report.alpha1,
            report.gamma1,
            report.mu1,
            report.mu2,
            report.ratio_ac2,
        ),
    ];
    for (name, verdict, total, path, direct, mediator, ratio) in channels {
        let _ = write!(out, "\nChannel {name}: {verdict}\n");
        out.push_str(&estimate_line("total effect", total));
        out.push_str(&estimate_line("treatment -> mediator", path));
        out.push_str(&estimate_line("direct effect", direct));
        out.push_str(&estimate_line("mediator -> outcome", mediator));
        let _ = writeln!(out, "  share of total effect   {}", format_percent(ratio));
    }

    out.push_str("\nHypotheses\n");
    for (name, supported) in &report.hypothesis_verdicts {
        let _ = writeln!(
            out,
            "  {name}: {}",
            if *supported { "supported" } else { "not supported" }
        );
    }
    out
}

/// Quantitative content only (the five fits); verdicts and ratios live in
/// the text and JSON forms.
pub fn mediation_csv(report: &MediationReport) -> String {
    fits_csv(&report.fits.iter().collect::<Vec<_>>())
}

pub fn mediation_json(report: &MediationReport) -> String {
    let mut s = serde_json::to_string_pretty(report).expect("MediationReport serializes");
    s.push('\n');
    s
}
