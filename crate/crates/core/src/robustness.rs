//! Lead-outcome robustness: swap the outcome for its next-period value
//! within each firm and rerun the battery's outcome models.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::mediation::BatterySpec;
use crate::panel::PanelDataset;
use crate::regress::{fit_model, FitResult, ModelSpec, SeMode};

/// Add `L<variable>` holding each record's same-firm value at year t + 1,
/// dropping records with no observation at exactly t + 1. Gap years break
/// the chain: a firm observed in 2010 and 2012 contributes nothing.
///
/// All other variables, extra columns included, keep their period-t values.
pub fn lead_outcome(dataset: &PanelDataset, variable: &str) -> Result<PanelDataset> {
    let source = dataset.column(variable)?;
    let lead_name = format!("L{variable}");
    if dataset.has_variable(&lead_name) {
        return Err(Error::InvalidParams(format!(
            "variable `{lead_name}` already exists; lead would overwrite it"
        )));
    }

    // records are sorted by (firm_id, year), so the successor of row i is
    // row i + 1 exactly when the firm matches and the year is consecutive.
    let records = dataset.records();
    let mut keep: Vec<usize> = Vec::with_capacity(records.len());
    let mut lead_values: Vec<f64> = Vec::with_capacity(records.len());
    for i in 0..records.len().saturating_sub(1) {
        let (cur, _) = &records[i];
        let (next, _) = &records[i + 1];
        if cur.firm_id == next.firm_id && next.year == cur.year + 1 {
            keep.push(i);
            lead_values.push(source[i + 1]);
        }
    }

    let kept_pairs = keep.iter().map(|&i| records[i].clone()).collect();
    let mut out = PanelDataset::new(kept_pairs);
    let extras: Vec<String> = dataset.extra_names().map(str::to_string).collect();
    for name in extras {
        let full = dataset.column(&name)?;
        out = out.with_extra(&name, keep.iter().map(|&i| full[i]).collect());
    }
    Ok(out.with_extra(&lead_name, lead_values))
}

/// The three lead-outcome models: treatment alone, then treatment with each
/// mediator, all with the battery's controls and fixed effects.
pub fn run_robustness(
    dataset: &PanelDataset,
    spec: &BatterySpec,
    se_mode: SeMode,
) -> Result<Vec<FitResult>> {
    spec.validate()?;
    let lead = lead_outcome(dataset, &spec.outcome)?;
    let lead_name = format!("L{}", spec.outcome);

    let model = |extra: Option<&str>| -> Result<ModelSpec> {
        let mut regressors = vec![spec.treatment.clone()];
        regressors.extend(extra.map(str::to_string));
        regressors.extend(spec.controls.iter().cloned());
        ModelSpec::new(lead_name.clone(), regressors, spec.fixed_effects.clone())
    };
    let specs = [
        model(None)?,
        model(Some(&spec.mediators.0))?,
        model(Some(&spec.mediators.1))?,
    ];

    specs
        .into_par_iter()
        .map(|m| fit_model(&lead, &m, se_mode))
        .collect()
}
