//! Five-model mediation battery: total effect, treatment→mediator paths,
//! and mediator-adjusted outcome models, classified by stepwise coefficient
//! comparison into partial/full/no-mediation verdicts, with effect ratios
//! and hypothesis verdicts derived from the same fits.

use std::collections::BTreeMap;
use std::fmt;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::panel::PanelDataset;
use crate::regress::{fit_model, FitResult, FixedEffect, ModelSpec, SeMode};

/// A coefficient with its two-sided p-value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Estimate {
    pub value: f64,
    pub p: f64,
}

impl From<(f64, f64)> for Estimate {
    fn from((value, p): (f64, f64)) -> Self {
        Estimate { value, p }
    }
}

impl Estimate {
    fn significant_at(&self, threshold: f64) -> bool {
        self.p < threshold
    }
}

/// Sign the treatment→mediator path must carry for the channel to count.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ExpectedSign {
    Positive,
    Negative,
}

impl ExpectedSign {
    fn matches(self, value: f64) -> bool {
        match self {
            ExpectedSign::Positive => value > 0.0,
            ExpectedSign::Negative => value < 0.0,
        }
    }
}

/// How the indirect channel relates to the total effect.
///
/// A consistent channel carries part of the total effect, so adjusting for
/// the mediator shrinks the treatment coefficient; a suppression channel
/// works against the total effect, so adjusting for the mediator makes the
/// treatment coefficient larger.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum MediationForm {
    Consistent,
    Suppression,
}

/// Outcome of the stepwise classification for one channel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum MediationVerdict {
    /// Every gate passed and the adjusted treatment coefficient moved the
    /// way the channel's form predicts, while staying significant.
    Partial(MediationForm),
    /// Every gate passed and adjusting for the mediator left the treatment
    /// coefficient insignificant.
    Full(MediationForm),
    /// Every regression gate passed but the coefficient comparison
    /// contradicts the channel's form.
    NoMediation,
    /// Gate `n` failed: 1 total effect, 2 treatment→mediator path,
    /// 3 mediator coefficient, 4 adjusted treatment coefficient sign.
    StepFailed(u8),
}

impl MediationVerdict {
    pub fn is_mediation(self) -> bool {
        matches!(self, MediationVerdict::Partial(_) | MediationVerdict::Full(_))
    }
}

impl fmt::Display for MediationVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MediationVerdict::Partial(MediationForm::Consistent) => write!(f, "partial mediation"),
            MediationVerdict::Partial(MediationForm::Suppression) => {
                write!(f, "partial mediation (suppression)")
            }
            MediationVerdict::Full(MediationForm::Consistent) => write!(f, "full mediation"),
            MediationVerdict::Full(MediationForm::Suppression) => {
                write!(f, "full mediation (suppression)")
            }
            MediationVerdict::NoMediation => write!(f, "no mediation"),
            MediationVerdict::StepFailed(step) => write!(f, "step {step} failed"),
        }
    }
}

/// Per-channel significance gates and comparison rule.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ChannelRule {
    /// p threshold for the total effect of the treatment on the outcome.
    pub total_p: f64,
    /// p threshold for the treatment→mediator path.
    pub path_p: f64,
    /// p threshold for the treatment coefficient in the adjusted model.
    pub direct_p: f64,
    /// p threshold for the mediator coefficient in the adjusted model.
    pub mediator_p: f64,
    pub path_sign: ExpectedSign,
    pub form: MediationForm,
    /// The classical recipe skips the mediator-coefficient gate; leaving it
    /// on rejects channels whose mediator does nothing in the outcome model.
    pub require_mediator_significance: bool,
}

impl ChannelRule {
    /// A channel expected to transmit part of a positive total effect
    /// through a mediator the treatment suppresses.
    pub fn consistent_negative_path() -> ChannelRule {
        ChannelRule {
            total_p: 0.01,
            path_p: 0.01,
            direct_p: 0.01,
            mediator_p: 0.01,
            path_sign: ExpectedSign::Negative,
            form: MediationForm::Consistent,
            require_mediator_significance: true,
        }
    }

    /// A channel working against the total effect through a mediator the
    /// treatment raises; the path gate is looser because such paths are
    /// typically weak.
    pub fn suppression_positive_path() -> ChannelRule {
        ChannelRule {
            path_p: 0.1,
            path_sign: ExpectedSign::Positive,
            form: MediationForm::Suppression,
            ..ChannelRule::consistent_negative_path()
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, p) in [
            ("total_p", self.total_p),
            ("path_p", self.path_p),
            ("direct_p", self.direct_p),
            ("mediator_p", self.mediator_p),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::InvalidParams(format!(
                    "channel threshold {name} must lie in [0, 1], got {p}"
                )));
            }
        }
        Ok(())
    }
}

/// The whole battery: outcome, treatment, two mediated channels, controls,
/// and fixed effects shared by all five models.
#[derive(Debug, Clone, Serialize)]
pub struct BatterySpec {
    pub outcome: String,
    pub treatment: String,
    pub mediators: (String, String),
    pub controls: Vec<String>,
    pub fixed_effects: Vec<FixedEffect>,
    pub channel_rules: (ChannelRule, ChannelRule),
}

impl Default for BatterySpec {
    fn default() -> Self {
        BatterySpec {
            outcome: "INV".to_string(),
            treatment: "HOLD".to_string(),
            mediators: ("AC1".to_string(), "AC2".to_string()),
            controls: ["AGE", "SIZE", "TQ", "NCPS", "GROWTH", "LOSS", "P", "DUAL"]
                .iter()
                .map(|s| s.to_string())
                .collect(),
            fixed_effects: vec![FixedEffect::Year, FixedEffect::Industry],
            channel_rules: (
                ChannelRule::consistent_negative_path(),
                ChannelRule::suppression_positive_path(),
            ),
        }
    }
}

impl BatterySpec {
    pub fn validate(&self) -> Result<()> {
        let mut names = vec![
            self.outcome.as_str(),
            self.treatment.as_str(),
            self.mediators.0.as_str(),
            self.mediators.1.as_str(),
        ];
        names.extend(self.controls.iter().map(|s| s.as_str()));
        for (i, name) in names.iter().enumerate() {
            if name.is_empty() {
                return Err(Error::InvalidParams("empty variable name".to_string()));
            }
            if names[..i].contains(name) {
                return Err(Error::InvalidParams(format!(
                    "`{name}` appears twice across outcome/treatment/mediators/controls"
                )));
            }
        }
        self.channel_rules.0.validate()?;
        self.channel_rules.1.validate()
    }

    /// The five model specifications, in report column order.
    pub fn model_specs(&self) -> Result<[ModelSpec; 5]> {
        let spec = |dependent: &str, extra: Option<&str>| -> Result<ModelSpec> {
            let mut regressors = vec![self.treatment.clone()];
            regressors.extend(extra.map(str::to_string));
            regressors.extend(self.controls.iter().cloned());
            ModelSpec::new(dependent, regressors, self.fixed_effects.clone())
        };
        Ok([
            spec(&self.outcome, None)?,
            spec(&self.mediators.0, None)?,
            spec(&self.mediators.1, None)?,
            spec(&self.outcome, Some(&self.mediators.0))?,
            spec(&self.outcome, Some(&self.mediators.1))?,
        ])
    }
}

/// Everything the battery produced: the five fits, the seven named
/// coefficients, per-channel verdicts and effect ratios, and the hypothesis
/// map.
#[derive(Debug, Clone, Serialize)]
pub struct MediationReport {
    pub fits: Vec<FitResult>,
    pub alpha1: Estimate,
    pub beta1: Estimate,
    pub gamma1: Estimate,
    pub lambda1: Estimate,
    pub lambda2: Estimate,
    pub mu1: Estimate,
    pub mu2: Estimate,
    pub verdict_ac1: MediationVerdict,
    pub verdict_ac2: MediationVerdict,
    /// Share of the total effect carried by each channel; NaN when the
    /// estimated total effect is exactly zero.
    pub ratio_ac1: f64,
    pub ratio_ac2: f64,
    pub hypothesis_verdicts: BTreeMap<String, bool>,
}

/// Stepwise classification of one channel.
///
/// Gates, in order: the total effect must be significantly positive; the
/// treatment→mediator path must be significant with the expected sign; the
/// mediator must matter in the adjusted model (when required); and the
/// adjusted treatment coefficient must not flip significantly negative.
/// With all gates passed, an insignificant adjusted treatment coefficient
/// means the channel absorbs the whole effect (full mediation); otherwise
/// the verdict hinges on the form's coefficient comparison.
pub fn classify_mediation(
    total: Estimate,
    path: Estimate,
    direct: Estimate,
    mediator: Estimate,
    rule: &ChannelRule,
) -> MediationVerdict {
    if !(total.significant_at(rule.total_p) && total.value > 0.0) {
        return MediationVerdict::StepFailed(1);
    }
    if !(path.significant_at(rule.path_p) && rule.path_sign.matches(path.value)) {
        return MediationVerdict::StepFailed(2);
    }
    if rule.require_mediator_significance && !mediator.significant_at(rule.mediator_p) {
        return MediationVerdict::StepFailed(3);
    }
    if !direct.significant_at(rule.direct_p) {
        return MediationVerdict::Full(rule.form);
    }
    if direct.value <= 0.0 {
        return MediationVerdict::StepFailed(4);
    }
    let moved_as_predicted = match rule.form {
        MediationForm::Consistent => direct.value < total.value,
        MediationForm::Suppression => direct.value > total.value,
    };
    if moved_as_predicted {
        MediationVerdict::Partial(rule.form)
    } else {
        MediationVerdict::NoMediation
    }
}

/// (path_a × path_b) / total: the fraction of the total effect routed
/// through the channel. Signed; negative for suppression channels.
pub fn mediation_ratio(path_a: f64, path_b: f64, total_effect: f64) -> Result<f64> {
    if total_effect == 0.0 {
        return Err(Error::ZeroTotalEffect);
    }
    Ok(path_a * path_b / total_effect)
}

/// Hypothesis map from the extracted coefficients and channel verdicts:
/// H1 positive total effect; H2a treatment lowers the first mediator;
/// H2b the first channel mediates with a negative mediator coefficient;
/// H2c treatment raises the second mediator; H2d the second channel is a
/// suppression mediation with a negative mediator coefficient.
#[allow(clippy::too_many_arguments)]
pub fn hypothesis_verdicts(
    alpha1: Estimate,
    beta1: Estimate,
    gamma1: Estimate,
    lambda2: Estimate,
    mu2: Estimate,
    verdict_ac1: MediationVerdict,
    verdict_ac2: MediationVerdict,
    rules: &(ChannelRule, ChannelRule),
) -> BTreeMap<String, bool> {
    let mut map = BTreeMap::new();
    map.insert(
        "H1".to_string(),
        alpha1.value > 0.0 && alpha1.significant_at(rules.0.total_p),
    );
    map.insert(
        "H2a".to_string(),
        beta1.value < 0.0 && beta1.significant_at(rules.0.path_p),
    );
    map.insert(
        "H2b".to_string(),
        verdict_ac1.is_mediation() && lambda2.value < 0.0,
    );
    map.insert(
        "H2c".to_string(),
        gamma1.value > 0.0 && gamma1.significant_at(rules.1.path_p),
    );
    map.insert(
        "H2d".to_string(),
        matches!(
            verdict_ac2,
            MediationVerdict::Partial(MediationForm::Suppression)
                | MediationVerdict::Full(MediationForm::Suppression)
        ) && mu2.value < 0.0,
    );
    map
}

/// Fit the five models on the identical sample, extract the named
/// coefficients, and classify both channels.
pub fn run_battery(
    dataset: &PanelDataset,
    spec: &BatterySpec,
    se_mode: SeMode,
) -> Result<MediationReport> {
    spec.validate()?;
    let specs = spec.model_specs()?;

    let fits: Vec<FitResult> = specs
        .into_par_iter()
        .map(|model| fit_model(dataset, &model, se_mode))
        .collect::<Result<_>>()?;
    assert!(
        fits.iter().all(|f| f.n_obs == fits[0].n_obs),
        "battery models must share one sample"
    );

    let coef = |fit: &FitResult, term: &str| -> Result<Estimate> {
        fit.coef_p(term).map(Estimate::from).ok_or_else(|| {
            Error::InvalidParams(format!(
                "`{term}` was dropped as collinear in the `{}` model; the battery is undefined",
                fit.spec.dependent
            ))
        })
    };
    let alpha1 = coef(&fits[0], &spec.treatment)?;
    let beta1 = coef(&fits[1], &spec.treatment)?;
    let gamma1 = coef(&fits[2], &spec.treatment)?;
    let lambda1 = coef(&fits[3], &spec.treatment)?;
    let lambda2 = coef(&fits[3], &spec.mediators.0)?;
    let mu1 = coef(&fits[4], &spec.treatment)?;
    let mu2 = coef(&fits[4], &spec.mediators.1)?;

    let verdict_ac1 = classify_mediation(alpha1, beta1, lambda1, lambda2, &spec.channel_rules.0);
    let verdict_ac2 = classify_mediation(alpha1, gamma1, mu1, mu2, &spec.channel_rules.1);

    let ratio = |a: f64, b: f64| {
        mediation_ratio(a, b, alpha1.value).unwrap_or(f64::NAN)
    };
    let ratio_ac1 = ratio(beta1.value, lambda2.value);
    let ratio_ac2 = ratio(gamma1.value, mu2.value);

    let hypothesis_verdicts = hypothesis_verdicts(
        alpha1,
        beta1,
        gamma1,
        lambda2,
        mu2,
        verdict_ac1,
        verdict_ac2,
        &spec.channel_rules,
    );

    Ok(MediationReport {
        fits,
        alpha1,
        beta1,
        gamma1,
        lambda1,
        lambda2,
        mu1,
        mu2,
        verdict_ac1,
        verdict_ac2,
        ratio_ac1,
        ratio_ac2,
        hypothesis_verdicts,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::panel::{DerivedVars, FirmYearRecord, PanelDataset};

    fn est(value: f64, p: f64) -> Estimate {
        Estimate { value, p }
    }

    // Published five-model battery values for the first channel.
    const TOTAL: (f64, f64) = (0.00441, 0.001);
    const PATH_1: (f64, f64) = (-0.0422, 0.001);
    const DIRECT_1: (f64, f64) = (0.00337, 0.001);
    const MEDIATOR_1: (f64, f64) = (-0.0247, 0.001);
    // And for the second, suppression-form channel.
    const PATH_2: (f64, f64) = (0.00142, 0.06);
    const DIRECT_2: (f64, f64) = (0.00456, 0.001);
    const MEDIATOR_2: (f64, f64) = (-0.0348, 0.001);

    #[test]
    fn consistent_channel_reproduces_partial_mediation() {
        let verdict = classify_mediation(
            TOTAL.into(),
            PATH_1.into(),
            DIRECT_1.into(),
            MEDIATOR_1.into(),
            &ChannelRule::consistent_negative_path(),
        );
        assert_eq!(verdict, MediationVerdict::Partial(MediationForm::Consistent));
    }

    #[test]
    fn suppression_channel_reproduces_partial_mediation() {
        let verdict = classify_mediation(
            TOTAL.into(),
            PATH_2.into(),
            DIRECT_2.into(),
            MEDIATOR_2.into(),
            &ChannelRule::suppression_positive_path(),
        );
        assert_eq!(
            verdict,
            MediationVerdict::Partial(MediationForm::Suppression)
        );
    }

    #[test]
    fn insignificant_total_fails_step_one() {
        let verdict = classify_mediation(
            est(0.004, 0.5),
            PATH_1.into(),
            DIRECT_1.into(),
            MEDIATOR_1.into(),
            &ChannelRule::consistent_negative_path(),
        );
        assert_eq!(verdict, MediationVerdict::StepFailed(1));
    }

    #[test]
    fn negative_total_fails_step_one_even_when_significant() {
        let verdict = classify_mediation(
            est(-0.004, 0.001),
            PATH_1.into(),
            DIRECT_1.into(),
            MEDIATOR_1.into(),
            &ChannelRule::consistent_negative_path(),
        );
        assert_eq!(verdict, MediationVerdict::StepFailed(1));
    }

    #[test]
    fn wrong_path_sign_fails_step_two() {
        let verdict = classify_mediation(
            TOTAL.into(),
            est(0.0422, 0.001),
            DIRECT_1.into(),
            MEDIATOR_1.into(),
            &ChannelRule::consistent_negative_path(),
        );
        assert_eq!(verdict, MediationVerdict::StepFailed(2));
    }

    #[test]
    fn loose_path_gate_admits_marginal_suppression_path() {
        // p = 0.06 passes the 0.1 gate but would fail a 0.01 gate.
        let tight = ChannelRule {
            path_p: 0.01,
            ..ChannelRule::suppression_positive_path()
        };
        let verdict = classify_mediation(
            TOTAL.into(),
            PATH_2.into(),
            DIRECT_2.into(),
            MEDIATOR_2.into(),
            &tight,
        );
        assert_eq!(verdict, MediationVerdict::StepFailed(2));
    }

    #[test]
    fn insignificant_mediator_fails_step_three_unless_waived() {
        let weak_mediator = est(-0.0247, 0.4);
        let rule = ChannelRule::consistent_negative_path();
        let verdict = classify_mediation(
            TOTAL.into(),
            PATH_1.into(),
            DIRECT_1.into(),
            weak_mediator,
            &rule,
        );
        assert_eq!(verdict, MediationVerdict::StepFailed(3));

        let waived = ChannelRule {
            require_mediator_significance: false,
            ..rule
        };
        let verdict = classify_mediation(
            TOTAL.into(),
            PATH_1.into(),
            DIRECT_1.into(),
            weak_mediator,
            &waived,
        );
        assert_eq!(verdict, MediationVerdict::Partial(MediationForm::Consistent));
    }

    #[test]
    fn insignificant_direct_means_full_mediation() {
        let verdict = classify_mediation(
            TOTAL.into(),
            PATH_1.into(),
            est(0.0005, 0.6),
            MEDIATOR_1.into(),
            &ChannelRule::consistent_negative_path(),
        );
        assert_eq!(verdict, MediationVerdict::Full(MediationForm::Consistent));
    }

    #[test]
    fn significantly_negative_direct_fails_step_four() {
        let verdict = classify_mediation(
            TOTAL.into(),
            PATH_1.into(),
            est(-0.002, 0.001),
            MEDIATOR_1.into(),
            &ChannelRule::consistent_negative_path(),
        );
        assert_eq!(verdict, MediationVerdict::StepFailed(4));
    }

    #[test]
    fn comparison_failure_is_no_mediation() {
        // Consistent form expects the adjusted coefficient to shrink.
        let verdict = classify_mediation(
            TOTAL.into(),
            PATH_1.into(),
            est(0.005, 0.001),
            MEDIATOR_1.into(),
            &ChannelRule::consistent_negative_path(),
        );
        assert_eq!(verdict, MediationVerdict::NoMediation);

        // Suppression form expects it to grow.
        let verdict = classify_mediation(
            TOTAL.into(),
            PATH_2.into(),
            est(0.004, 0.001),
            MEDIATOR_2.into(),
            &ChannelRule::suppression_positive_path(),
        );
        assert_eq!(verdict, MediationVerdict::NoMediation);
    }

    #[test]
    fn ratio_reproduces_reported_percentages() {
        let r1 = mediation_ratio(PATH_1.0, MEDIATOR_1.0, TOTAL.0).unwrap();
        assert!((r1 * 100.0 - 23.6).abs() < 0.05);
        let r2 = mediation_ratio(PATH_2.0, MEDIATOR_2.0, TOTAL.0).unwrap();
        assert!((r2 * 100.0 - -1.12).abs() < 0.01);
    }

    #[test]
    fn ratio_edge_cases() {
        assert_eq!(mediation_ratio(0.0, -0.5, 0.004).unwrap(), 0.0);
        assert!(matches!(
            mediation_ratio(0.1, 0.2, 0.0),
            Err(Error::ZeroTotalEffect)
        ));
    }

    #[test]
    fn ratio_is_scale_homogeneous() {
        let base = mediation_ratio(-0.0422, -0.0247, 0.00441).unwrap();
        for c in [0.5, 2.0, 10.0] {
            let scaled = mediation_ratio(-0.0422 * c, -0.0247, 0.00441 * c).unwrap();
            assert!((scaled - base).abs() < 1e-12);
        }
    }

    #[test]
    fn hypotheses_supported_on_published_values() {
        let map = hypothesis_verdicts(
            TOTAL.into(),
            PATH_1.into(),
            PATH_2.into(),
            MEDIATOR_1.into(),
            MEDIATOR_2.into(),
            MediationVerdict::Partial(MediationForm::Consistent),
            MediationVerdict::Partial(MediationForm::Suppression),
            &(
                ChannelRule::consistent_negative_path(),
                ChannelRule::suppression_positive_path(),
            ),
        );
        assert!(map.values().all(|&v| v));
        assert_eq!(
            map.keys().collect::<Vec<_>>(),
            vec!["H1", "H2a", "H2b", "H2c", "H2d"]
        );
    }

    #[test]
    fn hypotheses_all_unsupported_on_zero_coefficients() {
        let zero = est(0.0, 1.0);
        let map = hypothesis_verdicts(
            zero,
            zero,
            zero,
            zero,
            zero,
            MediationVerdict::StepFailed(1),
            MediationVerdict::StepFailed(1),
            &(
                ChannelRule::consistent_negative_path(),
                ChannelRule::suppression_positive_path(),
            ),
        );
        assert!(map.values().all(|&v| !v));
    }

    #[test]
    fn sign_gate_splits_h1_from_h2a() {
        let map = hypothesis_verdicts(
            TOTAL.into(),
            est(0.0422, 0.001),
            est(0.0, 1.0),
            MEDIATOR_1.into(),
            MEDIATOR_2.into(),
            MediationVerdict::StepFailed(2),
            MediationVerdict::StepFailed(2),
            &(
                ChannelRule::consistent_negative_path(),
                ChannelRule::suppression_positive_path(),
            ),
        );
        assert!(map["H1"]);
        assert!(!map["H2a"]);
        assert!(!map["H2b"]);
    }

    #[test]
    fn battery_spec_rejects_overlapping_names() {
        let mut spec = BatterySpec::default();
        spec.controls.push("HOLD".to_string());
        assert!(spec.validate().is_err());
    }

    #[test]
    fn model_specs_match_the_five_column_layout() {
        let specs = BatterySpec::default().model_specs().unwrap();
        let deps: Vec<&str> = specs.iter().map(|s| s.dependent.as_str()).collect();
        assert_eq!(deps, vec!["INV", "AC1", "AC2", "INV", "INV"]);
        assert_eq!(specs[0].regressors[0], "HOLD");
        assert_eq!(specs[3].regressors[..2], ["HOLD".to_string(), "AC1".to_string()]);
        assert_eq!(specs[4].regressors[..2], ["HOLD".to_string(), "AC2".to_string()]);
        assert_eq!(specs[3].regressors.len(), 2 + 8);
    }

    // Small deterministic panel with planted channels strong enough for the
    // gates at n = 240: INV gains from HOLD directly and loses through both
    // mediators.
    fn planted_panel() -> PanelDataset {
        let mut pairs = Vec::new();
        let mut state = 88172645463325252u64;
        let mut unit = move || {
            // xorshift64, mapped into [0, 1)
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        for firm in 0..60 {
            let industry = format!("C{}", 20 + firm % 3);
            for year in 2015..=2018 {
                let hold = unit() * 0.6;
                let ac1 = 0.3 - 0.8 * hold + 0.02 * (unit() - 0.5);
                let ac2 = 0.05 + 0.3 * hold + 0.01 * (unit() - 0.5);
                let inv = 0.05 + 0.2 * hold - 0.3 * ac1 - 0.5 * ac2 + 0.005 * (unit() - 0.5);
                let mut d = DerivedVars {
                    inv,
                    hold,
                    ac1,
                    ac2,
                    age: 5.0 + unit(),
                    size: 20.0 + unit(),
                    tq: 1.0 + unit(),
                    ncps: unit(),
                    growth: unit() - 0.3,
                    loss: if unit() < 0.2 { 1.0 } else { 0.0 },
                    p: 13.0 + unit(),
                    dual: if unit() < 0.3 { 1.0 } else { 0.0 },
                };
                d.ncps = d.ncps.max(0.01);
                pairs.push((
                    FirmYearRecord {
                        firm_id: format!("F{firm:03}"),
                        year,
                        industry: industry.clone(),
                        status: "normal".to_string(),
                        rd_invest: None,
                        total_assets: None,
                        exec_shares: None,
                        total_shares: None,
                        mgmt_expense: None,
                        main_revenue: None,
                        other_receivables: None,
                        establish_year: None,
                        tobin_q: None,
                        ncps: None,
                        net_income: None,
                        top3_comp_avg: None,
                        dual_flag: None,
                    },
                    d,
                ));
            }
        }
        PanelDataset::new(pairs)
    }

    #[test]
    fn battery_shares_one_sample_and_extracts_bit_exact_coefficients() {
        let dataset = planted_panel();
        let spec = BatterySpec {
            controls: vec!["AGE".to_string(), "SIZE".to_string(), "TQ".to_string()],
            ..BatterySpec::default()
        };
        let report = run_battery(&dataset, &spec, SeMode::Classical).unwrap();

        assert!(report.fits.iter().all(|f| f.n_obs == 240));
        let (a, p) = report.fits[0].coef_p("HOLD").unwrap();
        assert_eq!((report.alpha1.value, report.alpha1.p), (a, p));
        let (l2, l2p) = report.fits[3].coef_p("AC1").unwrap();
        assert_eq!((report.lambda2.value, report.lambda2.p), (l2, l2p));

        // The planted channels point the right way.
        assert!(report.beta1.value < 0.0);
        assert!(report.gamma1.value > 0.0);
        assert!(report.lambda2.value < 0.0);
        assert!(report.mu2.value < 0.0);
    }

    #[test]
    fn battery_without_treatment_effect_fails_step_one() {
        let dataset = planted_panel();
        // Regress the outcome on a control as fake treatment: AGE moves
        // nothing by construction.
        let spec = BatterySpec {
            outcome: "INV".to_string(),
            treatment: "AGE".to_string(),
            mediators: ("AC1".to_string(), "AC2".to_string()),
            controls: vec!["SIZE".to_string(), "TQ".to_string()],
            ..BatterySpec::default()
        };
        let report = run_battery(&dataset, &spec, SeMode::Classical).unwrap();
        assert_eq!(report.verdict_ac1, MediationVerdict::StepFailed(1));
        assert_eq!(report.verdict_ac2, MediationVerdict::StepFailed(1));
    }
}
