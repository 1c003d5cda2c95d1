//! Seeded synthetic firm-year panel with a known mediated structure.
//!
//! The generator draws executive shareholding and firm controls from fixed
//! bounded distributions, routes them through two mediator equations and an
//! outcome equation with configurable coefficients, then back-solves the raw
//! accounting fields so the ingest pipeline reproduces the drawn values. It
//! is the verification oracle for everything downstream: a pipeline that
//! cannot recover a known data-generating process cannot be trusted on real
//! data.

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Beta, Distribution, Normal};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::ingest::CSV_COLUMNS;
use crate::panel::{DerivedVars, FirmYearRecord, PanelDataset};

/// Largest shareholding the generator ever assigns; executives holding the
/// whole company do not occur in listed-firm panels.
pub const HOLD_MAX: f64 = 0.891;

/// Industry codes the generator assigns, a fixed manufacturing-heavy mix.
/// None carry the financial-industry prefix, so default screening keeps all.
pub const INDUSTRIES: [&str; 12] = [
    "C13", "C26", "C27", "C33", "C34", "C38", "C39", "F51", "G55", "I64", "K70", "M73",
];

/// How each control enters every structural equation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ControlEffects {
    pub age: f64,
    pub size: f64,
    pub tq: f64,
    pub ncps: f64,
    pub growth: f64,
    pub loss: f64,
    pub p: f64,
    pub dual: f64,
}

impl Default for ControlEffects {
    fn default() -> Self {
        ControlEffects {
            age: 0.0001,
            size: 0.0015,
            tq: 0.0012,
            ncps: 0.0004,
            growth: 0.002,
            loss: -0.003,
            p: 0.0008,
            dual: 0.0006,
        }
    }
}

impl ControlEffects {
    fn dot(&self, c: &Controls) -> f64 {
        self.age * c.age
            + self.size * c.size
            + self.tq * c.tq
            + self.ncps * c.ncps
            + self.growth * c.growth
            + self.loss * c.loss
            + self.p * c.p
            + self.dual * c.dual
    }
}

/// Residual dispersion of each structural equation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NoiseSd {
    pub inv: f64,
    pub ac1: f64,
    pub ac2: f64,
}

impl Default for NoiseSd {
    fn default() -> Self {
        NoiseSd {
            inv: 0.004,
            ac1: 0.04,
            ac2: 0.004,
        }
    }
}

/// Per-equation intercepts, calibrated so the default generator's sample
/// means sit near a plausible listed-firm regime (innovation investment a
/// couple of percent of assets, first agency cost near a quarter of revenue,
/// second agency cost under two percent of assets).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EquationIntercepts {
    pub inv: f64,
    pub ac1: f64,
    pub ac2: f64,
}

impl Default for EquationIntercepts {
    fn default() -> Self {
        EquationIntercepts {
            inv: -0.0174,
            ac1: 0.2076,
            ac2: -0.0296,
        }
    }
}

/// Everything that determines a generated panel.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DgpParams {
    pub n_firms: usize,
    pub first_year: i32,
    pub last_year: i32,
    /// Treatment coefficient in the outcome equation.
    pub direct_effect: f64,
    /// Treatment coefficient in the first mediator equation.
    pub a1: f64,
    /// First mediator's coefficient in the outcome equation.
    pub b1: f64,
    /// Treatment coefficient in the second mediator equation.
    pub a2: f64,
    /// Second mediator's coefficient in the outcome equation.
    pub b2: f64,
    pub control_effects: ControlEffects,
    pub intercepts: EquationIntercepts,
    /// Dispersion of the per-year and per-industry effects, drawn once per
    /// level per equation.
    pub fe_scale: f64,
    pub noise_sd: NoiseSd,
    pub seed: u64,
}

impl Default for DgpParams {
    fn default() -> Self {
        DgpParams {
            n_firms: 2000,
            first_year: 2012,
            last_year: 2021,
            direct_effect: 0.004,
            a1: -0.04,
            b1: -0.025,
            a2: 0.0015,
            b2: -0.035,
            control_effects: ControlEffects::default(),
            intercepts: EquationIntercepts::default(),
            fe_scale: 0.0015,
            noise_sd: NoiseSd::default(),
            seed: 42,
        }
    }
}

impl DgpParams {
    pub fn validate(&self) -> Result<()> {
        if self.n_firms < 2 {
            return Err(Error::InvalidParams(format!(
                "n_firms must be at least 2, got {}",
                self.n_firms
            )));
        }
        if self.last_year <= self.first_year {
            return Err(Error::InvalidParams(format!(
                "year range must span at least 2 years, got {}..={}",
                self.first_year, self.last_year
            )));
        }
        // The vendor file carries one pre-period anchor row per firm.
        if self.first_year == i32::MIN {
            return Err(Error::InvalidParams(
                "first_year leaves no room for the anchor year before it".to_string(),
            ));
        }
        for (name, v) in [
            ("fe_scale", self.fe_scale),
            ("noise_inv", self.noise_sd.inv),
            ("noise_ac1", self.noise_sd.ac1),
            ("noise_ac2", self.noise_sd.ac2),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::InvalidParams(format!(
                    "{name} must be a finite non-negative dispersion, got {v}"
                )));
            }
        }
        let effects = [
            ("direct_effect", self.direct_effect),
            ("a1", self.a1),
            ("b1", self.b1),
            ("a2", self.a2),
            ("b2", self.b2),
            ("effect_age", self.control_effects.age),
            ("effect_size", self.control_effects.size),
            ("effect_tq", self.control_effects.tq),
            ("effect_ncps", self.control_effects.ncps),
            ("effect_growth", self.control_effects.growth),
            ("effect_loss", self.control_effects.loss),
            ("effect_p", self.control_effects.p),
            ("effect_dual", self.control_effects.dual),
            ("intercept_inv", self.intercepts.inv),
            ("intercept_ac1", self.intercepts.ac1),
            ("intercept_ac2", self.intercepts.ac2),
        ];
        for (name, v) in effects {
            if !v.is_finite() {
                return Err(Error::InvalidParams(format!(
                    "{name} must be finite, got {v}"
                )));
            }
        }
        Ok(())
    }

    pub fn n_years(&self) -> usize {
        (self.last_year as i64 - self.first_year as i64 + 1) as usize
    }

    /// Parse a plain `key = value` configuration. Blank lines and `#`
    /// comments are ignored; unknown keys are errors, absent keys keep
    /// their defaults.
    pub fn from_config_str(text: &str) -> Result<DgpParams> {
        let mut params = DgpParams::default();
        for (idx, raw_line) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw_line.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let Some((key, value)) = content.split_once('=') else {
                return Err(Error::ConfigParse {
                    line,
                    message: format!("expected `key = value`, got `{content}`"),
                });
            };
            let key = key.trim();
            let value = value.trim();
            params.set_key(key, value).map_err(|message| Error::ConfigParse { line, message })?;
        }
        params.validate()?;
        Ok(params)
    }

    fn set_key(&mut self, key: &str, value: &str) -> std::result::Result<(), String> {
        fn num(value: &str) -> std::result::Result<f64, String> {
            value
                .parse::<f64>()
                .map_err(|_| format!("`{value}` is not a number"))
        }
        match key {
            "n_firms" => {
                self.n_firms = value
                    .parse::<usize>()
                    .map_err(|_| format!("`{value}` is not a firm count"))?;
            }
            "first_year" => {
                self.first_year = value
                    .parse::<i32>()
                    .map_err(|_| format!("`{value}` is not a year"))?;
            }
            "last_year" => {
                self.last_year = value
                    .parse::<i32>()
                    .map_err(|_| format!("`{value}` is not a year"))?;
            }
            "seed" => {
                self.seed = value
                    .parse::<u64>()
                    .map_err(|_| format!("`{value}` is not a seed"))?;
            }
            "direct_effect" => self.direct_effect = num(value)?,
            "a1" => self.a1 = num(value)?,
            "b1" => self.b1 = num(value)?,
            "a2" => self.a2 = num(value)?,
            "b2" => self.b2 = num(value)?,
            "fe_scale" => self.fe_scale = num(value)?,
            "noise_inv" => self.noise_sd.inv = num(value)?,
            "noise_ac1" => self.noise_sd.ac1 = num(value)?,
            "noise_ac2" => self.noise_sd.ac2 = num(value)?,
            "intercept_inv" => self.intercepts.inv = num(value)?,
            "intercept_ac1" => self.intercepts.ac1 = num(value)?,
            "intercept_ac2" => self.intercepts.ac2 = num(value)?,
            "effect_age" => self.control_effects.age = num(value)?,
            "effect_size" => self.control_effects.size = num(value)?,
            "effect_tq" => self.control_effects.tq = num(value)?,
            "effect_ncps" => self.control_effects.ncps = num(value)?,
            "effect_growth" => self.control_effects.growth = num(value)?,
            "effect_loss" => self.control_effects.loss = num(value)?,
            "effect_p" => self.control_effects.p = num(value)?,
            "effect_dual" => self.control_effects.dual = num(value)?,
            _ => return Err(format!("unknown key `{key}`")),
        }
        Ok(())
    }

    /// Dump every parameter as `key = value` lines; `from_config_str`
    /// inverts this, so a generated dataset's provenance is one file.
    pub fn to_config_string(&self) -> String {
        let mut out = String::new();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(out, "{k} = {v}");
        };
        kv("n_firms", self.n_firms.to_string());
        kv("first_year", self.first_year.to_string());
        kv("last_year", self.last_year.to_string());
        kv("seed", self.seed.to_string());
        kv("direct_effect", self.direct_effect.to_string());
        kv("a1", self.a1.to_string());
        kv("b1", self.b1.to_string());
        kv("a2", self.a2.to_string());
        kv("b2", self.b2.to_string());
        kv("fe_scale", self.fe_scale.to_string());
        kv("noise_inv", self.noise_sd.inv.to_string());
        kv("noise_ac1", self.noise_sd.ac1.to_string());
        kv("noise_ac2", self.noise_sd.ac2.to_string());
        kv("intercept_inv", self.intercepts.inv.to_string());
        kv("intercept_ac1", self.intercepts.ac1.to_string());
        kv("intercept_ac2", self.intercepts.ac2.to_string());
        kv("effect_age", self.control_effects.age.to_string());
        kv("effect_size", self.control_effects.size.to_string());
        kv("effect_tq", self.control_effects.tq.to_string());
        kv("effect_ncps", self.control_effects.ncps.to_string());
        kv("effect_growth", self.control_effects.growth.to_string());
        kv("effect_loss", self.control_effects.loss.to_string());
        kv("effect_p", self.control_effects.p.to_string());
        kv("effect_dual", self.control_effects.dual.to_string());
        out
    }
}

/// A generated panel: the raw rows as they would arrive from a data vendor
/// (including each firm's pre-period anchor row, which the pipeline drops
/// when it computes growth), the ground-truth dataset of drawn values, the
/// parameter echo, and how often the non-negativity floors engaged.
#[derive(Debug, Clone)]
pub struct SyntheticPanel {
    pub raw_records: Vec<FirmYearRecord>,
    pub dataset: PanelDataset,
    pub params: DgpParams,
    pub floored_inv: usize,
    pub floored_ac2: usize,
}

struct Controls {
    age: f64,
    size: f64,
    tq: f64,
    ncps: f64,
    growth: f64,
    loss: f64,
    p: f64,
    dual: f64,
}

/// Per-level effects for the three equations, drawn from the master stream
/// so they are independent of the firm count.
struct FixedEffects {
    year: Vec<[f64; 3]>,
    industry: Vec<[f64; 3]>,
    first_year: i32,
}

impl FixedEffects {
    fn draw(params: &DgpParams, rng: &mut ChaCha8Rng) -> FixedEffects {
        let normal = Normal::new(0.0, params.fe_scale.max(f64::MIN_POSITIVE)).unwrap();
        let mut effect = |active: bool| {
            // Consume draws even at scale 0 so toggling fe_scale does not
            // reshuffle every other draw.
            let v = [
                normal.sample(rng),
                normal.sample(rng),
                normal.sample(rng),
            ];
            if active && params.fe_scale > 0.0 {
                v
            } else {
                [0.0; 3]
            }
        };
        let anchor_and_years = params.n_years() + 1;
        FixedEffects {
            year: (0..anchor_and_years).map(|_| effect(true)).collect(),
            industry: (0..INDUSTRIES.len()).map(|_| effect(true)).collect(),
            first_year: params.first_year - 1,
        }
    }

    fn at(&self, year: i32, industry_idx: usize) -> [f64; 3] {
        let y = &self.year[(year - self.first_year) as usize];
        let i = &self.industry[industry_idx];
        [y[0] + i[0], y[1] + i[1], y[2] + i[2]]
    }
}

/// Mixture the shareholding draws come from: a mass at zero (many boards
/// hold nothing) and a right-skewed positive part bounded by [`HOLD_MAX`].
fn draw_hold(rng: &mut ChaCha8Rng, beta: &Beta<f64>) -> f64 {
    if rng.random::<f64>() < 0.35 {
        0.0
    } else {
        (HOLD_MAX * beta.sample(rng)).clamp(0.0, HOLD_MAX)
    }
}

/// Generate the panel. Each firm owns one decorrelated RNG substream, so
/// growing `n_firms` appends firms without disturbing existing ones; the
/// master stream only feeds the per-level year and industry effects.
pub fn generate_panel(params: &DgpParams) -> Result<SyntheticPanel> {
    params.validate()?;

    let mut master = ChaCha8Rng::seed_from_u64(params.seed);
    master.set_stream(0);
    let fe = FixedEffects::draw(params, &mut master);

    let beta = Beta::new(1.05, 3.0).unwrap();
    let std_normal: Normal<f64> = Normal::new(0.0, 1.0).unwrap();
    let anchor_year = params.first_year - 1;

    let mut raw_records = Vec::with_capacity(params.n_firms * (params.n_years() + 1));
    let mut pairs = Vec::with_capacity(params.n_firms * params.n_years());
    let mut floored_inv = 0usize;
    let mut floored_ac2 = 0usize;

    for firm in 0..params.n_firms {
        let firm_id = format!("F{firm:05}");
        let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
        rng.set_stream(firm as u64 + 1);

        let industry_idx = rng.random_range(0..INDUSTRIES.len());
        let industry = INDUSTRIES[industry_idx].to_string();
        // Firm age at the anchor year lies in [2, 21].
        let establish_year = anchor_year - rng.random_range(2..=21);

        let mut size = 21.3 + std_normal.sample(&mut rng);
        let mut revenue = (20.5 + std_normal.sample(&mut rng)).exp();
        let mut hold = draw_hold(&mut rng, &beta);

        for year in anchor_year..=params.last_year {
            if year > anchor_year {
                size += 0.08 + 0.15 * std_normal.sample(&mut rng);
                // Shareholdings are sticky: most years carry last year's
                // position forward unchanged.
                if rng.random::<f64>() >= 0.7 {
                    hold = draw_hold(&mut rng, &beta);
                }
            }
            let growth = (0.12 + 0.25 * std_normal.sample(&mut rng)).max(-0.6);
            revenue *= 1.0 + growth;

            let controls = Controls {
                age: f64::from(year - establish_year),
                size,
                tq: (0.4 + 0.5 * std_normal.sample(&mut rng)).exp(),
                ncps: 0.5 + 0.8 * std_normal.sample(&mut rng),
                growth,
                loss: if rng.random::<f64>() < 0.1 { 1.0 } else { 0.0 },
                p: 13.4 + 0.6 * std_normal.sample(&mut rng),
                dual: if rng.random::<f64>() < 0.25 { 1.0 } else { 0.0 },
            };
            let control_term = params.control_effects.dot(&controls);
            let eff = fe.at(year, industry_idx);

            let ac1 = params.intercepts.ac1
                + params.a1 * hold
                + control_term
                + eff[1]
                + params.noise_sd.ac1 * std_normal.sample(&mut rng);
            let mut ac2 = params.intercepts.ac2
                + params.a2 * hold
                + control_term
                + eff[2]
                + params.noise_sd.ac2 * std_normal.sample(&mut rng);
            let mut inv = params.intercepts.inv
                + params.direct_effect * hold
                + params.b1 * ac1
                + params.b2 * ac2
                + control_term
                + eff[0]
                + params.noise_sd.inv * std_normal.sample(&mut rng);

            let analysis_row = year > anchor_year;
            if ac2 < 0.0 {
                ac2 = 0.0;
                floored_ac2 += usize::from(analysis_row);
            }
            if inv < 0.0 {
                inv = 0.0;
                floored_inv += usize::from(analysis_row);
            }

            let derived = DerivedVars {
                inv,
                hold,
                ac1,
                ac2,
                age: controls.age,
                size,
                tq: controls.tq,
                ncps: controls.ncps,
                growth,
                loss: controls.loss,
                p: controls.p,
                dual: controls.dual,
            };

            // Back-solve the vendor fields so ingest rederives `derived`.
            let total_assets = size.exp();
            let loss_magnitude = (16.0 + 1.2 * std_normal.sample(&mut rng)).exp();
            raw_records.push(FirmYearRecord {
                firm_id: firm_id.clone(),
                year,
                industry: industry.clone(),
                status: "normal".to_string(),
                rd_invest: Some(inv * total_assets),
                total_assets: Some(total_assets),
                exec_shares: Some(hold * 1e8),
                total_shares: Some(1e8),
                mgmt_expense: Some(ac1 * revenue),
                main_revenue: Some(revenue),
                other_receivables: Some(ac2 * total_assets),
                establish_year: Some(establish_year),
                tobin_q: Some(controls.tq),
                ncps: Some(controls.ncps),
                net_income: Some(if controls.loss == 1.0 {
                    -loss_magnitude
                } else {
                    loss_magnitude
                }),
                top3_comp_avg: Some(controls.p.exp()),
                dual_flag: Some(controls.dual),
            });
            if analysis_row {
                pairs.push((raw_records.last().unwrap().clone(), derived));
            }
        }
    }

    Ok(SyntheticPanel {
        raw_records,
        dataset: PanelDataset::new(pairs),
        params: params.clone(),
        floored_inv,
        floored_ac2,
    })
}

/// Write records in the exact ingest schema. Floats print in shortest
/// round-trip form, so `load_csv` recovers them bit-for-bit.
pub fn emit_csv<'a, W: std::io::Write>(
    records: impl IntoIterator<Item = &'a FirmYearRecord>,
    writer: W,
) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(CSV_COLUMNS).map_err(std::io::Error::from)?;
    let num = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    for r in records {
        w.write_record([
            r.firm_id.clone(),
            r.year.to_string(),
            r.industry.clone(),
            r.status.clone(),
            num(r.rd_invest),
            num(r.total_assets),
            num(r.exec_shares),
            num(r.total_shares),
            num(r.mgmt_expense),
            num(r.main_revenue),
            num(r.other_receivables),
            r.establish_year.map(|y| y.to_string()).unwrap_or_default(),
            num(r.tobin_q),
            num(r.ncps),
            num(r.net_income),
            num(r.top3_comp_avg),
            num(r.dual_flag),
        ])
        .map_err(std::io::Error::from)?;
    }
    w.flush()?;
    Ok(())
}
