//! Command-line driver: subcommands, flags, and report emission.
//!
//! Exit codes: 0 success, 1 argument/usage errors, 2 data and schema
//! problems, 3 numerical failures. Diagnostics go to the error stream, one
//! line each; reports go to `--out` or standard output. The record-removal
//! log requested by `--filter-log` also goes to the error stream so piped
//! report output stays parseable.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::{fs, io};

use clap::builder::PossibleValuesParser;
use clap::{Args, Parser, Subcommand};

use crate::error::Result;
use crate::formula::parse_formula;
use crate::ingest::{construct_variables, filter_sample, load_csv, FilterLog, IngestConfig};
use crate::mediation::{run_battery, BatterySpec, MediationReport};
use crate::panel::{validate, DerivedVars, PanelDataset};
use crate::prep::{correlate, describe, winsorize, WinsorSpec};
use crate::regress::{fit_model, FitResult, SeMode, StarThresholds};
use crate::report::{
    correlation_csv, correlation_json, correlation_text, descriptives_csv, descriptives_json,
    descriptives_text, fits_csv, fits_json, mediation_csv, mediation_json, mediation_text,
    regression_table, OutputFormat,
};
use crate::robustness::run_robustness;
use crate::synth::{emit_csv, generate_panel, DgpParams};

#[derive(Debug, Parser)]
#[command(
    name = "panelmed",
    version,
    about = "Mediation analysis over firm-year panels with two-way fixed effects"
)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Descriptive statistics for the derived variables.
    Describe {
        #[command(flatten)]
        data: DataOpts,
        /// Variables to summarize (default: all derived variables).
        #[arg(long, value_delimiter = ',')]
        vars: Vec<String>,
        #[command(flatten)]
        render: RenderOpts,
        /// Output file (default: standard output).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Pairwise correlation matrix with significance stars.
    Correlate {
        #[command(flatten)]
        data: DataOpts,
        /// Variables to correlate (default: all derived variables).
        #[arg(long, value_delimiter = ',')]
        vars: Vec<String>,
        #[command(flatten)]
        render: RenderOpts,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Fit one model given as `DEP ~ R1 + R2 | year + industry`.
    Fit {
        #[command(flatten)]
        data: DataOpts,
        /// Model formula.
        #[arg(long)]
        model: String,
        #[command(flatten)]
        render: RenderOpts,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// The five-model mediation battery: verdicts, effect shares, and
    /// hypothesis support.
    Mediate {
        #[command(flatten)]
        data: DataOpts,
        #[command(flatten)]
        render: RenderOpts,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Key models re-fit against the next period's outcome.
    Robust {
        #[command(flatten)]
        data: DataOpts,
        #[command(flatten)]
        render: RenderOpts,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Generate a synthetic panel CSV plus a provenance dump of the
    /// generating parameters.
    Synth {
        /// `key = value` parameter file (default: built-in parameters).
        #[arg(long)]
        config: Option<PathBuf>,
        /// Override the configured random seed.
        #[arg(long)]
        seed: Option<u64>,
        /// CSV path to write; the parameter dump lands next to it.
        #[arg(long)]
        out: PathBuf,
    },
    /// Full pipeline: filter, construct, winsorize, then every report into
    /// a directory.
    Run {
        #[command(flatten)]
        data: DataOpts,
        #[command(flatten)]
        render: RenderOpts,
        /// Report directory, created if absent.
        #[arg(long)]
        out: PathBuf,
    },
}

/// Flags shared by every subcommand that reads a panel.
#[derive(Debug, Args)]
struct DataOpts {
    /// Input panel CSV.
    #[arg(long)]
    input: PathBuf,
    /// Lower winsorization quantile.
    #[arg(long, default_value_t = 0.01)]
    winsor_lower: f64,
    /// Upper winsorization quantile.
    #[arg(long, default_value_t = 0.99)]
    winsor_upper: f64,
    /// Skip winsorization.
    #[arg(long)]
    no_winsor: bool,
    /// Cluster standard errors (classical errors otherwise).
    #[arg(long, value_parser = PossibleValuesParser::new(["firm"]))]
    cluster: Option<String>,
    /// Echo the record-removal log to the error stream.
    #[arg(long)]
    filter_log: bool,
}

#[derive(Debug, Args)]
struct RenderOpts {
    /// Report format.
    #[arg(long, default_value = "text")]
    format: OutputFormat,
    /// Significance-star thresholds as `p3,p2,p1`.
    #[arg(long, default_value = "0.01,0.05,0.1", value_parser = parse_stars)]
    stars: StarThresholds,
}

fn parse_stars(s: &str) -> std::result::Result<StarThresholds, String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    let [three, two, one] = parts.as_slice() else {
        return Err("expected three comma-separated thresholds, e.g. 0.01,0.05,0.1".to_string());
    };
    let parse = |v: &str| v.parse::<f64>().map_err(|_| format!("`{v}` is not a probability"));
    let th = StarThresholds {
        three: parse(three)?,
        two: parse(two)?,
        one: parse(one)?,
    };
    th.validate().map_err(|e| e.to_string())?;
    Ok(th)
}

/// Parse arguments and dispatch, translating every failure into the
/// documented exit codes with a one-line diagnostic.
pub fn main_entry() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // --help and --version land here too; they are not errors.
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}

fn dispatch(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Describe { data, vars, render, out } => {
            let (dataset, _) = load_dataset(&data)?;
            let vars = var_list(&vars);
            let rows = describe(&dataset, &as_refs(&vars))?;
            let body = match render.format {
                OutputFormat::Text => descriptives_text(&rows),
                OutputFormat::Csv => descriptives_csv(&rows),
                OutputFormat::Json => descriptives_json(&rows),
            };
            emit(out.as_deref(), &body)
        }
        Command::Correlate { data, vars, render, out } => {
            let (dataset, _) = load_dataset(&data)?;
            let vars = var_list(&vars);
            let matrix = correlate(&dataset, &as_refs(&vars))?;
            let body = match render.format {
                OutputFormat::Text => correlation_text(&matrix),
                OutputFormat::Csv => correlation_csv(&matrix),
                OutputFormat::Json => correlation_json(&matrix),
            };
            emit(out.as_deref(), &body)
        }
        Command::Fit { data, model, render, out } => {
            let (dataset, _) = load_dataset(&data)?;
            let spec = parse_formula(&model)?;
            let mut fit = fit_model(&dataset, &spec, se_mode(&data))?;
            fit.restar(&render.stars);
            let body = match render.format {
                OutputFormat::Text => regression_table(&[&fit]),
                OutputFormat::Csv => fits_csv(&[&fit]),
                OutputFormat::Json => {
                    let mut s = serde_json::to_string_pretty(&fit).expect("FitResult serializes");
                    s.push('\n');
                    s
                }
            };
            emit(out.as_deref(), &body)
        }
        Command::Mediate { data, render, out } => {
            let (dataset, _) = load_dataset(&data)?;
            let report = mediate(&dataset, &data, &render)?;
            let body = match render.format {
                OutputFormat::Text => mediation_text(&report),
                OutputFormat::Csv => mediation_csv(&report),
                OutputFormat::Json => mediation_json(&report),
            };
            emit(out.as_deref(), &body)
        }
        Command::Robust { data, render, out } => {
            let (dataset, _) = load_dataset(&data)?;
            let fits = robust(&dataset, &data, &render)?;
            let body = render_fits(&fits, render.format);
            emit(out.as_deref(), &body)
        }
        Command::Synth { config, seed, out } => synth(config.as_deref(), seed, &out),
        Command::Run { data, render, out } => run_all(&data, &render, &out),
    }
}

/// Ingest, screen, derive, and (by default) winsorize.
fn load_dataset(data: &DataOpts) -> Result<(PanelDataset, FilterLog)> {
    let records = load_csv(&data.input)?;
    let (kept, mut log) = filter_sample(records, &IngestConfig::default());
    let (dataset, construction) = construct_variables(validate(kept)?);
    log.merge(&construction);
    let dataset = if data.no_winsor {
        dataset
    } else {
        let spec = WinsorSpec {
            lower_q: data.winsor_lower,
            upper_q: data.winsor_upper,
            ..WinsorSpec::default()
        };
        winsorize(dataset, &spec)?
    };
    if data.filter_log {
        eprintln!("{log}");
    }
    Ok((dataset, log))
}

fn mediate(
    dataset: &PanelDataset,
    data: &DataOpts,
    render: &RenderOpts,
) -> Result<MediationReport> {
    let mut report = run_battery(dataset, &BatterySpec::default(), se_mode(data))?;
    for fit in &mut report.fits {
        fit.restar(&render.stars);
    }
    Ok(report)
}

fn robust(
    dataset: &PanelDataset,
    data: &DataOpts,
    render: &RenderOpts,
) -> Result<Vec<FitResult>> {
    let mut fits = run_robustness(dataset, &BatterySpec::default(), se_mode(data))?;
    for fit in &mut fits {
        fit.restar(&render.stars);
    }
    Ok(fits)
}

fn render_fits(fits: &[FitResult], format: OutputFormat) -> String {
    let refs: Vec<&FitResult> = fits.iter().collect();
    match format {
        OutputFormat::Text => regression_table(&refs),
        OutputFormat::Csv => fits_csv(&refs),
        OutputFormat::Json => fits_json(&refs),
    }
}

fn synth(config: Option<&Path>, seed: Option<u64>, out: &Path) -> Result<()> {
    let mut params = match config {
        Some(path) => DgpParams::from_config_str(&fs::read_to_string(path)?)?,
        None => DgpParams::default(),
    };
    if let Some(seed) = seed {
        params.seed = seed;
    }
    let panel = generate_panel(&params)?;
    let file = fs::File::create(out)?;
    emit_csv(&panel.raw_records, io::BufWriter::new(file))?;

    // Comments survive a round-trip through the config parser, so the dump
    // stays loadable while recording the floor engagements.
    let mut dump = params.to_config_string();
    let _ = writeln!(dump, "# floored_inv = {}", panel.floored_inv);
    let _ = writeln!(dump, "# floored_ac2 = {}", panel.floored_ac2);
    let dump_path = out.with_extension("params");
    fs::write(&dump_path, dump)?;
    eprintln!(
        "wrote {} rows to {} (parameters: {})",
        panel.raw_records.len(),
        out.display(),
        dump_path.display()
    );
    Ok(())
}

fn run_all(data: &DataOpts, render: &RenderOpts, out: &Path) -> Result<()> {
    fs::create_dir_all(out)?;
    let (dataset, log) = load_dataset(data)?;
    let format = render.format;
    let ext = format.extension();
    let write = |stem: &str, body: String| -> Result<()> {
        fs::write(out.join(format!("{stem}.{ext}")), body)?;
        Ok(())
    };

    let vars = var_list(&[]);
    let rows = describe(&dataset, &as_refs(&vars))?;
    write(
        "descriptives",
        match format {
            OutputFormat::Text => descriptives_text(&rows),
            OutputFormat::Csv => descriptives_csv(&rows),
            OutputFormat::Json => descriptives_json(&rows),
        },
    )?;

    let matrix = correlate(&dataset, &as_refs(&vars))?;
    write(
        "correlations",
        match format {
            OutputFormat::Text => correlation_text(&matrix),
            OutputFormat::Csv => correlation_csv(&matrix),
            OutputFormat::Json => correlation_json(&matrix),
        },
    )?;

    let report = mediate(&dataset, data, render)?;
    write(
        "mediation",
        match format {
            OutputFormat::Text => mediation_text(&report),
            OutputFormat::Csv => mediation_csv(&report),
            OutputFormat::Json => mediation_json(&report),
        },
    )?;

    let fits = robust(&dataset, data, render)?;
    write("robustness", render_fits(&fits, format))?;

    write(
        "filter_log",
        match format {
            OutputFormat::Text => format!("{log}\n"),
            OutputFormat::Csv => log.to_csv_string(),
            OutputFormat::Json => {
                let mut s = serde_json::to_string_pretty(&log).expect("FilterLog serializes");
                s.push('\n');
                s
            }
        },
    )?;
    Ok(())
}

fn se_mode(data: &DataOpts) -> SeMode {
    match data.cluster.as_deref() {
        Some("firm") => SeMode::ClusterFirm,
        _ => SeMode::Classical,
    }
}

fn var_list(vars: &[String]) -> Vec<String> {
    if vars.is_empty() {
        DerivedVars::NAMES.iter().map(|s| s.to_string()).collect()
    } else {
        vars.to_vec()
    }
}

fn as_refs(vars: &[String]) -> Vec<&str> {
    vars.iter().map(String::as_str).collect()
}

fn emit(out: Option<&Path>, body: &str) -> Result<()> {
    match out {
        Some(path) => fs::write(path, body)?,
        None => {
            let mut stdout = io::stdout().lock();
            stdout.write_all(body.as_bytes())?;
        }
    }
    Ok(())
}
