use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use mxlogit::predict::PredictionFrame;
use mxlogit::{
    estimate, load_csv, predict_outcomes, predict_probabilities, random_coef_summary, wtp, wtp_compare, Fit,
    LongChoiceData, PredictOptions, Schema,
};

mod artifact;
mod config;
mod summary;

use artifact::Artifact;
use config::ModelArgs;

#[derive(Debug)]
pub enum CliError {
    /// Bad flags, files or schemas: exit 2.
    Usage(String),
    /// Estimation or numerical failure: exit 1.
    Failure(String),
}

impl From<mxlogit::Error> for CliError {
    fn from(e: mxlogit::Error) -> Self {
        if e.is_usage() {
            CliError::Usage(e.to_string())
        } else {
            CliError::Failure(e.to_string())
        }
    }
}

#[derive(Parser)]
#[command(name = "mxlogit", version, about = "Multinomial and mixed logit models in preference and WTP space")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Estimate a model and write a model file
    Fit {
        /// TOML file with the same keys as the flags
        #[arg(long)]
        config: Option<PathBuf>,
        #[command(flatten)]
        model: ModelArgs,
        /// Where to write the model file
        #[arg(long)]
        out: Option<PathBuf>,
        /// Describe the optimizer exit statuses and stop
        #[arg(long)]
        explain_status: bool,
    },
    /// Predict probabilities or outcomes from a model file
    Predict {
        #[arg(long)]
        model: PathBuf,
        /// Data to predict (CSV with the model's columns)
        #[arg(long)]
        data: PathBuf,
        /// Only these observation ids, comma separated
        #[arg(long, value_delimiter = ',')]
        obs: Option<Vec<String>>,
        #[arg(long = "type", value_enum, default_value_t = PredictType::Prob)]
        kind: PredictType,
        /// Confidence level for intervals, e.g. 0.95
        #[arg(long)]
        ci: Option<f64>,
        #[arg(long, default_value_t = 10_000)]
        kr_draws: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Append the input columns
        #[arg(long)]
        return_data: bool,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// WTP implied by a preference-space model
    Wtp {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        scale_par: String,
        /// A WTP-space model file to compare against
        #[arg(long)]
        compare: Option<PathBuf>,
        #[arg(long, default_value_t = 10_000)]
        kr_draws: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = Format::Table)]
        format: Format,
    },
    /// Time estimation at several draw counts
    Bench {
        #[arg(long)]
        config: Option<PathBuf>,
        #[command(flatten)]
        model: ModelArgs,
        /// Draw counts, comma separated
        #[arg(long = "draw-counts", value_delimiter = ',', default_value = "50,200,400")]
        draw_counts: Vec<usize>,
        #[arg(long, default_value_t = 3)]
        reps: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum PredictType {
    Prob,
    Outcome,
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum Format {
    Csv,
    Json,
    Table,
}

fn write_out(path: Option<&Path>, text: &str) -> Result<(), CliError> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| CliError::Usage(format!("cannot write {}: {e}", p.display()))),
        None => {
            let _ = std::io::stdout().write_all(text.as_bytes());
            Ok(())
        }
    }
}

fn to_json<T: serde::Serialize>(v: &T) -> Result<String, CliError> {
    serde_json::to_string_pretty(v)
        .map(|s| s + "\n")
        .map_err(|e| CliError::Failure(e.to_string()))
}

fn call_echo() -> String {
    let args: Vec<String> = std::env::args().skip(1).collect();
    format!("mxlogit {}", args.join(" "))
}

fn cmd_fit(config: Option<&Path>, flags: &ModelArgs, out: Option<&Path>) -> Result<(), CliError> {
    let args = config::merge(flags, config)?;
    let schema = args.schema()?;
    let spec = args.spec()?;
    let opts = args.options()?;
    let data = load_csv(args.data_path()?, &schema)?;
    let fit: Fit = match estimate(&data, &spec, &opts) {
        Ok(f) => f,
        Err(e @ mxlogit::Error::Estimation { .. }) => {
            eprint!("{}", summary::status_codes());
            return Err(CliError::Failure(e.to_string()));
        }
        Err(e) => return Err(e.into()),
    };
    let random = random_coef_summary(&fit, 10_000)?;
    print!("{}", summary::fit_summary(&fit, &call_echo(), &random));
    if let Some(path) = out {
        Artifact::new(schema, fit).save(path)?;
    }
    Ok(())
}

/// Reads new data with the model's schema, dropping roles whose columns the
/// file does not have (new data need not carry outcomes or weights).
fn load_newdata(path: &Path, schema: &Schema) -> Result<LongChoiceData, CliError> {
    let mut rdr = csv::Reader::from_path(path).map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
    let headers: Vec<String> = rdr
        .headers()
        .map_err(|e| CliError::Usage(e.to_string()))?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();
    let has = |c: &Option<String>| c.as_ref().is_some_and(|c| headers.contains(c));
    let mut s = schema.clone();
    if !has(&s.outcome) {
        s.outcome = None;
    }
    if !has(&s.panel_id) {
        s.panel_id = None;
    }
    if !has(&s.weights) {
        s.weights = None;
    }
    if !has(&s.cluster_id) {
        s.cluster_id = None;
    }
    Ok(load_csv(path, &s)?)
}

fn frame_csv(frame: &PredictionFrame) -> Result<String, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let has_ci = frame.rows.iter().any(|r| r.predicted_prob_lower.is_some());
    let has_outcome = frame.rows.iter().any(|r| r.predicted_outcome.is_some());
    let extra: Vec<&(String, Vec<String>)> = frame
        .data
        .iter()
        .flatten()
        .filter(|(name, _)| name != "obs_id")
        .collect();
    let mut header = vec!["obs_id".to_string(), "predicted_prob".to_string()];
    if has_ci {
        header.extend(["predicted_prob_lower".to_string(), "predicted_prob_upper".to_string()]);
    }
    if has_outcome {
        header.push("predicted_outcome".into());
    }
    header.extend(extra.iter().map(|(n, _)| n.clone()));
    let err = |e: csv::Error| CliError::Failure(e.to_string());
    w.write_record(&header).map_err(err)?;
    for (i, r) in frame.rows.iter().enumerate() {
        let mut rec = vec![r.obs_id.clone(), r.predicted_prob.to_string()];
        if has_ci {
            rec.push(r.predicted_prob_lower.map_or(String::new(), |v| v.to_string()));
            rec.push(r.predicted_prob_upper.map_or(String::new(), |v| v.to_string()));
        }
        if has_outcome {
            rec.push(r.predicted_outcome.map_or(String::new(), |b| u8::from(b).to_string()));
        }
        rec.extend(extra.iter().map(|(_, v)| v[i].clone()));
        w.write_record(&rec).map_err(err)?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Failure(e.to_string()))?;
    Ok(String::from_utf8_lossy(&bytes).into_owned())
}

#[allow(clippy::too_many_arguments)]
fn cmd_predict(
    model: &Path,
    data: &Path,
    obs: Option<&[String]>,
    kind: PredictType,
    opts: PredictOptions,
    format: Format,
    out: Option<&Path>,
) -> Result<(), CliError> {
    let art = Artifact::load(model)?;
    let mut newdata = load_newdata(data, &art.schema)?;
    if let Some(ids) = obs {
        newdata = newdata.filter_obs(ids)?;
    }
    let frame = match kind {
        PredictType::Prob => predict_probabilities(&art.fit, Some(&newdata), &opts)?,
        PredictType::Outcome => predict_outcomes(&art.fit, Some(&newdata), &opts)?,
    };
    let text = match format {
        Format::Json => to_json(&frame)?,
        Format::Csv | Format::Table => frame_csv(&frame)?,
    };
    write_out(out, &text)
}

fn cmd_wtp(model: &Path, scale_par: &str, compare: Option<&Path>, kr_draws: usize, seed: u64, format: Format) -> Result<(), CliError> {
    let pref = Artifact::load(model)?;
    let text = match compare {
        Some(other) => {
            let other = Artifact::load(other)?;
            let cmp = wtp_compare(&pref.fit, &other.fit, scale_par)?;
            match format {
                Format::Json => to_json(&cmp)?,
                _ => summary::comparison_table(&cmp),
            }
        }
        None => {
            let res = wtp(&pref.fit, scale_par, kr_draws, seed)?;
            for w in &res.warnings {
                eprintln!("warning: {w}");
            }
            match format {
                Format::Json => to_json(&res.table)?,
                _ => summary::coefficient_table(&res.table),
            }
        }
    };
    write_out(None, &text)
}

fn cmd_bench(config: Option<&Path>, flags: &ModelArgs, draws: &[usize], reps: usize, out: Option<&Path>) -> Result<(), CliError> {
    let args = config::merge(flags, config)?;
    let data = load_csv(args.data_path()?, &args.schema()?)?;
    let spec = args.spec()?;
    let base = args.options()?;
    if reps == 0 || draws.is_empty() {
        return Err(CliError::Usage("bench needs at least one draw count and one rep".into()));
    }
    let mut w = csv::Writer::from_writer(Vec::new());
    let err = |e: csv::Error| CliError::Failure(e.to_string());
    w.write_record(["num_draws", "rep", "seconds", "loglik", "iterations", "exit_status"])
        .map_err(err)?;
    for &r in draws {
        for rep in 1..=reps {
            let opts = mxlogit::EstimationOptions {
                num_draws: r,
                ..base.clone()
            };
            let t = Instant::now();
            let fit: Fit = estimate(&data, &spec, &opts)?;
            let secs = t.elapsed().as_secs_f64();
            w.write_record([
                r.to_string(),
                rep.to_string(),
                format!("{secs:.6}"),
                fit.loglik().to_string(),
                fit.best.iterations.to_string(),
                fit.best.exit_status.to_string(),
            ])
            .map_err(err)?;
        }
    }
    let bytes = w.into_inner().map_err(|e| CliError::Failure(e.to_string()))?;
    write_out(out, &String::from_utf8_lossy(&bytes))
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Fit {
            config,
            model,
            out,
            explain_status,
        } => {
            if explain_status {
                print!("{}", summary::status_codes());
                return Ok(());
            }
            cmd_fit(config.as_deref(), &model, out.as_deref())
        }
        Command::Predict {
            model,
            data,
            obs,
            kind,
            ci,
            kr_draws,
            seed,
            return_data,
            format,
            out,
        } => {
            let opts = PredictOptions {
                ci,
                kr_draws,
                seed,
                return_data,
                num_draws: None,
            };
            cmd_predict(&model, &data, obs.as_deref(), kind, opts, format, out.as_deref())
        }
        Command::Wtp {
            model,
            scale_par,
            compare,
            kr_draws,
            seed,
            format,
        } => cmd_wtp(&model, &scale_par, compare.as_deref(), kr_draws, seed, format),
        Command::Bench {
            config,
            model,
            draw_counts,
            reps,
            out,
        } => cmd_bench(config.as_deref(), &model, &draw_counts, reps, out.as_deref()),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Failure(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
