//! `citekey`: extract bibliography records from LaTeX sources and report how
//! citation keys reference the cited authors.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;

use citekey_core::model::{self, ClassifierModel, CvReport, TrainOutcome};
use citekey_core::pipeline::{self, combine, extract_file, DiagnosticsSummary, FileOutput};
use citekey_core::report::{render_csv, render_text};
use citekey_core::{walk_corpus, CorpusReport, ReportFormat, RunConfig};

#[derive(Parser, Debug)]
#[command(version, about, long_about = None)]
struct Cli {
    #[command(flatten)]
    common: Common,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Common {
    /// TOML configuration file
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Override a configuration value, e.g. `--set metric.threshold=0.6`
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    overrides: Vec<String>,

    /// Worker threads for the per-file map (0 = all cores)
    #[arg(long, default_value_t = 0, global = true)]
    jobs: usize,

    /// Output directory (overrides `output_dir`)
    #[arg(long, short = 'o', global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Parse the corpus and write records.ndjson and diagnostics.json
    Extract(Inputs),
    /// Train the author-word classifier on pattern-labeled entries
    Train {
        #[command(flatten)]
        inputs: Inputs,
        /// Also run repeated k-fold cross validation
        #[arg(long)]
        cv: bool,
    },
    /// Evaluate a saved model on the held-out split
    Eval {
        #[command(flatten)]
        inputs: Inputs,
        /// Model file (defaults to `model_path`, then <out>/model.txt)
        #[arg(long)]
        model: Option<PathBuf>,
    },
    /// Build the corpus report from records.ndjson
    Analyze {
        /// Records file (defaults to <out>/records.ndjson)
        #[arg(long)]
        records: Option<PathBuf>,
    },
    /// Print a saved report.json as aligned text
    Report {
        /// Report file (defaults to <out>/report.json)
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Extract, then analyze
    All(Inputs),
}

#[derive(Args, Debug)]
struct Inputs {
    /// Files or directories to scan (added to `inputs` from the config)
    paths: Vec<PathBuf>,
}

/// Failure that maps to exit status 2.
#[derive(Debug)]
struct ErrorRateExceeded {
    rate: f64,
    limit: f64,
}

impl std::fmt::Display for ErrorRateExceeded {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "error rate {:.4} exceeds max_error_rate {}", self.rate, self.limit)
    }
}

impl std::error::Error for ErrorRateExceeded {}

struct Ctx {
    cfg: RunConfig,
    out: PathBuf,
}

impl Ctx {
    fn new(common: &Common) -> Result<Self> {
        let cfg = RunConfig::load(common.config.as_deref(), &common.overrides)?;
        let out = common.out.clone().unwrap_or_else(|| cfg.output_dir.clone());
        Ok(Self { cfg, out })
    }

    fn inputs(&self, extra: &Inputs) -> Result<Vec<PathBuf>> {
        let mut all = self.cfg.inputs.clone();
        all.extend(extra.paths.iter().cloned());
        if all.is_empty() {
            bail!("no inputs: pass paths or set `inputs` in the config");
        }
        for p in &all {
            if !p.exists() {
                bail!("input {} does not exist", p.display());
            }
        }
        Ok(all)
    }

    fn out_file(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }

    fn write(&self, name: &str, contents: &str) -> Result<PathBuf> {
        fs::create_dir_all(&self.out).with_context(|| format!("creating {}", self.out.display()))?;
        let path = self.out_file(name);
        fs::write(&path, contents).with_context(|| format!("writing {}", path.display()))?;
        log::info!("wrote {}", path.display());
        Ok(path)
    }

    fn model_path(&self, explicit: Option<&Path>) -> PathBuf {
        explicit
            .map(Path::to_path_buf)
            .or_else(|| self.cfg.model_path.clone())
            .unwrap_or_else(|| self.out_file("model.txt"))
    }
}

fn pretty<T: serde::Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

fn load_model(ctx: &Ctx) -> Result<Option<ClassifierModel>> {
    let Some(path) = ctx.cfg.model_path.as_ref() else {
        return Ok(None);
    };
    let text = fs::read_to_string(path).with_context(|| format!("reading model {}", path.display()))?;
    Ok(Some(ClassifierModel::from_text(&text)?))
}

fn extract(ctx: &Ctx, inputs: &Inputs) -> Result<FileOutput> {
    let (files, walk_errors) = walk_corpus(&ctx.inputs(inputs)?);
    for e in &walk_errors {
        log::warn!("{e}");
    }
    let classifier = load_model(ctx)?;
    let window = ctx.cfg.year_window();
    let outputs: Vec<FileOutput> =
        files.par_iter().map(|f| extract_file(f, &window, classifier.as_ref())).collect();
    let mut all = combine(outputs);
    all.diagnostics.unreadable_documents += walk_errors.len() as u64;

    ctx.write("records.ndjson", &pipeline::records_to_ndjson(&all.records))?;
    let summary = DiagnosticsSummary::from(&all.diagnostics);
    ctx.write("diagnostics.json", &pretty(&summary)?)?;
    eprintln!(
        "{} documents, {} entries, {} keys, {} records",
        summary.counts.documents,
        summary.counts.entries,
        summary.counts.keys,
        all.records.len()
    );
    Ok(all)
}

fn check_error_rate(ctx: &Ctx, out: &FileOutput) -> Result<()> {
    let rate = out.diagnostics.error_rate();
    if rate > ctx.cfg.max_error_rate {
        return Err(ErrorRateExceeded { rate, limit: ctx.cfg.max_error_rate }.into());
    }
    Ok(())
}

fn write_report(ctx: &Ctx, report: &CorpusReport) -> Result<()> {
    for format in &ctx.cfg.formats {
        match format {
            ReportFormat::Json => {
                ctx.write("report.json", &report.to_json())?;
            }
            ReportFormat::Text => {
                ctx.write("report.txt", &render_text(report))?;
            }
            ReportFormat::Csv => {
                for (stem, body) in render_csv(report) {
                    ctx.write(&format!("{stem}.csv"), &body)?;
                }
            }
        }
    }
    Ok(())
}

fn analyze(ctx: &Ctx, records_path: Option<&Path>) -> Result<()> {
    let path = records_path.map_or_else(|| ctx.out_file("records.ndjson"), Path::to_path_buf);
    let text = fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
    let records = pipeline::records_from_ndjson(&text).with_context(|| format!("parsing {}", path.display()))?;
    let report = pipeline::run_analyze(&records, &ctx.cfg.match_params(), &ctx.cfg.report_params()?);
    write_report(ctx, &report)
}

#[derive(serde::Serialize)]
struct TrainSummary<'a> {
    instances: usize,
    train_size: usize,
    holdout_size: usize,
    final_loss: Option<f64>,
    holdout: &'a model::EvalReport,
    cross_validation: Option<&'a CvReport>,
}

fn train(ctx: &Ctx, inputs: &Inputs, cv: bool) -> Result<()> {
    let (files, _) = walk_corpus(&ctx.inputs(inputs)?);
    let instances = pipeline::training_instances(&files);
    let hp = ctx.cfg.classifier;
    let TrainOutcome { model, holdout, train_size, holdout_size, loss_history } = model::train(&instances, &hp)?;
    let cv_report = if cv { Some(model::cross_validate(&instances, &hp)?) } else { None };
    let path = ctx.model_path(None);
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    fs::write(&path, model.to_text()).with_context(|| format!("writing {}", path.display()))?;
    let summary = TrainSummary {
        instances: instances.len(),
        train_size,
        holdout_size,
        final_loss: loss_history.last().copied(),
        holdout: &holdout,
        cross_validation: cv_report.as_ref(),
    };
    ctx.write("train.json", &pretty(&summary)?)?;
    eprintln!("model written to {}; holdout F1 {:.4}", path.display(), holdout.f1);
    Ok(())
}

fn eval(ctx: &Ctx, inputs: &Inputs, model_path: Option<&Path>) -> Result<()> {
    let path = ctx.model_path(model_path);
    let text = fs::read_to_string(&path).with_context(|| format!("reading model {}", path.display()))?;
    let model = ClassifierModel::from_text(&text)?;
    let (files, _) = walk_corpus(&ctx.inputs(inputs)?);
    let instances = pipeline::training_instances(&files);
    let hp = &model.hyperparams;
    let (_, hold_idx) = model::split_indices(instances.len(), hp.split_ratio, hp.seed);
    let held: Vec<_> = hold_idx.iter().map(|&i| instances[i].clone()).collect();
    let report = model.evaluate(&held);
    ctx.write("eval.json", &pretty(&report)?)?;
    println!("{}", serde_json::to_string(&report)?);
    Ok(())
}

fn print_report(ctx: &Ctx, path: Option<&Path>) -> Result<()> {
    let path = path.map_or_else(|| ctx.out_file("report.json"), Path::to_path_buf);
    let text = fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
    let report: CorpusReport = serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    print!("{}", render_text(&report));
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    let ctx = Ctx::new(&cli.common)?;
    if cli.common.jobs > 0 {
        rayon::ThreadPoolBuilder::new().num_threads(cli.common.jobs).build_global()?;
    }
    match &cli.command {
        Command::Extract(inputs) => {
            let out = extract(&ctx, inputs)?;
            check_error_rate(&ctx, &out)
        }
        Command::Train { inputs, cv } => train(&ctx, inputs, *cv),
        Command::Eval { inputs, model } => eval(&ctx, inputs, model.as_deref()),
        Command::Analyze { records } => analyze(&ctx, records.as_deref()),
        Command::Report { report } => print_report(&ctx, report.as_deref()),
        Command::All(inputs) => {
            let out = extract(&ctx, inputs)?;
            let report = pipeline::run_analyze(&out.records, &ctx.cfg.match_params(), &ctx.cfg.report_params()?);
            write_report(&ctx, &report)?;
            check_error_rate(&ctx, &out)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) if e.is::<ErrorRateExceeded>() => {
            eprintln!("citekey: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("citekey: {e:#}");
            ExitCode::from(1)
        }
    }
}
