use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};

use tokeval_core::codec::{image_token_count, CoordOrder, DEFAULT_PATCH_PX};
use tokeval_core::harness::formats::read_jsonl;
use tokeval_core::harness::{
    compare_reports, decode_detection_text, encode_detection_dataset, encode_table_dataset, run_eval, EncodeConfig,
    EvalConfig, EvalReport, HarnessError, Task,
};
use tokeval_core::metrics::ocr::MatchMode;
use tokeval_core::metrics::seq::RateMode;

#[derive(Parser)]
#[command(name = "tokeval", version, about = "Location-token codecs and evaluation metrics")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Score predictions against ground truth and write a JSON report.
    Eval {
        #[arg(value_enum)]
        task: EvalTask,
        #[command(flatten)]
        args: EvalArgs,
    },
    /// Turn annotations into training targets.
    Encode {
        #[arg(value_enum)]
        task: EncodeTask,
        #[command(flatten)]
        args: EncodeArgs,
    },
    /// Turn raw model output into structured predictions.
    Decode {
        #[arg(value_enum)]
        task: DecodeTask,
        #[arg(long)]
        input: PathBuf,
        #[arg(long, value_enum)]
        coord_order: Option<Order>,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Relative metric values (candidate / reference x 100) of two reports.
    Compare {
        #[arg(long)]
        reference: PathBuf,
        #[arg(long)]
        candidate: PathBuf,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Token accounting.
    Tokens {
        #[command(subcommand)]
        command: TokensCommand,
    },
}

#[derive(Subcommand)]
enum TokensCommand {
    /// Image tokens for a square input resolution.
    Count {
        #[arg(long)]
        resolution: u32,
        #[arg(long, default_value_t = DEFAULT_PATCH_PX)]
        patch: u32,
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum EvalTask {
    Ocr,
    Table,
    Detect,
    Kern,
    Smiles,
    Match,
}

#[derive(Clone, Copy, ValueEnum)]
enum EncodeTask {
    Detect,
    Table,
}

#[derive(Clone, Copy, ValueEnum)]
enum DecodeTask {
    Detect,
}

#[derive(Clone, Copy, ValueEnum)]
enum Order {
    Yxyx,
    Xyxy,
}

impl From<Order> for CoordOrder {
    fn from(o: Order) -> Self {
        match o {
            Order::Yxyx => CoordOrder::Yxyx,
            Order::Xyxy => CoordOrder::Xyxy,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Matching {
    Greedy,
    Maximum,
}

#[derive(Clone, Copy, ValueEnum)]
enum Rates {
    PerExample,
    Pooled,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    gt: PathBuf,
    #[arg(long)]
    pred: PathBuf,
    /// Word-matching IoU threshold (ocr).
    #[arg(long, default_value_t = 0.5)]
    iou_threshold: f64,
    /// Word-matching strategy (ocr).
    #[arg(long, value_enum, default_value = "greedy")]
    matching: Matching,
    /// Location-token order; defaults to yxyx for detect and xyxy for table.
    #[arg(long, value_enum)]
    coord_order: Option<Order>,
    /// Detections kept per image and class (detect).
    #[arg(long, default_value_t = 100)]
    max_dets: usize,
    /// How per-example distances combine (kern).
    #[arg(long, value_enum, default_value = "per-example")]
    rate_mode: Rates,
    /// Lower-case both sides before comparing (match).
    #[arg(long)]
    case_fold: bool,
    /// Collapse internal whitespace runs before comparing (match).
    #[arg(long)]
    collapse_whitespace: bool,
    /// Accept table rows with omitted trailing cells (table).
    #[arg(long)]
    fill_missing_cells: bool,
    /// Recorded in the report fingerprint.
    #[arg(long)]
    seed: Option<u64>,
    /// Fail when prediction ids do not match ground-truth ids.
    #[arg(long)]
    strict: bool,
    /// Write per-example diagnostics as JSONL.
    #[arg(long)]
    diagnostics: Option<PathBuf>,
    /// Add the current UTC time to the report (makes output time-dependent).
    #[arg(long)]
    timestamp: bool,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct EncodeArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum)]
    coord_order: Option<Order>,
    /// Suffix capacity in tokens (detect).
    #[arg(long, default_value_t = tokeval_core::harness::encode::DEFAULT_MAX_SUFFIX_LEN)]
    max_suffix_len: usize,
    /// Accept table rows with omitted trailing cells (table).
    #[arg(long)]
    fill_missing_cells: bool,
    #[arg(long)]
    output: Option<PathBuf>,
}

fn emit(output: Option<&Path>, text: &str) -> anyhow::Result<()> {
    match output {
        Some(path) => fs::write(path, text).with_context(|| format!("writing {}", path.display())),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes())?;
            stdout.flush()?;
            Ok(())
        }
    }
}

fn eval(task: EvalTask, a: EvalArgs) -> anyhow::Result<()> {
    let task = match task {
        EvalTask::Ocr => Task::Ocr,
        EvalTask::Table => Task::Table,
        EvalTask::Detect => Task::Detect,
        EvalTask::Kern => Task::Kern,
        EvalTask::Smiles => Task::Smiles,
        EvalTask::Match => Task::Match,
    };
    let mut cfg = EvalConfig {
        coord_order: a.coord_order.map(Into::into),
        rate_mode: match a.rate_mode {
            Rates::PerExample => RateMode::PerExample,
            Rates::Pooled => RateMode::Pooled,
        },
        fill_missing_cells: a.fill_missing_cells,
        seed: a.seed,
        strict: a.strict,
        diagnostics: a.diagnostics.is_some(),
        ..EvalConfig::default()
    };
    cfg.ocr.iou_threshold = a.iou_threshold;
    cfg.ocr.mode = match a.matching {
        Matching::Greedy => MatchMode::Greedy,
        Matching::Maximum => MatchMode::Maximum,
    };
    cfg.detect.max_dets = a.max_dets;
    cfg.normalizer.case_fold = a.case_fold;
    cfg.normalizer.collapse_whitespace = a.collapse_whitespace;

    let mut out = run_eval(task, &a.gt, &a.pred, &cfg)?;
    if a.timestamp {
        out.report.timestamp = Some(chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true));
    }
    if let Some(path) = &a.diagnostics {
        let text: String = out.diagnostics.iter().map(|d| format!("{d}\n")).collect();
        emit(Some(path), &text)?;
    }
    emit(a.output.as_deref(), &out.report.to_json())
}

fn encode(task: EncodeTask, a: EncodeArgs) -> anyhow::Result<()> {
    let cfg = EncodeConfig {
        coord_order: a.coord_order.map(Into::into),
        max_suffix_len: a.max_suffix_len,
        seed: a.seed,
        fill_missing_cells: a.fill_missing_cells,
        ..EncodeConfig::default()
    };
    let (text, summary) = match task {
        EncodeTask::Detect => encode_detection_dataset(&read_jsonl(&a.input)?, &cfg)?,
        EncodeTask::Table => encode_table_dataset(&read_jsonl(&a.input)?, &cfg)?,
    };
    emit(a.output.as_deref(), &text)?;
    log::info!("wrote {} records, skipped {}", summary.written, summary.skipped.len());
    Ok(())
}

fn read_report(path: &Path) -> anyhow::Result<EvalReport> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    EvalReport::from_json(&text).map_err(|e| {
        HarnessError::Schema { origin: path.display().to_string(), line: e.line(), message: e.to_string() }.into()
    })
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Eval { task, args } => eval(task, args),
        Command::Encode { task, args } => encode(task, args),
        Command::Decode { task: DecodeTask::Detect, input, coord_order, output } => {
            let order = coord_order.map_or(CoordOrder::DETECTION_DEFAULT, Into::into);
            emit(output.as_deref(), &decode_detection_text(&read_jsonl(&input)?, order)?)
        }
        Command::Compare { reference, candidate, output } => {
            let cmp = compare_reports(&read_report(&reference)?, &read_report(&candidate)?)?;
            emit(output.as_deref(), &cmp.to_json())
        }
        Command::Tokens { command: TokensCommand::Count { resolution, patch, output } } => {
            let n = image_token_count(resolution, patch)?;
            emit(output.as_deref(), &format!("{n}\n"))
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            let schema = e.downcast_ref::<HarnessError>().is_some_and(HarnessError::is_schema_error);
            ExitCode::from(if schema { 2 } else { 1 })
        }
    }
}
