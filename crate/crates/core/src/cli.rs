//! Command-line front end: `sparsebench <subcommand> --config run.json`.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::bench::BenchReport;
use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::nn::ModelKind;
use crate::pipeline::{self as pl, RunDir};

/// Environment variable overriding the root directory of runs.
pub const RUNS_DIR_ENV: &str = "SPARSEBENCH_RUNS_DIR";

#[derive(Debug, Parser)]
#[command(name = "sparsebench", version, about = "Prune, sparsify, explain and benchmark flow classifiers")]
pub struct Cli {
    #[command(flatten)]
    pub common: Common,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// JSON run configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Shorter training and attribution.
    #[arg(long, global = true)]
    pub fast: bool,
    /// Label column of the raw CSVs.
    #[arg(long, global = true)]
    pub label_col: Option<String>,
    /// Run directory, or the output file for `infer` and `report`.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    /// Root of run directories.
    #[arg(long, global = true, env = RUNS_DIR_ENV, default_value = "runs")]
    pub runs_dir: PathBuf,
    /// Restrict to one model kind.
    #[arg(long, global = true, value_enum)]
    pub model: Option<KindArg>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Markdown,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum KindArg {
    Mlp,
    Lstm,
}

impl From<KindArg> for ModelKind {
    fn from(k: KindArg) -> Self {
        match k {
            KindArg::Mlp => ModelKind::Mlp,
            KindArg::Lstm => ModelKind::Lstm,
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Clean and split the configured data into data/{train,val,test}.csv.
    Preprocess,
    /// Write the raw synthetic flow tables to raw/.
    Synth,
    /// Random search over layer counts and widths.
    Tune,
    /// Train the dense baseline.
    Train,
    /// Gradual magnitude pruning with fine-tuning.
    Prune,
    /// KernelSHAP ranking, top-k retraining and pruning.
    SelectFeatures,
    /// Convert pruned models to SPIF files.
    ConvertSparse,
    /// Class probabilities for a feature CSV.
    Infer {
        /// Dense manifest or SPIF file.
        #[arg(long)]
        model_file: PathBuf,
        /// Feature CSV (a `class` column is ignored).
        #[arg(long)]
        input: PathBuf,
    },
    /// Three-stage evaluation; produces missing artifacts first.
    Bench,
    /// Render a bench report as CSV or markdown.
    Report {
        /// report.csv to render; defaults to the run's report.
        #[arg(long)]
        input: Option<PathBuf>,
    },
}

/// Config file with flag overrides applied, validated.
pub fn resolve_config(common: &Common) -> Result<RunConfig> {
    let mut cfg = match &common.config {
        Some(p) => RunConfig::load(p)?,
        None => return Err(Error::Config(vec!["--config: required for this subcommand".into()])),
    };
    if let Some(s) = common.seed {
        cfg.seed = Some(s);
    }
    if common.fast {
        cfg.fast = true;
    }
    if let Some(l) = &common.label_col {
        cfg.data.preprocess.label_column = l.clone();
    }
    if let Some(m) = common.model {
        cfg.models = vec![m.into()];
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run_dir(common: &Common, cfg: &RunConfig) -> RunDir {
    match &common.out {
        Some(p) => RunDir::new(p),
        None => RunDir::new(common.runs_dir.join(&cfg.run_name)),
    }
}

fn write_or_print(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => {
            if let Some(d) = p.parent() {
                std::fs::create_dir_all(d)?;
            }
            std::fs::write(p, text)?;
        }
        None => print!("{text}"),
    }
    Ok(())
}

fn render(report: &BenchReport, format: Format) -> Result<String> {
    match format {
        Format::Csv => report.to_csv_string(),
        Format::Markdown => report.to_markdown(),
    }
}

pub fn run(cli: Cli) -> Result<()> {
    let common = &cli.common;
    match &cli.command {
        Command::Infer { model_file, input } => {
            let engine = pl::AnyEngine::load(model_file)?;
            let probs = pl::infer_csv(&engine, input)?;
            let classes = engine.meta().class_names.clone();
            match &common.out {
                Some(p) => pl::write_predictions(p, &classes, &probs),
                None => pl::write_predictions_to(std::io::stdout().lock(), &classes, &probs),
            }
        }
        Command::Report { input } => {
            let path = match input {
                Some(p) => p.clone(),
                None => {
                    let cfg = resolve_config(common)?;
                    RunDir::new(common.runs_dir.join(&cfg.run_name)).report_csv()
                }
            };
            let report = BenchReport::read_csv(&path)?;
            write_or_print(common.out.as_deref(), &render(&report, common.format)?)
        }
        cmd => {
            let cfg = resolve_config(common)?;
            let run = run_dir(common, &cfg);
            std::fs::create_dir_all(&run.root)?;
            log::info!("run directory {}", run.root.display());
            match cmd {
                Command::Preprocess => pl::stage_preprocess(&cfg, &run).map(drop),
                Command::Synth => pl::stage_synth(&cfg, &run).map(drop),
                Command::Tune => {
                    let data = pl::splits(&cfg, &run)?;
                    for &k in &cfg.models {
                        let s = pl::stage_tune(&cfg, &run, &data, k)?;
                        let best = s.best();
                        println!("{k}: best trial {} accuracy {:.4} {}", best.trial, best.metrics.map_or(0.0, |m| m.accuracy), serde_json::to_string(&best.config)?);
                    }
                    Ok(())
                }
                Command::Train => {
                    let data = pl::splits(&cfg, &run)?;
                    cfg.models.iter().try_for_each(|&k| pl::stage_train(&cfg, &run, &data, k).map(drop))
                }
                Command::Prune => {
                    let data = pl::splits(&cfg, &run)?;
                    cfg.models.iter().try_for_each(|&k| pl::stage_prune(&cfg, &run, &data, k).map(drop))
                }
                Command::SelectFeatures => {
                    let data = pl::splits(&cfg, &run)?;
                    for &k in &cfg.models {
                        let s = pl::stage_select(&cfg, &run, &data, k)?;
                        println!("{k}: top-{} share {:.4}: {}", s.k, s.share, s.features.join(","));
                    }
                    Ok(())
                }
                Command::ConvertSparse => cfg.models.iter().try_for_each(|&k| pl::stage_convert(&cfg, &run, k).map(drop)),
                Command::Bench => {
                    let report = pl::stage_bench(&cfg, &run)?;
                    print!("{}", render(&report, common.format)?);
                    Ok(())
                }
                Command::Infer { .. } | Command::Report { .. } => unreachable!("handled above"),
            }
        }
    }
}

/// `error: kind=<kind> msg="<message>"` on one line.
pub fn error_line(kind: &str, msg: &str) -> String {
    let msg: String = msg.replace('\\', "\\\\").replace('"', "\\\"").split_whitespace().collect::<Vec<_>>().join(" ");
    format!("error: kind={kind} msg=\"{msg}\"")
}

/// Parses the process arguments, runs the subcommand and maps failures to
/// a single error line and exit code 1 (2 for usage errors).
pub fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).format_timestamp(None).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let text = e.to_string();
            let first = text.lines().next().unwrap_or("").trim_start_matches("error: ");
            eprintln!("{}", error_line("usage", first));
            return ExitCode::from(2);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Error::Io(e)) if e.kind() == std::io::ErrorKind::BrokenPipe => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", error_line(e.kind(), &e.to_string()));
            ExitCode::FAILURE
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn error_lines_are_single_line_and_quoted() {
        assert_eq!(error_line("parse", "bad \"x\"\nnext"), r#"error: kind=parse msg="bad \"x\" next""#);
    }

    #[test]
    fn flags_override_config() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("c.json");
        std::fs::write(&p, r#"{"seed": 1, "data": {"synth": {"rows": 100}}}"#).unwrap();
        let cli = Cli::try_parse_from(["sparsebench", "train", "--config", p.to_str().unwrap(), "--seed", "9", "--fast", "--model", "lstm", "--label-col", "Label"]).unwrap();
        let cfg = resolve_config(&cli.common).unwrap();
        assert_eq!(cfg.seed, Some(9));
        assert!(cfg.fast);
        assert_eq!(cfg.models, vec![ModelKind::Lstm]);
        assert_eq!(cfg.data.preprocess.label_column, "Label");
    }

    #[test]
    fn missing_seed_is_a_config_error() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("c.json");
        std::fs::write(&p, r#"{"data": {"synth": {}}}"#).unwrap();
        let cli = Cli::try_parse_from(["sparsebench", "train", "--config", p.to_str().unwrap()]).unwrap();
        let e = resolve_config(&cli.common).unwrap_err();
        assert_eq!(e.kind(), "config");
        assert!(e.to_string().contains("seed: required"));
    }
}
