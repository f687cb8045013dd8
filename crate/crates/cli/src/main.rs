//! `eaf` — generate and analyze labeled performance-anomaly datasets for
//! microservice applications on an emulated edge-cloud topology.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

use eaf_core::analysis::{analyze, load_records, metric_value, QualityReport};
use eaf_core::config::{parse_config, resolve_seed, ConfigError, GenerationConfig};
use eaf_core::dataset::{load_dataset, DatasetHandle};
use eaf_core::orchestrator::run_corpus;
use eaf_core::plots::{boxplot_svg, correlation_heatmap_svg, overlap_histogram_svg, timeline_svg};
use eaf_core::stats::DEFAULT_OVERLAP_BINS;
use eaf_core::Real;

#[derive(Parser)]
#[command(
    name = "eaf",
    version,
    about = "Edge anomaly forge: labeled telemetry dataset generator",
    propagate_version = true
)]
struct Cli {
    /// Worker threads for generation and analysis (default: all cores).
    #[arg(long, global = true, value_name = "N")]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a dataset from one or more configuration files.
    Generate {
        /// Configuration file; repeat for a multi-app corpus.
        #[arg(long = "config", value_name = "FILE", required = true)]
        configs: Vec<PathBuf>,
        /// Dataset root (default: the first config's `output`, else `dataset/`).
        #[arg(long, value_name = "DIR")]
        out: Option<PathBuf>,
        /// Seed override; takes precedence over config seeds and EAF_SEED.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Analyze a dataset and write its quality report.
    Analyze {
        /// Dataset root containing manifest.json.
        root: PathBuf,
        /// Report path (default: <root>/report.json).
        #[arg(long, value_name = "FILE")]
        report: Option<PathBuf>,
        /// Also render SVG plots next to the report.
        #[arg(long)]
        plots: bool,
    },
    /// Validate configuration files without generating anything.
    Validate {
        /// Configuration files to check.
        #[arg(value_name = "FILE", required = true)]
        configs: Vec<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(threads) = cli.threads {
        if let Err(err) = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
        {
            eprintln!("error: cannot size the thread pool: {err}");
            return ExitCode::from(2);
        }
    }
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(2)
        }
    }
}

fn dispatch(command: Command) -> Result<ExitCode> {
    match command {
        Command::Generate { configs, out, seed } => generate(&configs, out, seed),
        Command::Analyze {
            root,
            report,
            plots,
        } => analyze_command(&root, report, plots),
        Command::Validate { configs } => validate(&configs),
    }
}

fn env_seed() -> Result<Option<u64>> {
    match std::env::var("EAF_SEED") {
        Ok(text) => {
            let value = text
                .parse::<u64>()
                .with_context(|| format!("EAF_SEED must be an unsigned integer, got `{text}`"))?;
            Ok(Some(value))
        }
        Err(std::env::VarError::NotPresent) => Ok(None),
        Err(err) => bail!("EAF_SEED is not readable: {err}"),
    }
}

fn load_config(path: &Path) -> Result<GenerationConfig> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("cannot read config {}", path.display()))?;
    parse_config(&text).with_context(|| format!("{}", path.display()))
}

fn generate(configs: &[PathBuf], out: Option<PathBuf>, cli_seed: Option<u64>) -> Result<ExitCode> {
    let env = env_seed()?;
    let mut runs = Vec::with_capacity(configs.len());
    for path in configs {
        let cfg = load_config(path)?;
        let seed = resolve_seed(cli_seed, cfg.seed, env);
        runs.push((cfg, seed));
    }
    let root = out
        .or_else(|| runs.iter().find_map(|(cfg, _)| cfg.output.clone()))
        .unwrap_or_else(|| PathBuf::from("dataset"));
    let outcome = run_corpus(&runs, &root)?;
    if !outcome.failures.is_empty() {
        for failure in &outcome.failures {
            eprintln!("run `{}` failed: {}", failure.app, failure.error);
        }
        return Ok(ExitCode::from(2));
    }
    eprintln!("[eaf] manifest: {}", outcome.handle.manifest_path.display());
    println!("{}", outcome.handle.root.display());
    Ok(ExitCode::SUCCESS)
}

fn analyze_command(root: &Path, report_path: Option<PathBuf>, plots: bool) -> Result<ExitCode> {
    let handle = load_dataset(root)?;
    let report = analyze(&handle)?;
    let report_path = report_path.unwrap_or_else(|| root.join("report.json"));
    if let Some(parent) = report_path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent)
            .with_context(|| format!("cannot create {}", parent.display()))?;
    }
    let mut json = serde_json::to_string_pretty(&report)?;
    json.push('\n');
    fs::write(&report_path, json)
        .with_context(|| format!("cannot write {}", report_path.display()))?;
    if plots {
        let plot_dir = report_path
            .parent()
            .map(Path::to_path_buf)
            .unwrap_or_else(|| root.to_path_buf())
            .join("plots");
        render_plots(&handle, &report, &plot_dir)?;
        eprintln!("[eaf] plots: {}", plot_dir.display());
    }
    eprintln!("[eaf] report: {}", report_path.display());
    println!("{report}");
    Ok(ExitCode::SUCCESS)
}

fn render_plots(handle: &DatasetHandle, report: &QualityReport, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
    fs::write(
        dir.join("correlation_heatmap.svg"),
        correlation_heatmap_svg(&report.correlation),
    )?;
    for metric in &report.shortlist {
        fs::write(
            dir.join(format!("box_{metric}.svg")),
            boxplot_svg(&report.distributions, metric),
        )?;
    }
    fs::write(
        dir.join("timeline.svg"),
        timeline_svg(&handle.manifest.runs),
    )?;
    let ds = load_records(handle)?;
    for trace in &ds.traces {
        let normal: Vec<Real> = trace
            .records
            .iter()
            .filter(|r| r.label == 0)
            .map(|r| metric_value(r, "cpu_usage"))
            .collect();
        let anomalous: Vec<Real> = trace
            .records
            .iter()
            .filter(|r| r.label == 1)
            .map(|r| metric_value(r, "cpu_usage"))
            .collect();
        if normal.is_empty() || anomalous.is_empty() {
            continue;
        }
        let title = format!(
            "cpu_usage: {}/{} normal vs anomalous",
            trace.entry.app, trace.entry.microservice
        );
        fs::write(
            dir.join(format!(
                "overlap_{}_{}_cpu_usage.svg",
                trace.entry.app, trace.entry.microservice
            )),
            overlap_histogram_svg(&normal, &anomalous, DEFAULT_OVERLAP_BINS, &title),
        )?;
    }
    Ok(())
}

fn validate(configs: &[PathBuf]) -> Result<ExitCode> {
    let mut clean = true;
    for path in configs {
        let text = fs::read_to_string(path)
            .with_context(|| format!("cannot read config {}", path.display()))?;
        match parse_config(&text) {
            Ok(_) => println!("{}: ok", path.display()),
            Err(ConfigError::Invalid(findings)) => {
                clean = false;
                for finding in findings {
                    println!("{}: {finding}", path.display());
                }
            }
            Err(err) => {
                clean = false;
                println!("{}: {err}", path.display());
            }
        }
    }
    Ok(if clean {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}
