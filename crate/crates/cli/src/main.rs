use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{ArgAction, Parser, ValueEnum};
use log::warn;

use offsetscore::embed_io::Format;
use offsetscore::report::{
    self, emit, emit_decompositions_csv, emit_histograms_csv, DatasetSource, EmbeddingSpec, Metric,
    MetricsReport, OutputFormat, RunConfig,
};
use offsetscore::synth::{SynthSpec, SynthSuite};

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FormatArg {
    Binary,
    Text,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum OutFormatArg {
    Csv,
    Json,
}

/// Analogy accuracy, offset concentration and pairing consistency for word embeddings.
#[derive(Debug, Parser)]
#[command(name = "offsetscore", version)]
struct Cli {
    /// Embedding file; repeat to evaluate several.
    #[arg(long = "embedding", value_name = "PATH")]
    embeddings: Vec<PathBuf>,

    /// File format; inferred from the extension when omitted.
    #[arg(long, value_enum)]
    format: Option<FormatArg>,

    /// Unit-normalize rows before evaluation.
    #[arg(long, action = ArgAction::SetTrue, overrides_with = "no_normalize")]
    normalize: bool,

    /// Keep raw vectors.
    #[arg(long, action = ArgAction::SetTrue)]
    no_normalize: bool,

    /// Read at most this many vectors from each file.
    #[arg(long, value_name = "N")]
    limit: Option<usize>,

    /// Root of a BATS-style dataset directory.
    #[arg(long, value_name = "DIR", conflicts_with = "synth")]
    bats: Option<PathBuf>,

    /// Comma-separated metrics: accuracy-normal, accuracy-honest, ocs, pcs,
    /// msm, decompositions, baselines, or `all`.
    #[arg(long, value_delimiter = ',', default_value = "ocs,pcs")]
    metrics: Vec<String>,

    #[arg(long, default_value_t = 50)]
    shuffles: usize,

    #[arg(long, default_value_t = 10)]
    baseline_instances: usize,

    #[arg(long, default_value_t = 0)]
    seed: u64,

    /// Retry failed lookups in lowercase.
    #[arg(long)]
    case_fallback: bool,

    /// Output file; stdout when omitted.
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,

    #[arg(long, value_enum, default_value = "json")]
    out_format: OutFormatArg,

    /// JSON file describing a synthetic suite (or a single relation).
    #[arg(long, value_name = "PATH")]
    synth: Option<PathBuf>,

    /// Also write per-relation decomposition means as CSV.
    #[arg(long, value_name = "PATH")]
    decompositions_out: Option<PathBuf>,

    /// Also write similarity histograms as CSV.
    #[arg(long, value_name = "PATH")]
    histograms_out: Option<PathBuf>,
}

fn parse_metrics(names: &[String]) -> anyhow::Result<std::collections::BTreeSet<Metric>> {
    let mut out = std::collections::BTreeSet::new();
    for name in names.iter().map(|s| s.trim()).filter(|s| !s.is_empty()) {
        if name == "all" {
            out.extend(Metric::ALL);
        } else {
            out.insert(name.parse::<Metric>()?);
        }
    }
    Ok(out)
}

fn read_synth(path: &Path) -> anyhow::Result<SynthSuite> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    if let Ok(suite) = serde_json::from_str::<SynthSuite>(&text) {
        return Ok(suite);
    }
    let spec: SynthSpec = serde_json::from_str(&text).with_context(|| {
        format!(
            "{} is neither a synthetic suite nor a relation spec",
            path.display()
        )
    })?;
    Ok(SynthSuite {
        seed: spec.seed,
        distractors: spec.distractors,
        relations: vec![spec],
    })
}

fn config(cli: &Cli) -> anyhow::Result<RunConfig> {
    let dataset = match (&cli.bats, &cli.synth) {
        (Some(root), None) => DatasetSource::Bats(root.clone()),
        (None, Some(path)) => DatasetSource::Synth(read_synth(path)?),
        _ => bail!("exactly one of --bats or --synth is required"),
    };
    let normalize = match (cli.normalize, cli.no_normalize) {
        (true, true) => bail!("--normalize and --no-normalize are exclusive"),
        (true, false) => Some(true),
        (false, true) => Some(false),
        (false, false) => None,
    };
    let format = cli.format.map(|f| match f {
        FormatArg::Binary => Format::Binary,
        FormatArg::Text => Format::Text,
    });
    let mut config = RunConfig::new(dataset);
    config.embeddings = cli
        .embeddings
        .iter()
        .map(|path| EmbeddingSpec {
            path: path.clone(),
            format,
            normalize,
            limit: cli.limit,
        })
        .collect();
    config.metrics = parse_metrics(&cli.metrics)?;
    config.n_shuffles = cli.shuffles;
    config.baseline_instances = cli.baseline_instances;
    config.case_fallback = cli.case_fallback;
    config.seed = cli.seed;
    config.histograms = cli.histograms_out.is_some();
    config.validate()?;
    Ok(config)
}

fn write_output(path: Option<&Path>, bytes: &[u8]) -> anyhow::Result<()> {
    match path {
        Some(p) => fs::write(p, bytes).with_context(|| format!("writing {}", p.display())),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(bytes)?;
            Ok(out.flush()?)
        }
    }
}

fn execute(cli: &Cli) -> anyhow::Result<MetricsReport> {
    let config = config(cli)?;
    let report = report::run(&config)?;
    let format = match cli.out_format {
        OutFormatArg::Csv => OutputFormat::Csv,
        OutFormatArg::Json => OutputFormat::Json,
    };
    write_output(cli.out.as_deref(), &emit(&report, format)?)?;
    if let Some(p) = &cli.decompositions_out {
        write_output(Some(p), &emit_decompositions_csv(&report)?)?;
    }
    if let Some(p) = &cli.histograms_out {
        write_output(Some(p), &emit_histograms_csv(&report)?)?;
    }
    for e in &report.errors {
        warn!("{}: {}", e.section, e.message);
    }
    Ok(report)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(report) if report.is_success() => ExitCode::SUCCESS,
        Ok(_) => ExitCode::from(2),
        Err(e) => {
            let body = serde_json::json!({
                "errors": [{ "section": "run", "message": format!("{e:#}") }]
            });
            eprintln!("{body}");
            ExitCode::FAILURE
        }
    }
}
