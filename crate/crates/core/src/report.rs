//! Full evaluations across embeddings and relations, with per-relation and
//! per-broad-type aggregation and CSV/JSON serialization.

use std::collections::BTreeSet;
use std::path::PathBuf;
use std::time::Instant;

use log::info;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analogy::{accuracy, mean_decomposition, MeanDecomposition, TestMode};
use crate::baselines::{baseline_suite, instance_seed, BaselineInstance, BaselineKind};
use crate::bats::{self, resolve, BroadType, Relation, ResolvedRelation};
use crate::embed_io::{self, EmbeddingTable, Format, LookupPolicy};
use crate::error::{Error, Result};
use crate::offsets::{
    self, build_offsets, cohesion, direction_sims, msm, ocs, pairwise_sims, PcsConfig,
};
use crate::rng;
use crate::scalar::Scalar;
use crate::synth::{generate_suite, SynthSuite};

/// Histogram bin width for similarity distributions.
pub const HISTOGRAM_BIN_WIDTH: f64 = 0.02;
const HISTOGRAM_BINS: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Metric {
    AccuracyNormal,
    AccuracyHonest,
    Ocs,
    Pcs,
    Msm,
    Decompositions,
    Baselines,
}

impl Metric {
    pub const ALL: [Metric; 7] = [
        Metric::AccuracyNormal,
        Metric::AccuracyHonest,
        Metric::Ocs,
        Metric::Pcs,
        Metric::Msm,
        Metric::Decompositions,
        Metric::Baselines,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Metric::AccuracyNormal => "accuracy-normal",
            Metric::AccuracyHonest => "accuracy-honest",
            Metric::Ocs => "ocs",
            Metric::Pcs => "pcs",
            Metric::Msm => "msm",
            Metric::Decompositions => "decompositions",
            Metric::Baselines => "baselines",
        }
    }
}

impl std::str::FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Metric::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown metric `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingSpec {
    pub path: PathBuf,
    /// Inferred from the extension when absent.
    pub format: Option<Format>,
    /// Row normalization. When unset, rows are normalized for the metrics
    /// but decompositions see the raw vectors.
    pub normalize: Option<bool>,
    pub limit: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DatasetSource {
    Bats(PathBuf),
    Synth(SynthSuite),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub embeddings: Vec<EmbeddingSpec>,
    pub dataset: DatasetSource,
    pub metrics: BTreeSet<Metric>,
    pub n_shuffles: usize,
    pub max_rejection_tries: usize,
    pub baseline_instances: usize,
    pub case_fallback: bool,
    pub seed: u64,
    pub histograms: bool,
}

impl RunConfig {
    pub fn new(dataset: DatasetSource) -> Self {
        RunConfig {
            embeddings: Vec::new(),
            dataset,
            metrics: [Metric::Ocs, Metric::Pcs].into_iter().collect(),
            n_shuffles: 50,
            max_rejection_tries: 1000,
            baseline_instances: 10,
            case_fallback: false,
            seed: 0,
            histograms: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.metrics.is_empty() {
            return Err(Error::Config("no metric selected".into()));
        }
        if self.n_shuffles == 0 {
            return Err(Error::Config("--shuffles must be at least 1".into()));
        }
        if self.metrics.contains(&Metric::Baselines) && self.baseline_instances == 0 {
            return Err(Error::Config(
                "--baseline-instances must be at least 1".into(),
            ));
        }
        match &self.dataset {
            DatasetSource::Bats(_) if self.embeddings.is_empty() => {
                Err(Error::Config("at least one --embedding is required".into()))
            }
            DatasetSource::Synth(_) if !self.embeddings.is_empty() => Err(Error::Config(
                "synthetic runs generate their own table; drop --embedding".into(),
            )),
            _ => Ok(()),
        }
    }

    fn wants(&self, m: Metric) -> bool {
        self.metrics.contains(&m)
    }

    fn policy(&self) -> LookupPolicy {
        LookupPolicy {
            case_fallback: self.case_fallback,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelationRecord {
    pub name: String,
    pub broad_type: BroadType,
    pub total_pairs: usize,
    pub resolved_pairs: usize,
    pub dropped_oov: usize,
    pub dropped_identical: usize,
    pub accuracy_normal: Option<f64>,
    pub accuracy_honest: Option<f64>,
    pub ocs: Option<f64>,
    pub pcs: Option<f64>,
    pub pcs_auc_min: Option<f64>,
    pub pcs_auc_max: Option<f64>,
    pub pcs_relaxed_shuffles: Option<usize>,
    pub msm: Option<f64>,
    /// Mean pairwise cosine among start words.
    pub start_cohesion: Option<f64>,
    /// Mean pairwise cosine among end words.
    pub end_cohesion: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IneligibleRecord {
    pub name: String,
    pub broad_type: BroadType,
    pub total_pairs: usize,
    pub resolved_pairs: usize,
    pub dropped_oov: usize,
    pub dropped_identical: usize,
    pub reason: String,
}

/// Arithmetic means over the eligible relations of one broad type.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TypeMean {
    pub broad_type: BroadType,
    pub relations: usize,
    pub ineligible: usize,
    pub accuracy_normal: Option<f64>,
    pub accuracy_honest: Option<f64>,
    pub ocs: Option<f64>,
    pub pcs: Option<f64>,
    pub msm: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecompositionRecord {
    pub name: String,
    pub broad_type: BroadType,
    pub means: Option<MeanDecomposition>,
    pub excluded: Option<String>,
}

/// Summary of the instances of one baseline kind built from one source.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineRecord {
    pub kind: BaselineKind,
    pub source: String,
    pub broad_type: Option<BroadType>,
    pub instances: usize,
    pub mean_pairs: f64,
    pub ocs_mean: f64,
    pub ocs_min: f64,
    pub ocs_max: f64,
    pub pcs_mean: f64,
    pub pcs_min: f64,
    pub pcs_max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineTypeMean {
    pub kind: BaselineKind,
    pub broad_type: Option<BroadType>,
    pub sources: usize,
    pub ocs: f64,
    pub pcs: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HistogramKind {
    /// Pairwise similarities between the offsets of each relation.
    OffsetSimilarity,
    /// Similarities of offsets to their relation's mean direction.
    DirectionSimilarity,
}

/// Counts over `[-1, 1]` in bins of [`HISTOGRAM_BIN_WIDTH`]; the last bin is closed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub kind: HistogramKind,
    pub broad_type: BroadType,
    pub bin_width: f64,
    pub counts: Vec<u64>,
}

impl Histogram {
    fn new(kind: HistogramKind, broad_type: BroadType) -> Self {
        Histogram {
            kind,
            broad_type,
            bin_width: HISTOGRAM_BIN_WIDTH,
            counts: vec![0; HISTOGRAM_BINS],
        }
    }

    fn add(&mut self, v: f64) {
        let bin = ((v + 1.0) / HISTOGRAM_BIN_WIDTH).floor();
        let bin = (bin.max(0.0) as usize).min(HISTOGRAM_BINS - 1);
        self.counts[bin] += 1;
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct EmbeddingSection {
    pub name: String,
    pub path: Option<PathBuf>,
    pub format: Option<Format>,
    pub limit: Option<usize>,
    pub normalized: bool,
    pub raw_decompositions: bool,
    pub vocab_size: usize,
    pub dim: usize,
    pub duplicates_dropped: usize,
    pub zero_rows_dropped: usize,
    pub relations: Vec<RelationRecord>,
    pub ineligible: Vec<IneligibleRecord>,
    pub type_means: Vec<TypeMean>,
    pub decompositions: Vec<DecompositionRecord>,
    pub baselines: Vec<BaselineRecord>,
    pub baseline_type_means: Vec<BaselineTypeMean>,
    pub histograms: Vec<Histogram>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorRecord {
    pub section: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMeta {
    pub tool: String,
    pub version: String,
    pub seed: u64,
    pub config: RunConfig,
}

/// Wall-clock timings; excluded from determinism comparisons.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Timing {
    pub total_seconds: f64,
    pub sections: Vec<(String, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub meta: RunMeta,
    pub sections: Vec<EmbeddingSection>,
    pub errors: Vec<ErrorRecord>,
    #[serde(default)]
    pub timing: Timing,
}

impl MetricsReport {
    pub fn is_success(&self) -> bool {
        self.errors.is_empty()
    }

    /// The report with timing cleared, for byte-level comparisons.
    pub fn without_timing(&self) -> MetricsReport {
        MetricsReport {
            timing: Timing::default(),
            ..self.clone()
        }
    }
}

fn mean(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        None
    } else {
        Some(values.iter().sum::<f64>() / values.len() as f64)
    }
}

/// Mean of an optional per-relation field over the given records, in order.
pub fn mean_of(
    records: &[&RelationRecord],
    field: impl Fn(&RelationRecord) -> Option<f64>,
) -> Option<f64> {
    let values: Vec<f64> = records.iter().filter_map(|r| field(r)).collect();
    mean(&values)
}

/// Per-relation mean score, Δsim and self decompositions.
pub fn decomposition_table<T: Scalar>(
    relations: &[ResolvedRelation<T>],
) -> Vec<DecompositionRecord> {
    relations
        .par_iter()
        .map(|r| {
            let broad_type = r.broad_type.unwrap_or(BroadType::Inflectional);
            let outcome = r.require_usable().and_then(|_| mean_decomposition(r));
            match outcome {
                Ok(m) => DecompositionRecord {
                    name: r.name.clone(),
                    broad_type,
                    means: Some(m),
                    excluded: None,
                },
                Err(e) => DecompositionRecord {
                    name: r.name.clone(),
                    broad_type,
                    means: None,
                    excluded: Some(e.to_string()),
                },
            }
        })
        .collect()
}

fn pcs_config(config: &RunConfig, seed: u64) -> PcsConfig {
    PcsConfig {
        n_shuffles: config.n_shuffles,
        seed,
        max_rejection_tries: config.max_rejection_tries,
    }
}

fn evaluate_relation<T: Scalar>(
    config: &RunConfig,
    table: &EmbeddingTable<T>,
    r: &ResolvedRelation<T>,
) -> Result<RelationRecord> {
    let acc = |mode| -> Result<Option<f64>> { Ok(Some(accuracy(table, r, mode)?.fraction())) };
    let mut rec = RelationRecord {
        name: r.name.clone(),
        broad_type: r.broad_type.unwrap_or(BroadType::Inflectional),
        total_pairs: r.total_pairs,
        resolved_pairs: r.len(),
        dropped_oov: r.dropped_oov,
        dropped_identical: r.dropped_identical,
        accuracy_normal: None,
        accuracy_honest: None,
        ocs: None,
        pcs: None,
        pcs_auc_min: None,
        pcs_auc_max: None,
        pcs_relaxed_shuffles: None,
        msm: None,
        start_cohesion: None,
        end_cohesion: None,
    };
    if config.wants(Metric::AccuracyNormal) {
        rec.accuracy_normal = acc(TestMode::Normal)?;
    }
    if config.wants(Metric::AccuracyHonest) {
        rec.accuracy_honest = acc(TestMode::Honest)?;
    }
    let offsets = build_offsets(r)?;
    if config.wants(Metric::Ocs) {
        rec.ocs = Some(ocs(&offsets)?);
        let starts: Vec<&[T]> = r.pairs.iter().map(|p| p.start_vec.as_slice()).collect();
        let ends: Vec<&[T]> = r.pairs.iter().map(|p| p.end_vec.as_slice()).collect();
        rec.start_cohesion = cohesion(&starts).ok();
        rec.end_cohesion = cohesion(&ends).ok();
    }
    if config.wants(Metric::Msm) {
        rec.msm = Some(msm(&offsets)?);
    }
    if config.wants(Metric::Pcs) {
        let p = offsets::pcs(r, &pcs_config(config, rng::derive(config.seed, &r.name)))?;
        rec.pcs = Some(p.score);
        rec.pcs_auc_min = Some(p.min_auc());
        rec.pcs_auc_max = Some(p.max_auc());
        rec.pcs_relaxed_shuffles = Some(p.relaxed_shuffles);
    }
    Ok(rec)
}

fn evaluate_baselines<T: Scalar>(
    config: &RunConfig,
    instances: &[BaselineInstance<T>],
) -> Result<(Vec<BaselineRecord>, Vec<BaselineTypeMean>)> {
    let scored: Vec<(f64, f64)> = instances
        .par_iter()
        .map(|inst| {
            let o = build_offsets(&inst.relation)?;
            let seed = rng::derive(
                instance_seed(config.seed, inst.kind, &inst.source, inst.index),
                "pcs",
            );
            let p = offsets::pcs(&inst.relation, &pcs_config(config, seed))?;
            Ok((ocs(&o)?, p.score))
        })
        .collect::<Result<_>>()?;

    let mut records: Vec<BaselineRecord> = Vec::new();
    let mut i = 0;
    while i < instances.len() {
        let head = &instances[i];
        // Mismatched instances of one start relation may pick different end
        // categories, so group on the start relation.
        let group_key = |inst: &BaselineInstance<T>| {
            (
                inst.kind,
                inst.source
                    .split("->")
                    .next()
                    .unwrap_or_default()
                    .to_string(),
            )
        };
        let key = group_key(head);
        let mut j = i;
        while j < instances.len() && group_key(&instances[j]) == key {
            j += 1;
        }
        let ocs_v: Vec<f64> = scored[i..j].iter().map(|s| s.0).collect();
        let pcs_v: Vec<f64> = scored[i..j].iter().map(|s| s.1).collect();
        let pairs: Vec<f64> = instances[i..j]
            .iter()
            .map(|s| s.relation.len() as f64)
            .collect();
        records.push(BaselineRecord {
            kind: head.kind,
            source: key.1,
            broad_type: head.broad_type,
            instances: j - i,
            mean_pairs: mean(&pairs).unwrap_or(0.0),
            ocs_mean: mean(&ocs_v).unwrap_or(f64::NAN),
            ocs_min: ocs_v.iter().copied().fold(f64::INFINITY, f64::min),
            ocs_max: ocs_v.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            pcs_mean: mean(&pcs_v).unwrap_or(f64::NAN),
            pcs_min: pcs_v.iter().copied().fold(f64::INFINITY, f64::min),
            pcs_max: pcs_v.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        });
        i = j;
    }

    let mut type_means = Vec::new();
    for kind in BaselineKind::ALL {
        let types: Vec<Option<BroadType>> = if kind == BaselineKind::RandomBoth {
            vec![None]
        } else {
            BroadType::ALL.into_iter().map(Some).collect()
        };
        for ty in types {
            let group: Vec<&BaselineRecord> = records
                .iter()
                .filter(|r| r.kind == kind && r.broad_type == ty)
                .collect();
            if group.is_empty() {
                continue;
            }
            let o: Vec<f64> = group.iter().map(|r| r.ocs_mean).collect();
            let p: Vec<f64> = group.iter().map(|r| r.pcs_mean).collect();
            type_means.push(BaselineTypeMean {
                kind,
                broad_type: ty,
                sources: group.len(),
                ocs: mean(&o).unwrap(),
                pcs: mean(&p).unwrap(),
            });
        }
    }
    Ok((records, type_means))
}

fn histograms<T: Scalar>(relations: &[ResolvedRelation<T>]) -> Vec<Histogram> {
    let mut out = Vec::new();
    for ty in BroadType::ALL {
        let mut sims = Histogram::new(HistogramKind::OffsetSimilarity, ty);
        let mut dirs = Histogram::new(HistogramKind::DirectionSimilarity, ty);
        let mut any = false;
        for r in relations
            .iter()
            .filter(|r| r.broad_type == Some(ty) && r.usable())
        {
            let Ok(o) = build_offsets(r) else { continue };
            any = true;
            if let Ok(s) = pairwise_sims(&o) {
                s.values.iter().for_each(|v| sims.add(*v));
            }
            if let Ok(d) = direction_sims(&o) {
                d.iter().for_each(|v| dirs.add(*v));
            }
        }
        if any {
            out.push(sims);
            out.push(dirs);
        }
    }
    out
}

fn type_means(records: &[RelationRecord], ineligible: &[IneligibleRecord]) -> Vec<TypeMean> {
    BroadType::ALL
        .into_iter()
        .filter_map(|ty| {
            let group: Vec<&RelationRecord> =
                records.iter().filter(|r| r.broad_type == ty).collect();
            let skipped = ineligible.iter().filter(|r| r.broad_type == ty).count();
            if group.is_empty() && skipped == 0 {
                return None;
            }
            Some(TypeMean {
                broad_type: ty,
                relations: group.len(),
                ineligible: skipped,
                accuracy_normal: mean_of(&group, |r| r.accuracy_normal),
                accuracy_honest: mean_of(&group, |r| r.accuracy_honest),
                ocs: mean_of(&group, |r| r.ocs),
                pcs: mean_of(&group, |r| r.pcs),
                msm: mean_of(&group, |r| r.msm),
            })
        })
        .collect()
}

fn resolve_all<T: Scalar>(
    relations: &[Relation],
    table: &EmbeddingTable<T>,
    policy: LookupPolicy,
) -> Vec<ResolvedRelation<T>> {
    relations
        .par_iter()
        .map(|r| resolve(r, table, policy))
        .collect()
}

/// Evaluates every selected metric on one table.
pub fn evaluate_table<T: Scalar>(
    config: &RunConfig,
    table: EmbeddingTable<T>,
    relations: &[Relation],
    normalize_after_decompositions: bool,
    section: &mut EmbeddingSection,
) -> Result<()> {
    let policy = config.policy();
    let mut table = table;
    let mut resolved = resolve_all(relations, &table, policy);

    if config.wants(Metric::Decompositions) {
        section.raw_decompositions = !table.normalized();
        section.decompositions = decomposition_table(&resolved);
        if normalize_after_decompositions {
            table = table.into_normalized();
            resolved = resolve_all(relations, &table, policy);
        }
    }
    section.normalized = table.normalized();
    section.vocab_size = table.len();
    section.dim = table.dim();
    section.duplicates_dropped = table.duplicates_dropped();
    section.zero_rows_dropped = table.zero_rows_dropped();

    let outcomes: Vec<Result<RelationRecord>> = resolved
        .par_iter()
        .map(|r| {
            r.require_usable()?;
            evaluate_relation(config, &table, r)
        })
        .collect();
    for (r, outcome) in resolved.iter().zip(outcomes) {
        match outcome {
            Ok(rec) => section.relations.push(rec),
            Err(e @ Error::Ineligible { .. }) => section.ineligible.push(IneligibleRecord {
                name: r.name.clone(),
                broad_type: r.broad_type.unwrap_or(BroadType::Inflectional),
                total_pairs: r.total_pairs,
                resolved_pairs: r.len(),
                dropped_oov: r.dropped_oov,
                dropped_identical: r.dropped_identical,
                reason: e.to_string(),
            }),
            Err(e) => return Err(e),
        }
    }
    if section.relations.is_empty() {
        return Err(Error::Dataset("no usable relations".into()));
    }
    section.type_means = type_means(&section.relations, &section.ineligible);

    if config.wants(Metric::Baselines) {
        let usable: Vec<ResolvedRelation<T>> =
            resolved.into_iter().filter(|r| r.usable()).collect();
        let instances = baseline_suite(
            &usable,
            &table,
            config.baseline_instances,
            rng::derive(config.seed, "baselines"),
        )?;
        let (records, means) = evaluate_baselines(config, &instances)?;
        section.baselines = records;
        section.baseline_type_means = means;
        if config.histograms {
            section.histograms = histograms(&usable);
        }
    } else if config.histograms {
        section.histograms = histograms(&resolved);
    }
    Ok(())
}

/// Runs the configured evaluation with `f32` storage.
pub fn run(config: &RunConfig) -> Result<MetricsReport> {
    run_as::<f32>(config)
}

/// Runs the configured evaluation with the given storage scalar.
pub fn run_as<T: Scalar>(config: &RunConfig) -> Result<MetricsReport> {
    config.validate()?;
    let started = Instant::now();
    let mut report = MetricsReport {
        meta: RunMeta {
            tool: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            seed: config.seed,
            config: config.clone(),
        },
        sections: Vec::new(),
        errors: Vec::new(),
        timing: Timing::default(),
    };

    match &config.dataset {
        DatasetSource::Synth(suite) => {
            let t0 = Instant::now();
            let synth = generate_suite::<T>(suite)?;
            let mut section = EmbeddingSection {
                name: "synthetic".into(),
                ..Default::default()
            };
            evaluate_table(config, synth.table, &synth.relations, false, &mut section)?;
            report
                .timing
                .sections
                .push((section.name.clone(), t0.elapsed().as_secs_f64()));
            report.sections.push(section);
        }
        DatasetSource::Bats(root) => {
            let relations = bats::load_dataset(root)?;
            info!(
                "loaded {} relations from {}",
                relations.len(),
                root.display()
            );
            for spec in &config.embeddings {
                let t0 = Instant::now();
                let format = spec
                    .format
                    .unwrap_or_else(|| Format::from_extension(&spec.path));
                let mut section = EmbeddingSection {
                    name: spec.path.file_name().map_or_else(
                        || spec.path.display().to_string(),
                        |n| n.to_string_lossy().into_owned(),
                    ),
                    path: Some(spec.path.clone()),
                    format: Some(format),
                    limit: spec.limit,
                    ..Default::default()
                };
                let normalize = spec.normalize.unwrap_or(true);
                let defer =
                    normalize && spec.normalize.is_none() && config.wants(Metric::Decompositions);
                let outcome =
                    embed_io::load::<T>(&spec.path, format, spec.limit, normalize && !defer)
                        .and_then(|table| {
                            evaluate_table(config, table, &relations, defer, &mut section)
                        });
                if let Err(e) = outcome {
                    let message = e.to_string();
                    section.error = Some(message.clone());
                    report.errors.push(ErrorRecord {
                        section: section.name.clone(),
                        message,
                    });
                }
                report
                    .timing
                    .sections
                    .push((section.name.clone(), t0.elapsed().as_secs_f64()));
                report.sections.push(section);
            }
            if report.sections.iter().all(|s| s.relations.is_empty()) {
                let detail: Vec<String> = report
                    .errors
                    .iter()
                    .map(|e| format!("{}: {}", e.section, e.message))
                    .collect();
                return Err(Error::Dataset(format!(
                    "no usable relations in any embedding ({})",
                    detail.join("; ")
                )));
            }
        }
    }
    report.timing.total_seconds = started.elapsed().as_secs_f64();
    Ok(report)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Csv,
    Json,
}

#[derive(Debug, Serialize)]
struct CsvRow<'a> {
    embedding: &'a str,
    scope: &'static str,
    name: &'a str,
    broad_type: Option<BroadType>,
    kind: Option<BaselineKind>,
    count: Option<usize>,
    total_pairs: Option<usize>,
    resolved_pairs: Option<usize>,
    dropped_oov: Option<usize>,
    dropped_identical: Option<usize>,
    accuracy_normal: Option<f64>,
    accuracy_honest: Option<f64>,
    ocs: Option<f64>,
    ocs_min: Option<f64>,
    ocs_max: Option<f64>,
    pcs: Option<f64>,
    pcs_min: Option<f64>,
    pcs_max: Option<f64>,
    msm: Option<f64>,
}

impl<'a> CsvRow<'a> {
    fn blank(embedding: &'a str, scope: &'static str, name: &'a str) -> Self {
        CsvRow {
            embedding,
            scope,
            name,
            broad_type: None,
            kind: None,
            count: None,
            total_pairs: None,
            resolved_pairs: None,
            dropped_oov: None,
            dropped_identical: None,
            accuracy_normal: None,
            accuracy_honest: None,
            ocs: None,
            ocs_min: None,
            ocs_max: None,
            pcs: None,
            pcs_min: None,
            pcs_max: None,
            msm: None,
        }
    }
}

fn csv_rows(report: &MetricsReport) -> Vec<CsvRow<'_>> {
    let mut rows = Vec::new();
    for s in &report.sections {
        let emb = s.name.as_str();
        for r in &s.relations {
            rows.push(CsvRow {
                broad_type: Some(r.broad_type),
                total_pairs: Some(r.total_pairs),
                resolved_pairs: Some(r.resolved_pairs),
                dropped_oov: Some(r.dropped_oov),
                dropped_identical: Some(r.dropped_identical),
                accuracy_normal: r.accuracy_normal,
                accuracy_honest: r.accuracy_honest,
                ocs: r.ocs,
                pcs: r.pcs,
                pcs_min: r.pcs_auc_min,
                pcs_max: r.pcs_auc_max,
                msm: r.msm,
                ..CsvRow::blank(emb, "relation", &r.name)
            });
        }
        for r in &s.ineligible {
            rows.push(CsvRow {
                broad_type: Some(r.broad_type),
                total_pairs: Some(r.total_pairs),
                resolved_pairs: Some(r.resolved_pairs),
                dropped_oov: Some(r.dropped_oov),
                dropped_identical: Some(r.dropped_identical),
                ..CsvRow::blank(emb, "ineligible", &r.name)
            });
        }
        for t in &s.type_means {
            rows.push(CsvRow {
                broad_type: Some(t.broad_type),
                count: Some(t.relations),
                accuracy_normal: t.accuracy_normal,
                accuracy_honest: t.accuracy_honest,
                ocs: t.ocs,
                pcs: t.pcs,
                msm: t.msm,
                ..CsvRow::blank(emb, "type_mean", t.broad_type.as_str())
            });
        }
        for b in &s.baselines {
            rows.push(CsvRow {
                broad_type: b.broad_type,
                kind: Some(b.kind),
                count: Some(b.instances),
                ocs: Some(b.ocs_mean),
                ocs_min: Some(b.ocs_min),
                ocs_max: Some(b.ocs_max),
                pcs: Some(b.pcs_mean),
                pcs_min: Some(b.pcs_min),
                pcs_max: Some(b.pcs_max),
                ..CsvRow::blank(emb, "baseline", &b.source)
            });
        }
        for b in &s.baseline_type_means {
            rows.push(CsvRow {
                broad_type: b.broad_type,
                kind: Some(b.kind),
                count: Some(b.sources),
                ocs: Some(b.ocs),
                pcs: Some(b.pcs),
                ..CsvRow::blank(emb, "baseline_type_mean", b.kind.as_str())
            });
        }
    }
    rows
}

fn csv_bytes<S: Serialize>(rows: impl IntoIterator<Item = S>) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in rows {
        w.serialize(row)?;
    }
    w.into_inner().map_err(|e| Error::Config(e.to_string()))
}

/// Serializes the report. JSON is pretty-printed with a stable field order.
pub fn emit(report: &MetricsReport, format: OutputFormat) -> Result<Vec<u8>> {
    match format {
        OutputFormat::Json => {
            let mut bytes = serde_json::to_vec_pretty(report)?;
            bytes.push(b'\n');
            Ok(bytes)
        }
        OutputFormat::Csv => csv_bytes(csv_rows(report)),
    }
}

#[derive(Serialize)]
struct DecompositionRow<'a> {
    embedding: &'a str,
    relation: &'a str,
    broad_type: BroadType,
    #[serde(flatten)]
    means: MeanDecomposition,
}

/// Per-relation mean decomposition terms as CSV.
pub fn emit_decompositions_csv(report: &MetricsReport) -> Result<Vec<u8>> {
    let rows = report.sections.iter().flat_map(|s| {
        s.decompositions.iter().filter_map(move |d| {
            d.means.map(|means| DecompositionRow {
                embedding: &s.name,
                relation: &d.name,
                broad_type: d.broad_type,
                means,
            })
        })
    });
    // `flatten` is unsupported by the csv serializer, so write it by hand.
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "embedding",
        "relation",
        "broad_type",
        "quads",
        "score_within_pair",
        "score_offset_offset",
        "score_offset_start",
        "delta_norm_term",
        "delta_offset_offset",
        "delta_start_offset",
        "delta_sim",
        "self_within_pair",
        "self_offset_offset",
        "self_offset_start",
    ])?;
    for r in rows {
        let m = r.means;
        let mut rec = vec![
            r.embedding.to_string(),
            r.relation.to_string(),
            r.broad_type.to_string(),
            m.quads.to_string(),
        ];
        rec.extend(
            [
                m.score_within_pair,
                m.score_offset_offset,
                m.score_offset_start,
                m.delta_norm_term,
                m.delta_offset_offset,
                m.delta_start_offset,
                m.delta_sim,
                m.self_within_pair,
                m.self_offset_offset,
                m.self_offset_start,
            ]
            .iter()
            .map(|v| v.to_string()),
        );
        w.write_record(&rec)?;
    }
    w.into_inner().map_err(|e| Error::Config(e.to_string()))
}

#[derive(Serialize)]
struct HistogramRow<'a> {
    embedding: &'a str,
    kind: HistogramKind,
    broad_type: BroadType,
    bin_low: f64,
    bin_high: f64,
    count: u64,
}

/// Binned similarity distributions as CSV, one row per bin.
pub fn emit_histograms_csv(report: &MetricsReport) -> Result<Vec<u8>> {
    let rows = report.sections.iter().flat_map(|s| {
        s.histograms.iter().flat_map(move |h| {
            h.counts.iter().enumerate().map(move |(i, c)| HistogramRow {
                embedding: &s.name,
                kind: h.kind,
                broad_type: h.broad_type,
                bin_low: -1.0 + i as f64 * h.bin_width,
                bin_high: -1.0 + (i + 1) as f64 * h.bin_width,
                count: *c,
            })
        })
    });
    csv_bytes(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{SynthModel, SynthSpec};

    fn suite() -> SynthSuite {
        let mk = |name: &str, ty, model| SynthSpec {
            name: name.into(),
            broad_type: ty,
            ..SynthSpec::new(model, 12, 16, 1)
        };
        SynthSuite {
            seed: 4,
            distractors: Some(200),
            relations: vec![
                mk("par", BroadType::Inflectional, SynthModel::ParallelOffset),
                mk("clu", BroadType::Inflectional, SynthModel::Clustered),
                mk("rnd", BroadType::Encyclopedic, SynthModel::Random),
            ],
        }
    }

    fn config() -> RunConfig {
        let mut c = RunConfig::new(DatasetSource::Synth(suite()));
        c.metrics = Metric::ALL.into_iter().collect();
        c.n_shuffles = 5;
        c.baseline_instances = 2;
        c.histograms = true;
        c
    }

    #[test]
    fn empty_metric_selection_is_rejected_up_front() {
        let mut c = config();
        c.metrics.clear();
        assert!(matches!(run(&c), Err(Error::Config(_))));
    }

    #[test]
    fn bats_run_needs_an_embedding() {
        let c = RunConfig::new(DatasetSource::Bats("nowhere".into()));
        assert!(matches!(c.validate(), Err(Error::Config(_))));
    }

    #[test]
    fn synthetic_run_structure() {
        let report = run(&config()).unwrap();
        assert!(report.is_success());
        let s = &report.sections[0];
        assert_eq!(s.relations.len(), 3);
        assert_eq!(s.type_means.len(), 2);
        assert_eq!(s.decompositions.len(), 3);
        assert!(!s.baselines.is_empty());
        assert_eq!(s.histograms.len(), 4);
        let par = &s.relations[0];
        assert!(par.ocs.unwrap() > 0.99);
        assert_eq!(par.pcs.unwrap(), 1.0);
        assert_eq!(par.accuracy_normal.unwrap(), 1.0);
    }

    #[test]
    fn json_round_trips_byte_identically() {
        let report = run(&config()).unwrap();
        let bytes = emit(&report, OutputFormat::Json).unwrap();
        let back: MetricsReport = serde_json::from_slice(&bytes).unwrap();
        assert_eq!(emit(&back, OutputFormat::Json).unwrap(), bytes);
    }

    #[test]
    fn csv_has_drop_counts() {
        let report = run(&config()).unwrap();
        let text = String::from_utf8(emit(&report, OutputFormat::Csv).unwrap()).unwrap();
        let header = text.lines().next().unwrap();
        assert!(header.contains("dropped_oov") && header.contains("dropped_identical"));
        assert!(text
            .lines()
            .any(|l| l.starts_with("synthetic,relation,par,")));
        let d = String::from_utf8(emit_decompositions_csv(&report).unwrap()).unwrap();
        assert_eq!(d.lines().count(), 4);
        let h = String::from_utf8(emit_histograms_csv(&report).unwrap()).unwrap();
        assert_eq!(h.lines().count(), 1 + 4 * 100);
    }

    #[test]
    fn histogram_binning_edges() {
        let mut h = Histogram::new(HistogramKind::OffsetSimilarity, BroadType::Inflectional);
        h.add(-1.0);
        h.add(1.0);
        h.add(0.0);
        h.add(0.019);
        assert_eq!(h.counts[0], 1);
        assert_eq!(h.counts[99], 1);
        assert_eq!(h.counts[50], 2);
    }
}
