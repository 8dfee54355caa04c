//! Synthetic embedding tables with known regularity structure.
//!
//! - `ParallelOffset`: starts uniform on the unit sphere, `end = start + scale·v + ε`
//!   with one shared unit direction `v` and isotropic Gaussian `ε` of
//!   per-component deviation `noise`.
//! - `Clustered`: starts scattered around a centre `c₁`, ends around `c₂`,
//!   pairing arbitrary. Centres lie at distance `separation` from the origin
//!   in random directions; `spread` is the RMS distance of a word from its
//!   centre. Offsets concentrate without any pairing consistency.
//! - `Random`: every word uniform on the unit sphere.
//!
//! Tables also hold distractor words (uniform on the sphere) so analogy scans
//! have candidates beyond the relation's own words.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::bats::{BroadType, Relation, WordPair};
use crate::embed_io::EmbeddingTable;
use crate::error::{Error, Result};
use crate::rng::{self, SeededRng};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SynthModel {
    ParallelOffset,
    Clustered,
    Random,
}

fn default_name() -> String {
    "synthetic".into()
}

fn default_type() -> BroadType {
    BroadType::Inflectional
}

fn one() -> f64 {
    1.0
}

fn four() -> f64 {
    4.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    #[serde(default = "default_name")]
    pub name: String,
    #[serde(default = "default_type")]
    pub broad_type: BroadType,
    pub model: SynthModel,
    pub n_pairs: usize,
    pub dim: usize,
    #[serde(default = "one")]
    pub scale: f64,
    #[serde(default)]
    pub noise: f64,
    #[serde(default = "one")]
    pub spread: f64,
    #[serde(default = "four")]
    pub separation: f64,
    #[serde(default)]
    pub seed: u64,
    /// Extra random words; defaults to `10 · n_pairs`.
    #[serde(default)]
    pub distractors: Option<usize>,
}

impl SynthSpec {
    pub fn new(model: SynthModel, n_pairs: usize, dim: usize, seed: u64) -> Self {
        SynthSpec {
            name: default_name(),
            broad_type: default_type(),
            model,
            n_pairs,
            dim,
            scale: 1.0,
            noise: 0.0,
            spread: 1.0,
            separation: 4.0,
            seed,
            distractors: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| {
            Err(Error::Config(format!(
                "synthetic relation `{}`: {m}",
                self.name
            )))
        };
        if self.n_pairs < 3 {
            return bad("n_pairs must be at least 3");
        }
        if self.dim < 2 {
            return bad("dim must be at least 2");
        }
        if [self.noise, self.spread]
            .iter()
            .any(|v| v.is_nan() || *v < 0.0)
        {
            return bad("noise and spread must be non-negative");
        }
        if !self.scale.is_finite() || !self.separation.is_finite() {
            return bad("scale and separation must be finite");
        }
        Ok(())
    }
}

/// Several synthetic relations sharing one table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthSuite {
    #[serde(default)]
    pub seed: u64,
    /// Distractor count; defaults to ten per generated pair.
    #[serde(default)]
    pub distractors: Option<usize>,
    pub relations: Vec<SynthSpec>,
}

#[derive(Debug, Clone)]
pub struct Synthesized<T> {
    pub table: EmbeddingTable<T>,
    pub relations: Vec<Relation>,
    /// Pairs regenerated because both words came out identical.
    pub resampled: usize,
}

fn gaussian(rng: &mut SeededRng, dim: usize) -> Vec<f64> {
    (0..dim).map(|_| rng.sample(StandardNormal)).collect()
}

fn on_sphere(rng: &mut SeededRng, dim: usize) -> Vec<f64> {
    loop {
        let g = gaussian(rng, dim);
        let n = g.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 0.0 {
            return g.into_iter().map(|x| x / n).collect();
        }
    }
}

fn around(rng: &mut SeededRng, centre: &[f64], sd: f64) -> Vec<f64> {
    centre
        .iter()
        .map(|c| c + sd * rng.sample::<f64, _>(StandardNormal))
        .collect()
}

type VectorPairs = Vec<(Vec<f64>, Vec<f64>)>;

fn pair_vectors(spec: &SynthSpec, rng: &mut SeededRng) -> (VectorPairs, usize) {
    let dim = spec.dim;
    let mut resampled = 0;
    let mut pairs = Vec::with_capacity(spec.n_pairs);
    match spec.model {
        SynthModel::ParallelOffset => {
            let v = on_sphere(rng, dim);
            while pairs.len() < spec.n_pairs {
                let start = on_sphere(rng, dim);
                let shift: Vec<f64> = v.iter().map(|x| spec.scale * x).collect();
                let end = around(rng, &start, spec.noise)
                    .iter()
                    .zip(&shift)
                    .map(|(a, b)| a + b)
                    .collect::<Vec<_>>();
                push_distinct(&mut pairs, &mut resampled, start, end);
            }
        }
        SynthModel::Clustered => {
            let sd = spec.spread / (dim as f64).sqrt();
            let c1: Vec<f64> = on_sphere(rng, dim)
                .iter()
                .map(|x| x * spec.separation)
                .collect();
            let c2: Vec<f64> = on_sphere(rng, dim)
                .iter()
                .map(|x| x * spec.separation)
                .collect();
            while pairs.len() < spec.n_pairs {
                let start = around(rng, &c1, sd);
                let end = around(rng, &c2, sd);
                push_distinct(&mut pairs, &mut resampled, start, end);
            }
        }
        SynthModel::Random => {
            while pairs.len() < spec.n_pairs {
                let start = on_sphere(rng, dim);
                let end = on_sphere(rng, dim);
                push_distinct(&mut pairs, &mut resampled, start, end);
            }
        }
    }
    (pairs, resampled)
}

fn push_distinct(pairs: &mut VectorPairs, resampled: &mut usize, start: Vec<f64>, end: Vec<f64>) {
    // Compare at f32 precision, the coarsest storage a table may use.
    if start.iter().zip(&end).all(|(a, b)| *a as f32 == *b as f32) {
        *resampled += 1;
    } else {
        pairs.push((start, end));
    }
}

/// Generates one relation and its table.
pub fn generate<T: Scalar>(spec: &SynthSpec) -> Result<Synthesized<T>> {
    generate_suite(&SynthSuite {
        seed: spec.seed,
        distractors: spec.distractors,
        relations: vec![spec.clone()],
    })
}

/// Generates every relation of the suite into one shared table.
pub fn generate_suite<T: Scalar>(suite: &SynthSuite) -> Result<Synthesized<T>> {
    let first = suite
        .relations
        .first()
        .ok_or_else(|| Error::Config("synthetic suite has no relations".into()))?;
    let dim = first.dim;
    let mut names = std::collections::HashSet::new();
    for spec in &suite.relations {
        spec.validate()?;
        if spec.dim != dim {
            return Err(Error::Config(
                "all synthetic relations must share one dim".into(),
            ));
        }
        if !names.insert(spec.name.as_str()) {
            return Err(Error::Config(format!(
                "duplicate synthetic relation `{}`",
                spec.name
            )));
        }
    }

    let mut words = Vec::new();
    let mut data = Vec::new();
    let mut relations = Vec::new();
    let mut resampled = 0;
    let mut total_pairs = 0;
    for spec in &suite.relations {
        let mut rng = rng::seeded(rng::derive_index(
            rng::derive(suite.seed, &spec.name),
            spec.seed,
        ));
        let (pairs, r) = pair_vectors(spec, &mut rng);
        resampled += r;
        total_pairs += pairs.len();
        let mut word_pairs = Vec::with_capacity(pairs.len());
        for (i, (s, e)) in pairs.into_iter().enumerate() {
            let (sw, ew) = (format!("{}:s{i}", spec.name), format!("{}:e{i}", spec.name));
            words.push(sw.clone());
            data.extend(s);
            words.push(ew.clone());
            data.extend(e);
            word_pairs.push(WordPair { start: sw, end: ew });
        }
        relations.push(Relation::new(&spec.name, spec.broad_type, word_pairs));
    }

    let n_distractors = suite.distractors.unwrap_or(10 * total_pairs);
    let mut rng = rng::seeded(rng::derive(suite.seed, "~distractors"));
    for k in 0..n_distractors {
        words.push(format!("~d{k}"));
        data.extend(on_sphere(&mut rng, dim));
    }

    let data: Vec<T> = data.into_iter().map(T::from_f64_lossy).collect();
    Ok(Synthesized {
        table: EmbeddingTable::from_rows(words, data, dim)?,
        relations,
        resampled,
    })
}
