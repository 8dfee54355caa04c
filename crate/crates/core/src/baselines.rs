//! Randomized analogy sets that carry no pairing consistency by construction.

use std::collections::HashSet;
use std::fmt;

use rand::seq::{index, IndexedRandom, SliceRandom};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::bats::{BroadType, ResolvedPair, ResolvedRelation};
use crate::embed_io::EmbeddingTable;
use crate::error::{Error, Result};
use crate::rng;
use crate::scalar::Scalar;

/// Cap on pairs per mismatched-category instance.
pub const MISMATCH_PAIRS: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BaselineKind {
    PermutedWithinCategory,
    MismatchedWithinType,
    MismatchedAcrossType,
    RandomStart,
    RandomEnd,
    RandomBoth,
}

impl BaselineKind {
    pub const ALL: [BaselineKind; 6] = [
        BaselineKind::PermutedWithinCategory,
        BaselineKind::MismatchedWithinType,
        BaselineKind::MismatchedAcrossType,
        BaselineKind::RandomStart,
        BaselineKind::RandomEnd,
        BaselineKind::RandomBoth,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            BaselineKind::PermutedWithinCategory => "permuted_within_category",
            BaselineKind::MismatchedWithinType => "mismatched_within_type",
            BaselineKind::MismatchedAcrossType => "mismatched_across_type",
            BaselineKind::RandomStart => "random_start",
            BaselineKind::RandomEnd => "random_end",
            BaselineKind::RandomBoth => "random_both",
        }
    }
}

impl fmt::Display for BaselineKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MismatchScope {
    WithinType,
    AcrossType,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RandomSide {
    Start,
    End,
    Both,
}

#[derive(Debug, Clone)]
pub struct BaselineInstance<T> {
    pub kind: BaselineKind,
    /// Source relation name, or `start->end` category names when mismatched.
    pub source: String,
    /// Type the instance is reported under; `None` for [`BaselineKind::RandomBoth`].
    pub broad_type: Option<BroadType>,
    pub index: usize,
    pub relation: ResolvedRelation<T>,
}

fn combine<T: Scalar>(start: &ResolvedPair<T>, end: &ResolvedPair<T>) -> ResolvedPair<T> {
    ResolvedPair {
        start: start.start.clone(),
        end: end.end.clone(),
        start_row: start.start_row,
        end_row: end.end_row,
        start_vec: start.start_vec.clone(),
        end_vec: end.end_vec.clone(),
    }
}

fn assemble<T: Scalar>(
    name: String,
    broad_type: Option<BroadType>,
    candidates: Vec<ResolvedPair<T>>,
) -> ResolvedRelation<T> {
    let total = candidates.len();
    let pairs: Vec<_> = candidates
        .into_iter()
        .filter(|p| p.start_vec != p.end_vec)
        .collect();
    ResolvedRelation {
        name,
        broad_type,
        total_pairs: total,
        dropped_oov: 0,
        dropped_identical: total - pairs.len(),
        pairs,
    }
}

/// Reassigns end words to start words uniformly at random, fixed points allowed.
pub fn permute_within_category<T: Scalar, R: Rng + ?Sized>(
    resolved: &ResolvedRelation<T>,
    rng: &mut R,
    index: usize,
) -> Result<BaselineInstance<T>> {
    resolved.require_usable()?;
    let mut perm: Vec<usize> = (0..resolved.len()).collect();
    perm.shuffle(rng);
    let pairs = perm
        .iter()
        .enumerate()
        .map(|(i, &p)| combine(&resolved.pairs[i], &resolved.pairs[p]))
        .collect();
    Ok(BaselineInstance {
        kind: BaselineKind::PermutedWithinCategory,
        source: resolved.name.clone(),
        broad_type: resolved.broad_type,
        index,
        relation: assemble(
            format!("{}#permuted{index}", resolved.name),
            resolved.broad_type,
            pairs,
        ),
    })
}

/// Pairs the start category of `relations[source]` with the end category of
/// a randomly chosen other relation inside `scope`. Both sides are sampled
/// without replacement, up to [`MISMATCH_PAIRS`] pairs.
pub fn mismatch_categories<T: Scalar, R: Rng + ?Sized>(
    relations: &[ResolvedRelation<T>],
    source: usize,
    scope: MismatchScope,
    rng: &mut R,
    index: usize,
) -> Result<BaselineInstance<T>> {
    let src = &relations[source];
    src.require_usable()?;
    let targets: Vec<usize> = relations
        .iter()
        .enumerate()
        .filter(|(i, r)| {
            *i != source
                && r.usable()
                && match scope {
                    MismatchScope::WithinType => r.broad_type == src.broad_type,
                    MismatchScope::AcrossType => r.broad_type != src.broad_type,
                }
        })
        .map(|(i, _)| i)
        .collect();
    let &target = targets.choose(rng).ok_or_else(|| {
        Error::Dataset(format!(
            "no other eligible category {} type of `{}`",
            match scope {
                MismatchScope::WithinType => "within the",
                MismatchScope::AcrossType => "outside the",
            },
            src.name
        ))
    })?;
    let dst = &relations[target];
    let k = MISMATCH_PAIRS.min(src.len()).min(dst.len());
    let starts = index::sample(rng, src.len(), k);
    let ends = index::sample(rng, dst.len(), k);
    let pairs = starts
        .iter()
        .zip(ends.iter())
        .map(|(s, e)| combine(&src.pairs[s], &dst.pairs[e]))
        .filter(|p| p.start != p.end)
        .collect();
    let kind = match scope {
        MismatchScope::WithinType => BaselineKind::MismatchedWithinType,
        MismatchScope::AcrossType => BaselineKind::MismatchedAcrossType,
    };
    let source_name = format!("{}->{}", src.name, dst.name);
    Ok(BaselineInstance {
        kind,
        broad_type: src.broad_type,
        relation: assemble(format!("{source_name}#{index}"), src.broad_type, pairs),
        source: source_name,
        index,
    })
}

/// `count` distinct vocabulary rows, none in `excluded`.
fn sample_vocabulary<T: Scalar, R: Rng + ?Sized>(
    table: &EmbeddingTable<T>,
    excluded: &HashSet<usize>,
    count: usize,
    rng: &mut R,
) -> Result<Vec<usize>> {
    let available = table.len() - excluded.iter().filter(|&&r| r < table.len()).count();
    if available < count {
        return Err(Error::InsufficientVocabulary {
            needed: count,
            available,
        });
    }
    if available < 4 * count {
        let pool: Vec<usize> = (0..table.len()).filter(|r| !excluded.contains(r)).collect();
        return Ok(index::sample(rng, pool.len(), count)
            .iter()
            .map(|i| pool[i])
            .collect());
    }
    let mut chosen = Vec::with_capacity(count);
    let mut seen = HashSet::with_capacity(count);
    while chosen.len() < count {
        let r = rng.random_range(0..table.len());
        if !excluded.contains(&r) && seen.insert(r) {
            chosen.push(r);
        }
    }
    Ok(chosen)
}

/// Replaces the start words, end words or both with random vocabulary words
/// that are distinct and not among the relation's own words.
pub fn randomize<T: Scalar, R: Rng + ?Sized>(
    resolved: &ResolvedRelation<T>,
    side: RandomSide,
    table: &EmbeddingTable<T>,
    rng: &mut R,
    index: usize,
) -> Result<BaselineInstance<T>> {
    resolved.require_usable()?;
    let n = resolved.len();
    let own: HashSet<usize> = resolved
        .pairs
        .iter()
        .flat_map(|p| [p.start_row, p.end_row])
        .collect();
    let needed = if side == RandomSide::Both { 2 * n } else { n };
    let rows = sample_vocabulary(table, &own, needed, rng)?;
    let pairs = resolved
        .pairs
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let (s, e) = match side {
                RandomSide::Start => (rows[i], p.end_row),
                RandomSide::End => (p.start_row, rows[i]),
                RandomSide::Both => (rows[i], rows[n + i]),
            };
            ResolvedPair::from_rows(table, s, e)
        })
        .collect();
    let (kind, broad_type) = match side {
        RandomSide::Start => (BaselineKind::RandomStart, resolved.broad_type),
        RandomSide::End => (BaselineKind::RandomEnd, resolved.broad_type),
        RandomSide::Both => (BaselineKind::RandomBoth, None),
    };
    Ok(BaselineInstance {
        kind,
        source: resolved.name.clone(),
        broad_type,
        index,
        relation: assemble(
            format!("{}#{kind}{index}", resolved.name),
            broad_type,
            pairs,
        ),
    })
}

/// Seed for one instance; independent of construction order.
pub fn instance_seed(master: u64, kind: BaselineKind, source: &str, index: usize) -> u64 {
    rng::derive_index(
        rng::derive(rng::derive(master, kind.as_str()), source),
        index as u64,
    )
}

/// `n_instances` instances of every kind for every usable relation.
/// Mismatched kinds skip relations with no eligible partner category.
pub fn baseline_suite<T: Scalar>(
    relations: &[ResolvedRelation<T>],
    table: &EmbeddingTable<T>,
    n_instances: usize,
    seed: u64,
) -> Result<Vec<BaselineInstance<T>>> {
    let mut out = Vec::new();
    for kind in BaselineKind::ALL {
        for (src, rel) in relations.iter().enumerate() {
            if !rel.usable() {
                continue;
            }
            for i in 0..n_instances {
                let mut g = rng::seeded(instance_seed(seed, kind, &rel.name, i));
                let inst = match kind {
                    BaselineKind::PermutedWithinCategory => permute_within_category(rel, &mut g, i),
                    BaselineKind::MismatchedWithinType | BaselineKind::MismatchedAcrossType => {
                        let scope = if kind == BaselineKind::MismatchedWithinType {
                            MismatchScope::WithinType
                        } else {
                            MismatchScope::AcrossType
                        };
                        match mismatch_categories(relations, src, scope, &mut g, i) {
                            Err(Error::Dataset(_)) => break,
                            other => other,
                        }
                    }
                    BaselineKind::RandomStart => {
                        randomize(rel, RandomSide::Start, table, &mut g, i)
                    }
                    BaselineKind::RandomEnd => randomize(rel, RandomSide::End, table, &mut g, i),
                    BaselineKind::RandomBoth => randomize(rel, RandomSide::Both, table, &mut g, i),
                }?;
                out.push(inst);
            }
        }
    }
    Ok(out)
}
