//! Offset concentration (OCS) and pairing consistency (PCS).
//!
//! OCS is the mean cosine between the unit offsets `o_i = unit(a_i* − a_i)`
//! of one relation. PCS is the mean ROC AUC separating the pairwise
//! similarities of the true offsets from those of offsets whose end words
//! have been shuffled across start words.

use log::warn;
use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bats::{ResolvedPair, ResolvedRelation};
use crate::error::{Error, Result};
use crate::linalg::unit_difference;
use crate::rng;
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OffsetKind {
    True,
    Shuffled,
    Baseline,
}

/// Unit-normalized offsets with the word pairs they came from.
#[derive(Debug, Clone, PartialEq)]
pub struct OffsetSet {
    pub offsets: Vec<Vec<f64>>,
    pub sources: Vec<(String, String)>,
    pub kind: OffsetKind,
    /// Set when the shuffle could only avoid fixed points, not repeated
    /// end words.
    pub relaxed: bool,
}

impl OffsetSet {
    pub fn len(&self) -> usize {
        self.offsets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.offsets.is_empty()
    }

    /// Offsets from raw vectors; mostly useful for tests and synthetic sets.
    pub fn from_vectors(vectors: &[Vec<f64>], kind: OffsetKind) -> Result<Self> {
        let offsets = vectors
            .iter()
            .map(|v| unit_difference(v, &vec![0.0; v.len()]))
            .collect::<Result<Vec<_>>>()?;
        let sources = (0..offsets.len())
            .map(|i| (format!("s{i}"), format!("e{i}")))
            .collect();
        Ok(OffsetSet {
            offsets,
            sources,
            kind,
            relaxed: false,
        })
    }
}

/// Pairwise similarities `o_i · o_j` for `i < j`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimilaritySample {
    pub values: Vec<f64>,
}

impl SimilaritySample {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PcsConfig {
    pub n_shuffles: usize,
    pub seed: u64,
    pub max_rejection_tries: usize,
}

impl Default for PcsConfig {
    fn default() -> Self {
        PcsConfig {
            n_shuffles: 50,
            seed: 0,
            max_rejection_tries: 1000,
        }
    }
}

type OffsetParts = (Vec<Vec<f64>>, Vec<(String, String)>);

fn offsets_of<'a, T: Scalar>(
    pairs: impl Iterator<Item = (&'a ResolvedPair<T>, &'a ResolvedPair<T>)>,
) -> Result<OffsetParts> {
    let mut offsets = Vec::new();
    let mut sources = Vec::new();
    for (s, e) in pairs {
        let o = unit_difference(&e.end_vec, &s.start_vec).map_err(|_| {
            Error::degenerate(format!("`{}` and `{}` share a vector", s.start, e.end))
        })?;
        offsets.push(o);
        sources.push((s.start.clone(), e.end.clone()));
    }
    Ok((offsets, sources))
}

/// One unit offset per resolved pair, in order.
pub fn build_offsets<T: Scalar>(resolved: &ResolvedRelation<T>) -> Result<OffsetSet> {
    resolved.require_usable()?;
    let (offsets, sources) = offsets_of(resolved.pairs.iter().map(|p| (p, p)))?;
    Ok(OffsetSet {
        offsets,
        sources,
        kind: OffsetKind::True,
        relaxed: false,
    })
}

/// Mean pairwise cosine of a set of vectors (e.g. the start words of a
/// relation), a measure of how tightly one side of a relation clusters.
pub fn cohesion<T: Scalar>(vectors: &[&[T]]) -> Result<f64> {
    let units = vectors
        .iter()
        .map(|v| unit_difference(v, &vec![T::zero(); v.len()]))
        .collect::<Result<Vec<_>>>()?;
    let set = OffsetSet {
        offsets: units,
        sources: Vec::new(),
        kind: OffsetKind::Baseline,
        relaxed: false,
    };
    Ok(pairwise_sims(&set)?.mean())
}

/// All `N(N−1)/2` dot products `o_i · o_j`, `i < j`, row-major over `i`.
pub fn pairwise_sims(o: &OffsetSet) -> Result<SimilaritySample> {
    let n = o.len();
    if n < 2 {
        return Err(Error::Ineligible {
            name: "offset set".into(),
            pairs: n,
            required: 2,
        });
    }
    let mut values = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in i + 1..n {
            values.push(f64::dot_wide(&o.offsets[i], &o.offsets[j]));
        }
    }
    Ok(SimilaritySample { values })
}

/// Offset concentration score: mean similarity over ordered pairs `i ≠ j`,
/// which by symmetry equals the mean of [`pairwise_sims`].
pub fn ocs(o: &OffsetSet) -> Result<f64> {
    if o.len() < 3 {
        return Err(Error::Ineligible {
            name: "offset set".into(),
            pairs: o.len(),
            required: 3,
        });
    }
    Ok(pairwise_sims(o)?.mean())
}

fn offset_sum(o: &OffsetSet) -> Vec<f64> {
    let dim = o.offsets.first().map_or(0, Vec::len);
    let mut sum = vec![0.0; dim];
    for v in &o.offsets {
        for (s, x) in sum.iter_mut().zip(v) {
            *s += x;
        }
    }
    sum
}

/// Unit vector along the sum of the offsets.
pub fn mean_direction(o: &OffsetSet) -> Result<Vec<f64>> {
    let sum = offset_sum(o);
    let n = f64::dot_wide(&sum, &sum).sqrt();
    if o.is_empty() || n <= 1e-12 * o.len() as f64 {
        return Err(Error::DegenerateDirection);
    }
    Ok(sum.into_iter().map(|x| x / n).collect())
}

/// Mean similarity of the offsets to their mean direction, equal to the
/// norm of the mean offset.
pub fn msm(o: &OffsetSet) -> Result<f64> {
    if o.is_empty() {
        return Err(Error::Ineligible {
            name: "offset set".into(),
            pairs: 0,
            required: 1,
        });
    }
    let sum = offset_sum(o);
    Ok(f64::dot_wide(&sum, &sum).sqrt() / o.len() as f64)
}

/// Similarity of every offset to the mean direction.
pub fn direction_sims(o: &OffsetSet) -> Result<Vec<f64>> {
    let d = mean_direction(o)?;
    Ok(o.offsets.iter().map(|v| f64::dot_wide(v, &d)).collect())
}

/// Samples a permutation `π` such that `keys[π(i)] != keys[i]` for all `i`.
///
/// Falls back to a plain derangement (`π(i) != i`) when the key constraint
/// cannot be met within `max_tries`; the flag in the result reports that.
pub fn constrained_permutation<R: Rng + ?Sized>(
    keys: &[&str],
    rng: &mut R,
    max_tries: usize,
) -> Result<(Vec<usize>, bool)> {
    let n = keys.len();
    if n < 2 {
        return Err(Error::NoPermutation { n });
    }
    let mut perm: Vec<usize> = (0..n).collect();
    for _ in 0..max_tries {
        perm.shuffle(rng);
        if perm.iter().enumerate().all(|(i, &p)| keys[p] != keys[i]) {
            return Ok((perm, false));
        }
    }
    warn!("no permutation avoids repeated end words after {max_tries} tries; only avoiding fixed points");
    for _ in 0..max_tries {
        perm.shuffle(rng);
        if perm.iter().enumerate().all(|(i, &p)| p != i) {
            return Ok((perm, true));
        }
    }
    Err(Error::NoPermutation { n })
}

/// Keeps the start words and reassigns end words so that no start is paired
/// with its true end word.
pub fn shuffle<T: Scalar, R: Rng + ?Sized>(
    resolved: &ResolvedRelation<T>,
    rng: &mut R,
    cfg: &PcsConfig,
) -> Result<OffsetSet> {
    resolved.require_usable()?;
    let ends: Vec<&str> = resolved.pairs.iter().map(|p| p.end.as_str()).collect();
    let (perm, relaxed) = constrained_permutation(&ends, rng, cfg.max_rejection_tries)?;
    let mut offsets = Vec::with_capacity(perm.len());
    let mut sources = Vec::with_capacity(perm.len());
    for (i, &p) in perm.iter().enumerate() {
        let (s, e) = (&resolved.pairs[i], &resolved.pairs[p]);
        // A start word may share its vector with another pair's end word.
        match unit_difference(&e.end_vec, &s.start_vec) {
            Ok(o) => {
                offsets.push(o);
                sources.push((s.start.clone(), e.end.clone()));
            }
            Err(_) => warn!(
                "skipping shuffled pair `{}`/`{}` with identical vectors",
                s.start, e.end
            ),
        }
    }
    Ok(OffsetSet {
        offsets,
        sources,
        kind: OffsetKind::Shuffled,
        relaxed,
    })
}

/// Rank-based ROC AUC: the probability that a true similarity exceeds a
/// shuffled one, with ties counted as one half.
pub fn auc(true_sims: &SimilaritySample, shuffled_sims: &SimilaritySample) -> Result<f64> {
    auc_values(&true_sims.values, &shuffled_sims.values)
}

pub fn auc_values(positives: &[f64], negatives: &[f64]) -> Result<f64> {
    if positives.is_empty() || negatives.is_empty() {
        return Err(Error::EmptySample);
    }
    let mut pos = positives.to_vec();
    let mut neg = negatives.to_vec();
    pos.sort_unstable_by(f64::total_cmp);
    neg.sort_unstable_by(f64::total_cmp);

    // Twice the Mann–Whitney U statistic, kept in integers so the result is
    // exact up to the final division.
    let mut twice_u: u64 = 0;
    let (mut below, mut upto) = (0usize, 0usize);
    for p in &pos {
        while below < neg.len() && neg[below] < *p {
            below += 1;
        }
        upto = upto.max(below);
        while upto < neg.len() && neg[upto] == *p {
            upto += 1;
        }
        twice_u += 2 * below as u64 + (upto - below) as u64;
    }
    Ok(twice_u as f64 / (2 * pos.len() as u64 * neg.len() as u64) as f64)
}

/// PCS together with the per-shuffle AUC values it averages.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcsResult {
    pub score: f64,
    pub aucs: Vec<f64>,
    /// Shuffles that fell back to the fixed-point-only constraint.
    pub relaxed_shuffles: usize,
}

impl PcsResult {
    pub fn min_auc(&self) -> f64 {
        self.aucs.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_auc(&self) -> f64 {
        self.aucs.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Pairing consistency score. Shuffle `k` draws from substream `k` of
/// `cfg.seed`, so the result does not depend on scheduling.
pub fn pcs<T: Scalar>(resolved: &ResolvedRelation<T>, cfg: &PcsConfig) -> Result<PcsResult> {
    if cfg.n_shuffles == 0 {
        return Err(Error::Config("n_shuffles must be at least 1".into()));
    }
    let truth = pairwise_sims(&build_offsets(resolved)?)?;
    let per_shuffle: Vec<(f64, bool)> = (0..cfg.n_shuffles)
        .into_par_iter()
        .map(|k| {
            let mut rng = rng::substream(cfg.seed, k as u64);
            let shuffled = shuffle(resolved, &mut rng, cfg)?;
            Ok((auc(&truth, &pairwise_sims(&shuffled)?)?, shuffled.relaxed))
        })
        .collect::<Result<_>>()?;
    let aucs: Vec<f64> = per_shuffle.iter().map(|(a, _)| *a).collect();
    Ok(PcsResult {
        score: aucs.iter().sum::<f64>() / aucs.len() as f64,
        relaxed_shuffles: per_shuffle.iter().filter(|(_, r)| *r).count(),
        aucs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embed_io::EmbeddingTable;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn set(v: &[&[f64]]) -> OffsetSet {
        let owned: Vec<Vec<f64>> = v.iter().map(|x| x.to_vec()).collect();
        OffsetSet::from_vectors(&owned, OffsetKind::True).unwrap()
    }

    /// Ordered-pair double sum, straight from the definition.
    fn ocs_oracle(o: &OffsetSet) -> f64 {
        let n = o.len();
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    s += o.offsets[i]
                        .iter()
                        .zip(&o.offsets[j])
                        .map(|(a, b)| a * b)
                        .sum::<f64>();
                }
            }
        }
        s / (n * (n - 1)) as f64
    }

    fn auc_oracle(t: &[f64], s: &[f64]) -> f64 {
        let mut gt = 0.0;
        let mut eq = 0.0;
        for a in t {
            for b in s {
                if a > b {
                    gt += 1.0;
                } else if a == b {
                    eq += 1.0;
                }
            }
        }
        (gt + 0.5 * eq) / (t.len() * s.len()) as f64
    }

    #[test]
    fn pairwise_examples() {
        assert_eq!(
            pairwise_sims(&set(&[&[1.0, 0.0], &[0.0, 1.0]]))
                .unwrap()
                .values,
            vec![0.0]
        );
        assert_eq!(
            pairwise_sims(&set(&[&[1.0, 0.0], &[1.0, 0.0], &[0.0, 1.0]]))
                .unwrap()
                .values,
            vec![1.0, 0.0, 0.0]
        );
        assert!(pairwise_sims(&set(&[&[1.0, 0.0]])).is_err());
        let fifty: Vec<Vec<f64>> = (0..50).map(|i| vec![1.0, i as f64]).collect();
        let o = OffsetSet::from_vectors(&fifty, OffsetKind::True).unwrap();
        assert_eq!(pairwise_sims(&o).unwrap().len(), 1225);
    }

    #[test]
    fn ocs_examples() {
        assert_abs_diff_eq!(
            ocs(&set(&[&[1.0, 1.0], &[2.0, 2.0], &[0.5, 0.5]])).unwrap(),
            1.0,
            epsilon = 1e-12
        );
        let cross = set(&[&[1.0, 0.0], &[-1.0, 0.0], &[0.0, 1.0], &[0.0, -1.0]]);
        assert_abs_diff_eq!(ocs_oracle(&cross), -1.0 / 3.0, epsilon = 1e-15);
        assert_abs_diff_eq!(ocs(&cross).unwrap(), -1.0 / 3.0, epsilon = 1e-15);
        assert!(ocs(&set(&[&[1.0, 0.0], &[0.0, 1.0]])).is_err());
    }

    #[test]
    fn mean_direction_examples() {
        assert_eq!(
            mean_direction(&set(&[&[1.0, 0.0], &[1.0, 0.0]])).unwrap(),
            vec![1.0, 0.0]
        );
        let d = mean_direction(&set(&[&[1.0, 0.0], &[0.0, 1.0]])).unwrap();
        assert_abs_diff_eq!(d[0], std::f64::consts::FRAC_1_SQRT_2, epsilon = 1e-8);
        assert_abs_diff_eq!(d[1], std::f64::consts::FRAC_1_SQRT_2, epsilon = 1e-8);
        assert!(matches!(
            mean_direction(&set(&[&[1.0, 0.0], &[-1.0, 0.0]])),
            Err(Error::DegenerateDirection)
        ));
    }

    #[test]
    fn msm_examples() {
        assert_abs_diff_eq!(
            msm(&set(&[&[2.0, 0.0], &[1.0, 0.0], &[3.0, 0.0]])).unwrap(),
            1.0,
            epsilon = 1e-12
        );
        let o = set(&[&[1.0, 0.0], &[0.0, 1.0]]);
        let pairwise_mean = pairwise_sims(&o).unwrap().mean();
        assert_eq!(pairwise_mean, 0.0);
        let identity = (0.5f64 + 0.5 * pairwise_mean).sqrt();
        assert_abs_diff_eq!(msm(&o).unwrap(), identity, epsilon = 1e-12);
        assert_abs_diff_eq!(msm(&o).unwrap(), 0.5f64.sqrt(), epsilon = 1e-12);
        // Mean similarity to d computed the long way.
        let direct: f64 = direction_sims(&o).unwrap().iter().sum::<f64>() / 2.0;
        assert_abs_diff_eq!(direct, msm(&o).unwrap(), epsilon = 1e-12);
    }

    #[test]
    fn msm_at_zero_ocs_with_fifty_offsets() {
        // An orthonormal basis: OCS = 0, so MSM sits at its floor √(1/N).
        let basis: Vec<Vec<f64>> = (0..50)
            .map(|k| (0..50).map(|j| if j == k { 1.0 } else { 0.0 }).collect())
            .collect();
        let o = OffsetSet::from_vectors(&basis, OffsetKind::True).unwrap();
        assert_eq!(ocs(&o).unwrap(), 0.0);
        assert_abs_diff_eq!(msm(&o).unwrap(), (1.0f64 / 50.0).sqrt(), epsilon = 1e-12);
        assert_abs_diff_eq!(msm(&o).unwrap(), 0.1414, epsilon = 1e-4);
    }

    #[test]
    fn auc_examples() {
        assert_eq!(auc_values(&[0.9, 0.8], &[0.2, 0.1]).unwrap(), 1.0);
        assert_eq!(auc_values(&[0.3, 0.1, 0.3], &[0.1, 0.3, 0.3]).unwrap(), 0.5);
        assert_eq!(auc_oracle(&[0.5, 0.2], &[0.4, 0.1]), 0.75);
        assert_eq!(auc_values(&[0.5, 0.2], &[0.4, 0.1]).unwrap(), 0.75);
        assert!(matches!(auc_values(&[], &[0.1]), Err(Error::EmptySample)));
        assert!(matches!(auc_values(&[0.1], &[]), Err(Error::EmptySample)));
    }

    fn relation(
        n: usize,
        dim: usize,
        end_of: impl Fn(usize, &[f64]) -> Vec<f64>,
    ) -> ResolvedRelation<f64> {
        let mut words = Vec::new();
        let mut data = Vec::new();
        for i in 0..n {
            let start: Vec<f64> = (0..dim).map(|j| ((i * 7 + j * 3) as f64).sin()).collect();
            let end = end_of(i, &start);
            words.push(format!("s{i}"));
            data.extend_from_slice(&start);
            words.push(format!("e{i}"));
            data.extend_from_slice(&end);
        }
        let t = EmbeddingTable::from_rows(words, data, dim).unwrap();
        ResolvedRelation::from_row_pairs("synthetic", None, &t, (0..n).map(|i| (2 * i, 2 * i + 1)))
    }

    #[test]
    fn build_offsets_of_parallel_pairs() {
        let r = relation(5, 2, |_, s| vec![s[0], s[1] + 2.0]);
        let o = build_offsets(&r).unwrap();
        assert_eq!(o.len(), 5);
        assert_eq!(o.kind, OffsetKind::True);
        for v in &o.offsets {
            assert_abs_diff_eq!(v[0], 0.0, epsilon = 1e-12);
            assert_abs_diff_eq!(v[1], 1.0, epsilon = 1e-12);
        }
        let small = relation(2, 2, |_, s| vec![s[0], s[1] + 2.0]);
        assert!(matches!(
            build_offsets(&small),
            Err(Error::Ineligible { .. })
        ));
    }

    #[test]
    fn three_pairs_shuffle_to_a_derangement() {
        let r = relation(3, 4, |i, s| s.iter().map(|x| x + i as f64 + 1.0).collect());
        let mut seen = std::collections::HashSet::new();
        for seed in 0..200 {
            let mut g = rng::seeded(seed);
            let o = shuffle(&r, &mut g, &PcsConfig::default()).unwrap();
            assert!(!o.relaxed);
            let ends: Vec<String> = o.sources.iter().map(|(_, e)| e.clone()).collect();
            for (i, e) in ends.iter().enumerate() {
                assert_ne!(e, &format!("e{i}"), "a true pair survived the shuffle");
            }
            seen.insert(ends);
        }
        assert_eq!(seen.len(), 2, "both derangements of three elements occur");
    }

    #[test]
    fn shuffle_is_deterministic_per_seed() {
        let r = relation(10, 4, |i, s| s.iter().map(|x| x * 0.5 + i as f64).collect());
        let cfg = PcsConfig::default();
        let a = shuffle(&r, &mut rng::seeded(9), &cfg).unwrap();
        let b = shuffle(&r, &mut rng::seeded(9), &cfg).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn repeated_end_words_are_avoided_or_flagged() {
        let keys = ["x", "x", "y", "z"];
        for seed in 0..50 {
            let (p, relaxed) =
                constrained_permutation(&keys, &mut rng::seeded(seed), 1000).unwrap();
            assert!(!relaxed);
            for (i, &j) in p.iter().enumerate() {
                assert_ne!(keys[i], keys[j]);
            }
        }
        // Impossible: three of four share a key.
        let keys = ["x", "x", "x", "y"];
        let (p, relaxed) = constrained_permutation(&keys, &mut rng::seeded(1), 100).unwrap();
        assert!(relaxed);
        assert!(p.iter().enumerate().all(|(i, &j)| i != j));
        assert!(constrained_permutation(&["x"], &mut rng::seeded(1), 100).is_err());
    }

    #[test]
    fn pcs_of_exact_parallel_offsets_is_one() {
        let v = [0.4, -0.2, 0.7, 0.1];
        let r = relation(12, 4, |_, s| s.iter().zip(&v).map(|(a, b)| a + b).collect());
        let truth = pairwise_sims(&build_offsets(&r).unwrap()).unwrap();
        assert!(truth.values.iter().all(|s| (s - 1.0).abs() < 1e-12));
        let result = pcs(
            &r,
            &PcsConfig {
                n_shuffles: 20,
                seed: 3,
                max_rejection_tries: 1000,
            },
        )
        .unwrap();
        assert_eq!(result.aucs.len(), 20);
        assert_eq!(result.score, 1.0);
    }

    #[test]
    fn pcs_is_reproducible() {
        let r = relation(15, 6, |i, s| {
            s.iter().map(|x| -x + (i % 3) as f64).collect()
        });
        let cfg = PcsConfig {
            n_shuffles: 10,
            seed: 42,
            max_rejection_tries: 1000,
        };
        assert_eq!(pcs(&r, &cfg).unwrap(), pcs(&r, &cfg).unwrap());
        assert!(pcs(
            &r,
            &PcsConfig {
                n_shuffles: 0,
                ..cfg
            }
        )
        .is_err());
    }

    proptest! {
        #[test]
        fn msm_ocs_identity(vs in prop::collection::vec(prop::collection::vec(-1.0f64..1.0, 5), 3..20)) {
            prop_assume!(vs.iter().all(|v| v.iter().any(|x| x.abs() > 1e-3)));
            let o = OffsetSet::from_vectors(&vs, OffsetKind::True).unwrap();
            let n = o.len() as f64;
            let c = ocs(&o).unwrap();
            prop_assert!((msm(&o).unwrap() - (1.0 / n + (n - 1.0) / n * c).sqrt()).abs() < 1e-6);
            prop_assert!((c - ocs_oracle(&o)).abs() < 1e-12);
        }

        #[test]
        fn auc_matches_brute_force(a in prop::collection::vec(-5i32..5, 1..30),
                                   b in prop::collection::vec(-5i32..5, 1..30)) {
            let a: Vec<f64> = a.into_iter().map(|x| x as f64 / 5.0).collect();
            let b: Vec<f64> = b.into_iter().map(|x| x as f64 / 5.0).collect();
            prop_assert_eq!(auc_values(&a, &b).unwrap(), auc_oracle(&a, &b));
            prop_assert_eq!(auc_values(&a, &a).unwrap(), 0.5);
        }

        #[test]
        fn auc_is_complementary_and_rank_invariant(a in prop::collection::hash_set(-1000i32..1000, 1..30),
                                                   b in prop::collection::hash_set(-1000i32..1000, 1..30)) {
            prop_assume!(a.is_disjoint(&b));
            let a: Vec<f64> = a.into_iter().map(|x| x as f64 / 1000.0).collect();
            let b: Vec<f64> = b.into_iter().map(|x| x as f64 / 1000.0).collect();
            let ab = auc_values(&a, &b).unwrap();
            prop_assert_eq!(ab + auc_values(&b, &a).unwrap(), 1.0);
            let fa: Vec<f64> = a.iter().map(|x| x.exp() * 3.0 - 1.0).collect();
            let fb: Vec<f64> = b.iter().map(|x| x.exp() * 3.0 - 1.0).collect();
            prop_assert_eq!(auc_values(&fa, &fb).unwrap(), ab);
        }
    }
}
