//! The 3CosAdd analogy test and algebraic decompositions of its score.
//!
//! For a quad `a : a* :: b : b*` with offsets `o_a = a* − a` and
//! `o_b = b* − b`, and `Z = ‖b + o_a‖·‖b*‖`:
//!
//! ```text
//! cos(b + o_a, b*) = (b·b* + o_a·o_b + o_a·b) / Z
//! Δsim = cos(b + o_a, b*) − cos(b + o_a, b)
//!      = ((‖b‖−‖b*‖)/‖b‖ · (b + o_a)·b + o_a·o_b + b·o_b) / Z
//! ```

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bats::{enumerate_quads, AnalogyQuad, ResolvedRelation};
use crate::embed_io::EmbeddingTable;
use crate::error::{Error, Result};
use crate::linalg::{nearest_rows, Nearest};
use crate::scalar::Scalar;

/// Which input words are removed from the argmax.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TestMode {
    /// Excludes `a`, `a*` and `b`.
    Normal,
    /// Excludes nothing.
    Honest,
}

fn to_f64<T: Scalar>(v: &[T]) -> Vec<f64> {
    v.iter().map(|x| x.to_f64().unwrap()).collect()
}

fn dot(x: &[f64], y: &[f64]) -> f64 {
    f64::dot_wide(x, y)
}

fn norm(x: &[f64]) -> f64 {
    dot(x, x).sqrt()
}

fn add(x: &[f64], y: &[f64]) -> Vec<f64> {
    x.iter().zip(y).map(|(a, b)| a + b).collect()
}

fn sub(x: &[f64], y: &[f64]) -> Vec<f64> {
    x.iter().zip(y).map(|(a, b)| a - b).collect()
}

/// `b + a* − a` in `f64`.
pub fn analogy_query<T: Scalar>(a: &[T], a_star: &[T], b: &[T]) -> Vec<f64> {
    a.iter()
        .zip(a_star)
        .zip(b)
        .map(|((a, s), b)| b.to_f64().unwrap() + (s.to_f64().unwrap() - a.to_f64().unwrap()))
        .collect()
}

fn exclusions<T>(quad: &AnalogyQuad<'_, T>, mode: TestMode) -> Vec<usize> {
    match mode {
        TestMode::Normal => vec![
            quad.first.start_row,
            quad.first.end_row,
            quad.second.start_row,
        ],
        TestMode::Honest => Vec::new(),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub row: usize,
    pub word: String,
    pub cosine: f64,
}

/// Nearest vocabulary word to `b + a* − a` under `mode`'s exclusions.
pub fn predict<T: Scalar>(
    table: &EmbeddingTable<T>,
    quad: &AnalogyQuad<'_, T>,
    mode: TestMode,
) -> Result<Prediction> {
    let query = analogy_query(quad.a(), quad.a_star(), quad.b());
    let nearest = nearest_rows(table, &[query], &[exclusions(quad, mode)])?
        .pop()
        .flatten()
        .ok_or(Error::NoCandidate)?;
    Ok(Prediction {
        row: nearest.row,
        word: table.word(nearest.row).to_string(),
        cosine: nearest.cosine,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Accuracy {
    pub correct: usize,
    pub total: usize,
    /// Quads whose query vector had zero norm; counted as wrong.
    pub degenerate: usize,
}

impl Accuracy {
    pub fn fraction(&self) -> f64 {
        if self.total == 0 {
            0.0
        } else {
            self.correct as f64 / self.total as f64
        }
    }
}

/// Fraction of all ordered quads whose prediction is `b*`.
pub fn accuracy<T: Scalar>(
    table: &EmbeddingTable<T>,
    resolved: &ResolvedRelation<T>,
    mode: TestMode,
) -> Result<Accuracy> {
    if resolved.len() < 2 {
        return Err(Error::Ineligible {
            name: resolved.name.clone(),
            pairs: resolved.len(),
            required: 2,
        });
    }
    let quads = enumerate_quads(resolved);
    let mut degenerate = 0;
    let mut queries = Vec::with_capacity(quads.len());
    let mut excl = Vec::with_capacity(quads.len());
    let mut targets = Vec::with_capacity(quads.len());
    for q in &quads {
        let query = analogy_query(q.a(), q.a_star(), q.b());
        if query.iter().all(|v| *v == 0.0) {
            degenerate += 1;
            continue;
        }
        queries.push(query);
        excl.push(exclusions(q, mode));
        targets.push(q.second.end_row);
    }
    let nearest = nearest_rows(table, &queries, &excl)?;
    let correct = nearest
        .iter()
        .zip(&targets)
        .filter(|(n, t)| matches!(n, Some(Nearest { row, .. }) if row == *t))
        .count();
    Ok(Accuracy {
        correct,
        total: quads.len(),
        degenerate,
    })
}

/// Three-term breakdown of `cos(b + o_a, b*)`; every term is divided by `z`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoreDecomposition {
    /// `b·b* / Z`
    pub within_pair: f64,
    /// `o_a·o_b / Z`
    pub offset_offset: f64,
    /// `o_a·b / Z`
    pub offset_start: f64,
    /// `‖b + o_a‖·‖b*‖`
    pub z: f64,
    /// `cos(b + o_a, b*)`, evaluated directly.
    pub total: f64,
}

impl ScoreDecomposition {
    pub fn term_sum(&self) -> f64 {
        self.within_pair + self.offset_offset + self.offset_start
    }
}

/// Three-term breakdown of Δsim; every term is divided by `z`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeltaDecomposition {
    /// `(‖b‖−‖b*‖)/‖b‖ · (b + o_a)·b / Z`
    pub norm_term: f64,
    /// `o_a·o_b / Z`
    pub offset_offset: f64,
    /// `b·o_b / Z`
    pub start_offset: f64,
    pub z: f64,
    /// `cos(b + o_a, b*) − cos(b + o_a, b)`, evaluated directly.
    pub delta_sim: f64,
}

impl DeltaDecomposition {
    pub fn term_sum(&self) -> f64 {
        self.norm_term + self.offset_offset + self.start_offset
    }
}

fn score_terms(a: &[f64], a_star: &[f64], b: &[f64], b_star: &[f64]) -> Result<ScoreDecomposition> {
    let n = a.len();
    if a_star.len() != n || b.len() != n || b_star.len() != n {
        return Err(Error::DimensionMismatch {
            left: n,
            right: [a_star.len(), b.len(), b_star.len()]
                .into_iter()
                .find(|&l| l != n)
                .unwrap(),
        });
    }
    let o_a = sub(a_star, a);
    let o_b = sub(b_star, b);
    let moved = add(b, &o_a);
    let (nm, nbs) = (norm(&moved), norm(b_star));
    if nm == 0.0 || nbs == 0.0 {
        return Err(Error::degenerate("‖b + o_a‖ or ‖b*‖ is zero"));
    }
    let z = nm * nbs;
    Ok(ScoreDecomposition {
        within_pair: dot(b, b_star) / z,
        offset_offset: dot(&o_a, &o_b) / z,
        offset_start: dot(&o_a, b) / z,
        z,
        total: dot(&moved, b_star) / z,
    })
}

/// Decomposes the analogy score of `a : a* :: b : b*`.
pub fn decompose_score<T: Scalar>(
    a: &[T],
    a_star: &[T],
    b: &[T],
    b_star: &[T],
) -> Result<ScoreDecomposition> {
    score_terms(&to_f64(a), &to_f64(a_star), &to_f64(b), &to_f64(b_star))
}

pub fn decompose_quad<T: Scalar>(quad: &AnalogyQuad<'_, T>) -> Result<ScoreDecomposition> {
    decompose_score(quad.a(), quad.a_star(), quad.b(), quad.b_star())
}

/// Decomposes Δsim for `a : a* :: b : b*`.
pub fn decompose_delta<T: Scalar>(
    a: &[T],
    a_star: &[T],
    b: &[T],
    b_star: &[T],
) -> Result<DeltaDecomposition> {
    let (a, a_star, b, b_star) = (to_f64(a), to_f64(a_star), to_f64(b), to_f64(b_star));
    let score = score_terms(&a, &a_star, &b, &b_star)?;
    let nb = norm(&b);
    if nb == 0.0 {
        return Err(Error::degenerate("‖b‖ is zero"));
    }
    let o_a = sub(&a_star, &a);
    let o_b = sub(&b_star, &b);
    let moved = add(&b, &o_a);
    let nbs = norm(&b_star);
    let z = score.z;
    let to_start = dot(&moved, &b) / (norm(&moved) * nb);
    Ok(DeltaDecomposition {
        norm_term: (nb - nbs) / nb * dot(&moved, &b) / z,
        offset_offset: dot(&o_a, &o_b) / z,
        start_offset: dot(&b, &o_b) / z,
        z,
        delta_sim: score.total - to_start,
    })
}

pub fn decompose_delta_quad<T: Scalar>(quad: &AnalogyQuad<'_, T>) -> Result<DeltaDecomposition> {
    decompose_delta(quad.a(), quad.a_star(), quad.b(), quad.b_star())
}

/// Score decomposition with `b* := b + o_a`, whose total is 1.
pub fn decompose_self<T: Scalar>(a: &[T], a_star: &[T], b: &[T]) -> Result<ScoreDecomposition> {
    let (a, a_star, b) = (to_f64(a), to_f64(a_star), to_f64(b));
    let b_star = add(&b, &sub(&a_star, &a));
    score_terms(&a, &a_star, &b, &b_star)
}

/// Mean of each decomposition term over every quad of a relation.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct MeanDecomposition {
    pub quads: usize,
    pub score_within_pair: f64,
    pub score_offset_offset: f64,
    pub score_offset_start: f64,
    pub delta_norm_term: f64,
    pub delta_offset_offset: f64,
    pub delta_start_offset: f64,
    pub delta_sim: f64,
    pub self_within_pair: f64,
    pub self_offset_offset: f64,
    pub self_offset_start: f64,
}

/// Averages the score, Δsim and self decompositions over all ordered quads.
pub fn mean_decomposition<T: Scalar>(resolved: &ResolvedRelation<T>) -> Result<MeanDecomposition> {
    let quads = enumerate_quads(resolved);
    if quads.is_empty() {
        return Err(Error::Ineligible {
            name: resolved.name.clone(),
            pairs: resolved.len(),
            required: 2,
        });
    }
    let rows: Vec<[f64; 10]> = quads
        .par_iter()
        .map(|q| {
            let s = decompose_quad(q)?;
            let d = decompose_delta_quad(q)?;
            let f = decompose_self(q.a(), q.a_star(), q.b())?;
            Ok([
                s.within_pair,
                s.offset_offset,
                s.offset_start,
                d.norm_term,
                d.offset_offset,
                d.start_offset,
                d.delta_sim,
                f.within_pair,
                f.offset_offset,
                f.offset_start,
            ])
        })
        .collect::<Result<_>>()?;
    let mut sums = [0.0; 10];
    for r in &rows {
        for (s, v) in sums.iter_mut().zip(r) {
            *s += v;
        }
    }
    let n = rows.len() as f64;
    let m = sums.map(|s| s / n);
    Ok(MeanDecomposition {
        quads: rows.len(),
        score_within_pair: m[0],
        score_offset_offset: m[1],
        score_offset_start: m[2],
        delta_norm_term: m[3],
        delta_offset_offset: m[4],
        delta_start_offset: m[5],
        delta_sim: m[6],
        self_within_pair: m[7],
        self_offset_offset: m[8],
        self_offset_start: m[9],
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bats::ResolvedPair;
    use crate::linalg::cosine_mixed;
    use approx::assert_abs_diff_eq;

    fn five_word_table() -> EmbeddingTable<f64> {
        let words = ["a", "a*", "b", "b*", "w"];
        let data = vec![1.0, 0.0, 1.0, 1.0, 0.9, 0.1, 0.9, 1.1, -1.0, 0.0];
        EmbeddingTable::from_rows(words.iter().map(|w| w.to_string()).collect(), data, 2).unwrap()
    }

    /// Row-by-row cosine scan with explicit exclusions.
    fn scan(table: &EmbeddingTable<f64>, query: &[f64], excluded: &[usize]) -> usize {
        let mut best = (usize::MAX, f64::NEG_INFINITY);
        for i in 0..table.len() {
            if excluded.contains(&i) {
                continue;
            }
            let c = cosine_mixed(table.row(i), query).unwrap();
            if c > best.1 {
                best = (i, c);
            }
        }
        best.0
    }

    #[test]
    fn predict_normal_and_honest_against_hand_scan() {
        let t = five_word_table();
        let first = ResolvedPair::from_rows(&t, 0, 1);
        let second = ResolvedPair::from_rows(&t, 2, 3);
        let quad = AnalogyQuad {
            first: &first,
            second: &second,
        };
        // query = b + a* − a = [0.9, 1.1], identical to b*.
        let query = analogy_query(quad.a(), quad.a_star(), quad.b());
        assert_eq!(query, vec![0.9, 1.1]);

        let normal = predict(&t, &quad, TestMode::Normal).unwrap();
        assert_eq!(normal.word, "b*");
        assert_eq!(normal.row, scan(&t, &query, &[0, 1, 2]));

        let honest = predict(&t, &quad, TestMode::Honest).unwrap();
        assert_eq!(honest.row, scan(&t, &query, &[]));
        assert_eq!(honest.word, "b*");
    }

    #[test]
    fn zero_offset_predicts_nearest_neighbour_of_b() {
        let words = ["a", "b", "b*", "far"];
        let data = vec![1.0, 0.0, 0.0, 1.0, 0.1, 1.0, -1.0, -1.0];
        let t = EmbeddingTable::from_rows(words.iter().map(|w| w.to_string()).collect(), data, 2)
            .unwrap();
        let first = ResolvedPair::from_rows(&t, 0, 0);
        let second = ResolvedPair::from_rows(&t, 1, 2);
        let quad = AnalogyQuad {
            first: &first,
            second: &second,
        };
        assert_eq!(predict(&t, &quad, TestMode::Normal).unwrap().word, "b*");
    }

    #[test]
    fn perfect_offsets_are_fully_accurate() {
        let words: Vec<String> = (0..8).map(|i| format!("w{i}")).collect();
        let starts = [
            [1.0, 0.0, 0.0],
            [0.0, 1.0, 0.0],
            [0.0, 0.0, 1.0],
            [-1.0, 0.0, 0.0],
        ];
        let v = [0.3, 0.3, 0.3];
        let mut data = Vec::new();
        for s in starts {
            data.extend_from_slice(&s);
            data.extend(s.iter().zip(&v).map(|(a, b)| a + b));
        }
        let t = EmbeddingTable::from_rows(words, data, 3).unwrap();
        let r = ResolvedRelation::from_row_pairs("r", None, &t, (0..4).map(|i| (2 * i, 2 * i + 1)));
        let acc = accuracy(&t, &r, TestMode::Normal).unwrap();
        assert_eq!(acc.total, 12);
        assert_eq!(acc.fraction(), 1.0);
    }

    #[test]
    fn wrong_on_both_quads_is_zero() {
        // Starts point the opposite way from ends, and a decoy sits on each query.
        let words = ["a", "a*", "b", "b*", "d1", "d2"];
        let data = vec![
            1.0, 0.0, 0.0, 1.0, -1.0, 0.0, 0.0, -1.0, -1.0, 1.0, 1.0, -1.0,
        ];
        let t = EmbeddingTable::from_rows(words.iter().map(|w| w.to_string()).collect(), data, 2)
            .unwrap();
        let r = ResolvedRelation::from_row_pairs("r", None, &t, [(0, 1), (2, 3)]);
        let acc = accuracy(&t, &r, TestMode::Normal).unwrap();
        assert_eq!(acc.total, 2);
        assert_eq!(acc.fraction(), 0.0);
    }

    #[test]
    fn accuracy_needs_two_pairs() {
        let t = five_word_table();
        let r = ResolvedRelation::from_row_pairs("r", None, &t, [(0, 1)]);
        assert!(matches!(
            accuracy(&t, &r, TestMode::Normal),
            Err(Error::Ineligible { .. })
        ));
    }

    #[test]
    fn zero_offset_collapses_score_decomposition() {
        let d = decompose_score(&[1.0, 2.0], &[1.0, 2.0], &[0.5, 1.0], &[2.0, -1.0]).unwrap();
        assert_eq!(d.offset_offset, 0.0);
        assert_eq!(d.offset_start, 0.0);
        let direct = cosine_mixed(&[0.5f64, 1.0], &[2.0, -1.0]).unwrap();
        assert_abs_diff_eq!(d.total, direct, epsilon = 1e-12);
        assert_abs_diff_eq!(d.term_sum(), direct, epsilon = 1e-12);
    }

    #[test]
    fn orthonormal_case_matches_direct_cosine() {
        // b = e1, b* = e2, o_a = o_b = e2 − e1, so b + o_a = e2 and Z = 1.
        let d = decompose_score(&[0.0, 0.0], &[-1.0, 1.0], &[1.0, 0.0], &[0.0, 1.0]).unwrap();
        assert_abs_diff_eq!(d.z, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(d.within_pair, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(d.offset_offset, 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(d.offset_start, -1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(d.total, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn equal_norms_null_the_norm_term() {
        let d = decompose_delta(&[0.2, 0.1], &[0.9, -0.3], &[3.0, 4.0], &[0.0, 5.0]).unwrap();
        assert_abs_diff_eq!(d.norm_term, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(d.term_sum(), d.delta_sim, epsilon = 1e-12);
    }

    #[test]
    fn identical_targets_have_zero_delta() {
        let d = decompose_delta(&[0.2, 0.1], &[0.9, -0.3], &[1.0, 2.0], &[1.0, 2.0]).unwrap();
        assert_abs_diff_eq!(d.delta_sim, 0.0, epsilon = 1e-15);
    }

    #[test]
    fn self_decomposition() {
        let d = decompose_self(&[0.3, -1.0, 2.0], &[1.0, 0.5, 0.0], &[2.0, 2.0, 1.0]).unwrap();
        assert_abs_diff_eq!(d.total, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(d.term_sum(), 1.0, epsilon = 1e-12);

        let d = decompose_self(&[1.0, 1.0], &[1.0, 1.0], &[0.0, 3.0]).unwrap();
        assert_abs_diff_eq!(d.within_pair, 1.0, epsilon = 1e-12);
        assert_eq!(d.offset_offset, 0.0);
        assert_eq!(d.offset_start, 0.0);
    }

    #[test]
    fn degenerate_norms_are_errors() {
        assert!(decompose_score(&[1.0, 0.0], &[0.0, 0.0], &[1.0, 0.0], &[1.0, 1.0]).is_err());
        assert!(decompose_score(&[0.0, 0.0], &[0.0, 0.0], &[1.0, 0.0], &[0.0, 0.0]).is_err());
        assert!(decompose_delta(&[0.0, 0.0], &[1.0, 0.0], &[0.0, 0.0], &[1.0, 1.0]).is_err());
    }
}
