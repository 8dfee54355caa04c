//! Dense vector kernel: inner products, norms, cosine similarity and exact
//! similarity scans of queries against an [`EmbeddingTable`].
//!
//! All inner products accumulate in `f64`. The nearest-neighbour scan ranks
//! rows with a storage-precision matrix product first and then rescores every
//! row within [`RESCORE_MARGIN`] of the leader in `f64`, so its winner is the
//! one a row-by-row [`cosine_mixed`] loop would pick.

use rayon::prelude::*;

use crate::embed_io::EmbeddingTable;
use crate::error::{Error, Result};
use crate::scalar::{prefetch, Scalar};

/// Rows whose storage-precision score is this close to the best are rescored
/// exactly. Storage-precision error on a unit-scaled 1000-dim dot product
/// stays below 1e-4.
pub const RESCORE_MARGIN: f64 = 1e-3;

const ROW_CHUNK: usize = 2048;
const QUERY_BLOCK: usize = 128;
/// How far ahead the streaming scan prefetches.
const PREFETCH_ROWS: usize = 8;

fn check_dims(left: usize, right: usize) -> Result<()> {
    if left != right {
        return Err(Error::DimensionMismatch { left, right });
    }
    Ok(())
}

pub fn dot<T: Scalar>(x: &[T], y: &[T]) -> Result<f64> {
    check_dims(x.len(), y.len())?;
    Ok(T::dot_wide(x, y))
}

pub fn norm<T: Scalar>(x: &[T]) -> f64 {
    T::dot_wide(x, x).sqrt()
}

fn clamp_unit(v: f64) -> f64 {
    v.clamp(-1.0, 1.0)
}

/// Cosine of the angle between `x` and `y`, clamped to `[-1, 1]`.
pub fn cosine<T: Scalar>(x: &[T], y: &[T]) -> Result<f64> {
    let d = dot(x, y)?;
    let (nx, ny) = (norm(x), norm(y));
    if nx == 0.0 || ny == 0.0 {
        return Err(Error::degenerate("cosine of a zero vector"));
    }
    Ok(clamp_unit(d / (nx * ny)))
}

/// Cosine between a storage row and an `f64` vector.
pub fn cosine_mixed<T: Scalar>(row: &[T], query: &[f64]) -> Result<f64> {
    check_dims(row.len(), query.len())?;
    let (nr, nq) = (norm(row), norm(query));
    if nr == 0.0 || nq == 0.0 {
        return Err(Error::degenerate("cosine of a zero vector"));
    }
    Ok(clamp_unit(T::dot_mixed(row, query) / (nr * nq)))
}

/// `x / ‖x‖`.
pub fn unit<T: Scalar>(x: &[T]) -> Result<Vec<T>> {
    let n = norm(x);
    if n == 0.0 {
        return Err(Error::degenerate("cannot normalize a zero vector"));
    }
    Ok(x.iter()
        .map(|v| T::from_f64_lossy(v.to_f64().unwrap() / n))
        .collect())
}

/// `f64` difference `end − start`, normalized.
pub fn unit_difference<T: Scalar>(end: &[T], start: &[T]) -> Result<Vec<f64>> {
    check_dims(end.len(), start.len())?;
    let diff: Vec<f64> = end
        .iter()
        .zip(start)
        .map(|(e, s)| e.to_f64().unwrap() - s.to_f64().unwrap())
        .collect();
    unit(&diff)
}

/// Cosine of `query` against every row, in row order.
pub fn batch_cosine<T: Scalar>(query: &[T], table: &EmbeddingTable<T>) -> Result<Vec<f64>> {
    check_dims(query.len(), table.dim())?;
    let qn = norm(query);
    if qn == 0.0 {
        return Err(Error::degenerate("zero query"));
    }
    let dim = table.dim();
    let wide: Vec<f64> = query.iter().map(|v| v.to_f64().unwrap()).collect();
    let mut out = vec![0.0; table.len()];
    out.par_chunks_mut(ROW_CHUNK)
        .zip(table.data().par_chunks(ROW_CHUNK * dim))
        .zip(table.norms().par_chunks(ROW_CHUNK))
        .enumerate()
        .try_for_each(|(chunk, ((out, rows), norms))| {
            for (i, ((o, row), rn)) in out
                .iter_mut()
                .zip(rows.chunks_exact(dim))
                .zip(norms)
                .enumerate()
            {
                if let Some(ahead) =
                    rows.get((i + PREFETCH_ROWS) * dim..(i + PREFETCH_ROWS + 1) * dim)
                {
                    prefetch(ahead);
                }
                if *rn == 0.0 {
                    return Err(Error::degenerate(format!(
                        "zero row {}",
                        chunk * ROW_CHUNK + i
                    )));
                }
                *o = clamp_unit(T::dot_mixed(row, &wide) / (qn * rn));
            }
            Ok(())
        })?;
    Ok(out)
}

/// Best exact-cosine row for one query.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Nearest {
    pub row: usize,
    pub cosine: f64,
}

#[derive(Clone)]
struct Leader {
    best: f64,
    candidates: Vec<(usize, f64)>,
}

impl Leader {
    fn new() -> Self {
        Leader {
            best: f64::NEG_INFINITY,
            candidates: Vec::new(),
        }
    }

    #[inline]
    fn offer(&mut self, row: usize, score: f64) {
        if score < self.best - RESCORE_MARGIN {
            return;
        }
        if score > self.best {
            self.best = score;
            if self.candidates.len() >= 64 {
                self.prune();
            }
        }
        self.candidates.push((row, score));
    }

    fn prune(&mut self) {
        let floor = self.best - RESCORE_MARGIN;
        self.candidates.retain(|&(_, s)| s >= floor);
    }

    fn merge(mut self, other: Leader) -> Leader {
        self.best = self.best.max(other.best);
        self.candidates.extend(other.candidates);
        self.prune();
        self
    }
}

/// Exact nearest row by cosine for each query, skipping zero-norm rows and
/// each query's excluded rows. Ties go to the lowest row index. `None` when
/// every row is excluded.
///
/// Queries must be nonzero and of the table's dimension.
pub fn nearest_rows<T: Scalar>(
    table: &EmbeddingTable<T>,
    queries: &[Vec<f64>],
    exclude: &[Vec<usize>],
) -> Result<Vec<Option<Nearest>>> {
    assert_eq!(queries.len(), exclude.len());
    let dim = table.dim();
    let mut unit_queries = Vec::with_capacity(queries.len());
    for q in queries {
        check_dims(q.len(), dim)?;
        let n = norm(q);
        if n == 0.0 {
            return Err(Error::DegenerateQuery);
        }
        unit_queries.push(q.iter().map(|v| v / n).collect::<Vec<f64>>());
    }

    let inv_norms: Vec<f64> = table
        .norms()
        .iter()
        .map(|&n| if n > 0.0 { 1.0 / n } else { 0.0 })
        .collect();

    let mut out = Vec::with_capacity(queries.len());
    for (block, block_excl) in unit_queries
        .chunks(QUERY_BLOCK)
        .zip(exclude.chunks(QUERY_BLOCK))
    {
        let b = block.len();
        let packed: Vec<T> = block
            .iter()
            .flat_map(|q| q.iter().map(|v| T::from_f64_lossy(*v)))
            .collect();

        let leaders = table
            .data()
            .par_chunks(ROW_CHUNK * dim)
            .enumerate()
            .map(|(chunk, rows)| {
                let r = rows.len() / dim;
                let base = chunk * ROW_CHUNK;
                let mut scores = vec![T::zero(); b * r];
                T::gemm_nt(b, r, dim, &packed, rows, &mut scores);
                let mut leaders = vec![Leader::new(); b];
                for (qi, leader) in leaders.iter_mut().enumerate() {
                    let excl = &block_excl[qi];
                    let row_scores = &scores[qi * r..(qi + 1) * r];
                    for (j, s) in row_scores.iter().enumerate() {
                        let row = base + j;
                        let inv = inv_norms[row];
                        if inv == 0.0 || excl.contains(&row) {
                            continue;
                        }
                        leader.offer(row, s.to_f64().unwrap() * inv);
                    }
                }
                leaders
            })
            .reduce(
                || vec![Leader::new(); b],
                |a, c| a.into_iter().zip(c).map(|(x, y)| x.merge(y)).collect(),
            );

        for (q, leader) in block.iter().zip(leaders) {
            let mut best: Option<Nearest> = None;
            let mut cands = leader.candidates;
            cands.sort_unstable_by_key(|&(row, _)| row);
            for (row, _) in cands {
                let exact = clamp_unit(T::dot_mixed(table.row(row), q) / table.norms()[row]);
                if best.is_none_or(|n| exact > n.cosine) {
                    best = Some(Nearest { row, cosine: exact });
                }
            }
            out.push(best);
        }
    }
    Ok(out)
}
