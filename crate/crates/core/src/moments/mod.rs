//! Exact expectations of monomials of Haar-orthogonal matrix entries.
//!
//! A power matrix `M` indexes the monomial `prod q_{ij}^{m_ij}` over the
//! first `R` columns of `Q ~ O(p)`; its expectation `<M>` is computed by a
//! recursion that peels off the last column, with parity and symmetry fast
//! paths and memoization on a canonical key. The shipped golden tables
//! (`data/golden_tables.txt`) pin the engine to independently derived
//! closed forms, and Monte Carlo estimators cross-validate both.

mod bilinear;
mod tables;

pub use bilinear::{mc_bilinear_expectation, BilinearExpr, BilinearFactor, BlockOp, VecSym};
pub use tables::{golden_identities, GoldenIdentity};

use std::collections::HashMap;

use num::bigint::BigInt;
use num::{One, Zero};
use rayon::prelude::*;

use crate::continual::McEstimate;
use crate::rational::{binomial, multinomial, poch_half, Rational};
use crate::rng::trial_rng;
use crate::rotation::sample_haar;
use crate::{Error, Result};

/// Total-degree cap beyond which the recursion's enumeration is refused.
pub const DEFAULT_DEGREE_BUDGET: u32 = 16;

/// Nonnegative integer exponent matrix indexing a monomial of orthogonal
/// matrix entries. Rows beyond the stored ones are implicitly zero.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PowerMatrix {
    rows: Vec<Vec<u32>>,
}

impl PowerMatrix {
    /// Build from explicit rows; all rows must share one positive width.
    pub fn new(rows: Vec<Vec<u32>>) -> Result<Self> {
        if rows.is_empty() || rows[0].is_empty() {
            return Err(Error::InvalidArgument(
                "power matrix needs at least one row and one column".into(),
            ));
        }
        let width = rows[0].len();
        if rows.iter().any(|r| r.len() != width) {
            return Err(Error::InvalidArgument(
                "power matrix rows must all have the same length".into(),
            ));
        }
        Ok(PowerMatrix { rows })
    }

    /// Parse `"1,0;4,6"` (rows split by `;`, entries by `,`). Errors carry
    /// the byte offset of the offending token.
    pub fn parse(src: &str) -> Result<Self> {
        let mut rows: Vec<Vec<u32>> = Vec::new();
        let mut offset = 0usize;
        for row_src in src.split(';') {
            let mut row = Vec::new();
            let mut cell_offset = offset;
            for cell in row_src.split(',') {
                let trimmed = cell.trim();
                if trimmed.is_empty() {
                    return Err(Error::parse(cell_offset, "empty entry"));
                }
                let value: u32 = trimmed.parse().map_err(|_| {
                    Error::parse(
                        cell_offset + (cell.len() - cell.trim_start().len()),
                        format!("'{trimmed}' is not a nonnegative integer"),
                    )
                })?;
                row.push(value);
                cell_offset += cell.len() + 1;
            }
            if !rows.is_empty() && row.len() != rows[0].len() {
                return Err(Error::parse(offset, "rows have differing lengths"));
            }
            rows.push(row);
            offset += row_src.len() + 1;
        }
        PowerMatrix::new(rows)
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn n_cols(&self) -> usize {
        self.rows[0].len()
    }

    pub fn rows(&self) -> &[Vec<u32>] {
        &self.rows
    }

    pub fn entry(&self, i: usize, j: usize) -> u32 {
        self.rows[i][j]
    }

    pub fn total_degree(&self) -> u32 {
        self.rows.iter().flatten().sum()
    }

    pub fn transpose(&self) -> PowerMatrix {
        let rows = (0..self.n_cols())
            .map(|j| self.rows.iter().map(|r| r[j]).collect())
            .collect();
        PowerMatrix { rows }
    }

    fn row_sums(&self) -> Vec<u32> {
        self.rows.iter().map(|r| r.iter().sum()).collect()
    }

    fn col_sums(&self) -> Vec<u32> {
        (0..self.n_cols())
            .map(|j| self.rows.iter().map(|r| r[j]).sum())
            .collect()
    }

    /// Drop all-zero rows and columns (empty monomial collapses to `1x1`
    /// zero).
    fn stripped(&self) -> PowerMatrix {
        let keep_cols: Vec<usize> = (0..self.n_cols())
            .filter(|&j| self.rows.iter().any(|r| r[j] != 0))
            .collect();
        let rows: Vec<Vec<u32>> = self
            .rows
            .iter()
            .filter(|r| r.iter().any(|&v| v != 0))
            .map(|r| keep_cols.iter().map(|&j| r[j]).collect())
            .collect();
        if rows.is_empty() {
            return PowerMatrix {
                rows: vec![vec![0]],
            };
        }
        PowerMatrix { rows }
    }
}

/// True iff some row or column sum is odd, in which case `<M> = 0`.
pub fn is_odd_vanishing(m: &PowerMatrix) -> bool {
    m.row_sums().iter().any(|s| s % 2 == 1) || m.col_sums().iter().any(|s| s % 2 == 1)
}

/// Exact canonical representative of `M` under row permutations, column
/// permutations and transposition: zero rows/columns stripped, the taller
/// orientation preferred, and the row-major-lexicographically largest
/// arrangement chosen. `<canonicalize(M)> = <M>`.
///
/// Above `MAX_EXACT_COLS` columns the column search would explode; a
/// sort-based heuristic key is used instead (still a valid memo key, just
/// with fewer collisions detected).
pub fn canonicalize(m: &PowerMatrix) -> PowerMatrix {
    const MAX_EXACT_COLS: usize = 6;
    let s = m.stripped();
    let (r, c) = (s.n_rows(), s.n_cols());
    let candidates: Vec<PowerMatrix> = if r > c {
        vec![s]
    } else if c > r {
        vec![s.transpose()]
    } else {
        vec![s.transpose(), s]
    };
    candidates
        .into_iter()
        .map(|cand| {
            if cand.n_cols() <= MAX_EXACT_COLS {
                best_over_column_perms(&cand)
            } else {
                heuristic_sort(&cand)
            }
        })
        .max()
        .expect("at least one candidate")
}

fn best_over_column_perms(m: &PowerMatrix) -> PowerMatrix {
    let c = m.n_cols();
    let mut perm: Vec<usize> = (0..c).collect();
    let mut best: Option<PowerMatrix> = None;
    permute(&mut perm, 0, &mut |perm| {
        let mut rows: Vec<Vec<u32>> = m
            .rows
            .iter()
            .map(|r| perm.iter().map(|&j| r[j]).collect())
            .collect();
        rows.sort_by(|a, b| b.cmp(a));
        let cand = PowerMatrix { rows };
        if best.as_ref().is_none_or(|b| cand > *b) {
            best = Some(cand);
        }
    });
    best.expect("non-empty permutation set")
}

fn permute(items: &mut Vec<usize>, k: usize, visit: &mut impl FnMut(&[usize])) {
    if k == items.len() {
        visit(items);
        return;
    }
    for i in k..items.len() {
        items.swap(k, i);
        permute(items, k + 1, visit);
        items.swap(k, i);
    }
}

fn heuristic_sort(m: &PowerMatrix) -> PowerMatrix {
    let mut cur = m.clone();
    for _ in 0..8 {
        let mut rows = cur.rows.clone();
        rows.sort_by(|a, b| b.cmp(a));
        let mut t: Vec<Vec<u32>> = (0..rows[0].len())
            .map(|j| rows.iter().map(|r| r[j]).collect())
            .collect();
        t.sort_by(|a, b| b.cmp(a));
        let back: Vec<Vec<u32>> = (0..rows.len())
            .map(|i| t.iter().map(|col| col[i]).collect())
            .collect();
        let next = PowerMatrix { rows: back };
        if next == cur {
            break;
        }
        cur = next;
    }
    cur
}

/// `<m> = (p/2)^-1_{mbar/2} * prod_i (1/2)_{m_i/2}` for a single column of
/// powers; zero whenever some power is odd.
pub fn one_vector_integral(powers: &[u32], p: u64) -> Rational {
    if powers.iter().any(|&v| v % 2 == 1) {
        return Rational::zero();
    }
    let total: u32 = powers.iter().sum();
    let mut acc = poch_half(p as i64, total / 2).recip();
    for &v in powers {
        if v > 0 {
            acc *= poch_half(1, v / 2);
        }
    }
    acc
}

/// `E ||u_a||^{2n}` for the first `m` coordinates of a uniform unit vector
/// in dimension `p`: `prod_{r=0}^{n-1} (m + 2r)/(p + 2r)`.
pub fn squared_norm_moment(p: u64, m: u64, n: u32) -> Result<Rational> {
    if m < 1 || m > p {
        return Err(Error::InvalidArgument(format!(
            "need 1 <= m <= p, got m={m}, p={p}"
        )));
    }
    let mut acc = Rational::one();
    for r in 0..n as u64 {
        acc *= Rational::new(BigInt::from(m + 2 * r), BigInt::from(p + 2 * r));
    }
    Ok(acc)
}

/// Memoization key: canonical power matrix plus the group dimension.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct MomentKey {
    matrix: PowerMatrix,
    p: u64,
}

impl MomentKey {
    pub fn new(m: &PowerMatrix, p: u64) -> Self {
        MomentKey {
            matrix: canonicalize(m),
            p,
        }
    }

    /// The canonical representative (a fixed point of [`canonicalize`]).
    pub fn matrix(&self) -> &PowerMatrix {
        &self.matrix
    }

    pub fn p(&self) -> u64 {
        self.p
    }
}

/// Memoized evaluation context for [`monomial_expectation`].
///
/// The cache is keyed on [`MomentKey`]. It is a plain map: share nothing,
/// keep one cache per thread or evaluation context.
pub struct MomentCache {
    memo: HashMap<MomentKey, Rational>,
    budget: u32,
}

impl Default for MomentCache {
    fn default() -> Self {
        Self::new()
    }
}

impl MomentCache {
    pub fn new() -> Self {
        Self::with_budget(DEFAULT_DEGREE_BUDGET)
    }

    pub fn with_budget(budget: u32) -> Self {
        MomentCache {
            memo: HashMap::new(),
            budget,
        }
    }

    pub fn len(&self) -> usize {
        self.memo.len()
    }

    pub fn is_empty(&self) -> bool {
        self.memo.is_empty()
    }

    /// Exact `<M>` over `O(p)`.
    pub fn expectation(&mut self, m: &PowerMatrix, p: u64) -> Result<Rational> {
        let degree = m.total_degree();
        if degree > self.budget {
            return Err(Error::BudgetExceeded {
                degree,
                budget: self.budget,
            });
        }
        let stripped = m.stripped();
        if stripped.total_degree() == 0 {
            return Ok(Rational::one());
        }
        if p < stripped.n_rows() as u64 || p < stripped.n_cols() as u64 {
            return Err(Error::InvalidDimension(format!(
                "power matrix spans {} rows x {} cols of a {p}-dimensional orthogonal matrix",
                stripped.n_rows(),
                stripped.n_cols()
            )));
        }
        Ok(self.eval(&stripped, p))
    }

    /// `m` must be stripped of zero rows/columns and nonempty.
    fn eval(&mut self, m: &PowerMatrix, p: u64) -> Rational {
        if is_odd_vanishing(m) {
            return Rational::zero();
        }
        let key = MomentKey::new(m, p);
        if let Some(hit) = self.memo.get(&key) {
            return hit.clone();
        }
        let value = self.eval_uncached(&key.matrix.clone(), p);
        self.memo.insert(key, value.clone());
        value
    }

    fn eval_uncached(&mut self, m: &PowerMatrix, p: u64) -> Rational {
        let r_cols = m.n_cols();
        if r_cols == 1 {
            let powers: Vec<u32> = m.rows.iter().map(|r| r[0]).collect();
            return one_vector_integral(&powers, p);
        }

        let last: Vec<u32> = m.rows.iter().map(|r| r[r_cols - 1]).collect();
        let mbar: u32 = last.iter().sum();
        let prefix: Vec<Vec<u32>> = m.rows.iter().map(|r| r[..r_cols - 1].to_vec()).collect();

        let mut total = Rational::zero();
        // kappa: even vectors below the last column, entrywise
        let mut kappa = vec![0u32; last.len()];
        loop {
            let kbar: u32 = kappa.iter().sum();
            let mut coeff = Rational::from_integer(BigInt::one());
            for (&mi, &ki) in last.iter().zip(&kappa) {
                coeff *= Rational::from_integer(binomial(mi, ki)) * poch_half(1, ki / 2);
            }
            if (mbar - kbar) / 2 % 2 == 1 {
                coeff = -coeff;
            }
            let resid: Vec<u32> = last.iter().zip(&kappa).map(|(&mi, &ki)| mi - ki).collect();
            let inner = self.k_sum(&prefix, &resid, p);
            total += coeff * inner;

            if !next_even_vector(&mut kappa, &last) {
                break;
            }
        }
        total * poch_half(p as i64 - r_cols as i64 + 1, mbar / 2).recip()
    }

    /// Sum over residual-spread matrices `K` (row `i` sums to `resid[i]`,
    /// all column sums even) of
    /// `(resid | K) * prod_j (1/2)_{colsum_j/2} * <prefix + K>`.
    fn k_sum(&mut self, prefix: &[Vec<u32>], resid: &[u32], p: u64) -> Rational {
        let cols = prefix[0].len();
        let mut rows_k: Vec<Vec<u32>> = vec![Vec::new(); resid.len()];
        let mut col_parity = vec![0u32; cols];
        let mut total = Rational::zero();
        self.k_sum_rec(
            prefix,
            resid,
            p,
            0,
            &mut rows_k,
            &mut col_parity,
            Rational::one(),
            &mut total,
        );
        total
    }

    #[allow(clippy::too_many_arguments)]
    fn k_sum_rec(
        &mut self,
        prefix: &[Vec<u32>],
        resid: &[u32],
        p: u64,
        row: usize,
        rows_k: &mut Vec<Vec<u32>>,
        col_parity: &mut [u32],
        weight: Rational,
        total: &mut Rational,
    ) {
        let cols = prefix[0].len();
        if row == resid.len() {
            debug_assert!(col_parity.iter().all(|&c| c % 2 == 0));
            let mut col_sums = vec![0u32; cols];
            let rows: Vec<Vec<u32>> = prefix
                .iter()
                .zip(rows_k.iter())
                .map(|(pre, k)| {
                    pre.iter()
                        .zip(k)
                        .enumerate()
                        .map(|(j, (&a, &b))| {
                            col_sums[j] += b;
                            a + b
                        })
                        .collect()
                })
                .collect();
            let mut w = weight;
            for &c in &col_sums {
                if c > 0 {
                    w *= poch_half(1, c / 2);
                }
            }
            let sub = self.eval(&PowerMatrix { rows }.stripped(), p);
            *total += w * sub;
            return;
        }
        let last_row = row == resid.len() - 1;
        let mut comp = vec![0u32; cols];
        for_each_composition(resid[row], cols, &mut comp, 0, &mut |parts| {
            if last_row {
                // only loadings that leave every column sum even survive
                let ok = parts
                    .iter()
                    .zip(col_parity.iter())
                    .all(|(&k, &par)| (k + par) % 2 == 0);
                if !ok {
                    return;
                }
            }
            let w = weight.clone()
                * Rational::from_integer(multinomial(resid[row], parts));
            rows_k[row] = parts.to_vec();
            for (j, &k) in parts.iter().enumerate() {
                col_parity[j] += k;
            }
            self.k_sum_rec(prefix, resid, p, row + 1, rows_k, col_parity, w, total);
            for (j, &k) in parts.iter().enumerate() {
                col_parity[j] -= k;
            }
        });
    }
}

/// Advance `kappa` to the next vector with even entries bounded by `caps`;
/// false once exhausted.
fn next_even_vector(kappa: &mut [u32], caps: &[u32]) -> bool {
    for i in 0..kappa.len() {
        if kappa[i] + 2 <= caps[i] {
            kappa[i] += 2;
            return true;
        }
        kappa[i] = 0;
    }
    false
}

/// Visit every split of `n` into `k` nonnegative parts.
fn for_each_composition(n: u32, k: usize, buf: &mut Vec<u32>, idx: usize, visit: &mut impl FnMut(&[u32])) {
    if idx == k - 1 {
        buf[idx] = n;
        visit(buf);
        return;
    }
    for first in 0..=n {
        buf[idx] = first;
        for_each_composition(n - first, k, buf, idx + 1, visit);
    }
}

/// Exact `<M>` with a fresh evaluation cache.
pub fn monomial_expectation(m: &PowerMatrix, p: u64) -> Result<Rational> {
    MomentCache::new().expectation(m, p)
}

/// Monte Carlo estimate of `<M>`: averages the monomial over Haar samples
/// drawn from per-trial streams of `seed`.
pub fn mc_monomial_expectation(
    m: &PowerMatrix,
    p: u64,
    trials: u64,
    seed: u64,
) -> Result<McEstimate> {
    if p < m.n_rows() as u64 || p < m.n_cols() as u64 {
        return Err(Error::InvalidDimension(format!(
            "power matrix spans {} rows x {} cols of a {p}-dimensional orthogonal matrix",
            m.n_rows(),
            m.n_cols()
        )));
    }
    if trials < 2 {
        return Err(Error::InvalidArgument(
            "need at least 2 trials for a standard error".into(),
        ));
    }
    let entries: Vec<(usize, usize, i32)> = m
        .rows()
        .iter()
        .enumerate()
        .flat_map(|(i, row)| {
            row.iter()
                .enumerate()
                .filter(|(_, &v)| v > 0)
                .map(move |(j, &v)| (i, j, v as i32))
        })
        .collect();
    let values: Vec<f64> = (0..trials)
        .into_par_iter()
        .map(|t| -> Result<f64> {
            let mut rng = trial_rng(seed, t);
            let q = sample_haar(p as usize, &mut rng).map_err(|e| Error::in_trial(t, e))?;
            let qm = q.matrix();
            Ok(entries
                .iter()
                .map(|&(i, j, e)| qm[(i, j)].powi(e))
                .product())
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(McEstimate::from_values(&values, seed))
}

#[cfg(test)]
mod tests;
