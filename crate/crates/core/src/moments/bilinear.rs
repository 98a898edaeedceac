//! Monte Carlo estimator for products of block quadratic forms of
//! orthonormal Haar vectors.
//!
//! Expressions are products of factors `l^T A r` where `l, r` are among
//! the first four rows of a Haar `Q ~ O(p)` and `A` is one of the block
//! operators below. This provides spot validation for any auxiliary
//! closed form in that family, e.g. `E[||u_a||^2 (u_b^T v_b)^2]`.

use rayon::prelude::*;

use crate::continual::McEstimate;
use crate::rng::trial_rng;
use crate::rotation::sample_haar;
use crate::{Error, Result};

/// Block operator in the quadratic form, relative to the head/tail split
/// at coordinate `m`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BlockOp {
    /// `diag(Q_m, 0)`: random rotation of the head block.
    QmBlock,
    /// `diag(I_m, 0)`: head-block inner product, e.g. `u_a^T v_a`.
    HeadIdentity,
    /// `diag(0, I_{p-m})`: tail-block inner product, e.g. `u_b^T v_b`.
    TailIdentity,
    /// `I_p`: plain inner product.
    FullIdentity,
}

/// One of the four orthonormal vectors (rows of the sampled `Q`).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VecSym {
    U,
    V,
    Z,
    X,
}

impl VecSym {
    fn index(self) -> usize {
        match self {
            VecSym::U => 0,
            VecSym::V => 1,
            VecSym::Z => 2,
            VecSym::X => 3,
        }
    }
}

/// A single quadratic form `left^T op right`.
#[derive(Debug, Clone, Copy)]
pub struct BilinearFactor {
    pub left: VecSym,
    pub op: BlockOp,
    pub right: VecSym,
}

impl BilinearFactor {
    pub fn new(left: VecSym, op: BlockOp, right: VecSym) -> Self {
        BilinearFactor { left, op, right }
    }
}

/// Product of quadratic forms.
#[derive(Debug, Clone)]
pub struct BilinearExpr {
    factors: Vec<BilinearFactor>,
}

impl BilinearExpr {
    pub fn new(factors: Vec<BilinearFactor>) -> Result<Self> {
        if factors.is_empty() {
            return Err(Error::InvalidArgument(
                "bilinear expression needs at least one factor".into(),
            ));
        }
        Ok(BilinearExpr { factors })
    }

    pub fn factors(&self) -> &[BilinearFactor] {
        &self.factors
    }

    /// Number of `QmBlock` factors; an odd count forces expectation zero.
    pub fn qm_factor_count(&self) -> usize {
        self.factors
            .iter()
            .filter(|f| f.op == BlockOp::QmBlock)
            .count()
    }

    fn max_vector_index(&self) -> usize {
        self.factors
            .iter()
            .flat_map(|f| [f.left.index(), f.right.index()])
            .max()
            .unwrap_or(0)
    }
}

/// Monte Carlo estimate of `E prod_k (l_k^T A_k r_k)` with the vectors
/// realized as the first rows of one Haar `Q ~ O(p)` per trial and a fresh
/// `Q_m ~ O(m)` shared by all `QmBlock` factors of that trial.
pub fn mc_bilinear_expectation(
    expr: &BilinearExpr,
    p: usize,
    m: usize,
    trials: u64,
    seed: u64,
) -> Result<McEstimate> {
    if m > p {
        return Err(Error::InvalidDimension(format!("m={m} exceeds p={p}")));
    }
    let needed = expr.max_vector_index() + 1;
    if p < needed {
        return Err(Error::InvalidDimension(format!(
            "expression uses {needed} orthonormal vectors but p={p}"
        )));
    }
    if expr.qm_factor_count() > 0 && m == 0 {
        return Err(Error::InvalidArgument(
            "expression contains a Qm factor but m=0".into(),
        ));
    }
    if trials < 2 {
        return Err(Error::InvalidArgument(
            "need at least 2 trials for a standard error".into(),
        ));
    }
    let needs_qm = expr.qm_factor_count() > 0;
    let values: Vec<f64> = (0..trials)
        .into_par_iter()
        .map(|t| -> Result<f64> {
            let mut rng = trial_rng(seed, t);
            let q = sample_haar(p, &mut rng).map_err(|e| Error::in_trial(t, e))?;
            let qmat = q.matrix();
            let qm = if needs_qm {
                Some(sample_haar(m, &mut rng).map_err(|e| Error::in_trial(t, e))?)
            } else {
                None
            };
            let mut prod = 1.0;
            for f in expr.factors() {
                let li = f.left.index();
                let ri = f.right.index();
                let val = match f.op {
                    BlockOp::HeadIdentity => {
                        (0..m).map(|c| qmat[(li, c)] * qmat[(ri, c)]).sum::<f64>()
                    }
                    BlockOp::TailIdentity => {
                        (m..p).map(|c| qmat[(li, c)] * qmat[(ri, c)]).sum::<f64>()
                    }
                    BlockOp::FullIdentity => {
                        (0..p).map(|c| qmat[(li, c)] * qmat[(ri, c)]).sum::<f64>()
                    }
                    BlockOp::QmBlock => {
                        let qm = qm.as_ref().expect("sampled above").matrix();
                        let mut acc = 0.0;
                        for a in 0..m {
                            let mut inner = 0.0;
                            for b in 0..m {
                                inner += qm[(a, b)] * qmat[(ri, b)];
                            }
                            acc += qmat[(li, a)] * inner;
                        }
                        acc
                    }
                };
                prod *= val;
            }
            Ok(prod)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(McEstimate::from_values(&values, seed))
}
