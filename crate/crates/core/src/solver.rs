//! Minimum-norm least-squares machinery: SVD pseudoinverse, the
//! projection-constrained solve, and (stochastic) gradient descent.
//!
//! On a realizable task, gradient descent from `w0` converges to the
//! projection of `w0` onto the solution manifold, which is exactly
//! `X^+ y + (I - X^+ X) w0`; [`gd_solve`] and [`projected_solve`] are two
//! routes to the same point and are cross-checked in the tests.

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use crate::{Error, Result};

/// Relative singular-value cutoff: keep sigma_i > rel * sigma_max * max(n,p).
pub const DEFAULT_RANK_TOL_REL: f64 = 1e-12;

/// Relative residual below which a task counts as realizable.
pub const REALIZABILITY_TOL_REL: f64 = 1e-8;

/// One-sided Jacobi SVD of `a`, thin, singular values descending.
///
/// Orthogonalizes the columns of the (tall-oriented) matrix by plane
/// rotations. Unlike bidiagonalization-based iterations this stays
/// accurate for exactly rank-deficient and repeated-singular-value
/// matrices, which the bound-saturating instances produce by design.
fn jacobi_svd(a: &DMatrix<f64>) -> (DMatrix<f64>, DVector<f64>, DMatrix<f64>) {
    let transposed = a.nrows() < a.ncols();
    let mut g = if transposed { a.transpose() } else { a.clone() };
    let (n, p) = (g.nrows(), g.ncols());
    let mut v = DMatrix::<f64>::identity(p, p);

    const TOL: f64 = 1e-15;
    const MAX_SWEEPS: usize = 64;
    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for i in 0..p.saturating_sub(1) {
            for j in i + 1..p {
                let aii = g.column(i).norm_squared();
                let ajj = g.column(j).norm_squared();
                let aij = g.column(i).dot(&g.column(j));
                if aij.abs() <= TOL * (aii * ajj).sqrt() || aij == 0.0 {
                    continue;
                }
                rotated = true;
                let tau = (ajj - aii) / (2.0 * aij);
                let t = tau.signum() / (tau.abs() + (1.0 + tau * tau).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for r in 0..n {
                    let (gi, gj) = (g[(r, i)], g[(r, j)]);
                    g[(r, i)] = c * gi - s * gj;
                    g[(r, j)] = s * gi + c * gj;
                }
                for r in 0..p {
                    let (vi, vj) = (v[(r, i)], v[(r, j)]);
                    v[(r, i)] = c * vi - s * vj;
                    v[(r, j)] = s * vi + c * vj;
                }
            }
        }
        if !rotated {
            break;
        }
    }

    let mut order: Vec<(f64, usize)> = (0..p).map(|j| (g.column(j).norm(), j)).collect();
    order.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap());
    let mut u = DMatrix::zeros(n, p);
    let mut vv = DMatrix::zeros(p, p);
    let mut s = DVector::zeros(p);
    for (out, &(sigma, j)) in order.iter().enumerate() {
        s[out] = sigma;
        if sigma > 0.0 {
            let scaled = g.column(j) / sigma;
            u.set_column(out, &scaled);
        }
        vv.set_column(out, &v.column(j));
    }
    if transposed {
        (vv, s, u)
    } else {
        (u, s, vv)
    }
}

/// Singular values of `x`, descending.
pub fn singular_values(x: &DMatrix<f64>) -> DVector<f64> {
    jacobi_svd(x).1
}

/// Thin SVD restricted to the numerically nonzero singular values.
#[derive(Debug, Clone)]
pub struct SvdFactors {
    u: DMatrix<f64>,
    s: DVector<f64>,
    v: DMatrix<f64>,
    rank_tol: f64,
}

impl SvdFactors {
    pub fn new(x: &DMatrix<f64>, rank_tol_rel: f64) -> Self {
        let (u_full, s_full, v_full) = jacobi_svd(x);

        let s_max = s_full.get(0).copied().unwrap_or(0.0);
        let rank_tol = rank_tol_rel * s_max * x.nrows().max(x.ncols()) as f64;
        let r = s_full.iter().take_while(|&&s| s > rank_tol).count();

        let mut u = DMatrix::zeros(x.nrows(), r);
        let mut v = DMatrix::zeros(x.ncols(), r);
        let mut s = DVector::zeros(r);
        for j in 0..r {
            u.set_column(j, &u_full.column(j));
            v.set_column(j, &v_full.column(j));
            s[j] = s_full[j];
        }
        SvdFactors { u, s, v, rank_tol }
    }

    pub fn rank(&self) -> usize {
        self.s.len()
    }

    pub fn rank_tol(&self) -> f64 {
        self.rank_tol
    }

    pub fn singular_values(&self) -> &DVector<f64> {
        &self.s
    }

    pub fn sigma_max(&self) -> f64 {
        self.s.get(0).copied().unwrap_or(0.0)
    }

    /// Smallest retained singular value.
    pub fn sigma_min_pos(&self) -> f64 {
        self.s.get(self.rank().wrapping_sub(1)).copied().unwrap_or(0.0)
    }

    /// `X^+` as a dense matrix.
    pub fn pseudoinverse(&self) -> DMatrix<f64> {
        let mut vs = self.v.clone();
        for j in 0..self.rank() {
            let inv = 1.0 / self.s[j];
            vs.column_mut(j).scale_mut(inv);
        }
        vs * self.u.transpose()
    }

    /// `X^+ y` without forming `X^+`.
    pub fn pinv_apply(&self, y: &DVector<f64>) -> DVector<f64> {
        let mut c = self.u.transpose() * y;
        for j in 0..self.rank() {
            c[j] /= self.s[j];
        }
        &self.v * c
    }

    /// Projection of `w` onto the row space of `X` (`X^+ X w = V V^T w`).
    pub fn project_row_space(&self, w: &DVector<f64>) -> DVector<f64> {
        &self.v * (self.v.transpose() * w)
    }
}

/// Moore-Penrose pseudoinverse with the relative rank threshold
/// `rank_tol_rel * sigma_max * max(n, p)`. The zero matrix maps to zero.
pub fn pseudoinverse(x: &DMatrix<f64>, rank_tol_rel: f64) -> DMatrix<f64> {
    SvdFactors::new(x, rank_tol_rel).pseudoinverse()
}

fn check_realizable(x: &DMatrix<f64>, y: &DVector<f64>, w: &DVector<f64>) -> Result<()> {
    let residual = (x * w - y).norm();
    let tol = REALIZABILITY_TOL_REL * y.norm();
    if residual > tol {
        return Err(Error::InfeasibleTask { residual, tol });
    }
    Ok(())
}

fn check_dims(x: &DMatrix<f64>, y: &DVector<f64>) -> Result<()> {
    if y.len() != x.nrows() {
        return Err(Error::InvalidDimension(format!(
            "label vector has length {} but X has {} rows",
            y.len(),
            x.nrows()
        )));
    }
    Ok(())
}

/// Minimum-norm interpolator `argmin ||w|| s.t. Xw = y`, i.e. `X^+ y`.
pub fn min_norm_solve(x: &DMatrix<f64>, y: &DVector<f64>) -> Result<DVector<f64>> {
    check_dims(x, y)?;
    let factors = SvdFactors::new(x, DEFAULT_RANK_TOL_REL);
    let w = factors.pinv_apply(y);
    check_realizable(x, y, &w)?;
    Ok(w)
}

/// `argmin ||w - w0|| s.t. Xw = y`, i.e. `X^+ y + (I - X^+ X) w0`.
pub fn projected_solve(x: &DMatrix<f64>, y: &DVector<f64>, w0: &DVector<f64>) -> Result<DVector<f64>> {
    check_dims(x, y)?;
    if w0.len() != x.ncols() {
        return Err(Error::InvalidDimension(format!(
            "initialization has length {} but X has {} columns",
            w0.len(),
            x.ncols()
        )));
    }
    let factors = SvdFactors::new(x, DEFAULT_RANK_TOL_REL);
    let w = factors.pinv_apply(y) + w0 - factors.project_row_space(w0);
    check_realizable(x, y, &w)?;
    Ok(w)
}

/// Step size, stopping residual and iteration cap for gradient descent.
///
/// The convergence-to-projection argument needs a small enough step; no
/// usable rate comes with it, so the default `0.9 / sigma_max^2` is our
/// choice (the descent lemma for `||Xw - y||^2` requires step < 1/sigma_max^2).
#[derive(Debug, Clone, Copy)]
pub struct GdConfig {
    pub step: f64,
    pub residual_tol: f64,
    pub max_iters: usize,
}

impl GdConfig {
    /// Defaults derived from the instance: step `0.9/sigma_max^2`,
    /// residual tolerance `1e-10 ||y||`, at most `10^6` iterations.
    pub fn auto(x: &DMatrix<f64>, y: &DVector<f64>) -> Self {
        let sigma_max = SvdFactors::new(x, DEFAULT_RANK_TOL_REL).sigma_max();
        let step = if sigma_max > 0.0 {
            0.9 / (sigma_max * sigma_max)
        } else {
            1.0
        };
        GdConfig {
            step,
            residual_tol: 1e-10 * y.norm(),
            max_iters: 1_000_000,
        }
    }
}

/// Full-batch gradient descent on `||Xw - y||^2` from `w0`.
///
/// Requires a realizable task and `step <= 1/sigma_max^2`; returns once the
/// residual drops to `residual_tol` (zero iterations if `w0` already fits).
pub fn gd_solve(
    x: &DMatrix<f64>,
    y: &DVector<f64>,
    w0: &DVector<f64>,
    cfg: &GdConfig,
) -> Result<DVector<f64>> {
    check_dims(x, y)?;
    let mut w = w0.clone();
    let mut residual = x * &w - y;
    for _ in 0..cfg.max_iters {
        if residual.norm() <= cfg.residual_tol {
            return Ok(w);
        }
        let grad = 2.0 * (x.transpose() * &residual);
        w.axpy(-cfg.step, &grad, 1.0);
        residual = x * &w - y;
    }
    if residual.norm() <= cfg.residual_tol {
        return Ok(w);
    }
    Err(Error::NonConvergence {
        iters: cfg.max_iters,
        residual: residual.norm(),
        tol: cfg.residual_tol,
        last: w.data.as_vec().clone(),
    })
}

/// Mini-batch stochastic gradient descent on `||Xw - y||^2`.
///
/// The convergence-to-projection guarantee is only asserted for the
/// full-batch path; this variant is provided for experimentation and is
/// smoke-tested for residual decrease.
pub fn sgd_solve<R: Rng + ?Sized>(
    x: &DMatrix<f64>,
    y: &DVector<f64>,
    w0: &DVector<f64>,
    cfg: &GdConfig,
    batch_size: usize,
    rng: &mut R,
) -> Result<DVector<f64>> {
    check_dims(x, y)?;
    let n = x.nrows();
    if batch_size == 0 {
        return Err(Error::InvalidArgument("batch size must be >= 1".into()));
    }
    let scale = n as f64 / batch_size as f64;
    let mut w = w0.clone();
    for _ in 0..cfg.max_iters {
        if (x * &w - y).norm() <= cfg.residual_tol {
            return Ok(w);
        }
        let mut grad = DVector::zeros(x.ncols());
        for _ in 0..batch_size {
            let i = rng.random_range(0..n);
            let row = x.row(i);
            let r_i = row.transpose().dot(&w) - y[i];
            grad.axpy(2.0 * r_i, &row.transpose(), 1.0);
        }
        w.axpy(-cfg.step * scale, &grad, 1.0);
    }
    let residual = (x * &w - y).norm();
    if residual <= cfg.residual_tol {
        return Ok(w);
    }
    Err(Error::NonConvergence {
        iters: cfg.max_iters,
        residual,
        tol: cfg.residual_tol,
        last: w.data.as_vec().clone(),
    })
}
