//! The two-task continual learning scheme, the forgetting it induces, and
//! its Monte Carlo expectation over random task transformations.
//!
//! Scheme: start at zero, fit task 1 to convergence, then fit task 2 from
//! there. Both fits are minimum-distance interpolators, so
//! `w1 = X^+ y` and `w2 = X2^+ y + (I - X2^+ X2) w1` with `X2 = X O`.
//! Forgetting is the degradation of the task-1 loss after the second fit.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

use crate::rng::trial_rng;
use crate::rotation::{apply_rotation, make_block_rotation, sample_haar, BlockRotation};
use crate::solver::{gd_solve, GdConfig, SvdFactors, DEFAULT_RANK_TOL_REL, REALIZABILITY_TOL_REL};
use crate::{Error, Result};

/// Relative threshold below which the teacher's row-space component counts
/// as zero and the forgetting normalization is rejected.
const DEGENERATE_TEACHER_TOL: f64 = 1e-12;

/// One continual experiment: task-1 data, teacher, labels, and the
/// dimension of the transformed subspace used for task 2.
#[derive(Debug, Clone)]
pub struct ProblemInstance {
    x: DMatrix<f64>,
    wstar: DVector<f64>,
    y: DVector<f64>,
    m: usize,
}

impl ProblemInstance {
    /// Build an instance with `y = X w*` (realizable by construction).
    pub fn new(x: DMatrix<f64>, wstar: DVector<f64>, m: usize) -> Result<Self> {
        if wstar.len() != x.ncols() {
            return Err(Error::InvalidDimension(format!(
                "teacher has length {} but X has {} columns",
                wstar.len(),
                x.ncols()
            )));
        }
        if m > x.ncols() {
            return Err(Error::InvalidDimension(format!(
                "m={m} exceeds the ambient dimension p={}",
                x.ncols()
            )));
        }
        let y = &x * &wstar;
        Ok(ProblemInstance { x, wstar, y, m })
    }

    /// Bound-saturating instance: `X` has `d` equal singular values, `n = d`
    /// rows, and a uniformly random unit teacher.
    pub fn worst_case<R: Rng + ?Sized>(
        p: usize,
        d: usize,
        m: usize,
        scale: f64,
        rng: &mut R,
    ) -> Result<Self> {
        let x = make_worst_case_x(d, p, d, scale, rng)?;
        let wstar = random_unit_vector(p, rng);
        ProblemInstance::new(x, wstar, m)
    }

    pub fn x(&self) -> &DMatrix<f64> {
        &self.x
    }

    pub fn wstar(&self) -> &DVector<f64> {
        &self.wstar
    }

    pub fn y(&self) -> &DVector<f64> {
        &self.y
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn p(&self) -> usize {
        self.x.ncols()
    }

    pub fn n(&self) -> usize {
        self.x.nrows()
    }
}

/// Outcome of one run of the scheme.
#[derive(Debug, Clone)]
pub struct ContinualResult {
    pub w1: DVector<f64>,
    pub w2: DVector<f64>,
    /// Task-1 loss degradation, clamped at zero.
    pub forgetting: f64,
    /// Forgetting divided by `sigma_max(X)^2 ||X^+ X w*||^2`.
    pub normalized_forgetting: f64,
}

/// Monte Carlo mean with its standard error.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct McEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub trials: u64,
    pub seed: u64,
}

impl McEstimate {
    /// Two-pass mean/stderr over per-trial values in trial order, so the
    /// result is independent of how trials were scheduled.
    pub fn from_values(values: &[f64], seed: u64) -> Self {
        let n = values.len();
        assert!(n >= 2, "stderr needs at least two trials");
        let mean = values.iter().sum::<f64>() / n as f64;
        let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n as f64 - 1.0);
        McEstimate {
            mean,
            stderr: (var / n as f64).sqrt(),
            trials: n as u64,
            seed,
        }
    }

    /// `|mean - reference|` in units of the standard error.
    pub fn z_score(&self, reference: f64) -> f64 {
        if self.stderr == 0.0 {
            if self.mean == reference {
                0.0
            } else {
                f64::INFINITY
            }
        } else {
            (self.mean - reference).abs() / self.stderr
        }
    }
}

fn random_unit_vector<R: Rng + ?Sized>(p: usize, rng: &mut R) -> DVector<f64> {
    loop {
        let v = DVector::from_fn(p, |_, _| rng.sample::<f64, _>(StandardNormal));
        let norm = v.norm();
        if norm > 1e-12 {
            return v / norm;
        }
    }
}

/// Data matrix saturating the forgetting upper bound: all `d` nonzero
/// singular values equal `scale`, with Haar-random singular subspaces.
pub fn make_worst_case_x<R: Rng + ?Sized>(
    n: usize,
    p: usize,
    d: usize,
    scale: f64,
    rng: &mut R,
) -> Result<DMatrix<f64>> {
    if d == 0 || d > n.min(p) {
        return Err(Error::InvalidDimension(format!(
            "rank d={d} must satisfy 1 <= d <= min(n={n}, p={p})"
        )));
    }
    if scale <= 0.0 {
        return Err(Error::InvalidArgument("scale must be positive".into()));
    }
    let u = sample_haar(n, rng)?;
    let v = sample_haar(p, rng)?;
    let u_d = u.matrix().columns(0, d);
    let v_d = v.matrix().columns(0, d);
    Ok(scale * u_d * v_d.transpose())
}

/// `sigma_max(X)^2 ||X^+ X w*||^2`, the scale the forgetting naturally
/// carries. Fails when `w*` has no row-space component.
pub fn normalization_factor(x: &DMatrix<f64>, wstar: &DVector<f64>) -> Result<f64> {
    let factors = SvdFactors::new(x, DEFAULT_RANK_TOL_REL);
    normalization_from_factors(&factors, wstar)
}

fn normalization_from_factors(factors: &SvdFactors, wstar: &DVector<f64>) -> Result<f64> {
    let proj = factors.project_row_space(wstar);
    let proj_norm = proj.norm();
    if proj_norm <= DEGENERATE_TEACHER_TOL * wstar.norm().max(1e-300) {
        return Err(Error::DegenerateTeacher);
    }
    let smax = factors.sigma_max();
    Ok(smax * smax * proj_norm * proj_norm)
}

/// Instance state shared by every rotation: task-1 factors, the first
/// iterate, and the normalization.
struct Prepared<'a> {
    inst: &'a ProblemInstance,
    w1: DVector<f64>,
    loss1_w1: f64,
    norm_factor: f64,
}

fn prepare(inst: &ProblemInstance) -> Result<Prepared<'_>> {
    let factors = SvdFactors::new(&inst.x, DEFAULT_RANK_TOL_REL);
    let w1 = factors.pinv_apply(&inst.y);
    let residual = (&inst.x * &w1 - &inst.y).norm();
    let tol = REALIZABILITY_TOL_REL * inst.y.norm();
    if residual > tol {
        return Err(Error::InfeasibleTask { residual, tol });
    }
    let norm_factor = normalization_from_factors(&factors, &inst.wstar)?;
    let loss1_w1 = (&inst.x * &w1 - &inst.y).norm_squared();
    Ok(Prepared {
        inst,
        w1,
        loss1_w1,
        norm_factor,
    })
}

fn finish(prep: &Prepared<'_>, w2: DVector<f64>) -> ContinualResult {
    let loss1_w2 = (&prep.inst.x * &w2 - &prep.inst.y).norm_squared();
    let forgetting = (loss1_w2 - prep.loss1_w1).max(0.0);
    ContinualResult {
        w1: prep.w1.clone(),
        w2,
        forgetting,
        normalized_forgetting: forgetting / prep.norm_factor,
    }
}

fn run_prepared(prep: &Prepared<'_>, rot: &BlockRotation) -> Result<ContinualResult> {
    let inst = prep.inst;
    if rot.p() != inst.p() {
        return Err(Error::InvalidDimension(format!(
            "rotation dimension {} does not match p={}",
            rot.p(),
            inst.p()
        )));
    }
    if rot.m() != inst.m {
        return Err(Error::InvalidDimension(format!(
            "rotation has m={} but the instance asks for m={}",
            rot.m(),
            inst.m
        )));
    }
    if rot.m() == 0 {
        // O = I: the second task is the first, and the projection of w1
        // onto its own solution manifold is w1.
        return Ok(finish(prep, prep.w1.clone()));
    }
    let x2 = apply_rotation(rot, &inst.x)?;
    let factors2 = SvdFactors::new(&x2, DEFAULT_RANK_TOL_REL);
    let w2 = factors2.pinv_apply(&inst.y) + &prep.w1 - factors2.project_row_space(&prep.w1);
    let residual = (&x2 * &w2 - &inst.y).norm();
    let tol = REALIZABILITY_TOL_REL * inst.y.norm();
    if residual > tol {
        return Err(Error::InfeasibleTask { residual, tol });
    }
    Ok(finish(prep, w2))
}

/// Run the scheme once with the given rotation.
pub fn run_two_task(inst: &ProblemInstance, rot: &BlockRotation) -> Result<ContinualResult> {
    run_prepared(&prepare(inst)?, rot)
}

/// Run the scheme with both fits done by full-batch gradient descent
/// instead of the pseudoinverse route. Converges to the same iterates.
pub fn run_two_task_gd(
    inst: &ProblemInstance,
    rot: &BlockRotation,
    cfg: Option<GdConfig>,
) -> Result<ContinualResult> {
    let prep = prepare(inst)?;
    let zero = DVector::zeros(inst.p());
    let cfg1 = cfg.unwrap_or_else(|| GdConfig::auto(&inst.x, &inst.y));
    let w1 = gd_solve(&inst.x, &inst.y, &zero, &cfg1)?;
    let x2 = apply_rotation(rot, &inst.x)?;
    let cfg2 = cfg.unwrap_or_else(|| GdConfig::auto(&x2, &inst.y));
    let w2 = gd_solve(&x2, &inst.y, &w1, &cfg2)?;
    let loss1_w1 = (&inst.x * &w1 - &inst.y).norm_squared();
    let loss1_w2 = (&inst.x * &w2 - &inst.y).norm_squared();
    let forgetting = (loss1_w2 - loss1_w1).max(0.0);
    Ok(ContinualResult {
        w1,
        w2,
        forgetting,
        normalized_forgetting: forgetting / prep.norm_factor,
    })
}

/// Monte Carlo estimate of the expected (normalized) forgetting over
/// i.i.d. block rotations.
///
/// Trial `t` draws its rotation from the stream `(seed, t)`; the estimate
/// is identical for any number of threads.
pub fn mc_expected_forgetting(
    inst: &ProblemInstance,
    trials: u64,
    seed: u64,
    normalize: bool,
) -> Result<McEstimate> {
    if trials < 2 {
        return Err(Error::InvalidArgument(
            "need at least 2 trials for a standard error".into(),
        ));
    }
    let prep = prepare(inst)?;
    let values: Vec<f64> = (0..trials)
        .into_par_iter()
        .map(|t| -> Result<f64> {
            let mut rng = trial_rng(seed, t);
            let rot = make_block_rotation(inst.p(), inst.m, &mut rng)
                .map_err(|e| Error::in_trial(t, e))?;
            let res = run_prepared(&prep, &rot).map_err(|e| Error::in_trial(t, e))?;
            Ok(if normalize {
                res.normalized_forgetting
            } else {
                res.forgetting
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(McEstimate::from_values(&values, seed))
}

/// Monte Carlo estimate of `E[(e_i^T O^T P (I-O) e_j)^2]` with
/// `P = diag(1 x d, 0 x (p-d))` (1-based indices), the squared term the
/// closed-form lemmas evaluate: `i = j` is the diagonal term, `i != j`
/// the off-diagonal one.
pub fn mc_forgetting_term(
    p: usize,
    d: usize,
    m: usize,
    i: usize,
    j: usize,
    trials: u64,
    seed: u64,
) -> Result<McEstimate> {
    if d == 0 || d > p {
        return Err(Error::InvalidDimension(format!("need 1 <= d={d} <= p={p}")));
    }
    if m < 2 || m > p {
        return Err(Error::InvalidArgument(format!(
            "lemma estimator needs 2 <= m={m} <= p={p}"
        )));
    }
    for (name, idx) in [("i", i), ("j", j)] {
        if idx == 0 || idx > d {
            return Err(Error::InvalidArgument(format!(
                "index {name}={idx} outside 1..={d}"
            )));
        }
    }
    if trials < 2 {
        return Err(Error::InvalidArgument(
            "need at least 2 trials for a standard error".into(),
        ));
    }
    let values: Vec<f64> = (0..trials)
        .into_par_iter()
        .map(|t| -> Result<f64> {
            let mut rng = trial_rng(seed, t);
            let rot = make_block_rotation(p, m, &mut rng).map_err(|e| Error::in_trial(t, e))?;
            let o = rot.composed();
            let mut a = 0.0;
            for s in 0..d {
                a += o[(s, i - 1)] * ((if s == j - 1 { 1.0 } else { 0.0 }) - o[(s, j - 1)]);
            }
            Ok(a * a)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(McEstimate::from_values(&values, seed))
}

/// Monte Carlo estimate of the cross term
/// `E[(e_i^T O^T P (I-O) e_j)(e_i^T O^T P (I-O) e_k)]` with
/// `P = diag(1 x d, 0 x (p-d))` and distinct `j != k` (1-based indices).
///
/// The closed-form analysis says this vanishes; the estimator lets us
/// check that claim directly.
#[allow(clippy::too_many_arguments)]
pub fn mc_cross_term(
    p: usize,
    d: usize,
    m: usize,
    i: usize,
    j: usize,
    k: usize,
    trials: u64,
    seed: u64,
) -> Result<McEstimate> {
    if d == 0 || d > p {
        return Err(Error::InvalidDimension(format!("need 1 <= d={d} <= p={p}")));
    }
    if m < 2 || m > p {
        return Err(Error::InvalidArgument(format!(
            "cross-term estimator needs 2 <= m={m} <= p={p}"
        )));
    }
    for (name, idx) in [("i", i), ("j", j), ("k", k)] {
        if idx == 0 || idx > d {
            return Err(Error::InvalidArgument(format!(
                "index {name}={idx} outside 1..={d}"
            )));
        }
    }
    if j == k {
        return Err(Error::InvalidArgument(
            "cross term requires distinct indices j != k".into(),
        ));
    }
    if trials < 2 {
        return Err(Error::InvalidArgument(
            "need at least 2 trials for a standard error".into(),
        ));
    }
    let values: Vec<f64> = (0..trials)
        .into_par_iter()
        .map(|t| -> Result<f64> {
            let mut rng = trial_rng(seed, t);
            let rot = make_block_rotation(p, m, &mut rng).map_err(|e| Error::in_trial(t, e))?;
            let o = rot.composed();
            // a_b = sum_{t<d} O[t,i-1] * ((t==b) - O[t,b]) for b in {j-1, k-1}
            let mut a_j = 0.0;
            let mut a_k = 0.0;
            for s in 0..d {
                let oi = o[(s, i - 1)];
                a_j += oi * ((if s == j - 1 { 1.0 } else { 0.0 }) - o[(s, j - 1)]);
                a_k += oi * ((if s == k - 1 { 1.0 } else { 0.0 }) - o[(s, k - 1)]);
            }
            Ok(a_j * a_k)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(McEstimate::from_values(&values, seed))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::trial_rng;
    use crate::rotation::OrthogonalMatrix;
    use crate::solver::pseudoinverse;
    use crate::theory::{exact_worst_case, RegimeParams};
    use crate::rational::to_f64;
    use approx::assert_abs_diff_eq;

    fn instance(n: usize, p: usize, d: usize, m: usize, seed: u64) -> ProblemInstance {
        let mut rng = trial_rng(seed, 0);
        let x = make_worst_case_x(n, p, d, 1.0, &mut rng).unwrap();
        let wstar = random_unit_vector(p, &mut rng);
        ProblemInstance::new(x, wstar, m).unwrap()
    }

    fn gauss_instance(n: usize, p: usize, d: usize, m: usize, seed: u64) -> ProblemInstance {
        let mut rng = trial_rng(seed, 1);
        let a = DMatrix::from_fn(n, d, |_, _| rng.sample::<f64, _>(StandardNormal));
        let b = DMatrix::from_fn(d, p, |_, _| rng.sample::<f64, _>(StandardNormal));
        let wstar = random_unit_vector(p, &mut rng);
        ProblemInstance::new(a * b, wstar, m).unwrap()
    }

    #[test]
    fn identity_rotation_forgets_nothing_exactly() {
        let inst = instance(4, 9, 4, 0, 5);
        let rot = make_block_rotation(9, 0, &mut trial_rng(5, 1)).unwrap();
        let res = run_two_task(&inst, &rot).unwrap();
        assert_eq!(res.forgetting, 0.0);
        assert_eq!(res.normalized_forgetting, 0.0);
        assert_eq!(res.w1, res.w2);
    }

    #[test]
    fn square_invertible_case_has_closed_form() {
        let p = 6;
        let mut rng = trial_rng(9, 0);
        let x = make_worst_case_x(p, p, p, 1.3, &mut rng).unwrap();
        let wstar = random_unit_vector(p, &mut rng);
        let inst = ProblemInstance::new(x.clone(), wstar.clone(), 4).unwrap();
        let rot = make_block_rotation(p, 4, &mut trial_rng(9, 1)).unwrap();
        let res = run_two_task(&inst, &rot).unwrap();

        assert!((res.w1.clone() - &wstar).norm() <= 1e-8 * wstar.norm());
        let want_w2 = rot.composed().transpose() * &wstar;
        assert!((res.w2.clone() - &want_w2).norm() <= 1e-8 * wstar.norm());
        let want_f = (&x * (rot.composed().transpose() - DMatrix::identity(p, p)) * &wstar)
            .norm_squared();
        assert_abs_diff_eq!(res.forgetting, want_f, epsilon = 1e-8 * want_f.max(1.0));
    }

    #[test]
    fn second_task_is_fit_exactly() {
        let inst = gauss_instance(7, 15, 5, 6, 21);
        let rot = make_block_rotation(15, 6, &mut trial_rng(21, 7)).unwrap();
        let res = run_two_task(&inst, &rot).unwrap();
        let x2 = apply_rotation(&rot, inst.x()).unwrap();
        assert!((x2 * &res.w2 - inst.y()).norm() <= 1e-8 * inst.y().norm());
    }

    #[test]
    fn normalization_factor_cases() {
        let eye = DMatrix::<f64>::identity(5, 5);
        let w = random_unit_vector(5, &mut trial_rng(2, 0));
        assert_abs_diff_eq!(normalization_factor(&eye, &w).unwrap(), 1.0, epsilon = 1e-10);

        let x = gauss_instance(4, 8, 3, 0, 33).x().clone();
        let base = normalization_factor(&x, &w.clone().insert_rows(5, 3, 0.3)).unwrap();
        let scaled = normalization_factor(&(&x * 2.5), &w.clone().insert_rows(5, 3, 0.3)).unwrap();
        assert_abs_diff_eq!(scaled, 2.5 * 2.5 * base, epsilon = 1e-8 * scaled);

        // teacher entirely in the nullspace
        let mut x0 = DMatrix::<f64>::zeros(2, 3);
        x0[(0, 0)] = 1.0;
        x0[(1, 1)] = 1.0;
        let w_null = DVector::from_vec(vec![0.0, 0.0, 1.0]);
        assert!(matches!(
            normalization_factor(&x0, &w_null),
            Err(Error::DegenerateTeacher)
        ));
    }

    #[test]
    fn worst_case_x_construction() {
        let mut rng = trial_rng(4, 0);
        // n = p = d: orthogonal up to scale
        let x = make_worst_case_x(5, 5, 5, 1.0, &mut rng).unwrap();
        OrthogonalMatrix::new(x).unwrap();

        let x = make_worst_case_x(6, 9, 4, 2.5, &mut rng).unwrap();
        let svals = crate::solver::singular_values(&x);
        let s: Vec<f64> = svals.iter().copied().collect();
        for &v in &s[..4] {
            assert_abs_diff_eq!(v, 2.5, epsilon = 1e-10);
        }
        for &v in &s[4..] {
            assert!(v <= 1e-12);
        }

        let x1 = make_worst_case_x(3, 7, 1, 1.0, &mut rng).unwrap();
        let s1 = crate::solver::singular_values(&x1);
        assert_eq!(s1.iter().filter(|&&v| v > 1e-10).count(), 1);

        assert!(matches!(
            make_worst_case_x(3, 7, 4, 1.0, &mut rng),
            Err(Error::InvalidDimension(_))
        ));
    }

    #[test]
    fn normalized_forgetting_is_scale_invariant() {
        let inst = instance(5, 11, 5, 6, 51);
        let rot = make_block_rotation(11, 6, &mut trial_rng(51, 3)).unwrap();
        let base = run_two_task(&inst, &rot).unwrap();

        let scaled = ProblemInstance::new(inst.x() * 3.0, inst.wstar() * -0.5, 6).unwrap();
        let res = run_two_task(&scaled, &rot).unwrap();
        assert_abs_diff_eq!(
            res.normalized_forgetting,
            base.normalized_forgetting,
            epsilon = 1e-8 * base.normalized_forgetting.max(1e-30)
        );
    }

    /// Pointwise sharp upper bound from the operator-norm step.
    #[test]
    fn forgetting_respects_upper_bound() {
        for seed in 0..10 {
            let inst = gauss_instance(6, 12, 4, 5, 100 + seed);
            let rot = make_block_rotation(12, 5, &mut trial_rng(200 + seed, 0)).unwrap();
            let res = run_two_task(&inst, &rot).unwrap();

            let x = inst.x();
            let pinv = pseudoinverse(x, DEFAULT_RANK_TOL_REL);
            let px = &pinv * x;
            let o = rot.composed();
            let eye = DMatrix::identity(12, 12);
            let v = &px * o.transpose() * &px * (&eye - o) * &px * inst.wstar();
            let smax = SvdFactors::new(x, DEFAULT_RANK_TOL_REL).sigma_max();
            let bound = smax * smax * v.norm_squared();
            assert!(
                res.forgetting <= bound * (1.0 + 1e-8) + 1e-12,
                "forgetting {} above bound {}",
                res.forgetting,
                bound
            );
        }
    }

    #[test]
    fn gd_path_matches_svd_path() {
        let inst = gauss_instance(8, 16, 5, 7, 71);
        let rot = make_block_rotation(16, 7, &mut trial_rng(71, 2)).unwrap();
        let svd_res = run_two_task(&inst, &rot).unwrap();
        let gd_res = run_two_task_gd(&inst, &rot, None).unwrap();
        let rel = (gd_res.forgetting - svd_res.forgetting).abs() / svd_res.forgetting.max(1e-12);
        assert!(rel < 1e-5, "relative gap {rel}");
    }

    #[test]
    fn mc_identity_transform_is_exactly_zero() {
        let inst = instance(4, 8, 4, 0, 61);
        let est = mc_expected_forgetting(&inst, 32, 7, true).unwrap();
        assert_eq!(est.mean, 0.0);
        assert_eq!(est.stderr, 0.0);
    }

    /// Small-scale version of the analytic/MC agreement gate.
    #[test]
    fn mc_matches_exact_worst_case_small() {
        let (p, d, m) = (16, 5, 8);
        let inst = instance(d, p, d, m, 77);
        let est = mc_expected_forgetting(&inst, 3000, 13, true).unwrap();
        let exact = to_f64(&exact_worst_case(&RegimeParams::new(p as u64, d as u64, m as u64).unwrap()));
        assert!(
            est.z_score(exact) <= 3.0,
            "mc {} +- {} vs exact {}",
            est.mean,
            est.stderr,
            exact
        );
    }

    #[test]
    fn mc_estimates_are_thread_count_independent() {
        let inst = instance(3, 7, 3, 4, 88);
        let run = |threads: usize| {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap();
            pool.install(|| mc_expected_forgetting(&inst, 64, 5, true).unwrap())
        };
        let a = run(1);
        let b = run(4);
        assert_eq!(a.mean.to_bits(), b.mean.to_bits());
        assert_eq!(a.stderr.to_bits(), b.stderr.to_bits());
    }

    #[test]
    fn cross_term_vanishes_and_validates_indices() {
        let est = mc_cross_term(6, 6, 6, 1, 1, 2, 4000, 3).unwrap();
        assert!(est.z_score(0.0) <= 3.0, "z = {}", est.z_score(0.0));

        assert!(matches!(
            mc_cross_term(6, 6, 6, 1, 2, 2, 100, 3),
            Err(Error::InvalidArgument(_))
        ));
        assert!(matches!(
            mc_cross_term(6, 3, 6, 1, 2, 4, 100, 3),
            Err(Error::InvalidArgument(_))
        ));
    }

    /// Full-size oracle check; slow, so opt in with `-- --ignored`.
    #[test]
    #[ignore = "~20s: 10^4 trials at p=100"]
    fn mc_matches_exact_worst_case_at_scale() {
        let inst = instance(1, 100, 1, 50, 4100);
        let est = mc_expected_forgetting(&inst, 10_000, 17, true).unwrap();
        let exact =
            to_f64(&exact_worst_case(&RegimeParams::new(100, 1, 50).unwrap()));
        assert!(
            est.z_score(exact) <= 3.0,
            "mc {} +- {} vs exact {}",
            est.mean,
            est.stderr,
            exact
        );
    }

    /// In the worst case the teacher direction is immaterial.
    #[test]
    fn teacher_direction_does_not_matter_at_worst_case() {
        let p = 10;
        let d = 4;
        let m = 5;
        let mut rng = trial_rng(123, 0);
        let x = make_worst_case_x(d, p, d, 1.0, &mut rng).unwrap();
        let w_a = random_unit_vector(p, &mut rng);
        let w_b = random_unit_vector(p, &mut rng);
        let est_a =
            mc_expected_forgetting(&ProblemInstance::new(x.clone(), w_a, m).unwrap(), 2000, 9, true)
                .unwrap();
        let est_b =
            mc_expected_forgetting(&ProblemInstance::new(x, w_b, m).unwrap(), 2000, 9, true)
                .unwrap();
        let joint = (est_a.stderr.powi(2) + est_b.stderr.powi(2)).sqrt();
        assert!(
            (est_a.mean - est_b.mean).abs() <= 3.0 * joint,
            "means {} vs {} (joint se {joint})",
            est_a.mean,
            est_b.mean
        );
    }
}
