//! Qualitative average-case simulation: risk and training error of the
//! two-task scheme on a subspace-Gaussian data model.
//!
//! Data model per trial: a Haar-random `d`-dimensional subspace of `R^p`
//! carries both the teacher (uniform on its unit sphere) and the inputs
//! (i.i.d. standard normal inside the subspace); labels get additive
//! Gaussian noise. This model is fully specified here so the curves are
//! reproducible; only the qualitative shape of the forgetting curve is
//! claimed, never exact values.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

use crate::continual::McEstimate;
use crate::rng::trial_rng;
use crate::rotation::{apply_rotation, make_block_rotation, sample_haar};
use crate::solver::{SvdFactors, DEFAULT_RANK_TOL_REL};
use crate::{Error, Result};

/// Fresh-sample multiple used for the risk estimate (`10n` test rows).
const RISK_SAMPLE_FACTOR: usize = 10;

#[derive(Debug, Clone)]
pub struct AvgCaseConfig {
    /// Ambient (latent) dimensions to sweep.
    pub p_list: Vec<usize>,
    /// Effective data dimension.
    pub d: usize,
    /// Samples per task.
    pub n: usize,
    /// Label noise standard deviation.
    pub noise_sd: f64,
    /// Transformed-subspace fractions; `m = round(alpha * p)`.
    pub alphas: Vec<f64>,
    pub trials: u64,
    pub seed: u64,
}

impl AvgCaseConfig {
    fn validate(&self) -> Result<()> {
        if self.p_list.is_empty() || self.alphas.is_empty() {
            return Err(Error::InvalidArgument(
                "need at least one p and one alpha".into(),
            ));
        }
        if self.n < 1 || self.d < 1 {
            return Err(Error::InvalidArgument("need n >= 1 and d >= 1".into()));
        }
        if let Some(&p) = self.p_list.iter().find(|&&p| self.d > p) {
            return Err(Error::InvalidArgument(format!(
                "d={} exceeds p={p}",
                self.d
            )));
        }
        if self.alphas.iter().any(|&a| !(0.0..=1.0).contains(&a)) {
            return Err(Error::InvalidArgument("alphas must lie in [0, 1]".into()));
        }
        if self.noise_sd < 0.0 {
            return Err(Error::InvalidArgument("noise_sd must be >= 0".into()));
        }
        if self.trials < 2 {
            return Err(Error::InvalidArgument("need at least 2 trials".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Estimator {
    W1,
    W2,
    Null,
}

impl std::fmt::Display for Estimator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Estimator::W1 => write!(f, "w1"),
            Estimator::W2 => write!(f, "w2"),
            Estimator::Null => write!(f, "null"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    Risk,
    TrainError,
}

impl std::fmt::Display for Metric {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Metric::Risk => write!(f, "risk"),
            Metric::TrainError => write!(f, "train_error"),
        }
    }
}

/// One aggregated cell of the sweep.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct CurveCell {
    pub p: usize,
    pub alpha: f64,
    pub estimator: Estimator,
    pub metric: Metric,
    pub mean: f64,
    pub stderr: f64,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct CurveTable {
    pub cells: Vec<CurveCell>,
}

impl CurveTable {
    pub fn mean_of(&self, p: usize, alpha: f64, estimator: Estimator, metric: Metric) -> Option<f64> {
        self.cells
            .iter()
            .find(|c| c.p == p && c.alpha == alpha && c.estimator == estimator && c.metric == metric)
            .map(|c| c.mean)
    }

    /// Mean task-1 risk degradation `risk(w2) - risk(w1)` per alpha.
    pub fn forgetting_by_alpha(&self, p: usize) -> Vec<(f64, f64)> {
        let mut out = Vec::new();
        for cell in &self.cells {
            if cell.p == p && cell.estimator == Estimator::W2 && cell.metric == Metric::Risk {
                if let Some(w1) = self.mean_of(p, cell.alpha, Estimator::W1, Metric::Risk) {
                    out.push((cell.alpha, cell.mean - w1));
                }
            }
        }
        out
    }
}

struct TrialOutcome {
    risk_w1: f64,
    risk_w2: f64,
    risk_null: f64,
    train_w1: f64,
    train_w2: f64,
    train_null: f64,
}

fn run_trial(p: usize, d: usize, n: usize, noise_sd: f64, alpha: f64, mut rng: impl Rng) -> Result<TrialOutcome> {
    // d-dimensional Haar subspace carrying teacher and data
    let basis_full = sample_haar(p, &mut rng)?;
    let basis = basis_full.matrix().columns(0, d).into_owned();

    let mut s = DVector::from_fn(d, |_, _| rng.sample::<f64, _>(StandardNormal));
    s /= s.norm();
    let wstar = &basis * s;

    let gauss = |rows: usize, rng: &mut dyn rand::RngCore| {
        DMatrix::from_fn(rows, d, |_, _| {
            rand::Rng::sample::<f64, _>(rng, StandardNormal)
        })
    };
    let x = gauss(n, &mut rng) * basis.transpose();
    let mut y = &x * &wstar;
    for v in y.iter_mut() {
        *v += noise_sd * rng.sample::<f64, _>(StandardNormal);
    }

    // least-squares minimum-norm path (labels may be noisy)
    let factors = SvdFactors::new(&x, DEFAULT_RANK_TOL_REL);
    let w1 = factors.pinv_apply(&y);

    let m = ((alpha * p as f64).round() as usize).min(p);
    let w2 = if m == 0 {
        // identity transformation: w1 is already stationary for task 2
        w1.clone()
    } else {
        let rot = make_block_rotation(p, m, &mut rng)?;
        let x2 = apply_rotation(&rot, &x)?;
        let f2 = SvdFactors::new(&x2, DEFAULT_RANK_TOL_REL);
        f2.pinv_apply(&y) + &w1 - f2.project_row_space(&w1)
    };

    let n_test = RISK_SAMPLE_FACTOR * n;
    let x_test = gauss(n_test, &mut rng) * basis.transpose();
    let mut y_test = &x_test * &wstar;
    for v in y_test.iter_mut() {
        *v += noise_sd * rng.sample::<f64, _>(StandardNormal);
    }

    let risk = |w: &DVector<f64>| (&x_test * w - &y_test).norm_squared() / n_test as f64;
    let train = |w: &DVector<f64>| (&x * w - &y).norm_squared() / n as f64;
    Ok(TrialOutcome {
        risk_w1: risk(&w1),
        risk_w2: risk(&w2),
        risk_null: y_test.norm_squared() / n_test as f64,
        train_w1: train(&w1),
        train_w2: train(&w2),
        train_null: y.norm_squared() / n as f64,
    })
}

/// Sweep the `(p, alpha)` grid; every cell reports mean and standard error
/// of risk and training error for `w1`, `w2` and the null estimator.
pub fn simulate_average_case(cfg: &AvgCaseConfig) -> Result<CurveTable> {
    cfg.validate()?;
    let mut table = CurveTable::default();
    for (pi, &p) in cfg.p_list.iter().enumerate() {
        for (ai, &alpha) in cfg.alphas.iter().enumerate() {
            let cell_index = (pi * cfg.alphas.len() + ai) as u64;
            let outcomes: Vec<TrialOutcome> = (0..cfg.trials)
                .into_par_iter()
                .map(|t| -> Result<TrialOutcome> {
                    let rng = trial_rng(cfg.seed, cell_index * cfg.trials + t);
                    run_trial(p, cfg.d, cfg.n, cfg.noise_sd, alpha, rng)
                        .map_err(|e| Error::in_trial(t, e))
                })
                .collect::<Result<Vec<_>>>()?;
            let mut push = |estimator, metric, get: fn(&TrialOutcome) -> f64| {
                let values: Vec<f64> = outcomes.iter().map(get).collect();
                let est = McEstimate::from_values(&values, cfg.seed);
                table.cells.push(CurveCell {
                    p,
                    alpha,
                    estimator,
                    metric,
                    mean: est.mean,
                    stderr: est.stderr,
                });
            };
            push(Estimator::W1, Metric::Risk, |o| o.risk_w1);
            push(Estimator::W2, Metric::Risk, |o| o.risk_w2);
            push(Estimator::Null, Metric::Risk, |o| o.risk_null);
            push(Estimator::W1, Metric::TrainError, |o| o.train_w1);
            push(Estimator::W2, Metric::TrainError, |o| o.train_w2);
            push(Estimator::Null, Metric::TrainError, |o| o.train_null);
        }
    }
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config() -> AvgCaseConfig {
        AvgCaseConfig {
            p_list: vec![12],
            d: 4,
            n: 4,
            noise_sd: 0.0,
            alphas: vec![0.0, 0.5, 1.0],
            trials: 24,
            seed: 3,
        }
    }

    #[test]
    fn rejects_bad_configs() {
        let mut c = config();
        c.d = 20;
        assert!(simulate_average_case(&c).is_err());
        let mut c = config();
        c.alphas = vec![1.5];
        assert!(simulate_average_case(&c).is_err());
        let mut c = config();
        c.trials = 1;
        assert!(simulate_average_case(&c).is_err());
    }

    #[test]
    fn zero_alpha_noiseless_w2_equals_w1() {
        let table = simulate_average_case(&config()).unwrap();
        let w1 = table.mean_of(12, 0.0, Estimator::W1, Metric::Risk).unwrap();
        let w2 = table.mean_of(12, 0.0, Estimator::W2, Metric::Risk).unwrap();
        assert_eq!(w1, w2);
    }

    #[test]
    fn w1_training_error_vanishes_noiselessly_when_overparameterized() {
        let table = simulate_average_case(&config()).unwrap();
        for &alpha in &[0.0, 0.5, 1.0] {
            let v = table
                .mean_of(12, alpha, Estimator::W1, Metric::TrainError)
                .unwrap();
            assert!(v <= 1e-18, "train error {v}");
        }
    }

    #[test]
    fn all_means_nonnegative_and_forgetting_in_train_error_nonneg() {
        let mut c = config();
        c.noise_sd = 0.1;
        let table = simulate_average_case(&c).unwrap();
        for cell in &table.cells {
            assert!(cell.mean >= 0.0, "{cell:?}");
            assert!(cell.stderr >= 0.0);
        }
    }

    #[test]
    fn null_risk_is_alpha_independent_within_noise() {
        let mut c = config();
        c.trials = 64;
        let table = simulate_average_case(&c).unwrap();
        let cells: Vec<&CurveCell> = table
            .cells
            .iter()
            .filter(|c| c.estimator == Estimator::Null && c.metric == Metric::Risk)
            .collect();
        let a = cells[0];
        let b = cells[cells.len() - 1];
        let joint = (a.stderr.powi(2) + b.stderr.powi(2)).sqrt();
        assert!(
            (a.mean - b.mean).abs() <= 4.0 * joint,
            "{} vs {}",
            a.mean,
            b.mean
        );
    }

    #[test]
    fn stderr_shrinks_with_trials() {
        let mut c = config();
        // keep n away from the interpolation threshold n = d, where the
        // noisy risk is heavy-tailed and the standard error converges slowly
        c.n = 8;
        c.alphas = vec![0.5];
        c.noise_sd = 0.05;
        c.trials = 32;
        let small = simulate_average_case(&c).unwrap();
        c.trials = 512;
        let large = simulate_average_case(&c).unwrap();
        let se_small = small.cells[1].stderr; // w2 risk
        let se_large = large.cells[1].stderr;
        // 16x more trials should cut the standard error by about 4; allow slack
        assert!(
            se_large < 0.5 * se_small,
            "se {se_small} -> {se_large} did not shrink"
        );
    }
}
