//! Validation suites bundling the crate's cross-checks: golden tables,
//! lemma Monte Carlo, exact assembly identities, and bound saturation.

use serde::Serialize;

use crate::continual::{mc_cross_term, mc_expected_forgetting, mc_forgetting_term, McEstimate, ProblemInstance};
use crate::moments::{
    golden_identities, mc_bilinear_expectation, BilinearExpr, BilinearFactor, BlockOp, MomentCache,
    VecSym,
};
use crate::rational::{int, to_f64, Rational};
use crate::rng::trial_rng;
use crate::theory::{exact_worst_case, lemma_diag, lemma_diag_terms, lemma_offdiag, lemma_offdiag_terms, RegimeParams};
use crate::Result;

/// One named pass/fail outcome.
#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn new(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Self {
        Check {
            name: name.into(),
            passed,
            detail: detail.into(),
        }
    }
}

/// Every golden identity, evaluated exactly at p in {4, 6, 10, 25}.
pub fn tables() -> Vec<Check> {
    let ps = [4u64, 6, 10, 25];
    let mut cache = MomentCache::new();
    let mut checks = Vec::new();
    for (idx, id) in golden_identities().iter().enumerate() {
        let mut passed = true;
        let mut detail = String::new();
        for &p in &ps {
            if p < id.min_p() {
                continue;
            }
            let engine = cache.expectation(&id.matrix, p);
            let want = id.value(p);
            match engine {
                Ok(got) if got == want => {}
                Ok(got) => {
                    passed = false;
                    detail = format!("p={p}: engine {got} != table {want}");
                    break;
                }
                Err(e) => {
                    passed = false;
                    detail = format!("p={p}: {e}");
                    break;
                }
            }
        }
        if passed {
            detail = "exact at p in {4, 6, 10, 25}".into();
        }
        checks.push(Check::new(format!("golden[{idx:02}]"), passed, detail));
    }
    checks
}

/// Exact assembly and decomposition identities on the full small grid
/// 4 <= p <= 12, every valid (d, m).
pub fn assembly() -> Vec<Check> {
    let mut checks = Vec::new();

    let mut ok = true;
    let mut detail = String::from("exact over 4 <= p <= 12");
    'outer: for p in 4..=12u64 {
        for d in 1..=p {
            for m in 2..=p {
                let params = RegimeParams::new(p, d, m).expect("grid in range");
                let assembled = if d == 1 {
                    lemma_diag(&params)
                } else {
                    lemma_diag(&params) + int(d as i64 - 1) * lemma_offdiag(&params).expect("d >= 2")
                };
                if exact_worst_case(&params) != assembled {
                    ok = false;
                    detail = format!("mismatch at (p,d,m)=({p},{d},{m})");
                    break 'outer;
                }
            }
        }
    }
    checks.push(Check::new("assembly-identity", ok, detail));

    let mut ok = true;
    let mut detail = String::from("diag = term1 - 2*term2 + term3, exact");
    'outer: for p in 4..=12u64 {
        for d in 1..=p {
            for m in 2..=p {
                let params = RegimeParams::new(p, d, m).expect("grid in range");
                let [t1, t2, t3] = lemma_diag_terms(&params);
                if lemma_diag(&params) != t1 - int(2) * t2 + t3 {
                    ok = false;
                    detail = format!("mismatch at (p,d,m)=({p},{d},{m})");
                    break 'outer;
                }
            }
        }
    }
    checks.push(Check::new("diag-decomposition", ok, detail));

    let mut ok = true;
    let mut detail = String::from("offdiag = term1 - 2*term2 + term3, exact");
    'outer: for p in 4..=12u64 {
        for d in 2..=p {
            for m in 2..=p {
                let params = RegimeParams::new(p, d, m).expect("grid in range");
                let [t1, t2, t3] = lemma_offdiag_terms(&params).expect("d >= 2");
                if lemma_offdiag(&params).expect("d >= 2") != t1 - int(2) * t2 + t3 {
                    ok = false;
                    detail = format!("mismatch at (p,d,m)=({p},{d},{m})");
                    break 'outer;
                }
            }
        }
    }
    checks.push(Check::new("offdiag-decomposition", ok, detail));

    let mut ok = true;
    let mut detail = String::from("exact >= 0 on the grid");
    'outer: for p in 4..=12u64 {
        for d in 1..=p {
            for m in 2..=p {
                let params = RegimeParams::new(p, d, m).expect("grid in range");
                if exact_worst_case(&params) < Rational::from_integer(0.into()) {
                    ok = false;
                    detail = format!("negative value at (p,d,m)=({p},{d},{m})");
                    break 'outer;
                }
            }
        }
    }
    checks.push(Check::new("nonnegativity", ok, detail));

    checks
}

fn z_check(name: &str, est: &McEstimate, reference: f64, z_max: f64) -> Check {
    let z = est.z_score(reference);
    Check::new(
        name,
        z <= z_max,
        format!(
            "mc {:.6e} +- {:.2e} vs {:.6e} (z = {:.2})",
            est.mean, est.stderr, reference, z
        ),
    )
}

/// Monte Carlo validation of the lemma closed forms, the vanishing cross
/// term, and two auxiliary bilinear expectations.
pub fn lemmas(seed: u64) -> Result<Vec<Check>> {
    let mut checks = Vec::new();
    let trials = 100_000;

    let params = RegimeParams::new(10, 4, 3).expect("valid");
    let diag = to_f64(&lemma_diag(&params));
    let est = mc_forgetting_term(10, 4, 3, 1, 1, trials, seed)?;
    checks.push(z_check("lemma-diag-mc", &est, diag, 3.0));

    let off = to_f64(&lemma_offdiag(&params).expect("d >= 2"));
    let est = mc_forgetting_term(10, 4, 3, 1, 2, trials, seed.wrapping_add(1))?;
    checks.push(z_check("lemma-offdiag-mc", &est, off, 3.0));

    let est = mc_cross_term(10, 5, 4, 1, 2, 3, trials, seed.wrapping_add(2))?;
    checks.push(z_check("vanishing-cross-term", &est, 0.0, 3.0));

    // E[||u_a||^2 (u_b^T v_b)^2] = (p-m) m (m+2) / ((p-1)p(p+2)(p+4)) at (9, 4)
    let expr = BilinearExpr::new(vec![
        BilinearFactor::new(VecSym::U, BlockOp::HeadIdentity, VecSym::U),
        BilinearFactor::new(VecSym::U, BlockOp::TailIdentity, VecSym::V),
        BilinearFactor::new(VecSym::U, BlockOp::TailIdentity, VecSym::V),
    ])?;
    let est = mc_bilinear_expectation(&expr, 9, 4, trials, seed.wrapping_add(3))?;
    checks.push(z_check(
        "bilinear-head-norm-tail-sq",
        &est,
        (5.0 * 4.0 * 6.0) / (8.0 * 9.0 * 11.0 * 13.0),
        3.0,
    ));

    // E[(u_a^T Qm v_a)^2] = (mp + m - 2)/((p-1)p(p+2)) at (8, 3)
    let expr = BilinearExpr::new(vec![
        BilinearFactor::new(VecSym::U, BlockOp::QmBlock, VecSym::V),
        BilinearFactor::new(VecSym::U, BlockOp::QmBlock, VecSym::V),
    ])?;
    let est = mc_bilinear_expectation(&expr, 8, 3, trials, seed.wrapping_add(4))?;
    checks.push(z_check(
        "bilinear-rotated-head-sq",
        &est,
        (3.0 * 8.0 + 3.0 - 2.0) / (7.0 * 8.0 * 10.0),
        3.0,
    ));

    // odd number of Qm factors vanishes
    let expr = BilinearExpr::new(vec![
        BilinearFactor::new(VecSym::U, BlockOp::QmBlock, VecSym::U),
        BilinearFactor::new(VecSym::U, BlockOp::QmBlock, VecSym::U),
        BilinearFactor::new(VecSym::V, BlockOp::QmBlock, VecSym::V),
    ])?;
    let est = mc_bilinear_expectation(&expr, 7, 3, trials, seed.wrapping_add(5))?;
    checks.push(z_check("bilinear-odd-qm-vanishes", &est, 0.0, 3.0));

    Ok(checks)
}

/// One Monte Carlo cell of the saturation sweep.
#[derive(Debug, Clone, Serialize)]
pub struct SaturationCell {
    pub p: u64,
    pub d: u64,
    pub m: u64,
    pub analytic: f64,
    pub mc_mean: f64,
    pub mc_stderr: f64,
    pub z: f64,
}

/// MC forgetting on bound-saturating instances over a (d, m) grid, with
/// the exact closed form as reference.
pub fn saturation_cells(
    p: u64,
    ds: &[u64],
    ms: &[u64],
    trials: u64,
    seed: u64,
) -> Result<Vec<SaturationCell>> {
    let mut cells = Vec::new();
    for (di, &d) in ds.iter().enumerate() {
        // instance stream disjoint from the trial streams 0..trials
        let mut inst_rng = trial_rng(seed, u64::MAX - di as u64);
        let base = ProblemInstance::worst_case(p as usize, d as usize, 0, 1.0, &mut inst_rng)?;
        for &m in ms {
            let inst = ProblemInstance::new(base.x().clone(), base.wstar().clone(), m as usize)?;
            let est = mc_expected_forgetting(&inst, trials, seed, true)?;
            let analytic = to_f64(&exact_worst_case(&RegimeParams::new(p, d, m)?));
            cells.push(SaturationCell {
                p,
                d,
                m,
                analytic,
                mc_mean: est.mean,
                mc_stderr: est.stderr,
                z: est.z_score(analytic),
            });
        }
    }
    Ok(cells)
}

/// Desk-scale saturation run: p = 100, d in {1, 50, 99}, m in
/// {2, 10, ..., 100}, 1000 trials per cell. Every cell must sit within
/// 4 standard errors of the closed form and at least 95% within 3.
pub fn saturation(seed: u64) -> Result<Vec<Check>> {
    let ms: Vec<u64> = std::iter::once(2).chain((1..=10).map(|k| 10 * k)).collect();
    let cells = saturation_cells(100, &[1, 50, 99], &ms, 1000, seed)?;
    let mut checks = Vec::new();
    for c in &cells {
        checks.push(Check::new(
            format!("cell-p{}-d{}-m{}", c.p, c.d, c.m),
            c.z <= 4.0,
            format!(
                "mc {:.5} +- {:.5} vs exact {:.5} (z = {:.2})",
                c.mc_mean, c.mc_stderr, c.analytic, c.z
            ),
        ));
    }
    let within3 = cells.iter().filter(|c| c.z <= 3.0).count();
    checks.push(Check::new(
        "coverage-3-sigma",
        within3 as f64 >= 0.95 * cells.len() as f64,
        format!("{within3}/{} cells within 3 standard errors", cells.len()),
    ));
    Ok(checks)
}
