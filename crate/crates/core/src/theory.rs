//! Exact and asymptotic closed forms for the worst-case expected
//! forgetting.
//!
//! The exact expression and the two lemma terms it assembles from are
//! rational functions of `(p, d, m)` with large cancelling terms; all
//! evaluation here is exact rational arithmetic over coefficient tables
//! shipped in `data/theory_polys.txt`. Two independent transcriptions (the
//! assembled expression and the lemma pair) are kept and tested against
//! each other, so a typo in either is caught exactly.

use std::collections::HashMap;
use std::sync::OnceLock;

use num::bigint::BigInt;
use num::One;

use crate::poly::Poly;
use crate::rational::Rational;
use crate::{Error, Result};

const TABLE_SRC: &str = include_str!("../data/theory_polys.txt");

struct Tables {
    sections: HashMap<String, HashMap<String, Poly>>,
}

fn tables() -> &'static Tables {
    static TABLES: OnceLock<Tables> = OnceLock::new();
    TABLES.get_or_init(|| {
        let mut sections: HashMap<String, HashMap<String, Poly>> = HashMap::new();
        let mut current = String::new();
        for (lineno, raw) in TABLE_SRC.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if let Some(name) = line.strip_prefix('[').and_then(|s| s.strip_suffix(']')) {
                current = name.to_string();
                sections.entry(current.clone()).or_default();
                continue;
            }
            let (key, expr) = line
                .split_once('=')
                .unwrap_or_else(|| panic!("theory_polys.txt line {}: missing '='", lineno + 1));
            let poly = Poly::parse(expr.trim()).unwrap_or_else(|e| {
                panic!("theory_polys.txt line {}: {e}", lineno + 1);
            });
            let key = key.trim();
            const KNOWN: [&str; 10] = [
                "denom", "denom_base", "value", "base", "dminus1", "dminus1_d", "d^0", "d^1",
                "d^2", "d^3",
            ];
            if !KNOWN.contains(&key) {
                panic!("theory_polys.txt line {}: unknown key '{key}'", lineno + 1);
            }
            sections
                .get_mut(&current)
                .unwrap_or_else(|| panic!("theory_polys.txt line {}: no section", lineno + 1))
                .insert(key.to_string(), poly);
        }
        Tables { sections }
    })
}

impl Tables {
    fn poly(&self, section: &str, key: &str) -> &Poly {
        self.sections
            .get(section)
            .and_then(|s| s.get(key))
            .unwrap_or_else(|| panic!("theory_polys.txt: missing [{section}] {key}"))
    }
}

/// Validated parameter triple for the closed forms: `p >= 4`,
/// `1 <= d <= p`, `2 <= m <= p`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RegimeParams {
    p: u64,
    d: u64,
    m: u64,
}

impl RegimeParams {
    pub fn new(p: u64, d: u64, m: u64) -> Result<Self> {
        if p < 4 {
            return Err(Error::InvalidArgument(format!(
                "closed forms require p >= 4, got p={p}"
            )));
        }
        if d < 1 || d > p {
            return Err(Error::InvalidArgument(format!(
                "need 1 <= d <= p, got d={d}, p={p}"
            )));
        }
        if m < 2 || m > p {
            return Err(Error::InvalidArgument(format!(
                "closed forms require 2 <= m <= p, got m={m}, p={p}"
            )));
        }
        Ok(RegimeParams { p, d, m })
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    pub fn d(&self) -> u64 {
        self.d
    }

    pub fn m(&self) -> u64 {
        self.m
    }

    /// Task-dissimilarity proxy `m/p`.
    pub fn alpha(&self) -> f64 {
        self.m as f64 / self.p as f64
    }

    /// Overparameterization proxy `1 - d/p`.
    pub fn beta(&self) -> f64 {
        1.0 - self.d as f64 / self.p as f64
    }
}

/// Evaluate `sum_k d^k * poly_k(p, m) / denom(p)` from a table section
/// whose keys are `d^0, d^1, ...` plus `denom`.
fn eval_d_graded(section: &str, params: &RegimeParams) -> Rational {
    let t = tables();
    let p = BigInt::from(params.p);
    let m = BigInt::from(params.m);
    let d = BigInt::from(params.d);
    let mut num = BigInt::from(0);
    let mut dpow = BigInt::one();
    for k in 0..=3u32 {
        let key = format!("d^{k}");
        if let Some(poly) = t.sections.get(section).and_then(|s| s.get(&key)) {
            num += poly.eval(&p, &m) * &dpow;
        }
        dpow *= &d;
    }
    let den = t.poly(section, "denom").eval(&p, &m);
    Rational::new(num, den)
}

/// Exact normalized worst-case expected forgetting.
pub fn exact_worst_case(params: &RegimeParams) -> Rational {
    eval_d_graded("full", params)
}

/// Exact diagonal lemma term `E (e_1^T O^T P (I-O) e_1)^2`.
pub fn lemma_diag(params: &RegimeParams) -> Rational {
    eval_d_graded("diag", params)
}

/// Exact off-diagonal lemma term `E (e_1^T O^T P (I-O) e_2)^2`.
///
/// Undefined for `d < 2` (there is no second in-rank direction).
pub fn lemma_offdiag(params: &RegimeParams) -> Result<Rational> {
    if params.d < 2 {
        return Err(Error::InvalidArgument(
            "off-diagonal term needs d >= 2".into(),
        ));
    }
    Ok(eval_d_graded("offdiag", params))
}

/// The three summands of the diagonal lemma, combined as
/// `lemma_diag = terms[0] - 2*terms[1] + terms[2]`.
pub fn lemma_diag_terms(params: &RegimeParams) -> [Rational; 3] {
    let t = tables();
    let p = BigInt::from(params.p);
    let m = BigInt::from(params.m);
    let d = BigInt::from(params.d);

    let term1 = Rational::new(
        t.poly("diag_term1", "value").eval(&p, &m),
        t.poly("diag_term1", "denom").eval(&p, &m),
    );
    let term2 = eval_d_graded("diag_term2", params);
    let base = Rational::new(
        t.poly("diag_term3", "base").eval(&p, &m),
        t.poly("diag_term3", "denom_base").eval(&p, &m),
    );
    let dm1 = Rational::from_integer(&d - BigInt::one());
    let dr = Rational::from_integer(d);
    let tail_den = t.poly("diag_term3", "denom").eval(&p, &m);
    let tail = (dm1.clone() * Rational::from_integer(t.poly("diag_term3", "dminus1").eval(&p, &m))
        + dm1 * dr * Rational::from_integer(t.poly("diag_term3", "dminus1_d").eval(&p, &m)))
        / Rational::from_integer(tail_den);
    [term1, term2, base + tail]
}

/// The three summands of the off-diagonal lemma, combined as
/// `lemma_offdiag = terms[0] - 2*terms[1] + terms[2]`.
pub fn lemma_offdiag_terms(params: &RegimeParams) -> Result<[Rational; 3]> {
    if params.d < 2 {
        return Err(Error::InvalidArgument(
            "off-diagonal term needs d >= 2".into(),
        ));
    }
    let t = tables();
    let p = BigInt::from(params.p);
    let m = BigInt::from(params.m);
    let term1 = Rational::new(
        t.poly("offdiag_term1", "value").eval(&p, &m),
        t.poly("offdiag_term1", "denom").eval(&p, &m),
    );
    let term2 = eval_d_graded("offdiag_term2", params);
    let term3 = eval_d_graded("offdiag_term3", params);
    Ok([term1, term2, term3])
}

/// Leading-order normalized worst-case expected forgetting in the
/// proxies `alpha = m/p`, `beta = 1 - d/p`:
///
/// `alpha * (2 + beta*(a^3-6a^2+11a-8) + beta^2*(-5a^3+22a^2-30a+12)
///           + beta^3*(5a^3-18a^2+20a-6))`.
///
/// `beta = 1` is accepted as the `d/p -> 0` limit even though finite `p`
/// forces `beta < 1`.
pub fn asymptotic_worst_case(alpha: f64, beta: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "alpha must be in (0, 1], got {alpha}"
        )));
    }
    if !(0.0..=1.0).contains(&beta) {
        return Err(Error::InvalidArgument(format!(
            "beta must be in [0, 1], got {beta}"
        )));
    }
    let a = alpha;
    let a2 = a * a;
    let a3 = a2 * a;
    let b = beta;
    let b2 = b * b;
    let b3 = b2 * b;
    let c1 = a3 - 6.0 * a2 + 11.0 * a - 8.0;
    let c2 = -5.0 * a3 + 22.0 * a2 - 30.0 * a + 12.0;
    let c3 = 5.0 * a3 - 18.0 * a2 + 20.0 * a - 6.0;
    Ok(a * (2.0 + b * c1 + b2 * c2 + b3 * c3))
}

/// Highly overparameterized limit (`beta -> 1`): `alpha^2 (1-alpha)^2`.
pub fn extremal_overparam(alpha: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::InvalidArgument(format!(
            "alpha must be in [0, 1], got {alpha}"
        )));
    }
    Ok(alpha * alpha * (1.0 - alpha) * (1.0 - alpha))
}
