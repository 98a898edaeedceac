//! The golden table: independently derived closed forms pinning the
//! recursive engine, shipped as reviewable plain text.

use std::sync::OnceLock;

use num::bigint::BigInt;

use crate::poly::Poly;
use crate::rational::Rational;

use super::PowerMatrix;

const TABLE_SRC: &str = include_str!("../../data/golden_tables.txt");

/// One record of `data/golden_tables.txt`: a power matrix and its exact
/// expectation `numerator(p) / denominator(p)`.
#[derive(Debug, Clone)]
pub struct GoldenIdentity {
    pub matrix: PowerMatrix,
    pub numerator: Poly,
    pub denominator: Poly,
}

impl GoldenIdentity {
    /// Closed-form value at a concrete dimension.
    pub fn value(&self, p: u64) -> Rational {
        let pb = BigInt::from(p);
        let zero = BigInt::from(0);
        Rational::new(self.numerator.eval(&pb, &zero), self.denominator.eval(&pb, &zero))
    }

    /// Smallest dimension at which the denominator is nonzero and the
    /// matrix fits.
    pub fn min_p(&self) -> u64 {
        let dims = self.matrix.n_rows().max(self.matrix.n_cols()) as u64;
        dims.max(4)
    }
}

/// All shipped identities, parsed once.
pub fn golden_identities() -> &'static [GoldenIdentity] {
    static TABLE: OnceLock<Vec<GoldenIdentity>> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut out = Vec::new();
        for (lineno, raw) in TABLE_SRC.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let mut parts = line.split('|');
            let (matrix, numerator, denominator) = (|| {
                let m = parts.next()?.trim();
                let num = parts.next()?.trim();
                let den = parts.next()?.trim();
                Some((m, num, den))
            })()
            .unwrap_or_else(|| panic!("golden_tables.txt line {}: need 3 fields", lineno + 1));
            let parse = |what: &str, src: &str| {
                Poly::parse(src)
                    .unwrap_or_else(|e| panic!("golden_tables.txt line {}: {what}: {e}", lineno + 1))
            };
            out.push(GoldenIdentity {
                matrix: PowerMatrix::parse(matrix).unwrap_or_else(|e| {
                    panic!("golden_tables.txt line {}: matrix: {e}", lineno + 1)
                }),
                numerator: parse("numerator", numerator),
                denominator: parse("denominator", denominator),
            });
        }
        out
    })
}
