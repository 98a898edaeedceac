use super::*;
use crate::rational::{int, ratio};
use crate::rng::trial_rng;
use rand::seq::SliceRandom;

fn pm(rows: &[&[u32]]) -> PowerMatrix {
    PowerMatrix::new(rows.iter().map(|r| r.to_vec()).collect()).unwrap()
}

#[test]
fn parse_and_errors() {
    assert_eq!(PowerMatrix::parse("1,0;4,6").unwrap(), pm(&[&[1, 0], &[4, 6]]));
    match PowerMatrix::parse("1,,2").unwrap_err() {
        Error::Parse { offset, .. } => assert_eq!(offset, 2),
        other => panic!("unexpected: {other}"),
    }
    assert!(PowerMatrix::parse("1,2;3").is_err());
    assert!(PowerMatrix::parse("").is_err());
}

#[test]
fn odd_vanishing_detection() {
    assert!(is_odd_vanishing(&pm(&[&[1, 0], &[4, 6]])));
    assert!(!is_odd_vanishing(&pm(&[&[1, 1], &[1, 1]])));
    assert!(!is_odd_vanishing(&pm(&[&[2]])));
}

#[test]
fn canonicalize_examples() {
    // rows sorted descending
    assert_eq!(canonicalize(&pm(&[&[0, 2], &[6, 4]])), pm(&[&[6, 4], &[0, 2]]));
    // transpose maps to the same key
    let m = pm(&[&[0, 2], &[6, 4]]);
    assert_eq!(canonicalize(&m), canonicalize(&m.transpose()));
    // idempotence
    let c = canonicalize(&pm(&[&[2, 0], &[0, 2], &[1, 1], &[1, 1]]));
    assert_eq!(canonicalize(&c), c);
    // zero rows and columns are stripped
    assert_eq!(
        canonicalize(&pm(&[&[0, 2, 0], &[0, 4, 0]])),
        canonicalize(&pm(&[&[4], &[2]]))
    );
}

#[test]
fn moment_keys_quotient_the_symmetry_group() {
    let m = pm(&[&[0, 2], &[6, 4]]);
    let key = MomentKey::new(&m, 9);
    assert_eq!(key, MomentKey::new(&m.transpose(), 9));
    assert_eq!(canonicalize(key.matrix()), *key.matrix());
    assert_eq!(key.p(), 9);
    assert_ne!(key, MomentKey::new(&m, 10));
    let swapped = pm(&[&[6, 4], &[0, 2]]);
    assert_eq!(key, MomentKey::new(&swapped, 9));
}

#[test]
fn one_vector_closed_forms() {
    assert_eq!(one_vector_integral(&[4], 4), ratio(1, 8));
    for p in [4u64, 7, 25] {
        let pf = p as i64;
        assert_eq!(one_vector_integral(&[4], p), ratio(3, pf * (pf + 2)));
        assert_eq!(one_vector_integral(&[2, 2], p), ratio(1, pf * (pf + 2)));
        assert_eq!(one_vector_integral(&[2], p), ratio(1, pf));
    }
    assert_eq!(one_vector_integral(&[3, 1], 5), int(0));
}

#[test]
fn monomial_expectation_examples() {
    assert_eq!(
        monomial_expectation(&pm(&[&[4, 4]]), 4).unwrap(),
        ratio(9, 1920)
    );
    for p in [4i64, 6, 10] {
        assert_eq!(
            monomial_expectation(&pm(&[&[4, 4]]), p as u64).unwrap(),
            ratio(9, p * (p + 2) * (p + 4) * (p + 6))
        );
        assert_eq!(
            monomial_expectation(&pm(&[&[1, 1], &[1, 1]]), p as u64).unwrap(),
            ratio(-1, (p - 1) * p * (p + 2))
        );
        assert_eq!(
            monomial_expectation(&pm(&[&[2, 0], &[0, 2], &[1, 1], &[1, 1]]), p as u64).unwrap(),
            ratio(-(p + 3), (p - 1) * p * (p + 1) * (p + 2) * (p + 4) * (p + 6))
        );
    }
}

#[test]
fn odd_vanishing_is_exact_zero() {
    assert_eq!(monomial_expectation(&pm(&[&[1, 0], &[4, 6]]), 9).unwrap(), int(0));
    assert_eq!(monomial_expectation(&pm(&[&[2, 1], &[0, 1]]), 6).unwrap(), int(0));
}

#[test]
fn invariance_under_permutations_and_transpose() {
    let base = pm(&[&[2, 2, 0], &[0, 1, 1], &[0, 1, 1]]);
    let p = 8;
    let want = monomial_expectation(&base, p).unwrap();
    let mut rng = trial_rng(17, 0);
    let mut cache = MomentCache::new();
    for _ in 0..20 {
        let mut row_idx: Vec<usize> = (0..base.n_rows()).collect();
        let mut col_idx: Vec<usize> = (0..base.n_cols()).collect();
        row_idx.shuffle(&mut rng);
        col_idx.shuffle(&mut rng);
        let rows: Vec<Vec<u32>> = row_idx
            .iter()
            .map(|&i| col_idx.iter().map(|&j| base.entry(i, j)).collect())
            .collect();
        let perm = PowerMatrix::new(rows).unwrap();
        assert_eq!(cache.expectation(&perm, p).unwrap(), want);
        assert_eq!(cache.expectation(&perm.transpose(), p).unwrap(), want);
    }
}

#[test]
fn closure_identity_all_small_p() {
    for p in 2..=30u64 {
        let lhs = monomial_expectation(&pm(&[&[4]]), p).unwrap()
            + int(p as i64 - 1) * monomial_expectation(&pm(&[&[2], &[2]]), p).unwrap();
        assert_eq!(lhs, ratio(1, p as i64), "p={p}");
    }
}

#[test]
fn squared_norm_moments() {
    assert_eq!(squared_norm_moment(9, 4, 1).unwrap(), ratio(4, 9));
    assert_eq!(
        squared_norm_moment(9, 4, 4).unwrap(),
        ratio(4, 9) * ratio(6, 11) * ratio(8, 13) * ratio(10, 15)
    );
    for n in 1..=5 {
        assert_eq!(squared_norm_moment(7, 7, n).unwrap(), int(1));
    }
    assert!(squared_norm_moment(5, 6, 1).is_err());
    assert!(squared_norm_moment(5, 0, 1).is_err());
}

/// ||u_a||^{2n} expands into monomial expectations for n <= 2.
#[test]
fn squared_norm_matches_monomial_expansion() {
    for (p, m) in [(5u64, 2u64), (9, 4), (12, 12)] {
        let n1 = int(m as i64) * monomial_expectation(&pm(&[&[2]]), p).unwrap();
        assert_eq!(squared_norm_moment(p, m, 1).unwrap(), n1);
        let n2 = int(m as i64) * monomial_expectation(&pm(&[&[4]]), p).unwrap()
            + int((m * (m - 1)) as i64) * monomial_expectation(&pm(&[&[2], &[2]]), p).unwrap();
        assert_eq!(squared_norm_moment(p, m, 2).unwrap(), n2);
    }
}

#[test]
fn degree_budget_is_enforced() {
    let big = pm(&[&[10, 8]]);
    assert!(matches!(
        monomial_expectation(&big, 20),
        Err(Error::BudgetExceeded { degree: 18, .. })
    ));
    assert!(MomentCache::with_budget(18).expectation(&big, 20).is_ok());
}

#[test]
fn dimension_checks() {
    assert!(matches!(
        monomial_expectation(&pm(&[&[2], &[2], &[2]]), 2),
        Err(Error::InvalidDimension(_))
    ));
    assert!(matches!(
        mc_monomial_expectation(&pm(&[&[2, 2]]), 1, 100, 0),
        Err(Error::InvalidDimension(_))
    ));
}

#[test]
fn golden_table_is_complete_and_holds_at_p4() {
    let table = golden_identities();
    assert!(table.len() >= 50, "only {} identities", table.len());
    let mut cache = MomentCache::new();
    for id in table {
        let p = id.min_p();
        assert_eq!(
            cache.expectation(&id.matrix, p).unwrap(),
            id.value(p),
            "matrix {:?} at p={p}",
            id.matrix
        );
    }
}

#[test]
fn mc_spot_checks() {
    // <[[2]]> = 1/7 at p=7
    let est = mc_monomial_expectation(&pm(&[&[2]]), 7, 20_000, 5).unwrap();
    assert!(est.z_score(1.0 / 7.0) <= 3.0, "z={}", est.z_score(1.0 / 7.0));

    // <[[4]]> = 3/120 at p=10
    let est = mc_monomial_expectation(&pm(&[&[4]]), 10, 20_000, 6).unwrap();
    assert!(est.z_score(0.025) <= 3.0, "z={}", est.z_score(0.025));

    // odd-vanishing monomial
    let est = mc_monomial_expectation(&pm(&[&[1, 0], &[4, 6]]), 10, 20_000, 7).unwrap();
    assert!(est.z_score(0.0) <= 3.0, "z={}", est.z_score(0.0));
}

#[test]
fn bilinear_head_norm_times_tail_product() {
    // E[||u_a||^2 (u_b^T v_b)^2] = (p-m) m (m+2) / ((p-1)p(p+2)(p+4))
    let (p, m) = (9usize, 4usize);
    let expr = BilinearExpr::new(vec![
        BilinearFactor::new(VecSym::U, BlockOp::HeadIdentity, VecSym::U),
        BilinearFactor::new(VecSym::U, BlockOp::TailIdentity, VecSym::V),
        BilinearFactor::new(VecSym::U, BlockOp::TailIdentity, VecSym::V),
    ])
    .unwrap();
    let exact = (5.0 * 4.0 * 6.0) / (8.0 * 9.0 * 11.0 * 13.0);
    let est = mc_bilinear_expectation(&expr, p, m, 40_000, 11).unwrap();
    assert!(est.z_score(exact) <= 3.0, "z={}", est.z_score(exact));
}

#[test]
fn bilinear_rotated_head_form() {
    // E[(u_a^T Qm v_a)^2] = (mp + m - 2) / ((p-1)p(p+2))
    let (p, m) = (8usize, 3usize);
    let expr = BilinearExpr::new(vec![
        BilinearFactor::new(VecSym::U, BlockOp::QmBlock, VecSym::V),
        BilinearFactor::new(VecSym::U, BlockOp::QmBlock, VecSym::V),
    ])
    .unwrap();
    let exact = (3.0 * 8.0 + 3.0 - 2.0) / (7.0 * 8.0 * 10.0);
    let est = mc_bilinear_expectation(&expr, p, m, 40_000, 12).unwrap();
    assert!(est.z_score(exact) <= 3.0, "z={}", est.z_score(exact));
}

#[test]
fn bilinear_odd_qm_count_vanishes() {
    let expr = BilinearExpr::new(vec![
        BilinearFactor::new(VecSym::U, BlockOp::QmBlock, VecSym::U),
        BilinearFactor::new(VecSym::U, BlockOp::QmBlock, VecSym::U),
        BilinearFactor::new(VecSym::V, BlockOp::QmBlock, VecSym::V),
    ])
    .unwrap();
    assert_eq!(expr.qm_factor_count(), 3);
    let est = mc_bilinear_expectation(&expr, 7, 3, 40_000, 13).unwrap();
    assert!(est.z_score(0.0) <= 3.0, "z={}", est.z_score(0.0));
}

#[test]
fn bilinear_rejects_malformed() {
    assert!(BilinearExpr::new(vec![]).is_err());
    let expr = BilinearExpr::new(vec![BilinearFactor::new(
        VecSym::X,
        BlockOp::FullIdentity,
        VecSym::X,
    )])
    .unwrap();
    assert!(mc_bilinear_expectation(&expr, 3, 1, 100, 0).is_err());
    let qm = BilinearExpr::new(vec![BilinearFactor::new(
        VecSym::U,
        BlockOp::QmBlock,
        VecSym::U,
    )])
    .unwrap();
    assert!(mc_bilinear_expectation(&qm, 5, 0, 100, 0).is_err());
    assert!(mc_bilinear_expectation(&qm, 5, 6, 100, 0).is_err());
}
