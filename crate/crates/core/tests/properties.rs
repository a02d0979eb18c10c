use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use projection_bandits::decision_set::{
    finite_argmax, select_independent_subset, EntropyBall, FiniteSet, DEFAULT_BALL_TOL,
};
use projection_bandits::environment::{Arm, Environment};
use projection_bandits::linalg::{min_eigen_in_span, Projector, RidgeState};
use projection_bandits::policy::{EpsilonSchedule, ScheduleKind};

fn uniform(rng: &mut ChaCha8Rng, r: usize, c: usize) -> DMatrix<f64> {
    DMatrix::from_fn(r, c, |_, _| rng.random_range(-1.0..1.0))
}

fn uniform_vec(rng: &mut ChaCha8Rng, d: usize) -> DVector<f64> {
    DVector::from_fn(d, |_, _| rng.random_range(-1.0..1.0))
}

// ---- oracles -------------------------------------------------------------

/// Orthonormal basis by modified Gram–Schmidt with reorthogonalization.
fn gram_schmidt(vectors: &[DVector<f64>]) -> Vec<DVector<f64>> {
    let mut q: Vec<DVector<f64>> = Vec::new();
    for v in vectors {
        let mut r = v.clone();
        for _ in 0..2 {
            for b in &q {
                r -= b * b.dot(&r);
            }
        }
        let n = r.norm();
        if n > 1e-9 * v.norm().max(1e-300) {
            q.push(r / n);
        }
    }
    q
}

/// Cyclic Jacobi eigenvalues of a small symmetric matrix.
fn jacobi_eigenvalues(mut a: DMatrix<f64>) -> Vec<f64> {
    let n = a.nrows();
    for _sweep in 0..100 {
        let mut off = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    off += a[(i, j)] * a[(i, j)];
                }
            }
        }
        if off < 1e-30 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if a[(p, q)].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * a[(p, q)]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = c * akp - s * akq;
                    a[(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = c * apk - s * aqk;
                    a[(q, k)] = s * apk + c * aqk;
                }
            }
        }
    }
    (0..n).map(|i| a[(i, i)]).collect()
}

fn xlogx(x: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x * x.ln()
    }
}

/// Roots of `x log x = r` on the decreasing branch `[0, 1/e]` and the
/// increasing branch `[1/e, ∞)`; `None` if `r < -1/e`.
fn xlogx_roots(r: f64) -> Option<(f64, f64)> {
    let inv_e = (-1.0f64).exp();
    if r < -inv_e {
        return None;
    }
    let bisect = |mut lo: f64, mut hi: f64, increasing: bool| {
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if (xlogx(mid) < r) == increasing {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    };
    let low = if r >= 0.0 { 0.0 } else { bisect(0.0, inv_e, false) };
    let mut hi = 2.0;
    while xlogx(hi) < r {
        hi *= 2.0;
    }
    let high = bisect(inv_e, hi.max(1.0), true);
    Some((low, high))
}

/// Best objective over the 2-D entropy ball by a grid on `x₁` with the exact
/// best `x₂` per grid point, then a refined grid around the winner.
fn grid_oracle_2d(c: [f64; 2], budget: f64) -> f64 {
    let (_, x1_max) = xlogx_roots(budget + (-1.0f64).exp()).unwrap();
    let value_at = |x1: f64| -> Option<f64> {
        let (lo, hi) = xlogx_roots(budget - xlogx(x1))?;
        let x2 = if c[1] > 0.0 {
            hi
        } else if c[1] < 0.0 {
            lo
        } else {
            hi
        };
        Some(c[0] * x1 + c[1] * x2)
    };
    let scan = |a: f64, b: f64, n: usize| {
        let mut best = (f64::NEG_INFINITY, a);
        for i in 0..=n {
            let x1 = a + (b - a) * i as f64 / n as f64;
            if let Some(v) = value_at(x1) {
                if v > best.0 {
                    best = (v, x1);
                }
            }
        }
        best
    };
    let (_, x1) = scan(0.0, x1_max, 20_000);
    let h = x1_max / 20_000.0;
    scan((x1 - 2.0 * h).max(0.0), (x1 + 2.0 * h).min(x1_max), 20_000).0
}

// ---- projectors ------------------------------------------------------------

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn projector_identities_on_random_bases(seed in any::<u64>(), d in 2usize..=13, frac in 0.0f64..1.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let u = 1 + ((d - 1) as f64 * frac) as usize;
        let a = uniform(&mut rng, d, u);
        let p = Projector::from_basis(&a).unwrap();
        let m = p.matrix();
        prop_assert!((m - m.transpose()).amax() <= 1e-10);
        prop_assert!((m * m - m).amax() <= 1e-8);
        prop_assert!((m.trace() - u as f64).abs() <= 1e-8);
        prop_assert_eq!(p.subspace_dim(), u);
        // same subspace as an orthonormal basis built independently
        let cols: Vec<_> = a.column_iter().map(|c| c.into_owned()).collect();
        let q = gram_schmidt(&cols);
        let mut oracle = DMatrix::zeros(d, d);
        for b in &q {
            oracle += b * b.transpose();
        }
        prop_assert!((m - oracle).amax() <= 1e-8);
    }

    #[test]
    fn projector_fixes_its_range_and_kills_the_complement(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = uniform(&mut rng, 7, 3);
        let p = Projector::from_basis(&a).unwrap();
        prop_assert!((p.matrix() * &a - &a).amax() <= 1e-9);
        let x = uniform_vec(&mut rng, 7);
        let residual = &x - p.project(&x);
        prop_assert!((a.transpose() * residual).amax() <= 1e-9);
    }
}

#[test]
fn diagonal_projector_keeps_leading_coordinates() {
    let p = Projector::diagonal(10, 5).unwrap();
    let mut want = DMatrix::zeros(10, 10);
    for i in 0..5 {
        want[(i, i)] = 1.0;
    }
    assert_eq!(p.matrix(), &want);
}

#[test]
fn dependent_basis_is_rejected() {
    let a = DMatrix::from_column_slice(3, 2, &[1.0, 2.0, 3.0, 2.0, 4.0, 6.0]);
    assert!(Projector::from_basis(&a).is_err());
}

// ---- ridge ---------------------------------------------------------------

proptest! {
    #![proptest_config(ProptestConfig::with_cases(60))]

    #[test]
    fn ridge_incremental_matches_batch(seed in any::<u64>(), d in 1usize..=13, lambda in 0.1f64..5.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut state = RidgeState::new(d, lambda).unwrap();
        let mut xs = Vec::new();
        let mut rs = Vec::new();
        for _ in 0..50 {
            let x = uniform_vec(&mut rng, d);
            let r: f64 = rng.random_range(-2.0..2.0);
            state.update(&x, r);
            xs.push(x);
            rs.push(r);
        }
        let mut v = DMatrix::<f64>::identity(d, d) * lambda;
        let mut b = DVector::<f64>::zeros(d);
        for (x, &r) in xs.iter().zip(&rs) {
            for i in 0..d {
                b[i] += r * x[i];
                for j in 0..d {
                    v[(i, j)] += x[i] * x[j];
                }
            }
        }
        let batch = v.clone().lu().solve(&b).unwrap();
        prop_assert!((state.theta_hat() - &batch).amax() <= 1e-8);
        prop_assert!((state.v() - &v).amax() <= 1e-10);
        prop_assert!((state.v_inv() * &v - DMatrix::<f64>::identity(d, d)).amax() <= 1e-8);
    }
}

#[test]
fn ridge_stays_accurate_across_refactorizations() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let d = 6;
    let mut state = RidgeState::new(d, 1.0).unwrap();
    let mut v = DMatrix::<f64>::identity(d, d);
    let mut b = DVector::<f64>::zeros(d);
    for _ in 0..2000 {
        let x = uniform_vec(&mut rng, d);
        let r: f64 = rng.random_range(-1.0..1.0);
        state.update(&x, r);
        v += &x * x.transpose();
        b += &x * r;
    }
    let batch = v.lu().solve(&b).unwrap();
    assert!((state.theta_hat() - batch).amax() <= 1e-8);
    assert!(state.inverse_residual() <= 1e-8);
}

// ---- eigenvalue on a span ------------------------------------------------

proptest! {
    #![proptest_config(ProptestConfig::with_cases(60))]

    #[test]
    fn min_eigen_in_span_matches_dense_oracle(seed in any::<u64>(), d in 2usize..=10, frac in 0.0f64..1.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let k = 1 + ((d - 1) as f64 * frac) as usize;
        let gen = uniform(&mut rng, d, k);
        let span: Vec<_> = gen.column_iter().map(|c| c.into_owned()).collect();
        // a PSD matrix supported on the span plus weight outside it that must be ignored
        let w = uniform(&mut rng, k, k);
        let inner = &w * w.transpose() + DMatrix::<f64>::identity(k, k) * 0.1;
        let m_span = &gen * inner * gen.transpose();
        let got = min_eigen_in_span(&m_span, &span).unwrap();
        let q = gram_schmidt(&span);
        let qm = DMatrix::from_columns(&q);
        let reduced = qm.transpose() * &m_span * &qm;
        let want = jacobi_eigenvalues(reduced).into_iter().fold(f64::INFINITY, f64::min);
        prop_assert!((got - want).abs() <= 1e-8 * want.abs().max(1.0), "{} vs {}", got, want);
    }
}

#[test]
fn min_eigen_of_identity_on_full_span_is_one() {
    let basis: Vec<_> = (0..4)
        .map(|i| DVector::from_fn(4, |j, _| if i == j { 1.0 } else { 0.0 }))
        .collect();
    let got = min_eigen_in_span(&DMatrix::identity(4, 4), &basis).unwrap();
    assert!((got - 1.0).abs() < 1e-12);
}

// ---- decision sets ---------------------------------------------------------

#[test]
fn independent_subset_examples() {
    let e = |v: &[f64]| DVector::from_column_slice(v);
    let basis = vec![e(&[1.0, 0.0, 0.0]), e(&[0.0, 1.0, 0.0]), e(&[0.0, 0.0, 1.0])];
    assert_eq!(select_independent_subset(&basis), (3, vec![0, 1, 2]));
    let dep = vec![e(&[1.0, 0.0]), e(&[2.0, 0.0]), e(&[0.0, 1.0])];
    assert_eq!(select_independent_subset(&dep), (2, vec![0, 2]));
}

#[test]
fn random_arms_span_the_space() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..20 {
        let arms: Vec<_> = (0..45).map(|_| uniform_vec(&mut rng, 10)).collect();
        let (k, idx) = select_independent_subset(&arms);
        assert_eq!(k, 10);
        let kept = DMatrix::from_columns(&idx.iter().map(|&i| arms[i].clone()).collect::<Vec<_>>());
        let det = (kept.transpose() * &kept).determinant();
        assert!(det > 1e-12, "Gram determinant {det}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn finite_argmax_matches_brute_force_and_is_scale_invariant(seed in any::<u64>(), s in 0.01f64..100.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let arms: Vec<_> = (0..45).map(|_| uniform_vec(&mut rng, 10)).collect();
        let c = uniform_vec(&mut rng, 10);
        let set = FiniteSet::new(arms.clone()).unwrap();
        let got = finite_argmax(&set, &c);
        let mut best = 0;
        let mut best_v = f64::NEG_INFINITY;
        for (i, a) in arms.iter().enumerate() {
            let v: f64 = (0..10).map(|j| a[j] * c[j]).sum();
            if v > best_v {
                best_v = v;
                best = i;
            }
        }
        prop_assert_eq!(got, best);
        prop_assert_eq!(finite_argmax(&set, &(&c * s)), got);
    }
}

#[test]
fn finite_argmax_breaks_ties_by_lowest_index() {
    let a = DVector::from_column_slice(&[0.5, 0.5]);
    let set = FiniteSet::new(vec![DVector::from_column_slice(&[0.0, 0.1]), a.clone(), a]).unwrap();
    assert_eq!(finite_argmax(&set, &DVector::from_column_slice(&[1.0, 1.0])), 1);
}

#[test]
fn entropy_ball_scalar_case() {
    let ball = EntropyBall::new(1, 5.0).unwrap();
    let x = ball.linear_max(&DVector::from_element(1, 1.0), DEFAULT_BALL_TOL).unwrap();
    let (_, want) = xlogx_roots(5.0).unwrap();
    assert!((x[0] - want).abs() < 1e-6);
    assert!((x[0] - 3.7687).abs() < 1e-4);
}

#[test]
fn entropy_ball_symmetric_case() {
    let ball = EntropyBall::new(2, 5.0).unwrap();
    let c = DVector::from_element(2, 1.0);
    let x = ball.linear_max(&c, DEFAULT_BALL_TOL).unwrap();
    let (_, want) = xlogx_roots(2.5).unwrap();
    assert!((x[0] - x[1]).abs() < 1e-9);
    assert!((x[0] - want).abs() < 1e-6);
    assert!((x[0] - 2.609).abs() < 2e-3);
    let gap = grid_oracle_2d([1.0, 1.0], 5.0) - c.dot(&x);
    assert!((-1e-6..=1e-3).contains(&gap), "gap {gap}");
}

#[test]
fn entropy_ball_zero_objective_gives_interior_point() {
    let ball = EntropyBall::new(3, 5.0).unwrap();
    let x = ball.linear_max(&DVector::zeros(3), DEFAULT_BALL_TOL).unwrap();
    let e = (-1.0f64).exp();
    assert!(x.iter().all(|&v| (v - e).abs() < 1e-15));
    assert!(ball.contains(&x, 0.0));
}

#[test]
fn entropy_ball_rejects_non_finite_objectives() {
    let ball = EntropyBall::new(2, 5.0).unwrap();
    assert!(ball
        .linear_max(&DVector::from_column_slice(&[f64::NAN, 1.0]), DEFAULT_BALL_TOL)
        .is_err());
}

#[test]
fn entropy_ball_standard_basis_is_feasible_and_independent() {
    let ball = EntropyBall::new(4, 5.0).unwrap();
    assert_eq!(ball.dk_arms().len(), 4);
    for (i, e) in ball.dk_arms().iter().enumerate() {
        assert!(ball.contains(e, 0.0));
        assert_eq!(e[i], 1.0);
        assert_eq!(e.sum(), 1.0);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn entropy_ball_maximizer_matches_grid_oracle(c0 in -1.0f64..1.0, c1 in -1.0f64..1.0) {
        prop_assume!(c0.abs().max(c1.abs()) > 1e-3);
        let ball = EntropyBall::new(2, 5.0).unwrap();
        let c = DVector::from_column_slice(&[c0, c1]);
        let x = ball.linear_max(&c, DEFAULT_BALL_TOL).unwrap();
        prop_assert!(ball.contains(&x, DEFAULT_BALL_TOL));
        let gap = grid_oracle_2d([c0, c1], 5.0) - c.dot(&x);
        prop_assert!(gap <= 1e-3, "gap {}", gap);
        prop_assert!(gap >= -1e-6, "maximizer beats the oracle by {}", -gap);
    }

    #[test]
    fn entropy_ball_kkt_and_boundary(seed in any::<u64>(), d in 1usize..=8) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let c = uniform_vec(&mut rng, d);
        prop_assume!(c.max() > 1e-3);
        let ball = EntropyBall::new(d, 5.0).unwrap();
        let x = ball.linear_max(&c, DEFAULT_BALL_TOL).unwrap();
        let entropy = EntropyBall::entropy(&x).unwrap();
        prop_assert!((entropy - 5.0).abs() <= DEFAULT_BALL_TOL);
        // c_i = μ (1 + log x_i) with a common multiplier
        let i = c.imax();
        let mu = c[i] / (1.0 + x[i].ln());
        prop_assert!(mu > 0.0);
        for j in 0..d {
            prop_assert!((c[j] - mu * (1.0 + x[j].ln())).abs() <= 10.0 * DEFAULT_BALL_TOL);
        }
    }
}

// ---- schedules -------------------------------------------------------------

#[test]
fn schedule_exact_values() {
    let cases = [
        (ScheduleKind::Finite, 1.0, 5, 3, 1.0),
        (ScheduleKind::Finite, 1.0, 5, 100, 0.05),
        (ScheduleKind::Infinite, 1.0, 5, 1000, 0.5),
        (ScheduleKind::Smooth, 1.0, 5, 10_000, 0.05),
        (ScheduleKind::Finite, 1.0, 10, 1, 1.0),
    ];
    for (kind, alpha, k, t, want) in cases {
        let got = EpsilonSchedule::new(kind, alpha, k).unwrap().value(t).unwrap();
        assert!((got - want).abs() < 1e-15, "{kind:?} α={alpha} k={k} t={t}: {got}");
    }
    assert!(EpsilonSchedule::new(ScheduleKind::Finite, 1.0, 5).unwrap().value(0).is_err());
    assert!(EpsilonSchedule::new(ScheduleKind::Finite, 0.0, 5).is_err());
}

proptest! {
    #[test]
    fn finite_schedule_sum_lower_bound(alpha in 0.1f64..3.0, k in 1usize..=13, extra in 0u64..5000) {
        let s = EpsilonSchedule::new(ScheduleKind::Finite, alpha, k).unwrap();
        let t = (alpha * k as f64).ceil() as u64 + extra;
        let t = t.max(1);
        let sum: f64 = (1..=t).map(|i| s.value(i).unwrap()).sum();
        let ak = alpha * k as f64;
        let bound = ak / 2.0 * (((t + 1) as f64) * std::f64::consts::E / (ak + 2.0)).ln();
        prop_assert!(sum >= bound - 1e-9, "sum {} < bound {}", sum, bound);
    }
}

// ---- reward decomposition --------------------------------------------------

#[test]
fn reward_decomposes_into_projection_and_corruption() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let d = rng.random_range(2..=13);
        let u = rng.random_range(1..d);
        let p = Projector::from_basis(&uniform(&mut rng, d, u)).unwrap();
        let theta = uniform_vec(&mut rng, d);
        let env = match Environment::synthetic(theta.clone(), p.clone(), 0.5, (d as f64).sqrt()) {
            Ok(env) => env,
            Err(_) => continue,
        };
        let arm = Arm::point(uniform_vec(&mut rng, d));
        let proj_direct = p.project(&arm.vector).dot(&p.project(&theta));
        let total = env.expected_return(&arm);
        let split = env.projection_reward(&arm) + env.corruption(&arm).unwrap();
        worst = worst
            .max((total - split).abs())
            .max((env.projection_reward(&arm) - proj_direct).abs());
    }
    assert!(worst <= 1e-8, "worst deviation {worst}");
}
