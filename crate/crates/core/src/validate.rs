//! Quick numerical self-checks of the core kernels.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::decision_set::{EntropyBall, DEFAULT_BALL_TOL};
use crate::environment::{Arm, Environment};
use crate::linalg::{min_eigen_in_span, Projector, RidgeState};
use crate::policy::{EpsilonSchedule, ScheduleKind};

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &'static str, passed: bool, detail: String) -> Check {
    Check { name, passed, detail }
}

fn uniform(rng: &mut ChaCha8Rng, r: usize, c: usize) -> DMatrix<f64> {
    DMatrix::from_fn(r, c, |_, _| rng.random_range(-1.0..1.0))
}

fn projectors(rng: &mut ChaCha8Rng) -> Check {
    let mut worst = (0.0f64, 0.0f64, 0.0f64);
    let mut ok = true;
    for _ in 0..100 {
        let d = rng.random_range(1..=13);
        let u = rng.random_range(1..=d);
        let p = match Projector::from_basis(&uniform(rng, d, u)) {
            Ok(p) => p,
            Err(_) => continue,
        };
        let r = p.residuals();
        ok &= r.within_tolerance();
        worst = (worst.0.max(r.symmetry), worst.1.max(r.idempotence), worst.2.max(r.trace));
    }
    check(
        "projector identities",
        ok,
        format!("max symmetry {:.1e}, idempotence {:.1e}, trace {:.1e}", worst.0, worst.1, worst.2),
    )
}

fn ridge(rng: &mut ChaCha8Rng) -> Check {
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let d = rng.random_range(1..=13);
        let mut state = RidgeState::new(d, 1.0).expect("positive lambda");
        let mut v = DMatrix::<f64>::identity(d, d);
        let mut b = DVector::<f64>::zeros(d);
        for _ in 0..50 {
            let x = uniform(rng, d, 1).column(0).into_owned();
            let r: f64 = rng.random_range(-1.0..1.0);
            state.update(&x, r);
            v += &x * x.transpose();
            b += &x * r;
        }
        let batch = v.lu().solve(&b).expect("ridge matrix is invertible");
        worst = worst.max((state.theta_hat() - batch).amax());
    }
    check("ridge incremental vs batch", worst <= 1e-8, format!("max deviation {worst:.1e}"))
}

fn entropy_ball() -> Check {
    let one = EntropyBall::new(1, 5.0).expect("valid ball");
    let x1 = one.linear_max(&DVector::from_element(1, 1.0), DEFAULT_BALL_TOL);
    let two = EntropyBall::new(2, 5.0).expect("valid ball");
    let x2 = two.linear_max(&DVector::from_element(2, 1.0), DEFAULT_BALL_TOL);
    match (x1, x2) {
        (Ok(x1), Ok(x2)) => {
            let ok = (x1[0] - 3.7687).abs() < 1e-3
                && (x2[0] - 2.609).abs() < 1e-3
                && (x2[0] - x2[1]).abs() < 1e-9;
            check(
                "entropy ball maximizer",
                ok,
                format!("d=1: {:.4}, d=2: ({:.4}, {:.4})", x1[0], x2[0], x2[1]),
            )
        }
        (a, b) => check("entropy ball maximizer", false, format!("{a:?} / {b:?}")),
    }
}

fn schedules() -> Check {
    let cases = [
        (ScheduleKind::Finite, 1.0, 10, 100, 0.1),
        (ScheduleKind::Finite, 1.0, 10, 5, 1.0),
        (ScheduleKind::Infinite, 0.01, 4, 1000, 0.004),
        (ScheduleKind::Smooth, 0.01, 4, 10_000, 0.0004),
    ];
    let mut worst = 0.0f64;
    for (kind, alpha, k, t, want) in cases {
        let got = EpsilonSchedule::new(kind, alpha, k)
            .and_then(|s| s.value(t))
            .unwrap_or(f64::NAN);
        worst = worst.max((got - want).abs());
    }
    check("exploration schedules", worst <= 1e-12, format!("max deviation {worst:.1e}"))
}

fn span_eigen(rng: &mut ChaCha8Rng) -> Check {
    // rank-deficient Gram matrices: the smallest eigenvalue on the span of the
    // generating vectors equals the smallest eigenvalue of XᵀX
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let d = rng.random_range(2..=10);
        let k = rng.random_range(1..=d);
        let x = uniform(rng, d, k);
        let m = &x * x.transpose();
        let span: Vec<_> = x.column_iter().map(|c| c.into_owned()).collect();
        let want = (x.transpose() * &x).symmetric_eigenvalues().min();
        match min_eigen_in_span(&m, &span) {
            Ok(got) => worst = worst.max((got - want).abs()),
            Err(e) => return check("eigenvalue on span", false, e.to_string()),
        }
    }
    check("eigenvalue on span", worst <= 1e-8, format!("max deviation {worst:.1e}"))
}

fn decomposition(rng: &mut ChaCha8Rng) -> Check {
    let mut worst = 0.0f64;
    let mut draws = 0;
    while draws < 1000 {
        let d = rng.random_range(2..=13);
        let u = rng.random_range(1..d);
        let Ok(p) = Projector::from_basis(&uniform(rng, d, u)) else { continue };
        let theta = uniform(rng, d, 1).column(0).into_owned();
        let Ok(env) = Environment::synthetic(theta, p, 0.0, (d as f64).sqrt()) else { continue };
        let arm = Arm::point(uniform(rng, d, 1).column(0).into_owned());
        let split = env.projection_reward(&arm) + env.corruption(&arm).unwrap_or(f64::NAN);
        worst = worst.max((env.expected_return(&arm) - split).abs());
        draws += 1;
    }
    check(
        "reward decomposition",
        worst <= 1e-8,
        format!("max deviation {worst:.1e} over {draws} draws"),
    )
}

/// Run every self-check with a fixed seed.
pub fn run_self_checks(seed: u64) -> Vec<Check> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    vec![
        projectors(&mut rng),
        ridge(&mut rng),
        entropy_ball(),
        schedules(),
        span_eigen(&mut rng),
        decomposition(&mut rng),
    ]
}
