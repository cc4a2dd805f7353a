mod common;

use cone_blowup::ground_state::*;
use cone_blowup::Error;
use proptest::prelude::*;

/// Frozen from an independent fixed-step RK4 integration in `Q` (not the
/// excess) launched from the same seed, refined until 10 digits settle.
const D2: f64 = 0.7450604428;

/// Fixed-step classical RK4 in `(Q, Q')` from the seed at `r0` to `r1`.
fn rk4_profile(r0: f64, r1: f64, steps: usize) -> (f64, f64) {
    let seed = taylor_seed(8);
    let q0: f64 = seed.iter().enumerate().map(|(i, c)| c * r0.powi(i as i32)).sum();
    let dq0: f64 = seed.iter().enumerate().skip(1).map(|(i, c)| i as f64 * c * r0.powi(i as i32 - 1)).sum();
    let f = |r: f64, y: [f64; 2]| [y[1], profile_rhs(r, y[0], y[1])];
    let h = (r1 - r0) / steps as f64;
    let mut y = [q0, dq0];
    for i in 0..steps {
        let r = r0 + i as f64 * h;
        let k1 = f(r, y);
        let k2 = f(r + h / 2.0, [y[0] + h / 2.0 * k1[0], y[1] + h / 2.0 * k1[1]]);
        let k3 = f(r + h / 2.0, [y[0] + h / 2.0 * k2[0], y[1] + h / 2.0 * k2[1]]);
        let k4 = f(r + h, [y[0] + h * k3[0], y[1] + h * k3[1]]);
        for j in 0..2 {
            y[j] += h / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
        }
    }
    (y[0], y[1])
}

#[test]
fn seed_coefficients() {
    let c = taylor_seed(10);
    assert_eq!(c[0], 1.0);
    assert!((c[2] - 0.375).abs() < 1e-15);
    assert!(c.iter().skip(1).step_by(2).all(|&x| x == 0.0));
}

#[test]
fn launch_value_matches_seed() {
    let gs = common::ground_state();
    let r0 = gs.grid().origin_cutoff();
    assert!((gs.q(r0) - (1.0 + 0.375 * r0 * r0)).abs() < 1e-12);
}

#[test]
fn profile_lies_above_the_cone_and_is_convex() {
    let gs = common::ground_state();
    for (i, &r) in gs.grid().nodes().iter().enumerate() {
        assert!(gs.curve.values[i] > r);
        assert!(gs.curve.d2().unwrap()[i] > 0.0);
    }
    let (q, _, _) = gs.eval3(100.0);
    assert!((q / 100.0 - 1.0).abs() < 1e-3);
}

#[test]
fn agrees_with_independent_integration() {
    let gs = common::ground_state();
    let r0 = gs.grid().origin_cutoff();
    for r1 in [1.0, 5.0, 20.0] {
        let (q, dq) = rk4_profile(r0, r1, 40000);
        let (p, dp, _) = gs.eval3(r1);
        assert!((q - p).abs() < 1e-9, "{r1}: {q} vs {p}");
        assert!((dq - dp).abs() < 1e-9, "{r1}: {dq} vs {dp}");
    }
}

#[test]
fn tail_coefficients() {
    let gs = common::ground_state();
    assert!((gs.d2() - D2).abs() < 1e-8, "{}", gs.d2());
    assert!(!d4_flag(&gs.tail));
    let half = fit_ground_tail(&gs, gs.rho_max / 4.0, gs.rho_max / 2.0).unwrap();
    let d2 = half.coefficient(-2.0, 0).unwrap();
    assert!((d2 / gs.d2() - 1.0).abs() < 5e-3);
    // fitted tail reproduces the solved excess just inside the window
    let r = 1.5 * gs.tail.window.0;
    let (q, _, _) = gs.curve.eval3(r);
    assert!((gs.tail.eval(r) - (q - r)).abs() < 3.0 * gs.tail.residual.max(1e-14));
}

#[test]
fn lambda_q_is_positive_and_decreasing() {
    let gs = common::ground_state();
    let mut last = f64::INFINITY;
    for &r in gs.grid().nodes() {
        let (v, _) = gs.lambda_q(r);
        assert!(v > 0.0 && v < last);
        last = v;
    }
}

#[test]
fn solution_error_shrinks_with_tolerance() {
    // a coarse grid so that the step controller, not the node spacing, sets the error
    let gs = common::ground_state();
    let run = |tol: f64| solve_ground_state(&GroundStateOptions { tol, nodes: 100, ..Default::default() }).unwrap();
    let (loose, tight) = (run(1e-4), run(1e-8));
    assert!(loose.max_error_estimate <= 1e-4 && tight.max_error_estimate <= 1e-8);
    let err = |g: &GroundState| (g.q(20.0) - gs.q(20.0)).abs();
    assert!(err(&tight) < 0.1 * err(&loose), "{} {}", err(&tight), err(&loose));
    // residual of the stored second derivative against the equation, on the grid
    for (i, &r) in gs.grid().nodes().iter().enumerate() {
        let (q, dq, ddq) = (gs.curve.values[i], gs.curve.d1().unwrap()[i], gs.curve.d2().unwrap()[i]);
        assert!((ddq - profile_rhs(r, q, dq)).abs() < 1e-12 * (1.0 + ddq.abs()));
    }
}

#[test]
fn short_domain_is_rejected() {
    let r = solve_ground_state(&GroundStateOptions { rho_max: 10.0, ..Default::default() });
    assert!(matches!(r, Err(Error::InvalidConfig(_))));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn eval3_is_continuous_across_pieces(eps in 1e-9f64..1e-7) {
        let gs = common::ground_state();
        for x in [gs.grid().origin_cutoff(), gs.rho_max] {
            let a = gs.eval3(x - eps);
            let b = gs.eval3(x + eps);
            prop_assert!((b.0 - a.0 - 2.0 * eps * a.1).abs() < 1e-9);
            prop_assert!((a.1 - b.1).abs() < 1e-6);
        }
    }

    #[test]
    fn excess_matches_profile(r in 0.0f64..400.0) {
        let gs = common::ground_state();
        let (q, dq, ddq) = gs.eval3(r);
        let (w, dw, ddw) = gs.excess3(r);
        prop_assert!((q - r - w).abs() < 1e-11 * (1.0 + r));
        prop_assert!((dq - 1.0 - dw).abs() < 1e-11);
        prop_assert!((ddq - ddw).abs() < 1e-9);
    }
}
