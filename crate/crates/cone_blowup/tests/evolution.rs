mod common;

use std::f64::consts::FRAC_1_SQRT_2;
use std::sync::Arc;

use cone_blowup::evolution::*;
use cone_blowup::inner::rescaled_residual;
use cone_blowup::numerics::{RadialGrid, SampledCurve};
use cone_blowup::Error;

const NU: f64 = FRAC_1_SQRT_2;

fn grid(r: f64, n: usize) -> Arc<RadialGrid> {
    Arc::new(cell_centered_grid(r, n).unwrap())
}

fn cfg(r: f64, parity: OriginParity) -> SchemeConfig {
    SchemeConfig { cfl: 0.4, outer_radius: r, parity }
}

fn sup_diff(a: &SampledCurve, b: &SampledCurve) -> f64 {
    a.values.iter().zip(&b.values).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn static_q(r: f64, n: usize) -> EvolutionState {
    let gs = common::ground_state();
    EvolutionState::from_fn(0.0, grid(r, n), |x| (gs.q(x), 0.0)).unwrap()
}

/// `Q` plus an outgoing-ish velocity bump supported well inside `[0, r]`.
fn perturbed(r: f64, n: usize, a: f64) -> EvolutionState {
    let gs = common::ground_state();
    EvolutionState::from_fn(0.0, grid(r, n), |x| {
        let z = x / a;
        (a * gs.q(z), 0.1 * (-(z - 1.5).powi(2) / 0.1).exp())
    })
    .unwrap()
}

#[test]
fn cone_has_zero_residual() {
    let g = Arc::new(RadialGrid::uniform(0.1, 3.0, 300).unwrap());
    let u = SampledCurve::from_fn(g.clone(), |x| x).unwrap();
    let z = SampledCurve::from_fn(g, |_| 0.0).unwrap();
    let r = residual_nw(&u, &z, &z).unwrap();
    assert!(r.values.iter().all(|v| v.abs() < 1e-9));
}

#[test]
fn ground_state_residual_is_stencil_small_and_forms_agree() {
    let gs = common::ground_state();
    let mut last = f64::INFINITY;
    for n in [400, 800] {
        let g = Arc::new(RadialGrid::uniform(0.2, 5.0, n).unwrap());
        let u = SampledCurve::from_fn(g.clone(), |x| gs.q(x)).unwrap();
        let z = SampledCurve::from_fn(g, |_| 0.0).unwrap();
        let a = residual_nw(&u, &z, &z).unwrap();
        let b = residual_divergence(&u, &z, &z).unwrap();
        let inner = |c: &SampledCurve| c.max_abs_on(0.3, 4.9);
        assert!(inner(&a) < 1e-5, "{}", inner(&a));
        assert!(inner(&a) < last);
        last = inner(&a);
        // the two forms differ only by stencil error
        let gap = a.values.iter().zip(&b.values).zip(a.nodes()).filter(|(_, &x)| x > 0.3 && x < 4.9);
        let gap = gap.map(|((p, q), _)| (p - q).abs()).fold(0.0, f64::max);
        assert!(gap < 1e-4, "{gap}");
    }
}

#[test]
fn divergence_form_agrees_on_moving_data() {
    let g = Arc::new(RadialGrid::uniform(0.5, 2.5, 2000).unwrap());
    let u = SampledCurve::from_fn(g.clone(), |x| x + 0.3 * (-x * x).exp()).unwrap();
    let ut = SampledCurve::from_fn(g.clone(), |x| 0.2 * (x - 1.0).sin()).unwrap();
    let utt = SampledCurve::from_fn(g, |x| 0.1 * x.cos()).unwrap();
    let a = residual_nw(&u, &ut, &utt).unwrap();
    let b = residual_divergence(&u, &ut, &utt).unwrap();
    for (i, &x) in a.nodes().iter().enumerate() {
        if x > 0.6 && x < 2.4 {
            assert!((a.values[i] - b.values[i]).abs() < 1e-5 * (1.0 + a.values[i].abs()), "{x}");
        }
    }
}

#[test]
fn self_similar_ansatz_residual_is_the_static_rescaled_residual() {
    let gs = common::ground_state();
    let t = 0.1f64;
    let p = NU + 1.0;
    let sc = t.powf(p);
    let g = Arc::new(RadialGrid::uniform(0.05 * sc, 6.0 * sc, 3000).unwrap());
    let u = SampledCurve::from_fn(g.clone(), |x| sc * gs.q(x / sc)).unwrap();
    let ut = SampledCurve::from_fn(g.clone(), |x| {
        let (q, dq, _) = gs.eval3(x / sc);
        p * t.powf(NU) * (q - x / sc * dq)
    })
    .unwrap();
    let utt = SampledCurve::from_fn(g, |x| {
        let y = x / sc;
        let (q, dq, ddq) = gs.eval3(y);
        p * t.powf(NU - 1.0) * (NU * (q - y * dq) + p * y * y * ddq)
    })
    .unwrap();
    let r = residual_nw(&u, &ut, &utt).unwrap();
    let s = t.powf(2.0 * NU);
    for (i, &x) in r.nodes().iter().enumerate().skip(2).take(2990) {
        let y = x / sc;
        let (q, dq, ddq) = gs.eval3(y);
        let want = rescaled_residual(NU, s, y, &[[q - y, dq - 1.0, ddq]]);
        let got = sc * r.values[i];
        assert!((got - want).abs() < 1e-4 * (1.0 + want.abs()), "y={y}: {got} vs {want}");
    }
}

#[test]
fn residual_rejects_non_positive_u() {
    let g = Arc::new(RadialGrid::uniform(0.1, 1.0, 20).unwrap());
    let u = SampledCurve::from_fn(g.clone(), |x| x - 0.5).unwrap();
    let z = SampledCurve::from_fn(g, |_| 0.0).unwrap();
    assert!(matches!(residual_nw(&u, &z, &z), Err(Error::NonPositiveU { .. })));
}

#[test]
fn cone_is_an_exact_fixed_point() {
    let s = EvolutionState::from_fn(0.0, grid(2.0, 200), |x| (x, 0.0)).unwrap();
    let tr = evolve(&s, 1.0, &cfg(2.0, OriginParity::Odd), 4).unwrap();
    let last = tr.snapshots.last().unwrap();
    assert_eq!(last.t, 1.0);
    assert_eq!(sup_diff(&last.u, &s.u), 0.0);
    assert!(last.u_t.values.iter().all(|&v| v == 0.0));
}

#[test]
fn ground_state_is_a_fixed_point_at_second_order() {
    let errs: Vec<f64> = [200, 400, 800]
        .iter()
        .map(|&n| {
            let s = static_q(4.0, n);
            let tr = evolve(&s, 1.0, &cfg(4.0, OriginParity::Even), 1).unwrap();
            sup_diff(&tr.snapshots.last().unwrap().u, &s.u)
        })
        .collect();
    assert!(errs[2] < 1e-4, "{errs:?}");
    for w in errs.windows(2) {
        let ratio = w[0] / w[1];
        assert!(ratio > 3.0 && ratio < 5.5, "{errs:?}");
    }
}

#[test]
fn scaling_equivariance() {
    // u_a(t, ρ) = a u(t/a, ρ/a): the a = 1/2 run on the halved grid reproduces
    // the a = 1 run node by node.
    let (r, n) = (4.0, 400);
    let big = evolve(&perturbed(r, n, 1.0), 1.0, &cfg(r, OriginParity::Even), 1).unwrap();
    let small = evolve(&perturbed(r / 2.0, n, 0.5), 0.5, &cfg(r / 2.0, OriginParity::Even), 1).unwrap();
    let (b, s) = (big.snapshots.last().unwrap(), small.snapshots.last().unwrap());
    assert_eq!(big.steps, small.steps);
    for i in 0..n {
        assert!((0.5 * b.u.values[i] - s.u.values[i]).abs() < 1e-10);
        assert!((b.u_t.values[i] - s.u_t.values[i]).abs() < 1e-9);
    }
}

#[test]
fn reversal_error_is_second_order() {
    let errs: Vec<f64> = [200, 400]
        .iter()
        .map(|&n| {
            let s = perturbed(4.0, n, 1.0);
            let c = cfg(4.0, OriginParity::Even);
            let fwd = evolve(&s, 0.5, &c, 1).unwrap();
            let back = evolve(fwd.snapshots.last().unwrap(), 0.0, &c, 1).unwrap();
            sup_diff(&back.snapshots.last().unwrap().u, &s.u)
        })
        .collect();
    let ratio = errs[0] / errs[1];
    assert!(errs[1] < 1e-3 && ratio > 3.0, "{errs:?}");
}

#[test]
fn snapshots_include_both_ends() {
    let s = static_q(2.0, 100);
    let tr = evolve(&s, 0.3, &cfg(2.0, OriginParity::Even), 5).unwrap();
    assert_eq!(tr.snapshots.first().unwrap().t, 0.0);
    assert_eq!(tr.snapshots.last().unwrap().t, 0.3);
    assert_eq!(tr.snapshots.len(), tr.monitors.len());
    assert!(tr.snapshots.len() >= 5);
    assert!(tr.dt > 0.0 && (tr.dt * tr.steps as f64 - 0.3).abs() < 1e-12);
}

#[test]
fn violations_are_reported() {
    let g = grid(1.0, 50);
    let fast = EvolutionState::from_fn(0.0, g.clone(), |x| (x, 2.0));
    assert!(matches!(fast, Err(Error::HyperbolicityLoss { .. })));
    let low = EvolutionState::from_fn(0.0, g.clone(), |x| (x - 0.5, 0.0));
    assert!(matches!(low, Err(Error::PositivityLoss { .. })));
    let s = EvolutionState::from_fn(0.0, g, |x| (x, 0.0)).unwrap();
    let bad = SchemeConfig { cfl: 1.2, ..cfg(1.0, OriginParity::Odd) };
    assert!(matches!(evolve(&s, 0.1, &bad, 1), Err(Error::CflViolation { .. })));
    let wrong_radius = cfg(2.0, OriginParity::Odd);
    assert!(matches!(evolve(&s, 0.1, &wrong_radius, 1), Err(Error::InvalidConfig(_))));
}

#[test]
fn collapsing_velocity_loses_hyperbolicity_during_the_run() {
    // A strong inward velocity pulse focuses at the origin.
    let s = EvolutionState::from_fn(0.0, grid(2.0, 400), |x| (x + 0.5, 0.9 * (-(x - 1.0).powi(2) / 0.02).exp())).unwrap();
    let r = evolve(&s, 2.0, &cfg(2.0, OriginParity::Even), 1);
    assert!(matches!(r, Err(Error::HyperbolicityLoss { .. } | Error::PositivityLoss { .. })), "{r:?}");
}

#[test]
fn monitor_of_bumped_cone() {
    let s = EvolutionState::from_fn(0.0, grid(2.0, 200), |x| (x + 0.2 * (-(x - 1.0).powi(2)).exp(), 0.0)).unwrap();
    let m = blowup_monitor(&s).unwrap();
    assert!(m.inv_u.is_finite() && m.inv_u > 1.0);
    assert!(m.inv_timelike <= 1.0);
    assert!(m.max_derivative >= 1.0 && m.max_derivative < 2.0);
    let cone = EvolutionState::from_fn(0.0, grid(2.0, 200), |x| (x, 0.0)).unwrap();
    let m = blowup_monitor(&cone).unwrap();
    assert!((m.inv_u - 1.0 / 0.005).abs() < 1e-9);
    assert_eq!(m.max_derivative, 1.0);
}

#[test]
fn weighted_sobolev_of_known_function() {
    // f = 1 on [0, 1]: only the order-0 term survives.
    let x: Vec<f64> = (0..=2000).map(|i| i as f64 / 2000.0).collect();
    let f = vec![1.0; x.len()];
    let want: f64 = {
        let g: Vec<f64> = x.iter().map(|r| (1.0 + r * r).powf(1.5) * r.powi(3)).collect();
        cone_blowup::numerics::quad::cumulative(&x, &g).unwrap().last().copied().unwrap()
    };
    let got = weighted_sobolev(&x, &f, 2).unwrap();
    assert!((got - want.sqrt()).abs() < 1e-12);
    assert!(want > 0.25 && want < 0.25 * 2f64.powf(1.5));
}

#[test]
fn discrepancy_vanishes_at_the_initial_time() {
    let ca = common::composite(4);
    let t1 = 0.01;
    let s = EvolutionState::from_composite(&ca, t1, grid(0.05, 2000)).unwrap();
    let tr = Trajectory { snapshots: vec![s], monitors: vec![], dt: 0.0, steps: 0 };
    let d = track_discrepancy(&tr, &ca).unwrap();
    assert_eq!(d.len(), 1);
    assert_eq!(d[0].total, 0.0);
}

#[test]
fn concentration_of_exact_profile_is_zero() {
    let gs = common::ground_state();
    let t = 0.02f64;
    let sc = t.powf(NU + 1.0);
    let s = EvolutionState::from_fn(t, grid(0.02, 2000), |x| (sc * gs.q(x / sc), 0.0)).unwrap();
    assert!(concentration(&s, &gs, NU, 5.0) < 1e-12);
}

#[test]
fn composite_data_keep_self_similar_core_at_small_time() {
    let ca = common::composite(4);
    let t1 = 0.01f64;
    let s = EvolutionState::from_composite(&ca, t1, grid(0.05, 2000)).unwrap();
    let gs = common::ground_state();
    let c = concentration(&s, &gs, NU, 2.0);
    // blend-vs-ground-state deviation on the core is of order t^{2ν}
    assert!(c > 0.0 && c < 10.0 * t1.powf(2.0 * NU), "{c}");
}
