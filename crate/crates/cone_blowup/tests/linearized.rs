mod common;

use std::sync::Arc;

use cone_blowup::ground_state::{solve_ground_state, GroundStateOptions};
use cone_blowup::linearized::*;
use cone_blowup::numerics::SampledCurve;
use proptest::prelude::*;

fn spectral() -> &'static SpectralForm {
    static SF: std::sync::OnceLock<SpectralForm> = std::sync::OnceLock::new();
    SF.get_or_init(|| spectral_form(&common::ground_state()).unwrap())
}

fn table() -> &'static RayleighTable {
    static T: std::sync::OnceLock<RayleighTable> = std::sync::OnceLock::new();
    T.get_or_init(|| RayleighTable::new(&common::ground_state(), 60.0, 600).unwrap())
}

/// `ℒ(ΛQ)` with every derivative taken by grid stencils, over `[lo, hi]`.
fn annihilation_defect(nodes: usize, lo: f64, hi: f64) -> f64 {
    let gs = Arc::new(solve_ground_state(&GroundStateOptions { nodes, ..Default::default() }).unwrap());
    let op = LinearizedOperator::new(gs.clone()).unwrap();
    let lq = SampledCurve::from_fn(gs.curve.grid.clone(), |r| gs.lambda_q(r).0).unwrap();
    op.apply(&lq).unwrap().max_abs_on(lo, hi)
}

#[test]
fn coefficients_at_the_ends() {
    let op = common::operator();
    assert!((op.b0.values[0] - 3.0).abs() < 1e-6);
    let gs = &op.gs;
    let (q, dq, _) = gs.eval3(150.0);
    let (b0, b1) = coefficients(150.0, q, dq);
    assert!((150.0 * b1 - 3.0).abs() < 1e-3);
    assert!((150.0 * 150.0 * b0 - 6.0).abs() < 1e-3);
}

#[test]
fn lambda_q_is_annihilated_at_fourth_order() {
    let errs: Vec<f64> = [250, 500, 1000].iter().map(|&n| annihilation_defect(n, 0.01, 150.0)).collect();
    assert!(errs[2] < 1e-6, "{errs:?}");
    for w in errs.windows(2) {
        let order = (w[0] / w[1]).log2();
        assert!(order > 3.5, "{errs:?}");
    }
}

#[test]
fn zero_maps_to_zero() {
    let op = common::operator();
    let z = SampledCurve::from_fn(op.gs.curve.grid.clone(), |_| 0.0).unwrap();
    assert!(op.apply(&z).unwrap().values.iter().all(|&v| v == 0.0));
    assert!(op.duhamel_solve(&z, 0.0).unwrap().values.iter().all(|&v| v == 0.0));
}

#[test]
fn homogeneous_basis() {
    let op = common::operator();
    let (e1, e2) = op.homogeneous_basis().unwrap();
    assert!((e1.values[0] - 1.0).abs() < 1e-6);
    assert!(e2.eval(1.0).abs() < 1e-10);
    // e₂ solves ℒf = 0 under stencil differentiation, relative to its
    // natural second-derivative scale (|e₁| + |e₂|)/ρ²; below ρ = 0.1 the
    // geometric grid has h/ρ ≈ 0.1 and the stencils are not resolved
    let plain = |c: &SampledCurve| SampledCurve::new(c.grid.clone(), c.values.clone()).unwrap();
    let r2 = op.apply(&plain(&e2)).unwrap();
    for (i, &x) in r2.nodes().iter().enumerate() {
        if x > 0.1 && x < 150.0 && (x - 1.0).abs() > 0.05 {
            let scale = (e1.values[i].abs() + e2.values[i].abs()) / (x * x);
            assert!(r2.values[i].abs() < 1e-5 * (1.0 + scale), "{x}: {}", r2.values[i]);
        }
    }
    // e₂ ~ c/ρ² at the origin
    let slope = (e2.eval(4e-3).abs() / e2.eval(2e-3).abs()).ln() / 2f64.ln();
    assert!((slope + 2.0).abs() < 0.05, "{slope}");
}

#[test]
fn weighted_wronskian_is_constant() {
    // p (e₁e₂' − e₁'e₂) = 1 with derivatives from stencils on the raw values
    let op = common::operator();
    let (e1, e2) = op.homogeneous_basis().unwrap();
    let d = |c: &SampledCurve| SampledCurve::new(c.grid.clone(), c.values.clone()).unwrap().differentiated().unwrap();
    let (a, b) = (d(&e1), d(&e2));
    for (i, &x) in e1.nodes().iter().enumerate() {
        if x < 0.1 || x > 150.0 {
            continue;
        }
        let w = op.weight(x) * (a.values[i] * b.d1().unwrap()[i] - a.d1().unwrap()[i] * b.values[i]);
        assert!((w - 1.0).abs() < 1e-3, "{x}: {w}");
    }
}

#[test]
fn duhamel_recovers_manufactured_solution() {
    let op = common::operator();
    let grid = op.gs.curve.grid.clone();
    let exact = |y: f64| {
        let e = (-y).exp();
        [y * y * e, (2.0 * y - y * y) * e, (2.0 - 4.0 * y + y * y) * e]
    };
    let g = SampledCurve::from_fn(grid, |y| op.apply_at(y, exact(y))).unwrap();
    let f = op.duhamel_solve(&g, 0.0).unwrap();
    for (i, &y) in f.nodes().iter().enumerate() {
        if y > 40.0 {
            break;
        }
        assert!((f.values[i] - exact(y)[0]).abs() < 1e-8, "{y}: {} vs {}", f.values[i], exact(y)[0]);
    }
    // origin data f = O(ρ₀²), f' = O(ρ₀)
    let r0 = f.nodes()[0];
    assert!(f.values[0].abs() < 2.0 * r0 * r0 && f.d1().unwrap()[0].abs() < 4.0 * r0);
    // inversion through the stencil operator
    let plain = SampledCurve::new(f.grid.clone(), f.values.clone()).unwrap();
    let back = op.apply(&plain).unwrap();
    for (i, &y) in back.nodes().iter().enumerate() {
        if y > 0.01 && y < 40.0 {
            assert!((back.values[i] - g.values[i]).abs() < 1e-5, "{y}");
        }
    }
}

#[test]
fn duhamel_is_linear() {
    let op = common::operator();
    let grid = op.gs.curve.grid.clone();
    let g = SampledCurve::from_fn(grid.clone(), |y| (1.0 + y * y).recip()).unwrap();
    let g2 = SampledCurve::from_fn(grid, |y| 2.0 * (1.0 + y * y).recip()).unwrap();
    let (f, f2) = (op.duhamel_solve(&g, 0.0).unwrap(), op.duhamel_solve(&g2, 0.0).unwrap());
    for i in 0..f.len() {
        assert_eq!(2.0 * f.values[i], f2.values[i]);
    }
}

#[test]
fn potential_tail_and_closed_form() {
    let gs = common::ground_state();
    let p = spectral_at(&gs, 100.0).unwrap().potential;
    assert!((100.0 * 100.0 * p / -0.375 - 1.0).abs() < 0.01, "{}", 1e4 * p);
    for r in [0.05, 0.7, 3.0, 20.0, 90.0] {
        let a = spectral_at(&gs, r).unwrap().potential;
        let b = potential_closed_form(&gs, r).unwrap();
        assert!((a - b).abs() < 1e-9 * (1.0 + a.abs()), "{r}: {a} vs {b}");
    }
    let sf = spectral();
    assert!((sf.q.values[0] - 1.0).abs() < 1e-6);
    assert!(sf.h.values.iter().all(|&h| h > 0.0));
    assert!(sf.q.values.iter().all(|&q| q > 0.0 && q <= 1.0));
}

#[test]
fn zero_mode_is_annihilated() {
    let sf = spectral();
    let r = sf.apply(&sf.zero_mode).unwrap();
    let m = r.max_abs_on(0.01, 150.0);
    assert!(m < 1e-5, "{m}");
    assert!(sf.zero_mode.values.iter().all(|&g| g > 0.0));
}

#[test]
fn rayleigh_ratios() {
    let t = table();
    let single = t.ratio(|r| bump(r, 5.0, 2.0));
    assert!(single > 0.0);
    let scaled = t.ratio(|r| {
        let (v, d) = bump(r, 5.0, 2.0);
        (7.0 * v, 7.0 * d)
    });
    assert!((scaled / single - 1.0).abs() < 1e-12);
    let rep = coercivity_check(t, 50, 7).unwrap();
    assert_eq!(rep.ratios.len(), 50);
    assert!(rep.min_ratio > 0.0, "{}", rep.min_ratio);
    assert!(coercivity_check(t, 5, 7).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn coercive_for_any_seed(seed in any::<u64>()) {
        let rep = coercivity_check(table(), 10, seed).unwrap();
        prop_assert!(rep.min_ratio > 0.0);
    }

    #[test]
    fn rayleigh_ratio_is_scale_invariant(c in 2.0f64..30.0, w in 0.3f64..1.9, a in 0.1f64..50.0) {
        let t = table();
        let r1 = t.ratio(|r| bump(r, c, w));
        let r2 = t.ratio(|r| { let (v, d) = bump(r, c, w); (a * v, a * d) });
        prop_assert!((r1 / r2 - 1.0).abs() < 1e-12);
    }
}
