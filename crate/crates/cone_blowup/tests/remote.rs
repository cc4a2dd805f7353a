mod common;

use std::f64::consts::{FRAC_1_SQRT_2, SQRT_2};
use std::sync::Arc;

use cone_blowup::remote::*;
use cone_blowup::self_similar::SelfSimilarProfile;
use cone_blowup::Config;
use common::rel_close;

const NU: f64 = FRAC_1_SQRT_2;

fn profile_with_delta(delta: f64) -> SelfSimilarProfile {
    SelfSimilarProfile { config: Config { delta, ..Config::default() }, ..common::self_similar().clone() }
}

fn remote() -> RemoteProfile {
    build_remote(common::self_similar(), 800).unwrap()
}

#[test]
fn mu_from_surviving_branch() {
    let ss = common::self_similar();
    let mu = mu_coefficients(ss);
    for (m, o) in mu.iter().zip(&ss.orders) {
        assert_eq!(m.mu0, o.a_plus);
        assert!(rel_close(m.mu1, (NU * m.k as f64 + 4.0) * o.a_plus / SQRT_2, 1e-15));
    }
    // 𝔤₁ ~ d₂ |√2 ρ|^{3ν} near the origin
    let d2 = common::ground_state().d(2);
    assert!(rel_close(mu[0].mu1, d2 * SQRT_2.powf(3.0 * NU), 1e-12));
}

#[test]
fn cauchy_data_support_and_origin_behavior() {
    let ss = common::self_similar();
    let grid = Arc::new(remote_grid(0.1, 600).unwrap());
    let (g0, g1) = cauchy_data(ss, 0.1, grid).unwrap();
    assert_eq!(g0.max_abs_on(0.2, 1.0), 0.0);
    assert_eq!(g1.max_abs_on(0.2, 1.0), 0.0);
    let s1 = near_origin_slope(&g1, RHO_MIN, 0.025, NU).unwrap();
    assert!((s1 - 3.0 * NU).abs() < 0.02 * 3.0 * NU, "{s1}");
}

#[test]
fn slope_law_through_order_four() {
    let rp = remote();
    assert_eq!(rp.n(), 4);
    for (k, s) in rp.slope_fits.iter().enumerate() {
        let want = 1.0 - k as f64 + 3.0 * NU;
        assert!((s - want).abs() < 0.02 * want.abs(), "k={k}: {s} vs {want}");
    }
    assert_eq!(rp.max_beyond_support(), 0.0);
}

#[test]
fn leading_coefficients_follow_the_linear_wave() {
    // Near the origin the layers are the t-Taylor coefficients of
    // a⁺ (ρ + t/√2)^α / ρ³ with α = 3ν + 4.
    let rp = remote();
    let o3 = common::self_similar().order(3).unwrap();
    let rho = 1e-6;
    let g = rp.jets(rho).unwrap();
    for (k, gk) in g.iter().enumerate() {
        let binom = (0..k).fold(1.0, |acc, i| acc * (o3.alpha - i as f64) / (i + 1) as f64);
        let want = o3.a_plus * binom * 2f64.powf(-(k as f64) / 2.0) * rho.powf(3.0 * NU + 1.0 - k as f64);
        assert!(rel_close(gk.value(), want, 1e-3), "k={k}: {} vs {want}", gk.value());
    }
}

#[test]
fn recursion_matches_direct_substitution() {
    let rp = remote();
    for rho in [0.002, 0.03, 0.12, 0.17, 0.199] {
        let a = layer_jets(NU, &rp.mu, rp.delta, 4, rho).unwrap();
        let b = layer_jets_by_substitution(NU, &rp.mu, rp.delta, 4, rho).unwrap();
        for k in 0..=4 {
            for m in 0..3 {
                let (x, y) = (a[k].deriv(m), b[k].deriv(m));
                assert!((x - y).abs() <= 1e-9 * (1.0 + y.abs()), "rho={rho} k={k} m={m}: {x} vs {y}");
            }
        }
    }
}

#[test]
fn formal_solution_residual_vanishes() {
    let rp = remote();
    for &rho in rp.grid.nodes().iter().step_by(20) {
        let g = rp.jets(rho).unwrap();
        let res = pde_residual_series(&g, rho, 3).unwrap();
        let scale: f64 = g.iter().map(|j| j.value().abs()).sum::<f64>() / rho.powi(2) + 1.0;
        for (j, r) in res.iter().enumerate() {
            assert!(r.value().abs() < 1e-10 * scale, "rho={rho} t^{j}: {}", r.value());
        }
    }
}

#[test]
fn recurse_g_reproduces_stored_layers() {
    let rp = remote();
    let g3 = recurse_g(3, &rp).unwrap();
    assert_eq!(g3.values, rp.g_layers[3].values);
    assert!(matches!(recurse_g(1, &rp), Err(cone_blowup::Error::MissingLayer(_))));
    assert!(matches!(recurse_g(6, &rp), Err(cone_blowup::Error::MissingLayer(_))));
}

#[test]
fn zero_lower_layers_give_zero() {
    let g = layer_jets(NU, &[], 0.1, 4, 0.05).unwrap();
    assert!(g.iter().all(|j| j.c.iter().all(|&v| v == 0.0)));
    let rp = RemoteProfile { mu: vec![], ..remote() };
    let v = assemble_out(&rp, 0.05, 50).unwrap();
    for (y, val) in v.nodes().iter().zip(&v.values) {
        assert!((y - val).abs() <= 1e-12 * y);
    }
}

#[test]
fn u_check_matches_direct_formula() {
    let rp = remote();
    let rho = rp.delta;
    let g = rp.jets(rho).unwrap();
    let uc = u_check(&g, rho, 1).unwrap();
    let g0 = g[0].value();
    assert!(rel_close(uc[0].value(), g0 / (1.0 + g0 / rho), 1e-14));
}

#[test]
fn denominator_stays_above_guard_for_large_delta() {
    // 2 + 2x + x² = 1 + (1 + x)² never drops below one for real 𝔤₀'
    let rp = build_remote(&profile_with_delta(1.0), 400).unwrap();
    assert!(rp.g_layers.iter().all(|g| g.values.iter().all(|v| v.is_finite())));
}

#[test]
fn outer_profile_close_to_ground_state_in_delta() {
    // sup |∂_y(V_out − Q)| / δ^{3ν} stays bounded as δ shrinks
    let gs = common::ground_state();
    let t = 2e-4;
    let normalized: Vec<f64> = [0.1, 0.05, 0.025, 0.0125]
        .iter()
        .map(|&delta: &f64| {
            let rp = build_remote(&profile_with_delta(delta), 600).unwrap();
            let v = assemble_out(&rp, t, 400).unwrap();
            let sup = v
                .nodes()
                .iter()
                .zip(v.d1().unwrap())
                .map(|(&y, d)| (d - gs.eval3(y).1).abs())
                .fold(0.0, f64::max);
            sup / delta.powf(3.0 * NU)
        })
        .collect();
    let hi = normalized.iter().cloned().fold(0.0, f64::max);
    let lo = normalized.iter().cloned().fold(f64::INFINITY, f64::min);
    assert!(lo > 0.0 && hi / lo < 2.0, "{normalized:?}");
}
