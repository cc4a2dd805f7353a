mod common;

use std::f64::consts::FRAC_1_SQRT_2;
use std::sync::Arc;

use cone_blowup::inner::*;
use cone_blowup::numerics::fit::{fit_tail, BasisTerm};
use cone_blowup::numerics::{RadialGrid, SampledCurve};
use cone_blowup::{Config, Error};
use proptest::prelude::*;

const NU: f64 = FRAC_1_SQRT_2;

fn line_grid() -> Arc<RadialGrid> {
    Arc::new(RadialGrid::uniform(0.1, 5.0, 200).unwrap())
}

#[test]
fn gamma_of_linear_function() {
    let f = SampledCurve::from_fn3(line_grid(), |y| (y, 1.0, 0.0)).unwrap();
    for k in 0..4 {
        let g = gamma_apply(NU, k, &f).unwrap();
        for (i, &y) in g.nodes().iter().enumerate() {
            assert!((g.values[i] - 2.0 * NU * k as f64 * y).abs() < 1e-13);
        }
    }
}

#[test]
fn gamma_of_profile_at_origin() {
    let gs = common::ground_state();
    let g = gamma_apply(NU, 0, &gs.curve).unwrap();
    assert!((g.values[0] - (1.0 + NU)).abs() < 1e-5);
}

#[test]
fn first_source_at_origin_and_tail() {
    let ip = common::inner();
    let f1 = &ip.sources[0];
    assert!((f1.values[0] - NU * (1.0 + NU)).abs() < 1e-4);
    // F₁ ~ c y⁻² with a vanishing y⁻⁴ slot, stable under a change of window
    let basis: Vec<BasisTerm> = [-2.0, -3.0, -4.0, -5.0, -6.0].iter().map(|&p| BasisTerm::pow(p)).collect();
    let a = fit_tail(f1.nodes(), &f1.values, 20.0, 200.0, &basis, 1e14).unwrap();
    let b = fit_tail(f1.nodes(), &f1.values, 40.0, 200.0, &basis, 1e14).unwrap();
    assert!((a.coefficients[0] / b.coefficients[0] - 1.0).abs() < 0.02);
    assert!(a.coefficients[2].abs() < 1e-3 * a.coefficients[0].abs(), "{:?}", a.coefficients);
}

#[test]
fn source_needs_lower_layers() {
    let ip = common::inner();
    assert!(matches!(source_f(NU, 3, &ip.layers[..2]), Err(Error::MissingLayer(_))));
    assert!(matches!(source_f(NU, 0, &ip.layers), Err(Error::MissingLayer(_))));
    // k = 1 only reads V₀: extra layers do not change it
    let a = source_f(NU, 1, &ip.layers[..1]).unwrap();
    let b = source_f(NU, 1, &ip.layers).unwrap();
    assert_eq!(a.values, b.values);
}

#[test]
fn layers_solve_their_equations() {
    let ip = common::inner();
    assert_eq!(ip.n(), 2);
    for r in &ip.layer_residuals {
        assert!(*r < LAYER_RESIDUAL_TOL, "{r}");
    }
}

#[test]
fn first_layer_is_even_at_origin() {
    let v1 = &common::inner().layers[1];
    let r0 = v1.nodes()[0];
    let c2 = v1.values[0] / (r0 * r0);
    assert!(c2.is_finite() && c2 != 0.0);
    assert!((v1.d1().unwrap()[0] / (2.0 * c2 * r0) - 1.0).abs() < 1e-3);
    assert!((v1.d2().unwrap()[0] / (2.0 * c2) - 1.0).abs() < 1e-3);
}

#[test]
fn first_layer_tail_structure() {
    let ip = common::inner();
    let fit = &ip.tails[0];
    let d011 = ip.d(2, 1, 1).unwrap();
    let d010 = ip.d(0, 1, 0).unwrap();
    assert!(d010.is_finite() && d010.abs() > 1e-3);
    // the log slot at y⁻² is empty up to fit noise relative to its neighbours
    assert!(d011.abs() < 1e-4 * ip.d(2, 1, 0).unwrap().abs().max(1.0), "{d011}");
    assert!(fit.residual < 1e-10);
    // slots outside the template read as zero
    assert_eq!(ip.d(-1, 1, 0).unwrap(), 0.0);
    assert_eq!(ip.d(2, 1, 3).unwrap(), 0.0);
    assert!(matches!(ip.d(2, 5, 0), Err(Error::MissingTailCoefficient { .. })));
}

#[test]
fn zeroth_layer_reads_ground_state() {
    let ip = common::inner();
    let gs = common::ground_state();
    assert_eq!(ip.d(2, 0, 0).unwrap(), gs.d2());
    assert_eq!(ip.d(-1, 0, 0).unwrap(), 1.0);
}

#[test]
fn assembled_profile_deviates_from_ground_state_like_t_to_two_nu() {
    let ip = common::inner();
    let gs = common::ground_state();
    let dev = |t: f64| {
        let v = assemble_inner(ip, t).unwrap();
        v.nodes().iter().zip(&v.values).map(|(&y, &x)| (x - gs.q(y)).abs()).fold(0.0, f64::max)
    };
    // the sup sits at the region edge, where V₁ still carries its y⁻¹ tail
    // term; the ratio settles toward 2ν only once that edge is far out
    let slope = (dev(1e-4) / dev(5e-5)).log2();
    assert!((slope / (2.0 * NU) - 1.0).abs() < 0.1, "{slope}");
}

#[test]
fn region_edge_scales() {
    let ip = common::inner();
    let (a, b) = (assemble_inner(ip, 0.04).unwrap(), assemble_inner(ip, 0.02).unwrap());
    let ratio = ip.region_edge(0.02) / ip.region_edge(0.04);
    assert!((ratio - 2f64.powf(NU - ip.config.eps1)).abs() < 1e-12);
    assert!(a.grid.last() <= ip.region_edge(0.04) && b.grid.last() <= ip.region_edge(0.02));
    assert!(b.len() > a.len());
    assert!(matches!(assemble_inner(ip, 1.5), Err(Error::InvalidConfig(_))));
}

#[test]
fn single_layer_profile_is_ground_state() {
    // with only V₀ the assembled sum is Q itself
    let ip = common::inner();
    let mut one = ip.clone();
    one.layers.truncate(1);
    let v = assemble_inner(&one, 0.05).unwrap();
    let gs = common::ground_state();
    for (i, &y) in v.nodes().iter().enumerate() {
        assert!((v.values[i] - gs.curve.values[i]).abs() < 1e-12 * (1.0 + y));
    }
}

#[test]
fn defect_keeps_only_high_orders() {
    // the s^k coefficients of the defect vanish for k ≤ N, to layer accuracy
    let ip = common::inner();
    for y in [0.5, 3.0, 30.0] {
        let p = defect_series(NU, y, &ip.jets(y), 10);
        let scale = p.a[3].abs();
        for k in 0..=2 {
            assert!(p.a[k].abs() < 1e-6 * scale, "y={y} k={k}: {}", p.a[k]);
        }
    }
}

#[test]
fn remainder_routes_agree_and_decrease() {
    let ip = common::inner();
    let mut last = f64::INFINITY;
    for t in [0.1, 0.05, 0.025] {
        let r = inner_remainder(ip, t).unwrap();
        assert!((r.norm / r.norm_series - 1.0).abs() < 1e-8, "{r:?}");
        assert!(r.norm < last);
        last = r.norm;
    }
    assert!(matches!(inner_remainder(ip, 0.0), Err(Error::InvalidConfig(_))));
}

#[test]
fn static_profile_remainder_is_finite() {
    let ip = common::inner();
    let mut one = ip.clone();
    one.layers.truncate(1);
    let r = inner_remainder(&one, 0.05).unwrap();
    assert!(r.norm.is_finite() && r.norm > 0.0);
    // adding layers lowers the remainder
    assert!(inner_remainder(ip, 0.05).unwrap().norm < r.norm);
}

#[test]
fn build_rejects_bad_config() {
    let bad = Config { eps1: 0.9, ..Config::default() };
    assert!(matches!(build_inner(&bad, common::operator()), Err(Error::InvalidConfig(_))));
}

#[test]
fn excess_jet_matches_eval() {
    let ip = common::inner();
    let t = 0.03f64;
    let sc = t.powf(NU + 1.0);
    for y in [0.01, 0.3, 1.7] {
        let j = ip.excess_jet(t, y * sc);
        let v = ip.eval(t, y);
        assert!((j.f / sc - (v[0] - y)).abs() < 1e-12);
        assert!((j.fr - (v[1] - 1.0)).abs() < 1e-10);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn gamma_is_linear(a in -5.0f64..5.0, k in 0usize..4) {
        let f = SampledCurve::from_fn3(line_grid(), |y| ((-y).exp(), -(-y).exp(), (-y).exp())).unwrap();
        let g = gamma_apply(NU, k, &f).unwrap();
        let ga = gamma_apply(NU, k, &f.scaled(a)).unwrap();
        for i in 0..g.len() {
            prop_assert!((ga.values[i] - a * g.values[i]).abs() < 1e-12 * (1.0 + g.values[i].abs()));
        }
    }

    #[test]
    fn direct_and_series_residuals_agree(y in 0.01f64..50.0, t in 0.001f64..0.2) {
        let ip = common::inner();
        let s = t.powf(2.0 * NU);
        let jets = ip.jets(y);
        let p = defect_series(NU, y, &jets, 10);
        let v = y + jets.iter().rev().fold(0.0, |acc, l| acc * s + l[0]);
        let sum = p.a.iter().rev().fold(0.0, |acc, c| acc * s + c) / v;
        let direct = rescaled_residual(NU, s, y, &jets);
        prop_assert!((sum - direct).abs() < 1e-9 * (1.0 + direct.abs()));
    }
}
