//! One function per pipeline stage: build the stage product from its inputs,
//! write its CSV and JSON sidecar, and return the sidecar for the report.

use std::path::Path;
use std::sync::Arc;

use anyhow::{Context, Result};
use cone_blowup::composite::{blend, global_remainder, ground_deviation, remainder_extent, CompositeApprox, RemainderOptions};
use cone_blowup::evolution::{
    cell_centered_grid, evolve, profile_concentration, track_discrepancy, EvolutionState, OriginParity, SchemeConfig,
};
use cone_blowup::ground_state::{d4_flag, solve_ground_state, GroundState, GroundStateOptions};
use cone_blowup::inner::{assemble_inner, build_inner, inner_remainder, InnerProfile};
use cone_blowup::linearized::{coercivity_check, spectral_at, spectral_form, LinearizedOperator, RayleighTable};
use cone_blowup::numerics::{RadialGrid, SampledCurve};
use cone_blowup::remote::{build_remote, RemoteProfile};
use cone_blowup::self_similar::{assemble_ss, solve_low_orders, SelfSimilarProfile, SsGridOptions};
use serde_json::{json, Value};

use crate::config::RunConfig;
use crate::output::{cell, sidecar, write_csv, write_curve, write_json};

/// Concentration is measured over `y ≤ CORE_Y`.
pub const CORE_Y: f64 = 2.0;

/// Nodes used to tabulate profiles for CSV output.
const TABLE_NODES: usize = 2000;

pub fn ground_state(rc: &RunConfig) -> Result<Arc<GroundState>> {
    let opts = GroundStateOptions { rho_max: rc.rho_max, tol: rc.tol, nodes: rc.gs_nodes, ..Default::default() };
    Ok(Arc::new(solve_ground_state(&opts)?))
}

pub fn write_ground_state(gs: &GroundState, csv: &Path) -> Result<Value> {
    write_curve(csv, ["rho", "Q", "Q_rho", "Q_rhorho"], &gs.curve)?;
    let v = json!({
        "gamma": gs.taylor,
        "d": { "2": gs.d(2), "3": gs.d(3), "4": gs.d(4), "5": gs.d(5) },
        "d4_flag": d4_flag(&gs.tail),
        "tail_window": [gs.tail.window.0, gs.tail.window.1],
        "residuals": {
            "ode": gs.ode_residual,
            "error_estimate": gs.max_error_estimate,
            "tail_fit": gs.tail.residual,
        },
    });
    write_json(&sidecar(csv), &v)?;
    Ok(v)
}

pub fn operator(gs: &Arc<GroundState>) -> Result<Arc<LinearizedOperator>> {
    Ok(Arc::new(LinearizedOperator::new(gs.clone())?))
}

pub fn write_spectral(op: &LinearizedOperator, rc: &RunConfig, csv: &Path) -> Result<Value> {
    let gs = &op.gs;
    let sf = spectral_form(gs)?;
    write_csv(
        csv,
        &["rho", "H", "q", "potential", "zero_mode"],
        (0..sf.q.len()).map(|i| {
            [sf.q.nodes()[i], sf.h.values[i], sf.q.values[i], sf.potential.values[i], sf.zero_mode.values[i]].map(cell)
        }),
    )?;
    let lq = op.lambda_q()?;
    let plain = SampledCurve::new(lq.grid.clone(), lq.values.clone())?;
    let table = RayleighTable::new(gs, 60.0, 600)?;
    let rep = coercivity_check(&table, rc.rayleigh_samples, rc.seed)?;
    let v = json!({
        "lambda_q_defect": op.apply(&plain)?.max_abs_on(0.01, 150.0),
        "zero_mode_defect": sf.apply(&sf.zero_mode)?.max_abs_on(0.01, 150.0),
        "rho2_potential_at_100": 1e4 * spectral_at(gs, 100.0)?.potential,
        "rayleigh": { "samples": rc.rayleigh_samples, "seed": rc.seed, "min_ratio": rep.min_ratio },
    });
    write_json(&sidecar(csv), &v)?;
    Ok(v)
}

pub fn inner(rc: &RunConfig, op: Arc<LinearizedOperator>) -> Result<Arc<InnerProfile>> {
    Ok(Arc::new(build_inner(&rc.core, op)?))
}

pub fn write_inner(ip: &InnerProfile, t: f64, csv: &Path) -> Result<Value> {
    write_curve(csv, ["y", "V", "V_y", "V_yy"], &assemble_inner(ip, t)?)?;
    let layers: Vec<Value> = ip
        .tails
        .iter()
        .enumerate()
        .map(|(i, fit)| {
            let d: Vec<Value> = fit
                .basis
                .iter()
                .zip(&fit.coefficients)
                .map(|(b, c)| json!({ "n": -b.power, "l": b.log_power, "value": c }))
                .collect();
            json!({
                "k": i + 1,
                "residual": ip.layer_residuals[i],
                "tail": { "window": [fit.window.0, fit.window.1], "fit_residual": fit.residual, "d": d },
            })
        })
        .collect();
    let r = inner_remainder(ip, t)?;
    let v = json!({
        "t": t,
        "N": ip.n(),
        "region_edge": ip.region_edge(t),
        "layers": layers,
        "remainder": { "norm": r.norm, "norm_series": r.norm_series },
    });
    write_json(&sidecar(csv), &v)?;
    Ok(v)
}

pub fn self_similar(ip: &InnerProfile) -> Result<Arc<SelfSimilarProfile>> {
    Ok(Arc::new(solve_low_orders(ip, &SsGridOptions::default())?))
}

pub fn write_self_similar(ss: &SelfSimilarProfile, t: f64, csv: &Path) -> Result<Value> {
    write_curve(csv, ["y", "V", "V_y", "V_yy"], &assemble_ss(ss, t, TABLE_NODES)?)?;
    let orders: Vec<Value> = ss
        .orders
        .iter()
        .map(|o| {
            json!({
                "k": o.k,
                "alpha": o.alpha,
                "a_plus": o.a_plus,
                "a_minus": o.a_minus,
                "matching": [o.matching.0, o.matching.1],
                "lambda": o.lambda,
            })
        })
        .collect();
    let v = json!({ "t": t, "orders": orders, "c5_m4": ss.c5_m4, "lambda_of_t": ss.lambda_of_t(t) });
    write_json(&sidecar(csv), &v)?;
    Ok(v)
}

pub fn remote(ss: &SelfSimilarProfile, rc: &RunConfig) -> Result<Arc<RemoteProfile>> {
    Ok(Arc::new(build_remote(ss, rc.remote_nodes)?))
}

pub fn write_remote(rp: &RemoteProfile, csv: &Path) -> Result<Value> {
    let mut header = vec!["rho".to_string()];
    header.extend((0..rp.g_layers.len()).map(|k| format!("g{k}")));
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    write_csv(
        csv,
        &header,
        (0..rp.grid.len()).map(|i| {
            std::iter::once(cell(rp.grid.nodes()[i])).chain(rp.g_layers.iter().map(move |g| cell(g.values[i])))
        }),
    )?;
    let nu = rp.config.nu;
    let slopes: Vec<Value> = rp
        .slope_fits
        .iter()
        .enumerate()
        .map(|(k, s)| json!({ "k": k, "fitted": s, "expected": 1.0 - k as f64 + 3.0 * nu }))
        .collect();
    let mu: Vec<Value> = rp.mu.iter().map(|m| json!({ "k": m.k, "mu0": m.mu0, "mu1": m.mu1 })).collect();
    let v = json!({
        "delta": rp.delta,
        "N": rp.n(),
        "mu": mu,
        "slopes": slopes,
        "max_beyond_support": rp.max_beyond_support(),
    });
    write_json(&sidecar(csv), &v)?;
    Ok(v)
}

pub fn composite(
    ip: Arc<InnerProfile>,
    ss: Arc<SelfSimilarProfile>,
    rp: Arc<RemoteProfile>,
) -> Result<Arc<CompositeApprox>> {
    Ok(Arc::new(CompositeApprox::new(ip, ss, rp)?))
}

pub fn write_composite(ca: &CompositeApprox, t: f64, remainder: bool, csv: &Path) -> Result<Value> {
    let y0 = ca.inner.gs().grid().origin_cutoff();
    let grid = Arc::new(RadialGrid::log_uniform(y0, remainder_extent(ca, t), TABLE_NODES)?);
    let (v, w) = blend(ca, t, grid.clone())?;
    let (vd1, vd2, wd1) = (v.d1()?, v.d2()?, w.d1()?);
    write_csv(
        csv,
        &["y", "V", "V_y", "V_yy", "V_t", "V_ty"],
        (0..grid.len()).map(|i| [grid.nodes()[i], v.values[i], vd1[i], vd2[i], w.values[i], wd1[i]].map(cell)),
    )?;
    let [b1, b2] = ca.bands(t);
    let dev = ground_deviation(ca, t, &grid)?;
    let mut out = json!({
        "t": t,
        "bands": [[b1.0, b1.1], [b2.0, b2.1]],
        "ground_deviation": dev,
    });
    if remainder {
        let r = global_remainder(ca, t, &RemainderOptions::default())?;
        out["remainder"] = json!({
            "sobolev": r.sobolev,
            "total": r.total,
            "regional": {
                "inner": r.regional.inner,
                "inner_band": r.regional.inner_band,
                "ss": r.regional.ss,
                "outer_band": r.regional.outer_band,
                "outer": r.regional.outer,
            },
            "inner_own": r.inner_own,
            "mismatch": r.mismatch,
            "y_max": r.y_max,
        });
    }
    write_json(&sidecar(csv), &out)?;
    Ok(out)
}

/// Uniform cell-centred grid resolving `(t₁/2)^{ν+1}` with `cells_per_core`
/// cells and reaching `4δ + 2|t_end − t₁|`, rounded up to a whole cell.
pub fn evolution_grid(rc: &RunConfig) -> Result<(Arc<RadialGrid>, SchemeConfig)> {
    let h = (0.5 * rc.t1).powf(rc.core.nu + 1.0) / rc.cells_per_core as f64;
    let reach = 4.0 * rc.core.delta + 2.0 * (rc.t_end - rc.t1).abs();
    let n = (reach / h).ceil() as usize;
    let r = n as f64 * h;
    let grid = Arc::new(cell_centered_grid(r, n)?);
    Ok((grid, SchemeConfig { cfl: rc.cfl, outer_radius: r, parity: OriginParity::Even }))
}

fn loglog_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let (mx, my) = (lx.iter().sum::<f64>() / n, ly.iter().sum::<f64>() / n);
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}

/// Evolve from the composite data at `t1` to `t_end`, writing one CSV per
/// snapshot plus `monitors.csv`, `discrepancy.csv` and `evolve.json` into `dir`.
pub fn run_evolution(ca: &CompositeApprox, rc: &RunConfig, snapshots: usize, dir: &Path) -> Result<Value> {
    let (grid, cfg) = evolution_grid(rc)?;
    let initial = EvolutionState::from_composite(ca, rc.t1, grid.clone())?;
    let traj = evolve(&initial, rc.t_end, &cfg, snapshots).context("time stepping")?;
    for (i, s) in traj.snapshots.iter().enumerate() {
        write_csv(
            &dir.join(format!("snap_{i:03}.csv")),
            &["rho", "u", "u_t"],
            (0..grid.len()).map(|j| [grid.nodes()[j], s.u.values[j], s.u_t.values[j]].map(cell)),
        )?;
    }
    write_csv(
        &dir.join("monitors.csv"),
        &["t", "inv_u", "inv_timelike", "max_derivative"],
        traj.monitors.iter().map(|m| [m.t, m.inv_u, m.inv_timelike, m.max_derivative].map(cell)),
    )?;
    let disc = track_discrepancy(&traj, ca)?;
    write_csv(
        &dir.join("discrepancy.csv"),
        &["t", "grad", "vel", "total"],
        disc.iter().map(|d| [d.t, d.grad, d.vel, d.total].map(cell)),
    )?;
    let half_n = 0.5 * ca.config.n_inner as f64;
    let envelope_ratio = disc.iter().map(|d| d.total / (10.0 * d.t.powf(half_n))).fold(0.0, f64::max);
    let conc = profile_concentration(&traj, ca.inner.gs(), ca.config.nu, CORE_Y);
    let ts: Vec<f64> = traj.monitors.iter().map(|m| m.t).collect();
    let inv: Vec<f64> = traj.monitors.iter().map(|m| m.inv_u).collect();
    let v = json!({
        "t1": rc.t1,
        "t_end": rc.t_end,
        "nodes": grid.len(),
        "outer_radius": cfg.outer_radius,
        "dt": traj.dt,
        "steps": traj.steps,
        "discrepancy": {
            "final": disc.last().map(|d| d.total),
            "max_ratio_to_envelope": envelope_ratio,
        },
        "concentration": {
            "y_max": CORE_Y,
            "initial": conc.first().map(|c| c.1),
            "max": conc.iter().map(|c| c.1).fold(0.0, f64::max),
        },
        "inv_u_slope": loglog_slope(&ts, &inv),
    });
    write_json(&dir.join("evolve.json"), &v)?;
    Ok(v)
}
