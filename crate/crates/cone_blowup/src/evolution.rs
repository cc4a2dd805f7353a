//! Time stepping of the radial equation
//! `(1+u_ρ²)u_tt − (1−u_t²)u_ρρ − 2u_t u_ρ u_ρt + 3(1+u_ρ²−u_t²)(1/u − u_ρ/ρ) = 0`
//! on a cell-centered grid, with the monitors used to watch for blow-up.
//!
//! The unknown is the excess `e = u − ρ`, so that the cone `u = ρ` is
//! represented by exact zeros.

use std::sync::Arc;

use crate::composite::CompositeApprox;
use crate::error::{Error, Result};
use crate::ground_state::GroundState;
use crate::numerics::diff::differentiate;
use crate::numerics::quad::cumulative;
use crate::numerics::{RadialGrid, SampledCurve, SpacingPolicy};

/// Formal order of the scheme in space and time.
pub const SCHEME_ORDER: usize = 2;

/// Symmetry used to fill the ghost node below the first cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OriginParity {
    /// `u(−ρ) = u(ρ)`: smooth profiles with `u_ρ(0) = 0`.
    Even,
    /// `u(−ρ) = −u(ρ)`: the cone `u = ρ`.
    Odd,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SchemeConfig {
    pub cfl: f64,
    pub outer_radius: f64,
    pub parity: OriginParity,
}

impl Default for SchemeConfig {
    fn default() -> Self {
        Self { cfl: 0.4, outer_radius: 1.0, parity: OriginParity::Even }
    }
}

impl SchemeConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.cfl > 0.0) {
            return Err(Error::InvalidConfig(format!("cfl must be positive, got {}", self.cfl)));
        }
        if self.cfl >= 1.0 {
            return Err(Error::CflViolation { t: f64::NAN, courant: self.cfl, limit: 1.0 });
        }
        if !(self.outer_radius > 0.0) {
            return Err(Error::InvalidConfig(format!("outer radius must be positive, got {}", self.outer_radius)));
        }
        Ok(())
    }
}

/// `n` cells of width `R/n` on `[0, R]`, sampled at their centers.
pub fn cell_centered_grid(outer_radius: f64, n: usize) -> Result<RadialGrid> {
    let h = outer_radius / n as f64;
    RadialGrid::from_nodes((0..n).map(|i| (i as f64 + 0.5) * h).collect(), SpacingPolicy::Uniform)
}

/// The quantities whose blow-up signals breakdown of the solution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonitorRecord {
    pub t: f64,
    /// `‖1/u‖_∞`.
    pub inv_u: f64,
    /// `‖1/(1 + u_ρ² − u_t²)‖_∞`.
    pub inv_timelike: f64,
    /// `max(|u_ρ|, |u_t|, |u_ρρ|, |u_ρt|)`.
    pub max_derivative: f64,
}

#[derive(Debug, Clone)]
pub struct EvolutionState {
    pub t: f64,
    pub u: SampledCurve,
    pub u_t: SampledCurve,
}

impl EvolutionState {
    /// Sample `f(ρ) = (u, u_t)` on `grid`.
    pub fn from_fn(t: f64, grid: Arc<RadialGrid>, f: impl Fn(f64) -> (f64, f64)) -> Result<Self> {
        let (u, ut): (Vec<f64>, Vec<f64>) = grid.nodes().iter().map(|&r| f(r)).unzip();
        let s = Self { t, u: SampledCurve::new(grid.clone(), u)?, u_t: SampledCurve::new(grid, ut)? };
        s.check()?;
        Ok(s)
    }

    /// `u^(N)(t, ·)` and `∂_t u^(N)(t, ·)` on `grid`.
    pub fn from_composite(ca: &CompositeApprox, t: f64, grid: Arc<RadialGrid>) -> Result<Self> {
        ca.check_regions(t)?;
        let mut u = Vec::with_capacity(grid.len());
        let mut ut = Vec::with_capacity(grid.len());
        for &r in grid.nodes() {
            let e = ca.excess_jet(t, r)?;
            u.push(r + e.f);
            ut.push(e.ft);
        }
        let s = Self { t, u: SampledCurve::new(grid.clone(), u)?, u_t: SampledCurve::new(grid, ut)? };
        s.check()?;
        Ok(s)
    }

    pub fn grid(&self) -> &Arc<RadialGrid> {
        &self.u.grid
    }

    fn spacing(&self) -> f64 {
        let x = self.grid().nodes();
        x[1] - x[0]
    }

    fn check(&self) -> Result<()> {
        let x = self.grid().nodes();
        let h = self.spacing();
        if self.u.grid.policy() != SpacingPolicy::Uniform || (x[0] - 0.5 * h).abs() > 1e-12 * h {
            return Err(Error::InvalidGrid("evolution needs a cell-centered uniform grid".into()));
        }
        let excess: Vec<f64> = x.iter().zip(&self.u.values).map(|(r, u)| u - r).collect();
        let ghost = quadratic_ghost(&excess);
        let fields = Fields { h, rho: x, e: &excess, v: &self.u_t.values, ghost, parity: None };
        fields.derivatives(self.t).map(|_| ())
    }
}

/// Second-order central derivatives with ghost values.
struct Fields<'a> {
    h: f64,
    rho: &'a [f64],
    e: &'a [f64],
    v: &'a [f64],
    /// Excess at the ghost node past the outer boundary (`u_t = 0` there).
    ghost: f64,
    /// `None` skips the origin ghost and uses one-sided differences, for
    /// validating data whose parity is not yet known.
    parity: Option<OriginParity>,
}

struct Pointwise {
    e: f64,
    er: f64,
    err: f64,
    v: f64,
    vr: f64,
}

impl Fields<'_> {
    fn at(&self, i: usize) -> Pointwise {
        let n = self.e.len();
        let h = self.h;
        let (em, vm) = if i == 0 {
            match self.parity {
                // u(−ρ₀) = u(ρ₀): e(−ρ₀) = e(ρ₀) + 2ρ₀
                Some(OriginParity::Even) => (self.e[0] + 2.0 * self.rho[0], self.v[0]),
                Some(OriginParity::Odd) => (-self.e[0], -self.v[0]),
                None => (3.0 * self.e[0] - 3.0 * self.e[1] + self.e[2], 3.0 * self.v[0] - 3.0 * self.v[1] + self.v[2]),
            }
        } else {
            (self.e[i - 1], self.v[i - 1])
        };
        let (ep, vp) = if i + 1 == n { (self.ghost, 0.0) } else { (self.e[i + 1], self.v[i + 1]) };
        Pointwise {
            e: self.e[i],
            er: (ep - em) / (2.0 * h),
            err: (ep - 2.0 * self.e[i] + em) / (h * h),
            v: self.v[i],
            vr: (vp - vm) / (2.0 * h),
        }
    }

    /// Pointwise derivatives, checking positivity and the time-like condition.
    fn derivatives(&self, t: f64) -> Result<Vec<Pointwise>> {
        (0..self.e.len())
            .map(|i| {
                let p = self.at(i);
                let rho = self.rho[i];
                let u = rho + p.e;
                if !(u > 0.0) {
                    return Err(Error::PositivityLoss { t, rho, value: u });
                }
                let ur = 1.0 + p.er;
                let tl = 1.0 + ur * ur - p.v * p.v;
                if !(tl > 0.0) {
                    return Err(Error::HyperbolicityLoss { t, rho, value: tl });
                }
                Ok(p)
            })
            .collect()
    }

    /// `u_tt` at every node.
    fn accel(&self, t: f64) -> Result<Vec<f64>> {
        Ok(self.derivatives(t)?.iter().zip(self.rho).map(|(p, &rho)| accel_at(rho, p)).collect())
    }

    /// Largest characteristic speed `|b|/2 + sqrt(b²/4 + c²)`.
    fn max_speed(&self, t: f64) -> Result<f64> {
        Ok(self.derivatives(t)?.iter().map(char_speed).fold(0.0, f64::max))
    }
}

fn char_speed(p: &Pointwise) -> f64 {
    let ur = 1.0 + p.er;
    let a = 1.0 + ur * ur;
    let half_b = p.v * ur / a;
    half_b.abs() + ((1.0 + ur * ur - p.v * p.v) / (a * a)).sqrt()
}

fn accel_at(rho: f64, p: &Pointwise) -> f64 {
    let (ur, ut) = (1.0 + p.er, p.v);
    let u = rho + p.e;
    let flat = -(p.er + p.e / rho + p.e * p.er / rho) / u;
    ((1.0 - ut * ut) * p.err + 2.0 * ut * ur * p.vr - 3.0 * (1.0 + ur * ur - ut * ut) * flat) / (1.0 + ur * ur)
}

/// Quadratic extrapolation one cell past the last node.
fn quadratic_ghost(e: &[f64]) -> f64 {
    let n = e.len();
    3.0 * e[n - 1] - 3.0 * e[n - 2] + e[n - 3]
}

/// Pointwise residual of the equation for given `u, u_t, u_tt`; missing
/// `ρ`-derivatives are filled by grid stencils.
pub fn residual_nw(u: &SampledCurve, u_t: &SampledCurve, u_tt: &SampledCurve) -> Result<SampledCurve> {
    u.check_same_grid(u_t)?;
    u.check_same_grid(u_tt)?;
    let u = u.differentiated()?;
    let ut = u_t.differentiated()?;
    let (ur, urr, utr) = (u.d1()?, u.d2()?, ut.d1()?);
    let x = u.nodes();
    let vals = (0..x.len())
        .map(|i| {
            let (uu, v) = (u.values[i], ut.values[i]);
            if !(uu > 0.0) {
                return Err(Error::NonPositiveU { rho: x[i] });
            }
            let p = ur[i];
            Ok((1.0 + p * p) * u_tt.values[i] - (1.0 - v * v) * urr[i] - 2.0 * v * p * utr[i]
                + 3.0 * (1.0 + p * p - v * v) * (1.0 / uu - p / x[i]))
        })
        .collect::<Result<Vec<_>>>()?;
    SampledCurve::new(u.grid.clone(), vals)
}

/// The same residual from the divergence form
/// `S³[∂_t(u_t/S) − ρ^{−3}∂_ρ(ρ³u_ρ/S) + 3/(uS)]`, `S = sqrt(1 − u_t² + u_ρ²)`,
/// with the flux differentiated by grid stencils.
pub fn residual_divergence(u: &SampledCurve, u_t: &SampledCurve, u_tt: &SampledCurve) -> Result<SampledCurve> {
    u.check_same_grid(u_t)?;
    u.check_same_grid(u_tt)?;
    let u = u.differentiated()?;
    let ut = u_t.differentiated()?;
    let (ur, utr) = (u.d1()?, ut.d1()?);
    let x = u.nodes();
    let s: Vec<f64> = (0..x.len()).map(|i| (1.0 - ut.values[i].powi(2) + ur[i] * ur[i]).sqrt()).collect();
    let flux: Vec<f64> = (0..x.len()).map(|i| x[i].powi(3) * ur[i] / s[i]).collect();
    let dflux = differentiate(x, &flux, 1)?;
    let vals = (0..x.len())
        .map(|i| {
            let (v, p) = (ut.values[i], ur[i]);
            if !(u.values[i] > 0.0) {
                return Err(Error::NonPositiveU { rho: x[i] });
            }
            let st = (-v * u_tt.values[i] + p * utr[i]) / s[i];
            let time = u_tt.values[i] / s[i] - v * st / (s[i] * s[i]);
            let space = dflux[i] / x[i].powi(3);
            Ok(s[i].powi(3) * (time - space + 3.0 / (u.values[i] * s[i])))
        })
        .collect::<Result<Vec<_>>>()?;
    SampledCurve::new(u.grid.clone(), vals)
}

/// Monitor quantities of a state.
pub fn blowup_monitor(state: &EvolutionState) -> Result<MonitorRecord> {
    let x = state.grid().nodes();
    let excess: Vec<f64> = x.iter().zip(&state.u.values).map(|(r, u)| u - r).collect();
    let f = Fields {
        h: state.spacing(),
        rho: x,
        e: &excess,
        v: &state.u_t.values,
        ghost: quadratic_ghost(&excess),
        parity: None,
    };
    let pts = f.derivatives(state.t)?;
    let mut m = MonitorRecord { t: state.t, inv_u: 0.0, inv_timelike: 0.0, max_derivative: 0.0 };
    for (p, &rho) in pts.iter().zip(x) {
        let ur = 1.0 + p.er;
        m.inv_u = m.inv_u.max(1.0 / (rho + p.e));
        m.inv_timelike = m.inv_timelike.max(1.0 / (1.0 + ur * ur - p.v * p.v));
        m.max_derivative = m.max_derivative.max(ur.abs()).max(p.v.abs()).max(p.err.abs()).max(p.vr.abs());
    }
    Ok(m)
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub snapshots: Vec<EvolutionState>,
    pub monitors: Vec<MonitorRecord>,
    pub dt: f64,
    pub steps: usize,
}

struct Stepper<'a> {
    rho: &'a [f64],
    h: f64,
    ghost: f64,
    parity: OriginParity,
}

impl Stepper<'_> {
    fn accel(&self, t: f64, e: &[f64], v: &[f64]) -> Result<Vec<f64>> {
        Fields { h: self.h, rho: self.rho, e, v, ghost: self.ghost, parity: Some(self.parity) }.accel(t)
    }

    fn max_speed(&self, t: f64, e: &[f64], v: &[f64]) -> Result<f64> {
        Fields { h: self.h, rho: self.rho, e, v, ghost: self.ghost, parity: Some(self.parity) }.max_speed(t)
    }

    /// One classical Runge–Kutta step of `e' = v, v' = a(e, v)`.
    fn rk4(&self, t: f64, dt: f64, e: &[f64], v: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        let axpy = |x: &[f64], a: f64, y: &[f64]| -> Vec<f64> { x.iter().zip(y).map(|(x, y)| x + a * y).collect() };
        let k1e = v.to_vec();
        let k1v = self.accel(t, e, v)?;
        let (e2, v2) = (axpy(e, 0.5 * dt, &k1e), axpy(v, 0.5 * dt, &k1v));
        let k2v = self.accel(t + 0.5 * dt, &e2, &v2)?;
        let (e3, v3) = (axpy(e, 0.5 * dt, &v2), axpy(v, 0.5 * dt, &k2v));
        let k3v = self.accel(t + 0.5 * dt, &e3, &v3)?;
        let (e4, v4) = (axpy(e, dt, &v3), axpy(v, dt, &k3v));
        let k4v = self.accel(t + dt, &e4, &v4)?;
        let en = (0..e.len()).map(|i| e[i] + dt / 6.0 * (k1e[i] + 2.0 * v2[i] + 2.0 * v3[i] + v4[i])).collect();
        let vn = (0..e.len()).map(|i| v[i] + dt / 6.0 * (k1v[i] + 2.0 * k2v[i] + 2.0 * k3v[i] + k4v[i])).collect();
        Ok((en, vn))
    }
}

/// Evolve from `initial` to `t_end` (either direction). The step is
/// `cfl·Δρ / (max characteristic speed)` from the initial data, shrunk so
/// that an integer number of steps lands on `t_end`; the Courant number is
/// re-checked every step. Two Runge–Kutta steps start the three-level scheme
/// `e^{n+1} = 2e^n − e^{n−1} + Δt² a(e^n, v^n)` with the lagged velocity
/// `v^n = (3e^n − 4e^{n−1} + e^{n−2}) / (2Δt)`. Roughly `snapshots` evenly
/// spaced states are kept, always including both ends.
pub fn evolve(initial: &EvolutionState, t_end: f64, cfg: &SchemeConfig, snapshots: usize) -> Result<Trajectory> {
    cfg.validate()?;
    let rho = initial.grid().nodes().to_vec();
    let h = initial.spacing();
    if (rho[rho.len() - 1] + 0.5 * h - cfg.outer_radius).abs() > 1e-9 * cfg.outer_radius {
        return Err(Error::InvalidConfig(format!(
            "grid ends at {} but outer radius is {}",
            rho[rho.len() - 1] + 0.5 * h,
            cfg.outer_radius
        )));
    }
    let mut e: Vec<f64> = rho.iter().zip(&initial.u.values).map(|(r, u)| u - r).collect();
    let mut v = initial.u_t.values.clone();
    let st = Stepper { rho: &rho, h, ghost: quadratic_ghost(&e), parity: cfg.parity };

    let span = t_end - initial.t;
    let speed = st.max_speed(initial.t, &e, &v)?;
    let dt_max = cfg.cfl * h / speed;
    let steps = ((span.abs() / dt_max).ceil() as usize).max(3);
    let dt = span / steps as f64;
    let every = (steps / snapshots.max(1)).max(1);

    let grid = initial.grid().clone();
    let snapshot = |t: f64, e: &[f64], v: &[f64]| -> Result<EvolutionState> {
        let u = rho.iter().zip(e).map(|(r, e)| r + e).collect();
        Ok(EvolutionState { t, u: SampledCurve::new(grid.clone(), u)?, u_t: SampledCurve::new(grid.clone(), v.to_vec())? })
    };
    let mut traj = Trajectory { snapshots: vec![initial.clone()], monitors: vec![blowup_monitor(initial)?], dt, steps };

    let t0 = initial.t;
    let mut hist: Vec<Vec<f64>> = vec![e.clone()];
    for n in 0..steps {
        let t = t0 + n as f64 * dt;
        let courant = dt.abs() * st.max_speed(t, &e, &v)? / h;
        if courant > 1.0 {
            return Err(Error::CflViolation { t, courant, limit: 1.0 });
        }
        if n < 2 {
            let (en, vn) = st.rk4(t, dt, &e, &v)?;
            e = en;
            v = vn;
        } else {
            // `v` holds the lagged velocity of level n
            let a = st.accel(t, &e, &v)?;
            let em1 = &hist[hist.len() - 2];
            let en: Vec<f64> = (0..e.len()).map(|i| 2.0 * e[i] - em1[i] + dt * dt * a[i]).collect();
            v = (0..e.len()).map(|i| (3.0 * en[i] - 4.0 * e[i] + em1[i]) / (2.0 * dt)).collect();
            e = en;
        }
        hist.push(e.clone());
        if hist.len() > 2 {
            hist.remove(0);
        }
        let tn = t0 + (n + 1) as f64 * dt;
        if (n + 1) % every == 0 || n + 1 == steps {
            let s = snapshot(if n + 1 == steps { t_end } else { tn }, &e, &v)?;
            traj.monitors.push(blowup_monitor(&s)?);
            traj.snapshots.push(s);
        }
    }
    Ok(traj)
}

/// `sqrt(Σ_{j≤order} ∫ ⟨ρ⟩³ (∂^j f)² ρ³ dρ)` with stencil derivatives.
pub fn weighted_sobolev(x: &[f64], f: &[f64], order: usize) -> Result<f64> {
    let mut d = f.to_vec();
    let mut acc = 0.0;
    for j in 0..=order {
        if j > 0 {
            d = differentiate(x, &d, 1)?;
        }
        let g: Vec<f64> = x.iter().zip(&d).map(|(&r, v)| (1.0 + r * r).powf(1.5) * r.powi(3) * v * v).collect();
        acc += cumulative(x, &g)?.last().copied().unwrap_or(0.0);
    }
    Ok(acc.sqrt())
}

/// Distance of a state to the approximate solution at the same time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Discrepancy {
    pub t: f64,
    /// Weighted order-2 norm of `∂_ρ(u − u^(N))`.
    pub grad: f64,
    /// Weighted order-2 norm of `u_t − ∂_t u^(N)`.
    pub vel: f64,
    pub total: f64,
}

/// Sobolev order of the discrepancy norms.
pub const DISCREPANCY_ORDER: usize = 2;

pub fn track_discrepancy(traj: &Trajectory, ca: &CompositeApprox) -> Result<Vec<Discrepancy>> {
    traj.snapshots
        .iter()
        .map(|s| {
            let x = s.grid().nodes();
            let mut du = Vec::with_capacity(x.len());
            let mut dv = Vec::with_capacity(x.len());
            for (i, &r) in x.iter().enumerate() {
                let e = ca.excess_jet(s.t, r)?;
                du.push(s.u.values[i] - (r + e.f));
                dv.push(s.u_t.values[i] - e.ft);
            }
            let grad = weighted_sobolev(x, &differentiate(x, &du, 1)?, DISCREPANCY_ORDER)?;
            let vel = weighted_sobolev(x, &dv, DISCREPANCY_ORDER)?;
            Ok(Discrepancy { t: s.t, grad, vel, total: grad.hypot(vel) })
        })
        .collect()
}

/// Per snapshot, `sup_{y ≤ y_max} |t^{−(ν+1)} u(t, t^{ν+1} y) − Q(y)|` over
/// the grid nodes.
pub fn profile_concentration(traj: &Trajectory, gs: &GroundState, nu: f64, y_max: f64) -> Vec<(f64, f64)> {
    traj.snapshots.iter().map(|s| (s.t, concentration(s, gs, nu, y_max))).collect()
}

pub fn concentration(s: &EvolutionState, gs: &GroundState, nu: f64, y_max: f64) -> f64 {
    let sc = s.t.powf(nu + 1.0);
    s.grid()
        .nodes()
        .iter()
        .zip(&s.u.values)
        .take_while(|(&r, _)| r <= sc * y_max)
        .map(|(&r, &u)| (u / sc - gs.q(r / sc)).abs())
        .fold(0.0, f64::max)
}
