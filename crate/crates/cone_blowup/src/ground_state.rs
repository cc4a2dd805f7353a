//! The stationary profile `Q`: the smooth radial solution of
//! `Q'' = 3(1 + Q'²)(1/Q − Q'/ρ)` with `Q(0) = 1`, `Q'(0) = 0`, asymptotic to
//! the cone `Q ≈ ρ + d₂ρ⁻² + …`.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::numerics::fit::{fit_tail, BasisTerm, TailFit, DEFAULT_COND_BOUND};
use crate::numerics::ode::{integrate_ivp, IvpOptions};
use crate::numerics::{diff, RadialGrid, SampledCurve, Taylor};

/// Tail basis for `Q − ρ`.
pub const TAIL_POWERS: [f64; 4] = [-2.0, -3.0, -4.0, -5.0];

/// Even Taylor coefficients of `Q` at the origin: entry `i` is the
/// coefficient of `ρ^i`, for `i = 0..=order` (odd entries are zero).
pub fn taylor_seed(order: usize) -> Vec<f64> {
    let len = order + 3;
    let mut c = vec![0.0; len];
    c[0] = 1.0;
    let mut n = 1;
    while 2 * n <= order {
        // Coefficient of ρ^{2n-1} in −ρQQ'' + 3(1+Q'²)(ρ − QQ') with γ_{2n} = 0;
        // γ_{2n} enters that coefficient as −4n(n+1)γ_{2n}.
        let q = Taylor::new(c.clone());
        let e = static_defect(&q, &Taylor::variable(0.0, len));
        c[2 * n] = e.c[2 * n - 1] / (4.0 * (n * (n + 1)) as f64);
        n += 1;
    }
    c.truncate(order + 1);
    c
}

/// `−ρQQ'' + 3(1 + Q'²)(ρ − QQ')` for jets of `Q` and `ρ` at a common point.
fn static_defect(q: &Taylor, rho: &Taylor) -> Taylor {
    let dq = q.derivative();
    let ddq = dq.derivative();
    let a = &(rho * q) * &ddq;
    let b = (&dq * &dq).add_const(1.0);
    let c = rho - &(q * &dq);
    &(&b * &c).scale(3.0) - &a
}

/// Right-hand side `Q''` of the profile equation.
pub fn profile_rhs(rho: f64, q: f64, dq: f64) -> f64 {
    3.0 * (1.0 + dq * dq) * (1.0 / q - dq / rho)
}

/// Options for [`solve_ground_state`].
#[derive(Debug, Clone, Copy)]
pub struct GroundStateOptions {
    pub origin_cutoff: f64,
    pub rho_max: f64,
    pub first_step: f64,
    pub nodes: usize,
    pub tol: f64,
    pub taylor_order: usize,
}

impl Default for GroundStateOptions {
    fn default() -> Self {
        Self { origin_cutoff: 1e-3, rho_max: 200.0, first_step: 1e-3, nodes: 4000, tol: 1e-12, taylor_order: 8 }
    }
}

/// Tabulated ground state with its Taylor seed and fitted tail.
#[derive(Debug, Clone)]
pub struct GroundState {
    pub curve: SampledCurve,
    /// `w = Q − ρ` with `w'` and `w'' = Q''`, integrated directly so that the
    /// small tail is not lost to cancellation against `ρ`.
    pub excess: SampledCurve,
    pub taylor: Vec<f64>,
    pub tail: TailFit,
    pub rho_max: f64,
    pub tol: f64,
    /// Max of `|Q''_stencil − rhs|` over the grid, with `Q''_stencil`
    /// obtained by differentiating the integrated `Q'`.
    pub ode_residual: f64,
    pub max_error_estimate: f64,
}

impl GroundState {
    pub fn grid(&self) -> &Arc<RadialGrid> {
        &self.curve.grid
    }

    pub fn d(&self, n: i32) -> f64 {
        self.tail.coefficient(-(n as f64), 0).unwrap_or(0.0)
    }

    pub fn d2(&self) -> f64 {
        self.d(2)
    }

    /// `(Q, Q', Q'')` anywhere on `[0, ∞)`: Taylor seed below the first node,
    /// quintic Hermite on the grid, fitted tail beyond `rho_max`.
    pub fn eval3(&self, rho: f64) -> (f64, f64, f64) {
        let r0 = self.curve.grid.origin_cutoff();
        if rho < r0 {
            let t = Taylor::new(self.taylor.clone());
            return (t.eval_at(rho), t.derivative().eval_at(rho), t.derivative().derivative().eval_at(rho));
        }
        if rho > self.rho_max {
            let mut out = (rho, 1.0, 0.0);
            for (b, c) in self.tail.basis.iter().zip(&self.tail.coefficients) {
                let p = b.power;
                out.0 += c * rho.powf(p);
                out.1 += c * p * rho.powf(p - 1.0);
                out.2 += c * p * (p - 1.0) * rho.powf(p - 2.0);
            }
            return out;
        }
        self.curve.eval3(rho)
    }

    pub fn q(&self, rho: f64) -> f64 {
        self.eval3(rho).0
    }

    /// `(w, w', w'')` for `w = Q − ρ`, anywhere on `[0, ∞)`.
    pub fn excess3(&self, rho: f64) -> (f64, f64, f64) {
        let r0 = self.curve.grid.origin_cutoff();
        if rho < r0 || rho > self.rho_max {
            let (q, dq, ddq) = self.eval3(rho);
            if rho < r0 {
                return (q - rho, dq - 1.0, ddq);
            }
            return (self.tail.eval(rho), dq - 1.0, ddq);
        }
        self.excess.eval3(rho)
    }

    /// `ΛQ = Q − ρQ'` and its derivative `−ρQ''`.
    pub fn lambda_q(&self, rho: f64) -> (f64, f64) {
        let (w, dw, ddq) = self.excess3(rho);
        (w - rho * dw, -rho * ddq)
    }

    /// `(ΛQ, ΛQ', ΛQ'')`, free of cancellation at large `ρ`.
    pub fn lambda_q3(&self, rho: f64) -> (f64, f64, f64) {
        let (w, dw, ddq) = self.excess3(rho);
        let d3 = if rho < self.curve.grid.origin_cutoff() {
            Taylor::new(self.taylor.clone()).derivative().derivative().derivative().eval_at(rho)
        } else {
            third_derivative(rho, w, dw, ddq)
        };
        (w - rho * dw, -rho * ddq, -ddq - rho * d3)
    }

    /// Taylor jet of `Q` at `rho` with `len` coefficients, generated from
    /// `(Q, Q')` by solving the profile equation order by order.
    pub fn jet(&self, rho: f64, len: usize) -> Result<Taylor> {
        if rho < self.curve.grid.origin_cutoff() {
            let mut d = Taylor::new(taylor_seed(2 * len + 2));
            let mut out = vec![0.0; len];
            let mut fact = 1.0;
            for (i, o) in out.iter_mut().enumerate() {
                if i > 0 {
                    fact *= i as f64;
                }
                *o = d.eval_at(rho) / fact;
                d = d.derivative();
            }
            return Ok(Taylor::new(out));
        }
        let (q, dq, _) = self.eval3(rho);
        jet_from_data(rho, q, dq, len)
    }
}

/// `Q'''` from the differentiated profile equation written in `w = Q − ρ`:
/// `Q'' = 3(1 + Q'²) N / (Qρ)` with `N = −w − ρw' − ww'`.
pub fn third_derivative(rho: f64, w: f64, dw: f64, ddq: f64) -> f64 {
    let q = rho + w;
    let dq = 1.0 + dw;
    let a = 1.0 + dq * dq;
    let n = -w - rho * dw - w * dw;
    let da = 2.0 * dq * ddq;
    let dn = -2.0 * dw - rho * ddq - dw * dw - w * ddq;
    let qr = q * rho;
    3.0 * ((da * n + a * dn) / qr - a * n * (q + rho * dq) / (qr * qr))
}

/// Taylor jet of the solution of the profile equation through `(rho, q, dq)`.
pub fn jet_from_data(rho: f64, q: f64, dq: f64, len: usize) -> Result<Taylor> {
    if rho <= 0.0 {
        return Err(Error::SingularEndpoint("profile jet requested at the origin".into()));
    }
    let mut c = vec![0.0; len.max(2)];
    c[0] = q;
    c[1] = dq;
    let r = Taylor::variable(rho, c.len());
    for m in 0..c.len().saturating_sub(2) {
        let e = static_defect(&Taylor::new(c.clone()), &r);
        // c_{m+2} enters the h^m coefficient of the defect as −ρ q (m+2)(m+1) c_{m+2}.
        c[m + 2] = e.c[m] / (rho * q * ((m + 2) * (m + 1)) as f64);
    }
    c.truncate(len);
    Ok(Taylor::new(c))
}

/// Integrate the profile equation from the Taylor seed at `origin_cutoff`.
/// The integrated unknown is `w = Q − ρ`, which avoids cancellation at large ρ.
pub fn solve_ground_state(opts: &GroundStateOptions) -> Result<GroundState> {
    if opts.rho_max < 20.0 {
        return Err(Error::InvalidConfig(format!("rho_max must be at least 20, got {}", opts.rho_max)));
    }
    let grid = Arc::new(RadialGrid::geometric(opts.origin_cutoff, opts.first_step, opts.rho_max, opts.nodes)?);
    let seed = Taylor::new(taylor_seed(opts.taylor_order));
    let r0 = opts.origin_cutoff;
    let q0 = seed.eval_at(r0);
    let dq0 = seed.derivative().eval_at(r0);
    let rhs = |rho: f64, y: &[f64], d: &mut [f64]| {
        let (w, dw) = (y[0], y[1]);
        let q = rho + w;
        let dq = 1.0 + dw;
        d[0] = dw;
        d[1] = 3.0 * (1.0 + dq * dq) * (-w - rho * dw - w * dw) / (q * rho);
    };
    let ivp = IvpOptions { scale_floor: 1e-12, ..IvpOptions::with_tol(opts.tol) };
    let sol = integrate_ivp(rhs, &[q0 - r0, dq0 - 1.0], grid.clone(), ivp)?;
    let nodes = grid.nodes();
    let values: Vec<f64> = sol.states.iter().zip(nodes).map(|(s, r)| r + s[0]).collect();
    let d1: Vec<f64> = sol.states.iter().map(|s| 1.0 + s[1]).collect();
    let d2: Vec<f64> = sol
        .states
        .iter()
        .zip(nodes)
        .map(|(s, &r)| {
            let mut d = [0.0; 2];
            rhs(r, s, &mut d);
            d[1]
        })
        .collect();
    for i in 0..nodes.len() {
        if !(values[i] > nodes[i]) {
            return Err(Error::InvariantViolation(format!("Q <= rho at rho = {}", nodes[i])));
        }
        if !(d2[i] > 0.0) {
            return Err(Error::InvariantViolation(format!("Q'' <= 0 at rho = {}", nodes[i])));
        }
    }
    let stencil_d2 = diff::differentiate(nodes, &d1, 1)?;
    let ode_residual = (0..nodes.len()).map(|i| (stencil_d2[i] - d2[i]).abs()).fold(0.0, f64::max);
    let w: Vec<f64> = sol.states.iter().map(|s| s[0]).collect();
    let dw: Vec<f64> = sol.states.iter().map(|s| s[1]).collect();
    let tail = fit_q_tail(nodes, &w, 0.5 * opts.rho_max, opts.rho_max)?;
    let excess = SampledCurve::with_derivs(grid.clone(), w, Some(dw), Some(d2.clone()))?;
    let curve = SampledCurve::with_derivs(grid, values, Some(d1), Some(d2))?;
    Ok(GroundState {
        curve,
        excess,
        taylor: seed.c,
        tail,
        rho_max: opts.rho_max,
        tol: opts.tol,
        ode_residual,
        max_error_estimate: sol.max_error_estimate,
    })
}

fn fit_q_tail(rho: &[f64], w: &[f64], lo: f64, hi: f64) -> Result<TailFit> {
    let basis: Vec<BasisTerm> = TAIL_POWERS.iter().map(|&p| BasisTerm::pow(p)).collect();
    fit_tail(rho, w, lo, hi, &basis, DEFAULT_COND_BOUND)
}

/// Fit `Q − ρ` on `[lo, hi]` with the basis `{ρ⁻², ρ⁻³, ρ⁻⁴, ρ⁻⁵}`.
pub fn fit_ground_tail(gs: &GroundState, lo: f64, hi: f64) -> Result<TailFit> {
    fit_q_tail(gs.curve.nodes(), &gs.excess.values, lo, hi)
}

/// Whether `|d₄|ρ_lo⁻⁴` exceeds 1% of `|d₂|ρ_lo⁻²`, i.e. whether the fitted
/// `ρ⁻⁴` term is not negligible against the leading one across the window.
pub fn d4_flag(fit: &TailFit) -> bool {
    let lo = fit.window.0;
    let d2 = fit.coefficient(-2.0, 0).unwrap_or(0.0);
    let d4 = fit.coefficient(-4.0, 0).unwrap_or(0.0);
    d4.abs() * lo.powi(-4) > 0.01 * d2.abs() * lo.powi(-2)
}
