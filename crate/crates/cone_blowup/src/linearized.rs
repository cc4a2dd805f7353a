//! The operator `ℒ = ∂² + (3/ρ + B₁)∂ + B₀` obtained by linearizing the
//! profile equation at `Q`, its Duhamel inverse, and the conjugated
//! self-adjoint form `𝔏 = −qΔq + 𝒫`.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::ground_state::GroundState;
use crate::numerics::quad::{cumulative, cumulative_weighted, gauss_legendre};
use crate::numerics::{diff, SampledCurve, Taylor};

/// `(B₀, B₁)` at `rho` from `Q` and `Q'`.
pub fn coefficients(rho: f64, q: f64, dq: f64) -> (f64, f64) {
    let b0 = 3.0 * (1.0 + dq * dq) / (q * q);
    let b1 = 9.0 * dq * dq / rho - 6.0 * dq / q;
    (b0, b1)
}

#[derive(Debug, Clone)]
pub struct LinearizedOperator {
    pub gs: Arc<GroundState>,
    pub b0: SampledCurve,
    pub b1: SampledCurve,
}

impl LinearizedOperator {
    pub fn new(gs: Arc<GroundState>) -> Result<Self> {
        let c = &gs.curve;
        let d1 = c.d1()?;
        let n = c.len();
        let (mut b0, mut b1) = (Vec::with_capacity(n), Vec::with_capacity(n));
        for i in 0..n {
            let (a, b) = coefficients(c.nodes()[i], c.values[i], d1[i]);
            b0.push(a);
            b1.push(b);
        }
        let grid = c.grid.clone();
        Ok(Self { b0: SampledCurve::new(grid.clone(), b0)?, b1: SampledCurve::new(grid, b1)?, gs })
    }

    /// `ℒf` at one point from `(f, f', f'')`.
    pub fn apply_at(&self, rho: f64, f: [f64; 3]) -> f64 {
        let (q, dq, _) = self.gs.eval3(rho);
        let (b0, b1) = coefficients(rho, q, dq);
        f[2] + (3.0 / rho + b1) * f[1] + b0 * f[0]
    }

    /// `ℒf` on the ground-state grid. Missing derivatives of `f` are filled by stencils.
    pub fn apply(&self, f: &SampledCurve) -> Result<SampledCurve> {
        f.check_same_grid(&self.gs.curve)?;
        let f = f.differentiated()?;
        let (d1, d2) = (f.d1()?, f.d2()?);
        let x = f.nodes();
        let out = (0..f.len())
            .map(|i| d2[i] + (3.0 / x[i] + self.b1.values[i]) * d1[i] + self.b0.values[i] * f.values[i])
            .collect();
        SampledCurve::new(f.grid.clone(), out)
    }

    /// Weight `p(ρ) = ρ³Q³(1+Q'²)^{-3/2}` with `ℒf = p⁻¹(p f')' + B₀ f`.
    pub fn weight(&self, rho: f64) -> f64 {
        let (q, dq, _) = self.gs.eval3(rho);
        (rho * q).powi(3) * (1.0 + dq * dq).powf(-1.5)
    }

    /// `ΛQ` sampled with exact first and second derivatives.
    pub fn lambda_q(&self) -> Result<SampledCurve> {
        let gs = &self.gs;
        SampledCurve::from_fn3(gs.curve.grid.clone(), |r| gs.lambda_q3(r))
    }

    /// Basis `{e₁, e₂}` of `ℒf = 0`: `e₁ = ΛQ`, `e₂ = ΛQ ∫₁^ρ dr / (p (ΛQ)²)`.
    pub fn homogeneous_basis(&self) -> Result<(SampledCurve, SampledCurve)> {
        let e1 = self.lambda_q()?;
        let x = e1.nodes().to_vec();
        let kern: Vec<f64> = (0..x.len()).map(|i| 1.0 / (self.weight(x[i]) * e1.values[i].powi(2))).collect();
        // the kernel grows like ρ^{-3}: integrate ρ³·kern against the exact weight
        let smooth: Vec<f64> = (0..x.len()).map(|i| kern[i] * x[i].powi(3)).collect();
        let prim = cumulative_weighted(&x, &smooth, |s| s.powi(-3))?;
        let anchor = interpolate_cumulative(&x, &prim, &kern, 1.0);
        let e1d1 = e1.d1()?.to_vec();
        let mut v = Vec::with_capacity(x.len());
        let mut d1 = Vec::with_capacity(x.len());
        let mut d2 = Vec::with_capacity(x.len());
        for i in 0..x.len() {
            let j = prim[i] - anchor;
            let f = e1.values[i] * j;
            let df = e1d1[i] * j + e1.values[i] * kern[i];
            v.push(f);
            d1.push(df);
            d2.push(-self.lower_order_terms(i, f, df));
        }
        let e2 = SampledCurve::with_derivs(e1.grid.clone(), v, Some(d1), Some(d2))?;
        Ok((e1, e2))
    }

    fn lower_order_terms(&self, i: usize, f: f64, df: f64) -> f64 {
        let x = self.gs.curve.nodes()[i];
        (3.0 / x + self.b1.values[i]) * df + self.b0.values[i] * f
    }

    /// Solve `ℒf = g` with `f(0) = f'(0) = 0` by the double-integral Duhamel
    /// formula `f = ΛQ ∫₀^ρ (p(ΛQ)²)⁻¹ ∫₀^r p ΛQ g`. `power_hint` is the
    /// exponent `p_g ≥ 0` of `g ~ ρ^{p_g}` at the origin, used for the
    /// contribution of `[0, ρ₀]`. The second derivative comes from the equation.
    pub fn duhamel_solve(&self, g: &SampledCurve, power_hint: f64) -> Result<SampledCurve> {
        g.check_same_grid(&self.gs.curve)?;
        if power_hint < 0.0 {
            return Err(Error::SingularEndpoint(format!("source power {power_hint} is below 0")));
        }
        let e1 = self.lambda_q()?;
        let e1d1 = e1.d1()?;
        let x = g.nodes();
        let n = x.len();
        let p: Vec<f64> = x.iter().map(|&r| self.weight(r)).collect();
        let inner: Vec<f64> = (0..n).map(|i| p[i] * e1.values[i] * g.values[i]).collect();
        let mut big_i = cumulative(x, &inner)?;
        let head_i = inner[0] * x[0] / (4.0 + power_hint);
        big_i.iter_mut().for_each(|v| *v += head_i);
        let kern: Vec<f64> = (0..n).map(|i| 1.0 / (p[i] * e1.values[i].powi(2))).collect();
        let outer: Vec<f64> = (0..n).map(|i| kern[i] * big_i[i]).collect();
        let mut big_j = cumulative(x, &outer)?;
        let head_j = outer[0] * x[0] / (2.0 + power_hint);
        big_j.iter_mut().for_each(|v| *v += head_j);
        let mut v = Vec::with_capacity(n);
        let mut d1 = Vec::with_capacity(n);
        let mut d2 = Vec::with_capacity(n);
        for i in 0..n {
            let f = e1.values[i] * big_j[i];
            let df = e1d1[i] * big_j[i] + e1.values[i] * outer[i];
            v.push(f);
            d1.push(df);
            d2.push(g.values[i] - self.lower_order_terms(i, f, df));
        }
        SampledCurve::with_derivs(g.grid.clone(), v, Some(d1), Some(d2))
    }
}

/// Value at `x0` of a cumulative integral known at nodes, by integrating the
/// local cubic of the integrand from the nearest node.
fn interpolate_cumulative(x: &[f64], prim: &[f64], f: &[f64], x0: f64) -> f64 {
    let i = x.partition_point(|&v| v <= x0).saturating_sub(1).min(x.len() - 2);
    let s = i.saturating_sub(1).min(x.len() - 4);
    let (xg, wg) = gauss_legendre(4);
    let (a, b) = (x[i], x0);
    let mut acc = 0.0;
    for (g, w) in xg.iter().zip(&wg) {
        let t = 0.5 * (a + b) + 0.5 * (b - a) * g;
        let mut v = 0.0;
        for j in 0..4 {
            let mut l = 1.0;
            for m in 0..4 {
                if m != j {
                    l *= (t - x[s + m]) / (x[s + j] - x[s + m]);
                }
            }
            v += l * f[s + j];
        }
        acc += w * v;
    }
    prim[i] + 0.5 * (b - a) * acc
}

/// Pointwise data of the conjugated form at one radius.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralPoint {
    pub h: f64,
    pub q: f64,
    pub dq: f64,
    pub ddq: f64,
    pub potential: f64,
}

/// `H = (1+Q'²)^{1/4} Q^{-3/2}`, `q = (1+Q'²)^{-1/2}` and
/// `𝒫 = −ℒH / (H(1+Q'²)) + qΔq`, all from a local jet of `Q`.
pub fn spectral_at(gs: &GroundState, rho: f64) -> Result<SpectralPoint> {
    let qj = gs.jet(rho, 5)?;
    let dqj = qj.derivative();
    let s = (&dqj * &dqj).add_const(1.0);
    let hj = &s.powf(0.25)? * &qj.powf(-1.5)?;
    let smallq = s.powf(-0.5)?;
    let h = [hj.deriv(0), hj.deriv(1), hj.deriv(2)];
    let (b0, b1) = coefficients(rho, qj.c[0], qj.c[1]);
    let lh = h[2] + (3.0 / rho + b1) * h[1] + b0 * h[0];
    let (q0, q1, q2) = (smallq.deriv(0), smallq.deriv(1), smallq.deriv(2));
    let potential = -lh / (h[0] * s.c[0]) + q0 * (q2 + 3.0 * q1 / rho);
    Ok(SpectralPoint { h: h[0], q: q0, dq: q1, ddq: q2, potential })
}

/// The closed-form potential `V♭/(1+Q'²)` written out in terms of `B₁`.
/// Kept as an independent cross-check of [`spectral_at`].
pub fn potential_closed_form(gs: &GroundState, rho: f64) -> Result<f64> {
    let qj = gs.jet(rho, 5)?;
    let r = Taylor::variable(rho, 5);
    let dq = qj.derivative();
    let dq2 = &dq * &dq;
    let b1 = &(&dq2.scale(9.0)).div(&r)? - &dq.scale(6.0).div(&qj)?;
    let (q, p, s) = (qj.c[0], dq.c[0], 1.0 + dq2.c[0]);
    let b = b1.c[0];
    let db = b1.c[1];
    let vflat = -3.0 * s / (q * q) + 0.5 * db - 0.25 * b * b - 1.5 * b * (-s / rho + 2.0 * p * (1.0 / q - p / rho));
    Ok(vflat / s)
}

#[derive(Debug, Clone)]
pub struct SpectralForm {
    pub h: SampledCurve,
    pub q: SampledCurve,
    pub potential: SampledCurve,
    /// `G = ΛQ / H`, a positive solution of `𝔏G = 0`.
    pub zero_mode: SampledCurve,
}

pub fn spectral_form(gs: &GroundState) -> Result<SpectralForm> {
    let grid = gs.curve.grid.clone();
    let pts: Vec<SpectralPoint> = grid.nodes().iter().map(|&r| spectral_at(gs, r)).collect::<Result<_>>()?;
    let lq: Vec<f64> = grid.nodes().iter().map(|&r| gs.lambda_q(r).0).collect();
    Ok(SpectralForm {
        h: SampledCurve::new(grid.clone(), pts.iter().map(|p| p.h).collect())?,
        q: SampledCurve::with_derivs(
            grid.clone(),
            pts.iter().map(|p| p.q).collect(),
            Some(pts.iter().map(|p| p.dq).collect()),
            Some(pts.iter().map(|p| p.ddq).collect()),
        )?,
        potential: SampledCurve::new(grid.clone(), pts.iter().map(|p| p.potential).collect())?,
        zero_mode: SampledCurve::new(grid, lq.iter().zip(&pts).map(|(l, p)| l / p.h).collect())?,
    })
}

impl SpectralForm {
    /// `𝔏f = −q(∂² + (3/ρ)∂)(qf) + 𝒫f` with grid stencils.
    pub fn apply(&self, f: &SampledCurve) -> Result<SampledCurve> {
        f.check_same_grid(&self.q)?;
        let x = f.nodes();
        let qf: Vec<f64> = (0..f.len()).map(|i| self.q.values[i] * f.values[i]).collect();
        let (d1, d2) = diff::differentiate_both(x, &qf)?;
        let out = (0..f.len())
            .map(|i| -self.q.values[i] * (d2[i] + 3.0 * d1[i] / x[i]) + self.potential.values[i] * f.values[i])
            .collect();
        SampledCurve::new(f.grid.clone(), out)
    }
}

/// Pointwise tables of `q`, `q'`, `𝒫` on a fixed quadrature rule, reused for
/// every Rayleigh quotient.
#[derive(Debug, Clone)]
pub struct RayleighTable {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    q: Vec<f64>,
    dq: Vec<f64>,
    potential: Vec<f64>,
}

impl RayleighTable {
    /// Composite 8-point Gauss–Legendre on `[0, r_max]` with `panels` panels.
    pub fn new(gs: &GroundState, r_max: f64, panels: usize) -> Result<Self> {
        let (gx, gw) = gauss_legendre(8);
        let h = r_max / panels as f64;
        let mut t = RayleighTable {
            nodes: Vec::new(),
            weights: Vec::new(),
            q: Vec::new(),
            dq: Vec::new(),
            potential: Vec::new(),
        };
        for p in 0..panels {
            let c = h * (p as f64 + 0.5);
            for (xi, wi) in gx.iter().zip(&gw) {
                let r = c + 0.5 * h * xi;
                let sp = spectral_at(gs, r)?;
                t.nodes.push(r);
                t.weights.push(0.5 * h * wi);
                t.q.push(sp.q);
                t.dq.push(sp.dq);
                t.potential.push(sp.potential);
            }
        }
        Ok(t)
    }

    /// `(𝔏f|f) / ‖∇f‖²` in the radial 4-d measure, for `f` given as `(f, f')`.
    pub fn ratio(&self, f: impl Fn(f64) -> (f64, f64)) -> f64 {
        let (mut num, mut den) = (0.0, 0.0);
        for i in 0..self.nodes.len() {
            let r = self.nodes[i];
            let (v, dv) = f(r);
            let w = self.weights[i] * r.powi(3);
            let dqf = self.dq[i] * v + self.q[i] * dv;
            num += w * (dqf * dqf + self.potential[i] * v * v);
            den += w * dv * dv;
        }
        num / den
    }
}

/// Smooth compactly supported bump `exp(1 − 1/(1 − s²))`, `s = (ρ − c)/w`,
/// with its derivative.
pub fn bump(r: f64, c: f64, w: f64) -> (f64, f64) {
    let s = (r - c) / w;
    if s.abs() >= 1.0 {
        return (0.0, 0.0);
    }
    let d = 1.0 - s * s;
    let v = (1.0 - 1.0 / d).exp();
    (v, v * (-2.0 * s / (d * d)) / w)
}

#[derive(Debug, Clone)]
pub struct CoercivityReport {
    pub ratios: Vec<f64>,
    pub min_ratio: f64,
}

/// Rayleigh ratios of `samples` random sums of 1 to 4 bumps with centres in
/// `[0.5, 40]`, widths in `[0.2, 10]` and signed amplitudes.
pub fn coercivity_check(table: &RayleighTable, samples: usize, seed: u64) -> Result<CoercivityReport> {
    if samples < 10 {
        return Err(Error::InvalidConfig(format!("need at least 10 samples, got {samples}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let r_max = *table.nodes.last().unwrap_or(&0.0);
    let mut ratios = Vec::with_capacity(samples);
    while ratios.len() < samples {
        let m = rng.gen_range(1..=4);
        let bumps: Vec<(f64, f64, f64)> = (0..m)
            .map(|_| {
                let w: f64 = rng.gen_range(0.2..10.0);
                let c: f64 = rng.gen_range(0.5..40.0f64).max(w + 1e-3).min(r_max - w);
                (rng.gen_range(-1.0..1.0), c, w)
            })
            .collect();
        let f = |r: f64| {
            bumps.iter().fold((0.0, 0.0), |acc, &(a, c, w)| {
                let (v, d) = bump(r, c, w);
                (acc.0 + a * v, acc.1 + a * d)
            })
        };
        let ratio = table.ratio(f);
        if ratio.is_finite() {
            ratios.push(ratio);
        }
    }
    let min_ratio = ratios.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(CoercivityReport { ratios, min_ratio })
}
