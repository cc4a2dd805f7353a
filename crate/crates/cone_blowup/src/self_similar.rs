//! Self-similar region: `u = ρ + λ(t) W(t, ρ/λ(t))` with
//! `W = Σ t^{νk}(log t)^ℓ w_{k,ℓ}(z)` and `λ(t) = t(1 + Σ λ_{k,ℓ} t^{νk}(log t)^ℓ)`.
//! The operators `L̃_k` degenerate on the light cone `z = 1/√2`. Only the
//! orders `k = 3, 4, 5` are built; at those orders every `w_{k,ℓ}` with
//! `ℓ > 0` vanishes and the equations are homogeneous.

use std::f64::consts::{FRAC_1_SQRT_2, SQRT_2};
use std::sync::Arc;

use crate::config::Config;
use crate::error::{Error, Result};
use crate::inner::InnerProfile;
use crate::numerics::fit::least_squares;
use crate::numerics::quad::gauss_legendre;
use crate::numerics::smooth::chi0;
use crate::numerics::{Jet2, RadialGrid, SampledCurve, Taylor};

/// The light cone `z = 1/√2`.
pub const LIGHT_CONE: f64 = FRAC_1_SQRT_2;

/// Lowest and highest order constructed.
pub const ORDERS: std::ops::RangeInclusive<usize> = 3..=5;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    Plus,
    Minus,
}

/// `binom(j, ℓ)(log|1/√2 ± z|)^{j−ℓ} |1/√2 ± z|^{α}/z³` with `α = νk + 4`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BasisElement {
    pub j: u32,
    pub k: usize,
    pub l: u32,
    pub sign: Branch,
    pub alpha: f64,
}

impl BasisElement {
    pub fn new(nu: f64, k: usize, j: u32, l: u32, sign: Branch) -> Result<Self> {
        if l > j || 2 * j as usize > k.saturating_sub(3) {
            return Err(Error::InvalidConfig(format!("basis indices need l <= j <= (k-3)/2, got j={j} l={l} k={k}")));
        }
        Ok(Self { j, k, l, sign, alpha: nu * k as f64 + 4.0 })
    }

    /// Leading element `f^{0,±}_{k,0}`.
    pub fn leading(nu: f64, k: usize, sign: Branch) -> Self {
        Self { j: 0, k, l: 0, sign, alpha: nu * k as f64 + 4.0 }
    }

    /// Taylor jet of the element at `z` with `len` coefficients.
    pub fn jet(&self, z: f64, len: usize) -> Result<Taylor> {
        if !(z > 0.0) {
            return Err(Error::InvalidConfig(format!("basis evaluated at z = {z}")));
        }
        let mut u = Taylor::variable(z, len);
        match self.sign {
            Branch::Plus => u.c[0] += LIGHT_CONE,
            Branch::Minus => {
                if z == LIGHT_CONE {
                    // |z − 1/√2|^α vanishes with its first ⌈α⌉ − 1 derivatives.
                    return Ok(Taylor::constant(0.0, len));
                }
                u.c[0] -= LIGHT_CONE;
                if z < LIGHT_CONE {
                    u = u.scale(-1.0);
                }
            }
        }
        let mut f = u.powf(self.alpha)?;
        if self.j > self.l {
            let lg = u.ln()?.powi(self.j - self.l);
            f = &f * &lg.scale(binomial(self.j, self.l));
        }
        let zi = Taylor::variable(z, len).recip()?;
        Ok(&f * &zi.powi(3))
    }

    pub fn eval(&self, z: f64) -> Result<f64> {
        Ok(self.jet(z, 1)?.value())
    }

    /// `(f, f', f'')` at `z`.
    pub fn eval3(&self, z: f64) -> Result<[f64; 3]> {
        let t = self.jet(z, 3)?;
        Ok([t.deriv(0), t.deriv(1), t.deriv(2)])
    }
}

fn binomial(n: u32, k: u32) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Coefficients `(A, B, C)` of `L̃_k = A ∂² + B ∂ + C` at `z`:
/// `A = 2z² − 1`, `B = −(4zνk + 6/z)`, `C = 2νk(1+νk) − 6/z²`.
pub fn ltilde_coefficients(nu: f64, k: usize, z: f64) -> (f64, f64, f64) {
    let nk = nu * k as f64;
    (2.0 * z * z - 1.0, -(4.0 * z * nk + 6.0 / z), 2.0 * nk * (1.0 + nk) - 6.0 / (z * z))
}

/// `L̃_k w` at one point from `(w, w', w'')`.
pub fn ltilde_at(nu: f64, k: usize, z: f64, w: [f64; 3]) -> f64 {
    let (a, b, c) = ltilde_coefficients(nu, k, z);
    a * w[2] + b * w[1] + c * w[0]
}

/// `L̃_k w` on the grid of `w`; missing derivatives are filled by stencils.
pub fn apply_ltilde(nu: f64, k: usize, w: &SampledCurve) -> Result<SampledCurve> {
    let w = w.differentiated()?;
    let (d1, d2) = (w.d1()?, w.d2()?);
    let out = (0..w.len()).map(|i| ltilde_at(nu, k, w.nodes()[i], [w.values[i], d1[i], d2[i]])).collect();
    SampledCurve::new(w.grid.clone(), out)
}

/// Closed-form Wronskian `f⁺(f⁻)' − f⁻(f⁺)'` of the leading pair:
/// `√2 α sgn(z − 1/√2) |z² − 1/2|^{α−1} / z⁶`.
pub fn wronskian_closed_form(alpha: f64, z: f64) -> f64 {
    SQRT_2 * alpha * (z - LIGHT_CONE).signum() * (z * z - 0.5).abs().powf(alpha - 1.0) / z.powi(6)
}

/// Matching constants `(c^{k,0}_{0,−2}, c^{k,0}_{0,−3})` read off the inner
/// tails: `c^{k,0}_{0,β} = 0` when `β + k − 1` is odd, otherwise
/// `d_{−β, (β+k−1)/2, 0}`.
pub fn matching_coeffs(k: usize, inner: &InnerProfile) -> Result<(f64, f64)> {
    Ok((matching_coeff(k, -2, inner)?, matching_coeff(k, -3, inner)?))
}

/// One matching constant `c^{k,0}_{0,β}` for `β < 0`.
pub fn matching_coeff(k: usize, beta: i32, inner: &InnerProfile) -> Result<f64> {
    let m = beta + k as i32 - 1;
    if m % 2 != 0 {
        return Ok(0.0);
    }
    if m < 0 {
        return Ok(0.0);
    }
    let layer = (m / 2) as usize;
    if layer > inner.n() {
        return Err(Error::MissingTailCoefficient { n: -beta, k: layer, l: 0 });
    }
    inner.d(-beta, layer, 0)
}

/// One constructed order `w_{k,0} = a⁺ f^{0,+} + a⁻ f^{0,−}`, with the minus
/// branch dropped beyond the light cone.
#[derive(Debug, Clone)]
pub struct LowOrder {
    pub k: usize,
    pub alpha: f64,
    pub a_plus: f64,
    pub a_minus: f64,
    /// `c^{k,0}_{0,−2}` and `c^{k,0}_{0,−3}`.
    pub matching: (f64, f64),
    /// `λ_{k,0} = −w_{k,0}(1/√2)`.
    pub lambda: f64,
    pub w: SampledCurve,
}

impl LowOrder {
    /// Taylor jet of `w_{k,0}` at `z > 0` with `len` coefficients.
    pub fn jet(&self, nu: f64, z: f64, len: usize) -> Result<Taylor> {
        let p = BasisElement::leading(nu, self.k, Branch::Plus).jet(z, len)?.scale(self.a_plus);
        if z > LIGHT_CONE {
            return Ok(p);
        }
        let m = BasisElement::leading(nu, self.k, Branch::Minus).jet(z, len)?.scale(self.a_minus);
        Ok(&p + &m)
    }

    /// `(w, w', w'')` at `z > 0`.
    pub fn eval3(&self, nu: f64, z: f64) -> Result<[f64; 3]> {
        let p = BasisElement::leading(nu, self.k, Branch::Plus).eval3(z)?;
        if z > LIGHT_CONE {
            return Ok(p.map(|v| self.a_plus * v));
        }
        let m = BasisElement::leading(nu, self.k, Branch::Minus).eval3(z)?;
        Ok([0, 1, 2].map(|i| self.a_plus * p[i] + self.a_minus * m[i]))
    }
}

/// The `z`-grid used for tabulation: geometric on `[z_min, z_max]` with a
/// uniform band around the light cone.
#[derive(Debug, Clone, Copy)]
pub struct SsGridOptions {
    pub z_min: f64,
    pub z_max: f64,
    pub nodes: usize,
    pub band_half_width: f64,
    pub band_step: f64,
}

impl Default for SsGridOptions {
    fn default() -> Self {
        Self { z_min: 1e-3, z_max: 200.0, nodes: 1500, band_half_width: 0.2, band_step: 1e-3 }
    }
}

impl SsGridOptions {
    pub fn build(&self) -> Result<RadialGrid> {
        RadialGrid::geometric(self.z_min, 1e-4, self.z_max, self.nodes)?.with_uniform_band(
            LIGHT_CONE - self.band_half_width,
            LIGHT_CONE + self.band_half_width,
            self.band_step,
        )
    }
}

#[derive(Debug, Clone)]
pub struct SelfSimilarProfile {
    pub config: Config,
    pub grid: Arc<RadialGrid>,
    pub orders: Vec<LowOrder>,
    /// `c^{5,0}_{0,−4}`, which must vanish for the construction to close.
    pub c5_m4: f64,
}

/// Solve the 2×2 matching systems for `k = 3, 4, 5`:
/// `(a⁺ + a⁻)(1/√2)^α = c_{0,−3}` and `(a⁺ − a⁻) α (1/√2)^{α−1} = c_{0,−2}`.
pub fn solve_low_orders(inner: &InnerProfile, grid_opts: &SsGridOptions) -> Result<SelfSimilarProfile> {
    let config = inner.config;
    let nu = config.nu;
    let grid = Arc::new(grid_opts.build()?);
    let mut orders = Vec::new();
    for k in ORDERS {
        let (c2, c3) = matching_coeffs(k, inner)?;
        let alpha = config.alpha(k);
        let p = LIGHT_CONE.powf(alpha);
        let q = alpha * LIGHT_CONE.powf(alpha - 1.0);
        let det = -2.0 * p * q;
        if !(det.abs() > 1e-300) {
            return Err(Error::SingularMatchingSystem(k));
        }
        let sum = c3 / p;
        let diff = c2 / q;
        let (a_plus, a_minus) = (0.5 * (sum + diff), 0.5 * (sum - diff));
        let mut order =
            LowOrder { k, alpha, a_plus, a_minus, matching: (c2, c3), lambda: 0.0, w: SampledCurve::new(grid.clone(), vec![0.0; grid.len()])? };
        order.lambda = -order.eval3(nu, LIGHT_CONE)?[0];
        order.w = SampledCurve::from_fn3(grid.clone(), |z| {
            let w = order.eval3(nu, z).unwrap_or([f64::NAN; 3]);
            (w[0], w[1], w[2])
        })?;
        orders.push(order);
    }
    let c5_m4 = matching_coeff(5, -4, inner)?;
    Ok(SelfSimilarProfile { config, grid, orders, c5_m4 })
}

impl SelfSimilarProfile {
    pub fn order(&self, k: usize) -> Option<&LowOrder> {
        self.orders.iter().find(|o| o.k == k)
    }

    /// `λ(t) = t(1 + Σ λ_{k,0} t^{νk})`.
    pub fn lambda_of_t(&self, t: f64) -> f64 {
        t * (1.0 + self.orders.iter().map(|o| o.lambda * t.powf(self.config.nu * o.k as f64)).sum::<f64>())
    }

    /// `(W, W_z, W_zz)` at `(t, z)` with `W = Σ t^{νk} w_{k,0}(z)`.
    pub fn w_sum(&self, t: f64, z: f64) -> Result<[f64; 3]> {
        let mut out = [0.0; 3];
        for o in &self.orders {
            let w = o.eval3(self.config.nu, z)?;
            let c = t.powf(self.config.nu * o.k as f64);
            for i in 0..3 {
                out[i] += c * w[i];
            }
        }
        Ok(out)
    }

    /// `u_ss = ρ + λ(t) W(t, ρ/λ(t))` as a second-order jet in `(t, ρ)`.
    pub fn u_jet(&self, t: f64, rho: f64) -> Result<Jet2> {
        Ok(Jet2::r(rho) + self.excess_jet(t, rho)?)
    }

    /// `u_ss − ρ = λ(t) W(t, ρ/λ(t))` as a jet in `(t, ρ)`.
    pub fn excess_jet(&self, t: f64, rho: f64) -> Result<Jet2> {
        let nu = self.config.nu;
        let tj = Jet2::t(t);
        let mut lam = Jet2::constant(1.0);
        for o in &self.orders {
            lam = lam + tj.powf(nu * o.k as f64).scale(o.lambda);
        }
        let lam = tj * lam;
        let z = Jet2::r(rho).div(&lam);
        let mut w = Jet2::constant(0.0);
        for o in &self.orders {
            let d = o.eval3(nu, z.f)?;
            w = w + tj.powf(nu * o.k as f64) * z.chain(d[0], d[1], d[2]);
        }
        Ok(lam * w)
    }

    /// `(V_ss, ∂_y V_ss, ∂²_y V_ss)` at `(t, y)`:
    /// `V_ss = y + λ t^{−ν−1} W(t, y t^{ν+1}/λ)`.
    pub fn eval(&self, t: f64, y: f64) -> Result<[f64; 3]> {
        let nu = self.config.nu;
        let lam = self.lambda_of_t(t);
        let scale = t.powf(nu + 1.0) / lam;
        let w = self.w_sum(t, y * scale)?;
        Ok([y + w[0] / scale, 1.0 + w[1], w[2] * scale])
    }

    /// `[t^{ε₁−ν}/10, 10 t^{−ε₂−ν}]` in `y`.
    pub fn region(&self, t: f64) -> (f64, f64) {
        let c = &self.config;
        (t.powf(c.eps1 - c.nu) / 10.0, 10.0 * t.powf(-c.eps2 - c.nu))
    }
}

/// `V_ss(t, ·)` tabulated on `n` log-spaced nodes of its region.
pub fn assemble_ss(profile: &SelfSimilarProfile, t: f64, n: usize) -> Result<SampledCurve> {
    if !(t > 0.0 && t < 1.0) {
        return Err(Error::InvalidConfig(format!("t must lie in (0, 1), got {t}")));
    }
    let (lo, hi) = profile.region(t);
    let grid = Arc::new(RadialGrid::log_uniform(lo, hi, n)?);
    SampledCurve::from_fn3(grid, |y| {
        let v = profile.eval(t, y).unwrap_or([f64::NAN; 3]);
        (v[0], v[1], v[2])
    })
}

/// Spacing of the 9 nodes used to fit the jet of the source at the light cone.
pub const JET_FIT_SPACING: f64 = 0.005;

/// The jet-killing polynomial is cut off smoothly between `|z − 1/√2| = POLY_CUTOFF`
/// and twice that, so that it does not swamp the solution far from the cone.
pub const POLY_CUTOFF: f64 = 0.05;

/// Solve `L̃_k f = g`, `f(1/√2) = 0`, for the solution that is smooth across
/// the light cone. A polynomial `f⁰ = Σ_{m=1}^{K+1} α_m (z − 1/√2)^m` first
/// removes the jet of `g` through order `K = taylor_kill_order`; the rest
/// comes from the variation-of-constants integral against `f^{0,±}_{k,0}`.
/// The jet of `g` at the light cone is fitted by least squares on 9 nodes
/// spread over `±4 JET_FIT_SPACING`.
pub fn lightcone_duhamel(nu: f64, k: usize, g: &SampledCurve, taylor_kill_order: usize) -> Result<SampledCurve> {
    lightcone_duhamel_fn(nu, k, &|s| g.eval(s), g.grid.clone(), taylor_kill_order)
}

/// [`lightcone_duhamel`] with the source given pointwise.
pub fn lightcone_duhamel_fn(
    nu: f64,
    k: usize,
    g: &dyn Fn(f64) -> f64,
    grid: Arc<RadialGrid>,
    taylor_kill_order: usize,
) -> Result<SampledCurve> {
    let a = LIGHT_CONE;
    let alpha = nu * k as f64 + 4.0;
    let deg = 8;
    if taylor_kill_order + 2 > deg {
        return Err(Error::InsufficientSmoothness(format!("kill order {taylor_kill_order} needs more than 9 fit nodes")));
    }
    let x = grid.nodes();
    if x[0] > a - 0.1 || grid.last() < a + 0.1 {
        return Err(Error::InsufficientSmoothness("grid does not cover the light cone".into()));
    }
    // Jet of g at the light cone.
    let picks: Vec<f64> = (0..9).map(|i| a + JET_FIT_SPACING * (i as f64 - 4.0)).collect();
    let cols: Vec<Vec<f64>> = (0..=deg).map(|p| picks.iter().map(|&s| (s - a).powi(p as i32)).collect()).collect();
    let ys: Vec<f64> = picks.iter().map(|&s| g(s)).collect();
    let (gjet, _) = least_squares(&cols, &ys, 1e14)?;
    // Taylor coefficients of L̃_k (h^m) at the light cone.
    let len = deg + 1;
    let zt = Taylor::variable(a, len);
    let zi = zt.recip()?;
    let nk = nu * k as f64;
    let ca = (&zt * &zt).scale(2.0).add_const(-1.0);
    let cb = &zt.scale(-4.0 * nk) - &zi.scale(6.0);
    let cc = (&zi * &zi).scale(-6.0).add_const(2.0 * nk * (1.0 + nk));
    let l_of = |m: usize| -> Taylor {
        let mut h = vec![0.0; len];
        let mut dh = vec![0.0; len];
        let mut ddh = vec![0.0; len];
        if m < len {
            h[m] = 1.0;
        }
        if m >= 1 && m - 1 < len {
            dh[m - 1] = m as f64;
        }
        if m >= 2 && m - 2 < len {
            ddh[m - 2] = (m * (m - 1)) as f64;
        }
        let t = &(&ca * &Taylor::new(ddh)) + &(&cb * &Taylor::new(dh));
        &t + &(&cc * &Taylor::new(h))
    };
    let mut resid = Taylor::new(gjet);
    let mut coef = vec![0.0; taylor_kill_order + 2];
    for m in 1..=taylor_kill_order + 1 {
        let lm = l_of(m);
        let lead = lm.c[m - 1];
        if lead.abs() < 1e-8 {
            return Err(Error::InsufficientSmoothness(format!("resonant order {m} for alpha = {alpha}")));
        }
        coef[m] = resid.c[m - 1] / lead;
        resid = &resid - &lm.scale(coef[m]);
    }
    for c in resid.c.iter_mut().take(taylor_kill_order + 1) {
        *c = 0.0;
    }
    let f0 = |z: f64| -> [f64; 3] {
        let h = z - a;
        if h.abs() >= 2.0 * POLY_CUTOFF {
            return [0.0; 3];
        }
        let mut p = [0.0; 3];
        for (m, &c) in coef.iter().enumerate().skip(1) {
            let mf = m as f64;
            p[0] += c * h.powi(m as i32);
            p[1] += c * mf * h.powi(m as i32 - 1);
            if m >= 2 {
                p[2] += c * mf * (mf - 1.0) * h.powi(m as i32 - 2);
            }
        }
        let (x0, x1, x2) = chi0(h.abs() / POLY_CUTOFF);
        let (x1, x2) = (x1 * h.signum() / POLY_CUTOFF, x2 / (POLY_CUTOFF * POLY_CUTOFF));
        [x0 * p[0], x1 * p[0] + x0 * p[1], x2 * p[0] + 2.0 * x1 * p[1] + x0 * p[2]]
    };
    // g̃ = g − L̃f⁰: the Taylor model inside the near zone, interpolated data outside.
    let near = 0.02;
    let gt = |s: f64| -> f64 {
        if (s - a).abs() < near {
            resid.eval_at(s - a)
        } else {
            g(s) - ltilde_at(nu, k, s, f0(s))
        }
    };
    // Exact integrals of s³ g̃_model(s) |s−a|^{−α} over [a, a+h].
    let cube = &(&zt * &zt) * &zt;
    let poly = &cube * &resid;
    let near_minus = |h: f64| -> f64 {
        let ah = h.abs();
        poly.c
            .iter()
            .enumerate()
            .skip(taylor_kill_order + 1)
            .map(|(j, &c)| {
                let e = j as f64 - alpha + 1.0;
                let sign = if h >= 0.0 || (j + 1) % 2 == 0 { 1.0 } else { -1.0 };
                c * sign * ah.powf(e) / e
            })
            .sum()
    };
    let (gx, gw) = gauss_legendre(10);
    let gl = |f: &dyn Fn(f64) -> f64, lo: f64, hi: f64| -> f64 {
        let (c, hw) = (0.5 * (lo + hi), 0.5 * (hi - lo));
        hw * gx.iter().zip(&gw).map(|(xi, wi)| wi * f(c + hw * xi)).sum::<f64>()
    };
    let km = |s: f64| s.powi(3) * gt(s) / (s - a).abs().powf(alpha);
    let kp = |s: f64| s.powi(3) * gt(s) / (s + a).powf(alpha);
    let n = x.len();
    let (mut ia, mut ib) = (vec![0.0; n], vec![0.0; n]);
    let split = x.partition_point(|&v| v < a);
    for (range, dir) in [((split..n).collect::<Vec<_>>(), 1.0), ((0..split).rev().collect::<Vec<_>>(), -1.0)] {
        let edge = a + dir * near;
        let ia_edge = near_minus(dir * near);
        let ib_edge = gl(&kp, a, edge);
        let mut prev: Option<(f64, f64, f64)> = None;
        for i in range {
            let z = x[i];
            if (z - a).abs() <= near {
                ia[i] = near_minus(z - a);
                ib[i] = gl(&kp, a, z);
                continue;
            }
            let (from, a0, b0) = prev.unwrap_or((edge, ia_edge, ib_edge));
            let (va, vb) = (a0 + gl(&km, from, z), b0 + gl(&kp, from, z));
            ia[i] = va;
            ib[i] = vb;
            prev = Some((z, va, vb));
        }
    }
    let plus = BasisElement::leading(nu, k, Branch::Plus);
    let minus = BasisElement::leading(nu, k, Branch::Minus);
    let norm = 1.0 / (2.0 * SQRT_2 * alpha);
    let (mut v, mut d1, mut d2) = (Vec::with_capacity(n), Vec::with_capacity(n), Vec::with_capacity(n));
    for i in 0..n {
        let z = x[i];
        let (fp, fm) = (plus.eval3(z)?, minus.eval3(z)?);
        let p0 = f0(z);
        let gz = if z == a { 0.0 } else { gt(z) };
        let kern1 = if z == a { 0.0 } else { fm[1] / (z - a).abs().powf(alpha) };
        v.push(p0[0] + norm * (fm[0] * ia[i] - fp[0] * ib[i]));
        d1.push(p0[1] + norm * (fm[1] * ia[i] - fp[1] * ib[i]));
        d2.push(
            p0[2]
                + norm * (fm[2] * ia[i] - fp[2] * ib[i])
                + norm * z.powi(3) * gz * (kern1 - fp[1] / (z + a).powf(alpha)),
        );
    }
    SampledCurve::with_derivs(grid, v, Some(d1), Some(d2))
}
