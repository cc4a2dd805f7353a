//! Remote region: `u_out = ρ + Σ_k t^k 𝔤_k(ρ)` built from cut-off Cauchy data
//! and the algebraic recursion obtained by substituting the ansatz into the
//! equation and collecting powers of `t`.
//!
//! Every layer is computed pointwise as a Taylor jet in `ρ`, so derivatives
//! are exact and the profile can be evaluated anywhere without interpolation.

use std::f64::consts::SQRT_2;
use std::sync::Arc;

use crate::config::Config;
use crate::error::{Error, Result};
use crate::numerics::fit::log_slope;
use crate::numerics::smooth::chi_delta_jet;
use crate::numerics::{Jet2, RadialGrid, SampledCurve, Taylor, TruncSeries};
use crate::self_similar::SelfSimilarProfile;

/// Smallest admissible value of `2 + 2𝔤₀' + 𝔤₀'²`.
pub const DENOMINATOR_FLOOR: f64 = 0.1;

/// Lower end of the tabulation grid and of the near-origin slope window.
pub const RHO_MIN: f64 = 1e-3;

/// Coefficients of `ρ^{kν+1}` in `𝔤₀` and of `ρ^{kν}` in `𝔤₁` (before the cutoff).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MuCoeffs {
    pub k: usize,
    pub mu0: f64,
    pub mu1: f64,
}

/// `μ⁰_{k,0}` and `μ¹_{k,0}` from the branch that survives beyond the light
/// cone: `μ⁰ = a⁺`, `μ¹ = (νk+4) a⁺/√2`.
pub fn mu_coefficients(ss: &SelfSimilarProfile) -> Vec<MuCoeffs> {
    ss.orders
        .iter()
        .map(|o| MuCoeffs { k: o.k, mu0: o.a_plus, mu1: o.alpha * o.a_plus / SQRT_2 })
        .collect()
}

/// Jets of `(𝔤₀, 𝔤₁)` at `ρ`.
pub fn cauchy_jets(nu: f64, mu: &[MuCoeffs], delta: f64, rho: f64, len: usize) -> Result<(Taylor, Taylor)> {
    let r = Taylor::variable(rho, len);
    let chi = chi_delta_jet(&r, delta);
    if chi.c.iter().all(|&v| v == 0.0) {
        return Ok((Taylor::constant(0.0, len), Taylor::constant(0.0, len)));
    }
    let (mut u0, mut u1) = (Taylor::constant(0.0, len), Taylor::constant(0.0, len));
    for m in mu {
        let p = nu * m.k as f64;
        u0 = &u0 + &r.powf(p + 1.0)?.scale(m.mu0);
        u1 = &u1 + &r.powf(p)?.scale(m.mu1);
    }
    Ok((&chi * &u0, &chi * &u1))
}

/// Coefficients `ǔ_j`, `j < len`, of `ǔ = (u − ρ)/(1 + (u − ρ)/ρ)` with
/// `u − ρ = Σ t^j 𝔤_j`.
pub fn u_check(g: &[Taylor], rho: f64, len: usize) -> Result<Vec<Taylor>> {
    let short = g.iter().map(|j| j.len()).min().unwrap_or(1);
    let r = Taylor::variable(rho, short);
    let dev = TruncSeries::new((0..len).map(|j| g.get(j).cloned().unwrap_or(Taylor::constant(0.0, short))).collect());
    let den = dev.mul_coeff(&r.recip()?).add_const(1.0);
    Ok(dev.mul(&den.recip()?).a)
}

/// `ℋ_k` from the layer jets `g[0..k]` (`g.len() >= k`).
pub fn h_source(k: usize, g: &[Taylor], rho: f64) -> Result<Taylor> {
    if k < 2 || g.len() < k {
        return Err(Error::MissingLayer(g.len()));
    }
    let uc = u_check(&g[..k - 1], rho, k - 1)?;
    let gp: Vec<Taylor> = g.iter().map(|j| j.derivative()).collect();
    let gpp: Vec<Taylor> = gp.iter().map(|j| j.derivative()).collect();
    let len = g[k - 2].len().saturating_sub(2).min(g[k - 1].len().saturating_sub(1)).max(1);
    let r = Taylor::variable(rho, len);
    let ri = r.recip()?;
    let (ri2, ri3) = (&ri * &ri, &(&ri * &ri) * &ri);
    let mut h = Taylor::constant(0.0, len);
    let kf = |i: usize| i as f64;
    // ℋ¹ = l_ρ 𝔤_{k−2}
    let j = k - 2;
    h = &h + &gpp[j];
    h = &h + &(&(&gp[j] * &ri) + &(&g[j] * &ri2)).scale(6.0);
    // ℋ²
    for k2 in 1..=k {
        let k1 = k - k2;
        let c = kf(k1) * (kf(k1) - 1.0 - kf(k2));
        if c != 0.0 {
            h = &h - &(&g[k1] * &gp[k2]).scale(2.0 * c);
        }
    }
    for k1 in 0..=k - 2 {
        let k2 = k - 2 - k1;
        let inner = &(&uc[k2] * &ri2) + &(&gp[k2] * &ri);
        let t = &(&gp[k1] * &inner) - &(&(&g[k1] * &uc[k2]) * &ri3);
        h = &h + &t.scale(6.0);
    }
    // ℋ³
    for k1 in 1..k {
        for k2 in 1..=k - k1 {
            let k3 = k - k1 - k2;
            let gg = &g[k1] * &g[k2];
            let inner = &(&uc[k3] * &ri2) + &(&gp[k3] * &ri);
            let mut t = -&(&gg * &gpp[k3]);
            t = &t + &(&(&g[k1] * &gp[k2]) * &gp[k3]).scale(2.0);
            t = &t - &(&gg * &inner).scale(3.0);
            h = &h + &t.scale(kf(k1) * kf(k2));
        }
    }
    for k1 in 2..k {
        for k2 in 0..=k - k1 {
            let k3 = k - k1 - k2;
            h = &h - &(&(&g[k1] * &gp[k2]) * &gp[k3]).scale(kf(k1) * (kf(k1) - 1.0));
        }
    }
    for k1 in 0..=k - 2 {
        for k2 in 0..=k - 2 - k1 {
            let k3 = k - 2 - k1 - k2;
            let inner = &(&uc[k3] * &ri2) + &(&gp[k3] * &ri);
            h = &h + &(&(&gp[k1] * &gp[k2]) * &inner).scale(3.0);
        }
    }
    Ok(h)
}

/// `2 + 2𝔤₀' + 𝔤₀'²`, guarded against degeneration.
fn denominator(g0: &Taylor, rho: f64) -> Result<Taylor> {
    let p = g0.derivative();
    let d = (&p * &p).add_const(2.0);
    let d = &d + &p.scale(2.0);
    if d.value() < DENOMINATOR_FLOOR {
        return Err(Error::DivisionNearZero(format!(
            "2 + 2g0' + g0'^2 = {:e} at rho = {rho}; delta is too large",
            d.value()
        )));
    }
    Ok(d)
}

/// Jets of `𝔤₀ … 𝔤_n` at `ρ`, each at least three coefficients long.
pub fn layer_jets(nu: f64, mu: &[MuCoeffs], delta: f64, n: usize, rho: f64) -> Result<Vec<Taylor>> {
    let len = 3 + n.max(1);
    let (g0, g1) = cauchy_jets(nu, mu, delta, rho, len)?;
    let mut g = vec![g0, g1];
    if n >= 2 {
        let den = denominator(&g[0], rho)?;
        for k in 2..=n {
            let h = h_source(k, &g, rho)?;
            g.push(h.div(&den)?.scale(1.0 / (k * (k - 1)) as f64));
        }
    }
    g.truncate(n + 1);
    Ok(g)
}

/// Coefficients of `t^0 … t^{len−1}` of the equation evaluated on
/// `u = ρ + Σ t^k g_k`, as jets in `ρ`. Only the first `g.len() − 2`
/// coefficients see every layer they depend on.
pub fn pde_residual_series(g: &[Taylor], rho: f64, len: usize) -> Result<Vec<Taylor>> {
    let short = g.iter().map(|j| j.len()).min().unwrap_or(3);
    if short < 3 {
        return Err(Error::InvariantViolation("layer jets need three coefficients".into()));
    }
    let zero = Taylor::constant(0.0, short);
    let at = |j: usize| g.get(j).cloned().unwrap_or_else(|| zero.clone());
    let r = Taylor::variable(rho, short);
    let series = |f: &dyn Fn(usize) -> Taylor| TruncSeries::new((0..len).map(f).collect());
    let u = series(&|j| if j == 0 { &r + &at(0) } else { at(j) });
    let ur = series(&|j| if j == 0 { at(0).derivative().add_const(1.0) } else { at(j).derivative() });
    let urr = series(&|j| at(j).derivative().derivative());
    let ut = series(&|j| at(j + 1).scale((j + 1) as f64));
    let utt = series(&|j| at(j + 2).scale(((j + 1) * (j + 2)) as f64));
    let urt = series(&|j| at(j + 1).derivative().scale((j + 1) as f64));
    let ur2 = ur.mul(&ur);
    let ut2 = ut.mul(&ut);
    let t1 = ur2.add_const(1.0).mul(&utt);
    let t2 = ut2.scale(-1.0).add_const(1.0).mul(&urr);
    let t3 = ut.mul(&ur).mul(&urt).scale(2.0);
    let flat = u.recip()?.sub(&ur.mul_coeff(&r.recip()?));
    let t4 = ur2.sub(&ut2).add_const(1.0).mul(&flat).scale(3.0);
    Ok(t1.sub(&t2).sub(&t3).add(&t4).a)
}

/// Second route to the layers: `𝔤_k = −[t^{k−2}]R / (k(k−1)D)` where `R`
/// is the equation evaluated with `𝔤_k` and all higher layers set to zero.
pub fn layer_jets_by_substitution(nu: f64, mu: &[MuCoeffs], delta: f64, n: usize, rho: f64) -> Result<Vec<Taylor>> {
    let len = 3 + n.max(1);
    let (g0, g1) = cauchy_jets(nu, mu, delta, rho, len)?;
    let mut g = vec![g0, g1];
    if n >= 2 {
        let den = denominator(&g[0], rho)?;
        for k in 2..=n {
            let res = pde_residual_series(&g, rho, k - 1)?;
            g.push(res[k - 2].div(&den)?.scale(-1.0 / (k * (k - 1)) as f64));
        }
    }
    g.truncate(n + 1);
    Ok(g)
}

#[derive(Debug, Clone)]
pub struct RemoteProfile {
    pub config: Config,
    pub delta: f64,
    pub mu: Vec<MuCoeffs>,
    pub grid: Arc<RadialGrid>,
    pub g_layers: Vec<SampledCurve>,
    /// Fitted near-origin log-log slope of each layer on `[RHO_MIN, δ/4]`.
    pub slope_fits: Vec<f64>,
}

/// Tabulation grid: log-uniform on `[RHO_MIN, 3δ]`.
pub fn remote_grid(delta: f64, n: usize) -> Result<RadialGrid> {
    if !(delta / 4.0 > RHO_MIN) {
        return Err(Error::InvalidConfig(format!("delta must exceed {}, got {delta}", 4.0 * RHO_MIN)));
    }
    RadialGrid::log_uniform(RHO_MIN, 3.0 * delta, n)
}

/// `(𝔤₀, 𝔤₁)` tabulated on `grid`.
pub fn cauchy_data(ss: &SelfSimilarProfile, delta: f64, grid: Arc<RadialGrid>) -> Result<(SampledCurve, SampledCurve)> {
    let nu = ss.config.nu;
    let mu = mu_coefficients(ss);
    let jets = grid
        .nodes()
        .iter()
        .map(|&r| cauchy_jets(nu, &mu, delta, r, 3).map(|(a, b)| vec![a, b]))
        .collect::<Result<Vec<_>>>()?;
    Ok((jets_to_curve(&grid, &jets, 0)?, jets_to_curve(&grid, &jets, 1)?))
}

fn jets_to_curve(grid: &Arc<RadialGrid>, jets: &[Vec<Taylor>], k: usize) -> Result<SampledCurve> {
    let n = grid.len();
    let (mut v, mut d1, mut d2) = (Vec::with_capacity(n), Vec::with_capacity(n), Vec::with_capacity(n));
    for j in jets {
        v.push(j[k].deriv(0));
        d1.push(j[k].deriv(1));
        d2.push(j[k].deriv(2));
    }
    SampledCurve::with_derivs(grid.clone(), v, Some(d1), Some(d2))
}

/// Near-origin log-log slope of `curve` on `[lo, hi]`, allowing for the
/// `ρ^{jν}` (`j = 1, 2, 3`) corrections of the next orders.
pub fn near_origin_slope(curve: &SampledCurve, lo: f64, hi: f64, nu: f64) -> Result<f64> {
    let idx = curve.grid.window_indices(lo, hi);
    if idx.len() < 8 {
        return Err(Error::TooFewNodes { need: 8, got: idx.len() });
    }
    let x = &curve.nodes()[idx.clone()];
    let e1 = move |r: f64| r.powf(nu);
    let e2 = move |r: f64| r.powf(2.0 * nu);
    let e3 = move |r: f64| r.powf(3.0 * nu);
    log_slope(x, &curve.values[idx], &[&e1, &e2, &e3])
}

/// Build `𝔤₀ … 𝔤_N` with `N = config.n_remote` and `δ = config.delta`.
pub fn build_remote(ss: &SelfSimilarProfile, grid_nodes: usize) -> Result<RemoteProfile> {
    let config = ss.config;
    config.validate()?;
    let (nu, delta, n) = (config.nu, config.delta, config.n_remote);
    let grid = Arc::new(remote_grid(delta, grid_nodes)?);
    let mu = mu_coefficients(ss);
    let jets = grid.nodes().iter().map(|&r| layer_jets(nu, &mu, delta, n, r)).collect::<Result<Vec<_>>>()?;
    let g_layers = (0..=n).map(|k| jets_to_curve(&grid, &jets, k)).collect::<Result<Vec<_>>>()?;
    let slope_fits =
        g_layers.iter().map(|c| near_origin_slope(c, RHO_MIN, delta / 4.0, nu)).collect::<Result<Vec<_>>>()?;
    Ok(RemoteProfile { config, delta, mu, grid, g_layers, slope_fits })
}

/// Layer `k` on the profile grid, recomputed from the layers below it.
pub fn recurse_g(k: usize, profile: &RemoteProfile) -> Result<SampledCurve> {
    if k < 2 || k > profile.g_layers.len() {
        return Err(Error::MissingLayer(k.saturating_sub(1)));
    }
    let (nu, delta) = (profile.config.nu, profile.delta);
    let jets = profile
        .grid
        .nodes()
        .iter()
        .map(|&r| layer_jets(nu, &profile.mu, delta, k, r))
        .collect::<Result<Vec<_>>>()?;
    jets_to_curve(&profile.grid, &jets, k)
}

impl RemoteProfile {
    pub fn n(&self) -> usize {
        self.g_layers.len() - 1
    }

    /// Jets of every layer at `ρ > 0`.
    pub fn jets(&self, rho: f64) -> Result<Vec<Taylor>> {
        layer_jets(self.config.nu, &self.mu, self.delta, self.n(), rho)
    }

    /// `u_out = ρ + Σ t^k 𝔤_k(ρ)` as a jet in `(t, ρ)`.
    pub fn u_jet(&self, t: f64, rho: f64) -> Result<Jet2> {
        Ok(Jet2::r(rho) + self.excess_jet(t, rho)?)
    }

    /// `u_out − ρ` as a jet in `(t, ρ)`.
    pub fn excess_jet(&self, t: f64, rho: f64) -> Result<Jet2> {
        let g = self.jets(rho)?;
        let mut u = Jet2::constant(0.0);
        for (k, gk) in g.iter().enumerate() {
            let kf = k as f64;
            let tk = |p: i32| if k as i32 + p < 0 { 0.0 } else { t.powi(k as i32 + p) };
            u.f += tk(0) * gk.deriv(0);
            u.fr += tk(0) * gk.deriv(1);
            u.frr += tk(0) * gk.deriv(2);
            u.ft += kf * tk(-1) * gk.deriv(0);
            u.ftr += kf * tk(-1) * gk.deriv(1);
            u.ftt += kf * (kf - 1.0) * tk(-2) * gk.deriv(0);
        }
        Ok(u)
    }

    /// `(V_out, ∂_y V_out, ∂²_y V_out)` with `V_out = t^{−(ν+1)} u_out(t, t^{ν+1} y)`.
    pub fn eval(&self, t: f64, y: f64) -> Result<[f64; 3]> {
        let s = t.powf(self.config.nu + 1.0);
        let u = self.u_jet(t, s * y)?;
        Ok([u.f / s, u.fr, u.frr * s])
    }

    /// `[t^{−ε₂−ν}, max(3δ t^{−ν−1}, 10 t^{−ε₂−ν})]` in `y`.
    pub fn region(&self, t: f64) -> (f64, f64) {
        let c = &self.config;
        let lo = t.powf(-c.eps2 - c.nu);
        (lo, (3.0 * self.delta * t.powf(-c.nu - 1.0)).max(10.0 * lo))
    }

    /// Max over all layers and all `ρ ≥ 2δ` of the tabulated magnitudes.
    pub fn max_beyond_support(&self) -> f64 {
        self.g_layers.iter().map(|c| c.max_abs_on(2.0 * self.delta, f64::INFINITY)).fold(0.0, f64::max)
    }
}

/// `V_out(t, ·)` on `n` log-spaced nodes of its region.
pub fn assemble_out(profile: &RemoteProfile, t: f64, n: usize) -> Result<SampledCurve> {
    if !(t > 0.0 && t < 1.0) {
        return Err(Error::InvalidConfig(format!("t must lie in (0, 1), got {t}")));
    }
    let (lo, hi) = profile.region(t);
    let grid = Arc::new(RadialGrid::log_uniform(lo, hi, n)?);
    let vals = grid.nodes().iter().map(|&y| profile.eval(t, y)).collect::<Result<Vec<_>>>()?;
    SampledCurve::with_derivs(
        grid,
        vals.iter().map(|v| v[0]).collect(),
        Some(vals.iter().map(|v| v[1]).collect()),
        Some(vals.iter().map(|v| v[2]).collect()),
    )
}
