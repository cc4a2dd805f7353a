//! Inner region: `u = t^{ν+1} V(t, y)` with `y = ρ/t^{ν+1}` and the expansion
//! `V = Σ_k t^{2νk} V_k(y)`, `V₀ = Q`, each layer solving `ℒV_k = F_k`.

use std::sync::Arc;

use crate::config::Config;
use crate::error::{Error, Result};
use crate::ground_state::GroundState;
use crate::linearized::LinearizedOperator;
use crate::numerics::fit::{fit_tail, BasisTerm, TailFit, DEFAULT_COND_BOUND};
use crate::numerics::quad::integrate;
use crate::numerics::{Jet2, RadialGrid, SampledCurve, TruncSeries};

/// `Γ_k f = 2νk f + (1+ν)(f − y f')`, with its `y`-derivative when `f''` is known.
pub fn gamma_apply(nu: f64, k: usize, f: &SampledCurve) -> Result<SampledCurve> {
    let d1 = f.d1()?;
    let a = 2.0 * nu * k as f64;
    let x = f.nodes();
    let v = (0..f.len()).map(|i| a * f.values[i] + (1.0 + nu) * (f.values[i] - x[i] * d1[i])).collect();
    let dv = f.deriv2.as_ref().map(|d2| (0..f.len()).map(|i| a * d1[i] - (1.0 + nu) * x[i] * d2[i]).collect());
    SampledCurve::with_derivs(f.grid.clone(), v, dv, None)
}

/// `(W_j, W_j', W_j'')` at one point for `j = 0, 1, …`, where `W_0 = Q − y`
/// and `W_j = V_j` for `j ≥ 1`. Carrying the excess over the cone instead of
/// `V₀` keeps `ΛV₀ = W₀ − yW₀'` and `1 − VV_y/y` free of cancellation.
pub type LayerJet = [f64; 3];

/// The `s`-series `W, W_y, W_yy, ΓV, (ΓV)_y, Γ²V` built from layer jets,
/// where `s = t^{2ν}` and `Γ` acts on `s^j V_j` as `Γ_j` (`Γ y = 0`).
struct Fields {
    w: TruncSeries<f64>,
    vy: TruncSeries<f64>,
    vyy: TruncSeries<f64>,
    g: TruncSeries<f64>,
    gy: TruncSeries<f64>,
    gg: TruncSeries<f64>,
}

fn fields(nu: f64, y: f64, layers: &[LayerJet], len: usize) -> Fields {
    let mut f = [(); 6].map(|_| vec![0.0; len]);
    for (j, l) in layers.iter().enumerate().take(len) {
        let a = 2.0 * nu * j as f64;
        let g = a * l[0] + (1.0 + nu) * (l[0] - y * l[1]);
        let gy = a * l[1] - (1.0 + nu) * y * l[2];
        f[0][j] = l[0];
        f[1][j] = l[1];
        f[2][j] = l[2];
        f[3][j] = g;
        f[4][j] = gy;
        f[5][j] = a * g + (1.0 + nu) * (g - y * gy);
    }
    let [w, vy, vyy, g, gy, gg] = f.map(TruncSeries::new);
    Fields { w, vy, vyy, g, gy, gg }
}

/// `V` times the rescaled equation, as an `s`-series of length `len`:
/// `(1+V_y²) s(Γ²V − ΓV)V − (1 − s(ΓV)²) V_yy V − 2s V_y ΓV (ΓV)_y V
///  + 3(1 + V_y² − s(ΓV)²)(1 − V V_y / y)`.
/// With `N` layers the exact product has length `4N + 2`.
pub fn defect_series(nu: f64, y: f64, layers: &[LayerJet], len: usize) -> TruncSeries<f64> {
    let Fields { w, vy: wy, vyy, g, gy, gg } = fields(nu, y, layers, len);
    let v = w.add_const(y);
    let vy = wy.add_const(1.0);
    // 1 − V V_y / y = −(W_y + W/y + W W_y / y)
    let flat = wy.add(&w.scale(1.0 / y)).add(&w.mul(&wy).scale(1.0 / y)).scale(-1.0);
    let vy2 = vy.mul(&vy).add_const(1.0);
    let g2s = g.mul(&g).shift_up(1);
    let t1 = vy2.mul(&gg.sub(&g).shift_up(1)).mul(&v);
    let t2 = g2s.scale(-1.0).add_const(1.0).mul(&vyy).mul(&v);
    let t3 = vy.mul(&g).mul(&gy).mul(&v).shift_up(1).scale(2.0);
    let t4 = vy2.sub(&g2s).mul(&flat).scale(3.0);
    t1.sub(&t2).sub(&t3).add(&t4)
}

/// The rescaled equation evaluated directly at one `(s, y)`.
pub fn rescaled_residual(nu: f64, s: f64, y: f64, layers: &[LayerJet]) -> f64 {
    let mut w = [0.0; 6];
    let mut sp = 1.0;
    for (j, l) in layers.iter().enumerate() {
        let a = 2.0 * nu * j as f64;
        let g = a * l[0] + (1.0 + nu) * (l[0] - y * l[1]);
        let gy = a * l[1] - (1.0 + nu) * y * l[2];
        let gg = a * g + (1.0 + nu) * (g - y * gy);
        for (acc, x) in w.iter_mut().zip([l[0], l[1], l[2], g, gy, gg]) {
            *acc += sp * x;
        }
        sp *= s;
    }
    let [w, wy, vyy, g, gy, gg] = w;
    let (v, vy) = (y + w, 1.0 + wy);
    let flat = -(wy + w / y + w * wy / y);
    (1.0 + vy * vy) * s * (gg - g) - (1.0 - s * g * g) * vyy - 2.0 * s * vy * g * gy
        + 3.0 * (1.0 + vy * vy - s * g * g) * flat / v
}

/// Tail template for `V_k`: terms `y^{-n}(log y)^ℓ` with `ℓ ≤ k`,
/// `n ≥ 2 − 2(k − ℓ)`, for `n` from `2 − 2k` up to `2 − 2k + extra`.
pub fn tail_basis(k: usize, extra: i32) -> Vec<BasisTerm> {
    let k = k as i32;
    let mut out = Vec::new();
    for n in (2 - 2 * k)..=(2 - 2 * k + extra) {
        for l in 0..=k {
            if n >= 2 - 2 * (k - l) {
                out.push(BasisTerm::pow_log(-(n as f64), l as u32));
            }
        }
    }
    out
}

/// The layers on the ground-state grid: `layers[0]` is `W₀ = Q − y`,
/// `layers[k] = V_k` for `1 ≤ k ≤ N`.
#[derive(Debug, Clone)]
pub struct InnerProfile {
    pub config: Config,
    pub op: Arc<LinearizedOperator>,
    pub layers: Vec<SampledCurve>,
    /// `F_k` for `k = 1..=N` (entry `k − 1`).
    pub sources: Vec<SampledCurve>,
    /// Tail fit of `V_k` for `k = 1..=N` (entry `k − 1`).
    pub tails: Vec<TailFit>,
    /// `max |ℒV_k − F_k| / (|V_k''| + |(3/y + B₁)V_k'| + |B₀V_k|)` with `ℒ`
    /// applied by grid stencils to the values of `V_k` alone.
    pub layer_residuals: Vec<f64>,
}

impl InnerProfile {
    pub fn gs(&self) -> &Arc<GroundState> {
        &self.op.gs
    }

    pub fn n(&self) -> usize {
        self.layers.len() - 1
    }

    /// `d_{n,k,ℓ}`: coefficient of `y^{-n}(log y)^ℓ` in the tail of `V_k`.
    pub fn d(&self, n: i32, k: usize, l: usize) -> Result<f64> {
        let missing = Error::MissingTailCoefficient { n, k, l };
        if k == 0 {
            return Ok(match (n, l) {
                (-1, 0) => 1.0,
                (_, 0) if n >= 2 => self.gs().d(n),
                _ => 0.0,
            });
        }
        let fit = self.tails.get(k - 1).ok_or(missing.clone())?;
        if n < 2 - 2 * (k as i32 - l as i32) || l > k {
            return Ok(0.0);
        }
        fit.coefficient(-(n as f64), l as u32).ok_or(missing)
    }

    /// Layer jets at `y` (interpolated inside the grid).
    pub fn jets(&self, y: f64) -> Vec<LayerJet> {
        let gs = self.gs();
        let mut out: Vec<LayerJet> = self
            .layers
            .iter()
            .map(|c| {
                let (a, b, c) = c.eval3(y);
                [a, b, c]
            })
            .collect();
        if y < gs.grid().origin_cutoff() || y > gs.rho_max {
            let (w, dw, ddw) = gs.excess3(y);
            out[0] = [w, dw, ddw];
        }
        out
    }

    /// `(V_in, ∂_y V_in, ∂²_y V_in, ∂_t V_in)` at `(t, y)`.
    pub fn eval(&self, t: f64, y: f64) -> [f64; 4] {
        let nu = self.config.nu;
        let s = t.powf(2.0 * nu);
        let mut out = [y, 1.0, 0.0, 0.0];
        let mut sp = 1.0;
        for (j, l) in self.jets(y).iter().enumerate() {
            out[0] += sp * l[0];
            out[1] += sp * l[1];
            out[2] += sp * l[2];
            out[3] += 2.0 * nu * j as f64 * sp * l[0] / t;
            sp *= s;
        }
        out
    }

    /// `u_in − ρ = t^{ν+1} Σ t^{2νj} W_j(ρ/t^{ν+1})` as a jet in `(t, ρ)`.
    pub fn excess_jet(&self, t: f64, rho: f64) -> Jet2 {
        let nu = self.config.nu;
        let tj = Jet2::t(t);
        let scale = tj.powf(nu + 1.0);
        let y = Jet2::r(rho).div(&scale);
        let mut e = Jet2::constant(0.0);
        for (j, l) in self.jets(y.f).iter().enumerate() {
            let w = y.chain(l[0], l[1], l[2]);
            e = e + if j == 0 { w } else { tj.powf(2.0 * nu * j as f64) * w };
        }
        scale * e
    }

    /// Right edge `t^{ε₁−ν}` of the inner region.
    pub fn region_edge(&self, t: f64) -> f64 {
        t.powf(self.config.eps1 - self.config.nu)
    }
}

/// `F_k = [s^k] P(V₀ + … + s^{k−1}V_{k−1}) / Q`, which makes the order-`k`
/// coefficient of the defect equal to `Q(F_k − ℒV_k)`.
pub fn source_f(nu: f64, k: usize, layers: &[SampledCurve]) -> Result<SampledCurve> {
    if k == 0 || layers.len() < k {
        return Err(Error::MissingLayer(layers.len()));
    }
    let base = &layers[0];
    for (j, l) in layers.iter().enumerate().take(k) {
        l.check_same_grid(base)?;
        if l.deriv1.is_none() || l.deriv2.is_none() {
            return Err(Error::MissingLayer(j));
        }
    }
    let x = base.nodes();
    let vals = (0..x.len())
        .map(|i| {
            let jets: Vec<LayerJet> =
                layers[..k].iter().map(|c| [c.values[i], c.d1().unwrap()[i], c.d2().unwrap()[i]]).collect();
            defect_series(nu, x[i], &jets, k + 1).a[k] / (x[i] + base.values[i])
        })
        .collect();
    SampledCurve::new(base.grid.clone(), vals)
}

/// Bound on [`InnerProfile::layer_residuals`] for a layer to count as solved.
pub const LAYER_RESIDUAL_TOL: f64 = 1e-4;

/// Layer tails are fitted on `[ρ_max/10, ρ_max]`: the `(log y)^ℓ` slots are
/// only separable from the pure powers over a decade of `y`.
pub const TAIL_WINDOW_FRACTION: f64 = 0.1;

/// Number of powers past the leading one in each layer's tail template.
pub const TAIL_EXTRA: i32 = 5;

fn relative_layer_residual(op: &LinearizedOperator, v: &SampledCurve, f: &SampledCurve) -> Result<f64> {
    let st = v.restenciled()?;
    let lv = op.apply(&st)?;
    let (d1, d2) = (st.d1()?, st.d2()?);
    let y = v.nodes();
    Ok((0..v.len())
        .map(|i| {
            let scale = d2[i].abs()
                + ((3.0 / y[i] + op.b1.values[i]) * d1[i]).abs()
                + (op.b0.values[i] * v.values[i]).abs();
            (lv.values[i] - f.values[i]).abs() / scale.max(f64::MIN_POSITIVE)
        })
        .fold(0.0, f64::max))
}

/// Solve the layers `V₁..V_N` and fit their tails.
pub fn build_inner(config: &Config, op: Arc<LinearizedOperator>) -> Result<InnerProfile> {
    config.validate()?;
    let gs = op.gs.clone();
    let mut layers = vec![gs.excess.clone()];
    let (mut sources, mut tails, mut residuals) = (Vec::new(), Vec::new(), Vec::new());
    let (lo, hi) = (TAIL_WINDOW_FRACTION * gs.rho_max, gs.rho_max);
    for k in 1..=config.n_inner {
        let f = source_f(config.nu, k, &layers)?;
        let v = op.duhamel_solve(&f, 0.0)?;
        residuals.push(relative_layer_residual(&op, &v, &f)?);
        tails.push(fit_tail(v.nodes(), &v.values, lo, hi, &tail_basis(k, TAIL_EXTRA), DEFAULT_COND_BOUND)?);
        sources.push(f);
        layers.push(v);
    }
    Ok(InnerProfile { config: *config, op, layers, sources, tails, layer_residuals: residuals })
}

/// `V_in(t, ·)` restricted to `y ≤ t^{ε₁−ν}`, with derivatives.
pub fn assemble_inner(profile: &InnerProfile, t: f64) -> Result<SampledCurve> {
    if !(t > 0.0 && t < 1.0) {
        return Err(Error::InvalidConfig(format!("t must lie in (0, 1), got {t}")));
    }
    let edge = profile.region_edge(t);
    let all = profile.gs().grid().nodes();
    let nodes: Vec<f64> = all.iter().copied().take_while(|&y| y <= edge).collect();
    let m = nodes.len();
    let grid = Arc::new(RadialGrid::from_nodes(nodes, profile.gs().grid().policy())?);
    let s = t.powf(2.0 * profile.config.nu);
    let mut w = [grid.nodes().to_vec(), vec![1.0; m], vec![0.0; m]];
    let mut sp = 1.0;
    for layer in &profile.layers {
        let (d1, d2) = (layer.d1()?, layer.d2()?);
        for i in 0..m {
            w[0][i] += sp * layer.values[i];
            w[1][i] += sp * d1[i];
            w[2][i] += sp * d2[i];
        }
        sp *= s;
    }
    let [v, d1, d2] = w;
    SampledCurve::with_derivs(grid, v, Some(d1), Some(d2))
}

/// The inner remainder at one time, by two routes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InnerRemainder {
    pub t: f64,
    pub edge: f64,
    /// Weighted norm of the rescaled equation evaluated directly on `V_in`.
    pub norm: f64,
    /// Same norm computed from the `s^k`, `k ≥ N+1`, coefficients of the defect series.
    pub norm_series: f64,
    /// Max over the quadrature nodes of `|direct − series|`.
    pub route_gap: f64,
}

/// `‖⟨y⟩^{3/2} R‖_{L²(y³dy)}` over `[ρ₀, t^{ε₁−ν}]`, where `R` is the rescaled
/// equation applied to `V_in`.
pub fn inner_remainder(profile: &InnerProfile, t: f64) -> Result<InnerRemainder> {
    let y0 = profile.gs().grid().origin_cutoff();
    inner_remainder_on(profile, t, y0, profile.region_edge(t))
}

/// [`inner_remainder`] over the window `[y0, edge]`.
pub fn inner_remainder_on(profile: &InnerProfile, t: f64, y0: f64, edge: f64) -> Result<InnerRemainder> {
    if !(t > 0.0 && t < 1.0) {
        return Err(Error::InvalidConfig(format!("t must lie in (0, 1), got {t}")));
    }
    if !(y0 > 0.0 && edge > y0) {
        return Err(Error::InvalidConfig(format!("bad window [{y0}, {edge}]")));
    }
    let nu = profile.config.nu;
    let n = profile.n();
    let s = t.powf(2.0 * nu);
    let len = 4 * n + 2;
    let gap = std::cell::Cell::new(0.0f64);
    let pair = |y: f64| {
        let jets = profile.jets(y);
        let direct = rescaled_residual(nu, s, y, &jets);
        let p = defect_series(nu, y, &jets, len);
        let v: f64 = y + jets.iter().rev().fold(0.0, |acc, l| acc * s + l[0]);
        let tail: f64 = (n + 1..len).rev().fold(0.0, |acc, k| acc * s + p.a[k]) * s.powi(n as i32 + 1);
        let series = tail / v;
        gap.set(gap.get().max((direct - series).abs()));
        (direct, series)
    };
    let w = |y: f64| (1.0 + y * y).powf(1.5) * y.powi(3);
    let panels = 400;
    let direct = integrate(|y| w(y) * pair(y).0.powi(2), y0, edge, 6, panels).sqrt();
    let series = integrate(|y| w(y) * pair(y).1.powi(2), y0, edge, 6, panels).sqrt();
    Ok(InnerRemainder { t, edge, norm: direct, norm_series: series, route_gap: gap.get() })
}
