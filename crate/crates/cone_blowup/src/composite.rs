//! The global approximate solution: the inner, self-similar and remote
//! profiles glued with the cutoff `Θ`, and its remainder in the rescaled
//! equation.

use std::sync::Arc;

use crate::config::Config;
use crate::error::{Error, Result};
use crate::inner::{inner_remainder_on, InnerProfile};
use crate::numerics::diff::differentiate;
use crate::numerics::quad::{cumulative, integrate};
use crate::numerics::smooth::{theta, theta_jet2};
use crate::numerics::{Jet2, RadialGrid, SampledCurve};
use crate::remote::RemoteProfile;
use crate::self_similar::SelfSimilarProfile;

/// `Θ = 1` on `|ξ| ≤ plateau`, `Θ = 0` on `|ξ| ≥ support`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThetaCutoff {
    pub plateau: f64,
    pub support: f64,
}

impl Default for ThetaCutoff {
    fn default() -> Self {
        Self { plateau: 0.25, support: 0.5 }
    }
}

/// Physical-variable residual of the radial equation for `u = ρ + e`, given
/// the second-order jet of the excess `e`:
/// `(1+u_ρ²)u_tt − (1−u_t²)u_ρρ − 2u_t u_ρ u_ρt + 3(1+u_ρ²−u_t²)(1/u − u_ρ/ρ)`.
/// The last factor is carried as `−(e_ρ + e/ρ + e e_ρ/ρ)/u`.
pub fn nw_residual_excess(rho: f64, e: &Jet2) -> f64 {
    let (ur, ut) = (1.0 + e.fr, e.ft);
    let u = rho + e.f;
    let flat = -(e.fr + e.f / rho + e.f * e.fr / rho) / u;
    (1.0 + ur * ur) * e.ftt - (1.0 - ut * ut) * e.frr - 2.0 * ut * ur * e.ftr + 3.0 * (1.0 + ur * ur - ut * ut) * flat
}

/// The three regional profiles and the cutoff that glues them.
#[derive(Debug, Clone)]
pub struct CompositeApprox {
    pub config: Config,
    pub inner: Arc<InnerProfile>,
    pub ss: Arc<SelfSimilarProfile>,
    pub remote: Arc<RemoteProfile>,
    pub theta: ThetaCutoff,
}

/// Which profiles contribute at a point.
enum Mix {
    Inner,
    InnerSs,
    Ss,
    SsOuter,
    Outer,
}

impl CompositeApprox {
    pub fn new(inner: Arc<InnerProfile>, ss: Arc<SelfSimilarProfile>, remote: Arc<RemoteProfile>) -> Result<Self> {
        let config = inner.config;
        if ss.config.nu != config.nu || remote.config.nu != config.nu {
            return Err(Error::InvalidConfig("regional profiles built for different nu".into()));
        }
        Ok(Self { config, inner, ss, remote, theta: ThetaCutoff::default() })
    }

    /// `(t^{ν−ε₁}, t^{ν+ε₂})`: `Θ` is applied to `y` times these.
    fn scales(&self, t: f64) -> (f64, f64) {
        let c = &self.config;
        (t.powf(c.nu - c.eps1), t.powf(c.nu + c.eps2))
    }

    /// Transition bands `[¼, ½] / t^{ν−ε₁}` and `[¼, ½] / t^{ν+ε₂}` in `y`.
    pub fn bands(&self, t: f64) -> [(f64, f64); 2] {
        let (c1, c2) = self.scales(t);
        let ThetaCutoff { plateau, support } = self.theta;
        [(plateau / c1, support / c1), (plateau / c2, support / c2)]
    }

    /// Fails when the bands overlap or leave the tabulated inner profile.
    pub fn check_regions(&self, t: f64) -> Result<()> {
        if !(t > 0.0 && t < 1.0) {
            return Err(Error::InvalidConfig(format!("t must lie in (0, 1), got {t}")));
        }
        let [(_, a), (b, _)] = self.bands(t);
        if a >= b {
            return Err(Error::RegionGap(format!("inner band ends at y = {a}, outer band starts at y = {b}")));
        }
        let rho_max = self.inner.gs().rho_max;
        if a > rho_max {
            return Err(Error::RegionGap(format!("inner band reaches y = {a} beyond the inner grid ({rho_max})")));
        }
        Ok(())
    }

    fn mix(&self, t: f64, y: f64) -> Mix {
        let (c1, c2) = self.scales(t);
        let (t1, t2) = (theta(c1 * y).0, theta(c2 * y).0);
        match (t1, t2) {
            (v, _) if v == 1.0 => Mix::Inner,
            (_, v) if v == 0.0 => Mix::Outer,
            (v, w) if v == 0.0 && w == 1.0 => Mix::Ss,
            (_, w) if w == 1.0 => Mix::InnerSs,
            _ => Mix::SsOuter,
        }
    }

    /// `(V, V_y, V_yy)` of the glued profile at `(t, y)`.
    pub fn eval(&self, t: f64, y: f64) -> Result<[f64; 3]> {
        let (c1, c2) = self.scales(t);
        let inner = || {
            let v = self.inner.eval(t, y);
            [v[0], v[1], v[2]]
        };
        // a Θ(c y) + b (1 − Θ(c y))
        let glue = |c: f64, a: [f64; 3], b: [f64; 3]| {
            let (th, d1, d2) = theta(c * y);
            let (d1, d2) = (c * d1, c * c * d2);
            let d = [a[0] - b[0], a[1] - b[1], a[2] - b[2]];
            [
                b[0] + th * d[0],
                b[1] + th * d[1] + d1 * d[0],
                b[2] + th * d[2] + 2.0 * d1 * d[1] + d2 * d[0],
            ]
        };
        Ok(match self.mix(t, y) {
            Mix::Inner => inner(),
            Mix::Outer => self.remote.eval(t, y)?,
            Mix::Ss => self.ss.eval(t, y)?,
            Mix::InnerSs => glue(c1, inner(), self.ss.eval(t, y)?),
            Mix::SsOuter => glue(c2, self.ss.eval(t, y)?, self.remote.eval(t, y)?),
        })
    }

    /// Jet of `u^(N) − ρ` in `(t, ρ)`.
    pub fn excess_jet(&self, t: f64, rho: f64) -> Result<Jet2> {
        let c = &self.config;
        let tj = Jet2::t(t);
        let r = Jet2::r(rho);
        let y = rho * t.powf(-c.nu - 1.0);
        let glue = |p: f64, a: Jet2, b: Jet2| {
            let th = theta_jet2(&(r * tj.powf(p)));
            b + th * (a - b)
        };
        Ok(match self.mix(t, y) {
            Mix::Inner => self.inner.excess_jet(t, rho),
            Mix::Outer => self.remote.excess_jet(t, rho)?,
            Mix::Ss => self.ss.excess_jet(t, rho)?,
            Mix::InnerSs => glue(-1.0 - c.eps1, self.inner.excess_jet(t, rho), self.ss.excess_jet(t, rho)?),
            Mix::SsOuter => glue(c.eps2 - 1.0, self.ss.excess_jet(t, rho)?, self.remote.excess_jet(t, rho)?),
        })
    }

    /// The rescaled equation applied to `V^(N)` at `(t, y)`; equals
    /// `t^{ν+1}` times the physical residual at `ρ = t^{ν+1} y`.
    pub fn residual_at(&self, t: f64, y: f64) -> Result<f64> {
        let s = t.powf(self.config.nu + 1.0);
        let rho = s * y;
        Ok(s * nw_residual_excess(rho, &self.excess_jet(t, rho)?))
    }
}

/// `V^(N)(t, ·)` with `V_y, V_yy`, and `V₁^(N)(t, ·) = ∂_t u^(N)(t, t^{ν+1}·)`
/// with its `y`-derivative, on `grid`.
pub fn blend(ca: &CompositeApprox, t: f64, grid: Arc<RadialGrid>) -> Result<(SampledCurve, SampledCurve)> {
    ca.check_regions(t)?;
    let s = t.powf(ca.config.nu + 1.0);
    let n = grid.len();
    let (mut v, mut v1, mut v2) = (Vec::with_capacity(n), Vec::with_capacity(n), Vec::with_capacity(n));
    let (mut w, mut w1) = (Vec::with_capacity(n), Vec::with_capacity(n));
    for &y in grid.nodes() {
        let a = ca.eval(t, y)?;
        v.push(a[0]);
        v1.push(a[1]);
        v2.push(a[2]);
        let e = ca.excess_jet(t, s * y)?;
        w.push(e.ft);
        w1.push(s * e.ftr);
    }
    let vc = SampledCurve::with_derivs(grid.clone(), v, Some(v1), Some(v2))?;
    let wc = SampledCurve::with_derivs(grid, w, Some(w1), None)?;
    Ok((vc, wc))
}

/// `[sup ⟨y⟩^{-1}|V^(N) − Q|, sup |∂_y(V^(N) − Q)|]` over the nodes of `grid`.
pub fn ground_deviation(ca: &CompositeApprox, t: f64, grid: &RadialGrid) -> Result<[f64; 2]> {
    ca.check_regions(t)?;
    let gs = ca.inner.gs();
    let mut out = [0.0f64; 2];
    for &y in grid.nodes() {
        let v = ca.eval(t, y)?;
        let (q, dq, _) = gs.eval3(y);
        out[0] = out[0].max((v[0] - q).abs() / (1.0 + y * y).sqrt());
        out[1] = out[1].max((v[1] - dq).abs());
    }
    Ok(out)
}

/// Settings for [`global_remainder`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RemainderOptions {
    /// Nodes of the log-uniform `y`-grid used for the Sobolev norms.
    pub nodes: usize,
    /// Highest derivative order in the Sobolev norm.
    pub order: usize,
    /// Gauss panels per window for the regional norms.
    pub panels: usize,
    /// Nodes per transition band for the mismatch sup-norms.
    pub band_nodes: usize,
}

impl Default for RemainderOptions {
    fn default() -> Self {
        Self { nodes: 12000, order: 2, panels: 400, band_nodes: 200 }
    }
}

/// `‖⟨y⟩^{3/2} R‖_{L²(y³dy)}` restricted to each piece of the partition
/// `inner | band₁ | ss | band₂ | outer`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegionalNorms {
    pub inner: f64,
    pub inner_band: f64,
    pub ss: f64,
    pub outer_band: f64,
    pub outer: f64,
}

impl RegionalNorms {
    pub fn sum(&self) -> f64 {
        self.inner + self.inner_band + self.ss + self.outer_band + self.outer
    }
}

/// Weighted norms of the remainder `R^(N)` at one time.
#[derive(Debug, Clone, PartialEq)]
pub struct GlobalRemainder {
    pub t: f64,
    /// `‖⟨y⟩^{3/2} ∂^j R‖_{L²(y³dy)}` for `j = 0..=order`, by grid stencils.
    pub sobolev: Vec<f64>,
    /// `sqrt(Σ_j sobolev[j]²)`.
    pub total: f64,
    pub regional: RegionalNorms,
    /// The inner profile's own remainder over the inner plateau.
    pub inner_own: f64,
    /// `sup (|V_a − V_b| + |∂_y(V_a − V_b)|)` over each transition band.
    pub mismatch: [f64; 2],
    /// Right end of the `y`-grid; `R` vanishes identically beyond it.
    pub y_max: f64,
}

fn weight(y: f64) -> f64 {
    (1.0 + y * y).powf(1.5) * y.powi(3)
}

/// Right end of the support of `R` in `y`: the remote data live in `ρ ≤ 2δ`
/// and propagate at unit speed.
pub fn remainder_extent(ca: &CompositeApprox, t: f64) -> f64 {
    (2.0 * ca.remote.delta + 2.0 * t) * t.powf(-ca.config.nu - 1.0)
}

pub fn global_remainder(ca: &CompositeApprox, t: f64, opts: &RemainderOptions) -> Result<GlobalRemainder> {
    ca.check_regions(t)?;
    let y0 = ca.inner.gs().grid().origin_cutoff();
    let y_max = remainder_extent(ca, t);
    let grid = RadialGrid::log_uniform(y0, y_max, opts.nodes)?;
    let x = grid.nodes();
    let mut d: Vec<f64> = x.iter().map(|&y| ca.residual_at(t, y)).collect::<Result<_>>()?;
    let mut sobolev = Vec::with_capacity(opts.order + 1);
    for j in 0..=opts.order {
        if j > 0 {
            d = differentiate(x, &d, 1)?;
        }
        let f: Vec<f64> = x.iter().zip(&d).map(|(&y, v)| weight(y) * v * v).collect();
        sobolev.push(cumulative(x, &f)?.last().copied().unwrap_or(0.0).sqrt());
    }
    let total = sobolev.iter().map(|v| v * v).sum::<f64>().sqrt();

    let [(a1, b1), (a2, b2)] = ca.bands(t);
    let window = |lo: f64, hi: f64| -> Result<f64> {
        if hi <= lo {
            return Ok(0.0);
        }
        let err = std::cell::Cell::new(None);
        let v = integrate(
            |y| match ca.residual_at(t, y) {
                Ok(r) => weight(y) * r * r,
                Err(e) => {
                    err.set(Some(e));
                    0.0
                }
            },
            lo,
            hi,
            6,
            opts.panels,
        );
        match err.into_inner() {
            Some(e) => Err(e),
            None => Ok(v.sqrt()),
        }
    };
    let regional = RegionalNorms {
        inner: window(y0, a1)?,
        inner_band: window(a1, b1)?,
        ss: window(b1, a2)?,
        outer_band: window(a2, b2)?,
        outer: window(b2, y_max)?,
    };
    let inner_own = inner_remainder_on(&ca.inner, t, y0, a1)?.norm;

    let band_sup = |lo: f64, hi: f64, f: &dyn Fn(f64) -> Result<[f64; 2]>| -> Result<f64> {
        let g = RadialGrid::uniform(lo, hi, opts.band_nodes)?;
        g.nodes().iter().try_fold(0.0f64, |m, &y| {
            let d = f(y)?;
            Ok(m.max(d[0].abs() + d[1].abs()))
        })
    };
    let m1 = band_sup(a1, b1, &|y| {
        let (a, b) = (ca.inner.eval(t, y), ca.ss.eval(t, y)?);
        Ok([a[0] - b[0], a[1] - b[1]])
    })?;
    let m2 = band_sup(a2, b2, &|y| {
        let (a, b) = (ca.ss.eval(t, y)?, ca.remote.eval(t, y)?);
        Ok([a[0] - b[0], a[1] - b[1]])
    })?;

    Ok(GlobalRemainder { t, sobolev, total, regional, inner_own, mismatch: [m1, m2], y_max })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cone_has_zero_residual() {
        assert_eq!(nw_residual_excess(0.7, &Jet2::constant(0.0)), 0.0);
    }

    #[test]
    fn excess_form_matches_direct_form() {
        let (rho, e) = (0.8, Jet2 { f: 0.3, ft: 0.2, fr: -0.1, ftt: 0.5, ftr: 0.05, frr: 0.7 });
        let (u, ut, ur) = (rho + e.f, e.ft, 1.0 + e.fr);
        let direct = (1.0 + ur * ur) * e.ftt - (1.0 - ut * ut) * e.frr - 2.0 * ut * ur * e.ftr
            + 3.0 * (1.0 + ur * ur - ut * ut) * (1.0 / u - ur / rho);
        assert!((nw_residual_excess(rho, &e) - direct).abs() < 1e-14);
    }
}
