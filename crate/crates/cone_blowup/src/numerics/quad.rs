use crate::error::{Error, Result};

/// Gauss–Legendre nodes and weights on `[-1, 1]` (Newton iteration on `P_n`).
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let nf = n as f64;
    for i in 0..(n + 1) / 2 {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, 0.0);
            for j in 0..n {
                let p2 = p1;
                p1 = p0;
                p0 = ((2 * j + 1) as f64 * z * p1 - j as f64 * p2) / (j + 1) as f64;
            }
            dp = nf * (z * p0 - p1) / (z * z - 1.0);
            let dz = p0 / dp;
            z -= dz;
            if dz.abs() < 1e-15 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}

/// `∫_a^b f` by composite Gauss–Legendre with `panels` panels of `order` points.
pub fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64, order: usize, panels: usize) -> f64 {
    let (x, w) = gauss_legendre(order);
    let h = (b - a) / panels as f64;
    let mut s = 0.0;
    for p in 0..panels {
        let c = a + h * (p as f64 + 0.5);
        for (xi, wi) in x.iter().zip(&w) {
            s += wi * f(c + 0.5 * h * xi);
        }
    }
    0.5 * h * s
}

/// Cumulative integral `F_i = ∫_{x_0}^{x_i} f` of samples on a nonuniform grid.
/// On each interval the integrand is replaced by the cubic through four
/// neighbouring samples and integrated exactly, so the result is fourth order.
pub fn cumulative(x: &[f64], f: &[f64]) -> Result<Vec<f64>> {
    let g = 1.0 / 3f64.sqrt();
    cumulative_rule(x, f, |_| 1.0, &[-g, g], &[1.0, 1.0])
}

/// `∫_{x_0}^{x_i} f(s) w(s) ds` with `f` sampled and interpolated by local
/// cubics and the weight `w` evaluated exactly (8-point Gauss–Legendre per
/// interval). Suited to weights like `s^{-3}` that vary strongly across the
/// first cells of a grid.
pub fn cumulative_weighted(x: &[f64], f: &[f64], w: impl Fn(f64) -> f64) -> Result<Vec<f64>> {
    let (g, gw) = gauss_legendre(8);
    cumulative_rule(x, f, w, &g, &gw)
}

fn cumulative_rule(x: &[f64], f: &[f64], w: impl Fn(f64) -> f64, g: &[f64], gw: &[f64]) -> Result<Vec<f64>> {
    let n = x.len();
    if n < 4 || f.len() != n {
        return Err(Error::TooFewNodes { need: 4, got: n.min(f.len()) });
    }
    let mut out = vec![0.0; n];
    for i in 0..n - 1 {
        let s = if i == 0 { 0 } else { (i - 1).min(n - 4) };
        let xs = &x[s..s + 4];
        let (a, b) = (x[i], x[i + 1]);
        let mut acc = 0.0;
        for (gi, wi) in g.iter().zip(gw) {
            let t = 0.5 * (a + b) + 0.5 * (b - a) * gi;
            let mut v = 0.0;
            for j in 0..4 {
                let mut l = 1.0;
                for m in 0..4 {
                    if m != j {
                        l *= (t - xs[m]) / (xs[j] - xs[m]);
                    }
                }
                v += l * f[s + j];
            }
            acc += wi * v * w(t);
        }
        out[i + 1] = out[i] + 0.5 * (b - a) * acc;
    }
    Ok(out)
}

/// `∫_0^{x} f` where `f` is sampled on `x` (starting at `x_0 > 0`) and behaves
/// like `c s^p` near the origin: the missing piece `∫_0^{x_0}` is added as
/// `x_0 f(x_0) / (p + 1)`. Fails when `p <= -1`.
pub fn cumulative_from_origin(x: &[f64], f: &[f64], power_hint: f64) -> Result<Vec<f64>> {
    if power_hint <= -1.0 {
        return Err(Error::SingularEndpoint(format!("integrand ~ s^{power_hint} is not integrable at 0")));
    }
    let mut c = cumulative(x, f)?;
    let head = x[0] * f[0] / (power_hint + 1.0);
    for v in &mut c {
        *v += head;
    }
    Ok(c)
}

/// Adaptive Gauss–Legendre estimate of `∫_a^b f` with absolute error below `tol`.
pub fn adaptive(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> Result<f64> {
    let (x, w) = gauss_legendre(10);
    let rule = |lo: f64, hi: f64| -> f64 {
        let (c, h) = (0.5 * (lo + hi), 0.5 * (hi - lo));
        h * x.iter().zip(&w).map(|(xi, wi)| wi * f(c + h * xi)).sum::<f64>()
    };
    fn rec(rule: &dyn Fn(f64, f64) -> f64, lo: f64, hi: f64, whole: f64, tol: f64, depth: u32) -> Result<f64> {
        let mid = 0.5 * (lo + hi);
        let (l, r) = (rule(lo, mid), rule(mid, hi));
        let err = (l + r - whole).abs();
        if !err.is_finite() {
            return Err(Error::NonFinite(format!("integrand on [{lo}, {hi}]")));
        }
        if err <= tol || depth == 0 {
            return Ok(l + r);
        }
        Ok(rec(rule, lo, mid, l, 0.5 * tol, depth - 1)? + rec(rule, mid, hi, r, 0.5 * tol, depth - 1)?)
    }
    rec(&rule, a, b, rule(a, b), tol, 40)
}

/// `∫_a^x f` with an optional endpoint power hint `f(s) ~ (s - a)^p`. For
/// `p < 0` the substitution `s = a + (x - a) τ^{1/(p+1)}` removes the singularity.
pub fn integrate_from(f: &dyn Fn(f64) -> f64, a: f64, x: f64, tol: f64, hint: Option<f64>) -> Result<f64> {
    if x == a {
        return Ok(0.0);
    }
    match hint {
        Some(p) if p <= -1.0 => Err(Error::SingularEndpoint(format!("power hint {p} is not integrable"))),
        Some(p) if p < 0.0 => {
            let q = 1.0 / (p + 1.0);
            let len = x - a;
            let g = |tau: f64| f(a + len * tau.powf(q)) * q * len * tau.powf(q - 1.0);
            adaptive(&g, 0.0, 1.0, tol)
        }
        _ => {
            if !f(a).is_finite() {
                return Err(Error::SingularEndpoint(format!("integrand diverges at {a}; supply a power hint")));
            }
            adaptive(f, a, x, tol)
        }
    }
}

/// `∫_a^b outer(r, ∫_a^r inner(s) ds) dr`. Power hints describe the behaviour of
/// `inner` and of the composed outer integrand at `a`.
pub fn nested_quadrature(
    inner: impl Fn(f64) -> f64,
    outer: impl Fn(f64, f64) -> f64,
    a: f64,
    b: f64,
    tol: f64,
    inner_hint: Option<f64>,
    outer_hint: Option<f64>,
) -> Result<f64> {
    let scale = (b - a).abs().max(1.0);
    let err = std::cell::Cell::new(None);
    let g = |r: f64| match integrate_from(&inner, a, r, 0.01 * tol / scale, inner_hint) {
        Ok(i) => outer(r, i),
        Err(e) => {
            err.set(Some(e));
            f64::NAN
        }
    };
    let res = integrate_from(&g, a, b, tol, outer_hint);
    if let Some(e) = err.take() {
        return Err(e);
    }
    res
}
