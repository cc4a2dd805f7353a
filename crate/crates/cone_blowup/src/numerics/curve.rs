use std::sync::Arc;

use super::diff;
use super::grid::RadialGrid;
use crate::error::{Error, Result};

/// Samples of a real function on a [`RadialGrid`], optionally with first and
/// second derivatives.
#[derive(Debug, Clone)]
pub struct SampledCurve {
    pub grid: Arc<RadialGrid>,
    pub values: Vec<f64>,
    pub deriv1: Option<Vec<f64>>,
    pub deriv2: Option<Vec<f64>>,
}

impl SampledCurve {
    pub fn new(grid: Arc<RadialGrid>, values: Vec<f64>) -> Result<Self> {
        Self::with_derivs(grid, values, None, None)
    }

    pub fn with_derivs(
        grid: Arc<RadialGrid>,
        values: Vec<f64>,
        deriv1: Option<Vec<f64>>,
        deriv2: Option<Vec<f64>>,
    ) -> Result<Self> {
        let n = grid.len();
        if values.len() != n {
            return Err(Error::GridMismatch);
        }
        for d in [&deriv1, &deriv2].into_iter().flatten() {
            if d.len() != n {
                return Err(Error::GridMismatch);
            }
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("curve value at rho = {}", grid.nodes()[i])));
        }
        Ok(Self { grid, values, deriv1, deriv2 })
    }

    /// Sample `f` at every node.
    pub fn from_fn(grid: Arc<RadialGrid>, f: impl Fn(f64) -> f64) -> Result<Self> {
        let values = grid.nodes().iter().map(|&x| f(x)).collect();
        Self::new(grid, values)
    }

    /// Sample `f` returning `(value, first, second)` at every node.
    pub fn from_fn3(grid: Arc<RadialGrid>, f: impl Fn(f64) -> (f64, f64, f64)) -> Result<Self> {
        let n = grid.len();
        let (mut v, mut d1, mut d2) = (Vec::with_capacity(n), Vec::with_capacity(n), Vec::with_capacity(n));
        for &x in grid.nodes() {
            let (a, b, c) = f(x);
            v.push(a);
            d1.push(b);
            d2.push(c);
        }
        Self::with_derivs(grid, v, Some(d1), Some(d2))
    }

    pub fn nodes(&self) -> &[f64] {
        self.grid.nodes()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn same_grid(&self, other: &SampledCurve) -> bool {
        Arc::ptr_eq(&self.grid, &other.grid) || self.grid.nodes() == other.grid.nodes()
    }

    pub fn check_same_grid(&self, other: &SampledCurve) -> Result<()> {
        if self.same_grid(other) {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }

    /// Return a copy whose missing derivative arrays are filled by grid differentiation.
    pub fn differentiated(&self) -> Result<Self> {
        let mut out = self.clone();
        if out.deriv1.is_none() || out.deriv2.is_none() {
            let (d1, d2) = diff::differentiate_both(self.nodes(), &self.values)?;
            if out.deriv1.is_none() {
                out.deriv1 = Some(d1);
            }
            if out.deriv2.is_none() {
                out.deriv2 = Some(d2);
            }
        }
        Ok(out)
    }

    /// Return a copy whose derivatives are recomputed from the values by grid stencils.
    pub fn restenciled(&self) -> Result<Self> {
        let (d1, d2) = diff::differentiate_both(self.nodes(), &self.values)?;
        Self::with_derivs(self.grid.clone(), self.values.clone(), Some(d1), Some(d2))
    }

    pub fn d1(&self) -> Result<&[f64]> {
        self.deriv1.as_deref().ok_or_else(|| Error::InvariantViolation("first derivative missing".into()))
    }

    pub fn d2(&self) -> Result<&[f64]> {
        self.deriv2.as_deref().ok_or_else(|| Error::InvariantViolation("second derivative missing".into()))
    }

    pub fn map_values(&self, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        let values = self.nodes().iter().zip(&self.values).map(|(&x, &v)| f(x, v)).collect();
        Self::new(self.grid.clone(), values)
    }

    pub fn scaled(&self, c: f64) -> Self {
        let s = |v: &Vec<f64>| v.iter().map(|x| c * x).collect::<Vec<_>>();
        Self {
            grid: self.grid.clone(),
            values: s(&self.values),
            deriv1: self.deriv1.as_ref().map(s),
            deriv2: self.deriv2.as_ref().map(s),
        }
    }

    /// Interpolated `(f, f', f'')` at `x` inside the grid. With both
    /// derivatives stored this is quintic Hermite interpolation; otherwise
    /// local quartic Lagrange interpolation of the values.
    pub fn eval3(&self, x: f64) -> (f64, f64, f64) {
        let nodes = self.nodes();
        let i = self.grid.locate(x);
        match (&self.deriv1, &self.deriv2) {
            (Some(d1), Some(d2)) => hermite5(
                nodes[i],
                nodes[i + 1],
                [self.values[i], d1[i], d2[i]],
                [self.values[i + 1], d1[i + 1], d2[i + 1]],
                x,
            ),
            _ => {
                let n = nodes.len();
                let s = i.saturating_sub(2).min(n - 5);
                let w = diff::fornberg_weights(x, &nodes[s..s + 5], 2);
                let mut out = [0.0; 3];
                for (m, o) in out.iter_mut().enumerate() {
                    *o = (0..5).map(|j| w[m][j] * self.values[s + j]).sum();
                }
                (out[0], out[1], out[2])
            }
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.eval3(x).0
    }

    /// Max absolute value over the nodes in `[lo, hi]`.
    pub fn max_abs_on(&self, lo: f64, hi: f64) -> f64 {
        self.grid.window_indices(lo, hi).map(|i| self.values[i].abs()).fold(0.0, f64::max)
    }

    /// CSV rows `rho,value,deriv1,deriv2` (missing derivatives are written empty).
    pub fn csv_rows(&self) -> impl Iterator<Item = [String; 4]> + '_ {
        let fmt = |v: Option<f64>| v.map(|x| format!("{x:?}")).unwrap_or_default();
        (0..self.len()).map(move |i| {
            [
                format!("{:?}", self.nodes()[i]),
                format!("{:?}", self.values[i]),
                fmt(self.deriv1.as_ref().map(|d| d[i])),
                fmt(self.deriv2.as_ref().map(|d| d[i])),
            ]
        })
    }

    pub const CSV_HEADER: [&'static str; 4] = ["rho", "value", "deriv1", "deriv2"];
}

/// Quintic Hermite interpolant on `[a, b]` matching value, first and second
/// derivative at both ends; returns `(p, p', p'')` at `x`.
pub fn hermite5(a: f64, b: f64, fa: [f64; 3], fb: [f64; 3], x: f64) -> (f64, f64, f64) {
    let h = b - a;
    let t = (x - a) / h;
    // Basis on [0,1] in terms of t for values, scaled derivatives and second derivatives.
    let t2 = t * t;
    let t3 = t2 * t;
    let t4 = t3 * t;
    let t5 = t4 * t;
    let h0 = 1.0 - 10.0 * t3 + 15.0 * t4 - 6.0 * t5;
    let h1 = t - 6.0 * t3 + 8.0 * t4 - 3.0 * t5;
    let h2 = 0.5 * t2 - 1.5 * t3 + 1.5 * t4 - 0.5 * t5;
    let h5 = 10.0 * t3 - 15.0 * t4 + 6.0 * t5;
    let h4 = -4.0 * t3 + 7.0 * t4 - 3.0 * t5;
    let h3 = 0.5 * t3 - t4 + 0.5 * t5;
    let d_h0 = -30.0 * t2 + 60.0 * t3 - 30.0 * t4;
    let d_h1 = 1.0 - 18.0 * t2 + 32.0 * t3 - 15.0 * t4;
    let d_h2 = t - 4.5 * t2 + 6.0 * t3 - 2.5 * t4;
    let d_h5 = 30.0 * t2 - 60.0 * t3 + 30.0 * t4;
    let d_h4 = -12.0 * t2 + 28.0 * t3 - 15.0 * t4;
    let d_h3 = 1.5 * t2 - 4.0 * t3 + 2.5 * t4;
    let dd_h0 = -60.0 * t + 180.0 * t2 - 120.0 * t3;
    let dd_h1 = -36.0 * t + 96.0 * t2 - 60.0 * t3;
    let dd_h2 = 1.0 - 9.0 * t + 18.0 * t2 - 10.0 * t3;
    let dd_h5 = 60.0 * t - 180.0 * t2 + 120.0 * t3;
    let dd_h4 = -24.0 * t + 84.0 * t2 - 60.0 * t3;
    let dd_h3 = 3.0 * t - 12.0 * t2 + 10.0 * t3;
    let (p0, p1, p2) = (fa[0], fa[1] * h, fa[2] * h * h);
    let (q0, q1, q2) = (fb[0], fb[1] * h, fb[2] * h * h);
    let v = p0 * h0 + p1 * h1 + p2 * h2 + q0 * h5 + q1 * h4 + q2 * h3;
    let d = (p0 * d_h0 + p1 * d_h1 + p2 * d_h2 + q0 * d_h5 + q1 * d_h4 + q2 * d_h3) / h;
    let dd = (p0 * dd_h0 + p1 * dd_h1 + p2 * dd_h2 + q0 * dd_h5 + q1 * dd_h4 + q2 * dd_h3) / (h * h);
    (v, d, dd)
}
