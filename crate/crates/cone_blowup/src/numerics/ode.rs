use std::sync::Arc;

use super::curve::SampledCurve;
use super::grid::RadialGrid;
use crate::error::{Error, Result};

/// Controls for [`integrate_ivp`].
#[derive(Debug, Clone, Copy)]
pub struct IvpOptions {
    /// Local error bound per step, relative to `max(scale_floor, |y|)` componentwise.
    pub tol: f64,
    pub scale_floor: f64,
    pub max_steps: usize,
    pub min_step: f64,
}

impl IvpOptions {
    pub fn with_tol(tol: f64) -> Self {
        Self { tol, scale_floor: 1.0, max_steps: 10_000_000, min_step: 1e-14 }
    }
}

/// Solution of an initial value problem sampled at grid nodes.
#[derive(Debug, Clone)]
pub struct IvpSolution {
    pub grid: Arc<RadialGrid>,
    /// `states[i]` is the state at `grid.nodes()[i]`.
    pub states: Vec<Vec<f64>>,
    /// Largest accepted step-doubling error estimate (scaled as in [`IvpOptions::tol`]).
    pub max_error_estimate: f64,
    pub accepted_steps: usize,
    pub rejected_steps: usize,
}

impl IvpSolution {
    /// Component `c` of the state as a curve.
    pub fn component(&self, c: usize) -> Result<SampledCurve> {
        SampledCurve::new(self.grid.clone(), self.states.iter().map(|s| s[c]).collect())
    }

    pub fn final_state(&self) -> &[f64] {
        &self.states[self.states.len() - 1]
    }
}

fn rk4_step<F>(rhs: &F, x: f64, y: &[f64], h: f64, out: &mut [f64], work: &mut [Vec<f64>; 5])
where
    F: Fn(f64, &[f64], &mut [f64]),
{
    let n = y.len();
    let [k1, k2, k3, k4, tmp] = work;
    rhs(x, y, k1);
    for i in 0..n {
        tmp[i] = y[i] + 0.5 * h * k1[i];
    }
    rhs(x + 0.5 * h, tmp, k2);
    for i in 0..n {
        tmp[i] = y[i] + 0.5 * h * k2[i];
    }
    rhs(x + 0.5 * h, tmp, k3);
    for i in 0..n {
        tmp[i] = y[i] + h * k3[i];
    }
    rhs(x + h, tmp, k4);
    for i in 0..n {
        out[i] = y[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
}

/// Integrate `y' = rhs(x, y)` from the first grid node to the last, with
/// classical fourth-order Runge–Kutta steps controlled by step doubling
/// (the accepted value is the Richardson-extrapolated one). Every grid node
/// is hit exactly, so the solution is reported there without interpolation.
pub fn integrate_ivp<F>(rhs: F, y0: &[f64], grid: Arc<RadialGrid>, opts: IvpOptions) -> Result<IvpSolution>
where
    F: Fn(f64, &[f64], &mut [f64]),
{
    if !(opts.tol > 0.0) {
        return Err(Error::InvalidConfig("tolerance must be positive".into()));
    }
    let n = y0.len();
    let nodes = grid.nodes().to_vec();
    let mut states = Vec::with_capacity(nodes.len());
    let mut y = y0.to_vec();
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("initial state".into()));
    }
    states.push(y.clone());
    let mut work: [Vec<f64>; 5] = std::array::from_fn(|_| vec![0.0; n]);
    let mut full = vec![0.0; n];
    let mut half = vec![0.0; n];
    let mut twohalf = vec![0.0; n];
    let mut x = nodes[0];
    let mut h = (nodes[1] - nodes[0]).abs();
    let (mut accepted, mut rejected) = (0usize, 0usize);
    let mut max_err: f64 = 0.0;
    for &target in &nodes[1..] {
        while x < target {
            if accepted + rejected > opts.max_steps {
                return Err(Error::StepUnderflow { x, h });
            }
            let step = h.min(target - x);
            let last = step >= target - x;
            rk4_step(&rhs, x, &y, step, &mut full, &mut work);
            rk4_step(&rhs, x, &y, 0.5 * step, &mut half, &mut work);
            rk4_step(&rhs, x + 0.5 * step, &half.clone(), 0.5 * step, &mut twohalf, &mut work);
            let mut err: f64 = 0.0;
            for i in 0..n {
                let e = (twohalf[i] - full[i]).abs() / 15.0;
                err = err.max(e / y[i].abs().max(opts.scale_floor));
            }
            if !err.is_finite() || twohalf.iter().any(|v| !v.is_finite()) {
                if step <= opts.min_step {
                    return Err(Error::NonFinite(format!("state left the finite range near x = {x}")));
                }
                h = 0.25 * step;
                rejected += 1;
                continue;
            }
            if err <= opts.tol {
                for i in 0..n {
                    y[i] = twohalf[i] + (twohalf[i] - full[i]) / 15.0;
                }
                x = if last { target } else { x + step };
                accepted += 1;
                max_err = max_err.max(err);
                let grow = if err == 0.0 { 4.0 } else { (0.9 * (opts.tol / err).powf(0.2)).clamp(0.2, 4.0) };
                if !last || grow < 1.0 {
                    h = step * grow;
                } else {
                    h = h.max(step * grow);
                }
            } else {
                rejected += 1;
                h = step * (0.9 * (opts.tol / err).powf(0.2)).clamp(0.1, 0.9);
                if h < opts.min_step {
                    return Err(Error::StepUnderflow { x, h });
                }
            }
        }
        states.push(y.clone());
    }
    Ok(IvpSolution { grid, states, max_error_estimate: max_err, accepted_steps: accepted, rejected_steps: rejected })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_solution() {
        let g = Arc::new(RadialGrid::uniform(1e-3, 10.0, 50).unwrap());
        let s = integrate_ivp(|_, _, d: &mut [f64]| d[0] = 0.0, &[1.0], g, IvpOptions::with_tol(1e-10)).unwrap();
        assert!(s.states.iter().all(|v| v[0] == 1.0));
    }

    #[test]
    fn exponential_growth() {
        let g = Arc::new(RadialGrid::uniform(1e-9, 1.0 + 1e-9, 20).unwrap());
        let tol = 1e-10;
        let s = integrate_ivp(|_, y, d: &mut [f64]| d[0] = y[0], &[1.0], g, IvpOptions::with_tol(tol)).unwrap();
        assert!((s.final_state()[0] - std::f64::consts::E).abs() < 10.0 * tol);
    }

    #[test]
    fn harmonic_oscillator_returns() {
        let tau = 2.0 * std::f64::consts::PI;
        let g = Arc::new(RadialGrid::uniform(1.0, 1.0 + tau, 17).unwrap());
        let tol = 1e-9;
        let s = integrate_ivp(
            |_, y, d: &mut [f64]| {
                d[0] = y[1];
                d[1] = -y[0];
            },
            &[1.0, 0.0],
            g,
            IvpOptions::with_tol(tol),
        )
        .unwrap();
        let f = s.final_state();
        assert!((f[0] - 1.0).abs() < 10.0 * tol && f[1].abs() < 10.0 * tol);
    }

    #[test]
    fn error_shrinks_with_tolerance() {
        let run = |tol: f64| {
            let g = Arc::new(RadialGrid::uniform(1.0, 3.0, 17).unwrap());
            let s = integrate_ivp(|x, y, d: &mut [f64]| d[0] = -2.0 * x * y[0], &[1.0], g, IvpOptions::with_tol(tol))
                .unwrap();
            (s.final_state()[0] - (-(9.0f64 - 1.0)).exp()).abs()
        };
        assert!(run(1e-12) < run(1e-7));
    }
}
