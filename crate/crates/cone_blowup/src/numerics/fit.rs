use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Condition-number bound above which a least-squares fit is rejected.
pub const DEFAULT_COND_BOUND: f64 = 1e12;

/// One basis function `x^power (ln x)^log_power`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BasisTerm {
    pub power: f64,
    pub log_power: u32,
}

impl BasisTerm {
    pub fn pow(power: f64) -> Self {
        Self { power, log_power: 0 }
    }

    pub fn pow_log(power: f64, log_power: u32) -> Self {
        Self { power, log_power }
    }

    pub fn eval(&self, x: f64) -> f64 {
        x.powf(self.power) * x.ln().powi(self.log_power as i32)
    }
}

/// Result of a linear least-squares fit in a [`BasisTerm`] basis.
#[derive(Debug, Clone)]
pub struct TailFit {
    pub basis: Vec<BasisTerm>,
    pub coefficients: Vec<f64>,
    pub window: (f64, f64),
    /// Max absolute residual over the fitted samples.
    pub residual: f64,
    /// Condition number of the column-scaled design matrix.
    pub condition: f64,
    /// Largest change of a coefficient when refitting on the upper half of the
    /// window, relative to `max(|c|, 1e-300)`; `None` when the half window is too small.
    pub coefficient_shift: Option<f64>,
}

impl TailFit {
    pub fn eval(&self, x: f64) -> f64 {
        self.basis.iter().zip(&self.coefficients).map(|(b, c)| c * b.eval(x)).sum()
    }

    /// Coefficient of the term with the given power and log power.
    pub fn coefficient(&self, power: f64, log_power: u32) -> Option<f64> {
        self.basis
            .iter()
            .position(|b| (b.power - power).abs() < 1e-12 && b.log_power == log_power)
            .map(|i| self.coefficients[i])
    }
}

/// Least squares `Σ_j c_j φ_j(x) ≈ y` over arbitrary design columns. Columns
/// are scaled to unit norm before the SVD.
pub fn least_squares(columns: &[Vec<f64>], y: &[f64], cond_bound: f64) -> Result<(Vec<f64>, f64)> {
    let m = y.len();
    let k = columns.len();
    if m < k || k == 0 {
        return Err(Error::TooFewNodes { need: k.max(1), got: m });
    }
    let mut a = DMatrix::<f64>::zeros(m, k);
    let mut scale = vec![0.0; k];
    for (j, col) in columns.iter().enumerate() {
        let norm = col.iter().map(|v| v * v).sum::<f64>().sqrt();
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(Error::IllConditioned { cond: f64::INFINITY, bound: cond_bound });
        }
        scale[j] = norm;
        for i in 0..m {
            a[(i, j)] = col[i] / norm;
        }
    }
    let svd = a.svd(true, true);
    let sv = &svd.singular_values;
    let smax = sv.max();
    let smin = sv.min();
    let cond = if smin > 0.0 { smax / smin } else { f64::INFINITY };
    if !(cond <= cond_bound) {
        return Err(Error::IllConditioned { cond, bound: cond_bound });
    }
    let b = DVector::from_column_slice(y);
    let sol = svd.solve(&b, 0.0).map_err(|e| Error::InvariantViolation(e.to_string()))?;
    Ok(((0..k).map(|j| sol[j] / scale[j]).collect(), cond))
}

/// Fit samples `(x_i, y_i)` with `x_i ∈ [lo, hi]` by the given basis.
pub fn fit_tail(x: &[f64], y: &[f64], lo: f64, hi: f64, basis: &[BasisTerm], cond_bound: f64) -> Result<TailFit> {
    let fit_on = |lo: f64| -> Result<(Vec<f64>, f64, f64)> {
        let idx: Vec<usize> = (0..x.len()).filter(|&i| x[i] >= lo && x[i] <= hi).collect();
        let cols: Vec<Vec<f64>> = basis.iter().map(|b| idx.iter().map(|&i| b.eval(x[i])).collect()).collect();
        let ys: Vec<f64> = idx.iter().map(|&i| y[i]).collect();
        let (c, cond) = least_squares(&cols, &ys, cond_bound)?;
        let res = idx
            .iter()
            .map(|&i| (y[i] - basis.iter().zip(&c).map(|(b, c)| c * b.eval(x[i])).sum::<f64>()).abs())
            .fold(0.0, f64::max);
        Ok((c, cond, res))
    };
    let (coefficients, condition, residual) = fit_on(lo)?;
    let shift = fit_on(0.5 * (lo + hi)).ok().map(|(c2, _, _)| {
        coefficients
            .iter()
            .zip(&c2)
            .map(|(a, b)| (a - b).abs() / a.abs().max(1e-300))
            .fold(0.0, f64::max)
    });
    Ok(TailFit { basis: basis.to_vec(), coefficients, window: (lo, hi), residual, condition, coefficient_shift: shift })
}

/// Slope of `ln|y|` against `ln x` with optional extra regressors evaluated at
/// `x`. Returns the coefficient of `ln x`.
pub fn log_slope(x: &[f64], y: &[f64], extra: &[&dyn Fn(f64) -> f64]) -> Result<f64> {
    let mut cols = vec![vec![1.0; x.len()], x.iter().map(|v| v.ln()).collect()];
    for e in extra {
        cols.push(x.iter().map(|&v| e(v)).collect());
    }
    let ly: Vec<f64> = y.iter().map(|v| v.abs().ln()).collect();
    if ly.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("log of zero sample in slope fit".into()));
    }
    Ok(least_squares(&cols, &ly, DEFAULT_COND_BOUND)?.0[1])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_power_log_coefficients() {
        let x: Vec<f64> = (0..200).map(|i| 50.0 + i as f64).collect();
        let f = |x: f64| x + 0.3 / x - 0.2 * x.powi(-3) * x.ln() + 0.05 * x.powi(-3);
        let y: Vec<f64> = x.iter().map(|&v| f(v)).collect();
        let basis =
            [BasisTerm::pow(1.0), BasisTerm::pow(-1.0), BasisTerm::pow_log(-3.0, 1), BasisTerm::pow(-3.0)];
        let fit = fit_tail(&x, &y, 60.0, 240.0, &basis, DEFAULT_COND_BOUND).unwrap();
        assert!((fit.coefficient(1.0, 0).unwrap() - 1.0).abs() < 1e-10);
        assert!((fit.coefficient(-1.0, 0).unwrap() - 0.3).abs() < 1e-7);
        assert!((fit.coefficient(-3.0, 1).unwrap() + 0.2).abs() < 1e-3);
    }

    #[test]
    fn rejects_degenerate_basis() {
        let x: Vec<f64> = (0..50).map(|i| 1.0 + i as f64).collect();
        let y = x.clone();
        let basis = [BasisTerm::pow(1.0), BasisTerm::pow(1.0)];
        assert!(matches!(fit_tail(&x, &y, 1.0, 50.0, &basis, 1e12), Err(Error::IllConditioned { .. })));
    }

    #[test]
    fn slope_with_correction() {
        let x: Vec<f64> = (0..100).map(|i| 1e-3 * 1.05f64.powi(i)).collect();
        let y: Vec<f64> = x.iter().map(|v| v.powf(2.5) * (3.0 * v.sqrt() - v).exp()).collect();
        let sq = |v: f64| v.sqrt();
        let s = log_slope(&x, &y, &[&sq, &|v: f64| v]).unwrap();
        assert!((s - 2.5).abs() < 1e-3, "{s}");
    }
}
