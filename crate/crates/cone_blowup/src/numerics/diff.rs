use crate::error::{Error, Result};

/// Fornberg's algorithm: weights `w[m][j]` such that
/// `f^{(m)}(x0) ≈ Σ_j w[m][j] f(xs[j])` for `m = 0..=max_order`.
pub fn fornberg_weights(x0: f64, xs: &[f64], max_order: usize) -> Vec<Vec<f64>> {
    let n = xs.len();
    let mut c = vec![vec![0.0; n]; max_order + 1];
    let mut c1 = 1.0;
    let mut c4 = xs[0] - x0;
    c[0][0] = 1.0;
    for i in 1..n {
        let mn = i.min(max_order);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = xs[i] - x0;
        for j in 0..i {
            let c3 = xs[i] - xs[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[k][i] = c1 * (k as f64 * c[k - 1][i - 1] - c5 * c[k][i - 1]) / c2;
                }
                c[0][i] = -c1 * c5 * c[0][i - 1] / c2;
            }
            for k in (1..=mn).rev() {
                c[k][j] = (c4 * c[k][j] - k as f64 * c[k - 1][j]) / c3;
            }
            c[0][j] = c4 * c[0][j] / c3;
        }
        c1 = c2;
    }
    c
}

/// Start index of the 5-point stencil used at node `i` of an `n`-node grid.
fn stencil_start(i: usize, n: usize) -> usize {
    if i < 2 {
        0
    } else if i + 2 >= n {
        n - 5
    } else {
        i - 2
    }
}

/// Derivative of order `order` (1 or 2) of samples `f` at every node, using
/// five-point stencils: centered in the interior, one-sided at the two ends.
/// Exact on polynomials of degree at most four.
pub fn differentiate(x: &[f64], f: &[f64], order: usize) -> Result<Vec<f64>> {
    let n = x.len();
    if n < 5 || f.len() != n {
        return Err(Error::TooFewNodes { need: 5, got: n.min(f.len()) });
    }
    if order == 0 || order > 2 {
        return Err(Error::InvalidGrid(format!("unsupported derivative order {order}")));
    }
    let mut out = vec![0.0; n];
    for i in 0..n {
        let s = stencil_start(i, n);
        let w = fornberg_weights(x[i], &x[s..s + 5], order);
        out[i] = (0..5).map(|j| w[order][j] * f[s + j]).sum();
    }
    Ok(out)
}

/// Both first and second derivatives in one pass.
pub fn differentiate_both(x: &[f64], f: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = x.len();
    if n < 5 || f.len() != n {
        return Err(Error::TooFewNodes { need: 5, got: n.min(f.len()) });
    }
    let mut d1 = vec![0.0; n];
    let mut d2 = vec![0.0; n];
    for i in 0..n {
        let s = stencil_start(i, n);
        let w = fornberg_weights(x[i], &x[s..s + 5], 2);
        for j in 0..5 {
            d1[i] += w[1][j] * f[s + j];
            d2[i] += w[2][j] * f[s + j];
        }
    }
    Ok((d1, d2))
}
