use super::jet2::Jet2;
use super::series::Taylor;

/// Jet of `e^{-1/x}` (zero for `x <= 0`).
fn psi(x: &Taylor) -> Taylor {
    if x.value() <= 0.0 {
        return Taylor::constant(0.0, x.len());
    }
    x.recip().expect("positive argument").scale(-1.0).exp()
}

/// Smooth step: 1 on `s <= 1`, 0 on `s >= 2`, `C^∞` and monotone in between.
/// Built from `ψ(x) = e^{-1/x}` as `ψ(2-s) / (ψ(2-s) + ψ(s-1))`.
pub fn chi0_jet(s: &Taylor) -> Taylor {
    let v = s.value();
    if v <= 1.0 {
        return Taylor::constant(1.0, s.len());
    }
    if v >= 2.0 {
        return Taylor::constant(0.0, s.len());
    }
    let a = psi(&s.scale(-1.0).add_const(2.0));
    let b = psi(&s.add_const(-1.0));
    a.div(&(&a + &b)).expect("denominator is positive on (1,2)")
}

/// `(χ₀, χ₀', χ₀'')` at `s`.
pub fn chi0(s: f64) -> (f64, f64, f64) {
    let j = chi0_jet(&Taylor::variable(s, 3));
    (j.c[0], j.c[1], 2.0 * j.c[2])
}

/// Cutoff `Θ(ξ) = χ₀(4|ξ|)`: 1 for `|ξ| <= 1/4`, 0 for `|ξ| >= 1/2`.
pub fn theta(xi: f64) -> (f64, f64, f64) {
    let (v, d1, d2) = chi0(4.0 * xi.abs());
    let sg = xi.signum();
    (v, 4.0 * sg * d1, 16.0 * d2)
}

/// `Θ` applied to a bivariate jet with positive value.
pub fn theta_jet2(xi: &Jet2) -> Jet2 {
    let (v, d1, d2) = theta(xi.f);
    xi.chain(v, d1, d2)
}

/// Remote-data cutoff `χ_δ(ρ) = χ₀(ρ/δ)` as a Taylor jet in `ρ`.
pub fn chi_delta_jet(rho: &Taylor, delta: f64) -> Taylor {
    chi0_jet(&rho.scale(1.0 / delta))
}
