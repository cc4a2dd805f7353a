use crate::error::{Error, Result};

/// Physical and truncation parameters shared by every stage.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Config {
    /// Blow-up rate exponent, `ν > 1/2`.
    pub nu: f64,
    /// Inner-region overlap exponent, `0 < ε₁ < ν`.
    pub eps1: f64,
    /// Remote-region overlap exponent, `0 < ε₂ < 1`.
    pub eps2: f64,
    /// Support radius scale of the remote Cauchy data.
    pub delta: f64,
    /// Number of inner layers above the ground state.
    pub n_inner: usize,
    /// Number of remote layers above the Cauchy data.
    pub n_remote: usize,
}

impl Default for Config {
    fn default() -> Self {
        let nu = std::f64::consts::FRAC_1_SQRT_2;
        Self { nu, eps1: nu / 2.0, eps2: 0.5, delta: 0.1, n_inner: 2, n_remote: 4 }
    }
}

impl Config {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if !(self.nu > 0.5) || !self.nu.is_finite() {
            return bad(format!("nu must exceed 1/2, got {}", self.nu));
        }
        if !(self.eps1 > 0.0 && self.eps1 < self.nu) {
            return bad(format!("eps1 must lie in (0, nu), got {}", self.eps1));
        }
        if !(self.eps2 > 0.0 && self.eps2 < 1.0) {
            return bad(format!("eps2 must lie in (0, 1), got {}", self.eps2));
        }
        if !(self.delta > 0.0) || !self.delta.is_finite() {
            return bad(format!("delta must be positive, got {}", self.delta));
        }
        if self.n_inner < 1 {
            return bad("n_inner must be at least 1".into());
        }
        if self.n_remote < 1 {
            return bad("n_remote must be at least 1".into());
        }
        Ok(())
    }

    /// Sobolev order `M = ⌊3ν/2 + 5/4⌋`.
    pub fn sobolev_m(&self) -> usize {
        (1.5 * self.nu + 1.25).floor() as usize
    }

    /// `L₀ = 2M + 1`.
    pub fn sobolev_l0(&self) -> usize {
        2 * self.sobolev_m() + 1
    }

    /// `K₀ = ⌊3ν + 5/2⌋`.
    pub fn sobolev_k0(&self) -> usize {
        (3.0 * self.nu + 2.5).floor() as usize
    }

    /// `α(k) = νk + 4`, the light-cone exponent at order `k`.
    pub fn alpha(&self, k: usize) -> f64 {
        self.nu * k as f64 + 4.0
    }
}
