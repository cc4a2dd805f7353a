use crate::error::{Error, Result};

/// Minimum number of nodes accepted by [`RadialGrid`].
pub const MIN_NODES: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpacingPolicy {
    Uniform,
    /// Spacings grow by a constant ratio from the first node outward.
    Geometric,
    /// Anything else (merged or refined grids).
    Mixed,
}

/// Strictly increasing set of positive radii.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialGrid {
    nodes: Vec<f64>,
    policy: SpacingPolicy,
}

impl RadialGrid {
    pub fn from_nodes(nodes: Vec<f64>, policy: SpacingPolicy) -> Result<Self> {
        if nodes.len() < MIN_NODES {
            return Err(Error::TooFewNodes { need: MIN_NODES, got: nodes.len() });
        }
        if nodes.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidGrid("non-finite node".into()));
        }
        if nodes[0] <= 0.0 {
            return Err(Error::InvalidGrid(format!("first node {} is not positive", nodes[0])));
        }
        if nodes.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidGrid("nodes are not strictly increasing".into()));
        }
        Ok(Self { nodes, policy })
    }

    /// `n` equally spaced nodes on `[a, b]`.
    pub fn uniform(a: f64, b: f64, n: usize) -> Result<Self> {
        if !(b > a) || n < 2 {
            return Err(Error::InvalidGrid(format!("uniform grid needs a < b, got [{a}, {b}]")));
        }
        let h = (b - a) / (n - 1) as f64;
        let mut nodes: Vec<f64> = (0..n).map(|i| a + h * i as f64).collect();
        nodes[n - 1] = b;
        Self::from_nodes(nodes, SpacingPolicy::Uniform)
    }

    /// `n` nodes on `[origin_cutoff, rho_max]` whose spacing starts at
    /// `first_step` and grows by a constant ratio.
    pub fn geometric(origin_cutoff: f64, first_step: f64, rho_max: f64, n: usize) -> Result<Self> {
        if !(origin_cutoff > 0.0) || !(rho_max > origin_cutoff) || !(first_step > 0.0) {
            return Err(Error::InvalidGrid(format!(
                "geometric grid needs 0 < origin_cutoff < rho_max and first_step > 0 \
                 (got {origin_cutoff}, {rho_max}, {first_step})"
            )));
        }
        if n < MIN_NODES {
            return Err(Error::TooFewNodes { need: MIN_NODES, got: n });
        }
        let span = rho_max - origin_cutoff;
        let m = (n - 1) as f64;
        if first_step * m >= span {
            return Err(Error::InvalidGrid(format!(
                "first_step {first_step} too large for {n} nodes on a span of {span}"
            )));
        }
        // Solve first_step * (r^m - 1) / (r - 1) = span for r > 1.
        let total = |r: f64| first_step * ((r.ln() * m).exp_m1() / (r - 1.0));
        let (mut lo, mut hi) = (1.0 + 1e-15, 2.0);
        while total(hi) < span {
            hi *= 2.0;
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if total(mid) < span {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let r = 0.5 * (lo + hi);
        let mut nodes = Vec::with_capacity(n);
        let mut x = origin_cutoff;
        let mut h = first_step;
        nodes.push(x);
        for _ in 1..n {
            x += h;
            h *= r;
            nodes.push(x);
        }
        nodes[n - 1] = rho_max;
        Self::from_nodes(nodes, SpacingPolicy::Geometric)
    }

    /// Pure log-uniform nodes `rho_0 * q^i` from `origin_cutoff` to `rho_max`.
    pub fn log_uniform(origin_cutoff: f64, rho_max: f64, n: usize) -> Result<Self> {
        if !(origin_cutoff > 0.0) || !(rho_max > origin_cutoff) {
            return Err(Error::InvalidGrid("log-uniform grid needs 0 < a < b".into()));
        }
        let la = origin_cutoff.ln();
        let lb = rho_max.ln();
        let mut nodes: Vec<f64> =
            (0..n).map(|i| (la + (lb - la) * i as f64 / (n - 1) as f64).exp()).collect();
        nodes[0] = origin_cutoff;
        nodes[n - 1] = rho_max;
        Self::from_nodes(nodes, SpacingPolicy::Geometric)
    }

    /// Replace the nodes inside `[lo, hi]` by a uniform band with spacing close to `h`.
    pub fn with_uniform_band(&self, lo: f64, hi: f64, h: f64) -> Result<Self> {
        let count = ((hi - lo) / h).ceil().max(1.0) as usize;
        let step = (hi - lo) / count as f64;
        let mut nodes: Vec<f64> = self.nodes.iter().copied().filter(|&x| x < lo - 0.5 * step).collect();
        nodes.extend((0..=count).map(|i| lo + step * i as f64));
        nodes.extend(self.nodes.iter().copied().filter(|&x| x > hi + 0.5 * step));
        Self::from_nodes(nodes, SpacingPolicy::Mixed)
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn policy(&self) -> SpacingPolicy {
        self.policy
    }

    pub fn origin_cutoff(&self) -> f64 {
        self.nodes[0]
    }

    pub fn last(&self) -> f64 {
        self.nodes[self.nodes.len() - 1]
    }

    /// Index `i` of the interval `[x_i, x_{i+1}]` containing `x`, clamped to the grid.
    pub fn locate(&self, x: f64) -> usize {
        let n = self.nodes.len();
        match self.nodes.binary_search_by(|p| p.partial_cmp(&x).unwrap()) {
            Ok(i) => i.min(n - 2),
            Err(0) => 0,
            Err(i) => (i - 1).min(n - 2),
        }
    }

    /// Indices of the nodes lying in `[lo, hi]`.
    pub fn window_indices(&self, lo: f64, hi: f64) -> std::ops::Range<usize> {
        let start = self.nodes.partition_point(|&x| x < lo);
        let end = self.nodes.partition_point(|&x| x <= hi);
        start..end
    }
}
