//! Grids, finite differences, quadrature, least squares and truncated series.

pub mod curve;
pub mod diff;
pub mod fit;
pub mod grid;
pub mod jet2;
pub mod ode;
pub mod quad;
pub mod series;
pub mod smooth;

pub use curve::SampledCurve;
pub use grid::{RadialGrid, SpacingPolicy};
pub use jet2::Jet2;
pub use series::{Taylor, TruncSeries};
