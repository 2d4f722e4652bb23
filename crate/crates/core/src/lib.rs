//! Mode-seeking clustering by hill-climbing.
//!
//! The crate provides, over any twice-differentiable [`density::Density`]:
//!
//! - analytic Gaussian-mixture test densities with exact derivatives,
//!   mode enumeration, and smoothness-bound estimates ([`density`]);
//! - compact-support kernel density estimation with shadow kernels and
//!   mean-shift vectors ([`kde`]);
//! - a gradient-flow oracle that assigns points to the modes their ascent
//!   flow reaches ([`flow`]);
//! - the continuous-space hill-climbing algorithms: Euler Shift and its
//!   step-modulated variants, Level Shift, Line Search Shift, Max Shift,
//!   Max Slope Shift, and Mean Shift ([`shift`]);
//! - their discrete (medoid) counterparts plus Quick Shift and covering
//!   radii ([`medoid`]);
//! - a configuration-driven experiment harness comparing every algorithm
//!   against the oracle over parameter sweeps ([`harness`]).

pub mod csvio;
pub mod density;
pub mod error;
pub mod flow;
pub mod grid;
pub mod harness;
pub mod kde;
pub mod medoid;
pub mod numdiff;
pub mod point;
pub mod quadrature;
pub mod shift;
pub mod spatial;
pub mod trajectory;

pub use error::{Error, Result};
pub use point::Point;
