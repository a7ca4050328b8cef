//! Integer points in random polytopes.
//!
//! Instances `P(n, m, x0, R)` have i.i.d. Gaussian facet normals with every
//! facet at distance `R` from `x0`. [`roundip::find_integer_point`] rounds
//! `x0` through repeated partial-coloring walks ([`edgewalk`]) and checks
//! membership; [`oracle`] holds exact brute-force references used to
//! validate it; [`experiments`] runs reproducible Monte Carlo sweeps over the
//! radius and concentration audits.

pub mod edgewalk;
pub mod error;
pub mod experiments;
pub mod limits;
pub mod model;
pub mod numerics;
pub mod oracle;
pub mod registry;
pub mod roundip;

pub use error::{Error, Result};
pub use limits::Limits;
