//! Oblivious routing on two-dimensional torus networks.
//!
//! The crate builds routing policies (ECMP, VLB, LLB, GLLB and ring load
//! balancing), evaluates them exactly against fixed traffic matrices and
//! against the worst case over k-limited hose traffic, computes closed-form
//! load bounds, and exports the related linear programs in CPLEX LP format.
//!
//! Coordinates follow one convention everywhere: `x` is the horizontal
//! coordinate in `[0, cols)`, `y` the vertical coordinate in `[0, rows)`.
//! Vertical links have capacity `c1`, horizontal links `c2`.

pub mod bounds;
pub mod eval;
pub mod lpexport;
pub mod paths;
pub mod policy;
pub mod schemes;
pub mod torus;
pub mod traffic;

mod error;

pub use error::{Error, Result};
pub use eval::{LoadReport, TrialSummary, WorstCaseResult};
pub use policy::{FullPolicy, OriginPolicy, Policy};
pub use torus::{Automorphism, DirectedEdge, Direction, Node, TorusSpec};
pub use traffic::TrafficMatrix;

/// Crate version, stamped into CSV metadata lines.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
