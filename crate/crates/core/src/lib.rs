//! Approximately minimum-volume ellipsoids covering most of a point set,
//! computed by iterated dual-weighted outlier removal on the minimum-volume
//! enclosing ellipsoid problem, and their use for robust subspace recovery.

pub mod coverage;
pub mod error;
pub mod geometry;
pub mod instance;
pub mod linalg;
pub mod mvee;
pub mod oracle;
pub mod subspace;

pub use coverage::{approximate_coverage_ellipsoid, AlgoConfig, CandidateRecord, CoverageRun};
pub use error::{Error, Result};
pub use geometry::{Ellipsoid, PointSet};
pub use mvee::{solve_dual_origin, solve_mvee, DualSolution, SolverConfig};
