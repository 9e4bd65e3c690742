//! Construction, numerical verification, canonical decomposition and unitary
//! equivalence of 2-isometric weighted shifts on rooted directed trees and of
//! diagonal operator valued unilateral weighted shifts, together with the
//! asymptotics of their Cauchy duals.

pub mod classifier;
pub mod cli;
pub mod dual;
pub mod error;
pub mod io;
pub mod linalg;
pub mod model;
pub mod operator;
pub mod tree;
pub mod xi;

pub use error::{Error, Result};
pub use operator::{PropertyReport, ShiftSpec, SpectralData, TruncatedOperator};
pub use tree::{BranchingDegrees, TreeSkeleton};
