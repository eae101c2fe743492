//! Numerical calculus on finite-dimensional symmetrically self-dual spaces.
//!
//! The crate covers SSD/SSDB spaces and their quadratic forms, finite
//! q-positive sets and Fitzpatrick functions, a convex-function algebra closed
//! under Fenchel and intrinsic conjugation, the pos–neg decomposition solver,
//! and the maximal monotone operator results built on it (Rockafellar
//! surjectivity, sum theorems, Hammerstein equations).

pub mod convexfun;
pub mod decompose;
pub mod error;
pub mod legendre;
pub mod lp;
pub mod monotone;
pub mod qpositive;
pub mod sampling;
pub mod space;

pub use convexfun::{
    certify_bc, certify_tbc, compose_reflection, intrinsic_conjugate, nq_membership, partial_episum,
    pq_membership, prox, translate, BcReport, ConvexFunction, Quadratic,
};
pub use decompose::{
    maximality_check, minnorm_rhs, minnorm_surjectivity, posneg_decompose, DecompositionResult, MaximalityReport,
    MinNormEstimate, SolverConfig, Verdict,
};
pub use error::{Error, Result};
pub use monotone::{
    duality_map, fitzpatrick_op, graph_as_pointset, hammerstein_solve, sum_check, sum_surjectivity,
    surjectivity_solve, GraphSampling, HammersteinBranch, HammersteinSolution, MonotoneOp,
};
pub use qpositive::{fitzpatrick, is_q_positive, q_defect, PointSet, QPositivityReport};
pub use space::{SignedPermutation, SsdPoint, SsdSpace};
