//! Exact Fischer decompositions and Moser-type normal forms for real
//! submanifolds of codimension four in `C^{2N}`.

pub mod algebra;
pub mod estimates;
pub mod fischer;
pub mod linalg;
pub mod manifold;
pub mod normalform;

pub use algebra::{BiPolynomial, GaussianRational, Matrix, MultiIndex, TransformPolynomial};
pub use fischer::{DivisorFamily, FischerCertificate, Mode};
pub use manifold::ManifoldSpec;
pub use normalform::{normalize, theta_step, NormalFormResult, Transformation};
pub use estimates::{EstimateConstants, EstimatesError, InequalityCheck, IterationTrace, PolydiscParams, Verdict};
