//! Float-level estimates: sup norms on polydiscs, audits of the displayed
//! inequalities, radius schedules and the rapid-convergence driver.
//!
//! Exact arithmetic stays in charge of every order statement; floats only
//! measure sizes.

pub mod audit;
pub mod iteration;
pub mod norms;
pub mod sequence;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::algebra::{BiPolynomial, Block, Polynomial};
use crate::normalform::NormalFormError;

pub use audit::{
    audit_all, audit_lemma42, audit_prop44, audit_remark43, AuditReport, GateReport, Lemma42Report, NormReport, PointwiseOutcome,
    Prop44Outcome, Prop44Report,
};
pub use iteration::{moser_iterate, picard_invert, FloatMap, IterateOptions, IterationTrace, PicardResult, StageRecord};
pub use norms::{sup_norm_bounds, SupBounds, DEFAULT_SEED};
pub use sequence::{limit_check_lemma31, radius_discrepancy, radius_sequence, LimitCheck, PolydiscParams, RadiusDiscrepancy};

#[derive(Debug, Error)]
pub enum EstimatesError {
    #[error("invalid radii: {0}")]
    Radii(String),
    #[error("argument out of range: {0}")]
    Domain(String),
    #[error("no convergence within {cap} steps")]
    NoConvergence { cap: u32 },
    #[error("contraction gate fails: gradient bound {gradient} is not below 1/2")]
    Gate { gradient: f64 },
    #[error("Picard iteration did not converge: residual {residual:e} after {iterations} steps")]
    Picard { iterations: usize, residual: f64 },
    #[error("preimage leaves the polydisc of radius {rho}")]
    Containment { rho: f64 },
    #[error("polynomial is not homogeneous")]
    NotHomogeneous,
    #[error("stage {stage}: {reason}")]
    Stage { stage: u32, reason: String },
    #[error(transparent)]
    NormalForm(#[from] NormalFormError),
}

/// `A = 324(1+(2d)^{2N})`, `B = 18N(1+(2d)^{2N})`, `D = 6N`, `E = (48/N)(2d)^{8N}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimateConstants {
    pub a: f64,
    pub b: f64,
    pub d: f64,
    pub e: f64,
}

impl EstimateConstants {
    pub fn new(d: u32, n: usize) -> Self {
        Self::from_float(d as f64, n)
    }

    pub fn from_float(d: f64, n: usize) -> Self {
        let nn = n as f64;
        let p = (2.0 * d).powf(2.0 * nn);
        EstimateConstants { a: 324.0 * (1.0 + p), b: 18.0 * nn * (1.0 + p), d: 6.0 * nn, e: 48.0 / nn * p.powi(4) }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Inconclusive,
    Violation,
}

/// `lhs ≤ rhs(‖E‖)` with both sides bracketed. Sampling only ever certifies
/// violations; a pass needs the coefficient-sum bound on the left.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InequalityCheck {
    pub name: String,
    pub lhs_lower: f64,
    pub lhs_upper: f64,
    /// Right side at the upper bracket of its inputs.
    pub rhs: f64,
    /// Right side at the lower bracket of its inputs.
    pub rhs_lower: f64,
    pub verdict: Verdict,
}

impl InequalityCheck {
    pub fn new(name: impl Into<String>, lhs: SupBounds, rhs_lower: f64, rhs: f64) -> Self {
        let verdict = if lhs.lower > rhs {
            Verdict::Violation
        } else if lhs.upper <= rhs_lower {
            Verdict::Pass
        } else {
            Verdict::Inconclusive
        };
        InequalityCheck { name: name.into(), lhs_lower: lhs.lower, lhs_upper: lhs.upper, rhs, rhs_lower, verdict }
    }

    pub fn violated(&self) -> bool {
        self.verdict == Verdict::Violation
    }
}

/// `J^D`: the part of total degree at most `D`.
pub fn truncate_degree<K: Block>(p: &Polynomial<K>, d: u32) -> Polynomial<K> {
    p.truncate(d)
}

/// `S` is homogeneous of total degree `k`; `Some(k)`, or `None` for `S = 0`.
pub(crate) fn homogeneous_degree(s: &BiPolynomial) -> Result<Option<u32>, EstimatesError> {
    match (s.order(), s.max_degree()) {
        (None, _) => Ok(None),
        (Some(a), Some(b)) if a == b => Ok(Some(a)),
        _ => Err(EstimatesError::NotHomogeneous),
    }
}
