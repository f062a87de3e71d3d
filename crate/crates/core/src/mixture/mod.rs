//! Two-star mixtures: offsets, the parametrized fiber families and the
//! decision procedure.

use thiserror::Error;

use crate::metric::MetricError;
use crate::oracle::OracleError;
use crate::tree::TreeError;

pub mod cases;
pub mod decide;
pub mod offsets;

pub use cases::{CaseFamily, CaseId, Decomposition};
pub use decide::{
    decide_two_star_mixture, enumerate_fiber_cases, sample_decomposition, verify_decomposition, Basis,
    DecideOptions, MixtureDecision, Provenance, Verdict,
};
pub use offsets::{offsets_from_stars, quartet_is_12_34, Offsets};

#[derive(Error, Debug, Clone, PartialEq, Eq)]
pub enum MixtureError {
    #[error("the input is not a mixture of two stars")]
    NotInImage,
    #[error("the input is a star metric; its fiber has no finite parametrization here")]
    StarInput,
    #[error("no parametrized families exist for double stars with both sides of size >= 3")]
    NoParametrization,
    #[error("unknown case {0:?}")]
    UnknownCase(String),
    #[error("case {case} does not apply: {reason}")]
    CaseNotApplicable { case: CaseId, reason: String },
    #[error("(u, w) = ({u}, {w}) is outside the domain of case {case}: {violated} fails")]
    OutOfDomain {
        case: CaseId,
        u: String,
        w: String,
        violated: String,
    },
    #[error("parameter domain is unbounded")]
    UnboundedDomain,
    #[error("internal consistency failure: {0}")]
    PostconditionViolation(String),
    #[error("expected {expected} taxa, got {got}")]
    SizeMismatch { expected: usize, got: usize },
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error(transparent)]
    Tree(#[from] TreeError),
}
