//! Crate-wide error type.
//!
//! Structural problems with an economy are not errors: they are data,
//! collected in a [`ValidationReport`](crate::economy::ValidationReport).
//! Errors are reserved for misuse of an operation (unknown ids, off-grid
//! bundles, violated preconditions) and for resource-cap refusals.

use thiserror::Error;

use crate::conditions::ConditionId;
use crate::economy::{Bundle, ChannelId, EntityId, StateId, ValidationReport};

pub type Result<T> = std::result::Result<T, Error>;

/// Coarse classification used for process exit codes and report framing.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ErrorKind {
    /// Malformed or unresolvable input.
    Input,
    /// Structurally valid input used outside an operation's domain.
    Domain,
    /// An analysis parameter that cannot work (for example, a vacuous radius).
    Config,
    /// A deliberate refusal to start an enumeration that exceeds the cap.
    Resource,
}

#[derive(Clone, Debug, Error, PartialEq)]
pub enum Error {
    #[error("unknown entity {0}")]
    UnknownEntity(EntityId),
    #[error("unknown state {0}")]
    UnknownState(StateId),
    #[error("unknown channel {0}")]
    UnknownChannel(ChannelId),
    #[error("unknown scenario {name:?}; valid names: {valid}")]
    UnknownScenario { name: String, valid: String },
    #[error("economy fails validation: {0}")]
    InvalidEconomy(ValidationReport),
    #[error("candidate allocation is not feasible: {0}")]
    Infeasible(String),
    #[error("{context}: expected dimension {expected}, found {found}")]
    Arity {
        context: String,
        expected: usize,
        found: usize,
    },
    #[error("bundle {bundle} is not on the grid of entity {entity}")]
    OffGrid { entity: EntityId, bundle: Bundle },
    #[error("welfare of {entity} not evaluable: {detail}")]
    EvalFailed { entity: EntityId, detail: String },
    #[error("neighborhood radius {radius} is below the grid step {step}; the scan would be vacuous")]
    RadiusTooSmall { radius: f64, step: f64 },
    #[error("free-disposal support requires nonnegative prices; coordinate {coord} is {value}")]
    NegativePrice { coord: usize, value: f64 },
    #[error("candidate product {product} exceeds the enumeration cap {cap}")]
    CapExceeded { product: u128, cap: u64 },
    #[error("perturbation out of range: {0}")]
    PerturbationDomain(String),
    #[error("perturbed candidate fails a structural clause: {0}")]
    PerturbedClause(String),
    #[error("candidate carries no personalized state-price block")]
    MissingLindahlBlock,
    #[error("personalized prices do not sum to the state price at coordinate {coord}: {sum} != {expected}")]
    LindahlSum { coord: usize, sum: f64, expected: f64 },
    #[error("classical restriction violated: {0}")]
    ClassicalDomain(String),
    #[error("condition {condition} passes; {context}")]
    ConditionPasses {
        condition: ConditionId,
        context: String,
    },
    #[error("entity {0} has no delegation record")]
    NotADelegate(EntityId),
    #[error("generator profile rejected: {0}")]
    Profile(String),
    #[error("{0}")]
    Unsupported(String),
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::UnknownEntity(_)
            | Error::UnknownState(_)
            | Error::UnknownChannel(_)
            | Error::UnknownScenario { .. }
            | Error::InvalidEconomy(_)
            | Error::Infeasible(_)
            | Error::Arity { .. }
            | Error::MissingLindahlBlock
            | Error::LindahlSum { .. }
            | Error::Profile(_) => ErrorKind::Input,
            Error::OffGrid { .. }
            | Error::EvalFailed { .. }
            | Error::ClassicalDomain(_)
            | Error::ConditionPasses { .. }
            | Error::NotADelegate(_)
            | Error::PerturbationDomain(_)
            | Error::PerturbedClause(_)
            | Error::Unsupported(_) => ErrorKind::Domain,
            Error::RadiusTooSmall { .. } | Error::NegativePrice { .. } => ErrorKind::Config,
            Error::CapExceeded { .. } => ErrorKind::Resource,
        }
    }
}
