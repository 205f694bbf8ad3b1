use std::time::Duration;

use thiserror::Error;

use crate::location::{Location, LocationSet};

pub type Result<T, E = ChoreoError> = std::result::Result<T, E>;

/// Stable identity of a [`ChoreoError`], independent of its message.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ErrorKind {
    ScopeViolation,
    LocationSetViolation,
    SelfCommunication,
    EnclaveScope,
    DeclarationMismatch,
    Configuration,
    Communication,
    WireFormat,
    Invariant,
    Misuse,
    Protocol,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ChoreoError {
    #[error("scope violation: an unwrapper for `{scope}` cannot open a value located at `{owner}`")]
    ScopeViolation { scope: Location, owner: Location },

    #[error("location `{location}` is not a member of the active location set {active}")]
    LocationSetViolation {
        location: Location,
        active: LocationSet,
    },

    #[error("`{0}` cannot communicate with itself")]
    SelfCommunication(Location),

    #[error("enclave {subset} is not a subset of the active location set {active}")]
    EnclaveScope {
        subset: LocationSet,
        active: LocationSet,
    },

    #[error("choreography declares location set {declared} but is run over {expected}")]
    DeclarationMismatch {
        expected: LocationSet,
        declared: LocationSet,
    },

    #[error("configuration error: {0}")]
    Configuration(String),

    #[error("communication with `{peer}` failed: {detail}")]
    Communication { peer: String, detail: String },

    #[error("`{receiver}` timed out after {after:?} waiting for a message from `{sender}`")]
    ReceiveTimeout {
        receiver: Location,
        sender: Location,
        after: Duration,
    },

    #[error("wire format error: {0}")]
    WireFormat(String),

    #[error("impossible state: {0}")]
    Invariant(String),

    #[error("misuse: {0}")]
    Misuse(String),

    #[error("protocol error: {0}")]
    Protocol(String),
}

impl ChoreoError {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Self::ScopeViolation { .. } => ErrorKind::ScopeViolation,
            Self::LocationSetViolation { .. } => ErrorKind::LocationSetViolation,
            Self::SelfCommunication(_) => ErrorKind::SelfCommunication,
            Self::EnclaveScope { .. } => ErrorKind::EnclaveScope,
            Self::DeclarationMismatch { .. } => ErrorKind::DeclarationMismatch,
            Self::Configuration(_) => ErrorKind::Configuration,
            Self::Communication { .. } | Self::ReceiveTimeout { .. } => ErrorKind::Communication,
            Self::WireFormat(_) => ErrorKind::WireFormat,
            Self::Invariant(_) => ErrorKind::Invariant,
            Self::Misuse(_) => ErrorKind::Misuse,
            Self::Protocol(_) => ErrorKind::Protocol,
        }
    }

    pub(crate) fn communication(peer: impl ToString, detail: impl ToString) -> Self {
        Self::Communication {
            peer: peer.to_string(),
            detail: detail.to_string(),
        }
    }
}
