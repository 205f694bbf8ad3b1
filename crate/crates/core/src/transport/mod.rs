//! Message transports.
//!
//! A transport connects one location to its peers with per-ordered-pair FIFO
//! delivery: `receive(s)` yields envelopes sent by `s`, in send order, and
//! envelopes from different senders never block one another.

mod config;
mod counting;
mod http;
mod local;

use std::sync::Arc;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::location::Location;

pub use config::{RetryPolicy, TransportConfig};
pub use counting::{CountingTransport, PairKey, TraceEntry, TraceRecord, TraceRecorder};
pub use http::{http_loopback_mesh, HttpListener, HttpTransport, MESSAGE_PATH};
pub use local::{in_process_registry, LocalTransport};

/// Default bound on a blocking receive.
pub const DEFAULT_RECEIVE_TIMEOUT: Duration = Duration::from_secs(30);

/// One message in flight between two locations.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MessageEnvelope {
    pub sender: Location,
    pub receiver: Location,
    pub payload: Vec<u8>,
}

pub trait Transport: Send + Sync {
    /// The location this endpoint belongs to.
    fn location(&self) -> Location;

    fn has_peer(&self, peer: Location) -> bool;

    fn send(&self, to: Location, payload: &[u8]) -> Result<()>;

    /// Blocks until a message from `from` arrives.
    fn receive(&self, from: Location) -> Result<Vec<u8>>;
}

macro_rules! forward_transport {
    ($($ptr:ty),*) => {
        $(impl<T: Transport + ?Sized> Transport for $ptr {
            fn location(&self) -> Location {
                (**self).location()
            }

            fn has_peer(&self, peer: Location) -> bool {
                (**self).has_peer(peer)
            }

            fn send(&self, to: Location, payload: &[u8]) -> Result<()> {
                (**self).send(to, payload)
            }

            fn receive(&self, from: Location) -> Result<Vec<u8>> {
                (**self).receive(from)
            }
        })*
    };
}

forward_transport!(&T, Box<T>, Arc<T>);
