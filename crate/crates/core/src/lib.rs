//! Choreographic programming as a library.
//!
//! A choreography is one program describing every participant. It is written
//! against the [`ChoreoOp`] operators (`locally`, `comm`, `broadcast`,
//! `enclave`, `call`) and never talks to the network directly. Endpoint
//! projection happens at run time: a [`Projector`] for location `l` injects
//! operators specialized to `l`, so the same body becomes `l`'s node-local
//! program. Computations at other locations are skipped, a `comm` becomes a
//! send, a receive or nothing, and a broadcast fans out only within the
//! currently active location set.
//!
//! ```
//! use choreo_core::{ChoreoOp, Choreography, Located, Location, LocationSet, Result};
//!
//! struct Greeting {
//!     name: Located<String>,
//! }
//!
//! impl Choreography<Located<String>> for Greeting {
//!     fn location_set(&self) -> LocationSet {
//!         LocationSet::named(&["alice", "bob"])
//!     }
//!
//!     fn run<O: ChoreoOp>(self, op: &O) -> Result<Located<String>> {
//!         let (alice, bob) = (Location::named("alice"), Location::named("bob"));
//!         let at_bob = op.comm(alice, bob, &self.name)?;
//!         op.locally(bob, |un| Ok(format!("hello, {}", un.unwrap(&at_bob)?)))
//!     }
//! }
//!
//! let set = LocationSet::named(&["alice", "bob"]);
//! let report = choreo_core::harness::run_all(
//!     &set,
//!     |p| Greeting { name: choreo_core::Placement::place(p, Location::named("alice"), || "bob".to_string()) },
//!     Default::default(),
//! );
//! let bob = report.result(Location::named("bob")).unwrap();
//! assert!(bob.is_local());
//! ```

pub mod choreography;
pub mod error;
pub mod harness;
pub mod located;
pub mod location;
pub mod oracle;
pub mod projector;
pub mod transport;
pub mod wire;

pub use choreography::{ChoreoOp, Choreography};
pub use error::{ChoreoError, ErrorKind, Result};
pub use located::{LocalView, Located, MultiplyLocated, Unwrapper};
pub use location::{Location, LocationSet};
pub use oracle::{oracle_run, run_global, Global};
pub use projector::{EppOp, Placement, Projector};
pub use transport::{MessageEnvelope, Transport};
pub use wire::Portable;
