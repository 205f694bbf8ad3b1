//! Worked choreographies built on `choreo-core`.
//!
//! Each protocol is a [`Choreography`](choreo_core::Choreography) whose
//! located inputs are fields, plus a `place` helper that builds it for any
//! [`Placement`](choreo_core::Placement): a projector when running one
//! location, or [`Global`](choreo_core::Global) for the reference reading.

pub mod bookseller;
pub mod catalog;
pub mod kvs;
pub mod password;
pub mod tictactoe;
pub mod two_buyer;

pub use catalog::{Catalog, Purchase, PurchaseError, Quote};
