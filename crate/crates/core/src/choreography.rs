//! The choreography and operator contracts.

use crate::error::{ChoreoError, Result};
use crate::located::{Located, MultiplyLocated, Unwrapper};
use crate::location::{Location, LocationSet};
use crate::wire::Portable;

/// A global program over a fixed set of locations.
///
/// The body receives the choreographic operators as a dependency and must
/// perform all communication through them. Located inputs are ordinary
/// fields of the implementing type.
pub trait Choreography<R = ()> {
    fn location_set(&self) -> LocationSet;

    fn run<O: ChoreoOp>(self, op: &O) -> Result<R>;
}

/// The operators a choreography is written against.
///
/// Endpoint projection supplies an implementation specialized to one target
/// location ([`EppOp`](crate::projector::EppOp)); the global interpreter
/// supplies one that evaluates everything in a single context
/// ([`OracleOp`](crate::oracle::OracleOp)).
pub trait ChoreoOp {
    /// The locations this (sub-)choreography runs at. Broadcasts reach
    /// exactly these locations.
    fn active_set(&self) -> &LocationSet;

    /// Runs `computation` at `at` and binds the result there.
    fn locally<V, F>(&self, at: Location, computation: F) -> Result<Located<V>>
    where
        F: FnOnce(Unwrapper) -> Result<V>;

    /// Moves a value owned by `from` to `to`.
    fn comm<V: Portable>(&self, from: Location, to: Location, value: &Located<V>)
        -> Result<Located<V>>;

    /// Shares a value owned by `from` with every active location and returns
    /// it unlocated, so that host-language control flow may depend on it.
    fn broadcast<V: Portable>(&self, from: Location, value: &Located<V>) -> Result<V>;

    /// Runs `sub` at the members of `subset` only.
    fn enclave<R, C: Choreography<R>>(
        &self,
        subset: &LocationSet,
        sub: C,
    ) -> Result<MultiplyLocated<R>>;

    /// Runs `sub`, which must be declared over the current active set.
    fn call<R, C: Choreography<R>>(&self, sub: C) -> Result<R>;
}

#[inline]
pub(crate) fn check_member(active: &LocationSet, location: Location) -> Result<()> {
    if active.contains(&location) {
        Ok(())
    } else {
        Err(not_a_member(active, location))
    }
}

#[cold]
fn not_a_member(active: &LocationSet, location: Location) -> ChoreoError {
    ChoreoError::LocationSetViolation {
        location,
        active: active.clone(),
    }
}

#[inline]
pub(crate) fn check_owner<V>(expected: Location, value: &Located<V>) -> Result<()> {
    if value.owner() == expected {
        Ok(())
    } else {
        Err(ChoreoError::ScopeViolation {
            scope: expected,
            owner: value.owner(),
        })
    }
}

pub(crate) fn check_comm<V>(
    active: &LocationSet,
    from: Location,
    to: Location,
    value: &Located<V>,
) -> Result<()> {
    check_member(active, from)?;
    check_member(active, to)?;
    if from == to {
        return Err(ChoreoError::SelfCommunication(from));
    }
    check_owner(from, value)
}

pub(crate) fn check_enclave(
    active: &LocationSet,
    subset: &LocationSet,
    declared: &LocationSet,
) -> Result<()> {
    if !subset.is_subset(active) {
        return Err(ChoreoError::EnclaveScope {
            subset: subset.clone(),
            active: active.clone(),
        });
    }
    check_declared(subset, declared)
}

pub(crate) fn check_declared(expected: &LocationSet, declared: &LocationSet) -> Result<()> {
    if declared.same_members(expected) {
        Ok(())
    } else {
        Err(ChoreoError::DeclarationMismatch {
            expected: expected.clone(),
            declared: declared.clone(),
        })
    }
}
