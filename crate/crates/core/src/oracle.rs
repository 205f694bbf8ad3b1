//! Global reading of a choreography, used as a reference in tests.
//!
//! Every located value carries its payload, `comm` rebinds the payload to the
//! receiver, `broadcast` returns it and enclaves run inline. No transport is
//! involved; payloads still pass through the wire encoding so that
//! non-portable values fail here as they would in a projected run.

use std::collections::BTreeMap;

use crate::choreography::{
    check_comm, check_declared, check_enclave, check_member, check_owner, ChoreoOp, Choreography,
};
use crate::error::Result;
use crate::located::{Located, LocalView, MultiplyLocated, Unwrapper};
use crate::location::{Location, LocationSet};
use crate::projector::Placement;
use crate::wire::{self, Portable};

/// Placement for global runs: every input is materialized.
#[derive(Debug, Clone, Copy, Default)]
pub struct Global;

impl Placement for Global {
    fn place<V>(&self, owner: Location, value: impl FnOnce() -> V) -> Located<V> {
        Located::local(owner, value())
    }
}

pub struct OracleOp<'a> {
    active: &'a LocationSet,
}

fn copy_through_wire<V: Portable>(value: &V) -> Result<V> {
    wire::decode(&wire::encode(value)?)
}

impl ChoreoOp for OracleOp<'_> {
    fn active_set(&self) -> &LocationSet {
        self.active
    }

    fn locally<V, F>(&self, at: Location, computation: F) -> Result<Located<V>>
    where
        F: FnOnce(Unwrapper) -> Result<V>,
    {
        check_member(self.active, at)?;
        Ok(Located::local(at, computation(Unwrapper::new(at))?))
    }

    fn comm<V: Portable>(
        &self,
        from: Location,
        to: Location,
        value: &Located<V>,
    ) -> Result<Located<V>> {
        check_comm(self.active, from, to, value)?;
        let payload = Unwrapper::new(from).unwrap(value)?;
        Ok(Located::local(to, copy_through_wire(payload)?))
    }

    fn broadcast<V: Portable>(&self, from: Location, value: &Located<V>) -> Result<V> {
        check_member(self.active, from)?;
        check_owner(from, value)?;
        copy_through_wire(Unwrapper::new(from).unwrap(value)?)
    }

    fn enclave<R, C: Choreography<R>>(
        &self,
        subset: &LocationSet,
        sub: C,
    ) -> Result<MultiplyLocated<R>> {
        check_enclave(self.active, subset, &sub.location_set())?;
        let result = sub.run(&OracleOp { active: subset })?;
        Ok(MultiplyLocated::present(subset.clone(), result))
    }

    fn call<R, C: Choreography<R>>(&self, sub: C) -> Result<R> {
        check_declared(self.active, &sub.location_set())?;
        sub.run(self)
    }
}

/// Runs `choreography` under its global reading and returns the global result.
pub fn run_global<R, C: Choreography<R>>(choreography: C) -> Result<R> {
    let locations = choreography.location_set();
    choreography.run(&OracleOp {
        active: &locations,
    })
}

/// Runs `choreography` globally and returns each participant's view of the
/// result.
pub fn oracle_run<R: LocalView, C: Choreography<R>>(
    choreography: C,
) -> Result<BTreeMap<Location, R>> {
    let locations = choreography.location_set();
    let global = run_global(choreography)?;
    Ok(locations
        .iter()
        .map(|l| (*l, global.view_at(*l)))
        .collect())
}
