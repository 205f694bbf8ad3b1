//! Endpoint projection by injecting location-specialized operators.

use crate::choreography::{
    check_comm, check_declared, check_enclave, check_member, check_owner, ChoreoOp, Choreography,
};
use crate::error::{ChoreoError, Result};
use crate::located::{Located, MultiplyLocated, Unwrapper};
use crate::location::{Location, LocationSet};
use crate::transport::Transport;
use crate::wire::{self, Portable};

/// Binds a projection target, the full location set and a transport.
pub struct Projector<T> {
    target: Location,
    locations: LocationSet,
    transport: T,
}

impl<T: Transport> Projector<T> {
    pub fn new(target: Location, locations: LocationSet, transport: T) -> Result<Self> {
        if !locations.contains(&target) {
            return Err(ChoreoError::Configuration(format!(
                "projection target `{target}` is not in {locations}"
            )));
        }
        if transport.location() != target {
            return Err(ChoreoError::Configuration(format!(
                "transport belongs to `{}`, not to projection target `{target}`",
                transport.location()
            )));
        }
        if let Some(missing) = locations.without(&target).find(|l| !transport.has_peer(**l)) {
            return Err(ChoreoError::Configuration(format!(
                "transport for `{target}` has no route to `{missing}`"
            )));
        }
        Ok(Self {
            target,
            locations,
            transport,
        })
    }

    pub fn target(&self) -> Location {
        self.target
    }

    pub fn locations(&self) -> &LocationSet {
        &self.locations
    }

    pub fn transport(&self) -> &T {
        &self.transport
    }

    pub fn into_transport(self) -> T {
        self.transport
    }

    /// A located input owned by this projector's target.
    pub fn local<V>(&self, value: V) -> Located<V> {
        Located::local(self.target, value)
    }

    /// A placeholder for an input owned by another location.
    pub fn remote<V>(&self, at: Location) -> Result<Located<V>> {
        if at == self.target {
            return Err(ChoreoError::Misuse(format!(
                "`{at}` is the projection target; use `local` for its values"
            )));
        }
        check_member(&self.locations, at)?;
        Ok(Located::remote(at))
    }

    /// Opens a located output owned by this projector's target.
    pub fn unwrap<V>(&self, value: Located<V>) -> Result<V> {
        Unwrapper::new(self.target).take(value)
    }

    /// Projects `choreography` onto the target and runs it.
    pub fn epp_and_run<R, C: Choreography<R>>(&self, choreography: C) -> Result<R> {
        let declared = choreography.location_set();
        if !declared.is_subset(&self.locations) {
            return Err(ChoreoError::Configuration(format!(
                "choreography over {declared} does not fit projector locations {}",
                self.locations
            )));
        }
        if !declared.contains(&self.target) {
            return Err(ChoreoError::Misuse(format!(
                "`{}` does not participate in a choreography over {declared}",
                self.target
            )));
        }
        let op = EppOp {
            target: self.target,
            active: &declared,
            transport: &self.transport,
        };
        choreography.run(&op)
    }
}

/// Places located inputs: the value is materialized only where it lives.
pub trait Placement {
    fn place<V>(&self, owner: Location, value: impl FnOnce() -> V) -> Located<V>;
}

impl<T: Transport> Placement for Projector<T> {
    fn place<V>(&self, owner: Location, value: impl FnOnce() -> V) -> Located<V> {
        if owner == self.target {
            Located::local(owner, value())
        } else {
            Located::remote(owner)
        }
    }
}

/// The operators as seen from one projection target.
pub struct EppOp<'a, T: ?Sized> {
    target: Location,
    active: &'a LocationSet,
    transport: &'a T,
}

impl<T: Transport + ?Sized> EppOp<'_, T> {
    pub fn target(&self) -> Location {
        self.target
    }

    fn receive<V: Portable>(&self, from: Location) -> Result<V> {
        let bytes = self.transport.receive(from)?;
        wire::decode(&bytes)
    }
}

impl<T: Transport + ?Sized> ChoreoOp for EppOp<'_, T> {
    fn active_set(&self) -> &LocationSet {
        self.active
    }

    #[inline]
    fn locally<V, F>(&self, at: Location, computation: F) -> Result<Located<V>>
    where
        F: FnOnce(Unwrapper) -> Result<V>,
    {
        // A projection only runs while its target is active, so the target
        // needs no membership check.
        if at == self.target {
            return Ok(Located::local(at, computation(Unwrapper::new(at))?));
        }
        check_member(self.active, at)?;
        Ok(Located::remote(at))
    }

    fn comm<V: Portable>(
        &self,
        from: Location,
        to: Location,
        value: &Located<V>,
    ) -> Result<Located<V>> {
        check_comm(self.active, from, to, value)?;
        if self.target == from {
            let payload = wire::encode(Unwrapper::new(from).unwrap(value)?)?;
            self.transport.send(to, &payload)?;
            Ok(Located::remote(to))
        } else if self.target == to {
            Ok(Located::local(to, self.receive(from)?))
        } else {
            Ok(Located::remote(to))
        }
    }

    fn broadcast<V: Portable>(&self, from: Location, value: &Located<V>) -> Result<V> {
        check_member(self.active, from)?;
        check_owner(from, value)?;
        if self.target == from {
            let payload = wire::encode(Unwrapper::new(from).unwrap(value)?)?;
            for recipient in self.active.without(&from) {
                self.transport.send(*recipient, &payload)?;
            }
            // Decoding our own payload yields the value every recipient sees.
            wire::decode(&payload)
        } else {
            self.receive(from)
        }
    }

    fn enclave<R, C: Choreography<R>>(
        &self,
        subset: &LocationSet,
        sub: C,
    ) -> Result<MultiplyLocated<R>> {
        check_enclave(self.active, subset, &sub.location_set())?;
        if !subset.contains(&self.target) {
            return Ok(MultiplyLocated::absent(subset.clone()));
        }
        let inner = EppOp {
            target: self.target,
            active: subset,
            transport: self.transport,
        };
        let result = sub.run(&inner)?;
        Ok(MultiplyLocated::present(subset.clone(), result))
    }

    fn call<R, C: Choreography<R>>(&self, sub: C) -> Result<R> {
        check_declared(self.active, &sub.location_set())?;
        sub.run(self)
    }
}
