//! Located values and the unwrapper that opens them.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::{ChoreoError, Result};
use crate::location::{Location, LocationSet};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
enum Content<V> {
    Local(V),
    Remote,
}

/// A value bound to one location.
///
/// While projecting for a target `t`, a value owned by `t` always carries its
/// payload and a value owned by any other location never does. Located values
/// are only created by the operators, by a [`Projector`](crate::Projector) or
/// by the global interpreter, which is how that invariant is upheld.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Located<V> {
    owner: Location,
    content: Content<V>,
}

impl<V> Located<V> {
    #[inline]
    pub(crate) fn local(owner: Location, value: V) -> Self {
        Self {
            owner,
            content: Content::Local(value),
        }
    }

    #[inline]
    pub(crate) fn remote(owner: Location) -> Self {
        Self {
            owner,
            content: Content::Remote,
        }
    }

    pub fn owner(&self) -> Location {
        self.owner
    }

    pub fn is_local(&self) -> bool {
        matches!(self.content, Content::Local(_))
    }

    pub fn is_remote(&self) -> bool {
        !self.is_local()
    }

    /// The payload, present only in the owner's copy.
    #[inline]
    pub fn as_local(&self) -> Option<&V> {
        match &self.content {
            Content::Local(v) => Some(v),
            Content::Remote => None,
        }
    }

    #[inline]
    pub fn into_local(self) -> Option<V> {
        match self.content {
            Content::Local(v) => Some(v),
            Content::Remote => None,
        }
    }
}

/// Opens located values owned by a single location.
#[derive(Debug, Clone, Copy)]
pub struct Unwrapper {
    scope: Location,
}

impl Unwrapper {
    #[inline]
    pub(crate) fn new(scope: Location) -> Self {
        Self { scope }
    }

    pub fn scope(&self) -> Location {
        self.scope
    }

    #[inline]
    pub fn unwrap<'v, V>(&self, value: &'v Located<V>) -> Result<&'v V> {
        self.check_owner(value.owner)?;
        value.as_local().ok_or_else(|| remote_at_scope(value.owner))
    }

    /// Consuming variant of [`Unwrapper::unwrap`].
    #[inline]
    pub fn take<V>(&self, value: Located<V>) -> Result<V> {
        self.check_owner(value.owner)?;
        let owner = value.owner;
        value.into_local().ok_or_else(|| remote_at_scope(owner))
    }

    #[inline]
    fn check_owner(&self, owner: Location) -> Result<()> {
        if owner == self.scope {
            Ok(())
        } else {
            Err(ChoreoError::ScopeViolation {
                scope: self.scope,
                owner,
            })
        }
    }
}

#[cold]
fn remote_at_scope(owner: Location) -> ChoreoError {
    ChoreoError::Invariant(format!(
        "value located at `{owner}` has no payload while projecting for `{owner}`"
    ))
}

/// The result of an enclave: present at every member of the enclave, absent
/// at every other location.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MultiplyLocated<R> {
    members: LocationSet,
    value: Option<R>,
}

impl<R> MultiplyLocated<R> {
    pub(crate) fn present(members: LocationSet, value: R) -> Self {
        Self {
            members,
            value: Some(value),
        }
    }

    pub(crate) fn absent(members: LocationSet) -> Self {
        Self {
            members,
            value: None,
        }
    }

    pub fn members(&self) -> &LocationSet {
        &self.members
    }

    pub fn is_present(&self) -> bool {
        self.value.is_some()
    }

    pub fn into_option(self) -> Option<R> {
        self.value
    }
}

impl<V> MultiplyLocated<Located<V>> {
    /// Collapses an enclave's located result into a value owned by `owner`,
    /// which must be an enclave member. Non-members get a remote placeholder.
    pub fn located_at(self, owner: Location) -> Result<Located<V>> {
        if !self.members.contains(&owner) {
            return Err(ChoreoError::LocationSetViolation {
                location: owner,
                active: self.members,
            });
        }
        match self.value {
            Some(inner) if inner.owner == owner => Ok(inner),
            Some(inner) => Err(ChoreoError::ScopeViolation {
                scope: owner,
                owner: inner.owner,
            }),
            None => Ok(Located::remote(owner)),
        }
    }
}

/// How a globally computed result looks from one location.
///
/// The global interpreter computes every located value with its payload;
/// `view_at` strips the payloads a given location would not hold, so the
/// result can be compared with that location's projected run.
pub trait LocalView {
    fn view_at(&self, at: Location) -> Self;
}

impl<V: Clone> LocalView for Located<V> {
    fn view_at(&self, at: Location) -> Self {
        if self.owner == at {
            self.clone()
        } else {
            Located::remote(self.owner)
        }
    }
}

impl<R: LocalView> LocalView for MultiplyLocated<R> {
    fn view_at(&self, at: Location) -> Self {
        let value = if self.members.contains(&at) {
            self.value.as_ref().map(|v| v.view_at(at))
        } else {
            None
        };
        Self {
            members: self.members.clone(),
            value,
        }
    }
}

impl<T: LocalView> LocalView for Option<T> {
    fn view_at(&self, at: Location) -> Self {
        self.as_ref().map(|v| v.view_at(at))
    }
}

impl<T: LocalView, E: Clone> LocalView for std::result::Result<T, E> {
    fn view_at(&self, at: Location) -> Self {
        match self {
            Ok(v) => Ok(v.view_at(at)),
            Err(e) => Err(e.clone()),
        }
    }
}

impl<T: LocalView> LocalView for Vec<T> {
    fn view_at(&self, at: Location) -> Self {
        self.iter().map(|v| v.view_at(at)).collect()
    }
}

impl<K: Ord + Clone, T: LocalView> LocalView for BTreeMap<K, T> {
    fn view_at(&self, at: Location) -> Self {
        self.iter().map(|(k, v)| (k.clone(), v.view_at(at))).collect()
    }
}

macro_rules! tuple_view {
    ($($name:ident : $idx:tt),+) => {
        impl<$($name: LocalView),+> LocalView for ($($name,)+) {
            fn view_at(&self, at: Location) -> Self {
                ($(self.$idx.view_at(at),)+)
            }
        }
    };
}

tuple_view!(A: 0);
tuple_view!(A: 0, B: 1);
tuple_view!(A: 0, B: 1, C: 2);
tuple_view!(A: 0, B: 1, C: 2, D: 3);

/// Implements [`LocalView`] as a clone for types that carry no located parts.
#[macro_export]
macro_rules! plain_local_view {
    ($($ty:ty),* $(,)?) => {
        $(impl $crate::LocalView for $ty {
            fn view_at(&self, _at: $crate::Location) -> Self {
                ::std::clone::Clone::clone(self)
            }
        })*
    };
}

plain_local_view!((), bool, u8, u16, u32, u64, usize, i8, i16, i32, i64, isize, char, String);

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::ErrorKind;

    fn buyer() -> Location {
        Location::named("buyer")
    }

    fn seller() -> Location {
        Location::named("seller")
    }

    #[test]
    fn unwrap_local_is_identity() {
        let un = Unwrapper::new(buyer());
        assert_eq!(un.unwrap(&Located::local(buyer(), 42)).unwrap(), &42);
        let un = Unwrapper::new(seller());
        assert_eq!(un.take(Located::local(seller(), "TAPL")).unwrap(), "TAPL");
    }

    #[test]
    fn unwrap_foreign_owner_is_scope_violation() {
        let un = Unwrapper::new(buyer());
        let err = un.unwrap(&Located::<i32>::remote(seller())).unwrap_err();
        assert_eq!(err.kind(), ErrorKind::ScopeViolation);
    }

    #[test]
    fn unwrap_remote_at_own_scope_is_invariant_error() {
        let un = Unwrapper::new(buyer());
        let err = un.unwrap(&Located::<i32>::remote(buyer())).unwrap_err();
        assert_eq!(err.kind(), ErrorKind::Invariant);
        assert!(err.to_string().contains("impossible"));
    }

    #[test]
    fn view_strips_foreign_payloads() {
        let v = (Located::local(buyer(), 1u32), Located::local(seller(), 2u32), 7u32);
        let at_buyer = v.view_at(buyer());
        assert!(at_buyer.0.is_local());
        assert!(at_buyer.1.is_remote());
        assert_eq!(at_buyer.2, 7);
    }

    #[test]
    fn multiply_located_collapses_to_owner() {
        let members = LocationSet::new([buyer(), seller()]).unwrap();
        let present = MultiplyLocated::present(members.clone(), Located::local(buyer(), 3));
        assert_eq!(present.located_at(buyer()).unwrap(), Located::local(buyer(), 3));

        let absent: MultiplyLocated<Located<i32>> = MultiplyLocated::absent(members.clone());
        assert!(absent.clone().located_at(buyer()).unwrap().is_remote());
        assert_eq!(
            absent.located_at(Location::named("carol")).unwrap_err().kind(),
            ErrorKind::LocationSetViolation
        );

        let wrong = MultiplyLocated::present(members, Located::local(seller(), 3));
        assert_eq!(wrong.located_at(buyer()).unwrap_err().kind(), ErrorKind::ScopeViolation);
    }
}
