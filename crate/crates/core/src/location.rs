//! Locations and location sets.
//!
//! A [`Location`] is an interned name: each distinct name is allocated once
//! for the lifetime of the process, which makes locations `Copy` and reduces
//! equality to a pointer comparison. The interner only grows with the number
//! of distinct participant names, which is small in practice.

use std::collections::HashSet;
use std::fmt;
use std::hash::{Hash, Hasher};
use std::str::FromStr;
use std::sync::{Mutex, OnceLock};

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{ChoreoError, Result};

fn interner() -> &'static Mutex<HashSet<&'static str>> {
    static NAMES: OnceLock<Mutex<HashSet<&'static str>>> = OnceLock::new();
    NAMES.get_or_init(Default::default)
}

fn intern(name: &str) -> &'static str {
    let mut names = interner().lock().unwrap_or_else(|e| e.into_inner());
    if let Some(existing) = names.get(name) {
        return existing;
    }
    let leaked: &'static str = Box::leak(name.to_owned().into_boxed_str());
    names.insert(leaked);
    leaked
}

/// A named participant of a choreography.
#[derive(Clone, Copy)]
pub struct Location(&'static str);

impl Location {
    pub fn new(name: &str) -> Result<Self> {
        if name.is_empty() {
            return Err(ChoreoError::Configuration(
                "location names must be non-empty".into(),
            ));
        }
        Ok(Self(intern(name)))
    }

    /// Like [`Location::new`] for names known at compile time.
    ///
    /// Panics on an empty name.
    pub fn named(name: &'static str) -> Self {
        Self::new(name).expect("location names must be non-empty")
    }

    pub fn name(&self) -> &'static str {
        self.0
    }
}

impl PartialEq for Location {
    #[inline]
    fn eq(&self, other: &Self) -> bool {
        // Interned: same name <=> same allocation.
        std::ptr::eq(self.0, other.0)
    }
}

impl Eq for Location {}

impl Hash for Location {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.0.hash(state)
    }
}

impl PartialOrd for Location {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Location {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.0.cmp(other.0)
    }
}

impl fmt::Debug for Location {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Location({})", self.0)
    }
}

impl fmt::Display for Location {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.0)
    }
}

impl FromStr for Location {
    type Err = ChoreoError;

    fn from_str(s: &str) -> Result<Self> {
        Self::new(s)
    }
}

impl Serialize for Location {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(self.0)
    }
}

impl<'de> Deserialize<'de> for Location {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let name = String::deserialize(deserializer)?;
        Location::new(&name).map_err(serde::de::Error::custom)
    }
}

/// An insertion-ordered set of distinct locations.
#[derive(Clone, Default, PartialEq, Eq, Hash, Serialize)]
pub struct LocationSet(Vec<Location>);

impl LocationSet {
    /// Builds a set, rejecting duplicate members.
    pub fn new<I: IntoIterator<Item = Location>>(members: I) -> Result<Self> {
        let mut set = Vec::new();
        for location in members {
            if set.contains(&location) {
                return Err(ChoreoError::Configuration(format!(
                    "duplicate location `{location}` in location set"
                )));
            }
            set.push(location);
        }
        Ok(Self(set))
    }

    /// Builds a set from compile-time names. Panics on duplicates or empty names.
    pub fn named(names: &[&'static str]) -> Self {
        Self::new(names.iter().map(|n| Location::named(n))).expect("invalid location set")
    }

    #[inline]
    pub fn contains(&self, location: &Location) -> bool {
        self.0.iter().any(|l| l == location)
    }

    pub fn is_subset(&self, other: &LocationSet) -> bool {
        self.0.iter().all(|l| other.contains(l))
    }

    /// Set equality, ignoring insertion order.
    pub fn same_members(&self, other: &LocationSet) -> bool {
        self.len() == other.len() && self.is_subset(other)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Location> + '_ {
        self.0.iter()
    }

    pub fn as_slice(&self) -> &[Location] {
        &self.0
    }

    /// Members other than `location`, in set order.
    pub fn without(&self, location: &Location) -> impl Iterator<Item = &Location> + '_ {
        let location = *location;
        self.0.iter().filter(move |l| **l != location)
    }
}

impl<'a> IntoIterator for &'a LocationSet {
    type Item = &'a Location;
    type IntoIter = std::slice::Iter<'a, Location>;

    fn into_iter(self) -> Self::IntoIter {
        self.0.iter()
    }
}

impl fmt::Debug for LocationSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl fmt::Display for LocationSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, l) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            f.write_str(l.name())?;
        }
        f.write_str("}")
    }
}

impl<'de> Deserialize<'de> for LocationSet {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let members = Vec::<Location>::deserialize(deserializer)?;
        LocationSet::new(members).map_err(serde::de::Error::custom)
    }
}
