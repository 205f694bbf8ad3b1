//! A recording decorator over any transport.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::{Arc, Mutex};
use std::time::Instant;

use serde::{Deserialize, Serialize, Serializer};

use super::Transport;
use crate::error::Result;
use crate::location::Location;

/// An ordered pair of locations, displayed as `sender->receiver`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PairKey {
    pub sender: Location,
    pub receiver: Location,
}

impl fmt::Display for PairKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}->{}", self.sender, self.receiver)
    }
}

impl Serialize for PairKey {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceEntry {
    pub sender: Location,
    pub receiver: Location,
    #[serde(with = "utf8_payload")]
    pub payload: Vec<u8>,
    /// Nanoseconds since the recorder was created.
    pub at_ns: u64,
}

impl TraceEntry {
    pub fn pair(&self) -> PairKey {
        PairKey {
            sender: self.sender,
            receiver: self.receiver,
        }
    }

    pub fn payload_text(&self) -> String {
        String::from_utf8_lossy(&self.payload).into_owned()
    }
}

mod utf8_payload {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(bytes: &[u8], s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&String::from_utf8_lossy(bytes))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<u8>, D::Error> {
        String::deserialize(d).map(String::into_bytes)
    }
}

/// Append-only log of sends and receives.
///
/// Sends are recorded before they are handed to the inner transport, so a
/// send that causally follows another one is always logged after it.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub sends: Vec<TraceEntry>,
    pub receives: Vec<TraceEntry>,
}

impl TraceRecord {
    pub fn is_empty(&self) -> bool {
        self.sends.is_empty() && self.receives.is_empty()
    }

    /// Number of envelopes sent from `sender` to `receiver`.
    pub fn count(&self, sender: Location, receiver: Location) -> usize {
        self.sends
            .iter()
            .filter(|e| e.sender == sender && e.receiver == receiver)
            .count()
    }

    /// Envelopes sent by `sender` to anyone.
    pub fn count_from(&self, sender: Location) -> usize {
        self.sends.iter().filter(|e| e.sender == sender).count()
    }

    /// Envelopes sent or addressed to `location`.
    pub fn count_touching(&self, location: Location) -> usize {
        self.sends
            .iter()
            .filter(|e| e.sender == location || e.receiver == location)
            .count()
    }

    /// Payloads sent from `sender` to `receiver`, in send order.
    pub fn pair_sequence(&self, sender: Location, receiver: Location) -> Vec<&[u8]> {
        self.sends
            .iter()
            .filter(|e| e.sender == sender && e.receiver == receiver)
            .map(|e| e.payload.as_slice())
            .collect()
    }

    /// Per-pair payload sequences of the sends, without timestamps.
    pub fn ledger(&self) -> BTreeMap<PairKey, Vec<String>> {
        Self::by_pair(&self.sends)
    }

    pub fn received_ledger(&self) -> BTreeMap<PairKey, Vec<String>> {
        Self::by_pair(&self.receives)
    }

    fn by_pair(entries: &[TraceEntry]) -> BTreeMap<PairKey, Vec<String>> {
        let mut ledger: BTreeMap<PairKey, Vec<String>> = BTreeMap::new();
        for entry in entries {
            ledger.entry(entry.pair()).or_default().push(entry.payload_text());
        }
        ledger
    }

    /// Every send was received, in per-pair send order.
    pub fn is_dual(&self) -> bool {
        self.ledger() == self.received_ledger()
    }

    /// Sends logged strictly after the first send matching `marker`; empty if
    /// no send matches.
    pub fn sends_after(&self, marker: impl Fn(&TraceEntry) -> bool) -> &[TraceEntry] {
        match self.sends.iter().position(marker) {
            Some(i) => &self.sends[i + 1..],
            None => &[],
        }
    }
}

/// Shared handle to a [`TraceRecord`] being filled by decorated endpoints.
#[derive(Debug, Clone)]
pub struct TraceRecorder {
    started: Instant,
    record: Arc<Mutex<TraceRecord>>,
}

impl Default for TraceRecorder {
    fn default() -> Self {
        Self::new()
    }
}

impl TraceRecorder {
    pub fn new() -> Self {
        Self {
            started: Instant::now(),
            record: Arc::default(),
        }
    }

    fn entry(&self, sender: Location, receiver: Location, payload: &[u8]) -> TraceEntry {
        TraceEntry {
            sender,
            receiver,
            payload: payload.to_vec(),
            at_ns: self.started.elapsed().as_nanos() as u64,
        }
    }

    fn with<R>(&self, f: impl FnOnce(&mut TraceRecord) -> R) -> R {
        f(&mut self.record.lock().unwrap_or_else(|e| e.into_inner()))
    }

    pub fn snapshot(&self) -> TraceRecord {
        self.with(|r| r.clone())
    }
}

/// Forwards to `inner` and logs every send and successful receive.
#[derive(Debug)]
pub struct CountingTransport<T> {
    inner: T,
    recorder: TraceRecorder,
}

impl<T: Transport> CountingTransport<T> {
    pub fn new(inner: T, recorder: TraceRecorder) -> Self {
        Self { inner, recorder }
    }

    /// Wraps `inner` with a fresh recorder.
    pub fn wrap(inner: T) -> (Self, TraceRecorder) {
        let recorder = TraceRecorder::new();
        (Self::new(inner, recorder.clone()), recorder)
    }

    pub fn recorder(&self) -> &TraceRecorder {
        &self.recorder
    }

    pub fn inner(&self) -> &T {
        &self.inner
    }
}

impl<T: Transport> Transport for CountingTransport<T> {
    fn location(&self) -> Location {
        self.inner.location()
    }

    fn has_peer(&self, peer: Location) -> bool {
        self.inner.has_peer(peer)
    }

    fn send(&self, to: Location, payload: &[u8]) -> Result<()> {
        if self.inner.has_peer(to) {
            let entry = self.recorder.entry(self.inner.location(), to, payload);
            self.recorder.with(|r| r.sends.push(entry));
        }
        self.inner.send(to, payload)
    }

    fn receive(&self, from: Location) -> Result<Vec<u8>> {
        let payload = self.inner.receive(from)?;
        let entry = self.recorder.entry(from, self.inner.location(), &payload);
        self.recorder.with(|r| r.receives.push(entry));
        Ok(payload)
    }
}
