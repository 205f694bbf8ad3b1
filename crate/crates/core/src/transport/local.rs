//! In-process transport: one unbounded channel per ordered pair of locations.

use std::collections::BTreeMap;
use std::time::{Duration, Instant};

use crossbeam_channel::{unbounded, Receiver, RecvTimeoutError, Sender};

use super::{Transport, DEFAULT_RECEIVE_TIMEOUT};
use crate::error::{ChoreoError, Result};
use crate::location::{Location, LocationSet};

/// An endpoint of the in-process fabric, meant to be driven from one thread.
#[derive(Debug)]
pub struct LocalTransport {
    location: Location,
    outboxes: BTreeMap<Location, Sender<Vec<u8>>>,
    inboxes: BTreeMap<Location, Receiver<Vec<u8>>>,
    receive_timeout: Duration,
    deadline: Option<Instant>,
}

/// Builds a fully connected in-process fabric, one endpoint per location.
pub fn in_process_registry(locations: &LocationSet) -> BTreeMap<Location, LocalTransport> {
    let mut endpoints: BTreeMap<Location, LocalTransport> = locations
        .iter()
        .map(|l| {
            (
                *l,
                LocalTransport {
                    location: *l,
                    outboxes: BTreeMap::new(),
                    inboxes: BTreeMap::new(),
                    receive_timeout: DEFAULT_RECEIVE_TIMEOUT,
                    deadline: None,
                },
            )
        })
        .collect();
    for sender in locations {
        for receiver in locations.without(sender) {
            let (tx, rx) = unbounded();
            endpoints.get_mut(sender).unwrap().outboxes.insert(*receiver, tx);
            endpoints.get_mut(receiver).unwrap().inboxes.insert(*sender, rx);
        }
    }
    endpoints
}

impl LocalTransport {
    pub fn with_receive_timeout(mut self, timeout: Duration) -> Self {
        self.receive_timeout = timeout;
        self
    }

    /// Receives never block past `deadline`, whatever the per-receive timeout.
    pub fn with_deadline(mut self, deadline: Instant) -> Self {
        self.deadline = Some(deadline);
        self
    }

    fn wait_bound(&self) -> Duration {
        match self.deadline {
            Some(deadline) => self
                .receive_timeout
                .min(deadline.saturating_duration_since(Instant::now())),
            None => self.receive_timeout,
        }
    }
}

impl Transport for LocalTransport {
    fn location(&self) -> Location {
        self.location
    }

    fn has_peer(&self, peer: Location) -> bool {
        self.outboxes.contains_key(&peer)
    }

    fn send(&self, to: Location, payload: &[u8]) -> Result<()> {
        let outbox = self.outboxes.get(&to).ok_or_else(|| {
            ChoreoError::Configuration(format!("`{}` has no peer named `{to}`", self.location))
        })?;
        outbox
            .send(payload.to_vec())
            .map_err(|_| ChoreoError::communication(to, "peer endpoint has shut down"))
    }

    fn receive(&self, from: Location) -> Result<Vec<u8>> {
        let inbox = self.inboxes.get(&from).ok_or_else(|| {
            ChoreoError::Configuration(format!("`{}` has no peer named `{from}`", self.location))
        })?;
        let bound = self.wait_bound();
        inbox.recv_timeout(bound).map_err(|e| match e {
            RecvTimeoutError::Timeout => ChoreoError::ReceiveTimeout {
                receiver: self.location,
                sender: from,
                after: bound,
            },
            RecvTimeoutError::Disconnected => ChoreoError::communication(
                from,
                format!("`{from}` shut down before sending to `{}`", self.location),
            ),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::ErrorKind;

    #[test]
    fn two_party_round_trip() {
        let set = LocationSet::named(&["alice", "bob"]);
        let eps = in_process_registry(&set);
        assert_eq!(eps.len(), 2);
        let (alice, bob) = (Location::named("alice"), Location::named("bob"));
        eps[&alice].send(bob, b"x").unwrap();
        assert_eq!(eps[&bob].receive(alice).unwrap(), b"x");
    }

    #[test]
    fn full_mesh_every_pair_round_trips() {
        let set = LocationSet::named(&["a", "b", "c"]);
        let eps = in_process_registry(&set);
        for s in &set {
            for r in set.without(s) {
                let msg = format!("{s}->{r}");
                eps[s].send(*r, msg.as_bytes()).unwrap();
                assert_eq!(eps[r].receive(*s).unwrap(), msg.as_bytes());
            }
        }
    }

    #[test]
    fn fifo_per_pair() {
        let set = LocationSet::named(&["a", "b"]);
        let eps = in_process_registry(&set);
        let (a, b) = (Location::named("a"), Location::named("b"));
        eps[&a].send(b, b"1").unwrap();
        eps[&a].send(b, b"2").unwrap();
        assert_eq!(eps[&b].receive(a).unwrap(), b"1");
        assert_eq!(eps[&b].receive(a).unwrap(), b"2");
    }

    #[test]
    fn senders_do_not_block_each_other() {
        let set = LocationSet::named(&["a", "b", "c"]);
        let eps = in_process_registry(&set);
        let (a, b, c) = (Location::named("a"), Location::named("b"), Location::named("c"));
        eps[&c].send(b, b"from c").unwrap();
        eps[&a].send(b, b"from a").unwrap();
        assert_eq!(eps[&b].receive(a).unwrap(), b"from a");
        assert_eq!(eps[&b].receive(c).unwrap(), b"from c");
    }

    #[test]
    fn singleton_has_no_peers() {
        let set = LocationSet::named(&["a"]);
        let eps = in_process_registry(&set);
        let a = Location::named("a");
        let err = eps[&a].send(Location::named("mallory"), b"x").unwrap_err();
        assert_eq!(err.kind(), ErrorKind::Configuration);
    }

    #[test]
    fn receive_times_out() {
        let set = LocationSet::named(&["a", "b"]);
        let mut eps = in_process_registry(&set);
        let (a, b) = (Location::named("a"), Location::named("b"));
        let bob = eps
            .remove(&b)
            .unwrap()
            .with_receive_timeout(Duration::from_millis(20));
        let started = Instant::now();
        let err = bob.receive(a).unwrap_err();
        assert!(started.elapsed() >= Duration::from_millis(20));
        assert!(matches!(err, ChoreoError::ReceiveTimeout { receiver, sender, .. } if receiver == b && sender == a));
        drop(eps);
    }

    #[test]
    fn dropped_peer_is_reported_after_draining() {
        let set = LocationSet::named(&["a", "b"]);
        let mut eps = in_process_registry(&set);
        let (a, b) = (Location::named("a"), Location::named("b"));
        let alice = eps.remove(&a).unwrap();
        alice.send(b, b"last").unwrap();
        drop(alice);
        assert_eq!(eps[&b].receive(a).unwrap(), b"last");
        assert_eq!(eps[&b].receive(a).unwrap_err().kind(), ErrorKind::Communication);
    }
}
