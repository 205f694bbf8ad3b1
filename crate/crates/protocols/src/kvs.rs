//! Primary/backup replicated key-value store.
//!
//! A client sends requests one at a time to the primary. Puts are forwarded
//! to the backup, applied there and acknowledged before the primary applies
//! them itself; gets are served from the primary's state alone. The request
//! kind is broadcast inside an enclave of primary and backup, so the client
//! only ever exchanges requests and responses with the primary.
//!
//! [`Kvs`] is the choreography. The [`handwritten`] module has the same
//! protocol as three node-local programs with explicit sends and receives;
//! both put identical envelopes on the wire.

use std::cell::RefCell;
use std::collections::BTreeMap;

use rand::distributions::Alphanumeric;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use choreo_core::{
    ChoreoError, ChoreoOp, Choreography, LocalView, Located, Location, LocationSet, Placement,
    Projector, Result, Transport,
};

pub fn client() -> Location {
    Location::named("client")
}

pub fn primary() -> Location {
    Location::named("primary")
}

pub fn backup() -> Location {
    Location::named("backup")
}

pub fn locations() -> LocationSet {
    LocationSet::named(&["client", "primary", "backup"])
}

pub type Store = BTreeMap<String, String>;

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum KvRequest {
    Get { key: String },
    Put { key: String, value: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum KvResponse {
    Value(Option<String>),
    Ack,
}

impl KvRequest {
    pub fn get(key: impl Into<String>) -> Self {
        KvRequest::Get { key: key.into() }
    }

    pub fn put(key: impl Into<String>, value: impl Into<String>) -> Self {
        KvRequest::Put {
            key: key.into(),
            value: value.into(),
        }
    }

    pub fn is_put(&self) -> bool {
        matches!(self, KvRequest::Put { .. })
    }
}

/// Applies `request` to `store` and returns its response.
pub fn apply(store: &mut Store, request: &KvRequest) -> KvResponse {
    match request {
        KvRequest::Get { key } => KvResponse::Value(store.get(key).cloned()),
        KvRequest::Put { key, value } => {
            store.insert(key.clone(), value.clone());
            KvResponse::Ack
        }
    }
}

/// Sequential in-memory replay: the expected responses and final store.
pub fn replay(requests: &[KvRequest]) -> (Vec<KvResponse>, Store) {
    let mut store = Store::new();
    let responses = requests.iter().map(|r| apply(&mut store, r)).collect();
    (responses, store)
}

pub const KEYSPACE: usize = 16;
pub const VALUE_LEN: usize = 8;

/// A reproducible random workload over [`KEYSPACE`] keys with
/// [`VALUE_LEN`]-character values.
pub fn workload(seed: u64, count: usize, get_ratio: f64) -> Vec<KvRequest> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let key = format!("key{:02}", rng.gen_range(0..KEYSPACE));
            if rng.gen_bool(get_ratio.clamp(0.0, 1.0)) {
                KvRequest::Get { key }
            } else {
                let value = (&mut rng)
                    .sample_iter(Alphanumeric)
                    .take(VALUE_LEN)
                    .map(char::from)
                    .collect();
                KvRequest::Put { key, value }
            }
        })
        .collect()
}

pub struct Kvs {
    pub requests: Located<Vec<KvRequest>>,
    /// Session length, known to every node.
    pub request_count: usize,
    pub primary_store: Located<Store>,
    pub backup_store: Located<Store>,
}

impl Kvs {
    /// Starts from empty stores.
    pub fn place(p: &impl Placement, requests: &[KvRequest]) -> Self {
        Self {
            requests: p.place(client(), || requests.to_vec()),
            request_count: requests.len(),
            primary_store: p.place(primary(), Store::new),
            backup_store: p.place(backup(), Store::new),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct KvsOutcome {
    pub responses: Located<Vec<KvResponse>>,
    pub primary_store: Located<Store>,
    pub backup_store: Located<Store>,
}

impl LocalView for KvsOutcome {
    fn view_at(&self, at: Location) -> Self {
        Self {
            responses: self.responses.view_at(at),
            primary_store: self.primary_store.view_at(at),
            backup_store: self.backup_store.view_at(at),
        }
    }
}

/// Replicates a put to the backup; gets leave the backup alone.
struct DoBackup<'a> {
    request: &'a Located<KvRequest>,
    backup_store: &'a Located<RefCell<Store>>,
}

impl Choreography<Located<Option<KvResponse>>> for DoBackup<'_> {
    fn location_set(&self) -> LocationSet {
        LocationSet::named(&["primary", "backup"])
    }

    fn run<O: ChoreoOp>(self, op: &O) -> Result<Located<Option<KvResponse>>> {
        let (primary, backup) = (primary(), backup());
        let is_put = op.locally(primary, |un| Ok(un.unwrap(self.request)?.is_put()))?;
        if op.broadcast(primary, &is_put)? {
            let request = op.comm(primary, backup, self.request)?;
            let ack = op.locally(backup, |un| {
                let mut store = un.unwrap(self.backup_store)?.borrow_mut();
                Ok(apply(&mut store, un.unwrap(&request)?))
            })?;
            let ack = op.comm(backup, primary, &ack)?;
            op.locally(primary, |un| Ok(Some(un.take(ack)?)))
        } else {
            op.locally(primary, |_| Ok(None))
        }
    }
}

impl Choreography<KvsOutcome> for Kvs {
    fn location_set(&self) -> LocationSet {
        locations()
    }

    fn run<O: ChoreoOp>(self, op: &O) -> Result<KvsOutcome> {
        let (client, primary, backup) = (client(), primary(), backup());
        let count = self.request_count;
        let requests = self.requests;
        op.locally(client, |un| {
            let len = un.unwrap(&requests)?.len();
            if len == count {
                Ok(())
            } else {
                Err(ChoreoError::Configuration(format!(
                    "session announced {count} requests, client holds {len}"
                )))
            }
        })?;
        let primary_store = op.locally(primary, |un| Ok(RefCell::new(un.take(self.primary_store)?)))?;
        let backup_store = op.locally(backup, |un| Ok(RefCell::new(un.take(self.backup_store)?)))?;
        let responses = op.locally(client, |_| Ok(RefCell::new(Vec::with_capacity(count))))?;

        for i in 0..count {
            let request = op.locally(client, |un| Ok(un.unwrap(&requests)?[i].clone()))?;
            let request = op.comm(client, primary, &request)?;
            let ack = op
                .enclave(
                    &LocationSet::named(&["primary", "backup"]),
                    DoBackup {
                        request: &request,
                        backup_store: &backup_store,
                    },
                )?
                .located_at(primary)?;
            let response = op.locally(primary, |un| {
                let request = un.unwrap(&request)?;
                match (request.is_put(), un.unwrap(&ack)?) {
                    (true, Some(KvResponse::Ack)) | (false, None) => {}
                    (_, other) => {
                        return Err(ChoreoError::Protocol(format!(
                            "backup answered {other:?} to {request:?}"
                        )))
                    }
                }
                Ok(apply(&mut un.unwrap(&primary_store)?.borrow_mut(), request))
            })?;
            let response = op.comm(primary, client, &response)?;
            op.locally(client, |un| {
                un.unwrap(&responses)?.borrow_mut().push(un.take(response)?);
                Ok(())
            })?;
        }

        Ok(KvsOutcome {
            responses: op.locally(client, |un| Ok(un.take(responses)?.into_inner()))?,
            primary_store: op.locally(primary, |un| Ok(un.take(primary_store)?.into_inner()))?,
            backup_store: op.locally(backup, |un| Ok(un.take(backup_store)?.into_inner()))?,
        })
    }
}

/// The same protocol written as three node-local programs.
pub mod handwritten {
    use choreo_core::{wire, ChoreoError, Result, Transport};

    use super::{apply, backup, client, primary, KvRequest, KvResponse, Store};

    pub fn client_node<T: Transport>(transport: &T, requests: &[KvRequest]) -> Result<Vec<KvResponse>> {
        let mut responses = Vec::with_capacity(requests.len());
        for request in requests {
            transport.send(primary(), &wire::encode(request)?)?;
            responses.push(wire::decode(&transport.receive(primary())?)?);
        }
        Ok(responses)
    }

    pub fn primary_node<T: Transport>(transport: &T, request_count: usize, mut store: Store) -> Result<Store> {
        for _ in 0..request_count {
            let request: KvRequest = wire::decode(&transport.receive(client())?)?;
            let is_put = request.is_put();
            transport.send(backup(), &wire::encode(&is_put)?)?;
            if is_put {
                transport.send(backup(), &wire::encode(&request)?)?;
                let ack: KvResponse = wire::decode(&transport.receive(backup())?)?;
                if ack != KvResponse::Ack {
                    return Err(ChoreoError::Protocol(format!(
                        "backup answered {ack:?} to {request:?}"
                    )));
                }
            }
            let response = apply(&mut store, &request);
            transport.send(client(), &wire::encode(&response)?)?;
        }
        Ok(store)
    }

    pub fn backup_node<T: Transport>(transport: &T, request_count: usize, mut store: Store) -> Result<Store> {
        for _ in 0..request_count {
            let is_put: bool = wire::decode(&transport.receive(primary())?)?;
            if is_put {
                let request: KvRequest = wire::decode(&transport.receive(primary())?)?;
                let ack = apply(&mut store, &request);
                transport.send(primary(), &wire::encode(&ack)?)?;
            }
        }
        Ok(store)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Implementation {
    Handwritten,
    Choreographic,
}

/// Responses and final stores of one run.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize)]
pub struct KvsRun {
    pub responses: Vec<KvResponse>,
    pub primary_store: Store,
    pub backup_store: Store,
}

enum Part {
    Responses(Vec<KvResponse>),
    Primary(Store),
    Backup(Store),
}

/// Runs `requests` from empty stores with one thread per node over the given
/// endpoints, which may be reused across runs.
pub fn run<T: Transport>(
    implementation: Implementation,
    endpoints: &BTreeMap<Location, T>,
    requests: &[KvRequest],
) -> Result<KvsRun> {
    let endpoint = |l: Location| {
        endpoints.get(&l).ok_or_else(|| {
            ChoreoError::Configuration(format!("no endpoint supplied for `{l}`"))
        })
    };
    let nodes = [
        (client(), endpoint(client())?),
        (primary(), endpoint(primary())?),
        (backup(), endpoint(backup())?),
    ];
    let parts: Vec<Result<Part>> = std::thread::scope(|scope| {
        let workers: Vec<_> = nodes
            .into_iter()
            .map(|(location, transport)| {
                scope.spawn(move || match implementation {
                    Implementation::Handwritten => run_handwritten_node(location, transport, requests),
                    Implementation::Choreographic => run_projected_node(location, transport, requests),
                })
            })
            .collect();
        workers
            .into_iter()
            .map(|w| {
                w.join()
                    .unwrap_or_else(|_| Err(ChoreoError::Invariant("node panicked".into())))
            })
            .collect()
    });
    let mut run = KvsRun::default();
    for part in parts {
        match part? {
            Part::Responses(r) => run.responses = r,
            Part::Primary(s) => run.primary_store = s,
            Part::Backup(s) => run.backup_store = s,
        }
    }
    Ok(run)
}

fn run_handwritten_node<T: Transport>(
    location: Location,
    transport: &T,
    requests: &[KvRequest],
) -> Result<Part> {
    let n = requests.len();
    if location == client() {
        handwritten::client_node(transport, requests).map(Part::Responses)
    } else if location == primary() {
        handwritten::primary_node(transport, n, Store::new()).map(Part::Primary)
    } else {
        handwritten::backup_node(transport, n, Store::new()).map(Part::Backup)
    }
}

fn run_projected_node<T: Transport>(
    location: Location,
    transport: &T,
    requests: &[KvRequest],
) -> Result<Part> {
    let projector = Projector::new(location, locations(), transport)?;
    let outcome = projector.epp_and_run(Kvs::place(&projector, requests))?;
    if location == client() {
        projector.unwrap(outcome.responses).map(Part::Responses)
    } else if location == primary() {
        projector.unwrap(outcome.primary_store).map(Part::Primary)
    } else {
        projector.unwrap(outcome.backup_store).map(Part::Backup)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn replay_matches_hand_trace() {
        let (responses, store) = replay(&[
            KvRequest::put("k", "v"),
            KvRequest::get("k"),
            KvRequest::get("missing"),
        ]);
        assert_eq!(
            responses,
            [
                KvResponse::Ack,
                KvResponse::Value(Some("v".into())),
                KvResponse::Value(None)
            ]
        );
        assert_eq!(store, Store::from([("k".into(), "v".into())]));
    }

    #[test]
    fn workload_is_seeded() {
        assert_eq!(workload(7, 100, 0.5), workload(7, 100, 0.5));
        assert_ne!(workload(7, 100, 0.5), workload(8, 100, 0.5));
        let w = workload(1, 1000, 0.5);
        let gets = w.iter().filter(|r| !r.is_put()).count();
        assert!((400..600).contains(&gets), "{gets}");
        for r in &w {
            if let KvRequest::Put { key, value } = r {
                assert!(key.starts_with("key") && key.len() == 5);
                assert_eq!(value.len(), VALUE_LEN);
            }
        }
        assert!(workload(1, 50, 1.0).iter().all(|r| !r.is_put()));
        assert!(workload(1, 50, 0.0).iter().all(KvRequest::is_put));
    }
}
