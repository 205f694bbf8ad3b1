//! Comm microbenchmark: moving one payload between two locations.

use std::collections::BTreeMap;

use choreo_core::transport::{http_loopback_mesh, in_process_registry, TransportConfig};
use choreo_core::{
    wire, ChoreoError, ChoreoOp, Choreography, Located, Location, LocationSet, Projector, Result,
    Transport,
};

use crate::{measure, BenchError, BenchSpec, Sample, TransportKind, Variant};

pub const PAYLOAD: &str = "located value";

pub fn sender() -> Location {
    Location::named("sender")
}

pub fn receiver() -> Location {
    Location::named("receiver")
}

pub fn locations() -> LocationSet {
    LocationSet::named(&["sender", "receiver"])
}

/// What the receiver reports after `iterations` intact messages.
pub fn expected_checksum(iterations: u64) -> u64 {
    iterations * PAYLOAD.len() as u64
}

fn intact(received: &str) -> Result<u64> {
    if received == PAYLOAD {
        Ok(received.len() as u64)
    } else {
        Err(ChoreoError::Protocol(format!("payload arrived as {received:?}")))
    }
}

/// Sends [`PAYLOAD`] from sender to receiver `iterations` times; the
/// receiver totals the bytes of the payloads it checked.
pub struct Ping {
    pub iterations: u64,
}

impl Choreography<Located<u64>> for Ping {
    fn location_set(&self) -> LocationSet {
        locations()
    }

    fn run<O: ChoreoOp>(self, op: &O) -> Result<Located<u64>> {
        let (from, to) = (sender(), receiver());
        let message = op.locally(from, |_| Ok(PAYLOAD.to_owned()))?;
        let mut total = op.locally(to, |_| Ok(0u64))?;
        for _ in 0..self.iterations {
            let arrived = op.comm(from, to, &message)?;
            total = op.locally(to, |un| {
                Ok(un.take(total)? + intact(un.unwrap(&arrived)?)?)
            })?;
        }
        Ok(total)
    }
}

/// The same exchange written against the transport directly.
pub fn ping_handwritten<T: Transport>(endpoints: &BTreeMap<Location, T>, iterations: u64) -> Result<u64> {
    let (from, to) = (sender(), receiver());
    let (tx, rx) = (&endpoints[&from], &endpoints[&to]);
    std::thread::scope(|s| {
        let sending = s.spawn(move || -> Result<()> {
            let message = PAYLOAD.to_owned();
            for _ in 0..iterations {
                tx.send(to, &wire::encode(&message)?)?;
            }
            Ok(())
        });
        let mut total = 0;
        for _ in 0..iterations {
            let text: String = wire::decode(&rx.receive(from)?)?;
            total += intact(&text)?;
        }
        join(sending)?;
        Ok(total)
    })
}

pub fn ping_choreographic<T: Transport>(endpoints: &BTreeMap<Location, T>, iterations: u64) -> Result<u64> {
    let set = locations();
    std::thread::scope(|s| {
        let sending = s.spawn(|| -> Result<()> {
            let p = Projector::new(sender(), set.clone(), &endpoints[&sender()])?;
            p.epp_and_run(Ping { iterations }).map(drop)
        });
        let p = Projector::new(receiver(), set.clone(), &endpoints[&receiver()])?;
        let total = p.epp_and_run(Ping { iterations }).and_then(|t| p.unwrap(t));
        join(sending)?;
        total
    })
}

fn join(handle: std::thread::ScopedJoinHandle<'_, Result<()>>) -> Result<()> {
    handle
        .join()
        .unwrap_or_else(|_| Err(ChoreoError::Invariant("sender panicked".into())))
}

pub fn ping<T: Transport>(endpoints: &BTreeMap<Location, T>, variant: Variant, iterations: u64) -> Result<u64> {
    match variant {
        Variant::Handwritten => ping_handwritten(endpoints, iterations),
        Variant::Choreographic => ping_choreographic(endpoints, iterations),
    }
}

pub fn bench(spec: &BenchSpec) -> std::result::Result<Vec<Sample>, BenchError> {
    match spec.transport.unwrap_or(TransportKind::InProcess) {
        TransportKind::InProcess => bench_over(spec, &in_process_registry(&locations())),
        TransportKind::Http => {
            let mesh = http_loopback_mesh(&locations(), |l| TransportConfig::new(l, "127.0.0.1:0"))?;
            bench_over(spec, &mesh)
        }
    }
}

fn bench_over<T: Transport>(
    spec: &BenchSpec,
    endpoints: &BTreeMap<Location, T>,
) -> std::result::Result<Vec<Sample>, BenchError> {
    let mut samples = Vec::new();
    for &iterations in &spec.iterations {
        let expected = expected_checksum(iterations);
        for variant in &spec.variants {
            let total = ping(endpoints, *variant, iterations)?;
            if total != expected {
                return Err(BenchError::Mismatch(format!(
                    "{variant} received {total} payload bytes, expected {expected}"
                )));
            }
        }
        samples.extend(measure(spec, iterations, expected, |variant| {
            Ok(ping(endpoints, variant, iterations)?)
        })?);
    }
    Ok(samples)
}
