//! End-to-end replicated key-value store benchmark.

use std::collections::BTreeMap;
use std::fmt::Write;
use std::time::Duration;

use choreo_core::transport::{http_loopback_mesh, in_process_registry, TransportConfig};
use choreo_core::{wire, Location, Transport};
use choreo_protocols::kvs::{self, replay, workload, Implementation, KvRequest, KvResponse, KvsRun};

use crate::{fnv1a, measure, BenchError, BenchSpec, Sample, TransportKind, Variant, FNV_OFFSET};

pub fn implementation(variant: Variant) -> Implementation {
    match variant {
        Variant::Handwritten => Implementation::Handwritten,
        Variant::Choreographic => Implementation::Choreographic,
    }
}

/// Folds the client's responses, in order, into one number.
pub fn checksum(responses: &[KvResponse]) -> u64 {
    responses.iter().fold(FNV_OFFSET, |hash, r| {
        let bytes = wire::encode(r).expect("responses always encode");
        fnv1a(b";", fnv1a(&bytes, hash))
    })
}

/// Describes how `actual` departs from `expected`.
pub fn difference(expected: &KvsRun, actual: &KvsRun) -> Option<String> {
    let mut report = String::new();
    let (e, a) = (&expected.responses, &actual.responses);
    if e.len() != a.len() {
        let _ = writeln!(report, "  {} responses, expected {}", a.len(), e.len());
    }
    if let Some(i) = (0..e.len().min(a.len())).find(|&i| e[i] != a[i]) {
        let _ = writeln!(report, "  response {i}: {:?}, expected {:?}", a[i], e[i]);
    }
    for (name, exp, act) in [
        ("primary", &expected.primary_store, &actual.primary_store),
        ("backup", &expected.backup_store, &actual.backup_store),
    ] {
        if exp != act {
            let _ = writeln!(report, "  {name} store: {act:?}, expected {exp:?}");
        }
    }
    (!report.is_empty()).then_some(report)
}

pub fn bench(spec: &BenchSpec) -> Result<Vec<Sample>, BenchError> {
    let locations = kvs::locations();
    match spec.transport {
        Some(TransportKind::InProcess) => {
            let endpoints = in_process_registry(&locations)
                .into_iter()
                .map(|(l, t)| (l, t.with_receive_timeout(Duration::from_secs(30))))
                .collect();
            bench_over(spec, &endpoints)
        }
        Some(TransportKind::Http) => {
            let mesh = http_loopback_mesh(&locations, |l| TransportConfig::new(l, "127.0.0.1:0"))?;
            bench_over(spec, &mesh)
        }
        None => Err(BenchError::Config("kvs needs an explicit transport".into())),
    }
}

/// Runs every variant once on `requests`, checks each against the reference
/// replay and against the others, and returns the agreed checksum.
pub fn verify<T: Transport>(
    endpoints: &BTreeMap<Location, T>,
    variants: &[Variant],
    requests: &[KvRequest],
) -> Result<u64, BenchError> {
    let (responses, store) = replay(requests);
    let reference = KvsRun {
        responses,
        primary_store: store.clone(),
        backup_store: store,
    };
    let mut report = String::new();
    for variant in variants {
        let run = kvs::run(implementation(*variant), endpoints, requests)?;
        if let Some(diff) = difference(&reference, &run) {
            let _ = write!(report, "{variant} against the reference replay:\n{diff}");
        }
    }
    if report.is_empty() {
        Ok(checksum(&reference.responses))
    } else {
        Err(BenchError::Mismatch(report))
    }
}

fn bench_over<T: Transport>(
    spec: &BenchSpec,
    endpoints: &BTreeMap<Location, T>,
) -> Result<Vec<Sample>, BenchError> {
    let requests = workload(spec.seed, spec.requests, spec.get_ratio);
    let expected = verify(endpoints, &spec.variants, &requests)?;
    measure(spec, requests.len() as u64, expected, |variant| {
        let run = kvs::run(implementation(variant), endpoints, &requests)?;
        Ok(checksum(&run.responses))
    })
}
