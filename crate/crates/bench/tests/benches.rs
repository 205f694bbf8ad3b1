use std::collections::BTreeMap;

use choreo_bench::{comm, counter, kvs, run, BenchError, BenchName, BenchSpec, SpecFile, TransportKind, Variant};
use choreo_core::transport::{in_process_registry, CountingTransport, TraceRecorder};
use choreo_protocols::kvs::workload;

fn quick(bench: BenchName) -> BenchSpec {
    BenchSpec {
        reps: 2,
        warmup: 1,
        ..BenchSpec::new(bench)
    }
}

#[test]
fn counter_reaches_iterations_in_both_variants() {
    let t = counter::endpoint();
    for n in [1_000, 1_000_000] {
        assert_eq!(counter::count_handwritten(n), n);
        assert_eq!(counter::count_choreographic(&t, n).unwrap(), n);
    }
    let samples = run(&BenchSpec {
        iterations: vec![1_000, 20_000],
        ..quick(BenchName::Counter)
    })
    .unwrap();
    assert_eq!(samples.len(), 2 * 2 * 2);
    assert!(samples.iter().all(|s| s.checksum == s.iterations));
}

#[test]
fn zero_iterations_are_rejected() {
    let spec = BenchSpec {
        iterations: vec![0],
        ..quick(BenchName::Counter)
    };
    assert!(matches!(run(&spec), Err(BenchError::Config(_))));
    let spec = BenchSpec {
        iterations: vec![0],
        ..quick(BenchName::Comm)
    };
    assert!(matches!(run(&spec), Err(BenchError::Config(_))));
}

#[test]
fn comm_sends_one_message_per_iteration() {
    for variant in Variant::ALL {
        let recorder = TraceRecorder::new();
        let endpoints: BTreeMap<_, _> = in_process_registry(&comm::locations())
            .into_iter()
            .map(|(l, t)| (l, CountingTransport::new(t, recorder.clone())))
            .collect();
        let total = comm::ping(&endpoints, variant, 500).unwrap();
        assert_eq!(total, comm::expected_checksum(500));
        let trace = recorder.snapshot();
        assert_eq!(trace.count(comm::sender(), comm::receiver()), 500, "{variant}");
        assert_eq!(trace.count(comm::receiver(), comm::sender()), 0);
        let payload = format!("\"{}\"", comm::PAYLOAD);
        assert!(trace.sends.iter().all(|e| e.payload == payload.as_bytes()));
    }
}

#[test]
fn comm_bench_reports_checked_samples() {
    let samples = run(&BenchSpec {
        iterations: vec![200],
        ..quick(BenchName::Comm)
    })
    .unwrap();
    assert_eq!(samples.len(), 4);
    assert!(samples.iter().all(|s| s.checksum == comm::expected_checksum(200)));
}

#[test]
fn kvs_workload_is_seeded() {
    assert_eq!(workload(9, 50, 0.5), workload(9, 50, 0.5));
    assert_ne!(workload(9, 50, 0.5), workload(10, 50, 0.5));
}

#[test]
fn kvs_bench_verifies_before_timing() {
    let endpoints = in_process_registry(&choreo_protocols::kvs::locations());
    let requests = workload(4, 40, 0.5);
    let expected = kvs::verify(&endpoints, &Variant::ALL, &requests).unwrap();
    assert_eq!(expected, kvs::checksum(&choreo_protocols::kvs::replay(&requests).0));

    for transport in [TransportKind::InProcess, TransportKind::Http] {
        let samples = run(&BenchSpec {
            requests: 20,
            transport: Some(transport),
            ..quick(BenchName::Kvs)
        })
        .unwrap();
        assert_eq!(samples.len(), 4);
        assert!(samples.iter().all(|s| s.checksum == samples[0].checksum && s.iterations == 20));
    }
}

#[test]
fn kvs_without_transport_is_a_config_error() {
    let spec = BenchSpec {
        transport: None,
        ..quick(BenchName::Kvs)
    };
    assert!(matches!(run(&spec), Err(BenchError::Config(_))));
    assert!(SpecFile {
        bench: Some(BenchName::Kvs),
        ..SpecFile::default()
    }
    .resolve()
    .is_err());
}
