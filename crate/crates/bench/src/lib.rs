//! Benchmarks comparing projected choreographies with handwritten node
//! programs.
//!
//! Three benchmarks are available. `counter` increments a counter with
//! `locally` at a single location. `comm` moves a payload between two
//! in-process locations. `kvs` drives the replicated key-value store end to
//! end. Every benchmark first checks that both variants compute the same
//! thing and only then reports timings.

use std::time::{Duration, Instant};

use serde::Serialize;

pub mod comm;
pub mod counter;
pub mod kvs;
pub mod report;
pub mod spec;
pub mod stats;

pub use spec::{BenchName, BenchSpec, OutputFormat, SpecFile, TransportKind, Variant};

#[derive(Debug, thiserror::Error)]
pub enum BenchError {
    #[error("{0}")]
    Config(String),
    #[error(transparent)]
    Choreo(#[from] choreo_core::ChoreoError),
    /// The variants disagreed; no timing is reported.
    #[error("variants disagree, timings discarded:\n{0}")]
    Mismatch(String),
    #[error("cannot write results: {0}")]
    Io(#[from] std::io::Error),
}

/// One timed repetition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Sample {
    pub bench: BenchName,
    pub variant: Variant,
    /// Loop count, or requests per run for kvs.
    pub iterations: u64,
    pub repetition: usize,
    pub duration_ns: u64,
    /// Functional result of the repetition, checked before reporting.
    pub checksum: u64,
}

impl Sample {
    pub fn duration(&self) -> Duration {
        Duration::from_nanos(self.duration_ns)
    }
}

/// Warms every variant up `spec.warmup` times, then times `spec.reps`
/// rounds with the variants interleaved inside each round, alternating
/// which goes first. Each result is compared with `expected` once the clock
/// has stopped.
pub(crate) fn measure(
    spec: &BenchSpec,
    iterations: u64,
    expected: u64,
    mut body: impl FnMut(Variant) -> Result<u64, BenchError>,
) -> Result<Vec<Sample>, BenchError> {
    for variant in &spec.variants {
        for _ in 0..spec.warmup {
            body(*variant)?;
        }
    }
    let mut samples = Vec::with_capacity(spec.reps * spec.variants.len());
    for repetition in 0..spec.reps {
        let mut order = spec.variants.clone();
        if repetition % 2 == 1 {
            order.reverse();
        }
        for variant in &order {
            let start = Instant::now();
            let checksum = body(*variant)?;
            let elapsed = start.elapsed();
            if checksum != expected {
                return Err(BenchError::Mismatch(format!(
                    "{variant} repetition {repetition}: checksum {checksum}, expected {expected}"
                )));
            }
            samples.push(Sample {
                bench: spec.bench,
                variant: *variant,
                iterations,
                repetition,
                duration_ns: elapsed.as_nanos() as u64,
                checksum,
            });
        }
    }
    Ok(samples)
}

/// FNV-1a, used to fold wire payloads into a checksum.
pub(crate) fn fnv1a(bytes: &[u8], mut hash: u64) -> u64 {
    for b in bytes {
        hash ^= u64::from(*b);
        hash = hash.wrapping_mul(0x0100_0000_01b3);
    }
    hash
}

pub(crate) const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;

/// Runs the benchmark described by `spec` and returns every timed sample.
pub fn run(spec: &BenchSpec) -> Result<Vec<Sample>, BenchError> {
    spec.validate()?;
    match spec.bench {
        BenchName::Counter => counter::bench(spec),
        BenchName::Comm => comm::bench(spec),
        BenchName::Kvs => kvs::bench(spec),
    }
}
