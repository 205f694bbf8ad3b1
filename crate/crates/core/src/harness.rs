//! Multi-location test runner.
//!
//! [`run_all`] projects a choreography onto every participant, runs the
//! projections concurrently over a recorded in-process fabric and collects
//! the per-location results with the message trace. Every blocking receive
//! is bounded by the run's deadline, so a choreography whose sends and
//! receives do not match ends with a report naming the starved pairs
//! instead of hanging.

use std::collections::BTreeMap;
use std::fmt;
use std::time::{Duration, Instant};

use serde::ser::SerializeStruct;
use serde::{Serialize, Serializer};

use crate::choreography::Choreography;
use crate::error::{ChoreoError, ErrorKind, Result};
use crate::location::{Location, LocationSet};
use crate::projector::Projector;
use crate::transport::{
    in_process_registry, CountingTransport, LocalTransport, PairKey, TraceEntry, TraceRecord,
    TraceRecorder, Transport, DEFAULT_RECEIVE_TIMEOUT,
};

/// The projector type handed to choreography builders by [`run_all`].
pub type HarnessProjector = Projector<CountingTransport<LocalTransport>>;

#[derive(Debug, Clone, Copy)]
pub struct RunOptions {
    pub timeout: Duration,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            timeout: DEFAULT_RECEIVE_TIMEOUT,
        }
    }
}

impl RunOptions {
    pub fn with_timeout(timeout: Duration) -> Self {
        Self { timeout }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Outcome<R> {
    Completed(R),
    Failed(ChoreoError),
}

impl<R: Serialize> Serialize for Outcome<R> {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Outcome::Completed(r) => {
                let mut st = s.serialize_struct("Outcome", 2)?;
                st.serialize_field("completed", &true)?;
                st.serialize_field("result", r)?;
                st.end()
            }
            Outcome::Failed(e) => {
                let mut st = s.serialize_struct("Outcome", 3)?;
                st.serialize_field("completed", &false)?;
                st.serialize_field("error_kind", &format!("{:?}", e.kind()))?;
                st.serialize_field("error", &e.to_string())?;
                st.end()
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunReport<R> {
    pub outcomes: BTreeMap<Location, Outcome<R>>,
    pub trace: TraceRecord,
    pub duration: Duration,
}

impl<R> RunReport<R> {
    pub fn completed(&self, location: Location) -> bool {
        matches!(self.outcomes.get(&location), Some(Outcome::Completed(_)))
    }

    pub fn all_completed(&self) -> bool {
        self.outcomes
            .values()
            .all(|o| matches!(o, Outcome::Completed(_)))
    }

    pub fn result(&self, location: Location) -> Option<&R> {
        match self.outcomes.get(&location)? {
            Outcome::Completed(r) => Some(r),
            Outcome::Failed(_) => None,
        }
    }

    pub fn error(&self, location: Location) -> Option<&ChoreoError> {
        match self.outcomes.get(&location)? {
            Outcome::Completed(_) => None,
            Outcome::Failed(e) => Some(e),
        }
    }

    /// Receives that gave up waiting: (awaited sender, blocked receiver).
    pub fn blocked_receives(&self) -> Vec<PairKey> {
        self.outcomes
            .values()
            .filter_map(|o| match o {
                Outcome::Failed(ChoreoError::ReceiveTimeout {
                    receiver, sender, ..
                }) => Some(PairKey {
                    sender: *sender,
                    receiver: *receiver,
                }),
                _ => None,
            })
            .collect()
    }

    pub fn deadlocked(&self) -> bool {
        !self.blocked_receives().is_empty()
    }

    /// All results, or the first failure in location order.
    pub fn into_results(self) -> Result<BTreeMap<Location, R>> {
        self.outcomes
            .into_iter()
            .map(|(l, o)| match o {
                Outcome::Completed(r) => Ok((l, r)),
                Outcome::Failed(e) => Err(e),
            })
            .collect()
    }
}

impl<R: Serialize> Serialize for RunReport<R> {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut st = s.serialize_struct("RunReport", 4)?;
        st.serialize_field("outcomes", &self.outcomes)?;
        st.serialize_field("ledger", &self.trace.ledger())?;
        st.serialize_field("trace", &self.trace)?;
        st.serialize_field("duration_ns", &(self.duration.as_nanos() as u64))?;
        st.end()
    }
}

/// Runs `build`'s choreography at every member of `locations` over a fresh
/// in-process fabric.
///
/// `build` is called once per location with that location's projector, so it
/// can place located inputs with [`Placement`](crate::Placement).
pub fn run_all<R, C, F>(locations: &LocationSet, build: F, options: RunOptions) -> RunReport<R>
where
    F: Fn(&HarnessProjector) -> C + Sync,
    C: Choreography<R>,
    R: Send,
{
    let deadline = Instant::now() + options.timeout;
    let endpoints = in_process_registry(locations)
        .into_iter()
        .map(|(l, t)| {
            let t = t.with_receive_timeout(options.timeout).with_deadline(deadline);
            (l, t)
        })
        .collect();
    run_on(locations, endpoints, build)
}

/// Like [`run_all`] over caller-supplied endpoints (for example HTTP ones).
///
/// Each endpoint is wrapped in a [`CountingTransport`] sharing one recorder.
/// Endpoints stay open until every location has finished, so a receive that
/// is never matched ends in a timeout rather than a hang-up.
pub fn run_on<T, R, C, F>(
    locations: &LocationSet,
    mut endpoints: BTreeMap<Location, T>,
    build: F,
) -> RunReport<R>
where
    T: Transport + Send,
    F: Fn(&Projector<CountingTransport<T>>) -> C + Sync,
    C: Choreography<R>,
    R: Send,
{
    let recorder = TraceRecorder::new();
    let started = Instant::now();
    let build = &build;
    let mut outcomes = BTreeMap::new();
    let mut finished = Vec::new();
    std::thread::scope(|scope| {
        let mut workers = Vec::new();
        for location in locations {
            let location = *location;
            let Some(endpoint) = endpoints.remove(&location) else {
                outcomes.insert(
                    location,
                    Outcome::Failed(ChoreoError::Configuration(format!(
                        "no endpoint supplied for `{location}`"
                    ))),
                );
                continue;
            };
            let transport = CountingTransport::new(endpoint, recorder.clone());
            let locations = locations.clone();
            let worker = std::thread::Builder::new()
                .name(format!("projection-{location}"))
                .spawn_scoped(scope, move || {
                    let projector = match Projector::new(location, locations, transport) {
                        Ok(p) => p,
                        Err(e) => return (Outcome::Failed(e), None),
                    };
                    let outcome = match projector.epp_and_run(build(&projector)) {
                        Ok(r) => Outcome::Completed(r),
                        Err(e) => Outcome::Failed(e),
                    };
                    (outcome, Some(projector))
                })
                .expect("spawn projection thread");
            workers.push((location, worker));
        }
        for (location, worker) in workers {
            let (outcome, projector) = worker.join().unwrap_or_else(|panic| {
                let message = panic
                    .downcast_ref::<&str>()
                    .map(|s| s.to_string())
                    .or_else(|| panic.downcast_ref::<String>().cloned())
                    .unwrap_or_else(|| "projection panicked".into());
                (Outcome::Failed(ChoreoError::Invariant(message)), None)
            });
            outcomes.insert(location, outcome);
            finished.push(projector);
        }
    });
    drop(finished);
    RunReport {
        outcomes,
        trace: recorder.snapshot(),
        duration: started.elapsed(),
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Window {
    All,
    /// Strictly after the first envelope on this pair (optionally with this
    /// exact payload).
    After(PairKey, Option<Vec<u8>>),
}

type PayloadFilter = Box<dyn Fn(&[u8]) -> bool + Send + Sync>;

enum Check {
    Count(usize),
    AtLeast(usize),
    Payloads(Vec<String>),
    Matching(usize, PayloadFilter),
}

/// One line of an expected message ledger.
pub struct TraceExpectation {
    pair: PairKey,
    window: Window,
    check: Check,
}

impl TraceExpectation {
    fn new(sender: Location, receiver: Location, check: Check) -> Self {
        Self {
            pair: PairKey { sender, receiver },
            window: Window::All,
            check,
        }
    }

    pub fn count(sender: Location, receiver: Location, count: usize) -> Self {
        Self::new(sender, receiver, Check::Count(count))
    }

    pub fn at_least(sender: Location, receiver: Location, count: usize) -> Self {
        Self::new(sender, receiver, Check::AtLeast(count))
    }

    /// Exact payload sequence, as canonical text.
    pub fn payloads<S: Into<String>>(
        sender: Location,
        receiver: Location,
        payloads: impl IntoIterator<Item = S>,
    ) -> Self {
        let payloads = payloads.into_iter().map(Into::into).collect();
        Self::new(sender, receiver, Check::Payloads(payloads))
    }

    /// Exactly `count` envelopes whose payload satisfies `predicate`.
    pub fn matching(
        sender: Location,
        receiver: Location,
        count: usize,
        predicate: impl Fn(&[u8]) -> bool + Send + Sync + 'static,
    ) -> Self {
        Self::new(sender, receiver, Check::Matching(count, Box::new(predicate)))
    }

    /// Restricts the expectation to envelopes logged after the first one sent
    /// from `sender` to `receiver`.
    pub fn after(mut self, sender: Location, receiver: Location) -> Self {
        self.window = Window::After(PairKey { sender, receiver }, None);
        self
    }

    /// Like [`TraceExpectation::after`], with the marker's exact payload.
    pub fn after_payload(mut self, sender: Location, receiver: Location, payload: &str) -> Self {
        self.window = Window::After(
            PairKey { sender, receiver },
            Some(payload.as_bytes().to_vec()),
        );
        self
    }

    fn window<'t>(&self, trace: &'t TraceRecord) -> &'t [TraceEntry] {
        match &self.window {
            Window::All => &trace.sends,
            Window::After(marker, payload) => trace.sends_after(|e| {
                e.pair() == *marker && payload.as_ref().is_none_or(|p| *p == e.payload)
            }),
        }
    }

    fn evaluate(&self, trace: &TraceRecord) -> std::result::Result<(), String> {
        let entries: Vec<&TraceEntry> = self
            .window(trace)
            .iter()
            .filter(|e| e.pair() == self.pair)
            .collect();
        let (ok, expected) = match &self.check {
            Check::Count(n) => (entries.len() == *n, format!("exactly {n}")),
            Check::AtLeast(n) => (entries.len() >= *n, format!("at least {n}")),
            Check::Payloads(p) => {
                let actual: Vec<String> = entries.iter().map(|e| e.payload_text()).collect();
                (actual == *p, format!("payloads {p:?}"))
            }
            Check::Matching(n, predicate) => {
                let hits = entries.iter().filter(|e| predicate(&e.payload)).count();
                (hits == *n, format!("exactly {n} matching (got {hits})"))
            }
        };
        if ok {
            Ok(())
        } else {
            let actual: Vec<String> = entries.iter().map(|e| e.payload_text()).collect();
            Err(format!(
                "{}{}: expected {expected}, found {} envelope(s) {actual:?}",
                self.pair,
                match &self.window {
                    Window::All => String::new(),
                    Window::After(m, _) => format!(" after first {m}"),
                },
                entries.len()
            ))
        }
    }
}

/// Failed trace expectations together with the observed ledger.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceMismatch {
    pub failures: Vec<String>,
    pub ledger: BTreeMap<PairKey, Vec<String>>,
}

impl fmt::Display for TraceMismatch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "trace expectations failed:")?;
        for failure in &self.failures {
            writeln!(f, "  - {failure}")?;
        }
        writeln!(f, "observed ledger:")?;
        for (pair, payloads) in &self.ledger {
            writeln!(f, "  {pair}: {payloads:?}")?;
        }
        Ok(())
    }
}

impl std::error::Error for TraceMismatch {}

pub fn check_trace(
    trace: &TraceRecord,
    expectations: &[TraceExpectation],
) -> std::result::Result<(), TraceMismatch> {
    let failures: Vec<String> = expectations
        .iter()
        .filter_map(|e| e.evaluate(trace).err())
        .collect();
    if failures.is_empty() {
        Ok(())
    } else {
        Err(TraceMismatch {
            failures,
            ledger: trace.ledger(),
        })
    }
}

pub fn assert_trace<R>(
    report: &RunReport<R>,
    expectations: &[TraceExpectation],
) -> std::result::Result<(), TraceMismatch> {
    check_trace(&report.trace, expectations)
}

/// Kinds of the per-location failures, for compact assertions.
pub fn failure_kinds<R>(report: &RunReport<R>) -> BTreeMap<Location, ErrorKind> {
    report
        .outcomes
        .iter()
        .filter_map(|(l, o)| match o {
            Outcome::Failed(e) => Some((*l, e.kind())),
            Outcome::Completed(_) => None,
        })
        .collect()
}
