use std::sync::atomic::{AtomicUsize, Ordering};
use std::time::Duration;

use choreo_core::harness::{run_all, run_on, RunOptions};
use choreo_core::transport::{in_process_registry, CountingTransport, TraceRecorder};
use choreo_core::{
    ChoreoError, ChoreoOp, Choreography, ErrorKind, Located, Location, LocationSet, MultiplyLocated,
    Placement, Projector, Result, Transport,
};

fn loc(name: &'static str) -> Location {
    Location::named(name)
}

fn quick() -> RunOptions {
    RunOptions::with_timeout(Duration::from_secs(5))
}

/// `locally(at, || 7)`, counting evaluations.
struct LocallySeven<'a> {
    set: LocationSet,
    at: Location,
    evaluations: &'a AtomicUsize,
}

impl Choreography<Located<i32>> for LocallySeven<'_> {
    fn location_set(&self) -> LocationSet {
        self.set.clone()
    }

    fn run<O: ChoreoOp>(self, op: &O) -> Result<Located<i32>> {
        op.locally(self.at, |_| {
            self.evaluations.fetch_add(1, Ordering::SeqCst);
            Ok(7)
        })
    }
}

fn single_projector(target: &'static str, set: &LocationSet) -> Projector<impl Transport> {
    let mut eps = in_process_registry(set);
    Projector::new(loc(target), set.clone(), eps.remove(&loc(target)).unwrap()).unwrap()
}

#[test]
fn locally_evaluates_only_at_its_location() {
    let set = LocationSet::named(&["buyer", "seller"]);
    let evaluations = AtomicUsize::new(0);

    let at_buyer = single_projector("buyer", &set)
        .epp_and_run(LocallySeven {
            set: set.clone(),
            at: loc("buyer"),
            evaluations: &evaluations,
        })
        .unwrap();
    assert!(at_buyer.is_local());
    assert_eq!(single_projector("buyer", &set).unwrap(at_buyer).unwrap(), 7);
    assert_eq!(evaluations.load(Ordering::SeqCst), 1);

    let at_seller = single_projector("seller", &set)
        .epp_and_run(LocallySeven {
            set: set.clone(),
            at: loc("buyer"),
            evaluations: &evaluations,
        })
        .unwrap();
    assert!(at_seller.is_remote());
    assert_eq!(at_seller.owner(), loc("buyer"));
    assert_eq!(evaluations.load(Ordering::SeqCst), 1, "computation ran off-target");
}

#[test]
fn locally_outside_location_set_is_rejected() {
    let set = LocationSet::named(&["buyer", "seller"]);
    let evaluations = AtomicUsize::new(0);
    let err = single_projector("buyer", &set)
        .epp_and_run(LocallySeven {
            set: set.clone(),
            at: loc("carol"),
            evaluations: &evaluations,
        })
        .unwrap_err();
    assert_eq!(err.kind(), ErrorKind::LocationSetViolation);
    assert!(err.to_string().contains("carol"));
}

/// `comm(from, to, title)` over an arbitrary set.
struct SendTitle {
    set: LocationSet,
    from: Location,
    to: Location,
    title: Located<String>,
}

impl Choreography<Located<String>> for SendTitle {
    fn location_set(&self) -> LocationSet {
        self.set.clone()
    }

    fn run<O: ChoreoOp>(self, op: &O) -> Result<Located<String>> {
        op.comm(self.from, self.to, &self.title)
    }
}

#[test]
fn comm_sends_exactly_one_envelope() {
    let set = LocationSet::named(&["buyer", "seller", "backup"]);
    let report = run_all(
        &set,
        |p| SendTitle {
            set: set.clone(),
            from: loc("buyer"),
            to: loc("seller"),
            title: p.place(loc("buyer"), || "TAPL".to_string()),
        },
        quick(),
    );
    assert!(report.all_completed());
    let at_buyer = report.result(loc("buyer")).unwrap();
    assert!(at_buyer.is_remote());
    assert_eq!(at_buyer.owner(), loc("seller"));
    assert_eq!(
        report.result(loc("seller")).unwrap(),
        &choreo_core::oracle::run_global(SendTitle {
            set: set.clone(),
            from: loc("buyer"),
            to: loc("seller"),
            title: choreo_core::Global.place(loc("buyer"), || "TAPL".to_string()),
        })
        .unwrap()
    );
    assert!(report.result(loc("backup")).unwrap().is_remote());

    assert_eq!(report.trace.sends.len(), 1);
    assert_eq!(report.trace.count(loc("buyer"), loc("seller")), 1);
    assert_eq!(report.trace.sends[0].payload, br#""TAPL""#);
    assert_eq!(report.trace.count_touching(loc("backup")), 0);
    assert!(report.trace.is_dual());
}

#[test]
fn comm_argument_errors() {
    let set = LocationSet::named(&["buyer", "seller"]);
    let run = |from, to, owner| {
        let p = single_projector("buyer", &set);
        let title = if owner == loc("buyer") {
            p.local("TAPL".to_string())
        } else {
            p.remote(owner).unwrap()
        };
        p.epp_and_run(SendTitle {
            set: set.clone(),
            from,
            to,
            title,
        })
        .unwrap_err()
        .kind()
    };
    assert_eq!(run(loc("buyer"), loc("buyer"), loc("buyer")), ErrorKind::SelfCommunication);
    assert_eq!(run(loc("buyer"), loc("carol"), loc("buyer")), ErrorKind::LocationSetViolation);
    assert_eq!(run(loc("buyer"), loc("seller"), loc("seller")), ErrorKind::ScopeViolation);
}

#[test]
fn undecodable_payload_is_wire_format_error() {
    let set = LocationSet::named(&["buyer", "seller"]);
    let mut eps = in_process_registry(&set);
    let buyer_end = eps.remove(&loc("buyer")).unwrap();
    buyer_end.send(loc("seller"), b"not json").unwrap();
    let seller = Projector::new(loc("seller"), set.clone(), eps.remove(&loc("seller")).unwrap())
        .unwrap();
    let err = seller
        .epp_and_run(SendTitle {
            set: set.clone(),
            from: loc("buyer"),
            to: loc("seller"),
            title: seller.remote(loc("buyer")).unwrap(),
        })
        .unwrap_err();
    assert_eq!(err.kind(), ErrorKind::WireFormat);
}

#[test]
fn transport_failure_names_the_peer() {
    let set = LocationSet::named(&["buyer", "seller"]);
    let mut eps = in_process_registry(&set);
    drop(eps.remove(&loc("seller")));
    let buyer = Projector::new(loc("buyer"), set.clone(), eps.remove(&loc("buyer")).unwrap())
        .unwrap();
    let err = buyer
        .epp_and_run(SendTitle {
            set: set.clone(),
            from: loc("buyer"),
            to: loc("seller"),
            title: buyer.local("TAPL".into()),
        })
        .unwrap_err();
    assert!(matches!(err, ChoreoError::Communication { ref peer, .. } if peer == "seller"));
}

struct Broadcast<V> {
    set: LocationSet,
    from: Location,
    value: Located<V>,
}

impl<V: choreo_core::Portable> Choreography<V> for Broadcast<V> {
    fn location_set(&self) -> LocationSet {
        self.set.clone()
    }

    fn run<O: ChoreoOp>(self, op: &O) -> Result<V> {
        op.broadcast(self.from, &self.value)
    }
}

#[test]
fn broadcast_fans_out_to_the_active_set() {
    for (names, expected) in [
        (&["buyer1", "seller", "buyer2"][..], 2),
        (&["buyer1", "seller"][..], 1),
        (&["buyer1"][..], 0),
    ] {
        let set = LocationSet::named(names);
        let report = run_all(
            &set,
            |p| Broadcast {
                set: set.clone(),
                from: loc("buyer1"),
                value: p.place(loc("buyer1"), || true),
            },
            quick(),
        );
        for l in &set {
            assert_eq!(report.result(*l), Some(&true), "at {l}");
        }
        assert_eq!(report.trace.count_from(loc("buyer1")), expected, "{set}");
        assert_eq!(report.trace.sends.len(), expected);
        let recipients: Vec<_> = report.trace.sends.iter().map(|e| e.receiver).collect();
        let in_set_order: Vec<_> = set.without(&loc("buyer1")).copied().collect();
        assert_eq!(recipients, in_set_order);
    }
}

#[test]
fn broadcast_of_foreign_value_is_scope_violation() {
    let set = LocationSet::named(&["alice", "bob"]);
    let p = single_projector("alice", &set);
    let err = p
        .epp_and_run(Broadcast {
            set: set.clone(),
            from: loc("alice"),
            value: p.remote::<u8>(loc("bob")).unwrap(),
        })
        .unwrap_err();
    assert_eq!(err.kind(), ErrorKind::ScopeViolation);
}

/// Inner sub-choreography for enclave tests: broadcasts from `from` inside
/// `set` and counts how often its body runs.
struct CountingSub<'a> {
    set: LocationSet,
    from: Location,
    value: &'a Located<u32>,
    runs: &'a AtomicUsize,
}

impl Choreography<u32> for CountingSub<'_> {
    fn location_set(&self) -> LocationSet {
        self.set.clone()
    }

    fn run<O: ChoreoOp>(self, op: &O) -> Result<u32> {
        self.runs.fetch_add(1, Ordering::SeqCst);
        op.broadcast(self.from, self.value)
    }
}

struct EnclaveOf<'a> {
    outer: LocationSet,
    inner: LocationSet,
    declared: LocationSet,
    value: Located<u32>,
    runs: &'a AtomicUsize,
}

impl Choreography<MultiplyLocated<u32>> for EnclaveOf<'_> {
    fn location_set(&self) -> LocationSet {
        self.outer.clone()
    }

    fn run<O: ChoreoOp>(self, op: &O) -> Result<MultiplyLocated<u32>> {
        op.enclave(
            &self.inner,
            CountingSub {
                set: self.declared.clone(),
                from: loc("buyer1"),
                value: &self.value,
                runs: self.runs,
            },
        )
    }
}

#[test]
fn enclave_skips_non_members_entirely() {
    let outer = LocationSet::named(&["buyer1", "seller", "buyer2"]);
    let inner = LocationSet::named(&["buyer1", "seller"]);
    let runs = AtomicUsize::new(0);
    let report = run_all(
        &outer,
        |p| EnclaveOf {
            outer: outer.clone(),
            inner: inner.clone(),
            declared: inner.clone(),
            value: p.place(loc("buyer1"), || 9),
            runs: &runs,
        },
        quick(),
    );
    assert!(report.all_completed());
    assert_eq!(runs.load(Ordering::SeqCst), 2, "sub-choreography ran at buyer2");
    assert!(!report.result(loc("buyer2")).unwrap().is_present());
    for l in [loc("buyer1"), loc("seller")] {
        assert_eq!(report.result(l).unwrap().clone().into_option(), Some(9));
    }
    assert_eq!(report.trace.count_touching(loc("buyer2")), 0);
    assert_eq!(report.trace.sends.len(), 1);
}

#[test]
fn enclave_errors() {
    let outer = LocationSet::named(&["buyer1", "seller"]);
    let runs = AtomicUsize::new(0);
    let run = |inner: LocationSet, declared: LocationSet| {
        let p = single_projector("buyer1", &outer);
        p.epp_and_run(EnclaveOf {
            outer: outer.clone(),
            inner,
            declared,
            value: p.local(1),
            runs: &runs,
        })
        .unwrap_err()
        .kind()
    };
    assert_eq!(
        run(LocationSet::named(&["buyer1", "carol"]), LocationSet::named(&["buyer1", "carol"])),
        ErrorKind::EnclaveScope
    );
    assert_eq!(
        run(LocationSet::named(&["buyer1", "seller"]), LocationSet::named(&["buyer1"])),
        ErrorKind::DeclarationMismatch
    );
    assert_eq!(runs.load(Ordering::SeqCst), 0);
}

/// enclave({a,b,c}, enclave({a,b}, broadcast a)) over {a,b,c,d}.
struct Nested<'a> {
    value: Located<u32>,
    inner_runs: &'a AtomicUsize,
    outer_runs: &'a AtomicUsize,
}

struct Middle<'a> {
    value: &'a Located<u32>,
    inner_runs: &'a AtomicUsize,
    outer_runs: &'a AtomicUsize,
}

impl Choreography<(u32, Option<u32>)> for Middle<'_> {
    fn location_set(&self) -> LocationSet {
        LocationSet::named(&["a", "b", "c"])
    }

    fn run<O: ChoreoOp>(self, op: &O) -> Result<(u32, Option<u32>)> {
        self.outer_runs.fetch_add(1, Ordering::SeqCst);
        let everyone = op.broadcast(loc("a"), self.value)?;
        let pair = op.enclave(
            &LocationSet::named(&["a", "b"]),
            CountingSub {
                set: LocationSet::named(&["a", "b"]),
                from: loc("a"),
                value: self.value,
                runs: self.inner_runs,
            },
        )?;
        Ok((everyone, pair.into_option()))
    }
}

impl Choreography<Option<(u32, Option<u32>)>> for Nested<'_> {
    fn location_set(&self) -> LocationSet {
        LocationSet::named(&["a", "b", "c", "d"])
    }

    fn run<O: ChoreoOp>(self, op: &O) -> Result<Option<(u32, Option<u32>)>> {
        let r = op.enclave(
            &LocationSet::named(&["a", "b", "c"]),
            Middle {
                value: &self.value,
                inner_runs: self.inner_runs,
                outer_runs: self.outer_runs,
            },
        )?;
        Ok(r.into_option())
    }
}

#[test]
fn nested_enclaves_scope_broadcasts() {
    let set = LocationSet::named(&["a", "b", "c", "d"]);
    let (inner_runs, outer_runs) = (AtomicUsize::new(0), AtomicUsize::new(0));
    let report = run_all(
        &set,
        |p| Nested {
            value: p.place(loc("a"), || 4),
            inner_runs: &inner_runs,
            outer_runs: &outer_runs,
        },
        quick(),
    );
    assert!(report.all_completed());
    assert_eq!(outer_runs.load(Ordering::SeqCst), 3);
    assert_eq!(inner_runs.load(Ordering::SeqCst), 2);
    assert_eq!(report.result(loc("a")), Some(&Some((4, Some(4)))));
    assert_eq!(report.result(loc("c")), Some(&Some((4, None))));
    assert_eq!(report.result(loc("d")), Some(&None));
    // Outer broadcast: a->b, a->c. Inner: a->b only.
    assert_eq!(report.trace.count(loc("a"), loc("b")), 2);
    assert_eq!(report.trace.count(loc("a"), loc("c")), 1);
    assert_eq!(report.trace.count_touching(loc("d")), 0);
}

struct Zero(LocationSet);

impl Choreography<u32> for Zero {
    fn location_set(&self) -> LocationSet {
        self.0.clone()
    }

    fn run<O: ChoreoOp>(self, _op: &O) -> Result<u32> {
        Ok(0)
    }
}

struct CallZero {
    set: LocationSet,
    declared: LocationSet,
}

impl Choreography<u32> for CallZero {
    fn location_set(&self) -> LocationSet {
        self.set.clone()
    }

    fn run<O: ChoreoOp>(self, op: &O) -> Result<u32> {
        op.call(Zero(self.declared))
    }
}

#[test]
fn call_runs_sub_choreography_over_same_set() {
    let set = LocationSet::named(&["x", "y"]);
    let report = run_all(
        &set,
        |_| CallZero {
            set: set.clone(),
            declared: LocationSet::named(&["y", "x"]),
        },
        quick(),
    );
    assert_eq!(report.into_results().unwrap().into_values().collect::<Vec<_>>(), [0, 0]);

    let err = single_projector("x", &set)
        .epp_and_run(CallZero {
            set: set.clone(),
            declared: LocationSet::named(&["x"]),
        })
        .unwrap_err();
    assert_eq!(err.kind(), ErrorKind::DeclarationMismatch);
}

#[test]
fn projector_configuration() {
    let set = LocationSet::named(&["buyer", "seller"]);
    let mut eps = in_process_registry(&set);
    let seller_end = eps.remove(&loc("seller")).unwrap();
    let buyer_end = eps.remove(&loc("buyer")).unwrap();

    let err = Projector::new(loc("carol"), set.clone(), &buyer_end).err().unwrap();
    assert_eq!(err.kind(), ErrorKind::Configuration);
    let err = Projector::new(loc("buyer"), set.clone(), &seller_end).err().unwrap();
    assert_eq!(err.kind(), ErrorKind::Configuration);
    let wider = LocationSet::named(&["buyer", "seller", "mallory"]);
    let err = Projector::new(loc("buyer"), wider, &buyer_end).err().unwrap();
    assert_eq!(err.kind(), ErrorKind::Configuration);

    let p = Projector::new(loc("buyer"), set.clone(), &buyer_end).unwrap();
    assert_eq!(p.remote::<u8>(loc("buyer")).unwrap_err().kind(), ErrorKind::Misuse);
    assert_eq!(p.remote::<u8>(loc("carol")).unwrap_err().kind(), ErrorKind::LocationSetViolation);
    let seller_value: Located<u8> = p.remote(loc("seller")).unwrap();
    assert_eq!(p.unwrap(seller_value).unwrap_err().kind(), ErrorKind::ScopeViolation);
    assert_eq!(p.unwrap(p.local(3u8)).unwrap(), 3);

    // A choreography the target does not take part in.
    let err = p.epp_and_run(Zero(LocationSet::named(&["seller"]))).unwrap_err();
    assert_eq!(err.kind(), ErrorKind::Misuse);
    let err = p
        .epp_and_run(Zero(LocationSet::named(&["buyer", "carol"])))
        .unwrap_err();
    assert_eq!(err.kind(), ErrorKind::Configuration);
}

/// A transport stub that silently drops everything `a` sends to `b`.
struct Lossy<T>(T);

impl<T: Transport> Transport for Lossy<T> {
    fn location(&self) -> Location {
        self.0.location()
    }

    fn has_peer(&self, peer: Location) -> bool {
        self.0.has_peer(peer)
    }

    fn send(&self, to: Location, payload: &[u8]) -> Result<()> {
        if self.0.location() == loc("a") && to == loc("b") {
            return Ok(());
        }
        self.0.send(to, payload)
    }

    fn receive(&self, from: Location) -> Result<Vec<u8>> {
        self.0.receive(from)
    }
}

struct AThenB;

impl Choreography<Located<u8>> for AThenB {
    fn location_set(&self) -> LocationSet {
        LocationSet::named(&["a", "b"])
    }

    fn run<O: ChoreoOp>(self, op: &O) -> Result<Located<u8>> {
        let v = op.locally(loc("a"), |_| Ok(1u8))?;
        op.comm(loc("a"), loc("b"), &v)
    }
}

#[test]
fn harness_reports_starved_receives() {
    let set = LocationSet::named(&["a", "b"]);
    let endpoints = in_process_registry(&set)
        .into_iter()
        .map(|(l, t)| (l, Lossy(t.with_receive_timeout(Duration::from_millis(100)))))
        .collect();
    let report = run_on(&set, endpoints, |_| AThenB);
    assert!(report.completed(loc("a")));
    assert!(!report.completed(loc("b")));
    assert!(report.deadlocked());
    let blocked = report.blocked_receives();
    assert_eq!(blocked.len(), 1);
    assert_eq!((blocked[0].sender, blocked[0].receiver), (loc("a"), loc("b")));
    assert_eq!(report.error(loc("b")).unwrap().kind(), ErrorKind::Communication);
}

#[test]
fn harness_empty_choreography_completes_immediately() {
    let set = LocationSet::named(&["a", "b", "c"]);
    let report = run_all(&set, |_| Zero(set.clone()), RunOptions::default());
    assert!(report.all_completed());
    assert!(report.trace.is_empty());
    assert!(report.duration < Duration::from_secs(1));
}

#[test]
fn recorder_can_be_shared_by_hand() {
    let set = LocationSet::named(&["a", "b"]);
    let recorder = TraceRecorder::new();
    let endpoints = in_process_registry(&set)
        .into_iter()
        .map(|(l, t)| (l, CountingTransport::new(t, recorder.clone())))
        .collect();
    let report = run_on(&set, endpoints, |_| AThenB);
    assert!(report.all_completed());
    // The outer decorator and the harness's own one both saw the send.
    assert_eq!(recorder.snapshot().count(loc("a"), loc("b")), 1);
    assert_eq!(report.trace.count(loc("a"), loc("b")), 1);
}
