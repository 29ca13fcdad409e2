//! Property tests over random systems, corrupted starts and schedules.

use std::collections::{BTreeSet, HashMap};
use std::sync::Arc;

use linkstab::checker::{self, Property, Violation};
use linkstab::config::{Configuration, System};
use linkstab::explorer::{self, ExploreOptions, Verdict};
use linkstab::model::{ProcessId, RegisterId, RegisterKind, Symbol, Value};
use linkstab::protocol::{Action, LocalVar, ProtocolKind};
use linkstab::scheduler::{run, PolicySpec, SchedulerPolicy, Trace};
use linkstab::topology::Topology;
use proptest::prelude::*;

fn kind() -> impl Strategy<Value = ProtocolKind> {
    prop_oneof![
        Just(ProtocolKind::Basic2P),
        Just(ProtocolKind::ReadChecking),
        Just(ProtocolKind::WeakRendezvous),
        Just(ProtocolKind::QuasiRendezvous),
    ]
}

fn policy() -> impl Strategy<Value = PolicySpec> {
    prop_oneof![
        Just(PolicySpec::RoundRobin),
        Just(PolicySpec::RandomFair),
        (1usize..4).prop_map(|k| PolicySpec::Adversary { k }),
    ]
}

#[derive(Debug, Clone)]
struct Case {
    kind: ProtocolKind,
    n: usize,
    gnp: bool,
    script: String,
    policy: PolicySpec,
    seed: u64,
    fraction: f64,
    steps: usize,
}

impl Case {
    fn system(&self) -> Arc<System> {
        let topo = if self.kind == ProtocolKind::Basic2P {
            Topology::ring(2)
        } else if self.gnp {
            Topology::gnp(self.n, 0.5, self.seed)
        } else {
            Topology::ring(self.n)
        };
        System::builder(self.kind, topo.unwrap()).script(self.script.clone()).build().unwrap()
    }

    fn trace(&self) -> Trace {
        let sys = self.system();
        let start = Configuration::canonical(&sys).corrupt(self.fraction, self.seed).unwrap();
        run(&start, &mut self.policy.build(self.seed).unwrap(), self.steps).unwrap()
    }
}

fn case(max_steps: usize) -> impl Strategy<Value = Case> {
    (
        kind(),
        2usize..6,
        any::<bool>(),
        "[abc]{1,5}",
        policy(),
        any::<u64>(),
        prop_oneof![Just(0.0), Just(1.0), 0.0..1.0f64],
        100..max_steps,
    )
        .prop_map(|(kind, n, gnp, script, policy, seed, fraction, steps)| Case {
            kind,
            n,
            gnp,
            script,
            policy,
            seed,
            fraction,
            steps,
        })
}

type Key = (Property, u64, (ProcessId, ProcessId));

/// Link properties recomputed from per-link write and read index lists, with
/// register values looked up by searching backwards through the trace.
fn oracle(trace: &Trace) -> BTreeSet<Key> {
    let system = trace.initial.system();
    let kind = system.kind();
    let ev = &trace.events;
    let nth_event = |p: ProcessId, k: usize| ev.iter().filter(|e| e.process == p).nth(k).map(|e| e.step_index);
    let value_before = |reg: RegisterId, t: u64| -> Value {
        ev[..t as usize]
            .iter()
            .rev()
            .find(|e| e.action == Action::Write && e.register == reg)
            .map(|e| e.value)
            .unwrap_or_else(|| trace.initial.read_register(reg).unwrap())
    };
    let mut out = BTreeSet::new();
    for (a, b) in system.topology().directed_links() {
        let w = RegisterId::new(RegisterKind::Write, a, b);
        let writes: Vec<u64> = ev
            .iter()
            .filter(|e| e.action == Action::Write && e.register == w)
            .map(|e| e.step_index)
            .collect();
        let reads: Vec<u64> = ev
            .iter()
            .filter(|e| e.action == Action::Read && e.register == w && e.process == b)
            .map(|e| e.step_index)
            .collect();
        let reads_in = |lo: u64, hi: u64| -> Vec<u64> { reads.iter().copied().filter(|&r| r > lo && r < hi).collect() };
        let b_first = nth_event(b, 0);
        let (a_third, b_third) = (nth_event(a, 2), nth_event(b, 2));
        match kind {
            ProtocolKind::ReadChecking | ProtocolKind::Basic2P => {
                let grant = RegisterId::new(RegisterKind::Read, b, a);
                for &t in writes.iter().skip(1) {
                    if b_first.is_some_and(|f| f < t) && value_before(grant, t) != value_before(w, t) {
                        out.insert((Property::ReadCheckingWrite, t, (a, b)));
                    }
                }
            }
            ProtocolKind::WeakRendezvous => {
                for k in 2..writes.len() {
                    let prev = writes[k - 1];
                    if b_first.is_some_and(|f| f < prev) && reads_in(prev, writes[k]).is_empty() {
                        out.insert((Property::WeakRVMissedRead, writes[k], (a, b)));
                    }
                }
            }
            ProtocolKind::QuasiRendezvous => {
                for k in 1..writes.len() {
                    let open = writes[k];
                    if !(a_third.is_some_and(|s| s < open) && b_third.is_some_and(|s| s < open)) {
                        continue;
                    }
                    let close = writes.get(k + 1).copied();
                    let inside = reads_in(open, close.unwrap_or(u64::MAX));
                    if let (Some(c), true) = (close, inside.is_empty()) {
                        out.insert((Property::QuasiRVMissedRead, c, (a, b)));
                    }
                    if inside.len() >= 2 {
                        out.insert((Property::QuasiRVExtraRead, inside[1], (a, b)));
                    }
                }
            }
            ProtocolKind::NaivePairing => unreachable!("not generated"),
        }
    }
    out
}

fn keys(v: &[Violation]) -> BTreeSet<Key> {
    v.iter()
        .filter(|v| v.property != Property::WrongWriting)
        .map(|v| (v.property, v.step_index, v.link))
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn checker_agrees_with_oracle_on_link_properties(c in case(1500)) {
        let trace = c.trace();
        prop_assert_eq!(keys(&checker::check_trace(&trace)), oracle(&trace));
    }

    #[test]
    fn control_bits_alternate(c in case(3000)) {
        prop_assume!(c.kind.uses_alternating_bit());
        let trace = c.trace();
        let mut last: HashMap<RegisterId, Value> = HashMap::new();
        for e in trace.events.iter().filter(|e| e.action == Action::Write && e.register.kind == RegisterKind::Control) {
            if let Some(prev) = last.insert(e.register, e.value) {
                prop_assert_ne!(prev, e.value, "step {}", e.step_index);
            }
        }
    }

    #[test]
    fn prefixes_see_prefix_violations(c in case(2000), cut in 0.0..1.0f64) {
        let trace = c.trace();
        let k = (trace.len() as f64 * cut) as usize;
        let prefix = run(&trace.initial, &mut PolicySpec::Scripted(trace.schedule()).build(0).unwrap(), k).unwrap();
        let full = checker::check_trace(&trace);
        let expected: Vec<&Violation> = full.iter().filter(|v| (v.step_index as usize) < k).collect();
        let got = checker::check_trace(&prefix);
        prop_assert_eq!(got.iter().collect::<Vec<_>>(), expected);
        prop_assert!(
            checker::stabilization_report(&prefix).global_raw_step
                <= checker::stabilization_report(&trace).global_raw_step
        );
    }

    #[test]
    fn clean_starts_are_clean_and_keep_permissions(c in case(3000)) {
        prop_assume!(c.kind != ProtocolKind::WeakRendezvous);
        let sys = c.system();
        let trace = run(&Configuration::canonical(&sys), &mut c.policy.build(c.seed).unwrap(), c.steps).unwrap();
        prop_assert_eq!(checker::check_trace(&trace), vec![]);
        prop_assert_eq!(checker::permission_breaks(&trace, 0), vec![]);
    }

    #[test]
    fn at_most_one_wrong_writing_per_link_and_only_early(c in case(3000)) {
        let trace = c.trace();
        let v = checker::check_trace(&trace);
        prop_assert_eq!(checker::late_wrong_writings(&trace, &v), vec![]);
        let mut per_link: HashMap<(ProcessId, ProcessId), u32> = HashMap::new();
        for w in v.iter().filter(|v| v.property == Property::WrongWriting) {
            *per_link.entry(w.link).or_default() += 1;
        }
        prop_assert!(per_link.values().all(|&k| k <= 1), "{:?}", per_link);
    }

    #[test]
    fn liveness_counts_are_pure(c in case(1500)) {
        let trace = c.trace();
        prop_assert_eq!(checker::liveness_stats(&trace), checker::liveness_stats(&trace.clone()));
        prop_assert!(trace.verify_replay().is_ok());
    }
}

/// Every program counter pair of a two-process instance, with otherwise
/// random state: wrong writings only happen before the second grant write,
/// at most once per process.
#[test]
fn wrong_writing_pc_sweep() {
    for kind in [
        ProtocolKind::Basic2P,
        ProtocolKind::WeakRendezvous,
        ProtocolKind::QuasiRendezvous,
    ] {
        let sys = System::builder(kind, Topology::ring(2).unwrap()).script("ab").build().unwrap();
        let pcs = sys.pc_count(0);
        for pc0 in 0..pcs {
            for pc1 in 0..pcs {
                for seed in 0..4u64 {
                    let mut start = Configuration::random(&sys, seed * 1000 + (pc0 * pcs + pc1) as u64);
                    start.process_mut(0).pc = pc0;
                    start.process_mut(1).pc = pc1;
                    let policy = if seed == 0 { PolicySpec::RoundRobin } else { PolicySpec::RandomFair };
                    let trace = run(&start, &mut policy.build(seed).unwrap(), 400).unwrap();
                    let v = checker::check_trace(&trace);
                    assert_eq!(checker::late_wrong_writings(&trace, &v), vec![], "{kind} pcs ({pc0}, {pc1}) seed {seed}");
                    for p in 0..2 {
                        let mine = v.iter().filter(|w| w.property == Property::WrongWriting && w.link.1 == p).count();
                        assert!(mine <= 1, "{kind} pcs ({pc0}, {pc1}) seed {seed}: {mine} wrong writings by {p}");
                    }
                }
            }
        }
    }
}

/// A corrupted start converges on every link within a long enough run.
#[test]
fn corrupted_starts_converge() {
    for kind in [ProtocolKind::ReadChecking, ProtocolKind::QuasiRendezvous] {
        let sys = System::builder(kind, Topology::ring(4).unwrap()).build().unwrap();
        for seed in 0..200u64 {
            let start = Configuration::canonical(&sys).corrupt(1.0, seed).unwrap();
            let trace = run(&start, &mut PolicySpec::RandomFair.build(seed).unwrap(), 4_000).unwrap();
            let report = checker::stabilization_report(&trace);
            assert!(report.converged(), "{kind} seed {seed}: {report:?}");
            assert!(report.links.iter().all(|l| l.step.is_some()));
        }
    }
}

/// Splices a mid-run corruption into one trace: `tail` continues from
/// `head`'s final configuration after `corrupt` has been applied to it.
fn spliced(head: Trace, corrupt: impl FnOnce(&mut Configuration), tail: Vec<usize>) -> Trace {
    let mut middle = head.final_config.clone();
    corrupt(&mut middle);
    let len = tail.len();
    let rest = run(&middle, &mut SchedulerPolicy::scripted(tail), len).unwrap();
    let offset = head.events.len() as u64;
    let mut events = head.events;
    events.extend(rest.events.into_iter().map(|mut e| {
        e.step_index += offset;
        e
    }));
    Trace {
        initial: head.initial,
        events,
        final_config: rest.final_config,
    }
}

#[test]
fn stale_val_lets_read_checking_write_too_early() {
    let sys = System::builder(ProtocolKind::Basic2P, Topology::ring(2).unwrap()).script("ab").build().unwrap();
    // B acts once; A writes a, leaves the loop, writes b, then reads val = a.
    let mut schedule = vec![1];
    schedule.extend([0; 9]);
    let head = run(&Configuration::canonical(&sys), &mut SchedulerPolicy::scripted(schedule), 10).unwrap();
    assert_eq!(head.final_config.process(0).pc, 4);
    let trace = spliced(
        head,
        |c| c.process_mut(0).locals[0].set(LocalVar::Val, Value::Message(Symbol(1))),
        vec![0, 0],
    );
    let v = checker::check_trace(&trace);
    assert_eq!(v.len(), 1, "{v:?}");
    assert_eq!((v[0].property, v[0].step_index, v[0].link), (Property::ReadCheckingWrite, 11, (0, 1)));
    assert_eq!(keys(&v), oracle(&trace));
}

/// The oracle comparison is not vacuous: every rendezvous property occurs in
/// some trace, and the two implementations agree there. The read checking
/// case is covered by the stale `val` splice above.
#[test]
fn oracle_agreement_covers_every_link_property() {
    let mut seen = BTreeSet::new();
    for kind in [ProtocolKind::ReadChecking, ProtocolKind::WeakRendezvous, ProtocolKind::QuasiRendezvous] {
        let sys = System::builder(kind, Topology::ring(3).unwrap()).script("ab").build().unwrap();
        for seed in 0..300u64 {
            let start = Configuration::random(&sys, seed);
            let policy = if seed % 2 == 0 { PolicySpec::RandomFair } else { PolicySpec::Adversary { k: 2 } };
            let trace = run(&start, &mut policy.build(seed).unwrap(), 600).unwrap();
            let got = keys(&checker::check_trace(&trace));
            assert_eq!(got, oracle(&trace), "{kind} seed {seed}");
            seen.extend(got.into_iter().map(|k| k.0));
        }
    }
    // the quasi rendezvous violations need the explorer's adversarial cycle
    let sys = System::builder(ProtocolKind::QuasiRendezvous, Topology::ring(2).unwrap())
        .alphabet("ab".parse().unwrap())
        .script("ab")
        .build()
        .unwrap();
    let graph = explorer::build_state_graph(&sys, ExploreOptions::default()).unwrap();
    let legit = explorer::legitimate_set(&graph);
    let Verdict::Counterexample(cx) = explorer::verify_convergence(&graph, &legit).unwrap() else {
        panic!("expected a counterexample");
    };
    let (start, _) = graph.space().decode(cx.start);
    let schedule: Vec<usize> = cx.cycle.iter().copied().cycle().take(cx.cycle.len() * 4).collect();
    let trace = run(&start, &mut SchedulerPolicy::scripted(schedule), cx.cycle.len() * 4).unwrap();
    let got = keys(&checker::check_trace(&trace));
    assert_eq!(got, oracle(&trace));
    seen.extend(got.into_iter().map(|k| k.0));

    for p in [Property::WeakRVMissedRead, Property::QuasiRVExtraRead, Property::QuasiRVMissedRead] {
        assert!(seen.contains(&p), "{p} never occurred; seen {seen:?}");
    }
}
