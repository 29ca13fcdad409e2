use std::sync::Arc;

use linkstab::checker::{self, Property};
use linkstab::config::{Configuration, System};
use linkstab::explorer::{self, CounterexampleKind, ExploreOptions, StateGraph, Verdict};
use linkstab::protocol::ProtocolKind;
use linkstab::scheduler::{run, SchedulerPolicy};
use linkstab::topology::Topology;

fn system(kind: ProtocolKind, n: usize, script: &str) -> Arc<System> {
    System::builder(kind, Topology::ring(n).unwrap())
        .alphabet("ab".parse().unwrap())
        .script(script)
        .build()
        .unwrap()
}

fn graph(sys: &Arc<System>, canonicalize: bool) -> StateGraph {
    explorer::build_state_graph(sys, ExploreOptions {
        canonicalize,
        cap: explorer::DEFAULT_CAP,
    })
    .unwrap()
}

fn legit_count(legit: &[bool]) -> usize {
    legit.iter().filter(|&&b| b).count()
}

#[test]
fn basic_node_count_matches_domain_inventory() {
    // 4 message registers over {a, b}; per process 5 locations times the
    // locals r, s, val over {a, b}; cursors over a length-1 script are fixed.
    let registers = 2u64.pow(4);
    let per_process = 5 * 2u64.pow(3);
    let sys = system(ProtocolKind::Basic2P, 2, "a");
    let g = graph(&sys, false);
    assert_eq!(g.node_count(), registers * per_process * per_process);
    for v in 0..g.node_count() {
        for p in 0..g.processes() {
            assert!(g.successor(v, p) < g.node_count());
        }
    }
}

#[test]
fn canonicalization_preserves_the_verdict() {
    let sys = system(ProtocolKind::Basic2P, 2, "a");
    for canonicalize in [false, true] {
        let g = graph(&sys, canonicalize);
        let legit = explorer::legitimate_set(&g);
        assert!(legit[g.clean_node_of(&Configuration::canonical(&sys)) as usize]);
        assert_eq!(explorer::verify_convergence(&g, &legit).unwrap(), Verdict::Verified);
    }
}

#[test]
fn legitimate_set_is_closed_and_smaller_than_violation_free() {
    let sys = system(ProtocolKind::QuasiRendezvous, 2, "ab");
    let g = graph(&sys, true);
    let legit = explorer::legitimate_set(&g);
    let free = g.violation_free_nodes();
    for v in (0..g.node_count()).filter(|&v| legit[v as usize]) {
        assert!(free[v as usize]);
        for p in 0..2 {
            assert!(!g.is_violation(v, p));
            assert!(legit[g.successor(v, p) as usize]);
        }
    }
    assert!(legit_count(&legit) < legit_count(&free));
}

/// The explorer's quasi rendezvous counterexample is a real behaviour: the
/// cycle replayed through the interpreter keeps producing read violations.
#[test]
fn quasi_rendezvous_cycle_replays_with_violations() {
    let sys = system(ProtocolKind::QuasiRendezvous, 2, "ab");
    let g = graph(&sys, true);
    let legit = explorer::legitimate_set(&g);
    assert!(legit[g.clean_node_of(&Configuration::canonical(&sys)) as usize]);
    let Verdict::Counterexample(cx) = explorer::verify_convergence(&g, &legit).unwrap() else {
        panic!("expected a counterexample");
    };
    assert_eq!(cx.kind, CounterexampleKind::NonConvergence);
    g.check_counterexample(&cx, &legit).unwrap();

    let (start, _) = g.space().decode(cx.start);
    let reps = 6;
    let schedule: Vec<usize> = cx.cycle.iter().copied().cycle().take(cx.cycle.len() * reps).collect();
    let trace = run(&start, &mut SchedulerPolicy::scripted(schedule), cx.cycle.len() * reps).unwrap();
    let late: Vec<_> = checker::check_trace(&trace)
        .into_iter()
        .filter(|v| v.step_index as usize >= cx.cycle.len() * (reps - 1))
        .collect();
    assert!(late.iter().any(|v| v.property == Property::QuasiRVMissedRead), "{late:?}");
    assert!(late.iter().any(|v| v.property == Property::QuasiRVExtraRead), "{late:?}");
}

#[test]
fn weak_rendezvous_has_no_legitimate_configuration() {
    let sys = system(ProtocolKind::WeakRendezvous, 2, "a");
    let g = graph(&sys, true);
    let legit = explorer::legitimate_set(&g);
    assert_eq!(legit_count(&legit), 0);
    assert_eq!(
        explorer::verify_convergence(&g, &legit),
        Err(explorer::ExploreError::EmptyLegitimateSet)
    );
}
