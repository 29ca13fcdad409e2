//! Trace properties: wrong writings, the per-protocol correctness conditions,
//! liveness counts, rounds and stabilization points.
//!
//! All link checks run in one pass over the events while tracking the
//! register contents, so checking costs about as much as simulating.

use std::fmt;

use serde::Serialize;

use crate::config::System;
use crate::model::{ModelError, ProcessId, RegisterId, RegisterKind, Symbol, Value};
use crate::protocol::{Action, ProtocolKind, Region};
use crate::scheduler::Trace;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Property {
    WrongWriting,
    ReadCheckingWrite,
    WeakRVMissedRead,
    QuasiRVExtraRead,
    QuasiRVMissedRead,
}

impl Property {
    pub fn name(self) -> &'static str {
        match self {
            Property::WrongWriting => "WrongWriting",
            Property::ReadCheckingWrite => "ReadCheckingWrite",
            Property::WeakRVMissedRead => "WeakRVMissedRead",
            Property::QuasiRVExtraRead => "QuasiRVExtraRead",
            Property::QuasiRVMissedRead => "QuasiRVMissedRead",
        }
    }
}

impl fmt::Display for Property {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// One property failure. `link = (a, b)` is the direction in which data flows:
/// `a` owns `Write_ab`, `b` reads it (and owns the echo register).
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub property: Property,
    pub step_index: u64,
    pub link: (ProcessId, ProcessId),
    pub detail: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "step {} link {}->{} {}: {}",
            self.step_index, self.link.0, self.link.1, self.property, self.detail
        )
    }
}

/// Which checks a scan performs.
#[derive(Clone, Copy)]
struct Scope {
    wrong_writings: bool,
    links: bool,
}

#[derive(Clone, Copy, Default)]
struct LinkState {
    /// Writes by the owner into this `Write` register so far.
    writes: u64,
    last_write: Option<u64>,
    /// Reads by the peer since `last_write`.
    reads_since: u32,
    /// Whether the open interval is subject to the rendezvous checks.
    checked: bool,
}

/// Per-register facts the scan needs, indexed by dense register index.
struct RegisterTable {
    ids: Vec<RegisterId>,
    /// For `Write_ab`: index of the register holding `b`'s grant
    /// (`Read_ba` or `CheckControl_ba`).
    grant: Vec<usize>,
}

impl RegisterTable {
    fn new(system: &System) -> Self {
        let ids: Vec<RegisterId> = (0..system.register_count()).map(|i| system.register_id(i)).collect();
        let grant_kind = system.kind().permission_register();
        let grant = ids
            .iter()
            .map(|id| {
                system
                    .index_of(RegisterId::new(grant_kind, id.peer, id.owner))
                    .expect("every link carries a grant register")
            })
            .collect();
        RegisterTable { ids, grant }
    }
}

fn scan(trace: &Trace, scope: Scope) -> Vec<Violation> {
    let system = &**trace.initial.system();
    let kind = system.kind();
    let n = system.n();
    let table = RegisterTable::new(system);
    let mut registers: Vec<Value> = trace.initial.registers().to_vec();
    let mut links = vec![LinkState::default(); system.register_count()];
    let mut counts = vec![0u64; n];
    let mut first_event: Vec<Option<u64>> = vec![None; n];
    let mut third_event: Vec<Option<u64>> = vec![None; n];
    // Last three own accesses per process, most recent first.
    let mut history: Vec<[Option<(Action, RegisterId)>; 3]> = vec![[None; 3]; n];
    let mut out = Vec::new();
    let grant_kind = kind.permission_register();

    let before = |slot: Option<u64>, idx: u64| slot.is_some_and(|s| s < idx);

    for e in &trace.events {
        let idx = e.step_index;
        let p = e.process;
        let reg = e.register;
        let ri = system.index_of(reg).expect("trace events name existing registers");

        if scope.wrong_writings && e.action == Action::Write && reg.kind == grant_kind {
            let q = reg.peer;
            let h = &history[p];
            let read_of = |slot: Option<(Action, RegisterId)>, k: RegisterKind| {
                slot == Some((Action::Read, RegisterId::new(k, q, p)))
            };
            let ok = match kind {
                ProtocolKind::WeakRendezvous => {
                    read_of(h[0], RegisterKind::Control) && read_of(h[1], RegisterKind::Write)
                }
                ProtocolKind::QuasiRendezvous => {
                    read_of(h[0], RegisterKind::Write)
                        && h[1] == Some((Action::Read, RegisterId::new(RegisterKind::CheckControl, p, q)))
                        && read_of(h[2], RegisterKind::Control)
                }
                _ => read_of(h[0], RegisterKind::Write),
            };
            if !ok {
                out.push(Violation {
                    property: Property::WrongWriting,
                    step_index: idx,
                    link: (q, p),
                    detail: format!("write of {} outside an update", reg),
                });
            }
        }

        if scope.links && reg.kind == RegisterKind::Write {
            let (a, b) = (reg.owner, reg.peer);
            let link = &mut links[ri];
            match e.action {
                Action::Write => {
                    match kind {
                        ProtocolKind::WeakRendezvous => {
                            if link.writes >= 2
                                && before(first_event[b], link.last_write.unwrap_or(0))
                                && link.reads_since == 0
                            {
                                out.push(Violation {
                                    property: Property::WeakRVMissedRead,
                                    step_index: idx,
                                    link: (a, b),
                                    detail: format!(
                                        "no read of {} since write #{} at step {}",
                                        reg,
                                        link.writes,
                                        link.last_write.unwrap_or(0)
                                    ),
                                });
                            }
                        }
                        ProtocolKind::QuasiRendezvous => {
                            if link.checked && link.reads_since == 0 {
                                out.push(Violation {
                                    property: Property::QuasiRVMissedRead,
                                    step_index: idx,
                                    link: (a, b),
                                    detail: format!(
                                        "no read of {} since write at step {}",
                                        reg,
                                        link.last_write.unwrap_or(0)
                                    ),
                                });
                            }
                            link.checked = link.writes >= 1
                                && before(third_event[a], idx)
                                && before(third_event[b], idx);
                        }
                        _ => {
                            let grant = registers[table.grant[ri]];
                            if link.writes >= 1 && before(first_event[b], idx) && grant != registers[ri] {
                                out.push(Violation {
                                    property: Property::ReadCheckingWrite,
                                    step_index: idx,
                                    link: (a, b),
                                    detail: format!(
                                        "wrote {} while {} = {} differs from {}",
                                        e.value,
                                        table.ids[table.grant[ri]],
                                        grant,
                                        registers[ri]
                                    ),
                                });
                            }
                        }
                    }
                    link.writes += 1;
                    link.last_write = Some(idx);
                    link.reads_since = 0;
                }
                Action::Read if p == b => {
                    link.reads_since = link.reads_since.saturating_add(1);
                    if kind == ProtocolKind::QuasiRendezvous && link.checked && link.reads_since == 2 {
                        out.push(Violation {
                            property: Property::QuasiRVExtraRead,
                            step_index: idx,
                            link: (a, b),
                            detail: format!(
                                "second read of {} since write at step {}",
                                reg,
                                link.last_write.unwrap_or(0)
                            ),
                        });
                    }
                }
                Action::Read => {}
            }
        }

        if e.action == Action::Write {
            registers[ri] = e.value;
        }
        let h = &mut history[p];
        h[2] = h[1];
        h[1] = h[0];
        h[0] = Some((e.action, reg));
        counts[p] += 1;
        if counts[p] == 1 {
            first_event[p] = Some(idx);
        }
        if counts[p] == 3 {
            third_event[p] = Some(idx);
        }
    }
    out
}

/// Every violation of every property the trace's protocol is subject to,
/// in step order.
pub fn check_trace(trace: &Trace) -> Vec<Violation> {
    scan(
        trace,
        Scope {
            wrong_writings: true,
            links: true,
        },
    )
}

/// Writes into a grant register (`Read`, or `CheckControl`) that do not end
/// the read sequence the listing prescribes right before them.
pub fn wrong_writings(trace: &Trace) -> Vec<Violation> {
    scan(
        trace,
        Scope {
            wrong_writings: true,
            links: false,
        },
    )
}

fn link_check(
    trace: &Trace,
    a: ProcessId,
    b: ProcessId,
    kinds: &[ProtocolKind],
) -> Result<Vec<Violation>, ModelError> {
    let system = trace.initial.system();
    if !kinds.contains(&system.kind()) {
        return Err(ModelError::Protocol(format!(
            "this check does not apply to {}",
            system.kind()
        )));
    }
    if a >= system.n() || b >= system.n() || !system.topology().are_neighbors(a, b) {
        return Err(ModelError::NotAnEdge(a, b));
    }
    let mut v = scan(
        trace,
        Scope {
            wrong_writings: false,
            links: true,
        },
    );
    v.retain(|v| v.link == (a, b));
    Ok(v)
}

/// Writes by `a` into `Write_ab` made while `b` did not allow them.
pub fn check_read_checking(trace: &Trace, a: ProcessId, b: ProcessId) -> Result<Vec<Violation>, ModelError> {
    link_check(
        trace,
        a,
        b,
        &[ProtocolKind::ReadChecking, ProtocolKind::Basic2P, ProtocolKind::NaivePairing],
    )
}

/// Consecutive writes of `Write_ab` with no read by `b` in between.
pub fn check_weak_rendezvous(trace: &Trace, a: ProcessId, b: ProcessId) -> Result<Vec<Violation>, ModelError> {
    link_check(trace, a, b, &[ProtocolKind::WeakRendezvous])
}

/// Complete-writing intervals of `Write_ab` not read exactly once by `b`.
pub fn check_quasi_rendezvous(trace: &Trace, a: ProcessId, b: ProcessId) -> Result<Vec<Violation>, ModelError> {
    link_check(trace, a, b, &[ProtocolKind::QuasiRendezvous])
}

/// Values `b` obtained from `Write_ab`, at or after `from_step`.
pub fn delivered_word(trace: &Trace, a: ProcessId, b: ProcessId, from_step: u64) -> Vec<Symbol> {
    trace
        .events
        .iter()
        .filter(|e| {
            e.step_index >= from_step
                && e.process == b
                && e.action == Action::Read
                && e.register == RegisterId::new(RegisterKind::Write, a, b)
        })
        .filter_map(|e| e.value.as_symbol())
        .collect()
}

/// Step indices of `a`'s writes into `Write_ab`.
pub fn write_steps(trace: &Trace, a: ProcessId, b: ProcessId) -> Vec<u64> {
    let reg = RegisterId::new(RegisterKind::Write, a, b);
    trace
        .events
        .iter()
        .filter(|e| e.action == Action::Write && e.register == reg)
        .map(|e| e.step_index)
        .collect()
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct ProcessLiveness {
    pub steps: u64,
    /// Writes into `Write_{p, neighbors[slot]}`, by slot.
    pub writes: Vec<u64>,
    /// Transitions from the repeat loop back into the write phase.
    pub loop_exits: u64,
}

pub fn liveness_stats(trace: &Trace) -> Vec<ProcessLiveness> {
    let system = trace.initial.system();
    let topo = system.topology();
    let mut stats: Vec<ProcessLiveness> = (0..system.n())
        .map(|p| ProcessLiveness {
            writes: vec![0; topo.degree(p)],
            ..Default::default()
        })
        .collect();
    for e in &trace.events {
        let s = &mut stats[e.process];
        s.steps += 1;
        if e.action == Action::Write && e.register.kind == RegisterKind::Write {
            let slot = topo.slot_of(e.process, e.register.peer).expect("own register");
            s.writes[slot] += 1;
        }
        let program = system.program(e.process);
        if program.location(e.pc_before).region == Region::Loop
            && program.location(e.pc_after).region == Region::WritePhase
        {
            s.loop_exits += 1;
        }
    }
    stats
}

/// Per-process step quota of one round.
pub fn round_quota(system: &System) -> u64 {
    6 * system.topology().max_degree() as u64
}

/// Greedy round decomposition: each returned value is the exclusive end
/// index of a round, i.e. the first step at which every process has made
/// [`round_quota`] steps since the round began.
pub fn rounds(trace: &Trace) -> Vec<u64> {
    let system = trace.initial.system();
    let quota = round_quota(system);
    let n = system.n();
    let mut counts = vec![0u64; n];
    let mut short = n;
    let mut boundaries = Vec::new();
    for (i, e) in trace.events.iter().enumerate() {
        counts[e.process] += 1;
        if counts[e.process] == quota {
            short -= 1;
        }
        if short == 0 {
            boundaries.push(i as u64 + 1);
            counts.iter_mut().for_each(|c| *c = 0);
            short = n;
        }
    }
    boundaries
}

/// Number of rounds needed to cover the first `step` events.
pub fn rounds_to_cover(boundaries: &[u64], step: u64) -> u64 {
    if step == 0 {
        0
    } else {
        boundaries.iter().filter(|&&b| b < step).count() as u64 + 1
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct LinkStabilization {
    pub link: (ProcessId, ProcessId),
    pub violations: u64,
    /// One past the last violation on this link (0 when clean).
    pub raw_step: u64,
    /// `raw_step` if the clean suffix is at least the settle window long.
    pub step: Option<u64>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct StabilizationReport {
    pub trace_len: u64,
    pub settle_window: u64,
    pub links: Vec<LinkStabilization>,
    pub global_raw_step: u64,
    pub global_step: Option<u64>,
    pub rounds_to_stabilize: Option<u64>,
    /// Always set: a finite trace can only bound stabilization from above.
    pub finite_trace_caveat: bool,
}

impl StabilizationReport {
    pub fn converged(&self) -> bool {
        self.global_step.is_some()
    }
}

/// Stabilization with the default settle window of half the trace.
pub fn stabilization_report(trace: &Trace) -> StabilizationReport {
    let violations = check_trace(trace);
    stabilization_from(trace, &violations, trace.len() as u64 / 2)
}

/// Stabilization points given precomputed violations. A link counts as
/// stabilized when its violation-free suffix spans at least `settle_window`
/// events.
pub fn stabilization_from(trace: &Trace, violations: &[Violation], settle_window: u64) -> StabilizationReport {
    let system = trace.initial.system();
    let len = trace.len() as u64;
    let mut links: Vec<LinkStabilization> = system
        .topology()
        .directed_links()
        .map(|link| LinkStabilization {
            link,
            violations: 0,
            raw_step: 0,
            step: None,
        })
        .collect();
    let position = |link: (ProcessId, ProcessId)| links.iter().position(|l| l.link == link);
    let mut tallies = vec![(0u64, 0u64); links.len()];
    for v in violations {
        if let Some(i) = position(v.link) {
            tallies[i].0 += 1;
            tallies[i].1 = tallies[i].1.max(v.step_index + 1);
        }
    }
    for (l, (count, raw)) in links.iter_mut().zip(tallies) {
        l.violations = count;
        l.raw_step = raw;
        l.step = (len - raw >= settle_window).then_some(raw);
    }
    let global_raw_step = links.iter().map(|l| l.raw_step).max().unwrap_or(0);
    let global_step = if links.iter().all(|l| l.step.is_some()) {
        Some(global_raw_step)
    } else {
        None
    };
    let boundaries = rounds(trace);
    StabilizationReport {
        trace_len: len,
        settle_window,
        links,
        global_raw_step,
        global_step,
        rounds_to_stabilize: global_step.map(|s| rounds_to_cover(&boundaries, s)),
        finite_trace_caveat: true,
    }
}

/// Wrong writings that come at or after their process's second write into a
/// grant register. The listing admits at most one, and only as a first action.
pub fn late_wrong_writings(trace: &Trace, violations: &[Violation]) -> Vec<Violation> {
    let system = trace.initial.system();
    let grant_kind = system.kind().permission_register();
    let mut second = vec![u64::MAX; system.n()];
    let mut seen = vec![0u32; system.n()];
    for e in &trace.events {
        if e.action == Action::Write && e.register.kind == grant_kind {
            seen[e.process] += 1;
            if seen[e.process] == 2 {
                second[e.process] = e.step_index;
            }
        }
    }
    violations
        .iter()
        .filter(|v| v.property == Property::WrongWriting && v.step_index >= second[v.link.1])
        .cloned()
        .collect()
}

/// Steps at which a granted permission was withdrawn by anything other than
/// the writer's own next write (`Write_ab` for read checking, `Control_ab`
/// for the rendezvous variants). Only links whose reader has already acted
/// are considered, and only events at or after `from_step`.
pub fn permission_breaks(trace: &Trace, from_step: u64) -> Vec<(u64, (ProcessId, ProcessId))> {
    let system = &**trace.initial.system();
    let alternating = system.kind().uses_alternating_bit();
    let (mine, theirs) = if alternating {
        (RegisterKind::Control, RegisterKind::CheckControl)
    } else {
        (RegisterKind::Write, RegisterKind::Read)
    };
    let links: Vec<(ProcessId, ProcessId)> = system.topology().directed_links().collect();
    let index = |k: RegisterKind, o: ProcessId, p: ProcessId| {
        system.index_of(RegisterId::new(k, o, p)).expect("link register")
    };
    let pairs: Vec<(usize, usize)> = links
        .iter()
        .map(|&(a, b)| (index(mine, a, b), index(theirs, b, a)))
        .collect();
    let mut registers = trace.initial.registers().to_vec();
    let mut acted = vec![false; system.n()];
    let mut allowed: Vec<bool> = pairs.iter().map(|&(m, t)| registers[m] == registers[t]).collect();
    let mut out = Vec::new();
    for e in &trace.events {
        acted[e.process] = true;
        if e.action != Action::Write {
            continue;
        }
        let ri = system.index_of(e.register).expect("trace register");
        registers[ri] = e.value;
        for (li, &(m, t)) in pairs.iter().enumerate() {
            if m != ri && t != ri {
                continue;
            }
            let now = registers[m] == registers[t];
            let (a, b) = links[li];
            let own_write = ri == m && e.process == a;
            if allowed[li] && !now && !own_write && acted[b] && e.step_index >= from_step {
                out.push((e.step_index, (a, b)));
            }
            allowed[li] = now;
        }
    }
    out
}
