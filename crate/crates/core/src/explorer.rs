//! Exhaustive state-space exploration for instances of up to three processes.
//!
//! Nodes are whole configurations packed into a mixed-radix integer, so the
//! graph is a flat successor table `succ[node * n + p]`. Two reductions keep
//! it small without changing behaviour:
//!
//! * Dead locals are zeroed. A local that is overwritten before it is next
//!   used (per a backward liveness pass over the step program) cannot affect
//!   the future, so configurations differing only there are merged.
//! * Trace properties that need history (reads since the last write) are
//!   tracked by a small per-link monitor that is part of the node.
//!
//! The legitimate set is the set of nodes from which no violation arc is
//! reachable, i.e. the greatest closed violation-free set.

use std::collections::{HashMap, VecDeque};
use std::sync::Arc;

use thiserror::Error;

use crate::config::{Configuration, System};
use crate::model::{ProcessId, RegisterId, RegisterKind};
use crate::protocol::{Action, Event, LocalVar, Next, ProtocolKind, Step, StepProgram, ValueExpr};

pub const DEFAULT_CAP: u64 = 10_000_000;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ExploreError {
    #[error("exhaustive exploration supports at most 3 processes, got {0}")]
    TooManyProcesses(usize),
    #[error("state space has {estimate} nodes, above the cap of {cap}")]
    SizeCap { estimate: u128, cap: u64 },
    #[error("the legitimate set is empty")]
    EmptyLegitimateSet,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ExploreOptions {
    /// Merge configurations that differ only in dead locals.
    pub canonicalize: bool,
    pub cap: u64,
}

impl Default for ExploreOptions {
    fn default() -> Self {
        ExploreOptions {
            canonicalize: true,
            cap: DEFAULT_CAP,
        }
    }
}

/// Bit set over `(slot, variable)` pairs of one process.
type VarSet = u64;

fn var_bit(slot: usize, var: LocalVar) -> VarSet {
    1 << (slot * 7 + var as usize)
}

/// Locals live on entry to each location.
fn live_locals(program: &StepProgram) -> Vec<VarSet> {
    let len = program.len();
    let degree = program.degree();
    let mut uses_step = vec![0; len];
    let mut defs = vec![0; len];
    let mut uses_next = vec![0; len];
    let mut succs: Vec<Vec<usize>> = vec![Vec::new(); len];
    for (pc, loc) in program.locations().iter().enumerate() {
        let i = loc.neighbor;
        match loc.step {
            Step::Read { into, .. } => defs[pc] = var_bit(i, into),
            Step::Write { value, .. } => {
                if let ValueExpr::Local(v) | ValueExpr::Flipped(v) = value {
                    uses_step[pc] = var_bit(i, v);
                }
            }
        }
        match loc.next {
            Next::Fallthrough => succs[pc].push(pc + 1),
            Next::SkipIfEqual { left, right, target } => {
                uses_next[pc] = var_bit(i, left) | var_bit(i, right);
                succs[pc].extend([pc + 1, target]);
            }
            Next::Until { left, right, exit, again } => {
                uses_next[pc] = (0..degree).fold(0, |acc, j| acc | var_bit(j, left) | var_bit(j, right));
                succs[pc].extend([exit, again]);
            }
            Next::LinkUntil { left, right, exit, again } => {
                uses_next[pc] = var_bit(i, left) | var_bit(i, right);
                succs[pc].extend([exit, again]);
            }
        }
    }
    let mut live = vec![0; len];
    loop {
        let mut changed = false;
        for pc in (0..len).rev() {
            let out = succs[pc].iter().fold(uses_next[pc], |acc, &s| acc | live[s]);
            let inn = uses_step[pc] | (out & !defs[pc]);
            if inn != live[pc] {
                live[pc] = inn;
                changed = true;
            }
        }
        if !changed {
            return live;
        }
    }
}

/// Dense numbering of one process's `(pc, locals)` states.
#[derive(Debug)]
struct ProcessTable {
    /// Variables encoded at each pc, with their domain sizes.
    vars: Vec<Vec<(usize, LocalVar, u64)>>,
    offset: Vec<u64>,
    total: u64,
}

/// Mixed-radix codec between configurations (plus monitors) and node ids.
#[derive(Debug)]
pub struct StateSpace {
    system: Arc<System>,
    canonical: bool,
    register_radix: Vec<u64>,
    processes: Vec<ProcessTable>,
    /// `(process, slot, script length)`.
    cursors: Vec<(ProcessId, usize, u64)>,
    monitor_radix: u64,
    /// Dense index of `Write_ab` for every directed link, and the reverse map.
    link_write: Vec<usize>,
    link_of_register: Vec<Option<usize>>,
    /// For `Write_ab`: index of the grant register `Read_ba`.
    grant_of_write: Vec<usize>,
    size: u64,
}

impl StateSpace {
    pub fn new(system: &Arc<System>, options: ExploreOptions) -> Result<Self, ExploreError> {
        let n = system.n();
        if n > 3 {
            return Err(ExploreError::TooManyProcesses(n));
        }
        let sigma = system.alphabet();
        let register_radix: Vec<u64> = (0..system.register_count())
            .map(|i| system.register_id(i).kind.domain().size(sigma) as u64)
            .collect();
        let vars = system.kind().local_vars();
        let processes = (0..n)
            .map(|p| {
                let program = system.program(p);
                let degree = program.degree();
                let live = live_locals(program);
                let mut table = ProcessTable {
                    vars: Vec::new(),
                    offset: Vec::new(),
                    total: 0,
                };
                for live_set in live.iter().take(program.len()) {
                    let mut at_pc = Vec::new();
                    for slot in 0..degree {
                        for &v in vars {
                            if !options.canonicalize || live_set & var_bit(slot, v) != 0 {
                                at_pc.push((slot, v, v.domain().size(sigma) as u64));
                            }
                        }
                    }
                    let states: u64 = at_pc.iter().map(|&(_, _, r)| r).product();
                    table.offset.push(table.total);
                    table.total += states;
                    table.vars.push(at_pc);
                }
                table
            })
            .collect::<Vec<_>>();
        let cursors: Vec<(ProcessId, usize, u64)> = (0..n)
            .flat_map(|p| {
                let system = system.clone();
                (0..system.topology().degree(p)).map(move |slot| (p, slot, system.script(p, slot).len() as u64))
            })
            .collect();
        let monitor_radix = match system.kind() {
            ProtocolKind::WeakRendezvous => 2,
            ProtocolKind::QuasiRendezvous => 3,
            _ => 1,
        };
        let links: Vec<(ProcessId, ProcessId)> = system.topology().directed_links().collect();
        let link_write: Vec<usize> = links
            .iter()
            .map(|&(a, b)| {
                system
                    .index_of(RegisterId::new(RegisterKind::Write, a, b))
                    .expect("link register")
            })
            .collect();
        let mut link_of_register = vec![None; system.register_count()];
        for (l, &w) in link_write.iter().enumerate() {
            link_of_register[w] = Some(l);
        }
        let grant_kind = system.kind().permission_register();
        let grant_of_write = (0..system.register_count())
            .map(|i| {
                let id = system.register_id(i);
                system
                    .index_of(RegisterId::new(grant_kind, id.peer, id.owner))
                    .expect("grant register")
            })
            .collect();

        let estimate: u128 = register_radix.iter().map(|&r| r as u128).product::<u128>()
            * processes.iter().map(|t| t.total as u128).product::<u128>()
            * cursors.iter().map(|&(_, _, r)| r as u128).product::<u128>()
            * (monitor_radix as u128).pow(links.len() as u32);
        if estimate > options.cap as u128 {
            return Err(ExploreError::SizeCap {
                estimate,
                cap: options.cap,
            });
        }
        Ok(StateSpace {
            system: system.clone(),
            canonical: options.canonicalize,
            register_radix,
            processes,
            cursors,
            monitor_radix,
            link_write,
            link_of_register,
            grant_of_write,
            size: estimate as u64,
        })
    }

    pub fn size(&self) -> u64 {
        self.size
    }

    pub fn system(&self) -> &Arc<System> {
        &self.system
    }

    pub fn is_canonicalizing(&self) -> bool {
        self.canonical
    }

    pub fn link_count(&self) -> usize {
        self.link_write.len()
    }

    /// Monitor value of a link with no pending obligation.
    pub fn clean_monitor(&self) -> u8 {
        if self.monitor_radix > 1 {
            1
        } else {
            0
        }
    }

    pub fn encode(&self, config: &Configuration, monitors: &[u8]) -> u64 {
        let mut id = 0u64;
        for (v, &r) in config.registers.iter().zip(&self.register_radix) {
            id = id * r + v.ordinal() as u64;
        }
        for (state, table) in config.processes.iter().zip(&self.processes) {
            let mut local = 0u64;
            for &(slot, var, r) in &table.vars[state.pc] {
                local = local * r + state.locals[slot].get(var).ordinal() as u64;
            }
            id = id * table.total + table.offset[state.pc] + local;
        }
        for &(p, slot, r) in &self.cursors {
            id = id * r + config.sources[p][slot].position as u64;
        }
        for &m in monitors {
            id = id * self.monitor_radix + m as u64;
        }
        id
    }

    /// Writes node `id` into `config` (dead locals zeroed) and `monitors`.
    pub fn decode_into(&self, mut id: u64, config: &mut Configuration, monitors: &mut [u8]) {
        for m in monitors.iter_mut().rev() {
            *m = (id % self.monitor_radix) as u8;
            id /= self.monitor_radix;
        }
        for &(p, slot, r) in self.cursors.iter().rev() {
            config.sources[p][slot].position = (id % r) as usize;
            id /= r;
        }
        for (state, table) in config.processes.iter_mut().zip(&self.processes).rev() {
            let mut digit = id % table.total;
            id /= table.total;
            let pc = table.offset.partition_point(|&o| o <= digit) - 1;
            digit -= table.offset[pc];
            state.pc = pc;
            for l in state.locals.iter_mut() {
                *l = Default::default();
            }
            for &(slot, var, r) in table.vars[pc].iter().rev() {
                let value = var.domain().value((digit % r) as usize);
                digit /= r;
                state.locals[slot].set(var, value);
            }
        }
        for (i, r) in self.register_radix.iter().enumerate().rev() {
            let kind = self.system.register_id(i).kind;
            config.registers[i] = kind.domain().value((id % r) as usize);
            id /= r;
        }
    }

    pub fn decode(&self, id: u64) -> (Configuration, Vec<u8>) {
        let mut config = Configuration::canonical(&self.system);
        let mut monitors = vec![0; self.link_count()];
        self.decode_into(id, &mut config, &mut monitors);
        (config, monitors)
    }

    /// Updates the monitors for `event`, executed from `before`, and reports
    /// whether the step violates the protocol's correctness condition.
    pub fn observe(&self, before: &Configuration, event: &Event, monitors: &mut [u8]) -> bool {
        if event.register.kind != RegisterKind::Write {
            return false;
        }
        let ri = self
            .system
            .index_of(event.register)
            .expect("events name existing registers");
        let link = self.link_of_register[ri].expect("every Write register is a link");
        let m = &mut monitors[link];
        match (event.action, self.system.kind()) {
            (Action::Write, ProtocolKind::WeakRendezvous | ProtocolKind::QuasiRendezvous) => {
                let missed = *m == 0;
                *m = 0;
                missed
            }
            (Action::Write, _) => before.registers[self.grant_of_write[ri]] != before.registers[ri],
            (Action::Read, ProtocolKind::WeakRendezvous) if event.process == event.register.peer => {
                *m = 1;
                false
            }
            (Action::Read, ProtocolKind::QuasiRendezvous) if event.process == event.register.peer => {
                let extra = *m >= 1;
                *m = (*m + 1).min(2);
                extra
            }
            (Action::Read, _) => false,
        }
    }

    /// Dense index of `Write_ab` for directed link number `link`.
    pub fn link_register(&self, link: usize) -> usize {
        self.link_write[link]
    }
}

const FLAG_VIOLATION: u8 = 1;
const FLAG_WRITES_WRITE: u8 = 2;
const SLOT_SHIFT: u8 = 2;

/// The full transition graph: one arc per `(node, process)`.
#[derive(Debug)]
pub struct StateGraph {
    space: StateSpace,
    n: usize,
    succ: Vec<u32>,
    /// Bit 0: violation arc. Bit 1: the step writes the mover's own `Write`
    /// register, whose slot is stored from bit 2 up.
    flags: Vec<u8>,
}

pub fn build_state_graph(system: &Arc<System>, options: ExploreOptions) -> Result<StateGraph, ExploreError> {
    let space = StateSpace::new(system, options)?;
    let n = system.n();
    let size = space.size();
    assert!(size <= u32::MAX as u64, "node ids are stored as u32");
    let mut succ = vec![0u32; size as usize * n];
    let mut flags = vec![0u8; size as usize * n];
    let mut base = Configuration::canonical(system);
    let mut work = base.clone();
    let mut base_mon = vec![0u8; space.link_count()];
    let mut mon = base_mon.clone();
    for id in 0..size {
        space.decode_into(id, &mut base, &mut base_mon);
        space.decode_into(id, &mut work, &mut mon);
        for p in 0..n {
            let event = work.step(p, 0);
            mon.copy_from_slice(&base_mon);
            let violation = space.observe(&base, &event, &mut mon);
            let arc = id as usize * n + p;
            succ[arc] = space.encode(&work, &mon) as u32;
            let mut f = if violation { FLAG_VIOLATION } else { 0 };
            if event.action == Action::Write && event.register.kind == RegisterKind::Write {
                let slot = system.topology().slot_of(p, event.register.peer).expect("own register");
                f |= FLAG_WRITES_WRITE | ((slot as u8) << SLOT_SHIFT);
            }
            flags[arc] = f;

            // Undo the step.
            if event.action == Action::Write {
                let ri = system.index_of(event.register).expect("existing register");
                work.registers[ri] = base.registers[ri];
            }
            work.processes[p].pc = base.processes[p].pc;
            work.processes[p].locals.copy_from_slice(&base.processes[p].locals);
            for (w, b) in work.sources[p].iter_mut().zip(&base.sources[p]) {
                w.position = b.position;
            }
        }
    }
    Ok(StateGraph { space, n, succ, flags })
}

/// Why a verification failed.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CounterexampleKind {
    /// A fair cycle that never enters the legitimate set.
    NonConvergence,
    /// A fair cycle along which `process` never writes `Write` slot `slot`.
    Blocked { process: ProcessId, slot: usize },
}

/// A lasso whose stem is empty: start at `start` and repeat `cycle` forever.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Counterexample {
    pub kind: CounterexampleKind,
    pub start: u64,
    pub cycle: Vec<ProcessId>,
    pub includes_violation: bool,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Verdict {
    Verified,
    Counterexample(Counterexample),
}

impl StateGraph {
    pub fn space(&self) -> &StateSpace {
        &self.space
    }

    pub fn node_count(&self) -> u64 {
        self.space.size()
    }

    pub fn processes(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn successor(&self, node: u64, p: ProcessId) -> u64 {
        self.succ[node as usize * self.n + p] as u64
    }

    #[inline]
    pub fn is_violation(&self, node: u64, p: ProcessId) -> bool {
        self.flags[node as usize * self.n + p] & FLAG_VIOLATION != 0
    }

    /// Slot of the `Write` register the arc writes, if any.
    #[inline]
    pub fn written_slot(&self, node: u64, p: ProcessId) -> Option<usize> {
        let f = self.flags[node as usize * self.n + p];
        (f & FLAG_WRITES_WRITE != 0).then_some((f >> SLOT_SHIFT) as usize)
    }

    pub fn node_of(&self, config: &Configuration, monitors: &[u8]) -> u64 {
        self.space.encode(config, monitors)
    }

    /// Node of `config` with every monitor clean.
    pub fn clean_node_of(&self, config: &Configuration) -> u64 {
        let monitors = vec![self.space.clean_monitor(); self.space.link_count()];
        self.space.encode(config, &monitors)
    }

    /// Nodes with no outgoing violation arc, closure ignored.
    pub fn violation_free_nodes(&self) -> Vec<bool> {
        (0..self.node_count())
            .map(|u| (0..self.n).all(|p| !self.is_violation(u, p)))
            .collect()
    }

    /// Replays `cx` through the interpreter and checks that it closes a cycle
    /// with the claimed property.
    pub fn check_counterexample(&self, cx: &Counterexample, legit: &[bool]) -> Result<(), String> {
        let (mut config, mut monitors) = self.space.decode(cx.start);
        let mut seen = vec![false; self.n];
        let mut violation = false;
        for (i, &p) in cx.cycle.iter().enumerate() {
            let before = config.clone();
            let event = config.step(p, i as u64);
            violation |= self.space.observe(&before, &event, &mut monitors);
            seen[p] = true;
            let node = self.space.encode(&config, &monitors);
            match cx.kind {
                CounterexampleKind::NonConvergence if legit[node as usize] => {
                    return Err(format!("step {i} enters the legitimate set"));
                }
                CounterexampleKind::Blocked { process, slot }
                    if p == process
                        && event.action == Action::Write
                        && event.register.kind == RegisterKind::Write
                        && config.system().topology().slot_of(p, event.register.peer) == Some(slot) =>
                {
                    return Err(format!("step {i} writes the blocked register"));
                }
                _ => {}
            }
        }
        if !seen.iter().all(|&s| s) {
            return Err("cycle does not schedule every process".into());
        }
        if self.space.encode(&config, &monitors) != cx.start {
            return Err("schedule does not return to its start".into());
        }
        if cx.includes_violation && !violation {
            return Err("no violation along the cycle".into());
        }
        Ok(())
    }
}

/// Nodes from which no violation arc is reachable.
pub fn legitimate_set(graph: &StateGraph) -> Vec<bool> {
    let nodes = graph.node_count() as usize;
    let n = graph.n;
    // Reverse adjacency in CSR form.
    let mut start = vec![0u32; nodes + 1];
    for &v in &graph.succ {
        start[v as usize + 1] += 1;
    }
    for i in 0..nodes {
        start[i + 1] += start[i];
    }
    let mut fill = start.clone();
    let mut preds = vec![0u32; graph.succ.len()];
    for (arc, &v) in graph.succ.iter().enumerate() {
        let slot = &mut fill[v as usize];
        preds[*slot as usize] = (arc / n) as u32;
        *slot += 1;
    }

    let mut bad = vec![false; nodes];
    let mut queue = VecDeque::new();
    for u in 0..nodes {
        if (0..n).any(|p| graph.is_violation(u as u64, p)) {
            bad[u] = true;
            queue.push_back(u as u32);
        }
    }
    while let Some(v) = queue.pop_front() {
        let v = v as usize;
        for &u in &preds[start[v] as usize..start[v + 1] as usize] {
            if !bad[u as usize] {
                bad[u as usize] = true;
                queue.push_back(u);
            }
        }
    }
    bad.into_iter().map(|b| !b).collect()
}

/// First fair strongly connected component of the arcs accepted by `keep`.
struct FairComponent {
    comp: Vec<u32>,
    id: u32,
    /// One internal arc per process.
    arcs: Vec<(u64, u64)>,
    violation_arc: Option<(u64, ProcessId, u64)>,
}

const UNASSIGNED: u32 = u32::MAX;

/// Iterative Tarjan over the filtered graph, stopping at the first strongly
/// connected component whose internal arcs schedule every process.
fn find_fair_component(graph: &StateGraph, keep: impl Fn(u64, ProcessId, u64) -> bool) -> Option<FairComponent> {
    let nodes = graph.node_count() as usize;
    let n = graph.n;
    let mut index = vec![0u32; nodes];
    let mut low = vec![0u32; nodes];
    let mut comp = vec![UNASSIGNED; nodes];
    let mut stack: Vec<u32> = Vec::new();
    let mut call: Vec<(u32, usize)> = Vec::new();
    let mut counter = 1u32;
    let mut next_comp = 0u32;

    for root in 0..nodes {
        if index[root] != 0 {
            continue;
        }
        index[root] = counter;
        low[root] = counter;
        counter += 1;
        stack.push(root as u32);
        call.push((root as u32, 0));
        while let Some(frame) = call.last_mut() {
            let v = frame.0 as usize;
            if frame.1 < n {
                let p = frame.1;
                frame.1 += 1;
                let w = graph.successor(v as u64, p);
                if !keep(v as u64, p, w) {
                    continue;
                }
                let w = w as usize;
                if index[w] == 0 {
                    index[w] = counter;
                    low[w] = counter;
                    counter += 1;
                    stack.push(w as u32);
                    call.push((w as u32, 0));
                } else if comp[w] == UNASSIGNED {
                    low[v] = low[v].min(index[w]);
                }
                continue;
            }
            call.pop();
            if let Some(parent) = call.last() {
                let u = parent.0 as usize;
                low[u] = low[u].min(low[v]);
            }
            if low[v] != index[v] {
                continue;
            }
            let id = next_comp;
            next_comp += 1;
            let from = stack.iter().rposition(|&x| x as usize == v).expect("root on stack");
            for &x in &stack[from..] {
                comp[x as usize] = id;
            }
            let mut arcs: Vec<Option<(u64, u64)>> = vec![None; n];
            let mut violation_arc = None;
            for &x in &stack[from..] {
                let u = x as u64;
                for p in 0..n {
                    let t = graph.successor(u, p);
                    if comp[t as usize] == id && keep(u, p, t) {
                        arcs[p].get_or_insert((u, t));
                        if violation_arc.is_none() && graph.is_violation(u, p) {
                            violation_arc = Some((u, p, t));
                        }
                    }
                }
            }
            stack.truncate(from);
            if arcs.iter().all(Option::is_some) {
                return Some(FairComponent {
                    comp,
                    id,
                    arcs: arcs.into_iter().map(|a| a.expect("checked")).collect(),
                    violation_arc,
                });
            }
        }
    }
    None
}

/// Shortest schedule from `from` to `to` inside the component.
fn path_within(
    graph: &StateGraph,
    fc: &FairComponent,
    keep: &impl Fn(u64, ProcessId, u64) -> bool,
    from: u64,
    to: u64,
) -> Vec<ProcessId> {
    if from == to {
        return Vec::new();
    }
    let mut parent: HashMap<u64, (u64, ProcessId)> = HashMap::new();
    let mut queue = VecDeque::from([from]);
    parent.insert(from, (from, 0));
    while let Some(u) = queue.pop_front() {
        for p in 0..graph.n {
            let v = graph.successor(u, p);
            if fc.comp[v as usize] != fc.id || !keep(u, p, v) || parent.contains_key(&v) {
                continue;
            }
            parent.insert(v, (u, p));
            if v == to {
                let mut path = Vec::new();
                let mut cur = to;
                while cur != from {
                    let (prev, p) = parent[&cur];
                    path.push(p);
                    cur = prev;
                }
                path.reverse();
                return path;
            }
            queue.push_back(v);
        }
    }
    unreachable!("nodes of one strongly connected component reach each other")
}

fn lasso(
    graph: &StateGraph,
    fc: &FairComponent,
    keep: &impl Fn(u64, ProcessId, u64) -> bool,
    kind: CounterexampleKind,
) -> Counterexample {
    let mut cycle = Vec::new();
    let (start, mut cur) = match fc.violation_arc {
        Some((u, p, v)) => {
            cycle.push(p);
            (u, v)
        }
        None => (fc.arcs[0].0, fc.arcs[0].0),
    };
    for (p, &(u, v)) in fc.arcs.iter().enumerate() {
        cycle.extend(path_within(graph, fc, keep, cur, u));
        cycle.push(p);
        cur = v;
    }
    cycle.extend(path_within(graph, fc, keep, cur, start));
    Counterexample {
        kind,
        start,
        cycle,
        includes_violation: fc.violation_arc.is_some(),
    }
}

/// Checks that every fair path reaches the legitimate set and that no fair
/// cycle starves a `Write` register.
pub fn verify_convergence(graph: &StateGraph, legit: &[bool]) -> Result<Verdict, ExploreError> {
    if !legit.iter().any(|&l| l) {
        return Err(ExploreError::EmptyLegitimateSet);
    }
    let outside = |u: u64, _p: ProcessId, v: u64| !legit[u as usize] && !legit[v as usize];
    if let Some(fc) = find_fair_component(graph, &outside) {
        return Ok(Verdict::Counterexample(lasso(graph, &fc, &outside, CounterexampleKind::NonConvergence)));
    }
    let system = graph.space.system().clone();
    for process in 0..graph.n {
        for slot in 0..system.topology().degree(process) {
            let starving =
                |u: u64, p: ProcessId, _v: u64| !(p == process && graph.written_slot(u, p) == Some(slot));
            if let Some(fc) = find_fair_component(graph, &starving) {
                return Ok(Verdict::Counterexample(lasso(
                    graph,
                    &fc,
                    &starving,
                    CounterexampleKind::Blocked { process, slot },
                )));
            }
        }
    }
    Ok(Verdict::Verified)
}
