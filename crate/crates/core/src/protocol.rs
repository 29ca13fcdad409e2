//! The protocols as flat programs of atomic steps, and their interpreter.
//!
//! Every location of a [`StepProgram`] performs exactly one register access.
//! All purely local work (loop counters, the `until` test, the branch of the
//! quasi rendezvous loop) is folded into the location's successor rule, so a
//! program counter always names a register access and arbitrary corruption of
//! program counters ranges exactly over those points.
//!
//! Location layout for a process of degree `N`:
//!
//! | kind | write phase (per `i`) | loop body (per `i`) |
//! |------|-----------------------|---------------------|
//! | read checking, basic | `write(Write_i, get_i)` | `r ← Write_Bi`, `write(Read_i, r)`, `val ← Read_Bi`, `s ← Write_i` |
//! | weak rendezvous | `write(Write_i, get_i)`, `c ← Control_i`, `write(Control_i, ¬c)` | `r ← Write_Bi`, `b ← Control_Bi`, `write(CheckControl_i, b)`, `c ← Control_i`, `l ← CheckControl_Bi` |
//! | quasi rendezvous | same as weak | `b ← Control_Bi`, `d ← CheckControl_i`, [`r ← Write_Bi`, `write(CheckControl_i, b)`], `c ← Control_i`, `l ← CheckControl_Bi` |
//!
//! The loop's exit test runs after the last access of a full sweep. The
//! bracketed pair is skipped when `b = d`.
//!
//! [`ProtocolKind::NaivePairing`] is not one of the primitives: it runs the
//! two-process link protocol on one link at a time, round robin over the
//! neighbours, and exists to exhibit the deadlock that construction suffers
//! from on rings.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::config::{Configuration, Locals};
use crate::model::{Domain, ModelError, ProcessId, RegisterId, RegisterKind, Value};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ProtocolKind {
    /// Two processes, one link.
    Basic2P,
    ReadChecking,
    WeakRendezvous,
    QuasiRendezvous,
    /// Link protocol sequenced link by link (deadlock-prone).
    NaivePairing,
}

impl ProtocolKind {
    pub const ALL: [ProtocolKind; 5] = [
        ProtocolKind::Basic2P,
        ProtocolKind::ReadChecking,
        ProtocolKind::WeakRendezvous,
        ProtocolKind::QuasiRendezvous,
        ProtocolKind::NaivePairing,
    ];

    /// The four listings the simulator implements as communication primitives.
    pub const PRIMITIVES: [ProtocolKind; 4] = [
        ProtocolKind::Basic2P,
        ProtocolKind::ReadChecking,
        ProtocolKind::WeakRendezvous,
        ProtocolKind::QuasiRendezvous,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ProtocolKind::Basic2P => "basic-2p",
            ProtocolKind::ReadChecking => "read-checking",
            ProtocolKind::WeakRendezvous => "weak-rendezvous",
            ProtocolKind::QuasiRendezvous => "quasi-rendezvous",
            ProtocolKind::NaivePairing => "naive-pairing",
        }
    }

    /// Registers each process owns per neighbour.
    pub fn register_kinds(self) -> &'static [RegisterKind] {
        if self.uses_alternating_bit() {
            &[RegisterKind::Write, RegisterKind::Control, RegisterKind::CheckControl]
        } else {
            &[RegisterKind::Write, RegisterKind::Read]
        }
    }

    /// Per-neighbour local variables the listing declares.
    pub fn local_vars(self) -> &'static [LocalVar] {
        match self {
            ProtocolKind::Basic2P | ProtocolKind::ReadChecking | ProtocolKind::NaivePairing => {
                &[LocalVar::R, LocalVar::S, LocalVar::Val]
            }
            ProtocolKind::WeakRendezvous => &[LocalVar::R, LocalVar::B, LocalVar::C, LocalVar::L],
            ProtocolKind::QuasiRendezvous => {
                &[LocalVar::R, LocalVar::B, LocalVar::C, LocalVar::L, LocalVar::D]
            }
        }
    }

    pub fn uses_alternating_bit(self) -> bool {
        matches!(self, ProtocolKind::WeakRendezvous | ProtocolKind::QuasiRendezvous)
    }

    /// Register the peer writes to grant permission: `Read` or `CheckControl`.
    pub fn permission_register(self) -> RegisterKind {
        if self.uses_alternating_bit() {
            RegisterKind::CheckControl
        } else {
            RegisterKind::Read
        }
    }
}

impl fmt::Display for ProtocolKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ProtocolKind {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let key = s.trim().to_ascii_lowercase().replace('_', "-");
        let kind = match key.as_str() {
            "basic-2p" | "basic2p" | "basic" => ProtocolKind::Basic2P,
            "read-checking" | "rc" => ProtocolKind::ReadChecking,
            "weak-rendezvous" | "weak-rv" | "wrv" => ProtocolKind::WeakRendezvous,
            "quasi-rendezvous" | "quasi-rv" | "qrv" => ProtocolKind::QuasiRendezvous,
            "naive-pairing" | "naive" => ProtocolKind::NaivePairing,
            _ => return Err(ModelError::Protocol(format!("unknown protocol '{s}'"))),
        };
        Ok(kind)
    }
}

/// Per-neighbour local variable.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum LocalVar {
    /// Message read from the neighbour.
    R,
    /// Own message, re-read from `Write`.
    S,
    /// Neighbour's echo of the own message.
    Val,
    /// Neighbour's alternating bit.
    B,
    /// Own alternating bit.
    C,
    /// Neighbour's echo of the own bit.
    L,
    /// Own echo of the neighbour's bit.
    D,
}

impl LocalVar {
    pub fn domain(self) -> Domain {
        match self {
            LocalVar::R | LocalVar::S | LocalVar::Val => Domain::Message,
            _ => Domain::Bit,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            LocalVar::R => "r",
            LocalVar::S => "s",
            LocalVar::Val => "val",
            LocalVar::B => "b",
            LocalVar::C => "c",
            LocalVar::L => "l",
            LocalVar::D => "d",
        }
    }

    pub fn from_name(name: &str) -> Option<LocalVar> {
        [
            LocalVar::R,
            LocalVar::S,
            LocalVar::Val,
            LocalVar::B,
            LocalVar::C,
            LocalVar::L,
            LocalVar::D,
        ]
        .into_iter()
        .find(|v| v.name() == name)
    }
}

/// Whose register a step touches, relative to the current neighbour `B_i`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Side {
    /// `kind_{A,B_i}`, owned by the executing process.
    Own,
    /// `kind_{B_i,A}`, owned by the neighbour.
    Peer,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct RegisterRef {
    pub side: Side,
    pub kind: RegisterKind,
}

const fn own(kind: RegisterKind) -> RegisterRef {
    RegisterRef { side: Side::Own, kind }
}

const fn peer(kind: RegisterKind) -> RegisterRef {
    RegisterRef { side: Side::Peer, kind }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ValueExpr {
    /// `get_i`: next message of the neighbour's source script.
    Source,
    Local(LocalVar),
    /// `(x + 1) mod 2`.
    Flipped(LocalVar),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Step {
    Read { from: RegisterRef, into: LocalVar },
    Write { to: RegisterRef, value: ValueExpr },
}

impl Step {
    pub fn register(&self) -> RegisterRef {
        match *self {
            Step::Read { from, .. } => from,
            Step::Write { to, .. } => to,
        }
    }

    pub fn action(&self) -> Action {
        match self {
            Step::Read { .. } => Action::Read,
            Step::Write { .. } => Action::Write,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Region {
    WritePhase,
    Loop,
}

/// Successor rule evaluated after a location's access.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Next {
    Fallthrough,
    /// `if left ≠ right` continue, else jump to `target` (same neighbour).
    SkipIfEqual { left: LocalVar, right: LocalVar, target: usize },
    /// `until ∀i: left_i = right_i` over all neighbours.
    Until { left: LocalVar, right: LocalVar, exit: usize, again: usize },
    /// `until left_i = right_i` for the current neighbour only.
    LinkUntil { left: LocalVar, right: LocalVar, exit: usize, again: usize },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Location {
    pub step: Step,
    /// Neighbour slot `i` (0-based).
    pub neighbor: usize,
    pub region: Region,
    pub next: Next,
    pub label: &'static str,
}

/// A protocol compiled for one process degree.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StepProgram {
    kind: ProtocolKind,
    degree: usize,
    locations: Vec<Location>,
}

impl StepProgram {
    pub fn kind(&self) -> ProtocolKind {
        self.kind
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn len(&self) -> usize {
        self.locations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.locations.is_empty()
    }

    pub fn locations(&self) -> &[Location] {
        &self.locations
    }

    #[inline]
    pub fn location(&self, pc: usize) -> &Location {
        &self.locations[pc]
    }

    pub fn write_phase_len(&self) -> usize {
        self.locations.iter().filter(|l| l.region == Region::WritePhase).count()
    }

    pub fn loop_len(&self) -> usize {
        self.locations.iter().filter(|l| l.region == Region::Loop).count()
    }

    pub fn is_loop(&self, pc: usize) -> bool {
        self.locations[pc].region == Region::Loop
    }

    /// Program counter after executing `pc`, given the locals after the access.
    #[inline]
    pub fn successor(&self, pc: usize, locals: &[Locals]) -> usize {
        let loc = &self.locations[pc];
        match loc.next {
            Next::Fallthrough => pc + 1,
            Next::SkipIfEqual { left, right, target } => {
                let l = &locals[loc.neighbor];
                if l.get(left) == l.get(right) {
                    target
                } else {
                    pc + 1
                }
            }
            Next::Until { left, right, exit, again } => {
                if locals.iter().all(|l| l.get(left) == l.get(right)) {
                    exit
                } else {
                    again
                }
            }
            Next::LinkUntil { left, right, exit, again } => {
                let l = &locals[loc.neighbor];
                if l.get(left) == l.get(right) {
                    exit
                } else {
                    again
                }
            }
        }
    }
}

/// Flattens a listing for a process with `degree` neighbours.
pub fn compile(kind: ProtocolKind, degree: usize) -> Result<StepProgram, ModelError> {
    use RegisterKind::{CheckControl, Control, Read, Write};

    if degree == 0 {
        return Err(ModelError::Protocol("a process needs at least one neighbour".into()));
    }
    if kind == ProtocolKind::Basic2P && degree != 1 {
        return Err(ModelError::Protocol(format!(
            "the basic two-process protocol needs degree 1, got {degree}"
        )));
    }

    let mut locations = Vec::new();
    let push = |locations: &mut Vec<Location>, step, neighbor, region, label| {
        locations.push(Location {
            step,
            neighbor,
            region,
            next: Next::Fallthrough,
            label,
        })
    };

    match kind {
        ProtocolKind::Basic2P | ProtocolKind::ReadChecking => {
            for i in 0..degree {
                push(
                    &mut locations,
                    Step::Write { to: own(Write), value: ValueExpr::Source },
                    i,
                    Region::WritePhase,
                    "write(Write_AB, get)",
                );
            }
            let loop_start = locations.len();
            for i in 0..degree {
                push(&mut locations, Step::Read { from: peer(Write), into: LocalVar::R }, i, Region::Loop, "r <- read(Write_BA)");
                push(&mut locations, Step::Write { to: own(Read), value: ValueExpr::Local(LocalVar::R) }, i, Region::Loop, "write(Read_AB, r)");
                push(&mut locations, Step::Read { from: peer(Read), into: LocalVar::Val }, i, Region::Loop, "val <- read(Read_BA)");
                push(&mut locations, Step::Read { from: own(Write), into: LocalVar::S }, i, Region::Loop, "s <- read(Write_AB)");
            }
            let last = locations.len() - 1;
            locations[last].next = Next::Until {
                left: LocalVar::Val,
                right: LocalVar::S,
                exit: 0,
                again: loop_start,
            };
        }
        ProtocolKind::WeakRendezvous | ProtocolKind::QuasiRendezvous => {
            for i in 0..degree {
                push(&mut locations, Step::Write { to: own(Write), value: ValueExpr::Source }, i, Region::WritePhase, "write(Write_AB, get)");
                push(&mut locations, Step::Read { from: own(Control), into: LocalVar::C }, i, Region::WritePhase, "c <- read(Control_AB)");
                push(&mut locations, Step::Write { to: own(Control), value: ValueExpr::Flipped(LocalVar::C) }, i, Region::WritePhase, "write(Control_AB, (c+1) mod 2)");
            }
            let loop_start = locations.len();
            for i in 0..degree {
                if kind == ProtocolKind::WeakRendezvous {
                    push(&mut locations, Step::Read { from: peer(Write), into: LocalVar::R }, i, Region::Loop, "r <- read(Write_BA)");
                    push(&mut locations, Step::Read { from: peer(Control), into: LocalVar::B }, i, Region::Loop, "b <- read(Control_BA)");
                    push(&mut locations, Step::Write { to: own(CheckControl), value: ValueExpr::Local(LocalVar::B) }, i, Region::Loop, "write(CheckControl_AB, b)");
                } else {
                    push(&mut locations, Step::Read { from: peer(Control), into: LocalVar::B }, i, Region::Loop, "b <- read(Control_BA)");
                    let d_read = locations.len();
                    push(&mut locations, Step::Read { from: own(CheckControl), into: LocalVar::D }, i, Region::Loop, "d <- read(CheckControl_AB)");
                    push(&mut locations, Step::Read { from: peer(Write), into: LocalVar::R }, i, Region::Loop, "r <- read(Write_BA)");
                    push(&mut locations, Step::Write { to: own(CheckControl), value: ValueExpr::Local(LocalVar::B) }, i, Region::Loop, "write(CheckControl_AB, b)");
                    locations[d_read].next = Next::SkipIfEqual {
                        left: LocalVar::B,
                        right: LocalVar::D,
                        target: d_read + 3,
                    };
                }
                push(&mut locations, Step::Read { from: own(Control), into: LocalVar::C }, i, Region::Loop, "c <- read(Control_AB)");
                push(&mut locations, Step::Read { from: peer(CheckControl), into: LocalVar::L }, i, Region::Loop, "l <- read(CheckControl_BA)");
            }
            let last = locations.len() - 1;
            locations[last].next = Next::Until {
                left: LocalVar::C,
                right: LocalVar::L,
                exit: 0,
                again: loop_start,
            };
        }
        ProtocolKind::NaivePairing => {
            const PER_LINK: usize = 5;
            for i in 0..degree {
                let start = i * PER_LINK;
                push(&mut locations, Step::Write { to: own(Write), value: ValueExpr::Source }, i, Region::WritePhase, "write(Write_AB, get)");
                push(&mut locations, Step::Read { from: peer(Write), into: LocalVar::R }, i, Region::Loop, "r <- read(Write_BA)");
                push(&mut locations, Step::Write { to: own(Read), value: ValueExpr::Local(LocalVar::R) }, i, Region::Loop, "write(Read_AB, r)");
                push(&mut locations, Step::Read { from: peer(Read), into: LocalVar::Val }, i, Region::Loop, "val <- read(Read_BA)");
                push(&mut locations, Step::Read { from: own(Write), into: LocalVar::S }, i, Region::Loop, "s <- read(Write_AB)");
                let last = locations.len() - 1;
                locations[last].next = Next::LinkUntil {
                    left: LocalVar::Val,
                    right: LocalVar::S,
                    exit: ((i + 1) % degree) * PER_LINK,
                    again: start + 1,
                };
            }
        }
    }

    Ok(StepProgram {
        kind,
        degree,
        locations,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Action {
    Read,
    Write,
}

impl Action {
    pub fn name(self) -> &'static str {
        match self {
            Action::Read => "read",
            Action::Write => "write",
        }
    }
}

/// One executed atomic step.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Event {
    pub step_index: u64,
    pub process: ProcessId,
    pub action: Action,
    pub register: RegisterId,
    /// Value read, or value written.
    pub value: Value,
    pub pc_before: usize,
    pub pc_after: usize,
}

impl Configuration {
    /// Executes the atomic step at `p`'s program counter in place.
    ///
    /// Every process is enabled in every configuration, so this never blocks.
    pub fn step(&mut self, p: ProcessId, step_index: u64) -> Event {
        let system = &*self.system;
        let program = &system.programs[p];
        let state = &mut self.processes[p];
        let pc_before = state.pc;
        let loc = program.location(pc_before);
        let slot = loc.neighbor;
        let neighbor = system.topology().neighbors(p)[slot];

        let reg = loc.step.register();
        let (owner, owner_slot, reg_peer) = match reg.side {
            Side::Own => (p, slot, neighbor),
            Side::Peer => (neighbor, system.reverse_slot(p, slot), p),
        };
        let index = system
            .register_index(owner, owner_slot, reg.kind)
            .expect("compiled programs only reference registers of their kind");

        let value = match loc.step {
            Step::Read { into, .. } => {
                let v = self.registers[index];
                state.locals[slot].set(into, v);
                v
            }
            Step::Write { value, .. } => {
                let v = match value {
                    ValueExpr::Source => Value::Message(self.sources[p][slot].next_message()),
                    ValueExpr::Local(var) => state.locals[slot].get(var),
                    ValueExpr::Flipped(var) => match state.locals[slot].get(var) {
                        Value::Bit(b) => Value::Bit(b.flipped()),
                        other => panic!("cannot flip {other:?}"),
                    },
                };
                self.registers[index] = v;
                v
            }
        };

        let pc_after = program.successor(pc_before, &state.locals);
        state.pc = pc_after;
        Event {
            step_index,
            process: p,
            action: loc.step.action(),
            register: RegisterId {
                owner,
                peer: reg_peer,
                kind: reg.kind,
            },
            value,
            pc_before,
            pc_after,
        }
    }

    /// Next register access of `p`, without executing it.
    pub fn next_access(&self, p: ProcessId) -> (Action, RegisterKind, Side) {
        let loc = self.system.program(p).location(self.processes[p].pc);
        let reg = loc.step.register();
        (loc.step.action(), reg.kind, reg.side)
    }
}

/// Pure form of [`Configuration::step`].
pub fn execute_step(config: &Configuration, p: ProcessId, step_index: u64) -> Result<(Configuration, Event), ModelError> {
    let n = config.system().n();
    if p >= n {
        return Err(ModelError::UnknownProcess(p, n));
    }
    let mut next = config.clone();
    let event = next.step(p, step_index);
    Ok((next, event))
}

/// Whether `b` currently allows `a` to write into `Write_ab`:
/// `Read_ba = Write_ab` for read checking, `CheckControl_ba = Control_ab` for
/// the rendezvous variants.
pub fn allows_write(config: &Configuration, a: ProcessId, b: ProcessId) -> Result<bool, ModelError> {
    let system = config.system();
    if a >= system.n() || b >= system.n() || !system.topology().are_neighbors(a, b) {
        return Err(ModelError::NotAnEdge(a, b));
    }
    let (grant, own_kind) = if system.kind().uses_alternating_bit() {
        (RegisterKind::CheckControl, RegisterKind::Control)
    } else {
        (RegisterKind::Read, RegisterKind::Write)
    };
    let granted = config.read_register(RegisterId::new(grant, b, a))?;
    let current = config.read_register(RegisterId::new(own_kind, a, b))?;
    Ok(granted == current)
}

/// Whether `p`'s program counter lies in the repeat loop.
pub fn is_loop_resident(config: &Configuration, p: ProcessId) -> bool {
    config.system().program(p).is_loop(config.process(p).pc)
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::config::System;
    use crate::model::{Bit, Symbol};
    use crate::topology::Topology;

    fn system(kind: ProtocolKind, topology: Topology) -> Arc<System> {
        System::builder(kind, topology).build().unwrap()
    }

    #[test]
    fn read_checking_degree_one_has_five_locations() {
        let p = compile(ProtocolKind::ReadChecking, 1).unwrap();
        assert_eq!(p.len(), 5);
        assert_eq!(p.write_phase_len(), 1);
        assert_eq!(p.loop_len(), 4);
    }

    #[test]
    fn read_checking_sizes_scale_with_degree() {
        for n in 1..6 {
            let p = compile(ProtocolKind::ReadChecking, n).unwrap();
            assert_eq!(p.write_phase_len(), n);
            assert_eq!(p.loop_len(), 4 * n);
        }
    }

    #[test]
    fn quasi_rendezvous_degree_two() {
        let p = compile(ProtocolKind::QuasiRendezvous, 2).unwrap();
        assert_eq!(p.write_phase_len(), 6);
        assert_eq!(p.loop_len(), 12);
    }

    #[test]
    fn weak_rendezvous_degree_three_sweep() {
        let p = compile(ProtocolKind::WeakRendezvous, 3).unwrap();
        assert_eq!(p.write_phase_len(), 9);
        assert_eq!(p.loop_len(), 15);
    }

    #[test]
    fn basic_needs_degree_one() {
        assert!(compile(ProtocolKind::Basic2P, 2).is_err());
        assert!(compile(ProtocolKind::ReadChecking, 0).is_err());
        assert_eq!(compile(ProtocolKind::Basic2P, 1).unwrap().len(), 5);
    }

    #[test]
    fn only_the_last_location_closes_the_loop() {
        for kind in ProtocolKind::ALL {
            let degree = if kind == ProtocolKind::Basic2P { 1 } else { 3 };
            let p = compile(kind, degree).unwrap();
            let last = p.locations().last().unwrap();
            assert!(!matches!(last.next, Next::Fallthrough), "{kind}");
            for loc in p.locations() {
                match loc.next {
                    Next::Until { exit, again, .. } | Next::LinkUntil { exit, again, .. } => {
                        assert!(exit < p.len() && again < p.len());
                        assert_eq!(p.location(exit).region, Region::WritePhase);
                        assert_eq!(p.location(again).region, Region::Loop);
                    }
                    Next::SkipIfEqual { target, .. } => assert!(target < p.len()),
                    Next::Fallthrough => {}
                }
            }
        }
    }

    #[test]
    fn read_of_peer_read_register_sets_val() {
        let sys = system(ProtocolKind::ReadChecking, Topology::line(2).unwrap());
        let mut c = Configuration::canonical(&sys);
        // Location 3: val <- read(Read_BA).
        c.process_mut(0).pc = 3;
        c.set_register(RegisterId::new(RegisterKind::Read, 1, 0), Value::Message(Symbol(0)))
            .unwrap();
        c.process_mut(0).locals[0].val = Symbol(2);
        let (next, ev) = execute_step(&c, 0, 0).unwrap();
        assert_eq!(next.process(0).locals[0].val, Symbol(0));
        assert_eq!(next.registers(), c.registers());
        assert_eq!(ev.action, Action::Read);
        assert_eq!(ev.register, RegisterId::new(RegisterKind::Read, 1, 0));
        assert_eq!(ev.pc_after, 4);
    }

    #[test]
    fn control_write_flips_the_read_bit() {
        let sys = system(ProtocolKind::WeakRendezvous, Topology::line(2).unwrap());
        let mut c = Configuration::canonical(&sys);
        c.process_mut(0).pc = 2;
        c.process_mut(0).locals[0].c = Bit::ONE;
        let (next, ev) = execute_step(&c, 0, 0).unwrap();
        let ctrl = RegisterId::new(RegisterKind::Control, 0, 1);
        assert_eq!(next.read_register(ctrl).unwrap(), Value::Bit(Bit::ZERO));
        assert_eq!(ev.value, Value::Bit(Bit::ZERO));
        // Write phase ends; the loop starts.
        assert_eq!(ev.pc_after, 3);
    }

    #[test]
    fn quasi_branch_skips_when_bits_agree() {
        let sys = system(ProtocolKind::QuasiRendezvous, Topology::line(2).unwrap());
        let mut c = Configuration::canonical(&sys);
        // Loop starts at 3: b <- Control_BA (3), d <- CheckControl_AB (4),
        // r <- Write_BA (5), write CheckControl (6), c (7), l (8).
        c.process_mut(0).pc = 3;
        let (c, e1) = execute_step(&c, 0, 0).unwrap();
        assert_eq!(e1.value, Value::Bit(Bit::ZERO));
        let (c, e2) = execute_step(&c, 0, 1).unwrap();
        assert_eq!(e2.pc_after, 7);

        let mut c = c;
        c.process_mut(0).pc = 3;
        c.set_register(RegisterId::new(RegisterKind::Control, 1, 0), Value::Bit(Bit::ONE))
            .unwrap();
        let (c, _) = execute_step(&c, 0, 2).unwrap();
        let (_, e4) = execute_step(&c, 0, 3).unwrap();
        assert_eq!(e4.pc_after, 5);
    }

    #[test]
    fn source_writes_advance_the_cursor() {
        let sys = System::builder(ProtocolKind::ReadChecking, Topology::line(2).unwrap())
            .script("cab")
            .build()
            .unwrap();
        let mut c = Configuration::canonical(&sys);
        let ev = c.step(0, 0);
        assert_eq!(ev.value, Value::Message(Symbol(2)));
        assert_eq!(c.cursor(0, 0).position, 1);
        assert_eq!(c.cursor(1, 0).position, 0);
    }

    #[test]
    fn allows_write_definitions() {
        let sys = system(ProtocolKind::ReadChecking, Topology::line(2).unwrap());
        let mut c = Configuration::canonical(&sys);
        let cc = Value::Message(Symbol(2));
        c.set_register(RegisterId::new(RegisterKind::Read, 1, 0), cc).unwrap();
        c.set_register(RegisterId::new(RegisterKind::Write, 0, 1), cc).unwrap();
        assert!(allows_write(&c, 0, 1).unwrap());

        let sys = system(ProtocolKind::QuasiRendezvous, Topology::line(2).unwrap());
        let mut c = Configuration::canonical(&sys);
        c.set_register(RegisterId::new(RegisterKind::Control, 0, 1), Value::Bit(Bit::ONE))
            .unwrap();
        c.set_register(RegisterId::new(RegisterKind::CheckControl, 1, 0), Value::Bit(Bit::ZERO))
            .unwrap();
        assert!(!allows_write(&c, 0, 1).unwrap());

        let sys = system(ProtocolKind::ReadChecking, Topology::line(3).unwrap());
        let c = Configuration::canonical(&sys);
        assert_eq!(allows_write(&c, 0, 2), Err(ModelError::NotAnEdge(0, 2)));
    }

    #[test]
    fn full_writing_revokes_permission_until_full_reading() {
        let sys = system(ProtocolKind::QuasiRendezvous, Topology::line(2).unwrap());
        let mut c = Configuration::canonical(&sys);
        assert!(allows_write(&c, 0, 1).unwrap());
        for i in 0..3 {
            c.step(0, i);
        }
        assert!(!allows_write(&c, 0, 1).unwrap());
        // Process 1 runs its write phase (3 steps), then its full reading of
        // Write_01: b, d, r, write CheckControl.
        let mut step = 3;
        for _ in 0..6 {
            c.step(1, step);
            step += 1;
            assert!(!allows_write(&c, 0, 1).unwrap());
        }
        c.step(1, step);
        assert!(allows_write(&c, 0, 1).unwrap());
    }

    #[test]
    fn loop_residency() {
        let sys = system(ProtocolKind::ReadChecking, Topology::ring(4).unwrap());
        let mut c = Configuration::canonical(&sys);
        assert!(!is_loop_resident(&c, 0));
        // Degree 2: write phase 0..2, loop 2..10; 9 evaluates the until test.
        c.process_mut(0).pc = 9;
        assert!(is_loop_resident(&c, 0));
        for seed in 0..200 {
            let c = Configuration::random(&sys, seed);
            for p in 0..4 {
                let pc = c.process(p).pc;
                assert_eq!(is_loop_resident(&c, p), pc >= 2);
            }
        }
    }

    #[test]
    fn protocol_names_parse() {
        for kind in ProtocolKind::ALL {
            assert_eq!(kind.name().parse::<ProtocolKind>().unwrap(), kind);
        }
        assert!("paxos".parse::<ProtocolKind>().is_err());
    }

    #[test]
    fn every_step_touches_exactly_one_register() {
        for kind in ProtocolKind::ALL {
            let topo = if kind == ProtocolKind::Basic2P {
                Topology::line(2).unwrap()
            } else {
                Topology::complete(4).unwrap()
            };
            let sys = system(kind, topo);
            for seed in 0..20 {
                let mut c = Configuration::random(&sys, seed);
                for k in 0..200u64 {
                    let p = (k as usize * 7 + seed as usize) % sys.n();
                    let before = c.clone();
                    let ev = c.step(p, k);
                    let changed: Vec<_> = (0..sys.register_count())
                        .filter(|&i| before.register_at(i) != c.register_at(i))
                        .collect();
                    match ev.action {
                        Action::Read => assert!(changed.is_empty()),
                        Action::Write => {
                            assert!(changed.len() <= 1);
                            assert_eq!(c.read_register(ev.register).unwrap(), ev.value);
                            assert_eq!(ev.register.owner, p);
                        }
                    }
                    assert!(c.validate().is_ok());
                }
            }
        }
    }
}
