//! Whole-system state.
//!
//! A [`System`] fixes everything that never changes during a run: protocol,
//! topology, alphabet, compiled programs and the application scripts fed to
//! `get_i`. A [`Configuration`] is one snapshot of the mutable state on top of
//! it: register contents, program counters, local variables and the source
//! cursors.
//!
//! Source cursors model the application layer, so fault injection never
//! touches them.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::model::{Alphabet, Bit, Domain, ModelError, ProcessId, RegisterId, RegisterKind, Symbol, Value};
use crate::protocol::{compile, LocalVar, ProtocolKind, StepProgram};
use crate::topology::Topology;

/// Immutable description of an experiment's system.
#[derive(Debug, PartialEq)]
pub struct System {
    kind: ProtocolKind,
    topology: Topology,
    alphabet: Alphabet,
    pub(crate) programs: Vec<Arc<StepProgram>>,
    scripts: Vec<Vec<Arc<[Symbol]>>>,
    base: Vec<usize>,
    reverse_slot: Vec<Vec<usize>>,
    register_count: usize,
}

pub struct SystemBuilder {
    kind: ProtocolKind,
    topology: Topology,
    alphabet: Alphabet,
    script: Option<String>,
    process_scripts: Vec<(ProcessId, String)>,
}

impl SystemBuilder {
    pub fn alphabet(mut self, alphabet: Alphabet) -> Self {
        self.alphabet = alphabet;
        self
    }

    /// Script used by every `get_i` without a per-process override. Defaults
    /// to the alphabet in order.
    pub fn script(mut self, word: impl Into<String>) -> Self {
        self.script = Some(word.into());
        self
    }

    /// Script for every `get_i` of process `p`.
    pub fn process_script(mut self, p: ProcessId, word: impl Into<String>) -> Self {
        self.process_scripts.push((p, word.into()));
        self
    }

    pub fn build(self) -> Result<Arc<System>, ModelError> {
        let SystemBuilder {
            kind,
            topology,
            alphabet,
            script,
            process_scripts,
        } = self;
        let n = topology.n();
        if kind == ProtocolKind::Basic2P && n != 2 {
            return Err(ModelError::Protocol(format!(
                "the basic two-process protocol needs exactly 2 processes, got {n}"
            )));
        }

        let default_word = script.unwrap_or_else(|| alphabet.as_string());
        let parse = |w: &str| -> Result<Arc<[Symbol]>, ModelError> {
            let word = alphabet.word(w)?;
            if word.is_empty() {
                return Err(ModelError::EmptyScript);
            }
            Ok(word.into())
        };
        let default_script = parse(&default_word)?;
        let mut per_process: Vec<Arc<[Symbol]>> = vec![default_script; n];
        for (p, w) in &process_scripts {
            if *p >= n {
                return Err(ModelError::UnknownProcess(*p, n));
            }
            per_process[*p] = parse(w)?;
        }
        let scripts = (0..n)
            .map(|p| vec![per_process[p].clone(); topology.degree(p)])
            .collect();

        let mut by_degree: Vec<Option<Arc<StepProgram>>> = vec![None; topology.max_degree() + 1];
        let mut programs = Vec::with_capacity(n);
        for p in 0..n {
            let d = topology.degree(p);
            if by_degree[d].is_none() {
                by_degree[d] = Some(Arc::new(compile(kind, d)?));
            }
            programs.push(by_degree[d].clone().expect("compiled above"));
        }

        let per_dir = kind.register_kinds().len();
        let mut base = Vec::with_capacity(n);
        let mut next = 0;
        for p in 0..n {
            base.push(next);
            next += topology.degree(p) * per_dir;
        }
        let reverse_slot = (0..n)
            .map(|p| {
                topology
                    .neighbors(p)
                    .iter()
                    .map(|&q| topology.slot_of(q, p).expect("undirected adjacency"))
                    .collect()
            })
            .collect();

        Ok(Arc::new(System {
            kind,
            topology,
            alphabet,
            programs,
            scripts,
            base,
            reverse_slot,
            register_count: next,
        }))
    }
}

impl System {
    pub fn builder(kind: ProtocolKind, topology: Topology) -> SystemBuilder {
        SystemBuilder {
            kind,
            topology,
            alphabet: Alphabet::default(),
            script: None,
            process_scripts: Vec::new(),
        }
    }

    pub fn kind(&self) -> ProtocolKind {
        self.kind
    }

    pub fn topology(&self) -> &Topology {
        &self.topology
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn n(&self) -> usize {
        self.topology.n()
    }

    pub fn program(&self, p: ProcessId) -> &StepProgram {
        &self.programs[p]
    }

    pub fn script(&self, p: ProcessId, slot: usize) -> &Arc<[Symbol]> {
        &self.scripts[p][slot]
    }

    pub fn register_count(&self) -> usize {
        self.register_count
    }

    /// Dense index of the `kind` register owned by `owner` for neighbour slot `slot`.
    #[inline]
    pub fn register_index(&self, owner: ProcessId, slot: usize, kind: RegisterKind) -> Option<usize> {
        let kinds = self.kind.register_kinds();
        let pos = kinds.iter().position(|&k| k == kind)?;
        Some(self.base[owner] + slot * kinds.len() + pos)
    }

    /// Index of `owner`'s `kind` register for the link with `peer`.
    pub fn index_of(&self, reg: RegisterId) -> Result<usize, ModelError> {
        if reg.owner >= self.n() {
            return Err(ModelError::UnknownRegister(reg));
        }
        let slot = self
            .topology
            .slot_of(reg.owner, reg.peer)
            .ok_or(ModelError::UnknownRegister(reg))?;
        self.register_index(reg.owner, slot, reg.kind)
            .ok_or(ModelError::UnknownRegister(reg))
    }

    /// Inverse of [`System::index_of`].
    pub fn register_id(&self, index: usize) -> RegisterId {
        let owner = self.base.partition_point(|&b| b <= index) - 1;
        let kinds = self.kind.register_kinds();
        let offset = index - self.base[owner];
        let slot = offset / kinds.len();
        RegisterId {
            owner,
            peer: self.topology.neighbors(owner)[slot],
            kind: kinds[offset % kinds.len()],
        }
    }

    /// Slot of `p` in the neighbour list of its `slot`-th neighbour.
    #[inline]
    pub fn reverse_slot(&self, p: ProcessId, slot: usize) -> usize {
        self.reverse_slot[p][slot]
    }

    /// Number of distinct program-counter values of process `p`.
    pub fn pc_count(&self, p: ProcessId) -> usize {
        self.programs[p].len()
    }
}

/// Local variables for one neighbour slot. Only the variables listed by
/// [`ProtocolKind::local_vars`] are meaningful; the others stay at zero.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub struct Locals {
    pub r: Symbol,
    pub s: Symbol,
    pub val: Symbol,
    pub b: Bit,
    pub c: Bit,
    pub l: Bit,
    pub d: Bit,
}

impl Locals {
    pub fn get(&self, var: LocalVar) -> Value {
        match var {
            LocalVar::R => Value::Message(self.r),
            LocalVar::S => Value::Message(self.s),
            LocalVar::Val => Value::Message(self.val),
            LocalVar::B => Value::Bit(self.b),
            LocalVar::C => Value::Bit(self.c),
            LocalVar::L => Value::Bit(self.l),
            LocalVar::D => Value::Bit(self.d),
        }
    }

    /// Panics if the value's domain does not match the variable; the
    /// interpreter only ever copies registers of the matching kind.
    pub fn set(&mut self, var: LocalVar, value: Value) {
        match (var, value) {
            (LocalVar::R, Value::Message(s)) => self.r = s,
            (LocalVar::S, Value::Message(s)) => self.s = s,
            (LocalVar::Val, Value::Message(s)) => self.val = s,
            (LocalVar::B, Value::Bit(b)) => self.b = b,
            (LocalVar::C, Value::Bit(b)) => self.c = b,
            (LocalVar::L, Value::Bit(b)) => self.l = b,
            (LocalVar::D, Value::Bit(b)) => self.d = b,
            (var, value) => panic!("local {var:?} cannot hold {value:?}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ProcessState {
    pub pc: usize,
    pub locals: Vec<Locals>,
}

/// Cyclic cursor over the word `get_i` returns.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct SourceCursor {
    pub script: Arc<[Symbol]>,
    pub position: usize,
}

impl SourceCursor {
    pub fn new(script: Arc<[Symbol]>) -> Self {
        SourceCursor { script, position: 0 }
    }

    /// Returns the next message and advances cyclically.
    pub fn next_message(&mut self) -> Symbol {
        let s = self.script[self.position];
        self.position = (self.position + 1) % self.script.len();
        s
    }
}

#[derive(Clone, Debug)]
pub struct Configuration {
    pub(crate) system: Arc<System>,
    pub(crate) registers: Vec<Value>,
    pub(crate) processes: Vec<ProcessState>,
    pub(crate) sources: Vec<Vec<SourceCursor>>,
}

impl PartialEq for Configuration {
    fn eq(&self, other: &Self) -> bool {
        (Arc::ptr_eq(&self.system, &other.system) || self.system == other.system)
            && self.registers == other.registers
            && self.processes == other.processes
            && self.sources == other.sources
    }
}

impl Eq for Configuration {}

impl Configuration {
    /// The intended starting point: every process at its first write-phase
    /// step, registers and locals zeroed (`Control = CheckControl = 0`),
    /// cursors at position 0.
    pub fn canonical(system: &Arc<System>) -> Self {
        let registers = (0..system.register_count())
            .map(|i| system.register_id(i).kind.domain().zero())
            .collect();
        let processes = (0..system.n())
            .map(|p| ProcessState {
                pc: 0,
                locals: vec![Locals::default(); system.topology().degree(p)],
            })
            .collect();
        Configuration {
            system: system.clone(),
            registers,
            processes,
            sources: Self::fresh_sources(system),
        }
    }

    /// Every register value, local variable and program counter drawn
    /// uniformly from its domain; cursors at position 0.
    pub fn random(system: &Arc<System>, seed: u64) -> Self {
        let mut config = Self::canonical(system);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        config.for_each_field(|slot| {
            slot.randomize(&mut rng);
        });
        config
    }

    /// Re-randomizes each register, local and program counter independently
    /// with probability `fraction`. With `fraction = 1` the result equals
    /// `Configuration::random(system, corruption_value_seed(seed))` up to the
    /// (untouched) source cursors.
    pub fn corrupt(&self, fraction: f64, seed: u64) -> Result<Self, ModelError> {
        if !(0.0..=1.0).contains(&fraction) {
            return Err(ModelError::InvalidFraction(fraction));
        }
        let mut config = self.clone();
        let mut coins = ChaCha8Rng::seed_from_u64(seed);
        let mut values = ChaCha8Rng::seed_from_u64(corruption_value_seed(seed));
        config.for_each_field(|slot| {
            if coins.gen::<f64>() < fraction {
                slot.randomize(&mut values);
            }
        });
        Ok(config)
    }

    /// Visits every corruptible field in a fixed order: registers by index,
    /// then per process its program counter followed by the active locals of
    /// each neighbour slot.
    fn for_each_field(&mut self, mut visit: impl FnMut(&mut FieldSlot<'_>)) {
        let alphabet_len = self.system.alphabet().len();
        for reg in self.registers.iter_mut() {
            let domain = reg.domain();
            visit(&mut FieldSlot::Value { value: reg, domain, alphabet_len });
        }
        let vars = self.system.kind().local_vars();
        for (p, proc_state) in self.processes.iter_mut().enumerate() {
            let pcs = self.system.pc_count(p);
            visit(&mut FieldSlot::Pc { pc: &mut proc_state.pc, count: pcs });
            for locals in proc_state.locals.iter_mut() {
                for &var in vars {
                    let mut value = locals.get(var);
                    visit(&mut FieldSlot::Value {
                        value: &mut value,
                        domain: var.domain(),
                        alphabet_len,
                    });
                    locals.set(var, value);
                }
            }
        }
    }

    fn fresh_sources(system: &Arc<System>) -> Vec<Vec<SourceCursor>> {
        (0..system.n())
            .map(|p| {
                (0..system.topology().degree(p))
                    .map(|slot| SourceCursor::new(system.script(p, slot).clone()))
                    .collect()
            })
            .collect()
    }

    pub fn system(&self) -> &Arc<System> {
        &self.system
    }

    pub fn read_register(&self, reg: RegisterId) -> Result<Value, ModelError> {
        Ok(self.registers[self.system.index_of(reg)?])
    }

    /// Returns a new configuration that differs only in `reg`.
    pub fn write_register(&self, reg: RegisterId, v: Value) -> Result<Self, ModelError> {
        let mut next = self.clone();
        next.set_register(reg, v)?;
        Ok(next)
    }

    pub fn set_register(&mut self, reg: RegisterId, v: Value) -> Result<(), ModelError> {
        let idx = self.system.index_of(reg)?;
        self.set_register_at(idx, v)
    }

    pub fn set_register_at(&mut self, index: usize, v: Value) -> Result<(), ModelError> {
        let kind = self.system.register_id(index).kind;
        if v.domain() != kind.domain() {
            return Err(ModelError::DomainMismatch { kind, value: v });
        }
        if let Value::Message(s) = v {
            if !self.system.alphabet().contains(s) {
                return Err(ModelError::DomainMismatch { kind, value: v });
            }
        }
        self.registers[index] = v;
        Ok(())
    }

    #[inline]
    pub fn register_at(&self, index: usize) -> Value {
        self.registers[index]
    }

    pub fn registers(&self) -> &[Value] {
        &self.registers
    }

    pub fn process(&self, p: ProcessId) -> &ProcessState {
        &self.processes[p]
    }

    pub fn processes(&self) -> &[ProcessState] {
        &self.processes
    }

    /// Direct access for fault injection in tests and for the explorer's
    /// state decoding. The caller keeps values in their domains.
    pub fn process_mut(&mut self, p: ProcessId) -> &mut ProcessState {
        &mut self.processes[p]
    }

    pub fn cursor(&self, p: ProcessId, slot: usize) -> &SourceCursor {
        &self.sources[p][slot]
    }

    pub fn sources(&self) -> &[Vec<SourceCursor>] {
        &self.sources
    }

    pub fn set_cursor_position(&mut self, p: ProcessId, slot: usize, position: usize) {
        let cursor = &mut self.sources[p][slot];
        cursor.position = position % cursor.script.len();
    }

    /// Checks every structural invariant: register and local domains, valid
    /// program counters, cursor positions.
    pub fn validate(&self) -> Result<(), String> {
        let sigma = self.system.alphabet();
        for (i, v) in self.registers.iter().enumerate() {
            let id = self.system.register_id(i);
            if v.domain() != id.kind.domain() {
                return Err(format!("{id} holds {v:?}"));
            }
            if let Value::Message(s) = v {
                if !sigma.contains(*s) {
                    return Err(format!("{id} holds symbol {} outside the alphabet", s.0));
                }
            }
        }
        for (p, ps) in self.processes.iter().enumerate() {
            if ps.pc >= self.system.pc_count(p) {
                return Err(format!("process {p} pc {} out of range", ps.pc));
            }
            for l in &ps.locals {
                for s in [l.r, l.s, l.val] {
                    if !sigma.contains(s) {
                        return Err(format!("process {p} local symbol {} outside alphabet", s.0));
                    }
                }
            }
        }
        for row in &self.sources {
            for c in row {
                if c.position >= c.script.len() {
                    return Err("cursor position past script end".into());
                }
            }
        }
        Ok(())
    }
}

/// Seed of the value stream used by [`Configuration::corrupt`].
pub fn corruption_value_seed(seed: u64) -> u64 {
    splitmix64(seed ^ 0x5eed_c0de_0bad_f00d)
}

/// SplitMix64 finalizer, used to derive independent seeds.
pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

enum FieldSlot<'a> {
    Value {
        value: &'a mut Value,
        domain: Domain,
        alphabet_len: usize,
    },
    Pc {
        pc: &'a mut usize,
        count: usize,
    },
}

impl FieldSlot<'_> {
    fn randomize(&mut self, rng: &mut ChaCha8Rng) {
        match self {
            FieldSlot::Value { value, domain, alphabet_len } => {
                let size = match domain {
                    Domain::Message => *alphabet_len,
                    Domain::Bit => 2,
                };
                **value = domain.value(rng.gen_range(0..size));
            }
            FieldSlot::Pc { pc, count } => **pc = rng.gen_range(0..*count),
        }
    }
}
