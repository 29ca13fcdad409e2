//! Register values, register identities and the message alphabet.
//!
//! Every link between two neighbours `A` and `B` carries one group of
//! registers per direction. The group owned by `A` (written only by `A`,
//! readable by both endpoints) holds `Write_AB` plus either `Read_AB` (read
//! checking) or the alternating-bit pair `Control_AB` / `CheckControl_AB`
//! (rendezvous variants).

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub type ProcessId = usize;

/// Usage errors raised by the model layer.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("register {0} does not exist in this system")]
    UnknownRegister(RegisterId),
    #[error("processes {0} and {1} are not neighbours")]
    NotAnEdge(ProcessId, ProcessId),
    #[error("process {0} does not exist (system has {1} processes)")]
    UnknownProcess(ProcessId, usize),
    #[error("value {value} does not fit register kind {kind}")]
    DomainMismatch { kind: RegisterKind, value: Value },
    #[error("invalid alphabet: {0}")]
    InvalidAlphabet(String),
    #[error("symbol '{0}' is not in the alphabet")]
    UnknownSymbol(char),
    #[error("invalid topology: {0}")]
    InvalidTopology(String),
    #[error("topology parse error on line {line}: {message}")]
    TopologyParse { line: usize, message: String },
    #[error("source script must be non-empty")]
    EmptyScript,
    #[error("corruption fraction {0} is outside [0, 1]")]
    InvalidFraction(f64),
    #[error("{0}")]
    Protocol(String),
}

/// Index of a message symbol in the experiment's alphabet.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Symbol(pub u8);

/// One alternating bit.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Bit(pub bool);

impl Bit {
    pub const ZERO: Bit = Bit(false);
    pub const ONE: Bit = Bit(true);

    /// `(b + 1) mod 2`.
    pub fn flipped(self) -> Bit {
        Bit(!self.0)
    }

    pub fn as_u8(self) -> u8 {
        self.0 as u8
    }
}

impl fmt::Display for Bit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.as_u8())
    }
}

/// Content of a register or of a local variable.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Value {
    Message(Symbol),
    Bit(Bit),
}

impl Value {
    pub fn domain(self) -> Domain {
        match self {
            Value::Message(_) => Domain::Message,
            Value::Bit(_) => Domain::Bit,
        }
    }

    pub fn as_symbol(self) -> Option<Symbol> {
        match self {
            Value::Message(s) => Some(s),
            Value::Bit(_) => None,
        }
    }

    pub fn as_bit(self) -> Option<Bit> {
        match self {
            Value::Bit(b) => Some(b),
            Value::Message(_) => None,
        }
    }

    /// Dense index of the value within its domain.
    pub fn ordinal(self) -> usize {
        match self {
            Value::Message(s) => s.0 as usize,
            Value::Bit(b) => b.as_u8() as usize,
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Message(s) => write!(f, "#{}", s.0),
            Value::Bit(b) => write!(f, "{b}"),
        }
    }
}

/// Value domain of a register kind or local variable.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Domain {
    Message,
    Bit,
}

impl Domain {
    pub fn size(self, alphabet: &Alphabet) -> usize {
        match self {
            Domain::Message => alphabet.len(),
            Domain::Bit => 2,
        }
    }

    pub fn zero(self) -> Value {
        match self {
            Domain::Message => Value::Message(Symbol(0)),
            Domain::Bit => Value::Bit(Bit::ZERO),
        }
    }

    /// Inverse of [`Value::ordinal`].
    pub fn value(self, ordinal: usize) -> Value {
        match self {
            Domain::Message => Value::Message(Symbol(ordinal as u8)),
            Domain::Bit => Value::Bit(Bit(ordinal != 0)),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum RegisterKind {
    Write,
    Read,
    Control,
    CheckControl,
}

impl RegisterKind {
    pub const ALL: [RegisterKind; 4] = [
        RegisterKind::Write,
        RegisterKind::Read,
        RegisterKind::Control,
        RegisterKind::CheckControl,
    ];

    pub fn domain(self) -> Domain {
        match self {
            RegisterKind::Write | RegisterKind::Read => Domain::Message,
            RegisterKind::Control | RegisterKind::CheckControl => Domain::Bit,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            RegisterKind::Write => "Write",
            RegisterKind::Read => "Read",
            RegisterKind::Control => "Control",
            RegisterKind::CheckControl => "CheckControl",
        }
    }
}

impl fmt::Display for RegisterKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for RegisterKind {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        RegisterKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| ModelError::Protocol(format!("unknown register kind '{s}'")))
    }
}

/// `kind_{owner,peer}`: the register of `owner` dedicated to the link with `peer`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct RegisterId {
    pub owner: ProcessId,
    pub peer: ProcessId,
    pub kind: RegisterKind,
}

impl RegisterId {
    pub fn new(kind: RegisterKind, owner: ProcessId, peer: ProcessId) -> Self {
        RegisterId { owner, peer, kind }
    }
}

impl fmt::Display for RegisterId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}_{},{}", self.kind, self.owner, self.peer)
    }
}

/// The finite message alphabet Σ.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Alphabet {
    symbols: Vec<char>,
}

impl Default for Alphabet {
    fn default() -> Self {
        Alphabet {
            symbols: vec!['a', 'b', 'c'],
        }
    }
}

impl Alphabet {
    pub fn new(symbols: impl IntoIterator<Item = char>) -> Result<Self, ModelError> {
        let symbols: Vec<char> = symbols.into_iter().collect();
        if symbols.is_empty() {
            return Err(ModelError::InvalidAlphabet("empty".into()));
        }
        if symbols.len() > u8::MAX as usize {
            return Err(ModelError::InvalidAlphabet("more than 255 symbols".into()));
        }
        for (i, c) in symbols.iter().enumerate() {
            if c.is_whitespace() || matches!(c, '#' | '@' | '=' | ',') {
                return Err(ModelError::InvalidAlphabet(format!("symbol {c:?} is reserved")));
            }
            if symbols[..i].contains(c) {
                return Err(ModelError::InvalidAlphabet(format!("duplicate symbol {c:?}")));
            }
        }
        Ok(Alphabet { symbols })
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn symbols(&self) -> impl Iterator<Item = Symbol> + '_ {
        (0..self.symbols.len()).map(|i| Symbol(i as u8))
    }

    pub fn symbol(&self, c: char) -> Result<Symbol, ModelError> {
        self.symbols
            .iter()
            .position(|&s| s == c)
            .map(|i| Symbol(i as u8))
            .ok_or(ModelError::UnknownSymbol(c))
    }

    pub fn char_of(&self, s: Symbol) -> char {
        self.symbols[s.0 as usize]
    }

    pub fn contains(&self, s: Symbol) -> bool {
        (s.0 as usize) < self.symbols.len()
    }

    /// Parses a word such as `aaabbbbcc`.
    pub fn word(&self, text: &str) -> Result<Vec<Symbol>, ModelError> {
        text.chars().map(|c| self.symbol(c)).collect()
    }

    pub fn render(&self, word: &[Symbol]) -> String {
        word.iter().map(|&s| self.char_of(s)).collect()
    }

    /// Text form of a value: the symbol character, or `0`/`1` for bits.
    pub fn render_value(&self, v: Value) -> String {
        match v {
            Value::Message(s) => self.char_of(s).to_string(),
            Value::Bit(b) => b.to_string(),
        }
    }

    pub fn parse_value(&self, domain: Domain, text: &str) -> Result<Value, ModelError> {
        match domain {
            Domain::Bit => match text {
                "0" => Ok(Value::Bit(Bit::ZERO)),
                "1" => Ok(Value::Bit(Bit::ONE)),
                other => Err(ModelError::Protocol(format!("'{other}' is not a bit"))),
            },
            Domain::Message => {
                let mut chars = text.chars();
                match (chars.next(), chars.next()) {
                    (Some(c), None) => Ok(Value::Message(self.symbol(c)?)),
                    _ => Err(ModelError::Protocol(format!("'{text}' is not a single symbol"))),
                }
            }
        }
    }

    pub fn as_string(&self) -> String {
        self.symbols.iter().collect()
    }
}

impl FromStr for Alphabet {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Alphabet::new(s.chars())
    }
}
