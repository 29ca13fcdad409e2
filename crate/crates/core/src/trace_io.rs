//! Text formats for traces, configurations and schedules.
//!
//! A configuration is a block of `@` lines:
//!
//! ```text
//! @protocol quasi-rendezvous
//! @alphabet abc
//! @processes 3
//! @edge 0 1
//! @script 0 aaabbbbcc
//! @cursor 0 0 4
//! @register 0 1 Write b
//! @process 0 7
//! @locals 0 0 r=a b=1 c=0 l=1 d=0
//! ```
//!
//! A trace is a configuration block (the initial one) followed by one event
//! per line: `step process action kind owner peer value pc_before pc_after`.
//! Lines starting with `#` are comments. The final configuration is not
//! stored; reading a trace replays it and rejects any event that disagrees.

use std::fmt::Write as _;
use std::sync::Arc;

use thiserror::Error;

use crate::config::{Configuration, System};
use crate::model::{Alphabet, ModelError, ProcessId, RegisterId, RegisterKind};
use crate::protocol::{Action, LocalVar, ProtocolKind};
use crate::scheduler::Trace;
use crate::topology::Topology;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FormatError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("{0}")]
    Model(#[from] ModelError),
    #[error("trace does not replay: {0}")]
    Replay(String),
}

fn syntax(line: usize, message: impl Into<String>) -> FormatError {
    FormatError::Syntax {
        line,
        message: message.into(),
    }
}

pub fn write_configuration(config: &Configuration) -> String {
    let system = config.system();
    let sigma = system.alphabet();
    let topo = system.topology();
    let mut out = String::new();
    let _ = writeln!(out, "@protocol {}", system.kind());
    let _ = writeln!(out, "@alphabet {}", sigma.as_string());
    let _ = writeln!(out, "@processes {}", system.n());
    for &(u, v) in topo.edges() {
        let _ = writeln!(out, "@edge {u} {v}");
    }
    for p in 0..system.n() {
        let _ = writeln!(out, "@script {p} {}", sigma.render(system.script(p, 0)));
    }
    for (p, row) in config.sources().iter().enumerate() {
        for (slot, cursor) in row.iter().enumerate() {
            if cursor.position != 0 {
                let _ = writeln!(out, "@cursor {p} {slot} {}", cursor.position);
            }
        }
    }
    for (i, v) in config.registers().iter().enumerate() {
        let id = system.register_id(i);
        let _ = writeln!(
            out,
            "@register {} {} {} {}",
            id.owner,
            id.peer,
            id.kind,
            sigma.render_value(*v)
        );
    }
    let vars = system.kind().local_vars();
    for (p, state) in config.processes().iter().enumerate() {
        let _ = writeln!(out, "@process {p} {}", state.pc);
        for (slot, locals) in state.locals.iter().enumerate() {
            let _ = write!(out, "@locals {p} {slot}");
            for &v in vars {
                let _ = write!(out, " {}={}", v.name(), sigma.render_value(locals.get(v)));
            }
            out.push('\n');
        }
    }
    out
}

#[derive(Default)]
struct Header {
    protocol: Option<ProtocolKind>,
    alphabet: Option<Alphabet>,
    processes: Option<usize>,
    edges: Vec<(ProcessId, ProcessId)>,
    scripts: Vec<(ProcessId, String)>,
    body: Vec<(usize, Vec<String>)>,
}

fn parse_num<T: std::str::FromStr>(line: usize, field: &str, what: &str) -> Result<T, FormatError> {
    field
        .parse()
        .map_err(|_| syntax(line, format!("bad {what} '{field}'")))
}

/// Event lines with their 1-based line numbers.
type EventLines<'a> = Vec<(usize, Vec<&'a str>)>;

/// Splits a text into its configuration header and event lines.
fn parse_header(text: &str) -> Result<(Header, EventLines<'_>), FormatError> {
    let mut h = Header::default();
    let mut events = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let t = raw.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = t.split_whitespace().collect();
        match fields[0] {
            "@protocol" if fields.len() == 2 => h.protocol = Some(fields[1].parse()?),
            "@alphabet" if fields.len() == 2 => h.alphabet = Some(fields[1].parse()?),
            "@processes" if fields.len() == 2 => h.processes = Some(parse_num(line, fields[1], "count")?),
            "@edge" if fields.len() == 3 => h.edges.push((
                parse_num(line, fields[1], "process")?,
                parse_num(line, fields[2], "process")?,
            )),
            "@script" if fields.len() == 3 => {
                h.scripts.push((parse_num(line, fields[1], "process")?, fields[2].to_string()))
            }
            "@cursor" | "@register" | "@process" | "@locals" => {
                h.body.push((line, fields.iter().map(|s| s.to_string()).collect()))
            }
            f if f.starts_with('@') => return Err(syntax(line, format!("malformed '{f}' line"))),
            _ => events.push((line, fields)),
        }
    }
    Ok((h, events))
}

fn build(h: &Header) -> Result<Configuration, FormatError> {
    let missing = |what: &str| syntax(0, format!("missing @{what} line"));
    let kind = h.protocol.ok_or_else(|| missing("protocol"))?;
    let alphabet = h.alphabet.clone().ok_or_else(|| missing("alphabet"))?;
    let n = h.processes.ok_or_else(|| missing("processes"))?;
    let topology = Topology::from_edges(n, &h.edges)?;
    let mut builder = System::builder(kind, topology).alphabet(alphabet);
    for (p, w) in &h.scripts {
        builder = builder.process_script(*p, w.clone());
    }
    let system = builder.build()?;
    let mut config = Configuration::canonical(&system);
    apply_body(&system, &mut config, &h.body)?;
    config.validate().map_err(|m| syntax(0, m))?;
    Ok(config)
}

fn apply_body(system: &Arc<System>, config: &mut Configuration, body: &[(usize, Vec<String>)]) -> Result<(), FormatError> {
    let sigma = system.alphabet();
    let n = system.n();
    let process = |line: usize, f: &str| -> Result<ProcessId, FormatError> {
        let p: ProcessId = parse_num(line, f, "process")?;
        if p >= n {
            return Err(syntax(line, format!("process {p} out of range")));
        }
        Ok(p)
    };
    for (line, f) in body {
        let line = *line;
        match (f[0].as_str(), f.len()) {
            ("@cursor", 4) => {
                let p = process(line, &f[1])?;
                let slot: usize = parse_num(line, &f[2], "slot")?;
                if slot >= system.topology().degree(p) {
                    return Err(syntax(line, "slot out of range"));
                }
                config.set_cursor_position(p, slot, parse_num(line, &f[3], "position")?);
            }
            ("@register", 5) => {
                let kind: RegisterKind = f[3].parse()?;
                let reg = RegisterId::new(kind, process(line, &f[1])?, process(line, &f[2])?);
                let value = sigma.parse_value(kind.domain(), &f[4])?;
                config.set_register(reg, value)?;
            }
            ("@process", 3) => {
                let p = process(line, &f[1])?;
                let pc: usize = parse_num(line, &f[2], "pc")?;
                if pc >= system.pc_count(p) {
                    return Err(syntax(line, format!("pc {pc} out of range")));
                }
                config.process_mut(p).pc = pc;
            }
            ("@locals", len) if len >= 3 => {
                let p = process(line, &f[1])?;
                let slot: usize = parse_num(line, &f[2], "slot")?;
                if slot >= system.topology().degree(p) {
                    return Err(syntax(line, "slot out of range"));
                }
                for assignment in &f[3..] {
                    let (name, text) = assignment
                        .split_once('=')
                        .ok_or_else(|| syntax(line, format!("expected var=value, got '{assignment}'")))?;
                    let var = LocalVar::from_name(name)
                        .filter(|v| system.kind().local_vars().contains(v))
                        .ok_or_else(|| syntax(line, format!("unknown local '{name}'")))?;
                    let value = sigma.parse_value(var.domain(), text)?;
                    config.process_mut(p).locals[slot].set(var, value);
                }
            }
            (tag, _) => return Err(syntax(line, format!("malformed '{tag}' line"))),
        }
    }
    Ok(())
}

pub fn read_configuration(text: &str) -> Result<Configuration, FormatError> {
    let (header, events) = parse_header(text)?;
    if let Some((line, _)) = events.first() {
        return Err(syntax(*line, "unexpected event line in a configuration"));
    }
    build(&header)
}

/// Serializes a trace; `comments` become leading `#` lines.
pub fn write_trace(trace: &Trace, comments: &[String]) -> String {
    let sigma = trace.initial.system().alphabet();
    let mut out = String::new();
    for c in comments {
        let _ = writeln!(out, "# {c}");
    }
    out.push_str(&write_configuration(&trace.initial));
    out.push_str("# step process action kind owner peer value pc_before pc_after\n");
    for e in &trace.events {
        let _ = writeln!(
            out,
            "{} {} {} {} {} {} {} {} {}",
            e.step_index,
            e.process,
            e.action.name(),
            e.register.kind,
            e.register.owner,
            e.register.peer,
            sigma.render_value(e.value),
            e.pc_before,
            e.pc_after
        );
    }
    out
}

/// Parses a trace and replays it, checking every recorded event.
pub fn read_trace(text: &str) -> Result<Trace, FormatError> {
    let (header, lines) = parse_header(text)?;
    let initial = build(&header)?;
    let system = initial.system().clone();
    let sigma = system.alphabet();
    let mut config = initial.clone();
    let mut events = Vec::with_capacity(lines.len());
    for (i, (line, f)) in lines.iter().enumerate() {
        let line = *line;
        if f.len() != 9 {
            return Err(syntax(line, format!("expected 9 fields, got {}", f.len())));
        }
        let step: u64 = parse_num(line, f[0], "step")?;
        if step != i as u64 {
            return Err(syntax(line, format!("expected step {i}, got {step}")));
        }
        let p: ProcessId = parse_num(line, f[1], "process")?;
        if p >= system.n() {
            return Err(syntax(line, format!("process {p} out of range")));
        }
        let action = match f[2] {
            "read" => Action::Read,
            "write" => Action::Write,
            other => return Err(syntax(line, format!("unknown action '{other}'"))),
        };
        let kind: RegisterKind = f[3].parse()?;
        let register = RegisterId::new(kind, parse_num(line, f[4], "owner")?, parse_num(line, f[5], "peer")?);
        let value = sigma.parse_value(kind.domain(), f[6])?;
        let pc_before: usize = parse_num(line, f[7], "pc")?;
        let pc_after: usize = parse_num(line, f[8], "pc")?;
        let ev = config.step(p, step);
        if (ev.action, ev.register, ev.value, ev.pc_before, ev.pc_after)
            != (action, register, value, pc_before, pc_after)
        {
            return Err(FormatError::Replay(format!(
                "line {line}: recorded event disagrees with the protocol"
            )));
        }
        events.push(ev);
    }
    Ok(Trace {
        initial,
        events,
        final_config: config,
    })
}

/// Whitespace-separated process ids; `#` starts a comment.
pub fn parse_schedule(text: &str) -> Result<Vec<ProcessId>, FormatError> {
    let mut ids = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let content = raw.split('#').next().unwrap_or("");
        for tok in content.split_whitespace() {
            ids.push(parse_num(idx + 1, tok, "process id")?);
        }
    }
    Ok(ids)
}

pub fn write_schedule(ids: &[ProcessId], comments: &[String]) -> String {
    let mut out = String::new();
    for c in comments {
        let _ = writeln!(out, "# {c}");
    }
    for chunk in ids.chunks(32) {
        let line: Vec<String> = chunk.iter().map(|p| p.to_string()).collect();
        out.push_str(&line.join(" "));
        out.push('\n');
    }
    out
}
