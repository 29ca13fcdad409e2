//! Experiment descriptions and the run / check / explore / bench pipelines.
//!
//! Every pipeline is a pure function of its inputs and returns its artifacts
//! as named strings; writing them anywhere is the caller's job.

use std::collections::BTreeMap;
use std::fmt;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::Arc;

use serde::Serialize;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::checker::{self, LinkStabilization, ProcessLiveness, StabilizationReport, Violation};
use crate::config::{Configuration, System};
use crate::explorer::{self, CounterexampleKind, ExploreError, ExploreOptions, Verdict};
use crate::model::{Alphabet, ProcessId};
use crate::protocol::ProtocolKind;
use crate::scheduler::{self, PolicySpec, Trace};
use crate::topology::Topology;
use crate::trace_io::{self, FormatError};

#[derive(Debug, Error)]
pub enum ExperimentError {
    /// A field of the spec is malformed; `field` names it.
    #[error("invalid {field}: {message}")]
    Field { field: String, message: String },
    #[error("cannot read {path}: {message}")]
    Io { path: PathBuf, message: String },
    #[error(transparent)]
    Format(#[from] FormatError),
    #[error(transparent)]
    Scheduler(#[from] scheduler::SchedulerError),
    #[error(transparent)]
    Explore(#[from] ExploreError),
}

fn field(name: &str, message: impl fmt::Display) -> ExperimentError {
    ExperimentError::Field {
        field: name.to_string(),
        message: message.to_string(),
    }
}

/// Reads a file named by spec field `name`; failures are field errors.
fn read_file(name: &str, path: &Path) -> Result<String, ExperimentError> {
    std::fs::read_to_string(path).map_err(|e| field(name, format!("cannot read {}: {e}", path.display())))
}

/// Where the topology comes from.
#[derive(Clone, Debug, PartialEq)]
pub enum TopologySpec {
    Ring(usize),
    Line(usize),
    Star(usize),
    Complete(usize),
    Gnp { n: usize, p: f64, seed: u64 },
    File(PathBuf),
}

impl TopologySpec {
    pub fn resolve(&self) -> Result<Topology, ExperimentError> {
        let t = match self {
            TopologySpec::Ring(n) => Topology::ring(*n),
            TopologySpec::Line(n) => Topology::line(*n),
            TopologySpec::Star(n) => Topology::star(*n),
            TopologySpec::Complete(n) => Topology::complete(*n),
            TopologySpec::Gnp { n, p, seed } => Topology::gnp(*n, *p, *seed),
            TopologySpec::File(path) => Topology::parse(&read_file("topology", path)?),
        };
        t.map_err(|e| field("topology", e))
    }

    /// Same generator family with `n` processes. File topologies have no
    /// family, so they cannot be resized.
    pub fn with_n(&self, n: usize) -> Option<TopologySpec> {
        Some(match self {
            TopologySpec::Ring(_) => TopologySpec::Ring(n),
            TopologySpec::Line(_) => TopologySpec::Line(n),
            TopologySpec::Star(_) => TopologySpec::Star(n),
            TopologySpec::Complete(_) => TopologySpec::Complete(n),
            TopologySpec::Gnp { p, seed, .. } => TopologySpec::Gnp { n, p: *p, seed: *seed },
            TopologySpec::File(_) => return None,
        })
    }
}

impl FromStr for TopologySpec {
    type Err = ExperimentError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts: Vec<&str> = s.split(':').collect();
        let num = |t: &str| t.parse::<usize>().map_err(|_| field("topology", format!("bad size '{t}'")));
        Ok(match parts.as_slice() {
            ["ring", n] => TopologySpec::Ring(num(n)?),
            ["line", n] => TopologySpec::Line(num(n)?),
            ["star", n] => TopologySpec::Star(num(n)?),
            ["complete", n] => TopologySpec::Complete(num(n)?),
            ["gnp", n, p, seed] => TopologySpec::Gnp {
                n: num(n)?,
                p: p.parse().map_err(|_| field("topology", format!("bad edge probability '{p}'")))?,
                seed: seed.parse().map_err(|_| field("topology", format!("bad seed '{seed}'")))?,
            },
            ["file", path] => TopologySpec::File(PathBuf::from(path)),
            [kind, ..] if ["ring", "line", "star", "complete", "gnp"].contains(kind) => {
                return Err(field("topology", format!("wrong number of parameters in '{s}'")))
            }
            _ if s.is_empty() => return Err(field("topology", "empty")),
            _ => TopologySpec::File(PathBuf::from(s)),
        })
    }
}

impl fmt::Display for TopologySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TopologySpec::Ring(n) => write!(f, "ring:{n}"),
            TopologySpec::Line(n) => write!(f, "line:{n}"),
            TopologySpec::Star(n) => write!(f, "star:{n}"),
            TopologySpec::Complete(n) => write!(f, "complete:{n}"),
            TopologySpec::Gnp { n, p, seed } => write!(f, "gnp:{n}:{p}:{seed}"),
            TopologySpec::File(path) => write!(f, "file:{}", path.display()),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum SchedulerSpec {
    Policy(PolicySpec),
    /// Scripted schedule read from a file.
    File(PathBuf),
}

impl SchedulerSpec {
    pub fn resolve(&self) -> Result<PolicySpec, ExperimentError> {
        match self {
            SchedulerSpec::Policy(p) => Ok(p.clone()),
            SchedulerSpec::File(path) => {
                let ids = trace_io::parse_schedule(&read_file("scheduler", path)?).map_err(|e| field("scheduler", e))?;
                Ok(PolicySpec::Scripted(ids))
            }
        }
    }
}

impl FromStr for SchedulerSpec {
    type Err = ExperimentError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "round-robin" | "rr" => SchedulerSpec::Policy(PolicySpec::RoundRobin),
            "random" | "random-fair" => SchedulerSpec::Policy(PolicySpec::RandomFair),
            _ => {
                if let Some(k) = s.strip_prefix("adversary:") {
                    let k: usize = k.parse().map_err(|_| field("scheduler", format!("bad delay factor '{k}'")))?;
                    if k == 0 {
                        return Err(field("scheduler", "delay factor must be at least 1"));
                    }
                    SchedulerSpec::Policy(PolicySpec::Adversary { k })
                } else if let Some(path) = s.strip_prefix("script:") {
                    SchedulerSpec::File(PathBuf::from(path))
                } else if let Some(ids) = s.strip_prefix("inline:") {
                    let ids = ids
                        .split(',')
                        .filter(|t| !t.is_empty())
                        .map(|t| t.trim().parse().map_err(|_| field("scheduler", format!("bad process id '{t}'"))))
                        .collect::<Result<_, _>>()?;
                    SchedulerSpec::Policy(PolicySpec::Scripted(ids))
                } else {
                    return Err(field(
                        "scheduler",
                        format!("unknown policy '{s}' (expected round-robin, random, adversary:K or script:PATH)"),
                    ));
                }
            }
        })
    }
}

impl fmt::Display for SchedulerSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SchedulerSpec::Policy(PolicySpec::Scripted(ids)) => {
                let ids: Vec<String> = ids.iter().map(|p| p.to_string()).collect();
                write!(f, "inline:{}", ids.join(","))
            }
            SchedulerSpec::Policy(p) => write!(f, "{p}"),
            SchedulerSpec::File(path) => write!(f, "script:{}", path.display()),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Corruption {
    pub fraction: f64,
    /// `None`: use the run seed.
    pub seed: Option<u64>,
}

impl FromStr for Corruption {
    type Err = ExperimentError;

    /// `fraction` or `fraction:seed`. Without a seed the run seed is used.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (f, seed) = match s.split_once(':') {
            Some((f, seed)) => (
                f,
                Some(seed.parse().map_err(|_| field("corrupt", format!("bad seed '{seed}'")))?),
            ),
            None => (s, None),
        };
        let fraction: f64 = f.parse().map_err(|_| field("corrupt", format!("bad fraction '{f}'")))?;
        if !(0.0..=1.0).contains(&fraction) {
            return Err(field("corrupt", format!("fraction {fraction} outside [0, 1]")));
        }
        Ok(Corruption { fraction, seed })
    }
}

/// Everything that determines an experiment.
#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentSpec {
    pub protocol: ProtocolKind,
    pub topology: TopologySpec,
    pub alphabet: Alphabet,
    /// Default script for every source; `None` means the alphabet in order.
    pub script: Option<String>,
    pub process_scripts: BTreeMap<ProcessId, String>,
    pub scheduler: SchedulerSpec,
    pub seed: u64,
    pub steps: usize,
    pub corrupt: Option<Corruption>,
    pub out: Option<PathBuf>,
    /// Node cap for `explore`.
    pub cap: u64,
    /// Inclusive process-count range for `bench`.
    pub bench_n: (usize, usize),
    pub bench_seeds: u64,
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        ExperimentSpec {
            protocol: ProtocolKind::ReadChecking,
            topology: TopologySpec::Ring(4),
            alphabet: Alphabet::default(),
            script: None,
            process_scripts: BTreeMap::new(),
            scheduler: SchedulerSpec::Policy(PolicySpec::RoundRobin),
            seed: 0,
            steps: 100_000,
            corrupt: None,
            out: None,
            cap: explorer::DEFAULT_CAP,
            bench_n: (2, 20),
            bench_seeds: 100,
        }
    }
}

impl ExperimentSpec {
    /// Applies one `key = value` setting.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ExperimentError> {
        let value = value.trim();
        let num = |name: &str| -> Result<u64, ExperimentError> {
            value.parse().map_err(|_| field(name, format!("expected a number, got '{value}'")))
        };
        match key.trim() {
            "protocol" => self.protocol = value.parse().map_err(|e| field("protocol", e))?,
            "topology" => self.topology = value.parse()?,
            "alphabet" => self.alphabet = value.parse().map_err(|e| field("alphabet", e))?,
            "script" => match value.split_once('=') {
                Some((p, w)) => {
                    let p: ProcessId = p.trim().parse().map_err(|_| field("script", format!("bad process '{p}'")))?;
                    self.process_scripts.insert(p, w.trim().to_string());
                }
                None => self.script = Some(value.to_string()),
            },
            k if k.starts_with("script.") => {
                let p = &k["script.".len()..];
                let p: ProcessId = p.parse().map_err(|_| field(k, format!("bad process '{p}'")))?;
                self.process_scripts.insert(p, value.to_string());
            }
            "scheduler" => self.scheduler = value.parse()?,
            "seed" => self.seed = num("seed")?,
            "steps" => self.steps = num("steps")? as usize,
            "corrupt" => self.corrupt = if value == "none" { None } else { Some(value.parse()?) },
            "out" => self.out = Some(PathBuf::from(value)),
            "cap" => self.cap = num("cap")?,
            "n" => {
                let (lo, hi) = match value.split_once("..") {
                    Some((lo, hi)) => (lo, hi),
                    None => (value, value),
                };
                let parse = |t: &str| t.trim().parse::<usize>().map_err(|_| field("n", format!("bad range '{value}'")));
                let (lo, hi) = (parse(lo)?, parse(hi)?);
                if lo > hi || lo < 2 {
                    return Err(field("n", format!("bad range '{value}'")));
                }
                self.bench_n = (lo, hi);
            }
            "seeds" => self.bench_seeds = num("seeds")?,
            other => return Err(field(other, "unknown key")),
        }
        Ok(())
    }

    /// Parses flat `key = value` text; `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self, ExperimentError> {
        let mut spec = ExperimentSpec::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| field(&format!("line {}", i + 1), "expected key = value"))?;
            spec.set(k, v)?;
        }
        Ok(spec)
    }

    /// Canonical text form; [`ExperimentSpec::parse`] reads it back. The
    /// output path is left out: moving the artifacts does not change the
    /// experiment.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "protocol = {}", self.protocol);
        let _ = writeln!(out, "topology = {}", self.topology);
        let _ = writeln!(out, "alphabet = {}", self.alphabet.as_string());
        if let Some(s) = &self.script {
            let _ = writeln!(out, "script = {s}");
        }
        for (p, w) in &self.process_scripts {
            let _ = writeln!(out, "script.{p} = {w}");
        }
        let _ = writeln!(out, "scheduler = {}", self.scheduler);
        let _ = writeln!(out, "seed = {}", self.seed);
        let _ = writeln!(out, "steps = {}", self.steps);
        let _ = match self.corrupt {
            Some(Corruption { fraction, seed: Some(seed) }) => writeln!(out, "corrupt = {fraction}:{seed}"),
            Some(Corruption { fraction, seed: None }) => writeln!(out, "corrupt = {fraction}"),
            None => writeln!(out, "corrupt = none"),
        };
        let _ = writeln!(out, "cap = {}", self.cap);
        let _ = writeln!(out, "n = {}..{}", self.bench_n.0, self.bench_n.1);
        let _ = writeln!(out, "seeds = {}", self.bench_seeds);
        out
    }

    /// Corruption fraction and the seed actually used.
    pub fn corruption(&self) -> Option<(f64, u64)> {
        self.corrupt.map(|c| (c.fraction, c.seed.unwrap_or(self.seed)))
    }

    pub fn system_with(&self, topology: Topology) -> Result<Arc<System>, ExperimentError> {
        let mut b = System::builder(self.protocol, topology).alphabet(self.alphabet.clone());
        if let Some(s) = &self.script {
            b = b.script(s.clone());
        }
        for (p, w) in &self.process_scripts {
            b = b.process_script(*p, w.clone());
        }
        b.build().map_err(|e| field("script", e))
    }

    pub fn system(&self) -> Result<Arc<System>, ExperimentError> {
        self.system_with(self.topology.resolve()?)
    }

    pub fn initial_configuration(&self, system: &Arc<System>) -> Result<Configuration, ExperimentError> {
        let c = Configuration::canonical(system);
        match self.corruption() {
            Some((fraction, seed)) => c.corrupt(fraction, seed).map_err(|e| field("corrupt", e)),
            None => Ok(c),
        }
    }

    /// SHA-256 over the canonical text plus the resolved topology and
    /// schedule, so file-backed inputs are covered too.
    pub fn hash(&self) -> Result<String, ExperimentError> {
        let mut h = Sha256::new();
        h.update(self.to_text());
        h.update(self.topology.resolve()?.to_text());
        if let SchedulerSpec::File(_) = self.scheduler {
            h.update(format!("{:?}", self.scheduler.resolve()?));
        }
        Ok(h.finalize().iter().map(|b| format!("{b:02x}")).collect())
    }
}

/// A named output file.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Artifact {
    pub name: String,
    pub contents: String,
}

impl Artifact {
    fn new(name: &str, contents: String) -> Self {
        Artifact {
            name: name.to_string(),
            contents,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct CheckSummary {
    pub spec_hash: Option<String>,
    pub protocol: String,
    pub processes: usize,
    pub steps: usize,
    pub violations: BTreeMap<String, u64>,
    pub post_stabilization_violations: u64,
    pub stabilization: StabilizationReport,
    pub rounds: u64,
    pub liveness: Vec<ProcessLiveness>,
    pub live: bool,
    pub ok: bool,
}

pub struct CheckOutcome {
    pub trace: Trace,
    pub violations: Vec<Violation>,
    pub summary: CheckSummary,
    pub artifacts: Vec<Artifact>,
}

impl CheckOutcome {
    pub fn ok(&self) -> bool {
        self.summary.ok
    }
}

fn summarize(trace: Trace, spec_hash: Option<String>) -> CheckOutcome {
    let violations = checker::check_trace(&trace);
    let stabilization = checker::stabilization_from(&trace, &violations, trace.len() as u64 / 2);
    let liveness = checker::liveness_stats(&trace);
    let live = liveness
        .iter()
        .all(|l| l.steps > 0 && l.loop_exits > 0 && l.writes.iter().all(|&w| w > 0));
    // violations inside the settle window: the run never got clean
    let late = stabilization
        .links
        .iter()
        .filter(|l| l.step.is_none())
        .map(|l: &LinkStabilization| l.violations)
        .sum::<u64>();
    let mut by_property = BTreeMap::new();
    for v in &violations {
        *by_property.entry(v.property.name().to_string()).or_insert(0) += 1;
    }
    let system = trace.initial.system();
    let summary = CheckSummary {
        spec_hash,
        protocol: system.kind().name().to_string(),
        processes: system.n(),
        steps: trace.len(),
        violations: by_property,
        post_stabilization_violations: late,
        rounds: checker::rounds(&trace).len() as u64,
        ok: stabilization.converged() && live,
        stabilization,
        liveness,
        live,
    };
    let mut report = serde_json::to_string_pretty(&summary).expect("plain data serializes");
    report.push('\n');
    let mut jsonl = String::new();
    for v in &violations {
        jsonl.push_str(&serde_json::to_string(v).expect("plain data serializes"));
        jsonl.push('\n');
    }
    let artifacts = vec![
        Artifact::new("report.json", report),
        Artifact::new("violations.jsonl", jsonl),
    ];
    CheckOutcome {
        trace,
        violations,
        summary,
        artifacts,
    }
}

/// Runs the spec, checks the trace and packages trace plus reports.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<CheckOutcome, ExperimentError> {
    let system = spec.system()?;
    let initial = spec.initial_configuration(&system)?;
    let mut policy = spec.scheduler.resolve()?.build(spec.seed)?;
    let trace = scheduler::run(&initial, &mut policy, spec.steps)?;
    let hash = spec.hash()?;
    let trace_text = trace_io::write_trace(&trace, &[format!("spec {hash}")]);
    let mut outcome = summarize(trace, Some(hash));
    outcome.artifacts.insert(0, Artifact::new("trace.txt", trace_text));
    outcome.artifacts.push(Artifact::new("spec.txt", spec.to_text()));
    Ok(outcome)
}

/// Re-checks a trace file. The spec hash is taken from its header, if any.
pub fn check_trace_text(text: &str) -> Result<CheckOutcome, ExperimentError> {
    let trace = trace_io::read_trace(text)?;
    let hash = text
        .lines()
        .take_while(|l| l.starts_with('#'))
        .find_map(|l| l.strip_prefix("# spec "))
        .map(|h| h.trim().to_string());
    Ok(summarize(trace, hash))
}

pub struct ExploreOutcome {
    pub nodes: u64,
    pub legitimate: u64,
    pub verdict: Verdict,
    pub artifacts: Vec<Artifact>,
}

impl ExploreOutcome {
    pub fn verified(&self) -> bool {
        self.verdict == Verdict::Verified
    }
}

/// How many times a counterexample cycle is unrolled in its trace artifact.
const UNROLL: usize = 3;

pub fn explore(spec: &ExperimentSpec) -> Result<ExploreOutcome, ExperimentError> {
    let system = spec.system()?;
    let options = ExploreOptions {
        canonicalize: true,
        cap: spec.cap,
    };
    let graph = explorer::build_state_graph(&system, options)?;
    let legit = explorer::legitimate_set(&graph);
    let legitimate = legit.iter().filter(|&&b| b).count() as u64;
    let verdict = explorer::verify_convergence(&graph, &legit)?;
    let hash = spec.hash()?;

    let mut text = String::new();
    let _ = writeln!(text, "spec {hash}");
    let _ = writeln!(text, "protocol {}", system.kind());
    let _ = writeln!(text, "nodes {}", graph.node_count());
    let _ = writeln!(text, "legitimate {legitimate}");
    let mut artifacts = Vec::new();
    match &verdict {
        Verdict::Verified => text.push_str("verdict verified\n"),
        Verdict::Counterexample(cx) => {
            let kind = match cx.kind {
                CounterexampleKind::NonConvergence => "non-convergence".to_string(),
                CounterexampleKind::Blocked { process, slot } => format!("blocked process {process} slot {slot}"),
            };
            let _ = writeln!(text, "verdict counterexample {kind}");
            let _ = writeln!(text, "cycle_length {}", cx.cycle.len());
            let _ = writeln!(text, "cycle_has_violation {}", cx.includes_violation);

            let (start, monitors) = graph.space().decode(cx.start);
            let mut cfg = vec![format!("spec {hash}"), format!("counterexample {kind}")];
            cfg.push(format!("monitors {monitors:?}"));
            let mut config_text: String = cfg.iter().map(|c| format!("# {c}\n")).collect();
            config_text.push_str(&trace_io::write_configuration(&start));
            artifacts.push(Artifact::new("counterexample.config", config_text));
            artifacts.push(Artifact::new(
                "counterexample.schedule",
                trace_io::write_schedule(&cx.cycle, &[format!("repeat forever from counterexample.config ({kind})")]),
            ));
            let unrolled: Vec<ProcessId> = cx.cycle.iter().copied().cycle().take(cx.cycle.len() * UNROLL).collect();
            let len = unrolled.len();
            let trace = scheduler::run(&start, &mut scheduler::SchedulerPolicy::scripted(unrolled), len)?;
            artifacts.push(Artifact::new(
                "counterexample.trace",
                trace_io::write_trace(&trace, &[format!("spec {hash}"), format!("cycle unrolled {UNROLL} times")]),
            ));
        }
    }
    artifacts.insert(0, Artifact::new("verdict.txt", text));
    Ok(ExploreOutcome {
        nodes: graph.node_count(),
        legitimate,
        verdict,
        artifacts,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BenchRow {
    pub n: usize,
    pub runs: u64,
    pub converged: u64,
    pub max_rounds: Option<u64>,
    pub mean_rounds: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BenchTable {
    pub rows: Vec<BenchRow>,
}

impl BenchTable {
    pub fn to_text(&self) -> String {
        let mut out = String::from("    n   runs  converged  max_rounds  mean_rounds\n");
        for r in &self.rows {
            let max = r.max_rounds.map_or("-".to_string(), |m| m.to_string());
            let mean = r.mean_rounds.map_or("-".to_string(), |m| format!("{m:.2}"));
            let _ = writeln!(out, "{:>5}  {:>5}  {:>9}  {:>10}  {:>11}", r.n, r.runs, r.converged, max, mean);
        }
        out
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("n,runs,converged,max_rounds,mean_rounds\n");
        for r in &self.rows {
            let max = r.max_rounds.map_or(String::new(), |m| m.to_string());
            let mean = r.mean_rounds.map_or(String::new(), |m| format!("{m:.4}"));
            let _ = writeln!(out, "{},{},{},{},{}", r.n, r.runs, r.converged, max, mean);
        }
        out
    }
}

/// Rounds to stabilize for one (n, seed) cell, `None` if it did not settle.
pub fn bench_cell(spec: &ExperimentSpec, n: usize, seed: u64) -> Result<Option<u64>, ExperimentError> {
    let topo = spec
        .topology
        .with_n(n)
        .ok_or_else(|| field("topology", "bench needs a generated topology family"))?
        .resolve()?;
    let system = spec.system_with(topo)?;
    let fraction = spec.corrupt.map_or(1.0, |c| c.fraction);
    let initial = Configuration::canonical(&system)
        .corrupt(fraction, seed)
        .map_err(|e| field("corrupt", e))?;
    let mut policy = spec.scheduler.resolve()?.build(seed)?;
    let trace = scheduler::run(&initial, &mut policy, spec.steps)?;
    Ok(checker::stabilization_report(&trace).rounds_to_stabilize)
}

/// Corrupted starts under the spec's scheduler for each n in the range;
/// seeds run from `spec.seed`.
pub fn bench(spec: &ExperimentSpec) -> Result<BenchTable, ExperimentError> {
    let (lo, hi) = spec.bench_n;
    let mut rows = Vec::new();
    for n in lo..=hi {
        let mut rounds = Vec::new();
        for s in 0..spec.bench_seeds {
            if let Some(r) = bench_cell(spec, n, spec.seed.wrapping_add(s))? {
                rounds.push(r);
            }
        }
        let converged = rounds.len() as u64;
        rows.push(BenchRow {
            n,
            runs: spec.bench_seeds,
            converged,
            max_rounds: rounds.iter().copied().max(),
            mean_rounds: (converged > 0).then(|| rounds.iter().sum::<u64>() as f64 / converged as f64),
        });
    }
    Ok(BenchTable { rows })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spec_text_round_trips() {
        let text = "protocol = qrv\ntopology = gnp:10:0.4:7\nalphabet = ab\nscript = aab\nscript.3 = b\n\
                    scheduler = adversary:3\nseed = 9\nsteps = 500\ncorrupt = 0.5:4\nn = 3..5\nseeds = 7\n";
        let spec = ExperimentSpec::parse(text).unwrap();
        assert_eq!(spec.protocol, ProtocolKind::QuasiRendezvous);
        assert_eq!(spec.process_scripts.get(&3).map(String::as_str), Some("b"));
        assert_eq!(spec.bench_n, (3, 5));
        let again = ExperimentSpec::parse(&spec.to_text()).unwrap();
        assert_eq!(again, spec);
        assert_eq!(again.hash().unwrap(), spec.hash().unwrap());
    }

    #[test]
    fn bad_fields_are_named() {
        for (text, name) in [
            ("protocol = paxos", "protocol"),
            ("topology = ring:x", "topology"),
            ("scheduler = lottery", "scheduler"),
            ("corrupt = 1.5", "corrupt"),
            ("steps = many", "steps"),
            ("colour = red", "colour"),
        ] {
            match ExperimentSpec::parse(text) {
                Err(ExperimentError::Field { field, .. }) => assert_eq!(field, name, "{text}"),
                other => panic!("{text}: {other:?}"),
            }
        }
    }

    #[test]
    fn corruption_defaults_to_run_seed() {
        let mut spec = ExperimentSpec::default();
        spec.set("seed", "12").unwrap();
        spec.set("corrupt", "1.0").unwrap();
        assert_eq!(spec.corruption(), Some((1.0, 12)));
        assert!(spec.to_text().contains("corrupt = 1\n"));
        spec.set("corrupt", "1.0:3").unwrap();
        assert_eq!(spec.corruption(), Some((1.0, 3)));
    }

    #[test]
    fn hash_ignores_output_path() {
        let mut a = ExperimentSpec::default();
        let h = a.hash().unwrap();
        a.out = Some("elsewhere".into());
        assert_eq!(a.hash().unwrap(), h);
        a.seed = 1;
        assert_ne!(a.hash().unwrap(), h);
    }

    #[test]
    fn run_is_deterministic_and_clean() {
        let spec = ExperimentSpec::parse("protocol = rc\ntopology = ring:3\nscheduler = random\nseed = 5\nsteps = 3000").unwrap();
        let a = run_experiment(&spec).unwrap();
        let b = run_experiment(&spec).unwrap();
        assert_eq!(a.artifacts, b.artifacts);
        assert!(a.ok(), "{:?}", a.summary);
        assert!(a.violations.is_empty());

        let trace = &a.artifacts[0];
        assert_eq!(trace.name, "trace.txt");
        let rechecked = check_trace_text(&trace.contents).unwrap();
        assert_eq!(rechecked.summary.spec_hash, a.summary.spec_hash);
        assert_eq!(rechecked.artifacts, a.artifacts[1..3].to_vec());
    }

    #[test]
    fn starved_process_fails_the_run() {
        let spec = ExperimentSpec {
            steps: 40,
            scheduler: SchedulerSpec::Policy(PolicySpec::Scripted(vec![0; 40])),
            ..Default::default()
        };
        let out = run_experiment(&spec).unwrap();
        assert!(!out.summary.live);
        assert!(!out.ok());
        assert_eq!(ExperimentSpec::parse(&spec.to_text()).unwrap(), spec);
    }

    #[test]
    fn single_bench_cell() {
        let spec = ExperimentSpec::parse("topology = ring:2\nscheduler = random\nsteps = 4000\nn = 3\nseeds = 1").unwrap();
        let t = bench(&spec).unwrap();
        assert_eq!(t.rows.len(), 1);
        assert_eq!(t.rows[0].n, 3);
        assert_eq!(t.rows[0].converged, 1);
        assert_eq!(bench(&spec).unwrap(), t);
        assert_eq!(t.to_csv().lines().count(), 2);
    }
}
