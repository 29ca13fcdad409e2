//! Central-demon scheduling and bounded simulation.
//!
//! Every process is enabled in every configuration, so a policy only decides
//! *who* moves next; it never has to check enabledness.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::config::Configuration;
use crate::model::ProcessId;
use crate::protocol::{Action, Event};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SchedulerError {
    #[error("scripted schedule exhausted after {0} steps")]
    EndOfSchedule(usize),
    #[error("schedule names process {0}, but the system has {1} processes")]
    UnknownProcess(ProcessId, usize),
    #[error("adversary delay factor must be at least 1")]
    InvalidBound,
}

/// Serializable description of a policy; [`PolicySpec::build`] turns it into
/// a stateful [`SchedulerPolicy`].
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum PolicySpec {
    RoundRobin,
    RandomFair,
    Adversary { k: usize },
    Scripted(Vec<ProcessId>),
}

impl PolicySpec {
    pub fn build(&self, seed: u64) -> Result<SchedulerPolicy, SchedulerError> {
        Ok(match self {
            PolicySpec::RoundRobin => SchedulerPolicy::round_robin(),
            PolicySpec::RandomFair => SchedulerPolicy::random_fair(seed),
            PolicySpec::Adversary { k } => SchedulerPolicy::adversary(*k, seed)?,
            PolicySpec::Scripted(ids) => SchedulerPolicy::scripted(ids.clone()),
        })
    }

    /// Fairness bound a trace of this policy must pass in [`audit_fairness`],
    /// if the policy promises one.
    pub fn fairness_bound(&self, n: usize) -> Option<usize> {
        match self {
            PolicySpec::RoundRobin => Some(n - 1),
            PolicySpec::Adversary { k } => Some(k * n),
            PolicySpec::RandomFair | PolicySpec::Scripted(_) => None,
        }
    }
}

impl fmt::Display for PolicySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PolicySpec::RoundRobin => f.write_str("round-robin"),
            PolicySpec::RandomFair => f.write_str("random"),
            PolicySpec::Adversary { k } => write!(f, "adversary:{k}"),
            PolicySpec::Scripted(ids) => write!(f, "script[{}]", ids.len()),
        }
    }
}

#[derive(Clone, Debug)]
pub enum SchedulerPolicy {
    RoundRobin { next: usize },
    RandomFair { rng: ChaCha8Rng },
    /// Starves no process for more than `k·n` consecutive steps, and within
    /// that budget prefers processes about to write a permission register.
    BoundedDelayAdversary { k: usize, rng: ChaCha8Rng, waits: Vec<usize> },
    Scripted { ids: Vec<ProcessId>, pos: usize },
}

impl SchedulerPolicy {
    pub fn round_robin() -> Self {
        SchedulerPolicy::RoundRobin { next: 0 }
    }

    pub fn random_fair(seed: u64) -> Self {
        SchedulerPolicy::RandomFair {
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn adversary(k: usize, seed: u64) -> Result<Self, SchedulerError> {
        if k == 0 {
            return Err(SchedulerError::InvalidBound);
        }
        Ok(SchedulerPolicy::BoundedDelayAdversary {
            k,
            rng: ChaCha8Rng::seed_from_u64(seed),
            waits: Vec::new(),
        })
    }

    pub fn scripted(ids: Vec<ProcessId>) -> Self {
        SchedulerPolicy::Scripted { ids, pos: 0 }
    }

    pub fn next_process(&mut self, config: &Configuration) -> Result<ProcessId, SchedulerError> {
        let n = config.system().n();
        match self {
            SchedulerPolicy::RoundRobin { next } => {
                let p = *next % n;
                *next = (p + 1) % n;
                Ok(p)
            }
            SchedulerPolicy::RandomFair { rng } => Ok(rng.gen_range(0..n)),
            SchedulerPolicy::BoundedDelayAdversary { k, rng, waits } => {
                if waits.len() != n {
                    *waits = vec![0; n];
                }
                let p = choose_adversarially(*k * n, waits, rng, config);
                for (q, w) in waits.iter_mut().enumerate() {
                    *w = if q == p { 0 } else { *w + 1 };
                }
                Ok(p)
            }
            SchedulerPolicy::Scripted { ids, pos } => {
                let p = *ids.get(*pos).ok_or(SchedulerError::EndOfSchedule(*pos))?;
                if p >= n {
                    return Err(SchedulerError::UnknownProcess(p, n));
                }
                *pos += 1;
                Ok(p)
            }
        }
    }
}

/// Picks a process such that, after this step, every process can still be
/// served before its wait exceeds `bound`.
///
/// Feasibility is the earliest-deadline-first test: with the other processes
/// sorted by remaining slack, the `j`-th of them must tolerate `j` further
/// skips.
fn choose_adversarially(
    bound: usize,
    waits: &[usize],
    rng: &mut ChaCha8Rng,
    config: &Configuration,
) -> ProcessId {
    let n = waits.len();
    let mut slack: Vec<(usize, ProcessId)> = waits
        .iter()
        .enumerate()
        .map(|(p, &w)| (bound.saturating_sub(w), p))
        .collect();
    slack.sort_unstable();

    let feasible = |chosen: ProcessId| {
        let mut j = 0;
        for &(s, p) in &slack {
            if p == chosen {
                continue;
            }
            // Skipped now, then skipped j more times before its turn.
            if s < j + 1 {
                return false;
            }
            j += 1;
        }
        true
    };

    let candidates: Vec<ProcessId> = (0..n).filter(|&p| feasible(p)).collect();
    debug_assert!(!candidates.is_empty(), "the earliest deadline is always feasible");
    if candidates.is_empty() {
        return slack[0].1;
    }
    let permission_kind = config.system().kind().permission_register();
    let preferred: Vec<ProcessId> = candidates
        .iter()
        .copied()
        .filter(|&p| {
            let (action, kind, _) = config.next_access(p);
            action == Action::Write && kind == permission_kind
        })
        .collect();
    let pool = if preferred.is_empty() { &candidates } else { &preferred };
    pool[rng.gen_range(0..pool.len())]
}

/// A finite computation: the starting configuration, one event per step, and
/// the configuration reached.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Trace {
    pub initial: Configuration,
    pub events: Vec<Event>,
    pub final_config: Configuration,
}

impl Trace {
    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    /// Process ids in scheduling order.
    pub fn schedule(&self) -> Vec<ProcessId> {
        self.events.iter().map(|e| e.process).collect()
    }

    /// Re-executes the schedule from `initial` and compares every event and
    /// the final configuration.
    pub fn verify_replay(&self) -> Result<(), String> {
        let mut config = self.initial.clone();
        for (i, recorded) in self.events.iter().enumerate() {
            if recorded.process >= config.system().n() {
                return Err(format!("event {i} names unknown process {}", recorded.process));
            }
            let ev = config.step(recorded.process, i as u64);
            if ev != *recorded {
                return Err(format!("event {i} differs on replay: {ev:?} vs {recorded:?}"));
            }
        }
        if config != self.final_config {
            return Err("replayed final configuration differs".into());
        }
        Ok(())
    }
}

/// Runs exactly `steps` central-demon steps.
pub fn run(
    config: &Configuration,
    policy: &mut SchedulerPolicy,
    steps: usize,
) -> Result<Trace, SchedulerError> {
    let mut current = config.clone();
    let mut events = Vec::with_capacity(steps);
    for i in 0..steps {
        let p = policy.next_process(&current)?;
        events.push(current.step(p, i as u64));
    }
    Ok(Trace {
        initial: config.clone(),
        events,
        final_config: current,
    })
}

/// True iff no process goes unscheduled for more than `bound` consecutive
/// events, counting the stretch before its first and after its last step.
pub fn audit_fairness(trace: &Trace, bound: usize) -> bool {
    let n = trace.initial.system().n();
    let mut last: Vec<Option<usize>> = vec![None; n];
    for (i, e) in trace.events.iter().enumerate() {
        let gap = match last[e.process] {
            Some(j) => i - j - 1,
            None => i,
        };
        if gap > bound {
            return false;
        }
        last[e.process] = Some(i);
    }
    let len = trace.events.len();
    last.iter().all(|l| {
        let trailing = match l {
            Some(j) => len - j - 1,
            None => len,
        };
        trailing <= bound
    })
}
