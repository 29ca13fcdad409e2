//! Undirected process graphs.
//!
//! Neighbour lists are ordered: the position of `B` in `A`'s list is the
//! neighbour index `i` used by the protocols' `for i = 1 to N_A` sweeps
//! (0-based here). For parsed and generated topologies the order is the order
//! in which edges appear.

use std::collections::VecDeque;
use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::model::{ModelError, ProcessId};

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Topology {
    adjacency: Vec<Vec<ProcessId>>,
    edges: Vec<(ProcessId, ProcessId)>,
}

impl Topology {
    /// Builds a connected simple graph. Every process must have at least one
    /// neighbour.
    pub fn from_edges(n: usize, edges: &[(ProcessId, ProcessId)]) -> Result<Self, ModelError> {
        if n < 2 {
            return Err(ModelError::InvalidTopology(format!(
                "need at least 2 processes, got {n}"
            )));
        }
        let mut adjacency = vec![Vec::new(); n];
        for &(u, v) in edges {
            if u >= n || v >= n {
                return Err(ModelError::InvalidTopology(format!(
                    "edge ({u}, {v}) references a process >= {n}"
                )));
            }
            if u == v {
                return Err(ModelError::InvalidTopology(format!("self-loop on {u}")));
            }
            if adjacency[u].contains(&v) {
                return Err(ModelError::InvalidTopology(format!("duplicate edge ({u}, {v})")));
            }
            adjacency[u].push(v);
            adjacency[v].push(u);
        }
        let topology = Topology {
            adjacency,
            edges: edges.to_vec(),
        };
        if let Some(p) = (0..n).find(|&p| topology.adjacency[p].is_empty()) {
            return Err(ModelError::InvalidTopology(format!("process {p} has no neighbour")));
        }
        if !topology.is_connected() {
            return Err(ModelError::InvalidTopology("graph is not connected".into()));
        }
        Ok(topology)
    }

    /// Cycle `0 - 1 - ... - (n-1) - 0`. For `n = 2` this degenerates to a
    /// single link.
    pub fn ring(n: usize) -> Result<Self, ModelError> {
        if n == 2 {
            return Self::line(2);
        }
        let edges: Vec<_> = (0..n).map(|i| (i, (i + 1) % n)).collect();
        Self::from_edges(n, &edges)
    }

    pub fn line(n: usize) -> Result<Self, ModelError> {
        let edges: Vec<_> = (1..n).map(|i| (i - 1, i)).collect();
        Self::from_edges(n, &edges)
    }

    /// Process 0 is the hub.
    pub fn star(n: usize) -> Result<Self, ModelError> {
        let edges: Vec<_> = (1..n).map(|i| (0, i)).collect();
        Self::from_edges(n, &edges)
    }

    pub fn complete(n: usize) -> Result<Self, ModelError> {
        let edges: Vec<_> = (0..n)
            .flat_map(|u| (u + 1..n).map(move |v| (u, v)))
            .collect();
        Self::from_edges(n, &edges)
    }

    /// Erdős–Rényi graph conditioned on connectivity: samples are redrawn from
    /// the same seeded stream until a connected one appears.
    pub fn gnp(n: usize, p: f64, seed: u64) -> Result<Self, ModelError> {
        if !(0.0..=1.0).contains(&p) || p == 0.0 {
            return Err(ModelError::InvalidTopology(format!(
                "gnp edge probability {p} must be in (0, 1]"
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..10_000 {
            let edges: Vec<_> = (0..n)
                .flat_map(|u| (u + 1..n).map(move |v| (u, v)))
                .filter(|_| rng.gen_bool(p))
                .collect();
            if let Ok(t) = Self::from_edges(n, &edges) {
                return Ok(t);
            }
        }
        Err(ModelError::InvalidTopology(format!(
            "gnp({n}, {p}, {seed}) produced no connected sample"
        )))
    }

    /// Parses the `n <count>` / `e <u> <v>` text format. Blank lines and lines
    /// starting with `#` are ignored.
    pub fn parse(text: &str) -> Result<Self, ModelError> {
        let mut n = None;
        let mut edges = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let trimmed = raw.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let err = |message: &str| ModelError::TopologyParse {
                line,
                message: message.to_string(),
            };
            let fields: Vec<&str> = trimmed.split_whitespace().collect();
            match fields.as_slice() {
                ["n", count] => {
                    if n.is_some() {
                        return Err(err("duplicate 'n' line"));
                    }
                    n = Some(count.parse::<usize>().map_err(|_| err("bad process count"))?);
                }
                ["e", u, v] => {
                    if n.is_none() {
                        return Err(err("'e' line before 'n' line"));
                    }
                    let u = u.parse::<usize>().map_err(|_| err("bad process id"))?;
                    let v = v.parse::<usize>().map_err(|_| err("bad process id"))?;
                    edges.push((u, v));
                }
                _ => return Err(err("expected 'n <count>' or 'e <u> <v>'")),
            }
        }
        let n = n.ok_or(ModelError::TopologyParse {
            line: 0,
            message: "missing 'n' line".into(),
        })?;
        Self::from_edges(n, &edges)
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("n {}\n", self.n());
        for &(u, v) in &self.edges {
            let _ = writeln!(out, "e {u} {v}");
        }
        out
    }

    pub fn n(&self) -> usize {
        self.adjacency.len()
    }

    pub fn edges(&self) -> &[(ProcessId, ProcessId)] {
        &self.edges
    }

    pub fn neighbors(&self, p: ProcessId) -> &[ProcessId] {
        &self.adjacency[p]
    }

    /// `N_A`.
    pub fn degree(&self, p: ProcessId) -> usize {
        self.adjacency[p].len()
    }

    pub fn max_degree(&self) -> usize {
        self.adjacency.iter().map(Vec::len).max().unwrap_or(0)
    }

    /// Position of `peer` in `owner`'s neighbour list.
    pub fn slot_of(&self, owner: ProcessId, peer: ProcessId) -> Option<usize> {
        self.adjacency.get(owner)?.iter().position(|&q| q == peer)
    }

    pub fn are_neighbors(&self, a: ProcessId, b: ProcessId) -> bool {
        self.slot_of(a, b).is_some()
    }

    /// Every ordered pair `(a, b)` of neighbours, grouped by `a` in slot order.
    pub fn directed_links(&self) -> impl Iterator<Item = (ProcessId, ProcessId)> + '_ {
        self.adjacency
            .iter()
            .enumerate()
            .flat_map(|(a, nbrs)| nbrs.iter().map(move |&b| (a, b)))
    }

    fn is_connected(&self) -> bool {
        let mut seen = vec![false; self.n()];
        let mut queue = VecDeque::from([0]);
        seen[0] = true;
        while let Some(u) = queue.pop_front() {
            for &v in &self.adjacency[u] {
                if !seen[v] {
                    seen[v] = true;
                    queue.push_back(v);
                }
            }
        }
        seen.into_iter().all(|s| s)
    }
}
