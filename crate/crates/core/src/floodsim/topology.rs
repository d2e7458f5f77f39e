//! Directed link tables with a flood source and destination set.
//!
//! File format, one record per line, `#` starts a comment:
//!
//! ```text
//! source 0
//! destinations 4 7 8
//! nodes 9            # optional; defaults to the largest id + 1
//! 0 1 22.5           # src dst quality_db
//! ```
//!
//! `quality_db` is the received SNR of the link at 0 dBm for a 1 Msym/s
//! radio without interference.

use std::collections::{BTreeMap, VecDeque};
use std::fmt::Write;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed;

pub const MAX_DIAMETER: usize = 16;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Topology {
    pub nodes: usize,
    /// `(src, dst) -> quality_db`.
    pub links: BTreeMap<(usize, usize), f64>,
    pub source: usize,
    pub destinations: Vec<usize>,
}

impl Topology {
    /// Checks ids, reachability of every destination, and a diameter within
    /// `[1, 16]` hops (0 is accepted for a lone node).
    pub fn validate(&self) -> Result<usize> {
        if self.nodes == 0 {
            return Err(Error::Topology("no nodes".into()));
        }
        let bad = |id: usize| id >= self.nodes;
        if bad(self.source) {
            return Err(Error::Topology(format!("source {} out of range", self.source)));
        }
        if let Some(&d) = self.destinations.iter().find(|&&d| bad(d)) {
            return Err(Error::Topology(format!("destination {d} out of range")));
        }
        if let Some(((s, d), _)) = self.links.iter().find(|((s, d), q)| bad(*s) || bad(*d) || !q.is_finite()) {
            return Err(Error::Topology(format!("link {s} -> {d} is invalid")));
        }
        if self.destinations.is_empty() {
            return Err(Error::Topology("no destinations".into()));
        }
        let hops = self.hops_from_source();
        if let Some(&d) = self.destinations.iter().find(|&&d| hops[d].is_none()) {
            return Err(Error::Topology(format!(
                "destination {d} is not reachable from source {}",
                self.source
            )));
        }
        let diameter = self.diameter();
        let lone = self.nodes == 1;
        if (!lone && diameter == 0) || diameter > MAX_DIAMETER {
            return Err(Error::Topology(format!("diameter {diameter} outside [1, {MAX_DIAMETER}]")));
        }
        Ok(diameter)
    }

    /// BFS hop counts from the source over directed links.
    pub fn hops_from_source(&self) -> Vec<Option<usize>> {
        bfs(self, self.source)
    }

    /// Largest hop count from the source to any reachable node.
    pub fn diameter(&self) -> usize {
        self.hops_from_source().into_iter().flatten().max().unwrap_or(0)
    }

    /// Incoming neighbours of every node, `(src, quality_db)`.
    pub fn incoming(&self) -> Vec<Vec<(usize, f64)>> {
        let mut v = vec![Vec::new(); self.nodes];
        for (&(s, d), &q) in &self.links {
            v[d].push((s, q));
        }
        v
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut source = None;
        let mut destinations = None;
        let mut nodes = None;
        let mut links = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let err = |reason: String| Error::Parse { line, reason };
            let fields: Vec<&str> = content.split_whitespace().collect();
            let id = |s: &str| s.parse::<usize>().map_err(|_| err(format!("`{s}` is not a node id")));
            match fields[0] {
                "source" => {
                    let [_, v] = fields[..] else {
                        return Err(err("expected `source <id>`".into()));
                    };
                    source = Some(id(v)?);
                }
                "destinations" => {
                    destinations = Some(fields[1..].iter().map(|f| id(f)).collect::<Result<Vec<_>>>()?);
                }
                "nodes" => {
                    let [_, v] = fields[..] else {
                        return Err(err("expected `nodes <count>`".into()));
                    };
                    nodes = Some(id(v)?);
                }
                _ => {
                    let [s, d, q] = fields[..] else {
                        return Err(err("expected `src dst quality_db`".into()));
                    };
                    let q: f64 = q.parse().map_err(|_| err(format!("`{q}` is not a number")))?;
                    if !q.is_finite() {
                        return Err(err("quality must be finite".into()));
                    }
                    links.insert((id(s)?, id(d)?), q);
                }
            }
        }
        let source = source.ok_or(Error::Parse {
            line: 0,
            reason: "missing `source` header".into(),
        })?;
        let destinations = destinations.ok_or(Error::Parse {
            line: 0,
            reason: "missing `destinations` header".into(),
        })?;
        let max_id = links
            .keys()
            .flat_map(|&(s, d)| [s, d])
            .chain(destinations.iter().copied())
            .chain([source])
            .max()
            .unwrap_or(0);
        let t = Topology {
            nodes: nodes.unwrap_or(max_id + 1),
            links,
            source,
            destinations,
        };
        Ok(t)
    }

    pub fn to_text(&self) -> String {
        let mut s = format!("source {}\ndestinations", self.source);
        for d in &self.destinations {
            let _ = write!(s, " {d}");
        }
        let _ = writeln!(s, "\nnodes {}", self.nodes);
        for (&(a, b), q) in &self.links {
            let _ = writeln!(s, "{a} {b} {q}");
        }
        s
    }

    /// A single node that is its own destination.
    pub fn single() -> Self {
        Topology {
            nodes: 1,
            links: BTreeMap::new(),
            source: 0,
            destinations: vec![0],
        }
    }

    /// `n` nodes in a chain with symmetric links; source 0, destination `n - 1`.
    pub fn line(n: usize, quality_db: f64) -> Self {
        let mut links = BTreeMap::new();
        for i in 1..n {
            links.insert((i - 1, i), quality_db);
            links.insert((i, i - 1), quality_db);
        }
        Topology {
            nodes: n,
            links,
            source: 0,
            destinations: vec![n.saturating_sub(1)],
        }
    }

    /// `rows x cols` grid with orthogonal and diagonal neighbours. Link
    /// qualities get a symmetric uniform jitter of `±jitter_db` drawn from `seed`.
    /// Source is the top-left node; destinations are the nodes of the last
    /// column plus every second node of the middle row.
    pub fn grid(rows: usize, cols: usize, quality_db: f64, diagonal_db: f64, jitter_db: f64, seed: u64) -> Self {
        let mut rng = seed::rng(seed);
        let id = |r: usize, c: usize| r * cols + c;
        let mut links = BTreeMap::new();
        for r in 0..rows {
            for c in 0..cols {
                let mut pair = |a: usize, b: usize, q: f64| {
                    let q = q + if jitter_db > 0.0 { rng.random_range(-jitter_db..=jitter_db) } else { 0.0 };
                    links.insert((a, b), q);
                    links.insert((b, a), q);
                };
                if c + 1 < cols {
                    pair(id(r, c), id(r, c + 1), quality_db);
                }
                if r + 1 < rows {
                    pair(id(r, c), id(r + 1, c), quality_db);
                    if c + 1 < cols {
                        pair(id(r, c), id(r + 1, c + 1), diagonal_db);
                    }
                    if c > 0 {
                        pair(id(r, c), id(r + 1, c - 1), diagonal_db);
                    }
                }
            }
        }
        let mut destinations: Vec<usize> = (0..rows).map(|r| id(r, cols - 1)).collect();
        destinations.extend((2..cols - 1).step_by(2).map(|c| id(rows / 2, c)));
        destinations.sort_unstable();
        destinations.dedup();
        Topology {
            nodes: rows * cols,
            links,
            source: 0,
            destinations,
        }
    }

    /// Reference layout: 3 x 9 grid with diagonals, 8 hops from the source
    /// corner to the far column.
    pub fn reference() -> Self {
        Topology::grid(3, 9, 22.0, 17.0, 4.0, 0x5EED)
    }

    /// `n` nodes uniform in the unit square; nodes closer than `radius` are
    /// linked with quality falling linearly from `q_max_db` at distance 0 to
    /// `q_min_db` at `radius`. Source 0; destinations are the `k` nodes
    /// farthest in hops.
    pub fn random_geometric(n: usize, radius: f64, q_max_db: f64, q_min_db: f64, k: usize, seed: u64) -> Self {
        let mut rng = seed::rng(seed);
        let pos: Vec<(f64, f64)> = (0..n).map(|_| (rng.random::<f64>(), rng.random::<f64>())).collect();
        let mut links = BTreeMap::new();
        for a in 0..n {
            for b in 0..n {
                if a == b {
                    continue;
                }
                let d = ((pos[a].0 - pos[b].0).powi(2) + (pos[a].1 - pos[b].1).powi(2)).sqrt();
                if d < radius {
                    links.insert((a, b), q_max_db - (q_max_db - q_min_db) * d / radius);
                }
            }
        }
        let mut t = Topology {
            nodes: n,
            links,
            source: 0,
            destinations: Vec::new(),
        };
        let hops = t.hops_from_source();
        let mut reachable: Vec<(usize, usize)> = hops
            .iter()
            .enumerate()
            .filter_map(|(i, h)| h.filter(|&h| h > 0).map(|h| (h, i)))
            .collect();
        reachable.sort_unstable_by(|a, b| b.cmp(a));
        t.destinations = reachable.iter().take(k).map(|&(_, i)| i).collect();
        t.destinations.sort_unstable();
        t
    }
}

fn bfs(t: &Topology, from: usize) -> Vec<Option<usize>> {
    let mut out: Vec<Vec<usize>> = vec![Vec::new(); t.nodes];
    for &(s, d) in t.links.keys() {
        if s < t.nodes && d < t.nodes {
            out[s].push(d);
        }
    }
    let mut hops = vec![None; t.nodes];
    if from >= t.nodes {
        return hops;
    }
    hops[from] = Some(0);
    let mut queue = VecDeque::from([from]);
    while let Some(u) = queue.pop_front() {
        let h = hops[u].unwrap_or(0);
        for &v in &out[u] {
            if hops[v].is_none() {
                hops[v] = Some(h + 1);
                queue.push_back(v);
            }
        }
    }
    hops
}
