//! Graph and problem-instance model.
//!
//! An [`Instance`] is an undirected simple graph with strictly positive edge
//! weights, `M` communications (each a disjoint terminal set with a designated
//! root) and per-(node, communication) prizes. Node ids are 0-based in memory
//! and 1-based in files.

mod depth;
mod format;
mod generate;

pub use depth::{choose_depth, DepthChoice};
pub use format::{parse_instance, serialize_instance};
pub use generate::{
    gen_complete, gen_grid, gen_regular, uniform_open, GridTerminals, GridWeights, Weighting,
};

use std::collections::HashSet;
use std::fmt;

use crate::error::{Error, Result};

/// Prize `c_i^mu` of a node for a communication. `Terminal` stands for an
/// infinite prize: the node must belong to that communication's tree.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Prize {
    Value(f64),
    Terminal,
}

impl Prize {
    pub fn is_terminal(self) -> bool {
        matches!(self, Prize::Terminal)
    }

    /// True for a finite prize equal to zero (the only nodes allowed to sit in
    /// the middle of a flat chain).
    pub fn is_zero(self) -> bool {
        matches!(self, Prize::Value(c) if c == 0.0)
    }

    /// `-c` as a log-weight: `-inf` for terminals.
    pub fn penalty(self) -> f64 {
        match self {
            Prize::Value(c) => -c,
            Prize::Terminal => f64::NEG_INFINITY,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Variant {
    VertexDisjoint,
    EdgeDisjoint,
}

impl Variant {
    pub fn name(self) -> &'static str {
        match self {
            Variant::VertexDisjoint => "vdstp",
            Variant::EdgeDisjoint => "edstp",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        match s.to_ascii_lowercase().as_str() {
            "vdstp" | "vertex" | "v" => Some(Variant::VertexDisjoint),
            "edstp" | "edge" | "e" => Some(Variant::EdgeDisjoint),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Formalism {
    Branching,
    Flat,
}

impl Formalism {
    pub fn name(self) -> &'static str {
        match self {
            Formalism::Branching => "branching",
            Formalism::Flat => "flat",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        match s.to_ascii_lowercase().as_str() {
            "branching" | "b" => Some(Formalism::Branching),
            "flat" | "f" => Some(Formalism::Flat),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LayerType {
    MultiCrossed,
    MultiAligned,
}

impl LayerType {
    pub fn name(self) -> &'static str {
        match self {
            LayerType::MultiCrossed => "crossed",
            LayerType::MultiAligned => "aligned",
        }
    }
}

/// Optional grid metadata carried by VLSI-style instances.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GridMeta {
    pub nx: usize,
    pub ny: usize,
    pub nz: usize,
    pub layer: LayerType,
}

impl GridMeta {
    pub fn node_id(&self, x: usize, y: usize, z: usize) -> usize {
        x + self.nx * (y + self.ny * z)
    }

    pub fn coords(&self, id: usize) -> (usize, usize, usize) {
        (id % self.nx, (id / self.nx) % self.ny, id / (self.nx * self.ny))
    }

    pub fn num_nodes(&self) -> usize {
        self.nx * self.ny * self.nz
    }
}

/// Undirected edge with `u < v`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub u: usize,
    pub v: usize,
    pub w: f64,
}

impl Edge {
    pub fn other(&self, node: usize) -> usize {
        if node == self.u {
            self.v
        } else {
            self.u
        }
    }
}

/// Terminal set and root of one communication.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Communication {
    pub terminals: Vec<usize>,
    pub root: usize,
}

/// Incidence entry of the adjacency list.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Incidence {
    pub neighbor: usize,
    pub edge: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    num_nodes: usize,
    edges: Vec<Edge>,
    comms: Vec<Communication>,
    /// Finite non-terminal prizes, node-major `prizes[node * M + mu]`.
    prizes: Vec<Prize>,
    pub variant: Variant,
    pub formalism: Formalism,
    /// User-fixed depth bound; `None` means [`choose_depth`].
    pub depth: Option<usize>,
    pub grid: Option<GridMeta>,
    adjacency: Vec<Vec<Incidence>>,
}

impl Instance {
    /// Builds and validates an instance. Edges may be given in any order and
    /// orientation; they are stored sorted by `(min, max)`.
    pub fn new(num_nodes: usize, edges: Vec<(usize, usize, f64)>, comms: Vec<Communication>) -> Result<Self> {
        Self::with_prizes(num_nodes, edges, comms, &[])
    }

    /// Like [`Instance::new`] with extra finite prizes `(node, comm, c)` for
    /// non-terminal nodes (prize-collecting variant).
    pub fn with_prizes(
        num_nodes: usize,
        edges: Vec<(usize, usize, f64)>,
        comms: Vec<Communication>,
        extra_prizes: &[(usize, usize, f64)],
    ) -> Result<Self> {
        if comms.is_empty() {
            return Err(Error::Validation("at least one communication is required".into()));
        }
        let m = comms.len();
        let mut seen = HashSet::new();
        let mut sorted = Vec::with_capacity(edges.len());
        for (a, b, w) in edges {
            if a >= num_nodes || b >= num_nodes {
                return Err(Error::Validation(format!("edge ({}, {}) references a missing node", a + 1, b + 1)));
            }
            if a == b {
                return Err(Error::Validation(format!("self-loop on node {}", a + 1)));
            }
            if !(w > 0.0 && w.is_finite()) {
                return Err(Error::Validation(format!(
                    "edge ({}, {}) has non-positive or non-finite weight {w}",
                    a + 1,
                    b + 1
                )));
            }
            let (u, v) = if a < b { (a, b) } else { (b, a) };
            if !seen.insert((u, v)) {
                return Err(Error::Validation(format!("duplicate edge ({}, {})", u + 1, v + 1)));
            }
            sorted.push(Edge { u, v, w });
        }
        sorted.sort_by_key(|e| (e.u, e.v));

        let mut prizes = vec![Prize::Value(0.0); num_nodes * m];
        let mut owner: Vec<Option<usize>> = vec![None; num_nodes];
        for (mu, c) in comms.iter().enumerate() {
            if c.terminals.is_empty() {
                return Err(Error::Validation(format!("communication {} has no terminals", mu + 1)));
            }
            for &t in &c.terminals {
                if t >= num_nodes {
                    return Err(Error::Validation(format!("terminal {} is not a node", t + 1)));
                }
                if let Some(prev) = owner[t] {
                    return Err(Error::Validation(if prev == mu {
                        format!("terminal {} listed twice in communication {}", t + 1, mu + 1)
                    } else {
                        format!(
                            "node {} is a terminal of communications {} and {}",
                            t + 1,
                            prev + 1,
                            mu + 1
                        )
                    }));
                }
                owner[t] = Some(mu);
                prizes[t * m + mu] = Prize::Terminal;
            }
            if !c.terminals.contains(&c.root) {
                return Err(Error::Validation(format!(
                    "root {} is not a terminal of communication {}",
                    c.root + 1,
                    mu + 1
                )));
            }
        }
        for &(node, mu, c) in extra_prizes {
            if node >= num_nodes || mu >= m {
                return Err(Error::Validation(format!("prize for node {} comm {} out of range", node + 1, mu + 1)));
            }
            if !(c >= 0.0 && c.is_finite()) {
                return Err(Error::Validation(format!("prize {c} must be finite and nonnegative")));
            }
            if prizes[node * m + mu].is_terminal() {
                return Err(Error::Validation(format!(
                    "node {} is already a terminal of communication {}",
                    node + 1,
                    mu + 1
                )));
            }
            prizes[node * m + mu] = Prize::Value(c);
        }

        let mut adjacency = vec![Vec::new(); num_nodes];
        for (idx, e) in sorted.iter().enumerate() {
            adjacency[e.u].push(Incidence { neighbor: e.v, edge: idx });
            adjacency[e.v].push(Incidence { neighbor: e.u, edge: idx });
        }

        Ok(Instance {
            num_nodes,
            edges: sorted,
            comms,
            prizes,
            variant: Variant::VertexDisjoint,
            formalism: Formalism::Branching,
            depth: None,
            grid: None,
            adjacency,
        })
    }

    pub fn with_variant(mut self, variant: Variant) -> Self {
        self.variant = variant;
        self
    }

    pub fn with_formalism(mut self, formalism: Formalism) -> Self {
        self.formalism = formalism;
        self
    }

    pub fn with_depth(mut self, depth: Option<usize>) -> Self {
        self.depth = depth;
        self
    }

    pub fn num_nodes(&self) -> usize {
        self.num_nodes
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn num_comms(&self) -> usize {
        self.comms.len()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge(&self, idx: usize) -> &Edge {
        &self.edges[idx]
    }

    pub fn comms(&self) -> &[Communication] {
        &self.comms
    }

    pub fn terminals(&self, mu: usize) -> &[usize] {
        &self.comms[mu].terminals
    }

    pub fn root(&self, mu: usize) -> usize {
        self.comms[mu].root
    }

    pub fn prize(&self, node: usize, mu: usize) -> Prize {
        self.prizes[node * self.comms.len() + mu]
    }

    /// Prizes of `node` for all communications.
    pub fn prizes_of(&self, node: usize) -> &[Prize] {
        let m = self.comms.len();
        &self.prizes[node * m..(node + 1) * m]
    }

    /// Finite positive prizes of non-terminal nodes, as `(node, comm, c)`.
    pub fn extra_prizes(&self) -> Vec<(usize, usize, f64)> {
        let m = self.comms.len();
        let mut out = Vec::new();
        for node in 0..self.num_nodes {
            for mu in 0..m {
                if let Prize::Value(c) = self.prizes[node * m + mu] {
                    if c != 0.0 {
                        out.push((node, mu, c));
                    }
                }
            }
        }
        out
    }

    pub fn neighbors(&self, node: usize) -> &[Incidence] {
        &self.adjacency[node]
    }

    pub fn degree(&self, node: usize) -> usize {
        self.adjacency[node].len()
    }

    pub fn max_degree(&self) -> usize {
        self.adjacency.iter().map(Vec::len).max().unwrap_or(0)
    }

    /// Communication that has `node` as terminal, if any.
    pub fn terminal_of(&self, node: usize) -> Option<usize> {
        self.prizes_of(node).iter().position(|p| p.is_terminal())
    }

    /// Communication rooted at `node`, if any.
    pub fn root_of(&self, node: usize) -> Option<usize> {
        self.comms.iter().position(|c| c.root == node)
    }

    /// Index of the edge joining `a` and `b`.
    pub fn find_edge(&self, a: usize, b: usize) -> Option<usize> {
        self.adjacency
            .get(a)?
            .iter()
            .find(|inc| inc.neighbor == b)
            .map(|inc| inc.edge)
    }

    pub fn total_weight(&self) -> f64 {
        self.edges.iter().map(|e| e.w).sum()
    }

    pub fn total_terminals(&self) -> usize {
        self.comms.iter().map(|c| c.terminals.len()).sum()
    }

    /// Depth bound in effect: the fixed one, or [`choose_depth`]'s global value.
    pub fn effective_depth(&self) -> Result<usize> {
        match self.depth {
            Some(d) if d >= 1 => Ok(d),
            Some(_) => Err(Error::Argument("depth bound must be at least 1".into())),
            None => Ok(choose_depth(self)?.global),
        }
    }

    /// Copy of this instance restricted to the edges for which `keep` holds.
    /// Node ids, communications, prizes and parameters are unchanged.
    pub fn restrict_edges(&self, keep: impl Fn(usize, &Edge) -> bool) -> Instance {
        let edges: Vec<Edge> = self
            .edges
            .iter()
            .enumerate()
            .filter(|(i, e)| keep(*i, e))
            .map(|(_, e)| *e)
            .collect();
        let mut adjacency = vec![Vec::new(); self.num_nodes];
        for (idx, e) in edges.iter().enumerate() {
            adjacency[e.u].push(Incidence { neighbor: e.v, edge: idx });
            adjacency[e.v].push(Incidence { neighbor: e.u, edge: idx });
        }
        Instance { edges, adjacency, ..self.clone() }
    }

    /// Single-communication copy holding only communication `mu`.
    pub fn single_comm(&self, mu: usize) -> Instance {
        let m = self.comms.len();
        let prizes = (0..self.num_nodes).map(|n| self.prizes[n * m + mu]).collect();
        Instance {
            comms: vec![self.comms[mu].clone()],
            prizes,
            ..self.clone()
        }
    }
}

impl fmt::Display for Instance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} nodes, {} edges, {} communications, {} terminals",
            self.num_nodes,
            self.edges.len(),
            self.comms.len(),
            self.total_terminals()
        )
    }
}
