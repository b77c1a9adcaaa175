//! Packed trees, their validation and their energy.

use std::collections::VecDeque;
use std::fmt;
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::instance::{Formalism, Instance, Variant};
use crate::state::StateSpace;

/// Energy of a solution; infeasible solutions never carry a number.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Energy {
    Finite(f64),
    Infeasible,
}

impl Energy {
    pub fn value(self) -> Option<f64> {
        match self {
            Energy::Finite(v) => Some(v),
            Energy::Infeasible => None,
        }
    }

    pub fn is_finite(self) -> bool {
        matches!(self, Energy::Finite(_))
    }

    /// Strictly lower energy than `other` (anything beats infeasible).
    pub fn better_than(self, other: Energy) -> bool {
        match (self, other) {
            (Energy::Finite(a), Energy::Finite(b)) => a < b,
            (Energy::Finite(_), Energy::Infeasible) => true,
            _ => false,
        }
    }
}

impl fmt::Display for Energy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Energy::Finite(v) => write!(f, "{v}"),
            Energy::Infeasible => write!(f, "INFEASIBLE"),
        }
    }
}

/// Relative gap `(ex - ey) / ey`.
pub fn gap(ex: f64, ey: f64) -> Result<f64> {
    if ey <= 0.0 || !ey.is_finite() || !ex.is_finite() {
        return Err(Error::Domain(format!("gap needs a positive reference energy, got {ey}")));
    }
    Ok((ex - ey) / ey)
}

/// Producer of a solution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Origin {
    MaxSum,
    Spt,
    Mst,
    Greedy,
    Oracle,
    File,
}

impl Origin {
    pub fn name(self) -> &'static str {
        match self {
            Origin::MaxSum => "maxsum",
            Origin::Spt => "spt",
            Origin::Mst => "mst",
            Origin::Greedy => "greedy",
            Origin::Oracle => "oracle",
            Origin::File => "file",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        [Origin::MaxSum, Origin::Spt, Origin::Mst, Origin::Greedy, Origin::Oracle, Origin::File]
            .into_iter()
            .find(|o| o.name() == s)
    }
}

/// Edge of a tree: `child` hangs below `parent` at depth `depth`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TreeEdge {
    pub edge: usize,
    pub child: usize,
    pub parent: usize,
    pub depth: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    /// Tree edges of each communication (0-based).
    pub trees: Vec<Vec<TreeEdge>>,
    pub origin: Origin,
    /// Sweep that produced the solution, if any.
    pub iteration: Option<usize>,
    /// Depth labels must stay within this bound (set for Max-Sum decodes).
    pub depth_bound: Option<usize>,
}

impl Solution {
    pub fn empty(num_comms: usize, origin: Origin) -> Self {
        Solution { trees: vec![Vec::new(); num_comms], origin, iteration: None, depth_bound: None }
    }

    /// Orients plain edge sets from each root with hop depths. Edges that do
    /// not hang off the root's component keep depth 0 and fail validation.
    pub fn from_edge_sets(inst: &Instance, sets: &[Vec<usize>], origin: Origin) -> Self {
        let mut trees = Vec::with_capacity(sets.len());
        for (mu, set) in sets.iter().enumerate() {
            let root = inst.root(mu);
            let mut adj: Vec<Vec<(usize, usize)>> = vec![Vec::new(); inst.num_nodes()];
            for &e in set {
                let ed = inst.edge(e);
                adj[ed.u].push((ed.v, e));
                adj[ed.v].push((ed.u, e));
            }
            let mut depth = vec![usize::MAX; inst.num_nodes()];
            let mut tree = Vec::new();
            let mut used = std::collections::HashSet::new();
            depth[root] = 0;
            let mut queue = VecDeque::from([root]);
            while let Some(x) = queue.pop_front() {
                let mut nbrs = adj[x].clone();
                nbrs.sort_unstable();
                for (y, e) in nbrs {
                    if depth[y] == usize::MAX {
                        depth[y] = depth[x] + 1;
                        tree.push(TreeEdge { edge: e, child: y, parent: x, depth: depth[y] });
                        used.insert(e);
                        queue.push_back(y);
                    }
                }
            }
            for &e in set {
                if !used.contains(&e) {
                    let ed = inst.edge(e);
                    tree.push(TreeEdge { edge: e, child: ed.u, parent: ed.v, depth: 0 });
                }
            }
            tree.sort_unstable();
            trees.push(tree);
        }
        Solution { trees, origin, iteration: None, depth_bound: None }
    }

    pub fn edge_set(&self, mu: usize) -> Vec<usize> {
        let mut v: Vec<usize> = self.trees[mu].iter().map(|t| t.edge).collect();
        v.sort_unstable();
        v
    }

    /// Nodes of tree `mu`, root included.
    pub fn node_set(&self, inst: &Instance, mu: usize) -> Vec<usize> {
        let mut v: Vec<usize> = self.trees[mu].iter().flat_map(|t| [t.child, t.parent]).collect();
        v.push(inst.root(mu));
        v.sort_unstable();
        v.dedup();
        v
    }

    pub fn num_edges(&self) -> usize {
        self.trees.iter().map(Vec::len).sum()
    }

    /// Communications whose tree validates on its own.
    pub fn packed_trees(&self, inst: &Instance) -> usize {
        (0..self.trees.len()).filter(|&mu| tree_violations(self, inst, mu).is_empty()).count()
    }
}

/// Reads per-edge decisions (state indices, edges oriented `u -> v`) into
/// trees and drops components that hold no terminal of their communication.
pub fn decode(inst: &Instance, space: &StateSpace, decisions: &[usize]) -> Solution {
    let m = inst.num_comms();
    let mut trees: Vec<Vec<TreeEdge>> = vec![Vec::new(); m];
    for (e, &idx) in decisions.iter().enumerate() {
        let s = space.state(idx);
        if s.is_unused() {
            continue;
        }
        let ed = inst.edge(e);
        let (child, parent) = if s.depth > 0 { (ed.u, ed.v) } else { (ed.v, ed.u) };
        trees[s.comm - 1].push(TreeEdge { edge: e, child, parent, depth: s.depth.unsigned_abs() as usize });
    }
    for (mu, tree) in trees.iter_mut().enumerate() {
        let keep = components_with_terminal(inst, mu, tree);
        tree.retain(|t| keep[t.child]);
    }
    Solution { trees, origin: Origin::MaxSum, iteration: None, depth_bound: Some(space.depth()) }
}

/// Marks nodes whose component (over `tree`) contains a terminal of `mu`.
fn components_with_terminal(inst: &Instance, mu: usize, tree: &[TreeEdge]) -> Vec<bool> {
    let n = inst.num_nodes();
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
    for t in tree {
        adj[t.child].push(t.parent);
        adj[t.parent].push(t.child);
    }
    let mut keep = vec![false; n];
    let mut queue: VecDeque<usize> = inst.terminals(mu).iter().copied().collect();
    for &t in inst.terminals(mu) {
        keep[t] = true;
    }
    while let Some(x) = queue.pop_front() {
        for &y in &adj[x] {
            if !keep[y] {
                keep[y] = true;
                queue.push_back(y);
            }
        }
    }
    keep
}

/// List of constraint violations; empty means feasible.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ValidationReport {
    pub violations: Vec<String>,
}

impl ValidationReport {
    pub fn is_feasible(&self) -> bool {
        self.violations.is_empty()
    }
}

fn tree_violations(sol: &Solution, inst: &Instance, mu: usize) -> Vec<String> {
    let n = inst.num_nodes();
    let tree = &sol.trees[mu];
    let root = inst.root(mu);
    let tag = mu + 1;
    let mut out = Vec::new();
    let mut parent_edge: Vec<Option<usize>> = vec![None; n];
    let mut children = vec![0usize; n];
    let mut seen_edges = std::collections::HashSet::new();
    for (pos, t) in tree.iter().enumerate() {
        if t.edge >= inst.num_edges() {
            out.push(format!("comm {tag}: edge index {} out of range", t.edge));
            continue;
        }
        let ed = inst.edge(t.edge);
        if !((ed.u == t.child && ed.v == t.parent) || (ed.v == t.child && ed.u == t.parent)) {
            out.push(format!("comm {tag}: tree edge {} does not join {} and {}", t.edge, t.child + 1, t.parent + 1));
            continue;
        }
        if !seen_edges.insert(t.edge) {
            out.push(format!("comm {tag}: edge {}-{} listed twice", ed.u + 1, ed.v + 1));
        }
        if t.child == root {
            out.push(format!("comm {tag}: root {} has a parent", root + 1));
        }
        if parent_edge[t.child].is_some() {
            out.push(format!("comm {tag}: node {} has two parents", t.child + 1));
        } else {
            parent_edge[t.child] = Some(pos);
        }
        children[t.parent] += 1;
        if let Some(bound) = sol.depth_bound {
            if t.depth > bound {
                out.push(format!("comm {tag}: depth {} at node {} exceeds D = {bound}", t.depth, t.child + 1));
            }
        }
    }
    if !out.is_empty() {
        return out;
    }

    let nodes = sol.node_set(inst, mu);
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
    for t in tree {
        adj[t.child].push(t.parent);
        adj[t.parent].push(t.child);
    }
    let mut reach = vec![false; n];
    reach[root] = true;
    let mut queue = VecDeque::from([root]);
    while let Some(x) = queue.pop_front() {
        for &y in &adj[x] {
            if !reach[y] {
                reach[y] = true;
                queue.push_back(y);
            }
        }
    }
    for &t in inst.terminals(mu) {
        if !reach[t] {
            out.push(format!("comm {tag}: terminal {} is not connected to the root", t + 1));
        }
    }
    for &x in &nodes {
        if !reach[x] && !inst.terminals(mu).contains(&x) {
            out.push(format!("comm {tag}: node {} is disconnected from the root", x + 1));
        }
    }
    if tree.len() + 1 != nodes.len() {
        out.push(format!("comm {tag}: {} edges on {} nodes is not a tree", tree.len(), nodes.len()));
    }

    // Depth labels.
    let depth_of = |x: usize| -> Option<usize> {
        if x == root {
            Some(0)
        } else {
            parent_edge[x].map(|p| tree[p].depth)
        }
    };
    for t in tree {
        let Some(pd) = depth_of(t.parent) else {
            out.push(format!("comm {tag}: parent {} of node {} carries no depth", t.parent + 1, t.child + 1));
            continue;
        };
        if t.depth == pd + 1 {
            continue;
        }
        let flat_ok = inst.formalism == Formalism::Flat
            && t.parent != root
            && t.depth == pd
            && inst.prize(t.parent, mu).is_zero()
            && children[t.parent] == 1;
        if !flat_ok {
            out.push(format!(
                "comm {tag}: node {} at depth {} below node {} at depth {pd}",
                t.child + 1,
                t.depth,
                t.parent + 1
            ));
        }
    }
    out
}

/// Checks every tree and the disjointness rule of the instance's variant.
pub fn validate(sol: &Solution, inst: &Instance) -> ValidationReport {
    let m = inst.num_comms();
    let mut violations = Vec::new();
    if sol.trees.len() != m {
        violations.push(format!("solution has {} trees for {m} communications", sol.trees.len()));
        return ValidationReport { violations };
    }
    for mu in 0..m {
        violations.extend(tree_violations(sol, inst, mu));
    }
    match inst.variant {
        Variant::EdgeDisjoint => {
            let ne = inst.num_edges();
            let mut owner = vec![usize::MAX; ne];
            for (mu, tree) in sol.trees.iter().enumerate() {
                for t in tree.iter().filter(|t| t.edge < ne) {
                    if owner[t.edge] != usize::MAX && owner[t.edge] != mu {
                        let ed = inst.edge(t.edge);
                        violations.push(format!(
                            "edge {}-{} used by comms {} and {}",
                            ed.u + 1,
                            ed.v + 1,
                            owner[t.edge] + 1,
                            mu + 1
                        ));
                    }
                    owner[t.edge] = mu;
                }
            }
        }
        Variant::VertexDisjoint => {
            let mut owner = vec![usize::MAX; inst.num_nodes()];
            for mu in 0..m {
                for x in sol.node_set(inst, mu) {
                    if x < owner.len() {
                        if owner[x] != usize::MAX {
                            violations.push(format!("node {} used by comms {} and {}", x + 1, owner[x] + 1, mu + 1));
                        }
                        owner[x] = mu;
                    }
                }
            }
        }
    }
    ValidationReport { violations }
}

/// Energy: used edge weights plus prizes of nodes left out of each tree.
pub fn energy(sol: &Solution, inst: &Instance) -> Energy {
    if !validate(sol, inst).is_feasible() {
        return Energy::Infeasible;
    }
    let mut total = 0.0;
    for mu in 0..inst.num_comms() {
        let nodes = sol.node_set(inst, mu);
        for x in 0..inst.num_nodes() {
            if nodes.binary_search(&x).is_ok() {
                continue;
            }
            match inst.prize(x, mu).penalty() {
                p if p == f64::NEG_INFINITY => return Energy::Infeasible,
                p => total -= p,
            }
        }
        for t in &sol.trees[mu] {
            total += inst.edge(t.edge).w;
        }
    }
    Energy::Finite(total)
}

/// Line format: `origin`, `iteration`, `depth_bound`, then per communication
/// `comm mu` followed by `tree_edge mu child parent depth`, then `energy`.
/// Ids are 1-based.
pub fn serialize_solution(sol: &Solution, inst: &Instance) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "origin {}", sol.origin.name());
    if let Some(it) = sol.iteration {
        let _ = writeln!(s, "iteration {it}");
    }
    if let Some(d) = sol.depth_bound {
        let _ = writeln!(s, "depth_bound {d}");
    }
    for (mu, tree) in sol.trees.iter().enumerate() {
        let _ = writeln!(s, "comm {}", mu + 1);
        for t in tree {
            let _ = writeln!(s, "tree_edge {} {} {} {}", mu + 1, t.child + 1, t.parent + 1, t.depth);
        }
    }
    let _ = writeln!(s, "energy {}", energy(sol, inst));
    s
}

/// Parses a solution file. The stored energy is returned separately and never
/// trusted: callers recompute it with [`energy`].
pub fn parse_solution(text: &str, inst: &Instance) -> Result<(Solution, Option<Energy>)> {
    let mut sol = Solution::empty(inst.num_comms(), Origin::File);
    let mut stored = None;
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let perr = |msg: &str| Error::Parse { line, msg: msg.to_string() };
        let toks: Vec<&str> = content.split_whitespace().collect();
        let num = |k: usize| -> Result<usize> {
            toks.get(k).and_then(|t| t.parse::<usize>().ok()).ok_or_else(|| perr("expected an integer"))
        };
        match toks[0] {
            "origin" => {
                sol.origin = toks.get(1).and_then(|t| Origin::from_name(t)).ok_or_else(|| perr("unknown origin"))?
            }
            "iteration" => sol.iteration = Some(num(1)?),
            "depth_bound" => sol.depth_bound = Some(num(1)?),
            "comm" => {
                let mu = num(1)?;
                if mu == 0 || mu > inst.num_comms() {
                    return Err(perr("communication id out of range"));
                }
            }
            "tree_edge" => {
                if toks.len() != 5 {
                    return Err(perr("tree_edge needs mu child parent depth"));
                }
                let (mu, c, p, d) = (num(1)?, num(2)?, num(3)?, num(4)?);
                if mu == 0 || mu > inst.num_comms() || c == 0 || p == 0 {
                    return Err(perr("ids are 1-based and must be in range"));
                }
                let edge = inst.find_edge(c - 1, p - 1).ok_or_else(|| perr("no such edge in the instance"))?;
                sol.trees[mu - 1].push(TreeEdge { edge, child: c - 1, parent: p - 1, depth: d });
            }
            "energy" => {
                stored = match toks.get(1) {
                    Some(&"INFEASIBLE") => Some(Energy::Infeasible),
                    Some(t) => Some(Energy::Finite(t.parse().map_err(|_| perr("bad energy"))?)),
                    None => return Err(perr("missing energy value")),
                }
            }
            other => return Err(perr(&format!("unknown key '{other}'"))),
        }
    }
    Ok((sol, stored))
}
