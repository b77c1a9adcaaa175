//! Exhaustive ground truth for desk-scale checks.

use crate::error::{Error, Result};
use crate::instance::{Instance, Variant};
use crate::kernel::LocalNodeView;
use crate::solver::{Energy, Origin, Solution};
use crate::state::{EdgeState, NEG_INF};

/// Budgets enforced before any enumeration starts.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OracleLimits {
    pub max_edges_per_tree: usize,
    pub max_total_edges: usize,
    pub max_local_degree: usize,
    /// Enumerated trees (packing) or local configurations (node oracle).
    pub max_states: u64,
}

impl Default for OracleLimits {
    fn default() -> Self {
        OracleLimits { max_edges_per_tree: 16, max_total_edges: 64, max_local_degree: 16, max_states: 5_000_000 }
    }
}

/// Local energy term of a full configuration (prizes of inactive
/// communications plus the weights of the node's parent edges, negated), or
/// `None` if the node's constraint rejects it. `vars[k]` is the value of `d_ki`.
pub(crate) fn local_constraint(view: &LocalNodeView<'_>, variant: Variant, vars: &[EdgeState]) -> Option<f64> {
    let comms = view.space.comms();
    let mut prize = 0.0;
    let mut active = 0;
    for mu in 1..=comms {
        let members: Vec<i32> = vars.iter().filter(|s| s.comm == mu).map(|s| s.depth).collect();
        if view.is_root(mu) {
            if members.iter().any(|&d| d != 1) {
                return None;
            }
            active += 1;
            continue;
        }
        if members.is_empty() {
            prize += view.inactive_penalty(mu);
            continue;
        }
        active += 1;
        let parents: Vec<usize> = (0..vars.len()).filter(|&k| vars[k].comm == mu && vars[k].depth < 0).collect();
        if parents.len() != 1 {
            return None;
        }
        let e = -vars[parents[0]].depth;
        prize -= view.weights[parents[0]];
        let others: Vec<i32> = members.iter().copied().filter(|&d| d > 0).collect();
        let branching = others.iter().all(|&d| d == e + 1);
        let flat = view.flat_ok(mu) && others.len() == 1 && others[0] == e;
        if !branching && !flat {
            return None;
        }
    }
    if variant == Variant::VertexDisjoint && active > 1 {
        return None;
    }
    (prize != NEG_INF).then_some(prize)
}

/// Exact `h_ij(state)` by enumerating every configuration of the other edges
/// with `d_ji` clamped to the flipped target state.
pub fn local_update_oracle(
    view: &LocalNodeView<'_>,
    variant: Variant,
    target: usize,
    state: EdgeState,
    max_states: u64,
) -> Result<f64> {
    let n = view.degree();
    let sp = view.space;
    let per = sp.len() as u64;
    let total = per.checked_pow((n - 1) as u32).unwrap_or(u64::MAX);
    if total > max_states {
        return Err(Error::OracleCapacity(format!("{total} local configurations exceed the budget {max_states}")));
    }
    let all: Vec<EdgeState> = sp.states().collect();
    let mut vars = vec![EdgeState::UNUSED; n];
    vars[target] = state.flipped();
    let others: Vec<usize> = (0..n).filter(|&k| k != target).collect();
    let mut digits = vec![0usize; others.len()];
    let mut best = NEG_INF;
    loop {
        let mut sum = 0.0;
        for (pos, &k) in others.iter().enumerate() {
            vars[k] = all[digits[pos]];
            sum += view.incoming[k][digits[pos]];
        }
        if sum > best {
            if let Some(p) = local_constraint(view, variant, &vars) {
                best = best.max(sum + p);
            }
        }
        let mut pos = 0;
        loop {
            if pos == digits.len() {
                return Ok(best);
            }
            digits[pos] += 1;
            if digits[pos] < all.len() {
                break;
            }
            digits[pos] = 0;
            pos += 1;
        }
    }
}

/// A candidate tree of one communication.
#[derive(Debug, Clone)]
struct Candidate {
    cost: f64,
    edges: u128,
    nodes: u128,
    list: Vec<usize>,
}

struct TreeEnum<'a> {
    inst: &'a Instance,
    blocked: Vec<bool>,
    limit: usize,
    budget: u64,
    visited: u64,
    truncated: bool,
    out: Vec<Vec<usize>>,
    in_tree: Vec<bool>,
}

impl TreeEnum<'_> {
    /// Every subtree containing the start node, each exactly once: the first
    /// frontier edge is either excluded for good or added with its new node.
    fn grow(&mut self, edges: &mut Vec<usize>, frontier: Vec<usize>, excluded: &mut Vec<bool>) -> Result<()> {
        self.visited += 1;
        if self.visited > self.budget {
            return Err(Error::OracleCapacity(format!("tree enumeration exceeded {} states", self.budget)));
        }
        let Some((&first, rest)) = frontier.split_first() else {
            self.out.push(edges.clone());
            return Ok(());
        };
        excluded[first] = true;
        self.grow(edges, rest.to_vec(), excluded)?;
        excluded[first] = false;
        if edges.len() == self.limit {
            self.truncated = true;
            return Ok(());
        }
        let ed = self.inst.edge(first);
        let new = if self.in_tree[ed.u] { ed.v } else { ed.u };
        let mut next: Vec<usize> = rest
            .iter()
            .copied()
            .filter(|&e| self.inst.edge(e).other_node(new).is_none())
            .collect();
        let mut newly_excluded = Vec::new();
        for &e in rest {
            if self.inst.edge(e).other_node(new).is_some() {
                // Would close a cycle once `new` joins.
                excluded[e] = true;
                newly_excluded.push(e);
            }
        }
        for inc in self.inst.neighbors(new) {
            if !self.in_tree[inc.neighbor] && !excluded[inc.edge] && !self.blocked[inc.neighbor] {
                next.push(inc.edge);
            }
        }
        self.in_tree[new] = true;
        edges.push(first);
        self.grow(edges, next, excluded)?;
        edges.pop();
        self.in_tree[new] = false;
        for e in newly_excluded {
            excluded[e] = false;
        }
        Ok(())
    }
}

trait OtherNode {
    fn other_node(&self, x: usize) -> Option<usize>;
}

impl OtherNode for crate::instance::Edge {
    fn other_node(&self, x: usize) -> Option<usize> {
        if self.u == x {
            Some(self.v)
        } else if self.v == x {
            Some(self.u)
        } else {
            None
        }
    }
}

/// Trees of communication `mu` that span its terminals and cannot be
/// improved by dropping a leaf, sorted by cost.
fn candidates(inst: &Instance, mu: usize, limits: &OracleLimits, budget: &mut u64) -> Result<Vec<Candidate>> {
    let n = inst.num_nodes();
    let root = inst.root(mu);
    let mut blocked = vec![false; n];
    if inst.variant == Variant::VertexDisjoint {
        for x in 0..n {
            if matches!(inst.terminal_of(x), Some(nu) if nu != mu) {
                blocked[x] = true;
            }
        }
    }
    let mut en = TreeEnum {
        inst,
        blocked,
        limit: limits.max_edges_per_tree,
        budget: *budget,
        visited: 0,
        truncated: false,
        out: Vec::new(),
        in_tree: vec![false; n],
    };
    en.in_tree[root] = true;
    let frontier: Vec<usize> = inst
        .neighbors(root)
        .iter()
        .filter(|inc| !en.blocked[inc.neighbor])
        .map(|inc| inc.edge)
        .collect();
    let mut excluded = vec![false; inst.num_edges()];
    en.grow(&mut Vec::new(), frontier, &mut excluded)?;
    *budget -= en.visited;
    if en.truncated {
        return Err(Error::OracleCapacity(format!(
            "communication {} admits trees with more than {} edges",
            mu + 1,
            limits.max_edges_per_tree
        )));
    }

    let terms = inst.terminals(mu);
    let mut out = Vec::new();
    for list in en.out {
        let mut nodes: u128 = 1 << root;
        let mut edges: u128 = 0;
        let mut deg = vec![0usize; n];
        let mut cost = 0.0;
        for &e in &list {
            let ed = inst.edge(e);
            nodes |= (1 << ed.u) | (1 << ed.v);
            edges |= 1 << e;
            deg[ed.u] += 1;
            deg[ed.v] += 1;
            cost += ed.w;
        }
        if terms.iter().any(|&t| nodes & (1 << t) == 0) {
            continue;
        }
        // A removable leaf: non-terminal whose prize does not pay for its edge.
        let dominated = list.iter().any(|&e| {
            let ed = inst.edge(e);
            [ed.u, ed.v].into_iter().any(|x| {
                deg[x] == 1
                    && !terms.contains(&x)
                    && match inst.prize(x, mu) {
                        crate::instance::Prize::Value(c) => ed.w >= c,
                        crate::instance::Prize::Terminal => false,
                    }
            })
        });
        if dominated {
            continue;
        }
        for x in 0..n {
            if nodes & (1 << x) == 0 {
                cost -= inst.prize(x, mu).penalty();
            }
        }
        out.push(Candidate { cost, edges, nodes, list });
    }
    out.sort_by(|a, b| a.cost.total_cmp(&b.cost).then_with(|| a.list.cmp(&b.list)));
    Ok(out)
}

struct Search<'a> {
    cands: &'a [Vec<Candidate>],
    suffix_min: Vec<f64>,
    vertex: bool,
    best: f64,
    best_pick: Option<Vec<usize>>,
    pick: Vec<usize>,
}

impl Search<'_> {
    fn run(&mut self, mu: usize, acc: f64, edges: u128, nodes: u128) {
        if mu == self.cands.len() {
            if acc < self.best {
                self.best = acc;
                self.best_pick = Some(self.pick.clone());
            }
            return;
        }
        for (i, c) in self.cands[mu].iter().enumerate() {
            if acc + c.cost + self.suffix_min[mu + 1] >= self.best {
                break;
            }
            let clash = if self.vertex { nodes & c.nodes != 0 } else { edges & c.edges != 0 };
            if clash {
                continue;
            }
            self.pick.push(i);
            self.run(mu + 1, acc + c.cost, edges | c.edges, nodes | c.nodes);
            self.pick.pop();
        }
    }
}

/// Optimal packing by enumeration and branch-and-bound on accumulated cost.
pub fn exact_pack(inst: &Instance, limits: &OracleLimits) -> Result<(Energy, Option<Solution>)> {
    if inst.num_edges() > limits.max_total_edges.min(128) || inst.num_nodes() > 128 {
        return Err(Error::OracleCapacity(format!(
            "{} edges exceed the oracle limit {}",
            inst.num_edges(),
            limits.max_total_edges.min(128)
        )));
    }
    if inst.max_degree() > limits.max_local_degree {
        return Err(Error::OracleCapacity(format!("degree {} exceeds the oracle limit", inst.max_degree())));
    }
    let m = inst.num_comms();
    let mut budget = limits.max_states;
    let cands: Vec<Vec<Candidate>> = (0..m).map(|mu| candidates(inst, mu, limits, &mut budget)).collect::<Result<_>>()?;
    let mut suffix_min = vec![0.0; m + 1];
    for mu in (0..m).rev() {
        suffix_min[mu] = suffix_min[mu + 1] + cands[mu].first().map_or(f64::INFINITY, |c| c.cost);
    }
    let mut search = Search {
        cands: &cands,
        suffix_min,
        vertex: inst.variant == Variant::VertexDisjoint,
        best: f64::INFINITY,
        best_pick: None,
        pick: Vec::new(),
    };
    search.run(0, 0.0, 0, 0);
    match search.best_pick {
        None => Ok((Energy::Infeasible, None)),
        Some(pick) => {
            let sets: Vec<Vec<usize>> = pick.iter().enumerate().map(|(mu, &i)| cands[mu][i].list.clone()).collect();
            let sol = Solution::from_edge_sets(inst, &sets, Origin::Oracle);
            Ok((crate::solver::energy(&sol, inst), Some(sol)))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{gen_complete, Communication, Prize, Weighting};
    use crate::kernel::testutil::{random_view, rng};

    /// Independent restatement of the node constraint: try every role the
    /// node may take for each communication and accept when one fits.
    fn literal_constraint(view: &LocalNodeView<'_>, variant: Variant, vars: &[EdgeState]) -> Option<f64> {
        let comms = view.space.comms();
        let depth = view.space.depth() as i32;
        let mut prize = 0.0;
        let mut active = 0;
        for mu in 1..=comms {
            let on = |k: usize| vars[k].comm == mu;
            let delta = |k: usize, d: i32| vars[k].comm == mu && vars[k].depth == d;
            let none = (0..vars.len()).all(|k| !on(k));
            let fits_root = view.is_root(mu) && (0..vars.len()).all(|k| !on(k) || delta(k, 1));
            let mut fits = fits_root;
            let mut parent_w = 0.0;
            if !view.is_root(mu) {
                for e in 1..=depth {
                    for p in 0..vars.len() {
                        if !delta(p, -e) {
                            continue;
                        }
                        let rest: Vec<usize> = (0..vars.len()).filter(|&k| k != p && on(k)).collect();
                        let branching = rest.iter().all(|&k| delta(k, e + 1));
                        let flat = view.flat_ok(mu) && rest.len() == 1 && delta(rest[0], e);
                        if branching || flat {
                            fits = true;
                            parent_w = view.weights[p];
                        }
                    }
                }
            }
            if none && !view.is_root(mu) {
                prize += view.inactive_penalty(mu);
            } else if !fits {
                return None;
            } else {
                active += 1;
                prize -= parent_w;
            }
        }
        if variant == Variant::VertexDisjoint && active > 1 {
            return None;
        }
        (prize != NEG_INF).then_some(prize)
    }

    #[test]
    fn constraint_implementations_agree() {
        let mut r = rng(8);
        use rand::Rng;
        for case in 0..400 {
            let deg = 1 + case % 4;
            let data = random_view(&mut r, deg, 1 + case % 3, 1 + case % 3, case % 2 == 0, false);
            let view = data.view();
            let all: Vec<EdgeState> = view.space.states().collect();
            for _ in 0..50 {
                let vars: Vec<EdgeState> = (0..deg).map(|_| all[r.gen_range(0..all.len())]).collect();
                for variant in [Variant::VertexDisjoint, Variant::EdgeDisjoint] {
                    assert_eq!(local_constraint(&view, variant, &vars), literal_constraint(&view, variant, &vars));
                }
            }
        }
    }

    #[test]
    fn degree_one_by_hand() {
        use crate::kernel::testutil::ViewData;
        use crate::state::StateSpace;
        let sp = StateSpace::new(1, 1);
        // states: (0,0), (-1,1), (1,1); incoming from the single neighbor is
        // irrelevant (it is the target).
        let data = ViewData {
            space: sp,
            msgs: vec![vec![0.0, -1.0, -2.0]],
            weights: vec![0.5],
            prizes: vec![Prize::Value(0.25)],
            root_of: None,
            flat: false,
        };
        let v = data.view();
        let at = |s| local_update_oracle(&v, Variant::VertexDisjoint, 0, s, 100).unwrap();
        assert_eq!(at(EdgeState::UNUSED), -0.25);
        // i child of j at depth 1: no children allowed below D = 1.
        assert_eq!(at(EdgeState::new(1, 1)), -0.5);
        // j child of i at depth 1 would need i at depth 0: impossible.
        assert_eq!(at(EdgeState::new(-1, 1)), NEG_INF);
    }

    #[test]
    fn variants_coincide_for_one_comm() {
        let mut r = rng(9);
        for case in 0..60 {
            let data = random_view(&mut r, 1 + case % 4, 1 + case % 3, 1, case % 2 == 0, true);
            let v = data.view();
            for s in v.space.states() {
                let a = local_update_oracle(&v, Variant::VertexDisjoint, 0, s, u64::MAX).unwrap();
                let b = local_update_oracle(&v, Variant::EdgeDisjoint, 0, s, u64::MAX).unwrap();
                assert_eq!(a, b);
            }
        }
    }

    #[test]
    fn budget_is_enforced() {
        let mut r = rng(1);
        let data = random_view(&mut r, 4, 3, 3, false, false);
        assert!(matches!(
            local_update_oracle(&data.view(), Variant::EdgeDisjoint, 0, EdgeState::UNUSED, 1000),
            Err(Error::OracleCapacity(_))
        ));
    }

    #[test]
    fn triangle_takes_direct_edge() {
        let inst = Instance::new(
            3,
            vec![(0, 1, 1.0), (1, 2, 2.0), (0, 2, 3.0)],
            vec![Communication { terminals: vec![0, 1], root: 0 }],
        )
        .unwrap();
        let (e, sol) = exact_pack(&inst, &OracleLimits::default()).unwrap();
        assert_eq!(e, Energy::Finite(1.0));
        assert_eq!(sol.unwrap().edge_set(0), vec![0]);
    }

    #[test]
    fn k4_vertex_disjoint_pairings() {
        let inst = gen_complete(4, 2, 2, Weighting::Uniform, 3).unwrap();
        let (e, sol) = exact_pack(&inst, &OracleLimits::default()).unwrap();
        // Hand count: with four nodes and two 2-terminal communications, the
        // only vertex-disjoint packing uses the two direct terminal edges.
        let t = inst.comms();
        let direct = |c: &Communication| inst.edge(inst.find_edge(c.terminals[0], c.terminals[1]).unwrap()).w;
        assert_eq!(e, Energy::Finite(direct(&t[0]) + direct(&t[1])));
        assert!(crate::solver::validate(&sol.unwrap(), &inst).is_feasible());
    }

    #[test]
    fn shared_bridge_is_infeasible_for_edge_disjoint() {
        // Two triangles joined by the bridge 2-3; each communication crosses it.
        let edges = vec![(0, 1, 1.0), (1, 2, 1.0), (0, 2, 1.0), (2, 3, 1.0), (3, 4, 1.0), (4, 5, 1.0), (3, 5, 1.0)];
        let comms = vec![
            Communication { terminals: vec![0, 4], root: 0 },
            Communication { terminals: vec![1, 5], root: 1 },
        ];
        let inst = Instance::new(6, edges, comms).unwrap().with_variant(Variant::EdgeDisjoint);
        let (e, sol) = exact_pack(&inst, &OracleLimits::default()).unwrap();
        assert_eq!(e, Energy::Infeasible);
        assert!(sol.is_none());
    }

    #[test]
    fn tree_limit_raises_capacity_error() {
        let inst = Instance::new(
            4,
            vec![(0, 1, 1.0), (1, 2, 1.0), (2, 3, 1.0)],
            vec![Communication { terminals: vec![0, 3], root: 0 }],
        )
        .unwrap();
        let limits = OracleLimits { max_edges_per_tree: 2, ..OracleLimits::default() };
        assert!(matches!(exact_pack(&inst, &limits), Err(Error::OracleCapacity(_))));
    }

    #[test]
    fn profitable_prize_leaf_is_kept() {
        let inst = Instance::with_prizes(
            3,
            vec![(0, 1, 1.0), (1, 2, 0.5)],
            vec![Communication { terminals: vec![0, 1], root: 0 }],
            &[(2, 0, 2.0)],
        )
        .unwrap();
        let (e, sol) = exact_pack(&inst, &OracleLimits::default()).unwrap();
        assert_eq!(e, Energy::Finite(1.5));
        assert_eq!(sol.unwrap().edge_set(0), vec![0, 1]);
    }
}
