//! Field-guided constructive heuristics and the greedy sequential baseline.
//!
//! Both heuristic schemes route communications one after another on the
//! graph left over by earlier ones. SPT takes shortest paths to the root under
//! weights read from the Max-Sum fields; MST runs Kruskal on the true weights
//! with a penalty on nodes that the messages would rather leave unused.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use rand::seq::SliceRandom;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::instance::{Instance, Variant};
use crate::kernel::InfSum;
use crate::solver::{energy, run, Energy, Origin, Solution, SolverConfig};
use crate::state::{CavityField, MessageTable, NEG_INF};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scheme {
    Spt,
    Mst,
}

impl Scheme {
    pub fn name(self) -> &'static str {
        match self {
            Scheme::Spt => "spt",
            Scheme::Mst => "mst",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        match s {
            "spt" => Some(Scheme::Spt),
            "mst" => Some(Scheme::Mst),
            _ => None,
        }
    }

    fn origin(self) -> Origin {
        match self {
            Scheme::Spt => Origin::Spt,
            Scheme::Mst => Origin::Mst,
        }
    }
}

/// Which non-terminal leaves are trimmed from a heuristic tree.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PruneMode {
    /// Every leaf that is not a terminal.
    TerminalLeaves,
    /// Leaves whose edge weight exceeds their prize.
    PrizeThreshold,
    /// No pruning.
    Keep,
}

impl PruneMode {
    pub fn name(self) -> &'static str {
        match self {
            PruneMode::TerminalLeaves => "leaves",
            PruneMode::PrizeThreshold => "prize",
            PruneMode::Keep => "keep",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        match s {
            "leaves" => Some(PruneMode::TerminalLeaves),
            "prize" => Some(PruneMode::PrizeThreshold),
            "keep" => Some(PruneMode::Keep),
            _ => None,
        }
    }
}

/// Order in which a heuristic round routes the communications.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CommOrder {
    Natural,
    Fixed(Vec<usize>),
    /// Fresh seeded shuffle every round.
    Shuffled,
}

impl CommOrder {
    /// Concrete 0-based order for `m` communications.
    pub fn resolve(&self, m: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
        match self {
            CommOrder::Natural => (0..m).collect(),
            CommOrder::Fixed(v) => v.clone(),
            CommOrder::Shuffled => {
                let mut v: Vec<usize> = (0..m).collect();
                v.shuffle(rng);
                v
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HeuristicConfig {
    pub schemes: Vec<Scheme>,
    pub order: CommOrder,
    pub prune: PruneMode,
    /// Run every this many sweeps; 1 runs after every sweep.
    pub every: usize,
}

impl Default for HeuristicConfig {
    fn default() -> Self {
        HeuristicConfig {
            schemes: vec![Scheme::Spt, Scheme::Mst],
            order: CommOrder::Natural,
            prune: PruneMode::TerminalLeaves,
            every: 1,
        }
    }
}

/// SPT weight of every edge for communication `mu` (0-based): the magnitude
/// of the best field value over the states that use the edge for `mu`, or
/// infinity when all of them are forbidden.
pub fn spt_reweight(inst: &Instance, fields: &CavityField, mu: usize) -> Vec<f64> {
    let sp = fields.space();
    (0..inst.num_edges())
        .map(|e| {
            let f = fields.get(e);
            let best = (1..=sp.depth() as i32)
                .flat_map(|d| [sp.idx(d, mu + 1), sp.idx(-d, mu + 1)])
                .map(|i| f[i])
                .fold(NEG_INF, f64::max);
            if best == NEG_INF {
                f64::INFINITY
            } else {
                best.abs()
            }
        })
        .collect()
}

/// Whether the incoming messages at `node` favor leaving it out of tree `mu`
/// (0-based): the best active value is strictly below the inactive one.
pub fn mst_penalized(inst: &Instance, msgs: &MessageTable, node: usize, mu: usize) -> bool {
    let sp = msgs.space();
    let m = mu + 1;
    let inc: Vec<&[f64]> = inst
        .neighbors(node)
        .iter()
        .map(|x| msgs.get(crate::state::directed(inst, x.edge, x.neighbor)))
        .collect();
    let idle = InfSum::of(inc.iter().map(|h| h[0]));
    let inactive = {
        let mut s = idle;
        s.add(inst.prize(node, mu).penalty());
        s.value()
    };
    let mut active = NEG_INF;
    for d in 1..=sp.depth() as i32 {
        let child: Vec<f64> = inc.iter().map(|h| sp.get(h, d + 1, m).max(h[0])).collect();
        let all = InfSum::of(child.iter().copied());
        for (k, h) in inc.iter().enumerate() {
            let v = sp.get(h, -d, m) + all.without(&[child[k]]);
            active = active.max(v);
        }
    }
    active < inactive
}

#[derive(PartialEq)]
struct Item(f64, usize);

impl Eq for Item {}

impl Ord for Item {
    fn cmp(&self, o: &Self) -> Ordering {
        o.0.total_cmp(&self.0).then_with(|| o.1.cmp(&self.1))
    }
}

impl PartialOrd for Item {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}

fn find(parent: &mut [usize], mut x: usize) -> usize {
    while parent[x] != x {
        parent[x] = parent[parent[x]];
        x = parent[x];
    }
    x
}

/// Tree for communication `mu` over edges with `allowed[e]`, built by the
/// given scheme under the auxiliary weights `aux`, then pruned.
pub fn heuristic_tree(
    inst: &Instance,
    mu: usize,
    scheme: Scheme,
    aux: &[f64],
    allowed: &[bool],
    prune: PruneMode,
) -> Result<Vec<usize>> {
    let n = inst.num_nodes();
    let root = inst.root(mu);
    let usable = |e: usize| allowed[e] && aux[e].is_finite();
    let mut tree = vec![false; inst.num_edges()];
    match scheme {
        Scheme::Spt => {
            let mut dist = vec![f64::INFINITY; n];
            let mut via: Vec<Option<usize>> = vec![None; n];
            let mut done = vec![false; n];
            let mut heap = BinaryHeap::new();
            dist[root] = 0.0;
            heap.push(Item(0.0, root));
            while let Some(Item(d, x)) = heap.pop() {
                if done[x] {
                    continue;
                }
                done[x] = true;
                for inc in inst.neighbors(x) {
                    if !usable(inc.edge) || done[inc.neighbor] {
                        continue;
                    }
                    let nd = d + aux[inc.edge];
                    if nd < dist[inc.neighbor] {
                        dist[inc.neighbor] = nd;
                        via[inc.neighbor] = Some(inc.edge);
                        heap.push(Item(nd, inc.neighbor));
                    }
                }
            }
            for &t in inst.terminals(mu) {
                if !done[t] {
                    return Err(Error::Infeasible(format!("terminal {} unreachable from its root", t + 1)));
                }
                let mut x = t;
                while let Some(e) = via[x] {
                    if tree[e] {
                        break;
                    }
                    tree[e] = true;
                    x = inst.edge(e).other(x);
                }
            }
        }
        Scheme::Mst => {
            let mut order: Vec<usize> = (0..inst.num_edges()).filter(|&e| usable(e)).collect();
            order.sort_by(|&a, &b| aux[a].total_cmp(&aux[b]).then(a.cmp(&b)));
            let mut parent: Vec<usize> = (0..n).collect();
            for e in order {
                let ed = inst.edge(e);
                let (a, b) = (find(&mut parent, ed.u), find(&mut parent, ed.v));
                if a != b {
                    parent[a] = b;
                    tree[e] = true;
                }
            }
            let r = find(&mut parent, root);
            for &t in inst.terminals(mu) {
                if find(&mut parent, t) != r {
                    return Err(Error::Infeasible(format!("terminal {} unreachable from its root", t + 1)));
                }
            }
            for e in 0..inst.num_edges() {
                if tree[e] && find(&mut parent, inst.edge(e).u) != r {
                    tree[e] = false;
                }
            }
        }
    }
    prune_tree(inst, mu, &mut tree, prune);
    Ok((0..inst.num_edges()).filter(|&e| tree[e]).collect())
}

/// Repeatedly removes prunable leaves.
fn prune_tree(inst: &Instance, mu: usize, tree: &mut [bool], mode: PruneMode) {
    if mode == PruneMode::Keep {
        return;
    }
    let mut deg = vec![0usize; inst.num_nodes()];
    for (e, _) in tree.iter().enumerate().filter(|(_, &t)| t) {
        deg[inst.edge(e).u] += 1;
        deg[inst.edge(e).v] += 1;
    }
    let mut stack: Vec<usize> = (0..inst.num_nodes()).filter(|&x| deg[x] == 1).collect();
    while let Some(x) = stack.pop() {
        if deg[x] != 1 || inst.prize(x, mu).is_terminal() {
            continue;
        }
        let Some(inc) = inst.neighbors(x).iter().find(|i| tree[i.edge]) else { continue };
        let drop = match mode {
            PruneMode::TerminalLeaves => true,
            PruneMode::PrizeThreshold => inst.edge(inc.edge).w > -inst.prize(x, mu).penalty(),
            PruneMode::Keep => false,
        };
        if drop {
            tree[inc.edge] = false;
            deg[x] = 0;
            deg[inc.neighbor] -= 1;
            if deg[inc.neighbor] == 1 {
                stack.push(inc.neighbor);
            }
        }
    }
}

/// One heuristic round: routes the communications in `order`, erasing the
/// resources of each tree before the next one is built.
pub fn run_heuristic_round(
    inst: &Instance,
    fields: &CavityField,
    msgs: &MessageTable,
    scheme: Scheme,
    order: &[usize],
    prune: PruneMode,
) -> Result<Solution> {
    let m = inst.num_comms();
    let vertex = inst.variant == Variant::VertexDisjoint;
    let mut used_edge = vec![false; inst.num_edges()];
    let mut used_node = vec![false; inst.num_nodes()];
    let mut sets = vec![Vec::new(); m];
    let big = 1.0 + inst.total_weight();
    for &mu in order {
        let allowed: Vec<bool> = inst
            .edges()
            .iter()
            .enumerate()
            .map(|(e, ed)| {
                if used_edge[e] {
                    return false;
                }
                if vertex {
                    let foreign = |x: usize| inst.terminal_of(x).is_some_and(|c| c != mu);
                    if used_node[ed.u] || used_node[ed.v] || foreign(ed.u) || foreign(ed.v) {
                        return false;
                    }
                }
                true
            })
            .collect();
        let aux = match scheme {
            Scheme::Spt => spt_reweight(inst, fields, mu),
            Scheme::Mst => {
                let pen: Vec<f64> =
                    (0..inst.num_nodes()).map(|x| if mst_penalized(inst, msgs, x, mu) { big } else { 0.0 }).collect();
                inst.edges().iter().map(|ed| ed.w + pen[ed.u] + pen[ed.v]).collect()
            }
        };
        let tree = heuristic_tree(inst, mu, scheme, &aux, &allowed, prune)?;
        for &e in &tree {
            used_edge[e] = true;
            used_node[inst.edge(e).u] = true;
            used_node[inst.edge(e).v] = true;
        }
        sets[mu] = tree;
    }
    Ok(Solution::from_edge_sets(inst, &sets, scheme.origin()))
}

/// Outcome of [`greedy_solve`].
#[derive(Debug, Clone)]
pub struct GreedyOutcome {
    /// Trees routed so far; later communications stay empty on failure.
    pub solution: Solution,
    /// Sum of the single-tree energies, or infeasible if some tree failed.
    pub energy: Energy,
    pub packed: usize,
}

/// Sequential baseline: each communication in `order` is solved alone by
/// Max-Sum on the graph left after removing the terminals of later
/// communications and the resources of earlier ones.
pub fn greedy_solve(inst: &Instance, order: &[usize], cfg: &SolverConfig) -> Result<GreedyOutcome> {
    let m = inst.num_comms();
    let vertex = inst.variant == Variant::VertexDisjoint;
    let mut used_edge = vec![false; inst.num_edges()];
    let mut used_node = vec![false; inst.num_nodes()];
    let mut sets = vec![Vec::new(); m];
    let mut total = 0.0;
    let mut packed = 0;
    for (pos, &mu) in order.iter().enumerate() {
        let pending: Vec<usize> = order[pos + 1..].to_vec();
        let blocked = |x: usize| (vertex && used_node[x]) || pending.iter().any(|&nu| inst.prize(x, nu).is_terminal());
        let kept: Vec<usize> = (0..inst.num_edges())
            .filter(|&e| !used_edge[e] && !blocked(inst.edge(e).u) && !blocked(inst.edge(e).v))
            .collect();
        let mut keep = vec![false; inst.num_edges()];
        for &e in &kept {
            keep[e] = true;
        }
        // One communication: both variants share the vertex-disjoint constraint.
        let sub = inst.restrict_edges(|e, _| keep[e]).single_comm(mu).with_variant(Variant::VertexDisjoint);
        let sub = sub.with_depth(cfg.depth.or(inst.depth));
        let mut sub_cfg = cfg.clone();
        sub_cfg.kernel = None;
        let tree = match run(&sub, &sub_cfg) {
            Ok(out) => out.best,
            Err(_) => None,
        };
        let Some(tree) = tree else { break };
        let e = energy(&tree, &sub);
        let Some(v) = e.value() else { break };
        total += v;
        let mapped: Vec<usize> = tree.edge_set(0).into_iter().map(|e| kept[e]).collect();
        for &e in &mapped {
            used_edge[e] = true;
            used_node[inst.edge(e).u] = true;
            used_node[inst.edge(e).v] = true;
        }
        sets[mu] = mapped;
        packed += 1;
    }
    let solution = Solution::from_edge_sets(inst, &sets, Origin::Greedy);
    let energy = if packed == order.len() && order.len() == m { Energy::Finite(total) } else { Energy::Infeasible };
    Ok(GreedyOutcome { solution, energy, packed })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{gen_complete, Communication, Weighting};
    use crate::solver::validate;
    use crate::state::StateSpace;

    fn path_instance() -> Instance {
        // 0 - 1 - 2 - 3 with a detour 1 - 4 - 2; edges listed in sorted order.
        Instance::new(
            5,
            vec![(0, 1, 1.0), (1, 2, 1.0), (1, 4, 0.2), (2, 3, 1.0), (2, 4, 0.2)],
            vec![Communication { terminals: vec![0, 3], root: 0 }],
        )
        .unwrap()
    }

    #[test]
    fn spt_follows_aux_weights() {
        let inst = path_instance();
        let allowed = vec![true; 5];
        let t = heuristic_tree(&inst, 0, Scheme::Spt, &[1.0, 1.0, 0.2, 1.0, 0.2], &allowed, PruneMode::TerminalLeaves)
            .unwrap();
        assert_eq!(t, vec![0, 2, 3, 4]);
        let t = heuristic_tree(&inst, 0, Scheme::Spt, &[1.0, 0.1, 0.2, 1.0, 0.2], &allowed, PruneMode::TerminalLeaves)
            .unwrap();
        assert_eq!(t, vec![0, 1, 3]);
    }

    #[test]
    fn mst_prunes_steiner_leaves() {
        let inst = path_instance();
        let t = heuristic_tree(&inst, 0, Scheme::Mst, &[1.0, 1.0, 0.2, 1.0, 0.2], &[true; 5], PruneMode::TerminalLeaves)
            .unwrap();
        assert_eq!(t, vec![0, 2, 3, 4]);
        // Without the detour the MST keeps the direct edge only.
        let t = heuristic_tree(&inst, 0, Scheme::Mst, &[1.0, 1.0, 0.2, 1.0, 0.2], &[true, true, true, true, false], PruneMode::TerminalLeaves)
            .unwrap();
        assert_eq!(t, vec![0, 1, 3]);
    }

    #[test]
    fn unreachable_terminal_fails() {
        let inst = path_instance();
        let r = heuristic_tree(&inst, 0, Scheme::Spt, &[1.0; 5], &[true, true, true, false, true], PruneMode::TerminalLeaves);
        assert!(matches!(r, Err(Error::Infeasible(_))));
        let aux = [1.0, 1.0, 1.0, f64::INFINITY, 1.0];
        assert!(heuristic_tree(&inst, 0, Scheme::Mst, &aux, &[true; 5], PruneMode::TerminalLeaves).is_err());
    }

    #[test]
    fn prize_threshold_keeps_profitable_leaf() {
        let inst = Instance::with_prizes(
            3,
            vec![(0, 1, 1.0), (1, 2, 0.5)],
            vec![Communication { terminals: vec![0, 1], root: 0 }],
            &[(2, 0, 0.8)],
        )
        .unwrap();
        let a = heuristic_tree(&inst, 0, Scheme::Mst, &[1.0, 0.5], &[true; 2], PruneMode::PrizeThreshold).unwrap();
        assert_eq!(a, vec![0, 1]);
        let b = heuristic_tree(&inst, 0, Scheme::Mst, &[1.0, 0.5], &[true; 2], PruneMode::TerminalLeaves).unwrap();
        assert_eq!(b, vec![0]);
    }

    #[test]
    fn spt_weights_from_fields() {
        let inst = path_instance();
        let sp = StateSpace::new(2, 1);
        let mut f = CavityField::zeros(sp, 5);
        for e in 0..5 {
            let g = f.get_mut(e);
            g.fill(NEG_INF);
            g[0] = 0.0;
            g[sp.idx(-2, 1)] = -(e as f64);
        }
        f.get_mut(4)[sp.idx(-2, 1)] = NEG_INF;
        let w = spt_reweight(&inst, &f, 0);
        assert_eq!(&w[..4], &[0.0, 1.0, 2.0, 3.0]);
        assert_eq!(w[4], f64::INFINITY);
    }

    #[test]
    fn mst_penalty_test_reads_incoming_messages() {
        // A degree-2 Steiner node: activity costs one unit on the outgoing side.
        let inst = Instance::new(
            3,
            vec![(0, 1, 1.0), (1, 2, 1.0)],
            vec![Communication { terminals: vec![0, 2], root: 0 }],
        )
        .unwrap();
        let sp = StateSpace::new(2, 1);
        let mut msgs = MessageTable::zeros(sp, 2);
        let into = |e: usize| crate::state::directed(&inst, e, inst.edge(e).other(1));
        assert!(!mst_penalized(&inst, &msgs, 1, 0));
        for e in 0..2 {
            let h = msgs.get_mut(into(e));
            for i in 1..sp.len() {
                h[i] = -5.0;
            }
        }
        assert!(mst_penalized(&inst, &msgs, 1, 0));
        assert!(!mst_penalized(&inst, &msgs, 0, 0));
    }

    #[test]
    fn heuristic_round_is_disjoint() {
        let inst = gen_complete(14, 3, 3, Weighting::Uniform, 2).unwrap().with_depth(Some(3));
        let cfg = SolverConfig { max_iters: 30, ..SolverConfig::default() };
        let mut s = crate::solver::Solver::new(&inst, cfg).unwrap();
        for _ in 0..5 {
            s.sweep().unwrap();
        }
        for scheme in [Scheme::Spt, Scheme::Mst] {
            let sol = run_heuristic_round(&inst, s.fields(), s.messages(), scheme, &[2, 0, 1], PruneMode::TerminalLeaves)
                .unwrap();
            let v = validate(&sol, &inst);
            assert!(v.violations.iter().all(|x| !x.contains("share")), "{:?}", v.violations);
        }
    }

    #[test]
    fn greedy_packs_easy_instance() {
        let inst = gen_complete(20, 3, 3, Weighting::Uniform, 8).unwrap().with_depth(Some(3));
        let cfg = SolverConfig { max_iters: 200, ..SolverConfig::default() };
        let g = greedy_solve(&inst, &[0, 1, 2], &cfg).unwrap();
        assert_eq!(g.packed, 3);
        let v = validate(&g.solution, &inst);
        assert!(v.is_feasible(), "{:?}", v.violations);
        let e = energy(&g.solution, &inst).value().unwrap();
        assert!((e - g.energy.value().unwrap()).abs() < 1e-9);
    }

    #[test]
    fn greedy_reports_partial_packing() {
        // Two communications must share the only bridge.
        let inst = Instance::new(
            4,
            vec![(0, 1, 1.0), (1, 2, 1.0), (2, 3, 1.0)],
            vec![
                Communication { terminals: vec![0, 2], root: 0 },
                Communication { terminals: vec![1, 3], root: 1 },
            ],
        )
        .unwrap();
        let g = greedy_solve(&inst, &[0, 1], &SolverConfig { max_iters: 50, ..SolverConfig::default() }).unwrap();
        assert_eq!(g.energy, Energy::Infeasible);
        assert!(g.packed < 2);
    }
}
