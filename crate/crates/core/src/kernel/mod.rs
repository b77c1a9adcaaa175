//! One-node Max-Sum updates.
//!
//! A kernel reads the incoming messages `h_ki` of node `i` and produces every
//! outgoing message `h_ij`. Raw outputs are unnormalized maxima; the public
//! `update_*` wrappers normalize.
//!
//! Local constraint at `i` for communication `mu`, in terms of the incoming
//! variables `d_ki`:
//! * root of `mu`: every `mu`-edge has `d_ki = 1` (any number, including none);
//! * otherwise active at depth `e`: exactly one parent edge with `d_ki = -e`,
//!   and either all other `mu`-edges at `e + 1` (branching) or exactly one
//!   other edge at `e` (flat, zero-prize nodes only);
//! * inactive: the node pays its prize `c_i^mu`.
//!
//! Vertex-disjoint packing allows at most one active communication per node;
//! edge-disjoint packing checks each communication independently.

pub mod assignment;
mod matching;
mod neighocc;
mod vdstp;

use crate::error::{Error, Result};
use crate::instance::{Formalism, Instance, Prize, Variant};
use crate::state::{normalize, snap, MessageTable, StateSpace, NEG_INF};

pub use assignment::{max_weight_matching, MatchingProblem, MatchingResult};
pub use matching::{raw_edstp_matching, DEFAULT_ENUM_CAP};
pub use neighocc::{raw_edstp_neighocc, DEFAULT_DEGREE_CAP};
pub use vdstp::raw_vdstp;

/// Node update algorithm.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum KernelKind {
    VDStP,
    NeighOcc,
    Matching,
}

impl KernelKind {
    pub fn name(self) -> &'static str {
        match self {
            KernelKind::VDStP => "vdstp",
            KernelKind::NeighOcc => "neighocc",
            KernelKind::Matching => "matching",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        match s.to_ascii_lowercase().as_str() {
            "vdstp" => Some(KernelKind::VDStP),
            "neighocc" => Some(KernelKind::NeighOcc),
            "matching" => Some(KernelKind::Matching),
            _ => None,
        }
    }

    /// Default kernel for a variant.
    pub fn default_for(variant: Variant) -> Self {
        match variant {
            Variant::VertexDisjoint => KernelKind::VDStP,
            Variant::EdgeDisjoint => KernelKind::NeighOcc,
        }
    }

    /// Rejects kernel/variant/formalism combinations that make no sense.
    pub fn check(self, variant: Variant, formalism: Formalism) -> Result<()> {
        match (self, variant) {
            (KernelKind::VDStP, Variant::EdgeDisjoint) => {
                return Err(Error::Argument("the vdstp kernel only serves vertex-disjoint packing".into()))
            }
            (KernelKind::NeighOcc | KernelKind::Matching, Variant::VertexDisjoint) => {
                return Err(Error::Argument(format!(
                    "the {} kernel only serves edge-disjoint packing",
                    self.name()
                )))
            }
            _ => {}
        }
        if self == KernelKind::Matching && formalism == Formalism::Flat {
            return Err(Error::UnsupportedFormalism("the matching kernel has no flat term".into()));
        }
        Ok(())
    }
}

/// Everything a node update needs. Communications are 1-based as in the
/// state space; `prizes[mu - 1]` is `c_i^mu`.
#[derive(Debug, Clone)]
pub struct LocalNodeView<'a> {
    pub node: usize,
    pub space: StateSpace,
    /// Incoming messages `h_ki`, one per neighbor.
    pub incoming: Vec<&'a [f64]>,
    /// `w_ik`, aligned with `incoming`.
    pub weights: Vec<f64>,
    pub prizes: &'a [Prize],
    /// 1-based communication rooted here.
    pub root_of: Option<usize>,
    pub flat: bool,
}

impl<'a> LocalNodeView<'a> {
    /// View of `node` reading incoming messages from `table`. Weights are
    /// rounded to the message grid.
    pub fn from_table(inst: &'a Instance, table: &'a MessageTable, node: usize, flat: bool) -> Self {
        let nbrs = inst.neighbors(node);
        let mut incoming = Vec::with_capacity(nbrs.len());
        let mut weights = Vec::with_capacity(nbrs.len());
        for inc in nbrs {
            let e = inst.edge(inc.edge);
            // Incoming direction is neighbor -> node.
            let dir = if e.u == inc.neighbor { 2 * inc.edge } else { 2 * inc.edge + 1 };
            incoming.push(table.get(dir));
            weights.push(snap(e.w));
        }
        LocalNodeView {
            node,
            space: table.space(),
            incoming,
            weights,
            prizes: inst.prizes_of(node),
            root_of: inst.root_of(node).map(|m| m + 1),
            flat,
        }
    }

    pub fn degree(&self) -> usize {
        self.incoming.len()
    }

    /// `h_ki(d, mu)`, forbidden outside the depth range.
    #[inline]
    pub fn h(&self, k: usize, d: i32, mu: usize) -> f64 {
        self.space.get(self.incoming[k], d, mu)
    }

    /// `h_ki(0, 0)`.
    #[inline]
    pub fn unused(&self, k: usize) -> f64 {
        self.incoming[k][0]
    }

    pub fn is_root(&self, mu: usize) -> bool {
        self.root_of == Some(mu)
    }

    /// Flat roles are open to `mu` at this node.
    pub fn flat_ok(&self, mu: usize) -> bool {
        self.flat && !self.is_root(mu) && self.prizes[mu - 1].is_zero()
    }

    /// `-c_i^mu` for an inactive communication (0 for the root).
    pub fn inactive_penalty(&self, mu: usize) -> f64 {
        if self.is_root(mu) {
            0.0
        } else {
            self.prizes[mu - 1].penalty()
        }
    }
}

/// Sum of values tracking forbidden terms separately, so members can be
/// excluded without subtracting an infinite value.
#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct InfSum {
    fin: f64,
    ninf: usize,
}

impl InfSum {
    pub fn of(vals: impl IntoIterator<Item = f64>) -> Self {
        let mut s = InfSum::default();
        for v in vals {
            s.add(v);
        }
        s
    }

    pub fn add(&mut self, v: f64) {
        if v == NEG_INF {
            self.ninf += 1;
        } else {
            self.fin += v;
        }
    }

    pub fn value(&self) -> f64 {
        if self.ninf > 0 {
            NEG_INF
        } else {
            self.fin
        }
    }

    /// Sum without the members whose values are listed.
    #[inline]
    pub fn without(&self, removed: &[f64]) -> f64 {
        let mut fin = self.fin;
        let mut ninf = self.ninf;
        for &v in removed {
            if v == NEG_INF {
                ninf -= 1;
            } else {
                fin -= v;
            }
        }
        if ninf > 0 {
            NEG_INF
        } else {
            fin
        }
    }
}

/// Unnormalized outgoing messages of every neighbor for the given kernel.
pub fn raw_outgoing(kind: KernelKind, view: &LocalNodeView<'_>) -> Result<Vec<Vec<f64>>> {
    match kind {
        KernelKind::VDStP => Ok(raw_vdstp(view)),
        KernelKind::NeighOcc => raw_edstp_neighocc(view, DEFAULT_DEGREE_CAP),
        KernelKind::Matching => raw_edstp_matching(view, DEFAULT_ENUM_CAP),
    }
}

fn normalized(mut out: Vec<f64>, view: &LocalNodeView<'_>, target: usize) -> Result<Vec<f64>> {
    normalize(&mut out).map_err(|_| {
        Error::Contradiction(format!("node {}: every state toward neighbor #{target} is forbidden", view.node + 1))
    })?;
    Ok(out)
}

/// Normalized `h_ij` for the vertex-disjoint problem. `target` indexes `view.incoming`.
pub fn update_node_vdstp(view: &LocalNodeView<'_>, target: usize) -> Result<Vec<f64>> {
    let out = raw_vdstp(view).swap_remove(target);
    normalized(out, view, target)
}

/// Normalized `h_ij` for the edge-disjoint problem via subset recursion.
pub fn update_node_edstp_neighocc(view: &LocalNodeView<'_>, target: usize) -> Result<Vec<f64>> {
    let out = raw_edstp_neighocc(view, DEFAULT_DEGREE_CAP)?.swap_remove(target);
    normalized(out, view, target)
}

/// Normalized `h_ij` for the edge-disjoint problem via depth vectors and matchings.
pub fn update_node_edstp_matching(view: &LocalNodeView<'_>, target: usize) -> Result<Vec<f64>> {
    let out = raw_edstp_matching(view, DEFAULT_ENUM_CAP)?.swap_remove(target);
    normalized(out, view, target)
}

#[cfg(test)]
pub(crate) mod testutil {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Owned storage for a random view.
    pub struct ViewData {
        pub space: StateSpace,
        pub msgs: Vec<Vec<f64>>,
        pub weights: Vec<f64>,
        pub prizes: Vec<Prize>,
        pub root_of: Option<usize>,
        pub flat: bool,
    }

    impl ViewData {
        pub fn view(&self) -> LocalNodeView<'_> {
            LocalNodeView {
                node: 0,
                space: self.space,
                incoming: self.msgs.iter().map(Vec::as_slice).collect(),
                weights: self.weights.clone(),
                prizes: &self.prizes,
                root_of: self.root_of,
                flat: self.flat,
            }
        }
    }

    /// Random view: messages uniform in [-5, 0], occasional forbidden
    /// entries, a random role (plain, terminal, root, zero or positive prize).
    pub fn random_view(rng: &mut ChaCha8Rng, deg: usize, depth: usize, comms: usize, flat: bool, holes: bool) -> ViewData {
        let space = StateSpace::new(depth, comms);
        let msgs = (0..deg)
            .map(|_| {
                (0..space.len())
                    .map(|_| if holes && rng.gen_bool(0.1) { NEG_INF } else { -5.0 * rng.gen::<f64>() })
                    .collect()
            })
            .collect();
        let weights = (0..deg).map(|_| 0.1 + rng.gen::<f64>()).collect();
        let mut prizes: Vec<Prize> = (0..comms)
            .map(|_| if rng.gen_bool(0.5) { Prize::Value(0.0) } else { Prize::Value(3.0 * rng.gen::<f64>()) })
            .collect();
        let mut root_of = None;
        match rng.gen_range(0..4) {
            0 => {
                let mu = rng.gen_range(1..=comms);
                prizes[mu - 1] = Prize::Terminal;
            }
            1 => {
                let mu = rng.gen_range(1..=comms);
                prizes[mu - 1] = Prize::Terminal;
                root_of = Some(mu);
            }
            _ => {}
        }
        ViewData { space, msgs, weights, prizes, root_of, flat }
    }

    pub fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kernel_names_round_trip() {
        for k in [KernelKind::VDStP, KernelKind::NeighOcc, KernelKind::Matching] {
            assert_eq!(KernelKind::from_name(k.name()), Some(k));
        }
        assert!(KernelKind::Matching.check(Variant::EdgeDisjoint, Formalism::Flat).is_err());
        assert!(KernelKind::NeighOcc.check(Variant::EdgeDisjoint, Formalism::Flat).is_ok());
        assert!(KernelKind::VDStP.check(Variant::EdgeDisjoint, Formalism::Branching).is_err());
    }

    #[test]
    fn inf_sum_exclusion() {
        let vals = [1.0, NEG_INF, 2.5];
        let s = InfSum::of(vals);
        assert_eq!(s.value(), NEG_INF);
        assert_eq!(s.without(&[NEG_INF]), 3.5);
        assert_eq!(s.without(&[1.0]), NEG_INF);
        assert_eq!(s.without(&[NEG_INF, 2.5]), 1.0);
    }
}
