#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use stpack::instance::{Communication, Instance, Prize};
use stpack::kernel::LocalNodeView;
use stpack::state::StateSpace;

/// Owned backing store for a [`LocalNodeView`].
pub struct OwnedView {
    pub space: StateSpace,
    pub msgs: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
    pub prizes: Vec<Prize>,
    pub root_of: Option<usize>,
    pub flat: bool,
}

impl OwnedView {
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

/// Finite messages uniform in [-5, 0]; the node is a plain Steiner node, a
/// terminal or a root, with zero or positive prizes elsewhere.
pub fn random_view(rng: &mut ChaCha8Rng, deg: usize, depth: usize, comms: usize, flat: bool) -> OwnedView {
    let space = StateSpace::new(depth, comms);
    let msgs = (0..deg).map(|_| (0..space.len()).map(|_| -5.0 * rng.gen::<f64>()).collect()).collect();
    let weights = (0..deg).map(|_| 0.05 + rng.gen::<f64>()).collect();
    let mut prizes: Vec<Prize> = (0..comms)
        .map(|_| if rng.gen_bool(0.6) { Prize::Value(0.0) } else { Prize::Value(2.0 * rng.gen::<f64>()) })
        .collect();
    let mut root_of = None;
    match rng.gen_range(0..4) {
        0 => prizes[rng.gen_range(0..comms)] = Prize::Terminal,
        1 => {
            let mu = rng.gen_range(1..=comms);
            prizes[mu - 1] = Prize::Terminal;
            root_of = Some(mu);
        }
        _ => {}
    }
    OwnedView { space, msgs, weights, prizes, root_of, flat }
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn close(a: f64, b: f64, tol: f64) -> bool {
    (a == f64::NEG_INFINITY && b == f64::NEG_INFINITY) || (a - b).abs() <= tol
}

/// Two-row ladder with `len` rungs: top row weight 1.0, bottom row 1.2,
/// rungs 1.5. Terminals sit on the top row at 1-based columns `cols`, the
/// first one being the root.
pub fn ladder(len: usize, cols: &[usize]) -> Instance {
    let mut edges = Vec::new();
    for i in 0..len {
        if i + 1 < len {
            edges.push((i, i + 1, 1.0));
            edges.push((len + i, len + i + 1, 1.2));
        }
        edges.push((i, len + i, 1.5));
    }
    let terminals: Vec<usize> = cols.iter().map(|c| c - 1).collect();
    let root = terminals[0];
    Instance::new(2 * len, edges, vec![Communication { terminals, root }]).unwrap()
}

pub fn median(xs: &mut [f64]) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len();
    if n % 2 == 1 {
        xs[n / 2]
    } else {
        0.5 * (xs[n / 2 - 1] + xs[n / 2])
    }
}
