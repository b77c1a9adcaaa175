use std::collections::VecDeque;

use super::{Formalism, Instance};
use crate::error::{Error, Result};

/// Depth bounds per communication and the global bound used by the solver.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DepthChoice {
    pub per_comm: Vec<usize>,
    pub global: usize,
}

/// Unweighted BFS hop distances from `src`; `usize::MAX` marks unreachable.
pub(crate) fn bfs_hops(inst: &Instance, src: usize) -> Vec<usize> {
    let mut dist = vec![usize::MAX; inst.num_nodes()];
    let mut queue = VecDeque::new();
    dist[src] = 0;
    queue.push_back(src);
    while let Some(u) = queue.pop_front() {
        for inc in inst.neighbors(u) {
            if dist[inc.neighbor] == usize::MAX {
                dist[inc.neighbor] = dist[u] + 1;
                queue.push_back(inc.neighbor);
            }
        }
    }
    dist
}

/// Flat: `D_mu = |T_mu|`. Branching: `D_mu` is the largest hop distance from
/// the root to one of its terminals. The global bound is the maximum over
/// communications (at least 1).
pub fn choose_depth(inst: &Instance) -> Result<DepthChoice> {
    let mut per_comm = Vec::with_capacity(inst.num_comms());
    for (mu, c) in inst.comms().iter().enumerate() {
        let dist = bfs_hops(inst, c.root);
        let mut ecc = 0;
        for &t in &c.terminals {
            if dist[t] == usize::MAX {
                return Err(Error::Infeasible(format!(
                    "terminal {} of communication {} is unreachable from its root {}",
                    t + 1,
                    mu + 1,
                    c.root + 1
                )));
            }
            ecc = ecc.max(dist[t]);
        }
        per_comm.push(match inst.formalism {
            Formalism::Flat => c.terminals.len(),
            Formalism::Branching => ecc,
        });
    }
    let global = per_comm.iter().copied().max().unwrap_or(1).max(1);
    Ok(DepthChoice { per_comm, global })
}
