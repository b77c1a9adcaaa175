//! Seeded random instance generators.
//!
//! All generators draw from a `ChaCha8Rng` seeded with `seed`, so identical
//! parameters give bitwise identical instances.

use std::collections::HashSet;

use rand::seq::index::sample;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Communication, GridMeta, Instance, LayerType};
use crate::error::{Error, Result};

/// Maximum number of pairings tried before a regular graph draw gives up.
const REGULAR_ATTEMPTS: usize = 200_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Weighting {
    /// `w_ij` i.i.d. uniform on (0, 1).
    Uniform,
    /// `w_ij = x_i * x_j * y_ij` with all factors uniform on (0, 1).
    Correlated,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GridWeights {
    Unit,
    Uniform,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum GridTerminals {
    /// Per communication, the `(x, y, z)` coordinates of its terminals; the
    /// first one is the root.
    Explicit(Vec<Vec<(usize, usize, usize)>>),
    /// `per_comm` terminals per communication drawn without replacement.
    Random { per_comm: usize },
}

/// Uniform draw on the open interval (0, 1).
pub fn uniform_open(rng: &mut impl Rng) -> f64 {
    loop {
        let x: f64 = rng.gen();
        if x > 0.0 {
            return x;
        }
    }
}

fn draw_comms(rng: &mut ChaCha8Rng, n: usize, m: usize, t: usize) -> Result<Vec<Communication>> {
    if m == 0 || t == 0 {
        return Err(Error::Argument("need at least one communication and one terminal each".into()));
    }
    if m * t > n {
        return Err(Error::Capacity(format!("{m} x {t} terminals do not fit in {n} nodes")));
    }
    let picked = sample(rng, n, m * t).into_vec();
    Ok(picked
        .chunks(t)
        .map(|c| Communication { terminals: c.to_vec(), root: c[0] })
        .collect())
}

/// Complete graph on `n` nodes with `m` communications of `t` terminals.
pub fn gen_complete(n: usize, m: usize, t: usize, weighting: Weighting, seed: u64) -> Result<Instance> {
    if m * t > n {
        return Err(Error::Capacity(format!("{m} x {t} terminals do not fit in {n} nodes")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut edges = Vec::with_capacity(n * n.saturating_sub(1) / 2);
    match weighting {
        Weighting::Uniform => {
            for i in 0..n {
                for j in i + 1..n {
                    edges.push((i, j, uniform_open(&mut rng)));
                }
            }
        }
        Weighting::Correlated => {
            let x: Vec<f64> = (0..n).map(|_| uniform_open(&mut rng)).collect();
            for i in 0..n {
                for j in i + 1..n {
                    let y = uniform_open(&mut rng);
                    edges.push((i, j, x[i] * x[j] * y));
                }
            }
        }
    }
    let comms = draw_comms(&mut rng, n, m, t)?;
    Instance::new(n, edges, comms)
}

/// Uniformly sampled simple `degree`-regular graph (pairing model with
/// rejection) with uniform (0, 1) weights.
pub fn gen_regular(n: usize, degree: usize, m: usize, t: usize, seed: u64) -> Result<Instance> {
    if (n * degree) % 2 != 0 {
        return Err(Error::Argument(format!("n * degree = {} must be even", n * degree)));
    }
    if degree >= n {
        return Err(Error::Argument(format!("degree {degree} must be below n = {n}")));
    }
    if m * t > n {
        return Err(Error::Capacity(format!("{m} x {t} terminals do not fit in {n} nodes")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut points: Vec<usize> = (0..n * degree).map(|p| p / degree).collect();
    let mut pairs = None;
    for _ in 0..REGULAR_ATTEMPTS {
        points.shuffle(&mut rng);
        let mut seen = HashSet::with_capacity(points.len() / 2);
        let ok = points.chunks(2).all(|c| {
            let (a, b) = (c[0].min(c[1]), c[0].max(c[1]));
            a != b && seen.insert((a, b))
        });
        if ok {
            let mut list: Vec<(usize, usize)> = seen.into_iter().collect();
            list.sort_unstable();
            pairs = Some(list);
            break;
        }
    }
    let pairs = pairs.ok_or_else(|| {
        Error::Generation(format!("no simple {degree}-regular pairing on {n} nodes after {REGULAR_ATTEMPTS} tries"))
    })?;
    let edges = pairs.into_iter().map(|(a, b)| (a, b, uniform_open(&mut rng))).collect();
    let comms = draw_comms(&mut rng, n, m, t)?;
    Instance::new(n, edges, comms)
}

/// 3D lattice in the VLSI style. Multi-aligned layers keep only x-direction
/// edges on even layers and only y-direction edges on odd layers; vertical
/// edges are always present.
#[allow(clippy::too_many_arguments)]
pub fn gen_grid(
    nx: usize,
    ny: usize,
    nz: usize,
    layer: LayerType,
    m: usize,
    terminals: &GridTerminals,
    weights: GridWeights,
    seed: u64,
) -> Result<Instance> {
    if nx < 2 || ny < 2 || nz < 1 {
        return Err(Error::Argument(format!("grid {nx}x{ny}x{nz} too small")));
    }
    let meta = GridMeta { nx, ny, nz, layer };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut edges = Vec::new();
    for z in 0..nz {
        for y in 0..ny {
            for x in 0..nx {
                let id = meta.node_id(x, y, z);
                let x_ok = layer == LayerType::MultiCrossed || z % 2 == 0;
                let y_ok = layer == LayerType::MultiCrossed || z % 2 == 1;
                if x_ok && x + 1 < nx {
                    edges.push((id, meta.node_id(x + 1, y, z)));
                }
                if y_ok && y + 1 < ny {
                    edges.push((id, meta.node_id(x, y + 1, z)));
                }
                if z + 1 < nz {
                    edges.push((id, meta.node_id(x, y, z + 1)));
                }
            }
        }
    }
    edges.sort_unstable();
    let edges: Vec<(usize, usize, f64)> = edges
        .into_iter()
        .map(|(a, b)| {
            let w = match weights {
                GridWeights::Unit => 1.0,
                GridWeights::Uniform => uniform_open(&mut rng),
            };
            (a, b, w)
        })
        .collect();
    let n = meta.num_nodes();
    let comms = match terminals {
        GridTerminals::Explicit(lists) => {
            if lists.len() != m {
                return Err(Error::Validation(format!("{} terminal lists for {m} communications", lists.len())));
            }
            let mut out = Vec::with_capacity(m);
            for list in lists {
                let mut ts = Vec::with_capacity(list.len());
                for &(x, y, z) in list {
                    if x >= nx || y >= ny || z >= nz {
                        return Err(Error::Validation(format!("terminal ({x}, {y}, {z}) outside the grid")));
                    }
                    ts.push(meta.node_id(x, y, z));
                }
                let root = *ts
                    .first()
                    .ok_or_else(|| Error::Validation("empty terminal list".into()))?;
                out.push(Communication { terminals: ts, root });
            }
            out
        }
        GridTerminals::Random { per_comm } => draw_comms(&mut rng, n, m, *per_comm)?,
    };
    let mut inst = Instance::new(n, edges, comms)?;
    inst.grid = Some(meta);
    Ok(inst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::serialize_instance;

    #[test]
    fn complete_shape() {
        let inst = gen_complete(3, 1, 2, Weighting::Uniform, 11).unwrap();
        assert_eq!(inst.num_edges(), 3);
        assert!(inst.edges().iter().all(|e| e.w > 0.0 && e.w < 1.0));
        assert_eq!(inst.terminals(0).len(), 2);
        assert_ne!(inst.terminals(0)[0], inst.terminals(0)[1]);
        assert_eq!(inst.root(0), inst.terminals(0)[0]);
    }

    #[test]
    fn complete_500_nodes() {
        let inst = gen_complete(500, 3, 20, Weighting::Uniform, 3).unwrap();
        assert_eq!(inst.num_edges(), 500 * 499 / 2);
        let all: HashSet<usize> = inst.comms().iter().flat_map(|c| c.terminals.iter().copied()).collect();
        assert_eq!(all.len(), 60);
    }

    #[test]
    fn complete_capacity_error() {
        assert!(matches!(gen_complete(5, 2, 3, Weighting::Uniform, 0), Err(Error::Capacity(_))));
    }

    #[test]
    fn correlated_weights_bounded_by_node_factors() {
        for seed in 0..5 {
            let n = 30;
            let inst = gen_complete(n, 2, 3, Weighting::Correlated, seed).unwrap();
            // Regenerate the node factors from the seed: they are the first n draws.
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let x: Vec<f64> = (0..n).map(|_| uniform_open(&mut rng)).collect();
            let mut k = 0;
            for i in 0..n {
                for j in i + 1..n {
                    let y = uniform_open(&mut rng);
                    let e = inst.edges()[k];
                    assert_eq!((e.u, e.v), (i, j));
                    assert_eq!(e.w, x[i] * x[j] * y);
                    assert!(e.w <= x[i].min(x[j]));
                    k += 1;
                }
            }
        }
    }

    #[test]
    fn regular_degree_four() {
        let inst = gen_regular(50, 4, 3, 3, 9).unwrap();
        assert_eq!(inst.num_edges(), 100);
        assert!((0..50).all(|i| inst.degree(i) == 4));
    }

    #[test]
    fn regular_k4() {
        let inst = gen_regular(4, 3, 1, 2, 1).unwrap();
        assert_eq!(inst.num_edges(), 6);
    }

    #[test]
    fn regular_parity_error() {
        assert!(matches!(gen_regular(5, 3, 1, 2, 1), Err(Error::Argument(_))));
        assert!(matches!(gen_regular(4, 4, 1, 2, 1), Err(Error::Argument(_))));
    }

    #[test]
    fn grid_counts() {
        let sq = gen_grid(2, 2, 1, LayerType::MultiCrossed, 1, &GridTerminals::Random { per_comm: 2 }, GridWeights::Unit, 0)
            .unwrap();
        assert_eq!((sq.num_nodes(), sq.num_edges()), (4, 4));
        let cube =
            gen_grid(5, 5, 5, LayerType::MultiCrossed, 2, &GridTerminals::Random { per_comm: 3 }, GridWeights::Unit, 0)
                .unwrap();
        assert_eq!((cube.num_nodes(), cube.num_edges()), (125, 300));
    }

    #[test]
    fn aligned_layers_alternate_axes() {
        let inst = gen_grid(
            16,
            18,
            2,
            LayerType::MultiAligned,
            19,
            &GridTerminals::Random { per_comm: 3 },
            GridWeights::Unit,
            4,
        )
        .unwrap();
        assert_eq!(inst.num_nodes(), 576);
        let g = inst.grid.unwrap();
        for e in inst.edges() {
            let (a, b) = (g.coords(e.u), g.coords(e.v));
            if a.2 != b.2 {
                assert_eq!((a.0, a.1), (b.0, b.1));
                continue;
            }
            let along_x = a.1 == b.1;
            assert_eq!(along_x, a.2 % 2 == 0, "edge {a:?}-{b:?}");
        }
        // 15*18 x-edges on layer 0, 16*17 y-edges on layer 1, 16*18 vertical.
        assert_eq!(inst.num_edges(), 15 * 18 + 16 * 17 + 16 * 18);
    }

    #[test]
    fn grid_explicit_terminals_checked() {
        let bad = GridTerminals::Explicit(vec![vec![(0, 0, 0), (3, 0, 0)]]);
        let err = gen_grid(3, 3, 1, LayerType::MultiCrossed, 1, &bad, GridWeights::Unit, 0).unwrap_err();
        assert!(matches!(err, Error::Validation(_)));
    }

    #[test]
    fn generators_are_deterministic() {
        let a = serialize_instance(&gen_regular(20, 3, 2, 3, 77).unwrap());
        let b = serialize_instance(&gen_regular(20, 3, 2, 3, 77).unwrap());
        assert_eq!(a, b);
        let c = serialize_instance(&gen_regular(20, 3, 2, 3, 78).unwrap());
        assert_ne!(a, c);
    }
}
