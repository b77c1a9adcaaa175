//! A layered routing grid: edge-disjoint packing with both heuristics.

use stpack::heuristics::HeuristicConfig;
use stpack::instance::{gen_grid, GridTerminals, GridWeights, LayerType, Variant};
use stpack::solver::{run, SolverConfig};

fn main() -> stpack::Result<()> {
    let terminals = GridTerminals::Explicit(vec![vec![(0, 0, 0), (5, 5, 0), (5, 0, 1)], vec![(0, 5, 0), (5, 2, 1), (2, 0, 0)]]);
    for layer in [LayerType::MultiAligned, LayerType::MultiCrossed] {
        let inst = gen_grid(6, 6, 2, layer, 2, &terminals, GridWeights::Unit, 1)?.with_variant(Variant::EdgeDisjoint);
        let cfg = SolverConfig {
            gamma0: 1e-3,
            depth: Some(14),
            heuristics: Some(HeuristicConfig::default()),
            ..SolverConfig::default()
        };
        let out = run(&inst, &cfg)?;
        let r = &out.report;
        println!(
            "{:>7}: Max-Sum {}, spt {}, mst {}, best {} ({} sweeps)",
            layer.name(),
            r.best_ms_energy,
            r.heuristic(stpack::heuristics::Scheme::Spt),
            r.heuristic(stpack::heuristics::Scheme::Mst),
            r.best_energy,
            r.iterations
        );
    }
    Ok(())
}
