//! Sequential greedy packing against joint Max-Sum, on both weightings.

use stpack::heuristics::greedy_solve;
use stpack::instance::{gen_complete, Weighting};
use stpack::solver::{gap, run, SolverConfig};

fn main() -> stpack::Result<()> {
    let cfg = SolverConfig { gamma0: 1e-5, ..SolverConfig::default() };
    for weighting in [Weighting::Uniform, Weighting::Correlated] {
        for seed in 0..2 {
            let inst = gen_complete(40, 3, 5, weighting, seed)?.with_depth(Some(4));
            let ms = run(&inst, &SolverConfig { seed, ..cfg.clone() })?.report.best_ms_energy;
            let greedy = greedy_solve(&inst, &[0, 1, 2], &cfg)?;
            let g = match (greedy.energy.value(), ms.value()) {
                (Some(a), Some(b)) => format!("{:+.3}", gap(a, b)?),
                _ => "n/a".into(),
            };
            println!("{weighting:?} seed {seed}: Max-Sum {ms}, greedy {} ({} trees), gap {g}", greedy.energy, greedy.packed);
        }
    }
    Ok(())
}
