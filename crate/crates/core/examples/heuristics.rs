//! Shortest-path and spanning-tree heuristics driven by the Max-Sum state,
//! under each pruning rule.

use stpack::heuristics::{run_heuristic_round, PruneMode, Scheme};
use stpack::instance::{gen_complete, Weighting};
use stpack::solver::{energy, Solver, SolverConfig};

fn main() -> stpack::Result<()> {
    let inst = gen_complete(50, 3, 5, Weighting::Uniform, 8)?.with_depth(Some(4));
    let mut solver = Solver::new(&inst, SolverConfig { seed: 2, ..SolverConfig::default() })?;
    for _ in 0..30 {
        solver.sweep()?;
    }
    println!("Max-Sum decode after 30 sweeps: {}", energy(&solver.decode(), &inst));
    for scheme in [Scheme::Spt, Scheme::Mst] {
        for prune in [PruneMode::TerminalLeaves, PruneMode::PrizeThreshold, PruneMode::Keep] {
            let sol = run_heuristic_round(&inst, solver.fields(), solver.messages(), scheme, &[0, 1, 2], prune)?;
            println!("{:>4} / {:<6}: {:>3} edges, energy {}", scheme.name(), prune.name(), sol.num_edges(), energy(&sol, &inst));
        }
    }
    Ok(())
}
