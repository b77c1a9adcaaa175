//! Reinforced Max-Sum on a vertex-disjoint instance, with the run report.

use stpack::instance::{gen_complete, Weighting};
use stpack::solver::{run, validate, SolverConfig};

fn main() -> stpack::Result<()> {
    let inst = gen_complete(40, 3, 4, Weighting::Uniform, 3)?.with_depth(Some(4));
    let cfg = SolverConfig { gamma0: 1e-5, seed: 1, ..SolverConfig::default() };
    let out = run(&inst, &cfg)?;
    print!("{}", out.report.to_kv());

    if let Some(sol) = &out.best {
        assert!(validate(sol, &inst).is_feasible());
        for mu in 0..inst.num_comms() {
            let nodes = sol.node_set(&inst, mu);
            println!("comm {}: {} edges over {} nodes", mu + 1, sol.edge_set(mu).len(), nodes.len());
        }
    }
    Ok(())
}
