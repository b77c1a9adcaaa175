//! Effect of the reinforcement factor on convergence.

use stpack::instance::{gen_complete, Weighting};
use stpack::solver::{run, SolverConfig};

fn main() -> stpack::Result<()> {
    let inst = gen_complete(40, 3, 4, Weighting::Uniform, 12)?.with_depth(Some(4));
    for gamma0 in [0.0, 1e-5, 1e-4, 1e-3, 1e-2] {
        let cfg = SolverConfig { gamma0, max_iters: 600, seed: 3, ..SolverConfig::default() };
        let r = run(&inst, &cfg)?.report;
        println!("gamma0 {gamma0:<7}: converged {:<5} after {:>4} sweeps, energy {}", r.converged, r.iterations, r.best_ms_energy);
    }
    Ok(())
}
