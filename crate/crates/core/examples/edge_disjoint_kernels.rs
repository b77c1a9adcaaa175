//! The two edge-disjoint node updates give the same trajectory and energy
//! from the same seed, at different costs.

use std::time::Instant;

use stpack::instance::{gen_regular, Variant};
use stpack::kernel::KernelKind;
use stpack::solver::{run, SolverConfig};

fn main() -> stpack::Result<()> {
    let inst = gen_regular(30, 4, 3, 3, 21)?.with_variant(Variant::EdgeDisjoint).with_depth(Some(6));
    for kernel in [KernelKind::NeighOcc, KernelKind::Matching] {
        let cfg = SolverConfig { kernel: Some(kernel), gamma0: 1e-4, seed: 5, ..SolverConfig::default() };
        let t0 = Instant::now();
        let out = run(&inst, &cfg)?;
        println!(
            "{:>9}: energy {} after {} sweeps (converged {}), {:.1} ms",
            kernel.name(),
            out.report.best_ms_energy,
            out.report.iterations,
            out.report.converged,
            t0.elapsed().as_secs_f64() * 1e3
        );
    }
    Ok(())
}
