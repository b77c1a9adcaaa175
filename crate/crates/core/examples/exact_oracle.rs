//! Brute-force references: the exact packing optimum of a tiny instance and
//! the literal local update compared with the fast kernel.

use stpack::instance::{gen_complete, Variant, Weighting};
use stpack::kernel::{raw_vdstp, LocalNodeView};
use stpack::oracle::{exact_pack, local_update_oracle, OracleLimits};
use stpack::solver::{run, SolverConfig};
use stpack::state::{init_messages, normalize, StateSpace};

fn main() -> stpack::Result<()> {
    let inst = gen_complete(7, 2, 2, Weighting::Uniform, 4)?.with_depth(Some(6));
    let (opt, sol) = exact_pack(&inst, &OracleLimits::default())?;
    let ms = run(&inst, &SolverConfig { gamma0: 1e-3, ..SolverConfig::default() })?;
    println!("exact optimum {opt} ({} edges), Max-Sum {}", sol.map_or(0, |s| s.num_edges()), ms.report.best_ms_energy);

    let table = init_messages(&inst, StateSpace::new(2, 2), 9, 1e-3);
    let view = LocalNodeView::from_table(&inst, &table, 0, false);
    let mut worst: f64 = 0.0;
    for (j, mut fast) in raw_vdstp(&view).into_iter().enumerate() {
        let mut slow = view
            .space
            .states()
            .map(|s| local_update_oracle(&view, Variant::VertexDisjoint, j, s, u64::MAX))
            .collect::<stpack::Result<Vec<f64>>>()?;
        normalize(&mut fast)?;
        normalize(&mut slow)?;
        for (a, b) in fast.iter().zip(&slow) {
            if a.is_finite() || b.is_finite() {
                worst = worst.max((a - b).abs());
            }
        }
    }
    println!("node 1: largest kernel/oracle difference {worst:.2e}");
    Ok(())
}
