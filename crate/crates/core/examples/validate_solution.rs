//! Solution files: write, read back, validate, and catch a broken tree.

use stpack::instance::{gen_complete, Weighting};
use stpack::solver::{energy, parse_solution, run, serialize_solution, validate, SolverConfig};

fn main() -> stpack::Result<()> {
    let inst = gen_complete(30, 2, 4, Weighting::Uniform, 6)?.with_depth(Some(3));
    let out = run(&inst, &SolverConfig::default())?;
    let sol = out.best.expect("a feasible packing");
    let text = serialize_solution(&sol, &inst);
    let (back, recorded) = parse_solution(&text, &inst)?;
    println!("recorded energy {:?}, recomputed {}", recorded, energy(&back, &inst));
    println!("feasible: {}", validate(&back, &inst).is_feasible());

    let mut broken = back.clone();
    broken.trees[0].pop();
    for v in validate(&broken, &inst).violations {
        println!("violation: {v}");
    }
    Ok(())
}
