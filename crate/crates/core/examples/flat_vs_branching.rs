//! A chain of terminals along the top of a ladder: the flat formalism packs
//! it with a depth bound the branching one cannot satisfy.

use stpack::instance::{Communication, Formalism, Instance};
use stpack::oracle::{exact_pack, OracleLimits};
use stpack::solver::{energy, run, Energy, SolverConfig};

fn ladder(len: usize, cols: &[usize]) -> stpack::Result<Instance> {
    let mut edges = Vec::new();
    for i in 0..len {
        if i + 1 < len {
            edges.push((i, i + 1, 1.0));
            edges.push((len + i, len + i + 1, 1.2));
        }
        edges.push((i, len + i, 1.5));
    }
    let terminals: Vec<usize> = cols.iter().map(|c| c - 1).collect();
    let root = terminals[0];
    Instance::new(2 * len, edges, vec![Communication { terminals, root }])
}

fn main() -> stpack::Result<()> {
    let base = ladder(8, &[1, 3, 6, 8])?;
    let (opt, _) = exact_pack(&base, &OracleLimits::default())?;
    println!("optimum {opt}");
    let cfg = SolverConfig { gamma0: 1e-3, max_iters: 2000, ..SolverConfig::default() };
    for (f, d) in [(Formalism::Flat, 3), (Formalism::Branching, 3), (Formalism::Branching, 7)] {
        let inst = base.clone().with_formalism(f).with_depth(Some(d));
        let e = match run(&inst, &cfg) {
            Ok(out) => out.best.map_or(Energy::Infeasible, |s| energy(&s, &inst)),
            Err(_) => Energy::Infeasible,
        };
        println!("{:>9} D={d}: {e}", f.name());
    }
    Ok(())
}
