//! Seeded generators, the text format and the automatic depth bound.

use stpack::instance::{
    choose_depth, gen_complete, gen_grid, gen_regular, parse_instance, serialize_instance, GridTerminals, GridWeights,
    LayerType, Weighting,
};

fn main() -> stpack::Result<()> {
    let complete = gen_complete(40, 3, 4, Weighting::Correlated, 11)?;
    let regular = gen_regular(30, 4, 2, 3, 11)?;
    let grid = gen_grid(5, 5, 2, LayerType::MultiAligned, 2, &GridTerminals::Random { per_comm: 3 }, GridWeights::Unit, 11)?;

    for (name, inst) in [("complete", &complete), ("regular", &regular), ("grid", &grid)] {
        let depth = choose_depth(inst)?;
        println!(
            "{name:>8}: N={} E={} M={} terminals={} depth per comm {:?}",
            inst.num_nodes(),
            inst.num_edges(),
            inst.num_comms(),
            inst.total_terminals(),
            depth.per_comm
        );
        let back = parse_instance(&serialize_instance(inst))?;
        assert_eq!(&back, inst);
    }

    // Same parameters, same seed: same instance.
    assert_eq!(gen_regular(30, 4, 2, 3, 11)?, regular);
    println!("\nfirst lines of the regular instance file:");
    for line in serialize_instance(&regular).lines().take(8) {
        println!("  {line}");
    }
    Ok(())
}
