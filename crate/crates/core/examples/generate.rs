//! Generated instances of each family, written as JSON.

use sndp::generator::{generate_instance, replicate, Family, GeneratorSpec};
use sndp::instance::{serialize_instance, tri3a};
use sndp::scenarios::count_scenarios;

fn main() -> sndp::Result<()> {
    for family in [Family::Grid, Family::Random, Family::Replicated] {
        let inst = generate_instance(&GeneratorSpec::new(family, 12, 7))?;
        println!(
            "{family:?}: {} nodes, {} edges, demand {}, {} scenarios",
            inst.node_count(),
            inst.edge_count(),
            inst.total_demand(),
            count_scenarios(&inst, 1_000_000)
        );
    }
    let doubled = replicate(&tri3a(), 2)?;
    println!("{}", serialize_instance(&doubled));
    Ok(())
}
