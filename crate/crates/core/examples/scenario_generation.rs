//! Delayed scenario generation on a replicated network too large to enumerate
//! comfortably.

use sndp::benders::{solve_dsg, OracleChoice, SolveOptions};
use sndp::generator::{generate_instance, Family, GeneratorSpec};
use sndp::scenarios::{count_scenarios, DEFAULT_SCENARIO_CAP};

fn main() -> sndp::Result<()> {
    let spec = GeneratorSpec {
        extra_edges: 15,
        factor: 4,
        budget: 2.0,
        ..GeneratorSpec::new(Family::Replicated, 20, 2)
    };
    let inst = generate_instance(&spec)?;
    let total = count_scenarios(&inst, DEFAULT_SCENARIO_CAP);
    for oracle in [OracleChoice::Strong, OracleChoice::General] {
        let opts = SolveOptions {
            oracle,
            ..SolveOptions::default()
        };
        let sol = solve_dsg(&inst, &opts)?;
        println!(
            "{oracle:?}: objective {} after {} rounds, {} of {total} scenarios, {:.2}s",
            sol.objective, sol.iterations, sol.scenarios_evaluated, sol.times.total
        );
    }
    Ok(())
}
