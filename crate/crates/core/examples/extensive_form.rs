//! The monolithic extensive form and its size.

use sndp::benders::SolveOptions;
use sndp::ef::{build_ef, solve_ef};
use sndp::generator::{generate_instance, Family, GeneratorSpec};
use sndp::scenarios::enumerate_scenarios;

fn main() -> sndp::Result<()> {
    let inst = generate_instance(&GeneratorSpec::new(Family::Random, 6, 11))?;
    let scenarios = enumerate_scenarios(&inst, 2000)?;
    let model = build_ef(&inst, &scenarios);
    println!(
        "{} blocks, {} variables, {} rows",
        model.blocks.len(),
        model.milp.lp.num_vars(),
        model.milp.lp.num_rows()
    );
    let sol = solve_ef(&inst, &SolveOptions::default())?;
    println!(
        "objective {} build {} shed {} design {:?}",
        sol.objective,
        sol.build_cost,
        sol.theta,
        sol.design.labels(&inst)
    );
    Ok(())
}
