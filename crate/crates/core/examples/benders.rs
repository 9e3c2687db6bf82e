//! Benders decomposition with its iteration log.

use sndp::benders::{solve_bd, SolveOptions};
use sndp::generator::{generate_instance, Family, GeneratorSpec};

fn main() -> sndp::Result<()> {
    let spec = GeneratorSpec::new(Family::Grid, 9, 3);
    let inst = generate_instance(&spec)?;
    let sol = solve_bd(&inst, &SolveOptions::default())?;
    for rec in &sol.log {
        println!(
            "t={:2} master {:8.3} theta {:.3} cuts +{}",
            rec.t, rec.rmp_objective, rec.theta, rec.cuts_added
        );
    }
    println!(
        "objective {} build {} shed {} using {} of the scenarios",
        sol.objective, sol.build_cost, sol.theta, sol.scenarios_evaluated
    );
    Ok(())
}
