//! The two triangle fixtures solved by every method.

use sndp::benders::{solve_bd, solve_dsg, SolveOptions};
use sndp::ef::solve_ef;
use sndp::instance::{tri3a, tri3b};

fn main() -> sndp::Result<()> {
    let opts = SolveOptions::default();
    for (name, inst) in [
        ("tri3a", tri3a()),
        ("tri3a, budget 0", tri3a().with_budget(0.0)),
        ("tri3b", tri3b()),
    ] {
        for sol in [
            solve_ef(&inst, &opts)?,
            solve_bd(&inst, &opts)?,
            solve_dsg(&inst, &opts)?,
        ] {
            println!(
                "{name:16} {:4} objective {:6.2} build {:4.1} shed {:.2} design {:?}",
                sol.method.name(),
                sol.objective,
                sol.build_cost,
                sol.theta,
                sol.design.labels(&inst)
            );
        }
    }
    Ok(())
}
