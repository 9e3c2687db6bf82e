//! Verify a design, then trace build cost against allowed shed.

use sndp::benders::SolveOptions;
use sndp::generator::{generate_instance, Family, GeneratorSpec};
use sndp::instance::{tri3b, Design};
use sndp::report::{check_tradeoff_monotone, sweep_tradeoff, verify_design};

fn main() -> sndp::Result<()> {
    let rep = verify_design(&tri3b(), &Design::full(3))?;
    println!("tri3b full design: {}", rep.summary(&tri3b()));

    let inst = generate_instance(&GeneratorSpec::new(Family::Grid, 9, 2))?;
    let points = sweep_tradeoff(
        &inst,
        &[0.0, 0.01, 0.05, 0.2, 1.0],
        &[1.0, 2.0],
        &SolveOptions::default(),
    );
    for p in &points {
        match p.build_cost {
            Some(c) => println!("budget {} eps {:4}: cost {c}", p.budget, p.eps),
            None => println!("budget {} eps {:4}: no design", p.budget, p.eps),
        }
    }
    println!("monotone: {:?}", check_tradeoff_monotone(&points));
    Ok(())
}
