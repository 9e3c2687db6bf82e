//! General, strong and brute-force separation on a generated network.

use sndp::generator::{generate_instance, Family, GeneratorSpec};
use sndp::instance::Design;
use sndp::ndp::{solve_ndp_bruteforce, solve_ndp_general, solve_ndp_strong};

fn main() -> sndp::Result<()> {
    let spec = GeneratorSpec {
        budget: 2.0,
        ..GeneratorSpec::new(Family::Random, 7, 5)
    };
    let inst = generate_instance(&spec)?;
    let design = Design::full(inst.edge_count());
    let general = solve_ndp_general(&inst, &design)?;
    let brute = solve_ndp_bruteforce(&inst, &design)?;
    let strong = solve_ndp_strong(&inst, &design, inst.total_demand())?;
    let show = |a: &Option<sndp::instance::Attack>| a.as_ref().map(|a| a.labels(&inst));
    println!("general:     shed {:.4} attack {:?}", general.severity, show(&general.attack));
    println!("brute force: shed {:.4} attack {:?}", brute.severity, show(&brute.attack));
    println!(
        "strong:      residual cut {} of demand {}, attack {:?}",
        strong.severity,
        inst.total_demand(),
        show(&strong.attack)
    );
    Ok(())
}
