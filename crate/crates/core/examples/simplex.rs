//! A small production LP with its duals.

use sndp::lp::{dual_objective, solve_lp, LpModel, Relation, Sense};

fn main() -> sndp::Result<()> {
    let mut m = LpModel::new(Sense::Maximize);
    let x = m.add_var("x", 0.0, f64::INFINITY, 3.0);
    let y = m.add_var("y", 0.0, f64::INFINITY, 5.0);
    let a = m.add_row("plant1", vec![(x, 1.0)], Relation::Le, 4.0);
    let b = m.add_row("plant2", vec![(y, 2.0)], Relation::Le, 12.0);
    let c = m.add_row("plant3", vec![(x, 3.0), (y, 2.0)], Relation::Le, 18.0);
    let sol = solve_lp(&m)?;
    println!("status {:?}, objective {}", sol.status, sol.objective);
    println!("x = {}, y = {}", sol.value(x), sol.value(y));
    for (name, r) in [("plant1", a), ("plant2", b), ("plant3", c)] {
        println!("dual {name} = {}", sol.dual(r));
    }
    println!("dual objective {}", dual_objective(&m, &sol));
    Ok(())
}
