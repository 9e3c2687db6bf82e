//! Recourse LP, its dual and the Benders cut it yields.

use sndp::instance::{tri3b, Attack, Design, EdgeId};
use sndp::subproblem::{evaluate_cut, make_cut, solve_psp};

fn main() -> sndp::Result<()> {
    let inst = tri3b();
    let design = Design::full(3);
    let attack = Attack::from_edges(3, [EdgeId(0)]);
    let res = solve_psp(&inst, &design, &attack)?;
    println!("shed {} (dual objective {})", res.gamma, res.dual_objective(&inst));
    println!("alpha {:?}", res.alpha);
    println!("beta {:?}", res.beta);
    let cut = make_cut(&res, &inst);
    println!("cut constant {} coefficients {:?}", cut.constant, cut.coefficients);
    for mask in 0..8usize {
        let x = Design::from_bits((0..3).map(|i| mask & (1 << i) != 0).collect());
        let truth = solve_psp(&inst, &x, &attack.restricted_to(&x))?.gamma;
        println!(
            "design {:?}: cut {:.3} <= shed {:.3}",
            x.labels(&inst),
            evaluate_cut(&cut, &x, 0.0),
            truth
        );
    }
    Ok(())
}
