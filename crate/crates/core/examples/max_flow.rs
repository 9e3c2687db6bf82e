//! Max flow on the augmented network of tri3b, before and after an attack.

use sndp::instance::{tri3b, Attack, Design, EdgeId};
use sndp::maxflow::{build_augmented, max_flow, min_cut_bruteforce};

fn main() -> sndp::Result<()> {
    let inst = tri3b();
    let design = Design::full(3);
    for attack in [Attack::empty(3), Attack::from_edges(3, [EdgeId(0)])] {
        let g = build_augmented(&inst, &design, &attack)?;
        let mf = max_flow(&g);
        println!(
            "attack {:?}: flow {} of {}, cut {} (brute force {}), sink side {:?}",
            attack.labels(&inst),
            mf.value,
            inst.total_demand(),
            mf.cut.capacity,
            min_cut_bruteforce(&g)?,
            mf.cut.sink_side().collect::<Vec<_>>()
        );
    }
    Ok(())
}
