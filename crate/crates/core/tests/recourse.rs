mod common;

use common::{attack_from_mask, design_from_mask, gale_shed, instances};
use proptest::prelude::*;
use sndp::instance::{Design, Instance};
use sndp::subproblem::{evaluate_cut, make_cut, solve_psp};

fn scaled(inst: &Instance, supply: f64, capacity: f64) -> Instance {
    let mut out = inst.clone();
    for n in &mut out.nodes {
        n.supply *= supply;
    }
    for e in &mut out.edges {
        e.capacity *= capacity;
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn shed_matches_cut_enumeration(inst in instances(6, 8, 2), xm: u64, dm: u64) {
        let x = design_from_mask(&inst, xm);
        let d = attack_from_mask(&inst, dm).restricted_to(&x);
        let res = solve_psp(&inst, &x, &d).unwrap();
        let brute = gale_shed(&inst, &x, &d);
        prop_assert!((res.gamma - brute).abs() < 1e-7, "{} vs {}", res.gamma, brute);
        prop_assert!((0.0..=1.0).contains(&res.gamma));
    }

    #[test]
    fn recourse_strong_duality(inst in instances(6, 8, 2), xm: u64, dm: u64) {
        let x = design_from_mask(&inst, xm);
        let d = attack_from_mask(&inst, dm).restricted_to(&x);
        let res = solve_psp(&inst, &x, &d).unwrap();
        prop_assert!((res.dual_objective(&inst) - res.gamma).abs() < 1e-7);
        prop_assert!(res.balance_residual(&inst) < 1e-7);
        prop_assert!(res.alpha.iter().all(|a| a.is_finite()));
        prop_assert!(res.beta.iter().flatten().all(|&b| b <= 1e-12));
    }

    #[test]
    fn cuts_never_overestimate(inst in instances(6, 8, 2), xm: u64, dm: u64, others in prop::collection::vec(any::<u64>(), 10)) {
        let x = design_from_mask(&inst, xm);
        let d = attack_from_mask(&inst, dm).restricted_to(&x);
        let res = solve_psp(&inst, &x, &d).unwrap();
        let cut = make_cut(&res, &inst);
        prop_assert!((evaluate_cut(&cut, &x, 0.0) - res.gamma).abs() < 1e-7);
        for m in others {
            let y = design_from_mask(&inst, m);
            let truth = solve_psp(&inst, &y, &d.restricted_to(&y)).unwrap().gamma;
            prop_assert!(evaluate_cut(&cut, &y, 0.0) <= truth + 1e-7);
        }
    }

    #[test]
    fn shed_is_monotone(inst in instances(6, 8, 2), xm: u64, ym: u64, dm: u64, em: u64) {
        let x = design_from_mask(&inst, xm);
        let mut bigger = x.clone();
        for e in design_from_mask(&inst, ym).edges() {
            bigger.insert(e);
        }
        let d = attack_from_mask(&inst, dm);
        let mut wider = d.clone();
        for e in attack_from_mask(&inst, em).edges() {
            wider.insert(e);
        }
        let g = |x: &Design, d: &sndp::instance::Attack| {
            solve_psp(&inst, x, &d.restricted_to(x)).unwrap().gamma
        };
        prop_assert!(g(&x, &d) <= g(&x, &wider) + 1e-9);
        prop_assert!(g(&bigger, &d) <= g(&x, &d) + 1e-9);
    }

    #[test]
    fn shed_is_scale_free(inst in instances(6, 8, 2), xm: u64, dm: u64, k in 1u32..=7) {
        let x = design_from_mask(&inst, xm);
        let d = attack_from_mask(&inst, dm).restricted_to(&x);
        let base = solve_psp(&inst, &x, &d).unwrap().gamma;
        let k = f64::from(k);
        let both = solve_psp(&scaled(&inst, k, k), &x, &d).unwrap().gamma;
        prop_assert!((both - base).abs() < 1e-7);
        let roomier = solve_psp(&scaled(&inst, 1.0, k), &x, &d).unwrap().gamma;
        prop_assert!(roomier <= base + 1e-9);
    }
}

#[test]
fn no_demand_means_no_shed() {
    let inst = sndp::instance::InstanceBuilder::new()
        .node(1, 0.0)
        .node(2, 0.0)
        .candidate(1, 1, 2, 3.0, 1.0)
        .build()
        .unwrap();
    let x = Design::full(1);
    let res = solve_psp(&inst, &x, &sndp::instance::Attack::full(1)).unwrap();
    assert_eq!(res.gamma, 0.0);
}
