mod common;

use common::{design_bruteforce, instances, worst_shed_bruteforce};
use proptest::prelude::*;
use sndp::benders::{solve_bd, solve_dsg, DesignSolution, OracleChoice, SolveOptions};
use sndp::ef::solve_ef;
use sndp::error::Result;
use sndp::instance::{tri3a, tri3b, Instance};
use sndp::report::verify_design;

fn all_methods(inst: &Instance) -> Vec<(String, Result<DesignSolution>)> {
    let opts = SolveOptions::default();
    let mut out = vec![
        ("ef".to_string(), solve_ef(inst, &opts)),
        ("bd".to_string(), solve_bd(inst, &opts)),
    ];
    for oracle in [OracleChoice::General, OracleChoice::Strong, OracleChoice::Auto] {
        let o = SolveOptions {
            oracle,
            ..SolveOptions::default()
        };
        out.push((format!("dsg/{oracle:?}"), solve_dsg(inst, &o)));
    }
    out
}

fn check_against_bruteforce(inst: &Instance) -> std::result::Result<(), TestCaseError> {
    let brute = design_bruteforce(inst, inst.shortage_cap());
    for (name, outcome) in all_methods(inst) {
        match (&brute, outcome) {
            (None, Err(e)) => prop_assert!(e.to_string().contains("no design"), "{name}: {e}"),
            (None, Ok(sol)) => prop_assert!(false, "{name} found {:?} where none exists", sol.design),
            (Some(_), Err(e)) => prop_assert!(false, "{name} failed: {e}"),
            (Some(b), Ok(sol)) => {
                prop_assert!(
                    (sol.objective - b.objective).abs() < 1e-6,
                    "{name}: {} vs brute force {}",
                    sol.objective,
                    b.objective
                );
                let (worst, _) = worst_shed_bruteforce(inst, &sol.design);
                prop_assert!((sol.theta - worst).abs() < 1e-6, "{name}: theta {} vs {}", sol.theta, worst);
                prop_assert!((sol.build_cost - inst.build_cost(&sol.design)).abs() < 1e-9);
                prop_assert!(sol.design.respects_existing(inst));
            }
        }
    }
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(60))]

    #[test]
    fn methods_match_bruteforce_with_default_penalty(inst in instances(5, 7, 2)) {
        check_against_bruteforce(&inst)?;
    }

    #[test]
    fn methods_match_bruteforce_with_small_penalty(inst in instances(5, 7, 2), p in 1u32..=20) {
        check_against_bruteforce(&inst.with_penalty(Some(f64::from(p))))?;
    }

    #[test]
    fn methods_match_bruteforce_with_shed_cap(inst in instances(5, 7, 2), eps in prop::sample::select(vec![0.1, 0.25, 0.5, 0.9])) {
        check_against_bruteforce(&inst.with_allowed_shed(eps))?;
    }
}

#[test]
fn triangle_fixtures() {
    for (_, sol) in all_methods(&tri3a()) {
        let sol = sol.unwrap();
        assert!((sol.objective - 5.0).abs() < 1e-6);
        assert!(verify_design(&tri3a(), &sol.design).unwrap().pass);
    }
    for (_, sol) in all_methods(&tri3a().with_budget(0.0)) {
        assert!((sol.unwrap().objective - 2.0).abs() < 1e-6);
    }
    for (_, sol) in all_methods(&tri3b()) {
        let sol = sol.unwrap();
        assert!((sol.objective - 45.0).abs() < 1e-6);
        assert!((sol.theta - 0.4).abs() < 1e-6);
    }
    assert!((design_bruteforce(&tri3b(), None).unwrap().objective - 45.0).abs() < 1e-9);
}

#[test]
fn dsg_rounds_bounded_by_scenarios() {
    let sol = solve_dsg(&tri3a().with_budget(2.0), &SolveOptions::default()).unwrap();
    assert!(sol.iterations <= sol.scenarios_evaluated + 1);
    assert!(sol.log.iter().all(|r| r.t <= sol.iterations));
}
