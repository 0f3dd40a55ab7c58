mod common;

use std::time::Instant;

use common::{fixture, one_node, SMALL};
use mgplan::case::NetworkCase;
use mgplan::cone::ConeApproxConfig;
use mgplan::oracle::{enumerate_designs, enumerate_vertex_adversary};
use mgplan::robust::{adversarial_scenario, solve_main, AdversaryKind, RobustOptions, UncertaintyBox};
use mgplan::scenario::Scenario;
use mgplan::solver::SolveOptions;

fn engine_optimum(case: &NetworkCase) -> f64 {
    solve_main(case, &[Scenario::deterministic(case)], &RobustOptions::default()).unwrap().objective()
}

#[test]
fn one_node_installs_a_generator_only_for_positive_load() {
    let cfg = ConeApproxConfig::default();
    let opts = SolveOptions::default();
    let best = enumerate_designs(&one_node(1.0, 0.2, 3.0), &cfg, &opts).unwrap();
    assert_eq!(best.plan.sigma[0][0], 1);
    assert_eq!(best.candidates, 1);
}

#[test]
fn design_enumeration_matches_the_planning_milp() {
    let cfg = ConeApproxConfig::default();
    let opts = SolveOptions::default();
    let slack = (1.0 + cfg.accuracy_eps).powi(2) - 1.0;
    let t = Instant::now();
    for name in SMALL {
        let case = fixture(name);
        let oracle = enumerate_designs(&case, &cfg, &opts).unwrap();
        let engine = engine_optimum(&case);
        let rel = (engine - oracle.objective).abs() / oracle.objective.abs().max(1.0);
        println!("{name}: engine {engine:.4} oracle {:.4} ({} of {} designs scored)", oracle.objective, oracle.evaluated, oracle.candidates);
        assert!(rel <= opts.mip_gap + slack, "{name}: {engine} vs {}", oracle.objective);
    }
    println!("elapsed {:.2}s", t.elapsed().as_secs_f64());
}

#[test]
fn symmetric_triangle_cost_is_invariant_under_relabelling() {
    let cfg = ConeApproxConfig::default();
    let opts = SolveOptions::default();
    let case = fixture("triangle");
    let base = enumerate_designs(&case, &cfg, &opts).unwrap().objective;
    let mut doc = case.to_document();
    doc.nodes.rotate_left(1);
    doc.distances = None;
    let rotated = NetworkCase::from_document(doc).unwrap();
    let other = enumerate_designs(&rotated, &cfg, &opts).unwrap().objective;
    assert!((base - other).abs() <= 1e-6 * base, "{base} vs {other}");
}

#[test]
fn design_guard_rejects_multi_year_cases() {
    let err = enumerate_designs(&fixture("growth"), &ConeApproxConfig::default(), &SolveOptions::default());
    assert!(err.is_err());
}

#[test]
fn collapsed_box_has_one_vertex_the_deterministic_point() {
    let case = fixture("pair");
    let plan = solve_main(&case, &[Scenario::deterministic(&case)], &RobustOptions::default()).unwrap().plan;
    let ubox = UncertaintyBox::point(&case);
    let best = enumerate_vertex_adversary(
        &case,
        &plan,
        &ubox,
        AdversaryKind::Generation,
        &[0, 1],
        &ConeApproxConfig::default(),
        &SolveOptions::default(),
    )
    .unwrap();
    assert_eq!(best.vertices, 1);
    assert_eq!(best.scenario.fingerprint, Scenario::deterministic(&case).fingerprint);
    assert!(best.objective.abs() < 1e-6);
}

#[test]
fn single_coordinate_box_has_two_vertices() {
    let case = one_node(2.0, 0.0, 2.0);
    let mut plan = mgplan::plan::InvestmentPlan::empty_for(&case);
    plan.set_generator(0, 0);
    let ubox = UncertaintyBox::scaled(&case, 0.75, 1.25).unwrap();
    let best = enumerate_vertex_adversary(
        &case,
        &plan,
        &ubox,
        AdversaryKind::Generation,
        &[0],
        &ConeApproxConfig::default(),
        &SolveOptions::default(),
    )
    .unwrap();
    assert_eq!(best.vertices, 2);
    assert!((best.objective - 0.5).abs() < 1e-9);
}

#[test]
fn all_vertices_of_a_two_period_pair_agree_with_the_adversary() {
    let case = fixture("pair");
    let opts = RobustOptions::default();
    let plan = solve_main(&case, &[Scenario::deterministic(&case)], &opts).unwrap().plan;
    let ubox = UncertaintyBox::scaled(&case, 0.5, 1.5).unwrap();
    for kind in [AdversaryKind::Generation, AdversaryKind::Thermal] {
        let oracle = enumerate_vertex_adversary(&case, &plan, &ubox, kind, &[0, 1], &opts.cone, &opts.solve).unwrap();
        assert_eq!(oracle.vertices, 256);
        let engine = adversarial_scenario(&case, &plan, &ubox, kind, &[0, 1], &opts).unwrap();
        println!("{kind:?}: engine {} oracle {}", engine.objective, oracle.objective);
        assert!(common::same_residual(engine.objective, oracle.objective), "{kind:?}");
    }
}

/// Pair fixture fed from a single generator at node 0 over one line, with
/// node 1's evening load close to the line rating.
fn overloaded_pair() -> (NetworkCase, mgplan::plan::InvestmentPlan) {
    let case = fixture("pair");
    let mut doc = case.to_document();
    doc.nodes[0].p_load = vec![20.0, 10.0];
    doc.nodes[0].q_load = vec![6.0, 3.0];
    doc.nodes[1].p_load = vec![100.0, 220.0];
    doc.nodes[1].q_load = vec![30.0, 66.0];
    let case = NetworkCase::from_document(doc).unwrap();
    let mut plan = mgplan::plan::InvestmentPlan::empty_for(&case);
    plan.set_generator(0, 0);
    plan.set_lines(0, 1, 0, 1);
    (case, plan)
}

#[test]
fn thermal_adversary_matches_enumeration_on_an_overloaded_line() {
    let (case, plan) = overloaded_pair();
    let opts = RobustOptions::default();
    let ubox = UncertaintyBox::scaled(&case, 0.9, 1.2).unwrap();
    for periods in [vec![0], vec![1], vec![0, 1]] {
        let oracle =
            enumerate_vertex_adversary(&case, &plan, &ubox, AdversaryKind::Thermal, &periods, &opts.cone, &opts.solve).unwrap();
        let engine = adversarial_scenario(&case, &plan, &ubox, AdversaryKind::Thermal, &periods, &opts).unwrap();
        println!("{periods:?}: engine {} oracle {}", engine.objective, oracle.objective);
        assert!(common::same_residual(engine.objective, oracle.objective), "{periods:?}");
        assert!(ubox.is_vertex(&engine.scenario, 1e-6));
    }
    let worst = adversarial_scenario(&case, &plan, &ubox, AdversaryKind::Thermal, &[1], &opts).unwrap();
    assert!(worst.objective.is_finite() && worst.objective > 0.0);
    assert!(matches!(&worst.violated, mgplan::robust::TargetMask::Thermal(v) if v.contains(&(0, 1, 1))));
}
