mod common;

use common::{fixture, one_node};
use mgplan::plan::InvestmentPlan;
use mgplan::robust::{
    adversarial_generation, adversary_sweep, corrective, corrective_generation, robust_plan, solve_main,
    AdversaryKind, RobustOptions, TargetMask, UncertaintyBox,
};
use mgplan::scenario::Scenario;

fn single_generator_plan(case: &mgplan::case::NetworkCase) -> InvestmentPlan {
    let mut plan = InvestmentPlan::empty_for(case);
    plan.set_generator(0, 0);
    plan
}

#[test]
fn generation_adversary_pushes_load_to_upper_bound() {
    let case = one_node(2.0, 0.0, 2.0);
    let plan = single_generator_plan(&case);
    let ubox = UncertaintyBox::scaled(&case, 0.75, 1.25).unwrap();
    let opts = RobustOptions::default();
    let out = adversarial_generation(&case, &plan, &ubox, &TargetMask::Generation(vec![(0, 0)]), &opts).unwrap();
    assert!((out.objective - 0.5).abs() < 1e-6, "{}", out.objective);
    assert!((out.scenario.p_load[0][0] - 2.5).abs() < 1e-12);
    assert_eq!(out.violated, TargetMask::Generation(vec![(0, 0)]));
    let corr = corrective_generation(&case, &plan, &out.scenario, &opts).unwrap();
    assert!(corr.residual <= out.objective + 1e-9);
}

#[test]
fn adequate_capacity_leaves_nothing_to_shed() {
    let case = one_node(2.0, 0.0, 3.0);
    let plan = single_generator_plan(&case);
    let ubox = UncertaintyBox::scaled(&case, 0.75, 1.25).unwrap();
    let opts = RobustOptions::default();
    let out = adversarial_generation(&case, &plan, &ubox, &TargetMask::Generation(vec![(0, 0)]), &opts).unwrap();
    assert!(out.objective.abs() < 1e-6);
    let sweep = adversary_sweep(&case, &plan, &ubox, &opts).unwrap();
    assert!(sweep.problematic.is_empty());
}

#[test]
fn point_box_reproduces_the_deterministic_solve() {
    let case = fixture("pair");
    let opts = RobustOptions::default();
    let det = solve_main(&case, &[Scenario::deterministic(&case)], &opts).unwrap();
    let res = robust_plan(&case, &UncertaintyBox::point(&case), &opts).unwrap();
    assert_eq!(res.iterations(), 1);
    assert_eq!(res.plan, det.plan);
    assert_eq!(res.objective, det.objective());
}

#[test]
fn robust_plan_survives_its_own_adversaries() {
    let case = fixture("pair");
    let opts = RobustOptions::default();
    let ubox = UncertaintyBox::scaled(&case, 0.5, 1.5).unwrap();
    let det = solve_main(&case, &[Scenario::deterministic(&case)], &opts).unwrap();
    let det_sweep = adversary_sweep(&case, &det.plan, &ubox, &opts).unwrap();
    assert!(!det_sweep.problematic.is_empty(), "deterministic plan should be exposed");
    for f in &det_sweep.problematic {
        assert!(ubox.is_vertex(&f.scenario, 1e-9));
    }

    let res = robust_plan(&case, &ubox, &opts).unwrap();
    println!("iterations {} objective {} vs {}", res.iterations(), res.objective, det.objective());
    for a in &res.audit {
        println!("{:?}", (a.iteration, a.main_objective, a.scenarios_in_set, a.added.len()));
    }
    assert!(res.objective > det.objective());
    for w in res.audit.windows(2) {
        assert!(w[1].main_objective >= w[0].main_objective);
    }
    let sweep = adversary_sweep(&case, &res.plan, &ubox, &opts).unwrap();
    assert!(sweep.problematic.is_empty());
    for f in &det_sweep.problematic {
        let periods = f.mask.periods();
        let c = corrective(&case, &res.plan, &f.scenario, f.kind, &periods, &opts).unwrap();
        assert!(c.residual <= f.kind.threshold(&case, opts.tolerance), "{:?} {}", f.kind, c.residual);
    }
    let _ = AdversaryKind::Thermal;
}

#[test]
fn robust_loop_converges_on_every_fixture() {
    let opts = RobustOptions::default();
    for name in common::SMALL.iter().chain(["growth"].iter()) {
        let case = fixture(name);
        let ubox = UncertaintyBox::scaled(&case, 0.5, 1.5).unwrap();
        let t = std::time::Instant::now();
        let res = robust_plan(&case, &ubox, &opts).unwrap();
        println!(
            "{name}: {} iterations, objective {:.2}, {} scenarios, {:.2}s",
            res.iterations(),
            res.objective,
            res.scenarios.len(),
            t.elapsed().as_secs_f64()
        );
        for w in res.audit.windows(2) {
            assert!(w[1].main_objective >= w[0].main_objective, "{name}");
        }
        assert!(adversary_sweep(&case, &res.plan, &ubox, &opts).unwrap().problematic.is_empty(), "{name}");
    }
}
