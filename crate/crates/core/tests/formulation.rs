mod common;

use mgplan::check::{check_plan, evaluate_constraints, Tolerances};
use mgplan::cone::ConeApproxConfig;
use mgplan::formulation::build_deterministic;
use mgplan::scenario::Scenario;
use mgplan::solver::{extract, solve, SolveOptions, SolveStatus};

#[test]
fn deterministic_solutions_pass_exact_checks() {
    let cone = ConeApproxConfig::default();
    for name in common::SMALL.iter().chain(&["growth"]) {
        let case = common::fixture(name);
        let model = build_deterministic(&case, &cone).unwrap();
        let sol = solve(&model.instance, &SolveOptions::default()).unwrap();
        assert_eq!(sol.status, SolveStatus::Optimal, "{name}");
        let ex = extract(&model, &sol, &case).unwrap();
        let report = check_plan(&case, &ex.plan, &ex.states[0], &Tolerances::default());
        let hard: Vec<_> = report.hard().collect();
        assert!(hard.is_empty(), "{name}: {hard:?}");
        let table = evaluate_constraints(&case, &ex.plan, &ex.states[0], &Scenario::deterministic(&case));
        println!(
            "{name}: obj {:.2} balance {:.2e}/{:.2e} soc {:.3e} thermal {:.3e} loss {:.2e}",
            sol.objective,
            table.max("balance_p"),
            table.max("balance_q"),
            table.max("soc"),
            table.max("thermal"),
            table.max("loss_p"),
        );
    }
}
