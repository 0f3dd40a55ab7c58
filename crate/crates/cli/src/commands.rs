//! Subcommand bodies. Each returns the exit status or a [`Failure`].

use std::fs::{self, File};
use std::io::BufReader;
use std::path::Path;
use std::time::Instant;

use mgplan::chance::{box_mass, chance_box as make_chance_box, coordinate_mass, verify_coverage, LoadDistribution};
use mgplan::check::{check_plan_against, evaluate_constraints, Tolerances};
use mgplan::robust::{
    corrective_generation, read_scenarios, robust_plan_from, solve_main, write_scenarios, RobustError, RobustOptions,
    UncertaintyBox,
};
use mgplan::solver::{Backend, SolveError, SolveStatus};
use mgplan::{load_case, ConeApproxConfig, InvestmentPlan, NetworkCase, Scenario, SolveOptions};

use crate::artifacts::{
    write_json, BoxDocument, BoxSource, Coverage, ModelSettings, PlanDocument, RobustDocument, RobustStatus,
    ScenarioEntry, Summary, BOX_SCHEMA, ROBUST_SCHEMA,
};
use crate::{exit, CommonArgs};

#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    pub fn input(message: impl Into<String>) -> Self {
        Failure { code: exit::INPUT, message: message.into() }
    }

    fn backend(message: impl Into<String>) -> Self {
        Failure { code: exit::BACKEND, message: message.into() }
    }

    fn io(path: &Path, e: std::io::Error) -> Self {
        Failure::input(format!("{}: {e}", path.display()))
    }
}

impl From<RobustError> for Failure {
    fn from(e: RobustError) -> Self {
        let message = e.to_string();
        let code = match &e {
            RobustError::Box(_) | RobustError::Formulation(_) | RobustError::SeedShape(_) => exit::INPUT,
            RobustError::Solve(SolveError::Unavailable(_) | SolveError::Options(_)) => exit::INPUT,
            RobustError::MainProblem(SolveStatus::Infeasible | SolveStatus::Unbounded) => exit::NONCONVERGENCE,
            RobustError::IterationCap { .. } | RobustError::NoProgress { .. } => exit::NONCONVERGENCE,
            _ => exit::BACKEND,
        };
        Failure { code, message }
    }
}

type Outcome = Result<u8, Failure>;

fn read_case(path: &Path) -> Result<NetworkCase, Failure> {
    let file = File::open(path).map_err(|e| Failure::io(path, e))?;
    load_case(BufReader::new(file)).map_err(|e| Failure::input(format!("{}: {e}", path.display())))
}

fn options(common: &CommonArgs) -> Result<RobustOptions, Failure> {
    let cone = ConeApproxConfig::new(common.btn_accuracy).map_err(|e| Failure::input(format!("--btn-accuracy: {e}")))?;
    let backend: Backend = common.backend.parse().map_err(|e: SolveError| Failure::input(format!("--backend: {e}")))?;
    let solve = SolveOptions { backend, mip_gap: common.mip_gap, time_limit: common.time_limit, ..SolveOptions::default() };
    solve.validate().map_err(|e| Failure::input(e.to_string()))?;
    Ok(RobustOptions { cone, solve, ..RobustOptions::default() })
}

fn out_dir(dir: &Path) -> Result<(), Failure> {
    fs::create_dir_all(dir).map_err(|e| Failure::io(dir, e))
}

fn write_doc<T: serde::Serialize>(dir: &Path, name: &str, value: &T) -> Result<(), Failure> {
    let path = dir.join(name);
    write_json(&path, value).map_err(|e| Failure::io(&path, e))
}

fn write_text(dir: &Path, name: &str, text: &str) -> Result<(), Failure> {
    let path = dir.join(name);
    fs::write(&path, text).map_err(|e| Failure::io(&path, e))
}

pub fn plan(case_path: &Path, common: &CommonArgs) -> Outcome {
    let case = read_case(case_path)?;
    let opts = options(common)?;
    out_dir(&common.out_dir)?;
    let started = Instant::now();
    let main = solve_main(&case, &[Scenario::deterministic(&case)], &opts)?;
    let settings = ModelSettings::new(common.btn_accuracy, &opts.solve);
    let objective = main.objective();
    let doc = PlanDocument::new(&case, settings, objective, main.money, main.plan, main.states[0].clone());
    write_doc(&common.out_dir, "plan.json", &doc)?;
    let summary = Summary {
        opex: doc.opex,
        capex: doc.capex,
        total: doc.objective,
        scenarios: 1,
        iterations: 1,
        seconds: started.elapsed().as_secs_f64(),
    };
    let text = summary.render("Deterministic plan");
    write_text(&common.out_dir, "summary.txt", &text)?;
    print!("{text}");
    Ok(exit::OK)
}

fn build_box(case: &NetworkCase, source: &BoxSource) -> Result<UncertaintyBox, Failure> {
    match *source {
        BoxSource::Scaled { load_lb, load_ub } => {
            UncertaintyBox::scaled(case, load_lb, load_ub).map_err(|e| Failure::input(e.to_string()))
        }
        BoxSource::Chance { epsilon } => {
            let dist = LoadDistribution::from_case(case).map_err(|e| Failure::input(e.to_string()))?;
            make_chance_box(&dist, epsilon).map_err(|e| Failure::input(e.to_string()))
        }
    }
}

pub fn robust(
    case_path: &Path,
    source: BoxSource,
    max_iterations: usize,
    tol: f64,
    restore: Option<&Path>,
    common: &CommonArgs,
) -> Outcome {
    let case = read_case(case_path)?;
    let mut opts = options(common)?;
    if !(tol > 0.0 && tol.is_finite()) {
        return Err(Failure::input("--tol must be positive"));
    }
    if max_iterations == 0 {
        return Err(Failure::input("--max-iterations must be at least 1"));
    }
    opts.tolerance = tol;
    opts.max_iterations = max_iterations;
    let ubox = build_box(&case, &source)?;
    let seed = match restore {
        None => vec![Scenario::deterministic(&case)],
        Some(path) => {
            let file = File::open(path).map_err(|e| Failure::io(path, e))?;
            let records =
                read_scenarios(BufReader::new(file)).map_err(|e| Failure::input(format!("{}: {e}", path.display())))?;
            if records.is_empty() {
                return Err(Failure::input(format!("{}: no scenarios", path.display())));
            }
            records.into_iter().map(|r| r.scenario).collect()
        }
    };
    out_dir(&common.out_dir)?;
    let settings = ModelSettings::new(common.btn_accuracy, &opts.solve);
    let mut doc = RobustDocument {
        schema: ROBUST_SCHEMA.to_string(),
        status: RobustStatus::Converged,
        settings: settings.clone(),
        tolerance: tol,
        max_iterations,
        source,
        uncertainty: ubox.clone(),
        objective: None,
        money: None,
        scenarios: Vec::new(),
        audit: Vec::new(),
    };
    let started = Instant::now();
    let result = match robust_plan_from(&case, &ubox, seed, &opts) {
        Ok(r) => r,
        Err(RobustError::IterationCap { audit }) => {
            doc.status = RobustStatus::IterationCap;
            doc.audit = audit;
            write_doc(&common.out_dir, "robust.json", &doc)?;
            return Err(Failure { code: exit::NONCONVERGENCE, message: format!("no robust plan within {max_iterations} iterations") });
        }
        Err(RobustError::NoProgress { residuals, audit }) => {
            doc.status = RobustStatus::NoProgress;
            doc.audit = audit;
            write_doc(&common.out_dir, "robust.json", &doc)?;
            return Err(Failure {
                code: exit::NONCONVERGENCE,
                message: format!("adversaries repeat known scenarios with residuals {residuals:?}"),
            });
        }
        Err(e) => return Err(e.into()),
    };

    let joined = |fp: &str| {
        result.audit.iter().find(|a| a.added.iter().any(|f| f == fp)).map_or(0, |a| a.iteration)
    };
    doc.scenarios = result
        .scenarios
        .iter()
        .map(|s| ScenarioEntry { fingerprint: s.fingerprint.clone(), origin: s.origin, iteration: joined(&s.fingerprint) })
        .collect();
    doc.objective = Some(result.objective);
    doc.money = Some(result.money.clone());
    doc.audit = result.audit.clone();
    write_doc(&common.out_dir, "robust.json", &doc)?;

    let records: Vec<(usize, &Scenario)> = result.scenarios.iter().map(|s| (joined(&s.fingerprint), s)).collect();
    let dump_path = common.out_dir.join("scenarios.jsonl");
    let file = File::create(&dump_path).map_err(|e| Failure::io(&dump_path, e))?;
    write_scenarios(std::io::BufWriter::new(file), &records).map_err(|e| Failure::input(format!("{}: {e}", dump_path.display())))?;

    let plan_doc =
        PlanDocument::new(&case, settings, result.objective, result.money.clone(), result.plan.clone(), result.states[0].clone());
    write_doc(&common.out_dir, "plan.json", &plan_doc)?;
    let summary = Summary {
        opex: plan_doc.opex,
        capex: plan_doc.capex,
        total: plan_doc.objective,
        scenarios: result.scenarios.len(),
        iterations: result.iterations(),
        seconds: started.elapsed().as_secs_f64(),
    };
    let text = summary.render("Robust plan");
    write_text(&common.out_dir, "summary.txt", &text)?;
    print!("{text}");
    Ok(exit::OK)
}

fn read_plan(path: &Path) -> Result<InvestmentPlan, Failure> {
    let text = fs::read_to_string(path).map_err(|e| Failure::io(path, e))?;
    let de = &mut serde_json::Deserializer::from_str(&text);
    match serde_path_to_error::deserialize::<_, PlanDocument>(de) {
        Ok(doc) => Ok(doc.plan),
        Err(doc_err) => serde_json::from_str::<InvestmentPlan>(&text)
            .map_err(|_| Failure::input(format!("{}: {}: {}", path.display(), doc_err.path(), doc_err.inner()))),
    }
}

fn read_check_scenarios(case: &NetworkCase, path: Option<&Path>) -> Result<Vec<Scenario>, Failure> {
    let Some(path) = path else { return Ok(vec![Scenario::deterministic(case)]) };
    let text = fs::read_to_string(path).map_err(|e| Failure::io(path, e))?;
    let scenarios = match serde_json::from_str::<Scenario>(&text) {
        Ok(s) => vec![s],
        Err(single) => match read_scenarios(text.as_bytes()) {
            Ok(records) if !records.is_empty() => records.into_iter().map(|r| r.scenario).collect(),
            _ => return Err(Failure::input(format!("{}: {single}", path.display()))),
        },
    };
    for (k, s) in scenarios.iter().enumerate() {
        if !s.matches(case) {
            return Err(Failure::input(format!(
                "{}: scenario {k} is {}x{}, case needs {}x{}",
                path.display(),
                s.n(),
                s.periods(),
                case.n(),
                case.total_periods()
            )));
        }
    }
    Ok(scenarios)
}

pub fn check(case_path: &Path, plan_path: &Path, scenario: Option<&Path>, tol: f64, common: &CommonArgs) -> Outcome {
    let case = read_case(case_path)?;
    let opts = options(common)?;
    let plan = read_plan(plan_path)?;
    plan.validate(&case).map_err(|e| Failure::input(format!("{}: {e}", plan_path.display())))?;
    let scenarios = read_check_scenarios(&case, scenario)?;
    let tolerances = Tolerances { linear: tol, cone_eps: common.btn_accuracy };
    let mut clean = true;
    for (k, s) in scenarios.iter().enumerate() {
        println!("scenario {k} ({})", &s.fingerprint[..12]);
        let corr = match corrective_generation(&case, &plan, s, &opts) {
            Ok(c) => c,
            Err(e @ RobustError::Subproblem { .. }) => {
                println!("  no dispatch: {e}");
                clean = false;
                continue;
            }
            Err(e) => return Err(e.into()),
        };
        let state = corr.state.expect("generation correctives always carry a dispatch");
        let table = evaluate_constraints(&case, &plan, &state, s);
        let report = check_plan_against(&case, &plan, &state, s, &tolerances);
        println!("  {:<16} {:>14} {:>6}", "family", "max residual", "hard");
        for family in table.families() {
            let hard = report.hard().filter(|v| v.family == family).count();
            println!("  {family:<16} {:>14.6e} {hard:>6}", table.max(family));
        }
        println!("  {:<16} {:>14.6e}", "unserved_load", corr.residual);
        if !report.is_feasible() || corr.residual > tol {
            clean = false;
        }
    }
    if clean {
        println!("no hard violations");
        Ok(exit::OK)
    } else {
        println!("violations found");
        Ok(exit::VIOLATION)
    }
}

pub fn chance_box(case_path: &Path, epsilon: f64, samples: usize, seed: u64, dir: &Path) -> Outcome {
    let case = read_case(case_path)?;
    let dist = LoadDistribution::from_case(&case).map_err(|e| Failure::input(e.to_string()))?;
    let ubox = make_chance_box(&dist, epsilon).map_err(|e| Failure::input(e.to_string()))?;
    let m = dist.uncertain_count();
    let joint = box_mass(&dist, &ubox).map_err(|e| Failure::backend(e.to_string()))?;
    let coverage = if samples > 0 {
        let fraction = verify_coverage(&dist, &ubox, samples, seed).map_err(|e| Failure::input(e.to_string()))?;
        Some(Coverage { samples, seed, fraction })
    } else {
        None
    };
    out_dir(dir)?;
    let doc = BoxDocument {
        schema: BOX_SCHEMA.to_string(),
        epsilon,
        uncertain_coordinates: m,
        coordinate_mass: coordinate_mass(epsilon, m),
        joint_mass: joint,
        coverage: coverage.clone(),
        uncertainty: ubox,
    };
    write_doc(dir, "box.json", &doc)?;
    println!("uncertain coordinates {m}");
    println!("joint mass           {joint:.9}");
    if let Some(c) = coverage {
        println!("sampled coverage     {:.6} ({} draws, seed {})", c.fraction, c.samples, c.seed);
    }
    Ok(exit::OK)
}
