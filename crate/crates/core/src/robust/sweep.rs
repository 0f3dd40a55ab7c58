//! One adversarial pass over every target constraint.

use std::collections::{BTreeMap, HashSet};

use rayon::prelude::*;
use serde::Serialize;

use crate::case::NetworkCase;
use crate::plan::InvestmentPlan;
use crate::robust::adversary::{adversarial_scenario, AdversaryKind, AdversaryOutcome};
use crate::robust::uncertainty::{TargetMask, UncertaintyBox};
use crate::robust::{RobustError, RobustOptions};
use crate::scenario::Scenario;

/// Adversary result for one target constraint.
#[derive(Debug, Clone, Serialize)]
pub struct Finding {
    pub kind: AdversaryKind,
    /// The single target that seeded the search.
    pub target: TargetMask,
    /// Mask actually solved (the target, or the violated set it grew into).
    pub mask: TargetMask,
    pub scenario: Scenario,
    pub adversary_objective: f64,
    /// Corrective residual of the scenario over the mask periods.
    pub residual: f64,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct SweepReport {
    pub findings: Vec<Finding>,
    /// Findings above the threshold, one per distinct scenario.
    pub problematic: Vec<Finding>,
}

impl SweepReport {
    pub fn problematic_scenarios(&self) -> Vec<Scenario> {
        self.problematic.iter().map(|f| f.scenario.clone()).collect()
    }
}

fn targets(case: &NetworkCase, plan: &InvestmentPlan, kind: AdversaryKind) -> Vec<TargetMask> {
    let mut out = Vec::new();
    for g in 0..case.total_periods() {
        let y = case.year_of(g);
        match kind {
            AdversaryKind::Generation => {
                out.extend((0..case.n()).map(|i| TargetMask::Generation(vec![(i, g)])));
            }
            AdversaryKind::Thermal => {
                for e in case.edges() {
                    for (u, w) in [(e.a, e.b), (e.b, e.a)] {
                        if plan.gamma[u][w][y] > 0 {
                            out.push(TargetMask::Thermal(vec![(u, w, g)]));
                        }
                    }
                }
            }
        }
    }
    out
}

fn strictly_contains(outer: &TargetMask, inner: &TargetMask) -> bool {
    match (outer, inner) {
        (TargetMask::Generation(a), TargetMask::Generation(b)) => a.len() > b.len() && b.iter().all(|t| a.contains(t)),
        (TargetMask::Thermal(a), TargetMask::Thermal(b)) => a.len() > b.len() && b.iter().all(|t| a.contains(t)),
        _ => false,
    }
}

type Key = (AdversaryKind, Vec<usize>);

/// Runs the generation and thermal adversaries against every target of
/// `plan`. Adversary solves depend only on the family and the mask periods,
/// so they are computed once per key and, optionally, in parallel.
pub fn adversary_sweep(
    case: &NetworkCase,
    plan: &InvestmentPlan,
    ubox: &UncertaintyBox,
    opts: &RobustOptions,
) -> Result<SweepReport, RobustError> {
    ubox.validate(case)?;
    let mut pending: Vec<(AdversaryKind, TargetMask)> = Vec::new();
    for kind in [AdversaryKind::Generation, AdversaryKind::Thermal] {
        pending.extend(targets(case, plan, kind).into_iter().map(|t| (kind, t)));
    }

    let mut cache: BTreeMap<Key, AdversaryOutcome> = BTreeMap::new();
    let solve_keys = |keys: Vec<Key>, cache: &mut BTreeMap<Key, AdversaryOutcome>| -> Result<(), RobustError> {
        let run = |k: &Key| adversarial_scenario(case, plan, ubox, k.0, &k.1, opts);
        let results: Vec<Result<AdversaryOutcome, RobustError>> = if opts.parallel {
            keys.par_iter().map(run).collect()
        } else {
            keys.iter().map(run).collect()
        };
        for (k, r) in keys.into_iter().zip(results) {
            cache.insert(k, r?);
        }
        Ok(())
    };

    let first: Vec<Key> = {
        let mut keys: Vec<Key> = pending.iter().map(|(k, t)| (*k, t.periods())).collect();
        keys.sort();
        keys.dedup();
        keys
    };
    solve_keys(first, &mut cache)?;

    let mut findings = Vec::with_capacity(pending.len());
    for (kind, target) in pending {
        let seeded = &cache[&(kind, target.periods())];
        let mask = if strictly_contains(&seeded.violated, &target) { seeded.violated.clone() } else { target.clone() };
        let key = (kind, mask.periods());
        if !cache.contains_key(&key) {
            solve_keys(vec![key.clone()], &mut cache)?;
        }
        let out = &cache[&key];
        findings.push(Finding {
            kind,
            target,
            mask,
            scenario: out.scenario.clone(),
            adversary_objective: out.milp_objective,
            residual: out.objective,
        });
    }

    let mut seen = HashSet::new();
    let problematic = findings
        .iter()
        .filter(|f| f.residual > f.kind.threshold(case, opts.tolerance))
        .filter(|f| seen.insert(f.scenario.fingerprint.clone()))
        .cloned()
        .collect();
    Ok(SweepReport { findings, problematic })
}
