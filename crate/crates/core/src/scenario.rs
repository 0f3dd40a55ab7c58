//! Load realizations over the whole horizon.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::case::NetworkCase;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioOrigin {
    Deterministic,
    GenerationAdversary,
    ThermalAdversary,
}

/// Loads `[i][g]` in kW / kvar over all global periods.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub p_load: Vec<Vec<f64>>,
    pub q_load: Vec<Vec<f64>>,
    pub origin: ScenarioOrigin,
    pub fingerprint: String,
}

/// Canonical hash of a load pair: values rounded to 1e-9, little-endian.
pub fn fingerprint(p: &[Vec<f64>], q: &[Vec<f64>]) -> String {
    let mut h = Sha256::new();
    for m in [p, q] {
        h.update((m.len() as u64).to_le_bytes());
        for row in m {
            h.update((row.len() as u64).to_le_bytes());
            for v in row {
                let q = (v * 1e9).round() as i64;
                h.update(q.to_le_bytes());
            }
        }
    }
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

impl Scenario {
    pub fn new(p_load: Vec<Vec<f64>>, q_load: Vec<Vec<f64>>, origin: ScenarioOrigin) -> Self {
        let fingerprint = fingerprint(&p_load, &q_load);
        Scenario { p_load, q_load, origin, fingerprint }
    }

    /// Deterministic loads of the case, growth included.
    pub fn deterministic(case: &NetworkCase) -> Self {
        let g = case.total_periods();
        let p = (0..case.n()).map(|i| (0..g).map(|t| case.p_load(i, t)).collect()).collect();
        let q = (0..case.n()).map(|i| (0..g).map(|t| case.q_load(i, t)).collect()).collect();
        Scenario::new(p, q, ScenarioOrigin::Deterministic)
    }

    pub fn n(&self) -> usize {
        self.p_load.len()
    }

    pub fn periods(&self) -> usize {
        self.p_load.first().map_or(0, Vec::len)
    }

    pub fn matches(&self, case: &NetworkCase) -> bool {
        let (n, g) = (case.n(), case.total_periods());
        let ok = |m: &Vec<Vec<f64>>| m.len() == n && m.iter().all(|r| r.len() == g);
        ok(&self.p_load) && ok(&self.q_load)
    }

    /// Whether the stored fingerprint agrees with the loads (e.g. after reading a dump).
    pub fn fingerprint_valid(&self) -> bool {
        self.fingerprint == fingerprint(&self.p_load, &self.q_load)
    }
}
