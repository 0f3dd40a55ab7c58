//! Problem instance: nodes, geometry, load profiles and the cost and
//! electrical parameters, read from a JSON case document.

use std::f64::consts::FRAC_PI_2;
use std::io::Read;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Ohm -> kV^2/kW. Keeps `r * psi` in kW when flows are kW and voltages kV.
pub const OHM_TO_KV2_PER_KW: f64 = 1e-3;

#[derive(Debug, Error)]
pub enum CaseError {
    #[error("{path}: {message}")]
    Parse { path: String, message: String },
    #[error("{path}: {message}")]
    Invalid { path: String, message: String },
    #[error("reading case: {0}")]
    Io(#[from] std::io::Error),
}

impl CaseError {
    fn invalid(path: impl Into<String>, message: impl Into<String>) -> Self {
        CaseError::Invalid { path: path.into(), message: message.into() }
    }

    /// JSON-pointer-like location of the offending field.
    pub fn path(&self) -> &str {
        match self {
            CaseError::Parse { path, .. } | CaseError::Invalid { path, .. } => path,
            CaseError::Io(_) => "",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NodeSpec {
    pub id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub y: Option<f64>,
    /// Active load per period of the representative days, kW.
    pub p_load: Vec<f64>,
    /// Reactive load per period of the representative days, kvar.
    pub q_load: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CostSpec {
    /// $/km per conductor.
    pub c_cond: f64,
    /// $/km, paid once per corridor.
    pub c_pole: f64,
    /// $ per generator installed.
    pub c_gen: f64,
    /// $/h fixed running cost of an installed generator.
    pub a: f64,
    /// $/kWh marginal cost.
    pub b: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ElectricalSpec {
    /// Ohm/km.
    pub r: f64,
    /// Ohm/km.
    pub x: f64,
    /// kV.
    pub v_min: f64,
    /// kV.
    pub v_max: f64,
    /// kVA per conductor.
    pub s_rating: f64,
    /// kW.
    pub p_gen_max: f64,
    /// kW.
    pub p_gen_min: f64,
    pub cos_phi_min: f64,
    pub max_parallel: u32,
    /// radians.
    pub theta_delta: f64,
}

impl ElectricalSpec {
    pub fn tan_phi(&self) -> f64 {
        self.cos_phi_min.acos().tan()
    }

    pub fn tan_theta(&self) -> f64 {
        self.theta_delta.tan()
    }

    /// Resistance of one conductor over `km`, in kV^2/kW.
    pub fn resistance(&self, km: f64) -> f64 {
        self.r * km * OHM_TO_KV2_PER_KW
    }

    /// Reactance of one conductor over `km`, in kV^2/kW.
    pub fn reactance(&self, km: f64) -> f64 {
        self.x * km * OHM_TO_KV2_PER_KW
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MarginalFamily {
    Normal,
    Uniform,
}

/// Load uncertainty model attached to a case: every load coordinate gets the
/// given marginal centred on its deterministic value, with dispersion
/// `dispersion * |mean|` (standard deviation for normal, half-width for uniform).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UncertaintySpec {
    pub family: MarginalFamily,
    pub dispersion: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HorizonSpec {
    pub years: u32,
    pub periods_per_day: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ScaleFactor {
    Single(f64),
    PerDay(Vec<f64>),
}

/// Raw case document as it appears on disk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CaseDocument {
    pub nodes: Vec<NodeSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub distances: Option<Vec<Vec<f64>>>,
    pub costs: CostSpec,
    pub electrical: ElectricalSpec,
    pub horizon: HorizonSpec,
    pub growth_rate: f64,
    #[serde(rename = "scale_factor_H")]
    pub scale_factor_h: ScaleFactor,
    pub discount_rate: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub uncertainty: Option<UncertaintySpec>,
}

/// Undirected candidate corridor `a < b`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Edge {
    pub a: usize,
    pub b: usize,
}

/// Validated, immutable planning instance.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkCase {
    pub nodes: Vec<NodeSpec>,
    pub distances: Vec<Vec<f64>>,
    pub years: usize,
    pub periods_per_day: usize,
    /// H share of each representative day.
    pub day_weights: Vec<f64>,
    pub growth_rate: f64,
    pub cost: CostSpec,
    pub electrical: ElectricalSpec,
    pub discount_rate: f64,
    pub uncertainty: Option<UncertaintySpec>,
    edges: Vec<Edge>,
}

/// Reads and validates a case document.
pub fn load_case<R: Read>(mut source: R) -> Result<NetworkCase, CaseError> {
    let mut text = String::new();
    source.read_to_string(&mut text)?;
    let de = &mut serde_json::Deserializer::from_str(&text);
    let doc: CaseDocument = serde_path_to_error::deserialize(de).map_err(|e| CaseError::Parse {
        path: e.path().to_string(),
        message: e.inner().to_string(),
    })?;
    NetworkCase::from_document(doc)
}

fn check_finite(path: &str, v: f64) -> Result<(), CaseError> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(CaseError::invalid(path, "value must be finite"))
    }
}

impl NetworkCase {
    pub fn from_document(doc: CaseDocument) -> Result<Self, CaseError> {
        let n = doc.nodes.len();
        if n == 0 {
            return Err(CaseError::invalid("nodes", "at least one node required"));
        }
        let h = doc.horizon;
        if h.years < 1 {
            return Err(CaseError::invalid("horizon.years", "must be >= 1"));
        }
        if h.periods_per_day < 1 {
            return Err(CaseError::invalid("horizon.periods_per_day", "must be >= 1"));
        }
        let day_weights = match doc.scale_factor_h {
            ScaleFactor::Single(v) => vec![v],
            ScaleFactor::PerDay(v) => v,
        };
        if day_weights.is_empty() {
            return Err(CaseError::invalid("scale_factor_H", "at least one day weight required"));
        }
        for (d, w) in day_weights.iter().enumerate() {
            if !(w.is_finite() && *w > 0.0) {
                return Err(CaseError::invalid(format!("scale_factor_H[{d}]"), "must be > 0"));
            }
        }
        let per_year = day_weights.len() * h.periods_per_day as usize;

        let mut seen = std::collections::HashSet::new();
        for (i, node) in doc.nodes.iter().enumerate() {
            if !seen.insert(node.id.as_str()) {
                return Err(CaseError::invalid(
                    format!("nodes[{i}].id"),
                    format!("duplicate node id {:?}", node.id),
                ));
            }
            for (name, series) in [("p_load", &node.p_load), ("q_load", &node.q_load)] {
                if series.len() != per_year {
                    return Err(CaseError::invalid(
                        format!("nodes[{i}].{name}"),
                        format!("expected {per_year} values, found {}", series.len()),
                    ));
                }
                for (t, v) in series.iter().enumerate() {
                    check_finite(&format!("nodes[{i}].{name}[{t}]"), *v)?;
                    if *v < 0.0 {
                        return Err(CaseError::invalid(
                            format!("nodes[{i}].{name}[{t}]"),
                            "load must be >= 0",
                        ));
                    }
                }
            }
        }

        let distances = match doc.distances {
            Some(m) => {
                if m.len() != n {
                    return Err(CaseError::invalid("distances", format!("expected {n} rows")));
                }
                for (i, row) in m.iter().enumerate() {
                    if row.len() != n {
                        return Err(CaseError::invalid(
                            format!("distances[{i}]"),
                            format!("expected {n} columns"),
                        ));
                    }
                }
                for i in 0..n {
                    for j in 0..n {
                        let path = format!("distances[{i}][{j}]");
                        check_finite(&path, m[i][j])?;
                        if i == j && m[i][j] != 0.0 {
                            return Err(CaseError::invalid(path, "diagonal must be zero"));
                        }
                        if i != j && m[i][j] <= 0.0 {
                            return Err(CaseError::invalid(path, "off-diagonal must be > 0"));
                        }
                        if (m[i][j] - m[j][i]).abs() > 1e-12 * m[i][j].abs().max(1.0) {
                            return Err(CaseError::invalid(path, "matrix is not symmetric"));
                        }
                    }
                }
                m
            }
            None => {
                let mut coords = Vec::with_capacity(n);
                for (i, node) in doc.nodes.iter().enumerate() {
                    match (node.x, node.y) {
                        (Some(x), Some(y)) => coords.push((x, y)),
                        _ => {
                            return Err(CaseError::invalid(
                                format!("nodes[{i}]"),
                                "coordinates x, y required when no distance matrix is given",
                            ))
                        }
                    }
                }
                let mut m = vec![vec![0.0; n]; n];
                for i in 0..n {
                    for j in 0..n {
                        if i != j {
                            let (dx, dy) = (coords[i].0 - coords[j].0, coords[i].1 - coords[j].1);
                            m[i][j] = dx.hypot(dy);
                            if m[i][j] <= 0.0 {
                                return Err(CaseError::invalid(
                                    format!("nodes[{j}]"),
                                    format!("coincides with nodes[{i}]"),
                                ));
                            }
                        }
                    }
                }
                m
            }
        };

        let c = doc.costs;
        for (name, v) in [
            ("c_cond", c.c_cond),
            ("c_pole", c.c_pole),
            ("c_gen", c.c_gen),
            ("a", c.a),
            ("b", c.b),
        ] {
            check_finite(&format!("costs.{name}"), v)?;
            if v < 0.0 {
                return Err(CaseError::invalid(format!("costs.{name}"), "must be >= 0"));
            }
        }

        let e = doc.electrical;
        for (name, v) in [
            ("r", e.r),
            ("x", e.x),
            ("v_min", e.v_min),
            ("v_max", e.v_max),
            ("s_rating", e.s_rating),
            ("p_gen_max", e.p_gen_max),
            ("p_gen_min", e.p_gen_min),
            ("cos_phi_min", e.cos_phi_min),
            ("theta_delta", e.theta_delta),
        ] {
            check_finite(&format!("electrical.{name}"), v)?;
        }
        if !(e.v_min > 0.0 && e.v_min < e.v_max) {
            return Err(CaseError::invalid("electrical.v_min", "require 0 < v_min < v_max"));
        }
        if !(e.r > 0.0) {
            return Err(CaseError::invalid("electrical.r", "must be > 0"));
        }
        if !(e.x > 0.0) {
            return Err(CaseError::invalid("electrical.x", "must be > 0"));
        }
        if e.s_rating < 0.0 {
            return Err(CaseError::invalid("electrical.s_rating", "must be >= 0"));
        }
        if !(0.0 <= e.p_gen_min && e.p_gen_min <= e.p_gen_max) {
            return Err(CaseError::invalid(
                "electrical.p_gen_min",
                "require 0 <= p_gen_min <= p_gen_max",
            ));
        }
        if !(e.cos_phi_min > 0.0 && e.cos_phi_min <= 1.0) {
            return Err(CaseError::invalid("electrical.cos_phi_min", "require 0 < cos_phi <= 1"));
        }
        if e.max_parallel < 1 {
            return Err(CaseError::invalid("electrical.max_parallel", "must be >= 1"));
        }
        if !(e.theta_delta > 0.0 && e.theta_delta < FRAC_PI_2) {
            return Err(CaseError::invalid("electrical.theta_delta", "require 0 < theta < pi/2"));
        }

        check_finite("growth_rate", doc.growth_rate)?;
        if doc.growth_rate <= -1.0 {
            return Err(CaseError::invalid("growth_rate", "must be > -1"));
        }
        check_finite("discount_rate", doc.discount_rate)?;
        if !(0.0..1.0).contains(&doc.discount_rate) {
            return Err(CaseError::invalid("discount_rate", "require 0 <= ra < 1"));
        }
        if let Some(u) = doc.uncertainty {
            if !(u.dispersion.is_finite() && u.dispersion >= 0.0) {
                return Err(CaseError::invalid("uncertainty.dispersion", "must be >= 0"));
            }
        }

        let mut edges = Vec::new();
        for a in 0..n {
            for b in a + 1..n {
                edges.push(Edge { a, b });
            }
        }

        Ok(NetworkCase {
            nodes: doc.nodes,
            distances,
            years: h.years as usize,
            periods_per_day: h.periods_per_day as usize,
            day_weights,
            growth_rate: doc.growth_rate,
            cost: doc.costs,
            electrical: doc.electrical,
            discount_rate: doc.discount_rate,
            uncertainty: doc.uncertainty,
            edges,
        })
    }

    /// Inverse of [`NetworkCase::from_document`]; distances are always explicit.
    pub fn to_document(&self) -> CaseDocument {
        CaseDocument {
            nodes: self.nodes.clone(),
            distances: Some(self.distances.clone()),
            costs: self.cost,
            electrical: self.electrical,
            horizon: HorizonSpec {
                years: self.years as u32,
                periods_per_day: self.periods_per_day as u32,
            },
            growth_rate: self.growth_rate,
            scale_factor_h: if self.day_weights.len() == 1 {
                ScaleFactor::Single(self.day_weights[0])
            } else {
                ScaleFactor::PerDay(self.day_weights.clone())
            },
            discount_rate: self.discount_rate,
            uncertainty: self.uncertainty,
        }
    }

    pub fn n(&self) -> usize {
        self.nodes.len()
    }

    pub fn max_parallel(&self) -> usize {
        self.electrical.max_parallel as usize
    }

    /// Operational periods simulated per year (days x periods per day).
    pub fn periods_per_year(&self) -> usize {
        self.day_weights.len() * self.periods_per_day
    }

    /// Periods over the whole horizon; global period `g` belongs to year `g / periods_per_year`.
    pub fn total_periods(&self) -> usize {
        self.years * self.periods_per_year()
    }

    /// Zero-based year of global period `g`.
    pub fn year_of(&self, g: usize) -> usize {
        g / self.periods_per_year()
    }

    /// Scale factor H applied to the cost of global period `g`.
    pub fn period_weight(&self, g: usize) -> f64 {
        let within = g % self.periods_per_year();
        self.day_weights[within / self.periods_per_day]
    }

    /// Discount factor 1/(1+ra)^y for zero-based year `y`.
    pub fn discount(&self, year: usize) -> f64 {
        1.0 / (1.0 + self.discount_rate).powi(year as i32 + 1)
    }

    fn growth(&self, g: usize) -> f64 {
        (1.0 + self.growth_rate).powi(self.year_of(g) as i32)
    }

    /// Deterministic active load at node `i`, global period `g`, growth applied.
    pub fn p_load(&self, i: usize, g: usize) -> f64 {
        self.nodes[i].p_load[g % self.periods_per_year()] * self.growth(g)
    }

    pub fn q_load(&self, i: usize, g: usize) -> f64 {
        self.nodes[i].q_load[g % self.periods_per_year()] * self.growth(g)
    }

    pub fn distance(&self, i: usize, j: usize) -> f64 {
        self.distances[i][j]
    }

    pub fn max_distance(&self) -> f64 {
        self.distances.iter().flatten().copied().fold(0.0, f64::max)
    }

    /// Candidate corridors: every node pair, `a < b`, lexicographic.
    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge_index(&self, i: usize, j: usize) -> Option<usize> {
        let n = self.n();
        if i == j || i >= n || j >= n {
            return None;
        }
        let (a, b) = if i < j { (i, j) } else { (j, i) };
        // row-major over the strict upper triangle
        Some(a * (2 * n - a - 1) / 2 + (b - a - 1))
    }
}
