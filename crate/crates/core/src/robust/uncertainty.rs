//! Rectangular load uncertainty and adversary targets.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::case::NetworkCase;
use crate::scenario::{Scenario, ScenarioOrigin};

#[derive(Debug, Error, PartialEq)]
pub enum BoxError {
    #[error("box shape does not match the case ({0})")]
    Shape(String),
    #[error("box bound inverted at {what}[{i}][{g}]: {lo} > {hi}")]
    Inverted { what: &'static str, i: usize, g: usize, lo: f64, hi: f64 },
    #[error("deterministic load {what}[{i}][{g}] = {value} lies outside [{lo}, {hi}]")]
    ExcludesDeterministic { what: &'static str, i: usize, g: usize, value: f64, lo: f64, hi: f64 },
    #[error("load scale bounds must satisfy 0 <= lb <= 1 <= ub, got lb={lb}, ub={ub}")]
    Scale { lb: f64, ub: f64 },
}

/// Per-coordinate load intervals `[i][g]` over all global periods.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UncertaintyBox {
    pub p_lo: Vec<Vec<f64>>,
    pub p_hi: Vec<Vec<f64>>,
    pub q_lo: Vec<Vec<f64>>,
    pub q_hi: Vec<Vec<f64>>,
}

/// One uncertain load coordinate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Coordinate {
    /// false: active load, true: reactive load.
    pub reactive: bool,
    pub node: usize,
    pub period: usize,
}

impl UncertaintyBox {
    /// `[lb * load, ub * load]` for every active and reactive load.
    pub fn scaled(case: &NetworkCase, lb: f64, ub: f64) -> Result<Self, BoxError> {
        if !(lb >= 0.0 && lb <= 1.0 && ub >= 1.0 && ub.is_finite()) {
            return Err(BoxError::Scale { lb, ub });
        }
        let det = Scenario::deterministic(case);
        let scale = |m: &Vec<Vec<f64>>, f: f64| m.iter().map(|r| r.iter().map(|v| v * f).collect()).collect();
        Ok(UncertaintyBox {
            p_lo: scale(&det.p_load, lb),
            p_hi: scale(&det.p_load, ub),
            q_lo: scale(&det.q_load, lb),
            q_hi: scale(&det.q_load, ub),
        })
    }

    /// The degenerate box holding only the deterministic loads.
    pub fn point(case: &NetworkCase) -> Self {
        Self::scaled(case, 1.0, 1.0).expect("unit scale is valid")
    }

    pub fn n(&self) -> usize {
        self.p_lo.len()
    }

    pub fn periods(&self) -> usize {
        self.p_lo.first().map_or(0, Vec::len)
    }

    pub fn validate(&self, case: &NetworkCase) -> Result<(), BoxError> {
        let (n, g) = (case.n(), case.total_periods());
        for (name, m) in [("p_lo", &self.p_lo), ("p_hi", &self.p_hi), ("q_lo", &self.q_lo), ("q_hi", &self.q_hi)] {
            if m.len() != n || m.iter().any(|r| r.len() != g) {
                return Err(BoxError::Shape(format!("{name} must be {n}x{g}")));
            }
        }
        let det = Scenario::deterministic(case);
        for (what, lo, hi, d) in [
            ("p_load", &self.p_lo, &self.p_hi, &det.p_load),
            ("q_load", &self.q_lo, &self.q_hi, &det.q_load),
        ] {
            for i in 0..n {
                for t in 0..g {
                    let (l, h, v) = (lo[i][t], hi[i][t], d[i][t]);
                    if !(l <= h) {
                        return Err(BoxError::Inverted { what, i, g: t, lo: l, hi: h });
                    }
                    let slack = 1e-9 * v.abs().max(1.0);
                    if v < l - slack || v > h + slack {
                        return Err(BoxError::ExcludesDeterministic { what, i, g: t, value: v, lo: l, hi: h });
                    }
                }
            }
        }
        Ok(())
    }

    pub fn bounds(&self, c: Coordinate) -> (f64, f64) {
        if c.reactive {
            (self.q_lo[c.node][c.period], self.q_hi[c.node][c.period])
        } else {
            (self.p_lo[c.node][c.period], self.p_hi[c.node][c.period])
        }
    }

    /// Non-degenerate coordinates within `periods`, active loads first per period.
    pub fn uncertain_coordinates(&self, periods: &[usize]) -> Vec<Coordinate> {
        let mut out = Vec::new();
        for &g in periods {
            for reactive in [false, true] {
                for node in 0..self.n() {
                    let c = Coordinate { reactive, node, period: g };
                    let (lo, hi) = self.bounds(c);
                    if hi > lo {
                        out.push(c);
                    }
                }
            }
        }
        out
    }

    /// Scenario at the upper corner, with `choose` deciding the listed
    /// coordinates (true = upper bound).
    pub fn vertex(&self, overrides: &[(Coordinate, bool)], origin: ScenarioOrigin) -> Scenario {
        let mut p = self.p_hi.clone();
        let mut q = self.q_hi.clone();
        for &(c, upper) in overrides {
            let (lo, hi) = self.bounds(c);
            let v = if upper { hi } else { lo };
            if c.reactive {
                q[c.node][c.period] = v;
            } else {
                p[c.node][c.period] = v;
            }
        }
        Scenario::new(p, q, origin)
    }

    /// Whether every coordinate of `s` sits within `tol` of one of its bounds.
    pub fn is_vertex(&self, s: &Scenario, tol: f64) -> bool {
        let at = |v: f64, lo: f64, hi: f64| (v - lo).abs() <= tol || (v - hi).abs() <= tol;
        (0..self.n()).all(|i| {
            (0..self.periods()).all(|g| {
                at(s.p_load[i][g], self.p_lo[i][g], self.p_hi[i][g]) && at(s.q_load[i][g], self.q_lo[i][g], self.q_hi[i][g])
            })
        })
    }

    pub fn contains(&self, s: &Scenario, tol: f64) -> bool {
        let inside = |v: f64, lo: f64, hi: f64| v >= lo - tol && v <= hi + tol;
        (0..self.n()).all(|i| {
            (0..self.periods()).all(|g| {
                inside(s.p_load[i][g], self.p_lo[i][g], self.p_hi[i][g])
                    && inside(s.q_load[i][g], self.q_lo[i][g], self.q_hi[i][g])
            })
        })
    }
}

/// Constraint instances an adversary targets.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TargetMask {
    /// Nodal balance entries `(i, g)`.
    Generation(Vec<(usize, usize)>),
    /// Directed thermal ratings `(i, j, g)`.
    Thermal(Vec<(usize, usize, usize)>),
}

impl TargetMask {
    pub fn is_empty(&self) -> bool {
        match self {
            TargetMask::Generation(v) => v.is_empty(),
            TargetMask::Thermal(v) => v.is_empty(),
        }
    }

    /// Sorted distinct periods touched by the mask.
    pub fn periods(&self) -> Vec<usize> {
        let mut p: Vec<usize> = match self {
            TargetMask::Generation(v) => v.iter().map(|t| t.1).collect(),
            TargetMask::Thermal(v) => v.iter().map(|t| t.2).collect(),
        };
        p.sort_unstable();
        p.dedup();
        p
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::case::load_case;

    fn case() -> NetworkCase {
        let text = r#"{
            "nodes": [
                {"id": "a", "x": 0, "y": 0, "p_load": [2, 0], "q_load": [1, 0]},
                {"id": "b", "x": 1, "y": 0, "p_load": [4, 1], "q_load": [0, 0]}
            ],
            "costs": {"c_cond": 1, "c_pole": 1, "c_gen": 1, "a": 0, "b": 0},
            "electrical": {"r": 0.3, "x": 0.3, "v_min": 0.9, "v_max": 1.1, "s_rating": 2,
                "p_gen_max": 10, "p_gen_min": 0, "cos_phi_min": 0.8, "max_parallel": 2, "theta_delta": 0.5},
            "horizon": {"years": 1, "periods_per_day": 2},
            "growth_rate": 0, "scale_factor_H": 1, "discount_rate": 0
        }"#;
        load_case(text.as_bytes()).unwrap()
    }

    #[test]
    fn scaled_box_contains_deterministic_point() {
        let c = case();
        let b = UncertaintyBox::scaled(&c, 0.5, 1.5).unwrap();
        b.validate(&c).unwrap();
        assert_eq!(b.p_hi[1][0], 6.0);
        assert!(b.contains(&Scenario::deterministic(&c), 0.0));
        assert!(UncertaintyBox::scaled(&c, 1.2, 1.5).is_err());
    }

    #[test]
    fn zero_loads_are_not_uncertain() {
        let c = case();
        let b = UncertaintyBox::scaled(&c, 0.5, 1.5).unwrap();
        assert_eq!(b.uncertain_coordinates(&[0]).len(), 3);
        assert_eq!(b.uncertain_coordinates(&[0, 1]).len(), 4);
    }

    #[test]
    fn vertices_are_vertices() {
        let c = case();
        let b = UncertaintyBox::scaled(&c, 0.5, 1.5).unwrap();
        let coords = b.uncertain_coordinates(&[0]);
        let s = b.vertex(&[(coords[0], false)], ScenarioOrigin::GenerationAdversary);
        assert!(b.is_vertex(&s, 1e-12));
        assert_eq!(s.p_load[0][0], 1.0);
        assert!(!b.is_vertex(&Scenario::deterministic(&c), 1e-12));
    }

    #[test]
    fn mask_periods() {
        let m = TargetMask::Thermal(vec![(0, 1, 3), (1, 0, 3), (0, 1, 1)]);
        assert_eq!(m.periods(), vec![1, 3]);
        assert!(TargetMask::Generation(vec![]).is_empty());
    }
}
