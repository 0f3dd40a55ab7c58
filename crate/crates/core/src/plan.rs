//! Investment decisions and operating points.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::case::NetworkCase;

#[derive(Debug, Error, PartialEq)]
pub enum PlanError {
    #[error("plan shape mismatch: {0}")]
    Shape(String),
    #[error("plan invariant violated: {0}")]
    Invariant(String),
}

/// Yearly investment state. Indices are `[i][j][y]`, `[i][j][k-1][y]` and
/// `[i][y]`; year 0 is the first planning year.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InvestmentPlan {
    pub gamma: Vec<Vec<Vec<u32>>>,
    pub omega: Vec<Vec<Vec<u8>>>,
    pub loi: Vec<Vec<Vec<Vec<u8>>>>,
    pub sigma: Vec<Vec<u8>>,
}

impl InvestmentPlan {
    pub fn empty(n: usize, years: usize, max_parallel: usize) -> Self {
        InvestmentPlan {
            gamma: vec![vec![vec![0; years]; n]; n],
            omega: vec![vec![vec![0; years]; n]; n],
            loi: vec![vec![vec![vec![0; years]; max_parallel]; n]; n],
            sigma: vec![vec![0; years]; n],
        }
    }

    pub fn empty_for(case: &NetworkCase) -> Self {
        Self::empty(case.n(), case.years, case.max_parallel())
    }

    pub fn n(&self) -> usize {
        self.sigma.len()
    }

    pub fn years(&self) -> usize {
        self.sigma.first().map_or(0, Vec::len)
    }

    /// Sets `count` parallel lines on corridor (i, j) from year `from` onward,
    /// keeping omega and the level indicators consistent.
    pub fn set_lines(&mut self, i: usize, j: usize, from: usize, count: u32) {
        let years = self.years();
        let levels = self.loi[i][j].len();
        for y in from..years {
            for (u, v) in [(i, j), (j, i)] {
                self.gamma[u][v][y] = count;
                self.omega[u][v][y] = u8::from(count > 0);
                for k in 0..levels {
                    self.loi[u][v][k][y] = u8::from((k as u32) < count);
                }
            }
        }
    }

    /// Installs a generator at `i` from year `from` onward.
    pub fn set_generator(&mut self, i: usize, from: usize) {
        let years = self.years();
        for y in from..years {
            self.sigma[i][y] = 1;
        }
    }

    pub fn generator_count(&self, year: usize) -> usize {
        self.sigma.iter().filter(|s| s[year] == 1).count()
    }

    /// Checks shapes against the case and the structural invariants:
    /// symmetry, permanence, level coupling and parallel-line cap.
    pub fn validate(&self, case: &NetworkCase) -> Result<(), PlanError> {
        let (n, years, xi) = (case.n(), case.years, case.max_parallel());
        let shape = |what: &str| PlanError::Shape(what.to_string());
        if self.sigma.len() != n || self.sigma.iter().any(|s| s.len() != years) {
            return Err(shape("sigma must be nodes x years"));
        }
        fn cube_ok<V>(c: &[Vec<Vec<V>>], n: usize, years: usize) -> bool {
            c.len() == n && c.iter().all(|r| r.len() == n && r.iter().all(|l| l.len() == years))
        }
        if !cube_ok(&self.gamma, n, years) {
            return Err(shape("gamma must be nodes x nodes x years"));
        }
        if !cube_ok(&self.omega, n, years) {
            return Err(shape("omega must be nodes x nodes x years"));
        }
        if self.loi.len() != n
            || self.loi.iter().any(|r| {
                r.len() != n || r.iter().any(|c| c.len() != xi || c.iter().any(|l| l.len() != years))
            })
        {
            return Err(shape("loi must be nodes x nodes x max_parallel x years"));
        }

        let inv = |msg: String| Err(PlanError::Invariant(msg));
        for i in 0..n {
            for y in 0..years {
                if self.sigma[i][y] > 1 {
                    return inv(format!("sigma[{i}][{y}] not binary"));
                }
                if y > 0 && self.sigma[i][y] < self.sigma[i][y - 1] {
                    return inv(format!("generator at node {i} removed in year {y}"));
                }
            }
            for j in 0..n {
                for y in 0..years {
                    let g = self.gamma[i][j][y];
                    let w = self.omega[i][j][y];
                    if i == j {
                        if g != 0 || w != 0 || self.loi[i][j].iter().any(|l| l[y] != 0) {
                            return inv(format!("self-loop investment at node {i}"));
                        }
                        continue;
                    }
                    if g != self.gamma[j][i][y] || w != self.omega[j][i][y] {
                        return inv(format!("asymmetric investment on ({i},{j}) year {y}"));
                    }
                    if g as usize > xi {
                        return inv(format!("gamma[{i}][{j}][{y}] = {g} exceeds max_parallel {xi}"));
                    }
                    if w > 1 {
                        return inv(format!("omega[{i}][{j}][{y}] not binary"));
                    }
                    if y > 0 && g < self.gamma[i][j][y - 1] {
                        return inv(format!("lines on ({i},{j}) removed in year {y}"));
                    }
                    let levels: Vec<u8> = self.loi[i][j].iter().map(|l| l[y]).collect();
                    if levels.iter().any(|&l| l > 1) {
                        return inv(format!("loi on ({i},{j}) year {y} not binary"));
                    }
                    if levels.iter().map(|&l| l as u32).sum::<u32>() != g {
                        return inv(format!("level indicators on ({i},{j}) year {y} do not sum to gamma"));
                    }
                    if levels[0] != w {
                        return inv(format!("loi_1 != omega on ({i},{j}) year {y}"));
                    }
                    if levels.windows(2).any(|p| p[1] > p[0]) {
                        return inv(format!("level indicators on ({i},{j}) year {y} not non-increasing"));
                    }
                }
            }
        }
        Ok(())
    }

    /// Nodes reachable from node 0 over corridors with omega = 1 in `year`.
    pub fn reachable_from_source(&self, year: usize) -> Vec<bool> {
        let n = self.n();
        let mut seen = vec![false; n];
        if n == 0 {
            return seen;
        }
        let mut stack = vec![0];
        seen[0] = true;
        while let Some(u) = stack.pop() {
            for v in 0..n {
                if !seen[v] && self.omega[u][v][year] == 1 {
                    seen[v] = true;
                    stack.push(v);
                }
            }
        }
        seen
    }
}

/// Operating point over all global periods `g` of the horizon.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OperationalState {
    pub p_gen: Vec<Vec<f64>>,
    pub q_gen: Vec<Vec<f64>>,
    /// Directed flow leaving `i` towards `j`.
    pub p_flow: Vec<Vec<Vec<f64>>>,
    pub q_flow: Vec<Vec<Vec<f64>>>,
    /// Squared current magnitude of the corridor, stored symmetrically.
    pub psi: Vec<Vec<Vec<f64>>>,
    /// Squared voltage magnitude, kV^2.
    pub nu: Vec<Vec<f64>>,
    pub p_shed: Vec<Vec<f64>>,
    pub q_shed: Vec<Vec<f64>>,
}

impl OperationalState {
    pub fn zeros(n: usize, periods: usize) -> Self {
        let m = || vec![vec![0.0; periods]; n];
        let c = || vec![vec![vec![0.0; periods]; n]; n];
        OperationalState {
            p_gen: m(),
            q_gen: m(),
            p_flow: c(),
            q_flow: c(),
            psi: c(),
            nu: m(),
            p_shed: m(),
            q_shed: m(),
        }
    }

    pub fn n(&self) -> usize {
        self.p_gen.len()
    }

    pub fn periods(&self) -> usize {
        self.p_gen.first().map_or(0, Vec::len)
    }

    pub fn matches(&self, case: &NetworkCase) -> bool {
        let (n, g) = (case.n(), case.total_periods());
        let mat = |m: &Vec<Vec<f64>>| m.len() == n && m.iter().all(|r| r.len() == g);
        let cube = |c: &Vec<Vec<Vec<f64>>>| c.len() == n && c.iter().all(mat);
        mat(&self.p_gen)
            && mat(&self.q_gen)
            && mat(&self.nu)
            && mat(&self.p_shed)
            && mat(&self.q_shed)
            && cube(&self.p_flow)
            && cube(&self.q_flow)
            && cube(&self.psi)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::case::load_case;

    fn case() -> NetworkCase {
        let text = r#"{
            "nodes": [
                {"id": "a", "x": 0, "y": 0, "p_load": [1], "q_load": [0]},
                {"id": "b", "x": 1, "y": 0, "p_load": [1], "q_load": [0]},
                {"id": "c", "x": 0, "y": 1, "p_load": [1], "q_load": [0]}
            ],
            "costs": {"c_cond": 1, "c_pole": 1, "c_gen": 1, "a": 0, "b": 0},
            "electrical": {"r": 0.3, "x": 0.3, "v_min": 0.9, "v_max": 1.1, "s_rating": 10,
                "p_gen_max": 5, "p_gen_min": 0, "cos_phi_min": 0.8, "max_parallel": 2, "theta_delta": 0.5},
            "horizon": {"years": 2, "periods_per_day": 1},
            "growth_rate": 0, "scale_factor_H": 1, "discount_rate": 0
        }"#;
        load_case(text.as_bytes()).unwrap()
    }

    #[test]
    fn builder_produces_valid_plan() {
        let c = case();
        let mut p = InvestmentPlan::empty_for(&c);
        p.set_lines(0, 1, 0, 1);
        p.set_lines(0, 1, 1, 2);
        p.set_lines(1, 2, 1, 1);
        p.set_generator(2, 0);
        p.validate(&c).unwrap();
        assert_eq!(p.reachable_from_source(0), vec![true, true, false]);
        assert_eq!(p.reachable_from_source(1), vec![true, true, true]);
    }

    #[test]
    fn removal_is_rejected() {
        let c = case();
        let mut p = InvestmentPlan::empty_for(&c);
        p.set_generator(0, 0);
        p.sigma[0][1] = 0;
        assert!(matches!(p.validate(&c), Err(PlanError::Invariant(_))));
    }

    #[test]
    fn asymmetry_is_rejected() {
        let c = case();
        let mut p = InvestmentPlan::empty_for(&c);
        p.set_lines(0, 1, 0, 1);
        p.gamma[1][0][0] = 2;
        assert!(p.validate(&c).is_err());
    }

    #[test]
    fn level_sum_is_checked() {
        let c = case();
        let mut p = InvestmentPlan::empty_for(&c);
        p.set_lines(0, 2, 0, 2);
        p.loi[0][2][1][0] = 0;
        p.loi[2][0][1][0] = 0;
        assert!(p.validate(&c).is_err());
    }

    #[test]
    fn shape_mismatch_detected() {
        let c = case();
        let p = InvestmentPlan::empty(2, 2, 2);
        assert!(matches!(p.validate(&c), Err(PlanError::Shape(_))));
    }
}
