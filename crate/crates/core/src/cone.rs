//! Polyhedral outer approximation of second-order cones.
//!
//! A two-dimensional cone `sqrt(x^2 + y^2) <= t` is replaced by a tower of
//! rotation-and-reflection stages: starting from `(|x|, |y|)`, stage `j`
//! rotates by `pi / 2^(j+1)` and folds the result back into the upper
//! half-plane. After `L` stages the residual angle is at most
//! `pi / 2^(L+1)`, so the lifted polyhedron admits radii up to
//! `t / cos(pi / 2^(L+1))` and contains the exact cone. Row count grows
//! linearly in `L`, i.e. logarithmically in `1 / accuracy`.
//!
//! Three-argument cones `sqrt(x^2 + y^2 + z^2) <= t` are built as two stacked
//! towers through an auxiliary `w >= sqrt(x^2 + y^2)`, each at accuracy
//! `sqrt(1 + eps) - 1`.

use std::f64::consts::PI;

use thiserror::Error;

use crate::milp::{LinExpr, MilpInstance, RowId, RowLabel, VarId};
use crate::scalar::Scalar;

pub const DEFAULT_ACCURACY: f64 = 1e-3;
pub const DEFAULT_LEVEL_CAP: u32 = 12;

#[derive(Debug, Error, PartialEq)]
pub enum ConeError {
    #[error("accuracy {eps} must lie in (0, 1)")]
    AccuracyRange { eps: f64 },
    #[error("accuracy {eps} needs more than {cap} levels (best achievable {best:e})")]
    AccuracyInfeasible { eps: f64, cap: u32, best: f64 },
}

/// Relative radius excess `1/cos(pi/2^(levels+1)) - 1` of a tower with `levels` stages.
pub fn tower_excess<T: Scalar>(levels: u32) -> T {
    let angle = T::lit(PI) / T::lit(2f64.powi(levels as i32 + 1));
    T::one() / angle.cos() - T::one()
}

/// Fewest stages (at least one) whose excess does not exceed `eps`.
pub fn levels_for<T: Scalar>(eps: T, cap: u32) -> Result<u32, ConeError> {
    if !(eps > T::zero() && eps < T::one()) {
        return Err(ConeError::AccuracyRange { eps: eps.to_f64_lossy() });
    }
    (1..=cap).find(|&l| tower_excess::<T>(l) <= eps).ok_or(ConeError::AccuracyInfeasible {
        eps: eps.to_f64_lossy(),
        cap,
        best: tower_excess::<f64>(cap),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConeApproxConfig {
    pub accuracy_eps: f64,
    pub level_cap: u32,
    levels_2d: u32,
    levels_3d: u32,
}

impl ConeApproxConfig {
    pub fn new(accuracy_eps: f64) -> Result<Self, ConeError> {
        Self::with_cap(accuracy_eps, DEFAULT_LEVEL_CAP)
    }

    pub fn with_cap(accuracy_eps: f64, level_cap: u32) -> Result<Self, ConeError> {
        let levels_2d = levels_for(accuracy_eps, level_cap)?;
        let stage = (1.0 + accuracy_eps).sqrt() - 1.0;
        let levels_3d = levels_for(stage, level_cap)?;
        Ok(ConeApproxConfig { accuracy_eps, level_cap, levels_2d, levels_3d })
    }

    /// Stages of a two-argument tower.
    pub fn levels(&self) -> u32 {
        self.levels_2d
    }

    /// Stages of each of the two towers in a three-argument cone.
    pub fn levels_3d(&self) -> u32 {
        self.levels_3d
    }
}

impl Default for ConeApproxConfig {
    fn default() -> Self {
        Self::new(DEFAULT_ACCURACY).expect("default accuracy is attainable")
    }
}

/// Closed-form view of one tower: the set it admits is the regular polygon
/// norm computed by [`Tower::polygon_norm`].
#[derive(Debug, Clone)]
pub struct Tower<T> {
    rotations: Vec<(T, T)>,
}

impl<T: Scalar> Tower<T> {
    pub fn new(levels: u32) -> Self {
        let rotations = (1..=levels)
            .map(|j| {
                let a = T::lit(PI) / T::lit(2f64.powi(j as i32 + 1));
                (a.cos(), a.sin())
            })
            .collect();
        Tower { rotations }
    }

    pub fn levels(&self) -> u32 {
        self.rotations.len() as u32
    }

    /// Final `xi` of the tightest lift of `(x, y)`; the tower admits
    /// `(x, y, t)` iff this is `<= t`.
    pub fn polygon_norm(&self, x: T, y: T) -> T {
        let (mut xi, mut eta) = (x.abs(), y.abs());
        for &(c, s) in &self.rotations {
            let next = c * xi + s * eta;
            eta = (c * eta - s * xi).abs();
            xi = next;
        }
        xi
    }

    pub fn admits(&self, x: T, y: T, t: T) -> bool {
        self.polygon_norm(x, y) <= t
    }

    /// Largest admitted radius along direction `angle` at `t = 1`.
    pub fn admitted_radius(&self, angle: T) -> T {
        T::one() / self.polygon_norm(angle.cos(), angle.sin())
    }
}

/// Closed-form view of a stacked three-argument approximation.
#[derive(Debug, Clone)]
pub struct Tower3<T> {
    inner: Tower<T>,
    outer: Tower<T>,
}

impl<T: Scalar> Tower3<T> {
    pub fn new(levels: u32) -> Self {
        Tower3 { inner: Tower::new(levels), outer: Tower::new(levels) }
    }

    pub fn polygon_norm(&self, x: T, y: T, z: T) -> T {
        let w = self.inner.polygon_norm(x, y);
        self.outer.polygon_norm(w, z)
    }

    pub fn admits(&self, x: T, y: T, z: T, t: T) -> bool {
        self.polygon_norm(x, y, z) <= t
    }

    /// Whether the rotated-cone approximation admits `p^2 + q^2 <= psi * nu`.
    pub fn admits_rotated(&self, p: T, q: T, psi: T, nu: T) -> bool {
        let two = T::lit(2.0);
        let (u, v) = ((psi + nu) / two, (psi - nu) / two);
        self.admits(p, q, v, u)
    }
}

/// Rows and auxiliaries of one generated tower.
#[derive(Debug, Clone)]
pub struct ConeRows {
    /// Approximate norm of the inputs: `norm <= t` is among `rows`.
    pub norm: VarId,
    pub rows: Vec<RowId>,
}

fn tower_rows(
    m: &mut MilpInstance,
    x: LinExpr,
    y: LinExpr,
    levels: u32,
    tag: &'static str,
    index: &[usize],
    stage: usize,
) -> ConeRows {
    let label = |part: usize, level: usize| {
        let mut idx = index.to_vec();
        idx.extend_from_slice(&[stage, level, part]);
        RowLabel::new(tag, &idx)
    };
    let name = |what: &str, level: usize| {
        let joined: Vec<String> = index.iter().map(|v| v.to_string()).collect();
        format!("{tag}_{what}{stage}_{level}_{}", joined.join("_"))
    };
    let mut rows = Vec::with_capacity(4 + 3 * levels as usize + 1);
    let mut xi = m.continuous(name("xi", 0), 0.0, f64::INFINITY);
    let mut eta = m.continuous(name("eta", 0), 0.0, f64::INFINITY);
    rows.push(m.geq(label(0, 0), LinExpr::from(xi) - x.clone(), 0.0));
    rows.push(m.geq(label(1, 0), LinExpr::from(xi) + x, 0.0));
    rows.push(m.geq(label(2, 0), LinExpr::from(eta) - y.clone(), 0.0));
    rows.push(m.geq(label(3, 0), LinExpr::from(eta) + y, 0.0));
    for j in 1..=levels as usize {
        let a = PI / 2f64.powi(j as i32 + 1);
        let (c, s) = (a.cos(), a.sin());
        let xi_next = m.continuous(name("xi", j), 0.0, f64::INFINITY);
        let eta_next = m.continuous(name("eta", j), 0.0, f64::INFINITY);
        rows.push(m.equal(label(0, j), xi_next, xi * c + eta * s));
        rows.push(m.geq(label(1, j), eta_next, xi * -s + eta * c));
        rows.push(m.geq(label(2, j), eta_next, xi * s + eta * -c));
        xi = xi_next;
        eta = eta_next;
    }
    let last = (PI / 2f64.powi(levels as i32 + 1)).tan();
    rows.push(m.leq(label(4, levels as usize), eta, xi * last));
    ConeRows { norm: xi, rows }
}

/// Adds rows enforcing the outer approximation of `sqrt(x^2 + y^2) <= t`.
pub fn approximate_cone(
    m: &mut MilpInstance,
    x: LinExpr,
    y: LinExpr,
    t: LinExpr,
    cfg: &ConeApproxConfig,
    tag: &'static str,
    index: &[usize],
) -> ConeRows {
    let mut out = tower_rows(m, x, y, cfg.levels(), tag, index, 0);
    let mut idx = index.to_vec();
    idx.extend_from_slice(&[9, 0, 0]);
    out.rows.push(m.leq(RowLabel::new(tag, &idx), out.norm, t));
    out
}

/// Adds rows enforcing the outer approximation of
/// `sqrt(x^2 + y^2 + z^2) <= t` through an auxiliary inner norm.
pub fn approximate_cone3(
    m: &mut MilpInstance,
    x: LinExpr,
    y: LinExpr,
    z: LinExpr,
    t: LinExpr,
    cfg: &ConeApproxConfig,
    tag: &'static str,
    index: &[usize],
) -> ConeRows {
    let levels = cfg.levels_3d();
    let inner = tower_rows(m, x, y, levels, tag, index, 0);
    let mut outer = tower_rows(m, inner.norm.into(), z, levels, tag, index, 1);
    let mut idx = index.to_vec();
    idx.extend_from_slice(&[9, 0, 0]);
    outer.rows.push(m.leq(RowLabel::new(tag, &idx), outer.norm, t));
    let mut rows = inner.rows;
    rows.extend(outer.rows);
    ConeRows { norm: outer.norm, rows }
}

/// Adds rows enforcing the outer approximation of `p^2 + q^2 <= psi * nu`
/// (psi, nu >= 0) via `u = (psi + nu)/2`, `v = (psi - nu)/2`,
/// `sqrt(p^2 + q^2 + v^2) <= u`.
pub fn approximate_rotated_cone(
    m: &mut MilpInstance,
    p: LinExpr,
    q: LinExpr,
    psi: LinExpr,
    nu: LinExpr,
    cfg: &ConeApproxConfig,
    tag: &'static str,
    index: &[usize],
) -> ConeRows {
    let u = (psi.clone() + nu.clone()) * 0.5;
    let v = (psi - nu) * 0.5;
    approximate_cone3(m, p, q, v, u, cfg, tag, index)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn level_counts() {
        assert_eq!(levels_for(1e-3f64, 12), Ok(6));
        assert_eq!(levels_for(1e-2f64, 12), Ok(4));
        assert_eq!(levels_for(1e-4f64, 12), Ok(7));
        assert!(matches!(levels_for(1e-12f64, 12), Err(ConeError::AccuracyInfeasible { .. })));
        assert!(matches!(levels_for(0.0f64, 12), Err(ConeError::AccuracyRange { .. })));
    }

    #[test]
    fn config_rejects_unreachable_accuracy() {
        assert!(ConeApproxConfig::with_cap(1e-6, 4).is_err());
        assert_eq!(ConeApproxConfig::default().levels(), 6);
    }

    #[test]
    fn axis_boundary_point_admitted() {
        let t = Tower::<f64>::new(6);
        assert!(t.admits(1.0, 0.0, 1.0));
        assert!(!t.admits(1.0, 0.0, 0.999));
        let t32 = Tower::<f32>::new(6);
        assert!(t32.admits(0.0, 1.0, 1.0));
    }

    #[test]
    fn polygon_norm_brackets_euclidean_norm() {
        let levels = 5;
        let t = Tower::<f64>::new(levels);
        let bound = 1.0 + tower_excess::<f64>(levels);
        for k in 0..3600 {
            let a = k as f64 * 2.0 * PI / 3600.0;
            let r = t.admitted_radius(a);
            assert!(r >= 1.0 - 1e-12 && r <= bound + 1e-12, "angle {a}: {r}");
        }
    }

    #[test]
    fn rotated_examples() {
        let cfg = ConeApproxConfig::new(1e-3).unwrap();
        let t = Tower3::<f64>::new(cfg.levels_3d());
        assert!(t.admits_rotated(0.0, 0.0, 3.0, 7.0));
        assert!(t.admits_rotated(3.0, 4.0, 25.0, 1.0));
        assert!(!t.admits_rotated(3.0, 4.0, 24.0, 1.0));
    }

    #[test]
    fn generated_rows_match_closed_form() {
        // Fix inputs through variable bounds and test feasibility of the lift
        // by evaluating the tightest lift against the generated rows.
        let cfg = ConeApproxConfig::new(1e-2).unwrap();
        let mut m = MilpInstance::new();
        let x = m.continuous("x", f64::NEG_INFINITY, f64::INFINITY);
        let y = m.continuous("y", f64::NEG_INFINITY, f64::INFINITY);
        let t = m.continuous("t", 0.0, f64::INFINITY);
        let rows = approximate_cone(&mut m, x.into(), y.into(), t.into(), &cfg, "c", &[0]);
        assert_eq!(rows.rows.len(), 4 + 3 * cfg.levels() as usize + 2);
        let tower = Tower::<f64>::new(cfg.levels());
        let (px, py) = (0.6, -0.8);
        let mut vals = vec![px, py, tower.polygon_norm(px, py)];
        let (mut xi, mut eta) = (px.abs(), py.abs());
        vals.push(xi);
        vals.push(eta);
        for j in 1..=cfg.levels() {
            let a = PI / 2f64.powi(j as i32 + 1);
            let nx = a.cos() * xi + a.sin() * eta;
            eta = (a.cos() * eta - a.sin() * xi).abs();
            xi = nx;
            vals.push(xi);
            vals.push(eta);
        }
        assert!(m.max_violation(&vals) < 1e-12);
        vals[2] *= 0.999;
        assert!(m.max_violation(&vals) > 0.0);
    }
}
