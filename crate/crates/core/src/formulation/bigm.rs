//! Constants for the big-M loss and voltage-drop rows.

use serde::{Deserialize, Serialize};

use crate::case::NetworkCase;
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BigMSet<T> {
    /// Loss rows: bounds `|p_ij + p_ji - (R/k) psi|` (and the reactive analogue).
    pub m1: T,
    /// Voltage-drop rows: bounds `|nu_j - nu_i + 2(R p + X q) - Z^2 psi|`.
    pub m2: T,
    /// Upper bound on squared corridor current.
    pub psi_max: T,
}

/// Worst-case constants from impedances per km already in model units.
pub fn big_m_from<T: Scalar>(
    r_km: T,
    x_km: T,
    d_max: T,
    s_rating: T,
    max_parallel: T,
    v_min: T,
    v_max: T,
) -> BigMSet<T> {
    let two = T::lit(2.0);
    let cap = max_parallel * s_rating;
    let psi_max = cap * cap / (v_min * v_min);
    // The reactive loss row uses x in place of r, so take the larger one.
    let m1 = two * cap + r_km.max(x_km) * d_max * psi_max;
    let m2 = (v_max * v_max - v_min * v_min)
        + two * d_max * (r_km + x_km) * cap
        + d_max * d_max * (r_km * r_km + x_km * x_km) * psi_max;
    BigMSet { m1, m2, psi_max }
}

pub fn compute_big_m<T: Scalar>(case: &NetworkCase) -> BigMSet<T> {
    let e = &case.electrical;
    big_m_from(
        T::lit(e.resistance(1.0)),
        T::lit(e.reactance(1.0)),
        T::lit(case.max_distance()),
        T::lit(e.s_rating),
        T::lit(e.max_parallel as f64),
        T::lit(e.v_min),
        T::lit(e.v_max),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_toy_values() {
        let m: BigMSet<f64> = big_m_from(1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.1);
        assert_eq!(m.psi_max, 1.0);
        assert_eq!(m.m1, 3.0);
        assert!((m.m2 - (0.21 + 4.0 + 2.0)).abs() < 1e-12);
        let m32: BigMSet<f32> = big_m_from(1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.1);
        assert_eq!(m32.m1, 3.0);
    }

    #[test]
    fn zero_rating_means_no_loss_slack() {
        let m: BigMSet<f64> = big_m_from(0.3, 0.4, 5.0, 0.0, 2.0, 0.95, 1.05);
        assert_eq!(m.m1, 0.0);
        assert_eq!(m.psi_max, 0.0);
    }

    #[test]
    fn reactive_row_is_covered() {
        let m: BigMSet<f64> = big_m_from(0.1, 0.5, 2.0, 10.0, 1.0, 1.0, 1.1);
        // worst reactive loss row: 2*S + x*D*psi_max
        assert!(m.m1 >= 2.0 * 10.0 + 0.5 * 2.0 * m.psi_max);
    }
}
