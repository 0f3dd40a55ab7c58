//! Chance-constrained load models reduced to rectangular uncertainty boxes.
//!
//! With independent marginals, a box whose every one of the `m` uncertain
//! coordinates carries mass `(1 - eps)^(1/m)` holds joint mass `1 - eps`.
//! Each interval leaves equal probability in both tails.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal as NormalSampler};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};
use thiserror::Error;

use crate::case::{MarginalFamily, NetworkCase};
use crate::robust::UncertaintyBox;
use crate::scenario::Scenario;

/// Monte Carlo draws per independently seeded block.
const BLOCK: usize = 4096;
pub const MIN_SAMPLES: usize = 10_000;

#[derive(Debug, Error, PartialEq)]
pub enum ChanceError {
    #[error("epsilon must lie in (0, 1), got {0}")]
    Epsilon(f64),
    #[error("case has no uncertainty section")]
    NoUncertainty,
    #[error("invalid marginal at {what}[{i}][{g}]: {reason}")]
    Marginal { what: &'static str, i: usize, g: usize, reason: &'static str },
    #[error("distribution and box shapes differ")]
    Shape,
    #[error("at least {MIN_SAMPLES} samples are required, got {0}")]
    Samples(usize),
}

/// One load coordinate's law.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum Marginal {
    Normal { mean: f64, sd: f64 },
    Uniform { lo: f64, hi: f64 },
}

impl Marginal {
    pub fn point(v: f64) -> Self {
        Marginal::Normal { mean: v, sd: 0.0 }
    }

    pub fn is_degenerate(&self) -> bool {
        match *self {
            Marginal::Normal { sd, .. } => sd == 0.0,
            Marginal::Uniform { lo, hi } => lo == hi,
        }
    }

    fn check(&self) -> Result<(), &'static str> {
        match *self {
            Marginal::Normal { mean, sd } if !mean.is_finite() || !(sd >= 0.0 && sd.is_finite()) => {
                Err("normal needs a finite mean and a finite non-negative deviation")
            }
            Marginal::Uniform { lo, hi } if !(lo.is_finite() && hi.is_finite() && lo <= hi) => {
                Err("uniform needs finite lo <= hi")
            }
            _ => Ok(()),
        }
    }

    /// Interval leaving probability `tail` on each side.
    pub fn central_interval(&self, tail: f64) -> (f64, f64) {
        match *self {
            Marginal::Normal { mean, sd } if sd == 0.0 => (mean, mean),
            Marginal::Normal { mean, sd } => {
                let z = -standard_normal().inverse_cdf(tail);
                (mean - z * sd, mean + z * sd)
            }
            Marginal::Uniform { lo, hi } => {
                let w = hi - lo;
                (lo + tail * w, hi - tail * w)
            }
        }
    }

    /// Probability of `[a, b]`.
    pub fn mass(&self, a: f64, b: f64) -> f64 {
        match *self {
            Marginal::Normal { mean, sd } if sd == 0.0 => f64::from(a <= mean && mean <= b),
            Marginal::Normal { mean, sd } => {
                let n = standard_normal();
                (n.cdf((b - mean) / sd) - n.cdf((a - mean) / sd)).max(0.0)
            }
            Marginal::Uniform { lo, hi } if lo == hi => f64::from(a <= lo && lo <= b),
            Marginal::Uniform { lo, hi } => ((b.min(hi) - a.max(lo)) / (hi - lo)).clamp(0.0, 1.0),
        }
    }

    fn sample<R: Rng>(&self, rng: &mut R) -> f64 {
        match *self {
            Marginal::Normal { mean, sd } if sd == 0.0 => mean,
            Marginal::Normal { mean, sd } => NormalSampler::new(mean, sd).expect("validated").sample(rng),
            Marginal::Uniform { lo, hi } if lo == hi => lo,
            Marginal::Uniform { lo, hi } => rng.gen_range(lo..hi),
        }
    }
}

fn standard_normal() -> Normal {
    Normal::new(0.0, 1.0).expect("unit normal")
}

/// Independent marginals for every active and reactive load `[i][g]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoadDistribution {
    pub p: Vec<Vec<Marginal>>,
    pub q: Vec<Vec<Marginal>>,
}

impl LoadDistribution {
    pub fn new(p: Vec<Vec<Marginal>>, q: Vec<Vec<Marginal>>) -> Result<Self, ChanceError> {
        let d = LoadDistribution { p, q };
        if d.p.len() != d.q.len() || d.p.iter().zip(&d.q).any(|(a, b)| a.len() != b.len()) {
            return Err(ChanceError::Shape);
        }
        for (what, m) in [("p", &d.p), ("q", &d.q)] {
            for (i, row) in m.iter().enumerate() {
                for (g, marg) in row.iter().enumerate() {
                    marg.check().map_err(|reason| ChanceError::Marginal { what, i, g, reason })?;
                }
            }
        }
        Ok(d)
    }

    /// Marginals centred on the deterministic loads with the case's
    /// relative dispersion.
    pub fn from_case(case: &NetworkCase) -> Result<Self, ChanceError> {
        let spec = case.uncertainty.ok_or(ChanceError::NoUncertainty)?;
        let det = Scenario::deterministic(case);
        let make = |m: &Vec<Vec<f64>>| -> Vec<Vec<Marginal>> {
            m.iter()
                .map(|row| {
                    row.iter()
                        .map(|&mean| {
                            let d = spec.dispersion * mean.abs();
                            match spec.family {
                                MarginalFamily::Normal => Marginal::Normal { mean, sd: d },
                                MarginalFamily::Uniform => Marginal::Uniform { lo: mean - d, hi: mean + d },
                            }
                        })
                        .collect()
                })
                .collect()
        };
        Self::new(make(&det.p_load), make(&det.q_load))
    }

    fn marginals(&self) -> impl Iterator<Item = &Marginal> {
        self.p.iter().chain(&self.q).flatten()
    }

    /// Number of coordinates with positive dispersion.
    pub fn uncertain_count(&self) -> usize {
        self.marginals().filter(|m| !m.is_degenerate()).count()
    }
}

/// Per-coordinate mass giving joint mass `1 - eps` over `m` coordinates.
pub fn coordinate_mass(eps: f64, m: usize) -> f64 {
    if m == 0 {
        1.0
    } else {
        (1.0 - eps).powf(1.0 / m as f64)
    }
}

/// Equal-tail box of joint probability `1 - eps`.
pub fn chance_box(dist: &LoadDistribution, eps: f64) -> Result<UncertaintyBox, ChanceError> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(ChanceError::Epsilon(eps));
    }
    let tail = (1.0 - coordinate_mass(eps, dist.uncertain_count())) / 2.0;
    let split = |m: &Vec<Vec<Marginal>>| -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
        let iv: Vec<Vec<(f64, f64)>> = m.iter().map(|r| r.iter().map(|x| x.central_interval(tail)).collect()).collect();
        (
            iv.iter().map(|r| r.iter().map(|x| x.0).collect()).collect(),
            iv.iter().map(|r| r.iter().map(|x| x.1).collect()).collect(),
        )
    };
    let (p_lo, p_hi) = split(&dist.p);
    let (q_lo, q_hi) = split(&dist.q);
    Ok(UncertaintyBox { p_lo, p_hi, q_lo, q_hi })
}

/// Joint probability of `ubox` under `dist`, computed from the marginals.
pub fn box_mass(dist: &LoadDistribution, ubox: &UncertaintyBox) -> Result<f64, ChanceError> {
    check_shape(dist, ubox)?;
    let mut mass = 1.0;
    for i in 0..dist.p.len() {
        for g in 0..dist.p[i].len() {
            mass *= dist.p[i][g].mass(ubox.p_lo[i][g], ubox.p_hi[i][g]);
            mass *= dist.q[i][g].mass(ubox.q_lo[i][g], ubox.q_hi[i][g]);
        }
    }
    Ok(mass)
}

fn check_shape(dist: &LoadDistribution, ubox: &UncertaintyBox) -> Result<(), ChanceError> {
    let same = |m: &Vec<Vec<Marginal>>, b: &Vec<Vec<f64>>| m.len() == b.len() && m.iter().zip(b).all(|(x, y)| x.len() == y.len());
    if same(&dist.p, &ubox.p_lo) && same(&dist.p, &ubox.p_hi) && same(&dist.q, &ubox.q_lo) && same(&dist.q, &ubox.q_hi) {
        Ok(())
    } else {
        Err(ChanceError::Shape)
    }
}

/// Fraction of `samples` independent draws that land inside `ubox`.
///
/// Draws are split into fixed-size blocks, each with its own ChaCha stream
/// derived from `seed`, so the result does not depend on the thread count.
pub fn verify_coverage(dist: &LoadDistribution, ubox: &UncertaintyBox, samples: usize, seed: u64) -> Result<f64, ChanceError> {
    if samples < MIN_SAMPLES {
        return Err(ChanceError::Samples(samples));
    }
    check_shape(dist, ubox)?;
    let coords: Vec<(Marginal, f64, f64)> = (0..dist.p.len())
        .flat_map(|i| {
            (0..dist.p[i].len()).flat_map(move |g| {
                [
                    (dist.p[i][g], ubox.p_lo[i][g], ubox.p_hi[i][g]),
                    (dist.q[i][g], ubox.q_lo[i][g], ubox.q_hi[i][g]),
                ]
            })
        })
        .collect();
    let blocks = samples.div_ceil(BLOCK);
    let inside: usize = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(b as u64);
            let count = BLOCK.min(samples - b * BLOCK);
            (0..count)
                .filter(|_| {
                    // Draw every coordinate so each sample consumes the same
                    // amount of the stream.
                    let mut ok = true;
                    for (m, lo, hi) in &coords {
                        let v = m.sample(&mut rng);
                        ok &= v >= *lo && v <= *hi;
                    }
                    ok
                })
                .count()
        })
        .sum();
    Ok(inside as f64 / samples as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn single_normal() -> LoadDistribution {
        LoadDistribution::new(
            vec![vec![Marginal::Normal { mean: 100.0, sd: 10.0 }]],
            vec![vec![Marginal::point(0.0)]],
        )
        .unwrap()
    }

    /// Two-sided quantile by bisection on the CDF, independent of `inverse_cdf`.
    fn bisect_quantile(mass: f64) -> f64 {
        let n = standard_normal();
        let (mut a, mut b) = (0.0, 10.0);
        for _ in 0..200 {
            let m = 0.5 * (a + b);
            if n.cdf(m) - n.cdf(-m) < mass {
                a = m;
            } else {
                b = m;
            }
        }
        0.5 * (a + b)
    }

    #[test]
    fn single_normal_box_uses_two_sided_quantile() {
        let b = chance_box(&single_normal(), 0.05).unwrap();
        let q = bisect_quantile(0.95);
        assert!((b.p_lo[0][0] - (100.0 - 10.0 * q)).abs() < 1e-7);
        assert!((b.p_hi[0][0] - (100.0 + 10.0 * q)).abs() < 1e-7);
        assert_eq!((b.q_lo[0][0], b.q_hi[0][0]), (0.0, 0.0));
    }

    #[test]
    fn two_uniforms_split_mass_equally() {
        let u = Marginal::Uniform { lo: 0.0, hi: 1.0 };
        let d = LoadDistribution::new(vec![vec![u], vec![u]], vec![vec![Marginal::point(0.0)]; 2]).unwrap();
        let b = chance_box(&d, 0.19).unwrap();
        for i in 0..2 {
            assert!((b.p_lo[i][0] - 0.05).abs() < 1e-12);
            assert!((b.p_hi[i][0] - 0.95).abs() < 1e-12);
        }
        assert!((box_mass(&d, &b).unwrap() - 0.81).abs() < 1e-9);
    }

    #[test]
    fn degenerate_distribution_gives_the_point_box() {
        let d = LoadDistribution::new(vec![vec![Marginal::point(3.0)]], vec![vec![Marginal::point(1.0)]]).unwrap();
        for eps in [0.01, 0.5] {
            let b = chance_box(&d, eps).unwrap();
            assert_eq!((b.p_lo[0][0], b.p_hi[0][0]), (3.0, 3.0));
        }
        let b = chance_box(&d, 0.1).unwrap();
        assert_eq!(verify_coverage(&d, &b, MIN_SAMPLES, 7).unwrap(), 1.0);
    }

    #[test]
    fn full_support_box_covers_everything() {
        let u = Marginal::Uniform { lo: 2.0, hi: 5.0 };
        let d = LoadDistribution::new(vec![vec![u]], vec![vec![u]]).unwrap();
        let b = UncertaintyBox { p_lo: vec![vec![2.0]], p_hi: vec![vec![5.0]], q_lo: vec![vec![2.0]], q_hi: vec![vec![5.0]] };
        assert_eq!(verify_coverage(&d, &b, 20_000, 1).unwrap(), 1.0);
    }

    #[test]
    fn rejects_bad_inputs() {
        let d = single_normal();
        assert_eq!(chance_box(&d, 0.0).unwrap_err(), ChanceError::Epsilon(0.0));
        assert_eq!(chance_box(&d, 1.0).unwrap_err(), ChanceError::Epsilon(1.0));
        let b = chance_box(&d, 0.1).unwrap();
        assert_eq!(verify_coverage(&d, &b, 9_999, 0).unwrap_err(), ChanceError::Samples(9_999));
        assert!(LoadDistribution::new(vec![vec![Marginal::Normal { mean: 1.0, sd: -1.0 }]], vec![vec![Marginal::point(0.0)]]).is_err());
    }

    #[test]
    fn coverage_is_reproducible() {
        let d = single_normal();
        let b = chance_box(&d, 0.05).unwrap();
        let a = verify_coverage(&d, &b, 30_000, 42).unwrap();
        assert_eq!(a, verify_coverage(&d, &b, 30_000, 42).unwrap());
    }
}
