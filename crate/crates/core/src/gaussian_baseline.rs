//! Discrete Gaussian noise at matched variance, its `(epsilon, delta)`
//! curve, and the side-by-side comparison with the optimal mechanism.

use rayon::prelude::*;
use serde::Serialize;

use crate::config::MechanismConfig;
use crate::error::{Error, Result};
use crate::noise_family::MechanismMatrix;
use crate::optimal_solver::optimal_alphas;

/// Discrete Gaussian pmf `p(z) ∝ exp(-z^2 / (2 sigma2))`, truncated to
/// `[-Z_max : Z_max]` with `Z_max = ceil(12 sigma) + 2`, where the dropped
/// tail is far below 1e-15.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiscreteGaussianPmf {
    pub sigma2: f64,
    pub truncation: u64,
    /// `mass[|z|]`; the pmf is stored once per magnitude.
    half: Vec<f64>,
}

impl DiscreteGaussianPmf {
    pub fn new(sigma2: f64) -> Result<Self> {
        if !(sigma2 > 0.0) || !sigma2.is_finite() {
            return Err(Error::InvalidVariance(sigma2));
        }
        let truncation = (12.0 * sigma2.sqrt()).ceil() as u64 + 2;
        Ok(Self::with_truncation(sigma2, truncation))
    }

    /// Same pmf with an explicit support bound, for truncation checks.
    pub fn with_truncation(sigma2: f64, truncation: u64) -> Self {
        let weights: Vec<f64> = (0..=truncation)
            .map(|z| (-((z * z) as f64) / (2.0 * sigma2)).exp())
            .collect();
        // Normalizer summed from the far tail inward.
        let tail: f64 = weights[1..].iter().rev().sum();
        let total = weights[0] + 2.0 * tail;
        DiscreteGaussianPmf {
            sigma2,
            truncation,
            half: weights.into_iter().map(|w| w / total).collect(),
        }
    }

    pub fn mass(&self, z: i64) -> f64 {
        self.half
            .get(z.unsigned_abs() as usize)
            .copied()
            .unwrap_or(0.0)
    }

    /// Nonzero `(z, p)` over the truncated support in increasing `z`.
    pub fn iter(&self) -> impl Iterator<Item = (i64, f64)> + '_ {
        let t = self.truncation as i64;
        (-t..=t).map(move |z| (z, self.mass(z)))
    }

    /// `sum_z z^2 p(z)`; below `sigma2` for small `sigma2`.
    pub fn realized_variance(&self) -> f64 {
        self.half
            .iter()
            .enumerate()
            .skip(1)
            .rev()
            .map(|(z, p)| 2.0 * (z * z) as f64 * p)
            .sum()
    }

    /// Mass outside `[-d : d]`.
    pub fn tail_mass_outside(&self, d: u64) -> f64 {
        2.0 * self
            .half
            .iter()
            .skip(d as usize + 1)
            .rev()
            .sum::<f64>()
    }

    /// `P(Z > t)`, accumulated from the far tail inward.
    pub fn upper_tail(&self, t: f64) -> f64 {
        let t_max = self.truncation as i64;
        let start = (t.floor() as i64 + 1).max(-t_max);
        if start > t_max {
            return 0.0;
        }
        (start..=t_max).rev().map(|z| self.mass(z)).sum()
    }

    /// Mechanism matrix for counts `first..=first+count-1`; the claimed
    /// half-width is the truncation, the actual support of each column.
    pub fn matrix(&self, first: i64, count: i64) -> Result<MechanismMatrix> {
        MechanismMatrix::additive(self.truncation, self.iter(), first, first + count - 1)
    }
}

pub fn discrete_gaussian_pmf(sigma2: f64) -> Result<DiscreteGaussianPmf> {
    DiscreteGaussianPmf::new(sigma2)
}

/// `delta_G = P(Z > eps sigma2 - 1/2) - e^eps P(Z > eps sigma2 + 1/2)`,
/// floored at zero.
pub fn gaussian_delta(epsilon_g: f64, sigma2: f64) -> Result<f64> {
    let pmf = DiscreteGaussianPmf::new(sigma2)?;
    Ok(gaussian_delta_with(&pmf, epsilon_g))
}

pub fn gaussian_delta_with(pmf: &DiscreteGaussianPmf, epsilon_g: f64) -> f64 {
    let centre = epsilon_g * pmf.sigma2;
    let upper = pmf.upper_tail(centre - 0.5);
    let lower = pmf.upper_tail(centre + 0.5);
    (upper - epsilon_g.exp() * lower).max(0.0)
}

/// One point of the comparison curve.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonRow {
    pub epsilon: f64,
    /// `min(1, (2D+1) delta_star)` of the optimal mechanism.
    pub our_dp_delta: f64,
    pub gaussian_delta: f64,
    /// Matched variance parameter of the Gaussian.
    pub sigma2: f64,
    pub regime: u64,
    /// `sum z^2 p(z)` of the matched discrete Gaussian.
    pub gaussian_realized_variance: f64,
}

/// CSV header for [`ComparisonRow`] lists.
pub const COMPARISON_HEADER: &str = "epsilon,our_dp_delta,gaussian_delta,sigma2,regime";

/// For each epsilon: solve the optimal mechanism, match a discrete Gaussian
/// to its variance, and evaluate `delta_G` at `epsilon_G = epsilon`.
pub fn compare_mechanisms(eta: f64, d: u64, epsilon_grid: &[f64]) -> Result<Vec<ComparisonRow>> {
    if epsilon_grid.is_empty() {
        return Err(Error::InvalidGrid("empty epsilon grid".into()));
    }
    epsilon_grid
        .par_iter()
        .map(|&eps| {
            let config = MechanismConfig::new(eta, d, eps)?;
            let sol = optimal_alphas(&config);
            let pmf = DiscreteGaussianPmf::new(sol.variance)?;
            Ok(ComparisonRow {
                epsilon: eps,
                our_dp_delta: sol.dp_delta,
                gaussian_delta: gaussian_delta_with(&pmf, eps),
                sigma2: sol.variance,
                regime: sol.regime,
                gaussian_realized_variance: pmf.realized_variance(),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matched_variance_masses() {
        let sol = optimal_alphas(&MechanismConfig::new(0.8, 6, 2.18).unwrap());
        let g = DiscreteGaussianPmf::new(sol.variance).unwrap();
        assert!((g.mass(1) - 0.11685).abs() < 5e-5);
        assert!((g.mass(-2) - 0.000416).abs() < 5e-5);
    }

    #[test]
    fn neighbour_ratio_is_exact() {
        for s2 in [0.1, 0.266, 1.0, 7.5] {
            let g = DiscreteGaussianPmf::new(s2).unwrap();
            let ratio = g.mass(1) / g.mass(0);
            assert!((ratio - (-1.0 / (2.0 * s2)).exp()).abs() < 1e-15);
        }
    }

    #[test]
    fn small_variance_concentrates() {
        let g = DiscreteGaussianPmf::new(0.01).unwrap();
        assert!(g.mass(0) > 1.0 - 1e-10);
    }

    #[test]
    fn symmetric_and_normalized() {
        let g = DiscreteGaussianPmf::new(2.3).unwrap();
        let total: f64 = g.iter().map(|(_, p)| p).sum();
        assert!((total - 1.0).abs() < 1e-12);
        for z in 0..=g.truncation as i64 {
            assert_eq!(g.mass(z), g.mass(-z));
        }
    }

    #[test]
    fn rejects_non_positive_variance() {
        assert!(DiscreteGaussianPmf::new(0.0).is_err());
        assert!(DiscreteGaussianPmf::new(-1.0).is_err());
        assert!(gaussian_delta(1.0, f64::NAN).is_err());
    }

    #[test]
    fn zero_epsilon_gives_centre_mass() {
        for s2 in [0.266, 1.0, 4.0] {
            let g = DiscreteGaussianPmf::new(s2).unwrap();
            let d = gaussian_delta(0.0, s2).unwrap();
            assert!((d - g.mass(0)).abs() < 1e-15);
        }
    }

    #[test]
    fn upper_tail_edges() {
        let g = DiscreteGaussianPmf::new(1.0).unwrap();
        assert!((g.upper_tail(-1e9) - 1.0).abs() < 1e-12);
        assert_eq!(g.upper_tail(1e9), 0.0);
        assert!((g.upper_tail(-0.5) - g.upper_tail(0.5) - g.mass(0)).abs() < 1e-15);
    }

    #[test]
    fn comparison_rows_match_solver_variance() {
        let rows = compare_mechanisms(0.5, 6, &[1.2, 2.0, 3.0]).unwrap();
        for r in rows {
            let sol = optimal_alphas(&MechanismConfig::new(0.5, 6, r.epsilon).unwrap());
            assert_eq!(r.sigma2, sol.variance);
            assert_eq!(r.regime, sol.regime);
            assert!(r.our_dp_delta < r.gaussian_delta);
        }
        assert!(compare_mechanisms(0.5, 6, &[]).is_err());
    }
}
