//! End-to-end cross-checks of the closed form against the LP oracle and of
//! the singular/event delta sandwich, over a seeded random grid.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::MechanismConfig;
use crate::lp_oracle::{audit_delta, restricted_lp, solve_general_lp, solve_restricted_lp, DeltaAudit, LpStatus};
use crate::noise_family::{validate_properties, MechanismMatrix};
use crate::optimal_solver::{optimal_alphas, BoundSet};

/// Closed form and LP must agree on delta to this absolute tolerance.
pub const DELTA_TOL: f64 = 1e-9;
/// ...and on alpha, away from regime boundaries.
pub const ALPHA_TOL: f64 = 1e-8;
/// Largest allowed violation of the restricted constraints by `alpha*`.
pub const FEASIBILITY_TOL: f64 = 1e-10;
/// Configurations with `C` this close (relatively) to a crossover are
/// boundary cases where the optimal alphas need not be unique.
pub const BOUNDARY_REL_GAP: f64 = 1e-6;

/// Random configuration in `eta ∈ (0.05, 0.95)`, `D ∈ [1:12]`, `eps ∈ [0, 4]`.
pub fn random_configs(seed: u64, count: usize) -> Vec<MechanismConfig> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let eta = rng.gen_range(0.05..0.95);
            let d = rng.gen_range(1..=12u64);
            let eps = rng.gen_range(0.0..=4.0);
            MechanismConfig::new(eta, d, eps).expect("sampled inside the valid ranges")
        })
        .collect()
}

/// True when `C` sits within [`BOUNDARY_REL_GAP`] of some crossover.
pub fn near_regime_boundary(config: &MechanismConfig) -> bool {
    let bounds = BoundSet::new(config);
    bounds
        .crossovers
        .iter()
        .any(|&ck| ((bounds.c - ck) / ck).abs() < BOUNDARY_REL_GAP)
}

/// Matrix of the optimal data-independent mechanism on counts `D..=3D`.
pub fn optimal_matrix(config: &MechanismConfig) -> MechanismMatrix {
    let sol = optimal_alphas(config);
    let d = config.d();
    MechanismMatrix::additive(d, sol.noise_pmf().iter(), d as i64, 3 * d as i64)
        .expect("optimal pmf is normalized")
}

#[derive(Debug, Clone, Serialize)]
pub struct ConfigCheck {
    pub config: MechanismConfig,
    pub regime: u64,
    pub closed_form_delta: f64,
    pub lp_delta: f64,
    pub lp_status: LpStatus,
    pub delta_gap: f64,
    /// `None` at regime boundaries.
    pub alpha_gap: Option<f64>,
    pub feasibility_violation: f64,
    pub audit: DeltaAudit,
}

pub fn check_config(config: &MechanismConfig) -> ConfigCheck {
    let sol = optimal_alphas(config);
    let lp = solve_restricted_lp(config);
    let (lp_delta, delta_gap, alpha_gap) = if lp.is_optimal() {
        let gap = (lp.optimum - sol.delta_star).abs();
        let alpha_gap = (!near_regime_boundary(config)).then(|| {
            sol.alphas
                .iter()
                .zip(&lp.assignment[1..])
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max)
        });
        (lp.optimum, gap, alpha_gap)
    } else {
        (f64::NAN, f64::INFINITY, None)
    };
    let mut point = vec![sol.delta_star];
    point.extend(&sol.alphas);
    let feasibility_violation = restricted_lp(config).max_violation(&point);
    ConfigCheck {
        config: *config,
        regime: sol.regime,
        closed_form_delta: sol.delta_star,
        lp_delta,
        lp_status: lp.status,
        delta_gap,
        alpha_gap,
        feasibility_violation,
        audit: audit_delta(&optimal_matrix(config), config.epsilon()),
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct VerificationReport {
    pub seed: u64,
    pub configs: usize,
    pub max_delta_gap: f64,
    pub max_alpha_gap: f64,
    pub boundary_configs: usize,
    pub max_feasibility_violation: f64,
    pub sandwich_failures: usize,
    pub example1_status: LpStatus,
    pub example1_optimum: f64,
    pub example1_columns_valid: bool,
    /// Audits of caller-supplied matrices, with the sandwich verdict.
    pub extra_audits: Vec<(DeltaAudit, bool)>,
    pub passed: bool,
}

/// Runs every cross-check. `extra` matrices are audited at `extra_epsilon`.
pub fn run_verification(
    seed: u64,
    count: usize,
    extra: &[MechanismMatrix],
    extra_epsilon: f64,
) -> VerificationReport {
    let checks: Vec<ConfigCheck> = random_configs(seed, count)
        .par_iter()
        .map(check_config)
        .collect();

    let max_delta_gap = checks.iter().map(|c| c.delta_gap).fold(0.0, f64::max);
    let max_alpha_gap = checks
        .iter()
        .filter_map(|c| c.alpha_gap)
        .fold(0.0, f64::max);
    let boundary_configs = checks.iter().filter(|c| c.alpha_gap.is_none()).count();
    let max_feasibility_violation = checks
        .iter()
        .map(|c| c.feasibility_violation)
        .fold(0.0, f64::max);
    let sandwich_failures = checks.iter().filter(|c| !c.audit.sandwich_holds(1e-12)).count();

    let example = MechanismConfig::new(0.5, 2, 1.0).expect("valid");
    let (example1_status, example1_optimum, example1_columns_valid) = match solve_general_lp(3, &example) {
        Ok(g) => {
            let valid = g
                .pmfs()
                .map(|ps| ps.iter().all(|p| validate_properties(p).passed))
                .unwrap_or(false);
            (g.solution.status, g.solution.optimum, valid)
        }
        Err(_) => (LpStatus::Infeasible, f64::NAN, false),
    };

    let extra_audits: Vec<(DeltaAudit, bool)> = extra
        .iter()
        .map(|m| {
            let a = audit_delta(m, extra_epsilon);
            let ok = a.sandwich_holds(1e-12);
            (a, ok)
        })
        .collect();

    let passed = max_delta_gap < DELTA_TOL
        && max_alpha_gap < ALPHA_TOL
        && max_feasibility_violation < FEASIBILITY_TOL
        && sandwich_failures == 0
        && example1_status == LpStatus::Optimal
        && example1_columns_valid
        && extra_audits.iter().all(|(_, ok)| *ok);

    VerificationReport {
        seed,
        configs: count,
        max_delta_gap,
        max_alpha_gap,
        boundary_configs,
        max_feasibility_violation,
        sandwich_failures,
        example1_status,
        example1_optimum,
        example1_columns_valid,
        extra_audits,
        passed,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_run_passes() {
        let r = run_verification(1, 40, &[], 0.0);
        assert!(r.passed, "{r:?}");
    }

    #[test]
    fn corrupted_matrix_fails_sandwich() {
        // Wide flat columns: many small positive gaps add up beyond the
        // (2D+1) lift for the claimed D = 1.
        let cols = vec![
            (0..20).map(|y| if y < 10 { 0.1 } else { 0.0 }).collect(),
            (0..20).map(|y| if y >= 10 { 0.1 } else { 0.0 }).collect(),
        ];
        let m = MechanismMatrix::from_columns(1, 1, 0, cols).unwrap();
        let r = run_verification(1, 5, &[m], 0.0);
        assert!(!r.passed);
        assert!(!r.extra_audits[0].1);
    }

    #[test]
    fn random_configs_are_seeded() {
        assert_eq!(random_configs(5, 10), random_configs(5, 10));
        assert_ne!(random_configs(5, 10), random_configs(6, 10));
    }
}
