//! Releases noisy counts `y = n + z` and audits the draws against the
//! analytic pmf.
//!
//! Draws use ChaCha8 seeded from a 64-bit seed. Parallel audits split the
//! work into a fixed number of chunks, each on its own ChaCha stream, so the
//! merged counts do not depend on the thread pool size.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::MechanismConfig;
use crate::error::{Error, Result};
use crate::noise_family::NoisePmf;
use crate::optimal_solver::optimal_alphas;

/// Generator recorded in every audit report.
pub const RNG_NAME: &str = "ChaCha8 (rand_chacha 0.3), stream per chunk";

const AUDIT_CHUNKS: u64 = 16;

/// Inverse-CDF sampler over the finite support of one pmf.
#[derive(Debug, Clone)]
pub struct SamplerState {
    pmf: NoisePmf,
    support: Vec<i64>,
    cumulative: Vec<f64>,
    seed: u64,
    rng: ChaCha8Rng,
}

impl SamplerState {
    pub fn new(pmf: NoisePmf, seed: u64) -> Result<Self> {
        Self::with_stream(pmf, seed, 0)
    }

    /// Sampler on an independent stream of the same seed.
    pub fn with_stream(pmf: NoisePmf, seed: u64, stream: u64) -> Result<Self> {
        let mut support = Vec::new();
        let mut cumulative = Vec::new();
        let mut acc = 0.0;
        for (z, p) in pmf.iter() {
            if p < 0.0 {
                return Err(Error::InvalidPmf(format!("negative mass {p} at z={z}")));
            }
            acc += p;
            support.push(z);
            cumulative.push(acc);
        }
        if (acc - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidPmf(format!("masses sum to {acc}")));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        Ok(SamplerState {
            pmf,
            support,
            cumulative,
            seed,
            rng,
        })
    }

    pub fn pmf(&self) -> &NoisePmf {
        &self.pmf
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn cumulative(&self) -> &[f64] {
        &self.cumulative
    }

    /// One noise draw.
    pub fn sample_noise(&mut self) -> i64 {
        let u: f64 = self.rng.gen();
        for (z, &c) in self.support.iter().zip(&self.cumulative) {
            if u < c {
                return *z;
            }
        }
        // u landed in the rounding gap above the final partial sum.
        *self.support.last().expect("normalized pmf has support")
    }

    /// Released output for true count `n`.
    pub fn sample_output(&mut self, n: u64) -> Result<i64> {
        let lo = self.support.first().copied().unwrap_or(0);
        let allowed = -(n.min(self.pmf.d()) as i64);
        if n == 0 || lo < allowed {
            return Err(Error::InvalidPmf(format!(
                "pmf reaches z={lo}, below -min(n, D) = {allowed} for n={n}"
            )));
        }
        Ok(n as i64 + self.sample_noise())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AuditReport {
    pub trials: u64,
    pub seed: u64,
    pub rng: &'static str,
    pub n: u64,
    pub window: u64,
    /// Raw draw counts per offset.
    pub counts: BTreeMap<i64, u64>,
    pub empirical_mass: BTreeMap<i64, f64>,
    /// Half the L1 distance between empirical and analytic pmfs.
    pub tv_distance: f64,
    pub empirical_correct_rate: f64,
    /// Fraction of outputs within `[n - window, n + window]`.
    pub in_range_rate: f64,
}

impl AuditReport {
    /// Histogram as `offset,count` CSV lines (with header).
    pub fn histogram_csv(&self) -> String {
        let mut out = String::from("offset,count\n");
        for (z, c) in &self.counts {
            out.push_str(&format!("{z},{c}\n"));
        }
        out
    }
}

/// Draw counts per offset for `trials` releases of count `n`.
pub fn draw_counts(pmf: &NoisePmf, n: u64, trials: u64, seed: u64) -> Result<BTreeMap<i64, u64>> {
    // Validate once up front so workers cannot fail.
    SamplerState::new(pmf.clone(), seed)?.sample_output(n)?;
    let per_chunk = trials / AUDIT_CHUNKS;
    let remainder = trials % AUDIT_CHUNKS;
    let partial: Vec<BTreeMap<i64, u64>> = (0..AUDIT_CHUNKS)
        .into_par_iter()
        .map(|chunk| {
            let mut state = SamplerState::with_stream(pmf.clone(), seed, chunk)
                .expect("validated above");
            let draws = per_chunk + u64::from(chunk < remainder);
            let mut counts = BTreeMap::new();
            for _ in 0..draws {
                let y = state.sample_output(n).expect("validated above");
                let z = y - n as i64;
                debug_assert!(z >= state.pmf.support_lo() && z <= state.pmf.support_hi());
                *counts.entry(z).or_insert(0u64) += 1;
            }
            counts
        })
        .collect();
    let mut merged = BTreeMap::new();
    for counts in partial {
        for (z, c) in counts {
            *merged.entry(z).or_insert(0) += c;
        }
    }
    Ok(merged)
}

/// Samples `pmf` at count `n` and compares frequencies with the pmf.
pub fn audit_pmf(pmf: &NoisePmf, n: u64, trials: u64, window: u64, seed: u64) -> Result<AuditReport> {
    if trials == 0 {
        return Err(Error::InvalidConfig("trials must be positive".into()));
    }
    let counts = draw_counts(pmf, n, trials, seed)?;
    let t = trials as f64;
    let empirical_mass: BTreeMap<i64, f64> = counts.iter().map(|(&z, &c)| (z, c as f64 / t)).collect();
    let mut keys: Vec<i64> = empirical_mass.keys().copied().collect();
    keys.extend(pmf.iter().map(|(z, _)| z));
    keys.sort_unstable();
    keys.dedup();
    let tv_distance = 0.5
        * keys
            .iter()
            .map(|z| (empirical_mass.get(z).copied().unwrap_or(0.0) - pmf.mass_at(*z)).abs())
            .sum::<f64>();
    let w = window as i64;
    let inside: u64 = counts
        .iter()
        .filter(|(z, _)| z.abs() <= w)
        .map(|(_, c)| c)
        .sum();
    Ok(AuditReport {
        trials,
        seed,
        rng: RNG_NAME,
        n,
        window,
        empirical_correct_rate: empirical_mass.get(&0).copied().unwrap_or(0.0),
        in_range_rate: inside as f64 / t,
        counts,
        empirical_mass,
        tv_distance,
    })
}

/// Audits the optimal data-independent mechanism at count `n >= D`.
pub fn empirical_audit(
    config: &MechanismConfig,
    n: u64,
    trials: u64,
    window: u64,
    seed: u64,
) -> Result<AuditReport> {
    if n < config.d() {
        return Err(Error::InvalidConfig(format!(
            "closed-form mechanism needs n >= D; got n={n}, D={}",
            config.d()
        )));
    }
    let pmf = optimal_alphas(config).noise_pmf().for_count(n)?;
    audit_pmf(&pmf, n, trials, window, seed)
}
