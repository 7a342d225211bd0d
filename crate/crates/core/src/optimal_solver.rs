//! Closed-form optimum of the data-independent mechanism (`n >= D`).
//!
//! With symmetric noise `p(±i) = alpha_i (1-eta)/2`, `p(0) = eta`, the
//! smallest singleton-event `delta` at fixed `epsilon` is the largest of
//! `D` Type-I bounds and one Type-II bound. Which bound binds is decided by
//! where `C = 2 eta / (1 - eta)` falls among the strictly decreasing
//! crossover values `C_1 > C_2 > ... > C_D`.
//!
//! Every geometric sum `sum_j E^j w_j` is evaluated divided by its largest
//! power of `E`, i.e. as a sum of non-negative terms `r^m w` with
//! `r = 1/E <= 1`. Ratios of such sums never overflow, so large
//! `epsilon * D` needs no separate code path.

use serde::Serialize;

use crate::config::MechanismConfig;
use crate::noise_family::NoisePmf;

/// Values in `(-ALPHA_CLAMP, 0)` are rounding noise and are set to zero.
const ALPHA_CLAMP: f64 = 1e-12;

/// `sum_{m=0}^{len-1} r^m * weight(m)`, accumulated in increasing `m`.
fn scaled_sum(r: f64, len: u64, weight: impl Fn(u64) -> f64) -> f64 {
    let mut acc = 0.0;
    let mut pow = 1.0;
    for m in 0..len {
        acc += pow * weight(m);
        pow *= r;
    }
    acc
}

fn recip(e: f64) -> f64 {
    if e.is_infinite() {
        0.0
    } else {
        1.0 / e
    }
}

/// Type-I lower bound
/// `delta_k = (C sum_{j<k} E^j - E^k) / (B sum_{j<k} E^j (j+1))`.
///
/// May be negative; it is a bound, not a probability.
pub fn type1_bound(k: u64, e: f64, b: f64, c: f64) -> f64 {
    assert!(k >= 1, "Type-I bounds are indexed from 1");
    let r = recip(e);
    let geom = scaled_sum(r, k, |_| 1.0);
    let weighted = scaled_sum(r, k, |m| (k - m) as f64);
    (c * geom - e) / (b * weighted)
}

/// Type-II lower bound `delta_{D+1} = 1 / (B sum_{j<D} E^j (D-j))`; always
/// positive.
pub fn type2_bound(d: u64, e: f64, b: f64) -> f64 {
    assert!(d >= 1);
    let r = recip(e);
    let weighted = scaled_sum(r, d, |m| (m + 1) as f64);
    r.powi(d as i32 - 1) / (b * weighted)
}

/// Crossover value `C_k = sum_{j<=k} E^j / sum_{j<k} E^j (k-j)`.
pub fn crossover(k: u64, e: f64) -> f64 {
    assert!(k >= 1, "crossovers are indexed from 1");
    let r = recip(e);
    let geom = scaled_sum(r, k + 1, |_| 1.0);
    let weighted = scaled_sum(r, k, |m| (m + 1) as f64);
    e * geom / (weighted)
}

/// `C_k - C_{k+1}` evaluated through its positive closed form
/// `sum_{j<=k} E^j (j+1) / (T_k T_{k+1})`, `T_k = sum_{j<k} E^j (k-j)`.
///
/// Direct subtraction of [`crossover`] values loses every digit once the
/// sequence has converged; this form keeps the sign and magnitude.
pub fn crossover_gap(k: u64, e: f64) -> f64 {
    assert!(k >= 1);
    let r = recip(e);
    let numer = scaled_sum(r, k + 1, |m| (k + 1 - m) as f64);
    let t_k = scaled_sum(r, k, |m| (m + 1) as f64);
    let t_next = scaled_sum(r, k + 1, |m| (m + 1) as f64);
    r.powi(k as i32 - 1) * numer / (t_k * t_next)
}

/// Index `k*` in `[1 : D+1]` of the binding bound: the unique `k` with
/// `C_k < C <= C_{k-1}` under `C_0 = +inf`, `C_{D+1} = 0`. A value of `C`
/// sitting exactly on `C_{k-1}` lands in regime `k`.
pub fn select_regime(c: f64, e: f64, d: u64) -> u64 {
    (1..=d).find(|&k| c > crossover(k, e)).unwrap_or(d + 1)
}

/// All candidate bounds and crossovers for one configuration.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundSet {
    pub e: f64,
    pub b: f64,
    pub c: f64,
    /// `delta_1 ..= delta_D`.
    pub type1: Vec<f64>,
    /// `delta_{D+1}`.
    pub type2: f64,
    /// `C_1 ..= C_D`.
    pub crossovers: Vec<f64>,
}

impl BoundSet {
    pub fn new(config: &MechanismConfig) -> Self {
        let (e, b, c, d) = (config.e(), config.b(), config.c(), config.d());
        BoundSet {
            e,
            b,
            c,
            type1: (1..=d).map(|k| type1_bound(k, e, b, c)).collect(),
            type2: type2_bound(d, e, b),
            crossovers: (1..=d).map(|k| crossover(k, e)).collect(),
        }
    }

    pub fn d(&self) -> u64 {
        self.type1.len() as u64
    }

    /// `delta_k` for `k` in `[1 : D+1]`.
    pub fn bound(&self, k: u64) -> f64 {
        if k == self.d() + 1 {
            self.type2
        } else {
            self.type1[k as usize - 1]
        }
    }

    /// `C_k` for `k` in `[0 : D+1]`, with the sentinels `C_0 = +inf` and
    /// `C_{D+1} = 0`.
    pub fn crossover(&self, k: u64) -> f64 {
        match k {
            0 => f64::INFINITY,
            k if k == self.d() + 1 => 0.0,
            k => self.crossovers[k as usize - 1],
        }
    }

    /// `delta_1 ..= delta_{D+1}`.
    pub fn all_bounds(&self) -> Vec<f64> {
        let mut v = self.type1.clone();
        v.push(self.type2);
        v
    }
}

/// Optimal coefficients and the resulting privacy/utility figures.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimalSolution {
    pub config: MechanismConfig,
    /// Binding bound index `k*` in `[1 : D+1]`.
    pub regime: u64,
    /// Optimal singleton-event delta.
    pub delta_star: f64,
    /// `alpha*_1 ..= alpha*_D`.
    pub alphas: Vec<f64>,
    pub variance: f64,
    /// `min(1, (2D+1) delta_star)`.
    pub dp_delta: f64,
}

#[derive(Serialize)]
struct SolutionRepr<'a> {
    eta: f64,
    #[serde(rename = "D")]
    d: u64,
    epsilon: f64,
    regime: u64,
    delta_star: f64,
    dp_delta: f64,
    alphas: &'a [f64],
    variance: f64,
}

impl Serialize for OptimalSolution {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        SolutionRepr {
            eta: self.config.eta(),
            d: self.config.d(),
            epsilon: self.config.epsilon(),
            regime: self.regime,
            delta_star: self.delta_star,
            dp_delta: self.dp_delta,
            alphas: &self.alphas,
            variance: self.variance,
        }
        .serialize(s)
    }
}

/// Computes the optimal `alpha*` in closed form.
pub fn optimal_alphas(config: &MechanismConfig) -> OptimalSolution {
    let d = config.d();
    let (e, b, c) = (config.e(), config.b(), config.c());
    let r = recip(e);
    let regime = select_regime(c, e, d);

    let (delta_star, alphas) = if regime == d + 1 {
        let delta = type2_bound(d, e, b);
        let denom = scaled_sum(r, d, |m| (m + 1) as f64);
        let alphas = (1..=d)
            .map(|j| r.powi(j as i32 - 1) * scaled_sum(r, d - j + 1, |_| 1.0) / denom)
            .collect();
        (delta, alphas)
    } else {
        let delta = type1_bound(regime, e, b, c);
        let step = b * delta;
        let mut alphas = vec![0.0; d as usize];
        let mut prev = c;
        for a in alphas.iter_mut().take(regime as usize) {
            let mut next = r * (prev - step);
            if next < 0.0 && next > -ALPHA_CLAMP {
                next = 0.0;
            }
            *a = next;
            prev = next;
        }
        (delta, alphas)
    };

    let mut solution = OptimalSolution {
        config: *config,
        regime,
        delta_star,
        alphas,
        variance: 0.0,
        dp_delta: 0.0,
    };
    solution.variance = noise_variance(&solution);
    solution.dp_delta = dp_parameters(&solution).1;
    solution
}

/// `(epsilon, min(1, (2D+1) delta_star))`: the event-level guarantee.
pub fn dp_parameters(solution: &OptimalSolution) -> (f64, f64) {
    let d = solution.config.d() as f64;
    let lifted = (2.0 * d + 1.0) * solution.delta_star;
    (solution.config.epsilon(), lifted.min(1.0))
}

/// `(1 - eta) sum_i alpha*_i i^2`.
pub fn noise_variance(solution: &OptimalSolution) -> f64 {
    let weighted: f64 = solution
        .alphas
        .iter()
        .enumerate()
        .map(|(i, a)| a * ((i + 1) * (i + 1)) as f64)
        .sum();
    solution.config.eta_bar() * weighted
}

impl OptimalSolution {
    /// The optimal symmetric noise pmf, usable for every true count `n >= D`.
    pub fn noise_pmf(&self) -> NoisePmf {
        NoisePmf::symmetric(self.config.eta(), &self.alphas)
            .expect("eta and D were validated by MechanismConfig")
    }

    /// Probability that the output lands within `window` of the true count:
    /// `eta + (1 - eta) sum_{i <= window} alpha*_i`.
    pub fn in_range_probability(&self, window: u64) -> f64 {
        let inner: f64 = self.alphas.iter().take(window as usize).sum();
        self.config.eta() + self.config.eta_bar() * inner
    }

    /// Singleton-event delta of the full data-independent matrix at the
    /// design epsilon, `max_z [p(z) - E p(z-1)]_+`.
    ///
    /// The restricted constraint system compares only the "downward"
    /// offsets; the upward comparison at `z = 1`,
    /// `alpha*_1 (1-eta)/2 <= E eta + delta`, is not part of it and fails for
    /// small `eta`. This value is `delta_star` whenever that comparison holds
    /// and larger otherwise.
    pub fn mechanism_singular_delta(&self) -> f64 {
        let pmf = self.noise_pmf();
        let e = self.config.e();
        let d = self.config.d() as i64;
        (-d..=d + 1)
            .map(|z| pmf.mass_at(z) - e * pmf.mass_at(z - 1))
            .fold(0.0, f64::max)
    }
}
