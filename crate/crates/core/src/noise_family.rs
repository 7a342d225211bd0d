//! Integer noise distributions satisfying the three noise axioms:
//!
//! * **P1** support: `Z` takes values in `[-A:D]` with `A = min(n, D)`;
//! * **P2** correct release: `P(Z = 0) = eta`;
//! * **P3** zero bias: `E[Z] = 0`.
//!
//! The building blocks are three-point "lever" pmfs with mass `eta` at zero
//! and the remaining `1 - eta` split between one negative and one positive
//! offset so that the mean vanishes. Any convex mixture of levers for the
//! same `n` again satisfies P1-P3.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Absolute tolerance for every property check in this module.
pub const PROPERTY_TOL: f64 = 1e-12;

/// Noise pmf for a given true count `n`, stored by offset `z` rather than by
/// absolute output so it can be reused across counts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PmfRepr", into = "PmfRepr")]
pub struct NoisePmf {
    n: u64,
    eta: f64,
    d: u64,
    mass: BTreeMap<i64, f64>,
}

#[derive(Serialize, Deserialize)]
struct PmfRepr {
    n: u64,
    eta: f64,
    #[serde(rename = "D")]
    d: u64,
    mass: Vec<(i64, f64)>,
}

impl From<NoisePmf> for PmfRepr {
    fn from(p: NoisePmf) -> Self {
        PmfRepr {
            n: p.n,
            eta: p.eta,
            d: p.d,
            mass: p.mass.into_iter().collect(),
        }
    }
}

impl TryFrom<PmfRepr> for NoisePmf {
    type Error = Error;

    fn try_from(r: PmfRepr) -> Result<Self> {
        NoisePmf::from_masses(r.n, r.eta, r.d, r.mass)
    }
}

impl NoisePmf {
    /// Builds a pmf from raw `(offset, probability)` pairs without checking
    /// P1-P3; use [`validate_properties`] for that. Repeated offsets are
    /// summed and explicit zeros are dropped.
    pub fn from_masses<I>(n: u64, eta: f64, d: u64, masses: I) -> Result<Self>
    where
        I: IntoIterator<Item = (i64, f64)>,
    {
        if n == 0 {
            return Err(Error::InvalidPmf(
                "n = 0 is not supported: zero bias is impossible at n = 0".into(),
            ));
        }
        if d == 0 {
            return Err(Error::InvalidPmf("D must be at least 1".into()));
        }
        let mut mass = BTreeMap::new();
        for (z, p) in masses {
            if !p.is_finite() {
                return Err(Error::InvalidPmf(format!("non-finite mass {p} at z={z}")));
            }
            *mass.entry(z).or_insert(0.0) += p;
        }
        mass.retain(|_, p| *p != 0.0);
        Ok(NoisePmf { n, eta, d, mass })
    }

    /// Data-independent symmetric pmf: `eta` at 0 and `alphas[i-1] * (1-eta)/2`
    /// at `±i`. Valid for every count `n >= D`; tagged with `n = D`.
    pub fn symmetric(eta: f64, alphas: &[f64]) -> Result<Self> {
        let d = alphas.len() as u64;
        let half = (1.0 - eta) / 2.0;
        let mut masses = vec![(0, eta)];
        for (i, &a) in alphas.iter().enumerate() {
            let z = i as i64 + 1;
            masses.push((-z, half * a));
            masses.push((z, half * a));
        }
        NoisePmf::from_masses(d.max(1), eta, d, masses)
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn d(&self) -> u64 {
        self.d
    }

    /// `A = min(n, D)`.
    pub fn a(&self) -> u64 {
        self.n.min(self.d)
    }

    /// Lowest admissible offset, `-A`.
    pub fn support_lo(&self) -> i64 {
        -(self.a() as i64)
    }

    /// Highest admissible offset, `D`.
    pub fn support_hi(&self) -> i64 {
        self.d as i64
    }

    pub fn mass_at(&self, z: i64) -> f64 {
        self.mass.get(&z).copied().unwrap_or(0.0)
    }

    /// Nonzero masses in increasing offset order.
    pub fn iter(&self) -> impl Iterator<Item = (i64, f64)> + '_ {
        self.mass.iter().map(|(&z, &p)| (z, p))
    }

    pub fn total_mass(&self) -> f64 {
        self.mass.values().sum()
    }

    pub fn mean(&self) -> f64 {
        self.iter().map(|(z, p)| z as f64 * p).sum()
    }

    /// Second moment about zero; equals the variance when P3 holds.
    pub fn second_moment(&self) -> f64 {
        self.iter().map(|(z, p)| (z * z) as f64 * p).sum()
    }

    /// Re-tags the pmf for another true count, provided its mass still fits
    /// inside `[-min(n, D) : D]`.
    pub fn for_count(&self, n: u64) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidPmf("n = 0 is not supported".into()));
        }
        let lo = -(n.min(self.d) as i64);
        if let Some((&z, _)) = self.mass.iter().next() {
            if z < lo {
                return Err(Error::InvalidPmf(format!(
                    "mass at z={z} falls below -min(n, D) = {lo} for n={n}"
                )));
            }
        }
        let mut out = self.clone();
        out.n = n;
        Ok(out)
    }
}

/// Three-point pmf with mass `eta` at 0, `(1-eta) i2/(i2+|i1|)` at `i1` and
/// `(1-eta) |i1|/(i2+|i1|)` at `i2`.
pub fn make_elementary_pmf(n: u64, i1: i64, i2: i64, eta: f64, d: u64) -> Result<NoisePmf> {
    if n == 0 {
        return Err(Error::InvalidPmf("n = 0 is not supported".into()));
    }
    if !(eta > 0.0 && eta < 1.0) {
        return Err(Error::InvalidConfig(format!("eta must lie in (0, 1), got {eta}")));
    }
    let a = n.min(d);
    if d == 0 || i1 < -(a as i64) || i1 > -1 || i2 < 1 || i2 > d as i64 {
        return Err(Error::InvalidElementaryIndex { i1, i2, n, d, a });
    }
    let eta_bar = 1.0 - eta;
    let neg = i1.unsigned_abs() as f64;
    let pos = i2 as f64;
    let span = pos + neg;
    NoisePmf::from_masses(
        n,
        eta,
        d,
        [(i1, eta_bar * pos / span), (0, eta), (i2, eta_bar * neg / span)],
    )
}

/// Pointwise convex combination of pmfs that share `n`, `eta` and `D`.
pub fn mix_pmfs(weights: &[f64], pmfs: &[NoisePmf]) -> Result<NoisePmf> {
    if weights.len() != pmfs.len() {
        return Err(Error::InvalidWeights(format!(
            "{} weights for {} pmfs",
            weights.len(),
            pmfs.len()
        )));
    }
    let first = pmfs
        .first()
        .ok_or_else(|| Error::InvalidWeights("empty mixture".into()))?;
    if let Some(w) = weights.iter().find(|w| !(**w >= 0.0) || !w.is_finite()) {
        return Err(Error::InvalidWeights(format!("weight {w} is not a probability")));
    }
    let total: f64 = weights.iter().sum();
    if (total - 1.0).abs() > PROPERTY_TOL {
        return Err(Error::InvalidWeights(format!("weights sum to {total}, not 1")));
    }
    for p in &pmfs[1..] {
        if p.n != first.n || p.d != first.d || p.eta != first.eta {
            return Err(Error::MismatchedPmfs(format!(
                "(n={}, eta={}, D={}) vs (n={}, eta={}, D={})",
                first.n, first.eta, first.d, p.n, p.eta, p.d
            )));
        }
    }
    let mixed = weights
        .iter()
        .zip(pmfs)
        .flat_map(|(&w, p)| p.iter().map(move |(z, m)| (z, w * m)));
    NoisePmf::from_masses(first.n, first.eta, first.d, mixed)
}

/// Noise axiom (or normalization) that a pmf can violate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Property {
    P1,
    P2,
    P3,
    #[serde(rename = "NORMALIZATION")]
    Normalization,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub property: Property,
    /// Offending offset for P1/negative mass, or the offending statistic.
    pub value: f64,
    /// Size of the violation.
    pub magnitude: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub passed: bool,
    pub violations: Vec<Violation>,
}

/// Checks P1-P3 and normalization, each at absolute tolerance 1e-12.
pub fn validate_properties(pmf: &NoisePmf) -> ValidationReport {
    let mut violations = Vec::new();
    let (lo, hi) = (pmf.support_lo(), pmf.support_hi());
    for (z, p) in pmf.iter() {
        if (z < lo || z > hi) && p.abs() > PROPERTY_TOL {
            violations.push(Violation {
                property: Property::P1,
                value: z as f64,
                magnitude: p.abs(),
            });
        }
        if p < -PROPERTY_TOL {
            violations.push(Violation {
                property: Property::Normalization,
                value: z as f64,
                magnitude: -p,
            });
        }
    }
    let p0 = pmf.mass_at(0);
    if (p0 - pmf.eta).abs() > PROPERTY_TOL {
        violations.push(Violation {
            property: Property::P2,
            value: p0,
            magnitude: (p0 - pmf.eta).abs(),
        });
    }
    let mean = pmf.mean();
    if mean.abs() > PROPERTY_TOL {
        violations.push(Violation {
            property: Property::P3,
            value: mean,
            magnitude: mean.abs(),
        });
    }
    let total = pmf.total_mass();
    if (total - 1.0).abs() > PROPERTY_TOL {
        violations.push(Violation {
            property: Property::Normalization,
            value: total,
            magnitude: (total - 1.0).abs(),
        });
    }
    ValidationReport {
        passed: violations.is_empty(),
        violations,
    }
}

/// Distribution of `Y = n + Z` over `y` in `[0 : N + D]`, indexed by `y`.
pub fn mechanism_column(pmf: &NoisePmf, n: u64, max_count: u64) -> Result<Vec<f64>> {
    if n == 0 || n > max_count {
        return Err(Error::CountOutOfRange { n, max: max_count });
    }
    if pmf.n != n {
        return Err(Error::InvalidPmf(format!(
            "pmf is tailored to n={}, column requested for n={n}",
            pmf.n
        )));
    }
    let rows = (max_count + pmf.d + 1) as usize;
    let mut column = vec![0.0; rows];
    for (z, p) in pmf.iter() {
        let y = n as i64 + z;
        if y < 0 || y >= rows as i64 {
            return Err(Error::InvalidPmf(format!(
                "offset {z} puts output y={y} outside [0:{}]",
                rows - 1
            )));
        }
        column[y as usize] += p;
    }
    Ok(column)
}

/// Table `p_Y(y | n)` over a run of consecutive true counts. Row `r` of every
/// column holds the probability of output `y = y_min + r`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MechanismMatrix {
    /// Half-width of the noise support the mechanism claims; sets the
    /// `2D + 1` event-lifting factor.
    #[serde(rename = "D")]
    pub d: u64,
    pub first_count: i64,
    pub y_min: i64,
    pub columns: Vec<Vec<f64>>,
}

impl MechanismMatrix {
    /// Wraps raw columns after checking shape and normalization (1e-9,
    /// loose enough for truncated infinite-support noise).
    pub fn from_columns(d: u64, first_count: i64, y_min: i64, columns: Vec<Vec<f64>>) -> Result<Self> {
        let rows = columns.first().map(Vec::len).unwrap_or(0);
        if rows == 0 {
            return Err(Error::InvalidMatrix("no columns or empty columns".into()));
        }
        for (i, c) in columns.iter().enumerate() {
            if c.len() != rows {
                return Err(Error::InvalidMatrix(format!(
                    "column {i} has {} rows, expected {rows}",
                    c.len()
                )));
            }
            if c.iter().any(|p| !p.is_finite() || *p < 0.0) {
                return Err(Error::InvalidMatrix(format!("column {i} has an invalid entry")));
            }
            let total: f64 = c.iter().sum();
            if (total - 1.0).abs() > 1e-9 {
                return Err(Error::InvalidMatrix(format!("column {i} sums to {total}")));
            }
        }
        Ok(MechanismMatrix {
            d,
            first_count,
            y_min,
            columns,
        })
    }

    /// Matrix of the general mechanism: one pmf per count `1..=N`, rows
    /// `y in [0 : N + D]`.
    pub fn from_pmfs(pmfs: &[NoisePmf]) -> Result<Self> {
        let first = pmfs
            .first()
            .ok_or_else(|| Error::InvalidMatrix("no pmfs".into()))?;
        let max_count = first.n + pmfs.len() as u64 - 1;
        let columns = pmfs
            .iter()
            .enumerate()
            .map(|(i, p)| {
                if p.n != first.n + i as u64 || p.d != first.d {
                    return Err(Error::InvalidMatrix(
                        "pmfs must cover consecutive counts with a common D".into(),
                    ));
                }
                mechanism_column(p, p.n, max_count)
            })
            .collect::<Result<Vec<_>>>()?;
        MechanismMatrix::from_columns(first.d, first.n as i64, 0, columns)
    }

    /// Matrix of an additive mechanism with the same noise for every count
    /// in `first..=last`. The noise is given as `(offset, mass)` pairs.
    pub fn additive<I>(d: u64, noise: I, first: i64, last: i64) -> Result<Self>
    where
        I: IntoIterator<Item = (i64, f64)>,
    {
        let noise: Vec<(i64, f64)> = noise.into_iter().collect();
        if last <= first {
            return Err(Error::InvalidMatrix("need at least two counts".into()));
        }
        let zmin = noise.iter().map(|&(z, _)| z).min().unwrap_or(0);
        let zmax = noise.iter().map(|&(z, _)| z).max().unwrap_or(0);
        let y_min = first + zmin;
        let rows = (last + zmax - y_min + 1) as usize;
        let columns = (first..=last)
            .map(|n| {
                let mut col = vec![0.0; rows];
                for &(z, p) in &noise {
                    col[(n + z - y_min) as usize] += p;
                }
                col
            })
            .collect();
        MechanismMatrix::from_columns(d, first, y_min, columns)
    }

    pub fn column_count(&self) -> usize {
        self.columns.len()
    }

    pub fn row_count(&self) -> usize {
        self.columns.first().map(Vec::len).unwrap_or(0)
    }

    /// `p_Y(y | n)`, zero outside the stored window.
    pub fn prob(&self, y: i64, n: i64) -> f64 {
        let c = n - self.first_count;
        let r = y - self.y_min;
        if c < 0 || r < 0 || c as usize >= self.columns.len() || r as usize >= self.row_count() {
            return 0.0;
        }
        self.columns[c as usize][r as usize]
    }
}
