//! Exact delta of a mechanism matrix at a given epsilon.

use serde::{Deserialize, Serialize};

use crate::noise_family::MechanismMatrix;

/// Which neighbour a column is compared against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    /// `p(y|n)` against `p(y|n+1)`.
    Up,
    /// `p(y|n)` against `p(y|n-1)`.
    Down,
}

/// Location of the worst singleton gap.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Witness {
    pub n: i64,
    pub direction: Direction,
    pub y: i64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SingularDelta {
    pub delta: f64,
    pub witness: Option<Witness>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeltaAudit {
    pub epsilon: f64,
    pub singular_delta: f64,
    pub event_delta: f64,
    pub worst_singleton: Option<Witness>,
    /// `min(1, (2D+1) singular_delta)`.
    pub bound_2d1: f64,
}

fn adjacent_pairs(m: &MechanismMatrix) -> impl Iterator<Item = (usize, usize, Direction)> {
    let cols = m.column_count();
    (0..cols.saturating_sub(1)).flat_map(|c| [(c, c + 1, Direction::Up), (c + 1, c, Direction::Down)])
}

/// `max_{n, n' = n±1, y} [p(y|n) - e^eps p(y|n')]`, floored at 0.
pub fn singular_delta(m: &MechanismMatrix, epsilon: f64) -> SingularDelta {
    let e = epsilon.exp();
    let mut best = SingularDelta {
        delta: 0.0,
        witness: None,
    };
    for (a, b, direction) in adjacent_pairs(m) {
        let (ca, cb) = (&m.columns[a], &m.columns[b]);
        for (r, (&p, &q)) in ca.iter().zip(cb).enumerate() {
            let gap = p - e * q;
            if gap > best.delta {
                best = SingularDelta {
                    delta: gap,
                    witness: Some(Witness {
                        n: m.first_count + a as i64,
                        direction,
                        y: m.y_min + r as i64,
                    }),
                };
            }
        }
    }
    best
}

/// Exact event-level delta: the worst event for a pair of columns is the set
/// of outputs with a positive gap, so this is
/// `max_{n, n'} sum_y [p(y|n) - e^eps p(y|n')]_+`.
pub fn event_delta(m: &MechanismMatrix, epsilon: f64) -> f64 {
    let e = epsilon.exp();
    adjacent_pairs(m)
        .map(|(a, b, _)| {
            m.columns[a]
                .iter()
                .zip(&m.columns[b])
                .map(|(&p, &q)| (p - e * q).max(0.0))
                .sum::<f64>()
        })
        .fold(0.0, f64::max)
        .min(1.0)
}

pub fn audit_delta(m: &MechanismMatrix, epsilon: f64) -> DeltaAudit {
    let s = singular_delta(m, epsilon);
    DeltaAudit {
        epsilon,
        singular_delta: s.delta,
        event_delta: event_delta(m, epsilon),
        worst_singleton: s.witness,
        bound_2d1: ((2 * m.d + 1) as f64 * s.delta).min(1.0),
    }
}

impl DeltaAudit {
    /// `0 <= singular <= event <= min(1, (2D+1) singular)` up to `tol`.
    pub fn sandwich_holds(&self, tol: f64) -> bool {
        self.singular_delta >= 0.0
            && self.singular_delta <= self.event_delta + tol
            && self.event_delta <= self.bound_2d1 + tol
            && self.event_delta <= 1.0
    }
}

/// Smallest epsilon in `[0, 20]` at which the singular delta drops to
/// `target`, by 60 bisection steps. `None` if even `epsilon = 20` is not
/// enough.
pub fn min_epsilon_for_singular_delta(m: &MechanismMatrix, target: f64) -> Option<f64> {
    let meets = |eps: f64| singular_delta(m, eps).delta <= target;
    let (mut lo, mut hi) = (0.0, 20.0);
    if meets(lo) {
        return Some(0.0);
    }
    if !meets(hi) {
        return None;
    }
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if meets(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Some(hi)
}
