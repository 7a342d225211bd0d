//! The same two-phase Bland simplex in exact rational arithmetic.
//!
//! Every finite `f64` is a rational number, so this solves the program
//! stated by the `f64` data exactly. It is meant for small programs whose
//! optimum sits below double-precision resolution, where the floating-point
//! solver cannot tell neighbouring vertices apart. Bland's rule guarantees
//! termination without any tolerance.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};

use super::simplex::{LinearProgram, LpSolution, LpStatus, Relation};

type Q = BigRational;

fn q(v: f64) -> Q {
    Q::from_float(v).expect("program data must be finite")
}

struct Tableau {
    rows: Vec<Vec<Q>>,
    cost: Vec<Q>,
    basis: Vec<usize>,
    allowed: Vec<bool>,
    iterations: usize,
}

impl Tableau {
    fn width(&self) -> usize {
        self.cost.len() - 1
    }

    fn pivot(&mut self, r: usize, c: usize) {
        let p = self.rows[r][c].clone();
        for v in self.rows[r].iter_mut() {
            *v /= &p;
        }
        let pivot_row = self.rows[r].clone();
        for (i, row) in self.rows.iter_mut().enumerate() {
            if i != r && !row[c].is_zero() {
                let f = row[c].clone();
                for (v, pv) in row.iter_mut().zip(&pivot_row) {
                    if !pv.is_zero() {
                        *v -= &f * pv;
                    }
                }
            }
        }
        if !self.cost[c].is_zero() {
            let f = self.cost[c].clone();
            for (v, pv) in self.cost.iter_mut().zip(&pivot_row) {
                if !pv.is_zero() {
                    *v -= &f * pv;
                }
            }
        }
        self.basis[r] = c;
        self.iterations += 1;
    }

    /// `false` when the program is unbounded.
    fn run(&mut self) -> bool {
        let width = self.width();
        loop {
            let Some(c) = (0..width).find(|&j| self.allowed[j] && self.cost[j].is_negative()) else {
                return true;
            };
            let mut leave: Option<(usize, Q)> = None;
            for (i, row) in self.rows.iter().enumerate() {
                if !row[c].is_positive() {
                    continue;
                }
                let ratio = &row[width] / &row[c];
                let better = match &leave {
                    None => true,
                    Some((best, br)) => ratio < *br || (ratio == *br && self.basis[i] < self.basis[*best]),
                };
                if better {
                    leave = Some((i, ratio));
                }
            }
            match leave {
                Some((r, _)) => self.pivot(r, c),
                None => return false,
            }
        }
    }

    fn set_costs(&mut self, costs: &[Q]) {
        let mut row = costs.to_vec();
        row.push(Q::zero());
        for (i, r) in self.rows.iter().enumerate() {
            let cb = &costs[self.basis[i]];
            if !cb.is_zero() {
                for (v, a) in row.iter_mut().zip(r) {
                    *v -= cb * a;
                }
            }
        }
        self.cost = row;
    }
}

/// Solves the program exactly and rounds the optimal vertex to `f64`.
/// Never reports [`LpStatus::IterationLimit`].
pub fn solve_simplex_exact(lp: &LinearProgram) -> LpSolution {
    let n = lp.variable_count();
    let rows: Vec<(Vec<Q>, Relation, Q)> = lp
        .constraints
        .iter()
        .map(|c| {
            let coeffs: Vec<Q> = c.coeffs.iter().map(|&v| q(v)).collect();
            let rhs = q(c.rhs);
            if rhs.is_negative() {
                let rel = match c.relation {
                    Relation::Le => Relation::Ge,
                    Relation::Ge => Relation::Le,
                    Relation::Eq => Relation::Eq,
                };
                (coeffs.into_iter().map(|v| -v).collect(), rel, -rhs)
            } else {
                (coeffs, c.relation, rhs)
            }
        })
        .collect();

    let slack_count = rows.iter().filter(|r| r.1 != Relation::Eq).count();
    let artificial_count = rows.iter().filter(|r| r.1 != Relation::Le).count();
    let width = n + slack_count + artificial_count;
    let first_artificial = n + slack_count;

    let mut table = Vec::with_capacity(rows.len());
    let mut basis = Vec::with_capacity(rows.len());
    let (mut next_slack, mut next_art) = (n, first_artificial);
    for (mut row, rel, rhs) in rows {
        row.resize(width + 1, Q::zero());
        row[width] = rhs;
        if rel != Relation::Eq {
            row[next_slack] = Q::from_integer(BigInt::from(if rel == Relation::Le { 1 } else { -1 }));
            if rel == Relation::Le {
                basis.push(next_slack);
            }
            next_slack += 1;
        }
        if rel != Relation::Le {
            row[next_art] = Q::from_integer(BigInt::from(1));
            basis.push(next_art);
            next_art += 1;
        }
        table.push(row);
    }

    let mut tab = Tableau {
        rows: table,
        cost: vec![Q::zero(); width + 1],
        basis,
        allowed: vec![true; width],
        iterations: 0,
    };

    if artificial_count > 0 {
        let one = Q::from_integer(BigInt::from(1));
        let phase1: Vec<Q> = (0..width)
            .map(|j| if j >= first_artificial { one.clone() } else { Q::zero() })
            .collect();
        tab.set_costs(&phase1);
        let bounded = tab.run();
        debug_assert!(bounded, "phase I objective is bounded below by zero");
        if !tab.cost[width].is_zero() {
            return LpSolution::failed(LpStatus::Infeasible, tab.iterations);
        }
        let mut r = 0;
        while r < tab.rows.len() {
            if tab.basis[r] >= first_artificial {
                match (0..first_artificial).find(|&j| !tab.rows[r][j].is_zero()) {
                    Some(c) => tab.pivot(r, c),
                    None => {
                        tab.rows.remove(r);
                        tab.basis.remove(r);
                        continue;
                    }
                }
            }
            r += 1;
        }
        for allowed in &mut tab.allowed[first_artificial..] {
            *allowed = false;
        }
    }

    let mut costs: Vec<Q> = lp.objective.iter().map(|&v| q(v)).collect();
    costs.resize(width, Q::zero());
    tab.set_costs(&costs);
    if !tab.run() {
        return LpSolution::failed(LpStatus::Unbounded, tab.iterations);
    }

    let mut exact = vec![Q::zero(); n];
    for (i, &b) in tab.basis.iter().enumerate() {
        if b < n {
            exact[b] = tab.rows[i][width].clone();
        }
    }
    let optimum: Q = costs[..n].iter().zip(&exact).map(|(c, x)| c * x).sum();
    LpSolution {
        status: LpStatus::Optimal,
        optimum: optimum.to_f64().unwrap_or(f64::NAN),
        assignment: exact.iter().map(|x| x.to_f64().unwrap_or(f64::NAN)).collect(),
        iterations: tab.iterations,
    }
}
