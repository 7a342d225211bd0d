//! Linear programs whose optimum is the smallest singleton-event delta.

use serde::Serialize;

use super::exact::solve_simplex_exact;
use super::simplex::{solve_simplex, LinearProgram, LpSolution, Relation};
use crate::config::MechanismConfig;
use crate::error::{Error, Result};
use crate::noise_family::{make_elementary_pmf, mix_pmfs, NoisePmf};

/// Default cap on general-LP variables.
pub const DEFAULT_VARIABLE_BUDGET: usize = 2000;

/// Builds the restricted program over `(delta, alpha_1..alpha_D)`:
///
/// ```text
/// min delta  s.t.  h a_D              <= delta
///                  h a_i - E h a_{i+1} <= delta      i in [1 : D-1]
///                  eta   - E h a_1     <= delta
///                  a >= 0,  sum a = 1               (h = (1 - eta)/2)
/// ```
pub fn restricted_lp(config: &MechanismConfig) -> LinearProgram {
    let d = config.d() as usize;
    let e = config.e();
    let h = config.eta_bar() / 2.0;
    let mut names = vec!["delta".to_string()];
    names.extend((1..=d).map(|i| format!("alpha{i}")));
    let mut objective = vec![0.0; d + 1];
    objective[0] = 1.0;
    let mut lp = LinearProgram::new(names, objective);

    let mut row = vec![0.0; d + 1];
    row[0] = -1.0;
    row[d] = h;
    lp.add_constraint(row, Relation::Le, 0.0);

    for i in 1..d {
        let mut row = vec![0.0; d + 1];
        row[0] = -1.0;
        row[i] = h;
        row[i + 1] = -e * h;
        lp.add_constraint(row, Relation::Le, 0.0);
    }

    let mut row = vec![0.0; d + 1];
    row[0] = -1.0;
    row[1] = -e * h;
    lp.add_constraint(row, Relation::Le, -config.eta());

    let mut row = vec![1.0; d + 1];
    row[0] = 0.0;
    lp.add_constraint(row, Relation::Eq, 1.0);
    lp
}

/// Solves [`restricted_lp`] in exact arithmetic; the assignment is
/// `[delta, alpha_1, ..]`. At large `epsilon` the optimum drops far below
/// 1e-16 while the rows stay O(1), and a float solver then stops at a
/// neighbouring vertex with a visibly different alpha.
pub fn solve_restricted_lp(config: &MechanismConfig) -> LpSolution {
    solve_simplex_exact(&restricted_lp(config))
}

/// Index of one general-LP coefficient `alpha_{i1, i2, n}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct LeverIndex {
    pub n: u64,
    pub i1: i64,
    pub i2: i64,
}

/// Data-dependent program over every lever of every count in a range.
#[derive(Debug, Clone)]
pub struct GeneralLp {
    pub config: MechanismConfig,
    pub first_count: u64,
    pub last_count: u64,
    /// Variable `k + 1` of the program is `levers[k]`; variable 0 is delta.
    pub levers: Vec<LeverIndex>,
    pub program: LinearProgram,
}

/// Result of [`solve_general_lp`].
#[derive(Debug, Clone)]
pub struct GeneralSolution {
    pub lp: GeneralLp,
    pub solution: LpSolution,
}

fn lever_indices(first: u64, last: u64, d: u64) -> Vec<LeverIndex> {
    let mut v = Vec::new();
    for n in first..=last {
        let a = n.min(d) as i64;
        for i1 in -a..=-1 {
            for i2 in 1..=d as i64 {
                v.push(LeverIndex { n, i1, i2 });
            }
        }
    }
    v
}

impl GeneralLp {
    /// Builds the program for true counts `first..=last`, comparing each
    /// count against both neighbours inside the range at every output
    /// `y`. Rows in which no lever coefficient appears reduce to
    /// `0 <= delta` and are dropped.
    pub fn build(config: &MechanismConfig, first: u64, last: u64, budget: usize) -> Result<Self> {
        if first == 0 || last < first {
            return Err(Error::InvalidConfig(format!(
                "count range [{first}:{last}] must satisfy 1 <= first <= last"
            )));
        }
        let d = config.d();
        let levers = lever_indices(first, last, d);
        let variables = levers.len() + 1;
        if variables > budget {
            return Err(Error::BudgetExceeded { variables, budget });
        }
        let pmfs: Vec<NoisePmf> = levers
            .iter()
            .map(|l| make_elementary_pmf(l.n, l.i1, l.i2, config.eta(), d))
            .collect::<Result<_>>()?;

        let e = config.e();
        let mut names = vec!["delta".to_string()];
        names.extend(levers.iter().map(|l| format!("alpha[{},{},{}]", l.i1, l.i2, l.n)));
        let mut objective = vec![0.0; variables];
        objective[0] = 1.0;
        let mut program = LinearProgram::new(names, objective);

        let y_lo = first.saturating_sub(d) as i64;
        let y_hi = (last + d) as i64;
        for n in first..=last {
            let neighbours = [n.checked_sub(1), Some(n + 1)];
            for m in neighbours.into_iter().flatten() {
                if m < first || m > last {
                    continue;
                }
                for y in y_lo..=y_hi {
                    let mut row = vec![0.0; variables];
                    row[0] = -1.0;
                    let mut any = false;
                    for (k, (l, p)) in levers.iter().zip(&pmfs).enumerate() {
                        let coeff = if l.n == n {
                            p.mass_at(y - n as i64)
                        } else if l.n == m {
                            -e * p.mass_at(y - m as i64)
                        } else {
                            0.0
                        };
                        if coeff != 0.0 {
                            row[k + 1] = coeff;
                            any = true;
                        }
                    }
                    if any {
                        program.add_constraint(row, Relation::Le, 0.0);
                    }
                }
            }
        }
        for n in first..=last {
            let mut row = vec![0.0; variables];
            for (k, l) in levers.iter().enumerate() {
                if l.n == n {
                    row[k + 1] = 1.0;
                }
            }
            program.add_constraint(row, Relation::Eq, 1.0);
        }

        Ok(GeneralLp {
            config: *config,
            first_count: first,
            last_count: last,
            levers,
            program,
        })
    }

    pub fn solve(self) -> GeneralSolution {
        let solution = solve_simplex(&self.program);
        GeneralSolution { lp: self, solution }
    }
}

/// Data-dependent program for counts `1..=N` with the default budget.
pub fn solve_general_lp(max_count: u64, config: &MechanismConfig) -> Result<GeneralSolution> {
    Ok(GeneralLp::build(config, 1, max_count, DEFAULT_VARIABLE_BUDGET)?.solve())
}

impl GeneralSolution {
    /// Noise pmfs induced by the optimal levers, one per count in range.
    pub fn pmfs(&self) -> Result<Vec<NoisePmf>> {
        if !self.solution.is_optimal() {
            return Err(Error::InvalidPmf(format!(
                "general LP finished with status {:?}",
                self.solution.status
            )));
        }
        let cfg = &self.lp.config;
        (self.lp.first_count..=self.lp.last_count)
            .map(|n| {
                let mut weights = Vec::new();
                let mut pmfs = Vec::new();
                for (k, l) in self.lp.levers.iter().enumerate() {
                    if l.n == n {
                        weights.push(self.solution.assignment[k + 1]);
                        pmfs.push(make_elementary_pmf(n, l.i1, l.i2, cfg.eta(), cfg.d())?);
                    }
                }
                // Renormalize away the last ulp so the mixture validator accepts it.
                let total: f64 = weights.iter().sum();
                for w in &mut weights {
                    *w /= total;
                }
                mix_pmfs(&weights, &pmfs)
            })
            .collect()
    }

    pub fn optimum(&self) -> f64 {
        self.solution.optimum
    }
}
