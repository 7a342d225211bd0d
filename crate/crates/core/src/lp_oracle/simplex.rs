//! Dense tableau simplex for small linear programs.
//!
//! Two-phase primal simplex with Bland's smallest-index rule for both the
//! entering and the leaving variable, so the pivot sequence is a pure
//! function of the input. All variables are implicitly non-negative.
//! Once phase II stops, the tableau is rebuilt from the original rows for the
//! final basis and pivoting resumes with a much tighter optimality test, so
//! that programs whose optimum is tiny (say 1e-13) still land on the right
//! vertex. The basic solution is then recomputed with a fresh LU solve.

use std::fmt;

use serde::{Deserialize, Serialize};

/// Tableau entries below this magnitude are treated as zero when pivoting.
pub const PIVOT_TOL: f64 = 1e-10;
/// Reduced costs above `-COST_TOL` count as non-negative (optimality).
const COST_TOL: f64 = 1e-11;
/// Optimality test on a freshly rebuilt tableau, relative to the largest
/// objective coefficient.
const POLISH_COST_TOL: f64 = 1e-15;
const POLISH_ROUNDS: usize = 20;
/// Ratios this close to the minimum count as tied in the ratio test.
const RATIO_TOL: f64 = 1e-12;
/// Phase I restarts from a refactorized tableau at most this often.
const PHASE1_RESTARTS: usize = 3;
/// Residual feasibility tolerance for phase I and post-solve checks.
pub const FEASIBILITY_TOL: f64 = 1e-9;
const MAX_ITERATIONS: usize = 200_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Relation {
    #[serde(rename = "<=")]
    Le,
    #[serde(rename = ">=")]
    Ge,
    #[serde(rename = "=")]
    Eq,
}

impl fmt::Display for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Relation::Le => "<=",
            Relation::Ge => ">=",
            Relation::Eq => "=",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Constraint {
    pub coeffs: Vec<f64>,
    pub relation: Relation,
    pub rhs: f64,
}

/// `minimize objective . x` subject to the constraints and `x >= 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearProgram {
    pub objective: Vec<f64>,
    pub constraints: Vec<Constraint>,
    pub names: Vec<String>,
}

impl LinearProgram {
    pub fn new(names: Vec<String>, objective: Vec<f64>) -> Self {
        assert_eq!(names.len(), objective.len(), "one name per variable");
        LinearProgram {
            objective,
            constraints: Vec::new(),
            names,
        }
    }

    /// Anonymous variables `x0, x1, ...`.
    pub fn with_objective(objective: Vec<f64>) -> Self {
        let names = (0..objective.len()).map(|i| format!("x{i}")).collect();
        LinearProgram::new(names, objective)
    }

    pub fn variable_count(&self) -> usize {
        self.objective.len()
    }

    pub fn add_constraint(&mut self, coeffs: Vec<f64>, relation: Relation, rhs: f64) {
        assert_eq!(coeffs.len(), self.variable_count(), "constraint width");
        self.constraints.push(Constraint {
            coeffs,
            relation,
            rhs,
        });
    }

    /// Largest violation of any constraint or sign condition at `x`.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let mut worst = x.iter().fold(0.0f64, |w, &v| w.max(-v));
        for c in &self.constraints {
            let lhs: f64 = c.coeffs.iter().zip(x).map(|(a, v)| a * v).sum();
            let v = match c.relation {
                Relation::Le => lhs - c.rhs,
                Relation::Ge => c.rhs - lhs,
                Relation::Eq => (lhs - c.rhs).abs(),
            };
            worst = worst.max(v);
        }
        worst
    }

    pub fn objective_value(&self, x: &[f64]) -> f64 {
        self.objective.iter().zip(x).map(|(c, v)| c * v).sum()
    }
}

fn write_row(f: &mut fmt::Formatter<'_>, coeffs: &[f64], names: &[String]) -> fmt::Result {
    let mut first = true;
    for (c, name) in coeffs.iter().zip(names) {
        if *c == 0.0 {
            continue;
        }
        if first {
            write!(f, "{c} {name}")?;
            first = false;
        } else if *c < 0.0 {
            write!(f, " - {} {name}", -c)?;
        } else {
            write!(f, " + {c} {name}")?;
        }
    }
    if first {
        f.write_str("0")?;
    }
    Ok(())
}

/// Plain-text dump, one constraint per line.
impl fmt::Display for LinearProgram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("minimize: ")?;
        write_row(f, &self.objective, &self.names)?;
        writeln!(f)?;
        for (i, c) in self.constraints.iter().enumerate() {
            write!(f, "c{i}: ")?;
            write_row(f, &c.coeffs, &self.names)?;
            writeln!(f, " {} {}", c.relation, c.rhs)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    IterationLimit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LpSolution {
    pub status: LpStatus,
    pub optimum: f64,
    pub assignment: Vec<f64>,
    pub iterations: usize,
}

impl LpSolution {
    pub(super) fn failed(status: LpStatus, iterations: usize) -> Self {
        LpSolution {
            status,
            optimum: f64::NAN,
            assignment: Vec::new(),
            iterations,
        }
    }

    pub fn is_optimal(&self) -> bool {
        self.status == LpStatus::Optimal
    }
}

struct Tableau {
    /// Constraint rows, each `cols + 1` wide (last entry is the rhs).
    rows: Vec<Vec<f64>>,
    /// Reduced-cost row, same width; last entry is minus the objective.
    cost: Vec<f64>,
    basis: Vec<usize>,
    /// Columns that may enter the basis.
    allowed: Vec<bool>,
    iterations: usize,
}

enum Step {
    Optimal,
    /// Optimal among the columns that could pivot; some improving columns
    /// had no usable entry (phase I only).
    Stalled,
    Unbounded,
    IterationLimit,
}

impl Tableau {
    fn width(&self) -> usize {
        self.cost.len() - 1
    }

    fn pivot(&mut self, r: usize, c: usize) {
        let p = self.rows[r][c];
        for v in self.rows[r].iter_mut() {
            *v /= p;
        }
        self.rows[r][c] = 1.0;
        let pivot_row = self.rows[r].clone();
        for (i, row) in self.rows.iter_mut().enumerate() {
            if i == r {
                continue;
            }
            let factor = row[c];
            if factor != 0.0 {
                for (v, pv) in row.iter_mut().zip(&pivot_row) {
                    *v -= factor * pv;
                }
                row[c] = 0.0;
            }
        }
        let factor = self.cost[c];
        if factor != 0.0 {
            for (v, pv) in self.cost.iter_mut().zip(&pivot_row) {
                *v -= factor * pv;
            }
            self.cost[c] = 0.0;
        }
        self.basis[r] = c;
        self.iterations += 1;
    }

    /// With `bounded` set (phase I), an improving column without a usable
    /// pivot entry can only be rounding noise; it is skipped for the rest of
    /// the run instead of reported as unbounded.
    fn run(&mut self, cost_tol: f64, bounded: bool) -> Step {
        let width = self.width();
        let mut skipped = vec![false; width];
        loop {
            if self.iterations >= MAX_ITERATIONS {
                return Step::IterationLimit;
            }
            let entering = (0..width).find(|&j| self.allowed[j] && !skipped[j] && self.cost[j] < -cost_tol);
            let Some(c) = entering else {
                return if skipped.iter().any(|&s| s) { Step::Stalled } else { Step::Optimal };
            };
            match self.leaving_row(c) {
                Some(r) => self.pivot(r, c),
                None if bounded => skipped[c] = true,
                None => return Step::Unbounded,
            }
        }
    }

    /// Minimum-ratio row for entering column `c`. Rows whose ratio is within
    /// rounding of the minimum compete on pivot size (largest wins, then
    /// smallest basic index), which keeps tiny pivots out when a sound one
    /// is available.
    fn leaving_row(&self, c: usize) -> Option<usize> {
        let width = self.width();
        let candidates: Vec<(usize, f64, f64)> = self
            .rows
            .iter()
            .enumerate()
            .filter(|(_, row)| row[c] > PIVOT_TOL)
            .map(|(i, row)| (i, row[width].max(0.0) / row[c], row[c]))
            .collect();
        let min = candidates.iter().map(|&(_, r, _)| r).fold(f64::INFINITY, f64::min);
        let slack = RATIO_TOL * (1.0 + min);
        candidates
            .into_iter()
            .filter(|&(_, r, _)| r <= min + slack)
            .max_by(|a, b| a.2.total_cmp(&b.2).then(self.basis[b.0].cmp(&self.basis[a.0])))
            .map(|(i, _, _)| i)
    }

    fn set_costs(&mut self, costs: &[f64]) {
        let width = self.width();
        let mut row = costs.to_vec();
        row.push(0.0);
        for (i, r) in self.rows.iter().enumerate() {
            let cb = costs[self.basis[i]];
            if cb != 0.0 {
                for (v, a) in row.iter_mut().zip(r) {
                    *v -= cb * a;
                }
            }
        }
        for &b in &self.basis {
            row[b] = 0.0;
        }
        debug_assert_eq!(row.len(), width + 1);
        self.cost = row;
    }
}

/// Solves `A x = b` for square `A` with partial pivoting. Returns `None`
/// when `A` is numerically singular.
fn lu_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for k in 0..n {
        let p = (k..n).max_by(|&i, &j| a[i][k].abs().total_cmp(&a[j][k].abs()))?;
        if a[p][k].abs() < 1e-300 {
            return None;
        }
        a.swap(k, p);
        b.swap(k, p);
        for i in k + 1..n {
            let f = a[i][k] / a[k][k];
            if f != 0.0 {
                for j in k..n {
                    a[i][j] -= f * a[k][j];
                }
                b[i] -= f * b[k];
            }
        }
    }
    let mut x = vec![0.0; n];
    for k in (0..n).rev() {
        let s: f64 = (k + 1..n).map(|j| a[k][j] * x[j]).sum();
        x[k] = (b[k] - s) / a[k][k];
    }
    Some(x)
}

/// Solves the program. Infeasibility and unboundedness are reported through
/// [`LpSolution::status`].
pub fn solve_simplex(lp: &LinearProgram) -> LpSolution {
    let n = lp.variable_count();
    let m = lp.constraints.len();

    // Standard form with non-negative right-hand sides.
    let mut rows: Vec<(Vec<f64>, Relation, f64)> = lp
        .constraints
        .iter()
        .map(|c| {
            if c.rhs < 0.0 {
                let flipped = match c.relation {
                    Relation::Le => Relation::Ge,
                    Relation::Ge => Relation::Le,
                    Relation::Eq => Relation::Eq,
                };
                (c.coeffs.iter().map(|v| -v).collect(), flipped, -c.rhs)
            } else {
                (c.coeffs.clone(), c.relation, c.rhs)
            }
        })
        .collect();

    let slack_count = rows.iter().filter(|r| r.1 != Relation::Eq).count();
    let artificial_count = rows.iter().filter(|r| r.1 != Relation::Le).count();
    let width = n + slack_count + artificial_count;
    let first_artificial = n + slack_count;

    let mut table = Vec::with_capacity(m);
    let mut basis = Vec::with_capacity(m);
    let (mut next_slack, mut next_art) = (n, first_artificial);
    for (coeffs, rel, rhs) in rows.drain(..) {
        let mut row = coeffs;
        row.resize(width + 1, 0.0);
        row[width] = rhs;
        match rel {
            Relation::Le => {
                row[next_slack] = 1.0;
                basis.push(next_slack);
                next_slack += 1;
            }
            Relation::Ge => {
                row[next_slack] = -1.0;
                next_slack += 1;
                row[next_art] = 1.0;
                basis.push(next_art);
                next_art += 1;
            }
            Relation::Eq => {
                row[next_art] = 1.0;
                basis.push(next_art);
                next_art += 1;
            }
        }
        table.push(row);
    }
    let original: Vec<Vec<f64>> = table.clone();

    let mut tab = Tableau {
        rows: table,
        cost: vec![0.0; width + 1],
        basis,
        allowed: vec![true; width],
        iterations: 0,
    };

    // Phase I: minimize the sum of artificials.
    if artificial_count > 0 {
        let phase1: Vec<f64> = (0..width)
            .map(|j| if j >= first_artificial { 1.0 } else { 0.0 })
            .collect();
        tab.set_costs(&phase1);
        let scale = 1.0 + original.iter().map(|r| r[width].abs()).fold(0.0, f64::max);
        let mut restarts = 0;
        loop {
            let step = tab.run(COST_TOL, true);
            if let Step::IterationLimit = step {
                return LpSolution::failed(LpStatus::IterationLimit, tab.iterations);
            }
            let infeasible = -tab.cost[width] > FEASIBILITY_TOL * scale;
            if !infeasible && matches!(step, Step::Optimal) {
                break;
            }
            // Either verdict may come from drift in the tableau: refactorize
            // the current basis from the original rows and carry on.
            let fresh = (restarts < PHASE1_RESTARTS).then(|| rebuild(&tab, &original)).flatten();
            match fresh {
                Some(t) => {
                    tab = t;
                    tab.set_costs(&phase1);
                    restarts += 1;
                }
                None if infeasible => return LpSolution::failed(LpStatus::Infeasible, tab.iterations),
                None => break,
            }
        }
        // Drive remaining (zero-valued) artificials out of the basis; rows
        // where that is impossible are linearly dependent and are dropped.
        let mut r = 0;
        while r < tab.rows.len() {
            if tab.basis[r] >= first_artificial {
                let col = (0..first_artificial).find(|&j| tab.rows[r][j].abs() > PIVOT_TOL);
                match col {
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
        for j in first_artificial..width {
            tab.allowed[j] = false;
        }
    }

    // Phase II.
    let mut costs = lp.objective.clone();
    costs.resize(width, 0.0);
    tab.set_costs(&costs);
    match tab.run(COST_TOL, false) {
        Step::Optimal | Step::Stalled => {}
        Step::Unbounded => return LpSolution::failed(LpStatus::Unbounded, tab.iterations),
        Step::IterationLimit => return LpSolution::failed(LpStatus::IterationLimit, tab.iterations),
    }

    polish(&mut tab, &original, &costs);

    let mut full = vec![0.0; width];
    for (i, &b) in tab.basis.iter().enumerate() {
        full[b] = tab.rows[i][width];
    }
    if let Some(refined) = refine(&original, &tab.basis, width) {
        full = refined;
    }
    let assignment: Vec<f64> = full[..n]
        .iter()
        .map(|&v| if v < 0.0 && v > -FEASIBILITY_TOL { 0.0 } else { v })
        .collect();

    LpSolution {
        status: LpStatus::Optimal,
        optimum: lp.objective_value(&assignment),
        assignment,
        iterations: tab.iterations,
    }
}

/// Rebuilds the tableau for the current basis from the original rows and
/// resumes phase II under [`POLISH_COST_TOL`]. Each round starts from fresh
/// data, so accumulated rounding cannot fake an improving column for long.
/// Gives up silently (keeping the last good basis) if a rebuild fails or a
/// round reports unboundedness, which at this tolerance is rounding noise.
fn polish(tab: &mut Tableau, original: &[Vec<f64>], costs: &[f64]) {
    let tol = POLISH_COST_TOL * costs.iter().fold(1.0f64, |m, c| m.max(c.abs()));
    for _ in 0..POLISH_ROUNDS {
        let Some(mut fresh) = rebuild(tab, original) else {
            return;
        };
        fresh.set_costs(costs);
        let before = fresh.iterations;
        match fresh.run(tol, false) {
            Step::Optimal | Step::Stalled => {}
            Step::Unbounded | Step::IterationLimit => return,
        }
        let moved = fresh.iterations > before;
        *tab = fresh;
        if !moved {
            return;
        }
    }
}

/// Tableau for `tab.basis` computed directly from the original rows by
/// Gauss-Jordan elimination with partial pivoting.
fn rebuild(tab: &Tableau, original: &[Vec<f64>]) -> Option<Tableau> {
    let width = tab.width();
    let k = tab.basis.len();
    let chosen = select_independent_rows(original, &tab.basis, k)?;
    let mut rows: Vec<Vec<f64>> = chosen.iter().map(|&i| original[i].clone()).collect();
    let mut basis = vec![usize::MAX; k];
    let mut done = vec![false; k];
    for &col in &tab.basis {
        let r = (0..k)
            .filter(|&i| !done[i])
            .max_by(|&a, &b| rows[a][col].abs().total_cmp(&rows[b][col].abs()))?;
        if rows[r][col].abs() < 1e-300 {
            return None;
        }
        let p = rows[r][col];
        for v in rows[r].iter_mut() {
            *v /= p;
        }
        rows[r][col] = 1.0;
        let pivot_row = rows[r].clone();
        for (i, row) in rows.iter_mut().enumerate() {
            if i != r && row[col] != 0.0 {
                let f = row[col];
                for (v, pv) in row.iter_mut().zip(&pivot_row) {
                    *v -= f * pv;
                }
                row[col] = 0.0;
            }
        }
        basis[r] = col;
        done[r] = true;
    }
    // A basic solution must stay (numerically) non-negative.
    if rows.iter().any(|r| r[width] < -FEASIBILITY_TOL) {
        return None;
    }
    Some(Tableau {
        rows,
        cost: vec![0.0; width + 1],
        basis,
        allowed: tab.allowed.clone(),
        iterations: tab.iterations,
    })
}

/// Recomputes the basic solution `x_B = A_B^{-1} b` from the original rows.
/// The basis may have fewer columns than rows when dependent rows were
/// dropped; then the first independent subset of rows is used.
fn refine(original: &[Vec<f64>], basis: &[usize], width: usize) -> Option<Vec<f64>> {
    let k = basis.len();
    let rows = select_independent_rows(original, basis, k)?;
    let a: Vec<Vec<f64>> = rows
        .iter()
        .map(|&i| basis.iter().map(|&j| original[i][j]).collect())
        .collect();
    let b: Vec<f64> = rows.iter().map(|&i| original[i][width]).collect();
    let xb = lu_solve(a, b)?;
    let mut full = vec![0.0; width];
    for (&j, v) in basis.iter().zip(xb) {
        full[j] = v;
    }
    // The refined point must still satisfy every original row.
    for row in original {
        let lhs: f64 = (0..width).map(|j| row[j] * full[j]).sum();
        if (lhs - row[width]).abs() > FEASIBILITY_TOL {
            return None;
        }
    }
    Some(full)
}

fn select_independent_rows(original: &[Vec<f64>], basis: &[usize], k: usize) -> Option<Vec<usize>> {
    if original.len() == k {
        return Some((0..k).collect());
    }
    // Greedy Gram-Schmidt style selection on the basis columns.
    let mut chosen: Vec<usize> = Vec::with_capacity(k);
    let mut reduced: Vec<Vec<f64>> = Vec::with_capacity(k);
    for (i, row) in original.iter().enumerate() {
        let mut v: Vec<f64> = basis.iter().map(|&j| row[j]).collect();
        for (u, &pc) in reduced.iter().zip(&pivot_cols(&reduced)) {
            let f = v[pc] / u[pc];
            for (a, b) in v.iter_mut().zip(u) {
                *a -= f * b;
            }
        }
        if v.iter().any(|x| x.abs() > PIVOT_TOL) {
            chosen.push(i);
            reduced.push(v);
            if chosen.len() == k {
                return Some(chosen);
            }
        }
    }
    None
}

fn pivot_cols(reduced: &[Vec<f64>]) -> Vec<usize> {
    reduced
        .iter()
        .map(|u| {
            (0..u.len())
                .max_by(|&a, &b| u[a].abs().total_cmp(&u[b].abs()))
                .unwrap_or(0)
        })
        .collect()
}
