//! Dense two-phase primal simplex.
//!
//! Problems are stated as
//!
//! ```text
//! maximize    cᵀx
//! subject to  G x ≤ h,   E x = f,   l ≤ x ≤ u
//! ```
//!
//! with `l = 0` and `u = +∞` unless set. Pivoting uses Bland's rule (lowest
//! eligible column enters, ratio ties go to the lowest basic index), so the
//! returned vertex is a deterministic function of the input and options.

use serde::{Deserialize, Serialize};

use crate::error::LpError;

/// One linear row in sparse `(column, coefficient)` form.
#[derive(Clone, Debug, PartialEq)]
pub struct Constraint {
    pub coeffs: Vec<(usize, f64)>,
    pub rhs: f64,
}

impl Constraint {
    fn eval(&self, x: &[f64]) -> f64 {
        self.coeffs.iter().map(|&(j, a)| a * x[j]).sum()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LinearProgram {
    num_vars: usize,
    objective: Vec<f64>,
    inequalities: Vec<Constraint>,
    equalities: Vec<Constraint>,
    lower: Vec<f64>,
    upper: Vec<Option<f64>>,
}

impl LinearProgram {
    pub fn new(num_vars: usize) -> Self {
        LinearProgram {
            num_vars,
            objective: vec![0.0; num_vars],
            inequalities: Vec::new(),
            equalities: Vec::new(),
            lower: vec![0.0; num_vars],
            upper: vec![None; num_vars],
        }
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn objective(&self) -> &[f64] {
        &self.objective
    }

    pub fn inequalities(&self) -> &[Constraint] {
        &self.inequalities
    }

    pub fn equalities(&self) -> &[Constraint] {
        &self.equalities
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[Option<f64>] {
        &self.upper
    }

    /// Replaces the objective (maximized).
    pub fn maximize(&mut self, objective: Vec<f64>) -> &mut Self {
        self.objective = objective;
        self
    }

    pub fn set_objective_coeff(&mut self, j: usize, c: f64) -> &mut Self {
        self.objective[j] = c;
        self
    }

    /// Adds `Σ a_j x_j ≤ rhs`.
    pub fn add_le(&mut self, coeffs: Vec<(usize, f64)>, rhs: f64) -> &mut Self {
        self.inequalities.push(Constraint { coeffs, rhs });
        self
    }

    /// Adds `Σ a_j x_j ≥ rhs`, stored as its negation.
    pub fn add_ge(&mut self, coeffs: Vec<(usize, f64)>, rhs: f64) -> &mut Self {
        let coeffs = coeffs.into_iter().map(|(j, a)| (j, -a)).collect();
        self.inequalities.push(Constraint { coeffs, rhs: -rhs });
        self
    }

    pub fn add_eq(&mut self, coeffs: Vec<(usize, f64)>, rhs: f64) -> &mut Self {
        self.equalities.push(Constraint { coeffs, rhs });
        self
    }

    pub fn set_lower(&mut self, j: usize, lower: f64) -> &mut Self {
        self.lower[j] = lower;
        self
    }

    pub fn set_upper(&mut self, j: usize, upper: f64) -> &mut Self {
        self.upper[j] = Some(upper);
        self
    }

    pub fn set_bounds(&mut self, j: usize, lower: f64, upper: f64) -> &mut Self {
        self.lower[j] = lower;
        self.upper[j] = Some(upper);
        self
    }

    pub fn objective_value(&self, x: &[f64]) -> f64 {
        self.objective.iter().zip(x).map(|(c, v)| c * v).sum()
    }

    /// Checks dimensions and finiteness of every coefficient.
    pub fn validate(&self) -> Result<(), LpError> {
        let n = self.num_vars;
        if self.objective.len() != n {
            return Err(LpError::Dimension(format!(
                "objective has {} coefficients for {} variables",
                self.objective.len(),
                n
            )));
        }
        if self.lower.len() != n || self.upper.len() != n {
            return Err(LpError::Dimension("bound vectors".into()));
        }
        if let Some(j) = self.objective.iter().position(|c| !c.is_finite()) {
            return Err(LpError::NonFinite(format!("objective coefficient {j}")));
        }
        for (j, (&l, u)) in self.lower.iter().zip(&self.upper).enumerate() {
            if !l.is_finite() || u.is_some_and(|u| !u.is_finite()) {
                return Err(LpError::NonFinite(format!("bounds of variable {j}")));
            }
        }
        let families = [("inequality", &self.inequalities), ("equality", &self.equalities)];
        for (name, rows) in families {
            for (r, row) in rows.iter().enumerate() {
                if !row.rhs.is_finite() {
                    return Err(LpError::NonFinite(format!("{name} row {r} rhs")));
                }
                for &(j, a) in &row.coeffs {
                    if j >= n {
                        return Err(LpError::Dimension(format!(
                            "{name} row {r} references variable {j} of {n}"
                        )));
                    }
                    if !a.is_finite() {
                        return Err(LpError::NonFinite(format!("{name} row {r}, variable {j}")));
                    }
                }
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    IterationLimit,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LpSolution {
    pub status: LpStatus,
    /// Primal point. Meaningful only when `status` is `Optimal`.
    pub x: Vec<f64>,
    pub objective: f64,
    pub iterations: usize,
}

impl LpSolution {
    pub fn is_optimal(&self) -> bool {
        self.status == LpStatus::Optimal
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolverOptions {
    /// Absolute feasibility tolerance.
    pub tol_feas: f64,
    /// Smallest magnitude accepted as a pivot element.
    pub tol_pivot: f64,
    /// Reduced-cost threshold for entering columns.
    pub tol_opt: f64,
    pub max_iterations: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            tol_feas: 1e-8,
            tol_pivot: 1e-10,
            tol_opt: 1e-9,
            max_iterations: 200_000,
        }
    }
}

pub fn solve(lp: &LinearProgram) -> Result<LpSolution, LpError> {
    solve_with(lp, &SolverOptions::default())
}

pub fn solve_with(lp: &LinearProgram, opts: &SolverOptions) -> Result<LpSolution, LpError> {
    lp.validate()?;
    let n = lp.num_vars;

    // Shift to y = x - l ≥ 0 and collect rows as (dense coeffs, rhs, is_equality).
    let mut rows: Vec<(Vec<f64>, f64, bool)> = Vec::new();
    let mut push_row = |c: &Constraint, is_eq: bool| {
        let mut dense = vec![0.0; n];
        for &(j, a) in &c.coeffs {
            dense[j] += a;
        }
        let shift: f64 = dense.iter().zip(&lp.lower).map(|(a, l)| a * l).sum();
        rows.push((dense, c.rhs - shift, is_eq));
    };
    for c in &lp.inequalities {
        push_row(c, false);
    }
    for c in &lp.equalities {
        push_row(c, true);
    }
    for (j, u) in lp.upper.iter().enumerate() {
        if let Some(u) = u {
            let width = u - lp.lower[j];
            if width < -opts.tol_feas {
                return Ok(infeasible(n, 0));
            }
            let mut dense = vec![0.0; n];
            dense[j] = 1.0;
            rows.push((dense, width.max(0.0), false));
        }
    }

    let mut tab = Tableau::build(n, &rows);
    let scale = rows.iter().fold(1.0_f64, |m, r| m.max(r.1.abs()));

    // Phase 1: maximize -Σ artificials.
    if tab.num_art > 0 {
        let mut cost = vec![0.0; tab.cols];
        for c in cost.iter_mut().skip(tab.art_start) {
            *c = -1.0;
        }
        tab.set_objective(&cost);
        match tab.run(tab.cols, opts) {
            Phase::Optimal => {}
            Phase::IterationLimit => {
                return Ok(LpSolution {
                    status: LpStatus::IterationLimit,
                    x: vec![f64::NAN; n],
                    objective: f64::NAN,
                    iterations: tab.iterations,
                })
            }
            // The phase-1 objective is bounded above by zero.
            Phase::Unbounded => unreachable!("phase 1 cannot be unbounded"),
        }
        if tab.obj_value() < -opts.tol_feas * scale {
            return Ok(infeasible(n, tab.iterations));
        }
        tab.drive_out_artificials(opts);
    }

    // Phase 2 on the original objective; artificial columns may not re-enter.
    let mut cost = vec![0.0; tab.cols];
    cost[..n].copy_from_slice(&lp.objective);
    tab.set_objective(&cost);
    let status = match tab.run(tab.art_start, opts) {
        Phase::Optimal => LpStatus::Optimal,
        Phase::Unbounded => LpStatus::Unbounded,
        Phase::IterationLimit => LpStatus::IterationLimit,
    };
    if status != LpStatus::Optimal {
        return Ok(LpSolution {
            status,
            x: vec![f64::NAN; n],
            objective: f64::NAN,
            iterations: tab.iterations,
        });
    }

    let mut x = lp.lower.clone();
    for (r, &b) in tab.basis.iter().enumerate() {
        if b < n {
            let y = tab.rhs(r);
            x[b] += if y <= opts.tol_feas { 0.0 } else { y };
        }
    }
    for (j, u) in lp.upper.iter().enumerate() {
        if let Some(u) = *u {
            x[j] = x[j].min(u);
        }
    }
    Ok(LpSolution {
        status,
        objective: lp.objective_value(&x),
        x,
        iterations: tab.iterations,
    })
}

fn infeasible(n: usize, iterations: usize) -> LpSolution {
    LpSolution {
        status: LpStatus::Infeasible,
        x: vec![f64::NAN; n],
        objective: f64::NAN,
        iterations,
    }
}

enum Phase {
    Optimal,
    Unbounded,
    IterationLimit,
}

/// Dense simplex tableau. Columns are `[structural | slack | artificial]`;
/// the last entry of each row holds the right-hand side.
struct Tableau {
    cols: usize,
    art_start: usize,
    num_art: usize,
    width: usize,
    data: Vec<f64>,
    /// Reduced costs `c_j - c_Bᵀ B⁻¹ A_j`; last entry is `-c_Bᵀ B⁻¹ b`.
    obj: Vec<f64>,
    basis: Vec<usize>,
    iterations: usize,
}

impl Tableau {
    fn build(n: usize, rows: &[(Vec<f64>, f64, bool)]) -> Tableau {
        let num_slack = rows.iter().filter(|r| !r.2).count();
        let num_art = rows.iter().filter(|r| r.2 || r.1 < 0.0).count();
        let slack_start = n;
        let art_start = n + num_slack;
        let cols = art_start + num_art;
        let width = cols + 1;
        let m = rows.len();
        let mut data = vec![0.0; m * width];
        let mut basis = Vec::with_capacity(m);
        let (mut s, mut a) = (slack_start, art_start);
        for (r, (coeffs, rhs, is_eq)) in rows.iter().enumerate() {
            let sign = if *rhs < 0.0 { -1.0 } else { 1.0 };
            let row = &mut data[r * width..(r + 1) * width];
            for (dst, c) in row.iter_mut().zip(coeffs) {
                *dst = sign * c;
            }
            row[cols] = sign * rhs;
            if !is_eq {
                row[s] = sign;
                if sign > 0.0 {
                    basis.push(s);
                }
                s += 1;
            }
            if *is_eq || sign < 0.0 {
                row[a] = 1.0;
                basis.push(a);
                a += 1;
            }
        }
        Tableau {
            cols,
            art_start,
            num_art,
            width,
            data,
            obj: vec![0.0; width],
            basis,
            iterations: 0,
        }
    }

    fn m(&self) -> usize {
        self.basis.len()
    }

    fn at(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.width + c]
    }

    fn rhs(&self, r: usize) -> f64 {
        self.at(r, self.cols)
    }

    fn obj_value(&self) -> f64 {
        -self.obj[self.cols]
    }

    fn set_objective(&mut self, cost: &[f64]) {
        self.obj.iter_mut().for_each(|v| *v = 0.0);
        self.obj[..self.cols].copy_from_slice(cost);
        for r in 0..self.m() {
            let cb = cost[self.basis[r]];
            if cb != 0.0 {
                let row = &self.data[r * self.width..(r + 1) * self.width];
                for (o, v) in self.obj.iter_mut().zip(row) {
                    *o -= cb * v;
                }
            }
        }
    }

    fn pivot(&mut self, pr: usize, pc: usize) {
        let w = self.width;
        let inv = 1.0 / self.at(pr, pc);
        for v in &mut self.data[pr * w..(pr + 1) * w] {
            *v *= inv;
        }
        self.data[pr * w + pc] = 1.0;
        let pivot_row = self.data[pr * w..(pr + 1) * w].to_vec();
        for r in 0..self.m() {
            if r == pr {
                continue;
            }
            let f = self.data[r * w + pc];
            if f != 0.0 {
                let row = &mut self.data[r * w..(r + 1) * w];
                for (v, p) in row.iter_mut().zip(&pivot_row) {
                    *v -= f * p;
                }
                row[pc] = 0.0;
            }
        }
        let f = self.obj[pc];
        if f != 0.0 {
            for (v, p) in self.obj.iter_mut().zip(&pivot_row) {
                *v -= f * p;
            }
            self.obj[pc] = 0.0;
        }
        self.basis[pr] = pc;
        self.iterations += 1;
    }

    /// Bland's rule iterations over columns `0..allowed`.
    fn run(&mut self, allowed: usize, opts: &SolverOptions) -> Phase {
        loop {
            if self.iterations >= opts.max_iterations {
                return Phase::IterationLimit;
            }
            let Some(enter) = (0..allowed).find(|&j| self.obj[j] > opts.tol_opt) else {
                return Phase::Optimal;
            };
            let mut leave: Option<(usize, f64)> = None;
            for r in 0..self.m() {
                let a = self.at(r, enter);
                if a <= opts.tol_pivot {
                    continue;
                }
                let ratio = self.rhs(r).max(0.0) / a;
                leave = match leave {
                    None => Some((r, ratio)),
                    Some((br, best)) => {
                        let eps = 1e-12 * (1.0 + best.abs());
                        if ratio < best - eps
                            || (ratio <= best + eps && self.basis[r] < self.basis[br])
                        {
                            Some((r, ratio))
                        } else {
                            Some((br, best))
                        }
                    }
                };
            }
            match leave {
                None => return Phase::Unbounded,
                Some((r, _)) => self.pivot(r, enter),
            }
        }
    }

    /// Pivots artificial variables out of the basis after phase 1; rows
    /// where that is impossible are redundant and dropped.
    fn drive_out_artificials(&mut self, opts: &SolverOptions) {
        let mut r = 0;
        while r < self.m() {
            if self.basis[r] >= self.art_start {
                let col = (0..self.art_start).find(|&j| self.at(r, j).abs() > opts.tol_pivot);
                match col {
                    Some(j) => self.pivot(r, j),
                    None => {
                        let w = self.width;
                        self.data.drain(r * w..(r + 1) * w);
                        self.basis.remove(r);
                        continue;
                    }
                }
            }
            r += 1;
        }
    }
}

/// Which constraint a feasibility check flagged.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "index")]
pub enum ConstraintRef {
    Inequality(usize),
    Equality(usize),
    LowerBound(usize),
    UpperBound(usize),
}

#[derive(Clone, Debug, PartialEq)]
pub struct FeasibilityReport {
    pub feasible: bool,
    pub max_violation: f64,
    pub worst: Option<ConstraintRef>,
}

/// Evaluates every constraint of `lp` at `x`.
pub fn check_feasible(lp: &LinearProgram, x: &[f64], tol: f64) -> Result<FeasibilityReport, LpError> {
    if x.len() != lp.num_vars {
        return Err(LpError::Dimension(format!(
            "point has {} entries for {} variables",
            x.len(),
            lp.num_vars
        )));
    }
    let mut worst: Option<(f64, ConstraintRef)> = None;
    let mut note = |v: f64, at: ConstraintRef| {
        if v > 0.0 && worst.is_none_or(|(w, _)| v > w) {
            worst = Some((v, at));
        }
    };
    for (r, c) in lp.inequalities.iter().enumerate() {
        note(c.eval(x) - c.rhs, ConstraintRef::Inequality(r));
    }
    for (r, c) in lp.equalities.iter().enumerate() {
        note((c.eval(x) - c.rhs).abs(), ConstraintRef::Equality(r));
    }
    for j in 0..lp.num_vars {
        note(lp.lower[j] - x[j], ConstraintRef::LowerBound(j));
        if let Some(u) = lp.upper[j] {
            note(x[j] - u, ConstraintRef::UpperBound(j));
        }
    }
    let (max_violation, worst) = match worst {
        Some((v, at)) => (v, Some(at)),
        None => (0.0, None),
    };
    Ok(FeasibilityReport {
        feasible: max_violation <= tol,
        max_violation,
        worst: if max_violation > tol { worst } else { None },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_variable_upper_bound() {
        let mut lp = LinearProgram::new(1);
        lp.maximize(vec![1.0]).add_le(vec![(0, 1.0)], 1.0);
        let sol = solve(&lp).unwrap();
        assert_eq!(sol.status, LpStatus::Optimal);
        assert!((sol.x[0] - 1.0).abs() < 1e-12);
        assert!((sol.objective - 1.0).abs() < 1e-12);
    }

    #[test]
    fn infeasible_toy() {
        let mut lp = LinearProgram::new(1);
        lp.maximize(vec![1.0]).add_le(vec![(0, 1.0)], -1.0);
        assert_eq!(solve(&lp).unwrap().status, LpStatus::Infeasible);
    }

    #[test]
    fn unbounded_toy() {
        let mut lp = LinearProgram::new(2);
        lp.maximize(vec![1.0, 0.0]).add_le(vec![(0, 1.0), (1, -1.0)], 1.0);
        assert_eq!(solve(&lp).unwrap().status, LpStatus::Unbounded);
    }

    #[test]
    fn equality_and_ge_rows() {
        // max x + 2y  s.t. x + y = 3, x >= 1, y <= 5
        let mut lp = LinearProgram::new(2);
        lp.maximize(vec![1.0, 2.0])
            .add_eq(vec![(0, 1.0), (1, 1.0)], 3.0)
            .add_ge(vec![(0, 1.0)], 1.0)
            .set_upper(1, 5.0);
        let sol = solve(&lp).unwrap();
        assert_eq!(sol.status, LpStatus::Optimal);
        assert!((sol.x[0] - 1.0).abs() < 1e-9 && (sol.x[1] - 2.0).abs() < 1e-9);
        assert!((sol.objective - 5.0).abs() < 1e-9);
    }

    #[test]
    fn shifted_lower_bounds() {
        // max -x s.t. x >= -2 via bound, x <= 4
        let mut lp = LinearProgram::new(1);
        lp.maximize(vec![-1.0]).set_bounds(0, -2.0, 4.0);
        let sol = solve(&lp).unwrap();
        assert!((sol.x[0] + 2.0).abs() < 1e-12);
    }

    #[test]
    fn redundant_equalities() {
        let mut lp = LinearProgram::new(2);
        lp.maximize(vec![1.0, 1.0])
            .add_eq(vec![(0, 1.0), (1, 1.0)], 2.0)
            .add_eq(vec![(0, 2.0), (1, 2.0)], 4.0)
            .set_upper(0, 1.5);
        let sol = solve(&lp).unwrap();
        assert_eq!(sol.status, LpStatus::Optimal);
        assert!((sol.objective - 2.0).abs() < 1e-9);
    }

    #[test]
    fn crossed_bounds_infeasible() {
        let mut lp = LinearProgram::new(1);
        lp.set_bounds(0, 2.0, 1.0);
        assert_eq!(solve(&lp).unwrap().status, LpStatus::Infeasible);
    }

    #[test]
    fn rejects_nan_and_bad_index() {
        let mut lp = LinearProgram::new(1);
        lp.maximize(vec![f64::NAN]);
        assert!(matches!(solve(&lp), Err(LpError::NonFinite(_))));
        let mut lp = LinearProgram::new(1);
        lp.add_le(vec![(3, 1.0)], 1.0);
        assert!(matches!(solve(&lp), Err(LpError::Dimension(_))));
        let mut lp = LinearProgram::new(2);
        lp.maximize(vec![1.0]);
        assert!(matches!(solve(&lp), Err(LpError::Dimension(_))));
    }

    #[test]
    fn iteration_cap_is_a_status() {
        let mut lp = LinearProgram::new(2);
        lp.maximize(vec![1.0, 1.0])
            .add_le(vec![(0, 1.0)], 1.0)
            .add_le(vec![(1, 1.0)], 1.0);
        let opts = SolverOptions {
            max_iterations: 1,
            ..Default::default()
        };
        assert_eq!(solve_with(&lp, &opts).unwrap().status, LpStatus::IterationLimit);
    }

    #[test]
    fn feasibility_check() {
        let mut lp = LinearProgram::new(1);
        lp.add_le(vec![(0, 1.0)], 1.0);
        let ok = check_feasible(&lp, &[1.0], 1e-8).unwrap();
        assert!(ok.feasible);
        assert_eq!(ok.max_violation, 0.0);
        let bad = check_feasible(&lp, &[1.5], 1e-8).unwrap();
        assert!(!bad.feasible);
        assert!((bad.max_violation - 0.5).abs() < 1e-15);
        assert_eq!(bad.worst, Some(ConstraintRef::Inequality(0)));
        let neg = check_feasible(&lp, &[-0.25], 1e-8).unwrap();
        assert_eq!(neg.worst, Some(ConstraintRef::LowerBound(0)));
        assert!(check_feasible(&lp, &[1.0, 2.0], 1e-8).is_err());
    }

    #[test]
    fn degenerate_cycling_example_terminates() {
        // Beale's example, which cycles under the textbook largest-coefficient rule.
        let mut lp = LinearProgram::new(4);
        lp.maximize(vec![0.75, -150.0, 0.02, -6.0])
            .add_le(vec![(0, 0.25), (1, -60.0), (2, -0.04), (3, 9.0)], 0.0)
            .add_le(vec![(0, 0.5), (1, -90.0), (2, -0.02), (3, 3.0)], 0.0)
            .add_le(vec![(2, 1.0)], 1.0);
        let sol = solve(&lp).unwrap();
        assert_eq!(sol.status, LpStatus::Optimal);
        assert!((sol.objective - 0.05).abs() < 1e-9);
    }
}
