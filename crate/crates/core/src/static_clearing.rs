//! Single-period clearing: unrestricted clearing matrices, pro-rata clearing
//! vectors by LP and by fictitious default iteration, and certification of
//! the clearing conditions.

use serde::Serialize;

use crate::dense::{sup_dist, Matrix};
use crate::error::{ClearingError, ModelError};
use crate::graph::{strong_components, WeightedDigraph};
use crate::lp::{solve, LinearProgram, LpSolution};
use crate::model::{DynamicInstance, PaymentMode, PaymentSchedule, RelativeLiabilityMatrix, StaticInstance};
use crate::report::{ClearingReport, Method, SolverInfo};
use crate::validation::{default_tolerance, Certification, Locator, Tracker};

/// Result of a clearing run: the schedule and its report.
#[derive(Clone, Debug)]
pub struct Clearing {
    pub schedule: PaymentSchedule,
    pub report: ClearingReport,
}

impl Clearing {
    /// First-period payment matrix; the whole answer for static runs.
    pub fn payments(&self) -> &Matrix {
        self.schedule.payment(0)
    }

    /// First-period payment vector of a pro-rata run.
    pub fn vector(&self) -> Option<&[f64]> {
        self.schedule.vectors().map(|v| v[0].as_slice())
    }
}

pub(crate) fn require_optimal(sol: &LpSolution, context: &str) -> Result<(), ClearingError> {
    if sol.is_optimal() {
        Ok(())
    } else {
        Err(ClearingError::Solver {
            status: sol.status,
            context: context.to_string(),
        })
    }
}

/// Max `1ᵀP1` over `0 ≤ P ≤ nominal`, `P1 − Pᵀ1 ≤ available`.
///
/// Variables are the positive entries of `nominal` in row-major order.
pub(crate) fn matrix_period_lp(nominal: &Matrix, available: &[f64]) -> Result<(Matrix, LpSolution), ClearingError> {
    let n = nominal.rows();
    let arcs: Vec<(usize, usize, f64)> = nominal.iter_entries().filter(|&(i, j, v)| i != j && v > 0.0).collect();
    let mut lp = LinearProgram::new(arcs.len());
    lp.maximize(vec![1.0; arcs.len()]);
    let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    let mut pays = vec![false; n];
    for (k, &(i, j, v)) in arcs.iter().enumerate() {
        lp.set_upper(k, v);
        rows[i].push((k, 1.0));
        rows[j].push((k, -1.0));
        pays[i] = true;
    }
    for (i, row) in rows.into_iter().enumerate() {
        // Nodes that owe nothing cannot breach limited liability.
        if pays[i] {
            lp.add_le(row, available[i].max(0.0));
        }
    }
    let sol = solve(&lp)?;
    require_optimal(&sol, "single-period matrix clearing")?;
    let mut p = Matrix::square_zeros(n);
    for (k, &(i, j, _)) in arcs.iter().enumerate() {
        p[(i, j)] = sol.x[k];
    }
    Ok((p, sol))
}

/// Max `weightsᵀp` over `0 ≤ p ≤ bar`, `p ≤ available + Aᵀp`.
///
/// Nodes with `bar_i = 0` are fixed at zero and carry no row.
pub(crate) fn prorata_lp(
    a: &RelativeLiabilityMatrix,
    available: &[f64],
    bar: &[f64],
    weights: &[f64],
) -> Result<(Vec<f64>, LpSolution), ClearingError> {
    let n = a.n();
    let active: Vec<usize> = (0..n).filter(|&i| bar[i] > 0.0).collect();
    let mut var = vec![None; n];
    for (k, &i) in active.iter().enumerate() {
        var[i] = Some(k);
    }
    let m = a.matrix();
    let mut lp = LinearProgram::new(active.len());
    lp.maximize(active.iter().map(|&i| weights[i]).collect());
    for (k, &i) in active.iter().enumerate() {
        lp.set_upper(k, bar[i]);
        let mut row = vec![(k, 1.0)];
        for &l in &active {
            let a_li = m[(l, i)];
            if a_li != 0.0 {
                row.push((var[l].unwrap(), -a_li));
            }
        }
        lp.add_le(row, available[i].max(0.0));
    }
    let sol = solve(&lp)?;
    require_optimal(&sol, "single-period pro-rata clearing")?;
    let mut p = vec![0.0; n];
    for (k, &i) in active.iter().enumerate() {
        p[i] = sol.x[k];
    }
    Ok((p, sol))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FdaOptions {
    pub max_iters: usize,
    /// Stop once the sup-norm step falls to this value.
    pub tol: f64,
    /// Keep every iterate.
    pub record_trace: bool,
}

impl Default for FdaOptions {
    fn default() -> Self {
        FdaOptions {
            max_iters: 10_000,
            tol: 1e-10,
            record_trace: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FdaResult {
    pub payments: Vec<f64>,
    pub iterations: usize,
    pub last_step: f64,
    /// Iterates `p⁰ = p̄, p¹, …` when requested.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub trace: Vec<Vec<f64>>,
}

/// Iterates `p ← min(bar, available + Aᵀp)` from `p = bar`.
pub(crate) fn fda(
    a: &RelativeLiabilityMatrix,
    available: &[f64],
    bar: &[f64],
    opts: &FdaOptions,
) -> Result<FdaResult, ClearingError> {
    let n = a.n();
    let mut p = bar.to_vec();
    let mut trace = Vec::new();
    if opts.record_trace {
        trace.push(p.clone());
    }
    let mut last_step = 0.0;
    for k in 0..opts.max_iters {
        let into = a.transpose_mul(&p);
        let next: Vec<f64> = (0..n).map(|i| bar[i].min(available[i].max(0.0) + into[i])).collect();
        last_step = sup_dist(&next, &p);
        p = next;
        if opts.record_trace {
            trace.push(p.clone());
        }
        if last_step <= opts.tol {
            return Ok(FdaResult {
                payments: p,
                iterations: k,
                last_step,
                trace,
            });
        }
    }
    Err(ClearingError::NotConverged {
        iterations: opts.max_iters,
        last_step,
        last_iterate: p,
    })
}

fn static_report(
    instance: &StaticInstance,
    schedule: PaymentSchedule,
    certification: Certification,
    method: Method,
    solver: SolverInfo,
) -> Clearing {
    let dynamic = DynamicInstance::from(instance.clone());
    let report = ClearingReport::new(method, &dynamic, &schedule, certification, solver);
    Clearing { schedule, report }
}

fn tolerance(instance: &StaticInstance) -> f64 {
    default_tolerance(&DynamicInstance::from(instance.clone()))
}

/// Unrestricted clearing matrix maximizing the total paid `1ᵀP1`.
pub fn clear_matrix(instance: &StaticInstance) -> Result<Clearing, ClearingError> {
    let (p, sol) = matrix_period_lp(instance.liabilities().matrix(), instance.inflow())?;
    let cert = certify_clearing(instance, StaticPayments::Matrix(&p), tolerance(instance));
    let dynamic = DynamicInstance::from(instance.clone());
    let schedule = PaymentSchedule::from_matrices(&dynamic, vec![p])?;
    Ok(static_report(instance, schedule, cert, Method::Full, SolverInfo::lp(sol.status, sol.iterations)))
}

/// Pro-rata clearing vector as the maximizer of `1ᵀp`.
pub fn clear_prorata_lp(instance: &StaticInstance) -> Result<Clearing, ClearingError> {
    clear_prorata_lp_weighted(instance, &vec![1.0; instance.n()])
}

/// Pro-rata clearing vector maximizing `weightsᵀp`; any positive weights
/// give the same vector.
pub fn clear_prorata_lp_weighted(instance: &StaticInstance, weights: &[f64]) -> Result<Clearing, ClearingError> {
    if weights.len() != instance.n() || weights.iter().any(|&w| !(w > 0.0 && w.is_finite())) {
        return Err(ModelError::Dimension(format!(
            "expected {} positive finite objective weights",
            instance.n()
        ))
        .into());
    }
    let a = instance.liabilities().relative();
    let bar = instance.liabilities().nominal_outflow();
    let (p, sol) = prorata_lp(&a, instance.inflow(), &bar, weights)?;
    let cert = certify_clearing(instance, StaticPayments::ProRata(&p), tolerance(instance));
    let dynamic = DynamicInstance::from(instance.clone());
    let schedule = PaymentSchedule::from_vectors(&dynamic, vec![p])?;
    Ok(static_report(instance, schedule, cert, Method::Full, SolverInfo::lp(sol.status, sol.iterations)))
}

/// Pro-rata clearing vector by the fictitious default iteration.
pub fn clear_prorata_fda(instance: &StaticInstance, opts: &FdaOptions) -> Result<(Clearing, FdaResult), ClearingError> {
    let a = instance.liabilities().relative();
    let bar = instance.liabilities().nominal_outflow();
    let result = fda(&a, instance.inflow(), &bar, opts)?;
    let cert = certify_clearing(instance, StaticPayments::ProRata(&result.payments), tolerance(instance));
    let dynamic = DynamicInstance::from(instance.clone());
    let schedule = PaymentSchedule::from_vectors(&dynamic, vec![result.payments.clone()])?;
    let clearing = static_report(instance, schedule, cert, Method::Fda, SolverInfo::fda(result.iterations));
    Ok((clearing, result))
}

/// Payments to certify against a static instance.
#[derive(Clone, Copy, Debug)]
pub enum StaticPayments<'a> {
    Matrix(&'a Matrix),
    ProRata(&'a [f64]),
}

impl StaticPayments<'_> {
    pub fn mode(&self) -> PaymentMode {
        match self {
            StaticPayments::Matrix(_) => PaymentMode::Matrix,
            StaticPayments::ProRata(_) => PaymentMode::ProRata,
        }
    }
}

pub const FEASIBILITY_NONNEG: &str = "nonnegativity";
pub const FEASIBILITY_CAP: &str = "liability cap";
pub const FEASIBILITY_LIMITED: &str = "limited liability";
pub const CLEARING_EQUATION: &str = "clearing equation";
pub const SINK_PAYMENT: &str = "full payment in every sink component";

/// Feasibility, the equation `out = min(nominal out, c + in)`, and in
/// pro-rata mode the requirement that each sink component of `G[A]` holds a
/// node paying in full. Nodes owing nothing satisfy the last check
/// trivially.
pub fn certify_clearing(instance: &StaticInstance, payments: StaticPayments<'_>, tol: f64) -> Certification {
    let n = instance.n();
    let c = instance.inflow();
    let mut nonneg = Tracker::new(FEASIBILITY_NONNEG, tol);
    let mut cap = Tracker::new(FEASIBILITY_CAP, tol);
    let mut limited = Tracker::new(FEASIBILITY_LIMITED, tol);
    let mut equation = Tracker::new(CLEARING_EQUATION, tol);
    let nominal_out = instance.liabilities().nominal_outflow();

    let (out, into) = match payments {
        StaticPayments::Matrix(p) => {
            let bar = instance.liabilities().matrix();
            for (i, j, v) in p.iter_entries() {
                nonneg.note(-v, Locator::arc(None, i, j));
                cap.note(v - bar[(i, j)], Locator::arc(None, i, j));
            }
            (p.row_sums(), p.col_sums())
        }
        StaticPayments::ProRata(p) => {
            for i in 0..n {
                nonneg.note(-p[i], Locator::node(None, i));
                cap.note(p[i] - nominal_out[i], Locator::node(None, i));
            }
            (p.to_vec(), instance.liabilities().relative().transpose_mul(p))
        }
    };
    for i in 0..n {
        let available = c[i] + into[i];
        limited.note(out[i] - available, Locator::node(None, i));
        equation.note((out[i] - nominal_out[i].min(available)).abs(), Locator::node(None, i));
    }
    let mut checks = vec![nonneg.finish(), cap.finish(), limited.finish(), equation.finish()];

    if let StaticPayments::ProRata(p) = payments {
        let mut sink = Tracker::new(SINK_PAYMENT, tol);
        let a = instance.liabilities().relative();
        let graph = WeightedDigraph::from_matrix(a.matrix()).expect("square");
        for comp in strong_components(&graph).sinks() {
            let gap = comp
                .nodes
                .iter()
                .map(|&i| nominal_out[i] - p[i])
                .fold(f64::INFINITY, f64::min);
            sink.note(gap, Locator::node(None, comp.nodes[0]));
        }
        checks.push(sink.finish());
    }
    checks.into()
}

/// Sup-norm distance between two static pro-rata answers.
pub fn prorata_gap(a: &Clearing, b: &Clearing) -> Option<f64> {
    Some(sup_dist(a.vector()?, b.vector()?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::LiabilityMatrix;

    fn en5() -> LiabilityMatrix {
        LiabilityMatrix::from_rows(
            vec![
                vec![0.0, 180.0, 0.0, 0.0, 180.0],
                vec![0.0, 0.0, 100.0, 0.0, 100.0],
                vec![90.0, 0.0, 0.0, 100.0, 50.0],
                vec![150.0, 0.0, 0.0, 0.0, 150.0],
                vec![0.0; 5],
            ],
            Some(4),
        )
        .unwrap()
    }

    fn shock() -> StaticInstance {
        StaticInstance::new(en5(), vec![120.0, 20.0, 120.0, 200.0, 0.0]).unwrap()
    }

    #[test]
    fn zero_cash_acyclic_pays_nothing() {
        let l = LiabilityMatrix::from_rows(
            vec![vec![0.0, 3.0, 1.0], vec![0.0, 0.0, 2.0], vec![0.0; 3]],
            None,
        )
        .unwrap();
        let inst = StaticInstance::new(l, vec![0.0; 3]).unwrap();
        let m = clear_matrix(&inst).unwrap();
        assert_eq!(m.payments().max_abs(), 0.0);
        let p = clear_prorata_lp(&inst).unwrap();
        assert_eq!(p.vector().unwrap(), &[0.0, 0.0, 0.0]);
    }

    #[test]
    fn shocked_matrix_unpaid() {
        let c = clear_matrix(&shock()).unwrap();
        assert!((c.report.total_residual - 20.0).abs() < 1e-6);
        assert_eq!(c.report.default_set, vec![2]);
        assert!(c.report.certified(), "{}", c.report.certification.summary());
    }

    #[test]
    fn shocked_prorata_unpaid() {
        let c = clear_prorata_lp(&shock()).unwrap();
        assert!((c.report.total_residual - 53.66).abs() < 0.01, "{}", c.report.total_residual);
        assert_eq!(c.report.default_set, vec![0, 1, 2, 3]);
        assert!(c.report.certified(), "{}", c.report.certification.summary());
        let (f, result) = clear_prorata_fda(&shock(), &FdaOptions::default()).unwrap();
        assert!(prorata_gap(&c, &f).unwrap() < 1e-6);
        assert!(result.iterations > 0);
    }

    #[test]
    fn fda_zero_nominal() {
        let l = LiabilityMatrix::from_rows(vec![vec![0.0; 2]; 2], None).unwrap();
        let inst = StaticInstance::new(l, vec![1.0, 0.0]).unwrap();
        let (_, r) = clear_prorata_fda(&inst, &FdaOptions::default()).unwrap();
        assert_eq!(r.payments, vec![0.0, 0.0]);
        assert_eq!(r.iterations, 0);
    }

    #[test]
    fn fda_isolated_cycle_keeps_full_payment() {
        let l = LiabilityMatrix::from_rows(vec![vec![0.0, 1.0], vec![1.0, 0.0]], None).unwrap();
        let inst = StaticInstance::new(l, vec![0.0, 0.0]).unwrap();
        let (_, r) = clear_prorata_fda(&inst, &FdaOptions::default()).unwrap();
        assert_eq!(r.payments, vec![1.0, 1.0]);
        let lp = clear_prorata_lp(&inst).unwrap();
        assert!(sup_dist(lp.vector().unwrap(), &[1.0, 1.0]) < 1e-9);
    }

    #[test]
    fn fda_trace_is_monotone() {
        let opts = FdaOptions {
            record_trace: true,
            ..FdaOptions::default()
        };
        let (_, r) = clear_prorata_fda(&shock(), &opts).unwrap();
        for w in r.trace.windows(2) {
            assert!(w[1].iter().zip(&w[0]).all(|(x, y)| x <= y));
        }
    }

    #[test]
    fn fda_reports_non_convergence() {
        let opts = FdaOptions {
            max_iters: 1,
            ..FdaOptions::default()
        };
        assert!(matches!(
            clear_prorata_fda(&shock(), &opts),
            Err(ClearingError::NotConverged { iterations: 1, .. })
        ));
    }

    #[test]
    fn halved_payments_fail_clearing_equation() {
        let inst = shock();
        let p: Vec<f64> = clear_prorata_lp(&inst).unwrap().vector().unwrap().iter().map(|v| 0.5 * v).collect();
        let cert = certify_clearing(&inst, StaticPayments::ProRata(&p), 1e-7);
        assert!(!cert.get(CLEARING_EQUATION).unwrap().passed);
        assert!(cert.get(FEASIBILITY_LIMITED).unwrap().passed);
    }

    #[test]
    fn full_payment_with_ample_cash_certifies() {
        let l = en5();
        let inst = StaticInstance::new(l.clone(), vec![400.0; 5]).unwrap();
        let cert = certify_clearing(&inst, StaticPayments::Matrix(l.matrix()), 1e-7);
        assert!(cert.passed(), "{}", cert.summary());
    }

    #[test]
    fn rejects_bad_weights() {
        assert!(clear_prorata_lp_weighted(&shock(), &[1.0, 0.0, 1.0, 1.0, 1.0]).is_err());
        assert!(clear_prorata_lp_weighted(&shock(), &[1.0]).is_err());
    }
}
