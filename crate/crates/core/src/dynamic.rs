//! Multi-period clearing over a horizon `T`: the full LP over payment
//! matrices, its period-by-period relaxation, and the pro-rata versions
//! (full LP, per-period LP, per-period fictitious default iteration).
//!
//! LP variables are flattened in `(t, i, j)` lexicographic order over the
//! arcs of `P̄` (matrix mode) or `(t, i)` over nodes with positive nominal
//! out-flow (pro-rata mode).

use std::thread;

use serde::Serialize;

use crate::dense::Matrix;
use crate::error::ClearingError;
use crate::lp::{solve, LinearProgram};
use crate::model::{cumulative_inflow, DynamicInstance, PaymentMode, PaymentSchedule};
use crate::report::{ClearingReport, Method, SolverInfo};
use crate::static_clearing::{fda, matrix_period_lp, prorata_lp, require_optimal, Clearing, FdaOptions};
use crate::validation::{certify_schedule, priority_tolerance};

fn finish(
    instance: &DynamicInstance,
    schedule: PaymentSchedule,
    method: Method,
    solver: SolverInfo,
) -> Clearing {
    let cert = certify_schedule(instance, &schedule, priority_tolerance(instance));
    let report = ClearingReport::new(method, instance, &schedule, cert, solver);
    Clearing { schedule, report }
}

/// Maximizes `Σ_t a_t 1ᵀP(t)1` over all admissible matrix schedules.
pub fn clear_dynamic_matrix(instance: &DynamicInstance) -> Result<Clearing, ClearingError> {
    let n = instance.n();
    let horizon = instance.horizon();
    let alpha = instance.alpha();
    let weights = instance.weights();
    let bar = instance.liabilities().matrix();
    let arcs: Vec<(usize, usize, f64)> = bar.iter_entries().filter(|&(_, _, v)| v > 0.0).collect();
    let k_arcs = arcs.len();
    let var = |t: usize, k: usize| t * k_arcs + k;

    let mut lp = LinearProgram::new(horizon * k_arcs);
    for t in 0..horizon {
        for k in 0..k_arcs {
            lp.set_objective_coeff(var(t, k), weights[t]);
        }
    }
    // Σ_{k≤t} α^{t−k} P(k) ≤ αᵗ P̄, divided through by αᵗ.
    for (k, &(_, _, v)) in arcs.iter().enumerate() {
        lp.set_upper(var(0, k), v);
        for t in 1..horizon {
            let row = (0..=t).map(|s| (var(s, k), alpha.powi(-(s as i32)))).collect();
            lp.add_le(row, v);
        }
    }
    // C(t) + Σ_{k≤t} (Pᵀ(k) − P(k)) 1 ≥ 0 for every node that owes something.
    let mut pays = vec![false; n];
    for &(i, _, _) in &arcs {
        pays[i] = true;
    }
    for t in 0..horizon {
        let cum = cumulative_inflow(instance.inflows(), t)?;
        for i in (0..n).filter(|&i| pays[i]) {
            let mut row = Vec::new();
            for s in 0..=t {
                for (k, &(from, to, _)) in arcs.iter().enumerate() {
                    if from == i {
                        row.push((var(s, k), 1.0));
                    } else if to == i {
                        row.push((var(s, k), -1.0));
                    }
                }
            }
            lp.add_le(row, cum[i]);
        }
    }

    let sol = solve(&lp)?;
    require_optimal(&sol, "multi-period matrix clearing")?;
    let matrices = (0..horizon)
        .map(|t| {
            let mut p = Matrix::square_zeros(n);
            for (k, &(i, j, _)) in arcs.iter().enumerate() {
                p[(i, j)] = sol.x[var(t, k)];
            }
            p
        })
        .collect();
    let schedule = PaymentSchedule::from_matrices(instance, matrices)?;
    Ok(finish(instance, schedule, Method::Full, SolverInfo::lp(sol.status, sol.iterations)))
}

/// Solves the single-period matrix LP at each `t` with the current nominal
/// liabilities `P̄*(t)` and the cash `w*(t) + c(t)`, then rolls the state.
pub fn clear_dynamic_matrix_sequential(instance: &DynamicInstance) -> Result<Clearing, ClearingError> {
    let n = instance.n();
    let alpha = instance.alpha();
    let mut nominal = instance.liabilities().matrix().clone();
    let mut worth = vec![0.0; n];
    let mut matrices = Vec::with_capacity(instance.horizon());
    let mut solver = SolverInfo::default();
    for t in 0..instance.horizon() {
        let c = instance.inflow(t);
        let available: Vec<f64> = (0..n).map(|i| worth[i] + c[i]).collect();
        let (p, sol) = matrix_period_lp(&nominal, &available)?;
        solver.absorb(SolverInfo::lp(sol.status, sol.iterations));
        let into = p.col_sums();
        let out = p.row_sums();
        for i in 0..n {
            worth[i] = available[i] + into[i] - out[i];
        }
        nominal = nominal.combine(alpha, &p, -alpha);
        matrices.push(p);
    }
    let schedule = PaymentSchedule::from_matrices(instance, matrices)?;
    Ok(finish(instance, schedule, Method::Sequential, solver))
}

/// Pro-rata multi-period LP over payment vectors, with the relative
/// liabilities frozen at their initial values.
pub fn clear_dynamic_prorata(instance: &DynamicInstance) -> Result<Clearing, ClearingError> {
    clear_dynamic_prorata_weighted(instance, &instance.weights())
}

/// Pro-rata multi-period LP with caller-supplied period weights.
///
/// Any positive weights with `a_{t−1} > α a_t` yield the same schedule.
pub fn clear_dynamic_prorata_weighted(instance: &DynamicInstance, weights: &[f64]) -> Result<Clearing, ClearingError> {
    let n = instance.n();
    let horizon = instance.horizon();
    if weights.len() != horizon {
        return Err(crate::error::ModelError::Dimension(format!(
            "{} period weights for horizon {horizon}",
            weights.len()
        ))
        .into());
    }
    let alpha = instance.alpha();
    let a = instance.liabilities().relative();
    let m = a.matrix();
    let bar = instance.liabilities().nominal_outflow();
    let active: Vec<usize> = (0..n).filter(|&i| bar[i] > 0.0).collect();
    let k_nodes = active.len();
    let var = |t: usize, k: usize| t * k_nodes + k;

    let mut lp = LinearProgram::new(horizon * k_nodes);
    for t in 0..horizon {
        for k in 0..k_nodes {
            lp.set_objective_coeff(var(t, k), weights[t]);
        }
    }
    for (k, &i) in active.iter().enumerate() {
        lp.set_upper(var(0, k), bar[i]);
        for t in 1..horizon {
            let row = (0..=t).map(|s| (var(s, k), alpha.powi(-(s as i32)))).collect();
            lp.add_le(row, bar[i]);
        }
    }
    for t in 0..horizon {
        let cum = cumulative_inflow(instance.inflows(), t)?;
        for (k, &i) in active.iter().enumerate() {
            let mut row = Vec::new();
            for s in 0..=t {
                for (l, &src) in active.iter().enumerate() {
                    let coeff = if l == k { 1.0 } else { 0.0 } - m[(src, i)];
                    if coeff != 0.0 {
                        row.push((var(s, l), coeff));
                    }
                }
            }
            lp.add_le(row, cum[i]);
        }
    }

    let sol = solve(&lp)?;
    require_optimal(&sol, "multi-period pro-rata clearing")?;
    let vectors = (0..horizon)
        .map(|t| {
            let mut p = vec![0.0; n];
            for (k, &i) in active.iter().enumerate() {
                p[i] = sol.x[var(t, k)];
            }
            p
        })
        .collect();
    let schedule = PaymentSchedule::from_vectors(instance, vectors)?;
    Ok(finish(instance, schedule, Method::Full, SolverInfo::lp(sol.status, sol.iterations)))
}

/// Rolls the pro-rata state forward, computing each period's vector with
/// `step(available, nominal_out)`.
fn prorata_rollout(
    instance: &DynamicInstance,
    method: Method,
    mut step: impl FnMut(&[f64], &[f64]) -> Result<(Vec<f64>, SolverInfo), ClearingError>,
) -> Result<Clearing, ClearingError> {
    let n = instance.n();
    let alpha = instance.alpha();
    let a = instance.liabilities().relative();
    let mut bar = instance.liabilities().nominal_outflow();
    let mut worth = vec![0.0; n];
    let mut vectors = Vec::with_capacity(instance.horizon());
    let mut solver = SolverInfo::default();
    for t in 0..instance.horizon() {
        let c = instance.inflow(t);
        let available: Vec<f64> = (0..n).map(|i| worth[i] + c[i]).collect();
        let (p, info) = step(&available, &bar)?;
        solver.absorb(info);
        let into = a.transpose_mul(&p);
        for i in 0..n {
            worth[i] = available[i] + into[i] - p[i];
            bar[i] = alpha * (bar[i] - p[i]);
        }
        vectors.push(p);
    }
    let schedule = PaymentSchedule::from_vectors(instance, vectors)?;
    Ok(finish(instance, schedule, method, solver))
}

/// Pro-rata schedule from the per-period LPs with state updates; equal to
/// the full pro-rata LP solution.
pub fn clear_dynamic_prorata_sequential(instance: &DynamicInstance) -> Result<Clearing, ClearingError> {
    let a = instance.liabilities().relative();
    let ones = vec![1.0; instance.n()];
    prorata_rollout(instance, Method::Sequential, |available, bar| {
        let (p, sol) = prorata_lp(&a, available, bar, &ones)?;
        Ok((p, SolverInfo::lp(sol.status, sol.iterations)))
    })
}

/// Pro-rata schedule with each period cleared by the fictitious default
/// iteration.
pub fn clear_dynamic_prorata_fda(instance: &DynamicInstance, opts: &FdaOptions) -> Result<Clearing, ClearingError> {
    let a = instance.liabilities().relative();
    prorata_rollout(instance, Method::Fda, |available, bar| {
        let r = fda(&a, available, bar, opts)?;
        Ok((r.payments, SolverInfo::fda(r.iterations)))
    })
}

/// Runs a given solver.
pub fn clear_dynamic(
    instance: &DynamicInstance,
    mode: PaymentMode,
    method: Method,
    fda_options: &FdaOptions,
) -> Result<Clearing, ClearingError> {
    match (mode, method) {
        (PaymentMode::Matrix, Method::Full) => clear_dynamic_matrix(instance),
        (PaymentMode::Matrix, Method::Sequential) => clear_dynamic_matrix_sequential(instance),
        (PaymentMode::ProRata, Method::Full) => clear_dynamic_prorata(instance),
        (PaymentMode::ProRata, Method::Sequential) => clear_dynamic_prorata_sequential(instance),
        (PaymentMode::ProRata, Method::Fda) => clear_dynamic_prorata_fda(instance, fda_options),
        (PaymentMode::Matrix, Method::Fda) => Err(crate::error::ModelError::Dimension(
            "the fictitious default iteration applies to pro-rata payments only".into(),
        )
        .into()),
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ScenarioEntry {
    pub label: String,
    pub report: ClearingReport,
}

#[derive(Clone, Debug, Serialize)]
pub struct ScenarioComparison {
    pub entries: Vec<ScenarioEntry>,
}

impl ScenarioComparison {
    pub fn get(&self, label: &str) -> Option<&ClearingReport> {
        self.entries.iter().find(|e| e.label == label).map(|e| &e.report)
    }
}

pub const STATIC_MATRIX: &str = "static c(0), matrix";
pub const STATIC_PRORATA: &str = "static c(0), prorata";
pub const DYNAMIC_MATRIX: &str = "dynamic, matrix, full";
pub const DYNAMIC_MATRIX_SEQUENTIAL: &str = "dynamic, matrix, sequential";
pub const DYNAMIC_PRORATA: &str = "dynamic, prorata, full";
pub const DYNAMIC_PRORATA_SEQUENTIAL: &str = "dynamic, prorata, sequential";
pub const DYNAMIC_PRORATA_FDA: &str = "dynamic, prorata, fda";

/// Runs every dynamic solver plus the single-period clearing on `c(0)` (with
/// the instance's interest factor) and collects the reports. The solves run
/// concurrently; the result does not depend on scheduling.
pub fn scenario_compare(instance: &DynamicInstance) -> Result<ScenarioComparison, ClearingError> {
    let first = DynamicInstance::new(
        instance.liabilities().clone(),
        vec![instance.inflow(0).to_vec()],
        instance.alpha(),
        instance.eta(),
    )?;
    let fda_options = FdaOptions::default();
    let jobs: Vec<(&str, &DynamicInstance, PaymentMode, Method)> = vec![
        (STATIC_MATRIX, &first, PaymentMode::Matrix, Method::Full),
        (STATIC_PRORATA, &first, PaymentMode::ProRata, Method::Full),
        (DYNAMIC_MATRIX, instance, PaymentMode::Matrix, Method::Full),
        (DYNAMIC_MATRIX_SEQUENTIAL, instance, PaymentMode::Matrix, Method::Sequential),
        (DYNAMIC_PRORATA, instance, PaymentMode::ProRata, Method::Full),
        (DYNAMIC_PRORATA_SEQUENTIAL, instance, PaymentMode::ProRata, Method::Sequential),
        (DYNAMIC_PRORATA_FDA, instance, PaymentMode::ProRata, Method::Fda),
    ];
    let results: Vec<Result<ScenarioEntry, ClearingError>> = thread::scope(|scope| {
        let handles: Vec<_> = jobs
            .iter()
            .map(|&(label, inst, mode, method)| {
                let opts = &fda_options;
                scope.spawn(move || {
                    clear_dynamic(inst, mode, method, opts).map(|c| ScenarioEntry {
                        label: label.to_string(),
                        report: c.report,
                    })
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("solver thread panicked"))
            .collect()
    });
    Ok(ScenarioComparison {
        entries: results.into_iter().collect::<Result<_, _>>()?,
    })
}
