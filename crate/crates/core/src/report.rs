//! Summary of a clearing run: losses, residual liabilities, defaults and
//! certification results.
//!
//! Serialized node labels are 1-based; periods stay 0-based.

use serde::{Deserialize, Serialize, Serializer};

use crate::dense::Matrix;
use crate::lp::LpStatus;
use crate::model::{penalized_loss, system_loss, DynamicInstance, PaymentMode, PaymentSchedule};
use crate::validation::{default_tolerance, Certification};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// One LP over the whole horizon (or the single-period LP).
    Full,
    /// Period-by-period LPs.
    Sequential,
    /// Fictitious default iteration, period by period.
    Fda,
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Method::Full => "full",
            Method::Sequential => "sequential",
            Method::Fda => "fda",
        })
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct SolverInfo {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub status: Option<LpStatus>,
    pub lp_iterations: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fda_iterations: Option<usize>,
}

impl SolverInfo {
    pub(crate) fn lp(status: LpStatus, iterations: usize) -> Self {
        SolverInfo {
            status: Some(status),
            lp_iterations: iterations,
            fda_iterations: None,
        }
    }

    pub(crate) fn fda(iterations: usize) -> Self {
        SolverInfo {
            status: None,
            lp_iterations: 0,
            fda_iterations: Some(iterations),
        }
    }

    pub(crate) fn absorb(&mut self, other: SolverInfo) {
        self.lp_iterations += other.lp_iterations;
        if other.status.is_some() {
            self.status = other.status;
        }
        if let Some(k) = other.fda_iterations {
            *self.fda_iterations.get_or_insert(0) += k;
        }
    }
}

fn one_based<S: Serializer>(nodes: &[usize], s: S) -> Result<S::Ok, S::Error> {
    s.collect_seq(nodes.iter().map(|i| i + 1))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ClearingReport {
    pub method: Method,
    pub mode: PaymentMode,
    pub horizon: usize,
    pub alpha: f64,
    pub eta: f64,
    /// `L`, the cumulative shortfall over the horizon.
    pub loss: f64,
    /// `J`, reported when a terminal penalty is set.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub penalized_loss: Option<f64>,
    /// `Σ_t a_t 1ᵀ P(t) 1`.
    pub objective: f64,
    /// `1ᵀ (P̄(T−1) − P(T−1)) 1`: unpaid at the last clearing, before interest.
    pub final_shortfall: f64,
    /// `1ᵀ P̄(T) 1`: residual carried past the horizon, with interest.
    pub total_residual: f64,
    pub residual_liabilities: Matrix,
    pub residual_by_node: Vec<f64>,
    #[serde(serialize_with = "one_based")]
    pub default_set: Vec<usize>,
    /// `w(T)`
    pub worths: Vec<f64>,
    pub certification: Certification,
    pub solver: SolverInfo,
}

impl ClearingReport {
    pub fn new(
        method: Method,
        instance: &DynamicInstance,
        schedule: &PaymentSchedule,
        certification: Certification,
        solver: SolverInfo,
    ) -> Self {
        let last = schedule.horizon() - 1;
        let residual = schedule.residual().clone();
        let eta = instance.eta();
        ClearingReport {
            method,
            mode: schedule.mode(),
            horizon: schedule.horizon(),
            alpha: instance.alpha(),
            eta,
            loss: system_loss(schedule),
            penalized_loss: (eta > 0.0).then(|| penalized_loss(schedule, eta)),
            objective: schedule.weighted_payments(&instance.weights()),
            final_shortfall: schedule.nominal(last).sum() - schedule.payment(last).sum(),
            total_residual: residual.sum(),
            residual_by_node: residual.row_sums(),
            default_set: schedule.default_set(default_tolerance(instance)),
            residual_liabilities: residual,
            worths: schedule.worth(schedule.horizon()).to_vec(),
            certification,
            solver,
        }
    }

    pub fn certified(&self) -> bool {
        self.certification.passed()
    }
}
