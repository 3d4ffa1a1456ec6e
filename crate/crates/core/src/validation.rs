//! Certification of payment schedules: admissibility, absolute priority of
//! debt claims, and acyclicity of the payment graphs after the first period.
//!
//! All checks are usable on arbitrary schedules; a failed check is a result,
//! not an error.

use std::fmt;

use serde::Serialize;

use crate::dense::Matrix;
use crate::graph::{strong_components, WeightedDigraph};
use crate::model::{
    cumulative_inflow, scaled_tolerance, DynamicInstance, PaymentMode, PaymentSchedule,
    BASE_TOLERANCE,
};

/// Admissibility tolerance: `1e-7 · max(1, max |P̄_ij|)`.
pub fn default_tolerance(instance: &DynamicInstance) -> f64 {
    scaled_tolerance(BASE_TOLERANCE, instance.liabilities().scale())
}

/// Shortfall threshold for the priority checks: `1e-6 · max(1, max |P̄_ij|)`.
pub fn priority_tolerance(instance: &DynamicInstance) -> f64 {
    scaled_tolerance(1e-6, instance.liabilities().scale())
}

/// Where a violation occurred. Nodes serialize 1-based, like the display.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Locator {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t: Option<usize>,
    #[serde(serialize_with = "one_based")]
    pub i: usize,
    #[serde(skip_serializing_if = "Option::is_none", serialize_with = "one_based_opt")]
    pub j: Option<usize>,
}

fn one_based<S: serde::Serializer>(i: &usize, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_u64(*i as u64 + 1)
}

fn one_based_opt<S: serde::Serializer>(j: &Option<usize>, s: S) -> Result<S::Ok, S::Error> {
    match j {
        Some(j) => one_based(j, s),
        None => s.serialize_none(),
    }
}

impl Locator {
    pub fn node(t: Option<usize>, i: usize) -> Self {
        Locator { t, i, j: None }
    }

    pub fn arc(t: Option<usize>, i: usize, j: usize) -> Self {
        Locator { t, i, j: Some(j) }
    }
}

impl fmt::Display for Locator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(t) = self.t {
            write!(f, "t={t}, ")?;
        }
        match self.j {
            Some(j) => write!(f, "arc {}->{}", self.i + 1, j + 1),
            None => write!(f, "node {}", self.i + 1),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub max_violation: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub at: Option<Locator>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let verdict = if self.passed { "ok" } else { "FAILED" };
        write!(f, "{}: {} (max violation {:.3e}", self.name, verdict, self.max_violation)?;
        if let Some(at) = &self.at {
            write!(f, " at {at}")?;
        }
        if let Some(d) = &self.detail {
            write!(f, "; {d}")?;
        }
        write!(f, ")")
    }
}

/// Accumulates the worst violation of one constraint family.
pub(crate) struct Tracker {
    name: String,
    tol: f64,
    worst: f64,
    at: Option<Locator>,
    detail: Option<String>,
}

impl Tracker {
    pub(crate) fn new(name: impl Into<String>, tol: f64) -> Self {
        Tracker {
            name: name.into(),
            tol,
            worst: 0.0,
            at: None,
            detail: None,
        }
    }

    pub(crate) fn note(&mut self, violation: f64, at: Locator) {
        if violation > self.worst {
            self.worst = violation;
            self.at = Some(at);
        }
    }

    pub(crate) fn fail_with(&mut self, detail: String, at: Locator) {
        if self.detail.is_none() {
            self.detail = Some(detail);
            self.at = Some(at);
            self.worst = f64::INFINITY.min(self.worst.max(1.0));
        }
    }

    pub(crate) fn finish(self) -> Check {
        let passed = self.worst <= self.tol && self.detail.is_none();
        Check {
            name: self.name,
            passed,
            max_violation: self.worst,
            at: if passed { None } else { self.at },
            detail: self.detail,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct Certification {
    pub checks: Vec<Check>,
}

impl Certification {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed)
    }

    pub fn get(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn merge(mut self, other: Certification) -> Self {
        self.checks.extend(other.checks);
        self
    }

    pub fn summary(&self) -> String {
        let failed: Vec<String> = self.failures().map(|c| c.to_string()).collect();
        if failed.is_empty() {
            "all checks passed".to_string()
        } else {
            failed.join("; ")
        }
    }
}

impl From<Vec<Check>> for Certification {
    fn from(checks: Vec<Check>) -> Self {
        Certification { checks }
    }
}

pub const NONNEGATIVITY: &str = "nonnegativity";
pub const ZERO_DIAGONAL: &str = "zero diagonal";
pub const LIABILITY_CAP: &str = "liability cap";
pub const LIMITED_LIABILITY: &str = "limited liability";
pub const PRIORITY: &str = "absolute priority";
pub const PRIORITY_BEFORE_FULL: &str = "full balance before first full payment";
pub const ACYCLICITY: &str = "payment acyclicity";
pub const EARLIEST_PAYMENT: &str = "earliest payment";
pub const FIXED_POINT: &str = "pro-rata fixed point";

/// Evaluates the admissibility constraints in their explicit form:
/// `P(t) ≥ 0`, `Σ_{k≤t} α^{t−k} P(k) ≤ αᵗ P̄` and
/// `C(t) + Σ_{k≤t} (Pᵀ(k) − P(k)) 1 ≥ 0`, or the vector analogues for
/// pro-rata schedules.
pub fn check_admissible(instance: &DynamicInstance, schedule: &PaymentSchedule, tol: f64) -> Certification {
    match schedule.vectors() {
        Some(vectors) => admissible_vectors(instance, vectors, tol),
        None => admissible_matrices(instance, schedule.matrices(), tol),
    }
}

fn admissible_matrices(instance: &DynamicInstance, payments: &[Matrix], tol: f64) -> Certification {
    let n = instance.n();
    let alpha = instance.alpha();
    let bar = instance.liabilities().matrix();
    let mut nonneg = Tracker::new(NONNEGATIVITY, tol);
    let mut diag = Tracker::new(ZERO_DIAGONAL, tol);
    let mut cap = Tracker::new(LIABILITY_CAP, tol);
    let mut worth = Tracker::new(LIMITED_LIABILITY, tol);

    let mut discounted = Matrix::square_zeros(n);
    let mut net = vec![0.0; n];
    for (t, p) in payments.iter().enumerate() {
        // discounted = Σ_{k≤t} α^{t−k} P(k)
        discounted = discounted.combine(alpha, p, 1.0);
        let at = alpha.powi(t as i32);
        for (i, j, v) in p.iter_entries() {
            nonneg.note(-v, Locator::arc(Some(t), i, j));
            if i == j {
                diag.note(v.abs(), Locator::arc(Some(t), i, j));
            }
            cap.note(discounted[(i, j)] - at * bar[(i, j)], Locator::arc(Some(t), i, j));
        }
        for (i, (into, from)) in p.col_sums().into_iter().zip(p.row_sums()).enumerate() {
            net[i] += into - from;
        }
        let c = cumulative_inflow(instance.inflows(), t).expect("t within horizon");
        for i in 0..n {
            worth.note(-(c[i] + net[i]), Locator::node(Some(t), i));
        }
    }
    vec![nonneg.finish(), diag.finish(), cap.finish(), worth.finish()].into()
}

fn admissible_vectors(instance: &DynamicInstance, vectors: &[Vec<f64>], tol: f64) -> Certification {
    let n = instance.n();
    let alpha = instance.alpha();
    let a = instance.liabilities().relative();
    let bar = instance.liabilities().nominal_outflow();
    let mut nonneg = Tracker::new(NONNEGATIVITY, tol);
    let mut cap = Tracker::new(LIABILITY_CAP, tol);
    let mut worth = Tracker::new(LIMITED_LIABILITY, tol);

    let mut discounted = vec![0.0; n];
    let mut net = vec![0.0; n];
    for (t, p) in vectors.iter().enumerate() {
        let at = alpha.powi(t as i32);
        let into = a.transpose_mul(p);
        for i in 0..n {
            discounted[i] = alpha * discounted[i] + p[i];
            nonneg.note(-p[i], Locator::node(Some(t), i));
            cap.note(discounted[i] - at * bar[i], Locator::node(Some(t), i));
            net[i] += into[i] - p[i];
        }
        let c = cumulative_inflow(instance.inflows(), t).expect("t within horizon");
        for i in 0..n {
            worth.note(-(c[i] + net[i]), Locator::node(Some(t), i));
        }
    }
    vec![nonneg.finish(), cap.finish(), worth.finish()].into()
}

/// Absolute priority: a node paying less than its nominal out-flow at `t`
/// must pay out `φ_in(t) + w(t)` in full; and before its first full
/// payment period a node keeps no balance.
pub fn check_absolute_priority(
    instance: &DynamicInstance,
    schedule: &PaymentSchedule,
    tol: f64,
) -> Certification {
    let n = instance.n();
    let horizon = schedule.horizon();
    let mut implication = Tracker::new(PRIORITY, tol);
    let mut before_full = Tracker::new(PRIORITY_BEFORE_FULL, tol);

    let mut first_full = vec![horizon; n];
    for t in 0..horizon {
        let out = schedule.outflow(t);
        let nominal_out = schedule.nominal_outflow(t);
        let next_worth = schedule.worth(t + 1);
        let p = schedule.payment(t);
        let bar = schedule.nominal(t);
        for i in 0..n {
            if out[i] < nominal_out[i] - tol {
                // φ_in + w − φ_out = w(t+1)
                implication.note(next_worth[i].abs(), Locator::node(Some(t), i));
            }
            if first_full[i] == horizon && (0..n).all(|j| p[(i, j)] >= bar[(i, j)] - tol) {
                first_full[i] = t;
            }
        }
    }
    for (i, &t_star) in first_full.iter().enumerate() {
        for t in 0..t_star {
            before_full.note(schedule.worth(t + 1)[i].abs(), Locator::node(Some(t), i));
        }
    }
    vec![implication.finish(), before_full.finish()].into()
}

/// `G[P(t)]` has no directed cycle for `t ≥ 1`.
pub fn check_payment_acyclicity(schedule: &PaymentSchedule) -> Check {
    let mut tracker = Tracker::new(ACYCLICITY, 0.0);
    for t in 1..schedule.horizon() {
        let g = WeightedDigraph::from_matrix(schedule.payment(t)).expect("square payment matrix");
        let cond = strong_components(&g);
        let cyclic = cond
            .components
            .iter()
            .find(|c| !c.is_trivial || g.has_arc(c.nodes[0], c.nodes[0]));
        if let Some(c) = cyclic {
            let nodes: Vec<String> = c.nodes.iter().map(|v| (v + 1).to_string()).collect();
            tracker.fail_with(
                format!("cycle through nodes {{{}}}", nodes.join(", ")),
                Locator::node(Some(t), c.nodes[0]),
            );
            break;
        }
    }
    tracker.finish()
}

/// A node that can cover its nominal out-flow at `t` pays it in full at `t`.
pub fn check_earliest_payment(instance: &DynamicInstance, schedule: &PaymentSchedule, tol: f64) -> Check {
    let mut tracker = Tracker::new(EARLIEST_PAYMENT, tol);
    for t in 0..schedule.horizon() {
        let available: Vec<f64> = schedule
            .inflow(instance, t)
            .iter()
            .zip(schedule.worth(t))
            .map(|(a, b)| a + b)
            .collect();
        let nominal = schedule.nominal_outflow(t);
        let out = schedule.outflow(t);
        for i in 0..instance.n() {
            if available[i] >= nominal[i] {
                tracker.note(nominal[i] - out[i], Locator::node(Some(t), i));
            }
        }
    }
    tracker.finish()
}

/// Largest residual of `p(t) = min(p̄(t), c(t) + w(t) + Aᵀ p(t))` over the
/// horizon, for a pro-rata schedule.
pub fn fixed_point_residual(instance: &DynamicInstance, schedule: &PaymentSchedule) -> Option<(f64, Locator)> {
    let vectors = schedule.vectors()?;
    let a = instance.liabilities().relative();
    let mut worst = (0.0, Locator::node(Some(0), 0));
    for (t, p) in vectors.iter().enumerate() {
        let bar = schedule.nominal_outflow(t);
        let w = schedule.worth(t);
        let c = instance.inflow(t);
        let into = a.transpose_mul(p);
        for i in 0..instance.n() {
            let target = bar[i].min(c[i] + w[i] + into[i]);
            let r = (p[i] - target).abs();
            if r > worst.0 {
                worst = (r, Locator::node(Some(t), i));
            }
        }
    }
    Some(worst)
}

/// Runs every check that the schedule's mode guarantees at an optimum:
/// admissibility, priority and earliest payment always, acyclicity in matrix
/// mode, the per-period fixed point in pro-rata mode.
pub fn certify_schedule(instance: &DynamicInstance, schedule: &PaymentSchedule, tol: f64) -> Certification {
    let mut cert = check_admissible(instance, schedule, tol).merge(check_absolute_priority(instance, schedule, tol));
    cert.checks.push(check_earliest_payment(instance, schedule, tol));
    match schedule.mode() {
        PaymentMode::Matrix => cert.checks.push(check_payment_acyclicity(schedule)),
        PaymentMode::ProRata => {
            let mut tracker = Tracker::new(FIXED_POINT, tol);
            if let Some((r, at)) = fixed_point_residual(instance, schedule) {
                tracker.note(r, at);
            }
            cert.checks.push(tracker.finish());
        }
    }
    cert
}
