//! Liability networks and the recursions that carry nominal liabilities,
//! net worths and cumulative inflows across periods.

use serde::{Deserialize, Serialize};

use crate::dense::Matrix;
use crate::error::ModelError;

/// Base tolerance for invariant checks; scaled by `max(1, scale)`.
pub const BASE_TOLERANCE: f64 = 1e-7;

pub fn scaled_tolerance(base: f64, scale: f64) -> f64 {
    base * scale.max(1.0)
}

/// Nominal obligations `P̄`: entry `(i, j)` is owed by `i` to `j`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LiabilityMatrix {
    matrix: Matrix,
    /// Optional index of the fictitious external-sector node (zero row).
    external_node: Option<usize>,
}

impl LiabilityMatrix {
    pub fn new(matrix: Matrix, external_node: Option<usize>) -> Result<Self, ModelError> {
        if !matrix.is_square() {
            return Err(ModelError::Dimension(format!(
                "liability matrix is {}x{}, expected square",
                matrix.rows(),
                matrix.cols()
            )));
        }
        if matrix.rows() == 0 {
            return Err(ModelError::Dimension("network has no nodes".into()));
        }
        for (i, j, v) in matrix.iter_entries() {
            if !v.is_finite() || v < 0.0 {
                return Err(ModelError::NegativeLiability { i, j, value: v });
            }
            if i == j && v != 0.0 {
                return Err(ModelError::NonzeroDiagonal { i, value: v });
            }
        }
        let n = matrix.rows();
        if let Some(s) = external_node {
            if s >= n {
                return Err(ModelError::ExternalNodeOutOfRange { node: s, n });
            }
            let row_sum: f64 = matrix.row(s).iter().sum();
            if row_sum != 0.0 {
                return Err(ModelError::ExternalNodeOwes { node: s, row_sum });
            }
        }
        Ok(LiabilityMatrix {
            matrix,
            external_node,
        })
    }

    pub fn from_rows(rows: Vec<Vec<f64>>, external_node: Option<usize>) -> Result<Self, ModelError> {
        Self::new(Matrix::from_rows(rows)?, external_node)
    }

    pub fn n(&self) -> usize {
        self.matrix.rows()
    }

    pub fn matrix(&self) -> &Matrix {
        &self.matrix
    }

    pub fn external_node(&self) -> Option<usize> {
        self.external_node
    }

    /// Nominal out-flows `p̄ = P̄ 1`.
    pub fn nominal_outflow(&self) -> Vec<f64> {
        self.matrix.row_sums()
    }

    /// Arcs `(i, j)` with positive liability, in row-major order.
    pub fn support(&self) -> Vec<(usize, usize)> {
        self.matrix
            .iter_entries()
            .filter(|&(_, _, v)| v > 0.0)
            .map(|(i, j, _)| (i, j))
            .collect()
    }

    pub fn scale(&self) -> f64 {
        self.matrix.max_abs()
    }

    pub fn relative(&self) -> RelativeLiabilityMatrix {
        relative_liabilities(self)
    }
}

/// Row-stochastic pro-rata matrix `A`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RelativeLiabilityMatrix(Matrix);

impl RelativeLiabilityMatrix {
    pub fn matrix(&self) -> &Matrix {
        &self.0
    }

    pub fn n(&self) -> usize {
        self.0.rows()
    }

    /// Wraps an arbitrary row-stochastic matrix.
    pub fn from_stochastic(matrix: Matrix, tol: f64) -> Result<Self, ModelError> {
        if !matrix.is_square() {
            return Err(ModelError::Dimension("relative liability matrix must be square".into()));
        }
        for (i, s) in matrix.row_sums().into_iter().enumerate() {
            if (s - 1.0).abs() > tol || matrix.row(i).iter().any(|&v| v < 0.0 || !v.is_finite()) {
                return Err(ModelError::Dimension(format!("row {} is not stochastic", i + 1)));
            }
        }
        Ok(RelativeLiabilityMatrix(matrix))
    }

    /// `Aᵀ p`
    pub fn transpose_mul(&self, p: &[f64]) -> Vec<f64> {
        self.0.transpose_mul(p)
    }

    /// `diag(p) A`
    pub fn lift(&self, p: &[f64]) -> Matrix {
        self.0.scale_rows(p)
    }
}

/// Pro-rata proportions: `a_ij = p̄_ij / p̄_i` when `p̄_i > 0`, otherwise the
/// unit row `a_ii = 1`.
pub fn relative_liabilities(liabilities: &LiabilityMatrix) -> RelativeLiabilityMatrix {
    let m = liabilities.matrix();
    let out = liabilities.nominal_outflow();
    RelativeLiabilityMatrix(Matrix::from_fn(m.rows(), m.cols(), |i, j| {
        if out[i] > 0.0 {
            m[(i, j)] / out[i]
        } else if i == j {
            1.0
        } else {
            0.0
        }
    }))
}

fn check_inflow(t: usize, c: &[f64], n: usize) -> Result<(), ModelError> {
    if c.len() != n {
        return Err(ModelError::Dimension(format!(
            "inflow c({t}) has {} entries for {n} nodes",
            c.len()
        )));
    }
    if let Some((i, &value)) = c.iter().enumerate().find(|(_, v)| !v.is_finite() || **v < 0.0) {
        return Err(ModelError::NegativeInflow { t, i, value });
    }
    Ok(())
}

/// Single-period network: liabilities plus external inflow `c`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StaticInstance {
    liabilities: LiabilityMatrix,
    inflow: Vec<f64>,
}

impl StaticInstance {
    pub fn new(liabilities: LiabilityMatrix, inflow: Vec<f64>) -> Result<Self, ModelError> {
        check_inflow(0, &inflow, liabilities.n())?;
        Ok(StaticInstance { liabilities, inflow })
    }

    pub fn liabilities(&self) -> &LiabilityMatrix {
        &self.liabilities
    }

    pub fn inflow(&self) -> &[f64] {
        &self.inflow
    }

    pub fn n(&self) -> usize {
        self.liabilities.n()
    }
}

/// Multi-period network.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DynamicInstance {
    liabilities: LiabilityMatrix,
    inflows: Vec<Vec<f64>>,
    alpha: f64,
    eta: f64,
}

impl DynamicInstance {
    /// The horizon is `inflows.len()`.
    pub fn new(
        liabilities: LiabilityMatrix,
        inflows: Vec<Vec<f64>>,
        alpha: f64,
        eta: f64,
    ) -> Result<Self, ModelError> {
        if inflows.is_empty() {
            return Err(ModelError::EmptyHorizon);
        }
        if !alpha.is_finite() || alpha < 1.0 {
            return Err(ModelError::InvalidAlpha(alpha));
        }
        if !(0.0..1.0).contains(&eta) {
            return Err(ModelError::InvalidEta(eta));
        }
        for (t, c) in inflows.iter().enumerate() {
            check_inflow(t, c, liabilities.n())?;
        }
        Ok(DynamicInstance {
            liabilities,
            inflows,
            alpha,
            eta,
        })
    }

    pub fn liabilities(&self) -> &LiabilityMatrix {
        &self.liabilities
    }

    pub fn inflows(&self) -> &[Vec<f64>] {
        &self.inflows
    }

    pub fn inflow(&self, t: usize) -> &[f64] {
        &self.inflows[t]
    }

    pub fn horizon(&self) -> usize {
        self.inflows.len()
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn n(&self) -> usize {
        self.liabilities.n()
    }

    /// Same network with a different terminal penalty.
    pub fn with_eta(&self, eta: f64) -> Result<Self, ModelError> {
        Self::new(self.liabilities.clone(), self.inflows.clone(), self.alpha, eta)
    }

    /// Single-period view of the network with inflow `c(t)`.
    pub fn static_at(&self, t: usize) -> Result<StaticInstance, ModelError> {
        let c = self.inflows.get(t).ok_or(ModelError::PeriodOutOfRange {
            t,
            horizon: self.horizon(),
        })?;
        StaticInstance::new(self.liabilities.clone(), c.clone())
    }

    /// Objective weights for this instance's horizon, interest and penalty.
    pub fn weights(&self) -> Vec<f64> {
        stage_weights(self.horizon(), self.alpha, self.eta).expect("validated at construction")
    }
}

impl From<StaticInstance> for DynamicInstance {
    fn from(s: StaticInstance) -> Self {
        DynamicInstance {
            liabilities: s.liabilities,
            inflows: vec![s.inflow],
            alpha: 1.0,
            eta: 0.0,
        }
    }
}

/// `C(t) = Σ_{k ≤ t} c(k)`.
pub fn cumulative_inflow(inflows: &[Vec<f64>], t: usize) -> Result<Vec<f64>, ModelError> {
    if t >= inflows.len() {
        return Err(ModelError::PeriodOutOfRange {
            t,
            horizon: inflows.len(),
        });
    }
    let mut acc = vec![0.0; inflows[0].len()];
    for c in &inflows[..=t] {
        for (a, v) in acc.iter_mut().zip(c) {
            *a += v;
        }
    }
    Ok(acc)
}

/// `P̄(0..=T)` by the recursion `P̄(t+1) = α (P̄(t) − P(t))`, unchecked.
pub(crate) fn nominal_recursion(initial: &Matrix, payments: &[Matrix], alpha: f64) -> Vec<Matrix> {
    let mut out = Vec::with_capacity(payments.len() + 1);
    out.push(initial.clone());
    for p in payments {
        let next = out.last().unwrap().combine(alpha, p, -alpha);
        out.push(next);
    }
    out
}

/// Nominal liability trajectory, rejecting any payment above the current
/// nominal entry (beyond the default tolerance).
pub fn evolve_nominal(
    liabilities: &LiabilityMatrix,
    payments: &[Matrix],
    alpha: f64,
) -> Result<Vec<Matrix>, ModelError> {
    let n = liabilities.n();
    let tol = scaled_tolerance(BASE_TOLERANCE, liabilities.scale());
    for (t, p) in payments.iter().enumerate() {
        if p.rows() != n || p.cols() != n {
            return Err(ModelError::Dimension(format!("payment matrix P({t}) must be {n}x{n}")));
        }
    }
    let traj = nominal_recursion(liabilities.matrix(), payments, alpha);
    for (t, p) in payments.iter().enumerate() {
        for (i, j, paid) in p.iter_entries() {
            let nominal = traj[t][(i, j)];
            if paid > nominal + tol || paid < -tol {
                return Err(ModelError::PaymentExceedsNominal {
                    t,
                    i,
                    j,
                    paid,
                    nominal,
                });
            }
        }
    }
    Ok(traj)
}

/// `P̄(t) = αᵗ P̄ − Σ_{k<t} α^{t−k} P(k)`.
pub fn nominal_closed_form(initial: &Matrix, payments: &[Matrix], alpha: f64, t: usize) -> Matrix {
    let mut acc = initial.map(|v| v * alpha.powi(t as i32));
    for (k, p) in payments.iter().enumerate().take(t) {
        acc = acc.combine(1.0, p, -alpha.powi((t - k) as i32));
    }
    acc
}

/// Worth trajectory `w(0..=T)` from `w(t+1) = w(t) + c(t) + P(t)ᵀ1 − P(t)1`.
pub fn evolve_worth(instance: &DynamicInstance, payments: &[Matrix]) -> Result<Vec<Vec<f64>>, ModelError> {
    if payments.len() != instance.horizon() {
        return Err(ModelError::Dimension(format!(
            "{} payment matrices for horizon {}",
            payments.len(),
            instance.horizon()
        )));
    }
    Ok(worth_recursion(instance.inflows(), payments))
}

pub(crate) fn worth_recursion(inflows: &[Vec<f64>], payments: &[Matrix]) -> Vec<Vec<f64>> {
    let n = inflows[0].len();
    let mut out = vec![vec![0.0; n]];
    for (c, p) in inflows.iter().zip(payments) {
        let w = out.last().unwrap();
        let into = p.col_sums();
        let from = p.row_sums();
        let next = (0..n).map(|i| w[i] + c[i] + into[i] - from[i]).collect();
        out.push(next);
    }
    out
}

/// `w(t) = C(t−1) + Σ_{k<t} (Pᵀ(k) − P(k)) 1`.
pub fn worth_closed_form(inflows: &[Vec<f64>], payments: &[Matrix], t: usize) -> Vec<f64> {
    let n = inflows[0].len();
    let mut w = if t == 0 {
        vec![0.0; n]
    } else {
        cumulative_inflow(inflows, t - 1).expect("t within horizon")
    };
    for p in payments.iter().take(t) {
        for (i, (into, from)) in p.col_sums().into_iter().zip(p.row_sums()).enumerate() {
            w[i] += into - from;
        }
    }
    w
}

/// Per-period objective weights.
///
/// With `eta = 0` these are `a_t = Σ_{j<T−t} αʲ`, i.e. `(α^{T−t} − 1)/(α − 1)`
/// (or `T − t` when `α = 1`). With a terminal penalty the weights become
/// `η α^{T−t} + (1 − η) Σ_{k<T−t} αᵏ`. Either way `a_{t−1} > α a_t`.
pub fn stage_weights(horizon: usize, alpha: f64, eta: f64) -> Result<Vec<f64>, ModelError> {
    if horizon == 0 {
        return Err(ModelError::EmptyHorizon);
    }
    if !alpha.is_finite() || alpha < 1.0 {
        return Err(ModelError::InvalidAlpha(alpha));
    }
    if !(0.0..1.0).contains(&eta) {
        return Err(ModelError::InvalidEta(eta));
    }
    let mut geometric = vec![0.0; horizon];
    let mut acc = 0.0;
    for t in (0..horizon).rev() {
        acc = 1.0 + alpha * acc;
        geometric[t] = acc;
    }
    Ok((0..horizon)
        .map(|t| eta * alpha.powi((horizon - t) as i32) + (1.0 - eta) * geometric[t])
        .collect())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PaymentMode {
    Matrix,
    #[serde(rename = "prorata")]
    ProRata,
}

impl std::fmt::Display for PaymentMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            PaymentMode::Matrix => "matrix",
            PaymentMode::ProRata => "prorata",
        })
    }
}

/// A payment sequence over the horizon together with its derived
/// nominal-liability and worth trajectories.
///
/// Pro-rata schedules keep their payment vectors and are lifted to matrices
/// `P(t) = diag(p(t)) A` with `A` fixed from the initial liabilities.
#[derive(Clone, Debug, PartialEq)]
pub struct PaymentSchedule {
    mode: PaymentMode,
    matrices: Vec<Matrix>,
    vectors: Option<Vec<Vec<f64>>>,
    nominal: Vec<Matrix>,
    worth: Vec<Vec<f64>>,
}

impl PaymentSchedule {
    pub fn from_matrices(instance: &DynamicInstance, matrices: Vec<Matrix>) -> Result<Self, ModelError> {
        let n = instance.n();
        if matrices.len() != instance.horizon() {
            return Err(ModelError::Dimension(format!(
                "{} payment matrices for horizon {}",
                matrices.len(),
                instance.horizon()
            )));
        }
        if let Some(t) = matrices.iter().position(|m| m.rows() != n || m.cols() != n) {
            return Err(ModelError::Dimension(format!("payment matrix P({t}) must be {n}x{n}")));
        }
        let nominal = nominal_recursion(instance.liabilities().matrix(), &matrices, instance.alpha());
        let worth = worth_recursion(instance.inflows(), &matrices);
        Ok(PaymentSchedule {
            mode: PaymentMode::Matrix,
            matrices,
            vectors: None,
            nominal,
            worth,
        })
    }

    pub fn from_vectors(instance: &DynamicInstance, vectors: Vec<Vec<f64>>) -> Result<Self, ModelError> {
        let n = instance.n();
        if vectors.len() != instance.horizon() {
            return Err(ModelError::Dimension(format!(
                "{} payment vectors for horizon {}",
                vectors.len(),
                instance.horizon()
            )));
        }
        if let Some(t) = vectors.iter().position(|v| v.len() != n) {
            return Err(ModelError::Dimension(format!("payment vector p({t}) must have {n} entries")));
        }
        let a = instance.liabilities().relative();
        let matrices: Vec<Matrix> = vectors.iter().map(|p| a.lift(p)).collect();
        let mut schedule = Self::from_matrices(instance, matrices)?;
        schedule.mode = PaymentMode::ProRata;
        schedule.vectors = Some(vectors);
        Ok(schedule)
    }

    pub fn mode(&self) -> PaymentMode {
        self.mode
    }

    pub fn horizon(&self) -> usize {
        self.matrices.len()
    }

    /// `P(t)`; lifted for pro-rata schedules.
    pub fn payment(&self, t: usize) -> &Matrix {
        &self.matrices[t]
    }

    pub fn matrices(&self) -> &[Matrix] {
        &self.matrices
    }

    /// Payment vectors `p(t)` of a pro-rata schedule.
    pub fn vectors(&self) -> Option<&[Vec<f64>]> {
        self.vectors.as_deref()
    }

    /// `P̄(t)` for `t = 0..=T`.
    pub fn nominal(&self, t: usize) -> &Matrix {
        &self.nominal[t]
    }

    pub fn nominal_trajectory(&self) -> &[Matrix] {
        &self.nominal
    }

    /// `w(t)` for `t = 0..=T`.
    pub fn worth(&self, t: usize) -> &[f64] {
        &self.worth[t]
    }

    pub fn worth_trajectory(&self) -> &[Vec<f64>] {
        &self.worth
    }

    /// Actual out-flow `φ_out(t) = P(t) 1` (equal to `p(t)` in pro-rata mode).
    pub fn outflow(&self, t: usize) -> Vec<f64> {
        match &self.vectors {
            Some(v) => v[t].clone(),
            None => self.matrices[t].row_sums(),
        }
    }

    /// Nominal out-flow `P̄(t) 1`.
    pub fn nominal_outflow(&self, t: usize) -> Vec<f64> {
        self.nominal[t].row_sums()
    }

    /// Actual in-flow `φ_in(t) = c(t) + P(t)ᵀ 1`.
    pub fn inflow(&self, instance: &DynamicInstance, t: usize) -> Vec<f64> {
        let into = self.matrices[t].col_sums();
        instance.inflow(t).iter().zip(into).map(|(c, v)| c + v).collect()
    }

    /// `P̄(T)`.
    pub fn residual(&self) -> &Matrix {
        self.nominal.last().unwrap()
    }

    /// `1ᵀ P̄(T) 1`.
    pub fn total_residual(&self) -> f64 {
        self.residual().sum()
    }

    /// `Σ_t a_t 1ᵀ P(t) 1` for the given weights.
    pub fn weighted_payments(&self, weights: &[f64]) -> f64 {
        self.matrices.iter().zip(weights).map(|(p, a)| a * p.sum()).sum()
    }

    /// Nodes whose residual row sum exceeds `tol`.
    pub fn default_set(&self, tol: f64) -> Vec<usize> {
        default_set(self.residual(), tol)
    }
}

pub fn default_set(residual: &Matrix, tol: f64) -> Vec<usize> {
    residual
        .row_sums()
        .into_iter()
        .enumerate()
        .filter(|&(_, s)| s > tol)
        .map(|(i, _)| i)
        .collect()
}

/// System loss `L = Σ_t 1ᵀ (P̄(t) − P(t)) 1` by direct summation.
pub fn system_loss(schedule: &PaymentSchedule) -> f64 {
    (0..schedule.horizon())
        .map(|t| schedule.nominal(t).sum() - schedule.payment(t).sum())
        .sum()
}

/// `J = (1 − η) L + η 1ᵀ P̄(T) 1`; equals `L` when `η = 0`.
pub fn penalized_loss(schedule: &PaymentSchedule, eta: f64) -> f64 {
    (1.0 - eta) * system_loss(schedule) + eta * schedule.total_residual()
}

/// Closed form `a₀ 1ᵀP̄1 − Σ_t a_t 1ᵀP(t)1` with the instance's weights.
///
/// With `η > 0` the weights already carry the terminal penalty, so this
/// equals `J`.
pub fn loss_closed_form(instance: &DynamicInstance, schedule: &PaymentSchedule) -> f64 {
    let a = instance.weights();
    a[0] * instance.liabilities().matrix().sum() - schedule.weighted_payments(&a)
}

/// Loss of an admissible schedule: `L` when `η = 0`, `J` otherwise.
pub fn loss(instance: &DynamicInstance, schedule: &PaymentSchedule) -> Result<f64, ModelError> {
    let report = crate::validation::check_admissible(instance, schedule, crate::validation::default_tolerance(instance));
    if !report.passed() {
        return Err(ModelError::Inadmissible(report.summary()));
    }
    Ok(penalized_loss(schedule, instance.eta()))
}
