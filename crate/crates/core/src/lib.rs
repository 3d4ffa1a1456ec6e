//! Clearing payments in static and multi-period financial liability
//! networks.
//!
//! Nodes owe each other nominal amounts `P̄`, receive external cash `c(t)`,
//! and settle through payment matrices `P(t)` (or pro-rata vectors `p(t)`).
//! Unpaid debt rolls forward with interest `α`. The solvers compute payments
//! that minimize the cumulative shortfall, and the validators certify the
//! clearing properties of any schedule.
//!
//! ```
//! use netclear_core::{clear_matrix, LiabilityMatrix, StaticInstance};
//!
//! let liabilities = LiabilityMatrix::from_rows(
//!     vec![vec![0.0, 10.0], vec![0.0, 0.0]],
//!     Some(1),
//! )?;
//! let instance = StaticInstance::new(liabilities, vec![4.0, 0.0])?;
//! let clearing = clear_matrix(&instance)?;
//! assert_eq!(clearing.report.default_set, vec![0]);
//! assert!((clearing.report.total_residual - 6.0).abs() < 1e-9);
//! # Ok::<(), Box<dyn std::error::Error>>(())
//! ```
//!
//! Node indices are 0-based in the API and 1-based in files and reports.

pub mod dense;
pub mod dynamic;
pub mod error;
pub mod format;
pub mod graph;
pub mod lp;
pub mod model;
pub mod report;
pub mod static_clearing;
pub mod validation;

pub use dense::Matrix;
pub use dynamic::{
    clear_dynamic, clear_dynamic_matrix, clear_dynamic_matrix_sequential, clear_dynamic_prorata,
    clear_dynamic_prorata_fda, clear_dynamic_prorata_sequential, clear_dynamic_prorata_weighted, scenario_compare,
    ScenarioComparison, ScenarioEntry,
};
pub use error::{ClearingError, GraphError, LpError, ModelError};
pub use format::{parse_instance, parse_schedule, FormatError, InstanceFile, ScheduleFile};
pub use graph::{reachable, strong_components, submatrix_schur_stable, CondensationInfo, WeightedDigraph};
pub use lp::{check_feasible, solve, solve_with, LinearProgram, LpSolution, LpStatus, SolverOptions};
pub use model::{
    cumulative_inflow, evolve_nominal, evolve_worth, loss, relative_liabilities, stage_weights, DynamicInstance,
    LiabilityMatrix, PaymentMode, PaymentSchedule, RelativeLiabilityMatrix, StaticInstance,
};
pub use report::{ClearingReport, Method, SolverInfo};
pub use static_clearing::{
    certify_clearing, clear_matrix, clear_prorata_fda, clear_prorata_lp, clear_prorata_lp_weighted, Clearing,
    FdaOptions, FdaResult, StaticPayments,
};
pub use validation::{
    certify_schedule, check_absolute_priority, check_admissible, check_payment_acyclicity, Certification, Check,
};
