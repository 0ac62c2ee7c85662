//! Exact formulation: MILP construction, LP text export and import,
//! candidate evaluation, and exhaustive search for tiny scenarios.

mod brute;
mod eval;
mod lp;
mod model;

pub use brute::{brute_force_tiny, min_bin_packing, EnumerationLimits};
pub use eval::{
    candidate_values, evaluate_objective, read_solution_values, residuals, solution_from_values, solution_values,
    Evaluation, Residual, ROW_TOL,
};
pub use lp::{export_lp_file, read_lp, read_lp_file, render_lp, write_lp};
pub use model::{build_milp, MilpModel, ModelShape, Row, Sense, VarKey, Variable, CAPACITY_EPS};
