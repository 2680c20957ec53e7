//! Multiobjective gradient descent.
//!
//! Direction-finding subproblems of the form
//! `min_d max_i ⟨∇F_i(x), d⟩/α_i + ½‖d‖²_B` are solved through their dual over the
//! unit simplex. Choosing the scales `α` and the metric `B` gives steepest descent
//! (`α = 1`, `B = I`), the variable metric method (`α = 1`, BFGS `B`), the
//! Barzilai-Borwein method (BB `α`, `B = I`) and the Barzilai-Borwein method with a
//! variable trade-off metric. A quasi-Newton method with per-objective BFGS matrices
//! is included as a baseline.
//!
//! ```
//! use mogd_core::{problems, run, Method, SolverConfig, Status};
//! use nalgebra::dvector;
//!
//! let problem = problems::bk1();
//! let trace = run(Method::BbdmoVm, &problem, &dvector![3.0, -1.0], &SolverConfig::default()).unwrap();
//! assert_eq!(trace.status, Status::Converged);
//! ```

pub mod bb_scales;
pub mod directions;
pub mod dual_solver;
pub mod error;
pub mod linesearch;
pub mod metric;
pub mod problems;
pub mod solver;
pub mod types;

pub use dual_solver::{check_kkt, solve_dual, solve_dual_from, DualResult};
pub use error::{Error, Result};
pub use problems::{Problem, ProblemRegistry};
pub use solver::{merit_w, run, verify_pareto_critical, Method};
pub use types::{
    check_spd, BBScales, IterRecord, Jacobian, Metric, ObjectiveValues, Point, SimplexWeights, SolveTrace,
    SolverConfig, Status,
};
