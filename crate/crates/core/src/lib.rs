//! Natural-language optimization pipeline: an algebraic modeling subset
//! (model and data documents), an embedded LP/MILP solver, LLM prompt
//! assembly and parsing, tabular data binding, the generate/solve/refine
//! orchestration loop, and the evaluation statistics used to compare
//! pipeline variants.

pub mod ampl;
pub mod databind;
pub mod evalstats;
pub mod instance;
pub mod llm;
pub mod pipeline;
pub mod solver;

pub use ampl::{CompileError, CompileErrorKind};
pub use instance::ProblemInstance;
pub use solver::{
    render_diagnostics, solve_lp, solve_milp, Solution, SolveError, SolveErrorKind, SolveOutcome, SolverParams,
};
