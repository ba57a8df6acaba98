//! Weak monadic second-order logic of κ successors: the safety condition of
//! a parametric system, a bounded evaluator and the MONA file format.

mod build;
mod eval;
mod formula;
mod mona;
mod solver;

pub use build::{
    build_config, build_deadlock, build_flow, build_init, build_inst, build_path_formula, build_pattern, build_rtree,
    build_run_formula, build_safe, build_trap, build_trapinv, interactions_of, Encoder, VariableLayout, STATE_X,
    STATE_Y1, STATE_Y2,
};
pub use eval::{bounded_eval, bounded_models, SetAssignment, Valuation};
pub use formula::{FoTerm, Formula, Sort, Wsks};
pub use mona::{emit_solver, parse_solver, Mode};
pub use solver::{parse_outcome, run_solver, SolverConfig, SolverOutcome};

use crate::node::Node;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum WsksError {
    #[error("variable `{0}` is used both as a position and as a set")]
    IllSorted(String),
    #[error("successor {direction} is out of range for κ = {kappa}")]
    DirectionOutOfRange { direction: u8, kappa: usize },
    #[error("κ = {0} is not supported by the solver format")]
    UnsupportedArity(usize),
    #[error("query refers to unknown state `{0}`")]
    UnsupportedQuery(String),
    #[error("node {node} lies beyond depth budget {budget} (succ nesting {nesting})")]
    BudgetExceeded { node: Node, budget: usize, nesting: usize },
    #[error("variable `{0}` has no value")]
    Unbound(String),
    #[error("bounded evaluation needs {0} decision variables, more than supported")]
    TooManyVariables(usize),
    #[error("more than {0} models")]
    TooManyModels(usize),
    #[error("solver binary not found: {0}")]
    SolverNotFound(String),
    #[error("solver timed out after {0} s")]
    Timeout(u64),
    #[error("cannot parse solver input or output: {0}")]
    ParseError(String),
    #[error("solver failed: {0}")]
    SolverFailed(String),
}
