//! Linear temporal logic: syntax, Büchi translation and model checking.

mod buchi;
mod check;
mod formula;

pub use buchi::{to_buchi, BuchiAutomaton, BuchiTransition, Literals};
pub use check::{
    find_accepting_lasso, model_check, validate_counterexample, Counterexample, TraceStep, Verdict,
};
pub use formula::{parse_formula, to_nnf, Formula, FormulaParseError};
