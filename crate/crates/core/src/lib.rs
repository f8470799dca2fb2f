//! Explicit-state simulation, timed search and LTL model checking for linear
//! hybrid automata sampled at a fixed time increment, with exact rational
//! arithmetic throughout.

pub mod explore;
pub mod lha;
pub mod ltl;
pub mod model;
pub mod num;
pub mod reservoir;
pub mod syncprod;
pub mod system;

pub use explore::{build_kripke, search, Kripke, SearchPattern, Solution, TimedState};
pub use model::{load_model, LoadError, Model};
pub use num::{monus, Rat, Time};
pub use system::{ModelError, Prop, TimedSystem};
