//! Atomic propositions and the timed transition system contract shared by
//! every model (hybrid automata, reservoir systems, component products).

use std::fmt;
use std::hash::Hash;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::num::Time;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("unknown variable `{0}`")]
    UnknownVariable(String),
    #[error("unknown location `{0}`")]
    UnknownLocation(String),
    #[error("unknown proposition `{0}`")]
    UnknownProposition(String),
    #[error("reservoir {id}: hose slower than leak ({rate} < {leak})")]
    HoseSlowerThanLeak { id: u64, rate: String, leak: String },
    #[error("invalid model: {0}")]
    Invalid(String),
}

/// Name of an atomic proposition, e.g. `one-down` or `refill1?`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Prop(String);

impl Prop {
    pub fn new(name: impl Into<String>) -> Result<Self, ModelError> {
        let name = name.into();
        if name.trim().is_empty() {
            return Err(ModelError::Invalid("proposition name must be nonempty".into()));
        }
        Ok(Prop(name))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl TryFrom<String> for Prop {
    type Error = ModelError;
    fn try_from(s: String) -> Result<Self, Self::Error> {
        Prop::new(s)
    }
}

impl From<Prop> for String {
    fn from(p: Prop) -> String {
        p.0
    }
}

impl fmt::Display for Prop {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// A model whose rules split into instantaneous (discrete) rewrites and tick
/// rewrites that let time elapse.
///
/// Implementations must return discrete successors in a deterministic order:
/// by rule label, then by the canonical order of the successor state.
pub trait TimedSystem {
    type State: Clone + Eq + Ord + Hash + fmt::Debug;

    fn initial(&self) -> Self::State;

    fn discrete_successors(
        &self,
        state: &Self::State,
    ) -> Result<Vec<(String, Self::State)>, ModelError>;

    /// States reachable by letting exactly `delta` time units elapse. Models
    /// with deterministic dynamics return at most one state. A zero delay
    /// yields the state itself.
    fn timed_successors(
        &self,
        state: &Self::State,
        delta: &Time,
    ) -> Result<Vec<Self::State>, ModelError>;

    fn holds(&self, state: &Self::State, prop: &Prop) -> Result<bool, ModelError>;

    fn props(&self) -> Vec<Prop>;

    /// Canonical text form: equal strings iff equal states.
    fn serialize(&self, state: &Self::State) -> String;

    /// Human-facing rendering; defaults to the canonical form.
    fn render(&self, state: &Self::State) -> String {
        self.serialize(state)
    }

    /// Whether the model has any notion of elapsing time. Untimed models
    /// print counterexamples without `in time` annotations.
    fn is_timed(&self) -> bool {
        true
    }
}

/// Sorts successor pairs into the contract order (label, then state).
pub fn sort_successors<S: Ord>(succs: &mut [(String, S)]) {
    succs.sort_by(|a, b| a.0.cmp(&b.0).then_with(|| a.1.cmp(&b.1)));
}
