//! Time-bounded explicit-state exploration.
//!
//! States are explored breadth-first from `(initial, 0)`. Each state first
//! yields its discrete successors (zero duration), then its tick successors
//! for exactly one `increment` of time, provided `elapsed + increment` stays
//! strictly below the time bound. Two timed states are identified when both
//! the model state and the elapsed time agree, so exploration terminates.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};
use std::fmt::Write as _;

use serde::Serialize;

use crate::num::{Rat, Time};
use crate::reservoir::NResState;
use crate::system::{ModelError, Prop, TimedSystem};

pub const TICK: &str = "tick";
pub const STUTTER: &str = "stutter";

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TimedState<S> {
    pub state: S,
    pub elapsed: Time,
}

impl<S> TimedState<S> {
    pub fn new(state: S, elapsed: Time) -> Self {
        TimedState { state, elapsed }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KripkeEdge {
    pub from: usize,
    pub to: usize,
    pub label: String,
    pub duration: Time,
}

/// Finite, total, time-bounded state graph with proposition labels.
#[derive(Debug, Clone)]
pub struct Kripke<S> {
    pub states: Vec<TimedState<S>>,
    pub initial: usize,
    pub edges: Vec<KripkeEdge>,
    pub labeling: Vec<BTreeSet<Prop>>,
    /// Every proposition the model declares, true somewhere or not.
    pub props: BTreeSet<Prop>,
    /// Rendered model states, aligned with `states`.
    pub rendered: Vec<String>,
    pub timed: bool,
    /// Edge by which each state was first discovered (`None` for the root).
    pub discovered_by: Vec<Option<usize>>,
    index: HashMap<TimedState<S>, usize>,
    outgoing: Vec<Vec<usize>>,
}

impl<S: Clone + Eq + std::hash::Hash> Kripke<S> {
    pub fn index_of(&self, ts: &TimedState<S>) -> Option<usize> {
        self.index.get(ts).copied()
    }

    /// Indices into `edges` leaving `state`, in exploration order.
    pub fn outgoing(&self, state: usize) -> &[usize] {
        &self.outgoing[state]
    }

    pub fn successors(&self, state: usize) -> impl Iterator<Item = &KripkeEdge> {
        self.outgoing[state].iter().map(move |&e| &self.edges[e])
    }

    pub fn has_edge(&self, from: usize, to: usize, label: &str) -> bool {
        self.successors(from).any(|e| e.to == to && e.label == label)
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    /// Labels and states along the discovery path from the root to `state`.
    pub fn discovery_path(&self, state: usize) -> Vec<(String, TimedState<S>)> {
        let mut path = Vec::new();
        let mut cur = state;
        while let Some(e) = self.discovered_by[cur] {
            let edge = &self.edges[e];
            path.push((edge.label.clone(), self.states[cur].clone()));
            cur = edge.from;
        }
        path.reverse();
        path
    }
}

fn check_bounds(time_bound: &Time, increment: &Time) -> Result<(), ModelError> {
    if increment.is_zero() {
        return Err(ModelError::Invalid("time increment must be > 0".into()));
    }
    if time_bound.is_zero() {
        return Err(ModelError::Invalid("time bound must be > 0".into()));
    }
    Ok(())
}

/// Explores every timed state reachable within the bound and labels each one
/// with the propositions it satisfies. States without successors get a
/// zero-duration `stutter` self-loop so every path is infinite.
pub fn build_kripke<M: TimedSystem>(
    model: &M,
    time_bound: &Time,
    increment: &Time,
) -> Result<Kripke<M::State>, ModelError> {
    check_bounds(time_bound, increment)?;
    let props: BTreeSet<Prop> = model.props().into_iter().collect();
    let mut k = Kripke {
        states: Vec::new(),
        initial: 0,
        edges: Vec::new(),
        labeling: Vec::new(),
        props,
        rendered: Vec::new(),
        timed: model.is_timed(),
        discovered_by: Vec::new(),
        index: HashMap::new(),
        outgoing: Vec::new(),
    };

    let mut queue = VecDeque::new();
    let root = TimedState::new(model.initial(), Time::zero());
    intern(model, &mut k, root, None, &mut queue)?;

    while let Some(i) = queue.pop_front() {
        let current = k.states[i].clone();
        for (label, next) in model.discrete_successors(&current.state)? {
            let edge = k.edges.len();
            let to = intern(model, &mut k, TimedState::new(next, current.elapsed.clone()), Some(edge), &mut queue)?;
            push_edge(&mut k, i, to, label, Time::zero());
        }
        let after = &current.elapsed + increment;
        if after < *time_bound {
            for next in model.timed_successors(&current.state, increment)? {
                let edge = k.edges.len();
                let to = intern(model, &mut k, TimedState::new(next, after.clone()), Some(edge), &mut queue)?;
                push_edge(&mut k, i, to, TICK.to_string(), increment.clone());
            }
        }
        if k.outgoing[i].is_empty() {
            push_edge(&mut k, i, i, STUTTER.to_string(), Time::zero());
        }
    }
    Ok(k)
}

fn intern<M: TimedSystem>(
    model: &M,
    k: &mut Kripke<M::State>,
    ts: TimedState<M::State>,
    via: Option<usize>,
    queue: &mut VecDeque<usize>,
) -> Result<usize, ModelError> {
    if let Some(&i) = k.index.get(&ts) {
        return Ok(i);
    }
    let i = k.states.len();
    let mut label = BTreeSet::new();
    for p in &k.props {
        if model.holds(&ts.state, p)? {
            label.insert(p.clone());
        }
    }
    k.rendered.push(model.render(&ts.state));
    k.labeling.push(label);
    k.discovered_by.push(via);
    k.outgoing.push(Vec::new());
    k.index.insert(ts.clone(), i);
    k.states.push(ts);
    queue.push_back(i);
    Ok(i)
}

fn push_edge<S>(k: &mut Kripke<S>, from: usize, to: usize, label: String, duration: Time) {
    k.outgoing[from].push(k.edges.len());
    k.edges.push(KripkeEdge { from, to, label, duration });
}

pub type Bindings = BTreeMap<String, String>;

/// Something a model state can be matched against.
pub trait StatePattern<S> {
    fn matches(&self, state: &S) -> Option<Bindings>;
}

/// Matches every state with no bindings.
#[derive(Debug, Clone, Copy, Default)]
pub struct Wildcard;

impl<S> StatePattern<S> for Wildcard {
    fn matches(&self, _: &S) -> Option<Bindings> {
        Some(Bindings::new())
    }
}

/// Per-reservoir constraint; `None` fields are wildcards.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ReservoirPattern {
    pub id: u64,
    pub level: Option<Rat>,
    pub lower: Option<Rat>,
    pub upper: Option<Rat>,
    pub leak: Option<Rat>,
}

/// Pattern over n-reservoir configurations. Reservoirs not mentioned are
/// unconstrained; an empty pattern with no hose constraint matches anything.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SearchPattern {
    pub hose: Option<u64>,
    pub reservoirs: Vec<ReservoirPattern>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("bad pattern term `{term}`: {reason}")]
pub struct PatternError {
    pub term: String,
    pub reason: String,
}

impl SearchPattern {
    pub fn wildcard() -> Self {
        SearchPattern::default()
    }

    /// Parses `*`, or whitespace/comma separated terms `hose=N` and
    /// `R<id>.hth=<rat>|*`.
    pub fn parse(text: &str) -> Result<Self, PatternError> {
        let text = text.trim();
        let mut pat = SearchPattern::default();
        if text == "*" {
            return Ok(pat);
        }
        let err = |term: &str, reason: &str| PatternError { term: term.to_string(), reason: reason.to_string() };
        let terms: Vec<&str> = text.split(|c: char| c == ',' || c.is_whitespace()).filter(|t| !t.is_empty()).collect();
        if terms.is_empty() {
            return Err(err(text, "empty pattern"));
        }
        for term in terms {
            let (lhs, rhs) = term.split_once('=').ok_or_else(|| err(term, "expected `=`"))?;
            if lhs == "hose" {
                if pat.hose.is_some() {
                    return Err(err(term, "hose given twice"));
                }
                pat.hose = Some(rhs.parse().map_err(|_| err(term, "hose position must be a natural number"))?);
                continue;
            }
            let rest = lhs.strip_prefix('R').ok_or_else(|| err(term, "expected `hose` or `R<id>.hth`"))?;
            let (id, attr) = rest.split_once('.').ok_or_else(|| err(term, "expected `R<id>.hth`"))?;
            let id: u64 = id.parse().map_err(|_| err(term, "reservoir id must be a natural number"))?;
            if attr != "hth" {
                return Err(err(term, "only the `hth` attribute can be constrained"));
            }
            if pat.reservoirs.iter().any(|r| r.id == id) {
                return Err(err(term, "reservoir given twice"));
            }
            let level = match rhs {
                "*" => None,
                v => Some(v.parse::<Rat>().map_err(|e| err(term, &e.to_string()))?),
            };
            pat.reservoirs.push(ReservoirPattern { id, level, ..Default::default() });
        }
        Ok(pat)
    }

    /// Every referenced id must exist in the configuration.
    pub fn validate(&self, state: &NResState) -> Result<(), ModelError> {
        if let Some(h) = self.hose {
            if !state.reservoirs.contains_key(&h) {
                return Err(ModelError::Invalid(format!("pattern: hose position {h} is not a reservoir id")));
            }
        }
        for r in &self.reservoirs {
            if !state.reservoirs.contains_key(&r.id) {
                return Err(ModelError::Invalid(format!("pattern: unknown reservoir {}", r.id)));
            }
        }
        Ok(())
    }

    pub fn is_wildcard(&self) -> bool {
        self.hose.is_none() && self.reservoirs.is_empty()
    }
}

impl StatePattern<NResState> for SearchPattern {
    fn matches(&self, state: &NResState) -> Option<Bindings> {
        let mut b = Bindings::new();
        if let Some(h) = self.hose {
            if state.hose.position != h {
                return None;
            }
        }
        for p in &self.reservoirs {
            let r = state.reservoirs.get(&p.id)?;
            let exact = |want: &Option<Rat>, have: &Rat| want.as_ref().is_none_or(|w| w == have);
            if !exact(&p.level, &r.level)
                || !exact(&p.lower, &r.lower)
                || !exact(&p.upper, &r.upper)
                || !exact(&p.leak, &r.leak)
            {
                return None;
            }
            if p.level.is_none() {
                b.insert(format!("X{}", p.id), r.level.to_string());
            }
            let mut rest = Vec::new();
            if p.lower.is_none() || p.upper.is_none() {
                rest.push(format!("thr:({},{})", r.lower, r.upper));
            }
            if p.leak.is_none() {
                rest.push(format!("rte: {}", r.leak));
            }
            if !rest.is_empty() {
                b.insert(format!("RA{}", p.id), rest.join(", "));
            }
        }
        Some(b)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Solution<S> {
    pub state: TimedState<S>,
    pub bindings: Bindings,
    pub rendered: String,
    /// Steps from the initial state, each with the rule that produced it.
    pub trace: Vec<(String, TimedState<S>)>,
}

/// Every distinct reachable timed state matching `pattern`, ordered by
/// elapsed time and then discovery order.
pub fn search<M, P>(
    model: &M,
    pattern: &P,
    time_bound: &Time,
    increment: &Time,
) -> Result<Vec<Solution<M::State>>, ModelError>
where
    M: TimedSystem,
    P: StatePattern<M::State>,
{
    let k = build_kripke(model, time_bound, increment)?;
    let mut out: Vec<Solution<M::State>> = k
        .states
        .iter()
        .enumerate()
        .filter_map(|(i, ts)| {
            pattern.matches(&ts.state).map(|bindings| Solution {
                state: ts.clone(),
                bindings,
                rendered: k.rendered[i].clone(),
                trace: k.discovery_path(i),
            })
        })
        .collect();
    out.sort_by(|a, b| a.state.elapsed.cmp(&b.state.elapsed));
    Ok(out)
}

/// Text report in the style of a rewriting-logic timed search session.
pub fn format_solutions<S>(solutions: &[Solution<S>]) -> String {
    let mut out = String::new();
    if solutions.is_empty() {
        out.push_str("No solution\n");
        return out;
    }
    for (n, s) in solutions.iter().enumerate() {
        let _ = writeln!(out, "Solution {}", n + 1);
        let _ = writeln!(out, "S:System --> {}; TIME_ELAPSED:Time --> {}", s.rendered, s.state.elapsed);
        for (var, val) in &s.bindings {
            let _ = writeln!(out, "{var} --> {val}");
        }
        out.push('\n');
    }
    out.push_str("No more solutions\n");
    out
}

#[derive(Serialize)]
struct SolutionJson<'a> {
    state: &'a str,
    elapsed: String,
    #[serde(skip_serializing_if = "BTreeMap::is_empty")]
    bindings: &'a Bindings,
}

#[derive(Serialize)]
struct SolutionsJson<'a> {
    solutions: Vec<SolutionJson<'a>>,
}

pub fn solutions_json<S>(solutions: &[Solution<S>]) -> serde_json::Value {
    let doc = SolutionsJson {
        solutions: solutions
            .iter()
            .map(|s| SolutionJson { state: &s.rendered, elapsed: s.state.elapsed.to_string(), bindings: &s.bindings })
            .collect(),
    };
    serde_json::to_value(doc).expect("solutions serialize")
}
