//! Automata-theoretic LTL checking over a [`Kripke`] structure.
//!
//! The Kripke structure is multiplied with the automaton for the negated
//! property and a nested depth-first search looks for a reachable accepting
//! cycle. A cycle found this way projects to a lasso-shaped run of the
//! structure that violates the property.

use std::collections::{HashMap, HashSet, VecDeque};
use std::fmt::Write as _;
use std::hash::Hash;

use serde::Serialize;

use super::buchi::{to_buchi, BuchiAutomaton};
use super::formula::{to_nnf, Formula};
use crate::explore::{Kripke, TimedState};
use crate::system::ModelError;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceStep<S> {
    pub state: TimedState<S>,
    /// Rule taken out of `state`.
    pub label: String,
}

impl<S> TraceStep<S> {
    pub fn new(state: TimedState<S>, label: impl Into<String>) -> Self {
        TraceStep { state, label: label.into() }
    }
}

/// A violating run `prefix . cycle^omega`. The last cycle step leads back to
/// the first cycle state.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Counterexample<S> {
    pub prefix: Vec<TraceStep<S>>,
    pub cycle: Vec<TraceStep<S>>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Verdict<S> {
    Holds,
    Violated(Counterexample<S>),
}

impl<S> Verdict<S> {
    pub fn holds(&self) -> bool {
        matches!(self, Verdict::Holds)
    }

    pub fn counterexample(&self) -> Option<&Counterexample<S>> {
        match self {
            Verdict::Holds => None,
            Verdict::Violated(c) => Some(c),
        }
    }
}

/// Nested depth-first search for an accepting cycle reachable from one of
/// `initial`. Returns a shortest path to the cycle's accepting seed and a
/// shortest cycle through it, as (node, edge taken out of it) pairs.
#[allow(clippy::type_complexity)]
pub fn find_accepting_lasso<N, E, F, A>(
    initial: &[N],
    mut successors: F,
    accepting: A,
) -> Option<(Vec<(N, E)>, Vec<(N, E)>)>
where
    N: Copy + Eq + Hash,
    E: Clone,
    F: FnMut(N) -> Vec<(N, E)>,
    A: Fn(N) -> bool,
{
    struct Frame<N, E> {
        node: N,
        succs: Vec<(N, E)>,
        next: usize,
    }

    fn taken<N: Copy, E: Clone>(frames: &[Frame<N, E>]) -> Vec<(N, E)> {
        frames
            .iter()
            .map(|f| (f.node, f.succs[f.next - 1].1.clone()))
            .collect()
    }

    fn initial_set<N: Copy + Eq + Hash>(initial: &[N]) -> Vec<N> {
        let mut seen = HashSet::new();
        initial.iter().copied().filter(|n| seen.insert(*n)).collect()
    }

    /// Breadth-first path from any of `from` to `to`, as taken steps.
    fn shortest_path<N: Copy + Eq + Hash, E: Clone>(
        from: &[N],
        to: N,
        succ_of: &mut impl FnMut(N) -> Vec<(N, E)>,
    ) -> Option<Vec<(N, E)>> {
        let mut parent: HashMap<N, Option<(N, E)>> = from.iter().map(|&n| (n, None)).collect();
        let mut queue: VecDeque<N> = from.iter().copied().collect();
        while let Some(n) = queue.pop_front() {
            if n == to {
                let mut path = Vec::new();
                let mut cur = n;
                while let Some(Some((prev, e))) = parent.get(&cur).cloned() {
                    path.push((prev, e));
                    cur = prev;
                }
                path.reverse();
                return Some(path);
            }
            for (m, e) in succ_of(n) {
                if let std::collections::hash_map::Entry::Vacant(v) = parent.entry(m) {
                    v.insert(Some((n, e)));
                    queue.push_back(m);
                }
            }
        }
        None
    }

    fn shortest_cycle<N: Copy + Eq + Hash, E: Clone>(
        seed: N,
        succ_of: &mut impl FnMut(N) -> Vec<(N, E)>,
    ) -> Option<Vec<(N, E)>> {
        let succs = succ_of(seed);
        let mut best: Option<Vec<(N, E)>> = None;
        for (m, e) in succs {
            if let Some(rest) = shortest_path(&[m], seed, succ_of) {
                if best.as_ref().is_none_or(|b| rest.len() + 1 < b.len()) {
                    let mut cycle = vec![(seed, e)];
                    cycle.extend(rest);
                    best = Some(cycle);
                }
            }
        }
        best
    }

    let mut cache: HashMap<N, Vec<(N, E)>> = HashMap::new();
    let mut succ_of = |n: N| -> Vec<(N, E)> { cache.entry(n).or_insert_with(|| successors(n)).clone() };

    let mut outer_seen: HashSet<N> = HashSet::new();
    let mut inner_seen: HashSet<N> = HashSet::new();

    for &root in initial {
        if !outer_seen.insert(root) {
            continue;
        }
        let mut stack = vec![Frame { node: root, succs: succ_of(root), next: 0 }];
        while let Some(top) = stack.last_mut() {
            if top.next < top.succs.len() {
                let (n, _) = top.succs[top.next].clone();
                top.next += 1;
                if outer_seen.insert(n) {
                    let succs = succ_of(n);
                    stack.push(Frame { node: n, succs, next: 0 });
                }
                continue;
            }
            // post-order: look for a cycle through an accepting node
            let seed = top.node;
            if accepting(seed) {
                inner_seen.insert(seed);
                let mut inner = vec![Frame { node: seed, succs: succ_of(seed), next: 0 }];
                while let Some(f) = inner.last_mut() {
                    if f.next < f.succs.len() {
                        let (n, _) = f.succs[f.next].clone();
                        f.next += 1;
                        if n == seed {
                            let prefix = shortest_path(&initial_set(initial), seed, &mut succ_of)
                                .unwrap_or_else(|| taken(&stack[..stack.len() - 1]));
                            let cycle = shortest_cycle(seed, &mut succ_of).unwrap_or_else(|| taken(&inner));
                            return Some((prefix, cycle));
                        }
                        if inner_seen.insert(n) {
                            let succs = succ_of(n);
                            inner.push(Frame { node: n, succs, next: 0 });
                        }
                        continue;
                    }
                    inner.pop();
                }
            }
            stack.pop();
        }
    }
    None
}

/// Checks `formula` on every infinite path of `k` from its initial state.
pub fn model_check<S>(k: &Kripke<S>, formula: &Formula) -> Result<Verdict<S>, ModelError>
where
    S: Clone + Eq + Hash,
{
    for p in formula.props() {
        if !k.props.contains(&p) {
            return Err(ModelError::UnknownProposition(p.to_string()));
        }
    }
    let automaton = to_buchi(&to_nnf(&Formula::not(formula.clone())));
    let initial: Vec<(usize, usize)> = automaton.initial.iter().map(|&q| (k.initial, q)).collect();
    let found = find_accepting_lasso(
        &initial,
        |(s, q)| {
            let mut out = Vec::new();
            for t in automaton.outgoing(q) {
                if !t.literals.satisfied_by(&k.labeling[s]) {
                    continue;
                }
                for &e in k.outgoing(s) {
                    out.push(((k.edges[e].to, t.to), e));
                }
            }
            out
        },
        |(_, q)| automaton.is_accepting(q),
    );
    let Some((prefix, cycle)) = found else {
        return Ok(Verdict::Holds);
    };
    let project = |steps: Vec<((usize, usize), usize)>| -> Vec<TraceStep<S>> {
        steps
            .into_iter()
            .map(|((s, _), e)| TraceStep::new(k.states[s].clone(), k.edges[e].label.clone()))
            .collect()
    };
    Ok(Verdict::Violated(Counterexample { prefix: project(prefix), cycle: project(cycle) }))
}

/// Whether the lasso word `prefix . cycle^omega` (given as Kripke state
/// indices) is accepted by `automaton`.
fn lasso_accepted<S>(k: &Kripke<S>, automaton: &BuchiAutomaton, word: &[usize], loop_start: usize) -> bool {
    let next_pos = |pos: usize| if pos + 1 < word.len() { pos + 1 } else { loop_start };
    let initial: Vec<(usize, usize)> = automaton.initial.iter().map(|&q| (0, q)).collect();
    find_accepting_lasso(
        &initial,
        |(pos, q)| {
            automaton
                .outgoing(q)
                .filter(|t| t.literals.satisfied_by(&k.labeling[word[pos]]))
                .map(|t| ((next_pos(pos), t.to), ()))
                .collect()
        },
        |(_, q)| automaton.is_accepting(q),
    )
    .is_some()
}

/// True iff `c` is a run of `k` from its initial state (every step follows a
/// recorded edge with the stated label and the cycle closes) and the
/// resulting infinite run violates `formula`.
pub fn validate_counterexample<S>(k: &Kripke<S>, c: &Counterexample<S>, formula: &Formula) -> bool
where
    S: Clone + Eq + Hash,
{
    if c.cycle.is_empty() {
        return false;
    }
    let steps: Vec<&TraceStep<S>> = c.prefix.iter().chain(&c.cycle).collect();
    let Some(word) = steps.iter().map(|s| k.index_of(&s.state)).collect::<Option<Vec<usize>>>() else {
        return false;
    };
    if word[0] != k.initial {
        return false;
    }
    let loop_start = c.prefix.len();
    for (i, step) in steps.iter().enumerate() {
        let to = if i + 1 < word.len() { word[i + 1] } else { word[loop_start] };
        if !k.has_edge(word[i], to, &step.label) {
            return false;
        }
    }
    if formula.props().iter().any(|p| !k.props.contains(p)) {
        return false;
    }
    let automaton = to_buchi(&to_nnf(&Formula::not(formula.clone())));
    lasso_accepted(k, &automaton, &word, loop_start)
}

impl<S: Clone + Eq + Hash> Counterexample<S> {
    fn entry(&self, k: &Kripke<S>, step: &TraceStep<S>) -> String {
        let rendered = k.index_of(&step.state).map_or("?", |i| k.rendered[i].as_str());
        if k.timed {
            format!("{{{{{rendered}}} in time {},'{}}}", step.state.elapsed, step.label)
        } else {
            format!("{{{rendered},'{}}}", step.label)
        }
    }

    /// `counterexample(<prefix entries>,<cycle entries>)`.
    pub fn to_text(&self, k: &Kripke<S>) -> String {
        let join = |steps: &[TraceStep<S>]| {
            steps.iter().map(|s| self.entry(k, s)).collect::<Vec<_>>().join(" ")
        };
        let mut out = String::new();
        let _ = write!(out, "counterexample({},{})", join(&self.prefix), join(&self.cycle));
        out
    }

    pub fn to_json(&self, k: &Kripke<S>) -> serde_json::Value {
        #[derive(Serialize)]
        struct Step<'a> {
            state: &'a str,
            elapsed: String,
            label: &'a str,
        }
        #[derive(Serialize)]
        struct Doc<'a> {
            prefix: Vec<Step<'a>>,
            cycle: Vec<Step<'a>>,
        }
        fn conv<'a, S: Clone + Eq + Hash>(k: &'a Kripke<S>, steps: &'a [TraceStep<S>]) -> Vec<Step<'a>> {
            steps
                .iter()
                .map(|s| Step {
                    state: k.index_of(&s.state).map_or("?", |i| k.rendered[i].as_str()),
                    elapsed: s.state.elapsed.to_string(),
                    label: &s.label,
                })
                .collect()
        }
        let doc = Doc { prefix: conv(k, &self.prefix), cycle: conv(k, &self.cycle) };
        serde_json::to_value(doc).expect("counterexample serializes")
    }
}
