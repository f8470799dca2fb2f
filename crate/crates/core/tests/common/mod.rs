//! Reference implementations used as oracles by the integration tests.
#![allow(dead_code)]

pub mod suites;

use std::collections::{BTreeSet, HashSet};

use lhacheck::explore::Kripke;
use lhacheck::ltl::Formula;
use lhacheck::num::{Rat, Time};
use lhacheck::reservoir::{Hose, NResModel, NResState, Reservoir};
use lhacheck::syncprod::{Component, PropSpec, Rule};
use lhacheck::system::{Prop, TimedSystem};
use rand::rngs::StdRng;
use rand::Rng;

pub type Letter = BTreeSet<Prop>;

/// The ultimately periodic word `word[..loop_start] . word[loop_start..]^omega`.
#[derive(Debug, Clone)]
pub struct Lasso {
    pub word: Vec<Letter>,
    pub loop_start: usize,
}

impl Lasso {
    fn succ(&self, i: usize) -> usize {
        if i + 1 < self.word.len() {
            i + 1
        } else {
            self.loop_start
        }
    }
}

/// Truth of `f` at every position of the lasso, by fixpoint iteration over
/// the finitely many positions. A backward sweep settles every position
/// except through the back edge; the loop head is exact after one sweep
/// because its witness never needs to wrap, so a second sweep finishes.
pub fn eval_positions(f: &Formula, l: &Lasso) -> Vec<bool> {
    let n = l.word.len();
    let lfp = |a: &[bool], b: &[bool]| {
        let mut x = vec![false; n];
        for _ in 0..2 {
            for i in (0..n).rev() {
                x[i] = b[i] || (a[i] && x[l.succ(i)]);
            }
        }
        x
    };
    let gfp = |a: &[bool], b: &[bool]| {
        let mut x = vec![true; n];
        for _ in 0..2 {
            for i in (0..n).rev() {
                x[i] = b[i] && (a[i] || x[l.succ(i)]);
            }
        }
        x
    };
    let zip = |a: Vec<bool>, b: Vec<bool>, op: fn(bool, bool) -> bool| -> Vec<bool> {
        a.into_iter().zip(b).map(|(x, y)| op(x, y)).collect()
    };
    match f {
        Formula::True => vec![true; n],
        Formula::False => vec![false; n],
        Formula::Prop(p) => l.word.iter().map(|w| w.contains(p)).collect(),
        Formula::Not(a) => eval_positions(a, l).into_iter().map(|x| !x).collect(),
        Formula::And(a, b) => zip(eval_positions(a, l), eval_positions(b, l), |x, y| x && y),
        Formula::Or(a, b) => zip(eval_positions(a, l), eval_positions(b, l), |x, y| x || y),
        Formula::Implies(a, b) => zip(eval_positions(a, l), eval_positions(b, l), |x, y| !x || y),
        Formula::Next(a) => {
            let v = eval_positions(a, l);
            (0..n).map(|i| v[l.succ(i)]).collect()
        }
        Formula::Until(a, b) => lfp(&eval_positions(a, l), &eval_positions(b, l)),
        Formula::Release(a, b) => gfp(&eval_positions(a, l), &eval_positions(b, l)),
        Formula::Always(a) => gfp(&vec![false; n], &eval_positions(a, l)),
        Formula::Eventually(a) => lfp(&vec![true; n], &eval_positions(a, l)),
    }
}

pub fn eval_lasso(f: &Formula, l: &Lasso) -> bool {
    eval_positions(f, l)[0]
}

/// Lasso over Kripke state indices.
pub fn lasso_of<S>(k: &Kripke<S>, path: &[usize], loop_start: usize) -> Lasso {
    Lasso { word: path.iter().map(|&s| k.labeling[s].clone()).collect(), loop_start }
}

pub struct Exhausted;

/// Distinct lasso words of every path from the initial state with at most
/// `max_len` positions, or `None` when more than `budget` paths exist.
pub fn lasso_words<S: Clone + Eq + std::hash::Hash>(k: &Kripke<S>, max_len: usize, budget: usize) -> Option<Vec<Lasso>> {
    let succ: Vec<BTreeSet<usize>> = (0..k.len()).map(|s| k.successors(s).map(|e| e.to).collect()).collect();
    let letters: Vec<Letter> = k.labeling.iter().cloned().collect::<BTreeSet<_>>().into_iter().collect();
    let letter_of: Vec<u8> = k.labeling.iter().map(|l| letters.iter().position(|x| x == l).unwrap() as u8).collect();
    let mut words: HashSet<(Vec<u8>, usize)> = HashSet::new();
    let mut paths = 0usize;
    let mut stack: Vec<Vec<usize>> = vec![vec![k.initial]];
    while let Some(path) = stack.pop() {
        paths += 1;
        if paths > budget {
            return None;
        }
        let last = *path.last().unwrap();
        let word: Vec<u8> = path.iter().map(|&i| letter_of[i]).collect();
        for (l, s) in path.iter().enumerate() {
            if succ[last].contains(s) {
                words.insert((word.clone(), l));
            }
        }
        if path.len() < max_len {
            for &n in &succ[last] {
                let mut next = path.clone();
                next.push(n);
                stack.push(next);
            }
        }
    }
    let mut out: Vec<(Vec<u8>, usize)> = words.into_iter().collect();
    out.sort();
    Some(
        out.into_iter()
            .map(|(w, loop_start)| Lasso { word: w.iter().map(|&c| letters[c as usize].clone()).collect(), loop_start })
            .collect(),
    )
}

pub fn props(names: &[&str]) -> Vec<Prop> {
    names.iter().map(|n| Prop::new(*n).unwrap()).collect()
}

pub fn random_letter(rng: &mut StdRng, props: &[Prop]) -> Letter {
    props.iter().filter(|_| rng.gen_bool(0.5)).cloned().collect()
}

pub fn random_lasso(rng: &mut StdRng, props: &[Prop], max_len: usize) -> Lasso {
    let n = rng.gen_range(1..=max_len);
    Lasso { word: (0..n).map(|_| random_letter(rng, props)).collect(), loop_start: rng.gen_range(0..n) }
}

/// Random formula with at most `temporal` temporal operators.
pub fn random_formula(rng: &mut StdRng, props: &[Prop], temporal: usize, depth: usize) -> Formula {
    let leaf = |rng: &mut StdRng| match rng.gen_range(0..10) {
        0 => Formula::True,
        1 => Formula::False,
        _ => Formula::Prop(props[rng.gen_range(0..props.len())].clone()),
    };
    if depth == 0 {
        return leaf(rng);
    }
    let choice = if temporal == 0 { rng.gen_range(0..5) } else { rng.gen_range(0..11) };
    let sub = |rng: &mut StdRng, t: usize| random_formula(rng, props, t, depth - 1);
    let split = |rng: &mut StdRng, t: usize| {
        let left = rng.gen_range(0..=t);
        (left, t - left)
    };
    match choice {
        0 => leaf(rng),
        1 => Formula::not(sub(rng, temporal)),
        2..=4 => {
            let (a, b) = split(rng, temporal);
            let (x, y) = (sub(rng, a), sub(rng, b));
            match choice {
                2 => Formula::and(x, y),
                3 => Formula::or(x, y),
                _ => Formula::implies(x, y),
            }
        }
        5 | 6 => Formula::next(sub(rng, temporal - 1)),
        7 => Formula::always(sub(rng, temporal - 1)),
        8 => Formula::eventually(sub(rng, temporal - 1)),
        _ => {
            let (a, b) = split(rng, temporal - 1);
            let (x, y) = (sub(rng, a), sub(rng, b));
            if choice == 9 {
                Formula::until(x, y)
            } else {
                Formula::release(x, y)
            }
        }
    }
}

/// Random component over states `s0..s{n-1}` whose every state has between
/// one and `max_out` outgoing rules.
pub fn random_component(rng: &mut StdRng, n: usize, labels: &[&str], props: &[Prop], max_out: usize) -> Component {
    let states: Vec<String> = (0..n).map(|i| format!("s{i}")).collect();
    let mut rules = BTreeSet::new();
    for from in &states {
        for _ in 0..rng.gen_range(1..=max_out) {
            rules.insert(Rule {
                label: labels[rng.gen_range(0..labels.len())].to_string(),
                from: from.clone(),
                to: states[rng.gen_range(0..n)].clone(),
            });
        }
    }
    let props = props
        .iter()
        .map(|p| PropSpec { name: p.clone(), holds_at: states.iter().filter(|_| rng.gen_bool(0.5)).cloned().collect() })
        .collect();
    Component { initial: states[0].clone(), states, rules: rules.into_iter().collect(), props }
}

pub fn rat(s: &str) -> Rat {
    s.parse().unwrap()
}

pub fn init2() -> NResModel {
    let rs = (0..3)
        .map(|id| Reservoir { id, lower: rat("15"), upper: rat("50"), level: rat("30"), leak: rat("5") })
        .collect();
    NResModel::new(NResState::new(Hose { rate: rat("10"), position: 0 }, rs).unwrap())
}

/// Every (state, elapsed) pair reachable within the bound, found by walking
/// every path separately.
pub fn brute_force_reachable<M: TimedSystem>(model: &M, bound: &Time, inc: &Time) -> BTreeSet<(String, Time)> {
    fn walk<M: TimedSystem>(
        model: &M,
        state: M::State,
        elapsed: Time,
        bound: &Time,
        inc: &Time,
        on_path: &mut HashSet<(M::State, Time)>,
        out: &mut BTreeSet<(String, Time)>,
    ) {
        if !on_path.insert((state.clone(), elapsed.clone())) {
            return;
        }
        out.insert((model.serialize(&state), elapsed.clone()));
        for (_, next) in model.discrete_successors(&state).unwrap() {
            walk(model, next, elapsed.clone(), bound, inc, on_path, out);
        }
        let after = elapsed.clone() + inc.clone();
        if after < *bound {
            for next in model.timed_successors(&state, inc).unwrap() {
                walk(model, next, after.clone(), bound, inc, on_path, out);
            }
        }
        on_path.remove(&(state, elapsed));
    }
    let mut out = BTreeSet::new();
    walk(model, model.initial(), Time::zero(), bound, inc, &mut HashSet::new(), &mut out);
    out
}
