//! Tableau translation of NNF formulas into Büchi automata.
//!
//! The expansion produces a generalized automaton whose nodes carry the
//! literals they require of the current letter; each until-subformula
//! contributes one acceptance set. A counter construction then reduces the
//! acceptance condition to a single set. Transitions leaving a node are
//! labeled by the node's literals, so the automaton reads letter `i` while
//! in state `q_i` and moves to `q_{i+1}`.

use std::collections::{BTreeMap, BTreeSet};

use super::formula::Formula;
use crate::system::Prop;

/// Literals a letter must satisfy: all of `pos` true, all of `neg` false.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Literals {
    pub pos: BTreeSet<Prop>,
    pub neg: BTreeSet<Prop>,
}

impl Literals {
    pub fn satisfied_by(&self, letter: &BTreeSet<Prop>) -> bool {
        self.pos.is_subset(letter) && self.neg.is_disjoint(letter)
    }

    pub fn is_consistent(&self) -> bool {
        self.pos.is_disjoint(&self.neg)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BuchiTransition {
    pub from: usize,
    pub to: usize,
    pub literals: Literals,
}

#[derive(Debug, Clone)]
pub struct BuchiAutomaton {
    pub states: usize,
    pub initial: Vec<usize>,
    pub transitions: Vec<BuchiTransition>,
    pub accepting: BTreeSet<usize>,
    outgoing: Vec<Vec<usize>>,
}

impl BuchiAutomaton {
    fn new(states: usize, initial: Vec<usize>, transitions: Vec<BuchiTransition>, accepting: BTreeSet<usize>) -> Self {
        let mut outgoing = vec![Vec::new(); states];
        for (i, t) in transitions.iter().enumerate() {
            outgoing[t.from].push(i);
        }
        BuchiAutomaton { states, initial, transitions, accepting, outgoing }
    }

    pub fn outgoing(&self, state: usize) -> impl Iterator<Item = &BuchiTransition> {
        self.outgoing[state].iter().map(move |&i| &self.transitions[i])
    }

    pub fn is_accepting(&self, state: usize) -> bool {
        self.accepting.contains(&state)
    }
}

#[derive(Debug, Clone)]
struct Node {
    incoming: BTreeSet<usize>,
    old: BTreeSet<Formula>,
    new: BTreeSet<Formula>,
    next: BTreeSet<Formula>,
}

/// Marker for "initial" in a node's incoming set.
const INIT: usize = usize::MAX;

/// Rewrites `[]a` as `false R a` and `<>a` as `true U a`.
fn core_form(f: &Formula) -> Formula {
    match f {
        Formula::Always(a) => Formula::release(Formula::False, core_form(a)),
        Formula::Eventually(a) => Formula::until(Formula::True, core_form(a)),
        Formula::True | Formula::False | Formula::Prop(_) | Formula::Not(_) => f.clone(),
        Formula::And(a, b) => Formula::and(core_form(a), core_form(b)),
        Formula::Or(a, b) => Formula::or(core_form(a), core_form(b)),
        Formula::Next(a) => Formula::next(core_form(a)),
        Formula::Until(a, b) => Formula::until(core_form(a), core_form(b)),
        Formula::Release(a, b) => Formula::release(core_form(a), core_form(b)),
        Formula::Implies(..) => panic!("formula is not in negation normal form"),
    }
}

fn untils(f: &Formula, out: &mut BTreeSet<Formula>) {
    match f {
        Formula::Until(a, b) => {
            out.insert(f.clone());
            untils(a, out);
            untils(b, out);
        }
        Formula::And(a, b) | Formula::Or(a, b) | Formula::Release(a, b) | Formula::Implies(a, b) => {
            untils(a, out);
            untils(b, out);
        }
        Formula::Not(a) | Formula::Next(a) | Formula::Always(a) | Formula::Eventually(a) => untils(a, out),
        Formula::True | Formula::False | Formula::Prop(_) => {}
    }
}

fn negated(lit: &Formula) -> Option<Formula> {
    match lit {
        Formula::Prop(_) => Some(Formula::not(lit.clone())),
        Formula::Not(inner) => Some((**inner).clone()),
        _ => None,
    }
}

struct Expander {
    done: Vec<Node>,
}

impl Expander {
    fn expand(&mut self, start: Node) {
        let mut work = vec![start];
        while let Some(mut node) = work.pop() {
            let Some(eta) = node.new.iter().next().cloned() else {
                if let Some(existing) = self
                    .done
                    .iter_mut()
                    .find(|n| n.old == node.old && n.next == node.next)
                {
                    existing.incoming.extend(node.incoming);
                    continue;
                }
                let id = self.done.len();
                let successor = Node {
                    incoming: [id].into(),
                    old: BTreeSet::new(),
                    new: node.next.clone(),
                    next: BTreeSet::new(),
                };
                self.done.push(node);
                work.push(successor);
                continue;
            };
            node.new.remove(&eta);
            match &eta {
                Formula::False => {}
                Formula::True => {
                    node.old.insert(eta);
                    work.push(node);
                }
                Formula::Prop(_) | Formula::Not(_) => {
                    let neg = negated(&eta).expect("literal");
                    if !node.old.contains(&neg) {
                        node.old.insert(eta);
                        work.push(node);
                    }
                }
                Formula::And(a, b) => {
                    for part in [a, b] {
                        if !node.old.contains(part.as_ref()) {
                            node.new.insert((**part).clone());
                        }
                    }
                    node.old.insert(eta);
                    work.push(node);
                }
                Formula::Next(a) => {
                    node.next.insert((**a).clone());
                    node.old.insert(eta);
                    work.push(node);
                }
                Formula::Or(a, b) => {
                    let (n1, n2) = self.split(node, &eta, &[&**a], &[], &[&**b]);
                    work.push(n2);
                    work.push(n1);
                }
                Formula::Until(a, b) => {
                    let (n1, n2) = self.split(node, &eta, &[&**a], &[&eta], &[&**b]);
                    work.push(n2);
                    work.push(n1);
                }
                Formula::Release(a, b) => {
                    let (n1, n2) = self.split(node, &eta, &[&**b], &[&eta], &[&**a, &**b]);
                    work.push(n2);
                    work.push(n1);
                }
                Formula::Always(_) | Formula::Eventually(_) | Formula::Implies(..) => {
                    unreachable!("core form has no [], <> or ->")
                }
            }
        }
    }

    fn split(
        &self,
        node: Node,
        eta: &Formula,
        new1: &[&Formula],
        next1: &[&Formula],
        new2: &[&Formula],
    ) -> (Node, Node) {
        let mut n1 = node.clone();
        let mut n2 = node;
        for f in new1 {
            if !n1.old.contains(*f) {
                n1.new.insert((*f).clone());
            }
        }
        for f in next1 {
            n1.next.insert((*f).clone());
        }
        for f in new2 {
            if !n2.old.contains(*f) {
                n2.new.insert((*f).clone());
            }
        }
        n1.old.insert(eta.clone());
        n2.old.insert(eta.clone());
        (n1, n2)
    }
}

fn literals_of(old: &BTreeSet<Formula>) -> Literals {
    let mut lits = Literals::default();
    for f in old {
        match f {
            Formula::Prop(p) => {
                lits.pos.insert(p.clone());
            }
            Formula::Not(inner) => {
                if let Formula::Prop(p) = inner.as_ref() {
                    lits.neg.insert(p.clone());
                }
            }
            _ => {}
        }
    }
    lits
}

/// Builds an automaton accepting exactly the infinite words that satisfy
/// `f`. The input must be in negation normal form.
pub fn to_buchi(f: &Formula) -> BuchiAutomaton {
    assert!(f.is_nnf(), "to_buchi expects a formula in negation normal form");
    let core = core_form(f);
    let mut ex = Expander { done: Vec::new() };
    ex.expand(Node {
        incoming: [INIT].into(),
        old: BTreeSet::new(),
        new: [core.clone()].into(),
        next: BTreeSet::new(),
    });
    let nodes = ex.done;

    let mut until_set = BTreeSet::new();
    untils(&core, &mut until_set);
    // one acceptance set per until: nodes that do not owe the eventuality
    let acceptance: Vec<BTreeSet<usize>> = until_set
        .iter()
        .map(|u| {
            let Formula::Until(_, rhs) = u else { unreachable!() };
            (0..nodes.len())
                .filter(|&i| !nodes[i].old.contains(u) || nodes[i].old.contains(rhs.as_ref()))
                .collect()
        })
        .collect();

    let labels: Vec<Literals> = nodes.iter().map(|n| literals_of(&n.old)).collect();
    let mut edges: Vec<(usize, usize)> = Vec::new();
    let mut initial_nodes = Vec::new();
    for (to, n) in nodes.iter().enumerate() {
        for &from in &n.incoming {
            if from == INIT {
                initial_nodes.push(to);
            } else {
                edges.push((from, to));
            }
        }
    }
    edges.sort_unstable();
    initial_nodes.sort_unstable();

    let k = acceptance.len();
    if k <= 1 {
        let accepting = if k == 0 { (0..nodes.len()).collect() } else { acceptance[0].clone() };
        let transitions = edges
            .iter()
            .map(|&(from, to)| BuchiTransition { from, to, literals: labels[from].clone() })
            .collect();
        return BuchiAutomaton::new(nodes.len(), initial_nodes, transitions, accepting);
    }

    // counter construction over (node, index of the acceptance set awaited)
    let mut ids: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    let mut order = Vec::new();
    let mut id_of = |key: (usize, usize), order: &mut Vec<(usize, usize)>| {
        *ids.entry(key).or_insert_with(|| {
            order.push(key);
            order.len() - 1
        })
    };
    let initial: Vec<usize> = initial_nodes.iter().map(|&q| id_of((q, 0), &mut order)).collect();
    let mut transitions = Vec::new();
    let mut cursor = 0;
    while cursor < order.len() {
        let (q, i) = order[cursor];
        let j = if acceptance[i].contains(&q) { (i + 1) % k } else { i };
        for &(from, to) in edges.iter().filter(|(from, _)| *from == q) {
            let target = id_of((to, j), &mut order);
            transitions.push(BuchiTransition { from: cursor, to: target, literals: labels[from].clone() });
        }
        cursor += 1;
    }
    let accepting = order
        .iter()
        .enumerate()
        .filter(|(_, &(q, i))| i == k - 1 && acceptance[k - 1].contains(&q))
        .map(|(id, _)| id)
        .collect();
    BuchiAutomaton::new(order.len(), initial, transitions, accepting)
}
