//! Synchronous product of finite labeled transition systems.
//!
//! Rules whose label occurs in both components fire jointly; other rules
//! interleave, leaving the other side unchanged. A joint state is admitted
//! only when the two sides agree on every proposition they both declare.
//! Tick rules synchronize pairwise on equal durations and must be compatible
//! at both ends.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};

use crate::num::Time;
use crate::system::{sort_successors, ModelError, Prop, TimedSystem};

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Rule {
    pub label: String,
    pub from: String,
    pub to: String,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct TickRule {
    pub from: String,
    pub to: String,
    pub duration: Time,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PropSpec {
    pub name: Prop,
    pub holds_at: BTreeSet<String>,
}

/// A finite transition system over opaque, named states.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Component {
    pub states: Vec<String>,
    pub initial: String,
    #[serde(default)]
    pub rules: Vec<Rule>,
    #[serde(default)]
    pub props: Vec<PropSpec>,
}

impl Component {
    pub fn validate(&self) -> Result<(), ModelError> {
        let states: BTreeSet<&str> = self.states.iter().map(String::as_str).collect();
        if states.len() != self.states.len() {
            return Err(ModelError::Invalid("component: duplicate state".into()));
        }
        if !states.contains(self.initial.as_str()) {
            return Err(ModelError::Invalid(format!("component: initial state `{}` is not declared", self.initial)));
        }
        for r in &self.rules {
            for end in [&r.from, &r.to] {
                if !states.contains(end.as_str()) {
                    return Err(ModelError::Invalid(format!("rule {}: unknown state `{end}`", r.label)));
                }
            }
        }
        let mut names = BTreeSet::new();
        for p in &self.props {
            if !names.insert(&p.name) {
                return Err(ModelError::Invalid(format!("proposition `{}` declared twice", p.name)));
            }
            if let Some(s) = p.holds_at.iter().find(|s| !states.contains(s.as_str())) {
                return Err(ModelError::Invalid(format!("proposition {}: unknown state `{s}`", p.name)));
            }
        }
        Ok(())
    }

    pub fn prop_names(&self) -> BTreeSet<Prop> {
        self.props.iter().map(|p| p.name.clone()).collect()
    }

    pub fn valuation(&self, state: &str, prop: &Prop) -> Result<bool, ModelError> {
        self.props
            .iter()
            .find(|p| &p.name == prop)
            .map(|p| p.holds_at.contains(state))
            .ok_or_else(|| ModelError::UnknownProposition(prop.to_string()))
    }

    pub fn labels(&self) -> BTreeSet<&str> {
        self.rules.iter().map(|r| r.label.as_str()).collect()
    }

    pub fn rules_from<'a>(&'a self, state: &'a str) -> impl Iterator<Item = &'a Rule> {
        self.rules.iter().filter(move |r| r.from == state)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TimedComponent {
    #[serde(flatten)]
    pub component: Component,
    #[serde(default)]
    pub ticks: Vec<TickRule>,
}

impl From<Component> for TimedComponent {
    fn from(component: Component) -> Self {
        TimedComponent { component, ticks: Vec::new() }
    }
}

impl TimedComponent {
    pub fn validate(&self) -> Result<(), ModelError> {
        self.component.validate()?;
        for t in &self.ticks {
            for end in [&t.from, &t.to] {
                if !self.component.states.contains(end) {
                    return Err(ModelError::Invalid(format!("tick: unknown state `{end}`")));
                }
            }
            if t.duration.is_zero() {
                return Err(ModelError::Invalid(format!("tick {} -> {}: duration must be > 0", t.from, t.to)));
            }
        }
        Ok(())
    }
}

/// Props declared by both components.
pub fn shared_props(c1: &Component, c2: &Component) -> BTreeSet<Prop> {
    c1.prop_names().intersection(&c2.prop_names()).cloned().collect()
}

/// `s1 ≈ s2`: both states agree on every proposition in `shared`.
pub fn compatible(c1: &Component, s1: &str, c2: &Component, s2: &str, shared: &BTreeSet<Prop>) -> bool {
    shared
        .iter()
        .all(|p| c1.valuation(s1, p).ok() == c2.valuation(s2, p).ok())
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ProductState {
    pub left: String,
    pub right: String,
}

impl ProductState {
    pub fn name(&self) -> String {
        format!("< {},{} >", self.left, self.right)
    }
}

/// A materialized product with the pair behind each of its states.
#[derive(Debug, Clone)]
pub struct Product {
    pub timed: TimedComponent,
    /// Aligned with `timed.component.states`.
    pub pairs: Vec<ProductState>,
}

/// Reachable part of `t1 ∥ t2` from the pair of initial states.
pub fn compose(t1: &TimedComponent, t2: &TimedComponent) -> Product {
    let (c1, c2) = (&t1.component, &t2.component);
    let shared = shared_props(c1, c2);
    let labels1 = c1.labels();
    let labels2 = c2.labels();
    let compat = |a: &str, b: &str| compatible(c1, a, c2, b, &shared);

    let mut index: BTreeMap<ProductState, usize> = BTreeMap::new();
    let mut pairs: Vec<ProductState> = Vec::new();
    let mut rules: BTreeSet<Rule> = BTreeSet::new();
    let mut ticks: BTreeSet<TickRule> = BTreeSet::new();
    let mut queue = VecDeque::new();

    let mut visit = |p: ProductState, pairs: &mut Vec<ProductState>, queue: &mut VecDeque<usize>| -> String {
        let name = p.name();
        if !index.contains_key(&p) {
            index.insert(p.clone(), pairs.len());
            queue.push_back(pairs.len());
            pairs.push(p);
        }
        name
    };

    visit(
        ProductState { left: c1.initial.clone(), right: c2.initial.clone() },
        &mut pairs,
        &mut queue,
    );
    while let Some(i) = queue.pop_front() {
        let cur = pairs[i].clone();
        let from = cur.name();
        let mut found: Vec<(String, ProductState)> = Vec::new();
        for r1 in c1.rules_from(&cur.left) {
            if labels2.contains(r1.label.as_str()) {
                for r2 in c2.rules_from(&cur.right).filter(|r2| r2.label == r1.label) {
                    if compat(&r1.to, &r2.to) {
                        found.push((r1.label.clone(), ProductState { left: r1.to.clone(), right: r2.to.clone() }));
                    }
                }
            } else if compat(&r1.to, &cur.right) {
                found.push((r1.label.clone(), ProductState { left: r1.to.clone(), right: cur.right.clone() }));
            }
        }
        for r2 in c2.rules_from(&cur.right) {
            if !labels1.contains(r2.label.as_str()) && compat(&cur.left, &r2.to) {
                found.push((r2.label.clone(), ProductState { left: cur.left.clone(), right: r2.to.clone() }));
            }
        }
        for (label, next) in found {
            let to = visit(next, &mut pairs, &mut queue);
            rules.insert(Rule { label, from: from.clone(), to });
        }

        let mut tick_targets = Vec::new();
        if compat(&cur.left, &cur.right) {
            for k1 in t1.ticks.iter().filter(|k| k.from == cur.left) {
                for k2 in t2.ticks.iter().filter(|k| k.from == cur.right && k.duration == k1.duration) {
                    if compat(&k1.to, &k2.to) {
                        tick_targets.push((k1.duration.clone(), ProductState { left: k1.to.clone(), right: k2.to.clone() }));
                    }
                }
            }
        }
        for (duration, next) in tick_targets {
            let to = visit(next, &mut pairs, &mut queue);
            ticks.insert(TickRule { from: from.clone(), to, duration });
        }
    }

    let names: Vec<String> = pairs.iter().map(ProductState::name).collect();
    let mut props = Vec::new();
    for (side, comp) in [(0, c1), (1, c2)] {
        for spec in &comp.props {
            if side == 1 && shared.contains(&spec.name) {
                continue;
            }
            let holds_at = pairs
                .iter()
                .filter(|p| spec.holds_at.contains(if side == 0 { &p.left } else { &p.right }))
                .map(ProductState::name)
                .collect();
            props.push(PropSpec { name: spec.name.clone(), holds_at });
        }
    }
    let component = Component {
        states: names,
        initial: pairs[0].name(),
        rules: rules.into_iter().collect(),
        props,
    };
    Product { timed: TimedComponent { component, ticks: ticks.into_iter().collect() }, pairs }
}

pub fn sync_product(c1: &Component, c2: &Component) -> Component {
    compose(&c1.clone().into(), &c2.clone().into()).timed.component
}

pub fn rt_sync_product(t1: &TimedComponent, t2: &TimedComponent) -> TimedComponent {
    compose(t1, t2).timed
}

/// Left-nested product `((c1 ∥ c2) ∥ c3) ...`.
pub fn product_all(components: &[TimedComponent]) -> Option<TimedComponent> {
    let (first, rest) = components.split_first()?;
    Some(rest.iter().fold(first.clone(), |acc, c| rt_sync_product(&acc, c)))
}

/// A reservoir abstracted to `ok`/`below`: `tick` takes it from `ok` to
/// `below`, `fill<i>` from `below` back to `ok`; `refill<i>?` holds at
/// `below`.
pub fn abstract_reservoir(i: u32) -> Result<Component, ModelError> {
    if i == 0 {
        return Err(ModelError::Invalid("reservoir index must be >= 1".into()));
    }
    Ok(Component {
        states: vec!["below".into(), "ok".into()],
        initial: "ok".into(),
        rules: vec![
            Rule { label: "tick".into(), from: "ok".into(), to: "below".into() },
            Rule { label: format!("fill{i}"), from: "below".into(), to: "ok".into() },
        ],
        props: vec![PropSpec { name: Prop::new(format!("refill{i}?"))?, holds_at: ["below".to_string()].into() }],
    })
}

pub const SAFE: &str = "safe";

/// Adds `safe`, true where `refill1?` and `refill2?` do not both hold.
pub fn safe_prop(product: &Component) -> Result<Component, ModelError> {
    let r1 = Prop::new("refill1?")?;
    let r2 = Prop::new("refill2?")?;
    let mut holds_at = BTreeSet::new();
    for s in &product.states {
        if !(product.valuation(s, &r1)? && product.valuation(s, &r2)?) {
            holds_at.insert(s.clone());
        }
    }
    let mut out = product.clone();
    out.props.retain(|p| p.name.as_str() != SAFE);
    out.props.push(PropSpec { name: Prop::new(SAFE)?, holds_at });
    Ok(out)
}

impl TimedSystem for TimedComponent {
    type State = String;

    fn initial(&self) -> String {
        self.component.initial.clone()
    }

    fn discrete_successors(&self, state: &String) -> Result<Vec<(String, String)>, ModelError> {
        let mut out: Vec<(String, String)> = self
            .component
            .rules_from(state)
            .map(|r| (r.label.clone(), r.to.clone()))
            .collect();
        sort_successors(&mut out);
        out.dedup();
        Ok(out)
    }

    fn timed_successors(&self, state: &String, delta: &Time) -> Result<Vec<String>, ModelError> {
        if delta.is_zero() {
            return Ok(vec![state.clone()]);
        }
        let targets: BTreeSet<String> = self
            .ticks
            .iter()
            .filter(|t| &t.from == state && &t.duration == delta)
            .map(|t| t.to.clone())
            .collect();
        Ok(targets.into_iter().collect())
    }

    fn holds(&self, state: &String, prop: &Prop) -> Result<bool, ModelError> {
        self.component.valuation(state, prop)
    }

    fn props(&self) -> Vec<Prop> {
        self.component.prop_names().into_iter().collect()
    }

    fn serialize(&self, state: &String) -> String {
        state.clone()
    }

    fn is_timed(&self) -> bool {
        !self.ticks.is_empty()
    }
}
