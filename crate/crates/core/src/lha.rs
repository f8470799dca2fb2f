//! Linear hybrid automata with constant-rate flows.
//!
//! Constraints are kept in the normalized form `expr ~ 0`. Time passage in a
//! location moves the valuation along `v + t*r`; since every constraint is
//! affine and the trajectory is a line, an invariant that holds at both ends
//! of a step holds everywhere in between, so only endpoints are checked.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::num::{Rat, Time};
use crate::system::{sort_successors, ModelError, Prop, TimedSystem};

pub type Valuation = BTreeMap<String, Rat>;

/// `constant + sum(coeff * var)`.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct AffineExpr {
    #[serde(default, rename = "coeffs")]
    pub coefficients: BTreeMap<String, Rat>,
    #[serde(default, rename = "const")]
    pub constant: Rat,
}

impl AffineExpr {
    pub fn constant(c: Rat) -> Self {
        AffineExpr { coefficients: BTreeMap::new(), constant: c }
    }

    pub fn var(name: &str) -> Self {
        AffineExpr::term(name, Rat::one())
    }

    pub fn term(name: &str, coeff: Rat) -> Self {
        let mut coefficients = BTreeMap::new();
        coefficients.insert(name.to_string(), coeff);
        AffineExpr { coefficients, constant: Rat::zero() }
    }

    pub fn plus_const(mut self, c: &Rat) -> Self {
        self.constant = &self.constant + c;
        self
    }

    pub fn plus_term(mut self, name: &str, coeff: &Rat) -> Self {
        let entry = self.coefficients.entry(name.to_string()).or_default();
        *entry = &*entry + coeff;
        self
    }

    pub fn variables(&self) -> impl Iterator<Item = &str> {
        self.coefficients.keys().map(String::as_str)
    }

    pub fn eval(&self, valuation: &Valuation) -> Result<Rat, ModelError> {
        eval_affine(self, valuation)
    }
}

pub fn eval_affine(expr: &AffineExpr, valuation: &Valuation) -> Result<Rat, ModelError> {
    let mut acc = expr.constant.clone();
    for (var, coeff) in &expr.coefficients {
        if coeff.is_zero() {
            continue;
        }
        let x = valuation
            .get(var)
            .ok_or_else(|| ModelError::UnknownVariable(var.clone()))?;
        acc = acc + coeff * x;
    }
    Ok(acc)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Relation {
    #[serde(rename = "<")]
    Lt,
    #[serde(rename = "<=")]
    Le,
    #[serde(rename = "=")]
    Eq,
    #[serde(rename = ">=")]
    Ge,
    #[serde(rename = ">")]
    Gt,
}

impl Relation {
    fn test(self, value: &Rat) -> bool {
        let zero = Rat::zero();
        match self {
            Relation::Lt => value < &zero,
            Relation::Le => value <= &zero,
            Relation::Eq => value == &zero,
            Relation::Ge => value >= &zero,
            Relation::Gt => value > &zero,
        }
    }

    fn symbol(self) -> &'static str {
        match self {
            Relation::Lt => "<",
            Relation::Le => "<=",
            Relation::Eq => "=",
            Relation::Ge => ">=",
            Relation::Gt => ">",
        }
    }
}

/// `expr ~ 0`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AffineConstraint {
    pub expr: AffineExpr,
    #[serde(rename = "rel")]
    pub relation: Relation,
}

impl AffineConstraint {
    pub fn new(expr: AffineExpr, relation: Relation) -> Self {
        AffineConstraint { expr, relation }
    }

    /// `lhs ~ rhs`, normalized to `lhs - rhs ~ 0`.
    pub fn compare(lhs: AffineExpr, relation: Relation, rhs: &Rat) -> Self {
        AffineConstraint { expr: lhs.plus_const(&-rhs), relation }
    }
}

impl fmt::Display for AffineConstraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (var, c) in &self.expr.coefficients {
            if c.is_zero() {
                continue;
            }
            if !first {
                f.write_str(" + ")?;
            }
            first = false;
            if *c == Rat::one() {
                write!(f, "{var}")?;
            } else {
                write!(f, "{c}*{var}")?;
            }
        }
        if first {
            write!(f, "{}", self.expr.constant)?;
        } else if !self.expr.constant.is_zero() {
            write!(f, " + {}", self.expr.constant)?;
        }
        write!(f, " {} 0", self.relation.symbol())
    }
}

pub fn holds(constraint: &AffineConstraint, valuation: &Valuation) -> Result<bool, ModelError> {
    let v = eval_affine(&constraint.expr, valuation)?;
    Ok(constraint.relation.test(&v))
}

fn holds_all(constraints: &[AffineConstraint], valuation: &Valuation) -> Result<bool, ModelError> {
    for c in constraints {
        if !holds(c, valuation)? {
            return Ok(false);
        }
    }
    Ok(true)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Location {
    pub name: String,
    #[serde(default)]
    pub rates: BTreeMap<String, Rat>,
    #[serde(default)]
    pub invariant: Vec<AffineConstraint>,
    /// Extra precondition on the start state of every time step taken in
    /// this location. Unlike the invariant it is not required at the end.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub tick_guard: Vec<AffineConstraint>,
}

impl Location {
    pub fn rate(&self, var: &str) -> Rat {
        self.rates.get(var).cloned().unwrap_or_default()
    }
}

/// Moves every variable along its rate for `delta` time units.
pub fn flow(location: &Location, valuation: &Valuation, delta: &Time) -> Valuation {
    valuation
        .iter()
        .map(|(var, x)| {
            let next = x + &(delta.value() * &location.rate(var));
            (var.clone(), next)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Edge {
    #[serde(rename = "from")]
    pub source: String,
    #[serde(rename = "to")]
    pub target: String,
    pub label: String,
    #[serde(default)]
    pub guard: Vec<AffineConstraint>,
    /// Simultaneous assignment: right-hand sides read the pre-state.
    #[serde(default, rename = "assign")]
    pub assignments: BTreeMap<String, AffineExpr>,
}

/// A named proposition defined by a conjunction of constraints.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PropDef {
    pub name: Prop,
    #[serde(default)]
    pub constraint: Vec<AffineConstraint>,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct LhaState {
    pub location: String,
    pub valuation: Valuation,
}

impl fmt::Display for LhaState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.location)?;
        for (var, x) in &self.valuation {
            write!(f, ", {var}: {x}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InitialState {
    pub location: String,
    pub valuation: Valuation,
}

/// A linear hybrid automaton. Each location name also acts as an atomic
/// proposition that holds exactly in that location.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Lha {
    pub variables: Vec<String>,
    pub locations: Vec<Location>,
    pub edges: Vec<Edge>,
    #[serde(rename = "init")]
    pub initial: InitialState,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub props: Vec<PropDef>,
}

impl Lha {
    /// Checks every structural invariant and that the initial valuation
    /// satisfies the initial location's invariant.
    pub fn validate(&self) -> Result<(), ModelError> {
        let vars: BTreeSet<&str> = self.variables.iter().map(String::as_str).collect();
        if vars.len() != self.variables.len() {
            return Err(ModelError::Invalid("duplicate variable name".into()));
        }
        let check_expr = |e: &AffineExpr, ctx: &str| -> Result<(), ModelError> {
            match e.variables().find(|v| !vars.contains(v)) {
                Some(v) => Err(ModelError::Invalid(format!("{ctx}: undeclared variable `{v}`"))),
                None => Ok(()),
            }
        };
        let mut names = BTreeSet::new();
        for loc in &self.locations {
            if !names.insert(loc.name.as_str()) {
                return Err(ModelError::Invalid(format!("duplicate location `{}`", loc.name)));
            }
            if let Some(v) = loc.rates.keys().find(|v| !vars.contains(v.as_str())) {
                return Err(ModelError::Invalid(format!(
                    "location {}: rate for undeclared variable `{v}`",
                    loc.name
                )));
            }
            for c in loc.invariant.iter().chain(&loc.tick_guard) {
                check_expr(&c.expr, &format!("location {}", loc.name))?;
            }
        }
        for e in &self.edges {
            for end in [&e.source, &e.target] {
                if !names.contains(end.as_str()) {
                    return Err(ModelError::Invalid(format!(
                        "edge {}: unknown location `{end}`",
                        e.label
                    )));
                }
            }
            for c in &e.guard {
                check_expr(&c.expr, &format!("edge {}", e.label))?;
            }
            for (target, rhs) in &e.assignments {
                if !vars.contains(target.as_str()) {
                    return Err(ModelError::Invalid(format!(
                        "edge {}: assignment to undeclared variable `{target}`",
                        e.label
                    )));
                }
                check_expr(rhs, &format!("edge {}", e.label))?;
            }
        }
        let mut prop_names = BTreeSet::new();
        for p in &self.props {
            if names.contains(p.name.as_str()) || !prop_names.insert(p.name.as_str()) {
                return Err(ModelError::Invalid(format!("proposition `{}` is not unique", p.name)));
            }
            for c in &p.constraint {
                check_expr(&c.expr, &format!("proposition {}", p.name))?;
            }
        }
        let init = &self.initial;
        let init_vars: BTreeSet<&str> = init.valuation.keys().map(String::as_str).collect();
        if init_vars != vars {
            return Err(ModelError::Invalid(
                "initial valuation must assign exactly the declared variables".into(),
            ));
        }
        let loc = self.location(&init.location)?;
        for c in &loc.invariant {
            if !holds(c, &init.valuation)? {
                return Err(ModelError::Invalid(format!(
                    "initial valuation violates invariant `{c}` of location {}",
                    loc.name
                )));
            }
        }
        Ok(())
    }

    pub fn location(&self, name: &str) -> Result<&Location, ModelError> {
        self.locations
            .iter()
            .find(|l| l.name == name)
            .ok_or_else(|| ModelError::UnknownLocation(name.to_string()))
    }

    pub fn initial_state(&self) -> LhaState {
        LhaState {
            location: self.initial.location.clone(),
            valuation: self.initial.valuation.clone(),
        }
    }

    /// The state reached by letting `delta` elapse, or `None` when the
    /// location's tick guard fails at the start or its invariant fails at
    /// either end of the step.
    pub fn timed_successor(
        &self,
        state: &LhaState,
        delta: &Time,
    ) -> Result<Option<LhaState>, ModelError> {
        if delta.is_zero() {
            return Ok(Some(state.clone()));
        }
        let loc = self.location(&state.location)?;
        if !holds_all(&loc.tick_guard, &state.valuation)?
            || !holds_all(&loc.invariant, &state.valuation)?
        {
            return Ok(None);
        }
        let next = flow(loc, &state.valuation, delta);
        if !holds_all(&loc.invariant, &next)? {
            return Ok(None);
        }
        Ok(Some(LhaState { location: state.location.clone(), valuation: next }))
    }

    pub fn discrete_successors(
        &self,
        state: &LhaState,
    ) -> Result<Vec<(String, LhaState)>, ModelError> {
        let mut out = Vec::new();
        for edge in self.edges.iter().filter(|e| e.source == state.location) {
            if !holds_all(&edge.guard, &state.valuation)? {
                continue;
            }
            let mut next = state.valuation.clone();
            for (target, rhs) in &edge.assignments {
                next.insert(target.clone(), eval_affine(rhs, &state.valuation)?);
            }
            let target = self.location(&edge.target)?;
            if holds_all(&target.invariant, &next)? {
                out.push((
                    edge.label.clone(),
                    LhaState { location: edge.target.clone(), valuation: next },
                ));
            }
        }
        sort_successors(&mut out);
        Ok(out)
    }
}

impl TimedSystem for Lha {
    type State = LhaState;

    fn initial(&self) -> LhaState {
        self.initial_state()
    }

    fn discrete_successors(&self, state: &LhaState) -> Result<Vec<(String, LhaState)>, ModelError> {
        Lha::discrete_successors(self, state)
    }

    fn timed_successors(&self, state: &LhaState, delta: &Time) -> Result<Vec<LhaState>, ModelError> {
        Ok(self.timed_successor(state, delta)?.into_iter().collect())
    }

    fn holds(&self, state: &LhaState, prop: &Prop) -> Result<bool, ModelError> {
        if let Some(def) = self.props.iter().find(|p| &p.name == prop) {
            return holds_all(&def.constraint, &state.valuation);
        }
        if self.locations.iter().any(|l| l.name == prop.as_str()) {
            return Ok(state.location == prop.as_str());
        }
        Err(ModelError::UnknownProposition(prop.to_string()))
    }

    fn props(&self) -> Vec<Prop> {
        let mut out: Vec<Prop> = self.props.iter().map(|p| p.name.clone()).collect();
        out.extend(self.locations.iter().filter_map(|l| Prop::new(l.name.clone()).ok()));
        out.sort();
        out
    }

    fn serialize(&self, state: &LhaState) -> String {
        state.to_string()
    }
}

/// Parameters of the two-tank system: hose intake `w`, outflows `v1`, `v2`,
/// lower thresholds `r1`, `r2` and initial levels `x1`, `x2`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TwoReservoir {
    pub w: Rat,
    pub v1: Rat,
    pub v2: Rat,
    pub r1: Rat,
    pub r2: Rat,
    pub x1: Rat,
    pub x2: Rat,
}

/// Builds the two-tank automaton. `q1` has the hose on tank 1, `q2` on
/// tank 2. Switching to the other tank is allowed once its level is at or
/// below threshold; time may pass in `q1` only while `x2 > r2` (resp. `x1 > r1`
/// in `q2`). Levels may never go negative.
pub fn two_reservoir(p: &TwoReservoir) -> Result<Lha, ModelError> {
    for (name, v) in [
        ("w", &p.w),
        ("v1", &p.v1),
        ("v2", &p.v2),
        ("r1", &p.r1),
        ("r2", &p.r2),
        ("x1", &p.x1),
        ("x2", &p.x2),
    ] {
        if v.is_negative() {
            return Err(ModelError::Invalid(format!("{name} must be >= 0, got {v}")));
        }
    }
    if p.x1 < p.r1 {
        return Err(ModelError::Invalid(format!(
            "initial constraint x1 >= r1 violated ({} < {})",
            p.x1, p.r1
        )));
    }
    if p.x2 < p.r2 {
        return Err(ModelError::Invalid(format!(
            "initial constraint x2 >= r2 violated ({} < {})",
            p.x2, p.r2
        )));
    }

    let ge = |var: &str, bound: &Rat| AffineConstraint::compare(AffineExpr::var(var), Relation::Ge, bound);
    let gt = |var: &str, bound: &Rat| AffineConstraint::compare(AffineExpr::var(var), Relation::Gt, bound);
    let le = |var: &str, bound: &Rat| AffineConstraint::compare(AffineExpr::var(var), Relation::Le, bound);
    let zero = Rat::zero();
    let identity: BTreeMap<String, AffineExpr> = ["x1", "x2"]
        .iter()
        .map(|v| (v.to_string(), AffineExpr::var(v)))
        .collect();

    let q1 = Location {
        name: "q1".into(),
        rates: [("x1".to_string(), &p.w - &p.v1), ("x2".to_string(), -&p.v2)].into(),
        invariant: vec![ge("x2", &p.r2), ge("x1", &zero), ge("x2", &zero)],
        tick_guard: vec![gt("x2", &p.r2)],
    };
    let q2 = Location {
        name: "q2".into(),
        rates: [("x1".to_string(), -&p.v1), ("x2".to_string(), &p.w - &p.v2)].into(),
        invariant: vec![ge("x1", &p.r1), ge("x1", &zero), ge("x2", &zero)],
        tick_guard: vec![gt("x1", &p.r1)],
    };
    let edges = vec![
        Edge {
            source: "q1".into(),
            target: "q2".into(),
            label: "moveright".into(),
            guard: vec![le("x2", &p.r2)],
            assignments: identity.clone(),
        },
        Edge {
            source: "q2".into(),
            target: "q1".into(),
            label: "moveleft".into(),
            guard: vec![le("x1", &p.r1)],
            assignments: identity,
        },
    ];
    let props = vec![
        PropDef { name: Prop::new("low1")?, constraint: vec![le("x1", &p.r1)] },
        PropDef { name: Prop::new("low2")?, constraint: vec![le("x2", &p.r2)] },
    ];
    let lha = Lha {
        variables: vec!["x1".into(), "x2".into()],
        locations: vec![q1, q2],
        edges,
        initial: InitialState {
            location: "q1".into(),
            valuation: [("x1".to_string(), p.x1.clone()), ("x2".to_string(), p.x2.clone())].into(),
        },
        props,
    };
    lha.validate()?;
    Ok(lha)
}
