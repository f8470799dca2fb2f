//! Randomized case checkers shared by the property tests and the
//! acceptance run. Each returns `Err` with a description of the first
//! violated property.

use std::collections::BTreeSet;

use lhacheck::explore::{build_kripke, format_solutions, search, SearchPattern};
use lhacheck::lha::{flow, two_reservoir, LhaState, TwoReservoir, Valuation};
use lhacheck::ltl::{model_check, validate_counterexample, Verdict};
use lhacheck::num::{Rat, Time};
use lhacheck::reservoir::{tick, Hose, NResState, Reservoir};
use lhacheck::syncprod::{compatible, compose, shared_props, Component, Product, PropSpec, TickRule, TimedComponent};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use super::*;

macro_rules! check {
    ($cond:expr, $($fmt:tt)+) => {
        if !$cond {
            return Err(format!($($fmt)+));
        }
    };
}

fn small_rat(rng: &mut StdRng, lo: i64, hi: i64) -> Rat {
    let d = rng.gen_range(1..=6);
    Rat::new(rng.gen_range(lo * d..=hi * d), d)
}

fn positive_time(rng: &mut StdRng) -> Time {
    let d = rng.gen_range(1..=4);
    Time::new(Rat::new(rng.gen_range(1..=4 * d), d)).unwrap()
}

/// Flow additivity, splitting of time steps and conservation of total
/// volume when the intake equals the total outflow.
pub fn two_reservoir_case(seed: u64) -> Result<(), String> {
    let mut rng = StdRng::seed_from_u64(seed);
    let v1 = small_rat(&mut rng, 1, 10);
    let v2 = small_rat(&mut rng, 1, 10);
    check!(v1.is_positive() && v2.is_positive(), "bad rates");
    let (r1, r2) = (small_rat(&mut rng, 0, 20), small_rat(&mut rng, 0, 20));
    let p = TwoReservoir {
        w: &v1 + &v2,
        v1,
        v2,
        r1: r1.clone(),
        r2: r2.clone(),
        x1: &r1 + &small_rat(&mut rng, 0, 20),
        x2: &r2 + &small_rat(&mut rng, 0, 20),
    };
    let lha = two_reservoir(&p).map_err(|e| e.to_string())?;
    let loc = if rng.gen_bool(0.5) { "q1" } else { "q2" };
    let mut valuation = Valuation::new();
    valuation.insert("x1".into(), small_rat(&mut rng, 0, 40));
    valuation.insert("x2".into(), small_rat(&mut rng, 0, 40));
    let state = LhaState { location: loc.into(), valuation };
    let (a, b) = (positive_time(&mut rng), positive_time(&mut rng));
    let ab = &a + &b;

    let location = lha.location(loc).unwrap();
    let stepped = flow(location, &flow(location, &state.valuation, &a), &b);
    check!(stepped == flow(location, &state.valuation, &ab), "flow not additive from {state} by {a} + {b}");

    let total = |s: &LhaState| s.valuation.values().cloned().sum::<Rat>();
    if let Some(after) = lha.timed_successor(&state, &ab).unwrap() {
        check!(total(&after) == total(&state), "volume changed from {state} to {after}");
        let mid = lha.timed_successor(&state, &a).unwrap();
        check!(mid.is_some(), "step {ab} allowed from {state} but its first part {a} is not");
        let end = lha.timed_successor(mid.as_ref().unwrap(), &b).unwrap();
        check!(end.as_ref() == Some(&after), "split step from {state} disagrees");
    }
    Ok(())
}

/// Over one tick the total level grows by the intake and shrinks by every
/// leak, except where a draining tank saturates at zero.
pub fn nres_conservation_case(seed: u64) -> Result<(), String> {
    let mut rng = StdRng::seed_from_u64(seed);
    let n = rng.gen_range(1..=4);
    let mut rs = Vec::new();
    for id in 0..n {
        let lower = small_rat(&mut rng, 0, 20);
        rs.push(Reservoir {
            id,
            upper: &lower + &small_rat(&mut rng, 0, 40),
            lower,
            level: small_rat(&mut rng, 0, 60),
            leak: small_rat(&mut rng, 0, 5),
        });
    }
    let position = rng.gen_range(0..n);
    let rate = &rs[position as usize].leak + &small_rat(&mut rng, 0, 10);
    let s = NResState::new(Hose { rate: rate.clone(), position }, rs).map_err(|e| e.to_string())?;
    let t = positive_time(&mut rng);
    let Some(next) = tick(&s, &t).map_err(|e| e.to_string())? else {
        check!(
            s.reservoirs.values().any(|r| r.id != position && r.level <= r.lower),
            "tick blocked although no other tank needs a refill"
        );
        return Ok(());
    };
    let sum = |s: &NResState| s.reservoirs.values().map(|r| r.level.clone()).sum::<Rat>();
    let saturates = s.reservoirs.values().any(|r| r.id != position && r.level < &r.leak * t.value());
    for r in next.reservoirs.values() {
        check!(!r.level.is_negative(), "negative level in reservoir {}", r.id);
    }
    if !saturates {
        let leaks: Rat = s.reservoirs.values().map(|r| r.leak.clone()).sum();
        let expected = sum(&s) + (&rate - &leaks) * t.value().clone();
        check!(sum(&next) == expected, "total {} after {t}, expected {expected}", sum(&next));
    } else {
        for r in next.reservoirs.values().filter(|r| r.id != position) {
            let before = &s.reservoirs[&r.id];
            if before.level < &before.leak * t.value() {
                check!(r.level.is_zero(), "saturated reservoir {} not at zero", r.id);
            }
        }
    }
    Ok(())
}

/// Random pair of components over at most 5 states each, sharing some
/// labels and one proposition, with compatible initial states.
pub fn random_pair(rng: &mut StdRng) -> (TimedComponent, TimedComponent) {
    loop {
        let shared = props(&["s"]);
        let n1 = rng.gen_range(1..=5);
        let n2 = rng.gen_range(1..=5);
        let mut c1 = random_component(rng, n1, &["a", "b", "x"], &shared, 3);
        let c2 = random_component(rng, n2, &["a", "b", "y"], &shared, 3);
        let own: BTreeSet<String> = c1.states.iter().filter(|_| rng.gen_bool(0.5)).cloned().collect();
        c1.props.push(PropSpec { name: props(&["p"]).remove(0), holds_at: own });
        let sh = shared_props(&c1, &c2);
        if !compatible(&c1, &c1.initial, &c2, &c2.initial, &sh) {
            continue;
        }
        let t1 = random_ticks(rng, &c1);
        let t2 = random_ticks(rng, &c2);
        return (TimedComponent { component: c1, ticks: t1 }, TimedComponent { component: c2, ticks: t2 });
    }
}

fn random_ticks(rng: &mut StdRng, c: &Component) -> Vec<TickRule> {
    let mut out = Vec::new();
    for s in &c.states {
        if rng.gen_bool(0.4) {
            let to = c.states[rng.gen_range(0..c.states.len())].clone();
            out.push(TickRule { from: s.clone(), to, duration: Time::from_int(rng.gen_range(1..=2)) });
        }
    }
    out
}

fn has_rule(c: &Component, label: &str, from: &str, to: &str) -> bool {
    c.rules.iter().any(|r| r.label == label && r.from == from && r.to == to)
}

fn pair_name(l: &str, r: &str) -> String {
    format!("< {l},{r} >")
}

/// Projection soundness, completeness for compatible moves, reachable-state
/// compatibility, proposition inheritance and operand symmetry.
pub fn product_case(seed: u64) -> Result<(), String> {
    let mut rng = StdRng::seed_from_u64(seed);
    let (t1, t2) = random_pair(&mut rng);
    let (c1, c2) = (&t1.component, &t2.component);
    let product = compose(&t1, &t2);
    product.timed.validate().map_err(|e| e.to_string())?;
    let pc = &product.timed.component;
    let sh = shared_props(c1, c2);
    let pair_of = |name: &str| {
        let i = pc.states.iter().position(|s| s == name).unwrap();
        product.pairs[i].clone()
    };
    let labels1 = c1.labels();
    let labels2 = c2.labels();

    for p in &product.pairs {
        check!(compatible(c1, &p.left, c2, &p.right, &sh), "incompatible reachable state {p:?}");
    }
    for r in &pc.rules {
        let (a, b) = (pair_of(&r.from), pair_of(&r.to));
        if labels1.contains(r.label.as_str()) {
            check!(has_rule(c1, &r.label, &a.left, &b.left), "{r:?} does not project left");
        } else {
            check!(a.left == b.left, "{r:?} moves the left side");
        }
        if labels2.contains(r.label.as_str()) {
            check!(has_rule(c2, &r.label, &a.right, &b.right), "{r:?} does not project right");
        } else {
            check!(a.right == b.right, "{r:?} moves the right side");
        }
    }
    for k in &product.timed.ticks {
        let (a, b) = (pair_of(&k.from), pair_of(&k.to));
        let left = t1.ticks.iter().any(|t| t.from == a.left && t.to == b.left && t.duration == k.duration);
        let right = t2.ticks.iter().any(|t| t.from == a.right && t.to == b.right && t.duration == k.duration);
        check!(left && right, "tick {k:?} does not project");
    }
    for spec in &pc.props {
        for (name, p) in pc.states.iter().zip(&product.pairs) {
            let expect = if c1.prop_names().contains(&spec.name) {
                c1.valuation(&p.left, &spec.name).unwrap()
            } else {
                c2.valuation(&p.right, &spec.name).unwrap()
            };
            check!(spec.holds_at.contains(name) == expect, "{} wrong at {name}", spec.name);
        }
    }

    for (name, p) in pc.states.iter().zip(&product.pairs) {
        for r1 in c1.rules_from(&p.left) {
            if labels2.contains(r1.label.as_str()) {
                for r2 in c2.rules_from(&p.right).filter(|r| r.label == r1.label) {
                    if compatible(c1, &r1.to, c2, &r2.to, &sh) {
                        check!(has_rule(pc, &r1.label, name, &pair_name(&r1.to, &r2.to)), "missing joint {r1:?}");
                    }
                }
            } else if compatible(c1, &r1.to, c2, &p.right, &sh) {
                check!(has_rule(pc, &r1.label, name, &pair_name(&r1.to, &p.right)), "missing left move {r1:?}");
            }
        }
        for r2 in c2.rules_from(&p.right).filter(|r| !labels1.contains(r.label.as_str())) {
            if compatible(c1, &p.left, c2, &r2.to, &sh) {
                check!(has_rule(pc, &r2.label, name, &pair_name(&p.left, &r2.to)), "missing right move {r2:?}");
            }
        }
    }

    let edges = |p: &Product, swap: bool| -> BTreeSet<(String, String, String, String, String)> {
        let pair = |name: &str| {
            let i = p.timed.component.states.iter().position(|s| s == name).unwrap();
            let q = &p.pairs[i];
            if swap {
                (q.right.clone(), q.left.clone())
            } else {
                (q.left.clone(), q.right.clone())
            }
        };
        p.timed
            .component
            .rules
            .iter()
            .map(|r| {
                let (a, b) = pair(&r.from);
                let (c, d) = pair(&r.to);
                (r.label.clone(), a, b, c, d)
            })
            .collect()
    };
    let mirrored = compose(&t2, &t1);
    check!(edges(&product, false) == edges(&mirrored, true), "swapping operands changes the product");
    Ok(())
}

pub struct OracleStats {
    pub checked: usize,
    pub violated: usize,
    pub skipped: usize,
    pub disagreements: Vec<String>,
}

/// Compares `model_check` with lasso enumeration on random structures of at
/// most 8 states and formulas with at most 2 temporal operators. Verdicts
/// of "violated" are confirmed on the returned lasso itself; verdicts of
/// "holds" against every lasso of up to `2n + 2` positions.
pub fn oracle_run(seed: u64, structures: usize, formulas: usize) -> OracleStats {
    let mut rng = StdRng::seed_from_u64(seed);
    let ps = props(&["p", "q"]);
    let one = Time::from_int(1);
    let mut stats = OracleStats { checked: 0, violated: 0, skipped: 0, disagreements: Vec::new() };
    for _ in 0..structures {
        let n = rng.gen_range(1..=8);
        let max_out = if rng.gen_bool(0.7) { 2 } else { 3 };
        let c = random_component(&mut rng, n, &["a", "b"], &ps, max_out);
        let k = build_kripke(&TimedComponent::from(c.clone()), &one, &one).unwrap();
        let max_len = 2 * k.len() + 2;
        let words = lasso_words(&k, max_len, 50_000);
        for _ in 0..formulas {
            let f = random_formula(&mut rng, &ps, 2, 4);
            let verdict = model_check(&k, &f).unwrap();
            let short = words.as_ref().map(|ws| ws.iter().any(|l| !eval_lasso(&f, l)));
            let mut fail = |why: &str| stats.disagreements.push(format!("{why}: {f} on {c:?}"));
            match &verdict {
                Verdict::Holds => match short {
                    Some(true) => fail("holds but a violating lasso exists"),
                    Some(false) => stats.checked += 1,
                    None => stats.skipped += 1,
                },
                Verdict::Violated(cex) => {
                    stats.violated += 1;
                    let path: Vec<usize> = cex
                        .prefix
                        .iter()
                        .chain(&cex.cycle)
                        .map(|s| k.index_of(&s.state).expect("trace state in structure"))
                        .collect();
                    let l = lasso_of(&k, &path, cex.prefix.len());
                    if eval_lasso(&f, &l) {
                        fail("counterexample satisfies the formula");
                    } else if !validate_counterexample(&k, cex, &f) {
                        fail("counterexample rejected by validator");
                    } else {
                        match short {
                            Some(false) if path.len() <= max_len => fail("violated but no short violating lasso"),
                            None => stats.skipped += 1,
                            _ => stats.checked += 1,
                        }
                    }
                }
            }
        }
    }
    stats
}

/// Text of a wildcard search from init2.
pub fn init2_search_text(bound: u32) -> String {
    let solutions = search(&init2(), &SearchPattern::wildcard(), &Time::from_int(bound), &Time::from_int(1)).unwrap();
    format_solutions(&solutions)
}
