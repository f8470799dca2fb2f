use std::fmt::Write as _;
use std::path::Path;

use lhacheck::explore::{build_kripke, format_solutions, search, solutions_json, SearchPattern, Wildcard};
use lhacheck::ltl::{model_check, parse_formula, Formula, Verdict};
use lhacheck::model::{load_model, Model};
use lhacheck::num::Time;
use lhacheck::reservoir::{NResModel, NResState};
use lhacheck::syncprod::{product_all, safe_prop, TimedComponent};
use lhacheck::system::{ModelError, TimedSystem};
use serde_json::json;
use thiserror::Error;

use crate::{Command, Format, Timing};

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Load(#[from] lhacheck::model::LoadError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("formula: {0}")]
    Formula(#[from] lhacheck::ltl::FormulaParseError),
    #[error("pattern: {0}")]
    Pattern(#[from] lhacheck::explore::PatternError),
    #[error("{0}")]
    Usage(String),
}

pub struct Outcome {
    pub report: String,
    pub status: u8,
}

impl Outcome {
    fn ok(report: String) -> Self {
        Outcome { report, status: 0 }
    }
}

pub fn run(command: Command) -> Result<Outcome, CliError> {
    match command {
        Command::Simulate { model, timing, format } => match load_model(&model)? {
            Model::NRes(s) => {
                let warnings = |s: &NResState| {
                    s.above_upper().into_iter().map(|id| format!("reservoir {id} above its upper threshold")).collect()
                };
                simulate(&NResModel::new(s), &timing, format, warnings)
            }
            Model::Lha(l) => simulate(&l, &timing, format, |_| Vec::new()),
            Model::Component(c) => simulate(&c, &timing, format, |_| Vec::new()),
        },
        Command::Search { model, pattern, timing, format, expect_none } => {
            let (report, found) = match load_model(&model)? {
                Model::NRes(s) => {
                    let p = SearchPattern::parse(&pattern)?;
                    p.validate(&s)?;
                    run_search(&NResModel::new(s), &p, &timing, format)?
                }
                other => {
                    if pattern.trim() != "*" {
                        return Err(CliError::Usage(format!(
                            "only the `*` pattern applies to {} models",
                            other.kind()
                        )));
                    }
                    match other {
                        Model::Lha(l) => run_search(&l, &Wildcard, &timing, format)?,
                        Model::Component(c) => run_search(&c, &Wildcard, &timing, format)?,
                        Model::NRes(_) => unreachable!(),
                    }
                }
            };
            Ok(Outcome { report, status: u8::from(expect_none && found > 0) })
        }
        Command::Check { model, formula, timing, format } => {
            let f = parse_formula(&formula)?;
            match load_model(&model)? {
                Model::NRes(s) => check(&NResModel::new(s), &f, &timing.time_bound, &timing.increment, format),
                Model::Lha(l) => check(&l, &f, &timing.time_bound, &timing.increment, format),
                Model::Component(c) => check(&c, &f, &timing.time_bound, &timing.increment, format),
            }
        }
        Command::ProductCheck { components, formula, time_bound, increment, format } => {
            let f = parse_formula(&formula)?;
            let parts = components.iter().map(|p| load_component(p)).collect::<Result<Vec<_>, _>>()?;
            let mut product = product_all(&parts).ok_or_else(|| CliError::Usage("no components given".into()))?;
            let names = product.component.prop_names();
            if names.iter().any(|p| p.as_str() == "refill1?") && names.iter().any(|p| p.as_str() == "refill2?") {
                product.component = safe_prop(&product.component)?;
            }
            let bound = match time_bound {
                Some(b) => b,
                None if product.is_timed() => {
                    return Err(CliError::Usage("--time-bound is required when components have tick rules".into()))
                }
                None => increment.clone(),
            };
            check(&product, &f, &bound, &increment, format)
        }
    }
}

fn load_component(path: &Path) -> Result<TimedComponent, CliError> {
    match load_model(path)? {
        Model::Component(c) => Ok(c),
        other => Err(CliError::Usage(format!("{}: expected a component, found a {} model", path.display(), other.kind()))),
    }
}

fn simulate<M: TimedSystem>(
    model: &M,
    timing: &Timing,
    format: Format,
    warnings: impl Fn(&M::State) -> Vec<String>,
) -> Result<Outcome, CliError> {
    let mut state = model.initial();
    let mut elapsed = Time::zero();
    let mut steps = Vec::new();
    let stopped = loop {
        let mut enabled: Vec<(String, usize)> = Vec::new();
        for (label, _) in model.discrete_successors(&state)? {
            match enabled.last_mut() {
                Some((l, n)) if *l == label => *n += 1,
                _ => enabled.push((label, 1)),
            }
        }
        let enabled: Vec<String> = enabled
            .into_iter()
            .map(|(l, n)| if n == 1 { l } else { format!("{l} ({n} successors)") })
            .collect();
        steps.push((elapsed.clone(), model.render(&state), enabled, warnings(&state)));
        let after = &elapsed + &timing.increment;
        if after >= timing.time_bound {
            break "time bound reached";
        }
        let mut next = model.timed_successors(&state, &timing.increment)?;
        if next.is_empty() {
            break "time cannot advance";
        }
        if next.len() > 1 {
            break "time step is nondeterministic";
        }
        state = next.remove(0);
        elapsed = after;
    };
    let report = match format {
        Format::Text => {
            let mut out = String::new();
            for (t, s, enabled, warns) in &steps {
                let _ = writeln!(out, "TIME_ELAPSED:Time --> {t}; S:System --> {s}");
                if !enabled.is_empty() {
                    let _ = writeln!(out, "  enabled: {}", enabled.join(", "));
                }
                for w in warns {
                    let _ = writeln!(out, "  warning: {w}");
                }
            }
            let _ = writeln!(out, "stopped: {stopped}");
            out
        }
        Format::Json => {
            let trace: Vec<_> = steps
                .iter()
                .map(|(t, s, enabled, warns)| json!({"elapsed": t.to_string(), "state": s, "enabled": enabled, "warnings": warns}))
                .collect();
            json_line(&json!({"trace": trace, "stopped": stopped}))
        }
    };
    Ok(Outcome::ok(report))
}

fn run_search<M, P>(model: &M, pattern: &P, timing: &Timing, format: Format) -> Result<(String, usize), CliError>
where
    M: TimedSystem,
    P: lhacheck::explore::StatePattern<M::State>,
{
    let solutions = search(model, pattern, &timing.time_bound, &timing.increment)?;
    let report = match format {
        Format::Text => format_solutions(&solutions),
        Format::Json => json_line(&solutions_json(&solutions)),
    };
    Ok((report, solutions.len()))
}

fn check<M: TimedSystem>(model: &M, f: &Formula, bound: &Time, increment: &Time, format: Format) -> Result<Outcome, CliError> {
    let k = build_kripke(model, bound, increment)?;
    let verdict = model_check(&k, f)?;
    let report = match (&verdict, format) {
        (Verdict::Holds, Format::Text) => "Result Bool : true\n".to_string(),
        (Verdict::Violated(c), Format::Text) => format!("Result ModelCheckResult :\n  {}\n", c.to_text(&k)),
        (Verdict::Holds, Format::Json) => json_line(&json!({"result": true})),
        (Verdict::Violated(c), Format::Json) => json_line(&json!({"result": false, "counterexample": c.to_json(&k)})),
    };
    Ok(Outcome { report, status: u8::from(!verdict.holds()) })
}

fn json_line(v: &serde_json::Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("json values serialize");
    s.push('\n');
    s
}
