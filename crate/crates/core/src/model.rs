//! Model files. A JSON document carries a `"kind"` tag selecting one of the
//! supported model families.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lha::Lha;
use crate::reservoir::{Hose, NResState, Reservoir};
use crate::syncprod::TimedComponent;
use crate::system::ModelError;

#[derive(Debug, Error)]
pub enum LoadError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}:{column}: {message}")]
    Parse { path: String, line: usize, column: usize, message: String },
    #[error("{path}: {source}")]
    Model {
        path: String,
        #[source]
        source: ModelError,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Model {
    NRes(NResState),
    Lha(Lha),
    Component(TimedComponent),
}

impl Model {
    pub fn kind(&self) -> &'static str {
        match self {
            Model::NRes(_) => "nres",
            Model::Lha(_) => "lha",
            Model::Component(_) => "component",
        }
    }
}

#[derive(Serialize, Deserialize)]
struct NResDoc {
    hose: Hose,
    reservoirs: Vec<Reservoir>,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
enum Doc {
    Nres(NResDoc),
    Lha(Lha),
    Component(TimedComponent),
}

/// Parses and validates a model document; `origin` names it in errors.
pub fn parse_model(text: &str, origin: &str) -> Result<Model, LoadError> {
    let doc: Doc = serde_json::from_str(text).map_err(|e| {
        let full = e.to_string();
        let message = match full.rfind(" at line ") {
            Some(i) => full[..i].to_string(),
            None => full,
        };
        LoadError::Parse { path: origin.to_string(), line: e.line(), column: e.column(), message }
    })?;
    let invalid = |source| LoadError::Model { path: origin.to_string(), source };
    match doc {
        Doc::Nres(d) => NResState::new(d.hose, d.reservoirs).map(Model::NRes).map_err(invalid),
        Doc::Lha(lha) => {
            lha.validate().map_err(invalid)?;
            Ok(Model::Lha(lha))
        }
        Doc::Component(c) => {
            c.validate().map_err(invalid)?;
            Ok(Model::Component(c))
        }
    }
}

pub fn load_model(path: impl AsRef<Path>) -> Result<Model, LoadError> {
    let path = path.as_ref();
    let shown = path.display().to_string();
    let text = fs::read_to_string(path).map_err(|source| LoadError::Io { path: shown.clone(), source })?;
    parse_model(&text, &shown)
}

/// JSON document that [`parse_model`] reads back to an equal model.
pub fn model_to_json(model: &Model) -> String {
    let doc = match model {
        Model::NRes(s) => Doc::Nres(NResDoc { hose: s.hose.clone(), reservoirs: s.reservoirs.values().cloned().collect() }),
        Model::Lha(l) => Doc::Lha(l.clone()),
        Model::Component(c) => Doc::Component(c.clone()),
    };
    serde_json::to_string_pretty(&doc).expect("models serialize")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lha::{two_reservoir, TwoReservoir};
    use crate::num::Rat;

    const INIT2: &str = r#"{
        "kind": "nres",
        "hose": {"rate": "10", "position": 0},
        "reservoirs": [
            {"id": 0, "lower": "15", "upper": "50", "level": "30", "leak": "5"},
            {"id": 1, "lower": "15", "upper": "50", "level": "30", "leak": "5"},
            {"id": 2, "lower": "15", "upper": "50", "level": "30", "leak": "5"}
        ]
    }"#;

    fn roundtrip(m: &Model) {
        assert_eq!(&parse_model(&model_to_json(m), "rt").unwrap(), m);
    }

    #[test]
    fn init2_loads() {
        let Model::NRes(s) = parse_model(INIT2, "init2.json").unwrap() else { panic!("wrong kind") };
        assert_eq!(s.reservoirs.len(), 3);
        assert_eq!(s.hose.rate, Rat::from(10));
        roundtrip(&Model::NRes(s));
    }

    #[test]
    fn validation_errors_name_the_field() {
        let empty = r#"{"kind":"nres","hose":{"rate":"10","position":0},"reservoirs":[]}"#;
        let e = parse_model(empty, "m.json").unwrap_err();
        assert!(e.to_string().contains("at least one reservoir"), "{e}");

        let bad = INIT2.replacen(r#""lower": "15", "upper": "50", "level": "30", "leak": "5"}"#, r#""lower": "60", "upper": "50", "level": "30", "leak": "5"}"#, 2);
        let bad = bad.replacen(r#""lower": "60""#, r#""lower": "15""#, 1);
        let e = parse_model(&bad, "m.json").unwrap_err();
        assert_eq!(e.to_string(), "m.json: invalid model: reservoir 1: lower > upper");
    }

    #[test]
    fn syntax_errors_carry_position() {
        let e = parse_model("{\n  \"kind\": \"nres\",\n  oops\n}", "f.json").unwrap_err();
        match e {
            LoadError::Parse { path, line, column, .. } => {
                assert_eq!(path, "f.json");
                assert_eq!(line, 3);
                assert!(column > 0);
            }
            other => panic!("unexpected {other}"),
        }
        assert!(matches!(parse_model(r#"{"kind":"petri"}"#, "f").unwrap_err(), LoadError::Parse { .. }));
        assert!(matches!(parse_model(r#"{"hose":1}"#, "f").unwrap_err(), LoadError::Parse { .. }));
    }

    #[test]
    fn lha_file() {
        let lha = two_reservoir(&TwoReservoir {
            w: Rat::from(10),
            v1: Rat::from(5),
            v2: Rat::from(5),
            r1: Rat::from(15),
            r2: Rat::from(15),
            x1: Rat::from(30),
            x2: Rat::from(30),
        })
        .unwrap();
        let m = Model::Lha(lha);
        let text = model_to_json(&m);
        assert!(text.contains("\"kind\": \"lha\""));
        roundtrip(&m);
    }

    #[test]
    fn component_file() {
        let text = r#"{"kind":"component","states":["ok","below"],"initial":"ok",
            "rules":[{"label":"tick","from":"ok","to":"below"},{"label":"fill1","from":"below","to":"ok"}],
            "props":[{"name":"refill1?","holds_at":["below"]}]}"#;
        let m = parse_model(text, "r1.json").unwrap();
        assert_eq!(m.kind(), "component");
        roundtrip(&m);
        let e = parse_model(&text.replace("\"initial\":\"ok\"", "\"initial\":\"gone\""), "r1.json").unwrap_err();
        assert!(e.to_string().contains("initial state `gone`"), "{e}");
    }

    #[test]
    fn load_from_disk_reports_missing_file() {
        let e = load_model("/nonexistent/model.json").unwrap_err();
        assert!(matches!(e, LoadError::Io { .. }));
    }
}
