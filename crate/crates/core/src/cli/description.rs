//! TOML description files.
//!
//! ```toml
//! dimension = 1
//! states = ["dead", "alive"]   # or a count: states = 2
//! neighborhood = [0, 1]        # 1D scalars, or vectors: [[0, 0], [1, 0]]
//!
//! [rule]
//! table = ["dead", "dead", "dead", "alive"]   # q^n entries in code order
//! # builtin = "and1d"
//! ```
//!
//! With `rule.builtin` the other keys are optional; when present they must
//! agree with the builtin.

use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Deserialize;

use crate::automaton::{CaError, CellularAutomaton, Offset, State, BUILTIN_NAMES};

#[derive(Debug, Clone, PartialEq)]
pub struct Description {
    pub ca: CellularAutomaton,
    /// Label of each state when the file names them.
    pub labels: Option<Vec<String>>,
}

impl Description {
    pub fn label_line(&self) -> Option<String> {
        self.labels.as_ref().map(|labels| {
            let pairs: Vec<String> = labels
                .iter()
                .enumerate()
                .map(|(i, l)| format!("{i}={l}"))
                .collect();
            format!("states: {}", pairs.join(" "))
        })
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("{key}: {message}")]
pub struct DescriptionError {
    /// Offending key, dotted.
    pub key: String,
    pub message: String,
}

fn err(key: &str, message: impl Into<String>) -> DescriptionError {
    DescriptionError {
        key: key.to_string(),
        message: message.into(),
    }
}

#[derive(Deserialize)]
#[serde(untagged)]
enum RawStates {
    Count(i64),
    Labels(Vec<String>),
}

#[derive(Deserialize)]
#[serde(untagged)]
enum RawOffset {
    Scalar(i64),
    Vector(Vec<i64>),
}

#[derive(Deserialize)]
#[serde(untagged)]
enum RawEntry {
    State(i64),
    Label(String),
}

fn key_of(e: &CaError) -> &'static str {
    match e {
        CaError::ZeroDimension => "dimension",
        CaError::TooFewStates(_) => "states",
        CaError::EmptyNeighborhood
        | CaError::OffsetDimension { .. }
        | CaError::DuplicateOffset(_)
        | CaError::TableTooLarge { .. } => "neighborhood",
        CaError::UnknownBuiltin(_) => "rule.builtin",
        _ => "rule.table",
    }
}

/// Deserializes `table[key]`, naming `path` on failure.
fn field<T: DeserializeOwned>(table: &toml::Table, key: &str, path: &str) -> Result<Option<T>, DescriptionError> {
    table
        .get(key)
        .map(|v| {
            v.clone()
                .try_into()
                .map_err(|e: toml::de::Error| err(path, format!("unexpected value {v}: {}", e.message().trim())))
        })
        .transpose()
}

fn only_keys(table: &toml::Table, allowed: &[&str], prefix: &str) -> Result<(), DescriptionError> {
    match table.keys().find(|k| !allowed.contains(&k.as_str())) {
        Some(k) => Err(err(&format!("{prefix}{k}"), "unknown key")),
        None => Ok(()),
    }
}

pub fn parse_description(text: &str) -> Result<Description, DescriptionError> {
    let doc: toml::Table = text
        .parse()
        .map_err(|e: toml::de::Error| err("document", e.message().trim()))?;
    only_keys(&doc, &["dimension", "states", "neighborhood", "rule"], "")?;
    let dimension: Option<i64> = field(&doc, "dimension", "dimension")?;
    let states: Option<RawStates> = field(&doc, "states", "states")?;
    let neighborhood: Option<Vec<RawOffset>> = field(&doc, "neighborhood", "neighborhood")?;
    let rule: toml::Table = field(&doc, "rule", "rule")?.ok_or_else(|| err("rule", "missing [rule] table"))?;
    only_keys(&rule, &["table", "builtin"], "rule.")?;
    let builtin: Option<String> = field(&rule, "builtin", "rule.builtin")?;
    let table: Option<Vec<RawEntry>> = field(&rule, "table", "rule.table")?;

    if let Some(name) = builtin {
        if table.is_some() {
            return Err(err("rule", "give either `table` or `builtin`, not both"));
        }
        let ca = CellularAutomaton::builtin(&name).map_err(|e| err("rule.builtin", e.to_string()))?;
        if let Some(d) = dimension {
            if d != ca.dim() as i64 {
                return Err(err("dimension", format!("builtin `{name}` has dimension {}", ca.dim())));
            }
        }
        let labels = match states {
            None => None,
            Some(RawStates::Count(q)) if q == ca.states() as i64 => None,
            Some(RawStates::Labels(l)) if l.len() == ca.states() as usize => Some(l),
            Some(_) => {
                return Err(err("states", format!("builtin `{name}` has {} states", ca.states())))
            }
        };
        if let Some(n) = neighborhood {
            if offsets(n, ca.dim())? != ca.neighborhood() {
                return Err(err("neighborhood", format!("differs from builtin `{name}`")));
            }
        }
        return Ok(Description { ca, labels });
    }

    let dim = dimension.ok_or_else(|| err("dimension", "missing"))?;
    if dim < 1 {
        return Err(err("dimension", format!("must be at least 1, got {dim}")));
    }
    let dim = dim as usize;
    let (states, labels) = match states.ok_or_else(|| err("states", "missing"))? {
        RawStates::Count(q) if (2..=u32::MAX as i64).contains(&q) => (q as u32, None),
        RawStates::Count(q) => return Err(err("states", format!("need at least two states, got {q}"))),
        RawStates::Labels(labels) => {
            for (i, l) in labels.iter().enumerate() {
                if labels[..i].contains(l) {
                    return Err(err("states", format!("duplicate label `{l}`")));
                }
            }
            if labels.len() < 2 {
                return Err(err("states", format!("need at least two states, got {}", labels.len())));
            }
            (labels.len() as u32, Some(labels))
        }
    };
    let neighborhood = offsets(neighborhood.ok_or_else(|| err("neighborhood", "missing"))?, dim)?;
    let entries = table.ok_or_else(|| err("rule", "needs `table` or `builtin`"))?;
    let table = entries
        .into_iter()
        .enumerate()
        .map(|(i, entry)| state_of(entry, states, labels.as_deref()).map_err(|m| err("rule.table", format!("entry {i}: {m}"))))
        .collect::<Result<Vec<State>, _>>()?;
    let ca = CellularAutomaton::new(dim, states, neighborhood, table).map_err(|e| err(key_of(&e), e.to_string()))?;
    Ok(Description { ca, labels })
}

fn offsets(raw: Vec<RawOffset>, dim: usize) -> Result<Vec<Offset>, DescriptionError> {
    raw.into_iter()
        .map(|o| match o {
            RawOffset::Scalar(v) if dim == 1 => Ok(vec![v]),
            RawOffset::Scalar(v) => Err(err(
                "neighborhood",
                format!("scalar offset {v} needs dimension 1; use {dim}-vectors"),
            )),
            RawOffset::Vector(v) if v.len() == dim => Ok(v),
            RawOffset::Vector(v) => Err(err(
                "neighborhood",
                format!("offset {v:?} has {} components, expected {dim}", v.len()),
            )),
        })
        .collect()
}

fn state_of(entry: RawEntry, states: u32, labels: Option<&[String]>) -> Result<State, String> {
    match (entry, labels) {
        (RawEntry::State(v), _) if (0..states as i64).contains(&v) => Ok(v as State),
        (RawEntry::State(v), _) => Err(format!("state {v} out of range 0..{states}")),
        (RawEntry::Label(l), Some(labels)) => labels
            .iter()
            .position(|x| *x == l)
            .map(|i| i as State)
            .ok_or_else(|| format!("unknown label `{l}`")),
        (RawEntry::Label(l), None) => Err(format!("label `{l}` used but `states` is a count")),
    }
}

/// Reads a description file, or a builtin automaton when `source` names one
/// and no such file exists.
pub fn load_description(source: &str) -> Result<Description, DescriptionError> {
    let path = Path::new(source);
    if !path.exists() && BUILTIN_NAMES.contains(&source) {
        return Ok(Description {
            ca: CellularAutomaton::builtin(source).expect("known builtin"),
            labels: None,
        });
    }
    let text = std::fs::read_to_string(path).map_err(|e| err("file", format!("{source}: {e}")))?;
    parse_description(&text)
}
