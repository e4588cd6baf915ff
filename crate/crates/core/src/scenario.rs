//! Scenario files: JSON with rationals written as `"num/den"` strings.
//!
//! ```json
//! {
//!   "space": { "outcomes": ["w1", "w2", "w3"], "p0": ["1/3", "1/3", "1/3"] },
//!   "generators": [["3/5", "1/5", "1/5"], ["1/5", "3/5", "1/5"]],
//!   "filtrations": { "split": [[["w1", "w2", "w3"]], [["w1"], ["w2", "w3"]], [["w1"], ["w2"], ["w3"]]] },
//!   "positions": { "x": ["1", "0", "0"] },
//!   "options": { "max_outcomes": 12, "max_generators": 12, "seed": 7 }
//! }
//! ```

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::measure::{Filtration, Measure, Partition, Position, Space};
use crate::rational::{from_strs, to_strs, RatStr};
use crate::risk::RiskMeasure;

pub const DEFAULT_MAX_OUTCOMES: usize = 12;
pub const DEFAULT_MAX_GENERATORS: usize = 12;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpaceFile {
    pub outcomes: Vec<String>,
    pub p0: Vec<RatStr>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Options {
    pub max_outcomes: usize,
    pub max_generators: usize,
    pub seed: u64,
}

impl Default for Options {
    fn default() -> Self {
        Options {
            max_outcomes: DEFAULT_MAX_OUTCOMES,
            max_generators: DEFAULT_MAX_GENERATORS,
            seed: 0,
        }
    }
}

/// The on-disk form, before any validation beyond syntax.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub space: SpaceFile,
    pub generators: Vec<Vec<RatStr>>,
    #[serde(default)]
    pub filtrations: BTreeMap<String, Vec<Vec<Vec<String>>>>,
    #[serde(default)]
    pub positions: BTreeMap<String, Vec<RatStr>>,
    #[serde(default)]
    pub options: Options,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Seg {
    Key(String),
    Index(usize),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct JsonPath(pub Vec<Seg>);

impl JsonPath {
    fn key(&self, k: &str) -> Self {
        let mut v = self.0.clone();
        v.push(Seg::Key(k.to_string()));
        JsonPath(v)
    }

    fn idx(&self, i: usize) -> Self {
        let mut v = self.0.clone();
        v.push(Seg::Index(i));
        JsonPath(v)
    }
}

fn root(k: &str) -> JsonPath {
    JsonPath(vec![Seg::Key(k.to_string())])
}

impl fmt::Display for JsonPath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, s) in self.0.iter().enumerate() {
            match s {
                Seg::Key(k) if i == 0 => write!(f, "{k}")?,
                Seg::Key(k) => write!(f, ".{k}")?,
                Seg::Index(n) => write!(f, "[{n}]")?,
            }
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("parse error at line {line}, column {column} ({path}): {msg}")]
    Parse {
        line: usize,
        column: usize,
        path: String,
        msg: String,
    },
    #[error("invalid scenario at line {line}, column {column} ({path}): {msg}")]
    Invalid {
        line: usize,
        column: usize,
        path: String,
        msg: String,
    },
    #[error("limit exceeded: {what} = {got} > {limit} (pass --allow-large to override)")]
    TooLarge {
        what: &'static str,
        got: usize,
        limit: usize,
    },
    #[error("unknown {kind} {name:?}")]
    UnknownName { kind: &'static str, name: String },
}

/// A validated scenario.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub space: Arc<Space>,
    pub rm: RiskMeasure,
    pub filtrations: BTreeMap<String, Filtration>,
    pub positions: BTreeMap<String, Position>,
    pub options: Options,
}

/// Byte offset of the value at `path` in `text`, if it can be found.
fn locate(text: &str, path: &JsonPath) -> Option<usize> {
    let b = text.as_bytes();
    let mut i = 0;
    let ws = |i: &mut usize| {
        while *i < b.len() && b[*i].is_ascii_whitespace() {
            *i += 1;
        }
    };
    fn skip_string(b: &[u8], i: &mut usize) -> Option<(usize, usize)> {
        if b.get(*i) != Some(&b'"') {
            return None;
        }
        *i += 1;
        let start = *i;
        while *i < b.len() {
            match b[*i] {
                b'\\' => *i += 2,
                b'"' => {
                    *i += 1;
                    return Some((start, *i - 1));
                }
                _ => *i += 1,
            }
        }
        None
    }
    fn skip_value(b: &[u8], i: &mut usize) -> Option<()> {
        match *b.get(*i)? {
            b'"' => skip_string(b, i).map(|_| ()),
            b'{' | b'[' => {
                let mut depth = 0usize;
                while *i < b.len() {
                    match b[*i] {
                        b'"' => {
                            skip_string(b, i)?;
                            continue;
                        }
                        b'{' | b'[' => depth += 1,
                        b'}' | b']' => {
                            depth -= 1;
                            if depth == 0 {
                                *i += 1;
                                return Some(());
                            }
                        }
                        _ => {}
                    }
                    *i += 1;
                }
                None
            }
            _ => {
                while *i < b.len() && !matches!(b[*i], b',' | b'}' | b']') && !b[*i].is_ascii_whitespace() {
                    *i += 1;
                }
                Some(())
            }
        }
    }
    ws(&mut i);
    for seg in &path.0 {
        match seg {
            Seg::Key(k) => {
                if b.get(i) != Some(&b'{') {
                    return None;
                }
                i += 1;
                loop {
                    ws(&mut i);
                    let (s, e) = skip_string(b, &mut i)?;
                    ws(&mut i);
                    if b.get(i) != Some(&b':') {
                        return None;
                    }
                    i += 1;
                    ws(&mut i);
                    if &text[s..e] == k {
                        break;
                    }
                    skip_value(b, &mut i)?;
                    ws(&mut i);
                    if b.get(i) != Some(&b',') {
                        return None;
                    }
                    i += 1;
                }
            }
            Seg::Index(n) => {
                if b.get(i) != Some(&b'[') {
                    return None;
                }
                i += 1;
                for _ in 0..*n {
                    ws(&mut i);
                    skip_value(b, &mut i)?;
                    ws(&mut i);
                    if b.get(i) != Some(&b',') {
                        return None;
                    }
                    i += 1;
                }
                ws(&mut i);
            }
        }
    }
    Some(i)
}

fn line_col(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.len() - before.rfind('\n').map_or(0, |p| p + 1) + 1;
    (line, column)
}

struct Ctx<'a> {
    text: &'a str,
}

impl Ctx<'_> {
    /// Points at the deepest prefix of `path` that can be located.
    fn invalid(&self, path: JsonPath, msg: impl fmt::Display) -> ScenarioError {
        let mut probe = path.clone();
        let offset = loop {
            if let Some(o) = locate(self.text, &probe) {
                break o;
            }
            if probe.0.pop().is_none() {
                break 0;
            }
        };
        let (line, column) = line_col(self.text, offset);
        ScenarioError::Invalid {
            line,
            column,
            path: path.to_string(),
            msg: msg.to_string(),
        }
    }
}

pub fn parse_file(text: &str) -> Result<ScenarioFile, ScenarioError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let file: ScenarioFile = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        ScenarioError::Parse {
            line: inner.line(),
            column: inner.column(),
            path,
            msg: inner.to_string(),
        }
    })?;
    Ok(file)
}

/// Parses and validates; `allow_large` lifts the size limits.
pub fn load_str(text: &str, allow_large: bool) -> Result<Scenario, ScenarioError> {
    let file = parse_file(text)?;
    validate(&file, text, allow_large)
}

pub fn load_path(path: &std::path::Path, allow_large: bool) -> Result<Scenario, ScenarioError> {
    let text = std::fs::read_to_string(path)?;
    load_str(&text, allow_large)
}

pub fn validate(file: &ScenarioFile, text: &str, allow_large: bool) -> Result<Scenario, ScenarioError> {
    let cx = Ctx { text };
    let opts = file.options.clone();
    let n = file.space.outcomes.len();
    if !allow_large && n > opts.max_outcomes {
        return Err(ScenarioError::TooLarge {
            what: "outcomes",
            got: n,
            limit: opts.max_outcomes,
        });
    }
    if !allow_large && file.generators.len() > opts.max_generators {
        return Err(ScenarioError::TooLarge {
            what: "generators",
            got: file.generators.len(),
            limit: opts.max_generators,
        });
    }
    for (i, l) in file.space.outcomes.iter().enumerate() {
        if file.space.outcomes[..i].contains(l) {
            return Err(cx.invalid(root("space").key("outcomes").idx(i), format!("duplicate outcome label {l:?}")));
        }
    }
    let space = Space::new(file.space.outcomes.clone(), from_strs(&file.space.p0))
        .map_err(|e| cx.invalid(root("space").key("p0"), e))?;

    if file.generators.is_empty() {
        return Err(cx.invalid(root("generators"), "at least one generator is required"));
    }
    let mut gens = Vec::with_capacity(file.generators.len());
    for (k, g) in file.generators.iter().enumerate() {
        let m = Measure::new(&space, from_strs(g)).map_err(|e| cx.invalid(root("generators").idx(k), e))?;
        gens.push(m);
    }
    let rm = RiskMeasure::new(&space, gens).map_err(|e| cx.invalid(root("generators"), e))?;

    let mut filtrations = BTreeMap::new();
    for (name, levels) in &file.filtrations {
        let fpath = root("filtrations").key(name);
        let mut parts = Vec::with_capacity(levels.len());
        for (t, level) in levels.iter().enumerate() {
            let mut blocks = Vec::with_capacity(level.len());
            for (j, block) in level.iter().enumerate() {
                let mut idx = Vec::with_capacity(block.len());
                for (m, label) in block.iter().enumerate() {
                    let i = space.index_of(label).ok_or_else(|| {
                        cx.invalid(fpath.idx(t).idx(j).idx(m), format!("unknown outcome label {label:?}"))
                    })?;
                    idx.push(i);
                }
                blocks.push(idx);
            }
            parts.push(Partition::new(n, blocks).map_err(|e| cx.invalid(fpath.idx(t), e))?);
        }
        let f = Filtration::new(parts).map_err(|e| cx.invalid(fpath.clone(), e))?;
        filtrations.insert(name.clone(), f);
    }

    let mut positions = BTreeMap::new();
    for (name, values) in &file.positions {
        let x = Position::new(&space, from_strs(values)).map_err(|e| cx.invalid(root("positions").key(name), e))?;
        positions.insert(name.clone(), x);
    }

    Ok(Scenario {
        space,
        rm,
        filtrations,
        positions,
        options: opts,
    })
}

impl Scenario {
    pub fn filtration(&self, name: &str) -> Result<&Filtration, ScenarioError> {
        self.filtrations.get(name).ok_or_else(|| ScenarioError::UnknownName {
            kind: "filtration",
            name: name.to_string(),
        })
    }

    pub fn position(&self, name: &str) -> Result<&Position, ScenarioError> {
        self.positions.get(name).ok_or_else(|| ScenarioError::UnknownName {
            kind: "position",
            name: name.to_string(),
        })
    }

    /// Resolves a comma-separated list of outcome labels.
    pub fn outcome_set(&self, labels: &str) -> Result<Vec<usize>, ScenarioError> {
        labels
            .split(',')
            .map(str::trim)
            .filter(|l| !l.is_empty())
            .map(|l| {
                self.space.index_of(l).ok_or_else(|| ScenarioError::UnknownName {
                    kind: "outcome",
                    name: l.to_string(),
                })
            })
            .collect()
    }

    /// Canonical file form: reduced rationals, sorted blocks.
    pub fn to_file(&self) -> ScenarioFile {
        let label = |i: &usize| self.space.label(*i).to_string();
        ScenarioFile {
            space: SpaceFile {
                outcomes: self.space.outcomes().to_vec(),
                p0: to_strs(self.space.p0()),
            },
            generators: self.rm.gens().iter().map(|g| to_strs(g.probs())).collect(),
            filtrations: self
                .filtrations
                .iter()
                .map(|(k, f)| {
                    let levels = f
                        .levels()
                        .iter()
                        .map(|p| p.blocks().iter().map(|b| b.iter().map(label).collect()).collect())
                        .collect();
                    (k.clone(), levels)
                })
                .collect(),
            positions: self.positions.iter().map(|(k, x)| (k.clone(), to_strs(x.values()))).collect(),
            options: self.options.clone(),
        }
    }

    pub fn to_json_string(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.to_file()).expect("scenario serializes");
        s.push('\n');
        s
    }
}
