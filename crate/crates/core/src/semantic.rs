//! Semantic column typing: per-sample scores from a pluggable scorer,
//! overridden sample by sample through `is_type`/`not_type` constraints and
//! averaged into a column score per catalog type.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::path::Path;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::assistant::{Assistant, Choice, Descriptor, InteractionSet, Output};
use crate::error::{Error, Result};
use crate::grammar;
use crate::table::{is_missing, read_text, Badge, Table};

/// Produces a base score in [0, 1] for a sample and a semantic type.
pub trait Scorer: Send + Sync {
    fn id(&self) -> &str;
    fn score(&self, sample: &[String], ty: &str) -> f64;
}

fn normalize(v: &str) -> String {
    v.trim().to_lowercase()
}

/// Looks values up in a `type<TAB>value` list.
#[derive(Debug, Clone, Default)]
pub struct Gazetteer {
    catalog: Vec<String>,
    entries: HashMap<String, HashSet<String>>,
}

impl Gazetteer {
    pub fn parse(text: &str) -> Result<Self> {
        let mut g = Gazetteer::default();
        for (n, line) in text.lines().enumerate() {
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let (ty, value) = line
                .split_once('\t')
                .ok_or_else(|| Error::InvalidData(format!("gazetteer line {} lacks a tab", n + 1)))?;
            let ty = ty.trim().to_string();
            if !g.entries.contains_key(&ty) {
                g.catalog.push(ty.clone());
            }
            g.entries.entry(ty).or_default().insert(normalize(value));
        }
        Ok(g)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&read_text(path)?)
    }

    /// Types in order of first appearance.
    pub fn catalog(&self) -> &[String] {
        &self.catalog
    }
}

impl Scorer for Gazetteer {
    fn id(&self) -> &str {
        "gazetteer"
    }

    fn score(&self, sample: &[String], ty: &str) -> f64 {
        if sample.is_empty() {
            return 0.0;
        }
        let Some(set) = self.entries.get(ty) else {
            return 0.0;
        };
        sample.iter().filter(|v| set.contains(&normalize(v))).count() as f64 / sample.len() as f64
    }
}

/// Fixed score per type regardless of the sample.
#[derive(Debug, Clone)]
pub struct ConstantScorer {
    pub scores: Vec<(String, f64)>,
}

impl Scorer for ConstantScorer {
    fn id(&self) -> &str {
        "constant"
    }

    fn score(&self, _sample: &[String], ty: &str) -> f64 {
        self.scores.iter().find(|(t, _)| t == ty).map_or(0.0, |(_, s)| *s)
    }
}

pub type Sample = Vec<String>;

/// Draws `n_samples` sets of `sample_size` distinct values (uniform without
/// replacement inside a sample). When the column has no more distinct
/// values than `sample_size`, the single sample is the whole value set.
pub fn draw_samples(cells: &[String], n_samples: usize, sample_size: usize, seed: u64) -> Vec<Sample> {
    let mut distinct: Vec<String> = Vec::new();
    let mut seen = HashSet::new();
    for c in cells {
        let v = c.trim();
        if !is_missing(v) && seen.insert(v.to_string()) {
            distinct.push(v.to_string());
        }
    }
    if distinct.is_empty() {
        return Vec::new();
    }
    if distinct.len() <= sample_size {
        return vec![distinct];
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n_samples)
        .map(|_| {
            let mut idx = sample(&mut rng, distinct.len(), sample_size.max(1)).into_vec();
            idx.sort_unstable();
            idx.into_iter().map(|i| distinct[i].clone()).collect()
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum SemanticConstraint {
    /// 0-based sample index, type.
    IsType(usize, String),
    NotType(usize, String),
}

impl fmt::Display for SemanticConstraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (name, s, t) = match self {
            SemanticConstraint::IsType(s, t) => ("is_type", s, t),
            SemanticConstraint::NotType(s, t) => ("not_type", s, t),
        };
        write!(f, "{name}(S{},{})", s + 1, grammar::encode_arg(t, false))
    }
}

impl std::str::FromStr for SemanticConstraint {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        let (name, args) = grammar::split_call(text)?;
        let (s, t) = grammar::split_pair(text, args)?;
        let s = s
            .trim()
            .strip_prefix('S')
            .ok_or_else(|| Error::constraint(text, "sample ids look like S1"))?;
        let s = grammar::parse_index(text, s)?;
        let t = grammar::decode_arg(t)?;
        match name {
            "is_type" => Ok(SemanticConstraint::IsType(s, t)),
            "not_type" => Ok(SemanticConstraint::NotType(s, t)),
            _ => Err(Error::constraint(text, "expected is_type or not_type")),
        }
    }
}

/// Base scores, indexed by sample then catalog position.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreMatrix {
    pub catalog: Vec<String>,
    pub p: Vec<Vec<f64>>,
    pub scorer: String,
}

impl ScoreMatrix {
    pub fn compute(samples: &[Sample], catalog: &[String], scorer: &dyn Scorer) -> Self {
        let p = samples
            .iter()
            .map(|s| catalog.iter().map(|t| scorer.score(s, t).clamp(0.0, 1.0)).collect())
            .collect();
        ScoreMatrix {
            catalog: catalog.to_vec(),
            p,
            scorer: scorer.id().to_string(),
        }
    }

    fn type_index(&self, ty: &str) -> Option<usize> {
        self.catalog.iter().position(|t| t == ty)
    }

    /// Base score overridden by the analyst: 1 for `is_type`, 0 for `not_type`.
    pub fn adjusted(&self, h: &InteractionSet<SemanticConstraint>, s: usize, t: usize) -> f64 {
        let ty = &self.catalog[t];
        if h.contains(&SemanticConstraint::IsType(s, ty.clone())) {
            1.0
        } else if h.contains(&SemanticConstraint::NotType(s, ty.clone())) {
            0.0
        } else {
            self.p[s][t]
        }
    }

    pub fn column_score(&self, h: &InteractionSet<SemanticConstraint>, t: usize) -> f64 {
        if self.p.is_empty() {
            return 0.0;
        }
        (0..self.p.len()).map(|s| self.adjusted(h, s, t)).sum::<f64>() / self.p.len() as f64
    }

    pub fn best(&self, h: &InteractionSet<SemanticConstraint>) -> Result<String> {
        for c in h {
            if let SemanticConstraint::IsType(s, t) = c {
                if h.contains(&SemanticConstraint::NotType(*s, t.clone())) {
                    return Err(Error::ConflictingConstraints(format!(
                        "is_type and not_type on S{} and {t}",
                        s + 1
                    )));
                }
            }
        }
        let mut best: Option<(usize, f64)> = None;
        for t in 0..self.catalog.len() {
            let q = self.column_score(h, t);
            if best.is_none_or(|(_, b)| q > b) {
                best = Some((t, q));
            }
        }
        best.map(|(t, _)| self.catalog[t].clone())
            .ok_or_else(|| Error::EmptyInput("empty semantic type catalog".into()))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SemanticParams {
    pub n_samples: usize,
    pub sample_size: usize,
    pub epsilon: f64,
    pub seed: u64,
}

impl Default for SemanticParams {
    fn default() -> Self {
        SemanticParams {
            n_samples: 8,
            sample_size: 4,
            epsilon: 0.3,
            seed: 0,
        }
    }
}

pub static DESCRIPTOR: Descriptor = Descriptor {
    id: "semantic-type",
    display_name: "Semantic column type",
    input_slots: &["input", "gazetteer"],
    constraint_grammar: "semantic",
};

pub struct SemanticAssistant {
    table: Table,
    column: usize,
    samples: Vec<Sample>,
    scores: ScoreMatrix,
    epsilon: f64,
}

impl SemanticAssistant {
    pub fn new(
        table: Table,
        column: usize,
        catalog: &[String],
        scorer: &dyn Scorer,
        params: &SemanticParams,
    ) -> Result<Self> {
        let col = table
            .column(column)
            .ok_or_else(|| Error::InvalidData(format!("column {} out of range", column + 1)))?;
        let samples = draw_samples(&col.cells, params.n_samples, params.sample_size, params.seed);
        if samples.is_empty() {
            return Err(Error::EmptyInput(format!("column '{}' has no values", col.name)));
        }
        let scores = ScoreMatrix::compute(&samples, catalog, scorer);
        Ok(SemanticAssistant {
            table,
            column,
            samples,
            scores,
            epsilon: params.epsilon,
        })
    }

    pub fn samples(&self) -> &[Sample] {
        &self.samples
    }

    pub fn scores(&self) -> &ScoreMatrix {
        &self.scores
    }

    fn sample_label(&self, s: usize) -> String {
        format!("S{} ({})", s + 1, self.samples[s].join(", "))
    }
}

impl Assistant for SemanticAssistant {
    type Constraint = SemanticConstraint;
    type Expression = String;

    fn descriptor(&self) -> &Descriptor {
        &DESCRIPTOR
    }

    fn parse_constraint(&self, text: &str) -> Result<SemanticConstraint> {
        let c: SemanticConstraint = text.parse()?;
        let (SemanticConstraint::IsType(s, t) | SemanticConstraint::NotType(s, t)) = &c;
        if *s >= self.samples.len() {
            return Err(Error::constraint(
                text,
                format!("there are {} samples", self.samples.len()),
            ));
        }
        if self.scores.type_index(t).is_none() {
            return Err(Error::constraint(text, format!("`{t}` is not in the catalog")));
        }
        Ok(c)
    }

    fn format_constraint(&self, c: &SemanticConstraint) -> String {
        c.to_string()
    }

    fn best(&self, h: &InteractionSet<SemanticConstraint>) -> Result<String> {
        self.scores.best(h)
    }

    fn valid(&self, e: &String, _h: &InteractionSet<SemanticConstraint>) -> bool {
        self.scores.type_index(e).is_some()
    }

    fn choices(&self, h: &InteractionSet<SemanticConstraint>, _e: &String) -> Vec<Choice<SemanticConstraint>> {
        let mut pairs: Vec<(f64, usize, usize)> = Vec::new();
        for (s, row) in self.scores.p.iter().enumerate() {
            for (t, &p) in row.iter().enumerate() {
                if p >= self.epsilon {
                    pairs.push((p, s, t));
                }
            }
        }
        pairs.sort_by(|a, b| b.0.total_cmp(&a.0).then((a.1, a.2).cmp(&(b.1, b.2))));
        let mut out = Vec::new();
        for (_, s, t) in pairs {
            let ty = &self.scores.catalog[t];
            let is = SemanticConstraint::IsType(s, ty.clone());
            let not = SemanticConstraint::NotType(s, ty.clone());
            if h.contains(&is) || h.contains(&not) {
                continue;
            }
            out.push(Choice::new(format!("{} is {ty}", self.sample_label(s)), is));
            out.push(Choice::new(format!("{} is not {ty}", self.sample_label(s)), not));
        }
        out
    }

    fn apply(&self, e: &String) -> Result<Output> {
        let badges = self
            .table
            .columns()
            .iter()
            .enumerate()
            .map(|(k, c)| Badge {
                label: if k == self.column {
                    e.clone()
                } else {
                    c.kind.as_str().to_string()
                },
                missing: c.missing_count(),
                anomalies: 0,
            })
            .collect();
        Ok(Output {
            table: self.table.clone(),
            badges: Some(badges),
            warnings: Vec::new(),
        })
    }

    fn script(&self, e: &String) -> Vec<String> {
        vec![format!("semantic_type={e}")]
    }

    fn score(&self, e: &String, h: &InteractionSet<SemanticConstraint>) -> Option<f64> {
        self.scores.type_index(e).map(|t| self.scores.column_score(h, t))
    }

    fn notes(&self, h: &InteractionSet<SemanticConstraint>, _e: &String) -> Vec<String> {
        (0..self.scores.catalog.len())
            .map(|t| format!("{}: {:.6}", self.scores.catalog[t], self.scores.column_score(h, t)))
            .collect()
    }
}
