//! Column type inference: each type's machine competes against shared
//! missing-value and anomaly machines in a per-value mixture, and the
//! analyst can rule out types or rescue individual values.

pub mod machines;
pub mod pfsm;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use crate::assistant::{exhausted, Assistant, Choice, Descriptor, InteractionSet, Output};
use crate::error::{Error, Result};
use crate::grammar;
use crate::table::{Badge, Column, Table};

pub use pfsm::Pfsm;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PrimitiveType {
    Boolean,
    Integer,
    Float,
    Date,
    String,
}

impl PrimitiveType {
    pub const ALL: [PrimitiveType; 5] = [
        PrimitiveType::Boolean,
        PrimitiveType::Integer,
        PrimitiveType::Float,
        PrimitiveType::Date,
        PrimitiveType::String,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            PrimitiveType::Boolean => "boolean",
            PrimitiveType::Integer => "integer",
            PrimitiveType::Float => "float",
            PrimitiveType::Date => "date",
            PrimitiveType::String => "string",
        }
    }

    fn index(self) -> usize {
        self as usize
    }

    pub fn machine(self) -> Pfsm {
        match self {
            PrimitiveType::Boolean => machines::boolean(),
            PrimitiveType::Integer => machines::integer(),
            PrimitiveType::Float => machines::float(),
            PrimitiveType::Date => machines::date(),
            PrimitiveType::String => machines::string(),
        }
    }
}

impl fmt::Display for PrimitiveType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PrimitiveType {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        PrimitiveType::ALL
            .into_iter()
            .find(|t| t.as_str().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::InvalidData(format!("unknown type `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum TypeConstraint {
    NotType(PrimitiveType),
    NotMissing(String),
    NotAnomaly(String),
}

impl fmt::Display for TypeConstraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TypeConstraint::NotType(t) => write!(f, "not_type({t})"),
            TypeConstraint::NotMissing(v) => write!(f, "not_missing({})", grammar::encode_arg(v, false)),
            TypeConstraint::NotAnomaly(v) => write!(f, "not_anomaly({})", grammar::encode_arg(v, false)),
        }
    }
}

impl FromStr for TypeConstraint {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        let (name, arg) = grammar::split_call(text)?;
        match name {
            "not_type" => arg
                .parse()
                .map(TypeConstraint::NotType)
                .map_err(|_| Error::constraint(text, "unknown type")),
            "not_missing" => Ok(TypeConstraint::NotMissing(grammar::decode_arg(arg)?)),
            "not_anomaly" => Ok(TypeConstraint::NotAnomaly(grammar::decode_arg(arg)?)),
            _ => Err(Error::constraint(text, "expected not_type, not_missing or not_anomaly")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Mask {
    Valid,
    Missing,
    Anomaly,
}

/// Inferred type with the values deemed missing or anomalous under it,
/// each listed by descending count.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TypeExpression {
    pub ty: PrimitiveType,
    pub missing: Vec<String>,
    pub anomalies: Vec<String>,
}

impl TypeExpression {
    pub fn script(&self) -> Vec<String> {
        let list = |v: &[String]| {
            v.iter()
                .map(|s| grammar::encode_arg(s, true))
                .collect::<Vec<_>>()
                .join(",")
        };
        vec![
            format!("type={}", self.ty),
            format!("missing=[{}]", list(&self.missing)),
            format!("anomalies=[{}]", list(&self.anomalies)),
        ]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Weights {
    pub valid: f64,
    pub missing: f64,
    pub anomaly: f64,
}

impl Default for Weights {
    fn default() -> Self {
        Weights {
            valid: 0.895,
            missing: 0.07,
            anomaly: 0.035,
        }
    }
}

/// Per unique value: log-likelihood under each type machine, the missing
/// machine and the anomaly machine.
#[derive(Debug, Clone, PartialEq)]
struct ValueScores {
    value: String,
    count: usize,
    first_seen: usize,
    types: [f64; 5],
    missing: f64,
    anomaly: f64,
}

fn log_add(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let m = a.max(b);
    m + ((a - m).exp() + (b - m).exp()).ln()
}

/// Mixture likelihoods of a column's unique values, computed once and
/// re-weighted for every interaction set.
#[derive(Debug, Clone, PartialEq)]
pub struct TypePosterior {
    values: Vec<ValueScores>,
    weights: Weights,
    forward_calls: usize,
}

impl TypePosterior {
    pub fn new(cells: &[String], weights: Weights) -> Result<Self> {
        if cells.is_empty() {
            return Err(Error::EmptyInput("type inference on an empty column".into()));
        }
        let mut counts: BTreeMap<&str, (usize, usize)> = BTreeMap::new();
        for (k, c) in cells.iter().enumerate() {
            counts.entry(c.as_str()).or_insert((0, k)).0 += 1;
        }
        let type_machines: Vec<Pfsm> = PrimitiveType::ALL.iter().map(|t| t.machine()).collect();
        let missing = machines::missing();
        let anomaly = machines::anomaly();
        let mut forward_calls = 0;
        let values = counts
            .into_iter()
            .map(|(v, (count, first_seen))| {
                let mut types = [0.0; 5];
                for (slot, m) in types.iter_mut().zip(&type_machines) {
                    *slot = m.log_likelihood(v);
                }
                forward_calls += type_machines.len() + 2;
                ValueScores {
                    value: v.to_string(),
                    count,
                    first_seen,
                    types,
                    missing: missing.log_likelihood(v),
                    anomaly: anomaly.log_likelihood(v),
                }
            })
            .collect();
        Ok(TypePosterior {
            values,
            weights,
            forward_calls,
        })
    }

    /// Number of machine evaluations performed (unique values x machines).
    pub fn forward_calls(&self) -> usize {
        self.forward_calls
    }

    pub fn unique_values(&self) -> usize {
        self.values.len()
    }

    fn clamped(v: &ValueScores, h: &InteractionSet<TypeConstraint>) -> bool {
        h.contains(&TypeConstraint::NotMissing(v.value.clone()))
            || h.contains(&TypeConstraint::NotAnomaly(v.value.clone()))
    }

    fn components(&self, v: &ValueScores, ty: PrimitiveType) -> [f64; 3] {
        [
            self.weights.valid.ln() + v.types[ty.index()],
            self.weights.missing.ln() + v.missing,
            self.weights.anomaly.ln() + v.anomaly,
        ]
    }

    /// Unnormalised log score of a type under the constraints.
    pub fn log_score(&self, ty: PrimitiveType, h: &InteractionSet<TypeConstraint>) -> f64 {
        self.values
            .iter()
            .map(|v| {
                let [valid, miss, anom] = self.components(v, ty);
                let term = if Self::clamped(v, h) {
                    valid
                } else {
                    log_add(log_add(valid, miss), anom)
                };
                v.count as f64 * term
            })
            .sum()
    }

    /// Posterior over the five types with a uniform prior.
    pub fn posterior(&self, h: &InteractionSet<TypeConstraint>) -> [f64; 5] {
        let scores: Vec<f64> = PrimitiveType::ALL.iter().map(|&t| self.log_score(t, h)).collect();
        let m = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut out = [0.0; 5];
        if m == f64::NEG_INFINITY {
            return out;
        }
        let z: f64 = scores.iter().map(|s| (s - m).exp()).sum();
        for (o, s) in out.iter_mut().zip(&scores) {
            *o = (s - m).exp() / z;
        }
        out
    }

    fn mask_of(&self, v: &ValueScores, ty: PrimitiveType, h: &InteractionSet<TypeConstraint>) -> Mask {
        if Self::clamped(v, h) {
            return Mask::Valid;
        }
        let [valid, miss, anom] = self.components(v, ty);
        if valid >= miss && valid >= anom {
            Mask::Valid
        } else if miss >= anom {
            Mask::Missing
        } else {
            Mask::Anomaly
        }
    }

    pub fn expression(&self, ty: PrimitiveType, h: &InteractionSet<TypeConstraint>) -> TypeExpression {
        let mut ordered: Vec<&ValueScores> = self.values.iter().collect();
        ordered.sort_by(|a, b| b.count.cmp(&a.count).then(a.first_seen.cmp(&b.first_seen)));
        let mut missing = Vec::new();
        let mut anomalies = Vec::new();
        for v in ordered {
            match self.mask_of(v, ty, h) {
                Mask::Valid => {}
                Mask::Missing => missing.push(v.value.clone()),
                Mask::Anomaly => anomalies.push(v.value.clone()),
            }
        }
        TypeExpression { ty, missing, anomalies }
    }

    pub fn best(&self, h: &InteractionSet<TypeConstraint>) -> Result<TypeExpression> {
        let mut best: Option<(PrimitiveType, f64)> = None;
        for ty in PrimitiveType::ALL {
            if h.contains(&TypeConstraint::NotType(ty)) {
                continue;
            }
            let s = self.log_score(ty, h);
            if s > f64::NEG_INFINITY && best.is_none_or(|(_, b)| s > b) {
                best = Some((ty, s));
            }
        }
        match best {
            Some((ty, _)) => Ok(self.expression(ty, h)),
            None => exhausted("every column type is excluded or impossible"),
        }
    }
}

/// Per-cell masks of a column under an expression.
pub fn annotate(cells: &[String], e: &TypeExpression) -> Vec<Mask> {
    cells
        .iter()
        .map(|c| {
            if e.missing.contains(c) {
                Mask::Missing
            } else if e.anomalies.contains(c) {
                Mask::Anomaly
            } else {
                Mask::Valid
            }
        })
        .collect()
}

pub static DESCRIPTOR: Descriptor = Descriptor {
    id: "ptype",
    display_name: "ptype: column type, missing and anomalous values",
    input_slots: &["input"],
    constraint_grammar: "ptype",
};

pub struct TypeAssistant {
    table: Table,
    column: usize,
    posterior: TypePosterior,
}

impl TypeAssistant {
    pub fn new(table: Table, column: usize, weights: Weights) -> Result<Self> {
        let col = table
            .column(column)
            .ok_or_else(|| Error::InvalidData(format!("column {} out of range", column + 1)))?;
        let posterior = TypePosterior::new(&col.cells, weights)?;
        Ok(TypeAssistant {
            table,
            column,
            posterior,
        })
    }

    pub fn from_cells(cells: Vec<String>) -> Result<Self> {
        let table = Table::new(vec![Column::new("column", cells)])?;
        Self::new(table, 0, Weights::default())
    }

    pub fn posterior(&self) -> &TypePosterior {
        &self.posterior
    }

    pub fn column(&self) -> &Column {
        &self.table.columns()[self.column]
    }
}

impl Assistant for TypeAssistant {
    type Constraint = TypeConstraint;
    type Expression = TypeExpression;

    fn descriptor(&self) -> &Descriptor {
        &DESCRIPTOR
    }

    fn parse_constraint(&self, text: &str) -> Result<TypeConstraint> {
        text.parse()
    }

    fn format_constraint(&self, c: &TypeConstraint) -> String {
        c.to_string()
    }

    fn best(&self, h: &InteractionSet<TypeConstraint>) -> Result<TypeExpression> {
        self.posterior.best(h)
    }

    fn valid(&self, e: &TypeExpression, h: &InteractionSet<TypeConstraint>) -> bool {
        h.iter().all(|c| match c {
            TypeConstraint::NotType(t) => e.ty != *t,
            TypeConstraint::NotMissing(v) | TypeConstraint::NotAnomaly(v) => {
                !e.missing.contains(v) && !e.anomalies.contains(v)
            }
        })
    }

    fn choices(&self, _h: &InteractionSet<TypeConstraint>, e: &TypeExpression) -> Vec<Choice<TypeConstraint>> {
        let mut out = vec![Choice::new(
            format!("column is not {}", e.ty),
            TypeConstraint::NotType(e.ty),
        )];
        for v in &e.missing {
            out.push(Choice::new(
                format!("'{v}' is not missing"),
                TypeConstraint::NotMissing(v.clone()),
            ));
        }
        for v in &e.anomalies {
            out.push(Choice::new(
                format!("'{v}' is not an anomaly"),
                TypeConstraint::NotAnomaly(v.clone()),
            ));
        }
        out
    }

    /// Blanks the cells judged missing or anomalous and attaches badges.
    fn apply(&self, e: &TypeExpression) -> Result<Output> {
        let masks = annotate(&self.table.columns()[self.column].cells, e);
        let mut columns = self.table.columns().to_vec();
        let target = &mut columns[self.column];
        let cells = target
            .cells
            .iter()
            .zip(&masks)
            .map(|(c, m)| if *m == Mask::Valid { c.clone() } else { String::new() })
            .collect();
        *target = Column::new(target.name.clone(), cells);
        let badges = self
            .table
            .columns()
            .iter()
            .enumerate()
            .map(|(k, c)| {
                if k == self.column {
                    Badge {
                        label: e.ty.to_string(),
                        missing: masks.iter().filter(|m| **m == Mask::Missing).count(),
                        anomalies: masks.iter().filter(|m| **m == Mask::Anomaly).count(),
                    }
                } else {
                    Badge {
                        label: c.kind.as_str().to_string(),
                        missing: c.missing_count(),
                        anomalies: 0,
                    }
                }
            })
            .collect();
        Ok(Output {
            table: Table::new(columns)?,
            badges: Some(badges),
            warnings: Vec::new(),
        })
    }

    fn script(&self, e: &TypeExpression) -> Vec<String> {
        e.script()
    }

    fn score(&self, e: &TypeExpression, h: &InteractionSet<TypeConstraint>) -> Option<f64> {
        Some(self.posterior.log_score(e.ty, h))
    }

    fn notes(&self, h: &InteractionSet<TypeConstraint>, _e: &TypeExpression) -> Vec<String> {
        let p = self.posterior.posterior(h);
        let mut ranked: Vec<(PrimitiveType, f64)> = PrimitiveType::ALL.iter().copied().zip(p).collect();
        ranked.sort_by(|a, b| b.1.total_cmp(&a.1));
        ranked.iter().map(|(t, p)| format!("{t}: {p:.6}")).collect()
    }
}

/// Types in the order successive `not_type` choices would reveal them.
pub fn not_type_chain(p: &TypePosterior) -> (Vec<PrimitiveType>, Error) {
    let mut h = InteractionSet::new();
    let mut order = Vec::new();
    loop {
        match p.best(&h) {
            Ok(e) => {
                order.push(e.ty);
                h.insert(TypeConstraint::NotType(e.ty));
            }
            Err(err) => return (order, err),
        }
    }
}
