//! Patch language, constraints and the patch interpreter.
//!
//! Indices are 0-based in memory and 1-based in text. `delete` names an
//! input column, `permute` pairs are (input, reference), and `recode`,
//! `linear`, `insert` and `notransform` name reference (output) positions.

use std::collections::BTreeSet;
use std::fmt;

use crate::error::{Error, Result};
use crate::grammar;
use crate::table::{is_missing, parse_number, Column, Table};

#[derive(Debug, Clone, PartialEq)]
pub enum Patch {
    Delete(usize),
    Permute(Vec<(usize, usize)>),
    Recode { col: usize, mapping: Vec<(String, String)> },
    Linear { col: usize, a: f64, b: f64 },
    Insert(usize),
}

fn recode_value(v: &str) -> String {
    grammar::encode_arg(v, true)
        .replace('[', "%5B")
        .replace(']', "%5D")
        .replace('>', "%3E")
}

impl fmt::Display for Patch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Patch::Delete(k) => write!(f, "delete({})", k + 1),
            Patch::Insert(k) => write!(f, "insert({})", k + 1),
            Patch::Permute(pairs) => {
                let body: Vec<String> = pairs.iter().map(|(i, j)| format!("({},{})", i + 1, j + 1)).collect();
                write!(f, "permute({})", body.join(","))
            }
            Patch::Recode { col, mapping } => {
                let body: Vec<String> = mapping
                    .iter()
                    .map(|(a, b)| format!("{}->{}", recode_value(a), recode_value(b)))
                    .collect();
                write!(f, "recode({},[{}])", col + 1, body.join(","))
            }
            Patch::Linear { col, a, b } => write!(f, "linear({},{},{})", col + 1, a, b),
        }
    }
}

/// A datadiff expression: patches kept in application order
/// (delete, permute, recode/linear, insert).
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PatchSet {
    pub patches: Vec<Patch>,
}

impl PatchSet {
    pub fn new(mut patches: Vec<Patch>) -> Self {
        patches.sort_by_key(|p| match p {
            Patch::Delete(_) => 0,
            Patch::Permute(_) => 1,
            Patch::Recode { .. } | Patch::Linear { .. } => 2,
            Patch::Insert(_) => 3,
        });
        PatchSet { patches }
    }

    pub fn permutation(&self) -> Option<&[(usize, usize)]> {
        self.patches.iter().find_map(|p| match p {
            Patch::Permute(pairs) => Some(pairs.as_slice()),
            _ => None,
        })
    }

    /// Reference positions touched by recode or linear patches.
    pub fn transformed(&self) -> Vec<usize> {
        self.patches
            .iter()
            .filter_map(|p| match p {
                Patch::Recode { col, .. } | Patch::Linear { col, .. } => Some(*col),
                _ => None,
            })
            .collect()
    }

    pub fn deleted(&self) -> Vec<usize> {
        self.patches
            .iter()
            .filter_map(|p| match p {
                Patch::Delete(k) => Some(*k),
                _ => None,
            })
            .collect()
    }

    pub fn inserted(&self) -> Vec<usize> {
        self.patches
            .iter()
            .filter_map(|p| match p {
                Patch::Insert(k) => Some(*k),
                _ => None,
            })
            .collect()
    }

    pub fn script(&self) -> Vec<String> {
        self.patches.iter().map(ToString::to_string).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum DiffConstraint {
    /// Input column, reference column.
    NoMatch(usize, usize),
    Match(usize, usize),
    /// Reference column.
    NoTransform(usize),
}

impl fmt::Display for DiffConstraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DiffConstraint::NoMatch(i, j) => write!(f, "nomatch({},{})", i + 1, j + 1),
            DiffConstraint::Match(i, j) => write!(f, "match({},{})", i + 1, j + 1),
            DiffConstraint::NoTransform(j) => write!(f, "notransform({})", j + 1),
        }
    }
}

fn resolve(text: &str, arg: &str, names: &[String]) -> Result<usize> {
    let arg = arg.trim();
    if arg.chars().all(|c| c.is_ascii_digit()) {
        let k = grammar::parse_index(text, arg)?;
        if k >= names.len() {
            return Err(Error::constraint(text, format!("column {} out of range", k + 1)));
        }
        return Ok(k);
    }
    let name = grammar::decode_arg(arg)?;
    names
        .iter()
        .position(|n| *n == name)
        .ok_or_else(|| Error::constraint(text, format!("no column named `{name}`")))
}

/// Parses a constraint; arguments are 1-based indices or column names.
pub fn parse_constraint(text: &str, input: &[String], reference: &[String]) -> Result<DiffConstraint> {
    let (name, args) = grammar::split_call(text)?;
    match name {
        "notransform" => Ok(DiffConstraint::NoTransform(resolve(text, args, reference)?)),
        "nomatch" | "match" => {
            let (i, j) = grammar::split_pair(text, args)?;
            let (i, j) = (resolve(text, i, input)?, resolve(text, j, reference)?);
            Ok(if name == "match" {
                DiffConstraint::Match(i, j)
            } else {
                DiffConstraint::NoMatch(i, j)
            })
        }
        _ => Err(Error::constraint(text, "expected nomatch, match or notransform")),
    }
}

/// Whether a patch set honours every constraint.
pub fn valid(ps: &PatchSet, h: &[DiffConstraint]) -> bool {
    let pairs = ps.permutation().unwrap_or(&[]);
    let inputs: BTreeSet<usize> = pairs.iter().map(|p| p.0).collect();
    let refs: BTreeSet<usize> = pairs.iter().map(|p| p.1).collect();
    if inputs.len() != pairs.len() || refs.len() != pairs.len() {
        return false;
    }
    let transformed = ps.transformed();
    h.iter().all(|c| match *c {
        DiffConstraint::Match(i, j) => pairs.contains(&(i, j)),
        DiffConstraint::NoMatch(i, j) => !pairs.contains(&(i, j)),
        DiffConstraint::NoTransform(j) => !transformed.contains(&j),
    })
}

fn format_number(x: f64) -> String {
    let rounded = (x * 1e12).round() / 1e12;
    if rounded == 0.0 {
        "0".into()
    } else {
        rounded.to_string()
    }
}

/// Applies a patch set to `input`, producing columns in reference order
/// named after `reference`. Without a permute patch the input passes
/// through unchanged.
pub fn apply_patches(ps: &PatchSet, input: &Table, reference_names: &[String]) -> Result<(Table, Vec<String>)> {
    let mut warnings = Vec::new();
    let Some(pairs) = ps.permutation() else {
        return Ok((input.clone(), warnings));
    };
    let n_out = reference_names.len();
    let mut source: Vec<Option<usize>> = vec![None; n_out];
    for &(i, j) in pairs {
        if i >= input.n_cols() || j >= n_out {
            return Err(Error::InvalidData(format!(
                "permute pair ({},{}) out of range",
                i + 1,
                j + 1
            )));
        }
        source[j] = Some(i);
    }
    let inserted: BTreeSet<usize> = ps.inserted().into_iter().collect();
    let mut columns = Vec::with_capacity(n_out);
    for (j, name) in reference_names.iter().enumerate() {
        let cells = match source[j] {
            Some(i) => input.columns()[i].cells.clone(),
            None if inserted.contains(&j) => vec![String::new(); input.n_rows()],
            None => {
                return Err(Error::InvalidData(format!(
                    "reference column {} is neither matched nor inserted",
                    j + 1
                )))
            }
        };
        columns.push(Column::new(name.clone(), cells));
    }
    for p in &ps.patches {
        match p {
            Patch::Recode { col, mapping } => {
                let column = columns
                    .get_mut(*col)
                    .ok_or_else(|| Error::InvalidData(format!("recode column {} out of range", col + 1)))?;
                for (from, _) in mapping {
                    if !column.cells.iter().any(|c| c.trim() == from) {
                        warnings.push(format!(
                            "recode key '{from}' does not occur in column '{}'",
                            column.name
                        ));
                    }
                }
                let cells = column
                    .cells
                    .iter()
                    .map(|c| match mapping.iter().find(|(from, _)| from == c.trim()) {
                        Some((_, to)) if !is_missing(c) => to.clone(),
                        _ => c.clone(),
                    })
                    .collect();
                *column = Column::new(column.name.clone(), cells);
            }
            Patch::Linear { col, a, b } => {
                let column = columns
                    .get_mut(*col)
                    .ok_or_else(|| Error::InvalidData(format!("linear column {} out of range", col + 1)))?;
                let cells = column
                    .cells
                    .iter()
                    .map(|c| match parse_number(c) {
                        Some(x) => format_number(a * x + b),
                        None => c.clone(),
                    })
                    .collect();
                *column = Column::new(column.name.clone(), cells);
            }
            _ => {}
        }
    }
    Ok((Table::new(columns)?, warnings))
}
