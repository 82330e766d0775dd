//! The assistant contract: an empty starting interaction set, a transform
//! `f`, a `best` recommender and a `choices` generator, plus a type-erased
//! wrapper that works over constraint strings.

use std::collections::HashSet;
use std::fmt::Debug;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::table::{Badge, Preview, Table};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Descriptor {
    pub id: &'static str,
    pub display_name: &'static str,
    pub input_slots: &'static [&'static str],
    pub constraint_grammar: &'static str,
}

/// Ordered set of constraints accumulated from the analyst's choices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InteractionSet<C> {
    items: Vec<C>,
}

impl<C> Default for InteractionSet<C> {
    fn default() -> Self {
        InteractionSet { items: Vec::new() }
    }
}

impl<C: PartialEq + Clone> InteractionSet<C> {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builds a set, dropping repeated constraints after their first occurrence.
    pub fn from_vec(items: Vec<C>) -> Self {
        let mut h = Self::new();
        for c in items {
            h.insert(c);
        }
        h
    }

    /// Returns false if the constraint was already present.
    pub fn insert(&mut self, c: C) -> bool {
        if self.items.contains(&c) {
            return false;
        }
        self.items.push(c);
        true
    }

    pub fn with(&self, c: C) -> Self {
        let mut next = self.clone();
        next.insert(c);
        next
    }

    pub fn contains(&self, c: &C) -> bool {
        self.items.contains(c)
    }

    pub fn iter(&self) -> std::slice::Iter<'_, C> {
        self.items.iter()
    }

    pub fn as_slice(&self) -> &[C] {
        &self.items
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }
}

impl<'a, C> IntoIterator for &'a InteractionSet<C> {
    type Item = &'a C;
    type IntoIter = std::slice::Iter<'a, C>;

    fn into_iter(self) -> Self::IntoIter {
        self.items.iter()
    }
}

/// One offered refinement: the label shown to the analyst and the
/// constraint that selecting it adds.
#[derive(Debug, Clone, PartialEq)]
pub struct Choice<C> {
    pub label: String,
    pub constraint: C,
}

impl<C> Choice<C> {
    pub fn new(label: impl Into<String>, constraint: C) -> Self {
        Choice {
            label: label.into(),
            constraint,
        }
    }
}

/// Result of applying an expression to the bound inputs.
#[derive(Debug, Clone, PartialEq)]
pub struct Output {
    pub table: Table,
    pub badges: Option<Vec<Badge>>,
    pub warnings: Vec<String>,
}

impl Output {
    pub fn plain(table: Table) -> Self {
        Output {
            table,
            badges: None,
            warnings: Vec::new(),
        }
    }
}

pub trait Assistant: Send + Sync {
    type Constraint: Clone + PartialEq + Debug + Send + Sync;
    type Expression: Clone + Debug + Send + Sync;

    fn descriptor(&self) -> &Descriptor;

    fn parse_constraint(&self, text: &str) -> Result<Self::Constraint>;

    fn format_constraint(&self, c: &Self::Constraint) -> String;

    fn best(&self, h: &InteractionSet<Self::Constraint>) -> Result<Self::Expression>;

    fn valid(&self, e: &Self::Expression, h: &InteractionSet<Self::Constraint>) -> bool;

    /// Candidate constraints to add next, most promising first.
    fn choices(&self, h: &InteractionSet<Self::Constraint>, e: &Self::Expression) -> Vec<Choice<Self::Constraint>>;

    fn apply(&self, e: &Self::Expression) -> Result<Output>;

    fn script(&self, e: &Self::Expression) -> Vec<String>;

    /// Objective value of `e`, when the assistant has one.
    fn score(&self, _e: &Self::Expression, _h: &InteractionSet<Self::Constraint>) -> Option<f64> {
        None
    }

    /// Extra human-readable lines shown next to the recommendation.
    fn notes(&self, _h: &InteractionSet<Self::Constraint>, _e: &Self::Expression) -> Vec<String> {
        Vec::new()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChoiceView {
    pub label: String,
    /// The complete interaction set after selecting this choice.
    pub next: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Recommendation {
    pub script: Vec<String>,
    pub output: Table,
    pub preview: Preview,
    pub choices: Vec<ChoiceView>,
    pub score: Option<f64>,
    pub valid: bool,
    pub notes: Vec<String>,
    pub warnings: Vec<String>,
}

/// Object-safe view of an assistant where constraints travel as text.
pub trait DynAssistant: Send + Sync {
    fn descriptor(&self) -> &Descriptor;

    /// Parses and re-prints a constraint in canonical form.
    fn normalize(&self, text: &str) -> Result<String>;

    fn best_script(&self, h: &[String]) -> Result<Vec<String>>;

    fn choice_list(&self, h: &[String]) -> Result<Vec<ChoiceView>>;

    fn recommend(&self, h: &[String], preview_rows: usize) -> Result<Recommendation>;
}

fn parse_set<A: Assistant + ?Sized>(a: &A, h: &[String]) -> Result<InteractionSet<A::Constraint>> {
    let parsed = h
        .iter()
        .filter(|t| !t.trim().is_empty())
        .map(|t| a.parse_constraint(t.trim()))
        .collect::<Result<Vec<_>>>()?;
    Ok(InteractionSet::from_vec(parsed))
}

fn views<A: Assistant + ?Sized>(a: &A, h: &InteractionSet<A::Constraint>, e: &A::Expression) -> Vec<ChoiceView> {
    let base: Vec<String> = h.iter().map(|c| a.format_constraint(c)).collect();
    let mut labels = HashSet::new();
    a.choices(h, e)
        .into_iter()
        .filter(|c| !h.contains(&c.constraint) && labels.insert(c.label.clone()))
        .map(|c| {
            let mut next = base.clone();
            next.push(a.format_constraint(&c.constraint));
            ChoiceView { label: c.label, next }
        })
        .collect()
}

impl<A: Assistant> DynAssistant for A {
    fn descriptor(&self) -> &Descriptor {
        Assistant::descriptor(self)
    }

    fn normalize(&self, text: &str) -> Result<String> {
        let c = self.parse_constraint(text.trim())?;
        Ok(self.format_constraint(&c))
    }

    fn best_script(&self, h: &[String]) -> Result<Vec<String>> {
        let h = parse_set(self, h)?;
        let e = self.best(&h)?;
        Ok(self.script(&e))
    }

    fn choice_list(&self, h: &[String]) -> Result<Vec<ChoiceView>> {
        let h = parse_set(self, h)?;
        let e = self.best(&h)?;
        Ok(views(self, &h, &e))
    }

    fn recommend(&self, h: &[String], preview_rows: usize) -> Result<Recommendation> {
        let h = parse_set(self, h)?;
        let e = self.best(&h)?;
        let out = self.apply(&e)?;
        let mut preview = out.table.preview(preview_rows);
        preview.badges = out.badges.clone();
        Ok(Recommendation {
            script: self.script(&e),
            preview,
            choices: views(self, &h, &e),
            score: self.score(&e, &h),
            valid: self.valid(&e, &h),
            notes: self.notes(&h, &e),
            warnings: out.warnings,
            output: out.table,
        })
    }
}

/// Rejects an empty candidate set with the conflict error.
pub(crate) fn exhausted<T>(what: &str) -> Result<T> {
    Err(Error::Exhausted(what.to_string()))
}
