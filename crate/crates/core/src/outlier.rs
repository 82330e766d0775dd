//! m-sigma outlier removal, for a single numeric column and for whole rows
//! selected by categorical values that co-occur with numeric outliers.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::assistant::{Assistant, Choice, Descriptor, InteractionSet, Output};
use crate::datadiff::stats::mean_std;
use crate::error::{Error, Result};
use crate::grammar;
use crate::table::{is_missing, parse_number, Kind, Table};

/// Values `o` with `o <= mean - m*sd` or `o >= mean + m*sd`, using the
/// population standard deviation. Returns positions into `values`.
pub fn detect_outliers(values: &[f64], m: f64) -> Vec<usize> {
    if values.len() < 2 {
        return Vec::new();
    }
    let (mean, sd) = mean_std(values);
    if sd == 0.0 {
        return Vec::new();
    }
    let (lo, hi) = (mean - m * sd, mean + m * sd);
    values
        .iter()
        .enumerate()
        .filter(|(_, &v)| v <= lo || v >= hi)
        .map(|(i, _)| i)
        .collect()
}

/// Row indices and values of a column's parseable, non-missing cells.
fn numeric_cells(table: &Table, col: usize) -> (Vec<usize>, Vec<f64>) {
    table.columns()[col]
        .cells
        .iter()
        .enumerate()
        .filter(|(_, c)| !is_missing(c))
        .filter_map(|(i, c)| parse_number(c).map(|v| (i, v)))
        .unzip()
}

fn number_text(v: f64) -> String {
    v.to_string()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RemoveValue(pub f64);

impl fmt::Display for RemoveValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "remove_value({})", number_text(self.0))
    }
}

pub fn parse_remove_value(text: &str) -> Result<RemoveValue> {
    let (name, arg) = grammar::split_call(text)?;
    if name != "remove_value" {
        return Err(Error::constraint(text, "expected remove_value"));
    }
    parse_number(arg)
        .map(RemoveValue)
        .ok_or_else(|| Error::constraint(text, "expected a number"))
}

pub static VALUE_DESCRIPTOR: Descriptor = Descriptor {
    id: "outlier",
    display_name: "Outlier values (m-sigma)",
    input_slots: &["input"],
    constraint_grammar: "outlier",
};

pub struct OutlierAssistant {
    table: Table,
    column: usize,
    mean: f64,
    outliers: Vec<f64>,
}

impl OutlierAssistant {
    pub fn new(table: Table, column: Option<usize>, m: f64) -> Result<Self> {
        let column = match column {
            Some(c) if c < table.n_cols() => c,
            Some(c) => return Err(Error::InvalidData(format!("column {} out of range", c + 1))),
            None => table
                .columns()
                .iter()
                .position(|c| c.kind == Kind::Numeric)
                .ok_or_else(|| Error::InvalidData("no numeric column".into()))?,
        };
        let (_, values) = numeric_cells(&table, column);
        let mean = if values.is_empty() { 0.0 } else { mean_std(&values).0 };
        let mut outliers: Vec<f64> = Vec::new();
        for i in detect_outliers(&values, m) {
            if !outliers.contains(&values[i]) {
                outliers.push(values[i]);
            }
        }
        outliers.sort_by(|a, b| (b - mean).abs().total_cmp(&(a - mean).abs()).then(a.total_cmp(b)));
        Ok(OutlierAssistant {
            table,
            column,
            mean,
            outliers,
        })
    }

    /// Distinct outlier values, furthest from the mean first.
    pub fn outliers(&self) -> &[f64] {
        &self.outliers
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }
}

impl Assistant for OutlierAssistant {
    type Constraint = RemoveValue;
    type Expression = Vec<RemoveValue>;

    fn descriptor(&self) -> &Descriptor {
        &VALUE_DESCRIPTOR
    }

    fn parse_constraint(&self, text: &str) -> Result<RemoveValue> {
        parse_remove_value(text)
    }

    fn format_constraint(&self, c: &RemoveValue) -> String {
        c.to_string()
    }

    fn best(&self, h: &InteractionSet<RemoveValue>) -> Result<Vec<RemoveValue>> {
        Ok(h.as_slice().to_vec())
    }

    fn valid(&self, e: &Vec<RemoveValue>, h: &InteractionSet<RemoveValue>) -> bool {
        e.as_slice() == h.as_slice()
    }

    fn choices(&self, h: &InteractionSet<RemoveValue>, _e: &Vec<RemoveValue>) -> Vec<Choice<RemoveValue>> {
        self.outliers
            .iter()
            .filter(|&&v| !h.contains(&RemoveValue(v)))
            .map(|&v| Choice::new(format!("Remove value {}", number_text(v)), RemoveValue(v)))
            .collect()
    }

    fn apply(&self, e: &Vec<RemoveValue>) -> Result<Output> {
        let cells = &self.table.columns()[self.column].cells;
        let drop = |i: usize| parse_number(&cells[i]).is_some_and(|v| e.contains(&RemoveValue(v)));
        Ok(Output::plain(self.table.filter_rows(|i| !drop(i))))
    }

    fn script(&self, e: &Vec<RemoveValue>) -> Vec<String> {
        e.iter().map(ToString::to_string).collect()
    }
}

/// Remove every row whose `column` equals `value`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct AggregateFilter {
    pub column: String,
    pub value: String,
}

impl fmt::Display for AggregateFilter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let col = grammar::encode_arg(&self.column, false).replace('=', "%3D");
        write!(f, "remove_rows({col}={})", grammar::encode_arg(&self.value, false))
    }
}

impl std::str::FromStr for AggregateFilter {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        let (name, arg) = grammar::split_call(text)?;
        if name != "remove_rows" {
            return Err(Error::constraint(text, "expected remove_rows"));
        }
        let (col, value) = arg
            .split_once('=')
            .ok_or_else(|| Error::constraint(text, "expected column=value"))?;
        Ok(AggregateFilter {
            column: grammar::decode_arg(col)?,
            value: grammar::decode_arg(value)?,
        })
    }
}

/// Rows holding an m-sigma outlier in any numeric column.
pub fn outlier_rows(table: &Table, m: f64) -> BTreeSet<usize> {
    let mut rows = BTreeSet::new();
    for (k, c) in table.columns().iter().enumerate() {
        if c.kind != Kind::Numeric {
            continue;
        }
        let (idx, values) = numeric_cells(table, k);
        rows.extend(detect_outliers(&values, m).into_iter().map(|i| idx[i]));
    }
    rows
}

/// Distinct non-numeric (column, value) pairs found in outlier rows with
/// their number of occurrences, most frequent first, then by column and
/// value name.
pub fn collect_aggregate_filters(table: &Table, m: f64) -> Vec<(AggregateFilter, usize)> {
    let rows = outlier_rows(table, m);
    let mut counts: BTreeMap<AggregateFilter, usize> = BTreeMap::new();
    for c in table.columns().iter().filter(|c| c.kind != Kind::Numeric) {
        for &r in &rows {
            let v = c.cells[r].trim();
            if is_missing(v) {
                continue;
            }
            let f = AggregateFilter {
                column: c.name.clone(),
                value: v.to_string(),
            };
            *counts.entry(f).or_default() += 1;
        }
    }
    let mut out: Vec<(AggregateFilter, usize)> = counts.into_iter().collect();
    out.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    out
}

pub fn remove_rows(table: &Table, filters: &[AggregateFilter]) -> Table {
    let cols: Vec<(usize, &str)> = filters
        .iter()
        .filter_map(|f| table.column_index(&f.column).map(|k| (k, f.value.as_str())))
        .collect();
    table.filter_rows(|i| !cols.iter().any(|&(k, v)| table.columns()[k].cells[i].trim() == v))
}

pub static AGGREGATE_DESCRIPTOR: Descriptor = Descriptor {
    id: "outlier-aggregate",
    display_name: "Aggregate rows (m-sigma)",
    input_slots: &["input"],
    constraint_grammar: "outlier-aggregate",
};

pub struct AggregateAssistant {
    table: Table,
    filters: Vec<(AggregateFilter, usize)>,
    warnings: Vec<String>,
}

impl AggregateAssistant {
    pub fn new(table: Table, m: f64) -> Self {
        let mut warnings = Vec::new();
        let numeric = table.columns().iter().any(|c| c.kind == Kind::Numeric);
        let other = table.columns().iter().any(|c| c.kind != Kind::Numeric);
        if !numeric || !other {
            warnings.push("aggregate detection needs numeric and categorical columns".to_string());
        }
        let filters = collect_aggregate_filters(&table, m);
        AggregateAssistant {
            table,
            filters,
            warnings,
        }
    }

    pub fn filters(&self) -> Vec<&AggregateFilter> {
        self.filters.iter().map(|(f, _)| f).collect()
    }
}

impl Assistant for AggregateAssistant {
    type Constraint = AggregateFilter;
    type Expression = Vec<AggregateFilter>;

    fn descriptor(&self) -> &Descriptor {
        &AGGREGATE_DESCRIPTOR
    }

    fn parse_constraint(&self, text: &str) -> Result<AggregateFilter> {
        let f: AggregateFilter = text.parse()?;
        if self.table.column_index(&f.column).is_none() {
            return Err(Error::constraint(text, format!("no column named `{}`", f.column)));
        }
        Ok(f)
    }

    fn format_constraint(&self, c: &AggregateFilter) -> String {
        c.to_string()
    }

    fn best(&self, h: &InteractionSet<AggregateFilter>) -> Result<Vec<AggregateFilter>> {
        Ok(h.as_slice().to_vec())
    }

    fn valid(&self, e: &Vec<AggregateFilter>, h: &InteractionSet<AggregateFilter>) -> bool {
        e.as_slice() == h.as_slice()
    }

    fn choices(&self, h: &InteractionSet<AggregateFilter>, _e: &Vec<AggregateFilter>) -> Vec<Choice<AggregateFilter>> {
        self.filters
            .iter()
            .filter(|(f, _)| !h.contains(f))
            .map(|(f, n)| {
                Choice::new(
                    format!("Remove rows where {} is '{}' ({n} outlier rows)", f.column, f.value),
                    f.clone(),
                )
            })
            .collect()
    }

    fn apply(&self, e: &Vec<AggregateFilter>) -> Result<Output> {
        Ok(Output {
            table: remove_rows(&self.table, e),
            badges: None,
            warnings: self.warnings.clone(),
        })
    }

    fn script(&self, e: &Vec<AggregateFilter>) -> Vec<String> {
        e.iter().map(ToString::to_string).collect()
    }
}
