//! In-memory tables with per-column kinds, empirical statistics and
//! canonical CSV output.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs;
use std::path::Path;
use std::sync::OnceLock;

use regex::Regex;
use serde::Serialize;

use crate::dialect::{self, Dialect};
use crate::error::{Error, Result};

/// Cell values treated as absent data (compared after trimming).
pub const MISSING_VOCAB: [&str; 10] = ["", "?", "NA", "N/A", "na", "null", "NULL", "-", "NaN", "nan"];

pub fn is_missing(cell: &str) -> bool {
    MISSING_VOCAB.contains(&cell.trim())
}

fn number_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"^[+-]?(?:\d+(?:\.\d*)?|\.\d+)(?:[eE][+-]?\d+)?$").unwrap())
}

/// Locale-free number parsing: optional sign, decimal point, exponent;
/// surrounding whitespace is ignored, thousands separators are not.
pub fn parse_number(cell: &str) -> Option<f64> {
    let t = cell.trim();
    if number_re().is_match(t) {
        t.parse().ok()
    } else {
        None
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Kind {
    Numeric,
    Categorical,
    Text,
}

impl Kind {
    pub fn as_str(self) -> &'static str {
        match self {
            Kind::Numeric => "numeric",
            Kind::Categorical => "categorical",
            Kind::Text => "text",
        }
    }
}

pub fn detect_kind(cells: &[String]) -> Kind {
    let present: Vec<&str> = cells.iter().map(|c| c.trim()).filter(|c| !is_missing(c)).collect();
    if present.is_empty() {
        return Kind::Categorical;
    }
    let parsed = present.iter().filter(|c| parse_number(c).is_some()).count();
    if parsed * 10 >= present.len() * 9 {
        return Kind::Numeric;
    }
    let distinct: BTreeSet<&str> = present.iter().copied().collect();
    let limit = 20usize.max(cells.len() / 20);
    if distinct.len() <= limit {
        Kind::Categorical
    } else {
        Kind::Text
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Column {
    pub name: String,
    pub cells: Vec<String>,
    pub kind: Kind,
}

impl Column {
    pub fn new(name: impl Into<String>, cells: Vec<String>) -> Self {
        let kind = detect_kind(&cells);
        Column {
            name: name.into(),
            cells,
            kind,
        }
    }

    /// Parsed non-missing values; `None` unless the column is numeric.
    pub fn numeric_view(&self) -> Option<Vec<f64>> {
        (self.kind == Kind::Numeric).then(|| self.cells.iter().filter_map(|c| parse_number(c)).collect())
    }

    pub fn frequencies(&self) -> BTreeMap<String, f64> {
        category_frequencies(&self.cells)
    }

    pub fn missing_count(&self) -> usize {
        self.cells.iter().filter(|c| is_missing(c)).count()
    }
}

/// Relative frequency of each non-missing (trimmed) value.
pub fn category_frequencies(cells: &[String]) -> BTreeMap<String, f64> {
    let mut counts: BTreeMap<String, usize> = BTreeMap::new();
    let mut total = 0usize;
    for c in cells {
        if !is_missing(c) {
            *counts.entry(c.trim().to_string()).or_default() += 1;
            total += 1;
        }
    }
    counts.into_iter().map(|(k, n)| (k, n as f64 / total as f64)).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    columns: Vec<Column>,
    n_rows: usize,
}

impl Table {
    /// Builds a table from columns of equal length, suffixing repeated names.
    pub fn new(mut columns: Vec<Column>) -> Result<Self> {
        let n_rows = columns.first().map_or(0, |c| c.cells.len());
        if columns.iter().any(|c| c.cells.len() != n_rows) {
            return Err(Error::InvalidData("columns differ in length".into()));
        }
        let mut seen: HashMap<String, usize> = HashMap::new();
        let taken: BTreeSet<String> = columns.iter().map(|c| c.name.clone()).collect();
        let mut used: BTreeSet<String> = BTreeSet::new();
        for col in &mut columns {
            if used.contains(&col.name) {
                let n = seen.entry(col.name.clone()).or_insert(1);
                let mut candidate;
                loop {
                    *n += 1;
                    candidate = format!("{}_{}", col.name, n);
                    if !taken.contains(&candidate) && !used.contains(&candidate) {
                        break;
                    }
                }
                col.name = candidate;
            }
            used.insert(col.name.clone());
        }
        Ok(Table { columns, n_rows })
    }

    /// First row is the header; rows are padded with empty cells to the
    /// most common width and cut at that width when longer.
    pub fn from_rows(rows: Vec<Vec<String>>) -> Result<Self> {
        let (header, body) = rows.split_first().ok_or_else(|| Error::EmptyInput("no rows".into()))?;
        let width = modal_width(&rows);
        let mut columns: Vec<Vec<String>> = vec![Vec::with_capacity(body.len()); width];
        for row in body {
            for (j, col) in columns.iter_mut().enumerate() {
                col.push(row.get(j).cloned().unwrap_or_default());
            }
        }
        let columns = columns
            .into_iter()
            .enumerate()
            .map(|(j, cells)| {
                let name = header.get(j).cloned().unwrap_or_default();
                let name = if name.is_empty() { format!("V{}", j + 1) } else { name };
                Column::new(name, cells)
            })
            .collect();
        Table::new(columns)
    }

    pub fn columns(&self) -> &[Column] {
        &self.columns
    }

    pub fn column(&self, idx: usize) -> Option<&Column> {
        self.columns.get(idx)
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c.name == name)
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.columns.len()
    }

    pub fn header(&self) -> Vec<String> {
        self.columns.iter().map(|c| c.name.clone()).collect()
    }

    pub fn row(&self, i: usize) -> Vec<String> {
        self.columns.iter().map(|c| c.cells[i].clone()).collect()
    }

    /// Keeps the rows for which `keep` returns true.
    pub fn filter_rows(&self, keep: impl Fn(usize) -> bool) -> Table {
        let rows: Vec<usize> = (0..self.n_rows).filter(|&i| keep(i)).collect();
        let columns = self
            .columns
            .iter()
            .map(|c| Column::new(c.name.clone(), rows.iter().map(|&i| c.cells[i].clone()).collect()))
            .collect();
        Table {
            columns,
            n_rows: rows.len(),
        }
    }

    pub fn preview(&self, n: usize) -> Preview {
        Preview {
            header: self.header(),
            rows: (0..self.n_rows.min(n)).map(|i| self.row(i)).collect(),
            badges: None,
        }
    }

    pub fn to_csv_string(&self) -> String {
        let mut w = csv::WriterBuilder::new()
            .quote_style(csv::QuoteStyle::Necessary)
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(Vec::new());
        // Writing into a Vec cannot fail.
        w.write_record(self.header()).unwrap();
        for i in 0..self.n_rows {
            w.write_record(self.row(i)).unwrap();
        }
        String::from_utf8(w.into_inner().unwrap()).expect("cells are UTF-8")
    }
}

fn modal_width(rows: &[Vec<String>]) -> usize {
    let mut counts: BTreeMap<usize, usize> = BTreeMap::new();
    for r in rows {
        *counts.entry(r.len()).or_default() += 1;
    }
    // Ties go to the wider layout so that no header cell is dropped.
    counts.into_iter().max_by_key(|&(w, n)| (n, w)).map_or(0, |(w, _)| w)
}

pub fn read_csv_str(text: &str, dialect: &Dialect) -> Result<Table> {
    let rows = dialect::parse(text, dialect);
    Table::from_rows(rows)
}

pub fn read_text(path: &Path) -> Result<String> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(match String::from_utf8(bytes) {
        Ok(s) => s,
        Err(e) => String::from_utf8_lossy(e.as_bytes()).into_owned(),
    })
}

pub fn read_csv(path: &Path, dialect: &Dialect) -> Result<Table> {
    read_csv_str(&read_text(path)?, dialect)
}

pub fn write_csv(table: &Table, path: &Path) -> Result<()> {
    fs::write(path, table.to_csv_string()).map_err(|e| Error::io(path, e))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Badge {
    pub label: String,
    pub missing: usize,
    pub anomalies: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Preview {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub badges: Option<Vec<Badge>>,
}

/// Right-continuous empirical distribution function.
#[derive(Debug, Clone, PartialEq)]
pub struct Ecdf {
    sorted: Vec<f64>,
}

impl Ecdf {
    pub fn new(values: &[f64]) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptyInput("empirical CDF of no values".into()));
        }
        let mut sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        Ok(Ecdf { sorted })
    }

    pub fn at(&self, x: f64) -> f64 {
        self.sorted.partition_point(|&v| v <= x) as f64 / self.sorted.len() as f64
    }

    /// Distinct support points with the cumulative weight at each.
    pub fn steps(&self) -> Vec<(f64, f64)> {
        let n = self.sorted.len() as f64;
        let mut out: Vec<(f64, f64)> = Vec::new();
        for (i, &v) in self.sorted.iter().enumerate() {
            match out.last_mut() {
                Some(last) if last.0 == v => last.1 = (i + 1) as f64 / n,
                _ => out.push((v, (i + 1) as f64 / n)),
            }
        }
        out
    }

    pub fn len(&self) -> usize {
        self.sorted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sorted.is_empty()
    }
}
