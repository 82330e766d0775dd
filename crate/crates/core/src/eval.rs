//! Synthetic corruption cases and a simulated analyst that counts how many
//! interactions each assistant needs to reach a known ground truth.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, WeightedIndex};
use rayon::prelude::*;
use serde::Serialize;

use crate::assistant::{Assistant, InteractionSet};
use crate::datadiff::{self, Datadiff, DiffConstraint};
use crate::dialect::{base_candidates, Dialect, DialectAssistant, DialectConstraint, Slot};
use crate::error::{Error, Result};
use crate::table::{Column, Kind, Table};
use crate::typeinfer::{PrimitiveType, TypeAssistant, TypeConstraint};

/// Interactions after which a case counts as not solved.
pub const DEFAULT_CAP: usize = 10;

fn rng_for(seed: u64, case: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(case as u64);
    rng
}

fn normal_cells(rng: &mut ChaCha8Rng, n: usize, mean: f64, sd: f64, lo: f64, hi: f64, decimals: usize) -> Vec<String> {
    let d = Normal::new(mean, sd).expect("positive standard deviation");
    (0..n)
        .map(|_| format!("{:.*}", decimals, d.sample(rng).clamp(lo, hi)))
        .collect()
}

fn categorical_cells(rng: &mut ChaCha8Rng, n: usize, levels: &[(&str, f64)]) -> Vec<String> {
    let w = WeightedIndex::new(levels.iter().map(|l| l.1)).expect("positive weights");
    (0..n).map(|_| levels[w.sample(rng)].0.to_string()).collect()
}

/// Four measurements and a three-level class, in the shape of the iris data.
pub fn iris_like(rows: usize, rng: &mut ChaCha8Rng) -> Table {
    let species: Vec<usize> = (0..rows).map(|r| r % 3).collect();
    let by_species = |rng: &mut ChaCha8Rng, params: [(f64, f64); 3]| -> Vec<String> {
        species
            .iter()
            .map(|&s| {
                let (m, sd) = params[s];
                format!("{:.1}", Normal::new(m, sd).unwrap().sample(rng).max(0.1))
            })
            .collect()
    };
    let sepal_length = by_species(rng, [(5.0, 0.35), (5.9, 0.5), (6.6, 0.6)]);
    let sepal_width = by_species(rng, [(3.4, 0.38), (2.8, 0.31), (3.0, 0.32)]);
    let petal_length = by_species(rng, [(1.46, 0.17), (4.26, 0.47), (5.55, 0.55)]);
    let petal_width = by_species(rng, [(0.25, 0.1), (1.33, 0.2), (2.03, 0.27)]);
    let names = ["setosa", "versicolor", "virginica"];
    Table::new(vec![
        Column::new("sepal_length", sepal_length),
        Column::new("sepal_width", sepal_width),
        Column::new("petal_length", petal_length),
        Column::new("petal_width", petal_width),
        Column::new("species", species.iter().map(|&s| names[s].to_string()).collect()),
    ])
    .expect("columns have equal length")
}

/// Census-style mix of integer and categorical columns, in the shape of
/// the adult income data.
pub fn adult_like(rows: usize, rng: &mut ChaCha8Rng) -> Table {
    let age = normal_cells(rng, rows, 38.6, 13.6, 17.0, 90.0, 0);
    let workclass = categorical_cells(
        rng,
        rows,
        &[
            ("Private", 0.70),
            ("Self-emp-not-inc", 0.08),
            ("Local-gov", 0.07),
            ("State-gov", 0.05),
            ("Self-emp-inc", 0.04),
            ("Federal-gov", 0.03),
            ("Without-pay", 0.03),
        ],
    );
    let fnlwgt = normal_cells(rng, rows, 189_778.0, 105_550.0, 12_285.0, 1_484_705.0, 0);
    let education_num = normal_cells(rng, rows, 10.1, 2.6, 1.0, 16.0, 0);
    let marital = categorical_cells(
        rng,
        rows,
        &[
            ("Married-civ-spouse", 0.46),
            ("Never-married", 0.33),
            ("Divorced", 0.14),
            ("Separated", 0.04),
            ("Widowed", 0.03),
        ],
    );
    let hours: Vec<String> = {
        let spread = normal_cells(rng, rows, 41.0, 12.0, 1.0, 99.0, 0);
        spread
            .into_iter()
            .map(|h| if rng.gen_bool(0.45) { "40".to_string() } else { h })
            .collect()
    };
    let sex = categorical_cells(rng, rows, &[("Male", 0.67), ("Female", 0.33)]);
    let income = categorical_cells(rng, rows, &[("<=50K", 0.76), (">50K", 0.24)]);
    Table::new(vec![
        Column::new("age", age),
        Column::new("workclass", workclass),
        Column::new("fnlwgt", fnlwgt),
        Column::new("education_num", education_num),
        Column::new("marital_status", marital),
        Column::new("hours_per_week", hours),
        Column::new("sex", sex),
        Column::new("income", income),
    ])
    .expect("columns have equal length")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Corruption {
    InsertNumeric,
    InsertCategorical,
    Delete,
    Recode,
    Linear,
}

impl Corruption {
    pub const STRUCTURAL: [Corruption; 3] = [
        Corruption::InsertNumeric,
        Corruption::InsertCategorical,
        Corruption::Delete,
    ];
    pub const ALL: [Corruption; 5] = [
        Corruption::InsertNumeric,
        Corruption::InsertCategorical,
        Corruption::Delete,
        Corruption::Recode,
        Corruption::Linear,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Corruption::InsertNumeric => "insert-numeric",
            Corruption::InsertCategorical => "insert-categorical",
            Corruption::Delete => "delete",
            Corruption::Recode => "recode",
            Corruption::Linear => "linear",
        }
    }
}

impl fmt::Display for Corruption {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// What a perfect reconciliation of a corrupted case must do.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    /// (input column, reference column), ascending by input column.
    pub pairs: Vec<(usize, usize)>,
    /// Input columns with no reference counterpart.
    pub deleted: Vec<usize>,
    /// Reference columns with no input counterpart.
    pub inserted: Vec<usize>,
    /// Reference column and the corrupted-to-clean value mapping.
    pub recoded: Vec<(usize, Vec<(String, String)>)>,
    /// Reference column and the applied `x -> a*x + b`.
    pub linear: Vec<(usize, f64, f64)>,
}

impl GroundTruth {
    pub fn target(&self, input: usize) -> Option<usize> {
        self.pairs.iter().find(|p| p.0 == input).map(|p| p.1)
    }
}

#[derive(Debug, Clone)]
pub struct Case {
    pub seed: u64,
    pub corruptions: Vec<Corruption>,
    /// The corrupted half.
    pub input: Table,
    /// The clean half.
    pub reference: Table,
    pub truth: GroundTruth,
}

struct Working {
    column: Column,
    origin: Option<usize>,
    touched: bool,
}

fn try_corrupt(
    c: Corruption,
    cols: &mut Vec<Working>,
    truth: &mut GroundTruth,
    rng: &mut ChaCha8Rng,
    n: usize,
    serial: usize,
) -> bool {
    let pick = |cols: &[Working], rng: &mut ChaCha8Rng, kind: Option<Kind>| -> Option<usize> {
        let ok: Vec<usize> = (0..cols.len())
            .filter(|&k| {
                let w = &cols[k];
                w.origin.is_some() && !w.touched && kind.is_none_or(|kd| w.column.kind == kd)
            })
            .collect();
        ok.choose(rng).copied()
    };
    match c {
        Corruption::InsertNumeric => {
            let cells = (0..n).map(|_| format!("{:.4}", rng.gen::<f64>())).collect();
            cols.push(Working {
                column: Column::new(format!("extra_{serial}"), cells),
                origin: None,
                touched: true,
            });
        }
        Corruption::InsertCategorical => {
            let cells = (0..n)
                .map(|_| if rng.gen_bool(0.5) { "level_a" } else { "level_b" }.to_string())
                .collect();
            cols.push(Working {
                column: Column::new(format!("extra_{serial}"), cells),
                origin: None,
                touched: true,
            });
        }
        Corruption::Delete => {
            if cols.iter().filter(|w| w.origin.is_some()).count() <= 2 {
                return false;
            }
            let Some(k) = pick(cols, rng, None) else {
                return false;
            };
            cols.remove(k);
        }
        Corruption::Recode => {
            let Some(k) = pick(cols, rng, Some(Kind::Categorical)) else {
                return false;
            };
            let w = &mut cols[k];
            let mut levels: Vec<String> = w.column.frequencies().into_keys().collect();
            if levels.len() < 2 {
                return false;
            }
            let clean = levels.clone();
            // Rotate after shuffling so that no level keeps its own label.
            levels.shuffle(rng);
            let mut order = levels.clone();
            order.rotate_left(1);
            let forward: BTreeMap<String, String> = levels.iter().cloned().zip(order).collect();
            w.column.cells = w.column.cells.iter().map(|v| forward[v.trim()].clone()).collect();
            let mut inverse: Vec<(String, String)> = forward.into_iter().map(|(a, b)| (b, a)).collect();
            inverse.sort();
            debug_assert_eq!(inverse.len(), clean.len());
            truth.recoded.push((w.origin.unwrap(), inverse));
            w.touched = true;
        }
        Corruption::Linear => {
            let Some(k) = pick(cols, rng, Some(Kind::Numeric)) else {
                return false;
            };
            let w = &mut cols[k];
            let values = w.column.numeric_view().unwrap_or_default();
            let mean = values.iter().sum::<f64>() / values.len().max(1) as f64;
            let mut a = 0.0;
            while a == 0.0 {
                a = rng.gen_range(-0.5..0.5);
            }
            let b = if mean == 0.0 {
                0.0
            } else {
                rng.gen_range(-2.0 * mean.abs()..2.0 * mean.abs())
            };
            w.column.cells = w
                .column
                .cells
                .iter()
                .map(|v| match crate::table::parse_number(v) {
                    Some(x) => format!("{}", a * x + b),
                    None => v.clone(),
                })
                .collect();
            truth.linear.push((w.origin.unwrap(), a, b));
            w.touched = true;
        }
    }
    true
}

/// Splits `table` into a clean half and a corrupted half. The corrupted
/// half gets two corruptions drawn from `pool` on distinct columns, then
/// has its columns shuffled.
pub fn corrupt(table: &Table, seed: u64, pool: &[Corruption]) -> Result<Case> {
    if table.n_cols() < 4 || table.n_rows() < 40 {
        return Err(Error::InvalidData(
            "corruption needs at least 4 columns and 40 rows".into(),
        ));
    }
    if pool.is_empty() {
        return Err(Error::InvalidData("empty corruption pool".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows: Vec<usize> = (0..table.n_rows()).collect();
    rows.shuffle(&mut rng);
    let half = table.n_rows() / 2;
    let take = |idx: &[usize]| -> Vec<Column> {
        table
            .columns()
            .iter()
            .map(|c| Column::new(c.name.clone(), idx.iter().map(|&r| c.cells[r].clone()).collect()))
            .collect()
    };
    let reference = Table::new(take(&rows[..half]))?;
    let corrupted = take(&rows[half..]);
    let n = corrupted[0].cells.len();

    let mut cols: Vec<Working> = corrupted
        .into_iter()
        .enumerate()
        .map(|(j, column)| Working {
            column,
            origin: Some(j),
            touched: false,
        })
        .collect();
    let mut truth = GroundTruth {
        pairs: Vec::new(),
        deleted: Vec::new(),
        inserted: Vec::new(),
        recoded: Vec::new(),
        linear: Vec::new(),
    };
    let mut applied = Vec::new();
    let mut attempts = 0;
    while applied.len() < 2 {
        attempts += 1;
        if attempts > 100 {
            return Err(Error::InvalidData("no applicable corruption in pool".into()));
        }
        let c = *pool.choose(&mut rng).unwrap();
        if try_corrupt(c, &mut cols, &mut truth, &mut rng, n, applied.len() + 1) {
            applied.push(c);
        }
    }
    cols.shuffle(&mut rng);

    for (i, w) in cols.iter().enumerate() {
        match w.origin {
            Some(j) => truth.pairs.push((i, j)),
            None => truth.deleted.push(i),
        }
    }
    truth.inserted = (0..table.n_cols())
        .filter(|j| !cols.iter().any(|w| w.origin == Some(*j)))
        .collect();
    truth.recoded.sort_by_key(|r| r.0);
    truth.linear.sort_by_key(|a| a.0);

    Ok(Case {
        seed,
        corruptions: applied,
        input: Table::new(cols.into_iter().map(|w| w.column).collect())?,
        reference,
        truth,
    })
}

/// Outcome of one simulated session.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trace {
    pub assistant: String,
    pub case: usize,
    /// `None` when the cap was reached or no fitting choice was offered.
    pub interactions: Option<usize>,
    pub constraints: Vec<String>,
}

impl Trace {
    fn new(assistant: &str, case: usize) -> Self {
        Trace {
            assistant: assistant.to_string(),
            case,
            interactions: None,
            constraints: Vec::new(),
        }
    }
}

/// Simulated analyst for datadiff: while the column matching differs from
/// the ground truth, contradict one wrong input column, preferring
/// `nomatch` over `match`. Surplus input columns (those the truth deletes)
/// are handled before displaced ones, otherwise each `nomatch` only moves
/// the surplus column along.
pub fn drive_datadiff(dd: &Datadiff, truth: &GroundTruth, case: usize, cap: usize) -> Trace {
    let mut trace = Trace::new("datadiff", case);
    let mut h = InteractionSet::new();
    for step in 0..=cap {
        let Ok(e) = dd.best(&h) else {
            return trace;
        };
        let mut got: Vec<(usize, usize)> = e.permutation().unwrap_or(&[]).to_vec();
        got.sort_unstable();
        if got == truth.pairs {
            trace.interactions = Some(step);
            return trace;
        }
        if step == cap {
            return trace;
        }
        let have = |i: usize| got.iter().find(|p| p.0 == i).map(|p| p.1);
        let mut wrong: Vec<usize> = (0..dd.input().n_cols())
            .filter(|&i| have(i) != truth.target(i))
            .collect();
        wrong.sort_by_key(|&i| (truth.target(i).is_some(), i));
        let offered = dd.choices(&h, &e);
        let pick = wrong.into_iter().find_map(|i| {
            let nomatch = have(i).map(|j| DiffConstraint::NoMatch(i, j));
            let pin = truth.target(i).map(|j| DiffConstraint::Match(i, j));
            [nomatch, pin]
                .into_iter()
                .flatten()
                .find(|w| offered.iter().any(|o| o.constraint == *w))
        });
        let Some(c) = pick else {
            return trace;
        };
        trace.constraints.push(c.to_string());
        h.insert(c);
    }
    trace
}

/// Writes rows in `d`, quoting or escaping any cell that needs it.
pub fn write_dialect(rows: &[Vec<String>], d: &Dialect) -> String {
    let delim = d.delimiter.expect("fixtures always have a delimiter");
    let mut out = String::new();
    for row in rows {
        let cells: Vec<String> = row
            .iter()
            .map(|cell| {
                let special = cell.contains(delim) || d.quote.is_some_and(|q| cell.contains(q));
                match (d.quote, d.escape) {
                    (Some(q), esc) if special => {
                        let mut s = String::from(q);
                        for ch in cell.chars() {
                            if ch == q || Some(ch) == esc {
                                s.push(esc.unwrap_or(q));
                            }
                            s.push(ch);
                        }
                        s.push(q);
                        s
                    }
                    (None, Some(e)) => {
                        let mut s = String::new();
                        for ch in cell.chars() {
                            if ch == delim || ch == e {
                                s.push(e);
                            }
                            s.push(ch);
                        }
                        s
                    }
                    _ => cell.clone(),
                }
            })
            .collect();
        out.push_str(&cells.join(&delim.to_string()));
        out.push('\n');
    }
    out
}

/// A small random file written in a random dialect that is always among
/// the detector's candidates for that file.
pub fn dialect_fixture(rng: &mut ChaCha8Rng) -> (String, Dialect) {
    const WORDS: [&str; 12] = [
        "alpha", "bravo", "charlie", "delta", "echo", "fox", "golf", "hotel", "india", "kilo", "lima", "mike",
    ];
    loop {
        let delimiter = *[',', ';', '\t', '|'].choose(rng).unwrap();
        let quote = *[Some('"'), Some('\''), None].choose(rng).unwrap();
        let escape = *[None, None, Some('\\')].choose(rng).unwrap();
        let d = Dialect::new(Some(delimiter), quote, escape);
        let width = rng.gen_range(3..=6);
        let rows = rng.gen_range(8..=25);
        let mut table: Vec<Vec<String>> = vec![(1..=width).map(|k| format!("col{k}")).collect()];
        for _ in 0..rows {
            table.push(
                (0..width)
                    .map(|k| match k % 3 {
                        0 => rng.gen_range(0..10_000).to_string(),
                        1 => WORDS.choose(rng).unwrap().to_string(),
                        _ => format!("{:.2}", rng.gen_range(-100.0..100.0)),
                    })
                    .collect(),
            );
        }
        // Make the quote and escape characters visible in the text.
        let r = rng.gen_range(1..table.len());
        let c = 1 % width;
        match (quote, escape) {
            (Some(q), Some(_)) => table[r][c] = format!("say {q}hi{q}"),
            (Some(_), None) => table[r][c] = format!("one{delimiter} two"),
            (None, Some(_)) => table[r][c] = format!("left{delimiter}right"),
            (None, None) => {}
        }
        let text = write_dialect(&table, &d);
        if base_candidates(&text).contains(&d) {
            return (text, d);
        }
    }
}

/// Simulated analyst for dialect detection: fix the first slot where the
/// recommendation differs from the target, or rule the wrong value out.
pub fn drive_dialect(a: &DialectAssistant, target: &Dialect, case: usize, cap: usize) -> Trace {
    let mut trace = Trace::new("csv-dialect", case);
    let mut h = InteractionSet::new();
    for step in 0..=cap {
        let Ok(e) = a.best(&h) else {
            return trace;
        };
        if e == *target {
            trace.interactions = Some(step);
            return trace;
        }
        if step == cap {
            return trace;
        }
        let slot = [Slot::Delimiter, Slot::Quote, Slot::Escape]
            .into_iter()
            .find(|s| e.get(*s) != target.get(*s))
            .expect("dialects differ in some slot");
        let offered = a.choices(&h, &e);
        let Some(c) = [
            DialectConstraint::Fix(slot, target.get(slot)),
            DialectConstraint::Not(slot, e.get(slot)),
        ]
        .into_iter()
        .find(|w| offered.iter().any(|o| o.constraint == *w)) else {
            return trace;
        };
        trace.constraints.push(c.to_string());
        h.insert(c);
    }
    trace
}

/// A column of a random primitive type with a few missing markers.
pub fn ptype_fixture(rng: &mut ChaCha8Rng) -> (Vec<String>, PrimitiveType) {
    let ty = *[
        PrimitiveType::Integer,
        PrimitiveType::Float,
        PrimitiveType::Boolean,
        PrimitiveType::Date,
        PrimitiveType::String,
    ]
    .choose(rng)
    .unwrap();
    let n = rng.gen_range(20..60);
    let mut cells: Vec<String> = (0..n)
        .map(|_| match ty {
            PrimitiveType::Integer => rng.gen_range(-500..5000).to_string(),
            PrimitiveType::Float => format!("{:.3}", rng.gen_range(-50.0..50.0)),
            PrimitiveType::Boolean => ["true", "false", "yes", "no"].choose(rng).unwrap().to_string(),
            PrimitiveType::Date => format!(
                "{:04}-{:02}-{:02}",
                rng.gen_range(1990..2030),
                rng.gen_range(1..=12),
                rng.gen_range(1..=28)
            ),
            PrimitiveType::String => ["red fox", "blue whale", "green tea", "grey owl", "pink salmon"]
                .choose(rng)
                .unwrap()
                .to_string(),
        })
        .collect();
    for _ in 0..rng.gen_range(0..3) {
        let k = rng.gen_range(0..cells.len());
        cells[k] = ["NA", "?", "-"].choose(rng).unwrap().to_string();
    }
    (cells, ty)
}

/// Simulated analyst for type inference: exclude the recommended type
/// until it equals the true one.
pub fn drive_ptype(a: &TypeAssistant, truth: PrimitiveType, case: usize, cap: usize) -> Trace {
    let mut trace = Trace::new("ptype", case);
    let mut h = InteractionSet::new();
    for step in 0..=cap {
        let Ok(e) = a.best(&h) else {
            return trace;
        };
        if e.ty == truth {
            trace.interactions = Some(step);
            return trace;
        }
        if step == cap {
            return trace;
        }
        let c = TypeConstraint::NotType(e.ty);
        if !a.choices(&h, &e).iter().any(|o| o.constraint == c) {
            return trace;
        }
        trace.constraints.push(c.to_string());
        h.insert(c);
    }
    trace
}

/// Which assistant an evaluation exercises.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    /// Reorder, insert and delete corruptions only.
    DatadiffStructural,
    /// Every corruption kind.
    Datadiff,
    Dialect,
    Ptype,
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "datadiff" => Ok(Suite::Datadiff),
            "datadiff-structural" => Ok(Suite::DatadiffStructural),
            "csv-dialect" => Ok(Suite::Dialect),
            "ptype" => Ok(Suite::Ptype),
            other => Err(Error::UnknownAssistant(other.to_string())),
        }
    }
}

/// Builds the base table for a datadiff case; cases alternate between the
/// two generators.
pub fn base_table(case: usize, rng: &mut ChaCha8Rng) -> Table {
    if case.is_multiple_of(2) {
        iris_like(150, rng)
    } else {
        adult_like(300, rng)
    }
}

/// Runs `cases` seeded cases in parallel.
pub fn run(suite: Suite, cases: usize, seed: u64, cap: usize) -> Result<Vec<Trace>> {
    (0..cases)
        .into_par_iter()
        .map(|k| {
            let mut rng = rng_for(seed, k);
            match suite {
                Suite::Datadiff | Suite::DatadiffStructural => {
                    let pool: &[Corruption] = if suite == Suite::Datadiff {
                        &Corruption::ALL
                    } else {
                        &Corruption::STRUCTURAL
                    };
                    let base = base_table(k, &mut rng);
                    let case = corrupt(&base, rng.gen(), pool)?;
                    let dd = Datadiff::new(case.input, case.reference, datadiff::Params::default())?;
                    Ok(drive_datadiff(&dd, &case.truth, k, cap))
                }
                Suite::Dialect => {
                    let (text, target) = dialect_fixture(&mut rng);
                    Ok(drive_dialect(&DialectAssistant::new(text)?, &target, k, cap))
                }
                Suite::Ptype => {
                    let (cells, truth) = ptype_fixture(&mut rng);
                    Ok(drive_ptype(&TypeAssistant::from_cells(cells)?, truth, k, cap))
                }
            }
        })
        .collect()
}

/// Fractions of cases by interactions needed: 0, 1, 2, 3 and 4 or more,
/// plus cases never solved.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub cases: usize,
    pub counts: [usize; 5],
    pub unsolved: usize,
    /// Mean interactions over solved cases that needed at least one.
    pub average: Option<f64>,
}

pub const BUCKETS: [&str; 5] = ["0", "1", "2", "3", "4+"];

impl Report {
    pub fn new(traces: &[Trace]) -> Self {
        let mut counts = [0usize; 5];
        let mut unsolved = 0;
        let mut needed = Vec::new();
        for t in traces {
            match t.interactions {
                Some(n) => {
                    counts[n.min(4)] += 1;
                    if n > 0 {
                        needed.push(n as f64);
                    }
                }
                None => unsolved += 1,
            }
        }
        let average = (!needed.is_empty()).then(|| needed.iter().sum::<f64>() / needed.len() as f64);
        Report {
            cases: traces.len(),
            counts,
            unsolved,
            average,
        }
    }

    pub fn fraction(&self, bucket: usize) -> f64 {
        self.counts[bucket] as f64 / self.cases.max(1) as f64
    }

    pub fn unsolved_fraction(&self) -> f64 {
        self.unsolved as f64 / self.cases.max(1) as f64
    }

    /// Fraction of cases solved within `n` interactions.
    pub fn within(&self, n: usize, traces: &[Trace]) -> f64 {
        traces.iter().filter(|t| t.interactions.is_some_and(|k| k <= n)).count() as f64 / self.cases.max(1) as f64
    }

    pub fn average_text(&self) -> String {
        match self.average {
            Some(a) => format!("{a:.2}"),
            None => "-".to_string(),
        }
    }

    pub fn to_csv(&self, assistant: &str) -> String {
        let mut out = String::from("assistant,cases,0,1,2,3,4+,unsolved,average\n");
        out.push_str(&format!("{assistant},{}", self.cases));
        for b in 0..5 {
            out.push_str(&format!(",{:.4}", self.fraction(b)));
        }
        out.push_str(&format!(",{:.4},{}\n", self.unsolved_fraction(), self.average_text()));
        out
    }
}

impl fmt::Display for Report {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "cases      {}", self.cases)?;
        for (b, name) in BUCKETS.iter().enumerate() {
            writeln!(f, "{name:<10} {:.2}", self.fraction(b))?;
        }
        writeln!(f, "unsolved   {:.2}", self.unsolved_fraction())?;
        write!(f, "average    {}", self.average_text())
    }
}
