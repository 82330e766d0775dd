//! Builds assistants by id from bound input files.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use crate::assistant::{Descriptor, DynAssistant};
use crate::datadiff::{self, Datadiff};
use crate::dialect::{Dialect, DialectAssistant, DEFAULT_MAX_LINES};
use crate::error::{Error, Result};
use crate::outlier::{AggregateAssistant, OutlierAssistant};
use crate::semantic::{Gazetteer, SemanticAssistant, SemanticParams};
use crate::table::{read_csv, read_text, Kind, Table};
use crate::typeinfer::{TypeAssistant, Weights};

/// Tunables shared by every front end.
#[derive(Debug, Clone, PartialEq)]
pub struct Options {
    pub seed: u64,
    pub preview_rows: usize,
    /// Target column by name or 1-based index.
    pub column: Option<String>,
    /// Dialect for tabular inputs; by default `.tsv`/`.tab` files are read
    /// as tab separated and everything else as RFC 4180.
    pub dialect: Option<Dialect>,
    pub max_lines: usize,
    pub datadiff: datadiff::Params,
    pub weights: Weights,
    pub m: f64,
    pub epsilon: f64,
    pub n_samples: usize,
    pub sample_size: usize,
}

impl Default for Options {
    fn default() -> Self {
        Options {
            seed: 0,
            preview_rows: 10,
            column: None,
            dialect: None,
            max_lines: DEFAULT_MAX_LINES,
            datadiff: datadiff::Params::default(),
            weights: Weights::default(),
            m: 3.0,
            epsilon: 0.3,
            n_samples: 8,
            sample_size: 4,
        }
    }
}

/// Ordered slot bindings, e.g. `reference=/tmp/r.csv,input=/tmp/i.csv`.
pub type Bindings = Vec<(String, PathBuf)>;

fn all() -> [&'static Descriptor; 6] {
    [
        &crate::datadiff::DESCRIPTOR,
        &crate::dialect::DESCRIPTOR,
        &crate::typeinfer::DESCRIPTOR,
        &crate::semantic::DESCRIPTOR,
        &crate::outlier::VALUE_DESCRIPTOR,
        &crate::outlier::AGGREGATE_DESCRIPTOR,
    ]
}

pub fn descriptor(id: &str) -> Option<&'static Descriptor> {
    all().into_iter().find(|d| d.id == id)
}

pub fn descriptors() -> Vec<&'static Descriptor> {
    all().to_vec()
}

fn slot<'a>(bindings: &'a Bindings, name: &str) -> Result<&'a Path> {
    bindings
        .iter()
        .find(|(k, _)| k == name)
        .map(|(_, p)| p.as_path())
        .ok_or_else(|| Error::MissingBinding(name.to_string()))
}

pub fn load_table(path: &Path, opts: &Options) -> Result<Table> {
    let dialect = opts
        .dialect
        .unwrap_or_else(|| match path.extension().and_then(|e| e.to_str()) {
            Some("tsv" | "tab") => Dialect::new(Some('\t'), Some('"'), None),
            _ => Dialect::rfc4180(),
        });
    read_csv(path, &dialect)
}

/// Resolves a column given by name or 1-based index.
pub fn resolve_column(table: &Table, spec: &str) -> Result<usize> {
    if let Some(k) = table.column_index(spec) {
        return Ok(k);
    }
    match spec.parse::<usize>() {
        Ok(k) if (1..=table.n_cols()).contains(&k) => Ok(k - 1),
        _ => Err(Error::InvalidData(format!("no column `{spec}`"))),
    }
}

fn target_column(table: &Table, opts: &Options, prefer: Option<Kind>) -> Result<usize> {
    match &opts.column {
        Some(spec) => resolve_column(table, spec),
        None => Ok(prefer
            .and_then(|k| table.columns().iter().position(|c| c.kind == k))
            .unwrap_or(0)),
    }
}

pub fn build(id: &str, bindings: &Bindings, opts: &Options) -> Result<Arc<dyn DynAssistant>> {
    let d = descriptor(id).ok_or_else(|| Error::UnknownAssistant(id.to_string()))?;
    for s in d.input_slots {
        slot(bindings, s)?;
    }
    let input = slot(bindings, "input")?;
    Ok(match id {
        "datadiff" => {
            let reference = load_table(slot(bindings, "reference")?, opts)?;
            let mut params = opts.datadiff.clone();
            params.seed = opts.seed;
            Arc::new(Datadiff::new(load_table(input, opts)?, reference, params)?)
        }
        "csv-dialect" => Arc::new(DialectAssistant::with_max_lines(read_text(input)?, opts.max_lines)?),
        "ptype" => {
            let table = load_table(input, opts)?;
            let col = target_column(&table, opts, None)?;
            Arc::new(TypeAssistant::new(table, col, opts.weights)?)
        }
        "semantic-type" => {
            let table = load_table(input, opts)?;
            let col = target_column(&table, opts, None)?;
            let gazetteer = Gazetteer::load(slot(bindings, "gazetteer")?)?;
            let params = SemanticParams {
                n_samples: opts.n_samples,
                sample_size: opts.sample_size,
                epsilon: opts.epsilon,
                seed: opts.seed,
            };
            let catalog = gazetteer.catalog().to_vec();
            Arc::new(SemanticAssistant::new(table, col, &catalog, &gazetteer, &params)?)
        }
        "outlier" => {
            let table = load_table(input, opts)?;
            let col = match &opts.column {
                Some(spec) => Some(resolve_column(&table, spec)?),
                None => None,
            };
            Arc::new(OutlierAssistant::new(table, col, opts.m)?)
        }
        "outlier-aggregate" => Arc::new(AggregateAssistant::new(load_table(input, opts)?, opts.m)),
        _ => return Err(Error::UnknownAssistant(id.to_string())),
    })
}
