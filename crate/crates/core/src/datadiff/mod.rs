//! Reconciles an input table with a reference table through a list of
//! patches chosen by minimum-cost column assignment.

pub mod hungarian;
pub mod patch;
pub mod stats;

use std::collections::BTreeSet;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::assistant::{Assistant, Choice, Descriptor, InteractionSet, Output};
use crate::error::{Error, Result};
use crate::table::{Column, Kind, Table};

pub use hungarian::Assignment;
pub use patch::{apply_patches, DiffConstraint, Patch, PatchSet};
pub use stats::{ks_statistic, tv_statistic};

#[derive(Debug, Clone, PartialEq)]
pub struct Params {
    pub lambda_linear: f64,
    pub lambda_recode: f64,
    pub lambda_insert: f64,
    pub lambda_delete: f64,
    /// Maximum number of `match` options offered per recommendation.
    pub match_choice_cap: usize,
    /// Score pairs on a uniform row sample of this size when set.
    pub sample_rows: Option<usize>,
    pub seed: u64,
}

impl Default for Params {
    fn default() -> Self {
        Params {
            lambda_linear: 0.1,
            lambda_recode: 0.1,
            lambda_insert: 0.6,
            lambda_delete: 0.6,
            match_choice_cap: 25,
            sample_rows: None,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Transform {
    Recode(Vec<(String, String)>),
    Linear { a: f64, b: f64 },
}

/// Cost of matching one input column to one reference column, without
/// and with the best transformation patch.
#[derive(Debug, Clone, PartialEq)]
pub struct PairCost {
    pub raw: f64,
    pub transformed: Option<(f64, Transform)>,
}

impl PairCost {
    /// Effective cost and the transform achieving it. Ties keep the
    /// untransformed column.
    pub fn resolve(&self, allow_transform: bool) -> (f64, Option<&Transform>) {
        match &self.transformed {
            Some((c, t)) if allow_transform && *c < self.raw => (*c, Some(t)),
            _ => (self.raw, None),
        }
    }
}

/// Scores a column pair: KS for numbers (optionally after a moment-matched
/// linear map), TV for categories (optionally after a rank recode) and
/// for free text, `+inf` across numeric and non-numeric columns.
pub fn infer_pairwise_patch(input: &Column, reference: &Column, params: &Params) -> PairCost {
    match (input.kind, reference.kind) {
        (Kind::Numeric, Kind::Numeric) => {
            let xi = input.numeric_view().unwrap_or_default();
            let xr = reference.numeric_view().unwrap_or_default();
            let Ok(raw) = ks_statistic(&xi, &xr) else {
                return PairCost {
                    raw: f64::INFINITY,
                    transformed: None,
                };
            };
            let mut transformed: Option<(f64, Transform)> = None;
            for (a, b) in stats::moment_fits(&xi, &xr) {
                let mapped: Vec<f64> = xi.iter().map(|x| a * x + b).collect();
                let cost = ks_statistic(&mapped, &xr).unwrap_or(f64::INFINITY) + params.lambda_linear;
                if transformed.as_ref().is_none_or(|(c, _)| cost < *c) {
                    transformed = Some((cost, Transform::Linear { a, b }));
                }
            }
            PairCost { raw, transformed }
        }
        (Kind::Numeric, _) | (_, Kind::Numeric) => PairCost {
            raw: f64::INFINITY,
            transformed: None,
        },
        (ki, kr) => {
            let fi = input.frequencies();
            let fr = reference.frequencies();
            let raw = tv_statistic(&fi, &fr);
            let transformed = (ki == Kind::Categorical && kr == Kind::Categorical)
                .then(|| stats::rank_recode(&fi, &fr))
                .filter(|m| !m.is_empty())
                .map(|m| {
                    let cost = tv_statistic(&stats::recode_frequencies(&fi, &m), &fr) + params.lambda_recode;
                    (cost, Transform::Recode(m))
                });
            PairCost { raw, transformed }
        }
    }
}

/// Padded square cost matrix: rows are input columns then insert slots,
/// columns are reference columns then delete slots.
#[derive(Debug, Clone, PartialEq)]
pub struct CostMatrix {
    pub n_input: usize,
    pub n_reference: usize,
    pub cells: Vec<Vec<f64>>,
}

pub static DESCRIPTOR: Descriptor = Descriptor {
    id: "datadiff",
    display_name: "datadiff: reconcile a table with a reference",
    input_slots: &["input", "reference"],
    constraint_grammar: "datadiff",
};

pub struct Datadiff {
    input: Table,
    reference: Table,
    params: Params,
    pairs: Vec<Vec<PairCost>>,
}

fn sampled(table: &Table, n: Option<usize>, seed: u64) -> Table {
    match n {
        Some(n) if n < table.n_rows() => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let keep: BTreeSet<usize> = sample(&mut rng, table.n_rows(), n).into_iter().collect();
            table.filter_rows(|i| keep.contains(&i))
        }
        _ => table.clone(),
    }
}

impl Datadiff {
    pub fn new(input: Table, reference: Table, params: Params) -> Result<Self> {
        if input.n_cols() == 0 || reference.n_cols() == 0 {
            return Err(Error::EmptyInput(
                "datadiff needs at least one column in each table".into(),
            ));
        }
        let si = sampled(&input, params.sample_rows, params.seed);
        let sr = sampled(&reference, params.sample_rows, params.seed.wrapping_add(1));
        let pairs = si
            .columns()
            .par_iter()
            .map(|ci| {
                sr.columns()
                    .iter()
                    .map(|cr| infer_pairwise_patch(ci, cr, &params))
                    .collect()
            })
            .collect();
        Ok(Datadiff {
            input,
            reference,
            params,
            pairs,
        })
    }

    pub fn input(&self) -> &Table {
        &self.input
    }

    pub fn reference(&self) -> &Table {
        &self.reference
    }

    pub fn params(&self) -> &Params {
        &self.params
    }

    pub fn pair(&self, i: usize, j: usize) -> &PairCost {
        &self.pairs[i][j]
    }

    fn check_consistency(h: &InteractionSet<DiffConstraint>) -> Result<()> {
        let matches: Vec<(usize, usize)> = h
            .iter()
            .filter_map(|c| match c {
                DiffConstraint::Match(i, j) => Some((*i, *j)),
                _ => None,
            })
            .collect();
        for (a, &(i, j)) in matches.iter().enumerate() {
            if h.contains(&DiffConstraint::NoMatch(i, j)) {
                return Err(Error::ConflictingConstraints(format!(
                    "match({},{}) and nomatch({},{})",
                    i + 1,
                    j + 1,
                    i + 1,
                    j + 1
                )));
            }
            for &(k, l) in &matches[a + 1..] {
                if k == i || l == j {
                    return Err(Error::ConflictingConstraints(format!(
                        "match({},{}) and match({},{}) share a column",
                        i + 1,
                        j + 1,
                        k + 1,
                        l + 1
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn build_cost_matrix(&self, h: &InteractionSet<DiffConstraint>) -> Result<CostMatrix> {
        Self::check_consistency(h)?;
        let (ni, nr) = (self.input.n_cols(), self.reference.n_cols());
        let n = ni + nr;
        let mut cells = vec![vec![0.0; n]; n];
        for (i, row) in cells.iter_mut().enumerate() {
            for (j, cell) in row.iter_mut().enumerate() {
                *cell = match (i < ni, j < nr) {
                    (true, true) => {
                        let allow = !h.contains(&DiffConstraint::NoTransform(j));
                        self.pairs[i][j].resolve(allow).0
                    }
                    (true, false) => self.params.lambda_delete,
                    (false, true) => self.params.lambda_insert,
                    (false, false) => 0.0,
                };
            }
        }
        for c in h {
            match *c {
                DiffConstraint::NoMatch(i, j) => cells[i][j] = f64::INFINITY,
                DiffConstraint::Match(i, j) => {
                    cells[i].fill(f64::INFINITY);
                    for row in cells.iter_mut() {
                        row[j] = f64::INFINITY;
                    }
                    cells[i][j] = 0.0;
                }
                DiffConstraint::NoTransform(_) => {}
            }
        }
        Ok(CostMatrix {
            n_input: ni,
            n_reference: nr,
            cells,
        })
    }

    pub fn assignment(&self, h: &InteractionSet<DiffConstraint>) -> Result<(CostMatrix, Assignment)> {
        let m = self.build_cost_matrix(h)?;
        let a = hungarian::solve(&m.cells)
            .ok_or_else(|| Error::ConflictingConstraints("no column assignment satisfies the constraints".into()))?;
        Ok((m, a))
    }

    /// Effective cost of a pair under `h`, ignoring match/nomatch overrides.
    fn pair_cost(&self, h: &InteractionSet<DiffConstraint>, i: usize, j: usize) -> f64 {
        self.pairs[i][j].resolve(!h.contains(&DiffConstraint::NoTransform(j))).0
    }

    fn input_name(&self, i: usize) -> &str {
        &self.input.columns()[i].name
    }

    fn reference_name(&self, j: usize) -> &str {
        &self.reference.columns()[j].name
    }
}

impl Assistant for Datadiff {
    type Constraint = DiffConstraint;
    type Expression = PatchSet;

    fn descriptor(&self) -> &Descriptor {
        &DESCRIPTOR
    }

    fn parse_constraint(&self, text: &str) -> Result<DiffConstraint> {
        patch::parse_constraint(text, &self.input.header(), &self.reference.header())
    }

    fn format_constraint(&self, c: &DiffConstraint) -> String {
        c.to_string()
    }

    fn best(&self, h: &InteractionSet<DiffConstraint>) -> Result<PatchSet> {
        let (m, a) = self.assignment(h)?;
        let (ni, nr) = (m.n_input, m.n_reference);
        let mut patches = Vec::new();
        let mut pairs = Vec::new();
        for (i, &j) in a.cols.iter().enumerate().take(ni) {
            if j < nr {
                pairs.push((i, j));
            } else {
                patches.push(Patch::Delete(i));
            }
        }
        let mut transforms: Vec<Patch> = pairs
            .iter()
            .filter_map(|&(i, j)| {
                let allow = !h.contains(&DiffConstraint::NoTransform(j));
                match self.pairs[i][j].resolve(allow).1? {
                    Transform::Recode(mapping) => Some(Patch::Recode {
                        col: j,
                        mapping: mapping.clone(),
                    }),
                    Transform::Linear { a, b } => Some(Patch::Linear { col: j, a: *a, b: *b }),
                }
            })
            .collect();
        transforms.sort_by_key(|p| match p {
            Patch::Recode { col, .. } | Patch::Linear { col, .. } => *col,
            _ => usize::MAX,
        });
        let mut inserts: Vec<usize> = a.cols[ni..].iter().copied().filter(|&j| j < nr).collect();
        inserts.sort_unstable();
        patches.push(Patch::Permute(pairs));
        patches.extend(transforms);
        patches.extend(inserts.into_iter().map(Patch::Insert));
        let ps = PatchSet::new(patches);
        Ok(ps)
    }

    fn valid(&self, e: &PatchSet, h: &InteractionSet<DiffConstraint>) -> bool {
        patch::valid(e, h.as_slice())
    }

    fn choices(&self, h: &InteractionSet<DiffConstraint>, e: &PatchSet) -> Vec<Choice<DiffConstraint>> {
        let pairs = e.permutation().unwrap_or(&[]);
        let transformed = e.transformed();
        let mut out = Vec::new();

        for &(_, j) in pairs {
            if transformed.contains(&j) {
                out.push(Choice::new(
                    format!("Don't transform '{}'", self.reference_name(j)),
                    DiffConstraint::NoTransform(j),
                ));
            }
        }

        let mut nomatch: Vec<(f64, usize, usize)> = pairs
            .iter()
            .filter(|&&(i, j)| !h.contains(&DiffConstraint::Match(i, j)))
            .map(|&(i, j)| (self.pair_cost(h, i, j), i, j))
            .collect();
        nomatch.sort_by(|a, b| b.0.total_cmp(&a.0).then((a.1, a.2).cmp(&(b.1, b.2))));
        for (_, i, j) in nomatch {
            out.push(Choice::new(
                format!("Don't match '{}' and '{}'", self.input_name(i), self.reference_name(j)),
                DiffConstraint::NoMatch(i, j),
            ));
        }

        let pinned_inputs: BTreeSet<usize> = h
            .iter()
            .filter_map(|c| match c {
                DiffConstraint::Match(i, _) => Some(*i),
                _ => None,
            })
            .collect();
        let pinned_refs: BTreeSet<usize> = h
            .iter()
            .filter_map(|c| match c {
                DiffConstraint::Match(_, j) => Some(*j),
                _ => None,
            })
            .collect();
        let mut matches: Vec<(f64, usize, usize)> = Vec::new();
        for i in 0..self.input.n_cols() {
            for j in 0..self.reference.n_cols() {
                if pairs.contains(&(i, j))
                    || pinned_inputs.contains(&i)
                    || pinned_refs.contains(&j)
                    || h.contains(&DiffConstraint::NoMatch(i, j))
                {
                    continue;
                }
                let cost = self.pair_cost(h, i, j);
                if cost.is_finite() {
                    matches.push((cost, i, j));
                }
            }
        }
        matches.sort_by(|a, b| a.0.total_cmp(&b.0).then((a.1, a.2).cmp(&(b.1, b.2))));
        for (_, i, j) in matches.into_iter().take(self.params.match_choice_cap) {
            out.push(Choice::new(
                format!("Match '{}' and '{}'", self.input_name(i), self.reference_name(j)),
                DiffConstraint::Match(i, j),
            ));
        }
        out
    }

    fn apply(&self, e: &PatchSet) -> Result<Output> {
        let (table, warnings) = apply_patches(e, &self.input, &self.reference.header())?;
        Ok(Output {
            table,
            badges: None,
            warnings,
        })
    }

    fn script(&self, e: &PatchSet) -> Vec<String> {
        e.script()
    }

    fn score(&self, _e: &PatchSet, h: &InteractionSet<DiffConstraint>) -> Option<f64> {
        self.assignment(h).ok().map(|(_, a)| -a.cost)
    }
}
