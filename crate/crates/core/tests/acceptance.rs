//! Acceptance checks. Prints one PASS/FAIL line per criterion and exits
//! non-zero when any criterion fails.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write as _;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::{Command as Process, Stdio};
use std::sync::Arc;
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use wrangle::datadiff::hungarian;
use wrangle::datadiff::patch::parse_constraint as parse_diff;
use wrangle::datadiff::{ks_statistic, tv_statistic, DiffConstraint};
use wrangle::dialect::{self, Dialect, DialectConstraint, Slot};
use wrangle::eval::{self, Report, Suite};
use wrangle::outlier::{self, AggregateFilter, RemoveValue};
use wrangle::protocol::{self, Command, Request, Server};
use wrangle::registry::{self, Bindings};
use wrangle::semantic::{ConstantScorer, ScoreMatrix, SemanticAssistant, SemanticConstraint, SemanticParams};
use wrangle::table::read_csv;
use wrangle::typeinfer::{
    machines, not_type_chain, PrimitiveType, TypeAssistant, TypeConstraint, TypePosterior, Weights,
};
use wrangle::{ChoiceView, Descriptor, DynAssistant, Error, InteractionSet, Options, Recommendation};

type Outcome = std::result::Result<String, String>;
type Check = (&'static str, fn() -> Outcome);

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        let holds: bool = $cond;
        if !holds {
            return Err(format!($($msg)+));
        }
    };
}

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn bind(pairs: &[(&str, &str)]) -> Bindings {
    pairs.iter().map(|(k, f)| (k.to_string(), fixture(f))).collect()
}

fn cells(v: &[&str]) -> Vec<String> {
    v.iter().map(|s| s.to_string()).collect()
}

fn timed(limit: Duration, start: Instant) -> std::result::Result<String, String> {
    let t = start.elapsed();
    if t > limit {
        Err(format!("took {t:.2?}, limit {limit:?}"))
    } else {
        Ok(format!("{t:.2?}"))
    }
}

fn c1_toy_merge() -> Outcome {
    let start = Instant::now();
    let a = registry::build(
        "datadiff",
        &bind(&[("input", "toy_input.csv"), ("reference", "toy_reference.csv")]),
        &Options::default(),
    )
    .map_err(|e| e.to_string())?;
    let h0 = a.best_script(&[]).map_err(|e| e.to_string())?;
    let want = cells(&["delete(3)", "permute((1,2),(2,1))", "recode(2,[Cardiff->London])"]);
    ensure!(h0 == want, "H0 script {h0:?}");
    let h1 = a.best_script(&cells(&["notransform(2)"])).map_err(|e| e.to_string())?;
    ensure!(h1 == want[..2], "notransform(2) script {h1:?}");
    Ok(format!("exact scripts, {}", timed(Duration::from_secs(1), start)?))
}

fn brute_force(cost: &[Vec<f64>]) -> Option<f64> {
    fn go(cost: &[Vec<f64>], row: usize, used: &mut Vec<bool>, acc: f64, best: &mut Option<f64>) {
        if row == cost.len() {
            if best.is_none_or(|b| acc < b) {
                *best = Some(acc);
            }
            return;
        }
        for j in 0..cost.len() {
            if !used[j] && cost[row][j].is_finite() {
                used[j] = true;
                go(cost, row + 1, used, acc + cost[row][j], best);
                used[j] = false;
            }
        }
    }
    let mut best = None;
    go(cost, 0, &mut vec![false; cost.len()], 0.0, &mut best);
    best
}

/// An `n_in` x `n_ref` block of dyadic costs (some forbidden) padded to a
/// square with constant insert and delete costs.
fn padded_matrix(n: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let n_in = rng.gen_range(1..=n);
    let n_ref = rng.gen_range(1..=n);
    let (ins, del) = (0.625, 0.5);
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| match (i < n_in, j < n_ref) {
                    (true, true) if rng.gen_bool(0.1) => f64::INFINITY,
                    (true, true) => rng.gen_range(0..=32) as f64 / 32.0,
                    (true, false) => del,
                    (false, true) => ins,
                    (false, false) => 0.0,
                })
                .collect()
        })
        .collect()
}

fn c2_assignment() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for k in 0..200 {
        let n = if k % 2 == 0 { 5 } else { 7 };
        let m = padded_matrix(n, &mut rng);
        let oracle = brute_force(&m);
        let got = hungarian::solve(&m);
        match (&got, oracle) {
            (None, None) => {}
            (Some(a), Some(o)) => {
                ensure!(a.cost == o, "matrix {k}: cost {} vs oracle {o}", a.cost);
                let mut cols = a.cols.clone();
                cols.sort_unstable();
                ensure!(cols == (0..n).collect::<Vec<_>>(), "matrix {k}: not a permutation");
                let sum: f64 = a.cols.iter().enumerate().map(|(i, &j)| m[i][j]).sum();
                ensure!(sum == a.cost, "matrix {k}: reported cost differs from its matching");
            }
            _ => return Err(format!("matrix {k}: feasibility differs ({got:?} vs {oracle:?})")),
        }
    }
    Ok(format!(
        "200 matrices exact, {}",
        timed(Duration::from_secs(10), start)?
    ))
}

fn ks_oracle(a: &[f64], b: &[f64]) -> f64 {
    let cdf = |s: &[f64], x: f64| s.iter().filter(|&&v| v <= x).count() as f64 / s.len() as f64;
    a.iter()
        .chain(b)
        .map(|&x| (cdf(a, x) - cdf(b, x)).abs())
        .fold(0.0, f64::max)
}

fn tv_oracle(p: &BTreeMap<String, f64>, q: &BTreeMap<String, f64>) -> f64 {
    let keys: BTreeSet<&String> = p.keys().chain(q.keys()).collect();
    0.5 * keys
        .into_iter()
        .map(|k| (p.get(k).copied().unwrap_or(0.0) - q.get(k).copied().unwrap_or(0.0)).abs())
        .sum::<f64>()
}

fn random_freqs(rng: &mut ChaCha8Rng) -> BTreeMap<String, f64> {
    let counts: Vec<(String, u32)> = (0..rng.gen_range(1..8))
        .map(|k| (format!("v{}", k * rng.gen_range(1..3)), rng.gen_range(1..20)))
        .collect();
    let mut merged: BTreeMap<String, u32> = BTreeMap::new();
    for (k, c) in counts {
        *merged.entry(k).or_default() += c;
    }
    let total: u32 = merged.values().sum();
    merged.into_iter().map(|(k, c)| (k, c as f64 / total as f64)).collect()
}

fn c3_distances() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst: f64 = 0.0;
    for k in 0..100 {
        let sample = |rng: &mut ChaCha8Rng| -> Vec<f64> {
            let n = rng.gen_range(1..80);
            if rng.gen_bool(0.5) {
                (0..n).map(|_| rng.gen_range(0..12) as f64).collect()
            } else {
                (0..n).map(|_| rng.gen_range(-3.0..3.0)).collect()
            }
        };
        let (a, b) = (sample(&mut rng), sample(&mut rng));
        let d = (ks_statistic(&a, &b).map_err(|e| e.to_string())? - ks_oracle(&a, &b)).abs();
        let (p, q) = (random_freqs(&mut rng), random_freqs(&mut rng));
        let t = (tv_statistic(&p, &q) - tv_oracle(&p, &q)).abs();
        worst = worst.max(d).max(t);
        ensure!(d <= 1e-12 && t <= 1e-12, "pair {k}: KS error {d:e}, TV error {t:e}");
    }
    Ok(format!("max error {worst:e}"))
}

fn c4_reconciliation() -> Outcome {
    let start = Instant::now();
    let cap = eval::DEFAULT_CAP;
    let s = eval::run(Suite::DatadiffStructural, 100, 7, cap).map_err(|e| e.to_string())?;
    let rs = Report::new(&s);
    let (zero, within4) = (rs.fraction(0), rs.within(4, &s));
    let f = eval::run(Suite::Datadiff, 100, 7, cap).map_err(|e| e.to_string())?;
    let within_cap = Report::new(&f).within(cap, &f);
    let detail = format!("structural zero {zero:.2} within4 {within4:.2}; full within{cap} {within_cap:.2}");
    ensure!(zero >= 0.5 && within4 >= 0.9 && within_cap >= 0.8, "{detail}");
    Ok(format!("{detail}, {}", timed(Duration::from_secs(120), start)?))
}

fn c5_dialect() -> Outcome {
    let start = Instant::now();
    let a = registry::build(
        "csv-dialect",
        &bind(&[("input", "json_cells.csv")]),
        &Options::default(),
    )
    .map_err(|e| e.to_string())?;
    let dialect = wrangle::dialect::DialectAssistant::new(
        std::fs::read_to_string(fixture("json_cells.csv")).map_err(|e| e.to_string())?,
    )
    .map_err(|e| e.to_string())?;
    let ranking = dialect.ranking(&InteractionSet::new());
    let comma = ranking
        .iter()
        .position(|s| s.dialect.delimiter == Some(','))
        .ok_or("comma dialect not ranked")?;
    ensure!(comma == 1, "comma ranks {}", comma + 1);
    let fixed = a
        .best_script(&cells(&["fix_delimiter(,)"]))
        .map_err(|e| e.to_string())?;
    ensure!(
        fixed.iter().any(|l| l.contains("delimiter=,")),
        "fix_delimiter(,) gives {fixed:?}"
    );

    let colors = std::fs::read_to_string(fixture("colors.tsv")).map_err(|e| e.to_string())?;
    let ca = wrangle::dialect::DialectAssistant::new(colors.clone()).map_err(|e| e.to_string())?;
    let h = InteractionSet::from_vec(vec![DialectConstraint::Fix(Slot::Delimiter, Some('\t'))]);
    let best = ca.best_scored(&h).map_err(|e| e.to_string())?.dialect;
    let rows = dialect::parse(&colors, &best);
    ensure!(
        rows.iter().all(|r| r.len() == 4),
        "colors rows are not 4 wide under {best}"
    );

    let traces = eval::run(Suite::Dialect, 50, 5, eval::DEFAULT_CAP).map_err(|e| e.to_string())?;
    let worst = traces
        .iter()
        .map(|t| t.interactions.unwrap_or(usize::MAX))
        .max()
        .unwrap_or(0);
    ensure!(worst <= 3, "a randomized fixture needed {worst} interactions");
    Ok(format!(
        "comma 2nd, colors 4 wide, worst of 50 = {worst}, {}",
        timed(Duration::from_secs(10), start)?
    ))
}

/// Splits on commas not preceded by a backslash; a backslash makes the
/// next character literal.
fn unescaped_split(text: &str) -> Vec<Vec<String>> {
    text.lines()
        .filter(|l| !l.is_empty())
        .map(|line| {
            let mut fields = vec![String::new()];
            let mut chars = line.chars();
            while let Some(c) = chars.next() {
                match c {
                    '\\' => fields.last_mut().unwrap().extend(chars.next()),
                    ',' => fields.push(String::new()),
                    c => fields.last_mut().unwrap().push(c),
                }
            }
            fields
        })
        .collect()
}

fn c6_escape() -> Outcome {
    let text = std::fs::read_to_string(fixture("movies_excerpt.csv")).map_err(|e| e.to_string())?;
    let oracle = unescaped_split(&text);
    ensure!(oracle.len() == 101, "oracle count {}", oracle.len());
    ensure!(oracle.iter().all(|r| r.len() == 3), "oracle rows are not 3 wide");
    let rows = dialect::parse(&text, &Dialect::new(Some(','), None, Some('\\')));
    ensure!(
        rows == oracle,
        "escape-aware parse differs from the oracle ({} rows)",
        rows.len()
    );
    let naive = dialect::parse(&text, &Dialect::rfc4180());
    ensure!(
        naive.len() != oracle.len(),
        "RFC 4180 parse also gives {} rows",
        naive.len()
    );
    let split = text.lines().filter(|l| l.split(',').count() != 3).count();
    Ok(format!(
        "{} rows; RFC 4180 gives {}; {split} lines mis-split by plain comma split",
        rows.len(),
        naive.len()
    ))
}

fn column_of(path: &str) -> std::result::Result<Vec<String>, String> {
    let t = read_csv(&fixture(path), &Dialect::rfc4180()).map_err(|e| e.to_string())?;
    Ok(t.columns()[0].cells.clone())
}

fn sorted(v: &[String]) -> Vec<String> {
    let mut v = v.to_vec();
    v.sort();
    v
}

fn c7_types() -> Outcome {
    use wrangle::Assistant;
    let start = Instant::now();
    let a = TypeAssistant::from_cells(column_of("esa_amperage.csv")?).map_err(|e| e.to_string())?;
    let h0 = InteractionSet::new();
    let e = a.best(&h0).map_err(|e| e.to_string())?;
    ensure!(e.ty == PrimitiveType::Boolean, "H0 type {}", e.ty);
    ensure!(
        sorted(&e.anomalies) == cells(&["0.5", "4", "6"]),
        "anomalies {:?}",
        e.anomalies
    );
    ensure!(e.missing == cells(&["?"]), "missing {:?}", e.missing);
    let e = a
        .best(&h0.with(TypeConstraint::NotType(PrimitiveType::Boolean)))
        .map_err(|e| e.to_string())?;
    ensure!(e.ty == PrimitiveType::Float, "after not_type(boolean): {}", e.ty);
    ensure!(
        e.missing == cells(&["?"]) && e.anomalies.is_empty(),
        "float expression {e:?}"
    );
    for col in [cells(&["yes", "no"]), column_of("grain_screened.csv")?] {
        let t = TypeAssistant::from_cells(col).map_err(|e| e.to_string())?;
        let e = t.best(&h0).map_err(|e| e.to_string())?;
        ensure!(e.ty == PrimitiveType::Boolean, "yes/no column gives {}", e.ty);
    }
    Ok(format!("boolean then float, {}", timed(Duration::from_secs(1), start)?))
}

fn path_sum(m: &wrangle::typeinfer::Pfsm, s: &[char]) -> f64 {
    fn rec(m: &wrangle::typeinfer::Pfsm, s: &[char], k: usize, state: usize) -> f64 {
        if k == s.len() {
            return m.final_prob[state];
        }
        let mut total = 0.0;
        for (t, &p) in m.trans[state].iter().enumerate() {
            let e = m.emit[t].prob(s[k]);
            if p > 0.0 && e > 0.0 {
                total += p * e * rec(m, s, k + 1, t);
            }
        }
        total
    }
    if s.is_empty() {
        return m.empty;
    }
    (0..m.init.len())
        .map(|q| {
            let e = m.init[q] * m.emit[q].prob(s[0]);
            if e > 0.0 {
                e * rec(m, s, 1, q)
            } else {
                0.0
            }
        })
        .sum()
}

fn c8_pfsm() -> Outcome {
    let alphabet = ['0', '1', '.', 'a'];
    let mut strings = vec![String::new()];
    let mut frontier = vec![String::new()];
    for _ in 0..4 {
        frontier = frontier
            .iter()
            .flat_map(|p| alphabet.iter().map(move |c| format!("{p}{c}")))
            .collect();
        strings.extend(frontier.iter().cloned());
    }
    let ms = [
        machines::boolean(),
        machines::integer(),
        machines::float(),
        machines::date(),
        machines::string(),
        machines::anomaly(),
        machines::missing(),
    ];
    let mut worst: f64 = 0.0;
    for m in &ms {
        for s in &strings {
            let chars: Vec<char> = s.chars().collect();
            let (fwd, brute) = (m.likelihood(s), path_sum(m, &chars));
            let scale = fwd.abs().max(brute.abs());
            let rel = if scale == 0.0 { 0.0 } else { (fwd - brute).abs() / scale };
            worst = worst.max(rel);
            ensure!(rel <= 1e-12, "{} on {s:?}: forward {fwd:e} vs paths {brute:e}", m.name);
        }
    }
    Ok(format!(
        "{} strings x {} machines, max relative error {worst:e}",
        strings.len(),
        ms.len()
    ))
}

fn random_column(rng: &mut ChaCha8Rng) -> Vec<String> {
    let pools: [&[&str]; 6] = [
        &["0", "1", "yes", "no", "T"],
        &["12", "-4", "7", "100", "NA"],
        &["1.5", "2.25", "-0.5", "3", ""],
        &["2020-01-02", "1999-12-31", "05/06/2007", "?"],
        &["apple", "pear", "x1", "hello world", "-"],
        &["0", "3.5", "abc", "2001-01-01", "yes", "null"],
    ];
    let n = rng.gen_range(5..60);
    let mix: Vec<&[&str]> = (0..rng.gen_range(1..=2)).map(|_| *pools.choose(rng).unwrap()).collect();
    (0..n)
        .map(|_| mix.choose(rng).unwrap().choose(rng).unwrap().to_string())
        .collect()
}

fn c9_chain() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for k in 0..50 {
        let col = random_column(&mut rng);
        let p = TypePosterior::new(&col, Weights::default()).map_err(|e| e.to_string())?;
        let post = p.posterior(&InteractionSet::new());
        let (order, err) = not_type_chain(&p);
        ensure!(order.len() == 5, "column {k}: chain of {} types", order.len());
        ensure!(matches!(err, Error::Exhausted(_)), "column {k}: chain ended with {err}");
        let probs: Vec<f64> = order.iter().map(|&t| post[t as usize]).collect();
        ensure!(
            probs.windows(2).all(|w| w[0] >= w[1]),
            "column {k}: order {order:?} posteriors {probs:?}"
        );
    }
    Ok("50 columns".into())
}

fn c10_semantic() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    for k in 0..1000 {
        let (ns, nt) = (rng.gen_range(1..6), rng.gen_range(1..5));
        let catalog: Vec<String> = (0..nt).map(|t| format!("dbo:T{t}")).collect();
        let p: Vec<Vec<f64>> = (0..ns).map(|_| (0..nt).map(|_| rng.gen::<f64>()).collect()).collect();
        let mut marks: BTreeMap<(usize, usize), bool> = BTreeMap::new();
        for _ in 0..rng.gen_range(0..6) {
            marks.insert((rng.gen_range(0..ns), rng.gen_range(0..nt)), rng.gen_bool(0.5));
        }
        let h = InteractionSet::from_vec(
            marks
                .iter()
                .map(|(&(s, t), &is)| {
                    if is {
                        SemanticConstraint::IsType(s, catalog[t].clone())
                    } else {
                        SemanticConstraint::NotType(s, catalog[t].clone())
                    }
                })
                .collect(),
        );
        let m = ScoreMatrix {
            catalog: catalog.clone(),
            p: p.clone(),
            scorer: "test".into(),
        };
        let (s, t) = (rng.gen_range(0..ns), rng.gen_range(0..nt));
        let want = match marks.get(&(s, t)) {
            Some(true) => 1.0,
            Some(false) => 0.0,
            None => p[s][t],
        };
        ensure!(
            m.adjusted(&h, s, t) == want,
            "triple {k}: {} vs {want}",
            m.adjusted(&h, s, t)
        );
    }

    let table = read_csv(&fixture("isp.csv"), &Dialect::rfc4180()).map_err(|e| e.to_string())?;
    let catalog = cells(&["dbo:Work", "dbo:Company", "dbo:Person"]);
    let scorer = ConstantScorer {
        scores: vec![
            ("dbo:Work".into(), 0.6),
            ("dbo:Company".into(), 0.5),
            ("dbo:Person".into(), 0.4),
        ],
    };
    let params = SemanticParams {
        n_samples: 4,
        sample_size: 1,
        ..SemanticParams::default()
    };
    let a = SemanticAssistant::new(table, 0, &catalog, &scorer, &params).map_err(|e| e.to_string())?;
    let scores = a.scores();
    let h0 = InteractionSet::new();
    ensure!(
        scores.best(&h0).map_err(|e| e.to_string())? == "dbo:Work",
        "H0 best is not dbo:Work"
    );
    let h = h0.with(SemanticConstraint::IsType(0, "dbo:Company".into()));
    let q = scores.column_score(&h, 1);
    ensure!(q == 0.625, "dbo:Company scores {q}");
    let best = scores.best(&h).map_err(|e| e.to_string())?;
    ensure!(best == "dbo:Company", "after is_type best is {best}");
    Ok("1000 triples exact; Virgin flips to dbo:Company at 0.625".into())
}

fn outlier_oracle(v: &[f64], m: f64) -> Vec<usize> {
    if v.len() < 2 {
        return Vec::new();
    }
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let sd = (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n).sqrt();
    if sd == 0.0 {
        return Vec::new();
    }
    (0..v.len())
        .filter(|&i| v[i] <= mean - m * sd || v[i] >= mean + m * sd)
        .collect()
}

fn c11_outlier() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for k in 0..100 {
        let mut v: Vec<f64> = (0..rng.gen_range(2..200))
            .map(|_| rng.gen_range(0..50) as f64)
            .collect();
        for _ in 0..rng.gen_range(0..4) {
            let i = rng.gen_range(0..v.len());
            v[i] = rng.gen_range(200..2000) as f64;
        }
        let m = [1.5, 2.0, 3.0][k % 3];
        let (got, want) = (outlier::detect_outliers(&v, m), outlier_oracle(&v, m));
        ensure!(got == want, "column {k}: {got:?} vs {want:?}");
    }

    let table = read_csv(&fixture("aviation.csv"), &Dialect::rfc4180()).map_err(|e| e.to_string())?;
    let filters = outlier::collect_aggregate_filters(&table, 3.0);
    let by = |col: &str| -> BTreeSet<String> {
        filters
            .iter()
            .filter(|(f, _)| f.column == col)
            .map(|(f, _)| f.value.clone())
            .collect()
    };
    let want_regis: BTreeSet<String> = ["EU28", "FR", "CH", "NEASA"].iter().map(|s| s.to_string()).collect();
    let want_geo: BTreeSet<String> = ["EU28", "OTH", "FR"].iter().map(|s| s.to_string()).collect();
    ensure!(by("c_regis") == want_regis, "c_regis filters {:?}", by("c_regis"));
    ensure!(by("c_geo") == want_geo, "c_geo filters {:?}", by("c_geo"));

    let a = registry::build(
        "outlier-aggregate",
        &bind(&[("input", "aviation.csv")]),
        &Options::default(),
    )
    .map_err(|e| e.to_string())?;
    let mut h: Vec<String> = Vec::new();
    for target in ["remove_rows(c_regis=EU28)", "remove_rows(c_geo=EU28)"] {
        let choices = a.choice_list(&h).map_err(|e| e.to_string())?;
        let pick = choices
            .iter()
            .find(|c| c.next.last().map(String::as_str) == Some(target))
            .ok_or_else(|| format!("{target} not offered"))?;
        h = pick.next.clone();
    }
    let out = a.recommend(&h, 0).map_err(|e| e.to_string())?.output;
    let left = (0..out.n_rows())
        .filter(|&i| out.row(i).iter().any(|c| c == "EU28"))
        .count();
    ensure!(left == 0, "{left} EU28 rows remain");
    Ok(format!(
        "100 columns exact; aviation {} filters; EU28 removed in two selections",
        filters.len()
    ))
}

static STUB: Descriptor = Descriptor {
    id: "stub",
    display_name: "Transcript stub",
    input_slots: &["reference", "input"],
    constraint_grammar: "datadiff",
};

struct Stub;

impl DynAssistant for Stub {
    fn descriptor(&self) -> &Descriptor {
        &STUB
    }

    fn normalize(&self, text: &str) -> wrangle::Result<String> {
        Ok(text.trim().to_string())
    }

    fn best_script(&self, _h: &[String]) -> wrangle::Result<Vec<String>> {
        Ok(Vec::new())
    }

    fn choice_list(&self, h: &[String]) -> wrangle::Result<Vec<ChoiceView>> {
        let with = |c: &str| {
            let mut next = h.to_vec();
            next.push(c.to_string());
            next
        };
        Ok(vec![
            ChoiceView {
                label: "Don't transform 'Urban.rural'".into(),
                next: with("notransform(Urban.rural)"),
            },
            ChoiceView {
                label: "Don't match 'Nation' and 'Urban.rural'".into(),
                next: with("nomatch(Nation,Urban.rural)"),
            },
        ])
    }

    fn recommend(&self, _h: &[String], _rows: usize) -> wrangle::Result<Recommendation> {
        Err(Error::NoRecommendation)
    }
}

fn random_text(rng: &mut ChaCha8Rng) -> String {
    let pool: Vec<char> = "ab Z09,=/%()\\\n\r\t'\"-.é_:[]>".chars().collect();
    (0..rng.gen_range(1..10)).map(|_| *pool.choose(rng).unwrap()).collect()
}

fn random_char(rng: &mut ChaCha8Rng) -> Option<char> {
    let pool: Vec<char> = ",;|\t \"'\\/%:#ab\n\r".chars().collect();
    if rng.gen_bool(0.15) {
        None
    } else {
        Some(*pool.choose(rng).unwrap())
    }
}

/// Formats a constraint, parses it back and checks both the value and the
/// wire form survive.
fn round_trip<C: PartialEq + std::fmt::Debug>(
    grammar: &str,
    c: &C,
    text: String,
    parse: impl Fn(&str) -> wrangle::Result<C>,
) -> std::result::Result<(), String> {
    let back = parse(&text).map_err(|e| format!("{grammar}: `{text}` does not parse: {e}"))?;
    ensure!(&back == c, "{grammar}: `{text}` parses to {back:?}, not {c:?}");
    let line = protocol::encode_interactions(&[text.clone(), text.clone()]).map_err(|e| e.to_string())?;
    ensure!(
        protocol::decode_interactions(&line) == vec![text.clone(), text.clone()],
        "{grammar}: `{text}` breaks the wire form"
    );
    Ok(())
}

fn c12_wire() -> Outcome {
    let input = "reference=/temp/bb15nice.csv,input=/temp/bb14.csv\nchoices\nnotransform(LLU)\n";
    let dir = std::env::temp_dir();
    let mut out = Vec::new();
    Server::new(
        |_b: &[(String, String)]| Ok(Arc::new(Stub) as Arc<dyn DynAssistant>),
        &dir,
    )
    .run(input.as_bytes(), &mut out)
    .map_err(|e| e.to_string())?;
    let want = "Don't transform 'Urban.rural'\nnotransform(LLU)/notransform(Urban.rural)\n\
                Don't match 'Nation' and 'Urban.rural'\nnotransform(LLU)/nomatch(Nation,Urban.rural)\n\n";
    let got = String::from_utf8(out).map_err(|e| e.to_string())?;
    ensure!(got == want, "transcript output {got:?}");

    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let names: Vec<String> = (0..9).map(|k| format!("c{k}")).collect();
    for _ in 0..1000 {
        let (i, j) = (rng.gen_range(0..9), rng.gen_range(0..9));
        let c = match rng.gen_range(0..3) {
            0 => DiffConstraint::NoMatch(i, j),
            1 => DiffConstraint::Match(i, j),
            _ => DiffConstraint::NoTransform(j),
        };
        round_trip("datadiff", &c, c.to_string(), |t| parse_diff(t, &names, &names))?;

        let slot = *Slot::ALL.choose(&mut rng).unwrap();
        let ch = random_char(&mut rng);
        let c = if rng.gen_bool(0.5) {
            DialectConstraint::Fix(slot, ch)
        } else {
            DialectConstraint::Not(slot, ch)
        };
        round_trip("csv-dialect", &c, c.to_string(), |t| t.parse())?;

        let c = match rng.gen_range(0..3) {
            0 => TypeConstraint::NotType(*PrimitiveType::ALL.choose(&mut rng).unwrap()),
            1 => TypeConstraint::NotMissing(random_text(&mut rng)),
            _ => TypeConstraint::NotAnomaly(random_text(&mut rng)),
        };
        round_trip("ptype", &c, c.to_string(), |t| t.parse())?;

        let (s, ty) = (rng.gen_range(0..20), random_text(&mut rng));
        let c = if rng.gen_bool(0.5) {
            SemanticConstraint::IsType(s, ty)
        } else {
            SemanticConstraint::NotType(s, ty)
        };
        round_trip("semantic-type", &c, c.to_string(), |t| t.parse())?;

        let v = if rng.gen_bool(0.5) {
            rng.gen_range(-1e6..1e6)
        } else {
            rng.gen_range(-1000..1000) as f64
        };
        let c = RemoveValue(v);
        round_trip("outlier", &c, c.to_string(), outlier::parse_remove_value)?;

        let c = AggregateFilter {
            column: random_text(&mut rng),
            value: random_text(&mut rng),
        };
        round_trip("outlier-aggregate", &c, c.to_string(), |t| t.parse())?;

        let req = Request {
            bindings: vec![
                ("input".into(), random_text(&mut rng)),
                ("reference".into(), random_text(&mut rng)),
            ],
            command: *[Command::Best, Command::Choices, Command::Apply]
                .choose(&mut rng)
                .unwrap(),
            constraints: vec![c.to_string()],
        };
        let text = protocol::encode_request(&req).map_err(|e| e.to_string())?;
        let lines: Vec<&str> = text.lines().collect();
        ensure!(lines.len() == 3, "request spans {} lines", lines.len());
        let back = protocol::decode_request([lines[0], lines[1], lines[2]]).map_err(|e| e.to_string())?;
        ensure!(back == req, "request round trip {back:?}");
    }
    Ok("transcript byte-identical; 1000 constraints per grammar round-trip".into())
}

struct Case {
    id: &'static str,
    bindings: Vec<(&'static str, &'static str)>,
    extra: Vec<&'static str>,
}

fn cases() -> Vec<Case> {
    vec![
        Case {
            id: "datadiff",
            bindings: vec![("input", "toy_input.csv"), ("reference", "toy_reference.csv")],
            extra: vec![
                "nomatch(1,2)",
                "match(3,2)",
                "notransform(2)",
                "match(2,1)",
                "nomatch(2,1)",
                "notransform(1)",
            ],
        },
        Case {
            id: "csv-dialect",
            bindings: vec![("input", "json_cells.csv")],
            extra: vec![
                "fix_delimiter(,)",
                "not_quote(\")",
                "fix_escape(none)",
                "not_delimiter(:)",
                "fix_quote(none)",
            ],
        },
        Case {
            id: "ptype",
            bindings: vec![("input", "esa_amperage.csv")],
            extra: vec![
                "not_type(boolean)",
                "not_missing(?)",
                "not_anomaly(4)",
                "not_type(float)",
                "not_type(integer)",
            ],
        },
        Case {
            id: "semantic-type",
            bindings: vec![("input", "isp.csv"), ("gazetteer", "isp_gazetteer.tsv")],
            extra: vec![
                "is_type(S1,dbo:Company)",
                "not_type(S1,dbo:Work)",
                "is_type(S1,dbo:Person)",
            ],
        },
        Case {
            id: "outlier",
            bindings: vec![("input", "aviation.csv")],
            extra: vec!["remove_value(0)", "remove_value(3)"],
        },
        Case {
            id: "outlier-aggregate",
            bindings: vec![("input", "aviation.csv")],
            extra: vec!["remove_rows(c_regis=EU28)", "remove_rows(c_geo=FR)"],
        },
    ]
}

/// Checks the framework invariants on random interaction sets and returns
/// a few of the sets that have a recommendation.
fn invariants(
    case: &Case,
    a: &dyn DynAssistant,
    rng: &mut ChaCha8Rng,
) -> std::result::Result<Vec<Vec<String>>, String> {
    let mut kept = vec![Vec::new()];
    let mut undefined = 0;
    for k in 0..100 {
        let mut h: Vec<String> = Vec::new();
        for _ in 0..rng.gen_range(0..=4) {
            let offered = a.choice_list(&h);
            let next = match offered {
                Ok(choices) if !choices.is_empty() && rng.gen_bool(0.7) => choices.choose(rng).unwrap().next.clone(),
                _ => {
                    let c = a
                        .normalize(case.extra.choose(rng).unwrap())
                        .map_err(|e| e.to_string())?;
                    let mut n = h.clone();
                    if !n.contains(&c) {
                        n.push(c);
                    }
                    n
                }
            };
            h = next;
        }
        let rec = match a.recommend(&h, 5) {
            Ok(r) => r,
            Err(e) if e.is_conflict() => {
                undefined += 1;
                continue;
            }
            Err(e) => return Err(format!("{}: H {h:?} fails with {e}", case.id)),
        };
        ensure!(rec.valid, "{}: best is not valid under {h:?}", case.id);
        for c in &rec.choices {
            ensure!(
                c.next.len() == h.len() + 1 && c.next[..h.len()] == h[..] && !h.contains(&c.next[h.len()]),
                "{}: choice `{}` does not extend {h:?} by one constraint: {:?}",
                case.id,
                c.label,
                c.next
            );
        }
        if k % 25 == 0 && !h.is_empty() && !kept.contains(&h) {
            kept.push(h);
        }
    }
    ensure!(undefined < 100, "{}: no interaction set had a recommendation", case.id);
    Ok(kept)
}

fn script_lines(stdout: &str) -> Vec<String> {
    stdout
        .lines()
        .take_while(|l| !l.is_empty())
        .map(str::to_string)
        .collect()
}

fn via_cli(case: &Case, h: &[String]) -> std::result::Result<Vec<String>, String> {
    let mut cmd = Process::new(env!("CARGO_BIN_EXE_wrangle"));
    cmd.arg(case.id);
    for (slot, f) in &case.bindings {
        cmd.arg(format!("--{slot}")).arg(fixture(f));
    }
    for c in h {
        cmd.arg("-c").arg(c);
    }
    let out = cmd.output().map_err(|e| e.to_string())?;
    ensure!(
        out.status.success(),
        "{} CLI exit {:?}: {}",
        case.id,
        out.status,
        String::from_utf8_lossy(&out.stderr)
    );
    Ok(script_lines(&String::from_utf8_lossy(&out.stdout)))
}

fn via_wire(case: &Case, sets: &[Vec<String>]) -> std::result::Result<Vec<Vec<String>>, String> {
    let bindings: Vec<(String, String)> = case
        .bindings
        .iter()
        .map(|(k, f)| (k.to_string(), fixture(f).display().to_string()))
        .collect();
    let mut input = String::new();
    for h in sets {
        let req = Request {
            bindings: bindings.clone(),
            command: Command::Best,
            constraints: h.clone(),
        };
        input.push_str(&protocol::encode_request(&req).map_err(|e| e.to_string())?);
    }
    let mut child = Process::new(env!("CARGO_BIN_EXE_wrangle"))
        .args(["stdio", case.id])
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .spawn()
        .map_err(|e| e.to_string())?;
    child
        .stdin
        .take()
        .unwrap()
        .write_all(input.as_bytes())
        .map_err(|e| e.to_string())?;
    let out = child.wait_with_output().map_err(|e| e.to_string())?;
    let text = String::from_utf8_lossy(&out.stdout).to_string();
    let mut replies = Vec::new();
    let mut current = Vec::new();
    for line in text.lines() {
        if line.is_empty() {
            replies.push(std::mem::take(&mut current));
        } else {
            current.push(line.to_string());
        }
    }
    Ok(replies)
}

async fn via_http(router: axum::Router, case: &Case, h: &[String]) -> std::result::Result<Vec<String>, String> {
    use axum::body::Body;
    use axum::http::{Method, Request as HttpRequest};
    use http_body_util::BodyExt;
    use tower::ServiceExt;

    async fn call(
        router: &axum::Router,
        method: Method,
        uri: &str,
        body: serde_json::Value,
    ) -> std::result::Result<serde_json::Value, String> {
        let req = HttpRequest::builder()
            .method(method)
            .uri(uri)
            .header("content-type", "application/json")
            .body(Body::from(body.to_string()))
            .map_err(|e| e.to_string())?;
        let resp = router.clone().oneshot(req).await.map_err(|e| e.to_string())?;
        let status = resp.status();
        let bytes = resp.into_body().collect().await.map_err(|e| e.to_string())?.to_bytes();
        let v: serde_json::Value = serde_json::from_slice(&bytes).map_err(|e| e.to_string())?;
        ensure!(status.is_success(), "{uri}: {status} {v}");
        Ok(v)
    }

    let bindings: BTreeMap<String, String> = case
        .bindings
        .iter()
        .map(|(k, f)| (k.to_string(), fixture(f).display().to_string()))
        .collect();
    let created = call(
        &router,
        Method::POST,
        "/sessions",
        serde_json::json!({"assistant": case.id, "bindings": bindings}),
    )
    .await?;
    let id = created["session_id"].as_str().ok_or("no session id")?.to_string();
    for c in h {
        call(
            &router,
            Method::POST,
            &format!("/sessions/{id}/constraint"),
            serde_json::json!({"constraint": c}),
        )
        .await?;
    }
    let v = call(
        &router,
        Method::GET,
        &format!("/sessions/{id}"),
        serde_json::Value::Null,
    )
    .await?;
    serde_json::from_value(v["expression_script"].clone()).map_err(|e| e.to_string())
}

fn c13_invariants() -> Outcome {
    let rt = tokio::runtime::Runtime::new().map_err(|e| e.to_string())?;
    let state = Arc::new(wrangle::service::AppState::open(None).map_err(|e| e.to_string())?);
    let router = wrangle::service::router(state);
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let mut compared = 0;
    for case in cases() {
        let bindings: Bindings = case.bindings.iter().map(|(k, f)| (k.to_string(), fixture(f))).collect();
        let a = registry::build(case.id, &bindings, &Options::default()).map_err(|e| e.to_string())?;
        let sets = invariants(&case, a.as_ref(), &mut rng)?;
        let wire = via_wire(&case, &sets)?;
        ensure!(
            wire.len() == sets.len(),
            "{}: wire gave {} replies for {} requests",
            case.id,
            wire.len(),
            sets.len()
        );
        for (h, w) in sets.iter().zip(&wire) {
            let direct = a.best_script(h).map_err(|e| e.to_string())?;
            let cli = via_cli(&case, h)?;
            let http = rt.block_on(via_http(router.clone(), &case, h))?;
            ensure!(
                cli == direct && http == direct && *w == direct,
                "{} under {h:?}: cli {cli:?}, http {http:?}, wire {w:?}, library {direct:?}",
                case.id
            );
            compared += 1;
        }
    }
    Ok(format!(
        "6 assistants x 100 sets; {compared} scripts identical across CLI, HTTP and wire"
    ))
}

fn main() {
    let criteria: [Check; 13] = [
        ("toy merge regression", c1_toy_merge),
        ("assignment oracle", c2_assignment),
        ("distance oracles", c3_distances),
        ("oracle-guided reconciliation", c4_reconciliation),
        ("dialect scenarios", c5_dialect),
        ("escape handling", c6_escape),
        ("type-inference scenario", c7_types),
        ("PFSM oracle", c8_pfsm),
        ("not_type chain", c9_chain),
        ("semantic layer", c10_semantic),
        ("outlier", c11_outlier),
        ("wire protocol", c12_wire),
        ("framework invariants", c13_invariants),
    ];
    let mut failed = 0;
    for (k, (name, check)) in criteria.iter().enumerate() {
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        match outcome {
            Ok(detail) => println!("PASS {:>2} {name}: {detail}", k + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL {:>2} {name}: {why}", k + 1);
            }
        }
    }
    println!("{} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
