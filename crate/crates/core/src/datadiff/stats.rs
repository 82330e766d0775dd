//! Distribution distances and the closed-form fits used to score column pairs.

use std::collections::BTreeMap;

use crate::error::{Error, Result};

/// Kolmogorov-Smirnov statistic: largest gap between the two empirical CDFs.
pub fn ks_statistic(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptyInput("KS statistic of an empty sample".into()));
    }
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let x = if a[i] <= b[j] { a[i] } else { b[j] };
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    Ok(d)
}

/// Total variation distance between two frequency maps. An empty map
/// stands for a column with no observed values.
pub fn tv_statistic(p: &BTreeMap<String, f64>, q: &BTreeMap<String, f64>) -> f64 {
    match (p.is_empty(), q.is_empty()) {
        (true, true) => return 0.0,
        (true, false) | (false, true) => return 1.0,
        _ => {}
    }
    let mut sum = 0.0;
    for (k, &pv) in p {
        sum += (pv - q.get(k).copied().unwrap_or(0.0)).abs();
    }
    for (k, &qv) in q {
        if !p.contains_key(k) {
            sum += qv;
        }
    }
    0.5 * sum
}

pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Slope and intercept mapping `input` onto the mean and spread of
/// `reference`: the positive slope first, then its mirror image.
pub fn moment_fits(input: &[f64], reference: &[f64]) -> Vec<(f64, f64)> {
    if input.is_empty() || reference.is_empty() {
        return Vec::new();
    }
    let (mi, si) = mean_std(input);
    let (mr, sr) = mean_std(reference);
    if si == 0.0 || !si.is_finite() {
        return Vec::new();
    }
    let a = sr / si;
    vec![(a, mr - a * mi), (-a, mr + a * mi)]
}

fn ranked(freq: &BTreeMap<String, f64>) -> Vec<&String> {
    let mut keys: Vec<(&String, f64)> = freq.iter().map(|(k, &v)| (k, v)).collect();
    keys.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    keys.into_iter().map(|(k, _)| k).collect()
}

/// Aligns categories by frequency rank. Identity pairs are omitted;
/// categories beyond the shorter list keep their value.
pub fn rank_recode(input: &BTreeMap<String, f64>, reference: &BTreeMap<String, f64>) -> Vec<(String, String)> {
    ranked(input)
        .into_iter()
        .zip(ranked(reference))
        .filter(|(a, b)| a != b)
        .map(|(a, b)| (a.clone(), b.clone()))
        .collect()
}

pub fn recode_frequencies(freq: &BTreeMap<String, f64>, mapping: &[(String, String)]) -> BTreeMap<String, f64> {
    let mut out: BTreeMap<String, f64> = BTreeMap::new();
    for (k, &v) in freq {
        let target = mapping.iter().find(|(from, _)| from == k).map_or(k, |(_, to)| to);
        *out.entry(target.clone()).or_default() += v;
    }
    out
}
