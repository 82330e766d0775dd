//! Probabilistic finite-state machines with per-state emissions and the
//! scaled forward algorithm.

use std::collections::HashMap;

/// Emission distribution of one state: explicit character probabilities
/// plus a shared probability for every character not listed.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Emission {
    pub table: HashMap<char, f64>,
    pub other: f64,
}

impl Emission {
    pub fn only(chars: &[(char, f64)]) -> Self {
        Emission {
            table: chars.iter().copied().collect(),
            other: 0.0,
        }
    }

    pub fn prob(&self, c: char) -> f64 {
        self.table.get(&c).copied().unwrap_or(self.other)
    }
}

/// A string is generated by picking a start state, emitting one character
/// per visited state, and stopping with the state's final probability.
/// The empty string has its own probability `empty`.
#[derive(Debug, Clone, PartialEq)]
pub struct Pfsm {
    pub name: &'static str,
    pub init: Vec<f64>,
    pub trans: Vec<Vec<f64>>,
    pub final_prob: Vec<f64>,
    pub emit: Vec<Emission>,
    pub empty: f64,
}

impl Pfsm {
    pub fn n_states(&self) -> usize {
        self.init.len()
    }

    /// Natural log of the probability of `value`; `-inf` when unreachable.
    pub fn log_likelihood(&self, value: &str) -> f64 {
        let chars: Vec<char> = value.chars().collect();
        if chars.is_empty() {
            return self.empty.ln();
        }
        let m = self.n_states();
        let mut alpha: Vec<f64> = (0..m).map(|s| self.init[s] * self.emit[s].prob(chars[0])).collect();
        let mut log_scale = 0.0;
        for &c in &chars[1..] {
            let z: f64 = alpha.iter().sum();
            if z == 0.0 {
                return f64::NEG_INFINITY;
            }
            log_scale += z.ln();
            let mut next = vec![0.0; m];
            for (s, &a) in alpha.iter().enumerate() {
                if a == 0.0 {
                    continue;
                }
                let a = a / z;
                for (t, &p) in self.trans[s].iter().enumerate() {
                    if p > 0.0 {
                        next[t] += a * p;
                    }
                }
            }
            for (t, v) in next.iter_mut().enumerate() {
                *v *= self.emit[t].prob(c);
            }
            alpha = next;
        }
        let end: f64 = alpha.iter().zip(&self.final_prob).map(|(a, f)| a * f).sum();
        if end == 0.0 {
            f64::NEG_INFINITY
        } else {
            log_scale + end.ln()
        }
    }

    pub fn likelihood(&self, value: &str) -> f64 {
        self.log_likelihood(value).exp()
    }

    /// Largest deviation from stochasticity over all states, given the
    /// number of distinct symbols covered by `other`.
    pub fn normalization_error(&self, other_symbols: usize) -> f64 {
        let mut worst = (self.init.iter().sum::<f64>() + self.empty - 1.0).abs();
        for s in 0..self.n_states() {
            let out = self.trans[s].iter().sum::<f64>() + self.final_prob[s];
            // States that are never entered may be left without outgoing mass.
            if out > 0.0 {
                worst = worst.max((out - 1.0).abs());
            }
            let e = &self.emit[s];
            let mass = e.table.values().sum::<f64>() + e.other * other_symbols as f64;
            worst = worst.max((mass - 1.0).abs());
        }
        worst
    }
}

/// Builds a machine accepting exactly `words`, each with equal probability.
/// With `fold_case`, every letter is emitted in lower or upper case with
/// probability 1/2 each.
pub fn vocabulary_machine(name: &'static str, words: &[&str], fold_case: bool) -> Pfsm {
    struct Node {
        ch: char,
        through: usize,
        ends: usize,
        children: Vec<usize>,
    }
    let total = words.len() as f64;
    let mut nodes: Vec<Node> = Vec::new();
    let mut roots: Vec<usize> = Vec::new();
    let mut empty = 0usize;
    for w in words {
        let w = if fold_case { w.to_lowercase() } else { w.to_string() };
        if w.is_empty() {
            empty += 1;
            continue;
        }
        let mut level: Option<usize> = None;
        let chars: Vec<char> = w.chars().collect();
        for (k, &c) in chars.iter().enumerate() {
            let siblings = match level {
                None => roots.clone(),
                Some(p) => nodes[p].children.clone(),
            };
            let idx = match siblings.iter().copied().find(|&i| nodes[i].ch == c) {
                Some(i) => i,
                None => {
                    nodes.push(Node {
                        ch: c,
                        through: 0,
                        ends: 0,
                        children: Vec::new(),
                    });
                    let i = nodes.len() - 1;
                    match level {
                        None => roots.push(i),
                        Some(p) => nodes[p].children.push(i),
                    }
                    i
                }
            };
            nodes[idx].through += 1;
            if k + 1 == chars.len() {
                nodes[idx].ends += 1;
            }
            level = Some(idx);
        }
    }
    let m = nodes.len();
    let mut init = vec![0.0; m];
    for &r in &roots {
        init[r] = nodes[r].through as f64 / total;
    }
    let mut trans = vec![vec![0.0; m]; m];
    let mut final_prob = vec![0.0; m];
    let mut emit = Vec::with_capacity(m);
    for (i, n) in nodes.iter().enumerate() {
        for &c in &n.children {
            trans[i][c] = nodes[c].through as f64 / n.through as f64;
        }
        final_prob[i] = n.ends as f64 / n.through as f64;
        let upper: Vec<char> = n.ch.to_uppercase().collect();
        emit.push(if fold_case && upper.len() == 1 && upper[0] != n.ch {
            Emission::only(&[(n.ch, 0.5), (upper[0], 0.5)])
        } else {
            Emission::only(&[(n.ch, 1.0)])
        });
    }
    Pfsm {
        name,
        init,
        trans,
        final_prob,
        emit,
        empty: empty as f64 / total,
    }
}
