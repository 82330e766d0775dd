//! The type, missing-value and anomaly machines.

use std::collections::HashMap;

use super::pfsm::{vocabulary_machine, Emission, Pfsm};
use crate::table::MISSING_VOCAB;

pub const BOOLEAN_WORDS: [&str; 10] = ["0", "1", "true", "false", "yes", "no", "t", "f", "y", "n"];

/// Date layouts as digit (`d`) and separator patterns.
pub const DATE_FORMATS: [&str; 5] = ["dddd-dd-dd", "dd/dd/dddd", "dd/dd/dddd", "dddd/dd/dd", "dd-dd-dddd"];

/// Printable ASCII plus one shared class for every other character.
pub const STRING_SYMBOLS: usize = 96;

fn digits() -> Emission {
    Emission::only(&('0'..='9').map(|c| (c, 0.1)).collect::<Vec<_>>())
}

fn signs() -> Emission {
    Emission::only(&[('+', 0.5), ('-', 0.5)])
}

fn any_char() -> Emission {
    let p = 1.0 / STRING_SYMBOLS as f64;
    Emission {
        table: (' '..='~').map(|c| (c, p)).collect::<HashMap<_, _>>(),
        other: p,
    }
}

pub fn boolean() -> Pfsm {
    vocabulary_machine("boolean", &BOOLEAN_WORDS, true)
}

/// States: sign, digit.
pub fn integer() -> Pfsm {
    Pfsm {
        name: "integer",
        init: vec![0.1, 0.9],
        trans: vec![vec![0.0, 1.0], vec![0.0, 0.9]],
        final_prob: vec![0.0, 0.1],
        emit: vec![signs(), digits()],
        empty: 0.0,
    }
}

/// States: sign, integer digit, decimal point, fractional digit.
pub fn float() -> Pfsm {
    Pfsm {
        name: "float",
        init: vec![0.1, 0.9, 0.0, 0.0],
        trans: vec![
            vec![0.0, 1.0, 0.0, 0.0],
            vec![0.0, 0.63, 0.3, 0.0],
            vec![0.0, 0.0, 0.0, 1.0],
            vec![0.0, 0.0, 0.0, 0.9],
        ],
        final_prob: vec![0.0, 0.07, 0.0, 0.1],
        emit: vec![signs(), digits(), Emission::only(&[('.', 1.0)]), digits()],
        empty: 0.0,
    }
}

/// One chain of states per layout, entered uniformly.
pub fn date() -> Pfsm {
    let m: usize = DATE_FORMATS.iter().map(|f| f.len()).sum();
    let mut init = vec![0.0; m];
    let mut trans = vec![vec![0.0; m]; m];
    let mut final_prob = vec![0.0; m];
    let mut emit = Vec::with_capacity(m);
    let mut offset = 0;
    for f in DATE_FORMATS {
        init[offset] = 1.0 / DATE_FORMATS.len() as f64;
        for (k, c) in f.chars().enumerate() {
            let s = offset + k;
            emit.push(if c == 'd' {
                digits()
            } else {
                Emission::only(&[(c, 1.0)])
            });
            if k + 1 < f.len() {
                trans[s][s + 1] = 1.0;
            } else {
                final_prob[s] = 1.0;
            }
        }
        offset += f.len();
    }
    Pfsm {
        name: "date",
        init,
        trans,
        final_prob,
        emit,
        empty: 0.0,
    }
}

fn repeating(name: &'static str, stay: f64) -> Pfsm {
    Pfsm {
        name,
        init: vec![1.0],
        trans: vec![vec![stay]],
        final_prob: vec![1.0 - stay],
        emit: vec![any_char()],
        empty: 0.0,
    }
}

pub fn string() -> Pfsm {
    repeating("string", 0.98)
}

pub fn anomaly() -> Pfsm {
    repeating("anomaly", 0.9)
}

pub fn missing() -> Pfsm {
    vocabulary_machine("missing", &MISSING_VOCAB, false)
}
