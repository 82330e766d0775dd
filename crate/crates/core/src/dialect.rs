//! CSV dialect detection by data consistency (row-width regularity times
//! the share of recognisably typed cells), restricted by fix/not constraints.

use std::cmp::Ordering;
use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use rayon::prelude::*;
use regex::Regex;

use crate::assistant::{exhausted, Assistant, Choice, Descriptor, InteractionSet, Output};
use crate::error::{Error, Result};
use crate::grammar;
use crate::table::{parse_number, Table};

pub const TYPE_SCORE_FLOOR: f64 = 1e-3;
pub const DEFAULT_MAX_LINES: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Dialect {
    pub delimiter: Option<char>,
    pub quote: Option<char>,
    pub escape: Option<char>,
}

impl Dialect {
    pub const fn new(delimiter: Option<char>, quote: Option<char>, escape: Option<char>) -> Self {
        Dialect {
            delimiter,
            quote,
            escape,
        }
    }

    /// Comma, double quote, no escape.
    pub const fn rfc4180() -> Self {
        Dialect::new(Some(','), Some('"'), None)
    }

    pub fn get(&self, slot: Slot) -> Option<char> {
        match slot {
            Slot::Delimiter => self.delimiter,
            Slot::Quote => self.quote,
            Slot::Escape => self.escape,
        }
    }
}

impl fmt::Display for Dialect {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "delimiter={} quote={} escape={}",
            spell(self.delimiter),
            spell(self.quote),
            spell(self.escape)
        )
    }
}

impl FromStr for Dialect {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut d = Dialect::new(None, None, None);
        let mut seen = 0;
        for part in s.split(' ').filter(|p| !p.is_empty()) {
            let (key, value) = part
                .split_once('=')
                .ok_or_else(|| Error::InvalidData(format!("bad dialect field `{part}`")))?;
            let c = unspell(value).ok_or_else(|| Error::InvalidData(format!("bad dialect character `{value}`")))?;
            match key {
                "delimiter" => d.delimiter = c,
                "quote" => d.quote = c,
                "escape" => d.escape = c,
                _ => return Err(Error::InvalidData(format!("unknown dialect field `{key}`"))),
            }
            seen += 1;
        }
        if seen != 3 {
            return Err(Error::InvalidData(format!("incomplete dialect `{s}`")));
        }
        Ok(d)
    }
}

/// Textual form of a dialect character; control characters and space get
/// backslash spellings, the absent character is `none`.
pub fn spell(c: Option<char>) -> String {
    match c {
        None => "none".into(),
        Some('\t') => "\\t".into(),
        Some('\n') => "\\n".into(),
        Some('\r') => "\\r".into(),
        Some(' ') => "\\s".into(),
        Some(c) => c.to_string(),
    }
}

pub fn unspell(s: &str) -> Option<Option<char>> {
    match s {
        "none" => Some(None),
        "\\t" => Some(Some('\t')),
        "\\n" => Some(Some('\n')),
        "\\r" => Some(Some('\r')),
        "\\s" => Some(Some(' ')),
        _ => {
            let mut it = s.chars();
            let c = it.next()?;
            it.next().is_none().then_some(Some(c))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum State {
    FieldStart,
    Unquoted,
    Quoted,
    AfterQuote,
}

/// Splits text into rows of cells under a dialect. Parsing never fails:
/// an unterminated quote runs to the end of the text and blank lines are
/// skipped.
pub fn parse(text: &str, d: &Dialect) -> Vec<Vec<String>> {
    let mut rows = Vec::new();
    let mut row: Vec<String> = Vec::new();
    let mut field = String::new();
    let mut state = State::FieldStart;
    let mut line_has_content = false;
    let mut chars = text.chars().peekable();

    while let Some(c) = chars.next() {
        if Some(c) == d.escape {
            line_has_content = true;
            match chars.next() {
                Some(next) => field.push(next),
                None => field.push(c),
            }
            if state == State::FieldStart {
                state = State::Unquoted;
            }
            continue;
        }
        if state == State::Quoted {
            if Some(c) == d.quote {
                if chars.peek() == Some(&c) {
                    chars.next();
                    field.push(c);
                } else {
                    state = State::AfterQuote;
                }
            } else {
                field.push(c);
            }
            continue;
        }
        if c == '\n' || c == '\r' {
            if c == '\r' && chars.peek() == Some(&'\n') {
                chars.next();
            }
            if line_has_content {
                row.push(std::mem::take(&mut field));
                rows.push(std::mem::take(&mut row));
            }
            line_has_content = false;
            state = State::FieldStart;
            continue;
        }
        line_has_content = true;
        if Some(c) == d.delimiter {
            row.push(std::mem::take(&mut field));
            state = State::FieldStart;
        } else if state == State::FieldStart && Some(c) == d.quote {
            state = State::Quoted;
        } else {
            field.push(c);
            if state == State::FieldStart {
                state = State::Unquoted;
            }
        }
    }
    if line_has_content {
        row.push(field);
        rows.push(row);
    }
    rows
}

/// Regularity of row widths: for each distinct width `L` shared by `N`
/// rows add `N (L-1)/L`, then divide by the number of distinct widths.
pub fn pattern_score(rows: &[Vec<String>]) -> f64 {
    let mut groups: std::collections::BTreeMap<usize, usize> = Default::default();
    for r in rows {
        *groups.entry(r.len()).or_default() += 1;
    }
    if groups.is_empty() {
        return 0.0;
    }
    let sum: f64 = groups
        .iter()
        .filter(|(&l, _)| l > 0)
        .map(|(&l, &n)| n as f64 * (l as f64 - 1.0) / l as f64)
        .sum();
    sum / groups.len() as f64
}

fn detectors() -> &'static [Regex] {
    static RES: OnceLock<Vec<Regex>> = OnceLock::new();
    RES.get_or_init(|| {
        [
            // dates
            r"^\d{4}[-/.]\d{1,2}[-/.]\d{1,2}$",
            r"^\d{1,2}[-/.]\d{1,2}[-/.]\d{2,4}$",
            // times
            r"^\d{1,2}:\d{2}(:\d{2})?$",
            // URLs
            r"^(https?|ftp)://[^\s]+$",
            r"^www\.[^\s]+\.[^\s]+$",
            // e-mail
            r"^[\w.+-]+@[\w-]+(\.[\w-]+)+$",
            // single alphanumeric token
            r"^[\p{L}\p{N}]+$",
        ]
        .iter()
        .map(|p| Regex::new(p).unwrap())
        .collect()
    })
}

pub fn is_typed(cell: &str) -> bool {
    let t = cell.trim();
    t.is_empty() || parse_number(t).is_some() || detectors().iter().any(|re| re.is_match(t))
}

/// Share of cells with a recognised type, floored at [`TYPE_SCORE_FLOOR`].
pub fn type_score(rows: &[Vec<String>]) -> f64 {
    let total: usize = rows.iter().map(Vec::len).sum();
    if total == 0 {
        return TYPE_SCORE_FLOOR;
    }
    let typed = rows.iter().flatten().filter(|c| is_typed(c)).count();
    (typed as f64 / total as f64).max(TYPE_SCORE_FLOOR)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScoredDialect {
    pub dialect: Dialect,
    pub pattern: f64,
    /// `None` when skipped because the pattern score is zero.
    pub type_score: Option<f64>,
    pub consistency: f64,
}

pub fn score(text: &str, d: &Dialect) -> ScoredDialect {
    let rows = parse(text, d);
    let pattern = pattern_score(&rows);
    if pattern == 0.0 {
        return ScoredDialect {
            dialect: *d,
            pattern,
            type_score: None,
            consistency: 0.0,
        };
    }
    let t = type_score(&rows);
    ScoredDialect {
        dialect: *d,
        pattern,
        type_score: Some(t),
        consistency: pattern * t,
    }
}

fn delimiter_rank(c: Option<char>) -> (u8, u32) {
    match c {
        Some(',') => (0, 0),
        Some('\t') => (1, 0),
        Some(';') => (2, 0),
        Some('|') => (3, 0),
        Some(c) => (4, c as u32),
        None => (5, 0),
    }
}

fn quote_rank(c: Option<char>) -> u8 {
    match c {
        None => 0,
        Some('"') => 1,
        Some('\'') => 2,
        Some(_) => 3,
    }
}

/// Preference order used to break consistency ties. A quote or escape
/// character that never changes the parse scores exactly like its absence,
/// so ties prefer none.
pub fn preference(a: &Dialect, b: &Dialect) -> Ordering {
    delimiter_rank(a.delimiter)
        .cmp(&delimiter_rank(b.delimiter))
        .then(quote_rank(a.quote).cmp(&quote_rank(b.quote)))
        .then(a.escape.is_some().cmp(&b.escape.is_some()))
        .then(a.escape.cmp(&b.escape))
}

pub fn rank(scored: &mut [ScoredDialect]) {
    scored.sort_by(|a, b| {
        b.consistency
            .total_cmp(&a.consistency)
            .then_with(|| preference(&a.dialect, &b.dialect))
    });
}

/// First `max_lines` lines of the text.
pub fn sample(text: &str, max_lines: usize) -> &str {
    match text.match_indices('\n').nth(max_lines.saturating_sub(1)) {
        Some((i, _)) if max_lines > 0 => &text[..=i],
        _ => text,
    }
}

fn is_quote_char(c: char) -> bool {
    c == '"' || c == '\''
}

/// All dialects that could plausibly describe the text, before constraints.
pub fn base_candidates(text: &str) -> Vec<Dialect> {
    let chars: BTreeSet<char> = text.chars().collect();
    let mut delims: BTreeSet<Option<char>> = chars
        .iter()
        .copied()
        .filter(|&c| c == '\t' || (!c.is_alphanumeric() && !is_quote_char(c) && !c.is_control()))
        .map(Some)
        .collect();
    delims.insert(Some(','));
    delims.insert(None);

    let mut quotes: Vec<Option<char>> = ['"', '\'']
        .into_iter()
        .filter(|c| chars.contains(c))
        .map(Some)
        .collect();
    quotes.push(None);

    let mut escapes = vec![None];
    let mut it = text.chars().peekable();
    while let Some(c) = it.next() {
        if c == '\\' {
            if let Some(&n) = it.peek() {
                if is_quote_char(n) || delims.contains(&Some(n)) {
                    escapes.push(Some('\\'));
                    break;
                }
            }
        }
    }

    let mut out = Vec::new();
    for &d in &delims {
        for &q in &quotes {
            for &e in &escapes {
                if d.is_some() && d == e {
                    continue;
                }
                out.push(Dialect::new(d, q, e));
            }
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Slot {
    Delimiter,
    Quote,
    Escape,
}

impl Slot {
    pub const ALL: [Slot; 3] = [Slot::Delimiter, Slot::Quote, Slot::Escape];

    fn name(self) -> &'static str {
        match self {
            Slot::Delimiter => "delimiter",
            Slot::Quote => "quote",
            Slot::Escape => "escape",
        }
    }

    fn noun(self) -> &'static str {
        match self {
            Slot::Delimiter => "delimiter",
            Slot::Quote => "quote character",
            Slot::Escape => "escape character",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DialectConstraint {
    Fix(Slot, Option<char>),
    Not(Slot, Option<char>),
}

impl DialectConstraint {
    pub fn allows(&self, d: &Dialect) -> bool {
        match *self {
            DialectConstraint::Fix(s, c) => d.get(s) == c,
            DialectConstraint::Not(s, c) => d.get(s) != c,
        }
    }
}

impl fmt::Display for DialectConstraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (prefix, slot, c) = match *self {
            DialectConstraint::Fix(s, c) => ("fix", s, c),
            DialectConstraint::Not(s, c) => ("not", s, c),
        };
        write!(f, "{prefix}_{}({})", slot.name(), grammar::encode_arg(&spell(c), false))
    }
}

impl FromStr for DialectConstraint {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        let (name, arg) = grammar::split_call(text)?;
        let (kind, slot) = name
            .split_once('_')
            .ok_or_else(|| Error::constraint(text, "unknown dialect constraint"))?;
        let slot = match slot {
            "delimiter" => Slot::Delimiter,
            "quote" => Slot::Quote,
            "escape" => Slot::Escape,
            _ => return Err(Error::constraint(text, "unknown dialect slot")),
        };
        let arg = grammar::decode_arg(arg)?;
        let c = unspell(&arg).ok_or_else(|| Error::constraint(text, "expected a single character or `none`"))?;
        match kind {
            "fix" => Ok(DialectConstraint::Fix(slot, c)),
            "not" => Ok(DialectConstraint::Not(slot, c)),
            _ => Err(Error::constraint(text, "expected fix_ or not_")),
        }
    }
}

pub fn valid(d: &Dialect, h: &InteractionSet<DialectConstraint>) -> bool {
    h.iter().all(|c| c.allows(d))
}

fn quoted(c: Option<char>) -> String {
    match c {
        None => "none".into(),
        Some(c) => format!("'{}'", spell(Some(c))),
    }
}

/// Dialect detection over one file. Every candidate is scored once at
/// construction; constraints only filter the ranking.
pub struct DialectAssistant {
    text: String,
    ranking: Vec<ScoredDialect>,
}

pub static DESCRIPTOR: Descriptor = Descriptor {
    id: "csv-dialect",
    display_name: "CSV dialect detection",
    input_slots: &["input"],
    constraint_grammar: "dialect",
};

impl DialectAssistant {
    pub fn new(text: String) -> Result<Self> {
        Self::with_max_lines(text, DEFAULT_MAX_LINES)
    }

    pub fn with_max_lines(text: String, max_lines: usize) -> Result<Self> {
        if text.trim().is_empty() {
            return Err(Error::EmptyInput("file has no content".into()));
        }
        let head = sample(&text, max_lines);
        let mut ranking: Vec<ScoredDialect> = base_candidates(head).par_iter().map(|d| score(head, d)).collect();
        rank(&mut ranking);
        Ok(DialectAssistant { text, ranking })
    }

    pub fn text(&self) -> &str {
        &self.text
    }

    /// Every candidate admitted by `h`, best first.
    pub fn ranking(&self, h: &InteractionSet<DialectConstraint>) -> Vec<ScoredDialect> {
        self.ranking.iter().filter(|s| valid(&s.dialect, h)).copied().collect()
    }

    pub fn best_scored(&self, h: &InteractionSet<DialectConstraint>) -> Result<ScoredDialect> {
        self.ranking
            .iter()
            .find(|s| valid(&s.dialect, h))
            .copied()
            .ok_or_else(|| {
                Error::ConflictingConstraints(format!(
                    "no candidate dialect satisfies {}",
                    h.iter().map(|c| c.to_string()).collect::<Vec<_>>().join("/")
                ))
            })
    }
}

impl Assistant for DialectAssistant {
    type Constraint = DialectConstraint;
    type Expression = Dialect;

    fn descriptor(&self) -> &Descriptor {
        &DESCRIPTOR
    }

    fn parse_constraint(&self, text: &str) -> Result<DialectConstraint> {
        text.parse()
    }

    fn format_constraint(&self, c: &DialectConstraint) -> String {
        c.to_string()
    }

    fn best(&self, h: &InteractionSet<DialectConstraint>) -> Result<Dialect> {
        if self.ranking.is_empty() {
            return exhausted("no candidate dialects");
        }
        Ok(self.best_scored(h)?.dialect)
    }

    fn valid(&self, e: &Dialect, h: &InteractionSet<DialectConstraint>) -> bool {
        valid(e, h)
    }

    fn choices(&self, h: &InteractionSet<DialectConstraint>, e: &Dialect) -> Vec<Choice<DialectConstraint>> {
        let fixed = |slot: Slot| {
            h.iter()
                .any(|c| matches!(c, DialectConstraint::Fix(s, _) if *s == slot))
        };
        let mut out = Vec::new();
        for slot in Slot::ALL {
            if fixed(slot) {
                continue;
            }
            let c = e.get(slot);
            let label = format!(
                "{}{} is not {}",
                slot.noun()[..1].to_uppercase(),
                &slot.noun()[1..],
                quoted(c)
            );
            out.push(Choice::new(label, DialectConstraint::Not(slot, c)));
        }
        let allowed = self.ranking(h);
        for slot in Slot::ALL {
            if fixed(slot) {
                continue;
            }
            // `allowed` is ranked, so the first hit per value is its best score.
            let mut seen = BTreeSet::new();
            seen.insert(e.get(slot));
            for s in &allowed {
                let c = s.dialect.get(slot);
                if seen.insert(c) {
                    let label = match c {
                        Some(_) => format!("Use {} as the {}", quoted(c), slot.noun()),
                        None => format!("Use no {}", slot.noun()),
                    };
                    out.push(Choice::new(label, DialectConstraint::Fix(slot, c)));
                }
            }
        }
        out
    }

    fn apply(&self, e: &Dialect) -> Result<Output> {
        Ok(Output::plain(Table::from_rows(parse(&self.text, e))?))
    }

    fn script(&self, e: &Dialect) -> Vec<String> {
        vec![e.to_string()]
    }

    fn score(&self, e: &Dialect, _h: &InteractionSet<DialectConstraint>) -> Option<f64> {
        self.ranking.iter().find(|s| s.dialect == *e).map(|s| s.consistency)
    }

    fn notes(&self, h: &InteractionSet<DialectConstraint>, _e: &Dialect) -> Vec<String> {
        self.ranking(h)
            .iter()
            .enumerate()
            .map(|(i, s)| format!("{:>3}. {}  consistency={:.6}", i + 1, s.dialect, s.consistency))
            .collect()
    }
}
