//! Shared textual form of constraints: `name(arg,arg)`.
//!
//! Arguments are percent-escaped so that a constraint never contains the
//! interaction separator `/` or a line break. Commas are escaped only in
//! positions where they would be ambiguous (multi-argument calls).

use crate::error::{Error, Result};

/// Splits `name(inner)` into its parts. The inner text runs to the last `)`.
pub fn split_call(text: &str) -> Result<(&str, &str)> {
    let open = text
        .find('(')
        .ok_or_else(|| Error::constraint(text, "expected `name(arguments)`"))?;
    if !text.ends_with(')') {
        return Err(Error::constraint(text, "missing closing parenthesis"));
    }
    let name = &text[..open];
    if name.is_empty() || !name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') {
        return Err(Error::constraint(text, "malformed constraint name"));
    }
    Ok((name, &text[open + 1..text.len() - 1]))
}

/// Splits the argument list of a two-argument call on its first comma.
pub fn split_pair<'a>(text: &str, inner: &'a str) -> Result<(&'a str, &'a str)> {
    inner
        .split_once(',')
        .ok_or_else(|| Error::constraint(text, "expected two arguments"))
}

pub fn encode_arg(arg: &str, escape_comma: bool) -> String {
    let mut out = String::with_capacity(arg.len());
    for c in arg.chars() {
        match c {
            '%' => out.push_str("%25"),
            '/' => out.push_str("%2F"),
            '\n' => out.push_str("%0A"),
            '\r' => out.push_str("%0D"),
            ',' if escape_comma => out.push_str("%2C"),
            other => out.push(other),
        }
    }
    out
}

pub fn decode_arg(arg: &str) -> Result<String> {
    let bytes = arg.as_bytes();
    let mut out = Vec::with_capacity(bytes.len());
    let mut i = 0;
    while i < bytes.len() {
        if bytes[i] == b'%' {
            let hex = arg
                .get(i + 1..i + 3)
                .and_then(|h| u8::from_str_radix(h, 16).ok())
                .ok_or_else(|| Error::constraint(arg, "bad percent escape"))?;
            out.push(hex);
            i += 3;
        } else {
            out.push(bytes[i]);
            i += 1;
        }
    }
    String::from_utf8(out).map_err(|_| Error::constraint(arg, "escape yields invalid UTF-8"))
}

/// Parses a 1-based column index.
pub fn parse_index(text: &str, arg: &str) -> Result<usize> {
    match arg.trim().parse::<usize>() {
        Ok(n) if n >= 1 => Ok(n - 1),
        _ => Err(Error::constraint(text, format!("`{arg}` is not a 1-based index"))),
    }
}
