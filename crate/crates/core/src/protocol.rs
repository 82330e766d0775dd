//! Line protocol for running an assistant as a child process.
//!
//! A request is three lines: `slot=path` bindings separated by commas, a
//! command (`best`, `choices` or `apply`) and the interaction set with
//! constraints joined by `/`. Every response ends with a blank line.

use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::Arc;

use crate::assistant::{ChoiceView, DynAssistant};
use crate::error::{Error, Result};
use crate::grammar::decode_arg;
use crate::table::write_csv;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Best,
    Choices,
    Apply,
}

impl Command {
    pub fn as_str(self) -> &'static str {
        match self {
            Command::Best => "best",
            Command::Choices => "choices",
            Command::Apply => "apply",
        }
    }
}

impl FromStr for Command {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "best" => Ok(Command::Best),
            "choices" => Ok(Command::Choices),
            "apply" => Ok(Command::Apply),
            other => Err(Error::Protocol(format!("unknown command `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Request {
    pub bindings: Vec<(String, String)>,
    pub command: Command,
    pub constraints: Vec<String>,
}

fn encode_binding_part(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '%' => out.push_str("%25"),
            ',' => out.push_str("%2C"),
            '=' => out.push_str("%3D"),
            '\n' => out.push_str("%0A"),
            '\r' => out.push_str("%0D"),
            other => out.push(other),
        }
    }
    out
}

pub fn encode_bindings(bindings: &[(String, String)]) -> String {
    bindings
        .iter()
        .map(|(k, v)| format!("{}={}", encode_binding_part(k), encode_binding_part(v)))
        .collect::<Vec<_>>()
        .join(",")
}

pub fn decode_bindings(line: &str) -> Result<Vec<(String, String)>> {
    if line.trim().is_empty() {
        return Ok(Vec::new());
    }
    line.split(',')
        .map(|pair| {
            let (k, v) = pair
                .split_once('=')
                .ok_or_else(|| Error::Protocol(format!("malformed binding `{pair}`")))?;
            let k = decode_arg(k.trim()).map_err(|e| Error::Protocol(e.to_string()))?;
            let v = decode_arg(v).map_err(|e| Error::Protocol(e.to_string()))?;
            if k.is_empty() {
                return Err(Error::Protocol(format!("malformed binding `{pair}`")));
            }
            Ok((k, v))
        })
        .collect()
}

/// Joins constraints with `/`. Fails if a constraint would break framing.
pub fn encode_interactions(h: &[String]) -> Result<String> {
    for c in h {
        if c.is_empty() || c.contains(['/', '\n', '\r']) {
            return Err(Error::Protocol(format!("constraint `{c}` cannot be framed")));
        }
    }
    Ok(h.join("/"))
}

pub fn decode_interactions(line: &str) -> Vec<String> {
    line.split('/')
        .map(str::trim)
        .filter(|c| !c.is_empty())
        .map(str::to_string)
        .collect()
}

pub fn encode_request(req: &Request) -> Result<String> {
    Ok(format!(
        "{}\n{}\n{}\n",
        encode_bindings(&req.bindings),
        req.command.as_str(),
        encode_interactions(&req.constraints)?
    ))
}

pub fn decode_request(lines: [&str; 3]) -> Result<Request> {
    Ok(Request {
        bindings: decode_bindings(lines[0])?,
        command: lines[1].parse()?,
        constraints: decode_interactions(lines[2]),
    })
}

pub fn encode_choices(choices: &[ChoiceView]) -> Result<String> {
    let mut out = String::new();
    for c in choices {
        if c.label.contains(['\n', '\r']) {
            return Err(Error::Protocol(format!("label `{}` spans lines", c.label)));
        }
        out.push_str(&c.label);
        out.push('\n');
        out.push_str(&encode_interactions(&c.next)?);
        out.push('\n');
    }
    out.push('\n');
    Ok(out)
}

/// Parses a choices response. Reading stops at the blank terminator.
pub fn decode_choices(text: &str) -> Result<Vec<ChoiceView>> {
    let mut lines = text.lines();
    let mut out = Vec::new();
    loop {
        match lines.next() {
            None => return Err(Error::Protocol("unterminated choices response".into())),
            Some("") => return Ok(out),
            Some(label) => {
                let next = lines
                    .next()
                    .ok_or_else(|| Error::Protocol("choice without interaction line".into()))?;
                out.push(ChoiceView {
                    label: label.to_string(),
                    next: decode_interactions(next),
                });
            }
        }
    }
}

/// Builds the assistant for a request's bindings.
pub type Opener<'a> = dyn FnMut(&[(String, String)]) -> Result<Arc<dyn DynAssistant>> + 'a;

type Cached = (Vec<(String, String)>, Arc<dyn DynAssistant>);

pub struct Server<'a> {
    open: Box<Opener<'a>>,
    out_dir: PathBuf,
    cached: Option<Cached>,
    written: usize,
}

impl<'a> Server<'a> {
    pub fn new(
        open: impl FnMut(&[(String, String)]) -> Result<Arc<dyn DynAssistant>> + 'a,
        out_dir: impl Into<PathBuf>,
    ) -> Self {
        Server {
            open: Box::new(open),
            out_dir: out_dir.into(),
            cached: None,
            written: 0,
        }
    }

    fn assistant(&mut self, bindings: &[(String, String)]) -> Result<Arc<dyn DynAssistant>> {
        if let Some((b, a)) = &self.cached {
            if b == bindings {
                return Ok(a.clone());
            }
        }
        let a = (self.open)(bindings)?;
        self.cached = Some((bindings.to_vec(), a.clone()));
        Ok(a)
    }

    fn output_path(&mut self) -> PathBuf {
        self.written += 1;
        self.out_dir
            .join(format!("output-{}-{}.csv", std::process::id(), self.written))
    }

    /// Answers one request. The returned text includes the blank terminator.
    pub fn respond(&mut self, req: &Request) -> Result<String> {
        let a = self.assistant(&req.bindings)?;
        match req.command {
            Command::Best => {
                let mut out = String::new();
                for line in a.best_script(&req.constraints)? {
                    out.push_str(&line);
                    out.push('\n');
                }
                out.push('\n');
                Ok(out)
            }
            Command::Choices => encode_choices(&a.choice_list(&req.constraints)?),
            Command::Apply => {
                let rec = a.recommend(&req.constraints, 0)?;
                let path = self.output_path();
                write_csv(&rec.output, &path)?;
                Ok(format!("{}\n\n", path.display()))
            }
        }
    }

    /// Serves requests until end of input. Only I/O failures end the loop.
    pub fn run(&mut self, input: impl BufRead, mut output: impl Write) -> Result<()> {
        let mut lines = input.lines();
        loop {
            let mut frame = Vec::with_capacity(3);
            for _ in 0..3 {
                match lines.next() {
                    Some(line) => frame.push(line?),
                    None => break,
                }
            }
            if frame.is_empty() {
                return Ok(());
            }
            let reply = if frame.len() < 3 {
                Err(Error::Protocol("truncated request".into()))
            } else {
                let frame: Vec<&str> = frame.iter().map(|l| l.trim_end_matches('\r')).collect();
                decode_request([frame[0], frame[1], frame[2]]).and_then(|req| self.respond(&req))
            };
            match reply {
                Ok(text) => output.write_all(text.as_bytes())?,
                Err(e) => {
                    let msg = e.to_string().replace(['\n', '\r'], " ");
                    write!(output, "error: {msg}\n\n")?;
                }
            }
            output.flush()?;
            if frame.len() < 3 {
                return Ok(());
            }
        }
    }
}

/// Serves `input` against `open`, writing apply outputs under `out_dir`.
pub fn run_loop(
    open: impl FnMut(&[(String, String)]) -> Result<Arc<dyn DynAssistant>>,
    input: impl BufRead,
    output: impl Write,
    out_dir: &Path,
) -> Result<()> {
    Server::new(open, out_dir).run(input, output)
}
