//! Command-line front end. `main` forwards to [`run`].

use std::ffi::OsString;
use std::io::{BufRead, Write};
use std::net::{IpAddr, SocketAddr};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::error::{Error, Result};
use crate::eval::{self, Report, Suite};
use crate::protocol::Server;
use crate::registry::{self, Bindings};
use crate::session::{ReplayScript, Session, Settings};
use crate::table::{write_csv, Preview};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_CONFLICT: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "wrangle", version, about = "Interactive data wrangling assistants")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Reconcile an input table with a reference table.
    Datadiff(RunArgs),
    /// Detect the delimiter, quote and escape characters of a CSV file.
    #[command(name = "csv-dialect")]
    CsvDialect(RunArgs),
    /// Infer a column's type, missing values and anomalies.
    Ptype(RunArgs),
    /// Assign a catalog class to a column.
    #[command(name = "semantic-type")]
    SemanticType(RunArgs),
    /// Remove outlying values of a numeric column.
    Outlier(RunArgs),
    /// Remove aggregate rows that produce outliers.
    #[command(name = "outlier-aggregate")]
    OutlierAggregate(RunArgs),
    /// List the available assistants.
    List,
    /// Run the HTTP service.
    Serve(ServeArgs),
    /// Answer line-protocol requests on standard input.
    Stdio(StdioArgs),
    /// Count simulated interactions on synthetic cases.
    Eval(EvalArgs),
}

#[derive(Debug, Args)]
struct RunArgs {
    #[arg(long, required_unless_present = "replay")]
    input: Option<PathBuf>,
    #[arg(long)]
    reference: Option<PathBuf>,
    /// Tab-separated `type<TAB>value` lines for semantic-type.
    #[arg(long)]
    gazetteer: Option<PathBuf>,
    /// Constraint to add, in order. Repeatable.
    #[arg(long = "constraint", short = 'c')]
    constraints: Vec<String>,
    #[arg(long, short = 'i')]
    interactive: bool,
    /// Replay a recorded session before applying `--constraint`s.
    #[arg(long)]
    replay: Option<PathBuf>,
    /// Record the session for `--replay`.
    #[arg(long)]
    record: Option<PathBuf>,
    /// Write the expression script here.
    #[arg(long)]
    emit_script: Option<PathBuf>,
    /// Write the cleaned table here.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    preview_rows: Option<usize>,
    /// Target column by name or 1-based index.
    #[arg(long)]
    column: Option<String>,
    /// Outlier threshold in standard deviations.
    #[arg(long)]
    m: Option<f64>,
}

#[derive(Debug, Args)]
struct ServeArgs {
    #[arg(long, env = "WRANGLE_PORT", default_value_t = crate::service::DEFAULT_PORT)]
    port: u16,
    #[arg(long, default_value = "127.0.0.1")]
    host: IpAddr,
    #[arg(long, env = "WRANGLE_DATA_DIR")]
    data_dir: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct StdioArgs {
    assistant: String,
    /// Directory for `apply` outputs.
    #[arg(long, default_value_os_t = std::env::temp_dir())]
    out_dir: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    column: Option<String>,
    #[arg(long)]
    m: Option<f64>,
}

#[derive(Debug, Args)]
struct EvalArgs {
    /// datadiff, datadiff-structural, csv-dialect or ptype.
    #[arg(long)]
    assistant: String,
    #[arg(long, default_value_t = 100)]
    cases: usize,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    #[arg(long, default_value_t = eval::DEFAULT_CAP)]
    cap: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn exit_code(e: &Error) -> i32 {
    if e.is_conflict() {
        EXIT_CONFLICT
    } else {
        EXIT_FAILURE
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn run(
    args: impl IntoIterator<Item = impl Into<OsString> + Clone>,
    input: &mut dyn BufRead,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> i32 {
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_FAILURE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() {
                err.write_all(text.as_bytes())
            } else {
                out.write_all(text.as_bytes())
            };
            return code;
        }
    };
    let result = match cli.command {
        Command::Datadiff(a) => assistant("datadiff", a, input, out, err),
        Command::CsvDialect(a) => assistant("csv-dialect", a, input, out, err),
        Command::Ptype(a) => assistant("ptype", a, input, out, err),
        Command::SemanticType(a) => assistant("semantic-type", a, input, out, err),
        Command::Outlier(a) => assistant("outlier", a, input, out, err),
        Command::OutlierAggregate(a) => assistant("outlier-aggregate", a, input, out, err),
        Command::List => list(out).map(|_| EXIT_OK),
        Command::Serve(a) => serve(a).map(|_| EXIT_OK),
        Command::Stdio(a) => stdio(a, input, out).map(|_| EXIT_OK),
        Command::Eval(a) => run_eval(a, out).map(|_| EXIT_OK),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            exit_code(&e)
        }
    }
}

fn list(out: &mut dyn Write) -> Result<()> {
    for d in registry::descriptors() {
        writeln!(
            out,
            "{:<18} {} (inputs: {})",
            d.id,
            d.display_name,
            d.input_slots.join(", ")
        )?;
    }
    Ok(())
}

fn settings(a: &RunArgs) -> Settings {
    Settings {
        seed: a.seed,
        preview_rows: a.preview_rows,
        column: a.column.clone(),
        m: a.m,
    }
}

fn bindings(a: &RunArgs) -> Bindings {
    let mut b = Vec::new();
    for (slot, path) in [
        ("input", &a.input),
        ("reference", &a.reference),
        ("gazetteer", &a.gazetteer),
    ] {
        if let Some(p) = path {
            b.push((slot.to_string(), p.clone()));
        }
    }
    b
}

fn open_session(id: &str, a: &RunArgs) -> Result<Session> {
    match &a.replay {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            let mut script = ReplayScript::from_json(&text)?;
            if script.assistant != id {
                return Err(Error::InvalidData(format!(
                    "replay script is for `{}`, not `{id}`",
                    script.assistant
                )));
            }
            let overrides = settings(a);
            if !overrides.is_empty() {
                script.settings = overrides;
            }
            Session::from_replay(&script)
        }
        None => Session::init(id, bindings(a), settings(a)),
    }
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn assistant(id: &str, a: RunArgs, input: &mut dyn BufRead, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32> {
    let mut s = open_session(id, &a)?;
    for c in &a.constraints {
        s.constrain(c)?;
    }
    if a.interactive && !interact(&mut s, input, out)? {
        if let Some(path) = &a.record {
            write_file(path, &s.replay_script().to_json())?;
        }
        return Ok(EXIT_FAILURE);
    }
    let rec = s.step()?.clone();
    for w in &rec.warnings {
        writeln!(err, "warning: {w}")?;
    }
    let result = s.accept()?;
    out.write_all(result.script_text.as_bytes())?;
    if !a.interactive && !rec.notes.is_empty() {
        writeln!(out)?;
        for n in &rec.notes {
            writeln!(out, "{n}")?;
        }
    }
    if let Some(path) = &a.emit_script {
        write_file(path, &result.script_text)?;
    }
    if let Some(path) = &a.out {
        write_csv(&result.output, path)?;
    }
    if let Some(path) = &a.record {
        write_file(path, &s.replay_script().to_json())?;
    }
    Ok(EXIT_OK)
}

pub fn render_preview(p: &Preview) -> String {
    let mut rows: Vec<Vec<String>> = vec![p.header.clone()];
    if let Some(badges) = &p.badges {
        rows.push(badges.iter().map(|b| format!("[{}]", b.label)).collect());
    }
    rows.extend(p.rows.iter().cloned());
    let width = rows.iter().map(Vec::len).max().unwrap_or(0);
    let widths: Vec<usize> = (0..width)
        .map(|k| {
            rows.iter()
                .filter_map(|r| r.get(k))
                .map(|c| c.chars().count().min(24))
                .max()
                .unwrap_or(0)
        })
        .collect();
    let mut out = String::new();
    for r in &rows {
        let cells: Vec<String> = (0..width)
            .map(|k| {
                let c: String = r.get(k).map(|c| c.chars().take(24).collect()).unwrap_or_default();
                format!("{c:<w$}", w = widths[k])
            })
            .collect();
        out.push_str(cells.join("  ").trim_end());
        out.push('\n');
    }
    out
}

/// Terminal loop. Returns true once the analyst accepts.
fn interact(s: &mut Session, input: &mut dyn BufRead, out: &mut dyn Write) -> Result<bool> {
    loop {
        let rec = {
            let r = s.step()?;
            r.clone()
        };
        writeln!(out, "{}", render_preview(&rec.preview))?;
        for line in &rec.script {
            writeln!(out, "  {line}")?;
        }
        for w in &rec.warnings {
            writeln!(out, "  warning: {w}")?;
        }
        writeln!(out)?;
        for (k, c) in rec.choices.iter().enumerate() {
            writeln!(out, "{:>3}. {}", k + 1, c.label)?;
        }
        writeln!(
            out,
            "Enter a choice number, `a` to accept, `c <constraint>` or `q` to quit."
        )?;
        loop {
            write!(out, "> ")?;
            out.flush()?;
            let mut line = String::new();
            if input.read_line(&mut line)? == 0 {
                return Ok(false);
            }
            let line = line.trim();
            let outcome = match line {
                "a" => return Ok(true),
                "q" => return Ok(false),
                "" => continue,
                _ => {
                    if let Some(c) = line.strip_prefix("c ") {
                        s.constrain(c.trim())
                    } else {
                        match line.parse::<usize>() {
                            Ok(k) if k >= 1 => s.select(k - 1),
                            _ => Err(Error::InvalidData(format!("unrecognized input `{line}`"))),
                        }
                    }
                }
            };
            match outcome {
                Ok(()) => break,
                Err(e) => writeln!(out, "error: {e}")?,
            }
        }
    }
}

fn serve(a: ServeArgs) -> Result<()> {
    let rt = tokio::runtime::Builder::new_multi_thread().enable_all().build()?;
    rt.block_on(crate::service::serve(SocketAddr::new(a.host, a.port), a.data_dir))
}

fn stdio(a: StdioArgs, input: &mut dyn BufRead, out: &mut dyn Write) -> Result<()> {
    let id = a.assistant.clone();
    if registry::descriptor(&id).is_none() {
        return Err(Error::UnknownAssistant(id));
    }
    let opts = Settings {
        seed: a.seed,
        preview_rows: None,
        column: a.column.clone(),
        m: a.m,
    }
    .options();
    let mut server = Server::new(
        move |b: &[(String, String)]| {
            let bindings: Bindings = b.iter().map(|(k, v)| (k.clone(), PathBuf::from(v))).collect();
            registry::build(&id, &bindings, &opts)
        },
        a.out_dir,
    );
    server.run(input, out)
}

fn run_eval(a: EvalArgs, out: &mut dyn Write) -> Result<()> {
    let suite: Suite = a.assistant.parse()?;
    let traces = eval::run(suite, a.cases, a.seed, a.cap)?;
    let report = Report::new(&traces);
    writeln!(out, "{report}")?;
    if let Some(path) = &a.out {
        write_file(path, &report.to_csv(&a.assistant))?;
    }
    Ok(())
}
