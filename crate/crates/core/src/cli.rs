//! Command-line front end. [`run`] does all the work and returns the exit
//! code with both output streams, so the binary only prints them.

use std::fmt::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use crate::consistency::{
    check_consistency, check_consistency_fail_fast, explain_mismatch, Mismatch,
};
use crate::ontology::{load_ontology, OntologyGraph};
use crate::oracle::{reachability, DEFAULT_MAX_STEPS};
use crate::protocol::{parse_protocol, print_protocol, ProtocolAst};
use crate::relstore::{load_database, Combine, Database};
use crate::spuriousness::{
    parse_trace, step_verify, verify_all, OracleCheck, SpuriousnessReport, Verdict,
};

pub const EXIT_CLEAN: i32 = 0;
pub const EXIT_FINDINGS: i32 = 1;
pub const EXIT_ERROR: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "ontocheck",
    version,
    about = "Ontology conflict checker for query/answer protocols"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Report ontology-level conflicts between a protocol and the server ontology.
    Check(CheckArgs),
    /// Decide which conflicts the server database can actually reach.
    VerifyDb(VerifyArgs),
    /// Re-verify the conflicts after part of a conversation has run.
    Step(StepArgs),
    /// Parse a protocol and print it in canonical form.
    Parse(ParseArgs),
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, ValueEnum)]
pub enum Format {
    #[default]
    Text,
    Json,
}

#[derive(Debug, Args)]
pub struct CheckArgs {
    #[arg(long)]
    pub server: PathBuf,
    /// Accepted for provenance; the check itself reads only the server ontology.
    #[arg(long)]
    pub client: Option<PathBuf>,
    #[arg(long)]
    pub protocol: PathBuf,
    /// Stop at the first mismatch.
    #[arg(long)]
    pub fail_fast: bool,
    #[arg(long, value_enum, default_value_t)]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub check: CheckArgs,
    #[arg(long)]
    pub db: PathBuf,
    /// OR the relevant branch conditions instead of requiring all path guards.
    #[arg(long)]
    pub paper_disjunction: bool,
    /// Cross-check every verdict against the brute-force executor.
    #[arg(long)]
    pub oracle: bool,
}

#[derive(Debug, Args)]
pub struct StepArgs {
    #[command(flatten)]
    pub verify: VerifyArgs,
    /// JSON array of exchanged answers and branch decisions.
    #[arg(long)]
    pub trace: PathBuf,
}

#[derive(Debug, Args)]
pub struct ParseArgs {
    #[arg(long)]
    pub protocol: PathBuf,
    #[arg(long, value_enum, default_value_t)]
    pub format: Format,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

/// Parses `args` (program name first) and runs the command.
pub fn run<I, T>(args: I) -> Outcome
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() {
                EXIT_ERROR
            } else {
                EXIT_CLEAN
            };
            let text = e.render().to_string();
            return if code == EXIT_CLEAN {
                Outcome {
                    code,
                    stdout: text,
                    stderr: String::new(),
                }
            } else {
                Outcome {
                    code,
                    stdout: String::new(),
                    stderr: text,
                }
            };
        }
    };
    execute(&cli.command)
}

pub fn execute(command: &Command) -> Outcome {
    let mut stderr = String::new();
    let result = match command {
        Command::Check(a) => cmd_check(a, &mut stderr),
        Command::VerifyDb(a) => cmd_verify_db(a, None, &mut stderr),
        Command::Step(a) => cmd_verify_db(&a.verify, Some(&a.trace), &mut stderr),
        Command::Parse(a) => cmd_parse(a),
    };
    match result {
        Ok((code, stdout)) => Outcome {
            code,
            stdout,
            stderr,
        },
        Err(e) => {
            let _ = writeln!(stderr, "error: {e:#}");
            Outcome {
                code: EXIT_ERROR,
                stdout: String::new(),
                stderr,
            }
        }
    }
}

fn read(path: &Path) -> anyhow::Result<String> {
    std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}

fn ontology(path: &Path) -> anyhow::Result<OntologyGraph> {
    load_ontology(path).with_context(|| format!("ontology {}", path.display()))
}

fn protocol(path: &Path) -> anyhow::Result<ProtocolAst> {
    parse_protocol(&read(path)?).with_context(|| format!("protocol {}", path.display()))
}

struct Loaded {
    server: Arc<OntologyGraph>,
    protocol: ProtocolAst,
    mismatches: Vec<Mismatch>,
}

fn load(a: &CheckArgs, stderr: &mut String) -> anyhow::Result<Loaded> {
    let server = Arc::new(ontology(&a.server)?);
    if let Some(path) = &a.client {
        let client = ontology(path)?;
        let _ = writeln!(
            stderr,
            "client ontology: {} ({} classes)",
            path.display(),
            client.len()
        );
    }
    let protocol = protocol(&a.protocol)?;
    let mismatches = if a.fail_fast {
        check_consistency_fail_fast(&protocol, &server)
    } else {
        check_consistency(&protocol, &server)
    };
    Ok(Loaded {
        server,
        protocol,
        mismatches,
    })
}

fn inputs(a: &CheckArgs, db: Option<&Path>) -> serde_json::Value {
    let mut v = json!({
        "server": a.server.display().to_string(),
        "protocol": a.protocol.display().to_string(),
    });
    if let Some(c) = &a.client {
        v["client"] = json!(c.display().to_string());
    }
    if let Some(d) = db {
        v["db"] = json!(d.display().to_string());
    }
    v
}

fn mismatch_text(mismatches: &[Mismatch], server: &OntologyGraph) -> String {
    let mut out = String::new();
    if mismatches.is_empty() {
        out.push_str("no conflicts\n");
    }
    for m in mismatches {
        let message = explain_mismatch(m, server)
            .map(|e| e.message)
            .unwrap_or_else(|e| e.to_string());
        let _ = writeln!(
            out,
            "{} {:?} at {}: {message}",
            m.query(),
            m.kind(),
            m.path()
        );
    }
    out
}

fn cmd_check(a: &CheckArgs, stderr: &mut String) -> anyhow::Result<(i32, String)> {
    let l = load(a, stderr)?;
    let code = if l.mismatches.is_empty() {
        EXIT_CLEAN
    } else {
        EXIT_FINDINGS
    };
    let out = match a.format {
        Format::Text => mismatch_text(&l.mismatches, &l.server),
        Format::Json => pretty(&json!({
            "inputs": inputs(a, None),
            "mismatches": l.mismatches.iter().map(Mismatch::to_json).collect::<Vec<_>>(),
        })),
    };
    Ok((code, out))
}

fn cmd_verify_db(
    a: &VerifyArgs,
    trace: Option<&Path>,
    stderr: &mut String,
) -> anyhow::Result<(i32, String)> {
    let l = load(&a.check, stderr)?;
    let db = load_database(&a.db, l.server.clone())
        .with_context(|| format!("database {}", a.db.display()))?;
    let mode = if a.paper_disjunction {
        Combine::Disjunction
    } else {
        Combine::Conjunction
    };
    let mut report = match trace {
        None => verify_all(&l.protocol, &db, &l.mismatches, mode)?,
        Some(path) => {
            let trace =
                parse_trace(&read(path)?).with_context(|| format!("trace {}", path.display()))?;
            step_verify(&l.protocol, &db, &l.mismatches, &trace, mode)?
        }
    };
    if a.oracle {
        cross_check(&mut report, &l.protocol, &db)?;
    }
    let code = if report.realizable().next().is_some() {
        EXIT_FINDINGS
    } else {
        EXIT_CLEAN
    };
    let out = match a.check.format {
        Format::Text => {
            let mut s = mismatch_text(&l.mismatches, &l.server);
            s.push_str(&report.to_text());
            s
        }
        Format::Json => pretty(&json!({
            "inputs": inputs(&a.check, Some(&a.db)),
            "mismatches": l.mismatches.iter().map(Mismatch::to_json).collect::<Vec<_>>(),
            "verdicts": report,
        })),
    };
    if report
        .verdicts
        .iter()
        .any(|v| v.oracle.is_some_and(|o| !o.agrees && !o.truncated))
    {
        let _ = writeln!(stderr, "{out}");
        bail!("a verdict disagrees with the brute-force executor");
    }
    Ok((code, out))
}

fn cross_check(
    report: &mut SpuriousnessReport,
    p: &ProtocolAst,
    db: &Database,
) -> anyhow::Result<()> {
    for v in &mut report.verdicts {
        let (reachable, truncated) = reachability(p, db, v.query, DEFAULT_MAX_STEPS)?;
        v.oracle = Some(OracleCheck {
            reachable,
            agrees: !truncated && reachable == (v.verdict == Verdict::Realizable),
            truncated,
        });
    }
    Ok(())
}

fn cmd_parse(a: &ParseArgs) -> anyhow::Result<(i32, String)> {
    let p = protocol(&a.protocol)?;
    Ok((
        EXIT_CLEAN,
        match a.format {
            Format::Text => print_protocol(&p),
            Format::Json => pretty(&serde_json::to_value(&p)?),
        },
    ))
}

fn pretty(v: &serde_json::Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("json value serializes");
    s.push('\n');
    s
}
