//! Command-line front end for the subset projection checker.
//!
//! [`run_command`] executes one [`RunConfig`] against caller-supplied
//! streams and returns the process exit code: 0 when every protocol is
//! implementable, 1 when one is not, 2 on usage, input or parse errors.

mod report;

use std::fmt::Write as _;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use subproj_core::automata::{build_gaut, erase, format_trace};
use subproj_core::corpus;
use subproj_core::csm::ExploreOptions;
use subproj_core::dot::subset_machine_to_dot;
use subproj_core::oracle::generate_gk;
use subproj_core::projection::subset_construction_from;
use subproj_core::validity::{check_implementability_with, CheckOptions};
use subproj_core::{Csm, Error, GlobalType, SubsetMachine, Verdict};

use report::*;

pub const EXIT_IMPLEMENTABLE: i32 = 0;
pub const EXIT_NOT_IMPLEMENTABLE: i32 = 1;
pub const EXIT_INPUT_ERROR: i32 = 2;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, ValueEnum)]
pub enum Format {
    #[default]
    Text,
    Json,
    Dot,
}

#[derive(Clone, Debug, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Decide implementability and print a counterexample on failure.
    Check {
        /// Global type files; `-` reads stdin, bundled corpus names also work.
        #[arg(required = true)]
        inputs: Vec<String>,
    },
    /// Print the subset construction of every role.
    Project {
        #[arg(required = true)]
        inputs: Vec<String>,
    },
    /// Explore the CSM of subset constructions and report deadlocks.
    Simulate {
        #[arg(required = true)]
        inputs: Vec<String>,
    },
    /// Check the bundled corpus and print a table with timings.
    Bench,
    /// Print the k-th member of the exponential family.
    GenGk {
        #[arg(value_parser = positive)]
        k: usize,
    },
}

/// One invocation of the tool.
#[derive(Clone, Debug, PartialEq, Eq, Parser)]
#[command(
    name = "subproj",
    version,
    about = "Implementability checking for global types by subset projection"
)]
pub struct RunConfig {
    #[command(subcommand)]
    pub command: Command,
    /// Channel bound for exploration.
    #[arg(long = "bound", global = true, default_value_t = 4, value_parser = positive)]
    pub channel_bound: usize,
    /// Maximal trace length for exploration.
    #[arg(long, global = true, default_value_t = 14, value_parser = positive)]
    pub depth: usize,
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    pub format: Format,
    /// Report every violation, not only the first.
    #[arg(long = "all", global = true)]
    pub all_violations: bool,
    /// Write the output to a file instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

impl RunConfig {
    pub fn new(command: Command) -> Self {
        RunConfig {
            command,
            channel_bound: 4,
            depth: 14,
            format: Format::Text,
            all_violations: false,
            out: None,
        }
    }
}

fn positive(s: &str) -> Result<usize, String> {
    match s.parse::<usize>() {
        Ok(0) => Err("must be at least 1".into()),
        Ok(n) => Ok(n),
        Err(e) => Err(e.to_string()),
    }
}

/// Failure that ends the run with exit code 2.
struct InputError(String);

struct Input {
    label: String,
    name: String,
    source: String,
}

fn load(arg: &str, stdin: &mut dyn Read) -> Result<Input, InputError> {
    let (label, source, stem) = if arg == "-" {
        let mut s = String::new();
        stdin
            .read_to_string(&mut s)
            .map_err(|e| InputError(format!("<stdin>: {e}")))?;
        ("<stdin>".to_string(), s, "stdin".to_string())
    } else if Path::new(arg).exists() {
        let s = std::fs::read_to_string(arg).map_err(|e| InputError(format!("{arg}: {e}")))?;
        let stem = Path::new(arg)
            .file_stem()
            .map_or(arg.to_string(), |s| s.to_string_lossy().into_owned());
        (arg.to_string(), s, stem)
    } else if let Some(entry) = corpus::find(arg) {
        (entry.file.to_string(), entry.source.to_string(), entry.name.to_string())
    } else {
        return Err(InputError(format!("{arg}: no such file or bundled protocol")));
    };
    let name = corpus::header(&source, "name").unwrap_or(stem);
    Ok(Input { label, name, source })
}

fn parse(input: &Input) -> Result<GlobalType, InputError> {
    GlobalType::parse(&input.source).map_err(|e| InputError(format!("{}:{e}", input.label)))
}

fn input_error(label: &str, e: Error) -> InputError {
    match e {
        Error::IllFormed(report) => InputError(format!(
            "{label}: global type is not well-formed\n{}",
            report.to_string().trim_end()
        )),
        other => InputError(format!("{label}: {other}")),
    }
}

fn count(n: usize, noun: &str) -> String {
    if n == 1 {
        format!("1 {noun}")
    } else {
        format!("{n} {noun}s")
    }
}

fn millis(start: Instant) -> f64 {
    start.elapsed().as_secs_f64() * 1000.0
}

fn subset_constructions(g: &GlobalType) -> Vec<SubsetMachine> {
    let gaut = build_gaut(g);
    g.roles()
        .iter()
        .map(|r| subset_construction_from(&erase(&gaut, r)))
        .collect()
}

fn json<T: Serialize>(buf: &mut String, value: &T) {
    buf.push_str(&serde_json::to_string_pretty(value).expect("report serializes"));
    buf.push('\n');
}

/// Runs one command, writing results to `out` (or the configured file) and
/// diagnostics to `err`. Returns the exit code.
pub fn run_command(cfg: &RunConfig, stdin: &mut dyn Read, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let mut buf = String::new();
    let code = match execute(cfg, stdin, &mut buf, err) {
        Ok(code) => code,
        Err(InputError(msg)) => {
            let _ = writeln!(err, "error: {msg}");
            EXIT_INPUT_ERROR
        }
    };
    let written = match &cfg.out {
        Some(path) => std::fs::write(path, &buf),
        None => out.write_all(buf.as_bytes()).and_then(|_| out.flush()),
    };
    if let Err(e) = written {
        let _ = writeln!(err, "error: cannot write output: {e}");
        return EXIT_INPUT_ERROR;
    }
    code
}

fn execute(cfg: &RunConfig, stdin: &mut dyn Read, buf: &mut String, err: &mut dyn Write) -> Result<i32, InputError> {
    match &cfg.command {
        Command::Check { inputs } => each_input(inputs, stdin, buf, cfg, check),
        Command::Project { inputs } => each_input(inputs, stdin, buf, cfg, project),
        Command::Simulate { inputs } => {
            if cfg.format == Format::Dot {
                return Err(InputError("simulate supports text and json output".into()));
            }
            each_input(inputs, stdin, buf, cfg, simulate)
        }
        Command::Bench => bench(cfg, buf),
        Command::GenGk { k } => gen_gk(cfg, *k, buf, err),
    }
}

type Runner = fn(&RunConfig, &Input, &mut String) -> Result<i32, InputError>;

/// Runs `f` on every input. JSON results for several inputs are collected
/// into an array.
fn each_input(
    inputs: &[String],
    stdin: &mut dyn Read,
    buf: &mut String,
    cfg: &RunConfig,
    f: Runner,
) -> Result<i32, InputError> {
    let loaded = inputs
        .iter()
        .map(|arg| load(arg, stdin))
        .collect::<Result<Vec<_>, _>>()?;
    let mut code = EXIT_IMPLEMENTABLE;
    let mut parts = Vec::new();
    for input in &loaded {
        let mut part = String::new();
        code = code.max(f(cfg, input, &mut part)?);
        parts.push(part);
    }
    if cfg.format == Format::Json && parts.len() > 1 {
        let values: Vec<serde_json::Value> = parts
            .iter()
            .map(|p| serde_json::from_str(p).expect("valid json"))
            .collect();
        json(buf, &values);
    } else {
        buf.push_str(&parts.join("\n"));
    }
    Ok(code)
}

fn exit_code(v: &Verdict) -> i32 {
    if v.implementable {
        EXIT_IMPLEMENTABLE
    } else {
        EXIT_NOT_IMPLEMENTABLE
    }
}

fn check(cfg: &RunConfig, input: &Input, buf: &mut String) -> Result<i32, InputError> {
    if cfg.format == Format::Dot {
        return Err(InputError(
            "check supports text and json output; use project for dot".into(),
        ));
    }
    let t = Instant::now();
    let g = parse(input)?;
    let parse_ms = millis(t);
    let t = Instant::now();
    let machines = subset_constructions(&g);
    let project_ms = millis(t);
    let options = CheckOptions {
        all_violations: cfg.all_violations,
    };
    let t = Instant::now();
    let verdict = check_implementability_with(&g, &options).map_err(|e| input_error(&input.label, e))?;
    let check_ms = millis(t);

    match cfg.format {
        Format::Json => json(
            buf,
            &CheckReport {
                schema: SCHEMA,
                protocol: Protocol::new(&input.name, &g),
                verdict: VerdictJson::new(&verdict, cfg.all_violations),
                projections: verdict
                    .projections()
                    .unwrap_or_default()
                    .iter()
                    .map(MachineJson::from)
                    .collect(),
                timings: Timings {
                    parse_ms,
                    project_ms,
                    check_ms,
                },
            },
        ),
        _ => {
            let roles: Vec<String> = g.roles().iter().map(|r| r.to_string()).collect();
            let status = if verdict.implementable {
                "implementable"
            } else {
                "not implementable"
            };
            let _ = writeln!(buf, "{}: {status}", input.name);
            let _ = writeln!(buf, "  size {}, roles {}", g.measure_size(), roles.join(", "));
            if verdict.implementable {
                for m in &machines {
                    let _ = writeln!(
                        buf,
                        "  {}: {}, {}",
                        m.role(),
                        count(m.len(), "state"),
                        count(m.transition_count(), "transition")
                    );
                }
            } else if cfg.all_violations {
                for v in &verdict.all_violations {
                    let _ = writeln!(buf, "  {v}");
                }
            } else if let Some(v) = &verdict.violation {
                let _ = writeln!(buf, "  {v}");
            }
            if let Some(trace) = verdict.counterexample_text() {
                let _ = writeln!(buf, "  counterexample: {trace}");
            }
        }
    }
    Ok(exit_code(&verdict))
}

fn project(cfg: &RunConfig, input: &Input, buf: &mut String) -> Result<i32, InputError> {
    let g = parse(input)?;
    let verdict =
        check_implementability_with(&g, &CheckOptions::default()).map_err(|e| input_error(&input.label, e))?;
    match cfg.format {
        Format::Json => json(
            buf,
            &ProjectReport {
                schema: SCHEMA,
                protocol: Protocol::new(&input.name, &g),
                implementable: verdict.implementable,
                projections: verdict.machines.iter().map(MachineJson::from).collect(),
            },
        ),
        Format::Dot => {
            for m in &verdict.machines {
                buf.push_str(&subset_machine_to_dot(m));
            }
        }
        Format::Text => {
            if !verdict.implementable {
                let _ = writeln!(
                    buf,
                    "// {}: not implementable, showing the subset constructions",
                    input.name
                );
            }
            for m in &verdict.machines {
                let finals: Vec<String> = m.final_states().map(|s| s.to_string()).collect();
                let _ = writeln!(
                    buf,
                    "role {}: {} states, final {{{}}}",
                    m.role(),
                    m.len(),
                    finals.join(", ")
                );
                for (i, s) in m.states().iter().enumerate() {
                    let _ = writeln!(buf, "  state {i} = {s}");
                }
                for (s, e, t) in m.transitions() {
                    let _ = writeln!(buf, "  {s} --{e}--> {t}");
                }
            }
        }
    }
    Ok(exit_code(&verdict))
}

fn simulate(cfg: &RunConfig, input: &Input, buf: &mut String) -> Result<i32, InputError> {
    let g = parse(input)?;
    let report = subproj_core::syntax::validate_well_formedness(&g);
    if !report.is_well_formed() {
        return Err(input_error(&input.label, Error::IllFormed(report)));
    }
    let csm = Csm::new(subset_constructions(&g));
    let explored = csm.explore_with(&ExploreOptions {
        channel_bound: cfg.channel_bound,
        depth: cfg.depth,
        retain_traces: false,
    });
    match cfg.format {
        Format::Json => json(
            buf,
            &SimulateReport {
                schema: SCHEMA,
                protocol: Protocol::new(&input.name, &g),
                exploration: Exploration {
                    channel_bound: cfg.channel_bound,
                    depth: cfg.depth,
                    visited: explored.visited,
                    frontier_cut: explored.frontier_cut,
                    deadlocks: explored.deadlocks.iter().map(|d| DeadlockJson::new(&csm, d)).collect(),
                },
            },
        ),
        _ => {
            let _ = writeln!(
                buf,
                "{}: {} configurations within depth {} and channel bound {}{}",
                input.name,
                explored.visited,
                cfg.depth,
                cfg.channel_bound,
                if explored.frontier_cut { " (cut off)" } else { "" }
            );
            if explored.deadlocks.is_empty() {
                let _ = writeln!(buf, "  no deadlocks");
            }
            for d in &explored.deadlocks {
                let _ = writeln!(buf, "  deadlock after {}", format_trace(&d.trace));
                let _ = writeln!(buf, "    {}", csm.describe(&d.configuration));
            }
        }
    }
    Ok(if explored.deadlocks.is_empty() {
        EXIT_IMPLEMENTABLE
    } else {
        EXIT_NOT_IMPLEMENTABLE
    })
}

fn bench(cfg: &RunConfig, buf: &mut String) -> Result<i32, InputError> {
    let mut rows = Vec::new();
    let mut timings = Vec::new();
    for entry in corpus::ENTRIES {
        let t = Instant::now();
        let g = GlobalType::parse(entry.source).map_err(|e| InputError(format!("{}:{e}", entry.file)))?;
        let parse_ms = millis(t);
        let t = Instant::now();
        let machines = subset_constructions(&g);
        let project_ms = millis(t);
        let t = Instant::now();
        let verdict =
            check_implementability_with(&g, &CheckOptions::default()).map_err(|e| input_error(entry.file, e))?;
        let check_ms = millis(t);
        let found = match &verdict.violation {
            None => corpus::Expected::Implementable,
            Some(v) if v.kind == subproj_core::ViolationKind::SendValidity => corpus::Expected::SendValidity,
            Some(_) => corpus::Expected::ReceiveValidity,
        };
        rows.push(BenchRow {
            name: entry.name.to_string(),
            file: entry.file.to_string(),
            size: g.measure_size(),
            roles: g.roles().len(),
            expected: entry.expected.to_string(),
            verdict: found.to_string(),
            agrees: found == entry.expected,
            counterexample: verdict.counterexample_text(),
            projection_states: machines.iter().map(SubsetMachine::len).sum(),
        });
        timings.push(BenchTiming {
            name: entry.name.to_string(),
            timings: Timings {
                parse_ms,
                project_ms,
                check_ms,
            },
        });
    }
    let all_agree = rows.iter().all(|r| r.agrees);
    match cfg.format {
        Format::Json => json(
            buf,
            &BenchReport {
                schema: SCHEMA,
                protocols: rows,
                timings,
            },
        ),
        _ => {
            let _ = writeln!(
                buf,
                "{:<34} {:>5} {:>5} {:>7} {:<18} {:>9}",
                "protocol", "size", "roles", "states", "verdict", "time (ms)"
            );
            for (row, t) in rows.iter().zip(&timings) {
                let mark = if row.verdict == "implementable" {
                    "✓".to_string()
                } else {
                    format!("× {}", row.verdict)
                };
                let flag = if row.agrees { "" } else { "  (expected differs)" };
                let total = t.timings.parse_ms + t.timings.project_ms + t.timings.check_ms;
                let _ = writeln!(
                    buf,
                    "{:<34} {:>5} {:>5} {:>7} {:<18} {:>9.3}{flag}",
                    row.name, row.size, row.roles, row.projection_states, mark, total
                );
            }
        }
    }
    Ok(if all_agree {
        EXIT_IMPLEMENTABLE
    } else {
        EXIT_NOT_IMPLEMENTABLE
    })
}

fn gen_gk(cfg: &RunConfig, k: usize, buf: &mut String, err: &mut dyn Write) -> Result<i32, InputError> {
    let g = generate_gk(k);
    let name = format!("G_{k}");
    match cfg.format {
        Format::Json => json(
            buf,
            &GkReport {
                schema: SCHEMA,
                protocol: Protocol::new(&name, &g),
                global_type: g.pretty(),
            },
        ),
        Format::Text => {
            let _ = writeln!(buf, "// name: {name}");
            let _ = writeln!(buf, "// expected: implementable");
            let _ = writeln!(buf, "{}", g.pretty());
        }
        Format::Dot => return Err(InputError("gen-gk supports text and json output".into())),
    }
    if let Some(path) = &cfg.out {
        let _ = writeln!(err, "wrote {name} to {}", path.display());
    }
    Ok(EXIT_IMPLEMENTABLE)
}
