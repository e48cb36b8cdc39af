//! `reduchain`: simulate, reduce, validate and solve along the chain from
//! two-counter machines to semi-unification.
//!
//! Exit codes: 0 success or true, 1 false or absent, 2 usage or parse error,
//! 3 validation abort.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};
use thiserror::Error;

use reduchain::cm1::{cm1_halting, cm1_run_from, cm1_step, parse_cm1, reduce_mm2_to_cm1, render_cm1, Cm1Config, Cm1Outcome};
use reduchain::cssm::{
    check_local_confluence_bounded, check_reverse_closure, check_simple, parse_cssm, render_cssm, shorten_to_simple,
};
use reduchain::hooper::{compile_cm1_to_smx, flatten_smx_to_smn, render_provenance, render_smx};
use reduchain::mm2::{mm2_run, mm2_step, parse_mm2, Mm2Config, Mm2Outcome};
use reduchain::pipeline::{reduce_all, verdict_name, write_artifacts, Target};
use reduchain::semiu::{
    bounded_solve_lu2_in, bounded_solve_ru2_in, bounded_solve_ssu_in, check_lu2_solution, check_ru2_solution,
    check_ssu_solution, parse_lu2, parse_ru2, parse_ssu, parse_su, parse_triple, reduce_cssm_to_ssu,
    reduce_ru2_to_lu2, reduce_ru2_to_semiu, reduce_ssu_to_ru2, render_lu2, render_ru2, render_ssu, render_su,
    render_triple, SolutionTriple,
};
use reduchain::smn::{
    check_deterministic, check_length_preserving, parse_config, parse_smn, probe_uniform_bound, profile_verdict,
    render_smn, smn_successors, smn_trajectory, SmnError,
};
use reduchain::term::{bounded_solve_su_in, check_su_solution, parse_substitution, render_substitution, Names};
use reduchain::Mm2Machine;

/// Output directory used by `reduce` when `--out` is absent.
const OUT_ENV: &str = "REDUCHAIN_OUT";

#[derive(Parser)]
#[command(name = "reduchain", version, about = "Reduction chain from two-counter machines to semi-unification")]
struct Cli {
    /// Print one JSON document instead of text.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run a machine from a configuration.
    Simulate {
        model: Model,
        #[arg(long)]
        input: PathBuf,
        /// mm2: `i a b`; cm1: `i c`; smn: `A p B` with `-` for an empty word.
        #[arg(long)]
        config: Option<String>,
        #[arg(long)]
        fuel: u64,
        /// Print every visited configuration.
        #[arg(long)]
        trace: bool,
    },
    /// Apply one reduction, or the whole chain.
    Reduce {
        step: Step,
        #[arg(long)]
        input: PathBuf,
        #[arg(long, env = OUT_ENV)]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        a0: u64,
        #[arg(long, default_value_t = 0)]
        b0: u64,
        /// Final problem of `reduce all`.
        #[arg(long, value_enum, default_value_t = TargetArg::Su)]
        target: TargetArg,
        /// Also write the SMX dump and its provenance table.
        #[arg(long)]
        emit_provenance: bool,
    },
    /// Run one structural check.
    Validate {
        check: Check,
        #[arg(long)]
        input: PathBuf,
        /// Total length bound for `confluence`.
        #[arg(long, default_value_t = 5)]
        max_len: usize,
        /// Node cap per join search for `confluence`.
        #[arg(long, default_value_t = 1 << 16)]
        join_cap: usize,
    },
    /// Largest reachable-set size for every total stack length.
    ProbeBound {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        max_len: usize,
        #[arg(long)]
        node_cap: usize,
    },
    /// Check a solution file against an instance.
    CheckSolution {
        kind: Kind,
        #[arg(long)]
        instance: PathBuf,
        #[arg(long)]
        solution: PathBuf,
    },
    /// Depth-bounded search for a solution.
    Solve {
        kind: Kind,
        #[arg(long)]
        instance: PathBuf,
        #[arg(long)]
        depth: usize,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Model {
    Mm2,
    Cm1,
    Smn,
}

#[derive(Clone, Copy, ValueEnum)]
enum Step {
    Mm2Cm1,
    Cm1Smn,
    SmnCssm,
    CssmSsu,
    SsuRu2,
    Ru2Su,
    Ru2Lu2,
    All,
}

#[derive(Clone, Copy, ValueEnum)]
enum TargetArg {
    Su,
    Lu2,
}

#[derive(Clone, Copy, ValueEnum)]
enum Check {
    Det,
    Lp,
    Simple,
    Confluence,
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    Su,
    Ssu,
    Ru2,
    Lu2,
}

#[derive(Debug, Error)]
enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Validation(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Validation(_) => 3,
        }
    }
}

fn usage(e: impl std::fmt::Display) -> CliError {
    CliError::Usage(e.to_string())
}

fn abort(e: impl std::fmt::Display) -> CliError {
    CliError::Validation(e.to_string())
}

/// Result of a command: exit code, text for humans, document for machines.
struct Report {
    code: u8,
    text: String,
    doc: Value,
}

impl Report {
    fn new(ok: bool, text: String, doc: Value) -> Self {
        Report { code: if ok { 0 } else { 1 }, text, doc }
    }
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| usage(format!("{}: {e}", path.display())))
}

fn parsed<T, E: std::fmt::Display>(path: &Path, r: Result<T, E>) -> Result<T, CliError> {
    r.map_err(|e| usage(format!("{}: {e}", path.display())))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let json = cli.json;
    match run(cli.cmd) {
        Ok(r) => {
            // a closed pipe is not worth a panic
            let mut out = std::io::stdout().lock();
            let _ = if json {
                let mut doc = r.doc;
                doc["exit"] = json!(r.code);
                writeln!(out, "{doc}")
            } else {
                write!(out, "{}", r.text)
            };
            ExitCode::from(r.code)
        }
        Err(e) => {
            eprintln!("error: {e}");
            if json {
                println!("{}", json!({ "error": e.to_string(), "exit": e.code() }));
            }
            ExitCode::from(e.code())
        }
    }
}

fn run(cmd: Cmd) -> Result<Report, CliError> {
    match cmd {
        Cmd::Simulate { model, input, config, fuel, trace } => simulate(model, &input, config.as_deref(), fuel, trace),
        Cmd::Reduce { step, input, out, a0, b0, target, emit_provenance } => {
            reduce(step, &input, &out, a0, b0, target, emit_provenance)
        }
        Cmd::Validate { check, input, max_len, join_cap } => validate(check, &input, max_len, join_cap),
        Cmd::ProbeBound { input, max_len, node_cap } => probe(&input, max_len, node_cap),
        Cmd::CheckSolution { kind, instance, solution } => check_solution(kind, &instance, &solution),
        Cmd::Solve { kind, instance, depth } => solve(kind, &instance, depth),
    }
}

fn numbers(src: &str, n: usize, what: &str) -> Result<Vec<u64>, CliError> {
    let v: Vec<u64> = src
        .split_whitespace()
        .map(|w| w.parse().map_err(|_| usage(format!("config: `{w}` is not a natural number"))))
        .collect::<Result<_, _>>()?;
    if v.len() != n {
        return Err(usage(format!("config: expected `{what}`")));
    }
    Ok(v)
}

fn simulate(model: Model, input: &Path, config: Option<&str>, fuel: u64, trace: bool) -> Result<Report, CliError> {
    let src = read(input)?;
    let mut lines = String::new();
    match model {
        Model::Mm2 => {
            let m = parsed(input, parse_mm2(&src))?;
            let v = numbers(config.unwrap_or("0 0 0"), 3, "i a b")?;
            let start = Mm2Config::new(v[0] as usize, v[1], v[2]);
            if trace {
                let mut cur = Some(start);
                for _ in 0..=fuel {
                    let Some(c) = cur else { break };
                    lines.push_str(&format!("{c}\n"));
                    cur = mm2_step(&m, c);
                }
            }
            let (ok, status, doc) = match mm2_run(&m, start, fuel) {
                Mm2Outcome::Halted { config, steps } => {
                    (true, format!("halted after {steps} steps at {config}"), json!({"status": "halted", "steps": steps, "config": config.to_string()}))
                }
                Mm2Outcome::OutOfFuel { config } => {
                    (false, format!("out of fuel at {config}"), json!({"status": "out-of-fuel", "config": config.to_string()}))
                }
                Mm2Outcome::CycleDetected { config, period } => (
                    false,
                    format!("cycle: {config} repeats with period {period}"),
                    json!({"status": "cycle", "config": config.to_string(), "period": period}),
                ),
            };
            Ok(Report::new(ok, format!("{lines}{status}\n"), doc))
        }
        Model::Cm1 => {
            let m = parsed(input, parse_cm1(&src))?;
            let v = numbers(config.unwrap_or("0 1"), 2, "i c")?;
            let start = Cm1Config::new(v[0] as usize, v[1]).map_err(usage)?;
            if trace {
                let mut cur = start.clone();
                for _ in 0..=fuel {
                    lines.push_str(&format!("{cur}\n"));
                    if cm1_halting(&m, &cur) {
                        break;
                    }
                    cur = cm1_step(&m, &cur);
                }
            }
            let (ok, status, doc) = match cm1_run_from(&m, start, fuel) {
                Cm1Outcome::Halted { config, steps } => {
                    (true, format!("halted after {steps} steps at {config}"), json!({"status": "halted", "steps": steps, "config": config.to_string()}))
                }
                Cm1Outcome::OutOfFuel { config } => {
                    (false, format!("out of fuel at {config}"), json!({"status": "out-of-fuel", "config": config.to_string()}))
                }
            };
            Ok(Report::new(ok, format!("{lines}{status}\n"), doc))
        }
        Model::Smn => {
            let m = parsed(input, parse_smn(&src))?;
            let start = config.ok_or_else(|| usage("simulate smn needs --config"))?;
            let start = parse_config(start).map_err(|e| usage(format!("config: {}", e.message)))?;
            let path = smn_trajectory(&m, &start, fuel as usize);
            let last = path.last().unwrap();
            let branching = path.iter().any(|c| smn_successors(&m, c).len() > 1);
            let (ok, status) = if smn_successors(&m, last).is_empty() {
                (true, "stopped")
            } else if path.len() as u64 > fuel {
                (false, "out-of-fuel")
            } else {
                (false, "cycle")
            };
            if trace {
                for c in &path {
                    lines.push_str(&format!("{c}\n"));
                }
            }
            let steps = path.len() - 1;
            let note = if branching { " (branching: first applicable instruction taken)" } else { "" };
            let text = format!("{lines}{status} after {steps} steps at {last}{note}\n");
            let doc = json!({"status": status, "steps": steps, "config": last.to_string(), "branching": branching});
            Ok(Report::new(ok, text, doc))
        }
    }
}

fn write(dir: &Path, file: &str, text: &str) -> Result<PathBuf, CliError> {
    fs::create_dir_all(dir).map_err(|e| usage(format!("{}: {e}", dir.display())))?;
    let path = dir.join(file);
    fs::write(&path, text).map_err(|e| usage(format!("{}: {e}", path.display())))?;
    Ok(path)
}

fn reduce(
    step: Step,
    input: &Path,
    out: &Path,
    a0: u64,
    b0: u64,
    target: TargetArg,
    provenance: bool,
) -> Result<Report, CliError> {
    let src = read(input)?;
    let mut written = Vec::new();
    let mut names = Names::new();
    match step {
        Step::Mm2Cm1 => {
            let m = parsed(input, parse_mm2(&src))?;
            written.push(write(out, "02-cm1.cm1", &render_cm1(&reduce_mm2_to_cm1(&m, a0, b0)))?);
        }
        Step::Cm1Smn => {
            let m = parsed(input, parse_cm1(&src))?;
            m.validate().map_err(abort)?;
            let smx = compile_cm1_to_smx(&m).map_err(abort)?;
            let smn = flatten_smx_to_smn(&smx).map_err(abort)?;
            check_length_preserving(&smn).map_err(|i| abort(format!("not length-preserving: `{i}`")))?;
            check_deterministic(&smn).map_err(|c| abort(format!("not deterministic at {c}")))?;
            written.push(write(out, "03-smndl.smn", &render_smn(&smn))?);
            if provenance {
                written.push(write(out, "03-smndl.smx", &render_smx(&smx))?);
                written.push(write(out, "03-smndl.provenance", &render_provenance(&smx))?);
            }
        }
        Step::SmnCssm => {
            let m = parsed(input, parse_smn(&src))?;
            let c = shorten_to_simple(&m).map_err(abort)?;
            check_reverse_closure(&c).map_err(|i| abort(format!("missing reverse of `{i}`")))?;
            written.push(write(out, "04-cssm.cssm", &render_cssm(&c))?);
        }
        Step::CssmSsu => {
            let m = parse_cssm(&src).map_err(|e| abort(format!("{}: {e}", input.display())))?;
            let s = reduce_cssm_to_ssu(&m, &mut names).map_err(abort)?;
            written.push(write(out, "05-ssu.ssu", &render_ssu(&s, &names))?);
        }
        Step::SsuRu2 => {
            let s = parsed(input, parse_ssu(&src, &mut names))?;
            let r = reduce_ssu_to_ru2(&s, &mut names);
            written.push(write(out, "06-ru2.ru2", &render_ru2(&r, &names))?);
        }
        Step::Ru2Su => {
            let r = parsed(input, parse_ru2(&src, &mut names))?;
            written.push(write(out, "07-su.su", &render_su(&reduce_ru2_to_semiu(&r), &names))?);
        }
        Step::Ru2Lu2 => {
            let r = parsed(input, parse_ru2(&src, &mut names))?;
            let l = reduce_ru2_to_lu2(&r, &mut names);
            written.push(write(out, "07-lu2.lu2", &render_lu2(&l, &names))?);
        }
        Step::All => {
            let m: Mm2Machine = parsed(input, parse_mm2(&src))?;
            let t = match target {
                TargetArg::Su => Target::Su,
                TargetArg::Lu2 => Target::Lu2,
            };
            let a = reduce_all(&m, a0, b0, t).map_err(abort)?;
            write_artifacts(&a, out, provenance).map_err(|e| usage(format!("{}: {e}", out.display())))?;
            let mut text = String::new();
            let mut stages = Vec::new();
            for s in &a.stages {
                let report: Vec<String> = s.report.iter().map(|(k, v)| format!("{k}={v}")).collect();
                text.push_str(&format!("{:<6} {} {} {}\n", s.name, &s.output_digest[..16], s.file, report.join(" ")));
                stages.push(json!({
                    "stage": s.name,
                    "file": out.join(&s.file).display().to_string(),
                    "input_digest": s.input_digest,
                    "output_digest": s.output_digest,
                    "report": s.report.iter().map(|(k, v)| json!({"check": k, "result": v})).collect::<Vec<_>>(),
                }));
            }
            text.push_str(&format!("cssm start profile {:?}: {}\n", a.cssm_evidence.values(), verdict_name(a.cssm_verdict)));
            let doc = json!({
                "stages": stages,
                "cssm_profile": a.cssm_evidence.values(),
                "cssm_verdict": verdict_name(a.cssm_verdict),
            });
            return Ok(Report::new(true, text, doc));
        }
    }
    let files: Vec<String> = written.iter().map(|p| p.display().to_string()).collect();
    let text = files.iter().map(|f| format!("wrote {f}\n")).collect();
    Ok(Report::new(true, text, json!({ "files": files })))
}

fn validate(check: Check, input: &Path, max_len: usize, join_cap: usize) -> Result<Report, CliError> {
    let src = read(input)?;
    let name = match check {
        Check::Det => "deterministic",
        Check::Lp => "length-preserving",
        Check::Simple => "simple",
        Check::Confluence => "locally-confluent",
    };
    let witness = match check {
        Check::Det => check_deterministic(&parsed(input, parse_smn(&src))?).err().map(|c| c.to_string()),
        Check::Lp => check_length_preserving(&parsed(input, parse_smn(&src))?).err().map(|i| i.to_string()),
        Check::Simple => check_simple(&parsed(input, parse_smn(&src))?.instructions).err().map(|i| i.to_string()),
        Check::Confluence => {
            let m = parse_cssm(&src).map_err(|e| abort(format!("{}: {e}", input.display())))?;
            check_local_confluence_bounded(&m, max_len, join_cap)
                .err()
                .map(|u| format!("{} -> {} and {} with no join found", u.source, u.left, u.right))
        }
    };
    let text = match &witness {
        None => format!("{name}: yes\n"),
        Some(w) => format!("{name}: no, witness {w}\n"),
    };
    Ok(Report::new(witness.is_none(), text, json!({ "check": name, "holds": witness.is_none(), "witness": witness })))
}

fn probe(input: &Path, max_len: usize, node_cap: usize) -> Result<Report, CliError> {
    let m = parsed(input, parse_smn(&read(input)?))?;
    let p = probe_uniform_bound(&m, max_len, node_cap).map_err(|e| match e {
        SmnError::NotLengthPreserving(_) => abort(e),
        SmnError::ProbeTooLarge { .. } => usage(e),
    })?;
    let v = profile_verdict(&p);
    let mut text = String::new();
    for c in &p.cells {
        text.push_str(&format!("{} {}{}\n", c.len, c.max_reach, if c.truncated { " truncated" } else { "" }));
    }
    text.push_str(&format!("verdict {}\n", verdict_name(v)));
    let cells: Vec<Value> =
        p.cells.iter().map(|c| json!({"len": c.len, "max_reach": c.max_reach, "truncated": c.truncated})).collect();
    Ok(Report::new(true, text, json!({ "cells": cells, "verdict": verdict_name(v) })))
}

/// A solution file for `su` may be plain `v = t` lines or a triple file, in
/// which case only `phi` is used.
fn read_phi(path: &Path, src: &str, names: &mut Names) -> Result<reduchain::Substitution, CliError> {
    let tagged = src.lines().any(|l| l.trim_start().starts_with("phi "));
    if tagged {
        Ok(parsed(path, parse_triple(src, names))?.phi)
    } else {
        parsed(path, parse_substitution(src, names))
    }
}

fn check_solution(kind: Kind, instance: &Path, solution: &Path) -> Result<Report, CliError> {
    let (isrc, ssrc) = (read(instance)?, read(solution)?);
    let mut names = Names::new();
    let holds = match kind {
        Kind::Su => {
            let inst = parsed(instance, parse_su(&isrc, &mut names))?;
            check_su_solution(&inst, &read_phi(solution, &ssrc, &mut names)?)
        }
        Kind::Ssu => {
            let inst = parsed(instance, parse_ssu(&isrc, &mut names))?;
            check_ssu_solution(&inst, &parsed(solution, parse_triple(&ssrc, &mut names))?)
        }
        Kind::Ru2 => {
            let inst = parsed(instance, parse_ru2(&isrc, &mut names))?;
            check_ru2_solution(&inst, &parsed(solution, parse_triple(&ssrc, &mut names))?)
        }
        Kind::Lu2 => {
            let inst = parsed(instance, parse_lu2(&isrc, &mut names))?;
            check_lu2_solution(&inst, &parsed(solution, parse_triple(&ssrc, &mut names))?)
        }
    };
    let text = if holds { "solution: yes\n" } else { "solution: no\n" };
    Ok(Report::new(holds, text.into(), json!({ "holds": holds })))
}

fn triple_doc(t: &SolutionTriple, names: &Names) -> Value {
    let map = |s: &reduchain::Substitution| -> Value {
        s.iter().map(|(v, img)| (names.name(v), json!(img.display(names).to_string()))).collect()
    };
    json!({ "phi": map(&t.phi), "psi0": map(&t.psi0), "psi1": map(&t.psi1) })
}

fn solve(kind: Kind, instance: &Path, depth: usize) -> Result<Report, CliError> {
    let src = read(instance)?;
    let mut names = Names::new();
    let found = match kind {
        Kind::Su => {
            let inst = parsed(instance, parse_su(&src, &mut names))?;
            bounded_solve_su_in(&inst, depth, &mut names).map(|phi| {
                let doc = json!({ "phi": phi.iter().map(|(v, t)| (names.name(v), json!(t.display(&names).to_string()))).collect::<serde_json::Map<_, _>>() });
                let text = if phi.is_empty() { "# identity\n".to_string() } else { render_substitution(&phi, &names) };
                (text, doc)
            })
        }
        Kind::Ssu | Kind::Ru2 | Kind::Lu2 => {
            let t = match kind {
                Kind::Ssu => bounded_solve_ssu_in(&parsed(instance, parse_ssu(&src, &mut names))?, depth, &mut names),
                Kind::Ru2 => bounded_solve_ru2_in(&parsed(instance, parse_ru2(&src, &mut names))?, depth, &mut names),
                _ => bounded_solve_lu2_in(&parsed(instance, parse_lu2(&src, &mut names))?, depth, &mut names),
            };
            t.map(|t| {
                let text = if t == SolutionTriple::default() { "# identity\n".to_string() } else { render_triple(&t, &names) };
                (text, triple_doc(&t, &names))
            })
        }
    };
    Ok(match found {
        Some((text, doc)) => Report::new(true, text, json!({ "found": true, "solution": doc })),
        None => Report::new(false, format!("no solution up to depth {depth}\n"), json!({ "found": false })),
    })
}
