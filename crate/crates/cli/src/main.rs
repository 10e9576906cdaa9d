//! `delsynth`: synthesize, apply and audit action models from the shell.
//!
//! Exit codes: 0 success or true, 1 semantic false, 2 input error,
//! 3 undefined update.

mod report;

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use delsynth_core::document::{load_kripke, load_model, LoadedModel, ModelDocument};
use delsynth_core::dot::{action_to_dot, kripke_to_dot};
use delsynth_core::fixtures::{self, Fixture};
use delsynth_core::formula::{classify_dbi, to_dbi_normal, DbiFormula};
use delsynth_core::synthesis::synthesize;
use delsynth_core::update::{blowup_series, operator_by_name, PointStatus, UpdateError};
use delsynth_core::verify::{run_checks, VerifyContext, VerifyOptions, CHECK_NAMES};
use delsynth_core::{gen, parse, Agent, Formula};

use report::RunReport;

#[derive(Parser)]
#[command(name = "delsynth", version, about = "Action-model synthesis for dynamic epistemic logic")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Dot,
    Csv,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Mode {
    Product,
    Pointed,
    Both,
}

#[derive(Subcommand)]
enum Command {
    /// Parse a formula and describe it.
    Parse {
        formula: String,
        #[arg(long, value_enum)]
        format: Option<Format>,
    },
    /// Print the DBI normal form of a goal.
    Normalize { formula: String },
    /// Build the action model for a DBI goal.
    Synthesize {
        goal: String,
        /// Comma-separated agent set; defaults to the goal's agents.
        #[arg(long, value_delimiter = ',')]
        agents: Vec<String>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
    },
    /// Apply an action model to a Kripke model.
    Update {
        model: PathBuf,
        action: PathBuf,
        #[arg(long, value_enum, default_value = "pointed")]
        mode: Mode,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
        /// Write a JSON run report here.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Evaluate a formula at a world (default: the point).
    Check {
        model: PathBuf,
        formula: String,
        #[arg(long)]
        world: Option<String>,
    },
    /// Run named checks on a synthesis instance and print a run report.
    Verify {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        goal: String,
        /// Action model to audit; synthesized from the goal when absent.
        #[arg(long)]
        action: Option<PathBuf>,
        #[arg(long, value_delimiter = ',')]
        checks: Vec<String>,
        /// Bound privatization sequences; exact when absent.
        #[arg(long)]
        max_seq_len: Option<usize>,
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Render a model document as Graphviz.
    ExportDot {
        path: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// World counts of iterated updates on the private-message fixture.
    BenchBlowup {
        #[arg(long, default_value_t = 4)]
        iterations: usize,
        #[arg(long, value_enum, default_value = "both")]
        mode: Mode,
        #[arg(long, value_enum, default_value = "csv")]
        format: Format,
    },
    /// List the built-in fixtures, or write them to a directory.
    Fixtures {
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum)]
        format: Option<Format>,
    },
}

struct Failure {
    code: u8,
    error: anyhow::Error,
}

impl<E: Into<anyhow::Error>> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure { code: 2, error: e.into() }
    }
}

fn undefined(e: UpdateError) -> Failure {
    Failure { code: 3, error: e.into() }
}

type Outcome = Result<u8, Failure>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            ExitCode::from(f.code)
        }
    }
}

fn run(command: Command) -> Outcome {
    match command {
        Command::Parse { formula, format } => cmd_parse(&formula, format),
        Command::Normalize { formula } => {
            let goal = dbi_goal(&formula)?;
            println!("{}", to_dbi_normal(&goal).formula());
            Ok(0)
        }
        Command::Synthesize { goal, agents, out, format } => cmd_synthesize(&goal, &agents, out.as_deref(), format),
        Command::Update { model, action, mode, out, format, report } => {
            cmd_update(&model, &action, mode, out.as_deref(), format, report.as_deref())
        }
        Command::Check { model, formula, world } => cmd_check(&model, &formula, world.as_deref()),
        Command::Verify { model, goal, action, checks, max_seq_len, report } => {
            cmd_verify(&model, &goal, action.as_deref(), &checks, max_seq_len, report.as_deref())
        }
        Command::ExportDot { path, out } => {
            let text = read(&path)?;
            let dot = match load_model(&text)? {
                LoadedModel::Kripke(m) => kripke_to_dot(&m),
                other => action_to_dot(other.action().expect("action document")),
            };
            emit(out.as_deref(), &dot)?;
            Ok(0)
        }
        Command::BenchBlowup { iterations, mode, format } => cmd_bench(iterations, mode, format),
        Command::Fixtures { out, format } => cmd_fixtures(out.as_deref(), format),
    }
}

fn read(path: &Path) -> anyhow::Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn emit(out: Option<&Path>, text: &str) -> anyhow::Result<()> {
    match out {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn parse_formula(text: &str) -> anyhow::Result<Formula> {
    parse(text).map_err(|e| anyhow!("cannot parse '{text}': {e}"))
}

/// Parses and classifies a goal, normalizing with a notice when needed.
fn dbi_goal(text: &str) -> anyhow::Result<DbiFormula> {
    let f = parse_formula(text)?;
    let dbi = classify_dbi(&f)?;
    if dbi.is_normal() {
        return Ok(dbi);
    }
    let normal = to_dbi_normal(&dbi);
    eprintln!("notice: goal normalized to {}", normal.formula());
    Ok(normal)
}

fn cmd_parse(text: &str, format: Option<Format>) -> Outcome {
    let f = parse_formula(text)?;
    let dbi = match classify_dbi(&f) {
        Ok(d) if d.is_normal() => "normal".to_string(),
        Ok(_) => "not normal".to_string(),
        Err(e) => format!("no: {e}"),
    };
    match format {
        None => {
            println!("ascii: {f}");
            println!("unicode: {}", f.to_unicode());
            println!("modal depth: {}", f.modal_depth());
            println!("dbi: {dbi}");
        }
        Some(Format::Json) => {
            let v = json!({
                "ascii": f.to_string(),
                "unicode": f.to_unicode(),
                "modal_depth": f.modal_depth(),
                "agents": f.agents().iter().map(Agent::as_str).collect::<Vec<_>>(),
                "atoms": f.atoms(),
                "dbi": dbi,
            });
            println!("{}", serde_json::to_string_pretty(&v)?);
        }
        Some(other) => return Err(anyhow!("parse does not support --format {other:?}").into()),
    }
    Ok(0)
}

fn cmd_synthesize(goal: &str, agents: &[String], out: Option<&Path>, format: Format) -> Outcome {
    let dbi = dbi_goal(goal)?;
    let agents: Vec<Agent> = if agents.is_empty() {
        dbi.formula().agents().into_iter().collect()
    } else {
        agents.iter().map(Agent::new).collect::<BTreeSet<_>>().into_iter().collect()
    };
    let s = synthesize(&dbi, &agents)?;
    let text = match format {
        Format::Json => ModelDocument::from_synthesized(&s).to_json(),
        Format::Dot => action_to_dot(s.action()),
        Format::Csv => return Err(anyhow!("synthesize does not support csv").into()),
    };
    emit(out, &text)?;
    Ok(0)
}

fn cmd_update(
    model: &Path,
    action: &Path,
    mode: Mode,
    out: Option<&Path>,
    format: Format,
    report_path: Option<&Path>,
) -> Outcome {
    let (mtext, atext) = (read(model)?, read(action)?);
    let m = load_kripke(&mtext)?;
    let loaded = load_model(&atext)?;
    let u = loaded.action().ok_or_else(|| anyhow!("{} is not an action document", action.display()))?;
    let op_name = match mode {
        Mode::Product => "product",
        Mode::Pointed => "pointed",
        Mode::Both => return Err(anyhow!("update needs --mode product or pointed").into()),
    };
    let res = operator_by_name(op_name)?.apply(&m, u).map_err(undefined)?;
    if res.point_status == PointStatus::Undefined {
        eprintln!("warning: the actual event's precondition fails at the actual world; point is arbitrary");
    }
    let text = match format {
        Format::Json => ModelDocument::from_kripke(&res.model).to_json(),
        Format::Dot => kripke_to_dot(&res.model),
        Format::Csv => return Err(anyhow!("update does not support csv").into()),
    };
    emit(out, &text)?;

    let mut stats = json!({
        "mode": op_name,
        "worlds": res.model.len(),
        "candidate_pairs": res.stats.candidate_pairs,
        "point_defined": res.point_status == PointStatus::Defined,
    });
    if mode == Mode::Pointed {
        stats["kept_pairs"] = json!(res.stats.kept_pairs);
        stats["kept_ratio"] = json!(res.stats.kept_pairs as f64 / res.stats.candidate_pairs.max(1) as f64);
    }
    if let Some(p) = report_path {
        let mut r = RunReport::new("update");
        r.input("model", mtext.as_bytes());
        r.input("action", atext.as_bytes());
        r.outputs.push(out.map_or("-".to_string(), |p| p.display().to_string()));
        r.stats = stats;
        fs::write(p, r.to_json())?;
    }
    Ok(0)
}

fn cmd_check(model: &Path, formula: &str, world: Option<&str>) -> Outcome {
    let m = load_kripke(&read(model)?)?;
    let f = parse_formula(formula)?;
    let w = match world {
        Some(name) => m.world(name)?,
        None => m.point(),
    };
    let holds = m.check(w, &f)?;
    println!("{holds}");
    Ok(if holds { 0 } else { 1 })
}

fn cmd_verify(
    model: &Path,
    goal: &str,
    action: Option<&Path>,
    checks: &[String],
    max_seq_len: Option<usize>,
    report_path: Option<&Path>,
) -> Outcome {
    let mtext = read(model)?;
    let m = load_kripke(&mtext)?;
    let dbi = dbi_goal(goal)?;
    let mut report = RunReport::new("verify");
    report.input("model", mtext.as_bytes());
    report.input("goal", goal.as_bytes());
    let mut ctx = match action {
        Some(path) => {
            let atext = read(path)?;
            report.input("action", atext.as_bytes());
            match load_model(&atext)? {
                LoadedModel::Synthesized(s) => VerifyContext::from_synthesis(m, dbi, s),
                LoadedModel::Action(u) => VerifyContext {
                    model: m,
                    goal: dbi,
                    action: u,
                    synthesized: None,
                    options: VerifyOptions::default(),
                },
                LoadedModel::Kripke(_) => return Err(anyhow!("{} is not an action document", path.display()).into()),
            }
        }
        None => {
            let s = synthesize(&dbi, m.frame().agents())?;
            VerifyContext::from_synthesis(m, dbi, s)
        }
    };
    ctx.options.max_seq_len = max_seq_len;
    ctx.options.seed = gen::seed_from_env(0);
    let names: Vec<&str> = if checks.is_empty() {
        CHECK_NAMES.to_vec()
    } else {
        checks.iter().map(String::as_str).collect()
    };
    let verdicts = run_checks(&ctx, &names)
        .map_err(|n| anyhow!("unknown check '{n}' (known: {})", CHECK_NAMES.join(", ")))?;
    for v in &verdicts {
        let tag = if v.passed { "PASS" } else { "FAIL" };
        match &v.error {
            Some(e) => eprintln!("{tag} {}: {e}", v.check),
            None => eprintln!("{tag} {}: {}", v.check, v.claim),
        }
    }
    let all = verdicts.iter().all(|v| v.passed);
    report.stats = json!({
        "seed": ctx.options.seed,
        "max_seq_len": max_seq_len,
        "events": ctx.action.len(),
        "passed": verdicts.iter().filter(|v| v.passed).count(),
        "failed": verdicts.iter().filter(|v| !v.passed).count(),
    });
    report.verdicts = verdicts;
    let text = report.to_json();
    match report_path {
        Some(p) => fs::write(p, &text)?,
        None => print!("{text}"),
    }
    Ok(if all { 0 } else { 1 })
}

fn cmd_bench(iterations: usize, mode: Mode, format: Format) -> Outcome {
    if iterations == 0 {
        return Err(anyhow!("--iterations must be at least 1").into());
    }
    let (m, u) = (fixtures::two_agent_m(), fixtures::priv_msg_u());
    let modes: &[&str] = match mode {
        Mode::Product => &["product"],
        Mode::Pointed => &["pointed"],
        Mode::Both => &["product", "pointed"],
    };
    let mut rows = Vec::new();
    for name in modes {
        let series = blowup_series(&m, &u, iterations, operator_by_name(name)?.as_ref()).map_err(undefined)?;
        rows.extend(series.into_iter().enumerate().map(|(i, n)| (i + 1, *name, n)));
    }
    match format {
        Format::Csv => {
            println!("iteration,mode,world_count");
            for (i, name, n) in rows {
                println!("{i},{name},{n}");
            }
        }
        Format::Json => {
            let v: Vec<_> = rows
                .into_iter()
                .map(|(i, name, n)| json!({ "iteration": i, "mode": name, "world_count": n }))
                .collect();
            println!("{}", serde_json::to_string_pretty(&v)?);
        }
        Format::Dot => return Err(anyhow!("bench-blowup does not support dot").into()),
    }
    Ok(0)
}

fn cmd_fixtures(out: Option<&Path>, format: Option<Format>) -> Outcome {
    let all = fixtures::blt_fixtures();
    let Some(dir) = out else {
        for (name, fx) in &all {
            let (kind, size) = match fx {
                Fixture::Kripke(m) => ("kripke", m.len()),
                Fixture::Action(u) => ("action", u.len()),
            };
            println!("{name}\t{kind}\t{size}");
        }
        return Ok(0);
    };
    fs::create_dir_all(dir)?;
    let formats: &[Format] = match format {
        None => &[Format::Json, Format::Dot],
        Some(Format::Csv) => return Err(anyhow!("fixtures does not support csv").into()),
        Some(f) => if f == Format::Json { &[Format::Json] } else { &[Format::Dot] },
    };
    for (name, fx) in &all {
        for f in formats {
            let (ext, text) = match (f, fx) {
                (Format::Json, Fixture::Kripke(m)) => ("json", ModelDocument::from_kripke(m).to_json()),
                (Format::Json, Fixture::Action(u)) => ("json", ModelDocument::from_action(u).to_json()),
                (_, Fixture::Kripke(m)) => ("dot", kripke_to_dot(m)),
                (_, Fixture::Action(u)) => ("dot", action_to_dot(u)),
            };
            fs::write(dir.join(format!("{name}.{ext}")), text)?;
        }
    }
    Ok(0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cli_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }

    #[test]
    fn non_dbi_goals_are_input_errors() {
        let err = dbi_goal("~B i p").unwrap_err();
        assert!(err.to_string().contains("not a DBI goal"), "{err}");
    }
}
