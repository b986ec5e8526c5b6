//! Command-line front end: `sat`, `check` and `oracle`.
//!
//! Exit codes: 0 for SAT / true / witness found, 1 for UNSAT / false / no
//! witness within the bound, 2 for usage, parse, agent or file errors.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::formula::{parse, parse_unchecked, AgentSet, DecisionScope, Formula, SrMode};
use crate::hintikka::stitch_hintikka;
use crate::model::{
    brute_force_sat, pseudo_model_from_hintikka, OracleResult, PseudoModel, MAX_ORACLE_STATES,
};
use crate::tableau::{check_agents, decide, DotStage, RankMode, TableauConfig, Verdict};

#[derive(Debug, Parser)]
#[command(
    name = "maelcd",
    version,
    about = "Tableau decision procedure for epistemic logic with common and distributed knowledge"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Decide satisfiability of a formula.
    Sat(SatArgs),
    /// Evaluate a formula at a world of a JSON model.
    Check(CheckArgs),
    /// Search small models exhaustively for a witness.
    Oracle(OracleArgs),
}

#[derive(Debug, Args)]
struct AgentArgs {
    /// Comma-separated agent set; defaults to the agents of the formula.
    #[arg(long, value_name = "LIST")]
    agents: Option<String>,
    /// Accept a single agent instead of rejecting it.
    #[arg(long)]
    allow_single_agent: bool,
}

#[derive(Debug, Args)]
struct SatArgs {
    formula: String,
    #[command(flatten)]
    agents: AgentArgs,
    /// Use the printed max-over-labels rank update instead of path existence.
    #[arg(long)]
    strict_rank: bool,
    /// Decide only K/D subformulae of members, without the unfoldings of C.
    #[arg(long)]
    literal_decision: bool,
    /// Keep only subset-minimal expansions in rule SR.
    #[arg(long)]
    minimal_sr: bool,
    #[arg(long, value_name = "FILE")]
    dot_pretableau: Option<PathBuf>,
    #[arg(long, value_name = "FILE")]
    dot_initial: Option<PathBuf>,
    #[arg(long, value_name = "FILE")]
    dot_final: Option<PathBuf>,
    /// Write the pseudo-model witness as JSON.
    #[arg(long, value_name = "FILE")]
    witness: Option<PathBuf>,
    /// Write the elimination trace.
    #[arg(long, value_name = "FILE")]
    trace: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct CheckArgs {
    formula: String,
    #[arg(long, value_name = "FILE")]
    model: PathBuf,
    /// World name as listed in the model's `states`.
    #[arg(long, value_name = "ID")]
    state: String,
    /// Must match the model's agents if given; the model file fixes them.
    #[arg(long, value_name = "LIST")]
    agents: Option<String>,
}

#[derive(Debug, Args)]
struct OracleArgs {
    formula: String,
    #[command(flatten)]
    agents: AgentArgs,
    #[arg(long, value_name = "N", default_value_t = 4)]
    max_states: usize,
    /// Write the witness model as JSON.
    #[arg(long, value_name = "FILE")]
    witness: Option<PathBuf>,
}

/// A failure that ends the command with exit code 2.
struct Failure(String);

impl<E: std::fmt::Display> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure(e.to_string())
    }
}

/// Runs the command line `args` (program name first), writing the report to
/// `out` and diagnostics to `err`; returns the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let target: &mut dyn Write = if e.use_stderr() { err } else { out };
            let _ = write!(target, "{}", e.render());
            return code;
        }
    };
    let result = match cli.command {
        Command::Sat(args) => cmd_sat(&args, out),
        Command::Check(args) => cmd_check(&args, out),
        Command::Oracle(args) => cmd_oracle(&args, out),
    };
    match result {
        Ok(code) => code,
        Err(Failure(message)) => {
            let _ = writeln!(err, "error: {message}");
            2
        }
    }
}

fn formula_and_agents(
    text: &str,
    args: &AgentArgs,
) -> Result<(Formula, AgentSet, TableauConfig), Failure> {
    let (formula, agents) = match &args.agents {
        Some(list) => {
            let agents = AgentSet::parse_list(list)?;
            (parse(text, &agents)?, agents)
        }
        None => {
            let formula = parse_unchecked(text)?;
            let agents = AgentSet::of_formula(&formula).ok_or_else(|| {
                Failure("the formula mentions no agents; declare at least 2 with --agents".into())
            })?;
            (formula, agents)
        }
    };
    let config = TableauConfig {
        allow_single_agent: args.allow_single_agent,
        ..TableauConfig::default()
    };
    check_agents(&formula, &agents, &config)?;
    Ok((formula, agents, config))
}

fn write_file(path: &Path, contents: &str) -> Result<(), Failure> {
    std::fs::write(path, contents)
        .map_err(|e| Failure(format!("cannot write {}: {e}", path.display())))
}

fn cmd_sat(args: &SatArgs, out: &mut dyn Write) -> Result<i32, Failure> {
    let (theta, agents, mut config) = formula_and_agents(&args.formula, &args.agents)?;
    if args.strict_rank {
        config.rank_mode = RankMode::Strict;
    }
    if args.literal_decision {
        config.decision_scope = DecisionScope::Subformulas;
    }
    if args.minimal_sr {
        config.sr_mode = SrMode::StrictMinimal;
    }
    let run = decide(&theta, &agents, config)?;
    for (path, stage) in [
        (&args.dot_pretableau, DotStage::Pretableau),
        (&args.dot_initial, DotStage::Initial),
        (&args.dot_final, DotStage::Final),
    ] {
        if let Some(path) = path {
            write_file(path, &run.to_dot(stage))?;
        }
    }
    if let Some(path) = &args.trace {
        write_file(path, &run.trace.to_text())?;
    }
    let mut report = vec![
        format!("agents: {agents}"),
        format!("ecl: {}", run.index().len()),
        format!(
            "pretableau: {} prestates, {} states",
            run.pretableau.prestates().count(),
            run.pretableau.states().count()
        ),
        format!("eliminated: {}", run.trace.records().len()),
        format!("final states: {}", run.final_tableau.len()),
    ];
    if run.verdict == Verdict::Closed {
        writeln!(out, "UNSAT")?;
        for line in report {
            writeln!(out, "{line}")?;
        }
        return Ok(1);
    }
    // Never report SAT without a witness that checks.
    let hs = stitch_hintikka(&run.final_tableau, &theta)?;
    let model = pseudo_model_from_hintikka(&hs, &theta)?;
    let world = hs
        .designated(&theta)
        .expect("validated structures contain θ");
    if !model.satisfies(world, &theta)? {
        return Err(Failure(format!(
            "internal error: the witness does not satisfy {theta}"
        )));
    }
    report.push(format!(
        "witness: {} worlds, {} at {}, {}",
        model.len(),
        theta,
        model.world_name(world),
        if model.is_genuine() {
            "genuine"
        } else {
            "pseudo-model"
        }
    ));
    if let Some(path) = &args.witness {
        write_file(path, &model.to_json())?;
    }
    writeln!(out, "SAT")?;
    for line in report {
        writeln!(out, "{line}")?;
    }
    Ok(0)
}

fn cmd_check(args: &CheckArgs, out: &mut dyn Write) -> Result<i32, Failure> {
    let text = std::fs::read_to_string(&args.model)
        .map_err(|e| Failure(format!("cannot read {}: {e}", args.model.display())))?;
    let model = PseudoModel::from_json(&text)?;
    if let Some(list) = &args.agents {
        if AgentSet::parse_list(list)? != *model.agents() {
            return Err(Failure(format!(
                "--agents {list} differs from the model's agents {}",
                model.agents()
            )));
        }
    }
    let formula = parse(&args.formula, model.agents())?;
    let world = model.world(&args.state)?;
    let report = model.check_frame_conditions();
    let value = model.satisfies(world, &formula)?;
    writeln!(out, "{value}")?;
    writeln!(
        out,
        "frame: {}",
        if report.genuine { "genuine" } else { "pseudo" }
    )?;
    Ok(if value { 0 } else { 1 })
}

fn cmd_oracle(args: &OracleArgs, out: &mut dyn Write) -> Result<i32, Failure> {
    let (formula, agents, _) = formula_and_agents(&args.formula, &args.agents)?;
    if args.max_states == 0 || args.max_states > MAX_ORACLE_STATES {
        return Err(Failure(format!(
            "--max-states must be between 1 and {MAX_ORACLE_STATES}"
        )));
    }
    match brute_force_sat(&formula, &agents, args.max_states)? {
        OracleResult::Witness { model, world } => {
            if !model.satisfies(world, &formula)? {
                return Err(Failure(format!(
                    "internal error: the witness does not satisfy {formula}"
                )));
            }
            writeln!(out, "WITNESS")?;
            writeln!(out, "size: {}", model.len())?;
            writeln!(out, "world: {}", model.world_name(world))?;
            if model.len() > 1 {
                writeln!(out, "none at <= {} states", model.len() - 1)?;
            }
            match &args.witness {
                Some(path) => write_file(path, &model.to_json())?,
                None => write!(out, "{}", model.to_json())?,
            }
            Ok(0)
        }
        OracleResult::NotFoundWithinBound(bound) => {
            writeln!(out, "NOT FOUND")?;
            writeln!(out, "none at <= {bound} states")?;
            Ok(1)
        }
    }
}
