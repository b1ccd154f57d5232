//! Command-line entry points and run reports.
//!
//! Exit codes: `0` on success or all checks passing, `1` when a property
//! check fails (the report carries witnesses), `2` on usage, parse, or
//! validation-precondition errors. With `--report <path>` every command
//! additionally writes a versioned machine-readable JSON report; rationals
//! are always serialized as `n` or `n/d` strings, never as floats.

use crate::error::{Error, Result};
use crate::files;
use crate::game::{
    best_responses, make_myopic_strategy, play, RevelationSequence, TieBreak, Transcript,
};
use crate::instance::Instance;
use crate::mechanisms::{audit_mechanism, MechanismKind, MechanismOutcome};
use crate::oracle::{random_instance, verify_instance, InstanceSpec};
use crate::rational::Rational;
use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};
use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::PathBuf;

/// Version tag of the machine-readable report format.
pub const REPORT_SCHEMA_VERSION: u32 = 1;

#[derive(Parser)]
#[command(
    name = "revelation",
    about = "Exact solver for dynamic revelation games under asymmetric awareness",
    version
)]
struct Cli {
    /// Write a machine-readable JSON report to this path.
    #[arg(long, global = true, value_name = "PATH")]
    report: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    /// Play the revelation game against the expert's best response.
    Game,
    /// Run the decision-maker-optimal mechanism.
    MechD,
    /// Run the expert-optimal mechanism.
    MechE,
}

#[derive(Clone, Copy, ValueEnum)]
enum TieBreakArg {
    ExpertMin,
    ExpertMax,
}

impl From<TieBreakArg> for TieBreak {
    fn from(arg: TieBreakArg) -> TieBreak {
        match arg {
            TieBreakArg::ExpertMin => TieBreak::ExpertMin,
            TieBreakArg::ExpertMax => TieBreak::ExpertMax,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum MechArg {
    Dm,
    Expert,
}

impl From<MechArg> for MechanismKind {
    fn from(arg: MechArg) -> MechanismKind {
        match arg {
            MechArg::Dm => MechanismKind::DmOptimal,
            MechArg::Expert => MechanismKind::ExpertOptimal,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Check that an instance file parses and satisfies every invariant.
    Validate { file: PathBuf },

    /// Solve an instance: play the game or run a boundary mechanism.
    Solve {
        file: PathBuf,
        #[arg(long, value_enum)]
        mode: ModeArg,
        /// Tie-break for the myopic strategy (game mode).
        #[arg(long, value_enum, default_value_t = TieBreakArg::ExpertMin)]
        tiebreak: TieBreakArg,
        /// Expert's awareness: `full` or a named partition from the file.
        #[arg(long, default_value = "full")]
        expert: String,
    },

    /// Enumerate the expert's best-response revelation chains.
    BestResponse {
        file: PathBuf,
        #[arg(long, value_enum, default_value_t = TieBreakArg::ExpertMin)]
        tiebreak: TieBreakArg,
        #[arg(long, default_value = "full")]
        expert: String,
    },

    /// Run the full verification battery on an instance.
    Verify { file: PathBuf },

    /// Generate a seeded random instance and write it to a file.
    Generate {
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        states: usize,
        #[arg(long)]
        actions: usize,
        #[arg(long, value_name = "PATH")]
        out: PathBuf,
        /// Comma-separated payoff grid, e.g. `0,1,2,1/2`; defaults to 0..=6.
        #[arg(long)]
        grid: Option<String>,
    },

    /// Audit a boundary mechanism over every comparable report pair.
    Audit {
        file: PathBuf,
        #[arg(long, value_enum)]
        mech: MechArg,
    },
}

/// What a command run produced: process exit code, human-readable text, and
/// the machine-readable report.
pub struct RunOutcome {
    pub exit_code: i32,
    pub human: String,
    pub report: Value,
}

/// Parses `argv` and runs the selected command. Never panics on user input.
pub fn run<I, T>(argv: I) -> RunOutcome
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(err) => {
            // clap renders its own usage/help text; --help and --version are
            // successes by convention.
            let exit_code = if err.use_stderr() { 2 } else { 0 };
            return RunOutcome {
                exit_code,
                human: err.to_string(),
                report: Value::Null,
            };
        }
    };
    let report_path = cli.report.clone();
    let mut outcome = match dispatch(cli.command) {
        Ok(outcome) => outcome,
        Err(err) => RunOutcome {
            exit_code: 2,
            human: format!("error: {err}"),
            report: json!({
                "schema_version": REPORT_SCHEMA_VERSION,
                "status": "error",
                "error": err.to_string(),
            }),
        },
    };
    if let Some(path) = report_path {
        let rendered = serde_json::to_string_pretty(&outcome.report)
            .expect("reports are plain JSON values");
        if let Err(err) = std::fs::write(&path, rendered) {
            outcome.exit_code = 2;
            let _ = write!(outcome.human, "\nerror: cannot write report: {err}");
        }
    }
    outcome
}

fn dispatch(command: Command) -> Result<RunOutcome> {
    match command {
        Command::Validate { file } => validate_command(&file),
        Command::Solve { file, mode, tiebreak, expert } => {
            let instance = files::load_instance(&file)?;
            match mode {
                ModeArg::Game => game_command(&instance, tiebreak.into(), &expert),
                ModeArg::MechD => mech_command(&instance, MechanismKind::DmOptimal, &expert),
                ModeArg::MechE => mech_command(&instance, MechanismKind::ExpertOptimal, &expert),
            }
        }
        Command::BestResponse { file, tiebreak, expert } => {
            let instance = files::load_instance(&file)?;
            best_response_command(&instance, tiebreak.into(), &expert)
        }
        Command::Verify { file } => {
            let instance = files::load_instance(&file)?;
            verify_command(&instance)
        }
        Command::Generate { seed, states, actions, out, grid } => {
            generate_command(seed, states, actions, &out, grid.as_deref())
        }
        Command::Audit { file, mech } => {
            let instance = files::load_instance(&file)?;
            audit_command(&instance, mech.into())
        }
    }
}

fn base_report(command: &str, instance: Option<&Instance>) -> Value {
    let mut report = json!({
        "schema_version": REPORT_SCHEMA_VERSION,
        "command": command,
    });
    if let Some(instance) = instance {
        report["instance_digest"] = json!(instance.digest());
    }
    report
}

fn validate_command(file: &PathBuf) -> Result<RunOutcome> {
    match files::load_instance(file) {
        Ok(instance) => {
            let human = format!(
                "ok: {} states, {} actions, digest {}",
                instance.ground().n_states(),
                instance.ground().n_actions(),
                instance.digest()
            );
            let mut report = base_report("validate", Some(&instance));
            report["status"] = json!("pass");
            Ok(RunOutcome { exit_code: 0, human, report })
        }
        Err(Error::InvalidSpace(errors)) => {
            let witnesses: Vec<String> = errors.0.iter().map(|v| v.to_string()).collect();
            let mut human = String::from("invalid instance:");
            for w in &witnesses {
                let _ = write!(human, "\n  {w}");
            }
            let mut report = base_report("validate", None);
            report["status"] = json!("fail");
            report["violations"] = json!(witnesses);
            Ok(RunOutcome { exit_code: 1, human, report })
        }
        Err(err) => Err(err),
    }
}

fn resolve_expert(instance: &Instance, expert: &str) -> Result<crate::partition::Partition> {
    let partition = instance.resolve_partition(expert)?;
    if !instance.in_interval(&partition)? {
        return Err(Error::Precondition(format!(
            "expert partition {expert:?} does not refine the decision maker's awareness"
        )));
    }
    Ok(partition)
}

fn transcript_json(instance: &Instance, transcript: &Transcript) -> Value {
    json!({
        "chain": transcript
            .sequence
            .chain()
            .iter()
            .map(|p| instance.render_partition(p))
            .collect::<Vec<_>>(),
        "proposals": transcript
            .steps
            .iter()
            .map(|step| {
                json!({
                    "awareness": step.space.states(),
                    "contract": step.contract.render(&step.space).expect("step is coherent"),
                    "value_d": step.value_d,
                    "value_e": step.value_e,
                })
            })
            .collect::<Vec<_>>(),
        "payoff_d": transcript.payoff_d,
        "payoff_e": transcript.payoff_e,
        "rent": transcript.rent,
    })
}

fn transcript_text(instance: &Instance, transcript: &Transcript) -> String {
    let mut out = String::new();
    for (round, step) in transcript.steps.iter().enumerate() {
        let _ = writeln!(
            out,
            "round {}: revealed {} | proposal {} | V_d = {}, V_e = {}",
            round + 1,
            instance.render_partition(&transcript.sequence.chain()[round]),
            step.contract.render(&step.space).expect("step is coherent"),
            step.value_d,
            step.value_e,
        );
    }
    let _ = writeln!(
        out,
        "final contract: {}",
        transcript.final_contract().render(transcript.final_space()).expect("coherent"),
    );
    let _ = writeln!(out, "payoffs: V_d = {}, V_e = {}", transcript.payoff_d, transcript.payoff_e);
    let _ = write!(out, "awareness rent: {}", transcript.rent);
    out
}

/// Deterministic pick among best responses: best for the decision maker,
/// then first in enumeration order.
fn representative_response(
    instance: &Instance,
    tiebreak: TieBreak,
    responses: &[RevelationSequence],
) -> Result<Transcript> {
    let strategy = make_myopic_strategy(tiebreak);
    let mut best: Option<Transcript> = None;
    for sequence in responses {
        let transcript = play(instance, &strategy, sequence)?;
        if best.as_ref().map_or(true, |b| transcript.payoff_d > b.payoff_d) {
            best = Some(transcript);
        }
    }
    best.ok_or_else(|| Error::Precondition("no best response exists".into()))
}

fn game_command(instance: &Instance, tiebreak: TieBreak, expert: &str) -> Result<RunOutcome> {
    let expert_partition = resolve_expert(instance, expert)?;
    let strategy = make_myopic_strategy(tiebreak);
    let responses = best_responses(instance, &strategy, &expert_partition)?;
    let transcript = representative_response(instance, tiebreak, &responses)?;
    let human = transcript_text(instance, &transcript);
    let mut report = base_report("solve", Some(instance));
    report["status"] = json!("pass");
    report["mode"] = json!("game");
    report["tiebreak"] = json!(tiebreak.label());
    report["transcript"] = transcript_json(instance, &transcript);
    Ok(RunOutcome { exit_code: 0, human, report })
}

fn outcome_text(outcome: &MechanismOutcome, instance: &Instance) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "reports: decision maker {}, expert {}",
        instance.render_partition(&outcome.report_d),
        instance.render_partition(&outcome.report_e),
    );
    let _ = writeln!(
        out,
        "contract: {}",
        outcome.contract.render(&outcome.join_space).expect("outcome is coherent"),
    );
    let _ = write!(out, "values: V_d = {}, V_e = {}", outcome.value_d, outcome.value_e);
    out
}

fn mech_command(instance: &Instance, kind: MechanismKind, expert: &str) -> Result<RunOutcome> {
    let expert_partition = resolve_expert(instance, expert)?;
    let outcome = match kind {
        MechanismKind::DmOptimal => {
            crate::mechanisms::mech_dm(instance, instance.dm_partition(), &expert_partition)?
        }
        MechanismKind::ExpertOptimal => {
            crate::mechanisms::mech_expert(instance, instance.dm_partition(), &expert_partition)?
        }
    };
    let human = outcome_text(&outcome, instance);
    let mut report = base_report("solve", Some(instance));
    report["status"] = json!("pass");
    report["mode"] = json!(kind.label());
    report["outcome"] = json!({
        "report_d": instance.render_partition(&outcome.report_d),
        "report_e": instance.render_partition(&outcome.report_e),
        "contract": outcome.contract.render(&outcome.join_space).expect("coherent"),
        "value_d": outcome.value_d,
        "value_e": outcome.value_e,
    });
    Ok(RunOutcome { exit_code: 0, human, report })
}

fn best_response_command(
    instance: &Instance,
    tiebreak: TieBreak,
    expert: &str,
) -> Result<RunOutcome> {
    let expert_partition = resolve_expert(instance, expert)?;
    let strategy = make_myopic_strategy(tiebreak);
    let responses = best_responses(instance, &strategy, &expert_partition)?;
    let transcripts = responses
        .iter()
        .map(|sequence| play(instance, &strategy, sequence))
        .collect::<Result<Vec<_>>>()?;
    let value = transcripts.first().map(|t| t.payoff_e.clone()).expect("nonempty");
    let mut human = format!(
        "{} best response(s) with expert value {}",
        responses.len(),
        value
    );
    for transcript in &transcripts {
        let _ = write!(
            human,
            "\n  {}  (V_d = {}, V_e = {})",
            transcript.sequence.render(instance),
            transcript.payoff_d,
            transcript.payoff_e,
        );
    }
    let mut report = base_report("best-response", Some(instance));
    report["status"] = json!("pass");
    report["tiebreak"] = json!(tiebreak.label());
    report["value_e"] = json!(value);
    report["chains"] = json!(transcripts
        .iter()
        .map(|t| {
            json!({
                "chain": t.sequence.chain().iter().map(|p| instance.render_partition(p)).collect::<Vec<_>>(),
                "payoff_d": t.payoff_d,
                "payoff_e": t.payoff_e,
            })
        })
        .collect::<Vec<_>>());
    Ok(RunOutcome { exit_code: 0, human, report })
}

fn verify_command(instance: &Instance) -> Result<RunOutcome> {
    let verification = verify_instance(instance)?;
    let human = verification.render().trim_end().to_string();
    let mut report = base_report("verify", Some(instance));
    report["status"] = json!(if verification.all_passed() { "pass" } else { "fail" });
    report["checks"] = json!(verification
        .checks
        .iter()
        .map(|c| {
            json!({
                "name": c.name,
                "passed": c.passed,
                "witnesses": c.witnesses,
            })
        })
        .collect::<Vec<_>>());
    Ok(RunOutcome {
        exit_code: if verification.all_passed() { 0 } else { 1 },
        human,
        report,
    })
}

fn parse_grid(raw: &str) -> Result<Vec<Rational>> {
    raw.split(',')
        .map(|piece| {
            piece
                .trim()
                .parse::<Rational>()
                .map_err(|e| Error::Parse(format!("grid: {e}")))
        })
        .collect()
}

fn generate_command(
    seed: u64,
    states: usize,
    actions: usize,
    out: &PathBuf,
    grid: Option<&str>,
) -> Result<RunOutcome> {
    let mut spec = InstanceSpec::new(seed, states, actions);
    if let Some(raw) = grid {
        spec = spec.with_grid(parse_grid(raw)?);
    }
    let instance = random_instance(&spec)?;
    files::save_instance(&instance, out)?;
    let human = format!(
        "wrote {} ({} states, {} actions, digest {})",
        out.display(),
        states,
        actions,
        instance.digest()
    );
    let mut report = base_report("generate", Some(&instance));
    report["status"] = json!("pass");
    report["seed"] = json!(seed);
    report["path"] = json!(out.display().to_string());
    Ok(RunOutcome { exit_code: 0, human, report })
}

fn audit_command(instance: &Instance, kind: MechanismKind) -> Result<RunOutcome> {
    let audit = audit_mechanism(instance, kind)?;
    let mut human = format!(
        "{}: ir={} ic_d={} ic_e={} po={}",
        kind.label(),
        audit.ir,
        audit.ic_d,
        audit.ic_e,
        audit.po
    );
    for w in &audit.witnesses {
        let _ = write!(human, "\n  witness: {w}");
    }
    let mut report = base_report("audit", Some(instance));
    report["status"] = json!(if audit.all_hold() { "pass" } else { "fail" });
    report["mechanism"] = json!(kind.label());
    report["ir"] = json!(audit.ir);
    report["ic_d"] = json!(audit.ic_d);
    report["ic_e"] = json!(audit.ic_e);
    report["po"] = json!(audit.po);
    report["witnesses"] = json!(audit.witnesses);
    Ok(RunOutcome { exit_code: if audit.all_hold() { 0 } else { 1 }, human, report })
}
