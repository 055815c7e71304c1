//! Command line front end for the `gr1` toolkit.
//!
//! One binary, five subcommands:
//!
//! - `check`: parse specifications and report shape diagnostics.
//! - `synth`: synthesize a strategy, writing `strategy.json`,
//!   `strategy.dot`, and `stats.json`.
//! - `simulate`: run seeded Monte Carlo corridor experiments for one arm or
//!   a baseline/incremental pair, writing histograms, trace logs, and a
//!   comparison report.
//! - `report`: render a human-readable summary from simulation artifacts.
//! - `export-dot`: render a strategy or refinement tree as Graphviz DOT.
//!
//! All artifact files are deterministic functions of the inputs and the
//! seed; wall-clock timings go to stderr only. Exit codes: 0 success, 1
//! domain failure (invalid spec, unrealizable under `--require-realizable`,
//! arm mismatch), 2 usage or IO failure.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::fs;
use std::io::{self, Write as _};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{ArgGroup, Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use gr1::sim::{ComparisonReport, Histogram, Mode, ScenarioConfig, TrialResult};
use gr1::solve::{solve_with_semantics, Semantics, SynthesisResult};
use gr1::tree::RefinementTree;
use gr1::{
    build_game, compare, parse_spec, run_trials, summarize, validate_spec, CellCorridor, GR1Spec,
    GameStructure, Strategy,
};

#[derive(Parser)]
#[command(
    name = "gr1",
    version,
    about = "GR(1) synthesis and corridor simulation toolkit"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse specifications and report shape diagnostics
    Check(CheckArgs),
    /// Synthesize a strategy and write strategy and stats artifacts
    Synth(SynthArgs),
    /// Run seeded Monte Carlo corridor experiments
    Simulate(SimulateArgs),
    /// Summarize simulation artifacts from an output directory
    Report(ReportArgs),
    /// Export a strategy or refinement tree as Graphviz DOT
    ExportDot(ExportDotArgs),
}

#[derive(Args)]
struct CheckArgs {
    /// Specification file (repeatable)
    #[arg(long, required = true)]
    spec: Vec<PathBuf>,
}

#[derive(Args)]
struct SynthArgs {
    /// Specification file
    #[arg(long)]
    spec: PathBuf,
    /// Output directory for strategy.json, strategy.dot, stats.json
    #[arg(long)]
    out: PathBuf,
    /// Fail with exit code 1 when the specification is unrealizable
    #[arg(long)]
    require_realizable: bool,
    /// Strict realizability semantics (the default)
    #[arg(long, conflicts_with = "non_strict")]
    strict: bool,
    /// Non-strict semantics: a run is winning once the environment has
    /// violated its own assumptions first
    #[arg(long)]
    non_strict: bool,
}

#[derive(Args)]
struct SimulateArgs {
    /// Specification file; pass twice with `--arms both`
    #[arg(long, required = true)]
    spec: Vec<PathBuf>,
    /// Scenario configuration (JSON)
    #[arg(long)]
    scenario: PathBuf,
    /// Corridor file (JSON) overriding the scenario's corridor
    #[arg(long)]
    corridor: Option<PathBuf>,
    /// Output directory for histograms, trace logs, and comparison
    #[arg(long)]
    out: PathBuf,
    /// Master seed overriding the scenario's seed
    #[arg(long)]
    seed: Option<u64>,
    /// Trial count overriding the scenario's trial count
    #[arg(long)]
    trials: Option<u64>,
    /// Which arm to run; defaults to the scenario's mode
    #[arg(long, value_enum)]
    arms: Option<Arms>,
}

#[derive(Args)]
struct ReportArgs {
    /// Directory holding simulate artifacts
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
#[command(group(ArgGroup::new("input").required(true).args(["spec", "tree"])))]
struct ExportDotArgs {
    /// Specification file; the synthesized strategy is exported
    #[arg(long)]
    spec: Option<PathBuf>,
    /// Refinement tree file (JSON)
    #[arg(long)]
    tree: Option<PathBuf>,
    /// Output file; stdout when absent
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Arms {
    Baseline,
    Incremental,
    Both,
}

/// Failure classified by exit code: domain errors exit 1, IO errors exit 2.
enum CliError {
    Domain(String),
    Io(String),
}

impl CliError {
    fn report(&self) -> ExitCode {
        match self {
            CliError::Domain(msg) => {
                eprintln!("error: {msg}");
                ExitCode::from(1)
            }
            CliError::Io(msg) => {
                eprintln!("error: {msg}");
                ExitCode::from(2)
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Check(args) => cmd_check(&args),
        Command::Synth(args) => cmd_synth(&args),
        Command::Simulate(args) => cmd_simulate(&args),
        Command::Report(args) => cmd_report(&args),
        Command::ExportDot(args) => cmd_export_dot(&args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => e.report(),
    }
}

fn read_file(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

/// Write to stdout, treating a closed pipe as the end of output rather
/// than an error so pipelines like `gr1 report ... | head` stay quiet.
fn print_stdout(text: &str) {
    let mut stdout = io::stdout().lock();
    if let Err(e) = stdout.write_all(text.as_bytes()).and_then(|()| stdout.flush()) {
        if e.kind() == io::ErrorKind::BrokenPipe {
            std::process::exit(0);
        }
        eprintln!("error: stdout: {e}");
        std::process::exit(2);
    }
}

fn write_artifact(dir: &Path, name: &str, content: &str) -> Result<(), CliError> {
    let path = dir.join(name);
    fs::write(&path, content).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn ensure_out_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))
}

/// Parse and shape-check a specification file.
fn load_spec(path: &Path) -> Result<GR1Spec, CliError> {
    let text = read_file(path)?;
    let spec = parse_spec(&text)
        .map_err(|e| CliError::Domain(format!("{}: {e}", path.display())))?;
    let diags = validate_spec(&spec);
    if !diags.is_empty() {
        let mut msg = format!("{}: invalid specification", path.display());
        for d in &diags {
            let _ = write!(msg, "\n  {d}");
        }
        return Err(CliError::Domain(msg));
    }
    Ok(spec)
}

fn file_stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}

// ---------------------------------------------------------------- check --

fn cmd_check(args: &CheckArgs) -> Result<(), CliError> {
    let mut failed = false;
    for path in &args.spec {
        let text = read_file(path)?;
        match parse_spec(&text) {
            Err(e) => {
                eprintln!("{}: {e}", path.display());
                failed = true;
            }
            Ok(spec) => {
                let diags = validate_spec(&spec);
                if diags.is_empty() {
                    print_stdout(&format!("{}: ok\n", path.display()));
                } else {
                    for d in &diags {
                        eprintln!("{}: {d}", path.display());
                    }
                    failed = true;
                }
            }
        }
    }
    if failed {
        Err(CliError::Domain("specification check failed".into()))
    } else {
        Ok(())
    }
}

// ---------------------------------------------------------------- synth --

/// Deterministic synthesis record written to `stats.json`. Wall-clock time
/// is deliberately absent; it goes to stderr.
#[derive(Serialize)]
struct SynthRecord {
    spec: String,
    semantics: &'static str,
    realizable: bool,
    env_states: usize,
    sys_states: usize,
    joint_states: usize,
    edges: usize,
    env_goals: usize,
    sys_goals: usize,
    winning_states: usize,
    strategy_nodes: Option<usize>,
    fixpoint_states: usize,
    fixpoint_iterations: usize,
    outer_passes: usize,
}

fn synthesize(
    spec: &GR1Spec,
    semantics: Semantics,
) -> Result<(GameStructure, SynthesisResult), CliError> {
    let game = build_game(spec).map_err(|e| CliError::Domain(e.to_string()))?;
    let result = solve_with_semantics(&game, semantics);
    Ok((game, result))
}

fn cmd_synth(args: &SynthArgs) -> Result<(), CliError> {
    let started = Instant::now();
    let spec = load_spec(&args.spec)?;
    let semantics = if args.non_strict {
        Semantics::NonStrict
    } else {
        Semantics::Strict
    };
    let (game, result) = synthesize(&spec, semantics)?;

    let record = SynthRecord {
        spec: file_stem(&args.spec),
        semantics: match semantics {
            Semantics::Strict => "strict",
            Semantics::NonStrict => "non-strict",
        },
        realizable: result.realizable,
        env_states: game.env_state_count(),
        sys_states: game.sys_state_count(),
        joint_states: game.joint_state_count(),
        edges: game.edge_count(),
        env_goals: game.env_goal_sets().len(),
        sys_goals: game.sys_goal_sets().len(),
        winning_states: result.winning_region.len(),
        strategy_nodes: result.strategy.as_ref().map(|s| s.node_count()),
        fixpoint_states: result.stats.states,
        fixpoint_iterations: result.stats.iterations,
        outer_passes: result.stats.outer_passes,
    };

    ensure_out_dir(&args.out)?;
    let stats_json =
        serde_json::to_string_pretty(&record).expect("synthesis record serializes");
    write_artifact(&args.out, "stats.json", &stats_json)?;
    if let Some(strategy) = &result.strategy {
        write_artifact(&args.out, "strategy.json", &strategy.to_json())?;
        write_artifact(&args.out, "strategy.dot", &strategy.to_dot())?;
    }

    print_stdout(if result.realizable {
        "REALIZABLE\n"
    } else {
        "UNREALIZABLE\n"
    });
    eprintln!("wall_time_ms: {}", started.elapsed().as_millis());

    if args.require_realizable && !result.realizable {
        return Err(CliError::Domain(format!(
            "{}: specification is unrealizable",
            args.spec.display()
        )));
    }
    Ok(())
}

// ------------------------------------------------------------- simulate --

/// One arm of an experiment: its strategy and the per-arm configuration.
struct ArmPlan {
    mode: Mode,
    spec_path: PathBuf,
    strategy: Strategy,
}

fn mode_name(mode: Mode) -> &'static str {
    match mode {
        Mode::Baseline => "baseline",
        Mode::Incremental => "incremental",
    }
}

/// Classify a specification as the baseline or incremental arm of a
/// scenario by its declared environment variables: the incremental spec
/// declares every refinement level, the baseline spec declares the ground
/// level but not the root.
fn classify_arm(spec: &GR1Spec, config: &ScenarioConfig) -> Option<Mode> {
    let declared: BTreeSet<&str> = spec.env_vars().map(|d| d.name.as_str()).collect();
    let levels: Vec<&str> = config.levels.iter().map(|l| l.var.as_str()).collect();
    let (root, ground) = (*levels.first()?, *levels.last()?);
    if levels.iter().all(|v| declared.contains(v)) {
        Some(Mode::Incremental)
    } else if declared.contains(ground) && !declared.contains(root) {
        Some(Mode::Baseline)
    } else {
        None
    }
}

/// Load a spec and synthesize its strategy, insisting on realizability:
/// simulation replays a strategy, so an unrealizable arm is a domain error.
fn arm_strategy(path: &Path) -> Result<Strategy, CliError> {
    let spec = load_spec(path)?;
    let (_, result) = synthesize(&spec, Semantics::Strict)?;
    result.strategy.ok_or_else(|| {
        CliError::Domain(format!("{}: specification is unrealizable", path.display()))
    })
}

fn plan_arms(args: &SimulateArgs, config: &ScenarioConfig) -> Result<Vec<ArmPlan>, CliError> {
    let arms = args.arms.unwrap_or(match config.mode {
        Mode::Baseline => Arms::Baseline,
        Mode::Incremental => Arms::Incremental,
    });
    match arms {
        Arms::Both => {
            if args.spec.len() != 2 {
                return Err(CliError::Domain(format!(
                    "--arms both needs exactly two --spec files, got {}",
                    args.spec.len()
                )));
            }
            let mut baseline = None;
            let mut incremental = None;
            for path in &args.spec {
                let spec = load_spec(path)?;
                match classify_arm(&spec, config) {
                    Some(Mode::Baseline) if baseline.is_none() => baseline = Some(path.clone()),
                    Some(Mode::Incremental) if incremental.is_none() => {
                        incremental = Some(path.clone())
                    }
                    Some(mode) => {
                        return Err(CliError::Domain(format!(
                            "both --spec files look like the {} arm",
                            mode_name(mode)
                        )))
                    }
                    None => {
                        return Err(CliError::Domain(format!(
                            "{}: environment variables match neither arm of scenario `{}`",
                            path.display(),
                            config.name
                        )))
                    }
                }
            }
            let (base, inc) = (baseline.unwrap(), incremental.unwrap());
            Ok(vec![
                ArmPlan {
                    mode: Mode::Baseline,
                    strategy: arm_strategy(&base)?,
                    spec_path: base,
                },
                ArmPlan {
                    mode: Mode::Incremental,
                    strategy: arm_strategy(&inc)?,
                    spec_path: inc,
                },
            ])
        }
        single => {
            if args.spec.len() != 1 {
                return Err(CliError::Domain(format!(
                    "a single arm needs exactly one --spec file, got {}",
                    args.spec.len()
                )));
            }
            let mode = match single {
                Arms::Baseline => Mode::Baseline,
                Arms::Incremental => Mode::Incremental,
                Arms::Both => unreachable!("handled above"),
            };
            let path = args.spec[0].clone();
            let spec = load_spec(&path)?;
            match classify_arm(&spec, config) {
                Some(m) if m == mode => {}
                _ => {
                    return Err(CliError::Domain(format!(
                        "{}: environment variables do not match the {} arm of scenario `{}`",
                        path.display(),
                        mode_name(mode),
                        config.name
                    )))
                }
            }
            Ok(vec![ArmPlan {
                mode,
                strategy: arm_strategy(&path)?,
                spec_path: path,
            }])
        }
    }
}

fn traces_jsonl(trials: &[TrialResult]) -> String {
    let mut out = String::new();
    for t in trials {
        out.push_str(&serde_json::to_string(t).expect("trial result serializes"));
        out.push('\n');
    }
    out
}

fn print_histogram_line(mode: Mode, hist: &Histogram) {
    print_stdout(&format!(
        "{}: trials={} no_event={} mean_s={:.6} infeasible_rate={:.6}\n",
        mode_name(mode),
        hist.trials,
        hist.no_event_trials,
        hist.mean_performance,
        hist.infeasible_rate
    ));
}

fn cmd_simulate(args: &SimulateArgs) -> Result<(), CliError> {
    let started = Instant::now();
    let mut config = ScenarioConfig::from_json(&read_file(&args.scenario)?)
        .map_err(|e| CliError::Domain(format!("{}: {e}", args.scenario.display())))?;
    if let Some(path) = &args.corridor {
        config.corridor = serde_json::from_str::<CellCorridor>(&read_file(path)?)
            .map_err(|e| CliError::Domain(format!("{}: {e}", path.display())))?;
    }
    if let Some(trials) = args.trials {
        config.trials = trials;
    }
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    config
        .validate()
        .map_err(|e| CliError::Domain(format!("{}: {e}", args.scenario.display())))?;

    let plans = plan_arms(args, &config)?;
    let both = plans.len() == 2;

    // Compute every artifact before the first write.
    struct ArmOutput {
        mode: Mode,
        histogram: Histogram,
        traces: String,
    }
    let mut outputs = Vec::new();
    for plan in &plans {
        let mut arm_config = config.clone();
        arm_config.mode = plan.mode;
        let trials = run_trials(&plan.strategy, &arm_config).map_err(|e| {
            CliError::Domain(format!("{}: {e}", plan.spec_path.display()))
        })?;
        let histogram = summarize(&plan.strategy, &arm_config, &trials).map_err(|e| {
            CliError::Domain(format!("{}: {e}", plan.spec_path.display()))
        })?;
        outputs.push(ArmOutput {
            mode: plan.mode,
            histogram,
            traces: traces_jsonl(&trials),
        });
    }
    let comparison = if both {
        let base = &outputs[0].histogram;
        let inc = &outputs[1].histogram;
        Some(compare(base, inc).map_err(|e| CliError::Domain(e.to_string()))?)
    } else {
        None
    };

    ensure_out_dir(&args.out)?;
    for out in &outputs {
        let suffix = if both {
            format!("_{}", mode_name(out.mode))
        } else {
            String::new()
        };
        write_artifact(&args.out, &format!("histogram{suffix}.json"), &out.histogram.to_json())?;
        write_artifact(&args.out, &format!("histogram{suffix}.csv"), &out.histogram.to_csv())?;
        write_artifact(&args.out, &format!("traces{suffix}.jsonl"), &out.traces)?;
    }
    if let Some(report) = &comparison {
        write_artifact(&args.out, "comparison.json", &report.to_json())?;
    }

    for out in &outputs {
        print_histogram_line(out.mode, &out.histogram);
    }
    if let Some(report) = &comparison {
        print_stdout(&format!(
            "comparison: mean_s_delta={:.6} infeasible_rate_delta={:.6}\n",
            report.mean_performance_delta, report.infeasible_rate_delta
        ));
    }
    eprintln!("wall_time_ms: {}", started.elapsed().as_millis());
    Ok(())
}

// --------------------------------------------------------------- report --

fn render_histogram(hist: &Histogram) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "scenario {} ({}): {} trials with an event, {} without",
        hist.scenario,
        mode_name(hist.mode),
        hist.trials,
        hist.no_event_trials
    );
    let _ = writeln!(
        out,
        "  mean_s={:.6} infeasible_rate={:.6}",
        hist.mean_performance, hist.infeasible_rate
    );
    for row in &hist.actions {
        match row.mean_performance {
            Some(m) => {
                let _ = writeln!(out, "  {:<16} {:>6}  mean_s={m:.6}", row.action, row.count);
            }
            None => {
                let _ = writeln!(out, "  {:<16} {:>6}", row.action, row.count);
            }
        }
    }
    out
}

fn cmd_report(args: &ReportArgs) -> Result<(), CliError> {
    let single = args.out.join("histogram.json");
    let pair = [
        args.out.join("histogram_baseline.json"),
        args.out.join("histogram_incremental.json"),
    ];
    if single.is_file() {
        let hist: Histogram = serde_json::from_str(&read_file(&single)?)
            .map_err(|e| CliError::Domain(format!("{}: {e}", single.display())))?;
        print_stdout(&render_histogram(&hist));
        return Ok(());
    }
    if pair.iter().all(|p| p.is_file()) {
        for path in &pair {
            let hist: Histogram = serde_json::from_str(&read_file(path)?)
                .map_err(|e| CliError::Domain(format!("{}: {e}", path.display())))?;
            print_stdout(&render_histogram(&hist));
        }
        let comparison = args.out.join("comparison.json");
        if comparison.is_file() {
            let report: ComparisonReport = serde_json::from_str(&read_file(&comparison)?)
                .map_err(|e| CliError::Domain(format!("{}: {e}", comparison.display())))?;
            let mut out = format!(
                "incremental - baseline: mean_s_delta={:.6} infeasible_rate_delta={:.6}\n",
                report.mean_performance_delta, report.infeasible_rate_delta
            );
            for row in &report.actions {
                let _ = writeln!(
                    out,
                    "  {:<16} baseline={:>6} incremental={:>6} delta={:+}",
                    row.action, row.baseline, row.incremental, row.delta
                );
            }
            print_stdout(&out);
        }
        return Ok(());
    }
    Err(CliError::Io(format!(
        "{}: no histogram artifacts found",
        args.out.display()
    )))
}

// ----------------------------------------------------------- export-dot --

fn cmd_export_dot(args: &ExportDotArgs) -> Result<(), CliError> {
    let dot = if let Some(path) = &args.spec {
        let spec = load_spec(path)?;
        let (_, result) = synthesize(&spec, Semantics::Strict)?;
        match result.strategy {
            Some(strategy) => strategy.to_dot(),
            None => {
                return Err(CliError::Domain(format!(
                    "{}: unrealizable specification has no strategy to export",
                    path.display()
                )))
            }
        }
    } else {
        let path = args.tree.as_ref().expect("clap group guarantees one input");
        let tree = RefinementTree::from_json(&read_file(path)?)
            .map_err(|e| CliError::Domain(format!("{}: {e}", path.display())))?;
        tree.to_dot()
    };
    match &args.out {
        Some(path) => {
            fs::write(path, dot).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
        }
        None => {
            print_stdout(&dot);
            Ok(())
        }
    }
}
