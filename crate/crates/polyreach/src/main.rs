//! Command-line front end: reach-set computation, safety verification,
//! grid simulation, and SVG figures for 2D models.
//!
//! Exit codes are a stable contract:
//!   0  success (for `verify`: the system is safe)
//!   1  `verify` returned uncertain, or `simulate` found containment misses
//!   2  piece cap exceeded (rerun in hull mode or raise NNREACH_PIECE_CAP)
//!   3  any other error (usage, parsing, validation, solver failure)

use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use polyreach::error::Error;
use polyreach::jsonio::{self, ResultDoc};
use polyreach::model::{load_model, ModelBundle};
use polyreach::nn::{ReachOptions, DEFAULT_PIECE_CAP};
use polyreach::plot::render_svg;
use polyreach::sysreach::{reach_interval, ReachMode, ReachResult, StepSemantics, SwitchingSignal};
use polyreach::verify::{check_safety, simulate_grid, validate_containment, GridStyle, SafetyStatus};

#[derive(Parser)]
#[command(
    name = "polyreach",
    about = "Reachability and safety verification for piecewise linear systems with ReLU network controllers",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compute per-step reach sets and write a result JSON file.
    Reach(ReachArgs),
    /// Compute reach sets and check them against the model's unsafe region.
    Verify(VerifyArgs),
    /// Simulate grid-sampled trajectories, write a CSV, and cross-check
    /// containment in the reach sets.
    Simulate(SimulateArgs),
    /// Render a result JSON (and optional trajectory CSV) as an SVG figure.
    Plot(PlotArgs),
}

#[derive(Args)]
struct RunOpts {
    /// Model JSON file.
    model: String,
    /// Number of steps k (the run covers X_0..X_k).
    #[arg(long)]
    horizon: usize,
    /// Reach mode: exact (union of polytopes) or hull (one polytope per step).
    #[arg(long, default_value = "hull")]
    mode: String,
    /// Step semantics: coupled (exact closed-loop image) or decoupled
    /// (state and controller-output memberships treated independently,
    /// a sound over-approximation).
    #[arg(long, default_value = "coupled")]
    semantics: String,
    /// Mode id active at time 0; defaults to the model's switching.sigma0.
    #[arg(long)]
    sigma0: Option<usize>,
}

#[derive(Args)]
struct ReachArgs {
    #[command(flatten)]
    run: RunOpts,
    /// Output path for the result JSON.
    #[arg(long)]
    out: String,
}

#[derive(Args)]
struct VerifyArgs {
    #[command(flatten)]
    run: RunOpts,
    /// Output path for the verdict JSON.
    #[arg(long)]
    out: String,
    /// Also write the underlying reach result JSON.
    #[arg(long)]
    result_out: Option<String>,
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    run: RunOpts,
    /// Grid spacing over the bounding box of the initial set.
    #[arg(long)]
    grid: f64,
    /// Grid placement: inclusive (endpoints included) or centered (cell centers).
    #[arg(long, default_value = "inclusive")]
    grid_style: String,
    /// Output path for the trajectory CSV.
    #[arg(long)]
    out: String,
}

#[derive(Args)]
struct PlotArgs {
    /// Result JSON produced by `reach` or `verify --result-out`.
    result: String,
    /// Optional trajectory CSV produced by `simulate`.
    #[arg(long)]
    traj: Option<String>,
    /// Output path for the SVG figure.
    #[arg(long)]
    svg: String,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Help and version requests are successful output, not errors.
            if e.use_stderr() {
                eprintln!("{e}");
                return ExitCode::from(3);
            }
            print!("{e}");
            return ExitCode::SUCCESS;
        }
    };
    let outcome = match cli.command {
        Command::Reach(args) => cmd_reach(args),
        Command::Verify(args) => cmd_verify(args),
        Command::Simulate(args) => cmd_simulate(args),
        Command::Plot(args) => cmd_plot(args),
    };
    match outcome {
        Ok(code) => code,
        Err(Error::PieceCapExceeded { count, cap }) => {
            eprintln!("error: piece count {count} exceeds cap {cap}; rerun in hull mode or raise NNREACH_PIECE_CAP");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(3)
        }
    }
}

fn reach_options() -> Result<ReachOptions, Error> {
    let mut opts = ReachOptions::default();
    if let Ok(value) = std::env::var("NNREACH_PIECE_CAP") {
        let cap: usize = value.parse().map_err(|_| {
            Error::Usage(format!(
                "NNREACH_PIECE_CAP must be a positive integer, got '{value}'"
            ))
        })?;
        if cap == 0 {
            return Err(Error::Usage("NNREACH_PIECE_CAP must be >= 1".into()));
        }
        opts.piece_cap = cap;
    } else {
        opts.piece_cap = DEFAULT_PIECE_CAP;
    }
    Ok(opts)
}

struct Run {
    model: ModelBundle,
    signal: SwitchingSignal,
    sigma0: usize,
    mode: ReachMode,
    semantics: StepSemantics,
    result: ReachResult,
}

fn run_reach(opts: &RunOpts) -> Result<Run, Error> {
    let model = load_model(&opts.model)?;
    let mode: ReachMode = opts.mode.parse()?;
    let semantics: StepSemantics = opts.semantics.parse()?;
    let signal = model.switching_with_sigma0(opts.sigma0)?;
    let sigma0 = signal.mode_at(0)?;
    let reach_opts = reach_options()?;
    let result = reach_interval(
        &model.system,
        &signal,
        &model.network,
        &model.initial_set,
        opts.horizon,
        mode,
        semantics,
        &reach_opts,
    )?;
    let total: std::time::Duration = result.step_times.iter().sum();
    eprintln!(
        "reach: {} steps, {} polytopes total, {:.3}s",
        result.per_step.len(),
        result.cumulative.num_parts(),
        total.as_secs_f64()
    );
    Ok(Run {
        model,
        signal,
        sigma0,
        mode,
        semantics,
        result,
    })
}

fn cmd_reach(args: ReachArgs) -> Result<ExitCode, Error> {
    let run = run_reach(&args.run)?;
    let doc = ResultDoc::from_run(&run.result, &run.model, run.sigma0);
    jsonio::write_atomic(&args.out, &jsonio::result_to_json(&doc)?)?;
    println!(
        "reach: wrote {} ({} steps, mode {}, sigma0 {})",
        args.out,
        run.result.per_step.len(),
        run.mode.as_str(),
        run.sigma0
    );
    for (h, count) in run.result.piece_counts.iter().enumerate() {
        println!("  step {h}: {count} polytope(s)");
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_verify(args: VerifyArgs) -> Result<ExitCode, Error> {
    let run = run_reach(&args.run)?;
    let Some(spec) = &run.model.unsafe_spec else {
        return Err(Error::Usage(
            "verify requires an 'unsafe' set in the model file".into(),
        ));
    };
    let verdict = check_safety(&run.result, spec)?;
    let json = jsonio::verdict_to_json(
        &verdict,
        &run.model.name,
        run.mode,
        run.semantics,
        args.run.horizon,
        run.sigma0,
        &spec.label,
    );
    jsonio::write_atomic(&args.out, &json)?;
    if let Some(result_out) = &args.result_out {
        let doc = ResultDoc::from_run(&run.result, &run.model, run.sigma0);
        jsonio::write_atomic(result_out, &jsonio::result_to_json(&doc)?)?;
    }
    match verdict.status {
        SafetyStatus::Safe => {
            println!(
                "verdict: safe over [0,{}] for '{}' (mode {}, sigma0 {})",
                args.run.horizon,
                spec.label,
                run.mode.as_str(),
                run.sigma0
            );
            Ok(ExitCode::SUCCESS)
        }
        SafetyStatus::Uncertain => {
            let step = verdict.first_violation_step.unwrap_or(0);
            let note = match run.mode {
                ReachMode::Hull => "hull over-approximation; intersection may be spurious",
                ReachMode::Exact => "exact sets intersect the unsafe region for this signal",
            };
            println!(
                "verdict: uncertain at step {step} for '{}' ({note})",
                spec.label
            );
            Ok(ExitCode::from(1))
        }
    }
}

fn cmd_simulate(args: SimulateArgs) -> Result<ExitCode, Error> {
    let style: GridStyle = args.grid_style.parse()?;
    let run = run_reach(&args.run)?;
    let trajectories = simulate_grid(
        &run.model.system,
        &run.signal,
        &run.model.network,
        &run.model.initial_set,
        args.grid,
        args.run.horizon,
        style,
    )?;
    jsonio::write_atomic(
        &args.out,
        &jsonio::trajectories_to_csv(&trajectories, run.model.system.state_dim()),
    )?;
    let report = validate_containment(&trajectories, &run.result, 1e-6);
    println!(
        "simulate: {} trajectories x {} states -> {}",
        trajectories.len(),
        args.run.horizon + 1,
        args.out
    );
    println!(
        "containment: {} misses out of {} states",
        report.total_misses, report.total_states
    );
    if report.success() {
        Ok(ExitCode::SUCCESS)
    } else {
        if let Some((traj, step)) = report.first_miss {
            eprintln!("first miss: trajectory {traj} at step {step}");
        }
        Ok(ExitCode::from(1))
    }
}

fn cmd_plot(args: PlotArgs) -> Result<ExitCode, Error> {
    let doc = jsonio::result_from_json(&jsonio::read_to_string(&args.result)?)?;
    let trajectories = match &args.traj {
        Some(path) => Some(jsonio::trajectories_from_csv(&jsonio::read_to_string(
            path,
        )?)?),
        None => None,
    };
    let svg = render_svg(&doc, trajectories.as_deref())?;
    jsonio::write_atomic(&args.svg, &svg)?;
    println!("plot: wrote {}", args.svg);
    Ok(ExitCode::SUCCESS)
}
