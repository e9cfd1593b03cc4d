mod config;

use std::path::Path;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

use elastic_networks::admissibility::check_geometric;
use elastic_networks::export::{write_run, RunSummary};
use elastic_networks::scene::{builtin, BuiltinArgs, BUILTIN_SCENES};
use elastic_networks::solver::{run, FailureKind, RunOptions, Termination};
use elastic_networks::build_state;

use config::{RunConfig, SceneArgs, SimulateArgs, Sweep};

/// Process exit codes.
pub mod exit {
    pub const OK: u8 = 0;
    pub const USAGE: u8 = 1;
    pub const INADMISSIBLE: u8 = 2;
    pub const LENGTH_COLLAPSE: u8 = 3;
    pub const ANGLE_DEGENERACY: u8 = 4;
    pub const SOLVER_FAILURE: u8 = 5;
    pub const BOTH_VERDICTS: u8 = 6;
}

#[derive(Parser, Debug)]
#[command(name = "elastic-networks", version, about = "Elastic flow of planar curve networks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run the flow and write monitor series, frames and a summary.
    Simulate(SimulateArgs),
    /// Check admissibility of a scene without evolving it.
    Check(SceneArgs),
    /// List the built-in scenes, or print one as scene JSON.
    Scenes {
        /// Built-in scene to print.
        name: Option<String>,
        #[arg(long, default_value_t = 0.1)]
        eps: f64,
        #[arg(long, default_value_t = 2.0)]
        radius: f64,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("ELASTIC_NETWORKS_LOG", "warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { exit::USAGE } else { exit::OK });
        }
    };
    match dispatch(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit::USAGE)
        }
    }
}

fn dispatch(command: Command) -> Result<u8> {
    match command {
        Command::Simulate(args) => simulate(&args),
        Command::Check(args) => check(&args),
        Command::Scenes { name, eps, radius } => {
            match name {
                None => BUILTIN_SCENES.iter().for_each(|s| println!("{s}")),
                Some(n) => println!("{}", builtin(&n, &BuiltinArgs { eps, radius })?.to_json()?),
            }
            Ok(exit::OK)
        }
    }
}

fn check(args: &SceneArgs) -> Result<u8> {
    let scene = args.load()?;
    let state = build_state(scene.topology.clone(), &scene.curves, scene.params.grid_n)?;
    let report = check_geometric(&state, scene.params.mu, &scene.params.tolerances);
    println!("{}", serde_json::to_string_pretty(&report)?);
    Ok(if report.is_admissible() { exit::OK } else { exit::INADMISSIBLE })
}

fn simulate(args: &SimulateArgs) -> Result<u8> {
    let config = RunConfig::from_args(args)?;
    match &args.sweep {
        None => run_one(&config, &config.out),
        Some(list) => {
            let sweep: Sweep = list.parse()?;
            let runs: Vec<(String, RunConfig)> = sweep
                .values
                .iter()
                .map(|v| Ok((format!("{}={v}", sweep.param), config.with_override(&sweep.param, v)?)))
                .collect::<Result<_>>()?;
            let root = &config.out;
            let codes: Vec<Result<u8>> = std::thread::scope(|scope| {
                let handles: Vec<_> = runs
                    .iter()
                    .map(|(label, cfg)| scope.spawn(move || run_one(cfg, &root.join(label))))
                    .collect();
                handles.into_iter().map(|h| h.join().expect("sweep worker panicked")).collect()
            });
            // first nonzero code in list order, so the result does not depend on scheduling
            let mut result = exit::OK;
            for ((label, _), code) in runs.iter().zip(codes) {
                let code = code.with_context(|| format!("sweep run {label}"))?;
                if result == exit::OK {
                    result = code;
                }
            }
            Ok(result)
        }
    }
}

fn run_one(config: &RunConfig, out_dir: &Path) -> Result<u8> {
    let scene = config.scene()?;
    let options = RunOptions {
        scheme: config.scheme,
        frames_every: config.frames_every,
        ..RunOptions::default()
    };
    let output = run(&scene, &options)?;
    write_run(&scene, &output, out_dir, config.format)
        .with_context(|| format!("writing results to {}", out_dir.display()))?;
    let summary = RunSummary::new(&scene, &output);
    let code = exit_code(&summary.termination);
    let energy = match (summary.initial_energy, summary.final_energy) {
        (Some(a), Some(b)) => format!(", E = {a} -> {b}"),
        _ => String::new(),
    };
    eprintln!(
        "{}: {} after {} steps, t = {}{energy}",
        out_dir.display(),
        describe(&summary.termination),
        summary.steps,
        summary.final_time,
    );
    Ok(code)
}

fn exit_code(termination: &Termination) -> u8 {
    match termination {
        Termination::ReachedEnd => exit::OK,
        Termination::Inadmissible { .. } => exit::INADMISSIBLE,
        Termination::Singularity { verdict } => match (verdict.length_collapse, verdict.angle_degeneracy) {
            (true, true) => exit::BOTH_VERDICTS,
            (true, false) => exit::LENGTH_COLLAPSE,
            _ => exit::ANGLE_DEGENERACY,
        },
        Termination::Failure { .. } => exit::SOLVER_FAILURE,
    }
}

fn describe(termination: &Termination) -> String {
    match termination {
        Termination::ReachedEnd => "reached t_end".into(),
        Termination::Inadmissible { reasons } => format!("inadmissible ({})", reasons.join("; ")),
        Termination::Singularity { verdict } => {
            let mut parts = Vec::new();
            if verdict.length_collapse {
                parts.push("a curve length collapsed");
            }
            if verdict.angle_degeneracy {
                parts.push("a junction angle degenerated");
            }
            format!("singularity: {}", parts.join(" and "))
        }
        Termination::Failure { failure, message } => {
            let kind = match failure {
                FailureKind::StepFailure => "step failure",
                FailureKind::DegenerateJunction => "degenerate junction",
                FailureKind::RegularityLoss => "regularity loss",
                FailureKind::Other => "solver error",
            };
            format!("{kind}: {message}")
        }
    }
}
