//! Thin command-line front end over the library. Exit codes: 0 on
//! success, 2 on configuration errors, 3 when the solver fails to
//! converge.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use safeddp::artifacts;
use safeddp::config::RunConfig;
use safeddp::error::Error;
use safeddp::montecarlo;
use safeddp::solver::{solve_baseline_from, solve_from, Solution};

#[derive(Parser)]
#[command(
    name = "safeddp",
    about = "Safety-embedded min-max trajectory optimization",
    version
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Manage run configuration files.
    Config {
        #[command(subcommand)]
        action: ConfigCmd,
    },
    /// Solve a configured problem and write the policy artifacts.
    Solve {
        #[arg(long)]
        config: PathBuf,
        /// Solve with the adversary disabled (plain safety-embedded DDP).
        #[arg(long)]
        baseline: bool,
        /// Output directory; defaults to the config's `output-dir`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the Monte-Carlo robustness batch against a saved solution.
    Evaluate {
        #[arg(long)]
        config: PathBuf,
        /// Solve before evaluating instead of loading saved artifacts.
        #[arg(long)]
        solve_first: bool,
        /// Evaluate the baseline solution instead of the robust one.
        #[arg(long)]
        baseline: bool,
        /// Evaluate both policies and write a side-by-side comparison.
        #[arg(long, conflicts_with = "baseline")]
        compare_baseline: bool,
        /// Override the scenario seed (artifact hashes are unaffected).
        #[arg(long)]
        seed: Option<u64>,
        /// Override the scenario trial count.
        #[arg(long)]
        trials: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Re-simulate the batch and export per-timestep quantile envelopes.
    ExportPlotdata {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        solve_first: bool,
        #[arg(long)]
        baseline: bool,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        trials: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum ConfigCmd {
    /// Write a default configuration file.
    Init {
        /// `pendulum` or `quadrotor`.
        #[arg(long, default_value = "pendulum")]
        system: String,
        /// Destination path; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

const EXIT_CONFIG: u8 = 2;
const EXIT_NO_CONVERGENCE: u8 = 3;

fn fail(code: u8, msg: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {msg}");
    ExitCode::from(code)
}

fn is_config_error(e: &Error) -> bool {
    matches!(
        e,
        Error::Config(_)
            | Error::InvalidOption(_)
            | Error::InvalidCost(_)
            | Error::UnsafeInitialState { .. }
            | Error::ScenarioMismatch(_)
            | Error::Io(_)
    )
}

fn exit_for(e: &Error) -> u8 {
    if is_config_error(e) {
        EXIT_CONFIG
    } else {
        EXIT_NO_CONVERGENCE
    }
}

struct Run {
    cfg: RunConfig,
    dir: PathBuf,
}

fn load_run(config: &PathBuf, out: Option<PathBuf>) -> Result<Run, ExitCode> {
    let cfg = RunConfig::load(config).map_err(|e| fail(EXIT_CONFIG, e))?;
    let dir = out.unwrap_or_else(|| PathBuf::from(&cfg.output_dir));
    Ok(Run { cfg, dir })
}

fn baseline_dir(dir: &PathBuf) -> PathBuf {
    dir.join("baseline")
}

/// Solve one policy and persist its artifacts; non-convergence is
/// reported after the artifacts are written so the log is inspectable.
fn solve_and_write(run: &Run, baseline: bool) -> Result<Solution, ExitCode> {
    let built = run.cfg.build().map_err(|e| fail(exit_for(&e), e))?;
    let solution = if baseline {
        solve_baseline_from(
            &built.problem,
            &built.nominal_min_inputs,
            &built.nominal_max_inputs,
        )
    } else {
        solve_from(
            &built.problem,
            &built.nominal_min_inputs,
            &built.nominal_max_inputs,
        )
    }
    .map_err(|e| fail(exit_for(&e), e))?;
    let dir = if baseline {
        baseline_dir(&run.dir)
    } else {
        run.dir.clone()
    };
    artifacts::write_solution_artifacts(&dir, &run.cfg, &solution)
        .map_err(|e| fail(EXIT_CONFIG, e))?;
    let label = if baseline { "baseline" } else { "robust" };
    println!(
        "{label}: converged={} iterations={} cost={:.6} -> {}",
        solution.converged,
        solution.iterations,
        solution.cost,
        dir.display()
    );
    if !solution.converged {
        return Err(fail(
            EXIT_NO_CONVERGENCE,
            format!("{label} solve did not converge"),
        ));
    }
    Ok(solution)
}

fn obtain_solution(run: &Run, baseline: bool, solve_first: bool) -> Result<Solution, ExitCode> {
    if solve_first {
        solve_and_write(run, baseline)
    } else {
        let dir = if baseline {
            baseline_dir(&run.dir)
        } else {
            run.dir.clone()
        };
        artifacts::load_solution(&dir, &run.cfg).map_err(|e| fail(EXIT_CONFIG, e))
    }
}

fn scenario_with_overrides(
    run: &Run,
    seed: Option<u64>,
    trials: Option<usize>,
) -> Result<montecarlo::Scenario, ExitCode> {
    let built = run.cfg.build().map_err(|e| fail(exit_for(&e), e))?;
    let mut scenario = built.scenario;
    if let Some(s) = seed {
        scenario.seed = s;
    }
    if let Some(t) = trials {
        scenario.trials = t;
    }
    scenario.validate().map_err(|e| fail(EXIT_CONFIG, e))?;
    Ok(scenario)
}

fn run_metrics(
    run: &Run,
    solution: &Solution,
    scenario: &montecarlo::Scenario,
    label: &str,
) -> Result<montecarlo::Metrics, ExitCode> {
    let built = run.cfg.build().map_err(|e| fail(exit_for(&e), e))?;
    let metrics = montecarlo::evaluate(&built.problem, solution, scenario)
        .map_err(|e| fail(exit_for(&e), e))?;
    artifacts::write_metrics_artifacts(&run.dir, &run.cfg, label, &metrics)
        .map_err(|e| fail(EXIT_CONFIG, e))?;
    println!(
        "{label}: safety={:.1}% reachability={:.1}% success={:.1}% rmsd={:.4} variance={:.4} ({} trials, seed {})",
        metrics.safety_rate,
        metrics.reachability_rate,
        metrics.success_rate,
        metrics.rmsd,
        metrics.total_state_variance,
        scenario.trials,
        scenario.seed
    );
    Ok(metrics)
}

fn cmd_config(action: ConfigCmd) -> Result<(), ExitCode> {
    match action {
        ConfigCmd::Init { system, out } => {
            let cfg = match system.as_str() {
                "pendulum" => RunConfig::pendulum_default(),
                "quadrotor" => RunConfig::quadrotor_default(),
                other => {
                    return Err(fail(
                        EXIT_CONFIG,
                        format!("unknown system `{other}` (expected pendulum or quadrotor)"),
                    ))
                }
            };
            let text = cfg.to_toml().map_err(|e| fail(EXIT_CONFIG, e))?;
            match out {
                Some(path) => {
                    if let Some(parent) = path.parent() {
                        std::fs::create_dir_all(parent).map_err(|e| fail(EXIT_CONFIG, e))?;
                    }
                    std::fs::write(&path, &text).map_err(|e| fail(EXIT_CONFIG, e))?;
                    println!("wrote {}", path.display());
                }
                None => print!("{text}"),
            }
            Ok(())
        }
    }
}

fn cmd_solve(config: PathBuf, baseline: bool, out: Option<PathBuf>) -> Result<(), ExitCode> {
    let run = load_run(&config, out)?;
    solve_and_write(&run, baseline)?;
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_evaluate(
    config: PathBuf,
    solve_first: bool,
    baseline: bool,
    compare_baseline: bool,
    seed: Option<u64>,
    trials: Option<usize>,
    out: Option<PathBuf>,
) -> Result<(), ExitCode> {
    let run = load_run(&config, out)?;
    let scenario = scenario_with_overrides(&run, seed, trials)?;
    if compare_baseline {
        let robust = obtain_solution(&run, false, solve_first)?;
        let base = obtain_solution(&run, true, solve_first)?;
        let m_robust = run_metrics(&run, &robust, &scenario, "robust")?;
        let m_base = run_metrics(&run, &base, &scenario, "baseline")?;
        let cmp = montecarlo::compare(&m_robust, &m_base).map_err(|e| fail(exit_for(&e), e))?;
        artifacts::write_comparison_artifact(&run.dir, &run.cfg, &cmp)
            .map_err(|e| fail(EXIT_CONFIG, e))?;
        println!(
            "comparison: safety {:+.1} success {:+.1} variance {:+.4} rmsd {:+.4} (robust minus baseline)",
            cmp.safety_delta, cmp.success_delta, cmp.variance_delta, cmp.rmsd_delta
        );
    } else {
        let solution = obtain_solution(&run, baseline, solve_first)?;
        let label = if baseline { "baseline" } else { "robust" };
        run_metrics(&run, &solution, &scenario, label)?;
    }
    Ok(())
}

fn cmd_export_plotdata(
    config: PathBuf,
    solve_first: bool,
    baseline: bool,
    seed: Option<u64>,
    trials: Option<usize>,
    out: Option<PathBuf>,
) -> Result<(), ExitCode> {
    let run = load_run(&config, out)?;
    let scenario = scenario_with_overrides(&run, seed, trials)?;
    let solution = obtain_solution(&run, baseline, solve_first)?;
    let built = run.cfg.build().map_err(|e| fail(exit_for(&e), e))?;
    let envelope = artifacts::compute_envelope(&built.problem, &solution, &scenario)
        .map_err(|e| fail(exit_for(&e), e))?;
    let label = if baseline { "baseline" } else { "robust" };
    artifacts::write_plot_data(&run.dir, &run.cfg, label, &envelope)
        .map_err(|e| fail(EXIT_CONFIG, e))?;
    println!(
        "{label}: envelope over {} trials -> {}",
        envelope.trials_used,
        artifacts::plot_data_path(&run.dir, label).display()
    );
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.cmd {
        Cmd::Config { action } => cmd_config(action),
        Cmd::Solve {
            config,
            baseline,
            out,
        } => cmd_solve(config, baseline, out),
        Cmd::Evaluate {
            config,
            solve_first,
            baseline,
            compare_baseline,
            seed,
            trials,
            out,
        } => cmd_evaluate(
            config,
            solve_first,
            baseline,
            compare_baseline,
            seed,
            trials,
            out,
        ),
        Cmd::ExportPlotdata {
            config,
            solve_first,
            baseline,
            seed,
            trials,
            out,
        } => cmd_export_plotdata(config, solve_first, baseline, seed, trials, out),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(code) => code,
    }
}
