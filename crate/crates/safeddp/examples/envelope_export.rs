//! Config-driven workflow end to end: load a default run configuration,
//! solve it, run the Monte-Carlo batch, and export per-timestep 95%
//! quantile envelopes as CSV plot data.
//!
//! Run with: cargo run --release --example envelope_export
//! Writes into ./target/example-output/

use std::path::Path;

use safeddp::artifacts::{compute_envelope, plot_data_path, write_plot_data};
use safeddp::config::RunConfig;
use safeddp::montecarlo::evaluate;
use safeddp::solver::solve_from;

fn main() {
    let cfg = RunConfig::pendulum_default();
    println!("config (editable TOML, same format as `safeddp config init`):");
    println!("{}", cfg.to_toml().expect("serialize"));

    let built = cfg.build().expect("build problem from config");
    let sol = solve_from(
        &built.problem,
        &built.nominal_min_inputs,
        &built.nominal_max_inputs,
    )
    .expect("solve");
    println!(
        "solved: converged={} in {} iterations, cost {:.3}",
        sol.converged, sol.iterations, sol.cost
    );

    let metrics = evaluate(&built.problem, &sol, &built.scenario).expect("batch");
    println!(
        "batch of {}: safety {:.1}% reach {:.1}% success {:.1}%",
        built.scenario.trials, metrics.safety_rate, metrics.reachability_rate, metrics.success_rate
    );

    let envelope = compute_envelope(&built.problem, &sol, &built.scenario).expect("envelope");
    let dir = Path::new("target/example-output");
    write_plot_data(dir, &cfg, "robust", &envelope).expect("write csv");
    println!(
        "envelope over {} finite trials -> {}",
        envelope.trials_used,
        plot_data_path(dir, "robust").display()
    );
    println!(
        "rows are (step, time, component, mean, lower, upper); the band is the\n\
         2.5%-97.5% quantile range of the true closed-loop states across trials"
    );
}
