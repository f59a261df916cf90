use std::time::Instant;

use safeddp::benchmarks::{quadrotor_benchmark, quadrotor_scenario, QuadrotorConfig};
use safeddp::montecarlo::evaluate;
use safeddp::solver::{solve_baseline_from, solve_from};

fn main() {
    let cfg = QuadrotorConfig::default();
    let bench = quadrotor_benchmark(cfg).unwrap();
    let t0 = Instant::now();
    let robust = solve_from(
        &bench.problem,
        &bench.nominal_min_inputs,
        &bench.nominal_max_inputs,
    )
    .unwrap();
    println!(
        "robust: converged={} iters={} cost={:.2} in {:.1}s",
        robust.converged,
        robust.iterations,
        robust.cost,
        t0.elapsed().as_secs_f64()
    );
    let t0 = Instant::now();
    let base = solve_baseline_from(
        &bench.problem,
        &bench.nominal_min_inputs,
        &bench.nominal_max_inputs,
    )
    .unwrap();
    println!(
        "base  : converged={} iters={} cost={:.2} in {:.1}s",
        base.converged,
        base.iterations,
        base.cost,
        t0.elapsed().as_secs_f64()
    );
    for sigma in [15.0, 20.0] {
        let scen = quadrotor_scenario(sigma, 200, 42);
        let t0 = Instant::now();
        let mr = evaluate(&bench.problem, &robust, &scen).unwrap();
        let mb = evaluate(&bench.problem, &base, &scen).unwrap();
        println!(
            "sigma={sigma}: robust safe={:5.1} reach={:5.1} succ={:5.1} rmsd={:7.3} var={:12.1} nf={}",
            mr.safety_rate, mr.reachability_rate, mr.success_rate, mr.rmsd, mr.total_state_variance, mr.excluded_nonfinite
        );
        println!(
            "sigma={sigma}: base   safe={:5.1} reach={:5.1} succ={:5.1} rmsd={:7.3} var={:12.1} nf={} ({:.1}s)",
            mb.safety_rate, mb.reachability_rate, mb.success_rate, mb.rmsd, mb.total_state_variance, mb.excluded_nonfinite,
            t0.elapsed().as_secs_f64()
        );
    }
}
