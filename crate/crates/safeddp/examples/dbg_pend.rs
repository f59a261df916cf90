use safeddp::benchmarks::{pendulum_benchmark, pendulum_scenario};
use safeddp::models::uncertainty::UncertaintyLevel;
use safeddp::montecarlo::evaluate;
use safeddp::solver::{solve, solve_baseline};
use safeddp::types::SolverOptions;

fn main() {
    let bench = pendulum_benchmark(SolverOptions::default()).unwrap();
    let robust = solve(&bench.problem).unwrap();
    let base = solve_baseline(&bench.problem).unwrap();
    for (name, level) in [
        ("moderate", UncertaintyLevel::moderate()),
        ("high    ", UncertaintyLevel::high()),
    ] {
        let scen = pendulum_scenario(level, 1000, 42);
        let mr = evaluate(&bench.problem, &robust, &scen).unwrap();
        let mb = evaluate(&bench.problem, &base, &scen).unwrap();
        println!(
            "{name} robust: safe={:5.1} reach={:5.1} succ={:5.1} rmsd={:7.3} var={:10.1} nf={}",
            mr.safety_rate, mr.reachability_rate, mr.success_rate, mr.rmsd, mr.total_state_variance, mr.excluded_nonfinite
        );
        println!(
            "{name} base  : safe={:5.1} reach={:5.1} succ={:5.1} rmsd={:7.3} var={:10.1} nf={}",
            mb.safety_rate, mb.reachability_rate, mb.success_rate, mb.rmsd, mb.total_state_variance, mb.excluded_nonfinite
        );
    }
}
