//! Fly the 12-state quadrotor through a randomized sphere-obstacle course
//! with the game-theoretic policy, then stress the closed loop with
//! sinusoidal wind and compare against the adversary-free baseline.
//!
//! Run with: cargo run --release --example quadrotor_obstacle_run
//! The two solves plus 200 rollouts per policy take several minutes.

use safeddp::benchmarks::{
    quadrotor_benchmark, quadrotor_scenario, QuadrotorConfig, QUADROTOR_HORIZON, QUADROTOR_TARGET,
};
use safeddp::montecarlo::{compare, evaluate};
use safeddp::solver::{solve_baseline_from, solve_from, Solution};
use safeddp::types::GameProblem;

fn terminal_distance(sol: &Solution) -> f64 {
    let xn = &sol.trajectory.states[QUADROTOR_HORIZON];
    ((xn[0] - QUADROTOR_TARGET[0]).powi(2)
        + (xn[1] - QUADROTOR_TARGET[1]).powi(2)
        + (xn[2] - QUADROTOR_TARGET[2]).powi(2))
    .sqrt()
}

fn min_clearance(problem: &GameProblem, sol: &Solution) -> f64 {
    let mut min_h = f64::INFINITY;
    for x in &sol.trajectory.states {
        for c in &problem.model.specs()[0].constraints {
            min_h = min_h.min(c.value(x));
        }
    }
    min_h
}

fn main() {
    let bench = quadrotor_benchmark(QuadrotorConfig::default()).expect("benchmark setup");
    println!("obstacle course ({} spheres):", bench.course.obstacles.len());
    for s in &bench.course.obstacles {
        println!(
            "  center ({:6.2}, {:6.2}, {:6.2})  radius {:.2}",
            s.center[0], s.center[1], s.center[2], s.radius
        );
    }
    println!();

    println!("solving the game (adversary pushes on the body-frame velocities)...");
    let robust = solve_from(
        &bench.problem,
        &bench.nominal_min_inputs,
        &bench.nominal_max_inputs,
    )
    .expect("robust solve");
    println!(
        "  converged={} in {} iterations; terminal distance {:.2} m, min obstacle clearance {:.2}",
        robust.converged,
        robust.iterations,
        terminal_distance(&robust),
        min_clearance(&bench.problem, &robust)
    );

    println!("solving the baseline (adversary disabled)...");
    let baseline = solve_baseline_from(
        &bench.problem,
        &bench.nominal_min_inputs,
        &bench.nominal_max_inputs,
    )
    .expect("baseline solve");
    println!(
        "  converged={} in {} iterations; terminal distance {:.2} m, min obstacle clearance {:.2}",
        baseline.converged,
        baseline.iterations,
        terminal_distance(&baseline),
        min_clearance(&bench.problem, &baseline)
    );
    println!();

    for sigma in [15.0, 20.0] {
        let scenario = quadrotor_scenario(sigma, 200, 42);
        let m_r = evaluate(&bench.problem, &robust, &scenario).expect("robust batch");
        let m_b = evaluate(&bench.problem, &baseline, &scenario).expect("baseline batch");
        let c = compare(&m_r, &m_b).expect("compare");
        println!("wind sigma = {sigma} ({} trials):", scenario.trials);
        println!(
            "  game policy: safety {:5.1}%  reach {:5.1}%  success {:5.1}%  variance {:9.1}",
            m_r.safety_rate, m_r.reachability_rate, m_r.success_rate, m_r.total_state_variance
        );
        println!(
            "  baseline:    safety {:5.1}%  reach {:5.1}%  success {:5.1}%  variance {:9.1}",
            m_b.safety_rate, m_b.reachability_rate, m_b.success_rate, m_b.total_state_variance
        );
        println!(
            "  game policy safer: {}, higher success: {}, lower variance: {}",
            c.proposed_safer, c.proposed_higher_success, c.proposed_lower_variance
        );
        println!();
    }
}
