use nalgebra::DVector;
use safeddp::benchmarks::{
    quadrotor_benchmark, QuadrotorConfig, QUADROTOR_HORIZON, QUADROTOR_TARGET,
};
use safeddp::montecarlo::closed_loop_rollout;
use safeddp::solver::{solve_baseline_from, solve_from, Solution};

fn dist(x: &DVector<f64>) -> f64 {
    ((x[0] - QUADROTOR_TARGET[0]).powi(2)
        + (x[1] - QUADROTOR_TARGET[1]).powi(2)
        + (x[2] - QUADROTOR_TARGET[2]).powi(2))
    .sqrt()
}

fn report(name: &str, sol: &Solution) {
    let xn = &sol.trajectory.states[QUADROTOR_HORIZON];
    println!(
        "{name}: converged={} iters={} cost={:.2} terminal_dist={:.3}",
        sol.converged,
        sol.iterations,
        sol.cost,
        dist(&xn.rows(0, 12).into_owned())
    );
    for r in sol.log.iter().rev().take(8).rev() {
        println!(
            "  it={:3} cost={:10.3} dJ={:+9.4} au={:.3} av={:.3} zmin={:?} zmax={:?} reg={:.1e} ls={} acc={}",
            r.iteration,
            r.cost,
            r.delta_cost,
            r.alpha_u,
            r.alpha_v,
            r.z_min.map(|z| (z * 1e3).round() / 1e3),
            r.z_max.map(|z| (z * 1e3).round() / 1e3),
            r.regularization,
            r.line_search_trials,
            r.accepted
        );
    }
}

fn main() {
    let bench = quadrotor_benchmark(QuadrotorConfig::default()).unwrap();
    let base = solve_baseline_from(
        &bench.problem,
        &bench.nominal_min_inputs,
        &bench.nominal_max_inputs,
    )
    .unwrap();
    report("base  ", &base);
    let robust = solve_from(
        &bench.problem,
        &bench.nominal_min_inputs,
        &bench.nominal_max_inputs,
    )
    .unwrap();
    report("robust", &robust);

    // closed-loop under zero wind and a pinned moderate gust
    let design = &bench.problem.model;
    let x0 = design.project_plant(&bench.problem.initial_state);
    let plant = safeddp::models::quadrotor::quadrotor_model(bench.params, 0.01);
    for (label, sol) in [("base", &base), ("robust", &robust)] {
        for rho in [0.0f64, 0.3, 1.0] {
            let out = closed_loop_rollout(
                sol,
                design,
                &plant,
                |k| {
                    let t = k as f64 * 0.01;
                    DVector::from_vec(vec![
                        15.0 * rho * t.sin(),
                        15.0 * rho * t.sin(),
                        15.0 * rho * t.sin(),
                    ])
                },
                &x0,
            );
            let last = out.plant_states.last().unwrap();
            println!(
                "{label} rho={rho}: finite={} steps={} viol={:?} final_dist={:.3} final_pos=({:+.2},{:+.2},{:+.2})",
                out.finite,
                out.plant_states.len() - 1,
                out.violation,
                dist(last),
                last[0],
                last[1],
                last[2]
            );
        }
    }
}
