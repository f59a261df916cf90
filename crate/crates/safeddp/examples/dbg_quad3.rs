use nalgebra::DVector;
use rand::SeedableRng;
use safeddp::benchmarks::{quadrotor_benchmark, QuadrotorConfig, QUADROTOR_TARGET};
use safeddp::models::uncertainty::{wind_disturbance, WindModel};
use safeddp::montecarlo::closed_loop_rollout;
use safeddp::solver::{backward_pass, solve_baseline_from, solve_from};

fn dist(x: &DVector<f64>) -> f64 {
    ((x[0] - QUADROTOR_TARGET[0]).powi(2)
        + (x[1] - QUADROTOR_TARGET[1]).powi(2)
        + (x[2] - QUADROTOR_TARGET[2]).powi(2))
    .sqrt()
}

fn main() {
    let bench = quadrotor_benchmark(QuadrotorConfig::default()).unwrap();
    let base = solve_baseline_from(
        &bench.problem,
        &bench.nominal_min_inputs,
        &bench.nominal_max_inputs,
    )
    .unwrap();
    let robust = solve_from(
        &bench.problem,
        &bench.nominal_min_inputs,
        &bench.nominal_max_inputs,
    )
    .unwrap();
    let design = &bench.problem.model;
    let x0 = design.project_plant(&bench.problem.initial_state);
    let plant = safeddp::models::quadrotor::quadrotor_model(bench.params, 0.01);

    let mut base_prob = bench.problem.clone();
    base_prob.options.max_player_enabled = false;
    base_prob.options.second_order_dynamics = false;
    let mut rob_prob = bench.problem.clone();
    rob_prob.options.second_order_dynamics = false;

    for (label, sol, prob) in [
        ("base  ", &base, &base_prob),
        ("robust", &robust, &rob_prob),
    ] {
        for reg in [1e-6, 1e-2, 1.0, 10.0, 100.0, 1e3] {
            let bp = match backward_pass(prob, &sol.trajectory, reg) {
                Ok(bp) => bp,
                Err(e) => {
                    println!("{label} reg={reg:.0e}: backward pass failed: {e}");
                    continue;
                }
            };
            let kmax = bp
                .policy
                .gains
                .iter()
                .map(|g| g.ck_u.amax())
                .fold(0.0f64, f64::max);
            let mut sol2 = sol.clone();
            sol2.policy = bp.policy;
            // nominal-tracking check (no wind)
            let out0 = closed_loop_rollout(
                &sol2,
                design,
                &plant,
                |_| DVector::zeros(3),
                &x0,
            );
            let d0 = dist(out0.plant_states.last().unwrap());
            // 20 per-step-wind trials at sigma 15
            let mut safe = 0;
            let mut reach = 0;
            let mut fin = 0;
            for t in 0..20u64 {
                let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1000 + t);
                let wind = WindModel::draw(15.0, 500, &mut rng);
                let out = closed_loop_rollout(
                    &sol2,
                    design,
                    &plant,
                    |k| {
                        let f = wind_disturbance(&wind, k, k as f64 * 0.01);
                        DVector::from_vec(vec![f[0], f[1], f[2]])
                    },
                    &x0,
                );
                if out.finite {
                    fin += 1;
                    if out.violation.is_none() {
                        safe += 1;
                    }
                    if dist(out.plant_states.last().unwrap()) < 2.0 {
                        reach += 1;
                    }
                }
            }
            println!(
                "{label} reg={reg:7.0e} maxK={kmax:10.2} | rho0: fin={} st={:3} d={:7.2} | wind15: fin={fin:2}/20 safe={safe:2} reach={reach:2}",
                out0.finite as u8,
                out0.plant_states.len() - 1,
                d0
            );
        }
    }
}
