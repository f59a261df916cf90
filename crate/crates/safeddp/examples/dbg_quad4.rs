use std::sync::Arc;
use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use safeddp::barrier::{augment, BarrierKind, BarrierSpec};
use safeddp::benchmarks::{QUADROTOR_HORIZON, QUADROTOR_START, QUADROTOR_TARGET};
use safeddp::cost::QuadraticCost;
use safeddp::models::obstacles::{build_obstacle_course, CourseBounds};
use safeddp::models::quadrotor::{quadrotor_model, QuadrotorParams};
use safeddp::models::uncertainty::{wind_disturbance, WindModel};
use safeddp::montecarlo::closed_loop_rollout;
use safeddp::solver::{solve_baseline_from, solve_from};
use safeddp::types::{GameProblem, SolverOptions};

fn dist(x: &DVector<f64>) -> f64 {
    ((x[0] - QUADROTOR_TARGET[0]).powi(2)
        + (x[1] - QUADROTOR_TARGET[1]).powi(2)
        + (x[2] - QUADROTOR_TARGET[2]).powi(2))
    .sqrt()
}

fn build(q_pos: f64, q_att: f64, q_vel: f64, q_rate: f64) -> GameProblem {
    let params = QuadrotorParams::nominal();
    let plant = quadrotor_model(params, 0.01);
    let course = build_obstacle_course(
        12,
        6,
        QUADROTOR_START,
        QUADROTOR_TARGET,
        &CourseBounds::default(),
    )
    .unwrap();
    let mut target = DVector::zeros(12);
    for i in 0..3 {
        target[i] = QUADROTOR_TARGET[i];
    }
    let spec = BarrierSpec::summed(BarrierKind::Inverse, course.constraints(12), &target);
    let model = augment(Arc::new(plant), vec![spec]);
    let mut s_diag = DVector::from_element(13, 1.0);
    for i in 0..3 {
        s_diag[i] = 10.0;
    }
    let mut q_diag = DVector::zeros(13);
    for i in 0..3 {
        q_diag[i] = q_pos;
        q_diag[3 + i] = q_att;
        q_diag[6 + i] = q_vel;
        q_diag[9 + i] = q_rate;
    }
    q_diag[12] = 0.1;
    let mut aug_target = DVector::zeros(13);
    aug_target.rows_mut(0, 12).copy_from(&target);
    let cost = QuadraticCost::new(
        DMatrix::from_diagonal(&q_diag),
        DMatrix::identity(4, 4) * 1e-2,
        DMatrix::identity(3, 3) * 15e-2,
        DMatrix::from_diagonal(&s_diag),
        aug_target,
    )
    .unwrap();
    let mut start = DVector::zeros(12);
    for i in 0..3 {
        start[i] = QUADROTOR_START[i];
    }
    GameProblem::new(model, Arc::new(cost), &start, QUADROTOR_HORIZON, SolverOptions::default())
        .unwrap()
}

fn main() {
    let params = QuadrotorParams::nominal();
    let hover = vec![params.hover_input(); QUADROTOR_HORIZON];
    let vzero = vec![DVector::zeros(3); QUADROTOR_HORIZON];
    for (name, qp, qa, qv, qr) in [
        ("noPosQ     ", 0.0, 0.01, 0.01, 0.01),
        ("noPosQplus ", 0.0, 0.05, 0.05, 0.05),
        ("microPosQ  ", 0.001, 0.01, 0.01, 0.01),
        ("tinyQ      ", 0.01, 0.01, 0.01, 0.01),
    ] {
        let problem = build(qp, qa, qv, qr);
        let t0 = Instant::now();
        let which = std::env::args().nth(1).unwrap_or_default();
        let sol = match if which == "robust" {
            solve_from(&problem, &hover, &vzero)
        } else {
            solve_baseline_from(&problem, &hover, &vzero)
        } {
            Ok(s) => s,
            Err(e) => {
                println!("{name}: solve failed: {e}");
                continue;
            }
        };
        let xn = &sol.trajectory.states[QUADROTOR_HORIZON];
        let dn = dist(&xn.rows(0, 12).into_owned());
        let kmax = sol
            .policy
            .gains
            .iter()
            .map(|g| g.ck_u.amax())
            .fold(0.0f64, f64::max);
        let design = &problem.model;
        let x0 = design.project_plant(&problem.initial_state);
        let plant = quadrotor_model(params, 0.01);
        let mut fin = 0;
        let mut safe = 0;
        let mut reach = 0;
        for t in 0..20u64 {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1000 + t);
            let wind = WindModel::draw(15.0, 500, &mut rng);
            let out = closed_loop_rollout(
                &sol,
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
            "{name}: conv={} it={:3} cost={:9.2} dN={:6.3} maxK={:8.2} wind15: fin={fin:2}/20 safe={safe:2} reach={reach:2} ({:.0}s)",
            sol.converged,
            sol.iterations,
            sol.cost,
            dn,
            kmax,
            t0.elapsed().as_secs_f64()
        );
    }
}
