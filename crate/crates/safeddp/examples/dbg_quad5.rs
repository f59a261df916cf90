use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use safeddp::barrier::{augment, BarrierKind, BarrierSpec};
use safeddp::benchmarks::{QUADROTOR_HORIZON, QUADROTOR_START, QUADROTOR_TARGET};
use safeddp::cost::QuadraticCost;
use safeddp::models::obstacles::{build_obstacle_course, CourseBounds};
use safeddp::models::quadrotor::{quadrotor_model, QuadrotorParams};
use safeddp::models::uncertainty::{wind_disturbance, WindModel};
use safeddp::montecarlo::closed_loop_rollout;
use safeddp::solver::{solve_baseline_from, solve_from, Solution};
use safeddp::types::{GameProblem, SolverOptions};

fn dist(x: &DVector<f64>) -> f64 {
    ((x[0] - QUADROTOR_TARGET[0]).powi(2)
        + (x[1] - QUADROTOR_TARGET[1]).powi(2)
        + (x[2] - QUADROTOR_TARGET[2]).powi(2))
    .sqrt()
}

fn build(seed: u64, count: usize, r_min: f64, r_max: f64, q_other: f64, q_pos: f64, s_pos: f64) -> GameProblem {
    let params = QuadrotorParams::nominal();
    let plant = quadrotor_model(params, 0.01);
    let bounds = CourseBounds {
        radius_min: r_min,
        radius_max: r_max,
        ..CourseBounds::default()
    };
    let course =
        build_obstacle_course(seed, count, QUADROTOR_START, QUADROTOR_TARGET, &bounds).unwrap();
    let mut target = DVector::zeros(12);
    for i in 0..3 {
        target[i] = QUADROTOR_TARGET[i];
    }
    let spec = BarrierSpec::summed(BarrierKind::Inverse, course.constraints(12), &target);
    let model = augment(Arc::new(plant), vec![spec]);
    let mut s_diag = DVector::from_element(13, 1.0);
    for i in 0..3 {
        s_diag[i] = s_pos;
    }
    let mut q_diag = DVector::from_element(13, q_other);
    for i in 0..3 {
        q_diag[i] = q_pos;
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
    let opts = SolverOptions {
        max_iterations: 700,
        ..SolverOptions::default()
    };
    GameProblem::new(model, Arc::new(cost), &start, QUADROTOR_HORIZON, opts).unwrap()
}

fn clearance(problem: &GameProblem, sol: &Solution) -> f64 {
    let mut min_h = f64::INFINITY;
    for x in &sol.trajectory.states {
        for c in &problem.model.specs()[0].constraints {
            min_h = min_h.min(c.value(x));
        }
    }
    min_h
}

fn trials(problem: &GameProblem, sol: &Solution, sigma: f64, n: u64) -> (usize, usize, usize, usize) {
    let design = &problem.model;
    let x0 = design.project_plant(&problem.initial_state);
    let plant = quadrotor_model(QuadrotorParams::nominal(), 0.01);
    let (mut fin, mut safe, mut reach, mut succ) = (0, 0, 0, 0);
    for t in 0..n {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1000 + t);
        let wind = WindModel::draw(sigma, 500, &mut rng);
        let out = closed_loop_rollout(
            sol,
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
            let s = out.violation.is_none();
            let r = dist(out.plant_states.last().unwrap()) < 2.0;
            if s {
                safe += 1;
            }
            if r {
                reach += 1;
            }
            if s && r {
                succ += 1;
            }
        }
    }
    (fin, safe, reach, succ)
}

fn main() {
    let params = QuadrotorParams::nominal();
    let hover = vec![params.hover_input(); QUADROTOR_HORIZON];
    let vzero = vec![DVector::zeros(3); QUADROTOR_HORIZON];
    let robust_mode = std::env::args().nth(1).unwrap_or_default() == "robust";
    let candidates: Vec<(u64, usize, f64, f64, f64, f64, f64)> = if robust_mode {
        // filled in after the baseline sweep
        std::env::args()
            .skip(2)
            .map(|s| {
                let p: Vec<f64> = s.split(',').map(|x| x.parse().unwrap()).collect();
                let q_other = p.get(4).copied().unwrap_or(0.0);
                let q_pos = p.get(5).copied().unwrap_or(0.0);
                let s_pos = p.get(6).copied().unwrap_or(10.0);
                (p[0] as u64, p[1] as usize, p[2], p[3], q_other, q_pos, s_pos)
            })
            .collect()
    } else {
        let mut v = Vec::new();
        for seed in [3u64, 5, 7, 9, 12, 21, 33, 47] {
            v.push((seed, 8, 0.8, 1.6, 0.0, 0.0, 10.0));
        }
        for seed in [5u64, 12, 21] {
            v.push((seed, 10, 1.0, 2.0, 0.0, 0.0, 10.0));
        }
        v
    };
    for (seed, count, r_min, r_max, q_other, q_pos, s_pos) in candidates {
        let problem = build(seed, count, r_min, r_max, q_other, q_pos, s_pos);
        let base = match solve_baseline_from(&problem, &hover, &vzero) {
            Ok(s) => s,
            Err(e) => {
                println!("seed={seed} n={count} r={r_min}-{r_max} q={q_other}/{q_pos}: base solve failed: {e}");
                continue;
            }
        };
        let xn = &base.trajectory.states[QUADROTOR_HORIZON];
        let dn = dist(&xn.rows(0, 12).into_owned());
        let kn: Vec<f64> = [0, 100, 250, 400, 499]
            .iter()
            .map(|&k| base.policy.gains[k].ck_u.norm())
            .collect();
        println!("  base |K_u| at steps 0/100/250/400/499: {kn:?}");
        let (f0, s0, r0, _c0) = trials(&problem, &base, 0.0, 3);
        println!("  base zero-wind trials: fin={f0} safe={s0} reach={r0}");
        let (f15, s15, r15, c15) = trials(&problem, &base, 15.0, 50);
        let (f20, s20, r20, c20) = trials(&problem, &base, 20.0, 50);
        println!(
            "seed={seed:2} n={count} r={r_min}-{r_max} q={q_other}/{q_pos} sp={s_pos}: base conv={} it={:4} dN={dn:5.2} clr={:5.2} s15: fin={f15} safe={s15} reach={r15} succ={c15} | s20: fin={f20} safe={s20} reach={r20} succ={c20}",
            base.converged, base.iterations, clearance(&problem, &base)
        );
        if robust_mode {
            let rob = match solve_from(&problem, &hover, &vzero) {
                Ok(s) => s,
                Err(e) => {
                    println!("  robust solve failed: {e}");
                    continue;
                }
            };
            let xn = &rob.trajectory.states[QUADROTOR_HORIZON];
            let dn = dist(&xn.rows(0, 12).into_owned());
            let tail: Vec<f64> = rob.log.iter().rev().take(3).map(|r| r.delta_cost).collect();
            let (f15, s15, r15, c15) = trials(&problem, &rob, 15.0, 50);
            let (f20, s20, r20, c20) = trials(&problem, &rob, 20.0, 50);
            println!(
                "  robust conv={} it={:4} cost={:.2} dN={dn:5.2} clr={:5.2} tail_dJ={tail:?} s15: fin={f15} safe={s15} reach={r15} succ={c15} | s20: fin={f20} safe={s20} reach={r20} succ={c20}",
                rob.converged, rob.iterations, rob.cost, clearance(&problem, &rob)
            );
        }
    }
}
