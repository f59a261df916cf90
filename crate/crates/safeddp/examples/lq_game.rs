//! Linear-quadratic sanity check: on a linear plant with quadratic costs
//! the game solver should land on the saddle point in one or two
//! iterations, and disabling the adversary reduces it to plain LQR.
//!
//! Run with: cargo run --release --example lq_game

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use safeddp::barrier::augment;
use safeddp::cost::QuadraticCost;
use safeddp::dynamics::LinearPlant;
use safeddp::solver::solve;
use safeddp::types::{GameProblem, SolverOptions};

fn build(max_enabled: bool) -> GameProblem {
    // lightly damped double integrator; control and adversary act on the
    // velocity with different strengths
    let dt = 0.05;
    let a = DMatrix::from_row_slice(2, 2, &[1.0, dt, 0.0, 1.0 - 0.02 * dt]);
    let b = DMatrix::from_row_slice(2, 1, &[0.0, dt]);
    let c = DMatrix::from_row_slice(2, 1, &[0.0, 0.5 * dt]);
    let plant = LinearPlant { a, b, c, dt };
    // no constraints: the augmented model has zero barrier states
    let model = augment(Arc::new(plant), vec![]);
    let cost = QuadraticCost::new(
        DMatrix::identity(2, 2),
        DMatrix::from_vec(1, 1, vec![0.1]),
        DMatrix::from_vec(1, 1, vec![5.0]),
        DMatrix::identity(2, 2) * 10.0,
        DVector::zeros(2),
    )
    .unwrap();
    let options = SolverOptions {
        max_player_enabled: max_enabled,
        ..SolverOptions::default()
    };
    GameProblem::new(
        model,
        Arc::new(cost),
        &DVector::from_vec(vec![1.0, 0.0]),
        30,
        options,
    )
    .unwrap()
}

fn main() {
    for (label, max_enabled) in [("zero-sum game", true), ("adversary disabled (LQR)", false)] {
        let problem = build(max_enabled);
        let sol = solve(&problem).expect("solve");
        println!(
            "{label}: converged={} in {} iteration(s), cost {:.6}",
            sol.converged, sol.iterations, sol.cost
        );
        let g0 = &sol.policy.gains[0];
        println!("  first-step feedback K_u = {:?}", g0.ck_u.as_slice());
        println!("  first-step feedback K_v = {:?}", g0.ck_v.as_slice());
    }
    println!();
    println!(
        "with the adversary on, K_u stiffens relative to LQR: the minimizing\n\
         player hedges against the worst disturbance the penalty allows"
    );
}
