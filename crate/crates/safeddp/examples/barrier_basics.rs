//! Barrier-state augmentation from the ground up: wrap a velocity limit
//! around the pendulum, inspect the augmented state, and see why a bounded
//! barrier state is the same thing as staying strictly inside the safe set.
//!
//! Run with: cargo run --release --example barrier_basics

use std::sync::Arc;

use nalgebra::DVector;
use safeddp::barrier::{augment, BarrierEval, BarrierKind, BarrierSpec, SafeSetFunction};
use safeddp::models::pendulum::{pendulum_model, PendulumParams};

fn main() {
    let plant = pendulum_model(PendulumParams::nominal(), 0.01);

    // h(x) = limit^2 - velocity^2 > 0 on the safe interior
    let limit = 5.0;
    let constraint = SafeSetFunction::component_bound(2, 1, limit, "angular velocity");
    let spec = BarrierSpec::summed(BarrierKind::Inverse, vec![constraint], &DVector::zeros(2));
    let model = augment(Arc::new(plant), vec![spec]);

    println!(
        "plant dim {} + {} barrier state(s) -> augmented dim {}",
        model.plant_dim(),
        model.barrier_dim(),
        model.plant_dim() + model.barrier_dim()
    );
    println!();
    println!("{:>10} {:>12} {:>14}", "velocity", "h(x)", "barrier state");
    for vel in [0.0, 2.0, 4.0, 4.9, 4.999, 5.001, 6.0] {
        let x = DVector::from_vec(vec![0.0, vel]);
        let h = limit * limit - vel * vel;
        let xhat = model.augment_state(&x, BarrierEval::Strict);
        println!("{vel:>10.3} {h:>12.4} {:>14.4}", xhat[2]);
    }
    println!();
    println!(
        "the barrier state diverges exactly as h -> 0+ and is +inf outside: \
         keeping it bounded keeps every constraint strictly positive"
    );

    // the solver refuses to start outside the safe set
    let unsafe_start = DVector::from_vec(vec![0.0, 6.0]);
    match model.check_strictly_safe(&unsafe_start) {
        Ok(()) => println!("unexpected: unsafe start accepted"),
        Err(e) => println!("unsafe start rejected as expected: {e}"),
    }
}
