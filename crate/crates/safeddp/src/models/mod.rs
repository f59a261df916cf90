//! Benchmark systems: a velocity-constrained inverted pendulum with
//! parametric uncertainty and a quadrotor with sinusoidal wind and
//! spherical obstacles.

pub mod obstacles;
pub mod pendulum;
pub mod quadrotor;
pub mod uncertainty;

pub use obstacles::{build_obstacle_course, ObstacleCourse};
pub use pendulum::{pendulum_model, PendulumParams, PendulumPlant};
pub use quadrotor::{quadrotor_model, QuadrotorParams, QuadrotorPlant};
pub use uncertainty::{sample_perturbed_pendulum, wind_disturbance, UncertaintyLevel, WindModel};
