//! Torque-driven inverted pendulum with both players acting on the same
//! torque channel: `I theta_dd + b theta_d - m g l sin(theta) = u + v`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::dynamics::{Plant, SecondOrder};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PendulumParams {
    /// Rod length (m).
    pub length: f64,
    /// Viscous damping (N s/m).
    pub damping: f64,
    /// Mass (kg).
    pub mass: f64,
    /// Gravity (m/s^2).
    pub gravity: f64,
}

impl PendulumParams {
    pub fn nominal() -> Self {
        PendulumParams {
            length: 0.75,
            damping: 0.15,
            mass: 1.5,
            gravity: 9.81,
        }
    }

    /// Rotational inertia `I = m l^2`.
    pub fn inertia(&self) -> f64 {
        self.mass * self.length * self.length
    }

    pub fn is_physical(&self) -> bool {
        self.length > 0.0 && self.damping > 0.0 && self.mass > 0.0 && self.gravity > 0.0
    }
}

/// State `(theta, theta_dot)`, upright target at `theta = 0`.
#[derive(Debug, Clone)]
pub struct PendulumPlant {
    pub params: PendulumParams,
    pub dt: f64,
}

impl PendulumPlant {
    pub fn new(params: PendulumParams, dt: f64) -> Self {
        PendulumPlant { params, dt }
    }

    fn accel(&self, theta: f64, theta_dot: f64, torque: f64) -> f64 {
        let p = &self.params;
        (torque - p.damping * theta_dot + p.mass * p.gravity * p.length * theta.sin())
            / p.inertia()
    }
}

/// Build the pendulum as a boxed plant (forward-Euler discretization).
pub fn pendulum_model(params: PendulumParams, dt: f64) -> PendulumPlant {
    PendulumPlant::new(params, dt)
}

impl Plant for PendulumPlant {
    fn state_dim(&self) -> usize {
        2
    }
    fn min_input_dim(&self) -> usize {
        1
    }
    fn max_input_dim(&self) -> usize {
        1
    }
    fn dt(&self) -> f64 {
        self.dt
    }

    fn step(&self, x: &DVector<f64>, u: &DVector<f64>, v: &DVector<f64>) -> DVector<f64> {
        let theta = x[0];
        let theta_dot = x[1];
        DVector::from_vec(vec![
            theta + self.dt * theta_dot,
            theta_dot + self.dt * self.accel(theta, theta_dot, u[0] + v[0]),
        ])
    }

    fn jacobians(
        &self,
        x: &DVector<f64>,
        _u: &DVector<f64>,
        _v: &DVector<f64>,
    ) -> Option<(DMatrix<f64>, DMatrix<f64>, DMatrix<f64>)> {
        let p = &self.params;
        let inertia = p.inertia();
        let fx = DMatrix::from_row_slice(
            2,
            2,
            &[
                1.0,
                self.dt,
                self.dt * p.mass * p.gravity * p.length * x[0].cos() / inertia,
                1.0 - self.dt * p.damping / inertia,
            ],
        );
        let fu = DMatrix::from_column_slice(2, 1, &[0.0, self.dt / inertia]);
        Some((fx, fu.clone(), fu))
    }

    fn hessians(
        &self,
        x: &DVector<f64>,
        _u: &DVector<f64>,
        _v: &DVector<f64>,
    ) -> Option<SecondOrder> {
        let p = &self.params;
        let mut s = SecondOrder::zeros(2, 2, 1, 1);
        s.fxx.0[1][(0, 0)] = -self.dt * p.mass * p.gravity * p.length * x[0].sin() / p.inertia();
        Some(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn accel_at_quarter_circle() {
        // theta_dd = g / l at theta = pi/2, unforced
        let p = PendulumPlant::new(PendulumParams::nominal(), 0.01);
        let a = p.accel(std::f64::consts::FRAC_PI_2, 0.0, 0.0);
        assert_relative_eq!(a, 9.81 / 0.75, epsilon = 1e-12);
        assert_relative_eq!(a, 13.08, epsilon = 1e-2);
    }

    #[test]
    fn energy_drift_shrinks_with_dt() {
        // Undamped, unforced rollouts conserve E = I/2 thd^2 + m g l cos(theta)
        // up to Euler drift that decreases with dt.
        let mut params = PendulumParams::nominal();
        params.damping = 1e-300; // effectively zero, keeps params "physical"
        let energy = |p: &PendulumParams, x: &DVector<f64>| {
            0.5 * p.inertia() * x[1] * x[1] + p.mass * p.gravity * p.length * x[0].cos()
        };
        let drift_for = |dt: f64| {
            let plant = PendulumPlant::new(params, dt);
            let mut x = DVector::from_vec(vec![2.5, 0.0]);
            let e0 = energy(&params, &x);
            let u = DVector::zeros(1);
            let steps = (1.0 / dt) as usize;
            let mut max_drift: f64 = 0.0;
            for _ in 0..steps {
                x = plant.step(&x, &u, &u);
                max_drift = max_drift.max((energy(&params, &x) - e0).abs());
            }
            max_drift
        };
        let coarse = drift_for(0.01);
        let fine = drift_for(0.001);
        assert!(fine < coarse, "drift should decrease with dt");
        assert!(fine < 0.2 * coarse + 1e-9, "drift should be O(dt)");
    }
}
