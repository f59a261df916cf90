//! 12-state Euler-angle rigid-body quadrotor.
//!
//! State layout: world position `(x, y, z)`, ZYX Euler angles
//! `(roll, pitch, yaw)`, body-frame linear velocity, body rates.
//! Minimizing inputs are total thrust along body z plus three body
//! torques; the maximizing input is a 3-vector force on the body-frame
//! linear velocity rows, the same channel a wind disturbance excites.

use nalgebra::{DMatrix, DVector, Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::dynamics::Plant;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadrotorParams {
    pub mass: f64,
    /// Diagonal body inertia `(Jx, Jy, Jz)`.
    pub inertia: [f64; 3],
    pub gravity: f64,
}

impl QuadrotorParams {
    pub fn nominal() -> Self {
        QuadrotorParams {
            mass: 1.0,
            inertia: [0.01, 0.01, 0.02],
            gravity: 9.81,
        }
    }

    /// Thrust plus zero torques holding a level quadrotor still.
    pub fn hover_input(&self) -> DVector<f64> {
        DVector::from_vec(vec![self.mass * self.gravity, 0.0, 0.0, 0.0])
    }
}

#[derive(Debug, Clone)]
pub struct QuadrotorPlant {
    pub params: QuadrotorParams,
    pub dt: f64,
}

pub fn quadrotor_model(params: QuadrotorParams, dt: f64) -> QuadrotorPlant {
    QuadrotorPlant { params, dt }
}

fn rotation(phi: f64, theta: f64, psi: f64) -> Matrix3<f64> {
    let (sphi, cphi) = phi.sin_cos();
    let (sth, cth) = theta.sin_cos();
    let (spsi, cpsi) = psi.sin_cos();
    let rx = Matrix3::new(1.0, 0.0, 0.0, 0.0, cphi, -sphi, 0.0, sphi, cphi);
    let ry = Matrix3::new(cth, 0.0, sth, 0.0, 1.0, 0.0, -sth, 0.0, cth);
    let rz = Matrix3::new(cpsi, -spsi, 0.0, spsi, cpsi, 0.0, 0.0, 0.0, 1.0);
    rz * ry * rx
}

fn rotation_partials(phi: f64, theta: f64, psi: f64) -> [Matrix3<f64>; 3] {
    let (sphi, cphi) = phi.sin_cos();
    let (sth, cth) = theta.sin_cos();
    let (spsi, cpsi) = psi.sin_cos();
    let rx = Matrix3::new(1.0, 0.0, 0.0, 0.0, cphi, -sphi, 0.0, sphi, cphi);
    let ry = Matrix3::new(cth, 0.0, sth, 0.0, 1.0, 0.0, -sth, 0.0, cth);
    let rz = Matrix3::new(cpsi, -spsi, 0.0, spsi, cpsi, 0.0, 0.0, 0.0, 1.0);
    let drx = Matrix3::new(0.0, 0.0, 0.0, 0.0, -sphi, -cphi, 0.0, cphi, -sphi);
    let dry = Matrix3::new(-sth, 0.0, cth, 0.0, 0.0, 0.0, -cth, 0.0, -sth);
    let drz = Matrix3::new(-spsi, -cpsi, 0.0, cpsi, -spsi, 0.0, 0.0, 0.0, 0.0);
    [rz * ry * drx, rz * dry * rx, drz * ry * rx]
}

/// Euler-rate map from body rates.
fn euler_rate_map(phi: f64, theta: f64) -> Matrix3<f64> {
    let (sphi, cphi) = phi.sin_cos();
    let tth = theta.tan();
    let cth = theta.cos();
    Matrix3::new(
        1.0,
        sphi * tth,
        cphi * tth,
        0.0,
        cphi,
        -sphi,
        0.0,
        sphi / cth,
        cphi / cth,
    )
}

fn skew(v: Vector3<f64>) -> Matrix3<f64> {
    Matrix3::new(0.0, -v.z, v.y, v.z, 0.0, -v.x, -v.y, v.x, 0.0)
}

impl QuadrotorPlant {
    fn rates(&self, x: &DVector<f64>, u: &DVector<f64>, v: &DVector<f64>) -> DVector<f64> {
        let p = &self.params;
        let angles = Vector3::new(x[3], x[4], x[5]);
        let vb = Vector3::new(x[6], x[7], x[8]);
        let omega = Vector3::new(x[9], x[10], x[11]);
        let r = rotation(angles.x, angles.y, angles.z);
        let t = euler_rate_map(angles.x, angles.y);
        let [jx, jy, jz] = p.inertia;

        let pos_dot = r * vb;
        let ang_dot = t * omega;
        let grav_body = r.transpose() * Vector3::new(0.0, 0.0, -p.gravity);
        let thrust = Vector3::new(0.0, 0.0, u[0] / p.mass);
        let wind = Vector3::new(v[0], v[1], v[2]) / p.mass;
        let vb_dot = -omega.cross(&vb) + grav_body + thrust + wind;
        let omega_dot = Vector3::new(
            (u[1] - (jz - jy) * omega.y * omega.z) / jx,
            (u[2] - (jx - jz) * omega.x * omega.z) / jy,
            (u[3] - (jy - jx) * omega.x * omega.y) / jz,
        );

        let mut out = DVector::zeros(12);
        out.fixed_rows_mut::<3>(0).copy_from(&pos_dot);
        out.fixed_rows_mut::<3>(3).copy_from(&ang_dot);
        out.fixed_rows_mut::<3>(6).copy_from(&vb_dot);
        out.fixed_rows_mut::<3>(9).copy_from(&omega_dot);
        out
    }
}

impl Plant for QuadrotorPlant {
    fn state_dim(&self) -> usize {
        12
    }
    fn min_input_dim(&self) -> usize {
        4
    }
    fn max_input_dim(&self) -> usize {
        3
    }
    fn dt(&self) -> f64 {
        self.dt
    }

    fn step(&self, x: &DVector<f64>, u: &DVector<f64>, v: &DVector<f64>) -> DVector<f64> {
        x + self.dt * self.rates(x, u, v)
    }

    fn jacobians(
        &self,
        x: &DVector<f64>,
        _u: &DVector<f64>,
        _v: &DVector<f64>,
    ) -> Option<(DMatrix<f64>, DMatrix<f64>, DMatrix<f64>)> {
        let p = &self.params;
        let (phi, theta, psi) = (x[3], x[4], x[5]);
        let vb = Vector3::new(x[6], x[7], x[8]);
        let omega = Vector3::new(x[9], x[10], x[11]);
        let r = rotation(phi, theta, psi);
        let dr = rotation_partials(phi, theta, psi);
        let t = euler_rate_map(phi, theta);
        let [jx, jy, jz] = p.inertia;
        let (sphi, cphi) = phi.sin_cos();
        let cth = theta.cos();
        let tth = theta.tan();
        let sec2 = 1.0 / (cth * cth);

        let mut gx = DMatrix::zeros(12, 12);
        // position rows
        for (a, d) in dr.iter().enumerate() {
            let col = d * vb;
            for i in 0..3 {
                gx[(i, 3 + a)] = col[i];
            }
        }
        for i in 0..3 {
            for j in 0..3 {
                gx[(i, 6 + j)] = r[(i, j)];
            }
        }
        // Euler-angle rows: dT/dphi * omega, dT/dtheta * omega, and T itself
        let dt_dphi = Matrix3::new(
            0.0,
            cphi * tth,
            -sphi * tth,
            0.0,
            -sphi,
            -cphi,
            0.0,
            cphi / cth,
            -sphi / cth,
        );
        let dt_dtheta = Matrix3::new(
            0.0,
            sphi * sec2,
            cphi * sec2,
            0.0,
            0.0,
            0.0,
            0.0,
            sphi * theta.sin() * sec2,
            cphi * theta.sin() * sec2,
        );
        let col_phi = dt_dphi * omega;
        let col_theta = dt_dtheta * omega;
        for i in 0..3 {
            gx[(3 + i, 3)] = col_phi[i];
            gx[(3 + i, 4)] = col_theta[i];
            for j in 0..3 {
                gx[(3 + i, 9 + j)] = t[(i, j)];
            }
        }
        // body-velocity rows
        let grav = Vector3::new(0.0, 0.0, -p.gravity);
        for (a, d) in dr.iter().enumerate() {
            let col = d.transpose() * grav;
            for i in 0..3 {
                gx[(6 + i, 3 + a)] = col[i];
            }
        }
        let dv_dvb = -skew(omega);
        let dv_domega = skew(vb);
        for i in 0..3 {
            for j in 0..3 {
                gx[(6 + i, 6 + j)] = dv_dvb[(i, j)];
                gx[(6 + i, 9 + j)] = dv_domega[(i, j)];
            }
        }
        // body-rate rows
        gx[(9, 10)] = -(jz - jy) * omega.z / jx;
        gx[(9, 11)] = -(jz - jy) * omega.y / jx;
        gx[(10, 9)] = -(jx - jz) * omega.z / jy;
        gx[(10, 11)] = -(jx - jz) * omega.x / jy;
        gx[(11, 9)] = -(jy - jx) * omega.y / jz;
        gx[(11, 10)] = -(jy - jx) * omega.x / jz;

        let mut gu = DMatrix::zeros(12, 4);
        gu[(8, 0)] = 1.0 / p.mass;
        gu[(9, 1)] = 1.0 / jx;
        gu[(10, 2)] = 1.0 / jy;
        gu[(11, 3)] = 1.0 / jz;

        let mut gv = DMatrix::zeros(12, 3);
        for i in 0..3 {
            gv[(6 + i, i)] = 1.0 / p.mass;
        }

        let fx = DMatrix::identity(12, 12) + self.dt * gx;
        let fu = self.dt * gu;
        let fv = self.dt * gv;
        Some((fx, fu, fv))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{fd_linearize, linearize};
    use approx::assert_relative_eq;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    #[test]
    fn hover_is_an_equilibrium() {
        let q = quadrotor_model(QuadrotorParams::nominal(), 0.01);
        let x = DVector::zeros(12);
        let u = q.params.hover_input();
        let v = DVector::zeros(3);
        let rates = q.rates(&x, &u, &v);
        assert_relative_eq!(rates.norm(), 0.0, epsilon = 1e-14);

        // full-horizon hover invariance
        let mut state = x.clone();
        for _ in 0..500 {
            state = q.step(&state, &u, &v);
        }
        assert!((state - x).norm() < 1e-12);
    }

    #[test]
    fn adversary_shifts_only_body_x_velocity() {
        let q = quadrotor_model(QuadrotorParams::nominal(), 0.01);
        let x = DVector::zeros(12);
        let u = q.params.hover_input();
        let v0 = DVector::zeros(3);
        let vf = DVector::from_vec(vec![2.0, 0.0, 0.0]);
        let r0 = q.rates(&x, &u, &v0);
        let rf = q.rates(&x, &u, &vf);
        let diff = rf - r0;
        assert_relative_eq!(diff[6], 2.0 / q.params.mass, epsilon = 1e-14);
        for i in 0..12 {
            if i != 6 {
                assert_eq!(diff[i], 0.0);
            }
        }
    }

    #[test]
    fn analytic_jacobians_match_finite_differences() {
        let q = quadrotor_model(QuadrotorParams::nominal(), 0.01);
        let mut rng = StdRng::seed_from_u64(17);
        for _ in 0..100 {
            let mut x = DVector::from_fn(12, |_, _| rng.gen_range(-1.0..1.0));
            x[4] *= 0.8; // keep pitch away from the Euler singularity
            let u = DVector::from_fn(4, |_, _| rng.gen_range(-2.0..12.0));
            let v = DVector::from_fn(3, |_, _| rng.gen_range(-3.0..3.0));
            let analytic = linearize(&q, &x, &u, &v).unwrap();
            let fd = fd_linearize(&q, &x, &u, &v).unwrap();
            assert_relative_eq!(analytic.fx, fd.fx, max_relative = 1e-4, epsilon = 1e-6);
            assert_relative_eq!(analytic.fu, fd.fu, max_relative = 1e-4, epsilon = 1e-8);
            assert_relative_eq!(analytic.fv, fd.fv, max_relative = 1e-4, epsilon = 1e-8);
        }
    }
}
