//! Discrete-time two-player dynamics models and their derivative machinery.
//!
//! A [`Plant`] exposes the discrete map `x_{k+1} = f(x_k, u_k, v_k)`.
//! Continuous models discretize with forward Euler inside their `step`.
//! Derivatives come from the model's analytic implementations when
//! available and from component-scaled central finite differences
//! otherwise.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Finite-difference step for first-order derivatives, scaled per component.
pub const FD_STEP_FIRST: f64 = 1e-6;
/// Finite-difference step for second-order derivatives, scaled per component.
pub const FD_STEP_SECOND: f64 = 1e-4;

/// Third-order tensor stored as one matrix per output component:
/// `t[i][(a, b)] = d^2 f_i / (ds_a dt_b)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor3(pub Vec<DMatrix<f64>>);

impl Tensor3 {
    pub fn zeros(n_out: usize, n_a: usize, n_b: usize) -> Self {
        Tensor3(vec![DMatrix::zeros(n_a, n_b); n_out])
    }

    /// Contraction with a covector: `sum_i w[i] * t[i]`.
    pub fn contract(&self, w: &DVector<f64>) -> DMatrix<f64> {
        let mut out = DMatrix::zeros(self.0[0].nrows(), self.0[0].ncols());
        for (i, m) in self.0.iter().enumerate() {
            out += m * w[i];
        }
        out
    }
}

/// Second-order tensors of the discrete map, one block per input pair.
#[derive(Debug, Clone)]
pub struct SecondOrder {
    pub fxx: Tensor3,
    pub fuu: Tensor3,
    pub fvv: Tensor3,
    pub fxu: Tensor3,
    pub fxv: Tensor3,
    pub fuv: Tensor3,
}

impl SecondOrder {
    pub fn zeros(n_out: usize, n: usize, mu: usize, mv: usize) -> Self {
        SecondOrder {
            fxx: Tensor3::zeros(n_out, n, n),
            fuu: Tensor3::zeros(n_out, mu, mu),
            fvv: Tensor3::zeros(n_out, mv, mv),
            fxu: Tensor3::zeros(n_out, n, mu),
            fxv: Tensor3::zeros(n_out, n, mv),
            fuv: Tensor3::zeros(n_out, mu, mv),
        }
    }
}

/// Jacobians (and optionally second-order tensors) of the discrete map at a point.
#[derive(Debug, Clone)]
pub struct StepDerivatives {
    pub fx: DMatrix<f64>,
    pub fu: DMatrix<f64>,
    pub fv: DMatrix<f64>,
    pub second: Option<SecondOrder>,
}

/// A two-player discrete-time control system.
pub trait Plant: Send + Sync {
    fn state_dim(&self) -> usize;
    fn min_input_dim(&self) -> usize;
    fn max_input_dim(&self) -> usize;
    fn dt(&self) -> f64;

    /// The discrete map `f(x, u, v)`. Continuous models apply forward Euler here.
    fn step(&self, x: &DVector<f64>, u: &DVector<f64>, v: &DVector<f64>) -> DVector<f64>;

    /// Analytic Jacobians of the discrete map, if the model supplies them.
    fn jacobians(
        &self,
        _x: &DVector<f64>,
        _u: &DVector<f64>,
        _v: &DVector<f64>,
    ) -> Option<(DMatrix<f64>, DMatrix<f64>, DMatrix<f64>)> {
        None
    }

    /// Analytic second-order tensors of the discrete map, if supplied.
    fn hessians(
        &self,
        _x: &DVector<f64>,
        _u: &DVector<f64>,
        _v: &DVector<f64>,
    ) -> Option<SecondOrder> {
        None
    }
}

fn check_dims(model: &dyn Plant, x: &DVector<f64>, u: &DVector<f64>, v: &DVector<f64>) -> Result<()> {
    if x.len() != model.state_dim() {
        return Err(Error::DimensionMismatch {
            what: "state",
            expected: model.state_dim(),
            got: x.len(),
            index: 0,
        });
    }
    if u.len() != model.min_input_dim() {
        return Err(Error::DimensionMismatch {
            what: "min input",
            expected: model.min_input_dim(),
            got: u.len(),
            index: 0,
        });
    }
    if v.len() != model.max_input_dim() {
        return Err(Error::DimensionMismatch {
            what: "max input",
            expected: model.max_input_dim(),
            got: v.len(),
            index: 0,
        });
    }
    Ok(())
}

/// Advance the plant one step, rejecting non-finite results.
pub fn step(
    model: &dyn Plant,
    x: &DVector<f64>,
    u: &DVector<f64>,
    v: &DVector<f64>,
) -> Result<DVector<f64>> {
    check_dims(model, x, u, v)?;
    let next = model.step(x, u, v);
    for (i, c) in next.iter().enumerate() {
        if !c.is_finite() {
            return Err(Error::NonFinite {
                what: "plant step",
                index: i,
            });
        }
    }
    Ok(next)
}

/// Evaluate the map at a perturbed concatenated point `z = (x, u, v)`.
fn eval_at(model: &dyn Plant, z: &DVector<f64>) -> DVector<f64> {
    let n = model.state_dim();
    let mu = model.min_input_dim();
    let x = DVector::from_column_slice(&z.as_slice()[..n]);
    let u = DVector::from_column_slice(&z.as_slice()[n..n + mu]);
    let v = DVector::from_column_slice(&z.as_slice()[n + mu..]);
    model.step(&x, &u, &v)
}

fn concat(x: &DVector<f64>, u: &DVector<f64>, v: &DVector<f64>) -> DVector<f64> {
    let mut z = DVector::zeros(x.len() + u.len() + v.len());
    z.rows_mut(0, x.len()).copy_from(x);
    z.rows_mut(x.len(), u.len()).copy_from(u);
    z.rows_mut(x.len() + u.len(), v.len()).copy_from(v);
    z
}

fn fd_jacobian(model: &dyn Plant, z: &DVector<f64>) -> Result<DMatrix<f64>> {
    let n_out = model.state_dim();
    let nz = z.len();
    let mut jac = DMatrix::zeros(n_out, nz);
    for j in 0..nz {
        let h = FD_STEP_FIRST * (1.0 + z[j].abs());
        let mut zp = z.clone();
        let mut zm = z.clone();
        zp[j] += h;
        zm[j] -= h;
        let fp = eval_at(model, &zp);
        let fm = eval_at(model, &zm);
        for i in 0..n_out {
            let d = (fp[i] - fm[i]) / (2.0 * h);
            if !d.is_finite() {
                return Err(Error::NonFinite {
                    what: "finite-difference Jacobian",
                    index: i,
                });
            }
            jac[(i, j)] = d;
        }
    }
    Ok(jac)
}

fn fd_hessian(model: &dyn Plant, z: &DVector<f64>) -> Result<Vec<DMatrix<f64>>> {
    let n_out = model.state_dim();
    let nz = z.len();
    let f0 = eval_at(model, z);
    let mut hess = vec![DMatrix::zeros(nz, nz); n_out];
    for a in 0..nz {
        let ha = FD_STEP_SECOND * (1.0 + z[a].abs());
        // diagonal entry
        let mut zp = z.clone();
        let mut zm = z.clone();
        zp[a] += ha;
        zm[a] -= ha;
        let fp = eval_at(model, &zp);
        let fm = eval_at(model, &zm);
        for i in 0..n_out {
            let d = (fp[i] - 2.0 * f0[i] + fm[i]) / (ha * ha);
            if !d.is_finite() {
                return Err(Error::NonFinite {
                    what: "finite-difference Hessian",
                    index: i,
                });
            }
            hess[i][(a, a)] = d;
        }
        for b in (a + 1)..nz {
            let hb = FD_STEP_SECOND * (1.0 + z[b].abs());
            let mut zpp = z.clone();
            let mut zpm = z.clone();
            let mut zmp = z.clone();
            let mut zmm = z.clone();
            zpp[a] += ha;
            zpp[b] += hb;
            zpm[a] += ha;
            zpm[b] -= hb;
            zmp[a] -= ha;
            zmp[b] += hb;
            zmm[a] -= ha;
            zmm[b] -= hb;
            let fpp = eval_at(model, &zpp);
            let fpm = eval_at(model, &zpm);
            let fmp = eval_at(model, &zmp);
            let fmm = eval_at(model, &zmm);
            for i in 0..n_out {
                let d = (fpp[i] - fpm[i] - fmp[i] + fmm[i]) / (4.0 * ha * hb);
                if !d.is_finite() {
                    return Err(Error::NonFinite {
                        what: "finite-difference Hessian",
                        index: i,
                    });
                }
                hess[i][(a, b)] = d;
                hess[i][(b, a)] = d;
            }
        }
    }
    Ok(hess)
}

/// First-order derivatives of the discrete map.
pub fn linearize(
    model: &dyn Plant,
    x: &DVector<f64>,
    u: &DVector<f64>,
    v: &DVector<f64>,
) -> Result<StepDerivatives> {
    check_dims(model, x, u, v)?;
    let (fx, fu, fv) = match model.jacobians(x, u, v) {
        Some(j) => j,
        None => {
            let z = concat(x, u, v);
            let jac = fd_jacobian(model, &z)?;
            split_jacobian(model, &jac)
        }
    };
    Ok(StepDerivatives {
        fx,
        fu,
        fv,
        second: None,
    })
}

fn split_jacobian(model: &dyn Plant, jac: &DMatrix<f64>) -> (DMatrix<f64>, DMatrix<f64>, DMatrix<f64>) {
    let n = model.state_dim();
    let mu = model.min_input_dim();
    let mv = model.max_input_dim();
    (
        jac.columns(0, n).into(),
        jac.columns(n, mu).into(),
        jac.columns(n + mu, mv).into(),
    )
}

/// First- and second-order derivatives of the discrete map.
///
/// With `include_second = false` the tensors are returned as zeros
/// (Gauss-Newton mode).
pub fn quadratize(
    model: &dyn Plant,
    x: &DVector<f64>,
    u: &DVector<f64>,
    v: &DVector<f64>,
    include_second: bool,
) -> Result<StepDerivatives> {
    let mut d = linearize(model, x, u, v)?;
    let n = model.state_dim();
    let mu = model.min_input_dim();
    let mv = model.max_input_dim();
    if !include_second {
        d.second = Some(SecondOrder::zeros(n, n, mu, mv));
        return Ok(d);
    }
    let second = match model.hessians(x, u, v) {
        Some(s) => s,
        None => {
            let z = concat(x, u, v);
            let full = fd_hessian(model, &z)?;
            let mut s = SecondOrder::zeros(n, n, mu, mv);
            for i in 0..n {
                let m = &full[i];
                s.fxx.0[i] = m.view((0, 0), (n, n)).into();
                s.fuu.0[i] = m.view((n, n), (mu, mu)).into();
                s.fvv.0[i] = m.view((n + mu, n + mu), (mv, mv)).into();
                s.fxu.0[i] = m.view((0, n), (n, mu)).into();
                s.fxv.0[i] = m.view((0, n + mu), (n, mv)).into();
                s.fuv.0[i] = m.view((n, n + mu), (mu, mv)).into();
            }
            s
        }
    };
    d.second = Some(second);
    Ok(d)
}

/// Finite-difference Jacobians of an arbitrary plant, exposed for
/// verification against analytic derivatives.
pub fn fd_linearize(
    model: &dyn Plant,
    x: &DVector<f64>,
    u: &DVector<f64>,
    v: &DVector<f64>,
) -> Result<StepDerivatives> {
    check_dims(model, x, u, v)?;
    let z = concat(x, u, v);
    let jac = fd_jacobian(model, &z)?;
    let (fx, fu, fv) = split_jacobian(model, &jac);
    Ok(StepDerivatives {
        fx,
        fu,
        fv,
        second: None,
    })
}

/// Finite-difference second-order tensors, exposed for verification.
pub fn fd_quadratize(
    model: &dyn Plant,
    x: &DVector<f64>,
    u: &DVector<f64>,
    v: &DVector<f64>,
) -> Result<SecondOrder> {
    check_dims(model, x, u, v)?;
    let n = model.state_dim();
    let mu = model.min_input_dim();
    let mv = model.max_input_dim();
    let z = concat(x, u, v);
    let full = fd_hessian(model, &z)?;
    let mut s = SecondOrder::zeros(n, n, mu, mv);
    for i in 0..n {
        let m = &full[i];
        s.fxx.0[i] = m.view((0, 0), (n, n)).into();
        s.fuu.0[i] = m.view((n, n), (mu, mu)).into();
        s.fvv.0[i] = m.view((n + mu, n + mu), (mv, mv)).into();
        s.fxu.0[i] = m.view((0, n), (n, mu)).into();
        s.fxv.0[i] = m.view((0, n + mu), (n, mv)).into();
        s.fuv.0[i] = m.view((n, n + mu), (mu, mv)).into();
    }
    Ok(s)
}

/// A linear discrete-time system `x' = A x + B u + C v`, mainly for tests
/// and LQ-game verification.
#[derive(Debug, Clone)]
pub struct LinearPlant {
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub c: DMatrix<f64>,
    pub dt: f64,
}

impl Plant for LinearPlant {
    fn state_dim(&self) -> usize {
        self.a.nrows()
    }
    fn min_input_dim(&self) -> usize {
        self.b.ncols()
    }
    fn max_input_dim(&self) -> usize {
        self.c.ncols()
    }
    fn dt(&self) -> f64 {
        self.dt
    }
    fn step(&self, x: &DVector<f64>, u: &DVector<f64>, v: &DVector<f64>) -> DVector<f64> {
        &self.a * x + &self.b * u + &self.c * v
    }
    fn jacobians(
        &self,
        _x: &DVector<f64>,
        _u: &DVector<f64>,
        _v: &DVector<f64>,
    ) -> Option<(DMatrix<f64>, DMatrix<f64>, DMatrix<f64>)> {
        Some((self.a.clone(), self.b.clone(), self.c.clone()))
    }
    fn hessians(
        &self,
        _x: &DVector<f64>,
        _u: &DVector<f64>,
        _v: &DVector<f64>,
    ) -> Option<SecondOrder> {
        Some(SecondOrder::zeros(
            self.state_dim(),
            self.state_dim(),
            self.min_input_dim(),
            self.max_input_dim(),
        ))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::pendulum::{PendulumParams, PendulumPlant};
    use approx::assert_relative_eq;

    fn pendulum() -> PendulumPlant {
        PendulumPlant::new(PendulumParams::nominal(), 0.01)
    }

    #[test]
    fn pendulum_equilibrium_step() {
        let p = pendulum();
        let x = DVector::from_vec(vec![0.0, 0.0]);
        let u = DVector::from_vec(vec![0.0]);
        let v = DVector::from_vec(vec![0.0]);
        let next = step(&p, &x, &u, &v).unwrap();
        assert_eq!(next, x);
    }

    #[test]
    fn pendulum_quarter_circle_step() {
        // One Euler step from theta = pi/2 at rest: velocity picks up dt * g / l.
        let p = pendulum();
        let x = DVector::from_vec(vec![std::f64::consts::FRAC_PI_2, 0.0]);
        let u = DVector::from_vec(vec![0.0]);
        let v = DVector::from_vec(vec![0.0]);
        let next = step(&p, &x, &u, &v).unwrap();
        assert_relative_eq!(next[1], 0.01 * 9.81 / 0.75, epsilon = 1e-12);
        assert_relative_eq!(next[1], 0.1308, epsilon = 1e-4);
    }

    #[test]
    fn pendulum_input_exchange_symmetry() {
        // u and v enter only through their sum.
        let p = pendulum();
        let x = DVector::from_vec(vec![1.3, -0.4]);
        let a = DVector::from_vec(vec![2.5]);
        let b = DVector::from_vec(vec![-1.0]);
        let s1 = step(&p, &x, &a, &b).unwrap();
        let s2 = step(&p, &x, &b, &a).unwrap();
        assert_eq!(s1, s2);
    }

    #[test]
    fn pendulum_linearize_at_origin() {
        let p = pendulum();
        let params = PendulumParams::nominal();
        let x = DVector::from_vec(vec![0.0, 0.0]);
        let u = DVector::from_vec(vec![0.0]);
        let v = DVector::from_vec(vec![0.0]);
        let d = linearize(&p, &x, &u, &v).unwrap();
        let dt = 0.01;
        let inertia = params.mass * params.length * params.length;
        let expected_fx = DMatrix::from_row_slice(
            2,
            2,
            &[
                1.0,
                dt,
                dt * 9.81 / 0.75,
                1.0 - dt * params.damping / inertia,
            ],
        );
        assert_relative_eq!(d.fx, expected_fx, epsilon = 1e-12);
        assert_relative_eq!(d.fu[(1, 0)], dt / inertia, epsilon = 1e-12);
        assert_relative_eq!(d.fv[(1, 0)], dt / inertia, epsilon = 1e-12);
        assert_eq!(d.fu[(0, 0)], 0.0);
    }

    #[test]
    fn model_independent_of_v_has_zero_fv() {
        let lin = LinearPlant {
            a: DMatrix::identity(2, 2),
            b: DMatrix::from_row_slice(2, 1, &[0.0, 1.0]),
            c: DMatrix::zeros(2, 1),
            dt: 0.1,
        };
        let d = linearize(
            &lin,
            &DVector::from_vec(vec![0.3, 0.7]),
            &DVector::from_vec(vec![0.2]),
            &DVector::from_vec(vec![0.9]),
        )
        .unwrap();
        assert_eq!(d.fv, DMatrix::zeros(2, 1));
    }

    #[test]
    fn linear_model_has_zero_tensors() {
        let lin = LinearPlant {
            a: DMatrix::from_row_slice(2, 2, &[0.9, 0.1, 0.0, 0.8]),
            b: DMatrix::from_row_slice(2, 1, &[0.0, 1.0]),
            c: DMatrix::from_row_slice(2, 1, &[0.5, 0.0]),
            dt: 0.1,
        };
        let d = quadratize(
            &lin,
            &DVector::from_vec(vec![1.0, -1.0]),
            &DVector::from_vec(vec![0.5]),
            &DVector::from_vec(vec![0.5]),
            true,
        )
        .unwrap();
        let s = d.second.unwrap();
        for m in &s.fxx.0 {
            assert_eq!(*m, DMatrix::zeros(2, 2));
        }
        for m in &s.fuv.0 {
            assert_eq!(*m, DMatrix::zeros(1, 1));
        }
    }

    #[test]
    fn pendulum_fxx_analytic() {
        // Only curvature is d^2(thetadot_next)/dtheta^2 = -dt*m*g*l*sin(theta)/I.
        let p = pendulum();
        let params = PendulumParams::nominal();
        let inertia = params.mass * params.length * params.length;
        let u = DVector::from_vec(vec![0.0]);
        let v = DVector::from_vec(vec![0.0]);

        let at_zero = quadratize(&p, &DVector::from_vec(vec![0.0, 0.0]), &u, &v, true).unwrap();
        let s0 = at_zero.second.unwrap();
        assert_relative_eq!(s0.fxx.0[1][(0, 0)], 0.0, epsilon = 1e-12);

        let at_quarter = quadratize(
            &p,
            &DVector::from_vec(vec![std::f64::consts::FRAC_PI_2, 0.0]),
            &u,
            &v,
            true,
        )
        .unwrap();
        let s1 = at_quarter.second.unwrap();
        let expected = -0.01 * params.mass * 9.81 * params.length / inertia;
        assert_relative_eq!(s1.fxx.0[1][(0, 0)], expected, epsilon = 1e-12);
    }

    #[test]
    fn pendulum_analytic_vs_fd() {
        let p = pendulum();
        let mut rng_state = 42u64;
        let mut next_f64 = || {
            // xorshift, good enough for scattering test points
            rng_state ^= rng_state << 13;
            rng_state ^= rng_state >> 7;
            rng_state ^= rng_state << 17;
            (rng_state as f64 / u64::MAX as f64) * 4.0 - 2.0
        };
        for _ in 0..100 {
            let x = DVector::from_vec(vec![next_f64(), next_f64()]);
            let u = DVector::from_vec(vec![next_f64()]);
            let v = DVector::from_vec(vec![next_f64()]);
            let analytic = linearize(&p, &x, &u, &v).unwrap();
            let fd = fd_linearize(&p, &x, &u, &v).unwrap();
            assert_relative_eq!(analytic.fx, fd.fx, max_relative = 1e-5, epsilon = 1e-7);
            assert_relative_eq!(analytic.fu, fd.fu, max_relative = 1e-5, epsilon = 1e-7);
            assert_relative_eq!(analytic.fv, fd.fv, max_relative = 1e-5, epsilon = 1e-7);

            let second = quadratize(&p, &x, &u, &v, true).unwrap().second.unwrap();
            let fd2 = fd_quadratize(&p, &x, &u, &v).unwrap();
            for i in 0..2 {
                assert_relative_eq!(
                    second.fxx.0[i],
                    fd2.fxx.0[i],
                    max_relative = 1e-3,
                    epsilon = 1e-6
                );
            }
        }
    }

    #[test]
    fn fd_tensor_symmetry() {
        let p = pendulum();
        let x = DVector::from_vec(vec![0.7, -1.2]);
        let u = DVector::from_vec(vec![0.4]);
        let v = DVector::from_vec(vec![-0.6]);
        let s = fd_quadratize(&p, &x, &u, &v).unwrap();
        for i in 0..2 {
            let m = &s.fxx.0[i];
            assert_relative_eq!(m[(0, 1)], m[(1, 0)], epsilon = 1e-8);
        }
    }
}
