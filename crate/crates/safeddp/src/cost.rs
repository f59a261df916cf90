//! Running and terminal cost definitions with exact derivatives.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Value and derivative blocks of the running cost at a point.
#[derive(Debug, Clone)]
pub struct RunningDerivs {
    pub value: f64,
    pub lx: DVector<f64>,
    pub lu: DVector<f64>,
    pub lv: DVector<f64>,
    pub lxx: DMatrix<f64>,
    pub luu: DMatrix<f64>,
    pub lvv: DMatrix<f64>,
    pub lxu: DMatrix<f64>,
    pub lxv: DMatrix<f64>,
    pub luv: DMatrix<f64>,
}

impl RunningDerivs {
    pub fn zeros(n: usize, mu: usize, mv: usize) -> Self {
        RunningDerivs {
            value: 0.0,
            lx: DVector::zeros(n),
            lu: DVector::zeros(mu),
            lv: DVector::zeros(mv),
            lxx: DMatrix::zeros(n, n),
            luu: DMatrix::zeros(mu, mu),
            lvv: DMatrix::zeros(mv, mv),
            lxu: DMatrix::zeros(n, mu),
            lxv: DMatrix::zeros(n, mv),
            luv: DMatrix::zeros(mu, mv),
        }
    }
}

/// Value, gradient, and Hessian of the terminal cost.
#[derive(Debug, Clone)]
pub struct TerminalDerivs {
    pub value: f64,
    pub phix: DVector<f64>,
    pub phixx: DMatrix<f64>,
}

/// A twice-differentiable two-player cost.
pub trait Cost: Send + Sync {
    fn state_dim(&self) -> usize;
    fn min_input_dim(&self) -> usize;
    fn max_input_dim(&self) -> usize;

    fn running(&self, x: &DVector<f64>, u: &DVector<f64>, v: &DVector<f64>) -> Result<RunningDerivs>;
    fn terminal(&self, x: &DVector<f64>) -> Result<TerminalDerivs>;
}

/// Convex-concave quadratic game cost:
/// `L = (x - xd)^T Q (x - xd) + u^T R_u u - v^T R_v v`,
/// `phi = (x_N - xd)^T S (x_N - xd)`.
#[derive(Debug, Clone)]
pub struct QuadraticCost {
    pub q: DMatrix<f64>,
    pub r_u: DMatrix<f64>,
    pub r_v: DMatrix<f64>,
    pub s: DMatrix<f64>,
    pub target: DVector<f64>,
}

fn check_symmetric(m: &DMatrix<f64>, name: &str) -> Result<()> {
    if m.nrows() != m.ncols() {
        return Err(Error::InvalidCost(format!("{name} must be square")));
    }
    for i in 0..m.nrows() {
        for j in (i + 1)..m.ncols() {
            if (m[(i, j)] - m[(j, i)]).abs() > 1e-12 * (1.0 + m[(i, j)].abs()) {
                return Err(Error::InvalidCost(format!("{name} must be symmetric")));
            }
        }
    }
    Ok(())
}

fn min_eigenvalue(m: &DMatrix<f64>) -> f64 {
    m.clone()
        .symmetric_eigen()
        .eigenvalues
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min)
}

impl QuadraticCost {
    pub fn new(
        q: DMatrix<f64>,
        r_u: DMatrix<f64>,
        r_v: DMatrix<f64>,
        s: DMatrix<f64>,
        target: DVector<f64>,
    ) -> Result<Self> {
        check_symmetric(&q, "Q")?;
        check_symmetric(&r_u, "R_u")?;
        check_symmetric(&r_v, "R_v")?;
        check_symmetric(&s, "S")?;
        if q.nrows() != target.len() || s.nrows() != target.len() {
            return Err(Error::InvalidCost(
                "Q/S dimensions must match the target state".into(),
            ));
        }
        // Sign structure of the convex-concave family: L_uu = 2 R_u must be
        // positive definite and L_vv = -2 R_v negative definite.
        if r_u.nrows() > 0 && min_eigenvalue(&r_u) <= 0.0 {
            return Err(Error::InvalidCost("R_u must be positive definite".into()));
        }
        if r_v.nrows() > 0 && min_eigenvalue(&r_v) <= 0.0 {
            return Err(Error::InvalidCost("R_v must be positive definite".into()));
        }
        if min_eigenvalue(&q) < -1e-10 {
            return Err(Error::InvalidCost("Q must be positive semidefinite".into()));
        }
        if min_eigenvalue(&s) < -1e-10 {
            return Err(Error::InvalidCost("S must be positive semidefinite".into()));
        }
        Ok(QuadraticCost { q, r_u, r_v, s, target })
    }
}

impl Cost for QuadraticCost {
    fn state_dim(&self) -> usize {
        self.q.nrows()
    }
    fn min_input_dim(&self) -> usize {
        self.r_u.nrows()
    }
    fn max_input_dim(&self) -> usize {
        self.r_v.nrows()
    }

    fn running(&self, x: &DVector<f64>, u: &DVector<f64>, v: &DVector<f64>) -> Result<RunningDerivs> {
        if x.len() != self.state_dim() {
            return Err(Error::DimensionMismatch {
                what: "running cost state",
                expected: self.state_dim(),
                got: x.len(),
                index: 0,
            });
        }
        if u.len() != self.min_input_dim() || v.len() != self.max_input_dim() {
            return Err(Error::DimensionMismatch {
                what: "running cost inputs",
                expected: self.min_input_dim(),
                got: u.len(),
                index: 0,
            });
        }
        let d = x - &self.target;
        let qd = &self.q * &d;
        let ru_u = &self.r_u * u;
        let rv_v = &self.r_v * v;
        let value = d.dot(&qd) + u.dot(&ru_u) - v.dot(&rv_v);
        Ok(RunningDerivs {
            value,
            lx: 2.0 * qd,
            lu: 2.0 * ru_u,
            lv: -2.0 * rv_v,
            lxx: 2.0 * &self.q,
            luu: 2.0 * &self.r_u,
            lvv: -2.0 * &self.r_v,
            lxu: DMatrix::zeros(self.state_dim(), self.min_input_dim()),
            lxv: DMatrix::zeros(self.state_dim(), self.max_input_dim()),
            luv: DMatrix::zeros(self.min_input_dim(), self.max_input_dim()),
        })
    }

    fn terminal(&self, x: &DVector<f64>) -> Result<TerminalDerivs> {
        if x.len() != self.state_dim() {
            return Err(Error::DimensionMismatch {
                what: "terminal cost state",
                expected: self.state_dim(),
                got: x.len(),
                index: 0,
            });
        }
        let d = x - &self.target;
        let sd = &self.s * &d;
        Ok(TerminalDerivs {
            value: d.dot(&sd),
            phix: 2.0 * sd,
            phixx: 2.0 * &self.s,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn pendulum_cost() -> QuadraticCost {
        QuadraticCost::new(
            DMatrix::from_diagonal(&DVector::from_vec(vec![0.0, 0.0, 1000.0])),
            DMatrix::from_vec(1, 1, vec![0.1]),
            DMatrix::from_vec(1, 1, vec![1.1]),
            DMatrix::from_diagonal(&DVector::from_vec(vec![1000.0, 5.0, 500.0])),
            DVector::zeros(3),
        )
        .unwrap()
    }

    #[test]
    fn zero_at_saddle_point() {
        let c = pendulum_cost();
        let r = c
            .running(&DVector::zeros(3), &DVector::zeros(1), &DVector::zeros(1))
            .unwrap();
        assert_eq!(r.value, 0.0);
        assert_eq!(r.lx, DVector::zeros(3));
        assert_eq!(r.lu, DVector::zeros(1));
        assert_eq!(r.lv, DVector::zeros(1));
    }

    #[test]
    fn pendulum_running_value() {
        // Q_dbas * w^2 + R_u u^2 - R_v v^2 at w=0.1, u=1, v=1
        let c = pendulum_cost();
        let r = c
            .running(
                &DVector::from_vec(vec![0.0, 0.0, 0.1]),
                &DVector::from_vec(vec![1.0]),
                &DVector::from_vec(vec![1.0]),
            )
            .unwrap();
        assert_relative_eq!(r.value, 1000.0 * 0.01 + 0.1 - 1.1, epsilon = 1e-12);
        assert_relative_eq!(r.value, 9.0, epsilon = 1e-12);
        assert_relative_eq!(r.lvv[(0, 0)], -2.2, epsilon = 1e-14);
    }

    #[test]
    fn terminal_values() {
        let c = pendulum_cost();
        assert_eq!(c.terminal(&DVector::zeros(3)).unwrap().value, 0.0);
        let t = c.terminal(&DVector::from_vec(vec![0.1, 0.0, 0.0])).unwrap();
        assert_relative_eq!(t.value, 10.0, epsilon = 1e-12);
        assert_relative_eq!(t.phixx, 2.0 * &c.s, epsilon = 1e-14);
    }

    #[test]
    fn rejects_indefinite_weights() {
        assert!(QuadraticCost::new(
            DMatrix::zeros(2, 2),
            DMatrix::from_vec(1, 1, vec![0.0]),
            DMatrix::from_vec(1, 1, vec![1.0]),
            DMatrix::identity(2, 2),
            DVector::zeros(2),
        )
        .is_err());
        assert!(QuadraticCost::new(
            DMatrix::zeros(2, 2),
            DMatrix::from_vec(1, 1, vec![1.0]),
            DMatrix::from_vec(1, 1, vec![-1.0]),
            DMatrix::identity(2, 2),
            DVector::zeros(2),
        )
        .is_err());
    }

    #[test]
    fn gradients_match_finite_differences() {
        let c = pendulum_cost();
        let mut rng = StdRng::seed_from_u64(11);
        let fd_step = 1e-6;
        for _ in 0..50 {
            let x = DVector::from_fn(3, |_, _| rng.gen_range(-2.0..2.0));
            let u = DVector::from_fn(1, |_, _| rng.gen_range(-2.0..2.0));
            let v = DVector::from_fn(1, |_, _| rng.gen_range(-2.0..2.0));
            let r = c.running(&x, &u, &v).unwrap();
            for i in 0..3 {
                let mut xp = x.clone();
                let mut xm = x.clone();
                let h = fd_step * (1.0 + x[i].abs());
                xp[i] += h;
                xm[i] -= h;
                let d = (c.running(&xp, &u, &v).unwrap().value
                    - c.running(&xm, &u, &v).unwrap().value)
                    / (2.0 * h);
                assert_relative_eq!(r.lx[i], d, max_relative = 1e-6, epsilon = 1e-8);
            }
            let h = fd_step * (1.0 + u[0].abs());
            let mut up = u.clone();
            let mut um = u.clone();
            up[0] += h;
            um[0] -= h;
            let du = (c.running(&x, &up, &v).unwrap().value
                - c.running(&x, &um, &v).unwrap().value)
                / (2.0 * h);
            // the large Q term dominates the cost value, so central differences
            // of the small input gradient lose ~1e-6 to cancellation
            assert_relative_eq!(r.lu[0], du, max_relative = 1e-6, epsilon = 1e-5);

            let t = c.terminal(&x).unwrap();
            for i in 0..3 {
                let mut xp = x.clone();
                let mut xm = x.clone();
                let h = fd_step * (1.0 + x[i].abs());
                xp[i] += h;
                xm[i] -= h;
                let d =
                    (c.terminal(&xp).unwrap().value - c.terminal(&xm).unwrap().value) / (2.0 * h);
                assert_relative_eq!(t.phix[i], d, max_relative = 1e-6, epsilon = 1e-7);
            }
        }
    }
}
