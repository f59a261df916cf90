//! Safe sets, barrier functions, and barrier-state augmentation.
//!
//! A barrier state tracks the value of a barrier function of the safety
//! constraints along the trajectory. Appending it to the plant state turns
//! the constrained problem into stabilization of an augmented model whose
//! barrier components must stay bounded: bounded barrier states are
//! equivalent to strict constraint satisfaction at every step.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::dynamics::{self, Plant, SecondOrder, StepDerivatives};
use crate::error::{Error, Result};
use crate::types::Trajectory;

type ScalarFn = dyn Fn(&DVector<f64>) -> f64 + Send + Sync;
type GradFn = dyn Fn(&DVector<f64>) -> DVector<f64> + Send + Sync;
type HessFn = dyn Fn(&DVector<f64>) -> DMatrix<f64> + Send + Sync;

/// A scalar constraint function `h` with `h(x) > 0` on the safe interior.
#[derive(Clone)]
pub struct SafeSetFunction {
    pub label: String,
    h: Arc<ScalarFn>,
    grad: Arc<GradFn>,
    hess: Arc<HessFn>,
}

impl fmt::Debug for SafeSetFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SafeSetFunction")
            .field("label", &self.label)
            .finish()
    }
}

impl SafeSetFunction {
    pub fn new(
        label: impl Into<String>,
        h: impl Fn(&DVector<f64>) -> f64 + Send + Sync + 'static,
        grad: impl Fn(&DVector<f64>) -> DVector<f64> + Send + Sync + 'static,
        hess: impl Fn(&DVector<f64>) -> DMatrix<f64> + Send + Sync + 'static,
    ) -> Self {
        SafeSetFunction {
            label: label.into(),
            h: Arc::new(h),
            grad: Arc::new(grad),
            hess: Arc::new(hess),
        }
    }

    pub fn value(&self, x: &DVector<f64>) -> f64 {
        (self.h)(x)
    }

    pub fn gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        (self.grad)(x)
    }

    pub fn hessian(&self, x: &DVector<f64>) -> DMatrix<f64> {
        (self.hess)(x)
    }

    /// `h = limit^2 - x[i]^2`, bounding the magnitude of one state component.
    pub fn component_bound(n: usize, i: usize, limit: f64, label: impl Into<String>) -> Self {
        SafeSetFunction::new(
            label,
            move |x| limit * limit - x[i] * x[i],
            move |x| {
                let mut g = DVector::zeros(n);
                g[i] = -2.0 * x[i];
                g
            },
            move |_| {
                let mut m = DMatrix::zeros(n, n);
                m[(i, i)] = -2.0;
                m
            },
        )
    }

    /// `h = |p - center|^2 - r^2` over the first three state components.
    pub fn sphere_obstacle(n: usize, center: [f64; 3], radius: f64, label: impl Into<String>) -> Self {
        SafeSetFunction::new(
            label,
            move |x| {
                let dx = x[0] - center[0];
                let dy = x[1] - center[1];
                let dz = x[2] - center[2];
                dx * dx + dy * dy + dz * dz - radius * radius
            },
            move |x| {
                let mut g = DVector::zeros(n);
                g[0] = 2.0 * (x[0] - center[0]);
                g[1] = 2.0 * (x[1] - center[1]);
                g[2] = 2.0 * (x[2] - center[2]);
                g
            },
            move |_| {
                let mut m = DMatrix::zeros(n, n);
                m[(0, 0)] = 2.0;
                m[(1, 1)] = 2.0;
                m[(2, 2)] = 2.0;
                m
            },
        )
    }
}

/// Barrier function of the constraint value, diverging as `h -> 0+`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BarrierKind {
    Inverse,
    Logarithmic,
}

impl BarrierKind {
    pub fn value(self, h: f64) -> f64 {
        match self {
            BarrierKind::Inverse => 1.0 / h,
            BarrierKind::Logarithmic => -(h / (1.0 + h)).ln(),
        }
    }

    pub fn d1(self, h: f64) -> f64 {
        match self {
            BarrierKind::Inverse => -1.0 / (h * h),
            BarrierKind::Logarithmic => -1.0 / (h * (1.0 + h)),
        }
    }

    pub fn d2(self, h: f64) -> f64 {
        match self {
            BarrierKind::Inverse => 2.0 / (h * h * h),
            BarrierKind::Logarithmic => (2.0 * h + 1.0) / (h * h * (1.0 + h) * (1.0 + h)),
        }
    }
}

/// How barrier values behave outside the safe set.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BarrierEval {
    /// `h <= 0` yields the `+inf` UNSAFE sentinel. Used inside the solver
    /// so a trial rollout that leaves the safe set is cheap to reject.
    Strict,
    /// Evaluate `B(h)` as written even for `h <= 0` (finite for the inverse
    /// barrier). Used when simulating the true, possibly violating, system.
    Raw,
}

/// One barrier state: a barrier kind applied to a group of constraints,
/// summed, and optionally shifted so the state is zero at the target.
#[derive(Debug, Clone)]
pub struct BarrierSpec {
    pub kind: BarrierKind,
    pub constraints: Vec<SafeSetFunction>,
    pub shift_by_target: bool,
    offset: f64,
}

impl BarrierSpec {
    /// A single barrier state summing all constraints, shifted so it is
    /// zero at `target`.
    pub fn summed(kind: BarrierKind, constraints: Vec<SafeSetFunction>, target: &DVector<f64>) -> Self {
        let mut spec = BarrierSpec {
            kind,
            constraints,
            shift_by_target: true,
            offset: 0.0,
        };
        spec.offset = spec.raw_sum(target);
        spec
    }

    /// A single barrier state with no target shift.
    pub fn unshifted(kind: BarrierKind, constraints: Vec<SafeSetFunction>) -> Self {
        BarrierSpec {
            kind,
            constraints,
            shift_by_target: false,
            offset: 0.0,
        }
    }

    /// One barrier state per constraint.
    pub fn one_per_constraint(
        kind: BarrierKind,
        constraints: Vec<SafeSetFunction>,
        target: &DVector<f64>,
    ) -> Vec<Self> {
        constraints
            .into_iter()
            .map(|c| BarrierSpec::summed(kind, vec![c], target))
            .collect()
    }

    /// The target offset `B(h(x^d))` subtracted when shifting is enabled.
    pub fn target_offset(&self) -> f64 {
        if self.shift_by_target {
            self.offset
        } else {
            0.0
        }
    }

    fn raw_sum(&self, x: &DVector<f64>) -> f64 {
        self.constraints.iter().map(|c| self.kind.value(c.value(x))).sum()
    }

    /// Barrier state value at a plant state.
    pub fn value(&self, x: &DVector<f64>, mode: BarrierEval) -> f64 {
        if mode == BarrierEval::Strict {
            for c in &self.constraints {
                if c.value(x) <= 0.0 {
                    return f64::INFINITY;
                }
            }
        }
        self.raw_sum(x) - self.target_offset()
    }
}

/// Barrier state values for a list of specs at a plant state.
pub fn barrier_value(specs: &[BarrierSpec], x: &DVector<f64>, mode: BarrierEval) -> DVector<f64> {
    DVector::from_iterator(specs.len(), specs.iter().map(|s| s.value(x, mode)))
}

/// Next barrier value: the barrier evaluated at the plant's next state.
pub fn bas_step(
    spec: &BarrierSpec,
    plant: &dyn Plant,
    x: &DVector<f64>,
    u: &DVector<f64>,
    v: &DVector<f64>,
) -> f64 {
    spec.value(&plant.step(x, u, v), BarrierEval::Strict)
}

/// Plant model augmented with barrier states.
///
/// The first `n` components of the augmented state are the plant state and
/// evolve exactly as the plant does; the trailing `q` components are the
/// barrier states of each spec evaluated at the plant's next state.
#[derive(Clone)]
pub struct AugmentedModel {
    plant: Arc<dyn Plant>,
    specs: Vec<BarrierSpec>,
}

impl fmt::Debug for AugmentedModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("AugmentedModel")
            .field("plant_dim", &self.plant.state_dim())
            .field("barrier_states", &self.specs.len())
            .finish()
    }
}

/// Build the safety-embedded model from a plant and its barrier specs.
pub fn augment(plant: Arc<dyn Plant>, specs: Vec<BarrierSpec>) -> AugmentedModel {
    AugmentedModel { plant, specs }
}

impl AugmentedModel {
    pub fn plant(&self) -> &Arc<dyn Plant> {
        &self.plant
    }

    pub fn specs(&self) -> &[BarrierSpec] {
        &self.specs
    }

    pub fn plant_dim(&self) -> usize {
        self.plant.state_dim()
    }

    pub fn barrier_dim(&self) -> usize {
        self.specs.len()
    }

    pub fn project_plant(&self, xhat: &DVector<f64>) -> DVector<f64> {
        xhat.rows(0, self.plant_dim()).into_owned()
    }

    /// Append barrier components to a plant state.
    pub fn augment_state(&self, x: &DVector<f64>, mode: BarrierEval) -> DVector<f64> {
        let n = self.plant_dim();
        let mut xhat = DVector::zeros(n + self.specs.len());
        xhat.rows_mut(0, n).copy_from(x);
        for (j, spec) in self.specs.iter().enumerate() {
            xhat[n + j] = spec.value(x, mode);
        }
        xhat
    }

    /// Check the initial state is strictly inside the safe set.
    pub fn check_strictly_safe(&self, x: &DVector<f64>) -> Result<()> {
        for spec in &self.specs {
            for c in &spec.constraints {
                let h = c.value(x);
                if !(h > 0.0) {
                    return Err(Error::UnsafeInitialState {
                        label: c.label.clone(),
                        value: h,
                    });
                }
            }
        }
        Ok(())
    }

    /// Derivatives of the augmented map assembled by the chain rule from
    /// the plant's derivatives and the constraint gradients/Hessians.
    pub fn derivatives(
        &self,
        xhat: &DVector<f64>,
        u: &DVector<f64>,
        v: &DVector<f64>,
        include_second: bool,
    ) -> Result<StepDerivatives> {
        let n = self.plant_dim();
        let q = self.barrier_dim();
        let mu = self.plant.min_input_dim();
        let mv = self.plant.max_input_dim();
        let nh = n + q;

        let x = self.project_plant(xhat);
        let pd = dynamics::quadratize(self.plant.as_ref(), &x, u, v, include_second)?;
        let y = self.plant.step(&x, u, v);
        for (i, c) in y.iter().enumerate() {
            if !c.is_finite() {
                return Err(Error::NonFinite {
                    what: "augmented model plant step",
                    index: i,
                });
            }
        }

        let mut fx = DMatrix::zeros(nh, nh);
        fx.view_mut((0, 0), (n, n)).copy_from(&pd.fx);
        let mut fu = DMatrix::zeros(nh, mu);
        fu.view_mut((0, 0), (n, mu)).copy_from(&pd.fu);
        let mut fv = DMatrix::zeros(nh, mv);
        fv.view_mut((0, 0), (n, mv)).copy_from(&pd.fv);

        let plant_second = pd.second.as_ref();

        let mut second = include_second.then(|| SecondOrder::zeros(nh, nh, mu, mv));
        if let (Some(sec), Some(ps)) = (second.as_mut(), plant_second) {
            for i in 0..n {
                embed_square(&mut sec.fxx.0[i], &ps.fxx.0[i], n);
                sec.fuu.0[i] = ps.fuu.0[i].clone();
                sec.fvv.0[i] = ps.fvv.0[i].clone();
                embed_rows(&mut sec.fxu.0[i], &ps.fxu.0[i], n);
                embed_rows(&mut sec.fxv.0[i], &ps.fxv.0[i], n);
                sec.fuv.0[i] = ps.fuv.0[i].clone();
            }
        }

        for (j, spec) in self.specs.iter().enumerate() {
            let row = n + j;
            let mut gx = DVector::zeros(n);
            let mut gu = DVector::zeros(mu);
            let mut gv = DVector::zeros(mv);
            let mut wxx = DMatrix::zeros(n, n);
            let mut wuu = DMatrix::zeros(mu, mu);
            let mut wvv = DMatrix::zeros(mv, mv);
            let mut wxu = DMatrix::zeros(n, mu);
            let mut wxv = DMatrix::zeros(n, mv);
            let mut wuv = DMatrix::zeros(mu, mv);

            for c in &spec.constraints {
                let h = c.value(&y);
                if h <= 0.0 {
                    return Err(Error::NonFinite {
                        what: "barrier derivative outside safe set",
                        index: row,
                    });
                }
                let g = c.gradient(&y);
                let b1 = spec.kind.d1(h);
                // chain through the plant next state: d w / d s = B'(h) grad_h^T f_s
                let jx = pd.fx.transpose() * &g; // n
                let ju = pd.fu.transpose() * &g; // mu
                let jv = pd.fv.transpose() * &g; // mv
                gx += b1 * &jx;
                gu += b1 * &ju;
                gv += b1 * &jv;

                if include_second {
                    let b2 = spec.kind.d2(h);
                    let hh = c.hessian(&y);
                    let ps = plant_second.expect("second order requested");
                    wxx += b2 * &jx * jx.transpose()
                        + b1 * (pd.fx.transpose() * &hh * &pd.fx + ps.fxx.contract(&g));
                    wuu += b2 * &ju * ju.transpose()
                        + b1 * (pd.fu.transpose() * &hh * &pd.fu + ps.fuu.contract(&g));
                    wvv += b2 * &jv * jv.transpose()
                        + b1 * (pd.fv.transpose() * &hh * &pd.fv + ps.fvv.contract(&g));
                    wxu += b2 * &jx * ju.transpose()
                        + b1 * (pd.fx.transpose() * &hh * &pd.fu + ps.fxu.contract(&g));
                    wxv += b2 * &jx * jv.transpose()
                        + b1 * (pd.fx.transpose() * &hh * &pd.fv + ps.fxv.contract(&g));
                    wuv += b2 * &ju * jv.transpose()
                        + b1 * (pd.fu.transpose() * &hh * &pd.fv + ps.fuv.contract(&g));
                }
            }

            for a in 0..n {
                fx[(row, a)] = gx[a];
            }
            for a in 0..mu {
                fu[(row, a)] = gu[a];
            }
            for a in 0..mv {
                fv[(row, a)] = gv[a];
            }
            if let Some(sec) = second.as_mut() {
                embed_square(&mut sec.fxx.0[row], &wxx, n);
                sec.fuu.0[row] = wuu;
                sec.fvv.0[row] = wvv;
                embed_rows(&mut sec.fxu.0[row], &wxu, n);
                embed_rows(&mut sec.fxv.0[row], &wxv, n);
                sec.fuv.0[row] = wuv;
            }
        }

        Ok(StepDerivatives { fx, fu, fv, second })
    }
}

fn embed_square(dst: &mut DMatrix<f64>, src: &DMatrix<f64>, n: usize) {
    dst.view_mut((0, 0), (n, n)).copy_from(src);
}

fn embed_rows(dst: &mut DMatrix<f64>, src: &DMatrix<f64>, n: usize) {
    dst.view_mut((0, 0), (n, src.ncols())).copy_from(src);
}

impl Plant for AugmentedModel {
    fn state_dim(&self) -> usize {
        self.plant_dim() + self.barrier_dim()
    }
    fn min_input_dim(&self) -> usize {
        self.plant.min_input_dim()
    }
    fn max_input_dim(&self) -> usize {
        self.plant.max_input_dim()
    }
    fn dt(&self) -> f64 {
        self.plant.dt()
    }

    fn step(&self, xhat: &DVector<f64>, u: &DVector<f64>, v: &DVector<f64>) -> DVector<f64> {
        let n = self.plant_dim();
        let x = self.project_plant(xhat);
        let y = self.plant.step(&x, u, v);
        let mut next = DVector::zeros(n + self.barrier_dim());
        next.rows_mut(0, n).copy_from(&y);
        for (j, spec) in self.specs.iter().enumerate() {
            next[n + j] = spec.value(&y, BarrierEval::Strict);
        }
        next
    }
}

/// True iff every constraint is strictly satisfied at every timestep of the
/// trajectory's plant states; otherwise reports the earliest violation as
/// `(timestep, constraint_index)`.
pub fn is_safe_trajectory(model: &AugmentedModel, traj: &Trajectory) -> (bool, Option<(usize, usize)>) {
    for (k, xhat) in traj.states.iter().enumerate() {
        let x = model.project_plant(xhat);
        let mut idx = 0;
        for spec in model.specs() {
            for c in &spec.constraints {
                if !(c.value(&x) > 0.0) {
                    return (false, Some((k, idx)));
                }
                idx += 1;
            }
        }
    }
    (true, None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{fd_linearize, linearize, LinearPlant};
    use crate::models::pendulum::{PendulumParams, PendulumPlant};
    use approx::assert_relative_eq;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn velocity_spec() -> BarrierSpec {
        let h = SafeSetFunction::component_bound(2, 1, 5.0, "velocity");
        BarrierSpec::summed(BarrierKind::Inverse, vec![h], &DVector::zeros(2))
    }

    #[test]
    fn pendulum_barrier_at_target_is_zero() {
        let spec = velocity_spec();
        assert_eq!(spec.value(&DVector::from_vec(vec![0.3, 0.0]), BarrierEval::Strict), 0.0);
    }

    #[test]
    fn pendulum_barrier_at_four() {
        let spec = velocity_spec();
        let w = spec.value(&DVector::from_vec(vec![0.0, 4.0]), BarrierEval::Strict);
        assert_relative_eq!(w, 1.0 / 9.0 - 1.0 / 25.0, epsilon = 1e-14);
        assert_relative_eq!(w, 0.0711, epsilon = 1e-4);
    }

    #[test]
    fn pendulum_barrier_on_boundary_is_unsafe() {
        let spec = velocity_spec();
        let w = spec.value(&DVector::from_vec(vec![0.0, 5.0]), BarrierEval::Strict);
        assert!(w.is_infinite() && w > 0.0);
    }

    #[test]
    fn bas_step_at_equilibrium() {
        let plant = PendulumPlant::new(PendulumParams::nominal(), 0.01);
        let spec = velocity_spec();
        let w = bas_step(
            &spec,
            &plant,
            &DVector::from_vec(vec![0.0, 0.0]),
            &DVector::from_vec(vec![0.0]),
            &DVector::from_vec(vec![0.0]),
        );
        assert_eq!(w, 0.0);
    }

    #[test]
    fn bas_step_scalar_toy() {
        // x' = x + u, h = 1 - x^2, unshifted inverse barrier.
        let plant = LinearPlant {
            a: DMatrix::identity(1, 1),
            b: DMatrix::identity(1, 1),
            c: DMatrix::zeros(1, 1),
            dt: 1.0,
        };
        let h = SafeSetFunction::new(
            "unit box",
            |x: &DVector<f64>| 1.0 - x[0] * x[0],
            |x: &DVector<f64>| DVector::from_vec(vec![-2.0 * x[0]]),
            |_: &DVector<f64>| DMatrix::from_vec(1, 1, vec![-2.0]),
        );
        let spec = BarrierSpec::unshifted(BarrierKind::Inverse, vec![h]);
        let w = bas_step(
            &spec,
            &plant,
            &DVector::from_vec(vec![0.0]),
            &DVector::from_vec(vec![0.5]),
            &DVector::zeros(1),
        );
        assert_relative_eq!(w, 4.0 / 3.0, epsilon = 1e-14);

        let w_unsafe = bas_step(
            &spec,
            &plant,
            &DVector::from_vec(vec![0.0]),
            &DVector::from_vec(vec![1.0]),
            &DVector::zeros(1),
        );
        assert!(w_unsafe.is_infinite());
    }

    #[test]
    fn augmented_plant_rows_match_plant() {
        let plant: Arc<dyn Plant> = Arc::new(PendulumPlant::new(PendulumParams::nominal(), 0.01));
        let model = augment(plant.clone(), vec![velocity_spec()]);
        assert_eq!(model.state_dim(), 3);
        let x = DVector::from_vec(vec![1.0, 2.0]);
        let u = DVector::from_vec(vec![0.7]);
        let v = DVector::from_vec(vec![-0.2]);
        let xhat = model.augment_state(&x, BarrierEval::Strict);
        let next_hat = model.step(&xhat, &u, &v);
        let next = plant.step(&x, &u, &v);
        assert_eq!(next_hat.rows(0, 2).into_owned(), next);

        // first 2 rows of fxhat are the plant fx padded with a zero column
        let d = model.derivatives(&xhat, &u, &v, true).unwrap();
        let pd = linearize(plant.as_ref(), &x, &u, &v).unwrap();
        assert_relative_eq!(d.fx.view((0, 0), (2, 2)).into_owned(), pd.fx, epsilon = 1e-14);
        assert_eq!(d.fx[(0, 2)], 0.0);
        assert_eq!(d.fx[(1, 2)], 0.0);
        assert_eq!(d.fx[(2, 2)], 0.0);
    }

    #[test]
    fn chain_rule_vs_finite_difference() {
        let plant: Arc<dyn Plant> = Arc::new(PendulumPlant::new(PendulumParams::nominal(), 0.01));
        let model = augment(plant, vec![velocity_spec()]);
        let mut rng = StdRng::seed_from_u64(7);
        for _ in 0..100 {
            let x = DVector::from_vec(vec![rng.gen_range(-3.0..3.0), rng.gen_range(-4.0..4.0)]);
            let u = DVector::from_vec(vec![rng.gen_range(-2.0..2.0)]);
            let v = DVector::from_vec(vec![rng.gen_range(-2.0..2.0)]);
            // skip points whose next state is too close to the boundary
            let xhat = model.augment_state(&x, BarrierEval::Strict);
            let next = model.step(&xhat, &u, &v);
            if !next.iter().all(|c| c.is_finite()) || next[1].abs() > 4.5 {
                continue;
            }
            let analytic = model.derivatives(&xhat, &u, &v, false).unwrap();
            let fd = fd_linearize(&model, &xhat, &u, &v).unwrap();
            assert_relative_eq!(analytic.fx, fd.fx, max_relative = 1e-5, epsilon = 1e-6);
            assert_relative_eq!(analytic.fu, fd.fu, max_relative = 1e-5, epsilon = 1e-6);
            assert_relative_eq!(analytic.fv, fd.fv, max_relative = 1e-5, epsilon = 1e-6);
        }
    }

    #[test]
    fn barrier_finiteness_iff_safety() {
        // Proposition-style cross-check on random trajectories straddling
        // the boundary.
        let plant: Arc<dyn Plant> = Arc::new(PendulumPlant::new(PendulumParams::nominal(), 0.01));
        let model = augment(plant, vec![velocity_spec()]);
        let mut rng = StdRng::seed_from_u64(99);
        for _ in 0..1000 {
            let n_steps = rng.gen_range(1..10usize);
            let states: Vec<DVector<f64>> = (0..=n_steps)
                .map(|_| {
                    let x = DVector::from_vec(vec![
                        rng.gen_range(-3.0..3.0),
                        rng.gen_range(-6.0..6.0),
                    ]);
                    model.augment_state(&x, BarrierEval::Strict)
                })
                .collect();
            let traj = Trajectory {
                states,
                min_inputs: vec![DVector::zeros(1); n_steps],
                max_inputs: vec![DVector::zeros(1); n_steps],
                dt: 0.01,
            };
            let (safe, violation) = is_safe_trajectory(&model, &traj);
            let all_finite = traj.states.iter().all(|x| x[2].is_finite());
            assert_eq!(safe, all_finite);
            assert_eq!(safe, violation.is_none());
        }
    }

    #[test]
    fn barrier_monotone_toward_boundary() {
        let spec = velocity_spec();
        let mut prev = f64::NEG_INFINITY;
        for i in 0..40 {
            let vdot = 0.1 + i as f64 * 0.12; // ray toward the +5 boundary
            let w = spec.value(&DVector::from_vec(vec![0.0, vdot]), BarrierEval::Strict);
            assert!(w > prev, "barrier not increasing at velocity {vdot}");
            prev = w;
        }
    }

    #[test]
    fn log_barrier_diverges_and_decreases() {
        for kind in [BarrierKind::Inverse, BarrierKind::Logarithmic] {
            let mut prev = f64::INFINITY;
            for i in 1..60 {
                let h = i as f64 * 0.05;
                let b = kind.value(h);
                assert!(b < prev, "{kind:?} not decreasing at h={h}");
                prev = b;
            }
            assert!(kind.value(1e-12) > 25.0, "{kind:?} does not diverge");
        }
    }

    #[test]
    fn raw_mode_keeps_inverse_barrier_finite_outside() {
        let spec = velocity_spec();
        let w = spec.value(&DVector::from_vec(vec![0.0, 6.0]), BarrierEval::Raw);
        assert!(w.is_finite() && w < 0.0);
    }
}
