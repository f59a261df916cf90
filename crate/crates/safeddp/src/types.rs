//! Shared trajectory and problem containers.

use std::sync::Arc;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::barrier::{AugmentedModel, BarrierEval};
use crate::cost::Cost;
use crate::error::{Error, Result};

/// A discrete trajectory of the augmented state and both players' inputs.
///
/// `states` has length `N + 1`, both input sequences length `N`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub states: Vec<DVector<f64>>,
    pub min_inputs: Vec<DVector<f64>>,
    pub max_inputs: Vec<DVector<f64>>,
    pub dt: f64,
}

impl Trajectory {
    pub fn horizon(&self) -> usize {
        self.min_inputs.len()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.horizon();
        if self.states.len() != n + 1 {
            return Err(Error::DimensionMismatch {
                what: "trajectory states",
                expected: n + 1,
                got: self.states.len(),
                index: 0,
            });
        }
        if self.max_inputs.len() != n {
            return Err(Error::DimensionMismatch {
                what: "trajectory max inputs",
                expected: n,
                got: self.max_inputs.len(),
                index: 0,
            });
        }
        Ok(())
    }

    pub fn is_finite(&self) -> bool {
        self.states.iter().all(|x| x.iter().all(|c| c.is_finite()))
            && self.min_inputs.iter().all(|u| u.iter().all(|c| c.is_finite()))
            && self.max_inputs.iter().all(|v| v.iter().all(|c| c.is_finite()))
    }
}

/// Total game cost of a trajectory:
/// `J = sum_{k=0}^{N-1} L(x_k, u_k, v_k) + phi(x_N)`.
///
/// Every input carries its running penalty, including the first one; the
/// state terms at `k = 0` are a constant offset since the initial state is
/// fixed. Leaving the first input unpenalized would let the optimizer
/// spend an arbitrarily large impulse on step 0, which is both physically
/// meaningless and brittle under model mismatch.
pub fn total_cost(traj: &Trajectory, cost: &dyn Cost) -> Result<f64> {
    traj.validate()?;
    let n = traj.horizon();
    let mut total = 0.0;
    for k in 0..n {
        total += cost
            .running(&traj.states[k], &traj.min_inputs[k], &traj.max_inputs[k])?
            .value;
    }
    total += cost.terminal(&traj.states[n])?.value;
    Ok(total)
}

/// Regularization of the control Hessian blocks in the backward pass.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RegularizationScheme {
    /// Clamp the eigenvalues of `H_uu` to at least `+strength` and those of
    /// `H_vv` to at most `-strength`.
    EigenClamp,
    /// Add `strength * I` to `H_uu` and subtract it from `H_vv`.
    Additive,
}

/// Solver configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    /// Convergence threshold on the per-iteration total cost change.
    pub convergence_threshold: f64,
    pub max_iterations: usize,
    pub regularization: RegularizationScheme,
    /// Initial regularization strength; raised x10 on a failed line search,
    /// halved (down to the initial value) on success.
    pub reg_initial: f64,
    pub reg_max: f64,
    /// Backtracking shrink factor in (0, 1).
    pub line_search_shrink: f64,
    /// Smallest step the backtracking search will try.
    pub line_search_min_step: f64,
    /// When false the max player is frozen at its nominal inputs and the
    /// solver reduces to single-player barrier-state DDP.
    pub max_player_enabled: bool,
    /// When false, second-order dynamics tensors are dropped (Gauss-Newton).
    pub second_order_dynamics: bool,
    /// Optional stricter acceptance: require `|z| > threshold` in addition
    /// to the sign condition.
    pub ratio_threshold: Option<f64>,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            convergence_threshold: 1e-4,
            max_iterations: 500,
            regularization: RegularizationScheme::EigenClamp,
            reg_initial: 1e-6,
            reg_max: 1e10,
            line_search_shrink: 0.5,
            line_search_min_step: 1e-3,
            max_player_enabled: true,
            second_order_dynamics: true,
            ratio_threshold: None,
        }
    }
}

impl SolverOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.convergence_threshold > 0.0) {
            return Err(Error::InvalidOption(format!(
                "convergence_threshold must be > 0, got {}",
                self.convergence_threshold
            )));
        }
        if !(self.line_search_shrink > 0.0 && self.line_search_shrink < 1.0) {
            return Err(Error::InvalidOption(format!(
                "line_search_shrink must be in (0, 1), got {}",
                self.line_search_shrink
            )));
        }
        if !(self.line_search_min_step > 0.0 && self.line_search_min_step <= 1.0) {
            return Err(Error::InvalidOption(format!(
                "line_search_min_step must be in (0, 1], got {}",
                self.line_search_min_step
            )));
        }
        if !(self.reg_initial > 0.0) || !(self.reg_max >= self.reg_initial) {
            return Err(Error::InvalidOption(
                "regularization strengths must satisfy 0 < initial <= max".into(),
            ));
        }
        Ok(())
    }
}

/// A complete min-max trajectory game: safety-embedded model, cost, start
/// state, and horizon.
#[derive(Clone)]
pub struct GameProblem {
    pub model: AugmentedModel,
    pub cost: Arc<dyn Cost>,
    /// Augmented initial state (plant state plus barrier components).
    pub initial_state: DVector<f64>,
    pub horizon: usize,
    pub options: SolverOptions,
}

impl GameProblem {
    /// Build a problem from a plant-space initial state. Fails unless the
    /// start is strictly inside the safe set.
    pub fn new(
        model: AugmentedModel,
        cost: Arc<dyn Cost>,
        plant_initial: &DVector<f64>,
        horizon: usize,
        options: SolverOptions,
    ) -> Result<Self> {
        options.validate()?;
        model.check_strictly_safe(plant_initial)?;
        let initial_state = model.augment_state(plant_initial, BarrierEval::Strict);
        for (i, c) in initial_state.iter().enumerate() {
            if !c.is_finite() {
                return Err(Error::NonFinite {
                    what: "augmented initial state",
                    index: i,
                });
            }
        }
        Ok(GameProblem {
            model,
            cost,
            initial_state,
            horizon,
            options,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cost::QuadraticCost;
    use approx::assert_relative_eq;
    use nalgebra::DMatrix;
    use proptest::prelude::*;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn pendulum_cost() -> QuadraticCost {
        // running weight only on the barrier state, terminal diag(1000, 5, 500)
        QuadraticCost::new(
            DMatrix::from_diagonal(&DVector::from_vec(vec![0.0, 0.0, 1000.0])),
            DMatrix::from_vec(1, 1, vec![0.1]),
            DMatrix::from_vec(1, 1, vec![1.1]),
            DMatrix::from_diagonal(&DVector::from_vec(vec![1000.0, 5.0, 500.0])),
            DVector::zeros(3),
        )
        .unwrap()
    }

    fn traj(states: Vec<Vec<f64>>, us: Vec<f64>, vs: Vec<f64>) -> Trajectory {
        Trajectory {
            states: states.into_iter().map(DVector::from_vec).collect(),
            min_inputs: us.into_iter().map(|u| DVector::from_vec(vec![u])).collect(),
            max_inputs: vs.into_iter().map(|v| DVector::from_vec(vec![v])).collect(),
            dt: 0.01,
        }
    }

    #[test]
    fn zero_trajectory_costs_nothing() {
        let cost = pendulum_cost();
        let t = traj(
            vec![vec![0.0; 3], vec![0.0; 3], vec![0.0; 3]],
            vec![0.0, 0.0],
            vec![0.0, 0.0],
        );
        assert_eq!(total_cost(&t, &cost).unwrap(), 0.0);
    }

    #[test]
    fn single_step_terminal_only() {
        // N = 1: no running terms, phi = 1000 * theta^2 at theta = 1.
        let cost = pendulum_cost();
        let t = traj(
            vec![vec![0.0; 3], vec![1.0, 0.0, 0.0]],
            vec![0.0],
            vec![0.0],
        );
        assert_relative_eq!(total_cost(&t, &cost).unwrap(), 1000.0);
    }

    #[test]
    fn every_input_is_charged() {
        // the first input carries the same penalty as any other
        let cost = pendulum_cost();
        let base = traj(
            vec![vec![0.0; 3]; 4],
            vec![0.0, 0.0, 0.0],
            vec![0.0, 0.0, 0.0],
        );
        let mut with_u0 = base.clone();
        with_u0.min_inputs[0] = DVector::from_vec(vec![10.0]);
        assert_relative_eq!(total_cost(&with_u0, &cost).unwrap(), 0.1 * 100.0);

        let mut with_u1 = base.clone();
        with_u1.min_inputs[1] = DVector::from_vec(vec![10.0]);
        assert_relative_eq!(total_cost(&with_u1, &cost).unwrap(), 0.1 * 100.0);
    }

    #[test]
    fn random_trajectory_matches_term_by_term_sum() {
        let cost = pendulum_cost();
        let mut rng = StdRng::seed_from_u64(3);
        let n = 3usize;
        let states: Vec<Vec<f64>> = (0..=n)
            .map(|_| (0..3).map(|_| rng.gen_range(-2.0..2.0)).collect())
            .collect();
        let us: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let vs: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let t = traj(states.clone(), us.clone(), vs.clone());

        // independent per-term accumulation
        let mut expected = 0.0;
        for k in 0..n {
            let w = states[k][2];
            expected += 1000.0 * w * w + 0.1 * us[k] * us[k] - 1.1 * vs[k] * vs[k];
        }
        let xn = &states[n];
        expected += 1000.0 * xn[0] * xn[0] + 5.0 * xn[1] * xn[1] + 500.0 * xn[2] * xn[2];

        assert_relative_eq!(total_cost(&t, &cost).unwrap(), expected, epsilon = 1e-10);
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let cost = pendulum_cost();
        let mut t = traj(vec![vec![0.0; 3]; 3], vec![0.0, 0.0], vec![0.0, 0.0]);
        t.states.pop();
        assert!(matches!(
            total_cost(&t, &cost),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    proptest! {
        /// Splitting a trajectory at any k and summing partial costs (with
        /// the terminal applied only once) reproduces the full cost.
        #[test]
        fn total_cost_is_additive(
            raw in proptest::collection::vec(proptest::collection::vec(-2.0f64..2.0, 3), 3..10),
            split in 1usize..8,
        ) {
            let n = raw.len() - 1;
            prop_assume!(split < n);
            let cost = pendulum_cost();
            let us: Vec<f64> = (0..n).map(|k| raw[k][0] * 0.5).collect();
            let vs: Vec<f64> = (0..n).map(|k| raw[k][1] * 0.5).collect();
            let t = traj(raw.clone(), us.clone(), vs.clone());
            let full = total_cost(&t, &cost).unwrap();

            // partial sums computed directly
            let mut head = 0.0;
            for k in 0..split {
                let r = cost.running(&t.states[k], &t.min_inputs[k], &t.max_inputs[k]).unwrap();
                head += r.value;
            }
            let mut tail = 0.0;
            for k in split..n {
                let r = cost.running(&t.states[k], &t.min_inputs[k], &t.max_inputs[k]).unwrap();
                tail += r.value;
            }
            tail += cost.terminal(&t.states[n]).unwrap().value;
            prop_assert!((full - (head + tail)).abs() < 1e-9 * (1.0 + full.abs()));
        }
    }
}
