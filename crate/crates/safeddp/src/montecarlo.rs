//! Monte-Carlo robustness evaluation: apply a solved min-player policy to
//! perturbed or disturbed true systems and compute batch statistics.
//!
//! Trials are independent and run in parallel; every trial derives its own
//! random stream from `(scenario seed, trial index)` and aggregation walks
//! the trials in index order, so metrics are bit-identical regardless of
//! how many workers executed them.

use nalgebra::DVector;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::barrier::{AugmentedModel, BarrierEval};
use crate::dynamics::Plant;
use crate::error::{Error, Result};
use crate::models::pendulum::{PendulumParams, PendulumPlant};
use crate::models::quadrotor::{quadrotor_model, QuadrotorParams};
use crate::models::uncertainty::{
    sample_perturbed_pendulum, wind_disturbance, UncertaintyLevel, WindModel,
};
use crate::solver::Solution;
use crate::types::GameProblem;

/// How each trial's "true" system differs from the design model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum TrialSetup {
    /// Perturbed pendulum parameters; the adversary input is zero at
    /// evaluation time (the mismatch itself is the disturbance).
    PendulumParametric {
        nominal: PendulumParams,
        level: UncertaintyLevel,
    },
    /// Exact quadrotor parameters; sinusoidal wind drives the adversary
    /// channel.
    QuadrotorWind {
        params: QuadrotorParams,
        sigma: f64,
        target: [f64; 3],
    },
}

/// A complete evaluation protocol.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub setup: TrialSetup,
    pub trials: usize,
    pub reach_threshold: f64,
    pub seed: u64,
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        if self.trials < 1 {
            return Err(Error::ScenarioMismatch("trial count must be >= 1".into()));
        }
        if !(self.reach_threshold > 0.0) {
            return Err(Error::ScenarioMismatch(
                "reach threshold must be > 0".into(),
            ));
        }
        Ok(())
    }
}

/// One closed-loop trial on a true system.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial: usize,
    pub safe: bool,
    pub reached: bool,
    pub success: bool,
    /// False when the rollout blew up numerically or left the
    /// [`DIVERGENCE_NORM`] envelope; such trials fail all three rates and
    /// are excluded from RMSD/variance.
    pub finite: bool,
    pub terminal_distance: Option<f64>,
    /// Earliest violation as (timestep, constraint index).
    pub violation: Option<(usize, usize)>,
    pub final_state: Vec<f64>,
}

/// Batch statistics over a scenario.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Metrics {
    pub scenario: Scenario,
    pub safety_rate: f64,
    pub reachability_rate: f64,
    pub success_rate: f64,
    pub rmsd: f64,
    pub total_state_variance: f64,
    pub excluded_nonfinite: usize,
    pub records: Vec<TrialRecord>,
}

/// State-norm bound past which a rollout is declared diverged. The
/// operating envelopes of both benchmarks stay within a norm of a few
/// tens; a state three orders of magnitude beyond that carries no
/// physical meaning, but left in the moment statistics a handful of such
/// runaways would swamp the variance and RMSD of the entire batch. They
/// are treated exactly like numerical blowups: the trial fails every rate
/// and is excluded from the moments.
pub const DIVERGENCE_NORM: f64 = 1e3;

/// Result of one closed-loop rollout on a true plant.
pub struct TrialOutcome {
    /// True plant states; shorter than `N + 1` when the rollout blew up.
    pub plant_states: Vec<DVector<f64>>,
    pub finite: bool,
    pub violation: Option<(usize, usize)>,
}

fn earliest_violation(model: &AugmentedModel, states: &[DVector<f64>]) -> Option<(usize, usize)> {
    for (k, x) in states.iter().enumerate() {
        let mut idx = 0;
        for spec in model.specs() {
            for c in &spec.constraints {
                if !(c.value(x) > 0.0) {
                    return Some((k, idx));
                }
                idx += 1;
            }
        }
    }
    None
}

/// Apply the stored policy to a true plant.
///
/// The control is `u_k = ubar_k + K_u (xhat_k - xbar_k)` where `xhat_k`
/// re-evaluates the barrier components on the TRUE rollout state (so the
/// feedback acts on measured constraint proximity, not the design-model
/// prediction); the feedforward is already folded into `ubar`. The
/// adversary channel of the true plant is driven by `disturbance(k)`.
pub fn closed_loop_rollout(
    solution: &Solution,
    design: &AugmentedModel,
    true_plant: &dyn Plant,
    disturbance: impl Fn(usize) -> DVector<f64>,
    x0: &DVector<f64>,
) -> TrialOutcome {
    let n = solution.trajectory.horizon();
    let mut plant_states = Vec::with_capacity(n + 1);
    let mut x = x0.clone();
    plant_states.push(x.clone());
    for k in 0..n {
        let xhat = design.augment_state(&x, BarrierEval::Raw);
        if !xhat.iter().all(|c| c.is_finite()) || x.norm() > DIVERGENCE_NORM {
            return TrialOutcome {
                violation: earliest_violation(design, &plant_states),
                plant_states,
                finite: false,
            };
        }
        let dx = &xhat - &solution.trajectory.states[k];
        let u = &solution.trajectory.min_inputs[k] + &solution.policy.gains[k].ck_u * &dx;
        let v = disturbance(k);
        let next = true_plant.step(&x, &u, &v);
        if !next.iter().all(|c| c.is_finite()) {
            return TrialOutcome {
                violation: earliest_violation(design, &plant_states),
                plant_states,
                finite: false,
            };
        }
        plant_states.push(next.clone());
        x = next;
    }
    TrialOutcome {
        violation: earliest_violation(design, &plant_states),
        plant_states,
        finite: true,
    }
}

fn trial_rng(seed: u64, trial: usize) -> ChaCha8Rng {
    // splitmix64 of the pair keeps per-trial streams decorrelated while
    // depending only on (seed, trial).
    let mut z = seed ^ (trial as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^= z >> 31;
    ChaCha8Rng::seed_from_u64(z)
}

/// Terminal distance in the units the reach threshold references: angle
/// magnitude for the pendulum, Euclidean position distance for the
/// quadrotor.
fn terminal_distance(setup: &TrialSetup, final_state: &DVector<f64>) -> f64 {
    match setup {
        TrialSetup::PendulumParametric { .. } => final_state[0].abs(),
        TrialSetup::QuadrotorWind { target, .. } => ((final_state[0] - target[0]).powi(2)
            + (final_state[1] - target[1]).powi(2)
            + (final_state[2] - target[2]).powi(2))
        .sqrt(),
    }
}

/// Run one trial of a scenario. Exposed so the plot-data exporter can
/// re-simulate identical trajectories from the same seeds.
pub fn run_trial(
    problem: &GameProblem,
    solution: &Solution,
    scenario: &Scenario,
    trial: usize,
) -> (TrialRecord, Vec<DVector<f64>>) {
    let mut rng = trial_rng(scenario.seed, trial);
    let design = &problem.model;
    let x0 = design.project_plant(&problem.initial_state);
    let dt = Plant::dt(design);

    let outcome = match &scenario.setup {
        TrialSetup::PendulumParametric { nominal, level } => {
            let (true_params, _) = sample_perturbed_pendulum(nominal, *level, &mut rng);
            let true_plant = PendulumPlant::new(true_params, dt);
            closed_loop_rollout(
                solution,
                design,
                &true_plant,
                |_| DVector::zeros(1),
                &x0,
            )
        }
        TrialSetup::QuadrotorWind { params, sigma, .. } => {
            let wind = WindModel::draw(*sigma, solution.trajectory.horizon(), &mut rng);
            let true_plant = quadrotor_model(*params, dt);
            closed_loop_rollout(
                solution,
                design,
                &true_plant,
                |k| {
                    let f = wind_disturbance(&wind, k, k as f64 * dt);
                    DVector::from_vec(vec![f[0], f[1], f[2]])
                },
                &x0,
            )
        }
    };

    let safe = outcome.finite && outcome.violation.is_none();
    let (reached, distance) = if outcome.finite {
        let d = terminal_distance(&scenario.setup, outcome.plant_states.last().unwrap());
        (d < scenario.reach_threshold, Some(d))
    } else {
        (false, None)
    };
    let record = TrialRecord {
        trial,
        safe,
        reached,
        success: safe && reached,
        finite: outcome.finite,
        terminal_distance: distance,
        violation: outcome.violation,
        final_state: outcome
            .plant_states
            .last()
            .map(|x| x.iter().cloned().collect())
            .unwrap_or_default(),
    };
    (record, outcome.plant_states)
}

/// Fold per-trial records and state histories into batch metrics.
///
/// The variance is computed two-pass (mean, then squared deviations) over
/// the finite trials only, per state component and timestep, then summed.
pub fn aggregate(
    scenario: &Scenario,
    results: Vec<(TrialRecord, Vec<DVector<f64>>)>,
) -> Metrics {
    let n_trials = results.len();
    let mut records = Vec::with_capacity(n_trials);
    let mut histories = Vec::with_capacity(n_trials);
    for (r, h) in results {
        records.push(r);
        histories.push(h);
    }

    let pct = |count: usize| 100.0 * count as f64 / n_trials as f64;
    let safety_rate = pct(records.iter().filter(|r| r.safe).count());
    let reachability_rate = pct(records.iter().filter(|r| r.reached).count());
    let success_rate = pct(records.iter().filter(|r| r.success).count());
    let excluded_nonfinite = records.iter().filter(|r| !r.finite).count();

    let finite: Vec<usize> = (0..n_trials).filter(|&i| records[i].finite).collect();
    let rmsd = if finite.is_empty() {
        f64::NAN
    } else {
        (finite
            .iter()
            .map(|&i| {
                let d = records[i].terminal_distance.unwrap();
                d * d
            })
            .sum::<f64>()
            / finite.len() as f64)
            .sqrt()
    };

    let total_state_variance = if finite.is_empty() {
        f64::NAN
    } else {
        let steps = histories[finite[0]].len();
        let dim = histories[finite[0]][0].len();
        let m = finite.len() as f64;
        let mut total = 0.0;
        for k in 0..steps {
            for c in 0..dim {
                let mean = finite.iter().map(|&i| histories[i][k][c]).sum::<f64>() / m;
                let ss = finite
                    .iter()
                    .map(|&i| {
                        let d = histories[i][k][c] - mean;
                        d * d
                    })
                    .sum::<f64>();
                total += ss / m;
            }
        }
        total
    };

    Metrics {
        scenario: scenario.clone(),
        safety_rate,
        reachability_rate,
        success_rate,
        rmsd,
        total_state_variance,
        excluded_nonfinite,
        records,
    }
}

/// Run the full batch in parallel and aggregate deterministically.
pub fn evaluate(
    problem: &GameProblem,
    solution: &Solution,
    scenario: &Scenario,
) -> Result<Metrics> {
    scenario.validate()?;
    if solution.trajectory.horizon() != problem.horizon {
        return Err(Error::ScenarioMismatch(
            "solution horizon does not match the problem".into(),
        ));
    }
    let results: Vec<(TrialRecord, Vec<DVector<f64>>)> = (0..scenario.trials)
        .into_par_iter()
        .map(|i| run_trial(problem, solution, scenario, i))
        .collect();
    Ok(aggregate(scenario, results))
}

/// Per-metric deltas (proposed minus baseline) with the expected-ordering
/// flags: the robust policy should be safer with lower dispersion, the
/// baseline should track the target tighter when nothing goes wrong.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Comparison {
    pub safety_delta: f64,
    pub reachability_delta: f64,
    pub success_delta: f64,
    pub rmsd_delta: f64,
    pub variance_delta: f64,
    pub proposed_safer: bool,
    pub proposed_higher_success: bool,
    pub proposed_lower_variance: bool,
    pub baseline_lower_rmsd: bool,
    pub baseline_higher_reachability: bool,
}

pub fn compare(proposed: &Metrics, baseline: &Metrics) -> Result<Comparison> {
    if proposed.scenario != baseline.scenario {
        return Err(Error::ScenarioMismatch(
            "metrics were produced under different scenarios".into(),
        ));
    }
    Ok(Comparison {
        safety_delta: proposed.safety_rate - baseline.safety_rate,
        reachability_delta: proposed.reachability_rate - baseline.reachability_rate,
        success_delta: proposed.success_rate - baseline.success_rate,
        rmsd_delta: proposed.rmsd - baseline.rmsd,
        variance_delta: proposed.total_state_variance - baseline.total_state_variance,
        proposed_safer: proposed.safety_rate > baseline.safety_rate,
        proposed_higher_success: proposed.success_rate > baseline.success_rate,
        proposed_lower_variance: proposed.total_state_variance < baseline.total_state_variance,
        baseline_lower_rmsd: baseline.rmsd < proposed.rmsd,
        baseline_higher_reachability: baseline.reachability_rate > proposed.reachability_rate,
    })
}
