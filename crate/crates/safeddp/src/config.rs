//! Human-editable run configuration: one TOML document fully determines a
//! solve and its evaluation, so every artifact is reproducible from its
//! config file. Unknown keys are rejected.

use std::path::Path;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::barrier::{augment, BarrierKind, BarrierSpec, SafeSetFunction};
use crate::cost::QuadraticCost;
use crate::error::{Error, Result};
use crate::models::obstacles::{build_obstacle_course, CourseBounds};
use crate::models::pendulum::{pendulum_model, PendulumParams};
use crate::models::quadrotor::{quadrotor_model, QuadrotorParams};
use crate::models::uncertainty::UncertaintyLevel;
use crate::montecarlo::{Scenario, TrialSetup};
use crate::types::{GameProblem, SolverOptions};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum SystemConfig {
    Pendulum {
        horizon: usize,
        dt: f64,
        velocity_limit: f64,
        length: f64,
        damping: f64,
        mass: f64,
        gravity: f64,
    },
    Quadrotor {
        horizon: usize,
        dt: f64,
        mass: f64,
        inertia: [f64; 3],
        gravity: f64,
        start: [f64; 3],
        target: [f64; 3],
        obstacle_seed: u64,
        obstacle_count: usize,
    },
}

/// Quadratic weights; `s_diag` covers the full augmented state (plant
/// components then one barrier entry).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct CostConfig {
    pub q_dbas: f64,
    /// Uniform running weight on the plant states. Keep this nonzero for
    /// systems whose tracking feedback must reject persistent disturbances;
    /// with terminal-only state cost the gains come out ill-conditioned.
    #[serde(default)]
    pub q_state: f64,
    /// Running weight on the position states (quadrotor only); overrides
    /// `q_state` there. Keeping this lighter than `q_state` keeps the game
    /// value bounded: position error is what the adversary can grow fastest.
    #[serde(default)]
    pub q_position: f64,
    pub r_u: f64,
    pub r_v: f64,
    pub s_diag: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum DisturbanceConfig {
    /// Per-parameter scale factors `1 - x`, `x ~ N(mean, std)` (fractions).
    Parametric { mean_fraction: f64, std_fraction: f64 },
    /// Sinusoidal wind force with fresh random amplitudes each step.
    Wind { sigma: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct ScenarioConfig {
    pub trials: usize,
    pub seed: u64,
    pub reach_threshold: f64,
    pub disturbance: DisturbanceConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct RunConfig {
    pub system: SystemConfig,
    pub barrier: BarrierKind,
    pub cost: CostConfig,
    pub solver: SolverOptions,
    pub scenario: ScenarioConfig,
    pub output_dir: String,
}

/// Everything a config expands into.
pub struct BuiltRun {
    pub problem: GameProblem,
    pub nominal_min_inputs: Vec<DVector<f64>>,
    pub nominal_max_inputs: Vec<DVector<f64>>,
    pub scenario: Scenario,
    pub plant_dim: usize,
}

impl RunConfig {
    pub fn pendulum_default() -> Self {
        RunConfig {
            system: SystemConfig::Pendulum {
                horizon: crate::benchmarks::PENDULUM_HORIZON,
                dt: crate::benchmarks::PENDULUM_DT,
                velocity_limit: crate::benchmarks::PENDULUM_VELOCITY_LIMIT,
                length: 0.75,
                damping: 0.15,
                mass: 1.5,
                gravity: 9.81,
            },
            barrier: BarrierKind::Inverse,
            cost: CostConfig {
                q_dbas: 1000.0,
                q_state: 0.0,
                q_position: 0.0,
                r_u: 0.1,
                r_v: 1.1,
                s_diag: vec![1000.0, 5.0, 500.0],
            },
            solver: SolverOptions::default(),
            scenario: ScenarioConfig {
                trials: 1000,
                seed: 42,
                reach_threshold: crate::benchmarks::PENDULUM_REACH_THRESHOLD,
                disturbance: DisturbanceConfig::Parametric {
                    mean_fraction: 0.10,
                    std_fraction: 0.30,
                },
            },
            output_dir: "out/pendulum".into(),
        }
    }

    pub fn quadrotor_default() -> Self {
        let mut s_diag = vec![1.0; 13];
        for s in s_diag.iter_mut().take(3) {
            *s = 10.0;
        }
        RunConfig {
            system: SystemConfig::Quadrotor {
                horizon: crate::benchmarks::QUADROTOR_HORIZON,
                dt: crate::benchmarks::QUADROTOR_DT,
                mass: 1.0,
                inertia: [0.01, 0.01, 0.02],
                gravity: 9.81,
                start: crate::benchmarks::QUADROTOR_START,
                target: crate::benchmarks::QUADROTOR_TARGET,
                obstacle_seed: 12,
                obstacle_count: 6,
            },
            barrier: BarrierKind::Inverse,
            cost: CostConfig {
                q_dbas: 0.1,
                q_state: 0.01,
                q_position: 0.001,
                r_u: 1e-2,
                r_v: 15e-2,
                s_diag,
            },
            solver: SolverOptions::default(),
            scenario: ScenarioConfig {
                trials: 1000,
                seed: 42,
                reach_threshold: crate::benchmarks::QUADROTOR_REACH_THRESHOLD,
                disturbance: DisturbanceConfig::Wind { sigma: 15.0 },
            },
            output_dir: "out/quadrotor".into(),
        }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| Error::Config(e.to_string()))
    }

    /// Hex SHA-256 of the canonical serialized config; embedded in every
    /// artifact so runs are traceable to their exact inputs.
    pub fn hash(&self) -> Result<String> {
        let toml = self.to_toml()?;
        let mut h = Sha256::new();
        h.update(toml.as_bytes());
        Ok(format!("{:x}", h.finalize()))
    }

    pub fn build(&self) -> Result<BuiltRun> {
        match &self.system {
            SystemConfig::Pendulum {
                horizon,
                dt,
                velocity_limit,
                length,
                damping,
                mass,
                gravity,
            } => {
                if self.cost.s_diag.len() != 3 {
                    return Err(Error::Config(format!(
                        "pendulum s-diag needs 3 entries, got {}",
                        self.cost.s_diag.len()
                    )));
                }
                if !(*velocity_limit > 0.0) {
                    return Err(Error::Config("velocity-limit must be > 0".into()));
                }
                let params = PendulumParams {
                    length: *length,
                    damping: *damping,
                    mass: *mass,
                    gravity: *gravity,
                };
                if !params.is_physical() {
                    return Err(Error::Config("pendulum parameters must be positive".into()));
                }
                let plant = pendulum_model(params, *dt);
                let limit = SafeSetFunction::component_bound(2, 1, *velocity_limit, "angular velocity");
                let spec = BarrierSpec::summed(self.barrier, vec![limit], &DVector::zeros(2));
                let model = augment(Arc::new(plant), vec![spec]);
                let cost = QuadraticCost::new(
                    DMatrix::from_diagonal(&DVector::from_vec(vec![
                        self.cost.q_state,
                        self.cost.q_state,
                        self.cost.q_dbas,
                    ])),
                    DMatrix::from_vec(1, 1, vec![self.cost.r_u]),
                    DMatrix::from_vec(1, 1, vec![self.cost.r_v]),
                    DMatrix::from_diagonal(&DVector::from_vec(self.cost.s_diag.clone())),
                    DVector::zeros(3),
                )
                .map_err(|e| Error::Config(e.to_string()))?;
                let problem = GameProblem::new(
                    model,
                    Arc::new(cost),
                    &DVector::from_vec(vec![std::f64::consts::PI, 0.0]),
                    *horizon,
                    self.solver.clone(),
                )?;
                let (mean, std) = match self.scenario.disturbance {
                    DisturbanceConfig::Parametric {
                        mean_fraction,
                        std_fraction,
                    } => (mean_fraction, std_fraction),
                    DisturbanceConfig::Wind { .. } => {
                        return Err(Error::Config(
                            "wind disturbance does not apply to the pendulum".into(),
                        ))
                    }
                };
                let scenario = Scenario {
                    setup: TrialSetup::PendulumParametric {
                        nominal: params,
                        level: UncertaintyLevel {
                            mean_fraction: mean,
                            std_fraction: std,
                        },
                    },
                    trials: self.scenario.trials,
                    reach_threshold: self.scenario.reach_threshold,
                    seed: self.scenario.seed,
                };
                scenario.validate()?;
                Ok(BuiltRun {
                    problem,
                    nominal_min_inputs: vec![DVector::zeros(1); *horizon],
                    nominal_max_inputs: vec![DVector::zeros(1); *horizon],
                    scenario,
                    plant_dim: 2,
                })
            }
            SystemConfig::Quadrotor {
                horizon,
                dt,
                mass,
                inertia,
                gravity,
                start,
                target,
                obstacle_seed,
                obstacle_count,
            } => {
                if self.cost.s_diag.len() != 13 {
                    return Err(Error::Config(format!(
                        "quadrotor s-diag needs 13 entries, got {}",
                        self.cost.s_diag.len()
                    )));
                }
                let params = QuadrotorParams {
                    mass: *mass,
                    inertia: *inertia,
                    gravity: *gravity,
                };
                let plant = quadrotor_model(params, *dt);
                let course = build_obstacle_course(
                    *obstacle_seed,
                    *obstacle_count,
                    *start,
                    *target,
                    &CourseBounds::default(),
                )?;
                let mut target_state = DVector::zeros(12);
                for i in 0..3 {
                    target_state[i] = target[i];
                }
                let spec =
                    BarrierSpec::summed(self.barrier, course.constraints(12), &target_state);
                let model = augment(Arc::new(plant), vec![spec]);
                let mut q_diag = DVector::from_element(13, self.cost.q_state);
                for i in 0..3 {
                    q_diag[i] = self.cost.q_position;
                }
                q_diag[12] = self.cost.q_dbas;
                let mut aug_target = DVector::zeros(13);
                aug_target.rows_mut(0, 12).copy_from(&target_state);
                let cost = QuadraticCost::new(
                    DMatrix::from_diagonal(&q_diag),
                    DMatrix::identity(4, 4) * self.cost.r_u,
                    DMatrix::identity(3, 3) * self.cost.r_v,
                    DMatrix::from_diagonal(&DVector::from_vec(self.cost.s_diag.clone())),
                    aug_target,
                )
                .map_err(|e| Error::Config(e.to_string()))?;
                let mut start_state = DVector::zeros(12);
                for i in 0..3 {
                    start_state[i] = start[i];
                }
                let problem = GameProblem::new(
                    model,
                    Arc::new(cost),
                    &start_state,
                    *horizon,
                    self.solver.clone(),
                )?;
                let sigma = match self.scenario.disturbance {
                    DisturbanceConfig::Wind { sigma } => sigma,
                    DisturbanceConfig::Parametric { .. } => {
                        return Err(Error::Config(
                            "parametric disturbance does not apply to the quadrotor".into(),
                        ))
                    }
                };
                let scenario = Scenario {
                    setup: TrialSetup::QuadrotorWind {
                        params,
                        sigma,
                        target: *target,
                    },
                    trials: self.scenario.trials,
                    reach_threshold: self.scenario.reach_threshold,
                    seed: self.scenario.seed,
                };
                scenario.validate()?;
                Ok(BuiltRun {
                    problem,
                    nominal_min_inputs: vec![params.hover_input(); *horizon],
                    nominal_max_inputs: vec![DVector::zeros(3); *horizon],
                    scenario,
                    plant_dim: 12,
                })
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip_through_toml() {
        for cfg in [RunConfig::pendulum_default(), RunConfig::quadrotor_default()] {
            let text = cfg.to_toml().unwrap();
            let back = RunConfig::from_toml(&text).unwrap();
            assert_eq!(cfg, back);
            assert_eq!(cfg.hash().unwrap(), back.hash().unwrap());
        }
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let mut text = RunConfig::pendulum_default().to_toml().unwrap();
        text.push_str("\nnot-a-real-key = 3\n");
        assert!(matches!(RunConfig::from_toml(&text), Err(Error::Config(_))));
    }

    #[test]
    fn invalid_threshold_is_a_config_error() {
        let mut cfg = RunConfig::pendulum_default();
        cfg.solver.convergence_threshold = -1.0;
        assert!(cfg.build().is_err());
    }

    #[test]
    fn mismatched_disturbance_is_rejected() {
        let mut cfg = RunConfig::pendulum_default();
        cfg.scenario.disturbance = DisturbanceConfig::Wind { sigma: 15.0 };
        assert!(matches!(cfg.build(), Err(Error::Config(_))));
    }

    #[test]
    fn defaults_build() {
        let built = RunConfig::pendulum_default().build().unwrap();
        assert_eq!(built.problem.horizon, 150);
        assert_eq!(built.plant_dim, 2);
        let built = RunConfig::quadrotor_default().build().unwrap();
        assert_eq!(built.problem.horizon, 500);
        assert_eq!(built.nominal_min_inputs[0][0], 9.81);
    }
}
