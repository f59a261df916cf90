//! Min-max differential dynamic programming on the safety-embedded model.
//!
//! Each iteration runs a second-order backward pass over the nominal
//! trajectory, producing saddle-point feedforward/feedback gains for both
//! players, then a two-stage backtracking line search: the maximizing
//! player commits a step first, the minimizing player responds. Failed
//! searches raise the regularization of the control Hessian blocks and
//! retry.

mod hamiltonian;

pub use hamiltonian::{
    compute_gains, compute_hamiltonian, regularize, Gains, HamiltonianBlocks,
};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::{total_cost, GameProblem, Trajectory};

/// Time-varying two-player affine policy around a nominal trajectory.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GamePolicy {
    pub gains: Vec<Gains>,
}

/// Quadratic local value expansion at one timestep.
#[derive(Debug, Clone)]
pub struct ValueExpansion {
    pub v: f64,
    pub vx: DVector<f64>,
    pub vxx: DMatrix<f64>,
}

/// Per-step scalars of the quadratic model of the cost change under
/// feedforward steps `alpha_u`, `alpha_v`.
#[derive(Debug, Clone, Copy, Default)]
pub struct ExpectedChangeCoeffs {
    pub ku_hu: f64,
    pub kv_hv: f64,
    pub ku_huv_kv: f64,
    pub ku_huu_ku: f64,
    pub kv_hvv_kv: f64,
}

/// Everything one backward pass produces.
pub struct BackwardPassOutput {
    pub policy: GamePolicy,
    pub values: Vec<ValueExpansion>,
    pub coeffs: Vec<ExpectedChangeCoeffs>,
}

/// Predicted total cost change for feedforward step sizes
/// `(alpha_u, alpha_v)` under the backward pass's quadratic model.
pub fn expected_cost_change(coeffs: &[ExpectedChangeCoeffs], alpha_u: f64, alpha_v: f64) -> f64 {
    coeffs
        .iter()
        .map(|c| {
            alpha_u * c.ku_hu
                + alpha_v * c.kv_hv
                + alpha_u * alpha_v * c.ku_huv_kv
                + 0.5 * (alpha_u * alpha_u * c.ku_huu_ku + alpha_v * alpha_v * c.kv_hvv_kv)
        })
        .sum()
}

/// One sweep from the terminal cost back to `k = 0`.
pub fn backward_pass(
    problem: &GameProblem,
    nominal: &Trajectory,
    reg_strength: f64,
) -> Result<BackwardPassOutput> {
    let opts = &problem.options;
    let model = &problem.model;
    let n = nominal.horizon();
    let nx = problem.initial_state.len();

    let term = problem.cost.terminal(&nominal.states[n])?;
    let mut values = vec![
        ValueExpansion {
            v: 0.0,
            vx: DVector::zeros(nx),
            vxx: DMatrix::zeros(nx, nx),
        };
        n + 1
    ];
    values[n] = ValueExpansion {
        v: term.value,
        vx: term.phix,
        vxx: term.phixx,
    };
    let mut gains: Vec<Option<Gains>> = vec![None; n];
    let mut coeffs = vec![ExpectedChangeCoeffs::default(); n];

    for k in (0..n).rev() {
        let d = model.derivatives(
            &nominal.states[k],
            &nominal.min_inputs[k],
            &nominal.max_inputs[k],
            opts.second_order_dynamics,
        )?;
        let l = problem
            .cost
            .running(&nominal.states[k], &nominal.min_inputs[k], &nominal.max_inputs[k])?;
        let next = &values[k + 1];
        let blocks = compute_hamiltonian(&d, &l, &next.vx, &next.vxx).map_err(|e| match e {
            Error::BackwardPass { reason, .. } => Error::BackwardPass { step: k, reason },
            other => other,
        })?;
        let blocks = regularize(blocks, opts.regularization, reg_strength);
        let g = compute_gains(&blocks, opts.max_player_enabled, k)?;

        coeffs[k] = ExpectedChangeCoeffs {
            ku_hu: g.k_u.dot(&blocks.hu),
            kv_hv: g.k_v.dot(&blocks.hv),
            ku_huv_kv: g.k_u.dot(&(&blocks.huv * &g.k_v)),
            ku_huu_ku: g.k_u.dot(&(&blocks.huu * &g.k_u)),
            kv_hvv_kv: g.k_v.dot(&(&blocks.hvv * &g.k_v)),
        };

        let hux = blocks.hxu.transpose();
        let hvx = blocks.hxv.transpose();
        let huu_ku = &blocks.huu * &g.k_u;
        let hvv_kv = &blocks.hvv * &g.k_v;
        let huv_kv = &blocks.huv * &g.k_v;
        let hvu_ku = blocks.huv.transpose() * &g.k_u;

        let v = l.value + next.v
            + coeffs[k].ku_hu
            + coeffs[k].kv_hv
            + coeffs[k].ku_huv_kv
            + 0.5 * (coeffs[k].ku_huu_ku + coeffs[k].kv_hvv_kv);
        let vx = &blocks.hx
            + g.ck_u.transpose() * (&blocks.hu + &huu_ku + &huv_kv)
            + g.ck_v.transpose() * (&blocks.hv + &hvv_kv + &hvu_ku)
            + &blocks.hxu * &g.k_u
            + &blocks.hxv * &g.k_v;
        let mut vxx = &blocks.hxx
            + g.ck_u.transpose() * &blocks.huu * &g.ck_u
            + g.ck_v.transpose() * &blocks.hvv * &g.ck_v
            + &blocks.hxu * &g.ck_u
            + g.ck_u.transpose() * &hux
            + &blocks.hxv * &g.ck_v
            + g.ck_v.transpose() * &hvx
            + g.ck_u.transpose() * &blocks.huv * &g.ck_v
            + g.ck_v.transpose() * blocks.huv.transpose() * &g.ck_u;
        let vxx_t = vxx.transpose();
        vxx += vxx_t;
        vxx *= 0.5;

        if !v.is_finite() || !vx.iter().all(|c| c.is_finite()) || !vxx.iter().all(|c| c.is_finite())
        {
            return Err(Error::BackwardPass {
                step: k,
                reason: "non-finite value expansion".into(),
            });
        }
        values[k] = ValueExpansion { v, vx, vxx };
        gains[k] = Some(g);
    }

    Ok(BackwardPassOutput {
        policy: GamePolicy {
            gains: gains.into_iter().map(Option::unwrap).collect(),
        },
        values,
        coeffs,
    })
}

/// A finite, strictly safe trial trajectory and its total cost.
pub struct Rollout {
    pub trajectory: Trajectory,
    pub cost: f64,
}

/// Roll the policy out from the problem's initial state with the given
/// feedforward step sizes. Returns `None` when the rollout leaves the safe
/// set or otherwise produces non-finite numbers.
pub fn forward_pass(
    problem: &GameProblem,
    nominal: &Trajectory,
    policy: &GamePolicy,
    alpha_u: f64,
    alpha_v: f64,
) -> Option<Rollout> {
    let model = &problem.model;
    let n = nominal.horizon();
    let mut states = Vec::with_capacity(n + 1);
    let mut min_inputs = Vec::with_capacity(n);
    let mut max_inputs = Vec::with_capacity(n);
    let mut x = problem.initial_state.clone();
    states.push(x.clone());
    for k in 0..n {
        let g = &policy.gains[k];
        let dx = &x - &nominal.states[k];
        let u = &nominal.min_inputs[k] + alpha_u * &g.k_u + &g.ck_u * &dx;
        let v = &nominal.max_inputs[k] + alpha_v * &g.k_v + &g.ck_v * &dx;
        if !u.iter().all(|c| c.is_finite()) || !v.iter().all(|c| c.is_finite()) {
            return None;
        }
        let next = crate::dynamics::Plant::step(model, &x, &u, &v);
        if !next.iter().all(|c| c.is_finite()) {
            return None;
        }
        min_inputs.push(u);
        max_inputs.push(v);
        states.push(next.clone());
        x = next;
    }
    let trajectory = Trajectory {
        states,
        min_inputs,
        max_inputs,
        dt: nominal.dt,
    };
    let cost = total_cost(&trajectory, problem.cost.as_ref()).ok()?;
    if !cost.is_finite() {
        return None;
    }
    Some(Rollout { trajectory, cost })
}

/// What one two-stage line search did.
pub struct LineSearchOutcome {
    pub rollout: Option<Rollout>,
    pub alpha_u: f64,
    pub alpha_v: f64,
    /// Accepted min-stage cost-change ratio (positive on acceptance).
    pub z_min: Option<f64>,
    /// Accepted max-stage cost-change ratio (negative on acceptance).
    pub z_max: Option<f64>,
    pub trials: usize,
}

const FEEDFORWARD_EPS: f64 = 1e-10;

fn feedforward_norm(policy: &GamePolicy, max_player: bool) -> f64 {
    policy
        .gains
        .iter()
        .map(|g| {
            let ff = if max_player { &g.k_v } else { &g.k_u };
            ff.iter().fold(0.0f64, |m, c| m.max(c.abs()))
        })
        .fold(0.0, f64::max)
}

/// Two-stage backtracking search.
///
/// Stage one steps the maximizing player's feedforward (the minimizing
/// player follows through feedback only) and accepts when the realized
/// cost change divided by the full predicted change `DeltaJ(1, alpha_v)`
/// is negative: the adversary raised the cost against a model that
/// predicts a joint decrease. Stage two holds the accepted `alpha_v` and
/// backtracks the minimizing player's feedforward, accepting when the
/// realized change matches the sign of its own predicted marginal change
/// (ratio positive). Stage-one exhaustion falls back to `alpha_v = 0`;
/// stage-two exhaustion fails the iteration.
pub fn stackelberg_line_search(
    problem: &GameProblem,
    nominal: &Trajectory,
    nominal_cost: f64,
    bp: &BackwardPassOutput,
) -> LineSearchOutcome {
    let opts = &problem.options;
    let shrink = opts.line_search_shrink;
    let min_step = opts.line_search_min_step;
    let z_floor = opts.ratio_threshold.unwrap_or(0.0);
    let tiny = 1e-12 * (1.0 + nominal_cost.abs());
    let mut trials = 0usize;

    // --- stage one: adversary step ---
    let mut alpha_v = 0.0;
    let mut z_max = None;
    let mut stage_cost = nominal_cost;
    let mut stage_rollout: Option<Rollout> = None;
    let try_v = opts.max_player_enabled && feedforward_norm(&bp.policy, true) > FEEDFORWARD_EPS;
    if try_v {
        let mut a = 1.0;
        while a >= min_step {
            trials += 1;
            if let Some(roll) = forward_pass(problem, nominal, &bp.policy, 0.0, a) {
                let predicted = expected_cost_change(&bp.coeffs, 1.0, a);
                if predicted < -tiny {
                    let z = (roll.cost - nominal_cost) / predicted;
                    if z < -z_floor {
                        alpha_v = a;
                        z_max = Some(z);
                        stage_cost = roll.cost;
                        stage_rollout = Some(roll);
                        break;
                    }
                }
            }
            a *= shrink;
        }
    }

    // --- stage two: minimizing response ---
    if feedforward_norm(&bp.policy, false) <= FEEDFORWARD_EPS {
        // Nothing left to do for the min player; keep the stage-one result
        // (or, with alpha_v = 0, an exact reproduction of the nominal).
        let rollout = match stage_rollout {
            Some(r) => Some(r),
            None => {
                trials += 1;
                forward_pass(problem, nominal, &bp.policy, 0.0, alpha_v)
            }
        };
        return LineSearchOutcome {
            rollout,
            alpha_u: 0.0,
            alpha_v,
            z_min: None,
            z_max,
            trials,
        };
    }

    let mut a = 1.0;
    while a >= min_step {
        trials += 1;
        if let Some(roll) = forward_pass(problem, nominal, &bp.policy, a, alpha_v) {
            let predicted =
                expected_cost_change(&bp.coeffs, a, alpha_v) - expected_cost_change(&bp.coeffs, 0.0, alpha_v);
            let actual = roll.cost - stage_cost;
            if predicted < -tiny {
                let z = actual / predicted;
                if z > z_floor {
                    return LineSearchOutcome {
                        rollout: Some(roll),
                        alpha_u: a,
                        alpha_v,
                        z_min: Some(z),
                        z_max,
                        trials,
                    };
                }
            } else if predicted.abs() <= tiny && actual <= tiny {
                // Degenerate direction with no predicted or realized change:
                // accept without recording a ratio.
                return LineSearchOutcome {
                    rollout: Some(roll),
                    alpha_u: a,
                    alpha_v,
                    z_min: None,
                    z_max,
                    trials,
                };
            }
        }
        a *= shrink;
    }

    LineSearchOutcome {
        rollout: None,
        alpha_u: 0.0,
        alpha_v,
        z_min: None,
        z_max,
        trials,
    }
}

/// One row of the solver's iteration log.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    pub cost: f64,
    pub delta_cost: f64,
    pub alpha_u: f64,
    pub alpha_v: f64,
    pub z_min: Option<f64>,
    pub z_max: Option<f64>,
    pub regularization: f64,
    pub line_search_trials: usize,
    pub accepted: bool,
}

/// Converged (or best-effort) saddle-point solution.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Solution {
    pub trajectory: Trajectory,
    pub policy: GamePolicy,
    /// Local value (cost-to-go model) at each timestep of the final pass.
    pub value_sequence: Vec<f64>,
    pub cost: f64,
    pub iterations: usize,
    pub converged: bool,
    pub log: Vec<IterationRecord>,
}

/// Roll out fixed input sequences from the problem's initial state.
pub fn initial_rollout(
    problem: &GameProblem,
    min_inputs: &[DVector<f64>],
    max_inputs: &[DVector<f64>],
) -> Result<Trajectory> {
    let model = &problem.model;
    if min_inputs.len() != problem.horizon || max_inputs.len() != problem.horizon {
        return Err(Error::DimensionMismatch {
            what: "nominal input sequences",
            expected: problem.horizon,
            got: min_inputs.len().min(max_inputs.len()),
            index: 0,
        });
    }
    let mut states = Vec::with_capacity(problem.horizon + 1);
    let mut x = problem.initial_state.clone();
    states.push(x.clone());
    for k in 0..problem.horizon {
        x = crate::dynamics::step(model, &x, &min_inputs[k], &max_inputs[k])?;
        states.push(x.clone());
    }
    Ok(Trajectory {
        states,
        min_inputs: min_inputs.to_vec(),
        max_inputs: max_inputs.to_vec(),
        dt: crate::dynamics::Plant::dt(model),
    })
}

/// Solve from zero nominal inputs.
pub fn solve(problem: &GameProblem) -> Result<Solution> {
    let mu = crate::dynamics::Plant::min_input_dim(&problem.model);
    let mv = crate::dynamics::Plant::max_input_dim(&problem.model);
    let u0 = vec![DVector::zeros(mu); problem.horizon];
    let v0 = vec![DVector::zeros(mv); problem.horizon];
    solve_from(problem, &u0, &v0)
}

/// Solve from caller-supplied nominal input sequences. The rollout of the
/// nominal inputs must stay strictly inside the safe set.
pub fn solve_from(
    problem: &GameProblem,
    min_inputs: &[DVector<f64>],
    max_inputs: &[DVector<f64>],
) -> Result<Solution> {
    problem.options.validate()?;
    let mut nominal = initial_rollout(problem, min_inputs, max_inputs)?;
    let mut cost = total_cost(&nominal, problem.cost.as_ref())?;
    if !cost.is_finite() {
        return Err(Error::NonFinite {
            what: "nominal trajectory cost",
            index: 0,
        });
    }

    let opts = &problem.options;
    let mut reg = opts.reg_initial;
    let mut log = Vec::new();
    let mut converged = false;
    let mut last_bp: Option<BackwardPassOutput> = None;
    let mut iterations = 0;

    for iteration in 1..=opts.max_iterations {
        iterations = iteration;
        let bp = match backward_pass(problem, &nominal, reg) {
            Ok(bp) => bp,
            // a singular or numerically exploding pass is recoverable:
            // stronger regularization tames the gains that caused it
            Err(Error::SingularBlock { .. } | Error::BackwardPass { .. })
                if reg * 10.0 <= opts.reg_max =>
            {
                log.push(IterationRecord {
                    iteration,
                    cost,
                    delta_cost: 0.0,
                    alpha_u: 0.0,
                    alpha_v: 0.0,
                    z_min: None,
                    z_max: None,
                    regularization: reg,
                    line_search_trials: 0,
                    accepted: false,
                });
                reg *= 10.0;
                continue;
            }
            Err(e) => return Err(e),
        };

        let ls = stackelberg_line_search(problem, &nominal, cost, &bp);
        match ls.rollout {
            Some(roll) => {
                let delta = roll.cost - cost;
                log.push(IterationRecord {
                    iteration,
                    cost: roll.cost,
                    delta_cost: delta,
                    alpha_u: ls.alpha_u,
                    alpha_v: ls.alpha_v,
                    z_min: ls.z_min,
                    z_max: ls.z_max,
                    regularization: reg,
                    line_search_trials: ls.trials,
                    accepted: true,
                });
                nominal = roll.trajectory;
                cost = roll.cost;
                reg = (reg * 0.5).max(opts.reg_initial);
                last_bp = Some(bp);
                if delta.abs() < opts.convergence_threshold {
                    converged = true;
                    break;
                }
            }
            None => {
                log.push(IterationRecord {
                    iteration,
                    cost,
                    delta_cost: 0.0,
                    alpha_u: 0.0,
                    alpha_v: ls.alpha_v,
                    z_min: None,
                    z_max: ls.z_max,
                    regularization: reg,
                    line_search_trials: ls.trials,
                    accepted: false,
                });
                last_bp = Some(bp);
                reg *= 10.0;
                if reg > opts.reg_max {
                    break;
                }
            }
        }
    }

    // Final backward pass around the accepted trajectory so the returned
    // policy is consistent with it. Two deliberate differences from the
    // in-loop passes:
    //   * base regularization, not the possibly inflated line-search value —
    //     late-iteration failures can ratchet `reg` so high that the clamp
    //     would wipe out the feedback gains entirely;
    //   * dynamics tensors dropped — the returned policy is the local LQ
    //     tracking policy about the accepted trajectory. The tensors of a
    //     barrier row (curvature growing like 1/h^3 near a constraint) are
    //     what makes optimization steps honest, but contracted with the
    //     value gradient they can leave the recursion indefinite and turn
    //     the gains from tracking into stepping, which destabilizes the
    //     policy when it is replayed on a perturbed system.
    let mut policy_problem = problem.clone();
    policy_problem.options.second_order_dynamics = false;
    let mut final_reg = opts.reg_initial;
    let bp = loop {
        match backward_pass(&policy_problem, &nominal, final_reg) {
            Ok(bp) => break bp,
            Err(Error::SingularBlock { .. } | Error::BackwardPass { .. })
                if final_reg * 10.0 <= opts.reg_max =>
            {
                final_reg *= 10.0;
            }
            Err(_) => {
                break last_bp.ok_or(Error::BackwardPass {
                    step: 0,
                    reason: "no backward pass succeeded".into(),
                })?
            }
        }
    };
    Ok(Solution {
        trajectory: nominal,
        value_sequence: bp.values.iter().map(|v| v.v).collect(),
        policy: bp.policy,
        cost,
        iterations,
        converged,
        log,
    })
}

/// Solve with the maximizing player frozen: single-player barrier-state
/// DDP through the identical code path.
pub fn solve_baseline(problem: &GameProblem) -> Result<Solution> {
    let mut p = problem.clone();
    p.options.max_player_enabled = false;
    solve(&p)
}

/// Baseline solve from caller-supplied nominal inputs.
pub fn solve_baseline_from(
    problem: &GameProblem,
    min_inputs: &[DVector<f64>],
    max_inputs: &[DVector<f64>],
) -> Result<Solution> {
    let mut p = problem.clone();
    p.options.max_player_enabled = false;
    solve_from(&p, min_inputs, max_inputs)
}
