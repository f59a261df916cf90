//! On-disk run artifacts.
//!
//! Every file written here embeds the SHA-256 hash of the config that
//! produced it (and the scenario seed where one applies), so results can
//! always be traced back to their exact inputs and stale artifacts are
//! rejected instead of silently reused.

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use nalgebra::DVector;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::montecarlo::{run_trial, Comparison, Metrics, Scenario};
use crate::solver::Solution;
use crate::types::GameProblem;

/// File layout inside a run's output directory.
pub fn solution_path(dir: &Path) -> PathBuf {
    dir.join("solution.json")
}
pub fn trajectory_path(dir: &Path) -> PathBuf {
    dir.join("trajectory.csv")
}
pub fn iterations_path(dir: &Path) -> PathBuf {
    dir.join("iterations.csv")
}
pub fn summary_path(dir: &Path) -> PathBuf {
    dir.join("summary.json")
}
pub fn metrics_path(dir: &Path, label: &str) -> PathBuf {
    dir.join(format!("metrics_{label}.json"))
}
pub fn trials_path(dir: &Path, label: &str) -> PathBuf {
    dir.join(format!("trials_{label}.csv"))
}
pub fn comparison_path(dir: &Path) -> PathBuf {
    dir.join("comparison.json")
}
pub fn plot_data_path(dir: &Path, label: &str) -> PathBuf {
    dir.join(format!("envelope_{label}.csv"))
}

/// A solved policy bundled with the identity of the config that produced it.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolutionArtifact {
    pub config_hash: String,
    pub seed: u64,
    pub solution: Solution,
}

/// Compact human-readable solve summary.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunSummary {
    pub config_hash: String,
    pub seed: u64,
    pub converged: bool,
    pub iterations: usize,
    pub cost: f64,
    pub horizon: usize,
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, bytes)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

fn to_json<T: Serialize>(value: &T) -> Result<Vec<u8>> {
    let mut bytes =
        serde_json::to_vec_pretty(value).map_err(|e| Error::Config(e.to_string()))?;
    bytes.push(b'\n');
    Ok(bytes)
}

/// Write `solution.json`, `trajectory.csv`, `iterations.csv`, and
/// `summary.json` for a finished solve.
pub fn write_solution_artifacts(
    dir: &Path,
    config: &RunConfig,
    solution: &Solution,
) -> Result<()> {
    let hash = config.hash()?;
    let seed = config.scenario.seed;
    fs::create_dir_all(dir)?;

    let artifact = SolutionArtifact {
        config_hash: hash.clone(),
        seed,
        solution: solution.clone(),
    };
    write_atomic(&solution_path(dir), &to_json(&artifact)?)?;

    let summary = RunSummary {
        config_hash: hash.clone(),
        seed,
        converged: solution.converged,
        iterations: solution.iterations,
        cost: solution.cost,
        horizon: solution.trajectory.horizon(),
    };
    write_atomic(&summary_path(dir), &to_json(&summary)?)?;

    let mut csv = Vec::new();
    writeln!(csv, "# config_hash={hash} seed={seed}")?;
    let traj = &solution.trajectory;
    let n = traj.horizon();
    let dim = traj.states[0].len();
    let mu = traj.min_inputs[0].len();
    let mv = traj.max_inputs[0].len();
    let mut header = vec!["step".to_string(), "time".to_string()];
    header.extend((0..dim).map(|i| format!("x{i}")));
    header.extend((0..mu).map(|i| format!("u{i}")));
    header.extend((0..mv).map(|i| format!("v{i}")));
    writeln!(csv, "{}", header.join(","))?;
    for k in 0..=n {
        let mut row = vec![k.to_string(), format!("{}", k as f64 * traj.dt)];
        row.extend(traj.states[k].iter().map(|c| format!("{c}")));
        if k < n {
            row.extend(traj.min_inputs[k].iter().map(|c| format!("{c}")));
            row.extend(traj.max_inputs[k].iter().map(|c| format!("{c}")));
        } else {
            row.extend(std::iter::repeat("".to_string()).take(mu + mv));
        }
        writeln!(csv, "{}", row.join(","))?;
    }
    write_atomic(&trajectory_path(dir), &csv)?;

    let mut csv = Vec::new();
    writeln!(csv, "# config_hash={hash} seed={seed}")?;
    writeln!(
        csv,
        "iteration,cost,delta_cost,alpha_u,alpha_v,z_min,z_max,regularization,line_search_trials,accepted"
    )?;
    for r in &solution.log {
        let fmt_opt = |o: Option<f64>| o.map(|z| format!("{z}")).unwrap_or_default();
        writeln!(
            csv,
            "{},{},{},{},{},{},{},{},{},{}",
            r.iteration,
            r.cost,
            r.delta_cost,
            r.alpha_u,
            r.alpha_v,
            fmt_opt(r.z_min),
            fmt_opt(r.z_max),
            r.regularization,
            r.line_search_trials,
            r.accepted
        )?;
    }
    write_atomic(&iterations_path(dir), &csv)?;
    Ok(())
}

/// Load a previously saved solution, rejecting it if it was produced by a
/// different config.
pub fn load_solution(dir: &Path, config: &RunConfig) -> Result<Solution> {
    let path = solution_path(dir);
    let text = fs::read_to_string(&path)?;
    let artifact: SolutionArtifact =
        serde_json::from_str(&text).map_err(|e| Error::Config(e.to_string()))?;
    let hash = config.hash()?;
    if artifact.config_hash != hash {
        return Err(Error::Config(format!(
            "saved solution at {} was produced by config {}, expected {}; re-solve first",
            path.display(),
            &artifact.config_hash[..12],
            &hash[..12],
        )));
    }
    Ok(artifact.solution)
}

/// Metrics bundled with provenance, as serialized to `metrics_<label>.json`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MetricsArtifact {
    pub config_hash: String,
    pub seed: u64,
    pub label: String,
    pub metrics: Metrics,
}

/// Write `metrics_<label>.json` and `trials_<label>.csv`.
pub fn write_metrics_artifacts(
    dir: &Path,
    config: &RunConfig,
    label: &str,
    metrics: &Metrics,
) -> Result<()> {
    let hash = config.hash()?;
    let seed = metrics.scenario.seed;
    let artifact = MetricsArtifact {
        config_hash: hash.clone(),
        seed,
        label: label.to_string(),
        metrics: metrics.clone(),
    };
    write_atomic(&metrics_path(dir, label), &to_json(&artifact)?)?;

    let mut csv = Vec::new();
    writeln!(csv, "# config_hash={hash} seed={seed}")?;
    writeln!(
        csv,
        "trial,safe,reached,success,finite,terminal_distance,violation_step,violation_constraint"
    )?;
    for r in &metrics.records {
        writeln!(
            csv,
            "{},{},{},{},{},{},{},{}",
            r.trial,
            r.safe,
            r.reached,
            r.success,
            r.finite,
            r.terminal_distance
                .map(|d| format!("{d}"))
                .unwrap_or_default(),
            r.violation.map(|(k, _)| k.to_string()).unwrap_or_default(),
            r.violation.map(|(_, i)| i.to_string()).unwrap_or_default(),
        )?;
    }
    write_atomic(&trials_path(dir, label), &csv)?;
    Ok(())
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ComparisonArtifact {
    pub config_hash: String,
    pub seed: u64,
    pub comparison: Comparison,
}

pub fn write_comparison_artifact(
    dir: &Path,
    config: &RunConfig,
    comparison: &Comparison,
) -> Result<()> {
    let artifact = ComparisonArtifact {
        config_hash: config.hash()?,
        seed: config.scenario.seed,
        comparison: comparison.clone(),
    };
    write_atomic(&comparison_path(dir), &to_json(&artifact)?)
}

/// Per-timestep batch statistics of the true plant state across trials:
/// mean and the empirical 2.5% / 97.5% quantiles per component.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeStep {
    pub step: usize,
    pub time: f64,
    pub mean: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Envelope {
    pub seed: u64,
    pub trials_used: usize,
    pub steps: Vec<EnvelopeStep>,
}

impl Envelope {
    /// Summed quantile-band width over every component and timestep; a
    /// scalar measure of how widely the closed-loop batch spreads.
    pub fn total_spread(&self) -> f64 {
        self.steps
            .iter()
            .map(|s| {
                s.upper
                    .iter()
                    .zip(&s.lower)
                    .map(|(hi, lo)| hi - lo)
                    .sum::<f64>()
            })
            .sum()
    }

    /// Spread restricted to the first `dims` state components (e.g. the
    /// position block of a vehicle state).
    pub fn spread_over(&self, dims: usize) -> f64 {
        self.steps
            .iter()
            .map(|s| {
                s.upper
                    .iter()
                    .zip(&s.lower)
                    .take(dims)
                    .map(|(hi, lo)| hi - lo)
                    .sum::<f64>()
            })
            .sum()
    }
}

/// Linear-interpolation empirical quantile of an ascending-sorted slice.
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    debug_assert!(!sorted.is_empty());
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    sorted[lo] + frac * (sorted[hi] - sorted[lo])
}

/// Re-simulate every trial of a scenario (bit-identical to `evaluate`,
/// same per-trial streams) and reduce the true-state histories to a
/// per-timestep mean and 95% quantile band. Non-finite trials are dropped.
pub fn compute_envelope(
    problem: &GameProblem,
    solution: &Solution,
    scenario: &Scenario,
) -> Result<Envelope> {
    scenario.validate()?;
    let results: Vec<(bool, Vec<DVector<f64>>)> = (0..scenario.trials)
        .into_par_iter()
        .map(|i| {
            let (record, states) = run_trial(problem, solution, scenario, i);
            (record.finite, states)
        })
        .collect();
    let histories: Vec<&Vec<DVector<f64>>> = results
        .iter()
        .filter(|(finite, _)| *finite)
        .map(|(_, h)| h)
        .collect();
    if histories.is_empty() {
        return Err(Error::ScenarioMismatch(
            "every trial diverged; no envelope to export".into(),
        ));
    }
    let n_steps = histories[0].len();
    let dim = histories[0][0].len();
    let dt = solution.trajectory.dt;
    let mut steps = Vec::with_capacity(n_steps);
    let mut column = vec![0.0; histories.len()];
    for k in 0..n_steps {
        let mut mean = Vec::with_capacity(dim);
        let mut lower = Vec::with_capacity(dim);
        let mut upper = Vec::with_capacity(dim);
        for c in 0..dim {
            for (j, h) in histories.iter().enumerate() {
                column[j] = h[k][c];
            }
            mean.push(column.iter().sum::<f64>() / column.len() as f64);
            column.sort_by(|a, b| a.total_cmp(b));
            lower.push(quantile(&column, 0.025));
            upper.push(quantile(&column, 0.975));
        }
        steps.push(EnvelopeStep {
            step: k,
            time: k as f64 * dt,
            mean,
            lower,
            upper,
        });
    }
    Ok(Envelope {
        seed: scenario.seed,
        trials_used: histories.len(),
        steps,
    })
}

/// Write `envelope_<label>.csv` in long format: one row per
/// (timestep, component).
pub fn write_plot_data(
    dir: &Path,
    config: &RunConfig,
    label: &str,
    envelope: &Envelope,
) -> Result<()> {
    let hash = config.hash()?;
    let mut csv = Vec::new();
    writeln!(csv, "# config_hash={hash} seed={}", envelope.seed)?;
    writeln!(csv, "step,time,component,mean,lower,upper")?;
    for s in &envelope.steps {
        for c in 0..s.mean.len() {
            writeln!(
                csv,
                "{},{},{},{},{},{}",
                s.step, s.time, c, s.mean[c], s.lower[c], s.upper[c]
            )?;
        }
    }
    write_atomic(&plot_data_path(dir, label), &csv)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::solve;

    fn small_pendulum() -> RunConfig {
        let mut cfg = RunConfig::pendulum_default();
        if let crate::config::SystemConfig::Pendulum { horizon, .. } = &mut cfg.system {
            *horizon = 40;
        }
        cfg.scenario.trials = 6;
        cfg
    }

    #[test]
    fn quantile_by_hand() {
        let xs = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(quantile(&xs, 0.0), 1.0);
        assert_eq!(quantile(&xs, 1.0), 4.0);
        assert_eq!(quantile(&xs, 0.5), 2.5);
        assert_eq!(quantile(&[7.0], 0.3), 7.0);
    }

    #[test]
    fn solution_round_trip_and_hash_guard() {
        let cfg = small_pendulum();
        let built = cfg.build().unwrap();
        let sol = solve(&built.problem).unwrap();
        let dir = std::env::temp_dir().join(format!("safeddp-artifacts-{}", std::process::id()));
        write_solution_artifacts(&dir, &cfg, &sol).unwrap();

        let back = load_solution(&dir, &cfg).unwrap();
        assert_eq!(back.trajectory, sol.trajectory);
        assert_eq!(back.cost, sol.cost);

        let mut other = cfg.clone();
        other.scenario.seed += 1;
        assert!(matches!(load_solution(&dir, &other), Err(Error::Config(_))));

        let csv = std::fs::read_to_string(trajectory_path(&dir)).unwrap();
        assert!(csv.starts_with(&format!("# config_hash={}", cfg.hash().unwrap())));
        std::fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn envelope_is_deterministic_and_ordered() {
        let cfg = small_pendulum();
        let built = cfg.build().unwrap();
        let sol = solve(&built.problem).unwrap();
        let a = compute_envelope(&built.problem, &sol, &built.scenario).unwrap();
        let b = compute_envelope(&built.problem, &sol, &built.scenario).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.steps.len(), built.problem.horizon + 1);
        for s in &a.steps {
            for c in 0..s.mean.len() {
                assert!(s.lower[c] <= s.mean[c] + 1e-12);
                assert!(s.mean[c] <= s.upper[c] + 1e-12);
            }
        }
        assert!(a.total_spread() >= a.spread_over(1));
    }
}
