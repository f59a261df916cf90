use nalgebra::DVector;
use rand::SeedableRng;
use safeddp::barrier::BarrierEval;
use safeddp::config::RunConfig;
use safeddp::models::pendulum::PendulumPlant;
use safeddp::models::uncertainty::{sample_perturbed_pendulum, UncertaintyLevel};
use safeddp::solver::{solve, solve_baseline, Solution};

fn trial_rng(seed: u64, trial: usize) -> rand_chacha::ChaCha8Rng {
    let mut z = seed ^ (trial as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^= z >> 31;
    rand_chacha::ChaCha8Rng::seed_from_u64(z)
}

#[derive(Clone, Copy)]
enum Proto {
    Zero,
    FfOnly,
    Full,
}

fn run(
    problem: &safeddp::GameProblem,
    sol: &Solution,
    level: UncertaintyLevel,
    proto: Proto,
    trials: usize,
    seed: u64,
) -> (f64, f64, f64, f64, f64, usize) {
    let design = &problem.model;
    let x0 = design.project_plant(&problem.initial_state);
    let dt = safeddp::dynamics::Plant::dt(design);
    let n = sol.trajectory.horizon();
    let nominal = safeddp::models::pendulum::PendulumParams::nominal();
    let (mut safe_ct, mut reach_ct, mut succ_ct, mut diverged) = (0, 0, 0, 0);
    let mut finals = Vec::new();
    let mut hist: Vec<Vec<[f64; 2]>> = Vec::new();
    for t in 0..trials {
        let mut rng = trial_rng(seed, t);
        let (params, _) = sample_perturbed_pendulum(&nominal, level, &mut rng);
        let plant = PendulumPlant::new(params, dt);
        let mut x = x0.clone();
        let mut states = vec![[x[0], x[1]]];
        let mut ok = true;
        let mut safe = true;
        for k in 0..n {
            let xhat = design.augment_state(&x, BarrierEval::Raw);
            if !xhat.iter().all(|c| c.is_finite()) || x.norm() > 1e4 {
                ok = false;
                break;
            }
            let dx = &xhat - &sol.trajectory.states[k];
            let u = &sol.trajectory.min_inputs[k] + &sol.policy.gains[k].ck_u * &dx;
            let v = match proto {
                Proto::Zero => DVector::zeros(1),
                Proto::FfOnly => sol.trajectory.max_inputs[k].clone(),
                Proto::Full => {
                    &sol.trajectory.max_inputs[k] + &sol.policy.gains[k].ck_v * &dx
                }
            };
            let next = safeddp::dynamics::Plant::step(&plant, &x, &u, &v);
            if !next.iter().all(|c| c.is_finite()) {
                ok = false;
                break;
            }
            if next[1].abs() >= 5.0 {
                safe = false;
            }
            states.push([next[0], next[1]]);
            x = next;
        }
        if !ok {
            diverged += 1;
            continue;
        }
        if safe {
            safe_ct += 1;
        }
        let d = x[0].abs();
        if d < 0.3 {
            reach_ct += 1;
            if safe {
                succ_ct += 1;
            }
        }
        finals.push(d);
        hist.push(states);
    }
    let m = hist.len() as f64;
    let rmsd = (finals.iter().map(|d| d * d).sum::<f64>() / m).sqrt();
    let mut var = 0.0;
    for k in 0..=n {
        for c in 0..2 {
            let mean = hist.iter().map(|h| h[k][c]).sum::<f64>() / m;
            var += hist.iter().map(|h| (h[k][c] - mean).powi(2)).sum::<f64>() / m;
        }
    }
    let pct = |c: usize| 100.0 * c as f64 / trials as f64;
    (pct(safe_ct), pct(reach_ct), pct(succ_ct), rmsd, var, diverged)
}

fn main() {
    let cfg = RunConfig::pendulum_default();
    let built = cfg.build().unwrap();
    let robust = solve(&built.problem).unwrap();
    let base = solve_baseline(&built.problem).unwrap();
    for (lname, level) in [
        ("moderate", UncertaintyLevel::moderate()),
        ("high", UncertaintyLevel::high()),
    ] {
        println!("== {lname} ==");
        for (pname, proto) in [
            ("v=0   ", Proto::Zero),
            ("v=ff  ", Proto::FfOnly),
            ("v=full", Proto::Full),
        ] {
            let r = run(&built.problem, &robust, level, proto, 1000, 42);
            let b = run(&built.problem, &base, level, proto, 1000, 42);
            println!(
                "{pname} robust: safe={:5.1} reach={:5.1} succ={:5.1} rmsd={:7.3} var={:10.1} div={}",
                r.0, r.1, r.2, r.3, r.4, r.5
            );
            println!(
                "{pname} base  : safe={:5.1} reach={:5.1} succ={:5.1} rmsd={:7.3} var={:10.1} div={}",
                b.0, b.1, b.2, b.3, b.4, b.5
            );
        }
    }
}
