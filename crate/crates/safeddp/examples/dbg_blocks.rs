use safeddp::config::RunConfig;
use safeddp::solver::{backward_pass, solve, solve_baseline};

fn main() {
    let cfg = RunConfig::pendulum_default();
    let built = cfg.build().unwrap();
    let robust = solve(&built.problem).unwrap();
    let base = solve_baseline(&built.problem).unwrap();
    let bp_r = backward_pass(&built.problem, &robust.trajectory, 1e-6).unwrap();
    let mut p2 = built.problem.clone();
    p2.options.max_player_enabled = false;
    let bp_b = backward_pass(&p2, &base.trajectory, 1e-6).unwrap();
    for k in (0..150).step_by(15) {
        let gr = &bp_r.policy.gains[k];
        let gb = &bp_b.policy.gains[k];
        println!(
            "k={k:3} robust K=[{:+7.2} {:+6.2}] Vthth={:9.2} | base K=[{:+7.2} {:+6.2}] Vthth={:9.2} | vbar={:+.3}",
            gr.ck_u[(0, 0)],
            gr.ck_u[(0, 1)],
            bp_r.values[k].vxx[(1, 1)],
            gb.ck_u[(0, 0)],
            gb.ck_u[(0, 1)],
            bp_b.values[k].vxx[(1, 1)],
            robust.trajectory.max_inputs[k][0],
        );
    }
}
