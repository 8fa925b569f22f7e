//! Solves the seeded D=15, I=8, K=4 linear instance and prints solver
//! statistics. Usage: `scale [seed] [time_limit]`.

use ordce::milp::solve_bnb;
use ordce::ordce::build_milo;

fn main() {
    let mut args = std::env::args().skip(1);
    let seed: u64 = args.next().and_then(|s| s.parse().ok()).unwrap_or(1);
    let time_limit: f64 = args.next().and_then(|s| s.parse().ok()).unwrap_or(300.0);
    let p = ordce::synth::linear_problem(seed, 15, 8, 4).expect("instance builds");
    let milo = build_milo(&p).expect("model builds");
    println!(
        "rows {} cols {} integer {}",
        milo.model.num_constraints(),
        milo.model.num_vars(),
        milo.model.num_integer()
    );
    let mut params = p.solver.clone();
    params.time_limit = time_limit;
    let r = solve_bnb(&milo.model, &params).expect("solve runs");
    println!(
        "{:?} objective {} bound {} root {} nodes {} lp iterations {} time {:.2}s",
        r.status, r.objective, r.best_bound, r.root_bound, r.nodes, r.lp_iterations, r.wall_time
    );
}
