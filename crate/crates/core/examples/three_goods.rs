//! Random trade among three households and three goods, with speeds drawn by
//! hit-and-run; reports where the runs end on the Pareto set.

use sntp::engine::{run_trajectory, PriorSpec, QPrior, SimConfig};
use sntp::trade::mrs_gap;
use sntp::{Allocation, Economy, SpeedPrior, UtilitySpec};

pub fn run(runs: u64) -> sntp::Result<()> {
    let e = Economy::from_specs(vec![
        UtilitySpec::ces(vec![0.2, 0.5, 0.3], 0.5)?,
        UtilitySpec::ces(vec![0.5, 0.2, 0.3], 0.5)?,
        UtilitySpec::cobb_douglas_log(vec![0.3, 0.3, 0.4])?,
    ])?;
    let y = Allocation::from_rows(vec![vec![1.0, 2.0, 1.0], vec![2.0, 1.0, 1.0], vec![0.5, 0.5, 2.0]])?;
    let mut cfg = SimConfig::new(e.clone(), y, PriorSpec::new(QPrior::UniformArc, SpeedPrior::MaxSpeed)?);
    cfg.max_steps = 200;
    cfg.pareto_tol = 1e-6;
    cfg.master_seed = 5;
    for run in 0..runs {
        let t = run_trajectory(&cfg, run)?;
        println!(
            "run {run}: {} steps, {}, gap {:.1e}, h1 ends at {:?}",
            t.steps(),
            t.terminal.tag(),
            mrs_gap(&e, t.terminal_state())?,
            t.terminal_state().bundles()[0].as_slice()
        );
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> sntp::Result<()> {
    run(5)
}
