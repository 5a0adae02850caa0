//! Outcome distributions of random trade in the symmetric 2x2 economy under
//! three price and speed priors.

use sntp::engine::{run_monte_carlo, PriorSpec, QPrior, SimConfig};
use sntp::{Allocation, Economy, SpeedPrior, UtilitySpec};

pub fn run(runs: usize) -> sntp::Result<()> {
    let cd = UtilitySpec::cobb_douglas_log(vec![0.5, 0.5])?;
    let e = Economy::from_specs(vec![cd.clone(), cd])?;
    let y = Allocation::from_rows(vec![vec![2.0, 1.0], vec![1.0, 2.0]])?;
    let priors = [
        ("sticky", QPrior::ArctanNormal { center_rate: 1.0, sigma_angle: 0.05 }, SpeedPrior::UniformCube),
        ("uniform", QPrior::UniformArc, SpeedPrior::UniformCube),
        ("max speed", QPrior::UniformArc, SpeedPrior::MaxSpeed),
    ];
    for (name, q, s) in priors {
        let mut cfg = SimConfig::new(e.clone(), y.clone(), PriorSpec::new(q, s)?);
        cfg.runs = runs;
        cfg.master_seed = 1;
        let d = run_monte_carlo(&cfg)?;
        println!(
            "{name:>9}: mean {:.4} std {:.4} 90% band {:.4} mode bin {} mean bin {}",
            d.mean,
            d.std,
            d.band90().width(),
            d.mode_bin,
            d.mean_bin
        );
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> sntp::Result<()> {
    run(10_000)
}
