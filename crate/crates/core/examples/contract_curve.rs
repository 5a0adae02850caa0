//! Pareto-optimal allocations: the contract curve of a 2x2 box, points of the
//! Pareto set by rate and utility levels, and the Walrasian equilibrium.

use sntp::geometry::{contract_curve_2x2, sample_pareto, walras_equilibrium_2x2};
use sntp::trade::mrs_gap;
use sntp::{Allocation, Bundle, Economy, UtilitySpec};

pub fn run() -> sntp::Result<()> {
    let specs = vec![
        UtilitySpec::cobb_douglas_log(vec![0.5, 0.5])?,
        UtilitySpec::ces(vec![0.4, 0.6], 0.5)?,
    ];
    let e = Economy::from_specs(specs.clone())?;
    let curve = contract_curve_2x2(&specs, &Bundle::new(vec![3.0, 3.0])?, 9)?;
    for y in &curve {
        println!("{:?}  gap {:.1e}", y.bundles()[0].as_slice(), mrs_gap(&e, y)?);
    }

    let cd = UtilitySpec::cobb_douglas_log(vec![0.5, 0.5])?;
    let pt = sample_pareto(&[cd.clone(), cd.clone()], &[1.0], &[1.5f64.ln() * 2.0, 1.5f64.ln() * 2.0])?;
    println!("pareto point at q = 1: {:?}", pt.allocation.bundles());

    let endow = Allocation::from_rows(vec![vec![2.0, 1.0], vec![1.0, 2.0]])?;
    let (q, y) = walras_equilibrium_2x2(&[cd.clone(), cd], &endow)?;
    println!("equilibrium rate {q:.10}, allocation {:?}", y.bundles());
    let (q, y) = walras_equilibrium_2x2(&specs, &endow)?;
    println!("mixed economy: rate {q:.6}, allocation {:?}", y.bundles());
    Ok(())
}

#[allow(dead_code)]
fn main() -> sntp::Result<()> {
    run()
}
