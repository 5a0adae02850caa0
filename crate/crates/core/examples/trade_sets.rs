//! Which prices admit trade at an allocation, the box that contains them, and
//! the admissible relative speeds.

use sntp::engine::{draw_price, PriorSpec, QPrior};
use sntp::rng::CounterRng;
use sntp::trade::{
    advance, has_trade, msr_extremes, mrs_gap, sample_speed, speed_contains, trade_directions, trade_interval_2x2,
};
use sntp::{Allocation, Economy, PriceVector, SpeedPrior, UtilitySpec};

pub fn run() -> sntp::Result<()> {
    let cd = UtilitySpec::cobb_douglas_log(vec![0.5, 0.5])?;
    let e = Economy::from_specs(vec![cd.clone(), cd])?;
    let y = Allocation::from_rows(vec![vec![2.0, 1.0], vec![1.0, 2.0]])?;
    println!("2x2 trade interval {:?}, mrs gap {:.3}", trade_interval_2x2(&e, &y)?, mrs_gap(&e, &y)?);
    for q in [0.4, 0.5, 1.0, 1.9, 2.1] {
        println!("  q = {q}: trade {}", has_trade(&e, &y, &PriceVector::from_rates(&[q])?)?);
    }

    let p = PriceVector::from_rates(&[1.0])?;
    let mut rng = CounterRng::new(3, 0);
    for prior in [SpeedPrior::UniformCube, SpeedPrior::MaxSpeed] {
        let sigma = sample_speed(&e, &y, &p, prior, &mut rng)?;
        let next = advance(&e, &y, &p, &sigma)?;
        println!("{prior:?}: sigma {:?} -> {:?}", sigma.as_slice(), next.bundles());
    }

    let e3 = Economy::from_specs(vec![
        UtilitySpec::ces(vec![0.2, 0.5, 0.3], 0.5)?,
        UtilitySpec::ces(vec![0.5, 0.2, 0.3], 0.5)?,
        UtilitySpec::cobb_douglas_log(vec![0.3, 0.3, 0.4])?,
    ])?;
    let y3 = Allocation::from_rows(vec![vec![1.0, 2.0, 1.0], vec![2.0, 1.0, 1.0], vec![0.5, 0.5, 2.0]])?;
    let b = msr_extremes(&e3, &y3)?;
    println!("3x3 box lower rates:\n{}upper rates:\n{}", b.lower_rates(), b.upper_rates());
    println!("rate bounds of the box: {:?}", b.rate_bounds());
    println!("trade at (1,1,1): {}", has_trade(&e3, &y3, &PriceVector::from_rates(&[1.0, 1.0])?)?);
    let prior = PriorSpec::new(QPrior::UniformArc, SpeedPrior::UniformCube)?;
    let q = draw_price(&e3, &y3, &prior, &mut rng)?;
    let p3 = PriceVector::from_rates(&q)?;
    println!("drawn trade-compatible rates {q:?}");
    for (h, d) in trade_directions(&e3, &y3, &p3)?.iter().enumerate() {
        println!("  direction h{}: {d:?}", h + 1);
    }
    let sigma = sample_speed(&e3, &y3, &p3, SpeedPrior::UniformCube, &mut rng)?;
    println!(
        "hit-and-run speed {:?}, admissible {}",
        sigma.as_slice(),
        speed_contains(&e3, &y3, &p3, &sigma)?
    );
    Ok(())
}

#[allow(dead_code)]
fn main() -> sntp::Result<()> {
    run()
}
