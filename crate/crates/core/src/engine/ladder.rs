//! A discrete process with an explicit outcome distribution.
//!
//! Two households with identical symmetric Cobb-Douglas preferences start at
//! `((2,1),(1,2))`. At step `t` a fair coin is tossed: on heads they trade at
//! the equilibrium rate 1 with full speed, which ends the process; on tails
//! they trade at the rate `1 − 2^−(t+1)` with household 1 moving all the way
//! to its demand. The process stops at step `j` with probability `2^−j`, and
//! each stopping time leads to a different point of the contract curve.

use rand::Rng;

use crate::error::{Error, Result};
use crate::prefs::{PriceVector, UtilitySpec};
use crate::rng::CounterRng;
use crate::trade::{advance, trade_directions, Allocation, Economy, SpeedVector};

const MAX_ROUNDS: usize = 60;

/// Price of good 1 offered at step `t` after tails.
pub fn ladder_rate(t: usize) -> f64 {
    1.0 - 0.5f64.powi(t as i32 + 1)
}

/// Exact common coordinate of household 1's final bundle when the process
/// stops at step `j ≥ 1`.
pub fn ladder_value(j: usize) -> f64 {
    let head: f64 = (1..j).map(|i| 1.0 + 1.0 / (2f64.powi(i as i32 + 2) - 4.0)).product();
    head * (1.0 + 1.0 / (2f64.powi(j as i32 + 1) - 2.0))
}

#[derive(Clone, Debug, PartialEq)]
pub struct LadderOutcome {
    pub j: usize,
    pub count: usize,
    pub mass: f64,
    pub exact_mass: f64,
    /// Simulated final holding of good 1 (equal to that of good 2).
    pub value: f64,
    pub exact_value: f64,
}

#[derive(Clone, Debug)]
pub struct Example3Distribution {
    pub runs: usize,
    pub terminal: Vec<Allocation>,
    pub stops: Vec<usize>,
    pub outcomes: Vec<LadderOutcome>,
}

fn economy() -> Result<Economy> {
    let u = UtilitySpec::cobb_douglas_log(vec![0.5, 0.5])?;
    Economy::from_specs(vec![u.clone(), u])
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn run_once(e: &Economy, rng: &mut CounterRng) -> Result<(usize, Allocation)> {
    let mut y = Allocation::from_rows(vec![vec![2.0, 1.0], vec![1.0, 2.0]])?;
    for t in 1..=MAX_ROUNDS {
        rng.set_step(t as u64);
        let heads = !rng.random::<bool>() || t == MAX_ROUNDS;
        if heads {
            let p = PriceVector::new(vec![1.0, 1.0])?;
            let y = advance(e, &y, &p, &SpeedVector::new(vec![1.0, 1.0])?)?;
            return Ok((t, y));
        }
        let p = PriceVector::new(vec![ladder_rate(t), 1.0])?;
        let d = trade_directions(e, &y, &p)?;
        let g = norm(&d[0]) / norm(&d[1]);
        if !(g > 0.0 && g <= 1.0) {
            return Err(Error::Sampling(format!("household 2 cannot absorb the trade at step {t}")));
        }
        y = advance(e, &y, &p, &SpeedVector::new(vec![1.0, g])?)?;
    }
    unreachable!("the last round always stops")
}

/// Simulates `runs` independent copies and tabulates the stopping step.
pub fn example3_process(master_seed: u64, runs: usize) -> Result<Example3Distribution> {
    if runs < 1 {
        return Err(Error::Config("runs must be at least 1".into()));
    }
    let e = economy()?;
    let mut terminal = Vec::with_capacity(runs);
    let mut stops = Vec::with_capacity(runs);
    for run in 0..runs {
        let mut rng = CounterRng::new(master_seed, run as u64);
        let (j, y) = run_once(&e, &mut rng)?;
        stops.push(j);
        terminal.push(y);
    }
    let jmax = stops.iter().copied().max().unwrap_or(1);
    let outcomes = (1..=jmax)
        .filter_map(|j| {
            let idx: Vec<usize> = (0..runs).filter(|&r| stops[r] == j).collect();
            let first = *idx.first()?;
            Some(LadderOutcome {
                j,
                count: idx.len(),
                mass: idx.len() as f64 / runs as f64,
                exact_mass: 0.5f64.powi(j as i32),
                value: terminal[first].bundles()[0][0],
                exact_value: ladder_value(j),
            })
        })
        .collect();
    Ok(Example3Distribution {
        runs,
        terminal,
        stops,
        outcomes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn exact_values() {
        assert_relative_eq!(ladder_value(1), 1.5, epsilon = 1e-15);
        assert_relative_eq!(ladder_value(2), 35.0 / 24.0, epsilon = 1e-15);
        assert_relative_eq!(ladder_rate(1), 0.75);
    }

    #[test]
    fn simulated_values_match_the_product_formula() {
        let d = example3_process(3, 4000).unwrap();
        for o in &d.outcomes {
            assert_relative_eq!(o.value, o.exact_value, max_relative = 1e-12);
            let b = &d.terminal[d.stops.iter().position(|&s| s == o.j).unwrap()].bundles()[0];
            assert_relative_eq!(b[0], b[1], max_relative = 1e-12);
        }
        assert!((d.outcomes[0].mass - 0.5).abs() < 0.03);
    }

    #[test]
    fn single_run() {
        let d = example3_process(1, 1).unwrap();
        assert_eq!(d.outcomes.len(), 1);
        assert_eq!(d.outcomes[0].mass, 1.0);
    }
}
