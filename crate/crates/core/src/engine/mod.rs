//! Monte Carlo simulation of random sequential linear trade.
//!
//! Each step draws a trade-compatible price from the price prior, a speed
//! vector from the speed prior, and moves every household along its linear
//! path. A run ends when the allocation is Pareto optimal (to `pareto_tol`) or
//! after `max_steps` trades.

mod ladder;
mod outcome;
mod prior;

pub use ladder::{example3_process, ladder_rate, ladder_value, Example3Distribution, LadderOutcome};
pub use outcome::{Band, Histogram, OutcomeDistribution, RunOutcome};
pub use prior::{draw_price, draw_price_unrestricted, q_density, PriorSpec, QPrior, REJECTION_CAP};

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry;
use crate::prefs::{Bundle, PriceVector};
use crate::rng::CounterRng;
use crate::trade::{advance, is_pareto_optimal, sample_speed, Allocation, Economy, SpeedVector, PARETO_TOL};

pub const DEFAULT_MAX_STEPS: usize = 500;
pub const DEFAULT_BINS: usize = 64;

#[derive(Clone, Debug)]
pub struct SimConfig {
    pub economy: Economy,
    pub initial: Allocation,
    pub prior: PriorSpec,
    pub max_steps: usize,
    pub pareto_tol: f64,
    pub master_seed: u64,
    pub runs: usize,
    pub bins: usize,
}

impl SimConfig {
    pub fn new(economy: Economy, initial: Allocation, prior: PriorSpec) -> Self {
        Self {
            economy,
            initial,
            prior,
            max_steps: DEFAULT_MAX_STEPS,
            pareto_tol: PARETO_TOL,
            master_seed: 0,
            runs: 1,
            bins: DEFAULT_BINS,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_steps < 1 {
            return Err(Error::Config("max_steps must be at least 1".into()));
        }
        if self.runs < 1 {
            return Err(Error::Config("runs must be at least 1".into()));
        }
        if self.bins < 1 {
            return Err(Error::Config("bins must be at least 1".into()));
        }
        if !(self.pareto_tol > 0.0 && self.pareto_tol.is_finite()) {
            return Err(Error::Config(format!("pareto_tol must be positive, got {}", self.pareto_tol)));
        }
        if self.initial.households() != self.economy.len() || self.initial.goods() != self.economy.goods() {
            return Err(Error::Config(format!(
                "initial allocation is {}×{}, economy is {}×{}",
                self.initial.households(),
                self.initial.goods(),
                self.economy.len(),
                self.economy.goods()
            )));
        }
        self.prior.validate()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum StepOutcome {
    Traded {
        allocation: Allocation,
        q: Vec<f64>,
        sigma: SpeedVector,
    },
    ParetoStop,
}

/// One step of the process: stop at a Pareto-optimal state, otherwise draw a
/// price and speeds and trade.
pub fn sntp_step<R: Rng + ?Sized>(
    e: &Economy,
    y: &Allocation,
    prior: &PriorSpec,
    pareto_tol: f64,
    rng: &mut R,
) -> Result<StepOutcome> {
    if is_pareto_optimal(e, y, pareto_tol)? {
        return Ok(StepOutcome::ParetoStop);
    }
    let q = draw_price(e, y, prior, rng)?;
    let p = PriceVector::from_rates(&q)?;
    let sigma = sample_speed(e, y, &p, prior.s_prior, rng)?;
    let allocation = advance(e, y, &p, &sigma)?;
    Ok(StepOutcome::Traded { allocation, q, sigma })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Terminal {
    ParetoReached,
    StepCap,
}

impl Terminal {
    pub fn tag(&self) -> &'static str {
        match self {
            Terminal::ParetoReached => "pareto",
            Terminal::StepCap => "step_cap",
        }
    }
}

#[derive(Clone, Debug)]
pub struct Trajectory {
    pub states: Vec<Allocation>,
    pub prices: Vec<Vec<f64>>,
    pub speeds: Vec<SpeedVector>,
    pub terminal: Terminal,
}

impl Trajectory {
    pub fn steps(&self) -> usize {
        self.prices.len()
    }

    pub fn terminal_state(&self) -> &Allocation {
        self.states.last().expect("a trajectory has an initial state")
    }

    /// State after `t` steps; a finished trajectory stays at its last state.
    pub fn state_at(&self, t: usize) -> &Allocation {
        &self.states[t.min(self.states.len() - 1)]
    }
}

/// Rescales every good so the aggregate matches `target` exactly, removing
/// rounding drift.
fn restore_aggregate(y: Allocation, target: &[f64]) -> Result<Allocation> {
    let agg = y.aggregate();
    let bundles = y
        .bundles()
        .iter()
        .map(|b| Bundle::computed(b.iter().zip(target.iter().zip(&agg)).map(|(x, (t, a))| x * t / a).collect()))
        .collect::<Result<Vec<_>>>()?;
    Allocation::new(bundles)
}

pub fn run_trajectory(cfg: &SimConfig, run_index: u64) -> Result<Trajectory> {
    cfg.validate()?;
    let mut rng = CounterRng::new(cfg.master_seed, run_index);
    let target = cfg.initial.aggregate();
    let mut states = vec![cfg.initial.clone()];
    let mut prices = Vec::new();
    let mut speeds = Vec::new();
    for step in 0..cfg.max_steps {
        rng.set_step(step as u64);
        let y = states.last().expect("nonempty");
        match sntp_step(&cfg.economy, y, &cfg.prior, cfg.pareto_tol, &mut rng)? {
            StepOutcome::ParetoStop => {
                return Ok(Trajectory {
                    states,
                    prices,
                    speeds,
                    terminal: Terminal::ParetoReached,
                })
            }
            StepOutcome::Traded { allocation, q, sigma } => {
                states.push(restore_aggregate(allocation, &target)?);
                prices.push(q);
                speeds.push(sigma);
            }
        }
    }
    let last = states.last().expect("nonempty");
    let terminal = if is_pareto_optimal(&cfg.economy, last, cfg.pareto_tol)? {
        Terminal::ParetoReached
    } else {
        Terminal::StepCap
    };
    Ok(Trajectory {
        states,
        prices,
        speeds,
        terminal,
    })
}

/// Runs `cfg.runs` independent trajectories in parallel and summarizes
/// their end points. Results are assembled in run order, so the output does
/// not depend on the number of threads.
pub fn run_monte_carlo(cfg: &SimConfig) -> Result<OutcomeDistribution> {
    let outcomes = run_outcomes(cfg, |_, _| ())?;
    OutcomeDistribution::from_outcomes(&cfg.economy, outcomes, cfg.bins)
}

/// Like [`run_monte_carlo`] but hands every finished trajectory to `visit`
/// (in arbitrary order) before it is dropped.
pub fn run_outcomes<F>(cfg: &SimConfig, visit: F) -> Result<Vec<RunOutcome>>
where
    F: Fn(u64, &Trajectory) + Sync,
{
    cfg.validate()?;
    let results: Vec<Result<RunOutcome>> = (0..cfg.runs as u64)
        .into_par_iter()
        .map(|run| {
            let traj = run_trajectory(cfg, run)?;
            visit(run, &traj);
            let terminal = traj.terminal_state().clone();
            let rates = geometry::mrs(cfg.economy.utility(0), &terminal.bundles()[0])?;
            Ok(RunOutcome {
                run,
                rates,
                terminal,
                steps: traj.steps(),
                tag: traj.terminal,
            })
        })
        .collect();
    results.into_iter().collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prefs::{Utility, UtilitySpec};
    use crate::trade::{mrs_gap, SpeedPrior};
    use approx::assert_relative_eq;

    fn cfg(q: QPrior, s: SpeedPrior) -> SimConfig {
        let u = UtilitySpec::cobb_douglas_log(vec![0.5, 0.5]).unwrap();
        let mut c = SimConfig::new(
            Economy::from_specs(vec![u.clone(), u]).unwrap(),
            Allocation::from_rows(vec![vec![2.0, 1.0], vec![1.0, 2.0]]).unwrap(),
            PriorSpec::new(q, s).unwrap(),
        );
        c.runs = 200;
        c.master_seed = 42;
        c
    }

    #[test]
    fn pareto_input_stops() {
        let c = cfg(QPrior::UniformArc, SpeedPrior::MaxSpeed);
        let opt = Allocation::from_rows(vec![vec![1.5, 1.5], vec![1.5, 1.5]]).unwrap();
        let mut rng = CounterRng::new(0, 0);
        assert_eq!(
            sntp_step(&c.economy, &opt, &c.prior, PARETO_TOL, &mut rng).unwrap(),
            StepOutcome::ParetoStop
        );
    }

    #[test]
    fn forced_unit_rate_with_max_speed_reaches_equilibrium() {
        let c = cfg(
            QPrior::Tabulated { points: vec![vec![1.0]], weights: vec![1.0] },
            SpeedPrior::MaxSpeed,
        );
        let mut rng = CounterRng::new(0, 0);
        let StepOutcome::Traded { allocation, q, .. } =
            sntp_step(&c.economy, &c.initial, &c.prior, PARETO_TOL, &mut rng).unwrap()
        else {
            panic!("expected a trade");
        };
        assert_eq!(q, vec![1.0]);
        for b in allocation.bundles() {
            assert_relative_eq!(b[0], 1.5, epsilon = 1e-14);
            assert_relative_eq!(b[1], 1.5, epsilon = 1e-14);
        }
    }

    #[test]
    fn trajectories_are_deterministic_and_monotone() {
        let c = cfg(QPrior::UniformArc, SpeedPrior::UniformCube);
        let a = run_trajectory(&c, 17).unwrap();
        let b = run_trajectory(&c, 17).unwrap();
        assert_eq!(a.states, b.states);
        assert_eq!(a.prices, b.prices);
        assert_eq!(a.states[0], c.initial);
        let agg0 = c.initial.aggregate();
        for w in a.states.windows(2) {
            for h in 0..2 {
                let u = c.economy.utility(h);
                assert!(u.utility(&w[1].bundles()[h]).unwrap() >= u.utility(&w[0].bundles()[h]).unwrap() - 1e-12);
            }
            for (x, y) in w[1].aggregate().iter().zip(&agg0) {
                assert!((x - y).abs() <= 1e-8);
            }
        }
        if a.terminal == Terminal::ParetoReached {
            let last = a.terminal_state();
            assert_eq!(a.state_at(a.steps() + 10), last);
        }
    }

    #[test]
    fn max_speed_runs_converge() {
        let c = cfg(QPrior::UniformArc, SpeedPrior::MaxSpeed);
        let mut hit = 0;
        for run in 0..c.runs as u64 {
            let mut short = c.clone();
            short.max_steps = 200;
            let t = run_trajectory(&short, run).unwrap();
            if mrs_gap(&c.economy, t.terminal_state()).unwrap() < 1e-3 {
                hit += 1;
            }
        }
        assert!(hit as f64 >= 0.99 * c.runs as f64);
    }

    #[test]
    fn monte_carlo_is_order_independent() {
        let c = cfg(QPrior::ArctanNormal { center_rate: 1.0, sigma_angle: 0.05 }, SpeedPrior::UniformCube);
        let par = run_monte_carlo(&c).unwrap();
        let serial = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap()
            .install(|| run_monte_carlo(&c).unwrap());
        assert_eq!(par.samples, serial.samples);
        assert!((par.mean - 1.5).abs() < 0.05);
    }

    #[test]
    fn invalid_configs_are_rejected() {
        let mut c = cfg(QPrior::UniformArc, SpeedPrior::MaxSpeed);
        c.max_steps = 0;
        assert!(matches!(run_trajectory(&c, 0), Err(Error::Config(_))));
        let mut c = cfg(QPrior::UniformArc, SpeedPrior::MaxSpeed);
        c.runs = 0;
        assert!(run_monte_carlo(&c).is_err());
    }
}
