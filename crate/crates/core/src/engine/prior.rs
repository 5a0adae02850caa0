//! Price and speed priors, and the conditional price draw.
//!
//! Rates `q > 0` are parameterized by the angle `θ = arctan q ∈ (0, π/2)`.
//! A prior restricted to the trade-compatible rates is sampled by drawing
//! from the prior on the smallest available superset (the exact box interval
//! when there are two goods, the whole arc otherwise) and rejecting draws
//! that admit no trade.

use std::f64::consts::FRAC_PI_2;

use rand::Rng;
use rand_distr::Exp;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::prefs::PriceVector;
use crate::trade::{box_contains, has_trade, msr_extremes, Allocation, Economy, SpeedPrior};

pub const REJECTION_CAP: usize = 100_000;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum QPrior {
    /// Normal in the angle, centred on `arctan(center_rate)`.
    ArctanNormal { center_rate: f64, sigma_angle: f64 },
    /// Uniform in the angle.
    UniformArc,
    /// Finitely many rate vectors with the given weights.
    Tabulated { points: Vec<Vec<f64>>, weights: Vec<f64> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PriorSpec {
    pub q_prior: QPrior,
    pub s_prior: SpeedPrior,
}

impl PriorSpec {
    pub fn new(q_prior: QPrior, s_prior: SpeedPrior) -> Result<Self> {
        let p = Self { q_prior, s_prior };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        match &self.q_prior {
            QPrior::ArctanNormal { center_rate, sigma_angle } => {
                if !(center_rate.is_finite() && *center_rate > 0.0) {
                    return Err(Error::Config(format!("center_rate must be positive, got {center_rate}")));
                }
                if !(sigma_angle.is_finite() && *sigma_angle > 0.0) {
                    return Err(Error::Config(format!("sigma_angle must be positive, got {sigma_angle}")));
                }
            }
            QPrior::UniformArc => {}
            QPrior::Tabulated { points, weights } => {
                if points.is_empty() || points.len() != weights.len() {
                    return Err(Error::Config(
                        "tabulated prior needs one weight per point and at least one point".into(),
                    ));
                }
                if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) || !weights.iter().any(|&w| w > 0.0) {
                    return Err(Error::Config("tabulated weights must be nonnegative and not all zero".into()));
                }
                let d = points[0].len();
                if d == 0 || points.iter().any(|q| q.len() != d || q.iter().any(|x| !(x.is_finite() && *x > 0.0))) {
                    return Err(Error::Config("tabulated points must be positive vectors of equal length".into()));
                }
            }
        }
        Ok(())
    }
}

/// Unnormalized prior density at the rate vector `q` (a product over
/// coordinates when there are several).
pub fn q_density(prior: &QPrior, q: &[f64]) -> f64 {
    match prior {
        QPrior::ArctanNormal { center_rate, sigma_angle } => {
            let c = center_rate.atan();
            q.iter()
                .map(|x| (-(x.atan() - c).powi(2) / (2.0 * sigma_angle * sigma_angle)).exp() / (1.0 + x * x))
                .product()
        }
        QPrior::UniformArc => q.iter().map(|x| 1.0 / (1.0 + x * x)).product(),
        QPrior::Tabulated { points, weights } => points
            .iter()
            .zip(weights)
            .filter(|(pt, _)| pt.as_slice() == q)
            .map(|(_, w)| *w)
            .sum(),
    }
}

/// Standard normal truncated to `[a, b]`.
fn truncated_standard_normal<R: Rng + ?Sized>(a: f64, b: f64, rng: &mut R) -> f64 {
    // Work in the lower tail, where the CDF keeps its relative precision.
    if a > 0.0 {
        return -truncated_standard_normal(-b, -a, rng);
    }
    let n = Normal::standard();
    let (fa, fb) = (n.cdf(a), n.cdf(b));
    if fb - fa > 1e-300 && fb > 1e-290 {
        let u: f64 = rng.random();
        return n.inverse_cdf(fa + u * (fb - fa)).clamp(a, b);
    }
    // Both endpoints deep in the tail: exponential proposal on [-b, -a].
    let (lo, hi) = (-b, -a);
    let exp = Exp::new(lo).expect("positive rate");
    loop {
        let z = lo + rng.sample(exp);
        if z <= hi && rng.random::<f64>() <= (-(z - lo).powi(2) / 2.0).exp() {
            return -z;
        }
    }
}

/// An angle in `[lo, hi] ⊂ [0, π/2]` drawn from the prior restricted there.
fn draw_angle<R: Rng + ?Sized>(prior: &QPrior, lo: f64, hi: f64, rng: &mut R) -> f64 {
    match prior {
        QPrior::UniformArc => lo + rng.random::<f64>() * (hi - lo),
        QPrior::ArctanNormal { center_rate, sigma_angle } => {
            let mu = center_rate.atan();
            let z = truncated_standard_normal((lo - mu) / sigma_angle, (hi - mu) / sigma_angle, rng);
            (mu + sigma_angle * z).clamp(lo, hi)
        }
        QPrior::Tabulated { .. } => unreachable!("tabulated priors have no angle parameterization"),
    }
}

fn positive_rate(theta: f64) -> Option<f64> {
    let q = theta.tan();
    (q.is_finite() && q > 0.0).then_some(q)
}

fn draw_atom<R: Rng + ?Sized>(atoms: &[(&Vec<f64>, f64)], rng: &mut R) -> Vec<f64> {
    let total: f64 = atoms.iter().map(|(_, w)| w).sum();
    let mut u = rng.random::<f64>() * total;
    for (pt, w) in atoms {
        if u < *w {
            return pt.to_vec();
        }
        u -= w;
    }
    atoms.last().map(|(pt, _)| pt.to_vec()).unwrap_or_default()
}

/// Draws a trade-compatible rate vector from `prior` conditioned on trade
/// being possible at `y`.
///
/// Each coordinate is drawn by inverse-CDF sampling on the angle, restricted
/// to the box's bounding rectangle when one is available (two or three
/// goods) and to the whole arc otherwise; draws outside the box are
/// rejected. Either way the draw is kept only if trade is possible.
pub fn draw_price<R: Rng + ?Sized>(e: &Economy, y: &Allocation, prior: &PriorSpec, rng: &mut R) -> Result<Vec<f64>> {
    let boxset = msr_extremes(e, y)?;
    let l = e.goods();
    if let QPrior::Tabulated { points, weights } = &prior.q_prior {
        if points[0].len() + 1 != l {
            return Err(Error::Config(format!(
                "tabulated points have {} coordinates, expected {}",
                points[0].len(),
                l - 1
            )));
        }
        let mut atoms = Vec::new();
        for (pt, &w) in points.iter().zip(weights) {
            if w > 0.0 && box_contains(&boxset, pt)? && has_trade(e, y, &PriceVector::from_rates(pt)?)? {
                atoms.push((pt, w));
            }
        }
        if atoms.is_empty() {
            return Err(Error::RejectionCap {
                attempts: points.len(),
                context: "no tabulated rate admits trade at this allocation".into(),
            });
        }
        return Ok(draw_atom(&atoms, rng));
    }

    let arcs: Vec<(f64, f64)> = match boxset.rate_bounds() {
        Some(bounds) => bounds.iter().map(|&(a, b)| (a.atan(), b.atan())).collect(),
        None => vec![(0.0, FRAC_PI_2); l - 1],
    };
    if arcs.iter().any(|&(lo, hi)| !(lo < hi)) {
        return Err(Error::RejectionCap {
            attempts: 0,
            context: "the box is empty or flat; the allocation is Pareto optimal".into(),
        });
    }
    for _ in 0..REJECTION_CAP {
        let q = arcs
            .iter()
            .map(|&(lo, hi)| positive_rate(draw_angle(&prior.q_prior, lo, hi, rng)))
            .collect::<Option<Vec<_>>>();
        let Some(q) = q else { continue };
        if l > 2 && !box_contains(&boxset, &q)? {
            continue;
        }
        if has_trade(e, y, &PriceVector::from_rates(&q)?)? {
            return Ok(q);
        }
    }
    Err(Error::RejectionCap {
        attempts: REJECTION_CAP,
        context: format!("price draw at allocation {:?}", y.bundles()),
    })
}

/// Draws from the prior over the whole arc and keeps the first draw that
/// admits trade, without using the box. Slow; it exists as an independent
/// reference for the law of [`draw_price`].
pub fn draw_price_unrestricted<R: Rng + ?Sized>(
    e: &Economy,
    y: &Allocation,
    prior: &PriorSpec,
    rng: &mut R,
) -> Result<Vec<f64>> {
    if matches!(prior.q_prior, QPrior::Tabulated { .. }) {
        return draw_price(e, y, prior, rng);
    }
    for _ in 0..REJECTION_CAP {
        let q = (0..e.goods() - 1)
            .map(|_| positive_rate(draw_angle(&prior.q_prior, 0.0, FRAC_PI_2, rng)))
            .collect::<Option<Vec<_>>>();
        let Some(q) = q else { continue };
        if has_trade(e, y, &PriceVector::from_rates(&q)?)? {
            return Ok(q);
        }
    }
    Err(Error::RejectionCap {
        attempts: REJECTION_CAP,
        context: "unrestricted price draw".into(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prefs::UtilitySpec;
    use approx::assert_relative_eq;
    use rand::SeedableRng;

    fn cd2() -> Economy {
        let u = UtilitySpec::cobb_douglas_log(vec![0.5, 0.5]).unwrap();
        Economy::from_specs(vec![u.clone(), u]).unwrap()
    }

    fn y0() -> Allocation {
        Allocation::from_rows(vec![vec![2.0, 1.0], vec![1.0, 2.0]]).unwrap()
    }

    fn prior(q: QPrior) -> PriorSpec {
        PriorSpec::new(q, SpeedPrior::UniformCube).unwrap()
    }

    #[test]
    fn densities() {
        let an = QPrior::ArctanNormal { center_rate: 1.0, sigma_angle: 0.1 };
        assert_relative_eq!(q_density(&an, &[1.0]), 0.5);
        assert_relative_eq!(q_density(&QPrior::UniformArc, &[1.0]), 0.5);
        let wide = QPrior::ArctanNormal { center_rate: 1.0, sigma_angle: 1e3 };
        let ratios: Vec<f64> = [0.6, 1.0, 1.8]
            .iter()
            .map(|&q| q_density(&wide, &[q]) / q_density(&QPrior::UniformArc, &[q]))
            .collect();
        for r in &ratios {
            assert_relative_eq!(*r, ratios[0], max_relative = 1e-6);
        }
    }

    #[test]
    fn validation() {
        assert!(PriorSpec::new(QPrior::ArctanNormal { center_rate: 1.0, sigma_angle: 0.0 }, SpeedPrior::MaxSpeed).is_err());
        assert!(PriorSpec::new(QPrior::ArctanNormal { center_rate: -1.0, sigma_angle: 0.1 }, SpeedPrior::MaxSpeed).is_err());
        assert!(PriorSpec::new(
            QPrior::Tabulated { points: vec![vec![1.0]], weights: vec![0.0] },
            SpeedPrior::MaxSpeed
        )
        .is_err());
    }

    #[test]
    fn uniform_arc_matches_the_closed_form_cdf() {
        let mut rng = rand::rngs::StdRng::seed_from_u64(11);
        let n = 10_000;
        let mut qs: Vec<f64> = (0..n)
            .map(|_| draw_price(&cd2(), &y0(), &prior(QPrior::UniformArc), &mut rng).unwrap()[0])
            .collect();
        qs.sort_by(f64::total_cmp);
        let (a, b) = (0.5f64.atan(), 2f64.atan());
        let ks = qs
            .iter()
            .enumerate()
            .map(|(i, q)| {
                let f = (q.atan() - a) / (b - a);
                (f - i as f64 / n as f64).abs().max((f - (i + 1) as f64 / n as f64).abs())
            })
            .fold(0.0, f64::max);
        assert!(ks < 0.02, "KS distance {ks}");
    }

    #[test]
    fn sticky_prior_concentrates() {
        let mut rng = rand::rngs::StdRng::seed_from_u64(5);
        let s = 0.05;
        let p = prior(QPrior::ArctanNormal { center_rate: 1.0, sigma_angle: s });
        let n = 10_000;
        let qs: Vec<f64> = (0..n).map(|_| draw_price(&cd2(), &y0(), &p, &mut rng).unwrap()[0]).collect();
        let c = std::f64::consts::FRAC_PI_4;
        let four_sigma = qs.iter().filter(|q| (q.atan() - c).abs() < 4.0 * s).count();
        assert!(four_sigma as f64 >= 0.99 * n as f64);
        // (0.8, 1.25) is only about ±2.2σ in angle; compare with the exact mass.
        let z = Normal::standard();
        let (a, b) = ((0.8f64.atan() - c) / s, (1.25f64.atan() - c) / s);
        let (ta, tb) = ((0.5f64.atan() - c) / s, (2f64.atan() - c) / s);
        let exact = (z.cdf(b) - z.cdf(a)) / (z.cdf(tb) - z.cdf(ta));
        let inside = qs.iter().filter(|&&q| q > 0.8 && q < 1.25).count() as f64 / n as f64;
        assert!((inside - exact).abs() < 0.005, "{inside} vs {exact}");
    }

    #[test]
    fn far_tail_truncation_stays_in_range() {
        let mut rng = rand::rngs::StdRng::seed_from_u64(2);
        for _ in 0..1000 {
            let z = truncated_standard_normal(40.0, 41.0, &mut rng);
            assert!((40.0..=41.0).contains(&z));
            let z = truncated_standard_normal(-41.0, -40.0, &mut rng);
            assert!((-41.0..=-40.0).contains(&z));
        }
    }

    #[test]
    fn tabulated_prior_is_respected() {
        let mut rng = rand::rngs::StdRng::seed_from_u64(1);
        let p = prior(QPrior::Tabulated { points: vec![vec![1.0], vec![3.0]], weights: vec![1.0, 5.0] });
        for _ in 0..20 {
            assert_eq!(draw_price(&cd2(), &y0(), &p, &mut rng).unwrap(), vec![1.0]);
        }
        let p = prior(QPrior::Tabulated { points: vec![vec![3.0]], weights: vec![1.0] });
        assert!(matches!(draw_price(&cd2(), &y0(), &p, &mut rng), Err(Error::RejectionCap { .. })));
    }

    #[test]
    fn three_goods_draws_admit_trade() {
        let e = Economy::from_specs(vec![
            UtilitySpec::ces(vec![0.2, 0.5, 0.3], 0.5).unwrap(),
            UtilitySpec::ces(vec![0.5, 0.2, 0.3], 0.5).unwrap(),
            UtilitySpec::cobb_douglas_log(vec![0.3, 0.3, 0.4]).unwrap(),
        ])
        .unwrap();
        let y = Allocation::from_rows(vec![vec![1.0, 2.0, 1.0], vec![2.0, 1.0, 1.0], vec![0.5, 0.5, 2.0]]).unwrap();
        let mut rng = rand::rngs::StdRng::seed_from_u64(9);
        let b = msr_extremes(&e, &y).unwrap();
        for _ in 0..100 {
            let q = draw_price(&e, &y, &prior(QPrior::UniformArc), &mut rng).unwrap();
            assert!(has_trade(&e, &y, &PriceVector::from_rates(&q).unwrap()).unwrap());
            assert!(box_contains(&b, &q).unwrap());
        }
    }

    #[test]
    fn three_goods_law_matches_the_unrestricted_sampler() {
        let e = Economy::from_specs(vec![
            UtilitySpec::ces(vec![0.2, 0.5, 0.3], 0.5).unwrap(),
            UtilitySpec::ces(vec![0.5, 0.2, 0.3], 0.5).unwrap(),
            UtilitySpec::cobb_douglas_log(vec![0.3, 0.3, 0.4]).unwrap(),
        ])
        .unwrap();
        let y = Allocation::from_rows(vec![vec![1.0, 2.0, 1.0], vec![2.0, 1.0, 1.0], vec![0.5, 0.5, 2.0]]).unwrap();
        let pr = prior(QPrior::ArctanNormal { center_rate: 1.2, sigma_angle: 0.3 });
        let n = 3000;
        let mut rng = rand::rngs::StdRng::seed_from_u64(21);
        let fast: Vec<Vec<f64>> = (0..n).map(|_| draw_price(&e, &y, &pr, &mut rng).unwrap()).collect();
        let slow: Vec<Vec<f64>> = (0..n).map(|_| draw_price_unrestricted(&e, &y, &pr, &mut rng).unwrap()).collect();
        for k in 0..2 {
            let mut a: Vec<f64> = fast.iter().map(|q| q[k]).collect();
            let mut b: Vec<f64> = slow.iter().map(|q| q[k]).collect();
            a.sort_by(f64::total_cmp);
            b.sort_by(f64::total_cmp);
            // 0.1% two-sample critical value at n = m = 3000 is about 0.050
            let d = crate::verify::ks_two_sample(&a, &b);
            assert!(d < 0.05, "coordinate {k}: {d}");
        }
    }

    #[test]
    fn two_households_with_three_goods_hit_the_cap() {
        // Two trade directions must be exactly opposed, which continuous
        // priors almost never produce.
        let e = Economy::from_specs(vec![
            UtilitySpec::ces(vec![0.2, 0.5, 0.3], 0.5).unwrap(),
            UtilitySpec::ces(vec![0.5, 0.2, 0.3], 0.5).unwrap(),
        ])
        .unwrap();
        let y = Allocation::from_rows(vec![vec![1.0, 2.0, 1.0], vec![2.0, 1.0, 1.0]]).unwrap();
        let mut rng = rand::rngs::StdRng::seed_from_u64(9);
        let err = draw_price(&e, &y, &prior(QPrior::UniformArc), &mut rng).unwrap_err();
        assert!(err.is_sampling_failure());
    }
}
