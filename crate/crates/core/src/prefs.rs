//! Utility families and their closed-form demand systems.
//!
//! Two families are supported, both homothetic and free of corner solutions:
//!
//! * Cobb-Douglas in log form, `u(c) = Σ αᵢ ln cᵢ`;
//! * CES, `u(c) = (Σ αᵢ cᵢ^σ)^(1/σ)` with `σ ∈ (0, 1)`.
//!
//! Prices are always wealth-normalized: the normalized demand `x_n(p)` is the
//! utility-maximizing bundle under the budget `p·c ≤ 1`. Every closed form is
//! exposed through the [`Utility`] trait so that monotone transforms (see
//! [`ExpTransform`]) and test doubles can share the same geometry code.

use std::fmt;
use std::ops::Deref;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Coordinates below this floor are reported as degenerate instead of being
/// carried through as subnormals.
pub const DEGENERACY_FLOOR: f64 = 1e-300;

/// Weights must sum to one within this tolerance.
const WEIGHT_SUM_TOL: f64 = 1e-12;

/// Slack on the sign test of the attractiveness bilinear form.
pub const ATTRACTIVE_SLACK: f64 = 1e-10;

/// Relative slack applied to the antecedents of the sharpness implications so
/// that ties decided by rounding do not trigger them.
const SHARP_ANTECEDENT_SLACK: f64 = 1e-10;

fn validate_positive(what: &'static str, v: &[f64]) -> Result<()> {
    for (index, &value) in v.iter().enumerate() {
        if !(value.is_finite() && value > 0.0) {
            return Err(Error::NonPositive { what, index, value });
        }
    }
    Ok(())
}

fn guard_degenerate(what: &str, v: &[f64]) -> Result<()> {
    for (i, &x) in v.iter().enumerate() {
        if !x.is_finite() || x < DEGENERACY_FLOOR {
            return Err(Error::Degenerate(format!(
                "{what} coordinate {i} evaluated to {x:e}"
            )));
        }
    }
    Ok(())
}

/// A strictly positive consumption bundle.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Bundle(Vec<f64>);

impl Bundle {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        validate_positive("bundle", &coords)?;
        Ok(Self(coords))
    }

    /// Wraps a computed bundle, rejecting degenerate coordinates.
    pub(crate) fn computed(coords: Vec<f64>) -> Result<Self> {
        guard_degenerate("bundle", &coords)?;
        Ok(Self(coords))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn dot(&self, other: &[f64]) -> f64 {
        self.0.iter().zip(other).map(|(a, b)| a * b).sum()
    }
}

impl Deref for Bundle {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl TryFrom<Vec<f64>> for Bundle {
    type Error = Error;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        Bundle::new(v)
    }
}

impl From<Bundle> for Vec<f64> {
    fn from(b: Bundle) -> Self {
        b.0
    }
}

/// A strictly positive, wealth-normalized price vector.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct PriceVector(Vec<f64>);

impl PriceVector {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        validate_positive("price", &coords)?;
        Ok(Self(coords))
    }

    pub(crate) fn computed(coords: Vec<f64>) -> Result<Self> {
        guard_degenerate("price", &coords)?;
        Ok(Self(coords))
    }

    /// Builds `(q, 1)` from a vector of rates relative to the last good.
    pub fn from_rates(q: &[f64]) -> Result<Self> {
        let mut v = q.to_vec();
        v.push(1.0);
        Self::new(v)
    }

    /// The rates `p_i / p_L`, `i < L`.
    pub fn rates(&self) -> Vec<f64> {
        let last = self.0[self.0.len() - 1];
        self.0[..self.0.len() - 1].iter().map(|p| p / last).collect()
    }

    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Self::computed(self.0.iter().map(|p| p * factor).collect())
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn dot(&self, other: &[f64]) -> f64 {
        self.0.iter().zip(other).map(|(a, b)| a * b).sum()
    }
}

impl Deref for PriceVector {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl TryFrom<Vec<f64>> for PriceVector {
    type Error = Error;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        PriceVector::new(v)
    }
}

impl From<PriceVector> for Vec<f64> {
    fn from(p: PriceVector) -> Self {
        p.0
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    CobbDouglasLog,
    Ces,
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Family::CobbDouglasLog => f.write_str("cobb_douglas_log"),
            Family::Ces => f.write_str("ces"),
        }
    }
}

/// A household's preference: a family, its weights and (for CES) the
/// substitution parameter.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "UtilitySpecRepr", into = "UtilitySpecRepr")]
pub struct UtilitySpec {
    family: Family,
    weights: Vec<f64>,
    sigma: Option<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct UtilitySpecRepr {
    family: Family,
    weights: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    sigma: Option<f64>,
}

impl TryFrom<UtilitySpecRepr> for UtilitySpec {
    type Error = Error;
    fn try_from(r: UtilitySpecRepr) -> Result<Self> {
        match (r.family, r.sigma) {
            (Family::CobbDouglasLog, None) => UtilitySpec::cobb_douglas_log(r.weights),
            (Family::CobbDouglasLog, Some(_)) => Err(Error::InvalidSpec(
                "sigma is only meaningful for the ces family".into(),
            )),
            (Family::Ces, Some(s)) => UtilitySpec::ces(r.weights, s),
            (Family::Ces, None) => Err(Error::InvalidSpec("ces requires sigma".into())),
        }
    }
}

impl From<UtilitySpec> for UtilitySpecRepr {
    fn from(u: UtilitySpec) -> Self {
        UtilitySpecRepr {
            family: u.family,
            weights: u.weights,
            sigma: u.sigma,
        }
    }
}

impl UtilitySpec {
    pub fn cobb_douglas_log(weights: Vec<f64>) -> Result<Self> {
        Self::validate_weights(&weights)?;
        Ok(Self {
            family: Family::CobbDouglasLog,
            weights,
            sigma: None,
        })
    }

    pub fn ces(weights: Vec<f64>, sigma: f64) -> Result<Self> {
        Self::validate_weights(&weights)?;
        if !(sigma > 0.0 && sigma < 1.0) {
            return Err(Error::InvalidSpec(format!(
                "ces sigma must lie strictly inside (0, 1), got {sigma}"
            )));
        }
        Ok(Self {
            family: Family::Ces,
            weights,
            sigma: Some(sigma),
        })
    }

    fn validate_weights(w: &[f64]) -> Result<()> {
        if w.len() < 2 {
            return Err(Error::InvalidSpec(format!(
                "at least two goods are required, got {}",
                w.len()
            )));
        }
        if let Some((i, &x)) = w.iter().enumerate().find(|(_, x)| !(x.is_finite() && **x > 0.0)) {
            return Err(Error::InvalidSpec(format!("weight {i} is not positive: {x}")));
        }
        let sum: f64 = w.iter().sum();
        if (sum - 1.0).abs() > WEIGHT_SUM_TOL {
            return Err(Error::InvalidSpec(format!("weights sum to {sum}, expected 1")));
        }
        Ok(())
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn sigma(&self) -> Option<f64> {
        self.sigma
    }

    /// `η = 1/(1−σ)` for CES; 1 for Cobb-Douglas.
    pub fn eta(&self) -> f64 {
        self.sigma.map_or(1.0, |s| 1.0 / (1.0 - s))
    }

    fn check_dim(&self, n: usize) -> Result<()> {
        if n != self.weights.len() {
            return Err(Error::DimensionMismatch {
                expected: self.weights.len(),
                found: n,
            });
        }
        Ok(())
    }

    fn ces_aggregate(&self, s: f64, c: &[f64]) -> f64 {
        self.weights.iter().zip(c).map(|(a, x)| a * x.powf(s)).sum()
    }
}

/// The demand system of a smooth, strictly quasi-concave utility with
/// interior solutions.
///
/// Implementors provide the value, gradient, Hessian, normalized demand and
/// expenditure; every other quantity follows from the identities relating
/// them.
pub trait Utility: Send + Sync {
    /// Number of goods `L`.
    fn goods(&self) -> usize;

    fn utility(&self, c: &Bundle) -> Result<f64>;

    fn gradient(&self, c: &Bundle) -> Result<Vec<f64>>;

    fn hessian(&self, c: &Bundle) -> Result<DMatrix<f64>>;

    /// Utility-maximizing bundle under the budget `p·c = 1`.
    fn normalized_demand(&self, p: &PriceVector) -> Result<Bundle>;

    /// Minimal cost `p·h(p, u)` of reaching `target`.
    fn expenditure(&self, p: &PriceVector, target: f64) -> Result<f64>;

    /// Cost-minimizing bundle reaching `target`, computed as `x_n(p / e(p, u))`.
    fn hicksian_demand(&self, p: &PriceVector, target: f64) -> Result<Bundle> {
        let e = self.expenditure(p, target)?;
        self.normalized_demand(&p.scaled(1.0 / e)?)
    }

    /// `∇u(c) / (∇u(c)·c)`: the normalized prices at which `c` is demanded.
    fn inverse_normalized_demand(&self, c: &Bundle) -> Result<PriceVector> {
        let g = self.gradient(c)?;
        let s = c.dot(&g);
        PriceVector::computed(g.iter().map(|x| x / s).collect())
    }

    fn indirect_utility_normalized(&self, p: &PriceVector) -> Result<f64> {
        self.utility(&self.normalized_demand(p)?)
    }

    /// Lagrange multiplier of the normalized problem, `∇u(x_n(p))·x_n(p)`.
    fn lambda_n(&self, p: &PriceVector) -> Result<f64> {
        let x = self.normalized_demand(p)?;
        Ok(x.dot(&self.gradient(&x)?))
    }

    /// Lowest attainable utility level (exclusive).
    fn level_floor(&self) -> f64;
}

impl Utility for UtilitySpec {
    fn goods(&self) -> usize {
        self.weights.len()
    }

    fn utility(&self, c: &Bundle) -> Result<f64> {
        self.check_dim(c.len())?;
        Ok(match self.sigma {
            None => self.weights.iter().zip(c.iter()).map(|(a, x)| a * x.ln()).sum(),
            Some(s) => self.ces_aggregate(s, c).powf(1.0 / s),
        })
    }

    fn gradient(&self, c: &Bundle) -> Result<Vec<f64>> {
        self.check_dim(c.len())?;
        let g: Vec<f64> = match self.sigma {
            None => self.weights.iter().zip(c.iter()).map(|(a, x)| a / x).collect(),
            Some(s) => {
                // ∇u = u^(1−σ) · (αᵢ cᵢ^(σ−1))
                let scale = self.ces_aggregate(s, c).powf((1.0 - s) / s);
                self.weights
                    .iter()
                    .zip(c.iter())
                    .map(|(a, x)| scale * a * x.powf(s - 1.0))
                    .collect()
            }
        };
        guard_degenerate("gradient", &g)?;
        Ok(g)
    }

    fn hessian(&self, c: &Bundle) -> Result<DMatrix<f64>> {
        self.check_dim(c.len())?;
        let n = c.len();
        Ok(match self.sigma {
            None => DMatrix::from_fn(n, n, |i, j| {
                if i == j {
                    -self.weights[i] / (c[i] * c[i])
                } else {
                    0.0
                }
            }),
            Some(s) => {
                let u = self.ces_aggregate(s, c).powf(1.0 / s);
                let theta: Vec<f64> = (0..n).map(|i| self.weights[i] * c[i].powf(s - 1.0)).collect();
                let outer = (1.0 - s) * u.powf(1.0 - 2.0 * s);
                let diag = (1.0 - s) * u.powf(1.0 - s);
                DMatrix::from_fn(n, n, |i, j| {
                    let mut h = outer * theta[i] * theta[j];
                    if i == j {
                        h -= diag * self.weights[i] * c[i].powf(s - 2.0);
                    }
                    h
                })
            }
        })
    }

    fn normalized_demand(&self, p: &PriceVector) -> Result<Bundle> {
        self.check_dim(p.len())?;
        let x: Vec<f64> = match self.sigma {
            None => self.weights.iter().zip(p.iter()).map(|(a, q)| a / q).collect(),
            Some(_) => {
                let eta = self.eta();
                let denom: f64 = self
                    .weights
                    .iter()
                    .zip(p.iter())
                    .map(|(a, q)| a.powf(eta) * q.powf(1.0 - eta))
                    .sum();
                self.weights
                    .iter()
                    .zip(p.iter())
                    .map(|(a, q)| (a / q).powf(eta) / denom)
                    .collect()
            }
        };
        Bundle::computed(x)
    }

    fn expenditure(&self, p: &PriceVector, target: f64) -> Result<f64> {
        self.check_dim(p.len())?;
        if !target.is_finite() || target <= self.level_floor() {
            return Err(Error::UnreachableLevel { level: target });
        }
        let vn = self.indirect_utility_normalized(p)?;
        let e = match self.sigma {
            // v(p, w) = ln w + v_n(p)
            None => (target - vn).exp(),
            // v(p, w) = w · v_n(p)
            Some(_) => target / vn,
        };
        if !e.is_finite() || e < DEGENERACY_FLOOR {
            return Err(Error::Degenerate(format!("expenditure evaluated to {e:e}")));
        }
        Ok(e)
    }

    fn level_floor(&self) -> f64 {
        match self.sigma {
            None => f64::NEG_INFINITY,
            Some(_) => 0.0,
        }
    }
}

/// `exp(k·u)` for a base utility `u` and scale `k > 0`.
///
/// The transform leaves preferences (and hence every demand map) untouched but
/// changes utility levels, gradients and Hessians. With `k = 2` and weights
/// `(½, ½)`, the log Cobb-Douglas base becomes the product form `c₁c₂`.
#[derive(Clone, Debug)]
pub struct ExpTransform<U> {
    base: U,
    scale: f64,
}

impl<U: Utility> ExpTransform<U> {
    pub fn new(base: U, scale: f64) -> Result<Self> {
        if !(scale.is_finite() && scale > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "transform scale must be positive, got {scale}"
            )));
        }
        Ok(Self { base, scale })
    }

    pub fn base(&self) -> &U {
        &self.base
    }

    fn base_level(&self, level: f64) -> Result<f64> {
        if !(level.is_finite() && level > 0.0) {
            return Err(Error::UnreachableLevel { level });
        }
        Ok(level.ln() / self.scale)
    }
}

impl ExpTransform<UtilitySpec> {
    /// The product form `exp(k Σ αᵢ ln cᵢ)`.
    pub fn product_form(weights: Vec<f64>, scale: f64) -> Result<Self> {
        Self::new(UtilitySpec::cobb_douglas_log(weights)?, scale)
    }
}

impl<U: Utility> Utility for ExpTransform<U> {
    fn goods(&self) -> usize {
        self.base.goods()
    }

    fn utility(&self, c: &Bundle) -> Result<f64> {
        Ok((self.scale * self.base.utility(c)?).exp())
    }

    fn gradient(&self, c: &Bundle) -> Result<Vec<f64>> {
        let outer = self.scale * self.utility(c)?;
        let g: Vec<f64> = self.base.gradient(c)?.into_iter().map(|x| outer * x).collect();
        guard_degenerate("gradient", &g)?;
        Ok(g)
    }

    fn hessian(&self, c: &Bundle) -> Result<DMatrix<f64>> {
        let k = self.scale;
        let v = self.utility(c)?;
        let g = self.base.gradient(c)?;
        let h = self.base.hessian(c)?;
        let n = g.len();
        Ok(DMatrix::from_fn(n, n, |i, j| k * v * (k * g[i] * g[j] + h[(i, j)])))
    }

    fn normalized_demand(&self, p: &PriceVector) -> Result<Bundle> {
        self.base.normalized_demand(p)
    }

    fn expenditure(&self, p: &PriceVector, target: f64) -> Result<f64> {
        self.base.expenditure(p, self.base_level(target)?)
    }

    fn inverse_normalized_demand(&self, c: &Bundle) -> Result<PriceVector> {
        self.base.inverse_normalized_demand(c)
    }

    fn level_floor(&self) -> f64 {
        0.0
    }
}

impl<U: Utility + ?Sized> Utility for &U {
    fn goods(&self) -> usize {
        (**self).goods()
    }
    fn utility(&self, c: &Bundle) -> Result<f64> {
        (**self).utility(c)
    }
    fn gradient(&self, c: &Bundle) -> Result<Vec<f64>> {
        (**self).gradient(c)
    }
    fn hessian(&self, c: &Bundle) -> Result<DMatrix<f64>> {
        (**self).hessian(c)
    }
    fn normalized_demand(&self, p: &PriceVector) -> Result<Bundle> {
        (**self).normalized_demand(p)
    }
    fn expenditure(&self, p: &PriceVector, target: f64) -> Result<f64> {
        (**self).expenditure(p, target)
    }
    fn hicksian_demand(&self, p: &PriceVector, target: f64) -> Result<Bundle> {
        (**self).hicksian_demand(p, target)
    }
    fn inverse_normalized_demand(&self, c: &Bundle) -> Result<PriceVector> {
        (**self).inverse_normalized_demand(c)
    }
    fn level_floor(&self) -> f64 {
        (**self).level_floor()
    }
}

/// Demand of a household with bundle `y` trading at prices `p`:
/// `x_n(p / p·y)`.
pub fn demand_at_wealth<U: Utility + ?Sized>(u: &U, y: &Bundle, p: &PriceVector) -> Result<Bundle> {
    let w = p.dot(y);
    u.normalized_demand(&p.scaled(1.0 / w)?)
}

/// Sharpness at `(y, p)`: whenever a good is priced above (below) every
/// cross-rate implied by the bundle's marginal rates, the linear trade
/// direction sells (buys) that good.
pub fn check_sharp<U: Utility + ?Sized>(u: &U, y: &Bundle, p: &PriceVector) -> Result<bool> {
    let rates = u.inverse_normalized_demand(y)?;
    let demand = demand_at_wealth(u, y, p)?;
    let n = y.len();
    for i in 0..n {
        let implied = (0..n).filter(|&j| j != i).map(|j| p[j] * rates[i] / rates[j]);
        let (lo, hi) = implied.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
            (lo.min(v), hi.max(v))
        });
        let excess = demand[i] - y[i];
        if p[i] > hi * (1.0 + SHARP_ANTECEDENT_SLACK) && excess >= 0.0 {
            return Ok(false);
        }
        if p[i] < lo * (1.0 - SHARP_ANTECEDENT_SLACK) && excess <= 0.0 {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Value of the attractiveness bilinear form for goods `(i, j)` at `(y, p)`.
/// Attractive utilities keep it non-positive.
pub fn attractiveness_form<U: Utility + ?Sized>(
    u: &U,
    y: &Bundle,
    p: &PriceVector,
    i: usize,
    j: usize,
) -> Result<f64> {
    let n = y.len();
    if i == j || i >= n || j >= n {
        return Err(Error::InvalidArgument(format!(
            "goods pair ({i}, {j}) must be distinct indices below {n}"
        )));
    }
    let rates = u.inverse_normalized_demand(y)?;
    let demand = demand_at_wealth(u, y, p)?;
    let hess = u.hessian(y)?;
    let dir: Vec<f64> = demand.iter().zip(y.iter()).map(|(x, c)| x - c).collect();
    let hd = |k: usize| (0..n).map(|l| hess[(k, l)] * dir[l]).sum::<f64>();
    let mispricing = rates[i] / rates[j] - p[i] / p[j];
    Ok(mispricing * (rates[j] * hd(i) - rates[i] * hd(j)))
}

pub fn check_attractive<U: Utility + ?Sized>(
    u: &U,
    y: &Bundle,
    p: &PriceVector,
    i: usize,
    j: usize,
) -> Result<bool> {
    Ok(attractiveness_form(u, y, p, i, j)? <= ATTRACTIVE_SLACK)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn cd() -> UtilitySpec {
        UtilitySpec::cobb_douglas_log(vec![0.5, 0.5]).unwrap()
    }

    fn ces() -> UtilitySpec {
        UtilitySpec::ces(vec![0.5, 0.5], 0.5).unwrap()
    }

    fn product() -> ExpTransform<UtilitySpec> {
        ExpTransform::product_form(vec![0.5, 0.5], 2.0).unwrap()
    }

    fn b(v: &[f64]) -> Bundle {
        Bundle::new(v.to_vec()).unwrap()
    }

    fn p(v: &[f64]) -> PriceVector {
        PriceVector::new(v.to_vec()).unwrap()
    }

    // Golden-section maximization of u along the budget line p·c = 1 (L = 2).
    fn demand_oracle(u: &UtilitySpec, p: &[f64]) -> [f64; 2] {
        let f = |c1: f64| u.utility(&b(&[c1, (1.0 - p[0] * c1) / p[1]])).unwrap();
        let (mut lo, mut hi) = (1e-12, 1.0 / p[0] - 1e-12);
        let r = (5f64.sqrt() - 1.0) / 2.0;
        for _ in 0..300 {
            let a = hi - r * (hi - lo);
            let bb = lo + r * (hi - lo);
            if f(a) < f(bb) {
                lo = a;
            } else {
                hi = bb;
            }
        }
        let c1 = 0.5 * (lo + hi);
        [c1, (1.0 - p[0] * c1) / p[1]]
    }

    #[test]
    fn utility_values() {
        assert_relative_eq!(ces().utility(&b(&[1.0, 1.0])).unwrap(), 1.0, epsilon = 1e-15);
        assert_relative_eq!(
            cd().utility(&b(&[2.0, 1.0])).unwrap(),
            0.5 * 2f64.ln(),
            epsilon = 1e-15
        );
        // brute force: (0.5·√4 + 0.5·√1)²
        let brute = (0.5 * 4f64.sqrt() + 0.5 * 1f64.sqrt()).powi(2);
        assert_relative_eq!(brute, 2.25);
        assert_relative_eq!(ces().utility(&b(&[4.0, 1.0])).unwrap(), brute, epsilon = 1e-14);
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let err = cd().utility(&b(&[1.0, 2.0, 3.0])).unwrap_err();
        assert!(matches!(err, Error::DimensionMismatch { expected: 2, found: 3 }));
    }

    #[test]
    fn spec_validation() {
        assert!(UtilitySpec::cobb_douglas_log(vec![0.5, 0.6]).is_err());
        assert!(UtilitySpec::cobb_douglas_log(vec![1.0]).is_err());
        assert!(UtilitySpec::ces(vec![0.5, 0.5], 1.0).is_err());
        assert!(UtilitySpec::ces(vec![0.5, 0.5], 0.0).is_err());
        assert!(UtilitySpec::ces(vec![0.5, 0.5], -0.5).is_err());
        assert!(UtilitySpec::ces(vec![-0.5, 1.5], 0.5).is_err());
    }

    #[test]
    fn serde_format() {
        let u: UtilitySpec =
            serde_json::from_str(r#"{"family":"ces","weights":[0.5,0.5],"sigma":0.5}"#).unwrap();
        assert_eq!(u, ces());
        let u: UtilitySpec =
            serde_json::from_str(r#"{"family":"cobb_douglas_log","weights":[0.5,0.5]}"#).unwrap();
        assert_eq!(u, cd());
        assert_eq!(
            serde_json::to_string(&cd()).unwrap(),
            r#"{"family":"cobb_douglas_log","weights":[0.5,0.5]}"#
        );
        assert!(serde_json::from_str::<UtilitySpec>(
            r#"{"family":"ces","weights":[0.5,0.5],"sigma":0.5,"rho":1}"#
        )
        .is_err());
        assert!(serde_json::from_str::<UtilitySpec>(
            r#"{"family":"cobb_douglas_log","weights":[0.5,0.5],"sigma":0.5}"#
        )
        .is_err());
        assert!(serde_json::from_str::<UtilitySpec>(r#"{"family":"ces","weights":[0.5,0.5]}"#).is_err());
    }

    #[test]
    fn gradient_matches_closed_form_and_finite_differences() {
        assert_eq!(cd().gradient(&b(&[1.0, 1.0])).unwrap(), vec![0.5, 0.5]);
        assert_eq!(cd().gradient(&b(&[2.0, 1.0])).unwrap(), vec![0.25, 0.5]);

        let u = ces();
        let c = [4.0, 1.0];
        let g = u.gradient(&b(&c)).unwrap();
        let h = 1e-5;
        for k in 0..2 {
            let mut up = c;
            let mut dn = c;
            up[k] += h;
            dn[k] -= h;
            let fd = (u.utility(&b(&up)).unwrap() - u.utility(&b(&dn)).unwrap()) / (2.0 * h);
            assert_relative_eq!(g[k], fd, max_relative = 1e-7);
        }
    }

    #[test]
    fn hessian_matches_closed_form_and_finite_differences() {
        let h = cd().hessian(&b(&[1.0, 1.0])).unwrap();
        assert_eq!(h, DMatrix::from_row_slice(2, 2, &[-0.5, 0.0, 0.0, -0.5]));

        let u = ces();
        let c = [4.0, 1.0];
        let hess = u.hessian(&b(&c)).unwrap();
        assert_eq!(hess, hess.transpose());
        let step = 1e-5;
        for k in 0..2 {
            let mut up = c;
            let mut dn = c;
            up[k] += step;
            dn[k] -= step;
            let gu = u.gradient(&b(&up)).unwrap();
            let gd = u.gradient(&b(&dn)).unwrap();
            for i in 0..2 {
                let fd = (gu[i] - gd[i]) / (2.0 * step);
                assert_relative_eq!(hess[(i, k)], fd, max_relative = 1e-5);
            }
        }
    }

    #[test]
    fn normalized_demand_examples() {
        assert_eq!(cd().normalized_demand(&p(&[1.0, 1.0])).unwrap().as_slice(), &[0.5, 0.5]);
        let r = 1.0 / 2f64.sqrt();
        let x = cd().normalized_demand(&p(&[r, r])).unwrap();
        assert_relative_eq!(x[0], r, epsilon = 1e-15);
        assert_relative_eq!(x[1], r, epsilon = 1e-15);

        let oracle = demand_oracle(&ces(), &[1.0, 4.0]);
        assert_relative_eq!(oracle[0], 0.8, epsilon = 1e-6);
        assert_relative_eq!(oracle[1], 0.05, epsilon = 1e-6);
        let x = ces().normalized_demand(&p(&[1.0, 4.0])).unwrap();
        assert_relative_eq!(x[0], 0.8, epsilon = 1e-14);
        assert_relative_eq!(x[1], 0.05, epsilon = 1e-14);
        assert_relative_eq!(x[0] + 4.0 * x[1], 1.0, epsilon = 1e-14);
    }

    #[test]
    fn ces_demand_matches_oracle_off_symmetry() {
        let u = UtilitySpec::ces(vec![0.7, 0.3], 0.35).unwrap();
        for pr in [[0.3, 2.0], [1.7, 0.4], [5.0, 5.0]] {
            let oracle = demand_oracle(&u, &pr);
            let x = u.normalized_demand(&p(&pr)).unwrap();
            assert_relative_eq!(x[0], oracle[0], max_relative = 1e-6);
            assert_relative_eq!(x[1], oracle[1], max_relative = 1e-6);
        }
    }

    #[test]
    fn inverse_demand_examples() {
        assert_eq!(cd().inverse_normalized_demand(&b(&[1.0, 1.0])).unwrap().as_slice(), &[0.5, 0.5]);
        assert_eq!(cd().inverse_normalized_demand(&b(&[2.0, 1.0])).unwrap().as_slice(), &[0.25, 0.5]);
        let c = b(&[4.0, 1.0]);
        let back = ces().normalized_demand(&ces().inverse_normalized_demand(&c).unwrap()).unwrap();
        assert_relative_eq!(back[0], 4.0, max_relative = 1e-9);
        assert_relative_eq!(back[1], 1.0, max_relative = 1e-9);
    }

    #[test]
    fn product_form_matches_the_worked_example() {
        let u = product();
        // x_n(p) = (1/2p₁, 1/2p₂), v_n = 1/(4p₁p₂), λ_n = 1/(2p₁p₂), e = 2√(u p₁p₂)
        assert_relative_eq!(u.utility(&b(&[2.0, 3.0])).unwrap(), 6.0, epsilon = 1e-12);
        assert_relative_eq!(u.indirect_utility_normalized(&p(&[1.0, 1.0])).unwrap(), 0.25, epsilon = 1e-14);
        assert_relative_eq!(u.indirect_utility_normalized(&p(&[0.5, 0.5])).unwrap(), 1.0, epsilon = 1e-14);
        assert_relative_eq!(u.lambda_n(&p(&[1.0, 1.0])).unwrap(), 0.5, epsilon = 1e-14);
        assert_relative_eq!(u.expenditure(&p(&[1.0, 1.0]), 1.0).unwrap(), 2.0, epsilon = 1e-14);
        assert_relative_eq!(u.expenditure(&p(&[4.0, 1.0]), 1.0).unwrap(), 4.0, epsilon = 1e-14);
        let g = u.gradient(&b(&[2.0, 3.0])).unwrap();
        assert_relative_eq!(g[0], 3.0, epsilon = 1e-12);
        assert_relative_eq!(g[1], 2.0, epsilon = 1e-12);
        let h = u.hessian(&b(&[2.0, 3.0])).unwrap();
        assert_relative_eq!(h[(0, 0)], 0.0, epsilon = 1e-12);
        assert_relative_eq!(h[(0, 1)], 1.0, epsilon = 1e-12);
    }

    #[test]
    fn hicksian_demand_examples() {
        let u = product();
        let h = u.hicksian_demand(&p(&[1.0, 1.0]), 1.0).unwrap();
        assert_relative_eq!(h[0], 1.0, epsilon = 1e-14);
        assert_relative_eq!(h[1], 1.0, epsilon = 1e-14);
        // h(p, u) = (√(u p₂/p₁), √(u p₁/p₂)) at p = (4, 1)
        let h = u.hicksian_demand(&p(&[4.0, 1.0]), 1.0).unwrap();
        assert_relative_eq!(h[0], 0.5, epsilon = 1e-14);
        assert_relative_eq!(h[1], 2.0, epsilon = 1e-14);
        assert!(matches!(
            u.hicksian_demand(&p(&[1.0, 1.0]), -1.0),
            Err(Error::UnreachableLevel { .. })
        ));
        assert!(matches!(
            ces().hicksian_demand(&p(&[1.0, 1.0]), 0.0),
            Err(Error::UnreachableLevel { .. })
        ));
    }

    #[test]
    fn ces_hicksian_matches_expenditure_minimization() {
        let u = UtilitySpec::ces(vec![0.6, 0.4], 0.5).unwrap();
        let (price, target): ([f64; 2], f64) = ([1.5, 0.7], 2.0);
        // Walk the contour u(c₁, c₂) = target and minimize p·c by golden section.
        let s = 0.5;
        let c2_of = |c1: f64| {
            let rest = (target.powf(s) - 0.6 * c1.powf(s)) / 0.4;
            rest.powf(1.0 / s)
        };
        let cost = |c1: f64| price[0] * c1 + price[1] * c2_of(c1);
        let (mut lo, mut hi) = (1e-9, (target.powf(s) / 0.6).powf(1.0 / s) - 1e-9);
        let r = (5f64.sqrt() - 1.0) / 2.0;
        for _ in 0..300 {
            let a = hi - r * (hi - lo);
            let bb = lo + r * (hi - lo);
            if cost(a) > cost(bb) {
                lo = a;
            } else {
                hi = bb;
            }
        }
        let c1 = 0.5 * (lo + hi);
        let h = u.hicksian_demand(&p(&price), target).unwrap();
        assert_relative_eq!(h[0], c1, max_relative = 1e-7);
        assert_relative_eq!(h[1], c2_of(c1), max_relative = 1e-7);
        assert_relative_eq!(u.utility(&h).unwrap(), target, max_relative = 1e-9);
    }

    #[test]
    fn lambda_and_indirect_utility() {
        for pr in [[0.3, 2.0], [1.0, 1.0], [7.0, 0.2]] {
            assert_relative_eq!(cd().lambda_n(&p(&pr)).unwrap(), 1.0, epsilon = 1e-14);
            let direct: f64 = (0..2).map(|i| 0.5 * (0.5 / pr[i]).ln()).sum();
            assert_relative_eq!(cd().indirect_utility_normalized(&p(&pr)).unwrap(), direct, epsilon = 1e-14);
        }
        // ∇v_n(p) = −λ_n(p) x_n(p)
        let u = ces();
        let pr = [0.7, 1.9];
        let lam = u.lambda_n(&p(&pr)).unwrap();
        let x = u.normalized_demand(&p(&pr)).unwrap();
        let h = 1e-5;
        for k in 0..2 {
            let mut up = pr;
            let mut dn = pr;
            up[k] += h;
            dn[k] -= h;
            let fd = (u.indirect_utility_normalized(&p(&up)).unwrap()
                - u.indirect_utility_normalized(&p(&dn)).unwrap())
                / (2.0 * h);
            assert_relative_eq!(fd, -lam * x[k], max_relative = 1e-6);
        }
    }

    #[test]
    fn degenerate_prices_are_rejected() {
        let u = cd();
        assert!(matches!(
            u.normalized_demand(&p(&[1e308, 1.0])),
            Err(Error::Degenerate(_))
        ));
        assert!(PriceVector::new(vec![0.0, 1.0]).is_err());
        assert!(Bundle::new(vec![f64::NAN, 1.0]).is_err());
    }

    #[test]
    fn sharpness_examples() {
        let u = cd();
        assert!(check_sharp(&u, &b(&[1.0, 1.0]), &p(&[3.0, 1.0])).unwrap());
        let d = demand_at_wealth(&u, &b(&[1.0, 1.0]), &p(&[3.0, 1.0])).unwrap();
        assert!(d[0] - 1.0 < 0.0);
        let y = b(&[2.0, 1.5]);
        let at_rates = u.inverse_normalized_demand(&y).unwrap();
        assert!(check_sharp(&u, &y, &at_rates).unwrap());
    }

    #[test]
    fn attractiveness_examples() {
        let u = cd();
        let y = b(&[2.0, 1.0]);
        let parallel = u.inverse_normalized_demand(&y).unwrap().scaled(3.0).unwrap();
        assert_eq!(attractiveness_form(&u, &y, &parallel, 0, 1).unwrap(), 0.0);
        assert!(check_attractive(&u, &y, &p(&[1.0, 1.0]), 0, 1).unwrap());
        assert!(check_attractive(&u, &y, &p(&[1.0, 1.0]), 1, 0).unwrap());
        assert!(attractiveness_form(&u, &y, &p(&[1.0, 1.0]), 0, 0).is_err());
    }
}
