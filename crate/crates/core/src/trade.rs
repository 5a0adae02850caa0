//! Linear trade at common prices.
//!
//! At prices `p`, household `h` holding `y_h` would like to move along the
//! segment towards its demand `x_n(p / p·y_h)`. A speed vector `σ` says how far
//! along its segment each household goes; it is admissible when the moves
//! cancel in aggregate. Prices admitting an admissible non-zero speed vector
//! are the trade-compatible prices of the allocation.

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry;
use crate::lp;
use crate::prefs::{demand_at_wealth, Bundle, PriceVector, Utility, UtilitySpec};

/// Default relative MRS agreement for declaring an allocation Pareto optimal.
pub const PARETO_TOL: f64 = 1e-8;

/// Directions shorter than this (relative to the holdings) count as no trade.
const DIRECTION_FLOOR: f64 = 1e-12;

/// Optimum of the trade LP above which trade is declared possible.
const TRADE_LP_THRESHOLD: f64 = 1e-9;

const BOX_SLACK: f64 = 1e-12;
const BURN_IN: usize = 64;
const CHORD_CLEARANCE: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Household {
    pub label: String,
    pub utility: UtilitySpec,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Economy {
    households: Vec<Household>,
}

impl Economy {
    pub fn new(households: Vec<Household>) -> Result<Self> {
        if households.len() < 2 {
            return Err(Error::InvalidArgument(format!(
                "an economy needs at least two households, got {}",
                households.len()
            )));
        }
        let l = households[0].utility.goods();
        if let Some(h) = households.iter().find(|h| h.utility.goods() != l) {
            return Err(Error::DimensionMismatch {
                expected: l,
                found: h.utility.goods(),
            });
        }
        Ok(Self { households })
    }

    /// Households labelled `h1, h2, …`.
    pub fn from_specs(specs: Vec<UtilitySpec>) -> Result<Self> {
        Self::new(
            specs
                .into_iter()
                .enumerate()
                .map(|(i, utility)| Household {
                    label: format!("h{}", i + 1),
                    utility,
                })
                .collect(),
        )
    }

    pub fn households(&self) -> &[Household] {
        &self.households
    }

    pub fn specs(&self) -> Vec<UtilitySpec> {
        self.households.iter().map(|h| h.utility.clone()).collect()
    }

    pub fn utility(&self, h: usize) -> &UtilitySpec {
        &self.households[h].utility
    }

    pub fn len(&self) -> usize {
        self.households.len()
    }

    pub fn is_empty(&self) -> bool {
        self.households.is_empty()
    }

    pub fn goods(&self) -> usize {
        self.households[0].utility.goods()
    }

    fn check(&self, y: &Allocation) -> Result<()> {
        if y.households() != self.len() {
            return Err(Error::DimensionMismatch {
                expected: self.len(),
                found: y.households(),
            });
        }
        if y.goods() != self.goods() {
            return Err(Error::DimensionMismatch {
                expected: self.goods(),
                found: y.goods(),
            });
        }
        Ok(())
    }
}

/// One strictly positive bundle per household.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Bundle>", into = "Vec<Bundle>")]
pub struct Allocation {
    bundles: Vec<Bundle>,
}

impl Allocation {
    pub fn new(bundles: Vec<Bundle>) -> Result<Self> {
        let Some(first) = bundles.first() else {
            return Err(Error::InvalidArgument("an allocation needs at least one bundle".into()));
        };
        let l = first.len();
        if let Some(b) = bundles.iter().find(|b| b.len() != l) {
            return Err(Error::DimensionMismatch {
                expected: l,
                found: b.len(),
            });
        }
        Ok(Self { bundles })
    }

    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        Self::new(rows.into_iter().map(Bundle::new).collect::<Result<_>>()?)
    }

    pub fn bundles(&self) -> &[Bundle] {
        &self.bundles
    }

    pub fn households(&self) -> usize {
        self.bundles.len()
    }

    pub fn goods(&self) -> usize {
        self.bundles[0].len()
    }

    pub fn aggregate(&self) -> Vec<f64> {
        let mut agg = vec![0.0; self.goods()];
        for b in &self.bundles {
            for (a, x) in agg.iter_mut().zip(b.iter()) {
                *a += x;
            }
        }
        agg
    }
}

impl TryFrom<Vec<Bundle>> for Allocation {
    type Error = Error;
    fn try_from(v: Vec<Bundle>) -> Result<Self> {
        Allocation::new(v)
    }
}

impl From<Allocation> for Vec<Bundle> {
    fn from(a: Allocation) -> Self {
        a.bundles
    }
}

/// Relative trade speeds, one per household, each in `[0, 1]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpeedVector(Vec<f64>);

impl SpeedVector {
    pub fn new(sigma: Vec<f64>) -> Result<Self> {
        if let Some((i, s)) = sigma.iter().enumerate().find(|(_, s)| !(0.0..=1.0).contains(*s)) {
            return Err(Error::InvalidArgument(format!("speed {i} is outside [0, 1]: {s}")));
        }
        Ok(Self(sigma))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

impl std::ops::Deref for SpeedVector {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

/// How speeds are drawn once a price has been fixed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpeedPrior {
    /// Uniform over the admissible speeds.
    UniformCube,
    /// An admissible speed rescaled so that its largest coordinate is 1.
    MaxSpeed,
}

/// Extreme marginal-rate ratios across households: `m_ij` and `M_ij` are the
/// smallest and largest `π_i/π_j` where `π = x_n⁻¹(y_h)`.
#[derive(Clone, Debug, PartialEq)]
pub struct BoxSet {
    lower_rates: DMatrix<f64>,
    upper_rates: DMatrix<f64>,
}

impl BoxSet {
    pub fn from_rates(rates: &[PriceVector]) -> Self {
        let l = rates[0].len();
        let mut lower = DMatrix::from_element(l, l, f64::INFINITY);
        let mut upper = DMatrix::from_element(l, l, f64::NEG_INFINITY);
        for pi in rates {
            for i in 0..l {
                for j in 0..l {
                    let r = pi[i] / pi[j];
                    lower[(i, j)] = lower[(i, j)].min(r);
                    upper[(i, j)] = upper[(i, j)].max(r);
                }
            }
        }
        Self {
            lower_rates: lower,
            upper_rates: upper,
        }
    }

    pub fn goods(&self) -> usize {
        self.lower_rates.nrows()
    }

    pub fn lower(&self, i: usize, j: usize) -> f64 {
        self.lower_rates[(i, j)]
    }

    pub fn upper(&self, i: usize, j: usize) -> f64 {
        self.upper_rates[(i, j)]
    }

    pub fn lower_rates(&self) -> &DMatrix<f64> {
        &self.lower_rates
    }

    pub fn upper_rates(&self) -> &DMatrix<f64> {
        &self.upper_rates
    }

    /// Per-coordinate bounds `[lo_k, hi_k]` on the rates `q` of every point
    /// of the box, or `None` when they are not computed (four or more goods,
    /// where the box need not be bounded) or the box is empty.
    ///
    /// With three goods the box is, in log prices, a union of 64 polygons,
    /// one per choice of the minimizing and maximizing `j` in each
    /// constraint; the bounds come from their vertices.
    pub fn rate_bounds(&self) -> Option<Vec<(f64, f64)>> {
        match self.goods() {
            2 => Some(vec![(self.lower(0, 1), self.upper(0, 1))]),
            3 => self.rate_bounds_3(),
            _ => None,
        }
    }

    fn rate_bounds_3(&self) -> Option<Vec<(f64, f64)>> {
        // a = (ln p_0, ln p_1), ln p_2 = 0; a row (g, b) reads g·a ≤ b.
        let unit = |i: usize| -> [f64; 2] {
            match i {
                0 => [1.0, 0.0],
                1 => [0.0, 1.0],
                _ => [0.0, 0.0],
            }
        };
        let diff = |i: usize, j: usize| {
            let (a, b) = (unit(i), unit(j));
            [a[0] - b[0], a[1] - b[1]]
        };
        let mut reach: f64 = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                if i != j {
                    reach = reach.max(self.upper(i, j).ln().abs()).max(self.lower(i, j).ln().abs());
                }
            }
        }
        let k = 4.0 * reach + 1.0;
        let frame = [([1.0, 0.0], k), ([-1.0, 0.0], k), ([0.0, 1.0], k), ([0.0, -1.0], k)];
        let others = |i: usize| -> [usize; 2] {
            match i {
                0 => [1, 2],
                1 => [0, 2],
                _ => [0, 1],
            }
        };
        let mut lo = [f64::INFINITY; 2];
        let mut hi = [f64::NEG_INFINITY; 2];
        for choice in 0..64usize {
            let mut rows: Vec<([f64; 2], f64)> = frame.to_vec();
            for i in 0..3 {
                let ju = others(i)[(choice >> (2 * i)) & 1];
                let jl = others(i)[(choice >> (2 * i + 1)) & 1];
                rows.push((diff(i, ju), self.upper(i, ju).ln()));
                let g = diff(i, jl);
                rows.push(([-g[0], -g[1]], -self.lower(i, jl).ln()));
            }
            for r in 0..rows.len() {
                for s in r + 1..rows.len() {
                    let ((g, b), (h, c)) = (rows[r], rows[s]);
                    let det = g[0] * h[1] - g[1] * h[0];
                    if det.abs() < 1e-14 {
                        continue;
                    }
                    let v = [(b * h[1] - g[1] * c) / det, (g[0] * c - b * h[0]) / det];
                    let inside = rows
                        .iter()
                        .all(|(g, b)| g[0] * v[0] + g[1] * v[1] <= b + 1e-10 * (1.0 + b.abs()));
                    if inside {
                        for t in 0..2 {
                            lo[t] = lo[t].min(v[t]);
                            hi[t] = hi[t].max(v[t]);
                        }
                    }
                }
            }
        }
        if !(lo[0] <= hi[0] && lo[1] <= hi[1]) {
            return None;
        }
        let pad = 1e-9;
        Some((0..2).map(|t| ((lo[t] - pad).exp(), (hi[t] + pad).exp())).collect())
    }
}

/// `x_n,h(p / p·y_h) − y_h`.
pub fn trade_direction(e: &Economy, y: &Allocation, p: &PriceVector, h: usize) -> Result<Vec<f64>> {
    e.check(y)?;
    let yh = &y.bundles()[h];
    let x = demand_at_wealth(e.utility(h), yh, p)?;
    Ok(x.iter().zip(yh.iter()).map(|(a, b)| a - b).collect())
}

pub fn trade_directions(e: &Economy, y: &Allocation, p: &PriceVector) -> Result<Vec<Vec<f64>>> {
    (0..e.len()).map(|h| trade_direction(e, y, p, h)).collect()
}

/// `y_h + t (x_n,h(p / p·y_h) − y_h)`.
pub fn linear_path_point(e: &Economy, y: &Allocation, p: &PriceVector, h: usize, t: f64) -> Result<Bundle> {
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::InvalidArgument(format!("path parameter {t} is outside [0, 1]")));
    }
    let d = trade_direction(e, y, p, h)?;
    Bundle::computed(y.bundles()[h].iter().zip(&d).map(|(a, b)| a + t * b).collect())
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn holdings_scale(y: &Allocation) -> f64 {
    y.bundles().iter().map(|b| norm(b)).fold(0.0, f64::max)
}

pub fn speed_contains(e: &Economy, y: &Allocation, p: &PriceVector, sigma: &SpeedVector) -> Result<bool> {
    if sigma.len() != e.len() {
        return Err(Error::DimensionMismatch {
            expected: e.len(),
            found: sigma.len(),
        });
    }
    let dirs = trade_directions(e, y, p)?;
    let mut total = vec![0.0; e.goods()];
    let mut moved = 0.0;
    for (s, d) in sigma.iter().zip(&dirs) {
        for (t, x) in total.iter_mut().zip(d) {
            *t += s * x;
        }
        moved += s * norm(d);
    }
    Ok(norm(&total) <= 1e-9 * moved.max(1.0) && moved > 1e-12)
}

/// Orthonormal basis of the hyperplane orthogonal to `p`.
fn orthogonal_complement(p: &[f64]) -> Vec<Vec<f64>> {
    let l = p.len();
    let mut basis: Vec<Vec<f64>> = vec![p.iter().map(|x| x / norm(p)).collect()];
    let mut candidates: Vec<usize> = (0..l).collect();
    // Unit vectors least aligned with p first, for conditioning.
    candidates.sort_by(|&a, &b| p[a].abs().total_cmp(&p[b].abs()));
    for k in candidates {
        if basis.len() == l {
            break;
        }
        let mut v = vec![0.0; l];
        v[k] = 1.0;
        for b in &basis {
            let d: f64 = v.iter().zip(b).map(|(x, y)| x * y).sum();
            for (x, y) in v.iter_mut().zip(b) {
                *x -= d * y;
            }
        }
        let n = norm(&v);
        if n > 1e-6 {
            basis.push(v.iter().map(|x| x / n).collect());
        }
    }
    basis.remove(0);
    basis
}

struct TradeSystem {
    active: Vec<usize>,
    // rows: coordinates in the complement of p; columns: active households
    rows: Vec<Vec<f64>>,
}

fn trade_system(dirs: &[Vec<f64>], p: &PriceVector, y: &Allocation, unit: bool) -> TradeSystem {
    let floor = DIRECTION_FLOOR * holdings_scale(y).max(1.0);
    let active: Vec<usize> = (0..dirs.len()).filter(|&h| norm(&dirs[h]) > floor).collect();
    let norms: Vec<f64> = active.iter().map(|&h| norm(&dirs[h])).collect();
    let rows = orthogonal_complement(p)
        .iter()
        .map(|b| {
            active
                .iter()
                .zip(&norms)
                .map(|(&h, &n)| {
                    let d: f64 = dirs[h].iter().zip(b).map(|(x, y)| x * y).sum();
                    if unit {
                        d / n
                    } else {
                        d
                    }
                })
                .collect()
        })
        .collect();
    TradeSystem { active, rows }
}

/// Whether `p` admits a non-trivial joint linear trade from `y`.
///
/// Decided by maximizing `Σ τ_h` over `Σ τ_h Δ_h/‖Δ_h‖ = 0`, `0 ≤ τ ≤ 1`; the
/// optimum is positive exactly when some admissible speed vector moves.
pub fn has_trade(e: &Economy, y: &Allocation, p: &PriceVector) -> Result<bool> {
    let dirs = trade_directions(e, y, p)?;
    let sys = trade_system(&dirs, p, y, true);
    if sys.active.len() < 2 {
        return Ok(false);
    }
    let k = sys.active.len();
    let sol = lp::maximize(&vec![1.0; k], &sys.rows, &vec![0.0; sys.rows.len()], &vec![1.0; k])?;
    Ok(sol.objective > TRADE_LP_THRESHOLD)
}

/// Largest relative disagreement between households' marginal rates.
pub fn mrs_gap(e: &Economy, y: &Allocation) -> Result<f64> {
    e.check(y)?;
    let rates = (0..e.len())
        .map(|h| geometry::mrs(e.utility(h), &y.bundles()[h]))
        .collect::<Result<Vec<_>>>()?;
    let mut gap: f64 = 0.0;
    for i in 0..e.goods() - 1 {
        let lo = rates.iter().map(|r| r[i]).fold(f64::INFINITY, f64::min);
        let hi = rates.iter().map(|r| r[i]).fold(f64::NEG_INFINITY, f64::max);
        gap = gap.max(hi / lo - 1.0);
    }
    Ok(gap)
}

pub fn is_pareto_optimal(e: &Economy, y: &Allocation, tol: f64) -> Result<bool> {
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument(format!("Pareto tolerance must be positive, got {tol}")));
    }
    Ok(mrs_gap(e, y)? <= tol)
}

/// The open interval of trade-compatible rates of a 2×2 economy, or `None`
/// when both households already share the same marginal rate.
pub fn trade_interval_2x2(e: &Economy, y: &Allocation) -> Result<Option<(f64, f64)>> {
    if e.len() != 2 || e.goods() != 2 {
        return Err(Error::InvalidArgument("a 2×2 economy is required".into()));
    }
    e.check(y)?;
    let a = geometry::mrs(e.utility(0), &y.bundles()[0])?[0];
    let b = geometry::mrs(e.utility(1), &y.bundles()[1])?[0];
    let (lo, hi) = (a.min(b), a.max(b));
    if hi / lo - 1.0 <= PARETO_TOL {
        return Ok(None);
    }
    Ok(Some((lo, hi)))
}

pub fn msr_extremes(e: &Economy, y: &Allocation) -> Result<BoxSet> {
    e.check(y)?;
    let rates = (0..e.len())
        .map(|h| e.utility(h).inverse_normalized_demand(&y.bundles()[h]))
        .collect::<Result<Vec<_>>>()?;
    Ok(BoxSet::from_rates(&rates))
}

/// Whether `(q, 1)` lies in the box: `min_j p_j m_ij ≤ p_i ≤ max_j p_j M_ij`.
pub fn box_contains(b: &BoxSet, q: &[f64]) -> Result<bool> {
    let l = b.goods();
    if q.len() + 1 != l {
        return Err(Error::DimensionMismatch {
            expected: l - 1,
            found: q.len(),
        });
    }
    let mut p = q.to_vec();
    p.push(1.0);
    for i in 0..l {
        let others = (0..l).filter(|&j| j != i);
        let lo = others.clone().map(|j| p[j] * b.lower(i, j)).fold(f64::INFINITY, f64::min);
        let hi = others.map(|j| p[j] * b.upper(i, j)).fold(f64::NEG_INFINITY, f64::max);
        if p[i] < lo * (1.0 - BOX_SLACK) || p[i] > hi * (1.0 + BOX_SLACK) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Draws an admissible speed vector according to `prior`.
///
/// Two households trade along a single ray, so only its length is random.
/// With more households the admissible set is a polytope, sampled uniformly
/// by hit-and-run from an interior point found by linear programming.
pub fn sample_speed<R: Rng + ?Sized>(
    e: &Economy,
    y: &Allocation,
    p: &PriceVector,
    prior: SpeedPrior,
    rng: &mut R,
) -> Result<SpeedVector> {
    let dirs = trade_directions(e, y, p)?;
    let mut sigma = if e.len() == 2 {
        let floor = DIRECTION_FLOOR * holdings_scale(y).max(1.0);
        let (n1, n2) = (norm(&dirs[0]), norm(&dirs[1]));
        let opposed: f64 = dirs[0].iter().zip(&dirs[1]).map(|(a, b)| a * b).sum();
        if n1 <= floor || n2 <= floor || opposed >= 0.0 {
            return Err(Error::Sampling("no admissible speed at these prices".into()));
        }
        let r = n1 / n2;
        let ray = if r <= 1.0 { [1.0, r] } else { [1.0 / r, 1.0] };
        let lambda = match prior {
            SpeedPrior::UniformCube => 1.0 - rng.random::<f64>(),
            SpeedPrior::MaxSpeed => 1.0,
        };
        vec![lambda * ray[0], lambda * ray[1]]
    } else {
        hit_and_run(&dirs, p, y, rng)?
    };
    if prior == SpeedPrior::MaxSpeed {
        let m = sigma.iter().copied().fold(0.0, f64::max);
        for s in sigma.iter_mut() {
            *s = (*s / m).min(1.0);
        }
    }
    SpeedVector::new(sigma)
}

fn hit_and_run<R: Rng + ?Sized>(dirs: &[Vec<f64>], p: &PriceVector, y: &Allocation, rng: &mut R) -> Result<Vec<f64>> {
    let h = dirs.len();
    let sys = trade_system(dirs, p, y, false);
    let k = sys.active.len();
    if k < 2 {
        return Err(Error::Sampling("fewer than two households can trade".into()));
    }

    // Per-coordinate maximizers; their average is relatively interior.
    let zeros = vec![0.0; sys.rows.len()];
    let ones = vec![1.0; k];
    let mut start = vec![0.0; k];
    let mut reach = vec![0.0; k];
    for c in 0..k {
        let mut obj = vec![0.0; k];
        obj[c] = 1.0;
        let sol = lp::maximize(&obj, &sys.rows, &zeros, &ones)?;
        reach[c] = sol.objective;
        for (s, x) in start.iter_mut().zip(&sol.x) {
            *s += x / k as f64;
        }
    }
    let free: Vec<usize> = (0..k).filter(|&c| reach[c] > 1e-12).collect();
    if free.len() < 2 {
        return Err(Error::Sampling("admissible speeds are degenerate".into()));
    }
    let start: Vec<f64> = free.iter().map(|&c| 0.5 * start[c]).collect();

    // Null space of the constraint matrix restricted to the free coordinates.
    let kf = free.len();
    let rows = sys.rows.len().max(kf);
    let a = DMatrix::from_fn(rows, kf, |r, c| sys.rows.get(r).map_or(0.0, |row| row[free[c]]));
    let svd = a.svd(false, true);
    let v_t = svd.v_t.ok_or_else(|| Error::Sampling("singular value decomposition failed".into()))?;
    let smax = svd.singular_values.max();
    let null: Vec<Vec<f64>> = (0..kf)
        .filter(|&i| svd.singular_values[i] <= 1e-10 * smax.max(1e-300))
        .map(|i| v_t.row(i).iter().copied().collect())
        .collect();
    if null.is_empty() {
        return Err(Error::Sampling("admissible speeds form a single point".into()));
    }

    let mut x = start;
    for _ in 0..BURN_IN {
        let z: Vec<f64> = null.iter().map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        let d: Vec<f64> = (0..kf).map(|c| null.iter().zip(&z).map(|(v, w)| v[c] * w).sum()).collect();
        let (mut tmin, mut tmax) = (f64::NEG_INFINITY, f64::INFINITY);
        for c in 0..kf {
            if d[c].abs() < 1e-300 {
                continue;
            }
            let (t0, t1) = ((0.0 - x[c]) / d[c], (1.0 - x[c]) / d[c]);
            tmin = tmin.max(t0.min(t1));
            tmax = tmax.min(t0.max(t1));
        }
        if !(tmin.is_finite() && tmax.is_finite() && tmax > tmin) {
            return Err(Error::Sampling("hit-and-run chord is empty".into()));
        }
        let clear = CHORD_CLEARANCE * (tmax - tmin);
        let t = tmin + clear + rng.random::<f64>() * (tmax - tmin - 2.0 * clear);
        for c in 0..kf {
            x[c] = (x[c] + t * d[c]).clamp(0.0, 1.0);
        }
    }

    let mut sigma = vec![0.0; h];
    for (c, &fc) in free.iter().enumerate() {
        sigma[sys.active[fc]] = x[c];
    }
    if sigma.iter().all(|&s| s == 0.0) {
        return Err(Error::Sampling("hit-and-run collapsed to zero".into()));
    }
    Ok(sigma)
}

/// Moves household `h` to `y_h + σ_h Δ_h`.
pub fn advance(e: &Economy, y: &Allocation, p: &PriceVector, sigma: &SpeedVector) -> Result<Allocation> {
    if sigma.len() != e.len() {
        return Err(Error::DimensionMismatch {
            expected: e.len(),
            found: sigma.len(),
        });
    }
    let bundles = (0..e.len())
        .map(|h| linear_path_point(e, y, p, h, sigma[h]))
        .collect::<Result<Vec<_>>>()?;
    Allocation::new(bundles)
}
