//! Maps between the consumption, normalized-price and flat domains, and the
//! manifolds that live in them.
//!
//! The flat domain replaces a bundle `c` by `(q, u)`: its marginal rates of
//! substitution against the last good and its utility level. Indifference
//! surfaces become horizontal slices there, which is what makes the Pareto set
//! and the trade dynamics easy to parameterize.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::prefs::{Bundle, PriceVector, Utility};
use crate::trade::{Allocation, BoxSet};

const FIXED_POINT_CAP: usize = 10_000;
const FIXED_POINT_DAMPING: f64 = 0.5;
const MEMBERSHIP_SLACK: f64 = 1e-12;
const BISECTION_ROUNDS: usize = 200;

/// A point of the flat domain.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlatPoint {
    pub q: Vec<f64>,
    pub u: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ManifoldKind {
    Indifference,
    Offer,
    TradeHyperplane,
}

impl std::str::FromStr for ManifoldKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "indifference" => Ok(Self::Indifference),
            "offer" => Ok(Self::Offer),
            "trade_hyperplane" | "trade-hyperplane" => Ok(Self::TradeHyperplane),
            other => Err(Error::InvalidArgument(format!("unknown manifold kind {other:?}"))),
        }
    }
}

impl std::fmt::Display for ManifoldKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Indifference => "indifference",
            Self::Offer => "offer",
            Self::TradeHyperplane => "trade_hyperplane",
        })
    }
}

#[derive(Clone, Debug)]
pub struct ManifoldSample {
    pub kind: ManifoldKind,
    pub anchor: Bundle,
    pub points: Vec<Bundle>,
}

#[derive(Clone, Debug)]
pub struct ParetoPoint {
    pub q: Vec<f64>,
    pub levels: Vec<f64>,
    pub allocation: Allocation,
}

fn rates_price(q: &[f64]) -> Result<PriceVector> {
    PriceVector::from_rates(q)
}

/// Marginal rates of substitution against the last good.
pub fn mrs<U: Utility + ?Sized>(u: &U, c: &Bundle) -> Result<Vec<f64>> {
    let g = u.gradient(c)?;
    let last = g[g.len() - 1];
    Ok(g[..g.len() - 1].iter().map(|x| x / last).collect())
}

pub fn flatten<U: Utility + ?Sized>(u: &U, c: &Bundle) -> Result<FlatPoint> {
    Ok(FlatPoint {
        q: mrs(u, c)?,
        u: u.utility(c)?,
    })
}

pub fn unflatten<U: Utility + ?Sized>(u: &U, fp: &FlatPoint) -> Result<Bundle> {
    check_rates(u, &fp.q)?;
    u.hicksian_demand(&rates_price(&fp.q)?, fp.u)
}

fn check_rates<U: Utility + ?Sized>(u: &U, q: &[f64]) -> Result<()> {
    if q.len() + 1 != u.goods() {
        return Err(Error::DimensionMismatch {
            expected: u.goods() - 1,
            found: q.len(),
        });
    }
    Ok(())
}

/// `e((q,1), u)⁻¹ (q, 1)`: the normalized prices at which the flat point is
/// demanded.
pub fn d_map<U: Utility + ?Sized>(u: &U, fp: &FlatPoint) -> Result<PriceVector> {
    check_rates(u, &fp.q)?;
    let p = rates_price(&fp.q)?;
    let e = u.expenditure(&p, fp.u)?;
    p.scaled(1.0 / e)
}

pub fn d_inverse<U: Utility + ?Sized>(u: &U, p: &PriceVector) -> Result<FlatPoint> {
    Ok(FlatPoint {
        q: p.rates(),
        u: u.indirect_utility_normalized(p)?,
    })
}

fn normalize(v: &[f64]) -> Vec<f64> {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.iter().map(|x| x / n).collect()
}

/// The unit-norm price vector that is demanded at itself, `x_n(p*) = p*`.
///
/// Found as the maximizer of `u` on the unit sphere by damped iteration of
/// `c ← ∇u(c)/‖∇u(c)‖`.
pub fn fixed_point<U: Utility + ?Sized>(u: &U) -> Result<PriceVector> {
    let n = u.goods();
    let mut c = vec![1.0 / (n as f64).sqrt(); n];
    for _ in 0..FIXED_POINT_CAP {
        let g = normalize(&u.gradient(&Bundle::computed(c.clone())?)?);
        let next: Vec<f64> = c
            .iter()
            .zip(&g)
            .map(|(a, b)| (1.0 - FIXED_POINT_DAMPING) * a + FIXED_POINT_DAMPING * b)
            .collect();
        let next = normalize(&next);
        let moved = next.iter().zip(&c).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        c = next;
        if moved < 1e-15 {
            let gap = g.iter().zip(&c).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            if gap < 1e-13 {
                return PriceVector::computed(c);
            }
        }
    }
    Err(Error::NonConvergence {
        what: "fixed-point iteration",
        iterations: FIXED_POINT_CAP,
    })
}

/// Samples the manifold of the given kind through `anchor`.
///
/// For `Indifference` and `Offer` each grid entry is a vector of `L−1`
/// rates `q`; for `TradeHyperplane` it holds the first `L−1` coordinates of
/// the point, the last one being solved for. Points leaving the positive
/// orthant are dropped.
pub fn sample_manifold<U: Utility + ?Sized>(
    u: &U,
    kind: ManifoldKind,
    anchor: &Bundle,
    grid: &[Vec<f64>],
) -> Result<ManifoldSample> {
    if anchor.len() != u.goods() {
        return Err(Error::DimensionMismatch {
            expected: u.goods(),
            found: anchor.len(),
        });
    }
    let mut points = Vec::with_capacity(grid.len());
    match kind {
        ManifoldKind::Indifference => {
            let level = u.utility(anchor)?;
            for q in grid {
                check_rates(u, q)?;
                points.push(u.hicksian_demand(&rates_price(q)?, level)?);
            }
        }
        ManifoldKind::Offer => {
            for q in grid {
                check_rates(u, q)?;
                let p = rates_price(q)?;
                let w = p.dot(anchor);
                points.push(u.normalized_demand(&p.scaled(1.0 / w)?)?);
            }
        }
        ManifoldKind::TradeHyperplane => {
            let pi = u.inverse_normalized_demand(anchor)?;
            let l = pi.len() - 1;
            for head in grid {
                check_rates(u, head)?;
                let partial: f64 = head.iter().zip(pi.iter()).map(|(a, b)| a * b).sum();
                let last = (1.0 - partial) / pi[l];
                if last > 0.0 && head.iter().all(|&x| x > 0.0) {
                    let mut y = head.clone();
                    y.push(last);
                    points.push(Bundle::new(y)?);
                }
            }
        }
    }
    Ok(ManifoldSample {
        kind,
        anchor: anchor.clone(),
        points,
    })
}

/// How far `point` is from satisfying the defining equation of the manifold
/// through `anchor`.
pub fn manifold_residual<U: Utility + ?Sized>(
    u: &U,
    kind: ManifoldKind,
    anchor: &Bundle,
    point: &Bundle,
) -> Result<f64> {
    Ok(match kind {
        ManifoldKind::Indifference => {
            let a = u.utility(anchor)?;
            (u.utility(point)? - a).abs() / a.abs().max(1.0)
        }
        ManifoldKind::Offer => (u.inverse_normalized_demand(point)?.dot(anchor) - 1.0).abs(),
        ManifoldKind::TradeHyperplane => (u.inverse_normalized_demand(anchor)?.dot(point) - 1.0).abs(),
    })
}

/// Hessian of `v_n`, `−(x_n ∇λ_nᵀ + λ_n J x_n)`, with `J x_n` and `∇λ_n`
/// obtained by differentiating the first-order conditions
/// `∇u(x) = λ p`, `p·x = 1` through the bordered Hessian of `u`.
pub fn indirect_hessian<U: Utility + ?Sized>(u: &U, p: &PriceVector) -> Result<DMatrix<f64>> {
    let n = p.len();
    let x = u.normalized_demand(p)?;
    let lam = u.lambda_n(p)?;
    let h = u.hessian(&x)?;
    let mut border = DMatrix::zeros(n + 1, n + 1);
    border.view_mut((0, 0), (n, n)).copy_from(&h);
    for i in 0..n {
        border[(i, n)] = -p[i];
        border[(n, i)] = p[i];
    }
    let mut rhs = DMatrix::zeros(n + 1, n);
    for k in 0..n {
        rhs[(k, k)] = lam;
        rhs[(n, k)] = -x[k];
    }
    let sol = border
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::Degenerate("bordered Hessian is singular".into()))?;
    let m = DMatrix::from_fn(n, n, |i, k| -(x[i] * sol[(n, k)] + lam * sol[(i, k)]));
    Ok((&m + m.transpose()) * 0.5)
}

fn outer(a: &[f64], b: &[f64]) -> DMatrix<f64> {
    DMatrix::from_fn(a.len(), b.len(), |i, j| a[i] * b[j])
}

/// Jacobian of `φ_c(p) = h(p, u(c))`, entry `(i, k) = ∂φᵢ/∂p_k`.
pub fn jacobian_phi<U: Utility + ?Sized>(u: &U, anchor: &Bundle, p: &PriceVector) -> Result<DMatrix<f64>> {
    let n = p.len();
    let level = u.utility(anchor)?;
    let e = u.expenditure(p, level)?;
    let pt = p.scaled(1.0 / e)?;
    let h = u.normalized_demand(&pt)?;
    let lam = u.lambda_n(&pt)?;
    let hv = indirect_hessian(u, &pt)?;
    let proj = DMatrix::identity(n, n) - outer(&pt, &h);
    Ok(-(proj.transpose() * hv * proj) / (e * lam))
}

/// Jacobian of `ψ_c(p) = x_n(p / p·c)`, entry `(i, k) = ∂ψᵢ/∂p_k`.
pub fn jacobian_psi<U: Utility + ?Sized>(u: &U, anchor: &Bundle, p: &PriceVector) -> Result<DMatrix<f64>> {
    let n = p.len();
    let w = p.dot(anchor);
    let ps = p.scaled(1.0 / w)?;
    let x = u.normalized_demand(&ps)?;
    let lam = u.lambda_n(&ps)?;
    let hv = indirect_hessian(u, &ps)?;
    let left = DMatrix::identity(n, n) - outer(&x, &ps);
    let right = DMatrix::identity(n, n) - outer(&ps, anchor);
    let dx: Vec<f64> = x.iter().zip(anchor.iter()).map(|(a, b)| a - b).collect();
    Ok(-(left * hv * right) / (w * lam) - outer(&x, &dx) / w)
}

/// Membership in the lower contour set of `v_n` through the anchor.
pub fn omega_contains<U: Utility + ?Sized>(u: &U, anchor: &Bundle, p: &PriceVector) -> Result<bool> {
    Ok(u.indirect_utility_normalized(p)? <= u.utility(anchor)? + MEMBERSHIP_SLACK)
}

/// Membership of a flat point in the set of rate/level pairs at which the
/// anchor is affordable.
pub fn gamma_contains<U: Utility + ?Sized>(u: &U, anchor: &Bundle, fp: &FlatPoint) -> Result<bool> {
    check_rates(u, &fp.q)?;
    let p = rates_price(&fp.q)?;
    Ok(p.dot(anchor) <= u.expenditure(&p, fp.u)? + MEMBERSHIP_SLACK)
}

/// `v_n((q,1) / (q,1)·c)`: the best level reachable from `c` at rates `q`.
pub fn k_c<U: Utility + ?Sized>(u: &U, anchor: &Bundle, q: &[f64]) -> Result<f64> {
    check_rates(u, q)?;
    let p = rates_price(q)?;
    let w = p.dot(anchor);
    u.indirect_utility_normalized(&p.scaled(1.0 / w)?)
}

/// The Pareto-optimal allocation in which every household faces rates `q`
/// and household `i` sits at `levels[i]`.
pub fn sample_pareto<U: Utility>(specs: &[U], q: &[f64], levels: &[f64]) -> Result<ParetoPoint> {
    if specs.len() != levels.len() {
        return Err(Error::DimensionMismatch {
            expected: specs.len(),
            found: levels.len(),
        });
    }
    let p = rates_price(q)?;
    let bundles = specs
        .iter()
        .zip(levels)
        .map(|(u, &lvl)| {
            check_rates(u, q)?;
            u.hicksian_demand(&p, lvl)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ParetoPoint {
        q: q.to_vec(),
        levels: levels.to_vec(),
        allocation: Allocation::new(bundles)?,
    })
}

fn require_pair<U>(specs: &[U], goods: usize) -> Result<()> {
    if specs.len() != 2 {
        return Err(Error::InvalidArgument(format!(
            "two households are required, got {}",
            specs.len()
        )));
    }
    if goods != 2 {
        return Err(Error::InvalidArgument(format!("two goods are required, got {goods}")));
    }
    Ok(())
}

fn log_mrs_gap<U: Utility>(specs: &[U], aggregate: &[f64], y1: [f64; 2]) -> Result<f64> {
    let a = Bundle::computed(y1.to_vec())?;
    let b = Bundle::computed(vec![aggregate[0] - y1[0], aggregate[1] - y1[1]])?;
    Ok(mrs(&specs[0], &a)?[0].ln() - mrs(&specs[1], &b)?[0].ln())
}

/// Equal-MRS allocations of a two-household, two-good box.
///
/// Household 1's holding of good 1 is swept over `grid_size` interior points
/// and its holding of good 2 is found by bisection; household 1's MRS rises
/// and household 2's falls in that coordinate, so the root is unique.
pub fn contract_curve_2x2<U: Utility>(specs: &[U], aggregate: &Bundle, grid_size: usize) -> Result<Vec<Allocation>> {
    require_pair(specs, aggregate.len())?;
    let mut out = Vec::with_capacity(grid_size);
    for k in 0..grid_size {
        let y11 = aggregate[0] * (k as f64 + 0.5) / grid_size as f64;
        let (mut lo, mut hi) = (aggregate[1] * 1e-12, aggregate[1] * (1.0 - 1e-12));
        let g_lo = log_mrs_gap(specs, aggregate, [y11, lo])?;
        let g_hi = log_mrs_gap(specs, aggregate, [y11, hi])?;
        if !(g_lo < 0.0 && g_hi > 0.0) {
            continue;
        }
        for _ in 0..BISECTION_ROUNDS {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if log_mrs_gap(specs, aggregate, [y11, mid])? < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let y12 = 0.5 * (lo + hi);
        out.push(Allocation::new(vec![
            Bundle::computed(vec![y11, y12])?,
            Bundle::computed(vec![aggregate[0] - y11, aggregate[1] - y12])?,
        ])?);
    }
    Ok(out)
}

fn excess_good1<U: Utility>(specs: &[U], endowments: &Allocation, q: f64) -> Result<f64> {
    let p = rates_price(&[q])?;
    let mut z = 0.0;
    for (u, y) in specs.iter().zip(endowments.bundles()) {
        z += crate::prefs::demand_at_wealth(u, y, &p)?[0] - y[0];
    }
    Ok(z)
}

/// Competitive equilibrium of a two-household, two-good exchange economy.
///
/// The rate is bracketed by the extreme marginal rates of the endowments and
/// found by bisection on aggregate excess demand for good 1.
pub fn walras_equilibrium_2x2<U: Utility>(specs: &[U], endowments: &Allocation) -> Result<(f64, Allocation)> {
    require_pair(specs, endowments.goods())?;
    let rates = specs
        .iter()
        .zip(endowments.bundles())
        .map(|(u, y)| u.inverse_normalized_demand(y))
        .collect::<Result<Vec<_>>>()?;
    let boxset = BoxSet::from_rates(&rates);
    let (mut lo, mut hi) = (boxset.lower(0, 1), boxset.upper(0, 1));
    if hi - lo <= 1e-14 * hi {
        return Ok((lo, endowments.clone()));
    }
    let scale = endowments.aggregate()[0];
    let z_lo = excess_good1(specs, endowments, lo)?;
    let z_hi = excess_good1(specs, endowments, hi)?;
    if z_lo < -1e-12 * scale || z_hi > 1e-12 * scale {
        return Err(Error::Bisection(format!(
            "excess demand does not change sign on [{lo}, {hi}]: {z_lo:e}, {z_hi:e}"
        )));
    }
    for _ in 0..BISECTION_ROUNDS {
        let mid = (lo * hi).sqrt();
        if mid <= lo || mid >= hi {
            break;
        }
        if excess_good1(specs, endowments, mid)? > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let q = (lo * hi).sqrt();
    let p = rates_price(&[q])?;
    let bundles = specs
        .iter()
        .zip(endowments.bundles())
        .map(|(u, y)| crate::prefs::demand_at_wealth(u, y, &p))
        .collect::<Result<Vec<_>>>()?;
    Ok((q, Allocation::new(bundles)?))
}
