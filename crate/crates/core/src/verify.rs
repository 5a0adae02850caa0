//! Randomized numeric checks of the identities and monotonicity results the
//! rest of the crate relies on.
//!
//! Each suite draws its inputs from a seeded counter-based stream, evaluates
//! a residual per draw and reports the number of draws exceeding the
//! tolerance together with the worst residual seen. Bundles and prices are
//! drawn log-uniformly from `[0.1, 10]` per coordinate.

use std::fmt;

use nalgebra::DMatrix;
use rand::Rng;
use serde::Serialize;

use crate::engine::{draw_price, draw_price_unrestricted, run_trajectory, PriorSpec, QPrior, SimConfig};
use crate::error::{Error, Result};
use crate::geometry::{self, d_inverse, d_map, jacobian_phi, jacobian_psi};
use crate::numdiff;
use crate::prefs::{check_attractive, check_sharp, demand_at_wealth, Bundle, PriceVector, Utility, UtilitySpec};
use crate::rng::CounterRng;
use crate::trade::{
    box_contains, has_trade, is_pareto_optimal, msr_extremes, mrs_gap, trade_direction, trade_interval_2x2, Allocation,
    Economy, SpeedPrior, PARETO_TOL,
};

pub const DEFAULT_DRAWS: usize = 1000;
pub const IDENTITY_TOL: f64 = 1e-8;
pub const JACOBIAN_TOL: f64 = 1e-5;
pub const TANGENCY_TOL: f64 = 1e-6;
pub const MONOTONE_SLACK: f64 = 1e-9;
pub const KS_TOL: f64 = 0.02;
pub const WELFARE_GAP: f64 = 1e-3;
pub const WELFARE_SHARE: f64 = 0.99;

const LOG_LO: f64 = -2.302_585_092_994_046; // ln 0.1
const LOG_HI: f64 = 2.302_585_092_994_046; // ln 10
const PATH_GRID: usize = 100;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckReport {
    pub check_name: String,
    pub draws: usize,
    pub failures: usize,
    pub worst_violation: f64,
    pub tolerance: f64,
    pub seed: u64,
    pub pass: bool,
}

impl CheckReport {
    fn new(check_name: impl Into<String>, seed: u64, tolerance: f64) -> Self {
        Self {
            check_name: check_name.into(),
            draws: 0,
            failures: 0,
            worst_violation: 0.0,
            tolerance,
            seed,
            pass: true,
        }
    }

    /// Records one draw whose residual is `violation`.
    fn record(&mut self, violation: f64) {
        self.draws += 1;
        let v = if violation.is_nan() { f64::INFINITY } else { violation };
        self.worst_violation = self.worst_violation.max(v);
        if v > self.tolerance {
            self.failures += 1;
        }
        self.pass = self.failures == 0;
    }

    fn record_ok(&mut self, ok: bool) {
        self.record(if ok { 0.0 } else { f64::INFINITY });
    }
}

impl fmt::Display for CheckReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {} draws={} failures={} worst={:.3e} tol={:.0e} seed={}",
            if self.pass { "PASS" } else { "FAIL" },
            self.check_name,
            self.draws,
            self.failures,
            self.worst_violation,
            self.tolerance,
            self.seed
        )
    }
}

/// A utility whose demand is deliberately wrong by a constant factor, used
/// to confirm the suites can fail.
pub struct Corrupted<U> {
    inner: U,
    factor: f64,
}

impl<U: Utility> Corrupted<U> {
    pub fn new(inner: U, factor: f64) -> Self {
        Self { inner, factor }
    }
}

impl<U: Utility> Utility for Corrupted<U> {
    fn goods(&self) -> usize {
        self.inner.goods()
    }
    fn utility(&self, c: &Bundle) -> Result<f64> {
        self.inner.utility(c)
    }
    fn gradient(&self, c: &Bundle) -> Result<Vec<f64>> {
        self.inner.gradient(c)
    }
    fn hessian(&self, c: &Bundle) -> Result<DMatrix<f64>> {
        self.inner.hessian(c)
    }
    fn normalized_demand(&self, p: &PriceVector) -> Result<Bundle> {
        let x = self.inner.normalized_demand(p)?;
        Bundle::new(x.iter().map(|v| v * self.factor).collect())
    }
    fn expenditure(&self, p: &PriceVector, target: f64) -> Result<f64> {
        self.inner.expenditure(p, target)
    }
    fn level_floor(&self) -> f64 {
        self.inner.level_floor()
    }
}

/// Faults that can be injected into the bundled suites.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Fault {
    /// Every demand is scaled by 1.01.
    ScaledDemand,
}

impl std::str::FromStr for Fault {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "scaled_demand" | "scaled-demand" => Ok(Fault::ScaledDemand),
            other => Err(Error::InvalidArgument(format!("unknown fault {other:?}"))),
        }
    }
}

fn log_uniform<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Vec<f64> {
    (0..n).map(|_| (LOG_LO + rng.random::<f64>() * (LOG_HI - LOG_LO)).exp()).collect()
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}

fn max_abs(v: impl IntoIterator<Item = f64>) -> f64 {
    v.into_iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn vec_rel(a: &[f64], b: &[f64]) -> f64 {
    max_abs(a.iter().zip(b).map(|(x, y)| x - y)) / max_abs(b.iter().copied()).max(1e-300)
}

fn stream(seed: u64, lane: u64) -> CounterRng {
    CounterRng::new(seed, lane)
}

/// The demand identities: budget exhaustion, the Euler-type identity of the
/// demand Jacobian, the envelope identities of `v_n`, Hicksian/Marshallian
/// duality, and the inverse-demand and `d`-map roundtrips.
pub fn identity_suite<U: Utility + ?Sized>(u: &U, name: &str, draws: usize, seed: u64) -> CheckReport {
    let mut report = CheckReport::new(format!("identity/{name}"), seed, IDENTITY_TOL);
    let mut rng = stream(seed, 1);
    let l = u.goods();
    for d in 0..draws {
        rng.set_step(d as u64);
        let p = PriceVector::new(log_uniform(&mut rng, l)).expect("positive");
        let c = Bundle::new(log_uniform(&mut rng, l)).expect("positive");
        report.record(identity_residual(u, &p, &c).unwrap_or(f64::INFINITY));
    }
    report
}

/// Five-point Jacobian in log coordinates, mapped back to `∂f/∂x`; keeps
/// the relative step uniform when coordinates span several decades.
fn log_jacobian5(mut f: impl FnMut(&[f64]) -> Vec<f64>, x: &[f64]) -> Vec<Vec<f64>> {
    let s: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let mut j = numdiff::jacobian5(|t| f(&t.iter().map(|v| v.exp()).collect::<Vec<_>>()), &s, 1e-3);
    for row in j.iter_mut() {
        for (k, v) in row.iter_mut().enumerate() {
            *v /= x[k];
        }
    }
    j
}

fn identity_residual<U: Utility + ?Sized>(u: &U, p: &PriceVector, c: &Bundle) -> Result<f64> {
    let x = u.normalized_demand(p)?;
    let lam = u.lambda_n(p)?;
    let vn = u.indirect_utility_normalized(p)?;
    let mut worst: f64 = 0.0;

    // p · x_n(p) = 1
    worst = worst.max((p.dot(&x) - 1.0).abs());

    // p J x_n(p) = −x_n(p)
    let jx = log_jacobian5(
        |q| u.normalized_demand(&PriceVector::new(q.to_vec()).expect("positive")).map_or_else(|_| vec![f64::NAN; q.len()], Bundle::into_vec),
        p,
    );
    let pj: Vec<f64> = (0..p.len()).map(|k| (0..p.len()).map(|i| p[i] * jx[i][k]).sum()).collect();
    let neg_x: Vec<f64> = x.iter().map(|v| -v).collect();
    worst = worst.max(vec_rel(&pj, &neg_x));

    // λ_n(p) = ∇u(x_n(p)) · x_n(p), evaluated independently of `lambda_n`
    let g = u.gradient(&x)?;
    worst = worst.max(rel(g.iter().zip(x.iter()).map(|(a, b)| a * b).sum(), lam));

    // ∇v_n(p) = −λ_n(p) x_n(p) and ∇v_n(p) · p = −λ_n(p)
    let gv = log_jacobian5(
        |q| vec![u.indirect_utility_normalized(&PriceVector::new(q.to_vec()).expect("positive")).unwrap_or(f64::NAN)],
        p,
    )
    .remove(0);
    let target: Vec<f64> = x.iter().map(|v| -lam * v).collect();
    worst = worst.max(vec_rel(&gv, &target));
    worst = worst.max(rel(gv.iter().zip(p.iter()).map(|(a, b)| a * b).sum(), -lam));

    // x_n(p) = h(p, v_n(p)) and e(p, v_n(p)) = 1
    let h = u.hicksian_demand(p, vn)?;
    worst = worst.max(vec_rel(&h, &x));
    worst = worst.max((u.expenditure(p, vn)? - 1.0).abs());

    // h(p, u) reaches u at cost e(p, u)
    let level = u.utility(c)?;
    let hc = u.hicksian_demand(p, level)?;
    worst = worst.max((u.utility(&hc)? - level).abs() / level.abs().max(1.0));
    worst = worst.max(rel(p.dot(&hc), u.expenditure(p, level)?));

    // inverse-demand roundtrips
    let back = u.normalized_demand(&u.inverse_normalized_demand(c)?)?;
    worst = worst.max(vec_rel(&back, c));
    let back = u.inverse_normalized_demand(&x)?;
    worst = worst.max(vec_rel(&back, p));

    // d-map roundtrips
    let fp = d_inverse(u, p)?;
    worst = worst.max(vec_rel(&d_map(u, &fp)?, p));
    let flat = geometry::flatten(u, c)?;
    let again = d_inverse(u, &d_map(u, &flat)?)?;
    worst = worst.max(vec_rel(&again.q, &flat.q));
    worst = worst.max((again.u - flat.u).abs() / flat.u.abs().max(1.0));
    Ok(worst)
}

/// Closed-form Jacobians of the Hicksian and offer maps against finite
/// differences, plus their agreement where the anchor is demanded.
pub fn jacobian_suite<U: Utility + ?Sized>(u: &U, name: &str, draws: usize, seed: u64) -> (CheckReport, CheckReport) {
    let mut fd = CheckReport::new(format!("jacobian/{name}"), seed, JACOBIAN_TOL);
    let mut tangency = CheckReport::new(format!("jacobian_tangency/{name}"), seed, TANGENCY_TOL);
    let mut rng = stream(seed, 2);
    let l = u.goods();
    for d in 0..draws {
        rng.set_step(d as u64);
        let p = PriceVector::new(log_uniform(&mut rng, l)).expect("positive");
        let c = Bundle::new(log_uniform(&mut rng, l)).expect("positive");
        fd.record(jacobian_residual(u, &c, &p).unwrap_or(f64::INFINITY));
        let dev = u
            .inverse_normalized_demand(&c)
            .and_then(|pt| Ok((jacobian_phi(u, &c, &pt)? - jacobian_psi(u, &c, &pt)?).abs().max()));
        tangency.record(dev.unwrap_or(f64::INFINITY));
    }
    (fd, tangency)
}

fn matrix_rel(m: &DMatrix<f64>, fd: &[Vec<f64>]) -> f64 {
    let n = fd.len();
    let scale = max_abs(fd.iter().flatten().copied()).max(1e-300);
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for k in 0..n {
            worst = worst.max((m[(i, k)] - fd[i][k]).abs());
        }
    }
    worst / scale
}

fn jacobian_residual<U: Utility + ?Sized>(u: &U, c: &Bundle, p: &PriceVector) -> Result<f64> {
    let level = u.utility(c)?;
    let phi = |q: &[f64]| {
        PriceVector::new(q.to_vec())
            .and_then(|pv| u.hicksian_demand(&pv, level))
            .map_or_else(|_| vec![f64::NAN; q.len()], Bundle::into_vec)
    };
    let psi = |q: &[f64]| {
        PriceVector::new(q.to_vec())
            .and_then(|pv| demand_at_wealth(u, c, &pv))
            .map_or_else(|_| vec![f64::NAN; q.len()], Bundle::into_vec)
    };
    let fd_phi = log_jacobian5(phi, p);
    let fd_psi = log_jacobian5(psi, p);
    Ok(matrix_rel(&jacobian_phi(u, c, p)?, &fd_phi).max(matrix_rel(&jacobian_psi(u, c, p)?, &fd_psi)))
}

/// Sharpness and attractiveness at random `(y, p)`, all goods pairs.
pub fn predicate_suite<U: Utility + ?Sized>(u: &U, name: &str, draws: usize, seed: u64) -> CheckReport {
    let mut report = CheckReport::new(format!("predicates/{name}"), seed, 0.0);
    let mut rng = stream(seed, 3);
    let l = u.goods();
    for d in 0..draws {
        rng.set_step(d as u64);
        let y = Bundle::new(log_uniform(&mut rng, l)).expect("positive");
        let p = PriceVector::new(log_uniform(&mut rng, l)).expect("positive");
        let mut ok = check_sharp(u, &y, &p).unwrap_or(false);
        for i in 0..l {
            for j in 0..l {
                if i != j {
                    ok &= check_attractive(u, &y, &p, i, j).unwrap_or(false);
                }
            }
        }
        report.record_ok(ok);
    }
    report
}

/// A random allocation, price and admissible speed vector, built by choosing
/// the last household's bundle so that its trade offsets everyone else's.
pub fn random_joint_path<R: Rng + ?Sized>(e: &Economy, rng: &mut R) -> Result<(Allocation, PriceVector, Vec<f64>)> {
    let (h, l) = (e.len(), e.goods());
    for _ in 0..1000 {
        let mut p = log_uniform(rng, l);
        let last = p[l - 1];
        for v in p.iter_mut() {
            *v /= last;
        }
        let p = PriceVector::new(p)?;
        let mut sigma: Vec<f64> = (0..h).map(|_| 0.05 + 0.95 * rng.random::<f64>()).collect();
        let top = sigma.iter().copied().fold(0.0, f64::max);
        for s in sigma.iter_mut() {
            *s /= top;
        }
        let mut bundles: Vec<Bundle> = (0..h - 1)
            .map(|_| Bundle::new(log_uniform(rng, l)))
            .collect::<Result<_>>()?;
        let mut net = vec![0.0; l];
        for (k, y) in bundles.iter().enumerate() {
            let d = demand_at_wealth(e.utility(k), y, &p)?;
            for i in 0..l {
                net[i] += sigma[k] * (d[i] - y[i]);
            }
        }
        let wealth = p.dot(&log_uniform(rng, l));
        let target = e.utility(h - 1).normalized_demand(&p.scaled(1.0 / wealth)?)?;
        // Δ_last = −net/σ_last, y_last = target − Δ_last
        let y_last: Vec<f64> = (0..l).map(|i| target[i] + net[i] / sigma[h - 1]).collect();
        let floor = 1e-2 * y_last.iter().copied().fold(0.0, f64::max);
        if y_last.iter().all(|&v| v > floor) {
            bundles.push(Bundle::new(y_last)?);
            return Ok((Allocation::new(bundles)?, p, sigma));
        }
    }
    Err(Error::Sampling("could not build a random joint path".into()))
}

fn rate_matrix(e: &Economy, y: &Allocation) -> Result<Vec<PriceVector>> {
    (0..e.len()).map(|h| e.utility(h).inverse_normalized_demand(&y.bundles()[h])).collect()
}

fn path_state(e: &Economy, y: &Allocation, p: &PriceVector, sigma: &[f64], t: f64) -> Result<Allocation> {
    let bundles = (0..e.len())
        .map(|h| {
            let d = trade_direction(e, y, p, h)?;
            Bundle::new(y.bundles()[h].iter().zip(&d).map(|(a, b)| a + t * sigma[h] * b).collect())
        })
        .collect::<Result<Vec<_>>>()?;
    Allocation::new(bundles)
}

/// Along random joint linear paths: each household's squared mispricing
/// `δ_ij` is non-increasing and vanishes at the end of a full-speed path,
/// the extreme ratios `m_ij`, `M_ij` move in the direction fixed by which
/// side of `p_i/p_j` households start on, the box shrinks when every pair has
/// a household starting below, and (2×2) the trade interval shrinks.
pub fn attraction_suite(e: &Economy, name: &str, draws: usize, seed: u64) -> CheckReport {
    let mut report = CheckReport::new(format!("attraction/{name}"), seed, MONOTONE_SLACK);
    let mut rng = stream(seed, 4);
    for d in 0..draws {
        rng.set_step(d as u64);
        let v = random_joint_path(e, &mut rng).and_then(|(y, p, sigma)| attraction_violation(e, &y, &p, &sigma));
        report.record(v.unwrap_or(f64::INFINITY));
    }
    report
}

fn attraction_violation(e: &Economy, y: &Allocation, p: &PriceVector, sigma: &[f64]) -> Result<f64> {
    let (hh, l) = (e.len(), e.goods());
    let states = (0..=PATH_GRID)
        .map(|k| path_state(e, y, p, sigma, k as f64 / PATH_GRID as f64))
        .collect::<Result<Vec<_>>>()?;
    let rates = states.iter().map(|s| rate_matrix(e, s)).collect::<Result<Vec<_>>>()?;
    let boxes = states.iter().map(|s| msr_extremes(e, s)).collect::<Result<Vec<_>>>()?;
    let mut worst: f64 = 0.0;
    // Scale-aware slack: the residuals below are relative to the size of
    // the quantity compared.
    let bump = |w: &mut f64, excess: f64, scale: f64| *w = w.max(excess / scale.max(1.0));

    let mut all_below = true;
    for i in 0..l {
        for j in 0..l {
            if i == j {
                continue;
            }
            let ratio = p[i] / p[j];
            for h in 0..hh {
                let delta: Vec<f64> = rates.iter().map(|r| (r[h][i] / r[h][j] - ratio).powi(2)).collect();
                let scale = delta[0].max(ratio * ratio);
                for w in delta.windows(2) {
                    bump(&mut worst, w[1] - w[0], scale);
                }
                if sigma[h] == 1.0 {
                    bump(&mut worst, delta[PATH_GRID], scale);
                }
            }
            let below = (0..hh).any(|h| rates[0][h][i] / rates[0][h][j] <= ratio);
            let above = (0..hh).any(|h| ratio <= rates[0][h][i] / rates[0][h][j]);
            all_below &= below;
            for w in boxes.windows(2) {
                let (m0, m1) = (w[0].lower(i, j), w[1].lower(i, j));
                let (big0, big1) = (w[0].upper(i, j), w[1].upper(i, j));
                bump(&mut worst, if below { m0 - m1 } else { m1 - m0 }, m0);
                bump(&mut worst, if above { big1 - big0 } else { big0 - big1 }, big0);
            }
        }
    }
    if all_below {
        for w in boxes.windows(2) {
            for i in 0..l {
                for j in 0..l {
                    if i != j {
                        bump(&mut worst, w[0].lower(i, j) - w[1].lower(i, j), w[0].lower(i, j));
                        bump(&mut worst, w[1].upper(i, j) - w[0].upper(i, j), w[0].upper(i, j));
                    }
                }
            }
        }
    }
    if hh == 2 && l == 2 {
        let interval = |s: &Allocation| -> Result<(f64, f64)> {
            let a = geometry::mrs(e.utility(0), &s.bundles()[0])?[0];
            let b = geometry::mrs(e.utility(1), &s.bundles()[1])?[0];
            Ok((a.min(b), a.max(b)))
        };
        let ivs = states.iter().map(interval).collect::<Result<Vec<_>>>()?;
        for w in ivs.windows(2) {
            bump(&mut worst, w[0].0 - w[1].0, w[0].0);
            bump(&mut worst, w[1].1 - w[0].1, w[0].1);
        }
    }
    Ok(worst.max(0.0))
}

/// Largest gap between an empirical CDF of sorted data and `cdf`.
pub fn ks_one_sample(sorted: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let n = sorted.len() as f64;
    sorted
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).abs().max((f - (i + 1) as f64 / n).abs())
        })
        .fold(0.0, f64::max)
}

/// Largest gap between the empirical CDFs of two sorted samples.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> f64 {
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j, mut d) = (0, 0, 0.0f64);
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    d
}

fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|k| (lo.ln() + (hi.ln() - lo.ln()) * k as f64 / (n - 1) as f64).exp())
        .collect()
}

/// Trade-compatible rates on sweep grids all lie in the box set.
pub fn box_suite(seed: u64) -> Result<CheckReport> {
    let mut report = CheckReport::new("box_containment", seed, 0.0);
    let cd = UtilitySpec::cobb_douglas_log(vec![0.5, 0.5])?;
    let e = Economy::from_specs(vec![cd.clone(), cd])?;
    let y = Allocation::from_rows(vec![vec![2.0, 1.0], vec![1.0, 2.0]])?;
    let b = msr_extremes(&e, &y)?;
    for q in log_grid(0.05, 20.0, 2000) {
        let traded = has_trade(&e, &y, &PriceVector::from_rates(&[q])?)?;
        report.record_ok(!traded || box_contains(&b, &[q])?);
    }
    let e = bundled_three_goods()?;
    let y = Allocation::from_rows(vec![vec![1.0, 2.0, 1.0], vec![2.0, 1.0, 1.0], vec![0.5, 0.5, 2.0]])?;
    let b = msr_extremes(&e, &y)?;
    let grid = log_grid(0.05, 20.0, 60);
    for &q1 in &grid {
        for &q2 in &grid {
            let q = [q1, q2];
            let traded = has_trade(&e, &y, &PriceVector::from_rates(&q)?)?;
            report.record_ok(!traded || box_contains(&b, &q)?);
        }
    }
    Ok(report)
}

/// Three households, three goods, CES and Cobb-Douglas mixed.
pub fn bundled_three_goods() -> Result<Economy> {
    Economy::from_specs(vec![
        UtilitySpec::ces(vec![0.2, 0.5, 0.3], 0.5)?,
        UtilitySpec::ces(vec![0.5, 0.2, 0.3], 0.5)?,
        UtilitySpec::cobb_douglas_log(vec![0.3, 0.3, 0.4])?,
    ])
}

/// Result of comparing the box-restricted and unrestricted price samplers.
#[derive(Clone, Debug, Serialize)]
pub struct LawComparison {
    /// Two-sample distance between unrestricted rejection draws and
    /// inverse-CDF draws on the exact interval.
    pub ks_rejection_vs_exact: f64,
    /// One-sample distance of the production sampler to the exact CDF.
    pub ks_sampler_vs_cdf: f64,
    pub report: CheckReport,
}

/// The price sampler's law at a fixed 2×2 state under a uniform-angle
/// prior, compared with direct sampling on the exact trade interval.
pub fn law_suite(samples: usize, seed: u64) -> Result<LawComparison> {
    let cd = UtilitySpec::cobb_douglas_log(vec![0.5, 0.5])?;
    let e = Economy::from_specs(vec![cd.clone(), cd])?;
    let y = Allocation::from_rows(vec![vec![2.0, 1.0], vec![1.0, 2.0]])?;
    let prior = PriorSpec::new(QPrior::UniformArc, SpeedPrior::UniformCube)?;
    let (lo, hi) = trade_interval_2x2(&e, &y)?.ok_or_else(|| Error::Sampling("no trade interval".into()))?;
    let (a, b) = (lo.atan(), hi.atan());

    let mut rng = stream(seed, 5);
    let mut rejected = Vec::with_capacity(samples);
    let mut exact = Vec::with_capacity(samples);
    let mut sampler = Vec::with_capacity(samples);
    let mut rng_exact = stream(seed, 6);
    let mut rng_sampler = stream(seed, 7);
    for k in 0..samples {
        rng.set_step(k as u64);
        rng_exact.set_step(k as u64);
        rng_sampler.set_step(k as u64);
        rejected.push(draw_price_unrestricted(&e, &y, &prior, &mut rng)?[0]);
        exact.push((a + rng_exact.random::<f64>() * (b - a)).tan());
        sampler.push(draw_price(&e, &y, &prior, &mut rng_sampler)?[0]);
    }
    for v in [&mut rejected, &mut exact, &mut sampler] {
        v.sort_by(f64::total_cmp);
    }
    let two = ks_two_sample(&rejected, &exact);
    let one = ks_one_sample(&sampler, |q| (q.atan() - a) / (b - a));
    let mut report = CheckReport::new("sampler_law", seed, KS_TOL);
    report.record(two);
    report.record(one);
    report.draws = samples;
    Ok(LawComparison {
        ks_rejection_vs_exact: two,
        ks_sampler_vs_cdf: one,
        report,
    })
}

/// Share of maximum-speed runs whose marginal rates agree to within 1e-3,
/// and agreement of the two Pareto tests on random 2×2 allocations.
pub fn welfare_suite(cfg: &SimConfig, name: &str) -> Result<CheckReport> {
    if cfg.economy.len() != 2 || cfg.economy.goods() != 2 {
        return Err(Error::InvalidArgument("the welfare check needs a 2×2 economy".into()));
    }
    if cfg.prior.s_prior != SpeedPrior::MaxSpeed {
        return Err(Error::InvalidArgument("the welfare check needs maximum speeds".into()));
    }
    let mut report = CheckReport::new(format!("welfare/{name}"), cfg.master_seed, 1.0 - WELFARE_SHARE);
    let mut converged = 0usize;
    for run in 0..cfg.runs as u64 {
        let t = run_trajectory(cfg, run)?;
        if mrs_gap(&cfg.economy, t.terminal_state())? < WELFARE_GAP {
            converged += 1;
        }
    }
    let share_missing = 1.0 - converged as f64 / cfg.runs as f64;
    report.record(share_missing);
    report.draws = cfg.runs;

    let mut rng = stream(cfg.master_seed, 8);
    let e = &cfg.economy;
    for d in 0..1000u64 {
        rng.set_step(d);
        let y = if d % 2 == 0 {
            Allocation::from_rows(vec![log_uniform(&mut rng, 2), log_uniform(&mut rng, 2)])?
        } else {
            let q = log_uniform(&mut rng, 1);
            let levels: Vec<f64> = (0..2)
                .map(|h| e.utility(h).utility(&Bundle::new(log_uniform(&mut rng, 2))?))
                .collect::<Result<_>>()?;
            geometry::sample_pareto(&e.specs(), &q, &levels)?.allocation
        };
        let agree = is_pareto_optimal(e, &y, PARETO_TOL)? == trade_interval_2x2(e, &y)?.is_none();
        report.draws += 1;
        if !agree {
            report.failures += 1;
            report.worst_violation = f64::INFINITY;
        }
    }
    report.pass = report.failures == 0;
    Ok(report)
}

/// The bundled suites, in a fixed order, optionally filtered by substring.
pub fn run_suites(filter: Option<&str>, seed: u64, fault: Option<Fault>) -> Result<Vec<CheckReport>> {
    let keep = |name: &str| filter.is_none_or(|f| name.contains(f));
    let cd3 = UtilitySpec::cobb_douglas_log(vec![0.2, 0.3, 0.5])?;
    let ces3 = UtilitySpec::ces(vec![0.3, 0.3, 0.4], 0.5)?;
    let families: [(&str, &UtilitySpec); 2] = [("cobb_douglas_log", &cd3), ("ces", &ces3)];
    let factor = match fault {
        Some(Fault::ScaledDemand) => 1.01,
        None => 1.0,
    };
    let mut out = Vec::new();
    for (name, u) in families {
        let u = Corrupted::new(u, factor);
        if keep(&format!("identity/{name}")) {
            out.push(identity_suite(&u, name, DEFAULT_DRAWS, seed));
        }
        if keep(&format!("jacobian/{name}")) || keep(&format!("jacobian_tangency/{name}")) {
            let (a, b) = jacobian_suite(&u, name, DEFAULT_DRAWS, seed);
            out.push(a);
            out.push(b);
        }
        if keep(&format!("predicates/{name}")) {
            out.push(predicate_suite(&u, name, DEFAULT_DRAWS, seed));
        }
    }
    if keep("attraction/cd_2x2") {
        let cd = UtilitySpec::cobb_douglas_log(vec![0.5, 0.5])?;
        let e = Economy::from_specs(vec![cd.clone(), UtilitySpec::cobb_douglas_log(vec![0.3, 0.7])?])?;
        out.push(attraction_suite(&e, "cd_2x2", DEFAULT_DRAWS, seed));
    }
    if keep("attraction/ces_2x3") {
        let e = Economy::from_specs(vec![
            UtilitySpec::ces(vec![0.2, 0.5, 0.3], 0.5)?,
            UtilitySpec::ces(vec![0.4, 0.2, 0.4], 0.5)?,
        ])?;
        out.push(attraction_suite(&e, "ces_2x3", DEFAULT_DRAWS, seed));
    }
    if keep("box_containment") {
        out.push(box_suite(seed)?);
    }
    if keep("sampler_law") {
        out.push(law_suite(10_000, seed)?.report);
    }
    for (name, spec) in [
        ("cobb_douglas_log", UtilitySpec::cobb_douglas_log(vec![0.5, 0.5])?),
        ("ces", UtilitySpec::ces(vec![0.5, 0.5], 0.5)?),
    ] {
        let label = format!("welfare/{name}");
        if keep(&label) {
            let mut cfg = SimConfig::new(
                Economy::from_specs(vec![spec.clone(), spec])?,
                Allocation::from_rows(vec![vec![2.0, 1.0], vec![1.0, 2.0]])?,
                PriorSpec::new(QPrior::UniformArc, SpeedPrior::MaxSpeed)?,
            );
            cfg.runs = DEFAULT_DRAWS;
            cfg.max_steps = 200;
            cfg.master_seed = seed;
            out.push(welfare_suite(&cfg, name)?);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn corrupted_demand_fails_every_draw() {
        let u = Corrupted::new(UtilitySpec::cobb_douglas_log(vec![0.5, 0.5]).unwrap(), 1.01);
        let r = identity_suite(&u, "corrupted", 50, 1);
        assert!(!r.pass);
        assert_eq!(r.failures, r.draws);
    }

    #[test]
    fn small_suites_pass() {
        let u = UtilitySpec::ces(vec![0.3, 0.7], 0.4).unwrap();
        assert!(identity_suite(&u, "ces", 50, 2).pass);
        let (a, b) = jacobian_suite(&u, "ces", 20, 2);
        assert!(a.pass, "{a}");
        assert!(b.pass, "{b}");
        assert!(predicate_suite(&u, "ces", 50, 2).pass);
    }

    #[test]
    fn joint_paths_are_admissible() {
        let e = bundled_three_goods().unwrap();
        let mut rng = stream(0, 0);
        for _ in 0..20 {
            let (y, p, sigma) = random_joint_path(&e, &mut rng).unwrap();
            let s = crate::trade::SpeedVector::new(sigma).unwrap();
            assert!(crate::trade::speed_contains(&e, &y, &p, &s).unwrap());
        }
    }

    #[test]
    fn ks_distances() {
        let a: Vec<f64> = (0..100).map(|i| i as f64 / 100.0).collect();
        assert!(ks_one_sample(&a, |x| x) <= 0.01 + 1e-12);
        assert_eq!(ks_two_sample(&a, &a), 0.0);
        let b: Vec<f64> = a.iter().map(|x| x + 0.5).collect();
        assert!((ks_two_sample(&a, &b) - 0.51).abs() < 1e-12);
    }
}
