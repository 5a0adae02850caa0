//! The commands behind the binary, usable directly from code.
//!
//! Output files:
//!
//! * `outcomes.csv`: `run, q1..q{L-1}, h1_g1..h{H}_g{L}, steps, terminal_tag`, one
//!   row per run in run order. `q` are household 1's terminal marginal rates.
//! * `summary.json`: see [`Summary`]; carries `schema_version`.
//! * `trajectories.csv` (with `--trace`): `run, step, q.., s_h1.., h1_g1..`, one
//!   row per visited state; the price and speed columns hold the trade that led
//!   to the state and are empty on step 0.
//! * `manifold.csv`: `kind, a1..aL, c1..cL, p1..pL, fq1..fq{L-1}, fu`: anchor,
//!   consumption-domain point, its normalized prices `x_n⁻¹(c)` and its
//!   flat-domain image.
//! * `example3.csv`: `j, count, mass, exact_mass, value, exact_value`.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use serde::Serialize;

use super::scenario::{Process, ScenarioFile};
use crate::engine::{example3_process, run_outcomes, Band, Example3Distribution, Histogram, OutcomeDistribution, RunOutcome, Terminal};
use crate::error::{Error, Result};
use crate::geometry::{self, sample_manifold, ManifoldKind};
use crate::prefs::{Bundle, ExpTransform, Utility, UtilitySpec};
use crate::verify::{run_suites, CheckReport, Fault};

pub const SCHEMA_VERSION: u32 = 1;

/// Command-line overrides of scenario values.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub runs: Option<usize>,
    pub seed: Option<u64>,
    pub max_steps: Option<usize>,
    pub pareto_tol: Option<f64>,
    pub trace: bool,
    pub out: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TerminalCounts {
    pub pareto: usize,
    pub step_cap: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LadderRow {
    pub j: usize,
    pub count: usize,
    pub mass: f64,
    pub exact_mass: f64,
    pub value: f64,
    pub exact_value: f64,
}

/// Contents of `summary.json`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Summary {
    pub schema_version: u32,
    pub scenario: String,
    pub runs: usize,
    pub master_seed: u64,
    pub max_steps: usize,
    pub pareto_tol: f64,
    /// What `mean`, `std`, the histogram and the bands describe.
    pub projection: String,
    pub mean: f64,
    pub std: f64,
    pub mean_bundle_h1: Vec<f64>,
    pub mode_bin: usize,
    pub mode_center: f64,
    pub mean_bin: usize,
    pub histogram: Histogram,
    pub bands: Vec<Band>,
    pub terminal_counts: TerminalCounts,
    pub mean_steps: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ladder: Option<Vec<LadderRow>>,
}

#[derive(Clone, Debug)]
pub struct SimulateReport {
    pub out_dir: PathBuf,
    pub summary: Summary,
    pub distribution: OutcomeDistribution,
}

fn fmt(x: f64) -> String {
    format!("{x}")
}

fn ladder_rows(d: &Example3Distribution) -> Vec<LadderRow> {
    d.outcomes
        .iter()
        .map(|o| LadderRow {
            j: o.j,
            count: o.count,
            mass: o.mass,
            exact_mass: o.exact_mass,
            value: o.value,
            exact_value: o.exact_value,
        })
        .collect()
}

/// Runs a scenario and writes `outcomes.csv`, `summary.json` and, when
/// tracing, `trajectories.csv` into the output directory.
pub fn cmd_simulate(scenario: &ScenarioFile, ov: &Overrides) -> Result<SimulateReport> {
    let mut cfg = scenario.to_config()?;
    if let Some(r) = ov.runs {
        cfg.runs = r;
    }
    if let Some(s) = ov.seed {
        cfg.master_seed = s;
    }
    if let Some(m) = ov.max_steps {
        cfg.max_steps = m;
    }
    if let Some(t) = ov.pareto_tol {
        cfg.pareto_tol = t;
    }
    cfg.validate().map_err(|e| Error::Config(e.to_string()))?;
    let trace = ov.trace || scenario.output.trace;
    let out_dir = ov
        .out
        .clone()
        .or_else(|| scenario.output.dir.clone())
        .unwrap_or_else(|| PathBuf::from("out").join(&scenario.name));

    let (outcomes, traces, ladder) = match scenario.process {
        Process::Sntp => {
            let rows: Mutex<Vec<(u64, Vec<Vec<String>>)>> = Mutex::new(Vec::new());
            let outcomes = run_outcomes(&cfg, |run, t| {
                if trace {
                    let mut lines = Vec::with_capacity(t.states.len());
                    for (step, state) in t.states.iter().enumerate() {
                        let mut line = vec![run.to_string(), step.to_string()];
                        if step == 0 {
                            line.extend(std::iter::repeat_n(String::new(), cfg.economy.goods() - 1));
                            line.extend(std::iter::repeat_n(String::new(), cfg.economy.len()));
                        } else {
                            line.extend(t.prices[step - 1].iter().copied().map(fmt));
                            line.extend(t.speeds[step - 1].iter().copied().map(fmt));
                        }
                        line.extend(state.bundles().iter().flat_map(|b| b.iter().copied().map(fmt)));
                        lines.push(line);
                    }
                    rows.lock().expect("trace lock").push((run, lines));
                }
            })?;
            let mut traces = rows.into_inner().expect("trace lock");
            traces.sort_by_key(|(run, _)| *run);
            (outcomes, trace.then_some(traces), None)
        }
        Process::Ladder => {
            if trace {
                return Err(Error::Config("tracing is not available for the ladder process".into()));
            }
            let d = example3_process(cfg.master_seed, cfg.runs)?;
            let outcomes = d
                .terminal
                .iter()
                .zip(&d.stops)
                .enumerate()
                .map(|(run, (y, &j))| {
                    Ok(RunOutcome {
                        run: run as u64,
                        rates: geometry::mrs(cfg.economy.utility(0), &y.bundles()[0])?,
                        terminal: y.clone(),
                        steps: j,
                        tag: Terminal::ParetoReached,
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            (outcomes, None, Some(ladder_rows(&d)))
        }
    };

    fs::create_dir_all(&out_dir)?;
    write_outcomes(&out_dir.join("outcomes.csv"), &outcomes, cfg.economy.len(), cfg.economy.goods())?;
    if let Some(traces) = &traces {
        write_trajectories(&out_dir.join("trajectories.csv"), traces, cfg.economy.len(), cfg.economy.goods())?;
    }

    let terminal_counts = TerminalCounts {
        pareto: outcomes.iter().filter(|o| o.tag == Terminal::ParetoReached).count(),
        step_cap: outcomes.iter().filter(|o| o.tag == Terminal::StepCap).count(),
    };
    let mean_steps = outcomes.iter().map(|o| o.steps as f64).sum::<f64>() / outcomes.len() as f64;
    let dist = OutcomeDistribution::from_outcomes(&cfg.economy, outcomes, cfg.bins)?;
    let summary = Summary {
        schema_version: SCHEMA_VERSION,
        scenario: scenario.name.clone(),
        runs: cfg.runs,
        master_seed: cfg.master_seed,
        max_steps: cfg.max_steps,
        pareto_tol: cfg.pareto_tol,
        projection: dist.projection_label.clone(),
        mean: dist.mean,
        std: dist.std,
        mean_bundle_h1: dist.mean_bundle.clone(),
        mode_bin: dist.mode_bin,
        mode_center: dist.histogram.bin_center(dist.mode_bin),
        mean_bin: dist.mean_bin,
        histogram: dist.histogram.clone(),
        bands: dist.bands.clone(),
        terminal_counts,
        mean_steps,
        ladder,
    };
    let mut f = fs::File::create(out_dir.join("summary.json"))?;
    serde_json::to_writer_pretty(&mut f, &summary)?;
    writeln!(f)?;
    Ok(SimulateReport {
        out_dir,
        summary,
        distribution: dist,
    })
}

fn bundle_headers(h: usize, l: usize) -> impl Iterator<Item = String> {
    (1..=h).flat_map(move |i| (1..=l).map(move |g| format!("h{i}_g{g}")))
}

fn write_outcomes(path: &Path, outcomes: &[RunOutcome], h: usize, l: usize) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let mut header = vec!["run".to_string()];
    header.extend((1..l).map(|i| format!("q{i}")));
    header.extend(bundle_headers(h, l));
    header.extend(["steps".to_string(), "terminal_tag".to_string()]);
    w.write_record(&header)?;
    for o in outcomes {
        let mut row = vec![o.run.to_string()];
        row.extend(o.rates.iter().copied().map(fmt));
        row.extend(o.terminal.bundles().iter().flat_map(|b| b.iter().copied().map(fmt)));
        row.push(o.steps.to_string());
        row.push(o.tag.tag().to_string());
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

fn write_trajectories(path: &Path, traces: &[(u64, Vec<Vec<String>>)], h: usize, l: usize) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let mut header = vec!["run".to_string(), "step".to_string()];
    header.extend((1..l).map(|i| format!("q{i}")));
    header.extend((1..=h).map(|i| format!("s_h{i}")));
    header.extend(bundle_headers(h, l));
    w.write_record(&header)?;
    for (_, lines) in traces {
        for line in lines {
            w.write_record(line)?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Runs the coin-toss ladder, prints the empirical and exact distribution
/// and, when `out` is given, writes `example3.csv` there.
pub fn cmd_example3(runs: usize, seed: u64, out: Option<&Path>) -> Result<Vec<LadderRow>> {
    let d = example3_process(seed, runs)?;
    let rows = ladder_rows(&d);
    println!("{:>3} {:>7} {:>8} {:>10} {:>14} {:>14}", "j", "count", "mass", "exact", "value", "exact_value");
    for r in &rows {
        println!(
            "{:>3} {:>7} {:>8.4} {:>10.6} {:>14.10} {:>14.10}",
            r.j, r.count, r.mass, r.exact_mass, r.value, r.exact_value
        );
    }
    if let Some(dir) = out {
        fs::create_dir_all(dir)?;
        let mut w = csv::Writer::from_path(dir.join("example3.csv"))?;
        w.write_record(["j", "count", "mass", "exact_mass", "value", "exact_value"])?;
        for r in &rows {
            w.write_record([
                r.j.to_string(),
                r.count.to_string(),
                fmt(r.mass),
                fmt(r.exact_mass),
                fmt(r.value),
                fmt(r.exact_value),
            ])?;
        }
        w.flush()?;
    }
    Ok(rows)
}

/// The utility handed to `manifold`: a plain spec, an exponential transform
/// of one, or `"product"` for `c₁c₂`.
pub fn parse_manifold_utility(text: &str) -> Result<Box<dyn Utility>> {
    if text.trim() == "product" {
        return Ok(Box::new(ExpTransform::product_form(vec![0.5, 0.5], 2.0)?));
    }
    #[derive(serde::Deserialize)]
    #[serde(deny_unknown_fields)]
    struct Transformed {
        base: UtilitySpec,
        exp_scale: f64,
    }
    if let Ok(t) = serde_json::from_str::<Transformed>(text) {
        return Ok(Box::new(ExpTransform::new(t.base, t.exp_scale)?));
    }
    let spec: UtilitySpec = serde_json::from_str(text).map_err(|e| Error::Config(format!("utility: {e}")))?;
    Ok(Box::new(spec))
}

/// `lo:hi:n`, `n` log-spaced values per rate coordinate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GridSpec {
    pub lo: f64,
    pub hi: f64,
    pub n: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self { lo: 0.1, hi: 10.0, n: 101 }
    }
}

impl std::str::FromStr for GridSpec {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Config(format!("grid must look like lo:hi:n, got {s:?}"));
        let parts: Vec<&str> = s.split(':').collect();
        if parts.len() != 3 {
            return Err(bad());
        }
        let lo: f64 = parts[0].parse().map_err(|_| bad())?;
        let hi: f64 = parts[1].parse().map_err(|_| bad())?;
        let n: usize = parts[2].parse().map_err(|_| bad())?;
        if !(lo > 0.0 && hi > lo && hi.is_finite() && n >= 2) {
            return Err(bad());
        }
        Ok(Self { lo, hi, n })
    }
}

impl GridSpec {
    pub fn values(&self) -> Vec<f64> {
        let (a, b) = (self.lo.ln(), self.hi.ln());
        (0..self.n)
            .map(|k| (a + (b - a) * k as f64 / (self.n - 1) as f64).exp())
            .collect()
    }

    /// The tensor grid in `dims` coordinates.
    pub fn points(&self, dims: usize) -> Vec<Vec<f64>> {
        let axis = self.values();
        let mut pts = vec![Vec::new()];
        for _ in 0..dims {
            pts = pts
                .into_iter()
                .flat_map(|p| {
                    axis.iter().map(move |&v| {
                        let mut q = p.clone();
                        q.push(v);
                        q
                    })
                })
                .collect();
        }
        pts
    }
}

/// Samples a manifold through `anchor` and writes `manifold.csv` into
/// `out`. Returns the number of points written.
pub fn cmd_manifold(u: &dyn Utility, anchor: &[f64], kind: ManifoldKind, grid: GridSpec, out: &Path) -> Result<usize> {
    let anchor = Bundle::new(anchor.to_vec()).map_err(|e| Error::Config(format!("anchor: {e}")))?;
    let l = u.goods();
    if anchor.len() != l {
        return Err(Error::Config(format!("anchor has {} coordinates, the utility has {l} goods", anchor.len())));
    }
    let sample = sample_manifold(u, kind, &anchor, &grid.points(l - 1))?;
    fs::create_dir_all(out)?;
    let mut w = csv::Writer::from_path(out.join("manifold.csv"))?;
    let mut header = vec!["kind".to_string()];
    for prefix in ["a", "c", "p"] {
        header.extend((1..=l).map(|i| format!("{prefix}{i}")));
    }
    header.extend((1..l).map(|i| format!("fq{i}")));
    header.push("fu".into());
    w.write_record(&header)?;
    for c in &sample.points {
        let p = u.inverse_normalized_demand(c)?;
        let f = geometry::flatten(u, c)?;
        let mut row = vec![kind.to_string()];
        row.extend(anchor.iter().copied().map(fmt));
        row.extend(c.iter().copied().map(fmt));
        row.extend(p.iter().copied().map(fmt));
        row.extend(f.q.iter().copied().map(fmt));
        row.push(fmt(f.u));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(sample.points.len())
}

/// Runs the verification suites, printing one record per check.
pub fn cmd_verify(filter: Option<&str>, seed: u64, fault: Option<Fault>) -> Result<Vec<CheckReport>> {
    let reports = run_suites(filter, seed, fault)?;
    if reports.is_empty() {
        return Err(Error::Config(format!("no suite matches filter {:?}", filter.unwrap_or(""))));
    }
    for r in &reports {
        println!("{r}");
    }
    Ok(reports)
}
