//! Summary statistics of terminal allocations.

use serde::Serialize;

use super::Terminal;
use crate::error::{Error, Result};
use crate::trade::{Allocation, Economy};

#[derive(Clone, Debug, PartialEq)]
pub struct RunOutcome {
    pub run: u64,
    /// Household 1's marginal rates at the terminal allocation.
    pub rates: Vec<f64>,
    pub terminal: Allocation,
    pub steps: usize,
    pub tag: Terminal,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Histogram {
    pub lo: f64,
    pub hi: f64,
    pub counts: Vec<usize>,
}

impl Histogram {
    /// Uniform bins over `[min, max]` of the data.
    pub fn build(xs: &[f64], bins: usize) -> Self {
        let lo = xs.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut h = Self {
            lo,
            hi,
            counts: vec![0; bins],
        };
        for &x in xs {
            let b = h.bin_of(x);
            h.counts[b] += 1;
        }
        h
    }

    pub fn bin_of(&self, x: f64) -> usize {
        let n = self.counts.len();
        if !(self.hi > self.lo) {
            return 0;
        }
        let b = ((x - self.lo) / (self.hi - self.lo) * n as f64).floor();
        (b.max(0.0) as usize).min(n - 1)
    }

    /// The fullest bin; ties go to the lowest index.
    pub fn mode_bin(&self) -> usize {
        let mut best = 0;
        for (i, &c) in self.counts.iter().enumerate() {
            if c > self.counts[best] {
                best = i;
            }
        }
        best
    }

    pub fn bin_center(&self, b: usize) -> f64 {
        let w = (self.hi - self.lo) / self.counts.len() as f64;
        self.lo + (b as f64 + 0.5) * w
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Band {
    pub lower_pct: f64,
    pub upper_pct: f64,
    pub lo: f64,
    pub hi: f64,
}

impl Band {
    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }
}

/// Linear-interpolation quantile of sorted data.
pub fn quantile(sorted: &[f64], prob: f64) -> f64 {
    let pos = prob * (sorted.len() - 1) as f64;
    let i = pos.floor() as usize;
    let j = (i + 1).min(sorted.len() - 1);
    sorted[i] + (pos - i as f64) * (sorted[j] - sorted[i])
}

#[derive(Clone, Debug)]
pub struct OutcomeDistribution {
    pub samples: Vec<RunOutcome>,
    /// What [`Self::projection`] measures.
    pub projection_label: String,
    /// One scalar per run locating its end point on the contract curve.
    pub projection: Vec<f64>,
    pub mean: f64,
    pub std: f64,
    /// Average terminal bundle of household 1.
    pub mean_bundle: Vec<f64>,
    pub histogram: Histogram,
    pub mode_bin: usize,
    pub mean_bin: usize,
    /// 5–95% and 25–75% bands, outermost first.
    pub bands: Vec<Band>,
}

impl OutcomeDistribution {
    /// Projects each end point to household 1's holding of good 1 when there
    /// are two goods and two households, and to household 1's first marginal
    /// rate otherwise.
    pub fn from_outcomes(e: &Economy, samples: Vec<RunOutcome>, bins: usize) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::InvalidArgument("no outcomes to summarize".into()));
        }
        let two_by_two = e.len() == 2 && e.goods() == 2;
        let projection: Vec<f64> = samples
            .iter()
            .map(|s| if two_by_two { s.terminal.bundles()[0][0] } else { s.rates[0] })
            .collect();
        let n = projection.len() as f64;
        let mean = projection.iter().sum::<f64>() / n;
        let std = (projection.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n).sqrt();
        let mut mean_bundle = vec![0.0; e.goods()];
        for s in &samples {
            for (m, x) in mean_bundle.iter_mut().zip(s.terminal.bundles()[0].iter()) {
                *m += x / n;
            }
        }
        let histogram = Histogram::build(&projection, bins);
        let mode_bin = histogram.mode_bin();
        let mean_bin = histogram.bin_of(mean);
        let mut sorted = projection.clone();
        sorted.sort_by(f64::total_cmp);
        let bands = [(0.05, 0.95), (0.25, 0.75)]
            .iter()
            .map(|&(a, b)| Band {
                lower_pct: 100.0 * a,
                upper_pct: 100.0 * b,
                lo: quantile(&sorted, a),
                hi: quantile(&sorted, b),
            })
            .collect();
        Ok(Self {
            samples,
            projection_label: if two_by_two { "h1_good1".into() } else { "h1_rate1".into() },
            projection,
            mean,
            std,
            mean_bundle,
            histogram,
            mode_bin,
            mean_bin,
            bands,
        })
    }

    /// The 5–95% band.
    pub fn band90(&self) -> &Band {
        &self.bands[0]
    }
}
