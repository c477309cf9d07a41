use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::odd_spec::Interval;

use super::features::Feature;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistogramSpec {
    pub feature: Feature,
    pub bins: usize,
    pub range: Interval,
}

impl HistogramSpec {
    pub fn new(feature: Feature, bins: usize, min: f64, max: f64) -> Self {
        Self { feature, bins, range: Interval::new(min, max) }
    }

    pub fn validate(&self) -> Result<()> {
        if self.bins < 2 {
            return Err(Error::Config(format!("{}: need at least 2 bins, got {}", self.feature, self.bins)));
        }
        if !(self.range.min.is_finite() && self.range.max.is_finite() && self.range.min < self.range.max) {
            return Err(Error::Config(format!("{}: degenerate range {:?}", self.feature, self.range)));
        }
        Ok(())
    }

    /// Bin index for `value`; the upper bound falls in the last bin.
    pub fn bin_of(&self, value: f64) -> Option<usize> {
        if !self.range.contains(value) {
            return None;
        }
        let t = (value - self.range.min) / self.range.width();
        Some(((t * self.bins as f64) as usize).min(self.bins - 1))
    }

    pub fn bin_edges(&self, bin: usize) -> (f64, f64) {
        let w = self.range.width() / self.bins as f64;
        let lo = self.range.min + w * bin as f64;
        let hi = if bin + 1 == self.bins { self.range.max } else { self.range.min + w * (bin + 1) as f64 };
        (lo, hi)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub counts: Vec<u64>,
    /// Finite values outside the range, not binned.
    pub out_of_range: u64,
}

impl Histogram {
    pub fn build(spec: &HistogramSpec, values: impl IntoIterator<Item = f64>) -> Self {
        let mut counts = vec![0u64; spec.bins];
        let mut out_of_range = 0;
        for v in values {
            match spec.bin_of(v) {
                Some(b) => counts[b] += 1,
                None => out_of_range += 1,
            }
        }
        Self { counts, out_of_range }
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn normalized(&self) -> Vec<f64> {
        let total = self.total() as f64;
        self.counts.iter().map(|&c| c as f64 / total).collect()
    }
}

fn kl_to_mixture(p: &[f64], m: &[f64]) -> f64 {
    p.iter()
        .zip(m)
        .filter(|(&pi, _)| pi > 0.0)
        .map(|(&pi, &mi)| pi * (pi / mi).ln())
        .sum()
}

/// Jensen–Shannon divergence in nats between two count vectors over the
/// same bins. Each vector is normalized first; empty bins are allowed.
pub fn jensen_shannon(p_counts: &[u64], q_counts: &[u64]) -> Result<f64> {
    if p_counts.len() != q_counts.len() {
        return Err(Error::InvalidInput(format!(
            "histograms have {} and {} bins",
            p_counts.len(),
            q_counts.len()
        )));
    }
    let total = |c: &[u64]| c.iter().sum::<u64>() as f64;
    let (tp, tq) = (total(p_counts), total(q_counts));
    if tp == 0.0 || tq == 0.0 {
        return Err(Error::InvalidInput("empty histogram".into()));
    }
    let p: Vec<f64> = p_counts.iter().map(|&c| c as f64 / tp).collect();
    let q: Vec<f64> = q_counts.iter().map(|&c| c as f64 / tq).collect();
    let m: Vec<f64> = p.iter().zip(&q).map(|(a, b)| 0.5 * (a + b)).collect();
    let jsd = 0.5 * kl_to_mixture(&p, &m) + 0.5 * kl_to_mixture(&q, &m);
    Ok(jsd.clamp(0.0, std::f64::consts::LN_2))
}
