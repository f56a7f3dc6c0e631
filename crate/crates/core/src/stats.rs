//! Empirical distributions, Kolmogorov–Smirnov distances, star discrepancy,
//! histograms and seeded random streams.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::Serialize;

use crate::error::{Error, Result};

/// Sorted sample set with its empirical CDF.
#[derive(Clone, Debug, PartialEq)]
pub struct EmpiricalDist {
    samples: Vec<f64>,
}

impl EmpiricalDist {
    pub fn new(mut samples: Vec<f64>) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::invalid("empirical distribution needs at least one sample"));
        }
        if samples.iter().any(|x| x.is_nan()) {
            return Err(Error::invalid("samples contain NaN"));
        }
        samples.sort_by(f64::total_cmp);
        Ok(EmpiricalDist { samples })
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn min(&self) -> f64 {
        self.samples[0]
    }

    pub fn max(&self) -> f64 {
        self.samples[self.samples.len() - 1]
    }

    pub fn mean(&self) -> f64 {
        self.samples.iter().sum::<f64>() / self.len() as f64
    }

    /// Right-continuous ECDF: fraction of samples `<= x`.
    pub fn cdf(&self, x: f64) -> f64 {
        self.samples.partition_point(|&s| s <= x) as f64 / self.len() as f64
    }

    /// Left limit of the ECDF: fraction of samples `< x`.
    pub fn cdf_left(&self, x: f64) -> f64 {
        self.samples.partition_point(|&s| s < x) as f64 / self.len() as f64
    }

    /// Merges two sorted sample sets.
    pub fn merge(&self, other: &EmpiricalDist) -> EmpiricalDist {
        let mut out = Vec::with_capacity(self.len() + other.len());
        let (mut i, mut j) = (0, 0);
        while i < self.len() && j < other.len() {
            if self.samples[i] <= other.samples[j] {
                out.push(self.samples[i]);
                i += 1;
            } else {
                out.push(other.samples[j]);
                j += 1;
            }
        }
        out.extend_from_slice(&self.samples[i..]);
        out.extend_from_slice(&other.samples[j..]);
        EmpiricalDist { samples: out }
    }
}

/// Builds the empirical distribution of `samples`.
pub fn ecdf(samples: impl Into<Vec<f64>>) -> Result<EmpiricalDist> {
    EmpiricalDist::new(samples.into())
}

/// Distinct sample values, each with the ECDF value just after it.
fn steps(d: &EmpiricalDist) -> impl Iterator<Item = (f64, f64)> + '_ {
    let n = d.len() as f64;
    let s = &d.samples;
    (0..s.len())
        .filter(move |&i| i + 1 == s.len() || s[i + 1] != s[i])
        .map(move |i| (s[i], (i + 1) as f64 / n))
}

/// `sup_x |ECDF(x) − F(x)|` against a CDF `F`.
///
/// The step function is compared at every sample value from both sides: the
/// ECDF after the jump against `F(x)`, and the ECDF before the jump against
/// `F` one ulp to the left. For continuous `F` the latter is the usual left
/// limit; for a step-function `F` it makes the distance of an ECDF to itself
/// exactly zero.
pub fn ks_distance<F: Fn(f64) -> f64>(d: &EmpiricalDist, cdf: F) -> f64 {
    let mut before = 0.0;
    let mut sup: f64 = 0.0;
    for (x, after) in steps(d) {
        sup = sup.max((after - cdf(x)).abs());
        sup = sup.max((before - cdf(x.next_down())).abs());
        before = after;
    }
    sup
}

/// Two-sample Kolmogorov–Smirnov statistic.
pub fn ks_two_sample(a: &EmpiricalDist, b: &EmpiricalDist) -> f64 {
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (sa, sb) = (&a.samples, &b.samples);
    let (mut i, mut j) = (0, 0);
    let mut sup: f64 = 0.0;
    while i < sa.len() && j < sb.len() {
        let x = sa[i].min(sb[j]);
        while i < sa.len() && sa[i] <= x {
            i += 1;
        }
        while j < sb.len() && sb[j] <= x {
            j += 1;
        }
        sup = sup.max((i as f64 / na - j as f64 / nb).abs());
    }
    sup
}

/// Star discrepancy `sup_{x ∈ [0,1]} |ECDF(x) − x|` of a sample in `[0, 1]`.
pub fn discrepancy(d: &EmpiricalDist) -> f64 {
    ks_distance(d, |x| x.clamp(0.0, 1.0))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Histogram {
    /// `bins + 1` increasing edges.
    pub edges: Vec<f64>,
    pub counts: Vec<usize>,
    pub total: usize,
}

impl Histogram {
    /// Fraction of the samples falling in each bin.
    pub fn masses(&self) -> Vec<f64> {
        self.counts
            .iter()
            .map(|&c| c as f64 / self.total as f64)
            .collect()
    }

    /// Mass divided by bin width.
    pub fn densities(&self) -> Vec<f64> {
        self.masses()
            .iter()
            .zip(self.edges.windows(2))
            .map(|(m, w)| m / (w[1] - w[0]))
            .collect()
    }
}

/// Equal-width histogram over `[lo, hi]`; samples outside are clamped into the
/// end bins so that masses always sum to one.
pub fn histogram_range(d: &EmpiricalDist, bins: usize, lo: f64, hi: f64) -> Result<Histogram> {
    if bins == 0 {
        return Err(Error::invalid("histogram needs at least one bin"));
    }
    if !(hi > lo) {
        return Err(Error::invalid("histogram range must be non-empty"));
    }
    let width = (hi - lo) / bins as f64;
    let edges = (0..=bins).map(|i| lo + width * i as f64).collect();
    let mut counts = vec![0usize; bins];
    for &x in &d.samples {
        let idx = ((x - lo) / width).floor();
        let idx = if idx < 0.0 { 0 } else { (idx as usize).min(bins - 1) };
        counts[idx] += 1;
    }
    Ok(Histogram { edges, counts, total: d.len() })
}

/// Equal-width histogram spanning the sample range.
pub fn histogram(d: &EmpiricalDist, bins: usize) -> Result<Histogram> {
    let (lo, hi) = (d.min(), d.max());
    let hi = if hi > lo { hi } else { lo + 1.0 };
    histogram_range(d, bins, lo, hi)
}

/// Deterministic random stream. Streams split from the same seed are
/// independent ChaCha20 streams.
#[derive(Clone, Debug)]
pub struct SeededRng {
    inner: ChaCha20Rng,
    seed: u64,
}

impl SeededRng {
    pub const ALGORITHM: &'static str = "chacha20";

    pub fn new(seed: u64) -> Self {
        SeededRng { inner: ChaCha20Rng::seed_from_u64(seed), seed }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Independent stream `id` derived from this generator's seed.
    pub fn split(&self, id: u64) -> SeededRng {
        let mut inner = ChaCha20Rng::seed_from_u64(self.seed);
        inner.set_stream(id.wrapping_add(1));
        SeededRng { inner, seed: self.seed }
    }

    /// Uniform in `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        self.inner.random::<f64>()
    }

    /// Uniform in `[lo, hi)`.
    pub fn uniform_in(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }

    pub fn below(&mut self, n: u64) -> u64 {
        self.inner.random_range(0..n)
    }
}

impl RngCore for SeededRng {
    fn next_u32(&mut self) -> u32 {
        self.inner.next_u32()
    }
    fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }
    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.inner.fill_bytes(dst)
    }
}

/// Seeded generator with the documented algorithm.
pub fn rng(seed: u64) -> SeededRng {
    SeededRng::new(seed)
}

/// Pearson correlation of two equally long samples.
pub fn correlation(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len().min(y.len()) as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    sxy / (sxx * syy).sqrt()
}
