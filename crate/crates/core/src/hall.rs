//! Hall's limiting gap distribution.
//!
//! With `Ω = {(u,v) ∈ [0,1]²: u + v > 1}` and
//! `A_{a,b} = {(u,v) ∈ Ω: 1/b < uv < 1/a}`, the limiting proportion of gaps in
//! `(a, b)` is `2|A_{a,b}|` for lattice slope gaps (unnormalized scaling) and
//! `2|A_{κa,κb}|`, `κ = π²/3`, for Farey gaps normalized by `N(Q)`.
//!
//! Everything reduces to the tail area `F(c) = |{(u,v) ∈ Ω: uv > c}|`:
//!
//! * `c ≥ 1/4`: the hyperbola stays above `u + v = 1`, so
//!   `F(c) = 1 − c + c ln c`;
//! * `c < 1/4`: with `r = √(1 − 4c)` and `L = ln(2/(1 + r))`,
//!   `F(c) = 1 − c − r/2 − 2cL`.
//!
//! The CDF of the unnormalized law is `2F(1/t)`; its density is `0` below 1,
//! `2 ln t / t²` on `(1, 4]` and `4L/t²` (with `c = 1/t`) above 4.

use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{Error, Result};

/// `π²/3`, the ratio between the two scalings.
pub const KAPPA: f64 = PI * PI / 3.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scaling {
    /// Gaps of slopes in the unit strip (`Q²`-normalized Farey gaps).
    Unnormalized,
    /// Farey gaps normalized by `N(Q)`.
    FareyNormalized,
}

impl Scaling {
    fn factor(self) -> f64 {
        match self {
            Scaling::Unnormalized => 1.0,
            Scaling::FareyNormalized => KAPPA,
        }
    }
}

impl std::str::FromStr for Scaling {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "unnormalized" => Ok(Scaling::Unnormalized),
            "farey" | "farey-normalized" => Ok(Scaling::FareyNormalized),
            other => Err(Error::invalid(format!("unknown scaling '{other}'"))),
        }
    }
}

/// `ln(2/(1+r))` computed without cancellation for small `c`.
fn log_term(c: f64, r: f64) -> f64 {
    (4.0 * c / ((1.0 + r) * (1.0 + r))).ln_1p()
}

/// `|{(u,v) ∈ Ω: uv > c}|`.
pub fn tail_area(c: f64) -> f64 {
    if c <= 0.0 {
        0.5
    } else if c >= 1.0 {
        0.0
    } else if c >= 0.25 {
        1.0 - c + c * c.ln()
    } else {
        let r = (1.0 - 4.0 * c).sqrt();
        1.0 - c - 0.5 * r - 2.0 * c * log_term(c, r)
    }
}

/// Area of `A_{a,b}`, for `0 ≤ a < b ≤ ∞`.
pub fn region_area(a: f64, b: f64) -> Result<f64> {
    if a.is_nan() || b.is_nan() || a < 0.0 {
        return Err(Error::invalid("region bounds must satisfy 0 <= a"));
    }
    if a >= b {
        return Err(Error::invalid("region bounds must satisfy a < b"));
    }
    let lower = if b.is_infinite() { 0.0 } else { 1.0 / b };
    let upper = if a == 0.0 { f64::INFINITY } else { 1.0 / a };
    Ok(tail_area(lower) - tail_area(upper))
}

fn unnormalized_cdf(t: f64) -> f64 {
    if t <= 1.0 {
        0.0
    } else if t.is_infinite() {
        1.0
    } else {
        2.0 * tail_area(1.0 / t)
    }
}

fn unnormalized_pdf(t: f64) -> f64 {
    if t <= 1.0 || t.is_infinite() {
        0.0
    } else if t <= 4.0 {
        2.0 * t.ln() / (t * t)
    } else {
        let c = 1.0 / t;
        let r = (1.0 - 4.0 * c).sqrt();
        4.0 * log_term(c, r) / (t * t)
    }
}

pub fn hall_cdf(t: f64, scaling: Scaling) -> f64 {
    unnormalized_cdf(t * scaling.factor())
}

pub fn hall_pdf(t: f64, scaling: Scaling) -> f64 {
    let k = scaling.factor();
    k * unnormalized_pdf(t * k)
}

/// Points where the density is not differentiable: where the hyperbola enters
/// `Ω` and where it touches `u + v = 1`.
pub fn kinks(scaling: Scaling) -> (f64, f64) {
    let k = scaling.factor();
    (1.0 / k, 4.0 / k)
}

/// Hall's distribution in a fixed scaling.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct HallDist {
    pub scaling: Scaling,
}

impl HallDist {
    pub fn new(scaling: Scaling) -> Self {
        HallDist { scaling }
    }

    pub fn cdf(&self, t: f64) -> f64 {
        hall_cdf(t, self.scaling)
    }

    pub fn pdf(&self, t: f64) -> f64 {
        hall_pdf(t, self.scaling)
    }

    /// Limiting mass of `(a, b)`, i.e. `2|A_{a,b}|` in this scaling.
    pub fn mass(&self, a: f64, b: f64) -> Result<f64> {
        let k = self.scaling.factor();
        Ok(2.0 * region_area(a * k, b * k)?)
    }

    pub fn kinks(&self) -> (f64, f64) {
        kinks(self.scaling)
    }

    /// `grid` evenly spaced rows `(t, cdf, pdf)` on `[0, t_max]`.
    pub fn tabulate(&self, grid: usize, t_max: f64) -> Result<Vec<(f64, f64, f64)>> {
        if grid < 2 {
            return Err(Error::invalid("grid needs at least two points"));
        }
        if !(t_max > 0.0) || !t_max.is_finite() {
            return Err(Error::invalid("t_max must be positive and finite"));
        }
        let h = t_max / (grid - 1) as f64;
        Ok((0..grid)
            .map(|i| {
                let t = h * i as f64;
                (t, self.cdf(t), self.pdf(t))
            })
            .collect())
    }
}

/// Locates non-differentiable points of the density on `[lo, hi]` from
/// second differences on a grid of spacing `h`.
///
/// A grid point is flagged when `|Δ²pdf|/h²` exceeds `factor` times the
/// median over the grid; each run of flagged points reports its largest
/// entry.
pub fn detect_kinks(scaling: Scaling, lo: f64, hi: f64, h: f64, factor: f64) -> Vec<f64> {
    let n = ((hi - lo) / h).floor() as usize;
    if n < 3 {
        return Vec::new();
    }
    let pdf: Vec<f64> = (0..=n).map(|i| hall_pdf(lo + h * i as f64, scaling)).collect();
    let d2: Vec<f64> = (1..n)
        .map(|i| (pdf[i + 1] - 2.0 * pdf[i] + pdf[i - 1]).abs() / (h * h))
        .collect();
    let mut sorted = d2.clone();
    sorted.sort_by(f64::total_cmp);
    let median = sorted[sorted.len() / 2].max(f64::MIN_POSITIVE);
    let threshold = factor * median;

    let mut found = Vec::new();
    let mut run: Option<(usize, f64)> = None;
    for (j, &v) in d2.iter().enumerate() {
        if v > threshold {
            run = match run {
                Some((best, bv)) if bv >= v => Some((best, bv)),
                _ => Some((j, v)),
            };
        } else if let Some((best, _)) = run.take() {
            found.push(lo + h * (best + 1) as f64);
        }
    }
    if let Some((best, _)) = run {
        found.push(lo + h * (best + 1) as f64);
    }
    found
}
