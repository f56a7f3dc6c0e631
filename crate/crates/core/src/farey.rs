//! Farey sequences `F(Q)`, their cardinality `N(Q)` and normalized gaps.

use num_traits::{ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::scalar::{frac, Fraction};

/// Default cap on the number of fractions materialized by [`farey_sequence`].
pub const DEFAULT_FAREY_BUDGET: u64 = 50_000_000;

/// The Farey sequence of level `Q`: reduced fractions in `[0, 1]` with
/// denominator at most `Q`, increasing from `0/1` to `1/1`.
#[derive(Clone, Debug, PartialEq)]
pub struct FareyLevel {
    q: u32,
    fractions: Vec<Fraction>,
}

impl FareyLevel {
    pub fn level(&self) -> u32 {
        self.q
    }

    pub fn fractions(&self) -> &[Fraction] {
        &self.fractions
    }

    /// `N(Q)`, the number of gaps (one less than the number of fractions).
    pub fn gap_count(&self) -> usize {
        self.fractions.len() - 1
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.fractions.iter().map(|f| f.to_f64().unwrap_or(f64::NAN)).collect()
    }
}

/// Streaming neighbour recurrence over `F(Q)`, yielding `(p, q)` pairs.
///
/// Uses `p'' = ⌊(Q + q)/q'⌋ p' − p` (and the same for denominators); the state
/// is two consecutive terms, so a level can be restarted from any neighbour pair.
#[derive(Clone, Debug)]
pub struct FareyIter {
    level: i64,
    prev: (i64, i64),
    cur: Option<(i64, i64)>,
    started: bool,
}

impl FareyIter {
    pub fn new(q: u32) -> Result<Self> {
        if q == 0 {
            return Err(Error::invalid("Farey level must be at least 1"));
        }
        Ok(FareyIter { level: q as i64, prev: (0, 1), cur: Some((1, q as i64)), started: false })
    }

    /// Resumes the recurrence from the consecutive pair `left < right`.
    pub fn from_neighbours(q: u32, left: (i64, i64), right: (i64, i64)) -> Result<Self> {
        if q == 0 {
            return Err(Error::invalid("Farey level must be at least 1"));
        }
        let qi = q as i64;
        if left.1 * right.0 - left.0 * right.1 != 1 || left.1 > qi || right.1 > qi || left.1 + right.1 <= qi {
            return Err(Error::invalid("pair is not consecutive in F(Q)"));
        }
        Ok(FareyIter { level: q as i64, prev: left, cur: Some(right), started: true })
    }
}

impl Iterator for FareyIter {
    type Item = (i64, i64);

    fn next(&mut self) -> Option<(i64, i64)> {
        if !self.started {
            self.started = true;
            return Some(self.prev);
        }
        let cur = self.cur?;
        if cur.0 > cur.1 {
            self.cur = None;
            return None;
        }
        let k = (self.level + self.prev.1) / cur.1;
        let next = (k * cur.0 - self.prev.0, k * cur.1 - self.prev.1);
        self.prev = cur;
        // (1,1) is the last term; the recurrence would continue past 1.
        self.cur = if cur == (1, 1) { None } else { Some(next) };
        Some(cur)
    }
}

fn totients(q: u32) -> Vec<u64> {
    let n = q as usize;
    let mut phi: Vec<u64> = (0..=n as u64).collect();
    for i in 2..=n {
        if phi[i] == i as u64 {
            for j in (i..=n).step_by(i) {
                phi[j] -= phi[j] / i as u64;
            }
        }
    }
    phi
}

/// `N(Q) = Σ_{i ≤ Q} φ(i)`.
pub fn farey_size(q: u32) -> u64 {
    totients(q).iter().skip(1).sum()
}

/// Materializes `F(Q)` using the default budget.
pub fn farey_sequence(q: u32) -> Result<FareyLevel> {
    farey_sequence_with_budget(q, DEFAULT_FAREY_BUDGET)
}

pub fn farey_sequence_with_budget(q: u32, budget: u64) -> Result<FareyLevel> {
    let n = farey_size(q.max(1));
    if q == 0 {
        return Err(Error::invalid("Farey level must be at least 1"));
    }
    if n + 1 > budget {
        return Err(Error::Resource(format!(
            "F({q}) has {} terms, budget is {budget}",
            n + 1
        )));
    }
    let fractions = FareyIter::new(q)?.map(|(p, d)| frac(p, d)).collect();
    Ok(FareyLevel { q, fractions })
}

/// The `N(Q)` normalized gaps `N(Q)/(q_i q_{i+1})`, exact.
pub fn farey_gaps(q: u32) -> Result<Vec<Fraction>> {
    let n = farey_size(q.max(1)) as i64;
    let mut it = FareyIter::new(q)?;
    let mut prev = it.next().expect("F(Q) is non-empty");
    let mut out = Vec::with_capacity(n as usize);
    for cur in it {
        out.push(frac(n, prev.1 * cur.1));
        prev = cur;
    }
    Ok(out)
}

/// Normalized gaps as floats, for the statistics layer.
pub fn farey_gaps_f64(q: u32) -> Result<Vec<f64>> {
    let n = farey_size(q.max(1)) as f64;
    let mut it = FareyIter::new(q)?;
    let mut prev = it.next().expect("F(Q) is non-empty");
    let mut out = Vec::new();
    for cur in it {
        out.push(n / (prev.1 as f64 * cur.1 as f64));
        prev = cur;
    }
    Ok(out)
}

/// Unnormalized gaps `γ_{i+1} − γ_i = 1/(q_i q_{i+1})`.
pub fn farey_raw_gaps(q: u32) -> Result<Vec<Fraction>> {
    let mut it = FareyIter::new(q)?;
    let mut prev = it.next().expect("F(Q) is non-empty");
    let mut out = Vec::new();
    for cur in it {
        out.push(frac(cur.0, cur.1) - frac(prev.0, prev.1));
        prev = cur;
    }
    Ok(out)
}

/// Sum of exact fractions; used to check telescoping identities.
pub fn exact_sum(xs: &[Fraction]) -> Fraction {
    xs.iter().fold(Fraction::zero(), |acc, x| acc + x)
}
