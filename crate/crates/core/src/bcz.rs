//! The BCZ transversal, its return map and roof function.
//!
//! The transversal `Ω_η` of η-horizontally short lattices is parametrized by
//! `{(a, b): a, b ∈ (0, η], a + b > η}` via `(a, b) ↦ [[a, b], [0, 1/a]]·Z²`.
//! The first-return map of the horocycle flow is
//! `T_η(a, b) = (b, ⌊(η + a)/b⌋·b − a)` and the return time is `1/(ab)`.

use crate::error::{Error, Result};
use crate::scalar::{frac, FieldScalar, Fraction, Scalar};
use crate::stats::SeededRng;

/// A point `(a, b)` of the transversal at height `η`.
#[derive(Clone, Debug, PartialEq)]
pub struct TransversalPoint<T> {
    a: T,
    b: T,
    eta: T,
}

fn in_domain<T: Scalar>(a: &T, b: &T, eta: &T) -> bool {
    let zero = T::zero();
    *a > zero && *b > zero && a <= eta && b <= eta && a.clone() + b.clone() > *eta
}

impl<T: Scalar> TransversalPoint<T> {
    pub fn new(a: T, b: T, eta: T) -> Result<Self> {
        if !(eta > T::zero()) || !eta.is_finite() {
            return Err(Error::invalid("transversal height must be positive"));
        }
        if !in_domain(&a, &b, &eta) {
            return Err(Error::invalid(format!(
                "({a:?}, {b:?}) is outside the transversal at height {eta:?}"
            )));
        }
        Ok(TransversalPoint { a, b, eta })
    }

    pub fn a(&self) -> &T {
        &self.a
    }

    pub fn b(&self) -> &T {
        &self.b
    }

    pub fn eta(&self) -> &T {
        &self.eta
    }

    pub fn to_f64(&self) -> TransversalPoint<f64> {
        TransversalPoint { a: self.a.to_f64(), b: self.b.to_f64(), eta: self.eta.to_f64() }
    }

    pub fn is_valid(&self) -> bool {
        in_domain(&self.a, &self.b, &self.eta)
    }
}

/// One application of the return map.
pub fn bcz_step<T: FieldScalar>(p: &TransversalPoint<T>) -> Result<TransversalPoint<T>> {
    if !(p.b > T::zero()) {
        return Err(Error::invalid("b must be positive"));
    }
    let k = ((p.eta.clone() + p.a.clone()) / p.b.clone()).floor_i64();
    let next_b = T::from_i64(k) * p.b.clone() - p.a.clone();
    Ok(TransversalPoint { a: p.b.clone(), b: next_b, eta: p.eta.clone() })
}

/// Return time `1/(ab)`; independent of `η`.
pub fn roof<T: FieldScalar>(p: &TransversalPoint<T>) -> T {
    T::one() / (p.a.clone() * p.b.clone())
}

#[derive(Clone, Debug, PartialEq)]
pub struct BczOrbit<T> {
    /// `points[0]` is the start; `points[i+1] = T_η(points[i])`.
    pub points: Vec<TransversalPoint<T>>,
    /// `returns[i] = roof(points[i])`.
    pub returns: Vec<T>,
    /// Smallest `k ≥ 1` with `T_η^k(start) = start`, if it was seen.
    pub period: Option<usize>,
}

fn same_point<T: Scalar>(p: &TransversalPoint<T>, q: &TransversalPoint<T>) -> bool {
    if T::EXACT {
        p.a == q.a && p.b == q.b
    } else {
        (p.a.clone() - q.a.clone()).to_f64().abs() <= 1e-12
            && (p.b.clone() - q.b.clone()).to_f64().abs() <= 1e-12
    }
}

/// `n` steps of the return map from `p`. When `detect_period` is set the
/// orbit stops at the first return to `p` (the map is invertible, so an orbit
/// that recurs at all recurs to its start).
pub fn orbit<T: FieldScalar>(
    p: &TransversalPoint<T>,
    n: usize,
    detect_period: bool,
) -> Result<BczOrbit<T>> {
    let mut points = Vec::with_capacity(n.min(1 << 20));
    let mut returns = Vec::with_capacity(n.min(1 << 20));
    let mut cur = p.clone();
    let mut period = None;
    for i in 0..n {
        if !(cur.a.within_budget() && cur.b.within_budget()) {
            return Err(Error::Resource(format!(
                "exact orbit coordinates outgrew the arithmetic budget at step {i}"
            )));
        }
        let next = bcz_step(&cur)?;
        returns.push(roof(&cur));
        points.push(cur);
        if detect_period && same_point(&next, p) {
            period = Some(i + 1);
            break;
        }
        cur = next;
    }
    Ok(BczOrbit { points, returns, period })
}

/// Roof values only, without storing the points.
pub fn return_times<T: FieldScalar>(p: &TransversalPoint<T>, n: usize) -> Result<Vec<T>> {
    let mut out = Vec::with_capacity(n);
    let mut cur = p.clone();
    for _ in 0..n {
        out.push(roof(&cur));
        cur = bcz_step(&cur)?;
    }
    Ok(out)
}

/// Orbit start `(1/Q, 1)` at `η = 1` corresponding to the closed horocycle
/// through `Z²`; its period is `N(Q)`.
pub fn farey_orbit_start(q: u32) -> Result<TransversalPoint<Fraction>> {
    if q == 0 {
        return Err(Error::invalid("Farey level must be at least 1"));
    }
    TransversalPoint::new(frac(1, q as i64), frac(1, 1), frac(1, 1))
}

/// Moves `p` to height `eta_new` by the diagonal flow: coordinates scale by
/// `η_new/η`, return times by `(η/η_new)²`.
pub fn rescale<T: FieldScalar>(p: &TransversalPoint<T>, eta_new: T) -> Result<TransversalPoint<T>> {
    if !(eta_new > T::zero()) || !eta_new.is_finite() {
        return Err(Error::invalid("new height must be positive"));
    }
    let s = eta_new.clone() / p.eta.clone();
    Ok(TransversalPoint { a: p.a.clone() * s.clone(), b: p.b.clone() * s, eta: eta_new })
}

/// `n` independent samples of the invariant probability `(2/η²) da db`,
/// by rejection from the square `(0, η]²`.
pub fn sample_invariant_measure(eta: f64, n: usize, seed: u64) -> Result<Vec<TransversalPoint<f64>>> {
    if n == 0 {
        return Err(Error::invalid("need at least one sample"));
    }
    if !(eta > 0.0) || !eta.is_finite() {
        return Err(Error::invalid("transversal height must be positive"));
    }
    let mut rng = SeededRng::new(seed);
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        // 1 − U lies in (0, 1], matching the half-open domain.
        let a = eta * (1.0 - rng.uniform());
        let b = eta * (1.0 - rng.uniform());
        if a + b > eta {
            out.push(TransversalPoint { a, b, eta });
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::farey::{farey_raw_gaps, farey_size};
    use crate::stats::{ecdf, ks_two_sample};

    fn p(a: f64, b: f64) -> TransversalPoint<f64> {
        TransversalPoint::new(a, b, 1.0).unwrap()
    }

    #[test]
    fn domain_validation() {
        assert!(TransversalPoint::new(0.5, 0.5, 1.0).is_err());
        assert!(TransversalPoint::new(0.0, 1.0, 1.0).is_err());
        assert!(TransversalPoint::new(1.2, 0.5, 1.0).is_err());
        assert!(TransversalPoint::new(0.6, 0.6, -1.0).is_err());
        assert!(TransversalPoint::new(0.6, 0.6, 1.0).is_ok());
    }

    #[test]
    fn step_examples() {
        assert_eq!(bcz_step(&p(1.0, 1.0)).unwrap(), p(1.0, 1.0));
        assert_eq!(bcz_step(&p(0.25, 1.0)).unwrap(), p(1.0, 0.75));
        let q = bcz_step(&p(0.6, 0.5)).unwrap();
        assert!((q.a - 0.5).abs() < 1e-15 && (q.b - 0.9).abs() < 1e-15);
        assert!(q.is_valid());
    }

    #[test]
    fn step_rejects_nonpositive_b() {
        let bad = TransversalPoint { a: 0.5, b: 0.0, eta: 1.0 };
        assert!(bcz_step(&bad).is_err());
    }

    #[test]
    fn roof_examples() {
        assert_eq!(roof(&p(1.0, 1.0)), 1.0);
        assert_eq!(roof(&p(0.25, 1.0)), 4.0);
        for s in sample_invariant_measure(1.0, 100_000, 3).unwrap() {
            assert!(roof(&s) >= 1.0);
        }
    }

    #[test]
    fn farey_orbit_level_four() {
        let start = farey_orbit_start(4).unwrap();
        assert_eq!(start, TransversalPoint::new(frac(1, 4), frac(1, 1), frac(1, 1)).unwrap());
        let o = orbit(&start, 100, true).unwrap();
        assert_eq!(o.period, Some(6));
        let expected = [frac(4, 1), frac(4, 3), frac(8, 3), frac(8, 3), frac(4, 3), frac(4, 1)];
        assert_eq!(o.returns, expected);
    }

    #[test]
    fn trivial_orbits() {
        let o = orbit(&farey_orbit_start(1).unwrap(), 5, true).unwrap();
        assert_eq!(o.period, Some(1));
        let o = orbit(&p(1.0, 1.0), 5, true).unwrap();
        assert_eq!(o.period, Some(1));
        let o = orbit(&p(1.0, 1.0), 5, false).unwrap();
        assert_eq!((o.period, o.points.len()), (None, 5));
    }

    #[test]
    fn returns_match_farey_gaps() {
        for q in [7u32, 100] {
            let o = orbit(&farey_orbit_start(q).unwrap(), 1 << 20, true).unwrap();
            assert_eq!(o.period, Some(farey_size(q) as usize));
            let q2 = Fraction::from_integer((q * q) as i64);
            let expect: Vec<Fraction> = farey_raw_gaps(q).unwrap().into_iter().map(|g| g * q2).collect();
            assert_eq!(o.returns, expect);
        }
    }

    #[test]
    fn rescale_examples() {
        let one = p(1.0, 1.0);
        let two = rescale(&one, 2.0).unwrap();
        assert_eq!((two.a, two.b, two.eta), (2.0, 2.0, 2.0));
        assert_eq!(roof(&two), 0.25);
        assert_eq!(rescale(&two, 1.0).unwrap(), one);
        assert!(rescale(&one, 0.0).is_err());
    }

    #[test]
    fn rescale_conjugates_the_map() {
        let exact = TransversalPoint::new(frac(3, 7), frac(5, 6), frac(1, 1)).unwrap();
        let eta2 = frac(5, 2);
        let lhs = rescale(&bcz_step(&exact).unwrap(), eta2).unwrap();
        let rhs = bcz_step(&rescale(&exact, eta2).unwrap()).unwrap();
        assert_eq!(lhs, rhs);
        let back = roof(&rescale(&exact, eta2).unwrap()) * eta2 * eta2;
        assert_eq!(back, roof(&exact));

        for s in sample_invariant_measure(1.0, 10_000, 11).unwrap() {
            let lhs = rescale(&bcz_step(&s).unwrap(), 3.0).unwrap();
            let rhs = bcz_step(&rescale(&s, 3.0).unwrap()).unwrap();
            assert!((lhs.a - rhs.a).abs() < 1e-9 && (lhs.b - rhs.b).abs() < 1e-9);
        }
    }

    #[test]
    fn samples_lie_in_domain_and_measure_is_invariant() {
        let n = 200_000;
        let samples = sample_invariant_measure(1.0, n, 5).unwrap();
        assert!(samples.iter().all(|s| s.is_valid()));
        let pushed: Vec<_> = samples.iter().map(|s| bcz_step(s).unwrap()).collect();
        assert!(pushed.iter().all(|s| s.is_valid()));
        let before = ecdf(samples.iter().map(|s| s.a).collect::<Vec<_>>()).unwrap();
        let after = ecdf(pushed.iter().map(|s| s.a).collect::<Vec<_>>()).unwrap();
        assert!(ks_two_sample(&before, &after) <= 0.01);
        assert!(sample_invariant_measure(1.0, 0, 1).is_err());
    }

    #[test]
    fn exact_budget_guard() {
        let big = Fraction::new(1, crate::scalar::EXACT_COMPONENT_BOUND + 1);
        let one = Fraction::from_integer(1);
        let start = TransversalPoint::new(one - big * 2, big * 3, one).unwrap();
        let o = orbit(&start, 10, false);
        assert!(matches!(o, Err(Error::Resource(_))));
    }
}
