//! Affine lattices `M·Z² + v`: angle sets in balls, thinning-wedge counts,
//! their triangle renormalization, and the `√n mod 1` comparison sequence.
//!
//! The thinning wedge of radius `R` around direction `θ` has angular
//! half-width `σ/R²`, so the expected number of points stays of order one.
//! Rotating by `−θ` and applying `diag(1/R, R)` maps the wedge onto a
//! neighbourhood of the triangle `T(σ)` with vertices `(0,0)`, `(1, ±σ)`.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{angular_distance, diag_flow, rotation, BoundingBox, Mat2, Region, Vec2};
use crate::lattice::{lattice_box_points, UnimodularLattice};
use crate::pointcloud::{PointSystem, SearchLimits};
use crate::scalar::FieldScalar;
use crate::stats::{ecdf, EmpiricalDist, SeededRng};

/// The translate `M·Z² + v` of a unimodular lattice.
#[derive(Clone, Debug, PartialEq)]
pub struct AffineLattice<T> {
    lattice: UnimodularLattice<T>,
    shift: Vec2<T>,
}

impl<T: FieldScalar> AffineLattice<T> {
    /// `M·Z² + v`; the shift is reduced into the fundamental parallelogram of
    /// the reduced basis.
    pub fn new(basis: Mat2<T>, shift: Vec2<T>) -> Result<Self> {
        if !shift.x.is_finite() || !shift.y.is_finite() {
            return Err(Error::invalid("shift must be finite"));
        }
        let lattice = UnimodularLattice::new(basis, "affine")?;
        let shift = reduce_shift(lattice.reduced_basis(), &shift);
        Ok(AffineLattice { lattice, shift })
    }

    /// `Z² + v`.
    pub fn integer_shifted(shift: Vec2<T>) -> Result<Self> {
        Self::new(Mat2::identity(), shift)
    }

    pub fn lattice(&self) -> &UnimodularLattice<T> {
        &self.lattice
    }

    pub fn basis(&self) -> &Mat2<T> {
        self.lattice.basis()
    }

    pub fn shift(&self) -> &Vec2<T> {
        &self.shift
    }

    /// Smallest `q ≤ max_q` with `q·v` in the lattice, if any.
    pub fn torsion_order(&self, max_q: u64) -> Option<u64> {
        let c = self.lattice.reduced_basis().inverse_unimodular().apply(&self.shift);
        let integral = |x: T| {
            if T::EXACT {
                T::from_i64(x.floor_i64()) == x
            } else {
                let r = x.to_f64();
                (r - r.round()).abs() <= 1e-9
            }
        };
        (1..=max_q).find(|&q| {
            let qt = T::from_i64(q as i64);
            integral(qt.clone() * c.x.clone()) && integral(qt * c.y.clone())
        })
    }

    fn shift_is_zero(&self) -> bool {
        self.torsion_order(1).is_some()
    }

    /// All points in the closed ball of radius `r`, origin excluded.
    pub fn points_in_ball(&self, r: T) -> Result<Vec<Vec2<T>>> {
        if !(r > T::zero()) || !r.is_finite() {
            return Err(Error::invalid("radius must be positive"));
        }
        let ball = Region::ball(r.clone())?;
        Ok(self
            .points_in_box(&BoundingBox::centered(r))?
            .into_iter()
            .filter(|v| ball.contains(v))
            .collect())
    }
}

fn reduce_shift<T: FieldScalar>(basis: &Mat2<T>, v: &Vec2<T>) -> Vec2<T> {
    let c = basis.inverse_unimodular().apply(v);
    let m = c.x.floor_i64();
    let k = c.y.floor_i64();
    let shifted = v.clone() - basis.apply_int(m, k);
    if T::EXACT {
        return shifted;
    }
    // A float coordinate within rounding of an integer is treated as that integer.
    let c = basis.inverse_unimodular().apply(&shifted);
    let snap = |x: T| -> i64 {
        let r = x.to_f64();
        if (r - r.round()).abs() <= 1e-12 {
            r.round() as i64
        } else {
            0
        }
    };
    let (dm, dk) = (snap(c.x), snap(c.y));
    if dm == 0 && dk == 0 {
        shifted
    } else {
        shifted - basis.apply_int(dm, dk)
    }
}

impl AffineLattice<f64> {
    /// A generic lattice with a pseudo-random shift, both from `seed`.
    pub fn generic(seed: u64) -> Result<Self> {
        let l = UnimodularLattice::generic(seed)?;
        let mut rng = SeededRng::new(seed).split(1);
        let v = Vec2::new(rng.uniform(), rng.uniform());
        let shift = l.basis().apply(&v);
        Self::new(*l.basis(), shift)
    }

    /// `|A ∩ A_R^θ(σ)|`.
    pub fn wedge_count(&self, theta: f64, sigma: f64, r: f64) -> Result<usize> {
        let w = Region::wedge(theta, sigma, r)?;
        Ok(self.points_in_ball(r)?.iter().filter(|v| w.contains(v)).count())
    }

    /// `|diag(1/R, R)·r_{−θ}·A ∩ T(σ)|`.
    pub fn renormalized_triangle_count(&self, theta: f64, sigma: f64, r: f64) -> Result<usize> {
        if !(sigma > 0.0) || !(r > 0.0) || !theta.is_finite() {
            return Err(Error::invalid("sigma and radius must be positive, theta finite"));
        }
        // diag_flow(t) = diag(e^{t/2}, e^{−t/2}), so diag(1/R, R) is t = −2 ln R.
        let g = diag_flow(-2.0 * r.ln())? * rotation(-theta)?;
        let moved = self.act(&g)?;
        let tri = Region::triangle(sigma)?;
        Ok(moved
            .points_in_box(&tri.bounding_box().expect("triangle is bounded"))?
            .iter()
            .filter(|v| tri.contains(v))
            .count())
    }

    /// Fractions of uniform directions `θ` whose wedge holds `i` points.
    pub fn empirical_p(&self, sigma: f64, r: f64, samples: usize, seed: u64) -> Result<WedgeStats> {
        if samples == 0 {
            return Err(Error::invalid("need at least one direction sample"));
        }
        let counter = WedgeCounter::new(self, r)?;
        let mut rng = SeededRng::new(seed);
        let thetas: Vec<f64> = (0..samples).map(|_| rng.uniform_in(0.0, 2.0 * PI)).collect();
        let per: Vec<usize> = thetas.par_iter().map(|&t| counter.count(t, sigma)).collect();
        let max = per.iter().copied().max().unwrap_or(0);
        let mut counts = vec![0u64; max + 1];
        for c in per {
            counts[c] += 1;
        }
        Ok(WedgeStats { sigma, radius: r, counts, sample_count: samples as u64 })
    }

    /// Distinct directions of points in the ball, sorted in `[0, 2π)`. With
    /// zero shift only primitive vectors are used (one per direction).
    pub fn angles_in_ball(&self, r: f64) -> Result<Vec<f64>> {
        let mut angles: Vec<f64> = if self.shift_is_zero() {
            self.lattice
                .points_in_box(&BoundingBox::centered(r))?
                .into_iter()
                .filter(|v| v.norm_sq() <= r * r)
                .map(|v| v.angle())
                .collect()
        } else {
            self.points_in_ball(r)?.iter().map(Vec2::angle).collect()
        };
        angles.sort_by(f64::total_cmp);
        angles.dedup_by(|b, a| *b - *a <= 1e-12);
        Ok(angles)
    }
}

impl<T: FieldScalar> PointSystem for AffineLattice<T> {
    type Scalar = T;

    fn points_in_box(&self, bbox: &BoundingBox<T>) -> Result<Vec<Vec2<T>>> {
        let v = &self.shift;
        let moved = BoundingBox::new(
            bbox.x_min.clone() - v.x.clone(),
            bbox.x_max.clone() - v.x.clone(),
            bbox.y_min.clone() - v.y.clone(),
            bbox.y_max.clone() - v.y.clone(),
        );
        let zero_shift = v.is_zero();
        let limit = self.lattice.limits().max_points;
        let mut out: Vec<Vec2<T>> =
            lattice_box_points(self.lattice.reduced_basis(), &moved, false, limit)?
                .into_iter()
                .map(|(_, _, p)| p + v.clone())
                .filter(|p| bbox.contains(p))
                .collect();
        // The lattice enumerator skips the coefficient pair (0, 0); with a
        // non-zero shift that pair is the point v itself.
        if !zero_shift && bbox.contains(v) {
            out.push(v.clone());
        }
        Ok(out)
    }

    fn act(&self, g: &Mat2<T>) -> Result<Self> {
        let lattice = self.lattice.act(g)?;
        let shift = reduce_shift(lattice.reduced_basis(), &g.apply(&self.shift));
        Ok(AffineLattice { lattice, shift })
    }

    fn is_centrally_symmetric(&self) -> bool {
        self.torsion_order(2).is_some()
    }

    fn limits(&self) -> SearchLimits {
        self.lattice.limits()
    }
}

/// Counts points of a fixed ball in arbitrary thinning wedges by binary
/// search over sorted directions.
#[derive(Clone, Debug)]
pub struct WedgeCounter {
    angles: Vec<f64>,
    radius: f64,
}

impl WedgeCounter {
    pub fn new(a: &AffineLattice<f64>, r: f64) -> Result<Self> {
        let mut angles: Vec<f64> = a.points_in_ball(r)?.iter().map(Vec2::angle).collect();
        angles.sort_by(f64::total_cmp);
        Ok(WedgeCounter { angles, radius: r })
    }

    pub fn len(&self) -> usize {
        self.angles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.angles.is_empty()
    }

    fn count_in(&self, lo: f64, hi: f64) -> usize {
        let a = self.angles.partition_point(|&x| x < lo);
        let b = self.angles.partition_point(|&x| x <= hi);
        b.saturating_sub(a)
    }

    /// Points with direction within `σ/R²` of `θ`.
    pub fn count(&self, theta: f64, sigma: f64) -> usize {
        let h = sigma / (self.radius * self.radius);
        if h >= PI {
            return self.angles.len();
        }
        let t = theta.rem_euclid(2.0 * PI);
        let (lo, hi) = (t - h, t + h);
        let mut n = self.count_in(lo.max(0.0), hi.min(2.0 * PI));
        if lo < 0.0 {
            n += self.count_in(lo + 2.0 * PI, 2.0 * PI);
        }
        if hi > 2.0 * PI {
            n += self.count_in(0.0, hi - 2.0 * PI);
        }
        // Directions sitting exactly on the wrap point are counted once.
        n.min(self.angles.len())
    }

    /// Brute-force count through [`angular_distance`].
    pub fn count_naive(&self, theta: f64, sigma: f64) -> usize {
        let h = sigma / (self.radius * self.radius);
        self.angles.iter().filter(|&&a| angular_distance(a, theta) <= h).count()
    }
}

/// Empirical distribution of wedge counts over random directions.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WedgeStats {
    pub sigma: f64,
    pub radius: f64,
    /// `counts[i]` directions whose wedge holds `i` points.
    pub counts: Vec<u64>,
    pub sample_count: u64,
}

impl WedgeStats {
    pub fn fractions(&self) -> Vec<f64> {
        self.counts.iter().map(|&c| c as f64 / self.sample_count as f64).collect()
    }

    /// `p_i`, zero past the largest observed count.
    pub fn p(&self, i: usize) -> f64 {
        self.counts.get(i).map_or(0.0, |&c| c as f64 / self.sample_count as f64)
    }
}

/// Normalized circular gaps `(N/2π)(θ_{i+1} − θ_i)` of the directions in the
/// ball, wraparound gap included, so the mean is exactly one.
pub fn angle_gap_distribution(a: &AffineLattice<f64>, r: f64) -> Result<EmpiricalDist> {
    let angles = a.angles_in_ball(r)?;
    if angles.is_empty() {
        return Err(Error::InvalidState("no directions in the ball".into()));
    }
    ecdf(circular_gaps(&angles, 2.0 * PI))
}

fn circular_gaps(sorted: &[f64], period: f64) -> Vec<f64> {
    let n = sorted.len();
    let scale = n as f64 / period;
    let mut out: Vec<f64> = sorted.windows(2).map(|w| (w[1] - w[0]) * scale).collect();
    out.push((sorted[0] + period - sorted[n - 1]) * scale);
    out
}

/// Fractional parts `{√k}`, `1 ≤ k ≤ n`, sorted; perfect squares give 0.
pub fn sqrt_mod1(n: u64) -> Vec<f64> {
    let mut v: Vec<f64> = (1..=n)
        .map(|k| {
            let r = k.isqrt();
            if r * r == k {
                0.0
            } else {
                (k as f64).sqrt() - r as f64
            }
        })
        .collect();
    v.sort_by(f64::total_cmp);
    v
}

/// Circular gaps of `{√k}` on the unit circle, scaled by the count so the
/// mean is exactly one.
pub fn sqrt_mod1_gaps(n: u64) -> Result<crate::pointcloud::GapSequence<f64>> {
    if n < 2 {
        return Err(Error::invalid("need n >= 2"));
    }
    Ok(crate::pointcloud::GapSequence::new(circular_gaps(&sqrt_mod1(n), 1.0)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pointcloud::check_equivariance;
    use crate::scalar::{frac, Fraction};
    use crate::stats::ks_distance;

    fn exp_cdf(t: f64) -> f64 {
        if t <= 0.0 {
            0.0
        } else {
            1.0 - (-t).exp()
        }
    }

    #[test]
    fn shift_reduction_is_idempotent() {
        let a = AffineLattice::integer_shifted(Vec2::new(frac(7, 2), frac(-1, 3))).unwrap();
        assert_eq!(a.shift(), &Vec2::new(frac(1, 2), frac(2, 3)));
        let b = AffineLattice::new(*a.basis(), *a.shift()).unwrap();
        assert_eq!(a.shift(), b.shift());
        for seed in 0..10 {
            let g = AffineLattice::generic(seed).unwrap();
            let again = AffineLattice::new(*g.basis(), *g.shift()).unwrap();
            assert!((again.shift().x - g.shift().x).abs() < 1e-12);
            assert!((again.shift().y - g.shift().y).abs() < 1e-12);
        }
    }

    #[test]
    fn torsion_orders() {
        let half = AffineLattice::integer_shifted(Vec2::new(frac(1, 2), frac(1, 3))).unwrap();
        assert_eq!(half.torsion_order(100), Some(6));
        let z = AffineLattice::<Fraction>::integer_shifted(Vec2::zero()).unwrap();
        assert_eq!(z.torsion_order(100), Some(1));
        let g = AffineLattice::generic(5).unwrap();
        assert_eq!(g.torsion_order(1000), None);
    }

    #[test]
    fn ball_examples() {
        let a = AffineLattice::<f64>::integer_shifted(Vec2::new(0.5, 0.5)).unwrap();
        let mut p = a.points_in_ball(1.0).unwrap();
        p.sort_by(|u, v| u.x.total_cmp(&v.x).then(u.y.total_cmp(&v.y)));
        assert_eq!(
            p,
            vec![Vec2::new(-0.5, -0.5), Vec2::new(-0.5, 0.5), Vec2::new(0.5, -0.5), Vec2::new(0.5, 0.5)]
        );
        assert!(a.points_in_ball(0.5).unwrap().is_empty());
        assert!(a.points_in_ball(0.0).is_err());
        let z = AffineLattice::<f64>::integer_shifted(Vec2::zero()).unwrap();
        assert_eq!(z.points_in_ball(1.0).unwrap().len(), 4);
    }

    #[test]
    fn ball_density() {
        let a = AffineLattice::generic(11).unwrap();
        let r = 300.0;
        let n = a.points_in_ball(r).unwrap().len() as f64;
        assert!((n / (PI * r * r) - 1.0).abs() < 0.01);
    }

    #[test]
    fn integer_triangle() {
        let z = AffineLattice::<f64>::integer_shifted(Vec2::zero()).unwrap();
        assert_eq!(z.renormalized_triangle_count(0.0, 1.0, 1.0).unwrap(), 3);
        let zq = AffineLattice::<Fraction>::integer_shifted(Vec2::zero()).unwrap();
        let tri = Region::triangle(frac(1, 1)).unwrap();
        let mut pts = zq.enumerate(&tri, 10).unwrap();
        pts.sort();
        assert_eq!(
            pts,
            vec![Vec2::new(frac(1, 1), frac(-1, 1)), Vec2::new(frac(1, 1), frac(0, 1)), Vec2::new(frac(1, 1), frac(1, 1))]
        );
    }

    #[test]
    fn wedge_around_a_single_point() {
        let a = AffineLattice::generic(2).unwrap();
        let p = a.points_in_ball(3.0).unwrap()[0];
        let r = p.norm_sq().sqrt() * 1.0001;
        assert_eq!(a.wedge_count(p.angle(), 1e-9, r).unwrap(), 1);
    }

    #[test]
    fn wedges_partition_the_ball() {
        let a = AffineLattice::generic(3).unwrap();
        let r = 40.0;
        let k = 997usize;
        let h = PI / k as f64;
        let sigma = h * r * r;
        let counter = WedgeCounter::new(&a, r).unwrap();
        let total: usize = (0..k).map(|j| counter.count((2 * j + 1) as f64 * h, sigma)).sum();
        assert_eq!(total, counter.len());
        assert_eq!(counter.len(), a.points_in_ball(r).unwrap().len());
    }

    #[test]
    fn counter_matches_naive() {
        let a = AffineLattice::generic(4).unwrap();
        let c = WedgeCounter::new(&a, 30.0).unwrap();
        let mut rng = SeededRng::new(9);
        for _ in 0..500 {
            let t = rng.uniform_in(-1.0, 7.0);
            let s = rng.uniform_in(0.0, 20.0);
            assert_eq!(c.count(t, s), c.count_naive(t, s));
            assert_eq!(c.count(t, s), a.wedge_count(t, s, 30.0).unwrap());
        }
    }

    #[test]
    fn wedge_and_triangle_agree() {
        let a = AffineLattice::generic(6).unwrap();
        let mut rng = SeededRng::new(1);
        let mut close = 0;
        let trials = 300;
        for _ in 0..trials {
            let t = rng.uniform_in(0.0, 2.0 * PI);
            let w = a.wedge_count(t, 1.0, 100.0).unwrap() as i64;
            let tr = a.renormalized_triangle_count(t, 1.0, 100.0).unwrap() as i64;
            if (w - tr).abs() <= 1 {
                close += 1;
            }
        }
        assert!(close as f64 >= 0.95 * trials as f64);
    }

    #[test]
    fn empirical_p_properties() {
        let a = AffineLattice::generic(7).unwrap();
        let tiny = a.empirical_p(1e-9, 50.0, 2000, 3).unwrap();
        assert_eq!(tiny.p(0), 1.0);
        let mut prev = 1.0;
        for sigma in [0.1, 0.3, 0.6, 1.0, 2.0] {
            let s = a.empirical_p(sigma, 50.0, 4000, 3).unwrap();
            assert!((s.fractions().iter().sum::<f64>() - 1.0).abs() < 1e-12);
            assert!(s.p(0) <= prev);
            prev = s.p(0);
        }
        assert_eq!(a.empirical_p(1.0, 50.0, 500, 8).unwrap(), a.empirical_p(1.0, 50.0, 500, 8).unwrap());
    }

    #[test]
    fn sqrt_examples() {
        let v = sqrt_mod1(2);
        assert_eq!(v[0], 0.0);
        assert!((v[1] - 0.414_213_56).abs() < 1e-8);
        let g = sqrt_mod1_gaps(10_000).unwrap();
        let mean = g.gaps.iter().sum::<f64>() / g.len() as f64;
        assert!((mean - 1.0).abs() < 1e-9);
        assert!(sqrt_mod1_gaps(1).is_err());
    }

    #[test]
    fn angle_gaps_basic() {
        let a = AffineLattice::generic(8).unwrap();
        let d = angle_gap_distribution(&a, 60.0).unwrap();
        assert!((d.mean() - 1.0).abs() < 1e-9);
        let b = AffineLattice::<f64>::integer_shifted(Vec2::new(0.3, 0.4)).unwrap();
        assert!(matches!(angle_gap_distribution(&b, 0.1), Err(Error::InvalidState(_))));
    }

    #[test]
    fn torsion_free_differs_from_lattice_case() {
        let generic = angle_gap_distribution(&AffineLattice::generic(8).unwrap(), 150.0).unwrap();
        let lat = AffineLattice::new(*UnimodularLattice::generic(8).unwrap().basis(), Vec2::zero()).unwrap();
        let lattice = angle_gap_distribution(&lat, 150.0).unwrap();
        assert!(crate::stats::ks_two_sample(&generic, &lattice) >= 0.05);
        assert!(ks_distance(&lattice, exp_cdf) >= 0.05);
    }

    #[test]
    fn equivariance() {
        for seed in 0..10 {
            let a = AffineLattice::generic(seed).unwrap();
            let g = *UnimodularLattice::generic(500 + seed).unwrap().basis();
            let bbox = BoundingBox::new(-4.0, 3.0, -3.0, 5.0);
            assert!(check_equivariance(&a, &g, &bbox, 1e-9).unwrap());
        }
    }
}
