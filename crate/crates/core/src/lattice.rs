//! Unimodular lattices `gZ²`, `g ∈ SL(2,R)`, as point systems.
//!
//! `Λ_x` is the set of primitive vectors. Slope gaps in the strip `V_η` are
//! available two ways: [`slope_gaps_oracle`] enumerates lattice points
//! directly, [`slope_gaps_fast`] runs the BCZ map from the transversal point
//! of the lattice. The two must agree.

use std::f64::consts::PI;

use num_integer::Integer;

use crate::bcz::{return_times, TransversalPoint};
use crate::error::{Error, Result};
use crate::geometry::{diag_flow, rotation, shear, BoundingBox, Mat2, Vec2};
use crate::pointcloud::{gaps, is_exceptional, slopes_in_strip, strip_search, GapSequence, PointSystem, SearchLimits};
use crate::scalar::FieldScalar;
use crate::stats::SeededRng;

/// Determinant tolerance for float bases.
const DET_TOL: f64 = 1e-9;

fn pad<T: FieldScalar>() -> T {
    if T::EXACT {
        T::zero()
    } else {
        T::one() / T::from_i64(1_000_000_000)
    }
}

fn round_i64<T: FieldScalar>(x: &T) -> i64 {
    (x.clone() + T::one() / T::from_i64(2)).floor_i64()
}

fn check_basis<T: FieldScalar>(m: &Mat2<T>) -> Result<()> {
    let entries = [&m.a, &m.b, &m.c, &m.d];
    if entries.iter().any(|e| !e.is_finite()) {
        return Err(Error::invalid("basis entries must be finite"));
    }
    let det = m.det();
    let ok = if T::EXACT {
        det == T::one()
    } else {
        (det.to_f64() - 1.0).abs() <= DET_TOL
    };
    if ok {
        Ok(())
    } else {
        Err(Error::invalid(format!("basis determinant is {}, expected 1", det.to_f64())))
    }
}

/// Lagrange–Gauss reduction. The result spans the same lattice, has the same
/// orientation and a shortest first column.
pub fn reduce_basis<T: FieldScalar>(m: &Mat2<T>) -> Mat2<T> {
    reduce_with_transform(m).0
}

/// Reduction together with the integer matrix `U` (columns as coefficient
/// pairs) such that the reduced basis is `m·U`.
fn reduce_with_transform<T: FieldScalar>(m: &Mat2<T>) -> (Mat2<T>, [(i64, i64); 2]) {
    let mut b1 = m.col0();
    let mut b2 = m.col1();
    let mut u1 = (1i64, 0i64);
    let mut u2 = (0i64, 1i64);
    for _ in 0..200 {
        if b2.norm_sq() < b1.norm_sq() {
            // (b1, b2) -> (b2, -b1) keeps the determinant.
            let t = b1;
            b1 = b2;
            b2 = -t;
            let s = u1;
            u1 = u2;
            u2 = (-s.0, -s.1);
        }
        let mu = round_i64(&(b1.dot(&b2) / b1.norm_sq()));
        if mu == 0 {
            break;
        }
        let t = T::from_i64(mu);
        b2 = Vec2::new(b2.x.clone() - t.clone() * b1.x.clone(), b2.y.clone() - t * b1.y.clone());
        u2 = (u2.0 - mu * u1.0, u2.1 - mu * u1.1);
    }
    (Mat2::from_columns(b1, b2), [u1, u2])
}

/// Interval of integers `m` with `lo ≤ coef·m + off ≤ hi`, or `None` when the
/// constraint does not involve `m`.
fn m_interval<T: FieldScalar>(coef: &T, off: &T, lo: &T, hi: &T) -> Option<(T, T)> {
    if *coef == T::zero() {
        return None;
    }
    let l = (lo.clone() - off.clone()) / coef.clone();
    let h = (hi.clone() - off.clone()) / coef.clone();
    Some(if l <= h { (l, h) } else { (h, l) })
}

/// All points `basis·(m, k)` (origin excluded) in the closed box, tagged with
/// their coefficients, ordered by `k` then `m`.
pub(crate) fn lattice_box_points<T: FieldScalar>(
    basis: &Mat2<T>,
    bbox: &BoundingBox<T>,
    primitive_only: bool,
    max_points: usize,
) -> Result<Vec<(i64, i64, Vec2<T>)>> {
    let eps = pad::<T>();
    let (a, b, c, d) = (&basis.a, &basis.b, &basis.c, &basis.d);
    // k = −c·x + a·y over the corners bounds the second coefficient.
    let ks: Vec<T> = bbox
        .corners()
        .iter()
        .map(|p| a.clone() * p.y.clone() - c.clone() * p.x.clone())
        .collect();
    let kmin = ks.iter().fold(ks[0].clone(), |m, v| if *v < m { v.clone() } else { m });
    let kmax = ks.iter().fold(ks[0].clone(), |m, v| if *v > m { v.clone() } else { m });
    let k_lo = (kmin - eps.clone()).ceil_i64();
    let k_hi = (kmax + eps.clone()).floor_i64();
    if k_hi > k_lo && (k_hi - k_lo) as u128 > 4 * max_points as u128 + 16 {
        return Err(Error::Resource("box query spans too many lattice rows".into()));
    }
    let mut out = Vec::new();
    let mut scanned: u128 = 0;
    for k in k_lo..=k_hi {
        let kt = T::from_i64(k);
        let xi = m_interval(a, &(b.clone() * kt.clone()), &bbox.x_min, &bbox.x_max);
        let yi = m_interval(c, &(d.clone() * kt.clone()), &bbox.y_min, &bbox.y_max);
        let (lo, hi) = match (xi, yi) {
            (Some((l1, h1)), Some((l2, h2))) => {
                (if l1 > l2 { l1 } else { l2 }, if h1 < h2 { h1 } else { h2 })
            }
            (Some(i), None) | (None, Some(i)) => i,
            (None, None) => unreachable!("basis is non-singular"),
        };
        if lo > hi.clone() + eps.clone() {
            continue;
        }
        let mut m_lo = (lo - eps.clone()).ceil_i64();
        let mut m_hi = (hi + eps.clone()).floor_i64();
        if primitive_only && k == 0 {
            // Only ±first column is primitive on this row.
            m_lo = m_lo.max(-1);
            m_hi = m_hi.min(1);
        }
        if m_hi >= m_lo {
            scanned += (m_hi - m_lo) as u128 + 1;
            if scanned > 8 * max_points as u128 + 64 {
                return Err(Error::Resource("box query scans too many lattice points".into()));
            }
        }
        for m in m_lo..=m_hi {
            if m == 0 && k == 0 {
                continue;
            }
            if primitive_only && m.gcd(&k) != 1 {
                continue;
            }
            let v = basis.apply_int(m, k);
            if bbox.contains(&v) {
                out.push((m, k, v));
                if out.len() > max_points {
                    return Err(Error::Resource(format!(
                        "box query exceeds {max_points} points"
                    )));
                }
            }
        }
    }
    Ok(out)
}

/// A unimodular lattice; its point set is the primitive vectors.
#[derive(Clone, Debug, PartialEq)]
pub struct UnimodularLattice<T> {
    basis: Mat2<T>,
    reduced: Mat2<T>,
    tag: String,
    limits: SearchLimits,
}

impl<T: FieldScalar> UnimodularLattice<T> {
    /// Lattice spanned by the columns of `basis`, which must have determinant 1.
    pub fn new(basis: Mat2<T>, tag: impl Into<String>) -> Result<Self> {
        check_basis(&basis)?;
        let reduced = reduce_basis(&basis);
        Ok(UnimodularLattice { basis, reduced, tag: tag.into(), limits: SearchLimits::default() })
    }

    /// `Z²`.
    pub fn integer() -> Self {
        Self::new(Mat2::identity(), "Z2").expect("identity is unimodular")
    }

    /// The lattice with basis `(a, 0)`, `(b, 1/a)` attached to a transversal point.
    pub fn from_transversal(p: &TransversalPoint<T>) -> Result<Self> {
        let a = p.a().clone();
        let basis = Mat2::new(a.clone(), p.b().clone(), T::zero(), T::one() / a);
        Self::new(basis, "transversal")
    }

    pub fn with_limits(mut self, limits: SearchLimits) -> Self {
        self.limits = limits;
        self
    }

    pub fn basis(&self) -> &Mat2<T> {
        &self.basis
    }

    pub fn reduced_basis(&self) -> &Mat2<T> {
        &self.reduced
    }

    pub fn tag(&self) -> &str {
        &self.tag
    }

    /// Integer coordinates of a lattice vector in the reduced basis.
    pub fn coefficients(&self, v: &Vec2<T>) -> (i64, i64) {
        let inv = self.reduced.inverse_unimodular();
        let c = inv.apply(v);
        (round_i64(&c.x), round_i64(&c.y))
    }

    /// The vectors of the `n` smallest strip slopes, by direct enumeration.
    pub fn strip_vectors(&self, eta: T, n: usize) -> Result<Vec<Vec2<T>>> {
        Ok(strip_search(self, eta, n, None)?.into_iter().map(|(_, v)| v).collect())
    }

    /// Integer coordinates `(u, w)` of the two lattice vectors that carry the
    /// transversal point: `u` has the first strip slope, `u × w = 1`, and
    /// their x-coordinates `(a, b)` satisfy `0 < a, b ≤ η < a + b`.
    ///
    /// Fails with [`Error::Exceptional`] for η-exceptional lattices.
    pub fn transversal_pair(&self, eta: T) -> Result<((i64, i64), (i64, i64))> {
        if is_exceptional(self, eta.clone())? {
            return Err(Error::Exceptional(format!(
                "lattice '{}' has a vertical vector shorter than eta/16",
                self.tag
            )));
        }
        let first = strip_search(self, eta.clone(), 1, None)?;
        let u = self.coefficients(&first[0].1);
        // Complete u to a unimodular pair: m·k' − k·m' = 1.
        let e = u.0.extended_gcd(&u.1);
        let (kp, mp) = if e.gcd == 1 { (e.x, -e.y) } else { (-e.x, e.y) };
        let a = first[0].1.x.clone();
        let wx = self.reduced.apply_int(mp, kp).x;
        let j = ((wx - eta.clone()) / a).ceil_i64();
        let w = (mp - j * u.0, kp - j * u.1);
        Ok((u, self.fix_partner(u, w, &eta)))
    }

    /// Moves `w` by multiples of `u` until its x-coordinate lies in
    /// `(η − a, η]`; float rounding can leave it one step outside.
    fn fix_partner(&self, u: (i64, i64), mut w: (i64, i64), eta: &T) -> (i64, i64) {
        let a = self.x_of(u);
        for _ in 0..2 {
            let b = self.x_of(w);
            if b > *eta {
                w = (w.0 - u.0, w.1 - u.1);
            } else if b + a.clone() <= *eta {
                w = (w.0 + u.0, w.1 + u.1);
            }
        }
        w
    }

    fn x_of(&self, c: (i64, i64)) -> T {
        self.reduced.apply_int(c.0, c.1).x
    }

    /// The point of the BCZ transversal `{(a, b): 0 < a, b ≤ η, a + b > η}`
    /// whose flow starts at this lattice's first strip slope.
    ///
    /// Fails with [`Error::Exceptional`] for η-exceptional lattices.
    pub fn to_transversal(&self, eta: T) -> Result<TransversalPoint<T>> {
        let (u, w) = self.transversal_pair(eta.clone())?;
        TransversalPoint::new(self.x_of(u), self.x_of(w), eta)
    }

    /// BCZ return times carried on integer coordinates.
    ///
    /// The step `(u, w) ↦ (w, ⌊(η + a)/b⌋·w − u)` is the BCZ map acting on the
    /// pair of vectors behind `(a, b)`. Recomputing `a, b` from exact integer
    /// data each step keeps float rounding from compounding along the orbit.
    fn anchored_return_times(&self, eta: T, n: usize) -> Result<Vec<T>> {
        let (mut u, mut w) = self.transversal_pair(eta.clone())?;
        let mut out = Vec::with_capacity(n);
        for _ in 0..n {
            let a = self.x_of(u);
            let b = self.x_of(w);
            out.push(T::one() / (a.clone() * b.clone()));
            let j = ((eta.clone() + a) / b).floor_i64();
            let next = (j * w.0 - u.0, j * w.1 - u.1);
            u = w;
            w = self.fix_partner(u, next, &eta);
        }
        Ok(out)
    }
}

impl UnimodularLattice<f64> {
    /// Pseudo-random lattice `h_α g_τ r_θ Z²` with `α, τ ∈ [−1, 1)` and
    /// `θ ∈ [0, 2π)` drawn from the seeded stream.
    pub fn generic(seed: u64) -> Result<Self> {
        let mut rng = SeededRng::new(seed);
        let alpha = rng.uniform_in(-1.0, 1.0);
        let tau = rng.uniform_in(-1.0, 1.0);
        let theta = rng.uniform_in(0.0, 2.0 * PI);
        let m = shear(alpha)? * diag_flow(tau)? * rotation(theta)?;
        Self::new(m, format!("generic(seed={seed},alpha={alpha},tau={tau},theta={theta})"))
    }
}

impl<T: FieldScalar> PointSystem for UnimodularLattice<T> {
    type Scalar = T;

    fn points_in_box(&self, bbox: &BoundingBox<T>) -> Result<Vec<Vec2<T>>> {
        Ok(lattice_box_points(&self.reduced, bbox, true, self.limits.max_points)?
            .into_iter()
            .map(|(_, _, v)| v)
            .collect())
    }

    fn act(&self, g: &Mat2<T>) -> Result<Self> {
        check_basis(g)?;
        let basis = g.clone() * self.reduced.clone();
        check_basis(&basis)?;
        let reduced = if T::EXACT {
            reduce_basis(&basis)
        } else {
            // Entries of g·B can be large while the reduced vectors are
            // short; rebuilding them as g·(B·U) keeps their error relative
            // to their own size.
            let (_, [u1, u2]) = reduce_with_transform(&basis);
            let col = |u: (i64, i64)| g.apply(&self.reduced.apply_int(u.0, u.1));
            reduce_basis(&Mat2::from_columns(col(u1), col(u2)))
        };
        Ok(UnimodularLattice { basis, reduced, tag: self.tag.clone(), limits: self.limits })
    }

    fn minkowski_constant(&self) -> Option<f64> {
        Some(4.0)
    }

    fn is_centrally_symmetric(&self) -> bool {
        true
    }

    fn limits(&self) -> SearchLimits {
        self.limits
    }
}

/// Slope gaps by direct enumeration of the strip.
pub fn slope_gaps_oracle<T: FieldScalar>(
    l: &UnimodularLattice<T>,
    eta: T,
    n: usize,
) -> Result<GapSequence<T>> {
    gaps(&slopes_in_strip(l, eta, n + 1)?)
}

/// Slope gaps as BCZ return times from the lattice's transversal point.
///
/// Exact lattices iterate the map on `(a, b)` directly; float lattices carry
/// the orbit on integer coordinates.
pub fn slope_gaps_fast<T: FieldScalar>(
    l: &UnimodularLattice<T>,
    eta: T,
    n: usize,
) -> Result<GapSequence<T>> {
    if T::EXACT {
        let p = l.to_transversal(eta)?;
        Ok(GapSequence::new(return_times(&p, n)?))
    } else {
        Ok(GapSequence::new(l.anchored_return_times(eta, n)?))
    }
}

/// Whether the lattice holds a vertical vector `basis·(m, k) ≠ 0` with
/// `|k| ≤ bound`.
pub fn has_vertical_vector<T: FieldScalar>(l: &UnimodularLattice<T>, bound: i64) -> bool {
    let m = l.basis();
    // x = a·m + b·k.
    if m.a == T::zero() {
        return true;
    }
    let tol = 1e-12;
    (-bound..=bound).any(|k| {
        let target = -(m.b.clone() * T::from_i64(k)) / m.a.clone();
        let f = target.floor_i64();
        [f, f + 1].into_iter().any(|mm| {
            (mm != 0 || k != 0) && {
                let x = m.a.clone() * T::from_i64(mm) + m.b.clone() * T::from_i64(k);
                if T::EXACT {
                    x == T::zero()
                } else {
                    x.to_f64().abs() <= tol * (1.0 + (m.b.to_f64() * k as f64).abs())
                }
            }
        })
    })
}

/// `n` i.i.d. Exp(1) samples: the gap law of a Poisson process.
pub fn poisson_baseline(n: usize, seed: u64) -> GapSequence<f64> {
    let mut rng = SeededRng::new(seed);
    GapSequence::new((0..n).map(|_| -(1.0 - rng.uniform()).ln()).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pointcloud::{check_equivariance, is_vertically_short};
    use crate::scalar::{frac, Fraction};
    use crate::stats::ecdf;

    #[test]
    fn construction_validates_determinant() {
        assert!(UnimodularLattice::new(Mat2::new(2.0, 0.0, 0.0, 1.0), "x").is_err());
        assert!(UnimodularLattice::new(Mat2::new(f64::NAN, 0.0, 0.0, 1.0), "x").is_err());
        let z = UnimodularLattice::<Fraction>::integer();
        assert_eq!(z.basis(), &Mat2::identity());
    }

    #[test]
    fn reduction_keeps_lattice_and_orientation() {
        let m = Mat2::new(frac(5, 1), frac(8, 1), frac(3, 1), frac(5, 1));
        let r = reduce_basis(&m);
        assert_eq!(r.det(), frac(1, 1));
        assert!(r.col0().norm_sq() <= frac(1, 1));
        for seed in 0..50 {
            let l = UnimodularLattice::generic(seed).unwrap();
            let r = l.reduced_basis();
            assert!((r.det() - 1.0).abs() < 1e-12);
            assert!(r.col0().norm_sq() <= r.col1().norm_sq() + 1e-12);
        }
    }

    #[test]
    fn box_points_of_integer_lattice() {
        let z = UnimodularLattice::<Fraction>::integer();
        let pts = z.points_in_box(&BoundingBox::centered(frac(2, 1))).unwrap();
        // Primitive vectors in [−2, 2]²: 24 points minus (±2, 0), (0, ±2), (±2, ±2).
        assert_eq!(pts.len(), 16);
        assert!(pts.iter().all(|v| pts.contains(&-*v)));
    }

    #[test]
    fn vertical_vector_detection() {
        let z = UnimodularLattice::<f64>::integer();
        assert!(has_vertical_vector(&z, 10));
        let b = Mat2::from_columns(Vec2::new(0.0, -1.0), Vec2::new(1.0, 0.5));
        assert!(has_vertical_vector(&UnimodularLattice::new(b, "v").unwrap(), 10));
        let irr = Mat2::from_columns(Vec2::new(1.0, 0.0), Vec2::new(2f64.sqrt(), 1.0));
        assert!(!has_vertical_vector(&UnimodularLattice::new(irr, "irr").unwrap(), 100));
        let q = Mat2::new(frac(1, 1), frac(2, 3), frac(0, 1), frac(1, 1));
        assert!(has_vertical_vector(&UnimodularLattice::new(q, "q").unwrap(), 3));
        assert!(!has_vertical_vector(&UnimodularLattice::new(q, "q").unwrap(), 2));
    }

    #[test]
    fn transversal_round_trip() {
        let p = TransversalPoint::new(frac(2, 3), frac(3, 5), frac(1, 1)).unwrap();
        let l = UnimodularLattice::from_transversal(&p).unwrap();
        assert_eq!(l.to_transversal(frac(1, 1)).unwrap(), p);
        let z = UnimodularLattice::<Fraction>::integer();
        let q = z.to_transversal(frac(4, 1)).unwrap();
        assert_eq!((q.a(), q.b()), (&frac(1, 1), &frac(4, 1)));
    }

    #[test]
    fn exceptional_lattice_has_no_transversal_point() {
        let b = Mat2::from_columns(Vec2::new(0.0, 0.01), Vec2::new(-100.0, 0.3));
        let l = UnimodularLattice::new(b, "thin").unwrap();
        assert!(matches!(l.to_transversal(1.0), Err(Error::Exceptional(_))));
    }

    #[test]
    fn fast_matches_oracle_exact() {
        let m = Mat2::new(frac(3, 7), frac(2, 5), frac(-1, 3), frac(91, 45));
        let l = UnimodularLattice::new(m, "q").unwrap();
        for eta in [frac(1, 1), frac(3, 2), frac(5, 1)] {
            let f = slope_gaps_fast(&l, eta, 200).unwrap();
            let o = slope_gaps_oracle(&l, eta, 200).unwrap();
            assert_eq!(f, o);
        }
    }

    #[test]
    fn fast_matches_oracle_float() {
        for seed in 0..10 {
            let l = UnimodularLattice::generic(seed).unwrap();
            let f = slope_gaps_fast(&l, 1.0, 10_000).unwrap();
            let o = slope_gaps_oracle(&l, 1.0, 10_000).unwrap();
            for (i, (x, y)) in f.gaps.iter().zip(&o.gaps).enumerate() {
                assert!((x - y).abs() <= 1e-9, "seed {seed} i {i}: {x} vs {y}");
            }
        }
    }

    #[test]
    fn gaps_respect_strip_lower_bound() {
        for seed in 0..10 {
            let l = UnimodularLattice::generic(seed).unwrap();
            let g = slope_gaps_fast(&l, 2.0, 5000).unwrap();
            assert!(g.gaps.iter().all(|&x| x >= 0.25 - 1e-12));
        }
    }

    #[test]
    fn equivariance_on_random_lattices() {
        for seed in 0..20 {
            let l = UnimodularLattice::generic(seed).unwrap();
            let g = *UnimodularLattice::generic(1000 + seed).unwrap().basis();
            let bbox = BoundingBox::new(-3.0, 4.0, -2.5, 3.5);
            assert!(check_equivariance(&l, &g, &bbox, 1e-9).unwrap());
        }
    }

    #[test]
    fn generic_lattices_are_not_short() {
        for seed in 0..20 {
            let l = UnimodularLattice::generic(seed).unwrap();
            assert!(!has_vertical_vector(&l, 1000));
            assert!(!is_vertically_short(&l, 1e-3).unwrap());
        }
    }

    #[test]
    fn poisson_baseline_is_exponential() {
        let g = poisson_baseline(100_000, 42);
        let d = ecdf(g.gaps).unwrap();
        assert!((d.mean() - 1.0).abs() < 0.01);
        assert!(crate::stats::ks_distance(&d, |t| 1.0 - (-t.max(0.0)).exp()) < 0.01);
    }
}
