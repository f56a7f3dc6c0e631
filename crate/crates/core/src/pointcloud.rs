//! Discrete point systems `x ↦ Λ_x` and the slope/gap machinery built on them.
//!
//! A [`PointSystem`] only has to enumerate its points in closed boxes and
//! transform under SL(2,R). Everything else here (strip slopes, gaps,
//! shortness predicates, hitting times of the horocycle flow) is written once
//! against that contract.

use std::cmp::Ordering;

use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::geometry::{shear, BoundingBox, Mat2, Region, Vec2};
use crate::scalar::{FieldScalar, Scalar};

/// Caps applied to every unbounded search.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SearchLimits {
    /// Largest number of points a single box query may return.
    pub max_points: usize,
    /// How many times a slope window may double before giving up.
    pub max_doublings: u32,
}

impl Default for SearchLimits {
    fn default() -> Self {
        SearchLimits { max_points: 20_000_000, max_doublings: 48 }
    }
}

/// A state `x` together with its discrete set `Λ_x ⊂ R² \ {0}`.
///
/// Implementations must satisfy `Λ_{g·x} = g·Λ_x` for [`PointSystem::act`],
/// and enumeration must be deterministic.
pub trait PointSystem: Sized {
    type Scalar: FieldScalar;

    /// Every point of `Λ_x` in the closed box, in a deterministic order.
    fn points_in_box(&self, bbox: &BoundingBox<Self::Scalar>) -> Result<Vec<Vec2<Self::Scalar>>>;

    /// The system of `g·x`.
    fn act(&self, g: &Mat2<Self::Scalar>) -> Result<Self>;

    /// Minkowski constant `c(x)`: every convex centrally symmetric set of area
    /// at least `c(x)` meets `Λ_x`. `None` when unknown.
    fn minkowski_constant(&self) -> Option<f64> {
        None
    }

    fn is_centrally_symmetric(&self) -> bool {
        false
    }

    fn limits(&self) -> SearchLimits {
        SearchLimits::default()
    }

    /// Tolerance for "horizontal"/"vertical" tests on float systems.
    fn incidence_tol(&self) -> f64 {
        if Self::Scalar::EXACT {
            0.0
        } else {
            1e-12
        }
    }

    /// Points of `Λ_x` in `region`.
    ///
    /// Bounded regions return every point, failing with a resource error if
    /// there are more than `limit`. For the vertical strip, the first `limit`
    /// points in order of increasing slope (one per slope) are returned.
    fn enumerate(
        &self,
        region: &Region<Self::Scalar>,
        limit: usize,
    ) -> Result<Vec<Vec2<Self::Scalar>>> {
        match region {
            Region::VerticalStrip { eta } => Ok(strip_search(self, eta.clone(), limit, None)?
                .into_iter()
                .map(|(_, v)| v)
                .collect()),
            _ => {
                let bbox = region.bounding_box().expect("bounded region");
                let pts: Vec<_> = self
                    .points_in_box(&bbox)?
                    .into_iter()
                    .filter(|v| region.contains(v))
                    .collect();
                if pts.len() > limit {
                    return Err(Error::Resource(format!(
                        "region holds more than {limit} points"
                    )));
                }
                Ok(pts)
            }
        }
    }
}

/// Strictly increasing slopes `0 ≤ s_1 < s_2 < …` of `Λ_x ∩ V_η`.
#[derive(Clone, Debug, PartialEq)]
pub struct SlopeSequence<T> {
    pub eta: T,
    pub slopes: Vec<T>,
}

impl<T: Scalar> SlopeSequence<T> {
    pub fn len(&self) -> usize {
        self.slopes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slopes.is_empty()
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.slopes.iter().map(Scalar::to_f64).collect()
    }
}

/// Consecutive differences of a slope (or angle) sequence.
#[derive(Clone, Debug, PartialEq)]
pub struct GapSequence<T> {
    pub gaps: Vec<T>,
}

impl<T: Scalar> GapSequence<T> {
    pub fn new(gaps: Vec<T>) -> Self {
        GapSequence { gaps }
    }

    pub fn len(&self) -> usize {
        self.gaps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gaps.is_empty()
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.gaps.iter().map(Scalar::to_f64).collect()
    }

    /// Multiplies every gap by `factor`.
    pub fn scaled(&self, factor: T) -> Self {
        GapSequence { gaps: self.gaps.iter().map(|g| g.clone() * factor.clone()).collect() }
    }
}

fn slope_cmp<T: FieldScalar>(a: &(T, Vec2<T>), b: &(T, Vec2<T>)) -> Ordering {
    a.0.partial_cmp(&b.0)
        .unwrap_or(Ordering::Equal)
        .then_with(|| a.1.x.partial_cmp(&b.1.x).unwrap_or(Ordering::Equal))
}

/// A slope together with the shortest vector realizing it.
pub type StripHit<T> = (T, Vec2<T>);

/// The `n` smallest slopes of vectors in `V_η`, with one representative
/// vector (the shortest) for each slope.
///
/// With `above = Some(s)` only slopes strictly greater than `s` are kept;
/// otherwise all slopes `≥ 0`. The slope window doubles until it holds `n`
/// distinct slopes, and the search fails with [`Error::Exhausted`] (carrying
/// the partial result) once the limits are reached.
pub fn strip_search<S: PointSystem>(
    sys: &S,
    eta: S::Scalar,
    n: usize,
    above: Option<S::Scalar>,
) -> Result<Vec<StripHit<S::Scalar>>> {
    type T<S> = <S as PointSystem>::Scalar;
    if !(eta > T::<S>::zero()) || !eta.is_finite() {
        return Err(Error::invalid("strip width must be positive"));
    }
    if n == 0 {
        return Ok(Vec::new());
    }
    let limits = sys.limits();
    let tol = sys.incidence_tol();
    let floor = above.clone().unwrap_or_else(T::<S>::zero);
    if floor < T::<S>::zero() {
        return Err(Error::invalid("slope floor must be non-negative"));
    }
    let eta2 = eta.clone() * eta.clone();
    let mut window = T::<S>::from_i64(4 * (n as i64 + 1)) / eta2;
    let mut best = Vec::new();
    for _ in 0..=limits.max_doublings {
        let s_max = floor.clone() + window.clone();
        let bbox = BoundingBox::new(
            T::<S>::zero(),
            eta.clone(),
            T::<S>::zero(),
            eta.clone() * s_max.clone(),
        );
        let pts = match sys.points_in_box(&bbox) {
            Ok(p) => p,
            Err(e) if e.is_resource() => break,
            Err(e) => return Err(e),
        };
        let mut found: Vec<(T<S>, Vec2<T<S>>)> = pts
            .into_iter()
            .filter(|v| v.x.sign_tol(tol) == Ordering::Greater)
            .filter_map(|v| {
                let s = v.y.clone() / v.x.clone();
                let keep = match &above {
                    Some(f) => s > *f && s <= s_max,
                    None => s >= T::<S>::zero() && s <= s_max,
                };
                keep.then_some((s, v))
            })
            .collect();
        found.sort_by(slope_cmp::<T<S>>);
        found.dedup_by(|later, earlier| later.0 == earlier.0);
        if found.len() >= n {
            found.truncate(n);
            return Ok(found);
        }
        best = found;
        window = window.clone() + window;
    }
    Err(Error::Exhausted {
        requested: n,
        partial: best.iter().map(|(s, _)| s.to_f64()).collect(),
    })
}

/// The `n` smallest non-negative slopes of `Λ_x ∩ V_η`, ties collapsed.
pub fn slopes_in_strip<S: PointSystem>(
    sys: &S,
    eta: S::Scalar,
    n: usize,
) -> Result<SlopeSequence<S::Scalar>> {
    let slopes = strip_search(sys, eta.clone(), n, None)?
        .into_iter()
        .map(|(s, _)| s)
        .collect();
    Ok(SlopeSequence { eta, slopes })
}

/// Consecutive differences `s_{i+1} − s_i`.
pub fn gaps<T: Scalar>(s: &SlopeSequence<T>) -> Result<GapSequence<T>> {
    if s.slopes.len() < 2 {
        return Err(Error::invalid("need at least two slopes to form a gap"));
    }
    Ok(GapSequence {
        gaps: s.slopes.windows(2).map(|w| w[1].clone() - w[0].clone()).collect(),
    })
}

fn has_point_in<S: PointSystem>(sys: &S, bbox: BoundingBox<S::Scalar>) -> Result<bool> {
    Ok(sys.points_in_box(&bbox)?.iter().any(|v| !v.is_zero()))
}

fn tol_scalar<S: PointSystem>(sys: &S) -> S::Scalar {
    let tol = sys.incidence_tol();
    if S::Scalar::EXACT || tol == 0.0 {
        return S::Scalar::zero();
    }
    // Float scalars: 1/k with k the nearest integer to 1/tol.
    S::Scalar::one() / S::Scalar::from_i64((1.0 / tol).round() as i64)
}

/// `Λ_x` holds a horizontal vector of length at most `η`.
pub fn is_horizontally_short<S: PointSystem>(sys: &S, eta: S::Scalar) -> Result<bool> {
    if !(eta > S::Scalar::zero()) {
        return Err(Error::invalid("eta must be positive"));
    }
    let t = tol_scalar(sys);
    has_point_in(sys, BoundingBox::new(-eta.clone(), eta, -t.clone(), t))
}

/// `Λ_x` holds a vertical vector of length at most `η`.
pub fn is_vertically_short<S: PointSystem>(sys: &S, eta: S::Scalar) -> Result<bool> {
    if !(eta > S::Scalar::zero()) {
        return Err(Error::invalid("eta must be positive"));
    }
    let t = tol_scalar(sys);
    has_point_in(sys, BoundingBox::new(-t.clone(), t, -eta.clone(), eta))
}

/// `x` is η-exceptional when it is `η/(4c(x))`-vertically short.
pub fn is_exceptional<S: PointSystem>(sys: &S, eta: S::Scalar) -> Result<bool> {
    let c = sys.minkowski_constant().ok_or_else(|| {
        Error::Unsupported("Minkowski constant of this system is unknown".into())
    })?;
    // c(x) is an integer for every system that declares one.
    let four_c = S::Scalar::from_i64((4.0 * c).round() as i64);
    is_vertically_short(sys, eta / four_c)
}

/// Times `0 ≤ s_1 < s_2 < …` at which `h_s·x` is η-horizontally short.
///
/// Computed by flowing: after each hit at time `s`, the system `h_s·x` is
/// queried for its smallest positive strip slope, which is the next return
/// time. The result must agree with [`slopes_in_strip`].
pub fn hitting_times<S: PointSystem>(
    sys: &S,
    eta: S::Scalar,
    n: usize,
) -> Result<Vec<S::Scalar>> {
    if n == 0 {
        return Ok(Vec::new());
    }
    let first = strip_search(sys, eta.clone(), 1, None)?;
    let mut s = first[0].0.clone();
    let mut times = vec![s.clone()];
    // Float systems leave a residual slope of rounding size on the vector
    // that was just made horizontal.
    let floor = if S::Scalar::EXACT {
        S::Scalar::zero()
    } else {
        S::Scalar::from_i64(1) / S::Scalar::from_i64(1_000_000_000)
    };
    while times.len() < n {
        let flowed = sys.act(&shear(s.clone())?)?;
        let next = match strip_search(&flowed, eta.clone(), 1, Some(floor.clone())) {
            Ok(v) => v,
            Err(Error::Exhausted { .. }) => {
                return Err(Error::Exhausted {
                    requested: n,
                    partial: times.iter().map(Scalar::to_f64).collect(),
                })
            }
            Err(e) => return Err(e),
        };
        s = s + next[0].0.clone();
        times.push(s.clone());
    }
    Ok(times)
}

/// Brute-force equivariance check: enumerates `g·x` in `bbox` and compares it
/// with the image under `g` of `x`'s points in a box that covers `g⁻¹·bbox`.
pub fn check_equivariance<S: PointSystem>(
    sys: &S,
    g: &Mat2<S::Scalar>,
    bbox: &BoundingBox<S::Scalar>,
    tol: f64,
) -> Result<bool> {
    let moved = sys.act(g)?;
    let mut direct: Vec<Vec2<f64>> = moved.points_in_box(bbox)?.iter().map(Vec2::to_f64).collect();

    let ginv = g.inverse_unimodular();
    let pre: Vec<Vec2<S::Scalar>> = bbox.corners().iter().map(|c| ginv.apply(c)).collect();
    let pick = |f: fn(&Vec2<S::Scalar>) -> S::Scalar, max: bool| {
        pre.iter().map(f).fold(None::<S::Scalar>, |acc, v| match acc {
            None => Some(v),
            Some(a) => Some(if (v > a) == max { v } else { a }),
        })
    };
    let cover = BoundingBox::new(
        pick(|v| v.x.clone(), false).unwrap(),
        pick(|v| v.x.clone(), true).unwrap(),
        pick(|v| v.y.clone(), false).unwrap(),
        pick(|v| v.y.clone(), true).unwrap(),
    );
    let mut image: Vec<Vec2<f64>> = sys
        .points_in_box(&cover)?
        .iter()
        .map(|v| g.apply(v))
        .filter(|v| bbox.contains(v))
        .map(|v| v.to_f64())
        .collect();
    if direct.len() != image.len() {
        return Ok(false);
    }
    // Match within tolerance; float coordinates of equal points may sort
    // differently, so each point looks through a window of nearby x.
    direct.sort_by(|a, b| a.x.total_cmp(&b.x));
    image.sort_by(|a, b| a.x.total_cmp(&b.x));
    let mut used = vec![false; image.len()];
    for a in &direct {
        let start = image.partition_point(|b| b.x < a.x - tol);
        let hit = (start..image.len())
            .take_while(|&j| image[j].x <= a.x + tol)
            .find(|&j| !used[j] && (image[j].y - a.y).abs() <= tol);
        match hit {
            Some(j) => used[j] = true,
            None => return Ok(false),
        }
    }
    Ok(true)
}
