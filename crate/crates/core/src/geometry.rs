//! Planar vectors, 2×2 matrices, the one-parameter subgroups of SL(2,R) and
//! the plane regions used throughout the pipelines.

use std::f64::consts::PI;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_traits::Float;

use crate::error::{Error, Result};
use crate::scalar::{FieldScalar, Scalar};

/// Column vector `(x, y)^T`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default, PartialOrd, Ord)]
pub struct Vec2<T> {
    pub x: T,
    pub y: T,
}

impl<T> Vec2<T> {
    pub const fn new(x: T, y: T) -> Self {
        Vec2 { x, y }
    }
}

impl<T: Scalar> Vec2<T> {
    pub fn zero() -> Self {
        Vec2::new(T::zero(), T::zero())
    }

    pub fn dot(&self, o: &Self) -> T {
        T::dot2(&self.x, &o.x, &self.y, &o.y)
    }

    /// z-component of the cross product; positive when `o` is counter-clockwise of `self`.
    pub fn cross(&self, o: &Self) -> T {
        T::dot2(&self.x, &o.y, &-self.y.clone(), &o.x)
    }

    pub fn norm_sq(&self) -> T {
        self.dot(self)
    }

    pub fn is_zero(&self) -> bool {
        self.x.is_zero() && self.y.is_zero()
    }

    pub fn to_f64(&self) -> Vec2<f64> {
        Vec2::new(self.x.to_f64(), self.y.to_f64())
    }

    /// Angle in `[0, 2π)`, computed in floating point.
    pub fn angle(&self) -> f64 {
        let v = self.to_f64();
        let a = v.y.atan2(v.x);
        if a < 0.0 {
            a + 2.0 * PI
        } else {
            a
        }
    }
}

impl<T: FieldScalar> Vec2<T> {
    /// Slope `y/x`; vertical vectors have none.
    pub fn slope(&self) -> Result<T> {
        if self.x.is_zero() {
            return Err(Error::VerticalVector);
        }
        Ok(self.y.clone() / self.x.clone())
    }
}

impl<T: Scalar> Add for Vec2<T> {
    type Output = Vec2<T>;
    fn add(self, o: Self) -> Self {
        Vec2::new(self.x + o.x, self.y + o.y)
    }
}

impl<T: Scalar> Sub for Vec2<T> {
    type Output = Vec2<T>;
    fn sub(self, o: Self) -> Self {
        Vec2::new(self.x - o.x, self.y - o.y)
    }
}

impl<T: Scalar> Neg for Vec2<T> {
    type Output = Vec2<T>;
    fn neg(self) -> Self {
        Vec2::new(-self.x, -self.y)
    }
}

impl<T: fmt::Display> fmt::Display for Vec2<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.x, self.y)
    }
}

/// Slope of `v`, free-function form.
pub fn slope<T: FieldScalar>(v: &Vec2<T>) -> Result<T> {
    v.slope()
}

/// 2×2 matrix, row-major: `[[a, b], [c, d]]`. Columns are the images of the
/// standard basis vectors.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Mat2<T> {
    pub a: T,
    pub b: T,
    pub c: T,
    pub d: T,
}

impl<T: Scalar> Mat2<T> {
    pub fn new(a: T, b: T, c: T, d: T) -> Self {
        Mat2 { a, b, c, d }
    }

    /// Matrix with the given columns.
    pub fn from_columns(c0: Vec2<T>, c1: Vec2<T>) -> Self {
        Mat2::new(c0.x, c1.x, c0.y, c1.y)
    }

    pub fn identity() -> Self {
        Mat2::new(T::one(), T::zero(), T::zero(), T::one())
    }

    pub fn det(&self) -> T {
        T::dot2(&self.a, &self.d, &-self.b.clone(), &self.c)
    }

    pub fn col0(&self) -> Vec2<T> {
        Vec2::new(self.a.clone(), self.c.clone())
    }

    pub fn col1(&self) -> Vec2<T> {
        Vec2::new(self.b.clone(), self.d.clone())
    }

    pub fn apply(&self, v: &Vec2<T>) -> Vec2<T> {
        Vec2::new(
            T::dot2(&self.a, &v.x, &self.b, &v.y),
            T::dot2(&self.c, &v.x, &self.d, &v.y),
        )
    }

    /// Image of integer coefficients `(m, k)`.
    pub fn apply_int(&self, m: i64, k: i64) -> Vec2<T> {
        self.apply(&Vec2::new(T::from_i64(m), T::from_i64(k)))
    }

    /// Inverse of a determinant-one matrix (the adjugate).
    pub fn inverse_unimodular(&self) -> Self {
        Mat2::new(
            self.d.clone(),
            -self.b.clone(),
            -self.c.clone(),
            self.a.clone(),
        )
    }

    pub fn to_f64(&self) -> Mat2<f64> {
        Mat2::new(self.a.to_f64(), self.b.to_f64(), self.c.to_f64(), self.d.to_f64())
    }

    /// True when `det = 1` exactly, or within `1e-12` for floats.
    pub fn is_unimodular(&self) -> bool {
        let det = self.det() - T::one();
        det.sign_tol(1e-12) == std::cmp::Ordering::Equal
    }

    pub fn max_abs_diff(&self, o: &Self) -> f64 {
        [
            (self.a.clone() - o.a.clone()).to_f64().abs(),
            (self.b.clone() - o.b.clone()).to_f64().abs(),
            (self.c.clone() - o.c.clone()).to_f64().abs(),
            (self.d.clone() - o.d.clone()).to_f64().abs(),
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }
}

impl<T: Scalar> Mul for Mat2<T> {
    type Output = Mat2<T>;
    fn mul(self, o: Self) -> Self {
        let Mat2 { a, b, c, d } = &self;
        Mat2::new(
            T::dot2(a, &o.a, b, &o.c),
            T::dot2(a, &o.b, b, &o.d),
            T::dot2(c, &o.a, d, &o.c),
            T::dot2(c, &o.b, d, &o.d),
        )
    }
}

impl<T: Scalar> Mul<Vec2<T>> for Mat2<T> {
    type Output = Vec2<T>;
    fn mul(self, v: Vec2<T>) -> Vec2<T> {
        self.apply(&v)
    }
}

fn require_finite<T: Scalar>(name: &str, v: &T) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(format!("{name} must be finite")))
    }
}

/// Horocycle element `h_s = [[1, 0], [−s, 1]]`; it lowers every slope by `s`.
pub fn shear<T: Scalar>(s: T) -> Result<Mat2<T>> {
    require_finite("shear parameter", &s)?;
    Ok(Mat2::new(T::one(), T::zero(), -s, T::one()))
}

/// Geodesic element `g_t = diag(e^{t/2}, e^{−t/2})`.
pub fn diag_flow<T: Scalar + Float>(t: T) -> Result<Mat2<T>> {
    require_finite("flow time", &t)?;
    let half = t / (T::one() + T::one());
    Ok(Mat2::new(half.exp(), T::zero(), T::zero(), (-half).exp()))
}

/// `rotation(θ)` is counter-clockwise rotation by `θ`; `rotation(−θ)` maps a
/// vector at angle `θ` onto the positive x-axis.
pub fn rotation<T: Scalar + Float>(theta: T) -> Result<Mat2<T>> {
    require_finite("rotation angle", &theta)?;
    let (s, c) = theta.sin_cos();
    Ok(Mat2::new(c, -s, s, c))
}

/// Closed axis-aligned box `[x_min, x_max] × [y_min, y_max]`.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundingBox<T> {
    pub x_min: T,
    pub x_max: T,
    pub y_min: T,
    pub y_max: T,
}

impl<T: Scalar> BoundingBox<T> {
    pub fn new(x_min: T, x_max: T, y_min: T, y_max: T) -> Self {
        BoundingBox { x_min, x_max, y_min, y_max }
    }

    /// The square `[−r, r]²`.
    pub fn centered(r: T) -> Self {
        BoundingBox::new(-r.clone(), r.clone(), -r.clone(), r)
    }

    pub fn contains(&self, v: &Vec2<T>) -> bool {
        v.x >= self.x_min && v.x <= self.x_max && v.y >= self.y_min && v.y <= self.y_max
    }

    pub fn corners(&self) -> [Vec2<T>; 4] {
        [
            Vec2::new(self.x_min.clone(), self.y_min.clone()),
            Vec2::new(self.x_max.clone(), self.y_min.clone()),
            Vec2::new(self.x_max.clone(), self.y_max.clone()),
            Vec2::new(self.x_min.clone(), self.y_max.clone()),
        ]
    }

    /// Largest Euclidean norm of a point of the box, in floating point.
    pub fn max_norm(&self) -> f64 {
        self.corners()
            .iter()
            .map(|c| c.to_f64().norm_sq().sqrt())
            .fold(0.0, f64::max)
    }
}

/// Plane regions. Boundaries are closed except where noted; boundary sets
/// have measure zero, so gap statistics do not depend on the choice.
#[derive(Clone, Debug, PartialEq)]
pub enum Region<T> {
    /// `{0 < x ≤ η, y ≥ 0}`. The line `x = 0` stays excluded (vertical
    /// vectors have no slope); the bottom edge `y = 0` is kept so that slope
    /// zero is counted.
    VerticalStrip { eta: T },
    /// `{|w| ≤ R, |arg w − θ| ≤ σ/R²}` (angles compared modulo 2π).
    Wedge { theta: f64, sigma: f64, radius: f64 },
    /// Closed triangle with vertices `(0,0)`, `(1,σ)`, `(1,−σ)`.
    Triangle { sigma: T },
    /// Closed disc `|w| ≤ R`.
    Ball { radius: T },
}

impl<T: Scalar> Region<T> {
    pub fn vertical_strip(eta: T) -> Result<Self> {
        positive("strip width", &eta)?;
        Ok(Region::VerticalStrip { eta })
    }

    pub fn wedge(theta: f64, sigma: f64, radius: f64) -> Result<Self> {
        positive("wedge parameter sigma", &sigma)?;
        positive("wedge radius", &radius)?;
        require_finite("wedge direction", &theta)?;
        Ok(Region::Wedge { theta, sigma, radius })
    }

    pub fn triangle(sigma: T) -> Result<Self> {
        positive("triangle parameter sigma", &sigma)?;
        Ok(Region::Triangle { sigma })
    }

    pub fn ball(radius: T) -> Result<Self> {
        positive("ball radius", &radius)?;
        Ok(Region::Ball { radius })
    }

    pub fn contains(&self, v: &Vec2<T>) -> bool {
        match self {
            Region::VerticalStrip { eta } => {
                v.x > T::zero() && v.x <= *eta && v.y >= T::zero()
            }
            Region::Wedge { theta, sigma, radius } => {
                let w = v.to_f64();
                let r2 = w.norm_sq();
                if r2 == 0.0 || r2 > radius * radius {
                    return false;
                }
                angular_distance(v.angle(), *theta) <= sigma / (radius * radius)
            }
            Region::Triangle { sigma } => {
                let s = sigma.clone() * v.x.clone();
                v.x >= T::zero() && v.x <= T::one() && v.y <= s && v.y >= -s
            }
            Region::Ball { radius } => v.norm_sq() <= radius.clone() * radius.clone(),
        }
    }

    /// A closed box containing the region, or `None` if it is unbounded.
    pub fn bounding_box(&self) -> Option<BoundingBox<T>> {
        match self {
            Region::VerticalStrip { .. } => None,
            Region::Wedge { radius, .. } => {
                // Exact types cannot represent a float radius faithfully; pad by one.
                let r = T::from_i64(radius.ceil() as i64 + 1);
                Some(BoundingBox::centered(r))
            }
            Region::Triangle { sigma } => Some(BoundingBox::new(
                T::zero(),
                T::one(),
                -sigma.clone(),
                sigma.clone(),
            )),
            Region::Ball { radius } => Some(BoundingBox::centered(radius.clone())),
        }
    }
}

fn positive<T: Scalar>(name: &str, v: &T) -> Result<()> {
    require_finite(name, v)?;
    if *v > T::zero() {
        Ok(())
    } else {
        Err(Error::invalid(format!("{name} must be positive")))
    }
}

/// Distance between two angles on the circle, in `[0, π]`.
pub fn angular_distance(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(2.0 * PI);
    d.min(2.0 * PI - d)
}
