//! Scalar types.
//!
//! Everything geometric in the crate is generic over [`Scalar`], which is
//! implemented for `f32`, `f64`, exact rationals ([`Fraction`]) and exact
//! elements of Q(√5) ([`GoldenNum`]). Mixing kinds is never implicit: the
//! only bridge is [`Scalar::to_f64`].

use std::cmp::Ordering;
use std::fmt::{self, Debug, Display};
use std::hash::Hash;
use std::ops::{Add, Div, Mul, Neg, Sub};

use num_integer::Integer;
use num_rational::Ratio;
use num_traits::{One, Signed, Zero};

/// Exact rational number `p/q` in lowest terms with `q >= 1`.
pub type Fraction = Ratio<i64>;

/// Builds `p/q`, reducing to lowest terms. Panics if `q == 0`.
pub fn frac(p: i64, q: i64) -> Fraction {
    Ratio::new(p, q)
}

/// Numerators and denominators of exact values are kept below this bound so
/// that products of two components cannot overflow `i64`.
pub const EXACT_COMPONENT_BOUND: i64 = 1 << 30;

pub trait Scalar:
    Clone
    + Debug
    + PartialEq
    + PartialOrd
    + Zero
    + One
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Neg<Output = Self>
    + Send
    + Sync
    + 'static
{
    /// Whether arithmetic on this type is free of rounding.
    const EXACT: bool;

    /// Name used in diagnostics and output metadata.
    const KIND: &'static str;

    fn to_f64(&self) -> f64;

    fn from_i64(n: i64) -> Self;

    fn is_finite(&self) -> bool {
        true
    }

    /// Sign of the value. For floats, values with `|x| <= tol` count as zero;
    /// exact types ignore `tol`.
    fn sign_tol(&self, tol: f64) -> Ordering;

    /// False once an exact value has grown past [`EXACT_COMPONENT_BOUND`].
    fn within_budget(&self) -> bool {
        true
    }

    /// `a·b + c·d`. Float types compensate the rounding of one product, so
    /// the result stays accurate under cancellation.
    fn dot2(a: &Self, b: &Self, c: &Self, d: &Self) -> Self {
        a.clone() * b.clone() + c.clone() * d.clone()
    }

    fn abs_val(&self) -> Self {
        if *self < Self::zero() {
            -self.clone()
        } else {
            self.clone()
        }
    }
}

/// Scalars closed under division, with exact integer floor.
pub trait FieldScalar: Scalar + Div<Output = Self> {
    fn floor_i64(&self) -> i64;

    fn ceil_i64(&self) -> i64 {
        let f = self.floor_i64();
        if Self::from_i64(f) == *self {
            f
        } else {
            f + 1
        }
    }
}

macro_rules! float_scalar {
    ($t:ty, $name:expr) => {
        impl Scalar for $t {
            const EXACT: bool = false;
            const KIND: &'static str = $name;

            fn to_f64(&self) -> f64 {
                *self as f64
            }

            fn from_i64(n: i64) -> Self {
                n as $t
            }

            fn is_finite(&self) -> bool {
                <$t>::is_finite(*self)
            }

            fn sign_tol(&self, tol: f64) -> Ordering {
                let x = *self as f64;
                if x.abs() <= tol {
                    Ordering::Equal
                } else if x > 0.0 {
                    Ordering::Greater
                } else {
                    Ordering::Less
                }
            }

            fn abs_val(&self) -> Self {
                self.abs()
            }

            fn dot2(a: &Self, b: &Self, c: &Self, d: &Self) -> Self {
                let w = c * d;
                let e = c.mul_add(*d, -w);
                a.mul_add(*b, w) + e
            }
        }

        impl FieldScalar for $t {
            fn floor_i64(&self) -> i64 {
                self.floor() as i64
            }

            fn ceil_i64(&self) -> i64 {
                self.ceil() as i64
            }
        }
    };
}

float_scalar!(f64, "f64");
float_scalar!(f32, "f32");

impl Scalar for Fraction {
    const EXACT: bool = true;
    const KIND: &'static str = "rational";

    fn to_f64(&self) -> f64 {
        *self.numer() as f64 / *self.denom() as f64
    }

    fn from_i64(n: i64) -> Self {
        Ratio::from_integer(n)
    }

    fn sign_tol(&self, _tol: f64) -> Ordering {
        self.numer().cmp(&0)
    }

    fn within_budget(&self) -> bool {
        self.numer().abs() < EXACT_COMPONENT_BOUND && *self.denom() < EXACT_COMPONENT_BOUND
    }

    fn abs_val(&self) -> Self {
        self.abs()
    }
}

impl FieldScalar for Fraction {
    fn floor_i64(&self) -> i64 {
        self.numer().div_floor(self.denom())
    }
}

/// Exact element `a + b·φ` of Q(√5), where `φ = (1+√5)/2` satisfies `φ² = φ + 1`.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct GoldenNum {
    a: Fraction,
    b: Fraction,
}

impl GoldenNum {
    pub const PHI_F64: f64 = 1.618_033_988_749_895;

    pub fn new(a: Fraction, b: Fraction) -> Self {
        GoldenNum { a, b }
    }

    pub fn from_ints(a: i64, b: i64) -> Self {
        GoldenNum::new(Fraction::from_integer(a), Fraction::from_integer(b))
    }

    /// The golden ratio φ.
    pub fn phi() -> Self {
        GoldenNum::from_ints(0, 1)
    }

    pub fn rational_part(&self) -> Fraction {
        self.a
    }

    pub fn phi_part(&self) -> Fraction {
        self.b
    }

    /// Galois conjugate, φ ↦ 1 − φ.
    pub fn conjugate(&self) -> Self {
        GoldenNum::new(self.a + self.b, -self.b)
    }

    /// Field norm `x · conj(x) = a² + ab − b²`.
    pub fn norm(&self) -> Fraction {
        self.a * self.a + self.a * self.b - self.b * self.b
    }

    pub fn recip(&self) -> Option<Self> {
        let n = self.norm();
        if n.is_zero() {
            return None;
        }
        let c = self.conjugate();
        Some(GoldenNum::new(c.a / n, c.b / n))
    }

    fn signum_exact(&self) -> Ordering {
        // a + bφ = (c + d√5)/2 with c = 2a + b, d = b.
        let c = self.a * 2 + self.b;
        let d = self.b;
        let sc = c.numer().cmp(&0);
        let sd = d.numer().cmp(&0);
        match (sc, sd) {
            (Ordering::Equal, s) | (s, Ordering::Equal) => s,
            (Ordering::Greater, Ordering::Greater) => Ordering::Greater,
            (Ordering::Less, Ordering::Less) => Ordering::Less,
            (Ordering::Greater, Ordering::Less) => (c * c).cmp(&(d * d * 5)),
            (Ordering::Less, Ordering::Greater) => (d * d * 5).cmp(&(c * c)),
        }
    }
}

impl Debug for GoldenNum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        Display::fmt(self, f)
    }
}

impl Display for GoldenNum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.b.is_zero() {
            write!(f, "{}", self.a)
        } else if self.a.is_zero() {
            write!(f, "{}φ", self.b)
        } else {
            write!(f, "{}{:+}φ", self.a, self.b)
        }
    }
}

impl From<i64> for GoldenNum {
    fn from(n: i64) -> Self {
        GoldenNum::from_ints(n, 0)
    }
}

impl From<Fraction> for GoldenNum {
    fn from(q: Fraction) -> Self {
        GoldenNum::new(q, Fraction::zero())
    }
}

impl Add for GoldenNum {
    type Output = GoldenNum;
    fn add(self, o: GoldenNum) -> GoldenNum {
        GoldenNum::new(self.a + o.a, self.b + o.b)
    }
}

impl Sub for GoldenNum {
    type Output = GoldenNum;
    fn sub(self, o: GoldenNum) -> GoldenNum {
        GoldenNum::new(self.a - o.a, self.b - o.b)
    }
}

impl Mul for GoldenNum {
    type Output = GoldenNum;
    fn mul(self, o: GoldenNum) -> GoldenNum {
        let bd = self.b * o.b;
        GoldenNum::new(self.a * o.a + bd, self.a * o.b + self.b * o.a + bd)
    }
}

#[allow(clippy::suspicious_arithmetic_impl)]
impl Div for GoldenNum {
    type Output = GoldenNum;
    fn div(self, o: GoldenNum) -> GoldenNum {
        self * o.recip().expect("division of GoldenNum by zero")
    }
}

impl Neg for GoldenNum {
    type Output = GoldenNum;
    fn neg(self) -> GoldenNum {
        GoldenNum::new(-self.a, -self.b)
    }
}

impl Zero for GoldenNum {
    fn zero() -> Self {
        GoldenNum::default()
    }
    fn is_zero(&self) -> bool {
        self.a.is_zero() && self.b.is_zero()
    }
}

impl One for GoldenNum {
    fn one() -> Self {
        GoldenNum::from_ints(1, 0)
    }
}

impl PartialOrd for GoldenNum {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for GoldenNum {
    fn cmp(&self, other: &Self) -> Ordering {
        (*self - *other).signum_exact()
    }
}

impl Scalar for GoldenNum {
    const EXACT: bool = true;
    const KIND: &'static str = "golden";

    fn to_f64(&self) -> f64 {
        self.a.to_f64() + self.b.to_f64() * Self::PHI_F64
    }

    fn from_i64(n: i64) -> Self {
        GoldenNum::from_ints(n, 0)
    }

    fn sign_tol(&self, _tol: f64) -> Ordering {
        self.signum_exact()
    }

    fn within_budget(&self) -> bool {
        self.a.within_budget() && self.b.within_budget()
    }
}

impl FieldScalar for GoldenNum {
    fn floor_i64(&self) -> i64 {
        let mut k = self.to_f64().floor() as i64;
        while GoldenNum::from_i64(k) > *self {
            k -= 1;
        }
        while GoldenNum::from_i64(k + 1) <= *self {
            k += 1;
        }
        k
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn phi_relations() {
        let phi = GoldenNum::phi();
        let one = GoldenNum::one();
        assert_eq!(phi * phi, phi + one);
        assert_eq!((phi - one) * phi, one);
        assert_eq!(phi.recip().unwrap(), phi - one);
        assert_eq!(phi.norm(), frac(-1, 1));
    }

    #[test]
    fn golden_order_and_floor() {
        let phi = GoldenNum::phi();
        assert!(phi > GoldenNum::one());
        assert!(phi < GoldenNum::from_i64(2));
        assert!(GoldenNum::one() - phi < GoldenNum::zero());
        assert_eq!(phi.floor_i64(), 1);
        assert_eq!((-phi).floor_i64(), -2);
        assert_eq!((phi * phi * phi).floor_i64(), 4);
        // 13φ − 21 > 0 > 8φ − 13, both within 0.06 of zero.
        let tiny = GoldenNum::from_ints(-21, 13);
        assert!(tiny > GoldenNum::zero());
        assert_eq!(tiny.floor_i64(), 0);
        let below = GoldenNum::from_ints(-13, 8);
        assert!(below < GoldenNum::zero());
        assert_eq!(below.floor_i64(), -1);
    }

    #[test]
    fn fraction_floor_and_budget() {
        assert_eq!(frac(-7, 2).floor_i64(), -4);
        assert_eq!(frac(7, 2).ceil_i64(), 4);
        assert_eq!(frac(6, 2).ceil_i64(), 3);
        assert!(frac(1, 3).within_budget());
        assert!(!frac(1, EXACT_COMPONENT_BOUND).within_budget());
    }

    #[test]
    fn float_sign_tolerance() {
        assert_eq!(1e-13f64.sign_tol(1e-12), Ordering::Equal);
        assert_eq!((-1e-3f64).sign_tol(1e-12), Ordering::Less);
        assert_eq!(frac(1, 1_000_000).sign_tol(1.0), Ordering::Greater);
    }

    fn golden() -> impl Strategy<Value = GoldenNum> {
        (-500i64..500, -500i64..500, 1i64..20, 1i64..20)
            .prop_map(|(a, b, p, q)| GoldenNum::new(frac(a, p), frac(b, q)))
    }

    proptest! {
        #[test]
        fn golden_arithmetic_matches_floats(x in golden(), y in golden()) {
            let tol = 1e-9 * (1.0 + x.to_f64().abs()) * (1.0 + y.to_f64().abs());
            prop_assert!(((x * y).to_f64() - x.to_f64() * y.to_f64()).abs() < tol);
            prop_assert!(((x + y).to_f64() - (x.to_f64() + y.to_f64())).abs() < tol);
            if !y.is_zero() {
                prop_assert_eq!((x / y) * y, x);
            }
        }

        #[test]
        fn golden_embedding_is_monotone(x in golden(), y in golden()) {
            if x < y {
                prop_assert!(x.to_f64() <= y.to_f64());
            }
            prop_assert_eq!(x.cmp(&y), (x - y).sign_tol(0.0));
        }
    }
}
