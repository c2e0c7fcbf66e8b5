//! Exact arithmetic for the factorial-ratio coefficients that appear in the
//! closed-form moments and normalization constants of the Gamma-type
//! operators.
//!
//! Everything here is an exact rational: moment identities are checked by
//! equality, not by floating-point comparison. Log-space floats are used only
//! where a value has to enter a quadrature density, via [`log_factorial`].

use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

/// An exact rational coefficient, stored in lowest terms with positive
/// denominator.
///
/// Thin wrapper around an arbitrary-precision rational so that factorial
/// ratios like `(2n-k+1)!/(n!(n-k)!)` never overflow or round.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Coefficient(BigRational);

impl Coefficient {
    pub fn zero() -> Self {
        Coefficient(BigRational::zero())
    }

    pub fn one() -> Self {
        Coefficient(BigRational::one())
    }

    pub fn from_integer(v: i64) -> Self {
        Coefficient(BigRational::from_integer(BigInt::from(v)))
    }

    /// Builds `numer/denom`, reduced. Panics if `denom` is zero.
    pub fn new(numer: BigInt, denom: BigInt) -> Self {
        Coefficient(BigRational::new(numer, denom))
    }

    pub fn numerator(&self) -> &BigInt {
        self.0.numer()
    }

    pub fn denominator(&self) -> &BigInt {
        self.0.denom()
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    pub fn abs(&self) -> Self {
        Coefficient(self.0.abs())
    }

    pub fn recip(&self) -> Self {
        Coefficient(self.0.recip())
    }

    /// Nearest `f64` to the exact value.
    pub fn to_f64(&self) -> f64 {
        // num-rational scales numerator and denominator before dividing, so
        // this is correctly rounded even when both exceed f64 range.
        self.0.to_f64().expect("finite rational")
    }
}

impl fmt::Display for Coefficient {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl From<BigRational> for Coefficient {
    fn from(r: BigRational) -> Self {
        Coefficient(r)
    }
}

macro_rules! impl_binop {
    ($trait:ident, $method:ident) => {
        impl $trait for Coefficient {
            type Output = Coefficient;
            fn $method(self, rhs: Coefficient) -> Coefficient {
                Coefficient((self.0).$method(rhs.0))
            }
        }
        impl $trait for &Coefficient {
            type Output = Coefficient;
            fn $method(self, rhs: &Coefficient) -> Coefficient {
                Coefficient((&self.0).$method(&rhs.0))
            }
        }
    };
}

impl_binop!(Add, add);
impl_binop!(Sub, sub);
impl_binop!(Mul, mul);
impl_binop!(Div, div);

impl Neg for Coefficient {
    type Output = Coefficient;
    fn neg(self) -> Coefficient {
        Coefficient(-self.0)
    }
}

/// Exact `n!` as a big integer.
pub fn factorial(n: u64) -> BigInt {
    (2..=n).fold(BigInt::one(), |acc, i| acc * BigInt::from(i))
}

/// Binomial coefficient `C(n, j)` as a big integer.
pub fn binomial(n: u64, j: u64) -> BigInt {
    if j > n {
        return BigInt::zero();
    }
    num_integer::binomial(BigInt::from(n), BigInt::from(j))
}

/// Falling factorial `[x]_m = x(x-1)...(x-m+1)`, with `[x]_0 = 1`.
///
/// Defined for any integer `x`, negative included: the product is a
/// polynomial in `x`. It vanishes whenever `0 <= x < m`.
pub fn falling_factorial(x: i64, m: u32) -> Coefficient {
    let mut acc = BigInt::one();
    for i in 0..i64::from(m) {
        acc *= BigInt::from(x - i);
    }
    Coefficient(BigRational::from_integer(acc))
}

/// `ln(n!)` with relative error below 1e-14.
///
/// Exact 64-bit factorial followed by `ln` for `n <= 20`, Lanczos log-gamma
/// above.
pub fn log_factorial(n: u64) -> f64 {
    if n <= 20 {
        let mut f: u64 = 1;
        for i in 2..=n {
            f *= i;
        }
        (f as f64).ln()
    } else {
        ln_gamma(n as f64 + 1.0)
    }
}

/// Lanczos approximation of `ln Γ(z)` for `z > 0` (g = 7, 9 coefficients).
#[allow(clippy::excessive_precision)]
fn ln_gamma(z: f64) -> f64 {
    const G: f64 = 7.0;
    const COEF: [f64; 9] = [
        0.999_999_999_999_809_93,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_13,
        -176.615_029_162_140_59,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_571_6e-6,
        1.505_632_735_149_311_6e-7,
    ];
    debug_assert!(z > 0.0);
    let z = z - 1.0;
    let mut a = COEF[0];
    for (i, c) in COEF.iter().enumerate().skip(1) {
        a += c / (z + i as f64);
    }
    let t = z + G + 0.5;
    0.5 * (2.0 * std::f64::consts::PI).ln() + (z + 0.5) * t.ln() - t + a.ln()
}

/// Exact `(a_1! a_2! ...)/(b_1! b_2! ...)`, cancelling common factors before
/// multiplying so intermediates stay small.
pub fn factorial_ratio(numer_factorials: &[u64], denom_factorials: &[u64]) -> Coefficient {
    let mut numers: Vec<u64> = numer_factorials.to_vec();
    let mut denoms: Vec<u64> = denom_factorials.to_vec();
    numers.sort_unstable();
    denoms.sort_unstable();

    let mut num = BigInt::one();
    let mut den = BigInt::one();
    // Pair the largest remaining factorials: a!/b! is just a partial product.
    while !numers.is_empty() && !denoms.is_empty() {
        let a = numers.pop().expect("checked non-empty");
        let b = denoms.pop().expect("checked non-empty");
        if a >= b {
            for i in (b + 1)..=a {
                num *= BigInt::from(i);
            }
        } else {
            for i in (a + 1)..=b {
                den *= BigInt::from(i);
            }
        }
    }
    for a in numers {
        num *= factorial(a);
    }
    for b in denoms {
        den *= factorial(b);
    }
    Coefficient(BigRational::new(num, den))
}
