//! The generalized Gamma-type positive linear operators `M_{n,k}`.
//!
//! `M_{n,k}(f; x)` integrates `f` against the kernel
//!
//! ```text
//! K_{n,k}(x,t) = (2n-k+1)!/(n!(n-k)!) * x^{n+1} t^{n-k} / (x+t)^{2n-k+2}
//! ```
//!
//! over `t` in `(0, inf)`. The substitution `u = t/(x+t)` turns this into a
//! Beta(n-k+1, n+1)-weighted integral over `(0, 1)`, which is what the
//! quadrature actually evaluates; the beta density is computed in log space
//! so large `n` neither overflow nor underflow prematurely.
//!
//! Closed-form raw and central moments are exact rationals, so algebraic
//! identities between them are checked by equality rather than tolerance.

use std::fmt;

use crate::coefficients::{binomial, factorial, falling_factorial, log_factorial, Coefficient};
use crate::quadrature::{self, QuadratureSpec};
use crate::spaces::TestFunction;

use num_bigint::BigInt;
use num_traits::Zero;

/// Errors from operator construction and evaluation.
#[derive(Debug, Clone, PartialEq)]
pub enum OperatorError {
    /// `(n, k)` outside the admissible range `n >= k >= 1`.
    InvalidParams { n: u32, k: u32 },
    /// Evaluation point must be strictly positive.
    NonPositivePoint { x: f64 },
    /// Moment order outside the validity range of the requested formula.
    MomentOutOfRange { m: u32, max: u32 },
    /// The integrand grows too fast for the kernel tail: needs `p <= n`.
    NonIntegrableGrowth { growth: u32, n: u32 },
    /// The subdivision budget ran out; the best estimate is carried along.
    ToleranceNotMet { best: ApplyResult },
    /// Malformed quadrature settings.
    BadQuadratureSpec(String),
}

impl fmt::Display for OperatorError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OperatorError::InvalidParams { n, k } => {
                write!(
                    f,
                    "invalid operator parameters: need n >= k >= 1, got n={n}, k={k}"
                )
            }
            OperatorError::NonPositivePoint { x } => {
                write!(f, "evaluation point must be positive, got x={x}")
            }
            OperatorError::MomentOutOfRange { m, max } => {
                write!(f, "moment order m={m} outside valid range 0..={max}")
            }
            OperatorError::NonIntegrableGrowth { growth, n } => {
                write!(
                    f,
                    "growth exponent {growth} exceeds n={n}; integral diverges"
                )
            }
            OperatorError::ToleranceNotMet { best } => write!(
                f,
                "quadrature budget exhausted: value={} with error estimate {}",
                best.value, best.error_estimate
            ),
            OperatorError::BadQuadratureSpec(msg) => write!(f, "bad quadrature spec: {msg}"),
        }
    }
}

impl std::error::Error for OperatorError {}

/// Outcome of evaluating `M_{n,k}(f; x)` by quadrature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ApplyResult {
    pub value: f64,
    /// Estimated absolute error of the quadrature.
    pub error_estimate: f64,
    /// Panel bisections spent.
    pub subdivisions: usize,
}

/// The operator `M_{n,k}`, indexed by integers `n >= k >= 1`.
///
/// `k = 1` recovers Mazhar's operators `F_n`; `k = 2` recovers Karsli's
/// `L_{n-2}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GammaOperator {
    n: u32,
    k: u32,
}

impl GammaOperator {
    pub fn new(n: u32, k: u32) -> Result<Self, OperatorError> {
        if k == 0 || n < k {
            return Err(OperatorError::InvalidParams { n, k });
        }
        Ok(GammaOperator { n, k })
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    /// `ln` of the normalization constant `(2n-k+1)!/(n!(n-k)!)`.
    fn log_norm_constant(&self) -> f64 {
        log_factorial(2 * u64::from(self.n) - u64::from(self.k) + 1)
            - log_factorial(u64::from(self.n))
            - log_factorial(u64::from(self.n - self.k))
    }

    /// Kernel density `K_{n,k}(x, t)` for `x, t > 0`, evaluated in log space.
    ///
    /// Underflow to zero far in the tails is expected and not an error.
    pub fn kernel_density(&self, x: f64, t: f64) -> f64 {
        assert!(x > 0.0 && t > 0.0, "kernel_density needs x, t > 0");
        let n = f64::from(self.n);
        let k = f64::from(self.k);
        let log_density = self.log_norm_constant() + (n + 1.0) * x.ln() + (n - k) * t.ln()
            - (2.0 * n - k + 2.0) * (x + t).ln();
        if log_density < -745.0 {
            0.0
        } else {
            log_density.exp()
        }
    }

    /// Evaluates `M_{n,k}(f; x)` adaptively after the substitution
    /// `u = t/(x+t)`:
    ///
    /// ```text
    /// M_{n,k}(f; x) = int_0^1 beta(u; n-k+1, n+1) f(x u/(1-u)) du
    /// ```
    pub fn apply(
        &self,
        f: &TestFunction,
        x: f64,
        quad: &QuadratureSpec,
    ) -> Result<ApplyResult, OperatorError> {
        if x.is_nan() || x <= 0.0 {
            return Err(OperatorError::NonPositivePoint { x });
        }
        quad.validate().map_err(OperatorError::BadQuadratureSpec)?;
        if f.growth_exponent() > self.n {
            return Err(OperatorError::NonIntegrableGrowth {
                growth: f.growth_exponent(),
                n: self.n,
            });
        }

        let alpha = f64::from(self.n - self.k); // exponent of u
        let beta = f64::from(self.n); // exponent of (1-u)
                                      // (2n-k+1)!/((n-k)! n!) is exactly 1/B(n-k+1, n+1)
        let ln_inv_beta_fn = self.log_norm_constant();

        let integrand = move |u: f64| {
            if u <= 0.0 || u >= 1.0 {
                return 0.0;
            }
            let log_density = alpha * u.ln() + beta * (-u).ln_1p() + ln_inv_beta_fn;
            if log_density < -745.0 {
                return 0.0;
            }
            let v = log_density.exp() * f.eval(x * u / (1.0 - u));
            // a density that underflowed to zero against an overflowing f
            if v.is_nan() {
                0.0
            } else {
                v
            }
        };

        // split at the beta mode so the worst-first refinement starts on the
        // peak even for very concentrated densities
        let mode = alpha / (alpha + beta);
        let seeds = [mode, 0.5 * mode, mode + 0.5 * (1.0 - mode)];
        let est = quadrature::integrate(integrand, 0.0, 1.0, &seeds, quad);
        let result = ApplyResult {
            value: est.value,
            error_estimate: est.error_estimate,
            subdivisions: est.subdivisions,
        };
        if est.converged {
            Ok(result)
        } else {
            Err(OperatorError::ToleranceNotMet { best: result })
        }
    }

    /// Exact raw-moment coefficient: `M_{n,k}(t^m; x) = c x^m` with
    /// `c = [n-k+m]_m / [n]_m`, valid in the published range `m <= n-k`.
    pub fn raw_moment(&self, m: u32) -> Result<Coefficient, OperatorError> {
        if m > self.n - self.k {
            return Err(OperatorError::MomentOutOfRange {
                m,
                max: self.n - self.k,
            });
        }
        Ok(moment_ratio(self.n, self.k, m))
    }

    /// Exact central-moment coefficient: `M_{n,k}((t-x)^m; x) = c x^m` with
    ///
    /// ```text
    /// c = sum_{j=0}^m (-1)^j C(m,j) (n-m+j)!(n-k+m-j)! / (n!(n-k)!)
    /// ```
    ///
    /// Valid for `m <= n`.
    pub fn central_moment(&self, m: u32) -> Result<Coefficient, OperatorError> {
        if m > self.n {
            return Err(OperatorError::MomentOutOfRange { m, max: self.n });
        }
        let n = u64::from(self.n);
        let k = u64::from(self.k);
        let mm = u64::from(m);
        let mut acc = BigInt::zero();
        for j in 0..=mm {
            let term = binomial(mm, j) * factorial(n - mm + j) * factorial(n - k + mm - j);
            if j % 2 == 0 {
                acc += term;
            } else {
                acc -= term;
            }
        }
        Ok(Coefficient::new(acc, factorial(n) * factorial(n - k)))
    }

    /// Specialized closed forms of the central-moment coefficients for
    /// `m <= 4`, as explicit polynomials in `n` and `k` over the falling
    /// factorial `[n]_m`:
    ///
    /// ```text
    /// m=0: 1
    /// m=1: (1-k)/n
    /// m=2: (k^2 - 5k + 2n + 4) / (n(n-1))
    /// m=3: (-k^3 + 12k^2 - 35k + (18-6k)n + 24) / (n(n-1)(n-2))
    /// m=4: (12n^2 + (12k^2-108k+180)n + k^4 - 22k^3 + 143k^2 - 314k + 192)
    ///       / (n(n-1)(n-2)(n-3))
    /// ```
    ///
    /// Must agree with [`Self::central_moment`] identically; the verification
    /// suites check exactly that.
    pub fn central_moment_closed_form(&self, m: u32) -> Result<Coefficient, OperatorError> {
        if m > 4 || m > self.n {
            return Err(OperatorError::MomentOutOfRange {
                m,
                max: 4.min(self.n),
            });
        }
        let n = i64::from(self.n);
        let k = i64::from(self.k);
        let numerator: i64 = match m {
            0 => 1,
            1 => 1 - k,
            2 => k * k - 5 * k + 2 * n + 4,
            3 => -k.pow(3) + 12 * k * k - 35 * k + (18 - 6 * k) * n + 24,
            4 => {
                12 * n * n + (12 * k * k - 108 * k + 180) * n + k.pow(4) - 22 * k.pow(3)
                    + 143 * k * k
                    - 314 * k
                    + 192
            }
            _ => unreachable!(),
        };
        let denominator = falling_factorial(n, m);
        Ok(Coefficient::from_integer(numerator) / denominator)
    }

    /// `central_moment(m) * n^floor((m+1)/2)` as a float; bounded in `n` for
    /// each fixed `k` and `m <= 4`.
    pub fn scaled_central_moment(&self, m: u32) -> Result<f64, OperatorError> {
        if m > 4 {
            return Err(OperatorError::MomentOutOfRange { m, max: 4 });
        }
        let c = self.central_moment(m)?;
        let power = m.div_ceil(2);
        let scale = Coefficient::from_integer(i64::from(self.n))
            .to_f64()
            .powi(power as i32);
        Ok(c.to_f64() * scale)
    }

    /// The modified operator
    /// `H_{n,k}(f; x) = M_{n,k}(f; x) - f(x + (1-k)x/n) + f(x)`,
    /// which reproduces affine functions exactly.
    pub fn apply_modified(
        &self,
        f: &TestFunction,
        x: f64,
        quad: &QuadratureSpec,
    ) -> Result<f64, OperatorError> {
        let m = self.apply(f, x, quad)?;
        let shift = x + (1.0 - f64::from(self.k)) * x / f64::from(self.n);
        Ok(m.value - f.eval(shift) + f.eval(x))
    }

    /// Independent route to the kernel: the composition of Gamma densities
    ///
    /// ```text
    /// int_0^inf g_n(x, u) g_{n-k}(u, t) du
    /// ```
    ///
    /// evaluated by adaptive quadrature after mapping `u = v/(1-v)`. Must
    /// equal [`Self::kernel_density`].
    pub fn kernel_by_composition(
        &self,
        x: f64,
        t: f64,
        quad: &QuadratureSpec,
    ) -> Result<f64, OperatorError> {
        assert!(x > 0.0 && t > 0.0, "kernel_by_composition needs x, t > 0");
        quad.validate().map_err(OperatorError::BadQuadratureSpec)?;
        let n = self.n;
        let q = self.n - self.k;

        let integrand = move |v: f64| {
            if v <= 0.0 || v >= 1.0 {
                return 0.0;
            }
            let u = v / (1.0 - v);
            let ld = log_gamma_density(n, x, u) + log_gamma_density(q, u, t);
            if ld < -745.0 {
                return 0.0;
            }
            ld.exp() / ((1.0 - v) * (1.0 - v))
        };

        // the u-integrand peaks at (2n-k+1)/(x+t); map that into v
        let u_peak = f64::from(2 * n - self.k + 1) / (x + t);
        let v_peak = u_peak / (1.0 + u_peak);
        let seeds = [v_peak, 0.5 * v_peak, v_peak + 0.5 * (1.0 - v_peak)];
        let est = quadrature::integrate(integrand, 0.0, 1.0, &seeds, quad);
        if est.converged {
            Ok(est.value)
        } else {
            Err(OperatorError::ToleranceNotMet {
                best: ApplyResult {
                    value: est.value,
                    error_estimate: est.error_estimate,
                    subdivisions: est.subdivisions,
                },
            })
        }
    }
}

/// Gamma density `g_n(x, u) = x^{n+1} e^{-xu} u^n / n!` for `x > 0`,
/// `u >= 0`, in linear scale.
pub fn gamma_density(n: u32, x: f64, u: f64) -> f64 {
    assert!(x > 0.0 && u >= 0.0, "gamma_density needs x > 0, u >= 0");
    let ld = log_gamma_density(n, x, u);
    if ld < -745.0 {
        0.0
    } else {
        ld.exp()
    }
}

/// `ln g_n(x, u)`, with `-inf` at `u = 0` when `n > 0`.
fn log_gamma_density(n: u32, x: f64, u: f64) -> f64 {
    let nf = f64::from(n);
    let u_term = if n == 0 {
        0.0
    } else if u == 0.0 {
        return f64::NEG_INFINITY;
    } else {
        nf * u.ln()
    };
    (nf + 1.0) * x.ln() - x * u + u_term - log_factorial(u64::from(n))
}

/// The factorial ratio `(n-k+m)!(n-m)! / ((n-k)! n!)`, i.e. the raw-moment
/// coefficient extended to its full domain of convergence `m <= n`.
///
/// The published moment formula only claims `m <= n-k`, but the norm and
/// second-moment bounds use this ratio at orders up to `p + 2`.
pub fn moment_ratio(n: u32, k: u32, m: u32) -> Coefficient {
    assert!(
        k >= 1 && n >= k && m <= n,
        "moment_ratio needs n >= k >= 1, m <= n"
    );
    let num = falling_factorial(i64::from(n - k + m), m);
    let den = falling_factorial(i64::from(n), m);
    num / den
}
