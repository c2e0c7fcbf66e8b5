//! Polynomial weighted spaces: weights, grid suprema, moduli of smoothness,
//! Steklov means, and the registry of test functions used by the
//! verification harness.
//!
//! The weighted norm `||f||_p = sup_x w_p(x)|f(x)|` is approximated by a
//! maximum over a finite grid on `[0, x_max]`; every quantity built on it is
//! therefore a lower bound for the true supremum, and the verification
//! suites carry an explicit slack factor for that.

use std::fmt;
use std::sync::Arc;

use crate::quadrature::{self, QuadratureSpec};

/// Errors from weighted-space computations.
#[derive(Debug, Clone, PartialEq)]
pub enum SpacesError {
    /// The log-log fit for a Lipschitz exponent hit a (near-)zero modulus;
    /// the function is affine up to grid resolution.
    DegenerateFit,
    /// A delta ladder was too short or not decreasing.
    BadDeltaLadder,
    /// A quadrature budget was exhausted inside a Steklov mean.
    QuadratureBudget { x: f64, h: f64 },
    /// A required derivative is not registered on the function.
    MissingDerivative { id: String, order: u8 },
}

impl fmt::Display for SpacesError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SpacesError::DegenerateFit => {
                write!(
                    f,
                    "modulus is zero on the delta ladder; function is effectively affine"
                )
            }
            SpacesError::BadDeltaLadder => {
                write!(f, "need at least 3 strictly decreasing positive deltas")
            }
            SpacesError::QuadratureBudget { x, h } => {
                write!(f, "Steklov quadrature budget exhausted at x={x}, h={h}")
            }
            SpacesError::MissingDerivative { id, order } => {
                write!(
                    f,
                    "function '{id}' has no registered derivative of order {order}"
                )
            }
        }
    }
}

impl std::error::Error for SpacesError {}

/// Polynomial weight: `w_0 = 1`, `w_p(x) = 1/(1+x^p)` for `p >= 1`.
pub fn weight(p: u32, x: f64) -> f64 {
    debug_assert!(x >= 0.0, "weight is defined on [0, inf)");
    if p == 0 {
        1.0
    } else {
        1.0 / (1.0 + x.powi(p as i32))
    }
}

/// How grid points are spread over `[0, x_max]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GridSpacing {
    Uniform,
    /// Log-spaced points (plus 0), denser near the origin.
    Geometric,
}

/// Finite surrogate for the supremum over `[0, inf)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    pub x_max: f64,
    pub points: usize,
    pub spacing: GridSpacing,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec {
            x_max: 50.0,
            points: 2001,
            spacing: GridSpacing::Uniform,
        }
    }
}

impl GridSpec {
    pub fn new(x_max: f64, points: usize) -> Self {
        GridSpec {
            x_max,
            points,
            spacing: GridSpacing::Uniform,
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.x_max.is_nan() || self.x_max <= 0.0 {
            return Err(format!("x_max must be positive, got {}", self.x_max));
        }
        if self.points < 2 {
            return Err(format!("need at least 2 grid points, got {}", self.points));
        }
        Ok(())
    }

    /// Materializes the grid, always starting at 0 and ending at `x_max`.
    pub fn points_vec(&self) -> Vec<f64> {
        let n = self.points;
        match self.spacing {
            GridSpacing::Uniform => (0..n)
                .map(|i| self.x_max * i as f64 / (n - 1) as f64)
                .collect(),
            GridSpacing::Geometric => {
                let x_min = self.x_max * 1e-6;
                let mut pts = Vec::with_capacity(n);
                pts.push(0.0);
                let m = n - 1;
                for i in 0..m {
                    let frac = if m == 1 {
                        1.0
                    } else {
                        i as f64 / (m - 1) as f64
                    };
                    pts.push(x_min * (self.x_max / x_min).powf(frac));
                }
                pts
            }
        }
    }
}

type Evaluator = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// A registered test function: evaluator, growth class, and optional
/// derivatives.
///
/// `growth_exponent` is the smallest `p` with `w_p * f` bounded; the operator
/// uses it to guard integrability.
#[derive(Clone)]
pub struct TestFunction {
    id: String,
    growth_exponent: u32,
    f: Evaluator,
    d1: Option<Evaluator>,
    d2: Option<Evaluator>,
}

impl fmt::Debug for TestFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TestFunction")
            .field("id", &self.id)
            .field("growth_exponent", &self.growth_exponent)
            .field("d1", &self.d1.is_some())
            .field("d2", &self.d2.is_some())
            .finish()
    }
}

impl TestFunction {
    pub fn new(
        id: impl Into<String>,
        growth_exponent: u32,
        f: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        TestFunction {
            id: id.into(),
            growth_exponent,
            f: Arc::new(f),
            d1: None,
            d2: None,
        }
    }

    pub fn with_first_derivative(
        mut self,
        d1: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        self.d1 = Some(Arc::new(d1));
        self
    }

    pub fn with_second_derivative(
        mut self,
        d2: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        self.d2 = Some(Arc::new(d2));
        self
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn growth_exponent(&self) -> u32 {
        self.growth_exponent
    }

    pub fn eval(&self, x: f64) -> f64 {
        (self.f)(x)
    }

    pub fn first_derivative(&self, x: f64) -> Result<f64, SpacesError> {
        match &self.d1 {
            Some(d) => Ok(d(x)),
            None => Err(SpacesError::MissingDerivative {
                id: self.id.clone(),
                order: 1,
            }),
        }
    }

    pub fn second_derivative(&self, x: f64) -> Result<f64, SpacesError> {
        match &self.d2 {
            Some(d) => Ok(d(x)),
            None => Err(SpacesError::MissingDerivative {
                id: self.id.clone(),
                order: 2,
            }),
        }
    }

    pub fn has_first_derivative(&self) -> bool {
        self.d1.is_some()
    }

    pub fn has_second_derivative(&self) -> bool {
        self.d2.is_some()
    }
}

/// The stock of test functions exercised by the verification suites.
///
/// Spans bounded, polynomially growing, smooth, and merely Lipschitz-type
/// behavior; derivatives are registered where they exist globally.
pub fn registry() -> Vec<TestFunction> {
    vec![
        TestFunction::new("e0", 0, |_| 1.0)
            .with_first_derivative(|_| 0.0)
            .with_second_derivative(|_| 0.0),
        TestFunction::new("e1", 1, |t| t)
            .with_first_derivative(|_| 1.0)
            .with_second_derivative(|_| 0.0),
        TestFunction::new("e2", 2, |t| t * t)
            .with_first_derivative(|t| 2.0 * t)
            .with_second_derivative(|_| 2.0),
        TestFunction::new("e3", 3, |t| t * t * t)
            .with_first_derivative(|t| 3.0 * t * t)
            .with_second_derivative(|t| 6.0 * t),
        TestFunction::new("exp_neg", 0, |t| (-t).exp())
            .with_first_derivative(|t| -(-t).exp())
            .with_second_derivative(|t| (-t).exp()),
        TestFunction::new("recip", 0, |t| 1.0 / (1.0 + t))
            .with_first_derivative(|t| -1.0 / (1.0 + t).powi(2))
            .with_second_derivative(|t| 2.0 / (1.0 + t).powi(3)),
        TestFunction::new("sin", 0, f64::sin)
            .with_first_derivative(f64::cos)
            .with_second_derivative(|t| -t.sin()),
        TestFunction::new("t2_exp_neg", 0, |t| t * t * (-t).exp())
            .with_first_derivative(|t| (2.0 * t - t * t) * (-t).exp())
            .with_second_derivative(|t| (2.0 - 4.0 * t + t * t) * (-t).exp()),
        TestFunction::new("abs1", 1, |t| (t - 1.0).abs()),
        TestFunction::new("sqrtabs1", 1, |t| (t - 1.0).abs().sqrt()),
    ]
}

/// Looks a function up by id in the standard registry.
pub fn lookup(id: &str) -> Option<TestFunction> {
    registry().into_iter().find(|f| f.id() == id)
}

/// Grid maximum of `w_p(x) |g(x)|` (a lower bound for `||g||_p`).
pub fn weighted_sup<F: Fn(f64) -> f64>(g: F, p: u32, grid: &GridSpec) -> f64 {
    grid.points_vec()
        .into_iter()
        .map(|x| weight(p, x) * g(x).abs())
        .fold(0.0, f64::max)
}

/// Grid approximation of the weighted norm of a registered function.
pub fn weighted_norm(f: &TestFunction, p: u32, grid: &GridSpec) -> f64 {
    weighted_sup(|x| f.eval(x), p, grid)
}

/// Second forward difference `f(x+2h) - 2 f(x+h) + f(x)`.
pub fn second_difference(f: &TestFunction, x: f64, h: f64) -> f64 {
    debug_assert!(h > 0.0);
    f.eval(x + 2.0 * h) - 2.0 * f.eval(x + h) + f.eval(x)
}

// Step sizes sampled inside the sup over h in (0, delta]: 32 geometric
// samples spanning three decades, plus delta/2 (used by the Steklov
// derivative identity) and the endpoint itself.
fn h_ladder(delta: f64) -> Vec<f64> {
    let mut hs: Vec<f64> = (0..32)
        .map(|j| delta * 1024f64.powf(-(j as f64) / 31.0))
        .collect();
    hs.push(delta / 2.0);
    hs.push(delta);
    hs.sort_by(f64::total_cmp);
    hs.dedup();
    hs
}

/// Second weighted modulus of smoothness
/// `omega^2_p(f; delta) = sup_{0 < h <= delta} ||Delta_h^2 f||_p`,
/// with both suprema taken over finite samples.
pub fn second_modulus(f: &TestFunction, p: u32, delta: f64, grid: &GridSpec) -> f64 {
    assert!(delta > 0.0, "second_modulus needs delta > 0");
    let xs = grid.points_vec();
    let mut best = 0.0f64;
    for h in h_ladder(delta) {
        for &x in &xs {
            let v = weight(p, x) * second_difference(f, x, h).abs();
            if v > best {
                best = v;
            }
        }
    }
    best
}

/// First weighted modulus
/// `omega^1_p(f; delta) = sup { w_p(x) |f(t)-f(x)| : |t-x| <= delta, t,x >= 0 }`.
///
/// For each grid `x`, `t` sweeps a refinement of `[max(0, x-delta), x+delta]`.
pub fn first_modulus(f: &TestFunction, p: u32, delta: f64, grid: &GridSpec) -> f64 {
    assert!(delta > 0.0, "first_modulus needs delta > 0");
    const T_SAMPLES: usize = 129;
    let mut best = 0.0f64;
    for x in grid.points_vec() {
        let w = weight(p, x);
        let fx = f.eval(x);
        let lo = (x - delta).max(0.0);
        let hi = x + delta;
        for i in 0..T_SAMPLES {
            let t = lo + (hi - lo) * i as f64 / (T_SAMPLES - 1) as f64;
            let v = w * (f.eval(t) - fx).abs();
            if v > best {
                best = v;
            }
        }
    }
    best
}

/// Steklov mean
/// `f_h(x) = (4/h^2) int_0^{h/2} int_0^{h/2} (2 f(x+s+t) - f(x+2(s+t))) ds dt`,
/// reduced to one dimension with the triangular weight
/// `lambda(s) = min(s, h-s)` over `[0, h]`.
pub fn steklov_mean(f: &TestFunction, h: f64, x: f64) -> Result<f64, SpacesError> {
    assert!(h > 0.0, "steklov_mean needs h > 0");
    let spec = QuadratureSpec {
        rel_tol: 1e-10,
        abs_tol: 1e-15,
        max_subdivisions: 400,
    };
    let integrand = |s: f64| {
        let lambda = s.min(h - s);
        (2.0 * f.eval(x + s) - f.eval(x + 2.0 * s)) * lambda
    };
    // the triangular weight has a kink at h/2
    let est = quadrature::integrate(integrand, 0.0, h, &[0.5 * h], &spec);
    if !est.converged {
        return Err(SpacesError::QuadratureBudget { x, h });
    }
    Ok(4.0 / (h * h) * est.value)
}

/// Direct 2-D tensor evaluation of the Steklov double integral. Slower than
/// [`steklov_mean`]; kept as an independent cross-check of the triangular
/// reduction.
pub fn steklov_mean_tensor(f: &TestFunction, h: f64, x: f64, panels: usize) -> f64 {
    assert!(h > 0.0 && panels >= 2);
    // midpoint rule on a panels x panels tensor grid over [0, h/2]^2
    let step = 0.5 * h / panels as f64;
    let mut acc = 0.0;
    for i in 0..panels {
        let s = (i as f64 + 0.5) * step;
        for j in 0..panels {
            let t = (j as f64 + 0.5) * step;
            acc += 2.0 * f.eval(x + s + t) - f.eval(x + 2.0 * (s + t));
        }
    }
    4.0 / (h * h) * acc * step * step
}

/// Second derivative of the Steklov mean via the exact finite-difference
/// identity `f_h''(x) = (8 Delta_{h/2}^2 f(x) - Delta_h^2 f(x)) / h^2`.
pub fn steklov_second_derivative(f: &TestFunction, h: f64, x: f64) -> f64 {
    assert!(h > 0.0);
    (8.0 * second_difference(f, x, 0.5 * h) - second_difference(f, x, h)) / (h * h)
}

/// Least-squares slope of `ln omega^2_p(f; delta)` against `ln delta`: the
/// empirical exponent of the Lipschitz class containing `f`.
pub fn lipschitz_exponent(
    f: &TestFunction,
    p: u32,
    deltas: &[f64],
    grid: &GridSpec,
) -> Result<f64, SpacesError> {
    if deltas.len() < 3
        || deltas.windows(2).any(|w| w[1] >= w[0])
        || deltas.iter().any(|d| *d <= 0.0)
    {
        return Err(SpacesError::BadDeltaLadder);
    }
    // below this the modulus is rounding noise of the function's own scale
    let noise_floor = 1e-12 * weighted_norm(f, p, grid).max(1.0);
    let mut xs = Vec::with_capacity(deltas.len());
    let mut ys = Vec::with_capacity(deltas.len());
    for &d in deltas {
        let m = second_modulus(f, p, d, grid);
        if m <= noise_floor {
            return Err(SpacesError::DegenerateFit);
        }
        xs.push(d.ln());
        ys.push(m.ln());
    }
    Ok(least_squares_slope(&xs, &ys))
}

pub(crate) fn least_squares_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut num = 0.0;
    let mut den = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        num += (x - mx) * (y - my);
        den += (x - mx) * (x - mx);
    }
    num / den
}
