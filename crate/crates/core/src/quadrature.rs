//! Adaptive Gauss-Kronrod integration on finite intervals.
//!
//! The 7-15 pair gives an embedded error estimate per panel; the worst panel
//! is bisected until the global estimate meets the requested tolerance or the
//! subdivision budget runs out. All nodes are interior, so integrands may be
//! singular (or merely undefined) at the endpoints.

use std::collections::BinaryHeap;

/// Tolerances and budget for one adaptive integration.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureSpec {
    /// Relative tolerance on the integral value.
    pub rel_tol: f64,
    /// Absolute tolerance; the effective target is `max(abs_tol, rel_tol*|I|)`.
    pub abs_tol: f64,
    /// Maximum number of panel bisections.
    pub max_subdivisions: usize,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        QuadratureSpec {
            rel_tol: 1e-12,
            abs_tol: 1e-14,
            max_subdivisions: 2000,
        }
    }
}

impl QuadratureSpec {
    pub fn validate(&self) -> Result<(), String> {
        let bad = |v: f64| v.is_nan() || v <= 0.0;
        if bad(self.rel_tol) || bad(self.abs_tol) {
            return Err(format!(
                "tolerances must be positive: rel_tol={}, abs_tol={}",
                self.rel_tol, self.abs_tol
            ));
        }
        if self.max_subdivisions < 1 {
            return Err("max_subdivisions must be at least 1".into());
        }
        Ok(())
    }
}

/// Result of one adaptive integration.
#[derive(Debug, Clone, Copy)]
pub struct IntegralEstimate {
    pub value: f64,
    /// Estimated absolute error.
    pub error_estimate: f64,
    /// Panel bisections performed.
    pub subdivisions: usize,
    /// Whether the tolerance was met within budget.
    pub converged: bool,
}

#[derive(Debug, Clone, Copy)]
struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
    seq: usize,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error && self.seq == other.seq
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        // worst error first; ties broken by insertion order for determinism
        self.error
            .total_cmp(&other.error)
            .then_with(|| other.seq.cmp(&self.seq))
    }
}

/// Integrates `f` over `(a, b)`, pre-splitting at the interior `seeds`.
///
/// Seeds outside `(a, b)` are ignored. The integrand is never evaluated at
/// `a`, `b`, or the seed points themselves.
pub fn integrate<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    seeds: &[f64],
    spec: &QuadratureSpec,
) -> IntegralEstimate {
    let mut cuts: Vec<f64> = vec![a];
    let mut interior: Vec<f64> = seeds
        .iter()
        .copied()
        .filter(|s| s.is_finite() && *s > a && *s < b)
        .collect();
    interior.sort_by(f64::total_cmp);
    interior.dedup();
    cuts.extend(interior);
    cuts.push(b);

    let mut heap: BinaryHeap<Panel> = BinaryHeap::new();
    let mut seq = 0usize;
    for w in cuts.windows(2) {
        let (value, error) = gauss_kronrod_15(&f, w[0], w[1]);
        heap.push(Panel {
            a: w[0],
            b: w[1],
            value,
            error,
            seq,
        });
        seq += 1;
    }

    let mut subdivisions = 0usize;
    loop {
        let total_value: f64 = heap.iter().map(|p| p.value).sum();
        let total_error: f64 = heap.iter().map(|p| p.error).sum();
        let target = spec.abs_tol.max(spec.rel_tol * total_value.abs());
        if total_error <= target {
            return finish(&heap, subdivisions, true);
        }
        if subdivisions >= spec.max_subdivisions {
            return finish(&heap, subdivisions, false);
        }
        let worst = heap.pop().expect("non-empty panel heap");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            // interval is at floating-point resolution; put it back and stop
            heap.push(worst);
            return finish(&heap, subdivisions, false);
        }
        let (v1, e1) = gauss_kronrod_15(&f, worst.a, mid);
        let (v2, e2) = gauss_kronrod_15(&f, mid, worst.b);
        heap.push(Panel {
            a: worst.a,
            b: mid,
            value: v1,
            error: e1,
            seq,
        });
        seq += 1;
        heap.push(Panel {
            a: mid,
            b: worst.b,
            value: v2,
            error: e2,
            seq,
        });
        seq += 1;
        subdivisions += 1;
    }
}

fn finish(heap: &BinaryHeap<Panel>, subdivisions: usize, converged: bool) -> IntegralEstimate {
    // Sum in a canonical order so the result does not depend on heap layout.
    let mut panels: Vec<&Panel> = heap.iter().collect();
    panels.sort_by(|p, q| p.a.total_cmp(&q.a));
    let value = panels.iter().map(|p| p.value).sum();
    let error_estimate = panels.iter().map(|p| p.error).sum();
    IntegralEstimate {
        value,
        error_estimate,
        subdivisions,
        converged,
    }
}

// 15-point Kronrod abscissae (positive half), embedding 7-point Gauss.
#[allow(clippy::excessive_precision)]
const XGK: [f64; 8] = [
    0.991_455_371_120_812_7,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
#[allow(clippy::excessive_precision)]
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_64,
    0.381_830_050_505_118_94,
    0.417_959_183_673_469_4,
];
#[allow(clippy::excessive_precision)]
const WGK: [f64; 8] = [
    0.022_935_322_010_529_225,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];

/// One 7/15 Gauss-Kronrod panel; returns the Kronrod value and a QUADPACK
/// style error estimate.
fn gauss_kronrod_15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);

    let f_center = f(center);
    let mut result_gauss = WG[3] * f_center;
    let mut result_kronrod = WGK[7] * f_center;
    let mut result_abs = result_kronrod.abs();

    let mut fv1 = [0.0f64; 8];
    let mut fv2 = [0.0f64; 8];
    fv1[7] = f_center;
    fv2[7] = f_center;

    for j in 0..7 {
        let offset = half * XGK[j];
        let f1 = f(center - offset);
        let f2 = f(center + offset);
        fv1[j] = f1;
        fv2[j] = f2;
        let sum = f1 + f2;
        if j % 2 == 1 {
            result_gauss += WG[j / 2] * sum;
        }
        result_kronrod += WGK[j] * sum;
        result_abs += WGK[j] * (f1.abs() + f2.abs());
    }

    let mean = 0.5 * result_kronrod;
    let mut result_asc = WGK[7] * (f_center - mean).abs();
    for j in 0..7 {
        result_asc += WGK[j] * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }

    let value = result_kronrod * half;
    let result_abs = result_abs * half.abs();
    let result_asc = result_asc * half.abs();
    let mut err = ((result_kronrod - result_gauss) * half).abs();
    if result_asc != 0.0 && err != 0.0 {
        err = result_asc * 1.0f64.min((200.0 * err / result_asc).powf(1.5));
    }
    if result_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(50.0 * f64::EPSILON * result_abs);
    }
    (value, err)
}
