//! Small numerical kernels shared by the copula, model and sampler code:
//! composite Gauss–Legendre quadrature on the unit interval, a safeguarded
//! bisection/secant root finder, log-space accumulation, and Gamma draws in
//! log space (the sampler routinely needs shapes far below one).

use rand::Rng;
use rand_distr::{Distribution, Gamma, Open01};

/// Default number of quadrature nodes per axis.
pub const DEFAULT_NODES: usize = 128;

/// Points per Gauss–Legendre panel.
const PANEL_ORDER: usize = 16;

/// Default iteration cap for [`solve_increasing`].
pub const ROOT_MAX_ITER: usize = 200;

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(order: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(order >= 1);
    let mut nodes = vec![0.0; order];
    let mut weights = vec![0.0; order];
    let n = order as f64;
    for i in 0..order.div_ceil(2) {
        // Tricomi initial guess, refined by Newton on P_n.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre(order, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(order, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[order - 1 - i] = x;
        weights[i] = w;
        weights[order - 1 - i] = w;
    }
    (nodes, weights)
}

fn legendre(order: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=order {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let p = if order == 0 { 1.0 } else { p1 };
    let n = order as f64;
    let d = n * (x * p - p0) / (x * x - 1.0);
    (p, d)
}

/// Composite Gauss–Legendre rule on `[0, 1]`.
#[derive(Debug, Clone)]
pub struct UnitQuadrature {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl UnitQuadrature {
    /// Builds a rule with (at least) `nodes` points: equal panels of 16-point
    /// Gauss–Legendre, or a single panel when fewer than 16 are requested.
    pub fn new(nodes: usize) -> Self {
        assert!(nodes >= 1);
        let (order, panels) = if nodes < PANEL_ORDER {
            (nodes, 1)
        } else {
            (PANEL_ORDER, nodes.div_ceil(PANEL_ORDER))
        };
        let (x, w) = gauss_legendre(order);
        let h = 1.0 / panels as f64;
        let mut out_nodes = Vec::with_capacity(order * panels);
        let mut out_weights = Vec::with_capacity(order * panels);
        for p in 0..panels {
            let a = p as f64 * h;
            for (xi, wi) in x.iter().zip(&w) {
                out_nodes.push(a + 0.5 * h * (xi + 1.0));
                out_weights.push(0.5 * h * wi);
            }
        }
        UnitQuadrature {
            nodes: out_nodes,
            weights: out_weights,
        }
    }

    /// The same rule pulled through `x = s³(10 − 15s + 6s²)`, which
    /// clusters nodes at both endpoints. Integrands with algebraic endpoint
    /// singularities such as `(1 − x)^0.05` converge far faster on it.
    pub fn graded(nodes: usize) -> Self {
        let base = Self::new(nodes);
        let (nodes, weights) = base
            .nodes
            .iter()
            .zip(&base.weights)
            .map(|(&s, &w)| {
                let x = s * s * s * (10.0 + s * (-15.0 + 6.0 * s));
                let jac = 30.0 * s * s * (1.0 - s) * (1.0 - s);
                (x, w * jac)
            })
            .unzip();
        UnitQuadrature { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn integrate(&self, mut f: impl FnMut(f64) -> f64) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(x))
            .sum()
    }
}

/// Outcome of a failed root search; carries the iteration count reached.
#[derive(Debug, Clone, Copy)]
pub struct RootFailure {
    pub iterations: usize,
}

/// Solves `f(x) = target` for nondecreasing `f` on `[lo, hi]`.
///
/// Bisection narrows the bracket to width 1e-3, then secant steps refine
/// it; a secant step that leaves the bracket or fails to halve it is followed
/// by bisection.
/// Converges when the bracket (or the last step) is below `tol`.
pub fn solve_increasing(
    mut f: impl FnMut(f64) -> f64,
    target: f64,
    lo: f64,
    hi: f64,
    tol: f64,
    max_iter: usize,
) -> Result<f64, RootFailure> {
    let (mut a, mut b) = (lo, hi);
    let mut fa = f(a) - target;
    let mut fb = f(b) - target;
    if fa >= 0.0 {
        return Ok(a);
    }
    if fb <= 0.0 {
        return Ok(b);
    }
    if !fa.is_finite() || !fb.is_finite() {
        return Err(RootFailure { iterations: 0 });
    }
    let mut stalled = false;
    for it in 1..=max_iter {
        let width = b - a;
        let x = if width > 1e-3 || stalled {
            0.5 * (a + b)
        } else {
            let s = b - fb * (b - a) / (fb - fa);
            if s.is_finite() && s > a && s < b {
                s
            } else {
                0.5 * (a + b)
            }
        };
        let fx = f(x) - target;
        if fx == 0.0 {
            return Ok(x);
        }
        if !fx.is_finite() {
            return Err(RootFailure { iterations: it });
        }
        if fx < 0.0 {
            a = x;
            fa = fx;
        } else {
            b = x;
            fb = fx;
        }
        if b - a < tol {
            return Ok(if fa.abs() < fb.abs() { a } else { b });
        }
        // Secant steps on a steep, one-sided function can shave only a sliver
        // off the bracket; the next step then bisects.
        stalled = width <= 1e-3 && !stalled && b - a > 0.5 * width;
        // A secant step that lands within tol of an endpoint also converges;
        // check by probing the other side of the candidate.
        if width <= 1e-3 {
            let probe = if fx < 0.0 { x + tol } else { x - tol };
            if probe > a && probe < b {
                let fp = f(probe) - target;
                if fp.is_finite() && (fp < 0.0) != (fx < 0.0) {
                    return Ok(x);
                }
                if fp < 0.0 {
                    a = probe;
                    fa = fp;
                } else {
                    b = probe;
                    fb = fp;
                }
            }
        }
    }
    Err(RootFailure {
        iterations: max_iter,
    })
}

/// `ln(exp(a) + exp(b))` without overflow.
pub fn log_add_exp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let m = a.max(b);
    m + ((a - m).exp() + (b - m).exp()).ln()
}

/// `ln(sum(exp(x)))` over the slice; `-inf` when empty.
pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY || m.is_nan() {
        return m;
    }
    if m == f64::INFINITY {
        return m;
    }
    m + xs.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// `ln(1 + exp(x))`.
pub fn ln_1p_exp(x: f64) -> f64 {
    if x > 35.0 {
        x
    } else if x < -35.0 {
        x.exp()
    } else {
        x.exp().ln_1p()
    }
}

/// Draws `ln X` for `X ~ Gamma(shape, rate)`.
pub fn sample_log_gamma<R: Rng + ?Sized>(rng: &mut R, shape: f64, rate: f64) -> f64 {
    assert!(
        rate > 0.0 && rate.is_finite(),
        "gamma rate must be positive, got {rate}"
    );
    sample_log_gamma_log_rate(rng, shape, rate.ln())
}

/// Draws `ln X` for `X ~ Gamma(shape, exp(log_rate))`.
///
/// Shapes below one use `X = Y * U^(1/shape)` with `Y ~ Gamma(shape + 1)`,
/// evaluated in log space so tiny shapes never underflow to zero.
pub fn sample_log_gamma_log_rate<R: Rng + ?Sized>(rng: &mut R, shape: f64, log_rate: f64) -> f64 {
    assert!(
        shape > 0.0 && shape.is_finite(),
        "gamma shape must be positive, got {shape}"
    );
    assert!(log_rate.is_finite(), "gamma log-rate must be finite, got {log_rate}");
    let log_unit = if shape < 1.0 {
        let y = Gamma::new(shape + 1.0, 1.0).expect("valid gamma").sample(rng);
        let u: f64 = Open01.sample(rng);
        y.ln() + u.ln() / shape
    } else {
        Gamma::new(shape, 1.0).expect("valid gamma").sample(rng).ln()
    };
    log_unit - log_rate
}

/// Draws an index with probability proportional to `exp(log_weights[i])`.
pub fn sample_log_categorical<R: Rng + ?Sized>(rng: &mut R, log_weights: &[f64]) -> usize {
    let total = log_sum_exp(log_weights);
    let u: f64 = rng.random::<f64>();
    let mut acc = 0.0;
    let mut last_positive = 0;
    for (i, &lw) in log_weights.iter().enumerate() {
        let p = (lw - total).exp();
        if p > 0.0 {
            last_positive = i;
        }
        acc += p;
        if u < acc {
            return i;
        }
    }
    last_positive
}
