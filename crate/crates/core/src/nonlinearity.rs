//! Gauge-covariant nonlinearities `f(u) = g(|u|²) u`.
//!
//! Three families are built in: the double power `|u|^α u − |u|^β u`, the
//! pure power `|u|^α u`, and the sine example `u − sin|u|/|u| · u`. Every
//! evaluation goes through `g(|u|²)` so that `f(e^{iθ}z) = e^{iθ} f(z)` holds
//! to rounding.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// The nonlinearity family together with its parameters.
///
/// Serialized as `{"kind": "double_power", "alpha": .., "beta": ..}`,
/// `{"kind": "pure_power", "alpha": ..}` or `{"kind": "sine_example"}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum NonlinearityKind {
    DoublePower { alpha: f64, beta: f64 },
    SineExample,
    PurePower { alpha: f64 },
}

/// A nonlinearity with its declared Hölder exponents `(α₁, α₂)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(from = "NonlinearityKind", into = "NonlinearityKind")]
pub struct Nonlinearity {
    pub kind: NonlinearityKind,
    pub alpha1: f64,
    pub alpha2: f64,
}

impl From<NonlinearityKind> for Nonlinearity {
    fn from(kind: NonlinearityKind) -> Self {
        let (alpha1, alpha2) = match kind {
            NonlinearityKind::DoublePower { alpha, beta } => (alpha, beta),
            NonlinearityKind::SineExample => (2.0, 4.0),
            NonlinearityKind::PurePower { alpha } => (alpha, alpha),
        };
        Nonlinearity {
            kind,
            alpha1,
            alpha2,
        }
    }
}

impl From<Nonlinearity> for NonlinearityKind {
    fn from(nl: Nonlinearity) -> Self {
        nl.kind
    }
}

/// `α_max(d)`: infinite for `d ≤ 2`, `4/(d−2)` otherwise.
pub fn alpha_max(d: usize) -> f64 {
    if d <= 2 {
        f64::INFINITY
    } else {
        4.0 / (d as f64 - 2.0)
    }
}

// 1 - sin(x)/x = sum_{n>=1} (-1)^{n+1} s^n / (2n+1)!, s = x^2.
const SINE_SERIES_TERMS: usize = 14;

fn inv_odd_factorial(n: usize) -> f64 {
    // 1 / (2n+1)!
    (1..=2 * n + 1).fold(1.0, |acc, k| acc / k as f64)
}

fn sine_g_series(s: f64, order: usize) -> f64 {
    // order-th derivative of the series in s
    let mut total = 0.0;
    for n in 1..=SINE_SERIES_TERMS {
        if n < order {
            continue;
        }
        let sign = if n % 2 == 1 { 1.0 } else { -1.0 };
        let falling: f64 = (0..order).map(|k| (n - k) as f64).product();
        total += sign * falling * s.powi((n - order) as i32) * inv_odd_factorial(n);
    }
    total
}

/// Series difference `Σ c_n (aⁿ − bⁿ)` with `aⁿ − bⁿ = δ Σ_k a^k b^{n−1−k}`.
fn sine_series_diff(a: f64, b: f64, delta: f64) -> f64 {
    let mut total = 0.0;
    for n in 1..=SINE_SERIES_TERMS {
        let sign = if n % 2 == 1 { 1.0 } else { -1.0 };
        let sum: f64 = (0..n).map(|k| a.powi(k as i32) * b.powi((n - 1 - k) as i32)).sum();
        total += sign * delta * sum * inv_odd_factorial(n);
    }
    total
}

/// `x^p` for `x ≥ 0`, avoiding `powf` for integer and half-integer `p`.
#[inline]
pub(crate) fn fast_pow(x: f64, p: f64) -> f64 {
    let twice = 2.0 * p;
    if twice == twice.trunc() && twice.abs() <= 16.0 {
        let k = twice as i32;
        if k % 2 == 0 {
            x.powi(k / 2)
        } else {
            x.sqrt().powi(k)
        }
    } else {
        x.powf(p)
    }
}

/// `a^p − b^p` for `a, b ≥ 0` with `delta = a − b` supplied exactly.
fn pow_diff(a: f64, b: f64, delta: f64, p: f64) -> f64 {
    if delta == 0.0 {
        return 0.0;
    }
    if b > 0.0 {
        let rel = delta / b;
        if rel.abs() < 0.5 {
            return fast_pow(b, p) * (p * rel.ln_1p()).exp_m1();
        }
    }
    fast_pow(a, p) - fast_pow(b, p)
}

impl Nonlinearity {
    pub fn new(kind: NonlinearityKind) -> Self {
        kind.into()
    }

    pub fn double_power(alpha: f64, beta: f64) -> Self {
        NonlinearityKind::DoublePower { alpha, beta }.into()
    }

    pub fn pure_power(alpha: f64) -> Self {
        NonlinearityKind::PurePower { alpha }.into()
    }

    pub fn sine_example() -> Self {
        NonlinearityKind::SineExample.into()
    }

    /// Same family with different declared exponents (for checking
    /// misdeclarations).
    pub fn with_exponents(self, alpha1: f64, alpha2: f64) -> Self {
        Nonlinearity {
            alpha1,
            alpha2,
            ..self
        }
    }

    /// Checks the parameter ranges and `0 < α₁ ≤ α₂ < α_max(d)`.
    pub fn validate(&self, d: usize) -> crate::Result<()> {
        let bad = |msg: String| Err(crate::Error::InvalidInput(msg));
        match self.kind {
            NonlinearityKind::DoublePower { alpha, beta } => {
                if !(alpha > 0.0 && beta > alpha) {
                    return bad(format!("double power needs 0 < alpha < beta, got ({alpha}, {beta})"));
                }
            }
            NonlinearityKind::PurePower { alpha } => {
                if !(alpha > 0.0) {
                    return bad(format!("pure power needs alpha > 0, got {alpha}"));
                }
            }
            NonlinearityKind::SineExample => {}
        }
        if !(self.alpha1 > 0.0 && self.alpha1 <= self.alpha2 && self.alpha2 < alpha_max(d)) {
            return bad(format!(
                "exponents (alpha1, alpha2) = ({}, {}) outside 0 < alpha1 <= alpha2 < alpha_max({d})",
                self.alpha1, self.alpha2
            ));
        }
        Ok(())
    }

    /// `g(s)` for `s = |u|² ≥ 0`.
    pub fn g(&self, s: f64) -> f64 {
        if s <= 0.0 {
            return 0.0;
        }
        match self.kind {
            NonlinearityKind::DoublePower { alpha, beta } => {
                fast_pow(s, 0.5 * alpha) - fast_pow(s, 0.5 * beta)
            }
            NonlinearityKind::PurePower { alpha } => fast_pow(s, 0.5 * alpha),
            NonlinearityKind::SineExample => {
                if s < 1.0 {
                    sine_g_series(s, 0)
                } else {
                    let x = s.sqrt();
                    1.0 - x.sin() / x
                }
            }
        }
    }

    /// `g′(s)` for `s > 0`.
    pub fn dg(&self, s: f64) -> f64 {
        match self.kind {
            NonlinearityKind::DoublePower { alpha, beta } => {
                0.5 * alpha * fast_pow(s, 0.5 * alpha - 1.0) - 0.5 * beta * fast_pow(s, 0.5 * beta - 1.0)
            }
            NonlinearityKind::PurePower { alpha } => 0.5 * alpha * fast_pow(s, 0.5 * alpha - 1.0),
            NonlinearityKind::SineExample => {
                if s < 1.0 {
                    sine_g_series(s, 1)
                } else {
                    let x = s.sqrt();
                    (x.sin() - x * x.cos()) / (2.0 * x * x * x)
                }
            }
        }
    }

    /// `g″(s)` for `s > 0`.
    pub fn d2g(&self, s: f64) -> f64 {
        let pw = |p: f64| 0.5 * p * (0.5 * p - 1.0) * fast_pow(s, 0.5 * p - 2.0);
        match self.kind {
            NonlinearityKind::DoublePower { alpha, beta } => pw(alpha) - pw(beta),
            NonlinearityKind::PurePower { alpha } => pw(alpha),
            NonlinearityKind::SineExample => {
                if s < 1.0 {
                    sine_g_series(s, 2)
                } else {
                    let x = s.sqrt();
                    let dpdx = x.sin() / (2.0 * x * x)
                        - 3.0 * (x.sin() - x * x.cos()) / (2.0 * x.powi(4));
                    dpdx / (2.0 * x)
                }
            }
        }
    }

    /// `g(a) − g(b)` for `a, b ≥ 0`, given `delta = a − b` computed without
    /// cancellation by the caller. Accurate in relative terms when `a ≈ b`.
    pub fn g_diff(&self, a: f64, b: f64, delta: f64) -> f64 {
        if delta == 0.0 {
            return 0.0;
        }
        match self.kind {
            NonlinearityKind::DoublePower { alpha, beta } => {
                pow_diff(a, b, delta, 0.5 * alpha) - pow_diff(a, b, delta, 0.5 * beta)
            }
            NonlinearityKind::PurePower { alpha } => pow_diff(a, b, delta, 0.5 * alpha),
            NonlinearityKind::SineExample => {
                if a < 1.0 && b < 1.0 {
                    sine_series_diff(a, b, delta)
                } else {
                    // sin y/y − sin x/x with x = √a, y = √b
                    let (x, y) = (a.sqrt(), b.sqrt());
                    let dy = -delta / (x + y);
                    let dsin = 2.0 * (0.5 * (x + y)).cos() * (0.5 * dy).sin();
                    (x * dsin - dy * x.sin()) / (x * y)
                }
            }
        }
    }

    /// `f(u) = g(|u|²) u`.
    pub fn eval(&self, u: Complex64) -> Complex64 {
        u * self.g(u.norm_sqr())
    }

    /// `f(w + eta) − f(w)` evaluated without catastrophic cancellation.
    pub fn eval_diff(&self, w: Complex64, eta: Complex64) -> Complex64 {
        let b = w.norm_sqr();
        let delta = eta.norm_sqr() + 2.0 * (w.conj() * eta).re;
        let a = (w + eta).norm_sqr();
        eta * self.g(a) + w * self.g_diff(a, b, delta)
    }

    /// `f` restricted to real arguments.
    pub fn eval_real(&self, s: f64) -> f64 {
        s * self.g(s * s)
    }

    /// `f′(s)` on the positive real axis.
    pub fn deriv_real(&self, s: f64) -> f64 {
        if s == 0.0 {
            return 0.0;
        }
        let q = s * s;
        self.g(q) + 2.0 * q * self.dg(q)
    }

    /// Antiderivative `F(s) = ∫₀^s f(σ) dσ` for `s ≥ 0`.
    pub fn antiderivative(&self, s: f64) -> f64 {
        if s <= 0.0 {
            return 0.0;
        }
        match self.kind {
            NonlinearityKind::DoublePower { alpha, beta } => {
                fast_pow(s, alpha + 2.0) / (alpha + 2.0) - fast_pow(s, beta + 2.0) / (beta + 2.0)
            }
            NonlinearityKind::PurePower { alpha } => fast_pow(s, alpha + 2.0) / (alpha + 2.0),
            NonlinearityKind::SineExample => {
                if s < 1.0 {
                    // s²/2 + cos s − 1 = Σ_{n≥2} (−1)^n s^{2n}/(2n)!
                    let mut total = 0.0;
                    let mut term = s * s / 2.0;
                    for n in 2..16 {
                        term *= -s * s / ((2 * n - 1) * (2 * n)) as f64;
                        total -= term;
                    }
                    total
                } else {
                    0.5 * s * s + s.cos() - 1.0
                }
            }
        }
    }

    /// `G(s) = ∫₀^s g(σ) dσ = 2 F(√s)`, the potential in the conserved energy.
    pub fn potential(&self, s: f64) -> f64 {
        2.0 * self.antiderivative(s.max(0.0).sqrt())
    }

    /// Wirtinger derivatives `(f_z, f_z̄)` at `z`.
    pub fn wirtinger(&self, z: Complex64) -> (Complex64, Complex64) {
        let s = z.norm_sqr();
        if s == 0.0 {
            return (Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0));
        }
        let dg = self.dg(s);
        (Complex64::new(self.g(s) + dg * s, 0.0), z * z * dg)
    }
}

/// Default sample set for the assumption sweep: 200 log-spaced points in
/// `[1e-8, 1e8]`.
pub fn default_samples() -> Vec<f64> {
    log_space(1e-8, 1e8, 200)
}

pub fn log_space(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let (a, b) = (lo.ln(), hi.ln());
    (0..n)
        .map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp())
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct F0Report {
    pub pass: bool,
    /// `max_s (|s g′| + |s² g″|) / (s^{α₁/2} + s^{α₂/2})`, i.e. the minimal
    /// feasible `C₀` on the sample set.
    pub worst_ratio: f64,
    /// Whether the ratio levels off at both ends of the sweep.
    pub bounded: bool,
    pub c0_declared: Option<f64>,
}

/// Growth factor between the last two decades of the sweep above which the
/// ratio is considered unbounded.
const F0_GROWTH_LIMIT: f64 = 1.2;

/// Samples the growth condition on `g` against the declared exponents.
pub fn check_assumption_f0(nl: &Nonlinearity, samples: &[f64], c0: Option<f64>) -> F0Report {
    assert!(samples.iter().all(|&s| s > 0.0), "samples must be positive");
    let mut pts: Vec<(f64, f64)> = samples
        .iter()
        .map(|&s| {
            let lhs = (s * nl.dg(s)).abs() + (s * s * nl.d2g(s)).abs();
            let rhs = fast_pow(s, 0.5 * nl.alpha1) + fast_pow(s, 0.5 * nl.alpha2);
            (s, lhs / rhs)
        })
        .collect();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    let worst_ratio = pts.iter().map(|p| p.1).fold(0.0, f64::max);

    let (lo, hi) = (pts[0].0, pts[pts.len() - 1].0);
    let decade_max = |from: f64, to: f64| {
        pts.iter()
            .filter(|p| p.0 >= from && p.0 <= to)
            .map(|p| p.1)
            .fold(0.0, f64::max)
    };
    let grows_low = decade_max(lo, lo * 10.0) > F0_GROWTH_LIMIT * decade_max(lo * 10.0, lo * 100.0);
    let grows_high =
        decade_max(hi / 10.0, hi) > F0_GROWTH_LIMIT * decade_max(hi / 100.0, hi / 10.0);
    let bounded = worst_ratio.is_finite() && !grows_low && !grows_high;
    let pass = bounded && c0.map_or(true, |c| worst_ratio <= c);
    F0Report {
        pass,
        worst_ratio,
        bounded,
        c0_declared: c0,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DifferenceBoundReport {
    pub fitted_c: f64,
    /// `(scale, fitted C)` after rescaling both sample sets.
    pub rescaled: Vec<(f64, f64)>,
    pub stable: bool,
}

fn fit_difference_constant(nl: &Nonlinearity, w: &[Complex64], eta: &[Complex64]) -> f64 {
    let (a1, a2) = (nl.alpha1, nl.alpha2);
    let mut c: f64 = 0.0;
    for &wv in w {
        for &ev in eta {
            let lhs = (nl.eval(wv + ev) - nl.eval(wv)).norm();
            let (mw, me) = (wv.norm(), ev.norm());
            let rhs = me * (fast_pow(mw, a1) + fast_pow(mw, a2)) + fast_pow(me, 1.0 + a1) + fast_pow(me, 1.0 + a2);
            if rhs > 0.0 {
                c = c.max(lhs / rhs);
            }
        }
    }
    c
}

/// Smallest constant in the pointwise difference bound
/// `|f(W+η) − f(W)| ≤ C(|η|(|W|^{α₁} + |W|^{α₂}) + |η|^{1+α₁} + |η|^{1+α₂})`
/// over all sampled pairs, plus its stability under rescaling by
/// `{1/4, 1/2, 2, 4}`.
pub fn check_difference_bound(
    nl: &Nonlinearity,
    w: &[Complex64],
    eta: &[Complex64],
) -> DifferenceBoundReport {
    let fitted_c = fit_difference_constant(nl, w, eta);
    let rescaled: Vec<(f64, f64)> = [0.25, 0.5, 2.0, 4.0]
        .iter()
        .map(|&k| {
            let ws: Vec<_> = w.iter().map(|z| z * k).collect();
            let es: Vec<_> = eta.iter().map(|z| z * k).collect();
            (k, fit_difference_constant(nl, &ws, &es))
        })
        .collect();
    let stable = if fitted_c == 0.0 {
        rescaled.iter().all(|r| r.1 == 0.0)
    } else {
        rescaled
            .iter()
            .all(|r| r.1 <= 2.0 * fitted_c && r.1 >= 0.5 * fitted_c)
    };
    DifferenceBoundReport {
        fitted_c,
        rescaled,
        stable,
    }
}
