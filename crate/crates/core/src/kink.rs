//! Half-kink profiles of `φ″ = ω₀φ − f(φ)` connecting a plateau `b` at
//! `−∞` to `0` at `+∞` (one space dimension).

use serde::{Deserialize, Serialize};

use crate::bound_state::DecayCertificate;
use crate::nonlinearity::{log_space, Nonlinearity, NonlinearityKind};
use crate::ode::{bisect, gauss_integrate, gauss_legendre, Dopri5};
use crate::{Error, Result};

const ROOT_SCAN_LO: f64 = 1e-6;
const ROOT_SCAN_HI: f64 = 1e4;
const ROOT_SCAN_POINTS: usize = 2001;
const DEFAULT_SPACING: f64 = 0.005;
const EDGE_FRACTION: f64 = 0.05;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KinkParams {
    pub b: f64,
    pub omega0: f64,
    pub h_prime_b: f64,
    /// Hölder exponent of `f` at the plateau.
    pub alpha_bar: f64,
    /// Root of `h(s) = ω₀s − f(s)` in `(0, b)`, where `φ_K′` is minimal.
    pub s_star: f64,
}

impl KinkParams {
    /// `h(s) = ω₀ s − f(s)`.
    pub fn h(&self, nl: &Nonlinearity, s: f64) -> f64 {
        self.omega0 * s - nl.eval_real(s)
    }

    /// Decay rate used for certificates: `0.9·min(ω₀, h′(b), √ω₀, √h′(b))`.
    pub fn safe_rate(&self) -> f64 {
        0.9 * self
            .omega0
            .min(self.h_prime_b)
            .min(self.omega0.sqrt())
            .min(self.h_prime_b.sqrt())
    }

    /// Exponential rates of the linearization at `+∞` and `−∞`.
    pub fn linear_rates(&self) -> (f64, f64) {
        (self.omega0.sqrt(), self.h_prime_b.sqrt())
    }
}

/// Finds the plateau `b` as the first positive root of `s f(s) − 2F(s)` with
/// `ω₀ = f(b)/b > 0` and `h′(b) > 0`.
pub fn find_kink_params(nl: &Nonlinearity) -> Result<KinkParams> {
    if let NonlinearityKind::PurePower { .. } = nl.kind {
        return Err(Error::NoKink("a pure power has no plateau".into()));
    }
    let q = |s: f64| s * nl.eval_real(s) - 2.0 * nl.antiderivative(s);
    let scan = log_space(ROOT_SCAN_LO, ROOT_SCAN_HI, ROOT_SCAN_POINTS);
    for w in scan.windows(2) {
        let (qa, qb) = (q(w[0]), q(w[1]));
        if qa == 0.0 || qa.signum() == qb.signum() {
            continue;
        }
        let b = match bisect(q, w[0], w[1], 200) {
            Some(b) => b,
            None => continue,
        };
        let omega0 = nl.eval_real(b) / b;
        if !(omega0 > 0.0) {
            continue;
        }
        let h_prime_b = omega0 - nl.deriv_real(b);
        if !(h_prime_b > 0.0) {
            continue;
        }
        let mut params = KinkParams {
            b,
            omega0,
            h_prime_b,
            alpha_bar: 0.0,
            s_star: f64::NAN,
        };
        params.s_star = interior_root(nl, &params)?;
        params.alpha_bar = match nl.kind {
            NonlinearityKind::DoublePower { alpha, beta } => {
                if (alpha * beta - 2.0).abs() < 1e-12 {
                    1.0
                } else {
                    0.0
                }
            }
            NonlinearityKind::SineExample => 2.0,
            NonlinearityKind::PurePower { .. } => 0.0,
        };
        return Ok(params);
    }
    Err(Error::NoKink(format!(
        "s f(s) = 2F(s) has no admissible root in [{ROOT_SCAN_LO}, {ROOT_SCAN_HI}]"
    )))
}

/// First `+ → −` sign change of `h` in `(0, b)`.
fn interior_root(nl: &Nonlinearity, p: &KinkParams) -> Result<f64> {
    let h = |s: f64| p.h(nl, s);
    let n = 4000;
    let pts: Vec<f64> = (1..n).map(|i| p.b * i as f64 / n as f64).collect();
    for w in pts.windows(2) {
        if h(w[0]) > 0.0 && h(w[1]) <= 0.0 {
            return bisect(h, w[0], w[1], 200)
                .ok_or_else(|| Error::NoKink("interior root of h not bracketed".into()));
        }
    }
    Err(Error::NoKink("h has no sign change in (0, b)".into()))
}

/// Samples of the half-kink on the uniform grid `s_i = −S + i ds`.
#[derive(Clone, Debug, PartialEq)]
pub struct KinkProfile {
    pub params: KinkParams,
    pub nl: Nonlinearity,
    pub s_min: f64,
    pub ds: f64,
    pub phi: Vec<f64>,
    /// `b − φ_K`, kept separately to avoid cancellation on the plateau side.
    pub gap: Vec<f64>,
    pub dphi: Vec<f64>,
    pub d2phi: Vec<f64>,
}

struct Potential<'a> {
    nl: &'a Nonlinearity,
    p: KinkParams,
    rule: (Vec<f64>, Vec<f64>),
}

impl Potential<'_> {
    /// `P(φ) = ω₀φ² − 2F(φ) = (φ′)²` along the kink.
    fn at(&self, phi: f64) -> f64 {
        if phi <= 0.5 * self.p.b {
            self.p.omega0 * phi * phi - 2.0 * self.nl.antiderivative(phi)
        } else {
            self.near_plateau(self.p.b - phi)
        }
    }

    /// `h(b − δ)` from `h(b) = 0` and the stable difference of `g`.
    fn h_below_plateau(&self, delta: f64) -> f64 {
        let b = self.p.b;
        let a = (b - delta) * (b - delta);
        let g_a = self.nl.g(a);
        let dg = self.nl.g_diff(a, b * b, delta * (delta - 2.0 * b));
        -self.p.omega0 * delta + delta * g_a - b * dg
    }

    /// `P(b − ε) = 2∫₀^ε −h(b − δ) dδ`.
    fn near_plateau(&self, eps: f64) -> f64 {
        if eps <= 0.0 {
            return 0.0;
        }
        2.0 * gauss_integrate(|d| -self.h_below_plateau(d), 0.0, eps, &self.rule)
    }
}

/// Integrates the first-order reduction `φ′ = −√P(φ)` from `φ(0) = s_star`
/// in both directions. `s_max` defaults to `40/min(√ω₀, √h′(b))` and `n` to
/// a node spacing of about 0.005.
pub fn solve_kink_profile(
    params: &KinkParams,
    nl: &Nonlinearity,
    s_max: Option<f64>,
    n: Option<usize>,
) -> Result<KinkProfile> {
    let p = *params;
    if !(p.b > 0.0 && p.omega0 > 0.0 && p.h_prime_b > 0.0 && p.s_star > 0.0 && p.s_star < p.b) {
        return Err(Error::InvalidInput(format!("invalid kink parameters {p:?}")));
    }
    let pot = Potential {
        nl,
        p,
        rule: gauss_legendre(20),
    };
    for i in 1..1000 {
        let phi = p.b * i as f64 / 1000.0;
        let direct = p.omega0 * phi * phi - 2.0 * nl.antiderivative(phi);
        if !(direct > 0.0) {
            return Err(Error::QuadratureSingular(format!(
                "omega0 phi^2 - 2F(phi) = {direct:.3e} at phi = {phi:.6} inside (0, b)"
            )));
        }
    }
    let s_max = s_max.unwrap_or(40.0 / p.omega0.sqrt().min(p.h_prime_b.sqrt()));
    let half = n
        .map(|n| (n.max(5) - 1) / 2)
        .unwrap_or((s_max / DEFAULT_SPACING).ceil() as usize);
    let ds = s_max / half as f64;
    let total = 2 * half + 1;

    let mut phi = vec![0.0; total];
    let mut gap = vec![0.0; total];
    let solver = Dopri5 {
        rtol: 1e-13,
        atol: 1e-300,
        h_min: 1e-12 * ds,
        max_steps: 100_000,
    };
    let fail = |side: &str| Error::QuadratureSingular(format!("kink quadrature failed on the {side} side"));

    // s ≥ 0: φ′ = −√P(φ)
    let down = |_s: f64, y: &[f64; 1]| [-pot.at(y[0]).max(0.0).sqrt()];
    let mut y = [p.s_star];
    let mut step = ds;
    phi[half] = p.s_star;
    gap[half] = p.b - p.s_star;
    for i in 1..=half {
        let s0 = (i - 1) as f64 * ds;
        y = solver
            .integrate(&down, s0, y, s0 + ds, &mut step)
            .ok_or_else(|| fail("decaying"))?;
        phi[half + i] = y[0];
        gap[half + i] = p.b - y[0];
    }

    // s < 0: the gap ε = b − φ obeys dε/d(−s) = −√P(b − ε)
    let up = |_s: f64, y: &[f64; 1]| [-pot.near_plateau(y[0]).max(0.0).sqrt()];
    let mut y = [p.b - p.s_star];
    let mut step = ds;
    for i in 1..=half {
        let s0 = (i - 1) as f64 * ds;
        y = solver
            .integrate(&up, s0, y, s0 + ds, &mut step)
            .ok_or_else(|| fail("plateau"))?;
        gap[half - i] = y[0];
        phi[half - i] = p.b - y[0];
    }

    let dphi: Vec<f64> = (0..total)
        .map(|i| {
            let v = if i < half {
                pot.near_plateau(gap[i])
            } else {
                pot.at(phi[i])
            };
            -v.max(0.0).sqrt()
        })
        .collect();
    let d2phi: Vec<f64> = phi.iter().map(|&v| p.h(nl, v)).collect();
    Ok(KinkProfile {
        params: p,
        nl: *nl,
        s_min: -s_max,
        ds,
        phi,
        gap,
        dphi,
        d2phi,
    })
}

impl KinkProfile {
    pub fn s_max(&self) -> f64 {
        self.s_min + (self.phi.len() - 1) as f64 * self.ds
    }

    pub fn s(&self, i: usize) -> f64 {
        self.s_min + i as f64 * self.ds
    }

    /// `(φ_K(s), φ_K′(s))` by cubic Hermite interpolation, with exponential
    /// extrapolation beyond the grid.
    pub fn eval(&self, s: f64) -> (f64, f64) {
        let (k_plus, k_minus) = self.params.linear_rates();
        let n = self.phi.len() - 1;
        if s >= self.s_max() {
            let v = self.phi[n] * (-k_plus * (s - self.s_max())).exp();
            return (v, -k_plus * v);
        }
        if s <= self.s_min {
            let e = self.gap[0] * (-k_minus * (self.s_min - s)).exp();
            return (self.params.b - e, -k_minus * e);
        }
        let (v, dv) = self.hermite(&self.phi, s, 1.0);
        (v, dv)
    }

    /// `b − φ_K(s)` without cancellation.
    pub fn gap_at(&self, s: f64) -> f64 {
        let k_minus = self.params.linear_rates().1;
        if s <= self.s_min {
            return self.gap[0] * (-k_minus * (self.s_min - s)).exp();
        }
        if s >= self.s_max() {
            return self.params.b - self.eval(s).0;
        }
        self.hermite(&self.gap, s, -1.0).0
    }

    fn hermite(&self, vals: &[f64], s: f64, sign: f64) -> (f64, f64) {
        let n = vals.len() - 1;
        let u = (s - self.s_min) / self.ds;
        let i = (u as usize).min(n - 1);
        let t = u - i as f64;
        let (p0, p1) = (vals[i], vals[i + 1]);
        let (m0, m1) = (sign * self.dphi[i] * self.ds, sign * self.dphi[i + 1] * self.ds);
        let t2 = t * t;
        let t3 = t2 * t;
        let v = (2.0 * t3 - 3.0 * t2 + 1.0) * p0
            + (t3 - 2.0 * t2 + t) * m0
            + (-2.0 * t3 + 3.0 * t2) * p1
            + (t3 - t2) * m1;
        let dv = ((6.0 * t2 - 6.0 * t) * p0
            + (3.0 * t2 - 4.0 * t + 1.0) * m0
            + (-6.0 * t2 + 6.0 * t) * p1
            + (3.0 * t2 - 2.0 * t) * m1)
            / self.ds;
        (v, dv)
    }

    /// Largest `|(φ′)² − ω₀φ² + 2F(φ)|` over the nodes.
    pub fn first_integral_residual(&self) -> f64 {
        let p = &self.params;
        self.phi
            .iter()
            .zip(&self.dphi)
            .map(|(&v, &dv)| (dv * dv - p.omega0 * v * v + 2.0 * self.nl.antiderivative(v)).abs())
            .fold(0.0, f64::max)
    }

    /// Largest `|φ″ − ω₀φ + f(φ)|` over interior nodes, `φ″` by a
    /// fourth-order difference of the `φ′` samples.
    pub fn ode_residual(&self) -> f64 {
        let n = self.phi.len();
        (2..n - 2)
            .map(|i| {
                let d = &self.dphi;
                let d2 = (-d[i + 2] + 8.0 * d[i + 1] - 8.0 * d[i - 1] + d[i - 2]) / (12.0 * self.ds);
                (d2 - self.params.h(&self.nl, self.phi[i])).abs()
            })
            .fold(0.0, f64::max)
    }

    pub fn is_monotone(&self) -> bool {
        self.dphi.iter().all(|&d| d < 0.0)
            && self.phi.windows(2).all(|w| w[1] <= w[0])
            && self.phi.iter().all(|&v| v > 0.0)
            && self.gap.iter().all(|&g| g > 0.0)
    }

    /// Index of the steepest node.
    pub fn steepest_node(&self) -> usize {
        let mut best = 0;
        for i in 0..self.dphi.len() {
            if self.dphi[i] < self.dphi[best] {
                best = i;
            }
        }
        best
    }

    /// Radius beyond which both the gap and `φ_K` are below `rel · b`.
    pub fn support_radius(&self, rel: f64) -> f64 {
        let (kp, km) = self.params.linear_rates();
        let thr = rel * self.params.b;
        let n = self.phi.len() - 1;
        let right = match self.phi.iter().position(|&v| v < thr) {
            Some(i) => self.s(i),
            None => self.s_max() + (self.phi[n] / thr).ln() / kp,
        };
        let left = match self.gap.iter().rposition(|&g| g < thr) {
            Some(i) => -self.s(i),
            None => -self.s_min + (self.gap[0] / thr).ln() / km,
        };
        right.max(left).max(0.0)
    }
}

/// Smallest `D_a` with
/// `1_{s<0}(b − φ_K) + 1_{s≥0}φ_K + |φ_K′| ≤ D_a e^{−a|s|}` on the grid.
pub fn certify_kink_decay(profile: &KinkProfile, a: f64) -> Result<DecayCertificate> {
    if !(a > 0.0) {
        return Err(Error::InvalidInput(format!("decay rate must be positive, got {a}")));
    }
    let n = profile.phi.len();
    let (mut best, mut arg) = (0.0f64, 0usize);
    for i in 0..n {
        let s = profile.s(i);
        let base = if s < 0.0 { profile.gap[i] } else { profile.phi[i] };
        let m = (base + profile.dphi[i].abs()) * (a * s.abs()).exp();
        if m > best {
            best = m;
            arg = i;
        }
    }
    let edge = (EDGE_FRACTION * (n - 1) as f64) as usize;
    if arg <= edge || arg >= n - 1 - edge {
        return Err(Error::CertificateUnbounded { a });
    }
    Ok(DecayCertificate {
        a,
        d_a: best,
        alpha1: profile.nl.alpha1,
        r_peak: profile.s(arg),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn double_power_parameters() {
        let nl = Nonlinearity::double_power(1.0, 2.0);
        let p = find_kink_params(&nl).unwrap();
        assert!((p.b - 2.0 / 3.0).abs() < 1e-10);
        assert!((p.omega0 - 2.0 / 9.0).abs() < 1e-10);
        assert!((p.h_prime_b - 2.0 / 9.0).abs() < 1e-10);
        assert!((p.s_star - 1.0 / 3.0).abs() < 1e-10);
        assert_eq!(p.alpha_bar, 1.0);
        // h(b) = 0 and ∫₀^b h = 0
        assert!(p.h(&nl, p.b).abs() < 1e-10);
        let integral = p.omega0 * p.b * p.b / 2.0 - nl.antiderivative(p.b);
        assert!(integral.abs() < 1e-10);
        // f′(b) = 2b − 3b² vanishes when αβ = 2
        assert!(nl.deriv_real(p.b).abs() < 1e-10);
    }

    #[test]
    fn general_double_power_parameters() {
        // b^{β−α} = α(2+β)/((2+α)β), ω₀ = b^α(1 − b^{β−α})
        let (alpha, beta) = (1.5, 3.0);
        let nl = Nonlinearity::double_power(alpha, beta);
        let p = find_kink_params(&nl).unwrap();
        let b = (alpha * (2.0 + beta) / ((2.0 + alpha) * beta)).powf(1.0 / (beta - alpha));
        let w = b.powf(alpha) * (1.0 - b.powf(beta - alpha));
        assert!((p.b - b).abs() < 1e-10 && (p.omega0 - w).abs() < 1e-10);
        assert_eq!(p.alpha_bar, 0.0);
        let hp = -alpha * b.powf(alpha) + beta * b.powf(beta);
        assert!((p.h_prime_b - hp).abs() < 1e-10);
    }

    #[test]
    fn sine_parameters() {
        let nl = Nonlinearity::sine_example();
        let p = find_kink_params(&nl).unwrap();
        assert!((p.b - 2.0 * PI).abs() < 1e-10);
        assert!((p.omega0 - 1.0).abs() < 1e-10);
        assert!((p.h_prime_b - 1.0).abs() < 1e-10);
        assert!((p.s_star - PI).abs() < 1e-10);
        assert_eq!(p.alpha_bar, 2.0);
    }

    #[test]
    fn pure_power_has_no_kink() {
        assert!(matches!(
            find_kink_params(&Nonlinearity::pure_power(2.0)),
            Err(Error::NoKink(_))
        ));
    }

    #[test]
    fn wrong_plateau_is_singular() {
        let nl = Nonlinearity::double_power(1.0, 2.0);
        let mut p = find_kink_params(&nl).unwrap();
        p.omega0 *= 0.9;
        assert!(matches!(
            solve_kink_profile(&p, &nl, None, None),
            Err(Error::QuadratureSingular(_))
        ));
    }

    #[test]
    fn double_power_profile() {
        let nl = Nonlinearity::double_power(1.0, 2.0);
        let p = find_kink_params(&nl).unwrap();
        let k = solve_kink_profile(&p, &nl, None, None).unwrap();
        assert!(k.first_integral_residual() < 1e-9);
        assert!(k.ode_residual() < 1e-8, "{}", k.ode_residual());
        assert!(k.is_monotone());
        let mid = (k.phi.len() - 1) / 2;
        assert!(k.steepest_node().abs_diff(mid) <= 1);
        assert!((k.eval(0.0).0 - 1.0 / 3.0).abs() < 1e-14);
        assert!(k.gap[0] < 1e-6 && *k.phi.last().unwrap() < 1e-6);
        let c = certify_kink_decay(&k, p.safe_rate()).unwrap();
        assert!((p.safe_rate() - 0.2).abs() < 1e-10);
        assert!(c.d_a.is_finite());
        assert!(matches!(
            certify_kink_decay(&k, 1.2 * p.omega0.sqrt()),
            Err(Error::CertificateUnbounded { .. })
        ));
    }

    #[test]
    fn sine_profile() {
        let nl = Nonlinearity::sine_example();
        let p = find_kink_params(&nl).unwrap();
        let k = solve_kink_profile(&p, &nl, None, None).unwrap();
        assert!(k.first_integral_residual() < 1e-9);
        assert!(k.ode_residual() < 1e-8, "{}", k.ode_residual());
        assert!(k.is_monotone());
        assert!(certify_kink_decay(&k, 0.9).unwrap().d_a.is_finite());
        // φ″ = sin φ, the pendulum separatrix: φ = 4 arctan(e^{−s}) + π·0 shifted
        // so that φ(0) = π
        for &s in &[-3.0f64, -0.5, 0.0, 1.0, 4.0] {
            let exact = 4.0 * (-s).exp().atan();
            assert!((k.eval(s).0 - exact).abs() < 1e-9, "{s}");
        }
    }

    #[test]
    fn interpolation_and_extrapolation() {
        let nl = Nonlinearity::double_power(1.0, 2.0);
        let p = find_kink_params(&nl).unwrap();
        let k = solve_kink_profile(&p, &nl, None, None).unwrap();
        let s_max = k.s_max();
        assert!(k.eval(s_max + 5.0).0 < k.eval(s_max).0);
        assert!(k.gap_at(-s_max - 5.0) < k.gap_at(-s_max));
        let (v, dv) = k.eval(2.3456);
        let h = 1e-4;
        let fd = (k.eval(2.3456 + h).0 - k.eval(2.3456 - h).0) / (2.0 * h);
        assert!((dv - fd).abs() < 1e-8 && v > 0.0);
        assert!((k.gap_at(-1.234) - (p.b - k.eval(-1.234).0)).abs() < 1e-14);
    }
}
