//! Radial ground states of `Δφ + f(φ) = ωφ` by bisection shooting on `φ(0)`,
//! their exponential decay certificates, and the small-frequency scaling scan.

use serde::{Deserialize, Serialize};

use crate::analysis::linear_fit;
use crate::nonlinearity::{log_space, Nonlinearity, NonlinearityKind};
use crate::ode::Dopri5;
use crate::{Error, Result};

const BISECTION_DEPTH: usize = 60;
const SCAN_POINTS: usize = 181;
const SCAN_LO: f64 = 1e-6;
const SCAN_HI: f64 = 1e3;
/// The outward shot is joined to the inward solution once `φ` falls below
/// this fraction of `φ(0)`.
const MATCH_REL: f64 = 1e-3;
const EDGE_FRACTION: f64 = 0.05;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundStateOptions {
    /// Radius of the grid; defaults to `30/√ω`.
    pub r_max: Option<f64>,
    /// Node spacing; defaults to `10⁻³/√ω`.
    pub h: Option<f64>,
    /// Residual tolerance at the nodes.
    pub tol: f64,
}

impl Default for BoundStateOptions {
    fn default() -> Self {
        BoundStateOptions {
            r_max: None,
            h: None,
            tol: 1e-8,
        }
    }
}

/// Anchor of the linear tail `c r^{−ν} K_ν(√ω r)` used beyond the grid.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TailAnchor {
    pub r: f64,
    pub phi: f64,
}

/// A positive radial ground state sampled on `r_i = i h`, `i = 0..n`.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundState {
    pub omega: f64,
    pub d: usize,
    pub nl: Nonlinearity,
    pub h: f64,
    pub phi: Vec<f64>,
    pub dphi: Vec<f64>,
    pub d2phi: Vec<f64>,
    /// Largest node residual of the radial equation.
    pub residual: f64,
    pub tail: TailAnchor,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Outcome {
    Crosses,
    Escapes,
    Undecided,
}

/// Scaled Macdonald function `eˣ K_ν(x)` by its large-argument expansion
/// (exact for `|ν| = 1/2`).
fn bessel_k_scaled(nu: f64, x: f64) -> f64 {
    let mu = 4.0 * nu * nu;
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..60 {
        let next = term * (mu - ((2 * k - 1) * (2 * k - 1)) as f64) / (8.0 * k as f64 * x);
        if next.abs() >= term.abs() || next == 0.0 {
            break;
        }
        term = next;
        sum += term;
        if term.abs() < 1e-17 * sum.abs() {
            break;
        }
    }
    (std::f64::consts::PI / (2.0 * x)).sqrt() * sum
}

struct Radial<'a> {
    nl: &'a Nonlinearity,
    omega: f64,
    d: usize,
}

impl Radial<'_> {
    fn rhs(&self, r: f64, y: &[f64; 2]) -> [f64; 2] {
        let src = self.omega * y[0] - self.nl.eval_real(y[0]);
        if r == 0.0 {
            [y[1], src / self.d as f64]
        } else {
            [y[1], src - (self.d as f64 - 1.0) / r * y[1]]
        }
    }

    fn nu(&self) -> f64 {
        0.5 * (self.d as f64 - 2.0)
    }

    fn kappa(&self) -> f64 {
        self.omega.sqrt()
    }

    /// Tail value and slope at `r` anchored at `(r_g, φ_g)`.
    fn tail(&self, anchor: TailAnchor, r: f64) -> (f64, f64) {
        let (nu, k) = (self.nu(), self.kappa());
        let base = bessel_k_scaled(nu.abs(), k * anchor.r);
        let ratio = (r / anchor.r).powf(-nu) * (-k * (r - anchor.r)).exp();
        let phi = anchor.phi * ratio * bessel_k_scaled(nu.abs(), k * r) / base;
        let dphi = -k * anchor.phi * ratio * bessel_k_scaled((nu + 1.0).abs(), k * r) / base;
        (phi, dphi)
    }
}

struct Shot {
    outcome: Outcome,
    phi: Vec<f64>,
    dphi: Vec<f64>,
    glue: Option<usize>,
}

fn solver(scale: f64, h: f64) -> Dopri5 {
    Dopri5 {
        rtol: 1e-13,
        atol: 1e-22 * scale,
        h_min: 1e-12 * h,
        max_steps: 100_000,
    }
}

/// Integrates inward from `r_n` with tail data `c·(1, slope)` down to node
/// `m`, returning `(φ, φ′)` on nodes `m..=n`.
fn shoot_inward(sys: &Radial, c: f64, slope: f64, h: f64, n: usize, m: usize) -> Option<(Vec<f64>, Vec<f64>)> {
    let solver = solver(c.abs(), h);
    let f = |r: f64, y: &[f64; 2]| sys.rhs(r, y);
    let mut y = [c, c * slope];
    let mut step = h;
    let mut phi = vec![0.0; n - m + 1];
    let mut dphi = vec![0.0; n - m + 1];
    phi[n - m] = y[0];
    dphi[n - m] = y[1];
    for i in (m..n).rev() {
        let r1 = (i + 1) as f64 * h;
        y = solver.integrate(&f, r1, y, i as f64 * h, &mut step)?;
        phi[i - m] = y[0];
        dphi[i - m] = y[1];
    }
    Some((phi, dphi))
}

fn shoot(sys: &Radial, phi0: f64, h: f64, n: usize, record: bool) -> Shot {
    let solver = solver(phi0, h);
    let f = |r: f64, y: &[f64; 2]| sys.rhs(r, y);
    let mut y = [phi0, 0.0];
    let mut step = h;
    let mut shot = Shot {
        outcome: Outcome::Undecided,
        phi: Vec::new(),
        dphi: Vec::new(),
        glue: None,
    };
    if record {
        shot.phi.push(y[0]);
        shot.dphi.push(y[1]);
    }
    for i in 0..n {
        let r0 = i as f64 * h;
        match solver.integrate(&f, r0, y, r0 + h, &mut step) {
            Some(next) => y = next,
            None => {
                shot.outcome = Outcome::Escapes;
                return shot;
            }
        }
        if !(y[0].is_finite() && y[1].is_finite()) || y[0] > 2.0 * phi0 || y[1] > 0.0 {
            shot.outcome = Outcome::Escapes;
            return shot;
        }
        if y[0] < 0.0 {
            shot.outcome = Outcome::Crosses;
            return shot;
        }
        if record {
            shot.phi.push(y[0]);
            shot.dphi.push(y[1]);
            if y[0] < MATCH_REL * phi0 {
                shot.glue = Some(i + 1);
                return shot;
            }
        }
    }
    shot
}

/// Solves for the positive radial ground state at frequency `ω` in
/// dimension `d ∈ {1, 2, 3}`.
pub fn solve_bound_state(
    nl: &Nonlinearity,
    omega: f64,
    d: usize,
    opts: &BoundStateOptions,
) -> Result<BoundState> {
    if !(omega > 0.0 && omega.is_finite()) {
        return Err(Error::InvalidInput(format!("omega must be positive, got {omega}")));
    }
    if !(1..=3).contains(&d) {
        return Err(Error::InvalidInput(format!("bound states need d in 1..=3, got {d}")));
    }
    let sys = Radial { nl, omega, d };
    let r_max = opts.r_max.unwrap_or(30.0 / omega.sqrt());
    let h_target = opts.h.unwrap_or(1e-3 / omega.sqrt());
    if !(r_max > 0.0 && h_target > 0.0 && h_target < r_max) {
        return Err(Error::InvalidInput(format!("bad radial grid: r_max {r_max}, h {h_target}")));
    }
    let n = (r_max / h_target).ceil() as usize;
    let h = r_max / n as f64;

    // bracket: first escape -> cross transition on a log scan of φ(0)
    let scan = log_space(SCAN_LO, SCAN_HI, SCAN_POINTS);
    let mut bracket = None;
    let mut prev: Option<(f64, Outcome)> = None;
    for &p in &scan {
        let o = shoot(&sys, p, h, n, false).outcome;
        if let Some((q, Outcome::Escapes)) = prev {
            if o == Outcome::Crosses {
                bracket = Some((q, p));
                break;
            }
        }
        prev = Some((p, o));
    }
    let (mut lo, mut hi) = bracket.ok_or_else(|| {
        Error::NoBoundState(format!(
            "no escape/crossing bracket for phi(0) in [{SCAN_LO}, {SCAN_HI}] at omega = {omega}"
        ))
    })?;

    let mut phi0 = 0.5 * (lo + hi);
    for _ in 0..BISECTION_DEPTH {
        phi0 = 0.5 * (lo + hi);
        if phi0 <= lo || phi0 >= hi {
            break;
        }
        match shoot(&sys, phi0, h, n, false).outcome {
            Outcome::Escapes => lo = phi0,
            Outcome::Crosses => hi = phi0,
            Outcome::Undecided => break,
        }
    }

    let shot = shoot(&sys, phi0, h, n, true);
    let (mut phi, mut dphi) = (shot.phi, shot.dphi);
    match (shot.glue, shot.outcome) {
        (Some(m), _) => {
            let (tail_in, tail_out) = match_inward(&sys, phi[m], h, n, m)?;
            phi.truncate(m);
            dphi.truncate(m);
            phi.extend(tail_in);
            dphi.extend(tail_out);
        }
        (None, Outcome::Undecided) => {}
        (None, _) => {
            return Err(Error::NotConverged(format!(
                "shooting trajectory left the ground-state branch at r = {:.4} before reaching the tail (omega = {omega})",
                phi.len() as f64 * h
            )))
        }
    }
    let anchor = TailAnchor {
        r: n as f64 * h,
        phi: phi[n],
    };
    let d2phi: Vec<f64> = (0..=n)
        .map(|i| sys.rhs(i as f64 * h, &[phi[i], dphi[i]])[1])
        .collect();

    let mut bs = BoundState {
        omega,
        d,
        nl: *nl,
        h,
        phi,
        dphi,
        d2phi,
        residual: 0.0,
        tail: anchor,
    };
    bs.residual = bs.node_residual();
    if !(bs.residual < opts.tol) {
        return Err(Error::NotConverged(format!(
            "node residual {:.3e} exceeds tolerance {:.1e} (omega = {omega})",
            bs.residual, opts.tol
        )));
    }
    if !bs.is_monotone() {
        return Err(Error::NotConverged(format!(
            "profile not strictly decreasing (omega = {omega})"
        )));
    }
    Ok(bs)
}

/// Inward solution from the grid edge whose value at node `m` equals
/// `target`; the tail amplitude is found by secant iteration.
fn match_inward(sys: &Radial, target: f64, h: f64, n: usize, m: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    let r_edge = n as f64 * h;
    let unit = TailAnchor { r: r_edge, phi: 1.0 };
    let slope = sys.tail(unit, r_edge).1;
    let linear_guess = target / sys.tail(unit, m as f64 * h).0;
    let fail = || Error::NotConverged(format!("inward tail integration failed (omega = {})", sys.omega));
    let run = |c: f64| shoot_inward(sys, c, slope, h, n, m).ok_or_else(fail);
    let mut c = linear_guess;
    let mut sol = run(c)?;
    for _ in 0..30 {
        let got = sol.0[0];
        if (got - target).abs() <= 1e-15 * target.abs() {
            break;
        }
        let next = c * target / got;
        if next == c {
            break;
        }
        c = next;
        sol = run(c)?;
    }
    Ok(sol)
}

impl BoundState {
    pub fn phi0(&self) -> f64 {
        self.phi[0]
    }

    pub fn r_max(&self) -> f64 {
        (self.phi.len() - 1) as f64 * self.h
    }

    pub fn radii(&self) -> Vec<f64> {
        (0..self.phi.len()).map(|i| i as f64 * self.h).collect()
    }

    fn radial(&self) -> Radial<'_> {
        Radial {
            nl: &self.nl,
            omega: self.omega,
            d: self.d,
        }
    }

    /// Largest `|φ″ + (d−1)/r φ′ − ωφ + f(φ)|` over the nodes, with `φ″`
    /// from a fourth-order difference of the `φ′` samples (odd extension
    /// through `r = 0`, where the equation reads `dφ″ − ωφ + f(φ)`).
    pub fn node_residual(&self) -> f64 {
        let n = self.phi.len();
        let psi = |i: isize| -> f64 {
            if i < 0 {
                -self.dphi[(-i) as usize]
            } else {
                self.dphi[i as usize]
            }
        };
        let dm1 = self.d as f64 - 1.0;
        let mut worst: f64 = 0.0;
        for i in 0..n.saturating_sub(2) {
            let k = i as isize;
            let d2 = (-psi(k + 2) + 8.0 * psi(k + 1) - 8.0 * psi(k - 1) + psi(k - 2)) / (12.0 * self.h);
            let r = i as f64 * self.h;
            let lap = if i == 0 {
                self.d as f64 * d2
            } else {
                d2 + dm1 / r * self.dphi[i]
            };
            let res = lap - self.omega * self.phi[i] + self.nl.eval_real(self.phi[i]);
            worst = worst.max(res.abs());
        }
        worst
    }

    pub fn is_monotone(&self) -> bool {
        self.phi.windows(2).all(|w| w[1] < w[0]) && self.phi.iter().all(|&p| p > 0.0)
    }

    /// `(φ(r), φ′(r))` by cubic Hermite interpolation; beyond the grid the
    /// linear tail is used.
    pub fn eval(&self, r: f64) -> (f64, f64) {
        let r = r.abs();
        let n = self.phi.len() - 1;
        if r >= self.r_max() {
            return self.radial().tail(self.tail, r);
        }
        let i = ((r / self.h) as usize).min(n - 1);
        let s = r / self.h - i as f64;
        let (p0, p1) = (self.phi[i], self.phi[i + 1]);
        let (m0, m1) = (self.dphi[i] * self.h, self.dphi[i + 1] * self.h);
        let s2 = s * s;
        let s3 = s2 * s;
        let v = (2.0 * s3 - 3.0 * s2 + 1.0) * p0
            + (s3 - 2.0 * s2 + s) * m0
            + (-2.0 * s3 + 3.0 * s2) * p1
            + (s3 - s2) * m1;
        let dv = ((6.0 * s2 - 6.0 * s) * p0
            + (3.0 * s2 - 4.0 * s + 1.0) * m0
            + (-6.0 * s2 + 6.0 * s) * p1
            + (3.0 * s2 - 2.0 * s) * m1)
            / self.h;
        (v, dv)
    }

    pub fn value(&self, r: f64) -> f64 {
        self.eval(r).0
    }

    /// One-dimensional profile value `φ(x)` and slope `φ′(x)` for signed `x`.
    pub fn eval_1d(&self, x: f64) -> (f64, f64) {
        let (v, dv) = self.eval(x);
        (v, if x < 0.0 { -dv } else { dv })
    }

    /// Radius beyond which `φ < rel · φ(0)`.
    pub fn support_radius(&self, rel: f64) -> f64 {
        let thr = rel * self.phi0();
        if let Some(i) = self.phi.iter().position(|&p| p < thr) {
            return i as f64 * self.h;
        }
        // continue along the tail
        let k = self.omega.sqrt();
        let last = *self.phi.last().unwrap();
        self.r_max() + (last / thr).ln() / k
    }

    /// Copy restricted to `r ≤ r_max`.
    pub fn truncated(&self, r_max: f64) -> BoundState {
        let keep = ((r_max / self.h).floor() as usize + 1).min(self.phi.len());
        let mut bs = self.clone();
        bs.phi.truncate(keep);
        bs.dphi.truncate(keep);
        bs.d2phi.truncate(keep);
        if bs.tail.r > bs.r_max() {
            bs.tail = TailAnchor {
                r: bs.r_max(),
                phi: *bs.phi.last().unwrap(),
            };
        }
        bs
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayCertificate {
    pub a: f64,
    /// Minimal constant `D_a` over the grid.
    pub d_a: f64,
    pub alpha1: f64,
    /// Radius where the maximand peaks.
    pub r_peak: f64,
}

/// Smallest `D_a` with `|φ| + ω^{−1/2}|φ′| ≤ D_a ω^{1/α₁} e^{−a√ω r}` at
/// every node.
pub fn certify_decay(bs: &BoundState, a: f64) -> Result<DecayCertificate> {
    if !(a > 0.0 && a < 1.0) {
        return Err(Error::InvalidInput(format!("decay rate a must lie in (0, 1), got {a}")));
    }
    let k = bs.omega.sqrt();
    let scale = bs.omega.powf(-1.0 / bs.nl.alpha1);
    let (mut best, mut arg) = (0.0f64, 0usize);
    for i in 0..bs.phi.len() {
        let r = i as f64 * bs.h;
        let m = (bs.phi[i].abs() + bs.dphi[i].abs() / k) * scale * (a * k * r).exp();
        if m > best {
            best = m;
            arg = i;
        }
    }
    let n = bs.phi.len();
    if arg as f64 >= (1.0 - EDGE_FRACTION) * (n - 1) as f64 {
        return Err(Error::CertificateUnbounded { a });
    }
    Ok(DecayCertificate {
        a,
        d_a: best,
        alpha1: bs.nl.alpha1,
        r_peak: arg as f64 * bs.h,
    })
}

/// One-dimensional ground state of `Q″ − Q + Q^{α+1} = 0`:
/// `((α+2)/2)^{1/α} sech^{2/α}(αx/2)`.
pub fn closed_form_q(alpha: f64, x: f64) -> f64 {
    ((alpha + 2.0) / 2.0).powf(1.0 / alpha) * (1.0 / (0.5 * alpha * x).cosh()).powf(2.0 / alpha)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BifurcationReport {
    pub omegas: Vec<f64>,
    /// `sup_y |ω^{−1/α} φ_ω(ω^{−1/2} y) − Q(y)|` per frequency.
    pub sup_xi: Vec<f64>,
    pub m_fitted: f64,
    /// Predicted exponent `(β/α − 1)/min(1, α)`.
    pub m_predicted: f64,
    pub r_squared: f64,
}

const XI_Y_MAX: f64 = 20.0;
const XI_SAMPLES: usize = 4001;

/// Measures the deviation of small-frequency ground states from the rescaled
/// pure-power ground state and fits its power law in `ω`.
pub fn bifurcation_scan(nl: &Nonlinearity, omegas: &[f64], d: usize) -> Result<BifurcationReport> {
    let (alpha, beta) = match nl.kind {
        NonlinearityKind::DoublePower { alpha, beta } => (alpha, beta),
        _ => {
            return Err(Error::InvalidInput(
                "the bifurcation scan needs a double-power nonlinearity".into(),
            ))
        }
    };
    if omegas.len() < 2 {
        return Err(Error::InsufficientSamples {
            needed: 2,
            got: omegas.len(),
        });
    }
    let q_numeric = if d == 1 {
        None
    } else {
        Some(solve_bound_state(
            &Nonlinearity::pure_power(alpha),
            1.0,
            d,
            &BoundStateOptions::default(),
        )?)
    };
    let q = |y: f64| match &q_numeric {
        None => closed_form_q(alpha, y),
        Some(bs) => bs.value(y),
    };
    let mut sup_xi = Vec::with_capacity(omegas.len());
    for &w in omegas {
        let bs = solve_bound_state(nl, w, d, &BoundStateOptions::default())?;
        let (sy, sv) = (w.powf(-0.5), w.powf(-1.0 / alpha));
        let sup = (0..XI_SAMPLES)
            .map(|i| {
                let y = XI_Y_MAX * i as f64 / (XI_SAMPLES - 1) as f64;
                (sv * bs.value(sy * y) - q(y)).abs()
            })
            .fold(0.0, f64::max);
        sup_xi.push(sup);
    }
    let lx: Vec<f64> = omegas.iter().map(|w| w.ln()).collect();
    let ly: Vec<f64> = sup_xi.iter().map(|s| s.ln()).collect();
    let fit = linear_fit(&lx, &ly)?;
    Ok(BifurcationReport {
        omegas: omegas.to_vec(),
        sup_xi,
        m_fitted: fit.slope,
        m_predicted: (beta / alpha - 1.0) / alpha.min(1.0),
        r_squared: fit.r_squared,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bessel_half_order_is_exact() {
        for &x in &[0.5, 3.0, 40.0] {
            let k = bessel_k_scaled(0.5, x);
            assert!((k - (std::f64::consts::PI / (2.0 * x)).sqrt()).abs() < 1e-15);
        }
        // K₀(20) = 5.741237815336524e-10, K₁(20) = 5.883057969557038e-10
        assert!((bessel_k_scaled(0.0, 20.0) * (-20f64).exp() / 5.741237815336524e-10 - 1.0).abs() < 1e-12);
        assert!((bessel_k_scaled(1.0, 20.0) * (-20f64).exp() / 5.883057969557038e-10 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn closed_form_examples() {
        assert!((closed_form_q(2.0, 0.0) - 2f64.sqrt()).abs() < 1e-15);
        assert!((closed_form_q(1.0, 0.0) - 1.5).abs() < 1e-15);
        // Q'' − Q + Q^{α+1} by central differences
        for &a in &[1.0, 2.0, 3.0] {
            for &x in &[0.0, 0.7, 2.5, 6.0] {
                let h = 1e-3;
                let q = |y: f64| closed_form_q(a, y);
                let d2 = (-q(x + 2.0 * h) + 16.0 * q(x + h) - 30.0 * q(x) + 16.0 * q(x - h)
                    - q(x - 2.0 * h))
                    / (12.0 * h * h);
                assert!((d2 - q(x) + q(x).powf(a + 1.0)).abs() < 1e-8);
            }
        }
        let ratio = closed_form_q(2.0, 30.0) / (-30f64).exp();
        assert!((ratio - 2.0 * 2f64.sqrt()).abs() < 1e-9);
    }

    #[test]
    fn power_ground_states_match_closed_form() {
        for &a in &[1.0, 3.0] {
            let nl = Nonlinearity::pure_power(a);
            let bs = solve_bound_state(&nl, 1.0, 1, &BoundStateOptions::default()).unwrap();
            assert!((bs.phi0() - ((a + 2.0) / 2.0).powf(1.0 / a)).abs() < 1e-6);
            assert!(bs.residual < 1e-8 && bs.is_monotone());
        }
    }

    #[test]
    fn higher_dimensional_cubic_ground_states() {
        // Q(0) of ΔQ − Q + Q³ = 0: 2.2062 (d = 2), 4.3374 (d = 3)
        let nl = Nonlinearity::pure_power(2.0);
        let q2 = solve_bound_state(&nl, 1.0, 2, &BoundStateOptions::default()).unwrap();
        assert!((q2.phi0() - 2.20620086).abs() < 1e-6, "{}", q2.phi0());
        let q3 = solve_bound_state(&nl, 1.0, 3, &BoundStateOptions::default()).unwrap();
        assert!((q3.phi0() - 4.33738768).abs() < 1e-6, "{}", q3.phi0());
        assert!(q2.residual < 1e-8 && q3.residual < 1e-8);
    }

    #[test]
    fn double_power_first_integral() {
        // in d = 1 the peak solves F(φ₀) = ωφ₀²/2, i.e. φ₀² − (4/3)φ₀ + 2ω = 0
        let nl = Nonlinearity::double_power(1.0, 2.0);
        for &w in &[0.2, 0.05] {
            let bs = solve_bound_state(&nl, w, 1, &BoundStateOptions::default()).unwrap();
            let exact = (4.0 / 3.0 - (16.0 / 9.0 - 8.0 * w).sqrt()) / 2.0;
            assert!((bs.phi0() - exact).abs() < 1e-9 * exact.max(1e-3), "{w}: {}", bs.phi0());
        }
    }

    #[test]
    fn certificate_uniform_in_small_frequency() {
        let nl = Nonlinearity::double_power(1.0, 2.0);
        let d: Vec<f64> = [0.05, 0.025]
            .iter()
            .map(|&w| {
                let bs = solve_bound_state(&nl, w, 1, &BoundStateOptions::default()).unwrap();
                certify_decay(&bs, 0.9).unwrap().d_a
            })
            .collect();
        assert!(d[0] / d[1] < 2.0 && d[1] / d[0] < 2.0, "{d:?}");
    }

    #[test]
    fn bifurcation_slope() {
        let nl = Nonlinearity::double_power(1.0, 2.0);
        let om: Vec<f64> = (0..5).map(|k| 0.1 * 2f64.powi(-k)).collect();
        let rep = bifurcation_scan(&nl, &om, 1).unwrap();
        assert_eq!(rep.m_predicted, 1.0);
        assert!((rep.m_fitted - 1.0).abs() < 0.3, "{rep:?}");
        let dp24 = Nonlinearity::double_power(2.0, 4.0);
        assert!(bifurcation_scan(&Nonlinearity::pure_power(2.0), &om, 1).is_err());
        let rep = bifurcation_scan(&dp24, &[0.1, 0.05], 1).unwrap();
        assert_eq!(rep.m_predicted, 1.0);
    }

    proptest::proptest! {
        #![proptest_config(proptest::prelude::ProptestConfig::with_cases(6))]
        #[test]
        fn power_scaling_identity(w in 0.2f64..4.0) {
            let nl = Nonlinearity::pure_power(2.0);
            let bs = solve_bound_state(&nl, w, 1, &BoundStateOptions::default()).unwrap();
            proptest::prop_assert!(bs.residual < 1e-8);
            proptest::prop_assert!(bs.is_monotone());
            let k = w.sqrt();
            let worst = (0..400)
                .map(|i| {
                    let x = i as f64 * 0.05 / k;
                    (bs.value(x) - k * closed_form_q(2.0, k * x)).abs()
                })
                .fold(0.0, f64::max);
            proptest::prop_assert!(worst < 1e-6, "{}", worst);
        }
    }

    #[test]
    fn cubic_soliton() {
        let nl = Nonlinearity::pure_power(2.0);
        let bs = solve_bound_state(&nl, 1.0, 1, &BoundStateOptions::default()).unwrap();
        assert!((bs.phi0() - 2f64.sqrt()).abs() < 1e-6, "{}", bs.phi0());
        assert!(bs.residual < 1e-8);
        let worst = (0..200)
            .map(|i| {
                let x = i as f64 * 0.1;
                (bs.value(x) - closed_form_q(2.0, x)).abs()
            })
            .fold(0.0, f64::max);
        assert!(worst < 1e-6, "{worst}");
    }

    #[test]
    fn certificate_examples() {
        let nl = Nonlinearity::pure_power(2.0);
        let bs = solve_bound_state(&nl, 1.0, 1, &BoundStateOptions::default()).unwrap();
        let c = certify_decay(&bs, 0.9).unwrap();
        assert!(c.d_a.is_finite() && c.d_a > 0.0);
        let short = bs.truncated(3.0);
        assert!(matches!(
            certify_decay(&short, 0.999),
            Err(Error::CertificateUnbounded { .. })
        ));
    }

    #[test]
    fn double_power_outside_range() {
        let nl = Nonlinearity::double_power(1.0, 2.0);
        assert!(matches!(
            solve_bound_state(&nl, 0.5, 1, &BoundStateOptions::default()),
            Err(Error::NoBoundState(_))
        ));
    }
}
