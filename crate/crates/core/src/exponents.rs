//! Exponent bookkeeping: the choice of `r₀`, the side conditions of the
//! existence theorems and Strichartz admissible pairs.

use serde::{Deserialize, Serialize};

use crate::nonlinearity::alpha_max;
use crate::{Error, Result};

/// Largest margin tried when selecting `r₀`.
const EPS_START: f64 = 1.0 / 16.0;
/// Number of dyadic halvings tried before giving up.
const EPS_HALVINGS: u32 = 40;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExponentConfig {
    pub d: usize,
    pub alpha1: f64,
    pub alpha2: f64,
    pub r0: f64,
    pub r2: f64,
    /// Hölder exponent of the kink at its end state, 0 when unused.
    pub alpha_bar: f64,
    /// Margin used in the `r₀` selection.
    pub eps: f64,
    /// Dispersive exponent `d(1/2 − 1/r₂)`.
    pub theta: f64,
    /// Interpolation exponent `s`.
    pub s: f64,
}

impl ExponentConfig {
    /// Selects `r₀` with [`choose_r0`] and fills in the derived exponents.
    pub fn new(d: usize, alpha1: f64, alpha2: f64, alpha_bar: f64) -> Result<Self> {
        let r0 = choose_r0(d, alpha1, alpha2)?;
        let base = lower_r0(d, alpha1);
        let mut cfg = Self::with_r0(d, alpha1, alpha2, alpha_bar, r0);
        cfg.eps = r0 - base;
        Ok(cfg)
    }

    /// Uses a caller-supplied `r₀`, without checking it.
    pub fn with_r0(d: usize, alpha1: f64, alpha2: f64, alpha_bar: f64, r0: f64) -> Self {
        let r2 = 2.0 + alpha2;
        let theta = d as f64 * (0.5 - 1.0 / r2);
        ExponentConfig {
            d,
            alpha1,
            alpha2,
            r0,
            r2,
            alpha_bar,
            eps: r0 - lower_r0(d, alpha1),
            theta,
            s: interpolation_exponent(alpha1, r0, r2),
        }
    }
}

fn lower_r0(d: usize, alpha1: f64) -> f64 {
    f64::max(1.0, d as f64 * alpha1 / 2.0)
}

/// `s` with `1/s` at the midpoint of `(1/r₂′, min((1+α₁)/r₀, 1))`.
///
/// The upper end is capped at 1 so that `s > 1` also when `(1+α₁)/r₀ > 1`.
pub fn interpolation_exponent(alpha1: f64, r0: f64, r2: f64) -> f64 {
    let lo = 1.0 - 1.0 / r2;
    let hi = f64::min((1.0 + alpha1) / r0, 1.0);
    2.0 / (lo + hi)
}

fn ass3_holds(d: usize, alpha1: f64, alpha2: f64, r0: f64) -> bool {
    let r2 = 2.0 + alpha2;
    let a = lower_r0(d, alpha1) < r0 && r0 < 2.0 + alpha1;
    let b = 0.5 <= alpha1 / r0 + 1.0 / r2;
    let c = 1.0 < (alpha1 + 1.0) / r0 + 1.0 / r2;
    let small = alpha1 >= 4.0 / d as f64 || r0 <= 2.0;
    a && b && c && small
}

/// `r₀ = max(1, dα₁/2) + ε`, with `ε` the largest of `1/16, 1/32, …` for
/// which the three `r₀` conditions hold (and `r₀ ≤ 2` when `α₁ < 4/d`).
pub fn choose_r0(d: usize, alpha1: f64, alpha2: f64) -> Result<f64> {
    if d == 0 || !(alpha1 > 0.0 && alpha1 <= alpha2 && alpha2 < alpha_max(d)) {
        return Err(Error::InvalidInput(format!(
            "need 0 < alpha1 <= alpha2 < alpha_max({d}), got ({alpha1}, {alpha2})"
        )));
    }
    if alpha2 / (2.0 + alpha2) > alpha1 {
        return Err(Error::ConditionViolated(format!(
            "alpha2/(2+alpha2) = {:.6} > alpha1 = {alpha1}",
            alpha2 / (2.0 + alpha2)
        )));
    }
    let base = lower_r0(d, alpha1);
    let mut eps = EPS_START;
    for _ in 0..EPS_HALVINGS {
        let r0 = base + eps;
        if ass3_holds(d, alpha1, alpha2, r0) {
            return Ok(r0);
        }
        eps *= 0.5;
    }
    Err(Error::ConditionViolated(format!(
        "no r0 = {base} + eps satisfies the r0 conditions for (d, alpha1, alpha2) = ({d}, {alpha1}, {alpha2})"
    )))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Theorem {
    T1_1,
    T1_2,
    T1_3,
    T1_4,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConditionCheck {
    pub name: String,
    pub inequality: String,
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConditionReport {
    pub theorem: Theorem,
    pub checks: Vec<ConditionCheck>,
    pub pass: bool,
}

impl ConditionReport {
    pub fn failing(&self) -> impl Iterator<Item = &ConditionCheck> {
        self.checks.iter().filter(|c| !c.holds)
    }
}

fn check(name: &str, inequality: &str, lhs: f64, rhs: f64, strict: bool) -> ConditionCheck {
    ConditionCheck {
        name: name.to_string(),
        inequality: inequality.to_string(),
        lhs,
        rhs,
        holds: if strict { lhs < rhs } else { lhs <= rhs },
    }
}

/// Evaluates the hypotheses of one of the existence theorems on `cfg`.
/// Never fails; failing inequalities are listed in the report.
pub fn check_theorem_conditions(cfg: &ExponentConfig, theorem: Theorem) -> ConditionReport {
    let (d, a1, a2, r0, r2, ab) = (cfg.d, cfg.alpha1, cfg.alpha2, cfg.r0, cfg.r2, cfg.alpha_bar);
    let df = d as f64;
    let lower = check(
        "exponent_lower",
        "alpha2/(2+alpha2) <= alpha1",
        a2 / (2.0 + a2),
        a1,
        false,
    );
    let one_d = || check("dimension", "d <= 1", df, 1.0, false);
    let mut checks = Vec::new();
    match theorem {
        Theorem::T1_1 => {
            checks.push(lower);
            checks.push(check("r0_lower", "max(1, d*alpha1/2) < r0", lower_r0(d, a1), r0, true));
            checks.push(check("r0_upper", "r0 < 2+alpha1", r0, 2.0 + a1, true));
            checks.push(check("r0_b", "1/2 <= alpha1/r0 + 1/r2", 0.5, a1 / r0 + 1.0 / r2, false));
            checks.push(check("r0_c", "1 < (alpha1+1)/r0 + 1/r2", 1.0, (a1 + 1.0) / r0 + 1.0 / r2, true));
        }
        Theorem::T1_2 => {
            checks.push(check("alpha1_small", "alpha1 < 4/(d+2)", a1, 4.0 / (df + 2.0), true));
        }
        Theorem::T1_3 => {
            checks.push(one_d());
            checks.push(lower);
            checks.push(check("kink_b", "1/2 <= alpha_bar/r0 + 1/r2", 0.5, ab / r0 + 1.0 / r2, false));
            checks.push(check("kink_c", "1 < (alpha_bar+1)/r0 + 1/r2", 1.0, (ab + 1.0) / r0 + 1.0 / r2, true));
        }
        Theorem::T1_4 => {
            checks.push(one_d());
            checks.push(check("alpha1_small", "alpha1 < 4/3", a1, 4.0 / 3.0, true));
            checks.push(check(
                "kink_r0",
                "r0*(alpha1+1) < (alpha_bar+1)*(alpha1+2)",
                r0 * (a1 + 1.0),
                (ab + 1.0) * (a1 + 2.0),
                true,
            ));
        }
    }
    let pass = checks.iter().all(|c| c.holds);
    ConditionReport {
        theorem,
        checks,
        pass,
    }
}

/// Upper cap on `r` in the Strichartz norm: infinite unless `d = 2`, where
/// it is `α₂ + 3`.
pub fn r_str(d: usize, alpha2: f64) -> f64 {
    if d == 2 {
        alpha2 + 3.0
    } else {
        f64::INFINITY
    }
}

/// Largest admissible `r`: `∞` for `d = 1`, `2d/(d−2)` for `d ≥ 3`. For
/// `d = 2` the supremum `∞` itself is excluded.
pub fn r_admissible_max(d: usize) -> f64 {
    if d <= 2 {
        f64::INFINITY
    } else {
        2.0 * d as f64 / (d as f64 - 2.0)
    }
}

/// The `q` paired with `r` by `2/q + d/r = d/2`.
pub fn admissible_q(d: usize, r: f64) -> f64 {
    let inv_q = 0.25 * d as f64 * (1.0 - 2.0 / r);
    1.0 / inv_q
}

fn inv(x: f64) -> f64 {
    1.0 / x
}

/// Checks that `(q, r)` is a Strichartz admissible pair in dimension `d`.
pub fn check_pair(d: usize, q: f64, r: f64) -> Result<()> {
    let err = || Err(Error::InvalidPair { d, q, r });
    if d == 0 || !(q >= 2.0 && r >= 2.0) {
        return err();
    }
    if d == 2 && q == 2.0 && r.is_infinite() {
        return err();
    }
    if r > r_admissible_max(d) {
        return err();
    }
    let lhs = 2.0 * inv(q) + d as f64 * inv(r);
    if (lhs - 0.5 * d as f64).abs() > 1e-12 {
        return err();
    }
    Ok(())
}

/// A fixed sampling of admissible pairs `(q, r)` with `r ≤ r_cap`: the
/// energy pair `(∞, 2)`, the pair with `1/r` halfway to `1/r_cap`, and the
/// `r = r_cap` endpoint.
pub fn admissible_pairs(d: usize, r_cap: f64) -> Result<Vec<(f64, f64)>> {
    let cap = f64::min(r_cap, r_admissible_max(d));
    if d == 0 || cap < 2.0 || (d == 2 && cap.is_infinite()) {
        return Err(Error::InvalidPair {
            d,
            q: admissible_q(d, cap),
            r: cap,
        });
    }
    let mut rs = vec![2.0];
    if cap > 2.0 {
        rs.push(2.0 / (0.5 + 1.0 / cap));
        rs.push(cap);
    }
    let pairs: Vec<(f64, f64)> = rs.into_iter().map(|r| (admissible_q(d, r), r)).collect();
    for &(q, r) in &pairs {
        check_pair(d, q, r)?;
    }
    Ok(pairs)
}
