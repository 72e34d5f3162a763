//! Grid norms, space-time Strichartz norms and exponential-rate fits.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Values below this are treated as floor-contaminated by the fits.
pub const FIT_FLOOR: f64 = 1e-13;

/// `(dx Σ|u|^p)^{1/p}`, or `max|u|` for `p = ∞`.
pub fn lp_norm(values: &[Complex64], dx: f64, p: f64) -> f64 {
    assert!(p >= 1.0, "p must be at least 1");
    let m = values.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if p.is_infinite() || m == 0.0 {
        return m;
    }
    let s: f64 = values.iter().map(|z| crate::nonlinearity::fast_pow(z.norm() / m, p)).sum();
    m * (dx * s).powf(1.0 / p)
}

/// Hölder conjugate `p′ = p/(p−1)`.
pub fn conjugate(p: f64) -> f64 {
    if p.is_infinite() {
        1.0
    } else if p == 1.0 {
        f64::INFINITY
    } else {
        p / (p - 1.0)
    }
}

/// Mixed norm `(∫ a(t)^q dt)^{1/q}` over the samples with `t ≥ t_start`,
/// trapezoid rule in time, max-in-time for `q = ∞`.
pub fn time_norm(times: &[f64], values: &[f64], t_start: f64, q: f64) -> Result<f64> {
    let pts: Vec<(f64, f64)> = times
        .iter()
        .zip(values)
        .filter(|(t, _)| **t >= t_start)
        .map(|(t, v)| (*t, *v))
        .collect();
    if pts.len() < 4 {
        return Err(Error::InsufficientSamples {
            needed: 4,
            got: pts.len(),
        });
    }
    if q.is_infinite() {
        return Ok(pts.iter().map(|p| p.1).fold(0.0, f64::max));
    }
    let m = pts.iter().map(|p| p.1).fold(0.0, f64::max);
    if m == 0.0 {
        return Ok(0.0);
    }
    let mut s = 0.0;
    for w in pts.windows(2) {
        let (a, b) = ((w[0].1 / m).powf(q), (w[1].1 / m).powf(q));
        s += 0.5 * (w[1].0 - w[0].0).abs() * (a + b);
    }
    Ok(m * s.powf(1.0 / q))
}

/// One admissible pair and the value of its mixed norm.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairNorm {
    pub q: f64,
    pub r: f64,
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StrichartzReport {
    pub t_start: f64,
    pub value: f64,
    pub pairs: Vec<PairNorm>,
}

/// Finite-horizon proxy for the Strichartz norm on `[t_start, T]`: the max
/// over the sampled pairs of the mixed `L^q_t L^r_x` norms.
pub fn strichartz_norm(
    snapshots: &[(f64, &[Complex64])],
    dx: f64,
    t_start: f64,
    pairs: &[(f64, f64)],
) -> Result<StrichartzReport> {
    let times: Vec<f64> = snapshots.iter().map(|s| s.0).collect();
    let series: Vec<Vec<f64>> = pairs
        .iter()
        .map(|&(_, r)| snapshots.iter().map(|s| lp_norm(s.1, dx, r)).collect())
        .collect();
    strichartz_from_series(&times, pairs, &series, t_start)
}

/// Same as [`strichartz_norm`] from precomputed `‖u(t)‖_{L^r}` series, one
/// per pair.
pub fn strichartz_from_series(
    times: &[f64],
    pairs: &[(f64, f64)],
    series: &[Vec<f64>],
    t_start: f64,
) -> Result<StrichartzReport> {
    let mut out = Vec::with_capacity(pairs.len());
    for (&(q, r), s) in pairs.iter().zip(series) {
        out.push(PairNorm {
            q,
            r,
            value: time_norm(times, s, t_start, q)?,
        });
    }
    let value = out.iter().map(|p| p.value).fold(0.0, f64::max);
    Ok(StrichartzReport {
        t_start,
        value,
        pairs: out,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

/// Ordinary least squares `y ≈ slope·x + intercept`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> Result<LineFit> {
    let n = x.len().min(y.len());
    if n < 2 {
        return Err(Error::DegenerateFit { usable: n });
    }
    let nf = n as f64;
    let mx = x[..n].iter().sum::<f64>() / nf;
    let my = y[..n].iter().sum::<f64>() / nf;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for i in 0..n {
        let (dx, dy) = (x[i] - mx, y[i] - my);
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    if sxx == 0.0 {
        return Err(Error::DegenerateFit { usable: n });
    }
    let slope = sxy / sxx;
    let r_squared = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    Ok(LineFit {
        slope,
        intercept: my - slope * mx,
        r_squared,
    })
}

/// Least-squares fit of `values ≈ C e^{−rate·t}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    #[serde(rename = "C")]
    pub c: f64,
    pub rate: f64,
    pub r_squared: f64,
}

/// Fits `log v = log C − rate·t` over the samples with `v ≥ 1e-13`.
pub fn fit_exponential(times: &[f64], values: &[f64]) -> Result<DecayFit> {
    let (t, v): (Vec<f64>, Vec<f64>) = times
        .iter()
        .zip(values)
        .filter(|(_, v)| v.is_finite() && **v >= FIT_FLOOR)
        .map(|(t, v)| (*t, *v))
        .unzip();
    if t.len() < 4 {
        return Err(Error::DegenerateFit { usable: t.len() });
    }
    let logs: Vec<f64> = v.iter().map(|x| x.ln()).collect();
    let line = linear_fit(&t, &logs)?;
    Ok(DecayFit {
        times: t,
        values: v,
        c: line.intercept.exp(),
        rate: -line.slope,
        r_squared: line.r_squared,
    })
}

/// [`fit_exponential`] restricted to `t ∈ [t_lo, t_hi]`.
pub fn fit_exponential_window(
    times: &[f64],
    values: &[f64],
    t_lo: f64,
    t_hi: f64,
) -> Result<DecayFit> {
    let (t, v): (Vec<f64>, Vec<f64>) = times
        .iter()
        .zip(values)
        .filter(|(t, _)| **t >= t_lo && **t <= t_hi)
        .map(|(t, v)| (*t, *v))
        .unzip();
    fit_exponential(&t, &v)
}

/// Fit window that stops where a decaying series reaches its noise floor.
///
/// The floor is the largest sample with `t ≥ t_floor`. Starting at the
/// first sample with `t ≥ t_lo`, the window extends over consecutive samples
/// that stay above `factor` times the floor.
pub fn fit_exponential_above_floor(
    times: &[f64],
    values: &[f64],
    t_lo: f64,
    t_floor: f64,
    factor: f64,
) -> Result<(DecayFit, f64)> {
    let floor = times
        .iter()
        .zip(values)
        .filter(|(t, _)| **t >= t_floor)
        .map(|(_, v)| *v)
        .fold(0.0, f64::max);
    let mut order: Vec<usize> = (0..times.len()).filter(|&i| times[i] >= t_lo).collect();
    order.sort_by(|&a, &b| times[a].total_cmp(&times[b]));
    let mut t = Vec::new();
    let mut v = Vec::new();
    for i in order {
        if values[i] <= factor * floor {
            break;
        }
        t.push(times[i]);
        v.push(values[i]);
    }
    Ok((fit_exponential(&t, &v)?, floor))
}

/// Norms of one snapshot of a perturbation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormRow {
    pub t: f64,
    pub l2: f64,
    pub l_r2: f64,
    pub l_r2_conj: f64,
    pub l_inf: f64,
    pub grad_l2: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormReport {
    pub rows: Vec<NormRow>,
    /// Strichartz proxies on `[t, T]` for the sampled start times.
    pub strichartz: Vec<StrichartzReport>,
}

impl NormReport {
    pub fn times(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.t).collect()
    }

    pub fn column(&self, f: impl Fn(&NormRow) -> f64) -> Vec<f64> {
        self.rows.iter().map(f).collect()
    }
}

/// Norm row for `u` with `∇u` supplied.
pub fn norm_row(t: f64, u: &[Complex64], grad: &[Complex64], dx: f64, r2: f64) -> NormRow {
    NormRow {
        t,
        l2: lp_norm(u, dx, 2.0),
        l_r2: lp_norm(u, dx, r2),
        l_r2_conj: lp_norm(u, dx, conjugate(r2)),
        l_inf: lp_norm(u, dx, f64::INFINITY),
        grad_l2: lp_norm(grad, dx, 2.0),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(x: f64) -> Complex64 {
        Complex64::new(x, 0.0)
    }

    #[test]
    fn constant_field_norms() {
        let n = 64;
        let l = 8.0;
        let u = vec![c(-1.5); n];
        for &p in &[1.0, 2.0, 3.0, 7.5] {
            let v = lp_norm(&u, l / n as f64, p);
            assert!((v - 1.5 * l.powf(1.0 / p)).abs() < 1e-13);
        }
        assert_eq!(lp_norm(&u, 0.1, f64::INFINITY), 1.5);
    }

    #[test]
    fn sech_l2_norm() {
        // ‖√2 sech‖₂² = 4
        let n = 4096;
        let l = 80.0;
        let dx = l / n as f64;
        let u: Vec<_> = (0..n)
            .map(|j| c(2f64.sqrt() / (-0.5 * l + j as f64 * dx).cosh()))
            .collect();
        assert!((lp_norm(&u, dx, 2.0) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn exponential_fit_examples() {
        let t: Vec<f64> = (0..40).map(|i| i as f64 * 0.1).collect();
        let v: Vec<f64> = t.iter().map(|t| (-3.0 * t).exp()).collect();
        let f = fit_exponential(&t, &v).unwrap();
        assert!((f.rate - 3.0).abs() < 1e-12 && (f.r_squared - 1.0).abs() < 1e-12);

        let v: Vec<f64> = t
            .iter()
            .map(|t| (-3.0 * t).exp() * (1.0 + 0.01 * t.sin()))
            .collect();
        let f = fit_exponential(&t, &v).unwrap();
        assert!((f.rate - 3.0).abs() < 0.02);

        let v = vec![1e-15; 40];
        assert!(matches!(fit_exponential(&t, &v), Err(Error::DegenerateFit { usable: 0 })));
    }

    #[test]
    fn floor_aware_window_stops_at_floor() {
        let t: Vec<f64> = (0..100).map(|i| i as f64 * 0.05).collect();
        let v: Vec<f64> = t.iter().map(|t| (-4.0 * t).exp() + 1e-6).collect();
        let (f, floor) = fit_exponential_above_floor(&t, &v, 0.0, 3.75, 10.0).unwrap();
        // the floor is the largest sample from t = 3.75 on
        assert!((floor - (1e-6 + (-15f64).exp())).abs() < 1e-15);
        assert!(f.times.last().unwrap() < &3.0);
        assert!((f.rate - 4.0).abs() < 0.1);
    }

    #[test]
    fn strichartz_examples() {
        let u = vec![c(1.0), c(2.0), c(0.5), c(0.0)];
        let zero = vec![c(0.0); 4];
        let snaps: Vec<(f64, &[Complex64])> = (0..5).map(|i| (i as f64, &u[..])).collect();
        let rep = strichartz_norm(&snaps, 0.5, 0.0, &[(f64::INFINITY, 2.0)]).unwrap();
        assert!((rep.value - lp_norm(&u, 0.5, 2.0)).abs() < 1e-15);

        let snaps: Vec<(f64, &[Complex64])> = (0..5).map(|i| (i as f64, &zero[..])).collect();
        let rep = strichartz_norm(&snaps, 0.5, 0.0, &[(f64::INFINITY, 2.0), (4.0, f64::INFINITY)])
            .unwrap();
        assert_eq!(rep.value, 0.0);

        let short: Vec<(f64, &[Complex64])> = (0..3).map(|i| (i as f64, &u[..])).collect();
        assert!(matches!(
            strichartz_norm(&short, 0.5, 0.0, &[(8.0, 4.0)]),
            Err(Error::InsufficientSamples { needed: 4, got: 3 })
        ));
    }

    fn field() -> impl Strategy<Value = Vec<Complex64>> {
        proptest::collection::vec((-2.0f64..2.0, -2.0f64..2.0), 8..64)
            .prop_map(|v| v.into_iter().map(|(a, b)| Complex64::new(a, b)).collect())
    }

    proptest! {
        #[test]
        fn homogeneous(u in field(), s in -5.0f64..5.0, p in 1.0f64..9.0) {
            let su: Vec<_> = u.iter().map(|z| z * s).collect();
            let a = lp_norm(&su, 0.1, p);
            let b = s.abs() * lp_norm(&u, 0.1, p);
            prop_assert!((a - b).abs() <= 1e-13 * (1.0 + b));
        }

        #[test]
        fn monotone_in_p_on_unit_measure(u in field(), p in 1.0f64..6.0, dp in 0.0f64..4.0) {
            let dx = 1.0 / u.len() as f64;
            prop_assert!(lp_norm(&u, dx, p) <= lp_norm(&u, dx, p + dp) * (1.0 + 1e-12));
            prop_assert!(lp_norm(&u, dx, p + dp) <= lp_norm(&u, dx, f64::INFINITY) * (1.0 + 1e-12));
        }

        #[test]
        fn holder_interpolation(u in field(), r2 in 2.5f64..8.0, x in 0.0f64..1.0) {
            let r = 2.0 + x * (r2 - 2.0);
            // 1/r = θ/2 + (1−θ)/r₂
            let theta = (1.0 / r - 1.0 / r2) / (0.5 - 1.0 / r2);
            let lhs = lp_norm(&u, 0.05, r);
            let rhs = lp_norm(&u, 0.05, 2.0).powf(theta) * lp_norm(&u, 0.05, r2).powf(1.0 - theta);
            prop_assert!(lhs <= rhs * (1.0 + 1e-12));
        }

        #[test]
        fn fit_scale_invariant(rate in 0.1f64..5.0, s in 0.001f64..1000.0) {
            let t: Vec<f64> = (0..20).map(|i| i as f64 * 0.1).collect();
            let v: Vec<f64> = t.iter().map(|t| (-rate * t).exp() * (1.0 + 0.1 * (3.0 * t).sin())).collect();
            let sv: Vec<f64> = v.iter().map(|x| x * s).collect();
            let a = fit_exponential(&t, &v).unwrap();
            let b = fit_exponential(&t, &sv).unwrap();
            prop_assert!((a.rate - b.rate).abs() < 1e-10);
            prop_assert!((b.c / a.c - s).abs() < 1e-9 * s);
        }
    }
}
