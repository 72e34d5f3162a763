//! Finite-horizon Picard iteration of the Duhamel formula for `η = u − W`:
//! `η(t) = −i ∫_t^T e^{i(t−s)Δ} [f(W+η) − f(W) + H](s) ds`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::analysis::{fit_exponential, lp_norm};
use crate::nonlinearity::fast_pow;
use crate::exponents::{admissible_pairs, r_str};
use crate::grid::{Field, Grid1D};
use crate::train::Train;
use crate::{Error, Result};

/// Largest relative change of the first iterate tolerated when `Δt_q` is
/// halved.
pub const QUADRATURE_TOLERANCE: f64 = 1e-3;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Uniform quadrature nodes `t_m = m Δt_q` on `[0, T]`. The source term is
/// integrated on `substeps` equal sub-intervals of each `Δt_q`; `None` picks
/// the count from the train's relative velocities.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    pub t_final: f64,
    pub m: usize,
    #[serde(default)]
    pub substeps: Option<usize>,
}

impl TimeGrid {
    pub fn new(t_final: f64, m: usize) -> Result<Self> {
        if !(t_final > 0.0 && t_final.is_finite()) {
            return Err(Error::InvalidInput(format!("horizon must be positive, got {t_final}")));
        }
        if m < 8 {
            return Err(Error::InvalidInput(format!("need at least 8 quadrature intervals, got {m}")));
        }
        Ok(TimeGrid {
            t_final,
            m,
            substeps: None,
        })
    }

    /// Grid with spacing as close to `dt_q` as divides `T`.
    pub fn with_step(t_final: f64, dt_q: f64) -> Result<Self> {
        if !(dt_q > 0.0) {
            return Err(Error::InvalidInput(format!("quadrature step must be positive, got {dt_q}")));
        }
        Self::new(t_final, (t_final / dt_q).round().max(1.0) as usize)
    }

    pub fn with_substeps(mut self, substeps: usize) -> Result<Self> {
        if substeps == 0 {
            return Err(Error::InvalidInput("substeps must be positive".into()));
        }
        self.substeps = Some(substeps);
        Ok(self)
    }

    pub fn dt(&self) -> f64 {
        self.t_final / self.m as f64
    }

    pub fn t(&self, i: usize) -> f64 {
        self.t_final * i as f64 / self.m as f64
    }

    pub fn times(&self) -> Vec<f64> {
        (0..=self.m).map(|i| self.t(i)).collect()
    }

    /// Halves every interval, keeping the sub-interval count.
    pub fn refined(&self) -> TimeGrid {
        TimeGrid {
            t_final: self.t_final,
            m: 2 * self.m,
            substeps: self.substeps,
        }
    }

    /// Copy with the sub-interval count fixed for `train`.
    pub fn resolved(&self, train: &Train) -> TimeGrid {
        TimeGrid {
            substeps: Some(self.substeps.unwrap_or_else(|| source_substeps(train, self.dt()))),
            ..self.clone()
        }
    }
}

/// Largest phase advance of the source per sub-interval.
pub const SUBSTEP_PHASE: f64 = 1.0;

/// Sub-intervals per `Δt_q` so that the fastest source oscillation in the
/// interaction picture, about `(Δv)²/2`, advances at most `SUBSTEP_PHASE`.
pub fn source_substeps(train: &Train, dt_q: f64) -> usize {
    let spec = &train.spec;
    let vs = spec.waves.iter().map(|w| w.v).chain(spec.kink.map(|k| k.v0));
    let (lo, hi) = vs.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    let omega = spec.waves.iter().map(|w| w.omega).fold(0.0, f64::max);
    let dv = if hi > lo { hi - lo } else { 0.0 };
    let rate = 0.5 * dv * dv + 2.0 * omega;
    ((dt_q * rate / SUBSTEP_PHASE).ceil() as usize).max(1)
}

/// Relative size below which `‖H(t)‖_∞` is treated as zero on an interval.
const NEGLIGIBLE_SOURCE: f64 = 1e-12;

/// Norm profile of one iterate along the time grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterateNorms {
    pub l2: Vec<f64>,
    pub l_r2: Vec<f64>,
    /// `sup_t e^{ĉt}(‖η(t)‖_{L^{r₂}} + S([t,T]) proxy)`.
    pub weighted: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterateHistory {
    pub time_grid: TimeGrid,
    pub frame: f64,
    pub c_hat: f64,
    /// Fitted decay rate of `‖H(t)‖_{L²}`.
    pub h_rate: Option<f64>,
    /// Estimate of the discarded `∫_T^∞` contribution.
    pub tail_estimate: f64,
    /// Relative change of the first iterate under `Δt_q → Δt_q/2`.
    pub quadrature_change: f64,
    /// One entry per iterate, starting with `η⁰ = 0`.
    pub iterates: Vec<IterateNorms>,
    /// `‖η^{n+1} − η^n‖_w`.
    pub differences: Vec<f64>,
    /// Last iterate at the retained times.
    #[serde(skip)]
    pub final_iterate: Vec<Field>,
}

/// Norm series of one field sequence along the nodes.
struct Series {
    l2: Vec<f64>,
    l_r2: Vec<f64>,
    pairs: Vec<Vec<f64>>,
}

impl Series {
    fn new(m: usize, n_pairs: usize) -> Self {
        Series {
            l2: vec![0.0; m + 1],
            l_r2: vec![0.0; m + 1],
            pairs: vec![vec![0.0; m + 1]; n_pairs],
        }
    }

    fn record(&mut self, i: usize, u: &[Complex64], dx: f64, r2: f64, pairs: &[(f64, f64)]) {
        self.l2[i] = lp_norm(u, dx, 2.0);
        self.l_r2[i] = lp_norm(u, dx, r2);
        for (s, &(_, r)) in self.pairs.iter_mut().zip(pairs) {
            s[i] = lp_norm(u, dx, r);
        }
    }

    fn weighted(&self, times: &[f64], pairs: &[(f64, f64)], c_hat: f64) -> f64 {
        let mut w: f64 = 0.0;
        for i in 0..times.len() {
            let s = pairs
                .iter()
                .zip(&self.pairs)
                .map(|(&(q, _), v)| tail_time_norm(&times[i..], &v[i..], q))
                .fold(0.0, f64::max);
            w = w.max((c_hat * times[i]).exp() * (self.l_r2[i] + s));
        }
        w
    }
}

struct Sweep {
    /// Norms of `η^k`, `k = 1..n`.
    iterates: Vec<Series>,
    /// Norms of `η^k − η^{k−1}`, `k = 1..n`.
    differences: Vec<Series>,
    /// `η^n` at the kept node indices, increasing in time.
    kept: Vec<Field>,
    /// `η^1` at the requested node indices, increasing in time.
    first: Vec<Field>,
}

fn phases(grid: &Grid1D, tau: f64) -> Vec<Complex64> {
    grid.wavenumbers()
        .iter()
        .map(|k| Complex64::from_polar(1.0, k * k * tau))
        .collect()
}

/// `a ← P(a + ½τ right) + ½τ left` in Fourier space.
fn trapezoid_step(a: &mut [Complex64], p: &[Complex64], right: &[Complex64], left: &[Complex64], tau: f64) {
    for (((a, p), r), l) in a.iter_mut().zip(p).zip(right).zip(left) {
        *a = p * (*a + 0.5 * tau * r) + 0.5 * tau * l;
    }
}

/// One backward sweep producing `n` Picard iterates together: `η^{k+1}` at a
/// node needs `η^k` only at that node and later ones. With
/// `I_m = ∫_{t_m}^T e^{i(t_m−s)Δ} N(s) ds` and `η_m = −i I_m`, the source part
/// of `I` is shared by all iterates and follows the trapezoid recursion on the
/// sub-nodes; the `η`-dependent part uses the `Δt_q` nodes.
fn sweep(
    train: &Train,
    grid: &Grid1D,
    tg: &TimeGrid,
    n: usize,
    h_scale: f64,
    keep: &[usize],
    keep_first: &[usize],
) -> Result<Sweep> {
    let nl = train.nl();
    let dq = tg.dt();
    let subs = tg.substeps.unwrap_or_else(|| source_substeps(train, dq));
    let delta = dq / subs as f64;
    let dx = grid.dx();
    let r2 = 2.0 + nl.alpha2;
    let pairs = strichartz_pairs(train);
    let len = grid.n();
    let p_full = phases(grid, dq);
    let p_sub = phases(grid, delta);
    let source_hat = |t: f64| {
        let mut h = train.source_values(t, grid);
        if h_scale != 1.0 {
            h.iter_mut().for_each(|z| *z *= h_scale);
        }
        grid.forward(&mut h);
        h
    };
    let h_sup: Vec<f64> = (0..=tg.m)
        .map(|i| lp_norm(&train.source_values(tg.t(i), grid), dx, f64::INFINITY))
        .collect();
    let negligible = NEGLIGIBLE_SOURCE * h_sup.iter().copied().fold(0.0, f64::max);

    let mut iterates: Vec<Series> = (0..n).map(|_| Series::new(tg.m, pairs.len())).collect();
    let mut differences: Vec<Series> = (0..n).map(|_| Series::new(tg.m, pairs.len())).collect();
    let mut a_h = vec![ZERO; len];
    let mut h_right = source_hat(tg.t_final);
    let mut b = vec![vec![ZERO; len]; n];
    let mut d_right: Vec<Vec<Complex64>> = vec![Vec::new(); n];
    let mut kept = Vec::new();
    let mut first = Vec::new();
    let mut eta = vec![vec![ZERO; len]; n + 1];
    for i in (0..=tg.m).rev() {
        let t = tg.t(i);
        if i < tg.m {
            if h_sup[i] > negligible || h_sup[i + 1] > negligible {
                for l in (0..subs).rev() {
                    let left = source_hat(t + l as f64 * delta);
                    trapezoid_step(&mut a_h, &p_sub, &h_right, &left, delta);
                    h_right = left;
                }
            } else {
                let left = source_hat(t);
                trapezoid_step(&mut a_h, &p_full, &h_right, &left, dq);
                h_right = left;
            }
        }
        let w = if n > 1 { train.sample(t, grid).w } else { Vec::new() };
        for k in 0..n {
            let mut e = a_h.clone();
            if k > 0 {
                let mut d: Vec<Complex64> = w.iter().zip(&eta[k]).map(|(w, e)| nl.eval_diff(*w, *e)).collect();
                grid.forward(&mut d);
                if i < tg.m {
                    trapezoid_step(&mut b[k], &p_full, &d_right[k], &d, dq);
                }
                d_right[k] = d;
                e.iter_mut().zip(&b[k]).for_each(|(a, b)| *a += b);
            }
            grid.inverse(&mut e);
            e.iter_mut().for_each(|z| *z = Complex64::new(z.im, -z.re));
            if e.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
                return Err(Error::NonFinite { t });
            }
            eta[k + 1] = e;
        }
        for k in 1..=n {
            iterates[k - 1].record(i, &eta[k], dx, r2, &pairs);
            let d: Vec<Complex64> = eta[k].iter().zip(&eta[k - 1]).map(|(a, b)| a - b).collect();
            differences[k - 1].record(i, &d, dx, r2, &pairs);
        }
        if keep.contains(&i) {
            kept.push(Field::new(t, eta[n].clone()));
        }
        if keep_first.contains(&i) {
            first.push(Field::new(t, eta[1].clone()));
        }
    }
    kept.reverse();
    first.reverse();
    Ok(Sweep {
        iterates,
        differences,
        kept,
        first,
    })
}

fn strichartz_pairs(train: &Train) -> Vec<(f64, f64)> {
    admissible_pairs(1, r_str(1, train.nl().alpha2)).unwrap_or_else(|_| vec![(f64::INFINITY, 2.0)])
}

fn tail_time_norm(times: &[f64], values: &[f64], q: f64) -> f64 {
    if q.is_infinite() {
        return values.iter().copied().fold(0.0, f64::max);
    }
    let m = values.iter().copied().fold(0.0, f64::max);
    if m == 0.0 {
        return 0.0;
    }
    let s: f64 = times
        .windows(2)
        .zip(values.windows(2))
        .map(|(t, v)| 0.5 * (t[1] - t[0]) * (fast_pow(v[0] / m, q) + fast_pow(v[1] / m, q)))
        .sum();
    m * s.powf(1.0 / q)
}

/// Number of first-iterate snapshots compared in the quadrature check.
const CHECK_SNAPSHOTS: usize = 64;

fn check_nodes(tg: &TimeGrid) -> Vec<usize> {
    let stride = (tg.m / CHECK_SNAPSHOTS).max(1);
    (0..=tg.m).step_by(stride).collect()
}

/// Relative `L²` change between first iterates on `tg` and on `tg.refined()`.
fn refinement_change(train: &Train, tg: &TimeGrid, grid: &Grid1D, coarse: &[Field]) -> Result<f64> {
    let fine_idx: Vec<usize> = check_nodes(tg).iter().map(|i| 2 * i).collect();
    let fine = sweep(train, grid, &tg.refined(), 1, 1.0, &[], &fine_idx)?.first;
    let dx = grid.dx();
    let scale = fine.iter().map(|e| lp_norm(&e.values, dx, 2.0)).fold(0.0, f64::max);
    let worst = coarse
        .iter()
        .zip(&fine)
        .map(|(a, b)| {
            let d: Vec<Complex64> = a.values.iter().zip(&b.values).map(|(x, y)| x - y).collect();
            lp_norm(&d, dx, 2.0)
        })
        .fold(0.0, f64::max);
    Ok(if scale > 0.0 { worst / scale } else { 0.0 })
}

/// Relative change of `Φ(0)` when every quadrature interval is halved,
/// measured at up to `CHECK_SNAPSHOTS + 1` shared nodes.
pub fn quadrature_change(train: &Train, tg: &TimeGrid, grid: &Grid1D) -> Result<f64> {
    let tg = &tg.resolved(train);
    let coarse = sweep(train, grid, tg, 1, 1.0, &[], &check_nodes(tg))?.first;
    refinement_change(train, tg, grid, &coarse)
}

/// Samples of `‖H(t)‖_{L²}` used to choose the default weight rate.
const H_SCAN_SAMPLES: usize = 100;

/// `n_iter` Picard iterates from `η⁰ = 0` in the train's frame. `c_hat`
/// defaults to half the fitted decay rate of `‖H‖_{L²}`; the last iterate is
/// retained at the nodes among `keep_times`.
pub fn picard_solve(
    train: &Train,
    tg: &TimeGrid,
    grid: &Grid1D,
    n_iter: usize,
    c_hat: Option<f64>,
    keep_times: &[f64],
) -> Result<IterateHistory> {
    if n_iter < 2 {
        return Err(Error::InvalidInput(format!("need at least 2 iterations, got {n_iter}")));
    }
    train.check_grid(grid, tg.t_final)?;
    let tg = &tg.resolved(train);
    let dx = grid.dx();
    let scan: Vec<f64> = (0..=H_SCAN_SAMPLES)
        .map(|i| tg.t_final * i as f64 / H_SCAN_SAMPLES as f64)
        .collect();
    let h_l2: Vec<f64> = scan.iter().map(|&t| lp_norm(&train.source(t, grid).h, dx, 2.0)).collect();
    let h_fit = fit_exponential(&scan, &h_l2).ok().filter(|f| f.rate > 0.0);
    let h_rate = h_fit.as_ref().map(|f| f.rate);
    let c_hat = c_hat.unwrap_or_else(|| h_rate.map(|r| 0.5 * r).unwrap_or(0.0));
    let tail_estimate = h_fit
        .as_ref()
        .map(|f| f.c * (-f.rate * tg.t_final).exp() / f.rate)
        .unwrap_or(0.0);

    let keep: Vec<usize> = keep_times
        .iter()
        .filter_map(|&t| {
            let i = (t / tg.dt()).round();
            (i >= 0.0 && i as usize <= tg.m && (tg.t(i as usize) - t).abs() < 1e-9).then_some(i as usize)
        })
        .collect();
    let sw = sweep(train, grid, tg, n_iter, 1.0, &keep, &check_nodes(tg))?;
    let quadrature_change = refinement_change(train, tg, grid, &sw.first)?;
    if quadrature_change > QUADRATURE_TOLERANCE {
        return Err(Error::QuadratureUnderResolved {
            relative_change: quadrature_change,
        });
    }
    let times = tg.times();
    let pairs = strichartz_pairs(train);
    let mut iterates = vec![IterateNorms {
        l2: vec![0.0; tg.m + 1],
        l_r2: vec![0.0; tg.m + 1],
        weighted: 0.0,
    }];
    iterates.extend(sw.iterates.iter().map(|s| IterateNorms {
        l2: s.l2.clone(),
        l_r2: s.l_r2.clone(),
        weighted: s.weighted(&times, &pairs, c_hat),
    }));
    let differences = sw.differences.iter().map(|s| s.weighted(&times, &pairs, c_hat)).collect();
    Ok(IterateHistory {
        time_grid: tg.clone(),
        frame: train.frame,
        c_hat,
        h_rate,
        tail_estimate,
        quadrature_change,
        iterates,
        differences,
        final_iterate: sw.kept,
    })
}

/// `Φ(0)` at the given node indices, with `H` scaled by `h_scale`.
pub fn first_iterate(train: &Train, tg: &TimeGrid, grid: &Grid1D, h_scale: f64, nodes: &[usize]) -> Result<Vec<Field>> {
    Ok(sweep(train, grid, tg, 1, h_scale, nodes, &[])?.kept)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContractionReport {
    /// `‖η^{n+2} − η^{n+1}‖_w / ‖η^{n+1} − η^n‖_w`.
    pub ratios: Vec<f64>,
    pub max_ratio: Option<f64>,
    /// Every iterate vanished.
    pub exact_fixed_point: bool,
    pub c_hat: f64,
    pub tail_estimate: f64,
    /// `(t, ‖η^{final}(t)‖_{L²})`.
    pub limit_norm_profile: Vec<(f64, f64)>,
}

pub fn contraction_report(history: &IterateHistory) -> ContractionReport {
    let exact_fixed_point = history.differences.iter().all(|d| *d == 0.0);
    let ratios: Vec<f64> = history
        .differences
        .windows(2)
        .filter(|w| w[0] > 0.0)
        .map(|w| w[1] / w[0])
        .collect();
    let max_ratio = ratios.iter().copied().reduce(f64::max);
    let last = history.iterates.last().expect("history holds η⁰");
    ContractionReport {
        ratios,
        max_ratio,
        exact_fixed_point,
        c_hat: history.c_hat,
        tail_estimate: history.tail_estimate,
        limit_norm_profile: history.time_grid.times().into_iter().zip(last.l2.iter().copied()).collect(),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CrossCheck {
    /// `(t, ‖η^{final}(t) − η^{evolution}(t)‖_{L²})` at shared times.
    pub discrepancies: Vec<(f64, f64)>,
    pub max_discrepancy: f64,
}

/// Compares the last iterate with evolution-based `η` at shared times.
pub fn cross_check(history: &IterateHistory, evolution_eta: &[Field], grid: &Grid1D) -> CrossCheck {
    let mut discrepancies = Vec::new();
    for e in evolution_eta {
        if let Some(p) = history.final_iterate.iter().find(|p| (p.t - e.t).abs() < 1e-9) {
            let d: Vec<Complex64> = p.values.iter().zip(&e.values).map(|(a, b)| a - b).collect();
            discrepancies.push((e.t, lp_norm(&d, grid.dx(), 2.0)));
        }
    }
    let max_discrepancy = discrepancies.iter().map(|d| d.1).fold(0.0, f64::max);
    CrossCheck {
        discrepancies,
        max_discrepancy,
    }
}
