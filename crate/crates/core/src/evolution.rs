//! Strang-split pseudospectral integrator for the one-dimensional periodic
//! problem, conservation monitoring, and backward integration of trains.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::analysis::{fit_exponential_above_floor, norm_row, strichartz_from_series, DecayFit, NormRow, StrichartzReport};
use crate::exponents::{admissible_pairs, r_str};
use crate::grid::{Field, Grid1D, GridSpec};
use crate::nonlinearity::Nonlinearity;
use crate::train::{lab_gradient, Train};
use crate::{Error, Result};

/// Spectral fraction above which a run is flagged as under-resolved.
pub const TAIL_THRESHOLD: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvolveOptions {
    /// Steps between energy and spectral-tail samples.
    pub monitor_every: usize,
    pub tail_threshold: f64,
}

impl Default for EvolveOptions {
    fn default() -> Self {
        EvolveOptions {
            monitor_every: 100,
            tail_threshold: TAIL_THRESHOLD,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConservationSample {
    pub t: f64,
    pub mass: f64,
    pub energy: f64,
    pub tail_fraction: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConservationReport {
    pub samples: Vec<ConservationSample>,
    /// Largest relative mass deviation over all steps.
    pub mass_drift: f64,
    /// Largest absolute energy deviation over the samples.
    pub energy_drift: f64,
    pub max_tail_fraction: f64,
    pub under_resolved: bool,
}

impl ConservationReport {
    fn new() -> Self {
        ConservationReport {
            samples: Vec::new(),
            mass_drift: 0.0,
            energy_drift: 0.0,
            max_tail_fraction: 0.0,
            under_resolved: false,
        }
    }

    fn merge(&mut self, other: ConservationReport) {
        self.samples.extend(other.samples);
        self.mass_drift = self.mass_drift.max(other.mass_drift);
        self.energy_drift = self.energy_drift.max(other.energy_drift);
        self.max_tail_fraction = self.max_tail_fraction.max(other.max_tail_fraction);
        self.under_resolved |= other.under_resolved;
    }
}

fn unit(theta: f64) -> Complex64 {
    let (s, c) = theta.sin_cos();
    let r = s.hypot(c);
    Complex64::new(c / r, s / r)
}

/// Strang splitting with fused linear half steps.
pub struct Integrator<'a> {
    grid: &'a Grid1D,
    nl: &'a Nonlinearity,
    pub options: EvolveOptions,
    cached: Vec<(f64, Vec<Complex64>)>,
    reference: Option<(f64, f64)>,
}

impl<'a> Integrator<'a> {
    pub fn new(grid: &'a Grid1D, nl: &'a Nonlinearity) -> Self {
        Integrator {
            grid,
            nl,
            options: EvolveOptions::default(),
            cached: Vec::new(),
            reference: None,
        }
    }

    fn linear(&mut self, u: &mut [Complex64], tau: f64) {
        let idx = match self.cached.iter().position(|(t, _)| *t == tau) {
            Some(i) => i,
            None => {
                let m = self
                    .grid
                    .wavenumbers()
                    .iter()
                    .map(|k| unit(-k * k * tau))
                    .collect();
                if self.cached.len() >= 4 {
                    self.cached.remove(0);
                }
                self.cached.push((tau, m));
                self.cached.len() - 1
            }
        };
        let m = &self.cached[idx].1;
        self.grid.forward(u);
        u.iter_mut().zip(m).for_each(|(z, w)| *z *= w);
        self.grid.inverse(u);
    }

    fn nonlinear(&self, u: &mut [Complex64], tau: f64) {
        for z in u.iter_mut() {
            *z *= unit(self.nl.g(z.norm_sqr()) * tau);
        }
    }

    /// Forgets the mass and energy reference so the next run measures drift
    /// from its own starting point.
    pub fn reset_reference(&mut self) {
        self.reference = None;
    }

    /// One Strang step of size `dt` (negative for backward).
    pub fn step(&mut self, u: &mut [Complex64], dt: f64) {
        self.linear(u, 0.5 * dt);
        self.nonlinear(u, dt);
        self.linear(u, 0.5 * dt);
    }

    fn sample(&self, t: f64, u: &[Complex64]) -> ConservationSample {
        let mut spec = u.to_vec();
        self.grid.forward(&mut spec);
        ConservationSample {
            t,
            mass: self.grid.mass(u),
            energy: self.grid.energy(u, self.nl),
            tail_fraction: self.grid.tail_fraction_spectral(&spec),
        }
    }

    /// Advances `field` to `t_target` with steps of `|dt|` and a final
    /// fractional step.
    pub fn evolve(&mut self, field: &mut Field, t_target: f64, dt: f64) -> Result<ConservationReport> {
        let span = t_target - field.t;
        if !(dt != 0.0 && dt.is_finite()) || span / dt < 0.0 {
            return Err(Error::InvalidInput(format!(
                "cannot reach t = {t_target} from t = {} with dt = {dt}",
                field.t
            )));
        }
        let mut report = ConservationReport::new();
        if span == 0.0 {
            return Ok(report);
        }
        let h = dt.abs() * span.signum();
        let n_full = (span / h + 1e-9).floor() as usize;
        let mut rem = span - n_full as f64 * h;
        if rem.abs() <= 1e-9 * h.abs() {
            rem = 0.0;
        }
        if n_full == 0 {
            return self.run(field, span, 1, t_target, report);
        }
        let t0 = field.t;
        let end_full = if rem == 0.0 { t_target } else { t0 + n_full as f64 * h };
        report = self.run(field, h, n_full, end_full, report)?;
        if rem != 0.0 {
            report = self.run(field, rem, 1, t_target, report)?;
        }
        Ok(report)
    }

    fn run(&mut self, field: &mut Field, h: f64, n: usize, t_end: f64, mut report: ConservationReport) -> Result<ConservationReport> {
        let u = &mut field.values;
        let t0 = field.t;
        let (m0, e0) = match self.reference {
            Some(r) => r,
            None => {
                let first = self.sample(t0, u);
                report.samples.push(first);
                self.reference = Some((first.mass, first.energy));
                (first.mass, first.energy)
            }
        };
        let mut seg = ConservationReport::new();
        let every = self.options.monitor_every.max(1);
        let mut open = false;
        for i in 0..n {
            // half steps are fused except around monitor samples
            let monitored = (i + 1) % every == 0 || i + 1 == n;
            self.linear(u, if open { h } else { 0.5 * h });
            self.nonlinear(u, h);
            open = !monitored;
            if monitored {
                self.linear(u, 0.5 * h);
            }
            let t = if i + 1 == n { t_end } else { t0 + (i + 1) as f64 * h };
            let m = self.grid.mass(u);
            if !m.is_finite() {
                field.t = t;
                return Err(Error::NonFinite { t });
            }
            if m0 > 0.0 {
                seg.mass_drift = seg.mass_drift.max((m - m0).abs() / m0);
            }
            if monitored {
                let s = self.sample(t, u);
                seg.energy_drift = seg.energy_drift.max((s.energy - e0).abs());
                seg.max_tail_fraction = seg.max_tail_fraction.max(s.tail_fraction);
                seg.samples.push(s);
            }
        }
        field.t = t_end;
        seg.under_resolved = seg.max_tail_fraction >= self.options.tail_threshold;
        report.merge(seg);
        Ok(report)
    }

    /// Steps through `checkpoints` in order, calling `observe` at each.
    pub fn evolve_through<F: FnMut(&Field)>(
        &mut self,
        field: &mut Field,
        checkpoints: &[f64],
        dt: f64,
        mut observe: F,
    ) -> Result<ConservationReport> {
        let mut report = ConservationReport::new();
        for &t in checkpoints {
            let seg = self.evolve(field, t, dt)?;
            report.merge(seg);
            observe(field);
        }
        Ok(report)
    }
}

/// One Strang step.
pub fn step(field: &Field, dt: f64, nl: &Nonlinearity, grid: &Grid1D) -> Field {
    let mut out = field.clone();
    Integrator::new(grid, nl).step(&mut out.values, dt);
    out.t += dt;
    out
}

/// Evolves a copy of `field` to `t_target`.
pub fn evolve(field: &Field, t_target: f64, dt: f64, nl: &Nonlinearity, grid: &Grid1D) -> Result<(Field, ConservationReport)> {
    let mut out = field.clone();
    let report = Integrator::new(grid, nl).evolve(&mut out, t_target, dt)?;
    Ok((out, report))
}

/// Norms of `η = u − W` at one sample time, with the conserved quantities of
/// `u`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EtaRow {
    pub t: f64,
    pub l2: f64,
    pub l_r2: f64,
    pub l_inf: f64,
    pub grad_l2: f64,
    pub mass: f64,
    pub energy: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EtaFits {
    pub l2: Option<DecayFit>,
    pub l_r2: Option<DecayFit>,
    pub l_inf: Option<DecayFit>,
    pub grad_l2: Option<DecayFit>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConvergenceReport {
    pub t_final: f64,
    pub dt: f64,
    pub grid: GridSpec,
    /// Velocity of the computational frame.
    pub frame: f64,
    pub initialization: String,
    pub rows: Vec<EtaRow>,
    /// Lower end of the fit window; the upper end stops above the floor.
    pub fit_from: f64,
    /// Largest `‖η‖_{L²}` sample on `[T/2, T]`.
    pub floor: f64,
    pub fits: EtaFits,
    /// Finite-horizon Strichartz proxy on `[0, T]`.
    pub strichartz: Option<StrichartzReport>,
    pub conservation: ConservationReport,
}

impl TrainConvergenceReport {
    pub fn times(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.t).collect()
    }

    pub fn column(&self, f: impl Fn(&EtaRow) -> f64) -> Vec<f64> {
        self.rows.iter().map(f).collect()
    }

    pub fn eta_at(&self, t: f64) -> Option<&EtaRow> {
        self.rows.iter().find(|r| (r.t - t).abs() < 1e-12)
    }
}

/// Multiple of the late-time floor that samples in the fit must exceed.
pub const FLOOR_FACTOR: f64 = 10.0;

/// Sets `u(T) = W(T)`, integrates back to the requested times (descending
/// order is handled internally) and returns `η(t) = u(t) − W(t)` there, in
/// the train's frame, sorted by increasing time.
pub fn backward_eta(
    train: &Train,
    t_final: f64,
    dt: f64,
    grid: &Grid1D,
    sample_times: &[f64],
) -> Result<(Vec<Field>, Vec<Field>, ConservationReport)> {
    if !(t_final > 0.0) || !(dt > 0.0) {
        return Err(Error::InvalidInput(format!("need T > 0 and dt > 0, got T = {t_final}, dt = {dt}")));
    }
    if let Some(t) = sample_times.iter().find(|t| !(**t >= 0.0 && **t <= t_final)) {
        return Err(Error::InvalidInput(format!("sample time {t} outside [0, {t_final}]")));
    }
    train.check_grid(grid, t_final)?;
    let mut times: Vec<f64> = sample_times.to_vec();
    times.sort_by(|a, b| b.total_cmp(a));
    times.dedup();
    let nl = train.nl().clone();
    let mut field = Field::new(t_final, train.sample(t_final, grid).w);
    let mut integ = Integrator::new(grid, &nl);
    let mut etas = Vec::with_capacity(times.len());
    let mut us = Vec::with_capacity(times.len());
    let report = integ.evolve_through(&mut field, &times, -dt, |u| {
        let w = train.sample(u.t, grid).w;
        let eta = u.values.iter().zip(&w).map(|(a, b)| a - b).collect();
        etas.push(Field::new(u.t, eta));
        us.push(u.clone());
    })?;
    etas.reverse();
    us.reverse();
    Ok((etas, us, report))
}

/// Backward integration from `u(T) = W(T)`, norms of `η` at `sample_times`,
/// and exponential fits from `t = 0` over the samples above the late-time
/// floor.
pub fn train_convergence_experiment(
    train: &Train,
    t_final: f64,
    dt: f64,
    grid: &Grid1D,
    sample_times: &[f64],
) -> Result<TrainConvergenceReport> {
    let (etas, us, conservation) = backward_eta(train, t_final, dt, grid, sample_times)?;
    let nl = train.nl();
    let r2 = 2.0 + nl.alpha2;
    let dx = grid.dx();
    let rows: Vec<EtaRow> = etas
        .iter()
        .zip(&us)
        .map(|(eta, u)| {
            let grad = lab_gradient(&eta.values, &grid.derivative(&eta.values), train.frame);
            let row: NormRow = norm_row(eta.t, &eta.values, &grad, dx, r2);
            EtaRow {
                t: eta.t,
                l2: row.l2,
                l_r2: row.l_r2,
                l_inf: row.l_inf,
                grad_l2: row.grad_l2,
                mass: grid.mass(&u.values),
                energy: grid.energy(&u.values, nl),
            }
        })
        .collect();
    let times: Vec<f64> = rows.iter().map(|r| r.t).collect();
    let fit_from = 0.0;
    let floor_from = 0.5 * t_final;
    let fit = |f: fn(&EtaRow) -> f64| {
        let v: Vec<f64> = rows.iter().map(f).collect();
        fit_exponential_above_floor(&times, &v, fit_from, floor_from, FLOOR_FACTOR)
    };
    let l2 = fit(|r| r.l2);
    let floor = l2.as_ref().map(|f| f.1).unwrap_or(0.0);
    let fits = EtaFits {
        l2: l2.ok().map(|f| f.0),
        l_r2: fit(|r| r.l_r2).ok().map(|f| f.0),
        l_inf: fit(|r| r.l_inf).ok().map(|f| f.0),
        grad_l2: fit(|r| r.grad_l2).ok().map(|f| f.0),
    };
    let strichartz = admissible_pairs(1, r_str(1, nl.alpha2)).ok().and_then(|pairs| {
        let series: Vec<Vec<f64>> = pairs
            .iter()
            .map(|&(_, r)| etas.iter().map(|e| crate::analysis::lp_norm(&e.values, dx, r)).collect())
            .collect();
        strichartz_from_series(&times, &pairs, &series, 0.0).ok()
    });
    Ok(TrainConvergenceReport {
        t_final,
        dt,
        grid: grid.spec(),
        frame: train.frame,
        initialization: "u(T) = W(T), i.e. eta(T) = 0".into(),
        rows,
        fit_from,
        floor,
        fits,
        strichartz,
        conservation,
    })
}

/// `n + 1` equally spaced times on `[0, T]`.
pub fn uniform_times(t_final: f64, n: usize) -> Vec<f64> {
    (0..=n).map(|i| t_final * (i as f64 / n as f64)).collect()
}
