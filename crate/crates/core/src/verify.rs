//! The acceptance suite: one self-contained check per criterion, each
//! reporting a single pass/fail line with the measured quantities.

use std::f64::consts::PI;
use std::time::Instant;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::bound_state::{bifurcation_scan, solve_bound_state, BoundStateOptions};
use crate::duhamel::{contraction_report, cross_check, picard_solve, TimeGrid};
use crate::evolution::{
    backward_eta, evolve, train_convergence_experiment, uniform_times, ConservationReport, Integrator,
    TrainConvergenceReport,
};
use crate::exponents::choose_r0;
use crate::kink::{find_kink_params, solve_kink_profile};
use crate::nonlinearity::{alpha_max, check_assumption_f0, default_samples};
use crate::train::{
    compute_diagnostics, preset, source_decay_scan, DiagnosticsVariant, KinkSpec, PresetKind, SolitonParam, Train,
    TrainSpec,
};
use crate::{Field, Grid1D, Nonlinearity, Result};

/// Mass drift tolerated on every run.
pub const MASS_DRIFT_TOLERANCE: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CriterionOutcome {
    pub id: usize,
    pub name: String,
    pub passed: bool,
    pub summary: String,
    pub seconds: f64,
}

impl CriterionOutcome {
    pub fn line(&self) -> String {
        format!(
            "criterion {:>2} {} {} ({:.1}s): {}",
            self.id,
            if self.passed { "PASS" } else { "FAIL" },
            self.name,
            self.seconds,
            self.summary
        )
    }
}

pub const CRITERIA: [(usize, &str); 12] = [
    (1, "soliton exactness"),
    (2, "plane-wave exactness"),
    (3, "conservation"),
    (4, "bound-state closed form"),
    (5, "bifurcation scaling"),
    (6, "kink parameters"),
    (7, "source decay"),
    (8, "train convergence"),
    (9, "kink-soliton train"),
    (10, "Duhamel contraction"),
    (11, "exponent arithmetic"),
    (12, "assumption checkers"),
];

fn run(id: usize, check: impl FnOnce() -> Result<(bool, String)>) -> CriterionOutcome {
    let name = CRITERIA[id - 1].1.to_string();
    let start = Instant::now();
    let (passed, summary) = match check() {
        Ok(r) => r,
        Err(e) => (false, format!("error: {e}")),
    };
    CriterionOutcome {
        id,
        name,
        passed,
        summary,
        seconds: start.elapsed().as_secs_f64(),
    }
}

pub fn run_criterion(id: usize) -> Option<CriterionOutcome> {
    let f: fn() -> CriterionOutcome = match id {
        1 => criterion_1,
        2 => criterion_2,
        3 => criterion_3,
        4 => criterion_4,
        5 => criterion_5,
        6 => criterion_6,
        7 => criterion_7,
        8 => criterion_8,
        9 => criterion_9,
        10 => criterion_10,
        11 => criterion_11,
        12 => criterion_12,
        _ => return None,
    };
    Some(f())
}

pub fn run_all() -> Vec<CriterionOutcome> {
    (1..=12).filter_map(run_criterion).collect()
}

fn sup_diff(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

fn single_soliton() -> Result<(Train, Grid1D)> {
    let spec = TrainSpec {
        nl: Nonlinearity::pure_power(2.0),
        waves: vec![SolitonParam {
            omega: 1.0,
            v: 4.0,
            gamma: 0.0,
            x0: 0.0,
        }],
        kink: None,
        r0: None,
        law: None,
    };
    Ok((Train::build(spec)?.with_frame(0.0)?, Grid1D::new(200.0, 1 << 13)?))
}

/// PurePower(2), ω = 1, v = 4 on L = 200, N = 2¹³ with dt = 10⁻³ to T = 2:
/// `‖u(T) − R(T)‖_∞ < 10⁻⁶`.
pub fn criterion_1() -> CriterionOutcome {
    run(1, || {
        let (train, grid) = single_soliton()?;
        let u0 = Field::new(0.0, train.sample(0.0, &grid).w);
        let (u, rep) = evolve(&u0, 2.0, 1e-3, train.nl(), &grid)?;
        let err = sup_diff(&u.values, &train.sample(2.0, &grid).w);
        Ok((
            err < 1e-6 && rep.mass_drift < MASS_DRIFT_TOLERANCE,
            format!("sup error {err:.3e} (< 1e-6), mass drift {:.2e}", rep.mass_drift),
        ))
    })
}

/// DoublePower(1,2), amplitude 1, wavenumber `2π·5/L`: node-wise error below
/// 10⁻⁸ at T = 1.
pub fn criterion_2() -> CriterionOutcome {
    run(2, || {
        let nl = Nonlinearity::double_power(1.0, 2.0);
        let l = 40.0;
        let grid = Grid1D::new(l, 256)?;
        let k = 2.0 * PI * 5.0 / l;
        // g(1) = 0, so the phase advances by −k² t
        let u0 = Field::from_fn(&grid, 0.0, |x| Complex64::from_polar(1.0, k * x));
        let (u, rep) = evolve(&u0, 1.0, 1e-3, &nl, &grid)?;
        let exact: Vec<Complex64> = grid
            .xs()
            .iter()
            .map(|x| Complex64::from_polar(1.0, k * x - k * k))
            .collect();
        let err = sup_diff(&u.values, &exact);
        Ok((
            err < 1e-8 && rep.mass_drift < MASS_DRIFT_TOLERANCE,
            format!("node-wise error {err:.3e} (< 1e-8), mass drift {:.2e}", rep.mass_drift),
        ))
    })
}

/// Two cubic solitons colliding head-on.
fn collision() -> Result<(Field, Nonlinearity, Grid1D)> {
    let spec = TrainSpec {
        nl: Nonlinearity::pure_power(2.0),
        waves: vec![
            SolitonParam {
                omega: 1.0,
                v: 2.0,
                gamma: 0.0,
                x0: -6.0,
            },
            SolitonParam {
                omega: 0.5,
                v: -2.0,
                gamma: 0.0,
                x0: 6.0,
            },
        ],
        kink: None,
        r0: None,
        law: None,
    };
    let train = Train::build(spec)?.with_frame(0.0)?;
    let grid = Grid1D::new(80.0, 1024)?;
    let u0 = Field::new(0.0, train.sample(0.0, &grid).w);
    Ok((u0, train.nl().clone(), grid))
}

/// Energy drifts below this are roundoff and carry no convergence ratio.
pub const ENERGY_NOISE_FLOOR: f64 = 1e-10;

/// Evolution with conservation samples every `every` steps.
fn monitored(u0: &Field, t: f64, dt: f64, every: usize, nl: &Nonlinearity, grid: &Grid1D) -> Result<ConservationReport> {
    let mut integ = Integrator::new(grid, nl);
    integ.options.monitor_every = every;
    let mut u = u0.clone();
    integ.evolve(&mut u, t, dt)
}

/// Relative mass drift below 10⁻¹² on the soliton and collision runs, and an
/// energy drift that shrinks by a factor in [3, 5] when dt is halved, with
/// energy sampled at the same times in both runs. Runs whose drift is at
/// roundoff are reported but not ratioed.
pub fn criterion_3() -> CriterionOutcome {
    run(3, || {
        let mut mass: f64 = 0.0;
        let mut ratios = Vec::new();
        let mut parts = Vec::new();
        let (train, grid) = single_soliton()?;
        let s0 = Field::new(0.0, train.sample(0.0, &grid).w);
        let (c0, nl, cgrid) = collision()?;
        let runs = [("soliton", &s0, 2.0, 1e-3, train.nl(), &grid), ("collision", &c0, 4.0, 0.01, &nl, &cgrid)];
        for (name, u0, t, dt, nl, grid) in runs {
            let coarse = monitored(u0, t, dt, 50, nl, grid)?;
            let fine = monitored(u0, t, 0.5 * dt, 100, nl, grid)?;
            mass = mass.max(coarse.mass_drift).max(fine.mass_drift);
            if fine.energy_drift < ENERGY_NOISE_FLOOR {
                parts.push(format!(
                    "{name}: energy drift {:.3e} -> {:.3e}, at roundoff",
                    coarse.energy_drift, fine.energy_drift
                ));
                continue;
            }
            let ratio = coarse.energy_drift / fine.energy_drift;
            ratios.push(ratio);
            parts.push(format!(
                "{name}: energy drift {:.3e} -> {:.3e}, ratio {ratio:.3}",
                coarse.energy_drift, fine.energy_drift
            ));
        }
        Ok((
            mass < MASS_DRIFT_TOLERANCE && !ratios.is_empty() && ratios.iter().all(|r| (3.0..=5.0).contains(r)),
            format!("max mass drift {mass:.2e} (< 1e-12); {} (in [3, 5])", parts.join("; ")),
        ))
    })
}

/// φ(0) of the pure-power ground state at ω = 1 against
/// `((α+2)/2)^{1/α}` for α = 1, 2, 3, with node residual below 10⁻⁸.
pub fn criterion_4() -> CriterionOutcome {
    run(4, || {
        let mut ok = true;
        let mut parts = Vec::new();
        for alpha in [1.0, 2.0, 3.0] {
            let bs = solve_bound_state(&Nonlinearity::pure_power(alpha), 1.0, 1, &BoundStateOptions::default())?;
            let exact = ((alpha + 2.0) / 2.0).powf(1.0 / alpha);
            let err = (bs.phi0() - exact).abs();
            let res = bs.node_residual();
            ok &= err < 1e-6 && res < 1e-8;
            parts.push(format!("alpha {alpha}: |phi(0) - exact| {err:.2e}, residual {res:.2e}"));
        }
        Ok((ok, parts.join("; ")))
    })
}

/// DoublePower(1,2), ω = 0.1·2⁻ᵏ, k = 0..4: slope of log sup|ξ_ω| against
/// log ω within 30% of 1.
pub fn criterion_5() -> CriterionOutcome {
    run(5, || {
        let omegas: Vec<f64> = (0..5).map(|k| 0.1 * 2f64.powi(-k)).collect();
        let rep = bifurcation_scan(&Nonlinearity::double_power(1.0, 2.0), &omegas, 1)?;
        Ok((
            (rep.m_fitted - 1.0).abs() <= 0.3,
            format!("fitted slope {:.4} (within 0.3 of 1), R^2 {:.5}", rep.m_fitted, rep.r_squared),
        ))
    })
}

/// DoublePower(1,2) kink: b = 2/3 and ω₀ = 2/9 within 10⁻¹⁰, first-integral
/// residual below 10⁻⁹, monotone profile steepest at the centre.
pub fn criterion_6() -> CriterionOutcome {
    run(6, || {
        let nl = Nonlinearity::double_power(1.0, 2.0);
        let p = find_kink_params(&nl)?;
        let k = solve_kink_profile(&p, &nl, None, None)?;
        let (eb, ew) = ((p.b - 2.0 / 3.0).abs(), (p.omega0 - 2.0 / 9.0).abs());
        let res = k.first_integral_residual();
        let mid = (k.phi.len() - 1) / 2;
        let steepest = k.steepest_node().abs_diff(mid) <= 1;
        let mono = k.is_monotone();
        Ok((
            eb < 1e-10 && ew < 1e-10 && res < 1e-9 && mono && steepest,
            format!(
                "|b - 2/3| {eb:.1e}, |omega0 - 2/9| {ew:.1e}, first-integral residual {res:.2e}, monotone {mono}, steepest at centre {steepest}"
            ),
        ))
    })
}

fn preset_a(j: usize, v_bar: f64) -> Result<Train> {
    Train::build(preset(PresetKind::A, j, v_bar, 0.0, Nonlinearity::pure_power(2.0))?)
}

/// Preset A, J = 3: `‖H(t)‖_∞` is exponential on [0.5, 4] with R² > 0.95 at
/// v̄ = 20, and the rate at v̄ = 40 is 1.6 to 2.4 times larger.
pub fn criterion_7() -> CriterionOutcome {
    run(7, || {
        let grid = Grid1D::new(2560.0, 1 << 17)?;
        let times = uniform_times(4.0, 160);
        let mut fits = Vec::new();
        for v_bar in [20.0, 40.0] {
            let rep = source_decay_scan(&preset_a(3, v_bar)?, &times, &grid, 0.9, (0.5, 4.0))?;
            let fit = rep
                .fit_h_inf
                .ok_or_else(|| crate::Error::DegenerateFit { usable: 0 })?;
            fits.push(fit);
        }
        let ratio = fits[1].rate / fits[0].rate;
        Ok((
            fits[0].r_squared > 0.95 && (1.6..=2.4).contains(&ratio),
            format!(
                "rates {:.3} (R^2 {:.5}) and {:.3} (R^2 {:.5}), ratio {ratio:.3} (in [1.6, 2.4])",
                fits[0].rate, fits[0].r_squared, fits[1].rate, fits[1].r_squared
            ),
        ))
    })
}

fn l2_fit(rep: &TrainConvergenceReport) -> Result<(f64, f64)> {
    rep.fits
        .l2
        .as_ref()
        .map(|f| (f.rate, f.r_squared))
        .ok_or(crate::Error::DegenerateFit { usable: 0 })
}

/// Preset A, J = 3, T = 4, backward from `u(T) = W(T)`: positive `‖η‖_{L²}`
/// rate with R² > 0.9 at v̄ = 20; v̄ = 40 has a larger rate and smaller
/// `‖η(0)‖_{L²}`.
pub fn criterion_8() -> CriterionOutcome {
    run(8, || {
        let grid = Grid1D::new(2560.0, 1 << 17)?;
        let times = uniform_times(4.0, 160);
        let mut reps = Vec::new();
        for v_bar in [20.0, 40.0] {
            reps.push(train_convergence_experiment(&preset_a(3, v_bar)?, 4.0, 2e-3, &grid, &times)?);
        }
        let (r20, q20) = l2_fit(&reps[0])?;
        let (r40, q40) = l2_fit(&reps[1])?;
        let (e20, e40) = (reps[0].rows[0].l2, reps[1].rows[0].l2);
        let mass = reps[0].conservation.mass_drift.max(reps[1].conservation.mass_drift);
        Ok((
            r20 > 0.0 && q20 > 0.9 && r40 > r20 && e40 < e20 && mass < MASS_DRIFT_TOLERANCE,
            format!(
                "rates {r20:.3} (R^2 {q20:.5}) -> {r40:.3} (R^2 {q40:.5}), |eta(0)| {e20:.3e} -> {e40:.3e}, mass drift {mass:.2e}"
            ),
        ))
    })
}

/// DoublePower(1,2) with a kink at v₀ = 0 and solitons ω = (1/16, 1/64),
/// v = (40, 80): positive `‖η‖_{L²}` rate with R² > 0.85.
pub fn criterion_9() -> CriterionOutcome {
    run(9, || {
        let spec = TrainSpec {
            nl: Nonlinearity::double_power(1.0, 2.0),
            waves: vec![
                SolitonParam {
                    omega: 1.0 / 16.0,
                    v: 40.0,
                    gamma: 0.0,
                    x0: 0.0,
                },
                SolitonParam {
                    omega: 1.0 / 64.0,
                    v: 80.0,
                    gamma: 0.0,
                    x0: 0.0,
                },
            ],
            kink: Some(KinkSpec { v0: 0.0, gamma0: 0.0 }),
            r0: None,
            law: None,
        };
        let train = Train::build(spec)?;
        let grid = Grid1D::new(1536.0, 1 << 15)?;
        let rep = train_convergence_experiment(&train, 4.0, 2e-3, &grid, &uniform_times(4.0, 160))?;
        let (rate, r2) = l2_fit(&rep)?;
        let mass = rep.conservation.mass_drift;
        Ok((
            rate > 0.0 && r2 > 0.85 && mass < MASS_DRIFT_TOLERANCE,
            format!("rate {rate:.3} (R^2 {r2:.5}), mass drift {mass:.2e}"),
        ))
    })
}

/// Preset A, J = 2, T = 3, four Picard iterates: difference ratios below 1/2
/// on 2→3 and 3→4 at v̄ = 20, smaller at v̄ = 40, and agreement with the
/// evolution to 10⁻⁴ in L² at T/2.
pub fn criterion_10() -> CriterionOutcome {
    run(10, || {
        let t_final = 3.0;
        let tg = TimeGrid::new(t_final, 150)?;
        let mid = 0.5 * t_final;
        let runs = [(20.0, Grid1D::new(512.0, 1 << 14)?), (40.0, Grid1D::new(768.0, 1 << 15)?)];
        let mut worst = Vec::new();
        let mut cross = 0.0;
        let mut mass = 0.0;
        let mut quad = Vec::new();
        for (i, (v_bar, grid)) in runs.iter().enumerate() {
            let train = preset_a(2, *v_bar)?;
            let hist = picard_solve(&train, &tg, grid, 4, None, &[mid])?;
            let rep = contraction_report(&hist);
            quad.push(hist.quadrature_change);
            worst.push(rep.ratios.iter().skip(1).copied().fold(0.0, f64::max));
            if i == 0 {
                let (etas, _, cons) = backward_eta(&train, t_final, 2e-3, grid, &[mid])?;
                cross = cross_check(&hist, &etas, grid).max_discrepancy;
                mass = cons.mass_drift;
            }
        }
        Ok((
            worst[0] < 0.5 && worst[1] < worst[0] && cross < 1e-4 && mass < MASS_DRIFT_TOLERANCE,
            format!(
                "max ratio (2->3, 3->4) {:.4} at v=20, {:.4} at v=40; cross-check {cross:.2e} (< 1e-4); quadrature change {:.1e}/{:.1e}; mass drift {mass:.2e}",
                worst[0], worst[1], quad[0], quad[1]
            ),
        ))
    })
}

/// Brute-force check of the three `r₀` inequalities (and `r₀ ≤ 2` when
/// `α₁ < 4/d`) for `choose_r0`; where it declines, a scan of 10⁴ values
/// confirms that no admissible `r₀` exists.
fn r0_verified(d: usize, a1: f64, a2: f64) -> bool {
    let r2 = 2.0 + a2;
    let lower = f64::max(1.0, d as f64 * a1 / 2.0);
    let holds = |r0: f64| {
        lower < r0
            && r0 < 2.0 + a1
            && 0.5 <= a1 / r0 + 1.0 / r2
            && 1.0 < (a1 + 1.0) / r0 + 1.0 / r2
            && (a1 >= 4.0 / d as f64 || r0 <= 2.0)
    };
    match choose_r0(d, a1, a2) {
        Ok(r0) => holds(r0),
        Err(_) => !(1..10_000).any(|i| holds(lower + (2.0 + a1 - lower) * i as f64 / 10_000.0)),
    }
}

/// 200 triples (d, α₁, α₂) with d = 1..4 and `α₂/(2+α₂) ≤ α₁ ≤ α₂`.
pub fn r0_sweep() -> Vec<(usize, f64, f64)> {
    let mut out = Vec::with_capacity(200);
    for d in 1..=4usize {
        let cap = alpha_max(d).min(8.0);
        for i in 0..10 {
            let a2 = cap * (i as f64 + 0.5) / 10.0;
            let lo = a2 / (2.0 + a2);
            for k in 0..5 {
                out.push((d, a2.min(lo + (a2 - lo) * (k as f64 + 0.5) / 5.0), a2));
            }
        }
    }
    out
}

/// `choose_r0` on the 200-point sweep, and `v_*` of preset A, J = 6 equal to
/// |v̄| against a brute-force pair scan.
pub fn criterion_11() -> CriterionOutcome {
    run(11, || {
        let sweep = r0_sweep();
        let failures = sweep.iter().filter(|&&(d, a1, a2)| !r0_verified(d, a1, a2)).count();
        let v_bar = -10.0;
        let spec = preset(PresetKind::A, 6, v_bar, 0.0, Nonlinearity::pure_power(2.0))?;
        let v_star = compute_diagnostics(&spec, DiagnosticsVariant::TrainOnly).v_star;
        let mut brute = f64::INFINITY;
        for (j, a) in spec.waves.iter().enumerate() {
            for (k, b) in spec.waves.iter().enumerate() {
                if j != k {
                    brute = brute.min(a.omega.sqrt() * (a.v - b.v).abs());
                }
            }
        }
        Ok((
            failures == 0 && sweep.len() == 200 && v_star == brute && v_star == v_bar.abs(),
            format!(
                "{failures} of {} r0 triples failed; v_star {v_star} (brute force {brute}, |v_bar| {})",
                sweep.len(),
                v_bar.abs()
            ),
        ))
    })
}

/// F0 passes for DoublePower(1,2) and the sine example as declared, and
/// fails for DoublePower(1,2) declared as (2, 2).
pub fn criterion_12() -> CriterionOutcome {
    run(12, || {
        let samples = default_samples();
        let dp = Nonlinearity::double_power(1.0, 2.0);
        let a = check_assumption_f0(&dp, &samples, Some(2.0));
        let b = check_assumption_f0(&Nonlinearity::sine_example(), &samples, None);
        let c = check_assumption_f0(&dp.with_exponents(2.0, 2.0), &samples, None);
        Ok((
            a.pass && b.pass && !c.pass,
            format!(
                "double power pass {} (C0 {:.3}), sine pass {} (C0 {:.3}), misdeclared pass {} (bounded {})",
                a.pass, a.worst_ratio, b.pass, b.worst_ratio, c.pass, c.bounded
            ),
        ))
    })
}
