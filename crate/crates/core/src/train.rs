//! Truncated soliton and kink-soliton trains: parameters, admissibility
//! diagnostics, sampled profiles `W` and `∇W`, and the interaction source
//! `H = f(W) − Σ_j f(R_j)`.

use std::collections::HashMap;
use std::f64::consts::TAU;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::analysis::{conjugate, fit_exponential_window, lp_norm, DecayFit};
use crate::bound_state::{solve_bound_state, BoundState, BoundStateOptions};
use crate::exponents::choose_r0;
use crate::grid::Grid1D;
use crate::kink::{find_kink_params, solve_kink_profile, KinkProfile};
use crate::nonlinearity::Nonlinearity;
use crate::{Error, Result};

/// Relative amplitude below which a component is treated as zero when
/// sampled.
pub const SAMPLE_CUTOFF: f64 = 1e-16;
/// Relative amplitude defining the support in the wraparound check.
pub const SUPPORT_CUTOFF: f64 = 1e-13;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolitonParam {
    pub omega: f64,
    pub v: f64,
    #[serde(default)]
    pub gamma: f64,
    #[serde(default)]
    pub x0: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KinkSpec {
    #[serde(default)]
    pub v0: f64,
    #[serde(default)]
    pub gamma0: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum PresetKind {
    A,
    B,
}

/// Parameter law that generated a spec, kept to report the truncation tail.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PresetLaw {
    pub kind: PresetKind,
    pub v_bar: f64,
    pub h_value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainSpec {
    pub nl: Nonlinearity,
    pub waves: Vec<SolitonParam>,
    #[serde(default)]
    pub kink: Option<KinkSpec>,
    /// Defaults to the automatic choice for `d = 1`.
    #[serde(default)]
    pub r0: Option<f64>,
    #[serde(default)]
    pub law: Option<PresetLaw>,
}

impl TrainSpec {
    pub fn alpha1(&self) -> f64 {
        self.nl.alpha1
    }

    /// `r₀` used in the summability diagnostics.
    pub fn r0(&self) -> f64 {
        self.r0.unwrap_or_else(|| {
            choose_r0(1, self.nl.alpha1, self.nl.alpha2)
                .unwrap_or_else(|_| f64::max(1.0, 0.5 * self.nl.alpha1) + 1.0 / 16.0)
        })
    }

    pub fn validate(&self) -> Result<()> {
        self.nl.validate(1)?;
        for (j, w) in self.waves.iter().enumerate() {
            if !(w.omega > 0.0 && w.v.is_finite() && w.gamma.is_finite() && w.x0.is_finite()) {
                return Err(Error::InvalidInput(format!("wave {} has invalid parameters {w:?}", j + 1)));
            }
        }
        if let Some(k) = self.kink {
            if let Some(w) = self.waves.iter().find(|w| !(w.v > k.v0)) {
                return Err(Error::InvalidInput(format!(
                    "every soliton must move faster than the kink: v = {} <= v0 = {}",
                    w.v, k.v0
                )));
            }
        }
        if self.waves.is_empty() && self.kink.is_none() {
            return Err(Error::InvalidInput("empty train".into()));
        }
        Ok(())
    }

    /// The same train seen from a frame moving with velocity `w`.
    pub fn in_frame(&self, w: f64) -> TrainSpec {
        let mut s = self.clone();
        for wave in &mut s.waves {
            wave.v -= w;
        }
        if let Some(k) = &mut s.kink {
            k.v0 -= w;
        }
        s
    }

    /// Frame velocity that keeps the train centered: the kink velocity when a
    /// kink is present, the midpoint of the velocity range otherwise.
    pub fn default_frame(&self) -> f64 {
        if let Some(k) = self.kink {
            return k.v0;
        }
        let lo = self.waves.iter().map(|w| w.v).fold(f64::INFINITY, f64::min);
        let hi = self.waves.iter().map(|w| w.v).fold(f64::NEG_INFINITY, f64::max);
        0.5 * (lo + hi)
    }
}

/// Preset laws: `A` has `ω_j = 4^{−j}`, `v_j = 2^{j+1} v̄`; `B` has
/// `v_j = 2^{j+1} h v̄` for odd `j` and `−2^{j+1} v̄` for even `j`.
pub fn preset(kind: PresetKind, j_max: usize, v_bar: f64, h_value: f64, nl: Nonlinearity) -> Result<TrainSpec> {
    if j_max == 0 || !(v_bar.abs() > 0.0) {
        return Err(Error::InvalidInput(format!("preset needs J >= 1 and v_bar != 0, got J = {j_max}, v_bar = {v_bar}")));
    }
    if kind == PresetKind::B && !(h_value > 1.0) {
        return Err(Error::InvalidInput(format!("preset B needs h > 1, got {h_value}")));
    }
    let waves = (1..=j_max)
        .map(|j| {
            let p = 2f64.powi(j as i32 + 1);
            let v = match kind {
                PresetKind::A => p * v_bar,
                PresetKind::B if j % 2 == 1 => p * h_value * v_bar,
                PresetKind::B => -p * v_bar,
            };
            SolitonParam {
                omega: 4f64.powi(-(j as i32)),
                v,
                gamma: 0.0,
                x0: 0.0,
            }
        })
        .collect();
    Ok(TrainSpec {
        nl,
        waves,
        kink: None,
        r0: None,
        law: Some(PresetLaw {
            kind,
            v_bar,
            h_value,
        }),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum DiagnosticsVariant {
    TrainOnly,
    WithKink,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainDiagnostics {
    /// `min_{j≠k} √ω_j |v_k − v_j|`; infinite for a single wave.
    pub v_star: f64,
    /// `Σ ⟨v_j⟩ ω_j^{1/α₁ − 1/4}`.
    #[serde(rename = "V_star")]
    pub v_star_sum: f64,
    /// `Σ ω_j^{1/α₁ − 1/(2r₀)}`.
    #[serde(rename = "A1")]
    pub a1: f64,
    /// `Σ ω_j^{1/α₁}`.
    #[serde(rename = "A2")]
    pub a2: f64,
    /// What the waves `j > J` of the preset law would add to `A1`.
    pub tail_a1: f64,
}

/// Admissibility diagnostics by exhaustive pair scan and direct summation
/// (one space dimension).
pub fn compute_diagnostics(spec: &TrainSpec, variant: DiagnosticsVariant) -> TrainDiagnostics {
    let a1_exp = 1.0 / spec.alpha1() - 0.5 / spec.r0();
    let mut vs: Vec<f64> = spec.waves.iter().map(|w| w.v).collect();
    let kink_v = match (variant, spec.kink) {
        (DiagnosticsVariant::WithKink, Some(k)) => Some(k.v0),
        _ => None,
    };
    if let Some(v0) = kink_v {
        vs.push(v0);
    }
    let mut v_star = f64::INFINITY;
    for (j, wj) in spec.waves.iter().enumerate() {
        for (k, &vk) in vs.iter().enumerate() {
            if j != k {
                v_star = v_star.min(wj.omega.sqrt() * (vk - wj.v).abs());
            }
        }
    }
    let sum = |f: &dyn Fn(&SolitonParam) -> f64| spec.waves.iter().map(f).sum::<f64>();
    let a1 = sum(&|w| w.omega.powf(a1_exp));
    let a2 = sum(&|w| w.omega.powf(1.0 / spec.alpha1()));
    let v_star_sum = sum(&|w| (1.0 + w.v * w.v).sqrt() * w.omega.powf(1.0 / spec.alpha1() - 0.25));
    let tail_a1 = match spec.law {
        Some(_) => {
            let q = 4f64.powf(-a1_exp);
            if q < 1.0 {
                q.powi(spec.waves.len() as i32 + 1) / (1.0 - q)
            } else {
                f64::INFINITY
            }
        }
        None => 0.0,
    };
    TrainDiagnostics {
        v_star,
        v_star_sum,
        a1,
        a2,
        tail_a1,
    }
}

/// Bound states shared between waves of equal frequency.
#[derive(Clone, Debug, Default)]
pub struct BoundStateCache {
    map: HashMap<(u64, String), Arc<BoundState>>,
}

impl BoundStateCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&mut self, nl: &Nonlinearity, omega: f64) -> Result<Arc<BoundState>> {
        let key = (omega.to_bits(), format!("{:?}", nl));
        if let Some(bs) = self.map.get(&key) {
            return Ok(bs.clone());
        }
        let bs = Arc::new(solve_bound_state(nl, omega, 1, &BoundStateOptions::default())?);
        self.map.insert(key, bs.clone());
        Ok(bs)
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }
}

/// A train with its profiles resolved, sampled in a frame moving with
/// velocity `frame`.
#[derive(Clone, Debug)]
pub struct Train {
    /// Spec in the lab frame.
    pub spec: TrainSpec,
    pub frame: f64,
    states: Vec<Arc<BoundState>>,
    tables: Vec<Arc<ProfileTable>>,
    kink: Option<Arc<KinkProfile>>,
}

/// `φ` and `φ′` tabulated on the bound state's nodes out to the sampling
/// radius, so that sampling never falls back to the tail formula.
#[derive(Debug)]
struct ProfileTable {
    h: f64,
    inv_h: f64,
    radius: f64,
    phi: Vec<f64>,
    dphi: Vec<f64>,
}

impl ProfileTable {
    fn new(bs: &BoundState) -> Self {
        let radius = bs.support_radius(SAMPLE_CUTOFF);
        let n = (radius / bs.h).ceil() as usize + 2;
        let (phi, dphi) = (0..=n).map(|i| bs.eval(i as f64 * bs.h)).unzip();
        ProfileTable {
            h: bs.h,
            inv_h: 1.0 / bs.h,
            radius,
            phi,
            dphi,
        }
    }

    #[inline]
    fn eval(&self, x: f64) -> (f64, f64) {
        let r = x.abs();
        let u = r * self.inv_h;
        let i = (u as usize).min(self.phi.len() - 2);
        let s = u - i as f64;
        let (p0, p1) = (self.phi[i], self.phi[i + 1]);
        let (m0, m1) = (self.dphi[i] * self.h, self.dphi[i + 1] * self.h);
        let s2 = s * s;
        let s3 = s2 * s;
        let v = (2.0 * s3 - 3.0 * s2 + 1.0) * p0 + (s3 - 2.0 * s2 + s) * m0 + (-2.0 * s3 + 3.0 * s2) * p1 + (s3 - s2) * m1;
        let dv = ((6.0 * s2 - 6.0 * s) * p0
            + (3.0 * s2 - 4.0 * s + 1.0) * m0
            + (-6.0 * s2 + 6.0 * s) * p1
            + (3.0 * s2 - 2.0 * s) * m1)
            * self.inv_h;
        (v, if x < 0.0 { -dv } else { dv })
    }
}

/// Nodes between exact phase evaluations in the carrier recurrence.
const PHASE_RESYNC: usize = 32;

/// Samples of `W` and `∇W` (frame coordinates).
#[derive(Clone, Debug)]
pub struct ProfileSample {
    pub w: Vec<Complex64>,
    pub grad: Vec<Complex64>,
}

/// Samples of `H` and `∇H` (frame coordinates).
#[derive(Clone, Debug)]
pub struct SourceSample {
    pub h: Vec<Complex64>,
    pub grad: Vec<Complex64>,
}

struct Component {
    start: usize,
    values: Vec<Complex64>,
    grads: Vec<Complex64>,
}

impl Train {
    pub fn new(spec: TrainSpec, cache: &mut BoundStateCache) -> Result<Self> {
        spec.validate()?;
        let states = spec
            .waves
            .iter()
            .map(|w| cache.get(&spec.nl, w.omega))
            .collect::<Result<Vec<_>>>()?;
        let kink = match spec.kink {
            Some(_) => {
                let p = find_kink_params(&spec.nl)?;
                Some(Arc::new(solve_kink_profile(&p, &spec.nl, None, None)?))
            }
            None => None,
        };
        let frame = spec.default_frame();
        let tables = states.iter().map(|bs| Arc::new(ProfileTable::new(bs))).collect();
        Ok(Train {
            spec,
            frame,
            states,
            tables,
            kink,
        })
    }

    pub fn build(spec: TrainSpec) -> Result<Self> {
        Self::new(spec, &mut BoundStateCache::new())
    }

    /// Re-targets the sampling frame. Trains with a kink must use the kink's
    /// own frame, where its periodic closure is stationary.
    pub fn with_frame(mut self, w: f64) -> Result<Self> {
        if let Some(k) = self.spec.kink {
            if w != k.v0 {
                return Err(Error::InvalidInput(format!(
                    "a kink train must be sampled in the kink frame w = {}, got {w}",
                    k.v0
                )));
            }
        }
        self.frame = w;
        Ok(self)
    }

    pub fn bound_states(&self) -> &[Arc<BoundState>] {
        &self.states
    }

    pub fn kink_profile(&self) -> Option<&KinkProfile> {
        self.kink.as_deref()
    }

    pub fn nl(&self) -> &Nonlinearity {
        &self.spec.nl
    }

    /// Fails with `GridTooSmall` when some wave would reach the domain edge
    /// (or the kink's periodic closure) within `[0, t_max]`.
    pub fn check_grid(&self, grid: &Grid1D, t_max: f64) -> Result<()> {
        let half = 0.5 * grid.len();
        let kink_r = self
            .kink
            .as_ref()
            .map(|k| k.support_radius(SUPPORT_CUTOFF))
            .unwrap_or(0.0);
        if self.kink.is_some() && 2.0 * kink_r > half {
            return Err(Error::GridTooSmall(format!(
                "kink support {kink_r:.1} does not fit in a quarter of L = {}",
                grid.len()
            )));
        }
        for (w, bs) in self.spec.waves.iter().zip(&self.states) {
            let reach = w.x0.abs() + (w.v - self.frame).abs() * t_max + bs.support_radius(SUPPORT_CUTOFF) + kink_r;
            if reach > half {
                return Err(Error::GridTooSmall(format!(
                    "wave with v = {} reaches {reach:.1} > L/2 = {half} by t = {t_max}",
                    w.v
                )));
            }
        }
        Ok(())
    }

    fn components(&self, t: f64, grid: &Grid1D, with_grads: bool) -> Vec<Component> {
        let n = grid.n();
        let dx = grid.dx();
        let mut out = Vec::with_capacity(self.states.len() + 1);
        if let (Some(k), Some(ks)) = (&self.kink, self.spec.kink) {
            // stationary in its own frame; closed by a mirrored copy at the antipode
            let phase = Complex64::from_polar(1.0, (k.params.omega0 * t + ks.gamma0).rem_euclid(TAU));
            let l = grid.len();
            let mut values = Vec::with_capacity(n);
            let mut grads = Vec::with_capacity(if with_grads { n } else { 0 });
            for j in 0..n {
                let y = grid.x(j);
                let (v, dv) = if y.abs() < 0.25 * l {
                    k.eval(y)
                } else if y >= 0.25 * l {
                    let (v, dv) = k.eval(0.5 * l - y);
                    (v, -dv)
                } else {
                    let (v, dv) = k.eval(-(y + 0.5 * l));
                    (v, -dv)
                };
                values.push(phase * v);
                if with_grads {
                    grads.push(phase * dv);
                }
            }
            out.push(Component {
                start: 0,
                values,
                grads,
            });
        }
        for (w, tab) in self.spec.waves.iter().zip(&self.tables) {
            let v = w.v - self.frame;
            let c = w.x0 + v * t;
            let radius = tab.radius;
            let lo = ((c - radius - grid.x(0)) / dx).floor().max(0.0) as usize;
            let hi = (((c + radius - grid.x(0)) / dx).ceil().max(0.0) as usize).min(n);
            if lo >= hi {
                continue;
            }
            let base = (w.omega * t + 0.5 * v * c - 0.25 * v * v * t + w.gamma).rem_euclid(TAU);
            let mut values = Vec::with_capacity(hi - lo);
            let mut grads = Vec::with_capacity(if with_grads { hi - lo } else { 0 });
            let step = Complex64::from_polar(1.0, 0.5 * v * dx);
            let mut e = ZERO;
            for j in lo..hi {
                let s = grid.x(j) - c;
                let (p, dp) = tab.eval(s);
                e = if (j - lo) % PHASE_RESYNC == 0 {
                    Complex64::from_polar(1.0, base + 0.5 * v * s)
                } else {
                    e * step
                };
                values.push(e * p);
                if with_grads {
                    grads.push(e * Complex64::new(dp, 0.5 * v * p));
                }
            }
            out.push(Component {
                start: lo,
                values,
                grads,
            });
        }
        out
    }

    /// `W(t)` and `∇W(t)` on the grid.
    pub fn sample(&self, t: f64, grid: &Grid1D) -> ProfileSample {
        let n = grid.n();
        let mut w = vec![ZERO; n];
        let mut grad = vec![ZERO; n];
        for c in self.components(t, grid, true) {
            for (i, (v, g)) in c.values.iter().zip(&c.grads).enumerate() {
                w[c.start + i] += v;
                grad[c.start + i] += g;
            }
        }
        ProfileSample { w, grad }
    }

    /// `H(t) = f(W) − Σ_j f(R_j)` and its gradient by the chain rule,
    /// evaluated without cancellation: `H = Σ_j [g(|W|²) − g(|R_j|²)] R_j`.
    pub fn source(&self, t: f64, grid: &Grid1D) -> SourceSample {
        let (h, grad) = self.source_impl(t, grid, true);
        SourceSample { h, grad }
    }

    /// `H` alone, skipping the gradient.
    pub fn source_values(&self, t: f64, grid: &Grid1D) -> Vec<Complex64> {
        self.source_impl(t, grid, false).0
    }

    fn source_impl(&self, t: f64, grid: &Grid1D, with_grad: bool) -> (Vec<Complex64>, Vec<Complex64>) {
        let n = grid.n();
        let comps = self.components(t, grid, with_grad);
        let nl = &self.spec.nl;
        let mut h = vec![ZERO; n];
        let mut grad = if with_grad { vec![ZERO; n] } else { Vec::new() };
        let mut here: Vec<(Complex64, Complex64)> = Vec::with_capacity(comps.len());
        for j in overlap_nodes(&comps) {
            here.clear();
            for c in &comps {
                if j >= c.start && j < c.start + c.values.len() {
                    let v = c.values[j - c.start];
                    if v != ZERO {
                        here.push((v, if with_grad { c.grads[j - c.start] } else { ZERO }));
                    }
                }
            }
            if here.len() < 2 {
                continue;
            }
            let w: Complex64 = here.iter().map(|p| p.0).sum();
            let sw = w.norm_sqr();
            let (fz_w, fzb_w) = if with_grad { nl.wirtinger(w) } else { (ZERO, ZERO) };
            let mut hv = ZERO;
            let mut gv = ZERO;
            for (k, &(r, gr)) in here.iter().enumerate() {
                let rest: Complex64 = here
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| *i != k)
                    .map(|(_, p)| p.0)
                    .sum();
                let sr = r.norm_sqr();
                let delta = rest.norm_sqr() + 2.0 * (r.conj() * rest).re;
                hv += r * nl.g_diff(sw, sr, delta);
                if with_grad {
                    let (fz_r, fzb_r) = nl.wirtinger(r);
                    gv += (fz_w - fz_r) * gr + (fzb_w - fzb_r) * gr.conj();
                }
            }
            h[j] = hv;
            if with_grad {
                grad[j] = gv;
            }
        }
        (h, grad)
    }
}

/// Nodes covered by at least two components.
fn overlap_nodes(comps: &[Component]) -> impl Iterator<Item = usize> {
    let mut spans: Vec<(usize, usize)> = Vec::new();
    for (a, ca) in comps.iter().enumerate() {
        for cb in &comps[a + 1..] {
            let lo = ca.start.max(cb.start);
            let hi = (ca.start + ca.values.len()).min(cb.start + cb.values.len());
            if lo < hi {
                spans.push((lo, hi));
            }
        }
    }
    spans.sort_unstable();
    let mut merged: Vec<(usize, usize)> = Vec::new();
    for (lo, hi) in spans {
        match merged.last_mut() {
            Some(last) if lo <= last.1 => last.1 = last.1.max(hi),
            _ => merged.push((lo, hi)),
        }
    }
    merged.into_iter().flat_map(|(lo, hi)| lo..hi)
}

/// `∇` of a field in the lab frame from its frame samples: the boost adds
/// `i(w/2)u`.
pub fn lab_gradient(u: &[Complex64], grad: &[Complex64], w: f64) -> Vec<Complex64> {
    u.iter()
        .zip(grad)
        .map(|(v, g)| g + Complex64::new(0.0, 0.5 * w) * v)
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SourceRow {
    pub t: f64,
    pub h_inf: f64,
    pub h_r2_conj: f64,
    pub h_l2: f64,
    pub grad_h_l2: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SourceDecayReport {
    pub frame: f64,
    pub diagnostics: TrainDiagnostics,
    pub rows: Vec<SourceRow>,
    pub fit_window: (f64, f64),
    pub fit_h_inf: Option<DecayFit>,
    pub fit_grad_h: Option<DecayFit>,
    /// Decay rate `a` used for the reference rates.
    pub a: f64,
    /// `a v_*/2`, the exponent of the pointwise bound.
    pub rate_pointwise: f64,
    /// The two readings of the gradient rate: `a min(1, 2a) v_*/4` and
    /// `(a/4) min(1, 2α₁) v_*`.
    pub lambda_candidates: (f64, f64),
}

/// Norms of `H(t)` at the given times and exponential fits over `fit_window`.
pub fn source_decay_scan(train: &Train, times: &[f64], grid: &Grid1D, a: f64, fit_window: (f64, f64)) -> Result<SourceDecayReport> {
    if times.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidInput("times must be strictly increasing".into()));
    }
    let t_max = times.last().copied().unwrap_or(0.0);
    train.check_grid(grid, t_max)?;
    let r2c = conjugate(2.0 + train.spec.nl.alpha2);
    let dx = grid.dx();
    let rows: Vec<SourceRow> = times
        .iter()
        .map(|&t| {
            let s = train.source(t, grid);
            let g = lab_gradient(&s.h, &s.grad, train.frame);
            SourceRow {
                t,
                h_inf: lp_norm(&s.h, dx, f64::INFINITY),
                h_r2_conj: lp_norm(&s.h, dx, r2c),
                h_l2: lp_norm(&s.h, dx, 2.0),
                grad_h_l2: lp_norm(&g, dx, 2.0),
            }
        })
        .collect();
    let ts: Vec<f64> = rows.iter().map(|r| r.t).collect();
    let hinf: Vec<f64> = rows.iter().map(|r| r.h_inf).collect();
    let gh: Vec<f64> = rows.iter().map(|r| r.grad_h_l2).collect();
    let diagnostics = compute_diagnostics(
        &train.spec,
        if train.spec.kink.is_some() {
            DiagnosticsVariant::WithKink
        } else {
            DiagnosticsVariant::TrainOnly
        },
    );
    let vs = diagnostics.v_star;
    let a1 = train.spec.alpha1();
    Ok(SourceDecayReport {
        frame: train.frame,
        diagnostics,
        fit_window,
        fit_h_inf: fit_exponential_window(&ts, &hinf, fit_window.0, fit_window.1).ok(),
        fit_grad_h: fit_exponential_window(&ts, &gh, fit_window.0, fit_window.1).ok(),
        rows,
        a,
        rate_pointwise: 0.5 * a * vs,
        lambda_candidates: (a * a.min(0.5) * 2.0 * vs / 4.0, 0.25 * a * (2.0 * a1).min(1.0) * vs),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn cubic() -> Nonlinearity {
        Nonlinearity::pure_power(2.0)
    }

    #[test]
    fn preset_examples() {
        let a = preset(PresetKind::A, 3, 10.0, 0.0, cubic()).unwrap();
        let om: Vec<f64> = a.waves.iter().map(|w| w.omega).collect();
        let vs: Vec<f64> = a.waves.iter().map(|w| w.v).collect();
        assert_eq!(om, vec![0.25, 0.0625, 0.015625]);
        assert_eq!(vs, vec![40.0, 80.0, 160.0]);

        let b = preset(PresetKind::B, 2, 10.0, 2.0, cubic()).unwrap();
        assert_eq!(b.waves[0].v, 80.0);
        assert_eq!(b.waves[1].v, -80.0);

        let one = preset(PresetKind::A, 1, 10.0, 0.0, cubic()).unwrap();
        assert_eq!(compute_diagnostics(&one, DiagnosticsVariant::TrainOnly).v_star, f64::INFINITY);
    }

    #[test]
    fn v_star_brute_force() {
        let spec = preset(PresetKind::A, 6, 10.0, 0.0, cubic()).unwrap();
        let d = compute_diagnostics(&spec, DiagnosticsVariant::TrainOnly);
        let mut brute = f64::INFINITY;
        for j in 1..=6 {
            for k in 1..=6 {
                if j != k {
                    let (wj, vj, vk) = (4f64.powi(-j), 2f64.powi(j + 1) * 10.0, 2f64.powi(k + 1) * 10.0);
                    brute = brute.min(wj.sqrt() * (vk - vj).abs());
                }
            }
        }
        assert_eq!(d.v_star, brute);
        assert_eq!(d.v_star, 10.0);
    }

    #[test]
    fn v_star_sum_convergence_threshold() {
        // terms scale like 2^{j(3/2 − 2/α₁)}
        let grow = |a1: f64, j: usize| {
            let spec = preset(PresetKind::A, j, 10.0, 0.0, Nonlinearity::pure_power(a1)).unwrap();
            compute_diagnostics(&spec, DiagnosticsVariant::TrainOnly).v_star_sum
        };
        let conv = grow(1.0, 40) / grow(1.0, 20);
        assert!(conv < 1.0 + 1e-3, "{conv}");
        let div = grow(2.0, 40) / grow(2.0, 20);
        assert!(div > 100.0);
    }

    #[test]
    fn preset_b_scales_with_h() {
        let d = |h: f64| {
            let spec = preset(PresetKind::B, 6, 10.0, h, cubic()).unwrap();
            compute_diagnostics(&spec, DiagnosticsVariant::TrainOnly)
        };
        let (d1, d2) = (d(20.0), d(40.0));
        assert_eq!(d1.v_star, d2.v_star);
        assert_eq!(d1.v_star, 15.0);
        let ratio = d2.v_star_sum / d1.v_star_sum;
        assert!((ratio - 2.0).abs() < 0.1, "{ratio}");
    }

    #[test]
    fn with_kink_variant_includes_kink_velocity() {
        let mut spec = TrainSpec {
            nl: Nonlinearity::double_power(1.0, 2.0),
            waves: vec![
                SolitonParam { omega: 1.0 / 16.0, v: 40.0, gamma: 0.0, x0: 0.0 },
                SolitonParam { omega: 1.0 / 64.0, v: 80.0, gamma: 0.0, x0: 0.0 },
            ],
            kink: Some(KinkSpec { v0: 0.0, gamma0: 0.0 }),
            r0: None,
            law: None,
        };
        let d = compute_diagnostics(&spec, DiagnosticsVariant::WithKink);
        assert_eq!(d.v_star, 5.0);
        assert_eq!(d.tail_a1, 0.0);
        spec.kink.as_mut().unwrap().v0 = 39.0;
        let d = compute_diagnostics(&spec, DiagnosticsVariant::WithKink);
        assert_eq!(d.v_star, 0.25);
    }

    #[test]
    fn single_wave_sample_and_source() {
        let spec = preset(PresetKind::A, 1, 2.0, 0.0, cubic()).unwrap();
        let train = Train::build(spec).unwrap().with_frame(0.0).unwrap();
        let grid = Grid1D::new(100.0, 1024).unwrap();
        let s = train.sample(0.0, &grid);
        let bs = &train.bound_states()[0];
        for j in (0..1024).step_by(37) {
            let x = grid.x(j);
            let exact = Complex64::from_polar(bs.eval_1d(x).0, 0.5 * 8.0 * x);
            assert!((s.w[j] - exact).norm() < 1e-14);
        }
        let h = train.source(0.7, &grid);
        assert!(h.h.iter().all(|z| *z == ZERO));
        assert!(h.grad.iter().all(|z| *z == ZERO));
    }

    #[test]
    fn source_matches_direct_difference() {
        let spec = preset(PresetKind::A, 2, 1.0, 0.0, cubic()).unwrap();
        let train = Train::build(spec).unwrap();
        let grid = Grid1D::new(200.0, 2048).unwrap();
        let t = 0.3;
        let s = train.source(t, &grid);
        let w = train.sample(t, &grid);
        let single: Vec<ProfileSample> = (0..2)
            .map(|j| {
                let mut sp = train.spec.clone();
                sp.waves = vec![sp.waves[j]];
                let mut tr = Train::build(sp).unwrap();
                tr.frame = train.frame;
                tr.sample(t, &grid)
            })
            .collect();
        let nl = cubic();
        assert!(s.h.iter().any(|z| z.norm() > 1e-3));
        for j in 0..grid.n() {
            let direct = nl.eval(w.w[j]) - nl.eval(single[0].w[j]) - nl.eval(single[1].w[j]);
            assert!((s.h[j] - direct).norm() < 1e-12);
            // superposition is literal
            assert!((w.w[j] - single[0].w[j] - single[1].w[j]).norm() < 1e-15);
        }
        // chain rule against a spectral derivative of H
        let dh = grid.derivative(&s.h);
        let worst = dh.iter().zip(&s.grad).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        let scale = s.grad.iter().map(|z| z.norm()).fold(0.0, f64::max);
        assert!(worst < 1e-6 * scale, "{worst} vs {scale}");
    }

    #[test]
    fn well_separated_source_vanishes() {
        let mut spec = preset(PresetKind::A, 2, 1.0, 0.0, cubic()).unwrap();
        spec.waves[0].x0 = -200.0;
        spec.waves[1].x0 = 200.0;
        let train = Train::build(spec).unwrap().with_frame(0.0).unwrap();
        let grid = Grid1D::new(1000.0, 8192).unwrap();
        let s = train.source(0.0, &grid);
        assert!(s.h.iter().all(|z| *z == ZERO));
    }

    #[test]
    fn grid_check() {
        let spec = preset(PresetKind::A, 2, 20.0, 0.0, cubic()).unwrap();
        let train = Train::build(spec).unwrap().with_frame(0.0).unwrap();
        let grid = Grid1D::new(400.0, 4096).unwrap();
        assert!(matches!(train.check_grid(&grid, 2.0), Err(Error::GridTooSmall(_))));
        assert!(train.check_grid(&grid, 0.0).is_ok());
    }

    #[test]
    fn kink_train_frame_is_forced() {
        let spec = TrainSpec {
            nl: Nonlinearity::double_power(1.0, 2.0),
            waves: vec![SolitonParam { omega: 1.0 / 16.0, v: 40.0, gamma: 0.0, x0: 0.0 }],
            kink: Some(KinkSpec { v0: 0.0, gamma0: 0.0 }),
            r0: None,
            law: None,
        };
        let train = Train::build(spec.clone()).unwrap();
        assert_eq!(train.frame, 0.0);
        assert!(train.clone().with_frame(3.0).is_err());
        let grid = Grid1D::new(400.0, 8192).unwrap();
        let w = train.sample(0.0, &grid);
        // plateau on the left of the kink, closed periodically
        let k = train.kink_profile().unwrap();
        let j = grid.n() / 2 - (50.0 / grid.dx()) as usize;
        assert!((w.w[j].norm() - k.params.b).abs() < 1e-6);
        assert!((w.w[0].norm() - k.params.s_star).abs() < 1e-12);
        let mut bad = spec;
        bad.waves[0].v = -1.0;
        assert!(matches!(Train::build(bad), Err(Error::InvalidInput(_))));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(6))]
        #[test]
        fn v_star_linear_in_v_bar(v in 0.5f64..100.0, j in 2usize..8) {
            let a = compute_diagnostics(&preset(PresetKind::A, j, v, 0.0, cubic()).unwrap(), DiagnosticsVariant::TrainOnly);
            let b = compute_diagnostics(&preset(PresetKind::A, j, 2.0 * v, 0.0, cubic()).unwrap(), DiagnosticsVariant::TrainOnly);
            prop_assert_eq!(b.v_star, 2.0 * a.v_star);
        }

        #[test]
        fn galilean_phase_identity(w in -5.0f64..5.0) {
            let spec = preset(PresetKind::A, 2, 1.0, 0.0, cubic()).unwrap();
            let mut boosted = spec.clone();
            for wave in &mut boosted.waves { wave.v += w; }
            let grid = Grid1D::new(200.0, 1024).unwrap();
            let a = Train::build(spec).unwrap().with_frame(0.0).unwrap().sample(0.0, &grid);
            let b = Train::build(boosted).unwrap().with_frame(0.0).unwrap().sample(0.0, &grid);
            for j in 0..grid.n() {
                let expect = a.w[j] * Complex64::from_polar(1.0, 0.5 * w * grid.x(j));
                prop_assert!((b.w[j] - expect).norm() < 1e-13);
            }
        }
    }
}
