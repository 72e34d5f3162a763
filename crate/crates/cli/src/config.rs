//! Run configuration: one JSON document per run, unknown keys rejected.

use std::path::PathBuf;

use nlstrain_core::evolution::uniform_times;
use nlstrain_core::train::preset;
use nlstrain_core::{DiagnosticsVariant, Error, GridSpec, Nonlinearity, PresetKind, Result, TrainSpec};
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    BoundState,
    Kink,
    TrainDiagnostics,
    SourceDecay,
    EvolveTrain,
    Duhamel,
    VerifyAll,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::BoundState => "bound-state",
            Command::Kink => "kink",
            Command::TrainDiagnostics => "train-diagnostics",
            Command::SourceDecay => "source-decay",
            Command::EvolveTrain => "evolve-train",
            Command::Duhamel => "duhamel",
            Command::VerifyAll => "verify-all",
        }
    }
}

/// A preset train referenced by its law parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PresetRef {
    pub kind: PresetKind,
    pub j_max: usize,
    pub v_bar: f64,
    #[serde(default)]
    pub h_value: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub command: Option<Command>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nl: Option<Nonlinearity>,
    /// Bound-state frequency.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega: Option<f64>,
    /// Bound-state dimension.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spec: Option<TrainSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<PresetRef>,
    /// Velocity of the computational frame.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub frame: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub variant: Option<DiagnosticsVariant>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridSpec>,
    #[serde(default, rename = "T", skip_serializing_if = "Option::is_none")]
    pub t_final: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    /// Duhamel quadrature step.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt_q: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub substeps: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub iterations: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sample_times: Option<Vec<f64>>,
    /// Decay rate `a` of the source reference rates.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub decay_a: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fit_window: Option<(f64, f64)>,
    /// Subset of acceptance criteria for verify-all.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub criteria: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
}

pub const DEFAULT_T: f64 = 4.0;
pub const DEFAULT_DT: f64 = 2e-3;
pub const DEFAULT_SAMPLES: usize = 160;
pub const DEFAULT_ITERATIONS: usize = 4;
pub const DEFAULT_DECAY_A: f64 = 0.9;

fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidInput(msg.into())
}

fn need<T: Clone>(v: &Option<T>, key: &str, cmd: Command) -> Result<T> {
    v.clone().ok_or_else(|| invalid(format!("{} needs `{key}`", cmd.name())))
}

fn positive(v: f64, key: &str) -> Result<f64> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(invalid(format!("`{key}` must be positive, got {v}")))
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| invalid(format!("config: {e}")))
    }

    /// Train spec from `spec` or `preset` (which takes `nl`).
    fn train_spec(&self, cmd: Command) -> Result<TrainSpec> {
        match (&self.spec, &self.preset) {
            (Some(_), Some(_)) => Err(invalid("give either `spec` or `preset`, not both")),
            (Some(s), None) => {
                if self.nl.is_some_and(|nl| nl != s.nl) {
                    return Err(invalid("`nl` disagrees with `spec.nl`"));
                }
                Ok(s.clone())
            }
            (None, Some(p)) => {
                let nl = need(&self.nl, "nl", cmd)?;
                preset(p.kind, p.j_max, p.v_bar, p.h_value, nl)
            }
            (None, None) => Err(invalid(format!("{} needs `spec` or `preset`", cmd.name()))),
        }
    }

    /// Checks the config against `cmd` and fills every default, so the result
    /// fully determines the run.
    pub fn resolve(&self, cmd: Command) -> Result<RunConfig> {
        if let Some(c) = self.command {
            if c != cmd {
                return Err(invalid(format!(
                    "config is for `{}` but `{}` was requested",
                    c.name(),
                    cmd.name()
                )));
            }
        }
        let mut r = RunConfig {
            command: Some(cmd),
            output_dir: self.output_dir.clone(),
            ..RunConfig::default()
        };
        match cmd {
            Command::BoundState => {
                let nl = need(&self.nl, "nl", cmd)?;
                let d = self.d.unwrap_or(1);
                nl.validate(d)?;
                r.nl = Some(nl);
                r.omega = Some(positive(self.omega.unwrap_or(1.0), "omega")?);
                r.d = Some(d);
            }
            Command::Kink => {
                let nl = need(&self.nl, "nl", cmd)?;
                nl.validate(1)?;
                r.nl = Some(nl);
            }
            Command::TrainDiagnostics => {
                let spec = self.train_spec(cmd)?;
                spec.validate()?;
                r.variant = Some(self.variant.unwrap_or(if spec.kink.is_some() {
                    DiagnosticsVariant::WithKink
                } else {
                    DiagnosticsVariant::TrainOnly
                }));
                r.spec = Some(spec);
            }
            Command::SourceDecay | Command::EvolveTrain | Command::Duhamel => {
                let spec = self.train_spec(cmd)?;
                spec.validate()?;
                let frame = self.frame.unwrap_or_else(|| spec.default_frame());
                let t = positive(self.t_final.unwrap_or(DEFAULT_T), "T")?;
                r.grid = Some(need(&self.grid, "grid", cmd)?);
                r.frame = Some(frame);
                r.t_final = Some(t);
                r.spec = Some(spec);
                let times = match &self.sample_times {
                    Some(ts) => ts.clone(),
                    None => uniform_times(t, DEFAULT_SAMPLES),
                };
                if let Some(x) = times.iter().find(|x| !(**x >= 0.0 && **x <= t)) {
                    return Err(invalid(format!("sample time {x} outside [0, {t}]")));
                }
                match cmd {
                    Command::SourceDecay => {
                        r.decay_a = Some(self.decay_a.unwrap_or(DEFAULT_DECAY_A));
                        r.fit_window = Some(self.fit_window.unwrap_or((0.5, t)));
                        r.sample_times = Some(times);
                    }
                    Command::EvolveTrain => {
                        r.dt = Some(positive(self.dt.unwrap_or(DEFAULT_DT), "dt")?);
                        r.sample_times = Some(times);
                    }
                    _ => {
                        r.dt_q = Some(positive(need(&self.dt_q, "dt_q", cmd)?, "dt_q")?);
                        r.substeps = self.substeps;
                        r.iterations = Some(self.iterations.unwrap_or(DEFAULT_ITERATIONS));
                        // cross-check against evolution only when asked
                        if self.sample_times.is_some() {
                            r.dt = Some(positive(self.dt.unwrap_or(DEFAULT_DT), "dt")?);
                            r.sample_times = Some(times);
                        }
                    }
                }
            }
            Command::VerifyAll => {
                let ids = self.criteria.clone().unwrap_or_else(|| (1..=12).collect());
                if let Some(id) = ids.iter().find(|i| !(1..=12).contains(*i)) {
                    return Err(invalid(format!("no acceptance criterion {id}")));
                }
                r.criteria = Some(ids);
            }
        }
        Ok(r)
    }
}
