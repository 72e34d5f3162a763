//! Pipelines behind each command and the artifact writer.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use nlstrain_core::bound_state::{certify_decay, solve_bound_state};
use nlstrain_core::duhamel::{contraction_report, cross_check, picard_solve};
use nlstrain_core::evolution::{backward_eta, train_convergence_experiment};
use nlstrain_core::kink::{find_kink_params, solve_kink_profile};
use nlstrain_core::nonlinearity::{check_assumption_f0, default_samples};
use nlstrain_core::train::{compute_diagnostics, source_decay_scan};
use nlstrain_core::verify::{run_criterion, CriterionOutcome};
use nlstrain_core::{BoundStateOptions, Error, Grid1D, TimeGrid, Train};
use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::config::{Command, RunConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;
pub const EXIT_ACCEPTANCE: i32 = 4;

/// Hex characters of the config hash used in artifact names.
pub const HASH_LEN: usize = 12;

/// Why a run stopped.
#[derive(Debug)]
pub enum Failure {
    Core(Error),
    Io(String),
    Acceptance(Vec<usize>),
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Core(e) if e.is_numerical() => EXIT_NUMERICAL,
            Failure::Core(_) | Failure::Io(_) => EXIT_VALIDATION,
            Failure::Acceptance(_) => EXIT_ACCEPTANCE,
        }
    }

    pub fn to_json(&self) -> Value {
        match self {
            Failure::Core(e) => json!({ "kind": e.kind(), "message": e.to_string() }),
            Failure::Io(m) => json!({ "kind": "Io", "message": m }),
            Failure::Acceptance(ids) => json!({
                "kind": "AcceptanceFailed",
                "message": format!("criteria {ids:?} failed"),
                "failed": ids,
            }),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

/// CSV table plus a JSON summary.
pub struct Artifacts {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
    pub summary: Value,
}

impl Artifacts {
    fn new(header: &[&str], summary: Value) -> Self {
        Artifacts {
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
            summary,
        }
    }

    fn push<T: ToString>(&mut self, row: impl IntoIterator<Item = T>) {
        self.rows.push(row.into_iter().map(|v| v.to_string()).collect());
    }

    pub fn csv(&self) -> Result<Vec<u8>, Failure> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header).map_err(io)?;
        for r in &self.rows {
            w.write_record(r).map_err(io)?;
        }
        w.into_inner().map_err(|e| Failure::Io(e.to_string()))
    }
}

fn io(e: impl ToString) -> Failure {
    Failure::Io(e.to_string())
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).unwrap_or(Value::Null)
}

/// Hash prefix of the resolved config; the output directory does not count.
pub fn config_hash(resolved: &RunConfig) -> String {
    let mut c = resolved.clone();
    c.output_dir = None;
    let bytes = serde_json::to_vec(&c).expect("config serializes");
    hex::encode(Sha256::digest(bytes))[..HASH_LEN].to_string()
}

fn build_train(cfg: &RunConfig) -> Result<(Train, Grid1D), Error> {
    let spec = cfg.spec.clone().expect("resolved spec");
    let g = cfg.grid.expect("resolved grid");
    let train = Train::build(spec)?.with_frame(cfg.frame.expect("resolved frame"))?;
    Ok((train, Grid1D::new(g.l, g.n)?))
}

/// Runs one resolved config. Criterion lines of verify-all go to `log`.
pub fn execute(cfg: &RunConfig, log: &mut dyn FnMut(&str)) -> Result<Artifacts, Failure> {
    let cmd = cfg.command.expect("resolved command");
    match cmd {
        Command::BoundState => bound_state(cfg),
        Command::Kink => kink(cfg),
        Command::TrainDiagnostics => diagnostics(cfg),
        Command::SourceDecay => source_decay(cfg),
        Command::EvolveTrain => evolve_train(cfg),
        Command::Duhamel => duhamel(cfg),
        Command::VerifyAll => verify_all(cfg, log),
    }
}

fn bound_state(cfg: &RunConfig) -> Result<Artifacts, Failure> {
    let nl = cfg.nl.expect("resolved nl");
    let omega = cfg.omega.expect("resolved omega");
    let d = cfg.d.expect("resolved d");
    let bs = solve_bound_state(&nl, omega, d, &BoundStateOptions::default())?;
    let cert = certify_decay(&bs, 0.9).ok();
    let mut out = Artifacts::new(
        &["r", "phi", "dphi", "d2phi"],
        json!({
            "omega": omega,
            "d": d,
            "phi0": bs.phi0(),
            "r_max": bs.r_max(),
            "h": bs.h,
            "residual": bs.residual,
            "node_residual": bs.node_residual(),
            "monotone": bs.is_monotone(),
            "tail": to_value(&bs.tail),
            "decay_certificate": to_value(&cert),
        }),
    );
    for (i, r) in bs.radii().iter().enumerate() {
        out.push([*r, bs.phi[i], bs.dphi[i], bs.d2phi[i]]);
    }
    Ok(out)
}

fn kink(cfg: &RunConfig) -> Result<Artifacts, Failure> {
    let nl = cfg.nl.expect("resolved nl");
    let params = find_kink_params(&nl)?;
    let profile = solve_kink_profile(&params, &nl, None, None)?;
    let mut out = Artifacts::new(
        &["s", "phi", "gap", "dphi", "d2phi"],
        json!({
            "params": to_value(&params),
            "s_min": profile.s_min,
            "s_max": profile.s_max(),
            "ds": profile.ds,
            "first_integral_residual": profile.first_integral_residual(),
            "ode_residual": profile.ode_residual(),
            "monotone": profile.is_monotone(),
            "steepest_s": profile.s(profile.steepest_node()),
        }),
    );
    for i in 0..profile.phi.len() {
        out.push([profile.s(i), profile.phi[i], profile.gap[i], profile.dphi[i], profile.d2phi[i]]);
    }
    Ok(out)
}

fn diagnostics(cfg: &RunConfig) -> Result<Artifacts, Failure> {
    let spec = cfg.spec.as_ref().expect("resolved spec");
    let diag = compute_diagnostics(spec, cfg.variant.expect("resolved variant"));
    let f0 = check_assumption_f0(&spec.nl, &default_samples(), None);
    let mut out = Artifacts::new(
        &["j", "omega", "v", "gamma", "x0"],
        json!({ "diagnostics": to_value(&diag), "r0": spec.r0(), "f0": to_value(&f0) }),
    );
    for (j, w) in spec.waves.iter().enumerate() {
        out.push([(j + 1) as f64, w.omega, w.v, w.gamma, w.x0]);
    }
    Ok(out)
}

fn source_decay(cfg: &RunConfig) -> Result<Artifacts, Failure> {
    let (train, grid) = build_train(cfg)?;
    let times = cfg.sample_times.as_ref().expect("resolved times");
    let mut report = source_decay_scan(
        &train,
        times,
        &grid,
        cfg.decay_a.expect("resolved a"),
        cfg.fit_window.expect("resolved window"),
    )?;
    let rows = std::mem::take(&mut report.rows);
    let mut out = Artifacts::new(&["t", "h_inf", "h_r2_conj", "h_l2", "grad_h_l2"], to_value(&report));
    for r in rows {
        out.push([r.t, r.h_inf, r.h_r2_conj, r.h_l2, r.grad_h_l2]);
    }
    Ok(out)
}

fn evolve_train(cfg: &RunConfig) -> Result<Artifacts, Failure> {
    let (train, grid) = build_train(cfg)?;
    let mut report = train_convergence_experiment(
        &train,
        cfg.t_final.expect("resolved T"),
        cfg.dt.expect("resolved dt"),
        &grid,
        cfg.sample_times.as_ref().expect("resolved times"),
    )?;
    let rows = std::mem::take(&mut report.rows);
    report.conservation.samples.clear();
    let mut out = Artifacts::new(
        &["t", "eta_l2", "eta_l_r2", "eta_l_inf", "grad_eta_l2", "mass", "energy"],
        to_value(&report),
    );
    for r in rows {
        out.push([r.t, r.l2, r.l_r2, r.l_inf, r.grad_l2, r.mass, r.energy]);
    }
    Ok(out)
}

fn duhamel(cfg: &RunConfig) -> Result<Artifacts, Failure> {
    let (train, grid) = build_train(cfg)?;
    let t = cfg.t_final.expect("resolved T");
    let m = (t / cfg.dt_q.expect("resolved dt_q")).round() as usize;
    let mut tg = TimeGrid::new(t, m)?;
    if let Some(s) = cfg.substeps {
        tg = tg.with_substeps(s)?;
    }
    let keep = cfg.sample_times.clone().unwrap_or_default();
    let history = picard_solve(&train, &tg, &grid, cfg.iterations.expect("resolved iterations"), None, &keep)?;
    let contraction = contraction_report(&history);
    let check = match (cfg.dt, &cfg.sample_times) {
        (Some(dt), Some(times)) => {
            let (etas, _, _) = backward_eta(&train, t, dt, &grid, times)?;
            Some(cross_check(&history, &etas, &grid))
        }
        _ => None,
    };
    let n = history.iterates.len();
    let mut header = vec!["t".to_string()];
    header.extend((0..n).map(|k| format!("eta{k}_l2")));
    let mut out = Artifacts {
        header,
        rows: Vec::new(),
        summary: json!({
            "time_grid": to_value(&history.time_grid),
            "frame": history.frame,
            "c_hat": history.c_hat,
            "h_rate": history.h_rate,
            "tail_estimate": history.tail_estimate,
            "quadrature_change": history.quadrature_change,
            "weighted_norms": history.iterates.iter().map(|i| i.weighted).collect::<Vec<_>>(),
            "differences": history.differences,
            "contraction": to_value(&contraction),
            "cross_check": to_value(&check),
        }),
    };
    for (i, ti) in tg.times().iter().enumerate() {
        out.push(std::iter::once(*ti).chain(history.iterates.iter().map(|it| it.l2[i])));
    }
    Ok(out)
}

fn verify_all(cfg: &RunConfig, log: &mut dyn FnMut(&str)) -> Result<Artifacts, Failure> {
    let ids = cfg.criteria.as_ref().expect("resolved criteria");
    let mut outcomes: Vec<CriterionOutcome> = Vec::new();
    for &id in ids {
        let o = run_criterion(id).expect("criterion ids are validated");
        log(&o.line());
        outcomes.push(o);
    }
    let failed: Vec<usize> = outcomes.iter().filter(|o| !o.passed).map(|o| o.id).collect();
    let mut out = Artifacts::new(
        &["id", "name", "passed", "summary"],
        json!({ "passed": outcomes.len() - failed.len(), "total": outcomes.len(), "failed": failed }),
    );
    for o in &outcomes {
        out.rows.push(vec![o.id.to_string(), o.name.clone(), o.passed.to_string(), o.summary.clone()]);
    }
    Ok(out)
}

/// Writes `bytes` to `path` through a temporary file in the same directory.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), Failure> {
    let dir = path.parent().unwrap_or(Path::new("."));
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("artifact");
    let tmp = dir.join(format!(".{name}.tmp-{}", std::process::id()));
    let mut f = fs::File::create(&tmp).map_err(|e| io(format!("{}: {e}", tmp.display())))?;
    f.write_all(bytes).and_then(|_| f.sync_all()).map_err(io)?;
    fs::rename(&tmp, path).map_err(|e| io(format!("{}: {e}", path.display())))
}

/// Paths written by a successful run.
pub struct Written {
    pub csv: PathBuf,
    pub json: PathBuf,
}

/// Resolves, runs and writes the artifacts of one command.
pub fn run(cmd: Command, config_text: &str, out_override: Option<&Path>, log: &mut dyn FnMut(&str)) -> (i32, Option<Written>) {
    let dir = out_override.map(Path::to_path_buf);
    let parsed = RunConfig::parse(config_text);
    let dir = dir
        .or_else(|| parsed.as_ref().ok().and_then(|c| c.output_dir.clone()))
        .unwrap_or_else(|| PathBuf::from("."));
    let result = parsed.and_then(|c| c.resolve(cmd)).map_err(Failure::from).and_then(|resolved| {
        fs::create_dir_all(&dir).map_err(|e| io(format!("{}: {e}", dir.display())))?;
        let stem = format!("{}-{}", cmd.name(), config_hash(&resolved));
        let art = execute(&resolved, log)?;
        let csv = dir.join(format!("{stem}.csv"));
        let js = dir.join(format!("{stem}.json"));
        write_atomic(&csv, &art.csv()?)?;
        let doc = json!({ "config": to_value(&resolved), "result": art.summary });
        write_atomic(&js, &serde_json::to_vec_pretty(&doc).map_err(io)?)?;
        if let Some(ids) = doc["result"]["failed"].as_array().filter(|a| !a.is_empty()) {
            let ids = ids.iter().filter_map(|v| v.as_u64().map(|i| i as usize)).collect();
            return Err(Failure::Acceptance(ids));
        }
        Ok(Written { csv, json: js })
    });
    match result {
        Ok(w) => (EXIT_OK, Some(w)),
        Err(f) => (report_failure(cmd, &dir, &f, log), None),
    }
}

/// Writes `error.json` into `dir` and returns the exit code.
pub fn report_failure(cmd: Command, dir: &Path, f: &Failure, log: &mut dyn FnMut(&str)) -> i32 {
    let mut doc = f.to_json();
    doc["command"] = json!(cmd.name());
    doc["exit_code"] = json!(f.exit_code());
    let _ = fs::create_dir_all(dir);
    let bytes = serde_json::to_vec_pretty(&doc).unwrap_or_default();
    if write_atomic(&dir.join("error.json"), &bytes).is_err() {
        log(&String::from_utf8_lossy(&bytes));
    }
    f.exit_code()
}

/// [`run`] on the contents of a config file.
pub fn run_file(cmd: Command, config: &Path, out_override: Option<&Path>, log: &mut dyn FnMut(&str)) -> (i32, Option<Written>) {
    match fs::read_to_string(config) {
        Ok(text) => run(cmd, &text, out_override, log),
        Err(e) => {
            let dir = out_override.unwrap_or(Path::new("."));
            let f = Failure::Io(format!("{}: {e}", config.display()));
            (report_failure(cmd, dir, &f, log), None)
        }
    }
}
