//! Run orchestration and persistence behind the `fks` binary: single runs,
//! parameter sweeps, blow-up fits, constants reports and the verification
//! suites.
//!
//! Configuration files are flat `key = value` text; `#` starts a comment and
//! unknown keys are rejected. [`RUN_KEYS`] lists the run keys.

use std::collections::{BTreeMap, HashSet};
use std::f64::consts::PI;
use std::fmt;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::blowup::{self, BlowupFit, Classification, ClassifyCriteria, FitStatus};
use crate::constants::{self, ConstantsReport, DataNorms, EmbeddingConstants, ReportOptions};
use crate::diagnostics::{self, DiagRecord, DiagnosticsRecorder, CSV_HEADER};
use crate::error::{Error, Result};
use crate::integrator::{
    self, BlowupCause, IntegratorConfig, Observer, StepInfo, StepMode, Termination,
};
use crate::model::{self, KellerSegel, Scenario, State, SystemParams};
use crate::peaks::{self, BirthEvent, DeathEvent, PeakRecorder, PeakTrack};
use crate::spectral::{Grid, SpectralField};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 1;
pub const EXIT_ASSERTION: i32 = 2;
pub const EXIT_IO: i32 = 3;

/// Process exit status for an error.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Io { .. } => EXIT_IO,
        _ => EXIT_INVALID,
    }
}

/// Shortest decimal that parses back to the same `f64`.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:?}")
}

pub type KeyValues = BTreeMap<String, String>;

/// Parse flat `key = value` text. Blank lines and `#` comments are skipped;
/// repeated keys are an error.
pub fn parse_kv(text: &str) -> Result<KeyValues> {
    let mut map = KeyValues::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return Err(Error::invalid(format!(
                "line {}: expected key = value, got '{line}'",
                lineno + 1
            )));
        };
        let (k, v) = (k.trim(), v.trim());
        if k.is_empty() {
            return Err(Error::invalid(format!("line {}: empty key", lineno + 1)));
        }
        if map.insert(k.to_string(), v.to_string()).is_some() {
            return Err(Error::invalid(format!(
                "line {}: duplicate key '{k}'",
                lineno + 1
            )));
        }
    }
    Ok(map)
}

pub fn read_kv(path: &Path) -> Result<KeyValues> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_kv(&text)
}

fn parse_value<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::invalid(format!("key '{key}': cannot parse '{value}'")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value {
        "true" | "1" | "yes" | "on" => Ok(true),
        "false" | "0" | "no" | "off" => Ok(false),
        _ => Err(Error::invalid(format!(
            "key '{key}': expected true or false, got '{value}'"
        ))),
    }
}

fn parse_mode(value: &str) -> Result<StepMode> {
    match value {
        "explicit" => Ok(StepMode::Explicit),
        "integrating_factor" => Ok(StepMode::IntegratingFactor),
        _ => Err(Error::invalid(format!(
            "key 'mode': expected explicit or integrating_factor, got '{value}'"
        ))),
    }
}

fn mode_str(mode: StepMode) -> &'static str {
    match mode {
        StepMode::Explicit => "explicit",
        StepMode::IntegratingFactor => "integrating_factor",
    }
}

fn format_modes(modes: &[(i64, Complex64)]) -> String {
    modes
        .iter()
        .map(|(k, c)| format!("{k}:{}:{}", fmt_f64(c.re), fmt_f64(c.im)))
        .collect::<Vec<_>>()
        .join(",")
}

/// Keys accepted in a run configuration.
pub const RUN_KEYS: &[&str] = &[
    "scenario",
    "u_modes",
    "v_modes",
    "alpha",
    "beta",
    "mu",
    "nu",
    "lambda",
    "r",
    "chi",
    "n",
    "t_end",
    "rel_tol",
    "abs_tol",
    "max_step",
    "initial_step",
    "blowup_threshold",
    "max_steps",
    "mode",
    "dealias",
    "stride",
    "peak_stride",
    "peak_slope",
    "peak_window",
    "peak_max_jump",
    "hs_order",
    "seed",
    "out",
];

/// Everything needed to reproduce one simulation.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub scenario: Scenario,
    pub params: SystemParams,
    pub n: usize,
    pub t_end: f64,
    pub integrator: IntegratorConfig,
    pub dealias: bool,
    /// Snapshot cadence.
    pub stride: f64,
    /// Peak-detection cadence.
    pub peak_stride: f64,
    pub peak_slope: f64,
    /// Slope window in cells; `None` means `n / 64`.
    pub peak_window: Option<usize>,
    pub peak_max_jump: f64,
    /// Sobolev order of the `hs_u` diagnostic; `None` means `alpha / 2`.
    pub hs_order: Option<f64>,
    pub seed: u64,
    pub out: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            scenario: Scenario::Sin8,
            params: SystemParams::reduced(1.0, 1.0, 1.0),
            n: 1024,
            t_end: 1.0,
            integrator: IntegratorConfig::default(),
            dealias: false,
            stride: 0.5,
            peak_stride: 0.05,
            peak_slope: 1.0,
            peak_window: None,
            peak_max_jump: 0.3,
            hs_order: None,
            seed: 0,
            out: PathBuf::from("run"),
        }
    }
}

impl RunConfig {
    /// Defaults overridden by `map`; unknown keys are errors.
    pub fn from_kv(map: &KeyValues) -> Result<Self> {
        let mut cfg = RunConfig::default();
        cfg.apply_kv(map, &[])?;
        Ok(cfg)
    }

    /// Override fields from `map`. Keys in `extra` are skipped; anything
    /// else that is not a run key is an error.
    pub fn apply_kv(&mut self, map: &KeyValues, extra: &[&str]) -> Result<()> {
        let mut scenario = None;
        for (key, value) in map {
            let k = key.as_str();
            let v = value.as_str();
            match k {
                "scenario" => scenario = Some(v.to_string()),
                "u_modes" | "v_modes" => {}
                "alpha" => self.params.alpha = parse_value(k, v)?,
                "beta" => self.params.beta = parse_value(k, v)?,
                "mu" => self.params.mu = parse_value(k, v)?,
                "nu" => self.params.nu = parse_value(k, v)?,
                "lambda" => self.params.lambda = parse_value(k, v)?,
                "r" => self.params.r = parse_value(k, v)?,
                "chi" => self.params.chi = parse_value(k, v)?,
                "n" => self.n = parse_value(k, v)?,
                "t_end" => self.t_end = parse_value(k, v)?,
                "rel_tol" => self.integrator.rel_tol = parse_value(k, v)?,
                "abs_tol" => self.integrator.abs_tol = parse_value(k, v)?,
                "max_step" => self.integrator.max_step = parse_value(k, v)?,
                "initial_step" => {
                    self.integrator.initial_step = if v == "auto" {
                        None
                    } else {
                        Some(parse_value(k, v)?)
                    }
                }
                "blowup_threshold" => self.integrator.blowup_threshold = parse_value(k, v)?,
                "max_steps" => self.integrator.max_steps = parse_value(k, v)?,
                "mode" => self.integrator.mode = parse_mode(v)?,
                "dealias" => self.dealias = parse_bool(k, v)?,
                "stride" => self.stride = parse_value(k, v)?,
                "peak_stride" => self.peak_stride = parse_value(k, v)?,
                "peak_slope" => self.peak_slope = parse_value(k, v)?,
                "peak_window" => {
                    self.peak_window = if v == "auto" {
                        None
                    } else {
                        Some(parse_value(k, v)?)
                    }
                }
                "peak_max_jump" => self.peak_max_jump = parse_value(k, v)?,
                "hs_order" => {
                    self.hs_order = if v == "auto" {
                        None
                    } else {
                        Some(parse_value(k, v)?)
                    }
                }
                "seed" => self.seed = parse_value(k, v)?,
                "out" => self.out = PathBuf::from(v),
                _ if extra.contains(&k) => {}
                _ => return Err(Error::invalid(format!("unknown configuration key '{k}'"))),
            }
        }
        let modes = |key: &str| map.get(key).map(|s| model::parse_modes(s)).transpose();
        let (u_modes, v_modes) = (modes("u_modes")?, modes("v_modes")?);
        match scenario.as_deref() {
            Some("custom") => {
                let (Some(u_modes), Some(v_modes)) = (u_modes, v_modes) else {
                    return Err(Error::invalid(
                        "scenario custom needs both u_modes and v_modes",
                    ));
                };
                self.scenario = Scenario::Custom { u_modes, v_modes };
            }
            Some(id) => {
                if u_modes.is_some() || v_modes.is_some() {
                    return Err(Error::invalid(
                        "u_modes/v_modes are only used with scenario = custom",
                    ));
                }
                self.scenario = id.parse()?;
            }
            None => {
                if u_modes.is_some() || v_modes.is_some() {
                    let Scenario::Custom {
                        u_modes: cu,
                        v_modes: cv,
                    } = &mut self.scenario
                    else {
                        return Err(Error::invalid(
                            "u_modes/v_modes are only used with scenario = custom",
                        ));
                    };
                    if let Some(m) = u_modes {
                        *cu = m;
                    }
                    if let Some(m) = v_modes {
                        *cv = m;
                    }
                }
            }
        }
        Ok(())
    }

    /// Every field as key/value text; [`RunConfig::from_kv`] inverts it.
    pub fn to_kv(&self) -> KeyValues {
        let mut m = KeyValues::new();
        let mut put = |k: &str, v: String| {
            m.insert(k.to_string(), v);
        };
        put("scenario", self.scenario.id().to_string());
        if let Scenario::Custom { u_modes, v_modes } = &self.scenario {
            put("u_modes", format_modes(u_modes));
            put("v_modes", format_modes(v_modes));
        }
        let p = &self.params;
        put("alpha", fmt_f64(p.alpha));
        put("beta", fmt_f64(p.beta));
        put("mu", fmt_f64(p.mu));
        put("nu", fmt_f64(p.nu));
        put("lambda", fmt_f64(p.lambda));
        put("r", fmt_f64(p.r));
        put("chi", fmt_f64(p.chi));
        put("n", self.n.to_string());
        put("t_end", fmt_f64(self.t_end));
        let ic = &self.integrator;
        put("rel_tol", fmt_f64(ic.rel_tol));
        put("abs_tol", fmt_f64(ic.abs_tol));
        put("max_step", fmt_f64(ic.max_step));
        put(
            "initial_step",
            ic.initial_step.map_or("auto".to_string(), fmt_f64),
        );
        put("blowup_threshold", fmt_f64(ic.blowup_threshold));
        put("max_steps", ic.max_steps.to_string());
        put("mode", mode_str(ic.mode).to_string());
        put("dealias", self.dealias.to_string());
        put("stride", fmt_f64(self.stride));
        put("peak_stride", fmt_f64(self.peak_stride));
        put("peak_slope", fmt_f64(self.peak_slope));
        put(
            "peak_window",
            self.peak_window
                .map_or("auto".to_string(), |w| w.to_string()),
        );
        put("peak_max_jump", fmt_f64(self.peak_max_jump));
        put(
            "hs_order",
            self.hs_order.map_or("auto".to_string(), fmt_f64),
        );
        put("seed", self.seed.to_string());
        put("out", self.out.display().to_string());
        m
    }

    /// Rebuild the configuration echoed in a run's `metadata.json`.
    pub fn from_metadata(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let meta: serde_json::Value = serde_json::from_str(&text)?;
        let config = meta
            .get("config")
            .ok_or_else(|| Error::invalid(format!("{}: no 'config' object", path.display())))?;
        let map: KeyValues = serde_json::from_value(config.clone())?;
        Self::from_kv(&map)
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        self.integrator.validate()?;
        Grid::new(self.n)?;
        if !(self.t_end > 0.0 && self.t_end.is_finite()) {
            return Err(Error::invalid(format!(
                "t_end must be finite and > 0, got {}",
                self.t_end
            )));
        }
        if !(self.stride >= 1e-6 && self.stride.is_finite()) {
            return Err(Error::invalid(format!(
                "stride must be >= 1e-6, got {}",
                self.stride
            )));
        }
        if !(self.peak_stride > 0.0 && self.peak_stride.is_finite()) {
            return Err(Error::invalid("peak_stride must be > 0"));
        }
        if !(self.peak_slope >= 0.0) || !(self.peak_max_jump > 0.0) {
            return Err(Error::invalid(
                "peak_slope must be >= 0 and peak_max_jump > 0",
            ));
        }
        if self.peak_window == Some(0) {
            return Err(Error::invalid("peak_window must be >= 1"));
        }
        Ok(())
    }

    pub fn grid(&self) -> Result<Grid> {
        Grid::new(self.n)
    }

    pub fn initial_state(&self) -> Result<State> {
        model::make_initial(&self.scenario, &self.grid()?, self.seed)
    }
}

/// Snapshot file name for time `t`: microseconds, zero padded.
pub fn snapshot_name(t: f64) -> String {
    format!("t_{:012}.csv", (t * 1e6).round().max(0.0) as u64)
}

fn io_err(path: &Path) -> impl Fn(std::io::Error) -> Error + '_ {
    move |e| Error::io(path, e)
}

fn csv_err(path: &Path) -> impl Fn(csv::Error) -> Error + '_ {
    move |e| {
        let kind = e.to_string();
        match e.into_kind() {
            csv::ErrorKind::Io(io) => Error::io(path, io),
            _ => Error::invalid(format!("{}: {kind}", path.display())),
        }
    }
}

pub fn write_snapshot(path: &Path, state: &State) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err(path))?;
    w.write_record(["x", "u", "v"]).map_err(csv_err(path))?;
    let grid = state.grid();
    let (u, v) = (state.u.values(), state.v.values());
    for j in 0..grid.n() {
        w.write_record([fmt_f64(grid.point(j)), fmt_f64(u[j]), fmt_f64(v[j])])
            .map_err(csv_err(path))?;
    }
    w.flush().map_err(io_err(path))
}

/// Observer writing a snapshot at the first accepted state at or after each
/// multiple of the stride.
struct SnapshotWriter {
    dir: PathBuf,
    stride: f64,
    next_mark: f64,
    last_t: Option<f64>,
    count: usize,
    error: Option<Error>,
}

impl SnapshotWriter {
    fn write(&mut self, state: &State) {
        let path = self.dir.join(snapshot_name(state.t));
        match write_snapshot(&path, state) {
            Ok(()) => {
                self.count += 1;
                self.last_t = Some(state.t);
            }
            Err(e) => self.error = Some(e),
        }
    }
}

impl Observer for SnapshotWriter {
    fn observe(&mut self, state: &State, _info: &StepInfo) {
        if self.error.is_some() || state.t + 1e-12 < self.next_mark {
            return;
        }
        self.write(state);
        self.next_mark = peaks::next_mark(state.t, self.stride);
    }
}

pub fn write_diagnostics(path: &Path, records: &[DiagRecord]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err(path))?;
    w.write_record(CSV_HEADER).map_err(csv_err(path))?;
    for r in records {
        w.write_record(r.csv_row().map(fmt_f64))
            .map_err(csv_err(path))?;
    }
    w.flush().map_err(io_err(path))
}

fn birth_str(b: BirthEvent) -> &'static str {
    match b {
        BirthEvent::Initial => "initial",
        BirthEvent::Emergence => "emergence",
    }
}

fn death_str(d: DeathEvent) -> String {
    match d {
        DeathEvent::Merge { into } => format!("merge:{into}"),
        DeathEvent::Boundary => "boundary".to_string(),
        DeathEvent::EndOfRun => "end_of_run".to_string(),
    }
}

/// `track_id,t,x,height,event`; the first sample of a track carries its
/// birth, the last its death, the rest `track`.
pub fn write_peaks(path: &Path, tracks: &[PeakTrack]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err(path))?;
    w.write_record(["track_id", "t", "x", "height", "event"])
        .map_err(csv_err(path))?;
    for tr in tracks {
        let last = tr.samples.len() - 1;
        for (i, p) in tr.samples.iter().enumerate() {
            let event = match (i == 0, i == last) {
                (true, true) => format!("{};{}", birth_str(tr.birth), death_str(tr.death)),
                (true, false) => birth_str(tr.birth).to_string(),
                (false, true) => death_str(tr.death),
                (false, false) => "track".to_string(),
            };
            w.write_record([
                tr.id.to_string(),
                fmt_f64(p.t),
                fmt_f64(p.x),
                fmt_f64(p.height),
                event,
            ])
            .map_err(csv_err(path))?;
        }
    }
    w.flush().map_err(io_err(path))
}

/// `sup |u - <u>|`.
pub fn mean_deviation(u: &SpectralField) -> f64 {
    let m = u.mean();
    u.values()
        .iter()
        .fold(0.0f64, |acc, x| acc.max((x - m).abs()))
}

/// Largest `|u_k|` with `|k| > n/4` over the largest nonzero-mode `|u_k|`.
/// Values above ~1e-3 mean the field is not resolved on its grid.
pub fn tail_ratio(u: &SpectralField) -> f64 {
    let grid = u.grid();
    let n = grid.n() as i64;
    let (mut tail, mut all) = (0.0f64, 0.0f64);
    for (i, c) in u.coeffs().iter().enumerate() {
        let k = grid.wavenumber(i).abs();
        if k == 0 {
            continue;
        }
        all = all.max(c.norm());
        if 4 * k > n {
            tail = tail.max(c.norm());
        }
    }
    // Relative to the mean as well, so roundoff on a flat field reads as 0.
    let floor = 1e-12 * u.coeff(0).norm();
    if all.max(floor) > 0.0 {
        tail / all.max(floor)
    } else {
        0.0
    }
}

/// Outcome of one simulation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub dir: PathBuf,
    pub termination: Termination,
    pub blowup_cause: Option<BlowupCause>,
    pub t_final: f64,
    pub accepted_steps: usize,
    pub rejected_steps: usize,
    /// `sup |u(T) - <u(T)>|`.
    pub deviation_inf: f64,
    /// Resolution indicator of the final `u`, see [`tail_ratio`].
    pub tail_ratio: f64,
    /// Peak tracks alive at the last peak frame.
    pub peak_count: usize,
    pub peak_tracks: usize,
    pub energy_wiener: f64,
    pub max_linf_dxu: f64,
    pub positivity_violations: usize,
    pub snapshots: usize,
}

/// In-memory result of [`run`]: the summary plus everything recorded.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub final_state: State,
    pub records: Vec<DiagRecord>,
    pub tracks: Vec<PeakTrack>,
    pub peak_frame_times: Vec<f64>,
    pub termination: Termination,
    pub blowup_cause: Option<BlowupCause>,
    pub accepted_steps: usize,
    pub rejected_steps: usize,
    pub snapshots: usize,
}

impl RunOutput {
    /// `(t, sup|d_x u|)` per recorded state.
    pub fn dxu_series(&self) -> Vec<(f64, f64)> {
        self.records.iter().map(|r| (r.t, r.linf_dxu)).collect()
    }

    pub fn peak_count(&self) -> usize {
        self.peak_frame_times
            .last()
            .map_or(0, |&t| peaks::count_peaks(&self.tracks, t))
    }
}

/// Integrate `cfg` with diagnostics and peak tracking. Snapshots go to
/// `snapshot_dir` when given.
pub fn run(cfg: &RunConfig, snapshot_dir: Option<&Path>) -> Result<RunOutput> {
    cfg.validate()?;
    let grid = cfg.grid()?;
    let system = KellerSegel::new(cfg.params, &grid, cfg.dealias)?;
    let state0 = cfg.initial_state()?;
    let mut diag = DiagnosticsRecorder::new(cfg.params, cfg.hs_order);
    let window = cfg
        .peak_window
        .unwrap_or_else(|| peaks::default_window(cfg.n));
    let mut peak_rec = PeakRecorder::new(cfg.peak_stride, cfg.peak_slope, window);
    let mut snaps = snapshot_dir.map(|dir| SnapshotWriter {
        dir: dir.to_path_buf(),
        stride: cfg.stride,
        next_mark: f64::NEG_INFINITY,
        last_t: None,
        count: 0,
        error: None,
    });
    let traj = {
        let mut observers: Vec<&mut dyn Observer> = vec![&mut diag, &mut peak_rec];
        if let Some(s) = snaps.as_mut() {
            observers.push(s);
        }
        integrator::integrate(&system, &state0, cfg.t_end, &cfg.integrator, &mut observers)?
    };
    if let Some(e) = diag.error.take() {
        return Err(Error::invalid(format!("diagnostics failed: {e}")));
    }
    let mut snapshots = 0;
    if let Some(mut s) = snaps {
        if let Some(e) = s.error.take() {
            return Err(e);
        }
        if s.last_t != Some(traj.final_state.t) {
            s.write(&traj.final_state);
            if let Some(e) = s.error.take() {
                return Err(e);
            }
        }
        snapshots = s.count;
    }
    let max_jump = cfg.peak_max_jump;
    let tracks = peaks::track_frames(&peak_rec.frame_times, &peak_rec.frames, max_jump);
    Ok(RunOutput {
        final_state: traj.final_state,
        records: diag.records,
        tracks,
        peak_frame_times: peak_rec.frame_times,
        termination: traj.termination,
        blowup_cause: traj.blowup_cause,
        accepted_steps: traj.accepted_steps,
        rejected_steps: traj.rejected_steps,
        snapshots,
    })
}

fn positivity_violations(records: &[DiagRecord]) -> usize {
    records
        .iter()
        .filter(|r| {
            let tol = 1e-8 * r.linf_u.max(1.0);
            r.min_u < -tol || r.min_v < -tol
        })
        .count()
}

/// Run `cfg` and write its output directory: `metadata.json`,
/// `diagnostics.csv`, `snapshots/t_<us>.csv` and `peaks.csv`. A blow-up
/// event is a successful run; the reason is recorded.
pub fn simulate(cfg: &RunConfig) -> Result<RunSummary> {
    cfg.validate()?;
    let dir = &cfg.out;
    let snap_dir = dir.join("snapshots");
    fs::create_dir_all(&snap_dir).map_err(io_err(&snap_dir))?;
    let out = run(cfg, Some(&snap_dir))?;

    write_diagnostics(&dir.join("diagnostics.csv"), &out.records)?;
    write_peaks(&dir.join("peaks.csv"), &out.tracks)?;

    let last = out
        .records
        .last()
        .expect("initial state is always recorded");
    let summary = RunSummary {
        dir: dir.clone(),
        termination: out.termination,
        blowup_cause: out.blowup_cause,
        t_final: out.final_state.t,
        accepted_steps: out.accepted_steps,
        rejected_steps: out.rejected_steps,
        deviation_inf: mean_deviation(&out.final_state.u),
        tail_ratio: tail_ratio(&out.final_state.u),
        peak_count: out.peak_count(),
        peak_tracks: out.tracks.len(),
        energy_wiener: last.energy_wiener,
        max_linf_dxu: out.records.iter().map(|r| r.linf_dxu).fold(0.0, f64::max),
        positivity_violations: positivity_violations(&out.records),
        snapshots: out.snapshots,
    };
    let meta = json!({
        "version": crate::VERSION,
        "config": cfg.to_kv(),
        "scenario": cfg.scenario.id(),
        "random_generator": model::RANDOM_GENERATOR,
        "termination": out.termination.as_str(),
        "blowup_cause": out.blowup_cause,
        "t_final": summary.t_final,
        "accepted_steps": summary.accepted_steps,
        "rejected_steps": summary.rejected_steps,
        "positivity_violations": summary.positivity_violations,
        "min_u": out.records.iter().map(|r| r.min_u).fold(f64::INFINITY, f64::min),
        "min_v": out.records.iter().map(|r| r.min_v).fold(f64::INFINITY, f64::min),
        "deviation_inf": summary.deviation_inf,
        "tail_ratio": summary.tail_ratio,
        "peak_count": summary.peak_count,
        "peak_tracks": summary.peak_tracks,
        "energy_wiener": summary.energy_wiener,
        "max_linf_dxu": summary.max_linf_dxu,
        "snapshots": summary.snapshots,
    });
    write_json(&dir.join("metadata.json"), &meta)?;
    Ok(summary)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let file = File::create(path).map_err(io_err(path))?;
    let mut w = BufWriter::new(file);
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n").map_err(io_err(path))?;
    w.flush().map_err(io_err(path))
}

/// Swept parameter and its values over a base run.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub base: RunConfig,
    /// Any numeric run key, e.g. `chi`.
    pub param: String,
    pub values: Vec<f64>,
}

pub const SWEEP_KEYS: &[&str] = &[
    "sweep_param",
    "sweep_values",
    "sweep_lo",
    "sweep_hi",
    "sweep_step",
];

impl SweepConfig {
    /// Run keys plus `sweep_param` and either `sweep_values` (comma list)
    /// or `sweep_lo`, `sweep_hi`, `sweep_step`.
    pub fn from_kv(map: &KeyValues) -> Result<Self> {
        let mut base = RunConfig::default();
        base.apply_kv(map, SWEEP_KEYS)?;
        let param = map
            .get("sweep_param")
            .ok_or_else(|| Error::invalid("sweep needs sweep_param"))?
            .clone();
        let values = match (
            map.get("sweep_values"),
            map.get("sweep_lo"),
            map.get("sweep_hi"),
            map.get("sweep_step"),
        ) {
            (Some(list), None, None, None) => list
                .split(',')
                .map(str::trim)
                .filter(|s| !s.is_empty())
                .map(|s| parse_value::<f64>("sweep_values", s))
                .collect::<Result<Vec<_>>>()?,
            (None, Some(lo), Some(hi), Some(step)) => {
                let lo: f64 = parse_value("sweep_lo", lo)?;
                let hi: f64 = parse_value("sweep_hi", hi)?;
                let step: f64 = parse_value("sweep_step", step)?;
                range_values(lo, hi, step)?
            }
            _ => {
                return Err(Error::invalid(
                    "sweep needs either sweep_values or all of sweep_lo, sweep_hi, sweep_step",
                ))
            }
        };
        let cfg = SweepConfig {
            base,
            param,
            values,
        };
        cfg.check_param()?;
        Ok(cfg)
    }

    fn check_param(&self) -> Result<()> {
        const NUMERIC: &[&str] = &[
            "alpha", "beta", "mu", "nu", "lambda", "r", "chi", "t_end", "rel_tol", "abs_tol",
            "seed", "n",
        ];
        if !NUMERIC.contains(&self.param.as_str()) {
            return Err(Error::invalid(format!(
                "cannot sweep '{}'; sweepable keys: {}",
                self.param,
                NUMERIC.join(", ")
            )));
        }
        Ok(())
    }

    /// Values with exact duplicates removed (first occurrence kept), plus a
    /// warning per dropped duplicate.
    pub fn deduplicated(&self) -> Result<(Vec<f64>, Vec<String>)> {
        if self.values.is_empty() {
            return Err(Error::invalid("sweep value list is empty"));
        }
        let mut seen = HashSet::new();
        let mut values = Vec::new();
        let mut warnings = Vec::new();
        for &v in &self.values {
            if !v.is_finite() {
                return Err(Error::invalid(format!("sweep value {v} is not finite")));
            }
            if seen.insert((v + 0.0).to_bits()) {
                values.push(v);
            } else {
                warnings.push(format!(
                    "duplicate sweep value {} = {} ignored",
                    self.param,
                    fmt_f64(v)
                ));
            }
        }
        Ok((values, warnings))
    }

    /// The configuration of one sweep member, writing under `base.out`.
    pub fn member(&self, value: f64) -> Result<RunConfig> {
        let mut cfg = self.base.clone();
        let text = match self.param.as_str() {
            "seed" | "n" => {
                if value.fract() != 0.0 || value < 0.0 {
                    return Err(Error::invalid(format!(
                        "{} must be a nonnegative integer, got {value}",
                        self.param
                    )));
                }
                format!("{}", value as u64)
            }
            _ => fmt_f64(value),
        };
        let mut kv = KeyValues::new();
        kv.insert(self.param.clone(), text.clone());
        cfg.apply_kv(&kv, &[])?;
        cfg.out = self.base.out.join(format!("{}_{}", self.param, text));
        Ok(cfg)
    }
}

fn range_values(lo: f64, hi: f64, step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0) || !(hi >= lo) || !lo.is_finite() || !hi.is_finite() {
        return Err(Error::invalid(
            "sweep range needs finite lo <= hi and step > 0",
        ));
    }
    let count = ((hi - lo) / step + 1e-9).floor() as usize + 1;
    if count > 100_000 {
        return Err(Error::invalid(format!(
            "sweep range has {count} values; refusing"
        )));
    }
    Ok((0..count).map(|i| lo + i as f64 * step).collect())
}

/// One row of `summary.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub value: f64,
    pub result: std::result::Result<RunSummary, String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSummary {
    pub param: String,
    pub rows: Vec<SweepRow>,
    pub warnings: Vec<String>,
}

/// Run every sweep member concurrently, one directory each, and write
/// `summary.csv`. A failed member is recorded and the others continue.
pub fn sweep(cfg: &SweepConfig) -> Result<SweepSummary> {
    let (values, warnings) = cfg.deduplicated()?;
    let members = values
        .iter()
        .map(|&v| cfg.member(v).map(|c| (v, c)))
        .collect::<Result<Vec<_>>>()?;
    fs::create_dir_all(&cfg.base.out).map_err(io_err(&cfg.base.out))?;
    let rows: Vec<SweepRow> = members
        .par_iter()
        .map(|(v, m)| SweepRow {
            value: *v,
            result: simulate(m).map_err(|e| e.to_string()),
        })
        .collect();
    let path = cfg.base.out.join("summary.csv");
    let mut w = csv::Writer::from_path(&path).map_err(csv_err(&path))?;
    w.write_record([
        cfg.param.as_str(),
        "status",
        "termination",
        "t_final",
        "deviation_inf",
        "peak_count",
        "energy_wiener",
        "tail_ratio",
        "dir",
        "error",
    ])
    .map_err(csv_err(&path))?;
    for row in &rows {
        let rec = match &row.result {
            Ok(s) => [
                fmt_f64(row.value),
                "ok".to_string(),
                s.termination.as_str().to_string(),
                fmt_f64(s.t_final),
                fmt_f64(s.deviation_inf),
                s.peak_count.to_string(),
                fmt_f64(s.energy_wiener),
                fmt_f64(s.tail_ratio),
                s.dir.display().to_string(),
                String::new(),
            ],
            Err(e) => [
                fmt_f64(row.value),
                "error".to_string(),
                String::new(),
                String::new(),
                String::new(),
                String::new(),
                String::new(),
                String::new(),
                String::new(),
                e.clone(),
            ],
        };
        w.write_record(rec).map_err(csv_err(&path))?;
    }
    w.flush().map_err(io_err(&path))?;
    Ok(SweepSummary {
        param: cfg.param.clone(),
        rows,
        warnings,
    })
}

/// JSON fit report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub a1: Option<f64>,
    pub a2: Option<f64>,
    pub a3: Option<f64>,
    pub rms_residual: Option<f64>,
    pub window: Option<[f64; 2]>,
    pub classification: Classification,
    pub status: Option<FitStatus>,
    pub iterations: Option<usize>,
    pub samples: Option<usize>,
    pub growth: Option<f64>,
    pub reason: String,
}

impl FitReport {
    pub fn from_classification(report: blowup::ClassificationReport) -> Self {
        let fit: Option<BlowupFit> = report.fit;
        FitReport {
            a1: fit.as_ref().map(|f| f.a1),
            a2: fit.as_ref().map(|f| f.a2),
            a3: fit.as_ref().map(|f| f.a3),
            rms_residual: fit.as_ref().map(|f| f.rms_residual),
            window: fit.as_ref().map(|f| f.window),
            classification: report.classification,
            status: fit.as_ref().map(|f| f.status),
            iterations: fit.as_ref().map(|f| f.iterations),
            samples: fit.as_ref().map(|f| f.samples),
            growth: report.growth,
            reason: report.reason,
        }
    }
}

/// Read `(t, y)` from a CSV with a `t` column and a `linf_dxu` (or `y`)
/// column.
pub fn read_series(path: &Path) -> Result<Vec<(f64, f64)>> {
    let mut rdr = csv::Reader::from_path(path).map_err(csv_err(path))?;
    let headers = rdr.headers().map_err(csv_err(path))?.clone();
    let col = |name: &str| headers.iter().position(|h| h == name);
    let t_col =
        col("t").ok_or_else(|| Error::invalid(format!("{}: no 't' column", path.display())))?;
    let y_col = col("linf_dxu").or_else(|| col("y")).ok_or_else(|| {
        Error::invalid(format!("{}: no 'linf_dxu' or 'y' column", path.display()))
    })?;
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(csv_err(path))?;
        let t: f64 = parse_value("t", rec.get(t_col).unwrap_or(""))?;
        let y: f64 = parse_value("linf_dxu", rec.get(y_col).unwrap_or(""))?;
        out.push((t, y));
    }
    Ok(out)
}

/// Fit the blow-up ansatz to a run directory (`diagnostics.csv` plus the
/// termination reason from `metadata.json`) or to a bare CSV file. The
/// report is written to `<dir>/fit.json` or `<file>.fit.json`.
pub fn fit(path: &Path, criteria: &ClassifyCriteria) -> Result<(FitReport, PathBuf)> {
    let (csv_path, bounded_run, out) = if path.is_dir() {
        let meta_path = path.join("metadata.json");
        let bounded = if meta_path.exists() {
            let text = fs::read_to_string(&meta_path).map_err(io_err(&meta_path))?;
            let meta: serde_json::Value = serde_json::from_str(&text)?;
            meta.get("termination").and_then(|v| v.as_str())
                == Some(Termination::ReachedTEnd.as_str())
        } else {
            false
        };
        (path.join("diagnostics.csv"), bounded, path.join("fit.json"))
    } else {
        let mut name = path.as_os_str().to_owned();
        name.push(".fit.json");
        (path.to_path_buf(), false, PathBuf::from(name))
    };
    let series = read_series(&csv_path)?;
    if series.iter().any(|&(t, y)| !t.is_finite() || y.is_nan()) {
        return Err(Error::invalid(format!(
            "{}: non-finite samples",
            csv_path.display()
        )));
    }
    let report = FitReport::from_classification(blowup::classify(&series, bounded_run, criteria));
    write_json(&out, &report)?;
    Ok((report, out))
}

/// Keys accepted by [`constants_from_kv`] besides the run keys.
pub const CONSTANT_KEYS: &[&str] = &[
    "c_se1",
    "c_se2",
    "c_se3",
    "c_se4",
    "c_se2_at_1_1",
    "c_kp",
    "c_kpv",
    "c_gn",
    "c_i",
    "c_si",
    "l1_u0",
    "mean_u0",
    "linf_u0",
    "linf_v0",
    "h3_u0",
    "h4_v0",
    "energy_wiener0",
    "c_fs_tail_tol",
    "width_divisor",
];

/// Constants report for a parameter file: system parameters and initial
/// data as in a run configuration, embedding constants `c_*`, and optional
/// explicit data norms overriding those computed from the initial state.
pub fn constants_from_kv(map: &KeyValues) -> Result<ConstantsReport> {
    let mut cfg = RunConfig::default();
    cfg.apply_kv(map, CONSTANT_KEYS)?;
    cfg.params.validate()?;
    let mut c = EmbeddingConstants::default();
    let mut opts = ReportOptions::default();
    let state = cfg.initial_state()?;
    let mut norms = DataNorms::from_state(&state, cfg.params.beta)?;
    for (k, v) in map {
        let k = k.as_str();
        let slot: Option<&mut f64> = match k {
            "c_se1" => Some(&mut c.c_se1),
            "c_se2" => Some(&mut c.c_se2),
            "c_se3" => Some(&mut c.c_se3),
            "c_se4" => Some(&mut c.c_se4),
            "c_se2_at_1_1" => Some(&mut c.c_se2_at_1_1),
            "c_kp" => Some(&mut c.c_kp),
            "c_kpv" => Some(&mut c.c_kpv),
            "c_gn" => Some(&mut c.c_gn),
            "c_i" => Some(&mut c.c_i),
            "c_si" => Some(&mut c.c_si),
            "l1_u0" => Some(&mut norms.l1_u0),
            "mean_u0" => Some(&mut norms.mean_u0),
            "linf_u0" => Some(&mut norms.linf_u0),
            "linf_v0" => Some(&mut norms.linf_v0),
            "h3_u0" => Some(&mut norms.h3_u0),
            "h4_v0" => Some(&mut norms.h4_v0),
            "energy_wiener0" => Some(&mut norms.energy_wiener0),
            "c_fs_tail_tol" => Some(&mut opts.c_fs_tail_tol),
            _ => None,
        };
        if let Some(slot) = slot {
            *slot = parse_value(k, v)?;
        } else if k == "width_divisor" {
            opts.width_divisor = parse_value(k, v)?;
        }
    }
    constants::evaluate(&cfg.params, &c, &norms, &opts)
}

/// Verification suites.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Suite {
    Symbols,
    Linear,
    Mass,
    Logistic,
    Steady,
    Wiener,
    Constants,
}

impl Suite {
    pub const ALL: [Suite; 7] = [
        Suite::Symbols,
        Suite::Linear,
        Suite::Mass,
        Suite::Logistic,
        Suite::Steady,
        Suite::Wiener,
        Suite::Constants,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Suite::Symbols => "symbols",
            Suite::Linear => "linear",
            Suite::Mass => "mass",
            Suite::Logistic => "logistic",
            Suite::Steady => "steady",
            Suite::Wiener => "wiener",
            Suite::Constants => "constants",
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Suite::ALL
            .into_iter()
            .find(|x| x.name() == s)
            .ok_or_else(|| {
                Error::invalid(format!(
                    "unknown suite '{s}' (expected one of symbols, linear, mass, logistic, steady, wiener, constants, all)"
                ))
            })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SuiteStatus {
    Pass,
    Fail,
    /// Hypotheses not met; nothing was asserted.
    Skipped,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub measured: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl Check {
    fn at_most(name: impl Into<String>, measured: f64, tolerance: f64) -> Self {
        Check {
            name: name.into(),
            measured,
            tolerance,
            passed: measured <= tolerance,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteResult {
    pub suite: Suite,
    pub status: SuiteStatus,
    pub checks: Vec<Check>,
    pub detail: String,
}

impl SuiteResult {
    fn from_checks(suite: Suite, checks: Vec<Check>, detail: impl Into<String>) -> Self {
        let status = if checks.iter().all(|c| c.passed) {
            SuiteStatus::Pass
        } else {
            SuiteStatus::Fail
        };
        SuiteResult {
            suite,
            status,
            checks,
            detail: detail.into(),
        }
    }

    fn skipped(suite: Suite, detail: impl Into<String>) -> Self {
        SuiteResult {
            suite,
            status: SuiteStatus::Skipped,
            checks: Vec::new(),
            detail: detail.into(),
        }
    }

    pub fn failed_checks(&self) -> Vec<&str> {
        self.checks
            .iter()
            .filter(|c| !c.passed)
            .map(|c| c.name.as_str())
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub results: Vec<SuiteResult>,
    pub passed: bool,
}

/// Run the selected suites. `overrides` (run keys) are applied on top of
/// each simulation-based suite's own configuration (`mass`, `steady`,
/// `wiener`).
pub fn verify(suites: &[Suite], overrides: Option<&KeyValues>) -> Result<VerifyReport> {
    let mut results = Vec::new();
    for &s in suites {
        let r = match s {
            Suite::Symbols => suite_symbols()?,
            Suite::Linear => suite_linear()?,
            Suite::Mass => suite_mass(overrides)?,
            Suite::Logistic => suite_logistic()?,
            Suite::Steady => suite_steady(overrides)?,
            Suite::Wiener => suite_wiener(overrides)?,
            Suite::Constants => suite_constants()?,
        };
        results.push(r);
    }
    let passed = results.iter().all(|r| r.status != SuiteStatus::Fail);
    Ok(VerifyReport { results, passed })
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

/// Analytic single-mode multiplier identities and Parseval at n = 64.
pub fn suite_symbols() -> Result<SuiteResult> {
    let g = Grid::new(64)?;
    let sin = SpectralField::from_fn(&g, f64::sin);
    let cos = SpectralField::from_fn(&g, f64::cos);
    let neg_cos = &cos * -1.0;
    let mut checks = vec![
        Check::at_most(
            "H sin = -cos",
            max_abs_diff(sin.hilbert().values(), neg_cos.values()),
            1e-12,
        ),
        Check::at_most(
            "Lambda sin = sin",
            max_abs_diff(sin.fractional_laplacian(1.0)?.values(), sin.values()),
            1e-12,
        ),
        Check::at_most(
            "d_x sin = cos",
            max_abs_diff(sin.derivative().values(), cos.values()),
            1e-12,
        ),
    ];
    let f = SpectralField::from_fn(&g, |x| (x.sin()).exp() + 0.3 * (5.0 * x).cos());
    let drift = f.drift_operator(2.0)?;
    let minus_dx = &f.derivative() * -1.0;
    checks.push(Check::at_most(
        "beta = 2 drift = -d_x",
        max_abs_diff(drift.values(), minus_dx.values()),
        1e-12,
    ));
    let s3 = SpectralField::from_fn(&g, |x| (3.0 * x).sin());
    let expect = &s3 * 3f64.powf(1.5);
    checks.push(Check::at_most(
        "Lambda^1.5 sin 3x = 3^1.5 sin 3x",
        max_abs_diff(s3.fractional_laplacian(1.5)?.values(), expect.values()),
        1e-12,
    ));
    let phys = diagnostics::l2_norm(&f);
    let spec = diagnostics::l2_norm_fourier(&f);
    checks.push(Check::at_most(
        "Parseval (relative)",
        ((phys - spec) / phys).abs(),
        1e-10,
    ));
    Ok(SuiteResult::from_checks(Suite::Symbols, checks, "n = 64"))
}

/// `u = 0`, `v0 = cos x`, `nu = lambda = 1`, `beta = 2`: `v(1) = e^-2 cos x`.
pub fn suite_linear() -> Result<SuiteResult> {
    let g = Grid::new(128)?;
    let params = SystemParams {
        alpha: 1.0,
        beta: 2.0,
        mu: 1.0,
        nu: 1.0,
        lambda: 1.0,
        r: 0.0,
        chi: 1.0,
    };
    let system = KellerSegel::new(params, &g, false)?;
    let s0 = State::new(
        SpectralField::zeros(&g),
        SpectralField::from_fn(&g, f64::cos),
        0.0,
    )?;
    let cfg = IntegratorConfig {
        rel_tol: 1e-9,
        abs_tol: 1e-12,
        ..Default::default()
    };
    let traj = integrator::integrate(&system, &s0, 1.0, &cfg, &mut [])?;
    let exact = SpectralField::from_fn(&g, |x| (-2.0f64).exp() * x.cos());
    let err = max_abs_diff(traj.final_state.v.values(), exact.values());
    Ok(SuiteResult::from_checks(
        Suite::Linear,
        vec![Check::at_most("sup |v(1) - e^-2 cos x|", err, 1e-6)],
        "n = 128, explicit, rel_tol 1e-9",
    ))
}

fn suite_run_config(defaults: &[(&str, &str)], overrides: Option<&KeyValues>) -> Result<RunConfig> {
    let mut map: KeyValues = defaults
        .iter()
        .map(|(k, v)| (k.to_string(), v.to_string()))
        .collect();
    if let Some(o) = overrides {
        for (k, v) in o {
            map.insert(k.clone(), v.clone());
        }
        // explicit modes imply a custom scenario unless one is named
        if (o.contains_key("u_modes") || o.contains_key("v_modes")) && !o.contains_key("scenario") {
            map.insert("scenario".into(), "custom".into());
        }
        if o.get("scenario").is_some_and(|s| s != "custom") {
            map.remove("u_modes");
            map.remove("v_modes");
        }
    }
    RunConfig::from_kv(&map)
}

/// Mass laws with `r = 0`: `||u||_1` conserved, `||v||_1` follows its
/// closed form.
pub fn suite_mass(overrides: Option<&KeyValues>) -> Result<SuiteResult> {
    let cfg = suite_run_config(
        &[
            ("scenario", "A-sin8"),
            ("alpha", "1.5"),
            ("beta", "2"),
            ("chi", "1"),
            ("r", "0"),
            ("n", "1024"),
            ("t_end", "5"),
            ("rel_tol", "1e-8"),
            ("abs_tol", "1e-10"),
            // beta = 2 makes explicit steps stiffness-bound (~1e-5 at n = 1024)
            ("mode", "integrating_factor"),
        ],
        overrides,
    )?;
    if cfg.params.r != 0.0 {
        return Ok(SuiteResult::skipped(
            Suite::Mass,
            "hypothesis not met, skipped: mass laws need r = 0",
        ));
    }
    let out = run(&cfg, None)?;
    if out.records.iter().any(|r| r.min_u < 0.0 || r.min_v < 0.0) {
        return Ok(SuiteResult::skipped(
            Suite::Mass,
            "hypothesis not met, skipped: L1 mass laws need u, v >= 0 and the run went negative",
        ));
    }
    let first = out.records[0];
    let drift = out
        .records
        .iter()
        .map(|r| ((r.l1_u - first.l1_u) / first.l1_u).abs())
        .fold(0.0, f64::max);
    let v_err = out
        .records
        .iter()
        .map(|r| {
            (r.l1_v - diagnostics::v_l1_exact(first.l1_u, first.l1_v, cfg.params.lambda, r.t)).abs()
        })
        .fold(0.0, f64::max);
    Ok(SuiteResult::from_checks(
        Suite::Mass,
        vec![
            Check::at_most("relative L1 drift of u", drift, 1e-6),
            Check::at_most("|L1(v) - closed form|", v_err, 1e-5),
        ],
        format!(
            "{} alpha={} beta={} chi={} n={} t<={} ({})",
            cfg.scenario,
            cfg.params.alpha,
            cfg.params.beta,
            cfg.params.chi,
            cfg.n,
            out.final_state.t,
            out.termination.as_str()
        ),
    ))
}

/// `d/dt ||u||_1 = r (||u||_1 - ||u||_2^2)` at `t = 0` for `u0 = 2`,
/// `r = 1` (i.e. `-4 pi`), measured by Richardson-extrapolated forward
/// differences over a step ladder.
pub fn suite_logistic() -> Result<SuiteResult> {
    let g = Grid::new(32)?;
    let params = SystemParams::reduced(1.0, 1.0, 1.0);
    let s0 = State::new(
        SpectralField::constant(&g, 2.0),
        SpectralField::constant(&g, 2.0),
        0.0,
    )?;
    let l1_0 = diagnostics::l1_norm(&s0.u);
    // Loose tolerances: each trial step must be accepted as taken.
    let cfg = IntegratorConfig {
        rel_tol: 1.0,
        abs_tol: 1.0,
        ..Default::default()
    };
    let target = -4.0 * PI;
    let mut diffs = Vec::new();
    for j in 0..5 {
        let h = 1e-2 / f64::from(1u32 << j);
        let (s1, outcome) = integrator::step(&s0, &params, h, &cfg)?;
        if !outcome.accepted {
            return Err(Error::invalid("logistic probe step rejected"));
        }
        diffs.push((diagnostics::l1_norm(&s1.u) - l1_0) / h);
    }
    let rich: Vec<f64> = diffs.windows(2).map(|w| 2.0 * w[1] - w[0]).collect();
    let errs: Vec<f64> = rich.iter().map(|d| (d - target).abs()).collect();
    let monotone = errs.windows(2).all(|w| w[1] <= w[0] * 1.01 || w[1] < 1e-9);
    let mut checks = vec![Check::at_most(
        "|d/dt L1(u) + 4 pi|",
        *errs.last().expect("ladder"),
        1e-4,
    )];
    checks.push(Check {
        name: "error decreases under refinement".into(),
        measured: if monotone { 1.0 } else { 0.0 },
        tolerance: 1.0,
        passed: monotone,
    });
    Ok(SuiteResult::from_checks(
        Suite::Logistic,
        checks,
        "u0 = 2, r = 1, steps 1e-2 / 2^j",
    ))
}

/// The reduced system stays at `(1, 1)`.
pub fn suite_steady(overrides: Option<&KeyValues>) -> Result<SuiteResult> {
    let cfg = suite_run_config(
        &[
            ("scenario", "custom"),
            ("u_modes", "0:1"),
            ("v_modes", "0:1"),
            ("alpha", "1"),
            ("beta", "1"),
            ("chi", "20"),
            ("n", "256"),
            ("t_end", "10"),
        ],
        overrides,
    )?;
    let p = cfg.params;
    if !(p.mu == 1.0 && p.nu == 1.0 && p.lambda == 1.0 && p.r == 1.0) {
        return Ok(SuiteResult::skipped(
            Suite::Steady,
            "hypothesis not met, skipped: (1, 1) is a steady state of the reduced system only",
        ));
    }
    let mut worst = 0.0f64;
    let mut obs = |s: &State, _: &StepInfo| {
        let du =
            s.u.values()
                .iter()
                .map(|x| (x - 1.0).abs())
                .fold(0.0, f64::max);
        let dv =
            s.v.values()
                .iter()
                .map(|x| (x - 1.0).abs())
                .fold(0.0, f64::max);
        worst = worst.max(du).max(dv);
    };
    let grid = cfg.grid()?;
    let system = KellerSegel::new(p, &grid, cfg.dealias)?;
    let s0 = cfg.initial_state()?;
    let traj = integrator::integrate(&system, &s0, cfg.t_end, &cfg.integrator, &mut [&mut obs])?;
    let mut checks = vec![Check::at_most("sup deviation from (1, 1)", worst, 1e-9)];
    checks.push(Check {
        name: "reached t_end".into(),
        measured: traj.t_final(),
        tolerance: cfg.t_end,
        passed: traj.termination == Termination::ReachedTEnd,
    });
    Ok(SuiteResult::from_checks(
        Suite::Steady,
        checks,
        format!("chi = {}, n = {}", p.chi, cfg.n),
    ))
}

/// Non-increase of `|u|_1 + |v|_beta` under the small-data hypotheses.
pub fn suite_wiener(overrides: Option<&KeyValues>) -> Result<SuiteResult> {
    let cfg = suite_run_config(
        &[
            ("scenario", "custom"),
            ("u_modes", "0:1,1:0.05"),
            ("v_modes", "0:0.25,1:0.05"),
            ("alpha", "1.2"),
            ("beta", "1.5"),
            ("mu", "4"),
            ("nu", "8"),
            ("lambda", "4"),
            ("r", "0"),
            ("chi", "1"),
            ("n", "256"),
            ("t_end", "5"),
            ("rel_tol", "1e-10"),
            ("abs_tol", "1e-13"),
        ],
        overrides,
    )?;
    let p = cfg.params;
    let s0 = cfg.initial_state()?;
    let norms = DataNorms::from_state(&s0, p.beta)?;
    let threshold = constants::smallness_threshold(&p, norms.mean_u0);
    let structural =
        p.r == 0.0 && p.mu > 1.0 && p.beta >= 1.0 && p.beta <= 2.0 && 1.0 + p.alpha >= 2.0;
    if !structural {
        return Ok(SuiteResult::skipped(
            Suite::Wiener,
            "hypothesis not met, skipped: needs r = 0, mu > 1, 1 <= beta <= 2 <= 1 + alpha",
        ));
    }
    if !(norms.energy_wiener0 < threshold) {
        return Ok(SuiteResult::skipped(
            Suite::Wiener,
            format!(
                "hypothesis not met, skipped: E(0) = {} is not below min(mu-1, nu-<u0>, lambda/2) = {}",
                norms.energy_wiener0, threshold
            ),
        ));
    }
    let out = run(&cfg, None)?;
    let e0 = out.records[0].energy_wiener;
    let excess = out
        .records
        .iter()
        .map(|r| r.energy_wiener - e0)
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(SuiteResult::from_checks(
        Suite::Wiener,
        vec![Check::at_most("max_t E(t) - E(0)", excess, 1e-8)],
        format!(
            "E(0) = {e0}, threshold = {threshold}, t <= {}",
            out.final_state.t
        ),
    ))
}

/// Maximize the concave `4 omega xi - (mu/2) xi^alpha` by golden section.
pub fn c1_numerical(omega: f64, mu: f64, alpha: f64) -> f64 {
    let f = |xi: f64| 4.0 * omega * xi - mu / 2.0 * xi.powf(alpha);
    // The maximizer lies below the root of f'(xi) = 0 doubled.
    let xi_star = (8.0 * omega / (mu * alpha)).powf(1.0 / (alpha - 1.0));
    let (mut a, mut b) = (0.0, 2.0 * xi_star + 1.0);
    let gr = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - gr * (b - a);
    let mut d = a + gr * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..200 {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - gr * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + gr * (b - a);
            fd = f(d);
        }
    }
    f(0.5 * (a + b))
}

/// Regression checks of the explicit constants.
pub fn suite_constants() -> Result<SuiteResult> {
    let mut checks = Vec::new();
    let p = SystemParams {
        mu: 8.0,
        ..SystemParams::reduced(2.0, 2.0, 1.0)
    };
    checks.push(Check::at_most(
        "C1(omega=1, mu=8, alpha=2) - 1",
        (constants::c1(&p, 1.0)? - 1.0).abs(),
        0.0,
    ));

    let mut worst = 0.0f64;
    for &omega in &[0.1, 0.5, 1.0, 2.0, 5.0] {
        for &mu in &[0.5, 1.0, 2.0, 4.0, 8.0] {
            for &alpha in &[1.2, 1.4, 1.6, 1.8, 2.0] {
                let p = SystemParams {
                    mu,
                    ..SystemParams::reduced(alpha, 2.0, 1.0)
                };
                let closed = constants::c1(&p, omega)?;
                let num = c1_numerical(omega, mu, alpha);
                worst = worst.max(((closed - num) / closed.abs().max(f64::MIN_POSITIVE)).abs());
            }
        }
    }
    checks.push(Check::at_most(
        "C1 closed form vs numerical max (5x5x5, relative)",
        worst,
        1e-8,
    ));

    let k = 1000;
    let a = constants::c_fs_truncated(2.0, 2.0, 1.0, 1.0, k)?;
    let b = constants::c_fs_truncated(2.0, 2.0, 1.0, 1.0, 2 * k)?;
    checks.push(Check::at_most(
        "c_fs(2,2,1,1) change under truncation doubling minus tail bound",
        (b.value - a.value).abs() - a.tail_bound,
        0.0,
    ));
    let expected = 12.0 * PI / 2f64.ln() * (6.0 * 2f64.sqrt()).ln();
    checks.push(Check::at_most(
        "peak bound at unit inputs",
        (constants::peak_count_bound(1.0, 1.0) - expected).abs(),
        1e-9,
    ));
    Ok(SuiteResult::from_checks(
        Suite::Constants,
        checks,
        "closed forms against direct evaluation",
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kv_parsing() {
        let m = parse_kv("# run\nalpha = 1.5\n\nchi=20 # strong\n").unwrap();
        assert_eq!(m["alpha"], "1.5");
        assert_eq!(m["chi"], "20");
        assert!(parse_kv("alpha 1").is_err());
        assert!(parse_kv("a=1\na=2").is_err());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let m = parse_kv("alpah = 1").unwrap();
        let err = RunConfig::from_kv(&m).unwrap_err();
        assert!(err.to_string().contains("alpah"));
    }

    #[test]
    fn config_round_trip() {
        let m = parse_kv(
            "scenario = custom\nu_modes = 0:1, 3:0.1:-0.2\nv_modes = 0:2\nalpha = 0.5\nmode = integrating_factor\n\
             dealias = true\nseed = 7\ninitial_step = 1e-4",
        )
        .unwrap();
        let cfg = RunConfig::from_kv(&m).unwrap();
        assert_eq!(cfg.integrator.mode, StepMode::IntegratingFactor);
        assert!(cfg.dealias);
        assert_eq!(RunConfig::from_kv(&cfg.to_kv()).unwrap(), cfg);
        assert_eq!(
            RunConfig::from_kv(&RunConfig::default().to_kv()).unwrap(),
            RunConfig::default()
        );
    }

    #[test]
    fn modes_need_custom() {
        let m = parse_kv("scenario = A-sin8\nu_modes = 0:1").unwrap();
        assert!(RunConfig::from_kv(&m).is_err());
        let m = parse_kv("scenario = custom\nu_modes = 0:1").unwrap();
        assert!(RunConfig::from_kv(&m).is_err());
    }

    #[test]
    fn tail_ratio_flags_grid_scale_modes() {
        let g = Grid::new(64).unwrap();
        let smooth = SpectralField::from_fn(&g, |x| 1.0 + x.cos());
        assert!(tail_ratio(&smooth) < 1e-14);
        let rough = SpectralField::from_fn(&g, |x| x.cos() + 0.5 * (20.0 * x).cos());
        assert!((tail_ratio(&rough) - 0.5).abs() < 1e-12);
        assert_eq!(tail_ratio(&SpectralField::constant(&g, 2.0)), 0.0);
    }

    #[test]
    fn snapshot_names() {
        assert_eq!(snapshot_name(0.0), "t_000000000000.csv");
        assert_eq!(snapshot_name(0.5), "t_000000500000.csv");
        assert_eq!(snapshot_name(30.0), "t_000030000000.csv");
    }

    #[test]
    fn float_formatting_round_trips() {
        for x in [0.1, 1.0 / 3.0, 1e-300, 12345.678, -0.0, 2.5e20] {
            assert_eq!(fmt_f64(x).parse::<f64>().unwrap().to_bits(), x.to_bits());
        }
    }

    #[test]
    fn sweep_values() {
        let m = parse_kv("sweep_param = chi\nsweep_values = 5, 20, 5").unwrap();
        let s = SweepConfig::from_kv(&m).unwrap();
        let (v, w) = s.deduplicated().unwrap();
        assert_eq!(v, vec![5.0, 20.0]);
        assert_eq!(w.len(), 1);

        let m =
            parse_kv("sweep_param = chi\nsweep_lo = 5\nsweep_hi = 20\nsweep_step = 0.5").unwrap();
        let s = SweepConfig::from_kv(&m).unwrap();
        assert_eq!(s.values.len(), 31);
        assert_eq!(*s.values.last().unwrap(), 20.0);

        let m = parse_kv("sweep_param = chi\nsweep_values = ").unwrap();
        assert!(SweepConfig::from_kv(&m).unwrap().deduplicated().is_err());
        let m = parse_kv("sweep_param = scenario\nsweep_values = 1").unwrap();
        assert!(SweepConfig::from_kv(&m).is_err());
    }

    #[test]
    fn sweep_member_dirs() {
        let m = parse_kv("sweep_param = chi\nsweep_values = 5\nout = sw").unwrap();
        let s = SweepConfig::from_kv(&m).unwrap();
        let c = s.member(5.0).unwrap();
        assert_eq!(c.params.chi, 5.0);
        assert_eq!(c.out, PathBuf::from("sw/chi_5.0"));
    }

    #[test]
    fn fast_suites_pass() {
        for s in [
            Suite::Symbols,
            Suite::Linear,
            Suite::Logistic,
            Suite::Constants,
        ] {
            let r = verify(&[s], None).unwrap();
            assert!(r.passed, "{:?}", r.results);
        }
    }

    #[test]
    fn wiener_skips_large_data() {
        let o = parse_kv("v_modes = 0:0.25,1:2").unwrap();
        let r = suite_wiener(Some(&o)).unwrap();
        assert_eq!(r.status, SuiteStatus::Skipped);
        assert!(r.detail.contains("hypothesis not met"));
    }

    #[test]
    fn c1_numerical_matches() {
        let p = SystemParams {
            mu: 2.0,
            ..SystemParams::reduced(1.5, 2.0, 1.0)
        };
        let closed = constants::c1(&p, 0.7).unwrap();
        assert!((c1_numerical(0.7, 2.0, 1.5) - closed).abs() < 1e-10 * closed);
    }
}
