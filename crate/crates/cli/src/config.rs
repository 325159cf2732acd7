//! Strict TOML experiment configuration with unit-suffixed keys.
//!
//! Every physical quantity carries its unit in the key name (`_GHz`, `_MHz`,
//! `_ns`, `_Phi0`, `_um`). Values are converted to rad/ns and ns on parsing.
//! Unknown keys are rejected; a key whose stem matches a known key but whose
//! unit suffix differs is reported as a unit mismatch.

use std::path::{Path, PathBuf};

use lambda_eit::device::{DeviceParams, DriveConfig};
use lambda_eit::presets;
use lambda_eit::pulselab::{ProbePulse, Segment, StorageProtocol, DEFAULT_RAMP_NS};
use lambda_eit::units::{ghz, mhz, to_ghz, to_mhz};
use serde::{Deserialize, Serialize};
use toml::{Table, Value};

use crate::error::ConfigError;

type CfgResult<T> = std::result::Result<T, ConfigError>;

const DEVICE_KEYS: &[&str] = &[
    "E_C_GHz",
    "E_J0_GHz",
    "asymmetry",
    "flux_bias_Phi0",
    "g_MHz",
    "gamma_MHz",
    "gamma_phi_MHz",
    "kappa_MHz",
    "omega_r_GHz",
    "omega_r_dressed_GHz",
    "omega_q_GHz",
    "omega_q_dressed_GHz",
    "length_um",
    "C0_MHz_per_Phi0sq",
    "C1_MHz_per_Phi0",
];
const DRIVE_KEYS: &[&str] = &[
    "omega_p_rabi_MHz",
    "omega_p_GHz",
    "delta_phi_Phi0",
    "eps_phi_MHz",
    "omega_mod_MHz",
    "omega_phi_rabi_MHz",
];
const PULSE_KEYS: &[&str] = &["amp_MHz", "tau_d_ns", "t0_ns", "carrier_GHz", "t_start_ns", "t_stop_ns", "dt_ns"];
const SCHEDULE_KEYS: &[&str] = &["ramp_ns", "write_level_MHz", "read_level_MHz", "t_c_ns", "t_s_ns", "segments"];
const SEGMENT_KEYS: &[&str] = &["t_start_ns", "t_end_ns", "level_MHz"];
const SOLVER_KEYS: &[&str] = &["n_fock", "rtol", "atol", "frame", "parallel"];
const SWEEP_KEYS: &[&str] = &["axis", "start", "stop", "points", "probe_center_GHz", "probe_span_MHz", "probe_points"];
const OUTPUT_KEYS: &[&str] = &["directory", "formats"];
const SECTIONS: &[(&str, &[&str])] = &[
    ("device", DEVICE_KEYS),
    ("drive", DRIVE_KEYS),
    ("pulse", PULSE_KEYS),
    ("schedule", SCHEDULE_KEYS),
    ("solver", SOLVER_KEYS),
    ("sweep", SWEEP_KEYS),
    ("output", OUTPUT_KEYS),
];
const UNIT_SUFFIXES: &[&str] = &["GHz", "MHz", "kHz", "Hz", "ns", "us", "ms", "s", "Phi0", "um", "mm", "m", "dBm", "W"];

/// Which solver family produces spectra and pulses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverFrame {
    Effective,
    Lab,
    Analytic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub n_fock: usize,
    pub rtol: f64,
    pub atol: f64,
    pub frame: SolverFrame,
    /// Worker count; all cores when absent.
    pub parallel: Option<usize>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            n_fock: 3,
            rtol: 1e-8,
            atol: 1e-12,
            frame: SolverFrame::Effective,
            parallel: None,
        }
    }
}

/// Quantity swept by a preset.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SweepAxis {
    #[serde(rename = "delta_phi_Phi0")]
    DeltaPhi,
    #[serde(rename = "omega_mod_MHz")]
    OmegaMod,
    #[serde(rename = "omega_p_rabi_MHz")]
    OmegaPRabi,
    #[serde(rename = "omega_phi_MHz")]
    OmegaPhi,
    #[serde(rename = "t_s_ns")]
    StorageTime,
    #[serde(rename = "t_c_ns")]
    TurnOffTime,
    #[serde(rename = "omega_retrieve_MHz")]
    OmegaRetrieve,
}

impl SweepAxis {
    pub const ALL: [SweepAxis; 7] = [
        SweepAxis::DeltaPhi,
        SweepAxis::OmegaMod,
        SweepAxis::OmegaPRabi,
        SweepAxis::OmegaPhi,
        SweepAxis::StorageTime,
        SweepAxis::TurnOffTime,
        SweepAxis::OmegaRetrieve,
    ];

    /// Column and config name, including the unit.
    pub fn name(self) -> &'static str {
        match self {
            SweepAxis::DeltaPhi => "delta_phi_Phi0",
            SweepAxis::OmegaMod => "omega_mod_MHz",
            SweepAxis::OmegaPRabi => "omega_p_rabi_MHz",
            SweepAxis::OmegaPhi => "omega_phi_MHz",
            SweepAxis::StorageTime => "t_s_ns",
            SweepAxis::TurnOffTime => "t_c_ns",
            SweepAxis::OmegaRetrieve => "omega_retrieve_MHz",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|a| a.name() == name)
    }

    fn is_mhz(self) -> bool {
        self.name().ends_with("_MHz")
    }

    /// Convert a value in the axis unit to internal units.
    pub fn to_internal(self, v: f64) -> f64 {
        if self.is_mhz() {
            mhz(v)
        } else {
            v
        }
    }

    /// Convert an internal value to the axis unit.
    pub fn to_display(self, v: f64) -> f64 {
        if self.is_mhz() {
            to_mhz(v)
        } else {
            v
        }
    }
}

/// Outer sweep of a preset, in internal units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub axis: SweepAxis,
    pub start: f64,
    pub stop: f64,
    pub points: usize,
}

impl SweepConfig {
    pub fn new(axis: SweepAxis, start_display: f64, stop_display: f64, points: usize) -> Self {
        Self {
            axis,
            start: axis.to_internal(start_display),
            stop: axis.to_internal(stop_display),
            points,
        }
    }

    pub fn values(&self) -> Vec<f64> {
        if self.points == 1 {
            return vec![self.start];
        }
        (0..self.points)
            .map(|k| self.start + (self.stop - self.start) * k as f64 / (self.points - 1) as f64)
            .collect()
    }
}

/// Probe-frequency grid of continuous-wave spectra.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeGridConfig {
    /// Grid centre (rad/ns); the preset chooses when absent.
    pub center: Option<f64>,
    /// Full span (rad/ns); the preset chooses when absent.
    pub span: Option<f64>,
    pub points: Option<usize>,
}

/// Probe pulse and pulse time grid; absent fields take preset defaults.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PulseConfig {
    pub amp: Option<f64>,
    pub tau_d: Option<f64>,
    pub t0: Option<f64>,
    pub carrier: Option<f64>,
    pub t_start: Option<f64>,
    pub t_stop: Option<f64>,
    pub dt: Option<f64>,
}

/// A resolved pulse with its time grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PulseRun {
    pub pulse: ProbePulse,
    pub t_start: f64,
    pub t_stop: f64,
    pub dt: f64,
}

impl PulseConfig {
    /// Fill gaps with the preset's duration and the drive carrier.
    ///
    /// The default grid starts `4τ_d` before the centre and ends `extra` ns
    /// after `5τ_d` past it.
    pub fn resolve(&self, default_tau: f64, drive: &DriveConfig, extra: f64) -> PulseRun {
        let tau_d = self.tau_d.unwrap_or(default_tau);
        let t0 = self.t0.unwrap_or(0.0);
        let pulse = ProbePulse {
            amp: self.amp.unwrap_or(mhz(presets::PULSE_RABI_MHZ)),
            tau_d,
            t0,
            carrier: self.carrier.unwrap_or(drive.omega_p),
        };
        PulseRun {
            pulse,
            t_start: self.t_start.unwrap_or(t0 - 4.0 * tau_d),
            t_stop: self.t_stop.unwrap_or(t0 + 5.0 * tau_d + extra),
            dt: self.dt.unwrap_or(if tau_d >= 200.0 { 2.0 } else { 1.0 }),
        }
    }
}

/// Modulation protocol for pulse presets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScheduleConfig {
    pub ramp: f64,
    pub write_level: f64,
    pub read_level: f64,
    /// Turn-off time; `t₀ + τ_d` of the pulse when absent.
    pub t_c: Option<f64>,
    pub t_s: f64,
    /// Explicit segments, used by presets that take an arbitrary schedule.
    pub segments: Vec<Segment>,
}

impl Default for ScheduleConfig {
    fn default() -> Self {
        Self {
            ramp: DEFAULT_RAMP_NS,
            write_level: mhz(presets::MOTIONAL_REFERENCE_RABI_MHZ),
            read_level: mhz(presets::MOTIONAL_REFERENCE_RABI_MHZ),
            t_c: None,
            t_s: 40.0,
            segments: Vec::new(),
        }
    }
}

impl ScheduleConfig {
    pub fn protocol(&self, pulse: &ProbePulse) -> StorageProtocol {
        StorageProtocol {
            write_level: self.write_level,
            read_level: self.read_level,
            t_c: self.t_c.unwrap_or(pulse.t0 + pulse.tau_d),
            t_s: self.t_s,
            ramp: self.ramp,
        }
    }
}

/// Output file kinds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Csv,
    Json,
    Svg,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputConfig {
    pub directory: PathBuf,
    pub formats: Vec<Format>,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            directory: PathBuf::from("out"),
            formats: vec![Format::Csv, Format::Json],
        }
    }
}

/// A fully validated experiment configuration in internal units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub device: DeviceParams,
    pub drive: DriveConfig,
    pub pulse: PulseConfig,
    pub schedule: ScheduleConfig,
    pub solver: SolverConfig,
    pub sweep: Option<SweepConfig>,
    pub probe_grid: ProbeGridConfig,
    pub output: OutputConfig,
    /// The configuration text as read.
    pub source: String,
}

/// Read and validate a configuration file.
pub fn parse_config(path: &Path) -> CfgResult<ExperimentConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| ConfigError::new(format!("cannot read {}: {e}", path.display())))?;
    parse_config_str(&text)
}

/// Validate configuration text.
pub fn parse_config_str(text: &str) -> CfgResult<ExperimentConfig> {
    let root: Table = text.parse::<Table>().map_err(|e| {
        let line = e.span().map(|s| line_of_offset(text, s.start));
        ConfigError {
            message: e.message().to_string(),
            key: None,
            line,
        }
    })?;
    let lines = KeyLines::new(text);
    for (name, value) in &root {
        let Some((_, keys)) = SECTIONS.iter().find(|(s, _)| s == name) else {
            return Err(ConfigError::at(
                format!("unknown section; expected one of {}", SECTIONS.iter().map(|s| s.0).collect::<Vec<_>>().join(", ")),
                name,
                lines.section(name),
            ));
        };
        let Value::Table(table) = value else {
            return Err(ConfigError::at("must be a table", name, lines.section(name)));
        };
        check_keys(name, table, keys, &lines)?;
    }
    let section = |name: &str| -> Table {
        match root.get(name) {
            Some(Value::Table(t)) => t.clone(),
            _ => Table::new(),
        }
    };
    let reader = |name: &'static str| Reader {
        section: name,
        table: section(name),
        lines: &lines,
    };
    let Some(Value::Table(_)) = root.get("device") else {
        return Err(ConfigError::new("missing required section [device]"));
    };
    let device = parse_device(&reader("device"))?;
    let drive = parse_drive(&reader("drive"), &device)?;
    let pulse = parse_pulse(&reader("pulse"))?;
    let schedule = parse_schedule(&reader("schedule"), &lines)?;
    let solver = parse_solver(&reader("solver"))?;
    let (sweep, probe_grid) = parse_sweep(&reader("sweep"))?;
    let output = parse_output(&reader("output"))?;
    Ok(ExperimentConfig {
        device,
        drive,
        pulse,
        schedule,
        solver,
        sweep,
        probe_grid,
        output,
        source: text.to_string(),
    })
}

fn line_of_offset(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

/// Line numbers of section headers and keys.
struct KeyLines {
    entries: Vec<(String, String, usize)>,
}

impl KeyLines {
    fn new(text: &str) -> Self {
        let mut entries = Vec::new();
        let mut current = String::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if let Some(h) = line.strip_prefix("[[").and_then(|l| l.split("]]").next()) {
                current = h.trim().to_string();
                entries.push((current.clone(), String::new(), i + 1));
            } else if let Some(h) = line.strip_prefix('[').and_then(|l| l.split(']').next()) {
                current = h.trim().to_string();
                entries.push((current.clone(), String::new(), i + 1));
            } else if let Some((k, _)) = line.split_once('=') {
                let k = k.trim().trim_matches('"').to_string();
                if !k.is_empty() && !k.starts_with('#') {
                    entries.push((current.clone(), k, i + 1));
                }
            }
        }
        Self { entries }
    }

    fn section(&self, section: &str) -> Option<usize> {
        self.entries.iter().find(|(s, k, _)| s == section && k.is_empty()).map(|e| e.2)
    }

    fn key(&self, section: &str, key: &str) -> Option<usize> {
        self.entries
            .iter()
            .find(|(s, k, _)| (s == section || s.starts_with(&format!("{section}."))) && k == key)
            .map(|e| e.2)
    }
}

fn split_suffix(key: &str) -> (&str, Option<&str>) {
    for suffix in UNIT_SUFFIXES {
        if let Some(stem) = key.strip_suffix(suffix).and_then(|s| s.strip_suffix('_')) {
            return (stem, Some(suffix));
        }
    }
    (key, None)
}

fn check_keys(section: &str, table: &Table, known: &[&str], lines: &KeyLines) -> CfgResult<()> {
    for key in table.keys() {
        if known.contains(&key.as_str()) {
            continue;
        }
        let line = lines.key(section, key);
        let (stem, suffix) = split_suffix(key);
        if let Some(expected) = known.iter().find(|k| split_suffix(k).0 == stem && split_suffix(k).1.is_some()) {
            return Err(ConfigError::at(
                format!(
                    "unit-suffix mismatch in [{section}]: got `{}`, expected `{expected}`",
                    suffix.unwrap_or("no unit")
                ),
                key,
                line,
            ));
        }
        return Err(ConfigError::at(
            format!("unknown key in [{section}]; known keys: {}", known.join(", ")),
            key,
            line,
        ));
    }
    if section == "schedule" {
        if let Some(Value::Array(segs)) = table.get("segments") {
            for seg in segs {
                let Value::Table(t) = seg else {
                    return Err(ConfigError::at("each segment must be a table", "segments", lines.key(section, "segments")));
                };
                check_keys("schedule.segments", t, SEGMENT_KEYS, lines)?;
            }
        }
    }
    Ok(())
}

struct Reader<'a> {
    section: &'static str,
    table: Table,
    lines: &'a KeyLines,
}

impl Reader<'_> {
    fn err(&self, key: &str, message: impl Into<String>) -> ConfigError {
        ConfigError::at(
            format!("[{}] {}", self.section, message.into()),
            key,
            self.lines.key(self.section, key),
        )
    }

    fn f64_opt(&self, key: &str) -> CfgResult<Option<f64>> {
        match self.table.get(key) {
            None => Ok(None),
            Some(Value::Float(v)) if v.is_finite() => Ok(Some(*v)),
            Some(Value::Integer(v)) => Ok(Some(*v as f64)),
            Some(Value::Float(v)) => Err(self.err(key, format!("must be finite, got {v}"))),
            Some(other) => Err(self.err(key, format!("expected a number, got {}", other.type_str()))),
        }
    }

    fn f64_req(&self, key: &str) -> CfgResult<f64> {
        self.f64_opt(key)?.ok_or_else(|| ConfigError::at(format!("missing required key in [{}]", self.section), key, self.lines.section(self.section)))
    }

    fn non_negative(&self, key: &str, v: f64) -> CfgResult<f64> {
        if v < 0.0 {
            return Err(self.err(key, format!("must be non-negative, got {v}")));
        }
        Ok(v)
    }

    fn positive(&self, key: &str, v: f64) -> CfgResult<f64> {
        if !(v > 0.0) {
            return Err(self.err(key, format!("must be positive, got {v}")));
        }
        Ok(v)
    }

    fn usize_opt(&self, key: &str) -> CfgResult<Option<usize>> {
        match self.table.get(key) {
            None => Ok(None),
            Some(Value::Integer(v)) if *v > 0 => Ok(Some(*v as usize)),
            Some(other) => Err(self.err(key, format!("expected a positive integer, got {other}"))),
        }
    }

    fn str_opt(&self, key: &str) -> CfgResult<Option<String>> {
        match self.table.get(key) {
            None => Ok(None),
            Some(Value::String(s)) => Ok(Some(s.clone())),
            Some(other) => Err(self.err(key, format!("expected a string, got {}", other.type_str()))),
        }
    }
}

fn parse_device(r: &Reader) -> CfgResult<DeviceParams> {
    let nn = |key: &str| -> CfgResult<f64> { r.non_negative(key, r.f64_req(key)?) };
    let g = mhz(nn("g_MHz")?);
    let omega_r = ghz(nn("omega_r_GHz")?);
    let omega_q_dressed = r.f64_opt("omega_q_dressed_GHz")?.map(|v| r.positive("omega_q_dressed_GHz", v)).transpose()?.map(ghz);
    let omega_q = match r.f64_opt("omega_q_GHz")? {
        Some(v) => Some(ghz(r.positive("omega_q_GHz", v)?)),
        None => omega_q_dressed.map(|wd| presets::bare_from_dressed(wd, omega_r, g)),
    };
    let c0 = r.f64_opt("C0_MHz_per_Phi0sq")?.map(mhz);
    let c1 = r.f64_opt("C1_MHz_per_Phi0")?.map(|v| r.non_negative("C1_MHz_per_Phi0", v)).transpose()?.map(mhz);
    let asymmetry = r.f64_req("asymmetry")?;
    if !(0.0..=1.0).contains(&asymmetry) {
        return Err(r.err("asymmetry", format!("must lie in [0, 1], got {asymmetry}")));
    }
    let device = DeviceParams {
        e_c: ghz(nn("E_C_GHz")?),
        e_j0: ghz(nn("E_J0_GHz")?),
        asymmetry,
        flux_bias: r.f64_req("flux_bias_Phi0")?,
        g,
        gamma_relax: mhz(nn("gamma_MHz")?),
        gamma_phi: mhz(nn("gamma_phi_MHz")?),
        kappa: mhz(nn("kappa_MHz")?),
        omega_r,
        omega_r_dressed: ghz(nn("omega_r_dressed_GHz")?),
        omega_q,
        omega_q_dressed,
        length_um: nn("length_um")?,
        c0,
        c1,
    };
    device
        .validate()
        .map_err(|e| ConfigError::at(e.to_string(), "device", r.lines.section("device")))?;
    device
        .dressed_qubit_frequency()
        .map_err(|e| ConfigError::at(e.to_string(), "device", r.lines.section("device")))?;
    Ok(device)
}

fn parse_drive(r: &Reader, device: &DeviceParams) -> CfgResult<DriveConfig> {
    let default = presets::paper_drive(0.0);
    let opt_nn = |key: &str| -> CfgResult<Option<f64>> { r.f64_opt(key)?.map(|v| r.non_negative(key, v)).transpose() };
    let drive = DriveConfig {
        omega_p_rabi: opt_nn("omega_p_rabi_MHz")?.map(mhz).unwrap_or(default.omega_p_rabi),
        omega_p: opt_nn("omega_p_GHz")?.map(ghz).unwrap_or(default.omega_p),
        delta_phi: opt_nn("delta_phi_Phi0")?.unwrap_or(0.0),
        eps_phi: opt_nn("eps_phi_MHz")?.map(mhz),
        omega_mod: opt_nn("omega_mod_MHz")?.map(mhz).unwrap_or(default.omega_mod),
        omega_phi_rabi: opt_nn("omega_phi_rabi_MHz")?.map(mhz),
    };
    drive
        .validate(device)
        .map_err(|e| ConfigError::at(e.to_string(), "drive", r.lines.section("drive")))?;
    Ok(drive)
}

fn parse_pulse(r: &Reader) -> CfgResult<PulseConfig> {
    let opt_pos = |key: &str| -> CfgResult<Option<f64>> { r.f64_opt(key)?.map(|v| r.positive(key, v)).transpose() };
    let pulse = PulseConfig {
        amp: r.f64_opt("amp_MHz")?.map(|v| r.non_negative("amp_MHz", v)).transpose()?.map(mhz),
        tau_d: opt_pos("tau_d_ns")?,
        t0: r.f64_opt("t0_ns")?,
        carrier: opt_pos("carrier_GHz")?.map(ghz),
        t_start: r.f64_opt("t_start_ns")?,
        t_stop: r.f64_opt("t_stop_ns")?,
        dt: opt_pos("dt_ns")?,
    };
    if let (Some(a), Some(b)) = (pulse.t_start, pulse.t_stop) {
        if !(b > a) {
            return Err(r.err("t_stop_ns", "must exceed t_start_ns"));
        }
    }
    Ok(pulse)
}

fn parse_schedule(r: &Reader, lines: &KeyLines) -> CfgResult<ScheduleConfig> {
    let d = ScheduleConfig::default();
    let mut segments = Vec::new();
    if let Some(v) = r.table.get("segments") {
        let Value::Array(items) = v else {
            return Err(r.err("segments", "expected an array of tables"));
        };
        for item in items {
            let Value::Table(t) = item else {
                return Err(r.err("segments", "expected an array of tables"));
            };
            let seg = Reader {
                section: "schedule.segments",
                table: t.clone(),
                lines,
            };
            let level = seg.f64_req("level_MHz")?;
            segments.push(Segment {
                t_start: seg.f64_opt("t_start_ns")?.unwrap_or(f64::NEG_INFINITY),
                t_end: seg.f64_opt("t_end_ns")?.unwrap_or(f64::INFINITY),
                level: mhz(seg.non_negative("level_MHz", level)?),
            });
        }
    }
    let schedule = ScheduleConfig {
        ramp: r.f64_opt("ramp_ns")?.map(|v| r.positive("ramp_ns", v)).transpose()?.unwrap_or(d.ramp),
        write_level: r.f64_opt("write_level_MHz")?.map(|v| r.non_negative("write_level_MHz", v)).transpose()?.map(mhz).unwrap_or(d.write_level),
        read_level: r.f64_opt("read_level_MHz")?.map(|v| r.non_negative("read_level_MHz", v)).transpose()?.map(mhz).unwrap_or(d.read_level),
        t_c: r.f64_opt("t_c_ns")?,
        t_s: r.f64_opt("t_s_ns")?.map(|v| r.non_negative("t_s_ns", v)).transpose()?.unwrap_or(d.t_s),
        segments,
    };
    if !schedule.segments.is_empty() {
        let s = lambda_eit::pulselab::ModulationSchedule {
            segments: schedule.segments.clone(),
            ramp: schedule.ramp,
        };
        s.validate().map_err(|e| r.err("segments", e.to_string()))?;
    }
    Ok(schedule)
}

fn parse_solver(r: &Reader) -> CfgResult<SolverConfig> {
    let d = SolverConfig::default();
    let frame = match r.str_opt("frame")?.as_deref() {
        None | Some("effective") => SolverFrame::Effective,
        Some("lab") => SolverFrame::Lab,
        Some("analytic") => SolverFrame::Analytic,
        Some(other) => return Err(r.err("frame", format!("expected effective, lab or analytic, got {other:?}"))),
    };
    let n_fock = r.usize_opt("n_fock")?.unwrap_or(d.n_fock);
    if n_fock < 2 {
        return Err(r.err("n_fock", "must be at least 2"));
    }
    Ok(SolverConfig {
        n_fock,
        rtol: r.f64_opt("rtol")?.map(|v| r.positive("rtol", v)).transpose()?.unwrap_or(d.rtol),
        atol: r.f64_opt("atol")?.map(|v| r.positive("atol", v)).transpose()?.unwrap_or(d.atol),
        frame,
        parallel: r.usize_opt("parallel")?,
    })
}

fn parse_sweep(r: &Reader) -> CfgResult<(Option<SweepConfig>, ProbeGridConfig)> {
    let probe = ProbeGridConfig {
        center: r.f64_opt("probe_center_GHz")?.map(|v| r.positive("probe_center_GHz", v)).transpose()?.map(ghz),
        span: r.f64_opt("probe_span_MHz")?.map(|v| r.positive("probe_span_MHz", v)).transpose()?.map(mhz),
        points: r.usize_opt("probe_points")?,
    };
    if probe.points.is_some_and(|p| p < 2) {
        return Err(r.err("probe_points", "must be at least 2"));
    }
    let axis_keys = ["axis", "start", "stop", "points"];
    let present = axis_keys.iter().filter(|k| r.table.contains_key(**k)).count();
    if present == 0 {
        return Ok((None, probe));
    }
    if present < axis_keys.len() {
        let missing = axis_keys.iter().find(|k| !r.table.contains_key(**k)).expect("one is missing");
        return Err(ConfigError::at("[sweep] needs axis, start, stop and points together", missing, r.lines.section("sweep")));
    }
    let name = r.str_opt("axis")?.expect("present");
    let axis = SweepAxis::from_name(&name).ok_or_else(|| {
        r.err(
            "axis",
            format!(
                "unknown sweep axis {name:?}; expected one of {}",
                SweepAxis::ALL.iter().map(|a| a.name()).collect::<Vec<_>>().join(", ")
            ),
        )
    })?;
    let start = r.f64_req("start")?;
    let stop = r.f64_req("stop")?;
    let points = r.usize_opt("points")?.expect("present");
    Ok((Some(SweepConfig::new(axis, start, stop, points)), probe))
}

fn parse_output(r: &Reader) -> CfgResult<OutputConfig> {
    let d = OutputConfig::default();
    let directory = r.str_opt("directory")?.map(PathBuf::from).unwrap_or(d.directory);
    let formats = match r.table.get("formats") {
        None => d.formats,
        Some(Value::Array(items)) => items
            .iter()
            .map(|v| match v.as_str() {
                Some("csv") => Ok(Format::Csv),
                Some("json") => Ok(Format::Json),
                Some("svg") => Ok(Format::Svg),
                _ => Err(r.err("formats", format!("expected \"csv\", \"json\" or \"svg\", got {v}"))),
            })
            .collect::<CfgResult<Vec<_>>>()?,
        Some(other) => return Err(r.err("formats", format!("expected an array, got {}", other.type_str()))),
    };
    Ok(OutputConfig { directory, formats })
}

/// Render a device block with the same keys the parser reads.
pub fn device_block(device: &DeviceParams) -> String {
    let mut s = String::from("[device]\n");
    let mut line = |k: &str, v: f64| s.push_str(&format!("{k} = {}\n", crate::output::fmt17(v)));
    line("E_C_GHz", to_ghz(device.e_c));
    line("E_J0_GHz", to_ghz(device.e_j0));
    line("asymmetry", device.asymmetry);
    line("flux_bias_Phi0", device.flux_bias);
    line("g_MHz", to_mhz(device.g));
    line("gamma_MHz", to_mhz(device.gamma_relax));
    line("gamma_phi_MHz", to_mhz(device.gamma_phi));
    line("kappa_MHz", to_mhz(device.kappa));
    line("omega_r_GHz", to_ghz(device.omega_r));
    line("omega_r_dressed_GHz", to_ghz(device.omega_r_dressed));
    if let Some(v) = device.omega_q {
        line("omega_q_GHz", to_ghz(v));
    }
    if let Some(v) = device.omega_q_dressed {
        line("omega_q_dressed_GHz", to_ghz(v));
    }
    line("length_um", device.length_um);
    if let Some(v) = device.c0 {
        line("C0_MHz_per_Phi0sq", to_mhz(v));
    }
    if let Some(v) = device.c1 {
        line("C1_MHz_per_Phi0", to_mhz(v));
    }
    s
}
