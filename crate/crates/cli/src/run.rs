//! Experiment presets: each runs a pipeline and writes its tables, fits and plots.

use std::path::PathBuf;

use clap::ValueEnum;
use lambda_eit::device::{probe_power, DeviceParams, DriveConfig};
use lambda_eit::dynamics::{eps_for_rabi, EvolveOptions, Frame, HamiltonianSpec, Rates};
use lambda_eit::presets;
use lambda_eit::pulselab::{
    capture_efficiency, delay_time, mean_input_photons, propagate, pulse_grid, retrieval_peak, retrieve_shaped,
    storage_decay_fit, storage_efficiency, ModulationSchedule, PulseFrame, PulseSetup, PulseTrace,
};
use lambda_eit::spectroscopy::{
    calibrate_shift_constants, delay_from_phase, eit_fwhm, fit_eit, fit_two_level, ideal_delay, linear_r_squared,
    sweep_spectrum, uniform_grid, EitFixed, Engine, LambdaFit, Spectrum,
};
use lambda_eit::units::{mhz, to_ghz, to_mhz, watts_to_dbm};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::config::{ExperimentConfig, Format, SolverFrame, SweepAxis, SweepConfig};
use crate::error::{CliError, CliResult, ConfigError};
use crate::manifest::RunManifest;
use crate::output::{OutputSet, Table};
use crate::plot::{emit_plot, PlotSpec};

/// Experiment pipelines mirroring the measured figures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[value(rename_all = "snake_case")]
#[serde(rename_all = "snake_case")]
pub enum Preset {
    SingleTone,
    TwoTone,
    Saturation,
    EitSpectrum,
    SlowLight,
    DelayScan,
    Store,
    CaptureScan,
    Shape,
    Calibrate,
}

impl Preset {
    pub fn name(self) -> &'static str {
        match self {
            Preset::SingleTone => "single_tone",
            Preset::TwoTone => "two_tone",
            Preset::Saturation => "saturation",
            Preset::EitSpectrum => "eit_spectrum",
            Preset::SlowLight => "slow_light",
            Preset::DelayScan => "delay_scan",
            Preset::Store => "store",
            Preset::CaptureScan => "capture_scan",
            Preset::Shape => "shape",
            Preset::Calibrate => "calibrate",
        }
    }

    /// Outer sweep used when the config has none.
    pub fn default_sweep(self) -> Option<SweepConfig> {
        let s = SweepConfig::new;
        match self {
            Preset::SingleTone => None,
            Preset::TwoTone => Some(s(SweepAxis::OmegaMod, 700.0, 750.0, 51)),
            Preset::Saturation => Some(s(SweepAxis::OmegaPRabi, 0.5, 60.0, 60)),
            Preset::EitSpectrum | Preset::Calibrate => Some(s(SweepAxis::DeltaPhi, 0.03, 0.15, 10)),
            Preset::SlowLight => Some(s(SweepAxis::OmegaPhi, 13.3, 18.0, 2)),
            Preset::DelayScan => Some(s(SweepAxis::OmegaPhi, 13.0, 25.0, 13)),
            Preset::Store => Some(s(SweepAxis::StorageTime, 25.0, 700.0, 28)),
            Preset::CaptureScan => Some(s(SweepAxis::TurnOffTime, -50.0, 150.0, 21)),
            Preset::Shape => Some(s(SweepAxis::OmegaRetrieve, 14.6, 24.4, 2)),
        }
    }
}

/// Command-line overrides of a run.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub out_dir: Option<PathBuf>,
    pub plots: bool,
    pub parallel: Option<usize>,
}

struct Ctx<'a> {
    config: &'a ExperimentConfig,
    out: OutputSet,
    plots: bool,
    json: bool,
}

impl Ctx<'_> {
    fn csv(&mut self, name: &str, table: &Table, plot: Option<PlotSpec>) -> CliResult<()> {
        let path = self.out.write_csv(name, table)?;
        if let (true, Some(spec)) = (self.plots, plot) {
            let svg = emit_plot(&path, &spec)?;
            self.out.record(&svg)?;
        }
        Ok(())
    }

    fn json(&mut self, name: &str, value: &serde_json::Value) -> CliResult<()> {
        if self.json {
            self.out.write_json(name, value)?;
        }
        Ok(())
    }
}

/// Run `preset` with `config` and return the manifest of the files written.
pub fn run_preset(preset: Preset, config: &ExperimentConfig, opts: &RunOptions) -> CliResult<RunManifest> {
    let started = chrono::Utc::now();
    if !config.schedule.segments.is_empty() && preset != Preset::SlowLight {
        return Err(ConfigError::new(format!(
            "[[schedule.segments]] sets a custom schedule, which only the slow_light preset uses; preset {} builds its own",
            preset.name()
        ))
        .into());
    }
    match preset.default_sweep() {
        Some(_) => {
            resolve_sweep(preset, config)?;
        }
        None if config.sweep.is_some() => {
            return Err(ConfigError::new(format!("preset {} takes no [sweep] axis", preset.name())).into());
        }
        None => {}
    }
    let dir = opts.out_dir.clone().unwrap_or_else(|| config.output.directory.clone());
    let threads = opts.parallel.or(config.solver.parallel).unwrap_or(0);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| CliError::Io(e.to_string()))?;
    let mut ctx = Ctx {
        config,
        out: OutputSet::new(&dir)?,
        plots: opts.plots || config.output.formats.contains(&Format::Svg),
        json: config.output.formats.contains(&Format::Json),
    };
    log::info!("running preset {} into {}", preset.name(), dir.display());
    pool.install(|| match preset {
        Preset::SingleTone => single_tone(&mut ctx),
        Preset::TwoTone => two_tone(&mut ctx),
        Preset::Saturation => saturation(&mut ctx),
        Preset::EitSpectrum => eit_spectrum(&mut ctx, false),
        Preset::Calibrate => eit_spectrum(&mut ctx, true),
        Preset::SlowLight => slow_light(&mut ctx),
        Preset::DelayScan => delay_scan(&mut ctx),
        Preset::Store => store(&mut ctx),
        Preset::CaptureScan => capture_scan(&mut ctx),
        Preset::Shape => shape(&mut ctx),
    })?;
    let manifest = RunManifest::new(preset, config, &dir, started, ctx.out.files().to_vec());
    manifest.write(&dir)?;
    Ok(manifest)
}

fn sweep_for(ctx: &Ctx, preset: Preset) -> CliResult<SweepConfig> {
    resolve_sweep(preset, ctx.config)
}

fn resolve_sweep(preset: Preset, config: &ExperimentConfig) -> CliResult<SweepConfig> {
    let default = preset.default_sweep().expect("preset has a sweep");
    match &config.sweep {
        None => Ok(default),
        Some(s) if s.axis == default.axis => Ok(s.clone()),
        Some(s) => Err(ConfigError::new(format!(
            "preset {} sweeps {}, but [sweep] sets axis {}",
            preset.name(),
            default.axis.name(),
            s.axis.name()
        ))
        .into()),
    }
}

fn engine(config: &ExperimentConfig) -> Engine {
    match config.solver.frame {
        SolverFrame::Effective => Engine::Effective,
        SolverFrame::Lab => Engine::LabPeriodic,
        SolverFrame::Analytic => Engine::Analytic,
    }
}

fn pulse_frame(config: &ExperimentConfig) -> CliResult<PulseFrame> {
    match config.solver.frame {
        SolverFrame::Effective => Ok(PulseFrame::Effective),
        SolverFrame::Lab => Ok(PulseFrame::Lab),
        SolverFrame::Analytic => Err(ConfigError::new("pulse presets need frame = \"effective\" or \"lab\"").into()),
    }
}

fn spectrum_spec(config: &ExperimentConfig, drive: DriveConfig) -> HamiltonianSpec {
    let frame = match config.solver.frame {
        SolverFrame::Lab => Frame::LabRotatingAtProbe,
        _ => Frame::EffectiveTimeIndependent,
    };
    HamiltonianSpec::new(frame, config.device.clone(), drive, config.solver.n_fock)
}

fn probe_grid(config: &ExperimentConfig, center: f64, span: f64, points: usize) -> CliResult<Vec<f64>> {
    let g = &config.probe_grid;
    let center = g.center.unwrap_or(center);
    let span = g.span.unwrap_or(span);
    let points = g.points.unwrap_or(points);
    Ok(uniform_grid(center - 0.5 * span, center + 0.5 * span, points)?)
}

fn setup(config: &ExperimentConfig) -> PulseSetup {
    PulseSetup {
        omega_mod: config.drive.omega_mod,
        n_fock: config.solver.n_fock,
        evolve: EvolveOptions {
            rtol: config.solver.rtol,
            atol: config.solver.atol,
            h_max: None,
        },
    }
}

fn unmodulated(drive: &DriveConfig) -> DriveConfig {
    DriveConfig {
        delta_phi: 0.0,
        eps_phi: Some(0.0),
        omega_phi_rabi: None,
        ..drive.clone()
    }
}

fn spectrum_rows(table: &mut Table, prefix: &[f64], s: &Spectrum) {
    for (w, t) in s.omega_p.iter().zip(&s.t_c) {
        let mut row = prefix.to_vec();
        row.extend([to_ghz(*w), t.norm(), t.arg(), t.re, t.im]);
        table.push(row);
    }
}

fn spectrum_columns<'a>(prefix: &[&'a str]) -> Vec<&'a str> {
    let mut c = prefix.to_vec();
    c.extend(["omega_p_GHz", "abs_t", "phase_rad", "re_t", "im_t"]);
    c
}

fn at_coordinate(axis: SweepAxis, value: f64) -> impl Fn(lambda_eit::Error) -> CliError {
    move |e| CliError::solver_at(e, format!("{} = {}", axis.name(), axis.to_display(value)))
}

fn single_tone(ctx: &mut Ctx) -> CliResult<()> {
    let c = ctx.config;
    let center = c.device.dressed_qubit_frequency()?;
    let grid = probe_grid(c, center, mhz(100.0), 801)?;
    let spec = spectrum_spec(c, unmodulated(&c.drive));
    let s = sweep_spectrum(&grid, &spec, engine(c))?;
    let mut table = Table::new(&spectrum_columns(&[]));
    spectrum_rows(&mut table, &[], &s);
    ctx.csv("single_tone.csv", &table, Some(PlotSpec::line("omega_p_GHz", &["abs_t"], "single-tone transmission")))?;
    let fit = fit_two_level(&s)?;
    let u = fit.uncertainties();
    let min = s.magnitude().into_iter().fold(f64::INFINITY, f64::min);
    ctx.json(
        "single_tone_fit.json",
        &json!({
            "model": "two_level",
            "omega_q_GHz": to_ghz(fit.omega_q),
            "gamma_MHz": to_mhz(fit.gamma_relax),
            "gamma_phi_MHz": to_mhz(fit.gamma_phi),
            "sigma_omega_q_GHz": to_ghz(u[0]),
            "sigma_gamma_MHz": to_mhz(u[1]),
            "sigma_gamma_phi_MHz": to_mhz(u[2]),
            "residual_norm": fit.residual_norm,
            "min_abs_t": min,
        }),
    )
}

fn two_tone(ctx: &mut Ctx) -> CliResult<()> {
    let c = ctx.config;
    let sweep = sweep_for(ctx, Preset::TwoTone)?;
    let grid = probe_grid(c, c.drive.omega_p, mhz(100.0), 201)?;
    let mut base = c.drive.clone();
    let modulated = base.omega_phi_rabi.is_some() || base.delta_phi > 0.0 || base.eps_phi.is_some_and(|e| e > 0.0);
    if !modulated {
        base.omega_phi_rabi = Some(mhz(presets::MOTIONAL_REFERENCE_RABI_MHZ));
    }
    let spectra = sweep
        .values()
        .par_iter()
        .map(|&w_mod| {
            let mut drive = base.clone();
            drive.omega_mod = w_mod;
            let mut spec = spectrum_spec(c, drive);
            if spec.frame == Frame::LabRotatingAtProbe && spec.drive.eps_phi.is_none_or(|e| e == 0.0) && spec.drive.delta_phi == 0.0 {
                let target = spec.drive.omega_phi_rabi.unwrap_or(0.0);
                spec.drive.eps_phi = Some(eps_for_rabi(&spec, &Rates::from_device(&c.device), target)?);
            }
            sweep_spectrum(&grid, &spec, engine(c))
        })
        .zip(sweep.values())
        .map(|(r, w)| r.map_err(at_coordinate(sweep.axis, w)))
        .collect::<CliResult<Vec<_>>>()?;
    let mut table = Table::new(&spectrum_columns(&["omega_mod_MHz"]));
    for (w, s) in sweep.values().iter().zip(&spectra) {
        spectrum_rows(&mut table, &[to_mhz(*w)], s);
    }
    ctx.csv(
        "two_tone.csv",
        &table,
        Some(PlotSpec::heatmap("omega_p_GHz", "omega_mod_MHz", "abs_t", "two-tone transmission")),
    )
}

fn saturation(ctx: &mut Ctx) -> CliResult<()> {
    let c = ctx.config;
    let sweep = sweep_for(ctx, Preset::Saturation)?;
    let w_q = c.device.dressed_qubit_frequency()?;
    let rows = sweep
        .values()
        .par_iter()
        .map(|&rabi| {
            let mut drive = unmodulated(&c.drive);
            drive.omega_p_rabi = rabi;
            let s = sweep_spectrum(&[w_q], &spectrum_spec(c, drive), engine(c))?;
            let power = probe_power(w_q, rabi, c.device.gamma_relax)?;
            Ok((rabi, power, s.t_c[0]))
        })
        .zip(sweep.values())
        .map(|(r, v): (lambda_eit::Result<_>, f64)| r.map_err(at_coordinate(sweep.axis, v)))
        .collect::<CliResult<Vec<_>>>()?;
    let mut table = Table::new(&["omega_p_rabi_MHz", "power_dBm", "abs_t", "re_t", "im_t"]);
    for (rabi, power, t) in rows {
        table.push(vec![to_mhz(rabi), watts_to_dbm(power), t.norm(), t.re, t.im]);
    }
    ctx.csv(
        "saturation.csv",
        &table,
        Some(PlotSpec::line("omega_p_rabi_MHz", &["abs_t"], "on-resonance transmission vs probe strength")),
    )
}

pub(crate) fn eit_fixed(device: &DeviceParams, drive: &DriveConfig) -> EitFixed {
    EitFixed {
        gamma_relax: device.gamma_relax,
        gamma: device.gamma_total(),
        kappa: device.kappa,
        omega_r_dressed: device.omega_r_dressed,
        omega_mod: drive.omega_mod,
    }
}

fn eit_spectrum(ctx: &mut Ctx, calibrate: bool) -> CliResult<()> {
    let c = ctx.config;
    let preset = if calibrate { Preset::Calibrate } else { Preset::EitSpectrum };
    let sweep = sweep_for(ctx, preset)?;
    let grid = probe_grid(c, c.drive.omega_p, mhz(100.0), 801)?;
    let fixed = eit_fixed(&c.device, &c.drive);
    let results = sweep
        .values()
        .par_iter()
        .map(|&dphi| {
            let drive = DriveConfig {
                delta_phi: dphi,
                eps_phi: None,
                omega_phi_rabi: None,
                ..c.drive.clone()
            };
            let s = sweep_spectrum(&grid, &spectrum_spec(c, drive), engine(c))?;
            let fit = fit_eit(&s, &fixed)?;
            let rms = fit.magnitude_rms(&s, &fixed)?;
            Ok((s, fit, rms))
        })
        .zip(sweep.values())
        .map(|(r, v): (lambda_eit::Result<_>, f64)| r.map_err(at_coordinate(sweep.axis, v)))
        .collect::<CliResult<Vec<(Spectrum, LambdaFit, f64)>>>()?;
    let values = sweep.values();
    if !calibrate {
        let mut table = Table::new(&spectrum_columns(&["delta_phi_Phi0"]));
        for (d, (s, _, _)) in values.iter().zip(&results) {
            spectrum_rows(&mut table, &[*d], s);
        }
        ctx.csv(
            "eit_spectrum.csv",
            &table,
            Some(PlotSpec::heatmap("omega_p_GHz", "delta_phi_Phi0", "abs_t", "EIT transmission")),
        )?;
    }
    let mut fits = Table::new(&[
        "delta_phi_Phi0",
        "omega_phi_fit_MHz",
        "omega_q_motional_fit_GHz",
        "sigma_omega_q_motional_GHz",
        "sigma_omega_phi_MHz",
        "rms_abs_t",
    ]);
    for (d, (_, f, rms)) in values.iter().zip(&results) {
        let u = f.uncertainties();
        fits.push(vec![*d, to_mhz(f.omega_phi), to_ghz(f.omega_q_motional), to_ghz(u[0]), to_mhz(u[1]), *rms]);
    }
    ctx.csv(
        "eit_fits.csv",
        &fits,
        Some(PlotSpec::line("delta_phi_Phi0", &["omega_phi_fit_MHz"], "fitted sideband Rabi frequency")),
    )?;
    let om: Vec<f64> = results.iter().map(|r| to_mhz(r.1.omega_phi)).collect();
    let line = linear_r_squared(&values, &om);
    let summary = json!({
        "omega_phi_vs_delta_phi": line.map(|(a, b, r2)| json!({"intercept_MHz": a, "slope_MHz_per_Phi0": b, "r_squared": r2})),
        "max_rms_abs_t": results.iter().map(|r| r.2).fold(0.0, f64::max),
    });
    ctx.json("eit_fits.json", &summary)?;
    if calibrate {
        let pairs: Vec<(f64, LambdaFit)> = values.iter().copied().zip(results.into_iter().map(|r| r.1)).collect();
        let k = calibrate_shift_constants(&pairs, c.device.dressed_qubit_frequency()?)?;
        ctx.json(
            "calibration.json",
            &json!({
                "C0_MHz_per_Phi0sq": to_mhz(k.c0),
                "C1_MHz_per_Phi0": to_mhz(k.c1),
                "omega_phi_vs_delta_phi": summary["omega_phi_vs_delta_phi"],
            }),
        )?;
    }
    Ok(())
}

fn trace_table(trace: &PulseTrace) -> Table {
    let mut t = Table::new(&["t_ns", "alpha_out_abs", "n_res", "p_exc", "omega_phi_MHz"]);
    for i in 0..trace.len() {
        t.push(vec![trace.times[i], trace.alpha_out_abs[i], trace.n_res[i], trace.p_exc[i], to_mhz(trace.mod_envelope[i])]);
    }
    t
}

fn trace_plot(title: &str) -> Option<PlotSpec> {
    Some(PlotSpec::line("t_ns", &["alpha_out_abs"], title))
}

fn slow_light(ctx: &mut Ctx) -> CliResult<()> {
    let c = ctx.config;
    let sweep = sweep_for(ctx, Preset::SlowLight)?;
    let frame = pulse_frame(c)?;
    let run = c.pulse.resolve(300.0, &c.drive, 0.0);
    let grid = pulse_grid(run.t_start, run.t_stop, run.dt)?;
    let reference = PulseTrace::reference(&run.pulse, &grid, c.device.gamma_relax)?;
    let setup = setup(c);
    let schedules: Vec<ModulationSchedule> = if c.schedule.segments.is_empty() {
        sweep.values().into_iter().map(ModulationSchedule::constant).collect()
    } else {
        vec![ModulationSchedule {
            segments: c.schedule.segments.clone(),
            ramp: c.schedule.ramp,
        }]
    };
    let levels: Vec<f64> = schedules.iter().map(ModulationSchedule::max_level).collect();
    let traces = schedules
        .par_iter()
        .map(|schedule| propagate(&c.device, &run.pulse, schedule, frame, &grid, &setup))
        .zip(levels.par_iter())
        .map(|(r, v)| r.map_err(at_coordinate(sweep.axis, *v)))
        .collect::<CliResult<Vec<_>>>()?;
    ctx.csv("slow_light_reference.csv", &trace_table(&reference), trace_plot("reference pulse"))?;
    let ref_peak = reference.alpha_out_abs.iter().copied().fold(0.0, f64::max);
    let mut summary = Table::new(&["omega_phi_MHz", "delta_t_ns", "v_g_km_s", "effective_depth", "peak_rel"]);
    for (k, (level, trace)) in levels.iter().zip(&traces).enumerate() {
        ctx.csv(&format!("slow_light_trace_{k:03}.csv"), &trace_table(trace), trace_plot(&format!("slow light, Omega_Phi/2pi = {} MHz", to_mhz(*level))))?;
        let d = delay_time(trace, &reference, &c.device).map_err(at_coordinate(sweep.axis, *level))?;
        summary.push(vec![to_mhz(*level), d.delta_t, d.group_velocity.unwrap_or(f64::NAN), d.effective_depth, d.peak_amplitude / ref_peak]);
    }
    ctx.csv("slow_light.csv", &summary, None)
}

fn delay_scan(ctx: &mut Ctx) -> CliResult<()> {
    let c = ctx.config;
    let sweep = sweep_for(ctx, Preset::DelayScan)?;
    let frame = pulse_frame(c)?;
    let run = c.pulse.resolve(300.0, &c.drive, 0.0);
    let grid = pulse_grid(run.t_start, run.t_stop, run.dt)?;
    let reference = PulseTrace::reference(&run.pulse, &grid, c.device.gamma_relax)?;
    let setup = setup(c);
    let probe = probe_grid(c, run.pulse.carrier, mhz(10.0), 801)?;
    let rows = sweep
        .values()
        .par_iter()
        .map(|&level| {
            let trace = propagate(&c.device, &run.pulse, &ModulationSchedule::constant(level), frame, &grid, &setup)?;
            let d = delay_time(&trace, &reference, &c.device)?;
            let drive = DriveConfig {
                omega_p: run.pulse.carrier,
                delta_phi: 0.0,
                eps_phi: None,
                omega_phi_rabi: Some(level),
                ..c.drive.clone()
            };
            let mut spec = spectrum_spec(c, drive);
            if spec.frame == Frame::LabRotatingAtProbe {
                spec.drive.eps_phi = Some(eps_for_rabi(&spec, &Rates::from_device(&c.device), level)?);
            }
            let s = sweep_spectrum(&probe, &spec, engine(c))?;
            let phase = delay_from_phase(&s, run.pulse.carrier)?;
            Ok(vec![
                to_mhz(level),
                d.delta_t,
                phase.delay,
                ideal_delay(level, c.device.gamma_relax),
                d.effective_depth,
            ])
        })
        .zip(sweep.values())
        .map(|(r, v): (lambda_eit::Result<_>, f64)| r.map_err(at_coordinate(sweep.axis, v)))
        .collect::<CliResult<Vec<_>>>()?;
    let mut table = Table::new(&["omega_phi_MHz", "pulse_delay_ns", "phase_delay_ns", "ideal_delay_ns", "effective_depth"]);
    rows.into_iter().for_each(|r| table.push(r));
    ctx.csv(
        "delay_scan.csv",
        &table,
        Some(PlotSpec::line("omega_phi_MHz", &["pulse_delay_ns", "phase_delay_ns", "ideal_delay_ns"], "delay vs sideband Rabi frequency")),
    )
}

fn store(ctx: &mut Ctx) -> CliResult<()> {
    let c = ctx.config;
    let sweep = sweep_for(ctx, Preset::Store)?;
    let frame = pulse_frame(c)?;
    let setup = setup(c);
    let base = c.pulse.resolve(50.0, &c.drive, 0.0);
    let runs = sweep
        .values()
        .par_iter()
        .map(|&t_s| {
            let mut protocol = c.schedule.protocol(&base.pulse);
            protocol.t_s = t_s;
            let stop = c.pulse.t_stop.unwrap_or(protocol.retrieval_start() + 600.0);
            let grid = pulse_grid(base.t_start, stop, base.dt)?;
            let reference = PulseTrace::reference(&base.pulse, &grid, c.device.gamma_relax)?;
            let trace = propagate(&c.device, &base.pulse, &protocol.schedule(), frame, &grid, &setup)?;
            let eta = storage_efficiency(&trace, &reference, (protocol.retrieval_start(), stop.min(grid[grid.len() - 1])))?;
            Ok((trace, eta))
        })
        .zip(sweep.values())
        .map(|(r, v): (lambda_eit::Result<_>, f64)| r.map_err(at_coordinate(sweep.axis, v)))
        .collect::<CliResult<Vec<_>>>()?;
    let mut table = Table::new(&["t_s_ns", "eta"]);
    for (k, (t_s, (trace, eta))) in sweep.values().iter().zip(&runs).enumerate() {
        ctx.csv(&format!("store_trace_{k:03}.csv"), &trace_table(trace), trace_plot(&format!("storage, T_s = {t_s} ns")))?;
        table.push(vec![*t_s, *eta]);
    }
    ctx.csv("store.csv", &table, Some(PlotSpec::line("t_s_ns", &["eta"], "storage efficiency")))?;
    let points: Vec<(f64, f64)> = sweep.values().into_iter().zip(runs.iter().map(|r| r.1)).collect();
    let fit = if points.len() >= 2 { Some(storage_decay_fit(&points)?) } else { None };
    let n_r = mean_input_photons(&base.pulse, c.device.gamma_relax)?;
    let protocol = c.schedule.protocol(&base.pulse);
    ctx.json(
        "store_fit.json",
        &json!({
            "mean_input_photons": n_r,
            "gamma_eit_MHz": to_mhz(eit_fwhm(protocol.write_level, c.device.gamma_relax, c.device.gamma_total())),
            "max_eta": points.iter().map(|p| p.1).fold(0.0, f64::max),
            "decay_rate_MHz": fit.map(|f| to_mhz(f.rate)),
            "decay_amplitude": fit.map(|f| f.amplitude),
            "log_rms": fit.map(|f| f.log_rms),
            "under_determined": fit.map(|f| f.under_determined),
        }),
    )
}

fn capture_scan(ctx: &mut Ctx) -> CliResult<()> {
    let c = ctx.config;
    let sweep = sweep_for(ctx, Preset::CaptureScan)?;
    let frame = pulse_frame(c)?;
    let setup = setup(c);
    let base = c.pulse.resolve(50.0, &c.drive, 0.0);
    let n_r = mean_input_photons(&base.pulse, c.device.gamma_relax)?;
    let mut ideal = c.device.clone();
    ideal.kappa = 0.0;
    ideal.gamma_phi = 0.0;
    let rows = sweep
        .values()
        .par_iter()
        .map(|&t_c| {
            let mut protocol = c.schedule.protocol(&base.pulse);
            protocol.t_c = t_c;
            let start = base.t_start.min(t_c - 50.0);
            let grid = pulse_grid(start, protocol.turn_off_complete() + 50.0, base.dt)?;
            let mut row = vec![t_c];
            for device in [&c.device, &ideal] {
                let trace = propagate(device, &base.pulse, &protocol.schedule(), frame, &grid, &setup)?;
                row.push(capture_efficiency(&trace, t_c, protocol.ramp, n_r)?.eta);
            }
            Ok(row)
        })
        .zip(sweep.values())
        .map(|(r, v): (lambda_eit::Result<_>, f64)| r.map_err(at_coordinate(sweep.axis, v)))
        .collect::<CliResult<Vec<_>>>()?;
    let mut table = Table::new(&["t_c_ns", "eta_c_real", "eta_c_ideal"]);
    rows.into_iter().for_each(|r| table.push(r));
    let max = |name: &str| table.column(name).unwrap_or_default().into_iter().fold(0.0, f64::max);
    let summary = json!({"mean_input_photons": n_r, "max_eta_c_real": max("eta_c_real"), "max_eta_c_ideal": max("eta_c_ideal")});
    ctx.csv("capture_scan.csv", &table, Some(PlotSpec::line("t_c_ns", &["eta_c_real", "eta_c_ideal"], "capture efficiency")))?;
    ctx.json("capture_scan.json", &summary)
}

fn shape(ctx: &mut Ctx) -> CliResult<()> {
    let c = ctx.config;
    let sweep = sweep_for(ctx, Preset::Shape)?;
    let frame = pulse_frame(c)?;
    let setup = setup(c);
    let base = c.pulse.resolve(50.0, &c.drive, 0.0);
    let protocol = c.schedule.protocol(&base.pulse);
    let stop = c.pulse.t_stop.unwrap_or(protocol.retrieval_start() + 400.0);
    let grid = pulse_grid(base.t_start, stop, base.dt)?;
    let runs = sweep
        .values()
        .par_iter()
        .map(|&level| {
            let trace = retrieve_shaped(&c.device, &base.pulse, &protocol, level, frame, &grid, &setup)?;
            let peak = retrieval_peak(&trace, protocol.turn_on_start())?;
            Ok((trace, peak))
        })
        .zip(sweep.values())
        .map(|(r, v): (lambda_eit::Result<_>, f64)| r.map_err(at_coordinate(sweep.axis, v)))
        .collect::<CliResult<Vec<_>>>()?;
    let mut table = Table::new(&["omega_retrieve_MHz", "peak_time_ns", "peak_alpha", "fwhm_ns"]);
    for (k, (level, (trace, peak))) in sweep.values().iter().zip(&runs).enumerate() {
        ctx.csv(&format!("shape_trace_{k:03}.csv"), &trace_table(trace), trace_plot(&format!("retrieval at {} MHz", to_mhz(*level))))?;
        table.push(vec![to_mhz(*level), peak.time, peak.height, peak.fwhm]);
    }
    ctx.csv("shape.csv", &table, None)
}
