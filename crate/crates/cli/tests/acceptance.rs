//! Acceptance report: one PASS/FAIL line per criterion.
//!
//! Failing criteria are reported, not asserted, so the report always runs to
//! completion. Each line lists the measured values next to their targets.

use std::path::Path;
use std::time::{Duration, Instant};

use lambda_eit::device::DriveConfig;
use lambda_eit::dynamics::{effective_from_lab, evolve, steady_state, EvolveOptions, Frame, HamiltonianSpec, Rates};
use lambda_eit::operators::{expectation, qubit_lowering, DensityMatrix};
use lambda_eit::presets::{self, paper_device, paper_drive};
use lambda_eit::pulselab::{propagate, pulse_grid, ModulationSchedule, ProbePulse, PulseFrame, PulseSetup};
use lambda_eit::spectroscopy::{
    analytic_transmission, delay_from_phase, fit_two_level, ideal_delay, sweep_spectrum, uniform_grid, Engine, Spectrum,
};
use lambda_eit::units::{ghz, mhz};
use lambda_eit_cli::output::Table;
use lambda_eit_cli::{parse_config, run_preset, ExperimentConfig, Preset, RunOptions};
use num_complex::Complex64;
use rayon::prelude::*;
use serde_json::Value;

struct Report {
    passed: usize,
    failed: Vec<u32>,
}

impl Report {
    fn line(&mut self, id: u32, name: &str, ok: bool, detail: String, elapsed: Duration) {
        let tag = if ok { "PASS" } else { "FAIL" };
        println!("[{tag}] criterion {id:>2} {name}: {detail} ({:.1} s)", elapsed.as_secs_f64());
        if ok {
            self.passed += 1;
        } else {
            self.failed.push(id);
        }
    }
}

fn within(x: f64, target: f64, tol: f64) -> bool {
    (x - target).abs() <= tol
}

fn config() -> ExperimentConfig {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("configs/paper_device.cfg");
    parse_config(&path).expect("reference config parses")
}

/// Run `preset` into a fresh directory and return the directory with the wall time.
fn run(preset: Preset, config: &ExperimentConfig, root: &Path) -> (std::path::PathBuf, Duration) {
    let dir = root.join(preset.name());
    let start = Instant::now();
    run_preset(
        preset,
        config,
        &RunOptions {
            out_dir: Some(dir.clone()),
            ..RunOptions::default()
        },
    )
    .unwrap_or_else(|e| panic!("preset {} failed: {e}", preset.name()));
    (dir, start.elapsed())
}

fn table(dir: &Path, name: &str) -> Table {
    Table::read_csv(&dir.join(name)).unwrap()
}

fn json(dir: &Path, name: &str) -> Value {
    serde_json::from_slice(&std::fs::read(dir.join(name)).unwrap()).unwrap()
}

fn col(t: &Table, name: &str) -> Vec<f64> {
    t.column(name).unwrap_or_else(|| panic!("missing column {name}"))
}

fn effective(drive: DriveConfig) -> HamiltonianSpec {
    HamiltonianSpec::new(Frame::EffectiveTimeIndependent, paper_device(), drive, 3)
}

fn two_level_extinction(r: &mut Report) {
    let start = Instant::now();
    let mut drive = paper_drive(0.0);
    drive.omega_p_rabi = mhz(0.1);
    let wq = ghz(presets::OMEGA_Q_DRESSED_GHZ);
    let t = sweep_spectrum(&[wq], &effective(drive), Engine::Effective).unwrap().t_c[0].norm();
    let device = paper_device();
    let formula = 1.0 - device.gamma_relax / (2.0 * device.gamma_total());
    let elapsed = start.elapsed();
    r.line(
        1,
        "two-level extinction",
        within(t, 0.047, 0.005) && elapsed < Duration::from_secs(1),
        format!("|t_c(ω̃_q)| = {t:.4} (target 0.047 ± 0.005, 1 − Γ/2γ = {formula:.4}); runtime limit 1 s"),
        elapsed,
    );
}

fn eit_spectrum(r: &mut Report, config: &ExperimentConfig, root: &Path) {
    let (dir, elapsed) = run(Preset::EitSpectrum, config, root);
    let summary = json(&dir, "eit_fits.json");
    let rms = summary["max_rms_abs_t"].as_f64().unwrap();
    let r2 = summary["omega_phi_vs_delta_phi"]["r_squared"].as_f64().unwrap();
    let spectra = table(&dir, "eit_spectrum.csv");
    let (dphi, w, abs_t) = (col(&spectra, "delta_phi_Phi0"), col(&spectra, "omega_p_GHz"), col(&spectra, "abs_t"));
    let two_photon = presets::OMEGA_R_DRESSED_GHZ + presets::OMEGA_MOD_MHZ * 1e-3;
    let mut worst_offset: f64 = 0.0;
    let mut levels: Vec<f64> = dphi.clone();
    levels.dedup();
    for level in &levels {
        let window: Vec<(f64, f64)> = (0..w.len())
            .filter(|&i| dphi[i] == *level && (w[i] - two_photon).abs() <= 5e-3)
            .map(|i| (w[i], abs_t[i]))
            .collect();
        let peak = window.iter().copied().fold((0.0, f64::NEG_INFINITY), |a, b| if b.1 > a.1 { b } else { a });
        worst_offset = worst_offset.max((peak.0 - two_photon).abs() * 1e3);
    }
    r.line(
        2,
        "EIT spectrum",
        rms < 0.02 && r2 > 0.99 && worst_offset < 1.0 && elapsed < Duration::from_secs(30),
        format!(
            "max RMS |t_c| residual {rms:.4} (< 0.02), R²(Ω_Φ vs δΦ) = {r2:.6} (> 0.99), \
             transparency peak within {worst_offset:.3} MHz of ω̃_r + ω_Φ (< 1 MHz) over {} δΦ values; runtime limit 30 s",
            levels.len()
        ),
        elapsed,
    );
}

fn frame_equivalence(r: &mut Report) {
    let start = Instant::now();
    let device = paper_device();
    let rates = Rates::from_device(&device);
    let levels = [0.05, 0.10, 0.15];
    let worst: Vec<(f64, f64, f64)> = levels
        .par_iter()
        .map(|&dphi| {
            let lab_spec = HamiltonianSpec::new(Frame::LabRotatingAtProbe, device.clone(), paper_drive(dphi), 3);
            let mapped = effective_from_lab(&lab_spec, &rates).unwrap();
            let center = mapped.spec.device.omega_r_dressed + lab_spec.drive.omega_mod;
            let grid = uniform_grid(center - mhz(15.0), center + mhz(15.0), 31).unwrap();
            let eff = sweep_spectrum(&grid, &mapped.spec, Engine::Effective).unwrap();
            let lab = sweep_spectrum(&grid, &lab_spec, Engine::LabPeriodic).unwrap();
            let d = eff.t_c.iter().zip(&lab.t_c).map(|(a, b)| (a.norm() - b.norm()).abs()).fold(0.0, f64::max);
            (dphi, d, mapped.coupling_phase)
        })
        .collect();
    let max = worst.iter().map(|w| w.1).fold(0.0, f64::max);
    let elapsed = start.elapsed();
    let per_level: Vec<String> = worst
        .iter()
        .map(|(p, d, phase)| format!("δΦ={p}: {d:.4}, coupling phase {phase:.3} rad"))
        .collect();
    r.line(
        3,
        "frame equivalence",
        max < 0.03 && elapsed < Duration::from_secs(300),
        format!(
            "max ||t_lab| − |t_eff|| over the mapped two-photon resonance ± 15 MHz = {max:.4} (< 0.03) [{}]; runtime limit 300 s",
            per_level.join("; ")
        ),
        elapsed,
    );
}

fn slow_light(r: &mut Report, config: &ExperimentConfig, root: &Path) {
    let (dir, elapsed) = run(Preset::SlowLight, config, root);
    let t = table(&dir, "slow_light.csv");
    let (om, dt, vg) = (col(&t, "omega_phi_MHz"), col(&t, "delta_t_ns"), col(&t, "v_g_km_s"));
    let pick = |target: f64| om.iter().position(|o| (o - target).abs() < 1e-6).expect("sweep point present");
    let (a, b) = (pick(13.3), pick(18.0));
    let per_trace = elapsed / om.len() as u32;
    r.line(
        4,
        "slow light",
        within(dt[a], 95.0, 10.0) && within(dt[b], 69.0, 8.0) && within(vg[a], 3.6, 0.4) && per_trace < Duration::from_secs(60),
        format!(
            "Δ_t(13.3 MHz) = {:.1} ns (95 ± 10), Δ_t(18 MHz) = {:.1} ns (69 ± 8), v_g(13.3 MHz) = {:.2} km/s (3.6 ± 0.4); \
             {:.1} s per trace (limit 60 s)",
            dt[a],
            dt[b],
            vg[a],
            per_trace.as_secs_f64()
        ),
        elapsed,
    );
}

fn delay_consistency(r: &mut Report, config: &ExperimentConfig, root: &Path) {
    let (dir, elapsed) = run(Preset::DelayScan, config, root);
    let t = table(&dir, "delay_scan.csv");
    let (om, pulse, phase) = (col(&t, "omega_phi_MHz"), col(&t, "pulse_delay_ns"), col(&t, "phase_delay_ns"));
    let ratios: Vec<f64> = pulse.iter().zip(&phase).map(|(p, q)| p / q).collect();
    let bad: Vec<String> = om
        .iter()
        .zip(&ratios)
        .filter(|(_, q)| (*q - 1.0).abs() > 0.10)
        .map(|(o, q)| format!("{o:.0} MHz: {q:.3}"))
        .collect();
    let range = ratios.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), q| (lo.min(*q), hi.max(*q)));
    r.line(
        5,
        "delay consistency",
        bad.is_empty(),
        format!(
            "pulse/phase delay ratio in [{:.3}, {:.3}] over {} points in 13–25 MHz (target 1 ± 0.10){}",
            range.0,
            range.1,
            om.len(),
            if bad.is_empty() { String::new() } else { format!("; outside: {}", bad.join(", ")) }
        ),
        elapsed,
    );
}

fn ideal_depth(r: &mut Report) {
    let start = Instant::now();
    let mut device = paper_device();
    device.kappa = 0.0;
    device.gamma_phi = 0.0;
    let center = device.omega_r_dressed + mhz(presets::OMEGA_MOD_MHZ);
    let levels: Vec<f64> = (0..13).map(|k| 13.0 + k as f64).collect();
    let errors: Vec<f64> = levels
        .par_iter()
        .map(|&om| {
            let mut drive = paper_drive(presets::delta_phi_for(&device, mhz(om)).unwrap());
            drive.omega_p_rabi = mhz(0.1);
            let half = 0.02 * mhz(om).powi(2) / device.gamma_relax;
            let grid = uniform_grid(center - half, center + half, 41).unwrap();
            let spec = HamiltonianSpec::new(Frame::EffectiveTimeIndependent, device.clone(), drive, 3);
            let s = sweep_spectrum(&grid, &spec, Engine::Effective).unwrap();
            let d = delay_from_phase(&s, center).unwrap().delay;
            let ideal = ideal_delay(mhz(om), device.gamma_relax);
            (d - ideal).abs() / ideal
        })
        .collect();
    let worst = errors.iter().copied().fold(0.0, f64::max);
    r.line(
        6,
        "ideal optical depth",
        worst < 0.01,
        format!("max |Δ_t − 2Γ/Ω_Φ²|/(2Γ/Ω_Φ²) = {:.2e} over Ω_Φ/2π = 13–25 MHz with κ = γ_φ = 0 (< 1e-2)", worst),
        start.elapsed(),
    );
}

fn storage(r: &mut Report, config: &ExperimentConfig, root: &Path) {
    let (dir, elapsed) = run(Preset::Store, config, root);
    let fit = json(&dir, "store_fit.json");
    let n_r = fit["mean_input_photons"].as_f64().unwrap();
    let gamma_eit = fit["gamma_eit_MHz"].as_f64().unwrap();
    let eta = fit["max_eta"].as_f64().unwrap();
    let rate = fit["decay_rate_MHz"].as_f64().unwrap();
    let checks = [
        within(n_r, 0.080, 0.002),
        within(gamma_eit, 1.54, 0.02),
        within(eta, 0.05, 0.015),
        within(rate, 0.76, 0.2 * 0.76),
        elapsed < Duration::from_secs(120),
    ];
    r.line(
        7,
        "storage",
        checks.iter().all(|c| *c),
        format!(
            "⟨N_R⟩ = {n_r:.4} (0.080 ± 0.002){}, γ_EIT/2π = {gamma_eit:.3} MHz (1.54 ± 0.02){}, max η = {:.2} % (5 ± 1.5){}, \
             decay rate/2π = {rate:.3} MHz (0.76 ± 20 %){}; runtime limit 120 s",
            mark(checks[0]),
            mark(checks[1]),
            100.0 * eta,
            mark(checks[2]),
            mark(checks[3]),
        ),
        elapsed,
    );
}

fn mark(ok: bool) -> &'static str {
    if ok {
        " ok"
    } else {
        " MISS"
    }
}

fn capture(r: &mut Report, config: &ExperimentConfig, root: &Path) {
    let (dir, elapsed) = run(Preset::CaptureScan, config, root);
    let s = json(&dir, "capture_scan.json");
    let real = s["max_eta_c_real"].as_f64().unwrap();
    let ideal = s["max_eta_c_ideal"].as_f64().unwrap();
    r.line(
        8,
        "capture efficiency",
        within(ideal, 0.40, 0.04) && within(real, 0.25, 0.04) && elapsed < Duration::from_secs(120),
        format!(
            "max η_c = {:.1} % ideal (40 ± 4), {:.1} % real (25 ± 4); runtime limit 120 s",
            100.0 * ideal,
            100.0 * real
        ),
        elapsed,
    );
}

fn shaping(r: &mut Report, config: &ExperimentConfig, root: &Path) {
    let (dir, elapsed) = run(Preset::Shape, config, root);
    let t = table(&dir, "shape.csv");
    let (om, height, fwhm) = (col(&t, "omega_retrieve_MHz"), col(&t, "peak_alpha"), col(&t, "fwhm_ns"));
    let pick = |target: f64| om.iter().position(|o| (o - target).abs() < 1e-6).expect("sweep point present");
    let (lo, hi) = (pick(14.6), pick(24.4));
    r.line(
        9,
        "pulse shaping",
        height[hi] > height[lo] && fwhm[hi] < fwhm[lo] && elapsed < Duration::from_secs(60),
        format!(
            "24.4 MHz: peak {:.5}, FWHM {:.1} ns; 14.6 MHz: peak {:.5}, FWHM {:.1} ns (higher and narrower at 24.4 MHz); runtime limit 60 s",
            height[hi], fwhm[hi], height[lo], fwhm[lo]
        ),
        elapsed,
    );
}

fn property_sample(r: &mut Report) {
    let start = Instant::now();
    let device = paper_device();
    let rates = Rates::from_device(&device);
    let mut notes = Vec::new();
    let mut ok = true;

    let mut drive = paper_drive(presets::delta_phi_for(&device, mhz(18.0)).unwrap());
    drive.omega_p_rabi = mhz(20.0);
    let spec = effective(drive.clone());
    let grid: Vec<f64> = (0..=100).map(|k| 4.0 * k as f64).collect();
    let traj = evolve(&DensityMatrix::ground(3).unwrap(), &spec, &grid, &rates, &EvolveOptions::default()).unwrap();
    let trace_err = traj.states.iter().map(|s| (s.trace().re - 1.0).abs()).fold(0.0, f64::max);
    let min_eig = traj.states.iter().flat_map(|s| s.eigenvalues()).fold(f64::INFINITY, f64::min);
    ok &= trace_err < 1e-9 && min_eig > -1e-9;
    notes.push(format!("trace err {trace_err:.1e}, min eigenvalue {min_eig:.1e}"));

    drive.omega_p_rabi = mhz(0.3);
    let sigma = |n: usize| {
        let s = HamiltonianSpec::new(Frame::EffectiveTimeIndependent, device.clone(), drive.clone(), n);
        expectation(&steady_state(&s, &rates).unwrap(), &qubit_lowering(n).unwrap()).unwrap()
    };
    let fock = (sigma(3) - sigma(6)).norm();
    ok &= fock < 1e-6;
    notes.push(format!("Fock doubling Δ⟨σ⟩ {fock:.1e}"));

    drive.omega_p_rabi = mhz(5.0);
    let spec = effective(drive);
    let ss = steady_state(&spec, &rates).unwrap();
    let long = evolve(&DensityMatrix::ground(3).unwrap(), &spec, &[0.0, 60.0 / rates.kappa], &rates, &EvolveOptions::default())
        .unwrap();
    let dist = long.states[1].trace_distance(&ss).unwrap();
    ok &= dist < 1e-6;
    notes.push(format!("steady vs long-time {dist:.1e}"));

    let pulse = ProbePulse {
        amp: mhz(presets::PULSE_RABI_MHZ),
        tau_d: 50.0,
        t0: 0.0,
        carrier: ghz(presets::OMEGA_P0_GHZ),
    };
    let tgrid = pulse_grid(-200.0, 900.0, 1.0).unwrap();
    let trace = propagate(&device, &pulse, &ModulationSchedule::constant(mhz(18.0)), PulseFrame::Effective, &tgrid, &PulseSetup::default())
        .unwrap();
    let energy = |v: &[f64]| v.windows(2).map(|w| 0.5 * (w[0] * w[0] + w[1] * w[1])).sum::<f64>();
    let ratio = energy(&trace.alpha_out_abs) / energy(&trace.alpha_in);
    ok &= ratio <= 1.0 + 1e-6;
    notes.push(format!("∫|α_out|²/∫|α_in|² {ratio:.4}"));

    let wq = ghz(presets::OMEGA_Q_DRESSED_GHZ);
    let fgrid = uniform_grid(wq - mhz(300.0), wq + mhz(300.0), 401).unwrap();
    let truth = (mhz(121.0), mhz(3.0));
    let t: Vec<Complex64> = fgrid
        .iter()
        .map(|w| analytic_transmission(wq - w, 0.0, truth.0, truth.0 / 2.0 + truth.1, 0.0, 0.0).unwrap())
        .collect();
    let fit = fit_two_level(&Spectrum::new(fgrid, t, device.clone(), paper_drive(0.0)).unwrap()).unwrap();
    let fit_ok = fit.residual_norm < 1e-10 && (fit.gamma_relax - truth.0).abs() < 1e-8 && (fit.gamma_phi - truth.1).abs() < 1e-8;
    ok &= fit_ok;
    notes.push(format!("two-level fit residual {:.1e}", fit.residual_norm));

    r.line(
        10,
        "property suites (deterministic sample)",
        ok,
        format!("{}; randomized suites run as crate tests", notes.join(", ")),
        start.elapsed(),
    );
}

fn main() {
    let config = config();
    let root = tempfile::tempdir().unwrap();
    let mut report = Report {
        passed: 0,
        failed: Vec::new(),
    };
    println!("acceptance report");
    two_level_extinction(&mut report);
    eit_spectrum(&mut report, &config, root.path());
    frame_equivalence(&mut report);
    slow_light(&mut report, &config, root.path());
    delay_consistency(&mut report, &config, root.path());
    ideal_depth(&mut report);
    storage(&mut report, &config, root.path());
    capture(&mut report, &config, root.path());
    shaping(&mut report, &config, root.path());
    property_sample(&mut report);
    println!(
        "summary: {} passed, {} failed{}",
        report.passed,
        report.failed.len(),
        if report.failed.is_empty() {
            String::new()
        } else {
            format!(" (criteria {:?})", report.failed)
        }
    );
}
