use ionreg_core::bench::cb::run_cycle_benchmark;
use ionreg_core::bench::crosstalk::run_crosstalk_experiment;
use ionreg_core::bench::parity::{calibrate_phase_offset, phase_grid};
use ionreg_core::bench::rabi::{local_maxima, rabi_flop_experiment};
use ionreg_core::bench::zeeman::zeeman_sweep;
use ionreg_core::fit::{fit_crosstalk_decay, fit_sine};
use ionreg_core::gates::MsGateParams;
use ionreg_core::rng::RNG_ALGORITHM;
use ionreg_core::transpile::{lower, minimize_transports, Circuit, SimMode, Simulator};
use serde_json::json;

use crate::config::{Experiment, RunConfig};
use crate::output::{csv, json, Cell, Outputs};
use crate::CliError;

pub const MANIFEST: &str = "manifest.json";
pub const ANALYSIS: &str = "analysis.json";
pub const PROGRAM: &str = "program.json";

/// Data file written by `experiment`, if it writes one.
pub fn csv_name(experiment: Experiment) -> Option<&'static str> {
    match experiment {
        Experiment::Rabi => Some("rabi.csv"),
        Experiment::Crosstalk => Some("crosstalk.csv"),
        Experiment::ParityScan => Some("parity_scan.csv"),
        Experiment::CycleBench => Some("cycle_bench.csv"),
        Experiment::ZeemanSweep => Some("zeeman_sweep.csv"),
        Experiment::Transpile => None,
    }
}

fn mode_of(config: &RunConfig) -> SimMode {
    if config.exact {
        SimMode::Exact
    } else {
        SimMode::Sampled {
            shots: config.shots as u64,
        }
    }
}

fn mode_label(experiment: Experiment, config: &RunConfig) -> Option<&'static str> {
    match experiment {
        Experiment::Transpile => None,
        Experiment::ZeemanSweep => Some("exact"),
        _ if config.exact => Some("exact"),
        _ => Some("sampled"),
    }
}

fn manifest(experiment: Experiment, config: &RunConfig) -> String {
    json(&json!({
        "tool": env!("CARGO_PKG_NAME"),
        "version": env!("CARGO_PKG_VERSION"),
        "experiment": experiment,
        "mode": mode_label(experiment, config),
        "seed": config.seed,
        "rng": RNG_ALGORITHM,
        "config": config,
    }))
}

/// Validates, simulates and analyses in memory. `circuit` is the source text
/// for `transpile` and ignored otherwise. Nothing is written to disk.
pub fn run(experiment: Experiment, config: &RunConfig, circuit: Option<&str>) -> Result<Outputs, CliError> {
    config.validate()?;
    log::info!("running {experiment} with seed {}", config.seed);
    let mut out = Outputs::default();
    out.add(MANIFEST, manifest(experiment, config));
    let mode = mode_of(config);
    let sim = || Simulator::new(config.noise.clone(), config.rabi_rates_rad_per_s);

    match experiment {
        Experiment::Rabi => {
            let r = &config.rabi;
            let points = rabi_flop_experiment(&r.t_grid(), r.ion, r.rabi_rate_rad_per_s, &config.noise, mode, config.seed)?;
            let t: Vec<f64> = points.iter().map(|p| p.t_s).collect();
            let p2: Vec<f64> = points.iter().map(|p| p.p2bright).collect();
            let sigma: Option<Vec<f64>> = (!config.exact).then(|| points.iter().map(|p| p.p2_sigma).collect());
            let fit = fit_sine(&t, &p2, sigma.as_deref()).map_err(ionreg_core::Error::from)?;
            let p0: Vec<f64> = points.iter().map(|p| p.p0bright).collect();
            let p1: Vec<f64> = points.iter().map(|p| p.p1bright).collect();
            out.add(
                csv_name(experiment).unwrap(),
                csv(
                    &["t_s", "p2bright", "p1bright", "p0bright"],
                    points
                        .iter()
                        .map(|p| vec![p.t_s.into(), p.p2bright.into(), p.p1bright.into(), p.p0bright.into()]),
                ),
            );
            out.add(
                ANALYSIS,
                json(&json!({
                    "rabi_rate_rad_per_s": fit.omega,
                    "rabi_rate_sigma_rad_per_s": fit.fit.sigma("omega"),
                    "injected_rabi_rate_rad_per_s": r.rabi_rate_rad_per_s,
                    "sine_fit": fit,
                    "p0bright_maxima_t_s": local_maxima(&p0).iter().map(|&i| t[i]).collect::<Vec<_>>(),
                    "p1bright_maxima_t_s": local_maxima(&p1).iter().map(|&i| t[i]).collect::<Vec<_>>(),
                })),
            );
        }
        Experiment::Crosstalk => {
            let points = run_crosstalk_experiment(&config.crosstalk, &sim()?, mode, config.seed)?;
            let n: Vec<f64> = points.iter().map(|p| p.n as f64).collect();
            let f: Vec<f64> = points.iter().map(|p| p.f).collect();
            let weighted = points.iter().all(|p| p.sigma > 0.0);
            let sigma: Option<Vec<f64>> = weighted.then(|| points.iter().map(|p| p.sigma).collect());
            let fit = fit_crosstalk_decay(&n, &f, sigma.as_deref()).map_err(ionreg_core::Error::from)?;
            out.add(
                csv_name(experiment).unwrap(),
                csv(
                    &["N", "F", "sigma"],
                    points.iter().map(|p| vec![p.n.into(), p.f.into(), p.sigma.into()]),
                ),
            );
            out.add(ANALYSIS, json(&json!({ "weighted": weighted, "decay_fit": fit })));
        }
        Experiment::ParityScan => {
            let grid = phase_grid(config.parity_scan.points);
            let cal = calibrate_phase_offset(&grid, &sim()?, mode, config.seed, config.parity_scan.bootstrap_resamples)?;
            out.add(
                csv_name(experiment).unwrap(),
                csv(
                    &["phi_dds_rad", "parity", "sigma"],
                    cal.scan
                        .iter()
                        .map(|p| vec![p.phi_dds_rad.into(), p.parity.into(), p.sigma.into()]),
                ),
            );
            out.add(
                ANALYSIS,
                json(&json!({
                    "phi_offset_rad": cal.phi_offset_rad,
                    "phi_offset_deg": cal.phi_offset_rad.to_degrees(),
                    "sigma_fit_rad": cal.sigma_fit_rad,
                    "sigma_bootstrap_rad": cal.sigma_bootstrap_rad,
                    "crossing": cal.crossing,
                })),
            );
        }
        Experiment::CycleBench => {
            let cb = config.cb_config();
            let run = run_cycle_benchmark(&cb, &sim()?, mode, config.cycle_bench.bootstrap_resamples)?;
            out.add(
                csv_name(experiment).unwrap(),
                csv(
                    &["P1", "P2", "m", "l", "f"],
                    run.records.iter().map(|r| {
                        vec![
                            Cell::Text(r.p1.to_string()),
                            Cell::Text(r.p2.to_string()),
                            r.m.into(),
                            r.l.into(),
                            r.f.into(),
                        ]
                    }),
                ),
            );
            out.add(
                ANALYSIS,
                json(&json!({
                    "F": run.estimate.f,
                    "sigma": run.sigma,
                    "terms": run.estimate.terms,
                    "excluded": run.estimate.excluded,
                    "cb_config": cb,
                })),
            );
        }
        Experiment::ZeemanSweep => {
            let z = &config.zeeman_sweep;
            let sweep = zeeman_sweep(&z.dx, &z.dy, &z.model, &config.cb_config(), &config.noise, config.rabi_rates_rad_per_s, z.level)?;
            let rows = sweep.dx_um.iter().enumerate().flat_map(|(i, &x)| {
                let sweep = &sweep;
                sweep.dy_um.iter().enumerate().map(move |(j, &y)| vec![x.into(), y.into(), sweep.f[i][j].into()])
            });
            out.add(csv_name(experiment).unwrap(), csv(&["dx_um", "dy_um", "F"], rows));
            out.add(
                ANALYSIS,
                json(&json!({
                    "level": sweep.level,
                    "has_closed_contour": sweep.has_closed_contour(),
                    "contours": sweep.contours,
                    "errors": sweep.errors,
                })),
            );
        }
        Experiment::Transpile => {
            let text = circuit.ok_or_else(|| CliError::Usage("transpile needs a circuit (--in or transpile.circuit)".into()))?;
            let parsed: Circuit = text.parse()?;
            let lowered = lower(&parsed, config.noise.phi_offset_rad)?;
            let minimized = minimize_transports(&lowered);
            minimized.validate()?;
            let ms = MsGateParams::default();
            let rates = config.rabi_rates_rad_per_s;
            out.add(PROGRAM, json(&minimized));
            out.add(
                ANALYSIS,
                json(&json!({
                    "gates": parsed.len(),
                    "ms_gates": parsed.ms_count(),
                    "pulses": minimized.pulse_count(),
                    "transports_before": lowered.transport_count(),
                    "transports_after": minimized.transport_count(),
                    "duration_before_s": lowered.duration_s(rates, &ms),
                    "duration_after_s": minimized.duration_s(rates, &ms),
                })),
            );
        }
    }
    Ok(out)
}
