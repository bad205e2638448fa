//! Run-mode drivers: serial, parareal, convergence sweep and the
//! coarse-propagator timing grid. Everything lands in the output directory
//! as CSV next to the manifest.

use std::fmt::Write as _;
use std::path::Path;
use std::time::Instant;

use vpint::diagnostics::fit_power_law;
use vpint::error::{Error, Result};
use vpint::init::sample;
use vpint::parareal::{run_parareal, PararealOptions, PararealRunReport, TimePartition};
use vpint::propagate::Propagator;
use vpint::report;
use vpint::state::{PropagatorConfig, Scheme};

use crate::config::{manifest, HeatmapScheme, Mode, RunConfig, SweepAxis};

pub fn run(cfg: &RunConfig, out_dir: &Path) -> Result<()> {
    report::write_file(out_dir, "manifest.txt", &manifest(cfg))?;
    match cfg.mode {
        Mode::Serial => run_serial(cfg, out_dir),
        Mode::Parareal => run_parareal_mode(cfg, out_dir),
        Mode::Sweep => run_sweep(cfg, out_dir),
        Mode::Heatmap => run_heatmap(cfg, out_dir),
    }
}

fn run_serial(cfg: &RunConfig, out_dir: &Path) -> Result<()> {
    let start = Instant::now();
    let state = sample(&cfg.scenario, cfg.particles)?;
    let fine = Propagator::new(cfg.fine.clone(), cfg.scenario.domain())?;
    if cfg.dump_density_spectrum {
        if let Some(spec) = fine.density_spectrum(&state) {
            report::write_file(out_dir, "density_spectrum_t0.csv", &spec.to_csv())?;
        }
    }
    let mut rows = Vec::new();
    let final_state = fine.propagate_traced(&state, cfg.t_start, cfg.t_end, &mut rows)?;
    report::write_file(out_dir, "energy_trace.csv", &report::energy_trace_csv(&rows))?;
    report::write_file(out_dir, "final_state.csv", &final_state.to_csv())?;
    let timings = vec![("total".to_string(), start.elapsed().as_secs_f64())];
    report::write_file(out_dir, "timings.csv", &report::timings_csv(&timings))?;
    Ok(())
}

fn parareal_once(cfg: &RunConfig, fine: &PropagatorConfig, coarse: &PropagatorConfig, particles: usize, max_iterations: Option<usize>) -> Result<PararealRunReport> {
    let state = sample(&cfg.scenario, particles)?;
    let domain = cfg.scenario.domain();
    let fine = Propagator::new(fine.clone(), domain)?;
    let coarse = Propagator::new(coarse.clone(), domain)?;
    let partition = TimePartition::new(cfg.t_start, cfg.t_end, cfg.subdomains)?;
    let opts = PararealOptions {
        eps_stop: cfg.eps_stop,
        blocks: cfg.blocks,
        max_iterations,
        concurrent: cfg.concurrent,
        record_traces: true,
    };
    run_parareal(&state, &fine, &coarse, &partition, &opts)
}

fn run_parareal_mode(cfg: &RunConfig, out_dir: &Path) -> Result<()> {
    let start = Instant::now();
    let report_data = parareal_once(cfg, &cfg.fine, &cfg.coarse, cfg.particles, cfg.max_iterations)?;
    report::write_file(out_dir, "errors.csv", &report::errors_csv(&report_data))?;
    report::write_file(
        out_dir,
        "conservation.csv",
        &report::conservation_csv(&report_data),
    )?;
    report::write_file(out_dir, "final_state.csv", &report_data.final_state.to_csv())?;
    let mut timings = report_data.timings.clone();
    timings.push(("wall".to_string(), start.elapsed().as_secs_f64()));
    timings.push(("fine_solves".to_string(), report_data.fine_solves as f64));
    report::write_file(out_dir, "timings.csv", &report::timings_csv(&timings))?;
    Ok(())
}

/// Apply one sweep value to copies of the base configs. Returns the
/// per-value x coordinate used in the slope fit and the particle count.
fn apply_sweep_value(
    cfg: &RunConfig,
    axis: SweepAxis,
    value: f64,
) -> Result<(PropagatorConfig, PropagatorConfig, usize, f64)> {
    let mut fine = cfg.fine.clone();
    let mut coarse = cfg.coarse.clone();
    let mut particles = cfg.particles;
    let x = match axis {
        SweepAxis::ParticlesPerCell => {
            particles = (value * (fine.n as f64).powi(3)).round() as usize;
            value
        }
        SweepAxis::MeshSize => {
            let n = value.round() as usize;
            fine.n = n;
            coarse.n = n;
            let pc = cfg
                .particles_per_cell
                .ok_or_else(|| Error::Config("h sweep needs particles_per_cell".into()))?;
            particles = (pc * (n as f64).powi(3)).round() as usize;
            // Fit against the mesh size.
            cfg.scenario.domain().length / n as f64
        }
        SweepAxis::CoarseDt => {
            coarse.dt = fine.dt * value;
            coarse.dt
        }
        SweepAxis::Epsilon => {
            coarse.scheme = Scheme::PifNufft { eps: value };
            value
        }
    };
    fine.validate().map_err(|e| Error::Config(format!("sweep value {value}: {e}")))?;
    coarse
        .validate()
        .map_err(|e| Error::Config(format!("sweep value {value}: {e}")))?;
    Ok((fine, coarse, particles, x))
}

fn run_sweep(cfg: &RunConfig, out_dir: &Path) -> Result<()> {
    let axis = cfg.sweep_axis.expect("sweep mode has an axis");
    let start = Instant::now();

    let mut errors_csv = String::from("value,block,subdomain,iteration,err_x,err_v\n");
    let mut xs = Vec::new();
    let mut per_iteration: Vec<Vec<(f64, f64)>> = vec![Vec::new(); cfg.sweep_iterations];
    let mut timings = Vec::new();

    for &value in &cfg.sweep_values {
        let (fine, coarse, particles, x) = apply_sweep_value(cfg, axis, value)?;
        let t0 = Instant::now();
        let report_data = parareal_once(cfg, &fine, &coarse, particles, Some(cfg.sweep_iterations))?;
        timings.push((format!("{}={}", axis.label(), value), t0.elapsed().as_secs_f64()));
        xs.push(x);
        for r in &report_data.errors {
            let _ = writeln!(
                errors_csv,
                "{},{},{},{},{},{}",
                value, r.block, r.subdomain, r.iteration, r.err_x, r.err_v
            );
        }
        for k in 1..=cfg.sweep_iterations {
            if let Some(e) = report_data.max_error_at_iteration(k) {
                per_iteration[k - 1].push((e.err_x, e.err_v));
            }
        }
    }

    // Fitted exponent per iteration, position and velocity errors. Two
    // sweep points degenerate to the log-log secant slope.
    let fit = |ys: &[f64]| -> Result<f64> {
        if xs.len() == 2 {
            Ok((ys[1] / ys[0]).ln() / (xs[1] / xs[0]).ln())
        } else {
            fit_power_law(&xs, ys)
        }
    };
    let mut slopes = String::from("iteration,slope_x,slope_v\n");
    for (k, entries) in per_iteration.iter().enumerate() {
        if entries.len() != xs.len() {
            continue;
        }
        let ex: Vec<f64> = entries.iter().map(|e| e.0).collect();
        let ev: Vec<f64> = entries.iter().map(|e| e.1).collect();
        let _ = writeln!(slopes, "{},{},{}", k + 1, fit(&ex)?, fit(&ev)?);
    }

    report::write_file(out_dir, "errors.csv", &errors_csv)?;
    report::write_file(out_dir, "slopes.csv", &slopes)?;
    timings.push(("total".to_string(), start.elapsed().as_secs_f64()));
    report::write_file(out_dir, "timings.csv", &report::timings_csv(&timings))?;
    Ok(())
}

fn run_heatmap(cfg: &RunConfig, out_dir: &Path) -> Result<()> {
    let start = Instant::now();
    let mut csv = String::from("scheme,coarsening,epsilon,wall_seconds,iterations,fine_solves,converged\n");
    for scheme in &cfg.heatmap_schemes {
        for &ratio in &cfg.heatmap_coarsening {
            let mut coarse = cfg.coarse.clone();
            coarse.dt = cfg.fine.dt * ratio as f64;
            let (label, eps_str) = match scheme {
                HeatmapScheme::Pic => {
                    coarse.scheme = Scheme::Pic;
                    ("pic".to_string(), String::new())
                }
                HeatmapScheme::Pif { eps } => {
                    coarse.scheme = Scheme::PifNufft { eps: *eps };
                    ("pif".to_string(), format!("{eps:e}"))
                }
            };
            coarse
                .validate()
                .map_err(|e| Error::Config(format!("heatmap cell {label} x{ratio}: {e}")))?;
            let t0 = Instant::now();
            let report_data = parareal_once(cfg, &cfg.fine, &coarse, cfg.particles, cfg.max_iterations)?;
            let _ = writeln!(
                csv,
                "{},{},{},{},{},{},{}",
                label,
                ratio,
                eps_str,
                t0.elapsed().as_secs_f64(),
                report_data.iterations.iter().max().unwrap_or(&0),
                report_data.fine_solves,
                report_data.converged
            );
        }
    }
    report::write_file(out_dir, "heatmap.csv", &csv)?;
    let timings = vec![("total".to_string(), start.elapsed().as_secs_f64())];
    report::write_file(out_dir, "timings.csv", &report::timings_csv(&timings))?;
    Ok(())
}
