//! CSV emission for runs and sweeps. All files carry a header row; numbers
//! use Rust's shortest round-trip formatting so reruns diff cleanly.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::Result;
use crate::parareal::PararealRunReport;
use crate::propagate::TraceRow;

pub fn errors_csv(report: &PararealRunReport) -> String {
    let mut out = String::from("block,subdomain,iteration,err_x,err_v\n");
    for r in &report.errors {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            r.block, r.subdomain, r.iteration, r.err_x, r.err_v
        );
    }
    out
}

pub fn conservation_csv(report: &PararealRunReport) -> String {
    let mut out = String::from(
        "block,iteration,time,kinetic,field_energy,field_energy_z,total_energy,\
         momentum_x,momentum_y,momentum_z,charge_err\n",
    );
    for r in &report.conservation {
        let q = r.row.quantities;
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{}",
            r.block,
            r.iteration,
            r.row.t,
            q.kinetic,
            q.field_energy,
            q.field_energy_z,
            q.total_energy,
            q.momentum[0],
            q.momentum[1],
            q.momentum[2],
            q.charge_k0_error
        );
    }
    out
}

pub fn timings_csv(timings: &[(String, f64)]) -> String {
    let mut out = String::from("phase,seconds\n");
    for (phase, secs) in timings {
        let _ = writeln!(out, "{phase},{secs}");
    }
    out
}

/// Serial-run energy trace: one row per step boundary.
pub fn energy_trace_csv(rows: &[TraceRow]) -> String {
    let mut out = String::from(
        "time,kinetic,field_energy,field_energy_z,total_energy,\
         momentum_x,momentum_y,momentum_z,charge_err\n",
    );
    for r in rows {
        let q = r.quantities;
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            r.t,
            q.kinetic,
            q.field_energy,
            q.field_energy_z,
            q.total_energy,
            q.momentum[0],
            q.momentum[1],
            q.momentum[2],
            q.charge_k0_error
        );
    }
    out
}

/// Per-iteration fitted exponents from a sweep.
pub fn slopes_csv(slopes: &[(usize, f64)]) -> String {
    let mut out = String::from("iteration,slope\n");
    for (k, slope) in slopes {
        let _ = writeln!(out, "{k},{slope}");
    }
    out
}

pub fn write_file(dir: &Path, name: &str, contents: &str) -> Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join(name), contents)?;
    Ok(())
}
