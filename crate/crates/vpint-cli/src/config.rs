//! Flat `key = value` run configuration.
//!
//! One assignment per line, `#` starts a comment, keys are dotted paths.
//! The full schema lives in `docs/config-schema.txt`; unknown keys are
//! rejected with the offending path so typos do not silently change a run.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use vpint::error::{Error, Result};
use vpint::init::Scenario;
use vpint::state::{PropagatorConfig, Scheme};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Serial,
    Parareal,
    Sweep,
    Heatmap,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepAxis {
    ParticlesPerCell,
    MeshSize,
    CoarseDt,
    Epsilon,
}

impl SweepAxis {
    pub fn label(&self) -> &'static str {
        match self {
            SweepAxis::ParticlesPerCell => "pc",
            SweepAxis::MeshSize => "h",
            SweepAxis::CoarseDt => "dt_g",
            SweepAxis::Epsilon => "epsilon",
        }
    }
}

/// One coarse-propagator candidate in a heatmap run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum HeatmapScheme {
    Pic,
    Pif { eps: f64 },
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub mode: Mode,
    pub scenario: Scenario,
    pub particles: usize,
    pub particles_per_cell: Option<f64>,
    pub t_start: f64,
    pub t_end: f64,
    pub subdomains: usize,
    pub fine: PropagatorConfig,
    pub coarse: PropagatorConfig,
    pub eps_stop: f64,
    pub blocks: usize,
    pub max_iterations: Option<usize>,
    pub concurrent: bool,
    pub sweep_axis: Option<SweepAxis>,
    pub sweep_values: Vec<f64>,
    pub sweep_iterations: usize,
    pub heatmap_schemes: Vec<HeatmapScheme>,
    pub heatmap_coarsening: Vec<usize>,
    pub dump_density_spectrum: bool,
    /// Methodology warnings recorded in the manifest; the run proceeds.
    pub warnings: Vec<String>,
}

fn bad(key: &str, what: impl std::fmt::Display) -> Error {
    Error::Config(format!("{key}: {what}"))
}

struct Raw {
    map: BTreeMap<String, String>,
}

impl Raw {
    fn get(&self, key: &str) -> Option<&str> {
        self.map.get(key).map(|s| s.as_str()).filter(|s| !s.is_empty())
    }

    fn require(&self, key: &str) -> Result<&str> {
        self.get(key).ok_or_else(|| bad(key, "missing required key"))
    }

    fn parse_f64(&self, key: &str) -> Result<Option<f64>> {
        self.get(key)
            .map(|s| s.parse::<f64>().map_err(|_| bad(key, format!("not a number: {s:?}"))))
            .transpose()
    }

    fn parse_usize(&self, key: &str) -> Result<Option<usize>> {
        self.get(key)
            .map(|s| s.parse::<usize>().map_err(|_| bad(key, format!("not an integer: {s:?}"))))
            .transpose()
    }

    fn parse_bool(&self, key: &str) -> Result<Option<bool>> {
        self.get(key)
            .map(|s| match s {
                "true" | "yes" | "1" => Ok(true),
                "false" | "no" | "0" => Ok(false),
                other => Err(bad(key, format!("not a boolean: {other:?}"))),
            })
            .transpose()
    }
}

const KNOWN_KEYS: &[&str] = &[
    "mode",
    "scenario",
    "seed",
    "particles",
    "particles_per_cell",
    "time.start",
    "time.end",
    "time.subdomains",
    "fine.scheme",
    "fine.modes",
    "fine.dt",
    "fine.epsilon",
    "fine.spline_order",
    "coarse.scheme",
    "coarse.modes",
    "coarse.dt",
    "coarse.epsilon",
    "coarse.spline_order",
    "parareal.tolerance",
    "parareal.blocks",
    "parareal.max_iterations",
    "parareal.concurrent",
    "sweep.axis",
    "sweep.values",
    "sweep.iterations",
    "heatmap.schemes",
    "heatmap.coarsening",
    "output.dump_density_spectrum",
];

fn parse_raw(text: &str) -> Result<Raw> {
    let mut map = BTreeMap::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("line {}: expected key = value", lineno + 1)))?;
        let key = key.trim().to_string();
        if !KNOWN_KEYS.contains(&key.as_str()) {
            return Err(bad(&key, "unknown key"));
        }
        if map.insert(key.clone(), value.trim().to_string()).is_some() {
            return Err(bad(&key, "duplicate key"));
        }
    }
    Ok(Raw { map })
}

fn parse_scheme(
    raw: &Raw,
    prefix: &str,
    scenario: &Scenario,
) -> Result<PropagatorConfig> {
    let scheme_key = format!("{prefix}.scheme");
    let scheme = match raw.require(&scheme_key)? {
        "pif_nudft" => Scheme::PifNudft,
        "pif_nufft" => {
            let eps = raw
                .parse_f64(&format!("{prefix}.epsilon"))?
                .ok_or_else(|| bad(&format!("{prefix}.epsilon"), "required for pif_nufft"))?;
            Scheme::PifNufft { eps }
        }
        "pic" => Scheme::Pic,
        other => return Err(bad(&scheme_key, format!("unknown scheme {other:?}"))),
    };
    let n = raw
        .parse_usize(&format!("{prefix}.modes"))?
        .ok_or_else(|| bad(&format!("{prefix}.modes"), "missing required key"))?;
    let dt = raw
        .parse_f64(&format!("{prefix}.dt"))?
        .ok_or_else(|| bad(&format!("{prefix}.dt"), "missing required key"))?;
    let spline_order = raw.parse_usize(&format!("{prefix}.spline_order"))?.unwrap_or(1);
    let cfg = PropagatorConfig {
        scheme,
        n,
        spline_order,
        dt,
        external: scenario.external_fields(),
    };
    cfg.validate()
        .map_err(|e| bad(prefix, e))?;
    Ok(cfg)
}

pub fn parse(text: &str) -> Result<RunConfig> {
    let raw = parse_raw(text)?;

    let mode = match raw.require("mode")? {
        "serial" => Mode::Serial,
        "parareal" => Mode::Parareal,
        "sweep" => Mode::Sweep,
        "heatmap" => Mode::Heatmap,
        other => return Err(bad("mode", format!("unknown mode {other:?}"))),
    };

    let seed = raw.parse_usize("seed")?.unwrap_or(1) as u64;
    let scenario = match raw.require("scenario")? {
        "landau" => Scenario::landau_damping(seed),
        "two_stream" => Scenario::two_stream(seed),
        "penning" => Scenario::penning_trap(seed),
        other => return Err(bad("scenario", format!("unknown scenario {other:?}"))),
    };

    let fine = parse_scheme(&raw, "fine", &scenario)?;
    let coarse = if raw.get("coarse.scheme").is_some() {
        parse_scheme(&raw, "coarse", &scenario)?
    } else {
        fine.clone()
    };

    let particles = match (raw.parse_usize("particles")?, raw.parse_f64("particles_per_cell")?) {
        (Some(_), Some(_)) => {
            return Err(bad(
                "particles",
                "give either particles or particles_per_cell, not both",
            ))
        }
        (Some(p), None) => p,
        (None, Some(pc)) => {
            if pc <= 0.0 {
                return Err(bad("particles_per_cell", "must be positive"));
            }
            (pc * (fine.n as f64).powi(3)).round() as usize
        }
        (None, None) => return Err(bad("particles", "missing required key")),
    };
    if particles == 0 {
        return Err(bad("particles", "must be >= 1"));
    }

    let t_start = raw.parse_f64("time.start")?.unwrap_or(0.0);
    let t_end = raw
        .parse_f64("time.end")?
        .ok_or_else(|| bad("time.end", "missing required key"))?;
    if !(t_end > t_start) {
        return Err(bad("time.end", "must exceed time.start"));
    }
    let subdomains = raw.parse_usize("time.subdomains")?.unwrap_or(1);

    let blocks = raw.parse_usize("parareal.blocks")?.unwrap_or(1);
    if mode != Mode::Serial {
        if subdomains == 0 {
            return Err(bad("time.subdomains", "must be >= 1"));
        }
        if blocks == 0 || subdomains % blocks != 0 {
            return Err(bad(
                "parareal.blocks",
                format!("{blocks} does not divide time.subdomains = {subdomains}"),
            ));
        }
        // Step sizes must tile the subdomain.
        let dt_sub = (t_end - t_start) / subdomains as f64;
        for (key, dt) in [("fine.dt", fine.dt), ("coarse.dt", coarse.dt)] {
            let ratio = dt_sub / dt;
            if (ratio - ratio.round()).abs() > 1e-9 * ratio.abs().max(1.0) {
                return Err(bad(
                    key,
                    format!("{dt} does not divide the subdomain length {dt_sub}"),
                ));
            }
        }
    } else {
        let ratio = (t_end - t_start) / fine.dt;
        if (ratio - ratio.round()).abs() > 1e-9 * ratio.abs().max(1.0) {
            return Err(bad("fine.dt", "does not divide the run duration"));
        }
    }

    let mut warnings = Vec::new();
    let sweep_axis = match mode {
        Mode::Sweep => Some(match raw.require("sweep.axis")? {
            "pc" => SweepAxis::ParticlesPerCell,
            "h" => SweepAxis::MeshSize,
            "dt_g" => SweepAxis::CoarseDt,
            "epsilon" => SweepAxis::Epsilon,
            other => return Err(bad("sweep.axis", format!("unknown axis {other:?}"))),
        }),
        _ => None,
    };
    let sweep_values: Vec<f64> = match raw.get("sweep.values") {
        Some(list) => list
            .split(',')
            .map(|v| {
                v.trim()
                    .parse::<f64>()
                    .map_err(|_| bad("sweep.values", format!("not a number: {v:?}")))
            })
            .collect::<Result<_>>()?,
        None if mode == Mode::Sweep => {
            return Err(bad("sweep.values", "missing required key"))
        }
        None => Vec::new(),
    };
    if mode == Mode::Sweep && sweep_values.len() < 2 {
        return Err(bad("sweep.values", "need at least two values"));
    }

    // Methodology checks: hold the other error components fixed while one
    // is swept. Violations are recorded, not fatal.
    if let Some(axis) = sweep_axis {
        let same_dt = (fine.dt - coarse.dt).abs() <= 1e-12 * fine.dt;
        match axis {
            SweepAxis::ParticlesPerCell | SweepAxis::MeshSize | SweepAxis::Epsilon => {
                if !same_dt {
                    warnings.push(format!(
                        "sweeping {} with coarse.dt != fine.dt mixes the temporal error in",
                        axis.label()
                    ));
                }
            }
            SweepAxis::CoarseDt => {
                if let (Scheme::PifNufft { eps: ef }, Scheme::PifNufft { eps: eg }) =
                    (fine.scheme, coarse.scheme)
                {
                    if (ef - eg).abs() > 1e-15 {
                        warnings.push(
                            "sweeping dt_g with different nufft tolerances mixes the spatial error in"
                                .into(),
                        );
                    }
                }
            }
        }
        if axis == SweepAxis::Epsilon && coarse.scheme == Scheme::Pic {
            return Err(bad("sweep.axis", "epsilon sweep needs a pif_nufft coarse scheme"));
        }
    }

    let heatmap_schemes = match raw.get("heatmap.schemes") {
        Some(list) => list
            .split(',')
            .map(|item| {
                let item = item.trim();
                if item == "pic" {
                    Ok(HeatmapScheme::Pic)
                } else if let Some(eps) = item.strip_prefix("pif:") {
                    eps.parse::<f64>()
                        .map(|eps| HeatmapScheme::Pif { eps })
                        .map_err(|_| bad("heatmap.schemes", format!("bad tolerance in {item:?}")))
                } else {
                    Err(bad(
                        "heatmap.schemes",
                        format!("expected pic or pif:<eps>, got {item:?}"),
                    ))
                }
            })
            .collect::<Result<_>>()?,
        None if mode == Mode::Heatmap => {
            return Err(bad("heatmap.schemes", "missing required key"))
        }
        None => Vec::new(),
    };
    let heatmap_coarsening: Vec<usize> = match raw.get("heatmap.coarsening") {
        Some(list) => list
            .split(',')
            .map(|v| {
                v.trim()
                    .parse::<usize>()
                    .map_err(|_| bad("heatmap.coarsening", format!("not an integer: {v:?}")))
            })
            .collect::<Result<_>>()?,
        None if mode == Mode::Heatmap => {
            return Err(bad("heatmap.coarsening", "missing required key"))
        }
        None => Vec::new(),
    };

    Ok(RunConfig {
        mode,
        scenario,
        particles,
        particles_per_cell: raw.parse_f64("particles_per_cell")?,
        t_start,
        t_end,
        subdomains,
        fine,
        coarse,
        eps_stop: raw.parse_f64("parareal.tolerance")?.unwrap_or(1e-11),
        blocks,
        max_iterations: raw.parse_usize("parareal.max_iterations")?,
        concurrent: raw.parse_bool("parareal.concurrent")?.unwrap_or(true),
        sweep_axis,
        sweep_values,
        sweep_iterations: raw.parse_usize("sweep.iterations")?.unwrap_or(2),
        heatmap_schemes,
        heatmap_coarsening,
        dump_density_spectrum: raw.parse_bool("output.dump_density_spectrum")?.unwrap_or(false),
        warnings,
    })
}

fn scheme_lines(out: &mut String, prefix: &str, cfg: &PropagatorConfig) {
    let (name, eps) = match cfg.scheme {
        Scheme::PifNudft => ("pif_nudft", None),
        Scheme::PifNufft { eps } => ("pif_nufft", Some(eps)),
        Scheme::Pic => ("pic", None),
    };
    let _ = writeln!(out, "{prefix}.scheme = {name}");
    if let Some(eps) = eps {
        let _ = writeln!(out, "{prefix}.epsilon = {eps:e}");
    }
    let _ = writeln!(out, "{prefix}.modes = {}", cfg.n);
    let _ = writeln!(out, "{prefix}.dt = {}", cfg.dt);
    let _ = writeln!(out, "{prefix}.spline_order = {}", cfg.spline_order);
}

/// The fully resolved configuration: re-running from the manifest must
/// reproduce the run bit for bit.
pub fn manifest(cfg: &RunConfig) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# vpint run manifest (re-runnable as a config file)");
    let _ = writeln!(out, "# version = {}", env!("CARGO_PKG_VERSION"));
    let _ = writeln!(
        out,
        "mode = {}",
        match cfg.mode {
            Mode::Serial => "serial",
            Mode::Parareal => "parareal",
            Mode::Sweep => "sweep",
            Mode::Heatmap => "heatmap",
        }
    );
    let _ = writeln!(out, "scenario = {}", cfg.scenario.label());
    let _ = writeln!(out, "seed = {}", cfg.scenario.seed);
    let _ = writeln!(out, "particles = {}", cfg.particles);
    let _ = writeln!(out, "time.start = {}", cfg.t_start);
    let _ = writeln!(out, "time.end = {}", cfg.t_end);
    let _ = writeln!(out, "time.subdomains = {}", cfg.subdomains);
    scheme_lines(&mut out, "fine", &cfg.fine);
    scheme_lines(&mut out, "coarse", &cfg.coarse);
    let _ = writeln!(out, "parareal.tolerance = {:e}", cfg.eps_stop);
    let _ = writeln!(out, "parareal.blocks = {}", cfg.blocks);
    if let Some(m) = cfg.max_iterations {
        let _ = writeln!(out, "parareal.max_iterations = {m}");
    }
    let _ = writeln!(out, "parareal.concurrent = {}", cfg.concurrent);
    if let Some(axis) = cfg.sweep_axis {
        let _ = writeln!(out, "sweep.axis = {}", axis.label());
        let values: Vec<String> = cfg.sweep_values.iter().map(|v| format!("{v}")).collect();
        let _ = writeln!(out, "sweep.values = {}", values.join(","));
        let _ = writeln!(out, "sweep.iterations = {}", cfg.sweep_iterations);
    }
    for w in &cfg.warnings {
        let _ = writeln!(out, "# warning = {w}");
    }
    out
}
