//! A configured propagator: one field-solve scheme plus a step size,
//! applied over an interval by repeated kick-drift-kick steps.
//!
//! The field depends only on positions, which do not change between the
//! second half-kick of one step and the first half-kick of the next, so
//! each step performs a single field solve and hands it to the next step.

use crate::diagnostics::{conserved_quantities, ConservedQuantities};
use crate::error::{Error, Result};
use crate::pic::PicSolver;
use crate::pif::{FieldSolve, PifSolver};
use crate::pusher::step_kdk_cached;
use crate::state::{Domain, PhaseSpaceState, PropagatorConfig, Scheme, M_E};

#[derive(Debug, Clone)]
enum Solver {
    Pif(PifSolver),
    Pic(PicSolver),
}

/// One diagnostics row recorded during a traced propagation.
#[derive(Debug, Clone, Copy)]
pub struct TraceRow {
    pub t: f64,
    pub quantities: ConservedQuantities,
}

#[derive(Debug, Clone)]
pub struct Propagator {
    pub cfg: PropagatorConfig,
    pub domain: Domain,
    solver: Solver,
}

impl Propagator {
    pub fn new(cfg: PropagatorConfig, domain: Domain) -> Result<Self> {
        cfg.validate()?;
        let solver = match cfg.scheme {
            Scheme::Pic => Solver::Pic(PicSolver::new(&cfg, &domain)?),
            _ => Solver::Pif(PifSolver::new(&cfg, &domain)?),
        };
        Ok(Propagator {
            cfg,
            domain,
            solver,
        })
    }

    pub fn solve(&self, state: &PhaseSpaceState) -> Result<FieldSolve> {
        match &self.solver {
            Solver::Pif(s) => s.field_at_particles(state),
            Solver::Pic(s) => s.field_at_particles(state),
        }
    }

    /// Scattered density spectrum, for per-step debug dumps.
    pub fn density_spectrum(&self, state: &PhaseSpaceState) -> Option<crate::FieldSpectrum> {
        match &self.solver {
            Solver::Pif(s) => Some(s.density_spectrum(state)),
            Solver::Pic(_) => None,
        }
    }

    /// Number of steps covering `[t0, t1]`; the interval must be an integer
    /// multiple of the configured step.
    pub fn step_count(&self, t0: f64, t1: f64) -> Result<usize> {
        let span = t1 - t0;
        let ratio = span / self.cfg.dt;
        let rounded = ratio.round();
        if (ratio - rounded).abs() > 1e-9 * ratio.abs().max(1.0) || rounded < 0.0 {
            return Err(Error::Config(format!(
                "interval [{t0}, {t1}] is not an integer number of dt={} steps",
                self.cfg.dt
            )));
        }
        Ok(rounded as usize)
    }

    pub fn propagate(&self, state: &PhaseSpaceState, t0: f64, t1: f64) -> Result<PhaseSpaceState> {
        self.propagate_inner(state, t0, t1, &mut None)
    }

    /// Propagate while appending one diagnostics row per step boundary
    /// (including the initial one).
    pub fn propagate_traced(
        &self,
        state: &PhaseSpaceState,
        t0: f64,
        t1: f64,
        trace: &mut Vec<TraceRow>,
    ) -> Result<PhaseSpaceState> {
        let mut sink = Some(trace);
        self.propagate_inner(state, t0, t1, &mut sink)
    }

    fn propagate_inner(
        &self,
        state: &PhaseSpaceState,
        t0: f64,
        t1: f64,
        trace: &mut Option<&mut Vec<TraceRow>>,
    ) -> Result<PhaseSpaceState> {
        let steps = self.step_count(t0, t1)?;
        let mut current = state.clone();
        if steps == 0 {
            return Ok(current);
        }
        let q_total = crate::state::total_charge(state, state.q_over_m * M_E);
        let mut solve = self.solve(&current)?;
        if let Some(sink) = trace.as_deref_mut() {
            sink.push(TraceRow {
                t: t0,
                quantities: conserved_quantities(&current, &solve, q_total),
            });
        }
        for step in 0..steps {
            solve = step_kdk_cached(
                &mut current,
                &self.domain,
                &solve.e,
                &self.cfg.external,
                self.cfg.dt,
                |s| self.solve(s),
            )?;
            if let Some(sink) = trace.as_deref_mut() {
                sink.push(TraceRow {
                    t: t0 + (step + 1) as f64 * self.cfg.dt,
                    quantities: conserved_quantities(&current, &solve, q_total),
                });
            }
        }
        Ok(current)
    }
}
