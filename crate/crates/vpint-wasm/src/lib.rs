//! Browser bindings for the demo page: a steppable serial simulation with
//! live field-energy and phase-space output, and an interactive parareal
//! run that exposes the per-subdomain error after each iteration.

use wasm_bindgen::prelude::*;

use vpint::diagnostics::{conserved_quantities, damping_rate, log_slope};
use vpint::init::{sample, Scenario};
use vpint::parareal::{parareal_iteration, PararealIterate, TimePartition};
use vpint::propagate::Propagator;
use vpint::state::{total_charge, PhaseSpaceState, PropagatorConfig, Scheme, M_E};

fn scenario_by_name(name: &str, seed: u64) -> Result<Scenario, JsValue> {
    match name {
        "landau" => Ok(Scenario::landau_damping(seed)),
        "two_stream" => Ok(Scenario::two_stream(seed)),
        "penning" => Ok(Scenario::penning_trap(seed)),
        other => Err(JsValue::from_str(&format!("unknown scenario {other:?}"))),
    }
}

fn err_js(e: vpint::Error) -> JsValue {
    JsValue::from_str(&e.to_string())
}

/// A steppable serial run of one benchmark scenario.
#[wasm_bindgen]
pub struct SimulationDemo {
    propagator: Propagator,
    state: PhaseSpaceState,
    q_total: f64,
    t: f64,
    dt: f64,
    times: Vec<f64>,
    energy_z: Vec<f64>,
    total_energy: Vec<f64>,
}

#[wasm_bindgen]
impl SimulationDemo {
    #[wasm_bindgen(constructor)]
    pub fn new(
        scenario: &str,
        modes: usize,
        particles: usize,
        dt: f64,
        seed: u32,
    ) -> Result<SimulationDemo, JsValue> {
        let scenario = scenario_by_name(scenario, seed as u64)?;
        let state = sample(&scenario, particles).map_err(err_js)?;
        let cfg = PropagatorConfig {
            scheme: Scheme::PifNudft,
            n: modes,
            spline_order: 1,
            dt,
            external: scenario.external_fields(),
        };
        let propagator = Propagator::new(cfg, scenario.domain()).map_err(err_js)?;
        let q_total = total_charge(&state, state.q_over_m * M_E);
        let mut demo = SimulationDemo {
            propagator,
            state,
            q_total,
            t: 0.0,
            dt,
            times: Vec::new(),
            energy_z: Vec::new(),
            total_energy: Vec::new(),
        };
        demo.record().map_err(err_js)?;
        Ok(demo)
    }

    fn record(&mut self) -> vpint::Result<()> {
        let solve = self.propagator.solve(&self.state)?;
        let q = conserved_quantities(&self.state, &solve, self.q_total);
        self.times.push(self.t);
        self.energy_z.push(q.field_energy_z);
        self.total_energy.push(q.total_energy);
        Ok(())
    }

    /// Advance by `steps` KDK steps, recording the diagnostics after each.
    pub fn advance(&mut self, steps: usize) -> Result<(), JsValue> {
        for _ in 0..steps {
            let t1 = self.t + self.dt;
            self.state = self
                .propagator
                .propagate(&self.state, self.t, t1)
                .map_err(err_js)?;
            self.t = t1;
            self.record().map_err(err_js)?;
        }
        Ok(())
    }

    pub fn time(&self) -> f64 {
        self.t
    }

    pub fn domain_length(&self) -> f64 {
        self.propagator.domain.length
    }

    pub fn times(&self) -> Vec<f64> {
        self.times.clone()
    }

    pub fn energy_z(&self) -> Vec<f64> {
        self.energy_z.clone()
    }

    pub fn total_energy(&self) -> Vec<f64> {
        self.total_energy.clone()
    }

    /// Interleaved (z, v_z) pairs of up to `max_points` particles, for the
    /// phase-space scatter view.
    pub fn phase_space_z(&self, max_points: usize) -> Vec<f64> {
        let n = self.state.n_particles();
        let stride = (n / max_points.max(1)).max(1);
        let mut out = Vec::with_capacity(2 * (n / stride + 1));
        for j in (0..n).step_by(stride) {
            out.push(self.state.x[j][2]);
            out.push(self.state.v[j][2]);
        }
        out
    }

    /// Fitted exponential rate of the z-field energy over `[t0, t1]`:
    /// envelope-peak fit where the trace oscillates, log fit otherwise.
    /// NaN when the window holds too little data.
    pub fn energy_rate(&self, t0: f64, t1: f64) -> f64 {
        damping_rate(&self.times, &self.energy_z, (t0, t1))
            .or_else(|_| log_slope(&self.times, &self.energy_z, (t0, t1)))
            .unwrap_or(f64::NAN)
    }
}

/// Interactive parareal run: the coarse seed happens at construction, each
/// call to `iterate` performs one correction sweep and reports the
/// stopping-criterion error per subdomain.
#[wasm_bindgen]
pub struct PararealDemo {
    fine: Propagator,
    coarse: Propagator,
    iterate: PararealIterate,
    fine_solves: usize,
}

#[wasm_bindgen]
impl PararealDemo {
    #[wasm_bindgen(constructor)]
    pub fn new(
        scenario: &str,
        modes: usize,
        particles: usize,
        subdomains: usize,
        t_end: f64,
        dt_fine: f64,
        coarse_ratio: usize,
        seed: u32,
    ) -> Result<PararealDemo, JsValue> {
        let scenario = scenario_by_name(scenario, seed as u64)?;
        let state = sample(&scenario, particles).map_err(err_js)?;
        let domain = scenario.domain();
        let ext = scenario.external_fields();
        let fine = Propagator::new(
            PropagatorConfig {
                scheme: Scheme::PifNudft,
                n: modes,
                spline_order: 1,
                dt: dt_fine,
                external: ext,
            },
            domain,
        )
        .map_err(err_js)?;
        let coarse = Propagator::new(
            PropagatorConfig {
                scheme: Scheme::Pic,
                n: modes,
                spline_order: 1,
                dt: dt_fine * coarse_ratio.max(1) as f64,
                external: ext,
            },
            domain,
        )
        .map_err(err_js)?;
        let partition = TimePartition::new(0.0, t_end, subdomains).map_err(err_js)?;
        let iterate = PararealIterate::seed(&state, &coarse, &partition).map_err(err_js)?;
        Ok(PararealDemo {
            fine,
            coarse,
            iterate,
            fine_solves: 0,
        })
    }

    /// One parareal iteration; returns the per-subdomain relative position
    /// errors of the stopping criterion.
    pub fn iterate(&mut self) -> Result<Vec<f64>, JsValue> {
        let errors = parareal_iteration(
            &mut self.iterate,
            &self.fine,
            &self.coarse,
            &mut self.fine_solves,
            None,
        )
        .map_err(err_js)?;
        Ok(errors.iter().map(|e| e.err_x.max(1e-18)).collect())
    }

    pub fn iteration(&self) -> usize {
        self.iterate.iteration
    }

    pub fn fine_solves(&self) -> usize {
        self.fine_solves
    }

    pub fn subdomains(&self) -> usize {
        self.iterate.g_result.len()
    }
}
