//! The parareal engine: serial coarse sweep, fine solves over time
//! subdomains, the phase-space correction update, per-subdomain stopping
//! and multi-block windowing.
//!
//! The correction acts component-wise on positions and velocities. Position
//! corrections use the minimum-image form of `G(U^{k+1}) - G(U^k)` before
//! the result is wrapped back into the box, so a coarse update never drags
//! a particle the long way around the period.
//!
//! Convergence of subdomain `n` requires the relative L2 change of its
//! coarse propagation between successive iterates to drop below the
//! stopping tolerance on both positions and velocities, and subdomain
//! `n - 1` to have converged already. Converged subdomains freeze; the
//! exactness property (subdomain `n` is bitwise the serial fine solution
//! after `n` iterations) bounds the iteration count by the subdomain count.
//!
//! Two executors produce bitwise-identical results: a plain sequential loop
//! and a pipeline with one worker thread per subdomain exchanging boundary
//! states over channels ordered by subdomain index. A worker exits as soon
//! as both its own and its predecessor's convergence flags are set.

use crate::diagnostics::{relative_error, ErrorNorms};
use crate::error::{Error, Result};
use crate::exec;
use crate::propagate::{Propagator, TraceRow};
use crate::state::{PhaseSpaceState, Scheme};

/// Uniform partition of `[t_start, t_end]` into `n_sub` subdomains.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimePartition {
    pub t_start: f64,
    pub t_end: f64,
    pub n_sub: usize,
}

impl TimePartition {
    pub fn new(t_start: f64, t_end: f64, n_sub: usize) -> Result<Self> {
        if !(t_end > t_start) || n_sub == 0 {
            return Err(Error::Config(format!(
                "bad time partition: [{t_start}, {t_end}] with {n_sub} subdomains"
            )));
        }
        Ok(TimePartition {
            t_start,
            t_end,
            n_sub,
        })
    }

    pub fn dt_sub(&self) -> f64 {
        (self.t_end - self.t_start) / self.n_sub as f64
    }

    /// Subdomain boundaries `T_0 .. T_{n_sub}`.
    pub fn boundaries(&self) -> Vec<f64> {
        (0..=self.n_sub)
            .map(|n| self.t_start + n as f64 * self.dt_sub())
            .collect()
    }
}

/// State of the parareal recursion at one iteration: boundary values `U_n`,
/// the coarse propagation of each subdomain from its boundary value, a
/// cache of fine propagations, the iteration counter and the (prefix)
/// convergence flags.
#[derive(Debug, Clone)]
pub struct PararealIterate {
    pub boundary: Vec<PhaseSpaceState>,
    pub g_result: Vec<PhaseSpaceState>,
    f_result: Vec<Option<PhaseSpaceState>>,
    pub iteration: usize,
    pub converged: Vec<bool>,
    boundaries_t: Vec<f64>,
}

impl PararealIterate {
    /// Iteration 0: the serial coarse sweep.
    pub fn seed(
        initial: &PhaseSpaceState,
        coarse: &Propagator,
        partition: &TimePartition,
    ) -> Result<Self> {
        let ts = partition.boundaries();
        let s = partition.n_sub;
        let mut boundary = Vec::with_capacity(s + 1);
        let mut g_result = Vec::with_capacity(s);
        boundary.push(initial.clone());
        for n in 0..s {
            let g = coarse.propagate(&boundary[n], ts[n], ts[n + 1])?;
            g_result.push(g.clone());
            boundary.push(g);
        }
        Ok(PararealIterate {
            boundary,
            g_result,
            f_result: vec![None; s],
            iteration: 0,
            converged: vec![false; s],
            boundaries_t: ts,
        })
    }

    fn n_sub(&self) -> usize {
        self.g_result.len()
    }

    fn first_unconverged(&self) -> usize {
        self.converged.iter().take_while(|&&c| c).count()
    }
}

/// The three-term correction on one subdomain boundary. Positions combine
/// through minimum-image coarse differences and re-wrap; velocities are
/// plain arithmetic; weights pass through from the fine solution unchanged.
pub fn correct(
    fine: &PhaseSpaceState,
    g_new: &PhaseSpaceState,
    g_old: &PhaseSpaceState,
    domain: &crate::state::Domain,
) -> PhaseSpaceState {
    let mut out = fine.clone();
    let indices: Vec<usize> = (0..out.n_particles()).collect();
    struct Upd {
        x: [f64; 3],
        v: [f64; 3],
    }
    let mut upds: Vec<Upd> = (0..out.n_particles())
        .map(|_| Upd {
            x: [0.0; 3],
            v: [0.0; 3],
        })
        .collect();
    exec::chunked_zip_mut(&indices, &mut upds, |_, js, slots| {
        for (&j, slot) in js.iter().zip(slots.iter_mut()) {
            let dx = domain.min_image(g_new.x[j], g_old.x[j]);
            slot.x = domain.wrap([
                fine.x[j][0] + dx[0],
                fine.x[j][1] + dx[1],
                fine.x[j][2] + dx[2],
            ]);
            slot.v = [
                fine.v[j][0] + g_new.v[j][0] - g_old.v[j][0],
                fine.v[j][1] + g_new.v[j][1] - g_old.v[j][1],
                fine.v[j][2] + g_new.v[j][2] - g_old.v[j][2],
            ];
        }
    });
    for (j, u) in upds.into_iter().enumerate() {
        out.x[j] = u.x;
        out.v[j] = u.v;
    }
    out
}

/// Advance the iterate by one parareal iteration: fine solves from the
/// current boundary values on every unconverged subdomain, then the serial
/// correction sweep. Returns the per-subdomain stopping-criterion norms
/// (the relative change of the coarse propagations between iterations;
/// zero for already-converged subdomains).
pub fn parareal_iteration(
    iter: &mut PararealIterate,
    fine: &Propagator,
    coarse: &Propagator,
    fine_solve_count: &mut usize,
    mut trace: Option<&mut Vec<(usize, TraceRow)>>,
) -> Result<Vec<ErrorNorms>> {
    let s = iter.n_sub();
    let ts = iter.boundaries_t.clone();
    let start = iter.first_unconverged();
    let domain = &fine.domain;

    // Fine phase: F(U^k_n) wherever the boundary value changed since the
    // cached propagation.
    for n in start..s {
        if iter.f_result[n].is_none() {
            let result = if let Some(sink) = trace.as_deref_mut() {
                let mut rows = Vec::new();
                let out = fine
                    .propagate_traced(&iter.boundary[n], ts[n], ts[n + 1], &mut rows)
                    .map_err(|e| subdomain_err(e, n))?;
                // Interior boundary rows belong to the upstream subdomain;
                // keeping both copies would fold a sawtooth into the trace.
                let skip = usize::from(n > 0);
                sink.extend(rows.into_iter().skip(skip).map(|r| (iter.iteration + 1, r)));
                out
            } else {
                fine.propagate(&iter.boundary[n], ts[n], ts[n + 1])
                    .map_err(|e| subdomain_err(e, n))?
            };
            *fine_solve_count += 1;
            iter.f_result[n] = Some(result);
        }
    }

    // Serial correction sweep.
    let mut errors = vec![
        ErrorNorms {
            err_x: 0.0,
            err_v: 0.0
        };
        s
    ];
    let mut stale = vec![false; s];
    for n in start..s {
        let g_new = coarse
            .propagate(&iter.boundary[n], ts[n], ts[n + 1])
            .map_err(|e| subdomain_err(e, n))?;
        errors[n] = relative_error(&g_new, &iter.g_result[n], domain)?;
        let fine_state = iter.f_result[n].as_ref().expect("fine phase filled it");
        let corrected = correct(fine_state, &g_new, &iter.g_result[n], domain);
        iter.g_result[n] = g_new;
        if n + 1 < s && corrected != iter.boundary[n + 1] {
            // The fine cache downstream goes stale for the next iteration;
            // this sweep still consumes the propagation of the old value.
            stale[n + 1] = true;
        }
        iter.boundary[n + 1] = corrected;
    }
    for (n, &is_stale) in stale.iter().enumerate() {
        if is_stale {
            iter.f_result[n] = None;
        }
    }
    iter.iteration += 1;
    Ok(errors)
}

/// Chained convergence check: subdomain `n` is converged when both relative
/// norms are at or below the tolerance and subdomain `n - 1` is converged.
pub fn check_convergence(
    errors: &[ErrorNorms],
    previous: &[bool],
    eps_stop: f64,
) -> Vec<bool> {
    let mut out = vec![false; errors.len()];
    let mut chain = true;
    for (n, e) in errors.iter().enumerate() {
        let local = previous.get(n).copied().unwrap_or(false)
            || (e.err_x <= eps_stop && e.err_v <= eps_stop);
        chain = chain && local;
        out[n] = chain;
    }
    out
}

fn subdomain_err(e: Error, n: usize) -> Error {
    match e {
        Error::Numeric { context, message } => Error::Numeric {
            context: format!("{context} (subdomain {n})"),
            message,
        },
        Error::Config(m) => Error::Config(format!("{m} (subdomain {n})")),
        other => other,
    }
}

/// Per-subdomain stopping-criterion record.
#[derive(Debug, Clone, Copy)]
pub struct ErrorRecord {
    pub block: usize,
    pub subdomain: usize,
    pub iteration: usize,
    pub err_x: f64,
    pub err_v: f64,
}

/// Conserved-quantity row recorded during a fine solve of some iteration.
#[derive(Debug, Clone, Copy)]
pub struct ConservationRecord {
    pub block: usize,
    pub iteration: usize,
    pub row: TraceRow,
}

#[derive(Debug, Clone)]
pub struct PararealRunReport {
    pub errors: Vec<ErrorRecord>,
    pub conservation: Vec<ConservationRecord>,
    pub timings: Vec<(String, f64)>,
    /// Iterations used per block (excluding the coarse seed).
    pub iterations: Vec<usize>,
    /// Total number of fine subdomain propagations performed.
    pub fine_solves: usize,
    /// Whether every subdomain of every block met the stopping tolerance.
    pub converged: bool,
    pub final_state: PhaseSpaceState,
}

impl PararealRunReport {
    /// L-infinity over subdomains of the stopping-criterion error at one
    /// iteration, across all blocks.
    pub fn max_error_at_iteration(&self, iteration: usize) -> Option<ErrorNorms> {
        let mut best: Option<ErrorNorms> = None;
        for r in self.errors.iter().filter(|r| r.iteration == iteration) {
            let cur = best.get_or_insert(ErrorNorms {
                err_x: 0.0,
                err_v: 0.0,
            });
            cur.err_x = cur.err_x.max(r.err_x);
            cur.err_v = cur.err_v.max(r.err_v);
        }
        best
    }
}

#[derive(Debug, Clone)]
pub struct PararealOptions {
    pub eps_stop: f64,
    /// Number of sequential windows the time domain is split into; must
    /// divide the subdomain count. One block is plain parareal.
    pub blocks: usize,
    /// Iteration cap per window; defaults to the window's subdomain count,
    /// which exactness guarantees is enough.
    pub max_iterations: Option<usize>,
    /// Pipelined workers (one per subdomain) instead of the sequential
    /// executor. Results are bitwise identical.
    pub concurrent: bool,
    /// Record conserved-quantity traces during fine solves.
    pub record_traces: bool,
}

impl Default for PararealOptions {
    fn default() -> Self {
        PararealOptions {
            eps_stop: 1e-11,
            blocks: 1,
            max_iterations: None,
            concurrent: false,
            record_traces: false,
        }
    }
}

fn validate(
    fine: &Propagator,
    coarse: &Propagator,
    partition: &TimePartition,
    opts: &PararealOptions,
) -> Result<()> {
    if opts.blocks == 0 || partition.n_sub % opts.blocks != 0 {
        return Err(Error::Config(format!(
            "blocks ({}) must divide the subdomain count ({})",
            opts.blocks, partition.n_sub
        )));
    }
    let dt_sub = partition.dt_sub();
    for (label, p) in [("fine", fine), ("coarse", coarse)] {
        let ratio = dt_sub / p.cfg.dt;
        if (ratio - ratio.round()).abs() > 1e-9 * ratio.abs().max(1.0) {
            return Err(Error::Config(format!(
                "{label}.dt = {} does not divide the subdomain length {dt_sub}",
                p.cfg.dt
            )));
        }
    }
    if let (Scheme::PifNufft { eps: eps_f }, Scheme::PifNufft { eps: eps_g }) =
        (fine.cfg.scheme, coarse.cfg.scheme)
    {
        if eps_g < eps_f {
            return Err(Error::Config(format!(
                "coarse nufft tolerance ({eps_g}) must be >= fine tolerance ({eps_f})"
            )));
        }
    }
    Ok(())
}

/// Run parareal over the partition, optionally in sequential windows
/// (multi-block). Each window runs to its stopping tolerance (or iteration
/// cap) and the converged final state seeds the next window.
pub fn run_parareal(
    initial: &PhaseSpaceState,
    fine: &Propagator,
    coarse: &Propagator,
    partition: &TimePartition,
    opts: &PararealOptions,
) -> Result<PararealRunReport> {
    validate(fine, coarse, partition, opts)?;
    let total_start = exec::now_secs();

    let window_subs = partition.n_sub / opts.blocks;
    let window_span = partition.dt_sub() * window_subs as f64;
    let cap = opts.max_iterations.unwrap_or(window_subs).max(1);

    let mut report = PararealRunReport {
        errors: Vec::new(),
        conservation: Vec::new(),
        timings: Vec::new(),
        iterations: Vec::new(),
        fine_solves: 0,
        converged: true,
        final_state: initial.clone(),
    };

    let mut state = initial.clone();
    for block in 0..opts.blocks {
        let t0 = partition.t_start + block as f64 * window_span;
        let window = TimePartition::new(t0, t0 + window_span, window_subs)?;
        let result = if opts.concurrent {
            run_window_threaded(&state, fine, coarse, &window, opts, cap, block)?
        } else {
            run_window_sequential(&state, fine, coarse, &window, opts, cap, block)?
        };
        state = result.final_state;
        report.errors.extend(result.errors);
        report.conservation.extend(result.conservation);
        report.iterations.push(result.iterations);
        report.fine_solves += result.fine_solves;
        report.converged &= result.converged;
    }

    report.final_state = state;
    report
        .timings
        .push(("total".into(), exec::now_secs() - total_start));
    Ok(report)
}

struct WindowResult {
    final_state: PhaseSpaceState,
    errors: Vec<ErrorRecord>,
    conservation: Vec<ConservationRecord>,
    iterations: usize,
    fine_solves: usize,
    converged: bool,
}

fn run_window_sequential(
    initial: &PhaseSpaceState,
    fine: &Propagator,
    coarse: &Propagator,
    window: &TimePartition,
    opts: &PararealOptions,
    cap: usize,
    block: usize,
) -> Result<WindowResult> {
    let s = window.n_sub;
    let mut iter = PararealIterate::seed(initial, coarse, window)?;
    let mut fine_solves = 0usize;
    let mut errors = Vec::new();
    let mut conservation = Vec::new();
    let mut iterations = 0usize;

    for _k in 1..=cap {
        let mut trace_rows = opts.record_traces.then(Vec::new);
        let errs = parareal_iteration(
            &mut iter,
            fine,
            coarse,
            &mut fine_solves,
            trace_rows.as_mut(),
        )?;
        iterations = iter.iteration;
        let start = iter.first_unconverged();
        for (n, e) in errs.iter().enumerate().skip(start) {
            errors.push(ErrorRecord {
                block,
                subdomain: block * s + n,
                iteration: iter.iteration,
                err_x: e.err_x,
                err_v: e.err_v,
            });
        }
        if let Some(rows) = trace_rows {
            conservation.extend(rows.into_iter().map(|(iteration, row)| {
                ConservationRecord {
                    block,
                    iteration,
                    row,
                }
            }));
        }
        iter.converged = check_convergence(&errs, &iter.converged, opts.eps_stop);
        if iter.converged.iter().all(|&c| c) {
            break;
        }
    }

    let converged = iter.converged.iter().all(|&c| c);
    Ok(WindowResult {
        final_state: iter.boundary[s].clone(),
        errors,
        conservation,
        iterations,
        fine_solves,
        converged,
    })
}

#[cfg(feature = "parallel")]
fn run_window_threaded(
    initial: &PhaseSpaceState,
    fine: &Propagator,
    coarse: &Propagator,
    window: &TimePartition,
    opts: &PararealOptions,
    cap: usize,
    block: usize,
) -> Result<WindowResult> {
    use std::sync::mpsc;

    struct Msg {
        state: PhaseSpaceState,
        sender_converged: bool,
    }
    struct WorkerOut {
        subdomain: usize,
        errors: Vec<(usize, ErrorNorms)>,
        trace: Vec<(usize, TraceRow)>,
        fine_solves: usize,
        converged: bool,
        final_out: Option<PhaseSpaceState>,
        error: Option<Error>,
    }

    let s = window.n_sub;
    let ts = window.boundaries();

    // Channel n carries boundary values U_n from worker n-1 to worker n;
    // channel s collects the window's final state.
    let mut senders = Vec::with_capacity(s + 1);
    let mut receivers = Vec::with_capacity(s + 1);
    for _ in 0..=s {
        let (tx, rx) = mpsc::channel::<Msg>();
        senders.push(tx);
        receivers.push(rx);
    }
    let final_rx = receivers.pop().expect("final channel");
    receivers.remove(0); // worker 0 reads no channel
    let first_tx = senders.remove(0);
    drop(first_tx);

    let worker = |n: usize, rx: Option<mpsc::Receiver<Msg>>, tx: mpsc::Sender<Msg>| -> WorkerOut {
        let mut out = WorkerOut {
            subdomain: n,
            errors: Vec::new(),
            trace: Vec::new(),
            fine_solves: 0,
            converged: false,
            final_out: None,
            error: None,
        };
        let fail = |e: Error, out: &mut WorkerOut| {
            out.error = Some(subdomain_err(e, n));
        };

        // Iteration 0: receive the seed boundary value, coarse-propagate,
        // forward.
        let (mut u_prev, mut pred_converged) = if n == 0 {
            (initial.clone(), true)
        } else {
            match rx.as_ref().expect("inner worker has a receiver").recv() {
                Ok(m) => (m.state, m.sender_converged),
                Err(_) => {
                    fail(
                        Error::numeric("parareal pipeline", "seed channel closed"),
                        &mut out,
                    );
                    return out;
                }
            }
        };
        debug_assert!(!pred_converged || n == 0);
        let mut g_prev = match coarse.propagate(&u_prev, ts[n], ts[n + 1]) {
            Ok(g) => g,
            Err(e) => {
                fail(e, &mut out);
                return out;
            }
        };
        if tx
            .send(Msg {
                state: g_prev.clone(),
                sender_converged: false,
            })
            .is_err()
        {
            // Receiver exited on error; surface on join.
        }

        let run_fine = |u: &PhaseSpaceState,
                        iteration: usize,
                        out: &mut WorkerOut|
         -> Result<PhaseSpaceState> {
            out.fine_solves += 1;
            if opts.record_traces {
                let mut rows = Vec::new();
                let state = fine.propagate_traced(u, ts[n], ts[n + 1], &mut rows)?;
                // Drop the duplicated interior boundary row, as in the
                // sequential executor.
                let skip = usize::from(n > 0);
                out.trace
                    .extend(rows.into_iter().skip(skip).map(|r| (iteration, r)));
                Ok(state)
            } else {
                fine.propagate(u, ts[n], ts[n + 1])
            }
        };

        // Overlaps with downstream coarse work in the pipeline.
        let mut f_prev = match run_fine(&u_prev, 1, &mut out) {
            Ok(f) => f,
            Err(e) => {
                fail(e, &mut out);
                return out;
            }
        };

        let mut last_sent: Option<PhaseSpaceState> = None;
        for k in 1..=cap {
            // Boundary value U^k_n; frozen once the predecessor converged.
            let u_new = if pred_converged {
                u_prev.clone()
            } else {
                match rx.as_ref().expect("inner worker has a receiver").recv() {
                    Ok(m) => {
                        pred_converged = m.sender_converged;
                        m.state
                    }
                    Err(_) => {
                        fail(
                            Error::numeric("parareal pipeline", "boundary channel closed"),
                            &mut out,
                        );
                        return out;
                    }
                }
            };
            let input_changed = u_new != u_prev;
            let g_new = match coarse.propagate(&u_new, ts[n], ts[n + 1]) {
                Ok(g) => g,
                Err(e) => {
                    fail(e, &mut out);
                    return out;
                }
            };
            let err = match relative_error(&g_new, &g_prev, &fine.domain) {
                Ok(e) => e,
                Err(e) => {
                    fail(e, &mut out);
                    return out;
                }
            };
            out.errors.push((k, err));
            // Correction uses the fine solution of the previous iterate.
            let corrected = correct(&f_prev, &g_new, &g_prev, &fine.domain);
            let self_converged =
                pred_converged && err.err_x <= opts.eps_stop && err.err_v <= opts.eps_stop;
            let _ = tx.send(Msg {
                state: corrected.clone(),
                sender_converged: self_converged,
            });
            last_sent = Some(corrected);
            g_prev = g_new;
            if self_converged {
                out.converged = true;
                break;
            }
            // Fine solve for the next iteration, overlapping downstream
            // coarse work. Skipped when the boundary value is frozen.
            if k < cap && input_changed {
                f_prev = match run_fine(&u_new, k + 1, &mut out) {
                    Ok(f) => f,
                    Err(e) => {
                        fail(e, &mut out);
                        return out;
                    }
                };
            }
            u_prev = u_new;
        }
        out.final_out = last_sent;
        out
    };

    let mut outs: Vec<WorkerOut> = Vec::with_capacity(s);
    std::thread::scope(|scope| {
        let mut handles = Vec::with_capacity(s);
        let mut rx_iter = receivers.into_iter();
        let mut tx_iter = senders.into_iter();
        for n in 0..s {
            let rx = if n == 0 { None } else { rx_iter.next() };
            let tx = tx_iter.next().expect("sender per worker");
            let worker = &worker;
            handles.push(scope.spawn(move || worker(n, rx, tx)));
        }
        for h in handles {
            outs.push(h.join().expect("parareal worker panicked"));
        }
    });

    for out in &outs {
        if let Some(e) = &out.error {
            return Err(Error::numeric(
                format!("parareal block {block}"),
                e.to_string(),
            ));
        }
    }

    // Deterministic assembly ordered by (iteration, subdomain).
    let mut errors = Vec::new();
    let mut conservation = Vec::new();
    let mut iterations = 0;
    let mut fine_solves = 0;
    let mut converged = true;
    for out in &outs {
        iterations = iterations.max(out.errors.last().map(|(k, _)| *k).unwrap_or(0));
        fine_solves += out.fine_solves;
        converged &= out.converged;
        for &(k, e) in &out.errors {
            errors.push(ErrorRecord {
                block,
                subdomain: block * s + out.subdomain,
                iteration: k,
                err_x: e.err_x,
                err_v: e.err_v,
            });
        }
        for &(k, row) in &out.trace {
            conservation.push(ConservationRecord {
                block,
                iteration: k,
                row,
            });
        }
    }
    errors.sort_by_key(|r| (r.iteration, r.subdomain));
    conservation.sort_by(|a, b| {
        (a.iteration, a.row.t)
            .partial_cmp(&(b.iteration, b.row.t))
            .expect("finite times")
    });

    // Drain the final channel: the last message is the window result.
    let mut final_state = None;
    while let Ok(msg) = final_rx.try_recv() {
        final_state = Some(msg.state);
    }
    let final_state = final_state
        .or_else(|| outs.last().and_then(|o| o.final_out.clone()))
        .ok_or_else(|| Error::numeric("parareal", "no final state produced"))?;

    Ok(WindowResult {
        final_state,
        errors,
        conservation,
        iterations,
        fine_solves,
        converged,
    })
}

#[cfg(not(feature = "parallel"))]
fn run_window_threaded(
    initial: &PhaseSpaceState,
    fine: &Propagator,
    coarse: &Propagator,
    window: &TimePartition,
    opts: &PararealOptions,
    cap: usize,
    block: usize,
) -> Result<WindowResult> {
    // Without threads the pipelined executor degenerates to the sequential
    // one; results are identical either way.
    run_window_sequential(initial, fine, coarse, window, opts, cap, block)
}
