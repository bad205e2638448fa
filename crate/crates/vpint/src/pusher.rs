//! Kick-drift-kick Boris / velocity-Verlet step.
//!
//! One step: half electric kick, half magnetic rotation, drift with periodic
//! wrap, field re-evaluation at the new positions, half rotation, half kick.
//! The ordering is symmetric, so the step is second order and reduces to
//! plain velocity Verlet when `B = 0`. The Boris rotation preserves `|v|`
//! exactly under a pure magnetic field.

use crate::error::Result;
use crate::exec;
use crate::pif::FieldSolve;
use crate::state::{cross, Domain, ExternalFields, PhaseSpaceState, Vec3};

/// Boris rotation of `v` around `b` over an interval `tau`:
/// `t = (q/m) (tau/2) b`, `s = 2 t / (1 + |t|^2)`. Exactly norm-preserving,
/// phase error `O(tau^3)` per application.
#[inline]
pub fn boris_rotate(v: Vec3, b: Vec3, q_over_m: f64, tau: f64) -> Vec3 {
    if b == [0.0; 3] {
        return v;
    }
    let half = 0.5 * q_over_m * tau;
    let t = [half * b[0], half * b[1], half * b[2]];
    let t2 = t[0] * t[0] + t[1] * t[1] + t[2] * t[2];
    let sf = 2.0 / (1.0 + t2);
    let s = [sf * t[0], sf * t[1], sf * t[2]];
    let vp = {
        let c = cross(v, t);
        [v[0] + c[0], v[1] + c[1], v[2] + c[2]]
    };
    let c = cross(vp, s);
    [v[0] + c[0], v[1] + c[1], v[2] + c[2]]
}

/// Per-particle first half of the step: half electric kick, half rotation,
/// drift with wrap. Runs over aligned chunks of x/v/e.
fn half_kick_drift(
    xs: &mut [Vec3],
    vs: &mut [Vec3],
    es: &[Vec3],
    domain: &Domain,
    ext: &ExternalFields,
    qm: f64,
    dt: f64,
) {
    let half_dt = 0.5 * dt;
    let no_ext = ext.is_zero();
    for ((x, v), e_sc) in xs.iter_mut().zip(vs.iter_mut()).zip(es) {
        let mut e = *e_sc;
        if !no_ext {
            let e_ext = ext.eval_e(*x);
            e = [e[0] + e_ext[0], e[1] + e_ext[1], e[2] + e_ext[2]];
        }
        let mut vn = [
            v[0] + qm * half_dt * e[0],
            v[1] + qm * half_dt * e[1],
            v[2] + qm * half_dt * e[2],
        ];
        vn = boris_rotate(vn, ext.b, qm, half_dt);
        *v = vn;
        *x = domain.wrap([x[0] + dt * vn[0], x[1] + dt * vn[1], x[2] + dt * vn[2]]);
    }
}

/// Second half: half rotation, half electric kick at the new positions.
fn half_rotate_kick(
    xs: &[Vec3],
    vs: &mut [Vec3],
    es: &[Vec3],
    ext: &ExternalFields,
    qm: f64,
    dt: f64,
) {
    let half_dt = 0.5 * dt;
    let no_ext = ext.is_zero();
    for ((x, v), e_sc) in xs.iter().zip(vs.iter_mut()).zip(es) {
        let mut vn = boris_rotate(*v, ext.b, qm, half_dt);
        let mut e = *e_sc;
        if !no_ext {
            let e_ext = ext.eval_e(*x);
            e = [e[0] + e_ext[0], e[1] + e_ext[1], e[2] + e_ext[2]];
        }
        vn = [
            vn[0] + qm * half_dt * e[0],
            vn[1] + qm * half_dt * e[1],
            vn[2] + qm * half_dt * e[2],
        ];
        *v = vn;
    }
}

/// In-place step with a caller-provided field at the current positions; the
/// closure supplies the field solve at the post-drift positions, which the
/// caller can reuse for the next step. Returns that solve.
pub(crate) fn step_kdk_cached<F>(
    state: &mut PhaseSpaceState,
    domain: &Domain,
    e_current: &[Vec3],
    ext: &ExternalFields,
    dt: f64,
    solve_next: F,
) -> Result<FieldSolve>
where
    F: FnOnce(&PhaseSpaceState) -> Result<FieldSolve>,
{
    let qm = state.q_over_m;
    let size = exec::chunk_size(state.n_particles());

    let drift = |((xs, vs), es): ((&mut [Vec3], &mut [Vec3]), &[Vec3])| {
        half_kick_drift(xs, vs, es, domain, ext, qm, dt);
    };
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        state
            .x
            .par_chunks_mut(size)
            .zip(state.v.par_chunks_mut(size))
            .zip(e_current.par_chunks(size))
            .for_each(drift);
    }
    #[cfg(not(feature = "parallel"))]
    state
        .x
        .chunks_mut(size)
        .zip(state.v.chunks_mut(size))
        .zip(e_current.chunks(size))
        .for_each(drift);

    let solve = solve_next(state)?;

    let kick = |((xs, vs), es): ((&[Vec3], &mut [Vec3]), &[Vec3])| {
        half_rotate_kick(xs, vs, es, ext, qm, dt);
    };
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        state
            .x
            .par_chunks(size)
            .zip(state.v.par_chunks_mut(size))
            .zip(solve.e.par_chunks(size))
            .for_each(kick);
    }
    #[cfg(not(feature = "parallel"))]
    state
        .x
        .chunks(size)
        .zip(state.v.chunks_mut(size))
        .zip(solve.e.chunks(size))
        .for_each(kick);

    Ok(solve)
}

/// One kick-drift-kick step. `field_eval` is called at the current positions
/// for the first half kick and at the post-drift positions for the second.
pub fn step_kdk<F>(
    state: &PhaseSpaceState,
    domain: &Domain,
    mut field_eval: F,
    ext: &ExternalFields,
    dt: f64,
) -> Result<PhaseSpaceState>
where
    F: FnMut(&PhaseSpaceState) -> Result<FieldSolve>,
{
    let mut next = state.clone();
    let first = field_eval(state)?;
    step_kdk_cached(&mut next, domain, &first.e, ext, dt, |s| field_eval(s))?;
    Ok(next)
}

/// A zero-field solve for pusher-only runs (external fields or free
/// streaming).
pub fn zero_field_solve(n_particles: usize, n: usize, length: f64) -> FieldSolve {
    FieldSolve {
        e: vec![[0.0; 3]; n_particles],
        field: [Vec::new(), Vec::new(), Vec::new()],
        rho0: num_complex::Complex64::default(),
        modes: crate::transforms::ModeSet { n, length },
    }
}
