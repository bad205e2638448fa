//! Conserved-quantity measurement, inter-run error norms, power-law slope
//! fits and damping/growth-rate extraction from field-energy traces.

use crate::error::{Error, Result};
use crate::pif::FieldSolve;
use crate::state::{Domain, PhaseSpaceState, M_E};

/// Snapshot of the conserved quantities of one field solve.
///
/// `field_energy` is the Parseval sum `(L^3 / 2) sum_k |E_k|^2` over the
/// solve's field spectrum (one shape factor included, matching the
/// discrete Hamiltonian); for the PIC path the same formula equals the grid
/// quadrature of `|E|^2 h^3 / 2`. `charge_k0_error` compares the scattered
/// `k = 0` density against the exact total charge, measured before
/// background subtraction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConservedQuantities {
    pub kinetic: f64,
    pub field_energy: f64,
    pub field_energy_z: f64,
    pub total_energy: f64,
    pub momentum: [f64; 3],
    pub charge_k0_error: f64,
}

pub fn conserved_quantities(
    state: &PhaseSpaceState,
    solve: &FieldSolve,
    q_total: f64,
) -> ConservedQuantities {
    let mut kinetic = 0.0;
    let mut momentum = [0.0f64; 3];
    for (v, w) in state.v.iter().zip(&state.w) {
        let mw = M_E * w;
        kinetic += 0.5 * mw * (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]);
        momentum[0] += mw * v[0];
        momentum[1] += mw * v[1];
        momentum[2] += mw * v[2];
    }

    let vol = solve.modes.length.powi(3);
    let mut field_energy = 0.0;
    let mut field_energy_z = 0.0;
    for a in 0..3 {
        let sum: f64 = solve.field[a].iter().map(|c| c.norm_sqr()).sum();
        field_energy += 0.5 * vol * sum;
        if a == 2 {
            field_energy_z = 0.5 * vol * sum;
        }
    }

    ConservedQuantities {
        kinetic,
        field_energy,
        field_energy_z,
        total_energy: kinetic + field_energy,
        momentum,
        charge_k0_error: solve.charge_k0_error(q_total),
    }
}

/// Relative L2 phase-space distances between two states over all particle
/// components. Position differences use the minimum image; the denominators
/// are the norms of `b`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorNorms {
    pub err_x: f64,
    pub err_v: f64,
}

pub fn relative_error(
    a: &PhaseSpaceState,
    b: &PhaseSpaceState,
    domain: &Domain,
) -> Result<ErrorNorms> {
    if a.n_particles() != b.n_particles() {
        return Err(Error::Argument(format!(
            "state size mismatch: {} vs {}",
            a.n_particles(),
            b.n_particles()
        )));
    }
    let mut num_x = 0.0;
    let mut den_x = 0.0;
    let mut num_v = 0.0;
    let mut den_v = 0.0;
    for j in 0..a.n_particles() {
        let dx = domain.min_image(a.x[j], b.x[j]);
        for c in 0..3 {
            num_x += dx[c] * dx[c];
            den_x += b.x[j][c] * b.x[j][c];
            let dv = a.v[j][c] - b.v[j][c];
            num_v += dv * dv;
            den_v += b.v[j][c] * b.v[j][c];
        }
    }
    let ratio = |num: f64, den: f64| {
        if den > 0.0 {
            (num / den).sqrt()
        } else {
            num.sqrt()
        }
    };
    Ok(ErrorNorms {
        err_x: ratio(num_x, den_x),
        err_v: ratio(num_v, den_v),
    })
}

/// Least-squares slope of `log y` against `log x`.
pub fn fit_power_law(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() || xs.len() < 3 {
        return Err(Error::Argument(format!(
            "power-law fit needs >= 3 paired points, got {} and {}",
            xs.len(),
            ys.len()
        )));
    }
    if xs.iter().chain(ys).any(|&v| v <= 0.0 || !v.is_finite()) {
        return Err(Error::Argument(
            "power-law fit requires positive finite values".into(),
        ));
    }
    let lx: Vec<f64> = xs.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let mut cov = 0.0;
    let mut var = 0.0;
    for (a, b) in lx.iter().zip(&ly) {
        cov += (a - mx) * (b - my);
        var += (a - mx) * (a - mx);
    }
    Ok(cov / var)
}

fn linear_slope(ts: &[f64], ys: &[f64]) -> f64 {
    let n = ts.len() as f64;
    let mt = ts.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut cov = 0.0;
    let mut var = 0.0;
    for (a, b) in ts.iter().zip(ys) {
        cov += (a - mt) * (b - my);
        var += (a - mt) * (a - mt);
    }
    cov / var
}

/// Exponential rate of the envelope of an oscillatory energy trace: find
/// the local maxima inside the window and fit `log(peak)` linearly against
/// time. For a field-energy trace this returns twice the field amplitude
/// rate (negative for damping, positive for growth).
pub fn damping_rate(ts: &[f64], es: &[f64], window: (f64, f64)) -> Result<f64> {
    if ts.len() != es.len() || ts.len() < 3 {
        return Err(Error::Argument("trace arrays too short or mismatched".into()));
    }
    let mut peaks_t = Vec::new();
    let mut peaks_e = Vec::new();
    for i in 1..ts.len() - 1 {
        if ts[i] < window.0 || ts[i] > window.1 {
            continue;
        }
        if es[i] > es[i - 1] && es[i] >= es[i + 1] && es[i] > 0.0 {
            peaks_t.push(ts[i]);
            peaks_e.push(es[i].ln());
        }
    }
    if peaks_t.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "found {} envelope peaks in window {:?}, need at least 2",
            peaks_t.len(),
            window
        )));
    }
    Ok(linear_slope(&peaks_t, &peaks_e))
}

/// Exponential rate of a monotone trace segment: least-squares slope of
/// `log(energy)` over every positive sample in the window. The counterpart
/// of [`damping_rate`] for traces without envelope oscillation, such as an
/// instability in its linear growth phase.
pub fn log_slope(ts: &[f64], es: &[f64], window: (f64, f64)) -> Result<f64> {
    if ts.len() != es.len() {
        return Err(Error::Argument("trace arrays mismatched".into()));
    }
    let mut sel_t = Vec::new();
    let mut sel_e = Vec::new();
    for (t, e) in ts.iter().zip(es) {
        if *t >= window.0 && *t <= window.1 && *e > 0.0 {
            sel_t.push(*t);
            sel_e.push(e.ln());
        }
    }
    if sel_t.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "only {} positive samples in window {:?}",
            sel_t.len(),
            window
        )));
    }
    Ok(linear_slope(&sel_t, &sel_e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::state::{PhaseSpaceState, Q_E};
    use rand_pcg::rand_core::Rng;

    fn uniform(rng: &mut rand_pcg::Pcg64) -> f64 {
        (rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64
    }

    #[test]
    fn zero_velocities_zero_kinetic() {
        let state = PhaseSpaceState::new(
            vec![[0.1; 3]; 5],
            vec![[0.0; 3]; 5],
            vec![1.0; 5],
            Q_E,
        )
        .unwrap();
        let solve = crate::pusher::zero_field_solve(5, 4, 2.0);
        let q = conserved_quantities(&state, &solve, -5.0);
        assert_eq!(q.kinetic, 0.0);
        assert_eq!(q.momentum, [0.0; 3]);
    }

    #[test]
    fn relative_error_basics() {
        let domain = Domain::new(4.0).unwrap();
        let a = PhaseSpaceState::new(
            vec![[1.0, 2.0, 3.0], [0.5, 0.5, 0.5]],
            vec![[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]],
            vec![1.0; 2],
            Q_E,
        )
        .unwrap();
        let e = relative_error(&a, &a, &domain).unwrap();
        assert_eq!((e.err_x, e.err_v), (0.0, 0.0));

        // Positions shifted by a full period: err_x stays zero.
        let mut b = a.clone();
        for x in &mut b.x {
            for c in x.iter_mut() {
                *c += 4.0;
            }
        }
        for v in &mut b.v {
            v[0] += 0.1;
        }
        let e = relative_error(&b, &a, &domain).unwrap();
        assert!(e.err_x < 1e-15);
        assert!(e.err_v > 0.0);
    }

    #[test]
    fn relative_error_matches_direct_formula() {
        let domain = Domain::new(7.0).unwrap();
        let mut rng = rand_pcg::Pcg64::new(2, 2);
        let n = 30;
        let mk = |rng: &mut rand_pcg::Pcg64| {
            PhaseSpaceState::new(
                (0..n).map(|_| [uniform(rng) * 7.0; 3]).collect(),
                (0..n).map(|_| [uniform(rng) - 0.5; 3]).collect(),
                vec![1.0; n],
                Q_E,
            )
            .unwrap()
        };
        let a = mk(&mut rng);
        let b = mk(&mut rng);
        let e = relative_error(&a, &b, &domain).unwrap();

        let mut nx = 0.0;
        let mut dx = 0.0;
        for j in 0..n {
            for c in 0..3 {
                let mut d = a.x[j][c] - b.x[j][c];
                d -= 7.0 * (d / 7.0).round();
                nx += d * d;
                dx += b.x[j][c] * b.x[j][c];
            }
        }
        assert!((e.err_x - (nx / dx).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn power_law_fit_examples() {
        let xs = [1.0, 2.0, 4.0, 8.0];
        let ys: Vec<f64> = xs.iter().map(|x| x * x).collect();
        assert!((fit_power_law(&xs, &ys).unwrap() - 2.0).abs() < 1e-12);

        let flat = [3.0, 3.0, 3.0, 3.0];
        assert!(fit_power_law(&xs, &flat).unwrap().abs() < 1e-12);

        // Noisy -1/2 slope.
        let mut rng = rand_pcg::Pcg64::new(4, 4);
        let xs: Vec<f64> = (0..12).map(|i| 2.0f64.powi(i)).collect();
        let ys: Vec<f64> = xs
            .iter()
            .map(|x| x.powf(-0.5) * (1.0 + 0.01 * (uniform(&mut rng) - 0.5)))
            .collect();
        let slope = fit_power_law(&xs, &ys).unwrap();
        assert!((slope + 0.5).abs() < 0.05);

        assert!(fit_power_law(&[1.0, 2.0], &[1.0, 2.0]).is_err());
        assert!(fit_power_law(&[1.0, -2.0, 3.0], &[1.0, 2.0, 3.0]).is_err());
    }

    #[test]
    fn damping_rate_on_synthetic_traces() {
        let dt = 0.01;
        let omega = 3.0;
        let mk = |rate: f64| -> (Vec<f64>, Vec<f64>) {
            let ts: Vec<f64> = (0..4000).map(|i| i as f64 * dt).collect();
            let es: Vec<f64> = ts
                .iter()
                .map(|t| (rate * t).exp() * (omega * t).sin().powi(2))
                .collect();
            (ts, es)
        };
        let (ts, es) = mk(-0.6);
        let r = damping_rate(&ts, &es, (0.0, 40.0)).unwrap();
        assert!((r + 0.6).abs() <= 0.012, "decay rate {r}");

        let (ts, es) = mk(0.4);
        let r = damping_rate(&ts, &es, (0.0, 40.0)).unwrap();
        assert!((r - 0.4).abs() <= 0.008, "growth rate {r}");

        // Monotone trace: no envelope peaks.
        let ts: Vec<f64> = (0..100).map(|i| i as f64).collect();
        let es: Vec<f64> = ts.iter().map(|t| (0.1 * t).exp()).collect();
        assert!(damping_rate(&ts, &es, (0.0, 100.0)).is_err());
    }
}
