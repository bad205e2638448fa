//! Particle-in-cell field solve: B-spline charge deposition onto a uniform
//! mesh, FFT Poisson solve with the spectral gradient `-i k / |k|^2`,
//! inverse FFT, and gather with the same deposition weights.
//!
//! The uniform ion background is implemented by subtracting the grid mean
//! before the solve. The Poisson operator zeroes the same rows as the PIF
//! path (`k = 0` and unpaired Nyquist modes), which keeps the two solvers
//! comparable mode by mode.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::exec;
use crate::pif::{FieldSolve, PoissonOperator};
use crate::shape;
use crate::state::{Domain, PhaseSpaceState, PropagatorConfig, Scheme, Vec3, M_E};
use crate::transforms::{Fft3, ModeSet};

#[derive(Debug, Clone)]
pub struct PicSolver {
    modes: ModeSet,
    poisson: PoissonOperator,
    fft: Fft3,
    spline_order: usize,
}

impl PicSolver {
    pub fn new(cfg: &PropagatorConfig, domain: &Domain) -> Result<Self> {
        cfg.validate()?;
        if cfg.scheme != Scheme::Pic {
            return Err(Error::Config(
                "PIF configuration passed to the PIC solver".into(),
            ));
        }
        let modes = ModeSet::new(cfg.n, domain.length)?;
        Ok(PicSolver {
            modes,
            poisson: PoissonOperator::new(&modes),
            fft: Fft3::new(cfg.n)?,
            spline_order: cfg.spline_order,
        })
    }

    pub fn modes(&self) -> &ModeSet {
        &self.modes
    }

    /// Deposit the charge density `rho_e` on the mesh (units charge/volume).
    pub fn deposit(&self, state: &PhaseSpaceState) -> crate::state::GridField {
        let n = self.modes.n;
        let l = self.modes.length;
        let h = l / n as f64;
        let inv_h3 = 1.0 / (h * h * h);
        let q_e = state.q_over_m * M_E;
        let m = self.spline_order;

        struct P {
            x: Vec3,
            s: f64,
        }
        let items: Vec<P> = state
            .x
            .iter()
            .zip(&state.w)
            .map(|(&x, &w)| P {
                x,
                s: q_e * w * inv_h3,
            })
            .collect();

        let values = exec::chunked_reduce(
            &items,
            |_, chunk| {
                let mut grid = vec![0.0f64; n * n * n];
                let mut wx = vec![0.0; m + 1];
                let mut wy = vec![0.0; m + 1];
                let mut wz = vec![0.0; m + 1];
                for p in chunk {
                    let ix0 = shape::axis_weights(m, p.x[0] / h, &mut wx);
                    let iy0 = shape::axis_weights(m, p.x[1] / h, &mut wy);
                    let iz0 = shape::axis_weights(m, p.x[2] / h, &mut wz);
                    for (a, &vx) in wx.iter().enumerate() {
                        let sx = p.s * vx;
                        let ox = (ix0 + a as i64).rem_euclid(n as i64) as usize * n;
                        for (b, &vy) in wy.iter().enumerate() {
                            let sxy = sx * vy;
                            let oxy = (ox + (iy0 + b as i64).rem_euclid(n as i64) as usize) * n;
                            for (c, &vz) in wz.iter().enumerate() {
                                grid[oxy + (iz0 + c as i64).rem_euclid(n as i64) as usize] +=
                                    sxy * vz;
                            }
                        }
                    }
                }
                grid
            },
            vec![0.0f64; n * n * n],
            |mut acc, part| {
                for (x, y) in acc.iter_mut().zip(part) {
                    *x += y;
                }
                acc
            },
        );
        crate::state::GridField {
            values,
            n,
            length: l,
        }
    }

    /// Deposit, solve and gather. See [`FieldSolve`] for the output layout.
    pub fn field_at_particles(&self, state: &PhaseSpaceState) -> Result<FieldSolve> {
        let n = self.modes.n;
        let nm = self.modes.mode_count();
        let h = self.modes.length / n as f64;

        let rho = self.deposit(state);
        let mean = rho.values.iter().sum::<f64>() / nm as f64;
        // Mean charge density == k0 Fourier-series coefficient.
        let rho0 = Complex64::new(mean, 0.0);

        let mut data: Vec<Complex64> = rho
            .values
            .iter()
            .map(|&v| Complex64::new(v - mean, 0.0))
            .collect();
        self.fft.forward(&mut data);

        // Series coefficients rho_hat = raw / N^3, then the gradient.
        let inv_n3 = 1.0 / nm as f64;
        let half = n as i64 / 2;
        let wrap = |t: usize| ((t as i64 - half).rem_euclid(n as i64)) as usize;
        let mut field = [
            vec![Complex64::default(); nm],
            vec![Complex64::default(); nm],
            vec![Complex64::default(); nm],
        ];
        let mut e_grids: [Vec<Complex64>; 3] = [
            vec![Complex64::default(); nm],
            vec![Complex64::default(); nm],
            vec![Complex64::default(); nm],
        ];
        let mut mode_idx = 0;
        for tx in 0..n {
            let lx = wrap(tx) * n;
            for ty in 0..n {
                let lxy = (lx + wrap(ty)) * n;
                for tz in 0..n {
                    let raw_idx = lxy + wrap(tz);
                    let rho_hat = data[raw_idx] * inv_n3;
                    let e = self.poisson.apply(mode_idx, rho_hat);
                    for a in 0..3 {
                        field[a][mode_idx] = e[a];
                        e_grids[a][raw_idx] = e[a];
                    }
                    mode_idx += 1;
                }
            }
        }

        // Back to the grid, component by component.
        let mut e_real: [Vec<f64>; 3] = [Vec::new(), Vec::new(), Vec::new()];
        for a in 0..3 {
            self.fft.inverse(&mut e_grids[a]);
            e_real[a] = e_grids[a].iter().map(|c| c.re).collect();
        }

        // Gather with the same weights.
        let m = self.spline_order;
        let mut e = vec![[0.0f64; 3]; state.n_particles()];
        exec::chunked_zip_mut(&state.x, &mut e, |_, xs, outs| {
            let mut wx = vec![0.0; m + 1];
            let mut wy = vec![0.0; m + 1];
            let mut wz = vec![0.0; m + 1];
            for (x, o) in xs.iter().zip(outs.iter_mut()) {
                let ix0 = shape::axis_weights(m, x[0] / h, &mut wx);
                let iy0 = shape::axis_weights(m, x[1] / h, &mut wy);
                let iz0 = shape::axis_weights(m, x[2] / h, &mut wz);
                let mut acc = [0.0f64; 3];
                for (ai, &vx) in wx.iter().enumerate() {
                    let ox = (ix0 + ai as i64).rem_euclid(n as i64) as usize * n;
                    for (bi, &vy) in wy.iter().enumerate() {
                        let vxy = vx * vy;
                        let oxy = (ox + (iy0 + bi as i64).rem_euclid(n as i64) as usize) * n;
                        for (ci, &vz) in wz.iter().enumerate() {
                            let idx = oxy + (iz0 + ci as i64).rem_euclid(n as i64) as usize;
                            let v = vxy * vz;
                            acc[0] += v * e_real[0][idx];
                            acc[1] += v * e_real[1][idx];
                            acc[2] += v * e_real[2][idx];
                        }
                    }
                }
                *o = acc;
            }
        });

        Ok(FieldSolve {
            e,
            field,
            rho0,
            modes: self.modes,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::state::{total_charge, ExternalFields, GridField, Q_E};
    use rand_pcg::rand_core::Rng;

    fn uniform(rng: &mut rand_pcg::Pcg64) -> f64 {
        (rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64
    }

    fn cfg(n: usize) -> PropagatorConfig {
        PropagatorConfig {
            scheme: Scheme::Pic,
            n,
            spline_order: 1,
            dt: 0.05,
            external: ExternalFields::none(),
        }
    }

    fn random_state(rng: &mut rand_pcg::Pcg64, n_p: usize, l: f64) -> PhaseSpaceState {
        let x: Vec<Vec3> = (0..n_p)
            .map(|_| [uniform(rng) * l, uniform(rng) * l, uniform(rng) * l])
            .collect();
        let w = vec![l.powi(3) / n_p as f64; n_p];
        PhaseSpaceState::new(x, vec![[0.0; 3]; n_p], w, Q_E).unwrap()
    }

    #[test]
    fn rejects_non_power_of_two() {
        let mut c = cfg(8);
        c.n = 6;
        assert!(PicSolver::new(&c, &Domain::new(1.0).unwrap()).is_err());
    }

    #[test]
    fn lattice_particles_feel_no_field() {
        let n = 8;
        let l = 4.0 * std::f64::consts::PI;
        let h = l / n as f64;
        let mut x = Vec::new();
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    x.push([
                        (i as f64 + 0.5) * h,
                        (j as f64 + 0.5) * h,
                        (k as f64 + 0.5) * h,
                    ]);
                }
            }
        }
        let n_p = x.len();
        let w = vec![l.powi(3) / n_p as f64; n_p];
        let state = PhaseSpaceState::new(x, vec![[0.0; 3]; n_p], w, Q_E).unwrap();
        let solver = PicSolver::new(&cfg(n), &Domain::new(l).unwrap()).unwrap();
        let solve = solver.field_at_particles(&state).unwrap();
        for e in &solve.e {
            for c in e {
                assert!(c.abs() < 1e-12, "lattice field component {c:.2e}");
            }
        }
    }

    #[test]
    fn deposit_conserves_charge() {
        let n = 8;
        let l = 2.0;
        let state = PhaseSpaceState::new(
            vec![[0.37, 1.21, 1.93]],
            vec![[0.0; 3]],
            vec![0.625],
            Q_E,
        )
        .unwrap();
        let solver = PicSolver::new(&cfg(n), &Domain::new(l).unwrap()).unwrap();
        let grid = solver.deposit(&state);
        let h3 = grid.h().powi(3);
        let total: f64 = grid.values.iter().map(|v| v * h3).sum();
        let expected = total_charge(&state, Q_E);
        assert!((total - expected).abs() < 1e-13 * expected.abs());
    }

    /// Dense oracle: explicit unitary DFT matrix applied to the deposited
    /// density, diagonal Poisson multiply, explicit inverse transform,
    /// gather with the transposed deposition matrix.
    fn dense_pic_field(state: &PhaseSpaceState, n: usize, l: f64, m: usize) -> Vec<Vec3> {
        let modes = ModeSet::new(n, l).unwrap();
        let h = l / n as f64;
        let ng = n * n * n;
        let q_e = state.q_over_m * M_E;

        // Deposition matrix entries S_pj / h^3 as a dense pass.
        let mut rho = vec![0.0f64; ng];
        for (x, w) in state.x.iter().zip(&state.w) {
            for (node, wgt) in shape::deposit_weights(*x, m, h, n) {
                rho[(node[0] * n + node[1]) * n + node[2]] += q_e * w * wgt / h.powi(3);
            }
        }
        let mean = rho.iter().sum::<f64>() / ng as f64;
        for v in &mut rho {
            *v -= mean;
        }

        // rho_hat(series) by explicit sums.
        let mut e_hat: Vec<[Complex64; 3]> = Vec::with_capacity(ng);
        for idx in 0..modes.mode_count() {
            let t = modes.triple(idx);
            let mut acc = Complex64::default();
            for i in 0..n {
                for j in 0..n {
                    for k in 0..n {
                        let ph = -2.0 * std::f64::consts::PI / n as f64
                            * (t[0] as f64 * i as f64
                                + t[1] as f64 * j as f64
                                + t[2] as f64 * k as f64);
                        acc += rho[(i * n + j) * n + k] * Complex64::from_polar(1.0, ph);
                    }
                }
            }
            acc /= ng as f64;
            if t == [0, 0, 0] || modes.is_unpaired(t) {
                e_hat.push([Complex64::default(); 3]);
                continue;
            }
            let k = modes.wavenumber(t);
            let k2 = k[0] * k[0] + k[1] * k[1] + k[2] * k[2];
            e_hat.push([
                Complex64::new(0.0, -k[0] / k2) * acc,
                Complex64::new(0.0, -k[1] / k2) * acc,
                Complex64::new(0.0, -k[2] / k2) * acc,
            ]);
        }

        // Explicit inverse transform per node and gather.
        let mut e_grid = vec![[0.0f64; 3]; ng];
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let mut acc = [Complex64::default(); 3];
                    for idx in 0..modes.mode_count() {
                        let t = modes.triple(idx);
                        let ph = 2.0 * std::f64::consts::PI / n as f64
                            * (t[0] as f64 * i as f64
                                + t[1] as f64 * j as f64
                                + t[2] as f64 * k as f64);
                        let w = Complex64::from_polar(1.0, ph);
                        for a in 0..3 {
                            acc[a] += e_hat[idx][a] * w;
                        }
                    }
                    e_grid[(i * n + j) * n + k] = [acc[0].re, acc[1].re, acc[2].re];
                }
            }
        }

        state
            .x
            .iter()
            .map(|x| {
                let mut acc = [0.0f64; 3];
                for (node, wgt) in shape::deposit_weights(*x, m, h, n) {
                    let g = e_grid[(node[0] * n + node[1]) * n + node[2]];
                    for a in 0..3 {
                        acc[a] += wgt * g[a];
                    }
                }
                acc
            })
            .collect()
    }

    #[test]
    fn matches_dense_matrix_oracle() {
        let n = 8;
        let l = 4.0 * std::f64::consts::PI;
        let mut rng = rand_pcg::Pcg64::new(71, 9);
        let state = random_state(&mut rng, 100, l);
        let solver = PicSolver::new(&cfg(n), &Domain::new(l).unwrap()).unwrap();
        let solve = solver.field_at_particles(&state).unwrap();
        let dense = dense_pic_field(&state, n, l, 1);
        let scale = dense
            .iter()
            .flatten()
            .map(|c| c.abs())
            .fold(0.0f64, f64::max);
        for (a, b) in solve.e.iter().zip(&dense) {
            for c in 0..3 {
                assert!(
                    (a[c] - b[c]).abs() <= 1e-11 * scale,
                    "{} vs {}",
                    a[c],
                    b[c]
                );
            }
        }
    }

    #[test]
    fn deposit_gather_adjointness() {
        // <deposit(s), g>_grid = <s, gather(g)>_particles for the bare
        // weight matrix (no 1/h^3, no charge factors).
        let n = 8;
        let l = 3.0;
        let h = l / n as f64;
        let m = 1;
        let mut rng = rand_pcg::Pcg64::new(81, 10);
        let n_p = 40;
        let xs: Vec<Vec3> = (0..n_p)
            .map(|_| [uniform(&mut rng) * l, uniform(&mut rng) * l, uniform(&mut rng) * l])
            .collect();
        let s: Vec<f64> = (0..n_p).map(|_| uniform(&mut rng) - 0.5).collect();
        let mut g = GridField::zeros(n, l);
        for v in &mut g.values {
            *v = uniform(&mut rng) - 0.5;
        }

        let mut deposited = vec![0.0f64; n * n * n];
        for (x, si) in xs.iter().zip(&s) {
            for (node, w) in shape::deposit_weights(*x, m, h, n) {
                deposited[(node[0] * n + node[1]) * n + node[2]] += si * w;
            }
        }
        let lhs: f64 = deposited.iter().zip(&g.values).map(|(a, b)| a * b).sum();

        let rhs: f64 = xs
            .iter()
            .zip(&s)
            .map(|(x, si)| {
                let gathered: f64 = shape::deposit_weights(*x, m, h, n)
                    .iter()
                    .map(|(node, w)| w * g.values[(node[0] * n + node[1]) * n + node[2]])
                    .sum();
                si * gathered
            })
            .sum();
        assert!((lhs - rhs).abs() <= 1e-12 * lhs.abs().max(1.0));
    }

    #[test]
    fn grid_refinement_converges_to_pif() {
        // Smooth band-limited particle configuration: a fine regular
        // lattice carrying smoothly varying weights, so the in-band
        // empirical density equals the smooth density exactly and the
        // PIC-PIF difference isolates the grid error, O(h^2) for m=1.
        let l = 4.0 * std::f64::consts::PI;
        let domain = Domain::new(l).unwrap();
        // Twice the finest tested grid, so lattice harmonics alias far
        // outside every tested band.
        let m_lat = 64;
        let spacing = l / m_lat as f64;
        let w1 = 2.0 * std::f64::consts::PI / l;
        let mut xs = Vec::new();
        let mut ws = Vec::new();
        // Quarter offset: on a half offset the two first alias images of a
        // mode and its conjugate land on one lattice harmonic with opposite
        // sign and cancel, skewing the fitted order.
        for i in 0..m_lat {
            for j in 0..m_lat {
                for k in 0..m_lat {
                    let x = [
                        (i as f64 + 0.25) * spacing,
                        (j as f64 + 0.25) * spacing,
                        (k as f64 + 0.25) * spacing,
                    ];
                    let density = 1.0
                        + 0.4 * (w1 * x[0]).sin()
                        + 0.3 * (w1 * x[1]).cos()
                        + 0.2 * (w1 * x[2]).sin();
                    xs.push(x);
                    ws.push(density);
                }
            }
        }
        let total: f64 = ws.iter().sum();
        for w in &mut ws {
            *w *= l.powi(3) / total;
        }
        let n_p = xs.len();
        let state = PhaseSpaceState::new(xs, vec![[0.0; 3]; n_p], ws, Q_E).unwrap();

        let mut errs = Vec::new();
        let mut hs = Vec::new();
        for n in [8usize, 16, 32] {
            let pif = crate::pif::PifSolver::new(
                &PropagatorConfig {
                    scheme: Scheme::PifNudft,
                    n,
                    spline_order: 1,
                    dt: 0.05,
                    external: ExternalFields::none(),
                },
                &domain,
            )
            .unwrap()
            .field_at_particles(&state)
            .unwrap();
            let pic = PicSolver::new(&cfg(n), &domain)
                .unwrap()
                .field_at_particles(&state)
                .unwrap();
            let mut num = 0.0;
            let mut den = 0.0;
            for (a, b) in pic.e.iter().zip(&pif.e) {
                for c in 0..3 {
                    num += (a[c] - b[c]).powi(2);
                    den += b[c].powi(2);
                }
            }
            errs.push((num / den).sqrt());
            hs.push(l / n as f64);
        }
        let slope = crate::diagnostics::fit_power_law(&hs, &errs).unwrap();
        assert!(
            (slope - 2.0).abs() <= 0.4,
            "PIC->PIF convergence slope {slope}, errors {errs:?}"
        );
    }
}
