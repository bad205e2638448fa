//! B-spline particle shape functions of order `m`: real-space
//! deposition/gather weights for the PIC path and the analytic Fourier
//! multiplier `S_k` for the PIF path.
//!
//! Deposition uses the centered cardinal B-spline of degree `m` (order 1 is
//! cloud-in-cell), whose integer-shift translates sum to one at any point.
//! The multiplier is the separable product
//! `S_k = prod_a sinc(k_a h' / 2)^(m+1)` with effective width `h' = L / N`,
//! so PIF and PIC at equal `N` and `m` apply the same smoothing.

use crate::transforms::ModeSet;

/// Centered cardinal B-spline of degree `m`, support `(-(m+1)/2, (m+1)/2)`.
/// The degree-0 box is half-open so integer-shifted translates sum to one
/// even when the evaluation point sits exactly on a knot.
pub fn bspline(m: usize, t: f64) -> f64 {
    if m == 0 {
        return if (-0.5..0.5).contains(&t) { 1.0 } else { 0.0 };
    }
    let half = 0.5 * (m as f64 + 1.0);
    if t.abs() >= half {
        return 0.0;
    }
    ((t + half) * bspline(m - 1, t + 0.5) + (half - t) * bspline(m - 1, t - 0.5)) / m as f64
}

/// Per-axis deposition stencil: the first node index (to be wrapped by the
/// caller) and the `m + 1` B-spline weights for a particle at grid
/// coordinate `g = x / h`.
#[inline]
pub fn axis_weights(m: usize, g: f64, weights: &mut [f64]) -> i64 {
    let i0 = (g - 0.5 * (m as f64 + 1.0)).ceil() as i64;
    for (j, w) in weights.iter_mut().enumerate().take(m + 1) {
        *w = bspline(m, (i0 + j as i64) as f64 - g);
    }
    i0
}

/// Full deposition stencil for a particle: `(m+1)^3` periodic node triples
/// with nonnegative weights that sum to one.
pub fn deposit_weights(x: [f64; 3], m: usize, h: f64, n: usize) -> Vec<([usize; 3], f64)> {
    let mut wx = vec![0.0; m + 1];
    let mut wy = vec![0.0; m + 1];
    let mut wz = vec![0.0; m + 1];
    let ix0 = axis_weights(m, x[0] / h, &mut wx);
    let iy0 = axis_weights(m, x[1] / h, &mut wy);
    let iz0 = axis_weights(m, x[2] / h, &mut wz);
    let wrap = |i: i64| i.rem_euclid(n as i64) as usize;
    let mut out = Vec::with_capacity((m + 1).pow(3));
    for (a, &vx) in wx.iter().enumerate() {
        for (b, &vy) in wy.iter().enumerate() {
            for (c, &vz) in wz.iter().enumerate() {
                out.push((
                    [
                        wrap(ix0 + a as i64),
                        wrap(iy0 + b as i64),
                        wrap(iz0 + c as i64),
                    ],
                    vx * vy * vz,
                ));
            }
        }
    }
    out
}

fn sinc(z: f64) -> f64 {
    if z.abs() < 1e-8 {
        1.0 - z * z / 6.0
    } else {
        z.sin() / z
    }
}

/// Fourier multiplier of the order-`m` B-spline shape of width `h_eff`, one
/// value per mode of the set. `S_0 = 1` and `0 < S_k <= 1` everywhere.
pub fn fourier_multiplier(m: usize, modes: &ModeSet, h_eff: f64) -> Vec<f64> {
    let n = modes.n;
    let ku = modes.k_unit();
    let half = n as i64 / 2;
    // Separable: precompute one axis.
    let axis: Vec<f64> = (0..n)
        .map(|t| {
            let k = ku * (t as i64 - half) as f64;
            sinc(0.5 * k * h_eff).powi(m as i32 + 1)
        })
        .collect();
    let mut out = Vec::with_capacity(modes.mode_count());
    for &sx in &axis {
        for &sy in &axis {
            for &sz in &axis {
                out.push(sx * sy * sz);
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_pcg::rand_core::Rng;

    fn uniform(rng: &mut rand_pcg::Pcg64) -> f64 {
        (rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64
    }

    #[test]
    fn cic_on_node_is_a_delta() {
        let h = 0.5;
        let n = 8;
        let entries = deposit_weights([2.0 * h, 3.0 * h, 4.0 * h], 1, h, n);
        assert_eq!(entries.len(), 8);
        for (node, w) in entries {
            if node == [2, 3, 4] {
                assert!((w - 1.0).abs() < 1e-14);
            } else {
                assert!(w.abs() < 1e-14);
            }
        }
    }

    #[test]
    fn cic_at_cell_center_is_even() {
        let h = 1.0;
        let entries = deposit_weights([1.5, 2.5, 3.5], 1, h, 8);
        for (_, w) in entries {
            assert!((w - 0.125).abs() < 1e-14);
        }
    }

    #[test]
    fn cic_matches_closed_form_products() {
        let h = 0.75;
        let n = 16;
        let mut rng = rand_pcg::Pcg64::new(11, 5);
        for _ in 0..50 {
            let x = [
                uniform(&mut rng) * h * n as f64,
                uniform(&mut rng) * h * n as f64,
                uniform(&mut rng) * h * n as f64,
            ];
            let entries = deposit_weights(x, 1, h, n);
            let cell = [
                (x[0] / h).floor() as i64,
                (x[1] / h).floor() as i64,
                (x[2] / h).floor() as i64,
            ];
            let d = [
                x[0] / h - cell[0] as f64,
                x[1] / h - cell[1] as f64,
                x[2] / h - cell[2] as f64,
            ];
            let mut total = 0.0;
            for (node, w) in &entries {
                total += w;
                // Which corner of the cell is this node?
                let mut expect = 1.0;
                for axis in 0..3 {
                    let lo = (cell[axis].rem_euclid(n as i64)) as usize;
                    expect *= if node[axis] == lo {
                        1.0 - d[axis]
                    } else {
                        d[axis]
                    };
                }
                assert!((w - expect).abs() < 1e-13);
            }
            assert!((total - 1.0).abs() < 1e-14, "partition of unity violated");
        }
    }

    #[test]
    fn partition_of_unity_higher_orders() {
        let h = 1.25;
        let n = 16;
        let mut rng = rand_pcg::Pcg64::new(13, 29);
        for m in [1usize, 2, 3, 5, 7] {
            for _ in 0..20 {
                let x = [
                    uniform(&mut rng) * h * n as f64,
                    uniform(&mut rng) * h * n as f64,
                    uniform(&mut rng) * h * n as f64,
                ];
                let entries = deposit_weights(x, m, h, n);
                assert_eq!(entries.len(), (m + 1).pow(3));
                let total: f64 = entries.iter().map(|(_, w)| w).sum();
                assert!(
                    (total - 1.0).abs() < 1e-14,
                    "order {m}: weights sum to {total}"
                );
                assert!(entries.iter().all(|(_, w)| *w >= 0.0));
            }
        }
    }

    #[test]
    fn multiplier_is_one_at_k0_and_bounded() {
        let modes = ModeSet::new(8, 4.0).unwrap();
        for m in [1usize, 3, 7] {
            let s = fourier_multiplier(m, &modes, 4.0 / 8.0);
            assert!((s[modes.k0_index()] - 1.0).abs() < 1e-15);
            for &v in &s {
                assert!(v > 0.0 && v <= 1.0);
            }
        }
    }

    #[test]
    fn multiplier_matches_quadrature_of_cic_hat() {
        // S_k for m=1 is the Fourier transform of the unit-mass hat of width
        // 2 h'; check one mode against direct Simpson quadrature.
        let l = 4.0;
        let n = 8;
        let modes = ModeSet::new(n, l).unwrap();
        let h_eff = l / n as f64;
        let s = fourier_multiplier(1, &modes, h_eff);
        let k = 2.0 * std::f64::consts::PI / l;

        let steps = 20000;
        let dx = 2.0 * h_eff / steps as f64;
        let mut quad = 0.0;
        for i in 0..=steps {
            let x = -h_eff + i as f64 * dx;
            let hat = (1.0 - (x / h_eff).abs()).max(0.0) / h_eff;
            let weight = if i == 0 || i == steps {
                1.0
            } else if i % 2 == 1 {
                4.0
            } else {
                2.0
            };
            quad += weight * hat * (k * x).cos();
        }
        quad *= dx / 3.0;

        let idx = modes.index([1, 0, 0]);
        assert!(
            (s[idx] - quad).abs() < 1e-10,
            "multiplier {} vs quadrature {}",
            s[idx],
            quad
        );
    }

    #[test]
    fn higher_order_decays_faster() {
        let modes = ModeSet::new(8, 4.0).unwrap();
        let s1 = fourier_multiplier(1, &modes, 0.5);
        let s7 = fourier_multiplier(7, &modes, 0.5);
        for idx in 0..modes.mode_count() {
            if idx == modes.k0_index() {
                continue;
            }
            assert!(s7[idx] <= s1[idx] + 1e-15);
        }
    }

    #[test]
    fn order7_at_h_tracks_order1_at_2h_on_low_modes() {
        // The spectrum-matching property behind using a coarse PIC mesh of
        // size 2h against an order-7 fine shape of size h.
        let n = 16;
        let l = 4.0 * std::f64::consts::PI;
        let modes = ModeSet::new(n, l).unwrap();
        let h = l / n as f64;
        let s7 = fourier_multiplier(7, &modes, h);
        let s1_2h = fourier_multiplier(1, &modes, 2.0 * h);
        for idx in 0..modes.mode_count() {
            let t = modes.triple(idx);
            let low = t.iter().all(|&c| c.unsigned_abs() <= n as u64 / 4);
            if !low {
                continue;
            }
            let ratio = s7[idx] / s1_2h[idx];
            assert!(
                (ratio - 1.0).abs() <= 0.25,
                "mode {t:?}: ratio {ratio}"
            );
        }
    }
}
