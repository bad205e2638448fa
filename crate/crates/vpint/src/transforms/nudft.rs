//! Exact nonuniform discrete Fourier transforms (types 1 and 2).
//!
//! Cost is O(N_p * N_m); these are the reference against which the fast
//! NUFFT path is verified, and they double as the high-accuracy propagator
//! at small mode counts. Per-particle per-axis phase tables are built by
//! recurrence from a single complex exponential, so the inner loop over the
//! N^3 modes is one complex multiply-accumulate.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::exec;
use crate::state::{FieldSpectrum, SpectrumKind, Vec3};
use crate::transforms::ModeSet;

/// Per-axis table of `exp(sign * i * k_n * x)` for `n = -N/2 .. N/2-1`.
fn phase_table(x: f64, k_unit: f64, n: usize, sign: f64, out: &mut [Complex64]) {
    let half = n as i64 / 2;
    let base = Complex64::from_polar(1.0, sign * k_unit * x);
    let mut p = Complex64::from_polar(1.0, -sign * k_unit * x * half as f64);
    for slot in out.iter_mut().take(n) {
        *slot = p;
        p *= base;
    }
}

/// Type 1 (scatter): `coeff(k) = (1/L^3) sum_j s_j exp(-i k . x_j)` for every
/// mode of the set. Exact up to round-off; the shape-function multiplier is
/// the caller's business.
pub fn nudft_type1(
    points: &[Vec3],
    strengths: &[Complex64],
    modes: &ModeSet,
) -> Result<FieldSpectrum> {
    if points.len() != strengths.len() {
        return Err(Error::Argument(format!(
            "points ({}) and strengths ({}) length mismatch",
            points.len(),
            strengths.len()
        )));
    }
    let n = modes.n;
    let nm = modes.mode_count();
    let ku = modes.k_unit();

    let acc = exec::chunked_reduce(
        points,
        |offset, chunk| {
            let mut grid = vec![Complex64::default(); nm];
            let mut tx = vec![Complex64::default(); n];
            let mut ty = vec![Complex64::default(); n];
            let mut tz = vec![Complex64::default(); n];
            for (local, p) in chunk.iter().enumerate() {
                let s = strengths[offset + local];
                phase_table(p[0], ku, n, -1.0, &mut tx);
                phase_table(p[1], ku, n, -1.0, &mut ty);
                phase_table(p[2], ku, n, -1.0, &mut tz);
                let mut idx = 0;
                for px in tx.iter() {
                    let sx = s * px;
                    for py in ty.iter() {
                        let sxy = sx * py;
                        for pz in tz.iter() {
                            grid[idx] += sxy * pz;
                            idx += 1;
                        }
                    }
                }
            }
            grid
        },
        vec![Complex64::default(); nm],
        |mut a, b| {
            for (x, y) in a.iter_mut().zip(b) {
                *x += y;
            }
            a
        },
    );

    let scale = 1.0 / modes.length.powi(3);
    Ok(FieldSpectrum {
        coefficients: acc.into_iter().map(|c| c * scale).collect(),
        n,
        length: modes.length,
        kind: SpectrumKind::Density,
    })
}

/// Type 2 (gather): `out_j = sum_k coeff(k) exp(+i k . x_j)`.
pub fn nudft_type2(spectrum: &FieldSpectrum, points: &[Vec3]) -> Result<Vec<Complex64>> {
    let n = spectrum.n;
    let coeffs = &spectrum.coefficients;
    let ku = 2.0 * std::f64::consts::PI / spectrum.length;
    let mut out = vec![Complex64::default(); points.len()];

    exec::chunked_zip_mut(points, &mut out, |_, pts, outs| {
        let mut tx = vec![Complex64::default(); n];
        let mut ty = vec![Complex64::default(); n];
        let mut tz = vec![Complex64::default(); n];
        for (p, o) in pts.iter().zip(outs.iter_mut()) {
            phase_table(p[0], ku, n, 1.0, &mut tx);
            phase_table(p[1], ku, n, 1.0, &mut ty);
            phase_table(p[2], ku, n, 1.0, &mut tz);
            let mut acc = Complex64::default();
            let mut idx = 0;
            for px in tx.iter() {
                for py in ty.iter() {
                    let pxy = px * py;
                    let mut inner = Complex64::default();
                    for pz in tz.iter() {
                        inner += coeffs[idx] * pz;
                        idx += 1;
                    }
                    acc += pxy * inner;
                }
            }
            *o = acc;
        }
    });
    Ok(out)
}

/// Type-1 fast path for real strengths (charge scatter).
pub(crate) fn nudft_type1_real(
    points: &[Vec3],
    strengths: &[f64],
    modes: &ModeSet,
) -> Vec<Complex64> {
    let n = modes.n;
    let nm = modes.mode_count();
    let ku = modes.k_unit();

    let acc = exec::chunked_reduce(
        points,
        |offset, chunk| {
            let mut grid = vec![Complex64::default(); nm];
            let mut tx = vec![Complex64::default(); n];
            let mut ty = vec![Complex64::default(); n];
            let mut tz = vec![Complex64::default(); n];
            for (local, p) in chunk.iter().enumerate() {
                let s = strengths[offset + local];
                phase_table(p[0], ku, n, -1.0, &mut tx);
                phase_table(p[1], ku, n, -1.0, &mut ty);
                phase_table(p[2], ku, n, -1.0, &mut tz);
                let mut idx = 0;
                for px in tx.iter() {
                    let sx = px * s;
                    for py in ty.iter() {
                        let sxy = sx * py;
                        for pz in tz.iter() {
                            grid[idx] += sxy * pz;
                            idx += 1;
                        }
                    }
                }
            }
            grid
        },
        vec![Complex64::default(); nm],
        |mut a, b| {
            for (x, y) in a.iter_mut().zip(b) {
                *x += y;
            }
            a
        },
    );

    let scale = 1.0 / modes.length.powi(3);
    acc.into_iter().map(|c| c * scale).collect()
}

/// Fused three-component type-2 gather with real output: evaluates the three
/// field-component spectra at every point sharing one set of phase tables.
/// Returns the real parts and the largest imaginary and real magnitudes
/// seen, for the caller's realness check.
pub(crate) fn nudft_gather3_real(
    spectra: &[Vec<Complex64>; 3],
    points: &[Vec3],
    modes: &ModeSet,
) -> (Vec<Vec3>, f64, f64) {
    let n = modes.n;
    let ku = modes.k_unit();
    let mut out = vec![[0.0f64; 3]; points.len()];
    let mut imag = vec![0.0f64; points.len()];

    struct Cell<'a> {
        out: &'a mut [Vec3],
        imag: &'a mut [f64],
    }
    let cells: Vec<Cell> = out
        .chunks_mut(exec::chunk_size(points.len().max(1)))
        .zip(imag.chunks_mut(exec::chunk_size(points.len().max(1))))
        .map(|(o, i)| Cell { out: o, imag: i })
        .collect();

    let run = |(chunk_idx, cell): (usize, Cell)| {
        let size = exec::chunk_size(points.len().max(1));
        let offset = chunk_idx * size;
        let mut tx = vec![Complex64::default(); n];
        let mut ty = vec![Complex64::default(); n];
        let mut tz = vec![Complex64::default(); n];
        for local in 0..cell.out.len() {
            let p = points[offset + local];
            phase_table(p[0], ku, n, 1.0, &mut tx);
            phase_table(p[1], ku, n, 1.0, &mut ty);
            phase_table(p[2], ku, n, 1.0, &mut tz);
            let mut acc = [Complex64::default(); 3];
            let mut idx = 0;
            for px in tx.iter() {
                for py in ty.iter() {
                    let pxy = px * py;
                    let mut inner = [Complex64::default(); 3];
                    for pz in tz.iter() {
                        let ph = pxy * pz;
                        inner[0] += spectra[0][idx] * ph;
                        inner[1] += spectra[1][idx] * ph;
                        inner[2] += spectra[2][idx] * ph;
                        idx += 1;
                    }
                    acc[0] += inner[0];
                    acc[1] += inner[1];
                    acc[2] += inner[2];
                }
            }
            cell.out[local] = [acc[0].re, acc[1].re, acc[2].re];
            cell.imag[local] = acc[0].im.abs().max(acc[1].im.abs()).max(acc[2].im.abs());
        }
    };

    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        cells.into_par_iter().enumerate().for_each(run);
    }
    #[cfg(not(feature = "parallel"))]
    {
        cells.into_iter().enumerate().for_each(run);
    }

    let max_im = imag.iter().cloned().fold(0.0f64, f64::max);
    let max_re = out
        .iter()
        .map(|e| e[0].abs().max(e[1].abs()).max(e[2].abs()))
        .fold(0.0f64, f64::max);
    (out, max_im, max_re)
}
