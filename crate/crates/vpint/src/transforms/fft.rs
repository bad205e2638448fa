//! Iterative radix-2 complex FFT and the unitary 3D transforms between
//! `GridField` and `FieldSpectrum`. Power-of-two sizes only.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::state::{FieldSpectrum, GridField, SpectrumKind};

/// Precomputed twiddle tables for one transform size.
#[derive(Debug, Clone)]
pub struct Fft3 {
    n: usize,
    // twiddles[s][j] = exp(-2 pi i j / 2^(s+1)), one table per stage.
    stages: Vec<Vec<Complex64>>,
}

impl Fft3 {
    pub fn new(n: usize) -> Result<Self> {
        if !n.is_power_of_two() || n < 2 {
            return Err(Error::Argument(format!(
                "FFT size must be a power of two >= 2, got {n}"
            )));
        }
        let log2n = n.trailing_zeros() as usize;
        let mut stages = Vec::with_capacity(log2n);
        for s in 0..log2n {
            let len = 1usize << (s + 1);
            let half = len / 2;
            let mut tw = Vec::with_capacity(half);
            for j in 0..half {
                let ang = -2.0 * std::f64::consts::PI * j as f64 / len as f64;
                tw.push(Complex64::from_polar(1.0, ang));
            }
            stages.push(tw);
        }
        Ok(Fft3 { n, stages })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Unnormalized forward transform of one line:
    /// `out[l] = sum_m in[m] exp(-2 pi i l m / n)`.
    fn line_forward(&self, buf: &mut [Complex64]) {
        let n = self.n;
        debug_assert_eq!(buf.len(), n);
        // Bit-reversal permutation.
        let mut j = 0usize;
        for i in 0..n {
            if i < j {
                buf.swap(i, j);
            }
            let mut bit = n >> 1;
            while j & bit != 0 {
                j ^= bit;
                bit >>= 1;
            }
            j |= bit;
        }
        for (s, tw) in self.stages.iter().enumerate() {
            let len = 1usize << (s + 1);
            let half = len / 2;
            let mut start = 0;
            while start < n {
                for j in 0..half {
                    let a = buf[start + j];
                    let b = buf[start + j + half] * tw[j];
                    buf[start + j] = a + b;
                    buf[start + j + half] = a - b;
                }
                start += len;
            }
        }
    }

    fn line_inverse(&self, buf: &mut [Complex64]) {
        // Unnormalized inverse via conjugation: conj(F(conj(x))).
        for c in buf.iter_mut() {
            *c = c.conj();
        }
        self.line_forward(buf);
        for c in buf.iter_mut() {
            *c = c.conj();
        }
    }

    fn apply_3d(&self, data: &mut [Complex64], inverse: bool) {
        let n = self.n;
        debug_assert_eq!(data.len(), n * n * n);
        let mut line = vec![Complex64::default(); n];
        // z lines (contiguous).
        for base in (0..n * n * n).step_by(n) {
            line.copy_from_slice(&data[base..base + n]);
            if inverse {
                self.line_inverse(&mut line);
            } else {
                self.line_forward(&mut line);
            }
            data[base..base + n].copy_from_slice(&line);
        }
        // y lines (stride n).
        for ix in 0..n {
            for iz in 0..n {
                let base = ix * n * n + iz;
                for (t, item) in line.iter_mut().enumerate() {
                    *item = data[base + t * n];
                }
                if inverse {
                    self.line_inverse(&mut line);
                } else {
                    self.line_forward(&mut line);
                }
                for (t, item) in line.iter().enumerate() {
                    data[base + t * n] = *item;
                }
            }
        }
        // x lines (stride n^2).
        for iy in 0..n {
            for iz in 0..n {
                let base = iy * n + iz;
                for (t, item) in line.iter_mut().enumerate() {
                    *item = data[base + t * n * n];
                }
                if inverse {
                    self.line_inverse(&mut line);
                } else {
                    self.line_forward(&mut line);
                }
                for (t, item) in line.iter().enumerate() {
                    data[base + t * n * n] = *item;
                }
            }
        }
    }

    /// Unnormalized 3D forward transform, in place. DFT index convention:
    /// `out[l] = sum_m in[m] exp(-2 pi i l.m / n)` with `l` taken modulo `n`
    /// per axis.
    pub fn forward(&self, data: &mut [Complex64]) {
        self.apply_3d(data, false);
    }

    /// Unnormalized 3D inverse transform: `out[m] = sum_l in[l] exp(+2 pi i l.m / n)`.
    pub fn inverse(&self, data: &mut [Complex64]) {
        self.apply_3d(data, true);
    }
}

/// Map grid-storage order (DFT indices `0..n`) to mode-set order
/// (`-n/2..n/2`), i.e. an fftshift of every axis.
fn shift_to_modes(hat: &[Complex64], n: usize) -> Vec<Complex64> {
    let half = n / 2;
    let mut out = vec![Complex64::default(); n * n * n];
    for tx in 0..n {
        let lx = (tx + half) % n;
        for ty in 0..n {
            let ly = (ty + half) % n;
            for tz in 0..n {
                let lz = (tz + half) % n;
                out[(tx * n + ty) * n + tz] = hat[(lx * n + ly) * n + lz];
            }
        }
    }
    out
}

fn shift_from_modes(coeffs: &[Complex64], n: usize) -> Vec<Complex64> {
    let half = n / 2;
    let mut out = vec![Complex64::default(); n * n * n];
    for tx in 0..n {
        let lx = (tx + half) % n;
        for ty in 0..n {
            let ly = (ty + half) % n;
            for tz in 0..n {
                let lz = (tz + half) % n;
                out[(lx * n + ly) * n + lz] = coeffs[(tx * n + ty) * n + tz];
            }
        }
    }
    out
}

/// Unitary forward FFT of a real grid field, `1/sqrt(N^3)` normalization,
/// coefficients in mode-set order.
pub fn fft_forward(grid: &GridField) -> Result<FieldSpectrum> {
    let n = grid.n;
    let fft = Fft3::new(n)?;
    let mut data: Vec<Complex64> = grid
        .values
        .iter()
        .map(|&v| Complex64::new(v, 0.0))
        .collect();
    fft.forward(&mut data);
    let scale = 1.0 / (n as f64).powi(3).sqrt();
    for c in &mut data {
        *c *= scale;
    }
    Ok(FieldSpectrum {
        coefficients: shift_to_modes(&data, n),
        n,
        length: grid.length,
        kind: SpectrumKind::Density,
    })
}

/// Unitary inverse FFT back to the grid. Discards the imaginary residue,
/// which is at round-off level for Hermitian spectra.
pub fn fft_inverse(spectrum: &FieldSpectrum) -> Result<GridField> {
    let n = spectrum.n;
    let fft = Fft3::new(n)?;
    let mut data = shift_from_modes(&spectrum.coefficients, n);
    fft.inverse(&mut data);
    let scale = 1.0 / (n as f64).powi(3).sqrt();
    Ok(GridField {
        values: data.iter().map(|c| c.re * scale).collect(),
        n,
        length: spectrum.length,
    })
}
