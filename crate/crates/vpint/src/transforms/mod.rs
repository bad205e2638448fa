//! Nonuniform and uniform Fourier transforms.
//!
//! Exact nonuniform DFTs of type 1 (points to modes) and type 2 (modes to
//! points), their fast tolerance-controlled NUFFT counterparts, and a
//! radix-2 FFT for the PIC Poisson solve. Together these realize the
//! particle-to-Fourier interpolation matrices and their adjoints.

mod fft;
mod nudft;
mod nufft;

pub use fft::{fft_forward, fft_inverse, Fft3};
pub use nudft::{nudft_type1, nudft_type2};
pub(crate) use nudft::{nudft_gather3_real, nudft_type1_real};
pub use nufft::{nufft_type1, nufft_type2, NufftPlan};
pub(crate) use nufft::{nufft_gather3_real, nufft_type1_real};

use crate::error::{Error, Result};

/// The truncated symmetric mode set: integer triples
/// `n in [-N/2, N/2 - 1]^3` with physical wavenumber `k = (2 pi / L) n`.
///
/// Enumeration order is row-major over `(n_x, n_y, n_z)` with `n_z` fastest
/// and each axis running from `-N/2` to `N/2 - 1`; every spectrum in the
/// crate shares this order. The set contains `k = 0` exactly once, at the
/// linear index returned by [`ModeSet::k0_index`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeSet {
    pub n: usize,
    pub length: f64,
}

impl ModeSet {
    pub fn new(n: usize, length: f64) -> Result<Self> {
        if n < 2 || n % 2 != 0 {
            return Err(Error::Argument(format!(
                "mode count per dimension must be even and >= 2, got {n}"
            )));
        }
        if length <= 0.0 {
            return Err(Error::Argument("domain length must be positive".into()));
        }
        Ok(ModeSet { n, length })
    }

    pub fn mode_count(&self) -> usize {
        self.n * self.n * self.n
    }

    /// Fundamental wavenumber `2 pi / L`.
    pub fn k_unit(&self) -> f64 {
        2.0 * std::f64::consts::PI / self.length
    }

    /// Integer mode triple at a linear index.
    pub fn triple(&self, idx: usize) -> [i64; 3] {
        let n = self.n;
        let half = n as i64 / 2;
        let iz = (idx % n) as i64 - half;
        let iy = ((idx / n) % n) as i64 - half;
        let ix = (idx / (n * n)) as i64 - half;
        [ix, iy, iz]
    }

    /// Linear index of an integer mode triple.
    pub fn index(&self, t: [i64; 3]) -> usize {
        let n = self.n as i64;
        let half = n / 2;
        (((t[0] + half) * n + (t[1] + half)) * n + (t[2] + half)) as usize
    }

    pub fn k0_index(&self) -> usize {
        self.index([0, 0, 0])
    }

    /// Physical wavenumber of a triple.
    pub fn wavenumber(&self, t: [i64; 3]) -> [f64; 3] {
        let ku = self.k_unit();
        [ku * t[0] as f64, ku * t[1] as f64, ku * t[2] as f64]
    }

    /// True if any component is the unpaired `-N/2` mode. These modes have
    /// no conjugate partner in the symmetric set, so a real field cannot
    /// carry them; the Poisson operator zeroes them.
    pub fn is_unpaired(&self, t: [i64; 3]) -> bool {
        let m = -(self.n as i64) / 2;
        t[0] == m || t[1] == m || t[2] == m
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mode_enumeration_roundtrip() {
        let m = ModeSet::new(8, 2.0).unwrap();
        assert_eq!(m.mode_count(), 512);
        let mut seen_zero = 0;
        for idx in 0..m.mode_count() {
            let t = m.triple(idx);
            assert_eq!(m.index(t), idx);
            for c in t {
                assert!((-4..4).contains(&c));
            }
            if t == [0, 0, 0] {
                seen_zero += 1;
                assert_eq!(idx, m.k0_index());
            }
        }
        assert_eq!(seen_zero, 1);
    }

    #[test]
    fn rejects_odd_mode_count() {
        assert!(ModeSet::new(5, 1.0).is_err());
    }
}
