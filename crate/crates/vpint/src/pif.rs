//! Particle-in-Fourier field solve: scatter charge to the truncated Fourier
//! basis (type-1 transform), apply the shape multiplier and the Poisson
//! operator, gather the field back at the particles (type-2 transform).
//!
//! The shape multiplier enters twice, once on scatter and once on gather.
//! The `k = 0` density mode is zeroed, which implements the uniform
//! neutralizing ion background exactly, and the unpaired `-N/2` modes are
//! zeroed so the gathered field is real. The spectral kernel `-i k / |k|^2`
//! is odd under `k -> -k`, which makes the total self-force vanish to
//! round-off; that is the translational invariance behind machine-precision
//! momentum conservation.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::state::{
    Domain, FieldSpectrum, PhaseSpaceState, PropagatorConfig, Scheme, SpectrumKind, Vec3, M_E,
};
use crate::transforms::{
    nudft_gather3_real, nudft_type1_real, nufft_gather3_real, nufft_type1_real, ModeSet, NufftPlan,
};
use crate::shape;

/// Largest tolerated imaginary-to-real ratio in a gathered field.
const REALNESS_TOL: f64 = 1e-10;

/// Diagonal spectral Poisson/gradient operator `E_k = -i k / |k|^2 rho_k`.
///
/// Stored as the real factors `k_a / |k|^2` per mode; applying the operator
/// rotates the density coefficient by `-i` and scales. Rows at `k = 0` and
/// at unpaired Nyquist modes are zero.
#[derive(Debug, Clone)]
pub struct PoissonOperator {
    pub factors: Vec<Vec3>,
}

impl PoissonOperator {
    pub fn new(modes: &ModeSet) -> Self {
        let mut factors = Vec::with_capacity(modes.mode_count());
        for idx in 0..modes.mode_count() {
            let t = modes.triple(idx);
            if t == [0, 0, 0] || modes.is_unpaired(t) {
                factors.push([0.0; 3]);
                continue;
            }
            let k = modes.wavenumber(t);
            let k2 = k[0] * k[0] + k[1] * k[1] + k[2] * k[2];
            factors.push([k[0] / k2, k[1] / k2, k[2] / k2]);
        }
        PoissonOperator { factors }
    }

    /// `E_a(k) = factor_a * (-i rho_k)`.
    #[inline]
    pub fn apply(&self, idx: usize, rho: Complex64) -> [Complex64; 3] {
        let rot = Complex64::new(rho.im, -rho.re);
        let f = self.factors[idx];
        [rot * f[0], rot * f[1], rot * f[2]]
    }
}

/// Output of one field solve, shared by the PIF and PIC paths.
#[derive(Debug, Clone)]
pub struct FieldSolve {
    /// Self-consistent electric field at each particle.
    pub e: Vec<Vec3>,
    /// Field spectrum of the solve (one shape factor included), mode-set
    /// order, one vector per Cartesian component.
    pub field: [Vec<Complex64>; 3],
    /// `k = 0` density coefficient before background neutralization.
    pub rho0: Complex64,
    pub modes: ModeSet,
}

impl FieldSolve {
    /// Relative error of the scattered total charge against `q_total`.
    pub fn charge_k0_error(&self, q_total: f64) -> f64 {
        let scattered = self.rho0 * self.modes.length.powi(3);
        (scattered - q_total).norm() / q_total.abs()
    }

    pub fn component_spectrum(&self, axis: usize) -> FieldSpectrum {
        FieldSpectrum {
            coefficients: self.field[axis].clone(),
            n: self.modes.n,
            length: self.modes.length,
            kind: SpectrumKind::Field,
        }
    }
}

/// One configured PIF field solver: mode set, precomputed shape multiplier,
/// Poisson operator and (for the NUFFT scheme) the transform plan. Stateless
/// across calls; safe to share between threads.
#[derive(Debug, Clone)]
pub struct PifSolver {
    modes: ModeSet,
    multiplier: Vec<f64>,
    poisson: PoissonOperator,
    plan: Option<NufftPlan>,
}

impl PifSolver {
    pub fn new(cfg: &PropagatorConfig, domain: &Domain) -> Result<Self> {
        cfg.validate()?;
        let modes = ModeSet::new(cfg.n, domain.length)?;
        let h_eff = domain.length / cfg.n as f64;
        let multiplier = shape::fourier_multiplier(cfg.spline_order, &modes, h_eff);
        let poisson = PoissonOperator::new(&modes);
        let plan = match cfg.scheme {
            Scheme::PifNudft => None,
            Scheme::PifNufft { eps } => Some(
                NufftPlan::new(eps, &modes)
                    .map_err(|e| Error::Config(format!("nufft plan failed: {e}")))?,
            ),
            Scheme::Pic => {
                return Err(Error::Config(
                    "PIC configuration passed to the PIF solver".into(),
                ))
            }
        };
        Ok(PifSolver {
            modes,
            multiplier,
            poisson,
            plan,
        })
    }

    pub fn modes(&self) -> &ModeSet {
        &self.modes
    }

    /// Scattered charge density spectrum `rho_k` (shape factor applied).
    pub fn density_spectrum(&self, state: &PhaseSpaceState) -> FieldSpectrum {
        let raw = self.scatter(state);
        let coefficients = raw
            .iter()
            .zip(&self.multiplier)
            .map(|(c, s)| c * s)
            .collect();
        FieldSpectrum {
            coefficients,
            n: self.modes.n,
            length: self.modes.length,
            kind: SpectrumKind::Density,
        }
    }

    fn scatter(&self, state: &PhaseSpaceState) -> Vec<Complex64> {
        let q_e = state.q_over_m * M_E;
        let strengths: Vec<f64> = state.w.iter().map(|w| q_e * w).collect();
        match &self.plan {
            None => nudft_type1_real(&state.x, &strengths, &self.modes),
            Some(plan) => nufft_type1_real(&state.x, &strengths, &self.modes, plan),
        }
    }

    /// Full field solve: `E = P^H L P q_e` with the shape factor applied on
    /// scatter and gather. The gathered field is checked to be real to
    /// `1e-10` relative and the imaginary residue discarded.
    pub fn field_at_particles(&self, state: &PhaseSpaceState) -> Result<FieldSolve> {
        let raw = self.scatter(state);
        let rho0 = raw[self.modes.k0_index()];

        let nm = self.modes.mode_count();
        let mut field = [
            vec![Complex64::default(); nm],
            vec![Complex64::default(); nm],
            vec![Complex64::default(); nm],
        ];
        let mut gather = [
            vec![Complex64::default(); nm],
            vec![Complex64::default(); nm],
            vec![Complex64::default(); nm],
        ];
        for idx in 0..nm {
            let s = self.multiplier[idx];
            let e = self.poisson.apply(idx, raw[idx] * s);
            for a in 0..3 {
                field[a][idx] = e[a];
                gather[a][idx] = e[a] * s;
            }
        }

        let (e, max_im, max_re) = match &self.plan {
            None => nudft_gather3_real(&gather, &state.x, &self.modes),
            Some(plan) => nufft_gather3_real(&gather, &state.x, self.modes.n, plan),
        };
        // Degenerate configurations can have a legitimately vanishing field;
        // the realness scale falls back to the charge scale |Q_e| / L^2.
        let scale = max_re.max(rho0.norm() * self.modes.length);
        if max_im > REALNESS_TOL * scale && max_im > 0.0 {
            return Err(Error::numeric(
                "pif gather",
                format!(
                    "imaginary residue {max_im:.2e} exceeds {REALNESS_TOL:.0e} of scale {scale:.2e}"
                ),
            ));
        }
        Ok(FieldSolve {
            e,
            field,
            rho0,
            modes: self.modes,
        })
    }
}
