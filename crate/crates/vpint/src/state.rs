//! Domain types shared by every other module: particles, spectra, grids,
//! domains and propagator configuration.
//!
//! Units are normalized plasma units throughout: `q_e = -1`, `m_e = 1`,
//! `eps_0 = 1`. Particle weights are uniform, `w_j = |Q_e| / N_p`, with the
//! sign of the charge carried by `q_e`.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Electron charge in normalized units.
pub const Q_E: f64 = -1.0;
/// Electron mass in normalized units.
pub const M_E: f64 = 1.0;

pub type Vec3 = [f64; 3];

pub fn dot(a: Vec3, b: Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub fn cross(a: Vec3, b: Vec3) -> Vec3 {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

pub fn norm2(a: Vec3) -> f64 {
    dot(a, a)
}

/// Periodic cube `[0, L)^3`; three spatial plus three velocity dimensions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Domain {
    pub length: f64,
}

impl Domain {
    pub fn new(length: f64) -> Result<Self> {
        if length <= 0.0 || !length.is_finite() {
            return Err(Error::Argument(format!(
                "domain length must be positive, got {length}"
            )));
        }
        Ok(Domain { length })
    }

    pub fn volume(&self) -> f64 {
        self.length * self.length * self.length
    }

    pub fn wrap(&self, x: Vec3) -> Vec3 {
        wrap_periodic(x, self.length)
    }

    /// Component-wise minimum-image difference `a - b`.
    pub fn min_image(&self, a: Vec3, b: Vec3) -> Vec3 {
        let l = self.length;
        let mut d = [a[0] - b[0], a[1] - b[1], a[2] - b[2]];
        for c in &mut d {
            *c -= l * (*c / l).round();
        }
        d
    }
}

/// Map every component of `x` into `[0, L)`. The result is congruent to the
/// input modulo `L` and the map is the identity (bitwise) on `[0, L)`.
pub fn wrap_periodic(x: Vec3, length: f64) -> Vec3 {
    let mut out = x;
    for c in &mut out {
        let mut y = *c - length * (*c / length).floor();
        // Rounding in the division can land exactly on the upper boundary.
        if y >= length {
            y -= length;
        }
        if y < 0.0 {
            y += length;
        }
        *c = y;
    }
    out
}

/// All particle positions and velocities: the phase-space vector
/// `u = {x, v}` that the parareal correction acts on.
///
/// Particle identity is positional. Propagators never reorder particles and
/// never touch the weights, so states from different propagations of the
/// same initial condition combine component-wise.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseSpaceState {
    pub x: Vec<Vec3>,
    pub v: Vec<Vec3>,
    /// Charge-carrying weights; uniform `|Q_e| / N_p` for sampled states.
    pub w: Vec<f64>,
    /// Charge-to-mass ratio `q_e / m_e`.
    pub q_over_m: f64,
}

impl PhaseSpaceState {
    pub fn new(x: Vec<Vec3>, v: Vec<Vec3>, w: Vec<f64>, q_over_m: f64) -> Result<Self> {
        if x.is_empty() || x.len() != v.len() || x.len() != w.len() {
            return Err(Error::Argument(format!(
                "state arrays must be non-empty and equal length (x: {}, v: {}, w: {})",
                x.len(),
                v.len(),
                w.len()
            )));
        }
        Ok(PhaseSpaceState { x, v, w, q_over_m })
    }

    pub fn n_particles(&self) -> usize {
        self.x.len()
    }

    /// Column CSV used for checkpoint/diff tooling:
    /// `particle,x,y,z,vx,vy,vz` with a header row.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("particle,x,y,z,vx,vy,vz\n");
        for j in 0..self.n_particles() {
            let x = self.x[j];
            let v = self.v[j];
            out.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                j, x[0], x[1], x[2], v[0], v[1], v[2]
            ));
        }
        out
    }

    /// Parse the checkpoint CSV written by [`Self::to_csv`]. Weights and
    /// charge-to-mass are not part of the file and must be supplied.
    pub fn from_csv(text: &str, w: Vec<f64>, q_over_m: f64) -> Result<Self> {
        let mut x = Vec::new();
        let mut v = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            if lineno == 0 || line.trim().is_empty() {
                continue;
            }
            let cols: Vec<&str> = line.split(',').collect();
            if cols.len() != 7 {
                return Err(Error::Argument(format!(
                    "state csv line {} has {} columns, expected 7",
                    lineno + 1,
                    cols.len()
                )));
            }
            let parse = |s: &str| -> Result<f64> {
                s.trim()
                    .parse()
                    .map_err(|_| Error::Argument(format!("bad number {s:?} on line {}", lineno + 1)))
            };
            x.push([parse(cols[1])?, parse(cols[2])?, parse(cols[3])?]);
            v.push([parse(cols[4])?, parse(cols[5])?, parse(cols[6])?]);
        }
        PhaseSpaceState::new(x, v, w, q_over_m)
    }
}

/// Total charge `Q_e = q_e * sum_j w_j`.
pub fn total_charge(state: &PhaseSpaceState, q_e: f64) -> f64 {
    q_e * state.w.iter().sum::<f64>()
}

/// What a spectrum's coefficients represent.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpectrumKind {
    /// Charge density `rho_k`.
    Density,
    /// One Cartesian component of the electric field `E_k`.
    Field,
}

/// Complex Fourier coefficients on the truncated symmetric mode set
/// `n in [-N/2, N/2-1]^3`, stored row-major over `(n_x, n_y, n_z)` with
/// `n_z` fastest. Physical wavenumber is `k = (2 pi / L) n`.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldSpectrum {
    pub coefficients: Vec<Complex64>,
    /// Modes per dimension (even).
    pub n: usize,
    /// Domain side length.
    pub length: f64,
    pub kind: SpectrumKind,
}

impl FieldSpectrum {
    pub fn zeros(n: usize, length: f64, kind: SpectrumKind) -> Self {
        FieldSpectrum {
            coefficients: vec![Complex64::new(0.0, 0.0); n * n * n],
            n,
            length,
            kind,
        }
    }

    /// CSV dump `(n_x, n_y, n_z, re, im)` in the storage enumeration order.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("n_x,n_y,n_z,re,im\n");
        let half = self.n as i64 / 2;
        let mut idx = 0;
        for ix in -half..half {
            for iy in -half..half {
                for iz in -half..half {
                    let c = self.coefficients[idx];
                    out.push_str(&format!("{},{},{},{},{}\n", ix, iy, iz, c.re, c.im));
                    idx += 1;
                }
            }
        }
        out
    }
}

/// Real scalar field on the uniform periodic `N^3` mesh, mesh size
/// `h = L / N`, node `(i, j, k)` at position `h * (i, j, k)`, row-major with
/// the `z` index fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct GridField {
    pub values: Vec<f64>,
    pub n: usize,
    pub length: f64,
}

impl GridField {
    pub fn zeros(n: usize, length: f64) -> Self {
        GridField {
            values: vec![0.0; n * n * n],
            n,
            length,
        }
    }

    pub fn h(&self) -> f64 {
        self.length / self.n as f64
    }

    #[inline]
    pub fn idx(&self, i: usize, j: usize, k: usize) -> usize {
        (i * self.n + j) * self.n + k
    }

    /// CSV dump `(i, j, k, value)`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("i,j,k,value\n");
        for i in 0..self.n {
            for j in 0..self.n {
                for k in 0..self.n {
                    out.push_str(&format!(
                        "{},{},{},{}\n",
                        i,
                        j,
                        k,
                        self.values[self.idx(i, j, k)]
                    ));
                }
            }
        }
        out
    }
}

/// Field-solve scheme of a propagator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Scheme {
    /// Particle-in-Fourier with exact nonuniform DFTs.
    PifNudft,
    /// Particle-in-Fourier with tolerance-controlled NUFFTs.
    PifNufft { eps: f64 },
    /// Particle-in-cell with an FFT Poisson solve.
    Pic,
}

impl Scheme {
    pub fn is_pif(&self) -> bool {
        !matches!(self, Scheme::Pic)
    }

    pub fn label(&self) -> String {
        match self {
            Scheme::PifNudft => "pif_nudft".to_string(),
            Scheme::PifNufft { eps } => format!("pif_nufft({eps:.0e})"),
            Scheme::Pic => "pic".to_string(),
        }
    }
}

/// Uniform external fields: a constant magnetic field plus a position-affine
/// electric field `E_ext(x) = M (x - center) ` evaluated analytically.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExternalFields {
    pub b: Vec3,
    /// Row-diagonal coefficient matrix of the affine electric field.
    pub e_matrix: [Vec3; 3],
    pub e_offset: Vec3,
}

impl ExternalFields {
    pub fn none() -> Self {
        ExternalFields {
            b: [0.0; 3],
            e_matrix: [[0.0; 3]; 3],
            e_offset: [0.0; 3],
        }
    }

    /// Penning-trap fields: `B = (0, 0, 5)` and the quadrupole electric field
    /// `E = (-15/L (x - L/2), -15/L (y - L/2), 30/L (z - L/2))`.
    pub fn penning_trap(length: f64) -> Self {
        let l = length;
        ExternalFields {
            b: [0.0, 0.0, 5.0],
            e_matrix: [
                [-15.0 / l, 0.0, 0.0],
                [0.0, -15.0 / l, 0.0],
                [0.0, 0.0, 30.0 / l],
            ],
            e_offset: [15.0 / 2.0, 15.0 / 2.0, -15.0],
        }
    }

    pub fn is_zero(&self) -> bool {
        self.b == [0.0; 3] && self.e_offset == [0.0; 3] && self.e_matrix == [[0.0; 3]; 3]
    }

    pub fn eval_e(&self, x: Vec3) -> Vec3 {
        let m = &self.e_matrix;
        [
            m[0][0] * x[0] + m[0][1] * x[1] + m[0][2] * x[2] + self.e_offset[0],
            m[1][0] * x[0] + m[1][1] * x[1] + m[1][2] * x[2] + self.e_offset[1],
            m[2][0] * x[0] + m[2][1] * x[1] + m[2][2] * x[2] + self.e_offset[2],
        ]
    }
}

/// Everything defining a propagator: scheme, resolution, shape-function
/// order, step size and external fields.
#[derive(Debug, Clone, PartialEq)]
pub struct PropagatorConfig {
    pub scheme: Scheme,
    /// Modes (PIF) or grid points (PIC) per dimension.
    pub n: usize,
    /// B-spline order of the shape function.
    pub spline_order: usize,
    /// Time step size.
    pub dt: f64,
    pub external: ExternalFields,
}

impl PropagatorConfig {
    pub fn validate(&self) -> Result<()> {
        if self.dt <= 0.0 || !self.dt.is_finite() {
            return Err(Error::Config(format!(
                "dt must be positive, got {}",
                self.dt
            )));
        }
        if self.n < 2 || self.n % 2 != 0 {
            return Err(Error::Config(format!(
                "mode/grid count per dimension must be even and >= 2, got {}",
                self.n
            )));
        }
        if self.spline_order < 1 {
            return Err(Error::Config("spline order must be >= 1".into()));
        }
        if let Scheme::PifNufft { eps } = self.scheme {
            if !(1e-15..=1e-1).contains(&eps) {
                return Err(Error::Argument(format!(
                    "nufft tolerance must lie in (1e-15, 1e-1), got {eps}"
                )));
            }
        }
        if self.scheme == Scheme::Pic && !self.n.is_power_of_two() {
            return Err(Error::Config(format!(
                "PIC requires a power-of-two grid, got {}",
                self.n
            )));
        }
        Ok(())
    }
}
