//! Physical configuration of the waveguide pair and the linear
//! quadrature dynamics it induces.
//!
//! Quadratures are ordered `(q_a, p_a, q_b, p_b)` with
//! `q = (c + c†)/√2`, `p = −i(c − c†)/√2`. Mode `a` propagates in the gain
//! guide, mode `b` in the loss guide. The equations of motion are
//! `dX/dt = M X + F(t)`, and the covariance matrix in the convention
//! `V_ij = ⟨X_i X_j + X_j X_i⟩ − 2⟨X_i⟩⟨X_j⟩` (vacuum `V = I`) obeys
//! `dV/dt = M V + V Mᵀ + D`.
//!
//! The diffusion matrix follows from the zero-temperature reservoir
//! correlators `⟨ξ ξ†⟩ = δ`, `⟨ξ† ξ⟩ = 0`: the quadrature noises
//! `Q = (ξ + ξ†)/√2` and `P = −i(ξ − ξ†)/√2` then have symmetrized
//! correlators `⟨Q Q' + Q' Q⟩ = ⟨P P' + P' P⟩ = δ(t − t')` and no Q–P cross
//! term, so the drive `F = (√2g Q_a, −√2g P_a, √2γ Q_b, √2γ P_b)` yields
//! `D = 2·diag(g, g, γ, γ)`.

use std::f64::consts::{FRAC_PI_4, SQRT_2};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{Mat4, Vec4};
use crate::real::Real;

/// Where the squeezing element sits.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Placement {
    /// Bare gain/loss dimer.
    None,
    /// Squeezer in the loss guide (mode `b`).
    #[serde(rename = "loss")]
    LossGuide,
    /// Squeezer in the gain guide (mode `a`).
    #[serde(rename = "gain")]
    GainGuide,
    /// Identical squeezers in both guides.
    Both,
}

impl Placement {
    pub const ALL: [Placement; 4] = [Placement::None, Placement::LossGuide, Placement::GainGuide, Placement::Both];

    fn squeezes_gain(self) -> bool {
        matches!(self, Placement::GainGuide | Placement::Both)
    }

    fn squeezes_loss(self) -> bool {
        matches!(self, Placement::LossGuide | Placement::Both)
    }
}

impl std::fmt::Display for Placement {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Placement::None => "none",
            Placement::LossGuide => "loss",
            Placement::GainGuide => "gain",
            Placement::Both => "both",
        };
        f.write_str(s)
    }
}

/// Rates of the coupled-waveguide system.
///
/// `loss` is stored as a positive damping rate; the balanced (PT-symmetric)
/// configuration is `gain == loss`. Rates are conventionally normalized so
/// that `gain = 1` and time is the dimensionless `g·t`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SystemConfig {
    pub gain: f64,
    pub loss: f64,
    pub coupling: f64,
    pub squeeze_r: f64,
    pub squeeze_theta: f64,
    pub placement: Placement,
    /// `false` selects the noise-free limit `D = 0`.
    pub noise: bool,
}

impl SystemConfig {
    pub fn new(
        gain: f64,
        loss: f64,
        coupling: f64,
        squeeze_r: f64,
        squeeze_theta: f64,
        placement: Placement,
        noise: bool,
    ) -> Result<Self> {
        let cfg = Self { gain, loss, coupling, squeeze_r, squeeze_theta, placement, noise };
        cfg.validate()?;
        Ok(cfg)
    }

    /// `g = γ = 1`, `θ = π/4`, no squeezing, noise on.
    pub fn balanced(coupling: f64) -> Self {
        Self {
            gain: 1.0,
            loss: 1.0,
            coupling,
            squeeze_r: 0.0,
            squeeze_theta: FRAC_PI_4,
            placement: Placement::None,
            noise: true,
        }
    }

    pub fn with_squeezing(mut self, r: f64, placement: Placement) -> Self {
        self.squeeze_r = r;
        self.placement = placement;
        self
    }

    pub fn with_noise(mut self, noise: bool) -> Self {
        self.noise = noise;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let rates =
            [("gain", self.gain), ("loss", self.loss), ("coupling", self.coupling), ("squeeze_r", self.squeeze_r)];
        for (name, value) in rates {
            if !value.is_finite() {
                return Err(Error::InvalidParameter { name, value, reason: "must be finite" });
            }
            if value < 0.0 {
                return Err(Error::InvalidParameter { name, value, reason: "rates must be non-negative" });
            }
        }
        if !self.squeeze_theta.is_finite() {
            return Err(Error::InvalidParameter {
                name: "squeeze_theta",
                value: self.squeeze_theta,
                reason: "must be finite",
            });
        }
        Ok(())
    }

    /// Divides every rate by the gain so that `g = 1`; times measured in
    /// `g·t` are unchanged. Requires `gain > 0`.
    pub fn normalized(&self) -> Result<Self> {
        if !(self.gain > 0.0) {
            return Err(Error::InvalidParameter {
                name: "gain",
                value: self.gain,
                reason: "normalization needs a positive gain",
            });
        }
        let g = self.gain;
        Ok(Self { gain: 1.0, loss: self.loss / g, coupling: self.coupling / g, squeeze_r: self.squeeze_r / g, ..*self })
    }
}

/// Input coherent amplitudes of the two guides.
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct CoherentInput {
    pub alpha: Complex64,
    pub beta: Complex64,
}

impl CoherentInput {
    pub fn new(alpha: Complex64, beta: Complex64) -> Self {
        Self { alpha, beta }
    }

    pub fn vacuum() -> Self {
        Self::default()
    }

    /// `α = β = 0.6·e^{iπ/4}`, the input used throughout the figures.
    pub fn figure_default() -> Self {
        let a = Complex64::from_polar(0.6, FRAC_PI_4);
        Self { alpha: a, beta: a }
    }
}

/// Drift matrix `M` of the quadrature equations of motion.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DynamicMatrix(pub Mat4);

impl DynamicMatrix {
    pub fn matrix(&self) -> &Mat4 {
        &self.0
    }

    pub fn to_real<T: Real>(&self) -> Mat4<T> {
        self.0.map(T::from_f64)
    }
}

/// Constant diffusion term `D` of the covariance equation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DiffusionMatrix(pub Mat4);

impl DiffusionMatrix {
    pub fn matrix(&self) -> &Mat4 {
        &self.0
    }

    pub fn to_real<T: Real>(&self) -> Mat4<T> {
        self.0.map(T::from_f64)
    }

    pub fn is_zero(&self) -> bool {
        self.0 == Mat4::zeros()
    }
}

/// Mean quadratures and covariance matrix of a two-mode Gaussian state.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GaussianState<T = f64> {
    pub mean: Vec4<T>,
    pub cov: Mat4<T>,
}

impl<T: Real> GaussianState<T> {
    pub fn convert<U: Real>(&self) -> GaussianState<U> {
        GaussianState {
            mean: self.mean.map(|x| U::from_f64(x.to_f64())),
            cov: self.cov.map(|x| U::from_f64(x.to_f64())),
        }
    }

    pub fn to_f64(&self) -> GaussianState<f64> {
        GaussianState { mean: self.mean.map(T::to_f64), cov: self.cov.to_f64() }
    }
}

pub fn build_dynamic_matrix(config: &SystemConfig) -> DynamicMatrix {
    let g = config.gain;
    let gamma = config.loss;
    let j = config.coupling;
    let (rc, rs) = if config.placement == Placement::None {
        (0.0, 0.0)
    } else {
        let r = config.squeeze_r;
        (r * config.squeeze_theta.cos(), r * config.squeeze_theta.sin())
    };
    let mut m = Mat4::from_rows([[g, 0.0, 0.0, j], [0.0, g, -j, 0.0], [0.0, j, -gamma, 0.0], [-j, 0.0, 0.0, -gamma]]);
    if config.placement.squeezes_gain() {
        m[(0, 0)] += rc;
        m[(0, 1)] += rs;
        m[(1, 0)] += rs;
        m[(1, 1)] -= rc;
    }
    if config.placement.squeezes_loss() {
        m[(2, 2)] += rc;
        m[(2, 3)] += rs;
        m[(3, 2)] += rs;
        m[(3, 3)] -= rc;
    }
    DynamicMatrix(m)
}

pub fn build_diffusion_matrix(config: &SystemConfig) -> DiffusionMatrix {
    if !config.noise {
        return DiffusionMatrix(Mat4::zeros());
    }
    let (g, gamma) = (config.gain, config.loss);
    DiffusionMatrix(Mat4::from_diagonal(&[2.0 * g, 2.0 * g, 2.0 * gamma, 2.0 * gamma]))
}

/// Coherent input state: means `√2·(Re α, Im α, Re β, Im β)`, vacuum
/// covariance `I`.
pub fn initial_state(input: &CoherentInput) -> GaussianState {
    GaussianState {
        mean: [SQRT_2 * input.alpha.re, SQRT_2 * input.alpha.im, SQRT_2 * input.beta.re, SQRT_2 * input.beta.im],
        cov: Mat4::identity(),
    }
}
