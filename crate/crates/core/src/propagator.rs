//! Time evolution of the Gaussian state.
//!
//! The mean follows `μ(t) = e^{Mt} μ₀` (the reservoir drive has zero mean).
//! The covariance is
//!
//! ```text
//! V(t) = e^{Mt} V₀ e^{Mᵀt} + ∫₀ᵗ e^{M(t−s)} D e^{Mᵀ(t−s)} ds
//! ```
//!
//! evaluated in closed form from one exponential of the augmented block
//! matrix `[[M, D], [0, −Mᵀ]]`: its upper blocks are `F = e^{Mt}` and `G`
//! with `G Fᵀ` equal to the noise integral. A fixed-step RK4 integrator of
//! `dV/dt = MV + VMᵀ + D` is provided as an independent oracle.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::{Mat4, Mat8, Vec4};
use crate::model::{
    build_diffusion_matrix, build_dynamic_matrix, initial_state, CoherentInput, GaussianState, SystemConfig,
};
use crate::real::Real;

/// Uniform grid `t_k = k·t_max/steps`, `k = 0..=steps`, in units of `g·t`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TimeGrid {
    t_max: f64,
    steps: usize,
}

impl TimeGrid {
    pub fn new(t_max: f64, steps: usize) -> Result<Self> {
        if !(t_max > 0.0 && t_max.is_finite()) || steps == 0 {
            return Err(Error::InvalidGrid { t_max, steps });
        }
        Ok(Self { t_max, steps })
    }

    pub fn t_max(&self) -> f64 {
        self.t_max
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn step(&self) -> f64 {
        self.t_max / self.steps as f64
    }

    pub fn time(&self, k: usize) -> f64 {
        if k == self.steps {
            self.t_max
        } else {
            k as f64 * self.step()
        }
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..=self.steps).map(|k| self.time(k))
    }
}

impl Default for TimeGrid {
    /// 2000 steps over `g·t ∈ [0, 8]`.
    fn default() -> Self {
        Self { t_max: 8.0, steps: 2000 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EvolutionRecord<T = f64> {
    pub time: f64,
    pub state: GaussianState<T>,
}

pub fn matrix_exp<T: Real>(m: &Mat4<T>, t: f64) -> Mat4<T> {
    m.scale(T::from_f64(t)).exp()
}

pub fn evolve_mean<T: Real>(m: &Mat4<T>, mean0: &Vec4<T>, t: f64) -> Vec4<T> {
    matrix_exp(m, t).mul_vec(mean0)
}

/// One-step propagator of the covariance equation over a time `t`:
/// `V ↦ F V Fᵀ + W`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CovarianceStep<T> {
    /// `e^{Mt}`.
    pub transfer: Mat4<T>,
    /// Noise integral `∫₀ᵗ e^{Ms} D e^{Mᵀs} ds`.
    pub noise: Mat4<T>,
}

impl<T: Real> CovarianceStep<T> {
    pub fn new(m: &Mat4<T>, d: &Mat4<T>, t: f64) -> Self {
        let tt = T::from_f64(t);
        let aug = Mat8::from_fn(|i, j| match (i < 4, j < 4) {
            (true, true) => m[(i, j)] * tt,
            (true, false) => d[(i, j - 4)] * tt,
            (false, true) => T::zero(),
            (false, false) => -m[(j - 4, i - 4)] * tt,
        });
        let e = aug.exp();
        let transfer = Mat4::from_fn(|i, j| e[(i, j)]);
        let g = Mat4::from_fn(|i, j| e[(i, j + 4)]);
        let noise = (g * transfer.transpose()).symmetrized();
        Self { transfer, noise }
    }

    pub fn apply(&self, v: &Mat4<T>) -> Mat4<T> {
        (self.transfer.congruence(v) + self.noise).symmetrized()
    }

    pub fn apply_mean(&self, mean: &Vec4<T>) -> Vec4<T> {
        self.transfer.mul_vec(mean)
    }
}

pub fn evolve_covariance<T: Real>(m: &Mat4<T>, d: &Mat4<T>, v0: &Mat4<T>, t: f64) -> Mat4<T> {
    CovarianceStep::new(m, d, t).apply(v0)
}

fn lyapunov_rhs<T: Real>(m: &Mat4<T>, mt: &Mat4<T>, d: &Mat4<T>, v: &Mat4<T>) -> Mat4<T> {
    *m * *v + *v * *mt + *d
}

/// Classic fixed-step RK4 for `dV/dt = MV + VMᵀ + D`; returns `V` at every
/// grid time including `t = 0`.
pub fn evolve_covariance_ode<T: Real>(m: &Mat4<T>, d: &Mat4<T>, v0: &Mat4<T>, grid: &TimeGrid) -> Vec<Mat4<T>> {
    let h = T::from_f64(grid.step());
    let half = T::from_f64(0.5);
    let sixth = T::one() / T::from_f64(6.0);
    let two = T::from_f64(2.0);
    let mt = m.transpose();
    let mut v = *v0;
    let mut out = Vec::with_capacity(grid.steps() + 1);
    out.push(v);
    for _ in 0..grid.steps() {
        let k1 = lyapunov_rhs(m, &mt, d, &v);
        let k2 = lyapunov_rhs(m, &mt, d, &(v + k1.scale(h * half)));
        let k3 = lyapunov_rhs(m, &mt, d, &(v + k2.scale(h * half)));
        let k4 = lyapunov_rhs(m, &mt, d, &(v + k3.scale(h)));
        v = v + (k1 + k2.scale(two) + k3.scale(two) + k4).scale(h * sixth);
        out.push(v);
    }
    out
}

/// State at a single time, evaluated directly (no stepping).
pub fn state_at<T: Real>(config: &SystemConfig, input: &CoherentInput, t: f64) -> GaussianState<T> {
    let m = build_dynamic_matrix(config).to_real::<T>();
    let d = build_diffusion_matrix(config).to_real::<T>();
    let s0 = initial_state(input).convert::<T>();
    let step = CovarianceStep::new(&m, &d, t);
    GaussianState { mean: step.apply_mean(&s0.mean), cov: step.apply(&s0.cov) }
}

/// States at every grid time.
///
/// The one-step propagator for `h = t_max/steps` is computed once from the
/// augmented exponential and composed exactly: `V(t + h) = F V(t) Fᵀ + W`.
/// With `steps = 1` this is the single-call result.
pub fn evolve_series<T: Real>(
    config: &SystemConfig,
    input: &CoherentInput,
    grid: &TimeGrid,
) -> Result<Vec<EvolutionRecord<T>>> {
    config.validate()?;
    let m = build_dynamic_matrix(config).to_real::<T>();
    let d = build_diffusion_matrix(config).to_real::<T>();
    let s0 = initial_state(input).convert::<T>();
    let step = CovarianceStep::new(&m, &d, grid.step());
    let mut state = s0;
    let mut out = Vec::with_capacity(grid.steps() + 1);
    out.push(EvolutionRecord { time: 0.0, state });
    for k in 1..=grid.steps() {
        state = GaussianState { mean: step.apply_mean(&state.mean), cov: step.apply(&state.cov) };
        check_finite(&state, grid.time(k))?;
        out.push(EvolutionRecord { time: grid.time(k), state });
    }
    Ok(out)
}

/// Fails once any moment no longer fits in an `f64`, which is how results
/// are reported. For the bare broken dimer at `J = 0.7g` that is past
/// `g·t ≈ 490`; squeezing moves the limit much earlier.
fn check_finite<T: Real>(state: &GaussianState<T>, time: f64) -> Result<()> {
    let big = state.cov.norm1().to_f64().max(state.mean.iter().fold(0.0, |a, x| a.max(x.abs().to_f64())));
    if big.is_finite() {
        Ok(())
    } else {
        Err(Error::Overflow(format!("moments exceed the f64 range at g·t = {time}")))
    }
}

/// Same contract as [`evolve_series`], but every grid point is evaluated
/// independently from `t = 0` and in parallel.
pub fn evolve_series_direct<T: Real>(
    config: &SystemConfig,
    input: &CoherentInput,
    grid: &TimeGrid,
) -> Result<Vec<EvolutionRecord<T>>> {
    config.validate()?;
    (0..=grid.steps())
        .into_par_iter()
        .map(|k| {
            let t = grid.time(k);
            let state = state_at(config, input, t);
            check_finite(&state, t)?;
            Ok(EvolutionRecord { time: t, state })
        })
        .collect()
}
