//! Monte Carlo cross-check of the covariance dynamics.
//!
//! The quantum noise is not a classical process, but the system is linear:
//! its first and second symmetrized moments are reproduced exactly by the
//! classical Ornstein–Uhlenbeck process `dX = M X dt + dW` with
//! `⟨dW dWᵀ⟩ = (D/2) dt`, started from `X(0) ~ N(μ₀, I/2)`. Since a Gaussian
//! state is fully determined by those moments, `2·Cov[X(t)]` must converge
//! to the closed-form `V(t)`.
//!
//! Each trajectory draws from its own PCG stream selected by its index, and
//! the moments are reduced in trajectory order, so a seed fixes the output
//! bit for bit whatever the thread schedule.

use rand_distr::{Distribution, StandardNormal};
use rand_pcg::Pcg64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::{Mat4, Vec4};
use crate::model::{
    build_diffusion_matrix, build_dynamic_matrix, initial_state, CoherentInput, GaussianState, SystemConfig,
};

/// Largest accepted `‖M‖₁·dt`.
pub const STABILITY_LIMIT: f64 = 0.1;

/// One-step discretization of the linear SDE.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum McScheme {
    /// Fourth-order Taylor transfer matrix with a noise increment whose
    /// covariance matches the exact one-step value to `O(dt⁶)`. Still a
    /// single Gaussian draw per step.
    #[default]
    LinearTaylor,
    /// `X ← X + M X dt + √(dt) (D/2)^{1/2} ξ`. Has an `O(dt)` bias in the
    /// covariance that grows with `e^{2λt}` in unstable configurations.
    EulerMaruyama,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct McSettings {
    pub n_traj: usize,
    pub dt: f64,
    pub seed: u64,
    pub scheme: McScheme,
}

impl McSettings {
    pub fn new(n_traj: usize, dt: f64, seed: u64) -> Self {
        Self { n_traj, dt, seed, scheme: McScheme::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_traj < 2 {
            return Err(Error::InvalidSettings(format!(
                "n_traj = {} (at least 2 trajectories are needed for a sample covariance)",
                self.n_traj
            )));
        }
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::InvalidSettings(format!("dt = {} must be positive", self.dt)));
        }
        Ok(())
    }
}

/// Sample moments at one observation time.
#[derive(Clone, Debug, PartialEq)]
pub struct McEstimate {
    pub time: f64,
    pub mean_est: Vec4,
    /// Twice the unbiased sample covariance.
    pub cov_est: Mat4,
    /// Standard error of each `cov_est` entry, from fourth central moments.
    pub stderr: Mat4,
    pub mean_stderr: Vec4,
}

impl McEstimate {
    /// `(exceedances, total)` over the ten independent covariance entries
    /// whose deviation from `reference` exceeds `k` standard errors.
    pub fn exceedances(&self, reference: &Mat4, k: f64) -> (usize, usize) {
        let mut over = 0;
        let mut total = 0;
        for i in 0..4 {
            for j in i..4 {
                total += 1;
                if (self.cov_est[(i, j)] - reference[(i, j)]).abs() > k * self.stderr[(i, j)] {
                    over += 1;
                }
            }
        }
        (over, total)
    }

    /// Largest `|cov_est − reference| / stderr` over all entries.
    pub fn max_z_score(&self, reference: &Mat4) -> f64 {
        let mut z: f64 = 0.0;
        for i in 0..4 {
            for j in i..4 {
                let dev = (self.cov_est[(i, j)] - reference[(i, j)]).abs();
                let se = self.stderr[(i, j)];
                z = z.max(if se > 0.0 {
                    dev / se
                } else if dev > 0.0 {
                    f64::INFINITY
                } else {
                    0.0
                });
            }
        }
        z
    }
}

/// Mean, doubled unbiased covariance and standard errors of a sample of
/// quadrature vectors. Needs at least two samples.
pub fn sample_moments(time: f64, samples: &[Vec4]) -> McEstimate {
    let n = samples.len();
    assert!(n >= 2, "sample_moments needs at least two samples");
    let nf = n as f64;
    let mut mean = [0.0; 4];
    for x in samples {
        for i in 0..4 {
            mean[i] += x[i];
        }
    }
    for m in &mut mean {
        *m /= nf;
    }

    let mut m2: Mat4 = Mat4::zeros();
    let mut m4: Mat4 = Mat4::zeros();
    for x in samples {
        let d = [x[0] - mean[0], x[1] - mean[1], x[2] - mean[2], x[3] - mean[3]];
        for i in 0..4 {
            for j in i..4 {
                let p = d[i] * d[j];
                m2[(i, j)] += p;
                m4[(i, j)] += p * p;
            }
        }
    }

    let mut cov_est: Mat4 = Mat4::zeros();
    let mut stderr: Mat4 = Mat4::zeros();
    for i in 0..4 {
        for j in i..4 {
            let s = m2[(i, j)] / (nf - 1.0);
            let biased = m2[(i, j)] / nf;
            let var = (m4[(i, j)] / nf - biased * biased).max(0.0) / nf;
            cov_est[(i, j)] = 2.0 * s;
            cov_est[(j, i)] = 2.0 * s;
            stderr[(i, j)] = 2.0 * var.sqrt();
            stderr[(j, i)] = 2.0 * var.sqrt();
        }
    }
    let mean_stderr = [0, 1, 2, 3].map(|i| (m2[(i, i)] / (nf - 1.0) / nf).sqrt());
    McEstimate { time, mean_est: mean, cov_est, stderr, mean_stderr }
}

/// Transfer matrix and noise factor for one step of length `h`.
#[derive(Clone, Copy, Debug)]
struct Step {
    transfer: Mat4,
    /// Lower Cholesky factor of the increment covariance.
    noise: Mat4,
    noisy: bool,
}

impl Step {
    fn new(m: &Mat4, d: &Mat4, h: f64, scheme: McScheme) -> Self {
        let (transfer, q) = match scheme {
            McScheme::EulerMaruyama => (Mat4::identity() + m.scale(h), d.scale(h)),
            McScheme::LinearTaylor => {
                let mh = m.scale(h);
                let mut transfer = Mat4::identity();
                let mut term = Mat4::identity();
                for k in 1..=4 {
                    term = (term * mh).scale(1.0 / k as f64);
                    transfer = transfer + term;
                }
                // ∫₀ʰ e^{Ms} D e^{Mᵀs} ds = Σ hⁿ/n! Lⁿ⁻¹(D), L(X) = MX + XMᵀ.
                let mut q = Mat4::zeros();
                let mut lk = *d;
                let mut coef = 1.0;
                for n in 1..=5 {
                    coef *= h / n as f64;
                    q = q + lk.scale(coef);
                    lk = *m * lk + lk * m.transpose();
                }
                (transfer, q.symmetrized())
            }
        };
        let noise = q.scale(0.5).cholesky_semidefinite(1e-14);
        let noisy = noise.rows().iter().flatten().any(|&x| x != 0.0);
        Self { transfer, noise, noisy }
    }

    #[inline]
    fn advance(&self, x: &mut Vec4, rng: &mut Pcg64) {
        let mut next = self.transfer.mul_vec(x);
        if self.noisy {
            let z: Vec4 = std::array::from_fn(|_| StandardNormal.sample(rng));
            let w = self.noise.mul_vec(&z);
            for i in 0..4 {
                next[i] += w[i];
            }
        }
        *x = next;
    }
}

/// Steps between consecutive observation times: `n` uniform steps of
/// length `h ≤ dt` covering each interval.
fn schedule(times: &[f64], dt: f64) -> Vec<(usize, f64)> {
    let mut prev = 0.0;
    times
        .iter()
        .map(|&t| {
            let span = t - prev;
            prev = t;
            if span <= 0.0 {
                return (0, 0.0);
            }
            let n = ((span / dt) * (1.0 - 1e-12)).ceil().max(1.0) as usize;
            (n, span / n as f64)
        })
        .collect()
}

fn stream_state(seed: u64) -> u128 {
    // Spread the seed over both halves so nearby seeds give unrelated states.
    let hi = seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ 0xD1B5_4A32_D192_ED03;
    ((hi as u128) << 64) | seed as u128
}

/// Integrates `settings.n_traj` trajectories and returns the sample moments
/// at each requested time (non-decreasing, `≥ 0`).
pub fn sample_trajectories(
    config: &SystemConfig,
    input: &CoherentInput,
    times: &[f64],
    settings: &McSettings,
) -> Result<Vec<McEstimate>> {
    config.validate()?;
    settings.validate()?;
    if times.iter().any(|t| !t.is_finite() || *t < 0.0) || times.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::InvalidSettings(format!("observation times must be finite, >= 0 and sorted: {times:?}")));
    }
    let m = build_dynamic_matrix(config).0;
    let d = build_diffusion_matrix(config).0;
    let norm = m.norm1();
    let product = norm * settings.dt;
    if product > STABILITY_LIMIT {
        return Err(Error::StepTooLarge { dt: settings.dt, norm, product });
    }

    let plan: Vec<(usize, Step)> =
        schedule(times, settings.dt).into_iter().map(|(n, h)| (n, Step::new(&m, &d, h, settings.scheme))).collect();
    let mu0 = initial_state(input).mean;
    let state = stream_state(settings.seed);
    let half_root = std::f64::consts::FRAC_1_SQRT_2;

    let snapshots: Vec<Vec<Vec4>> = (0..settings.n_traj)
        .into_par_iter()
        .map(|k| {
            let mut rng = Pcg64::new(state, k as u128);
            let mut x: Vec4 = std::array::from_fn(|i| {
                let z: f64 = StandardNormal.sample(&mut rng);
                mu0[i] + half_root * z
            });
            plan.iter()
                .map(|(n, step)| {
                    for _ in 0..*n {
                        step.advance(&mut x, &mut rng);
                    }
                    x
                })
                .collect()
        })
        .collect();

    Ok(times
        .iter()
        .enumerate()
        .map(|(j, &t)| {
            let column: Vec<Vec4> = snapshots.iter().map(|s| s[j]).collect();
            sample_moments(t, &column)
        })
        .collect())
}

/// Closed-form reference states at the same times.
pub fn reference_states(config: &SystemConfig, input: &CoherentInput, times: &[f64]) -> Vec<GaussianState> {
    times.iter().map(|&t| crate::propagator::state_at::<f64>(config, input, t)).collect()
}
