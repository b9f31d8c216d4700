//! Quantities extracted from a Gaussian state: output intensities, the
//! `a†b` cross-correlation, logarithmic negativity, the physicality margin
//! and sudden-death detection on entanglement time series.
//!
//! Every function accepts any [`Real`] precision and reports `f64`.

use crate::error::{Error, Result};
use crate::linalg::{Mat4, Mat8};
use crate::model::GaussianState;
use crate::propagator::EvolutionRecord;
use crate::real::Real;
use rayon::prelude::*;

/// `E_N` values below this are reported as exactly zero.
pub const ZERO_ENTANGLEMENT: f64 = 1e-12;

/// Negative square-root arguments beyond this (relative to the natural
/// scale of the argument) mark an input outside the physical set.
const UNPHYSICAL_TOL: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    A,
    B,
}

impl Mode {
    fn offset(self) -> usize {
        match self {
            Mode::A => 0,
            Mode::B => 2,
        }
    }
}

/// `⟨c†c⟩ = (V_qq + V_pp − 2)/4 + (μ_q² + μ_p²)/2`.
///
/// Not clamped: a covariance evolved without noise can fall below the
/// vacuum and give a negative value.
pub fn photon_number<T: Real>(state: &GaussianState<T>, mode: Mode) -> f64 {
    let o = mode.offset();
    let v = &state.cov;
    let mu = &state.mean;
    let quarter = T::from_f64(0.25);
    let half = T::from_f64(0.5);
    let two = T::from_f64(2.0);
    ((v[(o, o)] + v[(o + 1, o + 1)] - two) * quarter + (mu[o] * mu[o] + mu[o + 1] * mu[o + 1]) * half).to_f64()
}

/// `|⟨a†b⟩ − ⟨a†⟩⟨b⟩| = |(V₁₃ + V₂₄) + i(V₁₄ − V₂₃)| / 4`.
pub fn correlation_function<T: Real>(state: &GaussianState<T>) -> f64 {
    let v = &state.cov;
    let re = (v[(0, 2)] + v[(1, 3)]).to_f64();
    let im = (v[(0, 3)] - v[(1, 2)]).to_f64();
    re.hypot(im) / 4.0
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EntanglementReport {
    /// Smallest symplectic eigenvalue of the partially transposed CM.
    pub eta: f64,
    /// `max(0, −ln η)`, with values below [`ZERO_ENTANGLEMENT`] set to 0.
    pub e_n: f64,
    /// `det A + det B − 2 det C`.
    pub sigma: f64,
    pub det_v: f64,
    /// Set when a square-root argument was significantly negative, i.e.
    /// the covariance matrix is far from any physical state.
    pub unphysical: bool,
}

fn det2<T: Real>(v: &Mat4<T>, r: usize, c: usize) -> T {
    v[(r, c)] * v[(r + 1, c + 1)] - v[(r, c + 1)] * v[(r + 1, c)]
}

/// Logarithmic negativity of the two-mode covariance matrix `V = [[A, C], [Cᵀ, B]]`.
pub fn log_negativity<T: Real>(v: &Mat4<T>) -> EntanglementReport {
    let two = T::from_f64(2.0);
    let four = T::from_f64(4.0);
    let sigma = det2(v, 0, 0) + det2(v, 2, 2) - two * det2(v, 0, 2);
    let det_v = v.determinant();

    let sigma_f = sigma.to_f64();
    let mut unphysical = false;

    let scale_disc = T::one().max(sigma * sigma);
    let mut disc = sigma * sigma - four * det_v;
    if disc < T::zero() {
        if disc < -T::from_f64(UNPHYSICAL_TOL) * scale_disc {
            unphysical = true;
        }
        disc = T::zero();
    }
    let root = disc.sqrt();

    // η² = (Σ − √(Σ² − 4 det V))/2. For Σ > 0 the equivalent form
    // 2 det V/(Σ + √…) avoids cancelling two large numbers.
    let mut eta_sq = if sigma > T::zero() { two * det_v / (sigma + root) } else { (sigma - root) / two };
    if eta_sq < T::zero() {
        if eta_sq < -T::from_f64(UNPHYSICAL_TOL) * T::one().max(sigma.abs()) {
            unphysical = true;
        }
        eta_sq = T::zero();
    }
    let eta = eta_sq.sqrt();
    let e_n = if eta >= T::one() {
        0.0
    } else if eta == T::zero() {
        f64::INFINITY
    } else {
        let x = (-eta.ln()).to_f64();
        if x < ZERO_ENTANGLEMENT {
            0.0
        } else {
            x
        }
    };
    EntanglementReport { eta: eta.to_f64(), e_n, sigma: sigma_f, det_v: det_v.to_f64(), unphysical }
}

/// Minimum eigenvalue of the Hermitian matrix `V + iΩ`,
/// `Ω = ⊕ [[0, 1], [−1, 0]]`. Non-negative exactly for physical states.
pub fn physicality_margin<T: Real>(v: &Mat4<T>) -> f64 {
    // Real embedding of A + iB: [[A, −B], [B, A]], each eigenvalue doubled.
    let omega = symplectic_form::<T>();
    let real = Mat8::from_fn(|i, j| match (i < 4, j < 4) {
        (true, true) => v[(i, j)],
        (true, false) => -omega[(i, j - 4)],
        (false, true) => omega[(i - 4, j)],
        (false, false) => v[(i - 4, j - 4)],
    });
    real.symmetric_eigenvalues()[0].to_f64()
}

pub fn symplectic_form<T: Real>() -> Mat4<T> {
    let (o, l) = (T::zero(), T::one());
    Mat4::from_rows([[o, l, o, o], [-l, o, o, o], [o, o, o, l], [o, o, -l, o]])
}

/// Everything plotted for one state.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Observation {
    pub time: f64,
    pub intensity_a: f64,
    pub intensity_b: f64,
    pub correlation: f64,
    pub entanglement: EntanglementReport,
    pub margin: f64,
}

pub fn observe<T: Real>(time: f64, state: &GaussianState<T>) -> Observation {
    Observation {
        time,
        intensity_a: photon_number(state, Mode::A),
        intensity_b: photon_number(state, Mode::B),
        correlation: correlation_function(state),
        entanglement: log_negativity(&state.cov),
        margin: physicality_margin(&state.cov),
    }
}

/// [`observe`] over a whole series, in parallel, keeping the order.
pub fn observe_series<T: Real>(records: &[EvolutionRecord<T>]) -> Vec<Observation> {
    records.par_iter().map(|r| observe(r.time, &r.state)).collect()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EsdReport {
    pub peak_value: f64,
    pub peak_time: f64,
    /// First time with `E_N > 0`.
    pub birth_time: Option<f64>,
    /// First time after the peak where `E_N` returns to 0.
    pub death_time: Option<f64>,
}

/// Bisection resolution for birth/death times, in `g·t`.
pub const ESD_TIME_TOL: f64 = 1e-6;

fn bisect_threshold(mut off: f64, mut on: f64, evaluate: &dyn Fn(f64) -> f64) -> f64 {
    // Invariant: E_N(off) ≤ ε < E_N(on); returns the boundary on the `on` side.
    while (on - off).abs() > ESD_TIME_TOL {
        let mid = 0.5 * (off + on);
        if evaluate(mid) > ZERO_ENTANGLEMENT {
            on = mid;
        } else {
            off = mid;
        }
    }
    0.5 * (off + on)
}

/// Peak, birth and sudden-death times of an entanglement series sorted by
/// time. With `refine`, the crossings found on the grid are bisected on the
/// underlying evaluator down to [`ESD_TIME_TOL`].
pub fn detect_esd(series: &[(f64, f64)], refine: Option<&dyn Fn(f64) -> f64>) -> Result<EsdReport> {
    let (&(t0, _), _) = series.split_first().ok_or(Error::EmptySeries)?;
    let on = |e: f64| e > ZERO_ENTANGLEMENT;

    let (mut peak_idx, mut peak_value) = (0, series[0].1);
    for (i, &(_, e)) in series.iter().enumerate() {
        if e > peak_value {
            peak_idx = i;
            peak_value = e;
        }
    }
    if !on(peak_value) {
        return Ok(EsdReport { peak_value: 0.0, peak_time: t0, birth_time: None, death_time: None });
    }
    let peak_time = series[peak_idx].0;

    let birth_idx = series.iter().position(|&(_, e)| on(e)).expect("peak is positive");
    let birth_time = if birth_idx == 0 {
        t0
    } else {
        let (off_t, on_t) = (series[birth_idx - 1].0, series[birth_idx].0);
        match refine {
            Some(f) => bisect_threshold(off_t, on_t, f),
            None => on_t,
        }
    };

    let death_time = series[peak_idx..].iter().position(|&(_, e)| !on(e)).map(|k| {
        let idx = peak_idx + k;
        let (on_t, off_t) = (series[idx - 1].0, series[idx].0);
        match refine {
            Some(f) => bisect_threshold(off_t, on_t, f),
            None => off_t,
        }
    });

    Ok(EsdReport { peak_value, peak_time, birth_time: Some(birth_time), death_time })
}
