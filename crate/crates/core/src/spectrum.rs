//! Eigenstructure of the dynamic matrix.
//!
//! At `r = 0` the regime is fixed by comparing `J` with `g`. With squeezing
//! the label is read off the computed spectrum: a defective coalescence is
//! exceptional, unequal real parts mean broken PT symmetry.

use nalgebra::Matrix4;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{build_dynamic_matrix, DynamicMatrix, SystemConfig};

/// Eigenvalues closer than this are treated as one cluster.
pub const COALESCENCE_TOL: f64 = 1e-6;
/// Singular values of `M − λI` below this count towards the geometric multiplicity.
pub const RANK_TOL: f64 = 1e-6;
/// Relative tolerance for `|J − g|` at the analytic exceptional point.
pub const EXCEPTIONAL_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RegimeLabel {
    PTSymmetric,
    Broken,
    Exceptional,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RegimeClass {
    pub label: RegimeLabel,
    pub max_real_part: f64,
    pub oscillation_freq: f64,
}

/// One row of [`exceptional_scan`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScanPoint {
    pub coupling: f64,
    pub min_eig_gap: f64,
    pub max_real_part: f64,
}

fn to_nalgebra(m: &DynamicMatrix) -> Matrix4<f64> {
    Matrix4::from_fn(|i, j| m.0[(i, j)])
}

/// The four eigenvalues of `M`, sorted by real part, then imaginary part.
pub fn eigenvalues(m: &DynamicMatrix) -> [Complex64; 4] {
    let ev = to_nalgebra(m).complex_eigenvalues();
    let mut out = [ev[0], ev[1], ev[2], ev[3]];
    out.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    out
}

#[derive(Clone, Debug)]
struct Cluster {
    center: Complex64,
    size: usize,
}

fn clusters(ev: &[Complex64; 4]) -> Vec<Cluster> {
    // Single linkage; with four points a pairwise union is enough.
    let mut parent: [usize; 4] = [0, 1, 2, 3];
    fn root(p: &mut [usize; 4], mut i: usize) -> usize {
        while p[i] != i {
            i = p[i];
        }
        i
    }
    for i in 0..4 {
        for j in i + 1..4 {
            if (ev[i] - ev[j]).norm() < COALESCENCE_TOL {
                let (a, b) = (root(&mut parent, i), root(&mut parent, j));
                parent[b] = a;
            }
        }
    }
    let mut out: Vec<(usize, Cluster)> = Vec::new();
    for i in 0..4 {
        let r = root(&mut parent, i);
        match out.iter_mut().find(|(k, _)| *k == r) {
            Some((_, c)) => {
                c.center += ev[i];
                c.size += 1;
            }
            None => out.push((r, Cluster { center: ev[i], size: 1 })),
        }
    }
    out.into_iter()
        .map(|(_, mut c)| {
            c.center /= c.size as f64;
            c
        })
        .collect()
}

fn geometric_multiplicity(m: &Matrix4<f64>, lambda: Complex64) -> usize {
    let shifted = m.map(|x| Complex64::new(x, 0.0)) - Matrix4::<Complex64>::identity() * lambda;
    let scale = m.norm().max(1.0);
    shifted.singular_values().iter().filter(|&&s| s < RANK_TOL * scale).count()
}

/// `(min gap, any defective cluster)`. The gap is 0 when a cluster is
/// defective, otherwise the smallest distance between distinct clusters.
fn coalescence(m: &DynamicMatrix) -> (f64, bool) {
    let ev = eigenvalues(m);
    let cl = clusters(&ev);
    let nm = to_nalgebra(m);
    let defective = cl.iter().any(|c| c.size > 1 && geometric_multiplicity(&nm, c.center) < c.size);
    if defective {
        return (0.0, true);
    }
    let mut gap = f64::INFINITY;
    for i in 0..cl.len() {
        for j in i + 1..cl.len() {
            gap = gap.min((cl[i].center - cl[j].center).norm());
        }
    }
    (gap, false)
}

pub fn min_eig_gap(m: &DynamicMatrix) -> f64 {
    coalescence(m).0
}

pub fn classify_regime(config: &SystemConfig) -> RegimeClass {
    let m = build_dynamic_matrix(config);
    let ev = eigenvalues(&m);
    let max_real_part = ev.iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max);
    let min_real_part = ev.iter().map(|z| z.re).fold(f64::INFINITY, f64::min);
    let oscillation_freq = ev.iter().map(|z| z.im.abs()).fold(0.0, f64::max);

    let label = if config.squeeze_r == 0.0 {
        let (g, j) = (config.gain, config.coupling);
        if (j - g).abs() <= EXCEPTIONAL_TOL * g {
            RegimeLabel::Exceptional
        } else if j > g {
            RegimeLabel::PTSymmetric
        } else {
            RegimeLabel::Broken
        }
    } else if coalescence(&m).1 {
        RegimeLabel::Exceptional
    } else if max_real_part - min_real_part > COALESCENCE_TOL * m.0.norm1().max(1.0) {
        RegimeLabel::Broken
    } else {
        RegimeLabel::PTSymmetric
    };
    RegimeClass { label, max_real_part, oscillation_freq }
}

/// Sweeps the coupling over `samples` evenly spaced values in `range`.
pub fn exceptional_scan(template: &SystemConfig, range: (f64, f64), samples: usize) -> Result<Vec<ScanPoint>> {
    let (lo, hi) = range;
    if samples < 2 || !(lo.is_finite() && hi.is_finite()) || lo >= hi || lo < 0.0 {
        return Err(Error::InvalidSettings(format!(
            "coupling scan needs 0 <= lo < hi and at least 2 samples, got [{lo}, {hi}] x {samples}"
        )));
    }
    Ok((0..samples)
        .into_par_iter()
        .map(|k| {
            let coupling = lo + (hi - lo) * k as f64 / (samples - 1) as f64;
            let cfg = SystemConfig { coupling, ..*template };
            let m = build_dynamic_matrix(&cfg);
            let max_real_part = eigenvalues(&m).iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max);
            ScanPoint { coupling, min_eig_gap: min_eig_gap(&m), max_real_part }
        })
        .collect())
}
