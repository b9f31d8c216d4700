//! Acceptance suite: one line per criterion, non-zero exit if any fails.
//!
//! Runs with `cargo test -p cvpt-core --test acceptance`. The Monte Carlo
//! criterion integrates 4·10⁶ trajectories and dominates the run time.

use std::f64::consts::FRAC_PI_4;
use std::io::Write;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Instant;

use cvpt_core::linalg::relative_frobenius;
use cvpt_core::propagator::evolve_series_direct;
use cvpt_core::{
    build_diffusion_matrix, build_dynamic_matrix, correlation_function, detect_esd, evolve_covariance_ode,
    evolve_series, exceptional_scan, initial_state, log_negativity, matrix_exp, observe_series, photon_number,
    sample_trajectories, state_at, CoherentInput, Extended, Mat4, McSettings, Mode, Observation, Placement,
    SystemConfig, TimeGrid,
};

// Pinned tolerances.
const ORACLE_REL_FROBENIUS: f64 = 1e-8;
const ORACLE_T_MAX: f64 = 6.0;
const RK4_STEP: f64 = 1e-3;
const MC_TRAJECTORIES: usize = 100_000;
const MC_DT: f64 = 1e-3;
const MC_TIMES: [f64; 3] = [1.0, 2.0, 4.0];
const MC_SEEDS: u64 = 20;
const MC_SIGMAS: f64 = 3.0;
const MC_MAX_EXCEEDANCE: f64 = 0.05;
const ETA_SEPARABLE: f64 = 1.0 - 1e-12;
const EARLY_TIME: f64 = 0.1;
const GROWTH_WINDOW_START: f64 = 0.5;
const ORDER_TOL: f64 = 1e-10;
const AMPLITUDE_TOL: f64 = 1e-12;
const MARGIN_FLOOR: f64 = -1e-9;
const MARGIN_VIOLATION: f64 = -1e-3;
const EP_LOCATION_TOL: f64 = 0.01;
const EP_EXP_TOL: f64 = 1e-8;
const CORRELATION_FLOOR: f64 = 0.1;

const FIGURE_T_MAX: f64 = 8.0;
const FIGURE_STEPS: usize = 2000;

fn figure_grid() -> TimeGrid {
    TimeGrid::new(FIGURE_T_MAX, FIGURE_STEPS).unwrap()
}

fn config(placement: Placement, j: f64, r: f64, noise: bool) -> SystemConfig {
    SystemConfig {
        squeeze_theta: FRAC_PI_4,
        ..SystemConfig::balanced(j).with_squeezing(r, placement).with_noise(noise)
    }
}

fn observations(cfg: &SystemConfig, input: &CoherentInput) -> Vec<Observation> {
    observe_series(&evolve_series::<Extended>(cfg, input, &figure_grid()).unwrap())
}

fn e_n_series(obs: &[Observation]) -> Vec<(f64, f64)> {
    obs.iter().map(|o| (o.time, o.entanglement.e_n)).collect()
}

fn interior_maxima(obs: &[Observation]) -> usize {
    obs.windows(3)
        .filter(|w| w[1].entanglement.e_n > w[0].entanglement.e_n && w[1].entanglement.e_n >= w[2].entanglement.e_n)
        .count()
}

fn min_margin(obs: &[Observation]) -> f64 {
    obs.iter().map(|o| o.margin).fold(f64::INFINITY, f64::min)
}

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn c1_oracle_equivalence() -> Outcome {
    let combos = [(0.7, true), (1.9, true), (0.7, false), (1.9, false)];
    let steps = (ORACLE_T_MAX / RK4_STEP).round() as usize;
    let grid = TimeGrid::new(ORACLE_T_MAX, steps).unwrap();
    let input = CoherentInput::figure_default();
    let mut worst = (0.0, String::new());
    let mut k = 0;
    for placement in Placement::ALL {
        for r in [0.0, 1.0, 3.0] {
            let (j, noise) = combos[k % combos.len()];
            k += 1;
            let cfg = config(placement, j, r, noise);
            let m = build_dynamic_matrix(&cfg).0;
            let d = build_diffusion_matrix(&cfg).0;
            let ode = evolve_covariance_ode(&m, &d, &initial_state(&input).cov, &grid);
            let closed = evolve_series_direct::<f64>(&cfg, &input, &grid).unwrap();
            for (v, rec) in ode.iter().zip(&closed) {
                let err = relative_frobenius(v, &rec.state.cov);
                if err > worst.0 {
                    worst = (err, format!("{placement} J={j} r={r} noise={noise} t={:.3}", rec.time));
                }
            }
        }
    }
    outcome(
        worst.0 <= ORACLE_REL_FROBENIUS,
        format!("12 configs, max rel. Frobenius {:.3e} (tol {ORACLE_REL_FROBENIUS:e}) at {}", worst.0, worst.1),
    )
}

fn c2_monte_carlo() -> Outcome {
    let input = CoherentInput::figure_default();
    let scenarios =
        [("5c", config(Placement::GainGuide, 0.7, 3.0, true)), ("6b", config(Placement::Both, 1.9, 2.7, true))];
    let mut parts = Vec::new();
    let mut pass = true;
    for (name, cfg) in scenarios {
        let reference: Vec<Mat4> =
            MC_TIMES.iter().map(|&t| state_at::<Extended>(&cfg, &input, t).cov.to_f64()).collect();
        let (mut over, mut total, mut worst_seed) = (0, 0, 0);
        for seed in 0..MC_SEEDS {
            let est =
                sample_trajectories(&cfg, &input, &MC_TIMES, &McSettings::new(MC_TRAJECTORIES, MC_DT, seed)).unwrap();
            let mut seed_over = 0;
            for (e, v) in est.iter().zip(&reference) {
                let (o, t) = e.exceedances(v, MC_SIGMAS);
                seed_over += o;
                total += t;
            }
            over += seed_over;
            worst_seed = worst_seed.max(seed_over);
        }
        let fraction = over as f64 / total as f64;
        pass &= fraction <= MC_MAX_EXCEEDANCE;
        parts.push(format!("fig{name}: {over}/{total} = {:.2}% beyond 3σ (worst seed {worst_seed})", 100.0 * fraction));
    }
    outcome(pass, format!("{} (limit {:.0}%)", parts.join("; "), 100.0 * MC_MAX_EXCEEDANCE))
}

struct Cache {
    loss_noisy: Vec<((f64, f64), Vec<Observation>)>,
    loss_bare: Vec<((f64, f64), Vec<Observation>)>,
    gain_noisy: Vec<((f64, f64), Vec<Observation>)>,
    both_noisy: Vec<((f64, f64), Vec<Observation>)>,
    bare_other: Vec<Vec<Observation>>,
}

fn build_cache() -> Cache {
    let input = CoherentInput::figure_default();
    let sweep = |placement, js: &[f64], rs: &[f64], noise| {
        let mut out = Vec::new();
        for &j in js {
            for &r in rs {
                out.push(((j, r), observations(&config(placement, j, r, noise), &input)));
            }
        }
        out
    };
    let js = [0.7, 1.9];
    let gain_r = [2.5, 3.0, 3.5];
    let both_r = [1.7, 2.0, 2.7];
    let mut bare_other: Vec<Vec<Observation>> =
        sweep(Placement::GainGuide, &js, &gain_r, false).into_iter().map(|(_, o)| o).collect();
    bare_other.extend(sweep(Placement::Both, &js, &both_r, false).into_iter().map(|(_, o)| o));
    Cache {
        loss_noisy: sweep(Placement::LossGuide, &js, &[0.1, 0.7, 1.3], true),
        loss_bare: sweep(Placement::LossGuide, &js, &[0.1, 0.7, 1.3], false),
        gain_noisy: sweep(Placement::GainGuide, &js, &gain_r, true),
        both_noisy: sweep(Placement::Both, &js, &both_r, true),
        bare_other,
    }
}

fn c3_loss_guide_separable(c: &Cache) -> Outcome {
    let mut min_eta = f64::INFINITY;
    for (_, obs) in &c.loss_noisy {
        for o in obs {
            min_eta = min_eta.min(o.entanglement.eta);
        }
    }
    outcome(min_eta >= ETA_SEPARABLE, format!("6 configs x 2001 points, min η = {min_eta:.15} (need ≥ 1 − 1e-12)"))
}

fn c4_noise_free_loss_guide(c: &Cache) -> Outcome {
    let mut failures = Vec::new();
    for ((j, r), obs) in &c.loss_bare {
        if let Some(o) = obs.iter().find(|o| o.time > EARLY_TIME && o.entanglement.e_n <= 0.0) {
            failures.push(format!("J={j} r={r}: E_N_h = 0 at t={:.3}", o.time));
        }
        if *j == 1.9 {
            let n = interior_maxima(obs);
            if n < 2 {
                failures.push(format!("J=1.9 r={r}: {n} interior maxima"));
            }
        } else {
            let window: Vec<&Observation> = obs.iter().filter(|o| o.time >= GROWTH_WINDOW_START).collect();
            if let Some(w) = window.windows(2).find(|w| w[1].entanglement.e_n < w[0].entanglement.e_n - ORDER_TOL) {
                failures.push(format!("J=0.7 r={r}: decreases at t={:.3}", w[1].time));
            }
        }
    }
    for j in [0.7, 1.9] {
        let curves: Vec<&Vec<Observation>> =
            c.loss_bare.iter().filter(|((jj, _), _)| *jj == j).map(|(_, o)| o).collect();
        let mut violations = 0;
        let mut worst = (0.0, 0.0);
        for k in 0..curves[0].len() {
            let e: Vec<f64> = curves.iter().map(|o| o[k].entanglement.e_n).collect();
            let deficit = (e[0] - e[1]).max(e[1] - e[2]);
            if deficit > ORDER_TOL {
                violations += 1;
                if deficit > worst.0 {
                    worst = (deficit, curves[0][k].time);
                }
            }
        }
        if violations > 0 {
            failures.push(format!(
                "J={j}: r-ordering 1.3 ≥ 0.7 ≥ 0.1 violated at {violations} points (worst deficit {:.3e} at t={:.3})",
                worst.0, worst.1
            ));
        }
    }
    let pass = failures.is_empty();
    outcome(pass, if pass { "positivity, oscillation, growth and r-ordering hold".into() } else { failures.join("; ") })
}

fn esd_of(cfg: &SystemConfig, obs: &[Observation]) -> cvpt_core::EsdReport {
    let input = CoherentInput::figure_default();
    let evaluate = |t: f64| log_negativity(&state_at::<Extended>(cfg, &input, t).cov).e_n;
    detect_esd(&e_n_series(obs), Some(&evaluate)).unwrap()
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map_or("none".into(), |t| format!("{t:.4}"))
}

fn c5_gain_guide_esd(c: &Cache) -> Outcome {
    let mut failures = Vec::new();
    let mut summary = Vec::new();
    for j in [0.7, 1.9] {
        let mut peaks = Vec::new();
        for ((jj, r), obs) in c.gain_noisy.iter().filter(|((jj, _), _)| *jj == j) {
            let esd = esd_of(&config(Placement::GainGuide, *jj, *r, true), obs);
            summary.push(format!("J={j} r={r}: peak {:.4} death {}", esd.peak_value, fmt_opt(esd.death_time)));
            if esd.peak_value <= 0.0 {
                failures.push(format!("J={j} r={r}: never entangled"));
            }
            match esd.death_time {
                Some(t) if t > 0.0 && t <= FIGURE_T_MAX => {}
                other => failures.push(format!("J={j} r={r}: death time {}", fmt_opt(other))),
            }
            peaks.push(esd.peak_value);
        }
        if !peaks.windows(2).all(|w| w[1] > w[0]) {
            failures.push(format!("J={j}: peaks not increasing in r {peaks:?}"));
        }
    }
    let pass = failures.is_empty();
    outcome(pass, if pass { summary.join("; ") } else { format!("{} [{}]", failures.join("; "), summary.join("; ")) })
}

fn c6_both_guides(c: &Cache) -> Outcome {
    let mut failures = Vec::new();
    let mut summary = Vec::new();
    for ((j, r), obs) in &c.both_noisy {
        if *j == 0.7 {
            let max = obs.iter().map(|o| o.entanglement.e_n).fold(0.0, f64::max);
            if max != 0.0 {
                failures.push(format!("J=0.7 r={r}: max E_N {max:.3e}"));
            }
        } else {
            let esd = esd_of(&config(Placement::Both, *j, *r, true), obs);
            summary.push(format!(
                "r={r}: birth {} peak {:.4} death {}",
                fmt_opt(esd.birth_time),
                esd.peak_value,
                fmt_opt(esd.death_time)
            ));
            let ok = esd.birth_time.is_some_and(|t| t > 0.0)
                && esd.peak_value > 0.0
                && esd.death_time.is_some_and(|t| t <= FIGURE_T_MAX);
            if !ok {
                failures.push(format!("J=1.9 r={r}: ESD pattern missing"));
            }
        }
    }
    let pass = failures.is_empty();
    let detail = format!("J=0.7 separable; J=1.9 {}", summary.join("; "));
    outcome(pass, if pass { detail } else { format!("{} [{detail}]", failures.join("; ")) })
}

fn c7_amplitude_irrelevance() -> Outcome {
    let cfg = config(Placement::GainGuide, 1.9, 3.0, true);
    let vac = observations(&cfg, &CoherentInput::vacuum());
    let coh = observations(&cfg, &CoherentInput::figure_default());
    let worst = vac.iter().zip(&coh).map(|(a, b)| (a.entanglement.e_n - b.entanglement.e_n).abs()).fold(0.0, f64::max);
    outcome(worst <= AMPLITUDE_TOL, format!("fig5d, max |ΔE_N| = {worst:.3e} (tol {AMPLITUDE_TOL:e})"))
}

fn c8_physicality(c: &Cache) -> Outcome {
    let noisy = c.loss_noisy.iter().chain(&c.gain_noisy).chain(&c.both_noisy).map(|(_, o)| o);
    let floor = noisy.map(|o| min_margin(o)).fold(f64::INFINITY, f64::min);
    let bare: Vec<f64> = c
        .loss_bare
        .iter()
        .map(|(_, o)| o)
        .chain(&c.bare_other)
        .map(|o| o.iter().filter(|x| x.time > 0.0).map(|x| x.margin).fold(f64::INFINITY, f64::min))
        .collect();
    let least_violation = bare.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let pass = floor >= MARGIN_FLOOR && least_violation < MARGIN_VIOLATION;
    outcome(
        pass,
        format!(
            "noise on: min margin {floor:.3e} (floor {MARGIN_FLOOR:e}); noise off: every one of {} configs dips to ≤ {least_violation:.3e} (need < {MARGIN_VIOLATION:e})",
            bare.len()
        ),
    )
}

/// RK4 for `dF/dt = M F`, `F(0) = I`.
fn rk4_propagator(m: &Mat4, t: f64, h: f64) -> Mat4 {
    let steps = (t / h).round() as usize;
    let h = t / steps as f64;
    let mut f = Mat4::identity();
    for _ in 0..steps {
        let k1 = *m * f;
        let k2 = *m * (f + k1.scale(h / 2.0));
        let k3 = *m * (f + k2.scale(h / 2.0));
        let k4 = *m * (f + k3.scale(h));
        f = f + (k1 + k2.scale(2.0) + k3.scale(2.0) + k4).scale(h / 6.0);
    }
    f
}

fn c9_exceptional_point() -> Outcome {
    let scan = exceptional_scan(&SystemConfig::balanced(1.0), (0.5, 1.5), 101).unwrap();
    let best = scan.iter().min_by(|a, b| a.min_eig_gap.total_cmp(&b.min_eig_gap)).unwrap();
    let located = (best.coupling - 1.0).abs() <= EP_LOCATION_TOL + 1e-12;

    let cfg = SystemConfig::balanced(1.0);
    let m = build_dynamic_matrix(&cfg).0;
    let mut exp_err: f64 = 0.0;
    for t in [0.5, 1.0, 2.0, 4.0, 6.0] {
        exp_err = exp_err.max(relative_frobenius(&matrix_exp(&m, t), &rk4_propagator(&m, t, RK4_STEP)));
    }
    let d = build_diffusion_matrix(&cfg).0;
    let grid = TimeGrid::new(ORACLE_T_MAX, (ORACLE_T_MAX / RK4_STEP) as usize).unwrap();
    let ode = evolve_covariance_ode(&m, &d, &Mat4::identity(), &grid);
    let closed = evolve_series_direct::<f64>(&cfg, &CoherentInput::vacuum(), &grid).unwrap();
    let cov_err = ode.iter().zip(&closed).map(|(v, r)| relative_frobenius(v, &r.state.cov)).fold(0.0, f64::max);
    outcome(
        located && exp_err <= EP_EXP_TOL && cov_err <= EP_EXP_TOL,
        format!(
            "min gap {:.3e} at J = {:.2}g; at J = g: e^(Mt) vs RK4 {exp_err:.3e}, V(t) vs RK4 {cov_err:.3e} (tol {EP_EXP_TOL:e})",
            best.min_eig_gap, best.coupling
        ),
    )
}

fn c10_intensity_ordering() -> Outcome {
    let input = CoherentInput::figure_default();
    let rs = [0.0, 0.5, 1.0, 1.5];
    let k4 = FIGURE_STEPS / 2;
    let mut i_a = Vec::new();
    let mut i_b = Vec::new();
    let mut gaps = Vec::new();
    let mut dominance = true;
    for r in rs {
        let noisy = observations(&config(Placement::LossGuide, 1.9, r, true), &input);
        let bare = observations(&config(Placement::LossGuide, 1.9, r, false), &input);
        assert!((noisy[k4].time - 4.0).abs() < 1e-12);
        dominance &= noisy.iter().zip(&bare).all(|(n, h)| n.intensity_a >= h.intensity_a);
        i_a.push(noisy[k4].intensity_a);
        i_b.push(noisy[k4].intensity_b);
        gaps.push((noisy[k4].intensity_a - bare[k4].intensity_a) / noisy[k4].intensity_a);
    }
    let increasing = |v: &[f64]| v.windows(2).all(|w| w[1] > w[0]);
    let pass = increasing(&i_a) && increasing(&i_b) && dominance && gaps[3] < gaps[0];
    outcome(
        pass,
        format!(
            "I_a(4) {:?}, I_b(4) {:?}, noise-on ≥ noise-off: {dominance}, rel. gap r=0 {:.4} vs r=1.5 {:.4}",
            i_a.iter().map(|x| format!("{x:.3}")).collect::<Vec<_>>(),
            i_b.iter().map(|x| format!("{x:.3}")).collect::<Vec<_>>(),
            gaps[0],
            gaps[3]
        ),
    )
}

fn c11_correlation_without_entanglement() -> Outcome {
    let input = CoherentInput::figure_default();
    let at = |r: f64| state_at::<Extended>(&config(Placement::LossGuide, 1.9, r, true), &input, 3.0);
    let s1 = at(1.0);
    let corr: Vec<f64> = [0.0, 1.0, 1.5].iter().map(|&r| correlation_function(&at(r))).collect();
    let e_n = log_negativity(&s1.cov).e_n;
    let pass = corr[1] > CORRELATION_FLOOR && e_n == 0.0 && corr[2] > corr[1] && corr[1] > corr[0];
    outcome(
        pass,
        format!(
            "gt=3: corr(r=0, 1, 1.5) = ({:.4}, {:.4}, {:.4}), E_N(r=1) = {e_n}, I_a(r=1) = {:.3}",
            corr[0],
            corr[1],
            corr[2],
            photon_number(&s1, Mode::A)
        ),
    )
}

fn main() {
    let started = Instant::now();
    let cache_time = Instant::now();
    let cache = build_cache();
    let cache_secs = cache_time.elapsed().as_secs_f64();

    type Criterion<'a> = (&'a str, Box<dyn Fn() -> Outcome + 'a>);
    let criteria: Vec<Criterion> = vec![
        ("C1  oracle equivalence (closed form vs RK4)", Box::new(c1_oracle_equivalence)),
        ("C2  Monte Carlo consistency", Box::new(c2_monte_carlo)),
        ("C3  loss-guide squeezing: no entanglement with noise", Box::new(|| c3_loss_guide_separable(&cache))),
        ("C4  loss-guide squeezing: noise-free entanglement", Box::new(|| c4_noise_free_loss_guide(&cache))),
        ("C5  gain-guide squeezing: remnant entanglement and ESD", Box::new(|| c5_gain_guide_esd(&cache))),
        ("C6  squeezing in both guides: regime dependence", Box::new(|| c6_both_guides(&cache))),
        ("C7  input-amplitude irrelevance", Box::new(c7_amplitude_irrelevance)),
        ("C8  physicality", Box::new(|| c8_physicality(&cache))),
        ("C9  exceptional point", Box::new(c9_exceptional_point)),
        ("C10 intensity ordering", Box::new(c10_intensity_ordering)),
        ("C11 correlation without entanglement", Box::new(c11_correlation_without_entanglement)),
    ];

    let mut stdout = std::io::stdout();
    writeln!(stdout, "\nacceptance: shared series computed in {cache_secs:.1}s").unwrap();
    let mut failed = Vec::new();
    for (name, run) in &criteria {
        let t0 = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|_| outcome(false, "panicked".into()));
        let tag = if result.pass { "PASS" } else { "FAIL" };
        writeln!(stdout, "[{tag}] {name}: {} ({:.1}s)", result.detail, t0.elapsed().as_secs_f64()).unwrap();
        stdout.flush().unwrap();
        if !result.pass {
            failed.push(*name);
        }
    }
    writeln!(
        stdout,
        "acceptance: {}/{} passed in {:.1}s",
        criteria.len() - failed.len(),
        criteria.len(),
        started.elapsed().as_secs_f64()
    )
    .unwrap();
    if !failed.is_empty() {
        std::process::exit(1);
    }
}
