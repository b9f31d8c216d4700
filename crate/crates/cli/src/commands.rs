use std::fmt::Write as _;

use cvpt_core::linalg::relative_frobenius;
use cvpt_core::propagator::evolve_covariance_ode;
use cvpt_core::spectrum::min_eig_gap;
use cvpt_core::{
    build_diffusion_matrix, build_dynamic_matrix, classify_regime, detect_esd, evolve_series, initial_state,
    log_negativity, observe_series, sample_trajectories, state_at, Extended, RegimeLabel, SystemConfig, TimeGrid,
};

use crate::scenario::Scenario;
use crate::CliError;

/// Relative Frobenius tolerance between the closed form and RK4.
pub const RK4_TOL: f64 = 1e-8;
/// RK4 step for the oracle check, in `g·t`.
pub const RK4_STEP: f64 = 1e-3;
/// Monte Carlo: at most this fraction of entry-time pairs beyond 3σ.
pub const MC_EXCEEDANCE_FRACTION: f64 = 0.05;

pub const EVOLVE_HEADER: &str = "t,I_a,I_b,I_a_h,I_b_h,corr,E_N,E_N_h,phys_margin";

fn num(x: f64) -> String {
    format!("{x:.16e}")
}

fn opt(x: Option<f64>) -> String {
    x.map_or_else(|| "none".to_string(), num)
}

fn ensure_finite(values: &[f64], what: &str, t: f64) -> Result<(), CliError> {
    if values.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(CliError::Core(cvpt_core::Error::Overflow(format!(
            "{what} not finite at g·t = {t}: the growth exceeds the working range"
        ))))
    }
}

/// One CSV row per grid point; `_h` columns use `D = 0`.
pub fn evolve(scenario: &Scenario) -> Result<String, CliError> {
    let cfg = scenario.config()?;
    let input = scenario.input()?;
    let grid = scenario.grid()?;

    let noisy = observe_series(&evolve_series::<Extended>(&cfg, &input, &grid)?);
    let bare = observe_series(&evolve_series::<Extended>(&cfg.with_noise(false), &input, &grid)?);

    let mut out = String::with_capacity(200 * (grid.steps() + 2));
    out.push_str(EVOLVE_HEADER);
    out.push('\n');
    for (n, h) in noisy.iter().zip(&bare) {
        let row = [
            n.time,
            n.intensity_a,
            n.intensity_b,
            h.intensity_a,
            h.intensity_b,
            n.correlation,
            n.entanglement.e_n,
            h.entanglement.e_n,
            n.margin,
        ];
        ensure_finite(&row, "observables", n.time)?;
        let cells: Vec<String> = row.iter().map(|&x| num(x)).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SweepVar {
    Coupling,
    Squeezing,
    Theta,
}

impl SweepVar {
    fn name(self) -> &'static str {
        match self {
            SweepVar::Coupling => "J",
            SweepVar::Squeezing => "r",
            SweepVar::Theta => "theta",
        }
    }

    fn apply(self, cfg: &SystemConfig, value: f64) -> SystemConfig {
        match self {
            SweepVar::Coupling => SystemConfig { coupling: value, ..*cfg },
            SweepVar::Squeezing => SystemConfig { squeeze_r: value, ..*cfg },
            SweepVar::Theta => SystemConfig { squeeze_theta: value, ..*cfg },
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Sweep {
    pub var: SweepVar,
    pub lo: f64,
    pub hi: f64,
    pub n: usize,
}

impl Sweep {
    /// `var:lo:hi:n`, e.g. `r:2.5:3.5:3`.
    pub fn parse(spec: &str) -> Result<Self, CliError> {
        let bad = |why: &str| CliError::Config(format!("--sweep `{spec}`: {why} (expected <J|r|theta>:<lo>:<hi>:<n>)"));
        let parts: Vec<&str> = spec.split(':').collect();
        let [var, lo, hi, n] = parts[..] else {
            return Err(bad("wrong number of fields"));
        };
        let var = match var {
            "J" => SweepVar::Coupling,
            "r" => SweepVar::Squeezing,
            "theta" => SweepVar::Theta,
            _ => return Err(bad("unknown variable")),
        };
        let lo: f64 = lo.parse().map_err(|_| bad("lower bound is not a number"))?;
        let hi: f64 = hi.parse().map_err(|_| bad("upper bound is not a number"))?;
        let n: usize = n.parse().map_err(|_| bad("sample count is not a non-negative integer"))?;
        if !(lo.is_finite() && hi.is_finite()) {
            return Err(bad("bounds must be finite"));
        }
        if n == 0 || hi < lo || (n > 1 && hi == lo) {
            return Err(bad("empty range"));
        }
        if n == 1 && hi != lo {
            return Err(bad("a single sample needs lo == hi"));
        }
        Ok(Self { var, lo, hi, n })
    }

    pub fn values(&self) -> Vec<f64> {
        if self.n == 1 {
            return vec![self.lo];
        }
        (0..self.n).map(|k| self.lo + (self.hi - self.lo) * k as f64 / (self.n - 1) as f64).collect()
    }
}

fn regime_name(label: RegimeLabel) -> &'static str {
    match label {
        RegimeLabel::PTSymmetric => "pt-symmetric",
        RegimeLabel::Broken => "broken",
        RegimeLabel::Exceptional => "exceptional",
    }
}

/// One row per sweep value: entanglement summary of the noisy evolution
/// (birth/death refined by bisection) and spectral data of `M`.
pub fn scan(scenario: &Scenario, sweep: &Sweep) -> Result<String, CliError> {
    let base = scenario.config()?;
    let input = scenario.input()?;
    let grid = scenario.grid()?;

    let mut out = format!(
        "{},peak_E_N,t_peak,t_birth,t_death,max_real_part,oscillation_freq,min_eig_gap,regime\n",
        sweep.var.name()
    );
    for value in sweep.values() {
        let cfg = sweep.var.apply(&base, value);
        cfg.validate().map_err(|e| CliError::Config(format!("--sweep value {value}: {e}")))?;
        let records = evolve_series::<Extended>(&cfg, &input, &grid)?;
        let series: Vec<(f64, f64)> = records.iter().map(|r| (r.time, log_negativity(&r.state.cov).e_n)).collect();
        let evaluate = |t: f64| log_negativity(&state_at::<Extended>(&cfg, &input, t).cov).e_n;
        let esd = detect_esd(&series, Some(&evaluate))?;
        let regime = classify_regime(&cfg);
        let gap = min_eig_gap(&build_dynamic_matrix(&cfg));
        ensure_finite(&[esd.peak_value], "peak E_N", esd.peak_time)?;
        let (birth, death) = if esd.peak_value > 0.0 { (esd.birth_time, esd.death_time) } else { (None, None) };
        let peak_time = if esd.peak_value > 0.0 { Some(esd.peak_time) } else { None };
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            num(value),
            num(esd.peak_value),
            opt(peak_time),
            opt(birth),
            opt(death),
            num(regime.max_real_part),
            num(regime.oscillation_freq),
            num(gap),
            regime_name(regime.label),
        )
        .expect("writing to a String");
    }
    Ok(out)
}

pub struct OracleReport {
    pub text: String,
    pub passed: bool,
}

/// Closed form against RK4 over the scenario grid, and against Monte Carlo
/// when the scenario has noise and an `mc` block.
pub fn oracle_check(scenario: &Scenario, seed: Option<u64>) -> Result<OracleReport, CliError> {
    let cfg = scenario.config()?;
    let input = scenario.input()?;
    let grid = scenario.grid()?;
    let mc = scenario.mc_settings(seed);
    if cfg.noise && mc.is_none() {
        return Err(CliError::Config("oracle-check on a noisy scenario needs an `mc` block".into()));
    }

    let mut text = String::new();
    let mut passed = true;

    let m = build_dynamic_matrix(&cfg).0;
    let d = build_diffusion_matrix(&cfg).0;
    let v0 = initial_state(&input).cov;
    let steps = (grid.t_max() / RK4_STEP).round().max(1.0) as usize;
    let fine = TimeGrid::new(grid.t_max(), steps)?;
    let ode = evolve_covariance_ode(&m, &d, &v0, &fine);
    let closed = evolve_series::<Extended>(&cfg, &input, &fine)?;
    let rk4_err =
        ode.iter().zip(&closed).map(|(v, r)| relative_frobenius(v, &r.state.cov.to_f64())).fold(0.0, f64::max);
    let ok = rk4_err <= RK4_TOL;
    passed &= ok;
    writeln!(
        text,
        "rk4: max relative Frobenius error {} over g*t in [0, {}] with h = {} (tol {:e}) {}",
        num(rk4_err),
        grid.t_max(),
        fine.step(),
        RK4_TOL,
        verdict(ok)
    )
    .expect("writing to a String");

    if !cfg.noise {
        writeln!(text, "monte-carlo: skipped (noise off, no stochastic content)").expect("writing to a String");
    } else if let Some((settings, times)) = mc {
        let estimates = sample_trajectories(&cfg, &input, &times, &settings)?;
        let (mut over, mut total) = (0, 0);
        let mut worst: f64 = 0.0;
        for est in &estimates {
            let reference = state_at::<Extended>(&cfg, &input, est.time).cov.to_f64();
            let (o, t) = est.exceedances(&reference, 3.0);
            over += o;
            total += t;
            worst = worst.max(est.max_z_score(&reference));
            writeln!(
                text,
                "monte-carlo: g*t = {}: {o}/{t} entries beyond 3 stderr, max z = {:.3}",
                est.time,
                est.max_z_score(&reference)
            )
            .expect("writing to a String");
        }
        let allowed = (MC_EXCEEDANCE_FRACTION * total as f64).floor() as usize;
        let ok = over <= allowed;
        passed &= ok;
        writeln!(
            text,
            "monte-carlo: n_traj = {}, dt = {}, seed = {}: {over}/{total} beyond 3 stderr (allowed {allowed}), max z = {worst:.3} {}",
            settings.n_traj,
            settings.dt,
            settings.seed,
            verdict(ok)
        )
        .expect("writing to a String");
    }
    writeln!(text, "{}", if passed { "oracle-check: PASS" } else { "oracle-check: FAIL" })
        .expect("writing to a String");
    Ok(OracleReport { text, passed })
}

fn verdict(ok: bool) -> &'static str {
    if ok {
        "PASS"
    } else {
        "FAIL"
    }
}
