//! The run modes: single computations, sweeps and the fixed reproductions.

use std::f64::consts::FRAC_PI_4;

use rayon::prelude::*;

use modcool_core::analytics::{
    conventional_limits, improving_rate, select_modulation_amplitude, sideband_table, steady_mpn_analytic,
};
use modcool_core::dynamics::{
    default_initial_state, final_mpn_average, integrate_moments, IntegrationConfig, Trajectory,
    DEFAULT_WINDOW_FRACTION,
};
use modcool_core::oracle::{lindblad_moments, FockConfig};
use modcool_core::steadystate::{eigen_stability, floquet_monodromy, steady_state_solve};
use modcool_core::{analytics, Complex64, Modulation, SystemParams};

use crate::config::{Axis, RunConfig, RunMode};
use crate::error::{CliError, Result};
use crate::output::{flag, num, opt, Table};

pub const TRAJECTORY_HEADER: [&str; 11] = [
    "t", "n_a", "n_b", "re_adb", "im_adb", "re_ab", "im_ab", "re_aa", "im_aa", "re_bb", "im_bb",
];

/// Runs `f` on a pool of `jobs` threads, or on rayon's global pool.
pub fn with_jobs<T: Send>(jobs: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match jobs {
        None => Ok(f()),
        Some(0) => Err(CliError::Config("--jobs must be at least 1".into())),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| CliError::Config(format!("thread pool: {e}")))?;
            Ok(pool.install(f))
        }
    }
}

#[derive(Debug, Clone)]
pub struct SimOutcome {
    pub trajectory: Trajectory,
    /// Window-averaged final MPN; `None` when the run diverged.
    pub mpn: Option<f64>,
}

impl SimOutcome {
    pub fn diverged(&self) -> bool {
        self.trajectory.diverged
    }
}

pub fn simulate(p: &SystemParams, m: &Modulation, cfg: &IntegrationConfig, window: f64) -> Result<SimOutcome> {
    let init = default_initial_state(p.n_th)?;
    let trajectory = integrate_moments(p, m, &init, cfg)?;
    let mpn = if trajectory.diverged {
        None
    } else {
        Some(final_mpn_average(&trajectory, window)?)
    };
    Ok(SimOutcome { trajectory, mpn })
}

pub fn trajectory_table(tr: &Trajectory) -> Table {
    let mut t = Table::new(&TRAJECTORY_HEADER);
    for (time, s) in tr.times.iter().zip(&tr.states) {
        let mut row = vec![num(*time)];
        row.extend(s.to_array().iter().map(|v| num(*v)));
        t.push(row);
    }
    t
}

fn quantities(rows: &[(&str, String)]) -> Table {
    let mut t = Table::new(&["quantity", "value"]);
    for (k, v) in rows {
        t.push(vec![k.to_string(), v.clone()]);
    }
    t
}

pub fn steady_table(p: &SystemParams) -> Result<Table> {
    let spec = eigen_stability(p)?;
    let s = steady_state_solve(p)?;
    let a = s.to_array();
    let mut rows: Vec<(&str, String)> = TRAJECTORY_HEADER[1..].iter().zip(a).map(|(k, v)| (*k, num(v))).collect();
    rows.push(("max_re_eigenvalue", num(spec.max_re)));
    rows.push(("mpn_analytic", opt(steady_mpn_analytic(p).ok().map(|s| s.total))));
    Ok(quantities(&rows))
}

pub fn limits_table(p: &SystemParams) -> Result<Table> {
    let l = conventional_limits(p)?;
    let analytic = steady_mpn_analytic(p).ok();
    Ok(quantities(&[
        ("n_lim_total", num(l.n_lim_total)),
        ("classical_term", num(l.classical_term)),
        ("quantum_term", num(l.quantum_term)),
        ("a_minus", num(l.a_minus)),
        ("a_plus", num(l.a_plus)),
        ("gamma_opt", num(l.gamma_opt)),
        ("n_f", num(l.n_f)),
        ("n_c", num(l.n_c)),
        ("cooperativity", num(l.cooperativity)),
        ("low_cooperativity", flag(analytic.map(|s| s.low_cooperativity))),
        ("routh_hurwitz_stable", analytics::routh_hurwitz_stable(p).to_string()),
    ]))
}

pub fn sidebands_csv(p: &SystemParams, m: &Modulation, k_range: u32) -> Result<Table> {
    let mut t = Table::new(&["k", "detuning", "coupling_mag", "suppression_ratio"]);
    for l in sideband_table(p, m, k_range)? {
        t.push(vec![l.k.to_string(), num(l.detuning), num(l.coupling_mag), num(l.suppression_ratio)]);
    }
    Ok(t)
}

pub fn floquet_table(p: &SystemParams, m: &Modulation) -> Result<Table> {
    let fl = floquet_monodromy(p, m)?;
    let spec = eigen_stability(p)?;
    Ok(quantities(&[
        ("period", num(fl.period)),
        ("spectral_radius", num(fl.spectral_radius)),
        ("floquet_stable", fl.stable.to_string()),
        ("max_re_eigenvalue_unmodulated", num(spec.max_re)),
        ("routh_hurwitz_stable_unmodulated", analytics::routh_hurwitz_stable(p).to_string()),
    ]))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleReport {
    /// Max-norm gap between the Fock-space and moment trajectories.
    pub max_gap: f64,
    pub max_trace_drift: f64,
    pub min_eigenvalue: Option<f64>,
    pub max_leak: (f64, f64),
}

pub fn oracle_check(p: &SystemParams, m: &Modulation, fc: &FockConfig, cfg: &IntegrationConfig) -> Result<OracleReport> {
    let run = lindblad_moments(p, m, fc, cfg)?;
    let engine = integrate_moments(p, m, &default_initial_state(p.n_th)?, cfg)?;
    if run.trajectory.times != engine.times {
        return Err(CliError::Numeric(modcool_core::Error::Numeric(
            "oracle and engine sampled different times".into(),
        )));
    }
    let max_gap = run
        .trajectory
        .states
        .iter()
        .zip(&engine.states)
        .flat_map(|(a, b)| a.to_array().into_iter().zip(b.to_array()).map(|(x, y)| (x - y).abs()))
        .fold(0.0, f64::max);
    Ok(OracleReport {
        max_gap,
        max_trace_drift: run.max_trace_drift,
        min_eigenvalue: run.min_eigenvalue,
        max_leak: run.max_leak,
    })
}

pub fn oracle_table(r: &OracleReport) -> Table {
    quantities(&[
        ("max_moment_gap", num(r.max_gap)),
        ("max_trace_drift", num(r.max_trace_drift)),
        ("min_eigenvalue", opt(r.min_eigenvalue)),
        ("max_leak_optical", num(r.max_leak.0)),
        ("max_leak_mechanical", num(r.max_leak.1)),
    ])
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    /// Grid coordinates, one per axis.
    pub coords: Vec<f64>,
    pub mpn_analytic: Option<f64>,
    pub n_f: Option<f64>,
    /// Exact steady state without modulation; window-averaged final MPN with it.
    pub mpn_numeric: Option<f64>,
    pub rh_stable: Option<bool>,
    pub eigen_stable: Option<bool>,
    pub floquet_stable: Option<bool>,
    pub status: String,
}

fn apply_axis(axis: Axis, v: f64, p: &mut SystemParams, m: &mut Modulation, synchronous: bool, auto_xi: bool) -> Result<()> {
    match axis {
        Axis::G => {
            let mag = p.g_lin.norm();
            p.g_lin = if mag > 0.0 { p.g_lin * (v / mag) } else { Complex64::new(v, 0.0) };
        }
        Axis::Kappa => p.kappa = v,
        Axis::Xi => {
            m.xi1 = v;
            if synchronous {
                m.xi2 = v;
            }
        }
        Axis::Nu => {
            m.nu1 = v;
            if synchronous {
                m.nu2 = v;
            }
            if auto_xi {
                let xi = select_modulation_amplitude(v)?.1;
                m.xi1 = xi;
                m.xi2 = xi;
            }
        }
        Axis::Theta => m.theta = v,
        Axis::Xi2 => m.xi2 = v,
        Axis::Nu2 => m.nu2 = v,
    }
    Ok(())
}

fn sweep_point(cfg: &RunConfig, base: &SystemParams, coords: &[f64]) -> SweepRow {
    let mut row = SweepRow {
        coords: coords.to_vec(),
        mpn_analytic: None,
        n_f: None,
        mpn_numeric: None,
        rh_stable: None,
        eigen_stable: None,
        floquet_stable: None,
        status: String::new(),
    };
    match evaluate_point(cfg, base, coords, &mut row) {
        Ok(status) => row.status = status.into(),
        Err(e) => row.status = format!("error: {e}"),
    }
    row
}

fn evaluate_point(cfg: &RunConfig, base: &SystemParams, coords: &[f64], row: &mut SweepRow) -> Result<&'static str> {
    let spec = cfg.sweep.as_ref().expect("sweep mode carries a grid");
    let synchronous = cfg.modulation.xi1 == cfg.modulation.xi2 && cfg.modulation.nu1 == cfg.modulation.nu2;
    let (mut p, mut m) = (*base, cfg.modulation);
    for (a, v) in spec.axes.iter().zip(coords) {
        apply_axis(a.axis, *v, &mut p, &mut m, synchronous, cfg.auto_xi)?;
    }
    let p = SystemParams::new(p.delta_c_prime, p.g_lin, p.kappa, p.gamma, p.n_th)?;
    let m = Modulation::new(m.xi1, m.nu1, m.xi2, m.nu2, m.theta)?;

    row.rh_stable = Some(analytics::routh_hurwitz_stable(&p));
    row.mpn_analytic = steady_mpn_analytic(&p).ok().map(|s| s.total);
    row.n_f = conventional_limits(&p).ok().map(|l| l.n_f);
    row.eigen_stable = eigen_stability(&p).ok().map(|s| s.stable);

    if m.is_active() {
        row.floquet_stable = floquet_monodromy(&p, &m).ok().map(|f| f.stable);
        let icfg = cfg.integration_for(&p, &m)?;
        let out = simulate(&p, &m, &icfg, cfg.window_fraction)?;
        row.mpn_numeric = out.mpn;
        Ok(if out.diverged() { "diverge" } else { "ok" })
    } else if row.eigen_stable == Some(true) {
        row.mpn_numeric = Some(steady_state_solve(&p)?.n_b);
        Ok("ok")
    } else {
        Ok("unstable")
    }
}

/// Evaluates every grid point independently; rows come back in axis order
/// (first axis slowest) regardless of scheduling.
pub fn run_sweep(cfg: &RunConfig, jobs: Option<usize>) -> Result<Vec<SweepRow>> {
    let spec = cfg
        .sweep
        .as_ref()
        .ok_or_else(|| CliError::Config("sweep mode needs a grid".into()))?;
    let base = *cfg.params()?;
    let mut grid: Vec<Vec<f64>> = vec![vec![]];
    for axis in &spec.axes {
        let values = axis.values();
        grid = grid
            .into_iter()
            .flat_map(|prefix| {
                values.iter().map(move |v| {
                    let mut c = prefix.clone();
                    c.push(*v);
                    c
                })
            })
            .collect();
    }
    with_jobs(jobs, || grid.par_iter().map(|c| sweep_point(cfg, &base, c)).collect())
}

pub fn sweep_table(cfg: &RunConfig, rows: &[SweepRow]) -> Table {
    let mut header: Vec<&str> = cfg
        .sweep
        .as_ref()
        .map(|s| s.axes.iter().map(|a| a.axis.name()).collect())
        .unwrap_or_default();
    header.extend([
        "mpn_analytic",
        "n_f",
        "mpn_numeric",
        "rh_stable",
        "eigen_stable",
        "floquet_stable",
        "status",
    ]);
    let mut t = Table::new(&header);
    for r in rows {
        let mut row: Vec<String> = r.coords.iter().map(|v| num(*v)).collect();
        row.extend([
            opt(r.mpn_analytic),
            opt(r.n_f),
            opt(r.mpn_numeric),
            flag(r.rh_stable),
            flag(r.eigen_stable),
            flag(r.floquet_stable),
            r.status.clone(),
        ]);
        t.push(row);
    }
    t
}

/// Status of one table run.
#[derive(Debug, Clone, PartialEq)]
pub enum RunStatus {
    Ok,
    Diverge,
    Error(String),
}

impl RunStatus {
    pub fn label(&self) -> String {
        match self {
            RunStatus::Ok => "ok".into(),
            RunStatus::Diverge => "diverge".into(),
            RunStatus::Error(e) => format!("error: {e}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table1Row {
    pub regime: &'static str,
    pub g: f64,
    pub kappa: f64,
    pub mpn_no_fm: Option<f64>,
    pub mpn_fm: Option<f64>,
    pub improving_rate: Option<f64>,
    pub status_no_fm: RunStatus,
    pub status_fm: RunStatus,
}

pub const TABLE1_ROWS: [(&str, f64, f64); 10] = [
    ("WC", 0.02, 0.05),
    ("WC", 0.1, 0.1),
    ("SC", 0.3, 0.1),
    ("SC", 0.5, 0.2),
    ("SC", 0.6, 0.3),
    ("SC", 0.9, 0.5),
    ("USC", 1.2, 0.5),
    ("USC", 1.5, 0.5),
    ("USB", 0.2, 4.0),
    ("USB", 0.5, 10.0),
];
pub const TABLE1_NU: f64 = 30.0;

fn table_run(p: &SystemParams, m: &Modulation) -> (Option<f64>, RunStatus) {
    let run = || -> Result<SimOutcome> {
        let cfg = IntegrationConfig::default_for(p, m);
        simulate(p, m, &cfg, DEFAULT_WINDOW_FRACTION)
    };
    match run() {
        Ok(out) if out.diverged() => (None, RunStatus::Diverge),
        Ok(out) => (out.mpn, RunStatus::Ok),
        Err(e) => (None, RunStatus::Error(e.to_string())),
    }
}

/// All ten rows at Δ′_c = ω_m, γ = 1e-5, n_th = 1e3, ν = 30 and the
/// automatically chosen amplitude, with and without modulation.
pub fn run_table1(jobs: Option<usize>) -> Result<Vec<Table1Row>> {
    let (_, xi) = select_modulation_amplitude(TABLE1_NU)?;
    let fm = modcool_core::make_synchronous(xi, TABLE1_NU)?;
    let no_fm = Modulation::none();
    let runs: Vec<(usize, bool)> = (0..TABLE1_ROWS.len()).flat_map(|i| [(i, false), (i, true)]).collect();
    let results: Vec<(Option<f64>, RunStatus)> = with_jobs(jobs, || {
        runs.par_iter()
            .map(|&(i, with_fm)| {
                let (_, g, kappa) = TABLE1_ROWS[i];
                match SystemParams::red_sideband(g, kappa, 1e-5, 1e3) {
                    Ok(p) => table_run(&p, if with_fm { &fm } else { &no_fm }),
                    Err(e) => (None, RunStatus::Error(e.to_string())),
                }
            })
            .collect()
    })?;
    Ok(TABLE1_ROWS
        .iter()
        .zip(results.chunks(2))
        .map(|(&(regime, g, kappa), pair)| {
            let (mpn_no_fm, status_no_fm) = pair[0].clone();
            let (mpn_fm, status_fm) = pair[1].clone();
            let improving_rate = match (mpn_no_fm, mpn_fm) {
                (Some(a), Some(b)) if a > 0.0 => Some(improving_rate(a, b)),
                _ => None,
            };
            Table1Row {
                regime,
                g,
                kappa,
                mpn_no_fm,
                mpn_fm,
                improving_rate,
                status_no_fm,
                status_fm,
            }
        })
        .collect())
}

pub fn table1_table(rows: &[Table1Row]) -> Table {
    let mut t = Table::new(&[
        "regime",
        "G",
        "kappa",
        "mpn_no_fm",
        "mpn_fm",
        "improving_rate",
        "status_no_fm",
        "status_fm",
    ]);
    for r in rows {
        t.push(vec![
            r.regime.into(),
            num(r.g),
            num(r.kappa),
            opt(r.mpn_no_fm),
            opt(r.mpn_fm),
            opt(r.improving_rate),
            r.status_no_fm.label(),
            r.status_fm.label(),
        ]);
    }
    t
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AsyncReport {
    pub mpn_fm: f64,
    pub mpn_no_fm: f64,
    pub improving_rate: f64,
}

pub fn asynchronous_case() -> Result<(SystemParams, Modulation)> {
    let p = SystemParams::red_sideband(0.4, 0.1, 1e-5, 1e3)?;
    let m = Modulation::new(1.0, 10.0, 3.8096, 15.0, FRAC_PI_4)?;
    Ok((p, m))
}

/// Unequal amplitudes and frequencies (ξ₁ = 1, ν₁ = 10; ξ₂ = 3.8096, ν₂ = 15;
/// θ = π/4) at G = 0.4, κ = 0.1, against the same system unmodulated.
pub fn run_asynchronous_case() -> Result<AsyncReport> {
    let (p, m) = asynchronous_case()?;
    let averaged = |m: &Modulation| -> Result<f64> {
        let out = simulate(&p, m, &IntegrationConfig::default_for(&p, m), DEFAULT_WINDOW_FRACTION)?;
        out.mpn
            .ok_or_else(|| CliError::Divergence(format!("asynchronous case diverged (ξ₁ = {})", m.xi1)))
    };
    let mpn_fm = averaged(&m)?;
    let mpn_no_fm = averaged(&Modulation::none())?;
    Ok(AsyncReport {
        mpn_fm,
        mpn_no_fm,
        improving_rate: improving_rate(mpn_no_fm, mpn_fm),
    })
}

pub fn async_table(r: &AsyncReport) -> Table {
    let mut t = Table::new(&["case", "mpn_fm", "mpn_no_fm", "improving_rate"]);
    t.push(vec!["asynchronous".into(), num(r.mpn_fm), num(r.mpn_no_fm), num(r.improving_rate)]);
    t
}

/// Result of dispatching one configuration.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub table: Table,
    /// Set when divergence dominates the run (exit status 4).
    pub divergence: Option<String>,
    /// Human-readable summary for stderr.
    pub summary: Option<String>,
}

impl From<Table> for RunOutput {
    fn from(table: Table) -> Self {
        RunOutput {
            table,
            divergence: None,
            summary: None,
        }
    }
}

pub fn run(cfg: &RunConfig, jobs: Option<usize>) -> Result<RunOutput> {
    let m = &cfg.modulation;
    match cfg.mode {
        RunMode::Simulate => {
            let p = cfg.params()?;
            let out = simulate(p, m, &cfg.integration_for(p, m)?, cfg.window_fraction)?;
            let diverged = out.diverged();
            Ok(RunOutput {
                table: trajectory_table(&out.trajectory),
                divergence: diverged.then(|| format!("n_b diverged by t = {}", out.trajectory.final_time())),
                summary: out.mpn.map(|v| format!("final MPN (window-averaged): {v}")),
            })
        }
        RunMode::Steady => {
            if m.is_active() {
                return Err(CliError::Config(
                    "steady mode solves the unmodulated system; use simulate or floquet with modulation".into(),
                ));
            }
            Ok(steady_table(cfg.params()?)?.into())
        }
        RunMode::Limits => Ok(limits_table(cfg.params()?)?.into()),
        RunMode::Sidebands => Ok(sidebands_csv(cfg.params()?, m, cfg.k_range)?.into()),
        RunMode::Floquet => Ok(floquet_table(cfg.params()?, m)?.into()),
        RunMode::OracleCheck => {
            let p = cfg.params()?;
            let report = oracle_check(p, m, &cfg.fock, &cfg.integration_for(p, m)?)?;
            Ok(RunOutput {
                summary: Some(format!("max moment gap {:e}", report.max_gap)),
                ..oracle_table(&report).into()
            })
        }
        RunMode::Sweep => {
            let rows = run_sweep(cfg, jobs)?;
            let diverged = rows.iter().filter(|r| r.status == "diverge").count();
            Ok(RunOutput {
                table: sweep_table(cfg, &rows),
                divergence: (2 * diverged > rows.len())
                    .then(|| format!("{diverged} of {} grid points diverged", rows.len())),
                summary: None,
            })
        }
        RunMode::Table1 => Ok(table1_table(&run_table1(jobs)?).into()),
        RunMode::Async => {
            let r = run_asynchronous_case()?;
            Ok(RunOutput {
                summary: Some(format!(
                    "with FM {:.4}, without FM {:.4}, improving rate {:.4}",
                    r.mpn_fm, r.mpn_no_fm, r.improving_rate
                )),
                ..async_table(&r).into()
            })
        }
    }
}
