//! Brute-force cross-checks for the moment engine: the full master equation
//! on a truncated Fock space, and the phonon birth–death rate equations.
//!
//! Both are deliberately naive. The Fock integrator is only practical for
//! small occupations (n_th ≲ 1, |G| ≲ 0.1); the moment equations are exact
//! for this quadratic model, so agreement there certifies the engine.

use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;

use crate::analytics::conventional_rates;
use crate::dynamics::{effective_max_step, IntegrationConfig, Trajectory};
use crate::error::{Error, Mode, Result};
use crate::linalg;
use crate::model::{renormalized_detunings, MomentState, Modulation, SystemParams};
use crate::ode::{self, Control, OdeOptions, OdeSystem};

pub const MAX_HILBERT_DIM: usize = 4096;
/// Trace drift beyond this aborts the run.
pub const TRACE_FAILURE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FockConfig {
    pub dim_a: usize,
    pub dim_b: usize,
    /// Largest admissible population in the top two levels of either mode.
    pub leak_tol: f64,
    /// Number of evenly spaced samples at which ρ is diagonalized to check
    /// positivity (the final sample is always among them when nonzero).
    pub positivity_samples: usize,
}

impl FockConfig {
    pub fn new(dim_a: usize, dim_b: usize, leak_tol: f64) -> Result<Self> {
        let fc = FockConfig {
            dim_a,
            dim_b,
            leak_tol,
            positivity_samples: 2,
        };
        fc.validate()?;
        Ok(fc)
    }

    fn validate(&self) -> Result<()> {
        if self.dim_a < 2 || self.dim_b < 2 {
            return Err(Error::InvalidParameter("Fock dimensions must be at least 2".into()));
        }
        if self.dim_a * self.dim_b > MAX_HILBERT_DIM {
            return Err(Error::InvalidParameter(alloc::format!(
                "Hilbert space {}x{} exceeds {MAX_HILBERT_DIM}",
                self.dim_a,
                self.dim_b
            )));
        }
        if !(self.leak_tol > 0.0) {
            return Err(Error::InvalidParameter("leak_tol must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct OracleRun {
    pub trajectory: Trajectory,
    /// max |Tr ρ − 1| over the samples.
    pub max_trace_drift: f64,
    /// max |ρ − ρ†| entry over the samples.
    pub max_hermiticity_error: f64,
    /// Smallest eigenvalue of ρ among the checked samples.
    pub min_eigenvalue: Option<f64>,
    /// Largest top-two-level population seen in (optical, mechanical).
    pub max_leak: (f64, f64),
    /// Row-major density matrix at the final sample.
    pub final_density: Vec<Complex64>,
}

type SparseRows = Vec<Vec<(usize, Complex64)>>;

struct FockSpace {
    dim_a: usize,
    dim_b: usize,
}

impl FockSpace {
    fn dim(&self) -> usize {
        self.dim_a * self.dim_b
    }

    fn index(&self, ia: usize, ib: usize) -> usize {
        ia * self.dim_b + ib
    }

    fn split(&self, i: usize) -> (usize, usize) {
        (i / self.dim_b, i % self.dim_b)
    }

    /// Dense matrix of a† (optical) or b† (mechanical), truncated.
    fn creation(&self, mode: Mode) -> Vec<Complex64> {
        let d = self.dim();
        let mut m = vec![Complex64::new(0.0, 0.0); d * d];
        for col in 0..d {
            let (ia, ib) = self.split(col);
            let (ja, jb, amp) = match mode {
                Mode::Optical if ia + 1 < self.dim_a => (ia + 1, ib, libm::sqrt((ia + 1) as f64)),
                Mode::Mechanical if ib + 1 < self.dim_b => (ia, ib + 1, libm::sqrt((ib + 1) as f64)),
                _ => continue,
            };
            m[self.index(ja, jb) * d + col] = Complex64::new(amp, 0.0);
        }
        m
    }
}

fn dagger(m: &[Complex64], d: usize) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); d * d];
    for r in 0..d {
        for c in 0..d {
            out[c * d + r] = m[r * d + c].conj();
        }
    }
    out
}

fn matmul(x: &[Complex64], y: &[Complex64], d: usize) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); d * d];
    for r in 0..d {
        for k in 0..d {
            let xv = x[r * d + k];
            if xv == Complex64::new(0.0, 0.0) {
                continue;
            }
            for c in 0..d {
                out[r * d + c] += xv * y[k * d + c];
            }
        }
    }
    out
}

fn to_rows(m: &[Complex64], d: usize) -> SparseRows {
    (0..d)
        .map(|r| {
            (0..d)
                .filter_map(|c| {
                    let v = m[r * d + c];
                    (v.norm_sqr() > 0.0).then_some((c, v))
                })
                .collect()
        })
        .collect()
}

/// Expectation Tr(ρ O) for a sparse operator.
fn expectation(rows: &SparseRows, rho: &dyn Fn(usize, usize) -> Complex64) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for (r, row) in rows.iter().enumerate() {
        for &(c, v) in row {
            acc += v * rho(c, r);
        }
    }
    acc
}

struct Liouvillian<'a> {
    p: &'a SystemParams,
    m: &'a Modulation,
    d: usize,
    n_a: Vec<f64>,
    n_b: Vec<f64>,
    interaction: SparseRows,
    jumps: Vec<SparseRows>,
    /// Σ L†L
    decay: SparseRows,
}

impl<'a> Liouvillian<'a> {
    fn new(p: &'a SystemParams, m: &'a Modulation, space: &FockSpace) -> Self {
        let d = space.dim();
        let a_dag = space.creation(Mode::Optical);
        let b_dag = space.creation(Mode::Mechanical);
        let a = dagger(&a_dag, d);
        let b = dagger(&b_dag, d);

        // V = −(G a† + G* a)(b† + b)
        let g = p.g_lin;
        let lhs: Vec<Complex64> = a_dag.iter().zip(&a).map(|(x, y)| -(g * x + g.conj() * y)).collect();
        let rhs: Vec<Complex64> = b_dag.iter().zip(&b).map(|(x, y)| x + y).collect();
        let v = matmul(&lhs, &rhs, d);

        let scaled = |m: &[Complex64], rate: f64| -> Vec<Complex64> {
            let s = libm::sqrt(rate);
            m.iter().map(|z| z * s).collect()
        };
        let ops = [
            scaled(&a, p.kappa),
            scaled(&b, p.gamma * (p.n_th + 1.0)),
            scaled(&b_dag, p.gamma * p.n_th),
        ];
        let mut decay = vec![Complex64::new(0.0, 0.0); d * d];
        for l in &ops {
            let ll = matmul(&dagger(l, d), l, d);
            for (acc, x) in decay.iter_mut().zip(ll) {
                *acc += x;
            }
        }

        let (n_a, n_b) = (0..d)
            .map(|i| {
                let (ia, ib) = space.split(i);
                (ia as f64, ib as f64)
            })
            .unzip();
        Liouvillian {
            p,
            m,
            d,
            n_a,
            n_b,
            interaction: to_rows(&v, d),
            jumps: ops.iter().map(|l| to_rows(l, d)).collect(),
            decay: to_rows(&decay, d),
        }
    }
}

#[inline]
fn load(y: &[f64], d: usize, i: usize, j: usize) -> Complex64 {
    let k = 2 * (i * d + j);
    Complex64::new(y[k], y[k + 1])
}

impl OdeSystem for Liouvillian<'_> {
    fn dim(&self) -> usize {
        2 * self.d * self.d
    }

    fn rhs(&self, t: f64, y: &[f64], dy: &mut [f64]) {
        let d = self.d;
        let (delta, omega) = renormalized_detunings(self.p, self.m, t);
        let energy: Vec<f64> = (0..d).map(|i| delta * self.n_a[i] + omega * self.n_b[i]).collect();
        let mi = Complex64::new(0.0, -1.0);
        for i in 0..d {
            for j in 0..d {
                let rho_ij = load(y, d, i, j);
                // −i[H, ρ]
                let mut comm = rho_ij * (energy[i] - energy[j]);
                for &(k, v) in &self.interaction[i] {
                    comm += v * load(y, d, k, j);
                }
                for &(k, v) in &self.interaction[j] {
                    comm -= load(y, d, i, k) * v.conj();
                }
                let mut acc = mi * comm;
                // L ρ L†
                for l in &self.jumps {
                    for &(k, u) in &l[i] {
                        for &(q, w) in &l[j] {
                            acc += u * load(y, d, k, q) * w.conj();
                        }
                    }
                }
                // −½{Σ L†L, ρ}
                for &(k, v) in &self.decay[i] {
                    acc -= 0.5 * v * load(y, d, k, j);
                }
                for &(k, v) in &self.decay[j] {
                    acc -= 0.5 * load(y, d, i, k) * v.conj();
                }
                let idx = 2 * (i * d + j);
                dy[idx] = acc.re;
                dy[idx + 1] = acc.im;
            }
        }
    }
}

struct MomentOperators {
    n_a: SparseRows,
    n_b: SparseRows,
    adb: SparseRows,
    ab: SparseRows,
    aa: SparseRows,
    bb: SparseRows,
}

impl MomentOperators {
    fn new(space: &FockSpace) -> Self {
        let d = space.dim();
        let a_dag = space.creation(Mode::Optical);
        let b_dag = space.creation(Mode::Mechanical);
        let a = dagger(&a_dag, d);
        let b = dagger(&b_dag, d);
        MomentOperators {
            n_a: to_rows(&matmul(&a_dag, &a, d), d),
            n_b: to_rows(&matmul(&b_dag, &b, d), d),
            adb: to_rows(&matmul(&a_dag, &b, d), d),
            ab: to_rows(&matmul(&a, &b, d), d),
            aa: to_rows(&matmul(&a, &a, d), d),
            bb: to_rows(&matmul(&b, &b, d), d),
        }
    }

    fn moments(&self, y: &[f64], d: usize) -> MomentState {
        let rho = |i: usize, j: usize| load(y, d, i, j);
        MomentState {
            n_a: expectation(&self.n_a, &rho).re,
            n_b: expectation(&self.n_b, &rho).re,
            c_adb: expectation(&self.adb, &rho),
            c_ab: expectation(&self.ab, &rho),
            c_aa: expectation(&self.aa, &rho),
            c_bb: expectation(&self.bb, &rho),
        }
    }
}

/// Vacuum cavity and thermal phonons (renormalized on the truncated space).
fn initial_density(space: &FockSpace, n_th: f64) -> Vec<f64> {
    let d = space.dim();
    let mut y = vec![0.0; 2 * d * d];
    let ratio = n_th / (n_th + 1.0);
    let weights: Vec<f64> = (0..space.dim_b).map(|n| libm::pow(ratio, n as f64)).collect();
    let total: f64 = weights.iter().sum();
    for (ib, w) in weights.iter().enumerate() {
        let i = space.index(0, ib);
        y[2 * (i * d + i)] = w / total;
    }
    y
}

/// Row-major complex density matrix from the packed state.
fn unpack(y: &[f64], d: usize) -> Vec<Complex64> {
    (0..d * d).map(|k| Complex64::new(y[2 * k], y[2 * k + 1])).collect()
}

pub fn density_min_eigenvalue(rho: &[Complex64], d: usize) -> f64 {
    linalg::hermitian_min_eigenvalue(rho, d)
}

/// Integrates the master equation on the truncated Fock space and records
/// the six moments at the same sample times as the moment engine.
pub fn lindblad_moments(
    p: &SystemParams,
    m: &Modulation,
    fc: &FockConfig,
    cfg: &IntegrationConfig,
) -> Result<OracleRun> {
    lindblad_moments_from(p, m, fc, cfg, p.n_th)
}

/// As [`lindblad_moments`], starting from a thermal phonon state of the given
/// occupation instead of n_th.
pub fn lindblad_moments_from(
    p: &SystemParams,
    m: &Modulation,
    fc: &FockConfig,
    cfg: &IntegrationConfig,
    phonon_occupation: f64,
) -> Result<OracleRun> {
    if !(phonon_occupation >= 0.0) {
        return Err(Error::InvalidParameter("initial phonon occupation must be non-negative".into()));
    }
    fc.validate()?;
    cfg.validate()?;
    let space = FockSpace {
        dim_a: fc.dim_a,
        dim_b: fc.dim_b,
    };
    let d = space.dim();
    let sys = Liouvillian::new(p, m, &space);
    let ops = MomentOperators::new(&space);
    let opts = OdeOptions {
        rtol: cfg.rtol,
        atol: cfg.atol,
        max_step: effective_max_step(cfg.max_step, m),
    };

    // The ground state never counts as leakage, even for dimension 2.
    let top_a: Vec<usize> = (0..d).filter(|&i| space.split(i).0 >= (fc.dim_a - 2).max(1)).collect();
    let top_b: Vec<usize> = (0..d).filter(|&i| space.split(i).1 >= (fc.dim_b - 2).max(1)).collect();

    let n_samples = libm::ceil(cfg.t_end / cfg.sample_stride) as usize + 1;
    let check_every = n_samples
        .checked_div(fc.positivity_samples)
        .map_or(usize::MAX, |k| k.max(1));

    let mut tr = Trajectory {
        times: Vec::with_capacity(n_samples),
        states: Vec::with_capacity(n_samples),
        params: *p,
        modulation: *m,
        tolerances: (cfg.rtol, cfg.atol),
        diverged: false,
    };
    let mut max_trace_drift: f64 = 0.0;
    let mut max_herm: f64 = 0.0;
    let mut min_eig: Option<f64> = None;
    let mut max_leak = (0.0f64, 0.0f64);
    let mut failure: Option<Error> = None;
    let mut sample = 0usize;

    let mut y = initial_density(&space, phonon_occupation);
    let result = ode::integrate(&sys, 0.0, &mut y, cfg.t_end, cfg.sample_stride, &opts, |t, y| {
        let trace: f64 = (0..d).map(|i| y[2 * (i * d + i)]).sum();
        let drift = libm::fabs(trace - 1.0);
        max_trace_drift = max_trace_drift.max(drift);
        for i in 0..d {
            for j in i + 1..d {
                let e = (load(y, d, i, j) - load(y, d, j, i).conj()).norm();
                max_herm = max_herm.max(e);
            }
        }
        let leak_a: f64 = top_a.iter().map(|&i| y[2 * (i * d + i)]).sum();
        let leak_b: f64 = top_b.iter().map(|&i| y[2 * (i * d + i)]).sum();
        max_leak = (max_leak.0.max(leak_a), max_leak.1.max(leak_b));

        tr.times.push(t);
        tr.states.push(ops.moments(y, d));

        let last = t >= cfg.t_end;
        if sample.is_multiple_of(check_every) && sample > 0 || (last && fc.positivity_samples > 0) {
            let ev = density_min_eigenvalue(&unpack(y, d), d);
            min_eig = Some(min_eig.map_or(ev, |m| m.min(ev)));
        }
        sample += 1;

        if drift > TRACE_FAILURE {
            failure = Some(Error::IntegrationFailure { time: t, partial: None });
            return Control::Stop;
        }
        if leak_a > fc.leak_tol || leak_b > fc.leak_tol {
            let (mode, population) = if leak_a > fc.leak_tol {
                (Mode::Optical, leak_a)
            } else {
                (Mode::Mechanical, leak_b)
            };
            failure = Some(Error::TruncationViolation { mode, population });
            return Control::Stop;
        }
        Control::Continue
    });
    if let Err(ode::StepUnderflow(time)) = result {
        return Err(Error::IntegrationFailure { time, partial: None });
    }
    if let Some(e) = failure {
        return Err(e);
    }
    Ok(OracleRun {
        trajectory: tr,
        max_trace_drift,
        max_hermiticity_error: max_herm,
        min_eigenvalue: min_eig,
        max_leak,
        final_density: unpack(&y, d),
    })
}

/// Stationary phonon distribution of the birth–death chain with optical
/// rates A± and thermal rates γ(n_th + 1), γ n_th, on levels 0..=n_max.
pub fn rate_equation_distribution(p: &SystemParams, n_max: usize) -> Result<Vec<f64>> {
    let (a_minus, a_plus) = conventional_rates(p);
    let up_rate = a_plus + p.gamma * p.n_th;
    let down_rate = a_minus + p.gamma * (p.n_th + 1.0);
    if !(down_rate > 0.0) {
        return Err(Error::NoSteadyState("no downward transitions".into()));
    }
    if n_max == 0 {
        return Err(Error::InvalidParameter("n_max must be positive".into()));
    }
    // Detailed balance between neighbouring levels:
    // P_n · Γ_{n→n−1} = P_{n−1} · Γ_{n−1→n}.
    let mut prob = Vec::with_capacity(n_max + 1);
    prob.push(1.0);
    for n in 1..=n_max {
        let gain = n as f64 * up_rate;
        let loss = n as f64 * down_rate;
        let prev = prob[n - 1];
        prob.push(prev * gain / loss);
    }
    let total: f64 = prob.iter().sum();
    for v in prob.iter_mut() {
        *v /= total;
    }
    // Mass beyond n_max if the chain kept going.
    let r = up_rate / down_rate;
    let tail = if r < 1.0 {
        prob[n_max] * r / (1.0 - r)
    } else {
        f64::INFINITY
    };
    if tail > 1e-9 {
        return Err(Error::Numeric(alloc::format!(
            "rate chain truncated at n_max = {n_max} leaves tail mass {tail:e}"
        )));
    }
    Ok(prob)
}

/// Mean phonon number of the stationary rate-equation distribution.
pub fn rate_equation_steady(p: &SystemParams, n_max: usize) -> Result<f64> {
    let prob = rate_equation_distribution(p, n_max)?;
    Ok(prob.iter().enumerate().map(|(n, w)| n as f64 * w).sum())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_guards() {
        assert!(FockConfig::new(1, 4, 1e-6).is_err());
        assert!(FockConfig::new(64, 65, 1e-6).is_err());
        assert!(FockConfig::new(64, 64, 1e-6).is_ok());
        assert!(FockConfig::new(4, 4, 0.0).is_err());
    }

    #[test]
    fn thermal_chain() {
        let p = SystemParams::red_sideband(0.0, 0.1, 1e-3, 3.0).unwrap();
        let n = rate_equation_steady(&p, 400).unwrap();
        assert!((n - 3.0).abs() < 1e-9, "{n}");
    }

    #[test]
    fn chain_truncation_detected() {
        let p = SystemParams::red_sideband(0.0, 0.1, 1e-3, 100.0).unwrap();
        assert!(rate_equation_steady(&p, 50).is_err());
    }

    #[test]
    fn initial_density_is_thermal() {
        let space = FockSpace { dim_a: 3, dim_b: 30 };
        let y = initial_density(&space, 0.5);
        let ops = MomentOperators::new(&space);
        let s = ops.moments(&y, space.dim());
        assert!((s.n_b - 0.5).abs() < 1e-12);
        assert_eq!(s.n_a, 0.0);
    }
}
