//! Time evolution of the second-order moments under the linearized,
//! frequency-modulated master equation.

use alloc::boxed::Box;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;

use crate::analytics::conventional_rates;
use crate::error::{Error, Result};
use crate::linalg;
use crate::model::{renormalized_detunings, MomentState, Modulation, SystemParams, MOMENT_DIM};
use crate::ode::{self, Control, OdeOptions, OdeSystem};

/// Default ratio between the divergence threshold and max(n_th, 1).
pub const DEFAULT_DIVERGENCE_FACTOR: f64 = 1e5;
/// Minimum number of integrator steps per modulation period.
pub const STEPS_PER_PERIOD: f64 = 20.0;
pub const DEFAULT_WINDOW_FRACTION: f64 = 0.2;

const MIN_HORIZON: f64 = 3000.0;
const MAX_HORIZON: f64 = 1e5;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegrationConfig {
    pub rtol: f64,
    pub atol: f64,
    pub max_step: f64,
    pub t_end: f64,
    /// Spacing of the output samples.
    pub sample_stride: f64,
    /// The run stops early once n_b exceeds this factor times max(n_th, 1).
    pub divergence_factor: f64,
}

impl IntegrationConfig {
    pub fn new(rtol: f64, atol: f64, max_step: f64, t_end: f64, sample_stride: f64) -> Result<Self> {
        let cfg = IntegrationConfig {
            rtol,
            atol,
            max_step,
            t_end,
            sample_stride,
            divergence_factor: DEFAULT_DIVERGENCE_FACTOR,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.rtol > 0.0
            && self.atol > 0.0
            && self.max_step > 0.0
            && self.t_end > 0.0
            && self.sample_stride > 0.0
            && self.divergence_factor > 1.0;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter(alloc::format!(
                "integration config needs positive tolerances, steps and horizon: {self:?}"
            )))
        }
    }

    /// Defaults: rtol 1e-9, atol 1e-12, and a horizon long enough for the
    /// cooled state to settle. With modulation the horizon is a whole number
    /// of common periods and samples are taken twenty times per period.
    pub fn default_for(p: &SystemParams, m: &Modulation) -> Self {
        let mut t_end = MIN_HORIZON;
        let (a_minus, a_plus) = conventional_rates(p);
        let gamma_opt = a_minus - a_plus;
        if gamma_opt > 0.0 {
            t_end = t_end.max(20.0 / gamma_opt);
        }
        let damping = gamma_opt.max(0.0) + p.gamma;
        if damping > 0.0 {
            t_end = t_end.max(5.0 / damping);
        }
        if !m.is_active() {
            // Near the stability boundary the slowest mode is much slower than
            // the cooling rate suggests.
            if let Ok(spec) = crate::steadystate::eigen_stability(p) {
                if spec.max_re < 0.0 {
                    t_end = t_end.max(20.0 / -spec.max_re);
                }
            }
        }
        t_end = t_end.min(MAX_HORIZON);

        let (stride, max_step) = match m.common_period() {
            Some(period) => {
                t_end = libm::ceil(t_end / period) * period;
                (period / STEPS_PER_PERIOD, period / STEPS_PER_PERIOD)
            }
            None => (0.5, 1.0),
        };
        IntegrationConfig {
            rtol: 1e-9,
            atol: 1e-12,
            max_step,
            t_end,
            sample_stride: stride,
            divergence_factor: DEFAULT_DIVERGENCE_FACTOR,
        }
    }

    pub fn with_t_end(mut self, t_end: f64) -> Self {
        self.t_end = t_end;
        self
    }

    pub fn with_tolerances(mut self, rtol: f64, atol: f64) -> Self {
        self.rtol = rtol;
        self.atol = atol;
        self
    }

    pub fn with_sample_stride(mut self, stride: f64) -> Self {
        self.sample_stride = stride;
        self
    }
}

/// Sampled solution of the moment equations.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<MomentState>,
    pub params: SystemParams,
    pub modulation: Modulation,
    /// (rtol, atol)
    pub tolerances: (f64, f64),
    /// Set when the run was cut short by the divergence threshold.
    pub diverged: bool,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn final_state(&self) -> &MomentState {
        self.states.last().expect("trajectory has at least two samples")
    }

    pub fn final_time(&self) -> f64 {
        *self.times.last().expect("trajectory has at least two samples")
    }

    /// Phonon number at each sample.
    pub fn n_b(&self) -> impl Iterator<Item = f64> + '_ {
        self.states.iter().map(|s| s.n_b)
    }
}

/// Right-hand side of the moment equations.
pub fn moment_derivative(s: &MomentState, t: f64, p: &SystemParams, m: &Modulation) -> MomentState {
    let (delta, omega) = renormalized_detunings(p, m, t);
    let i = Complex64::i();
    let g = p.g_lin;
    let gc = g.conj();
    let na = Complex64::new(s.n_a, 0.0);
    let nb = Complex64::new(s.n_b, 0.0);
    let d = s.c_adb;
    let pp = s.c_ab;
    let qa = s.c_aa;
    let qb = s.c_bb;
    let loss = 0.5 * (p.kappa + p.gamma);

    let dna = i * (g * d - gc * d.conj() + g * pp.conj() - gc * pp) - p.kappa * na;
    let dnb = i * (-g * d + gc * d.conj() + g * pp.conj() - gc * pp) - p.gamma * nb + p.gamma * p.n_th;
    let dd = (i * (delta - omega) - loss) * d + i * (gc * na - gc * nb + g * qa.conj() - gc * qb);
    let dp = -(i * (delta + omega) + loss) * pp + i * (g * na + g * nb + g + gc * qa + g * qb);
    let dqa = -(2.0 * i * delta + p.kappa) * qa + 2.0 * i * (g * d.conj() + g * pp);
    let dqb = -(2.0 * i * omega + p.gamma) * qb + 2.0 * i * (g * d + gc * pp);

    debug_assert!(libm::fabs(dna.im) <= 1e-12 * (1.0 + dna.norm()), "dn_a/dt not real: {dna}");
    debug_assert!(libm::fabs(dnb.im) <= 1e-12 * (1.0 + dnb.norm()), "dn_b/dt not real: {dnb}");

    MomentState {
        n_a: dna.re,
        n_b: dnb.re,
        c_adb: dd,
        c_ab: dp,
        c_aa: dqa,
        c_bb: dqb,
    }
}

/// Thermal phonons, everything else in vacuum.
pub fn default_initial_state(n_th: f64) -> Result<MomentState> {
    if !(n_th >= 0.0) {
        return Err(Error::InvalidParameter(alloc::format!(
            "thermal occupation must be non-negative, got {n_th}"
        )));
    }
    Ok(MomentState {
        n_b: n_th,
        ..MomentState::default()
    })
}

struct MomentOde<'a> {
    p: &'a SystemParams,
    m: &'a Modulation,
}

impl OdeSystem for MomentOde<'_> {
    fn dim(&self) -> usize {
        MOMENT_DIM
    }

    fn rhs(&self, t: f64, y: &[f64], dy: &mut [f64]) {
        let d = moment_derivative(&MomentState::from_slice(y), t, self.p, self.m);
        dy.copy_from_slice(&d.to_array());
    }
}

/// Step cap that resolves the fastest active modulation.
pub(crate) fn effective_max_step(max_step: f64, m: &Modulation) -> f64 {
    match m.max_active_frequency() {
        Some(nu) => max_step.min(2.0 * PI / nu / STEPS_PER_PERIOD),
        None => max_step,
    }
}

/// Integrates the moment equations from `init` over [0, cfg.t_end].
pub fn integrate_moments(
    p: &SystemParams,
    m: &Modulation,
    init: &MomentState,
    cfg: &IntegrationConfig,
) -> Result<Trajectory> {
    cfg.validate()?;
    let opts = OdeOptions {
        rtol: cfg.rtol,
        atol: cfg.atol,
        max_step: effective_max_step(cfg.max_step, m),
    };
    let threshold = cfg.divergence_factor * p.n_th.max(1.0);
    let capacity = (cfg.t_end / cfg.sample_stride) as usize + 2;
    let mut tr = Trajectory {
        times: Vec::with_capacity(capacity.min(1 << 24)),
        states: Vec::with_capacity(capacity.min(1 << 24)),
        params: *p,
        modulation: *m,
        tolerances: (cfg.rtol, cfg.atol),
        diverged: false,
    };

    let mut y = init.to_array();
    let sys = MomentOde { p, m };
    let mut diverged = false;
    let result = ode::integrate(&sys, 0.0, &mut y, cfg.t_end, cfg.sample_stride, &opts, |t, y| {
        let s = MomentState::from_slice(y);
        tr.times.push(t);
        tr.states.push(s);
        if !(s.n_b <= threshold) || !s.max_abs().is_finite() {
            diverged = true;
            Control::Stop
        } else {
            Control::Continue
        }
    });
    tr.diverged = diverged;

    match result {
        Ok(_) => {
            if tr.len() < 2 {
                // Blew up before the first sample after t = 0.
                return Err(Error::Numeric("trajectory diverged before the first sample".into()));
            }
            Ok(tr)
        }
        Err(ode::StepUnderflow(time)) => Err(Error::IntegrationFailure {
            time,
            partial: (tr.len() >= 2).then(|| Box::new(tr)),
        }),
    }
}

/// Time average of n_b over the trailing `window_fraction` of the run. With
/// commensurate modulation the window is cut to whole common periods.
pub fn final_mpn_average(tr: &Trajectory, window_fraction: f64) -> Result<f64> {
    if !(window_fraction > 0.0 && window_fraction <= 0.5) {
        return Err(Error::InvalidParameter(alloc::format!(
            "window fraction must lie in (0, 0.5], got {window_fraction}"
        )));
    }
    if tr.diverged {
        return Err(Error::NoSteadyState("trajectory diverged".into()));
    }
    if tr.len() < 2 {
        return Err(Error::InsufficientData("need at least two samples".into()));
    }
    let t_first = tr.times[0];
    let t_last = tr.final_time();
    let mut width = window_fraction * (t_last - t_first);
    if tr.modulation.is_active() {
        let period = tr
            .modulation
            .common_period()
            .unwrap_or(2.0 * PI / tr.modulation.max_active_frequency().unwrap_or(1.0));
        if width < period * (1.0 - 1e-9) {
            return Err(Error::InsufficientData(alloc::format!(
                "averaging window {width} is shorter than the modulation period {period}"
            )));
        }
        if tr.modulation.common_period().is_some() {
            width = libm::floor(width / period + 1e-9) * period;
        }
    }
    let t_start = t_last - width;
    Ok(time_average(&tr.times, tr.states.iter().map(|s| s.n_b), t_start))
}

/// Trapezoidal mean of a sampled signal over [t_start, last time].
fn time_average(times: &[f64], values: impl Iterator<Item = f64>, t_start: f64) -> f64 {
    let values: Vec<f64> = values.collect();
    let n = times.len();
    let t_end = times[n - 1];
    if t_end - t_start <= 0.0 {
        return values[n - 1];
    }
    let first = times.partition_point(|&t| t < t_start);
    let mut acc = 0.0;
    if first > 0 {
        let (t0, t1) = (times[first - 1], times[first]);
        let w = (t_start - t0) / (t1 - t0);
        let v_start = values[first - 1] + w * (values[first] - values[first - 1]);
        acc += 0.5 * (v_start + values[first]) * (t1 - t_start);
    }
    for j in first..n - 1 {
        acc += 0.5 * (values[j] + values[j + 1]) * (times[j + 1] - times[j]);
    }
    acc / (t_end - t_start)
}

/// Whether the phonon number has run away: it exceeds the threshold and is
/// still growing over the last tenth of the run.
pub fn detect_divergence(tr: &Trajectory, threshold_factor: f64) -> bool {
    assert!(threshold_factor > 1.0, "threshold factor must exceed one");
    if tr.len() < 2 {
        return false;
    }
    let threshold = threshold_factor * tr.params.n_th.max(1.0);
    let peak = tr.n_b().fold(f64::NEG_INFINITY, |a, b| if b.is_nan() { f64::INFINITY } else { a.max(b) });
    if !(peak > threshold) {
        return false;
    }
    let t0 = tr.times[0];
    let t_ref = t0 + 0.9 * (tr.final_time() - t0);
    let idx = tr.times.partition_point(|&t| t < t_ref).min(tr.len() - 1);
    let last = tr.final_state().n_b;
    !(last <= tr.states[idx].n_b)
}

/// Smallest eigenvalue of the Gram matrix ⟨X_i†X_j⟩ (X = δa, δb, δa†, δb†).
/// Non-negative for physical states.
pub fn physicality_margin(s: &MomentState) -> f64 {
    let k = s.gram_matrix();
    let mut flat = [Complex64::new(0.0, 0.0); 16];
    for r in 0..4 {
        for c in 0..4 {
            flat[r * 4 + c] = k[r][c];
        }
    }
    linalg::hermitian_min_eigenvalue(&flat, 4)
}
