//! Dormand–Prince 5(4) integrator with proportional-integral step control.
//!
//! Output is produced on a uniform sample grid; steps are shortened to land
//! exactly on sample times so no interpolation is involved.

use alloc::vec;
use alloc::vec::Vec;

/// Right-hand side of a first-order system ẏ = f(t, y).
pub trait OdeSystem {
    fn dim(&self) -> usize;
    fn rhs(&self, t: f64, y: &[f64], dy: &mut [f64]);
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    pub max_step: f64,
}

/// What the sample observer wants the integrator to do next.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Control {
    Continue,
    Stop,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OdeStats {
    pub accepted: usize,
    pub rejected: usize,
    /// Time reached; equals the requested end unless the observer stopped early.
    pub t_final: f64,
    pub stopped: bool,
}

/// The step size underflowed at the contained time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepUnderflow(pub f64);

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

// Difference between the 5th- and 4th-order weights.
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const SAFETY: f64 = 0.9;
const FAC_MIN: f64 = 0.2;
const FAC_MAX: f64 = 10.0;
const BETA: f64 = 0.04;
const EXPO1: f64 = 0.2 - BETA * 0.75;

struct Workspace {
    k: [Vec<f64>; 7],
    ytmp: Vec<f64>,
    ynew: Vec<f64>,
}

/// Integrates `y` in place from `t0` to `t_end`.
///
/// `observer` is called at `t0`, at every `t0 + i * sample_stride` and at
/// `t_end`; returning [`Control::Stop`] ends the integration at that sample.
pub fn integrate<S, F>(
    sys: &S,
    t0: f64,
    y: &mut [f64],
    t_end: f64,
    sample_stride: f64,
    opts: &OdeOptions,
    mut observer: F,
) -> Result<OdeStats, StepUnderflow>
where
    S: OdeSystem + ?Sized,
    F: FnMut(f64, &[f64]) -> Control,
{
    let n = sys.dim();
    assert_eq!(y.len(), n, "state length does not match system dimension");
    assert!(t_end > t0 && sample_stride > 0.0 && opts.max_step > 0.0);

    let mut stats = OdeStats {
        accepted: 0,
        rejected: 0,
        t_final: t0,
        stopped: false,
    };
    if observer(t0, y) == Control::Stop {
        stats.stopped = true;
        return Ok(stats);
    }

    let mut ws = Workspace {
        k: core::array::from_fn(|_| vec![0.0; n]),
        ytmp: vec![0.0; n],
        ynew: vec![0.0; n],
    };

    let mut t = t0;
    sys.rhs(t, y, &mut ws.k[0]);
    let mut h = initial_step(sys, t, y, opts, &mut ws).min(sample_stride);
    let mut err_old: f64 = 1e-4;
    let mut sample_index: u64 = 1;
    let mut reject_streak = false;

    loop {
        let next_sample = (t0 + sample_index as f64 * sample_stride).min(t_end);
        let room = next_sample - t;
        // Snap to the sample when the remainder is a rounding artefact.
        let lands = h >= room * (1.0 - 1e-12);
        let h_step = if lands { room } else { h };

        if h_step <= 16.0 * f64::EPSILON * libm::fabs(t).max(1.0) {
            return Err(StepUnderflow(t));
        }

        let err = dopri_step(sys, t, y, h_step, opts, &mut ws);

        if err <= 1.0 {
            let fac11 = libm::pow(err.max(1e-300), EXPO1);
            let mut fac = fac11 / libm::pow(err_old, BETA);
            fac = (fac / SAFETY).clamp(1.0 / FAC_MAX, 1.0 / FAC_MIN);
            let mut h_new = h_step / fac;
            if reject_streak {
                h_new = h_new.min(h_step);
            }
            err_old = err.max(1e-4);
            reject_streak = false;

            t = if lands { next_sample } else { t + h_step };
            y.copy_from_slice(&ws.ynew);
            ws.k.swap(0, 6);
            stats.accepted += 1;
            stats.t_final = t;

            // A clamped step says nothing about the achievable step size.
            h = if lands { h_new.max(h) } else { h_new };
            h = h.min(opts.max_step);

            if lands {
                sample_index += 1;
                if observer(t, y) == Control::Stop {
                    stats.stopped = true;
                    return Ok(stats);
                }
                if next_sample >= t_end {
                    return Ok(stats);
                }
            }
        } else {
            let fac11 = libm::pow(err, EXPO1);
            h = h_step / (fac11 / SAFETY).min(1.0 / FAC_MIN);
            reject_streak = true;
            stats.rejected += 1;
        }
    }
}

/// One Dormand–Prince step from (t, y) with `k[0]` = f(t, y) already set.
/// Leaves the candidate in `ynew`, its derivative in `k[6]`, and returns the
/// scaled RMS error estimate.
fn dopri_step<S: OdeSystem + ?Sized>(
    sys: &S,
    t: f64,
    y: &[f64],
    h: f64,
    opts: &OdeOptions,
    ws: &mut Workspace,
) -> f64 {
    let n = y.len();
    let Workspace { k, ytmp, ynew } = ws;
    let [k1, k2, k3, k4, k5, k6, k7] = k;

    for i in 0..n {
        ytmp[i] = y[i] + h * A21 * k1[i];
    }
    sys.rhs(t + C2 * h, ytmp, k2);
    for i in 0..n {
        ytmp[i] = y[i] + h * (A31 * k1[i] + A32 * k2[i]);
    }
    sys.rhs(t + C3 * h, ytmp, k3);
    for i in 0..n {
        ytmp[i] = y[i] + h * (A41 * k1[i] + A42 * k2[i] + A43 * k3[i]);
    }
    sys.rhs(t + C4 * h, ytmp, k4);
    for i in 0..n {
        ytmp[i] = y[i] + h * (A51 * k1[i] + A52 * k2[i] + A53 * k3[i] + A54 * k4[i]);
    }
    sys.rhs(t + C5 * h, ytmp, k5);
    for i in 0..n {
        ytmp[i] = y[i] + h * (A61 * k1[i] + A62 * k2[i] + A63 * k3[i] + A64 * k4[i] + A65 * k5[i]);
    }
    sys.rhs(t + h, ytmp, k6);
    for i in 0..n {
        ynew[i] = y[i] + h * (A71 * k1[i] + A73 * k3[i] + A74 * k4[i] + A75 * k5[i] + A76 * k6[i]);
    }
    sys.rhs(t + h, ynew, k7);

    let mut acc = 0.0;
    for i in 0..n {
        let e = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
        let scale = opts.atol + opts.rtol * libm::fabs(y[i]).max(libm::fabs(ynew[i]));
        let r = e / scale;
        acc += r * r;
    }
    let err = libm::sqrt(acc / n as f64);
    if err.is_finite() {
        err
    } else {
        f64::INFINITY
    }
}

/// Starting step estimate (Hairer, Nørsett & Wanner, II.4).
fn initial_step<S: OdeSystem + ?Sized>(
    sys: &S,
    t: f64,
    y: &[f64],
    opts: &OdeOptions,
    ws: &mut Workspace,
) -> f64 {
    let n = y.len();
    let f0 = &ws.k[0];
    let mut d0 = 0.0;
    let mut d1 = 0.0;
    for i in 0..n {
        let sc = opts.atol + opts.rtol * libm::fabs(y[i]);
        d0 += (y[i] / sc) * (y[i] / sc);
        d1 += (f0[i] / sc) * (f0[i] / sc);
    }
    d0 = libm::sqrt(d0 / n as f64);
    d1 = libm::sqrt(d1 / n as f64);
    let mut h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    h0 = h0.min(opts.max_step);

    for i in 0..n {
        ws.ytmp[i] = y[i] + h0 * f0[i];
    }
    let (ytmp, k1) = (&ws.ytmp, &mut ws.k[1]);
    sys.rhs(t + h0, ytmp, k1);
    let mut d2 = 0.0;
    for (i, yi) in y.iter().enumerate().take(n) {
        let sc = opts.atol + opts.rtol * libm::fabs(*yi);
        let v = (ws.k[1][i] - ws.k[0][i]) / sc;
        d2 += v * v;
    }
    d2 = libm::sqrt(d2 / n as f64) / h0;
    let dmax = d1.max(d2);
    let h1 = if dmax <= 1e-15 {
        (h0 * 1e-3).max(1e-6)
    } else {
        libm::pow(0.01 / dmax, 0.2)
    };
    (100.0 * h0).min(h1).min(opts.max_step)
}
