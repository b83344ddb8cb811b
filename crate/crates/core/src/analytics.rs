//! Closed-form cooling limits, sideband structure, stability bounds and the
//! mean-field equations of the driven system.

use alloc::vec::Vec;

use num_complex::Complex64;

use crate::bessel::{bessel_j, bessel_zero};
use crate::dynamics::{effective_max_step, IntegrationConfig};
use crate::error::{Error, Result};
use crate::model::{FullPhysicalParams, Modulation, SystemParams};
use crate::ode::{self, Control, OdeOptions, OdeSystem};

/// Below this cooperativity the strong-cooperativity formula is flagged.
pub const COOPERATIVITY_WARNING: f64 = 100.0;

/// One Stokes (two-mode-squeezing) sideband of the modulated interaction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SidebandLine {
    pub k: i32,
    /// Δ′_c + ω_m + kν.
    pub detuning: f64,
    /// |G J_k(ξ)|
    pub coupling_mag: f64,
    /// coupling / |detuning|; +∞ on exact resonance with nonzero coupling.
    pub suppression_ratio: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoolingLimits {
    pub n_lim_total: f64,
    pub classical_term: f64,
    pub quantum_term: f64,
    pub a_plus: f64,
    pub a_minus: f64,
    pub gamma_opt: f64,
    pub n_f: f64,
    pub n_c: f64,
    pub cooperativity: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SteadyMpn {
    pub classical_term: f64,
    pub quantum_term: f64,
    pub total: f64,
    /// Cooperativity is below [`COOPERATIVITY_WARNING`]; the formula assumes C ≫ 1.
    pub low_cooperativity: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanFieldState {
    pub alpha: Complex64,
    pub beta: Complex64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanFieldSample {
    pub t: f64,
    pub state: MeanFieldState,
    /// G(t) = g α(t)
    pub g_lin: Complex64,
    /// Δ′_c(t) = Δ_c − g(β + β*)
    pub delta_c_prime: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MeanFieldTrajectory {
    pub samples: Vec<MeanFieldSample>,
    pub diverged: bool,
}

/// Modulation index k₀ whose Stokes detuning 2ω_m + kν is smallest, and the
/// first zero ξ₀ of J_{|k₀|} that switches that sideband off.
pub fn select_modulation_amplitude(nu: f64) -> Result<(i32, f64)> {
    if !(nu > 0.0) {
        return Err(Error::InvalidParameter(alloc::format!(
            "modulation frequency must be positive, got {nu}"
        )));
    }
    let guess = -2.0 / nu;
    let lo = libm::floor(guess) as i64;
    let mut best: Option<(i64, f64)> = None;
    for k in (lo - 1)..=(lo + 2) {
        let d = libm::fabs(2.0 + k as f64 * nu);
        best = match best {
            None => Some((k, d)),
            Some((bk, bd)) => {
                let better = d < bd
                    || (d == bd && (k.abs() < bk.abs() || (k.abs() == bk.abs() && k < bk)));
                if better {
                    Some((k, d))
                } else {
                    Some((bk, bd))
                }
            }
        };
    }
    let (k0, _) = best.expect("candidate set is non-empty");
    let k0 = i32::try_from(k0).map_err(|_| Error::UnsupportedRange("sideband index overflow".into()))?;
    let xi0 = bessel_zero(k0.unsigned_abs(), 1)?;
    Ok((k0, xi0))
}

/// Stokes sidebands k ∈ [−k_range, k_range] of a synchronous modulation.
pub fn sideband_table(p: &SystemParams, m: &Modulation, k_range: u32) -> Result<Vec<SidebandLine>> {
    if !m.is_synchronous() {
        return Err(Error::UnsupportedConfiguration(
            "sideband table needs synchronous modulation; use asynchronous_effective_couplings".into(),
        ));
    }
    if k_range == 0 {
        return Err(Error::InvalidParameter("k_range must be at least 1".into()));
    }
    let g = p.g_lin.norm();
    let kr = k_range as i32;
    (-kr..=kr)
        .map(|k| {
            let detuning = p.delta_c_prime + 1.0 + k as f64 * m.nu1;
            let coupling_mag = g * libm::fabs(bessel_j(k, m.xi1)?);
            let suppression_ratio = if detuning == 0.0 {
                if coupling_mag == 0.0 {
                    0.0
                } else {
                    f64::INFINITY
                }
            } else {
                coupling_mag / libm::fabs(detuning)
            };
            Ok(SidebandLine {
                k,
                detuning,
                coupling_mag,
                suppression_ratio,
            })
        })
        .collect()
}

/// Steady phonon number without modulation on the red sideband, valid in the
/// whole stable region for large cooperativity.
pub fn steady_mpn_analytic(p: &SystemParams) -> Result<SteadyMpn> {
    if libm::fabs(p.delta_c_prime - 1.0) > 1e-12 {
        return Err(Error::InvalidParameter(alloc::format!(
            "closed form needs Δ′_c = ω_m, got {}",
            p.delta_c_prime
        )));
    }
    let g2 = p.g_abs_sq();
    let k2 = p.kappa * p.kappa;
    let denom = 4.0 + k2 - 16.0 * g2;
    if !(denom > 0.0) {
        return Err(Error::InstabilityDomain {
            g_sq: g2,
            bound: 0.25 + k2 / 16.0,
        });
    }
    let classical_term = if p.gamma == 0.0 || p.n_th == 0.0 {
        0.0
    } else {
        (4.0 * g2 + k2) / (4.0 * g2 * (p.kappa + p.gamma)) * p.gamma * p.n_th
    };
    let quantum_term = ((4.0 - k2) * (8.0 * g2 + k2) + 2.0 * k2 * k2) / (16.0 * denom);
    Ok(SteadyMpn {
        classical_term,
        quantum_term,
        total: classical_term + quantum_term,
        low_cooperativity: cooperativity(p) < COOPERATIVITY_WARNING,
    })
}

/// C = 4|G|²/(γκ).
pub fn cooperativity(p: &SystemParams) -> f64 {
    4.0 * p.g_abs_sq() / (p.gamma * p.kappa)
}

/// Phonon emission and absorption rates (A₋, A₊) at arbitrary detuning.
pub fn conventional_rates(p: &SystemParams) -> (f64, f64) {
    let g2 = p.g_abs_sq();
    let k2q = 0.25 * p.kappa * p.kappa;
    let dm = 1.0 - p.delta_c_prime;
    let dp = -1.0 - p.delta_c_prime;
    let a_minus = g2 * p.kappa / (dm * dm + k2q);
    let a_plus = g2 * p.kappa / (dp * dp + k2q);
    (a_minus, a_plus)
}

/// Weak-coupling cooling limit from the phonon rate equations, bundled with
/// the strong-cooperativity terms when those are defined.
pub fn conventional_limits(p: &SystemParams) -> Result<CoolingLimits> {
    if !(p.kappa > 0.0) {
        return Err(Error::InvalidParameter("conventional limits need kappa > 0".into()));
    }
    let (a_minus, a_plus) = conventional_rates(p);
    let gamma_opt = a_minus - a_plus;
    if !(gamma_opt + p.gamma > 0.0) {
        return Err(Error::HeatingRegime {
            net_damping: gamma_opt + p.gamma,
        });
    }
    let n_f = (a_plus + p.n_th * p.gamma) / (gamma_opt + p.gamma);
    let n_c = if gamma_opt > 0.0 {
        a_plus / gamma_opt
    } else {
        f64::INFINITY
    };
    let (classical_term, quantum_term) = match steady_mpn_analytic(p) {
        Ok(s) => (s.classical_term, s.quantum_term),
        Err(_) => (f64::NAN, f64::NAN),
    };
    Ok(CoolingLimits {
        n_lim_total: classical_term + quantum_term,
        classical_term,
        quantum_term,
        a_plus,
        a_minus,
        gamma_opt,
        n_f,
        n_c,
        cooperativity: cooperativity(p),
    })
}

/// Stability of the unmodulated red-sideband system: |G|² < 1/4 + κ²/16.
pub fn routh_hurwitz_stable(p: &SystemParams) -> bool {
    p.g_abs_sq() < 0.25 + p.kappa * p.kappa / 16.0
}

/// Relative reduction (n_without − n_with) / n_without.
pub fn improving_rate(n_without: f64, n_with: f64) -> f64 {
    debug_assert!(n_without > 0.0);
    (n_without - n_with) / n_without
}

/// Beam-splitter and two-mode-squeezing couplings of sideband k under
/// unequal amplitudes: G J_k((ξ₁−ξ₂)/2) and G J_k((ξ₁+ξ₂)/2).
pub fn asynchronous_effective_couplings(g: Complex64, xi1: f64, xi2: f64, k: i32) -> Result<(Complex64, Complex64)> {
    let bs = g * bessel_j(k, 0.5 * (xi1 - xi2))?;
    let tms = g * bessel_j(k, 0.5 * (xi1 + xi2))?;
    Ok((bs, tms))
}

struct MeanFieldOde<'a> {
    fp: &'a FullPhysicalParams,
    m: &'a Modulation,
}

impl OdeSystem for MeanFieldOde<'_> {
    fn dim(&self) -> usize {
        4
    }

    fn rhs(&self, t: f64, y: &[f64], dy: &mut [f64]) {
        let i = Complex64::i();
        let alpha = Complex64::new(y[0], y[1]);
        let beta = Complex64::new(y[2], y[3]);
        let fp = self.fp;
        let m = self.m;
        let mod_a = 0.5 * m.xi1 * m.nu1 * libm::cos(m.nu1 * t);
        let mod_b = 0.5 * m.xi2 * m.nu2 * libm::cos(m.nu2 * t + m.theta);
        let delta_eff = fp.omega_c_detuning - fp.g_single * 2.0 * beta.re;
        let da = -i * delta_eff * alpha - 0.5 * fp.kappa * alpha - i * fp.drive - i * mod_a * alpha;
        let db = -i * beta - 0.5 * fp.gamma * beta + i * fp.g_single * alpha.norm_sqr() - i * mod_b * beta;
        dy[0] = da.re;
        dy[1] = da.im;
        dy[2] = db.re;
        dy[3] = db.im;
    }
}

/// Integrates the classical mean fields α, β of the driven system from
/// `init` and reports the linearized G and Δ′_c along the way.
pub fn mean_field_trajectory(
    fp: &FullPhysicalParams,
    m: &Modulation,
    init: MeanFieldState,
    cfg: &IntegrationConfig,
) -> Result<MeanFieldTrajectory> {
    cfg.validate()?;
    let opts = OdeOptions {
        rtol: cfg.rtol,
        atol: cfg.atol,
        max_step: effective_max_step(cfg.max_step, m),
    };
    let sys = MeanFieldOde { fp, m };
    let mut y = [init.alpha.re, init.alpha.im, init.beta.re, init.beta.im];
    let mut samples = Vec::new();
    let mut diverged = false;
    let bound = 1e150;
    let result = ode::integrate(&sys, 0.0, &mut y, cfg.t_end, cfg.sample_stride, &opts, |t, y| {
        let alpha = Complex64::new(y[0], y[1]);
        let beta = Complex64::new(y[2], y[3]);
        samples.push(MeanFieldSample {
            t,
            state: MeanFieldState { alpha, beta },
            g_lin: fp.g_single * alpha,
            delta_c_prime: fp.omega_c_detuning - fp.g_single * 2.0 * beta.re,
        });
        if y.iter().all(|v| libm::fabs(*v) < bound) {
            Control::Continue
        } else {
            diverged = true;
            Control::Stop
        }
    });
    match result {
        Ok(_) => Ok(MeanFieldTrajectory { samples, diverged }),
        Err(ode::StepUnderflow(time)) => {
            if diverged {
                Ok(MeanFieldTrajectory { samples, diverged })
            } else {
                Err(Error::IntegrationFailure { time, partial: None })
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn red(g: f64, kappa: f64, gamma: f64, n_th: f64) -> SystemParams {
        SystemParams::red_sideband(g, kappa, gamma, n_th).unwrap()
    }

    #[test]
    fn modulation_index_selection() {
        let (k, xi) = select_modulation_amplitude(30.0).unwrap();
        assert_eq!(k, 0);
        assert!((xi - 2.404826).abs() < 1e-6);
        let (k, xi) = select_modulation_amplitude(2.0).unwrap();
        assert_eq!(k, -1);
        assert!((xi - 3.8317).abs() < 1e-3);
        assert_eq!(select_modulation_amplitude(5.0).unwrap().0, 0);
        // |2 - 4| = |2 + 0| = 2: tie goes to the smaller |k|.
        assert_eq!(select_modulation_amplitude(4.0).unwrap().0, 0);
        // |2 - 1.6| = 0.4 is the closest line.
        assert_eq!(select_modulation_amplitude(1.6).unwrap().0, -1);
        assert_eq!(select_modulation_amplitude(0.5).unwrap().0, -4);
        assert!(select_modulation_amplitude(0.0).is_err());
    }

    #[test]
    fn sidebands_without_modulation() {
        let p = red(0.3, 0.1, 1e-5, 1e3);
        let m = crate::model::make_synchronous(0.0, 5.0).unwrap();
        let lines = sideband_table(&p, &m, 3).unwrap();
        assert_eq!(lines.len(), 7);
        for l in &lines {
            if l.k == 0 {
                assert!((l.suppression_ratio - 0.15).abs() < 1e-15);
            } else {
                assert_eq!(l.coupling_mag, 0.0);
            }
        }
    }

    #[test]
    fn sidebands_at_bessel_zero() {
        let p = red(0.5, 0.2, 1e-5, 1e3);
        let m = crate::model::make_synchronous(2.404826, 30.0).unwrap();
        let lines = sideband_table(&p, &m, 2).unwrap();
        assert!(lines.iter().find(|l| l.k == 0).unwrap().coupling_mag < 5e-7);

        let m = crate::model::make_synchronous(2.404826, 10.0).unwrap();
        let lines = sideband_table(&p, &m, 1).unwrap();
        let km1 = lines.iter().find(|l| l.k == -1).unwrap();
        assert_eq!(km1.detuning, -8.0);
        assert!((km1.coupling_mag - 0.5 * 0.5191).abs() < 1e-3);
    }

    #[test]
    fn sideband_resonance_is_infinite() {
        let p = red(0.3, 0.1, 1e-5, 1e3);
        let m = crate::model::make_synchronous(1.0, 2.0).unwrap();
        let lines = sideband_table(&p, &m, 1).unwrap();
        assert_eq!(lines[0].k, -1);
        assert_eq!(lines[0].suppression_ratio, f64::INFINITY);
        let async_m = Modulation::new(1.0, 10.0, 2.0, 10.0, 0.0).unwrap();
        assert!(matches!(sideband_table(&p, &async_m, 1), Err(Error::UnsupportedConfiguration(_))));
    }

    #[test]
    fn redefined_limit_table_value() {
        let s = steady_mpn_analytic(&red(0.02, 0.05, 1e-5, 1e3)).unwrap();
        assert!((s.total - 0.5128).abs() < 5e-4, "{}", s.total);
        assert!(!s.low_cooperativity);
        let s = steady_mpn_analytic(&red(0.5, 0.2, 1e-5, 1e3)).unwrap();
        assert!((s.total - 12.7).abs() < 0.1);
        assert!((s.total - 13.9419).abs() / 13.9419 < 0.1);
        assert!(matches!(
            steady_mpn_analytic(&red(0.6, 0.3, 1e-5, 1e3)),
            Err(Error::InstabilityDomain { .. })
        ));
        let weak = steady_mpn_analytic(&red(1e-3, 0.1, 1e-5, 1e3)).unwrap();
        assert!(weak.low_cooperativity);
    }

    #[test]
    fn conventional_rates_on_resonance() {
        let c = conventional_limits(&red(0.1, 0.1, 0.0, 0.0)).unwrap();
        assert!((c.a_minus - 0.4).abs() < 1e-15);
        assert!((c.a_plus - 0.001 / 4.0025).abs() < 1e-18);
        assert!((c.n_c - 6.25e-4).abs() < 1e-9);
        assert_eq!(c.n_f, c.n_c);
        assert!(conventional_limits(&red(0.1, 0.0, 0.0, 0.0)).is_err());
        let blue = SystemParams::new(-1.0, Complex64::new(0.1, 0.0), 0.1, 1e-5, 1e3).unwrap();
        assert!(matches!(conventional_limits(&blue), Err(Error::HeatingRegime { .. })));
    }

    #[test]
    fn stability_bound() {
        assert!(routh_hurwitz_stable(&red(0.5, 0.2, 1e-5, 1e3)));
        assert!(!routh_hurwitz_stable(&red(0.6, 0.3, 1e-5, 1e3)));
        assert!(routh_hurwitz_stable(&red(0.0, 0.0, 1e-5, 1e3)));
    }

    #[test]
    fn improving_rates() {
        assert!((improving_rate(0.5128, 0.5123) - 9.75e-4).abs() < 1e-6);
        assert!((improving_rate(0.1876, 0.1032) - 0.4499).abs() < 1e-4);
        assert_eq!(improving_rate(0.3, 0.3), 0.0);
    }

    #[test]
    fn asynchronous_couplings() {
        let g = Complex64::new(0.4, 0.0);
        let xi0 = bessel_zero(0, 1).unwrap();
        let (bs, tms) = asynchronous_effective_couplings(g, xi0, xi0, 0).unwrap();
        assert_eq!(bs, g);
        assert!(tms.norm() < 1e-12);
        let (bs1, tms1) = asynchronous_effective_couplings(g, xi0, xi0, 1).unwrap();
        assert_eq!(bs1.norm(), 0.0);
        assert!((tms1.re - 0.4 * bessel_j(1, xi0).unwrap()).abs() < 1e-15);
        // ξ₁ + ξ₂ = 2ξ₀ with unequal amplitudes still removes the k = 0 Stokes line.
        let (_, tms) = asynchronous_effective_couplings(g, 1.0, 2.0 * xi0 - 1.0, 0).unwrap();
        assert!(tms.norm() < 1e-12);
        // (ξ₁ − ξ₂)/2 = ξ₀ switches off the resonant beam splitter instead.
        let (bs, _) = asynchronous_effective_couplings(g, 2.0 * xi0 + 0.5, 0.5, 0).unwrap();
        assert!(bs.norm() < 1e-12);
    }
}
