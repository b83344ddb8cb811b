//! Parameter types and the time-dependent detunings of the linearized model.
//!
//! Every frequency and rate is expressed in units of the bare mechanical
//! frequency, which is therefore fixed to one and never stored. Times are in
//! units of its inverse.

use core::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Largest denominator accepted when looking for a common modulation period.
pub const MAX_PERIOD_DENOMINATOR: u32 = 64;

/// Static rates of the linearized optomechanical system.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SystemParams {
    /// Effective cavity detuning Δ′_c.
    pub delta_c_prime: f64,
    /// Linearized coupling G. Its phase enters the moment equations.
    pub g_lin: Complex64,
    pub kappa: f64,
    pub gamma: f64,
    pub n_th: f64,
}

impl SystemParams {
    pub fn new(delta_c_prime: f64, g_lin: Complex64, kappa: f64, gamma: f64, n_th: f64) -> Result<Self> {
        let finite = [delta_c_prime, g_lin.re, g_lin.im, kappa, gamma, n_th]
            .iter()
            .all(|v| v.is_finite());
        if !finite {
            return Err(Error::InvalidParameter("system parameters must be finite".into()));
        }
        if kappa < 0.0 || gamma < 0.0 || n_th < 0.0 {
            return Err(Error::InvalidParameter(
                "kappa, gamma and n_th must be non-negative".into(),
            ));
        }
        Ok(SystemParams {
            delta_c_prime,
            g_lin,
            kappa,
            gamma,
            n_th,
        })
    }

    /// Real, positive coupling on the red sideband (Δ′_c = ω_m).
    pub fn red_sideband(g: f64, kappa: f64, gamma: f64, n_th: f64) -> Result<Self> {
        Self::new(1.0, Complex64::new(g, 0.0), kappa, gamma, n_th)
    }

    /// True when both baths are switched off; such a system has no steady state.
    pub fn is_closed(&self) -> bool {
        self.kappa == 0.0 && self.gamma == 0.0
    }

    pub fn g_abs_sq(&self) -> f64 {
        self.g_lin.norm_sqr()
    }

    pub fn with_coupling(mut self, g: Complex64) -> Self {
        self.g_lin = g;
        self
    }
}

/// Frequency modulation of the optical (index 1) and mechanical (index 2)
/// frequencies: ½ξ₁ν₁cos(ν₁t) and ½ξ₂ν₂cos(ν₂t + θ).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Modulation {
    pub xi1: f64,
    pub nu1: f64,
    pub xi2: f64,
    pub nu2: f64,
    pub theta: f64,
}

impl Modulation {
    pub fn new(xi1: f64, nu1: f64, xi2: f64, nu2: f64, theta: f64) -> Result<Self> {
        if ![xi1, nu1, xi2, nu2, theta].iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidParameter("modulation parameters must be finite".into()));
        }
        if xi1 < 0.0 || xi2 < 0.0 {
            return Err(Error::InvalidParameter("modulation amplitudes must be non-negative".into()));
        }
        if nu1 <= 0.0 || nu2 <= 0.0 {
            return Err(Error::InvalidParameter("modulation frequencies must be positive".into()));
        }
        Ok(Modulation {
            xi1,
            nu1,
            xi2,
            nu2,
            theta,
        })
    }

    /// Modulation switched off. The frequencies are placeholders.
    pub fn none() -> Self {
        Modulation {
            xi1: 0.0,
            nu1: 1.0,
            xi2: 0.0,
            nu2: 1.0,
            theta: 0.0,
        }
    }

    pub fn is_active(&self) -> bool {
        self.xi1 != 0.0 || self.xi2 != 0.0
    }

    pub fn is_synchronous(&self) -> bool {
        self.xi1 == self.xi2 && self.nu1 == self.nu2 && self.theta == 0.0
    }

    /// Fastest modulation frequency among the active drives.
    pub fn max_active_frequency(&self) -> Option<f64> {
        match (self.xi1 != 0.0, self.xi2 != 0.0) {
            (false, false) => None,
            (true, false) => Some(self.nu1),
            (false, true) => Some(self.nu2),
            (true, true) => Some(self.nu1.max(self.nu2)),
        }
    }

    /// Smallest common period of the active drives, if the frequencies are
    /// commensurate with denominator at most [`MAX_PERIOD_DENOMINATOR`].
    pub fn common_period(&self) -> Option<f64> {
        match (self.xi1 != 0.0, self.xi2 != 0.0) {
            (false, false) => None,
            (true, false) => Some(2.0 * PI / self.nu1),
            (false, true) => Some(2.0 * PI / self.nu2),
            (true, true) => {
                let ratio = self.nu2 / self.nu1;
                (1..=MAX_PERIOD_DENOMINATOR).find_map(|q| {
                    let p = libm::round(ratio * q as f64);
                    if p >= 1.0 && libm::fabs(ratio * q as f64 - p) <= 1e-9 * ratio * q as f64 {
                        Some(2.0 * PI * q as f64 / self.nu1)
                    } else {
                        None
                    }
                })
            }
        }
    }
}

/// Synchronous modulation of both modes with amplitude `xi` and frequency `nu`.
pub fn make_synchronous(xi: f64, nu: f64) -> Result<Modulation> {
    if !(nu > 0.0) {
        return Err(Error::InvalidParameter(alloc::format!(
            "modulation frequency must be positive, got {nu}"
        )));
    }
    Modulation::new(xi, nu, xi, nu, 0.0)
}

/// Instantaneous cavity detuning Δ(t) and mechanical frequency Ω_m(t).
#[inline]
pub fn renormalized_detunings(p: &SystemParams, m: &Modulation, t: f64) -> (f64, f64) {
    let delta = p.delta_c_prime + 0.5 * m.xi1 * m.nu1 * libm::cos(m.nu1 * t);
    let omega_m = 1.0 + 0.5 * m.xi2 * m.nu2 * libm::cos(m.nu2 * t + m.theta);
    (delta, omega_m)
}

/// The six second-order moments of the fluctuation operators.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct MomentState {
    /// ⟨δa†δa⟩
    pub n_a: f64,
    /// ⟨δb†δb⟩
    pub n_b: f64,
    /// ⟨δa†δb⟩
    pub c_adb: Complex64,
    /// ⟨δaδb⟩
    pub c_ab: Complex64,
    /// ⟨δa²⟩
    pub c_aa: Complex64,
    /// ⟨δb²⟩
    pub c_bb: Complex64,
}

/// Number of real degrees of freedom in [`MomentState`].
pub const MOMENT_DIM: usize = 10;

impl MomentState {
    /// Layout: n_a, n_b, Re/Im ⟨a†b⟩, Re/Im ⟨ab⟩, Re/Im ⟨a²⟩, Re/Im ⟨b²⟩.
    pub fn to_array(&self) -> [f64; MOMENT_DIM] {
        [
            self.n_a,
            self.n_b,
            self.c_adb.re,
            self.c_adb.im,
            self.c_ab.re,
            self.c_ab.im,
            self.c_aa.re,
            self.c_aa.im,
            self.c_bb.re,
            self.c_bb.im,
        ]
    }

    pub fn from_slice(x: &[f64]) -> Self {
        assert!(x.len() >= MOMENT_DIM, "moment vector needs {MOMENT_DIM} entries");
        MomentState {
            n_a: x[0],
            n_b: x[1],
            c_adb: Complex64::new(x[2], x[3]),
            c_ab: Complex64::new(x[4], x[5]),
            c_aa: Complex64::new(x[6], x[7]),
            c_bb: Complex64::new(x[8], x[9]),
        }
    }

    /// Largest absolute value among the real components.
    pub fn max_abs(&self) -> f64 {
        self.to_array().iter().fold(0.0, |acc, v| acc.max(libm::fabs(*v)))
    }

    /// Hermitian Gram matrix K_ij = ⟨X_i† X_j⟩ with X = (δa, δb, δa†, δb†).
    /// It is positive semidefinite for every physical state, which is the
    /// uncertainty relation for the covariance matrix.
    pub fn gram_matrix(&self) -> [[Complex64; 4]; 4] {
        let one = Complex64::new(1.0, 0.0);
        let na = Complex64::new(self.n_a, 0.0);
        let nb = Complex64::new(self.n_b, 0.0);
        let d = self.c_adb;
        let p = self.c_ab;
        let qa = self.c_aa;
        let qb = self.c_bb;
        [
            [na, d, qa.conj(), p.conj()],
            [d.conj(), nb, p.conj(), qb.conj()],
            [qa, p, na + one, d.conj()],
            [p, qb, d, nb + one],
        ]
    }
}

/// Bare parameters of the driven system before linearization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FullPhysicalParams {
    /// Δ_c = ω_c − ω_l.
    pub omega_c_detuning: f64,
    pub g_single: f64,
    pub drive: Complex64,
    pub kappa: f64,
    pub gamma: f64,
}

impl FullPhysicalParams {
    pub fn new(omega_c_detuning: f64, g_single: f64, drive: Complex64, kappa: f64, gamma: f64) -> Result<Self> {
        if g_single < 0.0 {
            return Err(Error::InvalidParameter("single-photon coupling must be non-negative".into()));
        }
        if kappa < 0.0 || gamma < 0.0 {
            return Err(Error::InvalidParameter("kappa and gamma must be non-negative".into()));
        }
        Ok(FullPhysicalParams {
            omega_c_detuning,
            g_single,
            drive,
            kappa,
            gamma,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn synchronous_copies_fields() {
        let m = make_synchronous(2.4048, 30.0).unwrap();
        assert_eq!(m, Modulation::new(2.4048, 30.0, 2.4048, 30.0, 0.0).unwrap());
        assert!(m.is_synchronous());
        assert!(!make_synchronous(0.0, 5.0).unwrap().is_active());
        let small = make_synchronous(3.8317, 2.0).unwrap();
        assert_eq!((small.xi1, small.nu2), (3.8317, 2.0));
    }

    #[test]
    fn nonpositive_frequency_rejected() {
        assert!(matches!(make_synchronous(1.0, 0.0), Err(Error::InvalidParameter(_))));
        assert!(matches!(make_synchronous(1.0, -3.0), Err(Error::InvalidParameter(_))));
    }

    #[test]
    fn negative_rates_rejected() {
        assert!(SystemParams::red_sideband(0.1, -0.1, 0.0, 0.0).is_err());
        assert!(SystemParams::red_sideband(0.1, 0.1, 0.0, -1.0).is_err());
        let closed = SystemParams::red_sideband(0.1, 0.0, 0.0, 0.0).unwrap();
        assert!(closed.is_closed());
    }

    #[test]
    fn detuning_examples() {
        let p = SystemParams::red_sideband(0.1, 0.1, 1e-5, 1e3).unwrap();
        assert_eq!(renormalized_detunings(&p, &Modulation::none(), 17.3), (1.0, 1.0));
        let m = make_synchronous(2.0, 10.0).unwrap();
        assert_eq!(renormalized_detunings(&p, &m, 0.0), (11.0, 11.0));
        let (d, w) = renormalized_detunings(&p, &m, PI / 20.0);
        assert!((d - 1.0).abs() < 1e-14 && (w - 1.0).abs() < 1e-14);
    }

    #[test]
    fn common_period_of_three_halves() {
        let m = Modulation::new(1.0, 10.0, 3.8096, 15.0, PI / 4.0).unwrap();
        let t = m.common_period().unwrap();
        assert!((t - 2.0 * PI * 2.0 / 10.0).abs() < 1e-14);
        let irrational = Modulation::new(1.0, 10.0, 1.0, 10.0 * core::f64::consts::SQRT_2, 0.0).unwrap();
        assert!(irrational.common_period().is_none());
        assert!(Modulation::none().common_period().is_none());
    }
}
