//! The moment equations as an affine system ẋ = A(t)x + c on the real
//! 10-vector: exact steady state, spectral stability and Floquet monodromy.

use alloc::vec;
use alloc::vec::Vec;

use crate::dynamics::effective_max_step;
use crate::error::{Error, Result};
use crate::linalg;
use crate::model::{renormalized_detunings, MomentState, Modulation, SystemParams, MOMENT_DIM};
use crate::ode::{self, Control, OdeOptions, OdeSystem};

const N: usize = MOMENT_DIM;

/// Margin below one that the monodromy spectral radius must clear.
pub const FLOQUET_MARGIN: f64 = 1e-9;
pub const FLOQUET_RTOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct AffineSystem {
    /// Row-major 10×10 drift matrix.
    pub a_matrix: [f64; N * N],
    pub c_vector: [f64; N],
}

impl AffineSystem {
    pub fn apply(&self, x: &[f64; N]) -> [f64; N] {
        let mut out = self.c_vector;
        for (o, row) in out.iter_mut().zip(self.a_matrix.chunks_exact(N)) {
            *o += row.iter().zip(x).map(|(a, v)| a * v).sum::<f64>();
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralStability {
    pub max_re: f64,
    pub stable: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FloquetStability {
    pub spectral_radius: f64,
    pub stable: bool,
    pub period: f64,
}

/// Drift matrix and inhomogeneity at time `t`, written out entry by entry in
/// the layout of [`MomentState::to_array`].
pub fn build_affine(p: &SystemParams, m: &Modulation, t: f64) -> AffineSystem {
    let (delta, omega) = renormalized_detunings(p, m, t);
    let gr = p.g_lin.re;
    let gi = p.g_lin.im;
    let kappa = p.kappa;
    let gamma = p.gamma;
    let eta = 0.5 * (kappa + gamma);
    let w = delta - omega;
    let s = delta + omega;

    let mut a = [0.0; N * N];
    let mut set = |r: usize, c: usize, v: f64| a[r * N + c] += v;

    // n_a
    set(0, 0, -kappa);
    set(0, 2, -2.0 * gi);
    set(0, 3, -2.0 * gr);
    set(0, 4, -2.0 * gi);
    set(0, 5, 2.0 * gr);
    // n_b
    set(1, 1, -gamma);
    set(1, 2, 2.0 * gi);
    set(1, 3, 2.0 * gr);
    set(1, 4, -2.0 * gi);
    set(1, 5, 2.0 * gr);
    // ⟨a†b⟩
    set(2, 0, gi);
    set(2, 1, -gi);
    set(2, 2, -eta);
    set(2, 3, -w);
    set(2, 6, -gi);
    set(2, 7, gr);
    set(2, 8, -gi);
    set(2, 9, gr);
    set(3, 0, gr);
    set(3, 1, -gr);
    set(3, 2, w);
    set(3, 3, -eta);
    set(3, 6, gr);
    set(3, 7, gi);
    set(3, 8, -gr);
    set(3, 9, -gi);
    // ⟨ab⟩
    set(4, 0, -gi);
    set(4, 1, -gi);
    set(4, 4, -eta);
    set(4, 5, s);
    set(4, 6, gi);
    set(4, 7, -gr);
    set(4, 8, -gi);
    set(4, 9, -gr);
    set(5, 0, gr);
    set(5, 1, gr);
    set(5, 4, -s);
    set(5, 5, -eta);
    set(5, 6, gr);
    set(5, 7, gi);
    set(5, 8, gr);
    set(5, 9, -gi);
    // ⟨a²⟩
    set(6, 2, -2.0 * gi);
    set(6, 3, 2.0 * gr);
    set(6, 4, -2.0 * gi);
    set(6, 5, -2.0 * gr);
    set(6, 6, -kappa);
    set(6, 7, 2.0 * delta);
    set(7, 2, 2.0 * gr);
    set(7, 3, 2.0 * gi);
    set(7, 4, 2.0 * gr);
    set(7, 5, -2.0 * gi);
    set(7, 6, -2.0 * delta);
    set(7, 7, -kappa);
    // ⟨b²⟩
    set(8, 2, -2.0 * gi);
    set(8, 3, -2.0 * gr);
    set(8, 4, 2.0 * gi);
    set(8, 5, -2.0 * gr);
    set(8, 8, -gamma);
    set(8, 9, 2.0 * omega);
    set(9, 2, 2.0 * gr);
    set(9, 3, -2.0 * gi);
    set(9, 4, 2.0 * gr);
    set(9, 5, 2.0 * gi);
    set(9, 8, -2.0 * omega);
    set(9, 9, -gamma);

    let mut c = [0.0; N];
    c[1] = gamma * p.n_th;
    c[4] = -gi;
    c[5] = gr;
    AffineSystem { a_matrix: a, c_vector: c }
}

/// Spectral abscissa of the unmodulated drift matrix.
pub fn eigen_stability(p: &SystemParams) -> Result<SpectralStability> {
    let sys = build_affine(p, &Modulation::none(), 0.0);
    let max_re = linalg::spectral_abscissa(&sys.a_matrix, N)?;
    Ok(SpectralStability {
        max_re,
        stable: max_re < 0.0,
    })
}

/// Fixed point of the unmodulated moment equations by a direct dense solve.
pub fn steady_state_solve(p: &SystemParams) -> Result<MomentState> {
    let sys = build_affine(p, &Modulation::none(), 0.0);
    let spec = eigen_stability(p)?;
    if !spec.stable {
        return Err(Error::NoSteadyState(alloc::format!(
            "drift matrix is not Hurwitz (max Re λ = {})",
            spec.max_re
        )));
    }
    let rhs: Vec<f64> = sys.c_vector.iter().map(|v| -v).collect();
    let x = linalg::lu_solve(&sys.a_matrix, N, &rhs).map_err(|e| Error::NoSteadyState(alloc::format!("{e}")))?;
    let mut xa = [0.0; N];
    xa.copy_from_slice(&x);
    let residual = sys.apply(&xa);
    let r_norm = libm::sqrt(residual.iter().map(|v| v * v).sum::<f64>());
    let c_norm = libm::sqrt(sys.c_vector.iter().map(|v| v * v).sum::<f64>());
    if r_norm > 1e-10 * c_norm.max(f64::MIN_POSITIVE) && r_norm > 1e-300 {
        return Err(Error::Numeric(alloc::format!(
            "steady-state residual {r_norm} too large relative to {c_norm}"
        )));
    }
    Ok(MomentState::from_slice(&x))
}

struct Homogeneous<'a> {
    p: &'a SystemParams,
    m: &'a Modulation,
}

impl OdeSystem for Homogeneous<'_> {
    fn dim(&self) -> usize {
        N * N
    }

    // Ẋ = A(t) X on the row-major matrix X.
    fn rhs(&self, t: f64, y: &[f64], dy: &mut [f64]) {
        let a = build_affine(self.p, self.m, t).a_matrix;
        for r in 0..N {
            for c in 0..N {
                let mut acc = 0.0;
                for k in 0..N {
                    acc += a[r * N + k] * y[k * N + c];
                }
                dy[r * N + c] = acc;
            }
        }
    }
}

/// One-period flow map of the homogeneous moment equations from `t0`, and
/// its spectral radius.
pub fn floquet_monodromy_from(p: &SystemParams, m: &Modulation, t0: f64) -> Result<FloquetStability> {
    let period = if m.is_active() {
        m.common_period().ok_or_else(|| {
            Error::UnsupportedConfiguration(alloc::format!(
                "modulation frequencies {} and {} are not commensurate",
                m.nu1,
                m.nu2
            ))
        })?
    } else {
        // Constant coefficients: any period works; use the nominal one.
        2.0 * core::f64::consts::PI / m.nu1
    };
    let opts = OdeOptions {
        rtol: FLOQUET_RTOL,
        atol: 1e-14,
        max_step: effective_max_step(period, m),
    };
    let mut x = vec![0.0; N * N];
    for i in 0..N {
        x[i * N + i] = 1.0;
    }
    ode::integrate(&Homogeneous { p, m }, t0, &mut x, t0 + period, period, &opts, |_, _| Control::Continue)
        .map_err(|ode::StepUnderflow(time)| Error::IntegrationFailure { time, partial: None })?;
    let spectral_radius = linalg::spectral_radius(&x, N)?;
    Ok(FloquetStability {
        spectral_radius,
        stable: spectral_radius < 1.0 - FLOQUET_MARGIN,
        period,
    })
}

pub fn floquet_monodromy(p: &SystemParams, m: &Modulation) -> Result<FloquetStability> {
    floquet_monodromy_from(p, m, 0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::make_synchronous;

    fn red(g: f64, kappa: f64) -> SystemParams {
        SystemParams::red_sideband(g, kappa, 1e-5, 1e3).unwrap()
    }

    #[test]
    fn decoupled_structure() {
        let sys = build_affine(&red(0.0, 0.1), &Modulation::none(), 0.0);
        let optical = [0usize, 6, 7];
        let mechanical = [1usize, 8, 9];
        for &r in &optical {
            for &c in &mechanical {
                assert_eq!(sys.a_matrix[r * N + c], 0.0);
                assert_eq!(sys.a_matrix[c * N + r], 0.0);
            }
        }
        let nonzero: Vec<usize> = (0..N).filter(|&i| sys.c_vector[i] != 0.0).collect();
        assert_eq!(nonzero, [1]);
        assert!((sys.c_vector[1] - 1e-2).abs() < 1e-15);
    }

    #[test]
    fn constant_without_modulation() {
        let p = red(0.3, 0.1);
        let m = make_synchronous(0.0, 7.0).unwrap();
        assert_eq!(build_affine(&p, &m, 0.0), build_affine(&p, &m, 1.2345));
    }

    #[test]
    fn thermal_fixed_point() {
        let s = steady_state_solve(&red(0.0, 0.1)).unwrap();
        assert!((s.n_b - 1e3).abs() < 1e-9);
        assert!(s.n_a.abs() < 1e-12 && s.c_ab.norm() < 1e-12);
    }

    #[test]
    fn table_values_without_modulation() {
        let s = steady_state_solve(&red(0.02, 0.05)).unwrap();
        assert!((s.n_b - 0.5128).abs() < 5e-4, "{}", s.n_b);
        let s = steady_state_solve(&red(0.2, 4.0)).unwrap();
        assert!((s.n_b - 1.5225).abs() / 1.5225 < 0.01, "{}", s.n_b);
    }

    #[test]
    fn unstable_has_no_steady_state() {
        assert!(matches!(steady_state_solve(&red(0.6, 0.3)), Err(Error::NoSteadyState(_))));
        assert!(!eigen_stability(&red(0.6, 0.3)).unwrap().stable);
    }

    #[test]
    fn uncoupled_abscissa_is_mechanical_damping() {
        let spec = eigen_stability(&red(0.0, 0.1)).unwrap();
        assert!((spec.max_re + 1e-5).abs() < 1e-12, "{}", spec.max_re);
    }

    #[test]
    fn incommensurate_frequencies_rejected() {
        let m = Modulation::new(1.0, 10.0, 1.0, 10.0 * core::f64::consts::SQRT_2, 0.0).unwrap();
        assert!(matches!(
            floquet_monodromy(&red(0.3, 0.1), &m),
            Err(Error::UnsupportedConfiguration(_))
        ));
    }
}
