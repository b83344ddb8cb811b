use modcool_core::analytics::{mean_field_trajectory, MeanFieldState};
use modcool_core::dynamics::{
    default_initial_state, final_mpn_average, integrate_moments, IntegrationConfig,
};
use modcool_core::steadystate::{eigen_stability, floquet_monodromy, floquet_monodromy_from, steady_state_solve};
use modcool_core::{make_synchronous, Complex64, FullPhysicalParams, Modulation, MomentState, SystemParams};

const XI0: f64 = 2.404826;

fn red(g: f64, kappa: f64) -> SystemParams {
    SystemParams::red_sideband(g, kappa, 1e-5, 1e3).unwrap()
}

#[test]
fn zero_amplitude_is_bit_identical_to_no_modulation() {
    let p = red(0.3, 0.1);
    let cfg = IntegrationConfig::new(1e-9, 1e-12, 1.0, 200.0, 0.5).unwrap();
    let init = default_initial_state(1e3).unwrap();
    let plain = integrate_moments(&p, &Modulation::none(), &init, &cfg).unwrap();
    let zero = integrate_moments(&p, &make_synchronous(0.0, 30.0).unwrap(), &init, &cfg).unwrap();
    assert_eq!(plain.times, zero.times);
    assert_eq!(plain.states, zero.states);
}

#[test]
fn thermalization_of_the_bare_resonator() {
    let gamma = 1e-3;
    let rtol = 1e-9;
    let p = SystemParams::red_sideband(0.0, 0.1, gamma, 1e3).unwrap();
    let cfg = IntegrationConfig::new(rtol, 1e-12, 1.0, 3000.0, 10.0).unwrap();
    let tr = integrate_moments(&p, &Modulation::none(), &MomentState::default(), &cfg).unwrap();
    for (t, s) in tr.times.iter().zip(&tr.states) {
        let exact = 1e3 * (1.0 - (-gamma * t).exp());
        assert!((s.n_b - exact).abs() <= 10.0 * rtol * exact.max(1.0), "t = {t}");
    }
}

#[test]
fn long_runs_settle_on_the_fixed_point() {
    for (g, kappa) in [(0.1, 0.1), (0.3, 0.1), (0.2, 4.0)] {
        let p = red(g, kappa);
        let cfg = IntegrationConfig::default_for(&p, &Modulation::none());
        let tr = integrate_moments(&p, &Modulation::none(), &default_initial_state(1e3).unwrap(), &cfg).unwrap();
        let exact = steady_state_solve(&p).unwrap().n_b;
        let avg = final_mpn_average(&tr, 0.2).unwrap();
        assert!((avg - exact).abs() / exact < 1e-6, "G={g}: {avg} vs {exact}");
    }
}

#[test]
fn halving_rtol_leaves_the_average_alone() {
    let p = red(0.3, 0.1);
    let m = make_synchronous(XI0, 30.0).unwrap();
    let cfg = IntegrationConfig::default_for(&p, &m);
    let init = default_initial_state(1e3).unwrap();
    let a = final_mpn_average(&integrate_moments(&p, &m, &init, &cfg).unwrap(), 0.2).unwrap();
    let fine = cfg.with_tolerances(cfg.rtol / 2.0, cfg.atol / 2.0);
    let b = final_mpn_average(&integrate_moments(&p, &m, &init, &fine).unwrap(), 0.2).unwrap();
    assert!((a - b).abs() / a < 1e-4, "{a} vs {b}");
}

#[test]
fn unmodulated_monodromy_is_exponential_of_abscissa() {
    let p = red(0.3, 0.1);
    let m = make_synchronous(0.0, 10.0).unwrap();
    let fl = floquet_monodromy(&p, &m).unwrap();
    let max_re = eigen_stability(&p).unwrap().max_re;
    let want = (max_re * fl.period).exp();
    assert!((fl.spectral_radius - want).abs() < 1e-6, "{} vs {want}", fl.spectral_radius);
}

#[test]
fn modulation_stabilizes_strong_coupling() {
    let p = red(0.9, 0.5);
    assert!(!eigen_stability(&p).unwrap().stable);
    let fl = floquet_monodromy(&p, &make_synchronous(XI0, 30.0).unwrap()).unwrap();
    assert!(fl.stable, "{}", fl.spectral_radius);
}

#[test]
fn monodromy_radius_does_not_depend_on_start() {
    let p = red(0.4, 0.1);
    let m = Modulation::new(1.0, 10.0, 3.8096, 15.0, std::f64::consts::FRAC_PI_4).unwrap();
    let a = floquet_monodromy_from(&p, &m, 0.0).unwrap().spectral_radius;
    let b = floquet_monodromy_from(&p, &m, 0.37).unwrap().spectral_radius;
    assert!((a - b).abs() < 1e-6, "{a} vs {b}");
}

#[test]
fn mean_fields_rest_at_their_fixed_point() {
    let (g0, kappa, gamma) = (1e-4, 0.1, 1e-5);
    let alpha = Complex64::new(0.1 / g0, 0.0);
    // Stationary mechanical displacement and the drive that holds |G| = 0.1 at Δ′ = 1.
    let beta = Complex64::i() * g0 * alpha.norm_sqr() / Complex64::new(0.5 * gamma, 1.0);
    let delta_c = 1.0 + 2.0 * g0 * beta.re;
    let drive = Complex64::new(-1.0, 0.5 * kappa) * alpha;
    let fp = FullPhysicalParams::new(delta_c, g0, drive, kappa, gamma).unwrap();
    let cfg = IntegrationConfig::new(1e-11, 1e-12, 0.1, 200.0, 1.0).unwrap();
    let tr = mean_field_trajectory(&fp, &Modulation::none(), MeanFieldState { alpha, beta }, &cfg).unwrap();
    assert!(!tr.diverged);
    for s in &tr.samples {
        assert!((s.g_lin.norm() - 0.1).abs() < 1e-6, "t = {}: {}", s.t, s.g_lin);
        assert!((s.delta_c_prime - 1.0).abs() < 1e-6);
    }
}
