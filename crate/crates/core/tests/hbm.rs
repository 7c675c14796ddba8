use proptest::prelude::*;
use romforge_core::hbm::{
    block_len, coeff_index, continue_frf, ContinuationOptions, hbm_residual, probe_amplitude, rk4_steady_state, solve_periodic, OscillatorSystem, Rk4Options,
};
use romforge_core::linalg::norm;

proptest! {
    #[test]
    fn one_harmonic_duffing_residual_matches_hand_expansion(
        w in 0.5..2.0f64,
        zeta in 0.0..0.1f64,
        gamma in -2.0..2.0f64,
        f in 0.0..1.0f64,
        a in -1.0..1.0f64,
        b in -1.0..1.0f64,
        big_omega in 0.3..3.0f64,
    ) {
        let sys = OscillatorSystem::duffing(w, zeta, gamma, f).unwrap();
        let r = hbm_residual(&sys, &[0.0, a, b], big_omega, 1).unwrap();
        let c = 2.0 * zeta * w;
        let amp2 = a * a + b * b;
        let cos = (w * w - big_omega * big_omega) * a + c * big_omega * b + 0.75 * gamma * amp2 * a - f;
        let sin = (w * w - big_omega * big_omega) * b - c * big_omega * a + 0.75 * gamma * amp2 * b;
        let scale = 1.0 + w * w + gamma.abs() + f;
        prop_assert!(r[0].abs() <= 1e-12 * scale);
        prop_assert!((r[1] - cos).abs() <= 1e-12 * scale, "{} vs {cos}", r[1]);
        prop_assert!((r[2] - sin).abs() <= 1e-12 * scale, "{} vs {sin}", r[2]);
    }
}

#[test]
fn harmonic_balance_matches_time_integration() {
    let h = 7;
    let force = 0.2;
    let sys = OscillatorSystem::duffing(1.0, 0.05, 1.0, force).unwrap();
    // far enough off the fold that the steady state is unique
    let big_omega = 0.7;
    let x = solve_periodic(&sys, big_omega, h, None, 1e-13, 50).unwrap();
    let opts = Rk4Options { periods: 400, steps_per_period: 1024, initial: None };
    let y = rk4_steady_state(&sys, big_omega, h, &opts).unwrap();
    assert_eq!(y.len(), block_len(h));
    let diff: Vec<f64> = x.iter().zip(&y).map(|(a, b)| a - b).collect();
    assert!(norm(&diff) <= 1e-4 * force, "|x_hbm - x_rk4| = {:e}", norm(&diff));
    assert!(probe_amplitude(&x, h, &[1.0]) > force);
}

#[test]
fn cubic_branch_has_no_even_harmonics() {
    let opts = ContinuationOptions { harmonics: 5, ..ContinuationOptions::default() };
    for gamma in [0.05, 0.5] {
        let sys = OscillatorSystem::duffing(1.0, 0.02, gamma, 0.05).unwrap();
        let branch = continue_frf(&sys, (0.6, 1.6), &opts).unwrap();
        assert_eq!(branch.fold_count(), if gamma > 0.1 { 2 } else { 0 }, "gamma {gamma}");
        assert!(branch.even_harmonic_ratio() <= 1e-10, "{:e}", branch.even_harmonic_ratio());
        for p in &branch.points {
            let x = &p.coeffs;
            for k in (2..=5).step_by(2) {
                assert!(x[coeff_index(5, 0, k, false)].hypot(x[coeff_index(5, 0, k, true)]) <= 1e-10 * norm(x));
            }
        }
    }
}

#[test]
fn quadratic_terms_create_mean_and_second_harmonic() {
    let h = 4;
    let mut sys = OscillatorSystem::duffing(1.0, 0.02, 0.5, 0.1).unwrap();
    sys.quadratic.push((0, 0, 0, 0.8));
    let x = solve_periodic(&sys, 0.9, h, None, 1e-12, 50).unwrap();
    assert!(x[0].abs() > 1e-6);
    assert!(x[coeff_index(h, 0, 2, false)].hypot(x[coeff_index(h, 0, 2, true)]) > 1e-6);
}
