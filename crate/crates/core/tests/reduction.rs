use proptest::prelude::*;
use romforge_core::fe::generate::generate_beam_mesh;
use romforge_core::fe::statics::{solve_constrained_static, NewtonOptions};
use romforge_core::linalg::{norm, SymmetricSolver};
use romforge_core::modal::{solve_modes, ModeCount};
use romforge_core::mstep::{linear_constrained_solve, mstep_solve, select_masters};
use romforge_core::reduction::{
    condensed_cubic, condensed_from_parts, correction_spectrum, nnm_coefficients, slave_modes, smd_condensed_cubic,
    SlaveSet,
};
use romforge_core::step::step_single;
use romforge_core::{ElementKind, FeModel, Material, ModeSet};

fn clamped_beam() -> (FeModel, ModeSet) {
    let mesh = generate_beam_mesh(0.3, 0.02, 0.02, 6, 2, 2, ElementKind::Hex20, true).unwrap();
    let model = FeModel::new(mesh, Material::new(210e9, 0.3, 7800.0).unwrap()).unwrap();
    let modes = solve_modes(&model.linear_stiffness(), &model.mass_matrix(), ModeCount::All).unwrap();
    (model, modes)
}

fn first_transverse(modes: &ModeSet, model: &FeModel) -> usize {
    // mode with the largest share of y motion among the lowest ones
    (0..4)
        .max_by(|&a, &b| {
            let share = |k: usize| {
                let u = model.dofs().expand(&modes.shapes[k]);
                u.iter().map(|v| v[1] * v[1]).sum::<f64>() / u.iter().map(|v| v.iter().map(|x| x * x).sum::<f64>()).sum::<f64>()
            };
            share(a).total_cmp(&share(b))
        })
        .unwrap()
}

#[test]
fn smd_and_full_condensation_agree() {
    let (model, modes) = clamped_beam();
    let p = first_transverse(&modes, &model);
    let lambda = 1e-4 / modes.shapes[p].iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let all: Vec<usize> = (0..modes.len()).collect();
    let coeffs = step_single(&model, &modes, p, lambda, &all).unwrap();
    let slaves = slave_modes(&modes, &[p], SlaveSet::AllOthers);
    let gamma = condensed_cubic(&[p], &coeffs, &modes, &slaves).unwrap()[&(p, p, p, p)];
    let spectrum = correction_spectrum(p, &coeffs, &modes, &slaves).unwrap();
    assert!((spectrum.gamma() - gamma).abs() <= 1e-12 * gamma.abs());
    let k = SymmetricSolver::new(&model.linear_stiffness()).unwrap();
    let smd = smd_condensed_cubic(&model, &k, &modes, p, lambda).unwrap();
    assert!((smd - gamma).abs() <= 1e-6 * gamma.abs(), "smd {smd} vs {gamma}");
    let beta = coeffs.require_beta(p, p, p, p).unwrap();
    assert!(gamma < beta && gamma > 0.0, "condensation softens: {gamma} vs {beta}");
}

#[test]
fn constrained_static_solver_balances_forces() {
    let (model, modes) = clamped_beam();
    let p = first_transverse(&modes, &model);
    let masters = select_masters(&model, "midline", 1).unwrap();
    let phi = &modes.shapes[p];
    let peak = masters.dofs.iter().fold(0.0f64, |m, &d| m.max(phi[d].abs()));
    let opts = NewtonOptions::default();
    for amp in [1e-4, 1e-2, 0.5] {
        // amp is the largest prescribed displacement over the thickness
        let shape: Vec<f64> = phi.iter().map(|v| v * amp * 0.02 / peak).collect();
        let sol = mstep_solve(&model, &shape, &masters, &opts).unwrap();
        let mut is_master = vec![false; model.ndof()];
        masters.dofs.iter().for_each(|&d| is_master[d] = true);
        let free: Vec<f64> = (0..model.ndof()).filter(|&d| !is_master[d]).map(|d| sol.internal_force[d]).collect();
        assert!(norm(&free) <= 1e-8 * norm(&sol.internal_force), "amp {amp}: {}", norm(&free));
        for &(d, r) in &sol.reactions {
            assert!((r - sol.internal_force[d]).abs() <= 1e-9 * norm(&sol.internal_force));
            assert_eq!(sol.displacement[d], shape[d]);
        }
    }
    // the linear solve of the same constraints needs one Newton step
    let shape: Vec<f64> = phi.iter().map(|v| v * 0.01 / peak).collect();
    let lin = linear_constrained_solve(&model, &shape, &masters).unwrap();
    assert!(lin.newton_iters <= 2, "{}", lin.newton_iters);
}

#[test]
fn constrained_static_solver_rejects_bad_input() {
    let (model, _) = clamped_beam();
    let opts = NewtonOptions::default();
    let n = model.ndof();
    assert!(solve_constrained_static(&model, &[(n, 0.0)], None, &opts).is_err());
    assert!(solve_constrained_static(&model, &[(0, 0.0), (0, 1.0)], None, &opts).is_err());
    assert!(solve_constrained_static(&model, &[], Some(&[0.0; 3]), &opts).is_err());
}

proptest! {
    #[test]
    fn nnm_coefficient_approaches_condensation_quadratically(
        ratio in 10.0..1000.0f64,
        beta in 0.5..10.0f64,
        correction in 0.1..2.0f64,
    ) {
        let err = |r: f64| {
            let ws = r;
            let alpha = ws * (correction / 2.0).sqrt();
            let parts = [(1usize, alpha, ws)];
            (nnm_coefficients(1.0, beta, &parts).unwrap().cubic - condensed_from_parts(beta, &parts)).abs()
        };
        let slope = (err(ratio) / err(10.0 * ratio)).log10();
        prop_assert!((slope - 2.0).abs() <= 0.05, "slope {slope}");
    }

    #[test]
    fn condensation_subtracts_each_static_correction(beta in -5.0..5.0f64, a in -3.0..3.0f64, w in 2.0..50.0f64) {
        let gamma = condensed_from_parts(beta, &[(1, a, w)]);
        prop_assert!((gamma - (beta - 2.0 * a * a / (w * w))).abs() <= 1e-12 * (1.0 + beta.abs()));
    }
}
