use romforge_core::fe::generate::generate_beam_mesh;
use romforge_core::modal::{classify_modes, orthonormality_defects, solve_modes, ModeCount};
use romforge_core::oracles::BeamSection;
use romforge_core::{ElementKind, FeModel, Material, ModeLabel};

#[test]
fn slender_clamped_beam_matches_euler_bernoulli() {
    let (l, b, h) = (1.0, 0.03, 0.01);
    let mesh = generate_beam_mesh(l, b, h, 40, 2, 2, ElementKind::Hex20, true).unwrap();
    // zero Poisson ratio so the 3D clamp does not stiffen the section
    let model = FeModel::new(mesh, Material::new(210e9, 0.0, 7800.0).unwrap()).unwrap();
    let (k, m) = (model.linear_stiffness(), model.mass_matrix());
    let mut modes = solve_modes(&k, &m, ModeCount::Lowest(8)).unwrap();
    let (orth, rayleigh) = orthonormality_defects(&modes, &k, &m);
    assert!(orth <= 1e-9 && rayleigh <= 1e-9, "{orth:e} {rayleigh:e}");
    assert!(modes.omega.windows(2).all(|w| w[0] <= w[1]));
    classify_modes(&mut modes, &model, "midline", [0.0, 1.0, 0.0]).unwrap();
    assert_eq!(modes.labels[0], ModeLabel::Bending);
    let section = BeamSection { length: l, width: b, height: h, young_modulus: 210e9, density: 7800.0 };
    let f = modes.frequency_hz(0);
    let exact = section.first_bending_frequency();
    assert!((f - exact).abs() / exact < 0.02, "{f} vs {exact}");
}

#[test]
fn free_block_has_six_rigid_modes() {
    let mesh = generate_beam_mesh(0.2, 0.1, 0.05, 2, 1, 1, ElementKind::Hex8, false).unwrap();
    let model = FeModel::new(mesh, Material::new(210e9, 0.3, 7800.0).unwrap()).unwrap();
    let modes = solve_modes(&model.linear_stiffness(), &model.mass_matrix(), ModeCount::All).unwrap();
    let top = modes.omega.last().copied().unwrap();
    let rigid = modes.omega.iter().filter(|w| **w < 1e-6 * top).count();
    assert_eq!(rigid, 6);
}
