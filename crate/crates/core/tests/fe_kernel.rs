use std::f64::consts::PI;

use proptest::prelude::*;
use romforge_core::fe::generate::{generate_beam_mesh, generate_circular_plate_mesh};
use romforge_core::linalg::{dot, norm};
use romforge_core::{ElementKind, FeModel, Material, NonlinearScale};

const E: f64 = 210e9;
const RHO: f64 = 7800.0;

fn block(kind: ElementKind, nu: f64) -> FeModel {
    let mesh = generate_beam_mesh(0.2, 0.1, 0.05, 2, 1, 1, kind, false).unwrap();
    FeModel::new(mesh, Material::new(E, nu, RHO).unwrap()).unwrap()
}

fn kinds() -> impl Strategy<Value = ElementKind> {
    prop_oneof![Just(ElementKind::Hex8), Just(ElementKind::Hex20)]
}

/// Displacement field with entries up to `scale` times a typical element size.
fn field(n: usize, scale: f64) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0..1.0f64, n).prop_map(move |v| v.into_iter().map(|x| x * scale).collect())
}

#[test]
fn reference_mesh_dof_counts() {
    let single = generate_beam_mesh(0.2, 0.05, 0.1, 1, 1, 1, ElementKind::Hex8, false).unwrap();
    assert_eq!(FeModel::new(single, Material::new(E, 0.3, RHO).unwrap()).unwrap().ndof(), 24);
    let thick = generate_beam_mesh(1.0, 0.03, 0.03, 15, 2, 2, ElementKind::Hex20, true).unwrap();
    assert_eq!(FeModel::new(thick, Material::new(E, 0.3, RHO).unwrap()).unwrap().ndof(), 1287);
}

#[test]
fn plate_volume_matches_disc() {
    let (r, h) = (0.3, 0.005);
    let mesh = generate_circular_plate_mesh(r, h, 2, ElementKind::Hex20, true).unwrap();
    for set in ["midsurface", "top", "bottom", "rim", "center"] {
        assert!(!mesh.node_set(set).unwrap().is_empty(), "{set}");
    }
    let model = FeModel::new(mesh, Material::new(E, 0.3, RHO).unwrap()).unwrap();
    let exact = PI * r * r * h;
    assert!((model.volume() - exact).abs() / exact < 1e-3, "{} vs {exact}", model.volume());
}

#[test]
fn mass_partitions_total_mass_per_direction() {
    for kind in [ElementKind::Hex8, ElementKind::Hex20] {
        let model = block(kind, 0.3);
        let m = model.mass_matrix();
        let total = RHO * model.volume();
        for d in 0..3 {
            let nodal: Vec<[f64; 3]> = (0..model.mesh().nodes.len()).map(|_| {
                let mut t = [0.0; 3];
                t[d] = 1.0;
                t
            }).collect();
            let t = model.dofs().restrict(&nodal);
            assert!((m.bilinear(&t, &t) - total).abs() <= 1e-12 * total);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn rigid_translation_is_force_free(kind in kinds(), t in prop::array::uniform3(-0.05..0.05f64)) {
        let model = block(kind, 0.3);
        let nodal = vec![t; model.mesh().nodes.len()];
        let x = model.dofs().restrict(&nodal);
        let f = model.internal_force(&x).unwrap();
        let scale = E * 0.05 * 0.05 * 0.05 / 0.2;
        prop_assert!(norm(&f) <= 1e-9 * scale, "|f| = {}", norm(&f));
    }

    #[test]
    fn finite_rotation_is_force_free(kind in kinds(), angle in -1.0..1.0f64, axis in 0usize..3) {
        let model = block(kind, 0.25);
        let (c, s) = (angle.cos(), angle.sin());
        let (a, b) = ((axis + 1) % 3, (axis + 2) % 3);
        let nodal: Vec<[f64; 3]> = model.mesh().nodes.iter().map(|p| {
            let mut u = [0.0; 3];
            u[a] = c * p[a] - s * p[b] - p[a];
            u[b] = s * p[a] + c * p[b] - p[b];
            u
        }).collect();
        let x = model.dofs().restrict(&nodal);
        let f = model.internal_force(&x).unwrap();
        let scale = model.linear_stiffness().norm_inf() * norm(&x);
        prop_assert!(norm(&f) <= 1e-12 * scale, "|f| = {} vs |K| |x| = {scale}", norm(&f));
    }

    #[test]
    fn internal_force_is_cubic_in_amplitude(kind in kinds(), x in field(54, 0.01)) {
        let model = block(kind, 0.3);
        let n = model.ndof();
        let x: Vec<f64> = (0..n).map(|i| x[i % x.len()]).collect();
        // fourth finite difference of a cubic vanishes
        let f = |s: f64| model.internal_force(&x.iter().map(|v| s * v).collect::<Vec<_>>()).unwrap();
        let coeffs = [1.0, -4.0, 6.0, -4.0, 1.0];
        let mut d4 = vec![0.0; n];
        for (j, c) in coeffs.iter().enumerate() {
            let fj = f(j as f64 - 2.0);
            d4.iter_mut().zip(&fj).for_each(|(a, b)| *a += c * b);
        }
        let scale = norm(&f(2.0));
        prop_assert!(norm(&d4) <= 1e-9 * scale, "{} vs {scale}", norm(&d4));
    }

    #[test]
    fn nonlinear_part_has_no_linear_term(kind in kinds(), x in field(54, 0.01)) {
        let model = block(kind, 0.3);
        let x: Vec<f64> = (0..model.ndof()).map(|i| x[i % x.len()]).collect();
        let full = model.internal_force(&x).unwrap();
        let kx = model.linear_stiffness().matvec(&x);
        let nl = model.nonlinear_force(&x).unwrap();
        let diff: Vec<f64> = full.iter().zip(&kx).zip(&nl).map(|((f, k), g)| f - k - g).collect();
        prop_assert!(norm(&diff) <= 1e-10 * norm(&full));
        let lin = model.with_nonlinear_scale(NonlinearScale::LINEAR);
        let fl = lin.internal_force(&x).unwrap();
        let d: Vec<f64> = fl.iter().zip(&kx).map(|(a, b)| a - b).collect();
        prop_assert!(norm(&d) <= 1e-12 * norm(&kx));
    }

    #[test]
    fn tangent_matches_finite_differences(kind in kinds(), x in field(54, 0.005), dx in field(54, 1.0)) {
        let model = block(kind, 0.3);
        let n = model.ndof();
        let x: Vec<f64> = (0..n).map(|i| x[i % x.len()]).collect();
        let dx: Vec<f64> = (0..n).map(|i| dx[i % dx.len()]).collect();
        let kt = model.tangent_stiffness(&x).unwrap();
        prop_assert!(kt.symmetry_defect() <= 1e-12 * kt.norm_inf());
        let eps = 1e-6;
        let shifted = |s: f64| model.internal_force(&x.iter().zip(&dx).map(|(a, b)| a + s * b).collect::<Vec<_>>()).unwrap();
        let (fp, fm) = (shifted(eps), shifted(-eps));
        let fd: Vec<f64> = fp.iter().zip(&fm).map(|(a, b)| (a - b) / (2.0 * eps)).collect();
        let an = kt.matvec(&dx);
        let err: Vec<f64> = fd.iter().zip(&an).map(|(a, b)| a - b).collect();
        prop_assert!(norm(&err) <= 1e-6 * norm(&an), "{} vs {}", norm(&err), norm(&an));
    }

    #[test]
    fn internal_force_is_energy_gradient(x in field(54, 0.005), dx in field(54, 1.0)) {
        let model = block(ElementKind::Hex20, 0.3);
        let n = model.ndof();
        let x: Vec<f64> = (0..n).map(|i| x[i % x.len()]).collect();
        let dx: Vec<f64> = (0..n).map(|i| dx[i % dx.len()]).collect();
        let eps = 1e-6;
        let w = |s: f64| model.strain_energy(&x.iter().zip(&dx).map(|(a, b)| a + s * b).collect::<Vec<_>>()).unwrap();
        let fd = (w(eps) - w(-eps)) / (2.0 * eps);
        let an = dot(&model.internal_force(&x).unwrap(), &dx);
        prop_assert!((fd - an).abs() <= 1e-6 * an.abs().max(1e-3 * norm(&model.linear_stiffness().matvec(&dx))), "{fd} vs {an}");
    }
}
