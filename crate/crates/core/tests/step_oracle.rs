use romforge_core::fe::generate::generate_beam_mesh;
use romforge_core::linalg::dot;
use romforge_core::modal::{solve_modes, ModeCount};
use romforge_core::oracles::PureBendingField;
use romforge_core::step::{oracle_tensors, step_pair, step_single, TensorBasis, ORACLE_BASIS_CAP};
use romforge_core::{ElementKind, FeModel, Material};

fn peak(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

fn max_rel(pairs: &[(f64, f64)]) -> f64 {
    let scale = pairs.iter().fold(0.0f64, |m, p| m.max(p.1.abs()));
    pairs.iter().fold(0.0f64, |m, p| m.max((p.0 - p.1).abs())) / scale
}

#[test]
fn single_hex8_coefficients_match_exact_tensors() {
    let mesh = generate_beam_mesh(0.2, 0.05, 0.1, 1, 1, 1, ElementKind::Hex8, false).unwrap();
    let model = FeModel::new(mesh, Material::new(210e9, 0.3, 7800.0).unwrap()).unwrap();
    let modes = solve_modes(&model.linear_stiffness(), &model.mass_matrix(), ModeCount::All).unwrap();
    let n = modes.len();
    assert_eq!(n, 24);
    let nt = oracle_tensors(&model, TensorBasis::all_dofs(&model), ORACLE_BASIS_CAP).unwrap();
    let q: Vec<Vec<f64>> = modes.shapes.iter().map(|s| nt.coordinates(s).unwrap()).collect();
    let project = |v: &[f64], mult: f64| -> Vec<f64> {
        (0..n).map(|k| mult * dot(&modes.shapes[k], v) / modes.modal_masses[k]).collect()
    };
    let lambda = |p: usize| 2e-3 / peak(&modes.shapes[p]);
    let all: Vec<usize> = (0..n).collect();
    let (mut alpha, mut beta) = (Vec::new(), Vec::new());
    for p in 0..n {
        let c = step_single(&model, &modes, p, lambda(p), &all).unwrap();
        let a = project(&nt.apply_quadratic(&q[p], &q[p]), 1.0);
        let b = project(&nt.apply_cubic(&q[p], &q[p], &q[p]), 1.0);
        for k in 0..n {
            alpha.push((c.require_alpha(k, p, p).unwrap(), a[k]));
            beta.push((c.require_beta(k, p, p, p).unwrap(), b[k]));
        }
    }
    for (p, r) in [(6, 7), (6, 11), (9, 23)] {
        let c = step_pair(&model, &modes, p, r, (lambda(p), lambda(r)), &all).unwrap();
        let a = project(&nt.apply_quadratic(&q[p], &q[r]), 2.0);
        let b = project(&nt.apply_cubic(&q[p], &q[p], &q[r]), 3.0);
        for k in 0..n {
            alpha.push((c.require_alpha(k, p, r).unwrap(), a[k]));
            beta.push((c.require_beta(k, p, p, r).unwrap(), b[k]));
        }
    }
    assert!(max_rel(&alpha) <= 1e-9, "alpha {:e}", max_rel(&alpha));
    assert!(max_rel(&beta) <= 1e-9, "beta {:e}", max_rel(&beta));
}

#[test]
fn amplitude_does_not_change_coefficients() {
    let mesh = generate_beam_mesh(0.4, 0.02, 0.02, 4, 1, 1, ElementKind::Hex20, true).unwrap();
    let model = FeModel::new(mesh, Material::new(210e9, 0.3, 7800.0).unwrap()).unwrap();
    let modes = solve_modes(&model.linear_stiffness(), &model.mass_matrix(), ModeCount::Lowest(6)).unwrap();
    let all: Vec<usize> = (0..6).collect();
    let base = 1.0 / peak(&modes.shapes[0]);
    let b: Vec<f64> = [1e-4, 1e-3, 1e-2]
        .iter()
        .map(|s| step_single(&model, &modes, 0, s * base, &all).unwrap().require_beta(0, 0, 0, 0).unwrap())
        .collect();
    for v in &b[1..] {
        assert!((v - b[0]).abs() <= 1e-7 * b[0].abs(), "{b:?}");
    }
}

#[test]
fn hex20_reproduces_pure_bending_strain() {
    let mesh = generate_beam_mesh(0.1, 0.02, 0.03, 1, 1, 1, ElementKind::Hex20, false).unwrap();
    for nu in [0.0, 0.3, 0.45] {
        let model = FeModel::new(mesh.clone(), Material::new(210e9, nu, 7800.0).unwrap()).unwrap();
        let alpha = 2.0;
        let field = PureBendingField::new(alpha, nu);
        let u: Vec<[f64; 3]> = mesh.nodes.iter().map(|&x| field.displacement(x)).collect();
        let strains = model.green_lagrange_at_quadrature_points(0, &u);
        for (q, e) in model.quadrature_points(0).iter().zip(&strains) {
            let parts = field.strain_parts(*q);
            let exact = parts.total();
            for i in 0..3 {
                for j in 0..3 {
                    assert!((e[i][j] - exact[i][j]).abs() <= 1e-12 * alpha * alpha);
                    if nu == 0.0 {
                        assert_eq!(parts.gamma3[i][j], 0.0);
                    }
                }
            }
        }
    }
}
