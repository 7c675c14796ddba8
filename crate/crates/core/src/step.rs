//! Quadratic and cubic coupling coefficients from prescribed-displacement
//! evaluations of the nonlinear internal force.
//!
//! With `f_nl(sum q_i phi_i)` projected on `phi_k / m_k` written as the
//! polynomial `sum_{i<=j} alpha^k_ij q_i q_j + sum_{i<=j<=l} beta^k_ijl q_i q_j q_l`,
//! every coefficient follows from a fixed pattern of signed evaluations:
//!
//! * `+-l_a phi_a` for each mode: `alpha^k_aa` and `beta^k_aaa`;
//! * `+-(l_a phi_a + l_b phi_b)` and `l_a phi_a - l_b phi_b` for each pair:
//!   `alpha^k_ab`, `beta^k_aab`, `beta^k_abb`;
//! * `+-(l_a phi_a + l_b phi_b + l_c phi_c)` for each triple: `beta^k_abc`.
//!
//! Because the Saint Venant-Kirchhoff force is exactly quadratic plus cubic,
//! the extraction is exact up to round-off for any amplitude. The same
//! identification applied to scaled unit vectors yields the full tensors
//! `A` and `B` of `f_nl(x) = A x x + B x x x` ([`oracle_tensors`]).

use std::collections::BTreeMap;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fe::FeModel;
use crate::linalg::dot;
use crate::modal::ModeSet;

type Pair = (usize, usize);
type Triple = (usize, usize, usize);

/// Monomial coefficients identified from signed evaluations, keyed by local
/// (sorted) indices; each value is a row vector (projections or dof values).
struct Identified {
    quad: BTreeMap<Pair, Vec<f64>>,
    cubic: BTreeMap<Triple, Vec<f64>>,
    evaluations: usize,
}

fn axpy(acc: &mut [f64], a: f64, x: &[f64]) {
    for (y, v) in acc.iter_mut().zip(x) {
        *y += a * v;
    }
}

fn even_odd(plus: &[f64], minus: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let even = plus.iter().zip(minus).map(|(a, b)| 0.5 * (a + b)).collect();
    let odd = plus.iter().zip(minus).map(|(a, b)| 0.5 * (a - b)).collect();
    (even, odd)
}

/// Run the evaluation pattern over `n` directions with amplitudes `lam`.
/// `eval` receives `(local index, coefficient)` pairs and returns the row.
fn identify<F>(lam: &[f64], with_triples: bool, eval: F) -> Result<Identified>
where
    F: Fn(&[(usize, f64)]) -> Result<Vec<f64>> + Sync,
{
    let n = lam.len();
    let singles: Vec<(Vec<f64>, Vec<f64>)> = (0..n)
        .into_par_iter()
        .map(|a| Ok((eval(&[(a, lam[a])])?, eval(&[(a, -lam[a])])?)))
        .collect::<Result<_>>()?;
    let mut quad = BTreeMap::new();
    let mut cubic = BTreeMap::new();
    for (a, (p, m)) in singles.iter().enumerate() {
        let (e, o) = even_odd(p, m);
        quad.insert((a, a), e.iter().map(|v| v / lam[a].powi(2)).collect::<Vec<_>>());
        cubic.insert((a, a, a), o.iter().map(|v| v / lam[a].powi(3)).collect::<Vec<_>>());
    }
    let pairs: Vec<Pair> = (0..n).flat_map(|a| (a + 1..n).map(move |b| (a, b))).collect();
    let pair_rows: Vec<(Vec<f64>, Vec<f64>, Vec<f64>)> = pairs
        .par_iter()
        .map(|&(a, b)| {
            let (la, lb) = (lam[a], lam[b]);
            Ok((eval(&[(a, la), (b, lb)])?, eval(&[(a, -la), (b, -lb)])?, eval(&[(a, la), (b, -lb)])?))
        })
        .collect::<Result<_>>()?;
    for (&(a, b), (pp, mm, pm)) in pairs.iter().zip(&pair_rows) {
        let (la, lb) = (lam[a], lam[b]);
        let (e, o) = even_odd(pp, mm);
        let (qaa, qbb) = (&quad[&(a, a)], &quad[&(b, b)]);
        let (caaa, cbbb) = (&cubic[&(a, a, a)], &cubic[&(b, b, b)]);
        let len = e.len();
        let mut qab = vec![0.0; len];
        let mut caab = vec![0.0; len];
        let mut cabb = vec![0.0; len];
        for r in 0..len {
            let sq = qaa[r] * la * la + qbb[r] * lb * lb;
            qab[r] = (e[r] - sq) / (la * lb);
            let s1 = o[r] - caaa[r] * la.powi(3) - cbbb[r] * lb.powi(3);
            // f(l_a phi_a - l_b phi_b) with every known term removed
            let d = pm[r] - (sq - qab[r] * la * lb) - caaa[r] * la.powi(3) + cbbb[r] * lb.powi(3);
            caab[r] = (s1 - d) / (2.0 * la * la * lb);
            cabb[r] = (s1 + d) / (2.0 * la * lb * lb);
        }
        quad.insert((a, b), qab);
        cubic.insert((a, a, b), caab);
        cubic.insert((a, b, b), cabb);
    }
    let mut evaluations = 2 * n + 3 * pairs.len();
    if with_triples {
        let triples: Vec<Triple> =
            (0..n).flat_map(|a| (a + 1..n).flat_map(move |b| (b + 1..n).map(move |c| (a, b, c)))).collect();
        let cubic_ref = &cubic;
        let rows: Vec<Vec<f64>> = triples
            .par_iter()
            .map(|&(a, b, c)| {
                let (la, lb, lc) = (lam[a], lam[b], lam[c]);
                let p = eval(&[(a, la), (b, lb), (c, lc)])?;
                let m = eval(&[(a, -la), (b, -lb), (c, -lc)])?;
                let (_, mut o) = even_odd(&p, &m);
                let l = [(a, la), (b, lb), (c, lc)];
                for &(i, li) in &l {
                    axpy(&mut o, -li.powi(3), &cubic_ref[&(i, i, i)]);
                }
                for x in 0..3 {
                    for y in x + 1..3 {
                        let ((i, li), (j, lj)) = (l[x], l[y]);
                        axpy(&mut o, -li * li * lj, &cubic_ref[&(i, i, j)]);
                        axpy(&mut o, -li * lj * lj, &cubic_ref[&(i, j, j)]);
                    }
                }
                let s = la * lb * lc;
                Ok(o.iter().map(|v| v / s).collect())
            })
            .collect::<Result<_>>()?;
        evaluations += 2 * triples.len();
        for (t, r) in triples.into_iter().zip(rows) {
            cubic.insert(t, r);
        }
    }
    Ok(Identified { quad, cubic, evaluations })
}

fn sort2(i: usize, j: usize) -> Pair {
    if i <= j {
        (i, j)
    } else {
        (j, i)
    }
}

fn sort3(i: usize, j: usize, l: usize) -> Triple {
    let mut v = [i, j, l];
    v.sort_unstable();
    (v[0], v[1], v[2])
}

/// Modal coefficients `alpha^k_ij` (`i <= j`) and `beta^k_ijl` (`i <= j <= l`)
/// for `i, j, l` in a mode subset and `k` over a projection set.
#[derive(Clone, Debug)]
pub struct CouplingCoefficients {
    /// Mode indices `k` of the projection rows.
    pub projection: Vec<usize>,
    /// Mode indices used as prescribed shapes (ascending).
    pub subset: Vec<usize>,
    /// Modal amplitude used for each subset mode.
    pub amplitudes: Vec<f64>,
    pub evaluations: usize,
    row_of: BTreeMap<usize, usize>,
    alpha: BTreeMap<Pair, Vec<f64>>,
    beta: BTreeMap<Triple, Vec<f64>>,
}

impl CouplingCoefficients {
    pub fn basis_size(&self) -> usize {
        self.projection.len()
    }

    pub fn alpha(&self, k: usize, i: usize, j: usize) -> Option<f64> {
        let r = *self.row_of.get(&k)?;
        self.alpha.get(&sort2(i, j)).map(|v| v[r])
    }

    pub fn beta(&self, k: usize, i: usize, j: usize, l: usize) -> Option<f64> {
        let r = *self.row_of.get(&k)?;
        self.beta.get(&sort3(i, j, l)).map(|v| v[r])
    }

    pub fn require_alpha(&self, k: usize, i: usize, j: usize) -> Result<f64> {
        self.alpha(k, i, j).ok_or_else(|| Error::MissingCoefficient(format!("alpha^{k}_{i},{j}")))
    }

    pub fn require_beta(&self, k: usize, i: usize, j: usize, l: usize) -> Result<f64> {
        self.beta(k, i, j, l).ok_or_else(|| Error::MissingCoefficient(format!("beta^{k}_{i},{j},{l}")))
    }

    /// `alpha^k_ij` for every projection row `k`.
    pub fn alpha_column(&self, i: usize, j: usize) -> Option<&[f64]> {
        self.alpha.get(&sort2(i, j)).map(|v| v.as_slice())
    }

    pub fn beta_column(&self, i: usize, j: usize, l: usize) -> Option<&[f64]> {
        self.beta.get(&sort3(i, j, l)).map(|v| v.as_slice())
    }

    /// `(k, i, j, alpha)` rows in key order.
    pub fn alpha_entries(&self) -> Vec<(usize, usize, usize, f64)> {
        let mut out = Vec::new();
        for (&(i, j), col) in &self.alpha {
            for (r, &k) in self.projection.iter().enumerate() {
                out.push((k, i, j, col[r]));
            }
        }
        out
    }

    /// `(k, i, j, l, beta)` rows in key order.
    pub fn beta_entries(&self) -> Vec<(usize, usize, usize, usize, f64)> {
        let mut out = Vec::new();
        for (&(i, j, l), col) in &self.beta {
            for (r, &k) in self.projection.iter().enumerate() {
                out.push((k, i, j, l, col[r]));
            }
        }
        out
    }
}

/// Modal amplitude giving a largest nodal displacement of `target`.
pub fn amplitude_for_max_displacement(phi: &[f64], target: f64) -> f64 {
    let m = phi.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    target / m
}

fn check_modes(modes: &ModeSet, idx: &[usize]) -> Result<()> {
    for &i in idx {
        if i >= modes.len() {
            return Err(Error::InvalidArgument(format!("mode {i} not in a basis of {} modes", modes.len())));
        }
    }
    Ok(())
}

/// All coefficients with prescribed shapes from `subset` projected on the
/// modes listed in `projection`.
pub fn step_subset(
    model: &FeModel,
    modes: &ModeSet,
    subset: &[usize],
    amplitudes: &[f64],
    projection: &[usize],
) -> Result<CouplingCoefficients> {
    if subset.is_empty() {
        return Err(Error::InvalidArgument("empty mode subset".into()));
    }
    if amplitudes.len() != subset.len() {
        return Err(Error::DimensionMismatch { expected: subset.len(), got: amplitudes.len() });
    }
    check_modes(modes, subset)?;
    check_modes(modes, projection)?;
    let mut order: Vec<usize> = (0..subset.len()).collect();
    order.sort_by_key(|&i| subset[i]);
    let sorted: Vec<usize> = order.iter().map(|&i| subset[i]).collect();
    let lam: Vec<f64> = order.iter().map(|&i| amplitudes[i]).collect();
    if sorted.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::InvalidArgument("duplicate mode in subset".into()));
    }
    if let Some(l) = lam.iter().find(|l| !(l.is_finite() && **l != 0.0)) {
        return Err(Error::InvalidArgument(format!("amplitude {l} must be finite and non-zero")));
    }
    let n = model.ndof();
    let eval = |combo: &[(usize, f64)]| -> Result<Vec<f64>> {
        let mut x = vec![0.0; n];
        for &(a, c) in combo {
            axpy(&mut x, c, &modes.shapes[sorted[a]]);
        }
        let f = model.nonlinear_force(&x)?;
        Ok(projection.iter().map(|&k| dot(&modes.shapes[k], &f) / modes.modal_masses[k]).collect())
    };
    let id = identify(&lam, sorted.len() >= 3, eval)?;
    let alpha = id.quad.into_iter().map(|((a, b), v)| ((sorted[a], sorted[b]), v)).collect();
    let beta = id.cubic.into_iter().map(|((a, b, c), v)| ((sorted[a], sorted[b], sorted[c]), v)).collect();
    Ok(CouplingCoefficients {
        projection: projection.to_vec(),
        subset: sorted,
        amplitudes: lam,
        evaluations: id.evaluations,
        row_of: projection.iter().enumerate().map(|(r, &k)| (k, r)).collect(),
        alpha,
        beta,
    })
}

/// `alpha^k_pp` and `beta^k_ppp` from the two evaluations at `+-lambda phi_p`.
pub fn step_single(
    model: &FeModel,
    modes: &ModeSet,
    p: usize,
    lambda: f64,
    projection: &[usize],
) -> Result<CouplingCoefficients> {
    step_subset(model, modes, &[p], &[lambda], projection)
}

/// Pair coefficients (`alpha^k_pr`, `beta^k_ppr`, `beta^k_prr` and the
/// single-mode ones) from seven evaluations.
pub fn step_pair(
    model: &FeModel,
    modes: &ModeSet,
    p: usize,
    r: usize,
    lambdas: (f64, f64),
    projection: &[usize],
) -> Result<CouplingCoefficients> {
    if p == r {
        return Err(Error::InvalidArgument("step_pair needs two distinct modes".into()));
    }
    step_subset(model, modes, &[p, r], &[lambdas.0, lambdas.1], projection)
}

#[derive(Clone, Debug)]
pub struct AmplitudeSweep {
    /// `(lambda, beta^p_ppp)` per amplitude.
    pub rows: Vec<(f64, f64)>,
    /// `max_i |beta(l_i) / beta(l_0) - 1|`.
    pub spread: f64,
}

/// `beta^p_ppp` at each amplitude. For an exactly cubic force the spread is round-off.
pub fn amplitude_sweep(model: &FeModel, modes: &ModeSet, p: usize, lambdas: &[f64]) -> Result<AmplitudeSweep> {
    if lambdas.is_empty() {
        return Err(Error::InvalidArgument("empty amplitude list".into()));
    }
    let rows: Vec<(f64, f64)> = lambdas
        .iter()
        .map(|&l| Ok((l, step_single(model, modes, p, l, &[p])?.require_beta(p, p, p, p)?)))
        .collect::<Result<_>>()?;
    let b0 = rows[0].1;
    let spread = rows.iter().map(|r| (r.1 / b0 - 1.0).abs()).fold(0.0, f64::max);
    Ok(AmplitudeSweep { rows, spread })
}

/// Basis on which the nonlinear force tensors are identified.
#[derive(Clone, Debug)]
pub enum TensorBasis {
    /// Scaled unit vectors `scale * e_d` on the listed free dofs.
    Nodal { dofs: Vec<usize>, scale: f64 },
    /// Arbitrary displacement vectors.
    Vectors(Vec<Vec<f64>>),
}

impl TensorBasis {
    pub fn len(&self) -> usize {
        match self {
            TensorBasis::Nodal { dofs, .. } => dofs.len(),
            TensorBasis::Vectors(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Every free dof of `model`, scaled by a length comparable to an element
    /// so that quadratic and cubic parts carry similar weight.
    pub fn all_dofs(model: &FeModel) -> TensorBasis {
        let (lo, hi) = model.mesh().bounding_box();
        let diag = ((hi[0] - lo[0]).powi(2) + (hi[1] - lo[1]).powi(2) + (hi[2] - lo[2]).powi(2)).sqrt();
        let ne = model.mesh().elements.len().max(1) as f64;
        TensorBasis::Nodal { dofs: (0..model.ndof()).collect(), scale: 0.1 * diag / ne.cbrt() }
    }
}

/// Exact `f_nl(x) = A x x + B x x x` restricted to a small basis: `A_ij` and
/// `B_ijl` (symmetric, sorted indices) as full dof vectors.
#[derive(Clone, Debug)]
pub struct NonlinearTensors {
    pub basis: TensorBasis,
    ndof: usize,
    a: BTreeMap<Pair, Vec<f64>>,
    b: BTreeMap<Triple, Vec<f64>>,
    pub evaluations: usize,
}

/// Default cap on the oracle basis size.
pub const ORACLE_BASIS_CAP: usize = 96;

/// Identify `A` and `B` exactly on `basis` by polynomial identification.
pub fn oracle_tensors(model: &FeModel, basis: TensorBasis, cap: usize) -> Result<NonlinearTensors> {
    let nb = basis.len();
    if nb == 0 || nb > cap {
        return Err(Error::InvalidArgument(format!("oracle basis of {nb} vectors (cap {cap})")));
    }
    let n = model.ndof();
    if let TensorBasis::Vectors(v) = &basis {
        if let Some(bad) = v.iter().find(|v| v.len() != n) {
            return Err(Error::DimensionMismatch { expected: n, got: bad.len() });
        }
    }
    if let TensorBasis::Nodal { dofs, scale } = &basis {
        if dofs.iter().any(|&d| d >= n) || !(*scale > 0.0) {
            return Err(Error::InvalidArgument("nodal basis dof out of range or non-positive scale".into()));
        }
    }
    let eval = |combo: &[(usize, f64)]| -> Result<Vec<f64>> {
        let mut x = vec![0.0; n];
        for &(a, c) in combo {
            match &basis {
                TensorBasis::Nodal { dofs, scale } => x[dofs[a]] += c * scale,
                TensorBasis::Vectors(v) => axpy(&mut x, c, &v[a]),
            }
        }
        model.nonlinear_force(&x)
    };
    let id = identify(&vec![1.0; nb], nb >= 3, eval)?;
    // monomial coefficients -> symmetric tensor entries
    let a = id
        .quad
        .into_iter()
        .map(|((i, j), v)| ((i, j), if i == j { v } else { v.iter().map(|x| 0.5 * x).collect() }))
        .collect();
    let b = id
        .cubic
        .into_iter()
        .map(|((i, j, l), v)| {
            let mult = permutations(i, j, l) as f64;
            ((i, j, l), v.iter().map(|x| x / mult).collect())
        })
        .collect();
    Ok(NonlinearTensors { basis, ndof: n, a, b, evaluations: id.evaluations })
}

/// Number of distinct orderings of a sorted triple.
fn permutations(i: usize, j: usize, l: usize) -> usize {
    if i == j && j == l {
        1
    } else if i == j || j == l {
        3
    } else {
        6
    }
}

impl NonlinearTensors {
    pub fn ndof(&self) -> usize {
        self.ndof
    }

    /// Symmetric entry `A_ij` (a dof vector).
    pub fn a(&self, i: usize, j: usize) -> &[f64] {
        &self.a[&sort2(i, j)]
    }

    pub fn b(&self, i: usize, j: usize, l: usize) -> &[f64] {
        &self.b[&sort3(i, j, l)]
    }

    /// Basis coordinates of a dof vector (nodal bases only).
    pub fn coordinates(&self, x: &[f64]) -> Result<Vec<f64>> {
        match &self.basis {
            TensorBasis::Nodal { dofs, scale } => {
                let mut covered = vec![false; self.ndof];
                for &d in dofs {
                    covered[d] = true;
                }
                if x.iter().zip(&covered).any(|(v, c)| *v != 0.0 && !c) {
                    return Err(Error::InvalidArgument("vector has components outside the nodal basis".into()));
                }
                Ok(dofs.iter().map(|&d| x[d] / scale).collect())
            }
            TensorBasis::Vectors(_) => {
                Err(Error::InvalidArgument("coordinates are only available for nodal bases".into()))
            }
        }
    }

    /// `A(u, v)` from basis coordinates.
    pub fn apply_quadratic(&self, u: &[f64], v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.ndof];
        for (&(i, j), col) in &self.a {
            let w = if i == j { u[i] * v[i] } else { u[i] * v[j] + u[j] * v[i] };
            if w != 0.0 {
                axpy(&mut out, w, col);
            }
        }
        out
    }

    /// `B(u, v, w)` from basis coordinates.
    pub fn apply_cubic(&self, u: &[f64], v: &[f64], w: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.ndof];
        for (&(i, j, l), col) in &self.b {
            let s = symmetrized(u, v, w, i, j, l);
            if s != 0.0 {
                axpy(&mut out, s, col);
            }
        }
        out
    }

    /// `f_nl` of the vector with basis coordinates `c`.
    pub fn evaluate(&self, c: &[f64]) -> Vec<f64> {
        let mut f = self.apply_quadratic(c, c);
        axpy(&mut f, 1.0, &self.apply_cubic(c, c, c));
        f
    }

    fn modal_coordinates(&self, modes: &ModeSet, idx: &[usize]) -> Result<Vec<Vec<f64>>> {
        idx.iter().map(|&i| self.coordinates(&modes.shapes[i])).collect()
    }

    /// Monomial coefficient `alpha^k_ij` contracted from the tensors.
    pub fn modal_alpha(&self, modes: &ModeSet, k: usize, i: usize, j: usize) -> Result<f64> {
        let c = self.modal_coordinates(modes, &[i, j])?;
        let aij = self.apply_quadratic(&c[0], &c[1]);
        let mult = if i == j { 1.0 } else { 2.0 };
        Ok(mult * dot(&modes.shapes[k], &aij) / modes.modal_masses[k])
    }

    /// Monomial coefficient `beta^k_ijl` contracted from the tensors.
    pub fn modal_beta(&self, modes: &ModeSet, k: usize, i: usize, j: usize, l: usize) -> Result<f64> {
        let c = self.modal_coordinates(modes, &[i, j, l])?;
        let bijl = self.apply_cubic(&c[0], &c[1], &c[2]);
        let (a, b, d) = sort3(i, j, l);
        Ok(permutations(a, b, d) as f64 * dot(&modes.shapes[k], &bijl) / modes.modal_masses[k])
    }

    /// Largest `|A_kij - A_ikj|` relative to the largest entry, over a nodal
    /// basis (`k` runs over the basis dofs). Zero for a force deriving from a potential.
    pub fn potential_asymmetry(&self) -> Result<f64> {
        let dofs = match &self.basis {
            TensorBasis::Nodal { dofs, .. } => dofs,
            TensorBasis::Vectors(_) => {
                return Err(Error::InvalidArgument("potential asymmetry needs a nodal basis".into()))
            }
        };
        let nb = dofs.len();
        let mut worst = 0.0f64;
        let mut scale = 0.0f64;
        for i in 0..nb {
            for j in 0..nb {
                for k in 0..nb {
                    let akij = self.a(i, j)[dofs[k]];
                    let aikj = self.a(k, j)[dofs[i]];
                    worst = worst.max((akij - aikj).abs());
                    scale = scale.max(akij.abs());
                }
            }
        }
        Ok(if scale > 0.0 { worst / scale } else { 0.0 })
    }

    /// Largest absolute tensor entry.
    pub fn max_entry(&self) -> (f64, f64) {
        let ma = self.a.values().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
        let mb = self.b.values().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
        (ma, mb)
    }
}

/// `sum over distinct permutations (a,b,c) of (i,j,l)` of `u_a v_b w_c`.
fn symmetrized(u: &[f64], v: &[f64], w: &[f64], i: usize, j: usize, l: usize) -> f64 {
    let perms: &[[usize; 3]] = &[[i, j, l], [i, l, j], [j, i, l], [j, l, i], [l, i, j], [l, j, i]];
    let mut s = 0.0;
    let mut seen: Vec<[usize; 3]> = Vec::with_capacity(6);
    for p in perms {
        if seen.contains(p) {
            continue;
        }
        seen.push(*p);
        s += u[p[0]] * v[p[1]] * w[p[2]];
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn symmetrized_counts_distinct_orderings() {
        let u = [1.0, 2.0, 3.0];
        assert_eq!(symmetrized(&u, &u, &u, 0, 0, 0), 1.0);
        // i = j < l: three orderings of (0, 0, 2)
        assert_eq!(symmetrized(&u, &u, &u, 0, 0, 2), 9.0);
        assert_eq!(symmetrized(&u, &u, &u, 0, 1, 2), 36.0);
        assert_eq!(permutations(1, 1, 1), 1);
        assert_eq!(permutations(0, 1, 1), 3);
        assert_eq!(permutations(0, 1, 2), 6);
    }

    #[test]
    fn identification_recovers_a_known_polynomial() {
        // two outputs, three inputs, explicit monomials
        let f = |c: &[f64]| -> Vec<f64> {
            vec![
                2.0 * c[0] * c[0] - 3.0 * c[0] * c[2] + 0.5 * c[1] * c[1] * c[2] + 7.0 * c[0] * c[1] * c[2],
                c[2].powi(3) - c[0] * c[1] + 4.0 * c[0] * c[0] * c[1],
            ]
        };
        let lam = [0.3, 0.7, 1.3];
        let id = identify(&lam, true, |combo| {
            let mut c = [0.0; 3];
            for &(a, v) in combo {
                c[a] += v;
            }
            Ok(f(&c))
        })
        .unwrap();
        let close = |a: f64, b: f64| (a - b).abs() < 1e-12;
        assert!(close(id.quad[&(0, 0)][0], 2.0));
        assert!(close(id.quad[&(0, 2)][0], -3.0));
        assert!(close(id.quad[&(0, 1)][1], -1.0));
        assert!(close(id.cubic[&(1, 1, 2)][0], 0.5));
        assert!(close(id.cubic[&(0, 1, 2)][0], 7.0));
        assert!(close(id.cubic[&(2, 2, 2)][1], 1.0));
        assert!(close(id.cubic[&(0, 0, 1)][1], 4.0));
        assert!(close(id.cubic[&(0, 1, 1)][1], 0.0));
        assert_eq!(id.evaluations, 2 * 3 + 3 * 3 + 2);
    }
}
