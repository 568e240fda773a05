//! `Φ(u) = ½‖u‖² - ∫ F(x, u) - Σ I_j(u(x_j))` and its derivatives in the split
//! basis.

use nalgebra::{DMatrix, DVector};

use super::basis::{CoefficientVector, GalerkinBasis};
use super::problem::ProblemSpec;
use crate::error::{Error, Result};

fn check(problem: &ProblemSpec, basis: &GalerkinBasis, coeffs: &CoefficientVector) -> Result<()> {
    if problem.mesh().points() != basis.mesh().points() {
        return Err(Error::MeshMismatch);
    }
    basis.check(coeffs)
}

/// `u` at the quadrature nodes of every subinterval.
fn values_at_nodes(basis: &GalerkinBasis, coeffs: &CoefficientVector) -> Vec<DVector<f64>> {
    let cm = DVector::from_column_slice(coeffs.m_part());
    basis
        .panels()
        .iter()
        .enumerate()
        .map(|(j, panel)| {
            let cs = DVector::from_column_slice(coeffs.sine_block(j));
            &panel.sine * cs + &panel.reps * &cm
        })
        .collect()
}

pub fn energy(
    problem: &ProblemSpec,
    basis: &GalerkinBasis,
    coeffs: &CoefficientVector,
) -> Result<f64> {
    check(problem, basis, coeffs)?;
    let quadratic = 0.5 * basis.norm_squared(coeffs)?;
    let u_q = values_at_nodes(basis, coeffs);
    let mut forcing = 0.0;
    for (j, (panel, u)) in basis.panels().iter().zip(&u_q).enumerate() {
        forcing += panel
            .w
            .iter()
            .zip(u.iter())
            .map(|(w, &t)| w * problem.f_primitive(j, t))
            .sum::<f64>();
    }
    let impulses: f64 = basis
        .node_values(coeffs)?
        .iter()
        .enumerate()
        .map(|(j, &t)| problem.impulse_primitive(j, t))
        .sum();
    Ok(quadratic - forcing - impulses)
}

/// Partial derivatives `∂Φ/∂c` in the basis coordinates.
pub fn gradient(
    problem: &ProblemSpec,
    basis: &GalerkinBasis,
    coeffs: &CoefficientVector,
) -> Result<CoefficientVector> {
    check(problem, basis, coeffs)?;
    let mesh = basis.mesh();
    let m = mesh.node_count();
    let n = basis.modes();
    let g = mesh.gram();
    let cm = DVector::from_column_slice(coeffs.m_part());
    let node_u = g * &cm;

    let mut grad = coeffs.to_dvector();
    // M block starts as G c_M
    grad.rows_mut(basis.m_index(0), m).copy_from(&node_u);

    let u_q = values_at_nodes(basis, coeffs);
    let mut m_forcing = DVector::zeros(m);
    for (j, (panel, u)) in basis.panels().iter().zip(&u_q).enumerate() {
        let weighted = DVector::from_iterator(
            u.len(),
            panel
                .w
                .iter()
                .zip(u.iter())
                .map(|(w, &t)| w * problem.f(j, t)),
        );
        let sine = panel.sine.tr_mul(&weighted);
        let mut block = grad.rows_mut(j * n, n);
        block -= sine;
        m_forcing += panel.reps.tr_mul(&weighted);
    }
    let impulses = DVector::from_iterator(
        m,
        node_u
            .iter()
            .enumerate()
            .map(|(i, &t)| problem.impulse(i, t)),
    );
    let mut m_block = grad.rows_mut(basis.m_index(0), m);
    m_block -= m_forcing;
    m_block -= g * impulses;
    Ok(CoefficientVector::from_dvector(n, m, &grad))
}

/// Symmetric Hessian `⟨e, e'⟩ - ∫ f_t e e' - Σ ı_j'(u(x_j)) e(x_j) e'(x_j)`.
pub fn hessian(
    problem: &ProblemSpec,
    basis: &GalerkinBasis,
    coeffs: &CoefficientVector,
) -> Result<DMatrix<f64>> {
    check(problem, basis, coeffs)?;
    if let Some(name) = problem.missing_derivative() {
        return Err(Error::MissingDerivative {
            name: name.to_string(),
            missing: "derivative",
        });
    }
    let mesh = basis.mesh();
    let m = mesh.node_count();
    let n = basis.modes();
    let dim = basis.dim();
    let g = mesh.gram();
    let mut h = DMatrix::<f64>::zeros(dim, dim);
    for i in 0..(dim - m) {
        h[(i, i)] = 1.0;
    }
    let mo = basis.m_index(0);

    let u_q = values_at_nodes(basis, coeffs);
    let mut mm = g.clone();
    for (j, (panel, u)) in basis.panels().iter().zip(&u_q).enumerate() {
        let omega: Vec<f64> = panel
            .w
            .iter()
            .zip(u.iter())
            .map(|(w, &t)| w * problem.f_t(j, t).expect("derivatives checked"))
            .collect();
        let ws = DMatrix::from_fn(panel.sine.nrows(), n, |q, k| omega[q] * panel.sine[(q, k)]);
        let wr = DMatrix::from_fn(panel.reps.nrows(), m, |q, l| omega[q] * panel.reps[(q, l)]);
        let ss = panel.sine.tr_mul(&ws);
        let sr = panel.sine.tr_mul(&wr);
        mm -= panel.reps.tr_mul(&wr);
        let mut block = h.view_mut((j * n, j * n), (n, n));
        block -= &ss;
        h.view_mut((j * n, mo), (n, m)).copy_from(&(-&sr));
        h.view_mut((mo, j * n), (m, n))
            .copy_from(&(-sr.transpose()));
    }
    let node_u = g * DVector::from_column_slice(coeffs.m_part());
    for (i, &t) in node_u.iter().enumerate() {
        let slope = problem
            .impulse_derivative(i, t)
            .expect("derivatives checked");
        let col = g.column(i);
        mm -= slope * col * col.transpose();
    }
    h.view_mut((mo, mo), (m, m)).copy_from(&mm);
    // exact symmetry
    for r in 0..dim {
        for c in (r + 1)..dim {
            let v = 0.5 * (h[(r, c)] + h[(c, r)]);
            h[(r, c)] = v;
            h[(c, r)] = v;
        }
    }
    Ok(h)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::galerkin::catalog::Nonlinearity;
    use crate::galerkin::problem::ForcingScale;
    use crate::mesh::ImpulseMesh;
    use crate::resonance::hessian_on_m;
    use crate::spectral::subinterval_eigenvalue;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn cubic() -> Nonlinearity {
        Nonlinearity::from_catalog("cubic").unwrap().unwrap()
    }

    fn example_problem(points: &[f64], a: f64, b: f64) -> ProblemSpec {
        let mesh = ImpulseMesh::new(points).unwrap();
        let m = mesh.node_count();
        ProblemSpec::linear(mesh, vec![a; m + 1], vec![b; m])
            .unwrap()
            .with_forcing(
                Nonlinearity::from_catalog("rational_cubic")
                    .unwrap()
                    .unwrap(),
                ForcingScale::BySlope,
            )
            .with_uniform_impulse(
                Nonlinearity::from_catalog("cubic_plus_square")
                    .unwrap()
                    .unwrap(),
            )
    }

    #[test]
    fn energy_examples() {
        let mesh = ImpulseMesh::new(&[0.5]).unwrap();
        let basis = GalerkinBasis::with_modes(&mesh, 4).unwrap();
        let c = CoefficientVector::from_m_part(4, &[1.0]);
        let free = ProblemSpec::linear(mesh.clone(), vec![0.0, 0.0], vec![0.0]).unwrap();
        assert!((energy(&free, &basis, &c).unwrap() - 0.125).abs() < 1e-15);
        let kicked = ProblemSpec::linear(mesh, vec![0.0, 0.0], vec![4.0]).unwrap();
        assert!(energy(&kicked, &basis, &c).unwrap().abs() < 1e-15);
        assert_eq!(energy(&kicked, &basis, &basis.zeros()).unwrap(), 0.0);
    }

    #[test]
    fn norm_identity_for_pure_quadratic() {
        let mesh = ImpulseMesh::new(&[0.25, 0.6]).unwrap();
        let basis = GalerkinBasis::with_modes(&mesh, 5).unwrap();
        let free = ProblemSpec::linear(mesh.clone(), vec![0.0; 3], vec![0.0; 2]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let mut c = basis.zeros();
            c.as_mut_slice()
                .iter_mut()
                .for_each(|v| *v = rng.random_range(-2.0..2.0));
            let direct: f64 = c.as_slice()[..15].iter().map(|v| v * v).sum::<f64>()
                + mesh.m_subspace_norms(c.m_part()).unwrap().0.powi(2);
            assert!((energy(&free, &basis, &c).unwrap() - 0.5 * direct).abs() < 1e-12);
        }
    }

    #[test]
    fn gradient_zero_at_trivial_point() {
        let p = example_problem(&[0.5], 50.0 * PI * PI, 3.0);
        let basis = GalerkinBasis::with_modes(p.mesh(), 6).unwrap();
        let g = gradient(&p, &basis, &basis.zeros()).unwrap();
        assert!(g.as_slice().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn gradient_matches_central_differences() {
        let p = example_problem(&[0.4], 50.0 * PI * PI, 3.0);
        let basis = GalerkinBasis::with_modes(p.mesh(), 8).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..5 {
            let mut c = basis.zeros();
            c.as_mut_slice()
                .iter_mut()
                .for_each(|v| *v = rng.random_range(-0.5..0.5));
            let g = gradient(&p, &basis, &c).unwrap();
            for i in 0..basis.dim() {
                let h = 1e-6;
                let mut cp = c.clone();
                cp.as_mut_slice()[i] += h;
                let mut cm = c.clone();
                cm.as_mut_slice()[i] -= h;
                let fd = (energy(&p, &basis, &cp).unwrap() - energy(&p, &basis, &cm).unwrap())
                    / (2.0 * h);
                let scale = g.as_slice()[i].abs().max(1.0);
                assert!(
                    (fd - g.as_slice()[i]).abs() <= 1e-6 * scale,
                    "{i}: {fd} vs {}",
                    g.as_slice()[i]
                );
            }
        }
    }

    #[test]
    fn linear_impulse_gradient_is_a_times_c() {
        let mesh = ImpulseMesh::new(&[0.3, 0.7]).unwrap();
        let b = vec![5.0, -2.0];
        let p = ProblemSpec::linear(mesh.clone(), vec![0.0; 3], b.clone()).unwrap();
        let basis = GalerkinBasis::with_modes(&mesh, 3).unwrap();
        let cm = [0.8, -1.3];
        let c = CoefficientVector::from_m_part(3, &cm);
        let g = gradient(&p, &basis, &c).unwrap();
        let a = hessian_on_m(&mesh, &b).unwrap();
        let expected = a * DVector::from_column_slice(&cm);
        for l in 0..2 {
            assert!((g.m_part()[l] - expected[l]).abs() < 1e-15);
        }
        let h = hessian(&p, &basis, &c).unwrap();
        let a = hessian_on_m(&mesh, &b).unwrap();
        for r in 0..2 {
            for s in 0..2 {
                assert!((h[(basis.m_index(r), basis.m_index(s))] - a[(r, s)]).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn sine_components_never_see_impulses() {
        let mesh = ImpulseMesh::new(&[0.35]).unwrap();
        let basis = GalerkinBasis::with_modes(&mesh, 5).unwrap();
        let base = ProblemSpec::linear(mesh.clone(), vec![7.0, -3.0], vec![1.0]).unwrap();
        let other = ProblemSpec::linear(mesh, vec![7.0, -3.0], vec![-9.0])
            .unwrap()
            .with_uniform_impulse(cubic());
        let mut c = basis.zeros();
        for (i, v) in c.as_mut_slice().iter_mut().enumerate() {
            *v = 0.1 * i as f64 - 0.4;
        }
        let g1 = gradient(&base, &basis, &c).unwrap();
        let g2 = gradient(&other, &basis, &c).unwrap();
        assert_eq!(&g1.as_slice()[..10], &g2.as_slice()[..10]);
        assert_ne!(g1.m_part(), g2.m_part());
    }

    #[test]
    fn linear_hessian_diagonal_and_free_identity() {
        let mesh = ImpulseMesh::new(&[0.5]).unwrap();
        let basis = GalerkinBasis::with_modes(&mesh, 6).unwrap();
        let a = [30.0, 170.0];
        let p = ProblemSpec::linear(mesh.clone(), a.to_vec(), vec![2.0]).unwrap();
        let h = hessian(&p, &basis, &basis.zeros()).unwrap();
        for (j, aj) in a.iter().enumerate() {
            for k in 1..=6 {
                let i = basis.sine_index(j, k);
                let lk = subinterval_eigenvalue(&mesh, j, k).unwrap();
                assert!((h[(i, i)] - (1.0 - aj / lk)).abs() < 1e-12);
            }
        }
        let free = ProblemSpec::linear(mesh.clone(), vec![0.0; 2], vec![0.0]).unwrap();
        let h = hessian(&free, &basis, &basis.zeros()).unwrap();
        let mut expected = DMatrix::identity(13, 13);
        expected[(12, 12)] = 0.25;
        assert_eq!(h, expected);
    }

    #[test]
    fn hessian_rows_match_gradient_differences() {
        let p = example_problem(&[0.5], 50.0 * PI * PI, 3.0);
        let basis = GalerkinBasis::with_modes(p.mesh(), 6).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut c = basis.zeros();
        c.as_mut_slice()
            .iter_mut()
            .for_each(|v| *v = rng.random_range(-0.5..0.5));
        let h = hessian(&p, &basis, &c).unwrap();
        assert_eq!(h, h.transpose());
        for i in 0..basis.dim() {
            let step = 1e-6;
            let mut cp = c.clone();
            cp.as_mut_slice()[i] += step;
            let mut cm = c.clone();
            cm.as_mut_slice()[i] -= step;
            let gp = gradient(&p, &basis, &cp).unwrap();
            let gm = gradient(&p, &basis, &cm).unwrap();
            let scale = h.row(i).amax().max(1.0);
            for r in 0..basis.dim() {
                let fd = (gp.as_slice()[r] - gm.as_slice()[r]) / (2.0 * step);
                assert!((fd - h[(r, i)]).abs() <= 1e-5 * scale);
            }
        }
    }

    #[test]
    fn missing_derivative_is_an_error() {
        let mesh = ImpulseMesh::new(&[0.5]).unwrap();
        let basis = GalerkinBasis::with_modes(&mesh, 2).unwrap();
        let nd = Nonlinearity::custom(
            "no_derivative",
            |t| t * t * t,
            None,
            |t| t.powi(4) / 4.0,
            crate::galerkin::Growth::Undeclared,
        );
        let p = ProblemSpec::linear(mesh, vec![0.0; 2], vec![0.0])
            .unwrap()
            .with_uniform_impulse(nd);
        assert!(matches!(
            hessian(&p, &basis, &basis.zeros()),
            Err(Error::MissingDerivative { .. })
        ));
    }

    #[test]
    fn mesh_mismatch_rejected() {
        let p = ProblemSpec::linear(ImpulseMesh::new(&[0.5]).unwrap(), vec![0.0; 2], vec![0.0])
            .unwrap();
        let basis = GalerkinBasis::with_modes(&ImpulseMesh::new(&[0.4]).unwrap(), 2).unwrap();
        assert_eq!(energy(&p, &basis, &basis.zeros()), Err(Error::MeshMismatch));
    }
}
