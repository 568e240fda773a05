//! Resonance set, Hessian at zero on `M`, Morse index and critical groups.
//!
//! For linear impulse slopes `b` the asymptotic problem has a nontrivial
//! solution iff `det(diag(b) G - I) = 0`, `G` being the Gram matrix of the
//! representers. On `M` the Hessian of the quadratic functional at zero is
//! `A = G - G diag(b) G`; its number of negative eigenvalues `m₀` fixes the
//! critical groups `C_q = δ_{q m₀} 𝒢`.

mod certificate;
mod scan;

pub use certificate::{
    nontriviality_certificate, Certificate, CheckStatus, Conclusion, EquallySpacedThresholds,
    HypothesisCheck, Witness,
};
pub use scan::{resonance_path_scan, Crossing, PathSample, PathScan};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{check_len, Result};
use crate::mesh::ImpulseMesh;

/// Relative tolerance for membership in the resonance set.
pub const RESONANCE_TOL: f64 = 1e-10;
/// Relative tolerance for zero eigenvalues of `A`.
pub const DEGENERACY_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResonanceValue {
    pub det: f64,
    pub in_b: bool,
}

/// One entry of the critical-group table, `C_q(Φ, 0)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CriticalGroup {
    /// The coefficient group `𝒢`.
    #[serde(rename = "G")]
    Coefficient,
    #[serde(rename = "0")]
    Trivial,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "status", content = "groups")]
pub enum CriticalGroups {
    /// `C_q` for `q = 0..=m`; all higher groups vanish.
    Defined(Vec<CriticalGroup>),
    /// Zero is a degenerate critical point (`b ∈ B`).
    UndefinedInB,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MorseReport {
    /// Row-major `m × m` Hessian on `M` in the representer basis.
    pub hessian: Vec<Vec<f64>>,
    /// Ascending.
    pub eigenvalues: Vec<f64>,
    /// Unit eigenvectors (coefficients in the representer basis), matching
    /// `eigenvalues`.
    pub eigenvectors: Vec<Vec<f64>>,
    pub m0: usize,
    pub nondegenerate: bool,
    pub tolerance: f64,
    pub critical_groups: CriticalGroups,
}

impl MorseReport {
    pub fn largest_eigenvalue(&self) -> f64 {
        *self.eigenvalues.last().expect("m >= 1")
    }
}

/// `diag(b) G - I`, rows indexed by node `j`, columns by representer `k`.
pub fn resonance_matrix(mesh: &ImpulseMesh, b: &[f64]) -> Result<DMatrix<f64>> {
    check_len("b", mesh.node_count(), b.len())?;
    let g = mesh.gram();
    let m = b.len();
    Ok(DMatrix::from_fn(m, m, |j, k| {
        b[j] * g[(k, j)] - if j == k { 1.0 } else { 0.0 }
    }))
}

/// Determinant of `(b_j w_k(x_j) - δ_{jk})` and the tolerance test for `b ∈ B`.
///
/// `b ∈ B` when `|det| ≤ 1e-10 (1 + ‖b‖_∞ ‖G‖_∞)^m`.
pub fn resonance_det(mesh: &ImpulseMesh, b: &[f64]) -> Result<ResonanceValue> {
    let matrix = resonance_matrix(mesh, b)?;
    let det = matrix.lu().determinant();
    let m = b.len() as i32;
    let b_inf = b.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()));
    let scale = (1.0 + b_inf * inf_norm(mesh.gram())).powi(m);
    Ok(ResonanceValue {
        det,
        in_b: det.abs() <= RESONANCE_TOL * scale,
    })
}

/// `A = G - G diag(b) G`, the Hessian at zero restricted to `M`.
pub fn hessian_on_m(mesh: &ImpulseMesh, b: &[f64]) -> Result<DMatrix<f64>> {
    check_len("b", mesh.node_count(), b.len())?;
    let g = mesh.gram();
    let scaled = DMatrix::from_fn(g.nrows(), g.ncols(), |l, k| b[l] * g[(l, k)]);
    let mut a = g - g * scaled;
    symmetrize(&mut a);
    Ok(a)
}

/// Eigen-decomposition of `A`, Morse index and critical groups at zero.
pub fn morse_report(mesh: &ImpulseMesh, b: &[f64]) -> Result<MorseReport> {
    let a = hessian_on_m(mesh, b)?;
    let m = a.nrows();
    let tolerance = DEGENERACY_TOL * (1.0 + inf_norm(&a));
    let eig = a.clone().symmetric_eigen();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let eigenvalues: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let eigenvectors: Vec<Vec<f64>> = order
        .iter()
        .map(|&i| eig.eigenvectors.column(i).iter().copied().collect())
        .collect();

    let m0 = eigenvalues.iter().filter(|&&l| l < -tolerance).count();
    let nondegenerate = eigenvalues.iter().all(|l| l.abs() > tolerance);
    let critical_groups = if nondegenerate {
        CriticalGroups::Defined(
            (0..=m)
                .map(|q| {
                    if q == m0 {
                        CriticalGroup::Coefficient
                    } else {
                        CriticalGroup::Trivial
                    }
                })
                .collect(),
        )
    } else {
        CriticalGroups::UndefinedInB
    };
    Ok(MorseReport {
        hessian: a.row_iter().map(|r| r.iter().copied().collect()).collect(),
        eigenvalues,
        eigenvectors,
        m0,
        nondegenerate,
        tolerance,
        critical_groups,
    })
}

/// `∫ w'² - Σ b_j w(x_j)²` for `w = Σ c_k w_k`.
pub fn quadratic_form(mesh: &ImpulseMesh, b: &[f64], c: &[f64]) -> Result<f64> {
    let a = hessian_on_m(mesh, b)?;
    check_len("M-coefficients", mesh.node_count(), c.len())?;
    let c = DVector::from_column_slice(c);
    Ok(c.dot(&(a * &c)))
}

pub(crate) fn inf_norm(a: &DMatrix<f64>) -> f64 {
    a.row_iter()
        .map(|r| r.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

fn symmetrize(a: &mut DMatrix<f64>) {
    let n = a.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            let v = 0.5 * (a[(i, j)] + a[(j, i)]);
            a[(i, j)] = v;
            a[(j, i)] = v;
        }
    }
}
