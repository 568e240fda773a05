use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};
use crate::mesh::{tent, ImpulseMesh};
use crate::quadrature::gauss_legendre_on;

/// Largest tolerated H-orthonormality defect of the assembled basis.
pub const ORTHOGONALITY_TOL: f64 = 1e-10;

/// Quadrature order used when none is requested.
pub fn default_quad_order(modes: usize) -> usize {
    3 * modes + 24
}

/// Coefficients in the split basis: `n` sine modes per subinterval (block `j`
/// at `j*n .. (j+1)*n`), then the `m` representer coefficients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientVector {
    modes: usize,
    nodes: usize,
    values: Vec<f64>,
}

impl CoefficientVector {
    pub fn zeros(modes: usize, nodes: usize) -> Self {
        Self {
            modes,
            nodes,
            values: vec![0.0; (nodes + 1) * modes + nodes],
        }
    }

    pub fn from_values(modes: usize, nodes: usize, values: Vec<f64>) -> Result<Self> {
        check_len("coefficients", (nodes + 1) * modes + nodes, values.len())?;
        Ok(Self {
            modes,
            nodes,
            values,
        })
    }

    /// Only the `M` part set.
    pub fn from_m_part(modes: usize, m_part: &[f64]) -> Self {
        let mut c = Self::zeros(modes, m_part.len());
        c.m_part_mut().copy_from_slice(m_part);
        c
    }

    pub(crate) fn from_dvector(modes: usize, nodes: usize, v: &DVector<f64>) -> Self {
        Self {
            modes,
            nodes,
            values: v.iter().copied().collect(),
        }
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn nodes(&self) -> usize {
        self.nodes
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn to_dvector(&self) -> DVector<f64> {
        DVector::from_column_slice(&self.values)
    }

    pub fn sine_block(&self, j: usize) -> &[f64] {
        &self.values[j * self.modes..(j + 1) * self.modes]
    }

    pub fn m_part(&self) -> &[f64] {
        &self.values[(self.nodes + 1) * self.modes..]
    }

    pub fn m_part_mut(&mut self) -> &mut [f64] {
        let start = (self.nodes + 1) * self.modes;
        &mut self.values[start..]
    }

    /// Embeds into a basis with `modes` sine modes per subinterval, dropping
    /// or zero-filling the high modes.
    pub fn prolong(&self, modes: usize) -> Self {
        let mut out = Self::zeros(modes, self.nodes);
        let keep = modes.min(self.modes);
        for j in 0..=self.nodes {
            out.values[j * modes..j * modes + keep].copy_from_slice(&self.sine_block(j)[..keep]);
        }
        out.m_part_mut().copy_from_slice(self.m_part());
        out
    }

    /// Euclidean distance between coefficient vectors of equal layout.
    pub fn distance(&self, other: &Self) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }

    pub fn euclidean_norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

/// Quadrature data and tabulated basis values on one subinterval.
#[derive(Debug, Clone)]
pub(crate) struct Panel {
    #[cfg(test)]
    pub x: Vec<f64>,
    pub w: Vec<f64>,
    /// `q × n` sine values.
    pub sine: DMatrix<f64>,
    /// `q × m` representer values.
    pub reps: DMatrix<f64>,
}

/// Truncated basis of `H¹₀(0,1) = N ⊕ M`: H-normalized sine modes supported on
/// single subintervals (spanning part of `N`) and the representers (spanning `M`).
#[derive(Debug, Clone)]
pub struct GalerkinBasis {
    mesh: ImpulseMesh,
    modes: usize,
    quad_order: usize,
    panels: Vec<Panel>,
    orthogonality_defect: f64,
}

impl GalerkinBasis {
    /// Builds the basis and verifies its H-orthonormality under quadrature.
    pub fn new(mesh: &ImpulseMesh, modes: usize, quad_order: usize) -> Result<Self> {
        if modes == 0 {
            return Err(Error::Domain {
                name: "modes",
                value: 0.0,
                reason: "at least one mode per subinterval",
            });
        }
        if quad_order < 2 * modes + 4 {
            return Err(Error::QuadratureTooCoarse {
                order: quad_order,
                modes,
                defect: f64::INFINITY,
            });
        }
        let m = mesh.node_count();
        let mut panels = Vec::with_capacity(m + 1);
        let mut defect = 0.0_f64;
        for j in 0..=m {
            let (left, right) = mesh.subinterval(j);
            let len = right - left;
            let (x, w) = gauss_legendre_on(quad_order, left, right);
            let sine =
                DMatrix::from_fn(quad_order, modes, |q, k| sine_mode(left, len, k + 1, x[q]));
            let reps = DMatrix::from_fn(quad_order, m, |q, l| tent(mesh.points()[l], x[q]));

            // H-inner products of derivatives
            let scale = (2.0 / len).sqrt();
            let dsine = DMatrix::from_fn(quad_order, modes, |q, k| {
                scale * ((k + 1) as f64 * PI * (x[q] - left) / len).cos()
            });
            let weighted = DMatrix::from_fn(quad_order, modes, |q, k| w[q] * dsine[(q, k)]);
            let gram_nn = dsine.transpose() * &weighted;
            for k in 0..modes {
                for l in 0..modes {
                    let target = if k == l { 1.0 } else { 0.0 };
                    defect = defect.max((gram_nn[(k, l)] - target).abs());
                }
                let integral: f64 = weighted.column(k).sum();
                for l in 0..m {
                    defect = defect.max((integral * mesh.representer_slope(l, j)).abs());
                }
            }
            panels.push(Panel {
                #[cfg(test)]
                x,
                w,
                sine,
                reps,
            });
        }
        if defect > ORTHOGONALITY_TOL {
            return Err(Error::QuadratureTooCoarse {
                order: quad_order,
                modes,
                defect,
            });
        }
        Ok(Self {
            mesh: mesh.clone(),
            modes,
            quad_order,
            panels,
            orthogonality_defect: defect,
        })
    }

    /// Basis with the default quadrature order.
    pub fn with_modes(mesh: &ImpulseMesh, modes: usize) -> Result<Self> {
        Self::new(mesh, modes, default_quad_order(modes))
    }

    pub fn mesh(&self) -> &ImpulseMesh {
        &self.mesh
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn quad_order(&self) -> usize {
        self.quad_order
    }

    /// `(m + 1) n + m`.
    pub fn dim(&self) -> usize {
        (self.mesh.node_count() + 1) * self.modes + self.mesh.node_count()
    }

    pub fn orthogonality_defect(&self) -> f64 {
        self.orthogonality_defect
    }

    pub(crate) fn panels(&self) -> &[Panel] {
        &self.panels
    }

    /// Index of sine mode `k` (1-based) on subinterval `j`.
    pub fn sine_index(&self, j: usize, k: usize) -> usize {
        j * self.modes + (k - 1)
    }

    /// Index of representer `l`.
    pub fn m_index(&self, l: usize) -> usize {
        (self.mesh.node_count() + 1) * self.modes + l
    }

    pub fn zeros(&self) -> CoefficientVector {
        CoefficientVector::zeros(self.modes, self.mesh.node_count())
    }

    pub(crate) fn check(&self, coeffs: &CoefficientVector) -> Result<()> {
        check_len("coefficients", self.dim(), coeffs.dim())?;
        if coeffs.modes() != self.modes {
            return Err(Error::LengthMismatch {
                what: "modes per subinterval",
                expected: self.modes,
                found: coeffs.modes(),
            });
        }
        Ok(())
    }

    /// `‖u‖² = Σ c_{jk}² + c_Mᵀ G c_M`.
    pub fn norm_squared(&self, coeffs: &CoefficientVector) -> Result<f64> {
        self.check(coeffs)?;
        let sine: f64 = coeffs.as_slice()[..self.dim() - self.mesh.node_count()]
            .iter()
            .map(|c| c * c)
            .sum();
        let (h, _) = self.mesh.m_subspace_norms(coeffs.m_part())?;
        Ok(sine + h * h)
    }

    /// Value of the expansion at `x ∈ [0, 1]`.
    pub fn eval_u(&self, coeffs: &CoefficientVector, x: f64) -> Result<f64> {
        self.check(coeffs)?;
        if !(0.0..=1.0).contains(&x) {
            return Err(Error::Domain {
                name: "x",
                value: x,
                reason: "must lie in [0, 1]",
            });
        }
        let j = self.mesh.locate(x);
        let (left, right) = self.mesh.subinterval(j);
        let len = right - left;
        let sine: f64 = coeffs
            .sine_block(j)
            .iter()
            .enumerate()
            .map(|(k, c)| c * sine_mode(left, len, k + 1, x))
            .sum();
        let m_part: f64 = coeffs
            .m_part()
            .iter()
            .zip(self.mesh.points())
            .map(|(c, &xl)| c * tent(xl, x))
            .sum();
        Ok(sine + m_part)
    }

    /// Derivative of the expansion at `x`, taken from subinterval `j`
    /// (one-sided at its ends).
    pub fn eval_du_on(&self, coeffs: &CoefficientVector, j: usize, x: f64) -> Result<f64> {
        self.check(coeffs)?;
        let (left, right) = self.mesh.subinterval(j);
        let len = right - left;
        let scale = (2.0 / len).sqrt();
        let sine: f64 = coeffs
            .sine_block(j)
            .iter()
            .enumerate()
            .map(|(k, c)| c * scale * ((k + 1) as f64 * PI * (x - left) / len).cos())
            .sum();
        let m_part: f64 = coeffs
            .m_part()
            .iter()
            .enumerate()
            .map(|(l, c)| c * self.mesh.representer_slope(l, j))
            .sum();
        Ok(sine + m_part)
    }

    /// `u(x_l)` at the interior nodes; only the `M` part contributes.
    pub fn node_values(&self, coeffs: &CoefficientVector) -> Result<Vec<f64>> {
        self.check(coeffs)?;
        self.mesh.node_values(coeffs.m_part())
    }
}

/// `sin(kπ(x - left)/ℓ) / (kπ/√(2ℓ))`.
#[inline]
pub(crate) fn sine_mode(left: f64, len: f64, k: usize, x: f64) -> f64 {
    let kpi = k as f64 * PI;
    (kpi * (x - left) / len).sin() * (2.0 * len).sqrt() / kpi
}
