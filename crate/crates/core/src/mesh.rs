//! Impulse mesh, point-evaluation representers and their Gram matrix.
//!
//! For an interior node `x_j` the representer `w_j` is the unique element of
//! `H¹₀(0,1)` with `<u, w_j> = u(x_j)` under `<u, v> = ∫ u'v'`. It is the
//! tent function `(1 - x_j) x` left of the node and `x_j (1 - x)` right of it.
//! Spans of the representers are exactly the continuous functions that are
//! affine between nodes and vanish at 0 and 1.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{check_len, Error, Result};

/// Minimum gap between consecutive mesh points (including 0 and 1).
pub const MIN_SEPARATION: f64 = 1e-10;

/// Partition `0 = x_0 < x_1 < ... < x_m < x_{m+1} = 1` with cached Gram data.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ImpulseMesh {
    points: Vec<f64>,
    lengths: Vec<f64>,
    #[serde(skip)]
    gram: DMatrix<f64>,
}

impl ImpulseMesh {
    /// Validates the interior points and builds the mesh.
    ///
    /// Points must already be sorted; unsorted input is rejected rather than
    /// silently reordered so that coefficient vectors keep their meaning.
    pub fn new(points: &[f64]) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::EmptyMesh);
        }
        for (index, &value) in points.iter().enumerate() {
            if !(value > 0.0 && value < 1.0) {
                return Err(Error::PointOutOfRange { index, value });
            }
            if index > 0 {
                let prev = points[index - 1];
                if value == prev {
                    return Err(Error::DuplicatePoint { index });
                }
                if value < prev {
                    return Err(Error::NotIncreasing { index });
                }
            }
        }
        let mut lengths = Vec::with_capacity(points.len() + 1);
        let mut prev = 0.0;
        for &p in points.iter().chain(std::iter::once(&1.0)) {
            lengths.push(p - prev);
            prev = p;
        }
        if let Some(pos) = lengths.iter().position(|&l| l < MIN_SEPARATION) {
            return Err(Error::PointsTooClose {
                index: pos.min(points.len() - 1),
                min_separation: MIN_SEPARATION,
            });
        }
        let gram = assemble_gram(points);
        Ok(Self {
            points: points.to_vec(),
            lengths,
            gram,
        })
    }

    /// Mesh with `m` equally spaced interior points `j / (m + 1)`.
    pub fn equally_spaced(m: usize) -> Result<Self> {
        let pts: Vec<f64> = (1..=m).map(|j| j as f64 / (m + 1) as f64).collect();
        Self::new(&pts)
    }

    /// Number of interior points `m`.
    pub fn node_count(&self) -> usize {
        self.points.len()
    }

    /// Number of subintervals `m + 1`.
    pub fn subinterval_count(&self) -> usize {
        self.lengths.len()
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn lengths(&self) -> &[f64] {
        &self.lengths
    }

    /// Left and right end of subinterval `j` (0-based, `0..=m`).
    pub fn subinterval(&self, j: usize) -> (f64, f64) {
        let left = if j == 0 { 0.0 } else { self.points[j - 1] };
        let right = if j == self.points.len() {
            1.0
        } else {
            self.points[j]
        };
        (left, right)
    }

    /// Extended node list `x_0 = 0, x_1, ..., x_m, x_{m+1} = 1`.
    pub fn extended_nodes(&self) -> Vec<f64> {
        let mut nodes = Vec::with_capacity(self.points.len() + 2);
        nodes.push(0.0);
        nodes.extend_from_slice(&self.points);
        nodes.push(1.0);
        nodes
    }

    /// Index of the subinterval containing `x`; nodes belong to the right one
    /// except `x = 1`.
    pub fn locate(&self, x: f64) -> usize {
        self.points.partition_point(|&p| p <= x)
    }

    /// True when the interior points are `j / (m + 1)` to within `tol`.
    pub fn is_equally_spaced(&self, tol: f64) -> bool {
        let m1 = (self.points.len() + 1) as f64;
        self.points
            .iter()
            .enumerate()
            .all(|(j, &p)| (p - (j + 1) as f64 / m1).abs() <= tol)
    }

    /// Gram matrix `G_{jk} = <w_j, w_k> = w_j(x_k)`.
    pub fn gram(&self) -> &DMatrix<f64> {
        &self.gram
    }

    /// Evaluates the representer `w_j` at `x`.
    pub fn representer(&self, j: usize, x: f64) -> Result<f64> {
        let xj = *self.points.get(j).ok_or_else(|| Error::IndexOutOfRange {
            what: "node",
            index: j,
            valid: format!("0..{}", self.points.len()),
        })?;
        if !(0.0..=1.0).contains(&x) {
            return Err(Error::Domain {
                name: "x",
                value: x,
                reason: "must lie in [0, 1]",
            });
        }
        Ok(tent(xj, x))
    }

    /// Slope of `w_j` on subinterval `i`.
    pub(crate) fn representer_slope(&self, j: usize, i: usize) -> f64 {
        let xj = self.points[j];
        if i <= j {
            1.0 - xj
        } else {
            -xj
        }
    }

    /// H-norm and node-max norm of `w = Σ c_j w_j`.
    ///
    /// Returns `(sqrt(cᵀ G c), max_l |w(x_l)|)`.
    pub fn m_subspace_norms(&self, c: &[f64]) -> Result<(f64, f64)> {
        check_len("M-coefficients", self.node_count(), c.len())?;
        let c = DVector::from_column_slice(c);
        let node_values = &self.gram * &c;
        let h_sq = c.dot(&node_values).max(0.0);
        let node_max = node_values.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()));
        Ok((h_sq.sqrt(), node_max))
    }

    /// Values `w(x_l)` of `w = Σ c_j w_j` at the interior nodes.
    pub fn node_values(&self, c: &[f64]) -> Result<Vec<f64>> {
        check_len("M-coefficients", self.node_count(), c.len())?;
        let c = DVector::from_column_slice(c);
        Ok((&self.gram * c).iter().copied().collect())
    }
}

#[inline]
pub(crate) fn tent(xj: f64, x: f64) -> f64 {
    if x < xj {
        (1.0 - xj) * x
    } else {
        xj * (1.0 - x)
    }
}

fn assemble_gram(points: &[f64]) -> DMatrix<f64> {
    let m = points.len();
    let mut g = DMatrix::zeros(m, m);
    for j in 0..m {
        for k in j..m {
            let v = tent(points[j], points[k]);
            g[(j, k)] = v;
            g[(k, j)] = v;
        }
    }
    g
}
