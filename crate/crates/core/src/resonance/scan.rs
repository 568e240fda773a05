use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use super::{inf_norm, morse_report, resonance_det, resonance_matrix};
use crate::error::{check_len, Error, Result};
use crate::mesh::ImpulseMesh;

/// Crossing brackets are refined until their width in `b`-units is below this.
pub const CROSSING_WIDTH: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathSample {
    pub t: f64,
    pub b: Vec<f64>,
    pub det: f64,
    /// -1, 0 or 1; zero when the sample lies in `B` within tolerance.
    pub det_sign: i8,
    pub m0: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Crossing {
    pub t: f64,
    pub b: Vec<f64>,
    pub m0_before: usize,
    pub m0_after: usize,
    /// Dimension of the solution space of the asymptotic problem at the crossing.
    pub nullity: usize,
    /// False for crossings located through a jump of `m₀` with no sign change
    /// of the determinant (even multiplicity).
    pub sign_change: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathScan {
    pub samples: Vec<PathSample>,
    pub crossings: Vec<Crossing>,
    /// Parameters in `[0, 1]` where `m₀` changed away from any located crossing.
    pub violations: Vec<f64>,
    pub m0_constant_between_crossings: bool,
}

/// Samples `b(t) = b_start + t (b_end - b_start)` at `steps + 1` points and
/// locates every passage through the resonance set.
pub fn resonance_path_scan(
    mesh: &ImpulseMesh,
    b_start: &[f64],
    b_end: &[f64],
    steps: usize,
) -> Result<PathScan> {
    check_len("b_start", mesh.node_count(), b_start.len())?;
    check_len("b_end", mesh.node_count(), b_end.len())?;
    if steps < 2 {
        return Err(Error::Domain {
            name: "steps",
            value: steps as f64,
            reason: "at least 2 steps required",
        });
    }
    for (which, b) in [("start", b_start), ("end", b_end)] {
        let r = resonance_det(mesh, b)?;
        if r.in_b {
            return Err(Error::EndpointInResonanceSet { which, det: r.det });
        }
    }
    let path = Path {
        mesh,
        start: b_start,
        end: b_end,
    };
    let samples: Vec<PathSample> = (0..=steps)
        .map(|i| path.sample(i as f64 / steps as f64))
        .collect::<Result<_>>()?;

    let length = b_start
        .iter()
        .zip(b_end)
        .fold(0.0_f64, |acc, (s, e)| acc.max((e - s).abs()));
    let t_width = if length > 0.0 {
        CROSSING_WIDTH / length
    } else {
        1.0
    };

    let mut crossings = Vec::new();
    let mut violations = Vec::new();
    // endpoints are outside B, so the first and last samples carry a sign
    let signed: Vec<&PathSample> = samples.iter().filter(|s| s.det_sign != 0).collect();
    for pair in signed.windows(2) {
        let (p, q) = (pair[0], pair[1]);
        if p.det_sign != q.det_sign {
            let t = path.bisect_det(p.t, q.t, p.det_sign, t_width)?;
            crossings.push(path.crossing(t, p.m0, q.m0, true)?);
        } else if p.m0 != q.m0 {
            let t = path.bisect_m0(p.t, q.t, p.m0, t_width)?;
            let b = path.point(t);
            let nullity = nullity(mesh, &b)?;
            if nullity > 0 {
                crossings.push(path.crossing(t, p.m0, q.m0, false)?);
            } else {
                violations.push(t);
            }
        }
    }
    Ok(PathScan {
        m0_constant_between_crossings: violations.is_empty(),
        samples,
        crossings,
        violations,
    })
}

struct Path<'a> {
    mesh: &'a ImpulseMesh,
    start: &'a [f64],
    end: &'a [f64],
}

impl Path<'_> {
    fn point(&self, t: f64) -> Vec<f64> {
        self.start
            .iter()
            .zip(self.end)
            .map(|(s, e)| s + t * (e - s))
            .collect()
    }

    fn sample(&self, t: f64) -> Result<PathSample> {
        let b = self.point(t);
        let r = resonance_det(self.mesh, &b)?;
        let m0 = morse_report(self.mesh, &b)?.m0;
        let det_sign = if r.in_b || r.det == 0.0 {
            0
        } else if r.det > 0.0 {
            1
        } else {
            -1
        };
        Ok(PathSample {
            t,
            b,
            det: r.det,
            det_sign,
            m0,
        })
    }

    fn det(&self, t: f64) -> Result<f64> {
        Ok(resonance_det(self.mesh, &self.point(t))?.det)
    }

    fn bisect_det(&self, mut lo: f64, mut hi: f64, lo_sign: i8, width: f64) -> Result<f64> {
        while hi - lo > width {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            let d = self.det(mid)?;
            if d == 0.0 {
                return Ok(mid);
            }
            if (d > 0.0) == (lo_sign > 0) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(0.5 * (lo + hi))
    }

    fn bisect_m0(&self, mut lo: f64, mut hi: f64, m0_lo: usize, width: f64) -> Result<f64> {
        while hi - lo > width {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if morse_report(self.mesh, &self.point(mid))?.m0 == m0_lo {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(0.5 * (lo + hi))
    }

    fn crossing(
        &self,
        t: f64,
        m0_before: usize,
        m0_after: usize,
        sign_change: bool,
    ) -> Result<Crossing> {
        let b = self.point(t);
        let nullity = nullity(self.mesh, &b)?;
        Ok(Crossing {
            t,
            b,
            m0_before,
            m0_after,
            nullity,
            sign_change,
        })
    }
}

/// Number of singular values of `diag(b) G - I` that vanish relative to its scale.
pub(crate) fn nullity(mesh: &ImpulseMesh, b: &[f64]) -> Result<usize> {
    let r = resonance_matrix(mesh, b)?;
    let b_inf = b.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()));
    let scale = 1.0 + b_inf * inf_norm(mesh.gram());
    let sv: DVector<f64> = r.singular_values();
    Ok(sv.iter().filter(|&&s| s <= 1e-7 * scale).count())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_node_crossing_at_four() {
        let mesh = ImpulseMesh::new(&[0.5]).unwrap();
        let scan = resonance_path_scan(&mesh, &[0.0], &[8.0], 100).unwrap();
        assert_eq!(scan.crossings.len(), 1);
        let c = &scan.crossings[0];
        assert!((c.b[0] - 4.0).abs() < 1e-8);
        assert_eq!((c.m0_before, c.m0_after, c.nullity), (0, 1, 1));
        assert!(scan.m0_constant_between_crossings);
    }

    #[test]
    fn thirds_diagonal_crossings() {
        let mesh = ImpulseMesh::new(&[1.0 / 3.0, 2.0 / 3.0]).unwrap();
        let scan = resonance_path_scan(&mesh, &[0.0, 0.0], &[10.0, 10.0], 97).unwrap();
        let at: Vec<f64> = scan.crossings.iter().map(|c| c.b[0]).collect();
        assert_eq!(at.len(), 2);
        assert!((at[0] - 3.0).abs() < 1e-8);
        assert!((at[1] - 9.0).abs() < 1e-8);
        let m0: Vec<usize> = scan.crossings.iter().map(|c| c.m0_after).collect();
        assert_eq!(m0, vec![1, 2]);
    }

    #[test]
    fn constant_path() {
        let mesh = ImpulseMesh::new(&[0.4]).unwrap();
        let scan = resonance_path_scan(&mesh, &[1.0], &[1.0], 10).unwrap();
        assert!(scan.crossings.is_empty());
        assert!(scan.samples.iter().all(|s| s.m0 == scan.samples[0].m0));
    }

    #[test]
    fn rejects_endpoint_in_b_and_short_paths() {
        let mesh = ImpulseMesh::new(&[0.5]).unwrap();
        assert!(matches!(
            resonance_path_scan(&mesh, &[4.0], &[8.0], 10),
            Err(Error::EndpointInResonanceSet { which: "start", .. })
        ));
        assert!(resonance_path_scan(&mesh, &[0.0], &[8.0], 1).is_err());
    }

    #[test]
    fn generic_path_has_simple_crossings() {
        // for m = 2 the resonance matrix never vanishes, so nullity is at most 1
        let mesh = ImpulseMesh::new(&[1.0 / 3.0, 2.0 / 3.0]).unwrap();
        let scan = resonance_path_scan(&mesh, &[-2.0, 1.0], &[12.0, 7.0], 200).unwrap();
        for c in &scan.crossings {
            assert_eq!(c.nullity, 1);
            assert_eq!(c.m0_before.abs_diff(c.m0_after), 1);
        }
        assert!(scan.m0_constant_between_crossings);
    }
}
