//! Dirichlet spectra of the subintervals and the saddle-dimension bookkeeping.
//!
//! On subinterval `j` of length `ℓ_j` the Dirichlet eigenvalues of `-u''` are
//! `λ_k = k²π²/ℓ_j²`. A slope `a_j` below `λ_1` puts the subinterval in class
//! `J₀`; otherwise `d_j ≥ 1` eigenvalues lie below `a_j` and the subinterval is
//! in `J₁`. The negative space of the asymptotic functional then has dimension
//! `k = Σ_{J₁} d_j + m`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};
use crate::mesh::ImpulseMesh;

pub const DEFAULT_REL_TOL: f64 = 1e-9;

/// `k²π²/ℓ_j²` for subinterval `j` (0-based, `0..=m`) and mode `k ≥ 1`.
pub fn subinterval_eigenvalue(mesh: &ImpulseMesh, j: usize, k: usize) -> Result<f64> {
    let len = *mesh
        .lengths()
        .get(j)
        .ok_or_else(|| Error::IndexOutOfRange {
            what: "subinterval",
            index: j,
            valid: format!("0..{}", mesh.subinterval_count()),
        })?;
    if k == 0 {
        return Err(Error::IndexOutOfRange {
            what: "mode",
            index: 0,
            valid: "1..".into(),
        });
    }
    Ok(dirichlet_eigenvalue(len, k))
}

#[inline]
pub(crate) fn dirichlet_eigenvalue(len: f64, k: usize) -> f64 {
    let kf = k as f64;
    kf * kf * PI * PI / (len * len)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SubintervalClass {
    J0,
    J1,
}

/// Positive constants bounding the quadratic form `∫ v'² - a v²` on each piece.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "class")]
pub enum Coercivity {
    /// `c_j = 1 - max(a_j, 0)/λ_1`.
    J0 { c: f64 },
    /// `c⁺ = 1 - a_j/λ_{d+1}`, `c⁻ = a_j/λ_d - 1`.
    J1 { c_plus: f64, c_minus: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubintervalSpectrum {
    pub length: f64,
    pub slope: f64,
    /// `λ_1, ..., λ_{d+1}`, enough to bracket the slope.
    pub eigenvalues: Vec<f64>,
    pub nonresonant: bool,
    /// Distance from the slope to the nearest eigenvalue.
    pub margin: f64,
    /// 1-based mode of the nearest eigenvalue.
    pub nearest_mode: usize,
    pub d: usize,
    pub class: SubintervalClass,
    pub coercivity: Coercivity,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralReport {
    pub subintervals: Vec<SubintervalSpectrum>,
    pub k_saddle: usize,
}

impl SpectralReport {
    pub fn all_nonresonant(&self) -> bool {
        self.subintervals.iter().all(|s| s.nonresonant)
    }

    /// First subinterval whose slope exceeds its lowest eigenvalue.
    pub fn first_above_ground(&self) -> Option<usize> {
        self.subintervals
            .iter()
            .position(|s| s.slope > s.eigenvalues[0])
    }
}

/// Classifies every subinterval against its Dirichlet spectrum.
///
/// Resonance is reported through `nonresonant`, never as an error.
pub fn spectral_report(mesh: &ImpulseMesh, a: &[f64], rel_tol: f64) -> Result<SpectralReport> {
    check_len("a", mesh.subinterval_count(), a.len())?;
    if rel_tol.is_nan() || rel_tol <= 0.0 {
        return Err(Error::Domain {
            name: "rel_tol",
            value: rel_tol,
            reason: "must be positive",
        });
    }
    let m = mesh.node_count();
    let mut subintervals = Vec::with_capacity(a.len());
    for (&len, &slope) in mesh.lengths().iter().zip(a) {
        if !slope.is_finite() {
            return Err(Error::Domain {
                name: "a",
                value: slope,
                reason: "must be finite",
            });
        }
        let mut eigenvalues = vec![dirichlet_eigenvalue(len, 1)];
        while *eigenvalues.last().unwrap() < slope {
            eigenvalues.push(dirichlet_eigenvalue(len, eigenvalues.len() + 1));
        }
        let d = eigenvalues.len() - 1;
        // one eigenvalue past the first one at or above the slope
        eigenvalues.push(dirichlet_eigenvalue(len, eigenvalues.len() + 1));

        let (nearest_idx, margin) = eigenvalues
            .iter()
            .map(|&l| (slope - l).abs())
            .enumerate()
            .fold((0, f64::INFINITY), |best, (i, dist)| {
                if dist < best.1 {
                    (i, dist)
                } else {
                    best
                }
            });
        let nonresonant = margin > rel_tol * eigenvalues[nearest_idx];

        let (class, coercivity) = if d == 0 {
            (
                SubintervalClass::J0,
                Coercivity::J0 {
                    c: 1.0 - slope.max(0.0) / eigenvalues[0],
                },
            )
        } else {
            (
                SubintervalClass::J1,
                Coercivity::J1 {
                    c_plus: 1.0 - slope / eigenvalues[d],
                    c_minus: slope / eigenvalues[d - 1] - 1.0,
                },
            )
        };
        subintervals.push(SubintervalSpectrum {
            length: len,
            slope,
            eigenvalues,
            nonresonant,
            margin,
            nearest_mode: nearest_idx + 1,
            d,
            class,
            coercivity,
        });
    }
    let k_saddle = subintervals.iter().map(|s| s.d).sum::<usize>() + m;
    Ok(SpectralReport {
        subintervals,
        k_saddle,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const PI2: f64 = PI * PI;

    #[test]
    fn eigenvalue_formula() {
        let mesh = ImpulseMesh::new(&[0.5]).unwrap();
        let l = subinterval_eigenvalue(&mesh, 0, 2).unwrap();
        assert!((l - 16.0 * PI2).abs() < 1e-12 * l);

        let mesh = ImpulseMesh::new(&[1.0 / 3.0, 2.0 / 3.0]).unwrap();
        let l = subinterval_eigenvalue(&mesh, 1, 3).unwrap();
        assert!((l - 81.0 * PI2).abs() < 1e-12 * l);

        for m in 1..6 {
            let mesh = ImpulseMesh::equally_spaced(m).unwrap();
            let expected = ((m + 1) * (m + 1)) as f64 * PI2;
            for j in 0..=m {
                let l = subinterval_eigenvalue(&mesh, j, 1).unwrap();
                assert!((l - expected).abs() < 1e-12 * expected);
            }
        }
        assert!(subinterval_eigenvalue(&mesh, 3, 1).is_err());
        assert!(subinterval_eigenvalue(&mesh, 0, 0).is_err());
    }

    #[test]
    fn report_above_resonance_ladder() {
        let mesh = ImpulseMesh::new(&[0.5]).unwrap();
        let r = spectral_report(&mesh, &[50.0 * PI2, 50.0 * PI2], DEFAULT_REL_TOL).unwrap();
        for s in &r.subintervals {
            assert_eq!(s.d, 3);
            assert_eq!(s.class, SubintervalClass::J1);
            assert!(s.nonresonant);
            for (k, l) in s.eigenvalues.iter().enumerate() {
                let kk = (k + 1) as f64;
                assert!((l - 4.0 * kk * kk * PI2).abs() < 1e-10 * l);
            }
            // 50 lies midway between 36 and 64
            assert!(s.nearest_mode == 3 || s.nearest_mode == 4);
            assert!((s.margin - 14.0 * PI2).abs() < 1e-10);
        }
        assert_eq!(r.k_saddle, 7);
        assert_eq!(r.first_above_ground(), Some(0));
    }

    #[test]
    fn report_below_ground_state() {
        let mesh = ImpulseMesh::new(&[0.5]).unwrap();
        let r = spectral_report(&mesh, &[PI2, PI2], DEFAULT_REL_TOL).unwrap();
        assert!(r
            .subintervals
            .iter()
            .all(|s| s.d == 0 && s.class == SubintervalClass::J0));
        assert_eq!(r.k_saddle, 1);
        match r.subintervals[0].coercivity {
            Coercivity::J0 { c } => assert!((c - 0.75).abs() < 1e-15),
            _ => panic!(),
        }
    }

    #[test]
    fn exact_hit_is_resonant() {
        let mesh = ImpulseMesh::new(&[0.5]).unwrap();
        let r = spectral_report(&mesh, &[4.0 * PI2, 1.0], DEFAULT_REL_TOL).unwrap();
        assert!(!r.subintervals[0].nonresonant);
        assert!(r.subintervals[1].nonresonant);
        assert!(!r.all_nonresonant());
    }

    #[test]
    fn coercivity_constants_positive_when_nonresonant() {
        let mesh = ImpulseMesh::new(&[0.3, 0.55]).unwrap();
        let r = spectral_report(&mesh, &[-5.0, 300.0, 2000.0], DEFAULT_REL_TOL).unwrap();
        for s in &r.subintervals {
            match s.coercivity {
                Coercivity::J0 { c } => assert!(c > 0.0),
                Coercivity::J1 { c_plus, c_minus } => assert!(c_plus > 0.0 && c_minus > 0.0),
            }
        }
        assert!(spectral_report(&mesh, &[1.0], DEFAULT_REL_TOL).is_err());
        assert!(spectral_report(&mesh, &[1.0, 1.0, 1.0], 0.0).is_err());
    }

    proptest! {
        #[test]
        fn d_is_monotone_and_classes_partition(
            p in 0.05f64..0.95,
            a1 in -100.0f64..5000.0,
            bump in 0.0f64..3000.0,
        ) {
            let mesh = ImpulseMesh::new(&[p]).unwrap();
            let lo = spectral_report(&mesh, &[a1, a1], DEFAULT_REL_TOL).unwrap();
            let hi = spectral_report(&mesh, &[a1 + bump, a1 + bump], DEFAULT_REL_TOL).unwrap();
            for (l, h) in lo.subintervals.iter().zip(&hi.subintervals) {
                prop_assert!(h.d >= l.d);
                prop_assert_eq!(l.d == 0, l.class == SubintervalClass::J0);
                prop_assert!(l.eigenvalues.windows(2).all(|w| w[0] < w[1]));
                // d counts eigenvalues strictly below the slope
                let count = (1..200)
                    .take_while(|&k| dirichlet_eigenvalue(l.length, k) < l.slope)
                    .count();
                prop_assert_eq!(count, l.d);
            }
            prop_assert!(lo.k_saddle >= 1);
        }
    }
}
