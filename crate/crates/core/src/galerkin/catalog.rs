//! Named scalar nonlinearities with closed-form primitives.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

pub type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Names accepted by [`Nonlinearity::from_catalog`], besides `"none"`.
pub const CATALOG: &[&str] = &[
    "rational_cubic",
    "cubic",
    "cubic_plus_square",
    "bounded_atan",
];

/// Declared growth behaviour of a nonlinearity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Growth {
    /// `|g(t)| ≤ C (|t|^{r-1} + 1)` with `1 < r < 2`.
    Sublinear {
        r: f64,
    },
    /// `t h(t) ≥ c |t|^μ - C` with `μ > 2`, `c > 0`.
    Superlinear {
        mu: f64,
        c: f64,
    },
    Undeclared,
}

/// A scalar function with its derivative and primitive (`P(0) = 0`).
#[derive(Clone)]
pub struct Nonlinearity {
    name: String,
    value: ScalarFn,
    derivative: Option<ScalarFn>,
    primitive: ScalarFn,
    growth: Growth,
}

impl fmt::Debug for Nonlinearity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Nonlinearity")
            .field("name", &self.name)
            .field("growth", &self.growth)
            .field("has_derivative", &self.derivative.is_some())
            .finish()
    }
}

impl PartialEq for Nonlinearity {
    fn eq(&self, other: &Self) -> bool {
        self.name == other.name && self.growth == other.growth
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("unknown nonlinearity `{0}`")]
pub struct UnknownNonlinearity(pub String);

impl Nonlinearity {
    /// User-supplied function triple.
    pub fn custom<V, P>(
        name: impl Into<String>,
        value: V,
        derivative: Option<ScalarFn>,
        primitive: P,
        growth: Growth,
    ) -> Self
    where
        V: Fn(f64) -> f64 + Send + Sync + 'static,
        P: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        Self {
            name: name.into(),
            value: Arc::new(value),
            derivative,
            primitive: Arc::new(primitive),
            growth,
        }
    }

    /// Looks up a catalog entry; `"none"` maps to `Ok(None)`.
    pub fn from_catalog(name: &str) -> Result<Option<Self>, UnknownNonlinearity> {
        let entry = match name {
            "none" => return Ok(None),
            // (t³ + t²)/(t² + 1) - t = (t² - t)/(t² + 1)
            "rational_cubic" => Self::custom(
                name,
                |t| (t * t - t) / (t * t + 1.0),
                Some(Arc::new(|t: f64| {
                    let d = t * t + 1.0;
                    (t * t + 2.0 * t - 1.0) / (d * d)
                })),
                |t| t - 0.5 * t.mul_add(t, 1.0).ln() - t.atan(),
                Growth::Sublinear { r: 1.5 },
            ),
            "cubic" => Self::custom(
                name,
                |t| t * t * t,
                Some(Arc::new(|t: f64| 3.0 * t * t)),
                |t| 0.25 * t.powi(4),
                Growth::Superlinear { mu: 4.0, c: 1.0 },
            ),
            "cubic_plus_square" => Self::custom(
                name,
                |t| t * t * t + t * t,
                Some(Arc::new(|t: f64| 3.0 * t * t + 2.0 * t)),
                |t| 0.25 * t.powi(4) + t.powi(3) / 3.0,
                Growth::Superlinear { mu: 4.0, c: 0.5 },
            ),
            "bounded_atan" => Self::custom(
                name,
                f64::atan,
                Some(Arc::new(|t: f64| 1.0 / (1.0 + t * t))),
                |t| t * t.atan() - 0.5 * t.mul_add(t, 1.0).ln(),
                Growth::Sublinear { r: 1.5 },
            ),
            other => return Err(UnknownNonlinearity(other.to_string())),
        };
        Ok(Some(entry))
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn growth(&self) -> Growth {
        self.growth
    }

    #[inline]
    pub fn value(&self, t: f64) -> f64 {
        (self.value)(t)
    }

    #[inline]
    pub fn primitive(&self, t: f64) -> f64 {
        (self.primitive)(t)
    }

    #[inline]
    pub fn derivative(&self, t: f64) -> Option<f64> {
        self.derivative.as_ref().map(|d| d(t))
    }

    pub fn has_derivative(&self) -> bool {
        self.derivative.is_some()
    }

    /// Linearization slope at zero.
    pub fn slope_at_zero(&self) -> Option<f64> {
        self.derivative(0.0)
    }

    /// Worst relative disagreement between the supplied derivative and primitive
    /// and central differences over `samples`.
    pub fn consistency_defect(&self, samples: &[f64]) -> f64 {
        let mut worst = 0.0_f64;
        for &t in samples {
            let h = 1e-5 * t.abs().max(1.0);
            let fd_prim = (self.primitive(t + h) - self.primitive(t - h)) / (2.0 * h);
            let v = self.value(t);
            worst = worst.max((fd_prim - v).abs() / v.abs().max(1.0));
            if let Some(d) = self.derivative(t) {
                let fd = (self.value(t + h) - self.value(t - h)) / (2.0 * h);
                worst = worst.max((fd - d).abs() / d.abs().max(1.0));
            }
        }
        worst
    }
}
