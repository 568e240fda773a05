use serde::{Deserialize, Serialize};

use super::catalog::Nonlinearity;
use crate::error::{check_len, Error, Result};
use crate::mesh::ImpulseMesh;

/// Multiplier applied to the forcing nonlinearity on each subinterval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ForcingScale {
    Constant(f64),
    /// Use the subinterval slope `a_j`.
    BySlope,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Forcing {
    pub entry: Nonlinearity,
    pub scale: ForcingScale,
}

/// `f(x, t) = a_j t + s_j g(t)` on subinterval `j`, `ı_j(t) = b_j t + h_j(t)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemSpec {
    mesh: ImpulseMesh,
    a: Vec<f64>,
    b: Vec<f64>,
    forcing: Option<Forcing>,
    impulses: Vec<Option<Nonlinearity>>,
}

impl ProblemSpec {
    /// Piecewise-linear problem with linear impulses.
    pub fn linear(mesh: ImpulseMesh, a: Vec<f64>, b: Vec<f64>) -> Result<Self> {
        check_len("a", mesh.subinterval_count(), a.len())?;
        check_len("b", mesh.node_count(), b.len())?;
        for (name, values) in [("a", &a), ("b", &b)] {
            if let Some(&v) = values.iter().find(|v| !v.is_finite()) {
                return Err(Error::Domain {
                    name,
                    value: v,
                    reason: "coefficients must be finite",
                });
            }
        }
        let m = mesh.node_count();
        Ok(Self {
            mesh,
            a,
            b,
            forcing: None,
            impulses: vec![None; m],
        })
    }

    pub fn with_forcing(mut self, entry: Nonlinearity, scale: ForcingScale) -> Self {
        self.forcing = Some(Forcing { entry, scale });
        self
    }

    /// One entry (or `None`) per node.
    pub fn with_impulses(mut self, impulses: Vec<Option<Nonlinearity>>) -> Result<Self> {
        check_len("h", self.mesh.node_count(), impulses.len())?;
        self.impulses = impulses;
        Ok(self)
    }

    /// Same impulse nonlinearity at every node.
    pub fn with_uniform_impulse(mut self, entry: Nonlinearity) -> Self {
        self.impulses = vec![Some(entry); self.mesh.node_count()];
        self
    }

    /// Replaces `a` (e.g. in parameter sweeps).
    pub fn with_a(mut self, a: Vec<f64>) -> Result<Self> {
        check_len("a", self.mesh.subinterval_count(), a.len())?;
        self.a = a;
        Ok(self)
    }

    pub fn with_b(mut self, b: Vec<f64>) -> Result<Self> {
        check_len("b", self.mesh.node_count(), b.len())?;
        self.b = b;
        Ok(self)
    }

    pub fn mesh(&self) -> &ImpulseMesh {
        &self.mesh
    }

    pub fn a(&self) -> &[f64] {
        &self.a
    }

    pub fn b(&self) -> &[f64] {
        &self.b
    }

    pub fn forcing(&self) -> Option<&Forcing> {
        self.forcing.as_ref()
    }

    pub fn impulses(&self) -> &[Option<Nonlinearity>] {
        &self.impulses
    }

    pub fn is_linear(&self) -> bool {
        self.forcing.is_none() && self.impulses.iter().all(Option::is_none)
    }

    /// Name of the first entry without a derivative, if any.
    pub fn missing_derivative(&self) -> Option<&str> {
        self.forcing
            .iter()
            .map(|f| &f.entry)
            .chain(self.impulses.iter().flatten())
            .find(|e| !e.has_derivative())
            .map(Nonlinearity::name)
    }

    pub(crate) fn forcing_scale(&self, j: usize) -> f64 {
        match self.forcing.as_ref().map(|f| f.scale) {
            Some(ForcingScale::Constant(s)) => s,
            Some(ForcingScale::BySlope) => self.a[j],
            None => 0.0,
        }
    }

    /// `f(x, t)` for `x` in subinterval `j`.
    #[inline]
    pub fn f(&self, j: usize, t: f64) -> f64 {
        let mut v = self.a[j] * t;
        if let Some(forcing) = &self.forcing {
            v += self.forcing_scale(j) * forcing.entry.value(t);
        }
        v
    }

    /// `∂f/∂t`; `None` when the forcing has no derivative.
    #[inline]
    pub fn f_t(&self, j: usize, t: f64) -> Option<f64> {
        let mut v = self.a[j];
        if let Some(forcing) = &self.forcing {
            v += self.forcing_scale(j) * forcing.entry.derivative(t)?;
        }
        Some(v)
    }

    /// `F(x, t) = ∫₀ᵗ f(x, s) ds`.
    #[inline]
    pub fn f_primitive(&self, j: usize, t: f64) -> f64 {
        let mut v = 0.5 * self.a[j] * t * t;
        if let Some(forcing) = &self.forcing {
            v += self.forcing_scale(j) * forcing.entry.primitive(t);
        }
        v
    }

    /// Impulse `ı_j(t)` at node `j`.
    #[inline]
    pub fn impulse(&self, j: usize, t: f64) -> f64 {
        let mut v = self.b[j] * t;
        if let Some(h) = &self.impulses[j] {
            v += h.value(t);
        }
        v
    }

    #[inline]
    pub fn impulse_derivative(&self, j: usize, t: f64) -> Option<f64> {
        let mut v = self.b[j];
        if let Some(h) = &self.impulses[j] {
            v += h.derivative(t)?;
        }
        Some(v)
    }

    /// `I_j(t) = ∫₀ᵗ ı_j(s) ds`.
    #[inline]
    pub fn impulse_primitive(&self, j: usize, t: f64) -> f64 {
        let mut v = 0.5 * self.b[j] * t * t;
        if let Some(h) = &self.impulses[j] {
            v += h.primitive(t);
        }
        v
    }
}
