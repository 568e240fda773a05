//! TOML problem files.
//!
//! ```toml
//! [mesh]
//! points = [0.5]
//!
//! [coefficients]
//! a = [493.48022005446793, 493.48022005446793]
//! b = [3.0]
//!
//! [nonlinearity]
//! g = "rational_cubic"
//! g_params = { scale = "a" }
//! h = ["cubic_plus_square"]
//!
//! [solver]
//! modes = 8
//! seed = 0
//!
//! [certificate]
//! check = true
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::AppError;
use crate::galerkin::{ForcingScale, Nonlinearity, ProblemSpec};
use crate::mesh::ImpulseMesh;
use crate::solver::SolverOptions;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeshSection {
    pub points: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoefficientSection {
    pub a: Vec<f64>,
    pub b: Vec<f64>,
}

/// `scale = 2.5` or `scale = "a"` (use the subinterval slope).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ScaleParam {
    Constant(f64),
    Keyword(String),
}

impl Default for ScaleParam {
    fn default() -> Self {
        Self::Constant(1.0)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GParams {
    #[serde(default)]
    pub scale: ScaleParam,
}

/// One name for every node, or one per node.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ImpulseNames {
    Uniform(String),
    PerNode(Vec<String>),
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NonlinearitySection {
    #[serde(default)]
    pub g: Option<String>,
    #[serde(default)]
    pub g_params: Option<GParams>,
    #[serde(default)]
    pub h: Option<ImpulseNames>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CertificateSection {
    #[serde(default = "yes")]
    pub check: bool,
}

fn yes() -> bool {
    true
}

impl Default for CertificateSection {
    fn default() -> Self {
        Self { check: true }
    }
}

/// The file as written, with defaults filled in.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    pub mesh: MeshSection,
    pub coefficients: CoefficientSection,
    #[serde(default)]
    pub nonlinearity: NonlinearitySection,
    #[serde(default)]
    pub solver: SolverOptions,
    #[serde(default)]
    pub certificate: CertificateSection,
}

#[derive(Debug, Clone)]
pub struct ParsedProblem {
    pub file: ProblemFile,
    pub problem: ProblemSpec,
    pub solver: SolverOptions,
    pub check_certificate: bool,
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

fn schema(msg: impl Into<String>) -> AppError {
    AppError::Schema(msg.into())
}

fn entry(name: &str, key: &str) -> Result<Option<Nonlinearity>, AppError> {
    Nonlinearity::from_catalog(name).map_err(|e| schema(format!("{key}: {e}")))
}

impl ProblemFile {
    /// Builds and validates the problem; errors name the offending key.
    pub fn build(&self) -> Result<ProblemSpec, AppError> {
        let mesh =
            ImpulseMesh::new(&self.mesh.points).map_err(|e| schema(format!("mesh.points: {e}")))?;
        let m = mesh.node_count();
        for (key, values, expected) in [
            ("a", &self.coefficients.a, m + 1),
            ("b", &self.coefficients.b, m),
        ] {
            if values.len() != expected {
                return Err(schema(format!(
                    "coefficients.{key}: expected {expected} values for {m} mesh points, found {}",
                    values.len()
                )));
            }
        }
        let mut problem = ProblemSpec::linear(
            mesh,
            self.coefficients.a.clone(),
            self.coefficients.b.clone(),
        )
        .map_err(|e| schema(format!("coefficients: {e}")))?;

        let nl = &self.nonlinearity;
        if let Some(g) = &nl.g {
            if let Some(entry) = entry(g, "nonlinearity.g")? {
                let scale = match nl.g_params.clone().unwrap_or_default().scale {
                    ScaleParam::Constant(s) if s.is_finite() => ForcingScale::Constant(s),
                    ScaleParam::Keyword(k) if k == "a" => ForcingScale::BySlope,
                    other => return Err(schema(format!(
                        "nonlinearity.g_params.scale: expected a number or \"a\", found {other:?}"
                    ))),
                };
                problem = problem.with_forcing(entry, scale);
            }
        } else if nl.g_params.is_some() {
            return Err(schema(
                "nonlinearity.g_params: given without nonlinearity.g",
            ));
        }

        let names: Vec<String> = match &nl.h {
            None => vec!["none".into(); m],
            Some(ImpulseNames::Uniform(name)) => vec![name.clone(); m],
            Some(ImpulseNames::PerNode(names)) => {
                if names.len() != m {
                    return Err(schema(format!(
                        "nonlinearity.h: expected {m} entries, found {}",
                        names.len()
                    )));
                }
                names.clone()
            }
        };
        let impulses = names
            .iter()
            .map(|n| entry(n, "nonlinearity.h"))
            .collect::<Result<Vec<_>, _>>()?;
        problem = problem
            .with_impulses(impulses)
            .map_err(|e| schema(format!("nonlinearity.h: {e}")))?;

        self.solver
            .validate()
            .map_err(|e| schema(format!("solver: {e}")))?;
        if let Some(q) = self.solver.quad_order {
            if q < 2 * self.solver.modes + 4 {
                return Err(schema(format!(
                    "solver.quad_order: {q} is below 2·modes + 4 = {}",
                    2 * self.solver.modes + 4
                )));
            }
        }
        Ok(problem)
    }
}

/// Parses problem text; syntax errors carry the line number.
pub fn parse_problem_str(text: &str) -> Result<ParsedProblem, AppError> {
    let file: ProblemFile = toml::from_str(text).map_err(|e| {
        let line = e.span().map(|s| line_of(text, s.start));
        let msg = e.message().to_string();
        if msg.contains("unknown field")
            || msg.contains("missing field")
            || msg.contains("invalid type")
            || msg.contains("did not match any variant")
        {
            AppError::Schema(match line {
                Some(l) => format!("line {l}: {msg}"),
                None => msg,
            })
        } else {
            AppError::Parse { line, message: msg }
        }
    })?;
    let problem = file.build()?;
    Ok(ParsedProblem {
        solver: file.solver.clone(),
        check_certificate: file.certificate.check,
        problem,
        file,
    })
}

pub fn parse_problem_file(path: &Path) -> Result<ParsedProblem, AppError> {
    let text = std::fs::read_to_string(path).map_err(|e| AppError::Io {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    parse_problem_str(&text)
}
