//! Run reports and their JSON encoding (every float with 17 significant digits).

use std::io;

use serde::ser::Serialize;
use serde::{Deserialize, Serialize as SerializeDerive};
use serde_json::ser::{Formatter, PrettyFormatter};

use super::problem_file::ProblemFile;
use crate::resonance::{Certificate, MorseReport, ResonanceValue};
use crate::shooting::ResidualReport;
use crate::solver::{CriticalPoint, Inertia, SolverOptions};
use crate::spectral::SpectralReport;

#[derive(Debug, Clone, PartialEq, SerializeDerive, Deserialize)]
pub struct PointSummary {
    pub index: usize,
    pub node_values: Vec<f64>,
    pub galerkin_node_values: Vec<f64>,
    pub energy: f64,
    pub gradient_norm: f64,
    pub inertia: Inertia,
    pub converged: bool,
    pub trivial: bool,
    pub initial_slope: Option<f64>,
    pub residuals: ResidualReport,
    pub passes_threshold: bool,
    /// File name of the sampled solution, for nontrivial points.
    pub samples: Option<String>,
}

impl PointSummary {
    pub fn new(index: usize, p: &CriticalPoint, threshold: f64, samples: Option<String>) -> Self {
        Self {
            index,
            node_values: p.node_values.clone(),
            galerkin_node_values: p.galerkin_node_values.clone(),
            energy: p.energy,
            gradient_norm: p.gradient_norm,
            inertia: p.hessian_inertia,
            converged: p.converged,
            trivial: p.trivial,
            initial_slope: p.initial_slope,
            passes_threshold: p.verification.passes(threshold),
            residuals: p.verification.clone(),
            samples,
        }
    }
}

#[derive(Debug, Clone, PartialEq, SerializeDerive, Deserialize)]
pub struct SolverSection {
    pub options: SolverOptions,
    pub threshold: f64,
    /// Dimension of the negative block of the saddle splitting, for comparison
    /// with the inertia of the points found.
    pub k_saddle: usize,
    pub critical_points: Vec<PointSummary>,
}

#[derive(Debug, Clone, PartialEq, SerializeDerive, Deserialize)]
pub struct Timing {
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, SerializeDerive, Deserialize)]
pub struct RunReport {
    pub command: String,
    pub problem: ProblemFile,
    pub spectral: SpectralReport,
    pub resonance: ResonanceValue,
    pub morse: MorseReport,
    pub certificate: Option<Certificate>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub solver: Option<SolverSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timing: Option<Timing>,
}

/// Pretty JSON with floats written as `{:.16e}`.
pub struct FullPrecision<'a>(PrettyFormatter<'a>);

impl Default for FullPrecision<'_> {
    fn default() -> Self {
        Self(PrettyFormatter::new())
    }
}

impl Formatter for FullPrecision<'_> {
    fn write_f64<W: ?Sized + io::Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        write!(w, "{}", format_float(value))
    }
    fn write_f32<W: ?Sized + io::Write>(&mut self, w: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(w, value as f64)
    }
    fn begin_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_array(w)
    }
    fn end_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array(w)
    }
    fn begin_array_value<W: ?Sized + io::Write>(
        &mut self,
        w: &mut W,
        first: bool,
    ) -> io::Result<()> {
        self.0.begin_array_value(w, first)
    }
    fn end_array_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array_value(w)
    }
    fn begin_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object(w)
    }
    fn end_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object(w)
    }
    fn begin_object_key<W: ?Sized + io::Write>(
        &mut self,
        w: &mut W,
        first: bool,
    ) -> io::Result<()> {
        self.0.begin_object_key(w, first)
    }
    fn begin_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object_value(w)
    }
    fn end_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object_value(w)
    }
}

/// 17 significant digits, enough to round-trip any double.
pub fn format_float(value: f64) -> String {
    if value.is_finite() {
        format!("{value:.16e}")
    } else {
        // not representable in JSON; serde_json writes null for these too
        "null".into()
    }
}

pub fn to_json<T: Serialize>(value: &T) -> serde_json::Result<String> {
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, FullPrecision::default());
    value.serialize(&mut ser)?;
    out.push(b'\n');
    Ok(String::from_utf8(out).expect("serde_json writes UTF-8"))
}
