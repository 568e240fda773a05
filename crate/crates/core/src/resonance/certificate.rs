//! Sufficient conditions for a nontrivial solution.

use serde::{Deserialize, Serialize};

use super::{morse_report, resonance_det};
use crate::error::Result;
use crate::galerkin::{Growth, Nonlinearity, ProblemSpec};
use crate::mesh::ImpulseMesh;
use crate::spectral::{spectral_report, DEFAULT_REL_TOL};

const GROWTH_SAMPLE_RANGE: f64 = 50.0;
const GROWTH_SAMPLES: usize = 10_000;
const ZERO_SLOPE_TOL: f64 = 1e-12;
const EQUAL_SPACING_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckStatus {
    Pass,
    Fail,
    /// Not checkable from the data (no nonlinearity given); taken as true.
    Assumed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HypothesisCheck {
    pub name: String,
    pub status: CheckStatus,
    pub detail: String,
}

impl HypothesisCheck {
    fn new(name: &str, status: CheckStatus, detail: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            status,
            detail: detail.into(),
        }
    }

    fn from_bool(name: &str, ok: bool, detail: impl Into<String>) -> Self {
        let status = if ok {
            CheckStatus::Pass
        } else {
            CheckStatus::Fail
        };
        Self::new(name, status, detail)
    }
}

/// An element `w₀ = Σ c_k w_k` of `M` with `∫ w₀'² ≥ Σ b_j w₀(x_j)²`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub coefficients: Vec<f64>,
    pub node_values: Vec<f64>,
    /// `∫ w₀'² - Σ b_j w₀(x_j)²`.
    pub form_value: f64,
}

/// Thresholds specialised to `x_j = j/(m+1)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquallySpacedThresholds {
    /// `(m+1)²π²`.
    pub a_threshold: f64,
    /// `2(m+1)`.
    pub b_threshold: f64,
    pub max_a: f64,
    pub min_b: f64,
    pub a_condition: bool,
    pub b_condition: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Conclusion {
    Guaranteed,
    NotGuaranteed,
}

impl Conclusion {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Guaranteed => "guaranteed",
            Self::NotGuaranteed => "not_guaranteed",
        }
    }

    /// Guaranteed iff no hypothesis failed and one of the two conditions holds.
    pub fn decide(checks: &[HypothesisCheck], slope_condition: bool, form_condition: bool) -> Self {
        let hypotheses = checks.iter().all(|c| c.status != CheckStatus::Fail);
        if hypotheses && (slope_condition || form_condition) {
            Self::Guaranteed
        } else {
            Self::NotGuaranteed
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub hypothesis_checks: Vec<HypothesisCheck>,
    /// Some `a_j` exceeds the lowest eigenvalue of its subinterval.
    pub slope_condition: bool,
    /// 0-based subinterval witnessing `slope_condition`.
    pub slope_witness: Option<usize>,
    /// Some nonzero `w₀ ∈ M` makes the quadratic form at zero nonnegative.
    pub form_condition: bool,
    pub largest_eigenvalue: f64,
    pub form_witness: Option<Witness>,
    /// Some `b_j` is at most the local threshold below.
    pub impulse_condition: bool,
    /// 0-based node witnessing `impulse_condition`.
    pub impulse_witness: Option<usize>,
    /// `(x_{j+1} - x_{j-1}) / ((x_{j+1} - x_j)(x_j - x_{j-1}))` per node.
    pub impulse_thresholds: Vec<f64>,
    pub equally_spaced: Option<EquallySpacedThresholds>,
    pub k_saddle: usize,
    pub m0: usize,
    pub conclusion: Conclusion,
    /// The conclusion relies on `Assumed` checks.
    pub conditional: bool,
}

fn samples() -> impl Iterator<Item = f64> {
    (0..=GROWTH_SAMPLES).map(|i| {
        -GROWTH_SAMPLE_RANGE + 2.0 * GROWTH_SAMPLE_RANGE * i as f64 / GROWTH_SAMPLES as f64
    })
}

/// Checks `|s g(t)| ≤ C(|t|^{r-1} + 1)` on samples: the bound ratio on the
/// outer half of the range must stay within twice its inner maximum.
fn sublinear_sample(g: impl Fn(f64) -> f64, r: f64) -> bool {
    let (mut inner, mut outer) = (0.0_f64, 0.0_f64);
    for t in samples() {
        let ratio = g(t).abs() / (t.abs().powf(r - 1.0) + 1.0);
        if !ratio.is_finite() {
            return false;
        }
        if t.abs() <= 0.5 * GROWTH_SAMPLE_RANGE {
            inner = inner.max(ratio);
        } else {
            outer = outer.max(ratio);
        }
    }
    outer <= 2.0 * inner
}

/// Checks `t ı(t) ≥ c|t|^μ - C` on samples: on the outer half of the range
/// `t ı(t)` must reach half of `c|t|^μ`.
fn superlinear_sample(imp: impl Fn(f64) -> f64, mu: f64, c: f64) -> bool {
    samples()
        .filter(|t| t.abs() > 0.5 * GROWTH_SAMPLE_RANGE)
        .all(|t| t * imp(t) >= 0.5 * c * t.abs().powf(mu))
}

fn forcing_checks(problem: &ProblemSpec, out: &mut Vec<HypothesisCheck>) {
    let Some(forcing) = problem.forcing() else {
        out.push(HypothesisCheck::new(
            "forcing_sublinear",
            CheckStatus::Pass,
            "no forcing term",
        ));
        out.push(HypothesisCheck::new(
            "f_vanishes_to_first_order",
            CheckStatus::Assumed,
            "no forcing entry given",
        ));
        return;
    };
    let entry = &forcing.entry;
    let scales: Vec<f64> = (0..problem.mesh().subinterval_count())
        .map(|j| problem.forcing_scale(j))
        .collect();
    let growth = match entry.growth() {
        Growth::Sublinear { r } if r > 1.0 && r < 2.0 => {
            let ok = scales
                .iter()
                .all(|&s| sublinear_sample(|t| s * entry.value(t), r));
            HypothesisCheck::from_bool(
                "forcing_sublinear",
                ok,
                format!("`{}` declared r = {r}, sampled on [-50, 50]", entry.name()),
            )
        }
        Growth::Sublinear { r } => HypothesisCheck::from_bool(
            "forcing_sublinear",
            false,
            format!("`{}` declares r = {r} outside (1, 2)", entry.name()),
        ),
        other => HypothesisCheck::from_bool(
            "forcing_sublinear",
            false,
            format!("`{}` declares {other:?} growth", entry.name()),
        ),
    };
    out.push(growth);

    let at_zero: Vec<Option<f64>> = (0..scales.len())
        .map(|j| {
            problem
                .f_t(j, 0.0)
                .map(|d| (problem.f(j, 0.0), d))
                .map(|(v, d)| v.abs().max(d.abs()))
        })
        .collect();
    let check = if at_zero.iter().any(Option::is_none) {
        HypothesisCheck::new(
            "f_vanishes_to_first_order",
            CheckStatus::Fail,
            format!("`{}` has no derivative", entry.name()),
        )
    } else {
        let worst = at_zero.iter().flatten().fold(0.0_f64, |m, &v| m.max(v));
        HypothesisCheck::from_bool(
            "f_vanishes_to_first_order",
            worst <= ZERO_SLOPE_TOL,
            format!("max |f(0)|, |f_t(0)| = {worst:e}"),
        )
    };
    out.push(check);
}

fn impulse_checks(problem: &ProblemSpec, out: &mut Vec<HypothesisCheck>) {
    let entries = problem.impulses();
    if entries.iter().all(Option::is_none) {
        for name in ["impulse_superlinear", "h_vanishes_to_first_order"] {
            out.push(HypothesisCheck::new(
                name,
                CheckStatus::Assumed,
                "no impulse entries given",
            ));
        }
        return;
    }
    let given: Vec<(usize, &Nonlinearity)> = entries
        .iter()
        .enumerate()
        .filter_map(|(j, e)| e.as_ref().map(|e| (j, e)))
        .collect();

    let mut ok = given.len() == entries.len();
    let mut details = Vec::new();
    if !ok {
        details.push("linear impulse at some node".to_string());
    }
    for &(j, h) in &given {
        match h.growth() {
            Growth::Superlinear { mu, c } if mu > 2.0 && c > 0.0 => {
                let pass = superlinear_sample(|t| problem.impulse(j, t), mu, c);
                ok &= pass;
                details.push(format!("node {j}: `{}` mu = {mu}, c = {c}", h.name()));
            }
            other => {
                ok = false;
                details.push(format!("node {j}: `{}` declares {other:?}", h.name()));
            }
        }
    }
    out.push(HypothesisCheck::from_bool(
        "impulse_superlinear",
        ok,
        details.join("; "),
    ));

    let mut worst = 0.0_f64;
    let mut missing = None;
    for &(_, h) in &given {
        match h.derivative(0.0) {
            Some(d) => worst = worst.max(d.abs()).max(h.value(0.0).abs()),
            None => missing = Some(h.name().to_string()),
        }
    }
    out.push(match missing {
        Some(name) => HypothesisCheck::new(
            "h_vanishes_to_first_order",
            CheckStatus::Fail,
            format!("`{name}` has no derivative"),
        ),
        None => HypothesisCheck::from_bool(
            "h_vanishes_to_first_order",
            worst <= ZERO_SLOPE_TOL,
            format!("max |h(0)|, |h'(0)| = {worst:e}"),
        ),
    });
}

fn impulse_thresholds(mesh: &ImpulseMesh) -> Vec<f64> {
    let x = mesh.extended_nodes();
    (1..x.len() - 1)
        .map(|j| (x[j + 1] - x[j - 1]) / ((x[j + 1] - x[j]) * (x[j] - x[j - 1])))
        .collect()
}

fn is_equally_spaced(mesh: &ImpulseMesh) -> bool {
    let m = mesh.node_count() as f64;
    mesh.points()
        .iter()
        .enumerate()
        .all(|(j, &x)| (x - (j + 1) as f64 / (m + 1.0)).abs() <= EQUAL_SPACING_TOL)
}

/// Evaluates the hypotheses and both sufficient conditions for `problem`.
pub fn nontriviality_certificate(problem: &ProblemSpec) -> Result<Certificate> {
    let mesh = problem.mesh();
    let (a, b) = (problem.a(), problem.b());
    let spectral = spectral_report(mesh, a, DEFAULT_REL_TOL)?;
    let det = resonance_det(mesh, b)?;
    let morse = morse_report(mesh, b)?;

    let mut checks = vec![
        HypothesisCheck::from_bool(
            "a_nonresonant",
            spectral.all_nonresonant(),
            format!(
                "smallest relative margin {:e}",
                spectral
                    .subintervals
                    .iter()
                    .map(|s| s.margin / s.eigenvalues[s.nearest_mode - 1])
                    .fold(f64::INFINITY, f64::min)
            ),
        ),
        HypothesisCheck::from_bool(
            "b_outside_resonance_set",
            !det.in_b,
            format!("det = {:e}", det.det),
        ),
    ];
    forcing_checks(problem, &mut checks);
    impulse_checks(problem, &mut checks);

    let slope_witness = spectral.first_above_ground();
    let largest = morse.largest_eigenvalue();
    let form_condition = largest >= -morse.tolerance;
    let form_witness = form_condition.then(|| {
        let c = morse.eigenvectors.last().expect("m >= 1").clone();
        let node_values = mesh.node_values(&c).expect("length m");
        let form_value = super::quadratic_form(mesh, b, &c).expect("length m");
        Witness {
            coefficients: c,
            node_values,
            form_value,
        }
    });

    let thresholds = impulse_thresholds(mesh);
    let impulse_witness = b.iter().zip(&thresholds).position(|(bj, t)| bj <= t);

    let equally_spaced = is_equally_spaced(mesh).then(|| {
        let n = mesh.subinterval_count() as f64;
        let a_threshold = n * n * std::f64::consts::PI.powi(2);
        let b_threshold = 2.0 * n;
        let max_a = a.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let min_b = b.iter().copied().fold(f64::INFINITY, f64::min);
        EquallySpacedThresholds {
            a_threshold,
            b_threshold,
            max_a,
            min_b,
            a_condition: max_a > a_threshold,
            b_condition: min_b <= b_threshold,
        }
    });

    let conclusion = Conclusion::decide(&checks, slope_witness.is_some(), form_condition);
    let conditional = conclusion == Conclusion::Guaranteed
        && checks.iter().any(|c| c.status == CheckStatus::Assumed);
    Ok(Certificate {
        hypothesis_checks: checks,
        slope_condition: slope_witness.is_some(),
        slope_witness,
        form_condition,
        largest_eigenvalue: largest,
        form_witness,
        impulse_condition: impulse_witness.is_some(),
        impulse_witness,
        impulse_thresholds: thresholds,
        equally_spaced,
        k_saddle: spectral.k_saddle,
        m0: morse.m0,
        conclusion,
        conditional,
    })
}
