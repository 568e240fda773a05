//! `x,u` sample files.

use std::path::Path;

use super::report::format_float;
use super::AppError;
use crate::shooting::SampledSolution;

pub const SOLUTION_ROWS: usize = 4096;

pub fn write_solution_csv(path: &Path, samples: &SampledSolution) -> Result<(), AppError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| AppError::io(path, e))?;
    let rows = std::iter::once(["x".to_string(), "u".to_string()]).chain(
        samples
            .xs
            .iter()
            .zip(&samples.us)
            .map(|(x, u)| [format_float(*x), format_float(*u)]),
    );
    for row in rows {
        w.write_record(&row).map_err(|e| AppError::io(path, e))?;
    }
    w.flush().map_err(|e| AppError::io(path, e))
}

pub fn read_solution_csv(path: &Path) -> Result<SampledSolution, AppError> {
    let mut r = csv::Reader::from_path(path).map_err(|e| AppError::io(path, e))?;
    let headers = r.headers().map_err(|e| AppError::io(path, e))?.clone();
    if headers.iter().map(str::trim).collect::<Vec<_>>() != ["x", "u"] {
        return Err(AppError::Schema(format!(
            "{}: expected header `x,u`, found `{}`",
            path.display(),
            headers.iter().collect::<Vec<_>>().join(",")
        )));
    }
    let (mut xs, mut us) = (Vec::new(), Vec::new());
    for (i, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| AppError::Schema(format!("{}: {e}", path.display())))?;
        let parse = |k: usize| -> Result<f64, AppError> {
            rec.get(k)
                .and_then(|s| s.trim().parse().ok())
                .ok_or_else(|| {
                    AppError::Schema(format!("{}: bad number in row {}", path.display(), i + 2))
                })
        };
        xs.push(parse(0)?);
        us.push(parse(1)?);
    }
    Ok(SampledSolution { xs, us })
}
