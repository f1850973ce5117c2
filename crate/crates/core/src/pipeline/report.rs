//! Output writers. CSVs use LF line endings and render every float with 17
//! significant digits; absent values are empty fields.

use std::path::Path;

use serde::Serialize;

use crate::inference::ReliabilityEstimate;
use crate::multiverse::MultiverseCell;
use crate::provenance::schema::{output_schemas, MULTIVERSE_RESULTS, PER_MEASURE_RESULTS};
use crate::provenance::to_canonical_json;

use super::PipelineError;

/// Round-trip-safe scientific rendering, e.g. `-1.3800000000000001e-1`.
pub fn fmt_float(v: f64) -> String {
    format!("{v:.16e}")
}

fn opt(v: Option<f64>) -> String {
    v.map(fmt_float).unwrap_or_default()
}

fn write_csv(path: &Path, header: Vec<&str>, rows: Vec<Vec<String>>) -> Result<(), PipelineError> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    let err = |e: csv::Error| PipelineError::Config(format!("csv encoding: {e}"));
    w.write_record(&header).map_err(err)?;
    for row in rows {
        w.write_record(&row).map_err(err)?;
    }
    let bytes = w.into_inner().map_err(|e| PipelineError::Config(e.to_string()))?;
    write_bytes(path, &bytes)
}

pub fn write_bytes(path: &Path, bytes: &[u8]) -> Result<(), PipelineError> {
    std::fs::write(path, bytes).map_err(|source| PipelineError::Io {
        path: path.display().to_string(),
        source,
    })
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), PipelineError> {
    write_bytes(path, &to_canonical_json(value))
}

pub fn per_measure_row(e: &ReliabilityEstimate) -> Vec<String> {
    vec![
        e.measure_id.clone(),
        e.n.to_string(),
        opt(e.rho),
        opt(e.mi_ksg),
        opt(e.mi_gauss),
        opt(e.nlr_delta),
        opt(e.ci_low),
        opt(e.ci_high),
        e.method.map(|m| m.as_str().to_string()).unwrap_or_default(),
        opt(e.p),
        opt(e.q),
        opt(e.icc_2_1),
        opt(e.icc_2_1_low),
        opt(e.icc_2_1_high),
        opt(e.icc_3_1),
        e.status.as_str().to_string(),
        e.headline_pass.to_string(),
        opt(e.nlr_ratio),
    ]
}

pub fn write_per_measure(path: &Path, estimates: &[ReliabilityEstimate]) -> Result<(), PipelineError> {
    let schemas = output_schemas();
    write_csv(
        path,
        schemas[PER_MEASURE_RESULTS].names(),
        estimates.iter().map(per_measure_row).collect(),
    )
}

pub fn multiverse_row(c: &MultiverseCell) -> Vec<String> {
    let e = &c.estimate;
    vec![
        c.spec.spec_id.clone(),
        c.spec.k.to_string(),
        c.spec.corr_method.as_str().to_string(),
        c.spec.n_min.to_string(),
        e.measure_id.clone(),
        e.n.to_string(),
        opt(e.nlr_delta),
        opt(e.ci_low),
        opt(e.ci_high),
        e.status.as_str().to_string(),
        e.headline_pass.to_string(),
    ]
}

pub fn write_multiverse(path: &Path, cells: &[MultiverseCell]) -> Result<(), PipelineError> {
    let schemas = output_schemas();
    write_csv(
        path,
        schemas[MULTIVERSE_RESULTS].names(),
        cells.iter().map(multiverse_row).collect(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn float_rendering_round_trips() {
        for v in [0.1, -0.138, 1.0 / 3.0, 5e-300, 12345.678, 0.0] {
            let s = fmt_float(v);
            assert_eq!(s.parse::<f64>().unwrap().to_bits(), v.to_bits(), "{s}");
        }
        assert_eq!(fmt_float(0.25), "2.5000000000000000e-1");
    }
}
