//! Pinned output schemas. The same table drives the writers and the gate's
//! schema checks; `schemas/outputs.json` is its serialised form.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::Value;

pub const PER_MEASURE_RESULTS: &str = "per_measure_results.csv";
pub const SUMMARY: &str = "summary.json";
pub const MULTIVERSE_RESULTS: &str = "multiverse_results.csv";
pub const MULTIVERSE_SUMMARY: &str = "multiverse_summary.json";
pub const INGEST_EVIDENCE: &str = "ingest_evidence.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FieldType {
    String,
    Integer,
    Number,
    Boolean,
    Array,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Field {
    pub name: String,
    #[serde(rename = "type")]
    pub ty: FieldType,
    #[serde(default)]
    pub nullable: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub allowed: Option<Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutputSchema {
    pub format: Format,
    pub fields: Vec<Field>,
}

impl OutputSchema {
    pub fn names(&self) -> Vec<&str> {
        self.fields.iter().map(|f| f.name.as_str()).collect()
    }
}

fn f(name: &str, ty: FieldType) -> Field {
    Field {
        name: name.into(),
        ty,
        nullable: false,
        allowed: None,
    }
}

fn opt(name: &str, ty: FieldType) -> Field {
    Field {
        nullable: true,
        ..f(name, ty)
    }
}

fn one_of(name: &str, nullable: bool, values: &[&str]) -> Field {
    Field {
        nullable,
        allowed: Some(values.iter().map(|v| v.to_string()).collect()),
        ..f(name, FieldType::String)
    }
}

const STATUS: [&str; 3] = ["ok", "insufficient_n", "degenerate"];

pub fn output_schemas() -> BTreeMap<String, OutputSchema> {
    use FieldType::*;
    let per_measure = vec![
        f("measure_id", String),
        f("n", Integer),
        opt("rho", Number),
        opt("mi_ksg", Number),
        opt("mi_gauss", Number),
        opt("nlr_delta", Number),
        opt("ci_low", Number),
        opt("ci_high", Number),
        one_of("method", true, &["bca", "percentile_fallback"]),
        opt("p", Number),
        opt("q", Number),
        opt("icc_2_1", Number),
        opt("icc_2_1_low", Number),
        opt("icc_2_1_high", Number),
        opt("icc_3_1", Number),
        one_of("status", false, &STATUS),
        f("headline_pass", Boolean),
        opt("nlr_ratio", Number),
    ];
    let summary = vec![
        one_of("run_mode", false, &["smoke", "final"]),
        f("spec_id", String),
        f("base_seed", Integer),
        f("bootstrap_b", Integer),
        f("n_measures", Integer),
        f("n_estimable", Integer),
        f("n_insufficient", Integer),
        f("n_degenerate", Integer),
        f("pass_count", Integer),
        f("q_star", Number),
        f("fdr_discoveries", Integer),
        opt("min_q", Number),
        opt("median_nlr_delta", Number),
        opt("iqr_nlr_delta", Array),
        opt("median_icc_2_1", Number),
        opt("iqr_icc_2_1", Array),
        opt("median_ci_width", Number),
        opt("median_mde", Number),
    ];
    let multiverse = vec![
        f("spec_id", String),
        f("k", Integer),
        one_of("corr_method", false, &["pearson", "spearman"]),
        f("n_min", Integer),
        f("measure_id", String),
        f("n", Integer),
        opt("nlr_delta", Number),
        opt("ci_low", Number),
        opt("ci_high", Number),
        one_of("status", false, &STATUS),
        f("headline_pass", Boolean),
    ];
    let multiverse_summary = vec![
        one_of("run_mode", false, &["smoke", "final"]),
        f("base_seed", Integer),
        f("bootstrap_b", Integer),
        f("total_cells", Integer),
        f("estimable", Integer),
        f("insufficient_n", Integer),
        f("degenerate", Integer),
        f("pass_count", Integer),
        opt("grand_median_nlr_delta", Number),
        opt("grand_iqr_nlr_delta", Array),
        f("marginals", Array),
    ];
    BTreeMap::from([
        (
            PER_MEASURE_RESULTS.into(),
            OutputSchema {
                format: Format::Csv,
                fields: per_measure,
            },
        ),
        (
            SUMMARY.into(),
            OutputSchema {
                format: Format::Json,
                fields: summary,
            },
        ),
        (
            MULTIVERSE_RESULTS.into(),
            OutputSchema {
                format: Format::Csv,
                fields: multiverse,
            },
        ),
        (
            MULTIVERSE_SUMMARY.into(),
            OutputSchema {
                format: Format::Json,
                fields: multiverse_summary,
            },
        ),
    ])
}

fn check_text(field: &Field, raw: &str) -> Result<(), String> {
    if raw.is_empty() {
        return if field.nullable {
            Ok(())
        } else {
            Err(format!("'{}' is empty", field.name))
        };
    }
    let ok = match field.ty {
        FieldType::String => field.allowed.as_ref().is_none_or(|a| a.iter().any(|v| v == raw)),
        FieldType::Integer => raw.parse::<i64>().is_ok(),
        FieldType::Number => raw.parse::<f64>().is_ok_and(f64::is_finite),
        FieldType::Boolean => raw == "true" || raw == "false",
        FieldType::Array => false,
    };
    if ok {
        Ok(())
    } else {
        Err(format!("'{}' has invalid value '{raw}'", field.name))
    }
}

fn check_json(field: &Field, value: Option<&Value>) -> Result<(), String> {
    let value = value.ok_or_else(|| format!("missing key '{}'", field.name))?;
    if value.is_null() {
        return if field.nullable {
            Ok(())
        } else {
            Err(format!("'{}' is null", field.name))
        };
    }
    let ok = match field.ty {
        FieldType::String => value
            .as_str()
            .is_some_and(|s| field.allowed.as_ref().is_none_or(|a| a.iter().any(|v| v == s))),
        FieldType::Integer => value.is_i64() || value.is_u64(),
        FieldType::Number => value.is_number(),
        FieldType::Boolean => value.is_boolean(),
        FieldType::Array => value.is_array(),
    };
    if ok {
        Ok(())
    } else {
        Err(format!("'{}' has invalid value {value}", field.name))
    }
}

/// Validates file bytes against a schema: LF-only text, exact CSV header and
/// typed cells, or a JSON object with every field present and typed.
pub fn validate_output(schema: &OutputSchema, bytes: &[u8]) -> Result<(), String> {
    if bytes.contains(&b'\r') {
        return Err("contains CR line endings".into());
    }
    match schema.format {
        Format::Csv => {
            let mut rdr = csv::ReaderBuilder::new().from_reader(bytes);
            let header: Vec<String> = rdr
                .headers()
                .map_err(|e| e.to_string())?
                .iter()
                .map(str::to_string)
                .collect();
            if header != schema.names() {
                return Err(format!("header {header:?} != {:?}", schema.names()));
            }
            for (i, record) in rdr.records().enumerate() {
                let record = record.map_err(|e| format!("row {}: {e}", i + 1))?;
                for (field, raw) in schema.fields.iter().zip(record.iter()) {
                    check_text(field, raw).map_err(|e| format!("row {}: {e}", i + 1))?;
                }
            }
            Ok(())
        }
        Format::Json => {
            let value: Value = serde_json::from_slice(bytes).map_err(|e| e.to_string())?;
            let obj = value.as_object().ok_or("top level is not an object")?;
            schema
                .fields
                .iter()
                .try_for_each(|field| check_json(field, obj.get(&field.name)))
        }
    }
}
