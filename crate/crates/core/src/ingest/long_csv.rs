//! The canonical long-format trial CSV and the archive adapters that produce it.
//!
//! Header: `subject_id,task,session,condition,rt_ms[,accuracy]`. The accuracy
//! column may be omitted entirely for RT-only analyses.

use std::io::{Read, Write};
use std::path::Path;
use std::sync::{Arc, LazyLock};

use serde::Deserialize;

use super::{IngestError, Session, TrialRow};
use crate::strategy::{Named, StrategyRegistry};

/// Parsed trial rows plus the rows rejected for a non-finite or non-positive RT.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LongData {
    pub rows: Vec<TrialRow>,
    pub rejected_non_finite: usize,
    pub has_accuracy: bool,
}

#[derive(Debug, Deserialize)]
struct RawRow {
    subject_id: String,
    task: String,
    session: String,
    condition: String,
    rt_ms: String,
    #[serde(default)]
    accuracy: Option<String>,
}

const REQUIRED: [&str; 5] = ["subject_id", "task", "session", "condition", "rt_ms"];

pub fn read_long_csv<R: Read>(reader: R) -> Result<LongData, IngestError> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers().map_err(|e| IngestError::Schema(e.to_string()))?.clone();
    for col in REQUIRED {
        if !headers.iter().any(|h| h == col) {
            return Err(IngestError::Schema(format!("missing column '{col}'")));
        }
    }
    let has_accuracy = headers.iter().any(|h| h == "accuracy");

    let mut data = LongData {
        has_accuracy,
        ..LongData::default()
    };
    for (i, record) in rdr.deserialize::<RawRow>().enumerate() {
        let line = i + 2;
        let raw = record.map_err(|e| IngestError::Schema(format!("line {line}: {e}")))?;
        let session = match raw.session.as_str() {
            "1" => Session::First,
            "2" => Session::Second,
            other => {
                return Err(IngestError::Schema(format!(
                    "line {line}: session must be 1 or 2, got '{other}'"
                )))
            }
        };
        let rt_ms: f64 = match raw.rt_ms.as_str() {
            "" => f64::NAN,
            s => s
                .parse()
                .map_err(|_| IngestError::Schema(format!("line {line}: rt_ms '{s}' is not a number")))?,
        };
        if !(rt_ms.is_finite() && rt_ms > 0.0) {
            data.rejected_non_finite += 1;
            continue;
        }
        let accuracy = match raw.accuracy.as_deref() {
            None | Some("") => None,
            Some("0") => Some(false),
            Some("1") => Some(true),
            Some(other) => {
                return Err(IngestError::Schema(format!(
                    "line {line}: accuracy must be 0 or 1, got '{other}'"
                )))
            }
        };
        data.rows.push(TrialRow {
            subject_id: raw.subject_id,
            task: raw.task,
            session,
            condition: raw.condition,
            rt_ms,
            accuracy,
        });
    }
    Ok(data)
}

pub fn read_long_csv_file(path: &Path) -> Result<LongData, IngestError> {
    let file = std::fs::File::open(path).map_err(|e| IngestError::io(path, e))?;
    read_long_csv(std::io::BufReader::new(file))
}

/// Writes rows in canonical form (LF line endings, accuracy column included).
pub fn write_long_csv<W: Write>(rows: &[TrialRow], writer: W) -> Result<(), IngestError> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(writer);
    let csv_err = |e: csv::Error| IngestError::Schema(e.to_string());
    w.write_record(["subject_id", "task", "session", "condition", "rt_ms", "accuracy"])
        .map_err(csv_err)?;
    for r in rows {
        let acc = match r.accuracy {
            Some(true) => "1",
            Some(false) => "0",
            None => "",
        };
        w.write_record([
            r.subject_id.as_str(),
            r.task.as_str(),
            r.session.as_str(),
            r.condition.as_str(),
            &format!("{}", r.rt_ms),
            acc,
        ])
        .map_err(csv_err)?;
    }
    w.flush().map_err(|e| IngestError::Schema(e.to_string()))?;
    Ok(())
}

/// Turns a dataset-specific raw archive into canonical long-format rows.
pub trait ArchiveAdapter: Named + Send + Sync {
    fn extract(&self, archive: &Path) -> Result<LongData, IngestError>;
}

/// For archives that already are a canonical long-format CSV.
pub struct CanonicalLongCsv;

impl Named for CanonicalLongCsv {
    fn name(&self) -> &'static str {
        "long_csv"
    }
}

impl ArchiveAdapter for CanonicalLongCsv {
    fn extract(&self, archive: &Path) -> Result<LongData, IngestError> {
        read_long_csv_file(archive)
    }
}

static ADAPTERS: LazyLock<StrategyRegistry<dyn ArchiveAdapter>> = LazyLock::new(|| {
    StrategyRegistry::new("archive adapter").with(Arc::new(CanonicalLongCsv) as Arc<dyn ArchiveAdapter>)
});

pub fn adapter_registry() -> &'static StrategyRegistry<dyn ArchiveAdapter> {
    &ADAPTERS
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_and_rejects_non_finite() {
        let csv = "subject_id,task,session,condition,rt_ms,accuracy\n\
                   s1,flanker,1,congruent,412.5,1\n\
                   s1,flanker,2,congruent,NaN,1\n\
                   s2,flanker,1,incongruent,-3,0\n\
                   s2,flanker,2,incongruent,inf,\n\
                   s2,flanker,2,incongruent,530,\n";
        let data = read_long_csv(csv.as_bytes()).unwrap();
        assert_eq!(data.rows.len(), 2);
        assert_eq!(data.rejected_non_finite, 3);
        assert!(data.has_accuracy);
        assert_eq!(data.rows[0].accuracy, Some(true));
        assert_eq!(data.rows[1].accuracy, None);
    }

    #[test]
    fn accuracy_column_is_optional() {
        let csv = "subject_id,task,session,condition,rt_ms\ns1,posner,1,valid,300\n";
        let data = read_long_csv(csv.as_bytes()).unwrap();
        assert!(!data.has_accuracy);
        assert_eq!(data.rows[0].accuracy, None);
    }

    #[test]
    fn schema_errors() {
        for csv in [
            "subject_id,task,session,condition\ns1,a,1,c\n",
            "subject_id,task,session,condition,rt_ms\ns1,a,3,c,400\n",
            "subject_id,task,session,condition,rt_ms,accuracy\ns1,a,1,c,400,2\n",
            "subject_id,task,session,condition,rt_ms\ns1,a,1,c,fast\n",
        ] {
            assert!(
                matches!(read_long_csv(csv.as_bytes()), Err(IngestError::Schema(_))),
                "{csv}"
            );
        }
    }

    #[test]
    fn write_then_read() {
        let csv = "subject_id,task,session,condition,rt_ms,accuracy\ns1,flanker,1,congruent,412.5,1\ns1,flanker,2,congruent,398,\n";
        let data = read_long_csv(csv.as_bytes()).unwrap();
        let mut out = Vec::new();
        write_long_csv(&data.rows, &mut out).unwrap();
        assert_eq!(String::from_utf8(out).unwrap(), csv);
    }
}
