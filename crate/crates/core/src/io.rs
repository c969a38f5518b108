//! Prediction files, cost-matrix files and report emission.
//!
//! Prediction CSV: header `id,label,p0,...,p{K-1}`, one row per sample.
//! Reals are written with 17 significant digits. Every output goes through
//! a temporary file in the destination directory followed by a rename, so
//! a failed run never leaves a truncated file behind.

use std::fs::File;
use std::io::{BufReader, Read, Write};
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::types::{validate_dataset, CostMatrix, EvalDataset, RawPrediction};

/// Format a real with 17 significant digits (exact round trip).
pub fn format_real(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let magnitude = x.abs().log10().floor() as i32;
    if !(-5..17).contains(&magnitude) {
        return format!("{x:.16e}");
    }
    let decimals = (16 - magnitude).max(0) as usize;
    format!("{x:.decimals$}")
}

fn open(path: &Path) -> Result<File> {
    File::open(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => Error::FileNotFound(path.to_path_buf()),
        _ => Error::Io(e),
    })
}

/// Write `path` atomically: the closure fills a temp file which is then
/// renamed over the destination.
pub fn write_atomic(path: &Path, fill: impl FnOnce(&mut dyn Write) -> Result<()>) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    {
        let mut w = std::io::BufWriter::new(tmp.as_file_mut());
        fill(&mut w)?;
        w.flush()?;
    }
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

/// Read a prediction CSV. `label_base` is the index of the first class in
/// the file (0 or 1).
pub fn read_predictions(path: &Path, label_base: u8) -> Result<EvalDataset> {
    parse_predictions(BufReader::new(open(path)?), label_base)
}

pub fn parse_predictions(input: impl Read, label_base: u8) -> Result<EvalDataset> {
    if label_base > 1 {
        return Err(Error::InvalidConfig(format!(
            "label base must be 0 or 1, got {label_base}"
        )));
    }
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(input);
    let mut records = reader.records();

    let header = match records.next() {
        Some(h) => h?,
        None => return Err(Error::MalformedHeader("file is empty".into())),
    };
    let num_classes = check_header(&header)?;

    let mut raw = Vec::new();
    for record in records {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != num_classes + 2 {
            return Err(Error::RowArityMismatch {
                line,
                expected: num_classes + 2,
                got: record.len(),
            });
        }
        let id = record[0].to_string();
        let label_field = record[1].trim();
        let label: i64 = label_field.parse().map_err(|_| Error::NonNumericField {
            line,
            column: 2,
            value: label_field.to_string(),
        })?;
        let label = label - i64::from(label_base);
        if label < 0 || label >= num_classes as i64 {
            return Err(Error::LabelOutOfRange {
                id,
                label: label + i64::from(label_base),
                num_classes,
            });
        }
        let probs = (0..num_classes)
            .map(|j| {
                let field = record[j + 2].trim();
                field.parse::<f64>().map_err(|_| Error::NonNumericField {
                    line,
                    column: j + 3,
                    value: field.to_string(),
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        raw.push(RawPrediction {
            id,
            label: label as usize,
            probs,
        });
    }
    validate_dataset(num_classes, raw)
}

fn check_header(header: &csv::StringRecord) -> Result<usize> {
    let fields: Vec<&str> = header.iter().map(str::trim).collect();
    if fields.len() < 4 {
        return Err(Error::MalformedHeader(format!(
            "expected id,label,p0,p1,..., got {} columns",
            fields.len()
        )));
    }
    if fields[0].trim_start_matches('\u{feff}') != "id" || fields[1] != "label" {
        return Err(Error::MalformedHeader(format!(
            "first columns must be id,label, got {},{}",
            fields[0], fields[1]
        )));
    }
    for (j, name) in fields[2..].iter().enumerate() {
        if *name != format!("p{j}") {
            return Err(Error::MalformedHeader(format!(
                "column {} should be p{j}, got {name}",
                j + 3
            )));
        }
    }
    Ok(fields.len() - 2)
}

pub fn write_predictions(ds: &EvalDataset, path: &Path, label_base: u8) -> Result<()> {
    write_atomic(path, |w| write_predictions_to(ds, w, label_base))
}

pub fn write_predictions_to(ds: &EvalDataset, w: &mut dyn Write, label_base: u8) -> Result<()> {
    let mut header = String::from("id,label");
    for j in 0..ds.num_classes() {
        header.push_str(&format!(",p{j}"));
    }
    writeln!(w, "{header}")?;
    for s in ds.samples() {
        let probs: Vec<String> = s.probs.as_slice().iter().map(|&p| format_real(p)).collect();
        writeln!(
            w,
            "{},{},{}",
            s.id,
            s.label + usize::from(label_base),
            probs.join(",")
        )?;
    }
    Ok(())
}

/// Read a headerless K x K cost matrix.
pub fn read_cost_matrix(path: &Path) -> Result<CostMatrix> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(BufReader::new(open(path)?));
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        let row = record
            .iter()
            .enumerate()
            .map(|(j, f)| {
                f.trim().parse::<f64>().map_err(|_| Error::NonNumericField {
                    line,
                    column: j + 1,
                    value: f.to_string(),
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    CostMatrix::new(rows)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Json,
    Csv,
}

impl std::str::FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "json" => Ok(Format::Json),
            "csv" => Ok(Format::Csv),
            other => Err(Error::InvalidConfig(format!("unknown format {other:?}"))),
        }
    }
}

/// Anything that can be written as a report.
pub trait Report: Serialize {
    /// CSV rendering: header line then rows.
    fn csv_rows(&self) -> Vec<String>;
}

impl Report for crate::retention::RetentionCurve {
    fn csv_rows(&self) -> Vec<String> {
        std::iter::once("fraction,value".to_string())
            .chain(
                self.fractions
                    .iter()
                    .zip(&self.values)
                    .map(|(f, v)| format!("{},{}", format_real(*f), format_real(*v))),
            )
            .collect()
    }
}

impl Report for crate::retention::BootstrapSummary {
    fn csv_rows(&self) -> Vec<String> {
        std::iter::once("replicate,aursc".to_string())
            .chain(
                self.replicates
                    .iter()
                    .enumerate()
                    .map(|(i, v)| format!("{i},{}", format_real(*v))),
            )
            .collect()
    }
}

impl Report for crate::hard_metrics::MetricReport {
    fn csv_rows(&self) -> Vec<String> {
        vec![
            "metric,value".into(),
            format!("accuracy,{}", format_real(self.accuracy)),
            format!("qwk,{}", format_real(self.qwk)),
            format!("expected_cost,{}", format_real(self.expected_cost)),
            format!("ece,{}", format_real(self.ece)),
            format!("n,{}", self.n),
        ]
    }
}

pub fn write_report<R: Report + ?Sized>(report: &R, path: &Path, format: Format) -> Result<()> {
    write_atomic(path, |w| {
        match format {
            Format::Json => {
                serde_json::to_writer_pretty(&mut *w, report)?;
                writeln!(w)?;
            }
            Format::Csv => {
                for row in report.csv_rows() {
                    writeln!(w, "{row}")?;
                }
            }
        }
        Ok(())
    })
}

/// Read a `fraction,value` curve CSV back.
pub fn read_curve_csv(path: &Path) -> Result<Vec<(f64, f64)>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(BufReader::new(open(path)?));
    let header = reader.headers()?.clone();
    if header.iter().collect::<Vec<_>>() != ["fraction", "value"] {
        return Err(Error::MalformedHeader(format!(
            "expected fraction,value, got {}",
            header.iter().collect::<Vec<_>>().join(",")
        )));
    }
    let mut out = Vec::new();
    for record in reader.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        let num = |j: usize| {
            record[j].trim().parse::<f64>().map_err(|_| Error::NonNumericField {
                line,
                column: j + 1,
                value: record[j].to_string(),
            })
        };
        out.push((num(0)?, num(1)?));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::retention::{BootstrapSummary, Metric, RetentionCurve};
    use crate::psr::Rule;

    fn parse(text: &str, base: u8) -> Result<EvalDataset> {
        parse_predictions(text.as_bytes(), base)
    }

    #[test]
    fn reads_single_row() {
        let ds = parse("id,label,p0,p1,p2\na,0,0.25,0.75,0.0\n", 0).unwrap();
        assert_eq!(ds.num_classes(), 3);
        assert_eq!(ds.len(), 1);
        assert_eq!(ds.samples()[0].probs.as_slice(), &[0.25, 0.75, 0.0]);
    }

    #[test]
    fn label_base_offset() {
        let ds = parse("id,label,p0,p1\na,1,0.5,0.5\nb,2,0.1,0.9\n", 1).unwrap();
        assert_eq!(ds.samples()[0].label, 0);
        assert_eq!(ds.samples()[1].label, 1);
        assert!(matches!(
            parse("id,label,p0,p1\na,0,0.5,0.5\n", 1).unwrap_err(),
            Error::LabelOutOfRange { label: 0, .. }
        ));
    }

    #[test]
    fn arity_mismatch_reports_line() {
        let err = parse("id,label,p0,p1,p2\na,0,0.2,0.3,0.5\nb,1,0.5,0.5\n", 0).unwrap_err();
        assert!(
            matches!(err, Error::RowArityMismatch { line: 3, expected: 5, got: 4 }),
            "{err:?}"
        );
    }

    #[test]
    fn non_numeric_reports_line_and_column() {
        let err = parse("id,label,p0,p1\na,0,0.5,half\n", 0).unwrap_err();
        assert!(
            matches!(err, Error::NonNumericField { line: 2, column: 4, ref value } if value == "half"),
            "{err:?}"
        );
        assert!(matches!(
            parse("id,label,p0,p1\na,x,0.5,0.5\n", 0).unwrap_err(),
            Error::NonNumericField { line: 2, column: 2, .. }
        ));
    }

    #[test]
    fn header_errors() {
        for bad in ["", "id,label,p0\n", "name,label,p0,p1\n", "id,label,p1,p2\n"] {
            assert!(matches!(parse(bad, 0).unwrap_err(), Error::MalformedHeader(_)), "{bad:?}");
        }
    }

    #[test]
    fn missing_file() {
        assert!(matches!(
            read_predictions(Path::new("/nonexistent/preds.csv"), 0).unwrap_err(),
            Error::FileNotFound(_)
        ));
    }

    #[test]
    fn real_formatting_round_trips() {
        for x in [0.1, 1.0 / 3.0, 0.25, 1e-300, 0.999_999_999_999_9, 27.631, 123456.789] {
            assert_eq!(format_real(x).parse::<f64>().unwrap(), x, "{x}");
        }
        assert_eq!(format_real(0.25), "0.25000000000000000");
        assert_eq!(format_real(0.0), "0");
    }

    #[test]
    fn curve_csv_and_bootstrap_json() {
        let dir = tempfile::tempdir().unwrap();
        let fractions: Vec<f64> = (0..20).map(|i| 1.0 - 0.05 * i as f64).collect();
        let values: Vec<f64> = fractions.iter().map(|f| 0.7 + 0.2 * (1.0 - f) / 3.0).collect();
        let curve = RetentionCurve {
            rule: Rule::Rps,
            metric: Metric::Qwk,
            aursc: values.iter().sum(),
            fractions,
            values,
        };
        let csv_path = dir.path().join("curve.csv");
        write_report(&curve, &csv_path, Format::Csv).unwrap();
        let text = std::fs::read_to_string(&csv_path).unwrap();
        assert_eq!(text.lines().count(), 21);
        let back = read_curve_csv(&csv_path).unwrap();
        for ((f, v), (f0, v0)) in back.iter().zip(curve.fractions.iter().zip(&curve.values)) {
            assert!((f - f0).abs() < 1e-12 && (v - v0).abs() < 1e-12);
        }

        let summary = BootstrapSummary::from_replicates((0..50).map(|i| i as f64 / 7.0).collect(), 42);
        let json_path = dir.path().join("boot.json");
        write_report(&summary, &json_path, Format::Json).unwrap();
        let v: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(&json_path).unwrap()).unwrap();
        assert_eq!(v["replicates"].as_array().unwrap().len(), 50);
        assert_eq!(v["R"], 50);
        assert_eq!(v["seed"], 42);
    }

    #[test]
    fn failed_write_leaves_no_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("out.csv");
        let r = write_atomic(&path, |w| {
            writeln!(w, "partial")?;
            Err(Error::InvalidConfig("boom".into()))
        });
        assert!(r.is_err());
        assert!(!path.exists());
        assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 0);
    }

    #[test]
    fn cost_matrix_file() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("c.csv");
        std::fs::write(&p, "0,1,4\n1,0,1\n4,1,0\n").unwrap();
        assert_eq!(read_cost_matrix(&p).unwrap().get(0, 2), 4.0);
        std::fs::write(&p, "0,1,4\n1,0,1\n").unwrap();
        assert!(matches!(read_cost_matrix(&p).unwrap_err(), Error::ShapeMismatch(_)));
    }
}
