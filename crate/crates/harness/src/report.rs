//! CSV output of metric records and their aggregates.

use std::path::{Path, PathBuf};

use bmlab_core::MetricsRecord;

use crate::aggregate::{StepAggregate, Summary, METRICS};
use crate::error::HarnessError;
use crate::experiment::MetricsSeries;

pub const METRICS_HEADER: &str = "replicate,step,precision,recall,pcdd_literal,pcdd_l2,med,top10";

fn opt(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

fn record_fields(replicate: usize, r: &MetricsRecord) -> [String; 8] {
    [
        replicate.to_string(),
        r.step.to_string(),
        r.precision.to_string(),
        r.recall.to_string(),
        r.pcdd_literal.to_string(),
        opt(r.pcdd_l2),
        r.med.to_string(),
        r.top_k_concentration.to_string(),
    ]
}

pub fn record_line(replicate: usize, r: &MetricsRecord) -> String {
    record_fields(replicate, r).join(",")
}

fn to_csv<I, R>(header: &[String], rows: I) -> String
where
    I: IntoIterator<Item = R>,
    R: IntoIterator<Item = String>,
{
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    // writing into memory cannot fail
    w.write_record(header).expect("in-memory csv");
    for row in rows {
        w.write_record(row).expect("in-memory csv");
    }
    String::from_utf8(w.into_inner().expect("in-memory csv")).expect("ascii csv")
}

pub fn metrics_csv(series: &MetricsSeries) -> String {
    let header: Vec<String> = METRICS_HEADER.split(',').map(String::from).collect();
    let rows = series
        .replicates
        .iter()
        .enumerate()
        .flat_map(|(r, records)| records.iter().map(move |rec| record_fields(r, rec)));
    to_csv(&header, rows)
}

pub fn aggregate_csv(aggregates: &[StepAggregate]) -> String {
    let mut header = vec!["step".to_string()];
    for m in METRICS {
        header.extend(["median", "min", "max"].map(|s| format!("{m}_{s}")));
    }
    let rows = aggregates.iter().map(|a| {
        let mut row = vec![a.step.to_string()];
        for m in METRICS {
            match a.metric(m) {
                Some(Summary { median, min, max }) => row.extend([median, min, max].map(|v| v.to_string())),
                None => row.extend([String::new(), String::new(), String::new()]),
            }
        }
        row
    });
    to_csv(&header, rows)
}

/// Writes `metrics_<condition>.csv` and `aggregate_<condition>.csv` per series.
pub fn write_series(dir: &Path, series: &[MetricsSeries]) -> Result<Vec<PathBuf>, HarnessError> {
    std::fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    for s in series {
        let metrics = dir.join(format!("metrics_{}.csv", s.condition));
        std::fs::write(&metrics, metrics_csv(s))?;
        let agg = dir.join(format!("aggregate_{}.csv", s.condition));
        std::fs::write(&agg, aggregate_csv(&s.aggregates))?;
        written.push(metrics);
        written.push(agg);
    }
    Ok(written)
}

/// Parses a metrics CSV back into per-replicate record lists.
pub fn parse_metrics_csv(text: &str) -> Result<Vec<Vec<MetricsRecord>>, HarnessError> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
    let header = reader.headers().map_err(|e| HarnessError::Invalid(e.to_string()))?;
    if header.iter().collect::<Vec<_>>().join(",") != METRICS_HEADER {
        return Err(HarnessError::Invalid(format!("expected header '{METRICS_HEADER}'")));
    }
    let mut replicates: Vec<Vec<MetricsRecord>> = Vec::new();
    for (k, row) in reader.records().enumerate() {
        let row = row.map_err(|e| HarnessError::Invalid(format!("metrics row {}: {e}", k + 1)))?;
        let bad = || HarnessError::Invalid(format!("metrics row {}: {:?}", k + 1, row));
        if row.len() != 8 {
            return Err(bad());
        }
        let f = |i: usize| row[i].parse::<f64>().map_err(|_| bad());
        let replicate: usize = row[0].parse().map_err(|_| bad())?;
        let record = MetricsRecord {
            step: row[1].parse().map_err(|_| bad())?,
            precision: f(2)?,
            recall: f(3)?,
            pcdd_literal: f(4)?,
            pcdd_l2: if row[5].is_empty() { None } else { Some(f(5)?) },
            med: f(6)?,
            top_k_concentration: row[7].parse().map_err(|_| bad())?,
        };
        if replicate >= replicates.len() {
            replicates.resize_with(replicate + 1, Vec::new);
        }
        replicates[replicate].push(record);
    }
    Ok(replicates)
}
