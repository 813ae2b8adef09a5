use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One evaluation point of one training run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub method: String,
    pub seed: u64,
    pub step: usize,
    pub mean_return: f64,
    pub std_return: f64,
    pub subset_size: usize,
    pub subset_fraction: f64,
    pub selection_wall_time_ms: f64,
}

pub const METRICS_HEADER: [&str; 8] = [
    "method",
    "seed",
    "step",
    "mean_return",
    "std_return",
    "subset_size",
    "subset_fraction",
    "selection_wall_time_ms",
];

pub fn metrics_to_string(rows: &[MetricsRow]) -> Result<String> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    w.write_record(METRICS_HEADER)?;
    for r in rows {
        w.serialize(r)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Validation(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

/// Writes a comma-separated table with a header row; an empty slice yields
/// a header-only file.
pub fn export_metrics(rows: &[MetricsRow], path: &Path) -> Result<()> {
    fs::write(path, metrics_to_string(rows)?).map_err(|e| Error::io(path, e))
}

pub fn parse_metrics(text: &str) -> Result<Vec<MetricsRow>> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let header: Vec<String> = r.headers()?.iter().map(String::from).collect();
    if header != METRICS_HEADER {
        return Err(Error::Validation(format!("unexpected metrics header {header:?}")));
    }
    r.deserialize().map(|row| row.map_err(Error::from)).collect()
}

pub fn read_metrics(path: &Path) -> Result<Vec<MetricsRow>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_metrics(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(step: usize, mean: f64) -> MetricsRow {
        MetricsRow {
            method: "redor".into(),
            seed: 3,
            step,
            mean_return: mean,
            std_return: 0.1 + 0.2,
            subset_size: 40,
            subset_fraction: 0.2,
            selection_wall_time_ms: 1234.5678,
        }
    }

    #[test]
    fn empty_is_header_only() {
        let text = metrics_to_string(&[]).unwrap();
        assert_eq!(text.lines().count(), 1);
        assert!(parse_metrics(&text).unwrap().is_empty());
    }

    #[test]
    fn round_trip_is_exact() {
        let rows = vec![row(1, 1.0 / 3.0), row(2, -2.5e-17), row(3, 45.123456789012345)];
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.csv");
        export_metrics(&rows, &path).unwrap();
        assert_eq!(fs::read_to_string(&path).unwrap().lines().count(), 4);
        assert_eq!(read_metrics(&path).unwrap(), rows);
    }

    #[test]
    fn wrong_header_rejected() {
        assert!(parse_metrics("a,b\n1,2\n").is_err());
    }
}
