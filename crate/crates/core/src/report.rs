//! Tabular run reports (CSV and JSON).

use serde::{de::DeserializeOwned, Deserialize, Serialize};

use crate::error::{Result, SplpoError};

/// One algorithm run on one instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub instance: String,
    pub algorithm: String,
    pub status: String,
    pub m: usize,
    pub n: usize,
    pub best_ub: Option<f64>,
    pub lower_bound: Option<f64>,
    pub optimum: Option<f64>,
    pub gap_o_pct: Option<f64>,
    pub open_count: Option<usize>,
    pub iterations: Option<usize>,
    /// Seconds in the main stage, 3 decimals.
    pub time_s: f64,
    /// Total seconds, 3 decimals.
    pub total_time_s: f64,
    pub seed: Option<u64>,
    pub config_hash: String,
}

impl ReportRow {
    /// Sets the optimum and the derived gap.
    pub fn with_optimum(mut self, optimum: Option<f64>) -> Self {
        self.optimum = optimum;
        self.gap_o_pct = match (self.best_ub, optimum) {
            (Some(ub), Some(opt)) => Some(gap_pct(ub, opt)),
            _ => None,
        };
        self
    }
}

/// `(ub - opt) / opt * 100`; zero when both are zero.
pub fn gap_pct(ub: f64, opt: f64) -> f64 {
    if opt == 0.0 {
        if ub == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        (ub - opt) / opt * 100.0
    }
}

pub fn round_seconds(s: f64) -> f64 {
    (s * 1000.0).round() / 1000.0
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub rows: Vec<ReportRow>,
}

impl RunReport {
    pub fn to_csv(&self) -> Result<String> {
        write_csv(&self.rows)
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        Ok(Self { rows: read_csv(text)? })
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| SplpoError::Io(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| SplpoError::Io(e.to_string()))
    }

    /// Mean of the known `gap_o_pct` values of one algorithm.
    pub fn mean_gap(&self, algorithm: &str) -> Option<f64> {
        let gaps: Vec<f64> = self
            .rows
            .iter()
            .filter(|r| r.algorithm == algorithm)
            .filter_map(|r| r.gap_o_pct)
            .collect();
        (!gaps.is_empty()).then(|| gaps.iter().sum::<f64>() / gaps.len() as f64)
    }
}

/// Serialises any row type (report rows, SG or DA traces) with a header.
pub fn write_csv<T: Serialize>(rows: &[T]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in rows {
        w.serialize(row).map_err(|e| SplpoError::Io(e.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| SplpoError::Io(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| SplpoError::Io(e.to_string()))
}

pub fn read_csv<T: DeserializeOwned>(text: &str) -> Result<Vec<T>> {
    csv::Reader::from_reader(text.as_bytes())
        .deserialize()
        .map(|r| r.map_err(|e| SplpoError::Io(e.to_string())))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(alg: &str, ub: f64) -> ReportRow {
        ReportRow {
            instance: "a10_10_1".into(),
            algorithm: alg.into(),
            status: "optimal".into(),
            m: 10,
            n: 10,
            best_ub: Some(ub),
            lower_bound: None,
            optimum: None,
            gap_o_pct: None,
            open_count: Some(3),
            iterations: None,
            time_s: round_seconds(0.012_345),
            total_time_s: 1.5,
            seed: Some(7),
            config_hash: "abc123".into(),
        }
    }

    #[test]
    fn gap_arithmetic() {
        assert_eq!(gap_pct(101.0, 100.0), 1.0);
        assert_eq!(gap_pct(0.0, 0.0), 0.0);
        let r = row("hc", 1_001_440.0).with_optimum(Some(1_001_440.0));
        assert_eq!(r.gap_o_pct, Some(0.0));
        let r = row("hs", 1_003_100.0).with_optimum(Some(982_517.0));
        assert!((r.gap_o_pct.unwrap() - (1_003_100.0 - 982_517.0) / 982_517.0 * 100.0).abs() < 1e-12);
    }

    #[test]
    fn csv_and_json_round_trip() {
        let report = RunReport {
            rows: vec![
                row("hc", 9.0).with_optimum(Some(8.0)),
                row("exact", 8.0).with_optimum(Some(8.0)),
                ReportRow {
                    seed: None,
                    open_count: None,
                    ..row("sg", 1.0 / 3.0)
                },
            ],
        };
        let csv = report.to_csv().unwrap();
        assert!(csv.starts_with("instance,algorithm,status,m,n,best_ub"));
        assert_eq!(RunReport::from_csv(&csv).unwrap(), report);
        assert_eq!(RunReport::from_json(&report.to_json().unwrap()).unwrap(), report);
        assert_eq!(report.mean_gap("hc"), Some(12.5));
        assert_eq!(report.mean_gap("sg"), None);
        assert_eq!(report.rows[0].time_s, 0.012);
    }
}
