use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde_json::{json, Map, Value};

use crate::error::{Error, Result};
use crate::numerics::Matrix;

use super::config::ExperimentConfig;

pub const SOLVED_WINDOW: usize = 100;
pub const SOLVED_THRESHOLD: f64 = 195.0;

/// Whether some run of 100 consecutive returns averages at least 195, and
/// the last index of the first such window.
pub fn check_solved(returns: &[f64]) -> (bool, Option<usize>) {
    check_solved_with(returns, SOLVED_WINDOW, SOLVED_THRESHOLD)
}

/// [`check_solved`] with an arbitrary window and threshold.
pub fn check_solved_with(returns: &[f64], window: usize, threshold: f64) -> (bool, Option<usize>) {
    if window == 0 || returns.len() < window {
        return (false, None);
    }
    let needed = threshold * window as f64;
    (window - 1..returns.len())
        .find(|&end| returns[end + 1 - window..=end].iter().sum::<f64>() >= needed)
        .map_or((false, None), |end| (true, Some(end)))
}

/// Frobenius norm of `K − K*`.
pub fn gain_gap(k: &Matrix, k_star: &Matrix) -> Result<f64> {
    if k.shape() != k_star.shape() {
        return Err(Error::dim(format!(
            "gain is {:?}, reference is {:?}",
            k.shape(),
            k_star.shape()
        )));
    }
    Ok((k - k_star).norm())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ColumnKind {
    Integer,
    Float,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Column {
    pub name: &'static str,
    pub kind: ColumnKind,
}

pub(crate) const fn int(name: &'static str) -> Column {
    Column {
        name,
        kind: ColumnKind::Integer,
    }
}

pub(crate) const fn float(name: &'static str) -> Column {
    Column {
        name,
        kind: ColumnKind::Float,
    }
}

/// Result of one experiment run: metric rows in production order, final
/// metrics, named text artifacts and timing.
#[derive(Debug, Clone)]
pub struct RunRecord {
    pub config: ExperimentConfig,
    pub columns: Vec<Column>,
    pub rows: Vec<Vec<f64>>,
    pub summary: Map<String, Value>,
    /// `(file name, contents)` pairs written next to the metrics.
    pub artifacts: Vec<(String, String)>,
    pub duration_secs: f64,
}

impl RunRecord {
    pub(crate) fn new(config: &ExperimentConfig, columns: Vec<Column>) -> Self {
        Self {
            config: config.clone(),
            columns,
            rows: Vec::new(),
            summary: Map::new(),
            artifacts: Vec::new(),
            duration_secs: 0.0,
        }
    }

    pub(crate) fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub(crate) fn set(&mut self, key: &str, value: impl Into<Value>) {
        self.summary.insert(key.to_string(), value.into());
    }

    pub fn seed(&self) -> u64 {
        self.config.seed
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let idx = self.columns.iter().position(|c| c.name == name)?;
        Some(self.rows.iter().map(|r| r[idx]).collect())
    }

    /// The metrics table as CSV text: a header, then one line per row.
    /// Floats use 17 significant digits; NaN is written as `NaN`.
    pub fn metrics_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let csv_err = |e: csv::Error| Error::Config(format!("writing metrics: {e}"));
        w.write_record(self.columns.iter().map(|c| c.name))
            .map_err(csv_err)?;
        for row in &self.rows {
            w.write_record(
                row.iter()
                    .zip(&self.columns)
                    .map(|(v, c)| format_cell(*v, c.kind)),
            )
            .map_err(csv_err)?;
        }
        let bytes = w
            .into_inner()
            .map_err(|e| Error::Config(format!("writing metrics: {e}")))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }

    pub fn summary_json(&self) -> Value {
        let config = serde_json::to_value(&self.config).expect("config serializes");
        json!({
            "experiment": self.config.experiment.as_str(),
            "seed": self.config.seed,
            "rows": self.rows.len(),
            "duration_secs": self.duration_secs,
            "metrics": Value::Object(self.summary.clone()),
            "config": config,
        })
    }
}

fn format_cell(v: f64, kind: ColumnKind) -> String {
    if v.is_nan() {
        "NaN".to_string()
    } else if kind == ColumnKind::Integer && v.fract() == 0.0 && v.abs() < 9.0e15 {
        format!("{}", v as i64)
    } else {
        format!("{v:.16e}")
    }
}

/// Writes `metrics.csv`, `summary.json` and any artifacts into `dir`,
/// creating it if needed. Returns the paths written.
pub fn write_results(record: &RunRecord, dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut written = Vec::new();
    let mut put = |name: &str, contents: &[u8]| -> Result<()> {
        let path = dir.join(name);
        let mut f = fs::File::create(&path).map_err(|e| Error::io(&path, e))?;
        f.write_all(contents).map_err(|e| Error::io(&path, e))?;
        written.push(path);
        Ok(())
    };
    put("metrics.csv", record.metrics_csv()?.as_bytes())?;
    let summary = serde_json::to_string_pretty(&record.summary_json()).expect("summary serializes");
    put("summary.json", (summary + "\n").as_bytes())?;
    for (name, contents) in &record.artifacts {
        put(name, contents.as_bytes())?;
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn solved_examples() {
        assert_eq!(check_solved(&[200.0; 100]), (true, Some(99)));
        assert_eq!(check_solved(&[200.0; 99]), (false, None));
        let alternating: Vec<f64> = (0..100)
            .map(|i| if i % 2 == 0 { 190.0 } else { 200.0 })
            .collect();
        assert_eq!(check_solved(&alternating), (true, Some(99)));
        let mut late = vec![10.0; 50];
        late.extend([200.0; 100]);
        // two leading 10s still leave the mean at 196.2
        assert_eq!(check_solved(&late), (true, Some(147)));
        assert_eq!(check_solved(&[]), (false, None));
    }

    #[test]
    fn gain_gap_examples() {
        let k = Matrix::from_row_slice(1, 2, &[0.3, -0.7]);
        assert_eq!(gain_gap(&k, &k).unwrap(), 0.0);
        let phi = (1.0 + 5f64.sqrt()) / 2.0;
        let gap = gain_gap(
            &Matrix::from_element(1, 1, 1.0),
            &Matrix::from_element(1, 1, 1.0 - phi),
        )
        .unwrap();
        assert!((gap - phi).abs() < 1e-12);
        let other = Matrix::from_row_slice(1, 2, &[1.0, 2.0]);
        assert_eq!(
            gain_gap(&k, &other).unwrap(),
            gain_gap(&k.transpose(), &other.transpose()).unwrap()
        );
        assert!(gain_gap(&k, &k.transpose()).is_err());
    }

    #[test]
    fn cells_keep_seventeen_digits() {
        let v = 0.1 + 0.2;
        let text = format_cell(v, ColumnKind::Float);
        assert_eq!(text.parse::<f64>().unwrap(), v);
        assert_eq!(format_cell(3.0, ColumnKind::Integer), "3");
        assert_eq!(format_cell(f64::NAN, ColumnKind::Float), "NaN");
    }

    fn brute_force(returns: &[f64]) -> (bool, Option<usize>) {
        for end in 0..returns.len() {
            if end + 1 >= 100 {
                let window = &returns[end + 1 - 100..=end];
                if window.iter().sum::<f64>() / 100.0 >= 195.0 {
                    return (true, Some(end));
                }
            }
        }
        (false, None)
    }

    proptest! {
        #[test]
        fn matches_brute_force(returns in proptest::collection::vec(prop_oneof![Just(200.0), Just(190.0), 150.0..=200.0f64, 0.0..200.0f64], 0..260)) {
            prop_assert_eq!(check_solved(&returns), brute_force(&returns));
        }
    }
}
