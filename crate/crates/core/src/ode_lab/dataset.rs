//! Labeled coefficient samples and their CSV + JSON sidecar persistence.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::frequency::FrequencyConfig;
use super::integrate::IntegrationConfig;
use super::system::SystemId;
use crate::error::{Error, Result};
use crate::io_util::write_atomic;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledSample {
    pub coeffs: Vec<f64>,
    pub frequency: f64,
}

impl LabeledSample {
    pub fn is_oscillatory(&self) -> bool {
        self.frequency != 0.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub system: SystemId,
    pub generator: String,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub integration: Option<IntegrationConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub frequency: Option<FrequencyConfig>,
    pub failure_count: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub system: SystemId,
    pub samples: Vec<LabeledSample>,
    pub provenance: Provenance,
}

impl Dataset {
    pub fn new(
        system: SystemId,
        samples: Vec<LabeledSample>,
        generator: impl Into<String>,
        seed: u64,
    ) -> Self {
        Dataset {
            system,
            samples,
            provenance: Provenance {
                system,
                generator: generator.into(),
                seed,
                integration: None,
                frequency: None,
                failure_count: 0,
            },
        }
    }

    /// Builds an unlabeled-provenance dataset from parallel coefficient and label vectors.
    pub fn from_parts(system: SystemId, coeffs: Vec<Vec<f64>>, labels: Vec<f64>) -> Result<Self> {
        if coeffs.len() != labels.len() {
            return Err(Error::DimensionMismatch {
                expected: coeffs.len(),
                got: labels.len(),
            });
        }
        let dim = system.spec().coeff_dim();
        if let Some(bad) = coeffs.iter().find(|c| c.len() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: bad.len(),
            });
        }
        let samples = coeffs
            .into_iter()
            .zip(labels)
            .map(|(coeffs, frequency)| LabeledSample { coeffs, frequency })
            .collect();
        Ok(Dataset::new(system, samples, "manual", 0))
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn labels(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.frequency).collect()
    }

    pub fn coeffs(&self) -> Vec<Vec<f64>> {
        self.samples.iter().map(|s| s.coeffs.clone()).collect()
    }

    /// Samples at `indices`, in that order, with provenance tagged `generator`.
    pub fn subset(&self, indices: &[usize], generator: &str) -> Dataset {
        let mut out = self.clone();
        out.samples = indices.iter().map(|&i| self.samples[i].clone()).collect();
        out.provenance.generator = generator.to_string();
        out
    }

    pub fn extend(&mut self, other: &Dataset) {
        self.samples.extend(other.samples.iter().cloned());
        self.provenance.failure_count += other.provenance.failure_count;
    }

    pub fn to_csv_string(&self) -> String {
        let dim = self.system.spec().coeff_dim();
        let mut out = String::new();
        for d in 1..=dim {
            let _ = write!(out, "lambda_{d},");
        }
        out.push_str("frequency\n");
        for s in &self.samples {
            for c in &s.coeffs {
                let _ = write!(out, "{c:.16e},");
            }
            let _ = writeln!(out, "{:.16e}", s.frequency);
        }
        out
    }

    /// Parses the CSV body; provenance must come from the sidecar.
    pub fn parse_csv(system: SystemId, text: &str, path: &Path) -> Result<Vec<LabeledSample>> {
        let dim = system.spec().coeff_dim();
        let fmt_err = |message: String| Error::Format {
            path: path.to_path_buf(),
            message,
        };
        let mut lines = text.lines();
        let header = lines
            .next()
            .ok_or_else(|| fmt_err("missing header".into()))?;
        let expected = csv_header(dim);
        if header.trim_end() != expected {
            return Err(fmt_err(format!("header `{header}` != `{expected}`")));
        }
        let mut samples = Vec::new();
        for (row, line) in lines.enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let values: std::result::Result<Vec<f64>, _> =
                line.split(',').map(|v| v.trim().parse::<f64>()).collect();
            let values = values.map_err(|e| fmt_err(format!("row {}: {e}", row + 1)))?;
            if values.len() != dim + 1 {
                return Err(fmt_err(format!(
                    "row {}: expected {} fields",
                    row + 1,
                    dim + 1
                )));
            }
            samples.push(LabeledSample {
                coeffs: values[..dim].to_vec(),
                frequency: values[dim],
            });
        }
        Ok(samples)
    }

    /// Writes `path` (CSV) and its provenance sidecar atomically.
    pub fn save(&self, path: &Path) -> Result<()> {
        write_atomic(path, self.to_csv_string().as_bytes())?;
        let sidecar = serde_json::to_string_pretty(&self.provenance)?;
        write_atomic(&sidecar_path(path), sidecar.as_bytes())
    }

    pub fn load(path: &Path) -> Result<Dataset> {
        let side = sidecar_path(path);
        let prov_text = fs::read_to_string(&side).map_err(|e| Error::io(&side, e))?;
        let provenance: Provenance =
            serde_json::from_str(&prov_text).map_err(|e| Error::Format {
                path: side.clone(),
                message: e.to_string(),
            })?;
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let samples = Dataset::parse_csv(provenance.system, &text, path)?;
        Ok(Dataset {
            system: provenance.system,
            samples,
            provenance,
        })
    }
}

pub fn csv_header(dim: usize) -> String {
    let mut cols: Vec<String> = (1..=dim).map(|d| format!("lambda_{d}")).collect();
    cols.push("frequency".into());
    cols.join(",")
}

/// `data/foo.csv` -> `data/foo.provenance.json`.
pub fn sidecar_path(csv: &Path) -> PathBuf {
    let stem = csv
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    csv.with_file_name(format!("{stem}.provenance.json"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn header_format() {
        assert_eq!(csv_header(2), "lambda_1,lambda_2,frequency");
        let ds =
            Dataset::from_parts(SystemId::Brusselator, vec![vec![1.0, 2.0]], vec![0.0]).unwrap();
        assert!(ds
            .to_csv_string()
            .starts_with("lambda_1,lambda_2,frequency\n"));
    }

    #[test]
    fn save_and_load() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.csv");
        let mut ds = Dataset::from_parts(
            SystemId::Brusselator,
            vec![vec![0.1, 1.0 / 3.0], vec![4.9, 14.2]],
            vec![0.0, 0.123_456_789_012_345_67],
        )
        .unwrap();
        ds.provenance.failure_count = 2;
        ds.save(&path).unwrap();
        assert!(dir.path().join("d.provenance.json").exists());
        assert_eq!(Dataset::load(&path).unwrap(), ds);
    }

    #[test]
    fn bad_header_rejected() {
        let err = Dataset::parse_csv(SystemId::Brusselator, "a,b,c\n1,2,3\n", Path::new("x.csv"));
        assert!(matches!(err, Err(Error::Format { .. })));
    }

    proptest! {
        #[test]
        fn csv_round_trips_bit_exactly(rows in prop::collection::vec((any::<f64>(), any::<f64>(), 0.0f64..10.0), 0..20)) {
            let rows: Vec<_> = rows.into_iter().filter(|(a, b, _)| a.is_finite() && b.is_finite()).collect();
            let ds = Dataset::from_parts(
                SystemId::Brusselator,
                rows.iter().map(|&(a, b, _)| vec![a, b]).collect(),
                rows.iter().map(|&(_, _, y)| y).collect(),
            ).unwrap();
            let back = Dataset::parse_csv(SystemId::Brusselator, &ds.to_csv_string(), Path::new("x")).unwrap();
            for (x, y) in back.iter().zip(&ds.samples) {
                prop_assert_eq!(x.coeffs[0].to_bits(), y.coeffs[0].to_bits());
                prop_assert_eq!(x.coeffs[1].to_bits(), y.coeffs[1].to_bits());
                prop_assert_eq!(x.frequency.to_bits(), y.frequency.to_bits());
            }
        }
    }
}
