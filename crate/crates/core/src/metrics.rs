//! Accuracy and imbalance measures, and the four-way test-set split.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hggs::gradient::{
    ceil_fraction, gradient_degree_points, normalized_coords, top_by_score,
};
use crate::ode_lab::Dataset;

/// Fraction of the test set forming the boundary subset.
pub const BOUNDARY_FRACTION: f64 = 0.2;

pub fn rmse(predictions: &[f64], labels: &[f64]) -> Result<f64> {
    if predictions.len() != labels.len() {
        return Err(Error::DimensionMismatch {
            expected: labels.len(),
            got: predictions.len(),
        });
    }
    if labels.is_empty() {
        return Err(Error::EmptyInput("rmse"));
    }
    let s: f64 = predictions
        .iter()
        .zip(labels)
        .map(|(p, y)| (p - y) * (p - y))
        .sum();
    Ok((s / labels.len() as f64).sqrt())
}

/// `#(y = 0) / #(y ≠ 0)`. Labels are exact zeros by construction.
pub fn imbalance_ratio(labels: &[f64]) -> Result<f64> {
    let zeros = labels.iter().filter(|&&y| y == 0.0).count();
    let nonzero = labels.len() - zeros;
    if nonzero == 0 {
        return Err(Error::UndefinedImbalanceRatio);
    }
    Ok(zeros as f64 / nonzero as f64)
}

/// `Σ_i Σ_j |y_i - y_j| / (2 N Σ y)` in O(N log N).
///
/// With labels sorted ascending (0-based rank i), the double sum equals
/// `2 Σ_i y_(i) (2i - N + 1)`.
pub fn gini_index(labels: &[f64]) -> Result<f64> {
    if labels.iter().any(|&y| y < 0.0 || !y.is_finite()) {
        return Err(Error::InvalidInput(
            "gini index needs finite labels >= 0".into(),
        ));
    }
    let total: f64 = labels.iter().sum();
    if !(total > 0.0) {
        return Err(Error::UndefinedGini);
    }
    let mut sorted = labels.to_vec();
    sorted.sort_by(f64::total_cmp);
    // Differences are shift-invariant; shifting makes equal labels exact zeros.
    let lo = sorted[0];
    let n = sorted.len() as f64;
    let pairs: f64 = sorted
        .iter()
        .enumerate()
        .map(|(i, &y)| (y - lo) * (2.0 * i as f64 - n + 1.0))
        .sum();
    Ok((2.0 * pairs / (2.0 * n * total)).max(0.0))
}

/// Index sets of the test subsets. Majority and minority partition the set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestPartition {
    pub majority: Vec<usize>,
    pub minority: Vec<usize>,
    pub boundary: Vec<usize>,
}

/// Splits `test` by label and picks the top 20% by within-test gradient degree.
pub fn partition_test_set(test: &Dataset, k: usize) -> Result<TestPartition> {
    let labels = test.labels();
    let coords = normalized_coords(test);
    let gd = gradient_degree_points(&coords, &labels, k)?;
    let mut boundary = top_by_score(&gd, &coords, ceil_fraction(BOUNDARY_FRACTION, test.len()));
    boundary.sort_unstable();
    let (majority, minority) = (0..labels.len()).partition(|&i| labels[i] == 0.0);
    Ok(TestPartition {
        majority,
        minority,
        boundary,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SubsetSizes {
    pub overall: usize,
    pub majority: usize,
    pub minority: usize,
    pub boundary: usize,
}

/// Test RMSE per subset plus the imbalance of the training data.
///
/// An empty subset reports `None`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubsetReport {
    pub overall: f64,
    pub majority: Option<f64>,
    pub minority: Option<f64>,
    pub boundary: f64,
    /// Over the training data; `None` when undefined.
    pub ir: Option<f64>,
    pub gi: Option<f64>,
    pub sizes: SubsetSizes,
}

impl SubsetReport {
    /// RMSE of a named subset (`overall`, `majority`, `minority`, `boundary`).
    pub fn subset(&self, name: &str) -> Option<f64> {
        match name {
            "overall" => Some(self.overall),
            "majority" => self.majority,
            "minority" => self.minority,
            "boundary" => Some(self.boundary),
            _ => None,
        }
    }
}

pub const SUBSETS: [&str; 4] = ["overall", "majority", "minority", "boundary"];

fn subset_rmse(pred: &[f64], labels: &[f64], idx: &[usize]) -> Result<Option<f64>> {
    if idx.is_empty() {
        return Ok(None);
    }
    let p: Vec<f64> = idx.iter().map(|&i| pred[i]).collect();
    let y: Vec<f64> = idx.iter().map(|&i| labels[i]).collect();
    rmse(&p, &y).map(Some)
}

/// Scores test predictions on each subset; IR and GI describe `train_labels`.
pub fn evaluate(
    predictions: &[f64],
    test: &Dataset,
    partition: &TestPartition,
    train_labels: &[f64],
) -> Result<SubsetReport> {
    let labels = test.labels();
    let overall = rmse(predictions, &labels)?;
    let boundary = subset_rmse(predictions, &labels, &partition.boundary)?
        .ok_or(Error::EmptyInput("boundary subset"))?;
    Ok(SubsetReport {
        overall,
        majority: subset_rmse(predictions, &labels, &partition.majority)?,
        minority: subset_rmse(predictions, &labels, &partition.minority)?,
        boundary,
        ir: imbalance_ratio(train_labels).ok(),
        gi: gini_index(train_labels).ok(),
        sizes: SubsetSizes {
            overall: labels.len(),
            majority: partition.majority.len(),
            minority: partition.minority.len(),
            boundary: partition.boundary.len(),
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ode_lab::SystemId;

    #[test]
    fn hand_values() {
        assert_eq!(rmse(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 0.0);
        assert!((rmse(&[0.0, 0.0], &[3.0, 4.0]).unwrap() - 12.5f64.sqrt()).abs() < 1e-15);
        assert_eq!(imbalance_ratio(&[0.0, 0.0, 1.0, 1.0]).unwrap(), 1.0);
        assert_eq!(imbalance_ratio(&[0.5, 1.0]).unwrap(), 0.0);
        assert_eq!(gini_index(&[0.0, 0.0, 1.0, 1.0]).unwrap(), 0.5);
        assert_eq!(gini_index(&[0.3; 7]).unwrap(), 0.0);
    }

    #[test]
    fn undefined_cases() {
        assert!(matches!(
            imbalance_ratio(&[0.0, 0.0]),
            Err(Error::UndefinedImbalanceRatio)
        ));
        assert!(matches!(gini_index(&[0.0, 0.0]), Err(Error::UndefinedGini)));
        assert!(rmse(&[], &[]).is_err());
    }

    #[test]
    fn partition_sizes() {
        let coeffs: Vec<Vec<f64>> = (0..100)
            .map(|i| vec![4.0 * i as f64 / 99.0 + 0.5, 2.5])
            .collect();
        let labels: Vec<f64> = (0..100).map(|i| if i < 50 { 0.0 } else { 0.1 }).collect();
        let ds = Dataset::from_parts(SystemId::Brusselator, coeffs, labels).unwrap();
        let p = partition_test_set(&ds, 5).unwrap();
        assert_eq!(p.boundary.len(), 20);
        assert_eq!(p.majority.len() + p.minority.len(), 100);
    }
}
