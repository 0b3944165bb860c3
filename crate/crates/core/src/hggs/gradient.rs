//! Gradient degree: how sharply labels change around each sample.
//!
//! ```text
//! gd_i = (1/K) Σ_{j ∈ KNN(i)} (y_j - y_i)² / ‖λ_j - λ_i‖²
//! ```
//!
//! Neighbours are exact, found in unit-box coordinates. Distance ties are
//! broken by the neighbour's coordinates (lexicographic), so the result never
//! depends on dataset order.

use std::cmp::Ordering;

use crate::error::{Error, Result};
use crate::ode_lab::Dataset;

/// Coefficients of `ds` mapped to `[0, 1]^D` by its system's box.
pub fn normalized_coords(ds: &Dataset) -> Vec<Vec<f64>> {
    let spec = ds.system.spec();
    ds.samples
        .iter()
        .map(|s| spec.normalize(&s.coeffs))
        .collect()
}

fn lex(a: &[f64], b: &[f64]) -> Ordering {
    for (x, y) in a.iter().zip(b) {
        match x.total_cmp(y) {
            Ordering::Equal => continue,
            o => return o,
        }
    }
    Ordering::Equal
}

fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Mean of `(y_j - y)² / d²` over the `k` nearest reference points.
/// `skip` excludes one reference index (the query itself).
fn knn_score(
    query: &[f64],
    y: f64,
    points: &[Vec<f64>],
    labels: &[f64],
    k: usize,
    skip: Option<usize>,
) -> Result<f64> {
    let mut cand: Vec<(f64, usize)> = points
        .iter()
        .enumerate()
        .filter(|&(j, _)| Some(j) != skip)
        .map(|(j, p)| (squared_distance(query, p), j))
        .collect();
    let cmp = |a: &(f64, usize), b: &(f64, usize)| {
        a.0.total_cmp(&b.0)
            .then_with(|| lex(&points[a.1], &points[b.1]))
            .then(a.1.cmp(&b.1))
    };
    if cand.len() > k {
        cand.select_nth_unstable_by(k - 1, cmp);
        cand.truncate(k);
    }
    // Fixed summation order keeps the score bitwise independent of dataset order.
    cand.sort_unstable_by(cmp);
    let mut sum = 0.0;
    for &(d2, j) in &cand {
        let dy = labels[j] - y;
        if d2 == 0.0 {
            if dy != 0.0 {
                return Err(Error::InvalidInput(format!(
                    "duplicate coefficients {:?} carry different labels",
                    points[j]
                )));
            }
            continue;
        }
        sum += dy * dy / d2;
    }
    Ok(sum / k as f64)
}

/// Gradient degree of every point against the others, in the given coordinates.
pub fn gradient_degree_points(points: &[Vec<f64>], labels: &[f64], k: usize) -> Result<Vec<f64>> {
    if points.len() != labels.len() {
        return Err(Error::DimensionMismatch {
            expected: points.len(),
            got: labels.len(),
        });
    }
    if k == 0 {
        return Err(Error::Config("K must be >= 1".into()));
    }
    if points.len() <= k {
        return Err(Error::InvalidInput(format!(
            "gradient degree needs more than K = {k} samples, got {}",
            points.len()
        )));
    }
    points
        .iter()
        .zip(labels)
        .enumerate()
        .map(|(i, (p, &y))| knn_score(p, y, points, labels, k, Some(i)))
        .collect()
}

/// Gradient degree of each sample of `ds` within `ds`, on unit-box coordinates.
pub fn gradient_degree(ds: &Dataset, k: usize) -> Result<Vec<f64>> {
    gradient_degree_points(&normalized_coords(ds), &ds.labels(), k)
}

/// Gradient degree of a query point (with a supposed label) against a
/// reference set; all coordinates already normalized.
pub fn gradient_degree_query(
    query: &[f64],
    y: f64,
    points: &[Vec<f64>],
    labels: &[f64],
    k: usize,
) -> Result<f64> {
    if k == 0 || points.len() < k {
        return Err(Error::InvalidInput(format!(
            "gradient degree query needs at least K = {k} reference samples, got {}",
            points.len()
        )));
    }
    knn_score(query, y, points, labels, k, None)
}

/// Indices of the `count` highest scores; ties go to the lexicographically
/// smaller point. The result is ordered by rank.
pub fn top_by_score(scores: &[f64], points: &[Vec<f64>], count: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_by(|&a, &b| {
        scores[b]
            .total_cmp(&scores[a])
            .then_with(|| lex(&points[a], &points[b]))
            .then(a.cmp(&b))
    });
    idx.truncate(count);
    idx
}

/// `⌈r·n⌉`, robust to `r·n` landing a rounding error above an integer.
pub fn ceil_fraction(r: f64, n: usize) -> usize {
    let x = r * n as f64;
    let nearest = x.round();
    if (x - nearest).abs() <= 1e-9 * x.abs().max(1.0) {
        nearest as usize
    } else {
        x.ceil() as usize
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(xs: &[f64]) -> Vec<Vec<f64>> {
        xs.iter().map(|&x| vec![x]).collect()
    }

    #[test]
    fn hand_case() {
        let gd = gradient_degree_points(&line(&[0.0, 1.0, 2.0]), &[0.0, 0.0, 1.0], 2).unwrap();
        assert_eq!(gd[2], 0.625);
        // λ=0: neighbours 1 (dy 0) and 2 (dy 1, d² 4).
        assert_eq!(gd[0], 0.125);
        assert_eq!(gd[1], 0.5);
    }

    #[test]
    fn constant_labels_score_zero() {
        let gd = gradient_degree_points(&line(&[0.1, 0.4, 0.5, 0.9]), &[2.0; 4], 2).unwrap();
        assert!(gd.iter().all(|&g| g == 0.0));
    }

    #[test]
    fn duplicates() {
        let pts = line(&[0.0, 0.0, 1.0]);
        let gd = gradient_degree_points(&pts, &[1.0, 1.0, 1.0], 1).unwrap();
        assert_eq!(gd, vec![0.0, 0.0, 0.0]);
        assert!(gradient_degree_points(&pts, &[1.0, 2.0, 1.0], 1).is_err());
    }

    #[test]
    fn needs_more_than_k_samples() {
        assert!(gradient_degree_points(&line(&[0.0, 1.0]), &[0.0, 1.0], 2).is_err());
    }

    #[test]
    fn ceil_rule() {
        assert_eq!(ceil_fraction(0.2, 100), 20);
        assert_eq!(ceil_fraction(0.2, 2000), 400);
        assert_eq!(ceil_fraction(0.2, 101), 21);
        assert_eq!(ceil_fraction(0.1, 30), 3);
    }

    #[test]
    fn top_ties_use_coordinates() {
        let pts = line(&[0.9, 0.1, 0.5]);
        assert_eq!(top_by_score(&[1.0, 1.0, 2.0], &pts, 2), vec![2, 1]);
    }
}
