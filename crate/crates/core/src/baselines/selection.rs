//! Selection rules of the comparison samplers, free of training and labeling.

use log::warn;
use rand::distr::{weighted::WeightedIndex, Distribution};
use rand::Rng as _;

use crate::error::{Error, Result};
use crate::hggs::gradient::{gradient_degree_query, top_by_score};
use crate::hggs::weighted_sample_without_replacement;
use crate::seeding::Rng;

/// `size` i.i.d. draws with `P(i) = l_i / Σ l`. All-zero residuals fall back
/// to uniform draws.
pub fn importance_resample(residuals: &[f64], size: usize, rng: &mut Rng) -> Result<Vec<usize>> {
    if residuals.is_empty() {
        return Err(Error::EmptyInput("residuals"));
    }
    if residuals.iter().any(|l| !(l.is_finite() && *l >= 0.0)) {
        return Err(Error::InvalidInput(
            "residuals must be finite and >= 0".into(),
        ));
    }
    if residuals.iter().all(|&l| l == 0.0) {
        warn!("all residuals zero; resampling uniformly");
        return Ok((0..size)
            .map(|_| rng.random_range(0..residuals.len()))
            .collect());
    }
    let dist = WeightedIndex::new(residuals)
        .map_err(|e| Error::InvalidInput(format!("resampling weights: {e}")))?;
    Ok((0..size).map(|_| dist.sample(rng)).collect())
}

/// Per-sample multiplicities of a resampled multiset, as loss weights.
pub fn multiplicities(draws: &[usize], n: usize) -> Vec<f64> {
    let mut w = vec![0.0; n];
    for &i in draws {
        w[i] += 1.0;
    }
    w
}

/// Uncertainty proxy of unlabeled candidates: the gradient degree of each
/// candidate, carrying its predicted label, against the labeled set.
/// All coordinates are unit-box normalized.
pub fn proxy_scores(
    candidates: &[Vec<f64>],
    predicted: &[f64],
    labeled: &[Vec<f64>],
    labels: &[f64],
    k: usize,
) -> Result<Vec<f64>> {
    candidates
        .iter()
        .zip(predicted)
        .map(|(c, &y)| gradient_degree_query(c, y, labeled, labels, k))
        .collect()
}

/// Indices of the `o` best pool candidates, ranked; ties go to the
/// lexicographically smaller candidate.
pub fn pool_select(scores: &[f64], candidates: &[Vec<f64>], o: usize) -> Vec<usize> {
    top_by_score(scores, candidates, o)
}

/// Running-quantile acceptance over a stream of chunks.
#[derive(Debug, Clone)]
pub struct StreamSelector {
    o: usize,
    accept_fraction: f64,
    seen: Vec<f64>,
    accepted: Vec<usize>,
    rejected: Vec<(f64, usize)>,
    offset: usize,
}

impl StreamSelector {
    /// Accepts `o` items per cycle, thresholding at the `1 - o/chunk` quantile.
    pub fn new(o: usize, chunk: usize) -> Self {
        StreamSelector {
            o,
            accept_fraction: if chunk == 0 {
                1.0
            } else {
                o as f64 / chunk as f64
            },
            seen: Vec::new(),
            accepted: Vec::new(),
            rejected: Vec::new(),
            offset: 0,
        }
    }

    pub fn done(&self) -> bool {
        self.accepted.len() >= self.o
    }

    /// Current acceptance threshold: the empirical `1 - o/chunk` quantile
    /// (lower order statistic) of all scores seen.
    fn threshold(&self) -> f64 {
        let mut s = self.seen.clone();
        s.sort_by(f64::total_cmp);
        let pos = ((1.0 - self.accept_fraction) * (s.len() - 1) as f64).floor() as usize;
        s[pos]
    }

    /// Consumes one chunk in stream order. A candidate is accepted when its
    /// score is at least the running threshold, so equal scores accept the
    /// first arrivals. Returns global stream indices accepted so far.
    pub fn push_chunk(&mut self, scores: &[f64]) -> &[usize] {
        self.seen.extend_from_slice(scores);
        if !scores.is_empty() {
            let thr = self.threshold();
            for (j, &s) in scores.iter().enumerate() {
                let idx = self.offset + j;
                if !self.done() && s >= thr {
                    self.accepted.push(idx);
                } else {
                    self.rejected.push((s, idx));
                }
            }
        }
        self.offset += scores.len();
        &self.accepted
    }

    /// Tops up from the best rejected candidates after the stream runs dry.
    /// Returns how many were added this way.
    pub fn finish(&mut self) -> usize {
        let missing = self.o.saturating_sub(self.accepted.len());
        if missing == 0 {
            return 0;
        }
        self.rejected
            .sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
        let add: Vec<usize> = self.rejected.iter().take(missing).map(|r| r.1).collect();
        warn!(
            "candidate stream exhausted; accepting {} best remaining",
            add.len()
        );
        self.accepted.extend(&add);
        add.len()
    }

    pub fn accepted(&self) -> &[usize] {
        &self.accepted
    }
}

/// Reservoir picks: the `o` largest keys `u^(1/w)` (equivalently `ln u / w`).
pub fn reservoir_select(weights: &[f64], o: usize, rng: &mut Rng) -> Result<Vec<usize>> {
    weighted_sample_without_replacement(weights, o, rng)
}

/// Indices of the `o` smallest residuals; ties go to the lower index.
pub fn lowest(residuals: &[f64], o: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..residuals.len()).collect();
    idx.sort_by(|&a, &b| residuals[a].total_cmp(&residuals[b]).then(a.cmp(&b)));
    idx.truncate(o);
    idx
}
