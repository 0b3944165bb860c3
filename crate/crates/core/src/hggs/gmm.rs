//! Three-way residual stratification by a 1-D Gaussian mixture.

use std::f64::consts::PI;

use log::warn;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MAX_EM_ITERATIONS: usize = 100;
pub const LOG_LIKELIHOOD_TOL: f64 = 1e-8;
const MIN_WEIGHT: f64 = 1e-3;
const MIN_VARIANCE: f64 = 1e-12;

/// Low, medium and high residual strata.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualStratification {
    pub lr: Vec<usize>,
    pub mr: Vec<usize>,
    pub hr: Vec<usize>,
    /// Ascending.
    pub means: [f64; 3],
    pub weights: [f64; 3],
    pub variances: [f64; 3],
    /// Rank terciles were used instead of the mixture.
    pub fallback: bool,
    /// Log-likelihood after initialization and after each EM iteration.
    pub log_likelihood: Vec<f64>,
}

impl ResidualStratification {
    pub fn sizes(&self) -> [usize; 3] {
        [self.lr.len(), self.mr.len(), self.hr.len()]
    }
}

#[derive(Clone, Copy)]
struct Mixture {
    w: [f64; 3],
    mu: [f64; 3],
    var: [f64; 3],
}

impl Mixture {
    fn log_joint(&self, x: f64) -> [f64; 3] {
        std::array::from_fn(|k| {
            let d = x - self.mu[k];
            self.w[k].ln() - 0.5 * (2.0 * PI * self.var[k]).ln() - d * d / (2.0 * self.var[k])
        })
    }

    fn degenerate(&self) -> bool {
        self.w.iter().any(|&w| !(w >= MIN_WEIGHT))
            || self.var.iter().any(|&v| !(v >= MIN_VARIANCE))
            || self.mu.iter().any(|m| !m.is_finite())
    }
}

fn log_sum_exp(a: &[f64; 3]) -> f64 {
    let m = a.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + a.iter().map(|v| (v - m).exp()).sum::<f64>().ln()
}

/// E-step: responsibilities into `resp`, returns the log-likelihood.
fn expectation(mix: &Mixture, x: &[f64], resp: &mut [[f64; 3]]) -> f64 {
    let mut ll = 0.0;
    for (xi, r) in x.iter().zip(resp.iter_mut()) {
        let lj = mix.log_joint(*xi);
        let lse = log_sum_exp(&lj);
        ll += lse;
        for k in 0..3 {
            r[k] = (lj[k] - lse).exp();
        }
    }
    ll
}

fn maximization(x: &[f64], resp: &[[f64; 3]]) -> Mixture {
    let n = x.len() as f64;
    let mut mix = Mixture {
        w: [0.0; 3],
        mu: [0.0; 3],
        var: [0.0; 3],
    };
    for k in 0..3 {
        let nk: f64 = resp.iter().map(|r| r[k]).sum();
        let mu = resp.iter().zip(x).map(|(r, xi)| r[k] * xi).sum::<f64>() / nk;
        let var = resp
            .iter()
            .zip(x)
            .map(|(r, xi)| r[k] * (xi - mu) * (xi - mu))
            .sum::<f64>()
            / nk;
        mix.w[k] = nk / n;
        mix.mu[k] = mu;
        mix.var[k] = var;
    }
    mix
}

/// Linear-interpolation quantile of sorted data.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

fn moments(x: &[f64], idx: &[usize]) -> (f64, f64) {
    if idx.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = idx.len() as f64;
    let mean = idx.iter().map(|&i| x[i]).sum::<f64>() / n;
    let var = idx.iter().map(|&i| (x[i] - mean).powi(2)).sum::<f64>() / n;
    (mean, var)
}

/// Rank terciles; ties ordered by index.
fn terciles(x: &[f64], log_likelihood: Vec<f64>) -> ResidualStratification {
    let n = x.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| x[a].total_cmp(&x[b]).then(a.cmp(&b)));
    let (a, b) = (n / 3, 2 * n / 3);
    let mut parts = [
        order[..a].to_vec(),
        order[a..b].to_vec(),
        order[b..].to_vec(),
    ];
    for p in &mut parts {
        p.sort_unstable();
    }
    let stats: Vec<(f64, f64)> = parts.iter().map(|p| moments(x, p)).collect();
    let [lr, mr, hr] = parts;
    ResidualStratification {
        means: std::array::from_fn(|k| stats[k].0),
        variances: std::array::from_fn(|k| stats[k].1),
        weights: [
            lr.len() as f64 / n as f64,
            mr.len() as f64 / n as f64,
            hr.len() as f64 / n as f64,
        ],
        lr,
        mr,
        hr,
        fallback: true,
        log_likelihood,
    }
}

/// Fits a 3-component mixture to the residuals by EM and assigns each sample
/// to its most probable component, strata ordered by component mean.
///
/// Initialization is deterministic: means at the 1/6, 1/2 and 5/6 quantiles,
/// equal weights, and one shared variance: the mean squared distance to the
/// nearest initial mean. A degenerate fit (weight < 1e-3, variance < 1e-12,
/// or coinciding means) falls back to rank terciles.
pub fn gmm_stratify(residuals: &[f64]) -> Result<ResidualStratification> {
    let n = residuals.len();
    if n < 9 {
        return Err(Error::InvalidInput(format!(
            "stratification needs at least 9 residuals, got {n}"
        )));
    }
    if residuals.iter().any(|r| !r.is_finite()) {
        return Err(Error::NumericDomain("residuals"));
    }
    let mut sorted = residuals.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mu = [
        quantile(&sorted, 1.0 / 6.0),
        quantile(&sorted, 0.5),
        quantile(&sorted, 5.0 / 6.0),
    ];
    // Pooled around the nearest initial mean. The overall variance starts EM
    // on a saddle that merges well-separated clusters.
    let var = residuals
        .iter()
        .map(|r| {
            mu.iter()
                .map(|m| (r - m).powi(2))
                .fold(f64::INFINITY, f64::min)
        })
        .sum::<f64>()
        / n as f64;
    let mut mix = Mixture {
        w: [1.0 / 3.0; 3],
        mu,
        var: [var; 3],
    };
    if mix.degenerate() {
        warn!("residual mixture degenerate at initialization; using terciles");
        return Ok(terciles(residuals, Vec::new()));
    }

    let mut resp = vec![[0.0; 3]; n];
    let mut ll = expectation(&mix, residuals, &mut resp);
    let mut trace = vec![ll];
    for _ in 0..MAX_EM_ITERATIONS {
        let next = maximization(residuals, &resp);
        if next.degenerate() {
            warn!("residual mixture collapsed during EM; using terciles");
            return Ok(terciles(residuals, trace));
        }
        mix = next;
        let new_ll = expectation(&mix, residuals, &mut resp);
        trace.push(new_ll);
        let gain = new_ll - ll;
        ll = new_ll;
        if gain < LOG_LIKELIHOOD_TOL {
            break;
        }
    }

    let mut order = [0usize, 1, 2];
    order.sort_by(|&a, &b| mix.mu[a].total_cmp(&mix.mu[b]));
    let means: [f64; 3] = std::array::from_fn(|k| mix.mu[order[k]]);
    if !(means[0] < means[1] && means[1] < means[2]) {
        warn!("residual mixture means coincide; using terciles");
        return Ok(terciles(residuals, trace));
    }
    let mut strata: [Vec<usize>; 3] = Default::default();
    for (i, r) in resp.iter().enumerate() {
        let mut best = 0;
        for k in 1..3 {
            if r[order[k]] > r[order[best]] {
                best = k;
            }
        }
        strata[best].push(i);
    }
    let [lr, mr, hr] = strata;
    Ok(ResidualStratification {
        lr,
        mr,
        hr,
        means,
        weights: std::array::from_fn(|k| mix.w[order[k]]),
        variances: std::array::from_fn(|k| mix.var[order[k]]),
        fallback: false,
        log_likelihood: trace,
    })
}
