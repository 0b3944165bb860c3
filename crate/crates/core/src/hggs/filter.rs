//! Gradient-based filtering: the coarse training set S^(0).

use log::info;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::config::{RemainderRule, SamplerConfig};
use super::gradient::{ceil_fraction, gradient_degree_points, normalized_coords, top_by_score};
use crate::error::{Error, Result};
use crate::ode_lab::Dataset;
use crate::seeding::{rng_for, Rng};
use crate::surrogate::{residuals, MlpSurrogate};

/// Weighted sampling without replacement (Efraimidis–Spirakis).
///
/// Item i gets key `ln(u_i) / w_i` and the `count` largest keys win, so the
/// first pick has probability `w_i / Σw`. Zero-weight items rank after every
/// positive one, in uniform random order among themselves; all-zero weights
/// therefore give a uniform subset. Output is ordered by key.
pub fn weighted_sample_without_replacement(
    weights: &[f64],
    count: usize,
    rng: &mut Rng,
) -> Result<Vec<usize>> {
    if count > weights.len() {
        return Err(Error::InvalidInput(format!(
            "cannot draw {count} of {} items without replacement",
            weights.len()
        )));
    }
    if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
        return Err(Error::InvalidInput(
            "sampling weights must be finite and >= 0".into(),
        ));
    }
    let mut keys: Vec<(bool, f64, usize)> = weights
        .iter()
        .enumerate()
        .map(|(i, &w)| {
            let u: f64 = 1.0 - rng.random::<f64>(); // (0, 1]
            if w > 0.0 {
                (true, u.ln() / w, i)
            } else {
                (false, u, i)
            }
        })
        .collect();
    keys.sort_by(|a, b| b.0.cmp(&a.0).then(b.1.total_cmp(&a.1)).then(a.2.cmp(&b.2)));
    Ok(keys.into_iter().take(count).map(|k| k.2).collect())
}

/// Which training samples went into S^(0), and why.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterSelection {
    /// Top samples by gradient degree, ranked.
    pub top_gradient: Vec<usize>,
    /// Residual-driven picks from the remainder.
    pub remainder: Vec<usize>,
    pub gradient_degree: Vec<f64>,
}

impl FilterSelection {
    pub fn indices(&self) -> Vec<usize> {
        self.top_gradient
            .iter()
            .chain(&self.remainder)
            .copied()
            .collect()
    }
}

/// Selects `n_f` samples of `ds`: the top `⌈rN⌉` by gradient degree plus
/// residual-weighted draws from the rest, scored by `warm_model`.
pub fn gradient_filter(
    ds: &Dataset,
    warm_model: &MlpSurrogate,
    cfg: &SamplerConfig,
) -> Result<(Dataset, FilterSelection)> {
    let n = ds.len();
    let n_top = ceil_fraction(cfg.r, n);
    if cfg.n_f < n_top || cfg.n_f > n {
        return Err(Error::Config(format!(
            "n_f = {} must lie in [ceil(r*N), N] = [{n_top}, {n}]",
            cfg.n_f
        )));
    }
    let coords = normalized_coords(ds);
    let labels = ds.labels();
    let gd = gradient_degree_points(&coords, &labels, cfg.k)?;
    let top = top_by_score(&gd, &coords, n_top);

    let mut chosen = vec![false; n];
    for &i in &top {
        chosen[i] = true;
    }
    let rest: Vec<usize> = (0..n).filter(|&i| !chosen[i]).collect();
    let res = residuals(warm_model, ds)?;
    let rest_res: Vec<f64> = rest.iter().map(|&i| res[i]).collect();
    let n_rest = cfg.n_f - n_top;
    let picks = match cfg.remainder_rule {
        RemainderRule::ResidualWeighted => {
            let mut rng = rng_for(cfg.seed, "gradient-filter", 0);
            weighted_sample_without_replacement(&rest_res, n_rest, &mut rng)?
        }
        RemainderRule::TopResidual => {
            let rest_coords: Vec<Vec<f64>> = rest.iter().map(|&i| coords[i].clone()).collect();
            top_by_score(&rest_res, &rest_coords, n_rest)
        }
    };
    let remainder: Vec<usize> = picks.into_iter().map(|j| rest[j]).collect();
    info!(
        "gradient filter: {} by gradient degree + {} by residual of {n}",
        top.len(),
        remainder.len()
    );
    let sel = FilterSelection {
        top_gradient: top,
        remainder,
        gradient_degree: gd,
    };
    Ok((ds.subset(&sel.indices(), "gradient-filter"), sel))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_weights_rank_last() {
        let mut rng = rng_for(1, "t", 0);
        for _ in 0..50 {
            let s =
                weighted_sample_without_replacement(&[0.0, 2.0, 0.0, 1.0], 2, &mut rng).unwrap();
            let mut s2 = s.clone();
            s2.sort();
            assert_eq!(s2, vec![1, 3]);
        }
    }

    #[test]
    fn first_pick_is_weight_proportional() {
        let w = [1.0, 3.0];
        let mut rng = rng_for(2, "t", 0);
        let trials = 20_000;
        let hits = (0..trials)
            .filter(|_| weighted_sample_without_replacement(&w, 1, &mut rng).unwrap()[0] == 1)
            .count();
        let p = 0.75;
        let sd = (trials as f64 * p * (1.0 - p)).sqrt();
        assert!((hits as f64 - trials as f64 * p).abs() < 3.0 * sd);
    }

    #[test]
    fn too_many_requested() {
        let mut rng = rng_for(1, "t", 0);
        assert!(weighted_sample_without_replacement(&[1.0], 2, &mut rng).is_err());
    }
}
