//! Multigrid genetic sampling: new points inside hyper-rectangles spanned by
//! pairs of residual-stratified samples.

use log::warn;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::gmm::ResidualStratification;
use crate::ode_lab::SystemSpec;
use crate::seeding::Rng;

/// `α ⊙ (a - b) + b` for a given `α ∈ [0,1]^D`.
///
/// The result is kept inside the pair's bounding box so that rounding can
/// never leave it.
pub fn grid_point(a: &[f64], b: &[f64], alpha: &[f64]) -> Vec<f64> {
    a.iter()
        .zip(b)
        .zip(alpha)
        .map(|((&ai, &bi), &t)| (t * (ai - bi) + bi).clamp(ai.min(bi), ai.max(bi)))
        .collect()
}

/// Uniform point of the hyper-rectangle spanned by `a` and `b`.
pub fn grid_sample_pair(a: &[f64], b: &[f64], rng: &mut Rng) -> Vec<f64> {
    let alpha: Vec<f64> = (0..a.len()).map(|_| rng.random::<f64>()).collect();
    grid_point(a, b, &alpha)
}

/// Degenerate-strata handling that occurred during one generation.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MgsFallbacks {
    /// hr had fewer than 2 members and absorbed mr.
    pub merged_hr_mr: bool,
    /// Points drawn uniformly from the box for lack of parents.
    pub uniform_draws: usize,
    /// mr was empty; mutation partners came from hr.
    pub mutation_from_hr: bool,
}

impl MgsFallbacks {
    pub fn any(&self) -> bool {
        self.merged_hr_mr || self.uniform_draws > 0 || self.mutation_from_hr
    }

    pub fn describe(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.merged_hr_mr {
            out.push("hr_merged_with_mr".to_string());
        }
        if self.uniform_draws > 0 {
            out.push(format!("uniform_draws:{}", self.uniform_draws));
        }
        if self.mutation_from_hr {
            out.push("mutation_partner_from_hr".to_string());
        }
        out
    }
}

fn uniform_in_box(spec: &SystemSpec, rng: &mut Rng) -> Vec<f64> {
    let unit: Vec<f64> = (0..spec.coeff_dim()).map(|_| rng.random::<f64>()).collect();
    let mut p = spec.denormalize(&unit);
    for (v, iv) in p.iter_mut().zip(&spec.coeff_box) {
        *v = v.clamp(iv.lo, iv.hi);
    }
    p
}

/// `n_v1` crossover points (two distinct hr parents) followed by `n_v2`
/// mutation points (one hr and one mr parent). `coeffs` are the raw
/// coefficients the strata index into.
pub fn mgs_generate(
    strat: &ResidualStratification,
    coeffs: &[Vec<f64>],
    spec: &SystemSpec,
    n_v1: usize,
    n_v2: usize,
    rng: &mut Rng,
) -> (Vec<Vec<f64>>, MgsFallbacks) {
    let mut fb = MgsFallbacks::default();
    let mut out = Vec::with_capacity(n_v1 + n_v2);
    if n_v1 + n_v2 == 0 {
        return (out, fb);
    }
    let mut hr = strat.hr.clone();
    let mut mr = strat.mr.clone();
    if hr.len() < 2 {
        hr.extend(&mr);
        hr.sort_unstable();
        fb.merged_hr_mr = true;
        warn!(
            "high-residual stratum has {} members; merged with medium",
            strat.hr.len()
        );
    }
    if mr.is_empty() {
        mr = hr.clone();
        fb.mutation_from_hr = true;
        warn!("medium-residual stratum empty; mutation partners drawn from high");
    }

    for _ in 0..n_v1 {
        if hr.len() < 2 {
            out.push(uniform_in_box(spec, rng));
            fb.uniform_draws += 1;
            continue;
        }
        let a = rng.random_range(0..hr.len());
        let mut b = rng.random_range(0..hr.len() - 1);
        if b >= a {
            b += 1;
        }
        out.push(grid_sample_pair(&coeffs[hr[a]], &coeffs[hr[b]], rng));
    }
    for _ in 0..n_v2 {
        if hr.is_empty() || (fb.mutation_from_hr && hr.len() < 2) {
            out.push(uniform_in_box(spec, rng));
            fb.uniform_draws += 1;
            continue;
        }
        let a = hr[rng.random_range(0..hr.len())];
        let b = mr[rng.random_range(0..mr.len())];
        out.push(grid_sample_pair(&coeffs[a], &coeffs[b], rng));
    }
    if fb.uniform_draws > 0 {
        warn!(
            "{} sampling points drawn uniformly for lack of parents",
            fb.uniform_draws
        );
    }
    (out, fb)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ode_lab::SystemId;
    use crate::seeding::rng_for;

    fn strat(lr: Vec<usize>, mr: Vec<usize>, hr: Vec<usize>) -> ResidualStratification {
        ResidualStratification {
            lr,
            mr,
            hr,
            means: [0.0, 1.0, 2.0],
            weights: [1.0 / 3.0; 3],
            variances: [1.0; 3],
            fallback: false,
            log_likelihood: vec![],
        }
    }

    #[test]
    fn endpoints_and_midpoint() {
        assert_eq!(
            grid_point(&[0.0, 0.0], &[1.0, 2.0], &[0.0, 0.0]),
            vec![1.0, 2.0]
        );
        assert_eq!(
            grid_point(&[0.0, 0.0], &[1.0, 2.0], &[0.5, 0.5]),
            vec![0.5, 1.0]
        );
    }

    #[test]
    fn empty_request() {
        let spec = SystemId::Brusselator.spec();
        let mut rng = rng_for(0, "t", 0);
        let (pts, fb) = mgs_generate(&strat(vec![], vec![], vec![]), &[], &spec, 0, 0, &mut rng);
        assert!(pts.is_empty());
        assert!(!fb.any());
    }

    #[test]
    fn starved_strata_fall_back() {
        let spec = SystemId::Brusselator.spec();
        let coeffs = vec![vec![1.0, 1.0], vec![2.0, 2.0], vec![3.0, 3.0]];
        let mut rng = rng_for(0, "t", 0);
        let (pts, fb) = mgs_generate(
            &strat(vec![0, 1], vec![], vec![2]),
            &coeffs,
            &spec,
            3,
            2,
            &mut rng,
        );
        assert_eq!(pts.len(), 5);
        assert!(fb.merged_hr_mr && fb.mutation_from_hr);
        assert_eq!(fb.uniform_draws, 5);
        assert!(pts.iter().all(|p| spec.contains(p)));

        let (pts, fb) = mgs_generate(
            &strat(vec![0], vec![1], vec![2]),
            &coeffs,
            &spec,
            4,
            2,
            &mut rng,
        );
        assert_eq!(pts.len(), 6);
        assert!(fb.merged_hr_mr && !fb.mutation_from_hr);
        assert_eq!(fb.uniform_draws, 0);
    }
}
