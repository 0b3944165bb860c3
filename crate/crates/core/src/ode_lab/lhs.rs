use rand::seq::SliceRandom;
use rand::Rng as _;

use super::system::SystemSpec;
use crate::seeding::rng_for;

/// Latin hypercube design over the system's coefficient box.
///
/// Each dimension is cut into `n` equal strata; every stratum receives exactly
/// one uniformly placed point and the strata are permuted independently per
/// dimension.
pub fn lhs_generate(spec: &SystemSpec, n: usize, seed: u64) -> Vec<Vec<f64>> {
    let dim = spec.coeff_dim();
    let mut rng = rng_for(seed, "lhs", 0);
    let mut points = vec![vec![0.0; dim]; n];
    let mut strata: Vec<usize> = (0..n).collect();
    for (d, iv) in spec.coeff_box.iter().enumerate() {
        strata.shuffle(&mut rng);
        for (p, &k) in points.iter_mut().zip(&strata) {
            let u: f64 = rng.random();
            let x = iv.lo + (k as f64 + u) / n as f64 * iv.width();
            p[d] = x.min(iv.hi);
        }
    }
    points
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ode_lab::system::SystemId;

    #[test]
    fn single_point_inside_box() {
        let spec = SystemId::Mpf.spec();
        let pts = lhs_generate(&spec, 1, 3);
        assert_eq!(pts.len(), 1);
        assert!(spec.contains(&pts[0]));
    }

    #[test]
    fn one_point_per_stratum() {
        let spec = SystemId::Brusselator.spec();
        let n = 100;
        let pts = lhs_generate(&spec, n, 11);
        for (d, iv) in spec.coeff_box.iter().enumerate() {
            let mut seen = vec![0usize; n];
            for p in &pts {
                let k = ((p[d] - iv.lo) / iv.width() * n as f64).floor() as usize;
                seen[k.min(n - 1)] += 1;
            }
            assert!(seen.iter().all(|&c| c == 1), "dimension {d}");
        }
    }

    #[test]
    fn marginal_histograms_are_flat() {
        let spec = SystemId::ActivatorInhibitor.spec();
        let pts = lhs_generate(&spec, 10_000, 5);
        for (d, iv) in spec.coeff_box.iter().enumerate() {
            let mut bins = [0usize; 100];
            for p in &pts {
                let k = ((p[d] - iv.lo) / iv.width() * 100.0).floor() as usize;
                bins[k.min(99)] += 1;
            }
            assert!(bins.iter().all(|&c| c == 100), "dimension {d}: {bins:?}");
        }
    }

    #[test]
    fn deterministic_per_seed() {
        let spec = SystemId::CellCycle.spec();
        assert_eq!(lhs_generate(&spec, 50, 9), lhs_generate(&spec, 50, 9));
        assert_ne!(lhs_generate(&spec, 50, 9), lhs_generate(&spec, 50, 10));
    }
}
