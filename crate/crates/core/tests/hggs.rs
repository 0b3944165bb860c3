mod common;

use std::collections::BTreeSet;

use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::Rng as _;

use hggs_core::hggs::{
    gmm_stratify, gradient_degree, gradient_degree_points, gradient_filter, grid_point,
    grid_sample_pair, hggs_run, mgs_generate, normalized_coords, ResidualStratification,
    SamplerConfig,
};
use hggs_core::ode_lab::{Dataset, LabelingConfig, SystemId};
use hggs_core::seeding::rng_for;
use hggs_core::surrogate::MlpSurrogate;

/// O(N²) evaluation of the gradient degree with the same neighbour order:
/// squared distance, then coordinates, then index.
fn brute_gd(points: &[Vec<f64>], labels: &[f64], k: usize) -> Vec<f64> {
    (0..points.len())
        .map(|i| {
            let mut others: Vec<(f64, usize)> = (0..points.len())
                .filter(|&j| j != i)
                .map(|j| {
                    let d2: f64 = points[i]
                        .iter()
                        .zip(&points[j])
                        .map(|(a, b)| (a - b).powi(2))
                        .sum();
                    (d2, j)
                })
                .collect();
            others.sort_by(|a, b| {
                a.0.total_cmp(&b.0)
                    .then_with(|| {
                        points[a.1]
                            .iter()
                            .zip(&points[b.1])
                            .map(|(x, y)| x.total_cmp(y))
                            .find(|o| o.is_ne())
                            .unwrap_or(std::cmp::Ordering::Equal)
                    })
                    .then(a.1.cmp(&b.1))
            });
            others[..k]
                .iter()
                .map(|&(d2, j)| (labels[j] - labels[i]).powi(2) / d2)
                .sum::<f64>()
                / k as f64
        })
        .collect()
}

fn random_points(n: usize, dim: usize, seed: u64) -> (Vec<Vec<f64>>, Vec<f64>) {
    let mut rng = rng_for(seed, "points", 0);
    let pts: Vec<Vec<f64>> = (0..n)
        .map(|_| (0..dim).map(|_| rng.random::<f64>()).collect())
        .collect();
    let labels = pts
        .iter()
        .map(|p| {
            if rng.random_bool(0.4) {
                0.0
            } else {
                p[0] + rng.random::<f64>()
            }
        })
        .collect();
    (pts, labels)
}

#[test]
fn gradient_degree_matches_brute_force() {
    let (pts, labels) = random_points(200, 3, 7);
    let fast = gradient_degree_points(&pts, &labels, 5).unwrap();
    assert_eq!(fast, brute_gd(&pts, &labels, 5));
}

#[test]
fn gradient_degree_uses_unit_box_coordinates() {
    let ds = common::hopf_labeled(60, 3);
    let coords = normalized_coords(&ds);
    assert!(coords.iter().flatten().all(|&c| (0.0..=1.0).contains(&c)));
    assert_eq!(
        gradient_degree(&ds, 5).unwrap(),
        brute_gd(&coords, &ds.labels(), 5)
    );
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn gradient_degree_scales_quadratically(seed in 0u64..10_000, c in 0.1f64..10.0) {
        let (pts, labels) = random_points(40, 2, seed);
        let gd = gradient_degree_points(&pts, &labels, 4).unwrap();
        let scaled: Vec<f64> = labels.iter().map(|y| c * y).collect();
        let gd_c = gradient_degree_points(&pts, &scaled, 4).unwrap();
        for (a, b) in gd.iter().zip(&gd_c) {
            prop_assert!((b - c * c * a).abs() <= 1e-9 * (1.0 + b.abs()));
        }
        let rank = |v: &[f64]| {
            let mut idx: Vec<usize> = (0..v.len()).collect();
            idx.sort_by(|&i, &j| v[j].total_cmp(&v[i]).then(i.cmp(&j)));
            idx
        };
        // Exact ties may reorder only among themselves under rounding.
        let (r, rc) = (rank(&gd), rank(&gd_c));
        for (i, j) in r.iter().zip(&rc) {
            prop_assert!((gd[*i] - gd[*j]).abs() <= 1e-9 * (1.0 + gd[*i].abs()));
        }
    }

    #[test]
    fn top_gradient_set_is_permutation_invariant(seed in 0u64..10_000) {
        let ds = common::hopf_labeled(50, seed);
        let model = MlpSurrogate::zeros(SystemId::Brusselator.spec().coeff_box, &[4]);
        let mut cfg = SamplerConfig::for_initial_size(50, 0, seed);
        cfg.n_f = 10;
        let (_, sel) = gradient_filter(&ds, &model, &cfg).unwrap();

        let mut perm: Vec<usize> = (0..50).collect();
        perm.shuffle(&mut rng_for(seed, "perm", 0));
        let shuffled = ds.subset(&perm, "shuffled");
        let (_, sel_p) = gradient_filter(&shuffled, &model, &cfg).unwrap();

        let as_set = |ds: &Dataset, idx: &[usize]| -> BTreeSet<Vec<u64>> {
            idx.iter().map(|&i| ds.samples[i].coeffs.iter().map(|c| c.to_bits()).collect()).collect()
        };
        prop_assert_eq!(as_set(&ds, &sel.top_gradient), as_set(&shuffled, &sel_p.top_gradient));
        for (k, &i) in perm.iter().enumerate() {
            prop_assert_eq!(sel_p.gradient_degree[k], sel.gradient_degree[i]);
        }
    }
}

#[test]
fn filter_budget_equal_to_top_set_keeps_only_top_gradient() {
    let ds = common::hopf_labeled(100, 1);
    let model = MlpSurrogate::new(SystemId::Brusselator.spec().coeff_box, &[4], 1);
    let mut cfg = SamplerConfig::for_initial_size(100, 0, 1);
    cfg.n_f = 20;
    let (coarse, sel) = gradient_filter(&ds, &model, &cfg).unwrap();
    assert!(sel.remainder.is_empty());
    assert_eq!(coarse.len(), 20);
    let mut expected = sel.top_gradient.clone();
    expected.sort_by(|&a, &b| sel.gradient_degree[b].total_cmp(&sel.gradient_degree[a]));
    let cutoff = sel.gradient_degree[*expected.last().unwrap()];
    let above = sel.gradient_degree.iter().filter(|&&g| g > cutoff).count();
    assert!(above < 20);
}

#[test]
fn filter_below_top_set_is_a_config_error() {
    let ds = common::hopf_labeled(100, 1);
    let model = MlpSurrogate::zeros(SystemId::Brusselator.spec().coeff_box, &[4]);
    let mut cfg = SamplerConfig::for_initial_size(100, 0, 1);
    cfg.n_f = 19;
    assert!(matches!(
        gradient_filter(&ds, &model, &cfg),
        Err(hggs_core::Error::Config(_))
    ));
}

#[test]
fn uniform_residuals_give_uniform_remainder() {
    // Constant labels and a zero model: every residual equals the label.
    let spec = SystemId::Brusselator.spec();
    let pts = hggs_core::ode_lab::lhs_generate(&spec, 50, 11);
    let ds = Dataset::from_parts(SystemId::Brusselator, pts, vec![0.2; 50]).unwrap();
    let model = MlpSurrogate::zeros(spec.coeff_box.clone(), &[4]);
    let trials = 500;
    let mut counts = [0usize; 50];
    let mut top: Option<Vec<usize>> = None;
    for t in 0..trials {
        let mut cfg = SamplerConfig::for_initial_size(50, 0, t as u64);
        cfg.n_f = 25;
        let (_, sel) = gradient_filter(&ds, &model, &cfg).unwrap();
        assert_eq!(
            *top.get_or_insert(sel.top_gradient.clone()),
            sel.top_gradient
        );
        for i in sel.remainder {
            counts[i] += 1;
        }
    }
    let top = top.unwrap();
    let p = 15.0 / 40.0;
    let sigma = common::bernoulli_sigma(p, trials);
    for (i, &c) in counts.iter().enumerate() {
        if top.contains(&i) {
            assert_eq!(c, 0);
        } else {
            let f = c as f64 / trials as f64;
            assert!(
                (f - p).abs() <= 3.0 * sigma,
                "item {i}: {f} vs {p} ± {}",
                3.0 * sigma
            );
        }
    }
}

fn clustered(seed: u64) -> Vec<f64> {
    let mut rng = rng_for(seed, "clusters", 0);
    let mut v = Vec::new();
    for c in [0.01, 0.1, 1.0] {
        for _ in 0..50 {
            v.push(c + rng.random_range(-1e-4..1e-4));
        }
    }
    v.shuffle(&mut rng);
    v
}

#[test]
fn strata_recover_point_clusters() {
    let r = clustered(3);
    let s = gmm_stratify(&r).unwrap();
    assert!(!s.fallback);
    for (set, c) in [(&s.lr, 0.01), (&s.mr, 0.1), (&s.hr, 1.0)] {
        assert_eq!(set.len(), 50);
        assert!(set.iter().all(|&i| (r[i] - c).abs() < 1e-3));
    }
}

fn check_partition(s: &ResidualStratification, n: usize) {
    let mut all: Vec<usize> = s.lr.iter().chain(&s.mr).chain(&s.hr).copied().collect();
    all.sort_unstable();
    assert_eq!(all, (0..n).collect::<Vec<_>>());
    if !s.fallback {
        assert!(s.means[0] < s.means[1] && s.means[1] < s.means[2]);
    }
}

#[test]
fn em_log_likelihood_is_monotone() {
    for seed in 0..100u64 {
        let mut rng = rng_for(seed, "em", 0);
        let n = rng.random_range(9..400);
        let shape = seed % 4;
        let r: Vec<f64> = (0..n)
            .map(|_| {
                let u: f64 = rng.random();
                match shape {
                    0 => u,
                    1 => u.powi(4),
                    2 => (-(1.0 - u).ln()) * 0.05,
                    _ => [0.001, 0.02, 0.3][rng.random_range(0..3)] * (1.0 + 0.5 * u),
                }
            })
            .collect();
        let s = gmm_stratify(&r).unwrap();
        for w in s.log_likelihood.windows(2) {
            assert!(
                w[1] >= w[0] - 1e-9 * w[0].abs().max(1.0),
                "seed {seed}: {} -> {}",
                w[0],
                w[1]
            );
        }
        check_partition(&s, n);
    }
}

#[test]
fn mgs_points_stay_in_box() {
    for id in SystemId::ALL {
        let spec = id.spec();
        let coeffs = hggs_core::ode_lab::lhs_generate(&spec, 60, 5);
        let mut rng = rng_for(5, "res", 0);
        let res: Vec<f64> = (0..60).map(|_| rng.random::<f64>().powi(3)).collect();
        let strat = gmm_stratify(&res).unwrap();
        let mut total = 0;
        for cycle in 0..20 {
            let mut rng = rng_for(1, "mgs", cycle);
            let (pts, _) = mgs_generate(&strat, &coeffs, &spec, 150, 100, &mut rng);
            assert_eq!(pts.len(), 250);
            assert!(pts.iter().all(|p| spec.contains(p)));
            total += pts.len();
        }
        assert!(total >= 5000);
    }
}

fn ks_uniform(mut xs: Vec<f64>, lo: f64, hi: f64) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    xs.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = (x - lo) / (hi - lo);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max)
}

#[test]
fn grid_samples_are_uniform_in_the_pair_box() {
    let (a, b) = (vec![0.5, 12.0], vec![3.0, 2.0]);
    let mut rng = rng_for(2, "pair", 0);
    let draws: Vec<Vec<f64>> = (0..10_000)
        .map(|_| grid_sample_pair(&a, &b, &mut rng))
        .collect();
    for d in 0..2 {
        let (lo, hi) = (a[d].min(b[d]), a[d].max(b[d]));
        let ks = ks_uniform(draws.iter().map(|p| p[d]).collect(), lo, hi);
        assert!(ks < 0.02, "dimension {d}: KS {ks}");
    }
}

#[test]
fn crossover_cloud_fills_the_pair_rectangle() {
    // Two high-residual points; everything else low.
    let spec = SystemId::Brusselator.spec();
    let mut coeffs = hggs_core::ode_lab::lhs_generate(&spec, 30, 9);
    coeffs[4] = vec![1.0, 2.0];
    coeffs[17] = vec![4.0, 11.0];
    let mut res = vec![0.001; 30];
    for (i, r) in res.iter_mut().enumerate() {
        *r += 1e-5 * i as f64;
    }
    res[4] = 1.0;
    res[17] = 1.0 + 1e-4;
    let strat = gmm_stratify(&res).unwrap();
    assert_eq!(
        strat.hr.iter().copied().collect::<BTreeSet<_>>(),
        BTreeSet::from([4, 17])
    );
    let mut rng = rng_for(4, "mgs", 0);
    let (pts, fb) = mgs_generate(&strat, &coeffs, &spec, 1000, 0, &mut rng);
    assert!(!fb.any());
    let (lo, hi) = ([1.0, 2.0], [4.0, 11.0]);
    for d in 0..2 {
        let xs: Vec<f64> = pts.iter().map(|p| p[d]).collect();
        assert!(xs.iter().all(|&x| x >= lo[d] && x <= hi[d]));
        let min = xs.iter().cloned().fold(f64::INFINITY, f64::min);
        let max = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let w = hi[d] - lo[d];
        assert!(min - lo[d] < 0.01 * w && hi[d] - max < 0.01 * w);
    }
}

#[test]
fn grid_point_endpoint_and_midpoint() {
    assert_eq!(
        grid_point(&[0.0, 0.0], &[1.0, 2.0], &[0.5, 0.5]),
        vec![0.5, 1.0]
    );
    assert_eq!(
        grid_point(&[3.0, 7.0], &[1.0, 2.0], &[0.0, 0.0]),
        vec![1.0, 2.0]
    );
    assert_eq!(
        grid_point(&[3.0, 7.0], &[1.0, 2.0], &[1.0, 1.0]),
        vec![3.0, 7.0]
    );
}

fn pipeline(m_c: usize, seed: u64) -> (hggs_core::hggs::SamplingOutcome, usize) {
    let (spec, initial) = common::brusselator(60, 21);
    let (_, val) = common::brusselator(20, 22);
    let scfg = SamplerConfig::for_initial_size(60, m_c, seed);
    let tcfg = common::tiny_train(seed);
    let lcfg = LabelingConfig::for_system(SystemId::Brusselator);
    let (out, _) = hggs_run(&spec, &initial, &val, &scfg, &tcfg, &lcfg, None).unwrap();
    (out, scfg.n_v1 + scfg.n_v2)
}

#[test]
fn no_cycles_is_filter_only() {
    let (out, _) = pipeline(0, 3);
    assert_eq!(out.train_set.len(), 30);
    assert_eq!(out.history.len(), 1);
    assert_eq!(out.labels_consumed, 60);
}

#[test]
fn cycles_grow_by_the_per_cycle_budget() {
    let (out, per_cycle) = pipeline(3, 3);
    assert_eq!(per_cycle, 10);
    for w in out.history.windows(2) {
        assert_eq!(w[1].train_size - w[0].train_size, per_cycle);
        assert_eq!(w[1].new_labels, per_cycle);
    }
    for rec in &out.history[1..] {
        let sizes = rec.strata_sizes.unwrap();
        assert_eq!(sizes.iter().sum::<usize>(), rec.train_size - per_cycle);
    }
    assert_eq!(out.train_set.len(), 60);
    assert_eq!(out.labels_consumed, 90);
    assert_eq!(out.efficiency(), 2.0 / 3.0);
    let spec = SystemId::Brusselator.spec();
    assert!(out
        .train_set
        .samples
        .iter()
        .all(|s| spec.contains(&s.coeffs) && s.frequency >= 0.0));
}

#[test]
fn fixed_seed_reproduces_the_run() {
    let (a, _) = pipeline(2, 8);
    let (b, _) = pipeline(2, 8);
    assert_eq!(a.train_set.to_csv_string(), b.train_set.to_csv_string());
    let strip = |h: &[hggs_core::hggs::CycleRecord]| {
        h.iter()
            .map(|r| {
                let mut r = r.clone();
                r.wall_ms = 0;
                r
            })
            .collect::<Vec<_>>()
    };
    assert_eq!(strip(&a.history), strip(&b.history));
    assert_eq!(a.model.params_flat(), b.model.params_flat());
}

#[test]
fn full_scale_budget_has_two_thirds_efficiency() {
    let c = SamplerConfig::for_initial_size(10_000, 20, 0);
    assert_eq!(c.n_f + c.n_s, 10_000);
    assert_eq!(c.efficiency(10_000), 2.0 / 3.0);
}
