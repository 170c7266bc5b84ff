//! Lifted ball volumes against sampling and small exact cases.

use lipext_core::{lifted_ball_volume, FiniteMetricSpace, LiftConfig, Norm, Subspace, SubspaceMeasure};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Sample `x` uniformly in the cube `[-s, s]^N` with `s` the largest slice
/// radius `R - d(center, M°)`, and count, over subspace points, the mass of
/// those with `d(center, m') + |x|_1 < R`.
fn sampled_volume(
    space: &FiniteMetricSpace,
    mu: &SubspaceMeasure,
    dimension: usize,
    center: usize,
    radius: f64,
    samples: usize,
    rng: &mut ChaCha8Rng,
) -> f64 {
    let slack: Vec<(f64, f64)> = mu
        .subspace()
        .indices()
        .iter()
        .zip(mu.masses())
        .map(|(&j, &m)| (radius - space.dist(center, j), m))
        .collect();
    let side = slack.iter().map(|s| s.0).fold(0.0, f64::max);
    let mut total = 0.0;
    for _ in 0..samples {
        let l1: f64 = (0..dimension)
            .map(|_| rng.random_range(-side..side).abs())
            .sum();
        total += slack
            .iter()
            .filter(|(s, _)| l1 < *s)
            .map(|(_, m)| m)
            .sum::<f64>();
    }
    (2.0 * side).powi(dimension as i32) * total / samples as f64
}

#[test]
fn sampling_oracle_agrees_within_two_percent() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let coords: Vec<Vec<f64>> = (0..12)
        .map(|_| vec![rng.random_range(0.0..4.0), rng.random_range(0.0..4.0)])
        .collect();
    let space = FiniteMetricSpace::from_coordinates(&coords, Norm::L2).unwrap();
    let sub = Subspace::new(&space, vec![0, 2, 3, 5, 8, 11]).unwrap();
    let mu = SubspaceMeasure::new(sub, vec![1.0, 0.5, 2.0, 1.5, 0.7, 1.2]).unwrap();

    let mut worst: f64 = 0.0;
    for trial in 0..20 {
        let dimension = 1 + trial % 4;
        let cfg = LiftConfig::with_dimension(dimension, 1.0).unwrap();
        let center = rng.random_range(0..space.len());
        let nearest = mu.subspace().nearest(&space, center).1;
        let radius = nearest + rng.random_range(0.5..3.0);
        let exact = lifted_ball_volume(&space, &mu, &cfg, center, radius).exp();
        let sampled = sampled_volume(&space, &mu, dimension, center, radius, 1_000_000, &mut rng);
        let rel = (sampled - exact).abs() / exact;
        worst = worst.max(rel);
        assert!(rel < 0.02, "trial {trial}: N={dimension} exact={exact} sampled={sampled}");
    }
    assert!(worst > 0.0);
}

#[test]
fn unit_ball_volumes_for_a_singleton() {
    let space = FiniteMetricSpace::from_coordinates(&[vec![0.0]], Norm::L2).unwrap();
    let mu = SubspaceMeasure::counting(Subspace::full(&space));
    for (dimension, expected) in [(1, 2f64.ln()), (2, 2f64.ln()), (3, (4.0f64 / 3.0).ln())] {
        let cfg = LiftConfig::with_dimension(dimension, 1.0).unwrap();
        let v = lifted_ball_volume(&space, &mu, &cfg, 0, 1.0);
        assert!((v - expected).abs() <= 1e-12, "N={dimension}: {v} vs {expected}");
    }
}
