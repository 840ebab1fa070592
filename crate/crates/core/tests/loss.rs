use rydsqueeze_core::loss::{
    normalized_variance, simulate_shots, variance_vs_delay, variance_vs_loss, GroupSizeDist, LossConfig, SeedingMode,
};

const N: usize = 200;

fn continuous(seed_prob: f64, g: f64, rng_seed: u64) -> LossConfig {
    LossConfig { seed_prob, group_size_mean: g, pulse_delay: 0.0, rng_seed, ..LossConfig::default() }
}

fn loss_groups(g: f64, probs: &[f64], shots: usize) -> Vec<Vec<rydsqueeze_core::loss::ShotRecord>> {
    probs
        .iter()
        .enumerate()
        .map(|(i, &p)| simulate_shots(N, &continuous(p, g, 100 + i as u64), shots).unwrap())
        .collect()
}

#[test]
fn no_seeding_leaves_projection_noise() {
    let shots = simulate_shots(N, &continuous(0.0, 17.0, 1), 10_000).unwrap();
    assert!(shots.iter().all(|s| s.n_lost == 0));
    let mean_loss = shots.iter().map(|s| s.loss_fraction).sum::<f64>() / shots.len() as f64;
    assert!(mean_loss.abs() < 3.0 * (1.0 / (N as f64 * 10_000.0)).sqrt());
    let (sigma2, err) = normalized_variance(&shots, N).unwrap();
    assert!((sigma2 - 1.0).abs() < 3.0 * err);
}

#[test]
fn poissonian_loss_has_unit_slope() {
    // excess noise equals the loss fraction itself, so resolving the slope
    // to 0.1 needs the full loss range and 10^5 shots per point
    let probs = [0.0, 8e-4, 1.6e-3, 2.4e-3, 3.2e-3, 4.0e-3];
    let fit = variance_vs_loss(&loss_groups(1.0, &probs, 100_000), N, 0.0).unwrap();
    assert!(fit.points.iter().all(|p| p.loss_fraction <= 0.1 + 2e-3));
    assert!((fit.slope - 1.0).abs() <= 0.1, "slope {} +- {}", fit.slope, fit.slope_err);
    assert!((fit.intercept - 1.0).abs() <= 0.03);
}

#[test]
fn grouped_loss_recovers_group_size() {
    let probs = [0.0, 2.5e-5, 5e-5, 7.5e-5, 1e-4, 1.2e-4];
    let fit = variance_vs_loss(&loss_groups(17.0, &probs, 10_000), N, 0.0).unwrap();
    assert!(fit.points.iter().all(|p| p.loss_fraction <= 0.05 + 2e-3));
    assert!((fit.slope - 17.0).abs() <= 2.0, "slope {} +- {}", fit.slope, fit.slope_err);
    assert!((fit.intercept - 1.0).abs() <= 0.03);
}

#[test]
fn geometric_groups_add_size_dispersion() {
    // slope E[G^2]/E[G] = 2g - 1
    let probs = [0.0, 1e-4, 2e-4, 3e-4, 4e-4];
    let groups: Vec<_> = probs
        .iter()
        .enumerate()
        .map(|(i, &p)| {
            let c = LossConfig { group_size_dist: GroupSizeDist::Geometric, ..continuous(p, 5.0, 300 + i as u64) };
            simulate_shots(N, &c, 10_000).unwrap()
        })
        .collect();
    let fit = variance_vs_loss(&groups, N, 0.0).unwrap();
    assert!((fit.slope - 9.0).abs() < 4.0 * fit.slope_err + 0.5, "{} +- {}", fit.slope, fit.slope_err);
}

#[test]
fn small_loss_law_matches_analytics() {
    for (i, c) in [continuous(5e-5, 17.0, 7), LossConfig { rng_seed: 8, ..LossConfig::default() }].iter().enumerate() {
        let shots = simulate_shots(N, c, 10_000).unwrap();
        let (sigma2, err) = normalized_variance(&shots, N).unwrap();
        let (_, excess) = c.expected_excess(N);
        assert!((sigma2 - 1.0 - excess).abs() < 2.0 * err, "case {i}: {sigma2} vs {}", 1.0 + excess);
    }
}

#[test]
fn long_delays_return_to_projection_noise() {
    let c = LossConfig { pulse_delay: 20.0 * 29e-6, rng_seed: 2, ..LossConfig::default() };
    let (sigma2, _) = normalized_variance(&simulate_shots(N, &c, 10_000).unwrap(), N).unwrap();
    assert!((sigma2 - 1.0).abs() <= 0.05, "{sigma2}");
}

#[test]
fn excess_noise_vanishes_with_seeding() {
    let mut previous = f64::INFINITY;
    for (i, p) in [2e-4, 5e-5, 1e-5, 0.0].into_iter().enumerate() {
        let (sigma2, err) = normalized_variance(&simulate_shots(N, &continuous(p, 17.0, 40 + i as u64), 20_000).unwrap(), N).unwrap();
        assert!(sigma2 - 1.0 < previous + 3.0 * err);
        previous = sigma2 - 1.0;
    }
    assert!(previous.abs() < 0.05);
}

#[test]
fn delay_fit_recovers_decay_time() {
    let delays: Vec<f64> = (0..16).map(|k| k as f64 * 10e-6).collect();
    let base = LossConfig { rng_seed: 11, ..LossConfig::default() };
    let fit = variance_vs_delay(N, &base, &delays, 20_000).unwrap();
    let tau = 1.0 / fit.rate;
    assert!((tau / 29e-6 - 1.0).abs() <= 0.15, "{tau:e}");
    // non-increasing up to sampling error
    for w in fit.points.windows(2) {
        assert!(w[1].sigma2 <= w[0].sigma2 + 3.0 * (w[0].sigma2_err.hypot(w[1].sigma2_err)));
    }
    // zero delay equals continuous dressing
    let continuous_excess = LossConfig { pulse_delay: 0.0, ..base }.expected_excess(N).1;
    assert!((fit.points[0].sigma2 - 1.0 - continuous_excess).abs() < 3.0 * fit.points[0].sigma2_err);
}

#[test]
fn per_atom_seeding_is_supported() {
    let c = LossConfig { seeding: SeedingMode::PerAtom, rng_seed: 5, ..continuous(5e-5, 17.0, 5) };
    let shots = simulate_shots(N, &c, 2000).unwrap();
    assert!(shots.iter().all(|s| s.n_up + s.n_down + s.n_lost == N as u64));
    assert_eq!(shots, simulate_shots(N, &c, 2000).unwrap());
}
