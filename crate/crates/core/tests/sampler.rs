use kmotion::sampler::{sample_target, sample_trajectory, stream_rng, SamplerConfig, SamplerError};

#[test]
fn target_draws_cover_the_range_with_the_uniform_mean() {
    let mut rng = stream_rng(11, 0);
    let draws: Vec<f64> = (0..100_000).map(|_| sample_target(&mut rng, (0.01, 4.0))).collect();
    let lo = draws.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = draws.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mean = draws.iter().sum::<f64>() / draws.len() as f64;
    assert!(lo >= 0.01 && hi <= 4.0);
    assert!((mean - 2.005).abs() < 0.05, "mean {mean}");
}

#[test]
fn thousand_targets_are_accepted_without_bias() {
    // Stratified targets: one uniform draw per 1/1000 slice of the range, so
    // the histogram check sees sampler bias rather than multinomial noise.
    let cfg = SamplerConfig::default();
    let (lo, hi) = cfg.motion_range;
    let mut accepted = Vec::new();
    let mut failures = 0;
    for i in 0..1000 {
        let mut rng = stream_rng(2024, i);
        let slice = (hi - lo) / 1000.0;
        let target = sample_target(&mut rng, (lo + i as f64 * slice, lo + (i + 1) as f64 * slice));
        match sample_trajectory(target, &cfg, &mut rng) {
            Ok(s) => {
                assert!((s.score.value() - target).abs() <= cfg.tolerance);
                accepted.push(s.score.value());
            }
            Err(SamplerError::Exhausted { .. }) => failures += 1,
            Err(e) => panic!("{e}"),
        }
    }
    assert!(failures <= 10, "{failures} exhausted");

    let mut bins = [0usize; 20];
    let w = (4.0 - 0.01) / 20.0;
    for s in &accepted {
        bins[(((s - 0.01) / w) as usize).min(19)] += 1;
    }
    let expected = accepted.len() as f64 / 20.0;
    for (b, &c) in bins.iter().enumerate() {
        assert!((c as f64 - expected).abs() <= 0.3 * expected, "bin {b}: {c} vs {expected}");
    }
}
