use kmotion::augment::{apply_training_pipeline_traced, AugmentPolicy, ContrastOp};
use kmotion::volume::{minmax_scale, Volume3D};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn ramp() -> Volume3D<f32> {
    minmax_scale(&Volume3D::from_fn([6, 5, 4], |x, y, z| (x * x + 2 * y + z) as f32).unwrap())
}

#[test]
fn branch_frequencies_follow_the_policy() {
    let v = ramp();
    let policy = AugmentPolicy::default();
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let runs = 10_000;
    let (mut flips, mut base, mut gamma, mut hist) = (0, 0, 0, 0);
    for _ in 0..runs {
        let (out, trace) = apply_training_pipeline_traced(&v, &policy, &mut rng);
        let (lo, hi) = out.min_max();
        assert!(lo >= 0.0 && hi <= 1.0);
        flips += usize::from(trace.flipped);
        base += usize::from(trace.base.is_some());
        match trace.contrast {
            ContrastOp::Gamma => gamma += 1,
            ContrastOp::HistogramShift => hist += 1,
        }
    }
    let frac = |c: usize| c as f64 / runs as f64;
    assert!((frac(flips) - 0.5).abs() <= 0.02, "flip {}", frac(flips));
    assert!((frac(base) - 0.8).abs() <= 0.02, "base {}", frac(base));
    assert_eq!(gamma + hist, runs);
    assert!((frac(gamma) - 0.5).abs() <= 0.02);
}

#[test]
fn no_op_policy_is_identity() {
    let v = ramp();
    let policy = AugmentPolicy {
        p_flip: 0.0,
        p_base_noise_or_blur: 0.0,
        log_gamma_range: (0.0, 0.0),
        p_gamma: 1.0,
        ..Default::default()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..20 {
        let (out, trace) = apply_training_pipeline_traced(&v, &policy, &mut rng);
        assert_eq!(trace.contrast, ContrastOp::Gamma);
        assert!(out.max_abs_diff(&v) <= 1e-6);
    }
}

#[test]
fn pipeline_is_seeded() {
    let v = ramp();
    let policy = AugmentPolicy::default();
    let run = |seed| apply_training_pipeline_traced(&v, &policy, &mut ChaCha8Rng::seed_from_u64(seed)).0;
    assert_eq!(run(5).data(), run(5).data());
}
