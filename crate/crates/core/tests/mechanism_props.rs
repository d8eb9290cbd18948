use dpl1_core::mechanism::{log_probabilities, AuditConfig, ExponentialSampler};
use dpl1_core::rng::StreamRng;
use dpl1_core::{
    build_net, dp_audit, exact_output_distribution, sample, ConstraintSet, Dataset, MechanismSpec,
    TruncationSpec,
};
use proptest::prelude::*;

fn scores() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-50.0f64..50.0, 1..20)
}

proptest! {
    #[test]
    fn distribution_sums_to_one(s in scores(), eps in 0.01f64..20.0, du in 0.01f64..5.0) {
        let p = exact_output_distribution(&MechanismSpec::new(eps, du, s).unwrap()).unwrap();
        let total: f64 = p.iter().sum();
        prop_assert!((total - 1.0).abs() < 1e-10);
        prop_assert!(p.iter().all(|v| v.is_finite() && *v >= 0.0));
    }

    #[test]
    fn shift_invariance(s in scores(), c in -1e4f64..1e4, seed in any::<u64>()) {
        let a = MechanismSpec::new(1.0, 0.5, s.clone()).unwrap();
        let b = MechanismSpec::new(1.0, 0.5, s.iter().map(|v| v + c).collect()).unwrap();
        let pa = exact_output_distribution(&a).unwrap();
        let pb = exact_output_distribution(&b).unwrap();
        for (x, y) in pa.iter().zip(&pb) {
            prop_assert!((x - y).abs() < 1e-12);
        }
        // The draw only differs if the uniform lands within rounding of a
        // CDF boundary.
        let cum: Vec<f64> = pa.iter().scan(0.0, |acc, p| { *acc += p; Some(*acc) }).collect();
        let u = StreamRng::new(seed).uniform();
        if cum.iter().all(|c| (c - u).abs() > 1e-9) {
            prop_assert_eq!(sample(a, seed).unwrap().chosen_index, sample(b, seed).unwrap().chosen_index);
        }
    }

    #[test]
    fn raising_a_score_raises_its_probability(s in prop::collection::vec(-5.0f64..5.0, 2..10), i in any::<prop::sample::Index>(), bump in 0.01f64..3.0) {
        let i = i.index(s.len());
        let before = exact_output_distribution(&MechanismSpec::new(1.0, 1.0, s.clone()).unwrap()).unwrap();
        let mut raised = s;
        raised[i] += bump;
        let after = exact_output_distribution(&MechanismSpec::new(1.0, 1.0, raised).unwrap()).unwrap();
        prop_assert!(after[i] > before[i]);
    }

    #[test]
    fn sampling_is_seed_deterministic(s in scores(), seed in any::<u64>()) {
        let a = sample(MechanismSpec::new(1.0, 1.0, s.clone()).unwrap(), seed).unwrap();
        let b = sample(MechanismSpec::new(1.0, 1.0, s).unwrap(), seed).unwrap();
        prop_assert_eq!(a.chosen_index, b.chosen_index);
    }
}

#[test]
fn softmax_frequency() {
    let spec = MechanismSpec::new(2.0, 1.0, vec![0.0, 3f64.ln()]).unwrap();
    let p = exact_output_distribution(&spec).unwrap();
    let sampler = ExponentialSampler::new(&p);
    let mut rng = StreamRng::new(77);
    let draws = 1_000_000;
    let ones = (0..draws).filter(|_| sampler.draw(&mut rng) == 1).count();
    let f = ones as f64 / draws as f64;
    assert!((f - 0.75).abs() <= 0.0015, "{f}");
}

#[test]
fn large_gap_selects_argmax() {
    // exponent gap of 50 between the best and the rest
    let spec = MechanismSpec::new(2.0, 1.0, vec![0.0, 50.0, -3.0]).unwrap();
    let p = exact_output_distribution(&spec).unwrap();
    let sampler = ExponentialSampler::new(&p);
    let mut rng = StreamRng::new(5);
    let draws = 1_000_000;
    let hits = (0..draws).filter(|_| sampler.draw(&mut rng) == 1).count();
    assert!(hits as f64 / draws as f64 > 0.999_999);
}

#[test]
fn utility_tail_frequency() {
    let mut rng = StreamRng::new(31);
    let runs = 1000;
    for t in [1.0, 2.0, 3.0] {
        let mut bad = 0;
        for r in 0..runs {
            let k = 2 + (rng.uniform() * 50.0) as usize;
            let scores: Vec<f64> = (0..k).map(|_| 4.0 * rng.uniform()).collect();
            let spec = MechanismSpec::new(1.0, 1.0, scores.clone()).unwrap();
            let out = sample(spec, r).unwrap();
            let best = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let gap = 2.0 * 1.0 / 1.0 * ((k as f64).ln() + t);
            bad += (out.chosen_score < best - gap) as usize;
        }
        let p = (-t as f64).exp();
        let limit = p + 3.0 * (p * (1.0 - p) / runs as f64).sqrt();
        assert!(bad as f64 / runs as f64 <= limit, "t={t}: {bad}");
    }
}

#[test]
fn log_probabilities_survive_extreme_scores() {
    let spec = MechanismSpec::new(1.0, 1e-6, vec![0.0, 1.0, -1.0]).unwrap();
    let lp = log_probabilities(&spec).unwrap();
    assert!(lp.iter().all(|v| v.is_finite()));
    assert_eq!(lp[1], 0.0);
}

fn random_pairs(n: usize, count: usize, seed: u64) -> Vec<(Dataset, Dataset)> {
    let mut rng = StreamRng::new(seed);
    (0..count)
        .map(|_| {
            let rows: Vec<(Vec<f64>, f64)> = (0..n)
                .map(|_| (vec![4.0 * rng.uniform() - 2.0], 4.0 * rng.uniform() - 2.0))
                .collect();
            let d = Dataset::from_rows(&rows).unwrap();
            let i = (rng.uniform() * n as f64) as usize;
            let e = d
                .with_record(i, &[20.0 * rng.uniform() - 10.0], 200.0 * rng.uniform() - 100.0)
                .unwrap();
            (d, e)
        })
        .collect()
}

#[test]
fn audit_of_random_pairs_stays_within_epsilon() {
    let set = ConstraintSet::interval(-1.0, 1.0).unwrap();
    let net = build_net(&set, 0.1).unwrap();
    assert_eq!(net.len(), 21);
    let pairs = random_pairs(20, 200, 3);
    let cfg = AuditConfig::new(1.0, TruncationSpec::second_moment(0.5).unwrap());
    let report = dp_audit(&pairs, &net, &cfg).unwrap();
    assert!(report.passed);
    assert!(report.max_log_ratio <= 1.0 + 1e-9);
}

/// The swapped record has zero residual at `a` before and at `b` after, and
/// the rest of the data pins the mass near `a`.
fn adversarial_pair(n: usize) -> (Dataset, Dataset) {
    let a = -0.8;
    let rows: Vec<(Vec<f64>, f64)> = (0..n).map(|_| (vec![1.0], a)).collect();
    let d = Dataset::from_rows(&rows).unwrap();
    let e = d.with_record(0, &[1.0], 0.8).unwrap();
    (d, e)
}

#[test]
fn under_calibrated_sensitivity_is_caught() {
    let set = ConstraintSet::interval(-1.0, 1.0).unwrap();
    let net = build_net(&set, 0.1).unwrap();
    let pairs = vec![adversarial_pair(20)];
    let mut cfg = AuditConfig::new(1.0, TruncationSpec::second_moment(1.0).unwrap());

    let honest = dp_audit(&pairs, &net, &cfg).unwrap();
    assert!(honest.passed);
    // The score moves by at most half of the sensitivity bound.
    assert!(honest.max_log_ratio <= 0.5 + 1e-9);

    cfg.sensitivity_scale = 0.5;
    let half = dp_audit(&pairs, &net, &cfg).unwrap();
    assert!(half.passed, "{}", half.max_log_ratio);
    assert!(half.max_log_ratio > 0.9);

    cfg.sensitivity_scale = 0.25;
    let quarter = dp_audit(&pairs, &net, &cfg).unwrap();
    assert!(!quarter.passed);
    assert!(quarter.max_log_ratio > 1.5);
}
