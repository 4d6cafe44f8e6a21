use semistab::analysis::{classify, ProbeConfig};
use semistab::ks::{self, KsModel};
use semistab::{zwart, StabilityClass};

#[test]
fn ks_above_threshold_is_exponentially_stable() {
    let model = KsModel::new(1.2, 32, 0.01).unwrap();
    let v = classify(&ks::flow_pair(&model, 0.0), &ProbeConfig::new(11));
    assert_eq!(v.class, StabilityClass::ExponentiallyStable, "{}", v.evidence);
    assert!((v.gamma_est - 0.2).abs() < 0.02, "gamma {}", v.gamma_est);
    let contraction = v.contraction.expect("contraction report");
    assert!(contraction.passes_at_or_below(1e-3));
    assert!(v.frechet.expect("frechet report").ratios_vanish());
}

#[test]
fn ks_with_moving_equilibrium_keeps_its_class() {
    // A nonzero constant only adds a drift -i n z_e to each eigenvalue.
    let model = KsModel::new(1.2, 32, 0.01).unwrap();
    let v = classify(&ks::flow_pair(&model, 0.7), &ProbeConfig::new(2));
    assert_eq!(v.class, StabilityClass::ExponentiallyStable, "{}", v.evidence);
}

#[test]
fn ks_at_the_boundary_is_not_exponential() {
    // nu = 1 leaves the first mode neutral.
    let model = KsModel::new(1.0, 32, 0.01).unwrap();
    let v = classify(&ks::flow_pair(&model, 0.0), &ProbeConfig::new(5));
    assert_ne!(v.class, StabilityClass::ExponentiallyStable, "{}", v.evidence);
    assert_ne!(v.class, StabilityClass::Unstable, "{}", v.evidence);
}

#[test]
fn ks_below_threshold_is_unstable() {
    let model = KsModel::new(0.8, 32, 0.01).unwrap();
    let v = classify(&ks::flow_pair(&model, 0.0), &ProbeConfig::new(9));
    assert_eq!(v.class, StabilityClass::Unstable, "{}", v.evidence);
    assert!(v.escapes.iter().all(|&(_, escaped)| escaped));
}

#[test]
fn zwart_is_flagged_as_a_counterexample() {
    let mut probes = ProbeConfig::new(1);
    probes.deltas = vec![1e-1, 1e-2, 1e-3, 1e-4];
    let v = classify(&zwart::flow_pair(), &probes);
    assert_eq!(v.linear_class, StabilityClass::AsymptoticallyStableOnly, "{}", v.evidence);
    assert_eq!(v.class, StabilityClass::Inconclusive);
    assert!(v.counterexample, "{}", v.evidence);
}

#[test]
fn verdicts_are_reproducible() {
    let model = KsModel::new(1.2, 16, 0.01).unwrap();
    let pair = ks::flow_pair(&model, 0.0);
    let a = classify(&pair, &ProbeConfig::new(3));
    let b = classify(&pair, &ProbeConfig::new(3));
    assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
}
