use std::time::Instant;

use rebalance_core::cohort::ROOT_COHORT;
use rebalance_core::engine::Engine;
use rebalance_core::reweight::ReweightConfig;
use rebalance_core::synth::{generate, SynthConfig};
use rebalance_core::Execution;

fn distance(e: &Engine, code: &str) -> (f64, f64) {
    let s = e.stats(None, true).unwrap();
    let r = s.dimensions.iter().find(|r| r.code == code).unwrap();
    (r.distance_unweighted.unwrap(), r.distance_weighted.unwrap())
}

#[test]
fn shifted_dimension_is_restored() {
    let cfg = SynthConfig::default();
    let corpus = generate(&cfg);
    for exec in [Execution::Parallel, Execution::Sequential] {
        let mut e = Engine::new(corpus.dataset("synth").unwrap(), None).with_execution(exec);
        let d = e.derive_cohort(ROOT_COHORT, corpus.filter()).unwrap();
        e.set_focus(Some(&d.included)).unwrap();
        let before = e.stats(None, false).unwrap().aggregate.unwrap();

        e.assess(ReweightConfig::new(vec![cfg.target.clone()], 1.0)).unwrap();
        let t = Instant::now();
        e.apply(None).unwrap();
        let elapsed = t.elapsed();
        eprintln!("{exec:?}: apply + full recompute {elapsed:?}");

        let (u, w) = distance(&e, &cfg.target);
        assert!(u > 0.1 && w <= 1e-6, "{u} -> {w}");
        let (cu, cw) = distance(&e, &cfg.confounder);
        assert!(cw < cu, "{cu} -> {cw}");
        let after = e.stats(None, true).unwrap().aggregate.unwrap();
        assert!(after < before, "{before} -> {after}");
    }
}
