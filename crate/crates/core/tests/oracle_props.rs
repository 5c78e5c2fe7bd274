use powerkit_core::design::{Allocation, Design, MeanDesign, ProportionDesign, SurvivalDesign, TestKind, TestSpec};
use powerkit_core::oracle::{
    censoring_horizon, event_probability, simulate_power, SimPlan, Simulator, Tally, BATCH_SIZE,
};
use proptest::prelude::*;

fn two_prop() -> TestSpec {
    TestSpec::new(TestKind::TwoProportionsZ, Design::Proportion(ProportionDesign { p0: 0.3, p1: 0.4, ratio: 1.0 }))
        .unwrap()
}

#[test]
fn fixed_seed_gives_identical_estimates() {
    let plan = SimPlan::new(two_prop(), Allocation(vec![120, 120]), 9_000, 77);
    assert_eq!(simulate_power(&plan).unwrap(), simulate_power(&plan).unwrap());
}

#[test]
fn partial_last_batch_is_counted() {
    let plan = SimPlan::new(two_prop(), Allocation(vec![50, 50]), 2 * BATCH_SIZE + 17, 5);
    assert_eq!(plan.batches(), 3);
    assert_eq!(simulate_power(&plan).unwrap().replications, 2 * BATCH_SIZE + 17);
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 12, failure_persistence: None, ..ProptestConfig::default() })]

    /// Any assignment of batches to workers and any merge order gives the same tally.
    #[test]
    fn tally_independent_of_batch_order(seed in any::<u64>(), workers in 1usize..6, reps in 1u64..12_000) {
        let spec = TestSpec::new(TestKind::TwoSampleT, Design::Mean(MeanDesign::new(0.4, 1.0))).unwrap();
        let plan = SimPlan::new(spec, Allocation(vec![20, 20]), reps, seed);
        let sim = Simulator::new(&plan.spec, &plan.allocation).unwrap();
        let batches: Vec<Tally> = (0..plan.batches()).map(|b| sim.run_batch(seed, b, plan.batch_len(b))).collect();
        let serial = batches.iter().fold(Tally::default(), |acc, t| acc.merge(t));
        let mut per_worker = vec![Tally::default(); workers];
        for (i, t) in batches.iter().enumerate().rev() {
            let w = i % workers;
            per_worker[w] = std::mem::take(&mut per_worker[w]).merge(t);
        }
        let parallel = per_worker.iter().rev().fold(Tally::default(), |acc, t| acc.merge(t));
        prop_assert_eq!(&serial, &parallel);
        let est = serial.estimate(seed);
        prop_assert_eq!(est, simulate_power(&plan).unwrap());
    }

    #[test]
    fn standard_error_formula(rejections in 0u64..5000, extra in 0u64..5000) {
        let r = rejections + extra + 1;
        let t = Tally { replications: r, rejections, ..Tally::default() };
        let e = t.estimate(0);
        let p = rejections as f64 / r as f64;
        prop_assert_eq!(e.p_hat, p);
        prop_assert_eq!(e.mc_standard_error, (p * (1.0 - p) / r as f64).sqrt());
        prop_assert!((0.0..=1.0).contains(&e.p_hat));
    }
}

#[test]
fn survival_event_fractions_match_design() {
    for (hr, p_c) in [(1.3, 0.5), (0.7, 0.8), (2.0, 0.3)] {
        let p_e = event_probability(hr * censoring_horizon(p_c));
        let spec =
            TestSpec::new(TestKind::LogRank, Design::Survival(SurvivalDesign { hr, p_e, p_c, ratio_k: 1.0 })).unwrap();
        let n = 300;
        let reps = 4_000;
        let est = simulate_power(&SimPlan::new(spec, Allocation(vec![n, n]), reps, 11)).unwrap();
        let fractions = est.event_fractions.unwrap();
        for (got, want) in fractions.iter().zip([p_e, p_c]) {
            let se = (want * (1.0 - want) / (n * reps) as f64).sqrt();
            assert!((got - want).abs() <= 3.0 * se, "hr {hr}: {got} vs {want} (se {se})");
        }
    }
}
