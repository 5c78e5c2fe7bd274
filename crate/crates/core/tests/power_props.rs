mod common;

use common::{goal, spec_of};
use powerkit_core::design::{Allocation, AnovaDesign, Design, MeanDesign, SurvivalDesign, Tails, TestKind, TestSpec};
use powerkit_core::dist::Probability;
use powerkit_core::oracle::null_spec;
use powerkit_core::power::{allocation_for, index_of, min_index, power_at, power_of, solve_n, solve_power};
use proptest::prelude::*;
use proptest::test_runner::{Config, TestCaseError, TestRunner};

const DRAWS_PER_TEST: u32 = 1000;
/// Slack for summation noise in the series CDFs.
const NOISE: f64 = 1e-12;

fn run_per_kind<S, F>(label: &str, strategy: impl Fn(TestKind) -> S, check: F)
where
    S: Strategy,
    F: Fn(TestKind, S::Value) -> Result<(), TestCaseError>,
{
    for kind in TestKind::ALL {
        let mut runner =
            TestRunner::new(Config { cases: DRAWS_PER_TEST, failure_persistence: None, ..Config::default() });
        if let Err(e) = runner.run(&strategy(kind), |v| check(kind, v)) {
            panic!("{label} failed for {kind}: {e}");
        }
    }
}

/// Same design with the effect pushed further from the null by `scale > 1`.
fn stronger(spec: &TestSpec, scale: f64) -> TestSpec {
    let design = match spec.design {
        Design::Mean(m) => Design::Mean(MeanDesign { delta: m.delta * scale, ..m }),
        Design::Anova(a) => Design::Anova(AnovaDesign { f: a.f * scale, ..a }),
        Design::Proportion(mut p) => {
            p.p1 = (p.p0 + (p.p1 - p.p0) * scale).clamp(0.001, 0.999);
            Design::Proportion(p)
        }
        Design::ChiSquare(mut c) => {
            c.w *= scale;
            Design::ChiSquare(c)
        }
        Design::Correlation(mut c) => {
            c.r = (c.r * scale).clamp(-0.99, 0.99);
            Design::Correlation(c)
        }
        Design::Survival(s) => Design::Survival(SurvivalDesign { hr: s.hr.powf(scale), ..s }),
        Design::Cox(mut c) => {
            c.hr = c.hr.powf(scale);
            Design::Cox(c)
        }
    };
    spec.with_design(design).unwrap()
}

/// Lower end of the proportion z formulas' working range: every arm has at
/// least five expected successes and failures under p0 and p1, and power is
/// at least 1/2. Below it, pooling can make one extra subject lower the
/// nominal power slightly.
fn approx_floor(spec: &TestSpec) -> u64 {
    let Design::Proportion(p) = spec.design else { return min_index(spec) };
    let rare = [p.p0, p.p1].into_iter().map(|q| q.min(1.0 - q)).fold(1.0, f64::min);
    let mut n = min_index(spec).max((5.0 / rare).ceil() as u64);
    while allocation_for(spec, n).smallest() as f64 * rare < 5.0 {
        n += 1;
    }
    let half = solve_n(spec, Probability::new(0.5).unwrap()).unwrap();
    n.max(index_of(spec, &Allocation(half.n_per_arm)))
}

#[test]
fn power_nondecreasing_in_each_arm() {
    run_per_kind(
        "arm monotonicity",
        |k| (spec_of(k), 0u64..400),
        |_, (spec, extra)| {
            let n = approx_floor(&spec) + extra;
            let base = allocation_for(&spec, n);
            let p = power_of(&spec, &base).unwrap();
            for arm in 0..base.arms().len() {
                let mut bigger = base.clone();
                bigger.0[arm] += 1;
                let q = power_of(&spec, &bigger).unwrap();
                prop_assert!(q >= p - NOISE, "arm {arm}: {q} < {p} at {:?}", base);
            }
            Ok(())
        },
    );
}

#[test]
fn power_nondecreasing_in_effect() {
    run_per_kind(
        "effect monotonicity",
        |k| (spec_of(k), 0u64..400, 1.0..3.0f64),
        |_, (spec, extra, scale)| {
            let strong = stronger(&spec, scale);
            let n = approx_floor(&spec).max(approx_floor(&strong)) + extra;
            let p = power_at(&spec, n).unwrap();
            let q = power_at(&strong, n).unwrap();
            prop_assert!(q >= p - NOISE, "{q} < {p}");
            Ok(())
        },
    );
}

#[test]
fn power_nondecreasing_in_alpha() {
    run_per_kind(
        "alpha monotonicity",
        |k| (spec_of(k), 0u64..400, 1.0..2.0f64),
        |_, (spec, extra, scale)| {
            let n = min_index(&spec) + extra;
            let p = power_at(&spec, n).unwrap();
            let looser = spec.with_alpha((spec.alpha() * scale).min(0.5)).unwrap();
            let q = power_at(&looser, n).unwrap();
            prop_assert!(q >= p - NOISE, "{q} < {p}");
            Ok(())
        },
    );
}

#[test]
fn solve_n_is_minimal() {
    run_per_kind(
        "minimality",
        |k| (spec_of(k), goal()),
        |_, (spec, goal)| {
            let r = solve_n(&spec, Probability::new(goal).unwrap()).unwrap();
            let alloc = Allocation(r.n_per_arm.clone());
            let n = index_of(&spec, &alloc);
            prop_assert_eq!(&allocation_for(&spec, n), &alloc);
            let p = power_at(&spec, n).unwrap();
            prop_assert!(p >= goal, "power({n}) = {p} < {goal}");
            prop_assert_eq!(p, r.achieved_power);
            if n > min_index(&spec) {
                let below = power_at(&spec, n - 1).unwrap();
                prop_assert!(below < goal, "power({}) = {below} already reaches {goal}", n - 1);
            }
            Ok(())
        },
    );
}

#[test]
fn null_effect_power_is_alpha() {
    let families =
        TestKind::ALL.into_iter().filter(|k| !matches!(k, TestKind::LogRank | TestKind::CoxPh)).collect::<Vec<_>>();
    for kind in families {
        let mut runner = TestRunner::new(Config { cases: 300, failure_persistence: None, ..Config::default() });
        runner
            .run(&(spec_of(kind), 0u64..500), |(spec, extra)| {
                let spec = null_spec(&spec.with_tails(Tails::Two).unwrap());
                let n = min_index(&spec) + extra;
                let p = power_at(&spec, n).unwrap();
                prop_assert!((p - spec.alpha()).abs() < 1e-6, "{kind}: {p} vs {}", spec.alpha());
                Ok(())
            })
            .unwrap();
    }
}

#[test]
fn survival_power_tends_to_alpha_as_hr_tends_to_one() {
    let mut runner = TestRunner::new(Config { cases: 300, failure_persistence: None, ..Config::default() });
    let kinds = (prop_oneof![spec_of(TestKind::LogRank), spec_of(TestKind::CoxPh)], 1u64..5000);
    runner
        .run(&kinds, |(spec, n)| {
            let design = match spec.design {
                Design::Survival(mut s) => {
                    s.hr = 1.0 + 1e-9;
                    Design::Survival(s)
                }
                Design::Cox(mut c) => {
                    c.hr = 1.0 + 1e-9;
                    Design::Cox(c)
                }
                _ => unreachable!(),
            };
            let spec = spec.with_tails(Tails::Two).unwrap().with_design(design).unwrap();
            let p = power_at(&spec, n).unwrap();
            prop_assert!((p - spec.alpha()).abs() < 1e-6, "{p} vs {}", spec.alpha());
            Ok(())
        })
        .unwrap();
}

proptest! {
    #![proptest_config(Config { cases: 1000, failure_persistence: None, ..Config::default() })]

    #[test]
    fn paired_matches_one_sample_bit_for_bit(spec in spec_of(TestKind::OneSampleT), goal in goal(), n in 2u64..2000) {
        let paired = TestSpec { kind: TestKind::PairedT, ..spec };
        let g = Probability::new(goal).unwrap();
        let (a, b) = (solve_n(&spec, g).unwrap(), solve_n(&paired, g).unwrap());
        prop_assert_eq!(a.n_per_arm, b.n_per_arm);
        prop_assert_eq!(a.achieved_power.to_bits(), b.achieved_power.to_bits());
        let (a, b) = (solve_power(&spec, n).unwrap(), solve_power(&paired, n).unwrap());
        prop_assert_eq!(a.achieved_power.to_bits(), b.achieved_power.to_bits());
    }

    #[test]
    fn two_group_anova_matches_two_sided_t(d in 0.0..2.5f64, alpha in 0.01..0.1f64, n in 2u64..3000) {
        let t = TestSpec::new(TestKind::TwoSampleT, Design::Mean(MeanDesign::new(d, 1.0))).unwrap().with_alpha(alpha).unwrap();
        let f = TestSpec::new(TestKind::OneWayAnova, Design::Anova(AnovaDesign { k: 2, f: d / 2.0 })).unwrap().with_alpha(alpha).unwrap();
        let (pt, pf) = (power_at(&t, n).unwrap(), power_at(&f, n).unwrap());
        prop_assert!((pt - pf).abs() < 1e-9, "t {pt} vs F {pf}");
    }

    #[test]
    fn t_family_scale_invariance(
        spec in prop_oneof![spec_of(TestKind::OneSampleT), spec_of(TestKind::PairedT), spec_of(TestKind::TwoSampleT)],
        goal in goal(),
        exp in -6i32..7,
        c in 0.01..100.0f64,
    ) {
        let scaled = |factor: f64| {
            let Design::Mean(m) = spec.design else { unreachable!() };
            spec.with_design(Design::Mean(MeanDesign { delta: m.delta * factor, sd: m.sd * factor, ..m })).unwrap()
        };
        let g = Probability::new(goal).unwrap();
        let base = solve_n(&spec, g).unwrap();
        // powers of two scale without rounding, so every output is identical
        let exact = solve_n(&scaled(2f64.powi(exp)), g).unwrap();
        prop_assert_eq!(&base, &exact);
        let any = solve_n(&scaled(c), g).unwrap();
        prop_assert_eq!(&base.n_per_arm, &any.n_per_arm);
        prop_assert!((base.achieved_power - any.achieved_power).abs() < 1e-12);
    }
}
