#![allow(dead_code)]

use powerkit_core::design::{
    AnovaDesign, ChiSquareDesign, CorrelationDesign, Covariate, CoxDesign, Design, MeanDesign, ProportionDesign,
    SurvivalDesign, Tails, TestKind, TestSpec,
};
use proptest::prelude::*;

pub const RANK_ARES: [f64; 4] = [0.864, 3.0 / core::f64::consts::PI, 1.0, 1.5];

fn signed(lo: f64, hi: f64) -> impl Strategy<Value = f64> {
    (lo..hi, any::<bool>()).prop_map(|(v, neg)| if neg { -v } else { v })
}

fn tails_for(kind: TestKind) -> BoxedStrategy<Tails> {
    if kind.has_tails() {
        prop_oneof![Just(Tails::Two), Just(Tails::One)].boxed()
    } else {
        Just(Tails::Two).boxed()
    }
}

fn design_for(kind: TestKind) -> BoxedStrategy<Design> {
    use TestKind::*;
    match kind {
        OneSampleT | PairedT | PairedWilcoxon => (signed(0.15, 2.0), 0.2..5.0f64)
            .prop_map(|(d, sd)| Design::Mean(MeanDesign { delta: d * sd, sd, ratio: 1.0 }))
            .boxed(),
        TwoSampleT | MannWhitney => (signed(0.15, 2.0), 0.2..5.0f64, prop_oneof![Just(1.0), 0.5..3.0f64])
            .prop_map(|(d, sd, ratio)| Design::Mean(MeanDesign { delta: d * sd, sd, ratio }))
            .boxed(),
        OneWayAnova | KruskalWallis => {
            (2u32..7, 0.1..1.0f64).prop_map(|(k, f)| Design::Anova(AnovaDesign { k, f })).boxed()
        }
        OneProportionZ | TwoProportionsZ => (0.05..0.95f64, signed(0.02, 0.3), prop_oneof![Just(1.0), 0.5..3.0f64])
            .prop_map(move |(p0, diff, ratio)| {
                let p1 = (p0 + diff).clamp(0.01, 0.99);
                let p1 = if (p1 - p0).abs() < 0.01 { (p0 - diff).clamp(0.01, 0.99) } else { p1 };
                let ratio = if kind == TwoProportionsZ { ratio } else { 1.0 };
                Design::Proportion(ProportionDesign { p0, p1, ratio })
            })
            .boxed(),
        ChiSquare => (0.05..0.8f64, 1u32..9).prop_map(|(w, df)| Design::ChiSquare(ChiSquareDesign { w, df })).boxed(),
        Correlation => signed(0.08, 0.8).prop_map(|r| Design::Correlation(CorrelationDesign { r })).boxed(),
        LogRank => {
            (prop_oneof![0.4..0.9f64, 1.1..2.5f64], 0.1..1.0f64, 0.1..1.0f64, prop_oneof![Just(1.0), 0.5..3.0f64])
                .prop_map(|(hr, p_e, p_c, ratio_k)| Design::Survival(SurvivalDesign { hr, p_e, p_c, ratio_k }))
                .boxed()
        }
        CoxPh => (
            prop_oneof![0.4..0.9f64, 1.1..2.5f64],
            prop_oneof![
                (0.1..0.9f64).prop_map(|prevalence| Covariate::Binary { prevalence }),
                (0.2..3.0f64).prop_map(|sigma| Covariate::Continuous { sigma }),
            ],
            0.1..1.0f64,
            prop_oneof![Just(0.0), 0.0..0.8f64],
        )
            .prop_map(|(hr, covariate, psi, rho2)| Design::Cox(CoxDesign { hr, covariate, psi, rho2 }))
            .boxed(),
    }
}

/// Valid specs of one kind with moderate effects.
pub fn spec_of(kind: TestKind) -> impl Strategy<Value = TestSpec> {
    (design_for(kind), tails_for(kind), 0.01..0.1f64, proptest::sample::select(RANK_ARES.to_vec())).prop_map(
        move |(design, tails, alpha, are)| {
            let spec = TestSpec::new(kind, design).unwrap().with_alpha(alpha).unwrap().with_tails(tails).unwrap();
            if kind.is_nonparametric() {
                spec.with_are(are).unwrap()
            } else {
                spec
            }
        },
    )
}

pub fn any_spec() -> impl Strategy<Value = TestSpec> {
    proptest::sample::select(TestKind::ALL.to_vec()).prop_flat_map(spec_of)
}

pub fn goal() -> impl Strategy<Value = f64> {
    0.5..0.99f64
}
