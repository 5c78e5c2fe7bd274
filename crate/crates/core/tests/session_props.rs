use powerkit_core::design::{SolveTarget, Tails, TestKind};
use powerkit_core::params::{ParamKey, ParamValue};
use powerkit_core::select::{Assumption, Comparison, Outcome, Pairing};
use powerkit_core::session::{
    apply, parse_command, replay, Assignment, Command, DescriptorPatch, ReplyStatus, SessionState,
};
use proptest::prelude::*;
use proptest::sample::select;

fn patch() -> impl Strategy<Value = DescriptorPatch> {
    (
        proptest::option::of(select(vec![
            Outcome::Continuous,
            Outcome::Binary,
            Outcome::TimeToEvent,
            Outcome::Correlation,
        ])),
        proptest::option::of(1u32..6),
        proptest::option::of(select(vec![Pairing::Independent, Pairing::Paired])),
        proptest::option::of(select(vec![Comparison::VsConstant, Comparison::BetweenGroups])),
        proptest::option::of(select(vec![Assumption::Parametric, Assumption::Nonparametric, Assumption::Unspecified])),
        proptest::option::of(any::<bool>()),
    )
        .prop_map(|(outcome, n_groups, pairing, comparison, distribution_assumption, covariate_adjusted)| {
            DescriptorPatch { outcome, n_groups, pairing, comparison, distribution_assumption, covariate_adjusted }
        })
}

/// Plausible values per key so that a good share of sessions reach a solve.
fn value_for(key: ParamKey) -> BoxedStrategy<ParamValue> {
    let num = |s: BoxedStrategy<f64>| s.prop_map(ParamValue::Number).boxed();
    match key {
        ParamKey::Tails => select(vec![ParamValue::Tails(Tails::One), ParamValue::Tails(Tails::Two)]).boxed(),
        ParamKey::K | ParamKey::Df => num((1u32..6).prop_map(f64::from).boxed()),
        ParamKey::Delta => num(prop_oneof![Just(0.5), Just(-0.3), 0.1..2.0f64].boxed()),
        ParamKey::Sd | ParamKey::Sigma | ParamKey::Ratio | ParamKey::RatioK => {
            num(prop_oneof![Just(1.0), 0.5..3.0f64].boxed())
        }
        ParamKey::Hr => num(prop_oneof![Just(2.0), Just(0.7), 0.4..2.5f64].boxed()),
        ParamKey::Power => num(prop_oneof![Just(0.8), Just(0.9), 0.5..0.99f64].boxed()),
        ParamKey::Alpha => num(prop_oneof![Just(0.05), 0.01..0.1f64].boxed()),
        ParamKey::Are => num(select(vec![0.864, 1.0, 1.5]).boxed()),
        _ => num(prop_oneof![Just(0.18), Just(0.14), 0.02..0.98f64].boxed()),
    }
}

fn assignment() -> impl Strategy<Value = Assignment> {
    prop_oneof![
        8 => select(ParamKey::ALL.to_vec()).prop_flat_map(|key| value_for(key).prop_map(move |value| Assignment::Param { key, value })),
        1 => (0.01..0.2f64).prop_map(|amount| Assignment::RiskReduction { amount }),
        1 => (0.01..0.2f64).prop_map(|amount| Assignment::RiskIncrease { amount }),
    ]
}

fn command() -> impl Strategy<Value = Command> {
    prop_oneof![
        2 => patch().prop_filter("describe needs a field", |p| *p != DescriptorPatch::default()).prop_map(Command::Describe),
        2 => select(TestKind::ALL.to_vec()).prop_map(|test| Command::Choose { test }),
        4 => proptest::collection::vec(assignment(), 1..5).prop_map(|assignments| Command::Set { assignments }),
        1 => proptest::collection::vec(select(ParamKey::ALL.to_vec()), 1..3).prop_map(|keys| Command::Unset { keys }),
        3 => (select(vec![SolveTarget::SampleSize, SolveTarget::Power, SolveTarget::Effect]), proptest::option::of(2u64..500))
            .prop_map(|(target, at)| Command::Solve { target, at }),
        1 => proptest::collection::vec(assignment(), 1..3).prop_map(|assignments| Command::Whatif { assignments }),
        1 => Just(Command::Explain),
        1 => Just(Command::Export),
    ]
}

fn run(commands: &[Command]) -> SessionState {
    let mut state = SessionState::new("s-prop", 1_000);
    for (i, cmd) in commands.iter().enumerate() {
        state = apply(&state, cmd, 1_000 + 7 * i as u64).0;
    }
    state
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 500, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn replay_reproduces_final_state(commands in proptest::collection::vec(command(), 0..25)) {
        let state = run(&commands);
        let rebuilt = replay(&state.id, state.created, &state.history);
        prop_assert_eq!(&rebuilt, &state);
        prop_assert_eq!(state.history.len(), commands.len());
    }

    #[test]
    fn results_never_carry_pending_inputs(commands in proptest::collection::vec(command(), 0..25)) {
        let state = run(&commands);
        for entry in &state.history {
            if entry.reply.result.is_some() {
                prop_assert!(entry.reply.pending.is_empty(), "{:?}", entry.reply);
                prop_assert_eq!(entry.reply.status, ReplyStatus::Ok);
            }
        }
    }

    #[test]
    fn pretty_print_reparses(cmd in command()) {
        let text = cmd.to_string();
        let back = parse_command(&text).map_err(|e| TestCaseError::fail(format!("{text:?}: {e:?}")))?;
        prop_assert_eq!(back, cmd);
    }

    #[test]
    fn percent_and_decimal_inputs_agree(whole in 1u32..100, frac in 0u32..10, key in select(vec!["p0", "p1", "pE", "pC", "psi"])) {
        let percent = format!("set {key} {whole}.{frac}%");
        let decimal = format!("set {key} {:.3}", (whole * 10 + frac) as f64 / 1000.0);
        let setup = |text: &str| {
            let chosen = match key {
                "p0" | "p1" => TestKind::TwoProportionsZ,
                "psi" => TestKind::CoxPh,
                _ => TestKind::LogRank,
            };
            let s = SessionState::new("pct", 0);
            let s = apply(&s, &Command::Choose { test: chosen }, 1).0;
            apply(&s, &parse_command(text).unwrap(), 2).0
        };
        let (a, b) = (setup(&percent), setup(&decimal));
        prop_assert_eq!(&a.known_params, &b.known_params);
        prop_assert_eq!(a, b);
    }
}

#[test]
fn tails_values_round_trip() {
    for t in [Tails::One, Tails::Two] {
        let cmd =
            Command::Set { assignments: vec![Assignment::Param { key: ParamKey::Tails, value: ParamValue::Tails(t) }] };
        assert_eq!(parse_command(&cmd.to_string()).unwrap(), cmd);
    }
}
