use powerkit_core::dist::{cdf, central_cdf, noncentral_cdf, quantile, DistKind, DistParams};
use proptest::prelude::*;

const KINDS: [DistKind; 3] = [DistKind::T, DistKind::F, DistKind::ChiSquare];

fn params(kind: DistKind) -> BoxedStrategy<DistParams> {
    match kind {
        DistKind::T => (0.5..300.0f64, -12.0..12.0f64).prop_map(|(df, ncp)| DistParams::t(df, ncp)).boxed(),
        DistKind::F => {
            (0.5..40.0f64, 0.5..400.0f64, 0.0..60.0f64).prop_map(|(a, b, ncp)| DistParams::f(a, b, ncp)).boxed()
        }
        DistKind::ChiSquare => (0.5..80.0f64, 0.0..80.0f64).prop_map(|(df, ncp)| DistParams::chisq(df, ncp)).boxed(),
    }
}

fn central(kind: DistKind) -> BoxedStrategy<DistParams> {
    params(kind).prop_map(|p| DistParams { ncp: 0.0, ..p }).boxed()
}

fn xs(kind: DistKind) -> BoxedStrategy<Vec<f64>> {
    let range = match kind {
        DistKind::T => -40.0..40.0f64,
        _ => 0.0..200.0f64,
    };
    proptest::collection::vec(range, 100)
        .prop_map(|mut v| {
            v.sort_by(f64::total_cmp);
            v
        })
        .boxed()
}

fn kind_and<S: Strategy + 'static>(f: impl Fn(DistKind) -> S + 'static) -> impl Strategy<Value = (DistKind, S::Value)>
where
    S::Value: Clone,
{
    proptest::sample::select(KINDS.to_vec()).prop_flat_map(move |k| f(k).prop_map(move |v| (k, v)))
}

proptest! {
    // 100 points per case and at least 100 cases per kind: >= 1e4 points per kind.
    #![proptest_config(ProptestConfig { cases: 400, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn cdf_nondecreasing_and_in_unit_interval((kind, (p, xs)) in kind_and(|k| (params(k), xs(k)))) {
        let mut prev = 0.0;
        for x in xs {
            let c = cdf(kind, x, &p).unwrap();
            prop_assert!((0.0..=1.0).contains(&c), "{kind:?} {p:?} cdf({x}) = {c}");
            prop_assert!(c >= prev - 1e-12, "{kind:?} {p:?}: cdf({x}) = {c} < {prev}");
            prev = c;
        }
    }

    #[test]
    fn zero_noncentrality_is_central((kind, (p, xs)) in kind_and(|k| (central(k), xs(k)))) {
        for x in xs {
            let a = noncentral_cdf(kind, x, &p).unwrap();
            let b = central_cdf(kind, x, &p).unwrap();
            prop_assert!((a - b).abs() < 1e-10, "{kind:?} {p:?} at {x}: {a} vs {b}");
        }
    }

    #[test]
    fn f_one_m_is_squared_t(t in 0.0..30.0f64, m in 0.5..500.0f64) {
        let f = cdf(DistKind::F, t * t, &DistParams::f(1.0, m, 0.0)).unwrap();
        let two_sided = 2.0 * cdf(DistKind::T, t, &DistParams::t(m, 0.0)).unwrap() - 1.0;
        prop_assert!((f - two_sided).abs() < 1e-10, "F {f} vs |T| {two_sided}");
    }
}

proptest! {
    // every percentile from 1 to 99 per draw
    #![proptest_config(ProptestConfig { cases: 150, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn quantile_inverts_cdf((kind, p) in kind_and(params)) {
        for i in 1..100 {
            let target = i as f64 / 100.0;
            let x = quantile(kind, target, &p).unwrap();
            let back = cdf(kind, x, &p).unwrap();
            prop_assert!((back - target).abs() < 1e-9, "{kind:?} {p:?}: cdf(quantile({target})) = {back}");
        }
    }
}
