//! Power functions and solvers for sample size, power and minimal detectable effect.
//!
//! Every test is indexed by a single integer `n` (see [`allocation_for`]);
//! power is nondecreasing in that index, so minimal sample sizes are found by
//! a doubling bracket followed by integer bisection. Log-rank and Cox
//! designs also have closed forms ([`logrank_n`], [`cox_ph_n`]).

use alloc::format;
use alloc::string::String;
use alloc::vec;

use crate::design::{
    Allocation, Design, MeanDesign, SolveRequest, SolveResult, SolveTarget, SurvivalDesign, Tails, TestKind, TestSpec,
};
use crate::dist::{noncentral_cdf, normal_cdf, normal_quantile, quantile, DistKind, DistParams, Probability};
use crate::error::{Error, Result};

/// Largest design index the sample-size search will try.
pub const MAX_INDEX: u64 = 1 << 40;

/// Effect tolerance for [`solve_effect`], relative to the effect's scale.
const EFFECT_TOL: f64 = 1e-12;

fn z_crit(alpha: f64, tails: Tails) -> Result<f64> {
    match tails {
        Tails::Two => normal_quantile(1.0 - alpha / 2.0),
        Tails::One => normal_quantile(1.0 - alpha),
    }
}

/// Power of a z statistic with mean shift `shift >= 0` (in SE units of the
/// alternative) and a critical value scaled by `null_scale`.
fn z_power(shift: f64, null_scale: f64, alpha: f64, tails: Tails) -> Result<f64> {
    let z = z_crit(alpha, tails)?;
    let upper = normal_cdf(shift - z * null_scale);
    Ok(match tails {
        Tails::Two => upper + normal_cdf(-shift - z * null_scale),
        Tails::One => upper,
    })
}

/// Exact power of a t test with `df` degrees of freedom and noncentrality `ncp`.
fn t_power(ncp: f64, df: f64, alpha: f64, tails: Tails) -> Result<f64> {
    let ncp = ncp.abs();
    let params = DistParams::t(df, ncp);
    match tails {
        Tails::Two => {
            let crit = quantile(DistKind::T, 1.0 - alpha / 2.0, &DistParams::t(df, 0.0))?;
            let upper = 1.0 - noncentral_cdf(DistKind::T, crit, &params)?;
            let lower = noncentral_cdf(DistKind::T, -crit, &params)?;
            Ok(upper + lower)
        }
        Tails::One => {
            let crit = quantile(DistKind::T, 1.0 - alpha, &DistParams::t(df, 0.0))?;
            Ok(1.0 - noncentral_cdf(DistKind::T, crit, &params)?)
        }
    }
}

fn f_power(ncp: f64, df1: f64, df2: f64, alpha: f64) -> Result<f64> {
    let crit = quantile(DistKind::F, 1.0 - alpha, &DistParams::f(df1, df2, 0.0))?;
    Ok(1.0 - noncentral_cdf(DistKind::F, crit, &DistParams::f(df1, df2, ncp))?)
}

fn chisq_power(ncp: f64, df: f64, alpha: f64) -> Result<f64> {
    let crit = quantile(DistKind::ChiSquare, 1.0 - alpha, &DistParams::chisq(df, 0.0))?;
    Ok(1.0 - noncentral_cdf(DistKind::ChiSquare, crit, &DistParams::chisq(df, ncp))?)
}

fn ceil_ratio(ratio: f64, n: u64) -> u64 {
    // guard against 1.0000000000000002 * n style round-up
    libm::ceil(ratio * n as f64 - 1e-9).max(1.0) as u64
}

/// Deflated parent index for rank tests.
fn effective_index(are: f64, n: u64) -> u64 {
    libm::floor(are * n as f64 + 1e-9) as u64
}

/// Maps the design index to arms.
pub fn allocation_for(spec: &TestSpec, n: u64) -> Allocation {
    match (spec.kind, spec.design) {
        (TestKind::TwoSampleT | TestKind::MannWhitney, Design::Mean(m)) => Allocation(vec![n, ceil_ratio(m.ratio, n)]),
        (TestKind::TwoProportionsZ, Design::Proportion(p)) => Allocation(vec![n, ceil_ratio(p.ratio, n)]),
        (TestKind::OneWayAnova | TestKind::KruskalWallis, Design::Anova(a)) => Allocation(vec![n; a.k as usize]),
        (TestKind::LogRank, Design::Survival(s)) => Allocation(vec![ceil_ratio(s.ratio_k, n), n]),
        _ => Allocation::single(n),
    }
}

/// Design index of an allocation produced by [`allocation_for`].
pub fn index_of(spec: &TestSpec, alloc: &Allocation) -> u64 {
    match spec.kind {
        TestKind::LogRank => alloc.arms().get(1).copied().unwrap_or(0),
        _ => alloc.arms().first().copied().unwrap_or(0),
    }
}

fn per_arm_minimum(kind: TestKind) -> u64 {
    match kind {
        TestKind::OneSampleT | TestKind::PairedT | TestKind::TwoSampleT | TestKind::OneWayAnova => 2,
        TestKind::Correlation => 4,
        _ => 1,
    }
}

/// Smallest admissible design index.
pub fn min_index(spec: &TestSpec) -> u64 {
    if let Some(parent) = spec.kind.parametric_parent() {
        let parent_spec = TestSpec { kind: parent, ..*spec };
        let parent_min = min_index(&parent_spec);
        return libm::ceil(parent_min as f64 / spec.are - 1e-9) as u64;
    }
    let floor = per_arm_minimum(spec.kind);
    let mut n = floor;
    while allocation_for(spec, n).smallest() < floor {
        n += 1;
    }
    n
}

fn check_allocation(spec: &TestSpec, alloc: &Allocation) -> Result<()> {
    let expected = match spec.design {
        Design::Anova(a) => a.k as usize,
        _ => allocation_for(spec, 1).arms().len(),
    };
    if alloc.arms().len() != expected {
        return Err(Error::InvalidSpec(format!("{} expects {expected} arm(s), got {}", spec.kind, alloc.arms().len())));
    }
    let min = if spec.kind.is_nonparametric() { min_index(spec) } else { per_arm_minimum(spec.kind) };
    let smallest = if spec.kind.is_nonparametric() { index_of(spec, alloc) } else { alloc.smallest() };
    if smallest < min {
        return Err(Error::BelowMinimum { n: smallest, min });
    }
    Ok(())
}

/// Power of `spec` at the given allocation.
pub fn power_of(spec: &TestSpec, alloc: &Allocation) -> Result<f64> {
    spec.validate()?;
    check_allocation(spec, alloc)?;
    let alpha = spec.alpha();
    let tails = spec.tails;
    let arms = alloc.arms();
    let p = match (spec.kind, spec.design) {
        (TestKind::OneSampleT | TestKind::PairedT, Design::Mean(m)) => {
            let n = arms[0] as f64;
            t_power(m.standardized() * libm::sqrt(n), n - 1.0, alpha, tails)?
        }
        (TestKind::TwoSampleT, Design::Mean(m)) => {
            let (n1, n2) = (arms[0] as f64, arms[1] as f64);
            let ncp = m.standardized() * libm::sqrt(n1 * n2 / (n1 + n2));
            t_power(ncp, n1 + n2 - 2.0, alpha, tails)?
        }
        (TestKind::OneWayAnova, Design::Anova(a)) => {
            let total = alloc.total() as f64;
            let k = a.k as f64;
            f_power(a.f * a.f * total, k - 1.0, total - k, alpha)?
        }
        (TestKind::OneProportionZ, Design::Proportion(d)) => {
            let n = arms[0] as f64;
            let diff = (d.p1 - d.p0).abs();
            let sd1 = libm::sqrt(d.p1 * (1.0 - d.p1));
            let sd0 = libm::sqrt(d.p0 * (1.0 - d.p0));
            z_power(diff * libm::sqrt(n) / sd1, sd0 / sd1, alpha, tails)?
        }
        (TestKind::TwoProportionsZ, Design::Proportion(d)) => {
            let (n1, n2) = (arms[0] as f64, arms[1] as f64);
            let diff = (d.p1 - d.p0).abs();
            let pooled = (n1 * d.p0 + n2 * d.p1) / (n1 + n2);
            let se0 = libm::sqrt(pooled * (1.0 - pooled) * (1.0 / n1 + 1.0 / n2));
            let se1 = libm::sqrt(d.p0 * (1.0 - d.p0) / n1 + d.p1 * (1.0 - d.p1) / n2);
            z_power(diff / se1, se0 / se1, alpha, tails)?
        }
        (TestKind::ChiSquare, Design::ChiSquare(c)) => chisq_power(arms[0] as f64 * c.w * c.w, c.df as f64, alpha)?,
        (TestKind::Correlation, Design::Correlation(c)) => {
            let n = arms[0] as f64;
            z_power(libm::atanh(c.r.abs()) * libm::sqrt(n - 3.0), 1.0, alpha, tails)?
        }
        (TestKind::LogRank, Design::Survival(s)) => {
            let events = arms[0] as f64 * s.p_e + arms[1] as f64 * s.p_c;
            let k = s.ratio_k;
            let shift = libm::sqrt(events * k) * (s.hr - 1.0).abs() / (k * s.hr + 1.0);
            z_power(shift, 1.0, alpha, tails)?
        }
        (TestKind::CoxPh, Design::Cox(c)) => {
            let info = arms[0] as f64 * c.covariate.variance() * c.psi * (1.0 - c.rho2);
            z_power(libm::log(c.hr).abs() * libm::sqrt(info), 1.0, alpha, tails)?
        }
        (kind, _) if kind.is_nonparametric() => {
            let parent = TestSpec { kind: kind.parametric_parent().unwrap_or(kind), ..*spec };
            let eff = effective_index(spec.are, index_of(spec, alloc));
            power_of(&parent, &allocation_for(&parent, eff))?
        }
        (kind, design) => {
            return Err(Error::InvalidSpec(format!("{kind} cannot use {design:?}")));
        }
    };
    Ok(p.clamp(0.0, 1.0))
}

/// Power at design index `n`.
pub fn power_at(spec: &TestSpec, n: u64) -> Result<f64> {
    power_of(spec, &allocation_for(spec, n))
}

/// True when the alternative coincides with the null, so power equals alpha at every n.
pub fn is_null_effect(spec: &TestSpec) -> bool {
    match spec.design {
        Design::Mean(m) => m.delta == 0.0,
        Design::Anova(a) => a.f == 0.0,
        Design::Proportion(p) => p.p0 == p.p1,
        Design::ChiSquare(c) => c.w == 0.0,
        Design::Correlation(c) => c.r == 0.0,
        Design::Survival(s) => s.hr == 1.0,
        Design::Cox(c) => c.hr == 1.0,
    }
}

fn check_goal(spec: &TestSpec, goal: Probability) -> Result<f64> {
    let g = goal.value();
    if !(g > spec.alpha() && g < 1.0) {
        return Err(Error::InvalidSpec(format!("power goal must lie in (alpha, 1) = ({}, 1), got {g}", spec.alpha())));
    }
    if is_null_effect(spec) {
        return Err(Error::Unreachable(format!(
            "{} has a null effect; power equals alpha at every sample size",
            spec.kind
        )));
    }
    Ok(g)
}

/// Identifier of the closed form used for `spec`.
pub fn formula_id(spec: &TestSpec) -> String {
    let base = |kind: TestKind| -> &'static str {
        match kind {
            TestKind::OneSampleT => "noncentral-t/one-sample(df=n-1,ncp=d*sqrt(n))",
            TestKind::PairedT => "noncentral-t/paired-differences(df=n-1,ncp=d*sqrt(n))",
            TestKind::TwoSampleT => "noncentral-t/two-sample-pooled(df=n1+n2-2,ncp=d*sqrt(n1n2/(n1+n2)))",
            TestKind::OneWayAnova => "noncentral-f/cohen-f(ncp=f^2*N)",
            TestKind::OneProportionZ => "normal-approx/one-proportion(null-variance-h0,alt-variance-h1)",
            TestKind::TwoProportionsZ => "normal-approx/two-proportions(pooled-h0,unpooled-h1)",
            TestKind::ChiSquare => "noncentral-chisq/cohen-w(ncp=N*w^2)",
            TestKind::Correlation => "normal-approx/fisher-z(n-3)",
            TestKind::LogRank => "freedman/events-to-subjects",
            TestKind::CoxPh => "schoenfeld-hsieh-lavori/variance-inflation(1-rho2)",
            TestKind::MannWhitney | TestKind::PairedWilcoxon | TestKind::KruskalWallis => "",
        }
    };
    let sided = if spec.kind.has_tails() { format!("+{}-sided", spec.tails.as_str()) } else { String::new() };
    match spec.kind.parametric_parent() {
        Some(parent) => format!("are-deflation({})/{}{sided}", spec.are, base(parent)),
        None => format!("{}{sided}", base(spec.kind)),
    }
}

fn result_at(spec: &TestSpec, target: SolveTarget, alloc: Allocation, goal: Option<f64>) -> Result<SolveResult> {
    let achieved = power_of(spec, &alloc)?;
    let events = match spec.design {
        Design::Survival(s) => {
            Some(libm::ceil(alloc.arms()[0] as f64 * s.p_e + alloc.arms()[1] as f64 * s.p_c - 1e-9) as u64)
        }
        _ => None,
    };
    Ok(SolveResult {
        test: spec.kind,
        target,
        n_total: alloc.total(),
        n_per_arm: alloc.0,
        achieved_power: achieved,
        power_goal: goal,
        events_required: events,
        effect_solved: None,
        formula_id: formula_id(spec),
        alpha: spec.alpha(),
        tails: spec.tails,
    })
}

/// Smallest design index whose power reaches `goal`.
fn search_index(spec: &TestSpec, goal: f64) -> Result<u64> {
    let mut lo = min_index(spec);
    if power_at(spec, lo)? >= goal {
        return Ok(lo);
    }
    let mut hi = lo.max(1) * 2;
    while power_at(spec, hi)? < goal {
        lo = hi;
        hi *= 2;
        if hi > MAX_INDEX {
            return Err(Error::Unreachable(format!("{} does not reach power {goal} below n = {MAX_INDEX}", spec.kind)));
        }
    }
    // invariant: power(lo) < goal <= power(hi)
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if power_at(spec, mid)? >= goal {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

/// Minimal sample size achieving `power_goal`.
pub fn solve_n(spec: &TestSpec, power_goal: Probability) -> Result<SolveResult> {
    spec.validate()?;
    let goal = check_goal(spec, power_goal)?;
    match spec.kind {
        TestKind::LogRank => {
            let Design::Survival(s) = spec.design else {
                return Err(Error::InvalidSpec(format!("log_rank requires a survival design, got {:?}", spec.design)));
            };
            logrank_n(&s, spec.alpha(), spec.tails, goal)
        }
        TestKind::CoxPh => cox_ph_n(spec, goal),
        kind if kind.is_nonparametric() => nonparametric_n(spec, goal),
        _ => {
            let n = search_index(spec, goal)?;
            result_at(spec, SolveTarget::SampleSize, allocation_for(spec, n), Some(goal))
        }
    }
}

/// Power at a fixed design index.
pub fn solve_power(spec: &TestSpec, n: u64) -> Result<SolveResult> {
    spec.validate()?;
    result_at(spec, SolveTarget::Power, allocation_for(spec, n), None)
}

/// Replaces the effect of `spec` by `magnitude` in the direction of the
/// original alternative; returns the spec and the effect in natural units.
fn with_effect(spec: &TestSpec, magnitude: f64) -> Result<(TestSpec, f64)> {
    let design = match spec.design {
        Design::Mean(m) => {
            let sign = if m.delta < 0.0 { -1.0 } else { 1.0 };
            Design::Mean(MeanDesign { delta: sign * magnitude * m.sd, ..m })
        }
        Design::Anova(mut a) => {
            a.f = magnitude;
            Design::Anova(a)
        }
        Design::ChiSquare(mut c) => {
            c.w = magnitude;
            Design::ChiSquare(c)
        }
        Design::Correlation(mut c) => {
            c.r = if c.r < 0.0 { -magnitude } else { magnitude };
            Design::Correlation(c)
        }
        Design::Proportion(mut p) => {
            p.p1 = if p.p1 < p.p0 { p.p0 - magnitude } else { p.p0 + magnitude };
            Design::Proportion(p)
        }
        Design::Survival(mut s) => {
            s.hr = if s.hr < 1.0 { libm::exp(-magnitude) } else { libm::exp(magnitude) };
            Design::Survival(s)
        }
        Design::Cox(mut c) => {
            c.hr = if c.hr < 1.0 { libm::exp(-magnitude) } else { libm::exp(magnitude) };
            Design::Cox(c)
        }
    };
    let natural = match design {
        Design::Mean(m) => m.delta,
        Design::Anova(a) => a.f,
        Design::ChiSquare(c) => c.w,
        Design::Correlation(c) => c.r,
        Design::Proportion(p) => p.p1,
        Design::Survival(s) => s.hr,
        Design::Cox(c) => c.hr,
    };
    Ok((TestSpec { design, ..*spec }, natural))
}

/// Supremum of admissible effect magnitudes (exclusive), if bounded.
fn effect_bound(spec: &TestSpec) -> Option<f64> {
    match spec.design {
        Design::Correlation(_) => Some(1.0),
        Design::Proportion(p) => Some(if p.p1 < p.p0 { p.p0 } else { 1.0 - p.p0 }),
        _ => None,
    }
}

/// Smallest effect magnitude reaching `power_goal` at design index `n`.
pub fn solve_effect(spec: &TestSpec, n: u64, power_goal: Probability) -> Result<SolveResult> {
    spec.validate()?;
    let goal = power_goal.value();
    if !(goal > spec.alpha() && goal < 1.0) {
        return Err(Error::InvalidSpec(format!("power goal must lie in (alpha, 1), got {goal}")));
    }
    let alloc = allocation_for(spec, n);
    check_allocation(spec, &alloc)?;
    let power_with = |magnitude: f64| -> Result<f64> {
        let (s, _) = with_effect(spec, magnitude)?;
        power_of(&s, &alloc)
    };

    let mut lo = 0.0;
    let mut hi;
    match effect_bound(spec) {
        Some(bound) => {
            hi = bound * (1.0 - 1e-12);
            if power_with(hi)? < goal {
                return Err(Error::Unreachable(format!(
                    "{} cannot reach power {goal} at n = {n} for any admissible effect",
                    spec.kind
                )));
            }
        }
        None => {
            hi = 1.0;
            while power_with(hi)? < goal {
                lo = hi;
                hi *= 2.0;
                if hi > 1e6 {
                    return Err(Error::Unreachable(format!("{} at n = {n}", spec.kind)));
                }
            }
        }
    }
    for _ in 0..400 {
        if hi - lo <= EFFECT_TOL * hi.max(1e-3) {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if power_with(mid)? >= goal {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let (solved, natural) = with_effect(spec, hi)?;
    let mut result = result_at(&solved, SolveTarget::Effect, alloc, Some(goal))?;
    result.effect_solved = Some(natural);
    Ok(result)
}

/// Dispatches a [`SolveRequest`].
pub fn solve(request: &SolveRequest) -> Result<SolveResult> {
    let need_goal =
        || request.power_goal.ok_or_else(|| Error::InvalidSpec("power goal is required for this target".into()));
    let need_n =
        || request.n_fixed.ok_or_else(|| Error::InvalidSpec("a fixed sample size is required for this target".into()));
    match request.target {
        SolveTarget::SampleSize => solve_n(&request.spec, need_goal()?),
        SolveTarget::Power => solve_power(&request.spec, need_n()?),
        SolveTarget::Effect => solve_effect(&request.spec, need_n()?, need_goal()?),
    }
}

/// Freedman's expected number of events (unrounded), generalized to allocation `k = nE/nC`:
/// `m = (1/k) ((k*hr + 1)/(hr - 1))^2 (z_a + z_b)^2`.
pub fn logrank_events_exact(design: &SurvivalDesign, alpha: f64, tails: Tails, power_goal: f64) -> Result<f64> {
    if design.hr == 1.0 {
        return Err(Error::Unreachable("hr = 1 means no effect".into()));
    }
    if !(design.hr > 0.0) {
        return Err(Error::InvalidSpec(format!("hr must be positive, got {}", design.hr)));
    }
    let z = z_crit(alpha, tails)? + normal_quantile(power_goal)?;
    let k = design.ratio_k;
    let shape = (k * design.hr + 1.0) / (design.hr - 1.0);
    Ok(shape * shape * z * z / k)
}

/// Total events required by the log-rank test (rounded up).
pub fn logrank_events(design: &SurvivalDesign, alpha: f64, power_goal: f64) -> Result<u64> {
    Ok(libm::ceil(logrank_events_exact(design, alpha, Tails::Two, power_goal)? - 1e-9) as u64)
}

/// Smallest index at or near a closed-form answer whose power reaches `goal`.
fn settle(spec: &TestSpec, n: u64, goal: f64) -> Result<u64> {
    let min = min_index(spec);
    let mut n = n.max(min);
    while power_at(spec, n)? < goal {
        n += 1;
    }
    while n > min && power_at(spec, n - 1)? >= goal {
        n -= 1;
    }
    Ok(n)
}

/// Subjects per arm for the log-rank test: `nC = m / (k pE + pC)` rounded
/// up, `nE = ceil(k nC)`.
pub fn logrank_n(design: &SurvivalDesign, alpha: f64, tails: Tails, power_goal: f64) -> Result<SolveResult> {
    let spec = TestSpec::new(TestKind::LogRank, Design::Survival(*design))?.with_alpha(alpha)?.with_tails(tails)?;
    let goal = check_goal(&spec, Probability::new(power_goal)?)?;
    let events = logrank_events_exact(design, alpha, tails, goal)?;
    let k = design.ratio_k;
    let denom = k * design.p_e + design.p_c;
    if !(denom > 0.0) {
        return Err(Error::InvalidSpec("pE and pC cannot both be zero".into()));
    }
    let n_c = settle(&spec, libm::ceil(events / denom - 1e-9) as u64, goal)?;
    let mut result = result_at(&spec, SolveTarget::SampleSize, allocation_for(&spec, n_c), Some(goal))?;
    result.events_required = Some(libm::ceil(events - 1e-9) as u64);
    Ok(result)
}

/// Total subjects for a Cox model covariate:
/// `N = (z_a + z_b)^2 / ((ln hr)^2 V psi (1 - rho2))`.
pub fn cox_ph_n(spec: &TestSpec, power_goal: f64) -> Result<SolveResult> {
    let Design::Cox(c) = spec.design else {
        return Err(Error::InvalidSpec(format!("cox_ph requires a Cox design, got {:?}", spec.design)));
    };
    let goal = check_goal(spec, Probability::new(power_goal)?)?;
    let log_hr = libm::log(c.hr);
    let info = log_hr * log_hr * c.covariate.variance() * c.psi * (1.0 - c.rho2);
    if !(info > 0.0) {
        return Err(Error::Unreachable("zero information (psi = 0 or rho2 = 1)".into()));
    }
    let z = z_crit(spec.alpha(), spec.tails)? + normal_quantile(goal)?;
    let raw = z * z / info;
    if raw > MAX_INDEX as f64 {
        return Err(Error::Unreachable(format!("required N {raw:.3e} exceeds the search limit")));
    }
    let n = settle(spec, libm::ceil(raw - 1e-9) as u64, goal)?;
    result_at(spec, SolveTarget::SampleSize, Allocation::single(n), Some(goal))
}

/// Rank-test sample size: `ceil(n_parametric / ARE)` on the design index.
pub fn nonparametric_n(spec: &TestSpec, power_goal: f64) -> Result<SolveResult> {
    let parent_kind =
        spec.kind.parametric_parent().ok_or_else(|| Error::InvalidSpec(format!("{} is not a rank test", spec.kind)))?;
    let parent = TestSpec { kind: parent_kind, ..*spec };
    let goal = check_goal(spec, Probability::new(power_goal)?)?;
    let parent_n = search_index(&parent, goal)?;
    let n = (libm::ceil(parent_n as f64 / spec.are - 1e-9) as u64).max(min_index(spec));
    result_at(spec, SolveTarget::SampleSize, allocation_for(spec, n), Some(goal))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::design::{AnovaDesign, CorrelationDesign, Covariate, CoxDesign, ProportionDesign};

    fn prob(p: f64) -> Probability {
        Probability::new(p).unwrap()
    }

    fn t2(delta: f64, sd: f64) -> TestSpec {
        TestSpec::new(TestKind::TwoSampleT, Design::Mean(MeanDesign::new(delta, sd))).unwrap()
    }

    #[test]
    fn two_sample_t_methods_request() {
        let spec = t2(1.5, 0.5);
        // mpmath quadrature of the noncentral t: 0.78255 at n=3, 0.93894 at n=4
        assert!((power_at(&spec, 3).unwrap() - 0.782_554_387_058_115_6).abs() < 1e-8);
        assert!((power_at(&spec, 4).unwrap() - 0.938_935_745_509_021_7).abs() < 1e-8);
        let r = solve_n(&spec, prob(0.8)).unwrap();
        assert_eq!(r.n_per_arm, vec![4, 4]);
        assert_eq!(r.n_total, 8);
        assert_eq!(r.compat_sample_size(), 4);
    }

    #[test]
    fn null_effect_has_size_alpha() {
        let spec = t2(0.0, 1.0);
        for n in [2, 5, 30, 200] {
            assert!((power_at(&spec, n).unwrap() - 0.05).abs() < 1e-9);
        }
        assert!(matches!(solve_n(&spec, prob(0.8)), Err(Error::Unreachable(_))));
    }

    #[test]
    fn one_proportion_closed_form() {
        let spec = TestSpec::new(
            TestKind::OneProportionZ,
            Design::Proportion(ProportionDesign { p0: 0.5, p1: 0.6, ratio: 1.0 }),
        )
        .unwrap();
        assert_eq!(solve_n(&spec, prob(0.8)).unwrap().n_total, 194);
    }

    #[test]
    fn two_proportions_workflow_scenario() {
        let spec = TestSpec::new(
            TestKind::TwoProportionsZ,
            Design::Proportion(ProportionDesign { p0: 0.18, p1: 0.14, ratio: 1.0 }),
        )
        .unwrap();
        let r = solve_n(&spec, prob(0.8)).unwrap();
        assert_eq!(r.n_per_arm, vec![1318, 1318]);
    }

    #[test]
    fn correlation_fisher_z() {
        let spec = TestSpec::new(TestKind::Correlation, Design::Correlation(CorrelationDesign { r: 0.5 })).unwrap();
        // ((1.959964 + 0.841621) / atanh(0.5))^2 + 3 = 29.01
        assert_eq!(solve_n(&spec, prob(0.8)).unwrap().n_total, 30);
    }

    #[test]
    fn freedman_events_and_subjects() {
        let s = SurvivalDesign { hr: 2.0, p_e: 0.5, p_c: 0.7, ratio_k: 1.0 };
        assert_eq!(logrank_events(&s, 0.05, 0.9).unwrap(), 95);
        let exact = logrank_events_exact(&s, 0.05, Tails::Two, 0.9).unwrap();
        assert!((exact - 94.566_807_552_965_57).abs() < 1e-6);
        let r = logrank_n(&s, 0.05, Tails::Two, 0.9).unwrap();
        assert_eq!(r.n_per_arm, vec![79, 79]);
        assert_eq!(r.events_required, Some(95));
        let inverse = SurvivalDesign { hr: 0.5, ..s };
        assert_eq!(logrank_events(&inverse, 0.05, 0.9).unwrap(), 95);
        let certain = SurvivalDesign { p_e: 1.0, p_c: 1.0, ..s };
        assert_eq!(logrank_n(&certain, 0.05, Tails::Two, 0.9).unwrap().n_per_arm, vec![48, 48]);
    }

    #[test]
    fn freedman_unequal_allocation() {
        // k = 2: m = (1/2)(5)^2 (z_.975 + z_.9)^2 = 131.34; nC = ceil(m/1.7) = 78, nE = 2 nC
        let s = SurvivalDesign { hr: 2.0, p_e: 0.5, p_c: 0.7, ratio_k: 2.0 };
        let r = logrank_n(&s, 0.05, Tails::Two, 0.9).unwrap();
        assert_eq!(r.n_per_arm, vec![156, 78]);
        assert_eq!(r.events_required, Some(132));
    }

    #[test]
    fn logrank_limit_and_no_effect() {
        let s = SurvivalDesign { hr: 1e12, p_e: 1.0, p_c: 1.0, ratio_k: 1.0 };
        let z = normal_quantile(0.975).unwrap() + normal_quantile(0.9).unwrap();
        assert_eq!(logrank_events(&s, 0.05, 0.9).unwrap(), libm::ceil(z * z) as u64);
        let none = SurvivalDesign { hr: 1.0, ..s };
        assert!(matches!(logrank_events(&none, 0.05, 0.9), Err(Error::Unreachable(_))));
    }

    fn cox(psi: f64, rho2: f64) -> TestSpec {
        TestSpec::new(
            TestKind::CoxPh,
            Design::Cox(CoxDesign { hr: 2.0, covariate: Covariate::Binary { prevalence: 0.5 }, psi, rho2 }),
        )
        .unwrap()
    }

    #[test]
    fn cox_closed_form() {
        assert_eq!(solve_n(&cox(1.0, 0.0), prob(0.8)).unwrap().n_total, 66);
        // halving psi doubles the unrounded N (65.35 -> 130.69)
        assert_eq!(solve_n(&cox(0.5, 0.0), prob(0.8)).unwrap().n_total, 131);
        let nearly_collinear = cox(1.0, 1.0 - 1e-13);
        assert!(matches!(solve_n(&nearly_collinear, prob(0.8)), Err(Error::Unreachable(_))));
        assert!(TestSpec::new(
            TestKind::CoxPh,
            Design::Cox(CoxDesign { hr: 2.0, covariate: Covariate::Binary { prevalence: 0.5 }, psi: 1.0, rho2: 1.0 })
        )
        .is_err());
    }

    #[test]
    fn mann_whitney_deflates_t() {
        let base = t2(0.5, 1.0);
        let n_t = solve_n(&base, prob(0.8)).unwrap().n_per_arm[0];
        assert_eq!(n_t, 64);
        let mw = TestSpec { kind: TestKind::MannWhitney, ..base };
        let r = solve_n(&mw, prob(0.8)).unwrap();
        assert_eq!(r.n_per_arm, vec![75, 75]);
        assert!(r.formula_id.starts_with("are-deflation(0.864)"));
        let mw1 = mw.with_are(1.0).unwrap();
        assert_eq!(solve_n(&mw1, prob(0.8)).unwrap().n_per_arm, vec![64, 64]);
    }

    #[test]
    fn anova_two_groups_matches_t() {
        for &(d, n) in &[(0.5, 20u64), (1.2, 7), (0.3, 150)] {
            let anova = TestSpec::new(TestKind::OneWayAnova, Design::Anova(AnovaDesign { k: 2, f: d / 2.0 })).unwrap();
            let pa = power_at(&anova, n).unwrap();
            let pt = power_at(&t2(d, 1.0), n).unwrap();
            assert!((pa - pt).abs() < 1e-9, "d={d} n={n}: {pa} vs {pt}");
        }
    }

    #[test]
    fn effect_solution_round_trips() {
        let spec = t2(1.5, 0.5);
        let r = solve_effect(&spec, 4, prob(0.8)).unwrap();
        let delta = r.effect_solved.unwrap();
        assert!(delta / 0.5 <= 3.0);
        assert!((r.achieved_power - 0.8).abs() < 1e-6);
        let back = power_at(&spec.with_design(Design::Mean(MeanDesign::new(delta, 0.5))).unwrap(), 4).unwrap();
        assert!((back - 0.8).abs() < 1e-6);
    }

    #[test]
    fn below_minimum_rejected() {
        assert!(matches!(power_at(&t2(1.0, 1.0), 1), Err(Error::BelowMinimum { .. })));
        assert!(matches!(solve_n(&t2(1.0, 1.0), prob(0.01)), Err(Error::InvalidSpec(_))));
    }

    #[test]
    fn solve_request_dispatch() {
        let spec = t2(1.5, 0.5);
        let p = solve(&SolveRequest::power(spec, 4)).unwrap();
        assert_eq!(p.target, SolveTarget::Power);
        assert!((p.achieved_power - 0.938_935_745_509_021_7).abs() < 1e-8);
        let missing = SolveRequest { spec, target: SolveTarget::Effect, power_goal: None, n_fixed: Some(4) };
        assert!(solve(&missing).is_err());
    }
}
