//! Monte Carlo power estimation.
//!
//! Every replication draws raw data under the alternative and runs the
//! test itself; nothing here calls the closed forms in [`crate::power`].
//! Replications are grouped in fixed-size batches, batch `b` drawing from
//! ChaCha8 stream `b` of the plan's seed, so a tally is a sum over batches
//! and does not depend on how batches are scheduled.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution, Exp1, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::design::{Allocation, Covariate, Design, Tails, TestKind, TestSpec};
use crate::dist::{normal_quantile, quantile, DistKind, DistParams};
use crate::{Error, Result};

pub const DEFAULT_REPLICATIONS: u64 = 100_000;
pub const BATCH_SIZE: u64 = 2_000;
pub const GENERATOR: &str = "chacha8/stream-per-batch";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimPlan {
    pub spec: TestSpec,
    pub allocation: Allocation,
    pub replications: u64,
    pub seed: u64,
}

impl SimPlan {
    pub fn new(spec: TestSpec, allocation: Allocation, replications: u64, seed: u64) -> Self {
        Self { spec, allocation, replications, seed }
    }

    pub fn batches(&self) -> u64 {
        self.replications.div_ceil(BATCH_SIZE)
    }

    pub fn batch_len(&self, batch: u64) -> u64 {
        (self.replications - batch * BATCH_SIZE).min(BATCH_SIZE)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerEstimate {
    pub p_hat: f64,
    pub mc_standard_error: f64,
    pub replications: u64,
    pub seed: u64,
    pub generator: String,
    /// Survival tests: observed event fraction per arm (experimental, control).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub event_fractions: Option<Vec<f64>>,
}

/// Rejections and per-arm counts accumulated over replications.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Tally {
    pub replications: u64,
    pub rejections: u64,
    pub events: Vec<u64>,
    pub subjects: Vec<u64>,
}

impl Tally {
    pub fn merge(mut self, other: &Tally) -> Tally {
        self.replications += other.replications;
        self.rejections += other.rejections;
        if self.events.is_empty() {
            self.events = other.events.clone();
            self.subjects = other.subjects.clone();
        } else {
            for (a, b) in self.events.iter_mut().zip(&other.events) {
                *a += b;
            }
            for (a, b) in self.subjects.iter_mut().zip(&other.subjects) {
                *a += b;
            }
        }
        self
    }

    pub fn estimate(&self, seed: u64) -> PowerEstimate {
        let r = self.replications.max(1) as f64;
        let p = self.rejections as f64 / r;
        let event_fractions = (!self.events.is_empty())
            .then(|| self.events.iter().zip(&self.subjects).map(|(&e, &s)| e as f64 / s.max(1) as f64).collect());
        PowerEstimate {
            p_hat: p,
            mc_standard_error: libm::sqrt(p * (1.0 - p) / r),
            replications: self.replications,
            seed,
            generator: GENERATOR.into(),
            event_fractions,
        }
    }
}

/// Zero-mean, unit-variance location family used for rank-test data.
/// Each member has a known efficiency of rank tests relative to t tests.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShiftFamily {
    Normal,
    Parabolic,
    Uniform,
    Logistic,
    Laplace,
}

impl ShiftFamily {
    pub const ALL: [ShiftFamily; 5] = [
        ShiftFamily::Parabolic,
        ShiftFamily::Normal,
        ShiftFamily::Uniform,
        ShiftFamily::Logistic,
        ShiftFamily::Laplace,
    ];

    /// Efficiency of Wilcoxon-type tests relative to t tests under this family.
    pub fn are(self) -> f64 {
        match self {
            ShiftFamily::Normal => 3.0 / core::f64::consts::PI,
            ShiftFamily::Parabolic => 0.864,
            ShiftFamily::Uniform => 1.0,
            ShiftFamily::Logistic => core::f64::consts::PI * core::f64::consts::PI / 9.0,
            ShiftFamily::Laplace => 1.5,
        }
    }

    pub fn for_are(are: f64) -> Option<Self> {
        ShiftFamily::ALL.into_iter().find(|f| (f.are() - are).abs() < 1e-3)
    }

    pub fn sample<R: Rng + ?Sized>(self, rng: &mut R) -> f64 {
        match self {
            ShiftFamily::Normal => rng.sample(StandardNormal),
            ShiftFamily::Parabolic => {
                let u1: f64 = rng.random_range(-1.0..1.0);
                let u2: f64 = rng.random_range(-1.0..1.0);
                let u3: f64 = rng.random_range(-1.0..1.0);
                let e = if u3.abs() >= u2.abs() && u3.abs() >= u1.abs() { u2 } else { u3 };
                e * libm::sqrt(5.0)
            }
            ShiftFamily::Uniform => rng.random_range(-1.0..1.0) * libm::sqrt(3.0),
            ShiftFamily::Logistic => {
                let u: f64 = rng.random();
                let u = u.max(f64::MIN_POSITIVE);
                libm::log(u / (1.0 - u)) * libm::sqrt(3.0) / core::f64::consts::PI
            }
            ShiftFamily::Laplace => {
                let e: f64 = rng.sample(Exp1);
                let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
                sign * e / core::f64::consts::SQRT_2
            }
        }
    }
}

/// Expected event probability under Exp(rate) survival with U(0, tau) censoring.
pub fn event_probability(rate_tau: f64) -> f64 {
    if rate_tau.is_infinite() {
        return 1.0;
    }
    if rate_tau < 1e-6 {
        return rate_tau / 2.0 - rate_tau * rate_tau / 6.0;
    }
    1.0 - (-libm::expm1(-rate_tau)) / rate_tau
}

fn solve_increasing(f: impl Fn(f64) -> f64, target: f64) -> f64 {
    let (mut lo, mut hi) = (1e-12_f64, 1.0_f64);
    while f(hi) < target {
        lo = hi;
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Censoring horizon giving a unit-hazard arm event probability `p`.
pub fn censoring_horizon(p: f64) -> f64 {
    if p >= 1.0 {
        f64::INFINITY
    } else {
        solve_increasing(event_probability, p)
    }
}

/// Standard normal grid used to average over a continuous covariate.
fn normal_nodes() -> impl Iterator<Item = (f64, f64)> {
    const M: usize = 1600;
    let h = 16.0 / M as f64;
    (0..M).map(move |i| {
        let z = -8.0 + (i as f64 + 0.5) * h;
        (z, h * libm::exp(-0.5 * z * z) / libm::sqrt(2.0 * core::f64::consts::PI))
    })
}

/// Overall event probability of the Cox data model at horizon `tau`.
pub fn cox_event_probability(hr: f64, covariate: Covariate, tau: f64) -> f64 {
    let beta = libm::log(hr);
    match covariate {
        Covariate::Binary { prevalence } => {
            (1.0 - prevalence) * event_probability(tau) + prevalence * event_probability(hr * tau)
        }
        Covariate::Continuous { sigma } => {
            normal_nodes().map(|(z, w)| w * event_probability(libm::exp(beta * sigma * z) * tau)).sum()
        }
    }
}

#[derive(Debug, Clone)]
enum Model {
    OneSample { shift: f64, family: ShiftFamily, rank: bool, crit: f64 },
    TwoSample { shift: f64, family: ShiftFamily, rank: bool, crit: f64 },
    Groups { means: Vec<f64>, family: ShiftFamily, rank: bool, crit: f64 },
    OneProportion { p0: f64, p1: f64, crit: f64 },
    TwoProportions { p0: f64, p1: f64, crit: f64 },
    Multinomial { p0: Vec<f64>, p1: Vec<f64>, crit: f64 },
    Correlation { r: f64, crit: f64 },
    Survival { rate_e: f64, tau: f64, crit: f64 },
    Cox { beta: f64, covariate: Covariate, tau: f64, crit: f64 },
}

/// Prepared simulation for one plan.
#[derive(Debug, Clone)]
pub struct Simulator {
    model: Model,
    arms: Vec<u64>,
    /// +1 or -1: the side a one-sided test rejects on.
    direction: f64,
    tails: Tails,
}

fn sign(x: f64) -> f64 {
    if x < 0.0 {
        -1.0
    } else {
        1.0
    }
}

fn crit_z(alpha: f64, tails: Tails) -> Result<f64> {
    normal_quantile(match tails {
        Tails::One => 1.0 - alpha,
        Tails::Two => 1.0 - alpha / 2.0,
    })
}

fn crit_t(alpha: f64, tails: Tails, df: f64) -> Result<f64> {
    let p = match tails {
        Tails::One => 1.0 - alpha,
        Tails::Two => 1.0 - alpha / 2.0,
    };
    quantile(DistKind::T, p, &DistParams::t(df, 0.0))
}

fn unsupported(msg: String) -> Error {
    Error::Unsupported(msg)
}

impl Simulator {
    pub fn new(spec: &TestSpec, allocation: &Allocation) -> Result<Self> {
        spec.validate()?;
        let alpha = spec.alpha();
        let tails = if spec.kind.has_tails() { spec.tails } else { Tails::Two };
        let arms = allocation.arms().to_vec();
        let need_arms = |k: usize| -> Result<()> {
            if arms.len() != k || arms.contains(&0) {
                return Err(Error::InvalidSpec(format!("{} needs {k} non-empty arm(s), got {arms:?}", spec.kind)));
            }
            Ok(())
        };
        let family = if spec.kind.is_nonparametric() {
            ShiftFamily::for_are(spec.are).ok_or_else(|| {
                unsupported(format!(
                    "no simulation family with rank-test efficiency {}; supported: 0.864, 3/pi, 1, pi^2/9, 1.5",
                    spec.are
                ))
            })?
        } else {
            ShiftFamily::Normal
        };
        let rank = spec.kind.is_nonparametric();
        let (model, direction) = match (spec.kind, spec.design) {
            (TestKind::OneSampleT | TestKind::PairedT | TestKind::PairedWilcoxon, Design::Mean(m)) => {
                need_arms(1)?;
                let n = arms[0] as f64;
                let crit = if rank { crit_z(alpha, tails)? } else { crit_t(alpha, tails, n - 1.0)? };
                (Model::OneSample { shift: m.standardized(), family, rank, crit }, sign(m.delta))
            }
            (TestKind::TwoSampleT | TestKind::MannWhitney, Design::Mean(m)) => {
                need_arms(2)?;
                let df = (arms[0] + arms[1]) as f64 - 2.0;
                let crit = if rank { crit_z(alpha, tails)? } else { crit_t(alpha, tails, df)? };
                (Model::TwoSample { shift: m.standardized(), family, rank, crit }, sign(m.delta))
            }
            (TestKind::OneWayAnova | TestKind::KruskalWallis, Design::Anova(a)) => {
                let k = a.k as usize;
                need_arms(k)?;
                let total: u64 = arms.iter().sum();
                let kf = k as f64;
                // Equally spaced group means with population SD f.
                let spread = libm::sqrt((kf * kf - 1.0) / 12.0);
                let means = (0..k).map(|i| a.f * (i as f64 - (kf - 1.0) / 2.0) / spread).collect();
                let crit = if rank {
                    quantile(DistKind::ChiSquare, 1.0 - alpha, &DistParams::chisq(kf - 1.0, 0.0))?
                } else {
                    quantile(DistKind::F, 1.0 - alpha, &DistParams::f(kf - 1.0, total as f64 - kf, 0.0))?
                };
                (Model::Groups { means, family, rank, crit }, 1.0)
            }
            (TestKind::OneProportionZ, Design::Proportion(p)) => {
                need_arms(1)?;
                (Model::OneProportion { p0: p.p0, p1: p.p1, crit: crit_z(alpha, tails)? }, sign(p.p1 - p.p0))
            }
            (TestKind::TwoProportionsZ, Design::Proportion(p)) => {
                need_arms(2)?;
                (Model::TwoProportions { p0: p.p0, p1: p.p1, crit: crit_z(alpha, tails)? }, sign(p.p1 - p.p0))
            }
            (TestKind::ChiSquare, Design::ChiSquare(c)) => {
                need_arms(1)?;
                let m = c.df as usize + 1;
                let mf = m as f64;
                let centre = (mf - 1.0) / 2.0;
                let norm = libm::sqrt((0..m).map(|i| (i as f64 - centre) * (i as f64 - centre)).sum::<f64>());
                let p0 = vec![1.0 / mf; m];
                let p1: Vec<f64> =
                    (0..m).map(|i| 1.0 / mf + c.w * (i as f64 - centre) / norm / libm::sqrt(mf)).collect();
                if p1.iter().any(|&p| p <= 0.0) {
                    return Err(unsupported(format!("w = {} is too large for {m} equiprobable cells", c.w)));
                }
                let crit = quantile(DistKind::ChiSquare, 1.0 - alpha, &DistParams::chisq(c.df as f64, 0.0))?;
                (Model::Multinomial { p0, p1, crit }, 1.0)
            }
            (TestKind::Correlation, Design::Correlation(c)) => {
                need_arms(1)?;
                if arms[0] < 4 {
                    return Err(Error::BelowMinimum { n: arms[0], min: 4 });
                }
                (Model::Correlation { r: c.r, crit: crit_t(alpha, tails, arms[0] as f64 - 2.0)? }, sign(c.r))
            }
            (TestKind::LogRank, Design::Survival(s)) => {
                need_arms(2)?;
                let tau = censoring_horizon(s.p_c);
                (Model::Survival { rate_e: s.hr, tau, crit: crit_z(alpha, tails)? }, sign(s.hr - 1.0))
            }
            (TestKind::CoxPh, Design::Cox(c)) => {
                need_arms(1)?;
                if c.rho2 != 0.0 {
                    return Err(unsupported("cox_ph simulation covers a single covariate (rho2 = 0)".into()));
                }
                let tau = if c.psi >= 1.0 {
                    f64::INFINITY
                } else {
                    solve_increasing(|t| cox_event_probability(c.hr, c.covariate, t), c.psi)
                };
                let model =
                    Model::Cox { beta: libm::log(c.hr), covariate: c.covariate, tau, crit: crit_z(alpha, tails)? };
                (model, sign(c.hr - 1.0))
            }
            (kind, design) => return Err(Error::InvalidSpec(format!("{kind} cannot use {design:?}"))),
        };
        Ok(Self { model, arms, direction, tails })
    }

    fn rejects(&self, stat: f64, crit: f64) -> bool {
        match self.tails {
            Tails::Two => stat.abs() > crit,
            Tails::One => self.direction * stat > crit,
        }
    }

    /// Runs `reps` replications on one batch stream.
    pub fn run_batch(&self, seed: u64, batch: u64, reps: u64) -> Tally {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(batch);
        let mut scratch = Scratch::default();
        let survival = matches!(self.model, Model::Survival { .. });
        let mut tally = Tally {
            replications: reps,
            rejections: 0,
            events: if survival { vec![0; 2] } else { Vec::new() },
            subjects: if survival { self.arms.clone().into_iter().map(|n| n * reps).collect() } else { Vec::new() },
        };
        for _ in 0..reps {
            if self.replicate(&mut rng, &mut scratch, &mut tally.events) {
                tally.rejections += 1;
            }
        }
        tally
    }

    fn replicate(&self, rng: &mut ChaCha8Rng, s: &mut Scratch, events: &mut [u64]) -> bool {
        match &self.model {
            Model::OneSample { shift, family, rank, crit } => {
                let n = self.arms[0] as usize;
                s.a.clear();
                s.a.extend((0..n).map(|_| shift + family.sample(rng)));
                let stat = if *rank { signed_rank_z(&s.a, &mut s.idx) } else { one_sample_t(&s.a) };
                self.rejects(stat, *crit)
            }
            Model::TwoSample { shift, family, rank, crit } => {
                let (n1, n2) = (self.arms[0] as usize, self.arms[1] as usize);
                s.a.clear();
                s.a.extend((0..n1).map(|_| family.sample(rng)));
                s.b.clear();
                s.b.extend((0..n2).map(|_| shift + family.sample(rng)));
                let stat = if *rank { mann_whitney_z(&s.a, &s.b, &mut s.pairs) } else { pooled_t(&s.a, &s.b) };
                self.rejects(stat, *crit)
            }
            Model::Groups { means, family, rank, crit } => {
                s.pairs.clear();
                for (g, (&mu, &n)) in means.iter().zip(&self.arms).enumerate() {
                    for _ in 0..n {
                        s.pairs.push((mu + family.sample(rng), g as f64));
                    }
                }
                let stat =
                    if *rank { kruskal_wallis_h(&mut s.pairs, means.len()) } else { anova_f(&s.pairs, means.len()) };
                stat > *crit
            }
            Model::OneProportion { p0, p1, crit } => {
                let n = self.arms[0];
                let x = binomial(rng, n, *p1) as f64;
                let nf = n as f64;
                let z = (x / nf - p0) / libm::sqrt(p0 * (1.0 - p0) / nf);
                self.rejects(z, *crit)
            }
            Model::TwoProportions { p0, p1, crit } => {
                let (n1, n2) = (self.arms[0], self.arms[1]);
                let x1 = binomial(rng, n1, *p0) as f64;
                let x2 = binomial(rng, n2, *p1) as f64;
                let (n1, n2) = (n1 as f64, n2 as f64);
                let pooled = (x1 + x2) / (n1 + n2);
                let se = libm::sqrt(pooled * (1.0 - pooled) * (1.0 / n1 + 1.0 / n2));
                let z = if se > 0.0 { (x2 / n2 - x1 / n1) / se } else { 0.0 };
                self.rejects(z, *crit)
            }
            Model::Multinomial { p0, p1, crit } => {
                let n = self.arms[0];
                let mut left = n;
                let mut mass = 1.0;
                let nf = n as f64;
                let mut x2 = 0.0;
                for (i, (&q, &e)) in p1.iter().zip(p0).enumerate() {
                    let count = if i + 1 == p1.len() {
                        left
                    } else {
                        let c = binomial(rng, left, (q / mass).min(1.0));
                        mass -= q;
                        c
                    };
                    left -= count;
                    let expected = nf * e;
                    x2 += (count as f64 - expected) * (count as f64 - expected) / expected;
                }
                x2 > *crit
            }
            Model::Correlation { r, crit } => {
                let n = self.arms[0] as usize;
                let c = libm::sqrt(1.0 - r * r);
                let (mut sx, mut sy, mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0, 0.0, 0.0);
                for _ in 0..n {
                    let z1: f64 = rng.sample(StandardNormal);
                    let z2: f64 = rng.sample(StandardNormal);
                    let (x, y) = (z1, r * z1 + c * z2);
                    sx += x;
                    sy += y;
                    sxx += x * x;
                    syy += y * y;
                    sxy += x * y;
                }
                let nf = n as f64;
                let cov = sxy - sx * sy / nf;
                let rr = cov / libm::sqrt((sxx - sx * sx / nf) * (syy - sy * sy / nf));
                let t = rr * libm::sqrt((nf - 2.0) / (1.0 - rr * rr));
                self.rejects(t, *crit)
            }
            Model::Survival { rate_e, tau, crit } => {
                s.obs.clear();
                for (arm, (&n, rate)) in self.arms.iter().zip([*rate_e, 1.0]).enumerate() {
                    let x = if arm == 0 { 1.0 } else { 0.0 };
                    for _ in 0..n {
                        let t = rng.sample::<f64, _>(Exp1) / rate;
                        let c = if tau.is_finite() { tau * rng.random::<f64>() } else { f64::INFINITY };
                        let event = t <= c;
                        events[arm] += u64::from(event);
                        s.obs.push((t.min(c), event, x));
                    }
                }
                self.rejects(score_z(&s.obs, &mut s.keys), *crit)
            }
            Model::Cox { beta, covariate, tau, crit } => {
                s.obs.clear();
                for _ in 0..self.arms[0] {
                    let x = match *covariate {
                        Covariate::Binary { prevalence } => f64::from(u8::from(rng.random::<f64>() < prevalence)),
                        Covariate::Continuous { sigma } => sigma * rng.sample::<f64, _>(StandardNormal),
                    };
                    let t = rng.sample::<f64, _>(Exp1) / libm::exp(beta * x);
                    let c = if tau.is_finite() { tau * rng.random::<f64>() } else { f64::INFINITY };
                    s.obs.push((t.min(c), t <= c, x));
                }
                self.rejects(score_z(&s.obs, &mut s.keys), *crit)
            }
        }
    }
}

#[derive(Default)]
struct Scratch {
    a: Vec<f64>,
    b: Vec<f64>,
    idx: Vec<usize>,
    pairs: Vec<(f64, f64)>,
    obs: Vec<(f64, bool, f64)>,
    keys: Vec<u64>,
}

fn binomial(rng: &mut ChaCha8Rng, n: u64, p: f64) -> u64 {
    if p <= 0.0 {
        return 0;
    }
    if p >= 1.0 {
        return n;
    }
    Binomial::new(n, p).map(|b| b.sample(rng)).unwrap_or(0)
}

fn mean_var(x: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let ss: f64 = x.iter().map(|v| (v - mean) * (v - mean)).sum();
    (mean, ss / (n - 1.0))
}

fn one_sample_t(x: &[f64]) -> f64 {
    let (m, v) = mean_var(x);
    m / libm::sqrt(v / x.len() as f64)
}

fn pooled_t(a: &[f64], b: &[f64]) -> f64 {
    let (ma, va) = mean_var(a);
    let (mb, vb) = mean_var(b);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let sp2 = ((na - 1.0) * va + (nb - 1.0) * vb) / (na + nb - 2.0);
    (mb - ma) / libm::sqrt(sp2 * (1.0 / na + 1.0 / nb))
}

fn signed_rank_z(d: &[f64], idx: &mut Vec<usize>) -> f64 {
    idx.clear();
    idx.extend(0..d.len());
    idx.sort_unstable_by(|&i, &j| d[i].abs().total_cmp(&d[j].abs()));
    let w: f64 = idx.iter().enumerate().filter(|(_, &i)| d[i] > 0.0).map(|(r, _)| (r + 1) as f64).sum();
    let n = d.len() as f64;
    (w - n * (n + 1.0) / 4.0) / libm::sqrt(n * (n + 1.0) * (2.0 * n + 1.0) / 24.0)
}

fn mann_whitney_z(a: &[f64], b: &[f64], pairs: &mut Vec<(f64, f64)>) -> f64 {
    pairs.clear();
    pairs.extend(a.iter().map(|&v| (v, 0.0)));
    pairs.extend(b.iter().map(|&v| (v, 1.0)));
    pairs.sort_unstable_by(|x, y| x.0.total_cmp(&y.0));
    let rank_sum: f64 = pairs.iter().enumerate().filter(|(_, p)| p.1 == 1.0).map(|(r, _)| (r + 1) as f64).sum();
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let u = rank_sum - nb * (nb + 1.0) / 2.0;
    (u - na * nb / 2.0) / libm::sqrt(na * nb * (na + nb + 1.0) / 12.0)
}

fn anova_f(obs: &[(f64, f64)], k: usize) -> f64 {
    let mut sum = vec![0.0; k];
    let mut count = vec![0.0; k];
    for &(y, g) in obs {
        sum[g as usize] += y;
        count[g as usize] += 1.0;
    }
    let total = obs.len() as f64;
    let grand = sum.iter().sum::<f64>() / total;
    let between: f64 = (0..k).map(|g| count[g] * (sum[g] / count[g] - grand).powi(2)).sum();
    let within: f64 = obs.iter().map(|&(y, g)| (y - sum[g as usize] / count[g as usize]).powi(2)).sum();
    let kf = k as f64;
    (between / (kf - 1.0)) / (within / (total - kf))
}

fn kruskal_wallis_h(obs: &mut [(f64, f64)], k: usize) -> f64 {
    obs.sort_unstable_by(|x, y| x.0.total_cmp(&y.0));
    let mut rank_sum = vec![0.0; k];
    let mut count = vec![0.0; k];
    for (r, &(_, g)) in obs.iter().enumerate() {
        rank_sum[g as usize] += (r + 1) as f64;
        count[g as usize] += 1.0;
    }
    let n = obs.len() as f64;
    let s: f64 = (0..k).map(|g| rank_sum[g] * rank_sum[g] / count[g]).sum();
    12.0 / (n * (n + 1.0)) * s - 3.0 * (n + 1.0)
}

/// Partial-likelihood score statistic at beta = 0 for one covariate;
/// with a group indicator this is the log-rank statistic (O - E) / sqrt(V).
///
/// Subjects are ordered by a packed key: the time's bit pattern (monotone
/// for non-negative floats) with its low 20 bits replaced by the subject index.
fn score_z(obs: &[(f64, bool, f64)], keys: &mut Vec<u64>) -> f64 {
    const INDEX_BITS: u32 = 20;
    const MASK: u64 = (1 << INDEX_BITS) - 1;
    debug_assert!(obs.len() as u64 <= MASK);
    keys.clear();
    keys.extend(obs.iter().enumerate().map(|(i, o)| (o.0.to_bits() & !MASK) | i as u64));
    keys.sort_unstable();
    let (mut s0, mut s1, mut s2) = (0.0, 0.0, 0.0);
    let (mut u, mut v) = (0.0, 0.0);
    for &key in keys.iter().rev() {
        let (_, event, x) = obs[(key & MASK) as usize];
        s0 += 1.0;
        s1 += x;
        s2 += x * x;
        if event {
            let m = s1 / s0;
            u += x - m;
            v += (s2 / s0 - m * m).max(0.0);
        }
    }
    if v > 0.0 {
        u / libm::sqrt(v)
    } else {
        0.0
    }
}

/// Sequential estimate over all batches.
pub fn simulate_power(plan: &SimPlan) -> Result<PowerEstimate> {
    let sim = Simulator::new(&plan.spec, &plan.allocation)?;
    let tally = (0..plan.batches())
        .map(|b| sim.run_batch(plan.seed, b, plan.batch_len(b)))
        .fold(Tally::default(), |acc, t| acc.merge(&t));
    Ok(tally.estimate(plan.seed))
}

/// The same design with the effect set to the null.
pub fn null_spec(spec: &TestSpec) -> TestSpec {
    let design = match spec.design {
        Design::Mean(mut m) => {
            m.delta = 0.0;
            Design::Mean(m)
        }
        Design::Anova(mut a) => {
            a.f = 0.0;
            Design::Anova(a)
        }
        Design::Proportion(mut p) => {
            p.p1 = p.p0;
            Design::Proportion(p)
        }
        Design::ChiSquare(mut c) => {
            c.w = 0.0;
            Design::ChiSquare(c)
        }
        Design::Correlation(mut c) => {
            c.r = 0.0;
            Design::Correlation(c)
        }
        Design::Survival(mut s) => {
            s.hr = 1.0;
            s.p_e = s.p_c;
            Design::Survival(s)
        }
        Design::Cox(mut c) => {
            c.hr = 1.0;
            Design::Cox(c)
        }
    };
    TestSpec { design, ..*spec }
}
