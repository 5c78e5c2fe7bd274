//! Test identities, design inputs and solve requests/results.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dist::Probability;
use crate::error::{Error, Result};

pub const DEFAULT_ALPHA: f64 = 0.05;
/// Conservative lower bound on the Pitman efficiency of rank tests relative to t/F.
pub const DEFAULT_ARE: f64 = 0.864;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TestKind {
    OneSampleT,
    TwoSampleT,
    PairedT,
    OneWayAnova,
    OneProportionZ,
    TwoProportionsZ,
    ChiSquare,
    Correlation,
    MannWhitney,
    PairedWilcoxon,
    KruskalWallis,
    LogRank,
    CoxPh,
}

impl TestKind {
    pub const ALL: [TestKind; 13] = [
        TestKind::OneSampleT,
        TestKind::TwoSampleT,
        TestKind::PairedT,
        TestKind::OneWayAnova,
        TestKind::OneProportionZ,
        TestKind::TwoProportionsZ,
        TestKind::ChiSquare,
        TestKind::Correlation,
        TestKind::MannWhitney,
        TestKind::PairedWilcoxon,
        TestKind::KruskalWallis,
        TestKind::LogRank,
        TestKind::CoxPh,
    ];

    pub fn id(self) -> &'static str {
        match self {
            TestKind::OneSampleT => "one_sample_t",
            TestKind::TwoSampleT => "two_sample_t",
            TestKind::PairedT => "paired_t",
            TestKind::OneWayAnova => "one_way_anova",
            TestKind::OneProportionZ => "one_proportion_z",
            TestKind::TwoProportionsZ => "two_proportions_z",
            TestKind::ChiSquare => "chi_square",
            TestKind::Correlation => "correlation",
            TestKind::MannWhitney => "mann_whitney",
            TestKind::PairedWilcoxon => "paired_wilcoxon",
            TestKind::KruskalWallis => "kruskal_wallis",
            TestKind::LogRank => "log_rank",
            TestKind::CoxPh => "cox_ph",
        }
    }

    /// The parametric test a rank test is deflated from.
    pub fn parametric_parent(self) -> Option<TestKind> {
        match self {
            TestKind::MannWhitney => Some(TestKind::TwoSampleT),
            TestKind::PairedWilcoxon => Some(TestKind::PairedT),
            TestKind::KruskalWallis => Some(TestKind::OneWayAnova),
            _ => None,
        }
    }

    pub fn is_nonparametric(self) -> bool {
        self.parametric_parent().is_some()
    }

    /// Whether the test statistic is directional (one/two-sided choice meaningful).
    pub fn has_tails(self) -> bool {
        !matches!(self, TestKind::OneWayAnova | TestKind::KruskalWallis | TestKind::ChiSquare)
    }

    /// Number of arms in an allocation for this test (`k` for ANOVA-type designs).
    pub fn design_family(self) -> DesignFamily {
        match self {
            TestKind::OneSampleT
            | TestKind::TwoSampleT
            | TestKind::PairedT
            | TestKind::MannWhitney
            | TestKind::PairedWilcoxon => DesignFamily::Mean,
            TestKind::OneWayAnova | TestKind::KruskalWallis => DesignFamily::Anova,
            TestKind::OneProportionZ | TestKind::TwoProportionsZ => DesignFamily::Proportion,
            TestKind::ChiSquare => DesignFamily::ChiSquare,
            TestKind::Correlation => DesignFamily::Correlation,
            TestKind::LogRank => DesignFamily::Survival,
            TestKind::CoxPh => DesignFamily::Cox,
        }
    }
}

impl fmt::Display for TestKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for TestKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        TestKind::ALL
            .into_iter()
            .find(|k| k.id() == s)
            .ok_or_else(|| Error::InvalidSpec(format!("unknown test id `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DesignFamily {
    Mean,
    Anova,
    Proportion,
    ChiSquare,
    Correlation,
    Survival,
    Cox,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Tails {
    One,
    #[default]
    Two,
}

impl Tails {
    pub fn as_str(self) -> &'static str {
        match self {
            Tails::One => "one",
            Tails::Two => "two",
        }
    }
}

impl fmt::Display for Tails {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Tails {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "one" | "one-sided" | "one_sided" | "1" => Ok(Tails::One),
            "two" | "two-sided" | "two_sided" | "2" => Ok(Tails::Two),
            _ => Err(Error::InvalidSpec(format!("tails must be `one` or `two`, got `{s}`"))),
        }
    }
}

/// Mean comparison. For paired designs `sd` is the SD of within-pair differences.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanDesign {
    pub delta: f64,
    pub sd: f64,
    /// n2 / n1, two-sample designs only.
    pub ratio: f64,
}

impl MeanDesign {
    pub fn new(delta: f64, sd: f64) -> Self {
        Self { delta, sd, ratio: 1.0 }
    }

    /// Cohen's d.
    pub fn standardized(&self) -> f64 {
        self.delta / self.sd
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnovaDesign {
    pub k: u32,
    /// Cohen's f.
    pub f: f64,
}

impl AnovaDesign {
    /// Cohen's f from eta squared: `f = sqrt(eta2 / (1 - eta2))`.
    pub fn from_eta_squared(k: u32, eta2: f64) -> Result<Self> {
        if !(eta2 > 0.0 && eta2 < 1.0) {
            return Err(Error::InvalidSpec(format!("eta squared must lie in (0, 1), got {eta2}")));
        }
        Ok(Self { k, f: libm::sqrt(eta2 / (1.0 - eta2)) })
    }

    /// Cohen's f from group means and a common within-group SD:
    /// `f = sqrt(mean((mu_i - mu_bar)^2)) / sd`.
    pub fn from_group_means(means: &[f64], sd: f64) -> Result<Self> {
        if means.len() < 2 || !(sd > 0.0) {
            return Err(Error::InvalidSpec("need at least two group means and sd > 0".into()));
        }
        let k = means.len() as f64;
        let grand = means.iter().sum::<f64>() / k;
        let between = means.iter().map(|m| (m - grand) * (m - grand)).sum::<f64>() / k;
        Ok(Self { k: means.len() as u32, f: libm::sqrt(between) / sd })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProportionDesign {
    pub p0: f64,
    pub p1: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChiSquareDesign {
    /// Cohen's w.
    pub w: f64,
    pub df: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorrelationDesign {
    pub r: f64,
}

/// Log-rank design; `hr` is the experimental-over-control hazard ratio.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SurvivalDesign {
    pub hr: f64,
    /// Event probability over the study horizon, experimental arm.
    pub p_e: f64,
    /// Event probability over the study horizon, control arm.
    pub p_c: f64,
    /// nE / nC.
    pub ratio_k: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Covariate {
    /// Binary exposure with the given prevalence.
    Binary { prevalence: f64 },
    /// Continuous covariate with the given SD.
    Continuous { sigma: f64 },
}

impl Covariate {
    pub fn variance(self) -> f64 {
        match self {
            Covariate::Binary { prevalence } => prevalence * (1.0 - prevalence),
            Covariate::Continuous { sigma } => sigma * sigma,
        }
    }
}

/// Cox proportional-hazards design for one covariate of interest.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoxDesign {
    pub hr: f64,
    pub covariate: Covariate,
    /// Overall probability of an event.
    pub psi: f64,
    /// R^2 of the covariate regressed on the other covariates.
    pub rho2: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum Design {
    Mean(MeanDesign),
    Anova(AnovaDesign),
    Proportion(ProportionDesign),
    ChiSquare(ChiSquareDesign),
    Correlation(CorrelationDesign),
    Survival(SurvivalDesign),
    Cox(CoxDesign),
}

impl Design {
    fn family(&self) -> DesignFamily {
        match self {
            Design::Mean(_) => DesignFamily::Mean,
            Design::Anova(_) => DesignFamily::Anova,
            Design::Proportion(_) => DesignFamily::Proportion,
            Design::ChiSquare(_) => DesignFamily::ChiSquare,
            Design::Correlation(_) => DesignFamily::Correlation,
            Design::Survival(_) => DesignFamily::Survival,
            Design::Cox(_) => DesignFamily::Cox,
        }
    }
}

fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidSpec(msg.into())
}

fn open_unit(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v < 1.0 {
        Ok(())
    } else {
        Err(invalid(format!("{name} must lie in (0, 1), got {v}")))
    }
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(invalid(format!("{name} must be positive, got {v}")))
    }
}

/// A fully specified test: which test, its design inputs, level and sidedness.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TestSpec {
    pub kind: TestKind,
    pub design: Design,
    pub alpha: Probability,
    pub tails: Tails,
    /// Asymptotic relative efficiency used by the rank tests.
    pub are: f64,
}

impl TestSpec {
    /// Validated spec with the default level (0.05), two tails and ARE 0.864.
    pub fn new(kind: TestKind, design: Design) -> Result<Self> {
        let spec = Self { kind, design, alpha: Probability::open(DEFAULT_ALPHA)?, tails: Tails::Two, are: DEFAULT_ARE };
        spec.validate()?;
        Ok(spec)
    }

    pub fn with_alpha(mut self, alpha: f64) -> Result<Self> {
        self.alpha = Probability::open(alpha).map_err(|_| invalid(format!("alpha must lie in (0, 1), got {alpha}")))?;
        Ok(self)
    }

    pub fn with_tails(mut self, tails: Tails) -> Result<Self> {
        self.tails = tails;
        self.validate()?;
        Ok(self)
    }

    pub fn with_are(mut self, are: f64) -> Result<Self> {
        self.are = are;
        self.validate()?;
        Ok(self)
    }

    pub fn with_design(mut self, design: Design) -> Result<Self> {
        self.design = design;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if self.design.family() != self.kind.design_family() {
            return Err(invalid(format!(
                "{} expects {:?} design inputs, got {:?}",
                self.kind,
                self.kind.design_family(),
                self.design.family()
            )));
        }
        if self.tails == Tails::One && !self.kind.has_tails() {
            return Err(invalid(format!("{} is an omnibus test; only tails=two is meaningful", self.kind)));
        }
        if self.kind.is_nonparametric() && !(self.are > 0.0 && self.are <= 2.0) {
            return Err(invalid(format!("ARE must lie in (0, 2], got {}", self.are)));
        }
        match self.design {
            Design::Mean(m) => {
                positive("sd", m.sd)?;
                positive("ratio", m.ratio)?;
                if !m.delta.is_finite() {
                    return Err(invalid("delta must be finite"));
                }
            }
            Design::Anova(a) => {
                if a.k < 2 {
                    return Err(invalid(format!("k must be at least 2, got {}", a.k)));
                }
                if !(a.f >= 0.0 && a.f.is_finite()) {
                    return Err(invalid(format!("f must be nonnegative, got {}", a.f)));
                }
            }
            Design::Proportion(p) => {
                open_unit("p0", p.p0)?;
                open_unit("p1", p.p1)?;
                positive("ratio", p.ratio)?;
            }
            Design::ChiSquare(c) => {
                if c.df < 1 {
                    return Err(invalid("df must be at least 1"));
                }
                if !(c.w >= 0.0 && c.w.is_finite()) {
                    return Err(invalid(format!("w must be nonnegative, got {}", c.w)));
                }
            }
            Design::Correlation(c) => {
                if !(c.r > -1.0 && c.r < 1.0) {
                    return Err(invalid(format!("r must lie in (-1, 1), got {}", c.r)));
                }
            }
            Design::Survival(s) => {
                positive("hr", s.hr)?;
                for (name, p) in [("pE", s.p_e), ("pC", s.p_c)] {
                    if !(p > 0.0 && p <= 1.0) {
                        return Err(invalid(format!("{name} must lie in (0, 1], got {p}")));
                    }
                }
                positive("ratio_k", s.ratio_k)?;
            }
            Design::Cox(c) => {
                positive("hr", c.hr)?;
                match c.covariate {
                    Covariate::Binary { prevalence } => open_unit("exposure_prev", prevalence)?,
                    Covariate::Continuous { sigma } => positive("sigma", sigma)?,
                }
                if !(c.psi > 0.0 && c.psi <= 1.0) {
                    return Err(invalid(format!("psi must lie in (0, 1], got {}", c.psi)));
                }
                if !(0.0..1.0).contains(&c.rho2) {
                    return Err(invalid(format!("rho2 must lie in [0, 1), got {}", c.rho2)));
                }
            }
        }
        Ok(())
    }

    pub fn alpha(&self) -> f64 {
        self.alpha.value()
    }
}

/// Subjects per arm. Single-sample designs have one arm; ANOVA-type designs
/// have `k`; two-arm designs list arm 1 then arm 2 (log-rank: nE then nC).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Allocation(pub Vec<u64>);

impl Allocation {
    pub fn single(n: u64) -> Self {
        Self(vec![n])
    }

    pub fn arms(&self) -> &[u64] {
        &self.0
    }

    pub fn total(&self) -> u64 {
        self.0.iter().sum()
    }

    pub fn smallest(&self) -> u64 {
        self.0.iter().copied().min().unwrap_or(0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveTarget {
    SampleSize,
    Power,
    Effect,
}

impl SolveTarget {
    pub fn as_str(self) -> &'static str {
        match self {
            SolveTarget::SampleSize => "sample_size",
            SolveTarget::Power => "power",
            SolveTarget::Effect => "effect",
        }
    }
}

impl FromStr for SolveTarget {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "n" | "sample_size" | "sample-size" | "samplesize" => Ok(SolveTarget::SampleSize),
            "power" => Ok(SolveTarget::Power),
            "effect" | "mde" => Ok(SolveTarget::Effect),
            _ => Err(invalid(format!("solve target must be sample_size, power or effect, got `{s}`"))),
        }
    }
}

/// What to solve for. `n_fixed` is the design index: per-arm n for
/// multi-arm tests (arm 1; log-rank: nC), total n for single-sample tests.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolveRequest {
    pub spec: TestSpec,
    pub target: SolveTarget,
    pub power_goal: Option<Probability>,
    pub n_fixed: Option<u64>,
}

impl SolveRequest {
    pub fn sample_size(spec: TestSpec, power_goal: f64) -> Result<Self> {
        Ok(Self {
            spec,
            target: SolveTarget::SampleSize,
            power_goal: Some(Probability::new(power_goal)?),
            n_fixed: None,
        })
    }

    pub fn power(spec: TestSpec, n: u64) -> Self {
        Self { spec, target: SolveTarget::Power, power_goal: None, n_fixed: Some(n) }
    }

    pub fn effect(spec: TestSpec, n: u64, power_goal: f64) -> Result<Self> {
        Ok(Self {
            spec,
            target: SolveTarget::Effect,
            power_goal: Some(Probability::new(power_goal)?),
            n_fixed: Some(n),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveResult {
    pub test: TestKind,
    pub target: SolveTarget,
    pub n_per_arm: Vec<u64>,
    pub n_total: u64,
    pub achieved_power: f64,
    pub power_goal: Option<f64>,
    pub events_required: Option<u64>,
    /// Effect in the design's natural units (delta, f, w, r, p1 or hr).
    pub effect_solved: Option<f64>,
    pub formula_id: String,
    pub alpha: f64,
    pub tails: Tails,
}

impl SolveResult {
    /// The wire-compatible single `sample_size`: per-arm (first arm) for
    /// multi-arm tests, total for single-sample tests.
    pub fn compat_sample_size(&self) -> u64 {
        self.n_per_arm.first().copied().unwrap_or(self.n_total)
    }
}
