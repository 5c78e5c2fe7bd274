//! Decision tree from a structured study description to a recommended test.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::design::TestKind;
use crate::params::{schema, Field, ParamSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Continuous,
    Binary,
    TimeToEvent,
    Correlation,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Pairing {
    #[default]
    Independent,
    Paired,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Comparison {
    VsConstant,
    BetweenGroups,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Assumption {
    Parametric,
    Nonparametric,
    #[default]
    Unspecified,
}

macro_rules! keyword_enum {
    ($ty:ty { $($variant:ident => $word:literal),+ $(,)? }) => {
        impl $ty {
            pub fn as_str(self) -> &'static str {
                match self { $(Self::$variant => $word),+ }
            }
        }
        impl FromStr for $ty {
            type Err = String;
            fn from_str(s: &str) -> Result<Self, String> {
                match s { $($word => Ok(Self::$variant),)+ _ => Err(format!("unknown value `{s}`")) }
            }
        }
        impl fmt::Display for $ty {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result { f.write_str(self.as_str()) }
        }
    };
}

keyword_enum!(Outcome { Continuous => "continuous", Binary => "binary", TimeToEvent => "time_to_event", Correlation => "correlation" });
keyword_enum!(Pairing { Independent => "independent", Paired => "paired" });
keyword_enum!(Comparison { VsConstant => "vs_constant", BetweenGroups => "between_groups" });
keyword_enum!(Assumption { Parametric => "parametric", Nonparametric => "nonparametric", Unspecified => "unspecified" });

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct StudyDescriptor {
    pub outcome: Outcome,
    pub n_groups: u32,
    pub pairing: Pairing,
    pub comparison: Comparison,
    pub distribution_assumption: Assumption,
    pub covariate_adjusted: bool,
}

impl StudyDescriptor {
    /// Descriptor with the comparison implied by the group count and other fields at their defaults.
    pub fn new(outcome: Outcome, n_groups: u32) -> Self {
        Self {
            outcome,
            n_groups,
            pairing: Pairing::Independent,
            comparison: if n_groups <= 1 { Comparison::VsConstant } else { Comparison::BetweenGroups },
            distribution_assumption: Assumption::Unspecified,
            covariate_adjusted: false,
        }
    }

    pub fn paired(mut self) -> Self {
        self.pairing = Pairing::Paired;
        self
    }

    pub fn assuming(mut self, a: Assumption) -> Self {
        self.distribution_assumption = a;
        self
    }

    pub fn adjusted(mut self, yes: bool) -> Self {
        self.covariate_adjusted = yes;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SelectError {
    #[error("incoherent study description: {0}")]
    Incoherent(String),
}

/// Checks field combinations; the error names the offending combination.
pub fn check_coherent(d: &StudyDescriptor) -> Result<(), SelectError> {
    let bad = |msg: &str| Err(SelectError::Incoherent(msg.into()));
    if d.n_groups == 0 {
        return bad("n_groups must be at least 1");
    }
    if d.covariate_adjusted && d.outcome != Outcome::TimeToEvent {
        return bad("covariate adjustment is only modelled for time-to-event outcomes");
    }
    if d.pairing == Pairing::Paired && d.n_groups > 2 {
        return bad("paired designs need one or two groups (repeated measures are not supported)");
    }
    match (d.n_groups, d.comparison) {
        (1, Comparison::BetweenGroups) => return bad("a single group cannot be compared between groups"),
        (n, Comparison::VsConstant) if n > 1 => {
            return bad("several groups are compared between groups, not against a constant")
        }
        _ => {}
    }
    match d.outcome {
        Outcome::Correlation if d.n_groups != 1 || d.pairing == Pairing::Paired => {
            bad("a correlation is measured within one independent sample")
        }
        Outcome::Binary if d.pairing == Pairing::Paired => bad("paired binary outcomes (McNemar) are not supported"),
        Outcome::TimeToEvent if d.pairing == Pairing::Paired => bad("paired survival designs are not supported"),
        Outcome::TimeToEvent if d.n_groups > 2 => bad("survival comparisons of more than two arms are not supported"),
        Outcome::TimeToEvent if d.n_groups == 1 && !d.covariate_adjusted => {
            bad("a single-cohort survival design needs a covariate of interest (covariate_adjusted)")
        }
        _ => Ok(()),
    }
}

/// A recommended test with its rationale and open inputs.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Recommendation {
    pub test: TestKind,
    pub rationale: String,
    pub required_params: Vec<Field>,
    pub alternatives: Vec<TestKind>,
}

/// Recommends a test for `d`.
pub fn select(d: &StudyDescriptor) -> Result<Recommendation, SelectError> {
    select_with_known(d, &ParamSet::new())
}

/// Like [`select`], leaving already-known inputs out of the checklist.
pub fn select_with_known(d: &StudyDescriptor, known: &ParamSet) -> Result<Recommendation, SelectError> {
    check_coherent(d)?;
    let nonparametric = d.distribution_assumption == Assumption::Nonparametric;
    let rank_alternative = d.distribution_assumption == Assumption::Unspecified;

    let (parametric, rank, why) = match (d.outcome, d.n_groups, d.pairing) {
        (Outcome::Continuous, _, Pairing::Paired) => (
            TestKind::PairedT,
            TestKind::PairedWilcoxon,
            "a continuous outcome measured on matched pairs is analysed through the within-pair differences",
        ),
        (Outcome::Continuous, 1, _) => (
            TestKind::OneSampleT,
            TestKind::PairedWilcoxon,
            "a single continuous sample is compared with a reference value",
        ),
        (Outcome::Continuous, 2, _) => (
            TestKind::TwoSampleT,
            TestKind::MannWhitney,
            "two independent groups with a continuous outcome are compared on their means",
        ),
        (Outcome::Continuous, _, _) => (
            TestKind::OneWayAnova,
            TestKind::KruskalWallis,
            "three or more independent groups with a continuous outcome call for a one-way ANOVA",
        ),
        (Outcome::Binary, 1, _) => {
            return Ok(recommend(
                TestKind::OneProportionZ,
                "a single proportion is compared with a reference value",
                vec![],
                known,
            ))
        }
        (Outcome::Binary, 2, _) => {
            return Ok(recommend(
                TestKind::TwoProportionsZ,
                "two independent groups with a binary outcome are compared on their proportions",
                vec![TestKind::ChiSquare],
                known,
            ))
        }
        (Outcome::Binary, _, _) => {
            return Ok(recommend(
                TestKind::ChiSquare,
                "proportions across three or more groups are compared with a chi-square test",
                vec![],
                known,
            ))
        }
        (Outcome::TimeToEvent, _, _) => {
            return Ok(if d.covariate_adjusted {
                recommend(
                    TestKind::CoxPh,
                    "time-to-event data with covariate adjustment are modelled with Cox proportional hazards",
                    if d.n_groups == 2 { vec![TestKind::LogRank] } else { vec![] },
                    known,
                )
            } else {
                recommend(
                    TestKind::LogRank,
                    "an unadjusted comparison of two survival curves uses the log-rank test",
                    vec![TestKind::CoxPh],
                    known,
                )
            })
        }
        (Outcome::Correlation, _, _) => {
            return Ok(recommend(
                TestKind::Correlation,
                "the association between two continuous measurements is tested through their correlation",
                vec![],
                known,
            ))
        }
    };

    Ok(if nonparametric {
        recommend(
            rank,
            &format!("{why}; without a normality assumption the rank-based counterpart is used"),
            vec![parametric],
            known,
        )
    } else {
        let alternatives = if rank_alternative { vec![rank] } else { vec![] };
        recommend(parametric, why, alternatives, known)
    })
}

fn recommend(test: TestKind, why: &str, alternatives: Vec<TestKind>, known: &ParamSet) -> Recommendation {
    Recommendation {
        test,
        rationale: format!("{why}: recommended test is {test}."),
        required_params: checklist_missing(test, known),
        alternatives,
    }
}

/// Ordered input checklist for `test`.
pub fn checklist(test: TestKind) -> Vec<Field> {
    schema(test).to_vec()
}

/// Checklist entries not yet satisfied by `known`.
pub fn checklist_missing(test: TestKind, known: &ParamSet) -> Vec<Field> {
    schema(test).iter().filter(|f| !f.is_satisfied(known)).copied().collect()
}

/// Checklist for a test named by id.
pub fn checklist_by_id(id: &str) -> Result<Vec<Field>, crate::Error> {
    Ok(checklist(TestKind::from_str(id)?))
}

/// Every coherent descriptor with at most `max_groups` groups.
pub fn coherent_descriptors(max_groups: u32) -> Vec<StudyDescriptor> {
    let mut out = Vec::new();
    for outcome in [Outcome::Continuous, Outcome::Binary, Outcome::TimeToEvent, Outcome::Correlation] {
        for n_groups in 1..=max_groups {
            for pairing in [Pairing::Independent, Pairing::Paired] {
                for comparison in [Comparison::VsConstant, Comparison::BetweenGroups] {
                    for distribution_assumption in
                        [Assumption::Parametric, Assumption::Nonparametric, Assumption::Unspecified]
                    {
                        for covariate_adjusted in [false, true] {
                            let d = StudyDescriptor {
                                outcome,
                                n_groups,
                                pairing,
                                comparison,
                                distribution_assumption,
                                covariate_adjusted,
                            };
                            if check_coherent(&d).is_ok() {
                                out.push(d);
                            }
                        }
                    }
                }
            }
        }
    }
    out
}
