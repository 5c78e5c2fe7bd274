//! Named design inputs shared by the session grammar, the HTTP API and the CLI.
//!
//! Each test has an ordered input schema; [`build_spec`] turns a set of
//! named values into a validated [`TestSpec`] with field-level diagnostics.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::design::{
    AnovaDesign, ChiSquareDesign, CorrelationDesign, Covariate, CoxDesign, Design, MeanDesign, ProportionDesign,
    SolveTarget, SurvivalDesign, Tails, TestKind, TestSpec, DEFAULT_ALPHA, DEFAULT_ARE,
};
use crate::dist::Probability;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ParamKey {
    #[serde(rename = "delta")]
    Delta,
    #[serde(rename = "sd")]
    Sd,
    #[serde(rename = "ratio")]
    Ratio,
    #[serde(rename = "k")]
    K,
    #[serde(rename = "f")]
    F,
    #[serde(rename = "p0")]
    P0,
    #[serde(rename = "p1")]
    P1,
    #[serde(rename = "w")]
    W,
    #[serde(rename = "df")]
    Df,
    #[serde(rename = "r")]
    R,
    #[serde(rename = "hr")]
    Hr,
    #[serde(rename = "pE")]
    PE,
    #[serde(rename = "pC")]
    PC,
    #[serde(rename = "ratio_k")]
    RatioK,
    #[serde(rename = "exposure_prev")]
    ExposurePrev,
    #[serde(rename = "sigma")]
    Sigma,
    #[serde(rename = "psi")]
    Psi,
    #[serde(rename = "rho2")]
    Rho2,
    #[serde(rename = "are")]
    Are,
    #[serde(rename = "alpha")]
    Alpha,
    #[serde(rename = "tails")]
    Tails,
    #[serde(rename = "power")]
    Power,
}

impl ParamKey {
    pub const ALL: [ParamKey; 22] = [
        ParamKey::Delta,
        ParamKey::Sd,
        ParamKey::Ratio,
        ParamKey::K,
        ParamKey::F,
        ParamKey::P0,
        ParamKey::P1,
        ParamKey::W,
        ParamKey::Df,
        ParamKey::R,
        ParamKey::Hr,
        ParamKey::PE,
        ParamKey::PC,
        ParamKey::RatioK,
        ParamKey::ExposurePrev,
        ParamKey::Sigma,
        ParamKey::Psi,
        ParamKey::Rho2,
        ParamKey::Are,
        ParamKey::Alpha,
        ParamKey::Tails,
        ParamKey::Power,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ParamKey::Delta => "delta",
            ParamKey::Sd => "sd",
            ParamKey::Ratio => "ratio",
            ParamKey::K => "k",
            ParamKey::F => "f",
            ParamKey::P0 => "p0",
            ParamKey::P1 => "p1",
            ParamKey::W => "w",
            ParamKey::Df => "df",
            ParamKey::R => "r",
            ParamKey::Hr => "hr",
            ParamKey::PE => "pE",
            ParamKey::PC => "pC",
            ParamKey::RatioK => "ratio_k",
            ParamKey::ExposurePrev => "exposure_prev",
            ParamKey::Sigma => "sigma",
            ParamKey::Psi => "psi",
            ParamKey::Rho2 => "rho2",
            ParamKey::Are => "are",
            ParamKey::Alpha => "alpha",
            ParamKey::Tails => "tails",
            ParamKey::Power => "power",
        }
    }

    pub fn describe(self) -> &'static str {
        match self {
            ParamKey::Delta => "mean difference to detect, in outcome units",
            ParamKey::Sd => "standard deviation of the outcome (of differences, when paired)",
            ParamKey::Ratio => "allocation ratio n2/n1",
            ParamKey::K => "number of groups",
            ParamKey::F => "Cohen's f effect size",
            ParamKey::P0 => "baseline (null or control) proportion",
            ParamKey::P1 => "alternative (treatment) proportion",
            ParamKey::W => "Cohen's w effect size",
            ParamKey::Df => "degrees of freedom of the chi-square test",
            ParamKey::R => "correlation to detect",
            ParamKey::Hr => "hazard ratio, experimental over control",
            ParamKey::PE => "probability of an event in the experimental arm",
            ParamKey::PC => "probability of an event in the control arm",
            ParamKey::RatioK => "allocation ratio nE/nC",
            ParamKey::ExposurePrev => "prevalence of the binary exposure",
            ParamKey::Sigma => "standard deviation of the continuous covariate",
            ParamKey::Psi => "overall probability of an event",
            ParamKey::Rho2 => "R squared of the covariate on the other covariates",
            ParamKey::Are => "asymptotic relative efficiency of the rank test",
            ParamKey::Alpha => "significance level",
            ParamKey::Tails => "one- or two-sided test",
            ParamKey::Power => "desired power",
        }
    }

    /// Case-sensitive exact name first, then case-insensitive match and aliases.
    pub fn lookup(name: &str) -> Option<ParamKey> {
        if let Some(k) = ParamKey::ALL.into_iter().find(|k| k.name() == name) {
            return Some(k);
        }
        let lower = name.to_ascii_lowercase().replace('-', "_");
        if let Some(k) = ParamKey::ALL.into_iter().find(|k| k.name().to_ascii_lowercase() == lower) {
            return Some(k);
        }
        Some(match lower.as_str() {
            "baseline" | "control" | "p_control" => ParamKey::P0,
            "treatment" | "alternative" | "p_treatment" => ParamKey::P1,
            "difference" | "mean_difference" => ParamKey::Delta,
            "sigma_y" | "std" | "stdev" => ParamKey::Sd,
            "groups" | "n_groups" => ParamKey::K,
            "hazard_ratio" => ParamKey::Hr,
            "p_e" => ParamKey::PE,
            "p_c" => ParamKey::PC,
            "allocation" => ParamKey::Ratio,
            "prevalence" => ParamKey::ExposurePrev,
            "event_rate" => ParamKey::Psi,
            "correlation" => ParamKey::R,
            "significance" | "level" => ParamKey::Alpha,
            "sides" | "sided" => ParamKey::Tails,
            _ => return None,
        })
    }

    /// Closest canonical name by edit distance, for diagnostics.
    pub fn nearest(name: &str) -> &'static str {
        closest(name, ParamKey::ALL.into_iter().map(|k| k.name()).chain(["baseline", "absolute-risk-reduction"]))
            .unwrap_or("power")
    }
}

/// Candidate with the smallest case-insensitive edit distance to `name`.
pub fn closest<'a>(name: &str, candidates: impl IntoIterator<Item = &'a str>) -> Option<&'a str> {
    let lower = name.to_ascii_lowercase();
    candidates.into_iter().min_by_key(|cand| edit_distance(&lower, &cand.to_ascii_lowercase()))
}

impl fmt::Display for ParamKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

fn edit_distance(a: &str, b: &str) -> usize {
    let b: Vec<char> = b.chars().collect();
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    for (i, ca) in a.chars().enumerate() {
        let mut cur = Vec::with_capacity(b.len() + 1);
        cur.push(i + 1);
        for (j, cb) in b.iter().enumerate() {
            let sub = prev[j] + usize::from(ca != *cb);
            cur.push(sub.min(prev[j + 1] + 1).min(cur[j] + 1));
        }
        prev = cur;
    }
    prev[b.len()]
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ParamValue {
    Number(f64),
    Tails(Tails),
}

impl ParamValue {
    pub fn as_number(self) -> Option<f64> {
        match self {
            ParamValue::Number(v) => Some(v),
            ParamValue::Tails(_) => None,
        }
    }
}

impl fmt::Display for ParamValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParamValue::Number(v) => write!(f, "{v}"),
            ParamValue::Tails(t) => f.write_str(t.as_str()),
        }
    }
}

pub type ParamSet = BTreeMap<ParamKey, ParamValue>;

/// One checklist entry. Entries with several keys are satisfied by any one of them.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Field {
    pub keys: &'static [ParamKey],
    pub default: Option<ParamValue>,
}

impl Field {
    const fn required(keys: &'static [ParamKey]) -> Self {
        Self { keys, default: None }
    }

    const fn defaulted(keys: &'static [ParamKey], default: ParamValue) -> Self {
        Self { keys, default: Some(default) }
    }

    pub fn label(&self) -> String {
        let names: Vec<&str> = self.keys.iter().map(|k| k.name()).collect();
        let joined = names.join("|");
        match self.default {
            Some(d) => format!("{joined}({d})"),
            None => joined,
        }
    }

    pub fn is_satisfied(&self, known: &ParamSet) -> bool {
        self.keys.iter().any(|k| known.contains_key(k))
    }
}

use ParamKey as P;

const ALPHA: Field = Field::defaulted(&[P::Alpha], ParamValue::Number(DEFAULT_ALPHA));
const TAILS: Field = Field::defaulted(&[P::Tails], ParamValue::Tails(Tails::Two));
const POWER: Field = Field::required(&[P::Power]);
const RATIO: Field = Field::defaulted(&[P::Ratio], ParamValue::Number(1.0));
const ARE: Field = Field::defaulted(&[P::Are], ParamValue::Number(DEFAULT_ARE));
const DELTA: Field = Field::required(&[P::Delta]);
const SD: Field = Field::required(&[P::Sd]);

static ONE_SAMPLE_T: [Field; 5] = [DELTA, SD, ALPHA, TAILS, POWER];
static TWO_SAMPLE_T: [Field; 6] = [DELTA, SD, RATIO, ALPHA, TAILS, POWER];
static ANOVA: [Field; 4] = [Field::required(&[P::F]), Field::required(&[P::K]), ALPHA, POWER];
static ONE_PROPORTION: [Field; 5] = [Field::required(&[P::P0]), Field::required(&[P::P1]), ALPHA, TAILS, POWER];
static TWO_PROPORTIONS: [Field; 6] = [Field::required(&[P::P0]), Field::required(&[P::P1]), RATIO, ALPHA, TAILS, POWER];
static CHI_SQUARE: [Field; 4] = [Field::required(&[P::W]), Field::required(&[P::Df]), ALPHA, POWER];
static CORRELATION: [Field; 4] = [Field::required(&[P::R]), ALPHA, TAILS, POWER];
static MANN_WHITNEY: [Field; 7] = [DELTA, SD, RATIO, ARE, ALPHA, TAILS, POWER];
static PAIRED_WILCOXON: [Field; 6] = [DELTA, SD, ARE, ALPHA, TAILS, POWER];
static KRUSKAL_WALLIS: [Field; 5] = [Field::required(&[P::F]), Field::required(&[P::K]), ARE, ALPHA, POWER];
static LOG_RANK: [Field; 6] = [
    Field::required(&[P::Hr]),
    Field::required(&[P::PE]),
    Field::required(&[P::PC]),
    Field::defaulted(&[P::RatioK], ParamValue::Number(1.0)),
    ALPHA,
    POWER,
];
static COX_PH: [Field; 6] = [
    Field::required(&[P::Hr]),
    Field::required(&[P::ExposurePrev, P::Sigma]),
    Field::required(&[P::Psi]),
    Field::defaulted(&[P::Rho2], ParamValue::Number(0.0)),
    ALPHA,
    POWER,
];

/// Ordered input schema: effect, variability, allocation, then alpha, tails, power.
pub fn schema(kind: TestKind) -> &'static [Field] {
    match kind {
        TestKind::OneSampleT | TestKind::PairedT => &ONE_SAMPLE_T,
        TestKind::TwoSampleT => &TWO_SAMPLE_T,
        TestKind::OneWayAnova => &ANOVA,
        TestKind::OneProportionZ => &ONE_PROPORTION,
        TestKind::TwoProportionsZ => &TWO_PROPORTIONS,
        TestKind::ChiSquare => &CHI_SQUARE,
        TestKind::Correlation => &CORRELATION,
        TestKind::MannWhitney => &MANN_WHITNEY,
        TestKind::PairedWilcoxon => &PAIRED_WILCOXON,
        TestKind::KruskalWallis => &KRUSKAL_WALLIS,
        TestKind::LogRank => &LOG_RANK,
        TestKind::CoxPh => &COX_PH,
    }
}

/// Every key accepted by `kind`.
pub fn accepted_keys(kind: TestKind) -> impl Iterator<Item = ParamKey> {
    schema(kind).iter().flat_map(|f| f.keys.iter().copied())
}

/// Checklist entries of `kind` not satisfied by `known`. When solving for
/// power the power entry is not needed.
pub fn checklist_missing_for(kind: TestKind, known: &ParamSet, target: SolveTarget) -> Vec<Field> {
    schema(kind)
        .iter()
        .filter(|f| !f.is_satisfied(known))
        .filter(|f| !(target == SolveTarget::Power && f.keys == [ParamKey::Power]))
        .copied()
        .collect()
}

/// A problem with one named input.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FieldError {
    pub field: String,
    pub message: String,
}

impl FieldError {
    pub fn new(field: impl Into<String>, message: impl Into<String>) -> Self {
        Self { field: field.into(), message: message.into() }
    }
}

impl fmt::Display for FieldError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

/// Spec assembled from named inputs.
#[derive(Debug, Clone, PartialEq)]
pub struct BuiltSpec {
    pub spec: TestSpec,
    pub power: Option<f64>,
    /// Every input with defaults filled in, in schema order.
    pub resolved: ParamSet,
    pub defaults_applied: Vec<ParamKey>,
}

/// Builds a validated spec. When `need_power` is false a missing `power` is not an error.
pub fn build_spec(kind: TestKind, known: &ParamSet, need_power: bool) -> Result<BuiltSpec, Vec<FieldError>> {
    let mut errors = Vec::new();
    let mut resolved = ParamSet::new();
    let mut defaults_applied = Vec::new();

    for key in known.keys() {
        if !accepted_keys(kind).any(|k| k == *key) {
            errors.push(FieldError::new(key.name(), format!("not an input of {kind}")));
        }
    }
    for field in schema(kind) {
        let present: Vec<ParamKey> = field.keys.iter().copied().filter(|k| known.contains_key(k)).collect();
        match (present.len(), field.default) {
            (0, Some(d)) => {
                resolved.insert(field.keys[0], d);
                defaults_applied.push(field.keys[0]);
            }
            (0, None) => {
                if field.keys == [ParamKey::Power] && !need_power {
                    continue;
                }
                let label = field.keys.iter().map(|k| k.name()).collect::<Vec<_>>().join(" or ");
                errors.push(FieldError::new(label, "missing required field"));
            }
            (1, _) => {
                resolved.insert(present[0], known[&present[0]]);
            }
            _ => {
                let label = present.iter().map(|k| k.name()).collect::<Vec<_>>().join(", ");
                errors.push(FieldError::new(label, "exactly one of these may be given"));
            }
        }
    }
    if !errors.is_empty() {
        return Err(errors);
    }

    let num = |key: ParamKey, errors: &mut Vec<FieldError>| -> f64 {
        match resolved.get(&key).copied() {
            Some(ParamValue::Number(v)) if v.is_finite() => v,
            Some(_) => {
                errors.push(FieldError::new(key.name(), "must be a finite number"));
                f64::NAN
            }
            None => f64::NAN,
        }
    };
    let check = |key: ParamKey, ok: bool, msg: &str, errors: &mut Vec<FieldError>| {
        if !ok {
            errors.push(FieldError::new(key.name(), msg));
        }
    };
    let integer = |key: ParamKey, min: f64, errors: &mut Vec<FieldError>| -> u32 {
        let v = num(key, errors);
        if !(v >= min && v == libm::floor(v) && v <= u32::MAX as f64) {
            errors.push(FieldError::new(key.name(), format!("must be an integer >= {min}")));
            return min as u32;
        }
        v as u32
    };
    let in_open_unit = |v: f64| v > 0.0 && v < 1.0;

    let alpha = num(P::Alpha, &mut errors);
    check(P::Alpha, in_open_unit(alpha), "must lie in (0, 1)", &mut errors);
    let tails = match resolved.get(&P::Tails) {
        Some(ParamValue::Tails(t)) => *t,
        Some(ParamValue::Number(_)) => {
            errors.push(FieldError::new("tails", "must be `one` or `two`"));
            Tails::Two
        }
        None => Tails::Two,
    };
    let power = if resolved.contains_key(&P::Power) {
        let p = num(P::Power, &mut errors);
        check(P::Power, in_open_unit(p), "must lie in (0, 1)", &mut errors);
        if in_open_unit(alpha) && in_open_unit(p) && p <= alpha {
            errors.push(FieldError::new("power", "must exceed alpha"));
        }
        Some(p)
    } else {
        None
    };
    let are = if resolved.contains_key(&P::Are) {
        let a = num(P::Are, &mut errors);
        check(P::Are, a > 0.0 && a <= 2.0, "must lie in (0, 2]", &mut errors);
        a
    } else {
        DEFAULT_ARE
    };

    let design = match kind.design_family() {
        crate::design::DesignFamily::Mean => {
            let delta = num(P::Delta, &mut errors);
            let sd = num(P::Sd, &mut errors);
            check(P::Sd, sd > 0.0, "must be positive", &mut errors);
            let ratio = if resolved.contains_key(&P::Ratio) { num(P::Ratio, &mut errors) } else { 1.0 };
            check(P::Ratio, ratio > 0.0, "must be positive", &mut errors);
            Design::Mean(MeanDesign { delta, sd, ratio })
        }
        crate::design::DesignFamily::Anova => {
            let f = num(P::F, &mut errors);
            check(P::F, f >= 0.0, "must be nonnegative", &mut errors);
            let k = integer(P::K, 2.0, &mut errors);
            Design::Anova(AnovaDesign { k, f })
        }
        crate::design::DesignFamily::Proportion => {
            let p0 = num(P::P0, &mut errors);
            let p1 = num(P::P1, &mut errors);
            check(P::P0, in_open_unit(p0), "must lie in (0, 1)", &mut errors);
            check(P::P1, in_open_unit(p1), "must lie in (0, 1)", &mut errors);
            let ratio = if resolved.contains_key(&P::Ratio) { num(P::Ratio, &mut errors) } else { 1.0 };
            check(P::Ratio, ratio > 0.0, "must be positive", &mut errors);
            Design::Proportion(ProportionDesign { p0, p1, ratio })
        }
        crate::design::DesignFamily::ChiSquare => {
            let w = num(P::W, &mut errors);
            check(P::W, w >= 0.0, "must be nonnegative", &mut errors);
            let df = integer(P::Df, 1.0, &mut errors);
            Design::ChiSquare(ChiSquareDesign { w, df })
        }
        crate::design::DesignFamily::Correlation => {
            let r = num(P::R, &mut errors);
            check(P::R, r > -1.0 && r < 1.0, "must lie in (-1, 1)", &mut errors);
            Design::Correlation(CorrelationDesign { r })
        }
        crate::design::DesignFamily::Survival => {
            let hr = num(P::Hr, &mut errors);
            check(P::Hr, hr > 0.0, "must be positive", &mut errors);
            let p_e = num(P::PE, &mut errors);
            let p_c = num(P::PC, &mut errors);
            check(P::PE, p_e > 0.0 && p_e <= 1.0, "must lie in (0, 1]", &mut errors);
            check(P::PC, p_c > 0.0 && p_c <= 1.0, "must lie in (0, 1]", &mut errors);
            let ratio_k = num(P::RatioK, &mut errors);
            check(P::RatioK, ratio_k > 0.0, "must be positive", &mut errors);
            Design::Survival(SurvivalDesign { hr, p_e, p_c, ratio_k })
        }
        crate::design::DesignFamily::Cox => {
            let hr = num(P::Hr, &mut errors);
            check(P::Hr, hr > 0.0, "must be positive", &mut errors);
            let covariate = if resolved.contains_key(&P::ExposurePrev) {
                let v = num(P::ExposurePrev, &mut errors);
                check(P::ExposurePrev, in_open_unit(v), "must lie in (0, 1)", &mut errors);
                Covariate::Binary { prevalence: v }
            } else {
                let v = num(P::Sigma, &mut errors);
                check(P::Sigma, v > 0.0, "must be positive", &mut errors);
                Covariate::Continuous { sigma: v }
            };
            let psi = num(P::Psi, &mut errors);
            check(P::Psi, psi > 0.0 && psi <= 1.0, "must lie in (0, 1]", &mut errors);
            let rho2 = num(P::Rho2, &mut errors);
            check(P::Rho2, (0.0..1.0).contains(&rho2), "must lie in [0, 1)", &mut errors);
            Design::Cox(CoxDesign { hr, covariate, psi, rho2 })
        }
    };
    if !errors.is_empty() {
        return Err(errors);
    }
    let spec = TestSpec {
        kind,
        design,
        alpha: Probability::open(alpha).map_err(|e| alloc::vec![FieldError::new("alpha", e.to_string())])?,
        tails,
        are,
    };
    spec.validate().map_err(|e| alloc::vec![FieldError::new("test", e.to_string())])?;
    Ok(BuiltSpec { spec, power, resolved, defaults_applied })
}

/// Parses a number, accepting a trailing percent sign (`18%` is `0.18`).
///
/// Percentages are rescaled by moving the decimal point in the text, so
/// `"12.5%"` and `"0.125"` parse to the same `f64`.
pub fn parse_number(text: &str) -> Option<f64> {
    let t = text.trim();
    let v = match t.strip_suffix('%') {
        Some(body) => f64::from_str(&shift_decimal_left(body.trim())?).ok()?,
        None => f64::from_str(t).ok()?,
    };
    v.is_finite().then_some(v)
}

fn shift_decimal_left(body: &str) -> Option<String> {
    let (sign, digits) = match body.strip_prefix('-') {
        Some(rest) => ("-", rest),
        None => ("", body.strip_prefix('+').unwrap_or(body)),
    };
    let (int, frac) = digits.split_once('.').unwrap_or((digits, ""));
    if int.is_empty() && frac.is_empty() {
        return None;
    }
    if !int.chars().chain(frac.chars()).all(|c| c.is_ascii_digit()) {
        return None;
    }
    let padded = format!("{int:0>2}");
    let split = padded.len() - 2;
    let head = if split == 0 { "0" } else { &padded[..split] };
    Some(format!("{sign}{head}.{}{frac}", &padded[split..]))
}

/// Parses a value for `key` from text.
pub fn parse_value(key: ParamKey, text: &str) -> Option<ParamValue> {
    if key == ParamKey::Tails {
        return Tails::from_str(&text.to_ascii_lowercase()).ok().map(ParamValue::Tails);
    }
    parse_number(text).map(ParamValue::Number)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(pairs: &[(ParamKey, f64)]) -> ParamSet {
        pairs.iter().map(|&(k, v)| (k, ParamValue::Number(v))).collect()
    }

    #[test]
    fn checklist_labels_follow_schema_order() {
        let labels: Vec<String> = schema(TestKind::TwoSampleT).iter().map(Field::label).collect();
        assert_eq!(labels, ["delta", "sd", "ratio(1)", "alpha(0.05)", "tails(two)", "power"]);
        let labels: Vec<String> = schema(TestKind::LogRank).iter().map(Field::label).collect();
        assert_eq!(labels, ["hr", "pE", "pC", "ratio_k(1)", "alpha(0.05)", "power"]);
    }

    #[test]
    fn build_reports_missing_fields() {
        let errs = build_spec(TestKind::TwoSampleT, &set(&[(P::Delta, 1.5)]), true).unwrap_err();
        let fields: Vec<&str> = errs.iter().map(|e| e.field.as_str()).collect();
        assert_eq!(fields, ["sd", "power"]);
    }

    #[test]
    fn build_applies_defaults() {
        let built =
            build_spec(TestKind::TwoSampleT, &set(&[(P::Delta, 1.5), (P::Sd, 0.5), (P::Power, 0.8)]), true).unwrap();
        assert_eq!(built.defaults_applied, [P::Ratio, P::Alpha, P::Tails]);
        assert_eq!(built.power, Some(0.8));
        assert_eq!(built.spec.alpha(), 0.05);
    }

    #[test]
    fn build_rejects_foreign_and_out_of_range() {
        let errs = build_spec(
            TestKind::OneSampleT,
            &set(&[(P::Delta, 1.0), (P::Sd, 1.0), (P::Power, 1.2), (P::Hr, 2.0)]),
            true,
        )
        .unwrap_err();
        assert!(errs.iter().any(|e| e.field == "hr"));
        let errs = build_spec(TestKind::OneSampleT, &set(&[(P::Delta, 1.0), (P::Sd, 1.0), (P::Power, 1.2)]), true)
            .unwrap_err();
        assert_eq!(errs[0].field, "power");
    }

    #[test]
    fn cox_needs_exactly_one_covariate_scale() {
        let base = [(P::Hr, 2.0), (P::Psi, 0.5), (P::Power, 0.8)];
        let mut both = set(&base);
        both.insert(P::ExposurePrev, ParamValue::Number(0.5));
        both.insert(P::Sigma, ParamValue::Number(1.0));
        assert!(build_spec(TestKind::CoxPh, &both, true).is_err());
        let mut one = set(&base);
        one.insert(P::Sigma, ParamValue::Number(1.0));
        assert!(build_spec(TestKind::CoxPh, &one, true).is_ok());
    }

    #[test]
    fn percent_and_aliases() {
        assert_eq!(parse_number("18%"), Some(0.18));
        assert_eq!(parse_number("0.18"), Some(0.18));
        assert_eq!(parse_number("abc"), None);
        assert_eq!(parse_number("12.345%"), parse_number("0.12345"));
        assert_eq!(parse_number("4%"), Some(0.04));
        assert_eq!(parse_number("150%"), Some(1.5));
        assert_eq!(parse_number("-0.5%"), Some(-0.005));
        assert_eq!(parse_number("%"), None);
        assert_eq!(ParamKey::lookup("baseline"), Some(P::P0));
        assert_eq!(ParamKey::lookup("PE"), Some(P::PE));
        assert_eq!(ParamKey::lookup("powr"), None);
        assert_eq!(ParamKey::nearest("powr"), "power");
        assert_eq!(ParamKey::nearest("sigmma"), "sigma");
    }
}
