//! Per-test endpoint registry, strict request parsing and the response shape.
//!
//! The HTTP service and the CLI both go through [`handle`], so the same
//! inputs produce the same response and the same diagnostics.

use powerkit_core::design::{SolveRequest, SolveTarget, TestKind};
use powerkit_core::dist::Probability;
use powerkit_core::params::{accepted_keys, build_spec, closest, schema, FieldError, ParamKey, ParamSet, ParamValue};
use powerkit_core::{power, Error};
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

/// Request field selecting what to solve for.
pub const TARGET: &str = "target";
/// Request field holding the fixed design index for power and effect solves.
pub const N: &str = "n";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Endpoint {
    pub name: &'static str,
    pub test: TestKind,
    pub summary: &'static str,
}

pub const ENDPOINTS: [Endpoint; 13] = [
    Endpoint { name: "one_sample_t_test", test: TestKind::OneSampleT, summary: "One-sample t test against a constant" },
    Endpoint { name: "two_sample_t_test", test: TestKind::TwoSampleT, summary: "Two-sample pooled t test" },
    Endpoint { name: "paired_t_test", test: TestKind::PairedT, summary: "Paired t test on within-pair differences" },
    Endpoint { name: "one_way_anova", test: TestKind::OneWayAnova, summary: "One-way ANOVA F test with Cohen's f" },
    Endpoint { name: "one_proportion_z_test", test: TestKind::OneProportionZ, summary: "One-proportion z test" },
    Endpoint { name: "two_proportions_z_test", test: TestKind::TwoProportionsZ, summary: "Two-proportion z test" },
    Endpoint { name: "chi_square_test", test: TestKind::ChiSquare, summary: "Chi-square test with Cohen's w" },
    Endpoint {
        name: "correlation_test",
        test: TestKind::Correlation,
        summary: "Pearson correlation test via Fisher's z",
    },
    Endpoint { name: "mann_whitney", test: TestKind::MannWhitney, summary: "Mann-Whitney rank-sum test" },
    Endpoint { name: "paired_wilcoxon", test: TestKind::PairedWilcoxon, summary: "Wilcoxon signed-rank test on pairs" },
    Endpoint { name: "kruskal_wallis", test: TestKind::KruskalWallis, summary: "Kruskal-Wallis rank test" },
    Endpoint { name: "log_rank_test", test: TestKind::LogRank, summary: "Log-rank test (Freedman events-to-subjects)" },
    Endpoint { name: "cox_ph", test: TestKind::CoxPh, summary: "Cox proportional hazards score test" },
];

pub fn endpoint(name: &str) -> Option<&'static Endpoint> {
    ENDPOINTS.iter().find(|e| e.name == name)
}

pub fn endpoint_for(test: TestKind) -> &'static Endpoint {
    ENDPOINTS.iter().find(|e| e.test == test).expect("every test has an endpoint")
}

/// Looks up a test id (`two_sample_t`) or an endpoint name (`two_sample_t_test`).
pub fn resolve(name: &str) -> Option<&'static Endpoint> {
    endpoint(name).or_else(|| ENDPOINTS.iter().find(|e| e.test.id() == name))
}

/// A complete request for each endpoint.
pub fn example_request(test: TestKind) -> Value {
    match test {
        TestKind::OneSampleT => json!({"delta": 8, "sd": 20, "power": 0.8}),
        TestKind::TwoSampleT => json!({"delta": 1.5, "sd": 0.5, "power": 0.8}),
        TestKind::PairedT => json!({"delta": 3, "sd": 6, "power": 0.8}),
        TestKind::OneWayAnova => json!({"f": 0.25, "k": 3, "power": 0.8}),
        TestKind::OneProportionZ => json!({"p0": 0.3, "p1": 0.45, "power": 0.8}),
        TestKind::TwoProportionsZ => json!({"p0": 0.18, "p1": 0.14, "power": 0.8}),
        TestKind::ChiSquare => json!({"w": 0.3, "df": 2, "power": 0.8}),
        TestKind::Correlation => json!({"r": 0.3, "power": 0.8}),
        TestKind::MannWhitney => json!({"delta": 0.5, "sd": 1, "power": 0.8}),
        TestKind::PairedWilcoxon => json!({"delta": 0.5, "sd": 1, "power": 0.8}),
        TestKind::KruskalWallis => json!({"f": 0.25, "k": 3, "power": 0.8}),
        TestKind::LogRank => json!({"hr": 2, "pE": 0.5, "pC": 0.7, "power": 0.9}),
        TestKind::CoxPh => json!({"hr": 0.7, "exposure_prev": 0.5, "psi": 0.4, "power": 0.8}),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ApiRequest {
    pub params: ParamSet,
    pub target: SolveTarget,
    pub n: Option<u64>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ApiError {
    /// Malformed, missing, unknown or out-of-range fields.
    Invalid(Vec<FieldError>),
    /// Well-formed inputs whose goal cannot be met.
    Unreachable(String),
}

impl ApiError {
    pub fn status(&self) -> u16 {
        match self {
            ApiError::Invalid(_) => 400,
            ApiError::Unreachable(_) => 422,
        }
    }

    pub fn body(&self) -> Value {
        match self {
            ApiError::Invalid(errors) => json!({"error": "invalid_request", "errors": errors}),
            ApiError::Unreachable(message) => json!({"error": "unreachable", "message": message}),
        }
    }

    /// One `field: message` line per diagnostic.
    pub fn lines(&self) -> Vec<String> {
        match self {
            ApiError::Invalid(errors) => errors.iter().map(|e| format!("{}: {}", e.field, e.message)).collect(),
            ApiError::Unreachable(message) => vec![format!("unreachable: {message}")],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApiResponse {
    pub test: TestKind,
    pub target: SolveTarget,
    /// Per arm for multi-arm tests, total for single-sample tests; sample-size solves only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sample_size: Option<u64>,
    pub n_per_arm: Vec<u64>,
    pub n_total: u64,
    pub achieved_power: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub events_required: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub effect_solved: Option<f64>,
    pub formula_id: String,
    /// Every input used, defaults included, in checklist order.
    pub inputs: Map<String, Value>,
    pub defaults_applied: Vec<String>,
}

fn invalid(field: impl Into<String>, message: impl Into<String>) -> FieldError {
    FieldError::new(field, message)
}

fn canonical_key(name: &str) -> Option<ParamKey> {
    ParamKey::ALL.into_iter().find(|k| k.name() == name)
}

/// Parses a flat JSON object. Every problem is reported, not just the first.
pub fn parse_request(test: TestKind, body: &Value) -> Result<ApiRequest, ApiError> {
    let Some(object) = body.as_object() else {
        return Err(ApiError::Invalid(vec![invalid("body", "must be a JSON object")]));
    };
    let mut errors = Vec::new();
    let mut params = ParamSet::new();
    let mut target = SolveTarget::SampleSize;
    let mut n = None;
    for (name, value) in object {
        match name.as_str() {
            TARGET => match value.as_str().map(str::parse::<SolveTarget>) {
                Some(Ok(t)) => target = t,
                _ => errors.push(invalid(TARGET, "must be one of sample_size, power, effect")),
            },
            N => match value.as_u64() {
                Some(v) if v >= 1 => n = Some(v),
                _ => errors.push(invalid(N, "must be a positive integer")),
            },
            _ => match canonical_key(name).filter(|k| accepted_keys(test).any(|a| a == *k)) {
                Some(ParamKey::Tails) => match value.as_str().and_then(|s| s.parse().ok()) {
                    Some(t) => {
                        params.insert(ParamKey::Tails, ParamValue::Tails(t));
                    }
                    None => errors.push(invalid(name.as_str(), "must be `one` or `two`")),
                },
                Some(key) => match value.as_f64() {
                    Some(v) => {
                        params.insert(key, ParamValue::Number(v));
                    }
                    None => errors.push(invalid(name.as_str(), "must be a number")),
                },
                None if canonical_key(name).is_some() => {
                    errors.push(invalid(name.as_str(), format!("does not apply to {test}")));
                }
                None => {
                    let names = accepted_keys(test).map(|k| k.name()).chain([TARGET, N]);
                    let hint = closest(name, names).unwrap_or(TARGET);
                    errors.push(invalid(name.as_str(), format!("unknown field for {test}; did you mean `{hint}`?")));
                }
            },
        }
    }
    if errors.is_empty() {
        Ok(ApiRequest { params, target, n })
    } else {
        Err(ApiError::Invalid(errors))
    }
}

/// Parses raw request bytes.
pub fn parse_body(test: TestKind, bytes: &[u8]) -> Result<(Value, ApiRequest), ApiError> {
    let value: Value = serde_json::from_slice(bytes)
        .map_err(|e| ApiError::Invalid(vec![invalid("body", format!("invalid JSON: {e}"))]))?;
    let request = parse_request(test, &value)?;
    Ok((value, request))
}

fn echo(key: ParamKey, value: ParamValue) -> Value {
    match (key, value) {
        (ParamKey::K | ParamKey::Df, ParamValue::Number(v)) => json!(v as u64),
        (_, ParamValue::Number(v)) => json!(v),
        (_, ParamValue::Tails(t)) => json!(t.as_str()),
    }
}

fn engine_error(test: TestKind, e: Error) -> ApiError {
    match e {
        Error::Unreachable(m) => ApiError::Unreachable(m),
        Error::NonConvergence { .. } | Error::Bracket(_) => ApiError::Unreachable(e.to_string()),
        Error::BelowMinimum { min, .. } => {
            ApiError::Invalid(vec![invalid(N, format!("must be at least {min} for {test}"))])
        }
        Error::InvalidSpec(m) | Error::Domain(m) | Error::Unsupported(m) => {
            ApiError::Invalid(vec![invalid("inputs", m)])
        }
    }
}

/// Solves a parsed request.
pub fn solve(test: TestKind, request: &ApiRequest) -> Result<ApiResponse, ApiError> {
    let mut errors = Vec::new();
    match (request.target, request.n) {
        (SolveTarget::SampleSize, Some(_)) => errors.push(invalid(N, "only applies when target is power or effect")),
        (SolveTarget::Power | SolveTarget::Effect, None) => {
            errors.push(invalid(N, format!("required when target is {}", request.target.as_str())))
        }
        _ => {}
    }
    if request.target == SolveTarget::Power && request.params.contains_key(&ParamKey::Power) {
        errors.push(invalid("power", "is the solved quantity when target is power; omit it"));
    }
    let built = build_spec(test, &request.params, request.target != SolveTarget::Power);
    let built = match built {
        Ok(b) if errors.is_empty() => b,
        Ok(_) => return Err(ApiError::Invalid(errors)),
        Err(mut more) => {
            errors.append(&mut more);
            return Err(ApiError::Invalid(errors));
        }
    };
    let power_goal = match built.power.map(Probability::new) {
        Some(Ok(p)) => Some(p),
        Some(Err(e)) => return Err(ApiError::Invalid(vec![invalid("power", e.to_string())])),
        None => None,
    };
    let solve_request = SolveRequest { spec: built.spec, target: request.target, power_goal, n_fixed: request.n };
    let result = power::solve(&solve_request).map_err(|e| engine_error(test, e))?;

    let mut inputs = Map::new();
    for field in schema(test) {
        for key in field.keys {
            if let Some(v) = built.resolved.get(key) {
                inputs.insert(key.name().to_owned(), echo(*key, *v));
            }
        }
    }
    if let Some(n) = request.n {
        inputs.insert(N.to_owned(), json!(n));
    }
    Ok(ApiResponse {
        test,
        target: result.target,
        sample_size: (result.target == SolveTarget::SampleSize).then(|| result.compat_sample_size()),
        n_per_arm: result.n_per_arm.clone(),
        n_total: result.n_total,
        achieved_power: result.achieved_power,
        events_required: result.events_required,
        effect_solved: result.effect_solved,
        formula_id: result.formula_id,
        inputs,
        defaults_applied: built.defaults_applied.iter().map(|k| k.name().to_owned()).collect(),
    })
}

/// Parses and solves one request body.
pub fn handle(test: TestKind, body: &Value) -> Result<ApiResponse, ApiError> {
    solve(test, &parse_request(test, body)?)
}

/// The exact bytes the service returns for a successful solve.
pub fn response_text(response: &ApiResponse) -> String {
    serde_json::to_string(response).expect("responses serialize")
}
