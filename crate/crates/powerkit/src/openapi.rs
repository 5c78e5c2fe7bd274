//! OpenAPI 3.1 document generated from the endpoint registry and the input schemas.

use powerkit_core::design::TestKind;
use powerkit_core::params::{schema, ParamKey, ParamValue};
use serde_json::{json, Map, Value};

use crate::api::{example_request, ENDPOINTS, N, TARGET};

pub const PATH_PREFIX: &str = "/api/v1";

/// JSON Schema of one input.
pub fn param_schema(key: ParamKey, default: Option<ParamValue>) -> Value {
    use ParamKey as P;
    let mut s = match key {
        P::Tails => json!({"type": "string", "enum": ["one", "two"]}),
        P::K => json!({"type": "integer", "minimum": 2}),
        P::Df => json!({"type": "integer", "minimum": 1}),
        P::Delta => json!({"type": "number"}),
        P::Sd | P::Ratio | P::Hr | P::RatioK | P::Sigma => json!({"type": "number", "exclusiveMinimum": 0}),
        P::F | P::W => json!({"type": "number", "minimum": 0}),
        P::P0 | P::P1 | P::ExposurePrev | P::Alpha | P::Power => {
            json!({"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1})
        }
        P::R => json!({"type": "number", "exclusiveMinimum": -1, "exclusiveMaximum": 1}),
        P::PE | P::PC | P::Psi => json!({"type": "number", "exclusiveMinimum": 0, "maximum": 1}),
        P::Rho2 => json!({"type": "number", "minimum": 0, "exclusiveMaximum": 1}),
        P::Are => json!({"type": "number", "exclusiveMinimum": 0, "maximum": 2}),
    };
    s["description"] = json!(key.describe());
    if let Some(d) = default {
        s["default"] = match d {
            ParamValue::Number(v) if matches!(key, P::K | P::Df) => json!(v as u64),
            ParamValue::Number(v) => json!(v),
            ParamValue::Tails(t) => json!(t.as_str()),
        };
    }
    s
}

fn target_is(value: &str) -> Value {
    json!({"properties": {TARGET: {"const": value}}, "required": [TARGET]})
}

/// Strict request schema of one test.
pub fn request_schema(test: TestKind) -> Value {
    let mut properties = Map::new();
    let mut required = Vec::new();
    let mut choices = Vec::new();
    for field in schema(test) {
        for key in field.keys {
            properties.insert(key.name().to_owned(), param_schema(*key, field.default));
        }
        match (field.keys, field.default) {
            ([ParamKey::Power], _) | (_, Some(_)) => {}
            ([key], None) => required.push(json!(key.name())),
            (keys, None) => choices.extend(keys.iter().map(|k| json!({"required": [k.name()]}))),
        }
    }
    properties.insert(
        TARGET.to_owned(),
        json!({"type": "string", "enum": ["sample_size", "power", "effect"], "default": "sample_size",
               "description": "quantity to solve for"}),
    );
    properties.insert(
        N.to_owned(),
        json!({"type": "integer", "minimum": 1,
               "description": "fixed sample size (per arm for multi-arm tests; control arm for log-rank) for power and effect solves"}),
    );
    let mut rules = vec![
        json!({"if": target_is("power"), "then": {"required": [N], "not": {"required": ["power"]}}, "else": {"required": ["power"]}}),
        json!({"if": target_is("effect"), "then": {"required": [N]}}),
        json!({"if": {"anyOf": [{"not": {"required": [TARGET]}}, target_is("sample_size")]}, "then": {"not": {"required": [N]}}}),
    ];
    if !choices.is_empty() {
        rules.push(json!({"oneOf": choices}));
    }
    json!({
        "type": "object",
        "properties": properties,
        "required": required,
        "additionalProperties": false,
        "allOf": rules,
    })
}

fn solve_response_schema() -> Value {
    let ids: Vec<&str> = TestKind::ALL.iter().map(|k| k.id()).collect();
    json!({
        "type": "object",
        "properties": {
            "test": {"type": "string", "enum": ids},
            "target": {"type": "string", "enum": ["sample_size", "power", "effect"]},
            "sample_size": {"type": "integer", "minimum": 1,
                            "description": "per arm for multi-arm tests, total for single-sample tests; present on sample-size solves"},
            "n_per_arm": {"type": "array", "items": {"type": "integer", "minimum": 1}, "minItems": 1},
            "n_total": {"type": "integer", "minimum": 1},
            "achieved_power": {"type": "number", "minimum": 0, "maximum": 1},
            "events_required": {"type": "integer", "minimum": 0},
            "effect_solved": {"type": "number"},
            "formula_id": {"type": "string"},
            "inputs": {"type": "object", "description": "every input used, defaults included"},
            "defaults_applied": {"type": "array", "items": {"type": "string"}},
        },
        "required": ["test", "target", "n_per_arm", "n_total", "achieved_power", "formula_id", "inputs", "defaults_applied"],
        "additionalProperties": false,
    })
}

fn schema_ref(name: &str) -> Value {
    json!({"$ref": format!("#/components/schemas/{name}")})
}

fn json_body(name: &str) -> Value {
    json!({"content": {"application/json": {"schema": schema_ref(name)}}})
}

fn described(description: &str, name: &str) -> Value {
    let mut v = json_body(name);
    v["description"] = json!(description);
    v
}

fn with_location(mut response: Value, what: &str) -> Value {
    response["headers"] =
        json!({"Location": {"description": format!("URL of the {what}"), "schema": {"type": "string"}}});
    response
}

fn id_parameter(what: &str) -> Value {
    json!([{"name": "id", "in": "path", "required": true, "description": format!("{what} id"), "schema": {"type": "string"}}])
}

/// Component name of a test's request schema.
pub fn request_schema_name(test: TestKind) -> String {
    let camel: String = test
        .id()
        .split('_')
        .map(|w| {
            let mut c = w.chars();
            c.next().map(|f| f.to_ascii_uppercase().to_string() + c.as_str()).unwrap_or_default()
        })
        .collect();
    format!("{camel}Request")
}

/// The full document.
pub fn document() -> Value {
    let mut paths = Map::new();
    let mut schemas = Map::new();
    for e in &ENDPOINTS {
        let name = request_schema_name(e.test);
        schemas.insert(name.clone(), request_schema(e.test));
        let mut body = json_body(&name);
        body["required"] = json!(true);
        body["content"]["application/json"]["example"] = example_request(e.test);
        paths.insert(
            format!("{PATH_PREFIX}/{}", e.name),
            json!({"post": {
                "operationId": e.name,
                "summary": e.summary,
                "tags": ["compute"],
                "requestBody": body,
                "responses": {
                    "200": with_location(described("solved design; stored in the result log", "SolveResponse"), "stored result"),
                    "400": described("malformed, missing, unknown or out-of-range fields", "ValidationError"),
                    "422": described("the requested power cannot be reached", "Problem"),
                },
            }}),
        );
    }
    schemas.insert("SolveResponse".into(), solve_response_schema());
    schemas.insert(
        "FieldError".into(),
        json!({"type": "object", "properties": {"field": {"type": "string"}, "message": {"type": "string"}},
               "required": ["field", "message"], "additionalProperties": false}),
    );
    schemas.insert(
        "ValidationError".into(),
        json!({"type": "object", "properties": {"error": {"const": "invalid_request"},
               "errors": {"type": "array", "items": schema_ref("FieldError"), "minItems": 1}},
               "required": ["error", "errors"]}),
    );
    schemas.insert(
        "Problem".into(),
        json!({"type": "object", "properties": {"error": {"type": "string"}, "message": {"type": "string"},
               "expired_at": {"type": "integer", "description": "unix seconds; expired sessions only"}},
               "required": ["error", "message"]}),
    );
    schemas.insert(
        "Health".into(),
        json!({"type": "object", "properties": {"status": {"type": "string"}, "version": {"type": "string"},
               "endpoints": {"type": "integer"}, "scenarios": {"type": "integer"}},
               "required": ["status", "version", "endpoints", "scenarios"]}),
    );
    schemas.insert(
        "Session".into(),
        json!({"type": "object", "properties": {"id": {"type": "string"}, "expires_at": {"type": "integer"},
               "state": {"type": "object", "description": "known inputs, pending checklist, chosen test and history"}},
               "required": ["id", "expires_at", "state"]}),
    );
    schemas.insert(
        "CommandRequest".into(),
        json!({"type": "object", "properties": {"text": {"type": "string",
               "description": "a command line (describe, choose, set, unset, solve, whatif, explain, export) or free text for the model client"}},
               "required": ["text"], "additionalProperties": false}),
    );
    schemas.insert(
        "CommandResponse".into(),
        json!({"type": "object", "properties": {
               "session_id": {"type": "string"}, "command": {"type": "string"},
               "notice": {"type": ["string", "null"]}, "reply": {"type": "object"},
               "result_id": {"type": ["string", "null"]}, "expires_at": {"type": "integer"}},
               "required": ["session_id", "command", "reply", "expires_at"]}),
    );
    schemas.insert(
        "StoredResult".into(),
        json!({"type": "object", "properties": {
               "id": {"type": "string"}, "timestamp": {"type": "integer"}, "endpoint": {"type": "string"},
               "session_id": {"type": ["string", "null"]}, "request": {}, "response": {}},
               "required": ["id", "timestamp", "endpoint", "session_id", "request", "response"]}),
    );

    paths.insert(
        format!("{PATH_PREFIX}/health"),
        json!({"get": {"operationId": "health", "summary": "Version and registered endpoint count",
                        "responses": {"200": described("service is ready", "Health")}}}),
    );
    paths.insert(
        format!("{PATH_PREFIX}/openapi.json"),
        json!({"get": {"operationId": "openapi", "summary": "This document",
                        "responses": {"200": {"description": "OpenAPI 3.1 document", "content": {"application/json": {}}}}}}),
    );
    paths.insert(
        format!("{PATH_PREFIX}/sessions"),
        json!({"post": {"operationId": "create_session", "summary": "Start an elicitation session",
                         "responses": {"201": with_location(described("new session", "Session"), "session")}}}),
    );
    paths.insert(
        format!("{PATH_PREFIX}/sessions/{{id}}"),
        json!({"get": {"operationId": "get_session", "summary": "Current session state",
                        "parameters": id_parameter("session"),
                        "responses": {"200": described("session state", "Session"),
                                      "404": described("unknown session", "Problem"),
                                      "410": described("expired session", "Problem")}}}),
    );
    paths.insert(
        format!("{PATH_PREFIX}/sessions/{{id}}/command"),
        json!({"post": {"operationId": "session_command", "summary": "Apply one command to a session",
                         "parameters": id_parameter("session"),
                         "requestBody": {"required": true, "content": {"application/json": {"schema": schema_ref("CommandRequest"),
                                         "example": {"text": "set absolute-risk-reduction 4%"}}}},
                         "responses": {"200": described("reply of the session state machine", "CommandResponse"),
                                       "400": described("the text is not a command", "ValidationError"),
                                       "404": described("unknown session", "Problem"),
                                       "410": described("expired session", "Problem")}}}),
    );
    paths.insert(
        format!("{PATH_PREFIX}/results/{{id}}"),
        json!({"get": {"operationId": "get_result", "summary": "A stored result, served without recomputation",
                        "parameters": id_parameter("result"),
                        "responses": {"200": described("stored request/response pair", "StoredResult"),
                                      "404": described("unknown result", "Problem")}}}),
    );

    json!({
        "openapi": "3.1.0",
        "jsonSchemaDialect": "https://json-schema.org/draft/2020-12/schema",
        "info": {
            "title": "powerkit",
            "version": env!("CARGO_PKG_VERSION"),
            "description": "Statistical power and sample-size calculations, one endpoint per test.",
        },
        "paths": paths,
        "components": {"schemas": schemas},
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn schema_names() {
        assert_eq!(request_schema_name(TestKind::TwoSampleT), "TwoSampleTRequest");
        assert_eq!(request_schema_name(TestKind::CoxPh), "CoxPhRequest");
    }

    #[test]
    fn cox_needs_one_covariate_scale() {
        let s = request_schema(TestKind::CoxPh);
        let rules = s["allOf"].as_array().unwrap();
        assert_eq!(rules.last().unwrap()["oneOf"].as_array().unwrap().len(), 2);
        assert_eq!(s["required"], json!(["hr", "psi"]));
    }
}
