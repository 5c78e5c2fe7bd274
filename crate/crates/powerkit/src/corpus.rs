//! Scenario corpus: one JSON record per line, blank lines and `#` comments skipped.

use std::fmt;
use std::path::Path;
use std::time::{Duration, Instant};

use powerkit_core::design::TestKind;
use powerkit_core::select::{select, StudyDescriptor};
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::api;

/// The reconstructed eight-scenario corpus shipped with the crate.
pub const BUNDLED: &str = include_str!("../data/scenarios.jsonl");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub id: String,
    pub prose: String,
    pub descriptor: StudyDescriptor,
    pub expected_test: TestKind,
    /// Per arm for multi-arm tests, total for single-sample tests.
    pub expected_n: u64,
    /// Request fields for the expected test's endpoint.
    pub params: Map<String, Value>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CorpusError {
    /// 1-based line number; 0 when the file could not be read.
    pub line: usize,
    pub message: String,
}

impl fmt::Display for CorpusError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.line == 0 {
            write!(f, "corpus: {}", self.message)
        } else {
            write!(f, "corpus line {}: {}", self.line, self.message)
        }
    }
}

impl std::error::Error for CorpusError {}

/// Parses corpus text. Records must be well formed, have unique ids and
/// carry a complete request for their expected test.
pub fn parse(text: &str) -> Result<Vec<Scenario>, CorpusError> {
    let mut out: Vec<Scenario> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fail = |message: String| CorpusError { line: i + 1, message };
        let s: Scenario = serde_json::from_str(line).map_err(|e| fail(e.to_string()))?;
        if out.iter().any(|o| o.id == s.id) {
            return Err(fail(format!("duplicate id `{}`", s.id)));
        }
        api::parse_request(s.expected_test, &Value::Object(s.params.clone()))
            .map_err(|e| fail(format!("params: {}", e.lines().join("; "))))?;
        out.push(s);
    }
    if out.is_empty() {
        return Err(CorpusError { line: 0, message: "no scenarios".into() });
    }
    Ok(out)
}

/// Reads a corpus file, or the bundled corpus when `path` is `None`.
pub fn load(path: Option<&Path>) -> Result<Vec<Scenario>, CorpusError> {
    match path {
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| CorpusError { line: 0, message: format!("{}: {e}", p.display()) })?;
            parse(&text)
        }
        None => parse(BUNDLED),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Outcome {
    pub id: String,
    pub expected_test: TestKind,
    pub selected: Option<TestKind>,
    pub expected_n: u64,
    pub n: Option<u64>,
    pub note: Option<String>,
    #[serde(skip)]
    pub elapsed: Duration,
}

impl Outcome {
    pub fn test_ok(&self) -> bool {
        self.selected == Some(self.expected_test)
    }

    /// A wrong test selection makes the sample size wrong as well.
    pub fn n_ok(&self) -> bool {
        self.test_ok() && self.n == Some(self.expected_n)
    }
}

/// Selects a test from the descriptor and solves the scenario with it.
pub fn run(s: &Scenario) -> Outcome {
    let start = Instant::now();
    let mut outcome = Outcome {
        id: s.id.clone(),
        expected_test: s.expected_test,
        selected: None,
        expected_n: s.expected_n,
        n: None,
        note: None,
        elapsed: Duration::ZERO,
    };
    match select(&s.descriptor) {
        Ok(rec) => {
            outcome.selected = Some(rec.test);
            match api::handle(rec.test, &Value::Object(s.params.clone())) {
                Ok(r) => outcome.n = r.sample_size,
                Err(e) => outcome.note = Some(e.lines().join("; ")),
            }
        }
        Err(e) => outcome.note = Some(e.to_string()),
    }
    outcome.elapsed = start.elapsed();
    outcome
}
