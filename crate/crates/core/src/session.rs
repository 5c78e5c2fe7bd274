//! Elicitation state machine, command grammar and model-client boundary.
//!
//! [`apply`] is a pure transition: the same state, command and timestamp
//! always give the same next state and reply, so a session can be rebuilt
//! by folding its history over a fresh state (see [`replay`]).

use alloc::borrow::ToOwned;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::fmt::{self, Write as _};
use core::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::design::{SolveRequest, SolveResult, SolveTarget, TestKind};
use crate::params::{build_spec, checklist_missing_for, parse_number, parse_value, ParamKey, ParamSet, ParamValue};
use crate::select::{select_with_known, Assumption, Comparison, Outcome, Pairing, StudyDescriptor};

/// Study description as collected so far; unset fields are `None`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DescriptorPatch {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub outcome: Option<Outcome>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_groups: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pairing: Option<Pairing>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub comparison: Option<Comparison>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub distribution_assumption: Option<Assumption>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub covariate_adjusted: Option<bool>,
}

impl DescriptorPatch {
    fn merge(&mut self, other: &DescriptorPatch) {
        macro_rules! take {
            ($($f:ident),*) => { $(if other.$f.is_some() { self.$f = other.$f; })* };
        }
        take!(outcome, n_groups, pairing, comparison, distribution_assumption, covariate_adjusted);
    }

    /// Complete descriptor, or the first missing field.
    pub fn complete(&self) -> Result<StudyDescriptor, &'static str> {
        let outcome = self.outcome.ok_or("outcome")?;
        let n_groups = match (self.n_groups, outcome) {
            (Some(n), _) => n,
            (None, Outcome::Correlation) => 1,
            (None, _) => return Err("groups"),
        };
        let mut d = StudyDescriptor::new(outcome, n_groups);
        if let Some(p) = self.pairing {
            d.pairing = p;
        }
        if let Some(c) = self.comparison {
            d.comparison = c;
        }
        if let Some(a) = self.distribution_assumption {
            d.distribution_assumption = a;
        }
        if let Some(c) = self.covariate_adjusted {
            d.covariate_adjusted = c;
        }
        Ok(d)
    }

    fn is_empty(&self) -> bool {
        *self == DescriptorPatch::default()
    }
}

/// One parameter update.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Assignment {
    Param {
        key: ParamKey,
        value: ParamValue,
    },
    /// `p1 = p0 - amount`.
    RiskReduction {
        amount: f64,
    },
    /// `p1 = p0 + amount`.
    RiskIncrease {
        amount: f64,
    },
}

pub const RISK_REDUCTION: &str = "absolute-risk-reduction";
pub const RISK_INCREASE: &str = "absolute-risk-increase";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verb", rename_all = "snake_case")]
pub enum Command {
    Describe(DescriptorPatch),
    Choose {
        test: TestKind,
    },
    Set {
        assignments: Vec<Assignment>,
    },
    Unset {
        keys: Vec<ParamKey>,
    },
    Solve {
        target: SolveTarget,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        at: Option<u64>,
    },
    Whatif {
        assignments: Vec<Assignment>,
    },
    Explain,
    Export,
}

pub const VERBS: [&str; 8] = ["describe", "choose", "set", "unset", "solve", "whatif", "explain", "export"];

impl fmt::Display for Assignment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Assignment::Param { key, value } => write!(f, "{key} {value}"),
            Assignment::RiskReduction { amount } => write!(f, "{RISK_REDUCTION} {amount}"),
            Assignment::RiskIncrease { amount } => write!(f, "{RISK_INCREASE} {amount}"),
        }
    }
}

fn write_assignments(f: &mut fmt::Formatter<'_>, list: &[Assignment]) -> fmt::Result {
    for (i, a) in list.iter().enumerate() {
        f.write_str(if i == 0 { " " } else { ", " })?;
        write!(f, "{a}")?;
    }
    Ok(())
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Command::Describe(p) => {
                f.write_str("describe")?;
                if let Some(o) = p.outcome {
                    write!(f, " outcome={o}")?;
                }
                if let Some(n) = p.n_groups {
                    write!(f, " groups={n}")?;
                }
                if let Some(v) = p.pairing {
                    write!(f, " pairing={v}")?;
                }
                if let Some(v) = p.comparison {
                    write!(f, " comparison={v}")?;
                }
                if let Some(v) = p.distribution_assumption {
                    write!(f, " assumption={v}")?;
                }
                if let Some(v) = p.covariate_adjusted {
                    write!(f, " adjusted={v}")?;
                }
                Ok(())
            }
            Command::Choose { test } => write!(f, "choose {test}"),
            Command::Set { assignments } => {
                f.write_str("set")?;
                write_assignments(f, assignments)
            }
            Command::Unset { keys } => {
                f.write_str("unset")?;
                for k in keys {
                    write!(f, " {k}")?;
                }
                Ok(())
            }
            Command::Solve { target, at } => {
                let word = match target {
                    SolveTarget::SampleSize => "n",
                    t => t.as_str(),
                };
                write!(f, "solve {word}")?;
                match at {
                    Some(n) => write!(f, " at {n}"),
                    None => Ok(()),
                }
            }
            Command::Whatif { assignments } => {
                f.write_str("whatif")?;
                write_assignments(f, assignments)
            }
            Command::Explain => f.write_str("explain"),
            Command::Export => f.write_str("export"),
        }
    }
}

/// Parse failure with byte offset into the input and what would have been accepted there.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParseError {
    pub position: usize,
    pub message: String,
    pub expected: Vec<String>,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "at position {}: {}", self.position, self.message)?;
        if !self.expected.is_empty() {
            write!(f, " (expected one of: {})", self.expected.join(", "))?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Word(String),
    Number(String),
    Eq,
    Comma,
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    pos: usize,
}

fn tokenize(text: &str) -> Result<Vec<Token>, ParseError> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        let start = i;
        if c.is_ascii_whitespace() {
            i += 1;
        } else if c == b'=' || c == b':' {
            out.push(Token { tok: Tok::Eq, pos: start });
            i += 1;
        } else if c == b',' || c == b';' {
            out.push(Token { tok: Tok::Comma, pos: start });
            i += 1;
        } else if c.is_ascii_alphabetic() || c == b'_' {
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_' || bytes[i] == b'-') {
                i += 1;
            }
            out.push(Token { tok: Tok::Word(text[start..i].to_owned()), pos: start });
        } else if c.is_ascii_digit() || c == b'.' || c == b'-' || c == b'+' {
            i += 1;
            while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
                i += 1;
            }
            if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                let mut j = i + 1;
                if j < bytes.len() && (bytes[j] == b'-' || bytes[j] == b'+') {
                    j += 1;
                }
                if j < bytes.len() && bytes[j].is_ascii_digit() {
                    i = j;
                    while i < bytes.len() && bytes[i].is_ascii_digit() {
                        i += 1;
                    }
                }
            }
            if i < bytes.len() && bytes[i] == b'%' {
                i += 1;
            }
            let lexeme = &text[start..i];
            if parse_number(lexeme).is_none() {
                return Err(ParseError {
                    position: start,
                    message: format!("malformed number `{lexeme}`"),
                    expected: vec!["number".into()],
                });
            }
            out.push(Token { tok: Tok::Number(lexeme.to_owned()), pos: start });
        } else {
            let ch = text[start..].chars().next().unwrap_or('?');
            return Err(ParseError {
                position: start,
                message: format!("unexpected character `{ch}`"),
                expected: vec!["word".into(), "number".into()],
            });
        }
    }
    Ok(out)
}

struct Parser {
    tokens: Vec<Token>,
    idx: usize,
    end: usize,
}

fn strings(list: &[&str]) -> Vec<String> {
    list.iter().map(|s| (*s).to_owned()).collect()
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.tokens.get(self.idx).map(|t| &t.tok)
    }

    fn pos(&self) -> usize {
        self.tokens.get(self.idx).map_or(self.end, |t| t.pos)
    }

    fn fail<T>(&self, message: impl Into<String>, expected: &[&str]) -> Result<T, ParseError> {
        Err(ParseError { position: self.pos(), message: message.into(), expected: strings(expected) })
    }

    fn next(&mut self) -> Option<Tok> {
        let t = self.tokens.get(self.idx).map(|t| t.tok.clone());
        self.idx += 1;
        t
    }

    fn eat(&mut self, tok: &Tok) -> bool {
        if self.peek() == Some(tok) {
            self.idx += 1;
            true
        } else {
            false
        }
    }

    fn word(&mut self, expected: &[&str]) -> Result<String, ParseError> {
        match self.peek() {
            Some(Tok::Word(w)) => {
                let w = w.clone();
                self.idx += 1;
                Ok(w)
            }
            Some(_) => self.fail("expected a word", expected),
            None => self.fail("unexpected end of input", expected),
        }
    }

    fn number(&mut self) -> Result<f64, ParseError> {
        match self.peek() {
            Some(Tok::Number(n)) => {
                let v = parse_number(n).unwrap_or(f64::NAN);
                self.idx += 1;
                Ok(v)
            }
            Some(_) => self.fail("expected a number", &["number"]),
            None => self.fail("unexpected end of input", &["number"]),
        }
    }

    fn integer(&mut self) -> Result<u64, ParseError> {
        let pos = self.pos();
        let v = self.number()?;
        if v >= 1.0 && v == libm::floor(v) && v <= 1e15 {
            Ok(v as u64)
        } else {
            Err(ParseError {
                position: pos,
                message: format!("expected a positive integer, got {v}"),
                expected: strings(&["integer"]),
            })
        }
    }

    fn finish(&self) -> Result<(), ParseError> {
        if self.idx < self.tokens.len() {
            return self.fail("unexpected trailing input", &["end of input"]);
        }
        Ok(())
    }

    fn command(&mut self) -> Result<Command, ParseError> {
        let verb = self.word(&VERBS)?.to_ascii_lowercase();
        let cmd = match verb.as_str() {
            "describe" => Command::Describe(self.describe()?),
            "choose" | "use" => {
                let pos = self.pos();
                let w = self.word(&["test id"])?;
                let test = TestKind::from_str(&w.to_ascii_lowercase()).map_err(|_| ParseError {
                    position: pos,
                    message: format!("unknown test `{w}`"),
                    expected: TestKind::ALL.iter().map(|k| k.id().to_owned()).collect(),
                })?;
                Command::Choose { test }
            }
            "set" => Command::Set { assignments: self.assignments()? },
            "whatif" | "what-if" => Command::Whatif { assignments: self.assignments()? },
            "unset" => {
                let mut keys = vec![self.param_key()?];
                while self.peek().is_some() {
                    self.eat(&Tok::Comma);
                    keys.push(self.param_key()?);
                }
                Command::Unset { keys }
            }
            "solve" => {
                let pos = self.pos();
                let target = match self.peek() {
                    None => SolveTarget::SampleSize,
                    Some(_) => {
                        let w = self.word(&["n", "power", "effect"])?;
                        SolveTarget::from_str(&w.to_ascii_lowercase()).map_err(|_| ParseError {
                            position: pos,
                            message: format!("unknown solve target `{w}`"),
                            expected: strings(&["n", "power", "effect"]),
                        })?
                    }
                };
                let at = match self.peek() {
                    Some(Tok::Word(w)) if w.eq_ignore_ascii_case("at") || w.eq_ignore_ascii_case("n") => {
                        self.idx += 1;
                        self.eat(&Tok::Eq);
                        Some(self.integer()?)
                    }
                    None => None,
                    Some(_) => return self.fail("unexpected input after solve target", &["at", "end of input"]),
                };
                Command::Solve { target, at }
            }
            "explain" => Command::Explain,
            "export" => Command::Export,
            other => {
                self.idx -= 1;
                return self.fail(format!("unknown command `{other}`"), &VERBS);
            }
        };
        self.finish()?;
        Ok(cmd)
    }

    fn param_key(&mut self) -> Result<ParamKey, ParseError> {
        let pos = self.pos();
        let name = self.word(&["parameter name"])?;
        lookup_key(&name, pos)
    }

    fn assignments(&mut self) -> Result<Vec<Assignment>, ParseError> {
        let mut out = vec![self.assignment()?];
        while self.peek().is_some() {
            self.eat(&Tok::Comma);
            out.push(self.assignment()?);
        }
        Ok(out)
    }

    fn assignment(&mut self) -> Result<Assignment, ParseError> {
        let pos = self.pos();
        let name = self.word(&["parameter name"])?;
        let lower = name.to_ascii_lowercase().replace('_', "-");
        let derived = match lower.as_str() {
            "absolute-risk-reduction" | "arr" | "risk-reduction" => Some(true),
            "absolute-risk-increase" | "ari" | "risk-increase" => Some(false),
            _ => None,
        };
        self.eat(&Tok::Eq);
        if let Some(reduction) = derived {
            let amount = self.number()?;
            return Ok(if reduction {
                Assignment::RiskReduction { amount }
            } else {
                Assignment::RiskIncrease { amount }
            });
        }
        let key = lookup_key(&name, pos)?;
        let value = if key == ParamKey::Tails {
            let vpos = self.pos();
            let w = match self.next() {
                Some(Tok::Word(w)) | Some(Tok::Number(w)) => w,
                _ => {
                    return Err(ParseError {
                        position: vpos,
                        message: "expected tails".into(),
                        expected: strings(&["one", "two"]),
                    })
                }
            };
            match crate::design::Tails::from_str(&w.to_ascii_lowercase()) {
                Ok(t) => ParamValue::Tails(t),
                Err(_) => {
                    return Err(ParseError {
                        position: vpos,
                        message: format!("invalid tails `{w}`"),
                        expected: strings(&["one", "two"]),
                    })
                }
            }
        } else {
            ParamValue::Number(self.number()?)
        };
        Ok(Assignment::Param { key, value })
    }

    fn describe(&mut self) -> Result<DescriptorPatch, ParseError> {
        let mut p = DescriptorPatch::default();
        const WORDS: [&str; 12] = [
            "continuous",
            "binary",
            "time_to_event",
            "correlation",
            "paired",
            "independent",
            "parametric",
            "nonparametric",
            "adjusted",
            "unadjusted",
            "groups=<n>",
            "<n> groups",
        ];
        while let Some(tok) = self.peek().cloned() {
            let pos = self.pos();
            match tok {
                Tok::Comma => {
                    self.idx += 1;
                }
                Tok::Number(_) => {
                    p.n_groups = Some(self.group_count()?);
                    if let Some(Tok::Word(w)) = self.peek() {
                        if matches!(
                            w.to_ascii_lowercase().as_str(),
                            "group" | "groups" | "arm" | "arms" | "sample" | "samples"
                        ) {
                            self.idx += 1;
                        }
                    }
                }
                Tok::Word(w) => {
                    self.idx += 1;
                    let key = w.to_ascii_lowercase().replace('-', "_");
                    if self.eat(&Tok::Eq) {
                        let vpos = self.pos();
                        let value = match key.as_str() {
                            "groups" | "n_groups" | "arms" => {
                                p.n_groups = Some(self.group_count()?);
                                continue;
                            }
                            _ => self.word(&["value"])?.to_ascii_lowercase().replace('-', "_"),
                        };
                        let bad = |expected: &[&str]| ParseError {
                            position: vpos,
                            message: format!("invalid value `{value}` for `{w}`"),
                            expected: strings(expected),
                        };
                        match key.as_str() {
                            "outcome" => {
                                p.outcome =
                                    Some(outcome_word(&value).ok_or_else(|| {
                                        bad(&["continuous", "binary", "time_to_event", "correlation"])
                                    })?)
                            }
                            "pairing" => {
                                p.pairing =
                                    Some(Pairing::from_str(&value).map_err(|_| bad(&["independent", "paired"]))?)
                            }
                            "comparison" => {
                                p.comparison = Some(
                                    Comparison::from_str(&value)
                                        .map_err(|_| bad(&["vs_constant", "between_groups"]))?,
                                )
                            }
                            "assumption" | "distribution_assumption" | "distribution" => {
                                p.distribution_assumption = Some(
                                    Assumption::from_str(&value)
                                        .map_err(|_| bad(&["parametric", "nonparametric", "unspecified"]))?,
                                )
                            }
                            "adjusted" | "covariate_adjusted" => {
                                p.covariate_adjusted = Some(match value.as_str() {
                                    "true" | "yes" => true,
                                    "false" | "no" => false,
                                    _ => return Err(bad(&["true", "false"])),
                                })
                            }
                            _ => {
                                return Err(ParseError {
                                    position: pos,
                                    message: format!("unknown descriptor field `{w}`"),
                                    expected: strings(&[
                                        "outcome",
                                        "groups",
                                        "pairing",
                                        "comparison",
                                        "assumption",
                                        "adjusted",
                                    ]),
                                })
                            }
                        }
                        continue;
                    }
                    if let Some(o) = outcome_word(&key) {
                        p.outcome = Some(o);
                        continue;
                    }
                    match key.as_str() {
                        "paired" | "matched" => p.pairing = Some(Pairing::Paired),
                        "independent" => p.pairing = Some(Pairing::Independent),
                        "parametric" | "normal" => p.distribution_assumption = Some(Assumption::Parametric),
                        "nonparametric" | "non_parametric" | "rank" => {
                            p.distribution_assumption = Some(Assumption::Nonparametric)
                        }
                        "unspecified" => p.distribution_assumption = Some(Assumption::Unspecified),
                        "adjusted" | "covariate_adjusted" => p.covariate_adjusted = Some(true),
                        "unadjusted" => p.covariate_adjusted = Some(false),
                        "vs_constant" => p.comparison = Some(Comparison::VsConstant),
                        "between_groups" => p.comparison = Some(Comparison::BetweenGroups),
                        "one_sample" | "single" => p.n_groups = Some(1),
                        "two_sample" | "two_arm" | "two_group" => p.n_groups = Some(2),
                        _ => {
                            self.idx -= 1;
                            return self.fail(format!("unknown study attribute `{w}`"), &WORDS);
                        }
                    }
                }
                Tok::Eq => return self.fail("unexpected `=`", &WORDS),
            }
        }
        if p.is_empty() {
            return self.fail("describe needs at least one study attribute", &WORDS);
        }
        Ok(p)
    }

    fn group_count(&mut self) -> Result<u32, ParseError> {
        let pos = self.pos();
        let n = self.integer()?;
        u32::try_from(n).map_err(|_| ParseError {
            position: pos,
            message: "group count too large".into(),
            expected: strings(&["integer"]),
        })
    }
}

fn lookup_key(name: &str, pos: usize) -> Result<ParamKey, ParseError> {
    ParamKey::lookup(name).ok_or_else(|| {
        let nearest = ParamKey::nearest(name);
        ParseError {
            position: pos,
            message: format!("unknown parameter `{name}`; did you mean `{nearest}`?"),
            expected: vec![nearest.to_owned()],
        }
    })
}

fn outcome_word(w: &str) -> Option<Outcome> {
    Some(match w {
        "continuous" | "numeric" => Outcome::Continuous,
        "binary" | "proportion" | "dichotomous" => Outcome::Binary,
        "time_to_event" | "survival" => Outcome::TimeToEvent,
        "correlation" | "association" => Outcome::Correlation,
        _ => return None,
    })
}

/// Parses one command line.
pub fn parse_command(text: &str) -> Result<Command, ParseError> {
    let tokens = tokenize(text)?;
    let mut p = Parser { tokens, idx: 0, end: text.len() };
    p.command()
}

impl FromStr for Command {
    type Err = ParseError;
    fn from_str(s: &str) -> Result<Self, ParseError> {
        parse_command(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReplyStatus {
    Ok,
    NeedsInput,
    Invalid,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Reply {
    pub status: ReplyStatus,
    /// Plain-language account of what happened and why.
    pub explanation: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub prompt: Option<String>,
    pub pending: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub result: Option<SolveResult>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub transcript: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistoryEntry {
    pub at: u64,
    pub command: Command,
    pub reply: Reply,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionState {
    pub id: String,
    pub descriptor: DescriptorPatch,
    pub chosen_test: Option<TestKind>,
    pub alternatives: Vec<TestKind>,
    pub rationale: Option<String>,
    pub known_params: ParamSet,
    /// Checklist entries still missing for the current solve target.
    pub pending: Vec<String>,
    pub target: SolveTarget,
    pub solve_at: Option<u64>,
    pub history: Vec<HistoryEntry>,
    pub created: u64,
    pub updated: u64,
}

impl SessionState {
    pub fn new(id: impl Into<String>, now: u64) -> Self {
        Self {
            id: id.into(),
            descriptor: DescriptorPatch::default(),
            chosen_test: None,
            alternatives: Vec::new(),
            rationale: None,
            known_params: ParamSet::new(),
            pending: Vec::new(),
            target: SolveTarget::SampleSize,
            solve_at: None,
            history: Vec::new(),
            created: now,
            updated: now,
        }
    }

    pub fn last_result(&self) -> Option<&SolveResult> {
        self.history.iter().rev().find_map(|h| h.reply.result.as_ref())
    }

    fn missing_fields(&self) -> Vec<crate::params::Field> {
        match self.chosen_test {
            Some(test) => checklist_missing_for(test, &self.known_params, self.target),
            None => Vec::new(),
        }
    }

    fn refresh_pending(&mut self) {
        self.pending = self.missing_fields().iter().map(|f| f.label()).collect();
    }

    /// The question to ask next, if any input is still needed.
    pub fn next_prompt(&self) -> Option<String> {
        if self.chosen_test.is_none() {
            return Some(match self.descriptor.complete() {
                Err("outcome") | Ok(_) => {
                    "What kind of outcome is measured (continuous, binary, time_to_event or correlation)?".into()
                }
                Err(_) => "How many groups are compared?".into(),
            });
        }
        let missing = self.missing_fields();
        let field = missing.iter().find(|f| f.default.is_none())?;
        let key = field.keys[0];
        let mut prompt = format!("Please provide {key} ({})", key.describe());
        for alt in &field.keys[1..] {
            let _ = write!(prompt, " or {alt} ({})", alt.describe());
        }
        prompt.push('.');
        Some(prompt)
    }
}

fn reply(state: &SessionState, status: ReplyStatus, explanation: String) -> Reply {
    Reply {
        status,
        explanation,
        prompt: state.next_prompt(),
        pending: state.pending.clone(),
        result: None,
        transcript: None,
    }
}

fn fmt_params(params: &ParamSet) -> String {
    let parts: Vec<String> = params.iter().map(|(k, v)| format!("{k}={v}")).collect();
    parts.join(", ")
}

fn round_derived(v: f64) -> f64 {
    libm::round(v * 1e12) / 1e12
}

/// Applies assignments left to right; on error nothing is changed.
fn assign(state: &mut SessionState, assignments: &[Assignment]) -> Result<Vec<String>, String> {
    let mut params = state.known_params.clone();
    let mut notes = Vec::new();
    for a in assignments {
        let (key, value) = match *a {
            Assignment::Param { key, value } => (key, value),
            Assignment::RiskReduction { amount } | Assignment::RiskIncrease { amount } => {
                let sign = if matches!(a, Assignment::RiskReduction { .. }) { -1.0 } else { 1.0 };
                let Some(p0) = params.get(&ParamKey::P0).and_then(|v| v.as_number()) else {
                    return Err("set the baseline proportion p0 before an absolute risk change".into());
                };
                let p1 = round_derived(p0 + sign * amount);
                notes.push(format!("p1 = p0 {} {amount} = {p1}", if sign < 0.0 { "-" } else { "+" }));
                (ParamKey::P1, ParamValue::Number(p1))
            }
        };
        if let Some(test) = state.chosen_test {
            if !crate::params::accepted_keys(test).any(|k| k == key) {
                return Err(format!("{key} is not an input of {test}"));
            }
        }
        match key {
            ParamKey::ExposurePrev => {
                params.remove(&ParamKey::Sigma);
            }
            ParamKey::Sigma => {
                params.remove(&ParamKey::ExposurePrev);
            }
            _ => {}
        }
        if let Some(old) = params.insert(key, value) {
            if old != value {
                notes.push(format!("{key} changed from {old} to {value}"));
            }
        }
    }
    state.known_params = params;
    state.refresh_pending();
    Ok(notes)
}

fn adopt_test(state: &mut SessionState, test: TestKind) -> Vec<ParamKey> {
    state.chosen_test = Some(test);
    let dropped: Vec<ParamKey> =
        state.known_params.keys().copied().filter(|k| !crate::params::accepted_keys(test).any(|a| a == *k)).collect();
    for k in &dropped {
        state.known_params.remove(k);
    }
    state.refresh_pending();
    dropped
}

fn describe_result(state: &SessionState, r: &SolveResult, defaults: &[ParamKey]) -> String {
    let mut s = format!("Using {} with {}", r.test, fmt_params(&state.known_params));
    if !defaults.is_empty() {
        let names: Vec<&str> = defaults.iter().map(|k| k.name()).collect();
        let _ = write!(s, " (defaults applied: {})", names.join(", "));
    }
    s.push_str(": ");
    let arms = if r.n_per_arm.len() > 1 {
        let list: Vec<String> = r.n_per_arm.iter().map(|n| n.to_string()).collect();
        format!("{} per arm ({} in total)", list.join(" / "), r.n_total)
    } else {
        format!("{} in total", r.n_total)
    };
    match r.target {
        SolveTarget::SampleSize => {
            let _ = write!(
                s,
                "the smallest sample size reaching the target power is {arms}, with power {:.4}",
                r.achieved_power
            );
        }
        SolveTarget::Power => {
            let _ = write!(s, "with {arms} the power is {:.4}", r.achieved_power);
        }
        SolveTarget::Effect => {
            let _ = write!(
                s,
                "with {arms} the smallest detectable effect is {:.6}, with power {:.4}",
                r.effect_solved.unwrap_or(f64::NAN),
                r.achieved_power
            );
        }
    }
    if let Some(e) = r.events_required {
        let _ = write!(s, "; {e} events are required");
    }
    let _ = write!(s, ". Formula: {}.", r.formula_id);
    s
}

fn run_solve(state: &mut SessionState, target: SolveTarget, at: Option<u64>) -> Reply {
    let Some(test) = state.chosen_test else {
        return reply(
            state,
            ReplyStatus::Invalid,
            "No test chosen yet; describe the study or choose a test first.".into(),
        );
    };
    if target != SolveTarget::SampleSize && at.is_none() {
        return reply(
            state,
            ReplyStatus::Invalid,
            format!(
                "Solving for {} needs a fixed sample size, e.g. `solve {} at 100`.",
                target.as_str(),
                target.as_str()
            ),
        );
    }
    state.target = target;
    state.solve_at = if target == SolveTarget::SampleSize { None } else { at };
    state.refresh_pending();
    let missing = state.missing_fields();
    if missing.iter().any(|f| f.default.is_none()) {
        let labels: Vec<String> = missing.iter().filter(|f| f.default.is_none()).map(|f| f.label()).collect();
        return reply(
            state,
            ReplyStatus::NeedsInput,
            format!("Cannot solve {test} yet; still missing {}.", labels.join(", ")),
        );
    }
    let mut params = state.known_params.clone();
    let mut defaults = Vec::new();
    for f in &missing {
        if let Some(d) = f.default {
            params.insert(f.keys[0], d);
            defaults.push(f.keys[0]);
        }
    }
    let built = match build_spec(test, &params, target != SolveTarget::Power) {
        Ok(b) => b,
        Err(errors) => {
            let list: Vec<String> = errors.iter().map(|e| format!("{}: {}", e.field, e.message)).collect();
            return reply(
                state,
                ReplyStatus::Invalid,
                format!("The inputs are not valid for {test}: {}.", list.join("; ")),
            );
        }
    };
    let request = SolveRequest {
        spec: built.spec,
        target,
        power_goal: built.power.and_then(|p| crate::dist::Probability::new(p).ok()),
        n_fixed: state.solve_at,
    };
    match crate::power::solve(&request) {
        Ok(result) => {
            state.known_params = params;
            state.refresh_pending();
            let mut r = reply(state, ReplyStatus::Ok, describe_result(state, &result, &defaults));
            r.result = Some(result);
            r
        }
        Err(e) => reply(state, ReplyStatus::Invalid, format!("The calculation failed: {e}.")),
    }
}

/// Reads a bare reply to the current prompt as a command: an outcome word,
/// a group count, or a value for the first missing input.
pub fn answer(state: &SessionState, text: &str) -> Option<Command> {
    let text = text.trim();
    if state.chosen_test.is_none() {
        let patch = match state.descriptor.complete() {
            Err("groups") => DescriptorPatch { n_groups: Some(text.parse().ok()?), ..DescriptorPatch::default() },
            _ => DescriptorPatch { outcome: Some(Outcome::from_str(text).ok()?), ..DescriptorPatch::default() },
        };
        return Some(Command::Describe(patch));
    }
    let missing = state.missing_fields();
    let key = missing.iter().find(|f| f.default.is_none())?.keys[0];
    let value = parse_value(key, text)?;
    Some(Command::Set { assignments: vec![Assignment::Param { key, value }] })
}

/// Pure transition: returns the next state (with the command appended to its history) and the reply.
pub fn apply(state: &SessionState, cmd: &Command, now: u64) -> (SessionState, Reply) {
    let mut next = state.clone();
    let reply = transition(&mut next, cmd);
    next.updated = now;
    next.history.push(HistoryEntry { at: now, command: cmd.clone(), reply: reply.clone() });
    (next, reply)
}

fn transition(state: &mut SessionState, cmd: &Command) -> Reply {
    match cmd {
        Command::Describe(patch) => {
            state.descriptor.merge(patch);
            let d = match state.descriptor.complete() {
                Ok(d) => d,
                Err(_) => {
                    return reply(
                        state,
                        ReplyStatus::NeedsInput,
                        "Noted. The study description is not complete yet.".into(),
                    )
                }
            };
            match select_with_known(&d, &state.known_params) {
                Ok(rec) => {
                    state.alternatives = rec.alternatives.clone();
                    state.rationale = Some(rec.rationale.clone());
                    let dropped = adopt_test(state, rec.test);
                    let mut text = rec.rationale;
                    if !rec.alternatives.is_empty() {
                        let alts: Vec<&str> = rec.alternatives.iter().map(|k| k.id()).collect();
                        let _ = write!(text, " Alternatives: {}.", alts.join(", "));
                    }
                    if !dropped.is_empty() {
                        let names: Vec<&str> = dropped.iter().map(|k| k.name()).collect();
                        let _ = write!(text, " Dropped inputs that {} does not use: {}.", rec.test, names.join(", "));
                    }
                    if !state.pending.is_empty() {
                        let _ = write!(text, " Inputs needed: {}.", state.pending.join(", "));
                    }
                    let status = if state.next_prompt().is_some() { ReplyStatus::NeedsInput } else { ReplyStatus::Ok };
                    reply(state, status, text)
                }
                Err(e) => reply(state, ReplyStatus::Invalid, format!("{e}. Please revise the description.")),
            }
        }
        Command::Choose { test } => {
            state.alternatives.clear();
            state.rationale = Some(format!("{test} was chosen directly."));
            let dropped = adopt_test(state, *test);
            let mut text = format!("Using {test}.");
            if !dropped.is_empty() {
                let names: Vec<&str> = dropped.iter().map(|k| k.name()).collect();
                let _ = write!(text, " Dropped inputs it does not use: {}.", names.join(", "));
            }
            if !state.pending.is_empty() {
                let _ = write!(text, " Inputs needed: {}.", state.pending.join(", "));
            }
            reply(state, ReplyStatus::Ok, text)
        }
        Command::Set { assignments } => match assign(state, assignments) {
            Ok(notes) => {
                let mut text = format!("Recorded {}.", fmt_params(&state.known_params));
                if !notes.is_empty() {
                    let _ = write!(text, " {}.", notes.join("; "));
                }
                reply(state, ReplyStatus::Ok, text)
            }
            Err(msg) => reply(state, ReplyStatus::Invalid, format!("Not applied: {msg}.")),
        },
        Command::Unset { keys } => {
            for k in keys {
                state.known_params.remove(k);
            }
            state.refresh_pending();
            let names: Vec<&str> = keys.iter().map(|k| k.name()).collect();
            reply(state, ReplyStatus::Ok, format!("Cleared {}.", names.join(", ")))
        }
        Command::Solve { target, at } => run_solve(state, *target, *at),
        Command::Whatif { assignments } => {
            let before = state.known_params.clone();
            match assign(state, assignments) {
                Ok(_) => {
                    let changes: Vec<String> = state
                        .known_params
                        .iter()
                        .filter(|(k, v)| before.get(k) != Some(v))
                        .map(|(k, v)| match before.get(k) {
                            Some(old) => format!("{k} {old} -> {v}"),
                            None => format!("{k} = {v}"),
                        })
                        .collect();
                    let (target, at) = (state.target, state.solve_at);
                    let mut r = run_solve(state, target, at);
                    r.explanation = format!("What if {}: {}", changes.join(", "), r.explanation);
                    r
                }
                Err(msg) => reply(state, ReplyStatus::Invalid, format!("Not applied: {msg}.")),
            }
        }
        Command::Explain => reply(state, ReplyStatus::Ok, explain(state)),
        Command::Export => {
            let mut r = reply(state, ReplyStatus::Ok, format!("Transcript of {} commands.", state.history.len()));
            r.transcript = Some(export(state));
            r
        }
    }
}

/// Plain-language summary of the session so far.
pub fn explain(state: &SessionState) -> String {
    let Some(test) = state.chosen_test else {
        return "No test has been chosen yet. Describe the study (outcome, number of groups, pairing) to get a recommendation.".into();
    };
    let mut s = String::new();
    match &state.rationale {
        Some(r) => s.push_str(r),
        None => {
            let _ = write!(s, "The chosen test is {test}.");
        }
    }
    if state.known_params.is_empty() {
        s.push_str(" No inputs have been given yet.");
    } else {
        let _ = write!(s, " Inputs so far: {}.", fmt_params(&state.known_params));
    }
    if !state.pending.is_empty() {
        let _ = write!(s, " Still needed: {}.", state.pending.join(", "));
    }
    if let Some(r) = state.last_result() {
        let _ = write!(
            s,
            " Latest result: n per arm {:?}, total {}, power {:.4}, computed by {}.",
            r.n_per_arm, r.n_total, r.achieved_power, r.formula_id
        );
    }
    s
}

/// Structured plain-text transcript of the session history.
pub fn export(state: &SessionState) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "session: {}", state.id);
    let _ = writeln!(s, "created: {}", state.created);
    if let Some(t) = state.chosen_test {
        let _ = writeln!(s, "test: {t}");
    }
    for (i, h) in state.history.iter().enumerate() {
        let status = match h.reply.status {
            ReplyStatus::Ok => "ok",
            ReplyStatus::NeedsInput => "needs_input",
            ReplyStatus::Invalid => "invalid",
        };
        let _ = writeln!(s, "[{}] t={} > {}", i + 1, h.at, h.command);
        let _ = writeln!(s, "    status: {status}");
        let _ = writeln!(s, "    note: {}", h.reply.explanation);
        if let Some(r) = &h.reply.result {
            let arms: Vec<String> = r.n_per_arm.iter().map(|n| n.to_string()).collect();
            let _ = write!(
                s,
                "    result: target={} n_per_arm={} n_total={} power={:.6}",
                r.target.as_str(),
                arms.join(","),
                r.n_total,
                r.achieved_power
            );
            if let Some(e) = r.events_required {
                let _ = write!(s, " events={e}");
            }
            if let Some(e) = r.effect_solved {
                let _ = write!(s, " effect={e}");
            }
            let _ = writeln!(s, " alpha={} tails={}", r.alpha, r.tails);
            let _ = writeln!(s, "    formula: {}", r.formula_id);
        }
    }
    s
}

/// Rebuilds a session by folding recorded commands over a fresh state.
pub fn replay(id: &str, created: u64, history: &[HistoryEntry]) -> SessionState {
    history.iter().fold(SessionState::new(id, created), |state, h| apply(&state, &h.command, h.at).0)
}

/// Text-completion backend used to turn free text into a command line.
pub trait ModelClient {
    fn complete(&self, system: &str, user: &str) -> Result<String, String>;
}

/// Instruction sent to a model backend.
pub const MODEL_INSTRUCTIONS: &str = "Translate the user's request into exactly one command line. \
Commands: describe <outcome> groups=<n> [paired] [parametric|nonparametric] [adjusted]; \
choose <test_id>; set <name> <value>[, <name> <value>]; unset <name>; solve n|power at <n>|effect at <n>; \
whatif <name> <value>; explain; export. Percentages may be written as 18%. Reply with the command only.";

/// Offline backend that returns the user text unchanged.
#[derive(Debug, Clone, Copy, Default)]
pub struct StubClient;

impl ModelClient for StubClient {
    fn complete(&self, _system: &str, user: &str) -> Result<String, String> {
        Ok(user.to_owned())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Interpretation {
    pub command: Command,
    /// Set when the model output was unusable and the grammar was used directly.
    pub notice: Option<String>,
}

fn extract_command_line(raw: &str) -> &str {
    raw.lines().map(str::trim).find(|l| !l.is_empty() && !l.starts_with("```")).unwrap_or("").trim_matches('`').trim()
}

/// Asks the model for a command and falls back to parsing `text` directly.
pub fn interpret(client: &dyn ModelClient, text: &str) -> Result<Interpretation, ParseError> {
    let failure = match client.complete(MODEL_INSTRUCTIONS, text) {
        Ok(raw) => match parse_command(extract_command_line(&raw)) {
            Ok(command) => return Ok(Interpretation { command, notice: None }),
            Err(e) => format!("model output was not a valid command ({e})"),
        },
        Err(e) => format!("model unavailable ({e})"),
    };
    let command = parse_command(text)?;
    Ok(Interpretation { command, notice: Some(format!("{failure}; parsed the input directly")) })
}

/// Reads one line of user input: a command, then a bare answer to the
/// current prompt, then whatever the model makes of it.
pub fn read_input(state: &SessionState, client: &dyn ModelClient, text: &str) -> Result<Interpretation, ParseError> {
    if let Ok(command) = parse_command(text) {
        return Ok(Interpretation { command, notice: None });
    }
    if let Some(command) = answer(state, text) {
        return Ok(Interpretation { command, notice: None });
    }
    interpret(client, text)
}
