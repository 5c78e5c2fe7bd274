//! Command-line front end: solve, curve, scenarios, ratify, wizard and serve.
//!
//! Exit codes: 0 success, 1 mismatch, failed ratification or unreachable
//! goal, 2 invalid input, 3 corpus parse error.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::{BufRead, Write};
use std::path::PathBuf;
use std::sync::Arc;
use std::time::Duration;

use clap::{value_parser, Arg, ArgMatches, Command};
use powerkit_core::design::{SolveTarget, TestKind};
use powerkit_core::oracle::DEFAULT_REPLICATIONS;
use powerkit_core::params::{parse_number, FieldError, ParamKey};
use powerkit_core::session::{self, apply, read_input, ModelClient, ReplyStatus, SessionState, StubClient};
use rayon::prelude::*;
use serde_json::{json, Map, Value};

use crate::api::{self, ApiError, ApiResponse, N, TARGET};
use crate::corpus;
use crate::driver;
use crate::model::HttpModelClient;
use crate::server::{self, Config};
use crate::store::{Clock, SystemClock};

pub const EXIT_OK: u8 = 0;
pub const EXIT_FAILED: u8 = 1;
pub const EXIT_INVALID: u8 = 2;
pub const EXIT_CORPUS: u8 = 3;

const REPS_DEFAULT: &str = "100000";

fn param_args() -> Vec<Arg> {
    ParamKey::ALL
        .into_iter()
        .map(|k| Arg::new(k.name()).long(k.name()).value_name("VALUE").allow_hyphen_values(true).help(k.describe()))
        .collect()
}

fn test_arg() -> Arg {
    Arg::new("test").required(true).value_name("TEST").help("test id (two_sample_t, log_rank, ...) or endpoint name")
}

fn format_arg(choices: &'static [&'static str]) -> Arg {
    Arg::new("format").long("format").value_parser(choices.to_vec()).default_value(choices[0]).help("output format")
}

pub fn command() -> Command {
    Command::new("powerkit")
        .version(env!("CARGO_PKG_VERSION"))
        .about("Statistical power and sample-size calculations")
        .subcommand_required(true)
        .arg_required_else_help(true)
        .subcommand(
            Command::new("solve")
                .about("Solve one design for sample size, power or detectable effect")
                .arg(test_arg())
                .args(param_args())
                .arg(Arg::new(TARGET).long(TARGET).value_name("sample_size|power|effect").help("quantity to solve for"))
                .arg(Arg::new(N).long(N).value_name("N").help("fixed sample size for power and effect solves"))
                .arg(format_arg(&["human", "machine", "json"])),
        )
        .subcommand(
            Command::new("curve")
                .about("Tabulate sample size or power over a swept input")
                .arg(test_arg())
                .args(param_args())
                .arg(Arg::new("sweep").long("sweep").required(true).value_name("NAME").help("input to sweep, or n"))
                .arg(
                    Arg::new("from")
                        .long("from")
                        .required(true)
                        .allow_hyphen_values(true)
                        .value_parser(value_parser!(f64)),
                )
                .arg(
                    Arg::new("to").long("to").required(true).allow_hyphen_values(true).value_parser(value_parser!(f64)),
                )
                .arg(Arg::new("steps").long("steps").default_value("10").value_parser(value_parser!(usize)))
                .arg(Arg::new(N).long(N).value_name("N").help("fixed sample size: tabulate power instead of n"))
                .arg(format_arg(&["human", "machine"])),
        )
        .subcommand(
            Command::new("scenarios")
                .about("Run test selection and sample size on every corpus scenario")
                .arg(Arg::new("corpus").long("corpus").value_name("PATH").value_parser(value_parser!(PathBuf)))
                .arg(format_arg(&["human", "machine"])),
        )
        .subcommand(
            Command::new("ratify")
                .about("Compare every closed form with Monte Carlo power on the bundled grid")
                .arg(
                    Arg::new("reps")
                        .long("reps")
                        .default_value(REPS_DEFAULT)
                        .value_parser(value_parser!(u64).range(1..)),
                )
                .arg(Arg::new("test").long("test").value_name("TEST"))
                .arg(format_arg(&["text", "machine"])),
        )
        .subcommand(
            Command::new("wizard").about("Interactive design session on standard input").arg(
                Arg::new("transcript")
                    .long("transcript")
                    .value_name("PATH")
                    .default_value("powerkit-transcript.txt")
                    .value_parser(value_parser!(PathBuf)),
            ),
        )
        .subcommand(
            Command::new("serve")
                .about("Run the HTTP service")
                .arg(Arg::new("port").long("port").value_parser(value_parser!(u16)).help("overrides POWERKIT_PORT")),
        )
}

/// Runs one invocation and returns the exit code.
pub fn run<I, T>(args: I, input: &mut dyn BufRead, out: &mut dyn Write, err: &mut dyn Write) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let matches = match command().try_get_matches_from(args) {
        Ok(m) => m,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INVALID } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() { write!(err, "{text}") } else { write!(out, "{text}") };
            return code;
        }
    };
    let outcome = match matches.subcommand() {
        Some(("solve", m)) => solve(m, out, err),
        Some(("curve", m)) => curve(m, out, err),
        Some(("scenarios", m)) => scenarios(m, out, err),
        Some(("ratify", m)) => ratify(m, out, err),
        Some(("wizard", m)) => wizard(m, input, out, err),
        Some(("serve", m)) => serve(m, err),
        _ => Ok(EXIT_INVALID),
    };
    outcome.unwrap_or(EXIT_FAILED)
}

type Io = std::io::Result<u8>;

fn find_test(m: &ArgMatches, key: &str, err: &mut dyn Write) -> std::io::Result<Option<TestKind>> {
    let name = m.get_one::<String>(key).map(String::as_str).unwrap_or("");
    match api::resolve(name) {
        Some(e) => Ok(Some(e.test)),
        None => {
            let ids: Vec<&str> = TestKind::ALL.iter().map(|k| k.id()).collect();
            writeln!(err, "error: unknown test `{name}`; expected one of {}", ids.join(", "))?;
            Ok(None)
        }
    }
}

/// Request object built from the parameter flags, in the service's wire format.
fn flags_request(m: &ArgMatches) -> Result<Map<String, Value>, ApiError> {
    let mut object = Map::new();
    let mut errors = Vec::new();
    for key in ParamKey::ALL {
        let Some(text) = m.get_one::<String>(key.name()) else { continue };
        if key == ParamKey::Tails {
            object.insert(key.name().into(), json!(text.to_ascii_lowercase()));
            continue;
        }
        match parse_number(text) {
            Some(v) => {
                object.insert(key.name().into(), json!(v));
            }
            None => errors.push(FieldError::new(key.name(), format!("must be a number, got `{text}`"))),
        }
    }
    if let Some(t) = m.try_get_one::<String>(TARGET).ok().flatten() {
        object.insert(TARGET.into(), json!(t));
    }
    if let Some(n) = m.get_one::<String>(N) {
        match n.parse::<u64>() {
            Ok(v) => {
                object.insert(N.into(), json!(v));
            }
            Err(_) => errors.push(FieldError::new(N, format!("must be a positive integer, got `{n}`"))),
        }
    }
    if errors.is_empty() {
        Ok(object)
    } else {
        Err(ApiError::Invalid(errors))
    }
}

fn is_flag(name: &str) -> bool {
    name == TARGET || name == N || ParamKey::ALL.iter().any(|k| k.name() == name)
}

/// Same diagnostics as the service's 400 and 422 bodies, with the flag named.
fn report(e: &ApiError, err: &mut dyn Write) -> Io {
    match e {
        ApiError::Invalid(errors) => {
            for fe in errors {
                let names: Vec<&str> = fe.field.split(" or ").flat_map(|s| s.split(", ")).collect();
                if names.iter().all(|n| is_flag(n)) {
                    let flags: Vec<String> = names.iter().map(|n| format!("--{n}")).collect();
                    writeln!(err, "error: {}: {} ({})", fe.field, fe.message, flags.join(" or "))?;
                } else {
                    writeln!(err, "error: {}: {}", fe.field, fe.message)?;
                }
            }
            Ok(EXIT_INVALID)
        }
        ApiError::Unreachable(m) => {
            writeln!(err, "error: unreachable: {m}")?;
            Ok(EXIT_FAILED)
        }
    }
}

fn join_arms(n: &[u64], sep: &str) -> String {
    n.iter().map(u64::to_string).collect::<Vec<_>>().join(sep)
}

fn plain(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

/// Stable `key=value` lines.
pub fn machine_lines(r: &ApiResponse) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "test={}", r.test.id());
    let _ = writeln!(s, "target={}", r.target.as_str());
    if let Some(n) = r.sample_size {
        let _ = writeln!(s, "sample_size={n}");
    }
    let _ = writeln!(s, "n_per_arm={}", join_arms(&r.n_per_arm, ","));
    let _ = writeln!(s, "n_total={}", r.n_total);
    let _ = writeln!(s, "achieved_power={}", r.achieved_power);
    if let Some(e) = r.events_required {
        let _ = writeln!(s, "events_required={e}");
    }
    if let Some(e) = r.effect_solved {
        let _ = writeln!(s, "effect_solved={e}");
    }
    let _ = writeln!(s, "formula_id={}", r.formula_id);
    for (k, v) in &r.inputs {
        let _ = writeln!(s, "input.{k}={}", plain(v));
    }
    let _ = writeln!(s, "defaults_applied={}", r.defaults_applied.join(","));
    s
}

fn human_lines(r: &ApiResponse) -> String {
    let mut s = String::new();
    let mut row = |label: &str, value: String| {
        let _ = writeln!(s, "{label:<18}{value}");
    };
    row("test", r.test.id().into());
    row("solved for", r.target.as_str().into());
    if let Some(n) = r.sample_size {
        let unit = if r.n_per_arm.len() > 1 { "per arm" } else { "in total" };
        row("sample size", format!("{n} {unit}"));
    }
    row("n per arm", join_arms(&r.n_per_arm, " / "));
    row("n total", r.n_total.to_string());
    row("achieved power", format!("{:.4}", r.achieved_power));
    if let Some(e) = r.events_required {
        row("events required", e.to_string());
    }
    if let Some(e) = r.effect_solved {
        row("detectable effect", format!("{e:.6}"));
    }
    row("formula", r.formula_id.clone());
    let inputs: Vec<String> = r.inputs.iter().map(|(k, v)| format!("{k}={}", plain(v))).collect();
    row("inputs", inputs.join(" "));
    let defaults = if r.defaults_applied.is_empty() { "none".into() } else { r.defaults_applied.join(", ") };
    row("defaults applied", defaults);
    s
}

fn solve(m: &ArgMatches, out: &mut dyn Write, err: &mut dyn Write) -> Io {
    let Some(test) = find_test(m, "test", err)? else { return Ok(EXIT_INVALID) };
    let response = flags_request(m).and_then(|object| api::handle(test, &Value::Object(object)));
    match response {
        Ok(r) => {
            match m.get_one::<String>("format").map(String::as_str) {
                Some("machine") => write!(out, "{}", machine_lines(&r))?,
                Some("json") => writeln!(out, "{}", api::response_text(&r))?,
                _ => write!(out, "{}", human_lines(&r))?,
            }
            Ok(EXIT_OK)
        }
        Err(e) => report(&e, err),
    }
}

fn sweep_values(from: f64, to: f64, steps: usize, integer: bool) -> Result<Vec<f64>, String> {
    if !(from.is_finite() && to.is_finite()) || from > to {
        return Err(format!("sweep range must satisfy from <= to, got {from} to {to}"));
    }
    if steps < 2 && from != to {
        return Err("steps must be at least 2".into());
    }
    let count = if from == to { 1 } else { steps };
    let mut values: Vec<f64> = (0..count)
        .map(|i| if count == 1 { from } else { from + (to - from) * i as f64 / (count - 1) as f64 })
        .map(|v| if integer { v.round() } else { v })
        .collect();
    values.dedup();
    if integer && values.first().is_some_and(|v| *v < 1.0) {
        return Err("n must be at least 1".into());
    }
    Ok(values)
}

fn curve(m: &ArgMatches, out: &mut dyn Write, err: &mut dyn Write) -> Io {
    let Some(test) = find_test(m, "test", err)? else { return Ok(EXIT_INVALID) };
    let sweep = m.get_one::<String>("sweep").cloned().unwrap_or_default();
    let sweep_n = sweep == N;
    if !sweep_n && !ParamKey::ALL.iter().any(|k| k.name() == sweep && *k != ParamKey::Tails) {
        writeln!(err, "error: sweep: `{sweep}` is not a numeric input; use n or one of the parameter names")?;
        return Ok(EXIT_INVALID);
    }
    let (from, to) = (*m.get_one::<f64>("from").unwrap_or(&0.0), *m.get_one::<f64>("to").unwrap_or(&0.0));
    let steps = *m.get_one::<usize>("steps").unwrap_or(&10);
    let values = match sweep_values(from, to, steps, sweep_n) {
        Ok(v) => v,
        Err(msg) => {
            writeln!(err, "error: sweep: {msg}")?;
            return Ok(EXIT_INVALID);
        }
    };
    let base = match flags_request(m) {
        Ok(b) => b,
        Err(e) => return report(&e, err),
    };
    let fixed_n = sweep_n || base.contains_key(N);
    let mut rows = Vec::new();
    for v in &values {
        let mut object = base.clone();
        if sweep_n {
            object.insert(N.into(), json!(*v as u64));
        } else {
            object.insert(sweep.clone(), json!(v));
        }
        if fixed_n {
            object.insert(TARGET.into(), json!("power"));
        }
        match api::handle(test, &Value::Object(object)) {
            Ok(r) => rows.push((*v, Ok(r))),
            Err(e @ ApiError::Unreachable(_)) => rows.push((*v, Err(e))),
            Err(e) => return report(&e, err),
        }
    }
    let machine = m.get_one::<String>("format").map(String::as_str) == Some("machine");
    if machine {
        writeln!(out, "{sweep}\tn_per_arm\tn_total\tachieved_power\tstatus")?;
    } else {
        writeln!(out, "{:>12}  {:>13}  {:>8}  {:>8}", sweep, "n per arm", "n total", "power")?;
    }
    for (v, row) in rows {
        match (row, machine) {
            (Ok(r), true) => {
                writeln!(out, "{v}\t{}\t{}\t{}\tok", join_arms(&r.n_per_arm, ","), r.n_total, r.achieved_power)?
            }
            (Ok(r), false) => writeln!(
                out,
                "{v:>12}  {:>13}  {:>8}  {:>8.4}",
                join_arms(&r.n_per_arm, "/"),
                r.n_total,
                r.achieved_power
            )?,
            (Err(_), true) => writeln!(out, "{v}\t\t\t\tunreachable")?,
            (Err(_), false) => writeln!(out, "{v:>12}  {:>13}  {:>8}  {:>8}", "-", "-", "unreachable")?,
        }
    }
    Ok(EXIT_OK)
}

fn scenarios(m: &ArgMatches, out: &mut dyn Write, err: &mut dyn Write) -> Io {
    let path = m.get_one::<PathBuf>("corpus");
    let records = match corpus::load(path.map(PathBuf::as_path)) {
        Ok(r) => r,
        Err(e) => {
            writeln!(err, "error: {e}")?;
            return Ok(EXIT_CORPUS);
        }
    };
    let outcomes: Vec<corpus::Outcome> = records.par_iter().map(corpus::run).collect();
    let machine = m.get_one::<String>("format").map(String::as_str) == Some("machine");
    let opt = |n: Option<u64>| n.map_or_else(|| "-".to_string(), |v| v.to_string());
    let test_name = |t: Option<TestKind>| t.map_or("-", TestKind::id);
    if machine {
        writeln!(out, "id\texpected_test\tselected_test\ttest_ok\texpected_n\tn\tn_ok\tmicros")?;
    }
    for o in &outcomes {
        let micros = o.elapsed.as_secs_f64() * 1e6;
        if machine {
            writeln!(
                out,
                "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{micros:.0}",
                o.id,
                o.expected_test.id(),
                test_name(o.selected),
                o.test_ok(),
                o.expected_n,
                opt(o.n),
                o.n_ok()
            )?;
        } else {
            let mark = |ok: bool| if ok { "ok" } else { "MISMATCH" };
            writeln!(
                out,
                "{:<26} test {:<18} {:<8} n {:>6} (expected {:>6}) {:<8} {:>9.1} us",
                o.id,
                test_name(o.selected),
                mark(o.test_ok()),
                opt(o.n),
                o.expected_n,
                mark(o.n_ok()),
                micros
            )?;
            if let Some(note) = &o.note {
                writeln!(out, "    {note}")?;
            }
        }
    }
    let tests_ok = outcomes.iter().filter(|o| o.test_ok()).count();
    let n_ok = outcomes.iter().filter(|o| o.n_ok()).count();
    let total = outcomes.len();
    let summary = format!("selection {tests_ok}/{total}, sample size {n_ok}/{total}");
    if machine {
        writeln!(err, "{summary}")?;
    } else {
        writeln!(out, "{summary}")?;
    }
    Ok(if tests_ok == total && n_ok == total { EXIT_OK } else { EXIT_FAILED })
}

fn ratify(m: &ArgMatches, out: &mut dyn Write, err: &mut dyn Write) -> Io {
    let only = match m.get_one::<String>("test") {
        Some(name) => match api::resolve(name) {
            Some(e) => Some(e.test),
            None => {
                writeln!(err, "error: unknown test `{name}`")?;
                return Ok(EXIT_INVALID);
            }
        },
        None => None,
    };
    let reps = *m.get_one::<u64>("reps").unwrap_or(&DEFAULT_REPLICATIONS);
    let report = match driver::ratify(reps, only) {
        Ok(r) => r,
        Err(e) => {
            writeln!(err, "error: {e}")?;
            return Ok(EXIT_FAILED);
        }
    };
    match m.get_one::<String>("format").map(String::as_str) {
        Some("machine") => write!(out, "{}", report.table())?,
        _ => write!(out, "{}", report.text())?,
    }
    writeln!(err, "ratified at {reps} replications per point in {:.1} s", report.elapsed.as_secs_f64())?;
    Ok(if report.passed() { EXIT_OK } else { EXIT_FAILED })
}

fn model_client() -> Arc<dyn ModelClient + Send + Sync> {
    match Config::from_env().ok().and_then(|c| c.model_endpoint.map(|e| (e, c.model))) {
        Some((endpoint, model)) => Arc::new(HttpModelClient::new(endpoint, model, Duration::from_secs(30))),
        None => Arc::new(StubClient),
    }
}

fn print_reply(out: &mut dyn Write, reply: &session::Reply) -> std::io::Result<()> {
    writeln!(out, "{}", reply.explanation)?;
    if let Some(r) = &reply.result {
        writeln!(out, "  {:<16}{}", "test", r.test)?;
        writeln!(out, "  {:<16}{}", "n per arm", join_arms(&r.n_per_arm, " / "))?;
        writeln!(out, "  {:<16}{}", "n total", r.n_total)?;
        writeln!(out, "  {:<16}{:.4}", "achieved power", r.achieved_power)?;
        if let Some(e) = r.events_required {
            writeln!(out, "  {:<16}{e}", "events required")?;
        }
        if let Some(e) = r.effect_solved {
            writeln!(out, "  {:<16}{e:.6}", "effect")?;
        }
        writeln!(out, "  {:<16}{}", "formula", r.formula_id)?;
    }
    if let Some(t) = &reply.transcript {
        write!(out, "{t}")?;
    }
    if let Some(p) = &reply.prompt {
        writeln!(out, "{p}")?;
    }
    Ok(())
}

fn wizard(m: &ArgMatches, input: &mut dyn BufRead, out: &mut dyn Write, err: &mut dyn Write) -> Io {
    let path = m.get_one::<PathBuf>("transcript").cloned().unwrap_or_else(|| "powerkit-transcript.txt".into());
    let clock = SystemClock;
    let model = model_client();
    let mut state = SessionState::new(format!("wizard-{}", clock.now()), clock.now());
    writeln!(out, "powerkit wizard. Answer the questions or type a command")?;
    writeln!(out, "(describe, choose, set, unset, solve, whatif, explain, export). End input to finish.")?;
    if let Some(p) = state.next_prompt() {
        writeln!(out, "{p}")?;
    }
    let mut line = String::new();
    loop {
        write!(out, "> ")?;
        out.flush()?;
        line.clear();
        if input.read_line(&mut line)? == 0 {
            writeln!(out)?;
            break;
        }
        let text = line.trim();
        if text.is_empty() {
            continue;
        }
        let interpretation = match read_input(&state, model.as_ref(), text) {
            Ok(i) => i,
            Err(e) => {
                writeln!(out, "Could not read that: {e}")?;
                if let Some(p) = state.next_prompt() {
                    writeln!(out, "{p}")?;
                }
                continue;
            }
        };
        if let Some(n) = &interpretation.notice {
            writeln!(out, "({n})")?;
        }
        let (next, reply) = apply(&state, &interpretation.command, clock.now());
        state = next;
        print_reply(out, &reply)?;
        let edits = matches!(
            interpretation.command,
            session::Command::Set { .. } | session::Command::Describe(_) | session::Command::Choose { .. }
        );
        let ready = state.chosen_test.is_some() && state.next_prompt().is_none() && state.last_result().is_none();
        if edits && reply.status != ReplyStatus::Invalid && ready {
            let solve = session::Command::Solve { target: SolveTarget::SampleSize, at: None };
            writeln!(out, "> {solve}")?;
            let (next, reply) = apply(&state, &solve, clock.now());
            state = next;
            print_reply(out, &reply)?;
        }
    }
    match std::fs::write(&path, session::export(&state)) {
        Ok(()) => {
            writeln!(out, "transcript saved to {}", path.display())?;
            Ok(EXIT_OK)
        }
        Err(e) => {
            writeln!(err, "error: could not save transcript to {}: {e}", path.display())?;
            Ok(EXIT_FAILED)
        }
    }
}

fn serve(m: &ArgMatches, err: &mut dyn Write) -> Io {
    let mut config = match Config::from_env() {
        Ok(c) => c,
        Err(e) => {
            writeln!(err, "error: {}", server::InitError::Config(e))?;
            return Ok(EXIT_FAILED);
        }
    };
    if let Some(p) = m.get_one::<u16>("port") {
        config.port = *p;
    }
    let runtime = tokio::runtime::Builder::new_multi_thread().enable_all().build()?;
    match runtime.block_on(server::serve(config)) {
        Ok(()) => Ok(EXIT_OK),
        Err(e) => {
            writeln!(err, "error: {e}")?;
            Ok(e.exit_code())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_args(args: &[&str]) -> (u8, String, String) {
        let (mut out, mut err) = (Vec::new(), Vec::new());
        let code = run(std::iter::once("powerkit").chain(args.iter().copied()), &mut &b""[..], &mut out, &mut err);
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    #[test]
    fn reps_default_matches_the_oracle() {
        assert_eq!(REPS_DEFAULT.parse::<u64>().unwrap(), DEFAULT_REPLICATIONS);
    }

    #[test]
    fn sweep_grid() {
        assert_eq!(sweep_values(0.5, 0.9, 5, false).unwrap().len(), 5);
        assert_eq!(sweep_values(10.0, 12.0, 5, true).unwrap(), [10.0, 11.0, 12.0]);
        assert!(sweep_values(1.0, 0.0, 5, false).is_err());
        assert!(sweep_values(0.0, 1.0, 1, false).is_err());
        assert!(sweep_values(0.0, 5.0, 3, true).is_err());
    }

    #[test]
    fn missing_power_names_the_flag() {
        let (code, _, err) = run_args(&["solve", "two_sample_t", "--delta", "1.5", "--sd", "0.5"]);
        assert_eq!(code, EXIT_INVALID);
        assert_eq!(err, "error: power: missing required field (--power)\n");
    }

    #[test]
    fn percent_flags() {
        let (code, out, _) = run_args(&[
            "solve",
            "two_proportions_z",
            "--p0",
            "18%",
            "--p1",
            "14%",
            "--power",
            "0.8",
            "--format",
            "machine",
        ]);
        assert_eq!(code, EXIT_OK);
        assert!(out.contains("n_per_arm=1318,1318\n"), "{out}");
    }
}
