mod common;

use std::io::Write;
use std::path::PathBuf;
use std::process::{Command, Stdio};
use std::time::Duration;

use axum::http::StatusCode;
use common::{accepts, cli, cli_with_input, free_port, text, wait_until, BIN};
use powerkit::api::{self, ENDPOINTS};
use powerkit::corpus::BUNDLED;
use serde_json::Value;

fn golden(name: &str) -> String {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden/cli").join(name);
    std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

fn flags(request: &Value) -> Vec<String> {
    request
        .as_object()
        .unwrap()
        .iter()
        .flat_map(|(k, v)| {
            let v = match v {
                Value::String(s) => s.clone(),
                other => other.to_string(),
            };
            [format!("--{k}"), v]
        })
        .collect()
}

fn solve(endpoint: &str, request: &Value, format: &str) -> std::process::Output {
    let mut args = vec!["solve".to_owned(), endpoint.to_owned()];
    args.extend(flags(request));
    args.extend(["--format".to_owned(), format.to_owned()]);
    cli(&args.iter().map(String::as_str).collect::<Vec<_>>())
}

#[test]
fn solve_goldens() {
    let out = cli(&["solve", "two_sample_t", "--delta", "1.5", "--sd", "0.5", "--power", "0.8"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(text(&out.stdout), golden("solve_two_sample_t.txt"));
    let out = cli(&[
        "solve",
        "log_rank_test",
        "--hr",
        "2",
        "--pE",
        "0.5",
        "--pC",
        "0.7",
        "--power",
        "0.9",
        "--format",
        "machine",
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(text(&out.stdout), golden("solve_log_rank.machine"));
}

#[test]
fn exit_codes() {
    let out = cli(&["solve", "two_sample_t", "--delta", "1.5", "--sd", "0.5"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(text(&out.stderr), "error: power: missing required field (--power)\n");
    let out = cli(&["solve", "two_sample_t", "--delta", "1.5", "--sd", "0.5", "--power", "0.8", "--pwr", "1"]);
    assert_eq!(out.status.code(), Some(2));
    let out = cli(&["solve", "two_sample_t", "--delta", "0", "--sd", "0.5", "--power", "0.8"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(text(&out.stderr).starts_with("error: unreachable:"));
    let out = cli(&["solve", "t_test_of_doom", "--power", "0.8"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(text(&out.stderr).contains("unknown test"));
    assert_eq!(cli(&["--help"]).status.code(), Some(0));
    assert_eq!(cli(&["--version"]).status.code(), Some(0));
    assert_eq!(cli(&[]).status.code(), Some(2));
}

#[tokio::test]
async fn cli_and_service_return_identical_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let app = common::app(dir.path());
    for e in &ENDPOINTS {
        let request = api::example_request(e.test);
        let out = solve(e.name, &request, "json");
        assert_eq!(out.status.code(), Some(0), "{}: {}", e.name, text(&out.stderr));
        let reply = common::post(&app.router, &format!("/api/v1/{}", e.name), &request.to_string()).await;
        assert_eq!(reply.status, StatusCode::OK);
        assert_eq!(text(&out.stdout).trim_end(), reply.text, "{} differs between CLI and service", e.name);
    }
    let request = serde_json::json!({"delta": 0.3, "sd": 1, "target": "power", "n": 50, "tails": "one"});
    let out = solve("two_sample_t_test", &request, "json");
    let reply = common::post(&app.router, "/api/v1/two_sample_t_test", &request.to_string()).await;
    assert_eq!(text(&out.stdout).trim_end(), reply.text);
}

#[test]
fn scenarios_pass_on_the_bundled_corpus() {
    let out = cli(&["scenarios", "--format", "machine"]);
    assert_eq!(out.status.code(), Some(0), "{}", text(&out.stderr));
    let stdout = text(&out.stdout);
    let rows: Vec<Vec<&str>> = stdout.lines().skip(1).map(|l| l.split('\t').collect()).collect();
    assert_eq!(rows.len(), 8);
    assert!(rows.iter().all(|r| r[3] == "true" && r[6] == "true"), "{stdout}");
    assert_eq!(text(&out.stderr), "selection 8/8, sample size 8/8\n");
}

#[test]
fn corrupted_corpus_exits_3_with_the_line() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.jsonl");
    let mut lines: Vec<&str> = BUNDLED.lines().collect();
    let index = lines.iter().position(|l| l.starts_with('{')).unwrap() + 2;
    lines[index] = "{\"id\": \"broken\"";
    std::fs::write(&path, lines.join("\n")).unwrap();
    let out = cli(&["scenarios", "--corpus", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
    assert!(text(&out.stderr).contains(&format!("corpus line {}", index + 1)), "{}", text(&out.stderr));

    let port = free_port();
    let out = Command::new(BIN)
        .arg("serve")
        .env("POWERKIT_PORT", port.to_string())
        .env("POWERKIT_CORPUS", &path)
        .env("POWERKIT_DATA_DIR", dir.path().join("data"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3));
    assert!(!accepts(port));
}

#[test]
fn readiness_waits_for_initialization() {
    let dir = tempfile::tempdir().unwrap();
    let fifo = dir.path().join("corpus.fifo");
    let made = Command::new("mkfifo").arg(&fifo).status().unwrap();
    assert!(made.success());
    let default_free = std::net::TcpListener::bind(("0.0.0.0", 5000)).is_ok();
    let port = if default_free { 5000 } else { free_port() };
    let mut command = Command::new(BIN);
    command
        .arg("serve")
        .env("POWERKIT_CORPUS", &fifo)
        .env("POWERKIT_DATA_DIR", dir.path().join("data"))
        .env_remove("POWERKIT_PORT")
        .stderr(Stdio::piped());
    if !default_free {
        command.env("POWERKIT_PORT", port.to_string());
    }
    let mut child = command.spawn().unwrap();
    std::thread::sleep(Duration::from_millis(500));
    assert!(!accepts(port), "listening before the corpus was read");
    assert!(child.try_wait().unwrap().is_none());

    let mut writer = std::fs::OpenOptions::new().write(true).open(&fifo).unwrap();
    writer.write_all(BUNDLED.as_bytes()).unwrap();
    drop(writer);
    let up = wait_until(Duration::from_secs(10), || accepts(port));
    let health = up.then(|| ureq::get(&format!("http://127.0.0.1:{port}/api/v1/health")).call());
    child.kill().unwrap();
    let output = child.wait_with_output().unwrap();
    assert!(up, "not listening after init: {}", text(&output.stderr));
    let body: Value = health.unwrap().unwrap().body_mut().read_json().unwrap();
    assert_eq!(body["status"], "ok");
    assert_eq!(body["scenarios"], 8);
    assert!(text(&output.stderr).contains(&format!("listening on http://0.0.0.0:{port}")));
}

#[test]
fn wizard_runs_the_what_if_fixture() {
    let dir = tempfile::tempdir().unwrap();
    let transcript = dir.path().join("t.txt");
    let input =
        "describe binary groups=2\nset p0 18%\nset absolute-risk-reduction 4%\nset power 0.8\nwhatif power 0.9\n";
    let out = cli_with_input(&["wizard", "--transcript", transcript.to_str().unwrap()], input);
    assert_eq!(out.status.code(), Some(0), "{}", text(&out.stderr));
    let stdout = text(&out.stdout);
    assert!(stdout.contains("n per arm       1318 / 1318"), "{stdout}");
    assert!(stdout.contains("n per arm       1764 / 1764"), "{stdout}");
    let saved = std::fs::read_to_string(&transcript).unwrap();
    assert!(saved.contains("> whatif power 0.9"));
    assert!(saved.contains("n_per_arm=1318,1318"));
}

#[test]
fn wizard_takes_bare_answers_and_recovers_from_bad_input() {
    let dir = tempfile::tempdir().unwrap();
    let transcript = dir.path().join("t.txt");
    let input = "describe continuous groups=2\nwhat?\n0.5\n1\n80%\n";
    let out = cli_with_input(&["wizard", "--transcript", transcript.to_str().unwrap()], input);
    assert_eq!(out.status.code(), Some(0));
    let stdout = text(&out.stdout);
    assert!(stdout.contains("Could not read that"), "{stdout}");
    assert!(stdout.contains("n per arm       64 / 64"), "{stdout}");
}

fn curve_rows(args: &[&str]) -> Vec<Vec<String>> {
    let out = cli(args);
    assert_eq!(out.status.code(), Some(0), "{}", text(&out.stderr));
    text(&out.stdout).lines().skip(1).map(|l| l.split('\t').map(str::to_owned).collect()).collect()
}

#[test]
fn curves_are_monotone() {
    let rows = curve_rows(&[
        "curve",
        "two_sample_t",
        "--delta",
        "0.5",
        "--sd",
        "1",
        "--sweep",
        "n",
        "--from",
        "5",
        "--to",
        "120",
        "--steps",
        "24",
        "--format",
        "machine",
    ]);
    assert_eq!(rows.len(), 24);
    let power: Vec<f64> = rows.iter().map(|r| r[3].parse().unwrap()).collect();
    assert!(power.windows(2).all(|w| w[0] <= w[1]), "{power:?}");

    let rows = curve_rows(&[
        "curve", "log_rank", "--hr", "0.7", "--pE", "0.4", "--pC", "0.5", "--sweep", "power", "--from", "0.6", "--to",
        "0.95", "--steps", "8", "--format", "machine",
    ]);
    let n: Vec<u64> = rows.iter().map(|r| r[2].parse().unwrap()).collect();
    assert!(n.windows(2).all(|w| w[0] <= w[1]), "{n:?}");

    let rows = curve_rows(&[
        "curve",
        "two_proportions_z",
        "--p0",
        "0.3",
        "--power",
        "0.8",
        "--sweep",
        "p1",
        "--from",
        "0.35",
        "--to",
        "0.6",
        "--steps",
        "6",
        "--format",
        "machine",
    ]);
    let n: Vec<u64> = rows.iter().map(|r| r[2].parse().unwrap()).collect();
    assert!(n.windows(2).all(|w| w[0] >= w[1]), "{n:?}");

    let out = cli(&[
        "curve",
        "two_sample_t",
        "--sd",
        "1",
        "--power",
        "0.8",
        "--sweep",
        "delta",
        "--from",
        "0",
        "--to",
        "1",
        "--steps",
        "3",
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert!(text(&out.stdout).contains("unreachable"));
}
