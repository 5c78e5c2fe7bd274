#![allow(dead_code)]

use std::net::{TcpListener, TcpStream};
use std::path::Path;
use std::process::{Command, Output, Stdio};
use std::sync::Arc;
use std::time::{Duration, Instant};

use axum::body::Body;
use axum::http::{Method, Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use powerkit::server::{self, AppState, Config};
use powerkit::store::{Clock, ManualClock};
use serde_json::Value;
use tower::ServiceExt;

pub const BIN: &str = env!("CARGO_BIN_EXE_powerkit");
pub const START: u64 = 1_800_000_000;

pub fn config(data_dir: &Path) -> Config {
    let mut c = Config::from_lookup(|_| None).unwrap();
    c.data_dir = data_dir.to_path_buf();
    c
}

pub struct TestApp {
    pub state: Arc<AppState>,
    pub router: Router,
    pub clock: Arc<ManualClock>,
}

pub fn app_with(config: &Config) -> TestApp {
    let clock = Arc::new(ManualClock::new(START));
    let state = server::init(config, Arc::clone(&clock) as Arc<dyn Clock>).unwrap();
    TestApp { router: server::router(Arc::clone(&state)), state, clock }
}

pub fn app(data_dir: &Path) -> TestApp {
    app_with(&config(data_dir))
}

pub struct Reply {
    pub status: StatusCode,
    pub location: Option<String>,
    pub text: String,
}

impl Reply {
    pub fn json(&self) -> Value {
        serde_json::from_str(&self.text).unwrap_or_else(|e| panic!("{e}: {}", self.text))
    }
}

pub async fn call(router: &Router, method: Method, uri: &str, body: Option<&str>) -> Reply {
    let mut builder = Request::builder().method(method).uri(uri);
    if body.is_some() {
        builder = builder.header("content-type", "application/json");
    }
    let request = builder.body(body.map_or_else(Body::empty, |b| Body::from(b.to_owned()))).unwrap();
    let response = router.clone().oneshot(request).await.unwrap();
    let status = response.status();
    let location = response.headers().get("location").map(|v| v.to_str().unwrap().to_owned());
    let bytes = response.into_body().collect().await.unwrap().to_bytes();
    Reply { status, location, text: String::from_utf8(bytes.to_vec()).unwrap() }
}

pub async fn post(router: &Router, uri: &str, body: &str) -> Reply {
    call(router, Method::POST, uri, Some(body)).await
}

pub async fn get(router: &Router, uri: &str) -> Reply {
    call(router, Method::GET, uri, None).await
}

pub fn cli(args: &[&str]) -> Output {
    cli_with_input(args, "")
}

pub fn cli_with_input(args: &[&str], input: &str) -> Output {
    use std::io::Write;
    let mut child = Command::new(BIN)
        .args(args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    child.stdin.take().unwrap().write_all(input.as_bytes()).unwrap();
    child.wait_with_output().unwrap()
}

pub fn text(bytes: &[u8]) -> String {
    String::from_utf8(bytes.to_vec()).unwrap()
}

pub fn free_port() -> u16 {
    TcpListener::bind(("127.0.0.1", 0)).unwrap().local_addr().unwrap().port()
}

pub fn accepts(port: u16) -> bool {
    TcpStream::connect_timeout(&([127, 0, 0, 1], port).into(), Duration::from_millis(200)).is_ok()
}

pub fn wait_until(limit: Duration, mut ready: impl FnMut() -> bool) -> bool {
    let start = Instant::now();
    while start.elapsed() < limit {
        if ready() {
            return true;
        }
        std::thread::sleep(Duration::from_millis(50));
    }
    ready()
}
