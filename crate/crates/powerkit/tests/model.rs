mod common;

use std::time::Duration;

use axum::http::StatusCode;
use axum::routing::post;
use axum::{Json, Router};
use powerkit::model::HttpModelClient;
use powerkit_core::session::ModelClient;
use serde_json::{json, Value};

async fn stub(reply: &'static str) -> String {
    let app = Router::new().route(
        "/v1/chat/completions",
        post(move |Json(body): Json<Value>| async move {
            assert_eq!(body["messages"][0]["role"], "system");
            assert_eq!(body["temperature"], 0);
            Json(json!({"model": body["model"], "choices": [{"message": {"role": "assistant", "content": reply}}]}))
        }),
    );
    let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
    let addr = listener.local_addr().unwrap();
    tokio::spawn(async move { axum::serve(listener, app).await.unwrap() });
    format!("http://{addr}/v1/chat/completions")
}

#[tokio::test(flavor = "multi_thread", worker_threads = 2)]
async fn client_reads_the_first_choice() {
    let url = stub("```\nset power 0.9\n```").await;
    let client = HttpModelClient::new(url, Some("local".into()), Duration::from_secs(5));
    let reply = tokio::task::spawn_blocking(move || client.complete("system", "ninety percent power")).await.unwrap();
    assert_eq!(reply.unwrap(), "```\nset power 0.9\n```");
}

#[tokio::test(flavor = "multi_thread", worker_threads = 2)]
async fn unreachable_model_is_an_error() {
    let client = HttpModelClient::new("http://127.0.0.1:9/none", None, Duration::from_millis(500));
    let reply = tokio::task::spawn_blocking(move || client.complete("system", "hi")).await.unwrap();
    assert!(reply.is_err());
}

#[tokio::test(flavor = "multi_thread", worker_threads = 2)]
async fn sessions_route_free_text_through_the_model() {
    let url = stub("set power 0.9").await;
    let dir = tempfile::tempdir().unwrap();
    let mut config = common::config(dir.path());
    config.model_endpoint = Some(url);
    let app = common::app_with(&config);
    let id = common::call(&app.router, axum::http::Method::POST, "/api/v1/sessions", None).await.json()["id"]
        .as_str()
        .unwrap()
        .to_owned();
    let uri = format!("/api/v1/sessions/{id}/command");
    let r = common::post(&app.router, &uri, r#"{"text":"I would like ninety percent power please"}"#).await;
    assert_eq!(r.status, StatusCode::OK, "{}", r.text);
    assert_eq!(r.json()["command"], "set power 0.9");
    assert_eq!(r.json()["notice"], Value::Null);
    let r = common::post(&app.router, &uri, r#"{"text":"choose two_sample_t"}"#).await;
    assert_eq!(r.json()["command"], "choose two_sample_t");
}
