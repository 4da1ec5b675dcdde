//! The session protocol over HTTP, driven through the router.

use std::sync::Arc;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use efgame_session::{router, SessionStore};
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;

async fn call(app: &Router, method: &str, uri: &str, body: Option<Value>) -> (StatusCode, Value) {
    let req = Request::builder().method(method).uri(uri).header("content-type", "application/json");
    let req = req.body(body.map_or_else(Body::empty, |b| Body::from(b.to_string()))).unwrap();
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes();
    (status, serde_json::from_slice(&bytes).unwrap_or(Value::Null))
}

fn app() -> Router {
    router(Arc::new(SessionStore::new()))
}

#[tokio::test]
async fn presets_are_listed() {
    let (status, v) = call(&app(), "GET", "/presets", None).await;
    assert_eq!(status, StatusCode::OK);
    let names: Vec<&str> = v["presets"].as_array().unwrap().iter().map(|p| p["name"].as_str().unwrap()).collect();
    assert!(names.contains(&"s1-minimal"));
}

#[tokio::test]
async fn lifecycle_of_a_session() {
    let app = app();
    let (status, created) = call(&app, "POST", "/sessions", Some(json!({ "preset": "s1-minimal" }))).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(created["stage"], 0);
    let id = created["id"].as_str().unwrap();

    let (_, st) = call(&app, "GET", &format!("/sessions/{id}/state"), None).await;
    let root = st["frontier"]["items"][0]["key"].as_str().unwrap().to_string();
    let (status, r) = call(&app, "POST", &format!("/sessions/{id}/ais-move"), Some(json!({ "version": 0, "node": root }))).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(r["version"], 1);

    let (_, st) = call(&app, "GET", &format!("/sessions/{id}/state"), None).await;
    let node = st["frontier"]["items"][0]["key"].as_str().unwrap().to_string();
    let mv = json!({ "version": 1, "node": node, "a1": ["0:"] });
    let (status, r) = call(&app, "POST", &format!("/sessions/{id}/ais-move"), Some(mv)).await;
    assert_eq!(status, StatusCode::OK);
    assert!(r["iso"]["bases"].is_array());

    let (_, st) = call(&app, "GET", &format!("/sessions/{id}/state?sort=0&elementsPage=0&frontierPage=0"), None).await;
    let b = &st["constants"]["b"]["id"];
    assert!(st["map"].as_array().unwrap().iter().any(|m| &m["base"]["id"] == b));

    // stale version
    let (status, e) = call(&app, "POST", &format!("/sessions/{id}/ais-move"), Some(json!({ "version": 0, "node": "{}", "a1": [] }))).await;
    assert_eq!(status, StatusCode::CONFLICT);
    assert_eq!(e["error"], "conflict");

    let (status, _) = call(&app, "POST", &format!("/sessions/{id}/undo"), Some(json!({ "version": 0 }))).await;
    assert_eq!(status, StatusCode::OK);
    let (_, st) = call(&app, "GET", &format!("/sessions/{id}/state"), None).await;
    assert_eq!(st["stage"], 0);

    let (status, br) = call(&app, "POST", &format!("/sessions/{id}/branch"), Some(json!({ "version": 1 }))).await;
    assert_eq!(status, StatusCode::OK);
    assert_ne!(br["id"], created["id"]);
}

#[tokio::test]
async fn errors_carry_codes_and_clauses() {
    let app = app();
    let (status, e) = call(&app, "GET", "/sessions/none/state", None).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    assert_eq!(e["error"], "unknown-session");

    let (status, e) = call(&app, "POST", "/sessions", Some(json!({ "preset": "s9" }))).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_eq!(e["error"], "invalid-config");

    let (status, e) = call(&app, "POST", "/sessions", Some(json!({ "bogus": 1 }))).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_eq!(e["error"], "bad-request");

    let (_, created) = call(&app, "POST", "/sessions", Some(json!({ "preset": "s1-minimal", "variant": "one" }))).await;
    let id = created["id"].as_str().unwrap();
    call(&app, "POST", &format!("/sessions/{id}/ais-move"), Some(json!({ "version": 0, "node": "{}" }))).await;
    let over = json!({ "version": 1, "node": "{\"0\":0}", "a1": ["0:", "1:"] });
    let (status, e) = call(&app, "POST", &format!("/sessions/{id}/ais-move"), Some(over)).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(e["error"], "rejected");
    assert_eq!(e["clause"], "|A1 ∪ A2| < 1+μ");
}
