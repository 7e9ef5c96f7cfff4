use std::sync::Arc;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;

use saag_core::TileCatalog;
use saag_service::*;
use saag_situation::{GcnArch, GcnParams};

fn app(log_dir: Option<std::path::PathBuf>) -> (tempfile::TempDir, axum::Router) {
    let dir = tempfile::tempdir().unwrap();
    GcnParams::init(GcnArch::default(), 3).to_checkpoint().save(dir.path().join("sm.ckpt")).unwrap();
    let config = ServiceConfig { params: ParamStore::new(Some(dir.path().to_path_buf())), log_dir };
    (dir, router(AppState::new(config, Arc::new(TileCatalog::base()))))
}

async fn call(app: &axum::Router, method: &str, path: &str, body: Option<&str>) -> (StatusCode, String) {
    let req = Request::builder().method(method).uri(path).header("content-type", "application/json");
    let req = req.body(body.map_or_else(Body::empty, |b| Body::from(b.to_string()))).unwrap();
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes();
    (status, String::from_utf8(bytes.to_vec()).unwrap())
}

async fn json_call(app: &axum::Router, method: &str, path: &str, body: Option<Value>) -> (StatusCode, Value) {
    let text = body.map(|b| b.to_string());
    let (s, t) = call(app, method, path, text.as_deref()).await;
    (s, serde_json::from_str(&t).unwrap_or(Value::String(t)))
}

/// Plays a scripted session and records every exchange.
async fn transcript() -> Value {
    let (_d, app) = app(None);
    let mut steps = Vec::new();
    let mut step = |method: &str, path: &str, body: Option<Value>, status: StatusCode, resp: Value| {
        steps.push(json!({ "method": method, "path": path, "body": body, "status": status.as_u16(), "response": resp }));
    };
    let create = json!({ "board_size": 9, "seed": 21, "ai": "random", "situation": "sm" });
    let (s, snap) = json_call(&app, "POST", "/sessions", Some(create.clone())).await;
    step("POST", "/sessions", Some(create), s, snap.clone());
    let id = snap["session_id"].as_str().unwrap().to_string();
    for _ in 0..2 {
        for path in ["state", "actions", "predictions?k=3"] {
            let p = format!("/sessions/{id}/{path}");
            let (s, r) = json_call(&app, "GET", &p, None).await;
            step("GET", &p, None, s, r);
        }
        let (_, acts) = json_call(&app, "GET", &format!("/sessions/{id}/actions"), None).await;
        let pick = acts["actions"].as_array().unwrap().last().unwrap()["index"].clone();
        let body = json!({ "seat": 0, "action": pick });
        let p = format!("/sessions/{id}/act");
        let (s, r) = json_call(&app, "POST", &p, Some(body.clone())).await;
        step("POST", &p, Some(body), s, r);
    }
    let gaze = json!({ "seat": 0, "samples": [
        { "t_ms": 0.0, "x": 4.5, "y": 4.5 }, { "t_ms": 50.0, "x": 4.6, "y": 4.4 },
        { "t_ms": 100.0, "x": 5.2, "y": 4.5, "valid": false }, { "t_ms": 150.0, "x": 12.0, "y": 4.5 },
        { "t_ms": 200.0, "x": 4.1, "y": 3.9 } ] });
    let errors: Vec<(&str, String, Option<Value>)> = vec![
        ("POST", format!("/sessions/{id}/gaze"), Some(gaze)),
        ("GET", format!("/sessions/{id}/heatmap?seat=0"), None),
        ("GET", format!("/sessions/{id}/heatmap?seat=0&half_life_ms=100"), None),
        ("GET", "/sessions/s99/state".into(), None),
        ("POST", format!("/sessions/{id}/act"), Some(json!({ "seat": 1, "action": 0 }))),
        ("POST", format!("/sessions/{id}/act"), Some(json!({ "seat": 0 }))),
        ("POST", format!("/sessions/{id}/gaze"), Some(json!({ "seat": 1, "samples": [] }))),
        ("POST", format!("/sessions/{id}/gaze"), Some(json!({ "seat": 0, "samples": [{ "t_ms": 1.0, "x": 0.0, "y": 0.0 }] }))),
        ("GET", format!("/sessions/{id}/predictions?k=0"), None),
        ("GET", format!("/sessions/{id}/heatmap"), None),
        ("POST", "/sessions".into(), Some(json!({ "players": 2, "seats": ["human"] }))),
        ("POST", "/sessions".into(), Some(json!({ "situation": "missing" }))),
        ("POST", "/sessions".into(), Some(json!({ "colour": "red" }))),
    ];
    for (m, p, b) in errors {
        let (s, r) = json_call(&app, m, &p, b.clone()).await;
        step(m, &p, b, s, r);
    }
    Value::Array(steps)
}

#[tokio::test]
async fn golden_transcript() {
    let got = transcript().await;
    let path = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden/transcript.json");
    let text = serde_json::to_string_pretty(&got).unwrap() + "\n";
    if std::env::var_os("SAAG_BLESS").is_some() {
        std::fs::write(&path, &text).unwrap();
    }
    let want = std::fs::read_to_string(&path).expect("golden transcript; run with SAAG_BLESS=1 to create");
    assert_eq!(text, want, "transcript changed; rerun with SAAG_BLESS=1 if intended");
}

#[tokio::test]
async fn transcript_statuses() {
    let steps = transcript().await;
    let statuses: Vec<u64> = steps.as_array().unwrap().iter().map(|s| s["status"].as_u64().unwrap()).collect();
    assert_eq!(statuses[0], 201);
    assert!(statuses[1..9].iter().all(|s| *s == 200));
    assert_eq!(&statuses[9..], &[200, 200, 200, 404, 409, 400, 400, 400, 400, 400, 400, 400, 400]);
    let codes: Vec<&str> = steps.as_array().unwrap()[12..].iter().map(|s| s["response"]["error"].as_str().unwrap()).collect();
    assert_eq!(
        codes,
        ["unknown_session", "not_your_turn", "malformed", "invalid_seat", "malformed", "malformed", "malformed", "bad_config", "unknown_params", "malformed"]
    );
}

#[tokio::test]
async fn illegal_action_echoes_mask() {
    let (_d, app) = app(None);
    let (_, snap) = json_call(&app, "POST", "/sessions", Some(json!({ "board_size": 9, "seed": 2 }))).await;
    let id = snap["session_id"].as_str().unwrap();
    let (_, acts) = json_call(&app, "GET", &format!("/sessions/{id}/actions"), None).await;
    let legal: Vec<u64> = acts["actions"].as_array().unwrap().iter().map(|a| a["index"].as_u64().unwrap()).collect();
    let illegal = (0..).find(|i| !legal.contains(i)).unwrap();
    let (s, r) = json_call(&app, "POST", &format!("/sessions/{id}/act"), Some(json!({ "seat": 0, "action": illegal }))).await;
    assert_eq!(s, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(r["error"], "illegal_action");
    let mask: Vec<u64> = r["mask"].as_array().unwrap().iter().map(|v| v.as_u64().unwrap()).collect();
    assert_eq!(mask, legal);
    assert_eq!(snap["legal"]["count"].as_u64().unwrap() as usize, legal.len());
}

#[tokio::test]
async fn full_game_log_replays_after_every_request() {
    let log_dir = tempfile::tempdir().unwrap();
    let (_d, app) = app(Some(log_dir.path().to_path_buf()));
    let (_, snap) = json_call(&app, "POST", "/sessions", Some(json!({ "board_size": 9, "seed": 31, "ai": "random" }))).await;
    let id = snap["session_id"].as_str().unwrap().to_string();
    let cat = Arc::new(TileCatalog::base());
    let mut state = snap;
    while !state["finished"].as_bool().unwrap() {
        let (_, acts) = json_call(&app, "GET", &format!("/sessions/{id}/actions"), None).await;
        let pick = acts["actions"][0]["index"].clone();
        let (s, r) = json_call(&app, "POST", &format!("/sessions/{id}/act"), Some(json!({ "seat": 0, "action": pick }))).await;
        assert_eq!(s, StatusCode::OK, "{r}");
        state = r["state"].clone();
        let (_, log) = call(&app, "GET", &format!("/sessions/{id}/log"), None).await;
        let (header, entries) = parse_log(&log).unwrap();
        let replayed = replay_log(&header, &entries, cat.clone()).unwrap();
        assert_eq!(replayed.scores().iter().map(|v| json!(v)).collect::<Vec<_>>(), *state["scores"].as_array().unwrap());
        assert_eq!(replayed.turn_index() as u64, state["turn_index"].as_u64().unwrap());
    }
    let persisted = std::fs::read_to_string(log_dir.path().join(format!("{id}.ndjson"))).unwrap();
    let (_, served) = call(&app, "GET", &format!("/sessions/{id}/log"), None).await;
    assert_eq!(persisted, served);
    let restored = Session::from_log(&persisted, cat, &ParamStore::default()).unwrap();
    assert_eq!(serde_json::to_value(restored.snapshot()).unwrap(), state);
}

fn sse_frames(text: &str) -> Vec<(String, Value)> {
    text.split("\n\n")
        .filter_map(|block| {
            let ev = block.lines().find_map(|l| l.strip_prefix("event: "))?;
            let data = block.lines().find_map(|l| l.strip_prefix("data: "))?;
            Some((ev.to_string(), serde_json::from_str(data).unwrap()))
        })
        .collect()
}

#[tokio::test]
async fn event_stream_of_finished_game_ends_with_game_over() {
    let (_d, app) = app(None);
    let cfg = json!({ "board_size": 9, "seed": 4, "ai": "random", "seats": ["ai", "ai"] });
    let (_, snap) = json_call(&app, "POST", "/sessions", Some(cfg)).await;
    let id = snap["session_id"].as_str().unwrap();
    let (s, text) = call(&app, "GET", &format!("/sessions/{id}/events"), None).await;
    assert_eq!(s, StatusCode::OK);
    let frames = sse_frames(&text);
    let (last, rest) = frames.split_last().unwrap();
    assert_eq!(last.0, "game_over");
    assert_eq!(last.1["scores"], snap["scores"]);
    assert_eq!(rest.len() as u64, snap["next_seq"].as_u64().unwrap());
    for (i, (kind, data)) in rest.iter().enumerate() {
        assert_eq!(data["seq"].as_u64().unwrap(), i as u64);
        assert_eq!(data["kind"].as_str().unwrap(), kind);
    }
    let (_, tail) = call(&app, "GET", &format!("/sessions/{id}/events?since=10"), None).await;
    assert_eq!(sse_frames(&tail).len(), frames.len() - 10);
}

#[tokio::test]
async fn event_stream_delivers_live_ai_moves() {
    let (_d, app) = app(None);
    let (_, snap) = json_call(&app, "POST", "/sessions", Some(json!({ "board_size": 9, "seed": 5, "ai": "random" }))).await;
    let id = snap["session_id"].as_str().unwrap().to_string();
    let since = snap["next_seq"].as_u64().unwrap();
    let req = Request::builder().uri(format!("/sessions/{id}/events?since={since}")).body(Body::empty()).unwrap();
    let mut body = app.clone().oneshot(req).await.unwrap().into_body();
    let (_, acts) = json_call(&app, "GET", &format!("/sessions/{id}/actions"), None).await;
    let pick = acts["actions"][0]["index"].clone();
    let (_, r) = json_call(&app, "POST", &format!("/sessions/{id}/act"), Some(json!({ "seat": 0, "action": pick }))).await;
    let want = r["events"].as_array().unwrap().len();
    let mut text = String::new();
    while sse_frames(&text).len() < want {
        let frame = tokio::time::timeout(std::time::Duration::from_secs(10), body.frame()).await.unwrap().unwrap().unwrap();
        if let Ok(data) = frame.into_data() {
            text.push_str(std::str::from_utf8(&data).unwrap());
        }
    }
    let got: Vec<Value> = sse_frames(&text).into_iter().map(|f| f.1).collect();
    assert_eq!(&got, r["events"].as_array().unwrap());
    assert!(got.iter().any(|e| e["kind"] == "place_tile" && e["player"] == 1));
}
