mod support;

use std::io::Write;

use axum::http::StatusCode;
use serde_json::json;
use support::{act, app, call, create, Server};

#[tokio::test]
async fn restart_rebuilds_identical_envelopes() {
    let dir = tempfile::tempdir().unwrap();
    let first = app(dir.path());
    let mut ids = Vec::new();
    for seed in 0..3u64 {
        let env = create(&first, seed).await;
        let id = env["session_id"].as_str().unwrap().to_owned();
        let (status, _) = act(&first, &id, 0, "choice", json!({"choice_id": "start_campaign"})).await;
        assert_eq!(status, StatusCode::OK);
        if seed > 0 {
            let (status, _) = act(&first, &id, 1, "tag_placement", json!({"tag_id": "tag_divorced", "voter_id": "bob"})).await;
            assert_eq!(status, StatusCode::OK);
        }
        let (_, env) = call(&first, "GET", &format!("/api/sessions/{id}"), None).await;
        ids.push((id, env));
    }
    drop(first);

    let second = app(dir.path());
    for (id, before) in &ids {
        let (status, after) = call(&second, "GET", &format!("/api/sessions/{id}"), None).await;
        assert_eq!(status, StatusCode::OK);
        assert_eq!(&after, before);
    }
    // Play continues on the recovered session.
    let (id, env) = &ids[2];
    let ordinal = env["snapshot"]["next_ordinal"].as_u64().unwrap();
    let (status, body) = act(&second, id, ordinal, "tag_placement", json!({"tag_id": "tag_war_veteran", "voter_id": "bob"})).await;
    assert_eq!(status, StatusCode::OK, "{body}");
}

#[tokio::test]
async fn torn_tail_record_is_dropped_on_restart() {
    let dir = tempfile::tempdir().unwrap();
    let first = app(dir.path());
    let env = create(&first, 9).await;
    let id = env["session_id"].as_str().unwrap().to_owned();
    act(&first, &id, 0, "choice", json!({"choice_id": "start_campaign"})).await;
    let (_, before) = call(&first, "GET", &format!("/api/sessions/{id}"), None).await;
    drop(first);

    // A half-written record: a length prefix promising more than follows.
    let path = dir.path().join(format!("{id}.log"));
    let mut f = std::fs::OpenOptions::new().append(true).open(&path).unwrap();
    f.write_all(&[200, 0, 0, 0, 1, 2, 3, 4, b'{', b'"']).unwrap();
    drop(f);

    let second = app(dir.path());
    let (_, after) = call(&second, "GET", &format!("/api/sessions/{id}"), None).await;
    assert_eq!(after, before);
    let (status, _) = act(&second, &id, 1, "tag_placement", json!({"tag_id": "tag_divorced", "voter_id": "bob"})).await;
    assert_eq!(status, StatusCode::OK);
    drop(second);
    let third = app(dir.path());
    let (_, env) = call(&third, "GET", &format!("/api/sessions/{id}"), None).await;
    assert_eq!(env["snapshot"]["next_ordinal"], 2);
}

#[tokio::test]
async fn logs_for_unknown_packs_are_skipped() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("garbage.log"), b"not a log").unwrap();
    let (state, report) = inoculate_server::AppState::open(
        inoculate_server::store::PackRegistry::with_default(),
        dir.path(),
    )
    .unwrap();
    assert_eq!(report.restored, 0);
    assert_eq!(report.skipped.len(), 1);
    assert_eq!(state.sessions.len(), 0);
}

#[test]
fn killed_process_recovers_on_restart() {
    let dir = tempfile::tempdir().unwrap();
    let server = Server::spawn(dir.path());
    let (status, env) = server.request("POST", "/api/sessions", Some(&json!({"seed": 42})));
    assert_eq!(status, 201);
    let id = env["session_id"].as_str().unwrap().to_owned();
    let actions = [
        json!({"kind": "choice", "payload": {"choice_id": "start_campaign"}}),
        json!({"kind": "tag_placement", "payload": {"tag_id": "tag_feminist_literature", "voter_id": "bob"}}),
        json!({"kind": "tag_placement", "payload": {"tag_id": "tag_feminist_literature", "voter_id": "mandy"}}),
    ];
    for (i, a) in actions.iter().enumerate() {
        let mut body = a.clone();
        body["expected_ordinal"] = json!(i);
        let (status, resp) = server.request("POST", &format!("/api/sessions/{id}/actions"), Some(&body));
        assert_eq!(status, 200, "{resp}");
    }
    let (_, before) = server.request("GET", &format!("/api/sessions/{id}"), None);
    server.kill();

    let server = Server::spawn(dir.path());
    let (status, after) = server.request("GET", &format!("/api/sessions/{id}"), None);
    assert_eq!(status, 200);
    assert_eq!(after, before);
    let (_, health) = server.request("GET", "/api/health", None);
    assert_eq!(health["sessions"], 1);
}
