use std::sync::Arc;

use axum::body::{to_bytes, Body};
use axum::http::{Method, Request, StatusCode};
use axum::Router;
use rebalance_core::ingest::write_dataset_files;
use rebalance_core::synth::counts_corpus;
use rebalance_core::Execution;
use rebalance_server::{router, AppState};
use serde_json::{json, Value};
use tower::ServiceExt;

async fn call(app: &Router, method: Method, uri: &str, body: Option<Value>) -> (StatusCode, Value) {
    let mut req = Request::builder().method(method).uri(uri);
    let body = match body {
        Some(v) => {
            req = req.header("content-type", "application/json");
            Body::from(v.to_string())
        }
        None => Body::empty(),
    };
    let resp = app.clone().oneshot(req.body(body).unwrap()).await.unwrap();
    let status = resp.status();
    let bytes = to_bytes(resp.into_body(), usize::MAX).await.unwrap();
    (status, serde_json::from_slice(&bytes).unwrap_or(Value::Null))
}

/// Service loaded with the reference high-danger counts and the focus selected.
async fn high_danger_fixture(dir: &std::path::Path) -> Router {
    let corpus = counts_corpus(&[100, 200, 300, 400], &[0, 200, 300, 400]).unwrap();
    let manifest = write_dataset_files(dir, "t3", &corpus.hierarchy, &corpus.entities).unwrap();
    let app = router(Arc::new(AppState::new(Execution::Parallel, manifest.parent().unwrap().to_path_buf())));
    let body = json!({"entities_path": "entities.jsonl", "hierarchy_path": "hierarchy.jsonl", "dataset_id": "t3"});
    let (s, info) = call(&app, Method::POST, "/datasets", Some(body)).await;
    assert_eq!(s, StatusCode::OK, "{info}");
    assert_eq!(info["entities"], 1000);
    let (s, d) =
        call(&app, Method::POST, "/cohorts", Some(json!({"parent": "c0", "constraint": {"dimension": "FOCUS", "op": "has_event"}}))).await;
    assert_eq!(s, StatusCode::OK, "{d}");
    assert_eq!(d["included_size"], 900);
    let (s, _) = call(&app, Method::PUT, "/session/focus", Some(json!({"cohort_id": d["included"]}))).await;
    assert_eq!(s, StatusCode::OK);
    app
}

#[tokio::test]
async fn nothing_loaded_is_not_found() {
    let app = router(Arc::new(AppState::new(Execution::Sequential, ".".into())));
    let (s, body) = call(&app, Method::GET, "/cohorts", None).await;
    assert_eq!(s, StatusCode::NOT_FOUND);
    assert_eq!(body["kind"], "unknown_dataset");
}

#[tokio::test]
async fn assessment_danger_and_errors() {
    let dir = tempfile::tempdir().unwrap();
    let app = high_danger_fixture(dir.path()).await;

    let (s, a) = call(&app, Method::PUT, "/reweight/config", Some(json!({"dims": ["D0", "D1"], "C": 1.0}))).await;
    assert_eq!(s, StatusCode::OK, "{a}");
    let n = a["danger"]["normalized"].as_f64().unwrap();
    assert!((n - 1.71).abs() < 0.02, "{n}");
    assert_eq!(a["danger"]["over_threshold"], true);
    assert_eq!(a["table"]["rows"].as_array().unwrap().len(), 4);

    let (s, e) = call(&app, Method::PUT, "/reweight/config", Some(json!({"dims": [], "C": 1.0}))).await;
    assert_eq!(s, StatusCode::BAD_REQUEST);
    assert_eq!(e["kind"], "invalid_config");

    let (s, _) = call(&app, Method::GET, "/dimensions/stats?cohort=c42", None).await;
    assert_eq!(s, StatusCode::NOT_FOUND);
    let (s, _) = call(&app, Method::GET, "/datasets/zz/hierarchy", None).await;
    assert_eq!(s, StatusCode::NOT_FOUND);
    let (s, h) = call(&app, Method::GET, "/datasets/t3/hierarchy", None).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(h["nodes"].as_array().unwrap().len(), 3);

    let (s, c) = call(&app, Method::GET, "/cohorts", None).await;
    assert_eq!(s, StatusCode::OK);
    let focus = c["cohorts"].as_array().unwrap().iter().find(|c| c["id"] == "c1").unwrap().clone();
    assert_eq!(focus["danger"]["over_threshold"], true);
    let other = c["cohorts"].as_array().unwrap().iter().find(|c| c["id"] == "c2").unwrap().clone();
    assert_eq!(other["danger"]["degenerate"], false);
    assert!(c["cohorts"][0]["danger"].is_null(), "baseline has no danger");
}

#[tokio::test]
async fn empty_focus_is_unprocessable() {
    let dir = tempfile::tempdir().unwrap();
    let app = high_danger_fixture(dir.path()).await;
    // c1 is the FOCUS cohort; deriving "has D0" inside c2 (pattern 0 only) yields an empty cohort.
    let (_, d) =
        call(&app, Method::POST, "/cohorts", Some(json!({"parent": "c2", "constraint": {"dimension": "D0", "op": "has_event"}}))).await;
    assert_eq!(d["included_size"], 0);
    call(&app, Method::PUT, "/session/focus", Some(json!({"cohort_id": d["included"]}))).await;
    let (s, e) = call(&app, Method::PUT, "/reweight/config", Some(json!({"dims": ["D0"], "C": 1.0}))).await;
    assert_eq!(s, StatusCode::UNPROCESSABLE_ENTITY, "{e}");
    assert_eq!(e["kind"], "empty_focus");
    call(&app, Method::PUT, "/session/focus", Some(json!({"cohort_id": null}))).await;
    let (s, e) = call(&app, Method::GET, "/dimensions/stats", None).await;
    assert_eq!(s, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(e["kind"], "no_focus");
}

#[tokio::test]
async fn apply_then_weighted_stats() {
    let dir = tempfile::tempdir().unwrap();
    let app = high_danger_fixture(dir.path()).await;
    let (_, before) = call(&app, Method::GET, "/dimensions/stats?weighted=false", None).await;
    let (s, _) = call(&app, Method::PUT, "/reweight/config", Some(json!({"dims": ["D1"], "C": 1.0}))).await;
    assert_eq!(s, StatusCode::OK);
    let (_, still) = call(&app, Method::GET, "/dimensions/stats?weighted=false", None).await;
    assert_eq!(before["dimensions"], still["dimensions"], "assessment must not touch statistics");

    let (s, applied) = call(&app, Method::POST, "/reweight/apply", None).await;
    assert_eq!(s, StatusCode::OK, "{applied}");
    let (_, after) = call(&app, Method::GET, "/dimensions/stats?weighted=true", None).await;
    assert!(after["revision"].as_u64().unwrap() > before["revision"].as_u64().unwrap());
    let d1 = after["dimensions"].as_array().unwrap().iter().find(|r| r["code"] == "D1").unwrap().clone();
    assert!(d1["distance_weighted"].as_f64().unwrap() <= 1e-6, "{d1}");

    for uri in [
        "/layout/icicle?t_s=0.05&sort=weighted-distance",
        "/layout/replace?dim=D1",
        "/plots/scatter?cap=2",
        "/plots/contour",
        "/plots/vector?threshold=0.0",
        "/plots/setvis",
        "/dimensions/D1/distribution",
    ] {
        let (s, body) = call(&app, Method::GET, uri, None).await;
        assert_eq!(s, StatusCode::OK, "{uri}: {body}");
        assert_eq!(body["revision"], after["revision"], "{uri}");
    }
    let (s, _) = call(&app, Method::GET, "/layout/icicle?t_s=0", None).await;
    assert_eq!(s, StatusCode::BAD_REQUEST);
    let (s, _) = call(&app, Method::GET, "/layout/icicle?sort=bogus", None).await;
    assert_eq!(s, StatusCode::BAD_REQUEST);
    let (s, _) = call(&app, Method::GET, "/layout/replace?dim=D0", None).await;
    assert_eq!(s, StatusCode::BAD_REQUEST);
}

#[tokio::test]
async fn session_get_put() {
    let dir = tempfile::tempdir().unwrap();
    let app = high_danger_fixture(dir.path()).await;
    let (_, mut session) = call(&app, Method::GET, "/session", None).await;
    let rev = session["revision"].as_u64().unwrap();
    session["layout"]["saliency_threshold"] = json!(0.3);
    session["revision"] = json!(rev + 10);
    let (s, put) = call(&app, Method::PUT, "/session", Some(session.clone())).await;
    assert_eq!(s, StatusCode::OK, "{put}");
    assert_eq!(put["revision"], rev + 10);
    assert_eq!(put["layout"]["saliency_threshold"], 0.3);
    session["baseline"] = json!("c77");
    let (s, _) = call(&app, Method::PUT, "/session", Some(session)).await;
    assert_eq!(s, StatusCode::NOT_FOUND);
    let (_, again) = call(&app, Method::GET, "/session", None).await;
    assert_eq!(again["revision"], rev + 10, "failed PUT must not change state");
}

#[tokio::test]
async fn concurrent_writer_gets_conflict() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = counts_corpus(&[100, 200, 300, 400], &[0, 200, 300, 400]).unwrap();
    let manifest = write_dataset_files(dir.path(), "t3", &corpus.hierarchy, &corpus.entities).unwrap();
    let state = Arc::new(AppState::new(Execution::Parallel, manifest.parent().unwrap().to_path_buf()));
    let app = router(state.clone());
    call(&app, Method::POST, "/datasets", Some(json!({"entities_path": "entities.jsonl", "hierarchy_path": "hierarchy.jsonl"}))).await;

    let mut statuses = Vec::new();
    let mut handles = Vec::new();
    for _ in 0..8 {
        let app = app.clone();
        handles.push(tokio::spawn(async move {
            call(&app, Method::POST, "/cohorts", Some(json!({"parent": "c0", "constraint": {"dimension": "D0", "op": "has_event"}})))
                .await
                .0
        }));
    }
    for h in handles {
        statuses.push(h.await.unwrap());
    }
    assert!(statuses.iter().all(|s| *s == StatusCode::OK || *s == StatusCode::CONFLICT));
    let ok = statuses.iter().filter(|s| **s == StatusCode::OK).count();
    let (_, c) = call(&app, Method::GET, "/cohorts", None).await;
    assert_eq!(c["cohorts"].as_array().unwrap().len(), 1 + 2 * ok);
}
