mod common;

use std::sync::Arc;

use glint_exprig::http::router;
use glint_exprig::{Catalog, Experiment};
use reqwest::StatusCode;
use serde_json::{json, Value};
use tempfile::TempDir;

async fn spawn(dir: &TempDir) -> String {
    let stimuli = dir.path().join("stimuli");
    std::fs::create_dir_all(&stimuli).unwrap();
    let catalog = Catalog::new(common::design()).unwrap();
    for e in catalog.entries() {
        std::fs::write(stimuli.join(&e.image), e.id.as_bytes()).unwrap();
    }
    let exp = Arc::new(Experiment::open(catalog, dir.path().join("log.ndjson")).unwrap());
    let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
    let addr = listener.local_addr().unwrap();
    tokio::spawn(async move { axum::serve(listener, router(exp, stimuli)).await.unwrap() });
    format!("http://{addr}")
}

#[tokio::test]
async fn scripted_session_over_http() {
    let dir = TempDir::new().unwrap();
    let base = spawn(&dir).await;
    let client = reqwest::Client::new();

    let resp = client
        .post(format!("{base}/sessions"))
        .json(&json!({"observer": "ann", "session": 1, "seed": 9}))
        .send()
        .await
        .unwrap();
    assert_eq!(resp.status(), StatusCode::CREATED);
    let session: Value = resp.json().await.unwrap();
    let id = session["id"].as_u64().unwrap();
    assert_eq!(session["trials"], 75);

    let dup = client
        .post(format!("{base}/sessions"))
        .json(&json!({"observer": "ann", "session": 1, "seed": 10}))
        .send()
        .await
        .unwrap();
    assert_eq!(dup.status(), StatusCode::CONFLICT);

    let mut done = 0;
    loop {
        let trial: Value = client
            .get(format!("{base}/sessions/{id}/trial"))
            .send()
            .await
            .unwrap()
            .json()
            .await
            .unwrap();
        if trial["complete"] == true {
            break;
        }
        let stim = trial["stimulus_id"].as_str().unwrap().to_owned();
        let img = client
            .get(format!("{base}{}", trial["image_url"].as_str().unwrap()))
            .send()
            .await
            .unwrap();
        assert_eq!(img.status(), StatusCode::OK);
        assert_eq!(img.bytes().await.unwrap().as_ref(), stim.as_bytes());

        if done == 0 {
            let bad = client
                .post(format!("{base}/sessions/{id}/ratings"))
                .json(&json!({"stimulus_id": stim, "metal": 30, "shiny_black": 50, "shiny_white": 15, "other": 10}))
                .send()
                .await
                .unwrap();
            assert_eq!(bad.status(), StatusCode::UNPROCESSABLE_ENTITY);
            let body: Value = bad.json().await.unwrap();
            assert_eq!(body["sum"], 105.0);
        }
        let ok = client
            .post(format!("{base}/sessions/{id}/ratings"))
            .json(&json!({"stimulus_id": stim, "metal": 30, "shiny_black": 50, "shiny_white": 15, "other": 5}))
            .send()
            .await
            .unwrap();
        assert_eq!(ok.status(), StatusCode::OK);
        if done == 0 {
            let again = client
                .post(format!("{base}/sessions/{id}/ratings"))
                .json(&json!({"stimulus_id": stim, "metal": 30, "shiny_black": 50, "shiny_white": 15, "other": 5}))
                .send()
                .await
                .unwrap();
            assert_eq!(again.status(), StatusCode::CONFLICT);
            let body: Value = again.json().await.unwrap();
            assert_eq!(body["error"], "already_recorded");
        }
        done += 1;
    }
    assert_eq!(done, 75);

    let csv = client.get(format!("{base}/export.csv")).send().await.unwrap().text().await.unwrap();
    assert_eq!(csv.lines().count(), 76);
    let records = glint_core::analysis::read_ratings_csv(csv.as_bytes()).unwrap();
    assert!(records.iter().all(|r| r.ratings.sum() == 100.0));
}

#[tokio::test]
async fn error_statuses() {
    let dir = TempDir::new().unwrap();
    let base = spawn(&dir).await;
    let client = reqwest::Client::new();
    let get = client.get(format!("{base}/sessions/5/trial")).send().await.unwrap();
    assert_eq!(get.status(), StatusCode::NOT_FOUND);
    let bad = client.post(format!("{base}/sessions")).body("not json").send().await.unwrap();
    assert_eq!(bad.status(), StatusCode::BAD_REQUEST);
    let missing = client.get(format!("{base}/stimuli/none.png")).send().await.unwrap();
    assert_eq!(missing.status(), StatusCode::NOT_FOUND);
}
