use std::path::Path;
use std::sync::Arc;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;

use liquidbench_cli::serve::{router, votes_file, AppState, SessionView, VoteAck};
use liquidbench_core::study::{aggregate, generate_manifest, read_votes, tally, StudyManifest, VideoEntry};

fn manifest(study: &str, ids: &[&str], seed: u64) -> StudyManifest {
    let videos = ids.iter().map(|id| VideoEntry::new(*id, format!("/videos/{id}.mp4"))).collect();
    generate_manifest(study, videos, Some("/videos/ref.mp4".into()), seed).unwrap()
}

async fn call(app: &Router, req: Request<Body>) -> (StatusCode, Value) {
    let res = app.clone().oneshot(req).await.unwrap();
    let status = res.status();
    let bytes = res.into_body().collect().await.unwrap().to_bytes();
    let v = if bytes.is_empty() { Value::Null } else { serde_json::from_slice(&bytes).unwrap_or(Value::Null) };
    (status, v)
}

async fn get(app: &Router, uri: &str) -> (StatusCode, Value) {
    call(app, Request::get(uri).body(Body::empty()).unwrap()).await
}

async fn post(app: &Router, body: Value) -> (StatusCode, Value) {
    let req = Request::post("/api/vote").header("content-type", "application/json").body(Body::from(body.to_string())).unwrap();
    call(app, req).await
}

fn start(manifests: Vec<StudyManifest>, dir: &Path) -> Router {
    router(AppState::open(manifests, dir).unwrap(), None)
}

#[tokio::test]
async fn manifest_and_session_views() {
    let d = tempfile::tempdir().unwrap();
    let mut m = manifest("s", &["a", "b", "c"], 1);
    m.videos[2].dummy = true;
    let app = start(vec![m.clone()], d.path());

    let (st, v) = get(&app, "/api/manifest/s").await;
    assert_eq!(st, StatusCode::OK);
    assert_eq!(v["questions"], 6);
    assert_eq!(v["reference"], "/videos/ref.mp4");
    assert!(v["videos"][2].get("dummy").is_none());
    assert_eq!(get(&app, "/api/manifest/nope").await.0, StatusCode::NOT_FOUND);

    let (_, v) = get(&app, "/api/session/s/worker-1").await;
    let s: SessionView = serde_json::from_value(v).unwrap();
    let order: Vec<usize> = s.questions.iter().map(|q| q.question).collect();
    assert_eq!(order, m.session_order("worker-1"));
    assert_eq!((s.total, s.answered, s.next), (6, 0, Some(0)));
    let q = &s.questions[0];
    assert_eq!(q.left.id, m.questions[q.question].left);
    assert_eq!(q.left.uri, format!("/videos/{}.mp4", q.left.id));
}

#[tokio::test]
async fn invalid_votes_are_rejected() {
    let d = tempfile::tempdir().unwrap();
    let m = manifest("s", &["a", "b"], 2);
    let app = start(vec![m.clone()], d.path());
    let base = json!({"study": "s", "participant": "p", "question": 0, "choice": m.questions[0].left});

    let mut bad = base.clone();
    bad["choice"] = json!("zzz");
    assert_eq!(post(&app, bad).await.0, StatusCode::BAD_REQUEST);
    let mut bad = base.clone();
    bad["question"] = json!(2);
    assert_eq!(post(&app, bad).await.0, StatusCode::BAD_REQUEST);
    let mut bad = base.clone();
    bad["study"] = json!("other");
    assert_eq!(post(&app, bad).await.0, StatusCode::NOT_FOUND);
    let mut bad = base.clone();
    bad["participant"] = json!("");
    assert_eq!(post(&app, bad).await.0, StatusCode::BAD_REQUEST);
    let req = Request::post("/api/vote").header("content-type", "application/json").body(Body::from("{")).unwrap();
    assert!(call(&app, req).await.0.is_client_error());

    assert!(!votes_file(d.path(), "s").exists() || std::fs::read_to_string(votes_file(d.path(), "s")).unwrap().is_empty());
}

#[tokio::test]
async fn duplicate_submissions_are_stored_once() {
    let d = tempfile::tempdir().unwrap();
    let m = manifest("s", &["a", "b", "c"], 3);
    let app = start(vec![m.clone()], d.path());
    let q = m.questions[4].clone();
    let first = json!({"study": "s", "participant": "p", "question": 4, "choice": q.left, "timestamp": 10});
    let retry = json!({"study": "s", "participant": "p", "question": 4, "choice": q.right, "timestamp": 11});

    // a double click, a retry after a lost response, and a burst of concurrent repeats
    let (st, v) = post(&app, first.clone()).await;
    assert_eq!(st, StatusCode::OK);
    assert!(serde_json::from_value::<VoteAck>(v).unwrap().stored);
    let (_, v) = post(&app, first.clone()).await;
    assert!(!serde_json::from_value::<VoteAck>(v).unwrap().stored);
    let (_, v) = post(&app, retry).await;
    assert!(!serde_json::from_value::<VoteAck>(v).unwrap().stored);
    let burst: Vec<_> = (0..16).map(|_| tokio::spawn({
        let app = app.clone();
        let body = first.clone();
        async move { post(&app, body).await }
    })).collect();
    for h in burst {
        assert_eq!(h.await.unwrap().0, StatusCode::OK);
    }

    let stored = read_votes(&votes_file(d.path(), "s")).unwrap();
    assert_eq!(stored.len(), 1);
    assert_eq!(stored[0].choice, q.left);
    assert_eq!(stored[0].timestamp, 10);
    let (_, p) = get(&app, "/api/progress/s/p").await;
    assert_eq!(p["answered"], 1);
}

#[tokio::test]
async fn concurrent_participants_share_one_log() {
    let d = tempfile::tempdir().unwrap();
    let m = manifest("s", &["a", "b", "c", "d"], 4);
    let app = start(vec![m.clone()], d.path());
    let mut handles = Vec::new();
    for p in 0..8 {
        for q in 0..m.questions.len() {
            let app = app.clone();
            let body = json!({"study": "s", "participant": format!("p{p}"), "question": q, "choice": m.questions[q].left});
            handles.push(tokio::spawn(async move { post(&app, body).await.0 }));
        }
    }
    for h in handles {
        assert_eq!(h.await.unwrap(), StatusCode::OK);
    }
    let votes = read_votes(&votes_file(d.path(), "s")).unwrap();
    assert_eq!(votes.len(), 8 * 12);
    let t = tally(&votes, &m).unwrap();
    assert_eq!(t.verdicts.len(), 8);
}

/// Two scripted participants: one always picks the alphabetically first
/// video, one always picks the left video. The stored log must give exactly
/// the win matrix those rules imply.
#[tokio::test]
async fn scripted_session_gives_the_exact_win_matrix() {
    let d = tempfile::tempdir().unwrap();
    let ids = ["a", "b", "c"];
    let m = manifest("s", &ids, 5);
    let app = start(vec![m.clone()], d.path());

    for (who, rule) in [("alpha", 0), ("lefty", 1)] {
        let (_, v) = get(&app, &format!("/api/session/s/{who}")).await;
        let s: SessionView = serde_json::from_value(v).unwrap();
        for q in &s.questions {
            let choice = if rule == 0 { q.left.id.clone().min(q.right.id.clone()) } else { q.left.id.clone() };
            let (st, _) = post(&app, json!({"study": "s", "participant": who, "question": q.question, "choice": choice})).await;
            assert_eq!(st, StatusCode::OK);
        }
        let (_, p) = get(&app, &format!("/api/progress/s/{who}")).await;
        assert_eq!(p["complete"], true);
        assert_eq!(p["completion_code"], m.completion_code(who));
    }

    let votes = read_votes(&votes_file(d.path(), "s")).unwrap();
    let w = aggregate(&votes, &m).unwrap();
    let mut expected = [[0u64; 3]; 3];
    for q in &m.questions {
        let (l, r) = (ids.iter().position(|x| *x == q.left).unwrap(), ids.iter().position(|x| *x == q.right).unwrap());
        expected[l.min(r)][l.max(r)] += 1;
        expected[l][r] += 1;
    }
    for i in 0..3 {
        for j in 0..3 {
            assert_eq!(w.get(i, j), expected[i][j], "{i} over {j}");
        }
    }
    // the alphabetical voter is perfectly consistent
    let t = tally(&votes, &m).unwrap();
    let alpha = t.verdicts.iter().find(|v| v.participant == "alpha").unwrap();
    assert_eq!(alpha.consistency, 1.0);
}

#[tokio::test]
async fn sessions_resume_after_a_restart() {
    let d = tempfile::tempdir().unwrap();
    let m = manifest("s", &["a", "b"], 6);
    {
        let app = start(vec![m.clone()], d.path());
        let body = json!({"study": "s", "participant": "p", "question": 1, "choice": m.questions[1].right});
        assert_eq!(post(&app, body).await.0, StatusCode::OK);
    }
    // a torn last line from a crash is skipped
    let log = votes_file(d.path(), "s");
    let mut text = std::fs::read_to_string(&log).unwrap();
    text.push_str("{\"study\":\"s\",\"partic");
    std::fs::write(&log, text).unwrap();

    let app = start(vec![m.clone()], d.path());
    let (_, v) = get(&app, "/api/session/s/p").await;
    let s: SessionView = serde_json::from_value(v).unwrap();
    assert_eq!(s.answered, 1);
    let q1 = s.questions.iter().find(|q| q.question == 1).unwrap();
    assert_eq!(q1.answer.as_deref(), Some(m.questions[1].right.as_str()));
    let body = json!({"study": "s", "participant": "p", "question": 1, "choice": m.questions[1].left});
    let (_, v) = post(&app, body).await;
    assert!(!serde_json::from_value::<VoteAck>(v).unwrap().stored);
}

#[tokio::test]
async fn write_failures_release_the_answer() {
    let d = tempfile::tempdir().unwrap();
    let m = manifest("s", &["a", "b"], 7);
    let state: Arc<AppState> = AppState::open(vec![m.clone()], d.path()).unwrap();
    let app = router(state, None);
    // a directory where the log file should be makes every append fail
    std::fs::create_dir(votes_file(d.path(), "s")).unwrap();
    let body = json!({"study": "s", "participant": "p", "question": 0, "choice": m.questions[0].left});
    assert_eq!(post(&app, body.clone()).await.0, StatusCode::INTERNAL_SERVER_ERROR);
    let (_, p) = get(&app, "/api/progress/s/p").await;
    assert_eq!(p["answered"], 0);

    std::fs::remove_dir(votes_file(d.path(), "s")).unwrap();
    let (st, v) = post(&app, body).await;
    assert_eq!(st, StatusCode::OK);
    assert!(serde_json::from_value::<VoteAck>(v).unwrap().stored);
}

#[tokio::test]
async fn static_files_are_served_beside_the_api() {
    let d = tempfile::tempdir().unwrap();
    let web = d.path().join("web");
    std::fs::create_dir(&web).unwrap();
    std::fs::write(web.join("index.html"), "<html>vote</html>").unwrap();
    let app = router(AppState::open(vec![manifest("s", &["a", "b"], 8)], &d.path().join("votes")).unwrap(), Some(&web));
    let res = app.clone().oneshot(Request::get("/index.html").body(Body::empty()).unwrap()).await.unwrap();
    assert_eq!(res.status(), StatusCode::OK);
    assert_eq!(get(&app, "/api/manifest/s").await.0, StatusCode::OK);
    assert_eq!(get(&app, "/missing.js").await.0, StatusCode::NOT_FOUND);
}
