//! `liquidbench study serve`: the HTTP backend of the voting UI.
//!
//! | route | |
//! |---|---|
//! | `GET /api/manifest/{study}` | videos, reference and prompt |
//! | `GET /api/session/{study}/{participant}` | the participant's question order and answers so far |
//! | `POST /api/vote` | record one answer; repeats are acknowledged but not stored |
//! | `GET /api/progress/{study}/{participant}` | answered count and completion code |
//!
//! Votes go to `<votes dir>/<study>.votes.jsonl` through one writer thread,
//! and the logs are read back at startup so interrupted sessions resume.

use std::collections::{BTreeMap, HashMap};
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{Context as _, Result};
use axum::extract::{Path as UrlPath, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use liquidbench_core::study::{StudyManifest, VoteRecord};
use serde::{Deserialize, Serialize};
use tokio::sync::{mpsc, oneshot};
use tower_http::services::ServeDir;

use crate::args::ServeArgs;
use crate::exit::usage;
use crate::settings::Context;

pub fn votes_file(dir: &Path, study: &str) -> PathBuf {
    dir.join(format!("{study}.votes.jsonl"))
}

struct AppendRequest {
    vote: VoteRecord,
    ack: oneshot::Sender<std::io::Result<()>>,
}

/// Answers per (study, participant), keyed by question.
type Answers = HashMap<(String, String), BTreeMap<usize, String>>;

pub struct AppState {
    manifests: HashMap<String, StudyManifest>,
    answers: Mutex<Answers>,
    writer: mpsc::Sender<AppendRequest>,
}

impl AppState {
    /// Load existing vote logs from `votes_dir` and start the writer thread.
    pub fn open(manifests: Vec<StudyManifest>, votes_dir: &Path) -> Result<Arc<Self>> {
        std::fs::create_dir_all(votes_dir).with_context(|| format!("creating {}", votes_dir.display()))?;
        let mut by_id = HashMap::new();
        let mut answers: Answers = HashMap::new();
        for m in manifests {
            let log = votes_file(votes_dir, &m.study);
            if log.exists() {
                let f = BufReader::new(File::open(&log)?);
                for (n, line) in f.lines().enumerate() {
                    let line = line?;
                    if line.trim().is_empty() {
                        continue;
                    }
                    // A torn final line from a crash is skipped, anything else is fatal.
                    let v: VoteRecord = match serde_json::from_str(&line) {
                        Ok(v) => v,
                        Err(e) => {
                            log::warn!("{}:{}: skipping unreadable vote: {e}", log.display(), n + 1);
                            continue;
                        }
                    };
                    m.check_vote(&v).with_context(|| format!("{}:{}", log.display(), n + 1))?;
                    answers.entry((v.study.clone(), v.participant.clone())).or_default().entry(v.question).or_insert(v.choice);
                }
            }
            if by_id.insert(m.study.clone(), m).is_some() {
                return Err(usage("two manifests share a study id"));
            }
        }
        let (tx, rx) = mpsc::channel(1024);
        let dir = votes_dir.to_path_buf();
        std::thread::Builder::new().name("vote-writer".into()).spawn(move || append_loop(dir, rx))?;
        Ok(Arc::new(Self { manifests: by_id, answers: Mutex::new(answers), writer: tx }))
    }
}

/// The only code that touches the vote logs while serving.
fn append_loop(dir: PathBuf, mut rx: mpsc::Receiver<AppendRequest>) {
    let mut files: HashMap<String, File> = HashMap::new();
    while let Some(req) = rx.blocking_recv() {
        let res = (|| {
            let f = match files.get_mut(&req.vote.study) {
                Some(f) => f,
                None => {
                    let f = OpenOptions::new().create(true).append(true).open(votes_file(&dir, &req.vote.study))?;
                    files.entry(req.vote.study.clone()).or_insert(f)
                }
            };
            let mut line = serde_json::to_string(&req.vote).map_err(std::io::Error::other)?;
            line.push('\n');
            f.write_all(line.as_bytes())?;
            f.sync_data()
        })();
        let _ = req.ack.send(res);
    }
}

#[derive(Debug)]
pub enum ApiError {
    NotFound(String),
    BadRequest(String),
    Internal(String),
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let (code, msg) = match self {
            ApiError::NotFound(m) => (StatusCode::NOT_FOUND, m),
            ApiError::BadRequest(m) => (StatusCode::BAD_REQUEST, m),
            ApiError::Internal(m) => (StatusCode::INTERNAL_SERVER_ERROR, m),
        };
        (code, Json(serde_json::json!({ "error": msg }))).into_response()
    }
}

type ApiResult<T> = std::result::Result<Json<T>, ApiError>;

fn manifest<'a>(state: &'a AppState, study: &str) -> std::result::Result<&'a StudyManifest, ApiError> {
    state.manifests.get(study).ok_or_else(|| ApiError::NotFound(format!("unknown study {study:?}")))
}

fn prompt(m: &StudyManifest) -> &'static str {
    if m.reference.is_some() {
        "Which video is closer to the reference?"
    } else {
        "Which video do you prefer?"
    }
}

#[derive(Debug, Serialize, Deserialize)]
pub struct VideoView {
    pub id: String,
    pub uri: String,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ManifestView {
    pub study: String,
    pub prompt: String,
    pub reference: Option<String>,
    pub videos: Vec<VideoView>,
    pub questions: usize,
}

async fn get_manifest(State(state): State<Arc<AppState>>, UrlPath(study): UrlPath<String>) -> ApiResult<ManifestView> {
    let m = manifest(&state, &study)?;
    Ok(Json(ManifestView {
        study: m.study.clone(),
        prompt: prompt(m).into(),
        reference: m.reference.clone(),
        // dummy flags stay on the server
        videos: m.videos.iter().map(|v| VideoView { id: v.id.clone(), uri: v.uri.clone() }).collect(),
        questions: m.questions.len(),
    }))
}

#[derive(Debug, Serialize, Deserialize)]
pub struct QuestionView {
    pub position: usize,
    pub question: usize,
    pub left: VideoView,
    pub right: VideoView,
    pub answer: Option<String>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct SessionView {
    pub study: String,
    pub participant: String,
    pub prompt: String,
    pub reference: Option<String>,
    pub total: usize,
    pub answered: usize,
    /// Position of the first unanswered question.
    pub next: Option<usize>,
    pub questions: Vec<QuestionView>,
}

fn video_view(m: &StudyManifest, id: &str) -> VideoView {
    VideoView { id: id.to_string(), uri: m.video(id).map(|v| v.uri.clone()).unwrap_or_default() }
}

fn check_participant(p: &str) -> std::result::Result<(), ApiError> {
    if p.is_empty() || p.len() > 128 || p.chars().any(char::is_control) {
        return Err(ApiError::BadRequest("participant id must be 1 to 128 printable characters".into()));
    }
    Ok(())
}

async fn get_session(
    State(state): State<Arc<AppState>>,
    UrlPath((study, participant)): UrlPath<(String, String)>,
) -> ApiResult<SessionView> {
    let m = manifest(&state, &study)?;
    check_participant(&participant)?;
    let answers = state.answers.lock().unwrap().get(&(study.clone(), participant.clone())).cloned().unwrap_or_default();
    let questions: Vec<QuestionView> = m
        .session_order(&participant)
        .into_iter()
        .enumerate()
        .map(|(position, q)| QuestionView {
            position,
            question: q,
            left: video_view(m, &m.questions[q].left),
            right: video_view(m, &m.questions[q].right),
            answer: answers.get(&q).cloned(),
        })
        .collect();
    Ok(Json(SessionView {
        study: m.study.clone(),
        participant,
        prompt: prompt(m).into(),
        reference: m.reference.clone(),
        total: questions.len(),
        answered: answers.len(),
        next: questions.iter().position(|q| q.answer.is_none()),
        questions,
    }))
}

#[derive(Debug, Serialize, Deserialize)]
pub struct VoteSubmission {
    pub study: String,
    pub participant: String,
    pub question: usize,
    pub choice: String,
    /// Milliseconds since the epoch; the server clock when absent.
    #[serde(default)]
    pub timestamp: Option<u64>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct Progress {
    pub study: String,
    pub participant: String,
    pub answered: usize,
    pub total: usize,
    pub complete: bool,
    pub completion_code: Option<String>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct VoteAck {
    /// False when this question was already answered; the first answer stands.
    pub stored: bool,
    pub progress: Progress,
}

fn progress(state: &AppState, m: &StudyManifest, participant: &str) -> Progress {
    let answered = state
        .answers
        .lock()
        .unwrap()
        .get(&(m.study.clone(), participant.to_string()))
        .map_or(0, BTreeMap::len);
    let complete = answered == m.questions.len();
    Progress {
        study: m.study.clone(),
        participant: participant.to_string(),
        answered,
        total: m.questions.len(),
        complete,
        completion_code: complete.then(|| m.completion_code(participant)),
    }
}

async fn post_vote(State(state): State<Arc<AppState>>, Json(sub): Json<VoteSubmission>) -> ApiResult<VoteAck> {
    let m = manifest(&state, &sub.study)?;
    check_participant(&sub.participant)?;
    let vote = VoteRecord {
        study: sub.study,
        participant: sub.participant,
        question: sub.question,
        choice: sub.choice,
        timestamp: sub.timestamp.unwrap_or_else(now_ms),
    };
    m.check_vote(&vote).map_err(|e| ApiError::BadRequest(e.to_string()))?;
    let key = (vote.study.clone(), vote.participant.clone());
    {
        // Reserve the answer before writing so a concurrent repeat sees it.
        let mut answers = state.answers.lock().unwrap();
        let slot = answers.entry(key.clone()).or_default();
        if slot.contains_key(&vote.question) {
            drop(answers);
            return Ok(Json(VoteAck { stored: false, progress: progress(&state, m, &vote.participant) }));
        }
        slot.insert(vote.question, vote.choice.clone());
    }
    let (ack, done) = oneshot::channel();
    let question = vote.question;
    let written = match state.writer.send(AppendRequest { vote, ack }).await {
        Ok(()) => done.await.map_err(|_| "vote writer stopped".to_string()).and_then(|r| r.map_err(|e| e.to_string())),
        Err(_) => Err("vote writer stopped".to_string()),
    };
    if let Err(e) = written {
        if let Some(slot) = state.answers.lock().unwrap().get_mut(&key) {
            slot.remove(&question);
        }
        log::error!("could not store vote: {e}");
        return Err(ApiError::Internal(format!("could not store vote: {e}")));
    }
    Ok(Json(VoteAck { stored: true, progress: progress(&state, m, &key.1) }))
}

async fn get_progress(
    State(state): State<Arc<AppState>>,
    UrlPath((study, participant)): UrlPath<(String, String)>,
) -> ApiResult<Progress> {
    let m = manifest(&state, &study)?;
    check_participant(&participant)?;
    Ok(Json(progress(&state, m, &participant)))
}

fn now_ms() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_millis() as u64)
}

pub fn router(state: Arc<AppState>, static_dir: Option<&Path>) -> Router {
    let api = Router::new()
        .route("/api/manifest/{study}", get(get_manifest))
        .route("/api/session/{study}/{participant}", get(get_session))
        .route("/api/vote", post(post_vote))
        .route("/api/progress/{study}/{participant}", get(get_progress))
        .with_state(state);
    match static_dir {
        Some(dir) => api.fallback_service(ServeDir::new(dir)),
        None => api,
    }
}

pub fn run(ctx: &Context, args: &ServeArgs) -> Result<()> {
    let manifests = args
        .manifests
        .iter()
        .map(|p| StudyManifest::load(p).with_context(|| format!("loading {}", p.display())))
        .collect::<Result<Vec<_>>>()?;
    let votes_dir = args.votes_dir.clone().unwrap_or_else(|| ctx.data_root.join("votes"));
    let addr: std::net::SocketAddr = args.addr.parse().map_err(|e| usage(format!("bad address {:?}: {e}", args.addr)))?;
    let rt = tokio::runtime::Runtime::new()?;
    rt.block_on(async {
        let state = AppState::open(manifests, &votes_dir)?;
        let app = router(state, args.static_dir.as_deref());
        let listener = tokio::net::TcpListener::bind(addr).await.with_context(|| format!("binding {addr}"))?;
        log::info!("serving on http://{addr}, votes in {}", votes_dir.display());
        axum::serve(listener, app)
            .with_graceful_shutdown(async {
                let _ = tokio::signal::ctrl_c().await;
            })
            .await?;
        Ok(())
    })
}
