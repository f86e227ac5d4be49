//! Pairwise study sessions: manifests, vote records, consistency filtering
//! and aggregation into win matrices.

mod votes;


use std::collections::{BTreeMap, HashMap, HashSet};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::analytics::{preference_probability, WinMatrix};

pub use votes::{dedup, read_votes, read_votes_csv, read_votes_jsonl, write_votes_csv, write_votes_jsonl};

/// Participants below this consistency are rejected.
pub const CONSISTENCY_THRESHOLD: f64 = 0.7;

/// Largest study size used in practice; larger ones are allowed with a warning.
pub const MAX_RECOMMENDED_VIDEOS: usize = 7;

#[derive(Debug, Error, PartialEq)]
pub enum StudyError {
    #[error("a study needs at least 2 videos, got {0}")]
    TooFewVideos(usize),

    #[error("duplicate video id {0:?}")]
    DuplicateVideo(String),

    #[error("unknown video id {0:?}")]
    UnknownVideo(String),

    #[error("vote belongs to study {found:?}, expected {expected:?}")]
    WrongStudy { expected: String, found: String },

    #[error("question {question} out of range, study has {questions}")]
    QuestionOutOfRange { question: usize, questions: usize },

    #[error("choice {choice:?} is not one of the two videos in question {question}")]
    InvalidChoice { question: usize, choice: String },

    #[error("manifest violates pair invariants: {0}")]
    InvalidManifest(String),

    #[error("expected {expected} scores, got {found}")]
    ScoreCount { expected: usize, found: usize },

    #[error("no participant passed the consistency filter")]
    NoAcceptedParticipants,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct VideoEntry {
    pub id: String,
    pub uri: String,
    /// Attention-check video: shown in sessions, excluded from scoring.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub dummy: bool,
}

impl VideoEntry {
    pub fn new(id: impl Into<String>, uri: impl Into<String>) -> Self {
        Self { id: id.into(), uri: uri.into(), dummy: false }
    }
}

/// One presentation: `left` and `right` are video ids in screen order.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Question {
    pub left: String,
    pub right: String,
}

impl Question {
    fn key(&self) -> (&str, &str) {
        if self.left <= self.right {
            (&self.left, &self.right)
        } else {
            (&self.right, &self.left)
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StudyManifest {
    pub study: String,
    pub videos: Vec<VideoEntry>,
    pub reference: Option<String>,
    pub questions: Vec<Question>,
    pub rng_seed: u64,
}

/// Every unordered pair twice, each presentation with an independent side
/// flip, all questions shuffled.
pub fn generate_manifest(
    study: &str,
    videos: Vec<VideoEntry>,
    reference: Option<String>,
    rng_seed: u64,
) -> Result<StudyManifest, StudyError> {
    let m = videos.len();
    if m < 2 {
        return Err(StudyError::TooFewVideos(m));
    }
    if m > MAX_RECOMMENDED_VIDEOS {
        log::warn!("study {study:?} has {m} videos, sessions grow as m(m-1) = {}", m * (m - 1));
    }
    let mut seen = HashSet::new();
    for v in &videos {
        if !seen.insert(v.id.as_str()) {
            return Err(StudyError::DuplicateVideo(v.id.clone()));
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let mut questions = Vec::with_capacity(m * (m - 1));
    for i in 0..m {
        for j in (i + 1)..m {
            for _ in 0..2 {
                let (a, b) = if rng.random::<bool>() { (i, j) } else { (j, i) };
                questions.push(Question { left: videos[a].id.clone(), right: videos[b].id.clone() });
            }
        }
    }
    questions.shuffle(&mut rng);
    Ok(StudyManifest { study: study.to_string(), videos, reference, questions, rng_seed })
}

impl StudyManifest {
    pub fn video_count(&self) -> usize {
        self.videos.len()
    }

    pub fn pair_count(&self) -> usize {
        let m = self.videos.len();
        m * (m - 1) / 2
    }

    pub fn video(&self, id: &str) -> Option<&VideoEntry> {
        self.videos.iter().find(|v| v.id == id)
    }

    /// Question indices grouped by unordered pair, in order of first appearance.
    pub fn pairs(&self) -> Vec<[usize; 2]> {
        let mut first: HashMap<(&str, &str), usize> = HashMap::new();
        let mut out = Vec::new();
        for (q, question) in self.questions.iter().enumerate() {
            match first.remove(&question.key()) {
                Some(p) => out.push([p, q]),
                None => {
                    first.insert(question.key(), q);
                }
            }
        }
        out
    }

    /// Checks the pair invariants: known ids, no self pairs, each unordered
    /// pair exactly twice.
    pub fn validate(&self) -> Result<(), StudyError> {
        let m = self.videos.len();
        if m < 2 {
            return Err(StudyError::TooFewVideos(m));
        }
        let mut ids = HashSet::new();
        for v in &self.videos {
            if !ids.insert(v.id.as_str()) {
                return Err(StudyError::DuplicateVideo(v.id.clone()));
            }
        }
        let mut counts: HashMap<(&str, &str), usize> = HashMap::new();
        for q in &self.questions {
            for id in [&q.left, &q.right] {
                if !ids.contains(id.as_str()) {
                    return Err(StudyError::UnknownVideo(id.clone()));
                }
            }
            if q.left == q.right {
                return Err(StudyError::InvalidManifest(format!("video {:?} paired with itself", q.left)));
            }
            *counts.entry(q.key()).or_default() += 1;
        }
        if counts.len() != self.pair_count() || counts.values().any(|&c| c != 2) {
            return Err(StudyError::InvalidManifest(format!(
                "{} questions over {} distinct pairs, expected each of {} pairs twice",
                self.questions.len(),
                counts.len(),
                self.pair_count()
            )));
        }
        Ok(())
    }

    pub fn to_json(&self) -> crate::Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> crate::Result<Self> {
        let m: Self = serde_json::from_str(text)?;
        m.validate()?;
        Ok(m)
    }

    pub fn load(path: &Path) -> crate::Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn save(&self, path: &Path) -> crate::Result<()> {
        let mut text = self.to_json()?;
        text.push('\n');
        std::fs::write(path, text)?;
        Ok(())
    }

    /// Question indices in the order shown to `participant`. Stable for a
    /// given manifest and participant, so a reloaded session resumes in place.
    pub fn session_order(&self, participant: &str) -> Vec<usize> {
        let mut h = Sha256::new();
        h.update(self.rng_seed.to_le_bytes());
        h.update(self.study.as_bytes());
        h.update([0]);
        h.update(participant.as_bytes());
        let digest = h.finalize();
        let mut seed = [0u8; 32];
        seed.copy_from_slice(&digest);
        let mut order: Vec<usize> = (0..self.questions.len()).collect();
        order.shuffle(&mut ChaCha8Rng::from_seed(seed));
        order
    }

    /// Short code shown to a participant who finished, for matching
    /// crowdsourcing payouts against the vote log.
    pub fn completion_code(&self, participant: &str) -> String {
        let mut h = Sha256::new();
        h.update(self.rng_seed.to_le_bytes());
        h.update(self.study.as_bytes());
        h.update([1]);
        h.update(participant.as_bytes());
        h.finalize()[..5].iter().map(|b| format!("{b:02X}")).collect()
    }

    /// Checks that `vote` belongs to this study and picks one of the two
    /// videos of its question.
    pub fn check_vote(&self, vote: &VoteRecord) -> Result<(), StudyError> {
        if vote.study != self.study {
            return Err(StudyError::WrongStudy { expected: self.study.clone(), found: vote.study.clone() });
        }
        let q = self
            .questions
            .get(vote.question)
            .ok_or(StudyError::QuestionOutOfRange { question: vote.question, questions: self.questions.len() })?;
        if vote.choice != q.left && vote.choice != q.right {
            return Err(StudyError::InvalidChoice { question: vote.question, choice: vote.choice.clone() });
        }
        Ok(())
    }
}

/// One binary judgment. `timestamp` is milliseconds since the Unix epoch.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct VoteRecord {
    pub study: String,
    pub participant: String,
    pub question: usize,
    pub choice: String,
    pub timestamp: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParticipantVerdict {
    pub participant: String,
    /// Fraction of unordered pairs answered the same way both times.
    pub consistency: f64,
    pub accepted: bool,
    pub complete: bool,
    pub answered: usize,
}

/// Consistency of one participant's (deduplicated) votes. An incomplete
/// session is never accepted.
pub fn consistency(votes: &[VoteRecord], manifest: &StudyManifest) -> Result<ParticipantVerdict, StudyError> {
    let participant = votes.first().map(|v| v.participant.clone()).unwrap_or_default();
    let mut answers: HashMap<usize, &str> = HashMap::new();
    for v in votes {
        manifest.check_vote(v)?;
        if v.participant != participant {
            return Err(StudyError::InvalidManifest(format!(
                "votes of {:?} mixed into session of {participant:?}",
                v.participant
            )));
        }
        answers.entry(v.question).or_insert(v.choice.as_str());
    }
    let pairs = manifest.pairs();
    let same = pairs
        .iter()
        .filter(|[a, b]| matches!((answers.get(a), answers.get(b)), (Some(x), Some(y)) if x == y))
        .count();
    let consistency = if pairs.is_empty() { 0.0 } else { same as f64 / pairs.len() as f64 };
    let complete = answers.len() == manifest.questions.len();
    Ok(ParticipantVerdict {
        participant,
        consistency,
        accepted: complete && consistency >= CONSISTENCY_THRESHOLD,
        complete,
        answered: answers.len(),
    })
}

/// Win counts over non-dummy videos. Every vote counts; filter first.
pub fn aggregate(votes: &[VoteRecord], manifest: &StudyManifest) -> Result<WinMatrix, StudyError> {
    let scored: Vec<&VideoEntry> = manifest.videos.iter().filter(|v| !v.dummy).collect();
    let index: HashMap<&str, usize> = scored.iter().enumerate().map(|(i, v)| (v.id.as_str(), i)).collect();
    let mut w = WinMatrix::zeros(scored.iter().map(|v| v.id.clone()).collect());
    for v in votes {
        manifest.check_vote(v)?;
        let q = &manifest.questions[v.question];
        let loser = if v.choice == q.left { &q.right } else { &q.left };
        if let (Some(&a), Some(&b)) = (index.get(v.choice.as_str()), index.get(loser.as_str())) {
            w.add(a, b, 1);
        }
    }
    Ok(w)
}

#[derive(Clone, Debug, PartialEq)]
pub struct Tally {
    pub verdicts: Vec<ParticipantVerdict>,
    pub wins: WinMatrix,
}

impl Tally {
    pub fn accepted(&self) -> usize {
        self.verdicts.iter().filter(|v| v.accepted).count()
    }
}

/// Dedups the log, judges each participant and aggregates the accepted
/// ones. Independent of the order of `votes`.
pub fn tally(votes: &[VoteRecord], manifest: &StudyManifest) -> Result<Tally, StudyError> {
    let votes = dedup(votes);
    let mut by_participant: BTreeMap<&str, Vec<VoteRecord>> = BTreeMap::new();
    for v in &votes {
        by_participant.entry(v.participant.as_str()).or_default().push(v.clone());
    }
    let mut verdicts = Vec::with_capacity(by_participant.len());
    let mut accepted = Vec::new();
    for session in by_participant.values() {
        let verdict = consistency(session, manifest)?;
        if verdict.accepted {
            accepted.extend_from_slice(session);
        }
        verdicts.push(verdict);
    }
    let wins = aggregate(&accepted, manifest)?;
    Ok(Tally { verdicts, wins })
}

/// Synthetic cohort answering by the Bradley-Terry model: each answer picks
/// the left video with probability `P(s_left over s_right)`. `scores` follow
/// `manifest.videos`. Participants are `sim-0000`, `sim-0001`, ...
pub fn simulate_votes(
    scores: &[f64],
    participants: usize,
    manifest: &StudyManifest,
    rng_seed: u64,
) -> Result<Vec<VoteRecord>, StudyError> {
    if scores.len() != manifest.videos.len() {
        return Err(StudyError::ScoreCount { expected: manifest.videos.len(), found: scores.len() });
    }
    let score: HashMap<&str, f64> = manifest.videos.iter().map(|v| v.id.as_str()).zip(scores.iter().copied()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let n = manifest.questions.len();
    let mut out = Vec::with_capacity(participants * n);
    for p in 0..participants {
        let participant = format!("sim-{p:04}");
        for (k, q) in manifest.session_order(&participant).into_iter().enumerate() {
            let question = &manifest.questions[q];
            let pl = preference_probability(score[question.left.as_str()], score[question.right.as_str()]);
            let choice = if rng.random::<f64>() < pl { &question.left } else { &question.right };
            out.push(VoteRecord {
                study: manifest.study.clone(),
                participant: participant.clone(),
                question: q,
                choice: choice.clone(),
                timestamp: (p * n + k) as u64,
            });
        }
    }
    Ok(out)
}
