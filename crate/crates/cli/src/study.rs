//! `liquidbench study ...` subcommands other than `serve`.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context as _, Result};
use liquidbench_core::analytics::{
    fit_bradley_terry_with, pearson, published, read_scores_csv, render_table, write_scores_csv, Anchor, CorrelationReport,
    FitOptions, ScoreVector, WinMatrix,
};
use liquidbench_core::study::{
    dedup, generate_manifest, read_votes, simulate_votes, tally, write_votes_csv, write_votes_jsonl, ParticipantVerdict,
    StudyError, StudyManifest, VideoEntry, VoteRecord,
};
use serde::Serialize;

use crate::args::{CorrelateArgs, GenerateArgs, IngestArgs, ScoreArgs, SimulateVotesArgs};
use crate::exit::usage;
use crate::settings::Context;

pub fn load_scores(path: &Path) -> Result<ScoreVector> {
    let f = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    read_scores_csv(BufReader::new(f)).with_context(|| format!("reading {}", path.display()))
}

pub fn save_scores(path: &Path, scores: &ScoreVector) -> Result<()> {
    ensure_parent(path)?;
    let f = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    write_scores_csv(scores, BufWriter::new(f))?;
    Ok(())
}

/// Write votes as CSV if the path ends in `.csv`, JSON lines otherwise.
/// Goes through a temporary file so a crash never truncates a log.
pub fn save_votes(path: &Path, votes: &[VoteRecord]) -> Result<()> {
    ensure_parent(path)?;
    let tmp = path.with_extension("tmp");
    {
        let mut w = BufWriter::new(File::create(&tmp).with_context(|| format!("creating {}", tmp.display()))?);
        if is_csv(path) {
            write_votes_csv(votes, &mut w)?;
        } else {
            write_votes_jsonl(votes, &mut w)?;
        }
        w.flush()?;
    }
    std::fs::rename(&tmp, path)?;
    Ok(())
}

fn is_csv(path: &Path) -> bool {
    path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv"))
}

fn ensure_parent(path: &Path) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    Ok(())
}

/// `ID=URI`, or a bare `ID` standing for `videos/ID.mp4`.
pub fn parse_video(spec: &str) -> Result<VideoEntry> {
    let (id, uri) = match spec.split_once('=') {
        Some((id, uri)) => (id.trim(), uri.trim().to_string()),
        None => (spec.trim(), format!("videos/{}.mp4", spec.trim())),
    };
    if id.is_empty() || uri.is_empty() {
        return Err(usage(format!("bad video {spec:?}, expected ID=URI")));
    }
    Ok(VideoEntry::new(id, uri))
}

pub fn generate(ctx: &Context, args: &GenerateArgs) -> Result<()> {
    let mut videos = args.videos.iter().map(|v| parse_video(v)).collect::<Result<Vec<_>>>()?;
    for d in &args.dummies {
        let v = videos.iter_mut().find(|v| &v.id == d).ok_or_else(|| usage(format!("dummy {d:?} is not one of the videos")))?;
        v.dummy = true;
    }
    let manifest = generate_manifest(&args.study, videos, args.reference.clone(), ctx.seed)?;
    let out = args
        .out
        .clone()
        .unwrap_or_else(|| ctx.data_root.join("studies").join(&args.study).join("manifest.json"));
    ensure_parent(&out)?;
    manifest.save(&out)?;
    println!(
        "{}: {} videos, {} questions -> {}",
        manifest.study,
        manifest.video_count(),
        manifest.questions.len(),
        out.display()
    );
    Ok(())
}

pub fn ingest(args: &IngestArgs) -> Result<()> {
    let manifest = StudyManifest::load(&args.manifest).with_context(|| format!("loading {}", args.manifest.display()))?;
    let mut all = if args.log.exists() { read_votes(&args.log)? } else { Vec::new() };
    let before = all.len();
    for p in &args.inputs {
        let votes = read_votes(p).with_context(|| format!("reading {}", p.display()))?;
        for v in &votes {
            manifest.check_vote(v).with_context(|| format!("{}: vote of {:?}", p.display(), v.participant))?;
        }
        all.extend(votes);
    }
    let read = all.len() - before;
    let merged = dedup(&all);
    save_votes(&args.log, &merged)?;
    if let Some(csv) = &args.export_csv {
        save_votes(csv, &merged)?;
    }
    println!(
        "read {read} votes, {} new, {} duplicates dropped; log holds {}",
        merged.len().saturating_sub(dedup(&all[..before]).len()),
        all.len() - merged.len(),
        merged.len()
    );
    Ok(())
}

#[derive(Serialize)]
struct ScoreReport<'a> {
    study: &'a str,
    participants: usize,
    accepted: usize,
    verdicts: &'a [ParticipantVerdict],
    wins: &'a WinMatrix,
    scores: &'a ScoreVector,
}

pub fn score(ctx: &Context, args: &ScoreArgs) -> Result<()> {
    let manifest = StudyManifest::load(&args.manifest).with_context(|| format!("loading {}", args.manifest.display()))?;
    let votes = read_votes(&args.votes).with_context(|| format!("reading {}", args.votes.display()))?;
    let t = tally(&votes, &manifest)?;
    let accepted = t.accepted();
    println!("{} participants, {accepted} passed the consistency filter", t.verdicts.len());
    if accepted == 0 {
        return Err(StudyError::NoAcceptedParticipants.into());
    }
    let anchor = match &args.anchor {
        None => Anchor::MinScore,
        Some(id) => Anchor::Item(
            t.wins
                .items
                .iter()
                .position(|x| x == id)
                .ok_or_else(|| usage(format!("anchor {id:?} is not a scored video")))?,
        ),
    };
    let fit = fit_bradley_terry_with(&t.wins, &FitOptions { anchor, ..Default::default() })?;
    print!("{}", render_table(&[(manifest.study.as_str(), &fit)]));
    let out = args
        .out
        .clone()
        .unwrap_or_else(|| ctx.data_root.join("scores").join(format!("{}.csv", manifest.study)));
    save_scores(&out, &fit)?;
    println!("scores -> {}", out.display());
    if let Some(j) = &args.json {
        let r = ScoreReport {
            study: &manifest.study,
            participants: t.verdicts.len(),
            accepted,
            verdicts: &t.verdicts,
            wins: &t.wins,
            scores: &fit,
        };
        ensure_parent(j)?;
        std::fs::write(j, serde_json::to_string_pretty(&r)? + "\n")?;
    }
    Ok(())
}

/// Correlation of two score files, paired by item id unless `by_position`.
pub fn correlation(a: &ScoreVector, b: &ScoreVector, by_position: bool) -> Result<CorrelationReport> {
    let y = if by_position { b.scores.clone() } else { b.aligned_to(a)? };
    Ok(pearson(&a.scores, &y)?)
}

pub fn correlate(args: &CorrelateArgs) -> Result<()> {
    let a = load_scores(&args.a)?;
    let b = load_scores(&args.b)?;
    let r = correlation(&a, &b, args.by_position)?;
    if args.json {
        println!("{}", serde_json::to_string(&r)?);
    } else {
        println!("r = {:.5}, p = {:.5}, n = {}", r.r, r.p, r.n);
    }
    Ok(())
}

pub fn simulate(ctx: &Context, args: &SimulateVotesArgs) -> Result<()> {
    let manifest = StudyManifest::load(&args.manifest).with_context(|| format!("loading {}", args.manifest.display()))?;
    let source = match (&args.scores, &args.row) {
        (Some(p), _) => load_scores(p)?,
        (None, Some(id)) => published::row(id).ok_or_else(|| usage(format!("no published row {id:?}")))?.to_score_vector(),
        (None, None) => return Err(usage("pass --scores or --row")),
    };
    let scores = manifest
        .videos
        .iter()
        .map(|v| source.score_of(&v.id).ok_or_else(|| usage(format!("no score for video {:?}", v.id))))
        .collect::<Result<Vec<f64>>>()?;
    let votes = simulate_votes(&scores, args.participants, &manifest, ctx.seed)?;
    save_votes(&args.out, &votes)?;
    println!("{} votes from {} participants -> {}", votes.len(), args.participants, args.out.display());
    Ok(())
}

/// Published score rows as `<dir>/<ID>.csv`, the inputs `correlate` expects.
pub fn export_published(dir: &Path) -> Result<Vec<PathBuf>> {
    published::ROWS
        .iter()
        .map(|r| {
            let p = dir.join(format!("{}.csv", r.id.replace('*', "_star")));
            save_scores(&p, &r.to_score_vector())?;
            Ok(p)
        })
        .collect()
}
