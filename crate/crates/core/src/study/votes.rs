use std::collections::HashSet;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use super::VoteRecord;
use crate::{Error, Result};

/// One vote per (participant, question). Conflicting duplicates resolve to
/// the earliest timestamp, ties to the smaller choice id, so the result
/// does not depend on input order. Output is sorted by participant, question.
pub fn dedup(votes: &[VoteRecord]) -> Vec<VoteRecord> {
    let mut sorted: Vec<&VoteRecord> = votes.iter().collect();
    sorted.sort_by(|a, b| {
        (&a.participant, a.question, a.timestamp, &a.choice, &a.study)
            .cmp(&(&b.participant, b.question, b.timestamp, &b.choice, &b.study))
    });
    let mut seen = HashSet::new();
    sorted
        .into_iter()
        .filter(|v| seen.insert((v.participant.as_str(), v.question)))
        .cloned()
        .collect()
}

pub fn read_votes_jsonl<R: Read>(input: R) -> Result<Vec<VoteRecord>> {
    let mut out = Vec::new();
    for (n, line) in BufReader::new(input).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| Error::Format {
            kind: "vote jsonl",
            msg: format!("line {}: {e}", n + 1),
        })?);
    }
    Ok(out)
}

pub fn write_votes_jsonl<W: Write>(votes: &[VoteRecord], mut out: W) -> Result<()> {
    for v in votes {
        serde_json::to_writer(&mut out, v)?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

/// CSV with header `study,participant,question,choice,timestamp`.
pub fn read_votes_csv<R: Read>(input: R) -> Result<Vec<VoteRecord>> {
    let mut rd = csv::Reader::from_reader(input);
    let headers = rd.headers()?.clone();
    if headers.iter().collect::<Vec<_>>() != ["study", "participant", "question", "choice", "timestamp"] {
        return Err(Error::Format { kind: "vote csv", msg: format!("unexpected header {headers:?}") });
    }
    Ok(rd.deserialize().collect::<std::result::Result<_, _>>()?)
}

pub fn write_votes_csv<W: Write>(votes: &[VoteRecord], out: W) -> Result<()> {
    let mut wr = csv::Writer::from_writer(out);
    if votes.is_empty() {
        wr.write_record(["study", "participant", "question", "choice", "timestamp"])?;
    }
    for v in votes {
        wr.serialize(v)?;
    }
    wr.flush()?;
    Ok(())
}

/// Reads `.csv` as CSV and anything else as JSON lines.
pub fn read_votes(path: &Path) -> Result<Vec<VoteRecord>> {
    let file = std::fs::File::open(path)?;
    match path.extension().and_then(|e| e.to_str()) {
        Some(ext) if ext.eq_ignore_ascii_case("csv") => read_votes_csv(file),
        _ => read_votes_jsonl(file),
    }
}
