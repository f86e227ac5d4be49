use std::fmt::Write as _;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::ScoreVector;
use crate::{Error, Result};

#[derive(Serialize, Deserialize)]
struct ScoreRow {
    item: String,
    score: f64,
    std_error: f64,
}

/// CSV with header `item,score,std_error`.
pub fn write_scores_csv<W: Write>(scores: &ScoreVector, out: W) -> Result<()> {
    let mut wr = csv::Writer::from_writer(out);
    for i in 0..scores.len() {
        wr.serialize(ScoreRow {
            item: scores.items[i].clone(),
            score: scores.scores[i],
            std_error: scores.std_errors[i],
        })?;
    }
    wr.flush()?;
    Ok(())
}

/// Reads a score CSV. The anchor is the first row with score and SE both
/// zero, falling back to the minimum score.
pub fn read_scores_csv<R: Read>(input: R) -> Result<ScoreVector> {
    let mut rd = csv::Reader::from_reader(input);
    let mut sv = ScoreVector { items: Vec::new(), scores: Vec::new(), std_errors: Vec::new(), anchor: 0 };
    for row in rd.deserialize() {
        let row: ScoreRow = row?;
        sv.items.push(row.item);
        sv.scores.push(row.score);
        sv.std_errors.push(row.std_error);
    }
    if sv.is_empty() {
        return Err(Error::Format { kind: "score csv", msg: "no rows".into() });
    }
    if sv.scores.iter().chain(&sv.std_errors).any(|x| !x.is_finite()) {
        return Err(Error::Format { kind: "score csv", msg: "non-finite value".into() });
    }
    sv.anchor = (0..sv.len())
        .find(|&i| sv.scores[i] == 0.0 && sv.std_errors[i] == 0.0)
        .unwrap_or_else(|| (0..sv.len()).min_by(|&a, &b| sv.scores[a].total_cmp(&sv.scores[b])).unwrap());
    Ok(sv)
}

/// Fixed-width table of `score (se)` cells, one row per study. Columns come
/// from the first study's items.
pub fn render_table(rows: &[(&str, &ScoreVector)]) -> String {
    let Some((_, first)) = rows.first() else {
        return String::new();
    };
    let cells: Vec<Vec<String>> = rows
        .iter()
        .map(|(_, sv)| {
            first
                .items
                .iter()
                .map(|id| match sv.items.iter().position(|x| x == id) {
                    Some(i) => format!("{:.4} ({:.4})", sv.scores[i], sv.std_errors[i]),
                    None => "-".to_string(),
                })
                .collect()
        })
        .collect();
    let id_w = rows.iter().map(|(id, _)| id.len()).max().unwrap_or(0).max(2);
    let col_w: Vec<usize> = (0..first.items.len())
        .map(|c| cells.iter().map(|r| r[c].len()).chain([first.items[c].len()]).max().unwrap())
        .collect();

    let mut out = String::new();
    let _ = write!(out, "{:<id_w$}", "ID");
    for (c, id) in first.items.iter().enumerate() {
        let _ = write!(out, "  {:>w$}", id, w = col_w[c]);
    }
    out.push('\n');
    for ((id, _), row) in rows.iter().zip(&cells) {
        let _ = write!(out, "{id:<id_w$}");
        for (c, cell) in row.iter().enumerate() {
            let _ = write!(out, "  {:>w$}", cell, w = col_w[c]);
        }
        out.push('\n');
    }
    out
}
