use std::path::PathBuf;

use clap::{ArgAction, Args, Parser, Subcommand, ValueEnum};
use liquidbench_core::scenario::ScenarioName;
use liquidbench_core::skinning::SkinScale;
use serde::{Deserialize, Serialize};

#[derive(Debug, Parser)]
#[command(name = "liquidbench", version, about = "Liquid simulation benchmark and perceptual study tools")]
pub struct Cli {
    /// Seed for every randomized step.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,

    /// Worker threads, 0 for one per core.
    #[arg(long, global = true, default_value_t = 0)]
    pub threads: usize,

    /// JSON settings file (scenario geometry, solver parameters, data root).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    /// Root directory for default input and output locations.
    #[arg(long, global = true, env = "LIQUIDBENCH_DATA")]
    pub data_root: Option<PathBuf>,

    /// More log output; repeat for more.
    #[arg(short, long, global = true, action = ArgAction::Count)]
    pub verbose: u8,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one solver on one scenario and write particle frames.
    Simulate(SimulateArgs),
    /// Reconstruct surface meshes from particle frames.
    Skin(SkinArgs),
    /// Build, serve, collect and score pairwise studies.
    #[command(subcommand)]
    Study(StudyCommand),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Mp,
    Ls,
    Flip,
    Apic,
    Wcsph,
    Iisph,
    Sph,
}

impl Method {
    pub fn is_particle_based(self) -> bool {
        matches!(self, Method::Wcsph | Method::Iisph | Method::Sph)
    }
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long, default_value = "dam")]
    pub scenario: ScenarioName,

    #[arg(long, value_enum)]
    pub method: Method,

    /// Resolution scale of the preset grid: 1x, 2x, 3x or 4x.
    #[arg(long, default_value = "1x", value_parser = parse_scale, conflicts_with = "dims")]
    pub scale: usize,

    /// Explicit grid dimensions, e.g. 40x38x13.
    #[arg(long, value_parser = parse_dims)]
    pub dims: Option<[usize; 3]>,

    /// Simulated seconds.
    #[arg(long, default_value_t = 2.0)]
    pub duration: f64,

    /// Output directory; defaults to `<data root>/runs/<scenario>-<method>-<scale>`.
    #[arg(long)]
    pub out: Option<PathBuf>,

    /// Target wall-clock seconds per frame; the report compares against it.
    #[arg(long)]
    pub budget: Option<f64>,

    /// Store particle velocities in the frame files.
    #[arg(long)]
    pub velocities: bool,

    /// Also write a CSV copy of every frame.
    #[arg(long)]
    pub csv: bool,
}

#[derive(Debug, Args)]
pub struct SkinArgs {
    /// Directory holding `frame_NNNNN.bin` files (a simulate output).
    pub frames: PathBuf,

    /// Mesh directory; defaults to `<frames>/meshes`.
    #[arg(long)]
    pub out: Option<PathBuf>,

    /// Comma-separated scale factors; all seven when omitted.
    #[arg(long, value_delimiter = ',')]
    pub scales: Vec<SkinScale>,

    /// Particle spacing in meters; read from the run report when omitted.
    #[arg(long)]
    pub spacing: Option<f64>,

    /// Only skin frames in this inclusive range, e.g. 1..30.
    #[arg(long, value_parser = parse_range)]
    pub range: Option<(usize, usize)>,

    /// Also write binary PLY meshes.
    #[arg(long)]
    pub ply: bool,
}

#[derive(Debug, Subcommand)]
pub enum StudyCommand {
    /// Write a study manifest with every pair asked twice.
    Generate(GenerateArgs),
    /// Serve sessions and collect votes over HTTP.
    Serve(ServeArgs),
    /// Merge vote files into a study's vote log, dropping duplicates.
    Ingest(IngestArgs),
    /// Filter participants and fit Bradley-Terry scores.
    Score(ScoreArgs),
    /// Pearson correlation between two score files.
    Correlate(CorrelateArgs),
    /// Generate synthetic votes from known scores.
    Simulate(SimulateVotesArgs),
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[arg(long)]
    pub study: String,

    /// Video as `ID=URI`; a bare `ID` maps to `videos/ID.mp4`.
    #[arg(long = "video", required = true)]
    pub videos: Vec<String>,

    /// Ids of attention-check videos, shown but not scored.
    #[arg(long = "dummy")]
    pub dummies: Vec<String>,

    /// URI of the reference video; omit for a preference study.
    #[arg(long)]
    pub reference: Option<String>,

    /// Defaults to `<data root>/studies/<study>/manifest.json`.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long = "manifest", required = true)]
    pub manifests: Vec<PathBuf>,

    /// Directory of the `<study>.votes.jsonl` logs; defaults to `<data root>/votes`.
    #[arg(long)]
    pub votes_dir: Option<PathBuf>,

    /// Directory served at `/` (UI bundle and videos).
    #[arg(long)]
    pub static_dir: Option<PathBuf>,

    #[arg(long, default_value = "127.0.0.1:8080")]
    pub addr: String,
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    #[arg(long)]
    pub manifest: PathBuf,

    /// Vote log to merge into; created if missing.
    #[arg(long)]
    pub log: PathBuf,

    /// Vote files, JSON lines or CSV.
    #[arg(required = true)]
    pub inputs: Vec<PathBuf>,

    /// Also export the merged log as CSV.
    #[arg(long)]
    pub export_csv: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ScoreArgs {
    #[arg(long)]
    pub manifest: PathBuf,

    /// Vote log, JSON lines or CSV.
    #[arg(long)]
    pub votes: PathBuf,

    /// Score CSV; defaults to `<data root>/scores/<study>.csv`.
    #[arg(long)]
    pub out: Option<PathBuf>,

    /// Pin this video id to zero instead of the lowest score.
    #[arg(long)]
    pub anchor: Option<String>,

    /// Also write verdicts, win counts and scores as JSON.
    #[arg(long)]
    pub json: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CorrelateArgs {
    pub a: PathBuf,
    pub b: PathBuf,

    /// Pair rows by position instead of by item id.
    #[arg(long)]
    pub by_position: bool,

    /// Print JSON instead of text.
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
pub struct SimulateVotesArgs {
    #[arg(long)]
    pub manifest: PathBuf,

    /// Score CSV covering every video of the manifest.
    #[arg(long, required_unless_present = "row", conflicts_with = "row")]
    pub scores: Option<PathBuf>,

    /// Use a built-in published score row (e.g. `J`) instead of a CSV.
    #[arg(long)]
    pub row: Option<String>,

    #[arg(long, default_value_t = 50)]
    pub participants: usize,

    /// Output vote file; `.csv` writes CSV, anything else JSON lines.
    #[arg(long)]
    pub out: PathBuf,
}

fn parse_scale(s: &str) -> Result<usize, String> {
    let n = s.strip_suffix('x').unwrap_or(s);
    match n.parse::<usize>() {
        Ok(k @ 1..=4) => Ok(k),
        _ => Err(format!("scale must be one of 1x, 2x, 3x, 4x, got {s:?}")),
    }
}

fn parse_dims(s: &str) -> Result<[usize; 3], String> {
    let parts: Vec<usize> = s
        .split(['x', 'X', ','])
        .map(|p| p.trim().parse::<usize>().map_err(|e| format!("bad dimension {p:?}: {e}")))
        .collect::<Result<_, _>>()?;
    match parts[..] {
        [a, b, c] if a > 0 && b > 0 && c > 0 => Ok([a, b, c]),
        _ => Err(format!("expected three positive dimensions like 80x75x25, got {s:?}")),
    }
}

fn parse_range(s: &str) -> Result<(usize, usize), String> {
    let (a, b) = s.split_once("..").ok_or_else(|| format!("expected FIRST..LAST, got {s:?}"))?;
    let a = a.parse().map_err(|e| format!("{e}"))?;
    let b = b.parse().map_err(|e| format!("{e}"))?;
    if a > b {
        return Err(format!("empty range {s:?}"));
    }
    Ok((a, b))
}
