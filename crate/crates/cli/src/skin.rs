//! `liquidbench skin`: surface meshes from a directory of particle frames.

use std::path::Path;

use anyhow::{Context as _, Result};
use liquidbench_core::skinning::{skin_sequence, SkinScale};

use crate::args::SkinArgs;
use crate::exit::usage;
use crate::settings::Context;
use crate::simulate::{RunReport, REPORT_FILE};

/// Frame numbers of the `frame_NNNNN.bin` files in `dir`, sorted.
pub fn list_frames(dir: &Path) -> Result<Vec<usize>> {
    let mut frames = Vec::new();
    for entry in std::fs::read_dir(dir).with_context(|| format!("reading {}", dir.display()))? {
        let name = entry?.file_name();
        let Some(name) = name.to_str() else { continue };
        if let Some(n) = name.strip_prefix("frame_").and_then(|s| s.strip_suffix(".bin")) {
            if let Ok(f) = n.parse::<usize>() {
                frames.push(f);
            }
        }
    }
    frames.sort_unstable();
    Ok(frames)
}

pub fn run(_ctx: &Context, args: &SkinArgs) -> Result<()> {
    let mut frames = list_frames(&args.frames)?;
    if let Some((a, b)) = args.range {
        frames.retain(|f| (a..=b).contains(f));
    }
    if frames.is_empty() {
        return Err(usage(format!("no particle frames in {}", args.frames.display())));
    }
    let spacing = match args.spacing {
        Some(h) if h.is_finite() && h > 0.0 => h,
        Some(h) => return Err(usage(format!("spacing must be positive, got {h}"))),
        None => {
            let p = args.frames.join(REPORT_FILE);
            if !p.is_file() {
                return Err(usage(format!("{} has no {REPORT_FILE}; pass --spacing", args.frames.display())));
            }
            RunReport::load(&p)?.spec.particle_spacing
        }
    };
    let scales = if args.scales.is_empty() { SkinScale::ALL.to_vec() } else { args.scales.clone() };
    let out = args.out.clone().unwrap_or_else(|| args.frames.join("meshes"));
    let written = skin_sequence(&args.frames, &out, &frames, &scales, spacing, args.ply)?;
    log::info!("{} meshes from {} frames -> {}", written.len(), frames.len(), out.display());
    Ok(())
}
