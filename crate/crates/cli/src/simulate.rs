//! `liquidbench simulate`: run one solver and write frames plus a report.

use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{Context as _, Result};
use liquidbench_core::eulerian::{EulerianMethod, EulerianParams, EulerianState};
use liquidbench_core::frame_io::{frame_file_name, save_frame, save_frame_csv, save_scalar_grid};
use liquidbench_core::lagrangian::{SphMethod, SphParams, SphState};
use liquidbench_core::skinning::{marching_cubes, ScalarGrid};
use liquidbench_core::{ParticleSet, ScenarioConfig, ScenarioName, Vec3, FRAME_RATE};
use serde::{Deserialize, Serialize};

use crate::args::{Method, SimulateArgs};
use crate::exit::{exit_code, usage};
use crate::settings::{merged, Context};

pub const REPORT_FILE: &str = "report.json";
pub const BOUNDARY_FILE: &str = "boundary.bin";
pub const REPORT_SCHEMA_VERSION: u32 = 1;

/// Everything needed to repeat a run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunSpec {
    pub scenario: ScenarioName,
    pub method: Method,
    /// Preset scale, absent when explicit dimensions were given.
    pub scale: Option<usize>,
    pub grid_dims: [usize; 3],
    pub cell_size: f64,
    pub particle_spacing: f64,
    pub duration_s: f64,
    pub frames: usize,
    pub seed: u64,
    pub velocities: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RunStatus {
    Running,
    Completed,
    Failed,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrameReport {
    pub frame: usize,
    pub time_s: f64,
    pub wall_time_s: f64,
    pub substeps: usize,
    pub particles: usize,
    /// Liquid volume in m³ (grid methods only).
    pub fluid_volume: Option<f64>,
    pub max_iterations: usize,
    pub mean_iterations: f64,
    /// Worst post-projection divergence ratio (grid methods).
    pub max_relative_divergence: Option<f64>,
    /// Worst density deviation from rest (SPH methods).
    pub max_density_error: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BudgetReport {
    pub target_s_per_frame: f64,
    pub measured_s_per_frame: f64,
    pub within_budget: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub schema_version: u32,
    pub spec: RunSpec,
    pub scenario: ScenarioConfig,
    pub status: RunStatus,
    pub error: Option<String>,
    pub exit_code: Option<u8>,
    pub initial_particles: usize,
    pub boundary_particles: Option<usize>,
    pub frames: Vec<FrameReport>,
    pub total_wall_time_s: f64,
    pub budget: Option<BudgetReport>,
}

impl RunReport {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn mean_frame_time(&self) -> Option<f64> {
        (!self.frames.is_empty()).then(|| self.frames.iter().map(|f| f.wall_time_s).sum::<f64>() / self.frames.len() as f64)
    }
}

enum Solver {
    Grid(Box<EulerianState>),
    Sph(Box<SphState>),
}

impl Solver {
    fn particles(&self) -> &ParticleSet {
        match self {
            Solver::Grid(s) => &s.particles,
            Solver::Sph(s) => &s.particles,
        }
    }

    fn advance(&mut self, frame: usize) -> Result<FrameReport> {
        let t0 = Instant::now();
        let mut r = FrameReport {
            frame,
            time_s: frame as f64 / FRAME_RATE,
            wall_time_s: 0.0,
            substeps: 0,
            particles: 0,
            fluid_volume: None,
            max_iterations: 0,
            mean_iterations: 0.0,
            max_relative_divergence: None,
            max_density_error: None,
        };
        match self {
            Solver::Grid(s) => {
                let stats = s.advance_frame()?;
                r.substeps = stats.len();
                r.max_iterations = stats.iter().map(|x| x.iterations).max().unwrap_or(0);
                r.mean_iterations = mean(stats.iter().map(|x| x.iterations as f64));
                r.max_relative_divergence = stats.iter().map(|x| x.relative_divergence).reduce(f64::max);
                r.fluid_volume = Some(s.fluid_volume());
            }
            Solver::Sph(s) => {
                let stats = s.advance_frame()?;
                r.substeps = stats.len();
                r.max_iterations = stats.iter().map(|x| x.iterations).max().unwrap_or(0);
                r.mean_iterations = mean(stats.iter().map(|x| x.iterations as f64));
                r.max_density_error = stats.iter().map(|x| x.max_density_error).reduce(f64::max);
            }
        }
        r.particles = self.particles().len();
        r.wall_time_s = t0.elapsed().as_secs_f64();
        Ok(r)
    }
}

fn mean(xs: impl Iterator<Item = f64>) -> f64 {
    let (s, n) = xs.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    if n == 0 {
        0.0
    } else {
        s / n as f64
    }
}

fn eulerian_method(m: Method) -> Option<EulerianMethod> {
    Some(match m {
        Method::Mp => EulerianMethod::Mp,
        Method::Ls => EulerianMethod::Ls,
        Method::Flip => EulerianMethod::Flip,
        Method::Apic => EulerianMethod::Apic,
        _ => return None,
    })
}

fn sph_method(m: Method) -> Option<SphMethod> {
    Some(match m {
        Method::Wcsph => SphMethod::Wcsph,
        Method::Iisph => SphMethod::Iisph,
        Method::Sph => SphMethod::Sph,
        _ => return None,
    })
}

pub fn method_label(m: Method) -> &'static str {
    match m {
        Method::Mp => "mp",
        Method::Ls => "ls",
        Method::Flip => "flip",
        Method::Apic => "apic",
        Method::Wcsph => "wcsph",
        Method::Iisph => "iisph",
        Method::Sph => "sph",
    }
}

fn scenario_label(s: ScenarioName) -> &'static str {
    match s {
        ScenarioName::Dam => "dam",
        ScenarioName::Wave => "wave",
    }
}

/// Scenario for the run: the preset at the requested scale, explicit
/// dimensions if given, then the settings-file overrides.
pub fn scenario_for(ctx: &Context, args: &SimulateArgs) -> Result<ScenarioConfig> {
    let mut cfg = ScenarioConfig::preset(args.scenario, args.scale);
    if let Some(d) = args.dims {
        cfg.grid_dims = d;
    }
    cfg.rng_seed = ctx.seed;
    let cfg: ScenarioConfig = merged(&cfg, ctx.settings.scenario.as_ref(), "scenario")?;
    cfg.validate()?;
    Ok(cfg)
}

pub fn default_out_dir(ctx: &Context, args: &SimulateArgs) -> PathBuf {
    let res = match args.dims {
        Some([a, b, c]) => format!("{a}x{b}x{c}"),
        None => format!("{}x", args.scale),
    };
    ctx.data_root.join("runs").join(format!("{}-{}-{res}", scenario_label(args.scenario), method_label(args.method)))
}

fn build_solver(ctx: &Context, method: Method, cfg: &ScenarioConfig) -> Result<Solver> {
    if let Some(m) = eulerian_method(method) {
        let params: EulerianParams = merged(&EulerianParams::default(), ctx.settings.eulerian.as_ref(), "eulerian")?;
        return Ok(Solver::Grid(Box::new(EulerianState::new(m, cfg, params)?)));
    }
    let m = sph_method(method).expect("every method is grid or particle based");
    let params = match &ctx.settings.sph {
        Some(over) => {
            let h = cfg.water_region.max[1] - cfg.water_region.min[1];
            Some(merged(&SphParams::new(cfg.particle_spacing(), h), Some(over), "sph")?)
        }
        None => None,
    };
    Ok(Solver::Sph(Box::new(SphState::new(m, cfg, params)?)))
}

fn write_report(dir: &Path, report: &RunReport) -> Result<()> {
    let tmp = dir.join(".report.json.tmp");
    std::fs::write(&tmp, serde_json::to_string_pretty(report)? + "\n")?;
    std::fs::rename(&tmp, dir.join(REPORT_FILE))?;
    Ok(())
}

fn write_frame_outputs(dir: &Path, solver: &Solver, frame: usize, args: &SimulateArgs) -> Result<()> {
    if let Solver::Grid(s) = solver {
        if let Some(ls) = &s.level_set {
            let h = ls.cell_size;
            let origin = Vec3::repeat(0.5 * h);
            save_scalar_grid(&dir.join(format!("frame_{frame:05}_phi")), &ls.phi, ls.dims, h, origin)?;
            let grid = ScalarGrid { dims: ls.dims, cell_size: h, origin, values: ls.phi.clone() };
            marching_cubes(&grid, 0.0).save_obj(&dir.join(format!("frame_{frame:05}_surface.obj")))?;
            return Ok(());
        }
    }
    let path = dir.join(frame_file_name(frame));
    save_frame(&path, solver.particles(), args.velocities)?;
    if args.csv {
        save_frame_csv(&path.with_extension("csv"), solver.particles())?;
    }
    Ok(())
}

/// Run the simulation. The report is rewritten after every frame, so a run
/// that stops early still leaves its frames and a report saying why.
pub fn run(ctx: &Context, args: &SimulateArgs) -> Result<RunReport> {
    if !(args.duration.is_finite() && args.duration >= 0.0) {
        return Err(usage(format!("duration must be a non-negative number of seconds, got {}", args.duration)));
    }
    if let Some(b) = args.budget {
        if !(b.is_finite() && b > 0.0) {
            return Err(usage(format!("budget must be positive, got {b}")));
        }
    }
    let cfg = scenario_for(ctx, args)?;
    let frames = (args.duration * FRAME_RATE).round() as usize;
    let spec = RunSpec {
        scenario: args.scenario,
        method: args.method,
        scale: args.dims.is_none().then_some(args.scale),
        grid_dims: cfg.grid_dims,
        cell_size: cfg.cell_size(),
        particle_spacing: cfg.particle_spacing(),
        duration_s: args.duration,
        frames,
        seed: ctx.seed,
        velocities: args.velocities,
    };
    let out = args.out.clone().unwrap_or_else(|| default_out_dir(ctx, args));
    std::fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;

    let mut solver = build_solver(ctx, args.method, &cfg)?;
    let mut report = RunReport {
        schema_version: REPORT_SCHEMA_VERSION,
        spec,
        scenario: cfg,
        status: RunStatus::Running,
        error: None,
        exit_code: None,
        initial_particles: solver.particles().len(),
        boundary_particles: None,
        frames: Vec::with_capacity(frames),
        total_wall_time_s: 0.0,
        budget: None,
    };
    if let Solver::Sph(s) = &solver {
        let b = ParticleSet::from_positions(s.boundary.positions.clone(), s.boundary.mass);
        save_frame(&out.join(BOUNDARY_FILE), &b, false)?;
        report.boundary_particles = Some(b.len());
    }
    log::info!(
        "{} {} on {:?}: {} particles, {frames} frames -> {}",
        scenario_label(args.scenario),
        method_label(args.method),
        report.spec.grid_dims,
        report.initial_particles,
        out.display()
    );
    write_report(&out, &report)?;

    let start = Instant::now();
    let outcome = (1..=frames).try_for_each(|f| -> Result<()> {
        let fr = solver.advance(f).with_context(|| format!("frame {f}"))?;
        write_frame_outputs(&out, &solver, f, args).with_context(|| format!("writing frame {f}"))?;
        log::debug!("frame {f}: {:.3} s, {} substeps", fr.wall_time_s, fr.substeps);
        report.frames.push(fr);
        report.total_wall_time_s = start.elapsed().as_secs_f64();
        write_report(&out, &report)
    });
    report.total_wall_time_s = start.elapsed().as_secs_f64();
    if let (Some(target), Some(measured)) = (args.budget, report.mean_frame_time()) {
        report.budget = Some(BudgetReport {
            target_s_per_frame: target,
            measured_s_per_frame: measured,
            within_budget: measured <= target,
        });
    }
    match outcome {
        Ok(()) => {
            report.status = RunStatus::Completed;
            write_report(&out, &report)?;
            log::info!("done: {frames} frames in {:.1} s", report.total_wall_time_s);
            Ok(report)
        }
        Err(e) => {
            report.status = RunStatus::Failed;
            report.error = Some(format!("{e:#}"));
            report.exit_code = Some(exit_code(&e));
            if let Err(w) = write_report(&out, &report) {
                log::error!("could not write the failure report: {w:#}");
            }
            Err(e)
        }
    }
}
