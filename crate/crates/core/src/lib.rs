//! Liquid simulation benchmark: seven solvers on two standard scenarios,
//! particle skinning, and the pairwise perceptual-study pipeline
//! (session generation, consistency filtering, Bradley-Terry scoring,
//! correlation analysis).

pub mod analytics;
pub mod error;
pub mod eulerian;
pub mod frame_io;
pub mod grid;
pub mod kernel;
pub mod lagrangian;
pub mod neighbor;
pub mod particles;
pub mod scenario;
pub mod skinning;
pub mod study;
pub mod timestep;

pub use error::{Error, Result};
pub use grid::{CellFlag, MacGrid};
pub use kernel::SphKernel;
pub use neighbor::NeighborGrid;
pub use particles::ParticleSet;
pub use scenario::{build_scenario, ScenarioConfig, ScenarioName, SeedMode, TankMotion};

pub type Vec3 = nalgebra::Vector3<f64>;
pub type Mat3 = nalgebra::Matrix3<f64>;

/// Output frame rate shared by every solver.
pub const FRAME_RATE: f64 = 30.0;

/// Standard gravity, pointing down the y axis.
pub const GRAVITY: [f64; 3] = [0.0, -9.81, 0.0];
