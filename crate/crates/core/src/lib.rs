//! Optimal walking paths over elevation rasters.
//!
//! The planner evolves a level-set front under a Hamilton-Jacobi-Bellman
//! equation whose Hamiltonian picks the best walking direction at every
//! point, reads minimal travel times off the front, and recovers optimal
//! routes by integrating the characteristic equations backward from the
//! destination.
//!
//! Module map:
//!
//! - [`terrain`]: elevation rasters, synthetic landscapes, bilinear sampling.
//! - [`mobility`]: slope-to-speed laws and the steep-slope penalty.
//! - [`hamiltonian`]: the direction-maximizing Hamiltonian and its Godunov flux.
//! - [`levelset`]: ENO2 / TVD-RK2 front evolution, re-distancing, arrival times.
//! - [`path`]: backward characteristic integration with momentum re-initialization.
//! - [`ensemble`]: uncertain start regions, path metric, k-means clustering.
//! - [`oracle`]: anisotropic Dijkstra baseline used for cross-validation.
//! - [`io`]: ESRI ASCII grids, CSV grids and traces, GeoJSON.

pub mod ensemble;
pub mod error;
pub mod geom;
pub mod grid;
pub mod hamiltonian;
pub mod io;
pub mod levelset;
pub mod mobility;
pub mod oracle;
pub mod path;
pub mod terrain;

pub use ensemble::{EnsembleOptions, EnsembleResult, StartRegion};
pub use error::{Error, Result};
pub use geom::Vec2;
pub use grid::GridSpec;
pub use hamiltonian::{ControlDisc, HamiltonianEval};
pub use levelset::{ArrivalField, LevelSetRun, Mode, SolverOptions};
pub use mobility::MobilityModel;
pub use oracle::Stencil;
pub use path::{PathOptions, PathTrace, Terminus};
pub use terrain::{SynthKind, TerrainGrid};
