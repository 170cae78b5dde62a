//! Run configuration: one TOML file plus `--set key=value` overrides.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use terrapath::ensemble::{EnsembleOptions, StartRegion};
use terrapath::{
    ControlDisc, GridSpec, MobilityModel, PathOptions, SolverOptions, Stencil, SynthKind, TerrainGrid,
    Vec2,
};

use crate::CliError;

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub terrain: TerrainConfig,
    #[serde(default)]
    pub mobility: MobilityModel,
    #[serde(default)]
    pub disc: DiscConfig,
    #[serde(default)]
    pub solver: SolverOptions,
    #[serde(default)]
    pub path: PathOptions,
    /// Start point.
    pub a: Option<[f64; 2]>,
    /// Destination.
    pub b: Option<[f64; 2]>,
    pub region: Option<RegionConfig>,
    #[serde(default)]
    pub ensemble: EnsembleConfig,
    #[serde(default)]
    pub oracle: OracleConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

/// Either `file` (ESRI ASCII) or `grid` together with `synth`.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TerrainConfig {
    pub file: Option<PathBuf>,
    pub grid: Option<GridConfig>,
    pub synth: Option<SynthKind>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub nx: usize,
    pub ny: usize,
    pub dx: f64,
    /// Defaults to `dx`.
    pub dy: Option<f64>,
    pub origin: [f64; 2],
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DiscConfig {
    pub directions: usize,
    pub interior_samples: usize,
}

impl Default for DiscConfig {
    fn default() -> Self {
        DiscConfig { directions: 64, interior_samples: 5 }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegionConfig {
    pub center: [f64; 2],
    pub radius: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnsembleConfig {
    pub n: usize,
    pub k: usize,
    pub samples: usize,
    pub seed: u64,
}

impl Default for EnsembleConfig {
    fn default() -> Self {
        EnsembleConfig { n: 100, k: 2, samples: 101, seed: 0 }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OracleConfig {
    pub stencil: Stencil,
}

impl Default for OracleConfig {
    fn default() -> Self {
        OracleConfig { stencil: Stencil::N16 }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: PathBuf,
    /// Number of evenly spaced φ snapshots written by `solve` (besides the
    /// final one); 0 writes none.
    pub fronts: usize,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig { dir: PathBuf::from("out"), fronts: 0 }
    }
}

fn bad(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

/// Reads the config file (if any), applies overrides and validates.
pub fn load(path: Option<&Path>, overrides: &[String]) -> Result<RunConfig, CliError> {
    let mut tree = match path {
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| bad(format!("cannot read {}: {e}", p.display())))?;
            text.parse::<toml::Table>()
                .map_err(|e| bad(format!("{}: {e}", p.display())))?
        }
        None => toml::Table::new(),
    };
    for o in overrides {
        apply_override(&mut tree, o)?;
    }
    let mut cfg: RunConfig = toml::Value::Table(tree)
        .try_into()
        .map_err(|e: toml::de::Error| bad(e.to_string()))?;
    if let (Some(file), Some(p)) = (cfg.terrain.file.as_mut(), path) {
        if file.is_relative() {
            if let Some(dir) = p.parent() {
                *file = dir.join(&*file);
            }
        }
    }
    cfg.validate()?;
    Ok(cfg)
}

/// `dotted.key=value`; the value is read as a TOML literal, falling back to
/// a bare string.
pub fn apply_override(tree: &mut toml::Table, item: &str) -> Result<(), CliError> {
    let (key, raw) = item
        .split_once('=')
        .ok_or_else(|| bad(format!("override `{item}` is not key=value")))?;
    let value = match format!("v = {raw}").parse::<toml::Table>() {
        Ok(mut t) => t.remove("v").unwrap(),
        Err(_) => toml::Value::String(raw.to_string()),
    };
    let parts: Vec<&str> = key.trim().split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(bad(format!("bad override key `{key}`")));
    }
    let mut node = tree;
    for part in &parts[..parts.len() - 1] {
        let entry = node
            .entry(part.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        node = entry
            .as_table_mut()
            .ok_or_else(|| bad(format!("override `{key}`: `{part}` is not a table")))?;
    }
    node.insert(parts[parts.len() - 1].to_string(), value);
    Ok(())
}

fn point(p: [f64; 2]) -> Vec2 {
    Vec2::new(p[0], p[1])
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), CliError> {
        let t = &self.terrain;
        match (&t.file, &t.grid, &t.synth) {
            (Some(_), None, None) | (None, Some(_), Some(_)) => {}
            _ => return Err(bad("terrain needs either `file` or both `grid` and `synth`")),
        }
        self.mobility.validate().map_err(|e| bad(e.to_string()))?;
        self.solver.validate().map_err(|e| bad(e.to_string()))?;
        self.control_disc()?;
        for p in [self.a, self.b].into_iter().flatten() {
            if !p.iter().all(|v| v.is_finite()) {
                return Err(bad("points must be finite"));
            }
        }
        if let Some(r) = &self.region {
            self.start_region_of(r).validate().map_err(|e| bad(e.to_string()))?;
        }
        if self.ensemble.n == 0 || self.ensemble.k == 0 || self.ensemble.samples < 2 {
            return Err(bad("ensemble needs n ≥ 1, k ≥ 1 and samples ≥ 2"));
        }
        Ok(())
    }

    /// SHA-256 of the canonical JSON form of the validated config. The
    /// output directory is left out so identical runs written to different
    /// places carry the same hash.
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.output.dir = PathBuf::new();
        let canon = serde_json::to_string(&c).expect("config serializes");
        format!("{:x}", Sha256::digest(canon.as_bytes()))
    }

    pub fn control_disc(&self) -> Result<ControlDisc, CliError> {
        ControlDisc::new(self.disc.directions, self.disc.interior_samples).map_err(|e| bad(e.to_string()))
    }

    pub fn grid_spec(&self) -> Result<Option<GridSpec>, CliError> {
        self.terrain
            .grid
            .as_ref()
            .map(|g| {
                GridSpec::new(g.nx, g.ny, g.dx, g.dy.unwrap_or(g.dx), point(g.origin))
                    .map_err(|e| bad(e.to_string()))
            })
            .transpose()
    }

    pub fn load_terrain(&self) -> Result<TerrainGrid, CliError> {
        if let Some(file) = &self.terrain.file {
            let f = std::fs::File::open(file)
                .map_err(|e| bad(format!("cannot open {}: {e}", file.display())))?;
            return terrapath::io::load_esri_ascii(std::io::BufReader::new(f)).map_err(|e| bad(e.to_string()));
        }
        let spec = self.grid_spec()?.expect("validated");
        let kind = self.terrain.synth.as_ref().expect("validated");
        terrapath::terrain::synth(spec, kind).map_err(|e| bad(e.to_string()))
    }

    pub fn point_a(&self) -> Result<Vec2, CliError> {
        self.a.map(point).ok_or_else(|| bad("missing start point `a`"))
    }

    pub fn point_b(&self) -> Result<Vec2, CliError> {
        self.b.map(point).ok_or_else(|| bad("missing destination `b`"))
    }

    fn start_region_of(&self, r: &RegionConfig) -> StartRegion {
        StartRegion::disk(point(r.center), r.radius)
    }

    pub fn start_region(&self) -> Result<StartRegion, CliError> {
        self.region
            .as_ref()
            .map(|r| self.start_region_of(r))
            .ok_or_else(|| bad("missing `region`"))
    }

    pub fn ensemble_options(&self) -> EnsembleOptions {
        EnsembleOptions {
            solver: self.solver.clone(),
            path: self.path.clone(),
            samples: self.ensemble.samples,
            seed: self.ensemble.seed,
        }
    }
}
