//! Elevation rasters with precomputed node gradients.
//!
//! Gradients are central differences of the node elevations (one-sided on
//! the boundary) and are sampled off-grid by bilinear interpolation of the
//! node values, which keeps the sampled slope field continuous across cell
//! edges.

use serde::{Deserialize, Serialize};

pub use crate::io::load_esri_ascii;
use crate::error::{Error, Result};
use crate::geom::Vec2;
use crate::grid::GridSpec;

/// Immutable elevation raster.
#[derive(Clone, Debug)]
pub struct TerrainGrid {
    spec: GridSpec,
    elevation: Vec<f64>,
    grad_x: Vec<f64>,
    grad_y: Vec<f64>,
}

impl TerrainGrid {
    /// Builds a grid from node elevations laid out row-major (`i` fastest,
    /// `j` increasing with `y`).
    pub fn new(spec: GridSpec, elevation: Vec<f64>) -> Result<Self> {
        spec.validate()?;
        if elevation.len() != spec.len() {
            return Err(Error::invalid(format!(
                "expected {} elevation values, got {}",
                spec.len(),
                elevation.len()
            )));
        }
        if let Some(k) = elevation.iter().position(|v| !v.is_finite()) {
            return Err(Error::invalid(format!(
                "non-finite elevation at node ({}, {})",
                k % spec.nx,
                k / spec.nx
            )));
        }
        let mut grad_x = vec![0.0; spec.len()];
        let mut grad_y = vec![0.0; spec.len()];
        for j in 0..spec.ny {
            for i in 0..spec.nx {
                let g = spec.node_gradient(&elevation, i, j);
                let k = spec.idx(i, j);
                grad_x[k] = g.x;
                grad_y[k] = g.y;
            }
        }
        Ok(TerrainGrid {
            spec,
            elevation,
            grad_x,
            grad_y,
        })
    }

    pub fn from_fn(spec: GridSpec, f: impl Fn(Vec2) -> f64) -> Result<Self> {
        spec.validate()?;
        let elevation = (0..spec.len())
            .map(|k| f(spec.node(k % spec.nx, k / spec.nx)))
            .collect();
        Self::new(spec, elevation)
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn elevation(&self) -> &[f64] {
        &self.elevation
    }

    pub fn elevation_at(&self, i: usize, j: usize) -> f64 {
        self.elevation[self.spec.idx(i, j)]
    }

    pub fn grad_at(&self, i: usize, j: usize) -> Vec2 {
        let k = self.spec.idx(i, j);
        Vec2::new(self.grad_x[k], self.grad_y[k])
    }

    pub fn grad_index(&self, k: usize) -> Vec2 {
        Vec2::new(self.grad_x[k], self.grad_y[k])
    }

    pub fn sample_elevation(&self, p: Vec2) -> Result<f64> {
        self.spec.bilinear(&self.elevation, p)
    }

    pub fn sample_gradient(&self, p: Vec2) -> Result<Vec2> {
        let c = self.spec.locate(p)?;
        Ok(Vec2::new(
            self.spec.bilinear_at(&self.grad_x, c),
            self.spec.bilinear_at(&self.grad_y, c),
        ))
    }

    /// The same landscape with elevation (and therefore every slope) negated.
    pub fn negated(&self) -> TerrainGrid {
        let flip = |v: &[f64]| v.iter().map(|x| -x).collect::<Vec<_>>();
        TerrainGrid {
            spec: self.spec,
            elevation: flip(&self.elevation),
            grad_x: flip(&self.grad_x),
            grad_y: flip(&self.grad_y),
        }
    }

    pub fn max_elevation(&self) -> f64 {
        self.elevation.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min_elevation(&self) -> f64 {
        self.elevation.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

/// A single Gaussian hill `h·exp(-|x - c|² / (2σ²))`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Bump {
    pub center: Vec2,
    pub height: f64,
    pub sigma: f64,
}

impl Bump {
    pub fn eval(&self, p: Vec2) -> f64 {
        let d = p - self.center;
        self.height * (-d.dot(d) / (2.0 * self.sigma * self.sigma)).exp()
    }
}

/// Synthetic landscapes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SynthKind {
    Flat {
        #[serde(default)]
        height: f64,
    },
    GaussianSum {
        bumps: Vec<Bump>,
    },
    /// Tanh step between a low and a high plateau, face running along
    /// `y = face_y` and rising toward `+y`. With `half_length` set the high
    /// plateau is confined to `|x - center_x| < half_length` and falls off
    /// laterally over `ramp_width`. With `depth` set the high ground ends
    /// in a second, falling face at `face_y + depth`, making a finite cliff
    /// band.
    Cliff {
        low: f64,
        high: f64,
        face_y: f64,
        face_width: f64,
        #[serde(default)]
        center_x: f64,
        #[serde(default)]
        half_length: Option<f64>,
        #[serde(default = "default_ramp_width")]
        ramp_width: f64,
        #[serde(default)]
        depth: Option<f64>,
    },
    /// Two equal Gaussian mountains at `center ± (separation/2, 0)` with a
    /// pass between them.
    Saddle {
        height: f64,
        sigma: f64,
        separation: f64,
        #[serde(default)]
        center: Vec2,
    },
}

fn default_ramp_width() -> f64 {
    10.0
}

impl SynthKind {
    fn validate(&self, spec: &GridSpec) -> Result<()> {
        let inside = |c: Vec2, what: &str| {
            if spec.contains(c) {
                Ok(())
            } else {
                Err(Error::invalid(format!(
                    "{what} center ({}, {}) lies outside the domain",
                    c.x, c.y
                )))
            }
        };
        let positive = |v: f64, what: &str| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::invalid(format!("{what} must be positive, got {v}")))
            }
        };
        let nonneg = |v: f64, what: &str| {
            if v >= 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::invalid(format!("{what} must be non-negative, got {v}")))
            }
        };
        match self {
            SynthKind::Flat { height } => nonneg(*height, "height"),
            SynthKind::GaussianSum { bumps } => {
                for b in bumps {
                    nonneg(b.height, "bump height")?;
                    positive(b.sigma, "bump sigma")?;
                    inside(b.center, "bump")?;
                }
                Ok(())
            }
            SynthKind::Cliff {
                low,
                high,
                face_y,
                face_width,
                center_x,
                half_length,
                ramp_width,
                depth,
            } => {
                nonneg(*low, "low plateau")?;
                if let Some(d) = depth {
                    positive(*d, "cliff depth")?;
                }
                nonneg(*high, "high plateau")?;
                positive(*face_width, "face width")?;
                positive(*ramp_width, "ramp width")?;
                if let Some(l) = half_length {
                    positive(*l, "half length")?;
                }
                inside(Vec2::new(*center_x, *face_y), "cliff")
            }
            SynthKind::Saddle {
                height,
                sigma,
                separation,
                center,
            } => {
                nonneg(*height, "height")?;
                positive(*sigma, "sigma")?;
                positive(*separation, "separation")?;
                let off = Vec2::new(separation / 2.0, 0.0);
                inside(*center - off, "mountain")?;
                inside(*center + off, "mountain")
            }
        }
    }

    pub fn eval(&self, p: Vec2) -> f64 {
        match self {
            SynthKind::Flat { height } => *height,
            SynthKind::GaussianSum { bumps } => bumps.iter().map(|b| b.eval(p)).sum(),
            SynthKind::Cliff {
                low,
                high,
                face_y,
                face_width,
                center_x,
                half_length,
                ramp_width,
                depth,
            } => {
                let rise = ((p.y - face_y) / face_width).tanh();
                let fall = depth.map_or(-1.0, |d| ((p.y - face_y - d) / face_width).tanh());
                let step = 0.5 * (rise - fall);
                let lateral = match half_length {
                    Some(l) => {
                        let u = p.x - center_x;
                        0.5 * (((u + l) / ramp_width).tanh() - ((u - l) / ramp_width).tanh())
                    }
                    None => 1.0,
                };
                low + (high - low) * step * lateral
            }
            SynthKind::Saddle {
                height,
                sigma,
                separation,
                center,
            } => {
                let off = Vec2::new(separation / 2.0, 0.0);
                Bump {
                    center: *center - off,
                    height: *height,
                    sigma: *sigma,
                }
                .eval(p)
                    + Bump {
                        center: *center + off,
                        height: *height,
                        sigma: *sigma,
                    }
                    .eval(p)
            }
        }
    }
}

/// Samples a synthetic landscape on `spec`.
pub fn synth(spec: GridSpec, kind: &SynthKind) -> Result<TerrainGrid> {
    spec.validate()?;
    kind.validate(&spec)?;
    TerrainGrid::from_fn(spec, |p| kind.eval(p))
}
