//! Optimal-path extraction along backward characteristics.
//!
//! Starting from the point where the front arrived at `t*`, integrate
//! `ẋ = −∇_p H(x, p)`, `ṗ = ∇_x H(x, p)` with classical RK4 while time runs
//! backward from `t*`. Every few steps the momentum is reset to the
//! level-set gradient at the current backtracked time, which keeps the
//! trace on the front.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::Vec2;
use crate::hamiltonian::{grad_p_h, grad_x_h};
use crate::levelset::{LevelSetRun, Mode};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Terminus {
    ReachedSeedDisk,
    TimeExhausted,
    LeftDomain,
}

impl Terminus {
    pub fn as_str(self) -> &'static str {
        match self {
            Terminus::ReachedSeedDisk => "reached_seed_disk",
            Terminus::TimeExhausted => "time_exhausted",
            Terminus::LeftDomain => "left_domain",
        }
    }

    pub fn is_success(self) -> bool {
        self == Terminus::ReachedSeedDisk
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PathVertex {
    /// Elapsed backtracking time.
    pub tau: f64,
    pub x: Vec2,
    pub p: Vec2,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PathTrace {
    pub vertices: Vec<PathVertex>,
    pub t_star: f64,
    pub terminus: Terminus,
    pub origin: Vec2,
    /// Mode of the run the trace came from. Forward traces start at the
    /// destination, reverse traces end there.
    pub mode: Mode,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PathOptions {
    /// Reset `p ← ∇φ` every this many steps; 0 never resets.
    pub reinit_every: usize,
    /// RK4 step; `None` means `min(dx, dy) / (4·v_amp)`.
    pub h_step: Option<f64>,
}

impl Default for PathOptions {
    fn default() -> Self {
        PathOptions { reinit_every: 5, h_step: None }
    }
}

impl PathTrace {
    pub fn points(&self) -> impl Iterator<Item = Vec2> + '_ {
        self.vertices.iter().map(|v| v.x)
    }

    pub fn end(&self) -> Vec2 {
        self.vertices.last().map_or(self.origin, |v| v.x)
    }

    pub fn duration(&self) -> f64 {
        self.vertices.last().map_or(0.0, |v| v.tau)
    }
}

/// Polyline arc length and the stored optimal time.
pub fn path_length_time(trace: &PathTrace) -> (f64, f64) {
    let len = trace
        .vertices
        .windows(2)
        .map(|w| w[0].x.distance(w[1].x))
        .sum();
    (len, trace.t_star)
}

/// Traces the optimal path from `origin` back to the run's seed disk.
///
/// `t_star` is the arrival time at `origin`; the initial momentum is
/// `∇φ(origin, t_star)`.
pub fn extract_path(
    run: &LevelSetRun,
    origin: Vec2,
    t_star: f64,
    opts: &PathOptions,
) -> Result<PathTrace> {
    if !(t_star.is_finite() && t_star >= 0.0) {
        return Err(Error::NoArrival { x: origin.x, y: origin.y });
    }
    let spec = *run.spec();
    if !spec.contains(origin) {
        return Err(Error::OutOfDomain { x: origin.x, y: origin.y });
    }
    let h_step = opts
        .h_step
        .unwrap_or(spec.min_spacing() / (4.0 * run.model().v_amp));
    if !(h_step.is_finite() && h_step > 0.0) {
        return Err(Error::invalid(format!("h_step must be positive, got {h_step}")));
    }
    let cell = spec.max_spacing();
    let inset = spec.min_spacing();
    let reach = run.delta() + cell;
    let seed = run.seed();

    let momentum = |x: Vec2, tau: f64| -> Result<Vec2> {
        let t = (t_star - tau).max(0.0);
        let p = run.gradient_at(spec.clamp_inside(x, inset), t)?;
        if p.norm() == 0.0 || !p.is_finite() {
            return Err(Error::DegenerateMomentum { x: x.x, y: x.y });
        }
        Ok(p)
    };
    let rhs = |x: Vec2, p: Vec2| -> Result<(Vec2, Vec2)> {
        let xc = spec.clamp_inside(x, inset);
        let ge = run.terrain().sample_gradient(xc)?;
        let dx = -grad_p_h(run.model(), run.disc(), ge, p)?;
        let dp = grad_x_h(run.terrain(), run.model(), run.disc(), xc, p)?;
        Ok((dx, dp))
    };

    let done = |vertices: Vec<PathVertex>, terminus| PathTrace { vertices, t_star, terminus, origin, mode: run.mode() };
    if origin.distance(seed) <= reach {
        let p = run.gradient_at(origin, t_star).unwrap_or(Vec2::ZERO);
        return Ok(done(vec![PathVertex { tau: 0.0, x: origin, p }], Terminus::ReachedSeedDisk));
    }
    let mut x = origin;
    let mut p = momentum(origin, 0.0)?;
    let mut tau = 0.0;
    let mut vertices = vec![PathVertex { tau, x, p }];
    if t_star == 0.0 {
        return Ok(done(vertices, Terminus::TimeExhausted));
    }

    let mut steps = 0usize;
    loop {
        let h = h_step.min(t_star - tau);
        let (k1x, k1p) = rhs(x, p)?;
        let (k2x, k2p) = rhs(x + k1x * (0.5 * h), p + k1p * (0.5 * h))?;
        let (k3x, k3p) = rhs(x + k2x * (0.5 * h), p + k2p * (0.5 * h))?;
        let (k4x, k4p) = rhs(x + k3x * h, p + k3p * h)?;
        x += (k1x + k2x * 2.0 + k3x * 2.0 + k4x) * (h / 6.0);
        p += (k1p + k2p * 2.0 + k3p * 2.0 + k4p) * (h / 6.0);
        steps += 1;
        tau = if t_star - tau <= h_step { t_star } else { tau + h };

        if !x.is_finite() || x.distance(spec.clamp_inside(x, inset)) > cell {
            vertices.push(PathVertex { tau, x, p });
            return Ok(done(vertices, Terminus::LeftDomain));
        }
        if opts.reinit_every > 0 && steps.is_multiple_of(opts.reinit_every) && tau < t_star {
            p = momentum(x, tau)?;
        }
        vertices.push(PathVertex { tau, x, p });
        if x.distance(seed) <= reach {
            return Ok(done(vertices, Terminus::ReachedSeedDisk));
        }
        if tau >= t_star {
            return Ok(done(vertices, Terminus::TimeExhausted));
        }
    }
}
