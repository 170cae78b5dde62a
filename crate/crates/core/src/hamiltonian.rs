//! The direction-maximizing Hamiltonian, its Godunov flux and the gradients
//! that drive the characteristic equations.
//!
//! For a walking direction `s(θ) = (cos θ, sin θ)` the directional
//! Hamiltonian is `V(s·∇E)·(s·p)`; the optimal-path Hamiltonian is its
//! maximum over a fixed set of `M` headings, scaled by the steep-slope
//! penalty `P(|∇E|)`. At a fixed terrain gradient this is the support
//! function of the point set `c_m = P·V(s_m·∇E)·s_m`, so it is convex and
//! positively homogeneous of degree one in `p`. The level-set solver uses
//! [`VelocitySet`] to precompute the `c_m` once per node.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::Vec2;
use crate::mobility::MobilityModel;
use crate::terrain::TerrainGrid;

/// Discretization of the control: `M` headings `θ_m = 2πm/M, m = 1..=M`
/// and `K` interior samples per Godunov interval.
#[derive(Clone, Debug)]
pub struct ControlDisc {
    interior_samples: usize,
    thetas: Vec<f64>,
    dirs: Vec<Vec2>,
}

impl Default for ControlDisc {
    fn default() -> Self {
        ControlDisc::new(64, 5).expect("default discretization is valid")
    }
}

impl ControlDisc {
    pub fn new(directions: usize, interior_samples: usize) -> Result<Self> {
        if directions < 8 {
            return Err(Error::invalid(format!(
                "need at least 8 walking directions, got {directions}"
            )));
        }
        if interior_samples < 3 {
            return Err(Error::invalid(format!(
                "need at least 3 interior samples per interval, got {interior_samples}"
            )));
        }
        let thetas: Vec<f64> = (1..=directions)
            .map(|m| 2.0 * PI * m as f64 / directions as f64)
            .collect();
        let dirs = thetas.iter().map(|&t| Vec2::from_angle(t)).collect();
        Ok(ControlDisc {
            interior_samples,
            thetas,
            dirs,
        })
    }

    pub fn directions(&self) -> usize {
        self.thetas.len()
    }

    pub fn interior_samples(&self) -> usize {
        self.interior_samples
    }

    pub fn theta(&self, m: usize) -> f64 {
        self.thetas[m]
    }

    pub fn dir(&self, m: usize) -> Vec2 {
        self.dirs[m]
    }
}

/// Value of the discrete supremum and the heading that attains it.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HamiltonianEval {
    pub value: f64,
    pub argmax_theta: f64,
    /// Index into the heading table.
    pub argmax: usize,
}

pub fn directional_h(model: &MobilityModel, grad_e: Vec2, theta: f64, p: Vec2) -> f64 {
    let s = Vec2::from_angle(theta);
    model.velocity(s.dot(grad_e)) * s.dot(p)
}

/// Discrete supremum over the headings of `disc`; ties go to the smallest θ.
pub fn optimal_h(
    model: &MobilityModel,
    disc: &ControlDisc,
    grad_e: Vec2,
    p: Vec2,
) -> HamiltonianEval {
    let mut best = f64::NEG_INFINITY;
    let mut arg = 0;
    for (m, &s) in disc.dirs.iter().enumerate() {
        let h = model.velocity(s.dot(grad_e)) * s.dot(p);
        if h > best {
            best = h;
            arg = m;
        }
    }
    HamiltonianEval {
        value: best,
        argmax_theta: disc.thetas[arg],
        argmax: arg,
    }
}

pub fn penalized_h(
    model: &MobilityModel,
    disc: &ControlDisc,
    grad_e: Vec2,
    p: Vec2,
) -> HamiltonianEval {
    let mut eval = optimal_h(model, disc, grad_e, p);
    eval.value *= model.penalization_unchecked(grad_e.norm());
    eval
}

/// Envelope gradient `∇_p H`: the penalized velocity along the maximizing
/// heading.
pub fn grad_p_h(
    model: &MobilityModel,
    disc: &ControlDisc,
    grad_e: Vec2,
    p: Vec2,
) -> Result<Vec2> {
    if p.x == 0.0 && p.y == 0.0 {
        return Err(Error::DegenerateMomentum { x: p.x, y: p.y });
    }
    let eval = optimal_h(model, disc, grad_e, p);
    let s = disc.dirs[eval.argmax];
    let speed = model.penalization_unchecked(grad_e.norm()) * model.velocity(s.dot(grad_e));
    Ok(s * speed)
}

/// `∇_x H` by central differences of the penalized Hamiltonian with step
/// `min(dx, dy)/2`, holding `p` fixed.
pub fn grad_x_h(
    grid: &TerrainGrid,
    model: &MobilityModel,
    disc: &ControlDisc,
    x: Vec2,
    p: Vec2,
) -> Result<Vec2> {
    let h = grid.spec().min_spacing() / 2.0;
    grad_x_h_with_step(grid, model, disc, x, p, h)
}

pub fn grad_x_h_with_step(
    grid: &TerrainGrid,
    model: &MobilityModel,
    disc: &ControlDisc,
    x: Vec2,
    p: Vec2,
    h: f64,
) -> Result<Vec2> {
    let at = |q: Vec2| -> Result<f64> {
        Ok(penalized_h(model, disc, grid.sample_gradient(q)?, p).value)
    };
    let ex = Vec2::new(h, 0.0);
    let ey = Vec2::new(0.0, h);
    let gx = (at(x + ex)? - at(x - ex)?) / (2.0 * h);
    let gy = (at(x + ey)? - at(x - ey)?) / (2.0 * h);
    Ok(Vec2::new(gx, gy))
}

/// Godunov numerical Hamiltonian at a point with terrain gradient `grad_e`,
/// from the one-sided derivative estimates of the level-set function.
pub fn godunov_flux(
    model: &MobilityModel,
    disc: &ControlDisc,
    grad_e: Vec2,
    dmx: f64,
    dpx: f64,
    dmy: f64,
    dpy: f64,
) -> f64 {
    let set = VelocitySet::new(model, disc, grad_e);
    set.godunov(disc.interior_samples, dmx, dpx, dmy, dpy)
}

/// Penalized heading velocities `c_m` at one terrain gradient, stored as
/// separate x and y components.
#[derive(Clone, Debug)]
pub struct VelocitySet {
    cx: Vec<f64>,
    cy: Vec<f64>,
}

impl VelocitySet {
    pub fn new(model: &MobilityModel, disc: &ControlDisc, grad_e: Vec2) -> Self {
        let mut cx = vec![0.0; disc.directions()];
        let mut cy = vec![0.0; disc.directions()];
        fill_velocities(model, disc, grad_e, &mut cx, &mut cy);
        VelocitySet { cx, cy }
    }

    pub fn hamiltonian(&self, p: Vec2) -> f64 {
        support(&self.cx, &self.cy, p.x, p.y)
    }

    pub fn godunov(&self, k: usize, dmx: f64, dpx: f64, dmy: f64, dpy: f64) -> f64 {
        godunov_packed(&self.cx, &self.cy, k, dmx, dpx, dmy, dpy)
    }
}

pub(crate) fn fill_velocities(
    model: &MobilityModel,
    disc: &ControlDisc,
    grad_e: Vec2,
    cx: &mut [f64],
    cy: &mut [f64],
) {
    let pen = model.penalization_unchecked(grad_e.norm());
    for (m, &s) in disc.dirs.iter().enumerate() {
        let w = pen * model.velocity(s.dot(grad_e));
        cx[m] = w * s.x;
        cy[m] = w * s.y;
    }
}

/// `max_m (cx_m·u + cy_m·v)`, written with independent lanes so the loop
/// vectorizes.
#[inline]
pub(crate) fn support(cx: &[f64], cy: &[f64], u: f64, v: f64) -> f64 {
    let mut acc = [f64::NEG_INFINITY; 4];
    let mut a = cx.chunks_exact(4);
    let mut b = cy.chunks_exact(4);
    for (ca, cb) in (&mut a).zip(&mut b) {
        for l in 0..4 {
            let d = ca[l] * u + cb[l] * v;
            acc[l] = if d > acc[l] { d } else { acc[l] };
        }
    }
    for (&ca, &cb) in a.remainder().iter().zip(b.remainder()) {
        let d = ca * u + cb * v;
        acc[0] = if d > acc[0] { d } else { acc[0] };
    }
    acc[0].max(acc[1]).max(acc[2].max(acc[3]))
}

/// Candidate abscissae for one `ext` over `I(a, b)`.
///
/// A minimum (a ≤ b) is searched over both endpoints, `K` equispaced
/// interior points and zero when it lies strictly inside. A maximum (a > b)
/// of a convex function sits at an endpoint, so only the endpoints are
/// visited.
#[derive(Clone, Copy, Debug)]
struct Candidates {
    lo: f64,
    hi: f64,
    minimize: bool,
    interior: usize,
    zero: bool,
}

impl Candidates {
    fn new(a: f64, b: f64, k: usize) -> Self {
        let minimize = a <= b;
        let (lo, hi) = if minimize { (a, b) } else { (b, a) };
        if lo == hi {
            return Candidates {
                lo,
                hi,
                minimize,
                interior: 0,
                zero: false,
            };
        }
        Candidates {
            lo,
            hi,
            minimize,
            interior: if minimize { k } else { 0 },
            zero: minimize && lo < 0.0 && hi > 0.0,
        }
    }

    fn len(&self) -> usize {
        if self.lo == self.hi {
            1
        } else {
            2 + self.interior + usize::from(self.zero)
        }
    }

    #[inline]
    fn get(&self, idx: usize) -> f64 {
        match idx {
            0 => self.lo,
            1 => self.hi,
            _ if idx - 2 < self.interior => {
                let t = (idx - 1) as f64 / (self.interior + 1) as f64;
                self.lo + (self.hi - self.lo) * t
            }
            _ => 0.0,
        }
    }

    #[inline]
    fn start(&self) -> f64 {
        if self.minimize {
            f64::INFINITY
        } else {
            f64::NEG_INFINITY
        }
    }

    #[inline]
    fn pick(&self, acc: f64, v: f64) -> f64 {
        if self.minimize {
            if v < acc {
                v
            } else {
                acc
            }
        } else if v > acc {
            v
        } else {
            acc
        }
    }
}

/// `ext_{u ∈ I(dmx, dpx)} ext_{v ∈ I(dmy, dpy)} H(u, v)` for the support
/// function of `(cx, cy)`.
pub(crate) fn godunov_packed(
    cx: &[f64],
    cy: &[f64],
    k: usize,
    dmx: f64,
    dpx: f64,
    dmy: f64,
    dpy: f64,
) -> f64 {
    let us = Candidates::new(dmx, dpx, k);
    let vs = Candidates::new(dmy, dpy, k);
    let mut outer = us.start();
    for iu in 0..us.len() {
        let u = us.get(iu);
        let mut inner = vs.start();
        for iv in 0..vs.len() {
            inner = vs.pick(inner, support(cx, cy, u, vs.get(iv)));
        }
        outer = us.pick(outer, inner);
    }
    outer
}
