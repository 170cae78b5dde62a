//! Level-set front propagation for the arrival-time problem.
//!
//! The front `{φ = 0}` starts as a circle of radius δ around the seed and
//! moves outward under `φ_t + H(x, ∇φ) = 0`. Space is discretized with ENO2
//! one-sided differences fed to the Godunov flux, time with the two-stage
//! TVD Runge-Kutta scheme. The front sweeps every node at most once, so the
//! first crossing gives the arrival time.

mod eno;
mod redistance;

pub use eno::{eno2_onesided, minmod};
pub use redistance::redistance;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::Vec2;
use crate::grid::GridSpec;
use crate::hamiltonian::{fill_velocities, godunov_packed, ControlDisc};
use crate::mobility::MobilityModel;
use crate::terrain::TerrainGrid;

/// Seeds and targets must stay this many cells away from the boundary.
pub const BOUNDARY_MARGIN_CELLS: f64 = 5.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// Front grows from the start point on the given terrain.
    Forward,
    /// Front grows from the destination on the negated terrain, so the
    /// arrival field holds the remaining time to the destination.
    Reverse,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverOptions {
    pub cfl: f64,
    /// Initial front radius; `None` means three cell widths.
    pub delta: Option<f64>,
    /// Re-distance every this many steps; 0 disables.
    pub redistance_every: usize,
    /// Keep a copy of φ every this many steps; 0 keeps only the first and
    /// last.
    pub snapshot_every: usize,
    pub max_steps: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            cfl: 0.5,
            delta: None,
            redistance_every: 20,
            snapshot_every: 1,
            max_steps: 20_000,
        }
    }
}

impl SolverOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.cfl > 0.0 && self.cfl <= 1.0) {
            return Err(Error::invalid(format!("cfl must lie in (0, 1], got {}", self.cfl)));
        }
        if let Some(d) = self.delta {
            if !(d.is_finite() && d > 0.0) {
                return Err(Error::invalid(format!("delta must be positive, got {d}")));
            }
        }
        if self.max_steps == 0 {
            return Err(Error::invalid("max_steps must be positive"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct Snapshot {
    pub time: f64,
    pub phi: Vec<f64>,
}

/// First-arrival times on the grid nodes; NaN where the front never came.
#[derive(Clone, Debug)]
pub struct ArrivalField {
    spec: GridSpec,
    times: Vec<f64>,
}

impl ArrivalField {
    pub fn new(spec: GridSpec, times: Vec<f64>) -> Result<Self> {
        spec.validate()?;
        if times.len() != spec.len() {
            return Err(Error::SampleMismatch(times.len(), spec.len()));
        }
        Ok(ArrivalField { spec, times })
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn get(&self, i: usize, j: usize) -> Option<f64> {
        let t = self.times[self.spec.idx(i, j)];
        (!t.is_nan()).then_some(t)
    }

    /// Bilinear interpolation; fails if any corner of the cell is unset.
    pub fn sample(&self, p: Vec2) -> Result<f64> {
        let c = self.spec.locate(p)?;
        let (i1, j1) = ((c.i + 1).min(self.spec.nx - 1), (c.j + 1).min(self.spec.ny - 1));
        for (i, j) in [(c.i, c.j), (i1, c.j), (c.i, j1), (i1, j1)] {
            if self.get(i, j).is_none() {
                return Err(Error::NoArrival { x: p.x, y: p.y });
            }
        }
        Ok(self.spec.bilinear_at(&self.times, c))
    }

    /// Fraction of nodes with an arrival time.
    pub fn coverage(&self) -> f64 {
        let n = self.times.iter().filter(|t| !t.is_nan()).count();
        n as f64 / self.times.len() as f64
    }
}

/// Distribution of `|∇φ|` over a band around the front.
#[derive(Clone, Debug, Serialize)]
pub struct BandStats {
    pub nodes: usize,
    /// Fraction of band nodes with `|∇φ|` in `[0.8, 1.2]`.
    pub near_unit: f64,
    pub min: f64,
    pub p10: f64,
    pub median: f64,
    pub p90: f64,
    pub max: f64,
}

/// A front propagation in progress.
pub struct LevelSetRun {
    terrain: TerrainGrid,
    model: MobilityModel,
    disc: ControlDisc,
    mode: Mode,
    seed: Vec2,
    delta: f64,
    opts: SolverOptions,
    dt: f64,
    cx: Vec<f64>,
    cy: Vec<f64>,
    phi: Vec<f64>,
    arrival: Vec<f64>,
    snapshots: Vec<Snapshot>,
    time: f64,
    steps: usize,
    redistanced: usize,
    stage: Vec<f64>,
    flux: Vec<f64>,
}

/// Sets up `φ⁰(x) = |x − seed| − δ` and the per-node velocity tables.
///
/// In reverse mode the terrain is negated, which reverses every slope so the
/// front from the destination measures time-to-destination.
pub fn init_run(
    terrain: &TerrainGrid,
    model: &MobilityModel,
    disc: &ControlDisc,
    mode: Mode,
    seed: Vec2,
    opts: &SolverOptions,
) -> Result<LevelSetRun> {
    model.validate()?;
    opts.validate()?;
    let spec = *terrain.spec();
    let h = spec.max_spacing();
    let delta = opts.delta.unwrap_or(3.0 * h);
    if delta < 2.0 * h {
        return Err(Error::invalid(format!(
            "delta = {delta} must be at least two cell widths ({})",
            2.0 * h
        )));
    }
    check_margin(&spec, seed, delta, "seed")?;

    let terrain = match mode {
        Mode::Forward => terrain.clone(),
        Mode::Reverse => terrain.negated(),
    };
    let m = disc.directions();
    let n = spec.len();
    let mut cx = vec![0.0; n * m];
    let mut cy = vec![0.0; n * m];
    cx.par_chunks_mut(m)
        .zip(cy.par_chunks_mut(m))
        .enumerate()
        .for_each(|(k, (a, b))| fill_velocities(model, disc, terrain.grad_index(k), a, b));

    let phi: Vec<f64> = (0..n)
        .map(|k| spec.node(k % spec.nx, k / spec.nx).distance(seed) - delta)
        .collect();
    let arrival = phi.iter().map(|&v| if v <= 0.0 { 0.0 } else { f64::NAN }).collect();
    let dt = opts.cfl * spec.min_spacing() / model.v_amp;
    Ok(LevelSetRun {
        terrain,
        model: *model,
        disc: disc.clone(),
        mode,
        seed,
        delta,
        opts: opts.clone(),
        dt,
        cx,
        cy,
        snapshots: vec![Snapshot { time: 0.0, phi: phi.clone() }],
        phi,
        arrival,
        time: 0.0,
        steps: 0,
        redistanced: 0,
        stage: vec![0.0; n],
        flux: vec![0.0; n],
    })
}

fn check_margin(spec: &GridSpec, p: Vec2, radius: f64, what: &str) -> Result<()> {
    if !p.is_finite() || !spec.contains(p) {
        return Err(Error::OutOfDomain { x: p.x, y: p.y });
    }
    let cells = BOUNDARY_MARGIN_CELLS.max(radius / spec.min_spacing() + 2.0);
    if !spec.has_margin(p, cells) {
        return Err(Error::precondition(format!(
            "{what} ({}, {}) is closer than {cells:.1} cells to the boundary",
            p.x, p.y
        )));
    }
    Ok(())
}

/// Time at which a node with `φ = phi_old` at `t_old` and `phi_new` one
/// step later crosses zero, by linear interpolation.
pub fn crossing_time(t_old: f64, dt: f64, phi_old: f64, phi_new: f64) -> f64 {
    t_old + dt * phi_old / (phi_old - phi_new)
}

/// One explicit step; returns the time step taken.
pub fn step(run: &mut LevelSetRun) -> Result<f64> {
    run.step()
}

impl LevelSetRun {
    pub fn spec(&self) -> &GridSpec {
        self.terrain.spec()
    }

    /// The terrain the front moves on (negated in reverse mode).
    pub fn terrain(&self) -> &TerrainGrid {
        &self.terrain
    }

    pub fn model(&self) -> &MobilityModel {
        &self.model
    }

    pub fn disc(&self) -> &ControlDisc {
        &self.disc
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn seed(&self) -> Vec2 {
        self.seed
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn redistance_count(&self) -> usize {
        self.redistanced
    }

    pub fn phi(&self) -> &[f64] {
        &self.phi
    }

    pub fn snapshots(&self) -> &[Snapshot] {
        &self.snapshots
    }

    pub fn arrival(&self) -> ArrivalField {
        ArrivalField { spec: *self.spec(), times: self.arrival.clone() }
    }

    pub fn arrival_times(&self) -> &[f64] {
        &self.arrival
    }

    /// Fraction of nodes the front has reached.
    pub fn coverage(&self) -> f64 {
        let n = self.arrival.iter().filter(|t| !t.is_nan()).count();
        n as f64 / self.arrival.len() as f64
    }

    /// Writes the numerical Hamiltonian of `phi` into `out`.
    fn hamiltonian_field(&self, phi: &[f64], out: &mut [f64]) {
        let spec = *self.spec();
        let (nx, ny) = (spec.nx, spec.ny);
        let m = self.disc.directions();
        let kint = self.disc.interior_samples();
        let (cx, cy) = (&self.cx, &self.cy);
        out.par_chunks_mut(nx).enumerate().for_each(|(j, row)| {
            for (i, slot) in row.iter_mut().enumerate() {
                let k = j * nx + i;
                let (dmx, dpx) = eno::eno2_with(|o| phi[(k as isize + o) as usize], i, nx, spec.dx);
                let (dmy, dpy) = eno::eno2_with(
                    |o| phi[(k as isize + o * nx as isize) as usize],
                    j,
                    ny,
                    spec.dy,
                );
                let r = k * m..(k + 1) * m;
                *slot = godunov_packed(&cx[r.clone()], &cy[r], kint, dmx, dpx, dmy, dpy);
            }
        });
    }

    fn step(&mut self) -> Result<f64> {
        let dt = self.dt;
        let mut flux = std::mem::take(&mut self.flux);
        let mut stage = std::mem::take(&mut self.stage);

        self.hamiltonian_field(&self.phi, &mut flux);
        for ((s, &p), &f) in stage.iter_mut().zip(&self.phi).zip(&flux) {
            *s = p - dt * f;
        }
        self.hamiltonian_field(&stage, &mut flux);
        let t0 = self.time;
        let mut bad = None;
        for k in 0..self.phi.len() {
            let old = self.phi[k];
            let new = 0.5 * old + 0.5 * (stage[k] - dt * flux[k]);
            if !new.is_finite() {
                bad.get_or_insert(k);
            }
            if old > 0.0 && new <= 0.0 && self.arrival[k].is_nan() {
                self.arrival[k] = crossing_time(t0, dt, old, new);
            }
            self.phi[k] = new;
        }
        self.flux = flux;
        self.stage = stage;
        self.steps += 1;
        self.time = t0 + dt;
        if let Some(k) = bad {
            let spec = self.spec();
            let p = spec.node(k % spec.nx, k / spec.nx);
            return Err(Error::BlowUp {
                step: self.steps,
                time: self.time,
                detail: format!("non-finite level-set value at ({}, {})", p.x, p.y),
            });
        }
        Ok(dt)
    }

    /// Re-distances φ now. Fails when φ no longer changes sign.
    pub fn redistance(&mut self) -> Result<()> {
        redistance::redistance(self.terrain.spec(), &mut self.phi)?;
        self.redistanced += 1;
        Ok(())
    }

    /// Periodic re-distancing that is due before the next step. A field
    /// that no longer has an interface is left alone: the front has
    /// swept the whole grid.
    fn maintain(&mut self) -> Result<()> {
        let every = self.opts.redistance_every;
        if every > 0 && self.steps > 0 && self.steps.is_multiple_of(every) {
            match self.redistance() {
                Ok(()) | Err(Error::NoInterface) => {}
                Err(e) => return Err(e),
            }
        }
        Ok(())
    }

    fn record(&mut self) {
        let every = self.opts.snapshot_every;
        if every > 0 && self.steps.is_multiple_of(every) {
            self.snapshots.push(Snapshot { time: self.time, phi: self.phi.clone() });
        }
    }

    /// Maintenance, one step, and snapshot bookkeeping.
    pub fn advance(&mut self) -> Result<()> {
        self.maintain()?;
        self.step()?;
        self.record();
        Ok(())
    }

    /// Makes sure the current state is the last snapshot.
    pub fn finish(&mut self) {
        if self.snapshots.last().map(|s| s.time) != Some(self.time) {
            self.snapshots.push(Snapshot { time: self.time, phi: self.phi.clone() });
        }
    }

    fn timeout(&self) -> Error {
        Error::Timeout {
            steps: self.steps,
            time: self.time,
            covered: 100.0 * self.coverage(),
        }
    }

    /// Advances until the front passes `target` and returns the crossing
    /// time, interpolated linearly inside the last step.
    pub fn run_until_point(&mut self, target: Vec2) -> Result<f64> {
        check_margin(self.spec(), target, 0.0, "target")?;
        let spec = *self.spec();
        let probe = |phi: &[f64]| spec.bilinear(phi, target);
        if probe(&self.phi)? <= 0.0 {
            return Err(Error::precondition(format!(
                "target ({}, {}) lies inside the initial front",
                target.x, target.y
            )));
        }
        loop {
            if self.steps >= self.opts.max_steps {
                return Err(self.timeout());
            }
            self.maintain()?;
            let before = probe(&self.phi)?;
            let t0 = self.time;
            let dt = self.step()?;
            self.record();
            let after = probe(&self.phi)?;
            if after <= 0.0 {
                self.finish();
                return Ok(crossing_time(t0, dt, before, after));
            }
        }
    }

    /// Advances until every node within `radius + √2·h` of `center` has an
    /// arrival time, so the field can be interpolated anywhere in the
    /// disk.
    pub fn run_until_region(&mut self, center: Vec2, radius: f64) -> Result<ArrivalField> {
        if self.mode != Mode::Reverse {
            return Err(Error::precondition("region runs use reverse mode"));
        }
        if !(radius.is_finite() && radius > 0.0) {
            return Err(Error::invalid(format!("region radius must be positive, got {radius}")));
        }
        check_margin(self.spec(), center, radius, "region")?;
        if center.distance(self.seed) <= radius + self.delta {
            return Err(Error::precondition("region overlaps the destination seed disk"));
        }
        let spec = *self.spec();
        let reach = radius + std::f64::consts::SQRT_2 * spec.max_spacing();
        let targets: Vec<usize> = (0..spec.len())
            .filter(|&k| spec.node(k % spec.nx, k / spec.nx).distance(center) <= reach)
            .collect();
        while targets.iter().any(|&k| self.arrival[k].is_nan()) {
            if self.steps >= self.opts.max_steps {
                return Err(self.timeout());
            }
            self.advance()?;
        }
        self.finish();
        Ok(self.arrival())
    }

    fn bracket(&self, t: f64) -> Result<(usize, usize, f64)> {
        let lo = self.snapshots[0].time;
        let hi = self.snapshots.last().map_or(lo, |s| s.time);
        let tol = 1e-9 * hi.max(1.0);
        if !(t >= lo - tol && t <= hi + tol) {
            return Err(Error::TimeOutOfRange { t, lo, hi });
        }
        let t = t.clamp(lo, hi);
        let after = self.snapshots.partition_point(|s| s.time < t);
        if after == 0 {
            return Ok((0, 0, 0.0));
        }
        let (a, b) = (&self.snapshots[after - 1], &self.snapshots[after]);
        let w = if b.time > a.time { (t - a.time) / (b.time - a.time) } else { 0.0 };
        Ok((after - 1, after, w))
    }

    /// `∇φ(x, t)`: bilinear in space, linear in time between snapshots.
    pub fn gradient_at(&self, x: Vec2, t: f64) -> Result<Vec2> {
        let (a, b, w) = self.bracket(t)?;
        let spec = self.spec();
        let ga = spec.gradient(&self.snapshots[a].phi, x)?;
        if a == b || w == 0.0 {
            return Ok(ga);
        }
        let gb = spec.gradient(&self.snapshots[b].phi, x)?;
        Ok(ga.lerp(gb, w))
    }

    /// `φ(x, t)` with the same interpolation as [`Self::gradient_at`].
    pub fn phi_at(&self, x: Vec2, t: f64) -> Result<f64> {
        let (a, b, w) = self.bracket(t)?;
        let spec = self.spec();
        let va = spec.bilinear(&self.snapshots[a].phi, x)?;
        if a == b || w == 0.0 {
            return Ok(va);
        }
        let vb = spec.bilinear(&self.snapshots[b].phi, x)?;
        Ok(va + w * (vb - va))
    }

    /// `|∇φ|` over nodes within `cells` (index distance) of the front,
    /// excluding the outer ring of the grid.
    pub fn band_gradient_stats(&self, cells: usize) -> Result<BandStats> {
        band_gradient_stats(self.spec(), &self.phi, cells)
    }
}

/// See [`LevelSetRun::band_gradient_stats`].
pub fn band_gradient_stats(spec: &GridSpec, phi: &[f64], cells: usize) -> Result<BandStats> {
    let (nx, ny) = (spec.nx, spec.ny);
    let seed = redistance::interface_mask(spec, phi);
    // separable square dilation
    let mut rows = vec![false; seed.len()];
    for j in 0..ny {
        for i in 0..nx {
            let lo = i.saturating_sub(cells);
            let hi = (i + cells).min(nx - 1);
            rows[spec.idx(i, j)] = (lo..=hi).any(|ii| seed[spec.idx(ii, j)]);
        }
    }
    let mut norms = vec![];
    for j in 1..ny - 1 {
        for i in 1..nx - 1 {
            let lo = j.saturating_sub(cells);
            let hi = (j + cells).min(ny - 1);
            if (lo..=hi).any(|jj| rows[spec.idx(i, jj)]) {
                norms.push(spec.node_gradient(phi, i, j).norm());
            }
        }
    }
    if norms.is_empty() {
        return Err(Error::NoInterface);
    }
    norms.sort_by(|a, b| a.total_cmp(b));
    let q = |f: f64| norms[((norms.len() - 1) as f64 * f).round() as usize];
    let near = norms.iter().filter(|g| (0.8..=1.2).contains(*g)).count();
    Ok(BandStats {
        nodes: norms.len(),
        near_unit: near as f64 / norms.len() as f64,
        min: norms[0],
        p10: q(0.1),
        median: q(0.5),
        p90: q(0.9),
        max: *norms.last().unwrap(),
    })
}

#[cfg(test)]
mod tests;
