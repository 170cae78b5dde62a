//! Uncertain starting point: one reverse solve from the destination, many
//! extracted paths, and k-means grouping of the paths.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::Vec2;
use crate::hamiltonian::ControlDisc;
use crate::levelset::{init_run, Mode, SolverOptions};
use crate::mobility::MobilityModel;
use crate::path::{extract_path, PathOptions, PathTrace};
use crate::terrain::TerrainGrid;

/// Paths are compared over this leading share of their parameter range so
/// that different start points do not count against them.
pub const COMPARE_UP_TO: f64 = 0.8;

const RESTARTS: usize = 20;
const MAX_LLOYD_ITERS: usize = 300;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Distribution {
    #[default]
    UniformDisk,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StartRegion {
    pub center: Vec2,
    pub radius: f64,
    #[serde(default)]
    pub distribution: Distribution,
}

impl StartRegion {
    pub fn disk(center: Vec2, radius: f64) -> Self {
        StartRegion { center, radius, distribution: Distribution::UniformDisk }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.center.is_finite() || !(self.radius.is_finite() && self.radius > 0.0) {
            return Err(Error::invalid(format!(
                "start region needs a finite centre and positive radius, got {:?} r={}",
                self.center, self.radius
            )));
        }
        Ok(())
    }
}

/// `n` points drawn uniformly from the disk (polar form with `√u` radius).
pub fn sample_region(region: &StartRegion, n: usize, seed: u64) -> Result<Vec<Vec2>> {
    region.validate()?;
    if n == 0 {
        return Err(Error::invalid("sample count must be at least 1"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok((0..n)
        .map(|_| {
            let r = region.radius * rng.gen::<f64>().sqrt();
            let theta = std::f64::consts::TAU * rng.gen::<f64>();
            region.center + Vec2::from_angle(theta) * r
        })
        .collect())
}

/// `l` points at equal steps of normalized elapsed time, parameter 0 at the
/// destination end.
pub fn reparametrize(trace: &PathTrace, l: usize) -> Result<Vec<Vec2>> {
    if l < 2 {
        return Err(Error::invalid(format!("need at least 2 samples, got {l}")));
    }
    if !trace.terminus.is_success() {
        return Err(Error::precondition(format!(
            "trace from ({}, {}) ended with {}",
            trace.origin.x,
            trace.origin.y,
            trace.terminus.as_str()
        )));
    }
    let total = trace.duration();
    if !(total > 0.0) {
        return Err(Error::precondition("zero-duration trace"));
    }
    // (time from the destination end, point), increasing in time
    let pts: Vec<(f64, Vec2)> = match trace.mode {
        Mode::Reverse => trace.vertices.iter().rev().map(|v| (total - v.tau, v.x)).collect(),
        Mode::Forward => trace.vertices.iter().map(|v| (v.tau, v.x)).collect(),
    };
    let mut out = Vec::with_capacity(l);
    let mut seg = 0;
    for s in 0..l {
        let t = total * s as f64 / (l - 1) as f64;
        while seg + 2 < pts.len() && pts[seg + 1].0 < t {
            seg += 1;
        }
        let (t0, p0) = pts[seg];
        let (t1, p1) = pts[seg + 1];
        let w = if t1 > t0 { ((t - t0) / (t1 - t0)).clamp(0.0, 1.0) } else { 0.0 };
        out.push(p0.lerp(p1, w));
    }
    out[0] = pts[0].1;
    out[l - 1] = pts[pts.len() - 1].1;
    Ok(out)
}

/// `∫₀^0.8 ‖P(s) − Q(s)‖ ds` by the trapezoid rule on the samples.
pub fn path_distance(p: &[Vec2], q: &[Vec2]) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::SampleMismatch(p.len(), q.len()));
    }
    if p.len() < 2 {
        return Err(Error::invalid("paths need at least 2 samples"));
    }
    let h = 1.0 / (p.len() - 1) as f64;
    let gap: Vec<f64> = p.iter().zip(q).map(|(a, b)| a.distance(*b)).collect();
    let mut total = 0.0;
    for i in 0..gap.len() - 1 {
        let s0 = i as f64 * h;
        if s0 >= COMPARE_UP_TO - 1e-12 {
            break;
        }
        let s1 = s0 + h;
        if s1 <= COMPARE_UP_TO + 1e-12 {
            total += 0.5 * h * (gap[i] + gap[i + 1]);
        } else {
            let w = (COMPARE_UP_TO - s0) / h;
            let end = gap[i] + w * (gap[i + 1] - gap[i]);
            total += 0.5 * (COMPARE_UP_TO - s0) * (gap[i] + end);
        }
    }
    Ok(total)
}

/// Number of leading samples whose parameter is at most 0.8.
pub fn compared_samples(l: usize) -> usize {
    (0..l)
        .take_while(|&s| s as f64 / (l - 1) as f64 <= COMPARE_UP_TO + 1e-12)
        .count()
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Clustering {
    /// One label per input path.
    pub labels: Vec<usize>,
    /// Mean path of each cluster over all samples.
    pub representatives: Vec<Vec<Vec2>>,
    pub fractions: Vec<f64>,
    /// Sum of squared feature distances to the assigned centroid.
    pub inertia: f64,
}

/// k-means (k-means++ seeding, best of 20 restarts) on the leading samples
/// of reparametrized paths. Labels are renumbered by first appearance.
pub fn cluster_paths(paths: &[Vec<Vec2>], k: usize, seed: u64) -> Result<Clustering> {
    if k == 0 {
        return Err(Error::invalid("k must be at least 1"));
    }
    if paths.len() < k {
        return Err(Error::TooFewPaths { need: k, have: paths.len() });
    }
    let l = paths[0].len();
    if let Some(bad) = paths.iter().find(|p| p.len() != l) {
        return Err(Error::SampleMismatch(l, bad.len()));
    }
    let lead = compared_samples(l);
    let features: Vec<Vec<f64>> = paths
        .iter()
        .map(|p| p[..lead].iter().flat_map(|v| [v.x, v.y]).collect())
        .collect();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: Option<(f64, Vec<usize>)> = None;
    for _ in 0..RESTARTS {
        let (inertia, labels) = lloyd(&features, k, &mut rng);
        if best.as_ref().is_none_or(|(b, _)| inertia < *b) {
            best = Some((inertia, labels));
        }
    }
    let (inertia, raw) = best.expect("at least one restart");

    let mut order: Vec<usize> = vec![];
    for &c in &raw {
        if !order.contains(&c) {
            order.push(c);
        }
    }
    let labels: Vec<usize> = raw.iter().map(|c| order.iter().position(|o| o == c).unwrap()).collect();
    let clusters = order.len();
    let mut representatives = vec![vec![Vec2::ZERO; l]; clusters];
    let mut counts = vec![0usize; clusters];
    for (path, &c) in paths.iter().zip(&labels) {
        counts[c] += 1;
        for (acc, v) in representatives[c].iter_mut().zip(path) {
            *acc += *v;
        }
    }
    for (rep, &n) in representatives.iter_mut().zip(&counts) {
        for v in rep.iter_mut() {
            *v = *v * (1.0 / n as f64);
        }
    }
    let fractions = counts.iter().map(|&n| n as f64 / paths.len() as f64).collect();
    Ok(Clustering { labels, representatives, fractions, inertia })
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn lloyd(features: &[Vec<f64>], k: usize, rng: &mut ChaCha8Rng) -> (f64, Vec<usize>) {
    let n = features.len();
    // k-means++ seeding
    let mut centers: Vec<Vec<f64>> = vec![features[rng.gen_range(0..n)].clone()];
    let mut nearest: Vec<f64> = features.iter().map(|f| sq_dist(f, &centers[0])).collect();
    while centers.len() < k {
        let total: f64 = nearest.iter().sum();
        let pick = if total > 0.0 {
            let mut r = rng.gen::<f64>() * total;
            let mut chosen = n - 1;
            for (i, &d) in nearest.iter().enumerate() {
                if r < d {
                    chosen = i;
                    break;
                }
                r -= d;
            }
            chosen
        } else {
            rng.gen_range(0..n)
        };
        centers.push(features[pick].clone());
        for (d, f) in nearest.iter_mut().zip(features) {
            *d = d.min(sq_dist(f, centers.last().unwrap()));
        }
    }

    let dim = features[0].len();
    let mut labels = vec![usize::MAX; n];
    for _ in 0..MAX_LLOYD_ITERS {
        let mut changed = false;
        for (i, f) in features.iter().enumerate() {
            let mut best = 0;
            let mut best_d = f64::INFINITY;
            for (c, center) in centers.iter().enumerate() {
                let d = sq_dist(f, center);
                if d < best_d {
                    best = c;
                    best_d = d;
                }
            }
            if labels[i] != best {
                labels[i] = best;
                changed = true;
            }
        }
        if !changed {
            break;
        }
        let mut sums = vec![vec![0.0; dim]; k];
        let mut counts = vec![0usize; k];
        for (f, &c) in features.iter().zip(&labels) {
            counts[c] += 1;
            for (s, v) in sums[c].iter_mut().zip(f) {
                *s += v;
            }
        }
        for c in 0..k {
            if counts[c] == 0 {
                // move an empty centre onto the worst-served point
                let far = (0..n)
                    .max_by(|&a, &b| {
                        let da = sq_dist(&features[a], &centers[labels[a]]);
                        let db = sq_dist(&features[b], &centers[labels[b]]);
                        da.total_cmp(&db).then(b.cmp(&a))
                    })
                    .unwrap();
                centers[c] = features[far].clone();
            } else {
                centers[c] = sums[c].iter().map(|s| s / counts[c] as f64).collect();
            }
        }
    }
    let inertia = features.iter().zip(&labels).map(|(f, &c)| sq_dist(f, &centers[c])).sum();
    (inertia, labels)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnsembleOptions {
    pub solver: SolverOptions,
    pub path: PathOptions,
    /// Samples per reparametrized path.
    pub samples: usize,
    pub seed: u64,
}

impl Default for EnsembleOptions {
    fn default() -> Self {
        EnsembleOptions {
            solver: SolverOptions { snapshot_every: 1, ..Default::default() },
            path: PathOptions::default(),
            samples: 101,
            seed: 0,
        }
    }
}

/// What happened to one sampled start.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StartOutcome {
    pub start: Vec2,
    pub t_star: Option<f64>,
    pub trace: Option<PathTrace>,
    /// Why the start is excluded from clustering, if it is.
    pub failure: Option<String>,
    pub label: Option<usize>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EnsembleResult {
    pub outcomes: Vec<StartOutcome>,
    pub representatives: Vec<Vec<Vec2>>,
    pub fractions: Vec<f64>,
    pub seed: u64,
    pub samples: usize,
}

impl EnsembleResult {
    pub fn successes(&self) -> usize {
        self.outcomes.iter().filter(|o| o.label.is_some()).count()
    }

    pub fn failures(&self) -> usize {
        self.outcomes.len() - self.successes()
    }
}

/// Reverse solve from `b` over the region, `n` sampled starts, one path
/// per start, and `k` clusters. Per-start failures are recorded, not
/// fatal.
#[allow(clippy::too_many_arguments)]
pub fn run_ensemble(
    terrain: &TerrainGrid,
    model: &MobilityModel,
    disc: &ControlDisc,
    b: Vec2,
    region: &StartRegion,
    n: usize,
    k: usize,
    opts: &EnsembleOptions,
) -> Result<EnsembleResult> {
    region.validate()?;
    let starts = sample_region(region, n, opts.seed)?;
    let mut run = init_run(terrain, model, disc, Mode::Reverse, b, &opts.solver)?;
    let field = run.run_until_region(region.center, region.radius)?;

    let mut outcomes: Vec<StartOutcome> = starts
        .par_iter()
        .map(|&a| {
            let mut out = StartOutcome { start: a, t_star: None, trace: None, failure: None, label: None };
            let t = match field.sample(a) {
                Ok(t) => t,
                Err(e) => {
                    out.failure = Some(e.to_string());
                    return out;
                }
            };
            out.t_star = Some(t);
            match extract_path(&run, a, t, &opts.path) {
                Ok(trace) => {
                    if !trace.terminus.is_success() {
                        out.failure = Some(format!("trace ended with {}", trace.terminus.as_str()));
                    }
                    out.trace = Some(trace);
                }
                Err(e) => out.failure = Some(e.to_string()),
            }
            out
        })
        .collect();

    let mut good = vec![];
    let mut paths = vec![];
    for (i, o) in outcomes.iter_mut().enumerate() {
        if o.failure.is_some() {
            continue;
        }
        match reparametrize(o.trace.as_ref().unwrap(), opts.samples) {
            Ok(p) => {
                good.push(i);
                paths.push(p);
            }
            Err(e) => o.failure = Some(e.to_string()),
        }
    }
    let clustering = cluster_paths(&paths, k, opts.seed)?;
    for (&i, &c) in good.iter().zip(&clustering.labels) {
        outcomes[i].label = Some(c);
    }
    Ok(EnsembleResult {
        outcomes,
        representatives: clustering.representatives,
        fractions: clustering.fractions,
        seed: opts.seed,
        samples: opts.samples,
    })
}
