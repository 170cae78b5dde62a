//! Anisotropic Dijkstra on the grid graph, used as an independent check of
//! the level-set arrival times.
//!
//! Edge `u → w` costs `|w − u| / (P̄·V(S))` with `S` the elevation rise over
//! run between the endpoints and `P̄` the slope penalty at the mean of the
//! endpoint gradient magnitudes. Costs are direction dependent.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{segment_distance, Vec2};
use crate::mobility::MobilityModel;
use crate::terrain::TerrainGrid;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stencil {
    N8,
    N16,
}

const N8: [(i32, i32); 8] = [(1, 0), (1, 1), (0, 1), (-1, 1), (-1, 0), (-1, -1), (0, -1), (1, -1)];
const KNIGHT: [(i32, i32); 8] = [(2, 1), (1, 2), (-1, 2), (-2, 1), (-2, -1), (-1, -2), (1, -2), (2, -1)];

impl Stencil {
    fn offsets(self) -> impl Iterator<Item = (i32, i32)> {
        let extra: &'static [(i32, i32)] = match self {
            Stencil::N8 => &[],
            Stencil::N16 => &KNIGHT,
        };
        N8.iter().chain(extra).copied()
    }
}

#[derive(Clone, Copy, PartialEq)]
struct Entry {
    time: f64,
    node: usize,
}

impl Eq for Entry {}

impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        other.time.total_cmp(&self.time).then_with(|| other.node.cmp(&self.node))
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Cost of the directed edge between two nodes.
pub fn edge_cost(terrain: &TerrainGrid, model: &MobilityModel, u: (usize, usize), w: (usize, usize)) -> f64 {
    let spec = terrain.spec();
    let len = spec.node(u.0, u.1).distance(spec.node(w.0, w.1));
    let rise = terrain.elevation_at(w.0, w.1) - terrain.elevation_at(u.0, u.1);
    let mean_grad = 0.5 * (terrain.grad_at(u.0, u.1).norm() + terrain.grad_at(w.0, w.1).norm());
    let speed = model.penalization_unchecked(mean_grad) * model.velocity(rise / len);
    len / speed
}

struct Search {
    times: Vec<f64>,
    pred: Vec<usize>,
}

fn search(
    terrain: &TerrainGrid,
    model: &MobilityModel,
    sources: &[(usize, f64)],
    stencil: Stencil,
    stop_at: Option<usize>,
) -> Search {
    let spec = terrain.spec();
    let (nx, ny) = (spec.nx as i32, spec.ny as i32);
    let mut times = vec![f64::INFINITY; spec.len()];
    let mut pred = vec![usize::MAX; spec.len()];
    let mut heap = BinaryHeap::new();
    for &(k, t) in sources {
        if t < times[k] {
            times[k] = t;
            heap.push(Entry { time: t, node: k });
        }
    }
    let offsets: Vec<(i32, i32)> = stencil.offsets().collect();
    while let Some(Entry { time, node }) = heap.pop() {
        if time > times[node] {
            continue;
        }
        if stop_at == Some(node) {
            break;
        }
        let (i, j) = ((node % spec.nx) as i32, (node / spec.nx) as i32);
        for &(di, dj) in &offsets {
            let (a, b) = (i + di, j + dj);
            if a < 0 || b < 0 || a >= nx || b >= ny {
                continue;
            }
            let w = (b * nx + a) as usize;
            let t = time + edge_cost(terrain, model, (i as usize, j as usize), (a as usize, b as usize));
            if t < times[w] {
                times[w] = t;
                pred[w] = node;
                heap.push(Entry { time: t, node: w });
            }
        }
    }
    Search { times, pred }
}

fn node_index(terrain: &TerrainGrid, node: (usize, usize)) -> Result<usize> {
    let spec = terrain.spec();
    if node.0 >= spec.nx || node.1 >= spec.ny {
        return Err(Error::invalid(format!("node {node:?} outside the {}x{} grid", spec.nx, spec.ny)));
    }
    Ok(spec.idx(node.0, node.1))
}

/// Shortest travel times from one node to every node.
pub fn dijkstra_times(
    terrain: &TerrainGrid,
    model: &MobilityModel,
    source: (usize, usize),
    stencil: Stencil,
) -> Result<Vec<f64>> {
    let k = node_index(terrain, source)?;
    Ok(search(terrain, model, &[(k, 0.0)], stencil, None).times)
}

/// Shortest travel times from several sources with given start times.
pub fn dijkstra_times_from(
    terrain: &TerrainGrid,
    model: &MobilityModel,
    sources: &[(usize, f64)],
    stencil: Stencil,
) -> Vec<f64> {
    search(terrain, model, sources, stencil, None).times
}

/// Sources that mimic a front starting on the circle of radius `delta`:
/// nodes inside start at 0, nodes within one cell outside start at their
/// radial distance to the circle over the local radial speed.
pub fn disk_sources(
    terrain: &TerrainGrid,
    model: &MobilityModel,
    center: Vec2,
    delta: f64,
) -> Vec<(usize, f64)> {
    let spec = terrain.spec();
    let reach = delta + spec.max_spacing();
    let mut out = vec![];
    for j in 0..spec.ny {
        for i in 0..spec.nx {
            let q = spec.node(i, j);
            let rho = q.distance(center);
            if rho > reach {
                continue;
            }
            let t = if rho <= delta {
                0.0
            } else {
                let g = terrain.grad_at(i, j);
                let dir = (q - center) * (1.0 / rho);
                let speed = model.penalization_unchecked(g.norm()) * model.velocity(dir.dot(g));
                (rho - delta) / speed
            };
            out.push((spec.idx(i, j), t));
        }
    }
    out
}

/// Node polyline of a shortest route and its travel time.
pub fn dijkstra_path(
    terrain: &TerrainGrid,
    model: &MobilityModel,
    source: (usize, usize),
    target: (usize, usize),
    stencil: Stencil,
) -> Result<(Vec<(usize, usize)>, f64)> {
    let s = node_index(terrain, source)?;
    let t = node_index(terrain, target)?;
    let found = search(terrain, model, &[(s, 0.0)], stencil, Some(t));
    if !found.times[t].is_finite() {
        return Err(Error::precondition(format!("target {target:?} unreachable")));
    }
    // Walk back through optimal predecessors. Flat stretches have many
    // equal-cost routes; prefer the one closest to the straight line.
    let spec = terrain.spec();
    let (a, b) = (spec.node(source.0, source.1), spec.node(target.0, target.1));
    let (nx, ny) = (spec.nx as i32, spec.ny as i32);
    let offsets: Vec<(i32, i32)> = stencil.offsets().collect();
    let mut route = vec![target];
    let mut k = t;
    while k != s {
        let (i, j) = ((k % spec.nx) as i32, (k / spec.nx) as i32);
        let tol = 1e-9 * found.times[k].max(1.0);
        let mut best = found.pred[k];
        let mut best_d = segment_distance(spec.node(best % spec.nx, best / spec.nx), a, b);
        for &(di, dj) in &offsets {
            let (vi, vj) = (i - di, j - dj);
            if vi < 0 || vj < 0 || vi >= nx || vj >= ny {
                continue;
            }
            let v = (vj * nx + vi) as usize;
            let tv = found.times[v];
            if !(tv < found.times[k]) {
                continue;
            }
            let c = edge_cost(terrain, model, (vi as usize, vj as usize), (i as usize, j as usize));
            if (tv + c - found.times[k]).abs() <= tol {
                let d = segment_distance(spec.node(vi as usize, vj as usize), a, b);
                if d < best_d || (d == best_d && v < best) {
                    best = v;
                    best_d = d;
                }
            }
        }
        k = best;
        route.push((k % spec.nx, k / spec.nx));
    }
    route.reverse();
    Ok((route, found.times[t]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridSpec;
    use crate::terrain::{synth, SynthKind};

    fn flat(n: usize) -> TerrainGrid {
        synth(GridSpec::square(n, 1.0, Vec2::ZERO).unwrap(), &SynthKind::Flat { height: 2.0 }).unwrap()
    }

    fn speed0() -> f64 {
        let m = MobilityModel::default();
        m.penalization(0.0).unwrap() * m.velocity(0.0)
    }

    #[test]
    fn flat_axis_time() {
        let t = flat(41);
        let times = dijkstra_times(&t, &MobilityModel::default(), (5, 5), Stencil::N8).unwrap();
        assert_eq!(times[t.spec().idx(5, 5)], 0.0);
        let got = times[t.spec().idx(35, 5)];
        assert!((got - 30.0 / speed0()).abs() < 1e-9);
    }

    #[test]
    fn metrication_bounds() {
        let t = flat(61);
        let m = MobilityModel::default();
        let exact = (40.0f64.powi(2) + 20.0f64.powi(2)).sqrt() / speed0();
        let k = t.spec().idx(45, 25);
        let n8 = dijkstra_times(&t, &m, (5, 5), Stencil::N8).unwrap()[k];
        let n16 = dijkstra_times(&t, &m, (5, 5), Stencil::N16).unwrap()[k];
        assert!(n8 / exact - 1.0 <= 0.082 && n8 >= exact);
        assert!(n16 / exact - 1.0 <= 0.028 && n16 >= exact * (1.0 - 1e-12));
    }

    #[test]
    fn uphill_slower_than_downhill() {
        let spec = GridSpec::square(21, 1.0, Vec2::ZERO).unwrap();
        let t = TerrainGrid::from_fn(spec, |p| 0.2 * p.x).unwrap();
        let m = MobilityModel::default();
        let up = dijkstra_times(&t, &m, (2, 10), Stencil::N8).unwrap()[spec.idx(18, 10)];
        let down = dijkstra_times(&t, &m, (18, 10), Stencil::N8).unwrap()[spec.idx(2, 10)];
        assert!(up > down);
        assert!(edge_cost(&t, &m, (3, 3), (4, 3)) != edge_cost(&t, &m, (4, 3), (3, 3)));
    }

    #[test]
    fn n16_never_slower() {
        let spec = GridSpec::square(31, 1.0, Vec2::new(-15.0, -15.0)).unwrap();
        let t = synth(
            spec,
            &SynthKind::Saddle { height: 10.0, sigma: 4.0, separation: 14.0, center: Vec2::ZERO },
        )
        .unwrap();
        let m = MobilityModel::default();
        let a = dijkstra_times(&t, &m, (3, 15), Stencil::N8).unwrap();
        let b = dijkstra_times(&t, &m, (3, 15), Stencil::N16).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert!(y <= x);
            assert!(x.is_finite() && *x >= 0.0);
        }
    }

    #[test]
    fn flat_route_hugs_the_segment() {
        let t = flat(41);
        let m = MobilityModel::default();
        let (route, time) = dijkstra_path(&t, &m, (3, 4), (33, 17), Stencil::N8).unwrap();
        assert_eq!(route[0], (3, 4));
        assert_eq!(*route.last().unwrap(), (33, 17));
        let (a, b) = (Vec2::new(3.0, 4.0), Vec2::new(33.0, 17.0));
        for w in route.windows(2) {
            assert!(w[1].0 >= w[0].0 && w[1].1 >= w[0].1, "not monotone");
        }
        let worst = route
            .iter()
            .map(|&(i, j)| segment_distance(Vec2::new(i as f64, j as f64), a, b))
            .fold(0.0, f64::max);
        assert!(worst <= 1.0, "{worst}");
        let (same, zero) = dijkstra_path(&t, &m, (7, 7), (7, 7), Stencil::N16).unwrap();
        assert_eq!((same, zero), (vec![(7, 7)], 0.0));
        assert!(time > 0.0);
        assert!(dijkstra_times(&t, &m, (41, 0), Stencil::N8).is_err());
    }

    #[test]
    fn disk_sources_start_on_the_circle() {
        let t = flat(41);
        let m = MobilityModel::default();
        let src = disk_sources(&t, &m, Vec2::new(20.0, 20.0), 3.0);
        assert!(src.iter().any(|&(_, t)| t == 0.0));
        for &(k, time) in &src {
            let rho = t.spec().node(k % 41, k / 41).distance(Vec2::new(20.0, 20.0));
            let expect = (rho - 3.0).max(0.0) / speed0();
            assert!((time - expect).abs() < 1e-12);
        }
        let times = dijkstra_times_from(&t, &m, &src, Stencil::N16);
        let got = times[t.spec().idx(40, 20)];
        assert!((got - 17.0 / speed0()).abs() < 1e-9);
    }
}
