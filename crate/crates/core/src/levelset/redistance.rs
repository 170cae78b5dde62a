//! Re-distancing: replace φ by the signed distance to its zero contour.
//!
//! Nodes next to a sign change get a subcell distance `|φ|/|g|`, where each
//! component of `g` is the slope of the linear interpolant along a crossing
//! edge (or the central difference when no edge in that axis crosses). The
//! remaining nodes are filled by fast sweeping on `|∇d| = 1` with the
//! first-order upwind update and four alternating sweep orders. Signs are
//! kept.

use crate::error::{Error, Result};
use crate::grid::GridSpec;

const MAX_ROUNDS: usize = 8;

pub fn redistance(spec: &GridSpec, phi: &mut [f64]) -> Result<()> {
    let (nx, ny) = (spec.nx, spec.ny);
    assert_eq!(phi.len(), spec.len());
    let inside = |v: f64| v <= 0.0;

    let mut dist = vec![f64::INFINITY; phi.len()];
    let mut fixed = vec![false; phi.len()];
    let mut any = false;
    for j in 0..ny {
        for i in 0..nx {
            let k = spec.idx(i, j);
            let c = phi[k];
            let mut slope_x: Option<f64> = None;
            let mut slope_y: Option<f64> = None;
            let probe = |nb: usize, h: f64, slot: &mut Option<f64>| {
                if inside(phi[nb]) != inside(c) {
                    let s = (phi[nb] - c).abs() / h;
                    *slot = Some(slot.map_or(s, |prev: f64| prev.max(s)));
                }
            };
            if i > 0 {
                probe(k - 1, spec.dx, &mut slope_x);
            }
            if i + 1 < nx {
                probe(k + 1, spec.dx, &mut slope_x);
            }
            if j > 0 {
                probe(k - nx, spec.dy, &mut slope_y);
            }
            if j + 1 < ny {
                probe(k + nx, spec.dy, &mut slope_y);
            }
            if slope_x.is_none() && slope_y.is_none() {
                continue;
            }
            any = true;
            let g = spec.node_gradient(phi, i, j);
            let gx = slope_x.unwrap_or(g.x.abs());
            let gy = slope_y.unwrap_or(g.y.abs());
            let norm = gx.hypot(gy);
            dist[k] = if norm > 0.0 { c.abs() / norm } else { 0.0 };
            fixed[k] = true;
        }
    }
    if !any {
        return Err(Error::NoInterface);
    }

    fast_sweep(spec, &mut dist, &fixed);

    for (v, d) in phi.iter_mut().zip(&dist) {
        *v = if inside(*v) { -d } else { *d };
    }
    Ok(())
}

/// Nodes with at least one axis neighbour on the other side of the zero
/// contour (`φ ≤ 0` counts as inside).
pub(crate) fn interface_mask(spec: &GridSpec, phi: &[f64]) -> Vec<bool> {
    let (nx, ny) = (spec.nx, spec.ny);
    let mut mask = vec![false; phi.len()];
    for j in 0..ny {
        for i in 0..nx {
            let k = spec.idx(i, j);
            if i + 1 < nx && (phi[k] <= 0.0) != (phi[k + 1] <= 0.0) {
                mask[k] = true;
                mask[k + 1] = true;
            }
            if j + 1 < ny && (phi[k] <= 0.0) != (phi[k + nx] <= 0.0) {
                mask[k] = true;
                mask[k + nx] = true;
            }
        }
    }
    mask
}

fn fast_sweep(spec: &GridSpec, d: &mut [f64], fixed: &[bool]) {
    let (nx, ny) = (spec.nx, spec.ny);
    let (hx, hy) = (spec.dx, spec.dy);
    let (ax, ay) = (1.0 / (hx * hx), 1.0 / (hy * hy));
    let update = |d: &mut [f64], i: usize, j: usize| -> f64 {
        let k = j * nx + i;
        if fixed[k] {
            return 0.0;
        }
        let a = match (i > 0, i + 1 < nx) {
            (true, true) => d[k - 1].min(d[k + 1]),
            (true, false) => d[k - 1],
            (false, true) => d[k + 1],
            _ => f64::INFINITY,
        };
        let b = match (j > 0, j + 1 < ny) {
            (true, true) => d[k - nx].min(d[k + nx]),
            (true, false) => d[k - nx],
            (false, true) => d[k + nx],
            _ => f64::INFINITY,
        };
        let one_sided = (a + hx).min(b + hy);
        let cand = if a.is_finite() && b.is_finite() {
            // (u-a)²/hx² + (u-b)²/hy² = 1, larger root
            let qa = ax + ay;
            let qb = -2.0 * (a * ax + b * ay);
            let qc = a * a * ax + b * b * ay - 1.0;
            let disc = qb * qb - 4.0 * qa * qc;
            if disc >= 0.0 {
                let u = (-qb + disc.sqrt()) / (2.0 * qa);
                if u >= a.max(b) {
                    u.min(one_sided)
                } else {
                    one_sided
                }
            } else {
                one_sided
            }
        } else {
            one_sided
        };
        if cand < d[k] {
            let change = d[k] - cand;
            d[k] = cand;
            if change.is_finite() {
                change
            } else {
                f64::INFINITY
            }
        } else {
            0.0
        }
    };

    for _ in 0..MAX_ROUNDS {
        let mut change: f64 = 0.0;
        for order in 0..4 {
            let rev_i = order & 1 == 1;
            let rev_j = order & 2 == 2;
            for jj in 0..ny {
                let j = if rev_j { ny - 1 - jj } else { jj };
                for ii in 0..nx {
                    let i = if rev_i { nx - 1 - ii } else { ii };
                    change = change.max(update(d, i, j));
                }
            }
        }
        if change < 1e-12 * hx.min(hy) {
            break;
        }
    }
}
