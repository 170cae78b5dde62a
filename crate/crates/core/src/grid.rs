//! Uniform node layout shared by elevation, level-set and arrival fields.
//!
//! Node `(i, j)` sits at `origin + (i·dx, j·dy)`; fields are stored row-major
//! with `i` varying fastest.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::Vec2;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub nx: usize,
    pub ny: usize,
    pub dx: f64,
    pub dy: f64,
    pub origin: Vec2,
}

/// Location of a point inside a cell: lower-left node plus fractional offsets.
#[derive(Clone, Copy, Debug)]
pub struct CellPos {
    pub i: usize,
    pub j: usize,
    pub fx: f64,
    pub fy: f64,
}

impl GridSpec {
    pub fn new(nx: usize, ny: usize, dx: f64, dy: f64, origin: Vec2) -> Result<Self> {
        let spec = GridSpec { nx, ny, dx, dy, origin };
        spec.validate()?;
        Ok(spec)
    }

    /// Square cells of size `h` covering `[x0, x0 + (n-1)h]` in both axes.
    pub fn square(n: usize, h: f64, origin: Vec2) -> Result<Self> {
        Self::new(n, n, h, h, origin)
    }

    pub fn validate(&self) -> Result<()> {
        if self.nx < 3 || self.ny < 3 {
            return Err(Error::invalid(format!(
                "grid must have at least 3x3 nodes, got {}x{}",
                self.nx, self.ny
            )));
        }
        if !(self.dx > 0.0 && self.dy > 0.0) || !self.dx.is_finite() || !self.dy.is_finite() {
            return Err(Error::invalid(format!(
                "cell size must be positive, got dx={} dy={}",
                self.dx, self.dy
            )));
        }
        if !self.origin.is_finite() {
            return Err(Error::invalid("grid origin must be finite"));
        }
        Ok(())
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn idx(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    #[inline]
    pub fn node(&self, i: usize, j: usize) -> Vec2 {
        Vec2::new(
            self.origin.x + i as f64 * self.dx,
            self.origin.y + j as f64 * self.dy,
        )
    }

    pub fn min_spacing(&self) -> f64 {
        self.dx.min(self.dy)
    }

    pub fn max_spacing(&self) -> f64 {
        self.dx.max(self.dy)
    }

    /// Upper-right corner of the bounding box.
    pub fn far_corner(&self) -> Vec2 {
        self.node(self.nx - 1, self.ny - 1)
    }

    pub fn contains(&self, p: Vec2) -> bool {
        let hi = self.far_corner();
        p.x >= self.origin.x && p.x <= hi.x && p.y >= self.origin.y && p.y <= hi.y
    }

    /// True when `p` keeps at least `cells` cell widths from every edge.
    pub fn has_margin(&self, p: Vec2, cells: f64) -> bool {
        let hi = self.far_corner();
        p.x - self.origin.x >= cells * self.dx
            && hi.x - p.x >= cells * self.dx
            && p.y - self.origin.y >= cells * self.dy
            && hi.y - p.y >= cells * self.dy
    }

    /// Projects `p` onto the box shrunk by `inset` on every side.
    pub fn clamp_inside(&self, p: Vec2, inset: f64) -> Vec2 {
        let hi = self.far_corner();
        Vec2::new(
            p.x.clamp(self.origin.x + inset, hi.x - inset),
            p.y.clamp(self.origin.y + inset, hi.y - inset),
        )
    }

    pub fn locate(&self, p: Vec2) -> Result<CellPos> {
        if !p.is_finite() || !self.contains(p) {
            return Err(Error::OutOfDomain { x: p.x, y: p.y });
        }
        let sx = (p.x - self.origin.x) / self.dx;
        let sy = (p.y - self.origin.y) / self.dy;
        let i = (sx.floor() as usize).min(self.nx - 2);
        let j = (sy.floor() as usize).min(self.ny - 2);
        Ok(CellPos {
            i,
            j,
            fx: sx - i as f64,
            fy: sy - j as f64,
        })
    }

    /// Nearest node to `p`, clamped into the grid.
    pub fn nearest_node(&self, p: Vec2) -> (usize, usize) {
        let sx = ((p.x - self.origin.x) / self.dx).round();
        let sy = ((p.y - self.origin.y) / self.dy).round();
        let i = sx.clamp(0.0, (self.nx - 1) as f64) as usize;
        let j = sy.clamp(0.0, (self.ny - 1) as f64) as usize;
        (i, j)
    }

    /// Bilinear interpolation of a node field; exact at nodes and for affine fields.
    pub fn bilinear(&self, values: &[f64], p: Vec2) -> Result<f64> {
        let c = self.locate(p)?;
        Ok(self.bilinear_at(values, c))
    }

    #[inline]
    pub fn bilinear_at(&self, values: &[f64], c: CellPos) -> f64 {
        let k = self.idx(c.i, c.j);
        let v00 = values[k];
        let v10 = values[k + 1];
        let v01 = values[k + self.nx];
        let v11 = values[k + self.nx + 1];
        let lower = v00 + (v10 - v00) * c.fx;
        let upper = v01 + (v11 - v01) * c.fx;
        lower + (upper - lower) * c.fy
    }

    /// Finite-difference gradient of a node field: central in the interior,
    /// first-order one-sided on the boundary.
    pub fn node_gradient(&self, values: &[f64], i: usize, j: usize) -> Vec2 {
        let k = self.idx(i, j);
        let gx = if i == 0 {
            (values[k + 1] - values[k]) / self.dx
        } else if i == self.nx - 1 {
            (values[k] - values[k - 1]) / self.dx
        } else {
            (values[k + 1] - values[k - 1]) / (2.0 * self.dx)
        };
        let gy = if j == 0 {
            (values[k + self.nx] - values[k]) / self.dy
        } else if j == self.ny - 1 {
            (values[k] - values[k - self.nx]) / self.dy
        } else {
            (values[k + self.nx] - values[k - self.nx]) / (2.0 * self.dy)
        };
        Vec2::new(gx, gy)
    }

    /// Bilinearly interpolated finite-difference gradient of a node field.
    pub fn gradient(&self, values: &[f64], p: Vec2) -> Result<Vec2> {
        let c = self.locate(p)?;
        let g00 = self.node_gradient(values, c.i, c.j);
        let g10 = self.node_gradient(values, c.i + 1, c.j);
        let g01 = self.node_gradient(values, c.i, c.j + 1);
        let g11 = self.node_gradient(values, c.i + 1, c.j + 1);
        let lower = g00.lerp(g10, c.fx);
        let upper = g01.lerp(g11, c.fx);
        Ok(lower.lerp(upper, c.fy))
    }
}
