//! Structured 2D grids of alignment tensors with an optional domain mask and
//! bilinear sampling.

use serde::{Deserialize, Serialize};

use crate::tensor::AlignmentTensor;
use crate::{Error, Result};

/// Geometry of a structured grid: node counts, spacing and origin.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub nx: usize,
    pub ny: usize,
    pub dx: f64,
    pub dy: f64,
    pub ox: f64,
    pub oy: f64,
}

impl GridSpec {
    pub fn validate(&self) -> Result<()> {
        if self.nx < 2 || self.ny < 2 {
            return Err(Error::InvalidParams("grid must be at least 2x2".into()));
        }
        if !(self.dx > 0.0) || !(self.dy > 0.0) {
            return Err(Error::InvalidParams("grid spacing must be positive".into()));
        }
        if !self.ox.is_finite() || !self.oy.is_finite() {
            return Err(Error::InvalidParams("grid origin must be finite".into()));
        }
        Ok(())
    }

    /// Square grid over [0,1] x [0,1].
    pub fn unit_square(n: usize) -> Self {
        GridSpec {
            nx: n,
            ny: n,
            dx: 1.0 / (n as f64 - 1.0),
            dy: 1.0 / (n as f64 - 1.0),
            ox: 0.0,
            oy: 0.0,
        }
    }

    #[inline]
    pub fn node_pos(&self, i: usize, j: usize) -> [f64; 2] {
        [self.ox + i as f64 * self.dx, self.oy + j as f64 * self.dy]
    }

    /// Bounding box [xmin, ymin, xmax, ymax] of the grid nodes.
    pub fn bbox(&self) -> [f64; 4] {
        [
            self.ox,
            self.oy,
            self.ox + (self.nx - 1) as f64 * self.dx,
            self.oy + (self.ny - 1) as f64 * self.dy,
        ]
    }
}

/// A 2D tensor field on a structured grid. Row-major storage, x fastest.
/// Immutable after construction; safe to share across readers.
#[derive(Clone, Debug)]
pub struct TensorField {
    pub grid: GridSpec,
    tensors: Vec<AlignmentTensor>,
    mask: Vec<bool>,
}

impl TensorField {
    pub fn new(grid: GridSpec, tensors: Vec<AlignmentTensor>, mask: Vec<bool>) -> Result<Self> {
        grid.validate()?;
        let n = grid.nx * grid.ny;
        if tensors.len() != n {
            return Err(Error::InvalidParams(format!(
                "tensor array length {} does not match grid {}x{}",
                tensors.len(),
                grid.nx,
                grid.ny
            )));
        }
        if mask.len() != n {
            return Err(Error::InvalidParams(format!(
                "mask length {} does not match grid {}x{}",
                mask.len(),
                grid.nx,
                grid.ny
            )));
        }
        Ok(Self {
            grid,
            tensors,
            mask,
        })
    }

    /// Constant field over the full grid.
    pub fn uniform(grid: GridSpec, q: AlignmentTensor) -> Result<Self> {
        let n = grid.nx * grid.ny;
        Self::new(grid, vec![q; n], vec![true; n])
    }

    /// Build per-node with an arbitrary tensor function and mask function.
    pub fn from_fn(
        grid: GridSpec,
        mask: impl Fn([f64; 2]) -> bool,
        f: impl Fn([f64; 2]) -> AlignmentTensor,
    ) -> Result<Self> {
        grid.validate()?;
        let mut tensors = Vec::with_capacity(grid.nx * grid.ny);
        let mut m = Vec::with_capacity(grid.nx * grid.ny);
        for j in 0..grid.ny {
            for i in 0..grid.nx {
                let p = grid.node_pos(i, j);
                let inside = mask(p);
                m.push(inside);
                tensors.push(if inside { f(p) } else { AlignmentTensor::ZERO });
            }
        }
        Self::new(grid, tensors, m)
    }

    #[inline]
    pub fn idx(&self, i: usize, j: usize) -> usize {
        j * self.grid.nx + i
    }

    #[inline]
    pub fn tensor_at(&self, i: usize, j: usize) -> &AlignmentTensor {
        &self.tensors[self.idx(i, j)]
    }

    #[inline]
    pub fn mask_at(&self, i: usize, j: usize) -> bool {
        self.mask[self.idx(i, j)]
    }

    pub fn tensors(&self) -> &[AlignmentTensor] {
        &self.tensors
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    pub fn has_full_mask(&self) -> bool {
        self.mask.iter().all(|&m| m)
    }

    pub fn tensors_mut(&mut self) -> &mut [AlignmentTensor] {
        &mut self.tensors
    }

    /// Locate the cell containing p and the fractional position within it.
    /// Returns None when p is outside the grid bounding box.
    fn locate(&self, p: [f64; 2]) -> Option<(usize, usize, f64, f64)> {
        let g = &self.grid;
        let fx = (p[0] - g.ox) / g.dx;
        let fy = (p[1] - g.oy) / g.dy;
        let eps = 1e-9;
        if fx < -eps || fy < -eps || fx > (g.nx - 1) as f64 + eps || fy > (g.ny - 1) as f64 + eps {
            return None;
        }
        let fx = fx.clamp(0.0, (g.nx - 1) as f64);
        let fy = fy.clamp(0.0, (g.ny - 1) as f64);
        let i0 = (fx.floor() as usize).min(g.nx - 2);
        let j0 = (fy.floor() as usize).min(g.ny - 2);
        Some((i0, j0, fx - i0 as f64, fy - j0 as f64))
    }

    /// Bilinear interpolation of the mask indicator (1 inside, 0 outside).
    /// The sampleable region is where this is >= 1/2; its 0.5 level set is the
    /// effective domain boundary.
    pub fn mask_fraction(&self, p: [f64; 2]) -> f64 {
        match self.locate(p) {
            None => 0.0,
            Some((i0, j0, tx, ty)) => {
                let m = |i: usize, j: usize| -> f64 {
                    if self.mask[self.idx(i, j)] {
                        1.0
                    } else {
                        0.0
                    }
                };
                (1.0 - tx) * (1.0 - ty) * m(i0, j0)
                    + tx * (1.0 - ty) * m(i0 + 1, j0)
                    + (1.0 - tx) * ty * m(i0, j0 + 1)
                    + tx * ty * m(i0 + 1, j0 + 1)
            }
        }
    }

    #[inline]
    pub fn inside(&self, p: [f64; 2]) -> bool {
        self.mask_fraction(p) >= 0.5
    }

    /// Bilinear sample of the five tensor components. Near the mask boundary
    /// the weights are renormalized over the in-mask corners so boundary
    /// tensors are not contaminated by the zero padding outside the domain.
    /// Returns None outside the domain (the integrator treats this as
    /// termination, not failure).
    pub fn sample(&self, p: [f64; 2]) -> Option<AlignmentTensor> {
        let (i0, j0, tx, ty) = self.locate(p)?;
        let corners = [
            (i0, j0, (1.0 - tx) * (1.0 - ty)),
            (i0 + 1, j0, tx * (1.0 - ty)),
            (i0, j0 + 1, (1.0 - tx) * ty),
            (i0 + 1, j0 + 1, tx * ty),
        ];
        let mut wsum = 0.0;
        let mut acc = AlignmentTensor::ZERO;
        let mut mask_val = 0.0;
        for &(i, j, w) in &corners {
            let k = self.idx(i, j);
            if self.mask[k] {
                mask_val += w;
                wsum += w;
                acc = acc.add(&self.tensors[k].scale(w));
            }
        }
        if mask_val < 0.5 || wsum <= 0.0 {
            return None;
        }
        Some(acc.scale(1.0 / wsum))
    }
}

/// Node mask for a disk.
pub fn circle_mask(center: [f64; 2], radius: f64) -> impl Fn([f64; 2]) -> bool {
    move |p| {
        let dx = p[0] - center[0];
        let dy = p[1] - center[1];
        dx * dx + dy * dy <= radius * radius
    }
}
