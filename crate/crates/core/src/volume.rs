//! Scalar voxel grids and projection images.
//!
//! Axis convention: `x` runs patient left to right, `y` points into the
//! patient (the projection axis) and `z` runs feet to head. Storage is flat
//! with `x` fastest: `idx(x, y, z) = x + nx * (y + ny * z)` for volumes and
//! `idx(x, z) = x + nx * z` for images.

use crate::error::{Error, Result};

fn check_spacing(spacing: &[f64]) -> Result<()> {
    if spacing.iter().all(|s| s.is_finite() && *s > 0.0) {
        Ok(())
    } else {
        Err(Error::validation(format!(
            "spacing must be finite and strictly positive, got {spacing:?}"
        )))
    }
}

fn check_data(data: &[f64], expected: usize) -> Result<()> {
    if data.len() != expected {
        return Err(Error::validation(format!(
            "data length {} does not match grid size {expected}",
            data.len()
        )));
    }
    if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
        return Err(Error::validation(format!(
            "non-finite intensity {} at linear index {pos}",
            data[pos]
        )));
    }
    Ok(())
}

/// Dense 3D scalar grid with physical voxel spacing in millimeters.
#[derive(Debug, Clone, PartialEq)]
pub struct Volume {
    dims: [usize; 3],
    spacing: [f64; 3],
    data: Vec<f64>,
}

impl Volume {
    pub fn new(dims: [usize; 3], spacing: [f64; 3], data: Vec<f64>) -> Result<Self> {
        if dims.iter().any(|&d| d == 0) {
            return Err(Error::validation(format!("volume dims must be positive, got {dims:?}")));
        }
        let len = dims[0]
            .checked_mul(dims[1])
            .and_then(|n| n.checked_mul(dims[2]))
            .ok_or_else(|| Error::validation(format!("volume dims {dims:?} overflow")))?;
        check_spacing(&spacing)?;
        check_data(&data, len)?;
        Ok(Volume { dims, spacing, data })
    }

    pub fn filled(dims: [usize; 3], spacing: [f64; 3], value: f64) -> Result<Self> {
        let len = dims.iter().product();
        Self::new(dims, spacing, vec![value; len])
    }

    /// Builds a volume by evaluating `f(x, y, z)` in storage order.
    pub fn from_fn(
        dims: [usize; 3],
        spacing: [f64; 3],
        mut f: impl FnMut(usize, usize, usize) -> f64,
    ) -> Result<Self> {
        let mut data = Vec::with_capacity(dims.iter().product());
        for z in 0..dims[2] {
            for y in 0..dims[1] {
                for x in 0..dims[0] {
                    data.push(f(x, y, z));
                }
            }
        }
        Self::new(dims, spacing, data)
    }

    pub fn nx(&self) -> usize {
        self.dims[0]
    }

    pub fn ny(&self) -> usize {
        self.dims[1]
    }

    pub fn nz(&self) -> usize {
        self.dims[2]
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    pub fn spacing(&self) -> [f64; 3] {
        self.spacing
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn index(&self, x: usize, y: usize, z: usize) -> usize {
        debug_assert!(x < self.dims[0] && y < self.dims[1] && z < self.dims[2]);
        x + self.dims[0] * (y + self.dims[1] * z)
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize, z: usize) -> f64 {
        self.data[self.index(x, y, z)]
    }

    /// The fixed-depth image at `y`, i.e. one y-slice.
    pub fn y_slice(&self, y: usize) -> Result<ProjectionImage> {
        if y >= self.ny() {
            return Err(Error::validation(format!(
                "slice {y} out of range for ny = {}",
                self.ny()
            )));
        }
        let [nx, _, nz] = self.dims;
        let mut data = Vec::with_capacity(nx * nz);
        for z in 0..nz {
            let row = self.index(0, y, z);
            data.extend_from_slice(&self.data[row..row + nx]);
        }
        ProjectionImage::new([nx, nz], [self.spacing[0], self.spacing[2]], data)
    }
}

/// Dense 2D scalar grid over the `x`/`z` plane: an x-ray, scout or y-slice.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionImage {
    dims: [usize; 2],
    spacing: [f64; 2],
    data: Vec<f64>,
}

impl ProjectionImage {
    pub fn new(dims: [usize; 2], spacing: [f64; 2], data: Vec<f64>) -> Result<Self> {
        if dims.iter().any(|&d| d == 0) {
            return Err(Error::validation(format!("image dims must be positive, got {dims:?}")));
        }
        let len = dims[0]
            .checked_mul(dims[1])
            .ok_or_else(|| Error::validation(format!("image dims {dims:?} overflow")))?;
        check_spacing(&spacing)?;
        check_data(&data, len)?;
        Ok(ProjectionImage { dims, spacing, data })
    }

    pub fn filled(dims: [usize; 2], spacing: [f64; 2], value: f64) -> Result<Self> {
        Self::new(dims, spacing, vec![value; dims[0] * dims[1]])
    }

    pub fn from_fn(
        dims: [usize; 2],
        spacing: [f64; 2],
        mut f: impl FnMut(usize, usize) -> f64,
    ) -> Result<Self> {
        let mut data = Vec::with_capacity(dims[0] * dims[1]);
        for z in 0..dims[1] {
            for x in 0..dims[0] {
                data.push(f(x, z));
            }
        }
        Self::new(dims, spacing, data)
    }

    pub fn nx(&self) -> usize {
        self.dims[0]
    }

    pub fn nz(&self) -> usize {
        self.dims[1]
    }

    pub fn dims(&self) -> [usize; 2] {
        self.dims
    }

    pub fn spacing(&self) -> [f64; 2] {
        self.spacing
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn index(&self, x: usize, z: usize) -> usize {
        debug_assert!(x < self.dims[0] && z < self.dims[1]);
        x + self.dims[0] * z
    }

    #[inline]
    pub fn get(&self, x: usize, z: usize) -> f64 {
        self.data[self.index(x, z)]
    }

    /// Adds `offset` to every pixel.
    pub fn shifted(&self, offset: f64) -> Result<Self> {
        let data = self.data.iter().map(|v| v + offset).collect();
        Self::new(self.dims, self.spacing, data)
    }
}
