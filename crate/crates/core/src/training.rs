//! Exemplar extraction: pairs of contrast-normalized projection patches and
//! the y-resolved voxel stacks behind them.

use crate::error::{Error, Result};
use crate::projection::{downsample_y, project_y};
use crate::volume::{ProjectionImage, Volume};

/// Patch geometry and retrieval parameters shared by training and inference.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PatchSpec {
    /// Patch edge length in pixels, along both `x` and `z`.
    pub patch: usize,
    /// Output voxels along `y` per projection pixel.
    pub height: usize,
    /// Step between neighbouring windows, `1 <= stride <= patch`.
    pub stride: usize,
    /// Candidates retrieved per node.
    pub k: usize,
    /// Floor added to the patch standard deviation before dividing.
    pub epsilon: f32,
}

impl Default for PatchSpec {
    fn default() -> Self {
        PatchSpec { patch: 5, height: 4, stride: 4, k: 8, epsilon: 1e-6 }
    }
}

impl PatchSpec {
    pub fn validate(&self) -> Result<()> {
        if self.patch == 0 {
            return Err(Error::validation("patch size must be at least 1"));
        }
        if self.stride == 0 || self.stride > self.patch {
            return Err(Error::validation(format!(
                "stride {} must lie in 1..={}",
                self.stride, self.patch
            )));
        }
        if self.height == 0 {
            return Err(Error::validation("stack height must be at least 1"));
        }
        if self.k == 0 {
            return Err(Error::validation("k must be at least 1"));
        }
        if !(self.epsilon.is_finite() && self.epsilon > 0.0) {
            return Err(Error::validation(format!("epsilon must be positive, got {}", self.epsilon)));
        }
        Ok(())
    }

    pub fn overlap(&self) -> usize {
        self.patch - self.stride
    }

    pub fn feature_len(&self) -> usize {
        self.patch * self.patch
    }

    pub fn stack_len(&self) -> usize {
        self.patch * self.height * self.patch
    }

    pub(crate) fn eps(&self) -> f64 {
        f64::from(self.epsilon)
    }
}

/// Where an exemplar came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SourceTag {
    pub volume: u32,
    pub x0: u32,
    pub z0: u32,
}

/// One training exemplar.
///
/// `feature` holds the `patch x patch` projection window (index
/// `dx + patch * dz`) normalized as `(raw - mu) / (sigma + epsilon)`. `stack`
/// holds the `patch x height x patch` block (index `dx + patch * (y + height *
/// dz)`) of the y-downsampled training volume under the same normalization.
#[derive(Debug, Clone, PartialEq)]
pub struct PatchPair {
    pub feature: Vec<f32>,
    pub mu: f32,
    pub sigma: f32,
    pub stack: Vec<f32>,
    pub source: SourceTag,
}

/// Window origins along an axis of length `n`: multiples of `stride`, plus a
/// final window flush with the far edge when the regular grid falls short.
pub fn window_origins(n: usize, patch: usize, stride: usize) -> Result<Vec<usize>> {
    if patch == 0 || stride == 0 {
        return Err(Error::validation("patch and stride must be positive"));
    }
    if patch > n {
        return Err(Error::validation(format!("patch {patch} larger than image extent {n}")));
    }
    let mut origins: Vec<usize> = (0..=n - patch).step_by(stride).collect();
    if origins.last() != Some(&(n - patch)) {
        origins.push(n - patch);
    }
    Ok(origins)
}

/// Population mean and standard deviation.
pub fn patch_stats(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mu = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mu) * (v - mu)).sum::<f64>() / n;
    (mu, var.sqrt())
}

/// Reads the `patch x patch` window at `(x0, z0)`.
pub(crate) fn read_window(img: &ProjectionImage, x0: usize, z0: usize, patch: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(patch * patch);
    for z in z0..z0 + patch {
        let row = img.index(x0, z);
        out.extend_from_slice(&img.data()[row..row + patch]);
    }
    out
}

fn read_stack(target: &Volume, x0: usize, z0: usize, patch: usize) -> Vec<f64> {
    let h = target.ny();
    let mut out = Vec::with_capacity(patch * h * patch);
    for dz in 0..patch {
        for y in 0..h {
            let row = target.index(x0, y, z0 + dz);
            out.extend_from_slice(&target.data()[row..row + patch]);
        }
    }
    out
}

/// Cuts one training volume into exemplar pairs.
pub fn extract_pairs(v: &Volume, spec: &PatchSpec, volume_id: u32) -> Result<Vec<PatchPair>> {
    spec.validate()?;
    if v.ny() % spec.height != 0 {
        return Err(Error::validation(format!(
            "stack height {} does not divide ny = {}",
            spec.height,
            v.ny()
        )));
    }
    let img = project_y(v);
    let target = downsample_y(v, v.ny() / spec.height)?;
    let xs = window_origins(img.nx(), spec.patch, spec.stride)?;
    let zs = window_origins(img.nz(), spec.patch, spec.stride)?;
    let eps = spec.eps();

    let mut pairs = Vec::with_capacity(xs.len() * zs.len());
    for &z0 in &zs {
        for &x0 in &xs {
            let raw = read_window(&img, x0, z0, spec.patch);
            let (mu, sigma) = patch_stats(&raw);
            let scale = sigma + eps;
            let feature = raw.iter().map(|r| ((r - mu) / scale) as f32).collect();
            let stack = read_stack(&target, x0, z0, spec.patch)
                .iter()
                .map(|s| ((s - mu) / scale) as f32)
                .collect();
            pairs.push(PatchPair {
                feature,
                mu: mu as f32,
                sigma: sigma as f32,
                stack,
                source: SourceTag { volume: volume_id, x0: x0 as u32, z0: z0 as u32 },
            });
        }
    }
    Ok(pairs)
}
