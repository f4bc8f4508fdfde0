//! Patch-grid inference: candidate retrieval, MRF solving, mode enumeration,
//! stitching and projection enforcement.

mod modes;
mod mrf;
mod solve;
mod stitch;

pub use modes::enumerate_modes;
pub use mrf::{build_mrf, pairwise_cost, Candidate, Edge, Labeling, MrfModel, Node, OverlapGeometry};
pub use solve::{solve_greedy, solve_icm, solve_icm_traced};
pub use stitch::{enforce_projection, stitch};

use crate::error::Result;
use crate::index::{PatchIndex};
use crate::projection::projection_residual;
use crate::training::PatchSpec;
use crate::volume::{ProjectionImage, Volume};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VoxelizeConfig {
    /// Weight of the overlap-agreement term.
    pub lambda: f64,
    /// Maximum number of modes returned.
    pub modes: usize,
    pub max_sweeps: usize,
    /// Apply the per-column projection correction to every mode.
    pub enforce: bool,
}

impl Default for VoxelizeConfig {
    fn default() -> Self {
        VoxelizeConfig { lambda: 1.0, modes: 1, max_sweeps: 20, enforce: true }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mode {
    pub volume: Volume,
    pub energy: f64,
    pub labeling: Labeling,
    /// Max |project_y(volume) - input| before enforcement.
    pub residual_before: f64,
    /// The same after enforcement; equals `residual_before` when disabled.
    pub residual_after: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VoxelizationResult {
    pub modes: Vec<Mode>,
    pub config: VoxelizeConfig,
    pub spec: PatchSpec,
    pub grid: [usize; 2],
}

impl VoxelizationResult {
    /// Plain-text diagnostics, one `key = value` block per mode.
    pub fn diagnostics(&self) -> String {
        let s = &self.spec;
        let c = &self.config;
        let mut out = format!(
            "patch = {}\nheight = {}\nstride = {}\nk = {}\nepsilon = {:e}\nlambda = {}\nmodes = {}\nmax_sweeps = {}\nenforce = {}\ngrid = {} {}\n",
            s.patch, s.height, s.stride, s.k, s.epsilon, c.lambda, c.modes, c.max_sweeps, c.enforce, self.grid[0], self.grid[1]
        );
        for (j, m) in self.modes.iter().enumerate() {
            out.push_str(&format!(
                "\n[mode_{j}]\nenergy = {:e}\nresidual_before = {:e}\nresidual_after = {:e}\n",
                m.energy, m.residual_before, m.residual_after
            ));
        }
        out
    }
}

/// End-to-end voxelization of one projection against a training index.
pub fn voxelize(img: &ProjectionImage, index: &PatchIndex, config: &VoxelizeConfig) -> Result<VoxelizationResult> {
    let model = build_mrf(img, index, config.lambda)?;
    let labelings = enumerate_modes(&model, config.modes, config.max_sweeps)?;
    let mut modes = Vec::with_capacity(labelings.len());
    for labeling in labelings {
        let raw = stitch(&model, &labeling)?;
        let residual_before = projection_residual(&raw, img)?;
        let (volume, residual_after) = if config.enforce {
            let fixed = enforce_projection(&raw, img)?;
            let r = projection_residual(&fixed, img)?;
            (fixed, r)
        } else {
            (raw, residual_before)
        };
        modes.push(Mode { volume, energy: labeling.energy, labeling, residual_before, residual_after });
    }
    Ok(VoxelizationResult { modes, config: *config, spec: *index.spec(), grid: model.grid() })
}
