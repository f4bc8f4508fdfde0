//! The y-resolution study: fidelity of each reconstruction method against
//! synthetic ground truth at several stack heights.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::io::Write;
use std::time::Instant;

use crate::error::{Error, Result};
use crate::eval::metrics::{psnr, rmse};
use crate::index::PatchIndex;
use crate::inference::{enforce_projection, voxelize, VoxelizeConfig};
use crate::projection::{downsample_y, project_y, projection_residual, replicate_baseline};
use crate::training::{extract_pairs, PatchSpec};
use crate::volume::Volume;

pub const CSV_HEADER: &str = "h,method,rmse,psnr,max_proj_residual,runtime_s";

#[derive(Debug, Clone, PartialEq)]
pub struct NamedVolume {
    pub id: String,
    pub volume: Volume,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    Replicate,
    ReplicateEnforced,
    /// Unary-only retrieval (`lambda = 0`).
    NearestNeighbor,
    NearestNeighborEnforced,
    /// Full patch MRF.
    Ebsr,
    EbsrEnforced,
}

impl Method {
    pub const ALL: [Method; 6] = [
        Method::Replicate,
        Method::ReplicateEnforced,
        Method::NearestNeighbor,
        Method::NearestNeighborEnforced,
        Method::Ebsr,
        Method::EbsrEnforced,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::Replicate => "replicate",
            Method::ReplicateEnforced => "replicate+enforce",
            Method::NearestNeighbor => "nn",
            Method::NearestNeighborEnforced => "nn+enforce",
            Method::Ebsr => "ebsr",
            Method::EbsrEnforced => "ebsr+enforce",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StudyConfig {
    pub heights: Vec<usize>,
    /// Patch geometry; `height` is replaced by each studied height.
    pub spec: PatchSpec,
    pub lambda: f64,
    pub max_sweeps: usize,
    /// Intensity peak for PSNR.
    pub peak: f64,
    /// Record wall-clock runtimes. When off, runtimes are reported as zero so
    /// the report is reproducible byte for byte.
    pub record_runtime: bool,
}

impl Default for StudyConfig {
    fn default() -> Self {
        StudyConfig {
            heights: vec![2, 4, 8],
            spec: PatchSpec::default(),
            lambda: 1.0,
            max_sweeps: 20,
            peak: 1000.0,
            record_runtime: false,
        }
    }
}

/// One method evaluated on one test volume at one height.
#[derive(Debug, Clone, PartialEq)]
pub struct StudyCell {
    pub height: usize,
    pub method: Method,
    pub volume_id: String,
    pub rmse: f64,
    pub psnr: f64,
    pub proj_residual: f64,
    /// Projection residual of the same method before enforcement.
    pub proj_residual_unenforced: f64,
    pub runtime_s: f64,
}

/// Aggregate over test volumes for one `(height, method)`.
#[derive(Debug, Clone, PartialEq)]
pub struct StudyRow {
    pub height: usize,
    pub method: Method,
    /// Mean RMSE over test volumes.
    pub rmse: f64,
    /// Mean PSNR over test volumes.
    pub psnr: f64,
    pub max_proj_residual: f64,
    /// Total runtime over test volumes.
    pub runtime_s: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StudyReport {
    pub rows: Vec<StudyRow>,
    pub cells: Vec<StudyCell>,
}

impl StudyReport {
    pub fn row(&self, height: usize, method: Method) -> Option<&StudyRow> {
        self.rows.iter().find(|r| r.height == height && r.method == method)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{}",
                r.height,
                r.method.name(),
                format_sig6(r.rmse),
                format_sig6(r.psnr),
                format_sig6(r.max_proj_residual),
                format_sig6(r.runtime_s)
            );
        }
        out
    }

    pub fn write_csv<W: Write>(&self, mut sink: W) -> Result<u64> {
        let csv = self.to_csv();
        sink.write_all(csv.as_bytes())?;
        sink.flush()?;
        Ok(csv.len() as u64)
    }
}

/// Formats like C's `%.6g`: six significant digits, trailing zeros removed,
/// exponent form outside `1e-4 <= |v| < 1e6`.
pub fn format_sig6(v: f64) -> String {
    if v.is_nan() {
        return "nan".into();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if v == 0.0 {
        return "0".into();
    }
    // Round to six significant digits first, then pick the notation from the
    // rounded exponent.
    let sci = format!("{v:.5e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    let trim = |s: &str| -> String {
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s.to_string()
        }
    };
    if (-4..6).contains(&exp) {
        let decimals = (5 - exp) as usize;
        trim(&format!("{v:.decimals$}"))
    } else {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{sign}{:02}", trim(mantissa), exp.abs())
    }
}

struct Outcome {
    volume: Volume,
    residual_unenforced: f64,
    seconds: f64,
}

fn run_methods(
    test: &Volume,
    height: usize,
    index: &PatchIndex,
    config: &StudyConfig,
) -> Result<Vec<(Method, Outcome)>> {
    let img = project_y(test);
    let mut out = Vec::with_capacity(Method::ALL.len());

    let t = Instant::now();
    let replicate = replicate_baseline(&img, height)?;
    let replicate_s = t.elapsed().as_secs_f64();
    let replicate_res = projection_residual(&replicate, &img)?;

    let mut learned = Vec::new();
    for lambda in [0.0, config.lambda] {
        let t = Instant::now();
        let vc = VoxelizeConfig { lambda, modes: 1, max_sweeps: config.max_sweeps, enforce: false };
        let mut result = voxelize(&img, index, &vc)?;
        let mode = result.modes.swap_remove(0);
        learned.push((mode.volume, mode.residual_before, t.elapsed().as_secs_f64()));
    }

    let mut push_pair = |plain: Method, enforced: Method, volume: Volume, residual: f64, seconds: f64| -> Result<()> {
        let t = Instant::now();
        let fixed = enforce_projection(&volume, &img)?;
        let fix_s = t.elapsed().as_secs_f64();
        out.push((plain, Outcome { volume, residual_unenforced: residual, seconds }));
        out.push((enforced, Outcome { volume: fixed, residual_unenforced: residual, seconds: seconds + fix_s }));
        Ok(())
    };
    push_pair(Method::Replicate, Method::ReplicateEnforced, replicate, replicate_res, replicate_s)?;
    let mut learned = learned.into_iter();
    let (v, r, s) = learned.next().expect("unary-only run");
    push_pair(Method::NearestNeighbor, Method::NearestNeighborEnforced, v, r, s)?;
    let (v, r, s) = learned.next().expect("full run");
    push_pair(Method::Ebsr, Method::EbsrEnforced, v, r, s)?;
    Ok(out)
}

/// Evaluates every method on every test volume at every height.
///
/// Ground truth is the test volume y-downsampled to `h` slices; the input is
/// its projection. At each height the index is rebuilt from all training
/// volumes. Rows are ordered by height (as given) then [`Method::ALL`].
pub fn resolution_study(train: &[NamedVolume], test: &[NamedVolume], config: &StudyConfig) -> Result<StudyReport> {
    if train.is_empty() || test.is_empty() {
        return Err(Error::validation("study needs at least one training and one test volume"));
    }
    if config.heights.is_empty() {
        return Err(Error::validation("study needs at least one height"));
    }
    let train_ids: HashSet<&str> = train.iter().map(|v| v.id.as_str()).collect();
    if train_ids.len() != train.len() {
        return Err(Error::validation("duplicate training volume ids"));
    }
    if let Some(shared) = test.iter().find(|t| train_ids.contains(t.id.as_str())) {
        return Err(Error::validation(format!("volume id {:?} is in both train and test sets", shared.id)));
    }
    for &h in &config.heights {
        if let Some(bad) = train.iter().chain(test).find(|v| h == 0 || v.volume.ny() % h != 0) {
            return Err(Error::validation(format!(
                "height {h} does not divide ny = {} of volume {:?}",
                bad.volume.ny(),
                bad.id
            )));
        }
    }

    let mut cells = Vec::new();
    for &h in &config.heights {
        let spec = PatchSpec { height: h, ..config.spec };
        let mut pairs = Vec::new();
        for (i, v) in train.iter().enumerate() {
            pairs.extend(extract_pairs(&v.volume, &spec, i as u32)?);
        }
        let index = PatchIndex::build(spec, pairs)?;
        for t in test {
            let truth = downsample_y(&t.volume, t.volume.ny() / h)?;
            let img = project_y(&t.volume);
            for (method, o) in run_methods(&t.volume, h, &index, config)? {
                cells.push(StudyCell {
                    height: h,
                    method,
                    volume_id: t.id.clone(),
                    rmse: rmse(&o.volume, &truth)?,
                    psnr: psnr(&o.volume, &truth, config.peak)?,
                    proj_residual: projection_residual(&o.volume, &img)?,
                    proj_residual_unenforced: o.residual_unenforced,
                    runtime_s: if config.record_runtime { o.seconds } else { 0.0 },
                });
            }
        }
    }

    let mut rows = Vec::new();
    for &h in &config.heights {
        for method in Method::ALL {
            let group: Vec<&StudyCell> = cells.iter().filter(|c| c.height == h && c.method == method).collect();
            let n = group.len() as f64;
            rows.push(StudyRow {
                height: h,
                method,
                rmse: group.iter().map(|c| c.rmse).sum::<f64>() / n,
                psnr: group.iter().map(|c| c.psnr).sum::<f64>() / n,
                max_proj_residual: group.iter().map(|c| c.proj_residual).fold(0.0, f64::max),
                runtime_s: group.iter().map(|c| c.runtime_s).sum(),
            });
        }
    }
    Ok(StudyReport { rows, cells })
}
