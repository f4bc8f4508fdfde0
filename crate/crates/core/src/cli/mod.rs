//! The `xrv` command line.
//!
//! Every numeric parameter can come from a flag or from a `--config` file;
//! precedence is built-in default < config file < flag. Data goes only to the
//! named output files, logs go to standard error. Outputs are computed in
//! full before any file is created, so a failed run leaves nothing behind.
//!
//! Exit codes: 0 success, 1 runtime failure (I/O, container format), 2 usage
//! or validation error.

mod config;

pub use config::Config;

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::error::{Error, Result};
use crate::eval::{gen_phantom, resolution_study, NamedVolume, StudyConfig};
use crate::index::{read_index, write_index, PatchIndex};
use crate::inference::{build_mrf, enumerate_modes, voxelize, VoxelizeConfig};
use crate::io::{read_image, read_volume, write_image, write_volume, IMAGE_MAGIC, VOLUME_MAGIC};
use crate::pgm::write_pgm;
use crate::projection::{downsample_y, project_y, simulate_scout};
use crate::training::{extract_pairs, PatchSpec};
use crate::volume::{ProjectionImage, Volume};

#[derive(Debug, Parser)]
#[command(name = "xrv", version, about = "X-ray voxelization by example-based super-resolution")]
struct Cli {
    /// Plain-text `key = value` file supplying parameter defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a seeded ellipsoid phantom volume.
    Phantom {
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, num_args = 3, value_names = ["NX", "NY", "NZ"])]
        dims: Option<Vec<usize>>,
        #[arg(long)]
        ellipsoids: Option<usize>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Mean projection of a volume along y.
    Project {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Block-mean a volume along y.
    Downsample {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        factor: Option<usize>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Downsample a projection in-plane to emulate a scout image.
    Scout {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        factor: Option<usize>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Extract exemplar pairs from training volumes into a database.
    BuildDb {
        #[arg(long, num_args = 1.., required = true)]
        inputs: Vec<PathBuf>,
        #[command(flatten)]
        patch: PatchArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Voxelize a projection, writing `mode_<j>.xrv` and `diagnostics.txt`.
    Voxelize {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        db: PathBuf,
        #[command(flatten)]
        solve: SolveArgs,
        /// Apply projection enforcement (`true` or `false`).
        #[arg(long)]
        enforce: Option<bool>,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// List the ranked labelings (modes) for a projection.
    Modes {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        db: PathBuf,
        #[command(flatten)]
        solve: SolveArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the y-resolution study and write a CSV report.
    Evaluate {
        #[arg(long, num_args = 1.., required = true)]
        train: Vec<PathBuf>,
        #[arg(long, num_args = 1.., required = true)]
        test: Vec<PathBuf>,
        #[arg(long, num_args = 1..)]
        heights: Option<Vec<usize>>,
        #[command(flatten)]
        patch: PatchArgs,
        #[arg(long)]
        lambda: Option<f64>,
        #[arg(long)]
        max_sweeps: Option<usize>,
        #[arg(long)]
        peak: Option<f64>,
        /// Report measured runtimes instead of zeros (`true` or `false`).
        #[arg(long)]
        record_runtime: Option<bool>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Export an image, or the y-slices of a volume, as binary PGM.
    ExportPgm {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, allow_hyphen_values = true)]
        lo: Option<f64>,
        #[arg(long, allow_hyphen_values = true)]
        hi: Option<f64>,
        /// For volumes: export only this y-slice. Without it every slice is
        /// written as `<stem>_y<j>.pgm` next to `--out`.
        #[arg(long)]
        slice: Option<usize>,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Debug, Args)]
struct PatchArgs {
    #[arg(long)]
    patch: Option<usize>,
    #[arg(long)]
    height: Option<usize>,
    #[arg(long)]
    stride: Option<usize>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    epsilon: Option<f32>,
}

#[derive(Debug, Args)]
struct SolveArgs {
    #[arg(long)]
    lambda: Option<f64>,
    /// Number of modes to return.
    #[arg(long)]
    modes: Option<usize>,
    #[arg(long)]
    max_sweeps: Option<usize>,
}

impl PatchArgs {
    fn resolve(&self, cfg: &Config) -> Result<PatchSpec> {
        let d = PatchSpec::default();
        let spec = PatchSpec {
            patch: cfg.resolve(self.patch, "patch", d.patch)?,
            height: cfg.resolve(self.height, "height", d.height)?,
            stride: cfg.resolve(self.stride, "stride", d.stride)?,
            k: cfg.resolve(self.k, "k", d.k)?,
            epsilon: cfg.resolve(self.epsilon, "epsilon", d.epsilon)?,
        };
        spec.validate()?;
        Ok(spec)
    }
}

impl SolveArgs {
    fn resolve(&self, cfg: &Config, enforce: Option<bool>) -> Result<VoxelizeConfig> {
        let d = VoxelizeConfig::default();
        Ok(VoxelizeConfig {
            lambda: cfg.resolve(self.lambda, "lambda", d.lambda)?,
            modes: cfg.resolve(self.modes, "modes", d.modes)?,
            max_sweeps: cfg.resolve(self.max_sweeps, "max_sweeps", d.max_sweeps)?,
            enforce: cfg.resolve(enforce, "enforce", d.enforce)?,
        })
    }
}

/// A file to be written once every output has been computed.
struct Output {
    path: PathBuf,
    bytes: Vec<u8>,
}

fn encode(path: &Path, f: impl FnOnce(&mut Vec<u8>) -> Result<u64>) -> Result<Output> {
    let mut bytes = Vec::new();
    f(&mut bytes)?;
    Ok(Output { path: path.to_path_buf(), bytes })
}

fn load_volume(path: &Path) -> Result<Volume> {
    read_volume(fs::File::open(path).map(std::io::BufReader::new)?)
}

fn load_image(path: &Path) -> Result<ProjectionImage> {
    read_image(fs::File::open(path).map(std::io::BufReader::new)?)
}

fn load_index(path: &Path) -> Result<PatchIndex> {
    read_index(fs::File::open(path).map(std::io::BufReader::new)?)
}

fn execute(cli: Cli) -> Result<Vec<Output>> {
    let cfg = match &cli.config {
        Some(path) => Config::parse(&fs::read_to_string(path)?)?,
        None => Config::default(),
    };

    match cli.command {
        Command::Phantom { seed, dims, ellipsoids, out } => {
            let seed = cfg.resolve(seed, "seed", 0)?;
            let dims = cfg.resolve_list(dims, "dims", vec![64, 64, 64])?;
            let dims: [usize; 3] = dims
                .try_into()
                .map_err(|_| Error::validation("dims needs exactly three values"))?;
            let n = cfg.resolve(ellipsoids, "ellipsoids", 6)?;
            let v = gen_phantom(seed, dims, n)?;
            log::info(&format!("phantom seed {seed}, dims {dims:?}, {n} ellipsoids"));
            Ok(vec![encode(&out, |b| write_volume(&v, b))?])
        }
        Command::Project { input, out } => {
            let img = project_y(&load_volume(&input)?);
            Ok(vec![encode(&out, |b| write_image(&img, b))?])
        }
        Command::Downsample { input, factor, out } => {
            let factor = cfg.resolve(factor, "factor", 1)?;
            let v = downsample_y(&load_volume(&input)?, factor)?;
            Ok(vec![encode(&out, |b| write_volume(&v, b))?])
        }
        Command::Scout { input, factor, out } => {
            let factor = cfg.resolve(factor, "factor", 1)?;
            let img = simulate_scout(&load_image(&input)?, factor)?;
            Ok(vec![encode(&out, |b| write_image(&img, b))?])
        }
        Command::BuildDb { inputs, patch, out } => {
            let spec = patch.resolve(&cfg)?;
            let mut pairs = Vec::new();
            for (i, path) in inputs.iter().enumerate() {
                let v = load_volume(path)?;
                pairs.extend(extract_pairs(&v, &spec, i as u32)?);
            }
            let index = PatchIndex::build(spec, pairs)?;
            log::info(&format!("database of {} pairs from {} volumes", index.len(), inputs.len()));
            Ok(vec![encode(&out, |b| write_index(&index, b))?])
        }
        Command::Voxelize { input, db, solve, enforce, out_dir } => {
            let vc = solve.resolve(&cfg, enforce)?;
            let img = load_image(&input)?;
            let index = load_index(&db)?;
            let result = voxelize(&img, &index, &vc)?;
            let mut outputs = Vec::with_capacity(result.modes.len() + 1);
            for (j, m) in result.modes.iter().enumerate() {
                outputs.push(encode(&out_dir.join(format!("mode_{j}.xrv")), |b| write_volume(&m.volume, b))?);
            }
            outputs.push(Output {
                path: out_dir.join("diagnostics.txt"),
                bytes: result.diagnostics().into_bytes(),
            });
            log::info(&format!("{} mode(s) written to {}", result.modes.len(), out_dir.display()));
            Ok(outputs)
        }
        Command::Modes { input, db, solve, out } => {
            let vc = solve.resolve(&cfg, None)?;
            let img = load_image(&input)?;
            let index = load_index(&db)?;
            let model = build_mrf(&img, &index, vc.lambda)?;
            let modes = enumerate_modes(&model, vc.modes, vc.max_sweeps)?;
            let mut text = String::from("mode energy labels\n");
            for (j, m) in modes.iter().enumerate() {
                let labels: Vec<String> = m.labels.iter().map(|l| l.to_string()).collect();
                text.push_str(&format!("{j} {:e} {}\n", m.energy, labels.join(",")));
            }
            Ok(vec![Output { path: out, bytes: text.into_bytes() }])
        }
        Command::Evaluate { train, test, heights, patch, lambda, max_sweeps, peak, record_runtime, out } => {
            let d = StudyConfig::default();
            let config = StudyConfig {
                heights: cfg.resolve_list(heights, "heights", d.heights)?,
                spec: patch.resolve(&cfg)?,
                lambda: cfg.resolve(lambda, "lambda", d.lambda)?,
                max_sweeps: cfg.resolve(max_sweeps, "max_sweeps", d.max_sweeps)?,
                peak: cfg.resolve(peak, "peak", d.peak)?,
                record_runtime: cfg.resolve(record_runtime, "record_runtime", d.record_runtime)?,
            };
            let named = |paths: &[PathBuf]| -> Result<Vec<NamedVolume>> {
                paths
                    .iter()
                    .map(|p| {
                        let id = fs::canonicalize(p).unwrap_or_else(|_| p.clone()).display().to_string();
                        Ok(NamedVolume { id, volume: load_volume(p)? })
                    })
                    .collect()
            };
            let report = resolution_study(&named(&train)?, &named(&test)?, &config)?;
            Ok(vec![Output { path: out, bytes: report.to_csv().into_bytes() }])
        }
        Command::ExportPgm { input, lo, hi, slice, out } => {
            let lo = cfg.resolve(lo, "lo", 0.0)?;
            let hi = cfg.resolve(hi, "hi", 1000.0)?;
            let bytes = fs::read(&input)?;
            let magic: [u8; 4] = bytes.get(..4).and_then(|m| m.try_into().ok()).unwrap_or([0; 4]);
            let images: Vec<(PathBuf, ProjectionImage)> = if magic == IMAGE_MAGIC {
                vec![(out.clone(), read_image(bytes.as_slice())?)]
            } else if magic == VOLUME_MAGIC {
                let v = read_volume(bytes.as_slice())?;
                match slice {
                    Some(y) => vec![(out.clone(), v.y_slice(y)?)],
                    None => {
                        let stem = out.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
                        (0..v.ny())
                            .map(|y| Ok((out.with_file_name(format!("{stem}_y{y}.pgm")), v.y_slice(y)?)))
                            .collect::<Result<_>>()?
                    }
                }
            } else {
                return Err(Error::Format(format!("{} is neither an XRV1 nor an XRI1 file", input.display())));
            };
            images.iter().map(|(path, img)| encode(path, |b| write_pgm(img, lo, hi, b))).collect()
        }
    }
}

fn commit(outputs: &[Output]) -> Result<()> {
    for o in outputs {
        if let Some(dir) = o.path.parent().filter(|d| !d.as_os_str().is_empty()) {
            fs::create_dir_all(dir)?;
        }
        fs::write(&o.path, &o.bytes)?;
    }
    Ok(())
}

mod log {
    pub(super) fn info(msg: &str) {
        eprintln!("xrv: {msg}");
    }
}

/// Parses `args` (including the program name) and runs the subcommand.
/// Returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli).and_then(|outputs| commit(&outputs)) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("xrv: {e}");
            if e.is_validation() {
                2
            } else {
                1
            }
        }
    }
}
