//! Parallel-ray forward model along `y`, synthetic y-downsampling, scout
//! simulation and the replicate (minimum-norm) baseline.

use crate::error::{Error, Result};
use crate::volume::{ProjectionImage, Volume};

/// Adds `(src - base)` into `acc`, elementwise.
fn accumulate_deviation(acc: &mut [f64], src: &[f64], base: &[f64]) {
    for ((a, &s), &b) in acc.iter_mut().zip(src).zip(base) {
        *a += s - b;
    }
}

/// Mean along `y`: `out(x, z) = (1 / ny) * sum_y v(x, y, z)`.
///
/// Each column's mean is taken as its first sample plus the mean deviation
/// from it, which is exact for columns of identical values.
pub fn project_y(v: &Volume) -> ProjectionImage {
    let [nx, ny, nz] = v.dims();
    let mut data = Vec::with_capacity(nx * nz);
    let src = v.data();
    let mut acc = vec![0.0; nx];
    for z in 0..nz {
        let b = v.index(0, 0, z);
        let base = &src[b..b + nx];
        acc.iter_mut().for_each(|a| *a = 0.0);
        for y in 1..ny {
            let start = v.index(0, y, z);
            accumulate_deviation(&mut acc, &src[start..start + nx], base);
        }
        data.extend(base.iter().zip(&acc).map(|(b, a)| b + a / ny as f64));
    }
    let sp = v.spacing();
    ProjectionImage::new([nx, nz], [sp[0], sp[2]], data)
        .expect("projection of a valid volume is valid")
}

/// Block-mean along `y` by `factor`; the result has `ny / factor` slices.
pub fn downsample_y(v: &Volume, factor: usize) -> Result<Volume> {
    let [nx, ny, nz] = v.dims();
    if factor == 0 || ny % factor != 0 {
        return Err(Error::validation(format!(
            "downsample factor {factor} does not divide ny = {ny}"
        )));
    }
    let out_ny = ny / factor;
    let src = v.data();
    let mut data = vec![0.0; nx * out_ny * nz];
    let mut acc = vec![0.0; nx];
    for z in 0..nz {
        for yo in 0..out_ny {
            let b = v.index(0, yo * factor, z);
            let base = &src[b..b + nx];
            acc.iter_mut().for_each(|a| *a = 0.0);
            for y in yo * factor + 1..(yo + 1) * factor {
                let start = v.index(0, y, z);
                accumulate_deviation(&mut acc, &src[start..start + nx], base);
            }
            let dst = nx * (yo + out_ny * z);
            for (o, (b, a)) in data[dst..dst + nx].iter_mut().zip(base.iter().zip(&acc)) {
                *o = b + a / factor as f64;
            }
        }
    }
    let mut sp = v.spacing();
    sp[1] *= factor as f64;
    Volume::new([nx, out_ny, nz], sp, data)
}

/// In-plane block-mean of a projection by `factor` in both `x` and `z`.
pub fn simulate_scout(img: &ProjectionImage, factor: usize) -> Result<ProjectionImage> {
    let [nx, nz] = img.dims();
    if factor == 0 || nx % factor != 0 || nz % factor != 0 {
        return Err(Error::validation(format!(
            "scout factor {factor} does not divide image dims {nx}x{nz}"
        )));
    }
    let (ox, oz) = (nx / factor, nz / factor);
    let norm = (factor * factor) as f64;
    let out = ProjectionImage::from_fn([ox, oz], [1.0, 1.0], |x, z| {
        let mut sum = 0.0;
        for zz in z * factor..(z + 1) * factor {
            for xx in x * factor..(x + 1) * factor {
                sum += img.get(xx, zz);
            }
        }
        sum / norm
    })?;
    let sp = img.spacing();
    ProjectionImage::new(
        out.dims(),
        [sp[0] * factor as f64, sp[1] * factor as f64],
        out.data().to_vec(),
    )
}

/// Constant-along-`y` volume of height `h` whose projection is `img`.
///
/// This is the minimum-norm solution of `mean_y(out) = img`. The y spacing
/// has no physical meaning here and is set to the x spacing.
pub fn replicate_baseline(img: &ProjectionImage, h: usize) -> Result<Volume> {
    if h == 0 {
        return Err(Error::validation("replicate height must be at least 1"));
    }
    let [nx, nz] = img.dims();
    let sp = img.spacing();
    Volume::from_fn([nx, h, nz], [sp[0], sp[0], sp[1]], |x, _, z| img.get(x, z))
}

/// Largest absolute pixel difference between `project_y(v)` and `img`.
pub fn projection_residual(v: &Volume, img: &ProjectionImage) -> Result<f64> {
    if v.nx() != img.nx() || v.nz() != img.nz() {
        return Err(Error::validation(format!(
            "volume {:?} does not cover image {:?}",
            v.dims(),
            img.dims()
        )));
    }
    let p = project_y(v);
    Ok(p.data()
        .iter()
        .zip(img.data())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max))
}
