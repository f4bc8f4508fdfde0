use crate::error::{Error, Result};
use crate::volume::Volume;

fn check_dims(a: &Volume, b: &Volume) -> Result<()> {
    if a.dims() != b.dims() {
        return Err(Error::validation(format!(
            "volume dims differ: {:?} vs {:?}",
            a.dims(),
            b.dims()
        )));
    }
    Ok(())
}

/// Root mean squared voxel difference.
pub fn rmse(a: &Volume, b: &Volume) -> Result<f64> {
    check_dims(a, b)?;
    let sq: f64 = a.data().iter().zip(b.data()).map(|(x, y)| (x - y) * (x - y)).sum();
    Ok((sq / a.data().len() as f64).sqrt())
}

/// `20 log10(peak / rmse)`, or `+inf` for identical volumes.
pub fn psnr(a: &Volume, b: &Volume, peak: f64) -> Result<f64> {
    if !(peak.is_finite() && peak > 0.0) {
        return Err(Error::validation(format!("peak must be positive, got {peak}")));
    }
    let e = rmse(a, b)?;
    if e == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(20.0 * (peak / e).log10())
}
