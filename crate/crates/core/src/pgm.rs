//! Binary PGM (`P5`, maxval 255) export for visual inspection.

use std::io::Write;

use crate::error::{Error, Result};
use crate::volume::ProjectionImage;

/// Maps `v` into `0..=255` over the window `[lo, hi]`, rounding half up.
pub fn to_gray(v: f64, lo: f64, hi: f64) -> u8 {
    let t = ((v - lo) / (hi - lo)).clamp(0.0, 1.0);
    (t * 255.0 + 0.5).floor() as u8
}

/// Writes `img` as a `P5` file, rows in ascending `z`, `x` ascending within
/// a row. Returns the number of bytes written.
pub fn write_pgm<W: Write>(img: &ProjectionImage, lo: f64, hi: f64, mut sink: W) -> Result<u64> {
    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
        return Err(Error::validation(format!(
            "pgm window requires finite lo < hi, got lo = {lo}, hi = {hi}"
        )));
    }
    let header = format!("P5\n{} {}\n255\n", img.nx(), img.nz());
    let pixels: Vec<u8> = img.data().iter().map(|&v| to_gray(v, lo, hi)).collect();
    sink.write_all(header.as_bytes())?;
    sink.write_all(&pixels)?;
    sink.flush()?;
    Ok((header.len() + pixels.len()) as u64)
}
