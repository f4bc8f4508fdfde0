//! Binary containers for volumes (`XRV1`) and images (`XRI1`).
//!
//! Layout, all little-endian: 4 magic bytes, the grid dims as `u32`, the
//! spacings as IEEE-754 `f32`, then every sample as `f32` in storage order.
//! In-memory samples are `f64`; writing rounds them to the nearest `f32`.

use std::io::{self, Read, Write};

use crate::error::{Error, Result};
use crate::volume::{ProjectionImage, Volume};

pub const VOLUME_MAGIC: [u8; 4] = *b"XRV1";
pub const IMAGE_MAGIC: [u8; 4] = *b"XRI1";

/// Little-endian primitive writer that counts the bytes it emits.
pub(crate) struct LeWriter<W> {
    inner: W,
    written: u64,
}

impl<W: Write> LeWriter<W> {
    pub(crate) fn new(inner: W) -> Self {
        LeWriter { inner, written: 0 }
    }

    pub(crate) fn bytes(&mut self, b: &[u8]) -> Result<()> {
        self.inner.write_all(b)?;
        self.written += b.len() as u64;
        Ok(())
    }

    pub(crate) fn u32(&mut self, v: u32) -> Result<()> {
        self.bytes(&v.to_le_bytes())
    }

    pub(crate) fn f32(&mut self, v: f32) -> Result<()> {
        self.bytes(&v.to_le_bytes())
    }

    /// Writes a dimension, rejecting values that do not fit in 32 bits.
    pub(crate) fn dim(&mut self, v: usize) -> Result<()> {
        let v = u32::try_from(v)
            .map_err(|_| Error::validation(format!("dimension {v} exceeds u32 range")))?;
        self.u32(v)
    }

    /// Writes an `f64` sample as `f32`, rejecting values that overflow.
    pub(crate) fn sample(&mut self, v: f64) -> Result<()> {
        let s = v as f32;
        if !s.is_finite() {
            return Err(Error::validation(format!("value {v} is not representable as f32")));
        }
        self.f32(s)
    }

    pub(crate) fn finish(mut self) -> Result<u64> {
        self.inner.flush()?;
        Ok(self.written)
    }
}

/// Little-endian primitive reader mapping early EOF to [`Error::Length`].
pub(crate) struct LeReader<R> {
    inner: R,
}

impl<R: Read> LeReader<R> {
    pub(crate) fn new(inner: R) -> Self {
        LeReader { inner }
    }

    fn fill(&mut self, buf: &mut [u8], what: &str) -> Result<()> {
        self.inner.read_exact(buf).map_err(|e| match e.kind() {
            io::ErrorKind::UnexpectedEof => Error::Length(format!("stream truncated while reading {what}")),
            _ => Error::Io(e),
        })
    }

    pub(crate) fn magic(&mut self, expected: [u8; 4]) -> Result<()> {
        let mut m = [0u8; 4];
        self.inner.read_exact(&mut m).map_err(|e| match e.kind() {
            io::ErrorKind::UnexpectedEof => Error::Format("missing magic bytes".into()),
            _ => Error::Io(e),
        })?;
        if m != expected {
            return Err(Error::Format(format!(
                "bad magic {:?}, expected {:?}",
                String::from_utf8_lossy(&m),
                String::from_utf8_lossy(&expected)
            )));
        }
        Ok(())
    }

    pub(crate) fn u32(&mut self, what: &str) -> Result<u32> {
        let mut b = [0u8; 4];
        self.fill(&mut b, what)?;
        Ok(u32::from_le_bytes(b))
    }

    pub(crate) fn f32(&mut self, what: &str) -> Result<f32> {
        let mut b = [0u8; 4];
        self.fill(&mut b, what)?;
        Ok(f32::from_le_bytes(b))
    }

    /// Reads `n` `f32` samples into a vector without trusting `n` for a
    /// single up-front allocation.
    pub(crate) fn f32_vec(&mut self, n: usize, what: &str) -> Result<Vec<f32>> {
        const CHUNK: usize = 1 << 16;
        let mut out = Vec::with_capacity(n.min(CHUNK));
        let mut buf = vec![0u8; 4 * n.min(CHUNK)];
        let mut left = n;
        while left > 0 {
            let take = left.min(CHUNK);
            let bytes = &mut buf[..4 * take];
            self.fill(bytes, what)?;
            out.extend(
                bytes
                    .chunks_exact(4)
                    .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]])),
            );
            left -= take;
        }
        Ok(out)
    }

    pub(crate) fn dims<const N: usize>(&mut self) -> Result<[usize; N]> {
        let mut dims = [0usize; N];
        for d in dims.iter_mut() {
            *d = self.u32("dimensions")? as usize;
        }
        if dims.iter().any(|&d| d == 0) {
            return Err(Error::validation(format!("zero dimension in header {dims:?}")));
        }
        Ok(dims)
    }

    pub(crate) fn spacing<const N: usize>(&mut self) -> Result<[f64; N]> {
        let mut sp = [0f64; N];
        for s in sp.iter_mut() {
            *s = self.f32("spacing")? as f64;
        }
        Ok(sp)
    }
}

pub fn write_volume<W: Write>(v: &Volume, sink: W) -> Result<u64> {
    // Validate sample range before emitting anything.
    if v.data().iter().any(|&x| !(x as f32).is_finite()) {
        return Err(Error::validation("volume holds values outside f32 range"));
    }
    let mut w = LeWriter::new(sink);
    w.bytes(&VOLUME_MAGIC)?;
    for d in v.dims() {
        w.dim(d)?;
    }
    for s in v.spacing() {
        w.sample(s)?;
    }
    for &x in v.data() {
        w.sample(x)?;
    }
    w.finish()
}

pub fn read_volume<R: Read>(source: R) -> Result<Volume> {
    let mut r = LeReader::new(source);
    r.magic(VOLUME_MAGIC)?;
    let dims: [usize; 3] = r.dims()?;
    let spacing: [f64; 3] = r.spacing()?;
    let n = dims
        .iter()
        .try_fold(1usize, |acc, &d| acc.checked_mul(d))
        .ok_or_else(|| Error::validation(format!("volume dims {dims:?} overflow")))?;
    let data = r.f32_vec(n, "volume samples")?;
    Volume::new(dims, spacing, data.into_iter().map(f64::from).collect())
}

pub fn write_image<W: Write>(img: &ProjectionImage, sink: W) -> Result<u64> {
    if img.data().iter().any(|&x| !(x as f32).is_finite()) {
        return Err(Error::validation("image holds values outside f32 range"));
    }
    let mut w = LeWriter::new(sink);
    w.bytes(&IMAGE_MAGIC)?;
    for d in img.dims() {
        w.dim(d)?;
    }
    for s in img.spacing() {
        w.sample(s)?;
    }
    for &x in img.data() {
        w.sample(x)?;
    }
    w.finish()
}

pub fn read_image<R: Read>(source: R) -> Result<ProjectionImage> {
    let mut r = LeReader::new(source);
    r.magic(IMAGE_MAGIC)?;
    let dims: [usize; 2] = r.dims()?;
    let spacing: [f64; 2] = r.spacing()?;
    let n = dims[0]
        .checked_mul(dims[1])
        .ok_or_else(|| Error::validation(format!("image dims {dims:?} overflow")))?;
    let data = r.f32_vec(n, "image samples")?;
    ProjectionImage::new(dims, spacing, data.into_iter().map(f64::from).collect())
}
