//! Exact k-nearest-neighbour retrieval over exemplar features, and the
//! `XRD1` database container.

use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::io::{LeReader, LeWriter};
use crate::training::{PatchPair, PatchSpec, SourceTag};

pub const DATABASE_MAGIC: [u8; 4] = *b"XRD1";

/// A retrieved exemplar: its insertion ordinal and squared feature distance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Neighbor {
    pub id: usize,
    pub distance: f64,
}

/// Immutable exemplar database with exact squared-Euclidean k-NN queries.
#[derive(Debug, Clone, PartialEq)]
pub struct PatchIndex {
    spec: PatchSpec,
    pairs: Vec<PatchPair>,
}

impl PatchIndex {
    pub fn build(spec: PatchSpec, pairs: Vec<PatchPair>) -> Result<Self> {
        spec.validate()?;
        if pairs.is_empty() {
            return Err(Error::validation("cannot build an index from zero pairs"));
        }
        for (i, p) in pairs.iter().enumerate() {
            if p.feature.len() != spec.feature_len() {
                return Err(Error::validation(format!(
                    "pair {i} has feature length {}, expected {}",
                    p.feature.len(),
                    spec.feature_len()
                )));
            }
            if p.stack.len() != spec.stack_len() {
                return Err(Error::validation(format!(
                    "pair {i} has stack length {}, expected {}",
                    p.stack.len(),
                    spec.stack_len()
                )));
            }
            let finite = p.feature.iter().chain(&p.stack).chain([&p.mu, &p.sigma]).all(|v| v.is_finite());
            if !finite {
                return Err(Error::validation(format!("pair {i} holds non-finite values")));
            }
        }
        Ok(PatchIndex { spec, pairs })
    }

    pub fn spec(&self) -> &PatchSpec {
        &self.spec
    }

    pub fn pairs(&self) -> &[PatchPair] {
        &self.pairs
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.spec.feature_len()
    }

    /// The `k` nearest exemplars sorted by `(distance, id)`. Returns every
    /// exemplar when `k` exceeds the index size.
    ///
    /// Linear scan in insertion order with partial-distance rejection: a
    /// candidate is dropped as soon as its running sum reaches the current
    /// k-th best, which cannot change the result because later ordinals lose
    /// ties. Accepted distances are always summed in full, in feature order.
    pub fn query(&self, feature: &[f64], k: usize) -> Result<Vec<Neighbor>> {
        if feature.len() != self.dim() {
            return Err(Error::validation(format!(
                "query has dimension {}, index expects {}",
                feature.len(),
                self.dim()
            )));
        }
        if k == 0 {
            return Err(Error::validation("k must be at least 1"));
        }
        let k = k.min(self.pairs.len());
        let mut best: Vec<Neighbor> = Vec::with_capacity(k + 1);
        for (id, pair) in self.pairs.iter().enumerate() {
            let bound = if best.len() == k { best[k - 1].distance } else { f64::INFINITY };
            let mut d = 0.0;
            let mut rejected = false;
            for (q, &f) in feature.iter().zip(&pair.feature) {
                let diff = q - f64::from(f);
                d += diff * diff;
                if d >= bound {
                    rejected = true;
                    break;
                }
            }
            if rejected {
                continue;
            }
            let pos = best.partition_point(|n| n.distance <= d);
            best.insert(pos, Neighbor { id, distance: d });
            best.truncate(k);
        }
        Ok(best)
    }
}

/// Writes the spec followed by every pair. Returns the byte count.
pub fn write_index<W: Write>(index: &PatchIndex, sink: W) -> Result<u64> {
    let spec = index.spec();
    let count = u32::try_from(index.len())
        .map_err(|_| Error::validation("too many pairs for an XRD1 container"))?;
    let mut w = LeWriter::new(sink);
    w.bytes(&DATABASE_MAGIC)?;
    w.dim(spec.patch)?;
    w.dim(spec.height)?;
    w.dim(spec.stride)?;
    w.dim(spec.k)?;
    w.f32(spec.epsilon)?;
    w.u32(count)?;
    for p in index.pairs() {
        w.u32(p.source.volume)?;
        w.u32(p.source.x0)?;
        w.u32(p.source.z0)?;
        w.f32(p.mu)?;
        w.f32(p.sigma)?;
        for &f in &p.feature {
            w.f32(f)?;
        }
        for &s in &p.stack {
            w.f32(s)?;
        }
    }
    w.finish()
}

pub fn read_index<R: Read>(source: R) -> Result<PatchIndex> {
    let mut r = LeReader::new(source);
    r.magic(DATABASE_MAGIC)?;
    let spec = PatchSpec {
        patch: r.u32("patch size")? as usize,
        height: r.u32("stack height")? as usize,
        stride: r.u32("stride")? as usize,
        k: r.u32("k")? as usize,
        epsilon: r.f32("epsilon")?,
    };
    spec.validate()?;
    let count = r.u32("pair count")? as usize;
    let mut pairs = Vec::with_capacity(count.min(1 << 16));
    for _ in 0..count {
        let source = SourceTag {
            volume: r.u32("source volume")?,
            x0: r.u32("source x0")?,
            z0: r.u32("source z0")?,
        };
        let mu = r.f32("mu")?;
        let sigma = r.f32("sigma")?;
        let feature = r.f32_vec(spec.feature_len(), "feature")?;
        let stack = r.f32_vec(spec.stack_len(), "stack")?;
        pairs.push(PatchPair { feature, mu, sigma, stack, source });
    }
    PatchIndex::build(spec, pairs)
}
