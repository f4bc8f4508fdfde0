//! Patch-grid Markov random field: nodes carry retrieved candidate stacks,
//! edges join 4-neighbours whose windows overlap.

use crate::error::{Error, Result};
use crate::index::PatchIndex;
use crate::training::{patch_stats, read_window, window_origins};
use crate::volume::ProjectionImage;

/// One retrieved exemplar as seen by a node, already in intensity units.
#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    pub pair_id: usize,
    /// Squared feature distance between the node's patch and the exemplar.
    pub unary: f64,
    /// `patch x height x patch` block, index `dx + patch * (y + height * dz)`.
    pub stack: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Node {
    pub x0: usize,
    pub z0: usize,
    pub mu: f64,
    pub sigma: f64,
    pub candidates: Vec<Candidate>,
}

/// Relative placement of two windows: `b`'s origin minus `a`'s origin.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OverlapGeometry {
    pub patch: usize,
    pub height: usize,
    pub offset_x: isize,
    pub offset_z: isize,
}

impl OverlapGeometry {
    /// Overlapping `[start, end)` range in `a`'s local coordinates along one
    /// axis, if any.
    fn range(&self, offset: isize) -> Option<(usize, usize)> {
        let p = self.patch as isize;
        let start = offset.max(0);
        let end = (p + offset).min(p);
        (start < end).then_some((start as usize, end as usize))
    }

    pub fn is_empty(&self) -> bool {
        self.range(self.offset_x).is_none() || self.range(self.offset_z).is_none()
    }
}

/// Mean squared difference of two stacks over the voxels both claim.
///
/// Panics if the footprints do not overlap; edges only exist between
/// overlapping windows.
pub fn pairwise_cost(a: &[f64], b: &[f64], geom: &OverlapGeometry) -> f64 {
    let (xs, xe) = geom.range(geom.offset_x).expect("pairwise cost needs an x overlap");
    let (zs, ze) = geom.range(geom.offset_z).expect("pairwise cost needs a z overlap");
    let (p, h) = (geom.patch, geom.height);
    debug_assert_eq!(a.len(), p * h * p);
    debug_assert_eq!(b.len(), p * h * p);
    let mut sum = 0.0;
    for dz in zs..ze {
        let bz = (dz as isize - geom.offset_z) as usize;
        for y in 0..h {
            let ra = p * (y + h * dz);
            let rb = p * (y + h * bz);
            for dx in xs..xe {
                let bx = (dx as isize - geom.offset_x) as usize;
                let d = a[ra + dx] - b[rb + bx];
                sum += d * d;
            }
        }
    }
    sum / ((xe - xs) * h * (ze - zs)) as f64
}

/// A pairwise term with its candidate-by-candidate cost table,
/// `table[ca * kb + cb]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Edge {
    pub a: usize,
    pub b: usize,
    kb: usize,
    table: Vec<f64>,
}

impl Edge {
    #[inline]
    pub fn cost(&self, ca: usize, cb: usize) -> f64 {
        self.table[ca * self.kb + cb]
    }
}

/// One assignment of a candidate ordinal to every node, and its energy.
#[derive(Debug, Clone, PartialEq)]
pub struct Labeling {
    pub labels: Vec<usize>,
    pub energy: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MrfModel {
    grid: [usize; 2],
    image_dims: [usize; 2],
    spacing: [f64; 2],
    patch: usize,
    height: usize,
    lambda: f64,
    nodes: Vec<Node>,
    edges: Vec<Edge>,
    /// Per node: `(edge index, node is the edge's `a` end)`.
    incident: Vec<Vec<(usize, bool)>>,
}

impl MrfModel {
    /// Assembles a model from explicitly built nodes laid out in raster order
    /// (`x` fastest) over a `grid[0] x grid[1]` window grid covering an image
    /// of `image_dims` pixels.
    pub fn new(
        grid: [usize; 2],
        image_dims: [usize; 2],
        spacing: [f64; 2],
        patch: usize,
        height: usize,
        nodes: Vec<Node>,
        lambda: f64,
    ) -> Result<Self> {
        if !(lambda.is_finite() && lambda >= 0.0) {
            return Err(Error::validation(format!("lambda must be finite and >= 0, got {lambda}")));
        }
        if patch == 0 || height == 0 {
            return Err(Error::validation("patch and height must be positive"));
        }
        let [gx, gz] = grid;
        if gx * gz != nodes.len() || nodes.is_empty() {
            return Err(Error::validation(format!(
                "grid {gx}x{gz} does not match {} nodes",
                nodes.len()
            )));
        }
        let stack_len = patch * height * patch;
        for (i, n) in nodes.iter().enumerate() {
            if n.candidates.is_empty() {
                return Err(Error::validation(format!("node {i} has no candidates")));
            }
            if n.x0 + patch > image_dims[0] || n.z0 + patch > image_dims[1] {
                return Err(Error::validation(format!("node {i} window leaves the image")));
            }
            let mut prev = 0.0;
            for c in &n.candidates {
                if !(c.unary.is_finite() && c.unary >= prev) {
                    return Err(Error::validation(format!(
                        "node {i} unary costs must be finite, non-negative and ascending"
                    )));
                }
                prev = c.unary;
                if c.stack.len() != stack_len || c.stack.iter().any(|v| !v.is_finite()) {
                    return Err(Error::validation(format!("node {i} holds a malformed stack")));
                }
            }
        }

        let mut edges = Vec::new();
        let mut incident = vec![Vec::new(); nodes.len()];
        for iz in 0..gz {
            for ix in 0..gx {
                let a = ix + gx * iz;
                let right = (ix + 1 < gx).then(|| a + 1);
                let down = (iz + 1 < gz).then(|| a + gx);
                for b in [right, down].into_iter().flatten() {
                    let geom = OverlapGeometry {
                        patch,
                        height,
                        offset_x: nodes[b].x0 as isize - nodes[a].x0 as isize,
                        offset_z: nodes[b].z0 as isize - nodes[a].z0 as isize,
                    };
                    if geom.is_empty() {
                        continue;
                    }
                    let kb = nodes[b].candidates.len();
                    let table = nodes[a]
                        .candidates
                        .iter()
                        .flat_map(|ca| {
                            nodes[b].candidates.iter().map(move |cb| pairwise_cost(&ca.stack, &cb.stack, &geom))
                        })
                        .collect();
                    incident[a].push((edges.len(), true));
                    incident[b].push((edges.len(), false));
                    edges.push(Edge { a, b, kb, table });
                }
            }
        }

        Ok(MrfModel { grid, image_dims, spacing, patch, height, lambda, nodes, edges, incident })
    }

    pub fn grid(&self) -> [usize; 2] {
        self.grid
    }

    pub fn image_dims(&self) -> [usize; 2] {
        self.image_dims
    }

    pub fn spacing(&self) -> [f64; 2] {
        self.spacing
    }

    pub fn patch(&self) -> usize {
        self.patch
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn with_lambda(&self, lambda: f64) -> Result<Self> {
        if !(lambda.is_finite() && lambda >= 0.0) {
            return Err(Error::validation(format!("lambda must be finite and >= 0, got {lambda}")));
        }
        Ok(MrfModel { lambda, ..self.clone() })
    }

    pub fn is_valid_labeling(&self, labels: &[usize]) -> bool {
        labels.len() == self.nodes.len()
            && labels.iter().zip(&self.nodes).all(|(&l, n)| l < n.candidates.len())
    }

    /// `sum unary + lambda * sum pairwise`, in node then edge order.
    pub fn energy(&self, labels: &[usize]) -> f64 {
        debug_assert!(self.is_valid_labeling(labels));
        let unary: f64 = self.nodes.iter().zip(labels).map(|(n, &l)| n.candidates[l].unary).sum();
        let pairwise: f64 = self.edges.iter().map(|e| e.cost(labels[e.a], labels[e.b])).sum();
        unary + self.lambda * pairwise
    }

    pub fn labeling(&self, labels: Vec<usize>) -> Labeling {
        let energy = self.energy(&labels);
        Labeling { labels, energy }
    }

    /// Unary cost of `candidate` at `node` plus the weighted pairwise terms
    /// to the neighbours accepted by `include`, read from `labels`.
    pub(crate) fn local_energy(
        &self,
        node: usize,
        candidate: usize,
        labels: &[usize],
        include: impl Fn(usize) -> bool,
    ) -> f64 {
        let mut pair = 0.0;
        for &(e, is_a) in &self.incident[node] {
            let edge = &self.edges[e];
            let other = if is_a { edge.b } else { edge.a };
            if !include(other) {
                continue;
            }
            pair += if is_a { edge.cost(candidate, labels[other]) } else { edge.cost(labels[other], candidate) };
        }
        self.nodes[node].candidates[candidate].unary + self.lambda * pair
    }
}

/// Lays out windows over `img` exactly as training extraction does, queries
/// `index` per window and denormalizes each candidate's stack with the
/// window's own statistics.
pub fn build_mrf(img: &ProjectionImage, index: &PatchIndex, lambda: f64) -> Result<MrfModel> {
    let spec = index.spec();
    let xs = window_origins(img.nx(), spec.patch, spec.stride)?;
    let zs = window_origins(img.nz(), spec.patch, spec.stride)?;
    let eps = spec.eps();
    let mut nodes = Vec::with_capacity(xs.len() * zs.len());
    for &z0 in &zs {
        for &x0 in &xs {
            let raw = read_window(img, x0, z0, spec.patch);
            let (mu, sigma) = patch_stats(&raw);
            let scale = sigma + eps;
            let feature: Vec<f64> = raw.iter().map(|r| (r - mu) / scale).collect();
            let candidates = index
                .query(&feature, spec.k)?
                .into_iter()
                .map(|n| Candidate {
                    pair_id: n.id,
                    unary: n.distance,
                    stack: index.pairs()[n.id].stack.iter().map(|&s| f64::from(s) * scale + mu).collect(),
                })
                .collect();
            nodes.push(Node { x0, z0, mu, sigma, candidates });
        }
    }
    MrfModel::new(
        [xs.len(), zs.len()],
        img.dims(),
        img.spacing(),
        spec.patch,
        spec.height,
        nodes,
        lambda,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn geom(ox: isize, oz: isize) -> OverlapGeometry {
        OverlapGeometry { patch: 3, height: 2, offset_x: ox, offset_z: oz }
    }

    #[test]
    fn pairwise_identical_and_offset() {
        let a: Vec<f64> = (0..18).map(|i| i as f64 * 0.5).collect();
        assert_eq!(pairwise_cost(&a, &a, &geom(0, 0)), 0.0);
        let b: Vec<f64> = a.iter().map(|v| v + 3.0).collect();
        assert_eq!(pairwise_cost(&a, &b, &geom(0, 0)), 9.0);
        // b is a's field seen from origin (2, 1), plus 3.
        let f = |x: usize, y: usize, z: usize| (x * x + 3 * y + 5 * z) as f64;
        let a: Vec<f64> = (0..18).map(|i| f(i % 3, (i / 3) % 2, i / 6)).collect();
        let b: Vec<f64> = (0..18).map(|i| f(i % 3 + 2, (i / 3) % 2, i / 6 + 1) + 3.0).collect();
        assert!((pairwise_cost(&a, &b, &geom(2, 1)) - 9.0).abs() < 1e-12);
        let c = pairwise_cost(&a, &b, &geom(1, -1));
        let d = pairwise_cost(&b, &a, &geom(-1, 1));
        assert_eq!(c, d);
    }

    #[test]
    fn overlap_emptiness() {
        assert!(geom(3, 0).is_empty());
        assert!(geom(0, -3).is_empty());
        assert!(!geom(2, 2).is_empty());
    }

    fn node(x0: usize, z0: usize, unaries: &[f64], stack_len: usize) -> Node {
        Node {
            x0,
            z0,
            mu: 0.0,
            sigma: 0.0,
            candidates: unaries
                .iter()
                .enumerate()
                .map(|(i, &u)| Candidate { pair_id: i, unary: u, stack: vec![i as f64; stack_len] })
                .collect(),
        }
    }

    #[test]
    fn edges_follow_overlap() {
        let one = MrfModel::new([1, 1], [3, 3], [1.0; 2], 3, 1, vec![node(0, 0, &[0.0], 9)], 1.0).unwrap();
        assert!(one.edges().is_empty());

        let two = vec![node(0, 0, &[0.0], 9), node(2, 0, &[0.0], 9)];
        let m = MrfModel::new([2, 1], [5, 3], [1.0; 2], 3, 1, two, 1.0).unwrap();
        assert_eq!(m.edges().len(), 1);

        let apart = vec![node(0, 0, &[0.0], 9), node(3, 0, &[0.0], 9)];
        let m = MrfModel::new([2, 1], [6, 3], [1.0; 2], 3, 1, apart, 1.0).unwrap();
        assert!(m.edges().is_empty());
    }

    #[test]
    fn model_validation() {
        let unsorted = vec![node(0, 0, &[1.0, 0.5], 9)];
        assert!(MrfModel::new([1, 1], [3, 3], [1.0; 2], 3, 1, unsorted, 1.0).is_err());
        let empty = vec![node(0, 0, &[], 9)];
        assert!(MrfModel::new([1, 1], [3, 3], [1.0; 2], 3, 1, empty, 1.0).is_err());
        let ok = vec![node(0, 0, &[0.0], 9)];
        assert!(MrfModel::new([1, 1], [3, 3], [1.0; 2], 3, 1, ok.clone(), -1.0).is_err());
        assert!(MrfModel::new([2, 1], [3, 3], [1.0; 2], 3, 1, ok, 1.0).is_err());
    }

    #[test]
    fn energy_sums_unary_and_weighted_pairwise() {
        let nodes = vec![node(0, 0, &[1.0, 2.0], 9), node(2, 0, &[0.5, 4.0], 9)];
        let m = MrfModel::new([2, 1], [5, 3], [1.0; 2], 3, 1, nodes, 2.0).unwrap();
        assert_eq!(m.energy(&[0, 0]), 1.5);
        // Stacks are constant at the candidate ordinal, so the overlap MSE is 1.
        assert_eq!(m.energy(&[0, 1]), 1.0 + 4.0 + 2.0);
        assert_eq!(m.labeling(vec![1, 0]).energy, 2.5 + 2.0);
    }
}
