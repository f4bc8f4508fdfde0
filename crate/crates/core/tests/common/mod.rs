//! Independent oracles and fixtures shared by the integration tests.
#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use xrv::eval::{gen_phantom, NamedVolume};
use xrv::inference::{Candidate, MrfModel, Node};
use xrv::training::PatchPair;
use xrv::Volume;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Brute-force k-NN: full squared distance to every pair, stable sort.
pub fn linear_scan(pairs: &[PatchPair], query: &[f64], k: usize) -> Vec<(usize, f64)> {
    let mut all: Vec<(usize, f64)> = pairs
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let d = query
                .iter()
                .zip(&p.feature)
                .map(|(q, &f)| (q - f as f64) * (q - f as f64))
                .sum::<f64>();
            (i, d)
        })
        .collect();
    all.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
    all.truncate(k);
    all
}

/// Window origins by direct enumeration of every admissible start.
pub fn enumerate_windows(n: usize, patch: usize, stride: usize) -> Vec<usize> {
    let mut v: Vec<usize> = (0..n).filter(|o| o % stride == 0 && o + patch <= n).collect();
    if !v.contains(&(n - patch)) {
        v.push(n - patch);
    }
    v
}

/// Energy recomputed from first principles: unaries plus lambda times the
/// overlap MSE of every 4-neighbour pair whose windows intersect.
pub fn energy_from_scratch(model: &MrfModel, labels: &[usize]) -> f64 {
    let [gx, gz] = model.grid();
    let p = model.patch();
    let h = model.height();
    let nodes = model.nodes();
    let mut unary = 0.0;
    for (n, &l) in nodes.iter().zip(labels) {
        unary += n.candidates[l].unary;
    }
    let mut pair = 0.0;
    for iz in 0..gz {
        for ix in 0..gx {
            let a = ix + gx * iz;
            let mut nbs = Vec::new();
            if ix + 1 < gx {
                nbs.push(a + 1);
            }
            if iz + 1 < gz {
                nbs.push(a + gx);
            }
            for b in nbs {
                let (na, nb) = (&nodes[a], &nodes[b]);
                let (sa, sb) = (&na.candidates[labels[a]].stack, &nb.candidates[labels[b]].stack);
                let mut sum = 0.0;
                let mut count = 0usize;
                for z in 0..model.image_dims()[1] {
                    for x in 0..model.image_dims()[0] {
                        let in_a = x >= na.x0 && x < na.x0 + p && z >= na.z0 && z < na.z0 + p;
                        let in_b = x >= nb.x0 && x < nb.x0 + p && z >= nb.z0 && z < nb.z0 + p;
                        if !(in_a && in_b) {
                            continue;
                        }
                        for y in 0..h {
                            let va = sa[(x - na.x0) + p * (y + h * (z - na.z0))];
                            let vb = sb[(x - nb.x0) + p * (y + h * (z - nb.z0))];
                            sum += (va - vb) * (va - vb);
                            count += 1;
                        }
                    }
                }
                if count > 0 {
                    pair += sum / count as f64;
                }
            }
        }
    }
    unary + model.lambda() * pair
}

/// Every labeling of `model`, in mixed-radix order.
pub fn all_labelings(model: &MrfModel) -> Vec<Vec<usize>> {
    let ks: Vec<usize> = model.nodes().iter().map(|n| n.candidates.len()).collect();
    let total: usize = ks.iter().product();
    (0..total)
        .map(|mut code| {
            ks.iter()
                .map(|&k| {
                    let l = code % k;
                    code /= k;
                    l
                })
                .collect()
        })
        .collect()
}

/// `(min energy, argmin labels)` by enumeration, first minimizer wins.
pub fn exhaustive_minimum(model: &MrfModel) -> (f64, Vec<usize>) {
    let mut best = (f64::INFINITY, Vec::new());
    for labels in all_labelings(model) {
        let e = energy_from_scratch(model, &labels);
        if e < best.0 {
            best = (e, labels);
        }
    }
    best
}

/// True if no single-node relabeling lowers the energy beyond `rel_tol`.
pub fn is_single_move_local_minimum(model: &MrfModel, labels: &[usize], rel_tol: f64) -> bool {
    let e = energy_from_scratch(model, labels);
    let tol = rel_tol * e.abs().max(1.0);
    for (i, n) in model.nodes().iter().enumerate() {
        for c in 0..n.candidates.len() {
            if c == labels[i] {
                continue;
            }
            let mut moved = labels.to_vec();
            moved[i] = c;
            if energy_from_scratch(model, &moved) < e - tol {
                return false;
            }
        }
    }
    true
}

/// Random model on a `gx x gz` grid of 2x2 windows at stride 1 (each pair of
/// neighbours overlaps), up to `k_max` candidates per node.
pub fn random_model(seed: u64, gx: usize, gz: usize, k_max: usize, lambda: f64) -> MrfModel {
    let mut r = rng(seed);
    let (p, h) = (2, 2);
    let mut nodes = Vec::new();
    for z0 in 0..gz {
        for x0 in 0..gx {
            let k = r.gen_range(1..=k_max);
            let mut unaries: Vec<f64> = (0..k).map(|_| r.gen_range(0.0..4.0)).collect();
            unaries.sort_by(f64::total_cmp);
            let candidates = unaries
                .into_iter()
                .enumerate()
                .map(|(i, unary)| Candidate {
                    pair_id: i,
                    unary,
                    stack: (0..p * h * p).map(|_| r.gen_range(-2.0..2.0)).collect(),
                })
                .collect();
            nodes.push(Node { x0, z0, mu: 0.0, sigma: 1.0, candidates });
        }
    }
    MrfModel::new([gx, gz], [gx + 1, gz + 1], [1.0; 2], p, h, nodes, lambda).unwrap()
}

pub const TRAIN_SEEDS: [u64; 8] = [1, 2, 3, 4, 5, 6, 7, 8];
pub const TEST_SEEDS: [u64; 3] = [101, 102, 103];
pub const SUITE_DIMS: [usize; 3] = [64, 64, 64];
pub const SUITE_ELLIPSOIDS: usize = 6;

pub fn suite(seeds: &[u64]) -> Vec<NamedVolume> {
    seeds
        .iter()
        .map(|&s| NamedVolume {
            id: format!("phantom_{s}"),
            volume: gen_phantom(s, SUITE_DIMS, SUITE_ELLIPSOIDS).unwrap(),
        })
        .collect()
}

/// A phantom with seeded per-voxel texture so every patch is distinct.
pub fn textured_phantom(seed: u64) -> Volume {
    let base = gen_phantom(seed, SUITE_DIMS, SUITE_ELLIPSOIDS).unwrap();
    let mut r = rng(seed ^ 0xabcdef);
    let data = base.data().iter().map(|v| v + r.gen_range(-50.0..50.0)).collect();
    Volume::new(base.dims(), base.spacing(), data).unwrap()
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}
