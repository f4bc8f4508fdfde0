use crate::error::{Error, Result};
use crate::inference::mrf::{Labeling, MrfModel};
use crate::volume::{ProjectionImage, Volume};

/// Averages the selected stacks into an `nx x height x nz` volume. The y
/// spacing is a placeholder equal to the x spacing.
pub fn stitch(model: &MrfModel, labeling: &Labeling) -> Result<Volume> {
    if !model.is_valid_labeling(&labeling.labels) {
        return Err(Error::validation("labeling does not fit the model"));
    }
    let [nx, nz] = model.image_dims();
    let (p, h) = (model.patch(), model.height());
    let mut sum = vec![0.0; nx * h * nz];
    let mut count = vec![0u32; nx * nz];
    for (node, &label) in model.nodes().iter().zip(&labeling.labels) {
        let stack = &node.candidates[label].stack;
        for dz in 0..p {
            let z = node.z0 + dz;
            for dx in 0..p {
                count[node.x0 + dx + nx * z] += 1;
            }
            for y in 0..h {
                let src = p * (y + h * dz);
                let dst = node.x0 + nx * (y + h * z);
                for dx in 0..p {
                    sum[dst + dx] += stack[src + dx];
                }
            }
        }
    }
    for z in 0..nz {
        for y in 0..h {
            for x in 0..nx {
                let c = count[x + nx * z];
                debug_assert!(c > 0, "pixel ({x}, {z}) not covered by any window");
                sum[x + nx * (y + h * z)] /= f64::from(c);
            }
        }
    }
    let [sx, sz] = model.spacing();
    Volume::new([nx, h, nz], [sx, sx, sz], sum)
}

/// Adds to every column the constant that makes its y-mean equal `img`.
pub fn enforce_projection(v: &Volume, img: &ProjectionImage) -> Result<Volume> {
    if v.nx() != img.nx() || v.nz() != img.nz() {
        return Err(Error::validation(format!(
            "volume {:?} does not match image {:?}",
            v.dims(),
            img.dims()
        )));
    }
    let [nx, ny, nz] = v.dims();
    let mut data = v.data().to_vec();
    for z in 0..nz {
        for x in 0..nx {
            let base = data[v.index(x, 0, z)];
            let dev: f64 = (1..ny).map(|y| data[v.index(x, y, z)] - base).sum();
            let mean = base + dev / ny as f64;
            let fix = img.get(x, z) - mean;
            for y in 0..ny {
                data[v.index(x, y, z)] += fix;
            }
        }
    }
    Volume::new(v.dims(), v.spacing(), data)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::inference::mrf::{Candidate, Node};
    use crate::projection::{project_y, projection_residual, replicate_baseline};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn node(x0: usize, z0: usize, stack: Vec<f64>) -> Node {
        Node { x0, z0, mu: 0.0, sigma: 0.0, candidates: vec![Candidate { pair_id: 0, unary: 0.0, stack }] }
    }

    #[test]
    fn single_window_reproduces_its_stack() {
        let stack: Vec<f64> = (0..18).map(|i| i as f64).collect();
        let m = MrfModel::new([1, 1], [3, 3], [0.5, 2.0], 3, 2, vec![node(0, 0, stack.clone())], 1.0).unwrap();
        let v = stitch(&m, &m.labeling(vec![0])).unwrap();
        assert_eq!(v.dims(), [3, 2, 3]);
        assert_eq!(v.data(), stack.as_slice());
        assert_eq!(v.spacing(), [0.5, 0.5, 2.0]);
    }

    #[test]
    fn agreeing_overlap_keeps_shared_values() {
        // 2x2 windows at x0 = 0 and x0 = 1 over a 3x2 image; both stacks
        // encode the absolute column so they agree on x = 1.
        let a = vec![10.0, 11.0, 10.0, 11.0];
        let b = vec![11.0, 12.0, 11.0, 12.0];
        let m = MrfModel::new([2, 1], [3, 2], [1.0; 2], 2, 1, vec![node(0, 0, a), node(1, 0, b)], 1.0).unwrap();
        assert_eq!(m.edges().len(), 1);
        let v = stitch(&m, &m.labeling(vec![0, 0])).unwrap();
        assert_eq!(v.data(), &[10.0, 11.0, 12.0, 10.0, 11.0, 12.0]);
    }

    #[test]
    fn stitch_matches_accumulation_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let (p, h) = (3, 2);
        let xs = [0usize, 2, 4];
        let zs = [0usize, 1];
        let mut nodes = Vec::new();
        for &z0 in &zs {
            for &x0 in &xs {
                let candidates = (0..2)
                    .map(|i| Candidate {
                        pair_id: i,
                        unary: i as f64,
                        stack: (0..p * h * p).map(|_| rng.gen_range(-50.0..50.0)).collect(),
                    })
                    .collect();
                nodes.push(Node { x0, z0, mu: 0.0, sigma: 0.0, candidates });
            }
        }
        let m = MrfModel::new([3, 2], [7, 4], [1.0; 2], p, h, nodes, 1.0).unwrap();
        let labels: Vec<usize> = (0..6).map(|i| i % 2).collect();
        let v = stitch(&m, &m.labeling(labels.clone())).unwrap();

        for z in 0..4 {
            for y in 0..h {
                for x in 0..7 {
                    let mut acc = 0.0;
                    let mut n = 0;
                    for (node, &l) in m.nodes().iter().zip(&labels) {
                        if (node.x0..node.x0 + p).contains(&x) && (node.z0..node.z0 + p).contains(&z) {
                            acc += node.candidates[l].stack[(x - node.x0) + p * (y + h * (z - node.z0))];
                            n += 1;
                        }
                    }
                    assert!(n > 0);
                    assert!((v.get(x, y, z) - acc / n as f64).abs() <= 1e-9);
                }
            }
        }
    }

    #[test]
    fn enforcement_cases() {
        let img = ProjectionImage::from_fn([4, 3], [1.0; 2], |x, z| (x * 7 + z * 3) as f64).unwrap();
        let base = replicate_baseline(&img, 4).unwrap();
        assert_eq!(enforce_projection(&base, &img).unwrap(), base);

        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let v = Volume::from_fn([4, 4, 3], [1.0; 3], |_, _, _| rng.gen_range(0.0..1000.0)).unwrap();
        let img = ProjectionImage::from_fn([4, 3], [1.0; 2], |_, _| rng.gen_range(0.0..1000.0)).unwrap();
        let out = enforce_projection(&v, &img).unwrap();
        assert!(projection_residual(&out, &img).unwrap() <= 1e-5);

        let consistent = enforce_projection(&v, &project_y(&v)).unwrap();
        for (a, b) in consistent.data().iter().zip(v.data()) {
            assert!((a - b).abs() < 1e-9);
        }
        let wrong = ProjectionImage::filled([3, 3], [1.0; 2], 0.0).unwrap();
        assert!(enforce_projection(&v, &wrong).unwrap_err().is_validation());
    }
}
