use crate::error::{Error, Result};
use crate::inference::mrf::{Labeling, MrfModel};
use crate::inference::solve::{solve_greedy, solve_icm};

/// Up to `count` distinct ICM local minima in ascending energy order.
///
/// Seeds: the greedy labeling, then for `j = 1..count` the labeling that
/// gives every node its rank-`j` candidate (clamped to the node's list).
/// Each seed is refined by ICM; duplicates are dropped and the survivors are
/// sorted by energy, ties keeping seed order.
pub fn enumerate_modes(model: &MrfModel, count: usize, max_sweeps: usize) -> Result<Vec<Labeling>> {
    if count == 0 {
        return Err(Error::validation("mode count must be at least 1"));
    }
    let mut seeds = vec![solve_greedy(model)];
    for j in 1..count {
        let labels = model.nodes().iter().map(|n| j.min(n.candidates.len() - 1)).collect();
        seeds.push(model.labeling(labels));
    }

    let mut modes: Vec<Labeling> = Vec::with_capacity(seeds.len());
    for seed in &seeds {
        let refined = solve_icm(model, seed, max_sweeps)?;
        if !modes.iter().any(|m| m.labels == refined.labels) {
            modes.push(refined);
        }
    }
    modes.sort_by(|a, b| a.energy.total_cmp(&b.energy));
    modes.truncate(count);
    Ok(modes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::inference::mrf::{Candidate, Node};

    #[test]
    fn one_node_modes_are_sorted_unaries() {
        let nodes = vec![Node {
            x0: 0,
            z0: 0,
            mu: 0.0,
            sigma: 0.0,
            candidates: [0.5, 1.5, 4.0]
                .iter()
                .enumerate()
                .map(|(i, &unary)| Candidate { pair_id: i, unary, stack: vec![i as f64] })
                .collect(),
        }];
        let m = MrfModel::new([1, 1], [1, 1], [1.0; 2], 1, 1, nodes, 1.0).unwrap();
        // With no neighbours ICM pulls every seed back to candidate 0.
        let modes = enumerate_modes(&m, 3, 10).unwrap();
        assert!(modes.len() <= 3);
        assert_eq!(modes[0].energy, 0.5);
        assert_eq!(modes.len(), 1);
        assert!(enumerate_modes(&m, 0, 10).is_err());
    }

    #[test]
    fn single_mode_is_refined_greedy() {
        let mut nodes = Vec::new();
        for x0 in 0..3 {
            nodes.push(Node {
                x0,
                z0: 0,
                mu: 0.0,
                sigma: 0.0,
                candidates: (0..3)
                    .map(|i| Candidate {
                        pair_id: i,
                        unary: i as f64 * 0.1,
                        stack: vec![((x0 + 1) * (i + 2) % 5) as f64; 4],
                    })
                    .collect(),
            });
        }
        let m = MrfModel::new([3, 1], [4, 2], [1.0; 2], 2, 1, nodes, 1.0).unwrap();
        let want = solve_icm(&m, &solve_greedy(&m), 10).unwrap();
        assert_eq!(enumerate_modes(&m, 1, 10).unwrap(), vec![want]);
        let many = enumerate_modes(&m, 3, 10).unwrap();
        assert!(many.windows(2).all(|w| w[0].energy <= w[1].energy));
    }
}
