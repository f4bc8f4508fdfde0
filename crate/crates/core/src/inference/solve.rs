//! Deterministic labeling solvers: one raster greedy pass and iterated
//! conditional modes.

use crate::error::{Error, Result};
use crate::inference::mrf::{Labeling, MrfModel};

/// Raster pass (`z` outer, `x` inner). Each node takes the candidate that
/// minimizes its unary cost plus the weighted overlap cost to the already
/// fixed left and upper neighbours; ties go to the lower ordinal.
pub fn solve_greedy(model: &MrfModel) -> Labeling {
    let n = model.nodes().len();
    let mut labels = vec![0usize; n];
    for node in 0..n {
        let k = model.nodes()[node].candidates.len();
        let mut best = (f64::INFINITY, 0);
        for c in 0..k {
            let e = model.local_energy(node, c, &labels, |other| other < node);
            if e < best.0 {
                best = (e, c);
            }
        }
        labels[node] = best.1;
    }
    model.labeling(labels)
}

/// Iterated conditional modes from `init`, at most `max_sweeps` sweeps.
pub fn solve_icm(model: &MrfModel, init: &Labeling, max_sweeps: usize) -> Result<Labeling> {
    Ok(solve_icm_traced(model, init, max_sweeps)?.0)
}

/// Like [`solve_icm`] but also returns the energy after every sweep.
///
/// A node only moves when another candidate is strictly better given its
/// current neighbours, so ties keep the current label and a minimizer is
/// always a fixed point.
pub fn solve_icm_traced(
    model: &MrfModel,
    init: &Labeling,
    max_sweeps: usize,
) -> Result<(Labeling, Vec<f64>)> {
    if !model.is_valid_labeling(&init.labels) {
        return Err(Error::validation("initial labeling does not fit the model"));
    }
    if max_sweeps == 0 {
        return Err(Error::validation("max_sweeps must be at least 1"));
    }
    let mut labels = init.labels.clone();
    let mut trace = Vec::new();
    for _ in 0..max_sweeps {
        let mut changed = false;
        for node in 0..labels.len() {
            let current = labels[node];
            let mut best = (model.local_energy(node, current, &labels, |_| true), current);
            for c in 0..model.nodes()[node].candidates.len() {
                if c == current {
                    continue;
                }
                let e = model.local_energy(node, c, &labels, |_| true);
                if e < best.0 {
                    best = (e, c);
                }
            }
            if best.1 != current {
                labels[node] = best.1;
                changed = true;
            }
        }
        trace.push(model.energy(&labels));
        if !changed {
            break;
        }
    }
    Ok((model.labeling(labels), trace))
}
