//! Seeded ellipsoid phantoms.
//!
//! Every phantom shares one anatomical layout: ellipsoid slot `i` has a fixed
//! nominal center, shape and intensity, and the seed only jitters them. Organs
//! therefore occupy consistent coordinate ranges across a corpus, which is
//! the regularity example-based reconstruction relies on.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::volume::Volume;

/// Soft-tissue intensity filling everything outside the ellipsoids.
pub const BACKGROUND: f64 = 300.0;

const LAYOUT_SEED: u64 = 0x5852_565f_4c41_594f;
const MIN_DIM: usize = 8;

/// Solid ellipsoid in voxel-index coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ellipsoid {
    pub center: [f64; 3],
    pub semi_axes: [f64; 3],
    pub intensity: f64,
}

impl Ellipsoid {
    #[inline]
    pub fn contains(&self, x: usize, y: usize, z: usize) -> bool {
        let p = [x as f64, y as f64, z as f64];
        let mut s = 0.0;
        for i in 0..3 {
            let t = (p[i] - self.center[i]) / self.semi_axes[i];
            s += t * t;
        }
        s <= 1.0
    }
}

/// The shapes composited into one phantom, in painting order: solid
/// ellipsoids first, the cavity last.
#[derive(Debug, Clone, PartialEq)]
pub struct PhantomRecipe {
    pub dims: [usize; 3],
    pub solids: Vec<Ellipsoid>,
    pub cavity: Ellipsoid,
}

/// Nominal normalized parameters for a slot: center, semi-axes, intensity.
fn nominal(slot: u64, cavity: bool) -> ([f64; 3], [f64; 3], f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(LAYOUT_SEED ^ slot.wrapping_mul(0x9e37_79b9_7f4a_7c15));
    let center = [rng.gen_range(0.3..0.7), rng.gen_range(0.3..0.7), rng.gen_range(0.3..0.7)];
    let semi = [rng.gen_range(0.08..0.2), rng.gen_range(0.08..0.2), rng.gen_range(0.08..0.2)];
    let intensity = if cavity { rng.gen_range(20.0..60.0) } else { rng.gen_range(500.0..950.0) };
    (center, semi, intensity)
}

fn jittered(rng: &mut ChaCha8Rng, dims: [usize; 3], slot: u64, cavity: bool) -> Ellipsoid {
    let (c, a, v) = nominal(slot, cavity);
    let mut center = [0.0; 3];
    let mut semi_axes = [0.0; 3];
    for i in 0..3 {
        let cn = (c[i] + rng.gen_range(-0.05..0.05)).clamp(0.25, 0.75);
        // Keep the ellipsoid strictly inside the unit cube.
        let an = (a[i] * rng.gen_range(0.8..1.2)).min(cn - 0.01).min(0.99 - cn);
        let extent = (dims[i] - 1) as f64;
        center[i] = cn * extent;
        semi_axes[i] = (an * extent).max(0.75);
    }
    let spread = if cavity { 10.0 } else { 40.0 };
    // Intensities are kept f32-representable so phantoms survive the on-disk
    // container unchanged.
    let intensity = f64::from((v + rng.gen_range(-spread..spread)).clamp(0.0, 1000.0) as f32);
    Ellipsoid { center, semi_axes, intensity }
}

/// Deterministic recipe for `(seed, dims, n_ellipsoids)`.
pub fn phantom_recipe(seed: u64, dims: [usize; 3], n_ellipsoids: usize) -> Result<PhantomRecipe> {
    if dims.iter().any(|&d| d < MIN_DIM) {
        return Err(Error::validation(format!("phantom dims must each be >= {MIN_DIM}, got {dims:?}")));
    }
    if n_ellipsoids == 0 {
        return Err(Error::validation("phantom needs at least one ellipsoid"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let solids = (0..n_ellipsoids as u64).map(|i| jittered(&mut rng, dims, i, false)).collect();
    let cavity = jittered(&mut rng, dims, u64::MAX, true);
    Ok(PhantomRecipe { dims, solids, cavity })
}

/// Sets every voxel inside `e` to its intensity.
pub fn paint_ellipsoid(data: &mut [f64], dims: [usize; 3], e: &Ellipsoid) {
    let bounds = |i: usize| {
        let lo = (e.center[i] - e.semi_axes[i]).floor().max(0.0) as usize;
        let hi = ((e.center[i] + e.semi_axes[i]).ceil() as usize).min(dims[i] - 1);
        lo..=hi
    };
    for z in bounds(2) {
        for y in bounds(1) {
            for x in bounds(0) {
                if e.contains(x, y, z) {
                    data[x + dims[0] * (y + dims[1] * z)] = e.intensity;
                }
            }
        }
    }
}

/// Soft-tissue background, `n_ellipsoids` solid ellipsoids and one cavity,
/// composited last-writer-wins in generation order. Unit spacing.
pub fn gen_phantom(seed: u64, dims: [usize; 3], n_ellipsoids: usize) -> Result<Volume> {
    let recipe = phantom_recipe(seed, dims, n_ellipsoids)?;
    let mut data = vec![BACKGROUND; dims.iter().product()];
    for e in recipe.solids.iter().chain([&recipe.cavity]) {
        paint_ellipsoid(&mut data, dims, e);
    }
    Volume::new(dims, [1.0; 3], data)
}
