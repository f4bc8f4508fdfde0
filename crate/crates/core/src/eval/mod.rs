//! Synthetic evaluation: procedural phantoms, fidelity metrics and the
//! y-resolution study.

mod metrics;
mod phantom;
mod study;

pub use metrics::{psnr, rmse};
pub use phantom::{gen_phantom, paint_ellipsoid, phantom_recipe, Ellipsoid, PhantomRecipe, BACKGROUND};
pub use study::{format_sig6, resolution_study, Method, NamedVolume, StudyCell, StudyConfig, StudyReport, StudyRow};
