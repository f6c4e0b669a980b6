//! Multiphase thresholding (MBO) for mean-curvature flow on the flat torus.
//!
//! - [`tensions`]: admissible surface-tension matrices and Herring angles.
//! - [`fields`]: grids, partitions, spectral Gaussian convolution, snapshots.
//! - [`scheme`]: threshold steps, runs with observers, brute-force oracle.
//! - [`energetics`]: approximate energies, metric term, inner variations,
//!   dissipation measures.
//! - [`diagnostics`]: time moduli, ball coverings and excess, junction angles,
//!   radius laws and velocity estimates.

pub mod diagnostics;
pub mod energetics;
mod error;
pub mod fields;
pub mod scheme;
pub mod tensions;

pub use energetics::{StepRecord, C0};
pub use error::{MboError, Result};
pub use fields::{FieldError, Partition, ScalarField, TorusGrid};
pub use scheme::{run, threshold_step, SchemeConfig, StepObserver, TieRule, Trajectory};
pub use tensions::{herring_angles, SurfaceTensionMatrix, TensionError};
