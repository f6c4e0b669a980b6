//! Numerical checks of the quantitative estimates and of smooth-solution
//! behavior: time moduli, ball coverings and excess, junction angles,
//! radius laws and velocity estimates.

pub mod covering;
pub mod excess;
pub mod junction;
pub mod moduli;
pub mod radius;

pub use covering::BallCovering;
pub use excess::{classify_covering, excess_on_ball, BallExcess, ExcessAnalyzer, ExcessReport};
pub use junction::{junction_angles_measured, locate_triple_junction};
pub use moduli::{bv_time_modulus, hoelder_volume_check, BvModulus, HoelderReport};
pub use radius::{
    circle_law_deviation, disk_radius_series, fit_square_radius_slope, velocity_estimate, VelocitySample,
};

use crate::fields::TorusGrid;

/// Cells whose centers lie within `radius` of `center`, with their
/// displacement `x − center` taken without wrapping (requires
/// `radius < Λ/2`).
pub(crate) fn cells_in_ball(grid: &TorusGrid, center: [f64; 3], radius: f64) -> Vec<(usize, [f64; 3])> {
    let dx = grid.dx();
    let dim = grid.dim();
    let mut lo = [0isize; 3];
    let mut hi = [0isize; 3];
    for a in 0..dim {
        lo[a] = ((center[a] - radius) / dx - 0.5).floor() as isize;
        hi[a] = ((center[a] + radius) / dx - 0.5).ceil() as isize;
    }
    let r2 = radius * radius;
    let mut out = Vec::new();
    for i in lo[0]..=hi[0] {
        for j in lo[1]..=hi[1] {
            for k in lo[2]..=hi[2] {
                let c = [i, j, k];
                let mut d = [0.0; 3];
                for a in 0..dim {
                    d[a] = (c[a] as f64 + 0.5) * dx - center[a];
                }
                if d[0] * d[0] + d[1] * d[1] + d[2] * d[2] < r2 {
                    out.push((grid.index_wrapped(c), d));
                }
            }
        }
    }
    out
}
