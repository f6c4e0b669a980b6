//! Cell-center rasterization of analytic initial partitions.

use super::{FieldError, Partition, TorusGrid};
use rand::Rng;
use std::f64::consts::PI;

/// Ball (disk in 2-D) of `radius` around `center` as phase `inside`, the
/// rest of the torus as phase `outside`.
pub fn ball(
    grid: TorusGrid,
    phases: usize,
    center: [f64; 3],
    radius: f64,
    inside: usize,
    outside: usize,
) -> Result<Partition, FieldError> {
    Partition::from_fn(grid, phases, |x| {
        if grid.distance(x, center) < radius {
            inside
        } else {
            outside
        }
    })
}

/// Two-phase ball around the torus center: phase 1 inside, phase 0 outside.
pub fn centered_ball(grid: TorusGrid, radius: f64) -> Result<Partition, FieldError> {
    let c = grid.side() / 2.0;
    ball(grid, 2, [c, c, c], radius, 1, 0)
}

/// Slab `lo ≤ x_axis < hi` as phase 1 in a phase-0 background. The slab has
/// two planar interfaces of area `Λ^{d−1}` each.
pub fn stripe(grid: TorusGrid, axis: usize, lo: f64, hi: f64) -> Result<Partition, FieldError> {
    Partition::from_fn(grid, 2, |x| (lo <= x[axis] && x[axis] < hi) as usize)
}

/// Slab of `width` centered in the torus along axis 0.
pub fn centered_stripe(grid: TorusGrid, width: f64) -> Result<Partition, FieldError> {
    let mid = grid.side() / 2.0;
    stripe(grid, 0, mid - width / 2.0, mid + width / 2.0)
}

/// Half-space `{(x − point)·normal > 0}` as phase 1, phase 0 elsewhere. Not
/// periodic: the complementary interface sits where the minimal image of
/// `x − point` wraps.
pub fn half_space(grid: TorusGrid, point: [f64; 3], normal: [f64; 3]) -> Result<Partition, FieldError> {
    Partition::from_fn(grid, 2, |x| {
        let d = grid.displacement(x, point);
        (d[0] * normal[0] + d[1] * normal[1] + d[2] * normal[2] > 0.0) as usize
    })
}

/// Planar sectors around `center` (2-D). `boundaries` are increasing polar
/// angles in `[0, 2π)`; sector `k` spans `[boundaries[k], boundaries[k+1])`
/// (cyclically) and gets phase `k`.
pub fn sectors(grid: TorusGrid, center: [f64; 3], boundaries: &[f64]) -> Result<Partition, FieldError> {
    if grid.dim() != 2 || boundaries.len() < 2 {
        return Err(FieldError::InvalidGrid("sectors need a 2-D grid and at least two rays".into()));
    }
    let k = boundaries.len();
    Partition::from_fn(grid, k, |x| {
        let d = grid.displacement(x, center);
        let phi = polar_angle(d);
        (0..k)
            .find(|&s| angle_in(phi, boundaries[s], boundaries[(s + 1) % k]))
            .unwrap_or(0)
    })
}

/// Polar angle of `d` in `[0, 2π)`.
pub fn polar_angle(d: [f64; 3]) -> f64 {
    let a = d[1].atan2(d[0]);
    if a < 0.0 {
        a + 2.0 * PI
    } else {
        a
    }
}

fn angle_in(phi: f64, from: f64, to: f64) -> bool {
    if from <= to {
        from <= phi && phi < to
    } else {
        phi >= from || phi < to
    }
}

/// T-junction data (2-D): phase 0 fills `x_1 < Λ/2`, and the upper half is
/// split at `x_0 = Λ/2` into phase 1 (left) and phase 2 (right). On the
/// torus this has four triple junctions; one sits at `(Λ/2, Λ/2)`.
pub fn t_junction(grid: TorusGrid) -> Result<Partition, FieldError> {
    if grid.dim() != 2 {
        return Err(FieldError::InvalidGrid("T-junction needs a 2-D grid".into()));
    }
    let mid = grid.side() / 2.0;
    Partition::from_fn(grid, 3, |x| {
        if x[1] < mid {
            0
        } else if x[0] < mid {
            1
        } else {
            2
        }
    })
}

/// Periodic Voronoi tessellation of the given seeds; seed `k` owns phase `k`.
pub fn voronoi(grid: TorusGrid, seeds: &[[f64; 3]]) -> Result<Partition, FieldError> {
    Partition::from_fn(grid, seeds.len(), |x| {
        seeds
            .iter()
            .enumerate()
            .map(|(k, s)| (k, grid.distance(x, *s)))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .map(|(k, _)| k)
            .unwrap_or(0)
    })
}

/// `count` seeds drawn uniformly on the torus.
pub fn random_seeds(grid: &TorusGrid, count: usize, rng: &mut impl Rng) -> Vec<[f64; 3]> {
    (0..count)
        .map(|_| {
            let mut s = [0.0; 3];
            for v in s.iter_mut().take(grid.dim()) {
                *v = rng.gen_range(0.0..grid.side());
            }
            s
        })
        .collect()
}
