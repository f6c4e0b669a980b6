//! Fixtures shared by the benchmarks.

use mbo_core::fields::shapes;
use mbo_core::{Partition, TorusGrid};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Centered two-phase disk of radius 1/4 on an `n²` unit torus.
pub fn disk(n: usize) -> Partition {
    shapes::centered_ball(TorusGrid::unit(2, n).unwrap(), 0.25).unwrap()
}

/// Voronoi partition with `phases` seeds on an `n²` unit torus, fixed seed.
pub fn voronoi(n: usize, phases: usize) -> Partition {
    let g = TorusGrid::unit(2, n).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let seeds = shapes::random_seeds(&g, phases, &mut rng);
    shapes::voronoi(g, &seeds).unwrap()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixtures_have_the_requested_phases() {
        assert_eq!(disk(64).phases_present(), 2);
        assert_eq!(voronoi(64, 8).phases_present(), 8);
    }
}
