//! Lattice ball coverings `{B_r(p) : p ∈ [0,Λ)^d ∩ (r/√d)ℤ^d}`.

use crate::error::{MboError, Result};
use crate::fields::TorusGrid;

#[derive(Debug, Clone, PartialEq)]
pub struct BallCovering {
    grid: TorusGrid,
    r: f64,
    spacing: f64,
    per_axis: usize,
}

impl BallCovering {
    /// Lattice spacing `r/√d`. When `Λ` is not a multiple of it the last
    /// row is closer to the first across the seam.
    pub fn new(grid: TorusGrid, r: f64) -> Result<Self> {
        if !(r.is_finite() && r > 0.0) {
            return Err(MboError::InvalidInput(format!("ball radius {r} must be positive")));
        }
        let spacing = r / (grid.dim() as f64).sqrt();
        let per_axis = (grid.side() / spacing - 1e-9).ceil().max(1.0) as usize;
        Ok(Self {
            grid,
            r,
            spacing,
            per_axis,
        })
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn len(&self) -> usize {
        self.per_axis.pow(self.grid.dim() as u32)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn centers(&self) -> Vec<[f64; 3]> {
        let dim = self.grid.dim();
        (0..self.len())
            .map(|mut k| {
                let mut c = [0.0; 3];
                for a in (0..dim).rev() {
                    c[a] = (k % self.per_axis) as f64 * self.spacing;
                    k /= self.per_axis;
                }
                c
            })
            .collect()
    }

    /// `c(d, n) = (⌊2n√d⌋ + 2)^d` bounds how many dilated balls `B_{nr}(p)`
    /// contain any given point. The `+2` allows for the short gap at the
    /// seam.
    pub fn overlap_bound(&self, n: f64) -> usize {
        overlap_bound(self.grid.dim(), n)
    }

    /// Number of balls `B_{nr}(p)` containing `x`.
    pub fn multiplicity(&self, x: [f64; 3], n: f64) -> usize {
        let reach = n * self.r;
        self.centers()
            .into_iter()
            .filter(|&c| self.grid.distance(x, c) < reach)
            .count()
    }
}

pub fn overlap_bound(dim: usize, n: f64) -> usize {
    ((2.0 * n * (dim as f64).sqrt()).floor() as usize + 2).pow(dim as u32)
}
