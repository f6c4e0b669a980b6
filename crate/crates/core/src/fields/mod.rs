//! Periodic-torus discretization: grids, label partitions, scalar fields and
//! exact spectral Gaussian convolution.
//!
//! Cells are indexed row-major with the last axis fastest. Values live at
//! cell centers `x_a = (i_a + 1/2)·dx`; every integral is the midpoint sum
//! `dx^d · Σ values`.

pub mod shapes;
pub mod snapshot;
mod spectral;

pub use spectral::{divergence_convolve, gaussian_convolve, gradient_convolve, Convolver};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum FieldError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("fields live on different grids")]
    GridMismatch,
    #[error("partitions have different phase counts ({0} vs {1})")]
    PhaseCountMismatch(usize, usize),
    #[error("Gaussian variance must be positive and finite, got {0}")]
    NonpositiveVariance(f64),
    #[error("phase {phase} out of range for {phases} phases")]
    PhaseOutOfRange { phase: usize, phases: usize },
    #[error("expected {expected} values, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("malformed snapshot: {0}")]
    Snapshot(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// The flat torus `[0, Λ)^d` cut into `n^d` equal cells.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TorusGrid {
    dim: usize,
    side: f64,
    n: usize,
}

impl TorusGrid {
    pub fn new(dim: usize, side: f64, n: usize) -> Result<Self, FieldError> {
        if !(1..=3).contains(&dim) {
            return Err(FieldError::InvalidGrid(format!("dimension {dim} not in 1..=3")));
        }
        if n < 4 {
            return Err(FieldError::InvalidGrid(format!("{n} cells per axis, need at least 4")));
        }
        if !(side.is_finite() && side > 0.0) {
            return Err(FieldError::InvalidGrid(format!("side length {side}")));
        }
        if n.checked_pow(dim as u32).is_none() {
            return Err(FieldError::InvalidGrid("cell count overflows".into()));
        }
        Ok(Self { dim, side, n })
    }

    /// Unit torus `[0, 1)^d`.
    pub fn unit(dim: usize, n: usize) -> Result<Self, FieldError> {
        Self::new(dim, 1.0, n)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Side length `Λ`.
    pub fn side(&self) -> f64 {
        self.side
    }

    /// Cells per axis.
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dx(&self) -> f64 {
        self.side / self.n as f64
    }

    /// Volume of one cell, `dx^d`.
    pub fn cell_volume(&self) -> f64 {
        self.dx().powi(self.dim as i32)
    }

    /// Volume of the torus, `Λ^d`.
    pub fn volume(&self) -> f64 {
        self.side.powi(self.dim as i32)
    }

    pub fn len(&self) -> usize {
        self.n.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Stride of axis `a` in the flat layout.
    pub fn stride(&self, axis: usize) -> usize {
        self.n.pow((self.dim - 1 - axis) as u32)
    }

    /// Multi-index of a flat index; unused trailing axes are zero.
    #[inline]
    pub fn coords(&self, mut idx: usize) -> [usize; 3] {
        let mut c = [0usize; 3];
        for a in (0..self.dim).rev() {
            c[a] = idx % self.n;
            idx /= self.n;
        }
        c
    }

    /// Flat index of a multi-index, wrapping each coordinate periodically.
    #[inline]
    pub fn index_wrapped(&self, c: [isize; 3]) -> usize {
        let n = self.n as isize;
        let mut idx = 0usize;
        for &ca in c.iter().take(self.dim) {
            idx = idx * self.n + ca.rem_euclid(n) as usize;
        }
        idx
    }

    #[inline]
    pub fn index(&self, c: [usize; 3]) -> usize {
        let mut idx = 0usize;
        for &ca in c.iter().take(self.dim) {
            idx = idx * self.n + ca;
        }
        idx
    }

    /// Cell-center position; unused trailing coordinates are zero.
    #[inline]
    pub fn center(&self, idx: usize) -> [f64; 3] {
        let c = self.coords(idx);
        let dx = self.dx();
        let mut x = [0.0; 3];
        for a in 0..self.dim {
            x[a] = (c[a] as f64 + 0.5) * dx;
        }
        x
    }

    /// Minimal-image displacement `x − y` on the torus.
    #[inline]
    pub fn displacement(&self, x: [f64; 3], y: [f64; 3]) -> [f64; 3] {
        let mut d = [0.0; 3];
        for a in 0..self.dim {
            let mut v = x[a] - y[a];
            v -= self.side * (v / self.side).round();
            d[a] = v;
        }
        d
    }

    #[inline]
    pub fn distance(&self, x: [f64; 3], y: [f64; 3]) -> f64 {
        let d = self.displacement(x, y);
        (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt()
    }

    fn check_same(&self, other: &TorusGrid) -> Result<(), FieldError> {
        if self == other {
            Ok(())
        } else {
            Err(FieldError::GridMismatch)
        }
    }
}

/// A real-valued field sampled at cell centers.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    grid: TorusGrid,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn new(grid: TorusGrid, values: Vec<f64>) -> Result<Self, FieldError> {
        if values.len() != grid.len() {
            return Err(FieldError::LengthMismatch {
                expected: grid.len(),
                got: values.len(),
            });
        }
        Ok(Self { grid, values })
    }

    pub fn constant(grid: TorusGrid, value: f64) -> Self {
        Self {
            grid,
            values: vec![value; grid.len()],
        }
    }

    /// Samples `f` at every cell center.
    pub fn from_fn(grid: TorusGrid, mut f: impl FnMut([f64; 3]) -> f64) -> Self {
        let values = (0..grid.len()).map(|i| f(grid.center(i))).collect();
        Self { grid, values }
    }

    pub fn grid(&self) -> &TorusGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn integral(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.grid.cell_volume()
    }

    /// `∫ f g dx`.
    pub fn dot(&self, other: &ScalarField) -> Result<f64, FieldError> {
        self.grid.check_same(&other.grid)?;
        Ok(dot(&self.values, &other.values) * self.grid.cell_volume())
    }

    pub fn max_abs_diff(&self, other: &ScalarField) -> Result<f64, FieldError> {
        self.grid.check_same(&other.grid)?;
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .fold(0.0_f64, |m, (a, b)| m.max((a - b).abs())))
    }
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// An admissible partition: exactly one phase label per cell.
///
/// Phases are 0-based in memory; the snapshot format stores them 1-based.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partition {
    grid: TorusGrid,
    phases: usize,
    labels: Vec<u8>,
}

// `TorusGrid` holds an f64 but is only ever compared exactly.
impl Eq for TorusGrid {}

impl Partition {
    pub fn new(grid: TorusGrid, phases: usize, labels: Vec<u8>) -> Result<Self, FieldError> {
        if labels.len() != grid.len() {
            return Err(FieldError::LengthMismatch {
                expected: grid.len(),
                got: labels.len(),
            });
        }
        if phases == 0 || phases > u8::MAX as usize {
            return Err(FieldError::PhaseOutOfRange { phase: phases, phases: u8::MAX as usize });
        }
        if let Some(&bad) = labels.iter().find(|&&l| l as usize >= phases) {
            return Err(FieldError::PhaseOutOfRange {
                phase: bad as usize,
                phases,
            });
        }
        Ok(Self {
            grid,
            phases,
            labels,
        })
    }

    /// Every cell in `phase`.
    pub fn uniform(grid: TorusGrid, phases: usize, phase: usize) -> Result<Self, FieldError> {
        Self::new(grid, phases, vec![phase as u8; grid.len()])
    }

    /// Rasterizes by evaluating `label_at` at each cell center.
    pub fn from_fn(
        grid: TorusGrid,
        phases: usize,
        mut label_at: impl FnMut([f64; 3]) -> usize,
    ) -> Result<Self, FieldError> {
        let labels = (0..grid.len())
            .map(|i| label_at(grid.center(i)).min(u8::MAX as usize) as u8)
            .collect();
        Self::new(grid, phases, labels)
    }

    pub fn grid(&self) -> &TorusGrid {
        &self.grid
    }

    pub fn phases(&self) -> usize {
        self.phases
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    #[inline]
    pub fn label(&self, idx: usize) -> usize {
        self.labels[idx] as usize
    }

    /// Per-phase volumes `∫ χ_i dx`.
    pub fn volumes(&self) -> Vec<f64> {
        let mut counts = vec![0usize; self.phases];
        for &l in &self.labels {
            counts[l as usize] += 1;
        }
        let cv = self.grid.cell_volume();
        counts.into_iter().map(|c| c as f64 * cv).collect()
    }

    /// Number of phases occupying at least one cell.
    pub fn phases_present(&self) -> usize {
        let mut seen = vec![false; self.phases];
        for &l in &self.labels {
            seen[l as usize] = true;
        }
        seen.into_iter().filter(|&s| s).count()
    }

    /// Indicator `χ_i` as raw values.
    pub fn indicator_values(&self, phase: usize) -> Vec<f64> {
        self.labels
            .iter()
            .map(|&l| if l as usize == phase { 1.0 } else { 0.0 })
            .collect()
    }

    /// Cyclic shift by `k` cells along `axis`: the result at `i + k` equals
    /// `self` at `i`.
    pub fn shifted(&self, axis: usize, k: isize) -> Self {
        let mut labels = vec![0u8; self.labels.len()];
        for (idx, &l) in self.labels.iter().enumerate() {
            let c = self.grid.coords(idx);
            let mut t = [c[0] as isize, c[1] as isize, c[2] as isize];
            t[axis] += k;
            labels[self.grid.index_wrapped(t)] = l;
        }
        Self {
            labels,
            ..self.clone()
        }
    }

    /// Quarter turn in the `(0, 1)` coordinate plane: `(i, j) ↦ (j, n−1−i)`.
    pub fn rotated_quarter(&self) -> Self {
        assert!(self.grid.dim >= 2, "rotation needs at least two axes");
        let n = self.grid.n;
        let mut labels = vec![0u8; self.labels.len()];
        for (idx, &l) in self.labels.iter().enumerate() {
            let c = self.grid.coords(idx);
            let r = [c[1], n - 1 - c[0], c[2]];
            labels[self.grid.index(r)] = l;
        }
        Self {
            labels,
            ..self.clone()
        }
    }

    /// Renames phases: cells of phase `perm[i]` become phase `i`.
    pub fn relabeled(&self, perm: &[usize]) -> Self {
        let mut inverse = vec![0u8; self.phases];
        for (new, &old) in perm.iter().enumerate() {
            inverse[old] = new as u8;
        }
        Self {
            labels: self.labels.iter().map(|&l| inverse[l as usize]).collect(),
            ..self.clone()
        }
    }

    pub(crate) fn check_compatible(&self, other: &Partition) -> Result<(), FieldError> {
        self.grid.check_same(&other.grid)?;
        if self.phases != other.phases {
            return Err(FieldError::PhaseCountMismatch(self.phases, other.phases));
        }
        Ok(())
    }

    /// Cells with a face-neighbour of a different phase.
    pub fn interface_cells(&self) -> Vec<usize> {
        (0..self.labels.len())
            .filter(|&idx| {
                let c = self.grid.coords(idx);
                let base = [c[0] as isize, c[1] as isize, c[2] as isize];
                (0..self.grid.dim).any(|a| {
                    [-1isize, 1].iter().any(|&s| {
                        let mut t = base;
                        t[a] += s;
                        self.labels[self.grid.index_wrapped(t)] != self.labels[idx]
                    })
                })
            })
            .collect()
    }
}

/// `χ_i` of a partition as a field of zeros and ones.
pub fn indicator(p: &Partition, phase: usize) -> Result<ScalarField, FieldError> {
    if phase >= p.phases {
        return Err(FieldError::PhaseOutOfRange {
            phase,
            phases: p.phases,
        });
    }
    Ok(ScalarField {
        grid: p.grid,
        values: p.indicator_values(phase),
    })
}

/// `Σ_i ∫ |χ_i(p) − χ_i(q)| dx`, i.e. twice the volume of cells whose label
/// differs.
pub fn symmetric_difference_volume(p: &Partition, q: &Partition) -> Result<f64, FieldError> {
    p.check_compatible(q)?;
    let differing = p
        .labels
        .iter()
        .zip(&q.labels)
        .filter(|(a, b)| a != b)
        .count();
    Ok(2.0 * differing as f64 * p.grid.cell_volume())
}
