//! Surface-tension matrices and their admissibility certificates.
//!
//! A matrix of surface tensions `σ` is admissible when it is symmetric with a
//! zero diagonal and positive off-diagonal entries, satisfies the strict
//! triangle inequality, and is negative definite as a bilinear form on the
//! zero-sum hyperplane `(1, …, 1)^⊥`. The last condition is what makes the
//! metric term of the scheme a squared distance.

use nalgebra::{DMatrix, SymmetricEigen};
use std::f64::consts::PI;
use thiserror::Error;

/// Relative tolerance on the largest projected eigenvalue.
const DEFINITENESS_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TensionError {
    #[error("tension matrix must be square with at least 2 phases, got {rows}x{cols}")]
    Shape { rows: usize, cols: usize },
    #[error("tension matrix has a non-finite entry at ({0}, {1})")]
    NonFinite(usize, usize),
    #[error("tension matrix is not symmetric at ({0}, {1})")]
    NotSymmetric(usize, usize),
    #[error("diagonal entry ({0}, {0}) is nonzero")]
    NonzeroDiagonal(usize),
    #[error("off-diagonal entry ({0}, {1}) is not positive")]
    NonpositiveOffDiagonal(usize, usize),
    /// `σ_ij ≥ σ_ik + σ_kj` for the (0-based) triple `(i, j, k)`.
    #[error("strict triangle inequality violated: sigma[{0}][{1}] >= sigma[{0}][{2}] + sigma[{2}][{1}]")]
    TriangleInequalityViolated(usize, usize, usize),
    #[error("tension matrix is not conditionally negative-definite (largest projected eigenvalue {largest:e})")]
    NotConditionallyNegativeDefinite { largest: f64 },
    #[error("no Herring angle triple exists for tensions ({0}, {1}, {2})")]
    NoSolution(f64, f64, f64),
}

/// A validated, immutable matrix of surface tensions.
#[derive(Debug, Clone, PartialEq)]
pub struct SurfaceTensionMatrix {
    phases: usize,
    sigma: Vec<f64>,
    sigma_min: f64,
    sigma_max: f64,
    sigma_lower: f64,
    triangle_slack: f64,
}

impl SurfaceTensionMatrix {
    /// Validates a row-major `P×P` matrix given as rows.
    pub fn validate(rows: &[Vec<f64>]) -> Result<Self, TensionError> {
        let p = rows.len();
        for row in rows {
            if row.len() != p {
                return Err(TensionError::Shape {
                    rows: p,
                    cols: row.len(),
                });
            }
        }
        let flat: Vec<f64> = rows.iter().flatten().copied().collect();
        Self::from_flat(p, flat)
    }

    /// Validates a row-major `P×P` matrix stored flat.
    pub fn from_flat(phases: usize, sigma: Vec<f64>) -> Result<Self, TensionError> {
        if phases < 2 || sigma.len() != phases * phases {
            return Err(TensionError::Shape {
                rows: phases,
                cols: if phases == 0 { 0 } else { sigma.len() / phases },
            });
        }
        let at = |i: usize, j: usize| sigma[i * phases + j];
        for i in 0..phases {
            for j in 0..phases {
                if !at(i, j).is_finite() {
                    return Err(TensionError::NonFinite(i, j));
                }
            }
        }
        let scale = sigma.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        for i in 0..phases {
            for j in (i + 1)..phases {
                if (at(i, j) - at(j, i)).abs() > 1e-14 * scale {
                    return Err(TensionError::NotSymmetric(i, j));
                }
            }
        }
        for i in 0..phases {
            if at(i, i) != 0.0 {
                return Err(TensionError::NonzeroDiagonal(i));
            }
        }
        let mut sigma_min = f64::INFINITY;
        let mut sigma_max = 0.0_f64;
        for i in 0..phases {
            for j in 0..phases {
                if i == j {
                    continue;
                }
                if at(i, j) <= 0.0 {
                    return Err(TensionError::NonpositiveOffDiagonal(i, j));
                }
                sigma_min = sigma_min.min(at(i, j));
                sigma_max = sigma_max.max(at(i, j));
            }
        }

        let mut triangle_slack = f64::INFINITY;
        for i in 0..phases {
            for j in 0..phases {
                for k in 0..phases {
                    if i == j || j == k || i == k {
                        continue;
                    }
                    let slack = at(i, k) + at(k, j) - at(i, j);
                    if slack <= 0.0 {
                        return Err(TensionError::TriangleInequalityViolated(i, j, k));
                    }
                    triangle_slack = triangle_slack.min(slack);
                }
            }
        }

        let largest = largest_projected_eigenvalue(phases, &sigma);
        if largest >= -DEFINITENESS_TOL * sigma_max {
            return Err(TensionError::NotConditionallyNegativeDefinite { largest });
        }

        Ok(Self {
            phases,
            sigma,
            sigma_min,
            sigma_max,
            sigma_lower: -largest,
            triangle_slack,
        })
    }

    /// `σ = J − I`: all interfaces carry unit tension.
    pub fn equal(phases: usize) -> Result<Self, TensionError> {
        let mut sigma = vec![1.0; phases * phases];
        for i in 0..phases {
            sigma[i * phases + i] = 0.0;
        }
        Self::from_flat(phases, sigma)
    }

    /// Three-phase matrix from `(σ12, σ13, σ23)`.
    pub fn three_phase(s12: f64, s13: f64, s23: f64) -> Result<Self, TensionError> {
        Self::from_flat(3, vec![0.0, s12, s13, s12, 0.0, s23, s13, s23, 0.0])
    }

    pub fn phases(&self) -> usize {
        self.phases
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.sigma[i * self.phases + j]
    }

    /// Row `i` of the matrix.
    pub fn row(&self, i: usize) -> &[f64] {
        &self.sigma[i * self.phases..(i + 1) * self.phases]
    }

    pub fn as_flat(&self) -> &[f64] {
        &self.sigma
    }

    pub fn sigma_min(&self) -> f64 {
        self.sigma_min
    }

    pub fn sigma_max(&self) -> f64 {
        self.sigma_max
    }

    /// Negative-definiteness margin: `vᵀσv ≤ −sigma_lower·|v|²` for zero-sum `v`.
    pub fn sigma_lower(&self) -> f64 {
        self.sigma_lower
    }

    /// `min σ_ik + σ_kj − σ_ij` over pairwise distinct `i, j, k`
    /// (`+∞` for two phases, where no such triple exists).
    pub fn triangle_slack(&self) -> f64 {
        self.triangle_slack
    }

    /// The matrix with its phases reordered: phase `i` of the result is phase
    /// `perm[i]` of `self`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self, TensionError> {
        let p = self.phases;
        let mut sigma = vec![0.0; p * p];
        for i in 0..p {
            for j in 0..p {
                sigma[i * p + j] = self.get(perm[i], perm[j]);
            }
        }
        Self::from_flat(p, sigma)
    }

    /// Quadratic form `vᵀσv`.
    pub fn quadratic_form(&self, v: &[f64]) -> f64 {
        let p = self.phases;
        let mut acc = 0.0;
        for i in 0..p {
            for j in 0..p {
                acc += v[i] * self.get(i, j) * v[j];
            }
        }
        acc
    }
}

/// Orthonormal basis of `(1, …, 1)^⊥` (Helmert vectors), as columns.
fn zero_sum_basis(p: usize) -> DMatrix<f64> {
    let mut q = DMatrix::zeros(p, p - 1);
    for k in 1..p {
        let norm = ((k * (k + 1)) as f64).sqrt();
        for i in 0..k {
            q[(i, k - 1)] = 1.0 / norm;
        }
        q[(k, k - 1)] = -(k as f64) / norm;
    }
    q
}

fn largest_projected_eigenvalue(p: usize, sigma: &[f64]) -> f64 {
    let s = DMatrix::from_row_slice(p, p, sigma);
    let q = zero_sum_basis(p);
    let projected = q.transpose() * s * &q;
    let projected = (&projected + projected.transpose()) * 0.5;
    SymmetricEigen::new(projected)
        .eigenvalues
        .iter()
        .fold(f64::NEG_INFINITY, |m, &v| m.max(v))
}

/// Opening angles `(θ1, θ2, θ3)` of phases 1, 2, 3 at a triple junction in
/// force balance, so that `sin θ1/σ23 = sin θ2/σ13 = sin θ3/σ12`.
///
/// Interface tangents are placed at angle 0 (1|2) and `θ1` (1|3); balance
/// then forces the 2|3 tangent, and `θ1` is found by bisection on the
/// residual `|σ12 t12 + σ13 t13|² − σ23²`, which is decreasing in `θ1`.
pub fn herring_angles(s12: f64, s13: f64, s23: f64) -> Result<(f64, f64, f64), TensionError> {
    let residual = |theta: f64| s12 * s12 + s13 * s13 + 2.0 * s12 * s13 * theta.cos() - s23 * s23;
    let valid = [s12, s13, s23].iter().all(|s| s.is_finite() && *s > 0.0);
    if !valid || residual(0.0) <= 0.0 || residual(PI) >= 0.0 {
        return Err(TensionError::NoSolution(s12, s13, s23));
    }
    let (mut lo, mut hi) = (0.0_f64, PI);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if residual(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let theta1 = 0.5 * (lo + hi);
    let fx = -(s12 + s13 * theta1.cos());
    let fy = -(s13 * theta1.sin());
    let mut psi = fy.atan2(fx);
    if psi < 0.0 {
        psi += 2.0 * PI;
    }
    let theta3 = psi - theta1;
    let theta2 = 2.0 * PI - psi;
    Ok((theta1, theta2, theta3))
}
