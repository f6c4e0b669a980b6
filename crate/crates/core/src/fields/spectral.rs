//! Spectral convolution with the periodic Gaussian `G_h`.
//!
//! On the torus the Fourier multiplier of `G_h` is exactly
//! `exp(−h|k|²/2)` with `k = 2πm/Λ`, so convolution is a forward FFT, a
//! pointwise product and an inverse FFT. Every multiplier used here maps real
//! fields to real fields, which lets two real fields share one complex
//! transform (`f + i·g`).

use super::{FieldError, ScalarField, TorusGrid};
use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use std::cell::RefCell;
use std::sync::Arc;

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

fn plans(n: usize) -> (Arc<dyn Fft<f64>>, Arc<dyn Fft<f64>>) {
    PLANNER.with(|p| {
        let mut p = p.borrow_mut();
        (p.plan_fft_forward(n), p.plan_fft_inverse(n))
    })
}

/// Signed integer frequency of DFT bin `m` on `n` points. The Nyquist bin of
/// an even `n` is reported as `−n/2`.
#[inline]
fn signed_frequency(m: usize, n: usize) -> f64 {
    if 2 * m < n {
        m as f64
    } else {
        m as f64 - n as f64
    }
}

/// Cached per-axis transforms and the Gaussian multiplier for one `(grid, h)`.
pub struct Convolver {
    grid: TorusGrid,
    h: f64,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    /// `2π m / Λ` per bin of one axis.
    wavenumbers: Vec<f64>,
    /// `exp(−h|k|²/2)` per cell.
    multiplier: Vec<f64>,
}

impl Convolver {
    pub fn new(grid: TorusGrid, h: f64) -> Result<Self, FieldError> {
        if !(h.is_finite() && h > 0.0) {
            return Err(FieldError::NonpositiveVariance(h));
        }
        let n = grid.n();
        let (forward, inverse) = plans(n);
        let wavenumbers: Vec<f64> = (0..n)
            .map(|m| 2.0 * std::f64::consts::PI * signed_frequency(m, n) / grid.side())
            .collect();
        let axis_factor: Vec<f64> = wavenumbers
            .iter()
            .map(|k| (-0.5 * h * k * k).exp())
            .collect();
        let multiplier = (0..grid.len())
            .map(|idx| {
                let c = grid.coords(idx);
                (0..grid.dim()).map(|a| axis_factor[c[a]]).product()
            })
            .collect();
        Ok(Self {
            grid,
            h,
            forward,
            inverse,
            wavenumbers,
            multiplier,
        })
    }

    pub fn grid(&self) -> &TorusGrid {
        &self.grid
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    fn check_len(&self, values: &[f64]) -> Result<(), FieldError> {
        if values.len() != self.grid.len() {
            return Err(FieldError::LengthMismatch {
                expected: self.grid.len(),
                got: values.len(),
            });
        }
        Ok(())
    }

    fn transform(&self, data: &mut [Complex64], inverse: bool) {
        let fft = if inverse { &self.inverse } else { &self.forward };
        fft_nd(&self.grid, fft.as_ref(), data);
        if inverse {
            let scale = 1.0 / self.grid.len() as f64;
            data.iter_mut().for_each(|z| *z *= scale);
        }
    }

    /// `G_h ∗ f`.
    pub fn convolve(&self, f: &[f64]) -> Result<Vec<f64>, FieldError> {
        let mut out = self.convolve_many(&[f])?;
        Ok(out.pop().expect("one field in, one out"))
    }

    /// `G_h ∗ f` for several fields, two per complex transform.
    pub fn convolve_many(&self, fields: &[&[f64]]) -> Result<Vec<Vec<f64>>, FieldError> {
        for f in fields {
            self.check_len(f)?;
        }
        let mut out = Vec::with_capacity(fields.len());
        let mut buf = vec![Complex64::new(0.0, 0.0); self.grid.len()];
        for pair in fields.chunks(2) {
            let second = pair.get(1);
            for (i, z) in buf.iter_mut().enumerate() {
                *z = Complex64::new(pair[0][i], second.map_or(0.0, |g| g[i]));
            }
            self.transform(&mut buf, false);
            for (z, m) in buf.iter_mut().zip(&self.multiplier) {
                *z *= *m;
            }
            self.transform(&mut buf, true);
            out.push(buf.iter().map(|z| z.re).collect());
            if second.is_some() {
                out.push(buf.iter().map(|z| z.im).collect());
            }
        }
        Ok(out)
    }

    /// Derivative multiplier `i·k_a` of bin `idx` along `axis`; zero at the
    /// Nyquist bin so that real fields stay real.
    #[inline]
    fn derivative_factor(&self, idx: usize, axis: usize) -> f64 {
        let n = self.grid.n();
        let m = self.grid.coords(idx)[axis];
        if n % 2 == 0 && 2 * m == n {
            0.0
        } else {
            self.wavenumbers[m]
        }
    }

    /// `∇(G_h ∗ f)`, one field per axis.
    pub fn gradient(&self, f: &[f64]) -> Result<Vec<Vec<f64>>, FieldError> {
        self.check_len(f)?;
        let mut spectrum: Vec<Complex64> = f.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.transform(&mut spectrum, false);
        let dim = self.grid.dim();
        let mut out = Vec::with_capacity(dim);
        let mut buf = vec![Complex64::new(0.0, 0.0); self.grid.len()];
        let mut axis = 0;
        while axis < dim {
            let paired = axis + 1 < dim;
            for (idx, z) in buf.iter_mut().enumerate() {
                let s = spectrum[idx] * self.multiplier[idx];
                // i·k·s for this axis, plus i·(i·k'·s) for the packed one.
                let mut v = Complex64::new(0.0, self.derivative_factor(idx, axis)) * s;
                if paired {
                    v += Complex64::new(-self.derivative_factor(idx, axis + 1), 0.0) * s;
                }
                *z = v;
            }
            self.transform(&mut buf, true);
            out.push(buf.iter().map(|z| z.re).collect());
            if paired {
                out.push(buf.iter().map(|z| z.im).collect());
            }
            axis += 2;
        }
        Ok(out)
    }

    /// `Σ_a ∂_a (G_h ∗ g_a)` for one field per axis.
    pub fn divergence(&self, components: &[&[f64]]) -> Result<Vec<f64>, FieldError> {
        if components.len() != self.grid.dim() {
            return Err(FieldError::LengthMismatch {
                expected: self.grid.dim(),
                got: components.len(),
            });
        }
        for c in components {
            self.check_len(c)?;
        }
        let len = self.grid.len();
        let mut acc = vec![Complex64::new(0.0, 0.0); len];
        let mut buf = vec![Complex64::new(0.0, 0.0); len];
        for (axis, comp) in components.iter().enumerate() {
            for (z, &v) in buf.iter_mut().zip(comp.iter()) {
                *z = Complex64::new(v, 0.0);
            }
            self.transform(&mut buf, false);
            for (idx, (a, z)) in acc.iter_mut().zip(&buf).enumerate() {
                *a += Complex64::new(0.0, self.derivative_factor(idx, axis) * self.multiplier[idx]) * z;
            }
        }
        self.transform(&mut acc, true);
        Ok(acc.into_iter().map(|z| z.re).collect())
    }

    /// Spectral derivative `∂_a f` without smoothing.
    pub fn derivative(&self, f: &[f64], axis: usize) -> Result<Vec<f64>, FieldError> {
        self.check_len(f)?;
        let mut buf: Vec<Complex64> = f.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.transform(&mut buf, false);
        for (idx, z) in buf.iter_mut().enumerate() {
            *z *= Complex64::new(0.0, self.derivative_factor(idx, axis));
        }
        self.transform(&mut buf, true);
        Ok(buf.into_iter().map(|z| z.re).collect())
    }
}

/// In-place unnormalized d-dimensional transform, one axis at a time.
fn fft_nd(grid: &TorusGrid, fft: &dyn Fft<f64>, data: &mut [Complex64]) {
    let n = grid.n();
    let mut scratch = vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
    for axis in 0..grid.dim() {
        let stride = grid.stride(axis);
        if stride == 1 {
            fft.process_with_scratch(data, &mut scratch);
            continue;
        }
        // Gather each block's columns into contiguous lines, transform, scatter.
        let block = n * stride;
        let mut lines = vec![Complex64::new(0.0, 0.0); block];
        for chunk in data.chunks_mut(block) {
            for k in 0..n {
                let row = &chunk[k * stride..(k + 1) * stride];
                for (s, &v) in row.iter().enumerate() {
                    lines[s * n + k] = v;
                }
            }
            fft.process_with_scratch(&mut lines, &mut scratch);
            for k in 0..n {
                let row = &mut chunk[k * stride..(k + 1) * stride];
                for (s, v) in row.iter_mut().enumerate() {
                    *v = lines[s * n + k];
                }
            }
        }
    }
}

/// `G_h ∗ f` on the torus.
pub fn gaussian_convolve(f: &ScalarField, h: f64) -> Result<ScalarField, FieldError> {
    let conv = Convolver::new(*f.grid(), h)?;
    ScalarField::new(*f.grid(), conv.convolve(f.values())?)
}

/// `∇(G_h ∗ f) = (∇G_h) ∗ f`, one field per axis.
pub fn gradient_convolve(f: &ScalarField, h: f64) -> Result<Vec<ScalarField>, FieldError> {
    let conv = Convolver::new(*f.grid(), h)?;
    conv.gradient(f.values())?
        .into_iter()
        .map(|v| ScalarField::new(*f.grid(), v))
        .collect()
}

/// `Σ_a ∂_a (G_h ∗ g_a)`.
pub fn divergence_convolve(components: &[ScalarField], h: f64) -> Result<ScalarField, FieldError> {
    let grid = *components
        .first()
        .ok_or(FieldError::LengthMismatch { expected: 1, got: 0 })?
        .grid();
    if components.iter().any(|c| *c.grid() != grid) {
        return Err(FieldError::GridMismatch);
    }
    let conv = Convolver::new(grid, h)?;
    let refs: Vec<&[f64]> = components.iter().map(|c| c.values()).collect();
    ScalarField::new(grid, conv.divergence(&refs)?)
}
