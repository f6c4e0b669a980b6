//! Approximate energies, the metric term, localized functionals, inner
//! variations and dissipation measures.
//!
//! All integrals are midpoint sums over cells. With `u_j = G_h ∗ χ_j` and
//! `φ_i = Σ_j σ_ij u_j`, the approximate energy is
//! `E_h(χ) = (1/√h) Σ_ij σ_ij ∫ χ_i u_j = (1/√h) ∫ φ_{label(x)}(x) dx`.

use crate::error::{MboError, Result};
use crate::fields::{Convolver, FieldError, Partition, ScalarField, TorusGrid};
use crate::scheme::{StepContext, StepObserver, Trajectory};
use crate::tensions::SurfaceTensionMatrix;
use std::io::Write;

/// `c₀ = 1/√(2π)`: `E_h → 2c₀·σ·(interface area)` for a single interface.
pub const C0: f64 = 0.398_942_280_401_432_7;

/// Per-step data of a thresholding run.
#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    pub n: usize,
    pub time: f64,
    /// `E_h(χⁿ)`.
    pub energy: f64,
    /// `−E_h(χⁿ − χⁿ⁻¹)`.
    pub dissipation: f64,
    pub volumes: Vec<f64>,
    pub changed_cells: usize,
    /// Cells where the two smallest `φ_i` were within the tie tolerance.
    pub tie_cells: usize,
    pub elg_residual: Option<f64>,
}

pub(crate) fn check_phases(chi: &Partition, sigma: &SurfaceTensionMatrix) -> Result<()> {
    if chi.phases() != sigma.phases() {
        return Err(MboError::PhaseCountMismatch {
            sigma: sigma.phases(),
            partition: chi.phases(),
        });
    }
    Ok(())
}

fn check_grid(conv: &Convolver, grid: &TorusGrid) -> Result<()> {
    if conv.grid() != grid {
        return Err(FieldError::GridMismatch.into());
    }
    Ok(())
}

/// `u_j = G_h ∗ χ_j` for every phase.
pub fn phase_convolutions(conv: &Convolver, chi: &Partition) -> Result<Vec<Vec<f64>>> {
    check_grid(conv, chi.grid())?;
    let indicators: Vec<Vec<f64>> = (0..chi.phases()).map(|i| chi.indicator_values(i)).collect();
    let refs: Vec<&[f64]> = indicators.iter().map(Vec::as_slice).collect();
    Ok(conv.convolve_many(&refs)?)
}

/// `Σ_ij σ_ij χ_i(x) f_j(x)` summed over cells with weights.
fn label_pairing(chi: &Partition, f: &[Vec<f64>], sigma: &SurfaceTensionMatrix, weight: Option<&[f64]>) -> f64 {
    let mut acc = 0.0;
    for idx in 0..chi.labels().len() {
        let row = sigma.row(chi.label(idx));
        let mut local = 0.0;
        for (s, fj) in row.iter().zip(f) {
            local += s * fj[idx];
        }
        acc += weight.map_or(local, |w| w[idx] * local);
    }
    acc
}

/// `E_h(χ)` from precomputed phase convolutions.
pub fn energy_from_convolutions(chi: &Partition, u: &[Vec<f64>], sigma: &SurfaceTensionMatrix, h: f64) -> f64 {
    label_pairing(chi, u, sigma, None) * chi.grid().cell_volume() / h.sqrt()
}

/// `E_h(χ) = (1/√h) Σ_ij σ_ij ∫ χ_i G_h∗χ_j dx`, both ordered pairs counted.
pub fn approximate_energy(chi: &Partition, h: f64, sigma: &SurfaceTensionMatrix) -> Result<f64> {
    check_phases(chi, sigma)?;
    let conv = Convolver::new(*chi.grid(), h)?;
    approximate_energy_with(&conv, chi, sigma)
}

pub fn approximate_energy_with(conv: &Convolver, chi: &Partition, sigma: &SurfaceTensionMatrix) -> Result<f64> {
    check_phases(chi, sigma)?;
    let u = phase_convolutions(conv, chi)?;
    Ok(energy_from_convolutions(chi, &u, sigma, conv.h()))
}

/// Two-phase form `(2σ₁₂/√h) ∫ (1 − χ) G_h∗χ dx` with `χ` the phase-1
/// indicator.
pub fn two_phase_energy(chi: &Partition, h: f64, sigma12: f64) -> Result<f64> {
    if chi.phases() != 2 {
        return Err(MboError::PhaseCountMismatch {
            sigma: 2,
            partition: chi.phases(),
        });
    }
    let conv = Convolver::new(*chi.grid(), h)?;
    let u = conv.convolve(&chi.indicator_values(1))?;
    let acc: f64 = chi
        .labels()
        .iter()
        .zip(&u)
        .filter(|(&l, _)| l == 0)
        .map(|(_, v)| v)
        .sum();
    Ok(2.0 * sigma12 * acc * chi.grid().cell_volume() / h.sqrt())
}

/// `−(1/√h) Σ_ij σ_ij ∫ ω_i G_h∗ω_j` for `ω_i = χ_i − χ'_i`, given
/// `du_j = G_h ∗ ω_j`. Only cells whose label changed carry `ω ≠ 0`.
pub(crate) fn metric_from_increments(
    chi: &Partition,
    prev: &Partition,
    du: &[Vec<f64>],
    sigma: &SurfaceTensionMatrix,
    h: f64,
) -> f64 {
    let mut acc = 0.0;
    for (idx, (&a, &b)) in chi.labels().iter().zip(prev.labels()).enumerate() {
        if a == b {
            continue;
        }
        let (ra, rb) = (sigma.row(a as usize), sigma.row(b as usize));
        for j in 0..du.len() {
            acc += (ra[j] - rb[j]) * du[j][idx];
        }
    }
    -acc * chi.grid().cell_volume() / h.sqrt()
}

fn increments(chi: &Partition, prev: &Partition) -> Vec<Vec<f64>> {
    (0..chi.phases())
        .map(|i| {
            chi.labels()
                .iter()
                .zip(prev.labels())
                .map(|(&a, &b)| (a as usize == i) as i32 as f64 - (b as usize == i) as i32 as f64)
                .collect()
        })
        .collect()
}

/// The metric term `−E_h(χ − χ')`: nonnegative, zero iff `χ = χ'`.
pub fn metric_term(chi: &Partition, prev: &Partition, h: f64, sigma: &SurfaceTensionMatrix) -> Result<f64> {
    let conv = Convolver::new(*chi.grid(), h)?;
    metric_term_with(&conv, chi, prev, sigma)
}

pub fn metric_term_with(
    conv: &Convolver,
    chi: &Partition,
    prev: &Partition,
    sigma: &SurfaceTensionMatrix,
) -> Result<f64> {
    chi.check_compatible(prev)?;
    check_phases(chi, sigma)?;
    check_grid(conv, chi.grid())?;
    let omega = increments(chi, prev);
    let refs: Vec<&[f64]> = omega.iter().map(Vec::as_slice).collect();
    let du = conv.convolve_many(&refs)?;
    Ok(metric_from_increments(chi, prev, &du, sigma, conv.h()))
}

/// `(σ̲/√h) Σ_i ‖G_{h/2} ∗ ω_i‖²_{L²}`, the lower bound on the metric term
/// coming from conditional negative-definiteness.
pub fn metric_lower_bound(chi: &Partition, prev: &Partition, h: f64, sigma: &SurfaceTensionMatrix) -> Result<f64> {
    chi.check_compatible(prev)?;
    check_phases(chi, sigma)?;
    let conv = Convolver::new(*chi.grid(), h / 2.0)?;
    let omega = increments(chi, prev);
    let refs: Vec<&[f64]> = omega.iter().map(Vec::as_slice).collect();
    let smoothed = conv.convolve_many(&refs)?;
    let norm2: f64 = smoothed.iter().flatten().map(|v| v * v).sum();
    Ok(sigma.sigma_lower() * norm2 * chi.grid().cell_volume() / h.sqrt())
}

/// `(1/√h) Σ_ij σ_ij ∫ ζ χ_i G_h∗χ_j dx` for a nonnegative weight `ζ`.
pub fn localized_energy(
    chi: &Partition,
    zeta: &ScalarField,
    h: f64,
    sigma: &SurfaceTensionMatrix,
) -> Result<f64> {
    check_phases(chi, sigma)?;
    if zeta.grid() != chi.grid() {
        return Err(FieldError::GridMismatch.into());
    }
    if zeta.values().iter().any(|&z| z < 0.0) {
        return Err(MboError::NegativeWeight);
    }
    let conv = Convolver::new(*chi.grid(), h)?;
    let u = phase_convolutions(&conv, chi)?;
    Ok(label_pairing(chi, &u, sigma, Some(zeta.values())) * chi.grid().cell_volume() / h.sqrt())
}

/// Outcome of the per-step and cumulative energy-dissipation inequalities.
#[derive(Debug, Clone, PartialEq)]
pub struct DissipationReport {
    pub tolerance: f64,
    /// `E_h(χⁿ⁻¹) − E_h(χⁿ) − dissipationₙ` for `n = 1..=N`.
    pub step_margins: Vec<f64>,
    /// `E_h(χ⁰) − E_h(χᴺ) − Σ dissipationₙ`.
    pub cumulative_margin: f64,
    pub min_dissipation: f64,
    /// Steps violating either inequality.
    pub violations: Vec<usize>,
}

impl DissipationReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty() && self.cumulative_margin >= -self.tolerance
    }

    pub fn min_margin(&self) -> f64 {
        self.step_margins.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

/// Checks `E_h(χⁿ) + dissipationₙ ≤ E_h(χⁿ⁻¹) + tol` for every step and its
/// telescoped sum, with `tol = 1e−8·E_h(χ⁰)`, plus `dissipationₙ ≥ −1e−10`.
pub fn energy_dissipation_check(traj: &Trajectory) -> DissipationReport {
    let tolerance = 1e-8 * traj.initial_energy().abs();
    let mut prev = traj.initial_energy();
    let mut step_margins = Vec::with_capacity(traj.records().len());
    let mut violations = Vec::new();
    let mut total = 0.0;
    let mut min_dissipation = f64::INFINITY;
    for r in traj.records() {
        let margin = prev - r.energy - r.dissipation;
        if margin < -tolerance || r.dissipation < -1e-10 {
            violations.push(r.n);
        }
        step_margins.push(margin);
        total += r.dissipation;
        min_dissipation = min_dissipation.min(r.dissipation);
        prev = r.energy;
    }
    DissipationReport {
        tolerance,
        step_margins,
        cumulative_margin: traj.initial_energy() - prev - total,
        min_dissipation: if min_dissipation.is_finite() { min_dissipation } else { 0.0 },
        violations,
    }
}

/// One `(h, h₀)` comparison of the approximate-monotonicity inequality.
#[derive(Debug, Clone, PartialEq)]
pub struct MonotonicityPair {
    pub h: f64,
    pub h0: f64,
    pub energy_h: f64,
    pub energy_h0: f64,
    /// `(√h₀/(√h + √h₀))^{d+1}`.
    pub factor: f64,
    /// `E_h − factor·E_{h₀}`.
    pub slack: f64,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MonotonicityReport {
    pub pairs: Vec<MonotonicityPair>,
}

impl MonotonicityReport {
    pub fn passed(&self) -> bool {
        self.pairs.iter().all(|p| p.holds)
    }
}

/// Requires `√h ≥ 3·dx`.
pub fn ensure_resolved(grid: &TorusGrid, h: f64) -> Result<()> {
    let required = 3.0 * grid.dx();
    if h.sqrt() < required {
        return Err(MboError::UnresolvedScale {
            scale: h.sqrt(),
            required,
        });
    }
    Ok(())
}

/// Checks `E_h(χ) ≥ (√h₀/(√h + √h₀))^{d+1} E_{h₀}(χ)` for every pair
/// `h ≤ h₀` of `h_list`, relative tolerance `1e−6`.
pub fn approximate_monotonicity_check(
    chi: &Partition,
    h_list: &[f64],
    sigma: &SurfaceTensionMatrix,
) -> Result<MonotonicityReport> {
    for &h in h_list {
        ensure_resolved(chi.grid(), h)?;
    }
    let energies = h_list
        .iter()
        .map(|&h| approximate_energy(chi, h, sigma))
        .collect::<Result<Vec<_>>>()?;
    let d = chi.grid().dim() as i32;
    let mut pairs = Vec::new();
    for (a, (&h, &eh)) in h_list.iter().zip(&energies).enumerate() {
        for (b, (&h0, &eh0)) in h_list.iter().zip(&energies).enumerate() {
            if a == b || h > h0 {
                continue;
            }
            let factor = (h0.sqrt() / (h.sqrt() + h0.sqrt())).powi(d + 1);
            let slack = eh - factor * eh0;
            pairs.push(MonotonicityPair {
                h,
                h0,
                energy_h: eh,
                energy_h0: eh0,
                factor,
                slack,
                holds: slack >= -1e-6 * (factor * eh0).abs(),
            });
        }
    }
    Ok(MonotonicityReport { pairs })
}

fn check_vector_field(grid: &TorusGrid, xi: &[ScalarField]) -> Result<()> {
    if xi.len() != grid.dim() {
        return Err(MboError::VectorFieldDimension {
            expected: grid.dim(),
            got: xi.len(),
        });
    }
    if xi.iter().any(|c| c.grid() != grid) {
        return Err(FieldError::GridMismatch.into());
    }
    Ok(())
}

/// `w_j = G_h ∗ (−∇χ_j · ξ)` in divergence form:
/// `−Σ_k ∂_k G_h∗(χ_j ξ_k) + G_h∗(χ_j ∇·ξ)`.
fn transport_convolutions(conv: &Convolver, chi: &Partition, xi: &[ScalarField]) -> Result<Vec<Vec<f64>>> {
    let grid = chi.grid();
    let mut div_xi = vec![0.0; grid.len()];
    for (k, comp) in xi.iter().enumerate() {
        for (d, v) in div_xi.iter_mut().zip(conv.derivative(comp.values(), k)?) {
            *d += v;
        }
    }
    let mut out = Vec::with_capacity(chi.phases());
    for j in 0..chi.phases() {
        let ind = chi.indicator_values(j);
        let flux: Vec<Vec<f64>> = xi
            .iter()
            .map(|c| ind.iter().zip(c.values()).map(|(a, b)| a * b).collect())
            .collect();
        let refs: Vec<&[f64]> = flux.iter().map(Vec::as_slice).collect();
        let transported = conv.divergence(&refs)?;
        let source: Vec<f64> = ind.iter().zip(&div_xi).map(|(a, b)| a * b).collect();
        let smoothed = conv.convolve(&source)?;
        out.push(smoothed.iter().zip(&transported).map(|(s, t)| s - t).collect());
    }
    Ok(out)
}

/// Inner variation `δE_h(χ, ξ) = (2/√h) Σ_ij σ_ij ∫ χ_i G_h∗(−∇χ_j·ξ) dx`.
pub fn first_variation_energy(
    chi: &Partition,
    xi: &[ScalarField],
    h: f64,
    sigma: &SurfaceTensionMatrix,
) -> Result<f64> {
    check_phases(chi, sigma)?;
    check_vector_field(chi.grid(), xi)?;
    let conv = Convolver::new(*chi.grid(), h)?;
    let w = transport_convolutions(&conv, chi, xi)?;
    Ok(2.0 * label_pairing(chi, &w, sigma, None) * chi.grid().cell_volume() / h.sqrt())
}

/// Inner variation of the metric term at `χ`:
/// `(2/√h) Σ_ij σ_ij ∫ (χ_i − χ̃_i) G_h∗(∇χ_j·ξ) dx`.
pub fn first_variation_metric(
    chi: &Partition,
    prev: &Partition,
    xi: &[ScalarField],
    h: f64,
    sigma: &SurfaceTensionMatrix,
) -> Result<f64> {
    chi.check_compatible(prev)?;
    check_phases(chi, sigma)?;
    check_vector_field(chi.grid(), xi)?;
    let conv = Convolver::new(*chi.grid(), h)?;
    let w = transport_convolutions(&conv, chi, xi)?;
    let current = label_pairing(chi, &w, sigma, None);
    let previous = label_pairing(prev, &w, sigma, None);
    Ok(-2.0 * (current - previous) * chi.grid().cell_volume() / h.sqrt())
}

/// Both inner variations of the minimizing-movements objective at `χ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EulerLagrange {
    pub energy_variation: f64,
    pub metric_variation: f64,
}

impl EulerLagrange {
    /// Variation of `E_h(·) − E_h(· − χ̃)`; zero at an exact minimizer.
    pub fn residual(&self) -> f64 {
        self.energy_variation + self.metric_variation
    }
}

pub fn euler_lagrange(
    chi: &Partition,
    prev: &Partition,
    xi: &[ScalarField],
    h: f64,
    sigma: &SurfaceTensionMatrix,
) -> Result<EulerLagrange> {
    let conv = Convolver::new(*chi.grid(), h)?;
    euler_lagrange_with(&conv, chi, prev, xi, sigma)
}

pub(crate) fn euler_lagrange_with(
    conv: &Convolver,
    chi: &Partition,
    prev: &Partition,
    xi: &[ScalarField],
    sigma: &SurfaceTensionMatrix,
) -> Result<EulerLagrange> {
    chi.check_compatible(prev)?;
    check_phases(chi, sigma)?;
    check_vector_field(chi.grid(), xi)?;
    let w = transport_convolutions(conv, chi, xi)?;
    let scale = 2.0 * chi.grid().cell_volume() / conv.h().sqrt();
    let current = label_pairing(chi, &w, sigma, None);
    let previous = label_pairing(prev, &w, sigma, None);
    Ok(EulerLagrange {
        energy_variation: scale * current,
        metric_variation: -scale * (current - previous),
    })
}

/// Space density of the approximate dissipation measure over a time window.
#[derive(Debug, Clone, PartialEq)]
pub struct DissipationDensity {
    pub grid: TorusGrid,
    pub density: Vec<f64>,
    pub total: f64,
    pub steps: usize,
}

impl DissipationDensity {
    /// `∫ ζ dμ_h` for a time-independent `ζ` on the window.
    pub fn pair(&self, zeta: &ScalarField) -> Result<f64> {
        if zeta.grid() != &self.grid {
            return Err(FieldError::GridMismatch.into());
        }
        Ok(crate::fields::dot(&self.density, zeta.values()) * self.grid.cell_volume())
    }
}

/// Accumulates `Σₙ (1/√h) (|G_{h/2}∗(χⁿ−χⁿ⁻¹)|² + |G_h∗(χⁿ−χⁿ⁻¹)|²)` over
/// steps whose midpoint time `(n − 1/2)h` falls in the window, and optionally
/// the part of each step's mass within `radius` of the interface.
pub struct DissipationAccumulator {
    window: (f64, f64),
    half: Convolver,
    density: Vec<f64>,
    steps: usize,
    radius: Option<f64>,
    near_mass: f64,
    total_mass: f64,
}

impl DissipationAccumulator {
    pub fn new(grid: TorusGrid, h: f64, window: (f64, f64)) -> Result<Self> {
        Ok(Self {
            window,
            half: Convolver::new(grid, h / 2.0)?,
            density: vec![0.0; grid.len()],
            steps: 0,
            radius: None,
            near_mass: 0.0,
            total_mass: 0.0,
        })
    }

    /// Also track the fraction of mass within `radius` of the interfaces of
    /// `χⁿ⁻¹` and `χⁿ`.
    pub fn with_localization(mut self, radius: f64) -> Self {
        self.radius = Some(radius);
        self
    }

    fn h(&self) -> f64 {
        2.0 * self.half.h()
    }

    /// Adds one step given `G_h ∗ (χⁿ − χⁿ⁻¹)` per phase.
    pub fn accumulate(&mut self, n: usize, prev: &Partition, next: &Partition, smoothed: &[Vec<f64>]) -> Result<()> {
        let h = self.h();
        let t_mid = (n as f64 - 0.5) * h;
        if t_mid < self.window.0 || t_mid > self.window.1 {
            return Ok(());
        }
        self.steps += 1;
        if prev.labels() == next.labels() {
            return Ok(());
        }
        let omega = increments(next, prev);
        let refs: Vec<&[f64]> = omega.iter().map(Vec::as_slice).collect();
        let half = self.half.convolve_many(&refs)?;
        let scale = 1.0 / h.sqrt();
        let mut step_density = vec![0.0; self.density.len()];
        for (a, b) in half.iter().zip(smoothed) {
            for (idx, d) in step_density.iter_mut().enumerate() {
                *d += scale * (a[idx] * a[idx] + b[idx] * b[idx]);
            }
        }
        let cv = prev.grid().cell_volume();
        if let Some(radius) = self.radius {
            let mut seeds = prev.interface_cells();
            seeds.extend(next.interface_cells());
            let mask = neighbourhood_mask(prev.grid(), &seeds, radius);
            for (d, &inside) in step_density.iter().zip(&mask) {
                self.total_mass += d * cv;
                if inside {
                    self.near_mass += d * cv;
                }
            }
        }
        for (acc, d) in self.density.iter_mut().zip(&step_density) {
            *acc += d;
        }
        Ok(())
    }

    /// Fraction of the accumulated mass within the localization radius
    /// (1 when nothing has been dissipated).
    pub fn localized_fraction(&self) -> Option<f64> {
        self.radius.map(|_| {
            if self.total_mass > 0.0 {
                self.near_mass / self.total_mass
            } else {
                1.0
            }
        })
    }

    pub fn finish(&self) -> DissipationDensity {
        let grid = *self.half.grid();
        let total = self.density.iter().sum::<f64>() * grid.cell_volume();
        DissipationDensity {
            grid,
            density: self.density.clone(),
            total,
            steps: self.steps,
        }
    }
}

impl StepObserver for DissipationAccumulator {
    fn observe(&mut self, ctx: &StepContext<'_>) -> Result<()> {
        let smoothed: Vec<Vec<f64>> = ctx
            .next_convolutions
            .iter()
            .zip(ctx.prev_convolutions)
            .map(|(a, b)| a.iter().zip(b).map(|(x, y)| x - y).collect())
            .collect();
        self.accumulate(ctx.n, ctx.prev, ctx.next, &smoothed)
    }
}

/// Dissipation measure of a densely stored trajectory (snapshot stride 1).
pub fn dissipation_measure(traj: &Trajectory, window: (f64, f64)) -> Result<DissipationDensity> {
    if traj.stride() != 1 {
        return Err(MboError::InsufficientSnapshots(format!(
            "stride {} (need every step)",
            traj.stride()
        )));
    }
    let snaps = traj.snapshots();
    let grid = *snaps[0].1.grid();
    let h = traj.h();
    let conv = Convolver::new(grid, h)?;
    let mut acc = DissipationAccumulator::new(grid, h, window)?;
    for pair in snaps.windows(2) {
        let (prev, next) = (&pair[0].1, &pair[1].1);
        let omega = increments(next, prev);
        let refs: Vec<&[f64]> = omega.iter().map(Vec::as_slice).collect();
        let smoothed = conv.convolve_many(&refs)?;
        acc.accumulate(pair[1].0, prev, next, &smoothed)?;
    }
    Ok(acc.finish())
}

/// Cells within Euclidean distance `radius` of any seed cell (periodic).
pub fn neighbourhood_mask(grid: &TorusGrid, seeds: &[usize], radius: f64) -> Vec<bool> {
    let dx = grid.dx();
    let reach = (radius / dx).floor() as isize;
    let r2 = (radius / dx).powi(2);
    let dim = grid.dim();
    let mut offsets = Vec::new();
    let span = |a: usize| if a < dim { -reach..=reach } else { 0..=0 };
    for i in span(0) {
        for j in span(1) {
            for k in span(2) {
                if ((i * i + j * j + k * k) as f64) <= r2 {
                    offsets.push([i, j, k]);
                }
            }
        }
    }
    let mut mask = vec![false; grid.len()];
    for &s in seeds {
        let c = grid.coords(s);
        for o in &offsets {
            let t = [c[0] as isize + o[0], c[1] as isize + o[1], c[2] as isize + o[2]];
            mask[grid.index_wrapped(t)] = true;
        }
    }
    mask
}

/// Sharp-interface energy `2c₀·σ·area` of flat or spherical interfaces.
pub mod reference {
    use super::C0;
    use std::f64::consts::PI;

    /// `2c₀ σ · area`.
    pub fn flat_interface_energy(area: f64, sigma: f64) -> f64 {
        2.0 * C0 * sigma * area
    }

    /// Surface measure of the sphere of radius `r` in `d` dimensions.
    pub fn sphere_area(dim: usize, r: f64) -> f64 {
        match dim {
            1 => 2.0,
            2 => 2.0 * PI * r,
            3 => 4.0 * PI * r * r,
            _ => f64::NAN,
        }
    }

    /// Volume of the unit ball `ω_d`.
    pub fn unit_ball_volume(dim: usize) -> f64 {
        match dim {
            0 => 1.0,
            1 => 2.0,
            2 => PI,
            3 => 4.0 * PI / 3.0,
            _ => f64::NAN,
        }
    }

    pub fn sphere_energy(dim: usize, r: f64, sigma: f64) -> f64 {
        flat_interface_energy(sphere_area(dim, r), sigma)
    }
}

/// Writes `n,t,Eh,dissipation,vol_1..vol_P,elg_residual`, starting with the
/// initial state as `n = 0`.
pub fn write_records_csv<W: Write>(traj: &Trajectory, mut out: W) -> std::io::Result<()> {
    let phases = traj.phases();
    let mut header = String::from("n,t,Eh,dissipation");
    for i in 1..=phases {
        header.push_str(&format!(",vol_{i}"));
    }
    header.push_str(",elg_residual");
    writeln!(out, "{header}")?;
    let vols = |v: &[f64]| v.iter().map(|x| format!("{x:e}")).collect::<Vec<_>>().join(",");
    writeln!(
        out,
        "0,0,{:e},0,{},",
        traj.initial_energy(),
        vols(traj.initial_volumes())
    )?;
    for r in traj.records() {
        let elg = r.elg_residual.map(|v| format!("{v:e}")).unwrap_or_default();
        writeln!(
            out,
            "{},{:e},{:e},{:e},{},{}",
            r.n,
            r.time,
            r.energy,
            r.dissipation,
            vols(&r.volumes),
            elg
        )?;
    }
    Ok(())
}
