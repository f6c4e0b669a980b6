//! The thresholding scheme: one step, full runs with observers, and a
//! brute-force minimizing-movements oracle for tiny 1-D grids.

use crate::energetics::{
    check_phases, energy_from_convolutions, euler_lagrange_with, metric_from_increments, phase_convolutions,
    StepRecord,
};
use crate::error::{MboError, Result};
use crate::fields::{Convolver, FieldError, Partition, ScalarField, TorusGrid};
use crate::tensions::SurfaceTensionMatrix;

/// Relative gap (in units of `σ_max`) below which two `φ_i` count as tied.
pub const TIE_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TieRule {
    /// Lowest phase index among the tied minimizers.
    #[default]
    SmallestIndex,
    /// Previous label if it is among the tied minimizers, else the lowest.
    KeepPrevious,
}

#[derive(Debug, Clone)]
pub struct SchemeConfig {
    pub grid: TorusGrid,
    pub sigma: SurfaceTensionMatrix,
    pub h: f64,
    pub steps: usize,
    pub alpha: f64,
    pub tie_rule: TieRule,
    pub snapshot_stride: usize,
    /// Test field for the per-step Euler–Lagrange residual.
    pub elg_probe: Option<Vec<ScalarField>>,
}

impl SchemeConfig {
    /// `horizon` must be an integer multiple of `h`.
    pub fn new(grid: TorusGrid, sigma: SurfaceTensionMatrix, h: f64, horizon: f64) -> Result<Self> {
        if !(h.is_finite() && h > 0.0) {
            return Err(FieldError::NonpositiveVariance(h).into());
        }
        if !(horizon.is_finite() && horizon >= 0.0) {
            return Err(MboError::InvalidConfig(format!("horizon {horizon} must be nonnegative")));
        }
        let steps = (horizon / h).round();
        if (steps * h - horizon).abs() > 1e-9 * horizon.max(h) {
            return Err(MboError::InvalidConfig(format!(
                "horizon {horizon} is not a multiple of h = {h}"
            )));
        }
        Self::with_steps(grid, sigma, h, steps as usize)
    }

    pub fn with_steps(grid: TorusGrid, sigma: SurfaceTensionMatrix, h: f64, steps: usize) -> Result<Self> {
        if !(h.is_finite() && h > 0.0) {
            return Err(FieldError::NonpositiveVariance(h).into());
        }
        let mut cfg = Self {
            grid,
            sigma,
            h,
            steps,
            alpha: 1.0,
            tie_rule: TieRule::default(),
            snapshot_stride: 1,
            elg_probe: None,
        };
        cfg.snapshot_stride = cfg.mesoscopic_steps();
        Ok(cfg)
    }

    pub fn with_alpha(mut self, alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha <= 2.0) {
            return Err(MboError::InvalidConfig(format!("alpha {alpha} outside (0, 2]")));
        }
        self.alpha = alpha;
        self.snapshot_stride = self.mesoscopic_steps();
        Ok(self)
    }

    pub fn with_tie_rule(mut self, rule: TieRule) -> Self {
        self.tie_rule = rule;
        self
    }

    pub fn with_snapshot_stride(mut self, stride: usize) -> Self {
        self.snapshot_stride = stride.max(1);
        self
    }

    pub fn with_elg_probe(mut self, xi: Vec<ScalarField>) -> Self {
        self.elg_probe = Some(xi);
        self
    }

    pub fn horizon(&self) -> f64 {
        self.steps as f64 * self.h
    }

    /// `τ = α√h`.
    pub fn mesoscopic_time(&self) -> f64 {
        self.alpha * self.h.sqrt()
    }

    /// `K = max(1, round(τ/h))` steps per mesoscopic interval.
    pub fn mesoscopic_steps(&self) -> usize {
        ((self.mesoscopic_time() / self.h).round() as usize).max(1)
    }
}

/// Labels after one step plus the number of tied cells.
#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub next: Partition,
    pub tie_cells: usize,
}

/// Thresholds `φ_i = Σ_j σ_ij u_j` cellwise, given `u_j = G_h ∗ χ_j`.
pub fn threshold_from_convolutions(
    prev: &Partition,
    u: &[Vec<f64>],
    sigma: &SurfaceTensionMatrix,
    rule: TieRule,
) -> StepOutcome {
    let phases = sigma.phases();
    let tol = TIE_TOLERANCE * sigma.sigma_max();
    let mut phi = vec![0.0; phases];
    let mut tie_cells = 0;
    let labels = (0..prev.labels().len())
        .map(|idx| {
            for (i, p) in phi.iter_mut().enumerate() {
                let row = sigma.row(i);
                *p = (0..phases).map(|j| row[j] * u[j][idx]).sum();
            }
            let min = phi.iter().copied().fold(f64::INFINITY, f64::min);
            let mut chosen = None;
            let mut tied = 0;
            for (i, &p) in phi.iter().enumerate() {
                if p <= min + tol {
                    tied += 1;
                    if chosen.is_none() {
                        chosen = Some(i);
                    }
                }
            }
            let mut label = chosen.unwrap_or(0);
            if tied > 1 {
                tie_cells += 1;
                let old = prev.label(idx);
                if rule == TieRule::KeepPrevious && phi[old] <= min + tol {
                    label = old;
                }
            }
            label as u8
        })
        .collect();
    StepOutcome {
        next: Partition::new(*prev.grid(), phases, labels).expect("labels below the phase count"),
        tie_cells,
    }
}

fn check_config(chi: &Partition, cfg: &SchemeConfig) -> Result<()> {
    if chi.grid() != &cfg.grid {
        return Err(FieldError::GridMismatch.into());
    }
    check_phases(chi, &cfg.sigma)
}

/// One convolution-and-thresholding step.
pub fn threshold_step(chi_prev: &Partition, cfg: &SchemeConfig) -> Result<Partition> {
    Ok(threshold_step_detailed(chi_prev, cfg)?.next)
}

pub fn threshold_step_detailed(chi_prev: &Partition, cfg: &SchemeConfig) -> Result<StepOutcome> {
    check_config(chi_prev, cfg)?;
    let conv = Convolver::new(cfg.grid, cfg.h)?;
    let u = phase_convolutions(&conv, chi_prev)?;
    Ok(threshold_from_convolutions(chi_prev, &u, &cfg.sigma, cfg.tie_rule))
}

/// Everything an observer sees after step `n`.
pub struct StepContext<'a> {
    pub n: usize,
    pub h: f64,
    pub sigma: &'a SurfaceTensionMatrix,
    pub prev: &'a Partition,
    pub next: &'a Partition,
    /// `G_h ∗ χ_j^{n−1}`.
    pub prev_convolutions: &'a [Vec<f64>],
    /// `G_h ∗ χ_j^n`.
    pub next_convolutions: &'a [Vec<f64>],
    pub record: &'a StepRecord,
}

pub trait StepObserver {
    fn observe(&mut self, ctx: &StepContext<'_>) -> Result<()>;
}

impl<F: FnMut(&StepContext<'_>) -> Result<()>> StepObserver for F {
    fn observe(&mut self, ctx: &StepContext<'_>) -> Result<()> {
        self(ctx)
    }
}

/// A finished run: per-step records and snapshots every `stride` steps.
#[derive(Debug, Clone)]
pub struct Trajectory {
    grid: TorusGrid,
    phases: usize,
    h: f64,
    initial_energy: f64,
    initial_volumes: Vec<f64>,
    records: Vec<StepRecord>,
    snapshots: Vec<(usize, Partition)>,
    stride: usize,
    last: Partition,
}

impl Trajectory {
    pub fn grid(&self) -> &TorusGrid {
        &self.grid
    }

    pub fn phases(&self) -> usize {
        self.phases
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn steps(&self) -> usize {
        self.records.len()
    }

    pub fn horizon(&self) -> f64 {
        self.records.len() as f64 * self.h
    }

    pub fn initial_energy(&self) -> f64 {
        self.initial_energy
    }

    pub fn initial_volumes(&self) -> &[f64] {
        &self.initial_volumes
    }

    pub fn records(&self) -> &[StepRecord] {
        &self.records
    }

    /// `(n, χⁿ)` for `n = 0, stride, 2·stride, …`.
    pub fn snapshots(&self) -> &[(usize, Partition)] {
        &self.snapshots
    }

    pub fn stride(&self) -> usize {
        self.stride
    }

    pub fn initial(&self) -> &Partition {
        &self.snapshots[0].1
    }

    pub fn last(&self) -> &Partition {
        &self.last
    }

    /// `E_h(χⁿ)` for `n = 0..=N`.
    pub fn energies(&self) -> Vec<f64> {
        std::iter::once(self.initial_energy)
            .chain(self.records.iter().map(|r| r.energy))
            .collect()
    }

    /// Phase volumes for `n = 0..=N`.
    pub fn volume_series(&self) -> Vec<Vec<f64>> {
        std::iter::once(self.initial_volumes.clone())
            .chain(self.records.iter().map(|r| r.volumes.clone()))
            .collect()
    }

    pub fn total_ties(&self) -> usize {
        self.records.iter().map(|r| r.tie_cells).sum()
    }
}

/// Iterates the scheme `cfg.steps` times from `chi0`.
pub fn run(chi0: &Partition, cfg: &SchemeConfig, observers: &mut [&mut dyn StepObserver]) -> Result<Trajectory> {
    check_config(chi0, cfg)?;
    let conv = Convolver::new(cfg.grid, cfg.h)?;
    let sigma = &cfg.sigma;
    let mut prev = chi0.clone();
    let mut u_prev = phase_convolutions(&conv, &prev)?;
    let initial_energy = energy_from_convolutions(&prev, &u_prev, sigma, cfg.h);
    let stride = cfg.snapshot_stride.max(1);
    let mut records = Vec::with_capacity(cfg.steps);
    let mut snapshots = vec![(0, prev.clone())];
    for n in 1..=cfg.steps {
        let StepOutcome { next, tie_cells } = threshold_from_convolutions(&prev, &u_prev, sigma, cfg.tie_rule);
        let changed_cells = next
            .labels()
            .iter()
            .zip(prev.labels())
            .filter(|(a, b)| a != b)
            .count();
        let u_next = if changed_cells == 0 {
            u_prev.clone()
        } else {
            phase_convolutions(&conv, &next)?
        };
        let energy = energy_from_convolutions(&next, &u_next, sigma, cfg.h);
        let dissipation = if changed_cells == 0 {
            0.0
        } else {
            let du: Vec<Vec<f64>> = u_next
                .iter()
                .zip(&u_prev)
                .map(|(a, b)| a.iter().zip(b).map(|(x, y)| x - y).collect())
                .collect();
            metric_from_increments(&next, &prev, &du, sigma, cfg.h)
        };
        let elg_residual = match &cfg.elg_probe {
            Some(xi) => Some(euler_lagrange_with(&conv, &next, &prev, xi, sigma)?.residual()),
            None => None,
        };
        let record = StepRecord {
            n,
            time: n as f64 * cfg.h,
            energy,
            dissipation,
            volumes: next.volumes(),
            changed_cells,
            tie_cells,
            elg_residual,
        };
        let ctx = StepContext {
            n,
            h: cfg.h,
            sigma,
            prev: &prev,
            next: &next,
            prev_convolutions: &u_prev,
            next_convolutions: &u_next,
            record: &record,
        };
        for obs in observers.iter_mut() {
            obs.observe(&ctx)?;
        }
        if n % stride == 0 {
            snapshots.push((n, next.clone()));
        }
        records.push(record);
        prev = next;
        u_prev = u_next;
    }
    Ok(Trajectory {
        grid: cfg.grid,
        phases: chi0.phases(),
        h: cfg.h,
        initial_energy,
        initial_volumes: chi0.volumes(),
        records,
        snapshots,
        stride,
        last: prev,
    })
}

/// Result of the exhaustive minimizing-movements search.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleOutcome {
    pub minimizer: Partition,
    /// `min E_h(χ) − E_h(χ − χⁿ⁻¹)` over all labelings.
    pub oracle_objective: f64,
    /// The same objective at the thresholding output.
    pub scheme_objective: f64,
    pub candidates: usize,
}

pub const ORACLE_MAX_CELLS: usize = 12;
pub const ORACLE_MAX_PHASES: usize = 3;

/// Dense quadratic form `Q(a, b) = (1/√h) Σ_xy σ_{a(x)b(y)} K(x, y) dx^d`
/// with `K(·, y) = G_h ∗ δ_y` sampled at cell centers.
struct KernelForm {
    kernel: Vec<Vec<f64>>,
    sigma: Vec<Vec<f64>>,
    scale: f64,
}

impl KernelForm {
    fn new(conv: &Convolver, sigma: &SurfaceTensionMatrix) -> Result<Self> {
        let len = conv.grid().len();
        let mut kernel = Vec::with_capacity(len);
        for y in 0..len {
            let mut delta = vec![0.0; len];
            delta[y] = 1.0;
            kernel.push(conv.convolve(&delta)?);
        }
        Ok(Self {
            kernel,
            sigma: (0..sigma.phases()).map(|i| sigma.row(i).to_vec()).collect(),
            scale: conv.grid().cell_volume() / conv.h().sqrt(),
        })
    }

    /// `E_h(χ)`.
    fn energy(&self, labels: &[u8]) -> f64 {
        let mut acc = 0.0;
        for (y, ky) in self.kernel.iter().enumerate() {
            let row = &self.sigma[labels[y] as usize];
            for (x, k) in ky.iter().enumerate() {
                acc += row[labels[x] as usize] * k;
            }
        }
        acc * self.scale
    }

    /// `−E_h(χ − χ')`, expanding the indicator differences.
    fn metric(&self, labels: &[u8], prev: &[u8]) -> f64 {
        let mut acc = 0.0;
        for (y, ky) in self.kernel.iter().enumerate() {
            let (a, b) = (labels[y] as usize, prev[y] as usize);
            if a == b {
                continue;
            }
            for (x, k) in ky.iter().enumerate() {
                let (c, d) = (labels[x] as usize, prev[x] as usize);
                if c == d {
                    continue;
                }
                // Σ_ij σ_ij ω_i(y) ω_j(x) with ω = e_a − e_b at y, e_c − e_d at x.
                let s = self.sigma[a][c] - self.sigma[a][d] - self.sigma[b][c] + self.sigma[b][d];
                acc += s * k;
            }
        }
        -acc * self.scale
    }

    fn objective(&self, labels: &[u8], prev: &[u8]) -> f64 {
        self.energy(labels) + self.metric(labels, prev)
    }
}

/// Enumerates all `P^cells` labelings of a 1-D grid and compares the best
/// objective with the thresholding output. Errors with `OracleMismatch` when
/// they differ by more than `1e−10`.
pub fn minimizing_movement_oracle(chi_prev: &Partition, cfg: &SchemeConfig) -> Result<OracleOutcome> {
    check_config(chi_prev, cfg)?;
    let cells = cfg.grid.len();
    let phases = chi_prev.phases();
    if cfg.grid.dim() != 1 || cells > ORACLE_MAX_CELLS || phases > ORACLE_MAX_PHASES {
        return Err(MboError::TooLargeForBruteForce { cells, phases });
    }
    let conv = Convolver::new(cfg.grid, cfg.h)?;
    let form = KernelForm::new(&conv, &cfg.sigma)?;
    let prev = chi_prev.labels();
    let mut labels = vec![0u8; cells];
    let mut best = (f64::INFINITY, labels.clone());
    let candidates = phases.pow(cells as u32);
    for _ in 0..candidates {
        let value = form.objective(&labels, prev);
        if value < best.0 {
            best = (value, labels.clone());
        }
        for l in labels.iter_mut() {
            *l += 1;
            if (*l as usize) < phases {
                break;
            }
            *l = 0;
        }
    }
    let scheme = threshold_step(chi_prev, cfg)?;
    let scheme_objective = form.objective(scheme.labels(), prev);
    if (scheme_objective - best.0).abs() > 1e-10 {
        return Err(MboError::OracleMismatch {
            scheme: scheme_objective,
            oracle: best.0,
        });
    }
    Ok(OracleOutcome {
        minimizer: Partition::new(cfg.grid, phases, best.1)?,
        oracle_objective: best.0,
        scheme_objective,
        candidates,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::energetics::{approximate_energy, metric_term};
    use crate::fields::shapes;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn sigma2() -> SurfaceTensionMatrix {
        SurfaceTensionMatrix::equal(2).unwrap()
    }

    fn random_partition(rng: &mut impl Rng, g: TorusGrid, phases: usize) -> Partition {
        Partition::new(g, phases, (0..g.len()).map(|_| rng.gen_range(0..phases as u8)).collect()).unwrap()
    }

    fn random_sigma(rng: &mut impl Rng, phases: usize) -> SurfaceTensionMatrix {
        loop {
            let mut m = vec![vec![0.0; phases]; phases];
            for i in 0..phases {
                for j in i + 1..phases {
                    let s = rng.gen_range(0.7..1.3);
                    m[i][j] = s;
                    m[j][i] = s;
                }
            }
            if let Ok(s) = SurfaceTensionMatrix::validate(&m) {
                return s;
            }
        }
    }

    #[test]
    fn config_validation() {
        let g = TorusGrid::unit(2, 16).unwrap();
        let cfg = SchemeConfig::new(g, sigma2(), 1e-4, 1e-2).unwrap();
        assert_eq!(cfg.steps, 100);
        assert_eq!(cfg.mesoscopic_steps(), 100);
        assert_eq!(cfg.snapshot_stride, 100);
        assert_eq!(cfg.alpha, 1.0);
        assert_eq!(cfg.tie_rule, TieRule::SmallestIndex);
        assert!(SchemeConfig::new(g, sigma2(), 1e-4, 1.5e-4).is_err());
        assert!(SchemeConfig::new(g, sigma2(), 0.0, 1.0).is_err());
        assert!(cfg.clone().with_alpha(2.5).is_err());
        assert_eq!(cfg.with_alpha(0.5).unwrap().snapshot_stride, 50);
    }

    #[test]
    fn single_phase_is_a_fixed_point() {
        let g = TorusGrid::unit(2, 16).unwrap();
        let sigma = SurfaceTensionMatrix::equal(3).unwrap();
        let p = Partition::uniform(g, 3, 2).unwrap();
        let cfg = SchemeConfig::with_steps(g, sigma, 0.01, 1).unwrap();
        assert_eq!(threshold_step(&p, &cfg).unwrap(), p);
    }

    #[test]
    fn rejects_mismatched_inputs() {
        let g = TorusGrid::unit(2, 16).unwrap();
        let cfg = SchemeConfig::with_steps(g, sigma2(), 0.01, 1).unwrap();
        let other = Partition::uniform(TorusGrid::unit(2, 8).unwrap(), 2, 0).unwrap();
        assert!(matches!(threshold_step(&other, &cfg), Err(MboError::Field(FieldError::GridMismatch))));
        let three = Partition::uniform(g, 3, 0).unwrap();
        assert!(matches!(threshold_step(&three, &cfg), Err(MboError::PhaseCountMismatch { .. })));
    }

    #[test]
    fn two_phase_step_is_half_threshold() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let g = TorusGrid::unit(2, 32).unwrap();
        let h = (2.0 * g.dx()).powi(2);
        let cfg = SchemeConfig::with_steps(g, sigma2(), h, 1).unwrap();
        let conv = Convolver::new(g, h).unwrap();
        for _ in 0..10 {
            let p = random_partition(&mut rng, g, 2);
            let out = threshold_step_detailed(&p, &cfg).unwrap();
            let u1 = conv.convolve(&p.indicator_values(1)).unwrap();
            let mut mismatched = 0;
            for (idx, &v) in u1.iter().enumerate() {
                if (v - 0.5).abs() > 1e-11 && out.next.label(idx) != (v > 0.5) as usize {
                    mismatched += 1;
                }
            }
            assert_eq!(mismatched, 0);
        }
    }

    #[test]
    fn tie_rules() {
        // u₀ = u₁ = 1/2 everywhere ties every cell.
        let g = TorusGrid::unit(1, 4).unwrap();
        let p = Partition::new(g, 2, vec![0, 1, 1, 0]).unwrap();
        let u = vec![vec![0.5; 4], vec![0.5; 4]];
        let smallest = threshold_from_convolutions(&p, &u, &sigma2(), TieRule::SmallestIndex);
        assert_eq!(smallest.tie_cells, 4);
        assert_eq!(smallest.next.labels(), &[0, 0, 0, 0]);
        let keep = threshold_from_convolutions(&p, &u, &sigma2(), TieRule::KeepPrevious);
        assert_eq!(keep.tie_cells, 4);
        assert_eq!(keep.next, p);
        let u = vec![vec![0.5 + 1e-9; 4], vec![0.5 - 1e-9; 4]];
        let clear = threshold_from_convolutions(&p, &u, &sigma2(), TieRule::KeepPrevious);
        assert_eq!(clear.tie_cells, 0);
        assert_eq!(clear.next.labels(), &[0, 0, 0, 0]);
    }

    #[test]
    fn resolved_stripe_is_stationary() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let g = TorusGrid::unit(2, 128).unwrap();
        for _ in 0..100 {
            let h = (rng.gen_range(3.0..5.0) * g.dx()).powi(2);
            let sq = h.sqrt();
            let width = rng.gen_range(8.0 * sq..1.0 - 8.0 * sq);
            let lo = rng.gen_range(0.0..1.0);
            let p = Partition::from_fn(g, 2, |x| {
                let t = (x[0] - lo).rem_euclid(1.0);
                (t < width) as usize
            })
            .unwrap();
            let cfg = SchemeConfig::with_steps(g, sigma2(), h, 1).unwrap();
            assert_eq!(threshold_step(&p, &cfg).unwrap(), p);
        }
    }

    #[test]
    fn run_without_steps_keeps_only_the_initial_state() {
        let g = TorusGrid::unit(2, 16).unwrap();
        let p = shapes::centered_ball(g, 0.3).unwrap();
        let cfg = SchemeConfig::with_steps(g, sigma2(), 0.01, 0).unwrap();
        let traj = run(&p, &cfg, &mut []).unwrap();
        assert!(traj.records().is_empty());
        assert_eq!(traj.snapshots().len(), 1);
        assert_eq!(traj.last(), &p);
    }

    #[test]
    fn run_records_match_direct_evaluation() {
        let g = TorusGrid::unit(2, 64).unwrap();
        let p = shapes::centered_ball(g, 0.2).unwrap();
        let h = (3.0 * g.dx()).powi(2);
        let cfg = SchemeConfig::with_steps(g, sigma2(), h, 6).unwrap().with_snapshot_stride(1);
        let traj = run(&p, &cfg, &mut []).unwrap();
        assert_eq!(traj.snapshots().len(), 7);
        assert!((traj.initial_energy() - approximate_energy(&p, h, &sigma2()).unwrap()).abs() < 1e-12);
        for (pair, r) in traj.snapshots().windows(2).zip(traj.records()) {
            let e = approximate_energy(&pair[1].1, h, &sigma2()).unwrap();
            let m = metric_term(&pair[1].1, &pair[0].1, h, &sigma2()).unwrap();
            assert!((r.energy - e).abs() < 1e-10);
            assert!((r.dissipation - m).abs() < 1e-10);
            let total: f64 = r.volumes.iter().sum();
            assert!((total - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn closure_observers_see_every_step() {
        let g = TorusGrid::unit(2, 32).unwrap();
        let p = shapes::centered_ball(g, 0.3).unwrap();
        let cfg = SchemeConfig::with_steps(g, sigma2(), (3.0 * g.dx()).powi(2), 5).unwrap();
        let mut seen = Vec::new();
        let mut obs = |ctx: &StepContext<'_>| {
            seen.push((ctx.n, ctx.record.energy));
            Ok(())
        };
        let traj = run(&p, &cfg, &mut [&mut obs]).unwrap();
        assert_eq!(seen.len(), 5);
        assert_eq!(seen[4].1, traj.records()[4].energy);
    }

    #[test]
    fn run_is_deterministic() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let g = TorusGrid::unit(2, 64).unwrap();
        let seeds = shapes::random_seeds(&g, 8, &mut rng);
        let p = shapes::voronoi(g, &seeds).unwrap();
        let sigma = SurfaceTensionMatrix::equal(8).unwrap();
        let cfg = SchemeConfig::with_steps(g, sigma, (3.0 * g.dx()).powi(2), 30).unwrap();
        let a = run(&p, &cfg, &mut []).unwrap();
        let b = run(&p, &cfg, &mut []).unwrap();
        assert_eq!(a.records(), b.records());
        assert_eq!(a.last(), b.last());
    }

    #[test]
    fn voronoi_grain_growth_coarsens() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let g = TorusGrid::unit(2, 128).unwrap();
        let seeds = shapes::random_seeds(&g, 8, &mut rng);
        let p = shapes::voronoi(g, &seeds).unwrap();
        let sigma = SurfaceTensionMatrix::equal(8).unwrap();
        let h = (3.0 * g.dx()).powi(2);
        let cfg = SchemeConfig::with_steps(g, sigma, h, 200).unwrap().with_snapshot_stride(1);
        let traj = run(&p, &cfg, &mut []).unwrap();
        let energies = traj.energies();
        assert!(energies.last().unwrap() < &energies[0]);
        let present: Vec<usize> = traj.snapshots().iter().map(|(_, s)| s.phases_present()).collect();
        assert!(present.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn oracle_single_phase() {
        let g = TorusGrid::unit(1, 8).unwrap();
        let p = Partition::uniform(g, 2, 1).unwrap();
        let cfg = SchemeConfig::with_steps(g, sigma2(), 1.0 / 64.0, 1).unwrap();
        let out = minimizing_movement_oracle(&p, &cfg).unwrap();
        assert_eq!(out.minimizer, p);
        assert_eq!(out.candidates, 256);
        assert!(out.oracle_objective.abs() < 1e-12);
    }

    #[test]
    fn oracle_limits() {
        let g = TorusGrid::unit(1, 13).unwrap();
        let p = Partition::uniform(g, 2, 0).unwrap();
        let cfg = SchemeConfig::with_steps(g, sigma2(), 0.01, 1).unwrap();
        assert!(matches!(
            minimizing_movement_oracle(&p, &cfg),
            Err(MboError::TooLargeForBruteForce { cells: 13, phases: 2 })
        ));
        let g2 = TorusGrid::unit(2, 4).unwrap();
        let cfg2 = SchemeConfig::with_steps(g2, sigma2(), 0.01, 1).unwrap();
        assert!(minimizing_movement_oracle(&Partition::uniform(g2, 2, 0).unwrap(), &cfg2).is_err());
    }

    #[test]
    fn oracle_form_agrees_with_spectral_energetics() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let g = TorusGrid::unit(1, 8).unwrap();
        let sigma = random_sigma(&mut rng, 3);
        let h = 1.0 / 64.0;
        let conv = Convolver::new(g, h).unwrap();
        let form = KernelForm::new(&conv, &sigma).unwrap();
        for _ in 0..20 {
            let a = random_partition(&mut rng, g, 3);
            let b = random_partition(&mut rng, g, 3);
            let e = approximate_energy(&a, h, &sigma).unwrap();
            let m = metric_term(&a, &b, h, &sigma).unwrap();
            assert!((form.energy(a.labels()) - e).abs() < 1e-12);
            assert!((form.metric(a.labels(), b.labels()) - m).abs() < 1e-12);
        }
    }

    #[test]
    fn oracle_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let g8 = TorusGrid::unit(1, 8).unwrap();
        let cfg = SchemeConfig::with_steps(g8, sigma2(), 1.0 / 64.0, 1).unwrap();
        for _ in 0..5 {
            let out = minimizing_movement_oracle(&random_partition(&mut rng, g8, 2), &cfg).unwrap();
            assert_eq!(out.candidates, 256);
        }
        let g6 = TorusGrid::unit(1, 6).unwrap();
        let cfg = SchemeConfig::with_steps(g6, SurfaceTensionMatrix::equal(3).unwrap(), 1.0 / 64.0, 1).unwrap();
        for _ in 0..5 {
            let out = minimizing_movement_oracle(&random_partition(&mut rng, g6, 3), &cfg).unwrap();
            assert_eq!(out.candidates, 729);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn translation_equivariance(seed in any::<u64>(), axis in 0usize..2, k in -7isize..8) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let g = TorusGrid::unit(2, 16).unwrap();
            let sigma = random_sigma(&mut rng, 3);
            let p = random_partition(&mut rng, g, 3);
            let cfg = SchemeConfig::with_steps(g, sigma, (2.0 * g.dx()).powi(2), 1).unwrap();
            let a = threshold_step(&p.shifted(axis, k), &cfg).unwrap();
            let b = threshold_step(&p, &cfg).unwrap().shifted(axis, k);
            prop_assert_eq!(a, b);
        }

        #[test]
        fn rotation_equivariance(seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let g = TorusGrid::unit(2, 16).unwrap();
            let sigma = random_sigma(&mut rng, 3);
            let p = random_partition(&mut rng, g, 3);
            let cfg = SchemeConfig::with_steps(g, sigma, (2.0 * g.dx()).powi(2), 1).unwrap();
            let a = threshold_step(&p.rotated_quarter(), &cfg).unwrap();
            let b = threshold_step(&p, &cfg).unwrap().rotated_quarter();
            prop_assert_eq!(a, b);
        }

        #[test]
        fn relabeling_equivariance(seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let g = TorusGrid::unit(2, 16).unwrap();
            let sigma = random_sigma(&mut rng, 3);
            let p = random_partition(&mut rng, g, 3);
            let h = (2.0 * g.dx()).powi(2);
            let perm = [1usize, 2, 0];
            let cfg = SchemeConfig::with_steps(g, sigma.clone(), h, 1).unwrap();
            let cfg_perm = SchemeConfig::with_steps(g, sigma.permuted(&perm).unwrap(), h, 1).unwrap();
            let a = threshold_step(&p.relabeled(&perm), &cfg_perm).unwrap();
            let b = threshold_step(&p, &cfg).unwrap().relabeled(&perm);
            prop_assert_eq!(a, b);
        }

        #[test]
        fn comparison_principle(seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let g = TorusGrid::unit(2, 16).unwrap();
            let b = random_partition(&mut rng, g, 2);
            let a = Partition::new(g, 2, b.labels().iter().map(|&l| l.max(rng.gen_range(0..2))).collect()).unwrap();
            let cfg = SchemeConfig::with_steps(g, sigma2(), (2.0 * g.dx()).powi(2), 1).unwrap();
            let na = threshold_step(&a, &cfg).unwrap();
            let nb = threshold_step(&b, &cfg).unwrap();
            for (x, y) in na.labels().iter().zip(nb.labels()) {
                prop_assert!(x >= y);
            }
        }

        #[test]
        fn oracle_equivalence(seed in any::<u64>(), cells in 4usize..9, phases in 2usize..4) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let g = TorusGrid::unit(1, cells).unwrap();
            let sigma = random_sigma(&mut rng, phases);
            let p = random_partition(&mut rng, g, phases);
            let h = rng.gen_range(0.5..3.0) * g.dx() * g.dx();
            let cfg = SchemeConfig::with_steps(g, sigma, h, 1).unwrap();
            prop_assert!(minimizing_movement_oracle(&p, &cfg).is_ok());
        }
    }
}
