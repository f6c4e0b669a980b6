//! Radius laws for shrinking disks and spheres, and normal velocities from
//! the displacement of the `½`-level set of `G_h ∗ χ`.

use crate::energetics::reference::unit_ball_volume;
use crate::error::{MboError, Result};
use crate::fields::Convolver;
use crate::scheme::Trajectory;
use statrs::distribution::{ContinuousCDF, Normal};

/// `(t, R)` with `R = (|Ω_phase| / ω_d)^{1/d}` after every step, starting at
/// `t = 0`.
pub fn disk_radius_series(traj: &Trajectory, phase: usize) -> Result<Vec<(f64, f64)>> {
    if phase >= traj.phases() {
        return Err(MboError::InvalidInput(format!("phase {phase} out of range")));
    }
    let d = traj.grid().dim();
    let omega = unit_ball_volume(d);
    let h = traj.h();
    Ok(traj
        .volume_series()
        .iter()
        .enumerate()
        .map(|(n, v)| (n as f64 * h, (v[phase] / omega).powf(1.0 / d as f64)))
        .collect())
}

/// Largest `|R(t)² − (R₀² + slope·t)| / R₀²` over the samples taken while
/// `R(t) ≥ stop_radius`.
pub fn circle_law_deviation(series: &[(f64, f64)], r0: f64, slope: f64, stop_radius: f64) -> f64 {
    series
        .iter()
        .take_while(|(_, r)| *r >= stop_radius)
        .map(|&(t, r)| (r * r - (r0 * r0 + slope * t)).abs() / (r0 * r0))
        .fold(0.0, f64::max)
}

/// Least-squares slope of `R²` against `t` while `R ≥ stop_radius`.
pub fn fit_square_radius_slope(series: &[(f64, f64)], stop_radius: f64) -> Option<f64> {
    let pts: Vec<(f64, f64)> = series
        .iter()
        .take_while(|(_, r)| *r >= stop_radius)
        .map(|&(t, r)| (t, r * r))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mt = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mt) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mt) * (p.0 - mt)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

/// Velocities over one mesoscopic interval `[t, t + τ]`.
#[derive(Debug, Clone, PartialEq)]
pub struct VelocitySample {
    pub t: f64,
    pub tau: f64,
    /// `(cell, V̂)` on cells near the `½`-level in both snapshots. Positive
    /// means the phase recedes.
    pub values: Vec<(usize, f64)>,
    pub median: f64,
}

/// Per mesoscopic interval (`K = max(1, round(α/√h))` steps), the normal
/// velocity of the `½`-level set of `u = G_h ∗ χ_phase`. The signed distance
/// to that level along the normal is read off the planar profile,
/// `s = √h Φ⁻¹(u)` (positive inside the phase), and
/// `V̂ = (s(t) − s(t + τ))/τ` on cells where `|u − ½| < 0.48` at both ends
/// (a band of about `4√h`).
pub fn velocity_estimate(traj: &Trajectory, alpha: f64, phase: usize) -> Result<Vec<VelocitySample>> {
    if !(alpha > 0.0) {
        return Err(MboError::InvalidConfig(format!("alpha = {alpha} must be positive")));
    }
    if phase >= traj.phases() {
        return Err(MboError::InvalidInput(format!("phase {phase} out of range")));
    }
    let h = traj.h();
    let k = ((alpha * h.sqrt() / h).round() as usize).max(1);
    let stride = traj.stride();
    if k % stride != 0 {
        return Err(MboError::InsufficientSnapshots(format!(
            "mesoscopic interval of {k} steps is not a multiple of the snapshot stride {stride}"
        )));
    }
    let tau = k as f64 * h;
    let conv = Convolver::new(*traj.grid(), h)?;
    let profile = Normal::new(0.0, h.sqrt()).expect("positive width");
    let level = |chi: &crate::fields::Partition| -> Result<(Vec<f64>, Vec<f64>)> {
        let u = conv.convolve(&chi.indicator_values(phase))?;
        let s = u
            .iter()
            .map(|&v| if v > 0.0 && v < 1.0 { profile.inverse_cdf(v) } else { f64::NAN })
            .collect();
        Ok((u, s))
    };
    let snaps: Vec<_> = traj.snapshots().iter().filter(|(n, _)| n % k == 0).collect();
    let mut out = Vec::new();
    let mut prev = match snaps.first() {
        Some((_, chi)) => level(chi)?,
        None => return Ok(out),
    };
    for w in snaps.windows(2) {
        let next = level(&w[1].1)?;
        let mut values: Vec<(usize, f64)> = (0..prev.0.len())
            .filter(|&i| (prev.0[i] - 0.5).abs() < BAND && (next.0[i] - 0.5).abs() < BAND)
            .filter(|&i| prev.1[i].is_finite() && next.1[i].is_finite())
            .map(|i| (i, (prev.1[i] - next.1[i]) / tau))
            .collect();
        values.sort_by_key(|v| v.0);
        let median = median(values.iter().map(|v| v.1).collect());
        out.push(VelocitySample {
            t: w[0].0 as f64 * h,
            tau,
            values,
            median,
        });
        prev = next;
    }
    Ok(out)
}

const BAND: f64 = 0.48;

fn median(mut v: Vec<f64>) -> f64 {
    if v.is_empty() {
        return f64::NAN;
    }
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{shapes, TorusGrid};
    use crate::scheme::{run, SchemeConfig};
    use crate::tensions::SurfaceTensionMatrix;

    #[test]
    fn initial_radius_is_rasterized_radius() {
        let g = TorusGrid::unit(2, 256).unwrap();
        let chi = shapes::centered_ball(g, 0.25).unwrap();
        let cfg = SchemeConfig::with_steps(g, SurfaceTensionMatrix::equal(2).unwrap(), 1e-3, 1).unwrap();
        let traj = run(&chi, &cfg, &mut []).unwrap();
        let series = disk_radius_series(&traj, 1).unwrap();
        assert_eq!(series.len(), 2);
        assert!((series[0].1 - 0.25).abs() <= g.dx());
    }

    #[test]
    fn law_fits_on_synthetic_series() {
        let series: Vec<(f64, f64)> = (0..50)
            .map(|k| {
                let t = k as f64 * 1e-3;
                (t, (0.0625 - 2.0 * t).max(0.0).sqrt())
            })
            .collect();
        assert!(circle_law_deviation(&series, 0.25, -2.0, 0.125) < 1e-12);
        assert!((fit_square_radius_slope(&series, 0.125).unwrap() + 2.0).abs() < 1e-9);
        assert!(circle_law_deviation(&series, 0.25, -1.0, 0.125) > 0.1);
    }

    #[test]
    fn stationary_stripe_has_no_velocity() {
        let g = TorusGrid::unit(2, 128).unwrap();
        let chi = shapes::centered_stripe(g, 0.5).unwrap();
        let h = 1e-3;
        let cfg = SchemeConfig::with_steps(g, SurfaceTensionMatrix::equal(2).unwrap(), h, 8)
            .unwrap()
            .with_snapshot_stride(1);
        let traj = run(&chi, &cfg, &mut []).unwrap();
        let samples = velocity_estimate(&traj, 0.1, 1).unwrap();
        assert!(!samples.is_empty());
        for s in samples {
            assert!(!s.values.is_empty());
            for (_, v) in s.values {
                assert!(v.abs() <= 0.05 / h.sqrt() * g.dx());
            }
        }
    }

    #[test]
    fn disk_velocity_is_half_curvature() {
        let g = TorusGrid::unit(2, 512).unwrap();
        let chi = shapes::centered_ball(g, 0.25).unwrap();
        let h = 2.5e-4;
        let cfg = SchemeConfig::new(g, SurfaceTensionMatrix::equal(2).unwrap(), h, 0.04)
            .unwrap()
            .with_snapshot_stride(1);
        let traj = run(&chi, &cfg, &mut []).unwrap();
        let series = disk_radius_series(&traj, 1).unwrap();
        // Scaled by the radius at mid-interval, V̂ · 2R ≈ 1.
        let scaled = |alpha: f64| -> Vec<f64> {
            velocity_estimate(&traj, alpha, 1)
                .unwrap()
                .iter()
                .map(|s| s.median * 2.0 * series[((s.t + 0.5 * s.tau) / h).round() as usize].1)
                .collect()
        };
        let full = scaled(1.0);
        let half = scaled(0.5);
        assert!(full.len() >= 2 && half.len() >= 4);
        for v in full.iter().chain(&half) {
            assert!((v - 1.0).abs() < 0.15, "{full:?} {half:?}");
        }
        let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
        assert!((mean(&half) / mean(&full) - 1.0).abs() < 0.1);
    }
}
