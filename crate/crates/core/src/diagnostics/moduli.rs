//! Time moduli of a trajectory: the almost-BV lag integral and the
//! `C^{1/2}` volume bound.

use crate::error::{MboError, Result};
use crate::fields::symmetric_difference_volume;
use crate::scheme::Trajectory;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BvModulus {
    pub tau: f64,
    /// `∫_τ^T ∫ |χ(t) − χ(t − τ)| dx dt` by snapshot quadrature.
    pub modulus: f64,
    /// `modulus / ((1 + T) E₀ (τ + √h))`.
    pub ratio: f64,
}

/// Lag-`τ` modulus. `τ` must be a multiple of the snapshot spacing
/// `stride·h` (within `1e-9` relative).
pub fn bv_time_modulus(traj: &Trajectory, tau: f64) -> Result<BvModulus> {
    let h = traj.h();
    let spacing = traj.stride() as f64 * h;
    let lag = (tau / spacing).round();
    if !(tau >= 0.0) || (lag * spacing - tau).abs() > 1e-9 * spacing.max(tau) {
        return Err(MboError::InsufficientSnapshots(format!(
            "lag {tau} is not a multiple of the snapshot spacing {spacing}"
        )));
    }
    let lag = lag as usize;
    let snaps = traj.snapshots();
    let mut modulus = 0.0;
    if lag > 0 {
        if lag >= snaps.len() {
            return Err(MboError::InsufficientSnapshots(format!(
                "lag of {lag} snapshots exceeds the {} recorded",
                snaps.len()
            )));
        }
        for k in lag..snaps.len() {
            modulus += symmetric_difference_volume(&snaps[k].1, &snaps[k - lag].1)? * spacing;
        }
    }
    let scale = (1.0 + traj.horizon()) * traj.initial_energy() * (tau + h.sqrt());
    Ok(BvModulus {
        tau,
        modulus,
        ratio: if scale > 0.0 { modulus / scale } else { 0.0 },
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct HoelderReport {
    /// `max |χ(s) − χ(t)|_{L¹} / (E₀ |s − t|^{1/2})` over the sampled pairs.
    pub max_ratio: f64,
    /// Times of the maximizing pair.
    pub worst_pair: (f64, f64),
    pub pairs: usize,
}

impl HoelderReport {
    /// Whether the two maxima agree within a factor 2 (used when halving
    /// `h` on the same problem).
    pub fn stable_against(&self, other: &HoelderReport) -> bool {
        let (a, b) = (self.max_ratio, other.max_ratio);
        if a == 0.0 || b == 0.0 {
            return a == b;
        }
        a.max(b) <= 2.0 * a.min(b)
    }
}

/// Samples up to 64 evenly spaced snapshots and checks every pair with
/// `|s − t| ≥ h`.
pub fn hoelder_volume_check(traj: &Trajectory) -> Result<HoelderReport> {
    let snaps = traj.snapshots();
    if snaps.len() < 2 {
        return Err(MboError::InsufficientSnapshots("need at least two snapshots".into()));
    }
    let h = traj.h();
    let e0 = traj.initial_energy();
    let keep = snaps.len().min(64);
    let picks: Vec<usize> = (0..keep)
        .map(|k| k * (snaps.len() - 1) / (keep - 1).max(1))
        .collect();
    let mut report = HoelderReport {
        max_ratio: 0.0,
        worst_pair: (0.0, 0.0),
        pairs: 0,
    };
    for (a, &p) in picks.iter().enumerate() {
        for &q in &picks[a + 1..] {
            let (s, t) = (snaps[p].0 as f64 * h, snaps[q].0 as f64 * h);
            if t - s < h * (1.0 - 1e-9) {
                continue;
            }
            report.pairs += 1;
            let diff = symmetric_difference_volume(&snaps[p].1, &snaps[q].1)?;
            let ratio = if e0 > 0.0 { diff / (e0 * (t - s).sqrt()) } else { 0.0 };
            if ratio > report.max_ratio {
                report.max_ratio = ratio;
                report.worst_pair = (s, t);
            }
        }
    }
    Ok(report)
}
