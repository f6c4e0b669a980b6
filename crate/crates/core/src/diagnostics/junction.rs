//! Opening angles at a planar triple junction from annulus phase fractions.

use super::cells_in_ball;
use crate::error::{MboError, Result};
use crate::fields::Partition;

/// Grid vertex nearest to `hint` whose four adjacent cells carry three
/// distinct labels.
pub fn locate_triple_junction(chi: &Partition, hint: [f64; 3]) -> Result<[f64; 3]> {
    let g = chi.grid();
    if g.dim() != 2 {
        return Err(MboError::InvalidInput("junction location needs a 2-D grid".into()));
    }
    let n = g.n() as isize;
    let dx = g.dx();
    let mut best: Option<([f64; 3], f64)> = None;
    for i in 0..n {
        for j in 0..n {
            // Vertex at (i·dx, j·dx), shared by cells (i−1..i, j−1..j).
            let mut labels = [0usize; 4];
            for (k, (a, b)) in [(i - 1, j - 1), (i - 1, j), (i, j - 1), (i, j)].into_iter().enumerate() {
                labels[k] = chi.label(g.index_wrapped([a, b, 0]));
            }
            let mut distinct = labels.to_vec();
            distinct.sort_unstable();
            distinct.dedup();
            if distinct.len() < 3 {
                continue;
            }
            let p = [i as f64 * dx, j as f64 * dx, 0.0];
            let dist = g.distance(p, hint);
            if best.is_none_or(|(_, d)| dist < d) {
                best = Some((p, dist));
            }
        }
    }
    best.map(|(p, _)| p)
        .ok_or_else(|| MboError::NotATripleJunction("no vertex touches three phases".into()))
}

/// Angles `θ_k = 2π · (fraction of phase k)` in rings covering
/// `[rho_min, rho_max]`, averaged over one-cell rings and renormalized to
/// sum to `2π`. Returned in increasing phase order of the three phases
/// present.
pub fn junction_angles_measured(
    chi: &Partition,
    center: [f64; 3],
    rho_range: Option<(f64, f64)>,
) -> Result<[(usize, f64); 3]> {
    let g = chi.grid();
    if g.dim() != 2 {
        return Err(MboError::InvalidInput("junction angles need a 2-D grid".into()));
    }
    let dx = g.dx();
    let (lo, hi) = rho_range.unwrap_or((5.0 * dx, 10.0 * dx));
    if !(lo >= 0.0 && hi > lo && hi < g.side() / 2.0) {
        return Err(MboError::InvalidInput(format!("invalid annulus [{lo}, {hi}]")));
    }
    let rings = ((hi - lo) / dx).round().max(1.0) as usize;
    let phases = chi.phases();
    let mut mean = vec![0.0; phases];
    let mut used = 0usize;
    let cells = cells_in_ball(g, center, hi);
    for ring in 0..rings {
        let a = lo + (hi - lo) * ring as f64 / rings as f64;
        let b = lo + (hi - lo) * (ring + 1) as f64 / rings as f64;
        let mut counts = vec![0usize; phases];
        let mut total = 0usize;
        for (idx, d) in &cells {
            let rho = d[0].hypot(d[1]);
            if rho >= a && rho < b {
                counts[chi.label(*idx)] += 1;
                total += 1;
            }
        }
        if total == 0 {
            continue;
        }
        used += 1;
        for k in 0..phases {
            mean[k] += counts[k] as f64 / total as f64;
        }
    }
    let present: Vec<usize> = (0..phases).filter(|&k| mean[k] > 0.0).collect();
    if used == 0 || present.len() != 3 {
        return Err(MboError::NotATripleJunction(format!(
            "{} phases in the annulus around ({:.4}, {:.4})",
            present.len(),
            center[0],
            center[1]
        )));
    }
    let sum: f64 = present.iter().map(|&k| mean[k]).sum();
    let tau = 2.0 * std::f64::consts::PI;
    let angle = |k: usize| (k, tau * mean[k] / sum);
    Ok([angle(present[0]), angle(present[1]), angle(present[2])])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{shapes, TorusGrid};
    use proptest::prelude::*;

    #[test]
    fn equal_sectors_measure_120() {
        let g = TorusGrid::unit(2, 256).unwrap();
        let c = [0.5, 0.5, 0.0];
        let third = 2.0 * std::f64::consts::PI / 3.0;
        let p = shapes::sectors(g, c, &[0.3, 0.3 + third, 0.3 + 2.0 * third]).unwrap();
        let v = locate_triple_junction(&p, [0.49, 0.51, 0.0]).unwrap();
        assert!(g.distance(v, c) < 2.0 * g.dx());
        let angles = junction_angles_measured(&p, v, None).unwrap();
        for (_, a) in angles {
            assert!((a.to_degrees() - 120.0).abs() < 2.0, "{angles:?}");
        }
    }

    #[test]
    fn two_phase_annulus_is_rejected() {
        let g = TorusGrid::unit(2, 128).unwrap();
        let p = shapes::centered_stripe(g, 0.5).unwrap();
        assert!(matches!(
            junction_angles_measured(&p, [0.25, 0.5, 0.0], None),
            Err(MboError::NotATripleJunction(_))
        ));
        assert!(matches!(
            locate_triple_junction(&p, [0.5, 0.5, 0.0]),
            Err(MboError::NotATripleJunction(_))
        ));
    }

    #[test]
    fn t_junction_has_a_vertex_at_the_center() {
        let g = TorusGrid::unit(2, 128).unwrap();
        let p = shapes::t_junction(g).unwrap();
        let v = locate_triple_junction(&p, [0.5, 0.5, 0.0]).unwrap();
        assert!(g.distance(v, [0.5, 0.5, 0.0]) < 1e-12);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn arbitrary_sectors_are_measured_exactly(
            start in 0.0f64..std::f64::consts::TAU,
            a in 0.6f64..2.5,
            b in 0.6f64..2.5,
        ) {
            prop_assume!(a + b < 2.0 * std::f64::consts::PI - 0.6);
            let g = TorusGrid::unit(2, 256).unwrap();
            let c = [0.5, 0.5, 0.0];
            let tau = 2.0 * std::f64::consts::PI;
            let mut rays = [start, (start + a) % tau, (start + a + b) % tau];
            rays[0] %= tau;
            let p = shapes::sectors(g, c, &rays).unwrap();
            let measured = junction_angles_measured(&p, c, Some((20.0 * g.dx(), 40.0 * g.dx()))).unwrap();
            let expected = [a, b, 2.0 * std::f64::consts::PI - a - b];
            for (k, theta) in measured {
                prop_assert!((theta - expected[k]).abs().to_degrees() < 2.0,
                    "phase {} measured {} expected {}", k, theta.to_degrees(), expected[k].to_degrees());
            }
        }
    }
}
