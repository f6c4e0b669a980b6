//! Acceptance suite: one pass/fail line per criterion.
//!
//! Runs without the libtest harness so the lines always print. Pass a
//! criterion number (e.g. `cargo test --test acceptance -- 6`) to run only
//! that one. Exits non-zero if any selected criterion fails.

use mbo_core::diagnostics::{
    bv_time_modulus, circle_law_deviation, classify_covering, disk_radius_series, ExcessAnalyzer,
    fit_square_radius_slope, hoelder_volume_check, junction_angles_measured, locate_triple_junction,
};
use mbo_core::energetics::{
    approximate_energy, approximate_monotonicity_check, energy_dissipation_check, euler_lagrange,
    DissipationAccumulator, DissipationReport,
};
use mbo_core::fields::{gaussian_convolve, shapes, Convolver, ScalarField};
use mbo_core::scheme::{minimizing_movement_oracle, threshold_step_detailed};
use mbo_core::{
    herring_angles, run, threshold_step, Partition, SchemeConfig, StepObserver, SurfaceTensionMatrix, Trajectory,
    TorusGrid, C0,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Instant;

struct Outcome {
    pass: bool,
    detail: String,
}

impl Outcome {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Self {
            pass,
            detail: detail.into(),
        }
    }
}

/// Dissipation reports of every scheme run made by the suite.
#[derive(Default)]
struct Runs {
    reports: Vec<(String, DissipationReport)>,
}

impl Runs {
    fn record(&mut self, label: &str, traj: &Trajectory) {
        self.reports.push((label.to_string(), energy_dissipation_check(traj)));
    }

    fn run(&mut self, label: &str, chi: &Partition, cfg: &SchemeConfig) -> Trajectory {
        let traj = run(chi, cfg, &mut []).expect("scheme run");
        self.record(label, &traj);
        traj
    }
}

fn sigma_equal(p: usize) -> SurfaceTensionMatrix {
    SurfaceTensionMatrix::equal(p).unwrap()
}

fn random_sigma(rng: &mut ChaCha8Rng, phases: usize) -> SurfaceTensionMatrix {
    loop {
        let mut m = vec![vec![0.0; phases]; phases];
        for i in 0..phases {
            for j in i + 1..phases {
                let s = rng.gen_range(0.6..1.4);
                m[i][j] = s;
                m[j][i] = s;
            }
        }
        if let Ok(s) = SurfaceTensionMatrix::validate(&m) {
            return s;
        }
    }
}

fn random_partition(rng: &mut ChaCha8Rng, g: TorusGrid, phases: usize) -> Partition {
    Partition::new(g, phases, (0..g.len()).map(|_| rng.gen_range(0..phases as u8)).collect()).unwrap()
}

fn sci(v: &[f64]) -> String {
    format!("[{}]", v.iter().map(|x| format!("{x:.3e}")).collect::<Vec<_>>().join(", "))
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn criterion_1(_: &mut Runs) -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst: f64 = 0.0;
    let mut failures = 0;
    for _ in 0..100 {
        let phases = rng.gen_range(2..=3);
        // Grids need at least four cells per axis.
        let cells = rng.gen_range(4..=10);
        let g = TorusGrid::unit(1, cells).unwrap();
        let h = g.dx().powi(2) * rng.gen_range(0.5..4.0);
        let sigma = random_sigma(&mut rng, phases);
        let prev = random_partition(&mut rng, g, phases);
        let cfg = SchemeConfig::with_steps(g, sigma, h, 1).unwrap();
        match minimizing_movement_oracle(&prev, &cfg) {
            Ok(out) => worst = worst.max((out.scheme_objective - out.oracle_objective).abs()),
            Err(_) => failures += 1,
        }
    }
    let secs = start.elapsed().as_secs_f64();
    Outcome::new(
        failures == 0 && worst <= 1e-10 && secs < 10.0,
        format!("100 instances, {failures} mismatches, max objective gap {worst:.2e}, {secs:.1} s"),
    )
}

fn criterion_2(runs: &mut Runs) -> Outcome {
    // Dedicated runs covering further phase counts and dimensions; the
    // reports of every other criterion's runs are added by `main`.
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let g = TorusGrid::unit(2, 128).unwrap();
    let h = (4.0 * g.dx()).powi(2);
    let seeds = shapes::random_seeds(&g, 6, &mut rng);
    let voronoi = shapes::voronoi(g, &seeds).unwrap();
    let sigma = random_sigma(&mut rng, 6);
    runs.run("voronoi-6 random sigma", &voronoi, &SchemeConfig::with_steps(g, sigma, h, 40).unwrap());
    let stripe = shapes::centered_stripe(g, 0.5).unwrap();
    runs.run("stripe", &stripe, &SchemeConfig::with_steps(g, sigma_equal(2), h, 10).unwrap());
    let noise = random_partition(&mut rng, g, 3);
    runs.run("random labels", &noise, &SchemeConfig::with_steps(g, random_sigma(&mut rng, 3), h, 20).unwrap());
    let g3 = TorusGrid::unit(3, 32).unwrap();
    let ball = shapes::centered_ball(g3, 0.3).unwrap();
    runs.run("3-D ball", &ball, &SchemeConfig::with_steps(g3, sigma_equal(2), (3.0 * g3.dx()).powi(2), 10).unwrap());
    Outcome::new(true, "")
}

fn finish_criterion_2(runs: &Runs) -> Outcome {
    let failing: Vec<&str> = runs
        .reports
        .iter()
        .filter(|(_, r)| !r.passed())
        .map(|(l, _)| l.as_str())
        .collect();
    let worst = runs
        .reports
        .iter()
        .map(|(_, r)| r.min_margin() / r.tolerance.max(f64::MIN_POSITIVE))
        .fold(f64::INFINITY, f64::min);
    let min_diss = runs
        .reports
        .iter()
        .map(|(_, r)| r.min_dissipation)
        .fold(f64::INFINITY, f64::min);
    Outcome::new(
        failing.is_empty() && !runs.reports.is_empty(),
        format!(
            "{} runs, failing {:?}, min step margin {:.2e} tolerances, min dissipation {:.2e}",
            runs.reports.len(),
            failing,
            worst,
            min_diss
        ),
    )
}

fn criterion_3(_: &mut Runs) -> Outcome {
    let g = TorusGrid::unit(2, 256).unwrap();
    let stripe = shapes::centered_stripe(g, 0.5).unwrap();
    let exact = 2.0 * C0 * 2.0;
    let base = (4.0 * g.dx()).powi(2);
    let mut worst: f64 = 0.0;
    for k in 0..5 {
        let h = base * f64::powi(2.0, k);
        let e = approximate_energy(&stripe, h, &sigma_equal(2)).unwrap();
        worst = worst.max(rel(e, exact));
    }
    Outcome::new(worst <= 0.01, format!("h from (4dx)² to 16×, max relative error {worst:.2e}"))
}

fn criterion_4(_: &mut Runs) -> Outcome {
    let start = Instant::now();
    let g = TorusGrid::unit(2, 512).unwrap();
    let disk = shapes::centered_ball(g, 0.25).unwrap();
    let exact = 2.0 * C0 * 2.0 * PI * 0.25;
    let errors: Vec<f64> = [1.6e-3, 4e-4, 1e-4]
        .iter()
        .map(|&h| rel(approximate_energy(&disk, h, &sigma_equal(2)).unwrap(), exact))
        .collect();
    let decreasing = errors.windows(2).all(|w| w[1] < w[0]);
    let secs = start.elapsed().as_secs_f64();
    Outcome::new(
        errors[2] <= 0.02 && decreasing && secs < 60.0,
        format!("relative errors {} for h = 1.6e-3, 4e-4, 1e-4, {secs:.1} s", sci(&errors)),
    )
}

fn criterion_5(_: &mut Runs) -> Outcome {
    let g = TorusGrid::unit(2, 512).unwrap();
    let list = [1.6e-3, 4e-4, 1e-4];
    let mut pairs = 0;
    let mut ok = true;
    let mut min_slack = f64::INFINITY;
    for chi in [shapes::centered_ball(g, 0.25).unwrap(), shapes::centered_stripe(g, 0.5).unwrap()] {
        let report = approximate_monotonicity_check(&chi, &list, &sigma_equal(2)).unwrap();
        pairs += report.pairs.len();
        ok &= report.passed();
        for p in &report.pairs {
            min_slack = min_slack.min(p.slack / p.energy_h);
        }
    }
    Outcome::new(ok, format!("{pairs} pairs on disk and stripe, min relative slack {min_slack:.3e}"))
}

/// Runs a disk (2-D) or ball (3-D) until the radius law predicts `R₀/2`
/// under `R² = R₀² + slope·t`.
fn shrinking_run(runs: &mut Runs, label: &str, dim: usize, n: usize, h: f64, horizon: f64) -> Vec<(f64, f64)> {
    let g = TorusGrid::unit(dim, n).unwrap();
    let chi = shapes::centered_ball(g, 0.25).unwrap();
    let steps = (horizon / h).ceil() as usize;
    let cfg = SchemeConfig::with_steps(g, sigma_equal(2), h, steps)
        .unwrap()
        .with_snapshot_stride(steps);
    let traj = runs.run(label, &chi, &cfg);
    disk_radius_series(&traj, 1).unwrap()
}

fn criterion_6(runs: &mut Runs) -> Outcome {
    let r0: f64 = 0.25;
    let start = Instant::now();
    // The law R² = R₀² − 2t reaches R₀/2 at t = 3R₀²/8.
    let series = shrinking_run(runs, "disk 512² h=2e-5", 2, 512, 2e-5, 3.0 * r0 * r0 / 8.0);
    let t2 = start.elapsed().as_secs_f64();
    let deviation = circle_law_deviation(&series, r0, -2.0, r0 / 2.0);
    let end = series.last().unwrap();
    let start = Instant::now();
    // R² = R₀² − 4t reaches R₀/2 at 3R₀²/16; run to the time the measured
    // motion needs as well.
    let series3 = shrinking_run(runs, "sphere 128³ h=1e-3", 3, 128, 1e-3, 3.0 * r0 * r0 / 8.0);
    let t3 = start.elapsed().as_secs_f64();
    let slope = fit_square_radius_slope(&series3, r0 / 2.0).unwrap_or(f64::NAN);
    let pass2 = deviation <= 0.03 && t2 < 300.0;
    let pass3 = (slope + 4.0).abs() <= 0.4 && t3 < 300.0;
    Outcome::new(
        pass2 && pass3,
        format!(
            "2-D max |R²−(R₀²−2t)|/R₀² = {deviation:.3} (R at t={:.4}: {:.4}, {t2:.0} s); \
             3-D R² slope {slope:.3} (target −4 ± 10%, {t3:.0} s)",
            end.0, end.1
        ),
    )
}

/// Companion to criterion 6 in the convention the scheme follows,
/// `V = κ/2`: `R² = R₀² − (d−1)t`, at an `h` where the front is not pinned.
fn criterion_6_companion(runs: &mut Runs) -> Outcome {
    let r0: f64 = 0.25;
    let series = shrinking_run(runs, "disk 512² h=2.5e-4", 2, 512, 2.5e-4, 0.75 * r0 * r0);
    let deviation = circle_law_deviation(&series, r0, -1.0, r0 / 2.0);
    let reached = series.last().unwrap().1 < r0 / 2.0;
    let series3 = shrinking_run(runs, "sphere 128³ h=1e-3 (long)", 3, 128, 1e-3, 0.75 * r0 * r0 / 2.0);
    let slope = fit_square_radius_slope(&series3, r0 / 2.0).unwrap_or(f64::NAN);
    Outcome::new(
        deviation <= 0.03 && reached && (slope + 2.0).abs() <= 0.2,
        format!("2-D max |R²−(R₀²−t)|/R₀² = {deviation:.4} (reached R₀/2: {reached}); 3-D R² slope {slope:.3} (target −2 ± 10%)"),
    )
}

/// T-junction evolved on 512²; angles from the default annulus, averaged
/// over snapshots in the second half of the run.
fn junction_angles(runs: &mut Runs, sigma: SurfaceTensionMatrix, label: &str) -> [f64; 3] {
    let g = TorusGrid::unit(2, 512).unwrap();
    let h = 4e-4;
    let chi = shapes::t_junction(g).unwrap();
    let cfg = SchemeConfig::new(g, sigma, h, 0.06).unwrap().with_snapshot_stride(25);
    let traj = runs.run(label, &chi, &cfg);
    let mut mean = [0.0; 3];
    let mut count = 0.0;
    for (n, snap) in traj.snapshots() {
        if (*n as f64) * h < 0.03 - 1e-12 {
            continue;
        }
        let v = locate_triple_junction(snap, [0.5, 0.5, 0.0]).unwrap();
        for (k, theta) in junction_angles_measured(snap, v, None).unwrap() {
            mean[k] += theta.to_degrees();
        }
        count += 1.0;
    }
    mean.map(|m| m / count)
}

fn criterion_7(runs: &mut Runs) -> Outcome {
    let start = Instant::now();
    let equal = junction_angles(runs, sigma_equal(3), "T-junction equal");
    let unequal = junction_angles(runs, SurfaceTensionMatrix::three_phase(1.0, 1.0, 1.2).unwrap(), "T-junction 1,1,1.2");
    let secs = start.elapsed().as_secs_f64();
    let (a, b, c) = herring_angles(1.0, 1.0, 1.2).unwrap();
    let target = [a.to_degrees(), b.to_degrees(), c.to_degrees()];
    let equal_ok = equal.iter().all(|t| (t - 120.0).abs() <= 3.0);
    let unequal_ok = unequal.iter().zip(&target).all(|(m, t)| (m - t).abs() <= 4.0);
    Outcome::new(
        equal_ok && unequal_ok && secs < 300.0,
        format!(
            "equal {:.2?} (120 ± 3, {}); (1,1,1.2) {:.2?} vs {:.2?} (± 4, {}); {secs:.0} s",
            equal,
            if equal_ok { "ok" } else { "off" },
            unequal,
            target,
            if unequal_ok { "ok" } else { "off" }
        ),
    )
}

/// Classic two-phase MBO by direct periodic lattice summation of the
/// Gaussian: phase 1 where `G_h ∗ χ₁ > ½`.
fn classic_mbo(chi: &Partition, h: f64) -> Vec<(f64, usize)> {
    let g = chi.grid();
    let n = g.n() as isize;
    let dx = g.dx();
    let images = 3isize;
    let w = |m: isize| -> f64 {
        (-images..=images)
            .map(|k| {
                let z = (m + k * n) as f64 * dx;
                (-z * z / (2.0 * h)).exp()
            })
            .sum::<f64>()
            * dx
            / (2.0 * PI * h).sqrt()
    };
    let weights: Vec<f64> = (0..n).map(w).collect();
    (0..g.len())
        .map(|idx| {
            let [i, j, _] = g.coords(idx);
            let mut u = 0.0;
            for jdx in 0..g.len() {
                if chi.label(jdx) == 1 {
                    let [a, b, _] = g.coords(jdx);
                    let di = (i as isize - a as isize).rem_euclid(n) as usize;
                    let dj = (j as isize - b as isize).rem_euclid(n) as usize;
                    u += weights[di] * weights[dj];
                }
            }
            (u, (u > 0.5) as usize)
        })
        .collect()
}

fn criterion_8(_: &mut Runs) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let g = TorusGrid::unit(2, 32).unwrap();
    let mut mismatches = 0usize;
    let mut ties = 0usize;
    let mut cells = 0usize;
    for k in 0..50 {
        let h = (rng.gen_range(2.0..4.0) * g.dx()).powi(2);
        let chi = if k % 2 == 0 {
            random_partition(&mut rng, g, 2)
        } else {
            let seeds = shapes::random_seeds(&g, 10, &mut rng);
            let coloring: Vec<usize> = (0..10).map(|_| rng.gen_range(0..2)).collect();
            let v = shapes::voronoi(g, &seeds).unwrap();
            Partition::new(g, 2, v.labels().iter().map(|&l| coloring[l as usize] as u8).collect()).unwrap()
        };
        let cfg = SchemeConfig::with_steps(g, sigma_equal(2), h, 1).unwrap();
        let out = threshold_step_detailed(&chi, &cfg).unwrap();
        ties += out.tie_cells;
        cells += g.len();
        for (idx, (u, label)) in classic_mbo(&chi, h).into_iter().enumerate() {
            if (u - 0.5).abs() > 1e-9 && out.next.label(idx) != label {
                mismatches += 1;
            }
        }
    }
    let tie_fraction = ties as f64 / cells as f64;
    Outcome::new(
        mismatches == 0 && tie_fraction <= 1e-3,
        format!("50 partitions, {mismatches} mismatched cells, tie fraction {tie_fraction:.2e}"),
    )
}

fn criterion_9(runs: &mut Runs) -> Outcome {
    let g = TorusGrid::unit(2, 256).unwrap();
    let h = 4e-4;
    let horizon = 0.02;
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let seeds = shapes::random_seeds(&g, 12, &mut rng);
    let cases = [
        ("disk", shapes::centered_ball(g, 0.25).unwrap()),
        ("voronoi-12", shapes::voronoi(g, &seeds).unwrap()),
    ];
    let mut ok = true;
    let mut detail = Vec::new();
    for (label, chi) in cases {
        let sigma = sigma_equal(chi.phases());
        let cfg = SchemeConfig::new(g, sigma, h, horizon).unwrap();
        let mut acc = DissipationAccumulator::new(g, h, (0.0, horizon))
            .unwrap()
            .with_localization(6.0 * h.sqrt());
        let traj = run(&chi, &cfg, &mut [&mut acc as &mut dyn StepObserver]).unwrap();
        runs.record(label, &traj);
        let c = acc.finish().total / traj.initial_energy();
        let near = acc.localized_fraction().unwrap();
        ok &= c <= 10.0 && near >= 0.95;
        detail.push(format!("{label}: C = {c:.3}, near-interface mass {near:.4}"));
    }
    Outcome::new(ok, detail.join("; "))
}

fn criterion_10(_: &mut Runs) -> Outcome {
    let start = Instant::now();
    // Planar interfaces: every covering ball meeting the interface.
    let g = TorusGrid::unit(2, 256).unwrap();
    let h = (3.0 * g.dx()).powi(2);
    let r = 8.0 * h.sqrt();
    let stripe = shapes::centered_stripe(g, 0.5).unwrap();
    let planar = classify_covering(&stripe, h, r, 0.05).unwrap();
    let worst_planar = planar
        .interface_balls()
        .map(|b| (b.tilt_excess + b.energy_excess) / b.r)
        .fold(0.0, f64::max);
    let planar_ok = worst_planar <= 0.02;

    // Disk boundary balls at r = R/8 and R/16.
    let big = 0.25;
    let gd = TorusGrid::unit(2, 1024).unwrap();
    let disk = shapes::centered_ball(gd, big).unwrap();
    let hd = (big / 16.0 / 6.0).powi(2);
    let analyzer = ExcessAnalyzer::new(&disk, hd).unwrap().with_net_size(64);
    let mean_excess = |r: f64| -> f64 {
        let angles = 8;
        (0..angles)
            .map(|k| {
                let a = 2.0 * PI * (k as f64 + 0.37) / angles as f64;
                let c = [0.5 + big * a.cos(), 0.5 + big * a.sin(), 0.0];
                analyzer.ball(c, r, (1, 0), 0.05).unwrap().total()
            })
            .sum::<f64>()
            / angles as f64
    };
    let (e8, e16) = (mean_excess(big / 8.0), mean_excess(big / 16.0));
    let ratio = e8 / e16;

    // Bad-ball interface mass along the r sweep.
    let bad: Vec<f64> = [4.0, 8.0, 16.0]
        .iter()
        .map(|k| analyzer.classify(big / k, 0.05).unwrap().bad_mass())
        .collect();
    let monotone = bad.windows(2).all(|w| w[1] <= w[0]);
    let secs = start.elapsed().as_secs_f64();
    Outcome::new(
        planar_ok && ratio >= 3.0 && monotone,
        format!(
            "planar max (tilt+energy)/r = {worst_planar:.2e} over {} balls; disk excess ratio R/8 : R/16 = {ratio:.2}; \
             bad mass at r = R/4, R/8, R/16: {bad:.4?}; {secs:.0} s",
            planar.interface_balls().count()
        ),
    )
}

fn test_fields(g: TorusGrid) -> Vec<Vec<ScalarField>> {
    let tau = 2.0 * PI;
    vec![
        vec![ScalarField::from_fn(g, |x| (tau * x[0]).sin()), ScalarField::constant(g, 0.0)],
        vec![
            ScalarField::from_fn(g, |x| (tau * x[0]).sin() * (tau * x[1]).cos()),
            ScalarField::from_fn(g, |x| (tau * x[1]).sin()),
        ],
        vec![
            ScalarField::from_fn(g, |x| (tau * (x[0] + x[1])).sin()),
            ScalarField::from_fn(g, |x| 0.5 * (2.0 * tau * x[1]).cos()),
        ],
    ]
}

fn criterion_11(runs: &mut Runs) -> Outcome {
    let h = 4e-4;
    let grids = [256usize, 512, 1024];
    let mut residuals = vec![Vec::new(); 3];
    let mut finest_ok = true;
    for &n in &grids {
        let g = TorusGrid::unit(2, n).unwrap();
        let chi0 = shapes::centered_ball(g, 0.25).unwrap();
        let cfg = SchemeConfig::with_steps(g, sigma_equal(2), h, 1).unwrap();
        let traj = runs.run(&format!("disk {n}² one step"), &chi0, &cfg);
        let chi1 = traj.last();
        let energy = traj.initial_energy();
        for (k, xi) in test_fields(g).iter().enumerate() {
            let norm = xi
                .iter()
                .flat_map(|c| c.values().iter())
                .fold(0.0f64, |m, v| m.max(v.abs()));
            let el = euler_lagrange(chi1, &chi0, xi, h, &sigma_equal(2)).unwrap();
            let r = el.residual().abs() / (norm * energy);
            residuals[k].push(r);
            if n == 1024 {
                finest_ok &= r <= 0.05;
            }
        }
    }
    let log_dx: Vec<f64> = grids.iter().map(|&n| (1.0 / n as f64).ln()).collect();
    let slopes: Vec<f64> = residuals
        .iter()
        .map(|r| {
            let y: Vec<f64> = r.iter().map(|v| v.ln()).collect();
            let mx = log_dx.iter().sum::<f64>() / 3.0;
            let my = y.iter().sum::<f64>() / 3.0;
            let sxy: f64 = log_dx.iter().zip(&y).map(|(x, y)| (x - mx) * (y - my)).sum();
            let sxx: f64 = log_dx.iter().map(|x| (x - mx).powi(2)).sum();
            // Residual against refinement: a decay means a positive slope
            // in log dx, i.e. a negative slope in log(1/dx).
            -sxy / sxx
        })
        .collect();
    let decays = slopes.iter().all(|s| *s < 0.0);
    Outcome::new(
        decays && finest_ok,
        format!(
            "relative residuals {}, slopes vs log(1/dx) {slopes:.2?}",
            residuals.iter().map(|r| sci(r)).collect::<Vec<_>>().join(" ")
        ),
    )
}

fn criterion_12(runs: &mut Runs) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let g = TorusGrid::unit(2, 32).unwrap();
    let mut equivariant = true;
    for _ in 0..20 {
        let sigma = random_sigma(&mut rng, 3);
        let p = random_partition(&mut rng, g, 3);
        let h = (rng.gen_range(2.0..4.0) * g.dx()).powi(2);
        let cfg = SchemeConfig::with_steps(g, sigma.clone(), h, 1).unwrap();
        let base = threshold_step(&p, &cfg).unwrap();
        let (axis, k) = (rng.gen_range(0..2), rng.gen_range(-15..16));
        equivariant &= threshold_step(&p.shifted(axis, k), &cfg).unwrap() == base.shifted(axis, k);
        equivariant &= threshold_step(&p.rotated_quarter(), &cfg).unwrap() == base.rotated_quarter();
        let perm = [2usize, 0, 1];
        let cfg_perm = SchemeConfig::with_steps(g, sigma.permuted(&perm).unwrap(), h, 1).unwrap();
        equivariant &= threshold_step(&p.relabeled(&perm), &cfg_perm).unwrap() == base.relabeled(&perm);
    }

    let gm = TorusGrid::unit(2, 128).unwrap();
    let f = ScalarField::from_fn(gm, |x| (x[0] * 7.0).sin().abs() + x[1] * x[1]);
    let mut mass_err: f64 = 0.0;
    let mut semigroup_err: f64 = 0.0;
    for h in [1e-4, 1e-3, 1e-2] {
        let u = gaussian_convolve(&f, h).unwrap();
        mass_err = mass_err.max((u.integral() - f.integral()).abs());
        let twice = gaussian_convolve(&gaussian_convolve(&f, h / 3.0).unwrap(), 2.0 * h / 3.0).unwrap();
        semigroup_err = semigroup_err.max(twice.max_abs_diff(&u).unwrap());
    }
    let conv = Convolver::new(gm, 1e-3).unwrap();
    let ones = conv.convolve(&vec![1.0; gm.len()]).unwrap();
    mass_err = mass_err.max(ones.iter().map(|v| (v - 1.0).abs()).fold(0.0, f64::max));

    let gh = TorusGrid::unit(2, 512).unwrap();
    let disk = shapes::centered_ball(gh, 0.25).unwrap();
    let coarse_cfg = SchemeConfig::new(gh, sigma_equal(2), 4e-4, 0.02).unwrap().with_snapshot_stride(1);
    let fine_cfg = SchemeConfig::new(gh, sigma_equal(2), 2e-4, 0.02).unwrap().with_snapshot_stride(2);
    let coarse_traj = runs.run("disk 512² h=4e-4", &disk, &coarse_cfg);
    let fine_traj = runs.run("disk 512² h=2e-4", &disk, &fine_cfg);
    let coarse = hoelder_volume_check(&coarse_traj).unwrap();
    let fine = hoelder_volume_check(&fine_traj).unwrap();
    let stable = coarse.stable_against(&fine);
    let bv0 = bv_time_modulus(&coarse_traj, 0.0).unwrap().modulus;

    Outcome::new(
        equivariant && mass_err <= 1e-12 && semigroup_err <= 1e-12 && stable && bv0 == 0.0,
        format!(
            "equivariance {}, mass error {mass_err:.1e}, semigroup error {semigroup_err:.1e}, \
             Hölder ratios {:.3} (h=4e-4) / {:.3} (h=2e-4)",
            if equivariant { "exact" } else { "broken" },
            coarse.max_ratio,
            fine.max_ratio
        ),
    )
}

type Criterion = fn(&mut Runs) -> Outcome;

fn main() {
    let selected: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let wanted = |id: &str| selected.is_empty() || selected.iter().any(|s| s == id);
    let criteria: [(&str, &str, Criterion); 13] = [
        ("1", "minimizing-movements equivalence", criterion_1),
        ("2", "energy-dissipation estimate (dedicated runs)", criterion_2),
        ("3", "flat-interface exactness", criterion_3),
        ("4", "consistency on a disk", criterion_4),
        ("5", "approximate monotonicity", criterion_5),
        ("6", "circle shrinking law", criterion_6),
        ("6c", "circle shrinking law, V = κ/2 companion", criterion_6_companion),
        ("7", "Herring angles", criterion_7),
        ("8", "two-phase reduction", criterion_8),
        ("9", "dissipation-measure bound", criterion_9),
        ("10", "excess diagnostics", criterion_10),
        ("11", "Euler-Lagrange residual", criterion_11),
        ("12", "invariance suite", criterion_12),
    ];
    let mut runs = Runs::default();
    let mut results: Vec<(String, String, Outcome)> = Vec::new();
    for (id, name, check) in criteria {
        let base = id.trim_end_matches('c');
        if !wanted(id) && !wanted(base) && !wanted("2") {
            continue;
        }
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(|| check(&mut runs)))
            .unwrap_or_else(|e| {
                let msg = e
                    .downcast_ref::<String>()
                    .cloned()
                    .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                    .unwrap_or_default();
                Outcome::new(false, format!("panicked: {msg}"))
            });
        if id == "2" {
            continue;
        }
        if wanted(id) || wanted(base) {
            println!(
                "criterion {id:>3} {:<44} {} : {} ({:.1} s)",
                name,
                if outcome.pass { "PASS" } else { "FAIL" },
                outcome.detail,
                start.elapsed().as_secs_f64()
            );
            results.push((id.to_string(), name.to_string(), outcome));
        }
    }
    if wanted("2") {
        let outcome = finish_criterion_2(&runs);
        println!(
            "criterion {:>3} {:<44} {} : {}",
            "2",
            "energy-dissipation estimate (all runs)",
            if outcome.pass { "PASS" } else { "FAIL" },
            outcome.detail
        );
        results.push(("2".into(), "energy-dissipation estimate".into(), outcome));
    }
    let failed: Vec<&str> = results.iter().filter(|r| !r.2.pass).map(|r| r.0.as_str()).collect();
    println!(
        "acceptance: {} of {} checks passed{}",
        results.len() - failed.len(),
        results.len(),
        if failed.is_empty() {
            String::new()
        } else {
            format!("; failing: {}", failed.join(", "))
        }
    );
    if !failed.is_empty() {
        std::process::exit(1);
    }
}
