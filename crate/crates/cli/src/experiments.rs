//! Experiment drivers. Each writes its artifacts into the output directory
//! and returns the lines of `summary.txt`.

use crate::config::{Duration, ExperimentConfig, ExperimentKind, InitialData};
use crate::rng::stream;
use crate::summary::Summary;
use crate::HarnessError;
use mbo_core::diagnostics::{
    circle_law_deviation, classify_covering, disk_radius_series, fit_square_radius_slope, junction_angles_measured,
    locate_triple_junction,
};
use mbo_core::energetics::{
    approximate_energy, approximate_monotonicity_check, energy_dissipation_check, reference, write_records_csv,
};
use mbo_core::fields::{shapes, snapshot};
use mbo_core::scheme::minimizing_movement_oracle;
use mbo_core::{herring_angles, run, Partition, SchemeConfig, SurfaceTensionMatrix, TorusGrid, Trajectory};
use rand::Rng;
use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

/// `∫₀^T E_h(χ^h(t)) dt` for the piecewise constant interpolation
/// `χ^h(t) = χⁿ` on `[nh, (n+1)h)`, i.e. `Σ_{n<N} h·E_h(χⁿ)`.
pub fn time_integrated_energy(traj: &Trajectory) -> f64 {
    let energies = traj.energies();
    let n = traj.steps();
    traj.h() * energies[..n].iter().sum::<f64>()
}

/// `time_integrated_energy` of every member of an `h`-sweep.
pub fn time_integrated_energies(sweep: &[Trajectory]) -> Vec<(f64, f64)> {
    sweep.iter().map(|t| (t.h(), time_integrated_energy(t))).collect()
}

pub fn initial_partition(cfg: &ExperimentConfig) -> Result<Partition, HarnessError> {
    let g = cfg.grid;
    let c = g.side() / 2.0;
    let p = match &cfg.initial {
        InitialData::Disk { radius, center: None } => shapes::centered_ball(g, *radius)?,
        InitialData::Disk {
            radius,
            center: Some(center),
        } => shapes::ball(g, 2, *center, *radius, 1, 0)?,
        InitialData::Stripe { width } => shapes::centered_stripe(g, *width)?,
        InitialData::Sectors { angles } => shapes::sectors(g, [c, c, c], angles)?,
        InitialData::TJunction => shapes::t_junction(g)?,
        InitialData::Voronoi { seed, count } => {
            let seeds = shapes::random_seeds(&g, *count, &mut stream(cfg.seed, "voronoi", *seed));
            shapes::voronoi(g, &seeds)?
        }
        InitialData::File { path } => {
            let p = snapshot::read_labels(BufReader::new(File::open(path)?))?;
            if *p.grid() != g || p.phases() != cfg.phases {
                return Err(HarnessError::Validation(format!(
                    "snapshot {} does not match the configured grid and phase count",
                    path.display()
                )));
            }
            p
        }
    };
    Ok(p)
}

fn scheme_config(cfg: &ExperimentConfig, h: f64, steps: usize) -> Result<SchemeConfig, HarnessError> {
    Ok(SchemeConfig::with_steps(cfg.grid, cfg.sigma.clone(), h, steps)?
        .with_alpha(cfg.alpha)?
        .with_tie_rule(cfg.tie_rule)
        .with_snapshot_stride(cfg.stride_for(h)))
}

fn write_run(traj: &Trajectory, dir: &Path, snapshots: bool) -> Result<(), HarnessError> {
    fs::create_dir_all(dir)?;
    let mut out = BufWriter::new(File::create(dir.join("records.csv"))?);
    write_records_csv(traj, &mut out)?;
    out.flush()?;
    if snapshots {
        let snap_dir = dir.join("snapshots");
        fs::create_dir_all(&snap_dir)?;
        for (n, chi) in traj.snapshots() {
            let mut f = BufWriter::new(File::create(snap_dir.join(format!("step_{n:06}.mbolbl")))?);
            snapshot::write_labels(chi, &mut f)?;
            f.flush()?;
            if chi.grid().dim() == 2 {
                let mut f = BufWriter::new(File::create(snap_dir.join(format!("step_{n:06}.pgm")))?);
                snapshot::write_pgm(chi, &mut f)?;
                f.flush()?;
            }
        }
    }
    Ok(())
}

fn dissipation_lines(summary: &mut Summary, traj: &Trajectory) {
    let report = energy_dissipation_check(traj);
    let margin = if report.step_margins.is_empty() { 0.0 } else { report.min_margin() };
    summary.check("energy_dissipation", report.passed(), format!("{margin:e}"));
    summary.measure("time_integrated_energy", format!("{:e}", time_integrated_energy(traj)));
}

pub fn run_experiment(cfg: &ExperimentConfig, out: &Path) -> Result<Summary, HarnessError> {
    fs::create_dir_all(out)?;
    let summary = match cfg.kind {
        ExperimentKind::Evolve => evolve(cfg, out)?,
        ExperimentKind::CircleTest => circle_test(cfg, out)?,
        ExperimentKind::JunctionTest => junction_test(cfg, out)?,
        ExperimentKind::Consistency => consistency(cfg, out)?,
        ExperimentKind::OracleCheck => oracle_check(cfg, out)?,
        ExperimentKind::ExcessScan => excess_scan(cfg, out)?,
    };
    fs::write(out.join("summary.txt"), summary.to_string())?;
    Ok(summary)
}

fn single_h(cfg: &ExperimentConfig) -> f64 {
    cfg.h.finest()
}

fn evolve(cfg: &ExperimentConfig, out: &Path) -> Result<Summary, HarnessError> {
    let h = single_h(cfg);
    let chi = initial_partition(cfg)?;
    let traj = run(&chi, &scheme_config(cfg, h, cfg.steps_for(h))?, &mut [])?;
    write_run(&traj, out, true)?;
    let mut summary = Summary::default();
    dissipation_lines(&mut summary, &traj);
    let present: Vec<usize> = traj.snapshots().iter().map(|(_, p)| p.phases_present()).collect();
    summary.check(
        "phase_count_nonincreasing",
        present.windows(2).all(|w| w[1] <= w[0]),
        format!("{} -> {}", present[0], present[present.len() - 1]),
    );
    summary.measure("final_energy", format!("{:e}", traj.energies()[traj.steps()]));
    Ok(summary)
}

fn disk_radius(cfg: &ExperimentConfig) -> Result<f64, HarnessError> {
    match cfg.initial {
        InitialData::Disk { radius, .. } => Ok(radius),
        _ => Err(HarnessError::Validation(format!("{} needs disk initial data", cfg.kind))),
    }
}

fn circle_test(cfg: &ExperimentConfig, out: &Path) -> Result<Summary, HarnessError> {
    let r0 = disk_radius(cfg)?;
    let h = single_h(cfg);
    let d = cfg.grid.dim();
    if d < 2 {
        return Err(HarnessError::Validation("circle-test needs dim 2 or 3".into()));
    }
    let slope = -2.0 * (d as f64 - 1.0);
    let steps = match cfg.duration {
        // The classical law reaches R₀/2 at t = 3R₀²/(4|slope|).
        Duration::Steps(0) => (0.75 * r0 * r0 / slope.abs() / h).ceil() as usize,
        _ => cfg.steps_for(h),
    };
    let chi = initial_partition(cfg)?;
    let traj = run(&chi, &scheme_config(cfg, h, steps)?, &mut [])?;
    write_run(&traj, out, false)?;
    let series = disk_radius_series(&traj, 1)?;
    let mut f = BufWriter::new(File::create(out.join("radius.csv"))?);
    writeln!(f, "n,t,R,R2")?;
    for (n, (t, r)) in series.iter().enumerate() {
        writeln!(f, "{n},{t:e},{r:e},{:e}", r * r)?;
    }
    f.flush()?;
    let tol = cfg.tolerance.unwrap_or(0.03);
    let deviation = circle_law_deviation(&series, r0, slope, r0 / 2.0);
    let mut summary = Summary::default();
    summary.check("radius_law_deviation", deviation <= tol, format!("{deviation:e}"));
    summary.measure(
        "half_curvature_law_deviation",
        format!("{:e}", circle_law_deviation(&series, r0, slope / 2.0, r0 / 2.0)),
    );
    let fitted = fit_square_radius_slope(&series, r0 / 2.0).unwrap_or(f64::NAN);
    summary.measure("fitted_square_radius_slope", format!("{fitted:e}"));
    dissipation_lines(&mut summary, &traj);
    Ok(summary)
}

fn junction_test(cfg: &ExperimentConfig, out: &Path) -> Result<Summary, HarnessError> {
    if cfg.phases != 3 || cfg.grid.dim() != 2 {
        return Err(HarnessError::Validation("junction-test needs three phases in 2-D".into()));
    }
    let h = single_h(cfg);
    let chi = initial_partition(cfg)?;
    let traj = run(&chi, &scheme_config(cfg, h, cfg.steps_for(h))?, &mut [])?;
    write_run(&traj, out, false)?;
    let s = &cfg.sigma;
    let (a, b, c) = herring_angles(s.get(0, 1), s.get(0, 2), s.get(1, 2))?;
    let target = [a.to_degrees(), b.to_degrees(), c.to_degrees()];
    let half = traj.horizon() / 2.0;
    let centre = cfg.grid.side() / 2.0;
    let mut f = BufWriter::new(File::create(out.join("angles.csv"))?);
    writeln!(f, "n,t,theta_1,theta_2,theta_3")?;
    let mut mean = [0.0; 3];
    let mut count = 0usize;
    for (n, snap) in traj.snapshots() {
        let t = *n as f64 * h;
        let Ok(vertex) = locate_triple_junction(snap, [centre, centre, 0.0]) else {
            continue;
        };
        let Ok(angles) = junction_angles_measured(snap, vertex, None) else {
            continue;
        };
        let mut deg = [f64::NAN; 3];
        for (k, theta) in angles {
            deg[k] = theta.to_degrees();
        }
        writeln!(f, "{n},{t:e},{:e},{:e},{:e}", deg[0], deg[1], deg[2])?;
        if t >= half - 1e-12 && deg.iter().all(|v| v.is_finite()) {
            for k in 0..3 {
                mean[k] += deg[k];
            }
            count += 1;
        }
    }
    f.flush()?;
    let mut summary = Summary::default();
    if count == 0 {
        summary.check("herring_angles", false, "no junction found");
    } else {
        let mean = mean.map(|m| m / count as f64);
        let worst = (0..3).map(|k| (mean[k] - target[k]).abs()).fold(0.0, f64::max);
        summary.check("herring_angles", worst <= cfg.tolerance.unwrap_or(3.0), format!("{worst:e}"));
        for k in 0..3 {
            summary.measure(&format!("theta_{}", k + 1), format!("{:e}", mean[k]));
            summary.measure(&format!("theta_{}_target", k + 1), format!("{:e}", target[k]));
        }
    }
    dissipation_lines(&mut summary, &traj);
    Ok(summary)
}

fn reference_energy(cfg: &ExperimentConfig) -> Option<f64> {
    let s = cfg.sigma.get(0, 1);
    let d = cfg.grid.dim();
    match cfg.initial {
        InitialData::Disk { radius, .. } => Some(reference::sphere_energy(d, radius, s)),
        InitialData::Stripe { .. } => Some(2.0 * reference::flat_interface_energy(cfg.grid.side().powi(d as i32 - 1), s)),
        _ => None,
    }
}

fn consistency(cfg: &ExperimentConfig, out: &Path) -> Result<Summary, HarnessError> {
    let chi = initial_partition(cfg)?;
    let hs = cfg.h.values();
    let exact = reference_energy(cfg);
    let mut summary = Summary::default();
    let mut errors = Vec::new();
    let mut integrated = Vec::new();
    let mut f = BufWriter::new(File::create(out.join("consistency.csv"))?);
    writeln!(f, "h,Eh,reference,rel_error,time_integrated_energy")?;
    for (k, &h) in hs.iter().enumerate() {
        let e = approximate_energy(&chi, h, &cfg.sigma)?;
        let steps = cfg.steps_for(h);
        let tie = if steps > 0 {
            let traj = run(&chi, &scheme_config(cfg, h, steps)?, &mut [])?;
            write_run(&traj, &out.join(format!("h_{k}")), false)?;
            let v = time_integrated_energy(&traj);
            integrated.push(v);
            format!("{v:e}")
        } else {
            String::new()
        };
        let (reference, error) = match exact {
            Some(x) => {
                let err = (e - x).abs() / x;
                errors.push(err);
                (format!("{x:e}"), format!("{err:e}"))
            }
            None => (String::new(), String::new()),
        };
        writeln!(f, "{h:e},{e:e},{reference},{error},{tie}")?;
    }
    f.flush()?;
    if let Some(last) = errors.last() {
        summary.check(
            "consistency_error_decreasing",
            errors.windows(2).all(|w| w[1] < w[0]),
            format!("{last:e}"),
        );
    }
    let mono = approximate_monotonicity_check(&chi, &hs, &cfg.sigma)?;
    let slack = mono.pairs.iter().map(|p| p.slack).fold(f64::INFINITY, f64::min);
    summary.check("approximate_monotonicity", mono.passed(), format!("{slack:e}"));
    if integrated.len() >= 2 {
        let (a, b) = (integrated[integrated.len() - 2], integrated[integrated.len() - 1]);
        let gap = (a - b).abs() / b.abs().max(f64::MIN_POSITIVE);
        summary.check("time_integrated_cauchy", gap <= cfg.tolerance.unwrap_or(0.02), format!("{gap:e}"));
    }
    Ok(summary)
}

/// Random admissible tensions with off-diagonal entries in `[0.6, 1.4)`.
fn random_sigma(rng: &mut impl Rng, phases: usize) -> SurfaceTensionMatrix {
    loop {
        let mut rows = vec![vec![0.0; phases]; phases];
        for i in 0..phases {
            for j in i + 1..phases {
                let s = rng.gen_range(0.6..1.4);
                rows[i][j] = s;
                rows[j][i] = s;
            }
        }
        if let Ok(s) = SurfaceTensionMatrix::validate(&rows) {
            return s;
        }
    }
}

fn oracle_check(cfg: &ExperimentConfig, out: &Path) -> Result<Summary, HarnessError> {
    let mut rng = stream(cfg.seed, "oracle", 0);
    let tol = cfg.tolerance.unwrap_or(1e-10);
    let mut f = BufWriter::new(File::create(out.join("oracle.csv"))?);
    writeln!(f, "instance,cells,phases,h,scheme_objective,oracle_objective,gap")?;
    let mut matches = 0usize;
    let mut worst: f64 = 0.0;
    for k in 0..cfg.instances {
        let phases = rng.gen_range(2..=3usize);
        let cells = rng.gen_range(4..=10usize);
        let g = TorusGrid::unit(1, cells)?;
        let h = g.dx().powi(2) * rng.gen_range(0.5..4.0);
        let sigma = random_sigma(&mut rng, phases);
        let labels: Vec<u8> = (0..cells).map(|_| rng.gen_range(0..phases as u8)).collect();
        let prev = Partition::new(g, phases, labels)?;
        let outcome = minimizing_movement_oracle(&prev, &SchemeConfig::with_steps(g, sigma, h, 1)?)?;
        let gap = (outcome.scheme_objective - outcome.oracle_objective).abs();
        worst = worst.max(gap);
        if gap <= tol {
            matches += 1;
        }
        writeln!(
            f,
            "{k},{cells},{phases},{h:e},{:e},{:e},{gap:e}",
            outcome.scheme_objective, outcome.oracle_objective
        )?;
    }
    f.flush()?;
    let mut summary = Summary::default();
    summary.check(
        "oracle_matches",
        matches == cfg.instances,
        format!("{matches}/{}", cfg.instances),
    );
    summary.measure("max_objective_gap", format!("{worst:e}"));
    Ok(summary)
}

fn excess_scan(cfg: &ExperimentConfig, out: &Path) -> Result<Summary, HarnessError> {
    let h = single_h(cfg);
    let radii = match (&cfg.radii, &cfg.initial) {
        (Some(r), _) => r.clone(),
        (None, InitialData::Disk { radius, .. }) => vec![radius / 4.0, radius / 8.0, radius / 16.0],
        (None, _) => return Err(HarnessError::Validation("excess-scan needs radii".into())),
    };
    let chi0 = initial_partition(cfg)?;
    let steps = cfg.steps_for(h);
    let chi = if steps > 0 {
        let traj = run(&chi0, &scheme_config(cfg, h, steps)?, &mut [])?;
        write_run(&traj, out, false)?;
        traj.last().clone()
    } else {
        chi0
    };
    let mut f = BufWriter::new(File::create(out.join("excess.csv"))?);
    writeln!(f, "r,balls,interface_balls,good,bad_mass")?;
    let mut bad = Vec::new();
    for (k, &r) in radii.iter().enumerate() {
        let report = classify_covering(&chi, h, r, cfg.delta)?;
        let mut balls = BufWriter::new(File::create(out.join(format!("excess_{k}.csv")))?);
        report.write_csv(cfg.grid.dim(), &mut balls)?;
        balls.flush()?;
        writeln!(
            f,
            "{r:e},{},{},{},{:e}",
            report.balls.len(),
            report.interface_balls().count(),
            report.good_count(),
            report.bad_mass()
        )?;
        bad.push((r, report.bad_mass()));
    }
    f.flush()?;
    let mut ordered = bad.clone();
    ordered.sort_by(|a, b| b.0.total_cmp(&a.0));
    let mut summary = Summary::default();
    summary.check(
        "bad_mass_nonincreasing",
        ordered.windows(2).all(|w| w[1].1 <= w[0].1),
        ordered
            .iter()
            .map(|(_, m)| format!("{m:e}"))
            .collect::<Vec<_>>()
            .join(" "),
    );
    Ok(summary)
}
