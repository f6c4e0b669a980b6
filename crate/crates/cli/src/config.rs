//! Flat `key = value` experiment configuration.
//!
//! One key per line, `#` starts a comment, blank lines are ignored. Keys:
//!
//! | key | default | meaning |
//! |---|---|---|
//! | `experiment` | (from the command line) | `evolve`, `circle-test`, `junction-test`, `consistency`, `oracle-check`, `excess-scan` |
//! | `dim` | `2` | 1, 2 or 3 |
//! | `n` | `256` | cells per side |
//! | `side` | `1` | torus side length `Λ` |
//! | `phases` | from `sigma` or the initial data | number of phases `P` |
//! | `sigma` | `equal` | `equal`, or the upper triangle `σ_12, σ_13, …, σ_{P−1,P}` comma separated |
//! | `h` | | time step; `h_list` for sweeps (strictly decreasing) |
//! | `T` | | horizon; `steps` gives the step count instead |
//! | `alpha` | `1` | mesoscopic factor, `τ = α√h` |
//! | `stride` | `K = max(1, round(α/√h))` | snapshot stride in steps |
//! | `tie_rule` | `smallest-index` | or `keep-previous` |
//! | `initial` | per experiment | `disk(R)`, `disk(R, cx, cy[, cz])`, `stripe(width)`, `sectors(a_1, …, a_P)` (boundary angles in degrees), `t-junction`, `voronoi(seed, count)`, `file(path)` |
//! | `seed` | `0` | master seed, overridden by `--seed` |
//! | `delta` | `0.05` | good-ball threshold for `excess-scan` |
//! | `radii` | `R/4, R/8, R/16` | ball radii for `excess-scan` |
//! | `instances` | `100` | instance count for `oracle-check` |
//! | `tolerance` | per experiment | pass threshold used in `summary.txt` |

use mbo_core::{SurfaceTensionMatrix, TensionError, TieRule, TorusGrid};
use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("line {line}: {message}")]
    ParseError { line: usize, message: String },
    #[error("invalid {field}: {reason}")]
    ValidationError { field: String, reason: String },
}

impl ConfigError {
    fn invalid(field: &str, reason: impl Into<String>) -> Self {
        ConfigError::ValidationError {
            field: field.to_string(),
            reason: reason.into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExperimentKind {
    Evolve,
    CircleTest,
    JunctionTest,
    Consistency,
    OracleCheck,
    ExcessScan,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 6] = [
        ExperimentKind::Evolve,
        ExperimentKind::CircleTest,
        ExperimentKind::JunctionTest,
        ExperimentKind::Consistency,
        ExperimentKind::OracleCheck,
        ExperimentKind::ExcessScan,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Evolve => "evolve",
            ExperimentKind::CircleTest => "circle-test",
            ExperimentKind::JunctionTest => "junction-test",
            ExperimentKind::Consistency => "consistency",
            ExperimentKind::OracleCheck => "oracle-check",
            ExperimentKind::ExcessScan => "excess-scan",
        }
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ExperimentKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| format!("unknown experiment {s:?}"))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum InitialData {
    /// Phase 2 (1-based) inside, phase 1 outside. `None` centers the disk.
    Disk { radius: f64, center: Option<[f64; 3]> },
    Stripe { width: f64 },
    /// Boundary polar angles in radians around the torus center.
    Sectors { angles: Vec<f64> },
    TJunction,
    Voronoi { seed: u64, count: usize },
    File { path: PathBuf },
}

impl InitialData {
    /// Phase count implied by the shape, if any.
    fn phases(&self) -> Option<usize> {
        match self {
            InitialData::Disk { .. } | InitialData::Stripe { .. } => Some(2),
            InitialData::Sectors { angles } => Some(angles.len()),
            InitialData::TJunction => Some(3),
            InitialData::Voronoi { count, .. } => Some(*count),
            InitialData::File { .. } => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum TimeStep {
    Single(f64),
    /// Strictly decreasing.
    Sweep(Vec<f64>),
}

impl TimeStep {
    pub fn values(&self) -> Vec<f64> {
        match self {
            TimeStep::Single(h) => vec![*h],
            TimeStep::Sweep(v) => v.clone(),
        }
    }

    /// Smallest `h`.
    pub fn finest(&self) -> f64 {
        self.values().into_iter().fold(f64::INFINITY, f64::min)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Duration {
    Horizon(f64),
    Steps(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    pub grid: TorusGrid,
    pub phases: usize,
    pub sigma: SurfaceTensionMatrix,
    pub h: TimeStep,
    pub duration: Duration,
    pub alpha: f64,
    /// `None` means one snapshot per mesoscopic interval.
    pub stride: Option<usize>,
    pub tie_rule: TieRule,
    pub initial: InitialData,
    pub seed: u64,
    pub delta: f64,
    pub radii: Option<Vec<f64>>,
    pub instances: usize,
    pub tolerance: Option<f64>,
}

impl ExperimentConfig {
    /// Steps for time step `h`.
    pub fn steps_for(&self, h: f64) -> usize {
        match self.duration {
            Duration::Steps(n) => n,
            Duration::Horizon(t) => (t / h).round() as usize,
        }
    }

    /// Snapshot stride for time step `h`.
    pub fn stride_for(&self, h: f64) -> usize {
        self.stride
            .unwrap_or_else(|| ((self.alpha * h.sqrt() / h).round() as usize).max(1))
    }
}

const KEYS: [&str; 19] = [
    "experiment",
    "dim",
    "n",
    "side",
    "phases",
    "sigma",
    "h",
    "h_list",
    "T",
    "steps",
    "alpha",
    "stride",
    "tie_rule",
    "initial",
    "seed",
    "delta",
    "radii",
    "instances",
    "tolerance",
];

/// Parses and validates. `kind` is the experiment named on the command line;
/// a conflicting `experiment` key is an error. Unless `allow_underresolved`,
/// every `h` must satisfy `√h/dx ≥ 3`.
pub fn parse_config(
    text: &str,
    kind: Option<ExperimentKind>,
    allow_underresolved: bool,
) -> Result<ExperimentConfig, ConfigError> {
    let mut entries: BTreeMap<&str, (usize, &str)> = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (key, value) = content.split_once('=').ok_or_else(|| ConfigError::ParseError {
            line,
            message: format!("expected key = value, got {content:?}"),
        })?;
        let (key, value) = (key.trim(), value.trim());
        if !KEYS.contains(&key) {
            return Err(ConfigError::ParseError {
                line,
                message: format!("unknown key {key:?}"),
            });
        }
        if value.is_empty() {
            return Err(ConfigError::ParseError {
                line,
                message: format!("empty value for {key}"),
            });
        }
        if entries.insert(key, (line, value)).is_some() {
            return Err(ConfigError::ParseError {
                line,
                message: format!("duplicate key {key}"),
            });
        }
    }

    let get = |key: &str| entries.get(key).copied();
    fn num<T: FromStr>(entry: Option<(usize, &str)>, key: &str) -> Result<Option<T>, ConfigError> {
        match entry {
            None => Ok(None),
            Some((line, v)) => v.parse().map(Some).map_err(|_| ConfigError::ParseError {
                line,
                message: format!("{key}: cannot parse {v:?}"),
            }),
        }
    }
    fn list(entry: (usize, &str), key: &str) -> Result<Vec<f64>, ConfigError> {
        entry
            .1
            .split(',')
            .map(|s| {
                s.trim().parse::<f64>().map_err(|_| ConfigError::ParseError {
                    line: entry.0,
                    message: format!("{key}: cannot parse {s:?}"),
                })
            })
            .collect()
    }

    let kind = match (kind, get("experiment")) {
        (Some(k), None) => k,
        (cli, Some((line, v))) => {
            let parsed = v.parse::<ExperimentKind>().map_err(|message| ConfigError::ParseError { line, message })?;
            if let Some(k) = cli {
                if k != parsed {
                    return Err(ConfigError::invalid(
                        "experiment",
                        format!("config names {parsed} but {k} was requested"),
                    ));
                }
            }
            parsed
        }
        (None, None) => return Err(ConfigError::invalid("experiment", "no experiment given")),
    };

    let dim: usize = num(get("dim"), "dim")?.unwrap_or(2);
    let n: usize = num(get("n"), "n")?.unwrap_or(256);
    let side: f64 = num(get("side"), "side")?.unwrap_or(1.0);
    if !(1..=3).contains(&dim) {
        return Err(ConfigError::invalid("dim", format!("{dim} is not 1, 2 or 3")));
    }
    let grid = TorusGrid::new(dim, side, n).map_err(|e| ConfigError::invalid("n", e.to_string()))?;

    let initial = match get("initial") {
        Some(entry) => parse_initial(entry, dim)?,
        None => default_initial(kind),
    };
    check_initial(&initial, &grid)?;

    let explicit_phases: Option<usize> = num(get("phases"), "phases")?;
    let sigma_rows = match get("sigma") {
        None | Some((_, "equal")) => None,
        Some(entry) => Some(list(entry, "sigma")?),
    };
    let phases = match (explicit_phases, initial.phases(), &sigma_rows) {
        (Some(p), _, _) => p,
        (None, Some(p), _) => p,
        (None, None, Some(upper)) => phases_from_upper(upper.len())
            .ok_or_else(|| ConfigError::invalid("sigma", "entry count is not a triangular number"))?,
        (None, None, None) => 2,
    };
    if !(2..=255).contains(&phases) {
        return Err(ConfigError::invalid("phases", format!("{phases} outside 2..=255")));
    }
    if let Some(implied) = initial.phases() {
        if implied != phases {
            return Err(ConfigError::invalid(
                "phases",
                format!("initial data has {implied} phases, config says {phases}"),
            ));
        }
    }
    let sigma = match sigma_rows {
        None => SurfaceTensionMatrix::equal(phases),
        Some(upper) => {
            if phases_from_upper(upper.len()) != Some(phases) {
                return Err(ConfigError::invalid(
                    "sigma",
                    format!("{} entries do not form the upper triangle of {phases} phases", upper.len()),
                ));
            }
            let mut flat = vec![0.0; phases * phases];
            let mut k = 0;
            for i in 0..phases {
                for j in i + 1..phases {
                    flat[i * phases + j] = upper[k];
                    flat[j * phases + i] = upper[k];
                    k += 1;
                }
            }
            SurfaceTensionMatrix::from_flat(phases, flat)
        }
    }
    .map_err(|e: TensionError| ConfigError::invalid("sigma", e.to_string()))?;

    let h = match (get("h"), get("h_list")) {
        (Some(_), Some(_)) => return Err(ConfigError::invalid("h", "give either h or h_list, not both")),
        (Some(entry), None) => TimeStep::Single(num::<f64>(Some(entry), "h")?.unwrap()),
        (None, Some(entry)) => {
            let v = list(entry, "h_list")?;
            if v.is_empty() || v.windows(2).any(|w| w[1] >= w[0]) {
                return Err(ConfigError::invalid("h_list", "must be strictly decreasing"));
            }
            TimeStep::Sweep(v)
        }
        (None, None) => match kind {
            ExperimentKind::Consistency => TimeStep::Sweep(vec![1.6e-3, 4e-4, 1e-4]),
            ExperimentKind::OracleCheck => TimeStep::Single(1.0),
            _ => return Err(ConfigError::invalid("h", "required")),
        },
    };
    for value in h.values() {
        if !(value.is_finite() && value > 0.0) {
            return Err(ConfigError::invalid("h", format!("{value} must be positive")));
        }
        let resolution = value.sqrt() / grid.dx();
        if kind != ExperimentKind::OracleCheck && !allow_underresolved && resolution < 3.0 {
            return Err(ConfigError::invalid(
                "h",
                format!("√h/dx = {resolution:.3} < 3 for h = {value}; pass --allow-underresolved to run anyway"),
            ));
        }
    }

    let duration = match (num::<f64>(get("T"), "T")?, num::<usize>(get("steps"), "steps")?) {
        (Some(_), Some(_)) => return Err(ConfigError::invalid("T", "give either T or steps, not both")),
        (Some(t), None) => {
            if !(t.is_finite() && t >= 0.0) {
                return Err(ConfigError::invalid("T", format!("{t} must be nonnegative")));
            }
            for value in h.values() {
                let steps = (t / value).round();
                if (steps * value - t).abs() > 1e-9 * t.max(value) {
                    return Err(ConfigError::invalid("T", format!("{t} is not a multiple of h = {value}")));
                }
            }
            Duration::Horizon(t)
        }
        (None, Some(s)) => Duration::Steps(s),
        (None, None) => Duration::Steps(0),
    };

    let alpha: f64 = num(get("alpha"), "alpha")?.unwrap_or(1.0);
    if !(alpha > 0.0 && alpha <= 2.0) {
        return Err(ConfigError::invalid("alpha", format!("{alpha} outside (0, 2]")));
    }
    let stride: Option<usize> = num(get("stride"), "stride")?;
    if stride == Some(0) {
        return Err(ConfigError::invalid("stride", "must be at least 1"));
    }
    let tie_rule = match get("tie_rule") {
        None | Some((_, "smallest-index")) => TieRule::SmallestIndex,
        Some((_, "keep-previous")) => TieRule::KeepPrevious,
        Some((line, v)) => {
            return Err(ConfigError::ParseError {
                line,
                message: format!("tie_rule: unknown rule {v:?}"),
            })
        }
    };
    let seed = num(get("seed"), "seed")?.unwrap_or(0);
    let delta: f64 = num(get("delta"), "delta")?.unwrap_or(0.05);
    if !(delta > 0.0) {
        return Err(ConfigError::invalid("delta", format!("{delta} must be positive")));
    }
    let radii = get("radii").map(|e| list(e, "radii")).transpose()?;
    if let Some(r) = &radii {
        if r.is_empty() || r.iter().any(|v| !(*v > 0.0)) {
            return Err(ConfigError::invalid("radii", "must be positive"));
        }
    }
    let instances = num(get("instances"), "instances")?.unwrap_or(100);
    let tolerance = num(get("tolerance"), "tolerance")?;

    Ok(ExperimentConfig {
        kind,
        grid,
        phases,
        sigma,
        h,
        duration,
        alpha,
        stride,
        tie_rule,
        initial,
        seed,
        delta,
        radii,
        instances,
        tolerance,
    })
}

fn phases_from_upper(len: usize) -> Option<usize> {
    (2..=255).find(|p| p * (p - 1) / 2 == len)
}

fn default_initial(kind: ExperimentKind) -> InitialData {
    match kind {
        ExperimentKind::JunctionTest => InitialData::TJunction,
        _ => InitialData::Disk {
            radius: 0.25,
            center: None,
        },
    }
}

fn parse_initial((line, value): (usize, &str), dim: usize) -> Result<InitialData, ConfigError> {
    let err = |message: String| ConfigError::ParseError { line, message };
    if value == "t-junction" {
        return Ok(InitialData::TJunction);
    }
    let (name, rest) = value
        .split_once('(')
        .ok_or_else(|| err(format!("initial: expected shape(args), got {value:?}")))?;
    let args = rest
        .strip_suffix(')')
        .ok_or_else(|| err(format!("initial: missing ')' in {value:?}")))?;
    if name.trim() == "file" {
        return Ok(InitialData::File {
            path: PathBuf::from(args.trim()),
        });
    }
    let nums: Vec<f64> = args
        .split(',')
        .map(|s| s.trim().parse::<f64>().map_err(|_| err(format!("initial: cannot parse {s:?}"))))
        .collect::<Result<_, _>>()?;
    match (name.trim(), nums.as_slice()) {
        ("disk", [r]) => Ok(InitialData::Disk {
            radius: *r,
            center: None,
        }),
        ("disk", [r, c @ ..]) if c.len() == dim => {
            let mut center = [0.0; 3];
            center[..dim].copy_from_slice(c);
            Ok(InitialData::Disk {
                radius: *r,
                center: Some(center),
            })
        }
        ("stripe", [w]) => Ok(InitialData::Stripe { width: *w }),
        ("sectors", a) if a.len() >= 2 => Ok(InitialData::Sectors {
            angles: a.iter().map(|d| d.to_radians()).collect(),
        }),
        ("voronoi", [seed, count]) if *seed >= 0.0 && seed.fract() == 0.0 && count.fract() == 0.0 => {
            Ok(InitialData::Voronoi {
                seed: *seed as u64,
                count: *count as usize,
            })
        }
        _ => Err(err(format!("initial: unsupported shape {value:?}"))),
    }
}

fn check_initial(initial: &InitialData, grid: &TorusGrid) -> Result<(), ConfigError> {
    let side = grid.side();
    match initial {
        InitialData::Disk { radius, .. } => {
            if !(*radius > 0.0 && 2.0 * radius < side) {
                return Err(ConfigError::invalid("initial", format!("disk radius {radius} does not fit the torus")));
            }
        }
        InitialData::Stripe { width } => {
            if !(*width > 0.0 && *width < side) {
                return Err(ConfigError::invalid("initial", format!("stripe width {width} does not fit the torus")));
            }
        }
        InitialData::Sectors { angles } => {
            if grid.dim() != 2 {
                return Err(ConfigError::invalid("initial", "sectors need dim = 2"));
            }
            let tau = std::f64::consts::TAU;
            if angles.windows(2).any(|w| w[1] <= w[0]) || angles[0] < 0.0 || angles[angles.len() - 1] >= tau {
                return Err(ConfigError::invalid("initial", "sector angles must increase within [0, 360)"));
            }
        }
        InitialData::TJunction => {
            if grid.dim() != 2 {
                return Err(ConfigError::invalid("initial", "t-junction needs dim = 2"));
            }
        }
        InitialData::Voronoi { count, .. } => {
            if !(1..=255).contains(count) {
                return Err(ConfigError::invalid("initial", format!("voronoi count {count} outside 1..=255")));
            }
        }
        InitialData::File { .. } => {}
    }
    Ok(())
}
