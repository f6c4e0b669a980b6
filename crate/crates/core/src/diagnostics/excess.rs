//! Local half-space excess on balls and the good/bad split of a covering.
//!
//! Interfacial areas are measured with the localized approximate energy
//! `A_ζ(χ_k) = (1/(2c₀√h)) ∫ ζ [χ_k (1 − u_k) + (1 − χ_k) u_k]`, with
//! `u_k = G_h ∗ χ_k`. Comparison half-spaces are rasterized on the same
//! lattice and convolved with the same sampled kernel, so the areas of `χ_k`
//! and of `χ*` carry the same discretization bias and it cancels in the
//! excess.
//!
//! With `ν` the inner normal and `η` a radial cut-off, the tilt terms use
//! `∫ η |ν_i − ν*|² |∇χ_i| = 2(A_η(χ_i) − A_η(χ*)) + 2 ∫ (χ_i − χ*) ∇η·ν*`,
//! and the analogous identity for `χ_j` against `1 − χ*`.

use super::cells_in_ball;
use super::covering::BallCovering;
use crate::energetics::{phase_convolutions, reference, C0};
use crate::error::{MboError, Result};
use crate::fields::{Convolver, Partition, TorusGrid};
use std::borrow::Cow;
use std::io::Write;

/// Radial cut-off: 1 on `B_ρ`, 0 outside `B_{2ρ}`, quintic smoothstep in
/// between (`|∇η| ≤ 1.875/ρ`, `|∇²η| ≤ 5.8/ρ²`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cutoff {
    pub inner: f64,
}

impl Cutoff {
    pub fn value(&self, rho: f64) -> f64 {
        let t = (rho - self.inner) / self.inner;
        if t <= 0.0 {
            1.0
        } else if t >= 1.0 {
            0.0
        } else {
            1.0 - t * t * t * (10.0 - 15.0 * t + 6.0 * t * t)
        }
    }

    /// `dη/dρ`.
    pub fn slope(&self, rho: f64) -> f64 {
        let t = (rho - self.inner) / self.inner;
        if t <= 0.0 || t >= 1.0 {
            0.0
        } else {
            -30.0 * t * t * (1.0 - t) * (1.0 - t) / self.inner
        }
    }
}

/// Candidate normals. 2-D: `M` equally spaced angles, so doubling `M`
/// refines the net. 3-D: the first `M` points of a fixed spiral sequence, so
/// every net extends the smaller ones.
pub fn normal_net(dim: usize, m: usize) -> Vec<[f64; 3]> {
    match dim {
        1 => vec![[1.0, 0.0, 0.0], [-1.0, 0.0, 0.0]],
        2 => (0..m)
            .map(|k| {
                let a = 2.0 * std::f64::consts::PI * k as f64 / m as f64;
                [a.cos(), a.sin(), 0.0]
            })
            .collect(),
        _ => {
            let golden = (5f64.sqrt() - 1.0) / 2.0;
            (0..m)
                .map(|k| {
                    let z = 1.0 - 2.0 * (radical_inverse(k as u64) + 0.5 / 1024.0).min(1.0);
                    let s = (1.0 - z * z).max(0.0).sqrt();
                    let a = 2.0 * std::f64::consts::PI * (k as f64 * golden).fract();
                    [s * a.cos(), s * a.sin(), z]
                })
                .collect()
        }
    }
}

fn radical_inverse(mut k: u64) -> f64 {
    let mut inv = 0.0;
    let mut base = 0.5;
    while k > 0 {
        if k & 1 == 1 {
            inv += base;
        }
        k >>= 1;
        base *= 0.5;
    }
    inv
}

/// Per-ball excess and classification data.
#[derive(Debug, Clone, PartialEq)]
pub struct BallExcess {
    pub center: [f64; 3],
    pub r: f64,
    /// Majority phases `(i, j)`; `None` if at most one phase meets `B_{2r}`.
    pub pair: Option<(usize, usize)>,
    /// Minimizing normal `ν*` (half-space `{(x − c)·ν* > λ}` compared with
    /// `χ_i`).
    pub normal: [f64; 3],
    pub offset: f64,
    pub tilt_excess: f64,
    pub energy_excess: f64,
    pub bulk_l1: f64,
    /// `Σ_{k∉{i,j}} A_η(χ_k)`.
    pub minority_area: f64,
    /// `A_{1_{B_{2r}}}(χ_i)`.
    pub interface_mass: f64,
    /// `inf_ν* ∫ η_{2B} |ν_i − ν*|² |∇χ_i|` with `η_{2B}` a cut-off for
    /// `B_{2r}` in `B_{4r}`.
    pub good_tilt: f64,
    pub is_good: bool,
}

impl BallExcess {
    /// The full excess: minority area, tilt, energy and bulk terms.
    pub fn total(&self) -> f64 {
        self.minority_area + self.tilt_excess + self.energy_excess + self.bulk_l1
    }

    fn trivial(center: [f64; 3], r: f64) -> Self {
        Self {
            center,
            r,
            pair: None,
            normal: [0.0; 3],
            offset: 0.0,
            tilt_excess: 0.0,
            energy_excess: 0.0,
            bulk_l1: 0.0,
            minority_area: 0.0,
            interface_mass: 0.0,
            good_tilt: 0.0,
            is_good: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExcessReport {
    pub r: f64,
    pub delta: f64,
    pub balls: Vec<BallExcess>,
}

impl ExcessReport {
    pub fn good_count(&self) -> usize {
        self.balls.iter().filter(|b| b.is_good).count()
    }

    /// `Σ_{bad B} ∫_{2B} |∇χ|` by the area proxy.
    pub fn bad_mass(&self) -> f64 {
        self.balls.iter().filter(|b| !b.is_good).map(|b| b.interface_mass).sum()
    }

    /// Balls whose `B_{2r}` meets at least two phases.
    pub fn interface_balls(&self) -> impl Iterator<Item = &BallExcess> {
        self.balls.iter().filter(|b| b.pair.is_some())
    }

    /// Rows `cx,cy[,cz],r,tilt_excess,energy_excess,bulk_l1,is_good`.
    pub fn write_csv<W: Write>(&self, dim: usize, mut out: W) -> std::io::Result<()> {
        let axes = ["cx", "cy", "cz"];
        writeln!(out, "{},r,tilt_excess,energy_excess,bulk_l1,is_good", axes[..dim].join(","))?;
        for b in &self.balls {
            let c: Vec<String> = b.center[..dim].iter().map(|v| format!("{v:e}")).collect();
            writeln!(
                out,
                "{},{:e},{:e},{:e},{:e},{}",
                c.join(","),
                b.r,
                b.tilt_excess,
                b.energy_excess,
                b.bulk_l1,
                b.is_good as u8
            )?;
        }
        Ok(())
    }
}

/// Precomputed convolutions and the sampled 1-D kernel for repeated
/// per-ball evaluations on one partition.
pub struct ExcessAnalyzer<'a> {
    chi: &'a Partition,
    h: f64,
    u: Vec<Vec<f64>>,
    reach: isize,
    /// `C[m + reach] = Σ_{m' ≤ m} k(m')` for the normalized sampled Gaussian.
    cumulative: Vec<f64>,
    kernel: Vec<f64>,
    net: Vec<[f64; 3]>,
    /// Per-normal profiles of the half-space convolution (2-D only).
    tables: Vec<Option<HalfSpaceTable>>,
}

/// `s ↦ G_h ∗ 1_{y·ν > s'}` at projection excess `s`, which is piecewise
/// constant on the lattice: `values[k]` holds on `(breaks[k−1], breaks[k]]`.
#[derive(Clone)]
struct HalfSpaceTable {
    breaks: Vec<f64>,
    values: Vec<f64>,
}

impl HalfSpaceTable {
    fn lookup(&self, s: f64) -> f64 {
        // Most cells sit outside the kernel's reach of the plane.
        if s <= self.breaks[0] {
            return self.values[0];
        }
        let last = self.breaks.len() - 1;
        if s > self.breaks[last] {
            return self.values[last + 1];
        }
        self.values[self.breaks.partition_point(|&b| b < s)]
    }
}

struct LocalCell {
    idx: usize,
    label: u8,
    d: [f64; 3],
    eta: f64,
    grad: [f64; 3],
}

/// Cells of a planar ball grouped into lattice lines along each axis, with
/// running sums per line, so that half-plane sums cost one lookup per line.
struct Lines {
    by_axis: [LineSet; 2],
    n_i: usize,
    n_j: usize,
    grad_i: [f64; 3],
    grad_j: [f64; 3],
    grad_all: [f64; 3],
}

struct LineSet {
    lines: Vec<Line>,
    /// Cut-off values line by line, increasing along the axis.
    eta: Vec<f64>,
    /// Per line a leading zero, then running `[χ_i, χ_j, ∂_0η, ∂_1η]`.
    prefix: Vec<[f64; 4]>,
}

struct Line {
    /// Offset into `eta`; the line's prefix rows start at `start + index`.
    start: usize,
    len: usize,
    /// Coordinate along the axis of the first cell, relative to the center.
    first: f64,
    /// Coordinate across the axis.
    other: f64,
    /// Coordinates along the axis. Projections are formed from these exactly
    /// as `dot(d, ν)` would, so ties resolve the same way.
    pos: Vec<f64>,
}

impl Line {
    /// Cells `[k0, k1)` of the line with projection `> lam`; projections
    /// are monotone along the line since `|na| ≥ 1/√2`.
    fn above(&self, na: f64, nb: f64, dx: f64, lam: f64) -> (usize, usize) {
        let len = self.len as isize;
        let p = |k: isize| self.pos[k as usize] * na + self.other * nb;
        let t = (lam - self.other * nb - self.first * na) / (dx * na);
        if na > 0.0 {
            // Truncation may be one off; the loops correct it.
            let mut k = (t as isize + 1).clamp(0, len);
            while k > 0 && p(k - 1) > lam {
                k -= 1;
            }
            while k < len && p(k) <= lam {
                k += 1;
            }
            (k as usize, self.len)
        } else {
            let mut k = (t as isize).clamp(0, len);
            while k < len && p(k) > lam {
                k += 1;
            }
            while k > 0 && p(k - 1) <= lam {
                k -= 1;
            }
            (0, k as usize)
        }
    }

    fn projection(&self, k: usize, na: f64, nb: f64, _dx: f64) -> f64 {
        self.pos[k] * na + self.other * nb
    }
}

impl LineSet {
    fn count_above(&self, na: f64, nb: f64, dx: f64, lam: f64) -> usize {
        self.lines
            .iter()
            .map(|l| {
                let (a, b) = l.above(na, nb, dx, lam);
                b - a
            })
            .sum()
    }

    /// `(q_T, q_{T+1})`, the `T`-th and `(T+1)`-th largest projections, for
    /// `1 ≤ T < n`.
    fn order_statistics(&self, na: f64, nb: f64, dx: f64, target: usize) -> (f64, f64) {
        let ends = self.lines.iter().flat_map(|l| {
            [l.projection(0, na, nb, dx), l.projection(l.len - 1, na, nb, dx)]
        });
        let (mut lo, mut hi) = ends.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), p| (a.min(p), b.max(p)));
        lo -= dx;
        // Narrow (lo, hi] around the T-th largest until few projections are
        // left in it, or only ties, then select among those.
        let (mut c_lo, mut c_hi) = (self.count_above(na, nb, dx, lo), 0);
        while c_lo - c_hi > 32 && hi - lo > 1e-6 * dx {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            let c = self.count_above(na, nb, dx, mid);
            if c >= target {
                (lo, c_lo) = (mid, c);
            } else {
                (hi, c_hi) = (mid, c);
            }
        }
        let mut window = Vec::with_capacity(c_lo - c_hi);
        let mut below = f64::NEG_INFINITY;
        for l in &self.lines {
            let (a, b) = l.above(na, nb, dx, lo);
            let (a2, b2) = l.above(na, nb, dx, hi);
            // Cells above lo but not above hi.
            let (k0, k1) = if na > 0.0 { (a, a2) } else { (b2, b) };
            window.extend((k0..k1).map(|k| l.projection(k, na, nb, dx)));
            let rest = if na > 0.0 { a.checked_sub(1) } else { (b < l.len).then_some(b) };
            if let Some(k) = rest {
                below = below.max(l.projection(k, na, nb, dx));
            }
        }
        window.sort_unstable_by(|x, y| y.total_cmp(x));
        let rank = target - c_hi - 1;
        (window[rank], window.get(rank + 1).copied().unwrap_or(below))
    }

}

/// One half-space comparison on a ball.
struct Comparison {
    normal: [f64; 3],
    offset: f64,
    tilt_i: f64,
    tilt_j: f64,
    energy: f64,
    bulk: f64,
}

impl<'a> ExcessAnalyzer<'a> {
    pub fn new(chi: &'a Partition, h: f64) -> Result<Self> {
        let grid = *chi.grid();
        let conv = Convolver::new(grid, h)?;
        let u = phase_convolutions(&conv, chi)?;
        let dx = grid.dx();
        let reach = (8.0 * h.sqrt() / dx).ceil() as isize;
        let raw: Vec<f64> = (-reach..=reach)
            .map(|m| {
                let z = m as f64 * dx;
                (-z * z / (2.0 * h)).exp()
            })
            .collect();
        let total: f64 = raw.iter().sum();
        let kernel: Vec<f64> = raw.iter().map(|v| v / total).collect();
        let mut acc = 0.0;
        let cumulative = kernel
            .iter()
            .map(|v| {
                acc += v;
                acc
            })
            .collect();
        let default_net = if grid.dim() == 3 { 128 } else { 64 };
        let analyzer = Self {
            chi,
            h,
            u,
            reach,
            cumulative,
            kernel,
            net: Vec::new(),
            tables: Vec::new(),
        };
        Ok(analyzer.with_net_size(default_net))
    }

    pub fn with_net_size(mut self, m: usize) -> Self {
        self.net = normal_net(self.grid().dim(), m.max(1));
        self.tables = self.net.iter().map(|&nu| self.table(nu)).collect();
        self
    }

    pub fn net_size(&self) -> usize {
        self.net.len()
    }

    /// Tabulates `half_space_convolution(normal, ·)` between its jumps.
    fn table(&self, normal: [f64; 3]) -> Option<HalfSpaceTable> {
        if self.grid().dim() != 2 {
            return None;
        }
        let dx = self.grid().dx();
        let (a, b) = if normal[0].abs() >= normal[1].abs() { (0, 1) } else { (1, 0) };
        let step = normal[a].abs() * dx;
        let reach = self.reach;
        let mut breaks: Vec<f64> = (-reach..=reach)
            .flat_map(|m| (-reach - 2..=reach + 2).map(move |j| m as f64 * dx * normal[b] + j as f64 * step))
            .collect();
        breaks.sort_by(f64::total_cmp);
        breaks.dedup_by(|x, y| (*x - *y).abs() < 1e-9 * step);
        let mut values = Vec::with_capacity(breaks.len() + 1);
        values.push(self.half_space_convolution(normal, breaks[0] - step));
        for w in breaks.windows(2) {
            values.push(self.half_space_convolution(normal, 0.5 * (w[0] + w[1])));
        }
        values.push(self.half_space_convolution(normal, breaks[breaks.len() - 1] + step));
        Some(HalfSpaceTable { breaks, values })
    }

    fn grid(&self) -> &TorusGrid {
        self.chi.grid()
    }

    fn check_radius(&self, r: f64) -> Result<()> {
        let required = 6.0 * self.h.sqrt();
        if r < required {
            return Err(MboError::UnresolvedScale { scale: r, required });
        }
        if 4.0 * r + 8.0 * self.h.sqrt() >= self.grid().side() / 2.0 {
            return Err(MboError::InvalidInput(format!(
                "ball radius {r} too large for the torus"
            )));
        }
        Ok(())
    }

    fn local_cells(&self, center: [f64; 3], inner: f64) -> Vec<LocalCell> {
        let cut = Cutoff { inner };
        let labels = self.chi.labels();
        cells_in_ball(self.grid(), center, 2.0 * inner)
            .into_iter()
            .map(|(idx, d)| {
                let rho = (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt();
                let slope = cut.slope(rho);
                let grad = if rho > 0.0 {
                    [slope * d[0] / rho, slope * d[1] / rho, slope * d[2] / rho]
                } else {
                    [0.0; 3]
                };
                LocalCell {
                    idx,
                    label: labels[idx],
                    d,
                    eta: cut.value(rho),
                    grad,
                }
            })
            .collect()
    }

    fn area_scale(&self) -> f64 {
        self.grid().cell_volume() / (2.0 * C0 * self.h.sqrt())
    }

    /// `A_η(χ_k)` over the given cells.
    fn area(&self, cells: &[LocalCell], phase: usize) -> f64 {
        let u = &self.u[phase];
        let mut acc = 0.0;
        for c in cells {
            let inside = c.label as usize == phase;
            let v = u[c.idx];
            acc += c.eta * if inside { 1.0 - v } else { v };
        }
        acc * self.area_scale()
    }

    /// `A_{1_{B_ρ}}(χ_k)`.
    pub fn sharp_area(&self, center: [f64; 3], radius: f64, phase: usize) -> f64 {
        let u = &self.u[phase];
        let acc: f64 = cells_in_ball(self.grid(), center, radius)
            .into_iter()
            .map(|(idx, _)| if self.chi.label(idx) == phase { 1.0 - u[idx] } else { u[idx] })
            .sum();
        acc * self.area_scale()
    }

    /// `∫ χ_k ∇η`.
    fn gradient_moment(&self, cells: &[LocalCell], phase: usize) -> [f64; 3] {
        let mut m = [0.0; 3];
        for c in cells.iter().filter(|c| c.label as usize == phase) {
            for a in 0..3 {
                m[a] += c.grad[a];
            }
        }
        let cv = self.grid().cell_volume();
        [m[0] * cv, m[1] * cv, m[2] * cv]
    }

    /// `G_h ∗ 1_{y·ν > s'}` at a cell whose projection exceeds the offset by
    /// `s`, summed on the lattice.
    fn half_space_convolution(&self, normal: [f64; 3], s: f64) -> f64 {
        let dim = self.grid().dim();
        let dx = self.grid().dx();
        let reach = self.reach;
        let bound = reach as f64 * dx * (normal[0].abs() + normal[1].abs() + normal[2].abs());
        if s >= bound {
            return 1.0;
        }
        if s <= -bound {
            return 0.0;
        }
        let principal = (0..dim)
            .max_by(|&a, &b| normal[a].abs().total_cmp(&normal[b].abs()))
            .unwrap_or(0);
        let others: Vec<usize> = (0..dim).filter(|&a| a != principal).collect();
        let na = normal[principal];
        let cum = |m: isize| -> f64 {
            if m < -reach {
                0.0
            } else if m >= reach {
                1.0
            } else {
                self.cumulative[(m + reach) as usize]
            }
        };
        // Offsets z with z·ν < s.
        let along = |t: f64| -> f64 {
            let q = t / (na * dx);
            if na > 0.0 {
                cum(q.ceil() as isize - 1)
            } else {
                1.0 - cum(q.floor() as isize)
            }
        };
        match others.len() {
            0 => along(s),
            1 => {
                let b = others[0];
                (-reach..=reach)
                    .map(|m| self.kernel[(m + reach) as usize] * along(s - m as f64 * dx * normal[b]))
                    .sum()
            }
            _ => {
                let (b, c) = (others[0], others[1]);
                let mut acc = 0.0;
                for m in -reach..=reach {
                    let wb = self.kernel[(m + reach) as usize];
                    for l in -reach..=reach {
                        let w = wb * self.kernel[(l + reach) as usize];
                        acc += w * along(s - m as f64 * dx * normal[b] - l as f64 * dx * normal[c]);
                    }
                }
                acc
            }
        }
    }

    /// Volume-matched offset: `χ* = {(x − c)·ν > λ}` has `target` cells
    /// (the count of `χ_i`) among the projections `proj`.
    fn matched_offset(&self, proj: &[f64], target: usize) -> f64 {
        let dx = self.grid().dx();
        let n = proj.len();
        if target == 0 {
            return proj.iter().copied().fold(f64::NEG_INFINITY, f64::max) + dx;
        }
        if target == n {
            return proj.iter().copied().fold(f64::INFINITY, f64::min) - dx;
        }
        // Descending order: the target-th largest and the next one.
        let mut scratch = proj.to_vec();
        let above = *scratch.select_nth_unstable_by(n - target, f64::total_cmp).1;
        let below = scratch[..n - target].iter().copied().fold(f64::NEG_INFINITY, f64::max);
        0.5 * (above + below)
    }

    /// Line decomposition of a planar cell list for the phases `i`, `j`.
    fn lines(&self, cells: &[LocalCell], i: usize, j: Option<usize>) -> Option<Lines> {
        if self.grid().dim() != 2 || cells.is_empty() {
            return None;
        }
        let dx = self.grid().dx();
        let j_label = j.unwrap_or(usize::MAX);
        let set = |axis: usize| -> LineSet {
            let other = 1 - axis;
            let base = cells.iter().map(|c| c.d[other]).fold(f64::INFINITY, f64::min);
            // Offsets are non-negative, so truncation rounds.
            let keys: Vec<usize> = cells.iter().map(|c| ((c.d[other] - base) / dx + 0.5) as usize).collect();
            let key = |c: usize| keys[c];
            let mut starts = vec![0usize; keys.iter().max().map_or(0, |&k| k + 2)];
            for &k in &keys {
                starts[k + 1] += 1;
            }
            for k in 1..starts.len() {
                starts[k] += starts[k - 1];
            }
            let mut order = vec![0usize; cells.len()];
            let mut fill = starts.clone();
            for (c, &k) in keys.iter().enumerate() {
                order[fill[k]] = c;
                fill[k] += 1;
            }
            for w in starts.windows(2) {
                order[w[0]..w[1]].sort_by(|&a, &b| cells[a].d[axis].total_cmp(&cells[b].d[axis]));
            }
            let mut lines: Vec<Line> = Vec::new();
            let mut prefix = Vec::with_capacity(order.len() + cells.len());
            let mut acc = [0.0; 4];
            for (pos, &c) in order.iter().enumerate() {
                let cell = &cells[c];
                if lines.last().is_none_or(|l| key(order[l.start]) != key(c)) {
                    lines.push(Line {
                        start: pos,
                        len: 0,
                        first: cell.d[axis],
                        other: cell.d[other],
                        pos: Vec::new(),
                    });
                    acc = [0.0; 4];
                    prefix.push(acc);
                }
                let line = lines.last_mut().expect("line just pushed");
                line.len += 1;
                line.pos.push(cell.d[axis]);
                let label = cell.label as usize;
                acc[0] += (label == i) as u8 as f64;
                acc[1] += (label == j_label) as u8 as f64;
                acc[2] += cell.grad[0];
                acc[3] += cell.grad[1];
                prefix.push(acc);
            }
            let eta = order.iter().map(|&c| cells[c].eta).collect();
            LineSet { lines, eta, prefix }
        };
        let mut grad_i = [0.0; 3];
        let mut grad_j = [0.0; 3];
        let mut grad_all = [0.0; 3];
        let (mut n_i, mut n_j) = (0, 0);
        for c in cells {
            let label = c.label as usize;
            for a in 0..3 {
                grad_all[a] += c.grad[a];
                if label == i {
                    grad_i[a] += c.grad[a];
                }
                if label == j_label {
                    grad_j[a] += c.grad[a];
                }
            }
            n_i += (label == i) as usize;
            n_j += (label == j_label) as usize;
        }
        Some(Lines {
            by_axis: [set(0), set(1)],
            n_i,
            n_j,
            grad_i,
            grad_j,
            grad_all,
        })
    }

    /// Planar `compare` through the line decomposition: the matched offset
    /// by bisection on counts, half-plane sums from the running sums, and the
    /// smoothed half-space only on the cells within the kernel's reach of
    /// the plane.
    #[allow(clippy::too_many_arguments)]
    fn compare_lines(
        &self,
        cells: &[LocalCell],
        lines: &Lines,
        inner: f64,
        normal: [f64; 3],
        table: &HalfSpaceTable,
        j: bool,
        areas: (f64, f64),
    ) -> Comparison {
        debug_assert!(table.values[0] == 0.0 && table.values[table.values.len() - 1] == 1.0);
        let dx = self.grid().dx();
        let axis = if normal[0].abs() >= normal[1].abs() { 0 } else { 1 };
        let (na, nb) = (normal[axis], normal[1 - axis]);
        let set = &lines.by_axis[axis];
        let n = cells.len();
        let target = lines.n_i;
        let offset = if target == 0 || target == n {
            let ends = set.lines.iter().flat_map(|l| [l.projection(0, na, nb, dx), l.projection(l.len - 1, na, nb, dx)]);
            if target == 0 {
                ends.fold(f64::NEG_INFINITY, f64::max) + dx
            } else {
                ends.fold(f64::INFINITY, f64::min) - dx
            }
        } else {
            let (above, below) = set.order_statistics(na, nb, dx, target);
            0.5 * (above + below)
        };
        let (band_lo, band_hi) = (table.breaks[0], table.breaks[table.breaks.len() - 1]);
        let mut star = [0.0; 4];
        let mut n_star = 0usize;
        let mut star_area = 0.0;
        for (index, l) in set.lines.iter().enumerate() {
            let (a, b) = l.above(na, nb, dx, offset);
            n_star += b - a;
            let row = |k: usize| set.prefix[l.start + index + k];
            let (pa, pb) = (row(a), row(b));
            for q in 0..4 {
                star[q] += pb[q] - pa[q];
            }
            // Cells with s = p − offset in (band_lo, band_hi].
            let (lo_a, lo_b) = l.above(na, nb, dx, offset + band_lo);
            let (hi_a, hi_b) = l.above(na, nb, dx, offset + band_hi);
            let (k0, k1) = if na > 0.0 { (lo_a, hi_a) } else { (hi_b, lo_b) };
            if k0 == k1 {
                continue;
            }
            // Walk the cells in increasing s, advancing through the breaks.
            let eta = &set.eta[l.start..l.start + l.len];
            let s_at = |k: usize| l.projection(k, na, nb, dx) - offset;
            let first = if na > 0.0 { k0 } else { k1 - 1 };
            let mut at = table.breaks.partition_point(|&b| b < s_at(first));
            let mut add = |k: usize| {
                let s = s_at(k);
                while at < table.breaks.len() && table.breaks[at] < s {
                    at += 1;
                }
                let u = table.values[at];
                star_area += eta[k] * if s > 0.0 { 1.0 - u } else { u };
            };
            if na > 0.0 {
                (k0..k1).for_each(&mut add);
            } else {
                (k0..k1).rev().for_each(&mut add);
            }
        }
        let grad_star = [star[2], star[3], 0.0];
        let (i_star, j_star) = (star[0] as usize, star[1] as usize);
        let tilt_i = dot(lines.grad_i, normal) - dot(grad_star, normal);
        let tilt_j = -(dot(lines.grad_j, normal) - dot(lines.grad_all, normal) + dot(grad_star, normal));
        let bulk_i = target + n_star - 2 * i_star;
        let bulk_j = 2 * j_star + n - n_star - lines.n_j;
        self.finish(normal, offset, inner, star_area, (tilt_i, tilt_j), (bulk_i, bulk_j), j, areas)
    }

    /// Compares `χ_i` (and `χ_j` against the complement, when given) with
    /// the volume-matched half-space along `normal`.
    #[allow(clippy::too_many_arguments)]
    fn compare(
        &self,
        cells: &[LocalCell],
        inner: f64,
        normal: [f64; 3],
        table: Option<&HalfSpaceTable>,
        lines: Option<&Lines>,
        i: usize,
        j: Option<usize>,
        areas: (f64, f64),
    ) -> Comparison {
        if let (Some(lines), Some(table)) = (lines, table) {
            return self.compare_lines(cells, lines, inner, normal, table, j.is_some(), areas);
        }
        let proj: Vec<f64> = cells.iter().map(|c| dot(c.d, normal)).collect();
        let target = cells.iter().filter(|c| c.label as usize == i).count();
        let offset = self.matched_offset(&proj, target);
        // Tilts and bulk differences split into sums over χ_i, χ_j and the
        // half-space, so the loop only accumulates per-set totals.
        let j_label = j.unwrap_or(usize::MAX);
        let mut star_area = 0.0;
        let mut grad_i = [0.0; 3];
        let mut grad_j = [0.0; 3];
        let mut grad_all = [0.0; 3];
        let mut grad_star = [0.0; 3];
        let (mut n_star, mut i_star, mut j_star, mut n_j) = (0usize, 0usize, 0usize, 0usize);
        for (c, p) in cells.iter().zip(&proj) {
            let s = p - offset;
            let star = s > 0.0;
            let u_star = match table {
                Some(t) => t.lookup(s),
                None => self.half_space_convolution(normal, s),
            };
            star_area += c.eta * if star { 1.0 - u_star } else { u_star };
            let label = c.label as usize;
            let in_i = label == i;
            let in_j = label == j_label;
            for a in 0..3 {
                grad_all[a] += c.grad[a];
            }
            if in_i {
                for a in 0..3 {
                    grad_i[a] += c.grad[a];
                }
            }
            if in_j {
                n_j += 1;
                for a in 0..3 {
                    grad_j[a] += c.grad[a];
                }
            }
            if star {
                n_star += 1;
                i_star += in_i as usize;
                j_star += in_j as usize;
                for a in 0..3 {
                    grad_star[a] += c.grad[a];
                }
            }
        }
        let n = cells.len();
        // Σ (χ_i − χ*) ∇η·ν and Σ (χ_j − (1 − χ*)) ∇η·ν.
        let tilt_i = dot(grad_i, normal) - dot(grad_star, normal);
        let tilt_j = -(dot(grad_j, normal) - dot(grad_all, normal) + dot(grad_star, normal));
        let bulk_i = target + n_star - 2 * i_star;
        let bulk_j = 2 * j_star + n - n_star - n_j;
        self.finish(normal, offset, inner, star_area, (tilt_i, tilt_j), (bulk_i, bulk_j), j.is_some(), areas)
    }

    /// Scales the raw sums of a comparison into tilt, energy and bulk terms.
    #[allow(clippy::too_many_arguments)]
    fn finish(
        &self,
        normal: [f64; 3],
        offset: f64,
        inner: f64,
        star_area: f64,
        (tilt_i, tilt_j): (f64, f64),
        (bulk_i, bulk_j): (usize, usize),
        j: bool,
        areas: (f64, f64),
    ) -> Comparison {
        let cv = self.grid().cell_volume();
        let star_area = star_area * self.area_scale();
        let tilt_i = (2.0 * (areas.0 - star_area) + 2.0 * tilt_i * cv).max(0.0);
        let (tilt_j, energy_j, bulk_j) = match j {
            true => (
                (2.0 * (areas.1 - star_area) + 2.0 * tilt_j * cv).max(0.0),
                (areas.1 - star_area).abs(),
                bulk_j as f64 * cv / inner,
            ),
            false => (0.0, 0.0, 0.0),
        };
        Comparison {
            normal,
            offset,
            tilt_i,
            tilt_j,
            energy: (areas.0 - star_area).abs() + energy_j,
            bulk: bulk_i as f64 * cv / inner + bulk_j,
        }
    }

    /// `ν̂ = −∫χ_i∇η / |∫χ_i∇η|`, falling back to the first net direction.
    fn data_normal(&self, cells: &[LocalCell], phase: usize) -> [f64; 3] {
        let m = self.gradient_moment(cells, phase);
        let n = (m[0] * m[0] + m[1] * m[1] + m[2] * m[2]).sqrt();
        if n > 0.0 {
            [-m[0] / n, -m[1] / n, -m[2] / n]
        } else {
            normal_net(self.grid().dim(), 1)[0]
        }
    }

    /// The data normal followed by the net, with tabulated profiles where
    /// available.
    fn candidates(&self, cells: &[LocalCell], phase: usize) -> Vec<([f64; 3], Option<Cow<'_, HalfSpaceTable>>)> {
        let data = self.data_normal(cells, phase);
        let mut out = vec![(data, self.table(data).map(Cow::Owned))];
        out.extend(self.net.iter().zip(&self.tables).map(|(nu, t)| (*nu, t.as_ref().map(Cow::Borrowed))));
        out
    }

    /// The two phases with the most cells in `B_{2r}`.
    fn majority_pair(&self, center: [f64; 3], r: f64) -> Option<(usize, usize)> {
        let mut counts = vec![0usize; self.chi.phases()];
        for (idx, _) in cells_in_ball(self.grid(), center, 2.0 * r) {
            counts[self.chi.label(idx)] += 1;
        }
        let mut order: Vec<usize> = (0..counts.len()).collect();
        order.sort_by(|&a, &b| counts[b].cmp(&counts[a]).then(a.cmp(&b)));
        if order.len() < 2 || counts[order[1]] == 0 {
            None
        } else {
            Some((order[0], order[1]))
        }
    }

    /// `inf_ν* ∫ η_{2B} |ν_i − ν*|² |∇χ_i|` with `η_{2B}` a cut-off for
    /// `B_{2r}` in `B_{4r}`.
    fn good_ball_tilt(&self, center: [f64; 3], r: f64, phase: usize) -> f64 {
        let cells = self.local_cells(center, 2.0 * r);
        let area = self.area(&cells, phase);
        let lines = self.lines(&cells, phase, None);
        self.candidates(&cells, phase)
            .into_iter()
            .map(|(nu, t)| {
                self.compare(&cells, 2.0 * r, nu, t.as_deref(), lines.as_ref(), phase, None, (area, 0.0))
                    .tilt_i
            })
            .fold(f64::INFINITY, f64::min)
    }

    /// Excess of `χ` on `B_r(center)` for the phases `pair = (i, j)`,
    /// minimized over the normal net (plus the data-driven normal).
    pub fn ball(&self, center: [f64; 3], r: f64, pair: (usize, usize), delta: f64) -> Result<BallExcess> {
        self.check_radius(r)?;
        let (i, j) = pair;
        let phases = self.chi.phases();
        if i >= phases || j >= phases || i == j {
            return Err(MboError::InvalidInput(format!("invalid phase pair ({i}, {j})")));
        }
        let cells = self.local_cells(center, r);
        let minority_area: f64 = (0..phases)
            .filter(|&k| k != i && k != j)
            .map(|k| self.area(&cells, k))
            .sum();
        let areas = (self.area(&cells, i), self.area(&cells, j));
        let lines = self.lines(&cells, i, Some(j));
        let best = self
            .candidates(&cells, i)
            .into_iter()
            .map(|(nu, t)| self.compare(&cells, r, nu, t.as_deref(), lines.as_ref(), i, Some(j), areas))
            .min_by(|a, b| {
                let ta = a.tilt_i + a.tilt_j + a.energy + a.bulk;
                let tb = b.tilt_i + b.tilt_j + b.energy + b.bulk;
                ta.total_cmp(&tb)
            })
            .expect("net is never empty");
        let interface_mass = self.sharp_area(center, 2.0 * r, i);
        let good_tilt = self.good_ball_tilt(center, r, i);
        let d = self.grid().dim();
        let mass_floor = 0.5 * reference::unit_ball_volume(d - 1) * (2.0 * r).powi(d as i32 - 1);
        Ok(BallExcess {
            center,
            r,
            pair: Some(pair),
            normal: best.normal,
            offset: best.offset,
            tilt_excess: best.tilt_i + best.tilt_j,
            energy_excess: best.energy,
            bulk_l1: best.bulk,
            minority_area,
            interface_mass,
            good_tilt,
            is_good: good_tilt <= delta * r.powi(d as i32 - 1) && interface_mass >= mass_floor,
        })
    }

    /// Evaluates every ball of the covering `ℬ_r`. Balls whose `B_{2r}`
    /// meets a single phase carry no interface and are reported as bad with
    /// zero mass.
    pub fn classify(&self, r: f64, delta: f64) -> Result<ExcessReport> {
        self.check_radius(r)?;
        let covering = BallCovering::new(*self.grid(), r)?;
        let mut balls = Vec::with_capacity(covering.len());
        for center in covering.centers() {
            match self.majority_pair(center, r) {
                Some(pair) => balls.push(self.ball(center, r, pair, delta)?),
                None => balls.push(BallExcess::trivial(center, r)),
            }
        }
        Ok(ExcessReport { r, delta, balls })
    }
}

fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

/// Single-ball excess with a normal net of `net_size` directions.
pub fn excess_on_ball(
    chi: &Partition,
    h: f64,
    center: [f64; 3],
    r: f64,
    pair: (usize, usize),
    net_size: usize,
    delta: f64,
) -> Result<BallExcess> {
    ExcessAnalyzer::new(chi, h)?.with_net_size(net_size).ball(center, r, pair, delta)
}

/// Excess and good/bad split over the covering `ℬ_r`.
pub fn classify_covering(chi: &Partition, h: f64, r: f64, delta: f64) -> Result<ExcessReport> {
    ExcessAnalyzer::new(chi, h)?.classify(r, delta)
}
