//! Finite-horizon orbit-density experiments. Orbits of the horocycle,
//! geodesic and affine actions are folded into a Dirichlet domain and binned
//! on a grid over (base point, direction); the fraction of cells visited is
//! the density proxy.

use std::f64::consts::TAU;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fuchsian::{kernel_filter, octagon, DirichletReducer, GroupPresentation, HyperbolicCylinder, KernelFilter};
use crate::hyperbolic::{BoundaryPoint, Frame, HPoint, Moebius};
use crate::keylemma::KeyLemmaRun;

/// Samples per independently anchored sweep chunk.
pub const CHUNK: usize = 4096;
/// Coverage above which a rising trend is read as density.
pub const DENSE_THRESHOLD: f64 = 0.9;
/// Coverage below which a provably empty row is read as a stall.
pub const STALL_THRESHOLD: f64 = 0.5;
/// Sub-samples per axis used to decide whether a cell meets the domain.
const MASK_SUBSAMPLES: usize = 8;
/// Sheets on either side of sheet 0 binned for groups with kernel weights.
pub const DEFAULT_SHEET_WINDOW: usize = 2;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FlowKind {
    Horocycle,
    Geodesic,
    Affine,
}

impl FlowKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            FlowKind::Horocycle => "horocycle",
            FlowKind::Geodesic => "geodesic",
            FlowKind::Affine => "affine",
        }
    }
}

/// Coordinates the spatial bins are laid out in. Directions are always the
/// half-plane tangent angle.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Chart {
    HalfPlane,
    /// Cayley image in the unit disk, `w = (z − i)/(z + i)`.
    Disk,
}

impl Chart {
    pub fn coords(&self, z: HPoint) -> (f64, f64) {
        match self {
            Chart::HalfPlane => (z.re(), z.im()),
            Chart::Disk => {
                let w = z.to_disk();
                (w.re, w.im)
            }
        }
    }

    fn point(&self, x: f64, y: f64) -> Option<HPoint> {
        match self {
            Chart::HalfPlane => HPoint::new(x, y).ok(),
            Chart::Disk => HPoint::from_disk(num_complex::Complex64::new(x, y)).ok(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoverageGrid {
    pub x_bins: usize,
    pub y_bins: usize,
    pub angle_bins: usize,
    /// `(x_min, x_max, y_min, y_max)` in chart coordinates.
    pub domain_box: (f64, f64, f64, f64),
    pub chart: Chart,
    /// Sheets `−w..=w` of a ℤ-cover binned separately; 0 for the base surface.
    #[serde(default)]
    pub sheet_window: usize,
    /// Spatial cells meeting the fundamental domain; `None` counts all.
    #[serde(skip)]
    admissible: Option<Vec<bool>>,
}

/// One folded frame: base point, half-plane direction, and for ℤ-covers
/// the sheet it lies on.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReducedFrame {
    pub base: HPoint,
    pub direction: f64,
    pub sheet: i64,
}

impl CoverageGrid {
    pub fn new(x_bins: usize, y_bins: usize, angle_bins: usize, domain_box: (f64, f64, f64, f64), chart: Chart) -> Result<Self> {
        if x_bins == 0 || y_bins == 0 || angle_bins == 0 {
            return Err(Error::InvalidArgument("grid bins must be >= 1".into()));
        }
        let (x0, x1, y0, y1) = domain_box;
        if !(x0 < x1) || !(y0 < y1) || ![x0, x1, y0, y1].iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidArgument(format!("invalid grid box {domain_box:?}")));
        }
        Ok(CoverageGrid { x_bins, y_bins, angle_bins, domain_box, chart, sheet_window: 0, admissible: None })
    }

    /// 20×20×16 grid over the disk-chart box of the regular octagon.
    pub fn octagon_default() -> Self {
        let r = (0.5 * octagon::circumradius()).tanh() * (1.0 + 1e-9);
        CoverageGrid::new(20, 20, 16, (-r, r, -r, r), Chart::Disk).expect("valid box")
    }

    /// 20×20×16 grid over the half-plane box of the annulus
    /// `e^{−ℓ/2} ≤ |z| ≤ e^{ℓ/2}`, the Dirichlet domain of the cylinder at `i`.
    pub fn cylinder_default(c: &HyperbolicCylinder) -> Self {
        let r = (0.5 * c.systole_length()).exp();
        CoverageGrid::new(20, 20, 16, (-r, r, 0.0, r), Chart::HalfPlane).expect("valid box")
    }

    /// Disk-chart grid whose box is the bounding box of the Dirichlet domain
    /// of `reducer`, estimated on a 400×400 lattice of the disk `|w| < 0.999`
    /// and padded by one lattice step.
    pub fn fit_domain(reducer: &DirichletReducer, x_bins: usize, y_bins: usize, angle_bins: usize) -> Result<Self> {
        const N: usize = 400;
        const R: f64 = 0.999;
        let h = 2.0 / N as f64;
        let inside: Vec<(f64, f64)> = (0..N * N)
            .into_par_iter()
            .filter_map(|k| {
                let x = -1.0 + ((k % N) as f64 + 0.5) * h;
                let y = -1.0 + ((k / N) as f64 + 0.5) * h;
                if x * x + y * y >= R * R {
                    return None;
                }
                let z = Chart::Disk.point(x, y)?;
                reducer.is_reduced(z).then_some((x, y))
            })
            .collect();
        if inside.is_empty() {
            return Err(Error::Degenerate("empty Dirichlet domain sample"));
        }
        let fold = |f: fn(f64, f64) -> f64, init: f64, pick: fn(&(f64, f64)) -> f64| inside.iter().map(pick).fold(init, f);
        let bx = (
            (fold(f64::min, 1.0, |p| p.0) - h).max(-1.0),
            (fold(f64::max, -1.0, |p| p.0) + h).min(1.0),
            (fold(f64::min, 1.0, |p| p.1) - h).max(-1.0),
            (fold(f64::max, -1.0, |p| p.1) + h).min(1.0),
        );
        CoverageGrid::new(x_bins, y_bins, angle_bins, bx, Chart::Disk)
    }

    /// Default-shaped grid for `g`: the cylinder annulus box, the octagon box
    /// for the genus-two group, and a fitted disk box otherwise. Always
    /// masked to the domain.
    pub fn for_group(g: &GroupPresentation, x_bins: usize, y_bins: usize, angle_bins: usize) -> Result<Self> {
        let reducer = DirichletReducer::new(g);
        let grid = if let Some(c) = as_cylinder(g) {
            let base = CoverageGrid::cylinder_default(&c);
            CoverageGrid::new(x_bins, y_bins, angle_bins, base.domain_box, base.chart)?
        } else if is_octagon_group(g) {
            let base = CoverageGrid::octagon_default();
            CoverageGrid::new(x_bins, y_bins, angle_bins, base.domain_box, base.chart)?
        } else {
            CoverageGrid::fit_domain(&reducer, x_bins, y_bins, angle_bins)?
        };
        let window = if g.kernel_weights().is_some() { DEFAULT_SHEET_WINDOW } else { 0 };
        Ok(grid.with_domain_mask(&reducer).with_sheet_window(window))
    }

    pub fn with_sheet_window(mut self, window: usize) -> Self {
        self.sheet_window = window;
        self
    }

    pub fn sheets(&self) -> usize {
        2 * self.sheet_window + 1
    }

    /// Restricts the cell count to spatial cells that meet the Dirichlet
    /// domain of `reducer`, decided on a sub-sample of each cell.
    pub fn with_domain_mask(mut self, reducer: &DirichletReducer) -> Self {
        let (x0, x1, y0, y1) = self.domain_box;
        let (dx, dy) = ((x1 - x0) / self.x_bins as f64, (y1 - y0) / self.y_bins as f64);
        let mask = (0..self.x_bins * self.y_bins)
            .into_par_iter()
            .map(|cell| {
                let (ix, iy) = (cell % self.x_bins, cell / self.x_bins);
                (0..MASK_SUBSAMPLES * MASK_SUBSAMPLES).any(|k| {
                    let fx = ((k % MASK_SUBSAMPLES) as f64 + 0.5) / MASK_SUBSAMPLES as f64;
                    let fy = ((k / MASK_SUBSAMPLES) as f64 + 0.5) / MASK_SUBSAMPLES as f64;
                    let x = x0 + (ix as f64 + fx) * dx;
                    let y = y0 + (iy as f64 + fy) * dy;
                    self.chart.point(x, y).is_some_and(|z| reducer.is_reduced(z))
                })
            })
            .collect();
        self.admissible = Some(mask);
        self
    }

    pub fn spatial_cells(&self) -> usize {
        self.x_bins * self.y_bins
    }

    pub fn is_admissible(&self, spatial: usize) -> bool {
        self.admissible.as_ref().is_none_or(|m| m[spatial])
    }

    pub fn cells_total(&self) -> usize {
        let spatial = match &self.admissible {
            None => self.spatial_cells(),
            Some(m) => m.iter().filter(|&&b| b).count(),
        };
        spatial * self.sheets() * self.angle_bins
    }

    /// Row index (along y) and spatial cell of a base point, if inside the box.
    pub fn spatial_cell(&self, z: HPoint) -> Option<(usize, usize)> {
        let (x, y) = self.chart.coords(z);
        let (x0, x1, y0, y1) = self.domain_box;
        if x < x0 || x > x1 || y < y0 || y > y1 {
            return None;
        }
        let ix = (((x - x0) / (x1 - x0) * self.x_bins as f64) as usize).min(self.x_bins - 1);
        let iy = (((y - y0) / (y1 - y0) * self.y_bins as f64) as usize).min(self.y_bins - 1);
        Some((iy, iy * self.x_bins + ix))
    }

    pub fn cell(&self, f: &ReducedFrame) -> Option<usize> {
        let (_, spatial) = self.spatial_cell(f.base)?;
        if !self.is_admissible(spatial) {
            return None;
        }
        let w = self.sheet_window as i64;
        if f.sheet.abs() > w {
            return None;
        }
        let ia = ((f.direction.rem_euclid(TAU) / TAU * self.angle_bins as f64) as usize).min(self.angle_bins - 1);
        Some((spatial * self.sheets() + (f.sheet + w) as usize) * self.angle_bins + ia)
    }

    /// Lower edge of row `iy` in chart coordinates.
    pub fn row_floor(&self, iy: usize) -> f64 {
        let (_, _, y0, y1) = self.domain_box;
        y0 + iy as f64 * (y1 - y0) / self.y_bins as f64
    }
}

/// Visited cells; merging is a bitwise OR, so chunk order never matters.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HitSet {
    bits: Vec<bool>,
}

impl HitSet {
    pub fn empty(grid: &CoverageGrid) -> Self {
        HitSet { bits: vec![false; grid.spatial_cells() * grid.sheets() * grid.angle_bins] }
    }

    pub fn from_frames(grid: &CoverageGrid, frames: &[ReducedFrame]) -> Self {
        frames
            .par_chunks(CHUNK)
            .map(|chunk| {
                let mut h = HitSet::empty(grid);
                for f in chunk {
                    if let Some(c) = grid.cell(f) {
                        h.bits[c] = true;
                    }
                }
                h
            })
            .reduce(|| HitSet::empty(grid), |a, b| a.merge(&b))
    }

    pub fn merge(mut self, other: &HitSet) -> Self {
        for (a, b) in self.bits.iter_mut().zip(&other.bits) {
            *a |= *b;
        }
        self
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn contains(&self, other: &HitSet) -> bool {
        self.bits.iter().zip(&other.bits).all(|(a, b)| *a || !*b)
    }

    /// Number of (sheet, direction) bins hit over spatial cell `spatial`.
    pub fn angles_hit(&self, grid: &CoverageGrid, spatial: usize) -> usize {
        let per_cell = grid.sheets() * grid.angle_bins;
        self.bits[spatial * per_cell..(spatial + 1) * per_cell].iter().filter(|&&b| b).count()
    }

    /// Whether any cell in spatial row `iy` was hit.
    pub fn row_hit(&self, grid: &CoverageGrid, iy: usize) -> bool {
        let per_row = grid.x_bins * grid.sheets() * grid.angle_bins;
        self.bits[iy * per_row..(iy + 1) * per_row].iter().any(|&b| b)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OrbitSample {
    pub flow: FlowKind,
    pub step: f64,
    pub count: usize,
    pub frames: Vec<ReducedFrame>,
}

/// Dirichlet folding that also tracks the ℤ-cover sheet through the kernel
/// weights of the folding elements.
struct Folder {
    reducer: DirichletReducer,
    weights: Option<KernelFilter>,
}

impl Folder {
    fn new(g: &GroupPresentation) -> Result<Self> {
        let weights = g.kernel_weights().map(|w| kernel_filter(g, w)).transpose()?;
        Ok(Folder { reducer: DirichletReducer::new(g), weights })
    }

    /// Folded frame `γ·f` and the sheet shift `−φ(γ)`: the lift `f = γ⁻¹·(γ·f)`
    /// sits on the sheet of `γ⁻¹`.
    fn fold(&self, f: &Frame) -> Result<(Frame, i64)> {
        let r = self.reducer.reduce(f)?;
        let shift = match &self.weights {
            Some(k) => -k.weight(&r.applied_element().word),
            None => 0,
        };
        Ok((r.frame, shift))
    }
}

fn record(f: &Frame, sheet: i64) -> ReducedFrame {
    ReducedFrame { base: f.base(), direction: f.direction(), sheet }
}

fn sample_count(s_max: f64, ds: f64) -> Result<usize> {
    if !(ds > 0.0) || !ds.is_finite() {
        return Err(Error::InvalidArgument(format!("step {ds} must be positive")));
    }
    if !(s_max >= ds) || !s_max.is_finite() {
        return Err(Error::InvalidArgument(format!("horizon {s_max} must be >= step {ds}")));
    }
    Ok((s_max / ds + 1e-9).floor() as usize + 1)
}

/// Folded frames `v·u_{j·ds}` for `j = 0..count`. Each chunk is anchored by
/// direct evaluation and then advanced by `u_ds` with re-folding.
fn horocycle_sweep(folder: &Folder, v: &Frame, ds: f64, count: usize) -> Result<Vec<ReducedFrame>> {
    let step = Moebius::unipotent(ds);
    let chunks = count.div_ceil(CHUNK);
    let parts: Vec<Result<Vec<ReducedFrame>>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let start = c * CHUNK;
            let end = (start + CHUNK).min(count);
            let anchor = if start == 0 { *v } else { v.acted(&Moebius::unipotent(start as f64 * ds)) };
            let (mut f, mut sheet) = folder.fold(&anchor)?;
            let mut out = Vec::with_capacity(end - start);
            for j in start..end {
                out.push(record(&f, sheet));
                if j + 1 < end {
                    let (next, shift) = folder.fold(&f.acted(&step))?;
                    f = next;
                    sheet += shift;
                }
            }
            Ok(out)
        })
        .collect();
    let mut frames = Vec::with_capacity(count);
    for p in parts {
        frames.extend(p?);
    }
    Ok(frames)
}

/// Folded geodesic orbit, advanced step by step (the flow is expanding, so
/// re-anchoring far along the orbit is not numerically meaningful).
fn geodesic_sweep(folder: &Folder, u: &Frame, ds: f64, count: usize) -> Result<Vec<ReducedFrame>> {
    let step = Moebius::diagonal(ds);
    let (mut f, mut sheet) = folder.fold(u)?;
    let mut out = Vec::with_capacity(count);
    for j in 0..count {
        out.push(record(&f, sheet));
        if j + 1 < count {
            let (next, shift) = folder.fold(&f.acted(&step))?;
            f = next;
            sheet += shift;
        }
    }
    Ok(out)
}

/// Rectangular `(t, s)` sweep of the affine action: `rows` values of `t`
/// evenly spaced on `[−t_max, t_max]` (odd `rows` include `t = 0`), and
/// `s = 0, ds, …, s_max` along each row.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AffineSweep {
    pub t_max: f64,
    pub rows: usize,
    pub s_max: f64,
    pub ds: f64,
}

impl AffineSweep {
    /// Sweep with about the same number of samples as a horocycle sweep of
    /// `s_max` at step `ds`.
    pub fn matched(s_max: f64, ds: f64, rows: usize, t_max: f64) -> Self {
        AffineSweep { t_max, rows, s_max, ds: ds * rows as f64 }
    }

    pub fn row_times(&self) -> Vec<f64> {
        if self.rows <= 1 {
            return vec![0.0];
        }
        (0..self.rows)
            .map(|k| {
                let t = -self.t_max + 2.0 * self.t_max * k as f64 / (self.rows - 1) as f64;
                if 2 * k + 1 == self.rows {
                    0.0
                } else {
                    t
                }
            })
            .collect()
    }
}

fn affine_sweep(folder: &Folder, u: &Frame, sweep: &AffineSweep) -> Result<Vec<ReducedFrame>> {
    if sweep.rows == 0 {
        return Err(Error::InvalidArgument("affine sweep needs at least one row".into()));
    }
    let count = sample_count(sweep.s_max, sweep.ds)?;
    let mut out = Vec::with_capacity(count * sweep.rows);
    for t in sweep.row_times() {
        let v = if t == 0.0 { *u } else { u.acted(&Moebius::diagonal(t)) };
        out.extend(horocycle_sweep(folder, &v, sweep.ds, count)?);
    }
    Ok(out)
}

/// Samples the chosen flow at `0, ds, …, s_max`, folding every frame into
/// the Dirichlet domain at `i`. The affine flow uses a budget-matched
/// [`AffineSweep`] with three rows over `t ∈ [−1, 1]`.
pub fn sample_orbit(g: &GroupPresentation, u: &Frame, flow: FlowKind, s_max: f64, ds: f64) -> Result<OrbitSample> {
    let folder = Folder::new(g)?;
    let count = sample_count(s_max, ds)?;
    let frames = match flow {
        FlowKind::Horocycle => horocycle_sweep(&folder, u, ds, count)?,
        FlowKind::Geodesic => geodesic_sweep(&folder, u, ds, count)?,
        FlowKind::Affine => affine_sweep(&folder, u, &AffineSweep::matched(s_max, ds, 3, 1.0))?,
    };
    Ok(OrbitSample { flow, step: ds, count: frames.len(), frames })
}

pub fn sample_affine(g: &GroupPresentation, u: &Frame, sweep: &AffineSweep) -> Result<OrbitSample> {
    let frames = affine_sweep(&Folder::new(g)?, u, sweep)?;
    Ok(OrbitSample { flow: FlowKind::Affine, step: sweep.ds, count: frames.len(), frames })
}

pub fn coverage_fraction(sample: &OrbitSample, grid: &CoverageGrid) -> f64 {
    let total = grid.cells_total();
    if total == 0 {
        return 0.0;
    }
    HitSet::from_frames(grid, &sample.frames).count() as f64 / total as f64
}

/// Upper bound on `im` of Dirichlet-folded points of the horocycle through
/// `u` on the cylinder: folding rescales `z` into `|w| ≤ e^{ℓ/2}` without
/// changing `arg z`, so `im w ≤ e^{ℓ/2}·sup sin(arg z)` over the horocycle.
pub fn cylinder_im_bound(c: &HyperbolicCylinder, u: &Frame) -> f64 {
    let r = (0.5 * c.systole_length()).exp();
    let sup_sin = match u.forward() {
        BoundaryPoint::Infinity => 1.0,
        BoundaryPoint::Finite(xi) => {
            let b = u.base();
            let diameter = ((b.re() - xi).powi(2) + b.im().powi(2)) / b.im();
            let ratio = 0.5 * diameter / xi.abs();
            if xi == 0.0 || ratio >= 1.0 {
                1.0
            } else {
                (2.0 * ratio.atan()).sin()
            }
        }
    };
    r * sup_sin
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Verdict {
    DenseTrend,
    ReturnTime,
    /// Coverage below one half with a grid row the orbit provably never
    /// reaches.
    Stall,
    Inconclusive,
}

impl Verdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            Verdict::DenseTrend => "DENSE_TREND",
            Verdict::ReturnTime => "RETURN_TIME",
            Verdict::Stall => "STALL",
            Verdict::Inconclusive => "INCONCLUSIVE",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DensityRow {
    pub budget: f64,
    pub flow: FlowKind,
    pub cells_hit: usize,
    pub cells_total: usize,
    pub coverage: f64,
    pub verdict: Verdict,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DichotomyReport {
    pub rows: Vec<DensityRow>,
    pub verdict: Verdict,
    /// Provable `im` ceiling of the folded horocycle, when known.
    pub im_bound: Option<f64>,
    /// Rows (by index) above the ceiling, never hit at any budget.
    pub empty_rows: Vec<usize>,
    pub t0: Option<f64>,
}

impl DichotomyReport {
    pub fn to_csv(&self) -> String {
        density_csv(&self.rows)
    }
}

pub fn density_csv(rows: &[DensityRow]) -> String {
    let mut s = String::from("budget,flow,cells_hit,cells_total,coverage,verdict\n");
    for r in rows {
        s.push_str(&format!(
            "{},{},{},{},{:.6},{}\n",
            r.budget,
            r.flow.as_str(),
            r.cells_hit,
            r.cells_total,
            r.coverage,
            r.verdict.as_str()
        ));
    }
    s
}

/// Whether `g` has the generators of the regular-octagon genus-two group.
pub fn is_octagon_group(g: &GroupPresentation) -> bool {
    let oct = crate::fuchsian::genus2_octagon_group();
    g.rank() == oct.rank() && g.generators().iter().zip(oct.generators()).all(|(a, b)| a == b)
}

/// Coverage of `flow` at each budget, with the trend verdict only (no stall
/// or return-time reading). Horocycle and geodesic budgets are prefixes of
/// one sample; affine budgets each get their own matched sweep.
#[allow(clippy::too_many_arguments)]
pub fn coverage_trend(
    g: &GroupPresentation,
    u: &Frame,
    flow: FlowKind,
    budgets: &[f64],
    ds: f64,
    grid: &CoverageGrid,
    affine_rows: usize,
    affine_t_max: f64,
) -> Result<Vec<DensityRow>> {
    if budgets.is_empty() || budgets.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidArgument("budgets must be non-empty and strictly increasing".into()));
    }
    let total = grid.cells_total();
    let prefix = match flow {
        FlowKind::Affine => None,
        _ => Some(sample_orbit(g, u, flow, *budgets.last().expect("non-empty"), ds)?),
    };
    let mut coverages = Vec::new();
    let mut rows = Vec::new();
    for &budget in budgets {
        let hits = match &prefix {
            Some(sample) => {
                let n = sample_count(budget, ds)?.min(sample.frames.len());
                HitSet::from_frames(grid, &sample.frames[..n])
            }
            None => {
                let sweep = AffineSweep::matched(budget, ds, affine_rows, affine_t_max);
                HitSet::from_frames(grid, &sample_affine(g, u, &sweep)?.frames)
            }
        };
        let cells_hit = hits.count();
        let coverage = cells_hit as f64 / total.max(1) as f64;
        coverages.push(coverage);
        let verdict = trend_verdict(&coverages, false, false);
        rows.push(DensityRow { budget, flow, cells_hit, cells_total: total, coverage, verdict });
    }
    Ok(rows)
}

/// Orbit bases and directions, thinned to at most `max_rows` evenly spaced
/// frames: `base_re,base_im,direction`.
pub fn orbit_points_csv(sample: &OrbitSample, max_rows: usize) -> String {
    let stride = sample.frames.len().div_ceil(max_rows.max(1)).max(1);
    let mut s = String::from("base_re,base_im,direction\n");
    for f in sample.frames.iter().step_by(stride) {
        s.push_str(&format!("{},{},{}\n", f.base.re(), f.base.im(), f.direction));
    }
    s
}

/// Per spatial cell: `ix,iy,admissible,angles_hit`.
pub fn heat_grid_csv(grid: &CoverageGrid, hits: &HitSet) -> String {
    let mut s = String::from("ix,iy,admissible,angles_hit\n");
    for iy in 0..grid.y_bins {
        for ix in 0..grid.x_bins {
            let cell = iy * grid.x_bins + ix;
            s.push_str(&format!("{ix},{iy},{},{}\n", u8::from(grid.is_admissible(cell)), hits.angles_hit(grid, cell)));
        }
    }
    s
}

/// The cylinder a one-generator diagonal group presents, if it is one.
pub fn as_cylinder(g: &GroupPresentation) -> Option<HyperbolicCylinder> {
    if g.rank() != 1 {
        return None;
    }
    let [a, b, c, d] = g.generators()[0].entries();
    if b != 0.0 || c != 0.0 {
        return None;
    }
    HyperbolicCylinder::new((a / d).abs().ln().abs()).ok()
}

fn trend_verdict(coverages: &[f64], stalled: bool, return_time: bool) -> Verdict {
    let n = coverages.len();
    let last = coverages[n - 1];
    let rising = n >= 2 && (last > coverages[n - 2] || last >= 1.0);
    if last > DENSE_THRESHOLD && rising && !stalled {
        Verdict::DenseTrend
    } else if stalled && last < STALL_THRESHOLD {
        Verdict::Stall
    } else if return_time {
        Verdict::ReturnTime
    } else {
        Verdict::Inconclusive
    }
}

/// Horocycle coverage at increasing budgets, read as a density trend, a
/// stall, or (when a Key Lemma run supplied `t0 > 0`) a return time.
/// Budgets must be increasing; an empty budget list skips the coverage part.
pub fn dichotomy_experiment(
    g: &GroupPresentation,
    u: &Frame,
    budgets: &[f64],
    ds: f64,
    grid: &CoverageGrid,
    key_lemma: Option<&KeyLemmaRun>,
) -> Result<DichotomyReport> {
    if budgets.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidArgument("budgets must be strictly increasing".into()));
    }
    let t0 = key_lemma.filter(|r| r.converged() && r.t0 > 0.0).map(|r| r.t0);
    if budgets.is_empty() {
        let verdict = if t0.is_some() { Verdict::ReturnTime } else { Verdict::Inconclusive };
        return Ok(DichotomyReport { rows: Vec::new(), verdict, im_bound: None, empty_rows: Vec::new(), t0 });
    }

    let largest = *budgets.last().expect("non-empty");
    let sample = sample_orbit(g, u, FlowKind::Horocycle, largest, ds)?;

    let im_bound = match (as_cylinder(g), grid.chart) {
        (Some(c), Chart::HalfPlane) => Some(cylinder_im_bound(&c, u)),
        _ => None,
    };
    let candidate_rows: Vec<usize> = match im_bound {
        Some(bound) => (0..grid.y_bins).filter(|&iy| grid.row_floor(iy) > bound).collect(),
        None => Vec::new(),
    };

    let total = grid.cells_total();
    let mut rows = Vec::with_capacity(budgets.len());
    let mut coverages = Vec::with_capacity(budgets.len());
    let mut empty_rows = candidate_rows.clone();
    for &budget in budgets {
        let n = sample_count(budget, ds)?.min(sample.frames.len());
        let hits = HitSet::from_frames(grid, &sample.frames[..n]);
        empty_rows.retain(|&iy| !hits.row_hit(grid, iy));
        let cells_hit = hits.count();
        let coverage = if total == 0 { 0.0 } else { cells_hit as f64 / total as f64 };
        coverages.push(coverage);
        let verdict = trend_verdict(&coverages, !empty_rows.is_empty(), t0.is_some());
        rows.push(DensityRow { budget, flow: FlowKind::Horocycle, cells_hit, cells_total: total, coverage, verdict });
    }
    let verdict = rows.last().expect("non-empty").verdict;
    Ok(DichotomyReport { rows, verdict, im_bound, empty_rows, t0 })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AffineProbeReport {
    pub budget: f64,
    pub horocycle: DensityRow,
    pub affine: DensityRow,
    /// Whether every cell the horocycle sample hit was hit by the affine one.
    pub contains_horocycle: bool,
}

/// Horocycle and affine coverage at the same budget. With `rows` odd the
/// affine sweep contains the `t = 0` row; when its step equals `ds` that row
/// is the horocycle sample itself.
pub fn affine_minimality_probe(
    g: &GroupPresentation,
    u: &Frame,
    budget: f64,
    ds: f64,
    grid: &CoverageGrid,
    sweep: &AffineSweep,
) -> Result<AffineProbeReport> {
    if !(budget > 0.0) {
        return Err(Error::InvalidArgument(format!("budget {budget} must be positive")));
    }
    let horo = sample_orbit(g, u, FlowKind::Horocycle, budget, ds)?;
    let aff = sample_affine(g, u, sweep)?;
    let h_hits = HitSet::from_frames(grid, &horo.frames);
    let a_hits = HitSet::from_frames(grid, &aff.frames);
    let total = grid.cells_total();
    let row = |flow, hits: &HitSet| DensityRow {
        budget,
        flow,
        cells_hit: hits.count(),
        cells_total: total,
        coverage: hits.count() as f64 / total.max(1) as f64,
        verdict: Verdict::Inconclusive,
    };
    Ok(AffineProbeReport {
        budget,
        horocycle: row(FlowKind::Horocycle, &h_hits),
        affine: row(FlowKind::Affine, &a_hits),
        contains_horocycle: a_hits.contains(&h_hits),
    })
}
