//! The Key Lemma as a computation: closed geodesics crossing a geodesic ray,
//! the Busemann bounds they satisfy, and the convergence of translated
//! horocycles to a geodesic push of the ray's starting frame.
//!
//! Everything is done in standard position: the frame `u` is conjugated to
//! the identity frame, so its ray is `r(t) = i·e^t` and its horocycle is the
//! line `im z = 1`.

use std::f64::consts::{FRAC_PI_2, LN_2};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fuchsian::{
    check_band, enumerate_elements, kernel_filter, short_conjugates, ClosedGeodesicRec, GroupElement,
    GroupPresentation,
};
use crate::hyperbolic::{
    angle_between_tangents, axis_data, busemann, classify_isometry, hyp_distance,
    tangent_toward_boundary, BoundaryPoint, Frame, HPoint, IsometryKind, Moebius,
};

/// Slack on the Busemann bounds.
pub const BOUND_TOL: f64 = 1e-8;
/// Angles within this of π/2 count as at most π/2.
pub const ANGLE_TOL: f64 = 1e-9;
/// Dedup resolution for `(t_n, length)`.
pub const CROSSING_KEY_RESOLUTION: f64 = 1e-6;
/// Smallest margin accepted as strictly positive by [`select_power`].
pub const STRICT_MARGIN: f64 = 1e-12;
/// Axes whose endpoint ratio falls below this are treated as vertical.
const VERTICAL_AXIS_RATIO: f64 = 1e-12;

/// Conjugator placing `u` at the identity frame: `g⁻¹` for `u = g`.
pub fn standardize_frame(u: &Frame) -> Moebius {
    u.matrix().inverse()
}

#[derive(Clone, Debug, PartialEq)]
pub struct CrossingRecord {
    /// The crossing element (inverted if needed so the angle is at most
    /// π/2), in the original coordinates.
    pub geodesic: ClosedGeodesicRec,
    /// The same element conjugated into standard position.
    pub standardized: Moebius,
    /// Axis endpoints in standard position.
    pub repelling: f64,
    pub attracting: f64,
    pub t_n: f64,
    pub angle: f64,
}

/// Height `√(−pq)` at which the semicircle with real endpoints `p < 0 < q`
/// meets the imaginary axis, as the time `½·ln(−pq)`.
pub fn crossing_time(p: f64, q: f64) -> Option<f64> {
    if p * q < 0.0 {
        Some(0.5 * (-p * q).ln())
    } else {
        None
    }
}

/// Angle at `i·e^{t_n}` between the upward ray and the axis through that
/// point oriented towards `attracting`.
pub fn crossing_angle(attracting: f64, t_n: f64) -> f64 {
    let x = HPoint::on_imaginary_axis(t_n);
    let tangent = tangent_toward_boundary(x, BoundaryPoint::Finite(attracting));
    angle_between_tangents((0.0, 1.0), tangent)
}

fn round_key(x: f64) -> i64 {
    (x / CROSSING_KEY_RESOLUTION).round() as i64
}

fn crossing_for(e: &GroupElement, conj: &Moebius, band: (f64, f64), horizon: f64) -> Option<CrossingRecord> {
    if classify_isometry(&e.matrix) != IsometryKind::Hyperbolic {
        return None;
    }
    let std = conj.compose(&e.matrix).compose(&conj.inverse());
    let ax = axis_data(&std).ok()?;
    if ax.translation_length < band.0 || ax.translation_length > band.1 {
        return None;
    }
    let (rep, att) = match (ax.repelling, ax.attracting) {
        (BoundaryPoint::Finite(r), BoundaryPoint::Finite(a)) => (r, a),
        _ => return None,
    };
    let (lo, hi) = (rep.abs().min(att.abs()), rep.abs().max(att.abs()));
    if lo <= VERTICAL_AXIS_RATIO * hi {
        return None;
    }
    let t_n = crossing_time(rep, att)?;
    if !(t_n > 0.0 && t_n <= horizon) {
        return None;
    }
    let angle = crossing_angle(att, t_n);
    let (element, std, rep, att, angle) = if angle > FRAC_PI_2 + ANGLE_TOL {
        (e.inverse(), std.inverse(), att, rep, std::f64::consts::PI - angle)
    } else {
        (e.clone(), std, rep, att, angle)
    };
    let geodesic = ClosedGeodesicRec::from_element(element).ok()?;
    Some(CrossingRecord { geodesic, standardized: std, repelling: rep, attracting: att, t_n, angle })
}

/// Hyperbolic elements with length in `band` whose axes cross the ray of
/// `u` at a time in `(0, horizon]`, oriented so the crossing angle is at
/// most π/2, deduplicated on `(t_n, length)` and sorted by `t_n`. An empty
/// result means no crossings.
pub fn find_crossings(
    elements: &[GroupElement],
    u: &Frame,
    band: (f64, f64),
    horizon: f64,
) -> Result<Vec<CrossingRecord>> {
    check_band(band.0, band.1)?;
    if !(horizon > 0.0) {
        return Err(Error::InvalidArgument(format!("horizon {horizon} must be positive")));
    }
    let conj = standardize_frame(u);
    let found: Vec<CrossingRecord> =
        elements.par_iter().filter_map(|e| crossing_for(e, &conj, band, horizon)).collect();

    let mut keys = std::collections::HashSet::new();
    let mut out: Vec<CrossingRecord> =
        found.into_iter().filter(|c| keys.insert((round_key(c.t_n), round_key(c.geodesic.length)))).collect();
    out.sort_by(|x, y| x.t_n.total_cmp(&y.t_n));
    Ok(out)
}

/// Smallest `k ≥ 1` with `k·a − 2 ln 2 ≥ margin` (margin at least 1e−12).
pub fn select_power(a: f64, margin: f64) -> Result<u32> {
    if !(a > 0.0) || !(margin >= 0.0) {
        return Err(Error::InvalidArgument(format!("need a > 0 and margin >= 0, got a = {a}, margin = {margin}")));
    }
    let target = margin.max(STRICT_MARGIN);
    let mut k = ((target + 2.0 * LN_2) / a).ceil().max(1.0) as u32;
    // Step back over round-off in the division.
    while k > 1 && (k - 1) as f64 * a - 2.0 * LN_2 >= target {
        k -= 1;
    }
    while (k as f64) * a - 2.0 * LN_2 < target {
        k += 1;
    }
    Ok(k)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundCheck {
    pub busemann: f64,
    pub lower_ok: bool,
    pub upper_ok: bool,
}

/// `B = B_{γᵏ∞}(i, γᵏ i)` for a crossing-normalized element in standard
/// position, checked against `[k·a − 2 ln 2, k·b]`.
pub fn busemann_bound_check(gamma: &Moebius, k: u32, band: (f64, f64)) -> Result<BoundCheck> {
    check_band(band.0, band.1)?;
    if k == 0 {
        return Err(Error::InvalidArgument("power k must be >= 1".into()));
    }
    let gk = gamma.pow(k as i64);
    let xi = gk.apply_boundary(BoundaryPoint::Infinity);
    if xi.is_infinite() {
        return Err(Error::DegenerateXi);
    }
    let b = busemann(xi, HPoint::I, gk.apply(HPoint::I));
    let kf = k as f64;
    Ok(BoundCheck {
        busemann: b,
        lower_ok: b >= kf * band.0 - 2.0 * LN_2 - BOUND_TOL,
        upper_ok: b <= kf * band.1 + BOUND_TOL,
    })
}

/// The three terms of
/// `B_∞(γ⁻¹i, i) = B_∞(γ⁻¹i, γ⁻¹r) + B_∞(γ⁻¹r, r) + B_∞(r, i)` with
/// `r = i·e^{t_n}` on the axis of `γ`.
pub fn busemann_decomposition(gamma: &Moebius, t_n: f64) -> [f64; 3] {
    let inv = gamma.inverse();
    let r = HPoint::on_imaginary_axis(t_n);
    let gi = inv.apply(HPoint::I);
    let gr = inv.apply(r);
    [
        busemann(BoundaryPoint::Infinity, gi, gr),
        busemann(BoundaryPoint::Infinity, gr, r),
        busemann(BoundaryPoint::Infinity, r, HPoint::I),
    ]
}

/// Thresholds for selecting the convergent subsequence.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceTol {
    /// Escape proxy: `|γ′∞| ≥ 1/eps_xi`.
    pub eps_xi: f64,
    /// Cluster gap and cluster membership radius for Busemann values.
    pub eps_b: f64,
    /// Golden-section tolerance for `s_n`.
    pub s_tol: f64,
}

impl Default for ConvergenceTol {
    fn default() -> Self {
        ConvergenceTol { eps_xi: 1e-3, eps_b: 0.05, s_tol: 1e-8 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    /// Index into the run's crossings.
    pub index: usize,
    pub s_n: f64,
    pub frame_error: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct KeyLemmaRun {
    pub u: Frame,
    pub band: (f64, f64),
    pub k: u32,
    pub crossings: Vec<CrossingRecord>,
    pub busemann_values: Vec<f64>,
    pub bounds_ok: Vec<bool>,
    pub t0: f64,
    /// Indices (into `crossings`) of the Busemann cluster defining `t0`.
    pub cluster: Vec<usize>,
    pub witnesses: Vec<Witness>,
    pub tol: ConvergenceTol,
}

impl KeyLemmaRun {
    pub fn all_bounds_ok(&self) -> bool {
        self.bounds_ok.iter().all(|&b| b)
    }

    pub fn final_frame_error(&self) -> Option<f64> {
        self.witnesses.last().map(|w| w.frame_error)
    }

    /// Final error within `10·eps_B` and non-increasing along the witnesses.
    pub fn converged(&self) -> bool {
        let monotone = self.witnesses.windows(2).all(|w| w[1].frame_error <= w[0].frame_error);
        monotone && self.final_frame_error().is_some_and(|e| e <= 10.0 * self.tol.eps_b)
    }
}

/// Groups sorted values into runs whose consecutive gaps are at most `gap`.
/// Returns index lists into `values`, each sorted by value.
pub fn cluster_values(values: &[f64], gap: f64) -> Vec<Vec<usize>> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)));
    let mut clusters: Vec<Vec<usize>> = Vec::new();
    for idx in order {
        match clusters.last_mut() {
            Some(c) if values[idx] - values[*c.last().expect("non-empty")] <= gap => c.push(idx),
            _ => clusters.push(vec![idx]),
        }
    }
    clusters
}

/// Minimizer of a unimodal function on `[lo, hi]` by golden-section search.
pub fn golden_section(f: impl Fn(f64) -> f64, lo: f64, hi: f64, tol: f64) -> (f64, f64) {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (lo, hi);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while (b - a).abs() > tol * (1.0 + a.abs().max(b.abs())) {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    let x = 0.5 * (a + b);
    (x, f(x))
}

fn max_abs_diff(p: [f64; 4], q: [f64; 4], sign: f64) -> f64 {
    p.iter().zip(&q).map(|(x, y)| (x - sign * y).abs()).fold(0.0, f64::max)
}

/// `argmin_s` of the projective distance between `γ′·h_s(ũ)` and
/// `g_{t0}(ũ)` over `|s| ≤ bracket`, in standard position. Each sign branch
/// of the distance is a max of absolute affine functions of `s`, hence
/// convex, so each is minimized separately.
pub fn match_horocycle(gamma: &Moebius, t0: f64, bracket: f64, tol: f64) -> (f64, f64) {
    let target = Moebius::diagonal(t0).entries();
    let [a, b, c, d] = gamma.entries();
    let at = |s: f64| [a, a * s + b, c, c * s + d];
    let mut best = (0.0, f64::INFINITY);
    for sign in [1.0, -1.0] {
        let (s, e) = golden_section(|s| max_abs_diff(at(s), target, sign), -bracket, bracket, tol);
        if e < best.1 {
            best = (s, e);
        }
    }
    best
}

/// Busemann values of `γₙᵏ`, their largest cluster as `t0`, and the
/// subsequence of escaping cluster members along which translated
/// horocycles approach `g_{t0}(u)`.
pub fn verify_convergence(
    u: &Frame,
    crossings: Vec<CrossingRecord>,
    k: u32,
    band: (f64, f64),
    tol: ConvergenceTol,
) -> Result<KeyLemmaRun> {
    check_band(band.0, band.1)?;
    let checks: Vec<BoundCheck> =
        crossings.iter().map(|c| busemann_bound_check(&c.standardized, k, band)).collect::<Result<_>>()?;
    let busemann_values: Vec<f64> = checks.iter().map(|c| c.busemann).collect();
    let bounds_ok: Vec<bool> = checks.iter().map(|c| c.lower_ok && c.upper_ok).collect();

    // Largest cluster; ties go to the lower values.
    let clusters = cluster_values(&busemann_values, tol.eps_b);
    let largest = clusters.iter().map(Vec::len).max().unwrap_or(0);
    if largest < 3 {
        return Err(Error::NoCluster { largest });
    }
    let cluster = clusters.into_iter().find(|c| c.len() == largest).expect("exists");
    let t0 = cluster.iter().map(|&i| busemann_values[i]).sum::<f64>() / cluster.len() as f64;

    let threshold = 1.0 / tol.eps_xi;
    let powers: Vec<Moebius> = crossings.iter().map(|c| c.standardized.pow(k as i64)).collect();
    let escape: Vec<f64> =
        powers.iter().map(|m| m.apply_boundary(BoundaryPoint::Infinity).magnitude()).collect();
    if escape.iter().all(|&x| x < threshold) {
        return Err(Error::EscapeFail { threshold });
    }
    let mut candidates: Vec<usize> = (0..crossings.len())
        .filter(|&i| escape[i] >= threshold && (busemann_values[i] - t0).abs() <= tol.eps_b)
        .collect();
    if candidates.is_empty() {
        return Err(Error::EscapeFail { threshold });
    }
    candidates.sort_by(|&a, &b| escape[a].total_cmp(&escape[b]).then(a.cmp(&b)));

    let t_last = crossings.iter().map(|c| c.t_n).fold(0.0, f64::max);
    let bracket = 10.0 * t_last.exp();
    let mut witnesses: Vec<Witness> = Vec::new();
    for i in candidates {
        let (s_n, frame_error) = match_horocycle(&powers[i], t0, bracket, tol.s_tol);
        if witnesses.last().is_none_or(|w| frame_error <= w.frame_error) {
            witnesses.push(Witness { index: i, s_n, frame_error });
        }
    }

    Ok(KeyLemmaRun { u: *u, band, k, crossings, busemann_values, bounds_ok, t0, cluster, witnesses, tol })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HorocyclicTest {
    pub levels: Vec<f64>,
    pub entered: bool,
}

/// Deepest horoball level at `ũ(+∞)` reached by the orbit of the base point
/// within each word length `1..=depth`; `entered` when the levels keep
/// strictly decreasing.
pub fn horocyclic_endpoint_test(g: &GroupPresentation, u: &Frame, depth: usize) -> Result<HorocyclicTest> {
    if depth == 0 {
        return Err(Error::InvalidArgument("depth must be >= 1".into()));
    }
    let xi = u.forward();
    let base = u.base();
    let elements = enumerate_elements(g, depth)?;
    let mut levels = vec![f64::INFINITY; depth];
    for e in &elements {
        let level = -busemann(xi, base, e.matrix.apply(base));
        let slot = &mut levels[e.word.len() - 1];
        *slot = slot.min(level);
    }
    for d in 1..depth {
        levels[d] = levels[d].min(levels[d - 1]);
    }
    let entered = if depth == 1 {
        levels[0] < 0.0
    } else {
        levels.windows(2).all(|w| w[1] < w[0])
    };
    Ok(HorocyclicTest { levels, entered })
}

/// Distance `d(γ⁻¹r(t_n), r(t_n))` of the hop along the closed geodesic.
pub fn axis_hop(gamma: &Moebius, t_n: f64) -> f64 {
    let r = HPoint::on_imaginary_axis(t_n);
    hyp_distance(gamma.inverse().apply(r), r)
}

/// Inputs for a complete Key Lemma run from a group and a frame.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KeyLemmaConfig {
    /// Word length of the cyclically reduced cores that get conjugated.
    pub core_len: usize,
    pub max_word_length: usize,
    /// Crossings are searched for `t_n ∈ (0, horizon]`.
    pub horizon: f64,
    /// Explicit length band; when absent it is `[a, band_factor·a]` with `a`
    /// the shortest translation length among the candidates.
    pub band: Option<(f64, f64)>,
    pub band_factor: f64,
    pub tol: ConvergenceTol,
}

impl Default for KeyLemmaConfig {
    fn default() -> Self {
        KeyLemmaConfig {
            core_len: 2,
            max_word_length: 12,
            horizon: 40.0,
            band: None,
            band_factor: 4.0,
            tol: ConvergenceTol::default(),
        }
    }
}

/// Candidate elements for `g`: conjugates of short cores, restricted to the
/// kernel subgroup when `g` carries kernel weights.
pub fn candidate_elements(g: &GroupPresentation, cfg: &KeyLemmaConfig) -> Result<Vec<GroupElement>> {
    let filter = g.kernel_weights().map(|w| kernel_filter(g, w)).transpose()?;
    short_conjugates(g, filter.as_ref(), cfg.core_len, cfg.max_word_length)
}

/// Shortest translation length among hyperbolic elements.
pub fn shortest_length(elements: &[GroupElement]) -> Option<f64> {
    elements
        .iter()
        .filter(|e| classify_isometry(&e.matrix) == IsometryKind::Hyperbolic)
        .filter_map(|e| axis_data(&e.matrix).ok())
        .map(|a| a.translation_length)
        .min_by(f64::total_cmp)
}

/// Candidates, band, power selection, crossings and convergence in one go.
pub fn run_key_lemma(g: &GroupPresentation, u: &Frame, cfg: &KeyLemmaConfig) -> Result<KeyLemmaRun> {
    let elements = candidate_elements(g, cfg)?;
    let band = match cfg.band {
        Some(b) => b,
        None => {
            let a = shortest_length(&elements).ok_or(Error::NotHyperbolic)?;
            (a, cfg.band_factor * a)
        }
    };
    check_band(band.0, band.1)?;
    let k = select_power(band.0, 0.0)?;
    let crossings = find_crossings(&elements, u, band, cfg.horizon)?;
    verify_convergence(u, crossings, k, band, cfg.tol)
}

/// One crossing as it appears in a run report.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CrossingSummary {
    pub index: usize,
    /// Signed 1-based generator indices of the crossing element.
    pub word: Vec<i64>,
    pub t_n: f64,
    pub angle: f64,
    pub length: f64,
    pub busemann: f64,
    pub bound_ok: bool,
    pub selected: bool,
}

/// Serializable summary of a [`KeyLemmaRun`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KeyLemmaReport {
    pub band: (f64, f64),
    pub k: u32,
    pub t0: f64,
    pub cluster: Vec<usize>,
    pub crossings: Vec<CrossingSummary>,
    pub subsequence: Vec<usize>,
    pub witnesses: Vec<Witness>,
    pub all_bounds_ok: bool,
    pub converged: bool,
    pub final_frame_error: Option<f64>,
}

impl KeyLemmaRun {
    pub fn report(&self) -> KeyLemmaReport {
        let selected: std::collections::HashSet<usize> = self.witnesses.iter().map(|w| w.index).collect();
        let crossings = self
            .crossings
            .iter()
            .enumerate()
            .map(|(i, c)| CrossingSummary {
                index: i,
                word: c.geodesic.element.word.to_signed(),
                t_n: c.t_n,
                angle: c.angle,
                length: c.geodesic.length,
                busemann: self.busemann_values[i],
                bound_ok: self.bounds_ok[i],
                selected: selected.contains(&i),
            })
            .collect();
        KeyLemmaReport {
            band: self.band,
            k: self.k,
            t0: self.t0,
            cluster: self.cluster.clone(),
            crossings,
            subsequence: self.witnesses.iter().map(|w| w.index).collect(),
            witnesses: self.witnesses.clone(),
            all_bounds_ok: self.all_bounds_ok(),
            converged: self.converged(),
            final_frame_error: self.final_frame_error(),
        }
    }

    /// One row per crossing: `index,t_n,angle,length,B,selected,s_n,frame_error`;
    /// the last two are empty for crossings outside the subsequence.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("index,t_n,angle,length,B,selected,s_n,frame_error\n");
        for (i, c) in self.crossings.iter().enumerate() {
            let w = self.witnesses.iter().find(|w| w.index == i);
            let (sn, fe) = w.map(|w| (w.s_n.to_string(), w.frame_error.to_string())).unwrap_or_default();
            s.push_str(&format!(
                "{i},{},{},{},{},{},{sn},{fe}\n",
                c.t_n,
                c.angle,
                c.geodesic.length,
                self.busemann_values[i],
                u8::from(w.is_some())
            ));
        }
        s
    }
}
