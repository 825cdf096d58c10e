//! Finitely generated Fuchsian groups: presentations, word enumeration with
//! projective deduplication, closed-geodesic harvesting, Dirichlet point
//! reduction, kernel filters and the standard example groups.

use std::collections::HashMap;
use std::f64::consts::{FRAC_PI_4, PI};
use std::fmt;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hyperbolic::{
    axis_data, classify_isometry, hyp_angle, hyp_distance, BoundaryPoint, Frame, HPoint,
    IsometryKind, Moebius, PROJ_EQ_TOL,
};

/// Default element cap for [`enumerate_elements`].
pub const DEFAULT_ELEMENT_CAP: usize = 5_000_000;
/// Step cap for [`dirichlet_reduce`].
pub const MAX_DESCENT_STEPS: usize = 100_000;
/// Improvement a generator must achieve to be applied during descent.
pub const DESCENT_MARGIN: f64 = 1e-12;
/// Rounding used for the conjugacy dedup key.
pub const GEODESIC_KEY_RESOLUTION: f64 = 1e-6;

/// A generator or its inverse.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Letter {
    pub generator: usize,
    pub inverse: bool,
}

impl Letter {
    pub fn new(generator: usize, inverse: bool) -> Self {
        Letter { generator, inverse }
    }

    pub fn inv(self) -> Self {
        Letter { generator: self.generator, inverse: !self.inverse }
    }

    /// Signed 1-based index: `+k` for generator `k-1`, `-k` for its inverse.
    pub fn to_signed(self) -> i64 {
        let k = self.generator as i64 + 1;
        if self.inverse {
            -k
        } else {
            k
        }
    }

    pub fn from_signed(v: i64, rank: usize) -> Result<Self> {
        if v == 0 || v.unsigned_abs() as usize > rank {
            return Err(Error::Parse(format!("letter {v} outside 1..={rank}")));
        }
        Ok(Letter { generator: v.unsigned_abs() as usize - 1, inverse: v < 0 })
    }

    /// Position in the fixed letter order `g0, g0⁻¹, g1, g1⁻¹, …`.
    pub fn rank(self) -> usize {
        2 * self.generator + self.inverse as usize
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct Word(pub Vec<Letter>);

impl Word {
    pub fn empty() -> Self {
        Word(Vec::new())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn letters(&self) -> &[Letter] {
        &self.0
    }

    pub fn inverse(&self) -> Word {
        Word(self.0.iter().rev().map(|l| l.inv()).collect())
    }

    /// Concatenation followed by free reduction.
    pub fn concat(&self, other: &Word) -> Word {
        let mut out = self.0.clone();
        for &l in &other.0 {
            if out.last() == Some(&l.inv()) {
                out.pop();
            } else {
                out.push(l);
            }
        }
        Word(out)
    }

    pub fn freely_reduced(&self) -> Word {
        Word::empty().concat(self)
    }

    pub fn to_signed(&self) -> Vec<i64> {
        self.0.iter().map(|l| l.to_signed()).collect()
    }

    pub fn from_signed(v: &[i64], rank: usize) -> Result<Word> {
        v.iter().map(|&x| Letter::from_signed(x, rank)).collect::<Result<Vec<_>>>().map(Word)
    }

    pub fn display_with<'a>(&'a self, names: &'a [String]) -> WordDisplay<'a> {
        WordDisplay { word: self, names }
    }
}

pub struct WordDisplay<'a> {
    word: &'a Word,
    names: &'a [String],
}

impl fmt::Display for WordDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.word.is_empty() {
            return write!(f, "1");
        }
        for l in self.word.letters() {
            let name = self.names.get(l.generator).map(String::as_str).unwrap_or("?");
            if l.inverse {
                write!(f, "{name}^-1")?;
            } else {
                write!(f, "{name}")?;
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GroupPresentation {
    pub name: String,
    generators: Vec<Moebius>,
    names: Vec<String>,
    relators: Vec<Word>,
    kernel_weights: Option<Vec<i64>>,
}

impl GroupPresentation {
    pub fn new(name: impl Into<String>, generators: Vec<Moebius>, names: Vec<String>) -> Result<Self> {
        if generators.is_empty() {
            return Err(Error::InvalidArgument("a presentation needs at least one generator".into()));
        }
        if generators.len() != names.len() {
            return Err(Error::InvalidArgument(format!(
                "{} generators but {} names",
                generators.len(),
                names.len()
            )));
        }
        if let Some(k) = generators.iter().position(|g| g.is_identity(PROJ_EQ_TOL)) {
            return Err(Error::InvalidArgument(format!("generator {} is the identity", names[k])));
        }
        Ok(GroupPresentation {
            name: name.into(),
            generators,
            names,
            relators: Vec::new(),
            kernel_weights: None,
        })
    }

    pub fn with_relators(mut self, relators: Vec<Word>) -> Result<Self> {
        let rank = self.rank();
        if relators.iter().flat_map(|w| w.letters()).any(|l| l.generator >= rank) {
            return Err(Error::InvalidArgument("relator refers to an unknown generator".into()));
        }
        self.relators = relators;
        Ok(self)
    }

    pub fn with_kernel_weights(mut self, weights: Vec<i64>) -> Result<Self> {
        if weights.len() != self.rank() {
            return Err(Error::InvalidArgument(format!(
                "{} kernel weights for {} generators",
                weights.len(),
                self.rank()
            )));
        }
        self.kernel_weights = Some(weights);
        Ok(self)
    }

    pub fn rank(&self) -> usize {
        self.generators.len()
    }

    pub fn generators(&self) -> &[Moebius] {
        &self.generators
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn relators(&self) -> &[Word] {
        &self.relators
    }

    pub fn kernel_weights(&self) -> Option<&[i64]> {
        self.kernel_weights.as_deref()
    }

    pub fn letter_matrix(&self, l: Letter) -> Moebius {
        let g = self.generators[l.generator];
        if l.inverse {
            g.inverse()
        } else {
            g
        }
    }

    /// All letters in the fixed order `g0, g0⁻¹, g1, g1⁻¹, …`.
    pub fn letters(&self) -> Vec<Letter> {
        (0..self.rank()).flat_map(|g| [Letter::new(g, false), Letter::new(g, true)]).collect()
    }

    pub fn evaluate(&self, w: &Word) -> Moebius {
        w.letters().iter().fold(Moebius::IDENTITY, |acc, &l| acc.compose(&self.letter_matrix(l)))
    }

    pub fn element(&self, w: Word) -> GroupElement {
        let matrix = self.evaluate(&w);
        GroupElement { matrix, word: w }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GroupElement {
    pub matrix: Moebius,
    pub word: Word,
}

impl GroupElement {
    pub fn identity() -> Self {
        GroupElement { matrix: Moebius::IDENTITY, word: Word::empty() }
    }

    pub fn inverse(&self) -> Self {
        GroupElement { matrix: self.matrix.inverse(), word: self.word.inverse() }
    }

    pub fn compose(&self, rhs: &GroupElement) -> Self {
        GroupElement { matrix: self.matrix.compose(&rhs.matrix), word: self.word.concat(&rhs.word) }
    }

    pub fn pow(&self, k: i64) -> Self {
        let base = if k < 0 { self.inverse() } else { self.clone() };
        let mut word = Word::empty();
        for _ in 0..k.unsigned_abs() {
            word = word.concat(&base.word);
        }
        GroupElement { matrix: self.matrix.pow(k), word }
    }

    pub fn conjugate_by(&self, h: &GroupElement) -> Self {
        h.compose(self).compose(&h.inverse())
    }
}

/// Projective hash key: entries rounded on a fixed grid after choosing the
/// sign that makes the first non-negligible entry positive.
fn canonical_entries(m: &Moebius) -> [f64; 4] {
    let e = m.entries();
    let flip = e.iter().find(|x| x.abs() > 1e-7).is_some_and(|&x| x < 0.0);
    if flip {
        e.map(|x| -x)
    } else {
        e
    }
}

const DEDUP_GRID: f64 = 1e-6;

/// Set of matrices modulo ±, with tolerance [`PROJ_EQ_TOL`].
#[derive(Default)]
pub struct ProjectiveSet {
    buckets: HashMap<[i64; 4], Vec<usize>>,
    items: Vec<Moebius>,
}

impl ProjectiveSet {
    pub fn new() -> Self {
        Self::default()
    }

    fn cells(m: &Moebius) -> Vec<[i64; 4]> {
        let e = canonical_entries(m);
        let scaled = e.map(|x| x / DEDUP_GRID);
        let base = scaled.map(|x| x.floor() as i64);
        let mut out = vec![base];
        for k in 0..4 {
            let frac = scaled[k] - scaled[k].floor();
            let step = if frac < 0.01 {
                -1
            } else if frac > 0.99 {
                1
            } else {
                continue;
            };
            let extra: Vec<_> = out
                .iter()
                .map(|c| {
                    let mut c = *c;
                    c[k] += step;
                    c
                })
                .collect();
            out.extend(extra);
        }
        out
    }

    pub fn contains(&self, m: &Moebius) -> bool {
        Self::cells(m).iter().any(|cell| {
            self.buckets
                .get(cell)
                .is_some_and(|ids| ids.iter().any(|&i| self.items[i].approx_eq(m, PROJ_EQ_TOL)))
        })
    }

    /// Inserts `m` unless an equal element is present; returns whether it was new.
    pub fn insert(&mut self, m: Moebius) -> bool {
        if self.contains(&m) {
            return false;
        }
        let cell = Self::cells(&m)[0];
        self.buckets.entry(cell).or_default().push(self.items.len());
        self.items.push(m);
        true
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }
}

/// Breadth-first enumeration of freely reduced words of length at most
/// `max_word_length`, deduplicated projectively, identity excluded. Within
/// a length, words come in lexicographic order of the letter order
/// `g0, g0⁻¹, g1, g1⁻¹, …`.
pub fn enumerate_elements(g: &GroupPresentation, max_word_length: usize) -> Result<Vec<GroupElement>> {
    enumerate_elements_capped(g, max_word_length, DEFAULT_ELEMENT_CAP)
}

pub fn enumerate_elements_capped(
    g: &GroupPresentation,
    max_word_length: usize,
    cap: usize,
) -> Result<Vec<GroupElement>> {
    if max_word_length == 0 {
        return Err(Error::InvalidArgument("max_word_length must be >= 1".into()));
    }
    let letters = g.letters();
    let letter_mats: Vec<Moebius> = letters.iter().map(|&l| g.letter_matrix(l)).collect();

    let mut seen = ProjectiveSet::new();
    seen.insert(Moebius::IDENTITY);
    let mut out: Vec<GroupElement> = Vec::new();
    let mut frontier: Vec<GroupElement> = vec![GroupElement::identity()];

    for _ in 0..max_word_length {
        let candidates: Vec<GroupElement> = frontier
            .par_iter()
            .flat_map_iter(|e| {
                let last = e.word.letters().last().copied();
                letters.iter().zip(&letter_mats).filter_map(move |(&l, m)| {
                    if last == Some(l.inv()) {
                        return None;
                    }
                    let mut word = e.word.clone();
                    word.0.push(l);
                    Some(GroupElement { matrix: e.matrix.compose(m), word })
                })
            })
            .collect();

        let mut next = Vec::new();
        for c in candidates {
            if seen.insert(c.matrix) {
                if out.len() + next.len() >= cap {
                    return Err(Error::BudgetExceeded { cap });
                }
                next.push(c);
            }
        }
        if next.is_empty() {
            break;
        }
        out.extend(next.iter().cloned());
        frontier = next;
    }
    Ok(out)
}

/// Conjugates `w·β·w⁻¹` with `β` a cyclically reduced element of word length
/// at most `core_len` (optionally restricted to a kernel) and `w` any element,
/// keeping those whose freely reduced word has length at most
/// `max_word_length`. Every closed geodesic of bounded length lifts to the
/// axis of such a conjugate, so this reaches long words without enumerating
/// the whole ball. Deduplicated projectively; order follows `(β, w)` in
/// enumeration order.
pub fn short_conjugates(
    g: &GroupPresentation,
    kernel: Option<&KernelFilter>,
    core_len: usize,
    max_word_length: usize,
) -> Result<Vec<GroupElement>> {
    if core_len == 0 || core_len > max_word_length {
        return Err(Error::InvalidArgument(format!(
            "core length {core_len} must be in 1..={max_word_length}"
        )));
    }
    let cores: Vec<GroupElement> = enumerate_elements(g, core_len)?
        .into_iter()
        .filter(|e| kernel.is_none_or(|k| k.accepts(e)))
        .filter(|e| {
            let w = e.word.letters();
            w.len() < 2 || w[0] != w[w.len() - 1].inv()
        })
        .collect();
    let conj_len = (max_word_length - 1) / 2;
    let mut conjugators = vec![GroupElement::identity()];
    if conj_len > 0 {
        conjugators.extend(enumerate_elements(g, conj_len)?);
    }

    let products: Vec<Vec<GroupElement>> = cores
        .par_iter()
        .map(|beta| {
            conjugators
                .iter()
                .filter_map(|w| {
                    let word = w.word.concat(&beta.word).concat(&w.word.inverse());
                    if word.len() > max_word_length || word.is_empty() {
                        return None;
                    }
                    let matrix = w.matrix.compose(&beta.matrix).compose(&w.matrix.inverse());
                    Some(GroupElement { matrix, word })
                })
                .collect()
        })
        .collect();

    let mut seen = ProjectiveSet::new();
    let mut out = Vec::new();
    for e in products.into_iter().flatten() {
        if seen.insert(e.matrix) {
            if out.len() >= DEFAULT_ELEMENT_CAP {
                return Err(Error::BudgetExceeded { cap: DEFAULT_ELEMENT_CAP });
            }
            out.push(e);
        }
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq)]
pub struct ClosedGeodesicRec {
    pub element: GroupElement,
    pub repelling: BoundaryPoint,
    pub attracting: BoundaryPoint,
    pub length: f64,
}

impl ClosedGeodesicRec {
    pub fn from_element(element: GroupElement) -> Result<Self> {
        let ax = axis_data(&element.matrix)?;
        Ok(ClosedGeodesicRec {
            element,
            repelling: ax.repelling,
            attracting: ax.attracting,
            length: ax.translation_length,
        })
    }
}

fn key_round(x: f64) -> i64 {
    (x / GEODESIC_KEY_RESOLUTION).round() as i64
}

/// Dedup key: rounded length and unordered rounded fixed-point pair, with
/// `∞` mapped to a sentinel.
fn geodesic_key(r: &ClosedGeodesicRec) -> (i64, i64, i64) {
    let k = |x: BoundaryPoint| match x {
        BoundaryPoint::Infinity => i64::MAX,
        BoundaryPoint::Finite(v) => key_round(v),
    };
    let (p, q) = (k(r.repelling), k(r.attracting));
    (key_round(r.length), p.min(q), p.max(q))
}

/// Hyperbolic elements with translation length in `[a, b]`, one per axis,
/// sorted by length (ties keep enumeration order).
pub fn harvest_closed_geodesics(elements: &[GroupElement], a: f64, b: f64) -> Result<Vec<ClosedGeodesicRec>> {
    check_band(a, b)?;
    let mut keys = std::collections::HashSet::new();
    let mut out = Vec::new();
    for e in elements {
        if classify_isometry(&e.matrix) != IsometryKind::Hyperbolic {
            continue;
        }
        let rec = ClosedGeodesicRec::from_element(e.clone())?;
        if rec.length < a || rec.length > b {
            continue;
        }
        if keys.insert(geodesic_key(&rec)) {
            out.push(rec);
        }
    }
    out.sort_by(|x, y| x.length.total_cmp(&y.length));
    Ok(out)
}

pub fn closed_geodesics_in_band(
    g: &GroupPresentation,
    max_word_length: usize,
    a: f64,
    b: f64,
) -> Result<Vec<ClosedGeodesicRec>> {
    check_band(a, b)?;
    let elements = enumerate_elements(g, max_word_length)?;
    harvest_closed_geodesics(&elements, a, b)
}

pub(crate) fn check_band(a: f64, b: f64) -> Result<()> {
    if !(a > 0.0) || !(a <= b) || !b.is_finite() {
        return Err(Error::InvalidBand { a, b });
    }
    Ok(())
}

/// Greedy descent towards the Dirichlet domain centred at `i`.
#[derive(Clone, Debug)]
pub struct DirichletReducer {
    letters: Vec<Letter>,
    mats: Vec<Moebius>,
    max_steps: usize,
}

#[derive(Clone, Debug)]
pub struct Reduction {
    pub frame: Frame,
    /// Accumulated element `γ` with `frame = γ·input`.
    pub applied: Moebius,
    /// Letters in application order (the word of `γ` read right to left).
    pub steps: Vec<Letter>,
}

impl Reduction {
    pub fn applied_element(&self) -> GroupElement {
        GroupElement { matrix: self.applied, word: Word(self.steps.iter().rev().copied().collect()) }
    }
}

impl DirichletReducer {
    pub fn new(g: &GroupPresentation) -> Self {
        let letters = g.letters();
        let mats = letters.iter().map(|&l| g.letter_matrix(l)).collect();
        DirichletReducer { letters, mats, max_steps: MAX_DESCENT_STEPS }
    }

    pub fn with_max_steps(mut self, max_steps: usize) -> Self {
        self.max_steps = max_steps;
        self
    }

    /// Index of the letter that most decreases the distance to `i`, if any
    /// improves by more than [`DESCENT_MARGIN`].
    fn best_move(&self, z: HPoint) -> Option<usize> {
        let current = hyp_distance(z, HPoint::I);
        let mut best: Option<(usize, f64)> = None;
        for (k, m) in self.mats.iter().enumerate() {
            let d = hyp_distance(m.apply(z), HPoint::I);
            if d < current - DESCENT_MARGIN && best.is_none_or(|(_, bd)| d < bd) {
                best = Some((k, d));
            }
        }
        best.map(|(k, _)| k)
    }

    pub fn is_reduced(&self, z: HPoint) -> bool {
        self.best_move(z).is_none()
    }

    pub fn reduce_point(&self, z: HPoint) -> Result<(HPoint, Moebius)> {
        let mut z = z;
        let mut applied = Moebius::IDENTITY;
        for _ in 0..self.max_steps {
            match self.best_move(z) {
                None => return Ok((z, applied)),
                Some(k) => {
                    applied = self.mats[k].compose(&applied);
                    z = self.mats[k].apply(z);
                }
            }
        }
        Err(Error::NoConvergence { steps: self.max_steps })
    }

    pub fn reduce(&self, u: &Frame) -> Result<Reduction> {
        let mut frame = *u;
        let mut applied = Moebius::IDENTITY;
        let mut steps = Vec::new();
        for _ in 0..self.max_steps {
            match self.best_move(frame.base()) {
                None => return Ok(Reduction { frame, applied, steps }),
                Some(k) => {
                    applied = self.mats[k].compose(&applied);
                    frame = frame.pushed(&self.mats[k]);
                    steps.push(self.letters[k]);
                }
            }
        }
        Err(Error::NoConvergence { steps: self.max_steps })
    }
}

pub fn dirichlet_reduce(g: &GroupPresentation, u: &Frame) -> Result<(Frame, GroupElement)> {
    let r = DirichletReducer::new(g).reduce(u)?;
    let applied = r.applied_element();
    Ok((r.frame, applied))
}

/// Predicate for the kernel of the homomorphism to ℤ sending generator `k`
/// to `weights[k]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct KernelFilter {
    weights: Vec<i64>,
}

impl KernelFilter {
    pub fn weight(&self, w: &Word) -> i64 {
        w.letters()
            .iter()
            .map(|l| {
                let x = self.weights.get(l.generator).copied().unwrap_or(0);
                if l.inverse {
                    -x
                } else {
                    x
                }
            })
            .sum()
    }

    pub fn accepts(&self, e: &GroupElement) -> bool {
        self.weight(&e.word) == 0
    }

    pub fn weights(&self) -> &[i64] {
        &self.weights
    }
}

pub fn kernel_filter(g: &GroupPresentation, weights: &[i64]) -> Result<KernelFilter> {
    if weights.len() != g.rank() {
        return Err(Error::InvalidArgument(format!(
            "{} weights for {} generators",
            weights.len(),
            g.rank()
        )));
    }
    Ok(KernelFilter { weights: weights.to_vec() })
}

/// Regular hyperbolic octagon with interior angles π/4, centred at `i`.
pub mod octagon {
    use super::*;

    /// Hyperbolic distance from the centre to each side midpoint:
    /// `cosh ρ = cot(π/8)`.
    pub fn inradius() -> f64 {
        (1.0 / (PI / 8.0).tan()).acosh()
    }

    /// Hyperbolic distance from the centre to each vertex:
    /// `cosh R = cot²(π/8)`.
    pub fn circumradius() -> f64 {
        (1.0 / (PI / 8.0).tan()).powi(2).acosh()
    }

    /// Angle at `i` (as a tangent direction, counter-clockwise from the
    /// upward vertical) of the perpendicular to side `j`.
    fn side_angle(j: usize) -> f64 {
        j as f64 * FRAC_PI_4
    }

    /// Side pairing taking side `from` onto side `to` and the octagon onto
    /// its neighbour across side `to`.
    pub fn side_pairing(from: usize, to: usize) -> Moebius {
        Moebius::rotation(side_angle(to))
            .compose(&Moebius::diagonal(2.0 * inradius()))
            .compose(&Moebius::rotation(PI))
            .compose(&Moebius::rotation(-side_angle(from)))
    }

    /// The eight vertices, counter-clockwise.
    pub fn vertices() -> Vec<HPoint> {
        let r = circumradius();
        (0..8)
            .map(|j| {
                let dir = side_angle(j) + PI / 8.0;
                Moebius::rotation(dir).apply(HPoint::on_imaginary_axis(r))
            })
            .collect()
    }

    /// Area from the angle defect of the constructed polygon.
    pub fn area() -> f64 {
        let v = vertices();
        let n = v.len();
        let angle_sum: f64 = (0..n)
            .map(|k| hyp_angle(v[k], v[(k + n - 1) % n], v[(k + 1) % n]).expect("distinct vertices"))
            .sum();
        (n as f64 - 2.0) * PI - angle_sum
    }

    /// Euclidean bounding box `(x_min, x_max, y_min, y_max)` of the octagon
    /// in the half-plane, from dense sampling of its geodesic sides.
    pub fn bounding_box() -> (f64, f64, f64, f64) {
        let v = vertices();
        let mut bb = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
        for k in 0..v.len() {
            let (p, q) = (v[k], v[(k + 1) % v.len()]);
            let side_len = hyp_distance(p, q);
            // Walk the side from p towards q with the unit-speed geodesic.
            let dir = crate::hyperbolic::tangent_toward_point(p, q);
            let u = Frame::at(p, dir.1.atan2(dir.0));
            for s in 0..=512 {
                let z = crate::hyperbolic::geodesic_flow(&u, side_len * s as f64 / 512.0).base();
                bb.0 = bb.0.min(z.re());
                bb.1 = bb.1.max(z.re());
                bb.2 = bb.2.min(z.im());
                bb.3 = bb.3.max(z.im());
            }
        }
        bb
    }
}

/// Surface group of genus two: `a1, b1, a2, b2` pair the sides of the regular
/// octagon as `a1 b1 a1⁻¹ b1⁻¹ a2 b2 a2⁻¹ b2⁻¹`, so that
/// `[a1, b1][a2, b2] = 1`.
pub fn genus2_octagon_group() -> GroupPresentation {
    use octagon::side_pairing;
    // Orientations chosen so the boundary word closes up to the identity.
    let a1 = side_pairing(2, 0);
    let b1 = side_pairing(1, 3);
    let a2 = side_pairing(6, 4);
    let b2 = side_pairing(5, 7);
    let names = ["a1", "b1", "a2", "b2"].iter().map(|s| s.to_string()).collect();
    let relator = Word::from_signed(&[1, 2, -1, -2, 3, 4, -3, -4], 4).expect("valid letters");
    GroupPresentation::new("genus2-octagon", vec![a1, b1, a2, b2], names)
        .and_then(|g| g.with_relators(vec![relator]))
        .expect("octagon generators are valid")
}

/// Genus-2 group with kernel weights `(1, 0, 0, 0)`, whose kernel is the
/// fundamental group of a ℤ-cover of the surface.
pub fn genus2_kernel_cover() -> GroupPresentation {
    genus2_octagon_group().with_kernel_weights(vec![1, 0, 0, 0]).expect("four weights")
}

/// Cyclic group generated by `diag(e^{ℓ/2}, e^{−ℓ/2})`.
pub fn cyclic_group(translation_length: f64) -> Result<GroupPresentation> {
    if !(translation_length > 0.0) {
        return Err(Error::InvalidArgument("translation length must be positive".into()));
    }
    GroupPresentation::new("cyclic", vec![Moebius::diagonal(translation_length)], vec!["g".into()])
}

/// Free group on `[[1,2],[0,1]]` and `[[1,0],[2,1]]`.
pub fn sanov_free_group() -> GroupPresentation {
    let a = Moebius::new(1.0, 2.0, 0.0, 1.0).expect("det 1");
    let b = Moebius::new(1.0, 0.0, 2.0, 1.0).expect("det 1");
    GroupPresentation::new("sanov", vec![a, b], vec!["a".into(), "b".into()]).expect("valid")
}

/// Quotient of ℍ by `⟨diag(e^{ℓ/2}, e^{−ℓ/2})⟩`: an annulus whose unique
/// closed geodesic (the image of the imaginary axis) has length `ℓ`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HyperbolicCylinder {
    systole_length: f64,
}

impl HyperbolicCylinder {
    pub fn new(systole_length: f64) -> Result<Self> {
        if !(systole_length > 0.0) || !systole_length.is_finite() {
            return Err(Error::InvalidArgument(format!("systole length {systole_length} must be positive")));
        }
        Ok(HyperbolicCylinder { systole_length })
    }

    pub fn systole_length(&self) -> f64 {
        self.systole_length
    }

    pub fn group(&self) -> GroupPresentation {
        cyclic_group(self.systole_length).expect("positive length")
    }
}

/// Length of the hypercycle at distance `w` from the systole, `ℓ·cosh w`.
pub fn hypercycle_length(c: &HyperbolicCylinder, w: f64) -> Result<f64> {
    if !(w >= 0.0) {
        return Err(Error::InvalidArgument(format!("distance {w} must be >= 0")));
    }
    Ok(c.systole_length * w.cosh())
}

/// On-disk group description.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct GroupSpec {
    pub name: String,
    pub generators: Vec<[f64; 4]>,
    pub names: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub relators: Vec<Vec<i64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kernel_weights: Option<Vec<i64>>,
}

impl GroupSpec {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("group spec serializes")
    }

    /// Builds the presentation. Generators must have determinant 1 within
    /// 1e−9 unless `normalize_det` is set, in which case any positive
    /// determinant is rescaled first.
    pub fn build(&self, normalize_det: bool) -> Result<GroupPresentation> {
        let gens = self
            .generators
            .iter()
            .map(|m| {
                if normalize_det {
                    Moebius::from_row_major(*m)
                } else {
                    Moebius::new_exact(m[0], m[1], m[2], m[3])
                }
            })
            .collect::<Result<Vec<_>>>()?;
        let rank = gens.len();
        let relators = self.relators.iter().map(|r| Word::from_signed(r, rank)).collect::<Result<Vec<_>>>()?;
        let mut g = GroupPresentation::new(self.name.clone(), gens, self.names.clone())?.with_relators(relators)?;
        if let Some(w) = &self.kernel_weights {
            g = g.with_kernel_weights(w.clone())?;
        }
        Ok(g)
    }

    pub fn from_presentation(g: &GroupPresentation) -> Self {
        GroupSpec {
            name: g.name.clone(),
            generators: g.generators().iter().map(|m| m.entries()).collect(),
            names: g.names().to_vec(),
            relators: g.relators().iter().map(|w| w.to_signed()).collect(),
            kernel_weights: g.kernel_weights().map(|w| w.to_vec()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn sanov_counts() {
        let g = sanov_free_group();
        assert_eq!(enumerate_elements(&g, 1).unwrap().len(), 4);
        // Free of rank 2: 4 words of length 1 and 4·3 reduced words of length 2.
        let e = enumerate_elements(&g, 2).unwrap();
        assert_eq!(e.iter().filter(|x| x.word.len() == 2).count(), 12);
        assert_eq!(e.len(), 16);
    }

    #[test]
    fn cyclic_enumeration() {
        let g = cyclic_group(2.0).unwrap();
        let e = enumerate_elements(&g, 3).unwrap();
        assert_eq!(e.len(), 6);
        let lens: Vec<_> = e.iter().map(|x| x.word.len()).collect();
        assert_eq!(lens, vec![1, 1, 2, 2, 3, 3]);
    }

    #[test]
    fn enumeration_order_is_lexicographic() {
        let g = sanov_free_group();
        let e = enumerate_elements(&g, 2).unwrap();
        let words: Vec<Vec<i64>> = e.iter().map(|x| x.word.to_signed()).collect();
        assert_eq!(words[..4], [vec![1], vec![-1], vec![2], vec![-2]]);
        assert_eq!(words[4..7], [vec![1, 1], vec![1, 2], vec![1, -2]]);
    }

    #[test]
    fn budget_cap() {
        let g = sanov_free_group();
        assert_eq!(enumerate_elements_capped(&g, 3, 10), Err(Error::BudgetExceeded { cap: 10 }));
        assert!(enumerate_elements(&g, 0).is_err());
    }

    #[test]
    fn projective_set_dedups_sign() {
        let mut s = ProjectiveSet::new();
        let m = Moebius::new(2.0, 1.0, 1.0, 1.0).unwrap();
        assert!(s.insert(m));
        assert!(!s.insert(Moebius::new(-2.0, -1.0, -1.0, -1.0).unwrap()));
        assert!(!s.insert(Moebius::new(2.0 + 1e-12, 1.0, 1.0, 1.0).unwrap()));
        assert_eq!(s.len(), 1);
    }

    #[test]
    fn cyclic_band() {
        let g = cyclic_group(2.0).unwrap();
        let recs = closed_geodesics_in_band(&g, 4, 1.0, 3.0).unwrap();
        assert_eq!(recs.len(), 1);
        assert_abs_diff_eq!(recs[0].length, 2.0, epsilon = 1e-12);
        assert!(closed_geodesics_in_band(&g, 4, 0.5, 1.5).unwrap().is_empty());
        assert!(matches!(closed_geodesics_in_band(&g, 4, 2.0, 1.0), Err(Error::InvalidBand { .. })));
    }

    #[test]
    fn octagon_relator_and_area() {
        let g = genus2_octagon_group();
        let r = g.evaluate(&g.relators()[0]);
        assert!(r.is_identity(1e-8), "relator = {r}");
        assert_abs_diff_eq!(octagon::area(), 4.0 * PI, epsilon = 1e-9);
        let l0 = axis_data(&g.generators()[0]).unwrap().translation_length;
        for m in g.generators() {
            assert_eq!(classify_isometry(m), IsometryKind::Hyperbolic);
            // All four pairings are conjugate under the octagon's symmetries.
            assert_abs_diff_eq!(axis_data(m).unwrap().translation_length, l0, epsilon = 1e-12);
        }
    }

    #[test]
    fn octagon_vertices_are_one_cycle() {
        // Every generator maps some vertex onto another vertex.
        let g = genus2_octagon_group();
        let v = octagon::vertices();
        for m in g.generators() {
            let hits = v
                .iter()
                .filter(|&&p| v.iter().any(|&q| hyp_distance(m.apply(p), q) < 1e-9))
                .count();
            assert_eq!(hits, 2);
        }
    }

    #[test]
    fn dirichlet_examples() {
        let g = genus2_octagon_group();
        let (f, e) = dirichlet_reduce(&g, &Frame::IDENTITY).unwrap();
        assert_eq!(f, Frame::IDENTITY);
        assert!(e.word.is_empty());

        let c = cyclic_group(2.0).unwrap();
        let u = Frame::at(HPoint::new(0.0, 9.0).unwrap(), std::f64::consts::FRAC_PI_2);
        let (f, e) = dirichlet_reduce(&c, &u).unwrap();
        assert_abs_diff_eq!(f.base().im(), 9.0 * (-2.0f64).exp(), epsilon = 1e-12);
        assert_eq!(e.word.to_signed(), vec![-1]);
    }

    #[test]
    fn dirichlet_word_matches_matrix() {
        let g = genus2_octagon_group();
        let u = Frame::at(HPoint::new(3.0, 0.01).unwrap(), 1.0);
        let (f, e) = dirichlet_reduce(&g, &u).unwrap();
        assert!(g.evaluate(&e.word).approx_eq(&e.matrix, 1e-9));
        assert!(f.distance(&u.pushed(&e.matrix)) < 1e-9);
        assert!(hyp_distance(f.base(), HPoint::I) <= octagon::circumradius() + 1e-9);
    }

    #[test]
    fn no_convergence_is_reported() {
        let g = genus2_octagon_group();
        let r = DirichletReducer::new(&g).with_max_steps(1);
        let far = Frame::at(HPoint::new(5.0, 1e-4).unwrap(), 0.0);
        assert!(matches!(r.reduce(&far), Err(Error::NoConvergence { .. })));
    }

    #[test]
    fn kernel_examples() {
        let g = genus2_octagon_group();
        let k = kernel_filter(&g, &[1, 0, 0, 0]).unwrap();
        assert!(k.accepts(&g.element(Word::from_signed(&[1, 2, -1, -2], 4).unwrap())));
        assert!(!k.accepts(&g.element(Word::from_signed(&[1], 4).unwrap())));
        assert!(kernel_filter(&g, &[1, 0]).is_err());
    }

    #[test]
    fn hypercycle_examples() {
        let c = HyperbolicCylinder::new(2.0).unwrap();
        assert_eq!(hypercycle_length(&c, 0.0).unwrap(), 2.0);
        assert_abs_diff_eq!(hypercycle_length(&c, 1.0).unwrap(), 2.0 * 1f64.cosh(), epsilon = 1e-15);
        assert!(hypercycle_length(&c, 0.5).unwrap() < hypercycle_length(&c, 0.6).unwrap());
        assert!(hypercycle_length(&c, -1.0).is_err());
        assert!(HyperbolicCylinder::new(0.0).is_err());
    }

    #[test]
    fn group_spec_roundtrip_and_det_check() {
        let g = genus2_kernel_cover();
        let spec = GroupSpec::from_presentation(&g);
        let back = GroupSpec::parse(&spec.to_toml()).unwrap().build(false).unwrap();
        assert_eq!(back.rank(), 4);
        assert_eq!(back.kernel_weights(), Some(&[1, 0, 0, 0][..]));

        let bad = "name = \"x\"\ngenerators = [[2.0, 0.0, 0.0, 1.0]]\nnames = [\"a\"]\n";
        let spec = GroupSpec::parse(bad).unwrap();
        assert!(matches!(spec.build(false), Err(Error::Determinant { .. })));
        assert!(spec.build(true).is_ok());
        assert!(GroupSpec::parse("name = \"x\"\nbogus = 1\n").is_err());
    }

    #[test]
    fn identity_generator_rejected() {
        assert!(GroupPresentation::new("bad", vec![Moebius::IDENTITY], vec!["e".into()]).is_err());
    }
}
