//! Upper half-plane kernel: points, Möbius maps, distance, angles, Busemann
//! functions and the geodesic/horocycle/affine flows acting on frames.
//!
//! A frame is stored as the matrix `g` taking the reference frame (base `i`,
//! pointing up towards `∞`) to it. All flows act on the right, so
//! `geodesic_flow(u, t)` is `g·a_t` with `a_t = diag(e^{t/2}, e^{-t/2})` and
//! `horocycle_flow(u, s)` is `g·u_s` with `u_s = [[1, s], [0, 1]]`.

use std::f64::consts::{FRAC_PI_2, TAU};
use std::fmt;
use std::ops::Mul;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Two maps are projectively equal if `min(‖A−B‖∞, ‖A+B‖∞)` is at most this.
pub const PROJ_EQ_TOL: f64 = 1e-9;
/// Tolerance on `|trace| − 2` used by [`classify_isometry`].
pub const CLASSIFY_TOL: f64 = 1e-9;
/// Determinant tolerance accepted by [`Moebius::new_exact`].
pub const DET_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HPoint {
    re: f64,
    im: f64,
}

impl HPoint {
    pub const I: HPoint = HPoint { re: 0.0, im: 1.0 };

    pub fn new(re: f64, im: f64) -> Result<Self> {
        if !re.is_finite() || !im.is_finite() {
            return Err(Error::NonFinite);
        }
        if im <= 0.0 {
            return Err(Error::NotInHalfPlane(im));
        }
        Ok(HPoint { re, im })
    }

    /// Point on the imaginary axis at height `e^t`.
    pub fn on_imaginary_axis(t: f64) -> Self {
        HPoint { re: 0.0, im: t.exp() }
    }

    pub fn re(&self) -> f64 {
        self.re
    }

    pub fn im(&self) -> f64 {
        self.im
    }

    pub fn to_complex(self) -> Complex64 {
        Complex64::new(self.re, self.im)
    }

    fn from_complex_unchecked(z: Complex64) -> Self {
        // Images of interior points under det-1 maps stay interior; clamp the
        // rare underflow so the invariant survives extreme round-off.
        HPoint { re: z.re, im: z.im.max(f64::MIN_POSITIVE) }
    }

    /// Cayley image in the unit disk, `w = (z − i)/(z + i)`.
    pub fn to_disk(self) -> Complex64 {
        let z = self.to_complex();
        (z - Complex64::i()) / (z + Complex64::i())
    }

    pub fn from_disk(w: Complex64) -> Result<Self> {
        if w.norm() >= 1.0 {
            return Err(Error::NotInHalfPlane(0.0));
        }
        let z = Complex64::i() * (Complex64::new(1.0, 0.0) + w) / (Complex64::new(1.0, 0.0) - w);
        HPoint::new(z.re, z.im)
    }
}

impl fmt::Display for HPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{:+}i", self.re, self.im)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum BoundaryPoint {
    Finite(f64),
    Infinity,
}

impl BoundaryPoint {
    pub fn is_infinite(&self) -> bool {
        matches!(self, BoundaryPoint::Infinity)
    }

    /// `|ξ|`, with `∞` mapped to `f64::INFINITY`.
    pub fn magnitude(&self) -> f64 {
        match *self {
            BoundaryPoint::Finite(x) => x.abs(),
            BoundaryPoint::Infinity => f64::INFINITY,
        }
    }

    pub fn approx_eq(&self, other: &BoundaryPoint, tol: f64) -> bool {
        match (*self, *other) {
            (BoundaryPoint::Infinity, BoundaryPoint::Infinity) => true,
            (BoundaryPoint::Finite(x), BoundaryPoint::Finite(y)) => {
                (x - y).abs() <= tol * (1.0 + x.abs().max(y.abs()))
            }
            _ => false,
        }
    }
}

impl fmt::Display for BoundaryPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BoundaryPoint::Finite(x) => write!(f, "{x}"),
            BoundaryPoint::Infinity => write!(f, "inf"),
        }
    }
}

/// Element of PSL(2,ℝ): a real matrix of determinant one, up to sign.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct Moebius {
    a: f64,
    b: f64,
    c: f64,
    d: f64,
}

impl Moebius {
    pub const IDENTITY: Moebius = Moebius { a: 1.0, b: 0.0, c: 0.0, d: 1.0 };

    /// Builds a map from any matrix of positive determinant, rescaling it to
    /// determinant one.
    pub fn new(a: f64, b: f64, c: f64, d: f64) -> Result<Self> {
        if ![a, b, c, d].iter().all(|x| x.is_finite()) {
            return Err(Error::NonFinite);
        }
        let det = a * d - b * c;
        if !(det > 0.0) {
            return Err(Error::Determinant { det });
        }
        Ok(Moebius { a, b, c, d }.rescaled(det))
    }

    /// Like [`Moebius::new`] but rejects matrices whose determinant is not
    /// already 1 within [`DET_TOL`].
    pub fn new_exact(a: f64, b: f64, c: f64, d: f64) -> Result<Self> {
        if ![a, b, c, d].iter().all(|x| x.is_finite()) {
            return Err(Error::NonFinite);
        }
        let det = a * d - b * c;
        if (det - 1.0).abs() > DET_TOL {
            return Err(Error::Determinant { det });
        }
        Ok(Moebius { a, b, c, d }.rescaled(det))
    }

    pub fn from_row_major(m: [f64; 4]) -> Result<Self> {
        Moebius::new(m[0], m[1], m[2], m[3])
    }

    fn rescaled(self, det: f64) -> Self {
        if det == 1.0 {
            return self;
        }
        let s = det.sqrt().recip();
        Moebius { a: self.a * s, b: self.b * s, c: self.c * s, d: self.d * s }
    }

    fn renormalized(self) -> Self {
        let det = self.det();
        self.rescaled(det)
    }

    /// `a_t = diag(e^{t/2}, e^{−t/2})`.
    pub fn diagonal(t: f64) -> Self {
        let h = (0.5 * t).exp();
        Moebius { a: h, b: 0.0, c: 0.0, d: h.recip() }
    }

    /// `u_s = [[1, s], [0, 1]]`.
    pub fn unipotent(s: f64) -> Self {
        Moebius { a: 1.0, b: s, c: 0.0, d: 1.0 }
    }

    /// `[[α, β], [0, 1/α]]`.
    pub fn affine(alpha: f64, beta: f64) -> Result<Self> {
        if !(alpha > 0.0) {
            return Err(Error::NonpositiveScale(alpha));
        }
        Ok(Moebius { a: alpha, b: beta, c: 0.0, d: alpha.recip() })
    }

    /// Elliptic rotation about `i` turning tangent vectors at `i` by `angle`
    /// counter-clockwise.
    pub fn rotation(angle: f64) -> Self {
        let (s, c) = (0.5 * angle).sin_cos();
        Moebius { a: c, b: s, c: -s, d: c }
    }

    pub fn entries(&self) -> [f64; 4] {
        [self.a, self.b, self.c, self.d]
    }

    pub fn det(&self) -> f64 {
        self.a * self.d - self.b * self.c
    }

    pub fn trace(&self) -> f64 {
        self.a + self.d
    }

    pub fn inverse(&self) -> Self {
        Moebius { a: self.d, b: -self.b, c: -self.c, d: self.a }
    }

    /// Product `self · rhs`, renormalized to determinant one.
    pub fn compose(&self, rhs: &Moebius) -> Self {
        Moebius {
            a: self.a * rhs.a + self.b * rhs.c,
            b: self.a * rhs.b + self.b * rhs.d,
            c: self.c * rhs.a + self.d * rhs.c,
            d: self.c * rhs.b + self.d * rhs.d,
        }
        .renormalized()
    }

    /// `self^n` for any integer `n`, by repeated squaring.
    pub fn pow(&self, n: i64) -> Self {
        let mut base = if n < 0 { self.inverse() } else { *self };
        let mut e = n.unsigned_abs();
        let mut acc = Moebius::IDENTITY;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.compose(&base);
            }
            base = base.compose(&base);
            e >>= 1;
        }
        acc
    }

    /// `min(‖A−B‖∞, ‖A+B‖∞)` with the entrywise max norm.
    pub fn projective_distance(&self, other: &Moebius) -> f64 {
        let p = self.entries();
        let q = other.entries();
        let minus = p.iter().zip(&q).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        let plus = p.iter().zip(&q).map(|(x, y)| (x + y).abs()).fold(0.0, f64::max);
        minus.min(plus)
    }

    pub fn approx_eq(&self, other: &Moebius, tol: f64) -> bool {
        self.projective_distance(other) <= tol
    }

    pub fn is_identity(&self, tol: f64) -> bool {
        self.approx_eq(&Moebius::IDENTITY, tol)
    }

    pub fn apply(&self, z: HPoint) -> HPoint {
        let z = z.to_complex();
        let w = (z * self.a + self.b) / (z * self.c + self.d);
        HPoint::from_complex_unchecked(w)
    }

    pub fn apply_boundary(&self, x: BoundaryPoint) -> BoundaryPoint {
        match x {
            BoundaryPoint::Infinity => {
                if self.c == 0.0 {
                    BoundaryPoint::Infinity
                } else {
                    BoundaryPoint::Finite(self.a / self.c)
                }
            }
            BoundaryPoint::Finite(x) => {
                let den = self.c * x + self.d;
                if den == 0.0 {
                    BoundaryPoint::Infinity
                } else {
                    BoundaryPoint::Finite((self.a * x + self.b) / den)
                }
            }
        }
    }

    /// Complex derivative `1/(cz + d)²`.
    fn derivative(&self, z: HPoint) -> Complex64 {
        let w = z.to_complex() * self.c + self.d;
        (w * w).inv()
    }
}

impl PartialEq for Moebius {
    fn eq(&self, other: &Self) -> bool {
        self.approx_eq(other, PROJ_EQ_TOL)
    }
}

impl Mul for Moebius {
    type Output = Moebius;
    fn mul(self, rhs: Moebius) -> Moebius {
        self.compose(&rhs)
    }
}

impl<'a> Mul<&'a Moebius> for &'a Moebius {
    type Output = Moebius;
    fn mul(self, rhs: &'a Moebius) -> Moebius {
        self.compose(rhs)
    }
}

impl fmt::Display for Moebius {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[[{}, {}], [{}, {}]]", self.a, self.b, self.c, self.d)
    }
}

/// Either an interior or an ideal point; the argument of [`moebius_apply`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum PlanePoint {
    Interior(HPoint),
    Boundary(BoundaryPoint),
}

pub fn moebius_apply(m: &Moebius, p: PlanePoint) -> PlanePoint {
    match p {
        PlanePoint::Interior(z) => PlanePoint::Interior(m.apply(z)),
        PlanePoint::Boundary(x) => PlanePoint::Boundary(m.apply_boundary(x)),
    }
}

pub fn hyp_distance(p: HPoint, q: HPoint) -> f64 {
    // 2·asinh(|p−q| / (2·sqrt(im p · im q))) is the cancellation-free form of
    // arccosh(1 + |p−q|²/(2·im p·im q)).
    let dx = p.re - q.re;
    let dy = p.im - q.im;
    let chord = dx.hypot(dy);
    2.0 * (chord / (2.0 * (p.im * q.im).sqrt())).asinh()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum IsometryKind {
    Identity,
    Elliptic,
    Parabolic,
    Hyperbolic,
}

pub fn classify_isometry(m: &Moebius) -> IsometryKind {
    classify_isometry_with_tol(m, CLASSIFY_TOL)
}

pub fn classify_isometry_with_tol(m: &Moebius, tol: f64) -> IsometryKind {
    if m.is_identity(PROJ_EQ_TOL) {
        return IsometryKind::Identity;
    }
    let excess = m.trace().abs() - 2.0;
    if excess > tol {
        IsometryKind::Hyperbolic
    } else if excess < -tol {
        IsometryKind::Elliptic
    } else {
        IsometryKind::Parabolic
    }
}

/// `2·arccosh(|trace|/2)`, valid for hyperbolic maps.
pub fn translation_length_of_trace(trace: f64) -> f64 {
    2.0 * (0.5 * trace.abs()).acosh()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AxisData {
    pub repelling: BoundaryPoint,
    pub attracting: BoundaryPoint,
    pub translation_length: f64,
}

pub fn axis_data(m: &Moebius) -> Result<AxisData> {
    if classify_isometry(m) != IsometryKind::Hyperbolic {
        return Err(Error::NotHyperbolic);
    }
    let [a, b, c, d] = m.entries();
    let tr = a + d;
    let translation_length = translation_length_of_trace(tr);
    let disc = (tr * tr - 4.0).sqrt();

    // Fixed points solve c z² + (d − a) z − b = 0.
    let lin = d - a;
    let q = -0.5 * (lin + lin.signum() * disc);
    let z1 = if c == 0.0 { BoundaryPoint::Infinity } else { BoundaryPoint::Finite(q / c) };
    let z2 = if q == 0.0 { BoundaryPoint::Infinity } else { BoundaryPoint::Finite(-b / q) };

    // A fixed point x attracts iff |c x + d| > 1 (derivative 1/(cx+d)² < 1).
    let attracts = |x: BoundaryPoint| match x {
        BoundaryPoint::Infinity => d.abs() < 1.0,
        BoundaryPoint::Finite(x) => (c * x + d).abs() > 1.0,
    };
    let (repelling, attracting) = if attracts(z1) && !attracts(z2) {
        (z2, z1)
    } else if attracts(z2) && !attracts(z1) {
        (z1, z2)
    } else {
        // Round-off near the axis: fall back on the multiplier at z1.
        let mult = match z1 {
            BoundaryPoint::Infinity => d.abs(),
            BoundaryPoint::Finite(x) => (c * x + d).abs(),
        };
        if mult > 1.0 {
            (z2, z1)
        } else {
            (z1, z2)
        }
    };
    Ok(AxisData { repelling, attracting, translation_length })
}

/// Unit tangent at `v` of the geodesic whose circle (or vertical line) is
/// determined by `center`, oriented so that it points along `chord`.
fn tangent_from_center(v: HPoint, center: Option<f64>, chord: (f64, f64)) -> (f64, f64) {
    let (tx, ty) = match center {
        None => (0.0, 1.0),
        Some(c) => {
            let (rx, ry) = (v.re - c, v.im);
            let n = rx.hypot(ry);
            (-ry / n, rx / n)
        }
    };
    if tx * chord.0 + ty * chord.1 < 0.0 {
        (-tx, -ty)
    } else {
        (tx, ty)
    }
}

/// Unit tangent at `v` of the geodesic segment from `v` to `p`.
pub fn tangent_toward_point(v: HPoint, p: HPoint) -> (f64, f64) {
    let dx = p.re - v.re;
    let scale = (v.re.abs() + p.re.abs() + v.im + p.im) * 1e-15;
    let center = if dx.abs() <= scale {
        None
    } else {
        Some(((p.re * p.re + p.im * p.im) - (v.re * v.re + v.im * v.im)) / (2.0 * dx))
    };
    tangent_from_center(v, center, (dx, p.im - v.im))
}

/// Unit tangent at `v` of the geodesic ray from `v` to the ideal point `xi`.
pub fn tangent_toward_boundary(v: HPoint, xi: BoundaryPoint) -> (f64, f64) {
    match xi {
        BoundaryPoint::Infinity => (0.0, 1.0),
        BoundaryPoint::Finite(x) => {
            let dx = x - v.re;
            if dx == 0.0 {
                return (0.0, -1.0);
            }
            let center = ((v.re * v.re + v.im * v.im) - x * x) / (2.0 * (v.re - x));
            tangent_from_center(v, Some(center), (dx, -v.im))
        }
    }
}

fn angle_between(u: (f64, f64), w: (f64, f64)) -> f64 {
    let cross = u.0 * w.1 - u.1 * w.0;
    let dot = u.0 * w.0 + u.1 * w.1;
    cross.abs().atan2(dot)
}

/// Interior angle at `vertex` between the geodesic segments to `p` and `q`.
pub fn hyp_angle(vertex: HPoint, p: HPoint, q: HPoint) -> Result<f64> {
    if hyp_distance(vertex, p) == 0.0 || hyp_distance(vertex, q) == 0.0 {
        return Err(Error::Degenerate("angle vertex coincides with an endpoint"));
    }
    Ok(angle_between(tangent_toward_point(vertex, p), tangent_toward_point(vertex, q)))
}

/// Angle at `at` between two tangent directions given as unit vectors.
pub fn angle_between_tangents(u: (f64, f64), w: (f64, f64)) -> f64 {
    angle_between(u, w)
}

/// Busemann function with the convention `B_ξ(x, y) = lim_{z→ξ} d(x, z) − d(y, z)`,
/// so `B_∞(x, y) = ln(im y) − ln(im x)` and `B_ξ(x, y) ≥ 0` exactly when `y`
/// lies in the closed horoball at `ξ` through `x`.
pub fn busemann(xi: BoundaryPoint, x: HPoint, y: HPoint) -> f64 {
    match xi {
        BoundaryPoint::Infinity => y.im.ln() - x.im.ln(),
        BoundaryPoint::Finite(c) => {
            // Transport ξ to ∞ with z ↦ −1/(z − ξ): im becomes im z / |z − ξ|².
            let level = |z: HPoint| {
                let dx = z.re - c;
                z.im.ln() - (dx * dx + z.im * z.im).ln()
            };
            level(y) - level(x)
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Frame {
    g: Moebius,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrameGeometry {
    pub base: HPoint,
    /// Tangent angle in `[0, 2π)`, measured counter-clockwise from the
    /// positive real direction.
    pub direction: f64,
    pub forward: BoundaryPoint,
}

impl Frame {
    pub const IDENTITY: Frame = Frame { g: Moebius::IDENTITY };

    pub fn new(g: Moebius) -> Self {
        Frame { g }
    }

    /// Frame based at `base` whose tangent has angle `direction`.
    pub fn at(base: HPoint, direction: f64) -> Self {
        // Translate i to base by z ↦ y·z + x, then rotate about i so the up
        // vector turns to the requested direction.
        let lift = Moebius::new(base.im.sqrt(), base.re / base.im.sqrt(), 0.0, base.im.sqrt().recip())
            .expect("positive determinant");
        Frame { g: lift.compose(&Moebius::rotation(direction - FRAC_PI_2)) }
    }

    pub fn matrix(&self) -> &Moebius {
        &self.g
    }

    pub fn base(&self) -> HPoint {
        self.g.apply(HPoint::I)
    }

    pub fn forward(&self) -> BoundaryPoint {
        self.g.apply_boundary(BoundaryPoint::Infinity)
    }

    pub fn backward(&self) -> BoundaryPoint {
        self.g.apply_boundary(BoundaryPoint::Finite(0.0))
    }

    pub fn direction(&self) -> f64 {
        // The up vector i at i is carried to g'(i)·i.
        let v = self.g.derivative(HPoint::I) * Complex64::i();
        v.im.atan2(v.re).rem_euclid(TAU)
    }

    pub fn geometry(&self) -> FrameGeometry {
        FrameGeometry { base: self.base(), direction: self.direction(), forward: self.forward() }
    }

    /// Projective matrix distance between the underlying elements.
    pub fn distance(&self, other: &Frame) -> f64 {
        self.g.projective_distance(&other.g)
    }

    /// Left action of an isometry: `m·g`.
    pub fn pushed(&self, m: &Moebius) -> Frame {
        Frame { g: m.compose(&self.g) }
    }

    /// Right action: `g·m`.
    pub fn acted(&self, m: &Moebius) -> Frame {
        Frame { g: self.g.compose(m) }
    }
}

/// Frame on the axis of a hyperbolic element, based at the point of the
/// axis closest to `i` and pointing at the attracting fixed point.
pub fn axis_frame(m: &Moebius) -> Result<Frame> {
    let ax = axis_data(m)?;
    // h sends 0 to the repelling and ∞ to the attracting point.
    let h = match (ax.repelling, ax.attracting) {
        (BoundaryPoint::Finite(r), BoundaryPoint::Finite(a)) => {
            if a > r {
                Moebius::new(a, r, 1.0, 1.0)?
            } else {
                Moebius::new(-a, r, -1.0, 1.0)?
            }
        }
        (BoundaryPoint::Finite(r), BoundaryPoint::Infinity) => Moebius::new(1.0, r, 0.0, 1.0)?,
        (BoundaryPoint::Infinity, BoundaryPoint::Finite(a)) => Moebius::new(a, -1.0, 1.0, 0.0)?,
        (BoundaryPoint::Infinity, BoundaryPoint::Infinity) => {
            return Err(Error::Degenerate("axis with coincident endpoints"))
        }
    };
    // Foot of the perpendicular from h⁻¹(i) onto the imaginary axis.
    let w = h.inverse().apply(HPoint::I);
    let t = w.to_complex().norm().ln();
    Ok(geodesic_flow(&Frame::new(h), t))
}

pub fn frame_geometry(u: &Frame) -> FrameGeometry {
    u.geometry()
}

pub fn geodesic_flow(u: &Frame, t: f64) -> Frame {
    u.acted(&Moebius::diagonal(t))
}

pub fn horocycle_flow(u: &Frame, s: f64) -> Frame {
    u.acted(&Moebius::unipotent(s))
}

/// Right action of `[[α, β], [0, 1/α]]`, which equals
/// `horocycle_flow(geodesic_flow(u, 2 ln α), β/α)`.
pub fn affine_act(u: &Frame, alpha: f64, beta: f64) -> Result<Frame> {
    Ok(u.acted(&Moebius::affine(alpha, beta)?))
}

/// Angle normalization helper: maps any angle to `[0, 2π)`.
pub fn wrap_angle(theta: f64) -> f64 {
    theta.rem_euclid(TAU)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    fn pt(re: f64, im: f64) -> HPoint {
        HPoint::new(re, im).unwrap()
    }

    #[test]
    fn rejects_lower_half_plane() {
        assert!(matches!(HPoint::new(0.0, 0.0), Err(Error::NotInHalfPlane(_))));
        assert!(HPoint::new(1.0, -2.0).is_err());
    }

    #[test]
    fn apply_examples() {
        assert_eq!(Moebius::IDENTITY.apply(HPoint::I), HPoint::I);
        let t = Moebius::new(1.0, 1.0, 0.0, 1.0).unwrap();
        let z = t.apply(HPoint::I);
        assert_abs_diff_eq!(z.re(), 1.0);
        assert_abs_diff_eq!(z.im(), 1.0);
        let diag = Moebius::new(2.0, 0.0, 0.0, 0.5).unwrap();
        assert_eq!(diag.apply_boundary(BoundaryPoint::Infinity), BoundaryPoint::Infinity);
        let m = Moebius::new(2.0, 1.0, 1.0, 1.0).unwrap();
        assert_eq!(m.apply_boundary(BoundaryPoint::Infinity), BoundaryPoint::Finite(2.0));
        match moebius_apply(&m, PlanePoint::Boundary(BoundaryPoint::Finite(-1.0))) {
            PlanePoint::Boundary(BoundaryPoint::Infinity) => {}
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn determinant_is_normalized() {
        let m = Moebius::new(4.0, 0.0, 0.0, 1.0).unwrap();
        assert_abs_diff_eq!(m.det(), 1.0, epsilon = 1e-15);
        assert!(Moebius::new(1.0, 0.0, 0.0, -1.0).is_err());
        assert!(Moebius::new_exact(2.0, 0.0, 0.0, 1.0).is_err());
        assert!(Moebius::new_exact(2.0, 0.0, 0.0, 0.5).is_ok());
    }

    #[test]
    fn projective_identification() {
        let m = Moebius::new(2.0, 1.0, 1.0, 1.0).unwrap();
        let neg = Moebius::new(-2.0, -1.0, -1.0, -1.0).unwrap();
        assert_eq!(m, neg);
        assert!(Moebius::new(-1.0, 0.0, 0.0, -1.0).unwrap().is_identity(PROJ_EQ_TOL));
    }

    #[test]
    fn distance_examples() {
        assert_eq!(hyp_distance(HPoint::I, HPoint::I), 0.0);
        assert_abs_diff_eq!(hyp_distance(HPoint::I, pt(0.0, std::f64::consts::E)), 1.0, epsilon = 1e-15);
        // Closed form arccosh(3/2).
        assert_abs_diff_eq!(hyp_distance(HPoint::I, pt(1.0, 1.0)), 1.5f64.acosh(), epsilon = 1e-15);
    }

    #[test]
    fn classification_examples() {
        assert_eq!(classify_isometry(&Moebius::unipotent(1.0)), IsometryKind::Parabolic);
        assert_eq!(classify_isometry(&Moebius::diagonal(1.0)), IsometryKind::Hyperbolic);
        assert_eq!(classify_isometry(&Moebius::rotation(FRAC_PI_2)), IsometryKind::Elliptic);
        assert_eq!(classify_isometry(&Moebius::IDENTITY), IsometryKind::Identity);
        let neg_id = Moebius::new(-1.0, 0.0, 0.0, -1.0).unwrap();
        assert_eq!(classify_isometry(&neg_id), IsometryKind::Identity);
        let rot = Moebius::rotation(FRAC_PI_2);
        assert_abs_diff_eq!(rot.trace(), 2f64.sqrt(), epsilon = 1e-15);
    }

    #[test]
    fn axis_examples() {
        let ax = axis_data(&Moebius::diagonal(1.0)).unwrap();
        assert_eq!(ax.repelling, BoundaryPoint::Finite(0.0));
        assert_eq!(ax.attracting, BoundaryPoint::Infinity);
        assert_abs_diff_eq!(ax.translation_length, 1.0, epsilon = 1e-14);

        let m = Moebius::new(2.0, 1.0, 1.0, 1.0).unwrap();
        let ax = axis_data(&m).unwrap();
        let inv = axis_data(&m.inverse()).unwrap();
        assert!(ax.attracting.approx_eq(&inv.repelling, 1e-12));
        assert!(ax.repelling.approx_eq(&inv.attracting, 1e-12));
        assert_abs_diff_eq!(ax.translation_length, inv.translation_length, epsilon = 1e-14);
        // Iterates approach the attracting point.
        let mut z = HPoint::I;
        for _ in 0..40 {
            z = m.apply(z);
        }
        if let BoundaryPoint::Finite(x) = ax.attracting {
            assert_abs_diff_eq!(z.re(), x, epsilon = 1e-9);
        } else {
            panic!("finite attracting point expected");
        }
        assert_eq!(axis_data(&Moebius::unipotent(1.0)), Err(Error::NotHyperbolic));
        assert_eq!(axis_data(&Moebius::rotation(1.0)), Err(Error::NotHyperbolic));
        assert_eq!(axis_data(&Moebius::IDENTITY), Err(Error::NotHyperbolic));
    }

    #[test]
    fn axis_of_lower_triangular_element() {
        // z ↦ z/(z+1)·… has ∞ moved; check both fixed points are fixed.
        let m = Moebius::new(0.5, 0.0, 3.0, 2.0).unwrap();
        let ax = axis_data(&m).unwrap();
        for x in [ax.attracting, ax.repelling] {
            assert!(m.apply_boundary(x).approx_eq(&x, 1e-12), "{x:?} not fixed");
        }
    }

    #[test]
    fn flow_examples() {
        let e = std::f64::consts::E;
        let u = geodesic_flow(&Frame::IDENTITY, 1.0);
        assert_abs_diff_eq!(u.base().im(), e, epsilon = 1e-14);
        assert_eq!(geodesic_flow(&u, 0.0), u);
        let a = geodesic_flow(&geodesic_flow(&u, 0.7), 0.3);
        assert!(a.distance(&geodesic_flow(&u, 1.0)) < 1e-14);

        let h = horocycle_flow(&Frame::IDENTITY, 1.0);
        assert_abs_diff_eq!(h.base().re(), 1.0);
        assert_abs_diff_eq!(h.base().im(), 1.0);

        // g_t(h_s(u)) = h_{s e^{-t}}(g_t(u)) with t = ln 4, s = 1.
        let t = 4f64.ln();
        let lhs = geodesic_flow(&horocycle_flow(&u, 1.0), t);
        let rhs = horocycle_flow(&geodesic_flow(&u, t), 0.25);
        assert!(lhs.distance(&rhs) < 1e-14);
    }

    #[test]
    fn affine_examples() {
        let u = Frame::new(Moebius::new(2.0, 1.0, 1.0, 1.0).unwrap());
        assert_eq!(affine_act(&u, 1.0, 0.0).unwrap(), u);
        assert!(affine_act(&u, 0.5f64.exp(), 0.0).unwrap().distance(&geodesic_flow(&u, 1.0)) < 1e-14);
        assert!(affine_act(&u, 1.0, 0.3).unwrap().distance(&horocycle_flow(&u, 0.3)) < 1e-15);
        let (alpha, beta) = (2.0f64, 3.0);
        let split = horocycle_flow(&geodesic_flow(&u, 2.0 * alpha.ln()), beta / alpha);
        assert!(affine_act(&u, alpha, beta).unwrap().distance(&split) < 1e-13);
        assert_eq!(affine_act(&u, 0.0, 1.0), Err(Error::NonpositiveScale(0.0)));
        assert!(affine_act(&u, -1.0, 1.0).is_err());
    }

    #[test]
    fn busemann_examples() {
        let ln2 = std::f64::consts::LN_2;
        assert_eq!(busemann(BoundaryPoint::Infinity, HPoint::I, HPoint::I), 0.0);
        assert_abs_diff_eq!(busemann(BoundaryPoint::Infinity, HPoint::I, pt(0.0, 2.0)), ln2, epsilon = 1e-15);
        assert_abs_diff_eq!(busemann(BoundaryPoint::Finite(0.0), HPoint::I, pt(0.0, 0.5)), ln2, epsilon = 1e-15);
    }

    #[test]
    fn angle_examples() {
        let v = HPoint::I;
        assert_abs_diff_eq!(hyp_angle(v, pt(0.0, 2.0), pt(0.0, 0.5)).unwrap(), PI, epsilon = 1e-12);
        // Point on the unit semicircle towards +1.
        let q = pt(0.6, 0.8);
        assert_abs_diff_eq!(hyp_angle(v, pt(0.0, 2.0), q).unwrap(), FRAC_PI_2, epsilon = 1e-12);
        assert!(matches!(hyp_angle(v, v, q), Err(Error::Degenerate(_))));
    }

    #[test]
    fn frame_geometry_examples() {
        let g = Frame::IDENTITY.geometry();
        assert_eq!(g.base, HPoint::I);
        assert_abs_diff_eq!(g.direction, FRAC_PI_2, epsilon = 1e-15);
        assert_eq!(g.forward, BoundaryPoint::Infinity);

        let g = geodesic_flow(&Frame::IDENTITY, 1.0).geometry();
        assert_abs_diff_eq!(g.base.im(), std::f64::consts::E, epsilon = 1e-14);
        assert_abs_diff_eq!(g.direction, FRAC_PI_2, epsilon = 1e-15);

        let g = Frame::new(Moebius::unipotent(1.0)).geometry();
        assert_abs_diff_eq!(g.base.re(), 1.0);
        assert_abs_diff_eq!(g.direction, FRAC_PI_2, epsilon = 1e-15);
        assert_eq!(g.forward, BoundaryPoint::Infinity);
    }

    #[test]
    fn frame_at_roundtrip() {
        for dir in [0.0, 0.3, 2.0, 4.5, 6.0] {
            let base = pt(-0.7, 2.3);
            let u = Frame::at(base, dir);
            let geo = u.geometry();
            assert_abs_diff_eq!(geo.base.re(), base.re(), epsilon = 1e-12);
            assert_abs_diff_eq!(geo.base.im(), base.im(), epsilon = 1e-12);
            assert_abs_diff_eq!(geo.direction, dir, epsilon = 1e-12);
            // The forward endpoint lies along the stored direction.
            let t = tangent_toward_boundary(base, geo.forward);
            assert_abs_diff_eq!(t.1.atan2(t.0).rem_euclid(TAU), dir, epsilon = 1e-9);
        }
    }

    #[test]
    fn axis_frame_lies_on_axis() {
        for m in [Moebius::new(2.0, 1.0, 1.0, 1.0).unwrap(), Moebius::diagonal(1.5), Moebius::new(0.5, 0.0, 3.0, 2.0).unwrap()] {
            let ax = axis_data(&m).unwrap();
            let u = axis_frame(&m).unwrap();
            assert!(u.forward().approx_eq(&ax.attracting, 1e-9));
            assert!(u.backward().approx_eq(&ax.repelling, 1e-9));
            // m translates the frame along its own geodesic by the translation length.
            let moved = u.pushed(&m);
            assert!(moved.distance(&geodesic_flow(&u, ax.translation_length)) < 1e-9);
            // Base is the closest axis point to i.
            let d0 = hyp_distance(u.base(), HPoint::I);
            for t in [-0.01, 0.01] {
                assert!(hyp_distance(geodesic_flow(&u, t).base(), HPoint::I) > d0);
            }
        }
    }

    #[test]
    fn disk_roundtrip() {
        let z = pt(0.3, 1.7);
        let w = z.to_disk();
        let back = HPoint::from_disk(w).unwrap();
        assert_abs_diff_eq!(back.re(), z.re(), epsilon = 1e-14);
        assert_abs_diff_eq!(back.im(), z.im(), epsilon = 1e-14);
        assert_abs_diff_eq!(HPoint::I.to_disk().norm(), 0.0);
    }

    #[test]
    fn pow_matches_repeated_product() {
        let m = Moebius::new(2.0, 1.0, 1.0, 1.0).unwrap();
        let mut acc = Moebius::IDENTITY;
        for _ in 0..5 {
            acc = acc * m;
        }
        assert!(m.pow(5).approx_eq(&acc, 1e-9));
        assert!(m.pow(-3).compose(&m.pow(3)).is_identity(1e-9));
        assert!(m.pow(0).is_identity(0.0));
    }
}
