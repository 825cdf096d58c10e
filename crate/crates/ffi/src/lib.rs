//! C ABI over the `horoflow` library.
//!
//! Every fallible function returns an [`HfStatus`] and writes its result
//! through an out-pointer. Groups and pants trees are opaque handles that
//! the caller releases with the matching `*_free` function. Panics never
//! cross the boundary; they surface as `HF_STATUS_PANIC`.

use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};

use horoflow::fuchsian::{
    cyclic_group, dirichlet_reduce, enumerate_elements, genus2_kernel_cover, genus2_octagon_group,
    sanov_free_group, GroupPresentation, GroupSpec,
};
use horoflow::hirsch::{self, AngleParam, LeafKind, PantsTree};
use horoflow::hyperbolic::{self, axis_frame, BoundaryPoint, Frame, HPoint, Moebius};
use horoflow::keylemma::{run_key_lemma, KeyLemmaConfig};
use horoflow::Error;
use num_complex::Complex64;

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum HfStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    NotInHalfPlane = 3,
    Determinant = 4,
    NotHyperbolic = 5,
    NoConvergence = 6,
    BudgetExceeded = 7,
    InvalidBand = 8,
    BaseOffCircle = 9,
    NotAPath = 10,
    NoCluster = 11,
    EscapeFail = 12,
    Parse = 13,
    Numeric = 14,
    Panic = 15,
}

impl From<&Error> for HfStatus {
    fn from(e: &Error) -> Self {
        match e {
            Error::NotInHalfPlane(_) => HfStatus::NotInHalfPlane,
            Error::Determinant { .. } => HfStatus::Determinant,
            Error::NotHyperbolic => HfStatus::NotHyperbolic,
            Error::NoConvergence { .. } => HfStatus::NoConvergence,
            Error::BudgetExceeded { .. } => HfStatus::BudgetExceeded,
            Error::InvalidBand { .. } => HfStatus::InvalidBand,
            Error::BaseOffCircle { .. } => HfStatus::BaseOffCircle,
            Error::NotAPath(_) => HfStatus::NotAPath,
            Error::NoCluster { .. } => HfStatus::NoCluster,
            Error::EscapeFail { .. } => HfStatus::EscapeFail,
            Error::Parse(_) | Error::Io(_) => HfStatus::Parse,
            Error::InvalidArgument(_) | Error::NonpositiveScale(_) => HfStatus::InvalidArgument,
            Error::NonFinite | Error::Degenerate(_) | Error::DegenerateXi => HfStatus::Numeric,
        }
    }
}

/// Row-major 2×2 matrix `[[a, b], [c, d]]`.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HfMatrix {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HfComplex {
    pub re: f64,
    pub im: f64,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum HfLeafKind {
    GenusOneCantorEnds = 0,
    CantorTree = 1,
}

/// Outcome of a Key Lemma run.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HfKeyLemmaSummary {
    pub crossings: usize,
    pub k: u32,
    pub band_a: f64,
    pub band_b: f64,
    pub t0: f64,
    pub cluster_size: usize,
    pub witnesses: usize,
    /// Negative when there are no witnesses.
    pub final_frame_error: f64,
    pub all_bounds_ok: bool,
    pub converged: bool,
}

/// Opaque group handle.
pub struct HfGroup {
    inner: GroupPresentation,
}

/// Opaque pants-tree handle.
pub struct HfPantsTree {
    inner: PantsTree,
}

fn guard(f: impl FnOnce() -> Result<(), HfStatus>) -> HfStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => HfStatus::Ok,
        Ok(Err(s)) => s,
        Err(_) => HfStatus::Panic,
    }
}

fn lib<T>(r: horoflow::Result<T>) -> Result<T, HfStatus> {
    r.map_err(|e| HfStatus::from(&e))
}

unsafe fn read<'a, T>(p: *const T) -> Result<&'a T, HfStatus> {
    p.as_ref().ok_or(HfStatus::NullPointer)
}

unsafe fn write<T>(p: *mut T, v: T) -> Result<(), HfStatus> {
    if p.is_null() {
        return Err(HfStatus::NullPointer);
    }
    p.write(v);
    Ok(())
}

fn to_moebius(m: &HfMatrix) -> Result<Moebius, HfStatus> {
    lib(Moebius::new(m.a, m.b, m.c, m.d))
}

fn from_moebius(m: &Moebius) -> HfMatrix {
    let [a, b, c, d] = m.entries();
    HfMatrix { a, b, c, d }
}

fn to_point(z: HfComplex) -> Result<HPoint, HfStatus> {
    lib(HPoint::new(z.re, z.im))
}

fn from_point(z: HPoint) -> HfComplex {
    HfComplex { re: z.re(), im: z.im() }
}

/// Static, NUL-terminated description of a status code.
#[no_mangle]
pub extern "C" fn hf_status_message(status: HfStatus) -> *const c_char {
    let s: &'static [u8] = match status {
        HfStatus::Ok => b"ok\0",
        HfStatus::NullPointer => b"null pointer argument\0",
        HfStatus::InvalidArgument => b"invalid argument\0",
        HfStatus::NotInHalfPlane => b"point not in the upper half-plane\0",
        HfStatus::Determinant => b"determinant is not 1\0",
        HfStatus::NotHyperbolic => b"element is not hyperbolic\0",
        HfStatus::NoConvergence => b"reduction did not converge\0",
        HfStatus::BudgetExceeded => b"element budget exceeded\0",
        HfStatus::InvalidBand => b"invalid length band\0",
        HfStatus::BaseOffCircle => b"base point off the unit circle\0",
        HfStatus::NotAPath => b"not a root path\0",
        HfStatus::NoCluster => b"no Busemann cluster\0",
        HfStatus::EscapeFail => b"no escaping crossing\0",
        HfStatus::Parse => b"parse error\0",
        HfStatus::Numeric => b"numeric failure\0",
        HfStatus::Panic => b"internal panic\0",
    };
    s.as_ptr().cast()
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn hf_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// `out = lhs · rhs`, renormalized to determinant 1.
///
/// # Safety
/// Pointers must be null or valid for the access they are used for.
#[no_mangle]
pub unsafe extern "C" fn hf_moebius_compose(lhs: *const HfMatrix, rhs: *const HfMatrix, out: *mut HfMatrix) -> HfStatus {
    guard(|| {
        let (l, r) = (to_moebius(read(lhs)?)?, to_moebius(read(rhs)?)?);
        write(out, from_moebius(&l.compose(&r)))
    })
}

/// Applies the Möbius map to a point of the upper half-plane.
///
/// # Safety
/// Pointers must be null or valid for the access they are used for.
#[no_mangle]
pub unsafe extern "C" fn hf_moebius_apply(m: *const HfMatrix, z: HfComplex, out: *mut HfComplex) -> HfStatus {
    guard(|| {
        let m = to_moebius(read(m)?)?;
        write(out, from_point(m.apply(to_point(z)?)))
    })
}

/// Hyperbolic distance between two points of the upper half-plane.
///
/// # Safety
/// `out` must be null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn hf_hyp_distance(p: HfComplex, q: HfComplex, out: *mut f64) -> HfStatus {
    guard(|| write(out, hyperbolic::hyp_distance(to_point(p)?, to_point(q)?)))
}

/// Busemann function `B_ξ(x, y)`; `xi_at_infinity` selects `ξ = ∞`,
/// otherwise `ξ = xi`.
///
/// # Safety
/// `out` must be null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn hf_busemann(
    xi_at_infinity: bool,
    xi: f64,
    x: HfComplex,
    y: HfComplex,
    out: *mut f64,
) -> HfStatus {
    guard(|| {
        let xi = if xi_at_infinity {
            BoundaryPoint::Infinity
        } else if xi.is_finite() {
            BoundaryPoint::Finite(xi)
        } else {
            return Err(HfStatus::InvalidArgument);
        };
        write(out, hyperbolic::busemann(xi, to_point(x)?, to_point(y)?))
    })
}

/// Frame `u·a_t` (geodesic flow).
///
/// # Safety
/// Pointers must be null or valid for the access they are used for.
#[no_mangle]
pub unsafe extern "C" fn hf_geodesic_flow(u: *const HfMatrix, t: f64, out: *mut HfMatrix) -> HfStatus {
    guard(|| {
        let f = Frame::new(to_moebius(read(u)?)?);
        write(out, from_moebius(hyperbolic::geodesic_flow(&f, t).matrix()))
    })
}

/// Frame `u·u_s` (horocycle flow).
///
/// # Safety
/// Pointers must be null or valid for the access they are used for.
#[no_mangle]
pub unsafe extern "C" fn hf_horocycle_flow(u: *const HfMatrix, s: f64, out: *mut HfMatrix) -> HfStatus {
    guard(|| {
        let f = Frame::new(to_moebius(read(u)?)?);
        write(out, from_moebius(hyperbolic::horocycle_flow(&f, s).matrix()))
    })
}

/// Frame `u·[[α, β], [0, 1/α]]` (affine action), `α > 0`.
///
/// # Safety
/// Pointers must be null or valid for the access they are used for.
#[no_mangle]
pub unsafe extern "C" fn hf_affine_act(u: *const HfMatrix, alpha: f64, beta: f64, out: *mut HfMatrix) -> HfStatus {
    guard(|| {
        let f = Frame::new(to_moebius(read(u)?)?);
        write(out, from_moebius(lib(hyperbolic::affine_act(&f, alpha, beta))?.matrix()))
    })
}

unsafe fn c_str<'a>(s: *const c_char) -> Result<&'a str, HfStatus> {
    if s.is_null() {
        return Err(HfStatus::NullPointer);
    }
    CStr::from_ptr(s).to_str().map_err(|_| HfStatus::Parse)
}

fn builtin(name: &str) -> Result<GroupPresentation, HfStatus> {
    match name {
        "genus2" => Ok(genus2_octagon_group()),
        "genus2-kernel" => Ok(genus2_kernel_cover()),
        "sanov" => Ok(sanov_free_group()),
        "cyclic" => lib(cyclic_group(2.0)),
        other => {
            let len = other.strip_prefix("cyclic:").ok_or(HfStatus::InvalidArgument)?;
            lib(cyclic_group(len.parse().map_err(|_| HfStatus::Parse)?))
        }
    }
}

fn boxed_group(g: GroupPresentation, out: *mut *mut HfGroup) -> Result<(), HfStatus> {
    let handle = Box::into_raw(Box::new(HfGroup { inner: g }));
    // SAFETY: checked non-null by the callers before building the group.
    unsafe { out.write(handle) };
    Ok(())
}

/// Built-in group by name: `genus2`, `genus2-kernel`, `sanov`, `cyclic`,
/// `cyclic:<length>`. Release with [`hf_group_free`].
///
/// # Safety
/// `name` must be a NUL-terminated string; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn hf_group_builtin(name: *const c_char, out: *mut *mut HfGroup) -> HfStatus {
    guard(|| {
        if out.is_null() {
            return Err(HfStatus::NullPointer);
        }
        boxed_group(builtin(c_str(name)?)?, out)
    })
}

/// Group from a TOML group spec.
///
/// # Safety
/// `toml` must be a NUL-terminated string; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn hf_group_from_toml(toml: *const c_char, normalize_det: bool, out: *mut *mut HfGroup) -> HfStatus {
    guard(|| {
        if out.is_null() {
            return Err(HfStatus::NullPointer);
        }
        let spec = lib(GroupSpec::parse(c_str(toml)?))?;
        boxed_group(lib(spec.build(normalize_det))?, out)
    })
}

/// Releases a group handle; null is ignored.
///
/// # Safety
/// `g` must be null or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn hf_group_free(g: *mut HfGroup) {
    if !g.is_null() {
        drop(Box::from_raw(g));
    }
}

/// Number of generators, 0 for a null handle.
///
/// # Safety
/// `g` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn hf_group_rank(g: *const HfGroup) -> usize {
    g.as_ref().map_or(0, |g| g.inner.rank())
}

/// Generator `index` (0-based).
///
/// # Safety
/// `g` must be null or a live handle; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn hf_group_generator(g: *const HfGroup, index: usize, out: *mut HfMatrix) -> HfStatus {
    guard(|| {
        let g = read(g)?;
        let m = g.inner.generators().get(index).ok_or(HfStatus::InvalidArgument)?;
        write(out, from_moebius(m))
    })
}

/// Number of distinct elements of word length `1..=max_word_length`.
///
/// # Safety
/// `g` must be null or a live handle; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn hf_group_count_elements(g: *const HfGroup, max_word_length: usize, out: *mut usize) -> HfStatus {
    guard(|| {
        let g = read(g)?;
        write(out, lib(enumerate_elements(&g.inner, max_word_length))?.len())
    })
}

/// Dirichlet-reduces a frame towards `i`; writes the reduced frame and,
/// when `word_len` is non-null, the length of the applied word.
///
/// # Safety
/// `g` and `u` must be null or valid; `out` must be valid for writes;
/// `word_len` may be null.
#[no_mangle]
pub unsafe extern "C" fn hf_group_reduce(
    g: *const HfGroup,
    u: *const HfMatrix,
    out: *mut HfMatrix,
    word_len: *mut usize,
) -> HfStatus {
    guard(|| {
        let g = read(g)?;
        let u = Frame::new(to_moebius(read(u)?)?);
        let (f, e) = lib(dirichlet_reduce(&g.inner, &u))?;
        write(out, from_moebius(f.matrix()))?;
        if !word_len.is_null() {
            word_len.write(e.word.len());
        }
        Ok(())
    })
}

/// Runs the Key Lemma pipeline. A null `frame` uses the frame on the axis
/// of the first generator; `band_a <= 0` selects the band `[a0, 4·a0]`.
///
/// # Safety
/// `g` must be a live handle; `frame` may be null; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn hf_keylemma_run(
    g: *const HfGroup,
    frame: *const HfMatrix,
    max_word_length: usize,
    core_len: usize,
    horizon: f64,
    band_a: f64,
    band_b: f64,
    out: *mut HfKeyLemmaSummary,
) -> HfStatus {
    guard(|| {
        let g = read(g)?;
        let u = match frame.as_ref() {
            Some(m) => Frame::new(to_moebius(m)?),
            None => {
                let first = g.inner.generators().first().ok_or(HfStatus::InvalidArgument)?;
                lib(axis_frame(first))?
            }
        };
        let cfg = KeyLemmaConfig {
            core_len,
            max_word_length,
            horizon,
            band: (band_a > 0.0).then_some((band_a, band_b)),
            ..KeyLemmaConfig::default()
        };
        let run = lib(run_key_lemma(&g.inner, &u, &cfg))?;
        write(
            out,
            HfKeyLemmaSummary {
                crossings: run.crossings.len(),
                k: run.k,
                band_a: run.band.0,
                band_b: run.band.1,
                t0: run.t0,
                cluster_size: run.cluster.len(),
                witnesses: run.witnesses.len(),
                final_frame_error: run.final_frame_error().unwrap_or(-1.0),
                all_bounds_ok: run.all_bounds_ok(),
                converged: run.converged(),
            },
        )
    })
}

/// Leaf type of the Hirsch leaf through `p/q`; `period` is 0 when absent.
///
/// # Safety
/// Out-pointers must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn hf_leaf_type(
    p: u64,
    q: u64,
    kind: *mut HfLeafKind,
    preperiod: *mut usize,
    period: *mut usize,
) -> HfStatus {
    guard(|| {
        if kind.is_null() || preperiod.is_null() || period.is_null() {
            return Err(HfStatus::NullPointer);
        }
        let d = hirsch::leaf_type(lib(AngleParam::new(p, q))?);
        kind.write(match d.kind {
            LeafKind::GenusOneCantorEnds => HfLeafKind::GenusOneCantorEnds,
            LeafKind::CantorTree => HfLeafKind::CantorTree,
        });
        preperiod.write(d.preperiod);
        period.write(d.period.unwrap_or(0));
        Ok(())
    })
}

/// The gluing map `(Z, z) ↦ (Z·z/4 + 1/2, z²)`; `z` must lie on the unit circle.
///
/// # Safety
/// Out-pointers must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn hf_hirsch_glue(big_z: HfComplex, z: HfComplex, out_big_z: *mut HfComplex, out_z: *mut HfComplex) -> HfStatus {
    guard(|| {
        if out_big_z.is_null() || out_z.is_null() {
            return Err(HfStatus::NullPointer);
        }
        let (a, b) = lib(hirsch::hirsch_glue(Complex64::new(big_z.re, big_z.im), Complex64::new(z.re, z.im)))?;
        out_big_z.write(HfComplex { re: a.re, im: a.im });
        out_z.write(HfComplex { re: b.re, im: b.im });
        Ok(())
    })
}

/// Pants tree of the leaf through `p/q`. Release with [`hf_pants_tree_free`].
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn hf_pants_tree_new(p: u64, q: u64, depth: usize, cuff_length: f64, out: *mut *mut HfPantsTree) -> HfStatus {
    guard(|| {
        if out.is_null() {
            return Err(HfStatus::NullPointer);
        }
        let tree = lib(hirsch::pants_tree(lib(AngleParam::new(p, q))?, depth, cuff_length))?;
        out.write(Box::into_raw(Box::new(HfPantsTree { inner: tree })));
        Ok(())
    })
}

/// Releases a pants tree; null is ignored.
///
/// # Safety
/// `t` must be null or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn hf_pants_tree_free(t: *mut HfPantsTree) {
    if !t.is_null() {
        drop(Box::from_raw(t));
    }
}

/// Node count, 0 for a null handle.
///
/// # Safety
/// `t` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn hf_pants_tree_node_count(t: *const HfPantsTree) -> usize {
    t.as_ref().map_or(0, |t| t.inner.node_count())
}

/// Whether node `id` closes a handle.
///
/// # Safety
/// `t` must be null or a live handle; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn hf_pants_tree_is_handle(t: *const HfPantsTree, id: usize, out: *mut bool) -> HfStatus {
    guard(|| {
        let t = read(t)?;
        let node = t.inner.nodes.get(id).ok_or(HfStatus::InvalidArgument)?;
        write(out, node.handle)
    })
}

/// Cuffs crossed along the path `ids[0..len]` from the root.
///
/// # Safety
/// `t` must be a live handle; `ids` must point to `len` values (may be
/// null when `len` is 0); `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn hf_pants_tree_check_path(t: *const HfPantsTree, ids: *const usize, len: usize, out: *mut usize) -> HfStatus {
    guard(|| {
        let t = read(t)?;
        let path: &[usize] = if len == 0 {
            &[]
        } else if ids.is_null() {
            return Err(HfStatus::NullPointer);
        } else {
            std::slice::from_raw_parts(ids, len)
        };
        write(out, lib(hirsch::coarse_tameness_graph_check(&t.inner, path))?.cuffs_crossed)
    })
}
