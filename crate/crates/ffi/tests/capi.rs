use std::ffi::{CStr, CString};
use std::ptr;

use horoflow_ffi::*;

const IDENTITY: HfMatrix = HfMatrix { a: 1.0, b: 0.0, c: 0.0, d: 1.0 };

fn group(name: &str) -> *mut HfGroup {
    let name = CString::new(name).unwrap();
    let mut g = ptr::null_mut();
    assert_eq!(unsafe { hf_group_builtin(name.as_ptr(), &mut g) }, HfStatus::Ok);
    assert!(!g.is_null());
    g
}

#[test]
fn flows_from_identity() {
    let mut out = IDENTITY;
    unsafe {
        assert_eq!(hf_geodesic_flow(&IDENTITY, 1.0, &mut out), HfStatus::Ok);
        let mut base = HfComplex { re: 0.0, im: 0.0 };
        hf_moebius_apply(&out, HfComplex { re: 0.0, im: 1.0 }, &mut base);
        assert!((base.im - std::f64::consts::E).abs() < 1e-12 && base.re.abs() < 1e-12);

        assert_eq!(hf_horocycle_flow(&IDENTITY, 1.0, &mut out), HfStatus::Ok);
        assert_eq!(out, HfMatrix { a: 1.0, b: 1.0, c: 0.0, d: 1.0 });

        assert_eq!(hf_affine_act(&IDENTITY, 2.0, 3.0, &mut out), HfStatus::Ok);
        assert_eq!(out, HfMatrix { a: 2.0, b: 3.0, c: 0.0, d: 0.5 });
        assert_eq!(hf_affine_act(&IDENTITY, -1.0, 3.0, &mut out), HfStatus::InvalidArgument);
    }
}

#[test]
fn null_and_invalid_inputs() {
    let mut out = IDENTITY;
    unsafe {
        assert_eq!(hf_moebius_compose(ptr::null(), &IDENTITY, &mut out), HfStatus::NullPointer);
        assert_eq!(hf_moebius_compose(&IDENTITY, &IDENTITY, ptr::null_mut()), HfStatus::NullPointer);
        let bad = HfMatrix { a: 1.0, b: 0.0, c: 0.0, d: -1.0 };
        assert_eq!(hf_moebius_compose(&bad, &IDENTITY, &mut out), HfStatus::Determinant);
        let mut d = 0.0;
        assert_eq!(
            hf_hyp_distance(HfComplex { re: 0.0, im: -1.0 }, HfComplex { re: 0.0, im: 1.0 }, &mut d),
            HfStatus::NotInHalfPlane
        );
        let mut g = ptr::null_mut();
        let name = CString::new("klein-bottle").unwrap();
        assert_eq!(hf_group_builtin(name.as_ptr(), &mut g), HfStatus::InvalidArgument);
        assert!(g.is_null());
        assert_eq!(hf_group_rank(ptr::null()), 0);
        hf_group_free(ptr::null_mut());
        hf_pants_tree_free(ptr::null_mut());
    }
}

#[test]
fn distance_and_busemann() {
    let i = HfComplex { re: 0.0, im: 1.0 };
    let e = HfComplex { re: 0.0, im: std::f64::consts::E };
    let (mut d, mut b) = (0.0, 0.0);
    unsafe {
        assert_eq!(hf_hyp_distance(i, e, &mut d), HfStatus::Ok);
        assert_eq!(hf_busemann(true, 0.0, i, e, &mut b), HfStatus::Ok);
    }
    assert!((d - 1.0).abs() < 1e-12);
    assert!((b - 1.0).abs() < 1e-12);
    unsafe {
        assert_eq!(hf_busemann(false, f64::NAN, i, e, &mut b), HfStatus::InvalidArgument);
    }
}

#[test]
fn group_handles() {
    let g = group("genus2");
    unsafe {
        assert_eq!(hf_group_rank(g), 4);
        let mut m = IDENTITY;
        assert_eq!(hf_group_generator(g, 0, &mut m), HfStatus::Ok);
        assert!((m.a * m.d - m.b * m.c - 1.0).abs() < 1e-9);
        assert_eq!(hf_group_generator(g, 9, &mut m), HfStatus::InvalidArgument);

        let mut n = 0usize;
        assert_eq!(hf_group_count_elements(g, 2, &mut n), HfStatus::Ok);
        assert_eq!(n, 8 + 8 * 7);

        let far = HfMatrix { a: 3.0, b: 1.0, c: 2.0, d: 1.0 };
        let (mut r, mut r2, mut len) = (IDENTITY, IDENTITY, 0usize);
        assert_eq!(hf_group_reduce(g, &far, &mut r, &mut len), HfStatus::Ok);
        assert_eq!(hf_group_reduce(g, &r, &mut r2, ptr::null_mut()), HfStatus::Ok);
        assert_eq!(r, r2);
        hf_group_free(g);
    }
}

#[test]
fn group_from_toml() {
    let text = CString::new("name = \"c\"\ngenerators = [[2.0, 0.0, 0.0, 0.5]]\nnames = [\"g\"]\n").unwrap();
    let bad = CString::new("name = \"c\"\ngenerators = [[2.0, 0.0, 0.0, 1.0]]\nnames = [\"g\"]\n").unwrap();
    let mut g = ptr::null_mut();
    unsafe {
        assert_eq!(hf_group_from_toml(text.as_ptr(), false, &mut g), HfStatus::Ok);
        assert_eq!(hf_group_rank(g), 1);
        hf_group_free(g);
        assert_eq!(hf_group_from_toml(bad.as_ptr(), false, &mut g), HfStatus::Determinant);
        assert_eq!(hf_group_from_toml(bad.as_ptr(), true, &mut g), HfStatus::Ok);
        hf_group_free(g);
        let junk = CString::new("generators = 3").unwrap();
        assert_eq!(hf_group_from_toml(junk.as_ptr(), false, &mut g), HfStatus::Parse);
    }
}

#[test]
fn keylemma_cyclic_has_no_cluster() {
    let g = group("cyclic:2");
    let mut s = std::mem::MaybeUninit::<HfKeyLemmaSummary>::uninit();
    unsafe {
        assert_eq!(hf_keylemma_run(g, ptr::null(), 12, 2, 40.0, 0.0, 0.0, s.as_mut_ptr()), HfStatus::NoCluster);
        assert_eq!(hf_keylemma_run(g, ptr::null(), 12, 2, 40.0, 3.0, 1.0, s.as_mut_ptr()), HfStatus::InvalidBand);
        hf_group_free(g);
    }
}

#[test]
fn hirsch_entry_points() {
    let (mut kind, mut pre, mut per) = (HfLeafKind::CantorTree, 0usize, 0usize);
    unsafe {
        assert_eq!(hf_leaf_type(1, 3, &mut kind, &mut pre, &mut per), HfStatus::Ok);
        assert_eq!((kind, pre, per), (HfLeafKind::GenusOneCantorEnds, 0, 2));
        assert_eq!(hf_leaf_type(1, 2, &mut kind, &mut pre, &mut per), HfStatus::Ok);
        assert_eq!((kind, pre, per), (HfLeafKind::CantorTree, 1, 1));
        assert_eq!(hf_leaf_type(3, 2, &mut kind, &mut pre, &mut per), HfStatus::InvalidArgument);

        let (mut a, mut b) = (HfComplex { re: 0.0, im: 0.0 }, HfComplex { re: 0.0, im: 0.0 });
        assert_eq!(hf_hirsch_glue(HfComplex { re: 1.0, im: 0.0 }, HfComplex { re: 1.0, im: 0.0 }, &mut a, &mut b), HfStatus::Ok);
        assert_eq!((a.re, a.im, b.re, b.im), (0.75, 0.0, 1.0, 0.0));
        assert_eq!(
            hf_hirsch_glue(HfComplex { re: 1.0, im: 0.0 }, HfComplex { re: 0.5, im: 0.0 }, &mut a, &mut b),
            HfStatus::BaseOffCircle
        );

        let mut t = ptr::null_mut();
        assert_eq!(hf_pants_tree_new(1, 3, 6, 1.0, &mut t), HfStatus::Ok);
        assert_eq!(hf_pants_tree_node_count(t), 63);
        let mut handle = false;
        assert_eq!(hf_pants_tree_is_handle(t, 0, &mut handle), HfStatus::Ok);
        assert!(handle);
        let mut crossed = 0usize;
        assert_eq!(hf_pants_tree_check_path(t, ptr::null(), 0, &mut crossed), HfStatus::Ok);
        assert_eq!(crossed, 0);
        let path = [2usize, 5, 11];
        assert_eq!(hf_pants_tree_check_path(t, path.as_ptr(), 3, &mut crossed), HfStatus::Ok);
        assert_eq!(crossed, 3);
        let broken = [1usize, 5];
        assert_eq!(hf_pants_tree_check_path(t, broken.as_ptr(), 2, &mut crossed), HfStatus::NotAPath);
        hf_pants_tree_free(t);
    }
}

#[test]
fn status_messages_and_version() {
    let msg = unsafe { CStr::from_ptr(hf_status_message(HfStatus::NoCluster)) };
    assert_eq!(msg.to_str().unwrap(), "no Busemann cluster");
    let v = unsafe { CStr::from_ptr(hf_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn header_declares_entry_points() {
    let header = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/horoflow.h")).unwrap();
    for name in [
        "hf_moebius_compose",
        "hf_group_builtin",
        "hf_group_free",
        "hf_keylemma_run",
        "hf_pants_tree_new",
        "HF_STATUS_NO_CLUSTER",
        "typedef struct HfGroup HfGroup",
    ] {
        assert!(header.contains(name), "{name} missing from header");
    }
}
