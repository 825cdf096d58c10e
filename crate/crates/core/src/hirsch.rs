//! Combinatorial model of the Hirsch foliation: the doubling map on exact
//! rationals, leaf classification, the pants gluing map and finite pants
//! trees of leaves.

use std::collections::HashMap;
use std::fmt;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance on `|z| = 1` for points of the base circle.
pub const BASE_CIRCLE_TOL: f64 = 1e-9;
/// Largest supported tree depth (node count `2^depth − 1`).
pub const MAX_TREE_DEPTH: usize = 26;

/// Reduced rational angle `p/q ∈ [0, 1)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct AngleParam {
    p: u64,
    q: u64,
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

impl AngleParam {
    pub const ZERO: AngleParam = AngleParam { p: 0, q: 1 };

    /// Reduces `p/q` to lowest terms; requires `0 ≤ p < q` and `q < 2^62`.
    pub fn new(p: u64, q: u64) -> Result<Self> {
        if q == 0 || p >= q || q >= 1 << 62 {
            return Err(Error::InvalidArgument(format!("{p}/{q} is not an angle in [0, 1)")));
        }
        let g = gcd(p, q);
        Ok(AngleParam { p: p / g, q: q / g })
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    pub fn q(&self) -> u64 {
        self.q
    }

    pub fn to_f64(&self) -> f64 {
        self.p as f64 / self.q as f64
    }

    /// `2θ mod 1`.
    pub fn double(&self) -> Self {
        AngleParam::new((2 * self.p) % self.q, self.q).expect("stays in range")
    }

    /// The two preimages under doubling, `θ/2` and `(θ + 1)/2`.
    pub fn halves(&self) -> [Self; 2] {
        let q2 = 2 * self.q;
        [
            AngleParam::new(self.p, q2).expect("in range"),
            AngleParam::new(self.p + self.q, q2).expect("in range"),
        ]
    }

    /// Leading binary digit: `θ ≥ 1/2`.
    pub fn first_digit(&self) -> bool {
        2 * self.p >= self.q
    }

    pub fn parse(s: &str) -> Result<Self> {
        let (p, q) = match s.trim().split_once('/') {
            Some((p, q)) => (p.trim(), q.trim()),
            None => (s.trim(), "1"),
        };
        let parse = |t: &str| t.parse::<u64>().map_err(|_| Error::Parse(format!("bad angle `{s}`")));
        AngleParam::new(parse(p)?, parse(q)?)
    }
}

impl fmt::Display for AngleParam {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.p, self.q)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DoublingOrbit {
    /// Distinct iterates `θ, 2θ, …` up to the first repeat (or the budget).
    pub orbit: Vec<AngleParam>,
    pub preperiod: usize,
    pub period: Option<usize>,
}

/// Iterates doubling at most `max_iter` times and stops at the first repeat.
/// For `θ = p/q` a repeat occurs within `q` steps.
pub fn doubling_orbit(theta: AngleParam, max_iter: usize) -> Result<DoublingOrbit> {
    if max_iter == 0 {
        return Err(Error::InvalidArgument("max_iter must be >= 1".into()));
    }
    let mut seen: HashMap<AngleParam, usize> = HashMap::new();
    let mut orbit = vec![theta];
    seen.insert(theta, 0);
    let mut x = theta;
    for _ in 0..max_iter {
        x = x.double();
        if let Some(&first) = seen.get(&x) {
            let period = orbit.len() - first;
            return Ok(DoublingOrbit { orbit, preperiod: first, period: Some(period) });
        }
        seen.insert(x, orbit.len());
        orbit.push(x);
    }
    Ok(DoublingOrbit { preperiod: orbit.len(), orbit, period: None })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum LeafKind {
    GenusOneCantorEnds,
    CantorTree,
}

impl LeafKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            LeafKind::GenusOneCantorEnds => "GENUS_ONE_CANTOR_ENDS",
            LeafKind::CantorTree => "CANTOR_TREE",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LeafDescriptor {
    pub kind: LeafKind,
    pub period: Option<usize>,
    pub preperiod: usize,
}

pub fn leaf_type(theta: AngleParam) -> LeafDescriptor {
    let orbit = doubling_orbit(theta, theta.q() as usize).expect("q >= 1");
    let kind = if orbit.preperiod == 0 && orbit.period.is_some() {
        LeafKind::GenusOneCantorEnds
    } else {
        LeafKind::CantorTree
    };
    LeafDescriptor { kind, period: orbit.period, preperiod: orbit.preperiod }
}

/// Every reduced `p/q` with `q ≤ q_max`, ordered by `q` then `p`.
pub fn reduced_angles(q_max: u64) -> Vec<AngleParam> {
    let mut out = Vec::new();
    for q in 1..=q_max {
        for p in 0..q {
            if gcd(p, q) == 1 {
                out.push(AngleParam { p, q });
            }
        }
    }
    out
}

/// Leaf types of all reduced angles with denominator at most `q_max`.
pub fn classify_all(q_max: u64) -> Vec<(AngleParam, LeafDescriptor)> {
    reduced_angles(q_max).into_par_iter().map(|t| (t, leaf_type(t))).collect()
}

pub fn classification_csv(rows: &[(AngleParam, LeafDescriptor)]) -> String {
    let mut s = String::from("p,q,preperiod,period,kind\n");
    for (t, d) in rows {
        let period = d.period.map(|p| p.to_string()).unwrap_or_default();
        s.push_str(&format!("{},{},{},{},{}\n", t.p(), t.q(), d.preperiod, period, d.kind.as_str()));
    }
    s
}

/// `h(Z, z) = (Z·z/4 + 1/2, z²)`, sending the outer boundary of the pants
/// over `z` onto its inner circle `|Z − 1/2| = 1/4` over `z²`.
pub fn hirsch_glue(big_z: Complex64, z: Complex64) -> Result<(Complex64, Complex64)> {
    let modulus = z.norm();
    if !((modulus - 1.0).abs() <= BASE_CIRCLE_TOL) {
        return Err(Error::BaseOffCircle { modulus });
    }
    Ok((big_z * z / 4.0 + 0.5, z * z))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PantsNode {
    pub id: usize,
    pub depth: usize,
    pub label: AngleParam,
    pub parent: Option<usize>,
    pub children: Vec<usize>,
    pub on_spine: bool,
    /// Closes a handle: a spine node at depth divisible by the period.
    pub handle: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PantsEdge {
    pub parent: usize,
    pub child: usize,
    pub cuff_length: f64,
    /// The cuff leads into a handle-closing pants.
    pub handle: bool,
}

/// Leaf of the foliation truncated to `depth` levels of pants. Node `i` has
/// children `2i + 1` and `2i + 2`, labelled by the two doubling preimages of
/// its own label.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PantsTree {
    pub theta: AngleParam,
    pub depth: usize,
    pub cuff_length: f64,
    pub period: Option<usize>,
    pub nodes: Vec<PantsNode>,
}

/// Builds the depth-`depth` pants tree of the leaf through `θ`. Children
/// are attached in the order `θ/2, (θ+1)/2`, swapped when the parent label
/// has leading binary digit 1. For periodic `θ` the spine follows the
/// preimage lying on the cycle.
pub fn pants_tree(theta: AngleParam, depth: usize, cuff_length: f64) -> Result<PantsTree> {
    if depth == 0 || depth > MAX_TREE_DEPTH {
        return Err(Error::InvalidArgument(format!("depth {depth} must be in 1..={MAX_TREE_DEPTH}")));
    }
    if !(cuff_length > 0.0) || !cuff_length.is_finite() {
        return Err(Error::InvalidArgument(format!("cuff length {cuff_length} must be positive")));
    }
    let leaf = leaf_type(theta);
    let period = match leaf.kind {
        LeafKind::GenusOneCantorEnds => leaf.period,
        LeafKind::CantorTree => None,
    };
    let count = (1usize << depth) - 1;
    let mut nodes: Vec<PantsNode> = Vec::with_capacity(count);
    nodes.push(PantsNode {
        id: 0,
        depth: 0,
        label: theta,
        parent: None,
        children: Vec::new(),
        on_spine: period.is_some(),
        handle: period.is_some(),
    });
    for id in 0..count {
        let first = 2 * id + 1;
        if first >= count {
            break;
        }
        let (label, d, spine) = (nodes[id].label, nodes[id].depth, nodes[id].on_spine);
        let mut halves = label.halves();
        if label.first_digit() {
            halves.swap(0, 1);
        }
        nodes[id].children = vec![first, first + 1];
        for (k, child_label) in halves.into_iter().enumerate() {
            // On a cycle exactly one preimage is periodic; it continues the spine.
            let child_spine = spine && child_label.double() == label && leaf_type(child_label).preperiod == 0;
            let child_depth = d + 1;
            let handle = child_spine && period.is_some_and(|m| child_depth % m == 0);
            nodes.push(PantsNode {
                id: first + k,
                depth: child_depth,
                label: child_label,
                parent: Some(id),
                children: Vec::new(),
                on_spine: child_spine,
                handle,
            });
        }
    }
    Ok(PantsTree { theta, depth, cuff_length, period, nodes })
}

impl PantsTree {
    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edges(&self) -> Vec<PantsEdge> {
        self.nodes
            .iter()
            .filter_map(|n| {
                n.parent.map(|p| PantsEdge { parent: p, child: n.id, cuff_length: self.cuff_length, handle: n.handle })
            })
            .collect()
    }

    /// Node ids along the periodic spine, root first; empty for Cantor trees.
    pub fn spine(&self) -> Vec<usize> {
        let mut out = Vec::new();
        if !self.nodes[0].on_spine {
            return out;
        }
        let mut id = 0;
        loop {
            out.push(id);
            match self.nodes[id].children.iter().find(|&&c| self.nodes[c].on_spine) {
                Some(&c) => id = c,
                None => return out,
            }
        }
    }

    /// One line per edge: `parent_id child_id cuff_length handle_flag`.
    pub fn to_edge_list(&self) -> String {
        let mut s = String::new();
        for e in self.edges() {
            s.push_str(&format!("{} {} {} {}\n", e.parent, e.child, e.cuff_length, u8::from(e.handle)));
        }
        s
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TamenessCheck {
    pub cuffs_crossed: usize,
    pub all_in_band: bool,
    /// Crossed cuffs leading into handle-closing pants.
    pub handle_cuffs: usize,
}

/// Counts the cuffs a downward path from the root crosses. The path lists
/// node ids after the root; a leading root id is accepted and ignored.
pub fn coarse_tameness_graph_check(tree: &PantsTree, path: &[usize]) -> Result<TamenessCheck> {
    let steps = match path.first() {
        Some(0) => &path[1..],
        _ => path,
    };
    let mut at = 0usize;
    let mut handle_cuffs = 0;
    for &next in steps {
        let node = tree.nodes.get(next).ok_or_else(|| Error::NotAPath(format!("unknown node {next}")))?;
        if node.parent != Some(at) {
            return Err(Error::NotAPath(format!("{next} is not a child of {at}")));
        }
        handle_cuffs += usize::from(node.handle);
        at = next;
    }
    let cuffs_crossed = steps.len();
    debug_assert_eq!(cuffs_crossed, tree.nodes[at].depth);
    Ok(TamenessCheck { cuffs_crossed, all_in_band: tree.cuff_length.is_finite(), handle_cuffs })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn a(p: u64, q: u64) -> AngleParam {
        AngleParam::new(p, q).unwrap()
    }

    #[test]
    fn orbit_examples() {
        let o = doubling_orbit(AngleParam::ZERO, 10).unwrap();
        assert_eq!((o.preperiod, o.period), (0, Some(1)));
        let o = doubling_orbit(a(1, 3), 10).unwrap();
        assert_eq!(o.orbit, vec![a(1, 3), a(2, 3)]);
        assert_eq!((o.preperiod, o.period), (0, Some(2)));
        let o = doubling_orbit(a(1, 2), 10).unwrap();
        assert_eq!(o.orbit, vec![a(1, 2), AngleParam::ZERO]);
        assert_eq!((o.preperiod, o.period), (1, Some(1)));
        let o = doubling_orbit(a(1, 7), 1).unwrap();
        assert_eq!(o.period, None);
        assert!(doubling_orbit(a(1, 7), 0).is_err());
    }

    #[test]
    fn leaf_examples() {
        assert_eq!(leaf_type(AngleParam::ZERO).kind, LeafKind::GenusOneCantorEnds);
        assert_eq!(leaf_type(a(1, 3)).kind, LeafKind::GenusOneCantorEnds);
        assert_eq!(leaf_type(a(1, 2)).kind, LeafKind::CantorTree);
        assert_eq!(leaf_type(a(1, 6)).kind, LeafKind::CantorTree);
    }

    #[test]
    fn angle_parsing_and_reduction() {
        assert_eq!(AngleParam::parse("2/6").unwrap(), a(1, 3));
        assert_eq!(AngleParam::parse("0").unwrap(), AngleParam::ZERO);
        assert!(AngleParam::parse("3/2").is_err());
        assert!(AngleParam::parse("x").is_err());
        assert_eq!(reduced_angles(4).len(), 1 + 1 + 2 + 2);
    }

    #[test]
    fn glue_examples() {
        let c = |re, im| Complex64::new(re, im);
        assert_eq!(hirsch_glue(c(1.0, 0.0), c(1.0, 0.0)).unwrap(), (c(0.75, 0.0), c(1.0, 0.0)));
        assert_eq!(hirsch_glue(c(-1.0, 0.0), c(1.0, 0.0)).unwrap(), (c(0.25, 0.0), c(1.0, 0.0)));
        let (z2, w) = hirsch_glue(c(0.0, 1.0), c(0.0, 1.0)).unwrap();
        assert!((z2 - c(0.25, 0.0)).norm() < 1e-15 && (w - c(-1.0, 0.0)).norm() < 1e-15);
        assert!(matches!(hirsch_glue(c(0.0, 0.0), c(2.0, 0.0)), Err(Error::BaseOffCircle { .. })));
    }

    #[test]
    fn tree_examples() {
        let t = pants_tree(AngleParam::ZERO, 3, 1.0).unwrap();
        assert_eq!(t.node_count(), 7);
        assert_eq!(t.spine(), vec![0, 1, 3]);
        assert!(t.spine().iter().all(|&i| t.nodes[i].handle));
        let t = pants_tree(a(1, 2), 3, 1.0).unwrap();
        assert_eq!(t.node_count(), 7);
        assert!(t.nodes.iter().all(|n| !n.handle));
        assert!(pants_tree(AngleParam::ZERO, 0, 1.0).is_err());
        assert!(pants_tree(AngleParam::ZERO, 2, 0.0).is_err());
    }

    #[test]
    fn child_swap_on_leading_one() {
        let t = pants_tree(a(2, 3), 2, 1.0).unwrap();
        assert_eq!(t.nodes[1].label, a(5, 6));
        assert_eq!(t.nodes[2].label, a(1, 3));
        let t = pants_tree(a(1, 3), 2, 1.0).unwrap();
        assert_eq!(t.nodes[1].label, a(1, 6));
        assert_eq!(t.nodes[2].label, a(2, 3));
    }

    #[test]
    fn spine_of_one_third() {
        let t = pants_tree(a(1, 3), 6, 2.0).unwrap();
        let spine = t.spine();
        assert_eq!(spine.len(), 6);
        for (d, &id) in spine.iter().enumerate() {
            assert_eq!(t.nodes[id].handle, d % 2 == 0);
        }
        let check = coarse_tameness_graph_check(&t, &spine).unwrap();
        assert_eq!(check.cuffs_crossed, 5);
        assert_eq!(check.handle_cuffs, 2);
    }

    #[test]
    fn tameness_paths() {
        let t = pants_tree(a(1, 2), 6, 1.5).unwrap();
        assert_eq!(coarse_tameness_graph_check(&t, &[]).unwrap().cuffs_crossed, 0);
        let path = [2, 5, 11, 24, 49];
        let c = coarse_tameness_graph_check(&t, &path).unwrap();
        assert_eq!(c.cuffs_crossed, 5);
        assert!(c.all_in_band);
        assert!(matches!(coarse_tameness_graph_check(&t, &[1, 5]), Err(Error::NotAPath(_))));
        assert!(matches!(coarse_tameness_graph_check(&t, &[999]), Err(Error::NotAPath(_))));
    }

    #[test]
    fn edge_list_format() {
        let t = pants_tree(AngleParam::ZERO, 2, 1.25).unwrap();
        assert_eq!(t.to_edge_list(), "0 1 1.25 1\n0 2 1.25 0\n");
    }
}
