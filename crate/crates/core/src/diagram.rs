//! Tree-diagram arithmetic for `F_p`.
//!
//! A tree is stored as its preorder node sequence (`Caret` for an internal
//! node with exactly `p` children, `Leaf` otherwise). A diagram is a pair of
//! trees with the same number of leaves, `top` being `T_+` and `bottom`
//! `T_-`; leaf `k` of `top` is matched with leaf `k` of `bottom`.
//!
//! Products use the convention `(f . g)(t) = g(f(t))`: `a * b` glues the
//! bottom of `a` onto the top of `b`.

use std::fmt;
use std::ops::Range;

use serde::Serialize;
use thiserror::Error;

use crate::word::{Index, Word};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[repr(u8)]
pub enum Node {
    Leaf,
    Caret,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DiagramError {
    #[error("expected a diagram of F_{expected}, got F_{got}")]
    WrongArity { expected: u32, got: u32 },
    #[error("trees have {top} and {bottom} leaves")]
    LeafMismatch { top: usize, bottom: usize },
    #[error("malformed tree text at byte {0}")]
    Syntax(usize),
    #[error("p must be at least 2, got {0}")]
    BadParameter(u32),
}

/// A planar rooted tree in which every internal node has `arity` children.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PAryTree {
    arity: u32,
    nodes: Vec<Node>,
}

impl PAryTree {
    pub fn leaf(arity: u32) -> Self {
        PAryTree { arity, nodes: vec![Node::Leaf] }
    }

    /// A single caret.
    pub fn caret(arity: u32) -> Self {
        let mut nodes = vec![Node::Caret];
        nodes.extend(std::iter::repeat_n(Node::Leaf, arity as usize));
        PAryTree { arity, nodes }
    }

    /// Root caret over the given subtrees.
    pub fn join(children: &[PAryTree]) -> Self {
        let arity = children[0].arity;
        assert_eq!(children.len(), arity as usize, "a caret needs exactly p children");
        let mut nodes = vec![Node::Caret];
        for child in children {
            assert_eq!(child.arity, arity);
            nodes.extend_from_slice(&child.nodes);
        }
        PAryTree { arity, nodes }
    }

    pub fn arity(&self) -> u32 {
        self.arity
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn caret_count(&self) -> usize {
        self.nodes.iter().filter(|&&n| n == Node::Caret).count()
    }

    pub fn leaf_count(&self) -> usize {
        self.nodes.len() - self.caret_count()
    }

    pub fn is_leaf(&self) -> bool {
        self.nodes.len() == 1
    }

    fn p(&self) -> usize {
        self.arity as usize
    }

    /// Depth of the leftmost leaf.
    pub fn leftmost_depth(&self) -> usize {
        self.nodes.iter().take_while(|&&n| n == Node::Caret).count()
    }

    /// Depth of the rightmost leaf.
    pub fn rightmost_depth(&self) -> usize {
        let ends = self.annotate().end;
        let mut i = 0;
        let mut depth = 0;
        while self.nodes[i] == Node::Caret {
            let mut child = i + 1;
            for _ in 1..self.p() {
                child = ends[child];
            }
            i = child;
            depth += 1;
        }
        depth
    }

    /// For each leaf (left to right), the sum of child indices on its path
    /// from the root. For binary trees this counts right edges.
    pub fn leaf_digit_sums(&self) -> Vec<u64> {
        let mut out = Vec::with_capacity(self.leaf_count());
        // stack of (digit sum at this node, next child index to visit)
        let mut stack: Vec<(u64, u64)> = Vec::new();
        for &node in &self.nodes {
            let sum = match stack.last_mut() {
                Some((parent_sum, next)) => {
                    let s = *parent_sum + *next;
                    *next += 1;
                    s
                }
                None => 0,
            };
            match node {
                Node::Leaf => out.push(sum),
                Node::Caret => stack.push((sum, 0)),
            }
            while let Some(&(_, next)) = stack.last() {
                if next == self.arity as u64 {
                    stack.pop();
                } else {
                    break;
                }
            }
        }
        out
    }

    pub(crate) fn annotate(&self) -> Annotation {
        let n = self.nodes.len();
        let mut ann = Annotation { span: vec![(0, 0); n], end: vec![0; n] };
        let mut leaf = 0u32;
        // open carets: (position, first leaf, children still to close)
        let mut open: Vec<(usize, u32, usize)> = Vec::new();
        for (i, &node) in self.nodes.iter().enumerate() {
            if node == Node::Caret {
                open.push((i, leaf, self.p()));
                continue;
            }
            ann.span[i] = (leaf, leaf);
            ann.end[i] = i + 1;
            leaf += 1;
            while let Some(top) = open.last_mut() {
                top.2 -= 1;
                if top.2 > 0 {
                    break;
                }
                let (j, first, _) = open.pop().unwrap();
                ann.span[j] = (first, leaf - 1);
                ann.end[j] = i + 1;
            }
        }
        ann
    }

    pub fn parse(text: &str, arity: u32) -> Result<Self, DiagramError> {
        let bytes = text.as_bytes();
        let mut nodes = Vec::new();
        let end = parse_subtree(bytes, 0, arity as usize, &mut nodes)?;
        if end != bytes.len() {
            return Err(DiagramError::Syntax(end));
        }
        Ok(PAryTree { arity, nodes })
    }
}

pub(crate) struct Annotation {
    /// Inclusive range of leaf indices under each node.
    pub(crate) span: Vec<(u32, u32)>,
    /// One past the last preorder position of each node's subtree.
    pub(crate) end: Vec<usize>,
}

fn parse_subtree(bytes: &[u8], at: usize, p: usize, nodes: &mut Vec<Node>) -> Result<usize, DiagramError> {
    match bytes.get(at) {
        Some(b'*') => {
            nodes.push(Node::Leaf);
            Ok(at + 1)
        }
        Some(b'(') => {
            nodes.push(Node::Caret);
            let mut pos = at + 1;
            for _ in 0..p {
                pos = parse_subtree(bytes, pos, p, nodes)?;
            }
            if bytes.get(pos) != Some(&b')') {
                return Err(DiagramError::Syntax(pos));
            }
            Ok(pos + 1)
        }
        _ => Err(DiagramError::Syntax(at)),
    }
}

impl fmt::Display for PAryTree {
    /// Preorder text: `(` children `)` for a caret, `*` for a leaf.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut out = String::with_capacity(self.nodes.len() * 2);
        let mut open: Vec<usize> = Vec::new();
        for &node in &self.nodes {
            match node {
                Node::Caret => {
                    out.push('(');
                    open.push(self.p());
                }
                Node::Leaf => {
                    out.push('*');
                    // close every caret whose last child just finished
                    while let Some(remaining) = open.last_mut() {
                        *remaining -= 1;
                        if *remaining > 0 {
                            break;
                        }
                        open.pop();
                        out.push(')');
                    }
                }
            }
        }
        f.write_str(&out)
    }
}

/// An element of `F_p` as a pair of `p`-ary trees.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TreeDiagram {
    top: PAryTree,
    bottom: PAryTree,
}

/// `(log_2 f'(0), log_2 f'(1))` for an element of `F = F_2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize)]
pub struct AbelianImage {
    pub left: i64,
    pub right: i64,
}

impl std::ops::Add for AbelianImage {
    type Output = AbelianImage;

    fn add(self, rhs: Self) -> Self {
        AbelianImage { left: self.left + rhs.left, right: self.right + rhs.right }
    }
}

impl TreeDiagram {
    pub fn new(top: PAryTree, bottom: PAryTree) -> Result<Self, DiagramError> {
        if top.arity != bottom.arity {
            return Err(DiagramError::WrongArity { expected: top.arity, got: bottom.arity });
        }
        if top.arity < 2 {
            return Err(DiagramError::BadParameter(top.arity));
        }
        let (t, b) = (top.leaf_count(), bottom.leaf_count());
        if t != b {
            return Err(DiagramError::LeafMismatch { top: t, bottom: b });
        }
        Ok(TreeDiagram { top, bottom })
    }

    pub fn identity(p: u32) -> Self {
        assert!(p >= 2);
        TreeDiagram { top: PAryTree::leaf(p), bottom: PAryTree::leaf(p) }
    }

    /// Reduced diagram of the generator `x_i`.
    ///
    /// `x_0, ..., x_{p-2}` are single-level: the top tree has a caret under
    /// root child `i`, the bottom tree under the last root child. Larger
    /// indices are right shifts: `x_{i+p-1} = shift_right(x_i)`.
    pub fn generator(i: Index, p: u32) -> Self {
        assert!(p >= 2);
        let pu = p as usize;
        let shifts = (i / Index::from(p - 1)) as usize;
        let r = (i % Index::from(p - 1)) as usize;
        let prefix_len = shifts * pu;
        let mut top = Vec::with_capacity(prefix_len + 2 * pu + 1);
        for _ in 0..shifts {
            top.push(Node::Caret);
            top.extend(std::iter::repeat_n(Node::Leaf, pu - 1));
        }
        let mut bottom = top.clone();
        top.push(Node::Caret);
        for child in 0..pu {
            if child == r {
                top.push(Node::Caret);
                top.extend(std::iter::repeat_n(Node::Leaf, pu));
            } else {
                top.push(Node::Leaf);
            }
        }
        bottom.push(Node::Caret);
        bottom.extend(std::iter::repeat_n(Node::Leaf, pu - 1));
        bottom.push(Node::Caret);
        bottom.extend(std::iter::repeat_n(Node::Leaf, pu));
        TreeDiagram { top: PAryTree { arity: p, nodes: top }, bottom: PAryTree { arity: p, nodes: bottom } }
    }

    pub fn p(&self) -> u32 {
        self.top.arity
    }

    pub fn top(&self) -> &PAryTree {
        &self.top
    }

    pub fn bottom(&self) -> &PAryTree {
        &self.bottom
    }

    pub fn leaf_count(&self) -> usize {
        self.top.leaf_count()
    }

    pub fn is_identity(&self) -> bool {
        self.top.is_leaf() && self.bottom.is_leaf()
    }

    pub fn inverse(&self) -> Self {
        TreeDiagram { top: self.bottom.clone(), bottom: self.top.clone() }
    }

    /// Reduced diagram of `self . other`.
    pub fn multiply(&self, other: &TreeDiagram) -> TreeDiagram {
        assert_eq!(self.p(), other.p(), "multiplying diagrams of different groups");
        let p = self.top.p();
        let mut union = Vec::new();
        let mut grow_self = Vec::with_capacity(self.leaf_count());
        let mut grow_other = Vec::with_capacity(other.leaf_count());
        refine(&self.bottom.nodes, &other.top.nodes, p, (0, 0), &mut union, &mut grow_self, &mut grow_other);
        let top = graft(&self.top.nodes, &grow_self, &union);
        let bottom = graft(&other.bottom.nodes, &grow_other, &union);
        let arity = self.p();
        TreeDiagram { top: PAryTree { arity, nodes: top }, bottom: PAryTree { arity, nodes: bottom } }.reduce()
    }

    /// Removes opposing carets until none are left.
    ///
    /// A top caret is cancelled against the bottom caret covering the same
    /// leaf span when both have only (possibly already cancelled) leaves as
    /// children with identical child spans. Visiting top carets in reverse
    /// preorder handles every caret after all of its descendants, so one
    /// pass reaches the fixpoint.
    pub fn reduce(&self) -> TreeDiagram {
        let p = self.top.p();
        let top = self.top.annotate();
        let bottom = self.bottom.annotate();
        // Caret spans within one tree are distinct, and preorder lists them
        // by increasing start and, for a shared start, decreasing end.
        let bottom_carets: Vec<usize> =
            (0..self.bottom.nodes.len()).filter(|&j| self.bottom.nodes[j] == Node::Caret).collect();
        let find_bottom = |(lo, hi): (u32, u32)| {
            bottom_carets
                .binary_search_by(|&j| {
                    let (blo, bhi) = bottom.span[j];
                    blo.cmp(&lo).then(hi.cmp(&bhi))
                })
                .ok()
                .map(|k| bottom_carets[k])
        };
        let mut cut_top = vec![false; self.top.nodes.len()];
        let mut cut_bottom = vec![false; self.bottom.nodes.len()];
        let mut any = false;
        for i in (0..self.top.nodes.len()).rev() {
            if self.top.nodes[i] != Node::Caret {
                continue;
            }
            let Some(j) = find_bottom(top.span[i]) else {
                continue;
            };
            let (mut ci, mut cj) = (i + 1, j + 1);
            let mut matched = true;
            for _ in 0..p {
                let exposed = self.top.nodes[ci] == Node::Leaf || cut_top[ci];
                if !exposed || top.span[ci] != bottom.span[cj] {
                    matched = false;
                    break;
                }
                ci = top.end[ci];
                cj = bottom.end[cj];
            }
            if matched {
                cut_top[i] = true;
                cut_bottom[j] = true;
                any = true;
            }
        }
        if !any {
            return self.clone();
        }
        let arity = self.p();
        TreeDiagram {
            top: PAryTree { arity, nodes: prune(&self.top.nodes, &cut_top, &top.end) },
            bottom: PAryTree { arity, nodes: prune(&self.bottom.nodes, &cut_bottom, &bottom.end) },
        }
    }

    pub fn is_reduced(&self) -> bool {
        self.reduce() == *self
    }

    /// New root caret on both trees with `self` under the last child.
    pub fn shift_right(&self) -> TreeDiagram {
        self.shifted(true)
    }

    /// New root caret on both trees with `self` under the first child.
    pub fn shift_left(&self) -> TreeDiagram {
        self.shifted(false)
    }

    fn shifted(&self, right: bool) -> TreeDiagram {
        let wrap = |t: &PAryTree| {
            let mut children = vec![PAryTree::leaf(t.arity); t.p()];
            let slot = if right { t.p() - 1 } else { 0 };
            children[slot] = t.clone();
            PAryTree::join(&children)
        };
        TreeDiagram { top: wrap(&self.top), bottom: wrap(&self.bottom) }.reduce()
    }

    /// Image in `Z + Z` under the abelianization of `F`.
    pub fn abelianization(&self) -> Result<AbelianImage, DiagramError> {
        self.require_arity(2)?;
        Ok(AbelianImage {
            left: self.top.leftmost_depth() as i64 - self.bottom.leftmost_depth() as i64,
            right: self.top.rightmost_depth() as i64 - self.bottom.rightmost_depth() as i64,
        })
    }

    /// Membership in the rectangular subgroup `K_(a,b)`.
    pub fn in_rectangular_subgroup(&self, a: i64, b: i64) -> Result<bool, DiagramError> {
        let image = self.abelianization()?;
        Ok(image.left % a == 0 && image.right % b == 0)
    }

    pub(crate) fn require_arity(&self, p: u32) -> Result<(), DiagramError> {
        if self.p() != p {
            return Err(DiagramError::WrongArity { expected: p, got: self.p() });
        }
        Ok(())
    }

    /// `top|bottom` in preorder text.
    pub fn parse(text: &str, p: u32) -> Result<Self, DiagramError> {
        if p < 2 {
            return Err(DiagramError::BadParameter(p));
        }
        let (top, bottom) = text.trim().split_once('|').ok_or(DiagramError::Syntax(0))?;
        TreeDiagram::new(PAryTree::parse(top, p)?, PAryTree::parse(bottom, p)?)
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "p": self.p(),
            "top": self.top.to_string(),
            "bottom": self.bottom.to_string(),
        })
    }
}

impl fmt::Display for TreeDiagram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}|{}", self.top, self.bottom)
    }
}

/// Minimal common refinement of trees `a` and `b`, written to `union`.
/// For every leaf of `a` (resp. `b`) in order, records the range of `union`
/// holding the subtree that leaf grows into.
fn refine(
    a: &[Node],
    b: &[Node],
    p: usize,
    at: (usize, usize),
    union: &mut Vec<Node>,
    grow_a: &mut Vec<Range<usize>>,
    grow_b: &mut Vec<Range<usize>>,
) -> (usize, usize) {
    let (ia, ib) = at;
    match (a[ia], b[ib]) {
        (Node::Leaf, Node::Leaf) => {
            let s = union.len();
            union.push(Node::Leaf);
            grow_a.push(s..s + 1);
            grow_b.push(s..s + 1);
            (ia + 1, ib + 1)
        }
        (Node::Caret, Node::Leaf) => {
            let end = copy_subtree(a, ia, p, union, grow_a);
            let len = end - ia;
            grow_b.push(union.len() - len..union.len());
            (end, ib + 1)
        }
        (Node::Leaf, Node::Caret) => {
            let end = copy_subtree(b, ib, p, union, grow_b);
            let len = end - ib;
            grow_a.push(union.len() - len..union.len());
            (ia + 1, end)
        }
        (Node::Caret, Node::Caret) => {
            union.push(Node::Caret);
            let mut cursor = (ia + 1, ib + 1);
            for _ in 0..p {
                cursor = refine(a, b, p, cursor, union, grow_a, grow_b);
            }
            cursor
        }
    }
}

/// Copies the subtree of `src` rooted at `at`; every leaf copied is recorded
/// as growing into itself.
fn copy_subtree(src: &[Node], at: usize, p: usize, union: &mut Vec<Node>, grow: &mut Vec<Range<usize>>) -> usize {
    let mut pending = 1usize;
    let mut i = at;
    while pending > 0 {
        let s = union.len();
        union.push(src[i]);
        match src[i] {
            Node::Leaf => {
                grow.push(s..s + 1);
                pending -= 1;
            }
            Node::Caret => pending += p - 1,
        }
        i += 1;
    }
    i
}

fn graft(tree: &[Node], grow: &[Range<usize>], union: &[Node]) -> Vec<Node> {
    let mut out = Vec::with_capacity(tree.len() + union.len());
    let mut leaf = 0;
    for &node in tree {
        match node {
            Node::Caret => out.push(Node::Caret),
            Node::Leaf => {
                out.extend_from_slice(&union[grow[leaf].clone()]);
                leaf += 1;
            }
        }
    }
    out
}

fn prune(nodes: &[Node], cut: &[bool], end: &[usize]) -> Vec<Node> {
    let mut out = Vec::with_capacity(nodes.len());
    let mut i = 0;
    while i < nodes.len() {
        if cut[i] {
            out.push(Node::Leaf);
            i = end[i];
        } else {
            out.push(nodes[i]);
            i += 1;
        }
    }
    out
}

/// Compact serialization of a diagram: the preorder node sequences of the top
/// and bottom trees packed one bit per node (caret = 1). Preorder encodings
/// of full `p`-ary trees are self-delimiting, so two diagrams over the same
/// `p` share a key exactly when they are equal.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DiagramKey(Box<[u64]>);

impl TreeDiagram {
    /// Key of this exact diagram; reduce first for a key of the element.
    pub fn key(&self) -> DiagramKey {
        pack_key(&self.top.nodes, &self.bottom.nodes)
    }

    /// Key of the inverse, without building it.
    pub fn inverse_key(&self) -> DiagramKey {
        pack_key(&self.bottom.nodes, &self.top.nodes)
    }
}

fn pack_key(first: &[Node], second: &[Node]) -> DiagramKey {
    let mut words = vec![0u64; (first.len() + second.len()).div_ceil(64)];
    for (k, &node) in first.iter().chain(second).enumerate() {
        if node == Node::Caret {
            words[k / 64] |= 1 << (k % 64);
        }
    }
    DiagramKey(words.into_boxed_slice())
}

/// Reduced diagram of the product of the word's letters.
pub fn eval_word(w: &Word) -> TreeDiagram {
    let p = w.p();
    w.letters().iter().fold(TreeDiagram::identity(p), |acc, l| {
        let g = TreeDiagram::generator(l.index, p);
        let g = if l.is_pos() { g } else { g.inverse() };
        acc.multiply(&g)
    })
}
