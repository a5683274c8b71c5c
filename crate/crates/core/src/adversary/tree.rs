//! Tree adversary: a martingale of node values over a block tree whose leaves
//! are the blocks.

use rand::Rng;

use super::AdversaryError;
use crate::instance::BlockRepresentation;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeKind {
    Leaf,
    /// One block (1-based `star`) is longer than half the node's total; it
    /// becomes a leaf child between the (possibly empty) left and right parts.
    Long { star: usize },
    /// Split after block `cut` (1-based), the first prefix reaching a quarter
    /// of the node's total.
    Balanced { cut: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct TreeNode {
    /// 1-based inclusive block interval.
    pub interval: (usize, usize),
    pub parent: Option<usize>,
    pub children: Vec<usize>,
    pub depth: u32,
    pub kind: NodeKind,
    pub totlen: u128,
    pub sigma: f64,
    pub sigma_sq: f64,
}

impl TreeNode {
    pub fn size(&self) -> usize {
        self.interval.1 - self.interval.0 + 1
    }

    pub fn is_leaf(&self) -> bool {
        self.children.is_empty()
    }

    pub fn contains(&self, lo: usize, hi: usize) -> bool {
        self.interval.0 <= lo && hi <= self.interval.1
    }
}

/// Nodes are stored parents-first; node 0 is the root.
#[derive(Debug, Clone, PartialEq)]
pub struct AdversaryTree {
    nodes: Vec<TreeNode>,
    leaf_of_block: Vec<usize>,
}

pub type Edge = (usize, usize);

impl AdversaryTree {
    pub const ROOT: usize = 0;

    pub fn build(b: &BlockRepresentation) -> Result<Self, AdversaryError> {
        let m = b.m();
        if m < 2 {
            return Err(AdversaryError::SingleBlockTree);
        }
        let ln_m = (m as f64).ln();
        let mut nodes: Vec<TreeNode> = Vec::with_capacity(2 * m);
        let mut leaf_of_block = vec![usize::MAX; m];
        // (lo, hi, parent) with 1-based inclusive blocks
        let mut pending = vec![(1usize, m, None::<usize>)];
        while let Some((lo, hi, parent)) = pending.pop() {
            let id = nodes.len();
            let size = hi - lo + 1;
            let total = b.range_total(lo - 1..hi);
            let kind = if size == 1 {
                leaf_of_block[lo - 1] = id;
                NodeKind::Leaf
            } else {
                split(b, lo, hi, total)
            };
            let sigma_sq = if size == m {
                0.0
            } else {
                (1.0 - (size as f64).ln() / ln_m).max(0.0)
            };
            nodes.push(TreeNode {
                interval: (lo, hi),
                parent,
                children: Vec::new(),
                depth: parent.map_or(0, |p| nodes[p].depth + 1),
                kind,
                totlen: total,
                sigma: sigma_sq.sqrt(),
                sigma_sq,
            });
            if let Some(p) = parent {
                nodes[p].children.push(id);
            }
            // children are pushed right-to-left so they are created in order
            let parts: Vec<(usize, usize)> = match kind {
                NodeKind::Leaf => vec![],
                NodeKind::Long { star } => [(lo, star - 1), (star, star), (star + 1, hi)]
                    .into_iter()
                    .filter(|(a, z)| a <= z)
                    .collect(),
                NodeKind::Balanced { cut } => vec![(lo, cut), (cut + 1, hi)],
            };
            for &(a, z) in parts.iter().rev() {
                pending.push((a, z, Some(id)));
            }
        }
        Ok(Self {
            nodes,
            leaf_of_block,
        })
    }

    pub fn nodes(&self) -> &[TreeNode] {
        &self.nodes
    }

    pub fn node(&self, id: usize) -> &TreeNode {
        &self.nodes[id]
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Number of blocks.
    pub fn m(&self) -> usize {
        self.leaf_of_block.len()
    }

    /// Leaf node of 0-based block `r`.
    pub fn leaf_of_block(&self, r: usize) -> usize {
        self.leaf_of_block[r]
    }

    /// `sigma(v)^2 - sigma(parent)^2`, zero at the root.
    pub fn increment(&self, id: usize) -> f64 {
        match self.nodes[id].parent {
            Some(p) => self.nodes[id].sigma_sq - self.nodes[p].sigma_sq,
            None => 0.0,
        }
    }

    pub fn edges(&self) -> impl Iterator<Item = Edge> + '_ {
        self.nodes
            .iter()
            .enumerate()
            .filter_map(|(v, n)| n.parent.map(|u| (u, v)))
    }

    pub fn lca(&self, a: usize, b: usize) -> usize {
        let (mut a, mut b) = (a, b);
        while self.nodes[a].depth > self.nodes[b].depth {
            a = self.nodes[a].parent.expect("deeper node has a parent");
        }
        while self.nodes[b].depth > self.nodes[a].depth {
            b = self.nodes[b].parent.expect("deeper node has a parent");
        }
        while a != b {
            a = self.nodes[a].parent.expect("distinct nodes below the root");
            b = self.nodes[b].parent.expect("distinct nodes below the root");
        }
        a
    }

    /// Deepest node under `from` whose interval contains `lo..=hi`.
    pub fn deepest_containing(&self, from: usize, lo: usize, hi: usize) -> usize {
        let mut v = from;
        'descend: loop {
            for &c in &self.nodes[v].children {
                if self.nodes[c].contains(lo, hi) {
                    v = c;
                    continue 'descend;
                }
            }
            return v;
        }
    }

    /// Covariance of the means of 0-based blocks `r` and `s`.
    pub fn covariance(&self, r: usize, s: usize) -> f64 {
        let l = self.lca(self.leaf_of_block[r], self.leaf_of_block[s]);
        self.nodes[l].sigma_sq / 4.0
    }

    /// `sum_v g(v) C(v)^2`, with `C(v)` the coefficient mass below `v` and
    /// `g` the squared-magnitude increment. Equals `4 Var(c . mu)`.
    pub fn spread_form(&self, c: &[f64]) -> f64 {
        let mut below = vec![0.0f64; self.nodes.len()];
        for (r, &cr) in c.iter().enumerate() {
            below[self.leaf_of_block[r]] += cr;
        }
        let mut acc = 0.0;
        for v in (0..self.nodes.len()).rev() {
            acc += self.increment(v) * below[v] * below[v];
            if let Some(p) = self.nodes[v].parent {
                below[p] += below[v];
            }
        }
        acc
    }
}

fn split(b: &BlockRepresentation, lo: usize, hi: usize, total: u128) -> NodeKind {
    let lengths = &b.lengths()[lo - 1..hi];
    let (pos, &longest) = lengths
        .iter()
        .enumerate()
        .max_by_key(|&(i, l)| (*l, std::cmp::Reverse(i)))
        .expect("non-empty");
    if 2 * longest as u128 > total {
        return NodeKind::Long { star: lo + pos };
    }
    // smallest cut with 4 * prefix >= total
    let base = b.prefix(lo - 1);
    let need = total.div_ceil(4);
    let offset = (lo..=hi)
        .position(|c| b.prefix(c) - base >= need)
        .expect("the full range reaches the total");
    NodeKind::Balanced { cut: lo + offset }
}

/// One draw of the node values. The deviation of node `v` from 1/2 is
/// `sign(v) * sigma(v) / 2`, kept symbolically so that its magnitude is exact.
#[derive(Debug, Clone, PartialEq)]
pub struct TreeSample {
    signs: Vec<i8>,
    node_values: Vec<f64>,
    block_means: Vec<f64>,
}

impl TreeSample {
    /// `+1` for the high value, `-1` for the low one, `0` at the root.
    pub fn sign(&self, v: usize) -> i8 {
        self.signs[v]
    }

    pub fn node_values(&self) -> &[f64] {
        &self.node_values
    }

    pub fn block_means(&self) -> &[f64] {
        &self.block_means
    }

    /// `mu_v - 1/2`.
    pub fn deviation(&self, tree: &AdversaryTree, v: usize) -> f64 {
        f64::from(self.signs[v]) * tree.nodes[v].sigma / 2.0
    }
}

/// Probability that `v` takes its high value given its parent's sign.
pub fn high_probability(tree: &AdversaryTree, v: usize, parent_sign: i8) -> f64 {
    let n = &tree.nodes[v];
    let p = n.parent.expect("edges have a parent");
    // (mu_u - (1 - sigma_v)/2) / sigma_v with mu_u = 1/2 + s sigma_u / 2
    (0.5 + f64::from(parent_sign) * tree.nodes[p].sigma / (2.0 * n.sigma)).clamp(0.0, 1.0)
}

pub fn sample_tree_values<R: Rng + ?Sized>(tree: &AdversaryTree, rng: &mut R) -> TreeSample {
    let len = tree.nodes.len();
    let mut signs = vec![0i8; len];
    let mut node_values = vec![0.5; len];
    for v in 1..len {
        let parent = tree.nodes[v].parent.expect("non-root");
        let high = rng.random_bool(high_probability(tree, v, signs[parent]));
        signs[v] = if high { 1 } else { -1 };
        let sigma = tree.nodes[v].sigma;
        node_values[v] = if high {
            (1.0 + sigma) / 2.0
        } else {
            (1.0 - sigma) / 2.0
        };
    }
    let block_means = tree.leaf_of_block.iter().map(|&l| node_values[l]).collect();
    TreeSample {
        signs,
        node_values,
        block_means,
    }
}

/// An edge `(u, v)` with `I(v)` disjoint from blocks before `i`, `totlen(v)`
/// at least `totlen([i, j]) / 32` and `size(v) <= size(u) / 2`. Blocks are
/// 1-based.
pub fn find_technical_edge(
    tree: &AdversaryTree,
    i: usize,
    j: usize,
) -> Result<Edge, AdversaryError> {
    if i < 1 || i > j || j > tree.m() {
        return Err(AdversaryError::IntervalOutOfRange { i, j, m: tree.m() });
    }
    let nodes = &tree.nodes;
    let u1 = tree.deepest_containing(AdversaryTree::ROOT, i, j);
    match nodes[u1].kind {
        NodeKind::Leaf => {
            let parent = nodes[u1].parent.expect("m >= 2 puts leaves below the root");
            return Ok((parent, u1));
        }
        NodeKind::Long { star } => return Ok((u1, tree.leaf_of_block[star - 1])),
        NodeKind::Balanced { .. } => {}
    }
    let (left, right) = (nodes[u1].children[0], nodes[u1].children[1]);
    let overlap = |v: usize| {
        let (a, z) = nodes[v].interval;
        let (a, z) = (a.max(i), z.min(j));
        if a > z {
            0
        } else {
            // 1-based inclusive -> 0-based half-open
            tree_totlen(tree, a, z)
        }
    };
    let whole = tree_totlen(tree, i, j);
    // the right part keeps the interval's right end; the left part is mirrored
    let take_right = 2 * overlap(right) >= whole;
    let (lo, hi, from) = if take_right {
        (nodes[right].interval.0, j, right)
    } else {
        (i, nodes[left].interval.1, left)
    };
    let v1 = tree.deepest_containing(from, lo, hi);
    let v2 = match nodes[v1].kind {
        NodeKind::Leaf => {
            let parent = nodes[v1].parent.expect("below u1");
            return Ok((parent, v1));
        }
        NodeKind::Long { star } => return Ok((v1, tree.leaf_of_block[star - 1])),
        NodeKind::Balanced { .. } => {
            let cs = &nodes[v1].children;
            if take_right {
                cs[0]
            } else {
                cs[1]
            }
        }
    };
    let v3 = match nodes[v2].kind {
        NodeKind::Leaf => return Ok((v1, v2)),
        NodeKind::Long { star } => tree.leaf_of_block[star - 1],
        NodeKind::Balanced { .. } => {
            let cs = &nodes[v2].children;
            if 2 * nodes[cs[0]].size() <= nodes[v2].size() {
                cs[0]
            } else {
                cs[1]
            }
        }
    };
    Ok((v2, v3))
}

fn tree_totlen(tree: &AdversaryTree, lo: usize, hi: usize) -> u128 {
    // sum of leaf totals, read off the tree so no instance is needed
    (lo..=hi)
        .map(|r| tree.nodes[tree.leaf_of_block[r - 1]].totlen)
        .sum()
}

/// Checks an edge against the three conditions of [`find_technical_edge`].
pub fn edge_satisfies(tree: &AdversaryTree, (u, v): Edge, i: usize, j: usize) -> bool {
    let nu = &tree.nodes[u];
    let nv = &tree.nodes[v];
    nv.parent == Some(u)
        && nv.interval.0 >= i
        && 32 * nv.totlen >= tree_totlen(tree, i, j)
        && 2 * nv.size() <= nu.size()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConditionalVarianceReport {
    pub edges: usize,
    pub max_abs_error: f64,
    pub satisfied: bool,
}

pub const CONDITIONAL_VARIANCE_TOLERANCE: f64 = 1e-12;

/// Compares, for every edge and each possible parent value, the two-point
/// variance of the child with `(ln size(u) - ln size(v)) / (4 ln m)`.
pub fn conditional_variance_check(tree: &AdversaryTree) -> ConditionalVarianceReport {
    let ln_m = (tree.m() as f64).ln();
    let mut worst = 0.0f64;
    let mut edges = 0;
    for (u, v) in tree.edges() {
        edges += 1;
        let (nu, nv) = (&tree.nodes[u], &tree.nodes[v]);
        let target = ((nu.size() as f64).ln() - (nv.size() as f64).ln()) / (4.0 * ln_m);
        let parent_signs: &[i8] = if nu.parent.is_none() { &[0] } else { &[-1, 1] };
        for &s in parent_signs {
            let p = high_probability(tree, v, s);
            // values differ by sigma_v
            let var = p * (1.0 - p) * nv.sigma_sq;
            worst = worst.max((var - target).abs());
        }
    }
    ConditionalVarianceReport {
        edges,
        max_abs_error: worst,
        satisfied: worst <= CONDITIONAL_VARIANCE_TOLERANCE,
    }
}
