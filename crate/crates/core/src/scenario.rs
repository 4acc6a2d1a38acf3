//! Binary prefix indexing for scenario trees and vertex patterns.
//!
//! A tree node at depth `t` is the bit string of band choices made in periods
//! `1..=t`, most recent choice in the lowest bit (`0` = lower bound, `1` =
//! upper bound). Nodes are numbered breadth first: depth `t`, bits `b` maps to
//! `2^t - 2 + b`.

use crate::error::{Error, Result};

pub const DEFAULT_MAX_LEAVES: usize = 1 << 14;
pub const DEFAULT_MAX_ESS_CORNERS: usize = 12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TreeNode {
    pub depth: usize,
    pub bits: usize,
}

impl TreeNode {
    /// Whether this node takes the upper band value in its own period.
    pub fn takes_upper(self) -> bool {
        self.bits & 1 == 1
    }

    pub fn index(self) -> usize {
        (1 << self.depth) - 2 + self.bits
    }

    pub fn parent(self) -> Option<TreeNode> {
        (self.depth > 1).then(|| TreeNode { depth: self.depth - 1, bits: self.bits >> 1 })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ScenarioTree {
    depth: usize,
}

impl ScenarioTree {
    pub fn new(depth: usize, max_leaves: usize) -> Result<Self> {
        if depth == 0 {
            return Err(Error::Precondition("scenario tree needs at least one period".into()));
        }
        let leaves: u128 = if depth >= 127 { u128::MAX } else { 1u128 << depth };
        if leaves > max_leaves as u128 {
            return Err(Error::SizeCap { what: format!("scenario tree over {depth} periods"), size: leaves, cap: max_leaves as u128 });
        }
        Ok(Self { depth })
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn num_blocks(&self) -> usize {
        (1 << (self.depth + 1)) - 2
    }

    pub fn node(index: usize) -> TreeNode {
        let depth = usize::BITS as usize - 1 - (index + 2).leading_zeros() as usize;
        TreeNode { depth, bits: index + 2 - (1 << depth) }
    }

    /// All nodes in breadth-first order.
    pub fn nodes(&self) -> Vec<TreeNode> {
        (0..self.num_blocks()).map(Self::node).collect()
    }

    /// Block shared by every leaf with the same first `t` choices as `leaf`.
    pub fn block_of(&self, leaf_bits: usize, t: usize) -> usize {
        TreeNode { depth: t, bits: leaf_bits >> (self.depth - t) }.index()
    }
}

/// Tree nodes of a `depth`-period tree in breadth-first order.
pub fn enumerate_prefixes(depth: usize) -> Result<Vec<TreeNode>> {
    Ok(ScenarioTree::new(depth, DEFAULT_MAX_LEAVES)?.nodes())
}

/// A choice of lower (`false`) or upper (`true`) per enumerated quantity.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VertexPattern(pub Vec<bool>);

impl VertexPattern {
    pub fn uniform(len: usize, upper: bool) -> Self {
        Self(vec![upper; len])
    }

    /// Pattern number `k` of `len` quantities in lexicographic order.
    pub fn from_index(k: usize, len: usize) -> Self {
        Self((0..len).map(|i| k >> (len - 1 - i) & 1 == 1).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// All `2^n` storage box corners in lexicographic order.
pub fn enumerate_soc_corners(n_ess: usize, max_ess: usize) -> Result<Vec<VertexPattern>> {
    if n_ess > max_ess {
        return Err(Error::SizeCap { what: format!("box corners of {n_ess} storage units"), size: 1u128 << n_ess.min(127), cap: 1u128 << max_ess });
    }
    Ok(enumerate_patterns(n_ess))
}

pub(crate) fn enumerate_patterns(len: usize) -> Vec<VertexPattern> {
    (0..1usize << len).map(|k| VertexPattern::from_index(k, len)).collect()
}
