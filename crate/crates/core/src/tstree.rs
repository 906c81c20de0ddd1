//! Time split trees: random binary partitions of the time axis.
//!
//! Every internal node splits its segment `[start, end]` at a uniformly
//! drawn point `st` into `[start, st - 1]` and `[st, end]`. Recursion stops
//! when a segment is no longer than `slimit` or the node sits at depth
//! `hlimit` (the root is depth 0). The leaves are the dynamic time segments
//! inside which similar points are searched.

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed::Rng;

/// Default leaf length threshold.
pub const DEFAULT_SLIMIT: usize = 3;

/// `floor(log2(d))`, the default depth limit for a length-`d` axis.
pub fn default_hlimit(d: usize) -> usize {
    if d <= 1 {
        0
    } else {
        (usize::BITS - 1 - d.leading_zeros()) as usize
    }
}

/// Inclusive range of 1-based time indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Segment {
    pub start: usize,
    pub end: usize,
}

impl Segment {
    pub fn new(start: usize, end: usize) -> Result<Self> {
        if start == 0 {
            return Err(Error::InvalidIndex { t: 0, d: end });
        }
        if start > end {
            return Err(Error::InvalidRange { start, end });
        }
        Ok(Self { start, end })
    }

    pub fn len(&self) -> usize {
        self.end - self.start + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains(&self, t: usize) -> bool {
        self.start <= t && t <= self.end
    }

    /// Time indices covered, in order.
    pub fn times(&self) -> std::ops::RangeInclusive<usize> {
        self.start..=self.end
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
enum Node {
    Leaf { segment: Segment, depth: usize, leaf: usize },
    Split { st: usize, left: usize, right: usize },
}

/// A built time split tree. Immutable once constructed.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TsTree {
    nodes: Vec<Node>,
    span: Segment,
    hlimit: usize,
    slimit: usize,
    leaves: Vec<Segment>,
}

struct Builder<'a> {
    nodes: Vec<Node>,
    leaves: Vec<Segment>,
    hlimit: usize,
    slimit: usize,
    rng: &'a mut Rng,
}

impl Builder<'_> {
    fn grow(&mut self, segment: Segment, depth: usize) -> usize {
        let id = self.nodes.len();
        if segment.len() <= self.slimit || depth >= self.hlimit || segment.len() == 1 {
            self.nodes.push(Node::Leaf {
                segment,
                depth,
                leaf: self.leaves.len(),
            });
            self.leaves.push(segment);
            return id;
        }
        let st = self.rng.random_range(segment.start + 1..=segment.end);
        self.nodes.push(Node::Split { st, left: 0, right: 0 });
        let left = self.grow(Segment { start: segment.start, end: st - 1 }, depth + 1);
        let right = self.grow(Segment { start: st, end: segment.end }, depth + 1);
        self.nodes[id] = Node::Split { st, left, right };
        id
    }
}

impl TsTree {
    /// Grows a random tree over `[t_start, t_end]`.
    ///
    /// The same random stream always yields the same tree.
    pub fn build(t_start: usize, t_end: usize, hlimit: usize, slimit: usize, rng: &mut Rng) -> Result<Self> {
        let span = Segment::new(t_start, t_end)?;
        if slimit == 0 {
            return Err(Error::config("slimit must be at least 1"));
        }
        let mut builder = Builder {
            nodes: Vec::new(),
            leaves: Vec::new(),
            hlimit,
            slimit,
            rng,
        };
        builder.grow(span, 0);
        Ok(Self {
            nodes: builder.nodes,
            span,
            hlimit,
            slimit,
            leaves: builder.leaves,
        })
    }

    /// The time range the tree partitions.
    pub fn span(&self) -> Segment {
        self.span
    }

    pub fn hlimit(&self) -> usize {
        self.hlimit
    }

    pub fn slimit(&self) -> usize {
        self.slimit
    }

    /// Leaf segments, left to right.
    pub fn leaves(&self) -> &[Segment] {
        &self.leaves
    }

    /// Leaf segments with their depths, left to right.
    pub fn leaves_with_depth(&self) -> Vec<(Segment, usize)> {
        let mut out: Vec<(usize, Segment, usize)> = self
            .nodes
            .iter()
            .filter_map(|n| match *n {
                Node::Leaf { segment, depth, leaf } => Some((leaf, segment, depth)),
                Node::Split { .. } => None,
            })
            .collect();
        out.sort_by_key(|&(leaf, ..)| leaf);
        out.into_iter().map(|(_, s, depth)| (s, depth)).collect()
    }

    pub fn max_depth(&self) -> usize {
        self.leaves_with_depth().iter().map(|&(_, depth)| depth).max().unwrap_or(0)
    }

    /// Split point of the root, if the root is not a leaf.
    pub fn root_split(&self) -> Option<usize> {
        match self.nodes[0] {
            Node::Split { st, .. } => Some(st),
            Node::Leaf { .. } => None,
        }
    }

    /// Position in [`leaves`](Self::leaves) of the leaf holding `t`.
    pub fn leaf_index(&self, t: usize) -> Result<usize> {
        if !self.span.contains(t) {
            return Err(Error::InvalidIndex { t, d: self.span.end });
        }
        let mut id = 0;
        loop {
            match self.nodes[id] {
                Node::Leaf { leaf, .. } => return Ok(leaf),
                Node::Split { st, left, right } => id = if t < st { left } else { right },
            }
        }
    }

    /// The leaf segment containing `t`.
    pub fn locate_leaf(&self, t: usize) -> Result<Segment> {
        self.leaf_index(t).map(|i| self.leaves[i])
    }
}
