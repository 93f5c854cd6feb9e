//! Binary regression trees with axis-aligned splits.

use super::Covariates;

#[derive(Debug, Clone, PartialEq)]
pub struct SplitRule {
    pub var: usize,
    pub cut: f64,
}

impl SplitRule {
    /// Left branch takes x[var] <= cut.
    pub fn goes_left(&self, x: f64) -> bool {
        x <= self.cut
    }
}

#[derive(Debug, Clone)]
pub enum NodeKind {
    Leaf { value: f64 },
    Internal { rule: SplitRule, left: usize, right: usize },
}

#[derive(Debug, Clone)]
pub struct Node {
    pub depth: u32,
    pub parent: Option<usize>,
    pub kind: NodeKind,
}

impl Node {
    pub fn is_leaf(&self) -> bool {
        matches!(self.kind, NodeKind::Leaf { .. })
    }
}

/// A binary tree stored in a slab; freed slots are recycled.
#[derive(Debug, Clone)]
pub struct Tree {
    nodes: Vec<Node>,
    free: Vec<usize>,
}

pub const ROOT: usize = 0;

impl Tree {
    pub fn new_root() -> Self {
        Self {
            nodes: vec![Node {
                depth: 0,
                parent: None,
                kind: NodeKind::Leaf { value: 0.0 },
            }],
            free: Vec::new(),
        }
    }

    pub fn node(&self, idx: usize) -> &Node {
        &self.nodes[idx]
    }

    pub fn slab_len(&self) -> usize {
        self.nodes.len()
    }

    pub fn leaf_value(&self, idx: usize) -> f64 {
        match self.nodes[idx].kind {
            NodeKind::Leaf { value } => value,
            _ => panic!("node {idx} is not a leaf"),
        }
    }

    pub fn set_leaf_value(&mut self, idx: usize, v: f64) {
        match &mut self.nodes[idx].kind {
            NodeKind::Leaf { value } => *value = v,
            _ => panic!("node {idx} is not a leaf"),
        }
    }

    pub fn leaves(&self) -> Vec<usize> {
        let mut out = Vec::new();
        self.collect_leaves(ROOT, &mut out);
        out
    }

    fn collect_leaves(&self, idx: usize, out: &mut Vec<usize>) {
        match &self.nodes[idx].kind {
            NodeKind::Leaf { .. } => out.push(idx),
            NodeKind::Internal { left, right, .. } => {
                self.collect_leaves(*left, out);
                self.collect_leaves(*right, out);
            }
        }
    }

    pub fn n_leaves(&self) -> usize {
        self.leaves().len()
    }

    /// Internal nodes whose two children are both leaves.
    pub fn cherries(&self) -> Vec<usize> {
        let mut out = Vec::new();
        self.collect_cherries(ROOT, &mut out);
        out
    }

    fn collect_cherries(&self, idx: usize, out: &mut Vec<usize>) {
        if let NodeKind::Internal { left, right, .. } = &self.nodes[idx].kind {
            if self.nodes[*left].is_leaf() && self.nodes[*right].is_leaf() {
                out.push(idx);
            } else {
                self.collect_cherries(*left, out);
                self.collect_cherries(*right, out);
            }
        }
    }

    pub fn max_depth(&self) -> u32 {
        self.leaves().iter().map(|&l| self.nodes[l].depth).max().unwrap_or(0)
    }

    fn alloc(&mut self, node: Node) -> usize {
        if let Some(idx) = self.free.pop() {
            self.nodes[idx] = node;
            idx
        } else {
            self.nodes.push(node);
            self.nodes.len() - 1
        }
    }

    /// Split leaf `idx` with `rule`; returns (left, right) child indices.
    pub fn grow(&mut self, idx: usize, rule: SplitRule) -> (usize, usize) {
        assert!(self.nodes[idx].is_leaf());
        let depth = self.nodes[idx].depth + 1;
        let left = self.alloc(Node {
            depth,
            parent: Some(idx),
            kind: NodeKind::Leaf { value: 0.0 },
        });
        let right = self.alloc(Node {
            depth,
            parent: Some(idx),
            kind: NodeKind::Leaf { value: 0.0 },
        });
        self.nodes[idx].kind = NodeKind::Internal { rule, left, right };
        (left, right)
    }

    /// Collapse cherry `idx` back into a leaf.
    pub fn prune(&mut self, idx: usize) {
        let (left, right) = match &self.nodes[idx].kind {
            NodeKind::Internal { left, right, .. } => (*left, *right),
            _ => panic!("prune target must be internal"),
        };
        assert!(self.nodes[left].is_leaf() && self.nodes[right].is_leaf());
        self.free.push(left);
        self.free.push(right);
        self.nodes[idx].kind = NodeKind::Leaf { value: 0.0 };
    }

    /// Replace the rule of cherry `idx`.
    pub fn change_rule(&mut self, idx: usize, rule: SplitRule) {
        match &mut self.nodes[idx].kind {
            NodeKind::Internal { rule: r, .. } => *r = rule,
            _ => panic!("change target must be internal"),
        }
    }

    /// Leaf index for training observation `row`.
    pub fn traverse_obs(&self, cov: &Covariates, row: usize) -> usize {
        let mut idx = ROOT;
        loop {
            match &self.nodes[idx].kind {
                NodeKind::Leaf { .. } => return idx,
                NodeKind::Internal { rule, left, right } => {
                    idx = if rule.goes_left(cov.value(row, rule.var)) {
                        *left
                    } else {
                        *right
                    };
                }
            }
        }
    }

    /// Leaf index for an arbitrary covariate row.
    pub fn traverse_point(&self, x: &[f64]) -> usize {
        let mut idx = ROOT;
        loop {
            match &self.nodes[idx].kind {
                NodeKind::Leaf { .. } => return idx,
                NodeKind::Internal { rule, left, right } => {
                    idx = if rule.goes_left(x[rule.var]) { *left } else { *right };
                }
            }
        }
    }

    pub fn predict_point(&self, x: &[f64]) -> f64 {
        self.leaf_value(self.traverse_point(x))
    }

    /// Canonical structural signature (rules in traversal order), ignoring
    /// leaf values. Two trees in the same structure-equivalence class give
    /// equal signatures.
    pub fn structure_signature(&self) -> Vec<(u32, Option<(usize, u64)>)> {
        let mut out = Vec::new();
        self.signature_rec(ROOT, &mut out);
        out
    }

    fn signature_rec(&self, idx: usize, out: &mut Vec<(u32, Option<(usize, u64)>)>) {
        let d = self.nodes[idx].depth;
        match &self.nodes[idx].kind {
            NodeKind::Leaf { .. } => out.push((d, None)),
            NodeKind::Internal { rule, left, right } => {
                out.push((d, Some((rule.var, rule.cut.to_bits()))));
                self.signature_rec(*left, out);
                self.signature_rec(*right, out);
            }
        }
    }

    /// Structural invariants: reachable slots consistent, depths parent+1,
    /// parents correct. Intended for tests and debug assertions.
    pub fn validate(&self) -> Result<(), String> {
        let mut seen = vec![false; self.nodes.len()];
        self.validate_rec(ROOT, None, 0, &mut seen)?;
        for (i, s) in seen.iter().enumerate() {
            let freed = self.free.contains(&i);
            if *s && freed {
                return Err(format!("node {i} both reachable and freed"));
            }
            if !*s && !freed {
                return Err(format!("node {i} unreachable but not freed"));
            }
        }
        Ok(())
    }

    fn validate_rec(
        &self,
        idx: usize,
        parent: Option<usize>,
        depth: u32,
        seen: &mut [bool],
    ) -> Result<(), String> {
        if seen[idx] {
            return Err(format!("node {idx} visited twice"));
        }
        seen[idx] = true;
        let n = &self.nodes[idx];
        if n.depth != depth {
            return Err(format!("node {idx}: depth {} != {depth}", n.depth));
        }
        if n.parent != parent {
            return Err(format!("node {idx}: bad parent"));
        }
        if let NodeKind::Internal { left, right, .. } = &n.kind {
            self.validate_rec(*left, Some(idx), depth + 1, seen)?;
            self.validate_rec(*right, Some(idx), depth + 1, seen)?;
        }
        Ok(())
    }
}

/// A tree plus the cached leaf assignment of every training observation.
#[derive(Debug, Clone)]
pub struct TreeFit {
    pub tree: Tree,
    pub leaf_of: Vec<u32>,
}

impl TreeFit {
    pub fn new_root(n_obs: usize) -> Self {
        Self {
            tree: Tree::new_root(),
            leaf_of: vec![ROOT as u32; n_obs],
        }
    }

    pub fn value_for_obs(&self, row: usize) -> f64 {
        self.tree.leaf_value(self.leaf_of[row] as usize)
    }

    pub fn reassign_all(&mut self, cov: &Covariates) {
        for i in 0..self.leaf_of.len() {
            self.leaf_of[i] = self.tree.traverse_obs(cov, i) as u32;
        }
    }

    /// Observation counts per slab slot.
    pub fn leaf_counts(&self) -> Vec<u32> {
        let mut counts = vec![0u32; self.tree.slab_len()];
        for &l in &self.leaf_of {
            counts[l as usize] += 1;
        }
        counts
    }
}
