use ndarray::ArrayView1;
use serde::{Deserialize, Serialize};

use crate::binning::BinnedMatrix;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Node {
    /// Rows with `x[feature] <= threshold` (equivalently bin `<= bin`) go left.
    Split {
        feature: usize,
        bin: u8,
        threshold: f64,
        left: usize,
        right: usize,
        /// Bagged rows that reached the node while growing.
        count: usize,
        gain: f64,
    },
    Leaf {
        value: f64,
        count: usize,
    },
}

impl Node {
    pub fn count(&self) -> usize {
        match self {
            Node::Split { count, .. } | Node::Leaf { count, .. } => *count,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    /// Node 0 is the root.
    pub nodes: Vec<Node>,
}

impl Tree {
    pub fn n_leaves(&self) -> usize {
        self.nodes.iter().filter(|n| matches!(n, Node::Leaf { .. })).count()
    }

    fn leaf_index(&self, mut go_left: impl FnMut(usize, u8, f64) -> bool) -> usize {
        let mut i = 0;
        loop {
            match &self.nodes[i] {
                Node::Leaf { .. } => return i,
                Node::Split { feature, bin, threshold, left, right, .. } => {
                    i = if go_left(*feature, *bin, *threshold) { *left } else { *right };
                }
            }
        }
    }

    fn leaf_value(&self, i: usize) -> f64 {
        match self.nodes[i] {
            Node::Leaf { value, .. } => value,
            Node::Split { .. } => unreachable!("traversal ends at a leaf"),
        }
    }

    pub fn predict_row(&self, x: ArrayView1<'_, f64>) -> f64 {
        self.leaf_value(self.leaf_index(|f, _, t| x[f] <= t))
    }

    /// Leaf node index reached by a binned training row.
    pub fn route_binned(&self, data: &BinnedMatrix, row: usize) -> usize {
        self.leaf_index(|f, b, _| data.get(row, f) <= b)
    }

    pub fn set_leaf_value(&mut self, i: usize, v: f64) {
        if let Node::Leaf { value, .. } = &mut self.nodes[i] {
            *value = v;
        }
    }
}
