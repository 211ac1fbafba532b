//! Leaf-wise growth of one regression tree on gradient statistics.
//!
//! The open leaf with the largest split gain is expanded until `max_leaves`
//! is reached or no leaf has a split with positive gain. Split gain is
//! `S(G_L, H_L) + S(G_R, H_R) - S(G, H)` with `S(G, H) = T(G)^2 / (H + l2)`
//! and `T` the L1 soft threshold. Ties go to the lowest feature index, then
//! the lowest bin; among leaves, to the one created first.

use rayon::prelude::*;

use crate::binning::{BinMapper, BinnedMatrix};
use crate::tree::{Node, Tree};

#[derive(Debug, Clone, Copy)]
pub(crate) struct GrowParams {
    pub max_leaves: usize,
    pub min_child_samples: usize,
    pub l1: f64,
    pub l2: f64,
}

#[inline]
pub(crate) fn soft_threshold(g: f64, l1: f64) -> f64 {
    if g > l1 {
        g - l1
    } else if g < -l1 {
        g + l1
    } else {
        0.0
    }
}

#[inline]
fn score(g: f64, h: f64, p: &GrowParams) -> f64 {
    let t = soft_threshold(g, p.l1);
    t * t / (h + p.l2)
}

/// Regularized Newton leaf weight (before the learning rate).
#[inline]
pub(crate) fn leaf_weight(g: f64, h: f64, l1: f64, l2: f64) -> f64 {
    -soft_threshold(g, l1) / (h + l2)
}

#[derive(Debug, Clone, Copy, Default)]
struct Bin {
    g: f64,
    h: f64,
    n: u32,
}

/// One histogram per selected feature, in selection order.
type Histogram = Vec<Vec<Bin>>;

#[derive(Debug, Clone, Copy)]
struct Candidate {
    gain: f64,
    /// Position in the selected-feature list.
    slot: usize,
    bin: u8,
    left_g: f64,
    left_h: f64,
}

struct OpenLeaf {
    node: usize,
    rows: Vec<u32>,
    hist: Histogram,
    g: f64,
    h: f64,
    best: Option<Candidate>,
}

struct Grower<'a> {
    data: &'a BinnedMatrix,
    mapper: &'a BinMapper,
    grad: &'a [f64],
    hess: &'a [f64],
    features: &'a [usize],
    params: GrowParams,
}

impl Grower<'_> {
    fn histogram(&self, rows: &[u32]) -> Histogram {
        self.features
            .par_iter()
            .map(|&f| {
                let col = self.data.column(f);
                let mut bins = vec![Bin::default(); self.mapper.n_bins(f)];
                for &r in rows {
                    let r = r as usize;
                    let b = &mut bins[col[r] as usize];
                    b.g += self.grad[r];
                    b.h += self.hess[r];
                    b.n += 1;
                }
                bins
            })
            .collect()
    }

    fn best_split(&self, hist: &Histogram, g: f64, h: f64, n: usize) -> Option<Candidate> {
        let p = &self.params;
        if n < 2 * p.min_child_samples {
            return None;
        }
        let parent = score(g, h, p);
        let per_feature: Vec<Option<Candidate>> = hist
            .par_iter()
            .enumerate()
            .map(|(slot, bins)| {
                let mut best: Option<Candidate> = None;
                let (mut lg, mut lh, mut ln) = (0.0, 0.0, 0usize);
                for (b, bin) in bins.iter().enumerate().take(bins.len().saturating_sub(1)) {
                    lg += bin.g;
                    lh += bin.h;
                    ln += bin.n as usize;
                    if ln < p.min_child_samples {
                        continue;
                    }
                    if n - ln < p.min_child_samples {
                        break;
                    }
                    let gain = score(lg, lh, p) + score(g - lg, h - lh, p) - parent;
                    if gain > 0.0 && best.is_none_or(|c| gain > c.gain) {
                        best = Some(Candidate { gain, slot, bin: b as u8, left_g: lg, left_h: lh });
                    }
                }
                best
            })
            .collect();
        // slots follow ascending feature index, so a strict comparison keeps
        // the lowest feature on ties
        per_feature.into_iter().flatten().fold(None, |acc: Option<Candidate>, c| match acc {
            Some(a) if a.gain >= c.gain => Some(a),
            _ => Some(c),
        })
    }

    fn open(&self, node: usize, rows: Vec<u32>, hist: Histogram, g: f64, h: f64) -> OpenLeaf {
        let best = self.best_split(&hist, g, h, rows.len());
        OpenLeaf { node, rows, hist, g, h, best }
    }

    fn grow(&self, rows: Vec<u32>) -> Option<Tree> {
        let (g, h) = rows.iter().fold((0.0, 0.0), |(g, h), &r| (g + self.grad[r as usize], h + self.hess[r as usize]));
        let hist = self.histogram(&rows);
        let mut nodes = vec![Node::Leaf { value: 0.0, count: rows.len() }];
        let mut open = vec![self.open(0, rows, hist, g, h)];
        let mut leaves = 1;
        while leaves < self.params.max_leaves {
            // `open` stays in creation order; strict comparison keeps the
            // earliest-created leaf on ties
            let pick = open.iter().enumerate().filter_map(|(i, l)| l.best.map(|c| (i, c.gain))).fold(
                None,
                |acc: Option<(usize, f64)>, (i, gain)| match acc {
                    Some((_, best)) if best >= gain => acc,
                    _ => Some((i, gain)),
                },
            );
            let Some((idx, _)) = pick else { break };
            let leaf = open.remove(idx);
            let c = leaf.best.expect("picked leaf has a split");
            let feature = self.features[c.slot];
            let col = self.data.column(feature);
            let (left_rows, right_rows): (Vec<u32>, Vec<u32>) =
                leaf.rows.iter().partition(|&&r| col[r as usize] <= c.bin);

            let left = nodes.len();
            nodes[leaf.node] = Node::Split {
                feature,
                bin: c.bin,
                threshold: self.mapper.cuts[feature][c.bin as usize],
                left,
                right: left + 1,
                count: leaf.rows.len(),
                gain: c.gain,
            };
            nodes.push(Node::Leaf { value: 0.0, count: left_rows.len() });
            nodes.push(Node::Leaf { value: 0.0, count: right_rows.len() });

            let left_small = left_rows.len() <= right_rows.len();
            let small_hist = self.histogram(if left_small { &left_rows } else { &right_rows });
            let mut large_hist = leaf.hist;
            for (big, small) in large_hist.iter_mut().zip(&small_hist) {
                for (b, s) in big.iter_mut().zip(small) {
                    b.g -= s.g;
                    b.h -= s.h;
                    b.n -= s.n;
                }
            }
            let (left_hist, right_hist) = if left_small { (small_hist, large_hist) } else { (large_hist, small_hist) };
            let (rg, rh) = (leaf.g - c.left_g, leaf.h - c.left_h);
            open.push(self.open(left, left_rows, left_hist, c.left_g, c.left_h));
            open.push(self.open(left + 1, right_rows, right_hist, rg, rh));
            leaves += 1;
        }
        (nodes.len() > 1).then_some(Tree { nodes })
    }
}

/// Grows one tree on the given rows and feature subset (ascending feature
/// indices). Returns `None` when the root has no admissible split. Leaf
/// values are left at zero for the caller to fill in.
pub(crate) fn grow_tree(
    data: &BinnedMatrix,
    mapper: &BinMapper,
    grad: &[f64],
    hess: &[f64],
    rows: Vec<u32>,
    features: &[usize],
    params: GrowParams,
) -> Option<Tree> {
    Grower { data, mapper, grad, hess, features, params }.grow(rows)
}
