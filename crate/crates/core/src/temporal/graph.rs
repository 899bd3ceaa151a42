//! The slot graph `D` built from left, right and backward parents.
//!
//! For slot `t`:
//!
//! - `l(t) = max{s < t : p_s <= p_t}` (left parent),
//! - `r(t) = min{s > t : p_s < p_t}` (right parent),
//! - `b(t) = min{s > t : p_s = p_t}` (backward parent).
//!
//! Forward edges run `l(t) -> t` and `r(t) -> t`, backward edges `b(t) -> t`.

use std::collections::VecDeque;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::tolerance::PriceCmp;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum EdgeKind {
    /// `l(t) -> t`
    LeftForward,
    /// `r(t) -> t`
    RightForward,
    /// `b(t) -> t`
    Backward,
    /// `(t, l) -> (t, l + 1)` in the layered graph.
    InterLayer,
}

impl EdgeKind {
    pub fn code(&self) -> &'static str {
        match self {
            EdgeKind::LeftForward => "LF",
            EdgeKind::RightForward => "RF",
            EdgeKind::Backward => "B",
            EdgeKind::InterLayer => "IL",
        }
    }

    pub fn is_forward(&self) -> bool {
        matches!(self, EdgeKind::LeftForward | EdgeKind::RightForward)
    }
}

/// Parents of every slot. Slots are 1-indexed; vectors are indexed by `t - 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct SlotGraph {
    pub prices: Vec<f64>,
    pub left: Vec<Option<usize>>,
    pub right: Vec<Option<usize>>,
    pub back: Vec<Option<usize>>,
}

impl SlotGraph {
    /// Parent arrays only; no invariants are checked.
    pub fn parents(prices: &[f64], cmp: PriceCmp) -> SlotGraph {
        let n = prices.len();
        let mut left = vec![None; n];
        let mut right = vec![None; n];
        let mut back = vec![None; n];
        for i in 0..n {
            let p = prices[i];
            left[i] = (0..i).rev().find(|&s| cmp.le(prices[s], p)).map(|s| s + 1);
            right[i] = (i + 1..n).find(|&s| cmp.lt(prices[s], p)).map(|s| s + 1);
            back[i] = (i + 1..n).find(|&s| cmp.eq(prices[s], p)).map(|s| s + 1);
        }
        SlotGraph {
            prices: prices.to_vec(),
            left,
            right,
            back,
        }
    }

    /// Builds `D` and asserts the in-degree bound and parent coherence.
    pub fn build(prices: &[f64], cmp: PriceCmp) -> Result<SlotGraph> {
        let g = SlotGraph::parents(prices, cmp);
        let max_in = g.max_in_degree();
        if max_in > 3 {
            return Err(Error::Invariant(format!(
                "slot graph in-degree {max_in} exceeds 3"
            )));
        }
        if let Some(t) = g.incoherent_slot() {
            return Err(Error::Invariant(format!(
                "parents of slot {t} are not coherent"
            )));
        }
        Ok(g)
    }

    pub fn len(&self) -> usize {
        self.prices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.prices.is_empty()
    }

    pub fn left(&self, t: usize) -> Option<usize> {
        self.left[t - 1]
    }

    pub fn right(&self, t: usize) -> Option<usize> {
        self.right[t - 1]
    }

    pub fn back(&self, t: usize) -> Option<usize> {
        self.back[t - 1]
    }

    /// Edges into `t`.
    pub fn in_edges(&self, t: usize) -> Vec<(usize, EdgeKind)> {
        let mut out = Vec::with_capacity(3);
        if let Some(s) = self.left(t) {
            out.push((s, EdgeKind::LeftForward));
        }
        if let Some(s) = self.right(t) {
            out.push((s, EdgeKind::RightForward));
        }
        if let Some(s) = self.back(t) {
            out.push((s, EdgeKind::Backward));
        }
        out
    }

    pub fn in_degree(&self, t: usize) -> usize {
        self.in_edges(t).len()
    }

    pub fn max_in_degree(&self) -> usize {
        (1..=self.len())
            .map(|t| self.in_degree(t))
            .max()
            .unwrap_or(0)
    }

    /// All edges `(src, dst, kind)` in slot order of `dst`.
    pub fn edges(&self) -> Vec<(usize, usize, EdgeKind)> {
        (1..=self.len())
            .flat_map(|t| self.in_edges(t).into_iter().map(move |(s, k)| (s, t, k)))
            .collect()
    }

    pub fn has_edge(&self, src: usize, dst: usize) -> bool {
        dst >= 1 && dst <= self.len() && self.in_edges(dst).iter().any(|&(s, _)| s == src)
    }

    pub fn has_forward_edge(&self, src: usize, dst: usize) -> bool {
        dst >= 1
            && dst <= self.len()
            && (self.left(dst) == Some(src) || self.right(dst) == Some(src))
    }

    /// First slot whose parents violate `l(t) = l(r(t))` or `r(t) = r(l(t))`.
    pub fn incoherent_slot(&self) -> Option<usize> {
        (1..=self.len()).find(|&t| match (self.left(t), self.right(t)) {
            (Some(l), Some(r)) => self.left(r) != Some(l) && self.right(l) != Some(r),
            _ => false,
        })
    }

    /// Forward-only out-neighbors.
    pub fn forward_children(&self) -> Vec<Vec<usize>> {
        let mut ch = vec![Vec::new(); self.len()];
        for t in 1..=self.len() {
            if let Some(l) = self.left(t) {
                ch[l - 1].push(t);
            }
            if let Some(r) = self.right(t) {
                ch[r - 1].push(t);
            }
        }
        ch
    }

    /// Ancestors of `t` in the forward-only graph, ordered so that each
    /// element reaches the next, ending at `t`.
    pub fn ancestors(&self, t: usize) -> Vec<usize> {
        // collect the set by walking forward edges backwards
        let mut seen = vec![false; self.len()];
        let mut queue = VecDeque::from([t]);
        seen[t - 1] = true;
        let mut set = Vec::new();
        while let Some(s) = queue.pop_front() {
            set.push(s);
            for p in [self.left(s), self.right(s)].into_iter().flatten() {
                if !seen[p - 1] {
                    seen[p - 1] = true;
                    queue.push_back(p);
                }
            }
        }
        // topological order of the induced subgraph (Kahn, smallest first)
        let mut indeg: Vec<usize> = vec![0; self.len()];
        for &s in &set {
            for p in [self.left(s), self.right(s)].into_iter().flatten() {
                if seen[p - 1] {
                    indeg[s - 1] += 1;
                }
            }
        }
        let children = self.forward_children();
        let mut ready: std::collections::BTreeSet<usize> =
            set.iter().copied().filter(|&s| indeg[s - 1] == 0).collect();
        let mut order = Vec::with_capacity(set.len());
        while let Some(&s) = ready.iter().next() {
            ready.remove(&s);
            order.push(s);
            for &c in &children[s - 1] {
                if seen[c - 1] {
                    indeg[c - 1] -= 1;
                    if indeg[c - 1] == 0 {
                        ready.insert(c);
                    }
                }
            }
        }
        order
    }

    /// Membership table of `C(t)`.
    pub fn ancestor_mask(&self, t: usize) -> Vec<bool> {
        let mut mask = vec![false; self.len()];
        for s in self.ancestors(t) {
            mask[s - 1] = true;
        }
        mask
    }

    /// Ancestor masks for every slot; row `t - 1` is `C(t)`.
    pub fn all_ancestor_masks(&self) -> Vec<Vec<bool>> {
        (1..=self.len()).map(|t| self.ancestor_mask(t)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn g(p: &[f64]) -> SlotGraph {
        SlotGraph::build(p, PriceCmp::default()).unwrap()
    }

    #[test]
    fn parents_example() {
        let d = g(&[3.0, 1.0, 2.0, 1.0]);
        assert_eq!(d.left, vec![None, None, Some(2), Some(2)]);
        assert_eq!(d.right, vec![Some(2), None, Some(4), None]);
        assert_eq!(d.back, vec![None, Some(4), None, None]);
    }

    #[test]
    fn increasing_prices() {
        let d = g(&[1.0, 2.0, 3.0]);
        assert_eq!(d.left, vec![None, Some(1), Some(2)]);
        assert!(d.right.iter().all(Option::is_none));
        assert!(d.back.iter().all(Option::is_none));
    }

    #[test]
    fn constant_prices() {
        let d = g(&[1.0, 1.0, 1.0]);
        assert_eq!(d.left, vec![None, Some(1), Some(2)]);
        assert_eq!(d.back, vec![Some(2), Some(3), None]);
        assert!(d.right.iter().all(Option::is_none));
    }

    #[test]
    fn single_slot_has_no_edges() {
        assert!(g(&[4.0]).edges().is_empty());
    }

    #[test]
    fn ancestors_example() {
        let d = g(&[3.0, 1.0, 2.0, 1.0]);
        let c = d.ancestors(4);
        assert_eq!(*c.last().unwrap(), 4);
        assert_eq!(c, vec![2, 4]);
        // r(3) = 4 puts 4 above 3, not the other way round
        assert_eq!(d.ancestors(3), vec![2, 4, 3]);
        assert_eq!(d.ancestors(1), vec![2, 1]);
        assert_eq!(g(&[1.0, 5.0]).ancestors(1), vec![1]);
    }

    #[test]
    fn ties_within_tolerance() {
        let d = SlotGraph::build(&[1.0, 1.0 + 1e-12, 1.0], PriceCmp::new(1e-9)).unwrap();
        assert_eq!(d.back, vec![Some(2), Some(3), None]);
        assert!(d.right.iter().all(Option::is_none));
    }
}
