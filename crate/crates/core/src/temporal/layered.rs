//! The layered block graph: one slot graph per block length, built on the
//! block prices `p_t(l)`, plus inter-layer edges `(t, l) -> (t, l + 1)`.

use crate::error::{Error, Result};
use crate::model::{PriceSchedule, TimeBlock};
use crate::tolerance::PriceCmp;

use super::graph::{EdgeKind, SlotGraph};

#[derive(Debug, Clone, PartialEq)]
pub struct LayeredGraph {
    pub horizon: usize,
    /// Layer `l` lives at index `l - 1` and covers starts `1..=H-l+1`.
    pub layers: Vec<SlotGraph>,
}

impl LayeredGraph {
    pub fn build(prices: &PriceSchedule, l_max: usize, cmp: PriceCmp) -> Result<LayeredGraph> {
        let h = prices.horizon();
        let mut layers = Vec::with_capacity(l_max);
        for l in 1..=l_max.min(h) {
            let block: Vec<f64> = (1..=h + 1 - l)
                .map(|t| prices.block_price(t, l))
                .collect::<Result<_>>()?;
            layers.push(SlotGraph::build(&block, cmp)?);
        }
        let g = LayeredGraph { horizon: h, layers };
        let max_in = g.max_in_degree();
        if max_in > 4 {
            return Err(Error::Invariant(format!(
                "layered graph in-degree {max_in} exceeds 4"
            )));
        }
        Ok(g)
    }

    pub fn l_max(&self) -> usize {
        self.layers.len()
    }

    pub fn layer(&self, l: usize) -> &SlotGraph {
        &self.layers[l - 1]
    }

    pub fn contains(&self, b: TimeBlock) -> bool {
        b.l >= 1 && b.l <= self.l_max() && b.t >= 1 && b.t <= self.layer(b.l).len()
    }

    pub fn in_degree(&self, b: TimeBlock) -> usize {
        let inter = usize::from(b.l > 1 && self.contains(TimeBlock::new(b.t, b.l - 1)));
        self.layer(b.l).in_degree(b.t) + inter
    }

    pub fn max_in_degree(&self) -> usize {
        (1..=self.l_max())
            .flat_map(|l| (1..=self.layer(l).len()).map(move |t| TimeBlock::new(t, l)))
            .map(|b| self.in_degree(b))
            .max()
            .unwrap_or(0)
    }

    pub fn has_edge(&self, a: TimeBlock, b: TimeBlock) -> bool {
        if !self.contains(a) || !self.contains(b) {
            return false;
        }
        if a.l == b.l {
            self.layer(a.l).has_edge(a.t, b.t)
        } else {
            a.t == b.t && a.l + 1 == b.l
        }
    }

    pub fn edges(&self) -> Vec<(TimeBlock, TimeBlock, EdgeKind)> {
        let mut out = Vec::new();
        for l in 1..=self.l_max() {
            for (s, t, k) in self.layer(l).edges() {
                out.push((TimeBlock::new(s, l), TimeBlock::new(t, l), k));
            }
            if l > 1 {
                for t in 1..=self.layer(l).len() {
                    out.push((
                        TimeBlock::new(t, l - 1),
                        TimeBlock::new(t, l),
                        EdgeKind::InterLayer,
                    ));
                }
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_layer_matches_slot_graph() {
        let p = PriceSchedule::new(vec![3.0, 1.0, 2.0, 1.0]);
        let g = LayeredGraph::build(&p, 1, PriceCmp::default()).unwrap();
        let d = SlotGraph::build(&p.prices, PriceCmp::default()).unwrap();
        assert_eq!(g.layers, vec![d]);
    }

    #[test]
    fn inter_layer_edges() {
        let p = PriceSchedule::new(vec![1.0, 2.0, 3.0]);
        let g = LayeredGraph::build(&p, 3, PriceCmp::default()).unwrap();
        assert_eq!(g.layer(2).len(), 2);
        assert_eq!(g.layer(3).len(), 1);
        assert!(g.has_edge(TimeBlock::new(1, 1), TimeBlock::new(1, 2)));
        assert!(!g.has_edge(TimeBlock::new(3, 1), TimeBlock::new(3, 2)));
        assert!(g.max_in_degree() <= 4);
    }
}
