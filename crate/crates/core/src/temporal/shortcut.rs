//! Short-cutting realized paths into the slot graph.
//!
//! A realized path starts at the entry slot `y` and first visits the
//! favorites left of `y` in decreasing time; that prefix is `P1`, the rest is
//! `P2`. The shortcut keeps the part of `P2` that lies in the ancestor chain
//! of the final slot `z`, glued to `P1` at a parent of its first node.

use crate::error::{Error, Result};
use crate::model::TimeBlock;

use super::graph::SlotGraph;
use super::layered::LayeredGraph;

/// Splits a path into `(P1, P2)`.
pub fn split_path<'a>(favorites: &[usize], path: &'a [usize]) -> (&'a [usize], &'a [usize]) {
    if path.is_empty() {
        return (path, path);
    }
    let mut end = 1;
    while end < path.len() && path[end] < path[end - 1] && favorites.contains(&path[end]) {
        end += 1;
    }
    path.split_at(end)
}

/// Shortcut of `path` given the membership mask of `C(z)`.
pub fn shortcut_with_mask(
    graph: &SlotGraph,
    favorites: &[usize],
    path: &[usize],
    chain_of_z: &[bool],
) -> Result<Vec<usize>> {
    if path.is_empty() {
        return Err(Error::Contract("empty path".into()));
    }
    if path.iter().any(|&t| t == 0 || t > graph.len()) {
        return Err(Error::Contract("path leaves the slot range".into()));
    }
    let (p1, p2) = split_path(favorites, path);
    if p2.is_empty() {
        return Ok(p1.to_vec());
    }
    let kept: Vec<usize> = p2.iter().copied().filter(|&t| chain_of_z[t - 1]).collect();
    let s1 = *kept
        .first()
        .ok_or_else(|| Error::Contract("final slot missing from its own ancestor chain".into()))?;
    let pos = [graph.left(s1), graph.right(s1)]
        .into_iter()
        .flatten()
        .filter_map(|parent| p1.iter().position(|&t| t == parent))
        .max()
        .ok_or_else(|| {
            Error::Contract(format!(
                "no parent of slot {s1} precedes it on the favorite prefix; path does not follow the preference order"
            ))
        })?;
    let mut out = p1[..=pos].to_vec();
    out.extend(kept);
    Ok(out)
}

/// Shortcut of a unit-length realized path.
pub fn shortcut_temporal_path(
    graph: &SlotGraph,
    favorites: &[usize],
    path: &[usize],
) -> Result<Vec<usize>> {
    let z = *path
        .last()
        .ok_or_else(|| Error::Contract("empty path".into()))?;
    if z == 0 || z > graph.len() {
        return Err(Error::Contract("path leaves the slot range".into()));
    }
    shortcut_with_mask(graph, favorites, path, &graph.ancestor_mask(z))
}

/// Shortcut of a block path of a job of length `job_len`: the layer
/// `job_len` prefix up to `(z, job_len)` is short-cut inside its layer, then
/// inter-layer edges climb to the final block `(z, l)`.
pub fn shortcut_layered_path(
    graph: &LayeredGraph,
    favorites: &[usize],
    job_len: usize,
    path: &[TimeBlock],
    chain_of_z: Option<&[bool]>,
) -> Result<Vec<TimeBlock>> {
    let last = *path
        .last()
        .ok_or_else(|| Error::Contract("empty path".into()))?;
    if last.l < job_len {
        return Err(Error::Contract("final block shorter than the job".into()));
    }
    let z = last.t;
    let cut = path
        .iter()
        .position(|b| b.t == z && b.l == job_len)
        .ok_or_else(|| Error::Contract(format!("block ({z}, {job_len}) not on the path")))?;
    for l in job_len..last.l {
        if !path.contains(&TimeBlock::new(z, l)) {
            return Err(Error::Contract(format!("block ({z}, {l}) not on the path")));
        }
    }
    let starts: Vec<usize> = path[..=cut]
        .iter()
        .filter(|b| b.l == job_len)
        .map(|b| b.t)
        .collect();
    let layer = graph.layer(job_len);
    let unit = match chain_of_z {
        Some(mask) => shortcut_with_mask(layer, favorites, &starts, mask)?,
        None => shortcut_temporal_path(layer, favorites, &starts)?,
    };
    let mut out: Vec<TimeBlock> = unit
        .into_iter()
        .map(|t| TimeBlock::new(t, job_len))
        .collect();
    out.extend((job_len + 1..=last.l).map(|l| TimeBlock::new(z, l)));
    Ok(out)
}

/// True when every consecutive pair of `path` is an edge of `graph`.
pub fn path_in_graph(graph: &SlotGraph, path: &[usize]) -> bool {
    path.windows(2).all(|w| graph.has_edge(w[0], w[1]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tolerance::PriceCmp;

    #[test]
    fn path_inside_d_is_unchanged() {
        // prices 2 1 3 1 2: favorites of a job with window [1,5] are {2, 4}
        let g = SlotGraph::build(&[2.0, 1.0, 3.0, 1.0, 2.0], PriceCmp::default()).unwrap();
        let favs = [2, 4];
        // enters at 4, then favorite 2, then 1 (price 2)
        let path = [4, 2, 1];
        let out = shortcut_temporal_path(&g, &favs, &path).unwrap();
        assert!(path_in_graph(&g, &out));
        assert_eq!(out, vec![4, 2, 1]);
    }

    #[test]
    fn non_ancestors_are_removed() {
        // prices 3 1 2 1 4, job over [1,5] entering at 2
        let g = SlotGraph::build(&[3.0, 1.0, 2.0, 1.0, 4.0], PriceCmp::default()).unwrap();
        let favs = [2, 4];
        let path = [2, 4, 3, 1, 5];
        let out = shortcut_temporal_path(&g, &favs, &path).unwrap();
        assert_eq!(out[0], 2);
        assert_eq!(*out.last().unwrap(), 5);
        assert!(path_in_graph(&g, &out), "{out:?}");
        assert!(out.len() <= path.len());
    }

    #[test]
    fn single_node_path() {
        let g = SlotGraph::build(&[1.0, 2.0], PriceCmp::default()).unwrap();
        assert_eq!(shortcut_temporal_path(&g, &[1], &[1]).unwrap(), vec![1]);
        assert!(shortcut_temporal_path(&g, &[1], &[]).is_err());
    }

    #[test]
    fn path_against_preference_order_is_rejected() {
        // prices 1 5 9: a job jumping from 1 straight to 3 skipped l(3) = 2
        let g = SlotGraph::build(&[1.0, 5.0, 9.0], PriceCmp::default()).unwrap();
        let err = shortcut_temporal_path(&g, &[1], &[1, 3]);
        assert!(matches!(err, Err(Error::Contract(_))));
    }
}
