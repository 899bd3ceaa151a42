//! Min-work condition, flow decomposition, cycle removal and short-cutting.
//!
//! A multigraph `G'` of forwards is realizable by valid paths for arrivals
//! `a` exactly when every node satisfies
//! `out(i) <= max(0, in(i) + a_i - B_i)`.

use crate::error::{Error, Result};

use super::network::{Multigraph, PathCollection};

pub fn validate_min_work(g: &Multigraph, arrivals: &[usize], capacities: &[usize]) -> Result<()> {
    let out = g.out_degrees();
    let inn = g.in_degrees();
    for i in 0..g.n {
        let allowed = (inn[i] + arrivals[i]).saturating_sub(capacities[i]);
        if out[i] > allowed {
            return Err(Error::MinWork {
                node: i,
                out: out[i],
                inn: inn[i],
                arrivals: arrivals[i],
                capacity: capacities[i],
            });
        }
    }
    Ok(())
}

/// Decomposes `g` into one walk per arrival so that the walks' edge union is
/// exactly `g` and node `i` is the last node of `dep_i = a_i + in - out`
/// walks.
pub fn decompose_flow(
    g: &Multigraph,
    arrivals: &[usize],
    capacities: &[usize],
) -> Result<PathCollection> {
    validate_min_work(g, arrivals, capacities)?;
    let n = g.n;
    let out = g.out_degrees();
    let inn = g.in_degrees();
    let mut dep: Vec<usize> = (0..n).map(|i| arrivals[i] + inn[i] - out[i]).collect();
    let mut rem: Vec<Vec<(usize, usize)>> = vec![Vec::new(); n];
    for (&(i, j), &k) in &g.mult {
        rem[i].push((j, k));
    }

    let mut paths: Vec<Vec<usize>> = Vec::new();
    for i in 0..n {
        for _ in 0..arrivals[i] {
            let mut cur = i;
            let mut path = vec![i];
            loop {
                if dep[cur] > 0 {
                    dep[cur] -= 1;
                    break;
                }
                let slot = rem[cur].iter_mut().find(|e| e.1 > 0).ok_or_else(|| {
                    Error::Invariant(format!("flow conservation broken at node {cur}"))
                })?;
                slot.1 -= 1;
                cur = slot.0;
                path.push(cur);
            }
            paths.push(path);
        }
    }

    // whatever is left is a circulation; splice each cycle into a walk that
    // visits one of its nodes
    loop {
        let Some(start) = (0..n).find(|&i| rem[i].iter().any(|e| e.1 > 0)) else {
            break;
        };
        let mut walk = vec![start];
        let mut pos_of = vec![usize::MAX; n];
        pos_of[start] = 0;
        let cycle = loop {
            let cur = *walk.last().unwrap();
            let next = rem[cur]
                .iter()
                .find(|e| e.1 > 0)
                .map(|e| e.0)
                .ok_or_else(|| Error::Invariant("leftover edges are not a circulation".into()))?;
            if pos_of[next] != usize::MAX {
                let mut cyc = walk[pos_of[next]..].to_vec();
                cyc.push(next);
                break cyc;
            }
            pos_of[next] = walk.len();
            walk.push(next);
        };
        for w in cycle.windows(2) {
            let e = rem[w[0]]
                .iter_mut()
                .find(|e| e.0 == w[1] && e.1 > 0)
                .unwrap();
            e.1 -= 1;
        }
        let anchor = cycle[0];
        let (pi, pos) = paths
            .iter()
            .enumerate()
            .find_map(|(pi, p)| p.iter().position(|&x| x == anchor).map(|pos| (pi, pos)))
            .ok_or_else(|| Error::Invariant(format!("no walk visits cycle node {anchor}")))?;
        let tail = paths[pi].split_off(pos + 1);
        paths[pi].extend_from_slice(&cycle[1..]);
        paths[pi].extend(tail);
    }

    Ok(PathCollection {
        arrivals: arrivals.to_vec(),
        paths,
    })
}

/// Removes directed cycles from the union of the paths, one copy at a time,
/// and re-decomposes what remains.
pub fn remove_cycles(pc: &PathCollection, capacities: &[usize]) -> Result<PathCollection> {
    let mut g = pc.multigraph();
    while let Some(cyc) = g.find_cycle() {
        for k in 0..cyc.len() {
            let a = cyc[k];
            let b = cyc[(k + 1) % cyc.len()];
            g.remove(a, b, 1);
        }
    }
    decompose_flow(&g, &pc.arrivals, capacities)
}

/// Removes the vertex at `position` from path `index`, joining its
/// neighbors. A join that would revisit the same node collapses it.
pub fn shortcut_path(pc: &PathCollection, index: usize, position: usize) -> Result<PathCollection> {
    let path = pc
        .paths
        .get(index)
        .ok_or_else(|| Error::Contract(format!("no path {index}")))?;
    if position == 0 || position + 1 >= path.len() {
        return Err(Error::Contract(format!(
            "position {position} is not interior to a path of {} nodes",
            path.len()
        )));
    }
    let mut p = path.clone();
    p.remove(position);
    if p[position - 1] == p[position] {
        p.remove(position);
    }
    let mut out = pc.clone();
    out.paths[index] = p;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn min_work_examples() {
        // in=2, a=1, B=2, out=1
        let mut g = Multigraph::new(3);
        g.add(1, 0, 1);
        g.add(2, 0, 1);
        g.add(0, 1, 1);
        let a = [1, 5, 5];
        assert!(validate_min_work(&g, &a, &[2, 1, 1]).is_ok());
        // in=0, a=1, B=2, out=1
        let mut h = Multigraph::new(2);
        h.add(0, 1, 1);
        assert!(matches!(
            validate_min_work(&h, &[1, 0], &[2, 1]),
            Err(Error::MinWork { node: 0, .. })
        ));
        assert!(validate_min_work(&Multigraph::new(2), &[0, 0], &[1, 1]).is_ok());
    }

    #[test]
    fn parallel_edges_decompose() {
        let mut g = Multigraph::new(2);
        g.add(0, 1, 2);
        let pc = decompose_flow(&g, &[3, 0], &[1, 1]).unwrap();
        let mut paths = pc.paths.clone();
        paths.sort();
        assert_eq!(paths, vec![vec![0], vec![0, 1], vec![0, 1]]);
    }

    #[test]
    fn arrivals_only() {
        let pc = decompose_flow(&Multigraph::new(2), &[2, 1], &[1, 1]).unwrap();
        assert_eq!(pc.paths, vec![vec![0], vec![0], vec![1]]);
    }

    #[test]
    fn cycles_are_spliced() {
        // 0 <-> 1 both overloaded
        let mut g = Multigraph::new(2);
        g.add(0, 1, 1);
        g.add(1, 0, 1);
        let pc = decompose_flow(&g, &[2, 2], &[1, 1]).unwrap();
        assert_eq!(pc.multigraph(), g);
        assert_eq!(pc.paths.len(), 4);
    }

    #[test]
    fn two_cycle_removal_keeps_overloads() {
        let pc = PathCollection::from_paths(2, vec![vec![0], vec![0, 1], vec![1], vec![1, 0]]);
        let caps = [1, 1];
        let before = pc.overloaded(&caps);
        let after = remove_cycles(&pc, &caps).unwrap();
        assert!(after.multigraph().find_cycle().is_none());
        assert_eq!(after.overloaded(&caps), before);
        assert_eq!(before, vec![true, true]);
    }

    #[test]
    fn shortcut_examples() {
        let pc = PathCollection::from_paths(4, vec![vec![1, 2, 3], vec![2], vec![2]]);
        let out = shortcut_path(&pc, 0, 1).unwrap();
        assert_eq!(out.paths[0], vec![1, 3]);
        assert_eq!(out.loads()[2], 2);
        let short = PathCollection::from_paths(3, vec![vec![1, 2]]);
        assert!(matches!(
            shortcut_path(&short, 0, 1),
            Err(Error::Contract(_))
        ));
        assert!(matches!(
            shortcut_path(&short, 0, 0),
            Err(Error::Contract(_))
        ));
    }
}
