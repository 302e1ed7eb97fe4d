//! Brute-force chain distances: Dijkstra over explicit closed cells of a
//! window, adjacency through shared vertex classes. Slow but independent of
//! the flood, and the route used for `n > 2`.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap};

use crate::gluing::{GridGluer, GridPoint};
use crate::lattice::{cells_in_box, BoxQ, CellId, ExactPoint, SystemParams};
use crate::{LabError, Q};

/// Chain distance between the classes of `a` and `b` at relation level `j`,
/// over chains of closed top cells of generations `g_lo..=g_hi` meeting `window`.
/// `None` if no chain exists inside the window.
pub fn oracle_dist(
    params: &SystemParams,
    a: &[ExactPoint],
    b: &[ExactPoint],
    j: i32,
    g_lo: i32,
    g_hi: i32,
    window: &BoxQ,
) -> Result<Option<Q>, LabError> {
    let r = j.max(g_hi);
    let gl = GridGluer::new(params, r);
    let ca: Vec<ExactPoint> = a
        .iter()
        .map(|p| crate::gluing::coset(params, p, j).map(|c| c.members))
        .collect::<Result<Vec<_>, _>>()?
        .concat();
    let cb: Vec<ExactPoint> = b
        .iter()
        .map(|p| crate::gluing::coset(params, p, j).map(|c| c.members))
        .collect::<Result<Vec<_>, _>>()?
        .concat();
    if ca.iter().any(|p| cb.contains(p)) {
        return Ok(Some(Q::from_integer(0)));
    }
    let mut cells: Vec<CellId> = Vec::new();
    for g in g_lo..=g_hi {
        cells.extend(cells_in_box(params, window, g, params.n)?);
    }
    let mut class_of: HashMap<GridPoint, GridPoint> = HashMap::new();
    let mut cell_classes: Vec<Vec<GridPoint>> = Vec::with_capacity(cells.len());
    let mut by_class: HashMap<GridPoint, Vec<usize>> = HashMap::new();
    for (idx, c) in cells.iter().enumerate() {
        let mut keys = Vec::new();
        for v in crate::complex::refine_vertices(params, c, r) {
            let gp = GridPoint { x: v.anchor[0], y: v.anchor[1..].to_vec() };
            let key = match class_of.get(&gp) {
                Some(k) => k.clone(),
                None => {
                    let cs = gl.coset(&gp, j)?;
                    let k = cs[0].clone();
                    for m in cs {
                        class_of.insert(m, k.clone());
                    }
                    k
                }
            };
            keys.push(key.clone());
            by_class.entry(key).or_default().push(idx);
        }
        keys.sort();
        keys.dedup();
        cell_classes.push(keys);
    }
    let weight = |c: &CellId| params.weight(c.gen);
    let mut dist: Vec<Option<Q>> = vec![None; cells.len()];
    let mut heap = BinaryHeap::new();
    for (idx, c) in cells.iter().enumerate() {
        if ca.iter().any(|p| params.contains_point(c, p)) {
            dist[idx] = Some(weight(c));
            heap.push(Reverse((weight(c), idx)));
        }
    }
    let is_target: Vec<bool> = cells
        .iter()
        .map(|c| cb.iter().any(|p| params.contains_point(c, p)))
        .collect();
    let mut done = vec![false; cells.len()];
    while let Some(Reverse((d, idx))) = heap.pop() {
        if done[idx] {
            continue;
        }
        done[idx] = true;
        if is_target[idx] {
            return Ok(Some(d));
        }
        for key in &cell_classes[idx] {
            for &nb in &by_class[key] {
                if done[nb] {
                    continue;
                }
                let nd = d + weight(&cells[nb]);
                if dist[nb].is_none_or(|old| nd < old) {
                    dist[nb] = Some(nd);
                    heap.push(Reverse((nd, nb)));
                }
            }
        }
    }
    Ok(None)
}
