//! Chain pseudodistances `d_j`, brackets for the limit distance, the partial
//! snowflake comparison and the mixed-generation metric.

pub mod flood;
pub mod oracle;

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use num_traits::{Signed, Zero};

use crate::complex::{self, QuotientPoint};
use crate::gluing;
use crate::lattice::{floor_q, qpow, top_cells_containing, BoxQ, CellId, ExactPoint, SystemParams};
use crate::{LabError, Q};
use flood::{FaceSet, Flood, FloodSpec};

/// A chain of closed top cells.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Chain {
    pub cells: Vec<CellId>,
    pub level: i32,
}

impl Chain {
    pub fn length(&self, params: &SystemParams) -> Q {
        self.cells.iter().map(|c| params.weight(c.gen)).sum()
    }

    pub fn generation(&self) -> Option<i32> {
        self.cells.iter().map(|c| c.gen).max()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DistBracket {
    pub lo: Q,
    pub hi: Q,
    /// `(k, d_k(p, p'), set distance of the deepest cosets at level k)`.
    pub levels: Vec<(i32, Q, Q)>,
}

/// Upper bound `D` on the chain distance from explicit 1- or 2-cell chains,
/// and the coarsest generation worth using (`m^-g <= D`).
pub fn cap(params: &SystemParams, a: &[ExactPoint], b: &[ExactPoint], j: i32) -> (Q, i32) {
    let mut best: Option<Q> = None;
    for p in a {
        for q in b {
            for g in (j - 60..=j).rev() {
                let w = params.weight(g);
                if best.is_some_and(|d| w >= d) {
                    break;
                }
                let cp = top_cells_containing(params, p, g);
                let cq = top_cells_containing(params, q, g);
                let mut same = false;
                let mut adj = false;
                for x in &cp {
                    for y in &cq {
                        if x == y {
                            same = true;
                        }
                        if x.anchor.iter().zip(&y.anchor).all(|(u, v)| (u - v).abs() <= 1) {
                            adj = true;
                        }
                    }
                }
                let cand = if same {
                    Some(w)
                } else if adj {
                    Some(w * Q::from_integer(2))
                } else {
                    None
                };
                if let Some(c) = cand {
                    if best.is_none_or(|d| c < d) {
                        best = Some(c);
                    }
                }
                if same {
                    break;
                }
            }
        }
    }
    let d = best.expect("points too far apart for the generation search");
    (d, g_floor(params, &d))
}

/// Smallest `g` with `m^-g <= d`.
pub fn g_floor(params: &SystemParams, d: &Q) -> i32 {
    let mut g = 0;
    while params.weight(g) > *d {
        g += 1;
    }
    while params.weight(g - 1) <= *d {
        g -= 1;
    }
    g
}

/// Distance between the classes of two point sets: relation level `j`, chain
/// cells of generations `<= g_hi` (default `j`).
pub fn set_dist(
    params: &SystemParams,
    a: &[ExactPoint],
    b: &[ExactPoint],
    j: i32,
    g_hi: i32,
) -> Result<Q, LabError> {
    let (d, g_lo) = cap(params, a, b, g_hi);
    if same_class(params, a, b, j)? {
        return Ok(Q::zero());
    }
    if params.n == 2 {
        let k = j.max(g_hi);
        let mut spec = FloodSpec::new(j, k, g_lo, g_hi);
        let unit = qpow(params.m, -k);
        spec.max_cost = Some((d / unit).to_integer());
        let mut fl = Flood::new(params, spec)?;
        let start = FaceSet::from_points(params, a, k);
        let target = FaceSet::from_points(params, b, k);
        let res = fl.run(&start, Some(&target))?;
        let c = res.hit.ok_or_else(|| LabError::InvalidArgument("cap not reached".into()))?;
        Ok(Q::from_integer(c) * unit)
    } else {
        let window = oracle_window(params, a, b, &d, g_lo, j);
        oracle::oracle_dist(params, a, b, j, g_lo, g_hi, &window)?
            .ok_or_else(|| LabError::InvalidArgument("oracle window too small".into()))
    }
}

/// Some point of `a` is `R_j`-equivalent to some point of `b`.
pub fn same_class(params: &SystemParams, a: &[ExactPoint], b: &[ExactPoint], j: i32) -> Result<bool, LabError> {
    for p in a {
        let c = gluing::coset(params, p, j)?;
        if b.iter().any(|q| c.contains(q)) {
            return Ok(true);
        }
    }
    Ok(false)
}

/// Window for the brute-force route: bounding box inflated by `D` in `x`
/// and by `D` plus two coarse jumps in the other coordinates.
pub fn oracle_window(params: &SystemParams, a: &[ExactPoint], b: &[ExactPoint], d: &Q, g_lo: i32, j: i32) -> BoxQ {
    let n = params.n;
    let mut lo = a[0].coords.clone();
    let mut hi = a[0].coords.clone();
    for p in a.iter().chain(b) {
        for i in 0..n {
            if p.coords[i] < lo[i] {
                lo[i] = p.coords[i];
            }
            if p.coords[i] > hi[i] {
                hi[i] = p.coords[i];
            }
        }
    }
    let shift: i64 = params.rules.iter().flat_map(|r| r.shift.iter().map(|s| s.abs())).max().unwrap_or(0);
    let jump = qpow(params.mv, -g_lo.min(j)) * Q::from_integer(2 * shift as i128);
    for i in 0..n {
        let pad = if i == 0 { *d } else { *d + jump };
        lo[i] -= pad;
        hi[i] += pad;
    }
    BoxQ::new(lo, hi)
}

/// `d_j(p, p')`.
pub fn chain_dist(params: &SystemParams, p: &QuotientPoint, q: &QuotientPoint, j: i32) -> Result<Q, LabError> {
    set_dist(params, &[p.rep().clone()], &[q.rep().clone()], j, j)
}

/// `d_j(p, p')` with an explicit optimal chain.
pub fn chain_witness(params: &SystemParams, p: &ExactPoint, q: &ExactPoint, j: i32) -> Result<(Q, Chain), LabError> {
    let (d, g_lo) = cap(params, &[p.clone()], &[q.clone()], j);
    let k = j;
    let unit = qpow(params.m, -k);
    let mut spec = FloodSpec::new(j, k, g_lo, j);
    spec.max_cost = Some((d / unit).to_integer());
    let mut fl = Flood::new(params, spec)?;
    let target = FaceSet::from_points(params, &[q.clone()], k);
    let res = fl.run(&FaceSet::from_points(params, &[p.clone()], k), Some(&target))?;
    let c = res.hit.ok_or_else(|| LabError::InvalidArgument("cap not reached".into()))?;
    // a face of the target class reached at cost c
    let (_, last) = res.layers.last().unwrap();
    let mut hit_face = None;
    for (col, ivs) in &last.cols {
        if let Some(t) = target.cols.get(col) {
            for (a, _) in t {
                if ivs.iter().any(|(lo, hi)| lo <= a && a <= hi) {
                    hit_face = Some((*col, *a));
                }
            }
        }
    }
    let (col, y) = hit_face.ok_or_else(|| LabError::InvalidArgument("target face lost".into()))?;
    let cells = fl
        .witness(&res, col, y, c)
        .ok_or_else(|| LabError::InvalidArgument("witness backtrack failed".into()))?
        .into_iter()
        .map(|(g, a, b)| CellId::top(g, vec![a, b]))
        .collect();
    Ok((Q::from_integer(c) * unit, Chain { cells, level: j }))
}

/// Independent validity check of a chain joining `p` to `q` in `X_j`.
pub fn verify_chain(params: &SystemParams, chain: &Chain, p: &ExactPoint, q: &ExactPoint) -> Result<bool, LabError> {
    let j = chain.level;
    let cp = gluing::coset(params, p, j)?;
    let cq = gluing::coset(params, q, j)?;
    if chain.cells.is_empty() {
        return Ok(cp.members.iter().any(|m| cq.contains(m)));
    }
    if chain.cells.iter().any(|c| c.gen > j) {
        return Ok(false);
    }
    let first = &chain.cells[0];
    let last = chain.cells.last().unwrap();
    if !cp.members.iter().any(|m| params.contains_point(first, m)) {
        return Ok(false);
    }
    if !cq.members.iter().any(|m| params.contains_point(last, m)) {
        return Ok(false);
    }
    for w in chain.cells.windows(2) {
        if !complex::images_meet(params, &w[0], &w[1], j)? {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Mixed-generation metric on `X_j`: chains may use cells down to
/// generation `j + depth` at weight `m^-gen`. Truncating the depth only
/// removes competitors, so this is an upper bound that decreases in `depth`.
pub fn dj_metric(params: &SystemParams, p: &QuotientPoint, q: &QuotientPoint, j: i32, depth: i32) -> Result<Q, LabError> {
    set_dist(params, &[p.rep().clone()], &[q.rep().clone()], j, j + depth)
}

/// Bracket for the limit distance from levels `levels` (the deepest is `K`):
/// `hi` is the least set distance between the level-`K` cosets, `lo` the
/// largest `d_k(p, p') - 2 m^-k`.
pub fn dinf_bracket(params: &SystemParams, p: &ExactPoint, q: &ExactPoint, levels: &[i32]) -> Result<DistBracket, LabError> {
    let kk = *levels.iter().max().expect("no levels");
    let a = gluing::coset(params, p, kk)?.members;
    let b = gluing::coset(params, q, kk)?.members;
    if a.iter().any(|x| b.contains(x)) {
        return Ok(DistBracket { lo: Q::zero(), hi: Q::zero(), levels: vec![] });
    }
    let mut lo = Q::zero();
    let mut hi: Option<Q> = None;
    let mut rows = Vec::new();
    for &k in levels {
        let d_rep = set_dist(params, &[p.clone()], &[q.clone()], k, k)?;
        let d_set = set_dist(params, &a, &b, k, k)?;
        let l = d_rep - params.weight(k) * Q::from_integer(2);
        if l > lo {
            lo = l;
        }
        if hi.is_none_or(|h| d_set < h) {
            hi = Some(d_set);
        }
        rows.push((k, d_rep, d_set));
    }
    Ok(DistBracket { lo, hi: hi.unwrap(), levels: rows })
}

/// Least `j` in `[lo, hi]` where the level-`kk` cosets of `p`, `q` do not meet
/// adjacent cells of `X_j`; `None` stands for infinity.
pub fn cell_dist_exponent(
    params: &SystemParams,
    p: &ExactPoint,
    q: &ExactPoint,
    lo: i32,
    hi: i32,
    kk: i32,
) -> Result<Option<i32>, LabError> {
    let a = gluing::coset(params, p, kk)?.members;
    let b = gluing::coset(params, q, kk)?.members;
    if a.iter().any(|x| b.contains(x)) {
        return Ok(None);
    }
    for j in lo..=hi {
        if !meet_adjacent(params, &a, &b, j)? {
            return Ok(Some(j));
        }
    }
    Ok(None)
}

/// Some closed top cells of `Y_j` through members of `a` and `b` have
/// intersecting images in `X_j`.
pub fn meet_adjacent(params: &SystemParams, a: &[ExactPoint], b: &[ExactPoint], j: i32) -> Result<bool, LabError> {
    let mut ka: BTreeSet<CellId> = BTreeSet::new();
    for p in a {
        for c in top_cells_containing(params, p, j) {
            ka.extend(complex::vertex_classes(params, &c, j)?);
        }
    }
    for q in b {
        for c in top_cells_containing(params, q, j) {
            for v in complex::vertex_classes(params, &c, j)? {
                if ka.contains(&v) {
                    return Ok(true);
                }
            }
        }
    }
    Ok(false)
}

/// Certified interval around a float value.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn point(v: f64) -> Self {
        Interval { lo: v, hi: v }
    }

    fn widen(v: f64, ulps: f64) -> Self {
        let e = v.abs() * f64::EPSILON * ulps;
        Interval { lo: v - e, hi: v + e }
    }

    pub fn add(self, o: Interval) -> Interval {
        Interval { lo: self.lo + o.lo, hi: self.hi + o.hi }.pad()
    }

    fn pad(self) -> Interval {
        Interval {
            lo: self.lo - self.lo.abs() * f64::EPSILON,
            hi: self.hi + self.hi.abs() * f64::EPSILON,
        }
    }

    pub fn mid(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }
}

/// Partial snowflake distance `|dx| + sum |dy_i|^alpha`, `alpha = log m / log m_v`.
pub fn snowflake_dist(params: &SystemParams, p: &ExactPoint, q: &ExactPoint) -> Interval {
    let alpha = params.alpha();
    let dx = (p.coords[0] - q.coords[0]).abs();
    let mut acc = Interval::widen(crate::qf(&dx), 1.0);
    for i in 1..params.n {
        let dy = crate::qf(&(p.coords[i] - q.coords[i]).abs());
        if dy == 0.0 {
            continue;
        }
        // exp/ln each lose at most a few ulps
        acc = acc.add(Interval::widen((alpha * dy.ln()).exp(), 8.0));
    }
    acc
}

/// Combinatorial radius `N1` and cell count `N2` of the ball `B(p, C m^-j)`
/// under `d_j`.
pub fn comb_ball_bound(params: &SystemParams, p: &ExactPoint, c: Q, j: i32) -> Result<(usize, usize), LabError> {
    if params.n != 2 {
        return Err(LabError::InvalidArgument("planar only".into()));
    }
    let r = c * params.weight(j);
    let k = j;
    let unit = qpow(params.m, -k);
    let g_lo = if r.is_zero() { j } else { g_floor(params, &r).min(j) };
    let mut spec = FloodSpec::new(j, k, g_lo, j);
    spec.max_cost = Some(floor_q(&(r / unit)));
    let mut fl = Flood::new(params, spec)?;
    let res = fl.run(&FaceSet::from_points(params, &[p.clone()], k), None)?;
    let ball = res.ball(floor_q(&(r / unit)));
    // BFS over top cells of X_j from the closed star of p
    let star: BTreeSet<CellId> = gluing::coset(params, p, j)?
        .members
        .iter()
        .flat_map(|m| top_cells_containing(params, m, j))
        .map(|c| complex::class_key(params, &c, j))
        .collect::<Result<_, _>>()?;
    let mut depth: BTreeMap<CellId, usize> = BTreeMap::new();
    let mut queue = VecDeque::new();
    for s in &star {
        depth.insert(s.clone(), 1);
        queue.push_back(s.clone());
    }
    // cells of X_j meeting the ball
    let mut touched: BTreeSet<CellId> = BTreeSet::new();
    let mut face_cells: Vec<Vec<CellId>> = Vec::new();
    for (col, ivs) in &ball.cols {
        for (y0, y1) in ivs {
            for y in *y0..=*y1 {
                let a: Vec<i64> = if col % 2 == 0 { vec![col / 2 - 1, col / 2] } else { vec![(col - 1) / 2] };
                let b: Vec<i64> = if y % 2 == 0 { vec![y / 2 - 1, y / 2] } else { vec![(y - 1) / 2] };
                let mut cs = Vec::new();
                for x in &a {
                    for yy in &b {
                        let key = complex::class_key(params, &CellId::top(j, vec![*x, *yy]), j)?;
                        touched.insert(key.clone());
                        cs.push(key);
                    }
                }
                face_cells.push(cs);
            }
        }
    }
    let only_p = r.is_zero();
    while let Some(cur) = queue.pop_front() {
        if touched.iter().all(|t| depth.contains_key(t)) {
            break;
        }
        let d = depth[&cur];
        let qc = complex::QCell::new(params, &cur, j)?;
        for (nb, _) in complex::adjacent_qcells(params, &qc)? {
            if !depth.contains_key(&nb.rep) {
                depth.insert(nb.rep.clone(), d + 1);
                queue.push_back(nb.rep);
            }
        }
    }
    let n1 = if only_p {
        0
    } else {
        face_cells
            .iter()
            .map(|cs| cs.iter().filter_map(|c| depth.get(c)).min().copied().unwrap_or(usize::MAX))
            .max()
            .unwrap_or(0)
    };
    Ok((n1, touched.len()))
}

/// Fewest 2-cells of `X_{j+1}` inside `pi_j(sigma)` in a chain joining the
/// images of the two vertical 1-cells of the gen-`j` cell `sigma`. `None` if
/// the images are not joined at all.
pub fn edge_crossing_min(params: &SystemParams, sigma: &CellId, j: i32) -> Result<Option<usize>, LabError> {
    let k = j + 1;
    let kids = crate::lattice::subdivide(params, sigma);
    let mut keys: Vec<BTreeSet<CellId>> = Vec::with_capacity(kids.len());
    let mut by_key: BTreeMap<CellId, Vec<usize>> = BTreeMap::new();
    for (i, c) in kids.iter().enumerate() {
        let ks: BTreeSet<CellId> = c.vertices().iter().map(|v| complex::class_key(params, v, k)).collect::<Result<_, _>>()?;
        for key in &ks {
            by_key.entry(key.clone()).or_default().push(i);
        }
        keys.push(ks);
    }
    let edge_keys = |x: i64| -> Result<BTreeSet<CellId>, LabError> {
        let mut a = sigma.anchor.clone();
        a[0] = x;
        let e = CellId::new(sigma.gen, a, sigma.extent & !1);
        complex::refine_vertices(params, &e, k).iter().map(|v| complex::class_key(params, v, k)).collect()
    };
    let left = edge_keys(sigma.anchor[0])?;
    let right = edge_keys(sigma.anchor[0] + 1)?;
    let mut depth = vec![usize::MAX; kids.len()];
    let mut queue = VecDeque::new();
    for (i, ks) in keys.iter().enumerate() {
        if !ks.is_disjoint(&left) {
            depth[i] = 1;
            queue.push_back(i);
        }
    }
    while let Some(i) = queue.pop_front() {
        if !keys[i].is_disjoint(&right) {
            return Ok(Some(depth[i]));
        }
        for key in &keys[i] {
            for &nb in &by_key[key] {
                if depth[nb] == usize::MAX {
                    depth[nb] = depth[i] + 1;
                    queue.push_back(nb);
                }
            }
        }
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::q;
    use proptest::prelude::*;

    fn p2() -> SystemParams {
        SystemParams::std2d(2)
    }

    fn qp(p: &SystemParams, x: Q, y: Q, j: i32) -> QuotientPoint {
        QuotientPoint::new(p, &ExactPoint::xy(x, y), j).unwrap()
    }

    #[test]
    fn edge_crossing_needs_m_cells() {
        let p = p2();
        for c in [CellId::top(0, vec![0, 0]), CellId::top(1, vec![1, 2]), CellId::top(1, vec![3, 5])] {
            assert_eq!(edge_crossing_min(&p, &c, c.gen).unwrap(), Some(4));
        }
    }

    #[test]
    fn basic_distances() {
        let p = p2();
        let a = qp(&p, q(1, 8), q(1, 12), 1);
        assert_eq!(chain_dist(&p, &a, &a, 1).unwrap(), Q::zero());
        let b = qp(&p, q(3, 16), q(1, 8), 1);
        assert_eq!(chain_dist(&p, &a, &b, 1).unwrap(), q(1, 4));
        // glued copies are at distance zero
        let c = qp(&p, q(1, 2), q(1, 4), 1);
        let c2 = qp(&p, q(1, 2), q(1, 4) + q(1, 6), 1);
        assert_eq!(chain_dist(&p, &c, &c2, 1).unwrap(), Q::zero());
    }

    #[test]
    fn witness_is_valid() {
        let p = p2();
        let a = ExactPoint::xy(q(1, 8), q(1, 12));
        let b = ExactPoint::xy(q(13, 16), q(7, 12));
        let (d, ch) = chain_witness(&p, &a, &b, 1).unwrap();
        assert_eq!(ch.length(&p), d);
        assert!(verify_chain(&p, &ch, &a, &b).unwrap());
    }

    #[test]
    fn snowflake_examples() {
        let p = SystemParams::std2d(2);
        let o = ExactPoint::xy(q(0, 1), q(0, 1));
        assert_eq!(snowflake_dist(&p, &o, &o).mid(), 0.0);
        assert!((snowflake_dist(&p, &o, &ExactPoint::xy(q(1, 1), q(0, 1))).mid() - 1.0).abs() < 1e-12);
        let v = snowflake_dist(&p, &o, &ExactPoint::xy(q(0, 1), q(1, 6)));
        assert!(v.lo <= 0.25 + 1e-12 && v.hi >= 0.25 - 1e-12);
    }

    #[test]
    fn ball_bounds() {
        let p = p2();
        let c = ExactPoint::xy(q(1, 8), q(1, 12));
        assert_eq!(comb_ball_bound(&p, &c, Q::zero(), 1).unwrap().0, 0);
        let (n1, n2) = comb_ball_bound(&p, &c, q(1, 2), 1).unwrap();
        assert!(n1 <= 1 && n2 >= 1);
        let (n1, _) = comb_ball_bound(&p, &c, q(5, 2), 1).unwrap();
        assert!(n1 >= 2);
    }

    #[test]
    fn cell_exponent() {
        let p = p2();
        let a = ExactPoint::xy(q(1, 8), q(1, 12));
        assert_eq!(cell_dist_exponent(&p, &a, &a, -1, 3, 3).unwrap(), None);
        // same gen-0 cell, two gen-1 columns apart
        let b = ExactPoint::xy(q(5, 8), q(1, 12));
        assert_eq!(cell_dist_exponent(&p, &a, &b, -1, 3, 3).unwrap(), Some(1));
    }

    fn grid_pt(x: i64, y: i64, p: &SystemParams, k: i32) -> ExactPoint {
        ExactPoint::xy(Q::new(x as i128, p.m.pow(k as u32) as i128), Q::new(y as i128, p.mv.pow(k as u32) as i128))
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(40))]
        #[test]
        fn flood_matches_oracle(x0 in 0i64..32, y0 in 0i64..72, x1 in 0i64..32, y1 in 0i64..72, j in 0i32..2, fam in 0usize..2) {
            let p = if fam == 0 { p2() } else { SystemParams::counterexample() };
            let k = 2;
            let a = grid_pt(x0 + 1, y0, &p, k + 1);
            let b = grid_pt(x1, y1 + 1, &p, k + 1);
            let fast = set_dist(&p, &[a.clone()], &[b.clone()], j, j).unwrap();
            let (d, g_lo) = cap(&p, &[a.clone()], &[b.clone()], j);
            let w = oracle_window(&p, &[a.clone()], &[b.clone()], &d, g_lo, j);
            let slow = oracle::oracle_dist(&p, &[a], &[b], j, g_lo, j, &w).unwrap().unwrap();
            prop_assert_eq!(fast, slow);
        }

        #[test]
        fn metric_axioms(pts in proptest::collection::vec((0i64..16, 0i64..36), 3)) {
            let p = p2();
            let e: Vec<ExactPoint> = pts.iter().map(|(x, y)| grid_pt(*x, *y, &p, 2)).collect();
            let d = |a: &ExactPoint, b: &ExactPoint| set_dist(&p, &[a.clone()], &[b.clone()], 1, 1).unwrap();
            prop_assert_eq!(d(&e[0], &e[0]), Q::zero());
            prop_assert_eq!(d(&e[0], &e[1]), d(&e[1], &e[0]));
            prop_assert!(d(&e[0], &e[2]) <= d(&e[0], &e[1]) + d(&e[1], &e[2]));
            prop_assert!((e[0].x() - e[1].x()).abs() <= d(&e[0], &e[1]));
            let fine = set_dist(&p, &[e[0].clone()], &[e[1].clone()], 1, 2).unwrap();
            prop_assert!(fine <= d(&e[0], &e[1]));
        }
    }
}
