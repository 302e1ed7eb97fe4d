//! Quotient complexes `X_j`, projections and local combinatorics.

use std::collections::{BTreeMap, BTreeSet};

use crate::gluing::{self, Coset, GridGluer, GridPoint};
use crate::lattice::{floor_q, qpow, CellId, ExactPoint, SystemParams};
use crate::{LabError, Q};

/// A cell of `X_j`, keyed by its saturation.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct QCell {
    pub level: i32,
    pub rep: CellId,
    pub sat: Vec<CellId>,
}

impl QCell {
    pub fn new(params: &SystemParams, c: &CellId, j: i32) -> Result<QCell, LabError> {
        let sat = gluing::saturate_cell(params, c, j)?;
        Ok(QCell { level: j, rep: sat[0].clone(), sat })
    }

    pub fn dim(&self) -> usize {
        self.rep.dim()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct QuotientPoint {
    pub level: i32,
    pub coset: Coset,
}

impl QuotientPoint {
    pub fn new(params: &SystemParams, p: &ExactPoint, j: i32) -> Result<Self, LabError> {
        Ok(QuotientPoint { level: j, coset: gluing::coset(params, p, j)? })
    }

    pub fn rep(&self) -> &ExactPoint {
        self.coset.canonical()
    }
}

/// `pi_j^k(p)`.
pub fn project(params: &SystemParams, p: &QuotientPoint, k: i32) -> Result<QuotientPoint, LabError> {
    if k < p.level {
        return Err(LabError::InvalidArgument(format!("cannot project level {} to {k}", p.level)));
    }
    QuotientPoint::new(params, p.rep(), k)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CoordValue {
    pub x: Q,
    /// Tail coordinates reduced into `[0, m_v^-j)`.
    pub y: Vec<Q>,
}

pub fn coord_maps(params: &SystemParams, p: &QuotientPoint) -> CoordValue {
    let r = p.rep();
    let period = qpow(params.mv, -p.level);
    CoordValue {
        x: r.x(),
        y: r.coords[1..].iter().map(|v| torus_reduce(v, &period)).collect(),
    }
}

pub fn torus_reduce(v: &Q, period: &Q) -> Q {
    v - period * Q::from_integer(floor_q(&(v / period)))
}

pub fn torus_dist(a: &Q, b: &Q, period: &Q) -> Q {
    let d = torus_reduce(&(a - b), period);
    let e = period - d;
    if d < e {
        d
    } else {
        e
    }
}

/// Canonical cell of the class of `c` at level `j`.
pub fn class_key(params: &SystemParams, c: &CellId, j: i32) -> Result<CellId, LabError> {
    Ok(gluing::saturate_cell(params, c, j)?.swap_remove(0))
}

/// Face classes of the closed cell `c` in `X_j`.
pub fn face_classes(params: &SystemParams, c: &CellId, j: i32) -> Result<BTreeSet<CellId>, LabError> {
    c.faces().iter().map(|f| class_key(params, f, j)).collect()
}

/// Vertex classes of the closed cell `c` in `X_j`.
pub fn vertex_classes(params: &SystemParams, c: &CellId, j: i32) -> Result<BTreeSet<CellId>, LabError> {
    c.vertices().iter().map(|f| class_key(params, f, j)).collect()
}

/// Top cells of `Y_gen` having the vertex `v` as a corner.
pub fn top_cells_at_vertex(v: &CellId) -> Vec<CellId> {
    let n = v.n();
    (0u32..(1 << n))
        .map(|mask| {
            let a = v
                .anchor
                .iter()
                .enumerate()
                .map(|(ax, x)| x - i64::from(mask >> ax & 1 == 1))
                .collect();
            CellId::top(v.gen, a)
        })
        .collect()
}

/// Cells of `Y_gen` having the vertex `v` as a corner, all dimensions `>= 1`.
pub fn cells_at_vertex(v: &CellId) -> Vec<CellId> {
    let mut out = BTreeSet::new();
    for t in top_cells_at_vertex(v) {
        for f in t.faces() {
            if f.dim() >= 1 && f.vertices().contains(v) {
                out.insert(f);
            }
        }
    }
    out.into_iter().collect()
}

/// Open cells of positive dimension of `X_j` whose closure contains the vertex
/// class of `v` (the link of `v`, counted as cells).
pub fn link(params: &SystemParams, v: &CellId, j: i32) -> Result<Vec<CellId>, LabError> {
    let mut out = BTreeSet::new();
    for w in gluing::saturate_cell(params, v, j)? {
        for c in cells_at_vertex(&w) {
            out.insert(class_key(params, &c, j)?);
        }
    }
    Ok(out.into_iter().collect())
}

/// Top cells of the link, and whether they are connected through shared
/// codimension-one faces around `v`.
pub fn link_connected(params: &SystemParams, v: &CellId, j: i32) -> Result<bool, LabError> {
    let members = gluing::saturate_cell(params, v, j)?;
    let vclass: BTreeSet<CellId> = members.iter().cloned().collect();
    let mut tops: Vec<CellId> = Vec::new();
    for w in &members {
        for t in top_cells_at_vertex(w) {
            let k = class_key(params, &t, j)?;
            if !tops.contains(&k) {
                tops.push(k);
            }
        }
    }
    // faces of codim 1 through the vertex class
    let mut facesets: Vec<BTreeSet<CellId>> = Vec::new();
    for t in &tops {
        let mut s = BTreeSet::new();
        for f in t.faces() {
            if f.dim() + 1 == f.n() && f.vertices().iter().any(|x| vclass.contains(x)) {
                s.insert(class_key(params, &f, j)?);
            }
        }
        facesets.push(s);
    }
    let mut uf: Vec<usize> = (0..tops.len()).collect();
    fn find(uf: &mut Vec<usize>, a: usize) -> usize {
        let mut r = a;
        while uf[r] != r {
            r = uf[r];
        }
        uf[a] = r;
        r
    }
    for a in 0..tops.len() {
        for b in a + 1..tops.len() {
            if !facesets[a].is_disjoint(&facesets[b]) {
                let (ra, rb) = (find(&mut uf, a), find(&mut uf, b));
                uf[ra] = rb;
            }
        }
    }
    let r0 = find(&mut uf, 0);
    Ok((0..tops.len()).all(|i| find(&mut uf, i) == r0))
}

/// Number of open cells of `X_j` inside the closed image of `c`.
pub fn open_cells_in_closed(params: &SystemParams, c: &CellId, j: i32) -> Result<usize, LabError> {
    Ok(face_classes(params, c, j)?.len())
}

/// Top cells of `X_j` sharing at least a vertex with `c`, with the largest
/// shared face class.
pub fn adjacent_qcells(params: &SystemParams, c: &QCell) -> Result<Vec<(QCell, CellId)>, LabError> {
    let j = c.level;
    let mut mine = BTreeSet::new();
    for s in &c.sat {
        mine.extend(face_classes(params, s, j)?);
    }
    let mut cand = BTreeSet::new();
    for s in &c.sat {
        for v in s.vertices() {
            for w in gluing::saturate_cell(params, &v, j)? {
                for t in top_cells_at_vertex(&w) {
                    cand.insert(class_key(params, &t, j)?);
                }
            }
        }
    }
    cand.remove(&c.rep);
    let mut out = Vec::new();
    for t in cand {
        let q = QCell::new(params, &t, j)?;
        let mut theirs = BTreeSet::new();
        for s in &q.sat {
            theirs.extend(face_classes(params, s, j)?);
        }
        let shared = mine
            .intersection(&theirs)
            .max_by_key(|f| (f.dim(), std::cmp::Reverse((*f).clone())))
            .cloned();
        if let Some(f) = shared {
            out.push((q, f));
        }
    }
    Ok(out)
}

/// Closed images in `X_j` of two top cells (any generations `>= j`) meet.
pub fn images_meet(params: &SystemParams, a: &CellId, b: &CellId, j: i32) -> Result<bool, LabError> {
    let g = a.gen.max(b.gen);
    let va = refine_vertices(params, a, g);
    let vb = refine_vertices(params, b, g);
    let ka: BTreeSet<CellId> = va.iter().map(|v| class_key(params, v, j)).collect::<Result<_, _>>()?;
    for v in vb {
        if ka.contains(&class_key(params, &v, j)?) {
            return Ok(true);
        }
    }
    Ok(false)
}

/// Vertices of the closed cell `c` on the grid of generation `g >= c.gen`.
pub fn refine_vertices(params: &SystemParams, c: &CellId, g: i32) -> Vec<CellId> {
    let n = c.n();
    let mut per_axis: Vec<Vec<i64>> = Vec::new();
    for ax in 0..n {
        let f = params.branch(ax).pow((g - c.gen) as u32);
        let lo = c.anchor[ax] * f;
        if c.spans(ax) {
            per_axis.push((lo..=lo + f).collect());
        } else {
            per_axis.push(vec![lo]);
        }
    }
    let mut out = vec![Vec::new()];
    for opts in &per_axis {
        let mut next = Vec::new();
        for pre in &out {
            for o in opts {
                let mut v: Vec<i64> = pre.clone();
                v.push(*o);
                next.push(v);
            }
        }
        out = next;
    }
    out.into_iter()
        .map(|a| CellId::vertex(g, a))
        .collect()
}

/// Fibers of `pi_j^{j+1}` through grid points: vertical edge-path length in
/// `X_j^(1)` spanned by the fiber of the point `g` (resolution `j+1`).
pub fn fiber_path_length(params: &SystemParams, g: &GridPoint, j: i32) -> Result<i64, LabError> {
    let k = j + 1;
    let gl = GridGluer::new(params, k);
    let up = gl.coset(g, k)?;
    // group by level-j class, take one representative per class minimising span
    let mut classes: BTreeMap<GridPoint, Vec<GridPoint>> = BTreeMap::new();
    for p in &up {
        let c = gl.coset(p, j)?;
        classes.entry(c[0].clone()).or_default().push(p.clone());
    }
    let groups: Vec<Vec<GridPoint>> = classes.into_values().collect();
    let mut best = i64::MAX;
    let mut idx = vec![0usize; groups.len()];
    loop {
        // an edge path through all chosen points is at least as long as the
        // largest pairwise L1 distance; on a single axis the two agree
        let pick: Vec<&GridPoint> = groups.iter().zip(&idx).map(|(gr, i)| &gr[*i]).collect();
        let mut span = 0;
        for a in &pick {
            for b in &pick {
                span = span.max(a.y.iter().zip(&b.y).map(|(u, v)| (u - v).abs()).sum::<i64>());
            }
        }
        best = best.min(span);
        let mut t = 0;
        while t < idx.len() {
            idx[t] += 1;
            if idx[t] < groups[t].len() {
                break;
            }
            idx[t] = 0;
            t += 1;
        }
        if t == idx.len() {
            break;
        }
    }
    Ok(if groups.len() <= 1 { 0 } else { best })
}

/// `pi_j` is injective on the codim-`(n-1)` skeleton: members of the level
/// `j+1` coset of a skeleton point `g` (resolution `k >= j+1`) that lie on the
/// skeleton of `Y_j` form a single level-`j` class.
pub fn skeleton_injective_at(params: &SystemParams, g: &GridPoint, j: i32, k: i32) -> Result<bool, LabError> {
    let gl = GridGluer::new(params, k);
    let on_skel = |p: &GridPoint| {
        let fx = params.m.pow((k - j) as u32);
        let fy = params.mv.pow((k - j) as u32);
        let mut off = 0;
        if p.x % fx != 0 {
            off += 1;
        }
        for y in &p.y {
            if y % fy != 0 {
                off += 1;
            }
        }
        off <= 1
    };
    if !on_skel(g) {
        return Ok(true);
    }
    let up = gl.coset(g, j + 1)?;
    let mut keys = BTreeSet::new();
    for p in up.iter().filter(|p| on_skel(p)) {
        keys.insert(gl.coset(p, j)?[0].clone());
    }
    Ok(keys.len() <= 1)
}

/// `y_j`-diameter of the preimage of the closed top cell `c` (generation
/// `j+1`) under `pi_j`, on the circle of length `m_v^-j`.
pub fn fiber_y_diameter(params: &SystemParams, c: &CellId, j: i32) -> Result<Q, LabError> {
    let sat = gluing::saturate_closed(params, c, j + 1)?;
    let period = params.mv; // rows of generation j+1 on the circle
    let mut ivs: Vec<(i64, i64)> = Vec::new();
    for s in &sat {
        let lo = s.anchor[1];
        let hi = lo + i64::from(s.spans(1));
        ivs.push((lo, hi));
    }
    let mut best2 = 0i64; // twice the distance in rows
    for a in &ivs {
        for b in &ivs {
            // difference range b - a in [b.0 - a.1, b.1 - a.0]; check for the antipode
            let lo = b.0 - a.1;
            let hi = b.1 - a.0;
            let mut hit = false;
            for t in (lo.div_euclid(period) - 1)..=(hi.div_euclid(period) + 1) {
                let target2 = period + 2 * period * t; // 2*(period/2 + t*period)
                if 2 * lo <= target2 && target2 <= 2 * hi {
                    hit = true;
                }
            }
            if hit {
                best2 = best2.max(period);
                continue;
            }
            for x in [a.0, a.1] {
                for y in [b.0, b.1] {
                    let d = (y - x).rem_euclid(period);
                    let d = d.min(period - d);
                    best2 = best2.max(2 * d);
                }
            }
        }
    }
    Ok(Q::new(best2 as i128, 2) * qpow(params.mv, -(j + 1)))
}

/// 0-cells of `X_j` keep distinct images at level `j+1`.
pub fn vertices_stay_distinct(params: &SystemParams, a: &CellId, b: &CellId, j: i32) -> Result<bool, LabError> {
    let ka = class_key(params, a, j)?;
    let kb = class_key(params, b, j)?;
    if ka == kb {
        return Ok(true);
    }
    let up = |v: &CellId| class_key(params, &crate::lattice::subdivide(params, v)[0], j + 1);
    Ok(up(a)? != up(b)?)
}

/// `R_j` classes of the grid points `(x, y)`, `y in lo..=hi`, at resolution
/// `k`, for planar families whose identifications are vertical. One
/// union-find pass over a padded column replaces a coset search per point.
#[derive(Clone, Debug)]
pub struct ColumnClasses {
    pub x: i64,
    pub lo: i64,
    root: Vec<usize>,
    members: Vec<Vec<i64>>,
    pad: i64,
}

impl ColumnClasses {
    pub fn new(gl: &GridGluer, x: i64, lo: i64, hi: i64, j: i32) -> Result<Self, LabError> {
        let p = gl.params;
        if p.n != 2 || p.rules.iter().any(|r| r.x_extent) {
            return Err(LabError::InvalidArgument("column classes need vertical planar rules".into()));
        }
        let gens = gl.gens(x, j)?;
        let shift = p.rules.iter().flat_map(|r| r.shift.iter().map(|s| s.abs())).max().unwrap_or(1);
        let step = gens.iter().map(|g| p.mv.pow((gl.k - g).max(0) as u32)).max().unwrap_or(0) * shift;
        let pad = 4 * step;
        let (a, b) = (lo - pad, hi + pad);
        let len = (b - a + 1) as usize;
        let mut uf: Vec<usize> = (0..len).collect();
        fn find(uf: &mut [usize], x: usize) -> usize {
            let mut r = x;
            while uf[r] != r {
                r = uf[r];
            }
            let mut y = x;
            while uf[y] != r {
                let n = uf[y];
                uf[y] = r;
                y = n;
            }
            r
        }
        if !gens.is_empty() {
            let mut buf = Vec::new();
            for y in a..=b {
                buf.clear();
                gl.neighbors(&GridPoint { x, y: vec![y] }, j, &mut buf)?;
                for q in &buf {
                    let t = q.y[0];
                    if t >= a && t <= b {
                        let (ra, rb) = (find(&mut uf, (y - a) as usize), find(&mut uf, (t - a) as usize));
                        if ra != rb {
                            uf[ra.max(rb)] = ra.min(rb);
                        }
                    }
                }
            }
        }
        let mut members: Vec<Vec<i64>> = vec![Vec::new(); len];
        let mut root = vec![0; len];
        for i in 0..len {
            let r = find(&mut uf, i);
            root[i] = r;
            members[r].push(a + i as i64);
        }
        // a reported class must stay clear of the padding edge
        for y in lo..=hi {
            let ms = &members[root[(y - a) as usize]];
            if ms[0] < a + step || *ms.last().unwrap() > b - step {
                return Err(LabError::SearchTooLarge(len));
            }
        }
        Ok(ColumnClasses { x, lo: a, root, members, pad })
    }

    /// Rows of the class of `y`, sorted; the first is the canonical key.
    pub fn class(&self, y: i64) -> &[i64] {
        &self.members[self.root[(y - self.lo) as usize]]
    }

    pub fn key(&self, y: i64) -> i64 {
        self.class(y)[0]
    }

    pub fn pad(&self) -> i64 {
        self.pad
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::q;
    use crate::BoxQ;
    use num_traits::Zero;

    #[test]
    fn projection_grows_cosets() {
        let p = SystemParams::std2d(2);
        // x = 1/8 is a generation-2 line (odd multiple of 1/16? no: 2/16, i=2)
        let pt = ExactPoint::xy(q(1, 8), q(1, 24));
        let a = QuotientPoint::new(&p, &pt, 1).unwrap();
        assert_eq!(a.coset.len(), 1);
        let b = project(&p, &a, 2).unwrap();
        assert_eq!(b.coset.len(), 2);
        assert_eq!(project(&p, &a, 1).unwrap(), a);
    }

    #[test]
    fn neighbours_and_links() {
        let p = SystemParams::std2d(2);
        // relation level 0 does not see the lines x = 1/4, 1/2
        let far = QCell::new(&p, &CellId::top(1, vec![1, 3]), 0).unwrap();
        assert_eq!(adjacent_qcells(&p, &far).unwrap().len(), 8);
        let glued = QCell::new(&p, &CellId::top(1, vec![1, 1]), 1).unwrap();
        let n = adjacent_qcells(&p, &glued).unwrap().len();
        assert!(n > 8 && n <= 24, "{n}");
        // 3-member vertex class on x = 1/2: rows 0..3 give 8 squares,
        // 6 horizontal edges and 3 vertical edge classes
        let v = CellId::vertex(1, vec![2, 2]);
        assert_eq!(link(&p, &v, 1).unwrap().len(), 17);
        assert!(link_connected(&p, &v, 1).unwrap());
    }

    #[test]
    fn coord_maps_descend() {
        let p = SystemParams::std2d(2);
        let pt = ExactPoint::xy(q(1, 2), q(2, 6));
        let a = QuotientPoint::new(&p, &pt, 1).unwrap();
        let x0 = coord_maps(&p, &a).x;
        for mbr in &a.coset.members {
            assert_eq!(mbr.x(), x0);
            let y = torus_reduce(&mbr.coords[1], &q(1, 6));
            assert!(y >= Q::zero() && y < q(1, 6));
        }
        let period = q(1, 1);
        for (x, y) in a.coset.members.iter().zip(a.coset.members.iter().skip(1)) {
            assert!(torus_dist(&x.coords[1], &y.coords[1], &period) <= q(2, 6));
        }
    }

    #[test]
    fn fiber_diameters() {
        let p = SystemParams::std2d(2);
        let single = SystemParams::custom(2, 4, 6, vec![p.rules[0].clone()]).unwrap();
        assert_eq!(fiber_y_diameter(&single, &CellId::top(1, vec![2, 3]), 0).unwrap(), q(1, 6));
        let mut seen_glued = false;
        for c in crate::lattice::cells_in_box(&p, &BoxQ::cube(2, 0, 1), 1, 2).unwrap() {
            let d = fiber_y_diameter(&p, &c, 0).unwrap();
            assert!(d <= q(5, 6));
            assert!(d >= q(1, 6));
            seen_glued |= d > q(1, 6);
        }
        assert!(seen_glued);
    }

    #[test]
    fn skeleton_and_fibers() {
        let p = SystemParams::std2d(2);
        for x in 0..=16 {
            for y in 0..=36 {
                let g = GridPoint { x, y: vec![y] };
                assert!(skeleton_injective_at(&p, &g, 1, 2).unwrap());
                assert!(fiber_path_length(&p, &g, 1).unwrap() <= 2);
            }
        }
    }

    #[test]
    fn column_classes_match_cosets() {
        for p in [SystemParams::std2d(2), SystemParams::std2d(5)] {
            for (k, j) in [(2, 0), (2, 1), (2, 2), (3, 1)] {
                let gl = GridGluer::new(&p, k);
                for x in [0, 1, 3, 4, 5, 8, 12, 16] {
                    let cc = ColumnClasses::new(&gl, x, -3, 80, j).unwrap();
                    for y in -3..=80 {
                        let c: Vec<i64> = gl.coset(&GridPoint { x, y: vec![y] }, j).unwrap().iter().map(|g| g.y[0]).collect();
                        assert_eq!(cc.class(y), &c[..], "x={x} y={y} k={k} j={j}");
                    }
                }
            }
        }
    }

    #[test]
    fn meeting_images() {
        let p = SystemParams::std2d(2);
        let a = CellId::top(1, vec![0, 0]);
        let b = CellId::top(1, vec![1, 2]);
        // share only the glued corner (1/4, 1/6) ~ (1/4, 2/6)?
        assert!(images_meet(&p, &a, &b, 1).unwrap());
        assert!(!images_meet(&p, &a, &CellId::top(1, vec![3, 5]), 1).unwrap());
    }
}
