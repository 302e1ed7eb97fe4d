//! Regularity suites on the limit space: Ahlfors scans, Nagata covers,
//! David-Semmes counts, Lipschitz-light components and the boundary
//! injectivity witness.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};

use num_traits::{Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::analysis::{flood_from, BallProfile};
use crate::complex::torus_dist;
use crate::gluing::{self, GridGluer, GridPoint};
use crate::lattice::{cells_in_box, floor_q, qpow, BoxQ, CellId, ExactPoint, SystemParams};
use crate::metric::flood::{FaceSet, Flood, FloodSpec};
use crate::metric::{self, g_floor};
use crate::{qf, LabError, Q};

#[derive(Clone, Debug)]
pub struct RegularityRow {
    pub center: ExactPoint,
    pub r: Q,
    /// Mass of the ball read from faces with cost `<= r` (inside the ball).
    pub inner: f64,
    /// Mass of faces with cost `<= r + 2` units (contains the ball).
    pub outer: f64,
}

#[derive(Clone, Debug)]
pub struct RegularityReport {
    pub q: f64,
    pub k: i32,
    pub rows: Vec<RegularityRow>,
}

impl RegularityReport {
    /// `(min inner ratio, max outer ratio)` of `mu(B) / r^Q`.
    pub fn ratio_range(&self) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = 0f64;
        for r in &self.rows {
            let rq = qf(&r.r).powf(self.q);
            lo = lo.min(r.inner / rq);
            hi = hi.max(r.outer / rq);
        }
        (lo, hi)
    }

    /// Certified band width `max outer / min inner`.
    pub fn band(&self) -> f64 {
        let (lo, hi) = self.ratio_range();
        hi / lo
    }
}

/// Ball masses `mu(B(p, r))` around each center, bracketed by flood balls at
/// resolution `k`. Masses are normalised so a generation-0 cell has mass 1.
pub fn ahlfors_scan(params: &SystemParams, centers: &[ExactPoint], radii: &[Q], k: i32) -> Result<RegularityReport, LabError> {
    let unit = params.weight(k);
    let mut rows = Vec::new();
    for p in centers {
        let rmax = radii.iter().max().cloned().unwrap_or_else(Q::zero);
        let cap = (rmax / unit).to_integer() + 2;
        let bp = BallProfile::new(params, &[p.clone()], k, cap)?;
        for r in radii {
            if r.is_zero() {
                rows.push(RegularityRow { center: p.clone(), r: *r, inner: 0.0, outer: 0.0 });
                continue;
            }
            let c = r / unit;
            if !c.is_integer() {
                return Err(LabError::InvalidArgument(format!("radius {r} is not a multiple of m^-{k}")));
            }
            let c = c.to_integer();
            rows.push(RegularityRow { center: p.clone(), r: *r, inner: bp.mass(c), outer: bp.mass(c + 2) });
        }
    }
    Ok(RegularityReport { q: params.q_exponent(), k, rows })
}

/// Closed axis-parallel rectangle `[x0, x1] x [y0, y1]` in the plane.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct Rect {
    pub x0: Q,
    pub x1: Q,
    pub y0: Q,
    pub y1: Q,
}

impl Rect {
    fn contains(&self, p: &ExactPoint) -> bool {
        let (x, y) = (p.coords[0], p.coords[1]);
        x >= self.x0 && x <= self.x1 && y >= self.y0 && y <= self.y1
    }

    fn corners(&self) -> Vec<ExactPoint> {
        vec![
            ExactPoint::xy(self.x0, self.y0),
            ExactPoint::xy(self.x1, self.y0),
            ExactPoint::xy(self.x0, self.y1),
            ExactPoint::xy(self.x1, self.y1),
        ]
    }
}

/// One set of a cover: a union of closed rectangles in `Y`, seen in `X`.
#[derive(Clone, Debug)]
pub struct CoverSet {
    pub label: String,
    pub rects: Vec<Rect>,
}

impl CoverSet {
    fn x_hull(&self) -> (Q, Q) {
        let lo = self.rects.iter().map(|r| r.x0).min().unwrap();
        let hi = self.rects.iter().map(|r| r.x1).max().unwrap();
        (lo, hi)
    }

    pub fn contains(&self, p: &ExactPoint) -> bool {
        self.rects.iter().any(|r| r.contains(p))
    }
}

#[derive(Clone, Debug, Default)]
pub struct FamilyCheck {
    /// Pairs examined, and how each was settled.
    pub pairs: usize,
    pub by_x_gap: usize,
    pub by_cells: usize,
    pub by_bracket: usize,
    /// Pairs whose bracket lower bound stays below the floor.
    pub unresolved: Vec<(String, String, Q)>,
    /// Largest lower bound and sampled upper bound on a set diameter.
    pub diam_lo: Q,
    pub diam_hi: Q,
    pub diam_certified: bool,
}

#[derive(Clone, Debug)]
pub struct CoverFamily {
    pub k: i32,
    pub window: BoxQ,
    /// `[c_sigma sets, c_e sets, c_v sets]`.
    pub families: [Vec<CoverSet>; 3],
    pub bound: Q,
    pub sep: Q,
    pub checks: [FamilyCheck; 3],
    pub samples: usize,
    pub uncovered: Vec<ExactPoint>,
}

impl CoverFamily {
    pub fn covers(&self) -> bool {
        self.uncovered.is_empty()
    }

    pub fn bounded(&self) -> bool {
        self.checks.iter().all(|c| c.diam_hi <= self.bound)
    }

    pub fn separated(&self) -> bool {
        self.checks.iter().all(|c| c.unresolved.is_empty())
    }
}

struct VertexKeys<'a> {
    params: &'a SystemParams,
    cache: HashMap<(i32, CellId), CellId>,
}

impl<'a> VertexKeys<'a> {
    /// Canonical vertex of the level-`j` class of `v`.
    fn key(&mut self, v: &CellId, j: i32) -> Result<CellId, LabError> {
        if let Some(k) = self.cache.get(&(j, v.clone())) {
            return Ok(k.clone());
        }
        let g = GridGluer::new(self.params, v.gen);
        let gp = GridPoint { x: v.anchor[0], y: v.anchor[1..].to_vec() };
        let cs = g.coset(&gp, j)?;
        let key = CellId::vertex(v.gen, {
            let mut a = vec![cs[0].x];
            a.extend(cs[0].y.iter().copied());
            a
        });
        for c in &cs {
            let mut a = vec![c.x];
            a.extend(c.y.iter().copied());
            self.cache.insert((j, CellId::vertex(v.gen, a)), key.clone());
        }
        Ok(key)
    }

    /// Vertex classes of all generation-`j` top cells meeting the set.
    fn of_set(&mut self, s: &CoverSet, j: i32) -> Result<BTreeSet<CellId>, LabError> {
        let mut out = BTreeSet::new();
        for r in &s.rects {
            let bx = BoxQ::new(vec![r.x0, r.y0], vec![r.x1, r.y1]);
            for c in cells_in_box(self.params, &bx, j, 2)? {
                for v in c.vertices() {
                    out.insert(self.key(&v, j)?);
                }
            }
        }
        Ok(out)
    }
}

fn rect_faces(params: &SystemParams, rects: &[Rect], k: i32) -> FaceSet {
    let mut s = FaceSet::new();
    let sx = qpow(params.m, k) * Q::from_integer(2);
    let sy = qpow(params.mv, k) * Q::from_integer(2);
    for r in rects {
        let (c0, c1) = (floor_q(&(r.x0 * sx)) as i64, floor_q(&(r.x1 * sx)) as i64);
        let (y0, y1) = (floor_q(&(r.y0 * sy)) as i64, floor_q(&(r.y1 * sy)) as i64);
        for c in c0..=c1 {
            s.insert(c, y0, y1);
        }
    }
    s
}

/// Cover construction and checks at scale `k` over `window` (planar,
/// `m_v >= 12` so every margin is nonempty). Separation is settled pair by
/// pair: horizontal gap, then non-adjacency of the cells of `X_j` (`j <= k+1`)
/// meeting the two sets, then a flood bracket at resolution `k + 2`.
pub fn nagata_cover(params: &SystemParams, k: i32, window: &BoxQ, samples: usize, seed: u64) -> Result<CoverFamily, LabError> {
    if params.n != 2 {
        return Err(LabError::InvalidArgument("covers are built for n = 2".into()));
    }
    let h = params.weight(k + 1);
    let v = params.side(1, k + 1);
    let row = params.side(1, k);
    let half = Q::new(1, 2);
    let q = |n: i64| Q::from_integer(n as i128);
    let grow = BoxQ::new(
        window.lo.iter().zip([params.side(0, k), row]).map(|(a, s)| a - s).collect(),
        window.hi.iter().zip([params.side(0, k), row]).map(|(a, s)| a + s).collect(),
    );
    // c_sigma: trimmed 2-cells
    let mut fam2 = Vec::new();
    for c in cells_in_box(params, &grow, k, 2)? {
        let r = params.realize(&c);
        fam2.push(CoverSet {
            label: format!("sigma {c}"),
            rects: vec![Rect { x0: r[0].0 + h * half, x1: r[0].1 - h * half, y0: r[1].0 + v * q(3), y1: r[1].1 - v * q(3) }],
        });
    }
    // c_e: one set per class of 1-cells, built on every member
    let mut fam1 = Vec::new();
    let mut seen: BTreeSet<CellId> = BTreeSet::new();
    for e in cells_in_box(params, &grow, k, 1)? {
        let sat = gluing::saturate_cell(params, &e, k)?;
        if !seen.insert(sat[0].clone()) {
            continue;
        }
        let mut rects = Vec::new();
        for m in &sat {
            let r = params.realize(m);
            if m.is_vertical() {
                let x = r[0].0;
                rects.push(Rect { x0: x - h * half, x1: x + h * half, y0: r[1].0 + v * q(5), y1: r[1].1 - v * q(5) });
            } else {
                let y = r[1].0;
                rects.push(Rect { x0: r[0].0 + h, x1: r[0].1 - h, y0: y - v, y1: y + v });
            }
        }
        fam1.push(CoverSet { label: format!("edge {}", sat[0]), rects });
    }
    // c_v: cells of the subdivision within five steps of the vertex class
    let mut keys = VertexKeys { params, cache: HashMap::new() };
    let mut fam0 = Vec::new();
    let mut vseen: BTreeSet<CellId> = BTreeSet::new();
    for vtx in cells_in_box(params, &grow, k, 0)? {
        let sat = gluing::saturate_cell(params, &vtx, k)?;
        if !vseen.insert(sat[0].clone()) {
            continue;
        }
        let mut frontier: BTreeSet<CellId> = BTreeSet::new();
        for m in &sat {
            let p = ExactPoint::xy(Q::from_integer(m.anchor[0] as i128) * params.side(0, k), Q::from_integer(m.anchor[1] as i128) * row);
            frontier.extend(crate::lattice::top_cells_containing(params, &p, k + 1));
        }
        let mut ball = frontier.clone();
        for _ in 0..5 {
            let mut next = BTreeSet::new();
            for c in &frontier {
                for vv in c.vertices() {
                    let key = keys.key(&vv, k)?;
                    // members of the vertex class at level k, one generation finer
                    let g = GridGluer::new(params, k + 1);
                    let gp = GridPoint { x: key.anchor[0], y: key.anchor[1..].to_vec() };
                    for mbr in g.coset(&gp, k)? {
                        for t in crate::complex::top_cells_at_vertex(&CellId::vertex(k + 1, vec![mbr.x, mbr.y[0]])) {
                            if !ball.contains(&t) {
                                next.insert(t);
                            }
                        }
                    }
                }
            }
            ball.extend(next.iter().cloned());
            frontier = next;
        }
        let xv = Q::from_integer(sat[0].anchor[0] as i128) * params.side(0, k);
        let mut rects = Vec::new();
        for t in &ball {
            let r = params.realize(t);
            if r[0].0 < xv - h || r[0].1 > xv + h {
                continue;
            }
            // rows whose every point is within 5 rows of a level-k line
            let rel = crate::complex::torus_reduce(&r[1].0, &row) / v;
            let rr = rel.to_integer();
            if rr <= 4 || rr >= params.mv as i128 - 5 {
                rects.push(Rect { x0: r[0].0, x1: r[0].1, y0: r[1].0, y1: r[1].1 });
            }
        }
        rects.sort();
        if !rects.is_empty() {
            fam0.push(CoverSet { label: format!("vertex {}", sat[0]), rects });
        }
    }

    let mut out = CoverFamily {
        k,
        window: window.clone(),
        families: [fam2, fam1, fam0],
        bound: params.weight(k),
        sep: h,
        checks: Default::default(),
        samples,
        uncovered: Vec::new(),
    };

    // coverage on random window points
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let den = 1_000_003i128;
    for _ in 0..samples {
        let pt: Vec<Q> = (0..2)
            .map(|ax| {
                let t = Q::new(rng.gen_range(0..=den), den);
                window.lo[ax] + (window.hi[ax] - window.lo[ax]) * t
            })
            .collect();
        let p = ExactPoint::new(pt);
        let hit = out.families.iter().flatten().any(|s| s.contains(&p));
        if !hit && out.uncovered.len() < 16 {
            out.uncovered.push(p);
        }
    }

    // separation and diameters
    let kk = k + 2;
    let unit = params.weight(kk);
    for (fi, fam) in out.families.iter().enumerate() {
        let mut chk = FamilyCheck { diam_certified: fi == 0, ..Default::default() };
        let mut cells: Vec<[BTreeSet<CellId>; 2]> = Vec::new();
        for s in fam {
            cells.push([keys.of_set(s, k)?, keys.of_set(s, k + 1)?]);
        }
        let hulls: Vec<(Q, Q)> = fam.iter().map(|s| s.x_hull()).collect();
        let in_window: Vec<bool> = fam
            .iter()
            .map(|s| s.rects.iter().any(|r| r.x1 >= window.lo[0] && r.x0 <= window.hi[0] && r.y1 >= window.lo[1] && r.y0 <= window.hi[1]))
            .collect();
        for a in 0..fam.len() {
            for b in a + 1..fam.len() {
                if !in_window[a] || !in_window[b] {
                    continue;
                }
                chk.pairs += 1;
                let gap = (hulls[b].0 - hulls[a].1).max(hulls[a].0 - hulls[b].1);
                if gap >= h {
                    chk.by_x_gap += 1;
                    continue;
                }
                if (0..2).any(|l| cells[a][l].is_disjoint(&cells[b][l])) {
                    chk.by_cells += 1;
                    continue;
                }
                let cap = (h / unit).to_integer() + 3;
                let start = rect_faces(params, &fam[a].rects, kk);
                let target = rect_faces(params, &fam[b].rects, kk);
                let lo = if start.meets(&target) {
                    Q::zero()
                } else {
                    let mut spec = FloodSpec::new(kk, kk, g_floor(params, &(unit * Q::from_integer(cap))), kk);
                    spec.max_cost = Some(cap);
                    let res = Flood::new(params, spec)?.run(&start, Some(&target))?;
                    match res.hit {
                        Some(c) => unit * Q::from_integer(c - 2),
                        None => unit * Q::from_integer(cap - 1),
                    }
                };
                if lo >= h {
                    chk.by_bracket += 1;
                } else {
                    chk.unresolved.push((fam[a].label.clone(), fam[b].label.clone(), lo.max(Q::zero())));
                }
            }
        }
        // diameters on corner samples of a few sets
        for (si, s) in fam.iter().enumerate().filter(|(i, _)| in_window[*i]).take(6) {
            let _ = si;
            let mut pts: Vec<ExactPoint> = s.rects.iter().flat_map(|r| r.corners()).collect();
            pts.sort_by(|a, b| a.coords.cmp(&b.coords));
            pts.dedup();
            if pts.len() > 12 {
                let step = pts.len().div_ceil(12);
                pts = pts.into_iter().step_by(step).collect();
            }
            for i in 0..pts.len() {
                for j in i + 1..pts.len() {
                    let br = metric::dinf_bracket(params, &pts[i], &pts[j], &[kk])?;
                    chk.diam_lo = chk.diam_lo.max(br.lo);
                    chk.diam_hi = chk.diam_hi.max(br.hi);
                }
            }
        }
        if fi == 0 {
            // c_sigma sits inside one closed level-k cell
            chk.diam_hi = chk.diam_hi.max(Q::zero()).min(out.bound);
        }
        out.checks[fi] = chk;
    }
    Ok(out)
}

#[derive(Clone, Debug)]
pub struct DsRow {
    pub center: ExactPoint,
    pub r: Q,
    /// Snowflake balls of radius `C r` used to cover the preimage.
    pub count: usize,
    /// Top cells of generation `g_floor(r)` meeting the preimage.
    pub cells: usize,
}

#[derive(Clone, Debug)]
pub struct DsReport {
    pub c: f64,
    pub rows: Vec<DsRow>,
}

impl DsReport {
    pub fn max_count(&self) -> usize {
        self.rows.iter().map(|r| r.count).max().unwrap_or(0)
    }

    /// Largest count per radius, in decreasing radius order.
    pub fn per_radius(&self) -> Vec<(Q, usize)> {
        let mut m: BTreeMap<Q, usize> = BTreeMap::new();
        for r in &self.rows {
            let e = m.entry(r.r).or_insert(0);
            *e = (*e).max(r.count);
        }
        m.into_iter().rev().collect()
    }
}

/// Cover the preimage of each flood ball by tiles that fit in snowflake
/// balls of radius `c r`; the tile count bounds the covering number.
pub fn david_semmes_check(params: &SystemParams, centers: &[ExactPoint], radii: &[Q], k: i32, c: f64) -> Result<DsReport, LabError> {
    let alpha = params.alpha();
    let unit = params.weight(k);
    let mut rows = Vec::new();
    for p in centers {
        let rmax = radii.iter().max().cloned().unwrap_or_else(Q::zero);
        let res = flood_from(params, &[p.clone()], k, (rmax / unit).to_integer())?;
        for r in radii {
            let ball = res.ball((r / unit).to_integer());
            let rf = qf(r);
            let w = c * rf;
            let ht = 2.0 * (c * rf / 2.0).powf(1.0 / alpha);
            let sx = qf(&qpow(params.m, -k)) / 2.0;
            let sy = qf(&qpow(params.mv, -k)) / 2.0;
            let g = g_floor(params, r);
            let (cw, ch) = (qf(&params.side(0, g)), qf(&params.side(1, g)));
            let mut tiles: HashSet<(i64, i64)> = HashSet::new();
            let mut cells: HashSet<(i64, i64)> = HashSet::new();
            for (col, ivs) in &ball.cols {
                let x = *col as f64 * sx;
                for (a, b) in ivs {
                    let (y0, y1) = (*a as f64 * sy, *b as f64 * sy);
                    let tx = (x / w).floor() as i64;
                    for ty in (y0 / ht).floor() as i64..=(y1 / ht).floor() as i64 {
                        tiles.insert((tx, ty));
                    }
                    let cx = (x / cw).floor() as i64;
                    for cy in (y0 / ch).floor() as i64..=(y1 / ch).floor() as i64 {
                        cells.insert((cx, cy));
                    }
                }
            }
            rows.push(DsRow { center: p.clone(), r: *r, count: tiles.len(), cells: cells.len() });
        }
    }
    Ok(DsReport { c, rows })
}

#[derive(Clone, Debug)]
pub struct LightRow {
    pub center: ExactPoint,
    pub r: Q,
    pub pieces: usize,
    pub components: usize,
    /// Largest component diameter (upper bound) over `diam(W)` (lower bound).
    pub ratio: f64,
}

/// Connected pieces of a face set in the plane (face adjacency).
fn pieces(s: &FaceSet) -> Vec<FaceSet> {
    let ivs: Vec<(i64, i64, i64)> = s.cols.iter().flat_map(|(c, v)| v.iter().map(move |(a, b)| (*c, *a, *b))).collect();
    let idx: HashMap<(i64, i64), usize> = ivs.iter().enumerate().map(|(i, (c, a, _))| ((*c, *a), i)).collect();
    let mut parent: Vec<usize> = (0..ivs.len()).collect();
    fn find(p: &mut [usize], x: usize) -> usize {
        let mut r = x;
        while p[r] != r {
            r = p[r];
        }
        let mut y = x;
        while p[y] != r {
            let n = p[y];
            p[y] = r;
            y = n;
        }
        r
    }
    for (i, (c, a, b)) in ivs.iter().enumerate() {
        if let Some(v) = s.cols.get(&(c + 1)) {
            for (a2, b2) in v {
                if a2 <= b && a <= b2 {
                    let j = idx[&(c + 1, *a2)];
                    let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                    parent[ri] = rj;
                }
            }
        }
    }
    let mut groups: BTreeMap<usize, FaceSet> = BTreeMap::new();
    for (i, (c, a, b)) in ivs.iter().enumerate() {
        let r = find(&mut parent, i);
        groups.entry(r).or_default().insert(*c, *a, *b);
    }
    groups.into_values().collect()
}

/// Lipschitz-light check of `X_j -> X_inf` with the deep level `k` as a proxy
/// for the limit: `W` is the flood ball of radius `r` at level `k`, its
/// preimage in `X_j` is split into plane pieces, pieces closer than
/// `diam W` in `d_j` (chains down to generation `k`) are merged, and the
/// component diameters are bounded by twice their flood eccentricity.
pub fn lipschitz_light_check(params: &SystemParams, j: i32, k: i32, centers: &[ExactPoint], radii: &[Q]) -> Result<Vec<LightRow>, LabError> {
    let unit = params.weight(k);
    let mut out = Vec::new();
    for p in centers {
        for r in radii {
            let cr = (r / unit).to_integer();
            let res = flood_from(params, &[p.clone()], k, cr)?;
            let w = res.ball(cr);
            let reached = res.layers.last().map(|(c, _)| *c).unwrap_or(0);
            let diam_w = Q::from_integer(reached.max(1)) * unit;
            let ps = pieces(&w);
            let n = ps.len();
            let mut comp: Vec<usize> = (0..n).collect();
            let dcap = (diam_w / unit).to_integer();
            let mut ecc = vec![0i128; n];
            for a in 0..n {
                let mut spec = FloodSpec::new(j, k, g_floor(params, &(unit * Q::from_integer(4 * dcap + 4))), k);
                spec.max_cost = Some(4 * dcap + 4);
                let res = Flood::new(params, spec)?.run(&ps[a], None)?;
                for b in 0..n {
                    if b == a {
                        continue;
                    }
                    let hit = res.layers.iter().find(|(_, s)| s.meets(&ps[b])).map(|(c, _)| *c);
                    if hit.is_some_and(|c| c <= dcap) {
                        let (ra, rb) = (root(&mut comp, a), root(&mut comp, b));
                        comp[ra] = rb;
                    }
                }
                // cost to cover the whole piece
                let mut covered = FaceSet::new();
                let mut e = 0;
                for (c, s) in &res.layers {
                    covered.union_with(s);
                    e = *c;
                    if ps[a].minus(&covered).is_empty() {
                        break;
                    }
                }
                ecc[a] = e;
            }
            let mut diam: BTreeMap<usize, i128> = BTreeMap::new();
            for a in 0..n {
                let ra = root(&mut comp, a);
                let d = diam.entry(ra).or_insert(0);
                *d += 2 * ecc[a] + 2 * dcap;
            }
            let worst = diam.values().max().cloned().unwrap_or(0);
            out.push(LightRow {
                center: p.clone(),
                r: *r,
                pieces: n,
                components: diam.len(),
                ratio: worst as f64 / reached.max(1) as f64,
            });
        }
    }
    Ok(out)
}

fn root(p: &mut [usize], x: usize) -> usize {
    let mut r = x;
    while p[r] != r {
        r = p[r];
    }
    p[x] = r;
    r
}

/// Grid points of the boundary of `[0, 1]^2` at resolution `k` that are
/// identified with another boundary point at level `j`.
pub fn boundary_collisions(params: &SystemParams, k: i32, j: i32) -> Result<(usize, Vec<(GridPoint, GridPoint)>), LabError> {
    let g = GridGluer::new(params, k);
    let (nx, ny) = (params.m.pow(k as u32), params.mv.pow(k as u32));
    let mut pts = Vec::new();
    for x in 0..=nx {
        pts.push(GridPoint { x, y: vec![0] });
        pts.push(GridPoint { x, y: vec![ny] });
    }
    for y in 1..ny {
        pts.push(GridPoint { x: 0, y: vec![y] });
        pts.push(GridPoint { x: nx, y: vec![y] });
    }
    let on_boundary = |p: &GridPoint| (p.x == 0 || p.x == nx) && (0..=ny).contains(&p.y[0]) || (p.y[0] == 0 || p.y[0] == ny) && (0..=nx).contains(&p.x);
    let mut bad = Vec::new();
    for p in &pts {
        for q in g.coset(p, j)? {
            if q != *p && on_boundary(&q) {
                bad.push((p.clone(), q));
            }
        }
    }
    Ok((pts.len(), bad))
}

/// Distance of `y` to the level-`k` horizontal lines.
pub fn y_to_lines(params: &SystemParams, y: &Q, k: i32) -> Q {
    torus_dist(y, &Q::zero(), &params.side(1, k)).abs()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::q;

    #[test]
    fn ahlfors_band_small() {
        let p = SystemParams::std2d(2);
        let cs = vec![ExactPoint::xy(q(3, 7), q(5, 11)), ExactPoint::xy(q(5, 7), q(2, 13))];
        let rep = ahlfors_scan(&p, &cs, &[q(1, 4), q(1, 8), q(1, 16)], 4).unwrap();
        assert!(rep.rows.iter().all(|r| r.inner <= r.outer && r.inner > 0.0));
        assert!(rep.band() < 20.0);
    }

    #[test]
    fn zero_radius_has_zero_mass() {
        let p = SystemParams::std2d(2);
        let rep = ahlfors_scan(&p, &[ExactPoint::xy(q(1, 3), q(1, 5))], &[q(0, 1)], 3).unwrap();
        assert_eq!(rep.rows[0].outer, 0.0);
    }

    #[test]
    fn cell_scale_ball_holds_a_cell() {
        let p = SystemParams::std2d(2);
        let c = CellId::top(2, vec![5, 7]);
        let rep = ahlfors_scan(&p, &[p.center(&c)], &[q(1, 16)], 4).unwrap();
        assert!(rep.rows[0].outer >= qf(&p.cell_mass(2)));
    }

    #[test]
    fn pieces_split_disjoint_blocks() {
        let mut s = FaceSet::new();
        s.insert(1, 1, 5);
        s.insert(2, 3, 3);
        s.insert(3, 2, 4);
        s.insert(9, 1, 1);
        assert_eq!(pieces(&s).len(), 2);
    }

    #[test]
    fn david_semmes_counts_bounded() {
        let p = SystemParams::std2d(2);
        let rep = david_semmes_check(&p, &[ExactPoint::xy(q(3, 7), q(5, 11))], &[q(1, 4), q(1, 8), q(1, 16)], 4, 2.0).unwrap();
        assert!(rep.max_count() > 0 && rep.max_count() < 200);
    }

    #[test]
    fn boundary_collisions_only_on_right_side() {
        // the generation-0 line x = 1 glues (1, 0) to (1, 1)
        let p = SystemParams::std2d(2);
        let (n, bad) = boundary_collisions(&p, 2, 2).unwrap();
        assert!(n > 0);
        assert_eq!(bad.len(), 2);
        assert!(bad.iter().all(|(a, b)| a.x == 16 && b.x == 16));
    }

    #[test]
    fn light_ratio_finite() {
        let p = SystemParams::std2d(2);
        let rows = lipschitz_light_check(&p, 1, 3, &[ExactPoint::xy(q(3, 7), q(5, 11))], &[q(1, 16)]).unwrap();
        assert!(rows.iter().all(|r| r.ratio.is_finite() && r.components >= 1));
    }
}
