//! Level-set flood for planar chain distances.
//!
//! Everything lives on the doubled grid of a fine resolution `k`: doubled
//! coordinate `2X` is the line `X m^-k` (resp. `X m_v^-k`), `2X+1` the open
//! interval after it. A face set stores, per doubled column, sorted disjoint
//! inclusive intervals of doubled rows.
//!
//! The flood keeps the set `E` of faces reached so far (always saturated under
//! `R_j`). Popping the cheapest pending cost `c` adds the new part of the
//! pending set; every closed cell of generation `g` touching it becomes
//! reachable at `c + m^(k-g)`.

use std::collections::{BTreeMap, HashMap};

use num_integer::Integer;

use crate::gluing::BaseGenerator;
use crate::lattice::{floor_q, qpow, ExactPoint, SystemParams};
use crate::{LabError, Q};

pub type Ivs = Vec<(i64, i64)>;

fn merge(v: &mut Ivs) {
    if v.len() < 2 {
        return;
    }
    v.sort_unstable();
    let mut out: Ivs = Vec::with_capacity(v.len());
    for &(a, b) in v.iter() {
        if let Some(last) = out.last_mut() {
            if a <= last.1 + 1 {
                if b > last.1 {
                    last.1 = b;
                }
                continue;
            }
        }
        out.push((a, b));
    }
    *v = out;
}

/// Union of two sorted merged interval lists.
fn union_sorted(a: &Ivs, b: &Ivs) -> Ivs {
    if a.is_empty() {
        return b.clone();
    }
    if b.is_empty() {
        return a.clone();
    }
    let mut out: Ivs = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() || j < b.len() {
        let next = if j >= b.len() || (i < a.len() && a[i].0 <= b[j].0) {
            i += 1;
            a[i - 1]
        } else {
            j += 1;
            b[j - 1]
        };
        match out.last_mut() {
            Some(last) if next.0 <= last.1 + 1 => {
                if next.1 > last.1 {
                    last.1 = next.1;
                }
            }
            _ => out.push(next),
        }
    }
    out
}

fn subtract(a: &Ivs, b: &Ivs) -> Ivs {
    let mut out = Vec::new();
    let mut j = 0;
    for &(lo, hi) in a {
        let mut cur = lo;
        while j < b.len() && b[j].1 < cur {
            j += 1;
        }
        let mut jj = j;
        while cur <= hi {
            if jj >= b.len() || b[jj].0 > hi {
                out.push((cur, hi));
                break;
            }
            let (blo, bhi) = b[jj];
            if blo > cur {
                out.push((cur, blo - 1));
            }
            cur = cur.max(bhi + 1);
            jj += 1;
        }
    }
    out
}

fn ivs_contains(v: &Ivs, y: i64) -> bool {
    let i = v.partition_point(|iv| iv.1 < y);
    i < v.len() && v[i].0 <= y
}

fn ivs_meets(v: &Ivs, lo: i64, hi: i64) -> Option<i64> {
    let i = v.partition_point(|iv| iv.1 < lo);
    if i < v.len() && v[i].0 <= hi {
        Some(v[i].0.max(lo))
    } else {
        None
    }
}

/// A finite union of faces of the resolution-`k` grid.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct FaceSet {
    pub cols: BTreeMap<i64, Ivs>,
}

impl FaceSet {
    pub fn new() -> Self {
        FaceSet::default()
    }

    pub fn is_empty(&self) -> bool {
        self.cols.is_empty()
    }

    pub fn insert(&mut self, col: i64, lo: i64, hi: i64) {
        let v = self.cols.entry(col).or_default();
        v.push((lo, hi));
        merge(v);
    }

    pub fn union_with(&mut self, other: &FaceSet) {
        for (c, ivs) in &other.cols {
            match self.cols.get_mut(c) {
                Some(v) => *v = union_sorted(v, ivs),
                None => {
                    self.cols.insert(*c, ivs.clone());
                }
            }
        }
    }

    pub fn minus(&self, other: &FaceSet) -> FaceSet {
        let mut out = FaceSet::new();
        for (c, ivs) in &self.cols {
            let d = match other.cols.get(c) {
                Some(o) => subtract(ivs, o),
                None => ivs.clone(),
            };
            if !d.is_empty() {
                out.cols.insert(*c, d);
            }
        }
        out
    }

    pub fn contains(&self, col: i64, y: i64) -> bool {
        self.cols.get(&col).is_some_and(|v| ivs_contains(v, y))
    }

    /// Some face of the set inside the doubled box, if any.
    pub fn meets_box(&self, c0: i64, c1: i64, y0: i64, y1: i64) -> Option<(i64, i64)> {
        for (c, v) in self.cols.range(c0..=c1) {
            if let Some(y) = ivs_meets(v, y0, y1) {
                return Some((*c, y));
            }
        }
        None
    }

    pub fn meets(&self, other: &FaceSet) -> bool {
        for (c, v) in &self.cols {
            if let Some(o) = other.cols.get(c) {
                if v.iter().any(|(a, b)| ivs_meets(o, *a, *b).is_some()) {
                    return true;
                }
            }
        }
        false
    }

    pub fn interval_count(&self) -> usize {
        self.cols.values().map(|v| v.len()).sum()
    }

    /// Number of open top faces (odd, odd).
    pub fn open_faces(&self) -> i128 {
        let mut n = 0i128;
        for (c, v) in &self.cols {
            if c.rem_euclid(2) == 0 {
                continue;
            }
            for (a, b) in v {
                // odd values in [a, b]
                let lo = if a.rem_euclid(2) == 1 { *a } else { a + 1 };
                let hi = if b.rem_euclid(2) == 1 { *b } else { b - 1 };
                if hi >= lo {
                    n += ((hi - lo) / 2 + 1) as i128;
                }
            }
        }
        n
    }

    /// Faces of the points, on the doubled grid of resolution `k`.
    pub fn from_points(params: &SystemParams, pts: &[ExactPoint], k: i32) -> FaceSet {
        let mut s = FaceSet::new();
        for p in pts {
            let (c, y) = doubled(params, p, k);
            s.insert(c, y, y);
        }
        s
    }
}

/// Doubled coordinates of the face containing `p` at resolution `k`.
pub fn doubled(params: &SystemParams, p: &ExactPoint, k: i32) -> (i64, i64) {
    let d = |v: Q| -> i64 {
        if v.is_integer() {
            2 * v.to_integer() as i64
        } else {
            2 * floor_q(&v) as i64 + 1
        }
    };
    (d(p.coords[0] * qpow(params.m, k)), d(p.coords[1] * qpow(params.mv, k)))
}

/// Exact point at the centre of a doubled face.
pub fn face_center(params: &SystemParams, col: i64, y: i64, k: i32) -> ExactPoint {
    ExactPoint::xy(
        Q::new(col as i128, 2) * qpow(params.m, -k),
        Q::new(y as i128, 2) * qpow(params.mv, -k),
    )
}

/// Translation acting on a column: rows `[off + t*period, off + t*period + len]` move by `shift`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
struct Action {
    off: i64,
    period: i64,
    len: i64,
    shift: i64,
}

#[derive(Clone, Debug)]
pub struct FloodSpec {
    /// Relation level.
    pub j: i32,
    /// Grid resolution; at least `g_hi` and `j`.
    pub k: i32,
    /// Cell generations allowed in chains.
    pub g_lo: i32,
    pub g_hi: i32,
    /// Stop once costs exceed this (units of `m^-k`).
    pub max_cost: Option<i128>,
    /// Interval budget for the reached set.
    pub limit: usize,
}

impl FloodSpec {
    pub fn new(j: i32, k: i32, g_lo: i32, g_hi: i32) -> Self {
        FloodSpec { j, k, g_lo, g_hi, max_cost: None, limit: 4_000_000 }
    }

    pub fn unit(&self, params: &SystemParams) -> Q {
        qpow(params.m, -self.k)
    }
}

#[derive(Clone, Debug, Default)]
pub struct FloodResult {
    /// Newly reached faces per cost, in increasing cost order.
    pub layers: Vec<(i128, FaceSet)>,
    /// Cost at which the target was first reached.
    pub hit: Option<i128>,
}

impl FloodResult {
    /// Union of all layers with cost `<= c`.
    pub fn ball(&self, c: i128) -> FaceSet {
        let mut out = FaceSet::new();
        for (cost, s) in &self.layers {
            if *cost > c {
                break;
            }
            out.union_with(s);
        }
        out
    }

    /// Cost of the layer containing the face, if reached.
    pub fn cost_of(&self, col: i64, y: i64) -> Option<i128> {
        self.layers.iter().find(|(_, s)| s.contains(col, y)).map(|(c, _)| *c)
    }

    /// Least cost among faces meeting the doubled box.
    pub fn min_cost_in_box(&self, c0: i64, c1: i64, y0: i64, y1: i64) -> Option<i128> {
        self.layers
            .iter()
            .find(|(_, s)| s.meets_box(c0, c1, y0, y1).is_some())
            .map(|(c, _)| *c)
    }
}

pub struct Flood<'a> {
    pub params: &'a SystemParams,
    pub spec: FloodSpec,
    cache: HashMap<i64, Vec<Action>>,
}

fn pw(b: i64, e: i32) -> i64 {
    b.checked_pow(e as u32).expect("grid power overflow")
}

impl<'a> Flood<'a> {
    pub fn new(params: &'a SystemParams, spec: FloodSpec) -> Result<Self, LabError> {
        if params.n != 2 {
            return Err(LabError::InvalidArgument("flood is planar; use the oracle for n > 2".into()));
        }
        if spec.k < spec.g_hi || spec.k < spec.j || spec.g_lo > spec.g_hi {
            return Err(LabError::InvalidArgument(format!("bad flood spec {spec:?}")));
        }
        Ok(Flood { params, spec, cache: HashMap::new() })
    }

    fn rule_matches(&self, rule: &BaseGenerator, col: i64, g: i32) -> bool {
        let m = self.params.m as i128;
        let d = self.spec.k - g;
        let md = (m).pow(d as u32);
        if col.rem_euclid(2) == 0 {
            let x = (col / 2) as i128;
            if rule.x_extent {
                let r = x.rem_euclid(md * m);
                r >= rule.x_pos as i128 * md && r <= (rule.x_pos as i128 + 1) * md
            } else {
                x % md == 0 && (x / md).rem_euclid(m) == rule.x_pos as i128
            }
        } else {
            if !rule.x_extent {
                return false;
            }
            let x = ((col - 1) / 2) as i128;
            let r = x.rem_euclid(md * m);
            r >= rule.x_pos as i128 * md && r < (rule.x_pos as i128 + 1) * md
        }
    }

    fn actions(&mut self, col: i64) -> &Vec<Action> {
        if !self.cache.contains_key(&col) {
            let acts = self.compute_actions(col);
            self.cache.insert(col, acts);
        }
        &self.cache[&col]
    }

    fn compute_actions(&self, col: i64) -> Vec<Action> {
        let p = self.params;
        let k = self.spec.k;
        let mut out = Vec::new();
        // generations that can act: lines have a definite generation, slabs need |x| >= m^-g
        let ax = (col.unsigned_abs() as i128 + 1) / 2; // |X| rounded up
        let mut gens: Vec<i32> = Vec::new();
        for g in (k - 64).max(-64)..=self.spec.j {
            let d = k - g;
            if d < 0 {
                continue;
            }
            let md = (p.m as i128).checked_pow(d as u32);
            match md {
                Some(md) if md <= ax.max(1) * p.m as i128 => gens.push(g),
                _ => {}
            }
        }
        for g in gens {
            let d = k - g;
            let mm = pw(p.mv, d);
            for rule in &p.rules {
                if !self.rule_matches(rule, col, g) {
                    continue;
                }
                if let crate::gluing::AxisPattern::Periodic { residue, period } = rule.tail[0] {
                    let off = 2 * residue * mm;
                    let per = 2 * period * mm;
                    let shift = 2 * rule.shift[0] * mm;
                    out.push(Action { off, period: per, len: 2 * mm, shift });
                    out.push(Action { off: off + shift, period: per, len: 2 * mm, shift: -shift });
                }
            }
        }
        out
    }

    /// Close one column's intervals under the gluing actions.
    fn sat_column(&mut self, col: i64, ivs: &mut Ivs) {
        let acts = self.actions(col).clone();
        if acts.is_empty() {
            return;
        }
        loop {
            let mut add: Ivs = Vec::new();
            for &(a, b) in ivs.iter() {
                for act in &acts {
                    let t = act.shift;
                    let (lo, hi) = if t > 0 { (a.max(b - t + 1), b) } else { (a, b.min(a - t - 1)) };
                    if lo > hi {
                        continue;
                    }
                    let p0 = Integer::div_ceil(&(lo - act.off - act.len), &act.period);
                    let p1 = Integer::div_floor(&(hi - act.off), &act.period);
                    for pp in p0..=p1 {
                        let s = act.off + pp * act.period;
                        let l = lo.max(s);
                        let h = hi.min(s + act.len);
                        if l <= h {
                            add.push((l + t, h + t));
                        }
                    }
                }
            }
            if add.is_empty() {
                return;
            }
            let before = ivs.clone();
            ivs.extend(add);
            merge(ivs);
            if *ivs == before {
                return;
            }
        }
    }

    pub fn saturate(&mut self, s: &FaceSet) -> FaceSet {
        let mut out = FaceSet::new();
        for (c, ivs) in &s.cols {
            let mut v = ivs.clone();
            self.sat_column(*c, &mut v);
            out.cols.insert(*c, v);
        }
        out
    }

    /// Generation-`g` cells meeting `s`: column index -> row index ranges.
    pub fn cells_meeting(&self, s: &FaceSet, g: i32) -> BTreeMap<i64, Ivs> {
        let d = self.spec.k - g;
        let sx = pw(self.params.m, d);
        let my = pw(self.params.mv, d);
        let mut blocks: BTreeMap<i64, Ivs> = BTreeMap::new();
        for (c, ivs) in &s.cols {
            let a_lo = Integer::div_ceil(c, &(2 * sx)) - 1;
            let a_hi = Integer::div_floor(c, &(2 * sx));
            let rows: Ivs = ivs
                .iter()
                .map(|(y0, y1)| (Integer::div_ceil(y0, &(2 * my)) - 1, Integer::div_floor(y1, &(2 * my))))
                .collect();
            for a in a_lo..=a_hi {
                blocks.entry(a).or_default().extend_from_slice(&rows);
            }
        }
        for v in blocks.values_mut() {
            merge(v);
        }
        blocks
    }

    /// Faces of a union of generation-`g` cells, minus `mask`.
    pub fn render(&self, cells: &BTreeMap<i64, Ivs>, g: i32, mask: Option<&FaceSet>, out: &mut FaceSet) {
        let d = self.spec.k - g;
        let sx = pw(self.params.m, d);
        let my = pw(self.params.mv, d);
        for (a, rows) in cells {
            let faces: Ivs = rows.iter().map(|(b0, b1)| (2 * b0 * my, 2 * (b1 + 1) * my)).collect();
            for c in (2 * a * sx)..=(2 * (a + 1) * sx) {
                let part = match mask.and_then(|m| m.cols.get(&c)) {
                    Some(mv) => subtract(&faces, mv),
                    None => faces.clone(),
                };
                if part.is_empty() {
                    continue;
                }
                match out.cols.get_mut(&c) {
                    Some(v) => *v = union_sorted(v, &part),
                    None => {
                        out.cols.insert(c, part);
                    }
                }
            }
        }
    }

    /// Union of closed generation-`g` cells meeting `s`.
    pub fn dilate(&self, s: &FaceSet, g: i32) -> FaceSet {
        let mut out = FaceSet::new();
        self.render(&self.cells_meeting(s, g), g, None, &mut out);
        out
    }

    fn weight(&self, g: i32) -> i128 {
        (self.params.m as i128).pow((self.spec.k - g) as u32)
    }

    /// Run from `start`; stops at the first positive cost whose cells reach
    /// `target` (if any), or once costs exceed `max_cost`. Cost 0 is never a
    /// hit: two points in one open face are still distinct, so callers decide
    /// coincidence exactly.
    pub fn run(&mut self, start: &FaceSet, target: Option<&FaceSet>) -> Result<FloodResult, LabError> {
        let mut pending: BTreeMap<i128, FaceSet> = BTreeMap::new();
        pending.insert(0, start.clone());
        let mut reached = FaceSet::new();
        let mut scheduled: BTreeMap<i32, BTreeMap<i64, Ivs>> = BTreeMap::new();
        let mut res = FloodResult::default();
        while let Some((&c, _)) = pending.iter().next() {
            if let Some(mc) = self.spec.max_cost {
                if c > mc {
                    break;
                }
            }
            let set = pending.remove(&c).unwrap();
            // the seed layer is not covered by any cell yet, so it stays out of `reached`
            // reached is saturated, so sat(P) \\ R = sat(P \\ R) \\ R
            let new = if c == 0 { self.saturate(&set) } else { self.saturate(&set.minus(&reached)).minus(&reached) };
            if new.is_empty() {
                continue;
            }
            if c > 0 {
                reached.union_with(&new);
            }
            if reached.interval_count() > self.spec.limit {
                return Err(LabError::SearchTooLarge(self.spec.limit));
            }
            let hit = c > 0 && target.is_some_and(|t| new.meets(t));
            for g in self.spec.g_lo..=self.spec.g_hi {
                let nc = c + self.weight(g);
                if self.spec.max_cost.is_some_and(|mc| nc > mc) || hit {
                    continue;
                }
                // a cell scheduled before was scheduled no later than nc
                let sched = scheduled.entry(g).or_default();
                let mut fresh: BTreeMap<i64, Ivs> = BTreeMap::new();
                for (a, rows) in self.cells_meeting(&new, g) {
                    let old = sched.entry(a).or_default();
                    let rem = subtract(&rows, old);
                    if !rem.is_empty() {
                        old.extend_from_slice(&rem);
                        merge(old);
                        fresh.insert(a, rem);
                    }
                }
                if !fresh.is_empty() {
                    let entry = pending.entry(nc).or_default();
                    self.render(&fresh, g, Some(&reached), entry);
                }
            }
            res.layers.push((c, new));
            if hit {
                res.hit = Some(c);
                break;
            }
        }
        Ok(res)
    }

    /// Class of one face (saturation of a single face).
    pub fn face_class(&mut self, col: i64, y: i64) -> FaceSet {
        let mut s = FaceSet::new();
        s.insert(col, y, y);
        self.saturate(&s)
    }

    /// Backtrack a chain of closed cells `(gen, column anchor, row anchor)`
    /// ending at the face `(col, y)` reached at cost `c`.
    pub fn witness(&mut self, res: &FloodResult, col: i64, y: i64, c: i128) -> Option<Vec<(i32, i64, i64)>> {
        let mut chain = Vec::new();
        let (mut col, mut y, mut c) = (col, y, c);
        let index: BTreeMap<i128, &FaceSet> = res.layers.iter().map(|(c, s)| (*c, s)).collect();
        while c > 0 {
            let class = self.face_class(col, y);
            let mut found = None;
            'outer: for g in self.spec.g_lo..=self.spec.g_hi {
                let w = self.weight(g);
                let prev = c - w;
                if prev < 0 {
                    continue;
                }
                // any earlier layer with cost <= prev works
                let d = self.spec.k - g;
                let sx = pw(self.params.m, d);
                let my = pw(self.params.mv, d);
                for (fc, ivs) in &class.cols {
                    for (y0, y1) in ivs {
                        for yy in [*y0, *y1] {
                            for a in (Integer::div_ceil(fc, &(2 * sx)) - 1)..=Integer::div_floor(fc, &(2 * sx)) {
                                for b in (Integer::div_ceil(&yy, &(2 * my)) - 1)..=Integer::div_floor(&yy, &(2 * my)) {
                                    let (c0, c1) = (2 * a * sx, 2 * (a + 1) * sx);
                                    let (r0, r1) = (2 * b * my, 2 * (b + 1) * my);
                                    for (lc, s) in index.range(..=prev) {
                                        if let Some((nc, ny)) = s.meets_box(c0, c1, r0, r1) {
                                            found = Some((g, a, b, nc, ny, *lc));
                                            break 'outer;
                                        }
                                    }
                                }
                            }
                        }
                    }
                }
            }
            let (g, a, b, nc, ny, lc) = found?;
            chain.push((g, a, b));
            col = nc;
            y = ny;
            c = lc;
        }
        chain.reverse();
        Some(chain)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interval_algebra() {
        let mut v = vec![(5, 7), (1, 2), (3, 3), (10, 12)];
        merge(&mut v);
        assert_eq!(v, vec![(1, 3), (5, 7), (10, 12)]);
        assert_eq!(subtract(&v, &vec![(2, 5), (11, 11)]), vec![(1, 1), (6, 7), (10, 10), (12, 12)]);
        assert!(ivs_contains(&v, 6) && !ivs_contains(&v, 8));
    }

    #[test]
    fn column_saturation_matches_cosets() {
        let p = SystemParams::std2d(2);
        let mut f = Flood::new(&p, FloodSpec::new(1, 2, 0, 2)).unwrap();
        // x = 1/2 at resolution 2 is X = 8, doubled 16; y = 2/6 is Y = 12, doubled 24
        let s = f.face_class(16, 24);
        assert_eq!(s.cols[&16], vec![(12, 12), (24, 24), (36, 36)]);
        // open column: nothing happens
        assert_eq!(f.face_class(15, 25).cols[&15], vec![(25, 25)]);
    }

    #[test]
    fn dilation_of_a_point() {
        let p = SystemParams::std2d(2);
        let f = Flood::new(&p, FloodSpec::new(1, 1, 1, 1)).unwrap();
        let mut s = FaceSet::new();
        s.insert(3, 3, 3);
        let d = f.dilate(&s, 1);
        assert_eq!(d.cols.len(), 3);
        assert_eq!(d.cols[&2], vec![(2, 4)]);
        let mut v = FaceSet::new();
        v.insert(2, 2, 2);
        assert_eq!(f.dilate(&v, 1).cols.len(), 5);
    }
}
