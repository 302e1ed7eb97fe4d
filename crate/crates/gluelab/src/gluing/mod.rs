//! Gluing relations `R_j`: rule tables, generators, cosets and cell saturation.
//!
//! Every family is described by a list of [`BaseGenerator`]s living at
//! generation 1; the relation `R_j` is generated by their `Phi`-conjugates at
//! every generation `g <= j` (negative generations included).

pub mod axioms;

use std::collections::{BTreeSet, VecDeque};

use num_traits::{Signed, Zero};

use crate::lattice::{ceil_q, floor_q, qpow, BoxQ, CellId, ExactPoint, SystemParams};
use crate::{LabError, Q};

/// Coset size guard; the planar families never get close.
pub const COSET_LIMIT: usize = 4096;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum AxisPattern {
    /// The glued set spans the whole axis.
    Any,
    /// Rows `[residue + t*period, residue + t*period + 1]` (generation-1 units).
    Periodic { residue: i64, period: i64 },
}

/// One translation rule at generation 1.
///
/// Sources sit on `x in x_pos/m + Z` (or the slab `[x_pos, x_pos+1]/m + Z`
/// when `x_extent` is set), restricted per tail axis by `tail`, and move by
/// `shift * m_v^-1`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct BaseGenerator {
    pub x_pos: i64,
    pub x_extent: bool,
    pub tail: Vec<AxisPattern>,
    pub shift: Vec<i64>,
}

impl BaseGenerator {
    pub fn validate(&self, params: &SystemParams) -> Result<(), LabError> {
        let bad = |s: &str| Err(LabError::InvalidParams(format!("rule {:?}: {s}", self)));
        let top = if self.x_extent { params.m - 2 } else { params.m - 1 };
        if self.x_pos < 1 || self.x_pos > top {
            return bad("x position must avoid integer lines");
        }
        if self.tail.len() + 1 != params.n || self.shift.len() + 1 != params.n {
            return bad("tail/shift length must be n-1");
        }
        if self.shift.iter().all(|s| *s == 0) {
            return bad("zero translation");
        }
        for (t, sh) in self.tail.iter().zip(&self.shift) {
            match t {
                AxisPattern::Periodic { residue, period } => {
                    if *period < 1 || *residue < 0 || residue >= period {
                        return bad("bad periodic pattern");
                    }
                }
                // a shift along an unrestricted axis maps the source set to itself
                AxisPattern::Any if *sh != 0 => return bad("shift along an unrestricted axis"),
                AxisPattern::Any => {}
            }
        }
        Ok(())
    }
}

pub fn std2d_rules() -> Vec<BaseGenerator> {
    (1..=3)
        .map(|i| BaseGenerator {
            x_pos: i,
            x_extent: false,
            tail: vec![AxisPattern::Periodic { residue: i - 1, period: 3 }],
            shift: vec![1],
        })
        .collect()
}

pub fn general_n_rules(n: usize) -> Vec<BaseGenerator> {
    let mut out = Vec::new();
    for d in 2..=n {
        for i in 1..=3i64 {
            let mut tail = vec![AxisPattern::Any; n - 1];
            tail[d - 2] = AxisPattern::Periodic { residue: i - 1, period: 3 };
            let mut shift = vec![0; n - 1];
            shift[d - 2] = 1;
            out.push(BaseGenerator {
                x_pos: 1 + 3 * (d as i64 - 2) + (i - 1),
                x_extent: false,
                tail,
                shift,
            });
        }
    }
    out
}

/// `[1/3, 2/3] x [1/6, 2/6] + Z^2` glued to its translate by `3/6`.
pub fn counterexample_rules() -> Vec<BaseGenerator> {
    vec![BaseGenerator {
        x_pos: 1,
        x_extent: true,
        tail: vec![AxisPattern::Periodic { residue: 1, period: 6 }],
        shift: vec![3],
    }]
}

/// A generator of `Phi^{gen-1}_* R`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GluingGenerator {
    pub gen: i32,
    pub source_cell: CellId,
    pub target_cell: CellId,
    pub translation: Vec<Q>,
}

/// Generators of generation `i` whose source cell meets `bx`.
pub fn generators_at(
    params: &SystemParams,
    i: i32,
    bx: &BoxQ,
) -> Result<Vec<GluingGenerator>, LabError> {
    if i < params.gen_range.0 || i > params.gen_range.1 {
        return Err(LabError::InvalidArgument(format!(
            "generation {i} outside {:?}",
            params.gen_range
        )));
    }
    let n = params.n;
    let mut out = Vec::new();
    for rule in &params.rules {
        let sx = params.side(0, i);
        let m = params.m as i128;
        // x anchors
        let lo = &bx.lo[0] / sx;
        let hi = &bx.hi[0] / sx;
        let (alo, ahi) = if rule.x_extent {
            (ceil_q(&lo) - 1, floor_q(&hi))
        } else {
            (ceil_q(&lo), floor_q(&hi))
        };
        let xs: Vec<i64> = (alo..=ahi)
            .filter(|a| a.rem_euclid(m) == rule.x_pos as i128)
            .map(|a| a as i64)
            .collect();
        if xs.is_empty() {
            continue;
        }
        let mut rows: Vec<Vec<i64>> = Vec::with_capacity(n - 1);
        for (t, pat) in rule.tail.iter().enumerate() {
            let sy = params.side(t + 1, i);
            let r_lo = ceil_q(&(&bx.lo[t + 1] / sy)) - 1;
            let r_hi = floor_q(&(&bx.hi[t + 1] / sy));
            rows.push(
                (r_lo..=r_hi)
                    .filter(|r| match pat {
                        AxisPattern::Any => true,
                        AxisPattern::Periodic { residue, period } => {
                            r.rem_euclid(*period as i128) == *residue as i128
                        }
                    })
                    .map(|r| r as i64)
                    .collect(),
            );
        }
        let extent = if rule.x_extent { (1u32 << n) - 1 } else { (1u32 << n) - 2 };
        let translation: Vec<Q> = std::iter::once(Q::zero())
            .chain(
                rule.shift
                    .iter()
                    .map(|s| Q::from_integer(*s as i128) * params.side(1, i)),
            )
            .collect();
        let mut delta = vec![0i64];
        delta.extend(rule.shift.iter().copied());
        for x in &xs {
            for tail in product(&rows) {
                let mut anchor = vec![*x];
                anchor.extend(tail);
                let src = CellId::new(i, anchor, extent);
                out.push(GluingGenerator {
                    gen: i,
                    target_cell: src.translated(&delta),
                    source_cell: src,
                    translation: translation.clone(),
                });
            }
        }
    }
    out.sort_by(|a, b| a.source_cell.cmp(&b.source_cell));
    Ok(out)
}

fn product(rows: &[Vec<i64>]) -> Vec<Vec<i64>> {
    let mut out = vec![Vec::new()];
    for r in rows {
        let mut next = Vec::with_capacity(out.len() * r.len());
        for pre in &out {
            for v in r {
                let mut p = pre.clone();
                p.push(*v);
                next.push(p);
            }
        }
        out = next;
    }
    out
}

/// An `R_j` class of points.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Coset {
    pub gen: i32,
    /// Sorted; the first member is the canonical representative.
    pub members: Vec<ExactPoint>,
}

impl Coset {
    pub fn canonical(&self) -> &ExactPoint {
        &self.members[0]
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn contains(&self, p: &ExactPoint) -> bool {
        self.members.binary_search(p).is_ok()
    }
}

fn in_pattern_q(pat: &AxisPattern, y: &Q) -> bool {
    match pat {
        AxisPattern::Any => true,
        AxisPattern::Periodic { residue, period } => {
            let t = y - Q::from_integer(*residue as i128);
            let per = Q::from_integer(*period as i128);
            let r = t - per * Q::from_integer(floor_q(&(t / per)));
            r <= Q::from_integer(1)
        }
    }
}

fn x_matches_q(params: &SystemParams, rule: &BaseGenerator, x: &Q, g: i32) -> bool {
    let xx = x * qpow(params.m, g);
    let m = params.m as i128;
    if rule.x_extent {
        let mq = Q::from_integer(m);
        let r = xx - mq * Q::from_integer(floor_q(&(xx / mq)));
        r >= Q::from_integer(rule.x_pos as i128) && r <= Q::from_integer(rule.x_pos as i128 + 1)
    } else {
        xx.is_integer() && xx.to_integer().rem_euclid(m) == rule.x_pos as i128
    }
}

/// Generations `g <= j` at which some rule can act on points with this `x`.
pub fn active_gens(params: &SystemParams, x: &Q, j: i32) -> Vec<i32> {
    if x.is_zero() {
        return Vec::new();
    }
    let ax = x.abs();
    let mut out = Vec::new();
    if params.rules.iter().any(|r| !r.x_extent) {
        if let Some(g) = line_gen(params.m, x) {
            if g <= j {
                out.push(g);
            }
        }
    }
    if params.rules.iter().any(|r| r.x_extent) {
        // a slab at generation g needs |x| >= m^-g
        let mut g = 0i32;
        while qpow(params.m, -g) > ax {
            g += 1;
        }
        while qpow(params.m, -(g - 1)) <= ax {
            g -= 1;
        }
        for gg in g..=j {
            if !out.contains(&gg) {
                out.push(gg);
            }
        }
    }
    out.sort();
    out
}

/// Smallest `g` with `x * m^g` an integer, if any.
pub fn line_gen(m: i64, x: &Q) -> Option<i32> {
    if x.is_zero() {
        return None;
    }
    let mut d = *x.denom();
    let mut g = 0i32;
    let mi = m as i128;
    while d > 1 {
        let gcd = num_integer::gcd(d, mi);
        if gcd == 1 {
            return None;
        }
        // x*m = num*m/d
        d /= gcd;
        g += 1;
        if g > 200 {
            return None;
        }
    }
    if g > 0 {
        return Some(g);
    }
    let mut num = *x.numer();
    while num % mi == 0 {
        num /= mi;
        g -= 1;
    }
    Some(g)
}

/// Points related to `p` by one generator (either direction) at generations `<= j`.
pub fn neighbors_q(params: &SystemParams, p: &ExactPoint, j: i32) -> Vec<ExactPoint> {
    let mut out = Vec::new();
    let x = p.x();
    for g in active_gens(params, &x, j) {
        let sy = qpow(params.mv, -g);
        let scale = qpow(params.mv, g);
        for rule in &params.rules {
            if !x_matches_q(params, rule, &x, g) {
                continue;
            }
            for dir in [1i128, -1] {
                // forward: p is a source; backward: p - shift is a source
                let mut q = p.clone();
                for (t, s) in rule.shift.iter().enumerate() {
                    q.coords[t + 1] += Q::from_integer(dir * *s as i128) * sy;
                }
                let src = if dir == 1 { p } else { &q };
                let ok = rule
                    .tail
                    .iter()
                    .enumerate()
                    .all(|(t, pat)| in_pattern_q(pat, &(src.coords[t + 1] * scale)));
                if ok {
                    out.push(q);
                }
            }
        }
    }
    out
}

fn resolution_check(params: &SystemParams, p: &ExactPoint) -> Result<(), LabError> {
    let budget = params.gen_range.1.max(0) + 4;
    let cap = num_traits::pow(params.m as i128, budget as usize);
    if *p.x().denom() > cap {
        return Err(LabError::ResolutionOverflow(format!(
            "x denominator {} exceeds m^{budget}",
            p.x().denom()
        )));
    }
    Ok(())
}

/// The `R_j` coset of `p`, by transitive closure over generators.
pub fn coset(params: &SystemParams, p: &ExactPoint, j: i32) -> Result<Coset, LabError> {
    resolution_check(params, p)?;
    let mut seen: BTreeSet<ExactPoint> = BTreeSet::new();
    let mut queue = VecDeque::new();
    seen.insert(p.clone());
    queue.push_back(p.clone());
    while let Some(cur) = queue.pop_front() {
        for nb in neighbors_q(params, &cur, j) {
            if seen.insert(nb.clone()) {
                if seen.len() > COSET_LIMIT {
                    return Err(LabError::CosetTooLarge(COSET_LIMIT));
                }
                queue.push_back(nb);
            }
        }
    }
    Ok(Coset { gen: j, members: seen.into_iter().collect() })
}

/// Grid point at a fixed resolution `k`: `x = X m^-k`, `y_i = Y_i m_v^-k`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GridPoint {
    pub x: i64,
    pub y: Vec<i64>,
}

impl GridPoint {
    pub fn to_exact(&self, params: &SystemParams, k: i32) -> ExactPoint {
        let mut c = vec![Q::from_integer(self.x as i128) * qpow(params.m, -k)];
        for v in &self.y {
            c.push(Q::from_integer(*v as i128) * qpow(params.mv, -k));
        }
        ExactPoint::new(c)
    }

    pub fn from_exact(params: &SystemParams, p: &ExactPoint, k: i32) -> Option<GridPoint> {
        let x = p.coords[0] * qpow(params.m, k);
        if !x.is_integer() {
            return None;
        }
        let mut y = Vec::new();
        for c in &p.coords[1..] {
            let v = c * qpow(params.mv, k);
            if !v.is_integer() {
                return None;
            }
            y.push(v.to_integer() as i64);
        }
        Some(GridPoint { x: x.to_integer() as i64, y })
    }
}

/// Integer-only gluing engine at resolution `k`.
#[derive(Clone, Debug)]
pub struct GridGluer<'a> {
    pub params: &'a SystemParams,
    pub k: i32,
}

fn ipow128(b: i64, e: i32) -> i128 {
    (b as i128).pow(e as u32)
}

impl<'a> GridGluer<'a> {
    pub fn new(params: &'a SystemParams, k: i32) -> Self {
        GridGluer { params, k }
    }

    /// Generations `g <= min(j, k)` acting at horizontal grid coordinate `x`.
    pub fn gens(&self, x: i64, j: i32) -> Result<Vec<i32>, LabError> {
        let p = self.params;
        let mut out = Vec::new();
        if x == 0 {
            return Ok(out);
        }
        let m = p.m as i128;
        if p.rules.iter().any(|r| !r.x_extent) {
            let mut v = 0;
            let mut u = x as i128;
            while u % m == 0 {
                u /= m;
                v += 1;
            }
            let g = self.k - v;
            if g <= j {
                out.push(g);
            }
        }
        if p.rules.iter().any(|r| r.x_extent) {
            if j > self.k {
                return Err(LabError::ResolutionOverflow(format!(
                    "slab rules at level {j} need resolution >= {j}, have {}",
                    self.k
                )));
            }
            // |X| >= m^(k-g)
            let ax = (x as i128).abs();
            let mut d = 0i32;
            while ipow128(p.m, d + 1) <= ax {
                d += 1;
            }
            for g in (self.k - d)..=j {
                if !out.contains(&g) {
                    out.push(g);
                }
            }
        }
        out.sort();
        Ok(out)
    }

    fn x_matches(&self, rule: &BaseGenerator, x: i64, g: i32) -> bool {
        let d = self.k - g;
        if d < 0 {
            return false;
        }
        let md = ipow128(self.params.m, d);
        let x = x as i128;
        if rule.x_extent {
            let r = x.rem_euclid(md * self.params.m as i128);
            r >= rule.x_pos as i128 * md && r <= (rule.x_pos as i128 + 1) * md
        } else {
            x % md == 0 && (x / md).rem_euclid(self.params.m as i128) == rule.x_pos as i128
        }
    }

    fn in_pattern(&self, pat: &AxisPattern, y: i64, d: i32) -> bool {
        match pat {
            AxisPattern::Any => true,
            AxisPattern::Periodic { residue, period } => {
                let md = ipow128(self.params.mv, d);
                let t = y as i128 - *residue as i128 * md;
                t.rem_euclid(*period as i128 * md) <= md
            }
        }
    }

    pub fn neighbors(&self, p: &GridPoint, j: i32, out: &mut Vec<GridPoint>) -> Result<(), LabError> {
        for g in self.gens(p.x, j)? {
            let d = self.k - g;
            if d < 0 {
                continue;
            }
            let step = ipow128(self.params.mv, d);
            for rule in &self.params.rules {
                if !self.x_matches(rule, p.x, g) {
                    continue;
                }
                for dir in [1i128, -1] {
                    let mut q = p.clone();
                    for (t, s) in rule.shift.iter().enumerate() {
                        q.y[t] = (q.y[t] as i128 + dir * *s as i128 * step) as i64;
                    }
                    let src = if dir == 1 { p } else { &q };
                    if rule
                        .tail
                        .iter()
                        .enumerate()
                        .all(|(t, pat)| self.in_pattern(pat, src.y[t], d))
                    {
                        out.push(q);
                    }
                }
            }
        }
        Ok(())
    }

    /// Sorted `R_j` coset of a grid point.
    pub fn coset(&self, p: &GridPoint, j: i32) -> Result<Vec<GridPoint>, LabError> {
        let mut seen: BTreeSet<GridPoint> = BTreeSet::new();
        seen.insert(p.clone());
        let mut stack = vec![p.clone()];
        let mut buf = Vec::new();
        while let Some(cur) = stack.pop() {
            buf.clear();
            self.neighbors(&cur, j, &mut buf)?;
            for nb in buf.drain(..) {
                if seen.insert(nb.clone()) {
                    if seen.len() > COSET_LIMIT {
                        return Err(LabError::CosetTooLarge(COSET_LIMIT));
                    }
                    stack.push(nb);
                }
            }
        }
        Ok(seen.into_iter().collect())
    }
}

/// Point strictly inside the relative interior of `c`, on the grid of resolution `c.gen + 1`.
pub fn interior_grid_point(params: &SystemParams, c: &CellId) -> GridPoint {
    let mut x = c.anchor[0] * params.m;
    if c.spans(0) {
        x += 1;
    }
    let y = (1..c.n())
        .map(|ax| c.anchor[ax] * params.mv + i64::from(c.spans(ax)))
        .collect();
    GridPoint { x, y }
}

/// Whole-cell `R_j` class of `c` (`j <= c.gen`): sorted cells of the same
/// generation and dimension, each a translate of `c`.
pub fn saturate_cell(params: &SystemParams, c: &CellId, j: i32) -> Result<Vec<CellId>, LabError> {
    if j > c.gen {
        return Err(LabError::InvalidArgument(format!(
            "cell generation {} below relation level {j}",
            c.gen
        )));
    }
    let k = c.gen + 1;
    let gl = GridGluer::new(params, k);
    let base = interior_grid_point(params, c);
    let members = gl.coset(&base, j)?;
    let mut out: Vec<CellId> = members
        .iter()
        .map(|q| {
            let mut delta = vec![0i64];
            for (a, b) in q.y.iter().zip(&base.y) {
                debug_assert_eq!((a - b) % params.mv, 0);
                delta.push((a - b) / params.mv);
            }
            c.translated(&delta)
        })
        .collect();
    out.sort();
    out.dedup();
    Ok(out)
}

/// Cells of `Y_j` (same generation as `c`) covering the `R_j`-saturation of
/// the closed cell `c`: `c` itself, plus for every identified copy of a face
/// of `c` not lying in `c`, the least top cell containing that copy.
pub fn preimage_cells(params: &SystemParams, c: &CellId, j: i32) -> Result<Vec<CellId>, LabError> {
    let mut out: BTreeSet<CellId> = BTreeSet::new();
    out.insert(c.clone());
    let own: BTreeSet<CellId> = c.faces().into_iter().collect();
    for f in c.faces() {
        for g in saturate_cell(params, &f, j)? {
            if own.contains(&g) {
                continue;
            }
            // least top cell containing g
            let mut a = g.anchor.clone();
            for (ax, v) in a.iter_mut().enumerate() {
                if !g.spans(ax) {
                    *v -= 1;
                }
            }
            out.insert(CellId::top(c.gen, a));
        }
    }
    Ok(out.into_iter().collect())
}

/// Closed-face union: all cells of `Y_gen` in the saturation of the closed cell
/// (classes of every face of `c`).
pub fn saturate_closed(params: &SystemParams, c: &CellId, j: i32) -> Result<Vec<CellId>, LabError> {
    let mut out: BTreeSet<CellId> = BTreeSet::new();
    for f in c.faces() {
        out.extend(saturate_cell(params, &f, j)?);
    }
    Ok(out.into_iter().collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::q;
    use proptest::prelude::*;

    fn pt(x: Q, y: Q) -> ExactPoint {
        ExactPoint::xy(x, y)
    }

    #[test]
    fn generator_counts() {
        let p = SystemParams::std2d(2).with_gen_range(0, 2);
        let unit = BoxQ::cube(2, 0, 1);
        // closed-box enumeration: rows {0,3,6}, {1,4}, {-1,2,5}
        assert_eq!(generators_at(&p, 1, &unit).unwrap().len(), 8);
        let thin = BoxQ::new(vec![q(1, 16), q(0, 1)], vec![q(1, 8), q(1, 1)]);
        assert!(generators_at(&p, 1, &thin).unwrap().is_empty());
        assert!(generators_at(&p, 5, &unit).is_err());
        let c = SystemParams::counterexample();
        let g = generators_at(&c, 1, &unit).unwrap();
        assert_eq!(g.len(), 1);
        assert_eq!(g[0].source_cell, CellId::top(1, vec![1, 1]));
        assert_eq!(g[0].target_cell, CellId::top(1, vec![1, 4]));
    }

    #[test]
    fn std2d_cosets() {
        let p = SystemParams::std2d(2);
        // x = 1/2 is the i=2 line; rows [1,2] glued to [2,3]
        let inside = pt(q(1, 2), q(1, 4));
        let c = coset(&p, &inside, 1).unwrap();
        assert_eq!(c.members, vec![inside.clone(), pt(q(1, 2), q(1, 4) + q(1, 6))]);
        let off = pt(q(1, 2), q(1, 12));
        assert_eq!(coset(&p, &off, 1).unwrap().len(), 1);
        // relation level 0 sees no gen-1 gluings
        assert_eq!(coset(&p, &inside, 0).unwrap().len(), 1);
        // shared endpoint y = 2/6 on the 2/4 line: rows 1->2->3
        let v = pt(q(1, 2), q(2, 6));
        let c = coset(&p, &v, 1).unwrap();
        assert_eq!(c.members, vec![pt(q(1, 2), q(1, 6)), v.clone(), pt(q(1, 2), q(3, 6))]);
        let irr = pt(q(1, 3), q(1, 7));
        assert_eq!(coset(&p, &irr, 3).unwrap().len(), 1);
    }

    #[test]
    fn overflow_is_reported() {
        let p = SystemParams::std2d(2);
        let deep = pt(q(1, 4i128.pow(10)), q(0, 1));
        assert!(matches!(coset(&p, &deep, 2), Err(LabError::ResolutionOverflow(_))));
    }

    #[test]
    fn saturation_examples() {
        let p = SystemParams::std2d(2);
        let far = CellId::top(1, vec![0, 0]);
        assert_eq!(saturate_cell(&p, &far, 1).unwrap(), vec![far.clone()]);
        // a_{0,0,1}: x = 1/4, y in [0, 1/6]
        let a = CellId::new(1, vec![1, 0], 0b10);
        assert_eq!(
            saturate_cell(&p, &a, 1).unwrap(),
            vec![a.clone(), CellId::new(1, vec![1, 1], 0b10)]
        );
        for ax in 0..8 {
            for ay in 0..12 {
                let c = CellId::top(1, vec![ax, ay]);
                assert!(preimage_cells(&p, &c, 1).unwrap().len() <= 27);
            }
        }
    }

    fn grid_oracle(p: &SystemParams, g: &GridPoint, k: i32, j: i32) -> Vec<GridPoint> {
        let e = g.to_exact(p, k);
        coset(p, &e, j)
            .unwrap()
            .members
            .iter()
            .map(|m| GridPoint::from_exact(p, m, k).unwrap())
            .collect()
    }

    proptest! {
        #[test]
        fn grid_matches_exact(x in -40i64..40, y in -80i64..80, j in -1i32..3, fam in 0usize..3) {
            let p = match fam {
                0 => SystemParams::std2d(2),
                1 => SystemParams::std2d(5),
                _ => SystemParams::counterexample(),
            };
            let k = 3;
            let g = GridPoint { x, y: vec![y] };
            let fast = GridGluer::new(&p, k).coset(&g, j).unwrap();
            prop_assert_eq!(fast, grid_oracle(&p, &g, k, j));
        }

        #[test]
        fn coset_symmetric_and_nested(x in 0i64..32, y in 0i64..72, j in 0i32..3) {
            let p = SystemParams::std2d(2);
            let gl = GridGluer::new(&p, 2);
            let g = GridPoint { x, y: vec![y] };
            let c = gl.coset(&g, j).unwrap();
            prop_assert!(c.len() <= 3);
            for mbr in &c {
                prop_assert_eq!(&gl.coset(mbr, j).unwrap(), &c);
                prop_assert_eq!(mbr.x, g.x);
            }
            let up = gl.coset(&g, j + 1).unwrap();
            for mbr in &c {
                prop_assert!(up.contains(mbr));
            }
        }

        #[test]
        fn general_n_cosets_small(x in 0i64..49, y in 0i64..42, z in 0i64..42) {
            let p = SystemParams::general_n(3, 21);
            let gl = GridGluer::new(&p, 1);
            let c = gl.coset(&GridPoint { x, y: vec![y, z] }, 1).unwrap();
            prop_assert!(c.len() <= 3);
        }
    }

    #[test]
    fn saturation_commutes_with_phi() {
        let p = SystemParams::std2d(2);
        for ax in -4..8 {
            for ay in -6..12 {
                for e in [0b10u32, 0b11, 0b00] {
                    let c = CellId::new(1, vec![ax, ay], e);
                    let s = saturate_cell(&p, &c, 1).unwrap();
                    let up = crate::lattice::phi_cell(&c, 1);
                    let s2 = saturate_cell(&p, &up, 2).unwrap();
                    let mapped: Vec<CellId> = s.iter().map(|c| crate::lattice::phi_cell(c, 1)).collect();
                    assert_eq!(s2, mapped);
                }
            }
        }
    }
}
