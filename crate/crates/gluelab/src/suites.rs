//! Acceptance suites, one per criterion, shared by the CLI (`gluelab report`)
//! and the integration tests. Every suite returns a [`SuiteOutcome`] whose
//! table is written as CSV.

use std::collections::{BTreeMap, HashMap};
use std::time::{Duration, Instant};

use num_traits::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::analysis::{self, ChartOpts, DistField, TestFn};
use crate::complex::{self, ColumnClasses};
use crate::galleries;
use crate::gluing::axioms::{check_axioms, fiber_bound, link_bound};
use crate::gluing::{self, GridGluer, GridPoint};
use crate::lattice::{cells_in_box, ipow};
use crate::metric;
use crate::report::{SuiteOutcome, Table};
use crate::verify;
use crate::{q, qf, BoxQ, CellId, ExactPoint, LabError, SystemParams, Q};

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn secs(d: Duration) -> String {
    format!("{:.1}s", d.as_secs_f64())
}

fn pt(p: &ExactPoint) -> String {
    p.coords.iter().map(|c| c.to_string()).collect::<Vec<_>>().join(",")
}

fn square(a: i64, b: i64) -> BoxQ {
    BoxQ::cube(2, a, b)
}

/// Random point `(a/1001, b/1001)` with `a, b` in `lo..hi`.
fn rand_pt(r: &mut ChaCha8Rng, lo: i128, hi: i128) -> ExactPoint {
    ExactPoint::xy(q(r.gen_range(lo..hi), 1001), q(r.gen_range(lo..hi), 1001))
}

// ---------------------------------------------------------------------------
// 1. cosets and local complexity

/// Vertical-edge classes of one column of `Y_j`: the edge `[e, e+1]` at
/// horizontal index `x` is represented by its midpoint one level finer.
struct EdgeClasses<'a> {
    gl: GridGluer<'a>,
    x: i64,
    j: i32,
    glued: bool,
    memo: HashMap<i64, Vec<i64>>,
}

impl<'a> EdgeClasses<'a> {
    fn new(params: &'a SystemParams, x: i64, j: i32) -> Result<Self, LabError> {
        let gl = GridGluer::new(params, j + 1);
        let glued = !gl.gens(x * params.m, j)?.is_empty();
        Ok(EdgeClasses { gl, x, j, glued, memo: HashMap::new() })
    }

    fn class(&mut self, e: i64) -> Result<&[i64], LabError> {
        if !self.memo.contains_key(&e) {
            let v = if self.glued {
                let mv = self.gl.params.mv;
                let g = GridPoint { x: self.x * self.gl.params.m, y: vec![e * mv + 1] };
                let mut v: Vec<i64> = self.gl.coset(&g, self.j)?.iter().map(|p| (p.y[0] - 1).div_euclid(mv)).collect();
                v.sort();
                v.dedup();
                v
            } else {
                vec![e]
            };
            self.memo.insert(e, v);
        }
        Ok(&self.memo[&e])
    }

    fn key(&mut self, e: i64) -> Result<i64, LabError> {
        Ok(self.class(e)?[0])
    }
}

/// Maxima of the local complexity counts over a square window `[0, side]^2`.
#[derive(Clone, Debug, Default)]
pub struct ComplexityStats {
    /// `(j, max coset size, points)` at resolution 2.
    pub cosets: Vec<(i32, usize, usize)>,
    /// `(j, max link, max open cells, max preimage, vertices, cells)`.
    pub levels: Vec<(i32, usize, usize, usize, usize, usize)>,
    /// `(j, max fiber path, points)` for `pi_j^{j+1}`.
    pub fibers: Vec<(i32, i64, usize)>,
    /// `(j, skeleton points, failures)`.
    pub injective: Vec<(i32, usize, usize)>,
    /// Spot checks against the reference functions, and disagreements.
    pub spot_checks: usize,
    pub mismatches: Vec<String>,
}

fn distinct(v: &mut Vec<(i64, i64)>) -> usize {
    v.sort_unstable();
    v.dedup();
    v.len()
}

/// Link, open-cell and preimage counts for every vertex and top cell of `Y_j`
/// in `[0, side]^2`. Needs a planar family whose rules glue vertical lines
/// only, so top cells and horizontal edges are never identified. A fraction
/// `spot` of the items is recomputed with the reference functions.
fn level_counts(
    params: &SystemParams,
    side: i64,
    j: i32,
    spot: f64,
    r: &mut ChaCha8Rng,
    st: &mut ComplexityStats,
) -> Result<(), LabError> {
    let gl = GridGluer::new(params, j);
    let nx = side * ipow(params.m, j as u32).unwrap();
    let ny = side * ipow(params.mv, j as u32).unwrap();
    let (mut ml, mut mo, mut mp) = (0, 0, 0);
    let mut prev: Option<(ColumnClasses, EdgeClasses)> = None;
    let mut sq = Vec::new();
    let mut he = Vec::new();
    let mut ve = Vec::new();
    for x in 0..=nx {
        let vc = ColumnClasses::new(&gl, x, 0, ny, j)?;
        let mut ec = EdgeClasses::new(params, x, j)?;
        for y in 0..=ny {
            sq.clear();
            he.clear();
            ve.clear();
            for &w in vc.class(y) {
                sq.extend([(x - 1, w - 1), (x - 1, w), (x, w - 1), (x, w)]);
                he.extend([(x - 1, w), (x, w)]);
                ve.push((0, ec.key(w - 1)?));
                ve.push((0, ec.key(w)?));
            }
            let link = distinct(&mut sq) + distinct(&mut he) + distinct(&mut ve);
            ml = ml.max(link);
            if spot > 0.0 && r.gen_bool(spot) {
                st.spot_checks += 1;
                let reference = complex::link(params, &CellId::vertex(j, vec![x, y]), j)?.len();
                if reference != link {
                    st.mismatches.push(format!("link j={j} ({x},{y}): fast {link} reference {reference}"));
                }
            }
        }
        if let Some((pvc, pec)) = prev.as_mut() {
            let cx = x - 1;
            for cy in 0..ny {
                let dl = 1 + usize::from(pvc.key(cy) != pvc.key(cy + 1));
                let dr = 1 + usize::from(vc.key(cy) != vc.key(cy + 1));
                let open = 5 + dl + dr;
                sq.clear();
                sq.push((cx, cy));
                for (wx, wy) in [(cx, cy), (cx, cy + 1), (x, cy), (x, cy + 1)] {
                    let cc = if wx == cx { &*pvc } else { &vc };
                    for &w in cc.class(wy) {
                        if w != cy && w != cy + 1 {
                            sq.push((wx - 1, w - 1));
                        }
                    }
                }
                for &e in pec.class(cy)? {
                    if e != cy {
                        sq.push((cx - 1, e));
                    }
                }
                for &e in ec.class(cy)? {
                    if e != cy {
                        sq.push((cx, e));
                    }
                }
                let pre = distinct(&mut sq);
                mo = mo.max(open);
                mp = mp.max(pre);
                if spot > 0.0 && r.gen_bool(spot) {
                    st.spot_checks += 1;
                    let c = CellId::top(j, vec![cx, cy]);
                    let ro = complex::open_cells_in_closed(params, &c, j)?;
                    let rp = gluing::preimage_cells(params, &c, j)?.len();
                    if ro != open || rp != pre {
                        st.mismatches.push(format!("cell j={j} ({cx},{cy}): fast {open}/{pre} reference {ro}/{rp}"));
                    }
                }
            }
        }
        prev = Some((vc, ec));
    }
    let cells = (nx * ny) as usize;
    st.levels.push((j, ml, mo, mp, ((nx + 1) * (ny + 1)) as usize, cells));
    Ok(())
}

/// Longest vertical edge path spanned by a fiber of `pi_j^{j+1}` over the
/// grid points of `[0, side]^2` at resolution `j+1`.
fn fiber_counts(
    params: &SystemParams,
    side: i64,
    j: i32,
    spot: f64,
    r: &mut ChaCha8Rng,
    st: &mut ComplexityStats,
) -> Result<(), LabError> {
    let k = j + 1;
    let gl = GridGluer::new(params, k);
    let nx = side * ipow(params.m, k as u32).unwrap();
    let ny = side * ipow(params.mv, k as u32).unwrap();
    let mut worst = 0;
    for x in 0..=nx {
        let hi = ColumnClasses::new(&gl, x, 0, ny, k)?;
        let pad = hi.pad();
        let lo = ColumnClasses::new(&gl, x, -pad, ny + pad, j)?;
        let mut done: HashMap<i64, i64> = HashMap::new();
        for y in 0..=ny {
            let cls = hi.class(y);
            let len = match done.get(&cls[0]) {
                Some(v) => *v,
                None => {
                    let mut groups: BTreeMap<i64, Vec<i64>> = BTreeMap::new();
                    for &w in cls {
                        groups.entry(lo.key(w)).or_default().push(w);
                    }
                    let v = min_span(&groups.into_values().collect::<Vec<_>>());
                    done.insert(cls[0], v);
                    v
                }
            };
            worst = worst.max(len);
            if spot > 0.0 && r.gen_bool(spot) {
                st.spot_checks += 1;
                let reference = complex::fiber_path_length(params, &GridPoint { x, y: vec![y] }, j)?;
                if reference != len {
                    st.mismatches.push(format!("fiber j={j} ({x},{y}): fast {len} reference {reference}"));
                }
            }
        }
    }
    st.fibers.push((j, worst, ((nx + 1) * (ny + 1)) as usize));
    Ok(())
}

/// Least spread of a choice of one row per group.
fn min_span(groups: &[Vec<i64>]) -> i64 {
    if groups.len() <= 1 {
        return 0;
    }
    let mut best = i64::MAX;
    let mut idx = vec![0usize; groups.len()];
    loop {
        let pick = groups.iter().zip(&idx).map(|(g, i)| g[*i]);
        let (a, b) = pick.fold((i64::MAX, i64::MIN), |(a, b), v| (a.min(v), b.max(v)));
        best = best.min(b - a);
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
            return best;
        }
    }
}

/// Exhaustive complexity counts on `[0, side]^2` for generations `0..=2`.
pub fn complexity_stats(params: &SystemParams, side: i64, spot: f64, seed: u64) -> Result<ComplexityStats, LabError> {
    let mut st = ComplexityStats::default();
    let mut r = rng(seed);
    let top = 2;
    let gl = GridGluer::new(params, top);
    let nx = side * ipow(params.m, top as u32).unwrap();
    let ny = side * ipow(params.mv, top as u32).unwrap();
    for j in 0..=top {
        let mut worst = 0;
        for x in 0..=nx {
            let cc = ColumnClasses::new(&gl, x, 0, ny, j)?;
            for y in 0..=ny {
                worst = worst.max(cc.class(y).len());
            }
        }
        st.cosets.push((j, worst, ((nx + 1) * (ny + 1)) as usize));
    }
    for j in 0..=top {
        level_counts(params, side, j, spot, &mut r, &mut st)?;
    }
    for j in 0..top {
        fiber_counts(params, side, j, spot, &mut r, &mut st)?;
    }
    // 1-skeleton of Y_j at resolution 2
    for j in 0..top {
        let fx = ipow(params.m, (top - j) as u32).unwrap();
        let fy = ipow(params.mv, (top - j) as u32).unwrap();
        let (mut n, mut bad) = (0, 0);
        for x in 0..=nx {
            let on_line = x % fx == 0;
            let mut y = 0;
            while y <= ny {
                n += 1;
                if !complex::skeleton_injective_at(params, &GridPoint { x, y: vec![y] }, j, top)? {
                    bad += 1;
                }
                y += if on_line { 1 } else { fy };
            }
        }
        st.injective.push((j, n, bad));
    }
    Ok(st)
}

/// Criterion 1: cosets, links, closed cells, preimages, injectivity on
/// 1-skeleta and fibers, exhaustively on `[0, 2]^2` for `L = 2, 100`.
pub fn complexity() -> Result<SuiteOutcome, LabError> {
    let t = Instant::now();
    let mut table = Table::new(&["L", "check", "j", "max", "bound", "items", "violations"]);
    let mut ok = true;
    let mut lines = Vec::new();
    for l in [2, 100] {
        let params = SystemParams::std2d(l);
        let spot = if l == 2 { 0.05 } else { 2e-5 };
        let st = complexity_stats(&params, 2, spot, 1)?;
        let lb = link_bound(2);
        let fb = fiber_bound(&params);
        let mut row = |check: &str, j: i32, max: String, bound: String, items: usize, bad: bool| {
            table.push([l.to_string(), check.into(), j.to_string(), max, bound, items.to_string(), u8::from(bad).to_string()]);
            if bad {
                ok = false;
            }
        };
        for (j, w, n) in &st.cosets {
            row("coset", *j, w.to_string(), "3".into(), *n, *w > 3);
        }
        for (j, ml, mo, mp, nv, nc) in &st.levels {
            row("link", *j, ml.to_string(), lb.to_string(), *nv, *ml > lb);
            row("open_cells", *j, mo.to_string(), "9".into(), *nc, *mo > 9);
            row("preimage", *j, mp.to_string(), "27".into(), *nc, *mp > 27);
        }
        for (j, h, n) in &st.fibers {
            row("fiber_path", *j, h.to_string(), fb.to_string(), *n, *h > fb);
        }
        for (j, n, bad) in &st.injective {
            row("skeleton_injective", *j, bad.to_string(), "0".into(), *n, *bad > 0);
        }
        if !st.mismatches.is_empty() {
            ok = false;
            lines.push(format!("L={l}: {} fast/reference mismatches, first {}", st.mismatches.len(), st.mismatches[0]));
        }
        lines.push(format!("L={l}: {} reference spot checks agree", st.spot_checks - st.mismatches.len()));
    }
    let el = t.elapsed();
    let in_time = el < Duration::from_secs(120);
    let mut out = SuiteOutcome::new("complexity", ok && in_time, table);
    for s in lines {
        out = out.note(s);
    }
    Ok(out.note(format!("runtime {} (limit 120s)", secs(el))))
}

// ---------------------------------------------------------------------------
// 2. metric sandwich

/// Criterion 2: `d_j - 2 m^-j <= d_k <= d_j` for `j <= k <= j+2` and the
/// cell-exponent bracket, on random pairs of Std2D(100).
pub fn sandwich(pairs: usize, seed: u64) -> Result<SuiteOutcome, LabError> {
    let t = Instant::now();
    let params = SystemParams::std2d(100);
    let mut r = rng(seed);
    let mut table = Table::new(&["p", "q", "d0", "d1", "d2", "d3", "jlow", "lo", "hi", "violations"]);
    let (mut bad, mut resolved, mut checks) = (0, 0, 0);
    let levels: Vec<i32> = (-2..=3).collect();
    for _ in 0..pairs {
        let p = rand_pt(&mut r, 1, 2002);
        let qq = rand_pt(&mut r, 1, 2002);
        let d: Vec<Q> = (0..=3)
            .map(|k| metric::set_dist(&params, &[p.clone()], &[qq.clone()], k, k))
            .collect::<Result<_, _>>()?;
        let mut v = 0;
        for j in 0..=1usize {
            for k in j..=(j + 2).min(3) {
                checks += 1;
                let lo = d[j] - params.weight(j as i32) * Q::from_integer(2);
                if !(lo <= d[k] && d[k] <= d[j]) {
                    v += 1;
                }
            }
        }
        let jl = metric::cell_dist_exponent(&params, &p, &qq, -1, 3, 3)?;
        let br = metric::dinf_bracket(&params, &p, &qq, &levels)?;
        if let Some(jj) = jl {
            resolved += 1;
            checks += 1;
            let unit = crate::lattice::qpow(params.m, -jj);
            if !(unit <= br.lo && br.lo <= br.hi && br.hi <= unit * Q::from_integer(2 * params.m as i128)) {
                v += 1;
            }
        }
        bad += v;
        table.push([
            pt(&p),
            pt(&qq),
            d[0].to_string(),
            d[1].to_string(),
            d[2].to_string(),
            d[3].to_string(),
            jl.map_or("inf".into(), |x| x.to_string()),
            br.lo.to_string(),
            br.hi.to_string(),
            v.to_string(),
        ]);
    }
    let el = t.elapsed();
    let ok = bad == 0 && el < Duration::from_secs(600);
    Ok(SuiteOutcome::new("sandwich", ok, table)
        .note(format!("{pairs} pairs, {checks} inequalities, {bad} violations, {resolved} pairs with finite cell exponent"))
        .note(format!("runtime {} (limit 600s)", secs(el))))
}

// ---------------------------------------------------------------------------
// 3. edge crossings

/// Criterion 3: level-`(j+1)` chains crossing a level-`j` cell between its
/// vertical edges have at least `m` cells.
pub fn crossing() -> Result<SuiteOutcome, LabError> {
    let t = Instant::now();
    let mut table = Table::new(&["L", "j", "window", "cells", "min_chain", "violations"]);
    let mut ok = true;
    let thin = BoxQ::new(vec![q(0, 1), q(0, 1)], vec![q(2, 1), q(1, 30)]);
    let runs: Vec<(i64, i32, BoxQ, &str)> = vec![
        (2, 0, square(0, 2), "[0,2]^2"),
        (2, 1, square(0, 2), "[0,2]^2"),
        (2, 2, square(0, 2), "[0,2]^2"),
        (100, 0, square(0, 2), "[0,2]^2"),
        (100, 1, thin, "[0,2]x[0,1/30]"),
    ];
    for (l, j, win, label) in runs {
        let params = SystemParams::std2d(l);
        let (mut n, mut bad, mut least) = (0, 0, usize::MAX);
        for c in cells_in_box(&params, &win, j, 2)? {
            n += 1;
            match metric::edge_crossing_min(&params, &c, j)? {
                Some(len) => {
                    least = least.min(len);
                    if len < params.m as usize {
                        bad += 1;
                    }
                }
                None => bad += 1,
            }
        }
        ok &= bad == 0;
        table.push([l.to_string(), j.to_string(), label.into(), n.to_string(), least.to_string(), bad.to_string()]);
    }
    Ok(SuiteOutcome::new("crossing", ok, table).note(format!("runtime {}", secs(t.elapsed()))))
}

// ---------------------------------------------------------------------------
// 4. gallery accessibility

/// Criterion 4: every adjacent pair of top cells joins by a horizontal
/// gallery; the Counterexample family has pairs that do not at `10 C0`.
pub fn accessibility(budget: usize) -> Result<SuiteOutcome, LabError> {
    let t = Instant::now();
    let mut table = Table::new(&["family", "L", "j", "pairs", "max_len", "budget", "failures"]);
    let mut ok = true;
    let mut c0 = 0;
    for (l, gens) in [(2i64, 0..=2), (100, 0..=1)] {
        let params = SystemParams::std2d(l);
        for j in gens {
            let rep = galleries::accessibility_sweep(&params, &square(0, 2), j, budget)?;
            c0 = c0.max(rep.max_len);
            ok &= rep.failures.is_empty();
            table.push(["std2d".into(), l.to_string(), j.to_string(), rep.pairs.to_string(), rep.max_len.to_string(), budget.to_string(), rep.failures.len().to_string()]);
        }
    }
    let ce = SystemParams::counterexample();
    let b10 = 10 * c0;
    let mut ce_fail = 0;
    for j in 0..=1 {
        let rep = galleries::accessibility_sweep(&ce, &square(0, 1), j, b10)?;
        ce_fail += rep.failures.len();
        table.push(["counterexample".into(), "-".into(), j.to_string(), rep.pairs.to_string(), rep.max_len.to_string(), b10.to_string(), rep.failures.len().to_string()]);
    }
    ok &= ce_fail > 0;
    let el = t.elapsed();
    ok &= el < Duration::from_secs(300);
    Ok(SuiteOutcome::new("accessibility", ok, table)
        .note(format!("measured C0 = {c0} (max Std2D gallery)"))
        .note(format!("counterexample failures at budget {b10}: {ce_fail}"))
        .note(format!("runtime {} (limit 300s)", secs(el))))
}

// ---------------------------------------------------------------------------
// 5. distance collapse

/// Two distinct points of the Counterexample family on `x = 1/2` whose
/// bracket upper bound sinks below every cell scale.
pub fn collapse_pair() -> (ExactPoint, ExactPoint) {
    (ExactPoint::xy(q(1, 2), q(1, 5)), ExactPoint::xy(q(1, 2), q(4, 5)))
}

/// Criterion 5: collapse for the Counterexample family; positive lower
/// brackets for distinct Std2D grid pairs.
pub fn collapse(seed: u64) -> Result<SuiteOutcome, LabError> {
    let t = Instant::now();
    let mut table = Table::new(&["family", "p", "q", "j", "levels", "lo", "hi", "scale", "ok"]);
    let mut ok = true;
    let ce = SystemParams::counterexample();
    let (a, b) = collapse_pair();
    for j in 0..=3 {
        let levels: Vec<i32> = (0..=j + 1).collect();
        let distinct = !gluing::coset(&ce, &a, j + 1)?.contains(&b);
        let br = metric::dinf_bracket(&ce, &a, &b, &levels)?;
        let scale = crate::lattice::qpow(ce.m, -j);
        let good = distinct && br.hi < scale;
        ok &= good;
        table.push(["counterexample".into(), pt(&a), pt(&b), j.to_string(), format!("0..={}", j + 1), br.lo.to_string(), br.hi.to_string(), scale.to_string(), good.to_string()]);
    }
    // Std2D grid pairs at resolution 2, plus vertical neighbours on glue lines.
    // L = 100: at L = 2 the lower end of the bracket is not a valid bound.
    let std = SystemParams::std2d(100);
    let kk = 4;
    let levels: Vec<i32> = (0..=kk).collect();
    let mut r = rng(seed);
    let (gx, gy) = (16i128, 90000i128);
    let mut pairs = Vec::new();
    while pairs.len() < 30 {
        let p = ExactPoint::xy(q(r.gen_range(0..=2 * gx), gx), q(r.gen_range(0..=2 * gy), gy));
        let qq = ExactPoint::xy(q(r.gen_range(0..=2 * gx), gx), q(r.gen_range(0..=2 * gy), gy));
        if p != qq {
            pairs.push((p, qq));
        }
    }
    for x in [q(1, 1), q(1, 2), q(1, 4), q(3, 4), q(3, 2)] {
        for _ in 0..2 {
            let y = r.gen_range(0..2 * gy);
            pairs.push((ExactPoint::xy(x, q(y, gy)), ExactPoint::xy(x, q(y + 1, gy))));
        }
    }
    let (mut tested, mut identified) = (0, 0);
    for (p, qq) in &pairs {
        if gluing::coset(&std, p, kk)?.contains(qq) {
            identified += 1;
            table.push(["std2d".into(), pt(p), pt(qq), "-".into(), format!("0..={kk}"), "0".into(), "0".into(), "-".into(), "identified".into()]);
            continue;
        }
        tested += 1;
        let br = metric::dinf_bracket(&std, p, qq, &levels)?;
        let good = br.lo > Q::zero();
        ok &= good;
        table.push(["std2d".into(), pt(p), pt(qq), "-".into(), format!("0..={kk}"), br.lo.to_string(), br.hi.to_string(), "-".into(), good.to_string()]);
    }
    Ok(SuiteOutcome::new("collapse", ok, table)
        .note(format!("counterexample pair {} / {}", pt(&a), pt(&b)))
        .note(format!("std2d: {tested} distinct pairs tested, {identified} identified at level {kk} skipped"))
        .note(format!("runtime {}", secs(t.elapsed()))))
}

// ---------------------------------------------------------------------------
// 6. pencils

/// Criterion 6: exact weights, continuity, endpoints, one shape constant and
/// one Riesz constant across pairs and two depths.
pub fn pencils(pairs: usize, seed: u64) -> Result<SuiteOutcome, LabError> {
    let t = Instant::now();
    let params = SystemParams::std2d(2);
    let mut r = rng(seed);
    let mut table = Table::new(&["p", "q", "j0", "depth", "ref_gen", "dist", "t_total", "lip", "weights_exact", "continuous", "endpoints", "riesz", "unreached"]);
    let mut ok = true;
    let mut c_shape = 0f64;
    let mut c_riesz = [0f64; 2];
    for _ in 0..pairs {
        let p = rand_pt(&mut r, 50, 950);
        let qq = rand_pt(&mut r, 50, 950);
        for (i, extra) in [2, 3].into_iter().enumerate() {
            let row = analysis::pencil_row(&params, &p, &qq, extra, 64, 200, 3, 2)?;
            ok &= row.weights_exact && row.continuous && row.endpoints && row.unreached == 0;
            c_shape = c_shape.max(qf(&row.lip)).max(qf(&row.t_total) / qf(&row.dist));
            c_riesz[i] = c_riesz[i].max(row.riesz);
            table.push([
                pt(&p),
                pt(&qq),
                row.j0.to_string(),
                row.depth.to_string(),
                row.ref_gen.to_string(),
                row.dist.to_string(),
                row.t_total.to_string(),
                row.lip.to_string(),
                row.weights_exact.to_string(),
                row.continuous.to_string(),
                row.endpoints.to_string(),
                format!("{:.4}", row.riesz),
                row.unreached.to_string(),
            ]);
        }
    }
    let drift = (c_riesz[1] - c_riesz[0]).abs() / c_riesz[0];
    ok &= c_shape.is_finite() && drift < 0.25;
    let el = t.elapsed();
    ok &= el < Duration::from_secs(900);
    Ok(SuiteOutcome::new("pencils", ok, table)
        .note(format!("shape constant C = {c_shape:.3} (max of Lipschitz bound and T / hi)"))
        .note(format!("Riesz constant {:.3} at M, {:.3} at M+1, drift {:.1}%", c_riesz[0], c_riesz[1], 100.0 * drift))
        .note(format!("runtime {} (limit 900s)", secs(el))))
}

// ---------------------------------------------------------------------------
// 7. Poincaré

/// Criterion 7: pathwise inequality on every curve, and Semmes ratios stable
/// across two scale octaves.
pub fn poincare(per_octave: usize, seed: u64) -> Result<SuiteOutcome, LabError> {
    let t = Instant::now();
    let params = SystemParams::std2d(2);
    let fns = analysis::x_library();
    let mut r = rng(seed);
    let mut table = Table::new(&["octave", "function", "p", "q", "curves", "pathwise_ok", "ratio"]);
    let mut ok = true;
    let mut worst: BTreeMap<(usize, String), f64> = BTreeMap::new();
    let (mut curves, mut good) = (0, 0);
    for (o, dx) in [125i128, 63].into_iter().enumerate() {
        for _ in 0..per_octave {
            let p = rand_pt(&mut r, 300, 700);
            let qq = ExactPoint::xy(
                p.coords[0] + q(dx + r.gen_range(0..5), 1001),
                p.coords[1] + q(r.gen_range(-40..=40), 1001),
            );
            for row in analysis::poincare_check(&params, &fns, &p, &qq, 2, 64, 200, 4)? {
                curves += row.curves;
                good += row.pathwise_ok;
                let e = worst.entry((o, row.function.clone())).or_insert(0.0);
                *e = e.max(row.ratio);
                table.push([o.to_string(), row.function, pt(&p), pt(&qq), row.curves.to_string(), row.pathwise_ok.to_string(), format!("{:.5}", row.ratio)]);
            }
        }
    }
    ok &= curves == good;
    let mut out_lines = Vec::new();
    for f in &fns {
        let a = worst.get(&(0, f.name())).copied().unwrap_or(f64::NAN);
        let b = worst.get(&(1, f.name())).copied().unwrap_or(f64::NAN);
        let spread = if a.max(b) == 0.0 { 1.0 } else { a.max(b) / a.min(b) };
        ok &= a.is_finite() && b.is_finite() && spread < 2.0;
        out_lines.push(format!("{}: max ratio {a:.4} / {b:.4}, spread {spread:.2}", f.name()));
    }
    let el = t.elapsed();
    ok &= el < Duration::from_secs(900);
    let mut out = SuiteOutcome::new("poincare", ok, table).note(format!("pathwise {good}/{curves} curves"));
    for l in out_lines {
        out = out.note(l);
    }
    Ok(out.note(format!("runtime {} (limit 900s)", secs(el))))
}

// ---------------------------------------------------------------------------
// 8. charts

/// Criterion 8: the remainder of the first-order expansion in `x` halves
/// over two octaves at most sampled approximate-continuity points, and the
/// derivative of `x` is exactly 1 on every cell.
pub fn charts(points: usize, seed: u64) -> Result<SuiteOutcome, LabError> {
    let t = Instant::now();
    let params = SystemParams::std2d(2);
    let k = 4;
    let z0 = ExactPoint::xy(q(-3, 7), q(1, 11));
    let field = DistField::new(&params, &z0, k, &q(3, 1))?;
    let fns = vec![
        TestFn::Linear(Q::from_integer(1), Q::zero()),
        TestFn::HalfSquare,
        TestFn::DistBump(Box::new(field), q(3, 1)),
    ];
    let radii = [q(1, 4), q(1, 8), q(1, 16)];
    let opts = ChartOpts { k, deriv_gen: 3, eps0: 0.05, per_radius: 200 };
    let mut r = rng(seed);
    let sample: Vec<ExactPoint> = (0..points).map(|_| rand_pt(&mut r, 300, 700)).collect();
    let mut table = Table::new(&["function", "point", "derivative", "approx_continuous", "r_max", "r_min", "R(r_max)", "R(r_min)", "pass"]);
    let mut ok = true;
    let mut lines = Vec::new();
    for f in &fns {
        let (mut n, mut pass) = (0, 0);
        for p in &sample {
            let rep = analysis::chart_check(&params, f, p, &radii, &opts)?;
            if rep.approx_continuous {
                n += 1;
                pass += usize::from(rep.pass);
            }
            let (a, b) = (rep.rows.first(), rep.rows.last());
            table.push([
                f.name(),
                pt(p),
                format!("{:.6}", rep.derivative),
                rep.approx_continuous.to_string(),
                a.map_or("-".into(), |x| x.r.to_string()),
                b.map_or("-".into(), |x| x.r.to_string()),
                a.map_or("-".into(), |x| format!("{:.3e}", x.remainder)),
                b.map_or("-".into(), |x| format!("{:.3e}", x.remainder)),
                rep.pass.to_string(),
            ]);
        }
        let good = n >= 20 && pass * 10 >= n * 9;
        ok &= good;
        lines.push(format!("{}: {pass}/{n} approximate-continuity points pass", f.name()));
    }
    // exact derivative of x on every generation-3 cell of [0, 2]^2
    let cells = cells_in_box(&params, &square(0, 2), 3, 2)?;
    let d = analysis::horizontal_derivative(&params, &fns[0], &cells, 4);
    let one = Q::from_integer(1);
    let exact = d.exact.len() == cells.len() && d.exact.values().all(|v| *v == one);
    ok &= exact;
    lines.push(format!("derivative of x exactly 1 on {}/{} cells", d.exact.values().filter(|v| **v == one).count(), cells.len()));
    let mut out = SuiteOutcome::new("charts", ok, table);
    for l in lines {
        out = out.note(l);
    }
    Ok(out.note(format!("runtime {}", secs(t.elapsed()))))
}

// ---------------------------------------------------------------------------
// 9. regularity

/// Criterion 9: Ahlfors band, Nagata covers at `k = 0, 1`, David-Semmes
/// counts and boundary injectivity.
pub fn regularity(centers: usize, seed: u64) -> Result<SuiteOutcome, LabError> {
    let t = Instant::now();
    let mut table = Table::new(&["check", "detail", "measured", "bound", "pass"]);
    let mut ok = true;
    let mut row = |table: &mut Table, check: &str, detail: String, measured: String, bound: String, pass: bool| {
        ok &= pass;
        table.push([check.into(), detail, measured, bound, pass.to_string()]);
    };

    let std2 = SystemParams::std2d(2);
    let mut r = rng(seed);
    let cs: Vec<ExactPoint> = (0..centers).map(|_| rand_pt(&mut r, 300, 1700)).collect();
    let radii = [q(1, 2), q(1, 4), q(1, 8), q(1, 16)];
    let ah = verify::ahlfors_scan(&std2, &cs, &radii, 4)?;
    let (a, b) = ah.ratio_range();
    row(&mut table, "ahlfors", format!("L=2 Q={:.4} {} centers, r in [1/16,1/2]", ah.q, centers), format!("band {:.3} ({a:.3}..{b:.3})", ah.band()), "10".into(), ah.band() <= 10.0);

    let std100 = SystemParams::std2d(100);
    let nag = [
        (0, BoxQ::new(vec![q(0, 1), q(0, 1)], vec![q(1, 1), q(1, 1)])),
        (1, BoxQ::new(vec![q(0, 1), q(0, 1)], vec![q(1, 1), q(10, 300)])),
    ];
    for (k, win) in nag {
        let cf = verify::nagata_cover(&std100, k, &win, 2000, 5)?;
        let sizes: Vec<usize> = cf.families.iter().map(|f| f.len()).collect();
        row(&mut table, "nagata_coverage", format!("L=100 k={k} sets {sizes:?}"), format!("{} of {} samples uncovered", cf.uncovered.len(), cf.samples), "0".into(), cf.covers());
        let diams: Vec<String> = cf.checks.iter().map(|c| format!("[{},{}]{}", c.diam_lo, c.diam_hi, if c.diam_certified { "" } else { "?" })).collect();
        row(&mut table, "nagata_bounded", format!("L=100 k={k} diameters sigma/e/v"), diams.join(" "), cf.bound.to_string(), cf.bounded());
        let unres: usize = cf.checks.iter().map(|c| c.unresolved.len()).sum();
        let pairs: usize = cf.checks.iter().map(|c| c.pairs).sum();
        row(&mut table, "nagata_separated", format!("L=100 k={k} {pairs} pairs"), format!("{unres} unresolved"), cf.sep.to_string(), cf.separated());
    }

    let ds = verify::david_semmes_check(&std2, &cs, &radii, 4, 2.0)?;
    let per: Vec<(Q, usize)> = ds.per_radius();
    let (lo, hi) = per.iter().fold((usize::MAX, 0), |(a, b), (_, n)| (a.min(*n), b.max(*n)));
    let stable = lo > 0 && hi <= 2 * lo;
    row(
        &mut table,
        "david_semmes",
        "L=2 C=2".into(),
        format!("N per radius {:?}", per.iter().map(|(r, n)| format!("{r}:{n}")).collect::<Vec<_>>()),
        "max/min <= 2".into(),
        stable,
    );

    for (l, k) in [(2, 4), (100, 2)] {
        let params = SystemParams::std2d(l);
        for j in 0..=k {
            let (n, bad) = verify::boundary_collisions(&params, k, j)?;
            let first = bad.first().map_or(String::new(), |(a, b)| format!(" e.g. ({},{})~({},{})", a.x, a.y[0], b.x, b.y[0]));
            row(&mut table, "boundary_injective", format!("L={l} k={k} j={j} {n} points"), format!("{} collisions{first}", bad.len()), "0".into(), bad.is_empty());
        }
    }
    let el = t.elapsed();
    let in_time = el < Duration::from_secs(1200);
    let mut out = SuiteOutcome::new("regularity", ok && in_time, table.clone());
    for r in &table.rows {
        out = out.note(format!("{} {}: {} {}", if r[4] == "true" { "ok  " } else { "FAIL" }, r[0], r[1], r[2]));
    }
    Ok(out.note(format!("runtime {} (limit 1200s)", secs(el))))
}

// ---------------------------------------------------------------------------
// 10. axioms

/// Criterion 10: Std2D(100) and GeneralN(3) pass Ax1-Ax6; the Counterexample
/// family fails exactly Ax5.
pub fn axioms(general_mv: i64) -> Result<SuiteOutcome, LabError> {
    let t = Instant::now();
    let mut table = Table::new(&["family", "axiom", "pass", "measured", "witness"]);
    let mut ok = true;
    let mut lines = Vec::new();
    let runs = [
        (SystemParams::std2d(100), square(0, 1), 40, vec![]),
        (SystemParams::general_n(3, general_mv), BoxQ::cube(3, 0, 1), 60, vec![]),
        (SystemParams::counterexample(), square(0, 1), 40, vec!["Ax5"]),
    ];
    for (params, win, budget, expect) in runs {
        let rep = check_axioms(&params, &win, (0, 1), budget)?;
        for e in &rep.entries {
            table.push([rep.family.clone(), e.name.into(), e.pass.to_string(), e.measured.clone(), e.witness.clone().unwrap_or_default()]);
        }
        let failing = rep.failing();
        let good = failing == expect;
        ok &= good;
        lines.push(format!("{}: failing {:?}, expected {:?}, Delta {} H {}", rep.family, failing, expect, rep.delta, rep.h));
    }
    let mut out = SuiteOutcome::new("axioms", ok, table);
    for l in lines {
        out = out.note(l);
    }
    Ok(out.note(format!("runtime {}", secs(t.elapsed()))))
}

// ---------------------------------------------------------------------------

/// Suite names in criterion order.
pub const NAMES: [&str; 10] = [
    "complexity",
    "sandwich",
    "crossing",
    "accessibility",
    "collapse",
    "pencils",
    "poincare",
    "charts",
    "regularity",
    "axioms",
];

/// Run a suite by name with its acceptance sizes and seeds.
pub fn run(name: &str) -> Result<SuiteOutcome, LabError> {
    match name {
        "complexity" => complexity(),
        "sandwich" => sandwich(200, 3),
        "crossing" => crossing(),
        "accessibility" => accessibility(40),
        "collapse" => collapse(5),
        "pencils" => pencils(20, 7),
        "poincare" => poincare(25, 11),
        "charts" => charts(40, 11),
        "regularity" => regularity(30, 13),
        "axioms" => axioms(9),
        _ => Err(LabError::InvalidArgument(format!("unknown suite {name:?}"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fast_counts_match_reference_exhaustively() {
        let p = SystemParams::std2d(2);
        let st = complexity_stats(&p, 1, 1.0, 3).unwrap();
        assert!(st.spot_checks > 1000);
        assert!(st.mismatches.is_empty(), "{:?}", &st.mismatches[..st.mismatches.len().min(5)]);
        assert!(st.cosets.iter().all(|c| c.1 <= 3));
    }

    #[test]
    fn min_span_picks_closest_rows() {
        assert_eq!(min_span(&[vec![0, 10], vec![9, 30]]), 1);
        assert_eq!(min_span(&[vec![4]]), 0);
    }
}
