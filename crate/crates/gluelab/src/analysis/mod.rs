//! Measured curve families (pencils), their pushforward measures, Riesz
//! domination, Poincaré ratios, horizontal derivatives and chart remainders.

use std::collections::BTreeMap;

use num_traits::{Signed, Zero};

use crate::galleries::{self, vertical_faces, GalleryString};
use crate::gluing;
use crate::lattice::{floor_q, qpow, top_cells_containing, CellId, ExactPoint, SystemParams};
use crate::metric::flood::{doubled, face_center, FaceSet, Flood, FloodResult, FloodSpec};
use crate::metric::{self, g_floor};
use crate::{qf, LabError, Q};

/// Horizontal piece of a curve: `x` moves linearly from `x0` to `x1` over
/// `[t0, t1]` at height `y`. `x0 == x1` is a rest.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Segment {
    pub t0: Q,
    pub t1: Q,
    pub x0: Q,
    pub x1: Q,
    pub y: Q,
    pub gen: i32,
}

impl Segment {
    pub fn start(&self) -> ExactPoint {
        ExactPoint::xy(self.x0, self.y)
    }

    pub fn end(&self) -> ExactPoint {
        ExactPoint::xy(self.x1, self.y)
    }

    pub fn speed(&self) -> Q {
        (self.x1 - self.x0).abs() / (self.t1 - self.t0)
    }

    fn reversed(&self, total: Q) -> Segment {
        Segment { t0: total - self.t1, t1: total - self.t0, x0: self.x1, x1: self.x0, y: self.y, gen: self.gen }
    }

    fn shifted(&self, dt: Q) -> Segment {
        Segment { t0: self.t0 + dt, t1: self.t1 + dt, ..self.clone() }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Curve {
    pub segments: Vec<Segment>,
}

impl Curve {
    /// `(time, point)` at every segment boundary.
    pub fn breakpoints(&self) -> Vec<(Q, ExactPoint)> {
        let mut out = Vec::new();
        for s in &self.segments {
            out.push((s.t0, s.start()));
            out.push((s.t1, s.end()));
        }
        out
    }

    pub fn start(&self) -> ExactPoint {
        self.segments[0].start()
    }

    pub fn end(&self) -> ExactPoint {
        self.segments.last().unwrap().end()
    }

    /// Total horizontal travel.
    pub fn x_length(&self) -> Q {
        self.segments.iter().map(|s| (s.x1 - s.x0).abs()).sum()
    }
}

/// A finite measured family of curves on a common time interval `[0, T]`.
#[derive(Clone, Debug)]
pub struct CurveFamily {
    pub t_total: Q,
    /// `(start, end, label)` of the A/B pieces of one half, p-side first.
    pub partition: Vec<(Q, Q, String)>,
    pub curves: Vec<Curve>,
    pub weights: Vec<Q>,
    pub lip_bound: Q,
    pub j0: i32,
    pub depth: i32,
    pub string: GalleryString,
    /// Largest horizontal travel of a half curve on each side.
    pub reach: (Q, Q),
}

/// Sample heights in `(0, 1)`, nudged off the grid lines of the `m_v`-adic
/// subdivision down to `levels` levels.
pub fn sample_heights(params: &SystemParams, samples: usize, levels: i32) -> Result<Vec<Q>, LabError> {
    let s = samples as i128;
    let mut out = Vec::with_capacity(samples);
    for i in 0..s {
        let mut t = 3;
        loop {
            let u = Q::new(7 * i + t, 7 * s);
            if !on_grid(params, &u, levels) {
                out.push(u);
                break;
            }
            t += 1;
            if t >= 7 {
                return Err(LabError::SampleOnGrid(format!("sample {i}")));
            }
        }
    }
    Ok(out)
}

fn on_grid(params: &SystemParams, u: &Q, levels: i32) -> bool {
    (0..=levels).any(|k| (u * qpow(params.mv, k)).is_integer())
}

fn half_curve(
    params: &SystemParams,
    s: &GalleryString,
    tau: bool,
    u0: Q,
) -> Result<Vec<Segment>, LabError> {
    let (cells, packs) = if tau { (&s.tau, &s.right) } else { (&s.sigma, &s.left) };
    let half = Q::new(1, 2);
    let mv = Q::from_integer(params.mv as i128);
    let side_x = |g: i32| params.side(0, g);
    let side_y = |g: i32| params.side(1, g);
    let x_of = |f: &CellId| Q::from_integer(f.anchor[0] as i128) * side_x(f.gen);
    let y_at = |c: &CellId, u: &Q| (Q::from_integer(c.anchor[1] as i128) + u) * side_y(c.gen);
    let mut segs = Vec::new();
    let mut t = Q::zero();
    let mut u = u0;
    let f0 = vertical_faces(&cells[0])[0].clone();
    let (mut cx, mut cy) = (x_of(&f0), y_at(&f0, &u));
    for (idx, pack) in packs.iter().enumerate() {
        let j = s.j0 + idx as i32 + 1;
        let scaled = u * mv;
        let i = floor_q(&scaled);
        u = scaled - Q::from_integer(i);
        if u.is_zero() {
            return Err(LabError::SampleOnGrid(format!("height hit a level-{j} line")));
        }
        let g = &pack[i as usize];
        let dur_b = params.weight(j - 1) * half;
        if g.steps.is_empty() {
            segs.push(Segment { t0: t, t1: t + dur_b, x0: cx, x1: cx, y: cy, gen: j });
        } else {
            let dt = dur_b / Q::from_integer(g.steps.len() as i128);
            for (n, st) in g.steps.iter().enumerate() {
                let [l, r] = vertical_faces(&st.cell);
                let (a, b) = if st.from_left { (l, r) } else { (r, l) };
                let y = y_at(&st.cell, &u);
                let t0 = t + dt * Q::from_integer(n as i128);
                segs.push(Segment { t0, t1: t0 + dt, x0: x_of(&a), x1: x_of(&b), y, gen: j });
            }
        }
        t += dur_b;
        // A_j: across sigma_j from its entry (right) face to its exit (left) face
        let c = &cells[idx + 1];
        let [l, r] = vertical_faces(c);
        let dur_a = params.weight(j) * half;
        let y = y_at(c, &u);
        segs.push(Segment { t0: t, t1: t + dur_a, x0: x_of(&r), x1: x_of(&l), y, gen: j });
        t += dur_a;
        cx = x_of(&l);
        cy = y;
    }
    for k in 1..=2 {
        if (u * qpow(params.mv, k)).is_integer() {
            return Err(LabError::SampleOnGrid("height on a deeper line".into()));
        }
    }
    Ok(segs)
}

fn half_duration(params: &SystemParams, j0: i32, depth: i32) -> (Q, Vec<(Q, Q, String)>) {
    let half = Q::new(1, 2);
    let mut t = Q::zero();
    let mut parts = Vec::new();
    for j in j0 + 1..=depth {
        let b = params.weight(j - 1) * half;
        parts.push((t, t + b, format!("B{j}")));
        t += b;
        let a = params.weight(j) * half;
        parts.push((t, t + a, format!("A{j}")));
        t += a;
    }
    (t, parts)
}

/// Truncation at the root scale: straight crossings of `sigma_j0`.
fn single_cell(params: &SystemParams, string: GalleryString, samples: usize) -> CurveFamily {
    let c = string.sigma[0].clone();
    let r = params.realize(&c);
    let t = params.weight(c.gen);
    let curves = (0..samples)
        .map(|i| {
            let y = r[1].0 + (r[1].1 - r[1].0) * Q::new(2 * i as i128 + 1, 2 * samples as i128);
            Curve { segments: vec![Segment { t0: Q::zero(), t1: t, x0: r[0].0, x1: r[0].1, y, gen: c.gen }] }
        })
        .collect();
    CurveFamily {
        t_total: t,
        partition: vec![(Q::zero(), t, format!("A{}", c.gen))],
        curves,
        weights: vec![Q::new(1, samples as i128); samples],
        lip_bound: Q::from_integer(1),
        j0: c.gen,
        depth: c.gen,
        string,
        reach: (t, t),
    }
}

/// Pencil of `samples` curves from `p` to `q` through a string of galleries
/// rooted at scale `j0`, truncated at generation `depth`.
pub fn build_pencil(
    params: &SystemParams,
    p: &ExactPoint,
    q: &ExactPoint,
    j0: i32,
    depth: i32,
    samples: usize,
    budget: usize,
) -> Result<CurveFamily, LabError> {
    if params.n != 2 {
        return Err(LabError::InvalidArgument("pencils are planar".into()));
    }
    let string = galleries::build_string(params, p, q, j0, depth, budget)?;
    if depth == j0 {
        return Ok(single_cell(params, string, samples));
    }
    let (th, partition) = half_duration(params, j0, depth);
    let heights = sample_heights(params, samples, depth - j0 + 2)?;
    let mut curves = Vec::with_capacity(samples);
    let mut reach = (Q::zero(), Q::zero());
    for u in &heights {
        let hp = half_curve(params, &string, false, *u)?;
        let hq = half_curve(params, &string, true, *u)?;
        let xp: Q = hp.iter().map(|s| (s.x1 - s.x0).abs()).sum();
        let xq: Q = hq.iter().map(|s| (s.x1 - s.x0).abs()).sum();
        reach.0 = reach.0.max(xp);
        reach.1 = reach.1.max(xq);
        let mut segs: Vec<Segment> = hp.iter().rev().map(|s| s.reversed(th)).collect();
        segs.extend(hq.iter().map(|s| s.shifted(th)));
        curves.push(Curve { segments: segs });
    }
    let lip_bound = curves
        .iter()
        .flat_map(|c| c.segments.iter().map(|s| s.speed()))
        .max()
        .unwrap_or_else(Q::zero);
    let w = Q::new(1, samples as i128);
    Ok(CurveFamily {
        t_total: th * Q::from_integer(2),
        partition,
        weights: vec![w; samples],
        curves,
        lip_bound,
        j0,
        depth,
        string,
        reach,
    })
}

/// Scale index for a pair from the level-`k` chain distance.
pub fn pair_scale(params: &SystemParams, p: &ExactPoint, q: &ExactPoint, k: i32) -> Result<(i32, Q), LabError> {
    let d = metric::set_dist(params, &[p.clone()], &[q.clone()], k, k)?;
    if d.is_zero() {
        return Err(LabError::InvalidArgument("points coincide".into()));
    }
    Ok((galleries::scale_index(params, &d), d))
}

impl CurveFamily {
    pub fn weight_sum(&self) -> Q {
        self.weights.iter().sum()
    }

    /// Every breakpoint jump is through points identified at level `depth`,
    /// and every curve is continuous in time.
    pub fn check_continuity(&self, params: &SystemParams) -> Result<bool, LabError> {
        for c in &self.curves {
            for w in c.segments.windows(2) {
                if w[0].t1 != w[1].t0 {
                    return Ok(false);
                }
                let (a, b) = (w[0].end(), w[1].start());
                if a != b && !gluing::coset(params, &a, self.depth)?.contains(&b) {
                    return Ok(false);
                }
            }
            if c.segments[0].t0 != Q::zero() || c.segments.last().unwrap().t1 != self.t_total {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// Curves start in the closed deepest cell of the `p` track and end in
    /// that of the `q` track, so within `m^-depth` of the endpoints.
    pub fn endpoints_ok(&self, params: &SystemParams) -> bool {
        let sp = self.string.sigma.last().unwrap();
        let sq = self.string.tau.last().unwrap();
        self.curves
            .iter()
            .all(|c| params.contains_point(sp, &c.start()) && params.contains_point(sq, &c.end()))
    }
}

/// Finite measure on top cells of one generation.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct DiscreteMeasure {
    pub gen: i32,
    pub support: BTreeMap<CellId, Q>,
}

impl DiscreteMeasure {
    pub fn total(&self) -> Q {
        self.support.values().sum()
    }

    fn add(&mut self, c: CellId, v: Q) {
        *self.support.entry(c).or_insert_with(Q::zero) += v;
    }
}

/// Split a horizontal segment at the column lines of generation `g`:
/// `(column, length)` pieces.
fn column_pieces(params: &SystemParams, x0: &Q, x1: &Q, g: i32) -> Vec<(i64, Q)> {
    let w = params.side(0, g);
    let (a, b) = if x0 <= x1 { (*x0, *x1) } else { (*x1, *x0) };
    let mut out = Vec::new();
    let mut col = floor_q(&(a / w)) as i64;
    let mut cur = a;
    while cur < b {
        let edge = Q::from_integer(col as i128 + 1) * w;
        let nxt = if edge < b { edge } else { b };
        if nxt > cur {
            out.push((col, nxt - cur));
        }
        cur = nxt;
        col += 1;
    }
    out
}

/// Pushforward of time times weight onto top cells of generation `ref_gen`.
pub fn pencil_measure(params: &SystemParams, fam: &CurveFamily, ref_gen: i32) -> DiscreteMeasure {
    let mut mu = DiscreteMeasure { gen: ref_gen, support: BTreeMap::new() };
    let hy = params.side(1, ref_gen);
    for (c, w) in fam.curves.iter().zip(&fam.weights) {
        for s in &c.segments {
            let mass = (s.t1 - s.t0) * w;
            if s.x0 == s.x1 {
                let mut cs = top_cells_containing(params, &s.start(), ref_gen);
                cs.sort();
                mu.add(cs.swap_remove(0), mass);
                continue;
            }
            let row = floor_q(&(s.y / hy)) as i64;
            let len = (s.x1 - s.x0).abs();
            for (col, l) in column_pieces(params, &s.x0, &s.x1, ref_gen) {
                mu.add(CellId::top(ref_gen, vec![col, row]), mass * l / len);
            }
        }
    }
    mu
}

/// Flood from the class of `pts` at resolution and relation level `k`,
/// up to `cap` units of `m^-k`.
pub fn flood_from(params: &SystemParams, pts: &[ExactPoint], k: i32, cap: i128) -> Result<FloodResult, LabError> {
    let unit = params.weight(k);
    let g_lo = g_floor(params, &(unit * Q::from_integer(cap.max(1)))).min(k);
    let mut spec = FloodSpec::new(k, k, g_lo, k);
    spec.max_cost = Some(cap);
    let mut fl = Flood::new(params, spec)?;
    fl.run(&FaceSet::from_points(params, pts, k), None)
}

/// Ball masses around a flood source: `(cost, mass of all top faces with
/// cost <= cost)`, masses in units of a generation-0 cell.
pub struct BallProfile {
    pub k: i32,
    pub res: FloodResult,
    cum: Vec<(i128, f64)>,
    cap: i128,
}

impl BallProfile {
    pub fn new(params: &SystemParams, pts: &[ExactPoint], k: i32, cap: i128) -> Result<Self, LabError> {
        let res = flood_from(params, pts, k, cap)?;
        let cm = qf(&params.cell_mass(k));
        let mut cum = Vec::new();
        let mut acc = 0f64;
        for (c, s) in &res.layers {
            acc += s.open_faces() as f64 * cm;
            cum.push((*c, acc));
        }
        Ok(BallProfile { k, res, cum, cap })
    }

    /// Mass of the flood ball of radius `c` units.
    pub fn mass(&self, c: i128) -> f64 {
        let i = self.cum.partition_point(|(k, _)| *k <= c);
        if i == 0 {
            0.0
        } else {
            self.cum[i - 1].1
        }
    }

    /// Least cost reaching a closed top cell of generation `g <= k`, or the cap.
    pub fn cell_cost(&self, params: &SystemParams, c: &CellId) -> (i128, bool) {
        let sx = params.m.pow((self.k - c.gen) as u32);
        let sy = params.mv.pow((self.k - c.gen) as u32);
        let (a, b) = (c.anchor[0], c.anchor[1]);
        match self.res.min_cost_in_box(2 * a * sx, 2 * (a + 1) * sx, 2 * b * sy, 2 * (b + 1) * sy) {
            Some(v) => (v, true),
            None => (self.cap, false),
        }
    }

    /// Riesz density `r / mu(B(r))` at cost `c` (clamped to one unit), per
    /// unit mass.
    pub fn riesz_density(&self, params: &SystemParams, c: i128) -> f64 {
        let r = c.max(1);
        let m = self.mass(r);
        if m <= 0.0 {
            return 0.0;
        }
        r as f64 * qf(&params.weight(self.k)) / m
    }
}

#[derive(Clone, Debug)]
pub struct RieszReport {
    /// Least `C` with `mu_Gamma <= C (mu_p + mu_q)` on the support.
    pub c: f64,
    pub worst: Option<CellId>,
    pub unreached: usize,
    pub support: usize,
}

/// Compare the pencil measure at generation `ref_gen` with the discretized
/// Riesz potentials around `p` and `q`.
pub fn riesz_check(
    params: &SystemParams,
    fam: &CurveFamily,
    p: &ExactPoint,
    q: &ExactPoint,
    ref_gen: i32,
) -> Result<RieszReport, LabError> {
    let mu = pencil_measure(params, fam, ref_gen);
    let unit = params.weight(ref_gen);
    let reach = |r: &Q| ((fam.reach.0 + fam.reach.1 + r) / unit).to_integer() + 4;
    let d = fam.reach.0.max(fam.reach.1);
    let bp = BallProfile::new(params, &[p.clone()], ref_gen, reach(&d))?;
    let bq = BallProfile::new(params, &[q.clone()], ref_gen, reach(&d))?;
    let cm = qf(&params.cell_mass(ref_gen));
    let mut best = 0f64;
    let mut worst = None;
    let mut unreached = 0;
    for (c, v) in &mu.support {
        let (dp, okp) = bp.cell_cost(params, c);
        let (dq, okq) = bq.cell_cost(params, c);
        if !okp || !okq {
            unreached += 1;
        }
        let rz = (bp.riesz_density(params, dp) + bq.riesz_density(params, dq)) * cm;
        let ratio = qf(v) / rz;
        if ratio > best {
            best = ratio;
            worst = Some(c.clone());
        }
    }
    Ok(RieszReport { c: best, worst, unreached, support: mu.support.len() })
}

/// Summary of one pencil against one pair.
#[derive(Clone, Debug)]
pub struct PencilRow {
    pub p: ExactPoint,
    pub q: ExactPoint,
    pub j0: i32,
    pub depth: i32,
    pub ref_gen: i32,
    pub dist: Q,
    pub t_total: Q,
    pub lip: Q,
    pub weights_exact: bool,
    pub continuous: bool,
    pub endpoints: bool,
    pub riesz: f64,
    pub unreached: usize,
}

/// Build and assess a pencil for a pair at `depth = j0 + extra`, measuring
/// against cells of generation `j0 + ref_offset`. Keep the reference fixed
/// when comparing depths: 64 sample heights cannot resolve much finer bands.
pub fn pencil_row(
    params: &SystemParams,
    p: &ExactPoint,
    q: &ExactPoint,
    extra: i32,
    samples: usize,
    budget: usize,
    dist_level: i32,
    ref_offset: i32,
) -> Result<PencilRow, LabError> {
    let (j0, dist) = pair_scale(params, p, q, dist_level)?;
    let depth = j0 + extra;
    let fam = build_pencil(params, p, q, j0, depth, samples, budget)?;
    let ref_gen = j0 + ref_offset;
    let rz = riesz_check(params, &fam, p, q, ref_gen)?;
    Ok(PencilRow {
        p: p.clone(),
        q: q.clone(),
        j0,
        depth,
        ref_gen,
        dist,
        t_total: fam.t_total,
        lip: fam.lip_bound,
        weights_exact: fam.weight_sum() == Q::from_integer(1),
        continuous: fam.check_continuity(params)?,
        endpoints: fam.endpoints_ok(params),
        riesz: rz.c,
        unreached: rz.unreached,
    })
}

/// Distance field from a fixed point, read off a flood at resolution `k`.
#[derive(Clone, Debug)]
pub struct DistField {
    pub center: ExactPoint,
    pub k: i32,
    pub cap: i128,
    res: FloodResult,
}

impl DistField {
    pub fn new(params: &SystemParams, center: &ExactPoint, k: i32, radius: &Q) -> Result<Self, LabError> {
        let cap = (radius / params.weight(k)).to_integer() + 2;
        let res = flood_from(params, &[center.clone()], k, cap)?;
        Ok(DistField { center: center.clone(), k, cap, res })
    }

    /// Chain distance estimate (cost of the face containing `p`), capped.
    pub fn dist(&self, params: &SystemParams, p: &ExactPoint) -> f64 {
        let (c, y) = doubled(params, p, self.k);
        let cost = self.res.cost_of(c, y).unwrap_or(self.cap);
        cost as f64 * qf(&params.weight(self.k))
    }
}

/// Test functions that are well defined on the quotient: functions of `x`
/// and bumps of the distance to a point.
#[derive(Clone, Debug)]
pub enum TestFn {
    Const(Q),
    /// `a x + b`
    Linear(Q, Q),
    /// `x^2 / 2`
    HalfSquare,
    /// `sin(pi x) / pi`
    Sin,
    /// `|x - x0|`
    Abs(Q),
    /// `max(0, 1 - |x - x0| / rho)`
    XBump(Q, Q),
    /// `max(0, 1 - d(z0, .) / rho)`
    DistBump(Box<DistField>, Q),
}

impl TestFn {
    pub fn name(&self) -> String {
        match self {
            TestFn::Const(_) => "const".into(),
            TestFn::Linear(a, b) if *a == Q::from_integer(1) && b.is_zero() => "x".into(),
            TestFn::Linear(..) => "linear".into(),
            TestFn::HalfSquare => "x2".into(),
            TestFn::Sin => "sin".into(),
            TestFn::Abs(_) => "abs".into(),
            TestFn::XBump(..) => "xbump".into(),
            TestFn::DistBump(..) => "bump".into(),
        }
    }

    pub fn x_only(&self) -> bool {
        !matches!(self, TestFn::DistBump(..))
    }

    /// Exact value, when the function is piecewise polynomial in `x`.
    pub fn value_q(&self, p: &ExactPoint) -> Option<Q> {
        let x = p.x();
        let one = Q::from_integer(1);
        Some(match self {
            TestFn::Const(c) => *c,
            TestFn::Linear(a, b) => a * x + b,
            TestFn::HalfSquare => x * x / Q::from_integer(2),
            TestFn::Abs(x0) => (x - x0).abs(),
            TestFn::XBump(x0, rho) => {
                let v = one - (x - x0).abs() / rho;
                if v > Q::zero() {
                    v
                } else {
                    Q::zero()
                }
            }
            _ => return None,
        })
    }

    pub fn value(&self, params: &SystemParams, p: &ExactPoint) -> f64 {
        if let Some(v) = self.value_q(p) {
            return qf(&v);
        }
        match self {
            TestFn::Sin => (std::f64::consts::PI * qf(&p.x())).sin() / std::f64::consts::PI,
            TestFn::DistBump(f, rho) => (1.0 - f.dist(params, p) / qf(rho)).max(0.0),
            _ => unreachable!(),
        }
    }

    /// Upper bound for `|u'|` over `[a, b]` (functions of `x` only).
    pub fn slope_bound(&self, a: &Q, b: &Q) -> Option<f64> {
        Some(match self {
            TestFn::Const(_) => 0.0,
            TestFn::Linear(s, _) => qf(&s.abs()),
            TestFn::HalfSquare => qf(&a.abs().max(b.abs())),
            TestFn::Sin => {
                if floor_q(a) != floor_q(b) || a.is_integer() || b.is_integer() {
                    1.0
                } else {
                    let c = |v: &Q| (std::f64::consts::PI * qf(v)).cos().abs();
                    c(a).max(c(b))
                }
            }
            TestFn::Abs(_) => 1.0,
            TestFn::XBump(x0, rho) => {
                if *b <= x0 - rho || *a >= x0 + rho {
                    0.0
                } else {
                    qf(&(Q::from_integer(1) / rho))
                }
            }
            TestFn::DistBump(..) => return None,
        })
    }

    /// Lipschitz bound (for the chart oscillation threshold).
    pub fn lip(&self) -> f64 {
        match self {
            TestFn::Const(_) => 0.0,
            TestFn::Linear(a, _) => qf(&a.abs()),
            TestFn::HalfSquare => 2.0,
            TestFn::Sin | TestFn::Abs(_) => 1.0,
            TestFn::XBump(_, rho) | TestFn::DistBump(_, rho) => 1.0 / qf(rho),
        }
    }
}

/// The library of functions of `x` used by the Poincaré suite.
pub fn x_library() -> Vec<TestFn> {
    vec![
        TestFn::Linear(Q::from_integer(1), Q::zero()),
        TestFn::Const(Q::new(3, 2)),
        TestFn::HalfSquare,
        TestFn::Sin,
        TestFn::Abs(Q::new(1, 2)),
        TestFn::XBump(Q::new(1, 2), Q::new(1, 4)),
    ]
}

/// Pathwise upper-gradient inequality along one curve with `g` the
/// column-wise slope bound at generation `g_ref`: returns `(lhs, rhs)`.
pub fn pathwise(params: &SystemParams, f: &TestFn, c: &Curve, g_ref: i32) -> Result<(f64, f64), LabError> {
    let w = params.side(0, g_ref);
    let mut rhs = 0.0;
    for s in &c.segments {
        for (col, l) in column_pieces(params, &s.x0, &s.x1, g_ref) {
            let (a, b) = (Q::from_integer(col as i128) * w, Q::from_integer(col as i128 + 1) * w);
            let g = f
                .slope_bound(&a, &b)
                .ok_or_else(|| LabError::NotUpperGradient(format!("{} is not a function of x", f.name())))?;
            // the piece itself
            let lo = a.max(s.x0.min(s.x1));
            let hi = b.min(s.x0.max(s.x1));
            let du = (f.value(params, &ExactPoint::xy(hi, s.y)) - f.value(params, &ExactPoint::xy(lo, s.y))).abs();
            if du > g * qf(&l) * (1.0 + 1e-12) + 1e-15 {
                return Err(LabError::NotUpperGradient(format!(
                    "{} on x in [{lo}, {hi}] at y {}",
                    f.name(),
                    s.y
                )));
            }
            rhs += g * qf(&l);
        }
    }
    let lhs = (f.value(params, &c.end()) - f.value(params, &c.start())).abs();
    Ok((lhs, rhs))
}

/// `|u(p) - u(q)|` over the Riesz integral of `g` on balls of radius
/// `c_ball * d(p, q)` around both points, at resolution `k`.
pub fn semmes_ratio(
    params: &SystemParams,
    f: &TestFn,
    p: &ExactPoint,
    q: &ExactPoint,
    k: i32,
    c_ball: i128,
) -> Result<f64, LabError> {
    let lhs = (f.value(params, p) - f.value(params, q)).abs();
    if lhs == 0.0 {
        return Ok(0.0);
    }
    let d = metric::set_dist(params, &[p.clone()], &[q.clone()], k, k)?;
    let cap = c_ball * (d / params.weight(k)).to_integer().max(1);
    let w = params.side(0, k);
    let cm = qf(&params.cell_mass(k));
    let mut rhs = 0.0;
    for z in [p, q] {
        let bp = BallProfile::new(params, &[z.clone()], k, cap)?;
        for (c, s) in &bp.res.layers {
            let dens = bp.riesz_density(params, *c);
            let mut acc = 0.0;
            for (col, ivs) in &s.cols {
                if col.rem_euclid(2) == 0 {
                    continue;
                }
                let a = Q::new(*col as i128 - 1, 2) * w;
                let g = f.slope_bound(&a, &(a + w)).unwrap_or(f.lip());
                let mut faces = FaceSet::new();
                faces.cols.insert(1, ivs.clone());
                acc += g * faces.open_faces() as f64;
            }
            rhs += dens * acc * cm;
        }
    }
    Ok(if rhs > 0.0 { lhs / rhs } else { f64::INFINITY })
}

#[derive(Clone, Debug)]
pub struct PoincareRow {
    pub function: String,
    pub p: ExactPoint,
    pub q: ExactPoint,
    pub curves: usize,
    pub pathwise_ok: usize,
    pub ratio: f64,
}

/// Poincaré check for one pair: pathwise inequality along every curve of
/// the pencil, and the Semmes ratio at resolution `k`.
#[allow(clippy::too_many_arguments)]
pub fn poincare_check(
    params: &SystemParams,
    fns: &[TestFn],
    p: &ExactPoint,
    q: &ExactPoint,
    extra: i32,
    samples: usize,
    budget: usize,
    k: i32,
) -> Result<Vec<PoincareRow>, LabError> {
    let (j0, _) = pair_scale(params, p, q, k)?;
    let fam = build_pencil(params, p, q, j0, j0 + extra, samples, budget)?;
    let mut out = Vec::new();
    for f in fns {
        let mut ok = 0;
        for c in &fam.curves {
            let (l, r) = pathwise(params, f, c, fam.depth)?;
            if l <= r * (1.0 + 1e-12) + 1e-15 {
                ok += 1;
            }
        }
        let ratio = semmes_ratio(params, f, p, q, k, 2)?;
        out.push(PoincareRow {
            function: f.name(),
            p: p.clone(),
            q: q.clone(),
            curves: fam.curves.len(),
            pathwise_ok: ok,
            ratio,
        });
    }
    Ok(out)
}

/// Cellwise horizontal derivative on top cells of generation `j`.
#[derive(Clone, Debug)]
pub struct DerivativeField {
    pub level: i32,
    pub function: String,
    pub values: BTreeMap<CellId, f64>,
    /// Exact values, when the function is piecewise polynomial in `x`.
    pub exact: BTreeMap<CellId, Q>,
}

/// Mean horizontal difference quotient of `f` across a top cell, averaged
/// over `fibers` heights.
pub fn cell_derivative(params: &SystemParams, f: &TestFn, c: &CellId, fibers: usize) -> (f64, Option<Q>) {
    let r = params.realize(c);
    let (x0, x1) = r[0];
    let (y0, y1) = r[1];
    let w = x1 - x0;
    let mut acc = 0.0;
    let mut exact = Some(Q::zero());
    for i in 0..fibers {
        let y = y0 + (y1 - y0) * Q::new(2 * i as i128 + 1, 2 * fibers as i128);
        let (a, b) = (ExactPoint::xy(x0, y), ExactPoint::xy(x1, y));
        acc += (f.value(params, &b) - f.value(params, &a)) / qf(&w);
        exact = match (exact, f.value_q(&a), f.value_q(&b)) {
            (Some(e), Some(va), Some(vb)) => Some(e + (vb - va) / w),
            _ => None,
        };
    }
    let n = Q::from_integer(fibers as i128);
    (acc / fibers as f64, exact.map(|e| e / n))
}

/// Horizontal derivative field over the given cells.
pub fn horizontal_derivative(params: &SystemParams, f: &TestFn, cells: &[CellId], fibers: usize) -> DerivativeField {
    let level = cells.first().map(|c| c.gen).unwrap_or(0);
    let mut values = BTreeMap::new();
    let mut exact = BTreeMap::new();
    for c in cells {
        let (v, e) = cell_derivative(params, f, c, fibers);
        values.insert(c.clone(), v);
        if let Some(e) = e {
            exact.insert(c.clone(), e);
        }
    }
    DerivativeField { level, function: f.name(), values, exact }
}

#[derive(Clone, Debug)]
pub struct ChartRow {
    pub r: Q,
    pub samples: usize,
    pub remainder: f64,
}

#[derive(Clone, Debug)]
pub struct ChartReport {
    pub function: String,
    pub point: ExactPoint,
    pub derivative: f64,
    pub oscillation: f64,
    pub approx_continuous: bool,
    pub rows: Vec<ChartRow>,
    pub pass: bool,
}

/// Options for the chart check.
#[derive(Clone, Debug)]
pub struct ChartOpts {
    /// Flood resolution for distances from the point.
    pub k: i32,
    /// Generation of the cells carrying the derivative field.
    pub deriv_gen: i32,
    /// Oscillation threshold as a fraction of the Lipschitz bound.
    pub eps0: f64,
    /// Samples per annulus.
    pub per_radius: usize,
}

impl Default for ChartOpts {
    fn default() -> Self {
        ChartOpts { k: 4, deriv_gen: 3, eps0: 0.05, per_radius: 200 }
    }
}

/// Remainder table of `u = f - f(p) - Df(p) (x - x(p))` on annuli
/// `d(p, q) in [r/2, r]`. Passes when the remainder at the smallest radius
/// is at most half that at the largest, or below the resolution floor
/// `2 m^-k Lip(f) / r_min` of flood-read functions.
pub fn chart_check(
    params: &SystemParams,
    f: &TestFn,
    p: &ExactPoint,
    radii: &[Q],
    opts: &ChartOpts,
) -> Result<ChartReport, LabError> {
    let mut cs = top_cells_containing(params, p, opts.deriv_gen);
    cs.sort();
    let base = cs.swap_remove(0);
    let (deriv, _) = cell_derivative(params, f, &base, 4);
    // oscillation over the 5x5 block of cells around the base cell
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for dx in -2..=2 {
        for dy in -2..=2 {
            let (v, _) = cell_derivative(params, f, &base.translated(&[dx, dy]), 4);
            lo = lo.min(v);
            hi = hi.max(v);
        }
    }
    let oscillation = hi - lo;
    let approx_continuous = oscillation <= opts.eps0 * f.lip() + 1e-12;
    let unit = params.weight(opts.k);
    let rmax = radii.iter().max().cloned().unwrap_or_else(Q::zero);
    let res = flood_from(params, &[p.clone()], opts.k, (rmax / unit).to_integer())?;
    let fp = f.value(params, p);
    let mut rows = Vec::new();
    for r in radii {
        let (c0, c1) = ((r / unit / Q::from_integer(2)).to_integer(), (r / unit).to_integer());
        let mut faces = Vec::new();
        for (c, s) in &res.layers {
            if *c < c0 || *c > c1 {
                continue;
            }
            for (col, ivs) in &s.cols {
                if col.rem_euclid(2) == 0 {
                    continue;
                }
                for (a, b) in ivs {
                    let mut y = if a.rem_euclid(2) == 1 { *a } else { a + 1 };
                    while y <= *b {
                        faces.push((*col, y));
                        y += 2;
                    }
                }
            }
        }
        let stride = (faces.len() / opts.per_radius.max(1)).max(1);
        let mut worst = 0f64;
        let mut n = 0;
        for (col, y) in faces.iter().step_by(stride) {
            let z = face_center(params, *col, *y, opts.k);
            let u = f.value(params, &z) - fp - deriv * qf(&(z.x() - p.x()));
            worst = worst.max(u.abs() / qf(r));
            n += 1;
        }
        rows.push(ChartRow { r: *r, samples: n, remainder: worst });
    }
    let mut by_r = rows.clone();
    by_r.sort_by(|a, b| a.r.cmp(&b.r));
    let first = by_r.first().map(|r| (r.r, r.remainder)).unwrap_or((Q::zero(), 0.0));
    let last = by_r.last().map(|r| r.remainder).unwrap_or(0.0);
    // values read off a flood are exact only to one unit each side
    let floor = if f.x_only() || first.0.is_zero() { 1e-9 } else { 2.0 * qf(&unit) * f.lip() / qf(&first.0) };
    let pass = first.1 <= floor || first.1 <= last / 2.0;
    Ok(ChartReport {
        function: f.name(),
        point: p.clone(),
        derivative: deriv,
        oscillation,
        approx_continuous,
        rows,
        pass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::q;

    fn std() -> SystemParams {
        SystemParams::std2d(2)
    }

    #[test]
    fn heights_avoid_grid() {
        let p = SystemParams::std2d(100);
        let h = sample_heights(&p, 64, 5).unwrap();
        assert_eq!(h.len(), 64);
        assert!(h.iter().all(|u| !on_grid(&p, u, 5)));
    }

    #[test]
    fn single_cell_pencil_is_straight() {
        let p = std();
        let a = ExactPoint::xy(q(1, 16), q(1, 7));
        let b = ExactPoint::xy(q(3, 16), q(1, 7));
        let fam = build_pencil(&p, &a, &b, 0, 0, 12, 50).unwrap();
        assert_eq!(fam.weight_sum(), Q::from_integer(1));
        assert!(fam.curves.iter().all(|c| c.segments.len() == 1 && c.segments[0].x0 != c.segments[0].x1));
        let mu = pencil_measure(&p, &fam, 1);
        // two samples per band: four columns times six bands: equal mass everywhere it lands
        let vals: Vec<&Q> = mu.support.values().collect();
        assert!(vals.iter().all(|v| **v == *vals[0]));
        assert_eq!(mu.total(), fam.t_total);
    }

    #[test]
    fn pencil_invariants() {
        let p = std();
        let a = ExactPoint::xy(q(3, 17), q(2, 11));
        let b = ExactPoint::xy(q(7, 19), q(5, 13));
        let (j0, d) = pair_scale(&p, &a, &b, 3).unwrap();
        let fam = build_pencil(&p, &a, &b, j0, j0 + 2, 16, 60).unwrap();
        assert_eq!(fam.weight_sum(), Q::from_integer(1));
        assert!(fam.check_continuity(&p).unwrap());
        assert!(fam.endpoints_ok(&p));
        let mu = pencil_measure(&p, &fam, j0 + 2);
        assert_eq!(mu.total(), fam.t_total);
        assert!(fam.t_total <= d * Q::from_integer(16));
        let rz = riesz_check(&p, &fam, &a, &b, j0 + 2).unwrap();
        assert!(rz.c.is_finite() && rz.c > 0.0);
        assert_eq!(rz.unreached, 0);
    }

    #[test]
    fn one_band_measure_is_uniform() {
        // a horizontal crossing of one cell spreads its time evenly over columns
        let p = std();
        let s = Segment { t0: q(0, 1), t1: q(1, 2), x0: q(0, 1), x1: q(1, 4), y: q(1, 7), gen: 1 };
        let pieces = column_pieces(&p, &s.x0, &s.x1, 2);
        assert_eq!(pieces.len(), 4);
        assert!(pieces.iter().all(|(_, l)| *l == q(1, 16)));
    }

    #[test]
    fn derivative_of_x_is_one() {
        let p = std();
        let cells: Vec<CellId> = (0..4).flat_map(|a| (0..6).map(move |b| CellId::top(1, vec![a, b]))).collect();
        let f = TestFn::Linear(Q::from_integer(1), Q::zero());
        let d = horizontal_derivative(&p, &f, &cells, 3);
        assert!(d.exact.values().all(|v| *v == Q::from_integer(1)));
        let z = horizontal_derivative(&p, &TestFn::Const(q(2, 1)), &cells, 3);
        assert!(z.exact.values().all(|v| v.is_zero()));
    }

    #[test]
    fn derivative_pushforward_consistency() {
        // D_j of an x-function is the mean of D_{j+1} over the subcolumns
        let p = std();
        let f = TestFn::HalfSquare;
        let c = CellId::top(1, vec![2, 3]);
        let (_, coarse) = cell_derivative(&p, &f, &c, 2);
        let subs: Vec<Q> = (0..4)
            .map(|i| cell_derivative(&p, &f, &CellId::top(2, vec![8 + i, 18]), 2).1.unwrap())
            .collect();
        let mean: Q = subs.iter().sum::<Q>() / Q::from_integer(4);
        assert_eq!(coarse.unwrap(), mean);
    }

    #[test]
    fn linear_chart_has_zero_remainder() {
        let p = std();
        let f = TestFn::Linear(q(2, 1), q(1, 3));
        let r = chart_check(&p, &f, &ExactPoint::xy(q(5, 11), q(3, 7)), &[q(1, 4), q(1, 16)], &ChartOpts::default()).unwrap();
        assert!(r.pass);
        assert!(r.rows.iter().all(|row| row.remainder < 1e-12));
    }

    #[test]
    fn library_slopes_are_upper_gradients() {
        let p = std();
        let a = ExactPoint::xy(q(3, 17), q(2, 11));
        let b = ExactPoint::xy(q(7, 19), q(5, 13));
        let rows = poincare_check(&p, &x_library(), &a, &b, 2, 8, 60, 3).unwrap();
        for r in &rows {
            assert_eq!(r.pathwise_ok, r.curves, "{}", r.function);
            assert!(r.ratio.is_finite());
        }
        let x = rows.iter().find(|r| r.function == "x").unwrap();
        assert!(x.ratio > 0.0);
        assert_eq!(rows.iter().find(|r| r.function == "const").unwrap().ratio, 0.0);
    }
}
