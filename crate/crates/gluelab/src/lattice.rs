//! Reference tilings `Y_j` of R^n, their cells, subdivision and the scaling map.
//!
//! Axis 0 is the horizontal coordinate `x` (scale `m^-j`), the remaining axes
//! are vertical (scale `m_v^-j`).

use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use crate::gluing::{self, BaseGenerator};
use crate::{LabError, Q};

/// Which gluing pattern generates the relation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Family {
    /// Planar family with `m = 4`, `m_v = 3L`.
    Std2D { l: i64 },
    /// `n`-dimensional family with `m = 1 + 3(n-1)`.
    GeneralN,
    /// Planar family with glued 2-cells, `m = 3`, `m_v = 6`.
    Counterexample,
    /// User-supplied translation rules.
    Custom,
}

impl Family {
    pub fn name(&self) -> String {
        match self {
            Family::Std2D { l } => format!("std2d(L={l})"),
            Family::GeneralN => "general_n".into(),
            Family::Counterexample => "counterexample".into(),
            Family::Custom => "custom".into(),
        }
    }
}

/// Closed axis-aligned box with exact corners.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BoxQ {
    pub lo: Vec<Q>,
    pub hi: Vec<Q>,
}

impl BoxQ {
    pub fn new(lo: Vec<Q>, hi: Vec<Q>) -> Self {
        assert_eq!(lo.len(), hi.len());
        BoxQ { lo, hi }
    }

    /// `[a, b]^n` with integer corners.
    pub fn cube(n: usize, a: i64, b: i64) -> Self {
        BoxQ::new(vec![Q::from_integer(a as i128); n], vec![Q::from_integer(b as i128); n])
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lo.iter().zip(&self.hi).any(|(a, b)| a > b)
    }

    pub fn contains(&self, p: &ExactPoint) -> bool {
        p.coords
            .iter()
            .enumerate()
            .all(|(i, c)| *c >= self.lo[i] && *c <= self.hi[i])
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ExactPoint {
    pub coords: Vec<Q>,
}

impl ExactPoint {
    pub fn new(coords: Vec<Q>) -> Self {
        ExactPoint { coords }
    }

    pub fn xy(x: Q, y: Q) -> Self {
        ExactPoint { coords: vec![x, y] }
    }

    pub fn from_ints(num: &[i128], den: &[i128]) -> Self {
        ExactPoint {
            coords: num.iter().zip(den).map(|(a, b)| Q::new(*a, *b)).collect(),
        }
    }

    pub fn x(&self) -> Q {
        self.coords[0]
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }
}

impl std::fmt::Display for ExactPoint {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let parts: Vec<String> = self.coords.iter().map(|c| c.to_string()).collect();
        write!(f, "({})", parts.join(","))
    }
}

/// A cell of `Y_gen`: `prod_i [a_i s_i, (a_i + e_i) s_i]`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CellId {
    pub gen: i32,
    pub anchor: Vec<i64>,
    pub extent: u32,
}

impl CellId {
    pub fn new(gen: i32, anchor: Vec<i64>, extent: u32) -> Self {
        CellId { gen, anchor, extent }
    }

    /// Top-dimensional cell.
    pub fn top(gen: i32, anchor: Vec<i64>) -> Self {
        let n = anchor.len();
        CellId { gen, anchor, extent: (1u32 << n) - 1 }
    }

    pub fn vertex(gen: i32, anchor: Vec<i64>) -> Self {
        CellId { gen, anchor, extent: 0 }
    }

    pub fn n(&self) -> usize {
        self.anchor.len()
    }

    pub fn dim(&self) -> usize {
        self.extent.count_ones() as usize
    }

    pub fn spans(&self, axis: usize) -> bool {
        self.extent >> axis & 1 == 1
    }

    /// Codimension-one cell that does not span `x`.
    pub fn is_vertical(&self) -> bool {
        self.dim() + 1 == self.n() && !self.spans(0)
    }

    pub fn is_horizontal(&self) -> bool {
        self.dim() + 1 == self.n() && self.spans(0)
    }

    pub fn translated(&self, delta: &[i64]) -> CellId {
        CellId {
            gen: self.gen,
            anchor: self.anchor.iter().zip(delta).map(|(a, d)| a + d).collect(),
            extent: self.extent,
        }
    }

    /// Closed faces (including the cell itself), as cells of the same generation.
    pub fn faces(&self) -> Vec<CellId> {
        let axes: Vec<usize> = (0..self.n()).filter(|&i| self.spans(i)).collect();
        let mut out = Vec::new();
        // each spanned axis: keep (0), collapse low (1), collapse high (2)
        let total = 3usize.pow(axes.len() as u32);
        for code in 0..total {
            let mut c = code;
            let mut anchor = self.anchor.clone();
            let mut extent = self.extent;
            for &ax in &axes {
                match c % 3 {
                    0 => {}
                    1 => extent &= !(1 << ax),
                    _ => {
                        extent &= !(1 << ax);
                        anchor[ax] += 1;
                    }
                }
                c /= 3;
            }
            out.push(CellId { gen: self.gen, anchor, extent });
        }
        out.sort();
        out
    }

    pub fn vertices(&self) -> Vec<CellId> {
        self.faces().into_iter().filter(|f| f.extent == 0).collect()
    }
}

impl std::fmt::Display for CellId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let a: Vec<String> = self.anchor.iter().map(|v| v.to_string()).collect();
        write!(f, "g{}[{}]e{:b}", self.gen, a.join(","), self.extent)
    }
}

/// Parameters of one direct system.
#[derive(Clone, Debug)]
pub struct SystemParams {
    pub n: usize,
    pub m: i64,
    pub mv: i64,
    pub family: Family,
    pub window: BoxQ,
    pub gen_range: (i32, i32),
    pub rules: Vec<BaseGenerator>,
}

impl SystemParams {
    pub fn std2d(l: i64) -> Self {
        let mv = 3 * l;
        SystemParams {
            n: 2,
            m: 4,
            mv,
            family: Family::Std2D { l },
            window: BoxQ::cube(2, 0, 2),
            gen_range: (0, 2),
            rules: gluing::std2d_rules(),
        }
    }

    pub fn general_n(n: usize, mv: i64) -> Self {
        let m = 1 + 3 * (n as i64 - 1);
        SystemParams {
            n,
            m,
            mv,
            family: Family::GeneralN,
            window: BoxQ::cube(n, 0, 1),
            gen_range: (0, 1),
            rules: gluing::general_n_rules(n),
        }
    }

    pub fn counterexample() -> Self {
        SystemParams {
            n: 2,
            m: 3,
            mv: 6,
            family: Family::Counterexample,
            window: BoxQ::cube(2, 0, 2),
            gen_range: (0, 2),
            rules: gluing::counterexample_rules(),
        }
    }

    pub fn custom(n: usize, m: i64, mv: i64, rules: Vec<BaseGenerator>) -> Result<Self, LabError> {
        let p = SystemParams {
            n,
            m,
            mv,
            family: Family::Custom,
            window: BoxQ::cube(n, 0, 1),
            gen_range: (0, 1),
            rules,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn with_window(mut self, window: BoxQ) -> Self {
        self.window = window;
        self
    }

    pub fn with_gen_range(mut self, lo: i32, hi: i32) -> Self {
        self.gen_range = (lo, hi);
        self
    }

    pub fn validate(&self) -> Result<(), LabError> {
        let bad = |s: String| Err(LabError::InvalidParams(s));
        if self.n < 2 {
            return bad(format!("n = {} < 2", self.n));
        }
        if self.m < 2 || self.mv < self.m {
            return bad(format!("need m >= 2 and m_v >= m, got m={} m_v={}", self.m, self.mv));
        }
        match &self.family {
            Family::Std2D { l } => {
                if self.n != 2 || self.m != 4 || self.mv != 3 * l {
                    return bad("std2d needs n=2, m=4, m_v=3L".into());
                }
            }
            Family::GeneralN => {
                if self.m != 1 + 3 * (self.n as i64 - 1) {
                    return bad("general_n needs m = 1+3(n-1)".into());
                }
                if self.mv % 3 != 0 {
                    return bad("general_n needs m_v divisible by 3".into());
                }
            }
            Family::Counterexample => {
                if self.n != 2 || self.m != 3 || self.mv != 6 {
                    return bad("counterexample needs n=2, m=3, m_v=6".into());
                }
            }
            Family::Custom => {}
        }
        if self.gen_range.0 > self.gen_range.1 {
            return bad("gen_range lo > hi".into());
        }
        if self.window.dim() != self.n {
            return bad("window dimension mismatch".into());
        }
        for r in &self.rules {
            r.validate(self)?;
        }
        Ok(())
    }

    /// Side length of a generation-`gen` cell along `axis`.
    pub fn side(&self, axis: usize, gen: i32) -> Q {
        let b = if axis == 0 { self.m } else { self.mv };
        qpow(b, -gen)
    }

    /// Branching factor along `axis`.
    pub fn branch(&self, axis: usize) -> i64 {
        if axis == 0 {
            self.m
        } else {
            self.mv
        }
    }

    /// `m^-gen`, the chain weight of a generation-`gen` cell.
    pub fn weight(&self, gen: i32) -> Q {
        qpow(self.m, -gen)
    }

    /// Hausdorff/Ahlfors exponent `1 + (n-1) log m_v / log m`.
    pub fn q_exponent(&self) -> f64 {
        1.0 + (self.n as f64 - 1.0) * (self.mv as f64).ln() / (self.m as f64).ln()
    }

    pub fn alpha(&self) -> f64 {
        (self.m as f64).ln() / (self.mv as f64).ln()
    }

    /// Closed realization of a cell, per axis.
    pub fn realize(&self, c: &CellId) -> Vec<(Q, Q)> {
        (0..c.n())
            .map(|ax| {
                let s = self.side(ax, c.gen);
                let a = Q::from_integer(c.anchor[ax] as i128) * s;
                let e = if c.spans(ax) { s } else { Q::zero() };
                (a, a + e)
            })
            .collect()
    }

    pub fn contains_point(&self, c: &CellId, p: &ExactPoint) -> bool {
        self.realize(c)
            .iter()
            .zip(&p.coords)
            .all(|((a, b), v)| v >= a && v <= b)
    }

    /// Barycenter of the realized cell.
    pub fn center(&self, c: &CellId) -> ExactPoint {
        ExactPoint::new(
            self.realize(c)
                .into_iter()
                .map(|(a, b)| (a + b) / Q::from_integer(2))
                .collect(),
        )
    }

    /// Lebesgue measure of a top cell, normalised so a generation-0 cell has mass 1.
    pub fn cell_mass(&self, gen: i32) -> Q {
        qpow(self.m, -gen) * qpow(self.mv, -gen * (self.n as i32 - 1))
    }
}

/// `b^e` as an exact rational, any sign of `e`.
pub fn qpow(b: i64, e: i32) -> Q {
    let base = Q::from_integer(b as i128);
    if e >= 0 {
        num_traits::pow(base, e as usize)
    } else {
        Q::one() / num_traits::pow(base, (-e) as usize)
    }
}

/// `b^e` for `e >= 0`, checked.
pub fn ipow(b: i64, e: u32) -> Option<i64> {
    b.checked_pow(e)
}

pub fn floor_q(q: &Q) -> i128 {
    Integer::div_floor(q.numer(), q.denom())
}

pub fn ceil_q(q: &Q) -> i128 {
    -Integer::div_floor(&(-q.numer()), q.denom())
}

/// Subcells of `c` at generation `c.gen + 1`.
pub fn subdivide(params: &SystemParams, c: &CellId) -> Vec<CellId> {
    let n = c.n();
    let mut out = vec![CellId::new(c.gen + 1, vec![0; n], c.extent)];
    for ax in 0..n {
        let b = params.branch(ax);
        let mut next = Vec::with_capacity(out.len() * b as usize);
        for cell in &out {
            let reps = if c.spans(ax) { b } else { 1 };
            for t in 0..reps {
                let mut nc = cell.clone();
                nc.anchor[ax] = c.anchor[ax] * b + t;
                next.push(nc);
            }
        }
        out = next;
    }
    out.sort();
    out
}

/// `Phi^k(p)`: `x -> m^-k x`, `y -> m_v^-k y`.
pub fn phi_map(params: &SystemParams, p: &ExactPoint, k: i32) -> ExactPoint {
    ExactPoint::new(
        p.coords
            .iter()
            .enumerate()
            .map(|(ax, c)| {
                let b = if ax == 0 { params.m } else { params.mv };
                c * qpow(b, -k)
            })
            .collect(),
    )
}

/// `Phi^k` on cells: same anchor, generation shifted by `k`.
pub fn phi_cell(c: &CellId, k: i32) -> CellId {
    CellId { gen: c.gen + k, anchor: c.anchor.clone(), extent: c.extent }
}

/// Range of anchors along one axis whose closed cell meets `[lo, hi]`.
fn anchor_range(lo: &Q, hi: &Q, s: &Q, spans: bool) -> (i64, i64) {
    let a_hi = floor_q(&(hi / s)) as i64;
    let a_lo = if spans {
        ceil_q(&(lo / s)) as i64 - 1
    } else {
        ceil_q(&(lo / s)) as i64
    };
    (a_lo, a_hi)
}

/// All `d`-cells of `Y_j` whose closed realization meets the closed box.
pub fn cells_in_box(
    params: &SystemParams,
    bx: &BoxQ,
    j: i32,
    d: usize,
) -> Result<Vec<CellId>, LabError> {
    let n = params.n;
    if d > n {
        return Err(LabError::InvalidArgument(format!("cell dimension {d} > n = {n}")));
    }
    if bx.is_empty() {
        return Ok(Vec::new());
    }
    let mut out = Vec::new();
    for extent in 0u32..(1 << n) {
        if extent.count_ones() as usize != d {
            continue;
        }
        let ranges: Vec<(i64, i64)> = (0..n)
            .map(|ax| anchor_range(&bx.lo[ax], &bx.hi[ax], &params.side(ax, j), extent >> ax & 1 == 1))
            .collect();
        if ranges.iter().any(|(a, b)| a > b) {
            continue;
        }
        let mut anchor: Vec<i64> = ranges.iter().map(|r| r.0).collect();
        loop {
            out.push(CellId::new(j, anchor.clone(), extent));
            let mut ax = n;
            loop {
                if ax == 0 {
                    break;
                }
                ax -= 1;
                if anchor[ax] < ranges[ax].1 {
                    anchor[ax] += 1;
                    for (k, a) in anchor.iter_mut().enumerate().skip(ax + 1) {
                        *a = ranges[k].0;
                    }
                    break;
                } else if ax == 0 {
                    ax = usize::MAX;
                    break;
                }
            }
            if ax == usize::MAX {
                break;
            }
        }
    }
    out.sort_by(|a, b| (&a.anchor, a.extent).cmp(&(&b.anchor, b.extent)));
    Ok(out)
}

/// Cells of `Y_j` whose closed realization lies inside the box.
pub fn cells_inside_box(
    params: &SystemParams,
    bx: &BoxQ,
    j: i32,
    d: usize,
) -> Result<Vec<CellId>, LabError> {
    Ok(cells_in_box(params, bx, j, d)?
        .into_iter()
        .filter(|c| {
            params
                .realize(c)
                .iter()
                .enumerate()
                .all(|(ax, (a, b))| *a >= bx.lo[ax] && *b <= bx.hi[ax])
        })
        .collect())
}

/// Closed realizations intersect.
pub fn incident(params: &SystemParams, c1: &CellId, c2: &CellId) -> bool {
    let r1 = params.realize(c1);
    let r2 = params.realize(c2);
    r1.iter().zip(&r2).all(|((a1, b1), (a2, b2))| a1 <= b2 && a2 <= b1)
}

/// Cells of generation `j` and dimension `n` containing `p` (closed).
pub fn top_cells_containing(params: &SystemParams, p: &ExactPoint, j: i32) -> Vec<CellId> {
    let n = params.n;
    let mut per_axis: Vec<Vec<i64>> = Vec::with_capacity(n);
    for ax in 0..n {
        let t = p.coords[ax] / params.side(ax, j);
        let f = floor_q(&t) as i64;
        if t.is_integer() {
            per_axis.push(vec![f - 1, f]);
        } else {
            per_axis.push(vec![f]);
        }
    }
    let mut out = vec![Vec::new()];
    for opts in per_axis {
        let mut next = Vec::new();
        for pre in &out {
            for o in &opts {
                let mut v: Vec<i64> = pre.clone();
                v.push(*o);
                next.push(v);
            }
        }
        out = next;
    }
    out.into_iter().map(|a| CellId::top(j, a)).collect()
}

/// The unique cell of `Y_j` whose relative interior contains `p`.
pub fn open_cell_containing(params: &SystemParams, p: &ExactPoint, j: i32) -> CellId {
    let n = params.n;
    let mut anchor = vec![0i64; n];
    let mut extent = 0u32;
    for ax in 0..n {
        let t = p.coords[ax] / params.side(ax, j);
        anchor[ax] = floor_q(&t) as i64;
        if !t.is_integer() {
            extent |= 1 << ax;
        }
    }
    CellId::new(j, anchor, extent)
}

/// Absolute value helper kept here to avoid importing traits at call sites.
pub fn qabs(q: &Q) -> Q {
    q.abs()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p46() -> SystemParams {
        // m=4, m_v=6 is std2d with L=2
        SystemParams::std2d(2)
    }

    #[test]
    fn subdivide_counts() {
        let p = p46();
        assert_eq!(subdivide(&p, &CellId::top(0, vec![0, 0])).len(), 24);
        assert_eq!(subdivide(&p, &CellId::vertex(0, vec![1, 1])), vec![CellId::vertex(1, vec![4, 6])]);
        assert_eq!(subdivide(&p, &CellId::new(0, vec![0, 0], 0b01)).len(), 4);
        assert_eq!(subdivide(&p, &CellId::new(0, vec![0, 0], 0b10)).len(), 6);
    }

    #[test]
    fn phi_examples() {
        let p = p46();
        let q = phi_map(&p, &ExactPoint::from_ints(&[1, 1], &[1, 1]), 1);
        assert_eq!(q, ExactPoint::from_ints(&[1, 1], &[4, 6]));
        let z = ExactPoint::from_ints(&[0, 0], &[1, 1]);
        assert_eq!(phi_map(&p, &z, 5), z);
    }

    #[test]
    fn box_counts() {
        let p = p46();
        let unit = BoxQ::cube(2, 0, 1);
        assert_eq!(cells_in_box(&p, &unit, 0, 2).unwrap().len(), 9);
        assert_eq!(cells_inside_box(&p, &unit, 0, 2).unwrap().len(), 1);
        assert_eq!(cells_inside_box(&p, &unit, 1, 2).unwrap().len(), 24);
        assert_eq!(cells_in_box(&p, &unit, 1, 2).unwrap().len(), 48);
        let empty = BoxQ::new(vec![Q::from_integer(1), Q::zero()], vec![Q::zero(), Q::one()]);
        assert!(cells_in_box(&p, &empty, 0, 2).unwrap().is_empty());
        assert!(cells_in_box(&p, &unit, 0, 3).is_err());
    }

    #[test]
    fn incidence() {
        let p = p46();
        let a = CellId::top(1, vec![0, 0]);
        assert!(incident(&p, &a, &a));
        assert!(incident(&p, &a, &CellId::top(1, vec![1, 0])));
        assert!(!incident(&p, &a, &CellId::top(1, vec![2, 0])));
        assert!(incident(&p, &CellId::top(0, vec![0, 0]), &CellId::top(2, vec![4, 0])));
    }

    #[test]
    fn faces_of_square() {
        let f = CellId::top(0, vec![0, 0]).faces();
        assert_eq!(f.len(), 9);
        assert_eq!(f.iter().filter(|c| c.dim() == 0).count(), 4);
        assert_eq!(f.iter().filter(|c| c.is_vertical()).count(), 2);
    }

    #[test]
    fn containing_cells() {
        let p = p46();
        let v = ExactPoint::from_ints(&[1, 1], &[4, 6]);
        assert_eq!(top_cells_containing(&p, &v, 1).len(), 4);
        let inner = ExactPoint::from_ints(&[1, 1], &[8, 12]);
        assert_eq!(top_cells_containing(&p, &inner, 1), vec![CellId::top(1, vec![0, 0])]);
        assert_eq!(open_cell_containing(&p, &v, 1), CellId::vertex(1, vec![1, 1]));
    }
}
