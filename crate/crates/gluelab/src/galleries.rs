//! Horizontal galleries, gallery joins, strings of galleries and monotone
//! galleries.
//!
//! Horizontal adjacency is searched on a bipartite graph whose nodes are
//! top-cell classes and vertical-face classes of `X_j`. A shortest path
//! between two face nodes never enters and leaves a cell through the same
//! face class, which is what curve routing needs.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};

use crate::complex::{self, QCell};
use crate::gluing;
use crate::lattice::{cells_in_box, top_cells_containing, BoxQ, CellId, ExactPoint, SystemParams};
use crate::metric;
use crate::LabError;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GalleryKind {
    Horizontal,
    Vertical,
}

/// A gallery of top cells of `X_level`; `shared[i]` is the face class shared
/// by `cells[i]` and `cells[i + 1]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Gallery {
    pub level: i32,
    pub cells: Vec<CellId>,
    pub shared: Vec<CellId>,
    pub kind: GalleryKind,
}

impl Gallery {
    pub fn comb_length(&self) -> usize {
        self.cells.len()
    }

    /// Re-check from stored data: consecutive cells contain the declared
    /// shared face class, with the declared orientation.
    pub fn validate(&self, params: &SystemParams) -> Result<bool, LabError> {
        if self.shared.len() + 1 != self.cells.len().max(1) {
            return Ok(false);
        }
        for (i, f) in self.shared.iter().enumerate() {
            let ok_kind = match self.kind {
                GalleryKind::Horizontal => f.is_vertical(),
                GalleryKind::Vertical => f.is_horizontal(),
            };
            if !ok_kind {
                return Ok(false);
            }
            for c in [&self.cells[i], &self.cells[i + 1]] {
                if !complex::face_classes(params, c, self.level)?.contains(f) {
                    return Ok(false);
                }
            }
        }
        Ok(true)
    }
}

/// Left and right vertical faces of a top cell.
pub fn vertical_faces(c: &CellId) -> [CellId; 2] {
    let n = c.n();
    let ext = ((1u32 << n) - 1) & !1;
    let mut right = c.anchor.clone();
    right[0] += 1;
    [CellId::new(c.gen, c.anchor.clone(), ext), CellId::new(c.gen, right, ext)]
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
enum Node {
    Cell(CellId),
    Face(CellId),
}

/// Horizontal adjacency structure of `X_j`, with memoised classes.
pub struct HGraph<'a> {
    params: &'a SystemParams,
    pub j: i32,
    class: HashMap<CellId, CellId>,
    members: HashMap<CellId, Vec<CellId>>,
}

impl<'a> HGraph<'a> {
    pub fn new(params: &'a SystemParams, j: i32) -> Self {
        HGraph { params, j, class: HashMap::new(), members: HashMap::new() }
    }

    /// Canonical class of a cell of generation `j`.
    pub fn key(&mut self, c: &CellId) -> Result<CellId, LabError> {
        if let Some(k) = self.class.get(c) {
            return Ok(k.clone());
        }
        let sat = gluing::saturate_cell(self.params, c, self.j)?;
        let k = sat[0].clone();
        for s in &sat {
            self.class.insert(s.clone(), k.clone());
        }
        self.members.insert(k.clone(), sat);
        Ok(k)
    }

    pub fn members(&mut self, c: &CellId) -> Result<Vec<CellId>, LabError> {
        let k = self.key(c)?;
        Ok(self.members[&k].clone())
    }

    /// Face classes of the two vertical faces of a top cell class.
    pub fn faces_of(&mut self, cell: &CellId) -> Result<[CellId; 2], LabError> {
        let [l, r] = vertical_faces(cell);
        Ok([self.key(&l)?, self.key(&r)?])
    }

    /// Top cell classes having a member of the face class as a vertical face.
    pub fn cells_of(&mut self, face: &CellId) -> Result<Vec<CellId>, LabError> {
        let mut out = BTreeSet::new();
        for f in self.members(face)? {
            let mut left = f.anchor.clone();
            left[0] -= 1;
            out.insert(self.key(&CellId::top(f.gen, left))?);
            out.insert(self.key(&CellId::top(f.gen, f.anchor.clone()))?);
        }
        Ok(out.into_iter().collect())
    }

    fn neighbors(&mut self, n: &Node) -> Result<Vec<Node>, LabError> {
        Ok(match n {
            Node::Cell(c) => self.faces_of(c)?.into_iter().map(Node::Face).collect(),
            Node::Face(f) => self.cells_of(f)?.into_iter().map(Node::Cell).collect(),
        })
    }

    /// Shortest alternating path from `starts` to a node accepted by
    /// `target`, with at most `budget` cell nodes. Ties break on node order.
    fn search(
        &mut self,
        starts: Vec<Node>,
        target: &dyn Fn(&Node) -> bool,
        budget: usize,
    ) -> Result<Option<Vec<Node>>, LabError> {
        let mut prev: BTreeMap<Node, Option<Node>> = BTreeMap::new();
        let mut q = VecDeque::new();
        for s in starts {
            if prev.insert(s.clone(), None).is_none() {
                let cells = usize::from(matches!(s, Node::Cell(_)));
                q.push_back((s, cells));
            }
        }
        while let Some((n, cells)) = q.pop_front() {
            if target(&n) {
                let mut path = vec![n.clone()];
                let mut cur = n;
                while let Some(Some(p)) = prev.get(&cur) {
                    path.push(p.clone());
                    cur = p.clone();
                }
                path.reverse();
                return Ok(Some(path));
            }
            let mut nb = self.neighbors(&n)?;
            nb.sort();
            for m in nb {
                let c2 = cells + usize::from(matches!(m, Node::Cell(_)));
                if c2 > budget || prev.contains_key(&m) {
                    continue;
                }
                prev.insert(m.clone(), Some(n.clone()));
                q.push_back((m, c2));
            }
        }
        Ok(None)
    }

    fn to_gallery(&self, path: &[Node]) -> Gallery {
        let mut cells = Vec::new();
        let mut shared = Vec::new();
        for (i, n) in path.iter().enumerate() {
            match n {
                Node::Cell(c) => cells.push(c.clone()),
                Node::Face(f) => {
                    if i > 0 && i + 1 < path.len() {
                        shared.push(f.clone());
                    }
                }
            }
        }
        Gallery { level: self.j, cells, shared, kind: GalleryKind::Horizontal }
    }

    /// Shortest horizontal gallery between two top cells of `X_j`.
    pub fn join(&mut self, a: &CellId, b: &CellId, budget: usize) -> Result<Option<Gallery>, LabError> {
        let ka = self.key(a)?;
        let kb = self.key(b)?;
        let t = Node::Cell(kb);
        let path = self.search(vec![Node::Cell(ka)], &|n| *n == t, budget)?;
        Ok(path.map(|p| self.to_gallery(&p)))
    }

    /// Shortest horizontal gallery entering through face class `from` and
    /// leaving through face class `to`; empty if the classes agree.
    pub fn face_to_face(&mut self, from: &CellId, to: &CellId, budget: usize) -> Result<Option<FaceGallery>, LabError> {
        let kf = self.key(from)?;
        let kt = self.key(to)?;
        let t = Node::Face(kt.clone());
        let Some(path) = self.search(vec![Node::Face(kf)], &|n| *n == t, budget)? else {
            return Ok(None);
        };
        let mut steps = Vec::new();
        for w in path.windows(3).step_by(2) {
            if let (Node::Face(fin), Node::Cell(c), Node::Face(fout)) = (&w[0], &w[1], &w[2]) {
                steps.push(self.crossing(c, fin, fout)?);
            }
        }
        Ok(Some(FaceGallery { level: self.j, steps }))
    }

    /// A representative of the cell class `c` and the side through which it
    /// is entered when crossing from face class `fin` to `fout`.
    fn crossing(&mut self, c: &CellId, fin: &CellId, fout: &CellId) -> Result<Crossing, LabError> {
        for rep in self.members(c)? {
            let [l, r] = self.faces_of(&rep)?;
            if l == *fin && r == *fout {
                return Ok(Crossing { cell: rep, from_left: true });
            }
            if r == *fin && l == *fout {
                return Ok(Crossing { cell: rep, from_left: false });
            }
        }
        Err(LabError::InvalidArgument(format!("cell {c:?} does not separate {fin:?} and {fout:?}")))
    }
}

/// One horizontal crossing of a representative cell.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Crossing {
    pub cell: CellId,
    pub from_left: bool,
}

/// A horizontal gallery with explicit crossing directions.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FaceGallery {
    pub level: i32,
    pub steps: Vec<Crossing>,
}

/// Shortest horizontal gallery from `a` to `b` (top cells of generation `j`).
pub fn gallery_join(
    params: &SystemParams,
    a: &CellId,
    b: &CellId,
    j: i32,
    budget: usize,
) -> Result<Gallery, LabError> {
    HGraph::new(params, j).join(a, b, budget)?.ok_or(LabError::NotFound(budget))
}

/// Outcome of an accessibility sweep.
#[derive(Clone, Debug, Default)]
pub struct SweepReport {
    pub pairs: usize,
    pub max_len: usize,
    pub failures: Vec<(CellId, CellId)>,
}

/// Gallery joins over all adjacent pairs of top cells of generation `j`
/// meeting `window`.
pub fn accessibility_sweep(
    params: &SystemParams,
    window: &BoxQ,
    j: i32,
    budget: usize,
) -> Result<SweepReport, LabError> {
    let mut g = HGraph::new(params, j);
    let mut rep = SweepReport::default();
    let mut seen: BTreeSet<(CellId, CellId)> = BTreeSet::new();
    for c in cells_in_box(params, window, j, params.n)? {
        let qc = QCell::new(params, &c, j)?;
        for (other, _) in complex::adjacent_qcells(params, &qc)? {
            let (a, b) = if qc.rep <= other.rep { (qc.rep.clone(), other.rep) } else { (other.rep, qc.rep.clone()) };
            if !seen.insert((a.clone(), b.clone())) {
                continue;
            }
            rep.pairs += 1;
            match g.join(&a, &b, budget)? {
                Some(gal) => rep.max_len = rep.max_len.max(gal.comb_length()),
                None => rep.failures.push((a, b)),
            }
        }
    }
    Ok(rep)
}

/// Subfaces of a vertical face of generation `g`, one generation finer,
/// ordered bottom to top along the last axis (planar use).
pub fn subfaces(params: &SystemParams, f: &CellId) -> Vec<CellId> {
    let mut out: Vec<CellId> = crate::lattice::subdivide(params, f);
    out.sort_by(|a, b| a.anchor[1..].cmp(&b.anchor[1..]));
    out
}

/// String of galleries between the fibers of `p` and `q`, truncated at
/// generation `depth`. Faces of `sigma_j` are entered on the right and left
/// on the left; `tau` uses the same convention, so the two half strings
/// start through the same face of `sigma_j0 = tau_j0`.
#[derive(Clone, Debug)]
pub struct GalleryString {
    pub j0: i32,
    pub depth: i32,
    pub sigma: Vec<CellId>,
    pub tau: Vec<CellId>,
    /// `left[j - j0 - 1][i]`: from subface `i` of the exit face of
    /// `sigma_{j-1}` to the entry face of `sigma_j`.
    pub left: Vec<Vec<FaceGallery>>,
    pub right: Vec<Vec<FaceGallery>>,
    pub c0: usize,
}

/// Scale index with `d in [m^-j0-1, m^-j0)`.
pub fn scale_index(params: &SystemParams, d: &crate::Q) -> i32 {
    metric::g_floor(params, d) - 1
}

fn track(params: &SystemParams, fiber: &[ExactPoint], j0: i32, depth: i32) -> Vec<CellId> {
    (j0..=depth)
        .map(|j| {
            let mut cs: Vec<CellId> = fiber.iter().flat_map(|p| top_cells_containing(params, p, j)).collect();
            cs.sort();
            cs.swap_remove(0)
        })
        .collect()
}

fn packs(
    params: &SystemParams,
    cells: &[CellId],
    j0: i32,
    budget: usize,
    graphs: &mut BTreeMap<i32, HGraph<'_>>,
) -> Result<Vec<Vec<FaceGallery>>, LabError> {
    let mut out = Vec::new();
    for (t, w) in cells.windows(2).enumerate() {
        let j = j0 + t as i32 + 1;
        let exit = vertical_faces(&w[0])[0].clone();
        let entry = vertical_faces(&w[1])[1].clone();
        let g = graphs.get_mut(&j).expect("graph per level");
        let mut pack = Vec::new();
        for sf in subfaces(params, &exit) {
            let fg = g.face_to_face(&sf, &entry, budget)?.ok_or(LabError::NotFound(budget))?;
            pack.push(fg);
        }
        out.push(pack);
    }
    Ok(out)
}

/// Build a string of galleries from `p` to `q` down to generation `depth`.
/// `j0` comes from a distance estimate `d` via `scale_index`.
pub fn build_string(
    params: &SystemParams,
    p: &ExactPoint,
    q: &ExactPoint,
    j0: i32,
    depth: i32,
    budget: usize,
) -> Result<GalleryString, LabError> {
    if depth < j0 {
        return Err(LabError::DepthExceeded(depth));
    }
    let fp = gluing::coset(params, p, depth + 1)?.members;
    let fq = gluing::coset(params, q, depth + 1)?.members;
    let sigma = track(params, &fp, j0, depth);
    let mut tau = track(params, &fq, j0, depth);
    tau[0] = sigma[0].clone();
    let mut graphs: BTreeMap<i32, HGraph> = (j0 + 1..=depth).map(|j| (j, HGraph::new(params, j))).collect();
    let left = packs(params, &sigma, j0, budget, &mut graphs)?;
    let right = packs(params, &tau, j0, budget, &mut graphs)?;
    let c0 = left
        .iter()
        .chain(&right)
        .flat_map(|pk| pk.iter().map(|g| g.steps.len()))
        .max()
        .unwrap_or(0);
    Ok(GalleryString { j0, depth, sigma, tau, left, right, c0 })
}

/// Predicate re-check of a string: tracks meet the fibers, `sigma_j0 = tau_j0`,
/// and every pack gallery crosses consecutive cells through shared faces.
pub fn check_string(params: &SystemParams, s: &GalleryString, p: &ExactPoint, q: &ExactPoint) -> Result<bool, LabError> {
    if s.sigma[0] != s.tau[0] {
        return Ok(false);
    }
    let fp = gluing::coset(params, p, s.depth + 1)?.members;
    let fq = gluing::coset(params, q, s.depth + 1)?.members;
    for (t, c) in s.sigma.iter().enumerate().skip(1) {
        if !fp.iter().any(|x| params.contains_point(c, x)) || !fq.iter().any(|x| params.contains_point(&s.tau[t], x)) {
            return Ok(false);
        }
    }
    for (side, cells) in [(&s.left, &s.sigma), (&s.right, &s.tau)] {
        for (t, pack) in side.iter().enumerate() {
            let j = s.j0 + t as i32 + 1;
            let exit = vertical_faces(&cells[t])[0].clone();
            let entry = vertical_faces(&cells[t + 1])[1].clone();
            let subs = subfaces(params, &exit);
            if pack.len() != subs.len() {
                return Ok(false);
            }
            for (g, sf) in pack.iter().zip(&subs) {
                let mut cur = complex::class_key(params, sf, j)?;
                for st in &g.steps {
                    let [l, r] = vertical_faces(&st.cell);
                    let (fin, fout) = if st.from_left { (l, r) } else { (r, l) };
                    if complex::class_key(params, &fin, j)? != cur {
                        return Ok(false);
                    }
                    cur = complex::class_key(params, &fout, j)?;
                }
                if cur != complex::class_key(params, &entry, j)? {
                    return Ok(false);
                }
            }
        }
    }
    Ok(true)
}

/// Monotone gallery in `X_depth` from a cell near `p` to a cell near `q`:
/// the string truncated at `depth`, with every coarse cell replaced by the
/// shortest level-`depth` gallery joining its neighbours.
pub fn mono_gallery(
    params: &SystemParams,
    s: &GalleryString,
    budget: usize,
) -> Result<Gallery, LabError> {
    let m = s.depth;
    let mut g = HGraph::new(params, m);
    // waypoints: sigma_M .. sigma_j0 = tau_j0 .. tau_M, all pushed to level M
    let mut way: Vec<CellId> = Vec::new();
    for c in s.sigma.iter().rev() {
        way.push(first_subcell(params, c, m));
    }
    for c in s.tau.iter().skip(1) {
        way.push(first_subcell(params, c, m));
    }
    let mut cells: Vec<CellId> = Vec::new();
    let mut shared: Vec<CellId> = Vec::new();
    for w in way.windows(2) {
        let part = g.join(&w[0], &w[1], budget)?.ok_or(LabError::NotFound(budget))?;
        if cells.is_empty() {
            cells.extend(part.cells);
            shared.extend(part.shared);
        } else {
            cells.extend(part.cells.into_iter().skip(1));
            shared.extend(part.shared);
        }
    }
    Ok(Gallery { level: m, cells, shared, kind: GalleryKind::Horizontal })
}

/// Lower-left subcell of generation `g` inside `c`.
fn first_subcell(params: &SystemParams, c: &CellId, g: i32) -> CellId {
    let mut a = c.anchor.clone();
    for (ax, v) in a.iter_mut().enumerate() {
        *v *= params.branch(ax).pow((g - c.gen) as u32);
    }
    CellId::top(g, a)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::q;

    #[test]
    fn trivial_and_neighbouring_joins() {
        let p = SystemParams::std2d(2);
        let a = CellId::top(1, vec![0, 0]);
        assert_eq!(gallery_join(&p, &a, &a, 1, 5).unwrap().comb_length(), 1);
        let b = CellId::top(1, vec![1, 0]);
        let g = gallery_join(&p, &a, &b, 1, 5).unwrap();
        assert_eq!(g.comb_length(), 2);
        assert!(g.validate(&p).unwrap());
    }

    #[test]
    fn vertical_neighbours_need_a_jump() {
        let p = SystemParams::std2d(2);
        // rows 0 and 1 share the glued face on x = 1/4; rows 1 and 2 do not
        let a = CellId::top(1, vec![0, 0]);
        let b = CellId::top(1, vec![0, 1]);
        assert_eq!(gallery_join(&p, &a, &b, 1, 20).unwrap().comb_length(), 2);
        let a = CellId::top(1, vec![0, 2]);
        let g = gallery_join(&p, &b, &a, 1, 20).unwrap();
        assert!(g.comb_length() > 2);
        assert!(g.validate(&p).unwrap());
    }

    #[test]
    fn std2d_sweep_has_no_failures() {
        let p = SystemParams::std2d(2);
        let r = accessibility_sweep(&p, &BoxQ::cube(2, 0, 1), 1, 40).unwrap();
        assert!(r.failures.is_empty());
        assert!(r.pairs > 0 && r.max_len >= 3);
    }

    #[test]
    fn counterexample_sweep_fails() {
        let p = SystemParams::counterexample();
        let r = accessibility_sweep(&p, &BoxQ::cube(2, 0, 1), 1, 30).unwrap();
        assert!(!r.failures.is_empty());
    }

    #[test]
    fn string_passes_its_own_check() {
        let p = SystemParams::std2d(2);
        let a = ExactPoint::xy(q(3, 7), q(5, 11));
        let b = ExactPoint::xy(q(5, 7), q(6, 11));
        let s = build_string(&p, &a, &b, 0, 2, 60).unwrap();
        assert_eq!(s.left.len(), 2);
        assert_eq!(s.left[0].len(), 6);
        assert!(check_string(&p, &s, &a, &b).unwrap());
        let mono = mono_gallery(&p, &s, 200).unwrap();
        assert!(mono.validate(&p).unwrap());
        assert_eq!(mono.level, 2);
    }
}
