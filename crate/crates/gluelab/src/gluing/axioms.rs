//! Admissibility checks Ax1-Ax6 on a finite window and generation range.

use std::fmt;

use crate::complex;
use crate::galleries;
use crate::gluing::{generators_at, interior_grid_point, saturate_cell, GridGluer, GridPoint};
use crate::lattice::{cells_in_box, subdivide, BoxQ, SystemParams};
use crate::{LabError, Q};

#[derive(Clone, Debug, PartialEq)]
pub struct AxiomEntry {
    pub name: &'static str,
    pub pass: bool,
    pub measured: String,
    pub witness: Option<String>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AxiomReport {
    pub family: String,
    pub entries: Vec<AxiomEntry>,
    /// Largest link and largest gallery length seen.
    pub delta: usize,
    /// Largest fiber edge-path length seen.
    pub h: i64,
}

impl AxiomReport {
    pub fn get(&self, name: &str) -> Option<&AxiomEntry> {
        self.entries.iter().find(|e| e.name == name)
    }

    pub fn passed(&self, name: &str) -> bool {
        self.get(name).is_some_and(|e| e.pass)
    }

    pub fn failing(&self) -> Vec<&'static str> {
        self.entries.iter().filter(|e| !e.pass).map(|e| e.name).collect()
    }
}

impl fmt::Display for AxiomReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "family {}  delta {}  H {}", self.family, self.delta, self.h)?;
        for e in &self.entries {
            write!(f, "{} {} {}", e.name, if e.pass { "PASS" } else { "FAIL" }, e.measured)?;
            if let Some(w) = &e.witness {
                write!(f, " witness {w}")?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

/// Link bound: three copies of the Euclidean star of a vertex.
pub fn link_bound(n: usize) -> usize {
    3 * (3usize.pow(n as u32) - 1)
}

/// Fiber bound: two jumps of the largest rule shift.
pub fn fiber_bound(params: &SystemParams) -> i64 {
    2 * params.rules.iter().flat_map(|r| r.shift.iter().map(|s| s.abs())).max().unwrap_or(1)
}

fn entry(name: &'static str, pass: bool, measured: String, witness: Option<String>) -> AxiomEntry {
    AxiomEntry { name, pass, measured, witness }
}

/// Run Ax1-Ax6 over `window` for generations `gens.0..=gens.1`; galleries
/// are searched with `budget` cells.
pub fn check_axioms(
    params: &SystemParams,
    window: &BoxQ,
    gens: (i32, i32),
    budget: usize,
) -> Result<AxiomReport, LabError> {
    let n = params.n;
    let mut entries = Vec::new();

    // Ax1: links bounded and connected (X_j is a quotient of R^n, so it is
    // connected and a union of closed top cells by construction)
    let mut max_link = 0;
    let mut w1 = None;
    for g in gens.0..=gens.1 {
        for v in cells_in_box(params, window, g, 0)? {
            let l = complex::link(params, &v, g)?.len();
            max_link = max_link.max(l);
            if (l > link_bound(n) || !complex::link_connected(params, &v, g)?) && w1.is_none() {
                w1 = Some(format!("vertex {:?} gen {g} link {l}", v.anchor));
            }
        }
    }
    entries.push(entry("Ax1", w1.is_none(), format!("max link {max_link} (bound {})", link_bound(n)), w1));

    // Ax2: identifications are lattice translations fixing x, compatible
    // with faces and with subdivision
    let mut w2 = None;
    let mut gens_seen = 0;
    for g in gens.0..=gens.1 {
        for gg in generators_at(params, g, window)? {
            gens_seen += 1;
            let s = &gg.source_cell;
            let ok_t = gg.translation[0] == Q::from_integer(0)
                && (1..n).all(|ax| (gg.translation[ax] / params.side(ax, g)).is_integer());
            let delta: Vec<i64> = (0..n).map(|ax| (gg.translation[ax] / params.side(ax, g)).to_integer() as i64).collect();
            let ok_target = s.translated(&delta) == gg.target_cell;
            let mut ok_faces = true;
            for f in s.faces() {
                if !saturate_cell(params, &f, g)?.contains(&f.translated(&delta)) {
                    ok_faces = false;
                }
            }
            let mut ok_sub = true;
            for sub in subdivide(params, s) {
                let sd: Vec<i64> = (0..n).map(|ax| delta[ax] * params.branch(ax)).collect();
                let sat = saturate_cell(params, &sub, g)?;
                if !sat.contains(&sub.translated(&sd)) || sat.iter().any(|c| c.anchor[0] != sub.anchor[0]) {
                    ok_sub = false;
                }
            }
            if !(ok_t && ok_target && ok_faces && ok_sub) && w2.is_none() {
                w2 = Some(format!("generator gen {g} source {:?}", s.anchor));
            }
        }
    }
    entries.push(entry("Ax2", w2.is_none(), format!("{gens_seen} generators"), w2));

    // Ax3: pi is cellular: the level-g class of a cell interior point
    // consists of interior points of translates of the same cell
    let mut w3 = None;
    let mut cells_seen = 0;
    for g in gens.0..=gens.1 {
        let gl = GridGluer::new(params, g + 1);
        for d in 0..=n {
            for c in cells_in_box(params, window, g, d)? {
                cells_seen += 1;
                let base = interior_grid_point(params, &c);
                let ok = gl.coset(&base, g)?.iter().all(|m| {
                    m.x == base.x && m.y.iter().zip(&base.y).all(|(a, b)| (a - b) % params.mv == 0)
                });
                if !ok && w3.is_none() {
                    w3 = Some(format!("cell {:?} gen {g}", c));
                }
            }
        }
    }
    entries.push(entry("Ax3", w3.is_none(), format!("{cells_seen} cells"), w3));

    // Ax4: fibers of pi_{g-1} over vertices lie on short vertical edge paths
    let mut h = 0i64;
    let mut w4 = None;
    for g in gens.0..=gens.1 {
        for v in cells_in_box(params, window, g, 0)? {
            let gp = GridPoint { x: v.anchor[0], y: v.anchor[1..].to_vec() };
            let len = complex::fiber_path_length(params, &gp, g - 1)?;
            h = h.max(len);
            if len > fiber_bound(params) && w4.is_none() {
                w4 = Some(format!("vertex {:?} gen {g} path {len}", v.anchor));
            }
        }
    }
    entries.push(entry("Ax4", w4.is_none(), format!("H {h} (bound {})", fiber_bound(params)), w4));

    // Ax5: gallery accessibility
    let mut max_gal = 0;
    let mut w5 = None;
    let mut pairs = 0;
    for g in gens.0..=gens.1 {
        let r = galleries::accessibility_sweep(params, window, g, budget)?;
        pairs += r.pairs;
        max_gal = max_gal.max(r.max_len);
        if let Some((a, b)) = r.failures.first() {
            if w5.is_none() {
                w5 = Some(format!("gen {g} cells {:?} {:?} ({} failing pairs)", a.anchor, b.anchor, r.failures.len()));
            }
        }
    }
    entries.push(entry(
        "Ax5",
        w5.is_none(),
        format!("{pairs} adjacent pairs, max gallery {max_gal} (budget {budget})"),
        w5,
    ));

    // Ax6: measures. (a) pushforward keeps mass, (b) cell weight = number of
    // preimage cells, (c) adjacent weights within the link bound
    let mut w6 = None;
    let mut max_ratio = Q::from_integer(1);
    for g in gens.0..=gens.1 {
        let subs = (0..n).map(|ax| params.branch(ax) as i128).product::<i128>();
        if params.cell_mass(g) != params.cell_mass(g + 1) * Q::from_integer(subs) {
            w6 = Some(format!("mass not conserved at gen {g}"));
        }
        for c in cells_in_box(params, window, g, n)? {
            let wc = saturate_cell(params, &c, g)?.len() as i128;
            for ax in 0..n {
                let mut d = vec![0i64; n];
                d[ax] = 1;
                let nb = c.translated(&d);
                let wn = saturate_cell(params, &nb, g)?.len() as i128;
                let r = Q::new(wc.max(wn), wc.min(wn));
                if r > max_ratio {
                    max_ratio = r;
                }
            }
        }
    }
    let bound = Q::from_integer(link_bound(n) as i128);
    if max_ratio > bound && w6.is_none() {
        w6 = Some(format!("adjacent weight ratio {max_ratio}"));
    }
    entries.push(entry("Ax6", w6.is_none(), format!("max adjacent weight ratio {max_ratio}"), w6));

    Ok(AxiomReport { family: params.family.name(), entries, delta: max_link.max(max_gal), h })
}

/// The trivial relation on `Y` (no rules) as a comparison system: every
/// axiom except gallery accessibility holds.
pub fn unglued(n: usize, m: i64, mv: i64) -> Result<SystemParams, LabError> {
    SystemParams::custom(n, m, mv, Vec::new())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn std2d_small_passes() {
        let p = SystemParams::std2d(2);
        let r = check_axioms(&p, &BoxQ::cube(2, 0, 1), (0, 1), 40).unwrap();
        assert!(r.failing().is_empty(), "{r}");
        assert!(r.h <= 2);
    }

    #[test]
    fn counterexample_fails_only_ax5() {
        let p = SystemParams::counterexample();
        let r = check_axioms(&p, &BoxQ::cube(2, 0, 1), (0, 1), 40).unwrap();
        assert_eq!(r.failing(), vec!["Ax5"], "{r}");
    }

    #[test]
    fn no_gluing_fails_ax5() {
        let p = unglued(2, 4, 6).unwrap();
        let r = check_axioms(&p, &BoxQ::cube(2, 0, 1), (0, 1), 20).unwrap();
        assert_eq!(r.failing(), vec!["Ax5"], "{r}");
    }

    #[test]
    fn bounds() {
        assert_eq!(link_bound(2), 24);
        assert_eq!(fiber_bound(&SystemParams::std2d(2)), 2);
    }
}
