//! SVG figures of planar complexes.
//!
//! Convention: the window is drawn with x to the right and y upward, scaled
//! independently per axis. Grid lines of generation `j` are thin grey; each
//! glued pair of vertical 1-cells is drawn as a source segment (red) and its
//! target (blue), offset sideways so both stay visible, and labeled with its
//! generation. Overlays (cells, polylines) are drawn on top.

use std::fmt::Write;

use crate::gluing::generators_at;
use crate::lattice::{CellId, SystemParams};
use crate::{qf, LabError, Q};

pub struct Figure<'a> {
    params: &'a SystemParams,
    width: f64,
    height: f64,
    body: String,
}

impl<'a> Figure<'a> {
    pub fn new(params: &'a SystemParams, width: f64, height: f64) -> Self {
        Figure { params, width, height, body: String::new() }
    }

    fn px(&self, x: &Q) -> f64 {
        let w = &self.params.window;
        20.0 + (qf(x) - qf(&w.lo[0])) / (qf(&w.hi[0]) - qf(&w.lo[0])) * self.width
    }

    fn py(&self, y: &Q) -> f64 {
        let w = &self.params.window;
        20.0 + self.height - (qf(y) - qf(&w.lo[1])) / (qf(&w.hi[1]) - qf(&w.lo[1])) * self.height
    }

    fn pyf(&self, y: f64) -> f64 {
        let w = &self.params.window;
        20.0 + self.height - (y - qf(&w.lo[1])) / (qf(&w.hi[1]) - qf(&w.lo[1])) * self.height
    }

    fn pxf(&self, x: f64) -> f64 {
        let w = &self.params.window;
        20.0 + (x - qf(&w.lo[0])) / (qf(&w.hi[0]) - qf(&w.lo[0])) * self.width
    }

    /// Grid of generation `j` over the window.
    pub fn grid(&mut self, j: i32) -> &mut Self {
        let w = self.params.window.clone();
        for ax in 0..2 {
            let s = self.params.side(ax, j);
            let mut t = (w.lo[ax] / s).floor() * s;
            while t <= w.hi[ax] {
                let (x1, y1, x2, y2) = if ax == 0 {
                    (self.px(&t), self.py(&w.lo[1]), self.px(&t), self.py(&w.hi[1]))
                } else {
                    (self.px(&w.lo[0]), self.py(&t), self.px(&w.hi[0]), self.py(&t))
                };
                let _ = writeln!(self.body, r##"<line x1="{x1:.2}" y1="{y1:.2}" x2="{x2:.2}" y2="{y2:.2}" stroke="#bbb" stroke-width="0.5"/>"##);
                t += s;
            }
        }
        self
    }

    /// Glued pairs of generations `gens.0..=gens.1` meeting the window.
    pub fn gluings(&mut self, gens: (i32, i32)) -> Result<&mut Self, LabError> {
        for g in gens.0..=gens.1 {
            for gg in generators_at(self.params, g, &self.params.window)? {
                let off = 1.5;
                for (c, color, dx) in [(&gg.source_cell, "#c33", -off), (&gg.target_cell, "#33c", off)] {
                    let r = self.params.realize(c);
                    let (x1, x2) = (self.px(&r[0].0) + dx, self.px(&r[0].1) + dx);
                    let _ = writeln!(
                        self.body,
                        r##"<line x1="{x1:.2}" y1="{:.2}" x2="{x2:.2}" y2="{:.2}" stroke="{color}" stroke-width="1.5"/>"##,
                        self.py(&r[1].0),
                        self.py(&r[1].1)
                    );
                }
                let r = self.params.realize(&gg.source_cell);
                let _ = writeln!(
                    self.body,
                    r##"<text x="{:.2}" y="{:.2}" font-size="7" fill="#c33">{g}</text>"##,
                    self.px(&r[0].0) - 8.0,
                    self.py(&r[1].1) + 7.0
                );
            }
        }
        Ok(self)
    }

    /// Filled top cells, e.g. a gallery.
    pub fn cells(&mut self, cells: &[CellId], color: &str) -> &mut Self {
        for (i, c) in cells.iter().enumerate() {
            let r = self.params.realize(c);
            let (x0, x1) = (self.px(&r[0].0), self.px(&r[0].1));
            let (y1, y0) = (self.py(&r[1].0), self.py(&r[1].1));
            let _ = writeln!(
                self.body,
                r#"<rect x="{x0:.2}" y="{y0:.2}" width="{:.2}" height="{:.2}" fill="{color}" fill-opacity="0.35" stroke="{color}"><title>{i}: {c}</title></rect>"#,
                x1 - x0,
                y1 - y0
            );
        }
        self
    }

    /// Polyline through `(x, y)` points, e.g. a pencil curve.
    pub fn polyline(&mut self, pts: &[(f64, f64)], color: &str, opacity: f64) -> &mut Self {
        let coords: Vec<String> = pts.iter().map(|(x, y)| format!("{:.2},{:.2}", self.pxf(*x), self.pyf(*y))).collect();
        let _ = writeln!(
            self.body,
            r#"<polyline points="{}" fill="none" stroke="{color}" stroke-opacity="{opacity}" stroke-width="0.8"/>"#,
            coords.join(" ")
        );
        self
    }

    pub fn finish(&self) -> String {
        format!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{:.0}\" height=\"{:.0}\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n{}</svg>\n",
            self.width + 40.0,
            self.height + 40.0,
            self.body
        )
    }
}

/// Grid of the finest generation in range with all glued pairs.
pub fn render_complex(params: &SystemParams, j: i32) -> Result<String, LabError> {
    let mut f = Figure::new(params, 600.0, 600.0);
    f.grid(j);
    f.gluings((params.gen_range.0, j))?;
    Ok(f.finish())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::BoxQ;

    #[test]
    fn unit_square_figure() {
        let p = SystemParams::std2d(2).with_window(BoxQ::cube(2, 0, 1)).with_gen_range(0, 1);
        let s = render_complex(&p, 1).unwrap();
        assert!(s.starts_with("<svg"));
        let pairs: usize = (0..=1).map(|g| generators_at(&p, g, &p.window).unwrap().len()).sum();
        assert!(pairs >= 8);
        assert_eq!(s.matches("stroke-width=\"1.5\"").count(), 2 * pairs);
    }
}
