//! wasm-bindgen bindings for a static demo page. Every entry point takes the
//! Std2D parameter `L` and returns plain strings so the page stays framework
//! free.

use gluelab::config::parse_point;
use gluelab::{gluing, metric, svg, SystemParams};
use wasm_bindgen::prelude::*;

fn params(l: i64) -> Result<SystemParams, String> {
    if l < 1 {
        return Err(format!("L must be positive, got {l}"));
    }
    let p = SystemParams::std2d(l);
    p.validate().map_err(|e| e.to_string())?;
    Ok(p)
}

fn coords(p: &gluelab::ExactPoint) -> String {
    p.coords.iter().map(|c| c.to_string()).collect::<Vec<_>>().join(", ")
}

/// Members of the `R_j` class of the point `"x,y"`, one per line.
pub fn coset_text(l: i64, point: &str, j: i32) -> Result<String, String> {
    let p = params(l)?;
    let a = parse_point(point).map_err(|e| e.to_string())?;
    let c = gluing::coset(&p, &a, j).map_err(|e| e.to_string())?;
    let mut out = format!("{} member(s) at level {j}\n", c.len());
    for m in &c.members {
        out += &format!("({})\n", coords(m));
    }
    Ok(out)
}

/// Chain distance at level `j` and the limit bracket from levels `0..=j`.
pub fn distance_text(l: i64, from: &str, to: &str, j: i32) -> Result<String, String> {
    let p = params(l)?;
    let a = parse_point(from).map_err(|e| e.to_string())?;
    let b = parse_point(to).map_err(|e| e.to_string())?;
    let d = metric::set_dist(&p, &[a.clone()], &[b.clone()], j, j).map_err(|e| e.to_string())?;
    let levels: Vec<i32> = (0..=j).collect();
    let br = metric::dinf_bracket(&p, &a, &b, &levels).map_err(|e| e.to_string())?;
    let mut out = format!("d_{j} = {d}\nlimit distance in [{}, {}]\n", br.lo, br.hi);
    if l < 5 {
        out += "(for small L the lower end is not guaranteed)\n";
    }
    Ok(out)
}

/// SVG drawing of `[0, 1]^2` with grid lines and gluings up to generation `j`.
pub fn render_svg(l: i64, j: i32) -> Result<String, String> {
    let p = params(l)?.with_window(gluelab::BoxQ::cube(2, 0, 1));
    svg::render_complex(&p, j).map_err(|e| e.to_string())
}

#[wasm_bindgen]
pub fn coset(l: i64, point: &str, j: i32) -> Result<String, JsValue> {
    coset_text(l, point, j).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn distance(l: i64, from: &str, to: &str, j: i32) -> Result<String, JsValue> {
    distance_text(l, from, to, j).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn render(l: i64, j: i32) -> Result<String, JsValue> {
    render_svg(l, j).map_err(|e| JsValue::from_str(&e))
}
