//! Flood timings for a fixed pair at increasing resolution.
use gluelab::{metric, q, ExactPoint, SystemParams};
use std::time::Instant;

fn main() {
    for l in [2, 100] {
        let p = SystemParams::std2d(l);
        let a = ExactPoint::xy(q(3, 7), q(5, 11));
        let b = ExactPoint::xy(q(13, 9), q(17, 13));
        let top = if l == 2 { 6 } else { 3 };
        for k in 2..=top {
            let t = Instant::now();
            let d = metric::set_dist(&p, &[a.clone()], &[b.clone()], k, k).unwrap();
            println!("L={l} k={k} d={d} {:?}", t.elapsed());
        }
    }
}
