use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Parser, Subcommand};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use gluelab::analysis::{self, ChartOpts, DistField, TestFn};
use gluelab::config::{parse_list, parse_point, Config};
use gluelab::galleries;
use gluelab::gluing::{self, axioms};
use gluelab::lattice::{cells_in_box, Family};
use gluelab::metric;
use gluelab::report::{Report, Table};
use gluelab::suites;
use gluelab::svg::{render_complex, Figure};
use gluelab::verify;
use gluelab::{q, qf, CellId, ExactPoint, SystemParams, Q};

#[derive(Parser)]
#[command(name = "gluelab", version, about = "Glued cell complexes: exact metrics, galleries and regularity checks")]
struct Cli {
    /// TOML configuration file
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (overrides `out_dir` in the config)
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Summarise the complex and draw it (2-D families)
    Build,
    /// Check Ax1-Ax6 over the configured window and generations
    Axioms,
    /// Chain distance at level j, or the limit bracket
    Dist {
        #[arg(long)]
        level: i32,
        #[arg(long, allow_hyphen_values = true)]
        from: Option<String>,
        #[arg(long, allow_hyphen_values = true)]
        to: Option<String>,
        #[arg(long)]
        bracket: bool,
        /// CSV with columns `p,q` (points as "x,y")
        #[arg(long)]
        batch: Option<PathBuf>,
    },
    /// Shortest horizontal gallery between top cells ("gen:a,b")
    Gallery {
        #[arg(long)]
        from_cell: String,
        #[arg(long)]
        to_cell: String,
        #[arg(long)]
        level: i32,
    },
    /// Build a pencil of curves between two points
    Pencil {
        #[arg(long, allow_hyphen_values = true)]
        from: String,
        #[arg(long, allow_hyphen_values = true)]
        to: String,
        /// Depth above the pair scale
        #[arg(long, default_value_t = 2)]
        extra: i32,
    },
    /// Pathwise Poincaré inequality and Semmes ratio over pairs
    Poincare {
        #[arg(long)]
        pairs: PathBuf,
        #[arg(long = "fn")]
        func: String,
        /// Pencil depth M (absolute generation)
        #[arg(long)]
        depth: i32,
    },
    /// Remainder table of the first-order chart expansion at a point
    Chart {
        #[arg(long = "fn")]
        func: String,
        #[arg(long, allow_hyphen_values = true)]
        point: String,
        #[arg(long)]
        radii: String,
    },
    /// Ball-mass ratios mu(B)/r^Q
    Ahlfors {
        #[arg(long, default_value = "1/2,1/4,1/8,1/16")]
        radii: String,
        #[arg(long, default_value_t = 4)]
        k: i32,
    },
    /// Three-family cover at scale m^-k over the configured window
    Nagata {
        #[arg(long)]
        k: i32,
    },
    /// David-Semmes covering counts
    Regular {
        #[arg(long, default_value = "1/2,1/4,1/8,1/16")]
        radii: String,
        #[arg(long, default_value_t = 4)]
        k: i32,
        #[arg(long, default_value_t = 2.0)]
        c: f64,
    },
    /// Lipschitz-light component diameters
    Light {
        #[arg(long, default_value = "1/8,1/16")]
        radii: String,
        #[arg(long, default_value_t = 1)]
        j: i32,
        #[arg(long, default_value_t = 3)]
        k: i32,
    },
    /// Run the acceptance suites (all, or a comma-separated subset)
    Report {
        #[arg(long)]
        only: Option<String>,
    },
}

struct Ctx {
    cfg: Config,
    params: SystemParams,
    out: PathBuf,
}

impl Ctx {
    fn write(&self, name: &str, t: &Table) -> Result<()> {
        std::fs::create_dir_all(&self.out)?;
        let path = self.out.join(format!("{name}.csv"));
        t.write(&path)?;
        println!("wrote {}", path.display());
        Ok(())
    }

    fn write_svg(&self, name: &str, body: &str) -> Result<()> {
        std::fs::create_dir_all(&self.out)?;
        let path = self.out.join(format!("{name}.svg"));
        std::fs::write(&path, body)?;
        println!("wrote {}", path.display());
        Ok(())
    }

    fn centers(&self) -> Vec<ExactPoint> {
        let w = &self.params.window;
        let mut r = ChaCha8Rng::seed_from_u64(self.cfg.seed);
        (0..self.cfg.centers)
            .map(|_| {
                ExactPoint::new(
                    w.lo.iter()
                        .zip(&w.hi)
                        .map(|(a, b)| a + (b - a) * q(r.gen_range(1..1000), 1000))
                        .collect(),
                )
            })
            .collect()
    }
}

fn parse_cell(s: &str) -> Result<CellId> {
    let (g, a) = s.split_once(':').ok_or_else(|| anyhow!("cell {s:?}: expected gen:a,b"))?;
    let anchor = a.split(',').map(|t| t.trim().parse::<i64>()).collect::<Result<Vec<_>, _>>()?;
    Ok(CellId::top(g.trim().parse()?, anchor))
}

fn point(s: &str) -> Result<ExactPoint> {
    Ok(parse_point(s)?)
}

fn test_fn(name: &str, params: &SystemParams) -> Result<TestFn> {
    Ok(match name {
        "x" => TestFn::Linear(Q::from_integer(1), Q::from_integer(0)),
        "x2" => TestFn::HalfSquare,
        "sin" => TestFn::Sin,
        "abs" => TestFn::Abs(q(1, 2)),
        "xbump" => TestFn::XBump(q(1, 2), q(1, 4)),
        "const" => TestFn::Const(q(3, 2)),
        "bump" => {
            let z0 = ExactPoint::xy(q(-3, 7), q(1, 11));
            TestFn::DistBump(Box::new(DistField::new(params, &z0, 4, &q(3, 1))?), q(3, 1))
        }
        _ => bail!("unknown function {name:?} (x, x2, sin, abs, xbump, const, bump)"),
    })
}

fn read_pairs(path: &Path) -> Result<Vec<(ExactPoint, ExactPoint)>> {
    let mut rd = csv::Reader::from_path(path).with_context(|| path.display().to_string())?;
    let mut out = Vec::new();
    for rec in rd.records() {
        let rec = rec?;
        let (a, b) = (rec.get(0).unwrap_or(""), rec.get(1).unwrap_or(""));
        out.push((point(a)?, point(b)?));
    }
    Ok(out)
}

fn fmt_pt(p: &ExactPoint) -> String {
    p.coords.iter().map(|c| c.to_string()).collect::<Vec<_>>().join(",")
}

fn run(cli: Cli) -> Result<bool> {
    let cfg = match &cli.config {
        Some(p) => Config::load(p)?,
        None => Config::default(),
    };
    let params = cfg.params()?;
    let out = cli.out.clone().unwrap_or_else(|| PathBuf::from(&cfg.out_dir));
    let ctx = Ctx { cfg, params, out };
    let p = &ctx.params;
    match cli.cmd {
        Cmd::Build => {
            let mut t = Table::new(&["gen", "top_cells", "vertices", "generators"]);
            for g in p.gen_range.0..=p.gen_range.1 {
                let tops = cells_in_box(p, &p.window, g, p.n)?.len();
                let verts = cells_in_box(p, &p.window, g, 0)?.len();
                let gens = gluing::generators_at(p, g, &p.window)?.len();
                println!("gen {g}: {tops} top cells, {verts} vertices, {gens} generators");
                t.push([g.to_string(), tops.to_string(), verts.to_string(), gens.to_string()]);
            }
            ctx.write("build", &t)?;
            if p.n == 2 {
                ctx.write_svg("complex", &render_complex(p, p.gen_range.1)?)?;
            }
            Ok(true)
        }
        Cmd::Axioms => {
            let rep = axioms::check_axioms(p, &p.window, p.gen_range, ctx.cfg.budget)?;
            print!("{rep}");
            let mut t = Table::new(&["axiom", "pass", "measured", "witness"]);
            for e in &rep.entries {
                t.push([e.name.to_string(), e.pass.to_string(), e.measured.clone(), e.witness.clone().unwrap_or_default()]);
            }
            ctx.write("axioms", &t)?;
            Ok(rep.failing().is_empty())
        }
        Cmd::Dist { level, from, to, bracket, batch } => {
            let pairs = match (&batch, &from, &to) {
                (Some(path), _, _) => read_pairs(path)?,
                (None, Some(a), Some(b)) => vec![(point(a)?, point(b)?)],
                _ => bail!("give --from and --to, or --batch"),
            };
            let mut t = Table::new(&["p", "q", "level", "d", "lo", "hi", "witness_length", "witness_cells"]);
            let levels: Vec<i32> = (0..=level).collect();
            if (bracket || batch.is_some()) && matches!(p.family, Family::Std2D { l } if l < 5) {
                eprintln!("warning: for small L the lower end of the bracket can exceed the limit distance");
            }
            for (a, b) in &pairs {
                let (d, chain) = metric::chain_witness(p, a, b, level)?;
                let (lo, hi) = if bracket || batch.is_some() {
                    let br = metric::dinf_bracket(p, a, b, &levels)?;
                    (br.lo.to_string(), br.hi.to_string())
                } else {
                    (String::new(), String::new())
                };
                println!("d_{level}({}, {}) = {d}  witness {} cells{}", fmt_pt(a), fmt_pt(b), chain.cells.len(), if lo.is_empty() { String::new() } else { format!("  bracket [{lo}, {hi}]") });
                t.push([fmt_pt(a), fmt_pt(b), level.to_string(), d.to_string(), lo, hi, chain.length(p).to_string(), chain.cells.len().to_string()]);
            }
            ctx.write("dist", &t)?;
            Ok(true)
        }
        Cmd::Gallery { from_cell, to_cell, level } => {
            let (a, b) = (parse_cell(&from_cell)?, parse_cell(&to_cell)?);
            let gal = galleries::gallery_join(p, &a, &b, level, ctx.cfg.budget)?;
            let mut t = Table::new(&["step", "gen", "anchor"]);
            for (i, c) in gal.cells.iter().enumerate() {
                t.push([i.to_string(), c.gen.to_string(), format!("{:?}", c.anchor)]);
            }
            println!("gallery of {} cells, valid {}", gal.comb_length(), gal.validate(p)?);
            ctx.write("gallery", &t)?;
            if p.n == 2 {
                let mut fig = Figure::new(p, 600.0, 600.0);
                fig.grid(level).gluings((p.gen_range.0, level))?.cells(&gal.cells, "#2a9d8f");
                ctx.write_svg("gallery", &fig.finish())?;
            }
            Ok(true)
        }
        Cmd::Pencil { from, to, extra } => {
            let (a, b) = (point(&from)?, point(&to)?);
            let samples = ctx.cfg.samples;
            let row = analysis::pencil_row(p, &a, &b, extra, samples, ctx.cfg.budget, 3, 2)?;
            let (j0, _) = analysis::pair_scale(p, &a, &b, 3)?;
            let fam = analysis::build_pencil(p, &a, &b, j0, j0 + extra, samples, ctx.cfg.budget)?;
            let mut t = Table::new(&["j0", "depth", "curves", "dist", "t_total", "lip", "weights_exact", "continuous", "endpoints", "riesz"]);
            t.push([
                row.j0.to_string(),
                row.depth.to_string(),
                fam.curves.len().to_string(),
                row.dist.to_string(),
                row.t_total.to_string(),
                row.lip.to_string(),
                row.weights_exact.to_string(),
                row.continuous.to_string(),
                row.endpoints.to_string(),
                format!("{:.4}", row.riesz),
            ]);
            println!("{} curves, lip {}, T {}, Riesz constant {:.4}", fam.curves.len(), row.lip, row.t_total, row.riesz);
            ctx.write("pencil", &t)?;
            if p.n == 2 {
                let mut fig = Figure::new(p, 600.0, 600.0);
                fig.grid(j0);
                let step = (fam.curves.len() / 16).max(1);
                for c in fam.curves.iter().step_by(step) {
                    let pts: Vec<(f64, f64)> = c.breakpoints().iter().map(|(_, z)| (qf(&z.coords[0]), qf(&z.coords[1]))).collect();
                    fig.polyline(&pts, "#264653", 0.6);
                }
                ctx.write_svg("pencil", &fig.finish())?;
            }
            Ok(row.weights_exact && row.continuous && row.endpoints)
        }
        Cmd::Poincare { pairs, func, depth } => {
            let f = test_fn(&func, p)?;
            if !f.x_only() {
                bail!("the Poincaré suite takes functions of x only");
            }
            let mut t = Table::new(&["p", "q", "function", "curves", "pathwise_ok", "ratio"]);
            let mut ok = true;
            let mut worst = 0f64;
            for (a, b) in read_pairs(&pairs)? {
                let (j0, _) = analysis::pair_scale(p, &a, &b, 4)?;
                if depth <= j0 {
                    bail!("depth {depth} must exceed the pair scale {j0} for {} {}", fmt_pt(&a), fmt_pt(&b));
                }
                for row in analysis::poincare_check(p, std::slice::from_ref(&f), &a, &b, depth - j0, ctx.cfg.samples, ctx.cfg.budget, 4)? {
                    ok &= row.pathwise_ok == row.curves;
                    worst = worst.max(row.ratio);
                    t.push([fmt_pt(&a), fmt_pt(&b), row.function, row.curves.to_string(), row.pathwise_ok.to_string(), format!("{:.5}", row.ratio)]);
                }
            }
            println!("max Semmes ratio {worst:.5}; pathwise {}", if ok { "holds on every curve" } else { "FAILS" });
            ctx.write("poincare", &t)?;
            Ok(ok)
        }
        Cmd::Chart { func, point: pt, radii } => {
            let f = test_fn(&func, p)?;
            let a = point(&pt)?;
            let opts = ChartOpts { eps0: ctx.cfg.eps0, ..ChartOpts::default() };
            let rep = analysis::chart_check(p, &f, &a, &parse_list(&radii)?, &opts)?;
            let mut t = Table::new(&["r", "samples", "remainder"]);
            for r in &rep.rows {
                t.push([r.r.to_string(), r.samples.to_string(), format!("{:.6e}", r.remainder)]);
            }
            println!(
                "derivative {:.6}, oscillation {:.4}, approx. continuity {}, pass {}",
                rep.derivative, rep.oscillation, rep.approx_continuous, rep.pass
            );
            ctx.write("chart", &t)?;
            Ok(true)
        }
        Cmd::Ahlfors { radii, k } => {
            let rep = verify::ahlfors_scan(p, &ctx.centers(), &parse_list(&radii)?, k)?;
            let mut t = Table::new(&["center", "r", "inner", "outer"]);
            for r in &rep.rows {
                t.push([fmt_pt(&r.center), r.r.to_string(), format!("{:.6}", r.inner), format!("{:.6}", r.outer)]);
            }
            let (lo, hi) = rep.ratio_range();
            println!("Q = {:.4}, mu(B)/r^Q in [{lo:.4}, {hi:.4}], band {:.3}", rep.q, rep.band());
            ctx.write("ahlfors", &t)?;
            Ok(true)
        }
        Cmd::Nagata { k } => {
            let cf = verify::nagata_cover(p, k, &p.window, ctx.cfg.samples.max(1), ctx.cfg.seed)?;
            let mut t = Table::new(&["family", "sets", "pairs", "unresolved", "diam_lo", "diam_hi", "certified"]);
            for (name, (fam, chk)) in ["sigma", "e", "v"].iter().zip(cf.families.iter().zip(&cf.checks)) {
                t.push([name.to_string(), fam.len().to_string(), chk.pairs.to_string(), chk.unresolved.len().to_string(), chk.diam_lo.to_string(), chk.diam_hi.to_string(), chk.diam_certified.to_string()]);
            }
            println!("covers {} ({} of {} uncovered), bounded {} (<= {}), separated {} (>= {})", cf.covers(), cf.uncovered.len(), cf.samples, cf.bounded(), cf.bound, cf.separated(), cf.sep);
            ctx.write("nagata", &t)?;
            Ok(cf.covers() && cf.bounded() && cf.separated())
        }
        Cmd::Regular { radii, k, c } => {
            let rep = verify::david_semmes_check(p, &ctx.centers(), &parse_list(&radii)?, k, c)?;
            let mut t = Table::new(&["center", "r", "balls", "cells"]);
            for r in &rep.rows {
                t.push([fmt_pt(&r.center), r.r.to_string(), r.count.to_string(), r.cells.to_string()]);
            }
            for (r, n) in rep.per_radius() {
                println!("r = {r}: at most {n} balls of radius {c} r");
            }
            ctx.write("regular", &t)?;
            Ok(true)
        }
        Cmd::Light { radii, j, k } => {
            let rows = verify::lipschitz_light_check(p, j, k, &ctx.centers(), &parse_list(&radii)?)?;
            let mut t = Table::new(&["center", "r", "pieces", "components", "ratio"]);
            let mut worst = 0f64;
            for r in &rows {
                worst = worst.max(r.ratio);
                t.push([fmt_pt(&r.center), r.r.to_string(), r.pieces.to_string(), r.components.to_string(), format!("{:.4}", r.ratio)]);
            }
            println!("largest component diameter ratio {worst:.4}");
            ctx.write("light", &t)?;
            Ok(true)
        }
        Cmd::Report { only } => {
            let want: Option<Vec<String>> = only.map(|s| s.split(',').map(|x| x.trim().to_string()).collect());
            let pick = |name: &str| want.as_ref().is_none_or(|w| w.iter().any(|x| x == name));
            let mut rep = Report { header: vec![format!("gluelab {} acceptance report", env!("CARGO_PKG_VERSION"))], suites: Vec::new() };
            for name in suites::NAMES {
                if !pick(name) {
                    continue;
                }
                let s = suites::run(name)?;
                println!("[{}] {}", if s.pass { "PASS" } else { "FAIL" }, s.name);
                for l in &s.lines {
                    println!("    {l}");
                }
                rep.suites.push(s);
            }
            rep.write_dir(&ctx.out)?;
            println!("wrote {}", ctx.out.join("report.txt").display());
            Ok(rep.passed())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
